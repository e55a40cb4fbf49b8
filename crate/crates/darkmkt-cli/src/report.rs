//! Plain-text summary: steady state, stability, intermediates, prices and
//! timing. For the bundled two-asset market the reference tables are
//! printed alongside, together with the values the formulas give at the
//! reference masses.

use std::fmt::Write;

use darkmkt::equilibrium::{solve_steady_state, DEFAULT_TOL};
use darkmkt::model::{reduced_to_full, ModelParams, ReducedState, ValidatedParams};
use darkmkt::pricing::{self, DAYS_PER_YEAR};
use darkmkt::stability;

use crate::error::CliResult;
use crate::output::fmt_num;

struct Reference {
    masses: [f64; 4],
    h_owners: [f64; 2],
    l_non_owners: f64,
    /// (Ψ, Γ, Λ, Ω) per asset
    table: [[f64; 4]; 2],
    prices: [f64; 2],
    days: [f64; 2],
}

const REFERENCE: Reference = Reference {
    masses: [0.0991, 0.0720, 0.0011, 0.0116],
    h_owners: [0.2989, 0.5883],
    l_non_owners: 0.0289,
    table: [[5.6366, 5.7159, 0.9861, 0.0011], [0.3026, 0.3075, 0.9837, 0.0677]],
    prices: [50.0031, 69.6551],
    days: [2.0, 1.7],
};

fn row(out: &mut String, label: &str, cells: &[String]) {
    let _ = write!(out, "  {label:<18}");
    for c in cells {
        let _ = write!(out, "{c:>18}");
    }
    out.push('\n');
}

fn cells(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| fmt_num(*x)).collect()
}

pub fn build(p: &ValidatedParams) -> CliResult<String> {
    let k = p.k();
    let reference = (p.params() == &ModelParams::two_asset_reference()).then_some(&REFERENCE);
    let s = solve_steady_state(p, None, DEFAULT_TOL)?;
    let full = reduced_to_full(&s.x, p)?;
    let mut out = String::new();

    let head: &[&str] = if reference.is_some() { &["computed", "reference"] } else { &["computed"] };
    let head: Vec<String> = head.iter().map(|s| s.to_string()).collect();

    let _ = writeln!(out, "Steady state ({:?}, {} iterations, residual {:.2e})", s.method, s.iterations, s.residual);
    row(&mut out, "", &head);
    for i in 0..k {
        let mut c = vec![s.x.buyer(i)];
        c.extend(reference.map(|r| r.masses[i]));
        row(&mut out, &format!("mu(h{},n)", i + 1), &cells(&c));
    }
    for i in 0..k {
        let mut c = vec![s.x.seller(i)];
        c.extend(reference.map(|r| r.masses[k + i]));
        row(&mut out, &format!("mu(l{},o)", i + 1), &cells(&c));
    }
    for i in 0..k {
        let mut c = vec![full.mu_ho[i]];
        c.extend(reference.map(|r| r.h_owners[i]));
        row(&mut out, &format!("mu(h{},o)", i + 1), &cells(&c));
    }
    let mut c = vec![full.mu_ln];
    c.extend(reference.map(|r| r.l_non_owners));
    row(&mut out, "mu(l,n)", &cells(&c));
    if let Some(r) = reference {
        let ln = 1.0 - p.m_total() - r.masses[..k].iter().sum::<f64>();
        let _ = writeln!(out, "  note: the reference masses imply mu(l,n) = {}", fmt_num(ln));
    }

    let cert = stability::certify(s.clone(), p, 0.5)?;
    let _ = writeln!(out, "\nStability: {:?}", cert.verdict);
    let _ = writeln!(out, "  leading minors      {}", cells(&cert.minors.lu).join("  "));
    if let Some(m) = cert.dominance_margin {
        let _ = writeln!(out, "  dominance margin    {}", fmt_num(m));
    }
    let _ = writeln!(out, "  max real part       {}", fmt_num(cert.max_real_part));
    for n in &cert.notes {
        let _ = writeln!(out, "  note: {n}");
    }

    let mut sets: Vec<(&str, ReducedState)> = vec![("solved", s.x.clone())];
    if let Some(r) = reference {
        sets.push(("reference masses", ReducedState::new(r.masses.to_vec())));
    }
    for (label, mu) in &sets {
        let rep = match pricing::equilibrium_prices(p, mu, None, DAYS_PER_YEAR) {
            Ok(rep) => rep,
            Err(e) => {
                let _ = writeln!(out, "\nPricing at {label} masses unavailable: {e}");
                continue;
            }
        };
        let _ = writeln!(out, "\nPricing at {label}{}", if *label == "solved" { " masses" } else { "" });
        let mut h = ["Psi", "Gamma", "Lambda", "Omega"].iter().map(|s| s.to_string()).collect::<Vec<_>>();
        row(&mut out, "", &h);
        for (i, a) in rep.intermediates.assets.iter().enumerate() {
            row(&mut out, &format!("asset {}", i + 1), &cells(&[a.psi, a.gamma, a.lambda, a.omega]));
            if let Some(r) = reference {
                row(&mut out, "  reference", &cells(&r.table[i]));
            }
        }
        let _ = writeln!(out, "  Theta = w           {}", fmt_num(rep.intermediates.theta));
        h = ["closed form", "bargain", "days to sell"].iter().map(|s| s.to_string()).collect();
        if reference.is_some() {
            h.extend(["ref price", "ref days"].iter().map(|s| s.to_string()));
        }
        row(&mut out, "", &h);
        for (i, a) in rep.assets.iter().enumerate() {
            let mut c = cells(&[a.price, a.price_bargain]);
            c.push(a.timing_days.map(fmt_num).unwrap_or_else(|| "never".into()));
            if let Some(r) = reference {
                c.extend(cells(&[r.prices[i], r.days[i]]));
            }
            row(&mut out, &format!("asset {}", i + 1), &c);
        }
        for w in &rep.warnings {
            let _ = writeln!(out, "  warning: {w}");
        }
    }
    Ok(out)
}
