//! Steady-state value functions, reservation values and prices.
//!
//! Notation per asset i at frozen masses `μ(hi,n)`, `μ(li,o)`:
//! `a = λμ(li,o)` (a buyer's meeting rate), `d = λμ(hi,n)` (a seller's),
//!
//! ```text
//! Ψ = (1 + (γ+r)/(q d)) (1 + γ̃_d/((1−q) a)) − 1
//! Γ = (1 + (γ+r)/(q d)) (1 + (γ̃_d+r)/((1−q) a)) − 1
//! Λ = Ψ/Γ,  Ω = δ_d/(q d Γ),  Θ = Σ γ̃_u Ω / (r + Σ γ̃_u (1−Λ))
//! ```
//!
//! Values: `x = V(hi,n)`, `y = V(li,o)`, `z = V(hi,o)`, `w = V(l,n)`. The
//! Nash price is `P = (1−q)(y − w) + q(z − x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::{ReducedState, ValidatedParams};

/// Meeting rates below this make the closed forms divide by zero.
pub const SINGULAR_RATE: f64 = 1e-14;
/// Relative gap above which the closed-form display and the bargain price
/// are reported as disagreeing.
pub const PRICE_AGREEMENT_TOL: f64 = 1e-9;
pub const DAYS_PER_YEAR: f64 = 250.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssetIntermediates {
    pub a: f64,
    pub d: f64,
    /// γ̃_d + r + a
    pub b: f64,
    /// γ_u + r + d
    pub c: f64,
    /// γ_u + r
    pub r_u: f64,
    /// γ_d + r, the discount rate of a high-type owner's value
    pub r_z: f64,
    pub psi: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PricingIntermediates {
    pub assets: Vec<AssetIntermediates>,
    /// Θ, equal to w = V(l,n).
    pub theta: f64,
}

pub fn intermediates(p: &ValidatedParams, mu: &ReducedState) -> Result<PricingIntermediates> {
    let k = p.k();
    let (q, r) = (p.q, p.r);
    let mut assets = Vec::with_capacity(k);
    for i in 0..k {
        let a = p.lambda[i] * mu.seller(i);
        let d = p.lambda[i] * mu.buyer(i);
        if !(a >= SINGULAR_RATE && d >= SINGULAR_RATE) {
            return Err(Error::SingularMarket(format!(
                "asset {}: meeting rates a = {a:e}, d = {d:e}",
                i + 1
            )));
        }
        let g = p.gamma()[i];
        let td = p.gamma_tilde_d[i];
        let f = 1.0 + (g + r) / (q * d);
        let psi = f * (1.0 + td / ((1.0 - q) * a)) - 1.0;
        let gamma = f * (1.0 + (td + r) / ((1.0 - q) * a)) - 1.0;
        assets.push(AssetIntermediates {
            a,
            d,
            b: td + r + a,
            c: p.gamma_u[i] + r + d,
            r_u: p.gamma_u[i] + r,
            r_z: p.gamma_d[i] + r,
            psi,
            gamma,
            lambda: psi / gamma,
            omega: p.delta_d[i] / (q * d * gamma),
        });
    }
    let num: f64 = (0..k).map(|i| p.gamma_tilde_u[i] * assets[i].omega).sum();
    let den: f64 = r + (0..k)
        .map(|i| p.gamma_tilde_u[i] * (1.0 - assets[i].lambda))
        .sum::<f64>();
    Ok(PricingIntermediates {
        assets,
        theta: num / den,
    })
}

impl PricingIntermediates {
    /// Both sides of `Γ − Ψ = (1 + (γ+r)/(q d)) · r/((1−q) a)` for asset `i`.
    pub fn gamma_psi_gap(&self, p: &ValidatedParams, i: usize) -> (f64, f64) {
        let s = &self.assets[i];
        let (q, r) = (p.q, p.r);
        let rhs = (1.0 + (p.gamma()[i] + r) / (q * s.d)) * r / ((1.0 - q) * s.a);
        (s.gamma - s.psi, rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFunctions {
    /// V(hi,n)
    pub x: Vec<f64>,
    /// V(li,o)
    pub y: Vec<f64>,
    /// V(hi,o)
    pub z: Vec<f64>,
    /// V(l,n)
    pub w: f64,
}

impl ValueFunctions {
    pub fn reservation_values(&self) -> (Vec<f64>, Vec<f64>) {
        let dl = self.y.iter().map(|y| y - self.w).collect();
        let dh = self.z.iter().zip(&self.x).map(|(z, x)| z - x).collect();
        (dl, dh)
    }

    pub fn bargain_prices(&self, q: f64) -> Vec<f64> {
        let (dl, dh) = self.reservation_values();
        dl.iter().zip(&dh).map(|(l, h)| (1.0 - q) * l + q * h).collect()
    }

    fn max_abs(&self) -> f64 {
        self.x
            .iter()
            .chain(&self.y)
            .chain(&self.z)
            .chain(std::iter::once(&self.w))
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Value functions from the closed forms.
pub fn value_functions_closed(p: &ValidatedParams, it: &PricingIntermediates) -> ValueFunctions {
    let k = p.k();
    let (q, r) = (p.q, p.r);
    let w = it.theta;
    let mut vf = ValueFunctions {
        x: vec![0.0; k],
        y: vec![0.0; k],
        z: vec![0.0; k],
        w,
    };
    for i in 0..k {
        let s = &it.assets[i];
        let td = p.gamma_tilde_d[i];
        let ea = (1.0 - q) * s.a;
        vf.x[i] = s.lambda * w + s.omega;
        vf.y[i] = s.r_z / (ea * s.gamma) * w + p.delta_h[i] / r
            - s.omega * s.r_z * (1.0 + (td + r) / ea) / r;
        vf.z[i] = (p.gamma_d[i] * vf.y[i] + p.delta_h[i]) / s.r_z;
    }
    vf
}

/// Steady-state HJB system with the price eliminated through the Nash rule.
/// Unknowns are ordered `(x_1..x_K, y_1..y_K, z_1..z_K, w)`.
pub fn hjb_system(p: &ValidatedParams, mu: &ReducedState) -> (Mat, Vec<f64>) {
    let k = p.k();
    let n = 3 * k + 1;
    let (q, r) = (p.q, p.r);
    let (ix, iy, iz, iw) = (|i| i, |i| k + i, |i| 2 * k + i, 3 * k);
    let mut m = Mat::zeros(n);
    let mut rhs = vec![0.0; n];
    // V(l,n): (r + Σγ̃_u) w − Σ γ̃_u x_i = 0
    m[(0, iw)] = r + p.gamma_tilde_u.iter().sum::<f64>();
    for i in 0..k {
        m[(0, ix(i))] = -p.gamma_tilde_u[i];
    }
    for i in 0..k {
        let a = p.lambda[i] * mu.seller(i);
        let d = p.lambda[i] * mu.buyer(i);
        let td = p.gamma_tilde_d[i];
        // V(hi,n)
        let row = 1 + i;
        m[(row, ix(i))] = td + r + a - q * a;
        m[(row, iy(i))] = (1.0 - q) * a;
        m[(row, iz(i))] = -(1.0 - q) * a;
        m[(row, iw)] = -(td + (1.0 - q) * a);
        // V(hi,o)
        let row = 1 + k + i;
        m[(row, iz(i))] = p.gamma_d[i] + r;
        m[(row, iy(i))] = -p.gamma_d[i];
        rhs[row] = p.delta_h[i];
        // V(li,o)
        let row = 1 + 2 * k + i;
        m[(row, ix(i))] = q * d;
        m[(row, iy(i))] = p.gamma_u[i] + r + d - (1.0 - q) * d;
        m[(row, iz(i))] = -(p.gamma_u[i] + q * d);
        m[(row, iw)] = -q * d;
        rhs[row] = p.delta_h[i] - p.delta_d[i];
    }
    (m, rhs)
}

/// Direct solve of [`hjb_system`].
pub fn hjb_linear_solve(p: &ValidatedParams, mu: &ReducedState) -> Result<ValueFunctions> {
    let k = p.k();
    let (m, rhs) = hjb_system(p, mu);
    let v = linalg::solve(&m, &rhs)?;
    let vf = ValueFunctions {
        x: v[..k].to_vec(),
        y: v[k..2 * k].to_vec(),
        z: v[2 * k..3 * k].to_vec(),
        w: v[3 * k],
    };
    let res = hjb_residual(p, mu, &vf);
    let scale = 1.0 + vf.max_abs();
    if res > 1e-10 * scale {
        return Err(Error::Consistency(format!("HJB residual {res:e} after solve")));
    }
    Ok(vf)
}

/// Max-norm residual of the HJB equations at `vf`.
pub fn hjb_residual(p: &ValidatedParams, mu: &ReducedState, vf: &ValueFunctions) -> f64 {
    let (m, rhs) = hjb_system(p, mu);
    let mut v = vf.x.clone();
    v.extend_from_slice(&vf.y);
    v.extend_from_slice(&vf.z);
    v.push(vf.w);
    m.mul_vec(&v)
        .iter()
        .zip(&rhs)
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
}

/// Reservation values `(Δl, Δh)` from the closed forms:
///
/// ```text
/// Δl = ((γ_d+r)/((1−q)aΓ) − 1) Θ + δ_h/r − Ω (γ_d+r)(1 + (γ̃_d+r)/((1−q)a)) / r
/// Δh = (γ_d/((1−q)aΓ) − Λ) Θ + δ_h/r − Ω γ_d (1 + (γ̃_d+r)/((1−q)a)) / r − Ω
/// ```
pub fn reservation_values_closed(p: &ValidatedParams, it: &PricingIntermediates) -> (Vec<f64>, Vec<f64>) {
    let (q, r) = (p.q, p.r);
    let th = it.theta;
    let mut dl = Vec::new();
    let mut dh = Vec::new();
    for (i, s) in it.assets.iter().enumerate() {
        let ea = (1.0 - q) * s.a;
        let tail = s.omega * (1.0 + (p.gamma_tilde_d[i] + r) / ea) / r;
        dl.push((s.r_z / (ea * s.gamma) - 1.0) * th + p.delta_h[i] / r - tail * s.r_z);
        dh.push(
            (p.gamma_d[i] / (ea * s.gamma) - s.lambda) * th + p.delta_h[i] / r
                - tail * p.gamma_d[i]
                - s.omega,
        );
    }
    (dl, dh)
}

/// Direct reservation values, checked against the closed forms.
pub fn reservation_values(
    p: &ValidatedParams,
    it: &PricingIntermediates,
    vf: &ValueFunctions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (dl, dh) = vf.reservation_values();
    let (cl, ch) = reservation_values_closed(p, it);
    for i in 0..dl.len() {
        for (u, v, name) in [(dl[i], cl[i], "Δl"), (dh[i], ch[i], "Δh")] {
            if (u - v).abs() > 1e-9 * u.abs().max(v.abs()).max(1.0) {
                return Err(Error::Consistency(format!(
                    "{name} of asset {}: direct {u} vs closed form {v}",
                    i + 1
                )));
            }
        }
    }
    Ok((dl, dh))
}

/// The closed-form price display, evaluated exactly as written:
///
/// `P = (γ_d/((1−q)aΓ) − Λ) Θ + δ_h/r − qΩ(1 + (1 − r + γ_d/q)(1 + γ̃_d/((1−q)a)))`
pub fn display_prices(p: &ValidatedParams, it: &PricingIntermediates) -> Vec<f64> {
    let (q, r) = (p.q, p.r);
    it.assets
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let ea = (1.0 - q) * s.a;
            let upsilon = q * s.omega
                * (1.0 + (1.0 - r + p.gamma_d[i] / q) * (1.0 + p.gamma_tilde_d[i] / ea));
            (p.gamma_d[i] / (ea * s.gamma) - s.lambda) * it.theta + p.delta_h[i] / r - upsilon
        })
        .collect()
}

/// Per-asset pieces of the display price written as rational functions of
/// λ_i, which stay finite as λ_i → 0 (only `μ(li,o) > 0` is required).
#[derive(Debug, Clone, Copy)]
pub struct LambdaForm {
    /// Ω
    pub omega: f64,
    /// 1 − Λ
    pub one_minus_lambda: f64,
    /// γ_d/((1−q)aΓ)
    pub g_coef: f64,
    /// qΩ(1 + (1 − r + γ_d/q)(1 + γ̃_d/((1−q)a)))
    pub upsilon: f64,
}

/// Coefficients of the λ-rational forms for one asset at frozen masses:
/// `Ω = δ_d λ/(Aλ + B)` and `1 − Λ = (b1 λ + b0)/(Aλ + B)`.
#[derive(Debug, Clone, Copy)]
pub struct LambdaCoefficients {
    pub a: f64,
    pub b: f64,
    pub b1: f64,
    pub b0: f64,
}

pub fn lambda_coefficients(p: &ValidatedParams, mu: &ReducedState, i: usize) -> Result<LambdaCoefficients> {
    let (q, r) = (p.q, p.r);
    let (hb, ls) = (mu.buyer(i), mu.seller(i));
    if !(ls > 0.0) || hb < 0.0 {
        return Err(Error::SingularMarket(format!(
            "asset {}: frozen masses μ(h,n) = {hb}, μ(l,o) = {ls}",
            i + 1
        )));
    }
    let gr = p.gamma()[i] + r;
    let tdr = p.gamma_tilde_d[i] + r;
    let e = (1.0 - q) * ls;
    Ok(LambdaCoefficients {
        a: gr + tdr * q * hb / e,
        b: gr * tdr / e,
        b1: r * q * hb / e,
        b0: r * gr / e,
    })
}

pub fn lambda_form(p: &ValidatedParams, mu: &ReducedState, i: usize) -> Result<LambdaForm> {
    let c = lambda_coefficients(p, mu, i)?;
    let (q, r) = (p.q, p.r);
    let (hb, ls) = (mu.buyer(i), mu.seller(i));
    let l = p.lambda[i];
    let den = c.a * l + c.b;
    let dd = p.delta_d[i];
    Ok(LambdaForm {
        omega: dd * l / den,
        one_minus_lambda: (c.b1 * l + c.b0) / den,
        g_coef: p.gamma_d[i] * q * l * hb / ((1.0 - q) * ls * den),
        upsilon: q * dd
            * (l + (1.0 - r + p.gamma_d[i] / q) * (l + p.gamma_tilde_d[i] / ((1.0 - q) * ls)))
            / den,
    })
}

impl LambdaForm {
    /// Coefficient of Θ in the display price.
    pub fn theta_coef(&self) -> f64 {
        self.g_coef - (1.0 - self.one_minus_lambda)
    }
}

/// Θ from per-asset pieces and a weight vector standing in for γ̃_u.
pub fn theta_from(forms: &[LambdaForm], weights: &[f64], r: f64) -> f64 {
    let num: f64 = forms.iter().zip(weights).map(|(f, w)| w * f.omega).sum();
    let den: f64 = r + forms
        .iter()
        .zip(weights)
        .map(|(f, w)| w * f.one_minus_lambda)
        .sum::<f64>();
    num / den
}

/// Display prices at frozen masses through [`lambda_form`]; agrees with
/// [`display_prices`] wherever both are defined.
pub fn display_prices_frozen(p: &ValidatedParams, mu: &ReducedState) -> Result<Vec<f64>> {
    let forms = (0..p.k())
        .map(|i| lambda_form(p, mu, i))
        .collect::<Result<Vec<_>>>()?;
    let theta = theta_from(&forms, &p.gamma_tilde_u, p.r);
    Ok(forms
        .iter()
        .enumerate()
        .map(|(i, f)| f.theta_coef() * theta + p.delta_h[i] / p.r - f.upsilon)
        .collect())
}

/// Bargain prices at frozen masses via the HJB solve; defined at λ = 0 too.
pub fn bargain_prices_frozen(p: &ValidatedParams, mu: &ReducedState) -> Result<Vec<f64>> {
    Ok(hjb_linear_solve(p, mu)?.bargain_prices(p.q))
}

/// Blended bargaining power from a raw power `q̂`, averaged over assets.
pub fn effective_bargaining_power(q_hat: f64, p: &ValidatedParams, mu: &ReducedState) -> Result<f64> {
    if !(0.0..=1.0).contains(&q_hat) {
        return Err(Error::Parameter(format!("q_hat {q_hat} outside [0,1]")));
    }
    let k = p.k();
    let total: f64 = (0..k)
        .map(|i| {
            let base = p.r + p.gamma()[i] + p.gamma_tilde()[i];
            let s = q_hat * (base + p.lambda[i] * mu.seller(i));
            let b = (1.0 - q_hat) * (base + p.lambda[i] * mu.buyer(i));
            s / (s + b)
        })
        .sum();
    Ok(total / k as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SellerTiming {
    /// Expected days to sell; `None` when no buyers are present.
    pub days: Vec<Option<f64>>,
    /// Asset sold first and its timing.
    pub first: Option<(usize, f64)>,
    /// Longest timing; `None` if any asset never sells.
    pub max: Option<(usize, f64)>,
}

pub fn seller_timing(p: &ValidatedParams, mu: &ReducedState, days_per_year: f64) -> SellerTiming {
    let days: Vec<Option<f64>> = (0..p.k())
        .map(|i| {
            let rate = p.lambda[i] * mu.buyer(i);
            (rate > 0.0).then(|| days_per_year / rate)
        })
        .collect();
    let finite = days.iter().enumerate().filter_map(|(i, d)| d.map(|d| (i + 1, d)));
    let first = finite.clone().min_by(|a, b| a.1.total_cmp(&b.1));
    let max = if days.iter().all(|d| d.is_some()) {
        finite.max_by(|a, b| a.1.total_cmp(&b.1))
    } else {
        None
    };
    SellerTiming { days, first, max }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssetPrice {
    pub delta_l: f64,
    pub delta_h: f64,
    /// Closed-form display price.
    pub price: f64,
    /// (1−q)Δl + qΔh
    pub price_bargain: f64,
    pub relative_gap: f64,
    pub timing_days: Option<f64>,
    /// Δl ≤ price ≤ Δh, recorded only when Δl ≤ Δh.
    pub price_within_reservation: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriceReport {
    pub masses: ReducedState,
    pub intermediates: PricingIntermediates,
    pub values_closed: ValueFunctions,
    pub values_hjb: ValueFunctions,
    pub assets: Vec<AssetPrice>,
    pub timing: SellerTiming,
    pub q_effective: Option<f64>,
    pub display_matches_bargain: bool,
    pub warnings: Vec<String>,
}

/// Full price report at the masses `mu`.
pub fn equilibrium_prices(
    p: &ValidatedParams,
    mu: &ReducedState,
    q_hat: Option<f64>,
    days_per_year: f64,
) -> Result<PriceReport> {
    let it = intermediates(p, mu)?;
    let closed = value_functions_closed(p, &it);
    let hjb = hjb_linear_solve(p, mu)?;
    let scale = 1.0 + hjb.max_abs();
    let res = hjb_residual(p, mu, &closed);
    if res > 1e-10 * scale {
        return Err(Error::Consistency(format!(
            "closed-form values leave HJB residual {res:e}"
        )));
    }
    let (dl, dh) = reservation_values(p, &it, &hjb)?;
    let display = display_prices(p, &it);
    let bargain = hjb.bargain_prices(p.q);
    let timing = seller_timing(p, mu, days_per_year);
    let mut warnings = Vec::new();
    let mut assets = Vec::new();
    for i in 0..p.k() {
        let gap = (display[i] - bargain[i]).abs() / bargain[i].abs().max(f64::MIN_POSITIVE);
        if gap > PRICE_AGREEMENT_TOL {
            warnings.push(format!(
                "asset {}: display price {:.12} differs from bargain price {:.12} (relative {gap:.3e})",
                i + 1,
                display[i],
                bargain[i]
            ));
        }
        assets.push(AssetPrice {
            delta_l: dl[i],
            delta_h: dh[i],
            price: display[i],
            price_bargain: bargain[i],
            relative_gap: gap,
            timing_days: timing.days[i],
            price_within_reservation: (dl[i] <= dh[i]).then(|| dl[i] <= display[i] && display[i] <= dh[i]),
        });
    }
    let q_effective = q_hat
        .map(|qh| effective_bargaining_power(qh, p, mu))
        .transpose()?;
    Ok(PriceReport {
        masses: mu.clone(),
        intermediates: it,
        values_closed: closed,
        values_hjb: hjb,
        display_matches_bargain: warnings.is_empty(),
        assets,
        timing,
        q_effective,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{solve_steady_state, DEFAULT_TOL};
    use crate::model::ModelParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference() -> ValidatedParams {
        ModelParams::two_asset_reference().validate().unwrap()
    }

    fn ref_masses() -> ReducedState {
        ReducedState::new(vec![0.0991, 0.0720, 0.0011, 0.0116])
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    fn random_case(rng: &mut ChaCha8Rng) -> (ValidatedParams, ReducedState) {
        let k = rng.gen_range(1..5);
        let p = ModelParams::sample(rng, k).validate().unwrap();
        let s = solve_steady_state(&p, None, DEFAULT_TOL).unwrap();
        (p, s.x)
    }

    #[test]
    fn intermediates_at_reference_masses() {
        let it = intermediates(&reference(), &ref_masses()).unwrap();
        let want = [
            (5.7159, 0.0011, 0.9861, 5.6366),
            (0.3075, 0.0677, 0.9837, 0.3026),
        ];
        for (s, (g, o, l, ps)) in it.assets.iter().zip(want) {
            assert!(rel(s.gamma, g) < 1e-3);
            assert!((s.omega - o).abs() < 1e-3);
            assert!((s.lambda - l).abs() < 1e-3);
            assert!(rel(s.psi, ps) < 1e-3);
        }
    }

    #[test]
    fn gamma_psi_gap_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let (p, x) = random_case(&mut rng);
            let it = intermediates(&p, &x).unwrap();
            for i in 0..p.k() {
                let (lhs, rhs) = it.gamma_psi_gap(&p, i);
                assert!(rel(lhs, rhs) < 1e-10, "{lhs} vs {rhs}");
                let s = &it.assets[i];
                assert!(s.gamma > s.psi && s.psi > 0.0);
                assert!(s.lambda > 0.0 && s.lambda < 1.0 && s.omega > 0.0);
            }
            assert!(it.theta > 0.0);
        }
    }

    #[test]
    fn closed_form_values_solve_hjb() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..200 {
            let (p, x) = random_case(&mut rng);
            let it = intermediates(&p, &x).unwrap();
            let closed = value_functions_closed(&p, &it);
            let direct = hjb_linear_solve(&p, &x).unwrap();
            let scale = 1.0 + direct.max_abs();
            assert!(hjb_residual(&p, &x, &closed) < 1e-10 * scale);
            for i in 0..p.k() {
                assert!(rel(closed.x[i], direct.x[i]) < 1e-9);
                assert!(rel(closed.y[i], direct.y[i]) < 1e-9);
                assert!(rel(closed.z[i], direct.z[i]) < 1e-9);
            }
            assert!(rel(closed.w, direct.w) < 1e-9);
            reservation_values(&p, &it, &direct).unwrap();
        }
    }

    #[test]
    fn no_holding_cost_gives_perpetuity() {
        let p = reference();
        // validation demands δ_d > 0, so the limit is taken on raw parameters
        let mut raw = p.params().clone();
        raw.delta_d = vec![1e-300, 1e-300];
        let p0 = crate::model::validate(raw).unwrap();
        let x = solve_steady_state(&p, None, DEFAULT_TOL).unwrap().x;
        let rep = equilibrium_prices(&p0, &x, None, DAYS_PER_YEAR).unwrap();
        for i in 0..2 {
            let perp = p.delta_h[i] / p.r;
            assert!(rel(rep.assets[i].price, perp) < 1e-14);
            assert!(rel(rep.assets[i].price_bargain, perp) < 1e-12);
            assert!(rel(rep.values_hjb.z[i], perp) < 1e-12);
        }
        assert!(rep.values_hjb.w.abs() < 1e-12 * p.delta_h[1] / p.r);
        assert!(rep.values_closed.w.abs() < 1e-250);
    }

    #[test]
    fn dividends_scale_values() {
        let p = reference();
        let x = solve_steady_state(&p, None, DEFAULT_TOL).unwrap().x;
        let kappa = 3.7;
        let pk = p
            .modified(|q| {
                q.delta_h.iter_mut().for_each(|v| *v *= kappa);
                q.delta_d.iter_mut().for_each(|v| *v *= kappa);
            })
            .unwrap();
        let a = hjb_linear_solve(&p, &x).unwrap();
        let b = hjb_linear_solve(&pk, &x).unwrap();
        for i in 0..2 {
            assert!(rel(kappa * a.y[i], b.y[i]) < 1e-12);
            assert!(rel(kappa * a.x[i], b.x[i]) < 1e-12);
        }
        let ra = equilibrium_prices(&p, &x, None, DAYS_PER_YEAR).unwrap();
        let rb = equilibrium_prices(&pk, &x, None, DAYS_PER_YEAR).unwrap();
        for i in 0..2 {
            assert!(rel(kappa * ra.assets[i].price, rb.assets[i].price) < 1e-12);
            assert!(rel(kappa * ra.assets[i].price_bargain, rb.assets[i].price_bargain) < 1e-12);
        }
    }

    #[test]
    fn frozen_form_matches_display() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..200 {
            let (p, x) = random_case(&mut rng);
            let it = intermediates(&p, &x).unwrap();
            let a = display_prices(&p, &it);
            let b = display_prices_frozen(&p, &x).unwrap();
            for i in 0..p.k() {
                assert!(rel(a[i], b[i]) < 1e-10);
            }
        }
    }

    #[test]
    fn bargain_price_between_reservation_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..100 {
            let (p, x) = random_case(&mut rng);
            let rep = equilibrium_prices(&p, &x, Some(0.5), DAYS_PER_YEAR).unwrap();
            for a in &rep.assets {
                let (lo, hi) = (a.delta_l.min(a.delta_h), a.delta_l.max(a.delta_h));
                assert!(a.price_bargain >= lo - 1e-9 && a.price_bargain <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn effective_power_edges() {
        let p = reference();
        let x = ref_masses();
        assert_eq!(effective_bargaining_power(0.0, &p, &x).unwrap(), 0.0);
        assert_eq!(effective_bargaining_power(1.0, &p, &x).unwrap(), 1.0);
        let sym = ReducedState::new(vec![0.01, 0.02, 0.01, 0.02]);
        assert!((effective_bargaining_power(0.3, &p, &sym).unwrap() - 0.3).abs() < 1e-15);
        let qe = effective_bargaining_power(0.5, &p, &x).unwrap();
        assert!(qe > 0.0 && qe < 1.0);
        assert!(effective_bargaining_power(1.5, &p, &x).is_err());
    }

    #[test]
    fn timing_halves_when_meeting_rate_doubles() {
        let p = reference();
        let x = ref_masses();
        let t = seller_timing(&p, &x, DAYS_PER_YEAR);
        let p2 = p.modified(|q| q.lambda.iter_mut().for_each(|l| *l *= 2.0)).unwrap();
        let t2 = seller_timing(&p2, &x, DAYS_PER_YEAR);
        for i in 0..2 {
            assert!(rel(t.days[i].unwrap(), 2.0 * t2.days[i].unwrap()) < 1e-15);
        }
        assert_eq!(t.first.unwrap().0, 2);
        assert_eq!(t.max.unwrap().0, 1);
    }

    #[test]
    fn no_buyers_means_infinite_timing() {
        let p = reference();
        let x = ReducedState::new(vec![0.0, 0.01, 0.01, 0.1]);
        let t = seller_timing(&p, &x, DAYS_PER_YEAR);
        assert!(t.days[0].is_none());
        assert!(t.max.is_none());
        assert_eq!(t.first.unwrap().0, 2);
        assert!(matches!(intermediates(&p, &x), Err(Error::SingularMarket(_))));
    }
}
