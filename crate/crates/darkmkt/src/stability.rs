//! Stability certificate for the steady state.
//!
//! Three independent pieces of evidence are collected:
//!
//! * the Hawkins–Simon test on the K×K Schur complement `B` of the Jacobian
//!   (all leading principal minors positive), computed by LU and by a
//!   closed form that exploits the row-constant off-diagonal of `B`;
//! * a positive weight vector `d` for which the Jacobian is strictly
//!   diagonally dominant in the weighted sense `d_i |J_ii| > Σ_{j≠i} d_j |J_ij|`,
//!   i.e. `D⁻¹ J D` is row dominant, so all Gerschgorin disks of `D⁻¹ J D`
//!   sit in the open left half-plane;
//! * the spectrum of `J` itself.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::reduced_rhs;
use crate::equilibrium::{solve_steady_state, SteadyState, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::{ReducedState, ValidatedParams};

/// Residual above which a state is not accepted as steady by [`b_matrix`].
pub const STEADY_TOL: f64 = 1e-8;
/// Relative agreement required between the two minor computations.
pub const MINOR_AGREEMENT_TOL: f64 = 1e-8;
/// Below this `λ_i x_i` the buyer row does not constrain `d_{K+i}`.
pub const DEGENERATE_MEETING: f64 = 1e-14;

/// Jacobian of the reduced field.
pub fn jacobian(x: &ReducedState, p: &ValidatedParams) -> Mat {
    let k = p.k();
    let mut j = Mat::zeros(2 * k);
    for i in 0..k {
        let (b, s, l) = (x.buyer(i), x.seller(i), p.lambda[i]);
        for c in 0..k {
            if c != i {
                j[(i, c)] = -p.gamma_tilde_u[i];
            }
        }
        j[(i, i)] = -l * s - p.gamma_tilde()[i];
        j[(i, k + i)] = -l * b;
        j[(k + i, i)] = -l * s;
        j[(k + i, k + i)] = -l * b - p.gamma()[i];
    }
    j
}

/// Schur complement of the seller block, simplified with the rest relation
/// for the seller masses: `b_ii = γ̃_i + λ_i γ_i x_{K+i}² / (γ_di m_i)`,
/// `b_ij = −γ̃_ui`.
pub fn b_matrix(x: &ReducedState, p: &ValidatedParams) -> Result<Mat> {
    let res = reduced_rhs(x, p).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(res <= STEADY_TOL) {
        return Err(Error::NotSteady(res));
    }
    let k = p.k();
    let mut b = Mat::zeros(k);
    for i in 0..k {
        for c in 0..k {
            b[(i, c)] = -p.gamma_tilde_u[i];
        }
        let s = x.seller(i);
        b[(i, i)] = p.gamma_tilde()[i] + p.lambda[i] * p.gamma()[i] * s * s / (p.gamma_d[i] * p.m[i]);
    }
    Ok(b)
}

/// Leading principal minors of a matrix whose row `i` off-diagonal entries
/// all equal `−c_i`. Writing the block as `diag(b_jj + c_j) − c·1ᵀ`, the
/// matrix determinant lemma gives
/// `det = Π (b_jj + c_j) · (1 − Σ c_j / (b_jj + c_j))`.
pub fn minors_closed_form(b: &Mat) -> Vec<f64> {
    let k = b.n();
    let c: Vec<f64> = (0..k)
        .map(|i| if k > 1 { -b[(i, (i + 1) % k)] } else { 0.0 })
        .collect();
    let mut prod = 1.0;
    let mut sum = 0.0;
    (0..k)
        .map(|p| {
            let e = b[(p, p)] + c[p];
            prod *= e;
            sum += c[p] / e;
            prod * (1.0 - sum)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Minors {
    pub lu: Vec<f64>,
    pub closed_form: Vec<f64>,
}

impl Minors {
    pub fn all_positive(&self) -> bool {
        self.lu.iter().all(|m| *m > 0.0)
    }
}

fn row_constant(b: &Mat) -> bool {
    let k = b.n();
    (0..k).all(|i| {
        let first = (0..k).find(|&j| j != i).map(|j| b[(i, j)]);
        (0..k).filter(|&j| j != i).all(|j| Some(b[(i, j)]) == first)
    })
}

/// Minors by LU and by the closed form; the two must agree.
pub fn leading_minors(b: &Mat) -> Result<Minors> {
    if !row_constant(b) {
        return Err(Error::Consistency("B does not have row-constant off-diagonals".into()));
    }
    let lu = linalg::leading_minors(b);
    let closed_form = minors_closed_form(b);
    for (p, (a, c)) in lu.iter().zip(&closed_form).enumerate() {
        let scale = a.abs().max(c.abs());
        if (a - c).abs() > MINOR_AGREEMENT_TOL * scale {
            return Err(Error::Consistency(format!(
                "minor {}: LU {a:e} vs closed form {c:e}",
                p + 1
            )));
        }
    }
    Ok(Minors { lu, closed_form })
}

/// Weights that make `J` strictly diagonally dominant (weighted columns).
///
/// The buyer weights solve `B d = 1` (positive by Hawkins–Simon) and are
/// scaled to a minimum of one. Each seller weight is placed at the fraction
/// `eps_frac` of its admissible open interval
/// `(L_i, L_i + ε_i/(λ_i x_i))`, `L_i = d_i λ_i x_{K+i}/(λ_i x_i + γ_i)`,
/// where `ε_i = (B d)_i` is the slack of buyer row i.
pub fn dominance_vector(x: &ReducedState, p: &ValidatedParams, eps_frac: f64) -> Result<Vec<f64>> {
    if !(eps_frac > 0.0 && eps_frac < 1.0) {
        return Err(Error::Parameter(format!("eps_frac {eps_frac} outside (0,1)")));
    }
    let k = p.k();
    let b = b_matrix(x, p)?;
    let minors = leading_minors(&b)?;
    if !minors.all_positive() {
        return Err(Error::Dominance(format!("leading minors not all positive: {:?}", minors.lu)));
    }
    let mut d = linalg::solve(&b, &vec![1.0; k])?;
    if let Some(i) = d.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Dominance(format!("B⁻¹·1 has non-positive entry {i}")));
    }
    let dmin = d.iter().cloned().fold(f64::INFINITY, f64::min);
    for v in d.iter_mut() {
        *v /= dmin;
    }
    let mut out = d.clone();
    out.resize(2 * k, 0.0);
    for i in 0..k {
        let (bx, s, l, g) = (x.buyer(i), x.seller(i), p.lambda[i], p.gamma()[i]);
        let others: f64 = (0..k).filter(|&j| j != i).map(|j| d[j]).sum();
        let eps = d[i] * (l * s + p.gamma_tilde()[i]) - others * p.gamma_tilde_u[i]
            - d[i] * l * l * bx * s / (l * bx + g);
        if !(eps > 0.0) {
            return Err(Error::Dominance(format!(
                "slack of buyer row {} is {eps:e}",
                i + 1
            )));
        }
        let lower = d[i] * l * s / (l * bx + g);
        out[k + i] = if l * bx < DEGENERATE_MEETING {
            lower + d[i]
        } else {
            lower + eps_frac * eps / (l * bx)
        };
    }
    Ok(out)
}

/// Smallest relative row slack `(d_i|J_ii| − Σ_{j≠i} d_j|J_ij|) / (d_i|J_ii|)`.
pub fn dominance_margin(j: &Mat, d: &[f64]) -> f64 {
    let n = j.n();
    (0..n)
        .map(|i| {
            let diag = d[i] * j[(i, i)].abs();
            let off: f64 = (0..n).filter(|&c| c != i).map(|c| d[c] * j[(i, c)].abs()).sum();
            (diag - off) / diag
        })
        .fold(f64::INFINITY, f64::min)
}

/// Gerschgorin bound on the spectrum of `D⁻¹ J D`: the largest right edge
/// of its row disks.
pub fn gerschgorin_right_edge(j: &Mat, d: &[f64]) -> f64 {
    let n = j.n();
    (0..n)
        .map(|i| {
            let off: f64 = (0..n).filter(|&c| c != i).map(|c| d[c] * j[(i, c)].abs()).sum();
            j[(i, i)] + off / d[i]
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn eigenvalues(j: &Mat) -> Result<Vec<Complex64>> {
    linalg::eigenvalues(j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    AsymptoticallyStable,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub steady_state: SteadyState,
    pub jacobian: Vec<Vec<f64>>,
    pub b_matrix: Vec<Vec<f64>>,
    pub minors: Minors,
    pub dominance: Option<Vec<f64>>,
    pub dominance_margin: Option<f64>,
    /// Eigenvalues as (re, im), ascending real part.
    pub spectrum: Vec<(f64, f64)>,
    pub max_real_part: f64,
    pub det_jacobian: f64,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl StabilityCertificate {
    pub fn minors_positive(&self) -> bool {
        self.minors.all_positive()
    }
    pub fn dominant(&self) -> bool {
        self.dominance_margin.is_some_and(|m| m > 0.0)
    }
    pub fn spectrally_stable(&self) -> bool {
        self.max_real_part < 0.0
    }
}

/// Certificate at a given steady state.
pub fn certify(s: SteadyState, p: &ValidatedParams, eps_frac: f64) -> Result<StabilityCertificate> {
    let j = jacobian(&s.x, p);
    let b = b_matrix(&s.x, p)?;
    let minors = leading_minors(&b)?;
    let mut notes = Vec::new();
    let dominance = match dominance_vector(&s.x, p, eps_frac) {
        Ok(d) => Some(d),
        Err(e) => {
            notes.push(format!("no dominance vector: {e}"));
            None
        }
    };
    let dominance_margin = dominance.as_ref().map(|d| dominance_margin(&j, d));
    let det_jacobian = linalg::det(&j);
    let spectrum = eigenvalues(&j)?;
    let max_real_part = spectrum.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if let (Some(d), Some(m)) = (&dominance, dominance_margin) {
        if m > 0.0 {
            if det_jacobian == 0.0 {
                return Err(Error::Consistency("dominant Jacobian is singular".into()));
            }
            let edge = gerschgorin_right_edge(&j, d);
            if !(edge < 0.0) || max_real_part > edge * (1.0 - 1e-9) + 1e-12 * j.max_abs() {
                return Err(Error::Consistency(format!(
                    "spectrum (max re {max_real_part:e}) escapes the Gerschgorin bound {edge:e}"
                )));
            }
        } else {
            notes.push(format!("dominance margin {m:e} is not positive"));
        }
    }
    if !minors.all_positive() {
        notes.push("Hawkins–Simon minors not all positive".into());
    }
    if max_real_part >= 0.0 {
        notes.push(format!("spectral abscissa {max_real_part:e} is not negative"));
    }
    let stable = minors.all_positive() && dominance_margin.is_some_and(|m| m > 0.0) && max_real_part < 0.0;
    Ok(StabilityCertificate {
        steady_state: s,
        jacobian: j.rows(),
        b_matrix: b.rows(),
        minors,
        dominance,
        dominance_margin,
        spectrum: spectrum.iter().map(|z| (z.re, z.im)).collect(),
        max_real_part,
        det_jacobian,
        verdict: if stable {
            Verdict::AsymptoticallyStable
        } else {
            Verdict::Inconclusive
        },
        notes,
    })
}

/// Solve, then certify.
pub fn stability_certificate(p: &ValidatedParams) -> Result<StabilityCertificate> {
    let s = solve_steady_state(p, None, DEFAULT_TOL)?;
    certify(s, p, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference() -> ValidatedParams {
        ModelParams::two_asset_reference().validate().unwrap()
    }

    #[test]
    fn jacobian_entry_at_reference_masses() {
        let p = reference();
        let x = ReducedState::new(vec![0.0991, 0.0720, 0.0011, 0.0116]);
        let j = jacobian(&x, &p);
        assert!((j[(0, 2)] + 123.875).abs() < 1e-9);
        assert_eq!(j[(0, 3)], 0.0);
        assert_eq!(j[(0, 1)], -2.5);
        assert_eq!(j[(1, 0)], -0.4);
    }

    #[test]
    fn no_trade_jacobian_structure() {
        let p = reference().modified(|q| q.lambda = vec![0.0, 0.0]).unwrap();
        let x = ReducedState::new(vec![0.03, 0.02, 0.1, 0.3]);
        let j = jacobian(&x, &p);
        let want = Mat::from_rows(&[
            vec![-6.0, -2.5, 0.0, 0.0],
            vec![-0.4, -1.9, 0.0, 0.0],
            vec![0.0, 0.0, -5.5, 0.0],
            vec![0.0, 0.0, 0.0, -11.0],
        ]);
        assert_eq!(j, want);
    }

    #[test]
    fn b_matrix_needs_steady_state() {
        let p = reference();
        let x = ReducedState::new(vec![0.0991, 0.0720, 0.0011, 0.0116]);
        assert!(matches!(b_matrix(&x, &p), Err(Error::NotSteady(_))));
    }

    #[test]
    fn b_matrix_matches_schur_complement() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let k = rng.gen_range(1..5);
            let p = ModelParams::sample(&mut rng, k).validate().unwrap();
            let s = solve_steady_state(&p, None, DEFAULT_TOL).unwrap();
            let j = jacobian(&s.x, &p);
            let b = b_matrix(&s.x, &p).unwrap();
            for i in 0..k {
                // −A11 + A12 A22⁻¹ A21, with A12, A21, A22 diagonal
                let schur = -j[(i, i)] + j[(i, k + i)] * j[(k + i, i)] / j[(k + i, k + i)];
                assert!((b[(i, i)] - schur).abs() < 1e-9 * schur.abs());
                assert!(b[(i, i)] - p.gamma_tilde()[i] > 0.0);
                for c in 0..k {
                    if c != i {
                        assert_eq!(b[(i, c)], j[(i, c)]);
                    }
                }
            }
        }
    }

    #[test]
    fn no_trade_b_is_gamma_tilde() {
        let p = reference().modified(|q| q.lambda = vec![0.0, 0.0]).unwrap();
        let s = solve_steady_state(&p, None, DEFAULT_TOL).unwrap();
        let b = b_matrix(&s.x, &p).unwrap();
        assert_eq!(b[(0, 0)], 6.0);
        assert_eq!(b[(1, 1)], 1.9);
    }

    #[test]
    fn single_asset_minor_is_diagonal() {
        let b = Mat::from_rows(&[vec![3.7]]);
        let m = leading_minors(&b).unwrap();
        assert_eq!(m.lu, vec![3.7]);
        assert_eq!(m.closed_form, vec![3.7]);
    }

    #[test]
    fn closed_form_agrees_with_lu_on_random_b() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let k = rng.gen_range(1..8);
            let c: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..5.0)).collect();
            let mut b = Mat::zeros(k);
            for i in 0..k {
                for j in 0..k {
                    b[(i, j)] = -c[i];
                }
                b[(i, i)] = rng.gen_range(0.1..20.0);
            }
            let lu = linalg::leading_minors(&b);
            let cf = minors_closed_form(&b);
            for (a, e) in lu.iter().zip(&cf) {
                let scale: f64 = (0..k).map(|i| b[(i, i)] + c[i]).product();
                assert!((a - e).abs() <= 1e-10 * a.abs().max(e.abs()).max(1e-6 * scale));
            }
        }
    }

    #[test]
    fn hawkins_simon_equivalence_both_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (mut pos, mut neg) = (0, 0);
        for _ in 0..2000 {
            let k = rng.gen_range(2..6);
            let mut b = Mat::zeros(k);
            for i in 0..k {
                let c = rng.gen_range(0.1..3.0);
                for j in 0..k {
                    b[(i, j)] = -c;
                }
                b[(i, i)] = rng.gen_range(0.2..8.0);
            }
            let minors = linalg::leading_minors(&b);
            let all_pos = minors.iter().all(|m| *m > 0.0);
            let sol = linalg::solve(&b, &vec![1.0; k]);
            // a positive d with B d > 0 exists iff the minors are positive;
            // for Z-matrices that is equivalent to B⁻¹·1 > 0
            let solvable = sol.map(|d| d.iter().all(|v| *v > 0.0)).unwrap_or(false);
            assert_eq!(all_pos, solvable, "{minors:?}");
            if all_pos {
                pos += 1
            } else {
                neg += 1
            }
        }
        assert!(pos > 100 && neg > 100, "{pos} {neg}");
    }

    #[test]
    fn reference_certificate_is_stable() {
        let c = stability_certificate(&reference()).unwrap();
        assert_eq!(c.verdict, Verdict::AsymptoticallyStable, "{:?}", c.notes);
        assert!(c.minors_positive() && c.dominant() && c.spectrally_stable());
        assert_eq!(c.spectrum.len(), 4);
    }

    #[test]
    fn single_asset_dominance_lies_in_interval() {
        let p = ModelParams::symmetric(1, 0.4).validate().unwrap();
        let s = solve_steady_state(&p, None, DEFAULT_TOL).unwrap();
        let d = dominance_vector(&s.x, &p, 0.5).unwrap();
        assert_eq!(d[0], 1.0);
        let (b, sl, l, g) = (s.x.buyer(0), s.x.seller(0), p.lambda[0], p.gamma()[0]);
        let lower = l * sl / (l * b + g);
        let upper = (l * sl + p.gamma_tilde()[0]) / (l * b);
        assert!(d[1] > lower && d[1] < upper, "{lower} < {} < {upper}", d[1]);
        assert!(dominance_margin(&jacobian(&s.x, &p), &d) > 0.0);
    }

    #[test]
    fn no_trade_market_is_stable() {
        let p = reference().modified(|q| q.lambda = vec![0.0, 0.0]).unwrap();
        let c = stability_certificate(&p).unwrap();
        assert_eq!(c.verdict, Verdict::AsymptoticallyStable);
        let d = c.dominance.unwrap();
        assert_eq!(&d[2..], &d[..2]);
    }

    #[test]
    fn eps_frac_sweeps_the_interval() {
        let p = reference();
        let s = solve_steady_state(&p, None, DEFAULT_TOL).unwrap();
        let j = jacobian(&s.x, &p);
        for f in [0.01, 0.25, 0.5, 0.75, 0.99] {
            let d = dominance_vector(&s.x, &p, f).unwrap();
            assert!(dominance_margin(&j, &d) > 0.0, "eps_frac {f}");
        }
        assert!(dominance_vector(&s.x, &p, 1.0).is_err());
    }
}
