//! Steady state of the reduced dynamics.
//!
//! At rest every seller mass is pinned by its buyer mass,
//! `μ(li,o) = γ_di m_i / (λ_i μ(hi,n) + γ_i)`, so the search runs over the K
//! buyer masses only. For two assets the same elimination, carried one step
//! further, gives a quartic in `μ(h1,n)` that serves as an independent check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::reduced_rhs;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::{ReducedState, ValidatedParams};
use crate::poly;

pub const DEFAULT_TOL: f64 = 1e-12;
const MAX_NEWTON: usize = 200;
const MAX_FIXED_POINT: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Newton,
    FixedPoint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteadyState {
    pub x: ReducedState,
    /// Max-norm of the reduced field at `x`.
    pub residual: f64,
    pub iterations: usize,
    pub method: Method,
}

/// Seller mass at rest given the buyer mass of the same asset.
pub fn seller_at_rest(p: &ValidatedParams, i: usize, buyer: f64) -> f64 {
    p.gamma_d[i] * p.m[i] / (p.lambda[i] * buyer + p.gamma()[i])
}

pub fn full_from_buyers(p: &ValidatedParams, b: &[f64]) -> ReducedState {
    let s: Vec<f64> = (0..p.k()).map(|i| seller_at_rest(p, i, b[i])).collect();
    ReducedState::from_parts(b, &s)
}

fn buyer_residual(p: &ValidatedParams, b: &[f64]) -> Vec<f64> {
    let k = p.k();
    let free = 1.0 - p.m_total();
    let total: f64 = b.iter().sum();
    (0..k)
        .map(|i| {
            let s = seller_at_rest(p, i, b[i]);
            -p.lambda[i] * b[i] * s - p.gamma_tilde()[i] * b[i]
                - p.gamma_tilde_u[i] * (total - b[i])
                + p.gamma_tilde_u[i] * free
        })
        .collect()
}

fn buyer_jacobian(p: &ValidatedParams, b: &[f64]) -> Mat {
    let k = p.k();
    let mut j = Mat::zeros(k);
    for i in 0..k {
        let s = seller_at_rest(p, i, b[i]);
        let g = p.gamma()[i];
        for c in 0..k {
            j[(i, c)] = -p.gamma_tilde_u[i];
        }
        j[(i, i)] = -p.lambda[i] * s * g / (p.lambda[i] * b[i] + g) - p.gamma_tilde()[i];
    }
    j
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn buyers_feasible(p: &ValidatedParams, b: &[f64]) -> bool {
    b.iter().all(|v| *v > 0.0) && b.iter().sum::<f64>() < 1.0 - p.m_total()
}

/// Default start: `μ(hi,n) = γ̃_ui(1−m)/γ̃_i`, shrunk into the feasible set if
/// the buyer masses would overfill the non-owner population.
pub fn default_start(p: &ValidatedParams) -> Vec<f64> {
    let free = 1.0 - p.m_total();
    let mut b: Vec<f64> = (0..p.k())
        .map(|i| p.gamma_tilde_u[i] * free / p.gamma_tilde()[i])
        .collect();
    let s: f64 = b.iter().sum();
    if s >= free {
        for v in b.iter_mut() {
            *v *= 0.5 * free / s;
        }
    }
    b
}

fn newton(p: &ValidatedParams, mut b: Vec<f64>, tol: f64) -> (Vec<f64>, usize, bool) {
    let mut f = buyer_residual(p, &b);
    let mut norm = max_norm(&f);
    for it in 0..MAX_NEWTON {
        if norm < tol {
            return (b, it, true);
        }
        let step = match linalg::solve(&buyer_jacobian(p, &b), &f) {
            Ok(s) => s,
            Err(_) => return (b, it, false),
        };
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let trial: Vec<f64> = b.iter().zip(&step).map(|(x, d)| x - alpha * d).collect();
            if buyers_feasible(p, &trial) {
                let ft = buyer_residual(p, &trial);
                let nt = max_norm(&ft);
                if nt < (1.0 - 1e-4 * alpha) * norm || nt < tol {
                    b = trial;
                    f = ft;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return (b, it, false);
        }
    }
    (b, MAX_NEWTON, norm < tol)
}

/// Damped iteration of `μ(hi,n) = γ̃_ui(1 − m − Σ_{j≠i} μ(hj,n)) / (λ_i μ(li,o) + γ̃_i)`.
fn fixed_point(p: &ValidatedParams, mut b: Vec<f64>, tol: f64) -> (Vec<f64>, usize, bool) {
    let k = p.k();
    let free = 1.0 - p.m_total();
    let omega = 0.5;
    for it in 0..MAX_FIXED_POINT {
        if max_norm(&buyer_residual(p, &b)) < tol {
            return (b, it, true);
        }
        let total: f64 = b.iter().sum();
        let next: Vec<f64> = (0..k)
            .map(|i| {
                let s = seller_at_rest(p, i, b[i]);
                let g = p.gamma_tilde_u[i] * (free - (total - b[i])).max(0.0)
                    / (p.lambda[i] * s + p.gamma_tilde()[i]);
                (1.0 - omega) * b[i] + omega * g
            })
            .collect();
        b = next;
    }
    let ok = max_norm(&buyer_residual(p, &b)) < tol;
    (b, MAX_FIXED_POINT, ok)
}

/// Steady state by damped Newton in the buyer masses with a fixed-point
/// fallback. `x0` supplies starting buyer masses (its seller half is ignored).
pub fn solve_steady_state(p: &ValidatedParams, x0: Option<&ReducedState>, tol: f64) -> Result<SteadyState> {
    let k = p.k();
    let start = match x0 {
        Some(x) if x.x.len() == 2 * k && buyers_feasible(p, x.buyers()) => x.buyers().to_vec(),
        Some(x) if x.x.len() != 2 * k => {
            return Err(Error::Range(format!("start has {} components, expected {}", x.x.len(), 2 * k)))
        }
        _ => default_start(p),
    };
    let (b, iterations, method, ok) = match newton(p, start.clone(), tol) {
        (b, it, true) => (b, it, Method::Newton, true),
        (b_newton, it_newton, false) => {
            let (b, it, ok) = fixed_point(p, start, tol);
            if ok {
                // polish with Newton from the fixed-point answer
                match newton(p, b.clone(), tol) {
                    (bb, it2, true) => (bb, it + it2, Method::FixedPoint, true),
                    _ => (b, it, Method::FixedPoint, true),
                }
            } else {
                let better = if max_norm(&buyer_residual(p, &b)) < max_norm(&buyer_residual(p, &b_newton)) {
                    b
                } else {
                    b_newton
                };
                (better, it + it_newton, Method::FixedPoint, false)
            }
        }
    };
    let x = full_from_buyers(p, &b);
    let residual = max_norm(&reduced_rhs(&x, p));
    if !ok || !(residual < tol) {
        return Err(Error::NoConvergence {
            iterations,
            residual,
            last: x.x,
        });
    }
    x.check_feasible(p, 0.0)
        .map_err(|e| Error::Infeasible(e.to_string()))?;
    if x.low_non_owners(p) <= 0.0 || b.iter().any(|v| *v <= 0.0) {
        return Err(Error::Infeasible(format!("boundary point {:?}", x.x)));
    }
    Ok(SteadyState {
        x,
        residual,
        iterations,
        method,
    })
}

/// Coefficients of the two-asset quartic in `x = μ(h1,n)`, highest degree first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticCoeffs {
    pub c4: f64,
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl QuarticCoeffs {
    pub fn new(c: [f64; 5]) -> Self {
        QuarticCoeffs {
            c4: c[0],
            c3: c[1],
            c2: c[2],
            c1: c[3],
            c0: c[4],
        }
    }
    /// Highest degree first.
    pub fn as_array(&self) -> [f64; 5] {
        [self.c4, self.c3, self.c2, self.c1, self.c0]
    }
    fn ascending(&self) -> Vec<f64> {
        vec![self.c0, self.c1, self.c2, self.c3, self.c4]
    }
    pub fn eval(&self, x: f64) -> f64 {
        poly::eval(&self.ascending(), x)
    }
    /// Rescaled so the leading coefficient equals `lead`.
    pub fn normalized(&self, lead: f64) -> Self {
        let s = lead / self.c4;
        let a = self.as_array();
        QuarticCoeffs::new([a[0] * s, a[1] * s, a[2] * s, a[3] * s, a[4] * s])
    }
    pub fn norm(&self) -> f64 {
        self.as_array().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
    pub fn real_roots(&self) -> Vec<f64> {
        poly::real_roots(&self.ascending())
    }
}

/// `y = μ(h2,n)` as a rational function `num/den` of `x = μ(h1,n)` from the
/// first asset's balance (after clearing its seller denominator).
fn k2_second_buyer(p: &ValidatedParams) -> (Vec<f64>, Vec<f64>) {
    let free = 1.0 - p.m_total();
    let (l1, g1, gd1, m1) = (p.lambda[0], p.gamma()[0], p.gamma_d[0], p.m[0]);
    let (tu1, t1) = (p.gamma_tilde_u[0], p.gamma_tilde()[0]);
    // −λ1 x γd1 m1 + (λ1 x + γ1)(γ̃u1 (1−m) − γ̃1 x − γ̃u1 y) = 0
    let lin1 = [g1, l1];
    let alpha = poly::add(&[0.0, -l1 * gd1 * m1], &poly::mul(&lin1, &[tu1 * free, -t1]));
    let beta = poly::scale(&lin1, tu1);
    (alpha, beta)
}

/// Eliminate `μ(h2,n)` between the two buyer balances (with sellers at rest)
/// and clear denominators.
pub fn k2_quartic(p: &ValidatedParams) -> Result<QuarticCoeffs> {
    if p.k() != 2 {
        return Err(Error::Unsupported(format!("quartic reduction needs K = 2, got {}", p.k())));
    }
    let free = 1.0 - p.m_total();
    let (n, d) = k2_second_buyer(p);
    let (l2, g2, gd2, m2) = (p.lambda[1], p.gamma()[1], p.gamma_d[1], p.m[1]);
    let (tu2, t2) = (p.gamma_tilde_u[1], p.gamma_tilde()[1]);
    // second balance times (λ2 y + γ2):
    //   −γ̃2 λ2 y² + y (λ2 γ̃u2 (1−m−x) − λ2 γd2 m2 − γ̃2 γ2) + γ2 γ̃u2 (1−m−x)
    let c_lin = [l2 * tu2 * free - l2 * gd2 * m2 - t2 * g2, -l2 * tu2];
    let c_const = [g2 * tu2 * free, -g2 * tu2];
    let q = poly::add(
        &poly::add(
            &poly::scale(&poly::mul(&n, &n), -t2 * l2),
            &poly::mul(&poly::mul(&n, &d), &c_lin),
        ),
        &poly::mul(&poly::mul(&d, &d), &c_const),
    );
    let mut c = q;
    c.resize(5, 0.0);
    if c[4] == 0.0 || !c.iter().all(|v| v.is_finite()) {
        return Err(Error::Unsupported(
            "degenerate quartic (leading coefficient vanishes)".into(),
        ));
    }
    Ok(QuarticCoeffs::new([c[4], c[3], c[2], c[1], c[0]]))
}

/// The only root in (0, 1).
pub fn quartic_positive_root(c: &QuarticCoeffs) -> Result<f64> {
    poly::unique_root_in(&c.ascending(), 0.0, 1.0)
}

/// Steady state through the quartic: the unique root whose implied
/// `μ(h2,n)` and `μ(l,n)` are positive.
pub fn k2_quartic_state(p: &ValidatedParams) -> Result<ReducedState> {
    let c = k2_quartic(p)?;
    let free = 1.0 - p.m_total();
    let (n, d) = k2_second_buyer(p);
    let cand: Vec<ReducedState> = poly::real_roots_in(&c.ascending(), 0.0, free)
        .into_iter()
        .filter(|x| *x > 0.0 && *x < free)
        .filter_map(|x| {
            let y = poly::eval(&n, x) / poly::eval(&d, x);
            (y > 0.0 && x + y < free).then(|| full_from_buyers(p, &[x, y]))
        })
        .collect();
    match cand.len() {
        1 => Ok(cand.into_iter().next().unwrap()),
        n => Err(Error::Roots(format!(
            "{n} feasible quartic roots; real roots: {:?}",
            c.real_roots()
        ))),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub starts: usize,
    pub converged: usize,
    /// One representative per cluster of converged answers.
    pub clusters: Vec<ReducedState>,
    /// Largest max-norm distance between any converged answer and the first.
    pub max_spread: f64,
}

impl UniquenessReport {
    pub fn unique(&self) -> bool {
        self.clusters.len() == 1
    }
}

/// Latin-hypercube multistart in the buyer simplex.
pub fn verify_uniqueness_scan(p: &ValidatedParams, n_starts: usize, seed: u64) -> UniquenessReport {
    let k = p.k();
    let free = 1.0 - p.m_total();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            let mut c: Vec<f64> = (0..n_starts)
                .map(|s| (s as f64 + rng.gen::<f64>()) / n_starts as f64)
                .collect();
            for i in (1..c.len()).rev() {
                let j = rng.gen_range(0..=i);
                c.swap(i, j);
            }
            c
        })
        .collect();
    let mut clusters: Vec<ReducedState> = Vec::new();
    let mut converged = 0;
    let mut max_spread: f64 = 0.0;
    for s in 0..n_starts {
        let u: Vec<f64> = columns.iter_mut().map(|c| c[s]).collect();
        let su: f64 = u.iter().sum();
        let b: Vec<f64> = u.iter().map(|v| free * v.max(1e-6) / su.max(1.0) * 0.999).collect();
        let x0 = full_from_buyers(p, &b);
        if let Ok(ss) = solve_steady_state(p, Some(&x0), DEFAULT_TOL) {
            converged += 1;
            let dist = |a: &ReducedState| max_norm(&a.x.iter().zip(&ss.x.x).map(|(u, v)| u - v).collect::<Vec<_>>());
            if let Some(first) = clusters.first() {
                max_spread = max_spread.max(dist(first));
            }
            if !clusters.iter().any(|c| dist(c) < 1e-8) {
                clusters.push(ss.x);
            }
        }
    }
    UniquenessReport {
        starts: n_starts,
        converged,
        clusters,
        max_spread,
    }
}
