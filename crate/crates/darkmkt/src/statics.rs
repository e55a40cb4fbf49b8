//! Comparative statics of the display price: asymptotic limits, the
//! cross-effect threshold λ̂, and parameter sweeps.
//!
//! Unless stated otherwise every quantity here holds the steady-state masses
//! fixed ("frozen") at a reference state and moves only the parameters that
//! enter the price formula.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{solve_steady_state, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::{ReducedState, ValidatedParams};
use crate::pricing::{self, LambdaForm};

/// Scaling exponents used by numeric limit sequences (factor 10^k).
pub const SCALE_EXPONENTS: std::ops::RangeInclusive<i32> = 0..=6;
/// Relative agreement required between the last scaled price and the limit.
pub const LIMIT_REL_TOL: f64 = 1e-3;
/// Differences at or below this (relative to the price scale) count as flat.
pub const DEAD_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    GammaU,
    GammaD,
    GammaTildeD,
    Lambda,
}

impl LimitKind {
    pub fn field(self) -> &'static str {
        match self {
            LimitKind::GammaU => "gamma_u",
            LimitKind::GammaD => "gamma_d",
            LimitKind::GammaTildeD => "gamma_tilde_d",
            LimitKind::Lambda => "lambda",
        }
    }
}

impl fmt::Display for LimitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.field())
    }
}

impl FromStr for LimitKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma_u" => Ok(LimitKind::GammaU),
            "gamma_d" => Ok(LimitKind::GammaD),
            "gamma_tilde_d" => Ok(LimitKind::GammaTildeD),
            "lambda" => Ok(LimitKind::Lambda),
            _ => Err(Error::Parameter(format!(
                "unknown limit kind '{s}' (gamma_u, gamma_d, gamma_tilde_d, lambda)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalePoint {
    pub factor: f64,
    pub price: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssetLimit {
    pub asset: usize,
    pub analytic: f64,
    /// A second closed form for the same limit, when one exists in a
    /// different shape.
    pub alternative: Option<f64>,
    pub sequence: Vec<ScalePoint>,
    pub relative_error: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitReport {
    pub kind: LimitKind,
    pub masses: ReducedState,
    pub assets: Vec<AssetLimit>,
    pub flags: Vec<String>,
}

fn scaled(p: &ValidatedParams, field: &str, factor: f64) -> Result<ValidatedParams> {
    p.modified(|q| {
        let v = match field {
            "gamma_u" => &mut q.gamma_u,
            "gamma_d" => &mut q.gamma_d,
            "gamma_tilde_u" => &mut q.gamma_tilde_u,
            "gamma_tilde_d" => &mut q.gamma_tilde_d,
            "lambda" => &mut q.lambda,
            _ => unreachable!("unscalable field {field}"),
        };
        v.iter_mut().for_each(|x| *x *= factor);
    })
}

/// Display prices at `mu` after multiplying every asset's `field` by 10^k.
fn scale_sequence(p: &ValidatedParams, mu: &ReducedState, field: &str) -> Result<Vec<Vec<ScalePoint>>> {
    let mut out = vec![Vec::new(); p.k()];
    for e in SCALE_EXPONENTS {
        let factor = 10f64.powi(e);
        let prices = pricing::display_prices_frozen(&scaled(p, field, factor)?, mu)?;
        for (i, pr) in prices.into_iter().enumerate() {
            out[i].push(ScalePoint { factor, price: pr });
        }
    }
    Ok(out)
}

fn report(
    kind: LimitKind,
    p: &ValidatedParams,
    mu: &ReducedState,
    analytic: Vec<f64>,
    alternative: Option<Vec<f64>>,
    flags: Vec<String>,
) -> Result<LimitReport> {
    let seqs = scale_sequence(p, mu, kind.field())?;
    let assets = seqs
        .into_iter()
        .enumerate()
        .map(|(i, sequence)| {
            let last = sequence.last().expect("non-empty scale range").price;
            let err = (last - analytic[i]).abs() / analytic[i].abs();
            AssetLimit {
                asset: i + 1,
                analytic: analytic[i],
                alternative: alternative.as_ref().map(|a| a[i]),
                sequence,
                relative_error: err,
                converged: err < LIMIT_REL_TOL,
            }
        })
        .collect();
    Ok(LimitReport {
        kind,
        masses: mu.clone(),
        assets,
        flags,
    })
}

/// γ_u → ∞: δ_h/r.
pub fn limit_gamma_u(p: &ValidatedParams, mu: &ReducedState) -> Result<LimitReport> {
    let analytic = p.delta_h.iter().map(|d| d / p.r).collect();
    report(LimitKind::GammaU, p, mu, analytic, None, Vec::new())
}

/// γ_d → ∞: `δ_h/r − δ_d((1−q)λμ(l,o) + γ̃_d)/((1−q)λμ(l,o) + γ̃_d + r)`.
/// The alternative uses μ(h,n) in the numerator instead.
pub fn limit_gamma_d(p: &ValidatedParams, mu: &ReducedState) -> Result<LimitReport> {
    let k = p.k();
    let q = p.q;
    let form = |num_mass: f64, i: usize| {
        let den = (1.0 - q) * p.lambda[i] * mu.seller(i) + p.gamma_tilde_d[i] + p.r;
        p.delta_h[i] / p.r
            - p.delta_d[i] * ((1.0 - q) * p.lambda[i] * num_mass + p.gamma_tilde_d[i]) / den
    };
    let analytic = (0..k).map(|i| form(mu.seller(i), i)).collect();
    let alt = (0..k).map(|i| form(mu.buyer(i), i)).collect();
    report(
        LimitKind::GammaD,
        p,
        mu,
        analytic,
        Some(alt),
        vec!["alternative: variant with μ(h,n) in the numerator of the correction".into()],
    )
}

/// γ̃_d → ∞: `δ_h/r − δ_d(q(1−r) + γ_d)/(qλμ(h,n) + γ + r)`.
pub fn limit_gamma_tilde_d(p: &ValidatedParams, mu: &ReducedState) -> Result<LimitReport> {
    let analytic = (0..p.k())
        .map(|i| {
            p.delta_h[i] / p.r
                - p.delta_d[i] * (p.q * (1.0 - p.r) + p.gamma_d[i])
                    / (p.q * p.lambda[i] * mu.buyer(i) + p.gamma()[i] + p.r)
        })
        .collect();
    let mut rep = report(LimitKind::GammaTildeD, p, mu, analytic, None, Vec::new())?;
    let all = rep.assets.iter().all(|a| a.converged);
    rep.flags.push(format!(
        "a limit for this kind is also claimed not to exist; numeric sequence {}",
        if all { "converges to the closed form" } else { "does not settle on the closed form" }
    ));
    Ok(rep)
}

/// Per-asset large-λ limits of Ω, 1−Λ, the Θ coefficient and the dividend
/// correction.
#[derive(Debug, Clone, Copy)]
struct LambdaLimit {
    omega: f64,
    one_minus_lambda: f64,
    g_coef: f64,
    upsilon: f64,
}

fn lambda_limits(p: &ValidatedParams, mu: &ReducedState) -> Result<Vec<LambdaLimit>> {
    (0..p.k())
        .map(|i| {
            let c = pricing::lambda_coefficients(p, mu, i)?;
            let (q, r) = (p.q, p.r);
            let omega = p.delta_d[i] / c.a;
            Ok(LambdaLimit {
                omega,
                one_minus_lambda: c.b1 / c.a,
                g_coef: q * p.gamma_d[i] * mu.buyer(i) / ((1.0 - q) * p.delta_d[i] * mu.seller(i)) * omega,
                upsilon: omega * (q * (2.0 - r) + p.gamma_d[i]),
            })
        })
        .collect()
}

fn assemble(lims: &[LambdaLimit], p: &ValidatedParams) -> Vec<f64> {
    let num: f64 = lims.iter().zip(&p.gamma_tilde_u).map(|(l, w)| w * l.omega).sum();
    let den: f64 = p.r
        + lims
            .iter()
            .zip(&p.gamma_tilde_u)
            .map(|(l, w)| w * l.one_minus_lambda)
            .sum::<f64>();
    let theta = num / den;
    lims.iter()
        .enumerate()
        .map(|(i, l)| (l.g_coef - (1.0 - l.one_minus_lambda)) * theta + p.delta_h[i] / p.r - l.upsilon)
        .collect()
}

/// λ → ∞ limits, `(analytic, alternative shape)`.
///
/// The analytic limit uses `1 − Λ̂ = qrμ(h,n)/((1−q)(γ+r)μ(l,o) + q(γ̃_d+r)μ(h,n))`
/// and the correction `Ω̂(q(2−r) + γ_d)`. The alternative shape writes
/// `1 − Λ̂ = rqμ(h,n)Ω̂/(δ_d μ(l,o))` and the correction `Ω̂(2 − r + γ_d/q)`.
pub fn lambda_limit_values(p: &ValidatedParams, mu: &ReducedState) -> Result<(Vec<f64>, Vec<f64>)> {
    let lims = lambda_limits(p, mu)?;
    let analytic = assemble(&lims, p);
    let alternative: Vec<LambdaLimit> = lims
        .iter()
        .enumerate()
        .map(|(i, l)| LambdaLimit {
            one_minus_lambda: p.r * p.q * mu.buyer(i) * l.omega / (p.delta_d[i] * mu.seller(i)),
            upsilon: l.omega * (2.0 - p.r + p.gamma_d[i] / p.q),
            ..*l
        })
        .collect();
    Ok((analytic, assemble(&alternative, p)))
}

pub fn limit_lambda(p: &ValidatedParams, mu: &ReducedState) -> Result<LimitReport> {
    let (analytic, alternative) = lambda_limit_values(p, mu)?;
    report(
        LimitKind::Lambda,
        p,
        mu,
        analytic,
        Some(alternative),
        vec!["alternative closed-form shape of the large-λ limit".into()],
    )
}

pub fn limit(kind: LimitKind, p: &ValidatedParams, mu: &ReducedState) -> Result<LimitReport> {
    match kind {
        LimitKind::GammaU => limit_gamma_u(p, mu),
        LimitKind::GammaD => limit_gamma_d(p, mu),
        LimitKind::GammaTildeD => limit_gamma_tilde_d(p, mu),
        LimitKind::Lambda => limit_lambda(p, mu),
    }
}

/// Limits of Θ (and of the prices) as γ̃_u = t·w with t → ∞, for equal
/// weights and for weights `w_i = i`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathDependence {
    /// ΣΩ / Σ(1−Λ)
    pub theta_equal: f64,
    /// Σ iΩ / Σ i(1−Λ)
    pub theta_weighted: f64,
    /// The same ratios with r kept in the denominator.
    pub theta_equal_with_r: f64,
    pub theta_weighted_with_r: f64,
    pub difference: f64,
    pub prices_equal: Vec<f64>,
    pub prices_weighted: Vec<f64>,
    /// Θ at t = 10^6 along each path.
    pub numeric_equal: f64,
    pub numeric_weighted: f64,
    pub coincide: bool,
}

pub fn gamma_tilde_u_path_dependence(p: &ValidatedParams, mu: &ReducedState) -> Result<PathDependence> {
    let forms = frozen_forms(p, mu)?;
    let k = p.k();
    let equal = vec![1.0; k];
    let weighted: Vec<f64> = (1..=k).map(|i| i as f64).collect();
    let ratio = |w: &[f64], r: f64| pricing::theta_from(&forms, w, r);
    let theta_equal = ratio(&equal, 0.0);
    let theta_weighted = ratio(&weighted, 0.0);
    let prices = |theta: f64| -> Vec<f64> {
        forms
            .iter()
            .enumerate()
            .map(|(i, f)| f.theta_coef() * theta + p.delta_h[i] / p.r - f.upsilon)
            .collect()
    };
    let t = 1e6;
    let scale = |w: &[f64]| w.iter().map(|v| v * t).collect::<Vec<f64>>();
    let difference = theta_weighted - theta_equal;
    Ok(PathDependence {
        theta_equal,
        theta_weighted,
        theta_equal_with_r: ratio(&equal, p.r),
        theta_weighted_with_r: ratio(&weighted, p.r),
        difference,
        prices_equal: prices(theta_equal),
        prices_weighted: prices(theta_weighted),
        numeric_equal: ratio(&scale(&equal), p.r),
        numeric_weighted: ratio(&scale(&weighted), p.r),
        coincide: difference.abs() <= 1e-12 * theta_equal.abs().max(1.0),
    })
}

pub fn frozen_forms(p: &ValidatedParams, mu: &ReducedState) -> Result<Vec<LambdaForm>> {
    (0..p.k()).map(|i| pricing::lambda_form(p, mu, i)).collect()
}

/// Θ at frozen masses.
pub fn theta_frozen(p: &ValidatedParams, mu: &ReducedState) -> Result<f64> {
    Ok(pricing::theta_from(&frozen_forms(p, mu)?, &p.gamma_tilde_u, p.r))
}

/// Threshold on λ_j at which P_j stops reacting to other assets' λ.
///
/// The price of asset j depends on λ_i (i ≠ j) only through Θ, with
/// coefficient `A_j = γ_d/((1−q)aΓ) − Λ`. Clearing denominators, `A_j` has
/// the sign of `λ_j·D − (γ+r)γ̃_d` where
/// `D = (γ_d − γ̃_d)qμ(h,n) − (γ+r)(1−q)μ(l,o)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaHat {
    pub asset: usize,
    pub denominator: f64,
    /// `(γ+r)γ̃_d / D`, the zero of `A_j`, when D > 0.
    pub exact: Option<f64>,
    /// `(γ+r)(γ̃_d+r) / D`, the alternative form, when D > 0.
    pub alternative: Option<f64>,
}

pub fn lambda_hat(p: &ValidatedParams, mu: &ReducedState, j: usize) -> Result<LambdaHat> {
    if j >= p.k() {
        return Err(Error::Parameter(format!("asset {} out of range", j + 1)));
    }
    let q = p.q;
    let gr = p.gamma()[j] + p.r;
    let td = p.gamma_tilde_d[j];
    let den = (p.gamma_d[j] - td) * q * mu.buyer(j) - gr * (1.0 - q) * mu.seller(j);
    let pos = den > 0.0;
    Ok(LambdaHat {
        asset: j + 1,
        denominator: den,
        exact: pos.then(|| gr * td / den),
        alternative: pos.then(|| gr * (td + p.r) / den),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Frozen,
    SelfConsistent,
}

impl FromStr for SweepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frozen" => Ok(SweepMode::Frozen),
            "self-consistent" | "self_consistent" => Ok(SweepMode::SelfConsistent),
            _ => Err(Error::Parameter(format!("unknown sweep mode '{s}' (frozen, self-consistent)"))),
        }
    }
}

/// Which price a sweep records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceFormula {
    /// The closed-form display.
    Display,
    /// (1−q)Δl + qΔh from the HJB solve.
    Bargain,
}

impl FromStr for PriceFormula {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "display" => Ok(PriceFormula::Display),
            "bargain" => Ok(PriceFormula::Bargain),
            _ => Err(Error::Parameter(format!("unknown price formula '{s}' (display, bargain)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Constant,
    NonMonotone,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    /// NaN entries when the point failed.
    pub prices: Vec<f64>,
    pub converged: bool,
    /// Steady state used at this point.
    pub masses: Option<ReducedState>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub param: String,
    pub mode: SweepMode,
    pub formula: PriceFormula,
    pub price_index: usize,
    pub points: Vec<SweepPoint>,
    pub classification: Monotonicity,
    pub lambda_hat: Vec<LambdaHat>,
}

impl SweepResult {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// Recorded price of the tracked asset at every point.
    pub fn tracked(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.prices[self.price_index - 1]).collect()
    }
}

/// Evenly spaced grid `start:stop:count`.
pub fn linear_grid(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    if !(start < stop) || count < 2 || !start.is_finite() || !stop.is_finite() {
        return Err(Error::Parameter(format!(
            "grid needs start < stop and count >= 2 (got {start}:{stop}:{count})"
        )));
    }
    let h = (stop - start) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| if i + 1 == count { stop } else { start + h * i as f64 })
        .collect())
}

/// Parameters with `path` set to each grid value, validated up front.
pub fn sweep_params(p: &ValidatedParams, path: &str, grid: &[f64]) -> Result<Vec<ValidatedParams>> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parameter("sweep grid must be strictly increasing".into()));
    }
    grid.iter()
        .map(|&v| {
            let mut raw = p.params().clone();
            *raw.field_mut(path)? = v;
            raw.validate()
        })
        .collect()
}

/// One sweep point; `warm` seeds the steady-state solver in
/// self-consistent mode.
pub fn sweep_point(
    pv: &ValidatedParams,
    value: f64,
    s_ref: &ReducedState,
    mode: SweepMode,
    formula: PriceFormula,
    warm: Option<&ReducedState>,
) -> SweepPoint {
    let masses = match mode {
        SweepMode::Frozen => Ok(s_ref.clone()),
        SweepMode::SelfConsistent => solve_steady_state(pv, warm, DEFAULT_TOL).map(|s| s.x),
    };
    let prices = masses.as_ref().map_err(Clone::clone).and_then(|mu| match formula {
        PriceFormula::Display => pricing::display_prices_frozen(pv, mu),
        PriceFormula::Bargain => pricing::bargain_prices_frozen(pv, mu),
    });
    match (masses, prices) {
        (Ok(mu), Ok(pr)) if pr.iter().all(|v| v.is_finite()) => SweepPoint {
            value,
            prices: pr,
            converged: true,
            masses: Some(mu),
        },
        _ => SweepPoint {
            value,
            prices: vec![f64::NAN; pv.k()],
            converged: false,
            masses: None,
        },
    }
}

/// Package independently computed points into a result.
pub fn assemble_sweep(
    p: &ValidatedParams,
    s_ref: &ReducedState,
    param: &str,
    price_index: usize,
    mode: SweepMode,
    formula: PriceFormula,
    points: Vec<SweepPoint>,
) -> Result<SweepResult> {
    let lambda_hat = (0..p.k())
        .map(|j| lambda_hat(p, s_ref, j))
        .collect::<Result<Vec<_>>>()?;
    let mut res = SweepResult {
        param: param.to_string(),
        mode,
        formula,
        price_index,
        points,
        classification: Monotonicity::Constant,
        lambda_hat,
    };
    res.classification = classify_monotonicity(&res);
    Ok(res)
}

/// Sequential sweep. In self-consistent mode each solve is warm-started
/// from the previous converged point when `warm_start` is set.
#[allow(clippy::too_many_arguments)]
pub fn price_sweep(
    p: &ValidatedParams,
    s_ref: &ReducedState,
    param: &str,
    grid: &[f64],
    price_index: usize,
    mode: SweepMode,
    formula: PriceFormula,
    warm_start: bool,
) -> Result<SweepResult> {
    if price_index == 0 || price_index > p.k() {
        return Err(Error::Parameter(format!("price index {price_index} out of range 1..={}", p.k())));
    }
    let params = sweep_params(p, param, grid)?;
    let mut points = Vec::with_capacity(grid.len());
    let mut prev: Option<ReducedState> = None;
    for (pv, &v) in params.iter().zip(grid) {
        let warm = if warm_start { prev.as_ref() } else { None };
        let pt = sweep_point(pv, v, s_ref, mode, formula, warm);
        if pt.converged {
            prev = pt.masses.clone();
        }
        points.push(pt);
    }
    assemble_sweep(p, s_ref, param, price_index, mode, formula, points)
}

/// Sign pattern of successive differences of the tracked price, skipping
/// failed points; steps within [`DEAD_BAND`] are flat.
pub fn classify_monotonicity(s: &SweepResult) -> Monotonicity {
    classify_values(&s.tracked())
}

pub fn classify_values(values: &[f64]) -> Monotonicity {
    let v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    let (mut up, mut down) = (false, false);
    for w in v.windows(2) {
        let d = w[1] - w[0];
        let band = DEAD_BAND * w[0].abs().max(w[1].abs()).max(1.0);
        if d > band {
            up = true;
        } else if d < -band {
            down = true;
        }
    }
    match (up, down) {
        (true, false) => Monotonicity::Increasing,
        (false, true) => Monotonicity::Decreasing,
        (false, false) => Monotonicity::Constant,
        (true, true) => Monotonicity::NonMonotone,
    }
}

/// Sign of ∂P_j/∂λ_i (i ≠ j) across a grid of λ_j values, by central
/// differences of the frozen display price.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossEffectScan {
    pub price_asset: usize,
    pub moved_asset: usize,
    pub grid: Vec<f64>,
    pub derivative: Vec<f64>,
    /// Indices `c` such that the sign flips between grid[c] and grid[c+1].
    pub sign_changes: Vec<usize>,
    pub lambda_hat: LambdaHat,
    /// λ̂ (exact) lies in the grid and a sign change sits within one cell
    /// of it; or λ̂ lies outside the grid and no sign change occurs.
    pub consistent: bool,
}

pub fn cross_effect_scan(
    p: &ValidatedParams,
    mu: &ReducedState,
    j: usize,
    i: usize,
    grid: &[f64],
) -> Result<CrossEffectScan> {
    if i == j || i >= p.k() || j >= p.k() {
        return Err(Error::Parameter(format!(
            "cross effect needs two distinct assets in range (got {} and {})",
            j + 1,
            i + 1
        )));
    }
    let h = 1e-4 * p.lambda[i].max(1.0);
    let params = sweep_params(p, &format!("lambda.{}", j + 1), grid)?;
    let mut derivative = Vec::with_capacity(grid.len());
    for pv in &params {
        let lo = (p.lambda[i] - h).max(0.0);
        let hi = p.lambda[i] + h;
        let at = |l: f64| -> Result<f64> {
            let q = pv.modified(|x| x.lambda[i] = l)?;
            Ok(pricing::display_prices_frozen(&q, mu)?[j])
        };
        derivative.push((at(hi)? - at(lo)?) / (hi - lo));
    }
    let sign_changes: Vec<usize> = derivative
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].signum() != w[1].signum())
        .map(|(c, _)| c)
        .collect();
    let lh = lambda_hat(p, mu, j)?;
    let (g0, g1) = (grid[0], grid[grid.len() - 1]);
    let consistent = match lh.exact {
        Some(l) if l > g0 && l < g1 => sign_changes.len() == 1 && {
            let c = sign_changes[0];
            let cell = grid[1] - grid[0];
            l >= grid[c] - cell && l <= grid[c + 1] + cell
        },
        _ => sign_changes.is_empty(),
    };
    Ok(CrossEffectScan {
        price_asset: j + 1,
        moved_asset: i + 1,
        grid: grid.to_vec(),
        derivative,
        sign_changes,
        lambda_hat: lh,
        consistent,
    })
}

/// Fit `y = (a0 + a1 x + a2 x²)/(1 + b1 x + b2 x²)` through the first five
/// points and return the largest relative miss on the rest.
pub fn rational22_check(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() < 6 || xs.len() != ys.len() {
        return Err(Error::Parameter("rational fit needs at least 6 matching points".into()));
    }
    let s = xs.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let rows: Vec<Vec<f64>> = (0..5)
        .map(|n| {
            let (x, y) = (xs[n] / s, ys[n]);
            vec![1.0, x, x * x, -y * x, -y * x * x]
        })
        .collect();
    let c = linalg::solve(&Mat::from_rows(&rows), &ys[..5])?;
    let eval = |x: f64| {
        let x = x / s;
        (c[0] + c[1] * x + c[2] * x * x) / (1.0 + c[3] * x + c[4] * x * x)
    };
    Ok(xs[5..]
        .iter()
        .zip(&ys[5..])
        .map(|(&x, &y)| (eval(x) - y).abs() / y.abs().max(1e-300))
        .fold(0.0, f64::max))
}
