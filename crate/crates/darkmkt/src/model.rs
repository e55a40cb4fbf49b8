//! Market parameters, validation, and the full/reduced state representations.
//!
//! The reduced state packs the 2K free coordinates as
//! `x = (μ(h1,n), .., μ(hK,n), μ(l1,o), .., μ(lK,o))`. Owner masses `μ(hi,o)`
//! and the pooled low non-owner mass `μ(l,n)` follow from the supply
//! constraints.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exogenous parameters. Rates are per year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(rename = "K")]
    pub k: usize,
    pub lambda: Vec<f64>,
    pub gamma_u: Vec<f64>,
    pub gamma_d: Vec<f64>,
    pub gamma_tilde_u: Vec<f64>,
    pub gamma_tilde_d: Vec<f64>,
    pub m: Vec<f64>,
    pub delta_h: Vec<f64>,
    pub delta_d: Vec<f64>,
    pub q: f64,
    pub r: f64,
}

impl ModelParams {
    /// The two-asset reference market used throughout the test suite.
    pub fn two_asset_reference() -> Self {
        ModelParams {
            k: 2,
            lambda: vec![1250.0, 2000.0],
            gamma_u: vec![5.0, 8.0],
            gamma_d: vec![0.5, 3.0],
            gamma_tilde_u: vec![2.5, 0.4],
            gamma_tilde_d: vec![3.5, 1.5],
            m: vec![0.3, 0.6],
            delta_h: vec![2.5, 3.5],
            delta_d: vec![0.4, 1.5],
            q: 0.5,
            r: 0.05,
        }
    }

    /// K identical copies of one asset; total supply `m_total` is split evenly.
    pub fn symmetric(k: usize, m_total: f64) -> Self {
        ModelParams {
            k,
            lambda: vec![800.0; k],
            gamma_u: vec![4.0; k],
            gamma_d: vec![1.0; k],
            gamma_tilde_u: vec![1.5; k],
            gamma_tilde_d: vec![2.0; k],
            m: vec![m_total / k as f64; k],
            delta_h: vec![2.0; k],
            delta_d: vec![0.6; k],
            q: 0.5,
            r: 0.05,
        }
    }

    /// Random valid parameter set with `k` assets.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Self {
        let m_total = rng.gen_range(0.3..0.95);
        let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..1.0)).collect();
        let ws: f64 = w.iter().sum();
        let delta_h: Vec<f64> = (0..k).map(|_| rng.gen_range(1.0..5.0)).collect();
        ModelParams {
            k,
            lambda: (0..k).map(|_| rng.gen_range(10.0..3000.0)).collect(),
            gamma_u: (0..k).map(|_| rng.gen_range(0.5..10.0)).collect(),
            gamma_d: (0..k).map(|_| rng.gen_range(0.2..5.0)).collect(),
            gamma_tilde_u: (0..k).map(|_| rng.gen_range(0.2..5.0)).collect(),
            gamma_tilde_d: (0..k).map(|_| rng.gen_range(0.2..5.0)).collect(),
            m: w.iter().map(|wi| m_total * wi / ws).collect(),
            delta_d: delta_h.iter().map(|h| h * rng.gen_range(0.05..0.9)).collect(),
            delta_h,
            q: rng.gen_range(0.1..0.9),
            r: rng.gen_range(0.01..0.1),
        }
    }

    /// Mutable access to a parameter by path, e.g. `lambda.2` (1-based) or `q`.
    pub fn field_mut(&mut self, path: &str) -> Result<&mut f64> {
        let (name, idx) = match path.split_once('.') {
            Some((n, i)) => {
                let i: usize = i
                    .parse()
                    .map_err(|_| Error::Parameter(format!("bad index in '{path}'")))?;
                (n, Some(i))
            }
            None => (path, None),
        };
        let k = self.k;
        let vec = match name {
            "q" | "r" => {
                if idx.is_some() {
                    return Err(Error::Parameter(format!("'{name}' is a scalar")));
                }
                return Ok(if name == "q" { &mut self.q } else { &mut self.r });
            }
            "lambda" => &mut self.lambda,
            "gamma_u" => &mut self.gamma_u,
            "gamma_d" => &mut self.gamma_d,
            "gamma_tilde_u" => &mut self.gamma_tilde_u,
            "gamma_tilde_d" => &mut self.gamma_tilde_d,
            "m" => &mut self.m,
            "delta_h" => &mut self.delta_h,
            "delta_d" => &mut self.delta_d,
            _ => return Err(Error::Parameter(format!("unknown parameter '{name}'"))),
        };
        match idx {
            Some(i) if (1..=k).contains(&i) && i <= vec.len() => Ok(&mut vec[i - 1]),
            Some(i) => Err(Error::Parameter(format!(
                "index {i} out of range 1..={k} for '{name}'"
            ))),
            None => Err(Error::Parameter(format!("'{name}' needs an asset index"))),
        }
    }

    pub fn validate(self) -> Result<ValidatedParams> {
        validate(self)
    }
}

/// Parameters that passed validation, with the aggregate rates attached.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedParams {
    params: ModelParams,
    gamma: Vec<f64>,
    gamma_tilde: Vec<f64>,
    m_total: f64,
}

impl ValidatedParams {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn into_params(self) -> ModelParams {
        self.params
    }
    /// γ_i = γ_ui + γ_di
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }
    /// γ̃_i = γ̃_ui + γ̃_di
    pub fn gamma_tilde(&self) -> &[f64] {
        &self.gamma_tilde
    }
    /// Σ m_i
    pub fn m_total(&self) -> f64 {
        self.m_total
    }
    pub fn k(&self) -> usize {
        self.params.k
    }
    /// Clone, apply `f` to the raw parameters, and validate again.
    pub fn modified(&self, f: impl FnOnce(&mut ModelParams)) -> Result<ValidatedParams> {
        let mut p = self.params.clone();
        f(&mut p);
        validate(p)
    }
}

impl std::ops::Deref for ValidatedParams {
    type Target = ModelParams;
    fn deref(&self) -> &ModelParams {
        &self.params
    }
}

/// Check every invariant and report all violations at once.
///
/// Meeting intensities may be zero (the no-trade market); every other rate
/// must be strictly positive.
pub fn validate(p: ModelParams) -> Result<ValidatedParams> {
    let mut errs = Vec::new();
    let k = p.k;
    if k == 0 {
        errs.push("K must be at least 1".to_string());
    }
    let vectors: [(&str, &Vec<f64>); 8] = [
        ("lambda", &p.lambda),
        ("gamma_u", &p.gamma_u),
        ("gamma_d", &p.gamma_d),
        ("gamma_tilde_u", &p.gamma_tilde_u),
        ("gamma_tilde_d", &p.gamma_tilde_d),
        ("m", &p.m),
        ("delta_h", &p.delta_h),
        ("delta_d", &p.delta_d),
    ];
    let mut lengths_ok = true;
    for (name, v) in vectors.iter() {
        if v.len() != k {
            errs.push(format!("length of {name} is {}, expected K = {k}", v.len()));
            lengths_ok = false;
        }
    }
    if lengths_ok {
        for i in 0..k {
            let a = i + 1;
            let l = p.lambda[i];
            if !(l.is_finite() && l >= 0.0) {
                errs.push(format!("lambda for asset {a} must be finite and >= 0"));
            }
            for (name, v) in [
                ("gamma_u", &p.gamma_u),
                ("gamma_d", &p.gamma_d),
                ("gamma_tilde_u", &p.gamma_tilde_u),
                ("gamma_tilde_d", &p.gamma_tilde_d),
            ] {
                if !(v[i].is_finite() && v[i] > 0.0) {
                    errs.push(format!("{name} for asset {a} must be finite and > 0"));
                }
            }
            if !(p.m[i] > 0.0 && p.m[i] < 1.0) {
                errs.push(format!("m for asset {a} outside (0,1)"));
            }
            if !(p.delta_d[i].is_finite() && p.delta_d[i] > 0.0) {
                errs.push(format!("delta_d for asset {a} must be finite and > 0"));
            }
            if !p.delta_h[i].is_finite() || p.delta_d[i] >= p.delta_h[i] {
                errs.push(format!("delta_d >= delta_h for asset {a}"));
            }
        }
        let m_total: f64 = p.m.iter().sum();
        if !(m_total < 1.0) {
            errs.push(format!("sum of m not < 1 (got {m_total})"));
        }
    }
    if !(p.q > 0.0 && p.q < 1.0) {
        errs.push(format!("q outside (0,1) (got {})", p.q));
    }
    if !(p.r.is_finite() && p.r > 0.0) {
        errs.push(format!("r must be finite and > 0 (got {})", p.r));
    }
    if !errs.is_empty() {
        return Err(Error::Validation(errs));
    }
    let gamma = (0..k).map(|i| p.gamma_u[i] + p.gamma_d[i]).collect();
    let gamma_tilde = (0..k)
        .map(|i| p.gamma_tilde_u[i] + p.gamma_tilde_d[i])
        .collect();
    let m_total = p.m.iter().sum();
    Ok(ValidatedParams {
        params: p,
        gamma,
        gamma_tilde,
        m_total,
    })
}

/// Buyer masses `μ(hi,n)` followed by seller masses `μ(li,o)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub x: Vec<f64>,
}

impl ReducedState {
    pub fn new(x: Vec<f64>) -> Self {
        ReducedState { x }
    }
    pub fn from_parts(buyers: &[f64], sellers: &[f64]) -> Self {
        let mut x = buyers.to_vec();
        x.extend_from_slice(sellers);
        ReducedState { x }
    }
    pub fn k(&self) -> usize {
        self.x.len() / 2
    }
    /// μ(hi,n), 0-based asset index.
    pub fn buyer(&self, i: usize) -> f64 {
        self.x[i]
    }
    /// μ(li,o), 0-based asset index.
    pub fn seller(&self, i: usize) -> f64 {
        self.x[self.k() + i]
    }
    pub fn buyers(&self) -> &[f64] {
        &self.x[..self.k()]
    }
    pub fn sellers(&self) -> &[f64] {
        &self.x[self.k()..]
    }
    /// μ(l,n) = 1 − m − Σ μ(hi,n)
    pub fn low_non_owners(&self, p: &ValidatedParams) -> f64 {
        1.0 - p.m_total() - self.buyers().iter().sum::<f64>()
    }

    /// Range check with slack `tol`; names the first offending component.
    pub fn check_feasible(&self, p: &ValidatedParams, tol: f64) -> Result<()> {
        let k = p.k();
        if self.x.len() != 2 * k {
            return Err(Error::Range(format!(
                "state has {} components, expected {}",
                self.x.len(),
                2 * k
            )));
        }
        for i in 0..k {
            let b = self.buyer(i);
            if !(b >= -tol) {
                return Err(Error::Range(format!("mu(h{},n) = {b} is negative", i + 1)));
            }
            let s = self.seller(i);
            if !(s >= -tol && s <= p.m[i] + tol) {
                return Err(Error::Range(format!(
                    "mu(l{},o) = {s} outside [0, m_{}]",
                    i + 1,
                    i + 1
                )));
            }
        }
        let ln = self.low_non_owners(p);
        if !(ln >= -tol) {
            return Err(Error::Range(format!("mu(l,n) = {ln} is negative")));
        }
        Ok(())
    }
}

/// All 3K+1 occupation measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub mu_hn: Vec<f64>,
    pub mu_lo: Vec<f64>,
    pub mu_ho: Vec<f64>,
    pub mu_ln: f64,
}

impl FullState {
    /// Flattened as `(hn.., lo.., ho.., ln)`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.mu_hn.clone();
        v.extend_from_slice(&self.mu_lo);
        v.extend_from_slice(&self.mu_ho);
        v.push(self.mu_ln);
        v
    }
}

pub fn reduced_to_full(x: &ReducedState, p: &ValidatedParams) -> Result<FullState> {
    x.check_feasible(p, 0.0)?;
    let k = p.k();
    Ok(FullState {
        mu_hn: x.buyers().to_vec(),
        mu_lo: x.sellers().to_vec(),
        mu_ho: (0..k).map(|i| p.m[i] - x.seller(i)).collect(),
        mu_ln: x.low_non_owners(p),
    })
}

/// Tolerance on the supply constraints when leaving the full space.
pub const CONSTRAINT_TOL: f64 = 1e-12;

pub fn full_to_reduced(mu: &FullState, p: &ValidatedParams) -> Result<ReducedState> {
    let k = p.k();
    if mu.mu_hn.len() != k || mu.mu_lo.len() != k || mu.mu_ho.len() != k {
        return Err(Error::Range(format!("full state does not have K = {k} assets")));
    }
    for i in 0..k {
        let dev = mu.mu_ho[i] + mu.mu_lo[i] - p.m[i];
        if dev.abs() > CONSTRAINT_TOL {
            return Err(Error::Constraint(format!(
                "owner masses of asset {} miss m_{} by {dev:e}",
                i + 1,
                i + 1
            )));
        }
    }
    let total = p.m_total() + mu.mu_hn.iter().sum::<f64>() + mu.mu_ln;
    if (total - 1.0).abs() > CONSTRAINT_TOL {
        return Err(Error::Constraint(format!(
            "non-owner masses miss the population total by {:e}",
            total - 1.0
        )));
    }
    let all = mu.to_vec();
    if let Some(v) = all.iter().find(|v| **v < -CONSTRAINT_TOL) {
        return Err(Error::Constraint(format!("negative occupation measure {v}")));
    }
    Ok(ReducedState::from_parts(&mu.mu_hn, &mu.mu_lo))
}
