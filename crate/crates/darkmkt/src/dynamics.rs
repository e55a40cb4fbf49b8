//! Vector fields of the occupation-measure dynamics and an RK4 integrator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FullState, ReducedState, ValidatedParams};

/// Reduced 2K-dimensional field: buyer components first, then sellers.
pub fn reduced_rhs(x: &ReducedState, p: &ValidatedParams) -> Vec<f64> {
    let mut out = vec![0.0; x.x.len()];
    reduced_rhs_into(&x.x, p, &mut out);
    out
}

fn reduced_rhs_into(x: &[f64], p: &ValidatedParams, out: &mut [f64]) {
    let k = p.k();
    let free = 1.0 - p.m_total();
    let total: f64 = x[..k].iter().sum();
    for i in 0..k {
        let b = x[i];
        let s = x[k + i];
        let trade = p.lambda[i] * b * s;
        let others = total - b;
        out[i] = -trade - p.gamma_tilde()[i] * b - p.gamma_tilde_u[i] * others
            + p.gamma_tilde_u[i] * free;
        out[k + i] = -trade - p.gamma()[i] * s + p.gamma_d[i] * p.m[i];
    }
}

/// Time derivative of the full state, component by component.
pub fn full_rhs(mu: &FullState, p: &ValidatedParams) -> FullState {
    let k = p.k();
    let mut d = FullState {
        mu_hn: vec![0.0; k],
        mu_lo: vec![0.0; k],
        mu_ho: vec![0.0; k],
        mu_ln: 0.0,
    };
    for i in 0..k {
        let trade = p.lambda[i] * mu.mu_hn[i] * mu.mu_lo[i];
        d.mu_hn[i] = -trade + p.gamma_tilde_u[i] * mu.mu_ln - p.gamma_tilde_d[i] * mu.mu_hn[i];
        d.mu_ho[i] = trade + p.gamma_u[i] * mu.mu_lo[i] - p.gamma_d[i] * mu.mu_ho[i];
        d.mu_lo[i] = -trade - p.gamma_u[i] * mu.mu_lo[i] + p.gamma_d[i] * mu.mu_ho[i];
        d.mu_ln += trade - p.gamma_tilde_u[i] * mu.mu_ln + p.gamma_tilde_d[i] * mu.mu_hn[i];
    }
    d
}

/// Sampled solution path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ReducedState>,
}

impl Trajectory {
    pub fn last(&self) -> &ReducedState {
        self.states.last().expect("trajectory is never empty")
    }

    /// CSV with header `t,mu_h1n,..,mu_hKn,mu_l1o,..,mu_lKo`.
    pub fn csv_header(k: usize) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((1..=k).map(|i| format!("mu_h{i}n")));
        h.extend((1..=k).map(|i| format!("mu_l{i}o")));
        h
    }
}

/// Lowest value a coordinate may reach before the run is declared unstable.
pub const UNDERSHOOT_TOL: f64 = 1e-9;

/// Fixed-step classical Runge–Kutta. Every step is stored; the final time
/// is the first multiple of `dt` at or beyond `t_max`.
pub fn integrate(x0: &ReducedState, p: &ValidatedParams, dt: f64, t_max: f64) -> Result<Trajectory> {
    integrate_sampled(x0, p, dt, t_max, 1)
}

/// As [`integrate`], keeping every `stride`-th step (and always the last).
pub fn integrate_sampled(
    x0: &ReducedState,
    p: &ValidatedParams,
    dt: f64,
    t_max: f64,
    stride: usize,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::Parameter(format!("need dt > 0 and t_max > 0 (dt {dt}, t_max {t_max})")));
    }
    x0.check_feasible(p, 0.0)?;
    let n = x0.x.len();
    let steps = (t_max / dt - 1e-9).ceil().max(1.0) as usize;
    let stride = stride.max(1);
    let mut x = x0.x.clone();
    let mut times = vec![0.0];
    let mut states = vec![x0.clone()];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for step in 1..=steps {
        reduced_rhs_into(&x, p, &mut k1);
        for j in 0..n {
            tmp[j] = x[j] + 0.5 * dt * k1[j];
        }
        reduced_rhs_into(&tmp, p, &mut k2);
        for j in 0..n {
            tmp[j] = x[j] + 0.5 * dt * k2[j];
        }
        reduced_rhs_into(&tmp, p, &mut k3);
        for j in 0..n {
            tmp[j] = x[j] + dt * k3[j];
        }
        reduced_rhs_into(&tmp, p, &mut k4);
        for j in 0..n {
            x[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let t = step as f64 * dt;
        if let Some(j) = x.iter().position(|v| !v.is_finite() || *v < -UNDERSHOOT_TOL || *v > 1.0 + 1e-6) {
            return Err(Error::BlowUp {
                t,
                detail: format!("component {j} = {}", x[j]),
            });
        }
        if step % stride == 0 || step == steps {
            times.push(t);
            states.push(ReducedState::new(x.clone()));
        }
    }
    Ok(Trajectory { times, states })
}
