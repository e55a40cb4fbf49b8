//! Finite-population event-driven simulation of the market.
//!
//! Agents are tracked only through counts per state. Events fire with
//! aggregate rates (exact Gillespie):
//!
//! | event | rate |
//! |---|---|
//! | (l,n) → (hi,n) | γ̃_ui · #(l,n) |
//! | (hi,n) → (l,n) | γ̃_di · #(hi,n) |
//! | (li,o) → (hi,o) | γ_ui · #(li,o) |
//! | (hi,o) → (li,o) | γ_di · #(hi,o) |
//! | (hi,n) + (li,o) → (hi,o) + (l,n) | λ_i · #(hi,n) · #(li,o) / N |

use std::hash::{DefaultHasher, Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equilibrium::SteadyState;
use crate::error::{Error, Result};
use crate::model::{ReducedState, ValidatedParams};
use crate::pricing;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentState {
    LowNonOwner,
    HighNonOwner(usize),
    HighOwner(usize),
    LowOwner(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopulationCounts {
    pub hi_n: Vec<u64>,
    pub li_o: Vec<u64>,
    pub hi_o: Vec<u64>,
    pub l_n: u64,
}

impl PopulationCounts {
    /// Owners of asset i start as high types, everyone else as (l,n).
    pub fn initial(p: &ValidatedParams, n_agents: u64) -> Result<Self> {
        let owners: Vec<u64> = p.m.iter().map(|m| (n_agents as f64 * m).round() as u64).collect();
        if let Some(i) = owners.iter().position(|&o| o == 0) {
            return Err(Error::Simulation(format!(
                "N = {n_agents} gives no owners of asset {}",
                i + 1
            )));
        }
        let total: u64 = owners.iter().sum();
        if total > n_agents {
            return Err(Error::Simulation(format!(
                "N = {n_agents} cannot hold {total} owners"
            )));
        }
        let k = p.k();
        Ok(PopulationCounts {
            hi_n: vec![0; k],
            li_o: vec![0; k],
            hi_o: owners,
            l_n: n_agents - total,
        })
    }

    pub fn total(&self) -> u64 {
        self.hi_n.iter().chain(&self.li_o).chain(&self.hi_o).sum::<u64>() + self.l_n
    }

    pub fn count(&self, s: AgentState) -> u64 {
        match s {
            AgentState::LowNonOwner => self.l_n,
            AgentState::HighNonOwner(i) => self.hi_n[i],
            AgentState::HighOwner(i) => self.hi_o[i],
            AgentState::LowOwner(i) => self.li_o[i],
        }
    }

    /// Counts in the order `hi_n.., li_o.., hi_o.., l_n`.
    pub fn as_vec(&self) -> Vec<f64> {
        self.hi_n
            .iter()
            .chain(&self.li_o)
            .chain(&self.hi_o)
            .map(|&c| c as f64)
            .chain(std::iter::once(self.l_n as f64))
            .collect()
    }
}

/// CSV header for a K-asset series.
pub fn series_header(k: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=k).map(|i| format!("h{i}_n")));
    h.extend((1..=k).map(|i| format!("l{i}_o")));
    h.extend((1..=k).map(|i| format!("h{i}_o")));
    h.push("l_n".into());
    h
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AbmRun {
    pub n_agents: u64,
    pub seed: u64,
    pub times: Vec<f64>,
    /// Proportions at each sample time, layout as [`series_header`].
    pub proportions: Vec<Vec<f64>>,
    /// ∫ proportions dt from 0 to each sample time.
    pub occupation: Vec<Vec<f64>>,
    /// Trades of each asset up to each sample time.
    pub trades: Vec<Vec<u64>>,
    pub events: u64,
    /// Hash of the full (channel, time) event log.
    pub event_hash: u64,
    pub final_counts: PopulationCounts,
}

#[derive(Clone, Copy)]
enum Channel {
    SwitchIn(usize),
    SwitchOut(usize),
    OwnerUp(usize),
    OwnerDown(usize),
    Trade(usize),
}

fn channel(c: usize, k: usize) -> Channel {
    let (kind, i) = (c / k, c % k);
    match kind {
        0 => Channel::SwitchIn(i),
        1 => Channel::SwitchOut(i),
        2 => Channel::OwnerUp(i),
        3 => Channel::OwnerDown(i),
        _ => Channel::Trade(i),
    }
}

fn rates(p: &ValidatedParams, c: &PopulationCounts, n: f64, out: &mut [f64]) {
    let k = p.k();
    for i in 0..k {
        out[i] = p.gamma_tilde_u[i] * c.l_n as f64;
        out[k + i] = p.gamma_tilde_d[i] * c.hi_n[i] as f64;
        out[2 * k + i] = p.gamma_u[i] * c.li_o[i] as f64;
        out[3 * k + i] = p.gamma_d[i] * c.hi_o[i] as f64;
        out[4 * k + i] = p.lambda[i] * c.hi_n[i] as f64 * c.li_o[i] as f64 / n;
    }
}

fn apply(c: &mut PopulationCounts, ch: Channel) {
    match ch {
        Channel::SwitchIn(i) => {
            c.l_n -= 1;
            c.hi_n[i] += 1;
        }
        Channel::SwitchOut(i) => {
            c.hi_n[i] -= 1;
            c.l_n += 1;
        }
        Channel::OwnerUp(i) => {
            c.li_o[i] -= 1;
            c.hi_o[i] += 1;
        }
        Channel::OwnerDown(i) => {
            c.hi_o[i] -= 1;
            c.li_o[i] += 1;
        }
        Channel::Trade(i) => {
            c.hi_n[i] -= 1;
            c.li_o[i] -= 1;
            c.hi_o[i] += 1;
            c.l_n += 1;
        }
    }
}

/// Run one replicate from the initial population up to `t_max`, sampling
/// every `sample_dt`.
pub fn simulate(p: &ValidatedParams, n_agents: u64, t_max: f64, seed: u64, sample_dt: f64) -> Result<AbmRun> {
    if !(t_max > 0.0 && t_max.is_finite()) || !(sample_dt > 0.0 && sample_dt <= t_max) {
        return Err(Error::Parameter(format!(
            "need 0 < sample_dt <= t_max (got {sample_dt}, {t_max})"
        )));
    }
    let k = p.k();
    let mut counts = PopulationCounts::initial(p, n_agents)?;
    let n = n_agents as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hasher = DefaultHasher::new();
    let mut r = vec![0.0; 5 * k];
    let n_samples = (t_max / sample_dt + 1e-9).floor() as usize;
    let sample_time = |s: usize| if s == n_samples { t_max } else { s as f64 * sample_dt };

    let mut times = vec![0.0];
    let mut proportions = vec![counts.as_vec().iter().map(|c| c / n).collect::<Vec<_>>()];
    let mut occupation = vec![vec![0.0; 3 * k + 1]];
    let mut trades = vec![vec![0u64; k]];
    let mut integral = vec![0.0; 3 * k + 1];
    let mut traded = vec![0u64; k];
    let mut next = 1;
    let mut t = 0.0;
    let mut events = 0u64;

    // advance the running integral to time `to` under the current counts
    let accumulate = |integral: &mut [f64], counts: &PopulationCounts, dt: f64| {
        for (acc, c) in integral.iter_mut().zip(counts.as_vec()) {
            *acc += c / n * dt;
        }
    };

    loop {
        rates(p, &counts, n, &mut r);
        let total: f64 = r.iter().sum();
        let wait = if total > 0.0 {
            -(1.0 - rng.gen::<f64>()).ln() / total
        } else {
            f64::INFINITY
        };
        let t_event = t + wait;
        while next <= n_samples && sample_time(next) <= t_event {
            let ts = sample_time(next);
            accumulate(&mut integral, &counts, ts - t);
            t = ts;
            times.push(ts);
            proportions.push(counts.as_vec().iter().map(|c| c / n).collect());
            occupation.push(integral.clone());
            trades.push(traded.clone());
            next += 1;
        }
        if next > n_samples {
            break;
        }
        accumulate(&mut integral, &counts, t_event - t);
        t = t_event;
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut c = r.len() - 1;
        for (j, v) in r.iter().enumerate() {
            acc += v;
            if target < acc {
                c = j;
                break;
            }
        }
        while r[c] == 0.0 {
            c -= 1;
        }
        let ch = channel(c, k);
        apply(&mut counts, ch);
        if let Channel::Trade(i) = ch {
            traded[i] += 1;
        }
        (c as u32, t.to_bits()).hash(&mut hasher);
        events += 1;
    }
    debug_assert_eq!(counts.total(), n_agents);
    Ok(AbmRun {
        n_agents,
        seed,
        times,
        proportions,
        occupation,
        trades,
        events,
        event_hash: hasher.finish(),
        final_counts: counts,
    })
}

impl AbmRun {
    fn index_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s < t - 1e-12).min(self.times.len() - 1)
    }

    /// Exact time average of each proportion over `[from, end]`.
    pub fn tail_average(&self, from: f64) -> Result<Vec<f64>> {
        let a = self.index_at(from);
        let b = self.times.len() - 1;
        let span = self.times[b] - self.times[a];
        if !(span > 0.0) {
            return Err(Error::Parameter(format!("burn-in {from} leaves no data")));
        }
        Ok(self.occupation[b]
            .iter()
            .zip(&self.occupation[a])
            .map(|(x, y)| (x - y) / span)
            .collect())
    }

    /// Mean and batch-means standard error of each proportion over
    /// `[from, end]`, using `batches` equal slices.
    pub fn tail_mean_and_se(&self, from: f64, batches: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let a = self.index_at(from);
        let b = self.times.len() - 1;
        if batches < 2 || b - a < batches {
            return Err(Error::Parameter("not enough samples for batch means".into()));
        }
        let width = (b - a) / batches;
        let dim = self.occupation[0].len();
        let mut means = vec![Vec::with_capacity(batches); dim];
        for j in 0..batches {
            let (s, e) = (a + j * width, a + (j + 1) * width);
            let span = self.times[e] - self.times[s];
            for (c, m) in means.iter_mut().enumerate() {
                m.push((self.occupation[e][c] - self.occupation[s][c]) / span);
            }
        }
        let bf = batches as f64;
        let mean: Vec<f64> = means.iter().map(|m| m.iter().sum::<f64>() / bf).collect();
        let se = means
            .iter()
            .zip(&mean)
            .map(|(m, mu)| (m.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (bf - 1.0) / bf).sqrt())
            .collect();
        Ok((mean, se))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanFieldComparison {
    /// Tail averages of (h,n) and (l,o) proportions, buyers first.
    pub tail: ReducedState,
    pub distance: Vec<f64>,
    pub sup_distance: f64,
    /// Little's-law seller waiting time in days over the tail.
    pub time_to_sale_days: Vec<Option<f64>>,
    pub meanfield_days: Vec<Option<f64>>,
    pub timing_relative_error: Vec<Option<f64>>,
}

pub fn compare_to_meanfield(
    run: &AbmRun,
    p: &ValidatedParams,
    s: &SteadyState,
    burn_in: f64,
    days_per_year: f64,
) -> Result<MeanFieldComparison> {
    let k = p.k();
    let avg = run.tail_average(burn_in)?;
    let tail = ReducedState::new(avg[..2 * k].to_vec());
    let distance: Vec<f64> = tail.x.iter().zip(&s.x.x).map(|(a, b)| (a - b).abs()).collect();
    let sup = distance.iter().copied().fold(0.0, f64::max);
    let a = run.index_at(burn_in);
    let b = run.times.len() - 1;
    let time_to_sale_days: Vec<Option<f64>> = (0..k)
        .map(|i| {
            let sold = run.trades[b][i] - run.trades[a][i];
            let waiting = (run.occupation[b][k + i] - run.occupation[a][k + i]) * run.n_agents as f64;
            (sold > 0).then(|| days_per_year * waiting / sold as f64)
        })
        .collect();
    let meanfield_days = pricing::seller_timing(p, &s.x, days_per_year).days;
    let timing_relative_error = time_to_sale_days
        .iter()
        .zip(&meanfield_days)
        .map(|(a, b)| match (a, b) {
            (Some(a), Some(b)) => Some((a - b).abs() / b),
            _ => None,
        })
        .collect();
    Ok(MeanFieldComparison {
        tail,
        distance,
        sup_distance: sup,
        time_to_sale_days,
        meanfield_days,
        timing_relative_error,
    })
}
