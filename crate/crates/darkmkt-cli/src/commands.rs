use std::fs;
use std::path::Path;
use std::time::Instant;

use darkmkt::abm;
use darkmkt::dynamics::{self, Trajectory};
use darkmkt::equilibrium::{self, solve_steady_state, SteadyState, DEFAULT_TOL};
use darkmkt::model::{reduced_to_full, ModelParams, ReducedState, ValidatedParams};
use darkmkt::pricing;
use darkmkt::stability;
use darkmkt::statics::{self, LimitKind, PriceFormula, SweepMode, SweepPoint};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};
use crate::output::{fmt_num, write_csv, write_json, write_text};
use crate::{report, Cli, Command};

pub fn load_params(path: &Path) -> CliResult<ValidatedParams> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let raw: ModelParams = serde_json::from_str(&text).map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    Ok(raw.validate()?)
}

fn masses_or_solve(p: &ValidatedParams, masses: &Option<Vec<f64>>) -> CliResult<ReducedState> {
    match masses {
        Some(v) => {
            if v.len() != 2 * p.k() {
                return Err(CliError::Usage(format!(
                    "--masses needs 2K = {} values, got {}",
                    2 * p.k(),
                    v.len()
                )));
            }
            Ok(ReducedState::new(v.clone()))
        }
        None => Ok(solve_steady_state(p, None, DEFAULT_TOL)?.x),
    }
}

fn pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::Usage(format!("grid '{s}' is not start:stop:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    Ok(statics::linear_grid(start, stop, count)?)
}

fn named(prefix: &str, values: impl IntoIterator<Item = f64>) -> Value {
    let mut m = Map::new();
    for (i, v) in values.into_iter().enumerate() {
        m.insert(format!("{prefix}_{}", i + 1), json!(v));
    }
    Value::Object(m)
}

fn log(cli: &Cli, msg: impl AsRef<str>) {
    if cli.verbose {
        eprintln!("{}", msg.as_ref());
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let started = Instant::now();
    let res = match &cli.command {
        Command::Solve { io, tol, uniqueness_starts } => {
            let p = load_params(&io.config)?;
            solve(cli, &p, *tol, *uniqueness_starts, io.out.as_deref())
        }
        Command::Simulate { io, dt, t_max, stride, x0 } => {
            let p = load_params(&io.config)?;
            let x0 = ReducedState::new(x0.clone().unwrap_or_else(|| vec![0.0; 2 * p.k()]));
            if x0.x.len() != 2 * p.k() {
                return Err(CliError::Usage(format!("--x0 needs 2K = {} values", 2 * p.k())));
            }
            let tr = dynamics::integrate_sampled(&x0, &p, *dt, *t_max, *stride)?;
            let rows = tr.times.iter().zip(&tr.states).map(|(t, s)| {
                std::iter::once(*t).chain(s.x.iter().copied()).map(fmt_num).collect()
            });
            write_csv(&Trajectory::csv_header(p.k()), rows, io.out.as_deref())
        }
        Command::Stability { io, eps_frac } => {
            let p = load_params(&io.config)?;
            let s = solve_steady_state(&p, None, DEFAULT_TOL)?;
            let cert = stability::certify(s, &p, *eps_frac)?;
            for n in &cert.notes {
                eprintln!("note: {n}");
            }
            write_json(&cert, io.out.as_deref())
        }
        Command::Price { io, masses, q_hat, days_per_year } => {
            let p = load_params(&io.config)?;
            let mu = masses_or_solve(&p, masses)?;
            price(&p, &mu, *q_hat, *days_per_year, io.out.as_deref())
        }
        Command::Sweep {
            io,
            param,
            grid,
            price,
            mode,
            formula,
            warm_start,
            masses,
            summary,
        } => {
            let p = load_params(&io.config)?;
            let grid = parse_grid(grid)?;
            let mode: SweepMode = mode.parse()?;
            let formula: PriceFormula = formula.parse()?;
            let s_ref = masses_or_solve(&p, masses)?;
            sweep(cli, &p, &s_ref, param, &grid, *price, mode, formula, *warm_start, io.out.as_deref(), summary.as_deref())
        }
        Command::Limits { io, kind, masses } => {
            let p = load_params(&io.config)?;
            let mu = masses_or_solve(&p, masses)?;
            limits(&p, &mu, kind, io.out.as_deref())
        }
        Command::Abm {
            io,
            agents,
            t_max,
            sample_dt,
            burn_in,
            replicates,
            summary,
        } => {
            let p = load_params(&io.config)?;
            abm_cmd(cli, &p, *agents, *t_max, *sample_dt, *burn_in, *replicates, io.out.as_deref(), summary.as_deref())
        }
        Command::Report { io } => {
            let p = load_params(&io.config)?;
            let text = report::build(&p)?;
            write_text(&text, io.out.as_deref())
        }
    };
    log(cli, format!("finished in {:?}", started.elapsed()));
    res
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    steady_state: &'a SteadyState,
    buyers: &'a [f64],
    sellers: &'a [f64],
    full: darkmkt::FullState,
    #[serde(skip_serializing_if = "Option::is_none")]
    quartic: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    uniqueness: Option<equilibrium::UniquenessReport>,
}

fn solve(cli: &Cli, p: &ValidatedParams, tol: f64, starts: usize, out: Option<&Path>) -> CliResult<()> {
    let s = solve_steady_state(p, None, tol)?;
    log(cli, format!("{:?} converged in {} iterations", s.method, s.iterations));
    let full = reduced_to_full(&s.x, p)?;
    let quartic = if p.k() == 2 {
        let c = equilibrium::k2_quartic(p)?;
        let root = equilibrium::k2_quartic_state(p).ok().map(|x| x.x[0]);
        Some(json!({
            "coefficients": c.as_array(),
            "real_roots": c.real_roots(),
            "feasible_root": root,
        }))
    } else {
        None
    };
    let uniqueness = (starts > 0).then(|| equilibrium::verify_uniqueness_scan(p, starts, cli.seed));
    write_json(
        &SolveOutput {
            steady_state: &s,
            buyers: s.x.buyers(),
            sellers: s.x.sellers(),
            full,
            quartic,
            uniqueness,
        },
        out,
    )
}

fn price(p: &ValidatedParams, mu: &ReducedState, q_hat: Option<f64>, days: f64, out: Option<&Path>) -> CliResult<()> {
    let rep = pricing::equilibrium_prices(p, mu, q_hat, days)?;
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    let mut top = named("P", rep.assets.iter().map(|a| a.price));
    let obj = top.as_object_mut().expect("object");
    obj.insert("bargain".into(), named("P", rep.assets.iter().map(|a| a.price_bargain)));
    obj.insert("delta_l".into(), json!(rep.assets.iter().map(|a| a.delta_l).collect::<Vec<_>>()));
    obj.insert("delta_h".into(), json!(rep.assets.iter().map(|a| a.delta_h).collect::<Vec<_>>()));
    obj.insert("timing_days".into(), json!(rep.timing.days));
    obj.insert("details".into(), serde_json::to_value(&rep).map_err(|e| CliError::Usage(e.to_string()))?);
    write_json(&top, out)
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    cli: &Cli,
    p: &ValidatedParams,
    s_ref: &ReducedState,
    param: &str,
    grid: &[f64],
    price_index: usize,
    mode: SweepMode,
    formula: PriceFormula,
    warm_start: bool,
    out: Option<&Path>,
    summary: Option<&Path>,
) -> CliResult<()> {
    let res = if mode == SweepMode::SelfConsistent && warm_start {
        statics::price_sweep(p, s_ref, param, grid, price_index, mode, formula, true)?
    } else {
        if price_index == 0 || price_index > p.k() {
            return Err(CliError::Usage(format!("--price {price_index} out of range 1..={}", p.k())));
        }
        let params = statics::sweep_params(p, param, grid)?;
        let points: Vec<SweepPoint> = pool(cli.jobs)?.install(|| {
            params
                .par_iter()
                .zip(grid.par_iter())
                .map(|(pv, &v)| statics::sweep_point(pv, v, s_ref, mode, formula, None))
                .collect()
        });
        statics::assemble_sweep(p, s_ref, param, price_index, mode, formula, points)?
    };
    let failed = res.points.iter().filter(|p| !p.converged).count();
    if failed > 0 {
        eprintln!("warning: {failed} grid points failed");
    }
    log(cli, format!("classification of P_{price_index}: {:?}", res.classification));
    let mut header = vec!["param_value".to_string()];
    header.extend((1..=p.k()).map(|i| format!("P_{i}")));
    header.push("converged".into());
    let rows = res.points.iter().map(|pt| {
        let mut r = vec![fmt_num(pt.value)];
        r.extend(pt.prices.iter().map(|v| fmt_num(*v)));
        r.push(pt.converged.to_string());
        r
    });
    write_csv(&header, rows, out)?;
    if let Some(path) = summary {
        write_json(&res, Some(path))?;
    }
    Ok(())
}

fn limits(p: &ValidatedParams, mu: &ReducedState, kind: &str, out: Option<&Path>) -> CliResult<()> {
    let kinds: Vec<&str> = if kind == "all" {
        vec!["gamma_u", "gamma_d", "gamma_tilde_d", "lambda", "gamma_tilde_u"]
    } else {
        vec![kind]
    };
    let mut m = Map::new();
    for k in kinds {
        let v = if k == "gamma_tilde_u" {
            serde_json::to_value(statics::gamma_tilde_u_path_dependence(p, mu)?)
        } else {
            let lk: LimitKind = k.parse()?;
            serde_json::to_value(statics::limit(lk, p, mu)?)
        };
        m.insert(k.to_string(), v.map_err(|e| CliError::Usage(e.to_string()))?);
    }
    let hats = (0..p.k())
        .map(|j| statics::lambda_hat(p, mu, j))
        .collect::<darkmkt::Result<Vec<_>>>()?;
    m.insert("lambda_hat".into(), serde_json::to_value(hats).map_err(|e| CliError::Usage(e.to_string()))?);
    write_json(&Value::Object(m), out)
}

#[allow(clippy::too_many_arguments)]
fn abm_cmd(
    cli: &Cli,
    p: &ValidatedParams,
    agents: u64,
    t_max: f64,
    sample_dt: f64,
    burn_in: f64,
    replicates: u64,
    out: Option<&Path>,
    summary: Option<&Path>,
) -> CliResult<()> {
    if replicates == 0 {
        return Err(CliError::Usage("--replicates must be at least 1".into()));
    }
    let runs: Vec<darkmkt::Result<abm::AbmRun>> = pool(cli.jobs)?.install(|| {
        (0..replicates)
            .into_par_iter()
            .map(|r| abm::simulate(p, agents, t_max, cli.seed + r, sample_dt))
            .collect()
    });
    let runs = runs.into_iter().collect::<darkmkt::Result<Vec<_>>>()?;
    let first = &runs[0];
    log(cli, format!("{} events, hash {:016x}", first.events, first.event_hash));
    let rows = first.times.iter().zip(&first.proportions).map(|(t, row)| {
        std::iter::once(*t).chain(row.iter().copied()).map(fmt_num).collect()
    });
    write_csv(&abm::series_header(p.k()), rows, out)?;
    if let Some(path) = summary {
        let s = solve_steady_state(p, None, DEFAULT_TOL)?;
        let mut reps = Vec::new();
        for run in &runs {
            let cmp = abm::compare_to_meanfield(run, p, &s, burn_in, pricing::DAYS_PER_YEAR)?;
            reps.push(json!({
                "seed": run.seed,
                "events": run.events,
                "event_hash": format!("{:016x}", run.event_hash),
                "comparison": cmp,
            }));
        }
        write_json(
            &json!({"steady_state": s.x, "burn_in": burn_in, "agents": agents, "replicates": reps}),
            Some(path),
        )?;
    }
    Ok(())
}
