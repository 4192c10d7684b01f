//! Experiment runners. Each returns CSV tables plus per-seed outcomes; work
//! is spread over a rayon pool but results are always assembled in the
//! canonical (grid, seed) order.

use amp_lasso::amp::AmpState;
use amp_lasso::instance::{gaussian_noise, random_matrix, random_matrix_with, sparse_sign_signal};
use amp_lasso::rng::{derive_seed, stream_rng, Stream};
use amp_lasso::scalar_risk::eta;
use amp_lasso::state_evolution::{boundary_csv, initial_tau2, risk_grid_csv};
use amp_lasso::{
    amp_step, ist_init, ist_run, ist_step, lasso_risk, rho_c, se_fixed_point, se_map, Ensemble, Estimator,
    Instance, ModelParams, ThresholdPolicy,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::Result;
use crate::spec::{ExperimentKind, ExperimentSpec};
use crate::stats::{histogram, ks_normal, mean_sd, mean_se};

/// Per-seed pair of traces, or the seed's error message.
type SeedTrace = std::result::Result<(Vec<f64>, Vec<f64>), String>;

/// A CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Values of column `name` parsed as `f64` (empty cells become NaN).
    pub fn f64_column(&self, name: &str) -> Vec<f64> {
        let k = self.column(name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows
            .iter()
            .map(|r| r[k].parse().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    fn from_csv(text: &str) -> Self {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default().split(',').map(String::from).collect();
        let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
        Table { header, rows }
    }
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        String::new()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// What happened to one (cell, seed) task.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedOutcome {
    pub cell: String,
    pub seed: u64,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse: Option<f64>,
}

impl SeedOutcome {
    fn ok(cell: impl Into<String>, seed: u64, iterations: Option<usize>, mse: Option<f64>) -> Self {
        SeedOutcome {
            cell: cell.into(),
            seed,
            ok: true,
            error: None,
            iterations,
            mse,
        }
    }

    fn failed(cell: impl Into<String>, seed: u64, err: impl ToString) -> Self {
        SeedOutcome {
            cell: cell.into(),
            seed,
            ok: false,
            error: Some(err.to_string()),
            iterations: None,
            mse: None,
        }
    }
}

/// Tables (keyed by file stem), outcomes and a JSON summary.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub tables: Vec<(String, Table)>,
    pub outcomes: Vec<SeedOutcome>,
    pub summary: serde_json::Value,
}

impl ExperimentOutput {
    pub fn table(&self, stem: &str) -> Option<&Table> {
        self.tables.iter().find(|(s, _)| s == stem).map(|(_, t)| t)
    }
}

/// Runs `spec` on at most `jobs` worker threads (`0` uses rayon's default).
pub fn run(spec: &ExperimentSpec, jobs: usize) -> Result<ExperimentOutput> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    pool.install(|| match spec.kind {
        ExperimentKind::MseVsLambda => run_mse_vs_lambda(spec),
        ExperimentKind::Convergence => run_convergence(spec),
        ExperimentKind::NoiseHistogram => run_noise_histogram(spec),
        ExperimentKind::SeTracking => run_se_tracking(spec),
        ExperimentKind::ResampledOracle => run_resampled_oracle(spec),
        ExperimentKind::PhaseCurve => run_phase_curve(spec),
    })
}

fn policy(spec: &ExperimentSpec, alpha: f64) -> Result<ThresholdPolicy> {
    let est = match spec.tau_mode {
        amp_lasso::TauMode::Rms => Estimator::Rms,
        amp_lasso::TauMode::Median => Estimator::Median,
    };
    Ok(ThresholdPolicy::new(alpha, est)?)
}

/// `(α, predicted MSE)` for one λ. Priors with no mass off zero bypass the
/// calibration and use the spec's α directly.
fn lambda_cell(params: &ModelParams, spec: &ExperimentSpec, lambda: f64) -> Result<(f64, f64)> {
    if params.prior.epsilon() > 0.0 {
        let r = lasso_risk(lambda, params)?;
        return Ok((r.alpha, r.mse));
    }
    let alpha = spec.alpha;
    let predicted = if params.sigma2 > 0.0 {
        let ts = se_fixed_point(params, alpha)?;
        params.delta * (ts * ts - params.sigma2)
    } else {
        0.0
    };
    Ok((alpha, predicted))
}

/// Seed of the instance for `(λ, seed)`; the ensemble only selects the
/// matrix stream, so Gaussian and ±1 runs share x0 and w.
pub fn mse_cell_seed(lambda: f64, seed: u64) -> u64 {
    derive_seed(seed, &[0x4d5345, lambda.to_bits()])
}

pub fn run_mse_vs_lambda(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let params = spec.params()?;
    let cells: Vec<(f64, f64, f64)> = spec
        .lambdas
        .iter()
        .map(|&l| lambda_cell(&params, spec, l).map(|(a, p)| (l, a, p)))
        .collect::<Result<_>>()?;
    let tasks: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| spec.seeds.iter().map(move |&s| (c, s)))
        .collect();
    let results: Vec<std::result::Result<(f64, f64, usize), String>> = tasks
        .par_iter()
        .map(|&(c, seed)| {
            let (lambda, alpha, _) = cells[c];
            let inst = amp_lasso::gen_instance(spec.ensemble, spec.n, &params, mse_cell_seed(lambda, seed))
                .map_err(|e| e.to_string())?;
            let pol = policy(spec, alpha).map_err(|e| e.to_string())?;
            let out = amp_lasso::amp_run(&inst, &pol, spec.max_iter, spec.tol).map_err(|e| e.to_string())?;
            let eff = out.final_state.implied_lambda();
            Ok((inst.mse(&out.x_hat), eff, out.iterations()))
        })
        .collect();

    let mut table = Table::new(&[
        "lambda",
        "n",
        "ensemble",
        "empirical_mse_mean",
        "empirical_mse_se",
        "predicted_mse",
        "alpha",
        "effective_lambda_mean",
        "seeds_ok",
    ]);
    let mut outcomes = Vec::new();
    for (c, &(lambda, alpha, predicted)) in cells.iter().enumerate() {
        let mut mses = Vec::new();
        let mut effs = Vec::new();
        for (k, &seed) in spec.seeds.iter().enumerate() {
            let cell = format!("lambda={lambda}");
            match &results[c * spec.seeds.len() + k] {
                Ok((mse, eff, it)) => {
                    mses.push(*mse);
                    effs.push(*eff);
                    outcomes.push(SeedOutcome::ok(cell, seed, Some(*it), Some(*mse)));
                }
                Err(e) => outcomes.push(SeedOutcome::failed(cell, seed, e)),
            }
        }
        let (mean, se) = mean_se(&mses);
        table.push(vec![
            num(lambda),
            spec.n.to_string(),
            spec.ensemble.to_string(),
            num(mean),
            num(se),
            num(predicted),
            num(alpha),
            num(mean_se(&effs).0),
            mses.len().to_string(),
        ]);
    }
    Ok(ExperimentOutput {
        tables: vec![("mse_vs_lambda".into(), table)],
        outcomes,
        summary: json!({}),
    })
}

/// Noiseless instance with exactly `k` entries ±1.
fn sign_instance(spec: &ExperimentSpec, k: usize, seed: u64) -> Result<Instance> {
    let m = spec.m();
    let a = random_matrix(spec.ensemble, m, spec.n, seed);
    let x0 = sparse_sign_signal(spec.n, k, seed)?;
    let w = if spec.sigma2 > 0.0 {
        gaussian_noise(m, spec.sigma2, seed)
    } else {
        vec![0.0; m]
    };
    Ok(Instance::from_parts(a, x0, w, spec.sigma2, seed)?)
}

/// First iteration at which the MSE trace reaches `target`.
pub fn hitting_time(mse: &[f64], target: f64) -> Option<usize> {
    mse.iter().position(|&v| v <= target)
}

pub fn run_convergence(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let tasks: Vec<(usize, u64)> = spec
        .supports
        .iter()
        .flat_map(|&k| spec.seeds.iter().map(move |&s| (k, s)))
        .collect();
    type Traces = (std::result::Result<Vec<f64>, String>, std::result::Result<Vec<f64>, String>);
    let results: Vec<Traces> = tasks
        .par_iter()
        .map(|&(k, seed)| {
            let inst = match sign_instance(spec, k, derive_seed(seed, &[0xc0, k as u64])) {
                Ok(i) => i,
                Err(e) => return (Err(e.to_string()), Err(e.to_string())),
            };
            let trace = |out: amp_lasso::RunOutput| -> Vec<f64> {
                out.trajectory.iter().map(|r| r.mse.unwrap_or(f64::NAN)).collect()
            };
            let amp = policy(spec, spec.alpha)
                .and_then(|p| Ok(amp_lasso::amp_run(&inst, &p, spec.max_iter, spec.tol)?))
                .map(trace)
                .map_err(|e| e.to_string());
            let ist = policy(spec, spec.alpha_ist)
                .and_then(|p| Ok(ist_run(&inst, &p, spec.ist_opnorm, spec.ist_max_iter, spec.tol)?))
                .map(trace)
                .map_err(|e| e.to_string());
            (amp, ist)
        })
        .collect();

    let mut traces = Table::new(&["support", "engine", "seed", "t", "mse"]);
    let mut hits = Table::new(&["support", "engine", "seed", "iterations_to_target", "final_mse"]);
    let mut outcomes = Vec::new();
    for (&(k, seed), (amp, ist)) in tasks.iter().zip(&results) {
        for (engine, res) in [("amp", amp), ("ist", ist)] {
            let cell = format!("support={k},engine={engine}");
            match res {
                Ok(mse) => {
                    for (t, v) in mse.iter().enumerate() {
                        traces.push(vec![k.to_string(), engine.into(), seed.to_string(), t.to_string(), num(*v)]);
                    }
                    let hit = hitting_time(mse, spec.target_mse);
                    let last = *mse.last().expect("trajectory has t = 0");
                    hits.push(vec![
                        k.to_string(),
                        engine.into(),
                        seed.to_string(),
                        hit.map(|h| h.to_string()).unwrap_or_default(),
                        num(last),
                    ]);
                    outcomes.push(SeedOutcome::ok(cell, seed, Some(mse.len() - 1), Some(last)));
                }
                Err(e) => outcomes.push(SeedOutcome::failed(cell, seed, e)),
            }
        }
    }
    Ok(ExperimentOutput {
        tables: vec![("convergence".into(), traces), ("convergence_hits".into(), hits)],
        outcomes,
        summary: json!({ "target_mse": spec.target_mse }),
    })
}

/// Pooled pseudo-data statistics for one engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoolSummary {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    /// `(mean − pooled atom)/se`
    pub offset_in_se: f64,
}

fn summarize_pool(values: &[f64], atom: f64) -> PoolSummary {
    let (mean, sd) = mean_sd(values);
    let se = sd / (values.len() as f64).sqrt();
    let ks = if sd > 0.0 {
        ks_normal(values, mean, sd)
    } else {
        crate::stats::KsResult {
            statistic: 0.0,
            p_value: 1.0,
        }
    };
    PoolSummary {
        count: values.len(),
        mean,
        sd,
        se,
        ks_statistic: ks.statistic,
        ks_p_value: ks.p_value,
        offset_in_se: if se > 0.0 { (mean - atom) / se } else { 0.0 },
    }
}

pub fn run_noise_histogram(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let params = spec.params()?;
    let t_target = spec.iterations;
    let results: Vec<SeedTrace> = spec
        .seeds
        .par_iter()
        .map(|&seed| {
            let cs = derive_seed(seed, &[0x4157]);
            let inst = match spec.supports.first() {
                Some(&k) => sign_instance(spec, k, cs),
                None => amp_lasso::gen_instance(spec.ensemble, spec.n, &params, cs).map_err(Into::into),
            }
            .map_err(|e| e.to_string())?;
            let run = || -> Result<(Vec<f64>, Vec<f64>)> {
                let pa = policy(spec, spec.alpha)?;
                let mut s = AmpState::init(&inst, &pa)?;
                for _ in 0..t_target {
                    s = amp_step(s, &inst, &pa)?;
                }
                let pi = policy(spec, spec.alpha_ist)?;
                let mut si = ist_init(&inst, &pi, spec.ist_opnorm)?;
                for _ in 0..t_target {
                    si = ist_step(si, &inst, &pi)?;
                }
                let pick = |p: Vec<f64>| -> Vec<f64> {
                    p.into_iter()
                        .zip(&inst.x0)
                        .filter(|(_, &x)| x == spec.pool_atom)
                        .map(|(v, _)| v)
                        .collect()
                };
                Ok((pick(s.pseudo_data()), pick(si.pseudo_data())))
            };
            run().map_err(|e| e.to_string())
        })
        .collect();

    let mut amp_pool = Vec::new();
    let mut ist_pool = Vec::new();
    let mut outcomes = Vec::new();
    for (&seed, r) in spec.seeds.iter().zip(&results) {
        match r {
            Ok((a, i)) => {
                amp_pool.extend_from_slice(a);
                ist_pool.extend_from_slice(i);
                outcomes.push(SeedOutcome::ok("pool", seed, Some(t_target), None));
            }
            Err(e) => outcomes.push(SeedOutcome::failed("pool", seed, e)),
        }
    }
    let all = amp_pool.iter().chain(&ist_pool);
    let lo = all.clone().fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = all.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut hist = Table::new(&["engine", "bin_center", "count"]);
    let mut summary = Table::new(&[
        "engine",
        "count",
        "mean",
        "sd",
        "se",
        "ks_statistic",
        "ks_p_value",
        "offset_in_se",
    ]);
    let mut json_summary = serde_json::Map::new();
    for (engine, pool) in [("amp", &amp_pool), ("ist", &ist_pool)] {
        if lo.is_finite() {
            for (c, k) in histogram(pool, spec.bins, lo, hi) {
                hist.push(vec![engine.into(), num(c), k.to_string()]);
            }
        }
        let s = summarize_pool(pool, spec.pool_atom);
        summary.push(vec![
            engine.into(),
            s.count.to_string(),
            num(s.mean),
            num(s.sd),
            num(s.se),
            num(s.ks_statistic),
            num(s.ks_p_value),
            num(s.offset_in_se),
        ]);
        json_summary.insert(engine.into(), serde_json::to_value(s).expect("summary"));
    }
    Ok(ExperimentOutput {
        tables: vec![
            ("noise_histogram".into(), hist),
            ("noise_histogram_summary".into(), summary),
        ],
        outcomes,
        summary: serde_json::Value::Object(json_summary),
    })
}

/// `τ_t²` and `θ_t = α τ_t` for `t = 0..=steps`.
pub fn se_schedule(params: &ModelParams, alpha: f64, steps: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut tau2 = vec![initial_tau2(params)];
    let mut theta = Vec::with_capacity(steps + 1);
    for t in 0..=steps {
        theta.push(alpha * tau2[t].sqrt());
        if t < steps {
            let next = se_map(tau2[t], theta[t], params)?;
            tau2.push(next);
        }
    }
    Ok((tau2, theta))
}

fn tracking_row(t: usize, lane: Option<&str>, values: &[f64], prediction: f64) -> Vec<String> {
    let (mean, se) = mean_se(values);
    let mut row = vec![t.to_string()];
    if let Some(l) = lane {
        row.push(l.into());
    }
    row.extend([num(mean), num(se), num(prediction), num((mean - prediction) / se)]);
    row
}

pub fn run_se_tracking(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let params = spec.params()?;
    let steps = spec.iterations;
    let (tau2, theta) = se_schedule(&params, spec.alpha, steps)?;
    let pol = ThresholdPolicy::fixed(theta.clone())?;
    let results: Vec<std::result::Result<Vec<f64>, String>> = spec
        .seeds
        .par_iter()
        .map(|&seed| {
            let run = || -> Result<Vec<f64>> {
                let inst = amp_lasso::gen_instance(spec.ensemble, spec.n, &params, derive_seed(seed, &[0x5e]))?;
                let mut s = AmpState::init(&inst, &pol)?;
                let mut out = Vec::with_capacity(steps + 1);
                for t in 0..=steps {
                    let p = s.pseudo_data();
                    let d2: f64 = p.iter().zip(&inst.x0).map(|(a, b)| (a - b) * (a - b)).sum();
                    out.push(d2 / inst.n as f64);
                    if t < steps {
                        s = amp_step(s, &inst, &pol)?;
                    }
                }
                Ok(out)
            };
            run().map_err(|e| e.to_string())
        })
        .collect();
    let mut outcomes = Vec::new();
    let mut per_t: Vec<Vec<f64>> = vec![Vec::new(); steps + 1];
    for (&seed, r) in spec.seeds.iter().zip(&results) {
        match r {
            Ok(v) => {
                for (t, x) in v.iter().enumerate() {
                    per_t[t].push(*x);
                }
                outcomes.push(SeedOutcome::ok("tracking", seed, Some(steps), v.last().copied()));
            }
            Err(e) => outcomes.push(SeedOutcome::failed("tracking", seed, e)),
        }
    }
    let mut table = Table::new(&["t", "tau2_empirical_mean", "tau2_empirical_se", "tau2_se_prediction", "z"]);
    for t in 0..=steps {
        table.push(tracking_row(t, None, &per_t[t], tau2[t]));
    }
    Ok(ExperimentOutput {
        tables: vec![("se_tracking".into(), table)],
        outcomes,
        summary: json!({ "thresholds": theta }),
    })
}

fn sq_dist_per_coord(x: &[f64], x0: &[f64]) -> f64 {
    x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64
}

/// The recursion with a fresh Gaussian matrix `A(t)` at every step:
/// `x^{t+1} = η(x0 + A(t)ᵀw + (I − A(t)ᵀA(t))(x^t − x0); θ_t)`.
/// Returns `(1/n)‖x^t − x0‖²` for `t = 0..=thresholds.len()`.
pub fn resampled_recursion(x0: &[f64], w: &[f64], thresholds: &[f64], seed: u64) -> Vec<f64> {
    let (n, m) = (x0.len(), w.len());
    let mut x = vec![0.0; n];
    let mut out = vec![sq_dist_per_coord(&x, x0)];
    for (t, &theta) in thresholds.iter().enumerate() {
        let mut rng = stream_rng(seed, Stream::Resampled(t as u32));
        let a = random_matrix_with(Ensemble::Gaussian, m, n, &mut rng);
        let d: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
        let ad = a.mul_vec(&d);
        // Aᵀ(w − A d) + d + x0
        let v: Vec<f64> = w.iter().zip(&ad).map(|(wi, adi)| wi - adi).collect();
        let atv = a.tmul_vec(&v);
        for i in 0..n {
            x[i] = eta(x0[i] + d[i] + atv[i], theta);
        }
        out.push(sq_dist_per_coord(&x, x0));
    }
    out
}

/// IST on the fixed, unrescaled matrix with the given thresholds; no
/// blow-up guard, non-finite values are reported as `+∞`.
pub fn fixed_matrix_ist(inst: &Instance, thresholds: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; inst.n];
    let mut out = vec![sq_dist_per_coord(&x, &inst.x0)];
    for &theta in thresholds {
        let ax = inst.a.mul_vec(&x);
        let r: Vec<f64> = inst.y.iter().zip(&ax).map(|(y, v)| y - v).collect();
        let g = inst.a.tmul_vec(&r);
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi = eta(*xi + gi, theta);
        }
        let d = sq_dist_per_coord(&x, &inst.x0);
        out.push(if d.is_finite() { d } else { f64::INFINITY });
    }
    out
}

pub fn run_resampled_oracle(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let params = spec.params()?;
    let steps = spec.iterations;
    let (tau2, theta) = se_schedule(&params, spec.alpha, steps)?;
    let thresholds = &theta[..steps];
    let results: Vec<SeedTrace> = spec
        .seeds
        .par_iter()
        .map(|&seed| {
            let cs = derive_seed(seed, &[0x55]);
            let inst =
                amp_lasso::gen_instance(spec.ensemble, spec.n, &params, cs).map_err(|e| e.to_string())?;
            let resampled = resampled_recursion(&inst.x0, &inst.w, thresholds, cs);
            let ist = fixed_matrix_ist(&inst, thresholds);
            Ok((resampled, ist))
        })
        .collect();
    let mut outcomes = Vec::new();
    let mut lanes: [Vec<Vec<f64>>; 2] = [vec![Vec::new(); steps + 1], vec![Vec::new(); steps + 1]];
    for (&seed, r) in spec.seeds.iter().zip(&results) {
        match r {
            Ok((a, b)) => {
                for t in 0..=steps {
                    lanes[0][t].push(a[t]);
                    lanes[1][t].push(b[t]);
                }
                outcomes.push(SeedOutcome::ok("oracle", seed, Some(steps), a.last().copied()));
            }
            Err(e) => outcomes.push(SeedOutcome::failed("oracle", seed, e)),
        }
    }
    let mut table = Table::new(&["t", "lane", "tau2_empirical_mean", "tau2_empirical_se", "tau2_se_prediction", "z"]);
    for (lane, vals) in ["resampled", "ist_fixed"].iter().zip(&lanes) {
        for t in 0..=steps {
            let pred = params.delta * (tau2[t] - params.sigma2);
            table.push(tracking_row(t, Some(lane), &vals[t], pred));
        }
    }
    Ok(ExperimentOutput {
        tables: vec![("resampled_oracle".into(), table)],
        outcomes,
        summary: json!({ "thresholds": thresholds }),
    })
}

pub fn run_phase_curve(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let g = spec.grid;
    let alphas: Vec<f64> = (0..=g).map(|k| 10.0 * k as f64 / g as f64).collect();
    let axis: Vec<f64> = (0..g).map(|k| (k as f64 + 0.5) / g as f64).collect();
    let boundary = Table::from_csv(&boundary_csv(&alphas)?);
    let risk = Table::from_csv(&risk_grid_csv(&axis, &axis)?);
    let mut rc = Table::new(&["delta", "rho_c"]);
    for &d in &axis {
        rc.push(vec![num(d), num(rho_c(d)?)]);
    }
    Ok(ExperimentOutput {
        tables: vec![
            ("phase_boundary".into(), boundary),
            ("phase_rho_c".into(), rc),
            ("phase_risk".into(), risk),
        ],
        outcomes: Vec::new(),
        summary: json!({ "rho_c_at_0.2": rho_c(0.2)? }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), num(f64::NAN)]);
        t.push(vec![num(f64::INFINITY), num(0.5)]);
        let back = Table::from_csv(&t.to_csv());
        assert_eq!(back, t);
        assert!(back.f64_column("b")[0].is_nan());
        assert_eq!(back.f64_column("a")[1], f64::INFINITY);
    }

    #[test]
    fn schedule_starts_at_tau0() {
        let p = ModelParams::new(0.64, 0.2, amp_lasso::DiscretePrior::three_point(0.128).unwrap()).unwrap();
        let (tau2, theta) = se_schedule(&p, 2.0, 5).unwrap();
        assert_eq!(tau2.len(), 6);
        assert_eq!(theta.len(), 6);
        assert_eq!(tau2[0], 0.2 + 0.128 / 0.64);
        assert!((theta[3] - 2.0 * tau2[3].sqrt()).abs() < 1e-15);
    }

    #[test]
    fn resampled_recursion_starts_at_second_moment() {
        let x0 = vec![1.0, 0.0, -1.0, 0.0];
        let v = resampled_recursion(&x0, &[0.0, 0.0], &[0.5], 1);
        assert_eq!(v[0], 0.5);
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn hitting_time_finds_first_crossing() {
        assert_eq!(hitting_time(&[1.0, 0.5, 1e-5, 1e-6], 1e-4), Some(2));
        assert_eq!(hitting_time(&[1.0], 1e-4), None);
    }

    #[test]
    fn degenerate_histogram_lane_pools_zeros() {
        let mut spec = ExperimentSpec::new(ExperimentKind::NoiseHistogram);
        spec.n = 50;
        spec.delta = 0.5;
        spec.sigma2 = 0.0;
        spec.prior = amp_lasso::DiscretePrior::point_mass(0.0);
        spec.pool_atom = 0.0;
        spec.seeds = vec![1, 2];
        spec.iterations = 3;
        let out = run(&spec, 1).unwrap();
        let s = out.table("noise_histogram_summary").unwrap();
        assert_eq!(s.f64_column("mean"), vec![0.0, 0.0]);
        assert_eq!(s.f64_column("sd"), vec![0.0, 0.0]);
        assert_eq!(s.f64_column("count"), vec![100.0, 100.0]);
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let mut spec = ExperimentSpec::new(ExperimentKind::MseVsLambda);
        spec.n = 100;
        spec.seeds = vec![3, 4, 5];
        spec.lambdas = vec![0.5, 1.0];
        let a = run(&spec, 1).unwrap();
        let b = run(&spec, 3).unwrap();
        assert_eq!(a.tables[0].1, b.tables[0].1);
    }

    #[test]
    fn adding_a_lambda_keeps_existing_cells() {
        let mut spec = ExperimentSpec::new(ExperimentKind::MseVsLambda);
        spec.n = 100;
        spec.seeds = vec![1, 2];
        spec.lambdas = vec![1.0];
        let a = run(&spec, 1).unwrap();
        spec.lambdas = vec![0.5, 1.0];
        let b = run(&spec, 1).unwrap();
        assert_eq!(a.tables[0].1.rows[0], b.tables[0].1.rows[1]);
    }
}
