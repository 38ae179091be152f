use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use lindblad_npi::linalg::C64;
use lindblad_npi::model::{
    build_jaynes_cummings_model, coherent_state_vector, populations, ControlPulse, LindbladModel,
};
use lindblad_npi::npi::evolve_with;
use nalgebra::DMatrix;

use crate::config::{ExperimentConfig, JcSettings};
use crate::error::Result;
use crate::output::{fmt, CsvWriter, RunManifest};

pub fn build_model(jc: &JcSettings, amplitude: f64, width: f64) -> Result<LindbladModel> {
    let control = if amplitude == 0.0 {
        ControlPulse::Zero
    } else {
        ControlPulse::SuperGaussian { amplitude, width, t_ref: jc.revival_time() }
    };
    Ok(build_jaynes_cummings_model(jc.m, jc.coupling, jc.t2_qubit, control)?)
}

/// Excited qubit ⊗ coherent cavity state, as a rank-one factor.
pub fn initial_factor(jc: &JcSettings) -> DMatrix<C64> {
    let cavity = coherent_state_vector(jc.m, jc.coherent_amplitude());
    let mut v0 = DMatrix::<C64>::zeros(2 * jc.m, 1);
    for n in 0..jc.m {
        v0[(jc.m + n, 0)] = cavity[n];
    }
    v0
}

pub struct RevivalRun {
    pub times: Vec<f64>,
    /// Excited-state population of the qubit per step.
    pub p_excited: Vec<f64>,
    pub ranks: Vec<usize>,
    pub traces: Vec<f64>,
    pub cost: f64,
}

/// Weight of the cost integrand, localized around the revival time.
fn cost_weight(t: f64, t_r: f64) -> f64 {
    (-((t / t_r - 1.0) / 0.6).powi(10)).exp()
}

/// Trapezoid-rule cost C = ∫ w(t) (P(t) - 1/2)² dt on the simulation grid.
pub fn cost_integral(times: &[f64], p: &[f64], t_r: f64) -> f64 {
    let f: Vec<f64> =
        times.iter().zip(p).map(|(&t, &pi)| cost_weight(t, t_r) * (pi - 0.5).powi(2)).collect();
    let mut acc = 0.0;
    for i in 1..times.len() {
        acc += 0.5 * (times[i] - times[i - 1]) * (f[i] + f[i - 1]);
    }
    acc
}

pub fn run_revival(
    config: &ExperimentConfig,
    amplitude: f64,
    width: f64,
    n_steps: usize,
) -> Result<RevivalRun> {
    let jc = &config.jc;
    let t_r = jc.revival_time();
    let t_final = config.grid.t_final.unwrap_or(1.5 * t_r);
    let model = build_model(jc, amplitude, width)?;
    let dims = [2usize, jc.m];
    let scheme = config.scheme.to_scheme_config()?;
    let mut p_excited = Vec::with_capacity(n_steps + 1);
    let trajectory =
        evolve_with(&model, &scheme, initial_factor(jc), t_final, n_steps, |s| {
            let pops = populations(&s.factor, &dims).expect("dims match");
            p_excited.push(pops[0][1]);
        })?;
    let cost = cost_integral(&trajectory.times, &p_excited, t_r);
    Ok(RevivalRun {
        times: trajectory.times,
        p_excited,
        ranks: trajectory.ranks,
        traces: trajectory.traces,
        cost,
    })
}

/// Default step count for revival/scan runs, matching the published setup.
pub const DEFAULT_N_STEPS: usize = 6400;

pub fn run_revival_to_dir(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("jc-revival", serde_json::to_value(config)?);
    let n_steps = config.grid.n_steps.first().copied().unwrap_or(DEFAULT_N_STEPS);
    let run = run_revival(config, config.jc.amplitude, config.jc.width, n_steps)?;
    let path = out_dir.join("population.csv");
    let mut csv =
        CsvWriter::create(&path, &["time", "p_excited", "p_ground", "rank", "trace"])?;
    for i in 0..run.times.len() {
        csv.row(&[
            fmt(run.times[i]),
            fmt(run.p_excited[i]),
            fmt(1.0 - run.p_excited[i]),
            run.ranks[i].to_string(),
            fmt(run.traces[i]),
        ])?;
    }
    csv.finish()?;
    manifest.record_output(&path);
    manifest.insert("cost", serde_json::json!(run.cost));
    manifest.insert("revival_time", serde_json::json!(config.jc.revival_time()));
    manifest.write(out_dir)?;
    Ok(())
}

pub struct ScanCell {
    pub a: f64,
    pub b: f64,
    pub cost: std::result::Result<f64, String>,
}

/// Evaluate C(A, B) over the configured grid; failures are recorded per cell
/// and do not abort the scan.
pub fn run_scan(config: &ExperimentConfig) -> Vec<ScanCell> {
    let pairs: Vec<(f64, f64)> = config
        .scan
        .a_grid()
        .iter()
        .flat_map(|&a| config.scan.b_grid().iter().map(move |&b| (a, b)).collect::<Vec<_>>())
        .collect();
    let n_steps = config.scan.n_steps;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, ScanCell)>> = Mutex::new(Vec::with_capacity(pairs.len()));
    let workers = config.scan.threads.max(1).min(pairs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(a, b)) = pairs.get(i) else { break };
                let cost = run_revival(config, a, b, n_steps)
                    .map(|r| r.cost)
                    .map_err(|e| e.to_string());
                results.lock().unwrap().push((i, ScanCell { a, b, cost }));
            });
        }
    });
    let mut cells = results.into_inner().unwrap();
    cells.sort_by_key(|(i, _)| *i);
    cells.into_iter().map(|(_, c)| c).collect()
}

pub fn run_scan_to_dir(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("jc-scan", serde_json::to_value(config)?);
    let cells = run_scan(config);
    let path = out_dir.join("scan.csv");
    let mut csv = CsvWriter::create(&path, &["a", "b", "cost", "log_cost", "status"])?;
    let mut failures = 0usize;
    for cell in &cells {
        match &cell.cost {
            Ok(c) => csv.row(&[
                fmt(cell.a),
                fmt(cell.b),
                fmt(*c),
                fmt(c.ln()),
                "ok".to_string(),
            ])?,
            Err(msg) => {
                failures += 1;
                csv.row(&[
                    fmt(cell.a),
                    fmt(cell.b),
                    String::new(),
                    String::new(),
                    format!("error: {}", msg.replace(',', ";")),
                ])?;
            }
        }
    }
    csv.finish()?;
    manifest.record_output(&path);
    manifest.insert("cells", serde_json::json!(cells.len()));
    manifest.insert("failures", serde_json::json!(failures));
    manifest.write(out_dir)?;
    Ok(())
}
