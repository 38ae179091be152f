use std::path::Path;

use lindblad_npi::linalg::{self, matmul, C64};
use lindblad_npi::model::{lowering_operator, LindbladModel};
use lindblad_npi::npi::{evolve, SchemeConfig};
use lindblad_npi::oracle;
use nalgebra::DMatrix;

use crate::config::{ExperimentConfig, Family};
use crate::error::Result;
use crate::output::{fmt, CsvWriter, RunManifest};

/// Step counts used in the published error table, per order.
pub fn benchmark_step_counts(order: u8) -> &'static [usize] {
    match order {
        1 => &[1600, 3200, 6400, 12800],
        2 => &[200, 400, 800, 1600],
        3 => &[45, 90, 180, 360],
        _ => &[32, 64, 128, 256],
    }
}

/// Two resonant qubits with exchange coupling `j` (angular units) and uniform
/// decay rate `gamma` on both qubits.
pub fn two_qubit_model(j: f64, gamma: f64) -> Result<LindbladModel> {
    let a = lowering_operator(2);
    let id = linalg::eye(2);
    let a0 = linalg::kron(&a, &id);
    let a1 = linalg::kron(&id, &a);
    let h = (matmul(&a0.adjoint(), &a1) + matmul(&a0, &a1.adjoint())).scale(j);
    let jumps = vec![a0.scale(gamma.sqrt()), a1.scale(gamma.sqrt())];
    Ok(LindbladModel::from_parts(h, vec![], jumps)?)
}

/// Rank-one factor of the initial state |10><10|.
pub fn two_qubit_initial_factor() -> DMatrix<C64> {
    let mut v0 = DMatrix::<C64>::zeros(4, 1);
    v0[(2, 0)] = linalg::ONE;
    v0
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub order: u8,
    pub family: Family,
    pub n_steps: usize,
    pub dt: f64,
    pub error: f64,
    /// log₂ error ratio against the previous (coarser) row of the same scheme.
    pub rate: Option<f64>,
    pub divergent: bool,
}

fn scheme_rows(
    model: &LindbladModel,
    exact: &DMatrix<C64>,
    order: u8,
    family: Family,
    steps: &[usize],
    t_final: f64,
) -> Result<Vec<ConvergenceRow>> {
    let v0 = two_qubit_initial_factor();
    let config = match family {
        Family::Explicit => SchemeConfig::explicit(order),
        Family::Implicit => SchemeConfig::implicit(order),
    };
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(steps.len());
    for &n in steps {
        let dt = t_final / n as f64;
        let (error, divergent) = match evolve(model, &config, v0.clone(), t_final, n) {
            Ok(traj) => {
                let vf = &traj.final_state.factor;
                let err = (vf * vf.adjoint() - exact).norm();
                (err, err > 1e6)
            }
            Err(lindblad_npi::Error::Diverged(_)) => (f64::INFINITY, true),
            Err(e) => return Err(e.into()),
        };
        let rate = rows
            .last()
            .filter(|prev| !prev.divergent && !divergent)
            .map(|prev| (prev.error / error).log2() / (prev.dt / dt).log2());
        rows.push(ConvergenceRow { order, family, n_steps: n, dt, error, rate, divergent });
    }
    Ok(rows)
}

/// All eight (order, family) combinations on the two-qubit benchmark, errors
/// measured in the Frobenius norm against the closed-form solution.
pub fn run_all(config: &ExperimentConfig) -> Result<Vec<ConvergenceRow>> {
    let settings = &config.two_qubit;
    let j = settings.j_angular();
    let model = two_qubit_model(j, settings.gamma)?;
    let exact = oracle::exact_two_qubit_rho(j, settings.gamma, settings.t_final);

    let combos: Vec<(u8, Family)> = (1..=4u8)
        .flat_map(|order| [(order, Family::Explicit), (order, Family::Implicit)])
        .collect();
    let results: Vec<Result<Vec<ConvergenceRow>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = combos
            .iter()
            .map(|&(order, family)| {
                let model = &model;
                let exact = &exact;
                let steps: &[usize] = if config.grid.n_steps.is_empty() {
                    benchmark_step_counts(order)
                } else {
                    &config.grid.n_steps
                };
                scope.spawn(move || {
                    scheme_rows(model, exact, order, family, steps, settings.t_final)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });

    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn run_to_dir(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("convergence", serde_json::to_value(config)?);
    let rows = run_all(config)?;
    let path = out_dir.join("convergence.csv");
    let mut csv = CsvWriter::create(
        &path,
        &["order", "family", "n_steps", "dt", "error", "rate", "status"],
    )?;
    for row in &rows {
        csv.row(&[
            row.order.to_string(),
            row.family.label().to_string(),
            row.n_steps.to_string(),
            fmt(row.dt),
            fmt(row.error),
            row.rate.map(fmt).unwrap_or_default(),
            if row.divergent { "divergent" } else { "ok" }.to_string(),
        ])?;
    }
    csv.finish()?;
    manifest.record_output(&path);
    manifest.write(out_dir)?;
    Ok(())
}
