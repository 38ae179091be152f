use std::path::Path;

use lindblad_npi::linalg::{self, C64};
use lindblad_npi::model::{populations, LindbladModel, ModelConfig};
use lindblad_npi::npi::{evolve_with, SchemeConfig, Trajectory};
use lindblad_npi::oracle;
use nalgebra::DMatrix;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{fmt, CsvWriter, RunManifest};

/// Default horizon of the qudit-cavity run (ns).
pub const DEFAULT_T_FINAL_NS: f64 = 2500.0;
/// Default implicit step counts. Coarser grids than this sit in the stiff
/// pre-asymptotic regime of the drive (‖H‖Δt ≫ 1) and show no clean order.
pub const DEFAULT_N_STEPS: [usize; 3] = [500, 1000, 2000];

/// Ground-state rank-one factor.
pub fn ground_state_factor(dim: usize) -> DMatrix<C64> {
    let mut v0 = DMatrix::<C64>::zeros(dim, 1);
    v0[(0, 0)] = linalg::ONE;
    v0
}

pub struct CavityRun {
    pub trajectory: Trajectory,
    /// Per-subsystem level populations, one entry per recorded step.
    pub populations: Vec<Vec<Vec<f64>>>,
}

pub fn run_trajectory(
    model: &LindbladModel,
    dims: &[usize],
    scheme: &SchemeConfig,
    t_final: f64,
    n_steps: usize,
) -> Result<CavityRun> {
    let v0 = ground_state_factor(model.dim());
    let mut pops = Vec::with_capacity(n_steps + 1);
    let trajectory = evolve_with(model, scheme, v0, t_final, n_steps, |s| {
        pops.push(populations(&s.factor, dims).expect("dims match the model"));
    })?;
    Ok(CavityRun { trajectory, populations: pops })
}

fn frobenius_error(run: &Trajectory, reference: &DMatrix<C64>) -> f64 {
    let vf = &run.final_state.factor;
    (vf * vf.adjoint() - reference).norm()
}

pub struct ErrorPoint {
    pub order: u8,
    pub family: &'static str,
    pub n_steps: usize,
    pub dt: f64,
    pub error: f64,
}

/// The full experiment: implicit orders 3-4 across the step list, explicit
/// orders 3-4 at the configured (stability-limited) step count, a dense
/// reference at `reference_multiplier` times the finest resolution, and a
/// rank-history comparison between the finest implicit and explicit runs.
pub fn run_to_dir(
    config: &ExperimentConfig,
    model_config: &ModelConfig,
    out_dir: &Path,
) -> Result<()> {
    let mut manifest = RunManifest::new("qudit-cavity", serde_json::to_value(config)?);
    let model = model_config.to_model()?;
    let dims = model_config.subsystem_dims();
    let t_final = config.grid.t_final.unwrap_or(DEFAULT_T_FINAL_NS);
    let implicit_steps: Vec<usize> = if config.grid.n_steps.is_empty() {
        DEFAULT_N_STEPS.to_vec()
    } else {
        config.grid.n_steps.clone()
    };
    let explicit_steps = config.cavity.explicit_n_steps;

    // Reference at 10x the finest implicit grid, with a self-consistency check.
    let finest = implicit_steps.iter().copied().max().unwrap();
    let rho0 = {
        let v0 = ground_state_factor(model.dim());
        &v0 * v0.adjoint()
    };
    let reference = oracle::reference_solve(
        &model,
        &rho0,
        t_final,
        config.cavity.reference_multiplier * finest,
        Some(config.cavity.reference_tolerance),
    )?;

    let mut errors: Vec<ErrorPoint> = Vec::new();
    let mut implicit_o4: Vec<(usize, CavityRun)> = Vec::new();
    for order in [3u8, 4] {
        for &n in &implicit_steps {
            let scheme = SchemeConfig::implicit(order).with_kappa(config.cavity.kappa_implicit);
            let run = run_trajectory(&model, &dims, &scheme, t_final, n)?;
            errors.push(ErrorPoint {
                order,
                family: "implicit",
                n_steps: n,
                dt: t_final / n as f64,
                error: frobenius_error(&run.trajectory, &reference),
            });
            if order == 4 {
                implicit_o4.push((n, run));
            }
        }
    }
    let mut explicit_run: Option<CavityRun> = None;
    for order in [3u8, 4] {
        let scheme = SchemeConfig::explicit(order).with_kappa(config.cavity.kappa_explicit);
        let run = run_trajectory(&model, &dims, &scheme, t_final, explicit_steps)?;
        errors.push(ErrorPoint {
            order,
            family: "explicit",
            n_steps: explicit_steps,
            dt: t_final / explicit_steps as f64,
            error: frobenius_error(&run.trajectory, &reference),
        });
        if order == 4 {
            explicit_run = Some(run);
        }
    }

    let errors_path = out_dir.join("errors.csv");
    let mut csv =
        CsvWriter::create(&errors_path, &["order", "family", "n_steps", "dt_ns", "error"])?;
    for p in &errors {
        csv.row(&[
            p.order.to_string(),
            p.family.to_string(),
            p.n_steps.to_string(),
            fmt(p.dt),
            fmt(p.error),
        ])?;
    }
    csv.finish()?;
    manifest.record_output(&errors_path);

    // Trajectory detail for the finest implicit run.
    let implicit = &implicit_o4.iter().max_by_key(|(n, _)| *n).expect("nonempty").1;
    let mut header = vec!["time_ns".to_string(), "rank".to_string(), "trace".to_string()];
    for (s, &n_s) in dims.iter().enumerate() {
        for level in 0..n_s {
            header.push(format!("pop_{s}_{level}"));
        }
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let traj_path = out_dir.join("trajectory.csv");
    let mut csv = CsvWriter::create(&traj_path, &header_refs)?;
    let t = &implicit.trajectory;
    for i in 0..t.times.len() {
        let mut row = vec![fmt(t.times[i]), t.ranks[i].to_string(), fmt(t.traces[i])];
        for sub in &implicit.populations[i] {
            row.extend(sub.iter().map(|&p| fmt(p)));
        }
        csv.row(&row)?;
    }
    csv.finish()?;
    manifest.record_output(&traj_path);

    // Rank histories: the comparison pairs the explicit run with the implicit
    // run whose truncation tolerance (κ·Δt) is closest, i.e. a similar level
    // of truncation, sampled at the coarser run's times.
    let explicit = explicit_run.expect("explicit run present");
    let target = (config.cavity.kappa_explicit * t_final / explicit_steps as f64).ln();
    let matched = implicit_o4
        .iter()
        .min_by(|(na, _), (nb, _)| {
            let da = ((config.cavity.kappa_implicit * t_final / *na as f64).ln() - target).abs();
            let db = ((config.cavity.kappa_implicit * t_final / *nb as f64).ln() - target).abs();
            da.total_cmp(&db)
        })
        .expect("nonempty");
    let ranks_path = out_dir.join("ranks.csv");
    let mut csv =
        CsvWriter::create(&ranks_path, &["time_ns", "rank_implicit", "rank_explicit"])?;
    for (time, pair) in matched_ranks(&matched.1.trajectory, &explicit.trajectory) {
        csv.row(&[fmt(time), pair.0.to_string(), pair.1.to_string()])?;
    }
    csv.finish()?;
    manifest.record_output(&ranks_path);

    manifest.insert("t_final_ns", serde_json::json!(t_final));
    manifest.insert("rank_comparison_n_steps", serde_json::json!([matched.0, explicit_steps]));
    manifest.insert(
        "max_rank_implicit",
        serde_json::json!(implicit.trajectory.ranks.iter().max()),
    );
    manifest.write(out_dir)?;
    Ok(())
}

/// Pair each coarse-run time with the nearest fine-run rank.
pub fn matched_ranks<'a>(
    coarse: &'a Trajectory,
    fine: &'a Trajectory,
) -> impl Iterator<Item = (f64, (usize, usize))> + 'a {
    let fine_dt = fine.times.get(1).copied().unwrap_or(1.0) - fine.times[0];
    coarse.times.iter().zip(&coarse.ranks).map(move |(&t, &r)| {
        let idx = ((t - fine.times[0]) / fine_dt).round() as usize;
        (t, (r, fine.ranks[idx.min(fine.ranks.len() - 1)]))
    })
}
