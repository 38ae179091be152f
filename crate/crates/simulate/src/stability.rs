use std::path::Path;

use lindblad_npi::stability::{
    amplification_closed_form, real_axis_intercept, spectral_radius_nonstationary,
    stability_condition, stability_region_scan, IndexSelection, RegionGrid, TestCase,
};

use crate::config::{ExperimentConfig, Family};
use crate::error::Result;
use crate::output::{fmt, CsvWriter, RunManifest};

/// Scan the scalar stability regions of all eight flow settings and export
/// the boundary curves plus real-axis intercepts.
pub fn run_regions_to_dir(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let mut manifest = RunManifest::new("stability-region", serde_json::to_value(config)?);
    let grid = RegionGrid::default();
    let mut intercepts = serde_json::Map::new();
    for family in [Family::Explicit, Family::Implicit] {
        for order in 1..=4u8 {
            let scan = stability_region_scan(order, family.to_flow(), &grid);
            let name = format!("boundary_o{order}_{}.csv", family.label());
            let path = out_dir.join(&name);
            let mut csv = CsvWriter::create(&path, &["re", "im"])?;
            for z in &scan.boundary {
                csv.row(&[fmt(z.re), fmt(z.im)])?;
            }
            csv.finish()?;
            manifest.record_output(&path);
            let key = format!("o{order}_{}", family.label());
            intercepts.insert(
                key,
                real_axis_intercept(order, family.to_flow())
                    .map_or(serde_json::Value::Null, |x| serde_json::json!(x)),
            );
        }
    }
    manifest.insert("real_axis_intercepts", serde_json::Value::Object(intercepts));
    manifest.write(out_dir)?;
    Ok(())
}

pub struct CaseSweepArgs {
    pub order: u8,
    pub family: Family,
    pub case: TestCase,
    pub dt_min: f64,
    pub dt_max: f64,
    pub points: usize,
}

/// Sweep Δt on a log grid for one single-qubit test case and report the
/// nonstationary spectral radius and the stability verdict per step size.
pub fn run_case_sweep(args: &CaseSweepArgs, out_dir: &Path) -> Result<()> {
    let mut manifest = RunManifest::new(
        "stability",
        serde_json::json!({
            "order": args.order,
            "family": args.family.label(),
            "dt_min": args.dt_min,
            "dt_max": args.dt_max,
            "points": args.points,
        }),
    );
    let idx = IndexSelection::top(args.family.to_flow());
    let path = out_dir.join("stability.csv");
    let mut csv = CsvWriter::create(&path, &["dt", "spectral_radius", "stable"])?;
    let mut first_unstable: Option<f64> = None;
    for k in 0..args.points {
        let frac = k as f64 / (args.points - 1).max(1) as f64;
        let dt = args.dt_min * (args.dt_max / args.dt_min).powf(frac);
        let m = amplification_closed_form(args.case, args.order, idx, dt);
        let radius = spectral_radius_nonstationary(&m);
        let stable = stability_condition(args.case, args.order, idx, dt);
        if !stable && first_unstable.is_none() {
            first_unstable = Some(dt);
        }
        csv.row(&[fmt(dt), fmt(radius), u8::from(stable).to_string()])?;
    }
    csv.finish()?;
    manifest.record_output(&path);
    manifest.insert(
        "first_unstable_dt",
        first_unstable.map_or(serde_json::Value::Null, |x| serde_json::json!(x)),
    );
    manifest.write(out_dir)?;
    Ok(())
}

/// Shared default parameters for the CLI test cases.
pub fn default_case(kind: &str) -> Option<TestCase> {
    match kind {
        "decay" => Some(TestCase::Decay { omega: 1.0, t_decay: 1.0 }),
        "dephasing" => Some(TestCase::DecayDephasing { omega: 1.0, t1: 1.0, t2: 1.0 }),
        _ => None,
    }
}

/// Re-exported for the binary's flag parsing.
pub fn family_from_flag(flag: &str) -> Option<Family> {
    match flag {
        "ex" | "explicit" => Some(Family::Explicit),
        "im" | "implicit" => Some(Family::Implicit),
        _ => None,
    }
}
