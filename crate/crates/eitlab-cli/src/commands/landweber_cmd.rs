//! `landweber`: the monotone vs. oscillatory initialization experiment.
//! The monotone start (background below an inclusion conductivity) must
//! converge; the oscillatory start is recorded with its per-iteration
//! tangential-cone ratio and no convergence assertion.

use anyhow::Result;
use serde::Serialize;

use eit_lab::fem::Conductivity;
use eit_lab::landweber::{landweber_run, LandweberConfig, LandweberTrace, StopReason};
use eit_lab::mesh::build_structured_mesh;
use eit_lab::operator::build_boundary_basis;
use eit_lab::scenarios::{checkerboard, inclusion};

use crate::config::LoadedConfig;
use crate::report::OutputDir;

#[derive(Debug, Clone, Serialize)]
struct TraceRow {
    iter: usize,
    residual: f64,
    error_x: f64,
    eta_stc: Option<f64>,
    clamped: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
struct RunSummary {
    stop_index: usize,
    stop_reason: StopReason,
    initial_residual: f64,
    final_residual: f64,
    relative_residual: f64,
    step_size: f64,
    lipschitz_estimate: f64,
    first_step_monotone: bool,
    strictly_decreasing: bool,
    diverged: bool,
    clamp_activations: usize,
}

fn summarize(trace: &LandweberTrace<f64>) -> RunSummary {
    let r0 = trace.residual_norms[0];
    let rend = *trace.residual_norms.last().unwrap();
    RunSummary {
        stop_index: trace.stop_index,
        stop_reason: trace.stop_reason,
        initial_residual: r0,
        final_residual: rend,
        relative_residual: if r0 > 0.0 { rend / r0 } else { 0.0 },
        step_size: trace.step_size,
        lipschitz_estimate: trace.lipschitz_estimate,
        first_step_monotone: trace.first_step_monotone,
        strictly_decreasing: trace.residual_norms.windows(2).all(|w| w[1] < w[0]),
        diverged: trace.diverged,
        clamp_activations: trace.clamped_counts.iter().sum(),
    }
}

fn rows(trace: &LandweberTrace<f64>) -> Vec<TraceRow> {
    (0..trace.residual_norms.len())
        .map(|i| TraceRow {
            iter: i,
            residual: trace.residual_norms[i],
            error_x: trace.error_norms[i],
            eta_stc: trace.eta_track.get(i).copied(),
            clamped: trace.clamped_counts.get(i).copied(),
        })
        .collect()
}

pub fn run(loaded: &LoadedConfig, out: &OutputDir) -> Result<bool> {
    let config = &loaded.config;
    let lw = &config.landweber;
    let mesh = build_structured_mesh::<f64>(config.mesh.n)?;
    let basis = build_boundary_basis(&mesh, lw.k, config.basis.family)?;

    let chi = inclusion(&mesh, lw.inclusion_center, lw.inclusion_radius, lw.inclusion_contrast);
    let dagger = Conductivity::auto(chi.iter().map(|&c| 1.0 + c).collect())?;
    let gamma0 = Conductivity::uniform(mesh.num_triangles(), 1.0)?;

    let monotone_cfg = LandweberConfig::<f64> {
        step_margin: lw.step_margin,
        tau: lw.tau,
        max_iter: lw.max_iter,
        noise_delta: lw.noise_delta,
        noise_seed: config.run.seed,
        target_rel_residual: Some(lw.target_rel_residual),
        track_eta: false,
        iterate_stride: lw.iterate_stride,
    };
    let monotone = landweber_run(&mesh, &basis, &gamma0, &dagger, &monotone_cfg)?;

    let osc_pattern = checkerboard(&mesh, 1, lw.oscillatory_amplitude)?;
    let osc_start = Conductivity::from_values(
        dagger
            .values()
            .iter()
            .zip(&osc_pattern)
            .map(|(&g, &p)| g + p)
            .collect(),
        dagger.lower_bound(),
        dagger.upper_bound(),
    )?;
    let osc_cfg = LandweberConfig::<f64> {
        max_iter: lw.oscillatory_max_iter,
        track_eta: true,
        ..monotone_cfg.clone()
    };
    let oscillatory = landweber_run(&mesh, &basis, &osc_start, &dagger, &osc_cfg)?;

    let p1 = out.write_csv("landweber_monotone.csv", &rows(&monotone))?;
    let p2 = out.write_csv("landweber_oscillatory.csv", &rows(&oscillatory))?;

    let mono_summary = summarize(&monotone);
    let osc_summary = summarize(&oscillatory);
    let summary = serde_json::json!({
        "config": loaded.hash,
        "seed": config.run.seed,
        "mesh_n": config.mesh.n,
        "k": lw.k,
        "monotone": mono_summary,
        "oscillatory": osc_summary,
        "stop_index_difference":
            osc_summary.stop_index as i64 - mono_summary.stop_index as i64,
    });
    let p3 = out.write_json("landweber_summary.json", &summary)?;

    // The monotone δ = 0 start must actually converge; the oscillatory run is
    // exploratory and only reported.
    let converged = lw.noise_delta > 0.0
        && mono_summary.stop_reason == StopReason::Discrepancy
        || lw.noise_delta == 0.0 && mono_summary.stop_reason == StopReason::TargetResidual;
    let ok = converged && mono_summary.strictly_decreasing && !mono_summary.diverged;
    println!(
        "landweber: monotone stop {} ({:?}, relative residual {:.3e}), oscillatory stop {} -> {}, {}, {}",
        mono_summary.stop_index,
        mono_summary.stop_reason,
        mono_summary.relative_residual,
        osc_summary.stop_index,
        p1.display(),
        p2.display(),
        p3.display()
    );
    Ok(ok)
}
