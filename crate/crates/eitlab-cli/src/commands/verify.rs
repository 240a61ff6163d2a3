//! `verify-identities`: the operator-module identity suite — cross-formula
//! consistency, resolvent identity, projector idempotence/self-adjointness
//! and kernel annihilation — over the configured scenarios.

use anyhow::Result;
use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use eit_lab::fem::{DiscreteOperators, GradientField};
use eit_lab::operator::{
    divergence_free_probe, dtn_difference_consistency, projector_matrix,
    resolvent_identity_check_with_cap, symmetric_eigenvalues, OperatorOnVd,
};

use crate::config::LoadedConfig;
use crate::report::{CheckRow, OutputDir};

const CROSS_TOL: f64 = 1e-11;
const RESOLVENT_TOL: f64 = 1e-9;
const PROJECTOR_TOL: f64 = 1e-10;
const XI_CAP: f64 = 0.95;
/// Projector checks build the full gradient-space matrix; a capped scenario
/// count keeps the suite within budget.
const PROJECTOR_SCENARIOS: usize = 20;

pub fn run(loaded: &LoadedConfig, out: &OutputDir) -> Result<bool> {
    let config = &loaded.config;
    let bench = super::workbench(config)?;
    let pool = super::thread_pool(config.run.jobs)?;
    let stamp = |check: &str, scenario: &str, value: f64, threshold: f64| CheckRow {
        check: check.to_string(),
        scenario: scenario.to_string(),
        value,
        threshold,
        pass: value <= threshold,
        seed: config.run.seed,
        mesh_n: config.mesh.n,
        k: config.basis.k,
        config: loaded.hash.clone(),
    };

    let mut rows: Vec<CheckRow> = bench
        .broken
        .iter()
        .map(|(name, err)| CheckRow {
            check: format!("scenario-realization: {err}"),
            scenario: name.clone(),
            value: f64::NAN,
            threshold: 0.0,
            pass: false,
            seed: config.run.seed,
            mesh_n: config.mesh.n,
            k: config.basis.k,
            config: loaded.hash.clone(),
        })
        .collect();

    let per_scenario: Vec<Vec<CheckRow>> = pool.install(|| {
        bench
            .scenarios
            .par_iter()
            .map(|sc| {
                let mut out = Vec::new();
                match dtn_difference_consistency(&bench.mesh, &bench.basis, &sc.gamma, &sc.gamma_dagger)
                {
                    Ok(v) => out.push(stamp("cross-formula", &sc.name, v, CROSS_TOL)),
                    Err(e) => out.push(stamp(&format!("cross-formula: {e}"), &sc.name, f64::NAN, 0.0)),
                }
                if sc.xi <= XI_CAP {
                    let f = DVector::from_fn(bench.mesh.boundary_nodes().len(), |i, _| {
                        ((i as f64) * 0.9 + 0.3).sin()
                    });
                    match resolvent_identity_check_with_cap(
                        &bench.mesh,
                        &sc.gamma,
                        &sc.gamma_dagger,
                        &f,
                        XI_CAP + 1e-9,
                    ) {
                        Ok(v) => out.push(stamp("resolvent-identity", &sc.name, v, RESOLVENT_TOL)),
                        Err(e) => {
                            out.push(stamp(&format!("resolvent-identity: {e}"), &sc.name, f64::NAN, 0.0))
                        }
                    }
                }
                out
            })
            .collect()
    });
    rows.extend(per_scenario.into_iter().flatten());

    // Projector structure on a capped number of conductivities.
    let ops = DiscreteOperators::new(&bench.mesh);
    let ws: DVector<f64> = ops.w.map(|w| w.sqrt());
    let wsi: DVector<f64> = ops.w.map(|w| 1.0 / w.sqrt());
    let projector_rows: Vec<Vec<CheckRow>> = pool.install(|| {
        bench
            .scenarios
            .iter()
            .take(PROJECTOR_SCENARIOS)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|sc| {
                let mut out = Vec::new();
                match projector_matrix(&bench.mesh, &sc.gamma) {
                    Ok(r) => {
                        let s = DMatrix::from_diagonal(&ws) * &r * DMatrix::from_diagonal(&wsi);
                        let asym = OperatorOnVd::asymmetry(&s);
                        out.push(stamp("projector-self-adjoint", &sc.name, asym, PROJECTOR_TOL));
                        let idem = &s * &s - &s;
                        let viol = symmetric_eigenvalues(&idem)
                            .iter()
                            .fold(0.0f64, |m, &l| m.max(l.abs()));
                        out.push(stamp("projector-idempotent", &sc.name, viol, PROJECTOR_TOL));

                        let mut rng = ChaCha12Rng::seed_from_u64(sc.seed ^ 0x9e3779b9);
                        let mut worst = 0.0f64;
                        for _ in 0..20 {
                            let phi = DVector::from_fn(bench.mesh.num_nodes(), |_, _| {
                                rng.random_range(-1.0..1.0)
                            });
                            let z = divergence_free_probe(&bench.mesh, &sc.gamma, &phi);
                            let rz = GradientField::from_vector(&r * z.as_vector()).unwrap();
                            let denom = z.w_norm(bench.mesh.element_areas()).max(1e-300);
                            worst = worst.max(rz.w_norm(bench.mesh.element_areas()) / denom);
                        }
                        out.push(stamp("projector-kernel", &sc.name, worst, PROJECTOR_TOL));
                    }
                    Err(e) => out.push(stamp(&format!("projector: {e}"), &sc.name, f64::NAN, 0.0)),
                }
                out
            })
            .collect()
    });
    rows.extend(projector_rows.into_iter().flatten());

    let path = out.write_csv("verify_identities.csv", &rows)?;
    let failures = rows.iter().filter(|r| !r.pass).count();
    println!(
        "verify-identities: {} checks, {} failures -> {}",
        rows.len(),
        failures,
        path.display()
    );
    Ok(failures == 0)
}
