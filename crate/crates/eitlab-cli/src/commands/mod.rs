pub mod certify;
pub mod landweber_cmd;
pub mod tcc_scan;
pub mod verify;

use anyhow::Result;
use eit_lab::mesh::{build_structured_mesh, Mesh};
use eit_lab::operator::{build_boundary_basis, BoundaryBasis};
use eit_lab::scenarios::{random_pair, realize, Scenario};

use crate::config::RunConfig;

/// Shared setup: mesh, basis, realized scenario list.
pub struct Workbench {
    pub mesh: Mesh<f64>,
    pub basis: BoundaryBasis<f64>,
    pub scenarios: Vec<Scenario<f64>>,
    /// Realization failures (name, error) surfaced as failing rows.
    pub broken: Vec<(String, String)>,
}

pub fn workbench(config: &RunConfig) -> Result<Workbench> {
    let mesh = build_structured_mesh::<f64>(config.mesh.n)?;
    let basis = build_boundary_basis(&mesh, config.basis.k, config.basis.family)?;
    let mut scenarios = Vec::new();
    let mut broken = Vec::new();
    for spec in &config.scenarios {
        match realize(&mesh, spec) {
            Ok(s) => scenarios.push(s),
            Err(e) => broken.push((spec.name.clone(), e.to_string())),
        }
    }
    for i in 0..config.random_scenarios.count {
        let seed = config.run.seed.wrapping_add(i as u64);
        scenarios.push(random_pair(&mesh, seed, config.random_scenarios.xi_max)?);
    }
    Ok(Workbench {
        mesh,
        basis,
        scenarios,
        broken,
    })
}

/// Build the rayon pool honoring the configured worker budget.
pub fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if jobs > 0 {
        builder = builder.num_threads(jobs);
    }
    Ok(builder.build()?)
}
