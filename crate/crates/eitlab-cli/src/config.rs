//! Run configuration: one human-editable TOML file with nested sections,
//! overridable by command-line flags and environment variables.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use eit_lab::operator::BasisFamily;
use eit_lab::scenarios::ScenarioSpec;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSection {
    pub n: usize,
}

impl Default for MeshSection {
    fn default() -> Self {
        Self { n: 8 }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisSection {
    pub k: usize,
    pub family: BasisFamily,
}

impl Default for BasisSection {
    fn default() -> Self {
        Self {
            k: 8,
            family: BasisFamily::Trigonometric,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    /// Relative certificate tolerance.
    pub tol: f64,
    /// Worker budget; 0 = all cores.
    pub jobs: usize,
    pub out_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 42,
            tol: 1e-8,
            jobs: 0,
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomScenarios {
    pub count: usize,
    pub xi_max: f64,
}

impl Default for RandomScenarios {
    fn default() -> Self {
        Self {
            count: 50,
            xi_max: 0.9,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct TccSection {
    pub eta_targets: Vec<f64>,
    /// Monotone sweep amplitudes as fractions of θ_η.
    pub monotone_fractions: Vec<f64>,
    /// Exploratory checkerboard sweep amplitudes (no assertions).
    pub checkerboard_amplitudes: Vec<f64>,
    /// Unbalanced sweep: minority-to-majority derivative-norm ratios.
    pub unbalanced_nus: Vec<f64>,
    /// Surrogate smoothness constant C₁ of the κ(m) diagnostics.
    pub c1: f64,
}

impl Default for TccSection {
    fn default() -> Self {
        Self {
            eta_targets: vec![0.25, 0.5, 1.0],
            monotone_fractions: vec![0.25, 0.5, 1.0],
            checkerboard_amplitudes: vec![0.02, 0.05],
            unbalanced_nus: vec![0.3],
            c1: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandweberSection {
    /// Basis size of the Landweber experiments (the data-space conditioning
    /// grows steeply with k; small k keeps δ = 0 runs convergent).
    pub k: usize,
    pub max_iter: usize,
    pub step_margin: f64,
    pub tau: f64,
    pub noise_delta: f64,
    pub target_rel_residual: f64,
    pub inclusion_center: [f64; 2],
    pub inclusion_radius: f64,
    pub inclusion_contrast: f64,
    pub oscillatory_amplitude: f64,
    pub oscillatory_max_iter: usize,
    /// Keep every n-th iterate in the trace files (0 = none).
    pub iterate_stride: usize,
}

impl Default for LandweberSection {
    fn default() -> Self {
        Self {
            k: 5,
            max_iter: 50_000,
            step_margin: 0.9,
            tau: 1.5,
            noise_delta: 0.0,
            target_rel_residual: 1e-8,
            inclusion_center: [0.5, 0.5],
            inclusion_radius: 0.25,
            inclusion_contrast: 0.05,
            oscillatory_amplitude: 0.05,
            oscillatory_max_iter: 400,
            iterate_stride: 0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mesh: MeshSection,
    pub basis: BasisSection,
    pub run: RunSection,
    #[serde(rename = "random-scenarios")]
    pub random_scenarios: RandomScenarios,
    #[serde(rename = "scenario")]
    pub scenarios: Vec<ScenarioSpec>,
    pub tcc: TccSection,
    pub landweber: LandweberSection,
}

/// Flag/environment overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub jobs: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

/// Loaded configuration plus the hash that stamps every output row.
pub struct LoadedConfig {
    pub config: RunConfig,
    pub hash: String,
}

pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<LoadedConfig> {
    let (mut config, file_bytes) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config file {}", p.display()))?;
            let config: RunConfig = toml::from_str(&text)
                .with_context(|| format!("parsing config file {}", p.display()))?;
            (config, text.into_bytes())
        }
        None => (RunConfig::default(), Vec::new()),
    };

    // Precedence: flags > environment > file.
    if let Ok(v) = std::env::var("EITLAB_OUT") {
        config.run.out_dir = PathBuf::from(v);
    }
    if let Ok(v) = std::env::var("EITLAB_JOBS") {
        config.run.jobs = v.parse().context("EITLAB_JOBS must be an integer")?;
    }
    if let Some(seed) = overrides.seed {
        config.run.seed = seed;
    }
    if let Some(tol) = overrides.tol {
        config.run.tol = tol;
    }
    if let Some(jobs) = overrides.jobs {
        config.run.jobs = jobs;
    }
    if let Some(out) = &overrides.out_dir {
        config.run.out_dir = out.clone();
    }
    validate(&config)?;

    let mut hasher = Sha256::new();
    hasher.update(&file_bytes);
    hasher.update(
        format!(
            "seed={};tol={};jobs={}",
            config.run.seed, config.run.tol, config.run.jobs
        )
        .as_bytes(),
    );
    let hash = hasher
        .finalize()
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect::<String>();

    Ok(LoadedConfig { config, hash })
}

fn validate(config: &RunConfig) -> Result<()> {
    if config.mesh.n == 0 {
        bail!("mesh.n must be >= 1");
    }
    let nb = 4 * config.mesh.n;
    if config.basis.k == 0 || config.basis.k > nb - 1 {
        bail!(
            "basis.k = {} incompatible with mesh.n = {} ({} boundary nodes)",
            config.basis.k,
            config.mesh.n,
            nb
        );
    }
    if config.landweber.k == 0 || config.landweber.k > nb - 1 {
        bail!("landweber.k incompatible with mesh.n");
    }
    if config.run.tol < 0.0 {
        bail!("run.tol must be >= 0");
    }
    if !(0.0..1.0).contains(&config.random_scenarios.xi_max) {
        bail!("random-scenarios.xi_max must lie in [0, 1)");
    }
    for eta in &config.tcc.eta_targets {
        if !(*eta > 0.0 && *eta <= 1.0) {
            bail!("tcc.eta_targets entries must lie in (0, 1]");
        }
    }
    Ok(())
}
