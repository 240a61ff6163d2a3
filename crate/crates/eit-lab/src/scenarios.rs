//! Deterministic generators of conductivity pairs and perturbation patterns
//! for the certification sweeps. A scenario is described by a serializable
//! recipe (the unit of experiment configuration) and realized on a mesh.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::Conductivity;
use crate::mesh::Mesh;
use crate::operator::contraction_parameter;
use crate::scalar::{real, to_f64, Real};

/// Sign-pattern class of the perturbation γ − γ†.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignClass {
    MonotonePlus,
    MonotoneMinus,
    Mixed,
    Checkerboard,
    SourceCondition,
}

/// One disk-shaped perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: [f64; 2],
    pub radius: f64,
    pub contrast: f64,
}

/// Background conductivity recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Background {
    Uniform { value: f64 },
    RandomUniform { lo: f64, hi: f64 },
}

/// Perturbation recipe applied on top of the background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PerturbationRecipe {
    /// Additive disks: γ = γ† + Σ contrast·χ_disk.
    Inclusions { disks: Vec<Disk> },
    /// Sign-alternating blocks: γ = γ† + checkerboard(block_size, amplitude).
    Checkerboard { block_size: usize, amplitude: f64 },
    /// Multiplicative noise: γ = γ†·(1 + u), u uniform in [−xi_max, xi_max].
    RandomRelative { xi_max: f64 },
}

/// Serializable scenario description; `seed` drives every random choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub seed: u64,
    pub background: Background,
    pub perturbation: PerturbationRecipe,
}

/// A realized conductivity pair with recorded contraction parameters.
#[derive(Debug, Clone)]
pub struct Scenario<T: Real> {
    pub name: String,
    pub seed: u64,
    pub gamma_dagger: Conductivity<T>,
    pub gamma: Conductivity<T>,
    pub xi_dagger: T,
    pub xi: T,
    pub class: SignClass,
}

impl<T: Real> Scenario<T> {
    pub fn from_parts(
        name: impl Into<String>,
        seed: u64,
        gamma_dagger: Conductivity<T>,
        gamma: Conductivity<T>,
        class: SignClass,
    ) -> Self {
        let xi_dagger = contraction_parameter(&gamma, &gamma_dagger);
        let xi = contraction_parameter(&gamma_dagger, &gamma);
        Self {
            name: name.into(),
            seed,
            gamma_dagger,
            gamma,
            xi_dagger,
            xi,
            class,
        }
    }
}

/// Indicator-of-a-disk pattern scaled by `contrast`: an element belongs to the
/// disk when its centroid does. An all-zero pattern means the disk missed the
/// mesh.
pub fn inclusion<T: Real>(mesh: &Mesh<T>, center: [f64; 2], radius: f64, contrast: f64) -> Vec<T> {
    let r2 = radius * radius;
    (0..mesh.num_triangles())
        .map(|t| {
            let c = mesh.centroid(t);
            let dx = to_f64(c[0]) - center[0];
            let dy = to_f64(c[1]) - center[1];
            if dx * dx + dy * dy <= r2 {
                real(contrast)
            } else {
                T::zero()
            }
        })
        .collect()
}

/// Number of elements hit by a pattern.
pub fn pattern_support<T: Real>(pattern: &[T]) -> usize {
    pattern.iter().filter(|&&v| v != T::zero()).count()
}

/// ±amplitude alternating on block_size×block_size groups of grid squares;
/// zero mean when the per-side block count is even.
pub fn checkerboard<T: Real>(mesh: &Mesh<T>, block_size: usize, amplitude: f64) -> Result<Vec<T>> {
    let n = mesh.subdivisions();
    if block_size == 0 || block_size > n {
        return Err(Error::InvalidArgument(format!(
            "block size {block_size} incompatible with grid of {n} squares per side"
        )));
    }
    Ok((0..mesh.num_triangles())
        .map(|t| {
            let cell = t / 2;
            let (i, j) = (cell % n, cell / n);
            if (i / block_size + j / block_size) % 2 == 0 {
                real(amplitude)
            } else {
                real(-amplitude)
            }
        })
        .collect())
}

/// Random admissible pair: γ† uniform per element in [0.8, 1.25] and
/// γ = γ†·(1 + u) with u uniform in [−xi_max, xi_max]. Deterministic in the
/// seed; the recomputed ξ† never exceeds `xi_max`.
pub fn random_pair<T: Real>(mesh: &Mesh<T>, seed: u64, xi_max: f64) -> Result<Scenario<T>> {
    if !(0.0..1.0).contains(&xi_max) {
        return Err(Error::InvalidArgument("xi_max must lie in [0, 1)".into()));
    }
    let spec = ScenarioSpec {
        name: format!("random-pair-{seed}"),
        seed,
        background: Background::RandomUniform { lo: 0.8, hi: 1.25 },
        perturbation: PerturbationRecipe::RandomRelative { xi_max },
    };
    realize(mesh, &spec)
}

/// Realize a scenario recipe on a mesh.
pub fn realize<T: Real>(mesh: &Mesh<T>, spec: &ScenarioSpec) -> Result<Scenario<T>> {
    let nt = mesh.num_triangles();
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);

    let dagger_vals: Vec<T> = match spec.background {
        Background::Uniform { value } => vec![real(value); nt],
        Background::RandomUniform { lo, hi } => {
            (0..nt).map(|_| real(rng.random_range(lo..hi))).collect()
        }
    };

    let (gamma_vals, class): (Vec<T>, SignClass) = match &spec.perturbation {
        PerturbationRecipe::Inclusions { disks } => {
            let mut vals = dagger_vals.clone();
            let mut pos = false;
            let mut neg = false;
            for d in disks {
                let pat = inclusion(mesh, d.center, d.radius, d.contrast);
                if pattern_support(&pat) > 0 {
                    if d.contrast > 0.0 {
                        pos = true;
                    } else if d.contrast < 0.0 {
                        neg = true;
                    }
                }
                for (v, p) in vals.iter_mut().zip(&pat) {
                    *v += *p;
                }
            }
            let class = match (pos, neg) {
                (true, false) => SignClass::MonotonePlus,
                (false, true) => SignClass::MonotoneMinus,
                _ => SignClass::Mixed,
            };
            (vals, class)
        }
        PerturbationRecipe::Checkerboard { block_size, amplitude } => {
            let pat = checkerboard(mesh, *block_size, *amplitude)?;
            (
                dagger_vals.iter().zip(&pat).map(|(&g, &p)| g + p).collect(),
                SignClass::Checkerboard,
            )
        }
        PerturbationRecipe::RandomRelative { xi_max } => {
            let vals = dagger_vals
                .iter()
                .map(|&g| g * real::<T>(1.0 + rng.random_range(-xi_max..=*xi_max)))
                .collect();
            (vals, SignClass::Mixed)
        }
    };

    let gamma_dagger = Conductivity::auto(dagger_vals)?;
    let gamma = Conductivity::auto(gamma_vals)?;
    Ok(Scenario::from_parts(
        spec.name.clone(),
        spec.seed,
        gamma_dagger,
        gamma,
        class,
    ))
}
