//! Nonlinear Landweber iteration γ_{k+1} = γ_k + ω·F′[γ_k]*(y^δ − F(γ_k))
//! with projection onto the ellipticity window, discrepancy stopping, and an
//! optional per-iteration record of the tangential-cone ratio — the harness
//! behind the monotone vs. oscillatory initialization experiments.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::Conductivity;
use crate::mesh::Mesh;
use crate::operator::{
    derivative_adjoint_from, derivative_form_from, dtn_form_from, BoundaryBasis, LiftedBasis,
    OperatorOnVd,
};
use crate::scalar::{real, to_f64, Real};
use crate::tcc::LinearizedMap;

/// Largest eigenvalue of a symmetric PSD matrix by power iteration with a
/// deterministic start; converges when the Rayleigh quotient moves by less
/// than `rel_tol` relatively.
pub fn power_iteration_norm<T: Real>(
    m: &DMatrix<T>,
    rel_tol: T,
    max_iter: usize,
) -> Result<T> {
    let n = m.nrows();
    // Deterministic, non-degenerate start.
    let mut v = DVector::<T>::from_fn(n, |i, _| T::one() + real::<T>(i as f64 % 7.0) / real(13.0));
    v /= v.norm();
    let mut lambda = T::zero();
    for _ in 0..max_iter {
        let w = m * &v;
        let nw = w.norm();
        if nw == T::zero() {
            return Ok(T::zero());
        }
        let next = v.dot(&w);
        v = w / nw;
        if (next - lambda).abs() <= rel_tol * next.abs().max(real(1e-300)) {
            return Ok(next.max(T::zero()));
        }
        lambda = next;
    }
    Err(Error::Estimation(format!(
        "power iteration did not reach {:?} relative change in {max_iter} iterations",
        to_f64(rel_tol)
    )))
}

/// X→Y operator norm of F′[γ]: square root of the top eigenvalue of the
/// normal operator in the area-weighted geometry.
pub fn estimate_lipschitz<T: Real>(
    mesh: &Mesh<T>,
    gamma: &Conductivity<T>,
    basis: &BoundaryBasis<T>,
) -> Result<T> {
    let lin = LinearizedMap::new(mesh, gamma, basis)?;
    lipschitz_of(&lin)
}

/// X→Y operator norm from a prebuilt linearized map.
pub fn lipschitz_of<T: Real>(lin: &LinearizedMap<T>) -> Result<T> {
    let normal = lin.symmetrized_normal();
    Ok(power_iteration_norm(&normal, real(1e-6), 500)?.sqrt())
}

/// Symmetric Gaussian K×K matrix rescaled to exact HS norm δ; deterministic
/// under the seed.
pub fn make_noise<T: Real>(k: usize, delta: T, seed: u64) -> Result<OperatorOnVd<T>> {
    if delta < T::zero() {
        return Err(Error::InvalidArgument("noise level must be >= 0".into()));
    }
    if delta == T::zero() {
        return Ok(OperatorOnVd::zeros(k, "noise"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let raw = DMatrix::<T>::from_fn(k, k, |_, _| real(rng.sample::<f64, _>(StandardNormal)));
    let sym = OperatorOnVd::new(raw, "noise");
    let norm = sym.hs_norm();
    if norm == T::zero() {
        return Err(Error::Estimation("degenerate noise draw".into()));
    }
    Ok(sym.scale(delta / norm, "noise"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Residual fell below τ·δ.
    Discrepancy,
    /// Residual fell below the configured fraction of the initial residual.
    TargetResidual,
    MaxIterations,
    /// A step produced non-finite values (recorded, not discarded).
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct LandweberConfig<T: Real> {
    /// ω = step_margin / L².
    pub step_margin: T,
    /// Discrepancy parameter τ.
    pub tau: T,
    pub max_iter: usize,
    /// HS norm δ of the synthetic data noise.
    pub noise_delta: T,
    pub noise_seed: u64,
    /// Extra stop: residual ≤ target·initial (useful for δ = 0 runs).
    pub target_rel_residual: Option<T>,
    /// Record η_stc(γ_k, γ†) each iteration.
    pub track_eta: bool,
    /// Keep every `iterate_stride`-th iterate in the trace (0 = none).
    pub iterate_stride: usize,
}

impl<T: Real> Default for LandweberConfig<T> {
    fn default() -> Self {
        Self {
            step_margin: real(0.9),
            tau: real(1.5),
            max_iter: 50_000,
            noise_delta: T::zero(),
            noise_seed: 0,
            target_rel_residual: Some(real(1e-8)),
            track_eta: false,
            iterate_stride: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LandweberTrace<T: Real> {
    /// ‖F(γ_k) − y^δ‖_Y, one entry per visited iterate (stop_index + 1).
    pub residual_norms: Vec<T>,
    /// X-norm of γ_k − γ†.
    pub error_norms: Vec<T>,
    /// η_stc(γ_k, γ†) per iteration when tracked (empty otherwise); entries
    /// are NaN where the pair degenerates.
    pub eta_track: Vec<T>,
    /// Thinned iterates (iteration index, per-element values).
    pub iterates: Vec<(usize, Vec<T>)>,
    /// Entries clamped back into the ellipticity window per accepted step.
    pub clamped_counts: Vec<usize>,
    pub step_size: T,
    pub lipschitz_estimate: T,
    pub stop_index: usize,
    pub stop_reason: StopReason,
    pub noise_delta: T,
    pub tau: T,
    /// Residual did not increase on the first step (1e-12 slack).
    pub first_step_monotone: bool,
    pub diverged: bool,
}

/// Run the projected Landweber iteration from `gamma0` against synthetic data
/// y^δ = F(γ†) + noise(δ). The iterate domain is the ellipticity window of
/// `gamma0`.
pub fn landweber_run<T: Real>(
    mesh: &Mesh<T>,
    basis: &BoundaryBasis<T>,
    gamma0: &Conductivity<T>,
    dagger: &Conductivity<T>,
    config: &LandweberConfig<T>,
) -> Result<LandweberTrace<T>> {
    if config.step_margin <= T::zero() || config.step_margin > T::one() {
        return Err(Error::InvalidArgument(
            "step margin must lie in (0, 1]".into(),
        ));
    }
    let k = basis.size();
    let ones = Conductivity::uniform(mesh.num_triangles(), T::one())?;
    let dtn_unit = dtn_form_from(basis.unit_lifts(), &ones);

    let lifts_dagger = LiftedBasis::new(mesh, dagger, basis)?;
    let f_dagger = dtn_form_from(&lifts_dagger, dagger).sub(&dtn_unit, "F(gd)");
    let noise = make_noise(k, config.noise_delta, config.noise_seed)?;
    let data = f_dagger.add(&noise, "y-delta");

    let lipschitz_estimate = estimate_lipschitz(mesh, gamma0, basis)?;
    if lipschitz_estimate <= T::zero() {
        return Err(Error::Estimation("degenerate linearized map".into()));
    }
    let step_size = config.step_margin / (lipschitz_estimate * lipschitz_estimate);

    let (lo, hi) = (gamma0.lower_bound(), gamma0.upper_bound());
    let areas = mesh.element_areas().to_vec();
    let x_norm_err = |g: &Conductivity<T>| -> T {
        g.values()
            .iter()
            .zip(dagger.values())
            .zip(&areas)
            .fold(T::zero(), |acc, ((&a, &b), &w)| {
                acc + w * (a - b) * (a - b)
            })
            .sqrt()
    };

    let mut current = gamma0.clone();
    let mut residual_norms = Vec::new();
    let mut error_norms = Vec::new();
    let mut eta_track = Vec::new();
    let mut iterates = Vec::new();
    let mut clamped_counts = Vec::new();
    let mut stop_reason = StopReason::MaxIterations;
    let mut diverged = false;
    let mut stop_index = 0usize;

    let tau_delta = config.tau * config.noise_delta;
    let mut initial_residual = T::zero();

    for iter in 0..=config.max_iter {
        stop_index = iter;
        let lifts = LiftedBasis::new(mesh, &current, basis)?;
        let f_cur = dtn_form_from(&lifts, &current).sub(&dtn_unit, "F(gk)");
        let residual_op = data.sub(&f_cur, "residual");
        let rnorm = residual_op.hs_norm();
        residual_norms.push(rnorm);
        error_norms.push(x_norm_err(&current));
        if config.iterate_stride > 0 && iter % config.iterate_stride == 0 {
            iterates.push((iter, current.values().to_vec()));
        }
        if config.track_eta {
            // η_stc(γ_k, γ†) against the clean data, linearized at γ_k.
            let clean_diff = f_dagger.sub(&f_cur, "DF");
            let dn = clean_diff.hs_norm();
            let dir: Vec<T> = dagger
                .values()
                .iter()
                .zip(current.values())
                .map(|(&d, &c)| d - c)
                .collect();
            let lin_term = derivative_form_from(&lifts, &dir);
            let eta = if dn > T::zero() {
                clean_diff.sub(&lin_term, "R").hs_norm() / dn
            } else {
                real(f64::NAN)
            };
            eta_track.push(eta);
        }

        if iter == 0 {
            initial_residual = rnorm;
        }
        if !to_f64(rnorm).is_finite() {
            stop_reason = StopReason::NonFinite;
            diverged = true;
            break;
        }
        if config.noise_delta > T::zero() && rnorm <= tau_delta {
            stop_reason = StopReason::Discrepancy;
            break;
        }
        if let Some(target) = config.target_rel_residual {
            if rnorm <= target * initial_residual {
                stop_reason = StopReason::TargetResidual;
                break;
            }
        }
        if rnorm == T::zero() {
            stop_reason = StopReason::TargetResidual;
            break;
        }
        if iter == config.max_iter {
            stop_reason = StopReason::MaxIterations;
            break;
        }

        let update = derivative_adjoint_from(mesh, &lifts, &residual_op)?;
        let stepped: Vec<T> = current
            .values()
            .iter()
            .zip(&update)
            .map(|(&g, &u)| g + step_size * u)
            .collect();
        if stepped.iter().any(|v| !to_f64(*v).is_finite()) {
            stop_reason = StopReason::NonFinite;
            diverged = true;
            break;
        }
        let (next, clamped) = Conductivity::clamped_from(&stepped, lo, hi);
        clamped_counts.push(clamped);
        current = next;
    }

    let first_step_monotone = residual_norms.len() < 2
        || residual_norms[1] <= residual_norms[0] * (T::one() + real(1e-12));

    Ok(LandweberTrace {
        residual_norms,
        error_norms,
        eta_track,
        iterates,
        clamped_counts,
        step_size,
        lipschitz_estimate,
        stop_index,
        stop_reason,
        noise_delta: config.noise_delta,
        tau: config.tau,
        first_step_monotone,
        diverged,
    })
}
