//! Tangential cone quantities of the discrete forward map and the sufficient
//! gates that guarantee them: the ζ-ratio bound, the localized θ_η bound with
//! its monotone corollary, the unbalanced positive/negative-part gates, the
//! source-condition construction, and the finite-dimensional norm-equivalence
//! constant.
//!
//! All Y-quantities live in the HS geometry of V_D; the parameter space X
//! carries the area-weighted element inner product.

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::Conductivity;
use crate::mesh::Mesh;
use crate::operator::{
    contraction_parameter, derivative_adjoint_from, derivative_form_from, dtn_form_from, hs_inner,
    BoundaryBasis, LiftedBasis, OperatorOnVd,
};
use crate::scalar::{real, to_f64, Real};

/// Additive slack granted to every measured-vs-guaranteed η comparison.
pub const GUARANTEE_SLACK: f64 = 1e-8;

/// θ_η = α̲·η/(4+η): the monotone-perturbation radius guaranteeing the strong
/// tangential cone condition with constant η. Requires 0 < η ≤ 1.
pub fn theta_eta<T: Real>(eta: T, alpha_lower: T) -> Result<T> {
    if !(eta > T::zero() && eta <= T::one()) {
        return Err(Error::InvalidArgument(format!(
            "eta = {:?} outside (0, 1]",
            to_f64(eta)
        )));
    }
    if alpha_lower <= T::zero() {
        return Err(Error::InvalidArgument("alpha_lower must be positive".into()));
    }
    Ok(alpha_lower * eta / (real::<T>(4.0) + eta))
}

/// Positive/negative part split δ = p − n with p,n ≥ 0 and p·n = 0.
pub fn split_parts<T: Real>(delta: &[T]) -> (Vec<T>, Vec<T>) {
    let pos = delta.iter().map(|&d| d.max(T::zero())).collect();
    let neg = delta.iter().map(|&d| (-d).max(T::zero())).collect();
    (pos, neg)
}

/// Linearized forward map w ↦ F′[γ](w) with the block Gram matrix that makes
/// Y-norms of arbitrary directions cheap: ‖F′(w)‖² = wᵀ·M·w with
/// M[t][s] = ⟨P_t, P_s⟩_F.
pub struct LinearizedMap<T: Real> {
    lifts: LiftedBasis<T>,
    block_gram: DMatrix<T>,
    areas: Vec<T>,
}

impl<T: Real> LinearizedMap<T> {
    pub fn new(mesh: &Mesh<T>, gamma: &Conductivity<T>, basis: &BoundaryBasis<T>) -> Result<Self> {
        let lifts = LiftedBasis::new(mesh, gamma, basis)?;
        Ok(Self::from_lifts(mesh, lifts))
    }

    pub fn from_lifts(mesh: &Mesh<T>, lifts: LiftedBasis<T>) -> Self {
        let nt = mesh.num_triangles();
        let mut block_gram = DMatrix::<T>::zeros(nt, nt);
        for t in 0..nt {
            for s in t..nt {
                let v = lifts.element_grams[t].dot(&lifts.element_grams[s]);
                block_gram[(t, s)] = v;
                block_gram[(s, t)] = v;
            }
        }
        Self {
            lifts,
            block_gram,
            areas: mesh.element_areas().to_vec(),
        }
    }

    pub fn lifts(&self) -> &LiftedBasis<T> {
        &self.lifts
    }

    pub fn num_elements(&self) -> usize {
        self.areas.len()
    }

    /// ‖F′[γ](w)‖_Y without forming the K×K matrix.
    pub fn y_norm(&self, w: &[T]) -> T {
        let wv = DVector::from_column_slice(w);
        (&wv.transpose() * &self.block_gram * &wv)[(0, 0)].max(T::zero()).sqrt()
    }

    pub fn form(&self, w: &[T]) -> OperatorOnVd<T> {
        derivative_form_from(&self.lifts, w)
    }

    pub fn adjoint(&self, mesh: &Mesh<T>, s: &OperatorOnVd<T>) -> Result<Vec<T>> {
        derivative_adjoint_from(mesh, &self.lifts, s)
    }

    /// Area-weighted X-norm of an element function.
    pub fn x_norm(&self, w: &[T]) -> T {
        w.iter()
            .zip(&self.areas)
            .fold(T::zero(), |acc, (&v, &a)| acc + a * v * v)
            .sqrt()
    }

    /// Symmetrized normal operator X^{-1/2}·F′*·F′·X^{-1/2} in the
    /// area-weighted geometry (dense, element-indexed).
    pub fn symmetrized_normal(&self) -> DMatrix<T> {
        let nt = self.num_elements();
        let mut m = self.block_gram.clone();
        for t in 0..nt {
            let st = self.areas[t].sqrt();
            for s in 0..nt {
                m[(t, s)] /= st;
            }
        }
        for s in 0..nt {
            let ss = self.areas[s].sqrt();
            for t in 0..nt {
                m[(t, s)] /= ss;
            }
        }
        (&m + m.transpose()) * real::<T>(0.5)
    }

    /// Bracket [lower, upper] of the L^∞→Y operator norm of F′[γ]. The lower
    /// bound maximizes over elementwise-sign vectors by greedy flips with
    /// random restarts (the sup is attained at a sign vector); the upper
    /// bound is the triangle inequality Σ_t ‖P_t‖_F.
    pub fn sup_norm_bracket(&self, restarts: usize, seed: u64) -> (T, T) {
        let nt = self.num_elements();
        let upper = (0..nt).fold(T::zero(), |acc, t| acc + self.block_gram[(t, t)].sqrt());

        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut best = T::zero();
        for r in 0..restarts.max(1) {
            let mut w: Vec<T> = if r == 0 {
                vec![T::one(); nt]
            } else {
                (0..nt)
                    .map(|_| if rng.random_bool(0.5) { T::one() } else { -T::one() })
                    .collect()
            };
            let wv = DVector::from_column_slice(&w);
            let mut g = &self.block_gram * &wv;
            let mut q = wv.dot(&g);
            let mut improved = true;
            while improved {
                improved = false;
                for t in 0..nt {
                    // Flipping w_t changes q by 4·(M_tt − w_t·g_t).
                    let delta = real::<T>(4.0) * (self.block_gram[(t, t)] - w[t] * g[t]);
                    if delta > q * real(1e-12) {
                        let step = -real::<T>(2.0) * w[t];
                        for s in 0..nt {
                            g[s] += step * self.block_gram[(s, t)];
                        }
                        w[t] = -w[t];
                        q += delta;
                        improved = true;
                    }
                }
            }
            best = best.max(q.max(T::zero()).sqrt());
        }
        (best, upper)
    }

    /// κ(m) = min over admissible centroid centers x₀ (ball inside Ω) of
    /// ‖F′[γ]·χ_{B_m(x₀)}‖_Y; `None` when no ball of radius m fits.
    pub fn kappa(&self, mesh: &Mesh<T>, m: T) -> Option<T> {
        let nt = self.num_elements();
        let mut best: Option<T> = None;
        for c in 0..nt {
            let x0 = mesh.centroid(c);
            let fits =
                x0[0] >= m && x0[1] >= m && T::one() - x0[0] >= m && T::one() - x0[1] >= m;
            if !fits {
                continue;
            }
            let chi: Vec<T> = (0..nt)
                .map(|t| {
                    let ct = mesh.centroid(t);
                    let d2 = (ct[0] - x0[0]).powi(2) + (ct[1] - x0[1]).powi(2);
                    if d2 <= m * m {
                        T::one()
                    } else {
                        T::zero()
                    }
                })
                .collect();
            let v = self.y_norm(&chi);
            best = Some(match best {
                Some(b) => b.min(v),
                None => v,
            });
        }
        best
    }
}

/// All tangential-cone ratios of one pair, for both linearization points.
#[derive(Debug, Clone, Serialize)]
pub struct TccReport<T: Real> {
    pub eta_stc_at_gamma: T,
    pub eta_stc_at_dagger: T,
    pub eta_wtc_at_gamma: T,
    pub eta_wtc_at_dagger: T,
    pub qcon_at_gamma: T,
    pub qcon_at_dagger: T,
    /// ζ = ‖F′[γ]((γ−γ†)²/γ†)‖/‖F′[γ](γ−γ†)‖.
    pub zeta: T,
    pub eta_target: T,
    pub theta_eta: T,
    pub xi_dagger: T,
    pub xi: T,
    pub norm_data_difference: T,
    pub norm_derivative_at_gamma: T,
    pub norm_derivative_at_dagger: T,
    pub norm_remainder_at_gamma: T,
    pub norm_remainder_at_dagger: T,
    /// Worst relative residual of the parallelogram identity linking the
    /// stored norms, over both linearization points.
    pub para_residual: T,
}

struct PairForms<T: Real> {
    delta: Vec<T>,
    data_difference: OperatorOnVd<T>,
    deriv_at_gamma: OperatorOnVd<T>,
    deriv_at_dagger: OperatorOnVd<T>,
    lifts_gamma: LiftedBasis<T>,
}

fn pair_forms<T: Real>(
    mesh: &Mesh<T>,
    basis: &BoundaryBasis<T>,
    gamma: &Conductivity<T>,
    dagger: &Conductivity<T>,
) -> Result<PairForms<T>> {
    let lifts_gamma = LiftedBasis::new(mesh, gamma, basis)?;
    let lifts_dagger = LiftedBasis::new(mesh, dagger, basis)?;
    let dtn_g = dtn_form_from(&lifts_gamma, gamma);
    let dtn_d = dtn_form_from(&lifts_dagger, dagger);
    let scale = dtn_g.hs_norm().max(dtn_d.hs_norm());
    let data_difference = dtn_g.sub(&dtn_d, "DLam");
    if data_difference.hs_norm() < real::<T>(1e-13) * scale {
        return Err(Error::DegeneratePair(
            "data difference below 1e-13 of the DtN scale".into(),
        ));
    }
    let delta: Vec<T> = gamma
        .values()
        .iter()
        .zip(dagger.values())
        .map(|(&g, &d)| g - d)
        .collect();
    let deriv_at_gamma = derivative_form_from(&lifts_gamma, &delta);
    let deriv_at_dagger = derivative_form_from(&lifts_dagger, &delta);
    Ok(PairForms {
        delta,
        data_difference,
        deriv_at_gamma,
        deriv_at_dagger,
        lifts_gamma,
    })
}

fn para_residual<T: Real>(
    remainder: &OperatorOnVd<T>,
    data_difference: &OperatorOnVd<T>,
    deriv: &OperatorOnVd<T>,
) -> T {
    let r2 = remainder.hs_norm().powi(2);
    let f2 = data_difference.hs_norm().powi(2);
    let d2 = deriv.hs_norm().powi(2);
    let cross = hs_inner(deriv, data_difference);
    let lhs = r2 - f2 + real::<T>(2.0) * cross - d2;
    lhs.abs() / r2.max(f2).max(d2).max(real(1e-300))
}

/// Measure every tangential-cone ratio of the pair (γ, γ†) in the HS
/// geometry; `eta_target` feeds only the reported θ_η. Errors on degenerate
/// pairs (F(γ) = F(γ†)).
pub fn tcc_measure<T: Real>(
    mesh: &Mesh<T>,
    basis: &BoundaryBasis<T>,
    gamma: &Conductivity<T>,
    dagger: &Conductivity<T>,
    eta_target: T,
) -> Result<TccReport<T>> {
    let forms = pair_forms(mesh, basis, gamma, dagger)?;
    let dl = &forms.data_difference;
    let hs_dl = dl.hs_norm();
    let rem_g = dl.sub(&forms.deriv_at_gamma, "R@g");
    let rem_d = dl.sub(&forms.deriv_at_dagger, "R@gd");
    let hs_dl_sq = hs_dl * hs_dl;

    let delta_sq_over: Vec<T> = forms
        .delta
        .iter()
        .zip(dagger.values())
        .map(|(&d, &gd)| d * d / gd)
        .collect();
    let zeta_num = derivative_form_from(&forms.lifts_gamma, &delta_sq_over).hs_norm();
    let zeta_den = forms.deriv_at_gamma.hs_norm();

    Ok(TccReport {
        eta_stc_at_gamma: rem_g.hs_norm() / hs_dl,
        eta_stc_at_dagger: rem_d.hs_norm() / hs_dl,
        eta_wtc_at_gamma: hs_inner(&rem_g, dl) / hs_dl_sq,
        eta_wtc_at_dagger: hs_inner(&rem_d, dl) / hs_dl_sq,
        qcon_at_gamma: hs_inner(&forms.deriv_at_gamma, dl),
        qcon_at_dagger: hs_inner(&forms.deriv_at_dagger, dl),
        zeta: if zeta_den > T::zero() {
            zeta_num / zeta_den
        } else {
            T::zero()
        },
        eta_target,
        theta_eta: theta_eta(eta_target, dagger.lower_bound())?,
        xi_dagger: contraction_parameter(gamma, dagger),
        xi: contraction_parameter(dagger, gamma),
        norm_data_difference: hs_dl,
        norm_derivative_at_gamma: forms.deriv_at_gamma.hs_norm(),
        norm_derivative_at_dagger: forms.deriv_at_dagger.hs_norm(),
        norm_remainder_at_gamma: rem_g.hs_norm(),
        norm_remainder_at_dagger: rem_d.hs_norm(),
        para_residual: para_residual(&rem_g, dl, &forms.deriv_at_gamma)
            .max(para_residual(&rem_d, dl, &forms.deriv_at_dagger)),
    })
}

/// First sufficient condition: ζ ≤ 1 gives the weak condition with η ≥ 1/2;
/// ζ < 1 gives the strong condition with η = ζ/(1−ζ).
#[derive(Debug, Clone, Serialize)]
pub struct ZetaReport<T: Real> {
    pub zeta: T,
    pub predicted_eta: Option<T>,
    pub measured_eta_at_gamma: T,
    /// measured ≤ predicted + slack, when ζ < 1.
    pub strong_guarantee_ok: Option<bool>,
    pub weak_condition_holds: bool,
    pub measured_eta_wtc_at_gamma: T,
    /// wtc ≤ 1/2 + slack, when the weak gate ζ ≤ 1 fires.
    pub weak_guarantee_ok: Option<bool>,
}

pub fn sufficient_zeta<T: Real>(
    mesh: &Mesh<T>,
    basis: &BoundaryBasis<T>,
    gamma: &Conductivity<T>,
    dagger: &Conductivity<T>,
) -> Result<ZetaReport<T>> {
    let report = tcc_measure(mesh, basis, gamma, dagger, real(0.5))?;
    if report.norm_derivative_at_gamma == T::zero() {
        return Err(Error::DegeneratePair("zero derivative norm".into()));
    }
    let slack = real::<T>(GUARANTEE_SLACK);
    let zeta = report.zeta;
    let (predicted_eta, strong_guarantee_ok) = if zeta < T::one() {
        let pred = zeta / (T::one() - zeta);
        let ok = report.eta_stc_at_gamma <= pred + slack;
        (Some(pred), Some(ok))
    } else {
        (None, None)
    };
    let weak_condition_holds = zeta <= T::one();
    let weak_guarantee_ok =
        weak_condition_holds.then(|| report.eta_wtc_at_gamma <= real::<T>(0.5) + slack);
    Ok(ZetaReport {
        zeta,
        predicted_eta,
        measured_eta_at_gamma: report.eta_stc_at_gamma,
        strong_guarantee_ok,
        weak_condition_holds,
        measured_eta_wtc_at_gamma: report.eta_wtc_at_gamma,
        weak_guarantee_ok,
    })
}

/// Localized sufficient condition at γ†:
/// ‖F′[γ†](|γ−γ†|²)‖ ≤ θ_η·‖F′[γ†](γ−γ†)‖ with θ_η = α̲η/(4+η).
#[derive(Debug, Clone, Serialize)]
pub struct MjmiReport<T: Real> {
    pub eta: T,
    pub theta: T,
    /// ‖F′[γ†](|γ−γ†|²)‖.
    pub lhs_norm: T,
    /// ‖F′[γ†](γ−γ†)‖.
    pub deriv_norm: T,
    pub holds: bool,
    pub measured_eta_at_gamma: T,
    /// measured ≤ η + slack, when the condition holds.
    pub guarantee_ok: Option<bool>,
    /// Norm-equivalence constant ‖F′[γ†](|γ−γ†|)‖/‖F′[γ†](γ−γ†)‖ (≥ 1).
    pub c_abs: T,
    pub amplitude: T,
    /// Amplitude gate ‖γ−γ†‖_∞ ≤ C·θ_η as stated.
    pub pair_gate_as_stated: bool,
    /// Amplitude gate ‖γ−γ†‖_∞ ≤ θ_η/C implied by the chain through the
    /// monotone norm bound; the safe form when C > 1.
    pub pair_gate_proof_form: bool,
}

pub fn check_mjmi<T: Real>(
    mesh: &Mesh<T>,
    basis: &BoundaryBasis<T>,
    gamma: &Conductivity<T>,
    dagger: &Conductivity<T>,
    eta: T,
) -> Result<MjmiReport<T>> {
    let xi_dagger = contraction_parameter(gamma, dagger);
    let xi = contraction_parameter(dagger, gamma);
    if !(xi_dagger < T::one() && xi < T::one()) {
        return Err(Error::Precondition(format!(
            "contraction parameters xi_dagger = {:?}, xi = {:?} must both be < 1",
            to_f64(xi_dagger),
            to_f64(xi)
        )));
    }
    let theta = theta_eta(eta, dagger.lower_bound())?;
    let report = tcc_measure(mesh, basis, gamma, dagger, eta)?;

    let lin = LinearizedMap::new(mesh, dagger, basis)?;
    let delta: Vec<T> = gamma
        .values()
        .iter()
        .zip(dagger.values())
        .map(|(&g, &d)| g - d)
        .collect();
    let delta_sq: Vec<T> = delta.iter().map(|&d| d * d).collect();
    let delta_abs: Vec<T> = delta.iter().map(|&d| d.abs()).collect();
    let lhs_norm = lin.y_norm(&delta_sq);
    let deriv_norm = lin.y_norm(&delta);
    // Round-off slack for equality-boundary cases (amplitude exactly θ_η);
    // far below the guarantee slack.
    let rel = T::one() + real::<T>(1e-12);
    let holds = lhs_norm <= theta * deriv_norm * rel;
    let slack = real::<T>(GUARANTEE_SLACK);
    let guarantee_ok = holds.then(|| report.eta_stc_at_gamma <= eta + slack);
    let c_abs = if deriv_norm > T::zero() {
        lin.y_norm(&delta_abs) / deriv_norm
    } else {
        T::max_value().unwrap()
    };
    let amplitude = delta.iter().fold(T::zero(), |m, &d| m.max(d.abs()));
    Ok(MjmiReport {
        eta,
        theta,
        lhs_norm,
        deriv_norm,
        holds,
        measured_eta_at_gamma: report.eta_stc_at_gamma,
        guarantee_ok,
        c_abs,
        amplitude,
        pair_gate_as_stated: amplitude <= c_abs * theta * rel,
        pair_gate_proof_form: amplitude <= theta / c_abs * rel,
    })
}

/// Guaranteed amplitude for a fixed-sign direction: min(θ_η, α̲)/‖dir‖_∞.
/// Rejects sign-mixed directions.
pub fn monotone_radius<T: Real>(dagger: &Conductivity<T>, direction: &[T], eta: T) -> Result<T> {
    let has_pos = direction.iter().any(|&d| d > T::zero());
    let has_neg = direction.iter().any(|&d| d < T::zero());
    if has_pos && has_neg {
        return Err(Error::InvalidArgument(
            "monotone radius requires a fixed-sign direction".into(),
        ));
    }
    let sup = direction.iter().fold(T::zero(), |m, &d| m.max(d.abs()));
    if sup == T::zero() {
        return Err(Error::InvalidArgument("zero direction".into()));
    }
    let alpha = dagger.lower_bound();
    let theta = theta_eta(eta, alpha)?;
    Ok(theta.min(alpha) / sup)
}

/// Unbalanced positive/negative-part gates with the constructive κ(m)/ψ(M)
/// diagnostics of the smooth-conductivity result.
#[derive(Debug, Clone, Serialize)]
pub struct UnbalancedReport<T: Real> {
    /// False when ‖F′p‖ = ‖F′n‖ (ruled out by the assumptions).
    pub applicable: bool,
    pub norm_pos: T,
    pub norm_neg: T,
    pub norm_delta: T,
    /// C of the dominance inequality, measured from the minority part.
    pub c_fir: T,
    /// ν of the part-ratio inequality: min/max of the two part norms.
    pub nu: T,
    pub amplitude: T,
    pub theta: T,
    /// ‖γ−γ†‖_∞ ≤ θ_η/(2C+1).
    pub gate_fir: bool,
    /// ‖γ−γ†‖_∞ ≤ (θ_η/3)(1−ν).
    pub gate_fir1: bool,
    pub measured_eta_at_gamma: T,
    /// measured ≤ η + slack, when either gate fires.
    pub guarantee_ok: Option<bool>,
    /// Bracket of L = ‖F′[γ†]‖ from L^∞ to Y.
    pub lipschitz_lower: T,
    pub lipschitz_upper: T,
    /// κ(M/C₁) at the majority-part sup M; 0 when no ball fits.
    pub kappa_at_m: T,
    /// κ nondecreasing on the sampled radius grid.
    pub kappa_monotone: bool,
    /// ν of the ψ construction: 1 − 3‖γ−γ†‖_∞/θ_η (clamped at 0).
    pub nu_psi: T,
    /// ψ(M) = M·κ(M/C₁)·ν_ψ/(2L), with the conservative upper L.
    pub psi_value: T,
    /// ‖minority part‖_∞ ≤ ψ(M), when ψ > 0.
    pub psi_gate: Option<bool>,
}

pub fn check_unbalanced<T: Real>(
    mesh: &Mesh<T>,
    basis: &BoundaryBasis<T>,
    gamma: &Conductivity<T>,
    dagger: &Conductivity<T>,
    eta: T,
    c1: T,
) -> Result<UnbalancedReport<T>> {
    let xi_dagger = contraction_parameter(gamma, dagger);
    let xi = contraction_parameter(dagger, gamma);
    if !(xi_dagger < T::one() && xi < T::one()) {
        return Err(Error::Precondition(
            "contraction parameters must both be < 1".into(),
        ));
    }
    let theta = theta_eta(eta, dagger.lower_bound())?;
    let report = tcc_measure(mesh, basis, gamma, dagger, eta)?;

    let delta: Vec<T> = gamma
        .values()
        .iter()
        .zip(dagger.values())
        .map(|(&g, &d)| g - d)
        .collect();
    let (pos, neg) = split_parts(&delta);
    let lin = LinearizedMap::new(mesh, dagger, basis)?;
    let norm_pos = lin.y_norm(&pos);
    let norm_neg = lin.y_norm(&neg);
    let norm_delta = lin.y_norm(&delta);
    if norm_delta == T::zero() {
        return Err(Error::DegeneratePair("zero derivative norm".into()));
    }

    let lo = norm_pos.min(norm_neg);
    let hi = norm_pos.max(norm_neg);
    let applicable = (hi - lo) > real::<T>(1e-12) * hi.max(real(1e-300));
    let c_fir = lo / norm_delta;
    let nu = if hi > T::zero() { lo / hi } else { T::zero() };
    let amplitude = delta.iter().fold(T::zero(), |m, &d| m.max(d.abs()));

    let gate_fir = applicable && amplitude <= theta / (real::<T>(2.0) * c_fir + T::one());
    let gate_fir1 =
        applicable && nu < T::one() && amplitude <= theta / real::<T>(3.0) * (T::one() - nu);
    let slack = real::<T>(GUARANTEE_SLACK);
    let guarantee_ok = (gate_fir || gate_fir1).then(|| report.eta_stc_at_gamma <= eta + slack);

    // ψ(M) diagnostics.
    let (lip_lo, lip_up) = lin.sup_norm_bracket(4, 7);
    let majority = if norm_pos >= norm_neg { &pos } else { &neg };
    let minority = if norm_pos >= norm_neg { &neg } else { &pos };
    let maj_sup = majority.iter().fold(T::zero(), |m, &v| m.max(v));
    let min_sup = minority.iter().fold(T::zero(), |m, &v| m.max(v));
    let kappa_at_m = lin.kappa(mesh, maj_sup / c1).unwrap_or(T::zero());
    let h = T::one() / real(mesh.subdivisions() as f64);
    let radii = [h, real::<T>(0.15), real::<T>(0.3), real::<T>(0.45)];
    let mut kappa_monotone = true;
    let mut prev: Option<T> = None;
    for &r in &radii {
        if let Some(kv) = lin.kappa(mesh, r) {
            if let Some(p) = prev {
                if kv < p - real(1e-10) {
                    kappa_monotone = false;
                }
            }
            prev = Some(kv);
        }
    }
    let nu_psi = (T::one() - real::<T>(3.0) * amplitude / theta).max(T::zero());
    let psi_value = if lip_up > T::zero() {
        maj_sup * kappa_at_m * nu_psi / (real::<T>(2.0) * lip_up)
    } else {
        T::zero()
    };
    let psi_gate = (psi_value > T::zero()).then(|| min_sup <= psi_value);

    Ok(UnbalancedReport {
        applicable,
        norm_pos,
        norm_neg,
        norm_delta,
        c_fir,
        nu,
        amplitude,
        theta,
        gate_fir,
        gate_fir1,
        measured_eta_at_gamma: report.eta_stc_at_gamma,
        guarantee_ok,
        lipschitz_lower: lip_lo,
        lipschitz_upper: lip_up,
        kappa_at_m,
        kappa_monotone,
        nu_psi,
        psi_value,
        psi_gate,
    })
}

/// Perturbation built from the source condition δγ = (F′*F′)^μ ω in the
/// area-weighted geometry, rescaled to a target sup amplitude.
#[derive(Debug, Clone, Serialize)]
pub struct SourceConditionElement<T: Real> {
    pub perturbation: Vec<T>,
    pub mu: T,
    pub scale: T,
    /// X-norm of the effectively rescaled ω.
    pub omega_norm_x: T,
    /// Measured embedding constant of X into L^∞ on this mesh.
    pub embedding_constant: T,
}

pub fn source_condition_element<T: Real>(
    mesh: &Mesh<T>,
    basis: &BoundaryBasis<T>,
    dagger: &Conductivity<T>,
    mu: T,
    omega: &[T],
    scale: T,
) -> Result<SourceConditionElement<T>> {
    if mu < T::zero() {
        return Err(Error::InvalidArgument("mu must be nonnegative".into()));
    }
    if omega.len() != mesh.num_triangles() {
        return Err(Error::DimensionMismatch(
            "omega length != number of elements".into(),
        ));
    }
    let lin = LinearizedMap::new(mesh, dagger, basis)?;
    let raw: Vec<T> = if mu == T::zero() {
        omega.to_vec()
    } else {
        let normal = lin.symmetrized_normal();
        let eig = normal.symmetric_eigen();
        let nt = mesh.num_triangles();
        let mut w_tilde = DVector::<T>::zeros(nt);
        for t in 0..nt {
            w_tilde[t] = omega[t] * mesh.element_area(t).sqrt();
        }
        let coeffs = eig.eigenvectors.transpose() * w_tilde;
        let mut powered = DVector::<T>::zeros(nt);
        for i in 0..nt {
            let lam = eig.eigenvalues[i].max(T::zero());
            powered[i] = if lam > T::zero() {
                lam.powf(mu) * coeffs[i]
            } else {
                T::zero()
            };
        }
        let v = &eig.eigenvectors * powered;
        (0..nt)
            .map(|t| v[t] / mesh.element_area(t).sqrt())
            .collect()
    };
    let raw_sup = raw.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    if raw_sup == T::zero() {
        return Err(Error::DegeneratePair(
            "source-condition element vanishes".into(),
        ));
    }
    let factor = scale / raw_sup;
    let perturbation: Vec<T> = raw.iter().map(|&v| v * factor).collect();

    for (&g, &p) in dagger.values().iter().zip(&perturbation) {
        let v = g + p;
        if v < dagger.lower_bound() || v > dagger.upper_bound() {
            return Err(Error::EllipticityViolation(
                "source-condition scale pushes the conductivity out of its bounds".into(),
            ));
        }
    }

    let omega_eff: Vec<T> = omega.iter().map(|&v| v * factor).collect();
    let embedding_constant = mesh
        .element_areas()
        .iter()
        .fold(T::zero(), |m, &a| m.max(T::one() / a.sqrt()));
    Ok(SourceConditionElement {
        perturbation,
        mu,
        scale,
        omega_norm_x: lin.x_norm(&omega_eff),
        embedding_constant,
    })
}

/// Estimated norm-equivalence constant on a finite-dimensional subspace:
/// C_n = max over sampled unit directions w of ‖F′[γ†](|w|)‖/‖F′[γ†](w)‖
/// (a lower bound of the true constant).
#[derive(Debug, Clone, Serialize)]
pub struct FiniteDimReport<T: Real> {
    pub c_estimate: T,
    pub smallest_singular_value: T,
    pub samples_used: usize,
}

pub fn finite_dim_constant<T: Real>(
    mesh: &Mesh<T>,
    basis: &BoundaryBasis<T>,
    dagger: &Conductivity<T>,
    patterns: &[Vec<T>],
    samples: usize,
    seed: u64,
) -> Result<FiniteDimReport<T>> {
    if patterns.is_empty() {
        return Err(Error::InvalidArgument("empty subspace".into()));
    }
    let nt = mesh.num_triangles();
    for p in patterns {
        if p.len() != nt {
            return Err(Error::DimensionMismatch(
                "pattern length != number of elements".into(),
            ));
        }
    }
    let lin = LinearizedMap::new(mesh, dagger, basis)?;

    // Normalize patterns in X, then check injectivity of F′ on the span via
    // the smallest singular value of the image Gram.
    let normed: Vec<Vec<T>> = patterns
        .iter()
        .map(|p| {
            let nx = lin.x_norm(p);
            p.iter().map(|&v| v / nx).collect()
        })
        .collect();
    let p = normed.len();
    let mut gram = DMatrix::<T>::zeros(p, p);
    for i in 0..p {
        let di = lin.form(&normed[i]);
        for j in i..p {
            let dj = lin.form(&normed[j]);
            let v = hs_inner(&di, &dj);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let eigs = gram.symmetric_eigen().eigenvalues;
    let min_eig = eigs.iter().fold(T::max_value().unwrap(), |m, &l| m.min(l));
    let smallest_singular_value = min_eig.max(T::zero()).sqrt();
    if smallest_singular_value <= real(1e-10) {
        return Err(Error::Rank(format!(
            "linearized map not injective on the subspace (sigma_min = {:?})",
            to_f64(smallest_singular_value)
        )));
    }

    let combine = |c: &[T]| -> Vec<T> {
        let mut w = vec![T::zero(); nt];
        for (ci, pat) in c.iter().zip(&normed) {
            for (wt, &pt) in w.iter_mut().zip(pat) {
                *wt += *ci * pt;
            }
        }
        w
    };
    let ratio = |w: &[T]| -> T {
        let wabs: Vec<T> = w.iter().map(|&v| v.abs()).collect();
        let den = lin.y_norm(w);
        if den > T::zero() {
            lin.y_norm(&wabs) / den
        } else {
            T::zero()
        }
    };

    let mut best = T::zero();
    let mut used = 0usize;
    // Vertex sampling: all sign combinations when cheap, single patterns
    // otherwise.
    if p <= 12 {
        for bits in 0..(1usize << (p - 1)) {
            let c: Vec<T> = (0..p)
                .map(|i| {
                    if i > 0 && (bits >> (i - 1)) & 1 == 1 {
                        -T::one()
                    } else {
                        T::one()
                    }
                })
                .collect();
            best = best.max(ratio(&combine(&c)));
            used += 1;
        }
    } else {
        for i in 0..p {
            let mut c = vec![T::zero(); p];
            c[i] = T::one();
            best = best.max(ratio(&combine(&c)));
            used += 1;
        }
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let c: Vec<T> = (0..p).map(|_| real(rng.random_range(-1.0..1.0))).collect();
        if c.iter().all(|&v| v == T::zero()) {
            continue;
        }
        best = best.max(ratio(&combine(&c)));
        used += 1;
    }
    Ok(FiniteDimReport {
        c_estimate: best,
        smallest_singular_value,
        samples_used: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;
    use crate::operator::{build_boundary_basis, BasisFamily};
    use crate::scenarios::{checkerboard, inclusion, random_pair};
    use approx::assert_abs_diff_eq;

    fn setup(n: usize, k: usize) -> (Mesh<f64>, BoundaryBasis<f64>) {
        let mesh = build_structured_mesh::<f64>(n).unwrap();
        let basis = build_boundary_basis(&mesh, k, BasisFamily::Trigonometric).unwrap();
        (mesh, basis)
    }

    fn background(mesh: &Mesh<f64>) -> Conductivity<f64> {
        Conductivity::uniform(mesh.num_triangles(), 1.0).unwrap()
    }

    fn perturbed(dagger: &Conductivity<f64>, delta: &[f64]) -> Conductivity<f64> {
        Conductivity::auto(
            dagger.values().iter().zip(delta).map(|(&g, &d)| g + d).collect(),
        )
        .unwrap()
    }

    #[test]
    fn theta_formula_values() {
        assert_abs_diff_eq!(theta_eta(1.0, 0.5).unwrap(), 0.1, epsilon = 1e-16);
        assert_abs_diff_eq!(theta_eta(0.5, 1.0).unwrap(), 1.0 / 9.0, epsilon = 1e-16);
        assert!(theta_eta(1e-9, 1.0).unwrap() < 1e-9);
        assert!(theta_eta(0.0, 1.0).is_err());
        assert!(theta_eta(1.5, 1.0).is_err());
        assert!(theta_eta(0.5, 0.0).is_err());
    }

    #[test]
    fn theta_monotone_in_eta_and_alpha() {
        let mut prev = 0.0;
        for eta in [0.1, 0.3, 0.5, 0.8, 1.0] {
            let t = theta_eta(eta, 0.7).unwrap();
            assert!(t > prev);
            prev = t;
        }
        assert!(theta_eta(0.5, 0.9).unwrap() > theta_eta(0.5, 0.4).unwrap());
    }

    #[test]
    fn split_parts_examples() {
        let (p, n) = split_parts(&[1.0, -2.0]);
        assert_eq!(p, vec![1.0, 0.0]);
        assert_eq!(n, vec![0.0, 2.0]);
        let delta = [0.3, -0.1, 0.0, 2.5];
        let (p, n) = split_parts(&delta);
        for i in 0..4 {
            assert_eq!(p[i] - n[i], delta[i]);
            assert!(p[i] >= 0.0 && n[i] >= 0.0);
            assert_eq!(p[i] * n[i], 0.0);
        }
    }

    #[test]
    fn linearized_map_norm_matches_form() {
        let (mesh, basis) = setup(5, 4);
        let dagger = background(&mesh);
        let lin = LinearizedMap::new(&mesh, &dagger, &basis).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..5 {
            let w: Vec<f64> = (0..mesh.num_triangles()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let direct = lin.form(&w).hs_norm();
            assert_abs_diff_eq!(lin.y_norm(&w), direct, epsilon = 1e-12 * direct.max(1.0));
        }
        // The sign bracket encloses the sup norm and the all-ones direction.
        let (lo, hi) = lin.sup_norm_bracket(3, 11);
        assert!(lo <= hi);
        let ones = vec![1.0; mesh.num_triangles()];
        assert!(lo >= lin.y_norm(&ones) - 1e-12);
    }

    #[test]
    fn tcc_measure_first_order_in_amplitude() {
        let (mesh, basis) = setup(6, 5);
        let dagger = background(&mesh);
        let chi = inclusion(&mesh, [0.45, 0.5], 0.3, 1.0);
        let mut etas = Vec::new();
        for eps in [1e-2, 1e-3] {
            let gamma = Conductivity::auto(
                dagger
                    .values()
                    .iter()
                    .zip(&chi)
                    .map(|(&g, &c)| g * (1.0 + eps * c))
                    .collect(),
            )
            .unwrap();
            let r = tcc_measure(&mesh, &basis, &gamma, &dagger, 0.5).unwrap();
            etas.push(r.eta_stc_at_gamma);
        }
        let ratio = etas[0] / etas[1];
        assert!((ratio - 10.0).abs() < 1.5, "eta ratio {ratio}");

        // Uniform relative scaling is an exactly linear direction: the
        // remainder vanishes to round-off.
        let gamma =
            Conductivity::auto(dagger.values().iter().map(|&g| g * 1.01).collect()).unwrap();
        let r = tcc_measure(&mesh, &basis, &gamma, &dagger, 0.5).unwrap();
        assert!(r.eta_stc_at_gamma < 1e-10);
    }

    #[test]
    fn tcc_measure_degenerate_pair() {
        let (mesh, basis) = setup(4, 3);
        let dagger = background(&mesh);
        assert!(matches!(
            tcc_measure(&mesh, &basis, &dagger, &dagger, 0.5),
            Err(Error::DegeneratePair(_))
        ));
    }

    #[test]
    fn qcon_nonnegative_for_monotone_pairs() {
        let (mesh, basis) = setup(8, 6);
        let dagger = background(&mesh);
        let chi = inclusion(&mesh, [0.45, 0.55], 0.3, 0.4);
        let gamma = perturbed(&dagger, &chi);
        let r = tcc_measure(&mesh, &basis, &gamma, &dagger, 0.5).unwrap();
        let scale = r.norm_derivative_at_dagger * r.norm_data_difference;
        assert!(r.qcon_at_dagger >= -1e-10 * scale);
        assert!(r.qcon_at_gamma >= -1e-10 * scale);
    }

    #[test]
    fn para_identity_holds_on_random_pairs() {
        let (mesh, basis) = setup(6, 5);
        for seed in 0..20u64 {
            let s = random_pair(&mesh, seed, 0.8).unwrap();
            let r = tcc_measure(&mesh, &basis, &s.gamma, &s.gamma_dagger, 0.5).unwrap();
            assert!(r.para_residual <= 1e-9, "seed {seed}: {}", r.para_residual);
        }
    }

    #[test]
    fn zeta_small_perturbation() {
        let (mesh, basis) = setup(6, 5);
        let dagger = background(&mesh);
        let gamma =
            Conductivity::auto(dagger.values().iter().map(|&g| g * 1.001).collect()).unwrap();
        let r = sufficient_zeta(&mesh, &basis, &gamma, &dagger).unwrap();
        assert!(r.zeta < 0.01);
        let pred = r.predicted_eta.unwrap();
        assert!(r.measured_eta_at_gamma <= pred + 1e-8);
        assert_eq!(r.strong_guarantee_ok, Some(true));
        assert_eq!(r.weak_guarantee_ok, Some(true));
    }

    #[test]
    fn zeta_one_third_family_by_bisection() {
        // Locate the amplitude where ζ = 1/3; the predicted η is then 1/2.
        let (mesh, basis) = setup(6, 5);
        let dagger = background(&mesh);
        let chi = inclusion(&mesh, [0.5, 0.5], 0.3, 1.0);
        let zeta_of = |a: f64| -> f64 {
            let gamma = perturbed(&dagger, &chi.iter().map(|&c| a * c).collect::<Vec<_>>());
            sufficient_zeta(&mesh, &basis, &gamma, &dagger).unwrap().zeta
        };
        let (mut lo, mut hi) = (1e-4, 0.9);
        assert!(zeta_of(lo) < 1.0 / 3.0 && zeta_of(hi) > 1.0 / 3.0);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if zeta_of(mid) < 1.0 / 3.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let a = 0.5 * (lo + hi);
        let gamma = perturbed(&dagger, &chi.iter().map(|&c| a * c).collect::<Vec<_>>());
        let r = sufficient_zeta(&mesh, &basis, &gamma, &dagger).unwrap();
        let pred = r.predicted_eta.unwrap();
        assert_abs_diff_eq!(pred, 0.5, epsilon = 1e-6);
        assert!(r.measured_eta_at_gamma <= pred + 1e-8);
    }

    #[test]
    fn zeta_monotone_inclusion_guarantee() {
        let (mesh, basis) = setup(8, 6);
        let dagger = background(&mesh); // bounds [0.5, 2] so alpha = 0.5
        assert_eq!(dagger.lower_bound(), 0.5);
        let chi = inclusion(&mesh, [0.5, 0.5], 0.25, 0.05);
        let gamma = perturbed(&dagger, &chi);
        let r = sufficient_zeta(&mesh, &basis, &gamma, &dagger).unwrap();
        assert_eq!(r.strong_guarantee_ok, Some(true));
    }

    #[test]
    fn mjmi_monotone_amplitude_within_theta() {
        let (mesh, basis) = setup(8, 6);
        let dagger = background(&mesh);
        let theta = theta_eta(1.0, dagger.lower_bound()).unwrap();
        assert_abs_diff_eq!(theta, 0.1, epsilon = 1e-16);
        let chi = inclusion(&mesh, [0.5, 0.5], 0.25, theta);
        let gamma = perturbed(&dagger, &chi);
        let r = check_mjmi(&mesh, &basis, &gamma, &dagger, 1.0).unwrap();
        // Monotone perturbation: |δ| = δ, so the equivalence constant is 1
        // and both amplitude gates agree.
        assert_abs_diff_eq!(r.c_abs, 1.0, epsilon = 1e-12);
        assert!(r.pair_gate_as_stated && r.pair_gate_proof_form);
        assert!(r.holds);
        assert_eq!(r.guarantee_ok, Some(true));
    }

    #[test]
    fn mjmi_fails_on_near_kernel_direction() {
        // Direction from the null space of the linearized map: the derivative
        // nearly cancels while |w|² keeps a solid image.
        let (mesh, basis) = setup(6, 4);
        let dagger = background(&mesh);
        let lin = LinearizedMap::new(&mesh, &dagger, &basis).unwrap();
        let eig = lin.symmetrized_normal().symmetric_eigen();
        let mut idx = 0;
        let mut lmin = f64::INFINITY;
        for i in 0..eig.eigenvalues.len() {
            if eig.eigenvalues[i] < lmin {
                lmin = eig.eigenvalues[i];
                idx = i;
            }
        }
        let q = eig.eigenvectors.column(idx);
        let mut w: Vec<f64> = (0..mesh.num_triangles())
            .map(|t| q[t] / mesh.element_area(t).sqrt())
            .collect();
        let sup = w.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        for v in &mut w {
            *v *= 0.05 / sup;
        }
        let gamma = perturbed(&dagger, &w);
        let r = check_mjmi(&mesh, &basis, &gamma, &dagger, 1.0).unwrap();
        assert!(!r.holds, "lhs {} vs theta*deriv {}", r.lhs_norm, r.theta * r.deriv_norm);
    }

    #[test]
    fn mjmi_rejects_degenerate_pair() {
        let (mesh, basis) = setup(4, 3);
        let dagger = background(&mesh);
        assert!(matches!(
            check_mjmi(&mesh, &basis, &dagger, &dagger, 0.5),
            Err(Error::DegeneratePair(_))
        ));
    }

    #[test]
    fn monotone_radius_values() {
        let mesh = build_structured_mesh::<f64>(8).unwrap();
        let dagger = background(&mesh);
        let chi = inclusion(&mesh, [0.5, 0.5], 0.25, 1.0);
        let amp = monotone_radius(&dagger, &chi, 0.5).unwrap();
        assert_abs_diff_eq!(amp, 0.5 / 9.0, epsilon = 1e-15);
        let neg: Vec<f64> = chi.iter().map(|&c| -c).collect();
        assert_abs_diff_eq!(monotone_radius(&dagger, &neg, 0.5).unwrap(), amp, epsilon = 0.0);

        let mixed = checkerboard(&mesh, 1, 0.3).unwrap();
        assert!(monotone_radius(&dagger, &mixed, 0.5).is_err());
    }

    #[test]
    fn monotone_radius_pipeline_guarantee() {
        let (mesh, basis) = setup(8, 6);
        let dagger = background(&mesh);
        let chi = inclusion(&mesh, [0.5, 0.5], 0.25, 1.0);
        let amp = monotone_radius(&dagger, &chi, 0.5).unwrap();
        let gamma = perturbed(&dagger, &chi.iter().map(|&c| amp * c).collect::<Vec<_>>());
        let r = tcc_measure(&mesh, &basis, &gamma, &dagger, 0.5).unwrap();
        assert!(r.eta_stc_at_gamma <= 0.5 + 1e-8, "eta {}", r.eta_stc_at_gamma);
    }

    #[test]
    fn unbalanced_reduces_to_monotone_when_no_negative_part() {
        let (mesh, basis) = setup(8, 6);
        let dagger = background(&mesh);
        let chi = inclusion(&mesh, [0.5, 0.5], 0.25, 0.05);
        let gamma = perturbed(&dagger, &chi);
        let r = check_unbalanced(&mesh, &basis, &gamma, &dagger, 1.0, 1.0).unwrap();
        assert!(r.applicable);
        assert_eq!(r.nu, 0.0);
        assert_eq!(r.c_fir, 0.0);
        assert!(r.gate_fir, "amplitude {} vs theta {}", r.amplitude, r.theta);
        assert_eq!(r.guarantee_ok, Some(true));
        assert!(r.kappa_monotone);
    }

    #[test]
    fn unbalanced_dominant_inclusion_with_speck() {
        let (mesh, basis) = setup(8, 6);
        let dagger = background(&mesh);
        let lin = LinearizedMap::new(&mesh, &dagger, &basis).unwrap();
        let p = inclusion(&mesh, [0.35, 0.4], 0.22, 1.0);
        let n0 = inclusion(&mesh, [0.72, 0.7], 0.08, 1.0);
        // Rescale the speck so the part-norm ratio is 0.3, then normalize the
        // overall sup amplitude to 0.02.
        let target = 0.3 * lin.y_norm(&p);
        let factor = target / lin.y_norm(&n0);
        let s = 0.02 / factor.max(1.0);
        let delta: Vec<f64> = p
            .iter()
            .zip(&n0)
            .map(|(&a, &b)| s * (a - factor * b))
            .collect();
        let gamma = perturbed(&dagger, &delta);
        let r = check_unbalanced(&mesh, &basis, &gamma, &dagger, 1.0, 1.0).unwrap();
        assert!(r.applicable);
        assert_abs_diff_eq!(r.nu, 0.3, epsilon = 1e-10);
        assert!(r.gate_fir1, "amplitude {} vs gate {}", r.amplitude, r.theta / 3.0 * 0.7);
        assert_eq!(r.guarantee_ok, Some(true));
        assert!(r.lipschitz_lower <= r.lipschitz_upper);
        assert!(r.psi_value >= 0.0);
    }

    #[test]
    fn source_condition_identity_power() {
        let (mesh, basis) = setup(6, 4);
        let dagger = background(&mesh);
        let omega = inclusion(&mesh, [0.5, 0.5], 0.3, 2.0);
        let e = source_condition_element(&mesh, &basis, &dagger, 0.0, &omega, 0.03).unwrap();
        // μ = 0: the perturbation is ω rescaled to sup 0.03.
        let sup = e.perturbation.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert_abs_diff_eq!(sup, 0.03, epsilon = 1e-15);
        for (p, o) in e.perturbation.iter().zip(&omega) {
            assert_abs_diff_eq!(*p, o * 0.015, epsilon = 1e-15);
        }
    }

    #[test]
    fn source_condition_smooth_element_passes_mjmi() {
        let (mesh, basis) = setup(6, 4);
        let dagger = background(&mesh);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let omega: Vec<f64> = (0..mesh.num_triangles()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let e = source_condition_element(&mesh, &basis, &dagger, 1.0, &omega, 0.01).unwrap();
        let gamma = perturbed(&dagger, &e.perturbation);
        let r = check_mjmi(&mesh, &basis, &gamma, &dagger, 0.5).unwrap();
        assert!(r.holds, "lhs {} rhs {}", r.lhs_norm, r.theta * r.deriv_norm);
        assert_eq!(r.guarantee_ok, Some(true));
        assert!(r.measured_eta_at_gamma < 0.1);
    }

    #[test]
    fn source_condition_hoelder_stability() {
        // ‖δ‖_X ≤ ‖ω‖_X^{1/(1+2μ)}·‖F′δ‖_Y^{2μ/(2μ+1)}, exact in finite
        // dimensions by the spectral Hölder inequality.
        let (mesh, basis) = setup(6, 4);
        let dagger = background(&mesh);
        let lin = LinearizedMap::new(&mesh, &dagger, &basis).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for &mu in &[0.25, 0.5, 1.0] {
            let omega: Vec<f64> =
                (0..mesh.num_triangles()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let e = source_condition_element(&mesh, &basis, &dagger, mu, &omega, 0.02).unwrap();
            let lhs = lin.x_norm(&e.perturbation);
            let rhs = e.omega_norm_x.powf(1.0 / (1.0 + 2.0 * mu))
                * lin.y_norm(&e.perturbation).powf(2.0 * mu / (2.0 * mu + 1.0));
            assert!(lhs <= rhs * (1.0 + 1e-10), "mu {mu}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn source_condition_scale_guard() {
        let (mesh, basis) = setup(4, 3);
        let dagger = background(&mesh);
        let omega = vec![1.0; mesh.num_triangles()];
        assert!(matches!(
            source_condition_element(&mesh, &basis, &dagger, 0.0, &omega, 5.0),
            Err(Error::EllipticityViolation(_))
        ));
    }

    #[test]
    fn finite_dim_constant_single_sign_pattern() {
        let (mesh, basis) = setup(6, 4);
        let dagger = background(&mesh);
        let chi = inclusion(&mesh, [0.5, 0.5], 0.3, 1.0);
        let r = finite_dim_constant(&mesh, &basis, &dagger, &[chi], 16, 1).unwrap();
        // |w| = ±w on a one-dimensional single-sign span.
        assert_abs_diff_eq!(r.c_estimate, 1.0, epsilon = 1e-12);
        assert!(r.smallest_singular_value > 1e-10);
    }

    #[test]
    fn finite_dim_constant_two_patterns() {
        let (mesh, basis) = setup(6, 4);
        let dagger = background(&mesh);
        let a = inclusion(&mesh, [0.3, 0.35], 0.2, 1.0);
        let b = inclusion(&mesh, [0.7, 0.65], 0.2, 1.0);
        let patterns = vec![a, b];
        let r = finite_dim_constant(&mesh, &basis, &dagger, &patterns, 64, 2).unwrap();
        assert!(r.c_estimate >= 1.0 - 1e-12);
        // Doubling the sample count moves the estimate by < 5%.
        let r2 = finite_dim_constant(&mesh, &basis, &dagger, &patterns, 128, 2).unwrap();
        assert!((r2.c_estimate - r.c_estimate).abs() <= 0.05 * r.c_estimate);
    }

    #[test]
    fn finite_dim_constant_rejects_dependent_patterns() {
        let (mesh, basis) = setup(4, 3);
        let dagger = background(&mesh);
        let chi = inclusion(&mesh, [0.5, 0.5], 0.3, 1.0);
        assert!(matches!(
            finite_dim_constant(&mesh, &basis, &dagger, &[chi.clone(), chi], 4, 3),
            Err(Error::Rank(_))
        ));
    }

    #[test]
    fn absolute_value_seminorm() {
        // w ↦ ‖F′[γ†](|w|)‖ satisfies the triangle inequality and absolute
        // homogeneity.
        let (mesh, basis) = setup(6, 5);
        let dagger = background(&mesh);
        let lin = LinearizedMap::new(&mesh, &dagger, &basis).unwrap();
        let star = |w: &[f64]| -> f64 {
            let wabs: Vec<f64> = w.iter().map(|v| v.abs()).collect();
            lin.y_norm(&wabs)
        };
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        for _ in 0..25 {
            let z1: Vec<f64> = (0..mesh.num_triangles()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let z2: Vec<f64> = (0..mesh.num_triangles()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let sum: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| a + b).collect();
            assert!(star(&sum) <= star(&z1) + star(&z2) + 1e-10);
            let scaled: Vec<f64> = z1.iter().map(|v| -2.0 * v).collect();
            assert_eq!(star(&scaled), 2.0 * star(&z1));
        }
    }
}
