//! Eigenvalue-based certification of the Löwner-order inequalities satisfied
//! by the discrete forward map: the two-sided Taylor-remainder bound, its
//! sharpened variants, the monotonicity corollaries, the derivative-gap
//! lemma, the norm consequences, and the sign of the second derivative.
//!
//! A ⪯ B is certified through the smallest eigenvalue of B − A on the K×K
//! data space. Two nested linear solves (solution + inverse-form) amplify
//! ~1e-12 solver noise, so the default relative tolerance is 1e-8.

use nalgebra::{Cholesky, DMatrix};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::Conductivity;
use crate::mesh::Mesh;
use crate::operator::{
    contraction_parameter, derivative_form_from, dtn_form_from, forward_map_from,
    symmetric_eigenvalues, BoundaryBasis, LiftedBasis, OperatorOnVd,
};
use crate::scalar::{real, to_f64, Real};

/// Default relative eigenvalue tolerance for certificates.
pub const DEFAULT_CERT_TOL: f64 = 1e-8;

/// Absolute floor for the certificate scale.
pub const SCALE_FLOOR: f64 = 1e-14;

/// Outcome of one Löwner comparison lhs ⪯ rhs.
#[derive(Debug, Clone, Serialize)]
pub struct LoewnerCertificate<T: Real> {
    pub lhs_label: String,
    pub rhs_label: String,
    /// Smallest eigenvalue of rhs − lhs.
    pub lambda_min_gap: T,
    /// Max of the two spectral norms.
    pub scale: T,
    pub tolerance: T,
    pub pass: bool,
}

impl<T: Real> LoewnerCertificate<T> {
    pub fn inequality(&self) -> String {
        format!("{} <= {}", self.lhs_label, self.rhs_label)
    }
}

/// Serialization row for certificates: one JSON/CSV record per inequality.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateRow {
    pub inequality: String,
    pub lambda_min_gap: f64,
    pub scale: f64,
    pub tol: f64,
    pub pass: bool,
    pub seed: u64,
    pub mesh_n: usize,
    pub k: usize,
}

impl CertificateRow {
    pub fn new<T: Real>(c: &LoewnerCertificate<T>, seed: u64, mesh_n: usize, k: usize) -> Self {
        Self {
            inequality: c.inequality(),
            lambda_min_gap: to_f64(c.lambda_min_gap),
            scale: to_f64(c.scale),
            tol: to_f64(c.tolerance),
            pass: c.pass,
            seed,
            mesh_n,
            k,
        }
    }
}

/// Certify A ⪯ B at relative tolerance `tol` from the smallest eigenvalue of
/// B − A; passes when the gap is above −tol·max(scale, 1e-14) with
/// scale = max of the two spectral norms.
pub fn loewner_leq<T: Real>(
    a: &OperatorOnVd<T>,
    b: &OperatorOnVd<T>,
    tol: T,
) -> Result<LoewnerCertificate<T>> {
    loewner_leq_at_scale(a, b, tol, None)
}

/// `loewner_leq` with an explicit certificate scale, for inequalities whose
/// natural scale is an outer quantity (e.g. ε-discretized derivative limits
/// where one side degenerates).
pub fn loewner_leq_at_scale<T: Real>(
    a: &OperatorOnVd<T>,
    b: &OperatorOnVd<T>,
    tol: T,
    scale_override: Option<T>,
) -> Result<LoewnerCertificate<T>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operators of sizes {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    let gap = b.sub(a, "gap").min_eigenvalue();
    let scale = scale_override.unwrap_or_else(|| a.spectral_norm().max(b.spectral_norm()));
    let pass = gap >= -tol * scale.max(real(SCALE_FLOOR));
    Ok(LoewnerCertificate {
        lhs_label: a.label().to_string(),
        rhs_label: b.label().to_string(),
        lambda_min_gap: gap,
        scale,
        tolerance: tol,
        pass,
    })
}

/// Norm consequences of the two-sided bound plus the empirical trace ratios
/// whose constant the continuum result leaves nonconstructive.
#[derive(Debug, Clone, Serialize)]
pub struct Theorem3Report<T: Real> {
    pub remainder_norm: T,
    pub bound_norm: T,
    pub mainest1_pass: bool,
    /// Σ_i ⟨Λ_γ′((γ−γ†)²/γ†) f̂_i, f̂_i⟩.
    pub trace: T,
    /// ‖F(γ)−F(γ†)‖²/trace.
    pub ratio_x1: T,
    /// ‖F′[γ]((γ−γ†)γ/γ†)‖²/trace.
    pub ratio_x2: T,
}

/// Certification of the inequalities for one admissible pair (γ, γ†): lifts
/// are computed once and shared across all forms.
pub struct PairCertifier<'a, T: Real> {
    gamma: &'a Conductivity<T>,
    dagger: &'a Conductivity<T>,
    lifts_gamma: LiftedBasis<T>,
    lifts_dagger: LiftedBasis<T>,
    tol: T,
    xi_dagger: T,
}

impl<'a, T: Real> PairCertifier<'a, T> {
    /// Requires the contraction condition ξ† = ‖(γ−γ†)/γ†‖_∞ < 1.
    pub fn new(
        mesh: &'a Mesh<T>,
        basis: &'a BoundaryBasis<T>,
        gamma: &'a Conductivity<T>,
        dagger: &'a Conductivity<T>,
        tol: T,
    ) -> Result<Self> {
        let xi_dagger = contraction_parameter(gamma, dagger);
        if !(xi_dagger < T::one()) {
            return Err(Error::Precondition(format!(
                "xi_dagger = {:?} must be < 1",
                to_f64(xi_dagger)
            )));
        }
        let lifts_gamma = LiftedBasis::new(mesh, gamma, basis)?;
        let lifts_dagger = LiftedBasis::new(mesh, dagger, basis)?;
        Ok(Self {
            gamma,
            dagger,
            lifts_gamma,
            lifts_dagger,
            tol,
            xi_dagger,
        })
    }

    pub fn xi_dagger(&self) -> T {
        self.xi_dagger
    }

    fn delta(&self) -> Vec<T> {
        self.gamma
            .values()
            .iter()
            .zip(self.dagger.values())
            .map(|(&g, &d)| g - d)
            .collect()
    }

    fn delta_sq_over_dagger(&self) -> Vec<T> {
        self.gamma
            .values()
            .iter()
            .zip(self.dagger.values())
            .map(|(&g, &d)| (g - d) * (g - d) / d)
            .collect()
    }

    fn d_gamma(&self, w: &[T], label: &str) -> OperatorOnVd<T> {
        derivative_form_from(&self.lifts_gamma, w).relabel(label)
    }

    fn d_dagger(&self, w: &[T], label: &str) -> OperatorOnVd<T> {
        derivative_form_from(&self.lifts_dagger, w).relabel(label)
    }

    fn data_difference(&self) -> OperatorOnVd<T> {
        dtn_form_from(&self.lifts_gamma, self.gamma)
            .sub(&dtn_form_from(&self.lifts_dagger, self.dagger), "DLam")
    }

    /// Taylor remainder B(γ,γ†) = Λ(γ) − Λ(γ†) − Λ_γ′(γ−γ†).
    pub fn remainder(&self) -> OperatorOnVd<T> {
        self.data_difference()
            .sub(&self.d_gamma(&self.delta(), "Dg[g-gd]"), "B(g,gd)")
    }

    /// Two-sided bound 0 ⪯ B ⪯ Λ_γ′((γ−γ†)²/γ†).
    pub fn main1(&self) -> Result<[LoewnerCertificate<T>; 2]> {
        let b = self.remainder();
        let zero = OperatorOnVd::zeros(b.dim(), "0");
        let upper = self.d_gamma(&self.delta_sq_over_dagger(), "Dg[(g-gd)^2/gd]");
        Ok([
            loewner_leq(&zero, &b, self.tol)?,
            loewner_leq(&b, &upper, self.tol)?,
        ])
    }

    /// Sharpened bounds: B ⪯ Dγ(Δγ²) − ΔΛ·Λ_{γ†}⁻¹·ΔΛ and
    /// B ⪯ Dγ(Δγ²) − Dγ(δγ/γ†)·Dγ(γ²/γ†)⁻¹·Dγ(δγ/γ†).
    pub fn util(&self) -> Result<[LoewnerCertificate<T>; 2]> {
        let b = self.remainder();
        let upper = self.d_gamma(&self.delta_sq_over_dagger(), "Dg[(g-gd)^2/gd]");

        let dl = self.data_difference();
        let lam_dagger = dtn_form_from(&self.lifts_dagger, self.dagger);
        let corr1 = psd_sandwich(dl.entries(), lam_dagger.entries(), "Lam(gd)")?;
        let rhs1 = OperatorOnVd::new(
            upper.entries() - corr1,
            "Dg[(g-gd)^2/gd] - DLam.Lam(gd)^-1.DLam",
        );

        let w_cross: Vec<T> = self
            .gamma
            .values()
            .iter()
            .zip(self.dagger.values())
            .map(|(&g, &d)| (g - d) * g / d)
            .collect();
        let w_mid: Vec<T> = self
            .gamma
            .values()
            .iter()
            .zip(self.dagger.values())
            .map(|(&g, &d)| g * g / d)
            .collect();
        let outer = self.d_gamma(&w_cross, "Dg[(g-gd)g/gd]");
        let mid = self.d_gamma(&w_mid, "Dg[g^2/gd]");
        let corr2 = psd_sandwich(outer.entries(), mid.entries(), "Dg[g^2/gd]")?;
        let rhs2 = OperatorOnVd::new(
            upper.entries() - corr2,
            "Dg[(g-gd)^2/gd] - sandwich(Dg[g^2/gd])",
        );

        Ok([
            loewner_leq(&b, &rhs1, self.tol)?,
            loewner_leq(&b, &rhs2, self.tol)?,
        ])
    }

    /// The subtracted term of the first sharpened bound is PSD, so that bound
    /// is no weaker than the plain upper bound.
    pub fn util_sharper_than_main1(&self) -> Result<LoewnerCertificate<T>> {
        let upper = self.d_gamma(&self.delta_sq_over_dagger(), "Dg[(g-gd)^2/gd]");
        let dl = self.data_difference();
        let lam_dagger = dtn_form_from(&self.lifts_dagger, self.dagger);
        let corr1 = psd_sandwich(dl.entries(), lam_dagger.entries(), "Lam(gd)")?;
        let rhs1 = OperatorOnVd::new(upper.entries() - corr1, "util1-rhs");
        loewner_leq(&rhs1, &upper, self.tol)
    }

    /// Monotonicity corollaries:
    /// Λ_γ′(δ) ⪯ ΔΛ ⪯ Λ_{γ†}′(δ) and Λ_{γ†}′((γ†/γ)δ) ⪯ ΔΛ ⪯ Λ_γ′((γ/γ†)δ).
    pub fn conmo(&self) -> Result<[LoewnerCertificate<T>; 4]> {
        let dl = self.data_difference();
        let delta = self.delta();
        let lower1 = self.d_gamma(&delta, "Dg[g-gd]");
        let upper1 = self.d_dagger(&delta, "Dgd[g-gd]");
        let w_lo: Vec<T> = self
            .gamma
            .values()
            .iter()
            .zip(self.dagger.values())
            .map(|(&g, &d)| d / g * (g - d))
            .collect();
        let w_hi: Vec<T> = self
            .gamma
            .values()
            .iter()
            .zip(self.dagger.values())
            .map(|(&g, &d)| g / d * (g - d))
            .collect();
        let lower2 = self.d_dagger(&w_lo, "Dgd[(gd/g)(g-gd)]");
        let upper2 = self.d_gamma(&w_hi, "Dg[(g/gd)(g-gd)]");
        Ok([
            loewner_leq(&lower1, &dl, self.tol)?,
            loewner_leq(&dl, &upper1, self.tol)?,
            loewner_leq(&lower2, &dl, self.tol)?,
            loewner_leq(&dl, &upper2, self.tol)?,
        ])
    }

    /// Derivative-gap lemma:
    /// 0 ⪯ Λ_{γ†}′(δ) − Λ_γ′(δ) ⪯ (2+ξ†)·Λ_γ′(δ²/γ†). Returns the two
    /// certificates and ξ†.
    pub fn babel0(&self) -> Result<([LoewnerCertificate<T>; 2], T)> {
        let delta = self.delta();
        let gap = self
            .d_dagger(&delta, "Dgd[g-gd]")
            .sub(&self.d_gamma(&delta, "Dg[g-gd]"), "Dgd[g-gd] - Dg[g-gd]");
        let zero = OperatorOnVd::zeros(gap.dim(), "0");
        let factor = real::<T>(2.0) + self.xi_dagger;
        let upper = self
            .d_gamma(&self.delta_sq_over_dagger(), "")
            .scale(factor, "(2+xi)Dg[(g-gd)^2/gd]");
        Ok((
            [
                loewner_leq(&zero, &gap, self.tol)?,
                loewner_leq(&gap, &upper, self.tol)?,
            ],
            self.xi_dagger,
        ))
    }

    /// Norm consequences plus the empirical trace ratios.
    pub fn theorem3(&self) -> Result<Theorem3Report<T>> {
        let b = self.remainder();
        let upper = self.d_gamma(&self.delta_sq_over_dagger(), "Dg[(g-gd)^2/gd]");
        let remainder_norm = b.hs_norm();
        let bound_norm = upper.hs_norm();
        let mainest1_pass = remainder_norm <= bound_norm + self.tol;

        let trace = upper.entries().trace();
        let floor = real::<T>(SCALE_FLOOR);
        let dl_sq = self.data_difference().hs_norm().powi(2);
        let w_cross: Vec<T> = self
            .gamma
            .values()
            .iter()
            .zip(self.dagger.values())
            .map(|(&g, &d)| (g - d) * g / d)
            .collect();
        let x2_sq = self.d_gamma(&w_cross, "Dg[(g-gd)g/gd]").hs_norm().powi(2);
        let (ratio_x1, ratio_x2) = if trace > floor {
            (dl_sq / trace, x2_sq / trace)
        } else {
            (T::zero(), T::zero())
        };
        Ok(Theorem3Report {
            remainder_norm,
            bound_norm,
            mainest1_pass,
            trace,
            ratio_x1,
            ratio_x2,
        })
    }

    /// Run every certificate of this module in a fixed order.
    pub fn all_certificates(&self) -> Result<Vec<LoewnerCertificate<T>>> {
        let mut out = Vec::new();
        out.extend(self.main1()?);
        out.extend(self.util()?);
        out.push(self.util_sharper_than_main1()?);
        out.extend(self.conmo()?);
        let (babel, _) = self.babel0()?;
        out.extend(babel);
        Ok(out)
    }
}

/// Symmetric PSD product Mᵀ·S⁻¹·M via a symmetric-definite factorization of
/// S, preserving symmetry of the result. Errors with conditioning information
/// when S is numerically singular.
fn psd_sandwich<T: Real>(m: &DMatrix<T>, s: &DMatrix<T>, s_label: &str) -> Result<DMatrix<T>> {
    let chol = Cholesky::new(s.clone()).ok_or_else(|| {
        let eig = symmetric_eigenvalues(s);
        Error::Rank(format!(
            "{s_label} not positive definite (eigenvalue range [{:?}, {:?}])",
            eig.iter().cloned().fold(f64::INFINITY, |a, b| a.min(to_f64(b))),
            eig.iter()
                .cloned()
                .fold(f64::NEG_INFINITY, |a, b| a.max(to_f64(b))),
        ))
    })?;
    // Mᵀ·S⁻¹·M = Xᵀ·X with X = L⁻¹·M.
    let x = chol
        .l()
        .solve_lower_triangular(m)
        .ok_or_else(|| Error::Rank(format!("{s_label} Cholesky factor singular")))?;
    Ok(x.transpose() * x)
}

/// One ε-sample of the second-derivative certification.
#[derive(Debug, Clone, Serialize)]
pub struct SecondDerivativeSample<T: Real> {
    pub eps: T,
    /// 0 ⪯ −F″ (central second difference), tolerance widened by ε².
    pub cert_nonnegative: LoewnerCertificate<T>,
    /// −F″ ⪯ 2F′[γ†](w²/γ†), tolerance widened by ε.
    pub cert_upper: LoewnerCertificate<T>,
    /// Gap of the upper bound against the one-sided (Taylor-remainder based)
    /// second-difference proxy, whose drift from the limit is first order.
    pub gap_one_sided: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct SecondDerivativeReport<T: Real> {
    pub samples: Vec<SecondDerivativeSample<T>>,
    /// log-log slope of |gap_one_sided(ε) − reference| over the sweep;
    /// `None` when fewer than two usable points exist.
    pub drift_slope: Option<T>,
    pub all_pass: bool,
}

/// Certify the sign structure of the second derivative along direction `w`:
/// 0 ⪯ −F″[γ†](w,w) ⪯ 2F′[γ†](w²/γ†), with F″ replaced by second differences
/// of F at step ε. The discretization-of-limit slack is first order in ε, so
/// tolerances carry an ε-scaled widening and the drift of the one-sided gap
/// toward its limit is checked to vanish linearly.
pub fn second_derivative_sign<T: Real>(
    mesh: &Mesh<T>,
    basis: &BoundaryBasis<T>,
    dagger: &Conductivity<T>,
    w: &[T],
    eps_sweep: &[T],
    tol: T,
) -> Result<SecondDerivativeReport<T>> {
    if w.len() != mesh.num_triangles() {
        return Err(Error::DimensionMismatch(
            "direction length != number of elements".into(),
        ));
    }
    let mut eps_sorted = eps_sweep.to_vec();
    eps_sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if eps_sorted.is_empty() {
        return Err(Error::InvalidArgument("empty eps sweep".into()));
    }
    for &eps in &eps_sorted {
        if eps <= T::zero() {
            return Err(Error::InvalidArgument("eps must be positive".into()));
        }
        let breaks = dagger
            .values()
            .iter()
            .zip(w)
            .any(|(&g, &wi)| g - eps * wi.abs() <= T::zero());
        if breaks {
            return Err(Error::EllipticityViolation(format!(
                "eps = {:?} pushes the conductivity out of the elliptic range",
                to_f64(eps)
            )));
        }
    }

    let lifts_dagger = LiftedBasis::new(mesh, dagger, basis)?;
    let f0 = forward_map_from(mesh, &lifts_dagger, dagger, basis)?;
    let w_sq_over: Vec<T> = w
        .iter()
        .zip(dagger.values())
        .map(|(&wi, &g)| wi * wi / g)
        .collect();
    let upper = derivative_form_from(&lifts_dagger, &w_sq_over).scale(real(2.0), "2Dgd[w^2/gd]");

    let forward_at = |sign: T, eps: T| -> Result<OperatorOnVd<T>> {
        let vals: Vec<T> = dagger
            .values()
            .iter()
            .zip(w)
            .map(|(&g, &wi)| g + sign * eps * wi)
            .collect();
        let cond = Conductivity::auto(vals)?;
        let lifts = LiftedBasis::new(mesh, &cond, basis)?;
        forward_map_from(mesh, &lifts, &cond, basis)
    };

    let mut samples: Vec<SecondDerivativeSample<T>> = Vec::new();
    let mut ref_gap: Option<T> = None;
    let eps_min = *eps_sorted.last().unwrap();
    for &eps in &eps_sorted {
        let fp = forward_at(T::one(), eps)?;
        let fm = forward_at(-T::one(), eps)?;
        let inv_eps_sq = T::one() / (eps * eps);
        // Central: −F″ ≈ −(F(+) − 2F(0) + F(−))/ε².
        let neg_fpp = OperatorOnVd::new(
            (f0.entries() * real::<T>(2.0) - fp.entries() - fm.entries()) * inv_eps_sq,
            "-F''[gd](w,w)",
        );
        let zero = OperatorOnVd::zeros(neg_fpp.dim(), "0");
        // The envelope 2F′(w²/γ†) sets the natural scale of both
        // certificates; −F″ itself can degenerate along oscillatory w.
        // Solver noise in F is amplified by 1/ε² in the second difference.
        let scale_ref = upper.spectral_norm().max(neg_fpp.spectral_norm());
        let noise = real::<T>(100.0) * T::eps() * inv_eps_sq;
        let cert_nonnegative =
            loewner_leq_at_scale(&zero, &neg_fpp, tol + eps * eps + noise, Some(scale_ref))?;
        let cert_upper =
            loewner_leq_at_scale(&neg_fpp, &upper, tol + eps + noise, Some(scale_ref))?;

        // One-sided proxy −2[F(+) − F(0) − F′[γ†](εw)]/ε².
        let eps_w: Vec<T> = w.iter().map(|&wi| eps * wi).collect();
        let lin = derivative_form_from(&lifts_dagger, &eps_w);
        let b_tilde = OperatorOnVd::new(fp.entries() - f0.entries() - lin.entries(), "Btilde");
        let neg_fpp_one = b_tilde.scale(-real::<T>(2.0) * inv_eps_sq, "one-sided -F''");
        let gap_one_sided = upper.sub(&neg_fpp_one, "upper-gap").min_eigenvalue();

        if eps == eps_min {
            ref_gap = Some(upper.sub(&neg_fpp, "upper-gap-central").min_eigenvalue());
        }

        samples.push(SecondDerivativeSample {
            eps,
            cert_nonnegative,
            cert_upper,
            gap_one_sided,
        });
    }

    let all_pass = samples
        .iter()
        .all(|s| s.cert_nonnegative.pass && s.cert_upper.pass);

    let drift_slope = ref_gap.and_then(|r| {
        let pts: Vec<(f64, f64)> = samples
            .iter()
            .map(|s| (to_f64(s.eps), (to_f64(s.gap_one_sided) - to_f64(r)).abs()))
            .filter(|&(_, d)| d > 1e-14)
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0.ln()).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
        let num: f64 = pts.iter().map(|p| (p.0.ln() - mx) * (p.1.ln() - my)).sum();
        let den: f64 = pts.iter().map(|p| (p.0.ln() - mx).powi(2)).sum();
        T::from_f64(num / den)
    });

    Ok(SecondDerivativeReport {
        samples,
        drift_slope,
        all_pass,
    })
}
