//! The parameter-to-data map on V_D: Dirichlet-to-Neumann forms, the forward
//! map F(γ) = Λ_γ − Λ_1, its derivative and adjoint, the Taylor remainder B,
//! the projector R_γ on gradient fields, and the resolvent identity relating
//! solutions for two conductivities.
//!
//! All data-space operators are K×K symmetric matrices in an orthonormal
//! basis of boundary traces, where orthonormality is taken in the discrete
//! H^{1/2} inner product ⟨f, g⟩ = (∇u_{1,f}, ∇u_{1,g})_W. In that basis the
//! Riesz map is the identity and the Y-norm is the Frobenius norm.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem::{
    element_gradients, Conductivity, DirichletSolver, GradientField,
};
use crate::mesh::{boundary_arclength, Mesh};
use crate::scalar::{real, scaled_tol, Real};

/// Default cap on the contraction parameter ξ = ‖(γ1−γ2)/γ2‖_∞ accepted by
/// the resolvent identity check; the inverse form degrades as ξ → 1.
pub const DEFAULT_XI_CAP: f64 = 0.95;

/// Relative tolerance for the energy-form vs. cross-formula consistency check.
pub const CROSS_FORMULA_RTOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisFamily {
    Trigonometric,
    BoundaryHat,
}

/// Orthonormalized Dirichlet traces spanning V_D (constants excluded),
/// together with their γ≡1 harmonic lifts.
pub struct BoundaryBasis<T: Real> {
    family: BasisFamily,
    k: usize,
    raw_traces: DMatrix<T>,
    raw_gram: DMatrix<T>,
    ortho: DMatrix<T>,
    traces: DMatrix<T>,
    unit_lifts: LiftedBasis<T>,
}

impl<T: Real> BoundaryBasis<T> {
    pub fn size(&self) -> usize {
        self.k
    }

    pub fn family(&self) -> BasisFamily {
        self.family
    }

    /// Orthonormalized traces, one column per basis function, in
    /// boundary-walk node order.
    pub fn traces(&self) -> &DMatrix<T> {
        &self.traces
    }

    pub fn trace(&self, i: usize) -> DVector<T> {
        self.traces.column(i).into_owned()
    }

    pub fn raw_traces(&self) -> &DMatrix<T> {
        &self.raw_traces
    }

    /// Gram matrix of the raw traces in the discrete H^{1/2} inner product.
    pub fn raw_gram(&self) -> &DMatrix<T> {
        &self.raw_gram
    }

    /// Change of basis: orthonormal = raw · ortho (inverse transpose of the
    /// Gram Cholesky factor).
    pub fn ortho_transform(&self) -> &DMatrix<T> {
        &self.ortho
    }

    /// γ≡1 lifts of the orthonormal traces.
    pub fn unit_lifts(&self) -> &LiftedBasis<T> {
        &self.unit_lifts
    }

    pub fn harmonic_lift_gradients(&self) -> &[GradientField<T>] {
        &self.unit_lifts.gradients
    }
}

/// Harmonic lifts of the orthonormal traces for one conductivity, with the
/// per-element K×K Gram blocks P_t = |T_t|·[∇u_i·∇u_j]_t that every
/// derivative-type form is assembled from.
pub struct LiftedBasis<T: Real> {
    pub solutions: DMatrix<T>,
    pub gradients: Vec<GradientField<T>>,
    pub element_grams: Vec<DMatrix<T>>,
}

impl<T: Real> LiftedBasis<T> {
    pub fn new(mesh: &Mesh<T>, gamma: &Conductivity<T>, basis: &BoundaryBasis<T>) -> Result<Self> {
        let solver = DirichletSolver::new(mesh, gamma)?;
        Self::from_solver(mesh, &solver, basis.traces())
    }

    fn from_solver(
        mesh: &Mesh<T>,
        solver: &DirichletSolver<'_, T>,
        traces: &DMatrix<T>,
    ) -> Result<Self> {
        let k = traces.ncols();
        let mut solutions = DMatrix::<T>::zeros(mesh.num_nodes(), k);
        let mut gradients = Vec::with_capacity(k);
        for j in 0..k {
            let u = solver.solve(&traces.column(j).into_owned())?;
            gradients.push(element_gradients(mesh, &u));
            solutions.set_column(j, &u);
        }
        let element_grams = element_gram_blocks(mesh, &gradients);
        Ok(Self {
            solutions,
            gradients,
            element_grams,
        })
    }

    pub fn basis_size(&self) -> usize {
        self.gradients.len()
    }

    /// Σ_t w_t · P_t — the quadratic form with per-element weight `w` in the
    /// orthonormal basis.
    pub fn weighted_form(&self, weights: &[T]) -> DMatrix<T> {
        let k = self.basis_size();
        let mut m = DMatrix::<T>::zeros(k, k);
        for (t, p) in self.element_grams.iter().enumerate() {
            let w = weights[t];
            if w != T::zero() {
                m.zip_apply(p, |acc, pij| *acc += w * pij);
            }
        }
        m
    }
}

fn element_gram_blocks<T: Real>(mesh: &Mesh<T>, gradients: &[GradientField<T>]) -> Vec<DMatrix<T>> {
    let k = gradients.len();
    let mut blocks = Vec::with_capacity(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let area = mesh.element_area(t);
        let mut p = DMatrix::<T>::zeros(k, k);
        for i in 0..k {
            let gi = gradients[i].element(t);
            for j in i..k {
                let gj = gradients[j].element(t);
                let v = area * (gi[0] * gj[0] + gi[1] * gj[1]);
                p[(i, j)] = v;
                p[(j, i)] = v;
            }
        }
        blocks.push(p);
    }
    blocks
}

/// Symmetric K×K matrix of a quadratic form in the orthonormal basis.
#[derive(Debug, Clone)]
pub struct OperatorOnVd<T: Real> {
    entries: DMatrix<T>,
    label: String,
}

impl<T: Real> OperatorOnVd<T> {
    /// Wrap and symmetrize ((S+Sᵀ)/2): removes round-off asymmetry before
    /// eigen-certification.
    pub fn new(entries: DMatrix<T>, label: impl Into<String>) -> Self {
        let half = real::<T>(0.5);
        let sym = (&entries + entries.transpose()) * half;
        Self {
            entries: sym,
            label: label.into(),
        }
    }

    pub fn zeros(k: usize, label: impl Into<String>) -> Self {
        Self {
            entries: DMatrix::zeros(k, k),
            label: label.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Hilbert–Schmidt (Frobenius) norm of the entries.
    pub fn hs_norm(&self) -> T {
        self.entries.norm()
    }

    /// Largest eigenvalue magnitude.
    pub fn spectral_norm(&self) -> T {
        symmetric_eigenvalues(&self.entries)
            .iter()
            .fold(T::zero(), |m, &l| m.max(l.abs()))
    }

    pub fn min_eigenvalue(&self) -> T {
        symmetric_eigenvalues(&self.entries)
            .iter()
            .fold(T::max_value().unwrap(), |m, &l| m.min(l))
    }

    pub fn add(&self, other: &Self, label: impl Into<String>) -> Self {
        Self::new(&self.entries + &other.entries, label)
    }

    pub fn sub(&self, other: &Self, label: impl Into<String>) -> Self {
        Self::new(&self.entries - &other.entries, label)
    }

    pub fn scale(&self, c: T, label: impl Into<String>) -> Self {
        Self::new(&self.entries * c, label)
    }

    /// Relative asymmetry ‖S − Sᵀ‖/‖S‖ of a raw matrix.
    pub fn asymmetry(raw: &DMatrix<T>) -> T {
        let n = raw.norm();
        if n == T::zero() {
            return T::zero();
        }
        (raw - raw.transpose()).norm() / n
    }
}

/// Eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues<T: Real>(m: &DMatrix<T>) -> DVector<T> {
    let half = real::<T>(0.5);
    let sym = (m + m.transpose()) * half;
    sym.symmetric_eigen().eigenvalues
}

/// Hilbert–Schmidt norm ‖S‖_Y (Frobenius norm of the orthonormal-basis entries).
pub fn hs_norm<T: Real>(s: &OperatorOnVd<T>) -> T {
    s.hs_norm()
}

/// Hilbert–Schmidt inner product ⟨S, R⟩_Y.
pub fn hs_inner<T: Real>(s: &OperatorOnVd<T>, r: &OperatorOnVd<T>) -> T {
    s.entries().dot(r.entries())
}

/// Build `k` orthonormalized boundary traces on the mesh.
///
/// The trigonometric family takes {sin(2πms/4), cos(2πms/4)}, m = 1..⌈k/2⌉,
/// sampled at the boundary nodes; the hat family takes nodal indicators at
/// evenly spaced boundary nodes. Both exclude constants. Orthonormalization
/// is by Cholesky of the Gram matrix of the γ≡1 lift energies.
pub fn build_boundary_basis<T: Real>(
    mesh: &Mesh<T>,
    k: usize,
    family: BasisFamily,
) -> Result<BoundaryBasis<T>> {
    let nb = mesh.boundary_nodes().len();
    if k == 0 {
        return Err(Error::InvalidArgument("basis size must be >= 1".into()));
    }
    if k > nb - 1 {
        return Err(Error::InvalidArgument(format!(
            "basis size {k} exceeds #boundary nodes - 1 = {}",
            nb - 1
        )));
    }
    let s = boundary_arclength(mesh);
    let mut raw = DMatrix::<T>::zeros(nb, k);
    match family {
        BasisFamily::Trigonometric => {
            let half_pi = T::pi() / real(2.0);
            for j in 0..k {
                let mode = real::<T>((j / 2 + 1) as f64);
                for (b, &sb) in s.iter().enumerate() {
                    let arg = half_pi * mode * sb;
                    raw[(b, j)] = if j % 2 == 0 { arg.sin() } else { arg.cos() };
                }
            }
        }
        BasisFamily::BoundaryHat => {
            for j in 0..k {
                raw[(j * nb / k, j)] = T::one();
            }
        }
    }

    let ones = Conductivity::uniform(mesh.num_triangles(), T::one())?;
    let solver = DirichletSolver::new(mesh, &ones)?;
    let raw_lifts = LiftedBasis::from_solver(mesh, &solver, &raw)?;
    let raw_gram = raw_lifts.weighted_form(&vec![T::one(); mesh.num_triangles()]);

    let chol = nalgebra::Cholesky::new(raw_gram.clone()).ok_or_else(|| {
        Error::BasisRank(format!(
            "Gram matrix of {k} traces is not positive definite on this mesh"
        ))
    })?;
    let l = chol.l();
    let (mut dmin, mut dmax) = (T::max_value().unwrap(), T::zero());
    for i in 0..k {
        dmin = dmin.min(l[(i, i)]);
        dmax = dmax.max(l[(i, i)]);
    }
    if dmin <= T::eps().sqrt() * dmax {
        return Err(Error::BasisRank(format!(
            "Gram matrix of {k} traces is numerically rank deficient on this mesh"
        )));
    }
    let l_inv = chol
        .l()
        .solve_lower_triangular(&DMatrix::<T>::identity(k, k))
        .ok_or_else(|| Error::BasisRank("singular Cholesky factor".into()))?;
    let ortho = l_inv.transpose();
    let traces = &raw * &ortho;

    // Lifts are linear in the trace, so the orthonormal lifts are the same
    // linear combination of the raw lifts.
    let solutions = &raw_lifts.solutions * &ortho;
    let mut gradients = Vec::with_capacity(k);
    for j in 0..k {
        gradients.push(element_gradients(mesh, &solutions.column(j).into_owned()));
    }
    let element_grams = element_gram_blocks(mesh, &gradients);
    let unit_lifts = LiftedBasis {
        solutions,
        gradients,
        element_grams,
    };

    // The orthonormalized Gram must be the identity to well below the
    // certificate tolerances.
    let gram_check = ortho.transpose() * &raw_gram * &ortho;
    let dev = (&gram_check - DMatrix::<T>::identity(k, k)).norm();
    if dev > scaled_tol(1e-10) {
        return Err(Error::BasisRank(format!(
            "orthonormalization residual too large (Gram deviates from identity)"
        )));
    }

    Ok(BoundaryBasis {
        family,
        k,
        raw_traces: raw,
        raw_gram,
        ortho,
        traces,
        unit_lifts,
    })
}

/// Dirichlet-to-Neumann energy form ⟨Λ_γ f̂_i, f̂_j⟩ in the orthonormal basis.
pub fn dtn_form<T: Real>(
    mesh: &Mesh<T>,
    gamma: &Conductivity<T>,
    basis: &BoundaryBasis<T>,
) -> Result<OperatorOnVd<T>> {
    let lifts = LiftedBasis::new(mesh, gamma, basis)?;
    Ok(dtn_form_from(&lifts, gamma))
}

/// DtN form from precomputed lifts.
pub fn dtn_form_from<T: Real>(lifts: &LiftedBasis<T>, gamma: &Conductivity<T>) -> OperatorOnVd<T> {
    OperatorOnVd::new(lifts.weighted_form(gamma.values()), "dtn")
}

/// Derivative form ⟨Λ_γ′(w) f̂_i, f̂_j⟩ from precomputed lifts at γ.
pub fn derivative_form_from<T: Real>(lifts: &LiftedBasis<T>, w: &[T]) -> OperatorOnVd<T> {
    OperatorOnVd::new(lifts.weighted_form(w), "dtn-derivative")
}

/// Derivative of the forward map at γ in direction w (any sign).
pub fn derivative_form<T: Real>(
    mesh: &Mesh<T>,
    gamma: &Conductivity<T>,
    w: &[T],
    basis: &BoundaryBasis<T>,
) -> Result<OperatorOnVd<T>> {
    if w.len() != mesh.num_triangles() {
        return Err(Error::DimensionMismatch(
            "direction length != number of elements".into(),
        ));
    }
    let lifts = LiftedBasis::new(mesh, gamma, basis)?;
    Ok(derivative_form_from(&lifts, w))
}

/// Cross-formula form Σ_t w_t |T_t| ∇u^A_i·∇u^B_j between two lift families.
fn mixed_form<T: Real>(
    mesh: &Mesh<T>,
    lifts_a: &LiftedBasis<T>,
    lifts_b: &LiftedBasis<T>,
    weights: &[T],
) -> DMatrix<T> {
    let k = lifts_a.basis_size();
    let mut m = DMatrix::<T>::zeros(k, k);
    for t in 0..mesh.num_triangles() {
        let w = weights[t] * mesh.element_area(t);
        if w == T::zero() {
            continue;
        }
        for i in 0..k {
            let ga = lifts_a.gradients[i].element(t);
            for j in 0..k {
                let gb = lifts_b.gradients[j].element(t);
                m[(i, j)] += w * (ga[0] * gb[0] + ga[1] * gb[1]);
            }
        }
    }
    m
}

/// Relative mismatch between the two routes to Λ_{γ1} − Λ_{γ2}: difference of
/// energy forms vs. the cross-solution formula. Exact in a conforming
/// Galerkin discretization, so the mismatch measures solver noise.
pub fn dtn_difference_consistency<T: Real>(
    mesh: &Mesh<T>,
    basis: &BoundaryBasis<T>,
    gamma1: &Conductivity<T>,
    gamma2: &Conductivity<T>,
) -> Result<T> {
    let l1 = LiftedBasis::new(mesh, gamma1, basis)?;
    let l2 = LiftedBasis::new(mesh, gamma2, basis)?;
    let d1 = dtn_form_from(&l1, gamma1);
    let d2 = dtn_form_from(&l2, gamma2);
    let diff_forms = d1.sub(&d2, "dtn-diff");
    let w: Vec<T> = gamma1
        .values()
        .iter()
        .zip(gamma2.values())
        .map(|(&a, &b)| a - b)
        .collect();
    let cross = OperatorOnVd::new(mixed_form(mesh, &l1, &l2, &w), "dtn-diff-cross");
    let scale = d1.hs_norm().max(d2.hs_norm()).max(T::one());
    Ok(diff_forms.sub(&cross, "route-mismatch").hs_norm() / scale)
}

/// Forward map F(γ) = Λ_γ − Λ_1 with a built-in consistency check: the
/// energy-form difference must match the cross formula to solver precision,
/// otherwise the solves are untrustworthy.
pub fn forward_map<T: Real>(
    mesh: &Mesh<T>,
    gamma: &Conductivity<T>,
    basis: &BoundaryBasis<T>,
) -> Result<OperatorOnVd<T>> {
    let lifts = LiftedBasis::new(mesh, gamma, basis)?;
    forward_map_from(mesh, &lifts, gamma, basis)
}

/// Forward map from precomputed lifts at γ.
pub fn forward_map_from<T: Real>(
    mesh: &Mesh<T>,
    lifts: &LiftedBasis<T>,
    gamma: &Conductivity<T>,
    basis: &BoundaryBasis<T>,
) -> Result<OperatorOnVd<T>> {
    let d_gamma = dtn_form_from(lifts, gamma);
    let ones = Conductivity::uniform(mesh.num_triangles(), T::one())?;
    let d_one = dtn_form_from(basis.unit_lifts(), &ones);
    let f = d_gamma.sub(&d_one, "forward");

    let w: Vec<T> = gamma.values().iter().map(|&g| g - T::one()).collect();
    let cross = OperatorOnVd::new(
        mixed_form(mesh, lifts, basis.unit_lifts(), &w),
        "forward-cross",
    );
    let scale = d_gamma.hs_norm().max(d_one.hs_norm()).max(T::one());
    let mismatch = f.sub(&cross, "mismatch").hs_norm() / scale;
    if mismatch > scaled_tol(CROSS_FORMULA_RTOL) {
        return Err(Error::InternalConsistency(format!(
            "energy-form and cross-formula routes disagree (relative mismatch {:?})",
            mismatch.to_f64()
        )));
    }
    Ok(f)
}

/// Adjoint of the derivative under the area-weighted element inner product:
/// per-element function with value Σ_{ij} S_ij (∇u_i·∇u_j)|_t, satisfying
/// ⟨F′[γ]w, S⟩_F = Σ_t |T_t| w_t adj_t for all w.
pub fn derivative_adjoint<T: Real>(
    mesh: &Mesh<T>,
    gamma: &Conductivity<T>,
    s: &OperatorOnVd<T>,
    basis: &BoundaryBasis<T>,
) -> Result<Vec<T>> {
    let lifts = LiftedBasis::new(mesh, gamma, basis)?;
    derivative_adjoint_from(mesh, &lifts, s)
}

/// Adjoint from precomputed lifts; rejects asymmetric data.
pub fn derivative_adjoint_from<T: Real>(
    mesh: &Mesh<T>,
    lifts: &LiftedBasis<T>,
    s: &OperatorOnVd<T>,
) -> Result<Vec<T>> {
    if s.dim() != lifts.basis_size() {
        return Err(Error::DimensionMismatch(
            "operator dimension != basis size".into(),
        ));
    }
    let raw = s.entries();
    if OperatorOnVd::asymmetry(raw) > scaled_tol(1e-12) {
        return Err(Error::InvalidArgument(
            "derivative adjoint requires a symmetric operator".into(),
        ));
    }
    Ok((0..mesh.num_triangles())
        .map(|t| lifts.element_grams[t].dot(raw) / mesh.element_area(t))
        .collect())
}

/// First-order Taylor remainder B(γ, γ†) = F(γ) − F(γ†) − Λ_γ′(γ−γ†).
pub fn taylor_remainder<T: Real>(
    mesh: &Mesh<T>,
    gamma: &Conductivity<T>,
    gamma_dagger: &Conductivity<T>,
    basis: &BoundaryBasis<T>,
) -> Result<OperatorOnVd<T>> {
    let lifts_g = LiftedBasis::new(mesh, gamma, basis)?;
    let lifts_d = LiftedBasis::new(mesh, gamma_dagger, basis)?;
    Ok(taylor_remainder_from(
        &lifts_g,
        &lifts_d,
        gamma,
        gamma_dagger,
    ))
}

/// Taylor remainder from precomputed lifts at γ and γ†. The derivative is
/// evaluated at γ (first argument).
pub fn taylor_remainder_from<T: Real>(
    lifts_gamma: &LiftedBasis<T>,
    lifts_dagger: &LiftedBasis<T>,
    gamma: &Conductivity<T>,
    gamma_dagger: &Conductivity<T>,
) -> OperatorOnVd<T> {
    let d_g = dtn_form_from(lifts_gamma, gamma);
    let d_d = dtn_form_from(lifts_dagger, gamma_dagger);
    let w: Vec<T> = gamma
        .values()
        .iter()
        .zip(gamma_dagger.values())
        .map(|(&a, &b)| a - b)
        .collect();
    let dprime = derivative_form_from(lifts_gamma, &w);
    OperatorOnVd::new(
        d_g.entries() - d_d.entries() - dprime.entries(),
        "taylor-remainder",
    )
}

/// Interior "divergence" pairing of a gradient field: (G_intᵀ W z)_i for each
/// interior node i.
pub fn divergence_pairing_int<T: Real>(mesh: &Mesh<T>, z: &GradientField<T>) -> DVector<T> {
    let mut r = DVector::<T>::zeros(mesh.interior_nodes().len());
    for t in 0..mesh.num_triangles() {
        let grads = crate::fem::shape_gradients(mesh, t);
        let tri = mesh.triangles()[t];
        let zt = z.element(t);
        let area = mesh.element_area(t);
        for i in 0..3 {
            if let Some(ii) = mesh.interior_position(tri[i]) {
                r[ii] += area * (zt[0] * grads[i][0] + zt[1] * grads[i][1]);
            }
        }
    }
    r
}

/// Apply 𝒦_γ = G·A(γ)⁻¹·G_intᵀ·W to a gradient field (one interior solve).
pub fn apply_k_gamma<T: Real>(
    mesh: &Mesh<T>,
    solver: &DirichletSolver<'_, T>,
    z: &GradientField<T>,
) -> Result<GradientField<T>> {
    let rhs = divergence_pairing_int(mesh, z);
    let v = solver.solve_homogeneous(&rhs)?;
    Ok(element_gradients(mesh, &v))
}

fn scale_field<T: Real>(z: &GradientField<T>, factors: &[T]) -> GradientField<T> {
    let mut out = z.clone();
    for t in 0..z.num_elements() {
        let e = z.element(t);
        out.set_element(t, [factors[t] * e[0], factors[t] * e[1]]);
    }
    out
}

/// Explicit matrix of the W-orthogonal projector
/// R_γ = H_{√γ}·G·A(γ)⁻¹·G_intᵀ·W·H_{√γ} on the gradient-field space.
pub fn projector_matrix<T: Real>(mesh: &Mesh<T>, gamma: &Conductivity<T>) -> Result<DMatrix<T>> {
    let solver = DirichletSolver::new(mesh, gamma)?;
    let nt = mesh.num_triangles();
    let sqrt_g: Vec<T> = gamma.values().iter().map(|&g| g.sqrt()).collect();
    let dim = 2 * nt;
    let mut r = DMatrix::<T>::zeros(dim, dim);
    let mut e = GradientField::zeros(nt);
    for c in 0..dim {
        let t = c / 2;
        let mut unit = [T::zero(); 2];
        unit[c % 2] = sqrt_g[t];
        e.set_element(t, unit);
        let img = apply_k_gamma(mesh, &solver, &e)?;
        let img = scale_field(&img, &sqrt_g);
        r.set_column(c, img.as_vector());
        e.set_element(t, [T::zero(); 2]);
    }
    Ok(r)
}

/// A discretely (√γ)-divergence-free probe field: the rotated gradient of an
/// arbitrary nodal function, divided by √γ. Satisfies G_intᵀ·W·H_{√γ}·z = 0
/// exactly (tangential continuity of P1 gradients), hence R_γ·z = 0.
pub fn divergence_free_probe<T: Real>(
    mesh: &Mesh<T>,
    gamma: &Conductivity<T>,
    phi: &DVector<T>,
) -> GradientField<T> {
    let g = element_gradients(mesh, phi);
    let mut z = GradientField::zeros(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let e = g.element(t);
        let inv_sqrt = T::one() / gamma.value(t).sqrt();
        z.set_element(t, [-e[1] * inv_sqrt, e[0] * inv_sqrt]);
    }
    z
}

/// Verify the multiplicative resolvent identity
/// ∇u_{γ2,f} = (I − 𝒦_{γ2}·H_{γ2−γ1})·∇u_{γ1,f}
/// and return the W-norm relative error. Requires ξ = ‖(γ1−γ2)/γ2‖_∞ below
/// `xi_cap` (strictly below 1).
pub fn resolvent_identity_check_with_cap<T: Real>(
    mesh: &Mesh<T>,
    gamma1: &Conductivity<T>,
    gamma2: &Conductivity<T>,
    f: &DVector<T>,
    xi_cap: T,
) -> Result<T> {
    let xi = contraction_parameter(gamma1, gamma2);
    if !(xi < xi_cap.min(T::one())) {
        return Err(Error::Precondition(format!(
            "contraction parameter xi = {:?} exceeds cap {:?}",
            xi.to_f64(),
            xi_cap.to_f64()
        )));
    }
    let s1 = DirichletSolver::new(mesh, gamma1)?;
    let s2 = DirichletSolver::new(mesh, gamma2)?;
    let u1 = s1.solve(f)?;
    let u2 = s2.solve(f)?;
    let g1 = element_gradients(mesh, &u1);
    let g2 = element_gradients(mesh, &u2);

    let diff: Vec<T> = gamma2
        .values()
        .iter()
        .zip(gamma1.values())
        .map(|(&b, &a)| b - a)
        .collect();
    let hz = scale_field(&g1, &diff);
    let correction = apply_k_gamma(mesh, &s2, &hz)?;
    let rhs = GradientField::from_vector(g1.as_vector() - correction.as_vector())?;

    let areas = mesh.element_areas();
    let err = GradientField::from_vector(g2.as_vector() - rhs.as_vector())?.w_norm(areas);
    let scale = g2.w_norm(areas);
    Ok(if scale > T::zero() { err / scale } else { err })
}

/// Resolvent identity check with the default contraction cap.
pub fn resolvent_identity_check<T: Real>(
    mesh: &Mesh<T>,
    gamma1: &Conductivity<T>,
    gamma2: &Conductivity<T>,
    f: &DVector<T>,
) -> Result<T> {
    resolvent_identity_check_with_cap(mesh, gamma1, gamma2, f, real(DEFAULT_XI_CAP))
}

/// ξ = ‖(γ1−γ2)/γ2‖_∞.
pub fn contraction_parameter<T: Real>(gamma1: &Conductivity<T>, gamma2: &Conductivity<T>) -> T {
    gamma1
        .values()
        .iter()
        .zip(gamma2.values())
        .fold(T::zero(), |m, (&a, &b)| m.max(((a - b) / b).abs()))
}
