//! P1 conforming finite elements on the structured mesh: stiffness assembly
//! for div(γ∇u), Dirichlet solves with a reusable factorization, per-element
//! gradients, and the discrete gradient/weight operators behind the projector
//! algebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::scalar::{real, Real};

/// Piecewise-constant conductivity with ellipticity bounds.
#[derive(Debug, Clone)]
pub struct Conductivity<T: Real> {
    values: Vec<T>,
    lower: T,
    upper: T,
}

/// Default ellipticity window used by scenario generators.
pub const DEFAULT_LOWER_BOUND: f64 = 0.5;
pub const DEFAULT_UPPER_BOUND: f64 = 2.0;

impl<T: Real> Conductivity<T> {
    /// Conductivity with explicit bounds; every value must lie in [lower, upper].
    pub fn from_values(values: Vec<T>, lower: T, upper: T) -> Result<Self> {
        if lower <= T::zero() {
            return Err(Error::EllipticityViolation(
                "lower bound must be positive".into(),
            ));
        }
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty conductivity".into()));
        }
        for (t, &v) in values.iter().enumerate() {
            if !(v >= lower && v <= upper) {
                return Err(Error::EllipticityViolation(format!(
                    "value on element {t} outside [lower, upper]"
                )));
            }
        }
        Ok(Self { values, lower, upper })
    }

    /// Bounds chosen automatically: the default window [0.5, 2], widened when
    /// the values fall outside it.
    pub fn auto(values: Vec<T>) -> Result<Self> {
        let mut lo = real::<T>(DEFAULT_LOWER_BOUND);
        let mut hi = real::<T>(DEFAULT_UPPER_BOUND);
        for &v in &values {
            if v <= T::zero() {
                return Err(Error::EllipticityViolation(
                    "conductivity values must be positive".into(),
                ));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Self::from_values(values, lo, hi)
    }

    pub fn uniform(num_elements: usize, value: T) -> Result<Self> {
        Self::auto(vec![value; num_elements])
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, t: usize) -> T {
        self.values[t]
    }

    pub fn lower_bound(&self) -> T {
        self.lower
    }

    pub fn upper_bound(&self) -> T {
        self.upper
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Clamp a raw per-element vector into [lower, upper], counting how many
    /// entries actually moved.
    pub fn clamped_from(values: &[T], lower: T, upper: T) -> (Self, usize) {
        let mut clamped = 0usize;
        let vals = values
            .iter()
            .map(|&v| {
                if v < lower || v > upper {
                    clamped += 1;
                }
                v.clamp(lower, upper)
            })
            .collect();
        (
            Self {
                values: vals,
                lower,
                upper,
            },
            clamped,
        )
    }
}

/// Piecewise-constant vector field (one 2-vector per element, interleaved),
/// together with its positive area weight.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField<T: Real> {
    data: DVector<T>,
}

impl<T: Real> GradientField<T> {
    pub fn zeros(num_elements: usize) -> Self {
        Self {
            data: DVector::zeros(2 * num_elements),
        }
    }

    pub fn from_vector(data: DVector<T>) -> Result<Self> {
        if data.len() % 2 != 0 {
            return Err(Error::DimensionMismatch(
                "gradient field length must be even".into(),
            ));
        }
        Ok(Self { data })
    }

    pub fn num_elements(&self) -> usize {
        self.data.len() / 2
    }

    pub fn element(&self, t: usize) -> [T; 2] {
        [self.data[2 * t], self.data[2 * t + 1]]
    }

    pub fn set_element(&mut self, t: usize, g: [T; 2]) {
        self.data[2 * t] = g[0];
        self.data[2 * t + 1] = g[1];
    }

    pub fn as_vector(&self) -> &DVector<T> {
        &self.data
    }

    pub fn into_vector(self) -> DVector<T> {
        self.data
    }

    /// W-inner product Σ_T |T| (u·v)|_T against `other` under `weights`.
    pub fn w_inner(&self, other: &Self, weights: &[T]) -> T {
        let mut acc = T::zero();
        for t in 0..self.num_elements() {
            acc += weights[t] * (self.data[2 * t] * other.data[2 * t] + self.data[2 * t + 1] * other.data[2 * t + 1]);
        }
        acc
    }

    pub fn w_norm(&self, weights: &[T]) -> T {
        self.w_inner(self, weights).sqrt()
    }
}

/// Per-element gradients of the three P1 hat functions, CCW vertex order.
pub fn shape_gradients<T: Real>(mesh: &Mesh<T>, t: usize) -> [[T; 2]; 3] {
    let [a, b, c] = mesh.triangles()[t];
    let p = [mesh.nodes()[a], mesh.nodes()[b], mesh.nodes()[c]];
    let two_a = real::<T>(2.0) * mesh.element_area(t);
    let mut g = [[T::zero(); 2]; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        g[i] = [(p[j][1] - p[k][1]) / two_a, (p[k][0] - p[j][0]) / two_a];
    }
    g
}

fn check_sizes<T: Real>(mesh: &Mesh<T>, gamma: &Conductivity<T>) -> Result<()> {
    if gamma.len() != mesh.num_triangles() {
        return Err(Error::DimensionMismatch(format!(
            "conductivity has {} values, mesh has {} elements",
            gamma.len(),
            mesh.num_triangles()
        )));
    }
    Ok(())
}

/// Full stiffness matrix of div(γ∇u) over all nodes: symmetric, zero row sums.
pub fn assemble_stiffness<T: Real>(mesh: &Mesh<T>, gamma: &Conductivity<T>) -> Result<DMatrix<T>> {
    check_sizes(mesh, gamma)?;
    let n = mesh.num_nodes();
    let mut a = DMatrix::<T>::zeros(n, n);
    for t in 0..mesh.num_triangles() {
        let gt = gamma.value(t);
        if gt <= T::zero() {
            return Err(Error::EllipticityViolation(format!(
                "non-positive conductivity on element {t}"
            )));
        }
        let coef = gt * mesh.element_area(t);
        let grads = shape_gradients(mesh, t);
        let tri = mesh.triangles()[t];
        for i in 0..3 {
            for j in 0..3 {
                let kij = coef * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                a[(tri[i], tri[j])] += kij;
            }
        }
    }
    Ok(a)
}

/// Energy form Σ_T γ_T |T| ∇u·∇v of two nodal functions.
pub fn energy<T: Real>(mesh: &Mesh<T>, gamma: &Conductivity<T>, u: &DVector<T>, v: &DVector<T>) -> T {
    let gu = element_gradients(mesh, u);
    let gv = element_gradients(mesh, v);
    let mut acc = T::zero();
    for t in 0..mesh.num_triangles() {
        let a = gu.element(t);
        let b = gv.element(t);
        acc += gamma.value(t) * mesh.element_area(t) * (a[0] * b[0] + a[1] * b[1]);
    }
    acc
}

/// Per-element constant gradient of the P1 interpolant of nodal values `u`.
pub fn element_gradients<T: Real>(mesh: &Mesh<T>, u: &DVector<T>) -> GradientField<T> {
    let mut field = GradientField::zeros(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let grads = shape_gradients(mesh, t);
        let tri = mesh.triangles()[t];
        let mut gx = T::zero();
        let mut gy = T::zero();
        for i in 0..3 {
            gx += u[tri[i]] * grads[i][0];
            gy += u[tri[i]] * grads[i][1];
        }
        field.set_element(t, [gx, gy]);
    }
    field
}

/// Dirichlet solver for a fixed (mesh, γ): one interior Cholesky factorization
/// reused across all boundary data.
pub struct DirichletSolver<'m, T: Real> {
    mesh: &'m Mesh<T>,
    chol: Cholesky<T, Dyn>,
    a_ib: DMatrix<T>,
}

impl<'m, T: Real> DirichletSolver<'m, T> {
    pub fn new(mesh: &'m Mesh<T>, gamma: &Conductivity<T>) -> Result<Self> {
        let a = assemble_stiffness(mesh, gamma)?;
        let ni = mesh.interior_nodes().len();
        let nb = mesh.boundary_nodes().len();
        let mut a_ii = DMatrix::<T>::zeros(ni, ni);
        let mut a_ib = DMatrix::<T>::zeros(ni, nb);
        for (i, &vi) in mesh.interior_nodes().iter().enumerate() {
            for (j, &vj) in mesh.interior_nodes().iter().enumerate() {
                a_ii[(i, j)] = a[(vi, vj)];
            }
            for (j, &vj) in mesh.boundary_nodes().iter().enumerate() {
                a_ib[(i, j)] = a[(vi, vj)];
            }
        }
        let chol = Cholesky::new(a_ii).ok_or_else(|| {
            Error::SolverFailure("interior stiffness matrix is not positive definite".into())
        })?;
        Ok(Self { mesh, chol, a_ib })
    }

    /// Solve with `boundary_values` given in boundary-walk order; returns the
    /// full nodal solution (boundary entries carry the data exactly).
    pub fn solve(&self, boundary_values: &DVector<T>) -> Result<DVector<T>> {
        if boundary_values.len() != self.mesh.boundary_nodes().len() {
            return Err(Error::DimensionMismatch(
                "boundary data length != number of boundary nodes".into(),
            ));
        }
        let rhs = -(&self.a_ib * boundary_values);
        let ui = self.chol.solve(&rhs);
        let mut u = DVector::<T>::zeros(self.mesh.num_nodes());
        for (i, &v) in self.mesh.interior_nodes().iter().enumerate() {
            u[v] = ui[i];
        }
        for (j, &v) in self.mesh.boundary_nodes().iter().enumerate() {
            u[v] = boundary_values[j];
        }
        Ok(u)
    }

    /// Solve the homogeneous-Dirichlet problem A_II v = rhs_int, extended by
    /// zero to the boundary.
    pub fn solve_homogeneous(&self, rhs_int: &DVector<T>) -> Result<DVector<T>> {
        if rhs_int.len() != self.mesh.interior_nodes().len() {
            return Err(Error::DimensionMismatch(
                "rhs length != number of interior nodes".into(),
            ));
        }
        let vi = self.chol.solve(rhs_int);
        let mut v = DVector::<T>::zeros(self.mesh.num_nodes());
        for (i, &node) in self.mesh.interior_nodes().iter().enumerate() {
            v[node] = vi[i];
        }
        Ok(v)
    }
}

/// One-shot Dirichlet solve (builds and drops the factorization).
pub fn solve_dirichlet<T: Real>(
    mesh: &Mesh<T>,
    gamma: &Conductivity<T>,
    boundary_values: &DVector<T>,
) -> Result<DVector<T>> {
    DirichletSolver::new(mesh, gamma)?.solve(boundary_values)
}

/// Explicit gradient/weight operators: G (all nodes → gradient fields), its
/// interior restriction, and the diagonal area weight. Dense; meant for the
/// projector algebra and for structural tests, not for the hot assembly path.
pub struct DiscreteOperators<T: Real> {
    pub g_full: DMatrix<T>,
    pub g_int: DMatrix<T>,
    /// Area weight per gradient-field component (each element area twice).
    pub w: DVector<T>,
}

impl<T: Real> DiscreteOperators<T> {
    pub fn new(mesh: &Mesh<T>) -> Self {
        let nt = mesh.num_triangles();
        let n = mesh.num_nodes();
        let mut g_full = DMatrix::<T>::zeros(2 * nt, n);
        for t in 0..nt {
            let grads = shape_gradients(mesh, t);
            let tri = mesh.triangles()[t];
            for i in 0..3 {
                g_full[(2 * t, tri[i])] += grads[i][0];
                g_full[(2 * t + 1, tri[i])] += grads[i][1];
            }
        }
        let ni = mesh.interior_nodes().len();
        let mut g_int = DMatrix::<T>::zeros(2 * nt, ni);
        for (i, &v) in mesh.interior_nodes().iter().enumerate() {
            g_int.set_column(i, &g_full.column(v));
        }
        let mut w = DVector::<T>::zeros(2 * nt);
        for t in 0..nt {
            w[2 * t] = mesh.element_area(t);
            w[2 * t + 1] = mesh.element_area(t);
        }
        Self { g_full, g_int, w }
    }

    /// Diagonal of the multiplication operator H_κ on gradient fields.
    pub fn h_diag(kappa: &[T]) -> DVector<T> {
        let mut d = DVector::<T>::zeros(2 * kappa.len());
        for (t, &k) in kappa.iter().enumerate() {
            d[2 * t] = k;
            d[2 * t + 1] = k;
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn unit_gamma(mesh: &Mesh<f64>) -> Conductivity<f64> {
        Conductivity::uniform(mesh.num_triangles(), 1.0).unwrap()
    }

    /// Independent assembly route: cotangent weights per element.
    fn cotangent_stiffness(mesh: &Mesh<f64>, gamma: &Conductivity<f64>) -> DMatrix<f64> {
        let n = mesh.num_nodes();
        let mut a = DMatrix::<f64>::zeros(n, n);
        for t in 0..mesh.num_triangles() {
            let tri = mesh.triangles()[t];
            let p: Vec<[f64; 2]> = tri.iter().map(|&v| mesh.nodes()[v]).collect();
            for k in 0..3 {
                let i = (k + 1) % 3;
                let j = (k + 2) % 3;
                let u = [p[i][0] - p[k][0], p[i][1] - p[k][1]];
                let v = [p[j][0] - p[k][0], p[j][1] - p[k][1]];
                let cot = (u[0] * v[0] + u[1] * v[1]) / (u[0] * v[1] - u[1] * v[0]).abs();
                let w = 0.5 * gamma.value(t) * cot;
                a[(tri[i], tri[j])] -= w;
                a[(tri[j], tri[i])] -= w;
                a[(tri[i], tri[i])] += w;
                a[(tri[j], tri[j])] += w;
            }
        }
        a
    }

    #[test]
    fn row_sums_vanish() {
        let mesh = build_structured_mesh::<f64>(3).unwrap();
        let a = assemble_stiffness(&mesh, &unit_gamma(&mesh)).unwrap();
        for i in 0..mesh.num_nodes() {
            let s: f64 = a.row(i).iter().sum();
            assert!(s.abs() < 1e-13, "row {i} sums to {s}");
        }
    }

    #[test]
    fn hand_assembled_two_triangle_mesh() {
        // n=1, γ≡1: two right-isosceles elements, assembled by hand.
        let mesh = build_structured_mesh::<f64>(1).unwrap();
        let a = assemble_stiffness(&mesh, &unit_gamma(&mesh)).unwrap();
        // Node order: 0=(0,0), 1=(1,0), 2=(0,1), 3=(1,1).
        let expected = DMatrix::<f64>::from_row_slice(
            4,
            4,
            &[
                1.0, -0.5, -0.5, 0.0, //
                -0.5, 1.0, 0.0, -0.5, //
                -0.5, 0.0, 1.0, -0.5, //
                0.0, -0.5, -0.5, 1.0,
            ],
        );
        assert!((a - expected).norm() < 1e-14);
    }

    #[test]
    fn assembly_linear_in_gamma() {
        let mesh = build_structured_mesh::<f64>(4).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let vals: Vec<f64> = (0..mesh.num_triangles()).map(|_| rng.random_range(0.5..2.0)).collect();
        let g1 = Conductivity::auto(vals.clone()).unwrap();
        let g2 = Conductivity::auto(vals.iter().map(|v| 2.0 * v).collect()).unwrap();
        let a1 = assemble_stiffness(&mesh, &g1).unwrap();
        let a2 = assemble_stiffness(&mesh, &g2).unwrap();
        assert!((a2 - &a1 * 2.0).norm() < 1e-13);
    }

    #[test]
    fn matches_cotangent_assembly() {
        let mesh = build_structured_mesh::<f64>(5).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let vals: Vec<f64> = (0..mesh.num_triangles()).map(|_| rng.random_range(0.5..2.0)).collect();
        let gamma = Conductivity::auto(vals).unwrap();
        let a = assemble_stiffness(&mesh, &gamma).unwrap();
        let b = cotangent_stiffness(&mesh, &gamma);
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_conductivity() {
        let mesh = build_structured_mesh::<f64>(2).unwrap();
        let mut vals = vec![1.0; mesh.num_triangles()];
        vals[3] = -0.25;
        assert!(matches!(
            Conductivity::auto(vals),
            Err(Error::EllipticityViolation(_))
        ));
    }

    #[test]
    fn affine_traces_solve_exactly() {
        // Affine functions are discretely harmonic for P1 on any mesh.
        let mesh = build_structured_mesh::<f64>(6).unwrap();
        let affine = |p: [f64; 2]| 0.3 + 1.7 * p[0] - 0.9 * p[1];
        let bv = DVector::from_iterator(
            mesh.boundary_nodes().len(),
            mesh.boundary_nodes().iter().map(|&v| affine(mesh.nodes()[v])),
        );
        let u = solve_dirichlet(&mesh, &unit_gamma(&mesh), &bv).unwrap();
        for v in 0..mesh.num_nodes() {
            assert_abs_diff_eq!(u[v], affine(mesh.nodes()[v]), epsilon = 1e-12);
        }
    }

    #[test]
    fn uniform_scaling_cancels_in_solution() {
        let mesh = build_structured_mesh::<f64>(4).unwrap();
        let bv = DVector::from_iterator(
            mesh.boundary_nodes().len(),
            mesh.boundary_nodes()
                .iter()
                .map(|&v| (mesh.nodes()[v][0] * 3.0).sin()),
        );
        let u1 = solve_dirichlet(&mesh, &unit_gamma(&mesh), &bv).unwrap();
        let g2 = Conductivity::uniform(mesh.num_triangles(), 1.75).unwrap();
        let u2 = solve_dirichlet(&mesh, &g2, &bv).unwrap();
        assert!((u1 - u2).norm() < 1e-12);
    }

    #[test]
    fn interior_value_of_xy_trace_on_n2() {
        // n=2 has one interior node (0.5, 0.5); the five-point stencil of this
        // triangulation averages the four axis neighbours of the x·y trace,
        // giving exactly 1/4.
        let mesh = build_structured_mesh::<f64>(2).unwrap();
        let bv = DVector::from_iterator(
            mesh.boundary_nodes().len(),
            mesh.boundary_nodes()
                .iter()
                .map(|&v| mesh.nodes()[v][0] * mesh.nodes()[v][1]),
        );
        let u = solve_dirichlet(&mesh, &unit_gamma(&mesh), &bv).unwrap();
        let center = mesh
            .nodes()
            .iter()
            .position(|&p| p == [0.5, 0.5])
            .unwrap();
        assert_abs_diff_eq!(u[center], 0.25, epsilon = 1e-13);
    }

    #[test]
    fn interior_residual_vanishes() {
        let mesh = build_structured_mesh::<f64>(5).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let vals: Vec<f64> = (0..mesh.num_triangles()).map(|_| rng.random_range(0.5..2.0)).collect();
        let gamma = Conductivity::auto(vals).unwrap();
        let bv = DVector::from_iterator(
            mesh.boundary_nodes().len(),
            (0..mesh.boundary_nodes().len()).map(|k| ((k as f64) * 0.7).cos()),
        );
        let u = solve_dirichlet(&mesh, &gamma, &bv).unwrap();
        let a = assemble_stiffness(&mesh, &gamma).unwrap();
        let r = &a * &u;
        for &v in mesh.interior_nodes() {
            assert!(r[v].abs() < 1e-12);
        }
        for (j, &v) in mesh.boundary_nodes().iter().enumerate() {
            assert_eq!(u[v], bv[j]);
        }
    }

    #[test]
    fn gradient_of_affine_is_constant() {
        let mesh = build_structured_mesh::<f64>(3).unwrap();
        let u = DVector::from_iterator(
            mesh.num_nodes(),
            mesh.nodes().iter().map(|p| 2.0 - 0.4 * p[0] + 1.1 * p[1]),
        );
        let g = element_gradients(&mesh, &u);
        for t in 0..mesh.num_triangles() {
            let e = g.element(t);
            assert_abs_diff_eq!(e[0], -0.4, epsilon = 1e-13);
            assert_abs_diff_eq!(e[1], 1.1, epsilon = 1e-13);
        }
        let c = DVector::from_element(mesh.num_nodes(), 5.5);
        let gc = element_gradients(&mesh, &c);
        assert!(gc.as_vector().norm() < 1e-13);
    }

    #[test]
    fn gradient_of_nodal_indicator_on_n1() {
        // Node 0 = (0,0) belongs to both triangles; hand computation gives
        // (-1, 0) on the lower triangle and (0, -1) on the upper one.
        let mesh = build_structured_mesh::<f64>(1).unwrap();
        let mut u = DVector::zeros(4);
        u[0] = 1.0;
        let g = element_gradients(&mesh, &u);
        assert_abs_diff_eq!(g.element(0)[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.element(0)[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.element(1)[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.element(1)[1], -1.0, epsilon = 1e-14);
    }

    #[test]
    fn galerkin_energy_identity() {
        let mesh = build_structured_mesh::<f64>(4).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let vals: Vec<f64> = (0..mesh.num_triangles()).map(|_| rng.random_range(0.5..2.0)).collect();
        let gamma = Conductivity::auto(vals).unwrap();
        let a = assemble_stiffness(&mesh, &gamma).unwrap();
        let u = DVector::from_iterator(mesh.num_nodes(), (0..mesh.num_nodes()).map(|_| rng.random_range(-1.0..1.0)));
        let quad = (&u.transpose() * &a * &u)[(0, 0)];
        assert_abs_diff_eq!(quad, energy(&mesh, &gamma, &u, &u), epsilon = 1e-12);
    }

    #[test]
    fn dirichlet_solution_minimizes_energy() {
        let mesh = build_structured_mesh::<f64>(4).unwrap();
        let gamma = unit_gamma(&mesh);
        let bv = DVector::from_iterator(
            mesh.boundary_nodes().len(),
            (0..mesh.boundary_nodes().len()).map(|k| ((k as f64) * 1.3).sin()),
        );
        let u = solve_dirichlet(&mesh, &gamma, &bv).unwrap();
        let e0 = energy(&mesh, &gamma, &u, &u);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..5 {
            let mut up = u.clone();
            let v = mesh.interior_nodes()[rng.random_range(0..mesh.interior_nodes().len())];
            up[v] += rng.random_range(0.01..0.5);
            assert!(energy(&mesh, &gamma, &up, &up) > e0 - 1e-13);
        }
    }

    #[test]
    fn discrete_operators_consistency() {
        let mesh = build_structured_mesh::<f64>(3).unwrap();
        let ops = DiscreteOperators::new(&mesh);
        // Constant nodal data lies in the kernel of G.
        let c = DVector::from_element(mesh.num_nodes(), 2.5);
        assert!((&ops.g_full * c).norm() < 1e-13);
        // A(γ) = G_intᵀ·W·H_γ·G_int reproduces the assembled interior block.
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let vals: Vec<f64> = (0..mesh.num_triangles()).map(|_| rng.random_range(0.5..2.0)).collect();
        let gamma = Conductivity::auto(vals).unwrap();
        let h = DiscreteOperators::h_diag(gamma.values());
        let wh = DVector::from_iterator(h.len(), h.iter().zip(ops.w.iter()).map(|(a, b)| a * b));
        let a_int = ops.g_int.transpose() * DMatrix::from_diagonal(&wh) * &ops.g_int;
        let a_full = assemble_stiffness(&mesh, &gamma).unwrap();
        for (i, &vi) in mesh.interior_nodes().iter().enumerate() {
            for (j, &vj) in mesh.interior_nodes().iter().enumerate() {
                assert_abs_diff_eq!(a_int[(i, j)], a_full[(vi, vj)], epsilon = 1e-12);
            }
        }
        assert!(Cholesky::new(a_int).is_some());
    }
}
