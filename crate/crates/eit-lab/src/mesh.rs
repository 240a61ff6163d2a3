//! Structured P1 triangulation of the unit square with an arclength-ordered
//! boundary.
//!
//! Every grid square is split along its lower-left to upper-right diagonal,
//! which keeps meshes deterministic and certificates bit-replayable.

use crate::error::{Error, Result};
use crate::scalar::{real, scaled_tol, to_f64, Real};

/// Triangulation of Ω = [0,1]² with `n` subdivisions per side.
///
/// Immutable after construction; safe to share read-only across workers.
#[derive(Debug, Clone)]
pub struct Mesh<T: Real> {
    n: usize,
    nodes: Vec<[T; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_nodes: Vec<usize>,
    element_areas: Vec<T>,
    interior_nodes: Vec<usize>,
    /// For each node: `Some(k)` when it is the k-th interior node.
    interior_index: Vec<Option<usize>>,
    /// For each node: `Some(k)` when it is the k-th boundary node.
    boundary_index: Vec<Option<usize>>,
}

/// Build the structured mesh with `n ≥ 1` subdivisions per side.
///
/// Yields (n+1)² nodes and 2n² counterclockwise triangles; the boundary is
/// ordered counterclockwise starting at (0,0).
pub fn build_structured_mesh<T: Real>(n: usize) -> Result<Mesh<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("mesh subdivisions n must be >= 1".into()));
    }
    let np = n + 1;
    let h: T = T::one() / real(n as f64);
    let idx = |i: usize, j: usize| j * np + i;

    let mut nodes = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            nodes.push([real::<T>(i as f64) * h, real::<T>(j as f64) * h]);
        }
    }

    // Two triangles per grid square, split along the (i,j)-(i+1,j+1) diagonal.
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }

    // Counterclockwise boundary walk starting at (0,0).
    let mut boundary_nodes = Vec::with_capacity(4 * n);
    for i in 0..n {
        boundary_nodes.push(idx(i, 0));
    }
    for j in 0..n {
        boundary_nodes.push(idx(n, j));
    }
    for i in (1..=n).rev() {
        boundary_nodes.push(idx(i, n));
    }
    for j in (1..=n).rev() {
        boundary_nodes.push(idx(0, j));
    }

    let mut boundary_index = vec![None; np * np];
    for (k, &v) in boundary_nodes.iter().enumerate() {
        boundary_index[v] = Some(k);
    }
    let mut interior_nodes = Vec::new();
    let mut interior_index = vec![None; np * np];
    for v in 0..np * np {
        if boundary_index[v].is_none() {
            interior_index[v] = Some(interior_nodes.len());
            interior_nodes.push(v);
        }
    }

    let element_areas = triangles
        .iter()
        .map(|t| signed_area(&nodes, t))
        .collect::<Vec<_>>();

    let mesh = Mesh {
        n,
        nodes,
        triangles,
        boundary_nodes,
        element_areas,
        interior_nodes,
        interior_index,
        boundary_index,
    };
    mesh.validate()?;
    Ok(mesh)
}

fn signed_area<T: Real>(nodes: &[[T; 2]], t: &[usize; 3]) -> T {
    let p0 = nodes[t[0]];
    let p1 = nodes[t[1]];
    let p2 = nodes[t[2]];
    ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1])) / real(2.0)
}

impl<T: Real> Mesh<T> {
    pub fn subdivisions(&self) -> usize {
        self.n
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn nodes(&self) -> &[[T; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    pub fn element_areas(&self) -> &[T] {
        &self.element_areas
    }

    pub fn element_area(&self, t: usize) -> T {
        self.element_areas[t]
    }

    /// Position of `node` in the boundary walk, if it lies on the boundary.
    pub fn boundary_position(&self, node: usize) -> Option<usize> {
        self.boundary_index[node]
    }

    /// Position of `node` among the interior nodes, if it is interior.
    pub fn interior_position(&self, node: usize) -> Option<usize> {
        self.interior_index[node]
    }

    /// Centroid of element `t`.
    pub fn centroid(&self, t: usize) -> [T; 2] {
        let [a, b, c] = self.triangles[t];
        let third: T = T::one() / real(3.0);
        [
            (self.nodes[a][0] + self.nodes[b][0] + self.nodes[c][0]) * third,
            (self.nodes[a][1] + self.nodes[b][1] + self.nodes[c][1]) * third,
        ]
    }

    fn validate(&self) -> Result<()> {
        let mut total = T::zero();
        for (t, &a) in self.element_areas.iter().enumerate() {
            if a <= T::zero() {
                return Err(Error::InternalConsistency(format!(
                    "triangle {t} has non-positive signed area"
                )));
            }
            total += a;
        }
        if (total - T::one()).abs() > scaled_tol(1e-12) {
            return Err(Error::InternalConsistency(format!(
                "element areas sum to {} instead of 1",
                to_f64(total)
            )));
        }
        // Consecutive boundary nodes must share a grid edge of length h.
        let h = T::one() / real(self.n as f64);
        let tol = scaled_tol::<T>(1e-12);
        let m = self.boundary_nodes.len();
        for k in 0..m {
            let p = self.nodes[self.boundary_nodes[k]];
            let q = self.nodes[self.boundary_nodes[(k + 1) % m]];
            let d = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
            if (d - h).abs() > tol {
                return Err(Error::InternalConsistency(
                    "boundary walk is not a closed chain of grid edges".into(),
                ));
            }
        }
        if self.interior_nodes.len() + self.boundary_nodes.len() != self.nodes.len() {
            return Err(Error::InternalConsistency(
                "interior + boundary node counts do not partition the node set".into(),
            ));
        }
        Ok(())
    }

    /// JSON dump (nodes, triangles, boundary order) for debugging.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "nodes": self.nodes.iter().map(|p| [to_f64(p[0]), to_f64(p[1])]).collect::<Vec<_>>(),
            "triangles": self.triangles,
            "boundary_nodes": self.boundary_nodes,
        })
    }
}

/// Arclength parameter s ∈ [0,4) of every boundary node, in walk order.
///
/// s is strictly increasing, starts at 0, and maps the unit-square perimeter
/// to [0,4).
pub fn boundary_arclength<T: Real>(mesh: &Mesh<T>) -> Vec<T> {
    let h = T::one() / real(mesh.n as f64);
    (0..mesh.boundary_nodes.len())
        .map(|k| real::<T>(k as f64) * h)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn smallest_mesh_counts() {
        let mesh = build_structured_mesh::<f64>(1).unwrap();
        assert_eq!(mesh.num_nodes(), 4);
        assert_eq!(mesh.num_triangles(), 2);
        assert_eq!(mesh.boundary_nodes().len(), 4);
        let total: f64 = mesh.element_areas().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn counting_formula_n4() {
        let mesh = build_structured_mesh::<f64>(4).unwrap();
        assert_eq!(mesh.num_nodes(), 25);
        assert_eq!(mesh.num_triangles(), 32);
        assert_eq!(mesh.boundary_nodes().len(), 16);
    }

    #[test]
    fn element_areas_n2() {
        // Half grid-squares: each of the 8 elements has area 1/8.
        let mesh = build_structured_mesh::<f64>(2).unwrap();
        for &a in mesh.element_areas() {
            assert_abs_diff_eq!(a, 0.125, epsilon = 1e-15);
        }
    }

    #[test]
    fn rejects_zero_subdivisions() {
        assert!(matches!(
            build_structured_mesh::<f64>(0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn arclength_n1_corners() {
        let mesh = build_structured_mesh::<f64>(1).unwrap();
        let s = boundary_arclength(&mesh);
        assert_eq!(s, vec![0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn arclength_n2_uniform() {
        let mesh = build_structured_mesh::<f64>(2).unwrap();
        let s = boundary_arclength(&mesh);
        assert_eq!(s[..4], [0.0, 0.5, 1.0, 1.5]);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn arclength_half_perimeter_at_far_corner() {
        let mesh = build_structured_mesh::<f64>(4).unwrap();
        let s = boundary_arclength(&mesh);
        let far = mesh
            .boundary_nodes()
            .iter()
            .position(|&v| mesh.nodes()[v] == [1.0, 1.0])
            .unwrap();
        assert_abs_diff_eq!(s[far], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn orientation_and_partition() {
        for n in [1, 3, 8] {
            let mesh = build_structured_mesh::<f64>(n).unwrap();
            assert!(mesh.element_areas().iter().all(|&a| a > 0.0));
            assert_eq!(
                mesh.interior_nodes().len() + mesh.boundary_nodes().len(),
                mesh.num_nodes()
            );
            assert_eq!(mesh.interior_nodes().len(), (n - 1) * (n - 1));
        }
    }

    #[test]
    fn refinement_consistency() {
        for n in [2, 5, 16] {
            let mesh = build_structured_mesh::<f64>(n).unwrap();
            let total: f64 = mesh.element_areas().iter().sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            let s = boundary_arclength(&mesh);
            let h = 1.0 / n as f64;
            assert_abs_diff_eq!(s.last().unwrap() + h, 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn json_dump_shape() {
        let mesh = build_structured_mesh::<f64>(2).unwrap();
        let v = mesh.to_json();
        assert_eq!(v["nodes"].as_array().unwrap().len(), 9);
        assert_eq!(v["triangles"].as_array().unwrap().len(), 8);
        assert_eq!(v["boundary_nodes"].as_array().unwrap().len(), 8);
    }

    #[test]
    fn works_in_f32() {
        let mesh = build_structured_mesh::<f32>(4).unwrap();
        let total: f32 = mesh.element_areas().iter().sum();
        assert!((total - 1.0).abs() < 1e-5);
    }
}
