use eit_lab::fem::Conductivity;
use eit_lab::landweber::{landweber_run, LandweberConfig};
use eit_lab::mesh::build_structured_mesh;
use eit_lab::operator::{build_boundary_basis, BasisFamily};
use eit_lab::scenarios::inclusion;

fn main() {
    let mesh = build_structured_mesh::<f64>(8).unwrap();
    let basis = build_boundary_basis(&mesh, 8, BasisFamily::Trigonometric).unwrap();
    let dagger = Conductivity::auto(
        inclusion(&mesh, [0.5, 0.5], 0.25, 0.05).iter().map(|&c| 1.0 + c).collect(),
    ).unwrap();
    let gamma0 = Conductivity::uniform(mesh.num_triangles(), 1.0).unwrap();
    let cfg = LandweberConfig::<f64> { max_iter: 400_000, ..Default::default() };
    let tr = landweber_run(&mesh, &basis, &gamma0, &dagger, &cfg).unwrap();
    let r0 = tr.residual_norms[0];
    for m in [50_000usize, 100_000, 200_000, 300_000, 400_000] {
        if m < tr.residual_norms.len() {
            println!("r[{m}] = {:.3e}", tr.residual_norms[m] / r0);
        }
    }
    println!("stop {} ({:?}) rel_end {:.3e}", tr.stop_index, tr.stop_reason, tr.residual_norms.last().unwrap() / r0);
}
