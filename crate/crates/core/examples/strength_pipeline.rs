//! Runs every strength pipeline on one stretched 2D problem and reports how
//! many edges each keeps and whether the filtered matrix stays usable.

use soc_amg::fem::assemble_spec;
use soc_amg::lumping::filter;
use soc_amg::mesh::MeshSpec;
use soc_amg::strength::{build_strength, DropConfig, Lumping, PIPELINES};

fn main() -> soc_amg::Result<()> {
    let (_, sys) = assemble_spec(&MeshSpec::tensor_2d(4.0, 40.0)?)?;
    let offdiag = sys.a.nnz() - sys.num_dofs();
    println!("{} dofs, {offdiag} off-diagonals", sys.num_dofs());
    for theta in [0.16, 0.32] {
        for label in PIPELINES {
            let cfg = DropConfig::from_label(label, theta, Lumping::Diagonal)?;
            let g = build_strength(&sys.a, Some(&sys.free_coords), &cfg)?;
            let f = filter(&sys.a, &g, Lumping::Diagonal)?;
            println!(
                "theta {theta:.2} {label:<13} strong {:>6}  symmetric {:<5}  diag<=0 rows {}",
                g.num_edges(),
                g.is_symmetric(),
                f.nonpositive_diagonal.len()
            );
        }
    }
    Ok(())
}
