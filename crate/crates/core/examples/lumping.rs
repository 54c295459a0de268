//! Drops the in-plane and edge couplings of an interior row and compares
//! diagonal lumping with distributed lumping.

use soc_amg::fem::assemble_spec;
use soc_amg::lumping::{filter, filter_distributed_lump, verify_corollary};
use soc_amg::mesh::MeshSpec;
use soc_amg::strength::{Lumping, StrengthGraph};

fn main() -> soc_amg::Result<()> {
    for alpha in [1.0, 1.05, 1.2, 1.4, 3.0] {
        let (_, sys) = assemble_spec(&MeshSpec::uniaxial(3, 4, 1.0, alpha)?)?;
        let c = sys.center_vertex();
        // keep only the six face neighbors of the center row
        let st = sys.interior_stencil(c)?;
        let faces: Vec<usize> = sys.a.row(c).0.iter()
            .zip(st.keys())
            .filter(|(_, o)| o.iter().map(|x| x.abs()).sum::<i32>() == 1)
            .map(|(&j, _)| j)
            .collect();
        let rows = (0..sys.num_dofs())
            .map(|i| if i == c { faces.clone() } else { sys.a.row(i).0.iter().copied().filter(|&j| j != i).collect() })
            .collect();
        let g = StrengthGraph::from_rows(rows);
        let diag = filter(&sys.a, &g, Lumping::Diagonal)?;
        let dist = filter_distributed_lump(&sys.a, &g)?;
        let rep = verify_corollary(&sys.a, &dist);
        println!(
            "alpha {alpha:<5} A_cc {:.4}  diagonal lumping {:+.2e}  distributed {:.4}  corollary holds {}",
            sys.a.get(c, c).unwrap(),
            diag.a.get(c, c).unwrap(),
            dist.a.get(c, c).unwrap(),
            rep.holds(1e-12)
        );
    }
    Ok(())
}
