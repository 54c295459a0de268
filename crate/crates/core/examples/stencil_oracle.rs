//! Prints the assembled interior stencil of the stretched trilinear
//! Laplacian next to the SA and signed strength values per neighbor class.

use soc_amg::fem::{assemble_spec, criterion_curves};
use soc_amg::mesh::MeshSpec;
use soc_amg::strength::{Scaling, SocKind};

fn main() -> soc_amg::Result<()> {
    for alpha in [1.0, 3.0, 9.0] {
        let (_, sys) = assemble_spec(&MeshSpec::uniaxial(3, 4, 1.0, alpha)?)?;
        let st = sys.interior_stencil(sys.center_vertex())?;
        println!("alpha = {alpha}");
        for (off, v) in st.iter().filter(|(o, _)| o.iter().all(|&x| x >= 0)) {
            println!("  {off:?} {v:+.6}");
        }
        for (name, scaling) in [("SA", Scaling::SymmetricSa), ("Sgn", Scaling::SignedClassical)] {
            let pts = criterion_curves(3, SocKind::SystemMatrix, scaling, &[alpha])?;
            let vals: Vec<String> = pts.iter().map(|p| format!("{}={:.4}", p.class.name(), p.value)).collect();
            println!("  {name}: {}", vals.join(" "));
        }
    }
    Ok(())
}
