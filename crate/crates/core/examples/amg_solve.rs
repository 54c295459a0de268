//! Builds an AMG hierarchy for a stretched 2D problem and solves it with CG.

use soc_amg::fem::assemble_spec;
use soc_amg::hierarchy::{build_hierarchy, Smoother, StopLimits};
use soc_amg::krylov::{pcg, SolveOptions};
use soc_amg::mesh::MeshSpec;
use soc_amg::strength::{DropConfig, Lumping};

fn main() -> soc_amg::Result<()> {
    let (_, sys) = assemble_spec(&MeshSpec::tensor_2d(10.0, 100.0)?)?;
    let drop = DropConfig::from_label("DLap/Sgn/Val", 0.16, Lumping::Distributed)?;
    let h = build_hierarchy(&sys.a, Some(&sys.free_coords), &drop, Smoother::default(), &StopLimits::default())?;
    print!("{}", h.summary_text());
    let mut x = sys.u0.clone();
    let report = pcg(&sys.a, &sys.f, &h, &mut x, &SolveOptions::cg())?;
    println!("{}\n{}", soc_amg::krylov::SolveReport::CSV_HEADER, report.csv_row());
    let err = x.iter().zip(&sys.exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("max nodal error {err:.3e}");
    Ok(())
}
