//! Same hierarchy, used as a preconditioner for restarted GMRES, against
//! plain Jacobi.

use soc_amg::fem::assemble_spec;
use soc_amg::hierarchy::{build_hierarchy, Smoother, StopLimits};
use soc_amg::krylov::{gmres, JacobiPreconditioner, SolveOptions};
use soc_amg::mesh::MeshSpec;
use soc_amg::strength::{DropConfig, Lumping};

fn main() -> soc_amg::Result<()> {
    let (_, sys) = assemble_spec(&MeshSpec::tensor_2d(3.0, 30.0)?)?;
    let drop = DropConfig::from_label("DLap/SA/Gap", 0.32, Lumping::Distributed)?;
    let h = build_hierarchy(&sys.a, Some(&sys.free_coords), &drop, Smoother::default(), &StopLimits::default())?;
    let mut x = sys.u0.clone();
    let amg = gmres(&sys.a, &sys.f, &h, &mut x, &SolveOptions::gmres())?;
    println!("AMG-GMRES     {} iterations, residual {:.2e}", amg.iterations, amg.final_relative_residual());
    let jac = JacobiPreconditioner::new(&sys.a)?;
    let mut x = sys.u0.clone();
    let opts = SolveOptions { max_iter: 2000, ..SolveOptions::gmres() };
    let plain = gmres(&sys.a, &sys.f, &jac, &mut x, &opts)?;
    println!("Jacobi-GMRES  {} iterations, converged {}", plain.iterations, plain.converged);
    Ok(())
}
