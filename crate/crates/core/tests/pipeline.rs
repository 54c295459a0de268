use soc_amg::bench::{self, cost_metric, run_point, run_sweep, semi_table, ExperimentConfig, Family, Solver};
use soc_amg::fem::assemble_spec;
use soc_amg::geometric::{geo_solve, GeoConfig};
use soc_amg::hierarchy::{build_hierarchy, Smoother, StopLimits, StopReason};
use soc_amg::krylov::{gmres, pcg, SolveOptions};
use soc_amg::mesh::MeshSpec;
use soc_amg::sparse::signed_dominant_eig;
use soc_amg::strength::{DropConfig, Lumping};
use soc_amg::{CsrMatrix, Error};

fn small_sweep(drop: DropConfig) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Family::Tensor2d, drop);
    cfg.gamma1 = vec![0.5, 20.0];
    cfg.gamma2 = vec![0.5, 20.0, 200.0];
    cfg
}

#[test]
fn isotropic_point_converges_cheaply() {
    let cfg = ExperimentConfig::new(Family::Tensor2d, bench::default_drop());
    let row = run_point(&cfg, 1.0, 1.0);
    assert_eq!(row.status, "ok");
    assert!(row.cost.unwrap() < 60.0, "{row:?}");
}

#[test]
fn sweep_csv_is_deterministic() {
    let cfg = small_sweep(bench::default_drop());
    let a = bench::to_csv(&run_sweep(&cfg).unwrap());
    let b = bench::to_csv(&run_sweep(&cfg).unwrap());
    assert_eq!(a, b);
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], bench::CSV_HEADER);
    // pairs with γ₂ ≥ γ₁ only: (0.5, *) x3 and (20, 20), (20, 200)
    assert_eq!(lines.len(), 1 + 5);
    assert!(lines[1].starts_with("tensor2d,0.500000,0.500000,DLap,Sgn,Val,0.16,diagonal,"));
}

#[test]
fn broken_config_fails_before_running() {
    let mut cfg = small_sweep(bench::default_drop());
    cfg.drop.classifier = soc_amg::strength::Classifier::CutDrop;
    assert!(matches!(run_sweep(&cfg), Err(Error::InvalidConfig(_))));
}

#[test]
fn zero_diagonal_failure_is_recorded_not_raised() {
    // SA at θ = 0.16 drops every off-diagonal of the isotropic 2D stencil,
    // so diagonal lumping leaves zero diagonals
    let drop = DropConfig::from_label("A/SA/Val", 0.16, Lumping::Diagonal).unwrap();
    let cfg = ExperimentConfig::new(Family::Tensor2d, drop);
    let row = run_point(&cfg, 1.0, 1.0);
    assert!(row.status.starts_with("error: zero diagonal"), "{}", row.status);
    assert_eq!(row.cost, None);
}

#[test]
fn gmres_and_cg_agree_on_an_amg_solve() {
    let (_, sys) = assemble_spec(&MeshSpec::tensor_2d(3.0, 30.0).unwrap()).unwrap();
    let drop = DropConfig::from_label("DLap/SA/Gap", 0.32, Lumping::Distributed).unwrap();
    let h = build_hierarchy(&sys.a, Some(&sys.free_coords), &drop, Smoother::default(), &StopLimits::default()).unwrap();
    let mut x_cg = sys.u0.clone();
    let r_cg = pcg(&sys.a, &sys.f, &h, &mut x_cg, &SolveOptions::cg()).unwrap();
    let mut x_gm = sys.u0.clone();
    let r_gm = gmres(&sys.a, &sys.f, &h, &mut x_gm, &SolveOptions::gmres()).unwrap();
    assert!(r_cg.converged && r_gm.converged);
    assert!(r_gm.iterations <= r_cg.iterations);
    let err = x_cg.iter().zip(&sys.exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-6, "{err}");
}

#[test]
fn jacobi_smoother_also_works() {
    let mut cfg = small_sweep(bench::default_drop());
    cfg.smoother = Smoother::Jacobi { omega: 0.6 };
    cfg.solver = Solver::Gmres;
    let rows = run_sweep(&cfg).unwrap();
    assert!(rows.iter().all(|r| r.converged()), "{rows:?}");
}

#[test]
fn hierarchy_respects_the_coarse_size_rule() {
    let (_, sys) = assemble_spec(&MeshSpec::tensor_2d(50.0, 50.0).unwrap()).unwrap();
    let h = build_hierarchy(
        &sys.a,
        Some(&sys.free_coords),
        &bench::default_drop(),
        Smoother::default(),
        &StopLimits::default(),
    )
    .unwrap();
    assert_eq!(h.stop_reason, StopReason::SmallEnough);
    let last = h.levels.last().unwrap().a.nrows();
    assert!(last < 1000);
    assert!(h.levels[h.num_levels() - 2].a.nrows() >= 1000);
    for w in h.levels.windows(2) {
        assert!(w[1].a.is_symmetric(1e-10));
    }
}

#[test]
fn power_iteration_on_1d_poisson() {
    let n = 32;
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 2.0));
        if i > 0 {
            t.push((i, i - 1, -1.0));
            t.push((i - 1, i, -1.0));
        }
    }
    let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
    let rho = signed_dominant_eig(&a, 15, 42).unwrap();
    let exact = 1.0 - (32.0 * std::f64::consts::PI / 33.0).cos();
    assert!((rho - exact).abs() / exact < 0.05, "{rho} vs {exact}");
}

#[test]
fn small_geometric_table_has_the_expected_shape() {
    let t = semi_table(27, &[1.0, 9.0], &[1.0, 3.0, f64::INFINITY], 3).unwrap();
    assert_eq!(t.len(), 6);
    // α = 1: every threshold gives full coarsening
    assert!(t[1].same_as_previous && t[2].same_as_previous);
    assert_eq!(t[0].iterations, t[2].iterations);
    // α = 9: semi-coarsening beats full coarsening
    assert!(t[3].iterations < t[5].iterations);
    assert!(t.iter().all(|c| c.converged));
}

#[test]
fn geo_solve_reports_dofs() {
    let r = geo_solve(&GeoConfig {
        cells: 9,
        levels: 2,
        ..GeoConfig::table(3.0, 3.0)
    })
    .unwrap();
    assert_eq!(r.dofs, 10 * 8 * 8);
    assert!(r.report.converged);
    assert_eq!(cost_metric(&r.report), Some(r.report.iterations as f64 * r.report.operator_complexity));
}
