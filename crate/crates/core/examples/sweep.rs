//! A coarse stretch sweep over the 2D tensor family, written as CSV.

use soc_amg::bench::{log_spaced, run_sweep, to_csv, ExperimentConfig, Family};
use soc_amg::strength::{DropConfig, Lumping};

fn main() -> soc_amg::Result<()> {
    let mut cfg = ExperimentConfig::new(Family::Tensor2d, DropConfig::from_label("DLap/Sgn/Val", 0.16, Lumping::Distributed)?);
    cfg.gamma1 = log_spaced(0.5, 200.0, 4);
    cfg.gamma2 = cfg.gamma1.clone();
    print!("{}", to_csv(&run_sweep(&cfg)?));
    Ok(())
}
