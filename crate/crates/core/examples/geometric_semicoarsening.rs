//! Small version of the semi-coarsening table: one row per coarsening
//! threshold, one column per stretch.

use soc_amg::bench::semi_table;

fn main() -> soc_amg::Result<()> {
    let alphas = [1.0, 3.0, 9.0, 27.0];
    let abars = [1.0, 3.0, 9.0, f64::INFINITY];
    let cells = semi_table(27, &alphas, &abars, 3)?;
    print!("abar \\ alpha");
    for a in alphas {
        print!("{a:>6}");
    }
    println!();
    for abar in abars {
        print!("{abar:>12}");
        for alpha in alphas {
            let c = cells.iter().find(|c| c.alpha == alpha && c.abar == abar).unwrap();
            print!("{:>6}", c.iterations);
        }
        println!();
    }
    Ok(())
}
