//! Six points on a line where the middle two sit close together. The
//! symmetric SA measure always aggregates the close pair; the signed
//! measure lets the outcome depend on the scan order.

use soc_amg::aggregation::aggregate_with_order;
use soc_amg::strength::{build_strength, DropConfig, Lumping};
use soc_amg::CsrMatrix;

fn main() -> soc_amg::Result<()> {
    let x = [0.0, 1.0, 2.0, 2.1, 3.1, 4.1];
    let coords: Vec<[f64; 3]> = x.iter().map(|&v| [v, 0.0, 0.0]).collect();
    let mut t = Vec::new();
    for i in 0..6 {
        t.push((i, i, 2.0));
        if i > 0 {
            t.push((i, i - 1, -1.0));
            t.push((i - 1, i, -1.0));
        }
    }
    let a = CsrMatrix::from_triplets(6, 6, &t)?;
    for label in ["DLap/SA/Val", "DLap/Sgn/Val"] {
        let g = build_strength(&a, Some(&coords), &DropConfig::from_label(label, 0.5, Lumping::Diagonal)?)?;
        println!("{label}");
        for i in 0..6 {
            println!("  {i} -> {:?}", g.row(i));
        }
        for order in [[1, 4, 0, 2, 3, 5], [2, 0, 1, 3, 4, 5]] {
            println!("  order {order:?}: aggregates {:?}", aggregate_with_order(&g, &order).assignment());
        }
    }
    Ok(())
}
