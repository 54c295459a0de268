//! Writes an assembled matrix in Matrix Market format and reads it back.

use soc_amg::fem::assemble_spec;
use soc_amg::mesh::MeshSpec;
use soc_amg::sparse::market::{read_matrix_market, write_matrix_market};

fn main() -> soc_amg::Result<()> {
    let (_, sys) = assemble_spec(&MeshSpec::uniaxial(2, 3, 1.0, 2.0)?)?;
    let mut buf = Vec::new();
    write_matrix_market(&sys.a, &mut buf)?;
    print!("{}", String::from_utf8_lossy(&buf));
    let back = read_matrix_market(&buf[..])?;
    println!("% round trip exact: {}", back == sys.a);
    Ok(())
}
