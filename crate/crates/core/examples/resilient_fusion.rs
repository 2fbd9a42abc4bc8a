//! Sorting-based fusion with adversarial columns.
//!
//! ```text
//! cargo run --example resilient_fusion
//! ```

use elrc::protocol::avbrd_fuse;
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Five neighbors, two dimensions; the last column is Byzantine.
    let honest = [[1.0, 0.2], [1.1, 0.1], [0.9, 0.3], [1.05, 0.25]];
    let mut cols: Vec<f64> = honest.iter().flatten().copied().collect();
    cols.extend([1e6, -1e6]);
    let w = DMatrix::from_column_slice(2, 5, &cols);

    for f in 0..=2 {
        let fused = avbrd_fuse(&w, f)?;
        println!("f = {f}: fused = [{:.4}, {:.4}]", fused[0], fused[1]);
    }
    println!("honest range: dim 1 [0.9, 1.1], dim 2 [0.1, 0.3]");

    match avbrd_fuse(&DMatrix::from_column_slice(2, 2, &cols[..4]), 1) {
        Err(e) => println!("two neighbors, f = 1: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
