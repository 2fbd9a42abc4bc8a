//! `e^{St}` for the observer matrix compared with its closed form.
//!
//! ```text
//! cargo run --example matrix_exponential
//! ```

use elrc::expm::{expm, matrix_exponential};
use nalgebra::DMatrix;

fn main() {
    let s = DMatrix::from_row_slice(2, 2, &[0.0, -1.5, 6.0, 0.0]);
    for t in [0.0, 0.1, 1.0, 10.0, -3.0] {
        let e = matrix_exponential(&s, t);
        let closed = DMatrix::identity(2, 2) * (3.0 * t).cos() + &s * ((3.0 * t).sin() / 3.0);
        println!("t = {t:>5}: |expm - closed form| = {:.1e}", (&e - closed).norm());
    }

    let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, -1.0, 0.5, 3.0, 0.0, -2.0, -1.0]);
    let round_trip = expm(&a) * expm(&(-&a));
    println!("|e^A e^-A - I| = {:.1e}", (round_trip - DMatrix::identity(3, 3)).norm());
}
