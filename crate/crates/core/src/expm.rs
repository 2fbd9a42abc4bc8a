//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! (degree selection after Higham, "The scaling and squaring method for the
//! matrix exponential revisited", 2005).

use nalgebra::DMatrix;

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539_398_330_063_23e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `(U, V)` for the low-degree approximants, built from even powers of `a`.
fn pade_low(a: &DMatrix<f64>, b: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let a2 = a * a;
    let mut power = DMatrix::identity(n, n);
    let mut u = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    for k in 0..b.len() / 2 {
        u += &power * b[2 * k + 1];
        v += &power * b[2 * k];
        power = &power * &a2;
    }
    (a * u, v)
}

fn pade_13(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let b = &B13;
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = a * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    (u, v)
}

/// `e^{a}` for a square matrix.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square(), "matrix exponential needs a square matrix");
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let norm = one_norm(a);
    if norm == 0.0 {
        return DMatrix::identity(n, n);
    }
    let (u, v, squarings) = if norm <= THETA_3 {
        let (u, v) = pade_low(a, &B3);
        (u, v, 0)
    } else if norm <= THETA_5 {
        let (u, v) = pade_low(a, &B5);
        (u, v, 0)
    } else if norm <= THETA_7 {
        let (u, v) = pade_low(a, &B7);
        (u, v, 0)
    } else if norm <= THETA_9 {
        let (u, v) = pade_low(a, &B9);
        (u, v, 0)
    } else {
        let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
        let scaled = a * 2f64.powi(-s);
        let (u, v) = pade_13(&scaled);
        (u, v, s)
    };
    let denom = &v - &u;
    let numer = &v + &u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .expect("Padé denominator is nonsingular within the degree bounds");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// `e^{S t}`.
pub fn matrix_exponential(s: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    expm(&(s * t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn reference_generator() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, -1.5, 6.0, 0.0])
    }

    /// `S² = −9 I` gives `e^{St} = cos(3t) I + sin(3t)/3 · S`.
    fn rotation_closed_form(t: f64) -> DMatrix<f64> {
        DMatrix::identity(2, 2) * (3.0 * t).cos() + reference_generator() * ((3.0 * t).sin() / 3.0)
    }

    fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    /// Plain Taylor series, adequate for small-norm matrices only.
    fn taylor(a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        let mut term = DMatrix::<f64>::identity(n, n);
        let mut sum = term.clone();
        for k in 1..40 {
            term = &term * a / k as f64;
            sum += &term;
        }
        sum
    }

    #[test]
    fn zero_time_is_identity() {
        assert_eq!(matrix_exponential(&reference_generator(), 0.0), DMatrix::identity(2, 2));
    }

    #[test]
    fn reference_generator_at_pi_over_six() {
        let e = matrix_exponential(&reference_generator(), PI / 6.0);
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, -0.5, 2.0, 0.0]);
        assert!((&e - &expected).norm() < 1e-12 * expected.norm(), "{e}");
    }

    #[test]
    fn rotation_generator_over_long_horizons() {
        for k in 0..=200 {
            let t = -10.0 + 0.1 * k as f64;
            let e = matrix_exponential(&reference_generator(), t);
            assert!(rel_err(&e, &rotation_closed_form(t)) < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn nilpotent_closed_form() {
        let s = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        for t in [-3.0, 0.5, 7.25, 120.0] {
            let e = matrix_exponential(&s, t);
            let expected = DMatrix::from_row_slice(2, 2, &[1.0, t, 0.0, 1.0]);
            assert!(rel_err(&e, &expected) < 1e-12);
        }
    }

    #[test]
    fn diagonal_matrices() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.3, -2.0, 4.5]));
        let e = expm(&d);
        let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.3f64.exp(), (-2.0f64).exp(), 4.5f64.exp()]));
        assert!(rel_err(&e, &expected) < 1e-12);
    }

    #[test]
    fn every_pade_degree_against_taylor() {
        let base = DMatrix::from_row_slice(3, 3, &[0.1, -0.4, 0.3, 0.25, 0.05, -0.2, -0.3, 0.15, 0.1]);
        let norm = one_norm(&base);
        for target in [0.01, 0.2, 0.9, 2.0, 3.0] {
            let a = &base * (target / norm);
            assert!(rel_err(&expm(&a), &taylor(&a)) < 1e-13, "norm {target}");
        }
    }

    #[test]
    fn inverse_pair() {
        let s = reference_generator();
        for t in [0.37, 4.2, 9.99] {
            let prod = matrix_exponential(&s, t) * matrix_exponential(&s, -t);
            assert!((prod - DMatrix::identity(2, 2)).norm() < 1e-12);
        }
    }
}
