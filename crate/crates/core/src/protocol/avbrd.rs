use nalgebra::{DMatrix, DVector};

use crate::error::ProtocolError;

/// Auxiliary-variable-based resilient decision.
///
/// `columns` holds one neighbor auxiliary variable per column. Each row is
/// sorted independently and the result is the mean of the `(f+1)`-th and
/// `(m−f)`-th smallest entries of that row.
pub fn avbrd_fuse(columns: &DMatrix<f64>, f: usize) -> Result<DVector<f64>, ProtocolError> {
    let m = columns.ncols();
    let needed = 2 * f + 1;
    if m < needed {
        return Err(ProtocolError::InsufficientNeighbors { got: m, needed, f });
    }
    let mut row = Vec::with_capacity(m);
    Ok(DVector::from_iterator(
        columns.nrows(),
        columns.row_iter().map(|r| {
            row.clear();
            row.extend(r.iter().copied());
            row.sort_by(f64::total_cmp);
            0.5 * (row[f] + row[m - 1 - f])
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(values: &[f64], f: usize) -> f64 {
        avbrd_fuse(&DMatrix::from_row_slice(1, values.len(), values), f).unwrap()[0]
    }

    #[test]
    fn scalar_examples() {
        assert_eq!(scalar(&[1.0, 2.0, 3.0, 4.0, 5.0], 1), 3.0);
        assert_eq!(scalar(&[2.0, 7.0, 4.0], 0), 4.5);
    }

    #[test]
    fn per_dimension_median() {
        let cols = DMatrix::from_columns(&[
            DVector::from_vec(vec![1.0, 4.0]),
            DVector::from_vec(vec![3.0, 2.0]),
            DVector::from_vec(vec![2.0, 9.0]),
        ]);
        assert_eq!(avbrd_fuse(&cols, 1).unwrap(), DVector::from_vec(vec![2.0, 4.0]));
    }

    #[test]
    fn too_few_columns() {
        let cols = DMatrix::<f64>::zeros(2, 2);
        assert_eq!(
            avbrd_fuse(&cols, 1),
            Err(ProtocolError::InsufficientNeighbors { got: 2, needed: 3, f: 1 })
        );
        assert!(avbrd_fuse(&DMatrix::<f64>::zeros(2, 0), 0).is_err());
    }
}
