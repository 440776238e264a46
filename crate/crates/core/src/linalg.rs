//! Dense solvers for the small systems assembled by the Patankar-type
//! schemes: LU with partial pivoting, and a subtraction-free elimination for
//! Z-matrices with known column sums.

use crate::error::{Error, Result};

/// Relative pivot threshold with respect to the original column scale.
const PIVOT_TOL: f64 = 1e-14;

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from rows; all rows must have length `rows.len()`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::Dimension { expected: n, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    /// Sum of each column.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for i in 0..self.n {
            for (sj, a) in s.iter_mut().zip(self.row(i)) {
                *sj += a;
            }
        }
        s
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
///
/// A pivot whose magnitude falls below `1e-14` times the largest entry of
/// its original column is reported as [`Error::Singular`]. Patankar
/// matrices are column-dominant and their columns can differ in scale by
/// hundreds of orders of magnitude, so rows are no usable reference.
pub fn lu_solve(a: &SquareMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::Dimension { expected: n, found: b.len() });
    }
    if !a.is_finite() || b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite entry in linear system".into()));
    }
    let mut lu = a.data.clone();
    let mut x = b.to_vec();
    let scale: Vec<f64> = (0..n).map(|j| (0..n).fold(0.0_f64, |m, i| m.max(a.data[i * n + j].abs()))).collect();

    for col in 0..n {
        let (piv_row, piv_abs) =
            (col..n)
                .map(|r| (r, lu[r * n + col].abs()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_abs <= PIVOT_TOL * scale[col] || piv_abs == 0.0 {
            return Err(Error::Singular { column: col, pivot: lu[piv_row * n + col] });
        }
        if piv_row != col {
            for j in 0..n {
                lu.swap(col * n + j, piv_row * n + j);
            }
            x.swap(col, piv_row);
        }
        let pivot = lu[col * n + col];
        for r in col + 1..n {
            let factor = lu[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            lu[r * n + col] = 0.0;
            for j in col + 1..n {
                lu[r * n + j] -= factor * lu[col * n + j];
            }
            x[r] -= factor * x[col];
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= lu[i * n + j] * x[j];
        }
        x[i] = acc / lu[i * n + i];
    }
    Ok(x)
}

/// Solves `A x = b` for a Z-matrix (off-diagonal entries `<= 0`) whose
/// column sums `excess` are non-negative and supplied separately.
///
/// The diagonal of `a` is only read by the fallback. Every pivot is rebuilt as the current
/// column excess plus the magnitudes of the remaining off-diagonal entries,
/// which makes the elimination free of subtractions: pivots stay positive
/// however badly the columns are scaled, and a non-negative `b` gives a
/// non-negative `x`. Falls back to [`lu_solve`] when the sign structure does
/// not hold.
pub fn zmatrix_solve(a: &SquareMatrix, excess: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = a.dim();
    if b.len() != n || excess.len() != n {
        return Err(Error::Dimension { expected: n, found: if b.len() != n { b.len() } else { excess.len() } });
    }
    if !a.is_finite() || b.iter().chain(excess).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite entry in linear system".into()));
    }
    let z_structure =
        excess.iter().all(|&e| e >= 0.0) && (0..n).all(|i| (0..n).all(|j| i == j || a.data[i * n + j] <= 0.0));
    if !z_structure {
        return lu_solve(a, b);
    }
    let mut lu = a.data.clone();
    let mut e = excess.to_vec();
    let mut x = b.to_vec();
    for j in 0..n {
        // e[j] is the sum of column j over rows j.. of the reduced matrix
        let off: f64 = (j + 1..n).map(|i| -lu[i * n + j]).sum();
        let pivot = e[j] + off;
        if !(pivot > 0.0) {
            return Err(Error::Singular { column: j, pivot });
        }
        lu[j * n + j] = pivot;
        for k in j + 1..n {
            e[k] += -lu[j * n + k] * e[j] / pivot;
        }
        for r in j + 1..n {
            let l = lu[r * n + j] / pivot;
            if l == 0.0 {
                continue;
            }
            for c in (j + 1..n).filter(|&c| c != r) {
                lu[r * n + c] -= l * lu[j * n + c];
            }
            x[r] -= l * x[j];
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= lu[i * n + j] * x[j];
        }
        x[i] = acc / lu[i * n + i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let x = lu_solve(&SquareMatrix::identity(2), &[3.0, 7.0]).unwrap();
        assert_eq!(x, vec![3.0, 7.0]);
    }

    #[test]
    fn lower_triangular_update_system() {
        let a = SquareMatrix::from_rows(&[vec![4.0, 0.0], vec![-3.0, 1.0]]).unwrap();
        let x = lu_solve(&a, &[1.0, 1.0]).unwrap();
        assert!((x[0] - 0.25).abs() < 1e-15);
        assert!((x[1] - 1.75).abs() < 1e-15);
    }

    #[test]
    fn rank_deficient_is_singular() {
        let a = SquareMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(lu_solve(&a, &[1.0, 2.0]), Err(Error::Singular { .. })));
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = SquareMatrix::from_rows(&[vec![0.0, 2.0], vec![3.0, 1.0]]).unwrap();
        let x = lu_solve(&a, &[4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let a = SquareMatrix::identity(3);
        assert!(matches!(lu_solve(&a, &[1.0]), Err(Error::Dimension { .. })));
    }

    /// `I + L` with `L` the generator of exchanges `rate * (e_to - e_from)`.
    fn exchange_matrix(n: usize, flows: &[(usize, usize, f64)]) -> SquareMatrix {
        let mut m = SquareMatrix::identity(n);
        for &(from, to, r) in flows {
            m[(to, from)] -= r;
            m[(from, from)] += r;
        }
        m
    }

    #[test]
    fn zmatrix_matches_lu_on_mild_system() {
        let m = exchange_matrix(3, &[(0, 1, 0.5), (1, 2, 2.0), (2, 0, 0.3), (0, 2, 1.0)]);
        let b = [1.0, 2.0, 3.0];
        let x = zmatrix_solve(&m, &[1.0; 3], &b).unwrap();
        let y = lu_solve(&m, &b).unwrap();
        for (a, c) in x.iter().zip(&y) {
            assert!((a - c).abs() < 1e-14, "{x:?} {y:?}");
        }
    }

    #[test]
    fn zmatrix_keeps_sign_and_sum_under_extreme_scaling() {
        let m = exchange_matrix(4, &[(0, 1, 1e18), (1, 2, 3e9), (2, 3, 1e-6), (3, 0, 7e12), (2, 0, 1e15)]);
        let b = [1e-3, 2.0, 5e-9, 1.0];
        let x = zmatrix_solve(&m, &[1.0; 4], &b).unwrap();
        assert!(x.iter().all(|&v| v > 0.0), "{x:?}");
        let (sx, sb): (f64, f64) = (x.iter().sum(), b.iter().sum());
        assert!((sx - sb).abs() <= 1e-14 * sb, "{sx} vs {sb}");
        let r = m.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() <= 1e-12 * m.norm_inf() * sx, "{r:?}");
        }
    }

    #[test]
    fn zmatrix_falls_back_without_sign_structure() {
        let a = SquareMatrix::from_rows(&[vec![0.0, 2.0], vec![3.0, 1.0]]).unwrap();
        let x = zmatrix_solve(&a, &[3.0, 3.0], &[4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zmatrix_zero_column_is_singular() {
        let a = SquareMatrix::zeros(2);
        assert!(matches!(zmatrix_solve(&a, &[0.0, 0.0], &[1.0, 1.0]), Err(Error::Singular { .. })));
    }
}
