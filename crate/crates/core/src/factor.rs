//! LU factorization with selectable pivoting, Cholesky, triangular
//! substitution and explicit inversion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PivotStrategy {
    NoPivot,
    /// Largest magnitude in the active column; ties go to the lowest row.
    Partial,
}

/// P·A = L·U with unit lower triangular `l` and upper triangular `u`.
///
/// `perm[i]` is the row of A that ends up in row `i` of P·A.
#[derive(Debug, Clone, PartialEq)]
pub struct LUFactors {
    pub perm: Vec<usize>,
    pub l: Matrix,
    pub u: Matrix,
}

impl LUFactors {
    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn is_identity_perm(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// P·v
    pub fn permute(&self, v: &Vector) -> Vector {
        Vector::new(self.perm.iter().map(|&p| v[p]).collect())
    }

    /// Pᵀ·M, i.e. undoes the row permutation of a product like L·U.
    pub fn unpermute_rows(&self, m: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(m.rows(), m.cols());
        for (i, &p) in self.perm.iter().enumerate() {
            for j in 0..m.cols() {
                out[(p, j)] = m[(i, j)];
            }
        }
        out
    }
}

/// A = L·Lᵀ with lower triangular `l` carrying a positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    pub l: Matrix,
}

fn require_square(a: &Matrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    Ok(())
}

/// Gaussian elimination in the natural order (right-looking, no blocking).
///
/// A zero pivot without pivoting is [`Error::ZeroPivot`], except in the last
/// column where it means the matrix is singular. With partial pivoting every
/// zero pivot is [`Error::SingularMatrix`].
pub fn lu_factor(a: &Matrix, strategy: PivotStrategy) -> Result<LUFactors> {
    require_square(a)?;
    let m = a.rows();
    let mut w = a.clone();
    let mut perm: Vec<usize> = (0..m).collect();

    for k in 0..m {
        if strategy == PivotStrategy::Partial {
            let mut p = k;
            for i in k + 1..m {
                if w[(i, k)].abs() > w[(p, k)].abs() {
                    p = i;
                }
            }
            if p != k {
                for j in 0..m {
                    let t = w[(k, j)];
                    w[(k, j)] = w[(p, j)];
                    w[(p, j)] = t;
                }
                perm.swap(k, p);
            }
        }
        let pivot = w[(k, k)];
        if pivot == 0.0 {
            return Err(if strategy == PivotStrategy::Partial || k == m - 1 {
                Error::SingularMatrix { col: k }
            } else {
                Error::ZeroPivot { col: k }
            });
        }
        for i in k + 1..m {
            let mult = w[(i, k)] / pivot;
            w[(i, k)] = mult;
            for j in k + 1..m {
                w[(i, j)] -= mult * w[(k, j)];
            }
        }
    }

    let l = Matrix::from_fn(m, m, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => w[(i, j)],
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Less => 0.0,
    });
    let u = Matrix::from_fn(m, m, |i, j| if i <= j { w[(i, j)] } else { 0.0 });
    Ok(LUFactors { perm, l, u })
}

/// Solves L·y = b for lower triangular L, top row first.
pub fn forward_sub(l: &Matrix, b: &Vector) -> Result<Vector> {
    require_square(l)?;
    check_rhs(l, b)?;
    let m = l.rows();
    let mut y = Vector::zeros(m);
    for i in 0..m {
        let d = l[(i, i)];
        if d == 0.0 {
            return Err(Error::ZeroDiagonal { index: i });
        }
        let mut s = b[i];
        for j in 0..i {
            s -= l[(i, j)] * y[j];
        }
        y[i] = s / d;
    }
    Ok(y)
}

/// Solves U·x = y for upper triangular U, bottom row first. Each component
/// has the already known unknowns removed in the order they were found
/// (last column first), which matches column-oriented substitution.
pub fn back_sub(u: &Matrix, y: &Vector) -> Result<Vector> {
    require_square(u)?;
    check_rhs(u, y)?;
    let m = u.rows();
    let mut x = Vector::zeros(m);
    for i in (0..m).rev() {
        let d = u[(i, i)];
        if d == 0.0 {
            return Err(Error::ZeroDiagonal { index: i });
        }
        let mut s = y[i];
        for j in (i + 1..m).rev() {
            s -= u[(i, j)] * x[j];
        }
        x[i] = s / d;
    }
    Ok(x)
}

fn check_rhs(a: &Matrix, b: &Vector) -> Result<()> {
    if a.rows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} system with right-hand side of length {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    Ok(())
}

/// x = U⁻¹·L⁻¹·P·b
pub fn lu_solve(f: &LUFactors, b: &Vector) -> Result<Vector> {
    if b.len() != f.dim() {
        return Err(Error::DimensionMismatch(format!(
            "factors of order {} with right-hand side of length {}",
            f.dim(),
            b.len()
        )));
    }
    let y = forward_sub(&f.l, &f.permute(b))?;
    back_sub(&f.u, &y)
}

fn singular_from_zero_diagonal(e: Error) -> Error {
    match e {
        Error::ZeroPivot { col } => Error::SingularMatrix { col },
        Error::ZeroDiagonal { index } => Error::SingularMatrix { col: index },
        other => other,
    }
}

/// Explicit inverse, column j solving A·x = e_j with the LU factors.
pub fn invert(a: &Matrix, strategy: PivotStrategy) -> Result<Matrix> {
    let f = lu_factor(a, strategy).map_err(singular_from_zero_diagonal)?;
    inverse_from_factors(&f)
}

pub fn inverse_from_factors(f: &LUFactors) -> Result<Matrix> {
    let m = f.dim();
    let mut inv = Matrix::zeros(m, m);
    for j in 0..m {
        let col = lu_solve(f, &Vector::unit(m, j)).map_err(singular_from_zero_diagonal)?;
        for i in 0..m {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv)
}

/// Inverse of a lower or upper triangular matrix by substitution against
/// the identity columns; the result keeps the triangular pattern.
pub fn triangular_inverse(t: &Matrix) -> Result<Matrix> {
    require_square(t)?;
    let m = t.rows();
    let lower = is_lower_triangular(t);
    if !lower && !is_upper_triangular(t) {
        return Err(Error::DimensionMismatch("matrix is not triangular".into()));
    }
    let mut inv = Matrix::zeros(m, m);
    for j in 0..m {
        let e = Vector::unit(m, j);
        let col = if lower {
            forward_sub(t, &e)
        } else {
            back_sub(t, &e)
        }
        .map_err(singular_from_zero_diagonal)?;
        for i in 0..m {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv)
}

pub fn is_lower_triangular(t: &Matrix) -> bool {
    t.is_square() && (0..t.rows()).all(|i| (i + 1..t.cols()).all(|j| t[(i, j)] == 0.0))
}

pub fn is_upper_triangular(t: &Matrix) -> bool {
    t.is_square() && (0..t.rows()).all(|i| (0..i).all(|j| t[(i, j)] == 0.0))
}

/// x̃ = fl(A⁻¹)·b with the inverse from partially pivoted elimination.
pub fn naive_solve(a: &Matrix, b: &Vector) -> Result<Vector> {
    let inv = invert(a, PivotStrategy::Partial)?;
    inv.matvec(b)
}

pub fn cholesky(a: &Matrix) -> Result<CholeskyFactor> {
    require_square(a)?;
    if !a.is_symmetric() {
        return Err(Error::DimensionMismatch(
            "Cholesky factorization needs a symmetric matrix".into(),
        ));
    }
    let m = a.rows();
    let mut l = Matrix::zeros(m, m);
    for j in 0..m {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d.is_nan() || d <= 0.0 {
            return Err(Error::NotPositiveDefinite { index: j });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..m {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(CholeskyFactor { l })
}

pub fn cholesky_solve(c: &CholeskyFactor, b: &Vector) -> Result<Vector> {
    let y = forward_sub(&c.l, b)?;
    back_sub(&c.l.transpose(), &y)
}
