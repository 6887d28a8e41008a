//! Dense binary64 matrices and vectors, componentwise absolute values and the
//! norms used by the diagnostics.
//!
//! Matrices are stored row-major. Products accumulate left to right in index
//! order so that results are reproducible bit for bit.

use std::fmt::Write as _;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extprec::Rational;

/// Default relative tolerance of the power iteration behind [`two_norm`].
pub const TWO_NORM_TOL: f64 = 1e-12;
/// Default iteration cap of the power iteration behind [`two_norm`].
pub const TWO_NORM_MAX_ITER: usize = 10_000;

/// Vector/matrix norm selector for the diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    Inf,
    Two,
}

impl std::fmt::Display for Norm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Norm::Inf => "inf",
            Norm::Two => "two",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Self {
        Vector(entries)
    }

    pub fn zeros(len: usize) -> Self {
        Vector(vec![0.0; len])
    }

    pub fn ones(len: usize) -> Self {
        Vector(vec![1.0; len])
    }

    /// The `j`-th canonical unit vector of length `len`.
    pub fn unit(len: usize, j: usize) -> Self {
        let mut v = Self::zeros(len);
        v.0[j] = 1.0;
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn abs(&self) -> Vector {
        Vector(self.0.iter().map(|v| v.abs()).collect())
    }

    /// max_j |v_j|
    pub fn inf_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn two_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm(&self, norm: Norm) -> f64 {
        match norm {
            Norm::Inf => self.inf_norm(),
            Norm::Two => self.two_norm(),
        }
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        check_len(self.len(), other.len())?;
        Ok(Vector(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        check_len(self.len(), other.len())?;
        Ok(Vector(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn scale(&self, s: f64) -> Vector {
        Vector(self.0.iter().map(|v| v * s).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!(
            "vector lengths {a} and {b}"
        )));
    }
    Ok(())
}

/// Dense row-major matrix of binary64 entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix must be nonempty, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(m: usize) -> Self {
        Self::from_fn(m, m, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from equally long rows.
    ///
    /// Panics on ragged input; meant for literals in code and tests.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        assert!(rows.iter().all(|r| r.as_ref().len() == cols), "ragged rows");
        let data = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// Componentwise absolute value |A|.
    pub fn abs(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v.abs()).collect(),
        }
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm(&self, norm: Norm) -> Result<f64> {
        match norm {
            Norm::Inf => Ok(self.inf_norm()),
            Norm::Two => two_norm(self, TWO_NORM_TOL, TWO_NORM_MAX_ITER),
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut s = 0.0;
                for k in 0..self.cols {
                    s += self[(i, k)] * other[(k, j)];
                }
                out[(i, j)] = s;
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &Vector) -> Result<Vector> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok(Vector(
            (0..self.rows)
                .map(|i| {
                    let mut s = 0.0;
                    for (a, x) in self.row(i).iter().zip(v.iter()) {
                        s += a * x;
                    }
                    s
                })
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot subtract {}x{} from {}x{}",
                other.rows, other.cols, self.rows, self.cols
            )));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot add {}x{} to {}x{}",
                other.rows, other.cols, self.rows, self.cols
            )));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Row `i` of the result is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| self[(perm[i], j)])
    }

    /// Reads the plain-text format: a `rows cols` header line followed by
    /// `rows` lines of whitespace-separated entries. Entries are decimal
    /// literals or C99-style hexadecimal floats (`-0x1.8p-3`).
    pub fn from_text(text: &str) -> Result<Matrix> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(Error::Parse(format!("bad header line {header:?}")));
        }
        let parse_dim = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad dimension {s:?}")))
        };
        let (rows, cols) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row {}", r + 1)))?;
            let before = data.len();
            for tok in line.split_whitespace() {
                data.push(parse_f64(tok)?);
            }
            if data.len() - before != cols {
                return Err(Error::Parse(format!(
                    "row {} has {} entries, expected {cols}",
                    r + 1,
                    data.len() - before
                )));
            }
        }
        if let Some(extra) = lines.next() {
            return Err(Error::Parse(format!("trailing line {extra:?}")));
        }
        Matrix::new(rows, cols, data)
    }

    /// Writes the plain-text format. With `hex` set every entry is emitted as
    /// a hexadecimal float, which round-trips bit for bit.
    pub fn to_text(&self, hex: bool) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let line: Vec<String> = self
                .row(i)
                .iter()
                .map(|&v| if hex { format_hex(v) } else { format!("{v:e}") })
                .collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn abs_matrix(a: &Matrix) -> Matrix {
    a.abs()
}

pub fn inf_norm(a: &Matrix) -> f64 {
    a.inf_norm()
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.matmul(b)
}

pub fn matvec(a: &Matrix, v: &Vector) -> Result<Vector> {
    a.matvec(v)
}

/// Largest singular value by power iteration on AᵀA.
///
/// Starts from the normalized all-ones vector and stops once the Rayleigh
/// quotient changes by less than `tol` relatively. Running out of iterations
/// yields [`Error::NonConvergence`] carrying the best estimate.
pub fn two_norm(a: &Matrix, tol: f64, max_iter: usize) -> Result<f64> {
    let n = a.cols();
    let at = a.transpose();
    let apply = |v: &Vector| -> Vector {
        // AᵀA v; dimensions are consistent by construction
        at.matvec(&a.matvec(v).unwrap()).unwrap()
    };

    let mut starts = std::iter::once(Vector::ones(n).scale(1.0 / (n as f64).sqrt()))
        .chain((0..n).map(|j| Vector::unit(n, j)));
    let (mut v, mut w) = loop {
        let Some(v) = starts.next() else {
            // every start vector is annihilated: A = 0
            return Ok(0.0);
        };
        let w = apply(&v);
        if !w.is_zero() {
            break (v, w);
        }
    };

    let mut lambda = dot(&v, &w);
    for _ in 0..max_iter {
        let nw = w.two_norm();
        if nw == 0.0 {
            return Ok(0.0);
        }
        v = w.scale(1.0 / nw);
        w = apply(&v);
        let next = dot(&v, &w);
        if (next - lambda).abs() <= tol * next.abs() {
            return Ok(next.max(0.0).sqrt());
        }
        lambda = next;
    }
    Err(Error::NonConvergence {
        estimate: lambda.max(0.0).sqrt(),
        iterations: max_iter,
    })
}

fn dot(a: &Vector, b: &Vector) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Parses a decimal literal or a hexadecimal float into a finite binary64.
pub fn parse_f64(tok: &str) -> Result<f64> {
    let body = tok.trim_start_matches(['+', '-']);
    let v = if body.starts_with("0x") || body.starts_with("0X") {
        parse_hex_f64(tok)?
    } else {
        tok.parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad number {tok:?}")))?
    };
    if !v.is_finite() {
        return Err(Error::Parse(format!("non-finite entry {tok:?}")));
    }
    Ok(v)
}

fn parse_hex_f64(tok: &str) -> Result<f64> {
    let bad = || Error::Parse(format!("bad hexadecimal float {tok:?}"));
    let (negative, rest) = match tok.as_bytes().first() {
        Some(b'-') => (true, &tok[1..]),
        Some(b'+') => (false, &tok[1..]),
        _ => (false, tok),
    };
    let rest = rest
        .strip_prefix("0x")
        .or_else(|| rest.strip_prefix("0X"))
        .ok_or_else(bad)?;
    let (mantissa, exponent) = match rest.find(['p', 'P']) {
        Some(pos) => (&rest[..pos], &rest[pos + 1..]),
        None => (rest, "0"),
    };
    let exponent: i64 = exponent.parse().map_err(|_| bad())?;
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let digits: String = [int_part, frac_part].concat();
    let mut value = num_bigint::BigInt::from(0u8);
    for c in digits.chars() {
        let d = c.to_digit(16).ok_or_else(bad)?;
        value = value * 16u8 + d;
    }
    let shift = exponent - 4 * frac_part.len() as i64;
    if shift.unsigned_abs() > 1 << 16 {
        return Err(bad());
    }
    let q = Rational::from_integer(value).mul_pow2(shift);
    let v = q.to_nearest_f64();
    Ok(if negative { -v } else { v })
}

/// Formats a binary64 as a hexadecimal float, e.g. `-0x1.8p-3`.
pub fn format_hex(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 && frac == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, e) = if exp == 0 {
        (0, -1022)
    } else {
        (1, exp - 1023)
    };
    let mut digits = format!("{frac:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let e_sign = if e >= 0 { "+" } else { "" };
    if digits.is_empty() {
        format!("{sign}0x{lead}p{e_sign}{e}")
    } else {
        format!("{sign}0x{lead}.{digits}p{e_sign}{e}")
    }
}
