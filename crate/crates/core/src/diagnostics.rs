//! A posteriori backward errors and the a priori model quantities and bounds
//! for naive inversion, Gaussian elimination, Cholesky and one refinement
//! step.
//!
//! Normwise quantities take the norm as a parameter. The componentwise
//! quantities (ω, σ and the ω-bounds) are built from max/min over components
//! and always use ‖·‖∞ internally.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extprec::dd_residual;
use crate::factor::{
    invert, is_lower_triangular, is_upper_triangular, triangular_inverse, LUFactors, PivotStrategy,
};
use crate::matrix::{Matrix, Norm, Vector};

/// u = 2⁻⁵³ for binary64 with rounding to nearest.
pub const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;
/// u* = u + u²/2, the constant of the first-order factor perturbation bound.
pub const U_STAR: f64 = UNIT_ROUNDOFF + UNIT_ROUNDOFF * UNIT_ROUNDOFF / 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMode {
    /// Plain binary64 evaluation of b − A·x̃.
    Working,
    /// Double-double accumulation, rounded once.
    #[default]
    DoubleDouble,
}

impl std::fmt::Display for ResidualMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ResidualMode::Working => "working",
            ResidualMode::DoubleDouble => "double_double",
        })
    }
}

/// r = b − A·x̃
pub fn residual(a: &Matrix, b: &Vector, xt: &Vector, mode: ResidualMode) -> Result<Vector> {
    match mode {
        ResidualMode::Working => {
            if a.rows() != b.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{}x{} system with right-hand side of length {}",
                    a.rows(),
                    a.cols(),
                    b.len()
                )));
            }
            b.sub(&a.matvec(xt)?)
        }
        ResidualMode::DoubleDouble => dd_residual(a, b, xt),
    }
}

/// Normwise backward error ‖r‖/(‖A‖·‖x̃‖).
pub fn eta(a: &Matrix, b: &Vector, xt: &Vector, mode: ResidualMode, norm: Norm) -> Result<f64> {
    let r = residual(a, b, xt, mode)?;
    eta_from_residual(a, xt, &r, norm)
}

pub fn eta_from_residual(a: &Matrix, xt: &Vector, r: &Vector, norm: Norm) -> Result<f64> {
    let nx = xt.norm(norm);
    if nx == 0.0 {
        return Err(Error::ZeroSolutionVector);
    }
    Ok(r.norm(norm) / (a.norm(norm)? * nx))
}

/// Componentwise backward error max_j |r_j| / (|A|·|x̃|)_j with 0/0 = 0 and
/// nonzero/0 = +∞.
pub fn omega(a: &Matrix, b: &Vector, xt: &Vector, mode: ResidualMode) -> Result<f64> {
    let r = residual(a, b, xt, mode)?;
    Ok(omega_from_residual(a, xt, &r))
}

pub fn omega_from_residual(a: &Matrix, xt: &Vector, r: &Vector) -> f64 {
    let d = abs_product(a, xt);
    r.iter()
        .zip(d.iter())
        .map(|(&ri, &di)| ratio(ri.abs(), di))
        .fold(0.0, f64::max)
}

/// p/q with 0/0 = 0 and p/0 = +∞.
fn ratio(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else if q == 0.0 {
        f64::INFINITY
    } else {
        p / q
    }
}

/// |A|·|x|
fn abs_product(a: &Matrix, x: &Vector) -> Vector {
    a.abs()
        .matvec(&x.abs())
        .expect("dimensions checked by caller")
}

/// The minimizing perturbation E of the componentwise backward error:
/// E_ij = r_i·|A_ij|·sign(x̃_j)/(|A||x̃|)_i, so that (A + E)·x̃ = b and
/// max |E_ij|/|A_ij| = ω. The residual is taken in double-double.
pub fn optimal_componentwise_perturbation(a: &Matrix, b: &Vector, xt: &Vector) -> Result<Matrix> {
    let r = dd_residual(a, b, xt)?;
    let d = abs_product(a, xt);
    if let Some(row) = (0..r.len()).find(|&i| r[i] != 0.0 && d[i] == 0.0) {
        return Err(Error::InfeasiblePerturbation { row });
    }
    Ok(Matrix::from_fn(a.rows(), a.cols(), |i, j| {
        if r[i] == 0.0 || xt[j] == 0.0 {
            0.0
        } else {
            r[i] * a[(i, j)].abs() * xt[j].signum() / d[i]
        }
    }))
}

/// max_ij |E_ij|/|A_ij| with 0/0 = 0.
pub fn componentwise_ratio(e: &Matrix, a: &Matrix) -> f64 {
    e.as_slice()
        .iter()
        .zip(a.as_slice())
        .map(|(&eij, &aij)| ratio(eij.abs(), aij.abs()))
        .fold(0.0, f64::max)
}

/// Inverse used by the model quantities: triangular substitution for
/// triangular input, partially pivoted elimination otherwise.
pub fn model_inverse(m: &Matrix) -> Result<Matrix> {
    if is_lower_triangular(m) || is_upper_triangular(m) {
        triangular_inverse(m)
    } else {
        invert(m, PivotStrategy::Partial)
    }
}

/// γ(A,x) = ‖|A|·|A⁻¹|·|A·x|‖/(‖A‖·‖x‖), the naive-inversion amplification.
pub fn gamma_naive(a: &Matrix, x: &Vector, norm: Norm) -> Result<f64> {
    gamma_naive_with_inverse(a, &model_inverse(a)?, x, norm)
}

pub fn gamma_naive_with_inverse(a: &Matrix, a_inv: &Matrix, x: &Vector, norm: Norm) -> Result<f64> {
    let nx = x.norm(norm);
    if nx == 0.0 {
        return Err(Error::ZeroSolutionVector);
    }
    let ax = a.matvec(x)?.abs();
    let v = a.abs().matvec(&a_inv.abs().matvec(&ax)?)?;
    Ok(v.norm(norm) / (a.norm(norm)? * nx))
}

/// γ(A,x) evaluated at a computed solution of A·x = b. For the exact
/// solution A·x equals b, so |b| stands in for |A·x|; forming A·x̃ instead
/// would measure the residual of x̃ rather than the data, which for
/// ill-conditioned A swamps the quantity entirely.
pub fn gamma_naive_rhs(
    a: &Matrix,
    a_inv: &Matrix,
    b: &Vector,
    xt: &Vector,
    norm: Norm,
) -> Result<f64> {
    let nx = xt.norm(norm);
    if nx == 0.0 {
        return Err(Error::ZeroSolutionVector);
    }
    let v = a.abs().matvec(&a_inv.abs().matvec(&b.abs())?)?;
    Ok(v.norm(norm) / (a.norm(norm)? * nx))
}

/// γ(L,U) = ‖|L|·|U|‖/‖A‖.
pub fn growth_factor(l: &Matrix, u: &Matrix, a: &Matrix, norm: Norm) -> Result<f64> {
    let lu = l.abs().matmul(&u.abs())?;
    Ok(lu.norm(norm)? / a.norm(norm)?)
}

/// cond(M⁻¹) = ‖|M|·|M⁻¹|‖.
pub fn cond_inverse(m: &Matrix, norm: Norm) -> Result<f64> {
    cond_inverse_with(m, &model_inverse(m)?, norm)
}

pub fn cond_inverse_with(m: &Matrix, m_inv: &Matrix, norm: Norm) -> Result<f64> {
    m.abs().matmul(&m_inv.abs())?.norm(norm)
}

/// Skeel's cond(M) = ‖|M⁻¹|·|M|‖.
pub fn skeel_cond(m: &Matrix, norm: Norm) -> Result<f64> {
    skeel_cond_with(m, &model_inverse(m)?, norm)
}

pub fn skeel_cond_with(m: &Matrix, m_inv: &Matrix, norm: Norm) -> Result<f64> {
    m_inv.abs().matmul(&m.abs())?.norm(norm)
}

/// σ(A,x̃) = max_j (|A||x̃|)_j / min_j (|A||x̃|)_j; 1 if all components
/// vanish, +∞ if only the minimum does.
pub fn sigma(a: &Matrix, xt: &Vector) -> f64 {
    let d = abs_product(a, xt);
    let max = d.iter().copied().fold(0.0, f64::max);
    let min = d.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        1.0
    } else if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// 2·γ(L,U)·u*
pub fn bound_eta_ge(l: &Matrix, u: &Matrix, a: &Matrix, norm: Norm) -> Result<f64> {
    Ok(2.0 * growth_factor(l, u, a, norm)? * U_STAR)
}

/// 2·cond(L⁻¹)·u*, the coarser normwise bound through the L-factor.
pub fn bound_eta_ge_cond(l: &Matrix, norm: Norm) -> Result<f64> {
    Ok(2.0 * cond_inverse(l, norm)? * U_STAR)
}

/// 2·cond(L⁻¹)·σ(A,x̃)·u*
pub fn bound_omega_ge(l: &Matrix, a: &Matrix, xt: &Vector) -> Result<f64> {
    Ok(2.0 * cond_inverse(l, Norm::Inf)? * sigma(a, xt) * U_STAR)
}

/// 2·max_j (|L||U||x̃|)_j / (|A||x̃|)_j·u*, the intermediate bound that is
/// sharp for totally positive matrices (|L||U| = |A|). Rows of |L||U| are
/// mapped back through the pivoting permutation.
pub fn bound_omega_tp(f: &LUFactors, a: &Matrix, xt: &Vector) -> Result<f64> {
    let lu = f.unpermute_rows(&f.l.abs().matmul(&f.u.abs())?);
    let num = lu.matvec(&xt.abs())?;
    let den = abs_product(a, xt);
    let worst = num
        .iter()
        .zip(den.iter())
        .map(|(&p, &q)| ratio(p, q))
        .fold(0.0, f64::max);
    Ok(2.0 * worst * U_STAR)
}

fn refinement_terms(l: &Matrix, a: &Matrix, xt: &Vector) -> Result<(f64, f64, f64)> {
    let cl = cond_inverse(l, Norm::Inf)?;
    let ca = cond_inverse(a, Norm::Inf)?;
    Ok((cl, ca, sigma(a, xt)))
}

/// Bound on ω after one refinement step:
/// 4·cond²(L⁻¹)·cond(A⁻¹)·σ(A,ỹ)·u*² / (1 − 4·cond(L⁻¹)·cond(A⁻¹)·u*),
/// +∞ once the denominator is no longer positive.
pub fn bound_omega_refined(l: &Matrix, a: &Matrix, yt: &Vector) -> Result<f64> {
    let (cl, ca, s) = refinement_terms(l, a, yt)?;
    Ok(refined_bound_from_terms(cl, ca, s))
}

fn refined_bound_from_terms(cl: f64, ca: f64, s: f64) -> f64 {
    let den = 1.0 - 4.0 * cl * ca * U_STAR;
    if den <= 0.0 {
        f64::INFINITY
    } else {
        4.0 * cl * cl * ca * s * U_STAR * U_STAR / den
    }
}

/// 8·cond²(L⁻¹)·cond(A⁻¹)·σ(A,ỹ)·u* and whether it is at most 1; when it
/// is, one refinement step gives ω₁ ≤ u* up to dimension constants.
pub fn refinement_premise(l: &Matrix, a: &Matrix, yt: &Vector) -> Result<(f64, bool)> {
    let (cl, ca, s) = refinement_terms(l, a, yt)?;
    let value = 8.0 * cl * cl * ca * s * U_STAR;
    Ok((value, value <= 1.0))
}

/// A posteriori backward errors of one computed solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackwardErrorReport {
    #[serde(with = "ext_f64")]
    pub eta: f64,
    #[serde(with = "ext_f64")]
    pub omega: f64,
    pub residual: Vec<f64>,
    pub residual_mode: ResidualMode,
    pub norm_used: Norm,
}

pub fn backward_error_report(
    a: &Matrix,
    b: &Vector,
    xt: &Vector,
    mode: ResidualMode,
    norm: Norm,
) -> Result<BackwardErrorReport> {
    let r = residual(a, b, xt, mode)?;
    Ok(BackwardErrorReport {
        eta: eta_from_residual(a, xt, &r, norm)?,
        omega: omega_from_residual(a, xt, &r),
        residual: r.into_vec(),
        residual_mode: mode,
        norm_used: norm,
    })
}

/// Problem- and algorithm-dependent factors entering the a priori bounds.
/// Factor-based entries are absent for the naive algorithm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelQuantities {
    #[serde(with = "ext_f64")]
    pub gamma_naive: f64,
    #[serde(with = "ext_f64_opt")]
    pub gamma_growth: Option<f64>,
    #[serde(rename = "cond_L_inv", with = "ext_f64_opt")]
    pub cond_l_inv: Option<f64>,
    #[serde(rename = "cond_A_inv", with = "ext_f64")]
    pub cond_a_inv: f64,
    #[serde(rename = "skeel_cond_A", with = "ext_f64")]
    pub skeel_cond_a: f64,
    #[serde(with = "ext_f64")]
    pub sigma: f64,
}

/// Evaluated a priori bounds. Entries that do not apply to the solver are
/// `None`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ModelBounds {
    #[serde(with = "ext_f64_opt")]
    pub bound_eta_naive: Option<f64>,
    #[serde(with = "ext_f64_opt")]
    pub bound_eta_ge: Option<f64>,
    #[serde(with = "ext_f64_opt")]
    pub bound_eta_ge_cond: Option<f64>,
    #[serde(with = "ext_f64_opt")]
    pub bound_omega_ge: Option<f64>,
    #[serde(with = "ext_f64_opt")]
    pub bound_omega_tp: Option<f64>,
    #[serde(with = "ext_f64_opt")]
    pub bound_omega_refined: Option<f64>,
    #[serde(with = "ext_f64_opt")]
    pub bound_eta_cholesky: Option<f64>,
    #[serde(with = "ext_f64_opt")]
    pub bound_eta_cholesky_dim: Option<f64>,
    #[serde(skip)]
    pub refinement_premise_value: Option<f64>,
    #[serde(skip)]
    pub refinement_premise_holds: Option<bool>,
    pub unit_roundoff: f64,
    pub u_star: f64,
}

/// Which factorization the quantities refer to.
#[derive(Debug, Clone, Copy)]
pub enum Factors<'a> {
    /// Naive algorithm: no intermediate factors.
    None,
    Lu(&'a LUFactors),
    Cholesky(&'a Matrix),
}

/// Computes every model quantity and bound for the computed solution `xt`
/// of A·x = b.
///
/// `a_inv` supplies a known inverse (e.g. the exact inverse Hilbert matrix);
/// otherwise one is computed with partial pivoting.
pub fn model_analysis(
    a: &Matrix,
    b: &Vector,
    xt: &Vector,
    factors: Factors<'_>,
    a_inv: Option<&Matrix>,
    norm: Norm,
) -> Result<(ModelQuantities, ModelBounds)> {
    let computed;
    let a_inv = match a_inv {
        Some(inv) => inv,
        None => {
            computed = invert(a, PivotStrategy::Partial)?;
            &computed
        }
    };
    let gamma_naive = gamma_naive_rhs(a, a_inv, b, xt, norm)?;
    let cond_a_inv = cond_inverse_with(a, a_inv, norm)?;
    let skeel_cond_a = skeel_cond_with(a, a_inv, norm)?;
    let s = sigma(a, xt);

    let mut bounds = ModelBounds {
        unit_roundoff: UNIT_ROUNDOFF,
        u_star: U_STAR,
        ..Default::default()
    };
    let (gamma_growth, cond_l_inv) = match factors {
        Factors::None => {
            bounds.bound_eta_naive = Some(gamma_naive * UNIT_ROUNDOFF);
            (None, None)
        }
        Factors::Lu(f) => {
            let g = growth_factor(&f.l, &f.u, a, norm)?;
            let l_inv = triangular_inverse(&f.l)?;
            let cl = cond_inverse_with(&f.l, &l_inv, norm)?;
            let cl_inf = cond_inverse_with(&f.l, &l_inv, Norm::Inf)?;
            let ca_inf = cond_inverse_with(a, a_inv, Norm::Inf)?;
            bounds.bound_eta_ge = Some(2.0 * g * U_STAR);
            bounds.bound_eta_ge_cond = Some(2.0 * cl * U_STAR);
            bounds.bound_omega_ge = Some(2.0 * cl_inf * s * U_STAR);
            bounds.bound_omega_tp = Some(bound_omega_tp(f, a, xt)?);
            bounds.bound_omega_refined = Some(refined_bound_from_terms(cl_inf, ca_inf, s));
            let premise = 8.0 * cl_inf * cl_inf * ca_inf * s * U_STAR;
            bounds.refinement_premise_value = Some(premise);
            bounds.refinement_premise_holds = Some(premise <= 1.0);
            (Some(g), Some(cl))
        }
        Factors::Cholesky(l) => {
            let g = growth_factor(l, &l.transpose(), a, norm)?;
            let cl = cond_inverse(l, norm)?;
            bounds.bound_eta_cholesky = Some(2.0 * g * U_STAR);
            bounds.bound_eta_cholesky_dim = Some(2.0 * a.rows() as f64 * U_STAR);
            (Some(g), Some(cl))
        }
    };
    Ok((
        ModelQuantities {
            gamma_naive,
            gamma_growth,
            cond_l_inv,
            cond_a_inv,
            skeel_cond_a,
            sigma: s,
        },
        bounds,
    ))
}

/// JSON has no infinity; non-finite values are written as the strings
/// `"inf"`, `"-inf"` and `"nan"`.
pub mod ext_f64 {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

pub mod ext_f64_opt {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => super::ext_f64::serialize(v, s),
            None => s.serialize_none(),
        }
    }
}

pub mod ext_f64_seq {
    use serde::ser::{SerializeSeq, Serializer};

    struct Ext(f64);

    impl serde::Serialize for Ext {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            super::ext_f64::serialize(&self.0, s)
        }
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for &x in v {
            seq.serialize_element(&Ext(x))?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::{lu_factor, lu_solve};
    use crate::gallery;

    const U: f64 = UNIT_ROUNDOFF;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn u_star_value() {
        assert_eq!(UNIT_ROUNDOFF, 2f64.powi(-53));
        assert_eq!(U_STAR, 2f64.powi(-53) + 2f64.powi(-107));
    }

    #[test]
    fn exact_solution_has_zero_backward_error() {
        let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 3.0]]);
        let x = Vector::new(vec![1.0, 1.0]);
        let b = Vector::new(vec![3.0, 4.0]);
        for mode in [ResidualMode::Working, ResidualMode::DoubleDouble] {
            assert!(residual(&a, &b, &x, mode).unwrap().is_zero());
            assert_eq!(eta(&a, &b, &x, mode, Norm::Inf).unwrap(), 0.0);
            assert_eq!(omega(&a, &b, &x, mode).unwrap(), 0.0);
        }
        assert_eq!(
            eta(&a, &b, &Vector::zeros(2), ResidualMode::Working, Norm::Inf),
            Err(Error::ZeroSolutionVector)
        );
        assert!(residual(&a, &Vector::ones(3), &x, ResidualMode::Working).is_err());
    }

    #[test]
    fn omega_conventions() {
        // (|A||x|) = (0, 1): residual (1, 0) is infeasible, residual (0, 1) is not
        let a = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0]]);
        let x = Vector::new(vec![1.0, 0.0]);
        assert_eq!(
            omega_from_residual(&a, &x, &Vector::new(vec![1.0, 0.0])),
            f64::INFINITY
        );
        assert_eq!(
            omega_from_residual(&a, &x, &Vector::new(vec![0.0, 0.5])),
            0.5
        );
        let b = Vector::new(vec![1.0, 1.0]);
        assert_eq!(
            optimal_componentwise_perturbation(&a, &b, &x),
            Err(Error::InfeasiblePerturbation { row: 0 })
        );
    }

    #[test]
    fn optimal_perturbation_examples() {
        let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 3.0]]);
        let x = Vector::new(vec![1.0, 1.0]);
        let b = Vector::new(vec![3.0, 4.0]);
        assert_eq!(
            optimal_componentwise_perturbation(&a, &b, &x).unwrap(),
            Matrix::zeros(2, 2)
        );
        // scalar: a·x = b + r
        let a = Matrix::from_rows(&[[4.0]]);
        let x = Vector::new(vec![-0.5]);
        let b = Vector::new(vec![-1.5]);
        let e = optimal_componentwise_perturbation(&a, &b, &x).unwrap();
        let r = -1.5 - 4.0 * -0.5;
        assert_eq!(e[(0, 0)], r / x[0]);
        assert_eq!(componentwise_ratio(&e, &a), r.abs() / (4.0 * 0.5));
    }

    #[test]
    fn identity_quantities() {
        let i = Matrix::identity(4);
        let x = Vector::new(vec![1.0, -2.0, 3.0, 0.5]);
        assert_eq!(gamma_naive(&i, &x, Norm::Inf).unwrap(), 1.0);
        assert_eq!(skeel_cond(&i, Norm::Inf).unwrap(), 1.0);
        assert_eq!(
            skeel_cond(&Matrix::diagonal(&[1e-8, 3.0, 7e5]), Norm::Inf).unwrap(),
            1.0
        );
        let f = lu_factor(&i, PivotStrategy::NoPivot).unwrap();
        assert_eq!(growth_factor(&f.l, &f.u, &i, Norm::Inf).unwrap(), 1.0);
        assert_eq!(
            sigma(
                &Matrix::from_fn(3, 3, |_, _| 1.0),
                &Vector::new(vec![1.0, 2.0, 3.0])
            ),
            1.0
        );
        assert_eq!(sigma(&Matrix::zeros(2, 2), &Vector::ones(2)), 1.0);
        assert_eq!(
            sigma(
                &Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]),
                &Vector::ones(2)
            ),
            f64::INFINITY
        );
    }

    #[test]
    fn skeel4_closed_forms() {
        for k in [10, 20, 40] {
            let eps = 2f64.powi(-k);
            let inst = gallery::skeel4(eps);
            let x = inst.x_exact.clone().unwrap();
            assert!(rel(skeel_cond(&inst.a, Norm::Inf).unwrap(), 4.0) <= 1e-12);
            assert!(rel(cond_inverse(&inst.a, Norm::Inf).unwrap(), 2.0 + 4.0 / eps) <= 1e-12);
            assert!(
                rel(
                    gamma_naive(&inst.a, &x, Norm::Inf).unwrap(),
                    1.0 + eps / 2.0
                ) <= 1e-12
            );
            assert!(rel(sigma(&inst.a, &x), 2.0 + 2.0 / eps) <= 1e-12);
            let f = lu_factor(&inst.a, PivotStrategy::NoPivot).unwrap();
            assert!(rel(cond_inverse(&f.l, Norm::Inf).unwrap(), 3.0 + 4.0 * eps) <= 1e-12);
        }
    }

    #[test]
    fn cancellation_growth() {
        let inst = gallery::cancel2(U);
        let f = lu_factor(&inst.a, PivotStrategy::NoPivot).unwrap();
        assert!(
            rel(
                growth_factor(&f.l, &f.u, &inst.a, Norm::Inf).unwrap(),
                1.0 / U
            ) <= 1e-12
        );
        assert!(rel(cond_inverse(&f.l, Norm::Inf).unwrap(), 1.0 + 2.0 / U) <= 1e-12);
        let bound = bound_eta_ge(&f.l, &f.u, &inst.a, Norm::Inf).unwrap();
        assert!(rel(bound, 2.0 * U_STAR / U) <= 1e-12);
    }

    #[test]
    fn wilkinson_l_condition() {
        for m in [5, 10, 20, 30] {
            let l = gallery::wilkinson_growth_l(m);
            assert_eq!(
                cond_inverse(&l, Norm::Inf).unwrap(),
                2f64.powi(m as i32) - 1.0
            );
            let inv = invert(&l, PivotStrategy::Partial).unwrap();
            assert_eq!(
                cond_inverse_with(&l, &inv, Norm::Inf).unwrap(),
                2f64.powi(m as i32) - 1.0
            );
        }
    }

    #[test]
    fn hilbert_growth_is_one_without_pivoting() {
        let a = gallery::hilbert(6);
        let f = lu_factor(&a, PivotStrategy::NoPivot).unwrap();
        assert!(rel(growth_factor(&f.l, &f.u, &a, Norm::Inf).unwrap(), 1.0) <= 1e-14);
    }

    #[test]
    fn skeel3_asymptotics() {
        let eps = 2f64.powi(-30);
        let inst = gallery::skeel3(eps);
        let x = inst.x_exact.clone().unwrap();
        let ca = cond_inverse(&inst.a, Norm::Inf).unwrap();
        assert!(rel(ca * eps, 6.0 / 5.0) < 1e-6, "{}", ca * eps);
        assert!(rel(sigma(&inst.a, &x) * eps, 3.0 / 4.0) < 1e-6);
        let f = lu_factor(&inst.a, PivotStrategy::NoPivot).unwrap();
        assert!(rel(cond_inverse(&f.l, Norm::Inf).unwrap(), 8.0 / 3.0) < 1e-6);
        let (value, holds) = refinement_premise(&f.l, &inst.a, &x).unwrap();
        assert!(rel(value * eps * eps / U_STAR, 256.0 / 5.0) < 1e-6);
        assert!(!holds);
    }

    #[test]
    fn refined_bound_is_infinite_past_the_premise() {
        assert_eq!(refined_bound_from_terms(1.0, 1.0 / U, 1.0), f64::INFINITY);
        assert!(refined_bound_from_terms(1.0, 1.0, 1.0) < 5.0 * U * U);
    }

    #[test]
    fn componentwise_lower_bound_and_formula_consistency() {
        let inst = gallery::skeel3(1e-4);
        let f = lu_factor(&inst.a, PivotStrategy::NoPivot).unwrap();
        let x = lu_solve(&f, &inst.b).unwrap();
        let r = residual(&inst.a, &inst.b, &x, ResidualMode::DoubleDouble).unwrap();
        let w = omega_from_residual(&inst.a, &x, &r);
        let d = inst.a.abs().matvec(&x.abs()).unwrap();
        assert!(w >= r.inf_norm() / d.inf_norm());
        let e = eta_from_residual(&inst.a, &x, &r, Norm::Inf).unwrap();
        assert_eq!(e, r.inf_norm() / (inst.a.inf_norm() * x.inf_norm()));
    }

    #[test]
    fn report_serializes_infinity_as_string() {
        let report = BackwardErrorReport {
            eta: 0.5,
            omega: f64::INFINITY,
            residual: vec![1.0],
            residual_mode: ResidualMode::DoubleDouble,
            norm_used: Norm::Inf,
        };
        let json = serde_json::to_string(&report).unwrap();
        assert_eq!(
            json,
            r#"{"eta":0.5,"omega":"inf","residual":[1.0],"residual_mode":"double_double","norm_used":"inf"}"#
        );
    }
}
