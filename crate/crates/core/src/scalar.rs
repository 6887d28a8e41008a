//! The composition model for scalar functions f = h ∘ g: relative condition
//! numbers of inverse stages, the first-order β recursion and the
//! log²(1+x) case study with its double-double reference.

use serde::Serialize;

use crate::diagnostics::UNIT_ROUNDOFF;
use crate::error::{Error, Result};
use crate::extprec::{fast_two_sum, DoubleDouble};

/// One stage of a decomposition, given by closed forms.
#[derive(Clone, Copy)]
pub struct ScalarStage {
    pub name: &'static str,
    pub eval: fn(f64) -> f64,
    pub deriv: fn(f64) -> f64,
    pub domain: fn(f64) -> bool,
    pub inverse_eval: Option<fn(f64) -> f64>,
    pub inverse_deriv: Option<fn(f64) -> f64>,
    pub inverse_domain: Option<fn(f64) -> bool>,
}

impl std::fmt::Debug for ScalarStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarStage")
            .field("name", &self.name)
            .field("invertible", &self.inverse_eval.is_some())
            .finish()
    }
}

fn everywhere(_: f64) -> bool {
    true
}

fn positive(w: f64) -> bool {
    w > 0.0
}

fn above_minus_one(x: f64) -> bool {
    x > -1.0
}

impl ScalarStage {
    pub fn identity() -> Self {
        ScalarStage {
            name: "identity",
            eval: |x| x,
            deriv: |_| 1.0,
            domain: everywhere,
            inverse_eval: Some(|x| x),
            inverse_deriv: Some(|_| 1.0),
            inverse_domain: Some(everywhere),
        }
    }

    /// x ↦ 1 + x, whose inverse w ↦ w − 1 cancels for w ≈ 1.
    pub fn one_plus() -> Self {
        ScalarStage {
            name: "one_plus",
            eval: |x| 1.0 + x,
            deriv: |_| 1.0,
            domain: everywhere,
            inverse_eval: Some(|w| w - 1.0),
            inverse_deriv: Some(|_| 1.0),
            inverse_domain: Some(everywhere),
        }
    }

    /// x ↦ log(1 + x) with inverse w ↦ eʷ − 1.
    pub fn log1p() -> Self {
        ScalarStage {
            name: "log1p",
            eval: f64::ln_1p,
            deriv: |x| 1.0 / (1.0 + x),
            domain: above_minus_one,
            inverse_eval: Some(f64::exp_m1),
            inverse_deriv: Some(f64::exp),
            inverse_domain: Some(everywhere),
        }
    }

    /// w ↦ log²(w); not invertible on its whole domain.
    pub fn log_square() -> Self {
        ScalarStage {
            name: "log_square",
            eval: |w| w.ln() * w.ln(),
            deriv: |w| 2.0 * w.ln() / w,
            domain: positive,
            inverse_eval: None,
            inverse_deriv: None,
            inverse_domain: None,
        }
    }

    pub fn square() -> Self {
        ScalarStage {
            name: "square",
            eval: |v| v * v,
            deriv: |v| 2.0 * v,
            domain: everywhere,
            inverse_eval: None,
            inverse_deriv: None,
            inverse_domain: None,
        }
    }

    pub fn inverse(&self) -> Option<ScalarStage> {
        Some(ScalarStage {
            name: self.name,
            eval: self.inverse_eval?,
            deriv: self.inverse_deriv?,
            domain: self.inverse_domain.unwrap_or(everywhere),
            inverse_eval: Some(self.eval),
            inverse_deriv: Some(self.deriv),
            inverse_domain: Some(self.domain),
        })
    }
}

/// Relative condition number |x·s′(x)/s(x)| of a stage at x, with 0/0 = 0
/// and +∞ when only the value vanishes.
pub fn relcond(stage: &ScalarStage, x: f64) -> Result<f64> {
    if !(stage.domain)(x) || x.is_nan() {
        return Err(Error::DomainError {
            x,
            what: stage.name,
        });
    }
    let num = (x * (stage.deriv)(x)).abs();
    let den = (stage.eval)(x).abs();
    Ok(if den != 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    })
}

/// First-order stability indicator of a chain of stages, outermost first:
/// betas = (β₁, …, βₙ), kappas = (κ₁, …, κₙ₋₁) folds to
/// β₁ + κ₁·(β₂ + κ₂·(… + κₙ₋₁·βₙ)).
pub fn beta_chain(betas: &[f64], kappas: &[f64]) -> Result<f64> {
    if betas.is_empty() || betas.len() != kappas.len() + 1 {
        return Err(Error::LengthMismatch {
            betas: betas.len(),
            kappas: kappas.len(),
            expected: kappas.len() + 1,
        });
    }
    let mut beta = betas[betas.len() - 1];
    for (b, k) in betas[..betas.len() - 1].iter().zip(kappas).rev() {
        beta = b + k * beta;
    }
    Ok(beta)
}

fn check_log_domain(x: f64) -> Result<()> {
    if x > -1.0 {
        Ok(())
    } else {
        Err(Error::DomainError {
            x,
            what: "log(1+x) requires x > -1",
        })
    }
}

/// fl(log(fl(1 + x)))²
pub fn eval_naive_log2_1px(x: f64) -> Result<f64> {
    check_log_domain(x)?;
    let l = (1.0 + x).ln();
    Ok(l * l)
}

/// log(1 + x) from w = fl(1 + x) as x·log(w)/(w − 1). The rounding error of
/// w cancels between numerator and denominator.
pub fn log1p_kahan(x: f64) -> f64 {
    let w = 1.0 + x;
    if w == 1.0 {
        x
    } else {
        x * w.ln() / (w - 1.0)
    }
}

pub fn eval_stable_log2_1px(x: f64) -> Result<f64> {
    check_log_domain(x)?;
    let l = log1p_kahan(x);
    Ok(l * l)
}

const LN2: DoubleDouble = DoubleDouble {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

fn dd_scale(v: DoubleDouble, k: i32) -> DoubleDouble {
    let s = 2f64.powi(k);
    DoubleDouble {
        hi: v.hi * s,
        lo: v.lo * s,
    }
}

fn dd_sqrt(v: DoubleDouble) -> DoubleDouble {
    if v.hi <= 0.0 {
        return DoubleDouble::ZERO;
    }
    let q = v.hi.sqrt();
    let t = v - DoubleDouble::from_product(q, q);
    let (hi, lo) = fast_two_sum(q, t.hi / (2.0 * q));
    DoubleDouble { hi, lo }
}

/// log(1 + x) to about 2⁻¹⁰⁰ relative. 1 + x is formed exactly, reduced to
/// m·2ᵏ with m near 1, and log m = 2·atanh((m − 1)/(m + 1)) is summed as a
/// series.
pub fn log1p_dd(x: f64) -> Result<DoubleDouble> {
    check_log_domain(x)?;
    let w = DoubleDouble::from_sum(1.0, x);
    let mut k = w.hi.log2().round() as i32;
    let mut m = dd_scale(w, -k);
    if m.hi > std::f64::consts::SQRT_2 {
        k += 1;
        m = dd_scale(m, -1);
    } else if m.hi < std::f64::consts::FRAC_1_SQRT_2 {
        k -= 1;
        m = dd_scale(m, 1);
    }
    let one = DoubleDouble::from_f64(1.0);
    let s = (m - one) / (m + one);
    let s2 = s * s;
    let mut power = s;
    let mut sum = s;
    for j in 1..200 {
        power = power * s2;
        let term = power / DoubleDouble::from_f64((2 * j + 1) as f64);
        sum = sum + term;
        if term.hi.abs() <= 1e-34 * sum.hi.abs() {
            break;
        }
    }
    Ok(dd_scale(sum, 1) + DoubleDouble::from_f64(k as f64) * LN2)
}

/// eᵛ − 1 by halving v until the Taylor series converges quickly, then
/// undoing the halvings with expm1(2t) = expm1(t)·(expm1(t) + 2).
pub fn expm1_dd(v: DoubleDouble) -> DoubleDouble {
    let mut halvings = 0;
    let mut t = v;
    while t.hi.abs() > 2f64.powi(-12) {
        t = dd_scale(t, -1);
        halvings += 1;
    }
    let mut sum = t;
    let mut term = t;
    for n in 2..=12 {
        term = term * t / DoubleDouble::from_f64(n as f64);
        sum = sum + term;
    }
    let two = DoubleDouble::from_f64(2.0);
    for _ in 0..halvings {
        sum = sum * (sum + two);
    }
    sum
}

/// log²(1 + x) rounded once from the double-double reference.
pub fn reference_log2_1px(x: f64) -> Result<f64> {
    let l = log1p_dd(x)?;
    Ok((l * l).to_f64())
}

fn relative_error(approx: f64, exact: DoubleDouble) -> f64 {
    relative_error_dd(DoubleDouble::from_f64(approx), exact)
}

fn relative_error_dd(approx: DoubleDouble, exact: DoubleDouble) -> f64 {
    let diff = (approx - exact).hi.abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / exact.hi.abs()
    }
}

/// Forward relative error of a computed value of log²(1 + x).
pub fn forward_error_log2_1px(x: f64, computed: f64) -> Result<f64> {
    let l = log1p_dd(x)?;
    Ok(relative_error(computed, l * l))
}

/// Smallest relative perturbation of x for which `computed` is the exact
/// value of log²(1 + x), inverted in double-double arithmetic.
pub fn backward_error_log2_1px(x: f64, computed: f64) -> Result<f64> {
    check_log_domain(x)?;
    if x == 0.0 {
        return Ok(if computed == 0.0 { 0.0 } else { f64::INFINITY });
    }
    let root = dd_sqrt(DoubleDouble::from_f64(computed.abs()));
    let root = if x < 0.0 { -root } else { root };
    Ok(relative_error_dd(expm1_dd(root), DoubleDouble::from_f64(x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Log2Decomposition {
    /// x ↦ w = 1 + x ↦ log²(w)
    Naive,
    /// x ↦ w = log(1 + x) ↦ w², with log(1 + x) evaluated without cancellation.
    Stable,
}

/// Model prediction next to measured errors. `beta_bound` is first order:
/// the O(u²) terms of the recursion are dropped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub kappa_g_inv: f64,
    pub beta_bound: f64,
    pub measured_backward_error: Option<f64>,
    /// Relative forward error against the double-double reference; this is
    /// the quantity the case study compares.
    pub measured_forward_error: Option<f64>,
}

/// Analyses log²(1 + x) under one of the two decompositions.
///
/// The model rounds only the intermediate w, so h sees one relative
/// perturbation of size u (β_h = 1). The naive g is exact in the model
/// (β_g = 0); the stable g is a realized log1p accurate to about u (β_g = 1).
/// κ of g⁻¹ at w = g(x) equals 1/κ_g(x) for a scalar bijection, which keeps
/// it finite where w itself is not representable.
pub fn analyze_log2_1px(x: f64, decomposition: Log2Decomposition) -> Result<DecompositionReport> {
    check_log_domain(x)?;
    let (g, beta_g, computed) = match decomposition {
        Log2Decomposition::Naive => (ScalarStage::one_plus(), 0.0, eval_naive_log2_1px(x)?),
        Log2Decomposition::Stable => (ScalarStage::log1p(), 1.0, eval_stable_log2_1px(x)?),
    };
    let kappa_g = relcond(&g, x)?;
    let kappa_g_inv = if kappa_g == 0.0 {
        f64::INFINITY
    } else {
        1.0 / kappa_g
    };
    let beta_bound = beta_chain(&[beta_g, 1.0], &[kappa_g_inv])?;
    Ok(DecompositionReport {
        kappa_g_inv,
        beta_bound,
        measured_backward_error: Some(backward_error_log2_1px(x, computed)?),
        measured_forward_error: Some(forward_error_log2_1px(x, computed)?),
    })
}

/// Predicted backward error β·u of a report.
pub fn predicted_backward_error(report: &DecompositionReport) -> f64 {
    report.beta_bound * UNIT_ROUNDOFF
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extprec::Rational;
    use proptest::prelude::*;

    const U: f64 = UNIT_ROUNDOFF;

    #[test]
    fn relcond_examples() {
        let shift_down = ScalarStage::one_plus().inverse().unwrap();
        for w in [1.5, 1.0 + 2f64.powi(-20), 0.25, -3.0] {
            let expected = w.abs() / (w - 1.0).abs();
            assert!((relcond(&shift_down, w).unwrap() - expected).abs() <= 4.0 * U * expected);
        }
        let expm1 = ScalarStage::log1p().inverse().unwrap();
        let k = relcond(&expm1, 1e-10).unwrap();
        assert!((k - 1.0).abs() < 1e-9);
        for x in [-2.5, 1e-300, 7.0] {
            assert_eq!(relcond(&ScalarStage::identity(), x).unwrap(), 1.0);
        }
    }

    #[test]
    fn relcond_boundaries() {
        // value vanishes while x·s′(x) does not
        assert_eq!(
            relcond(&ScalarStage::one_plus(), -1.0).unwrap(),
            f64::INFINITY
        );
        assert_eq!(relcond(&ScalarStage::identity(), 0.0).unwrap(), 0.0);
        assert!(matches!(
            relcond(&ScalarStage::log1p(), -1.0),
            Err(Error::DomainError { .. })
        ));
        assert!(relcond(&ScalarStage::log_square(), 0.0).is_err());
        assert!(relcond(&ScalarStage::identity(), f64::NAN).is_err());
    }

    #[test]
    fn inverses_round_trip() {
        for stage in [ScalarStage::identity(), ScalarStage::log1p()] {
            let inv = stage.inverse().unwrap();
            for x in [-0.5, -1e-7, 1e-12, 0.3, 1.0, 20.0] {
                let back = (inv.eval)((stage.eval)(x));
                assert!((back - x).abs() <= 1e-12 * x.abs(), "{} {x}", stage.name);
            }
        }
        assert!(ScalarStage::square().inverse().is_none());
        // reciprocal identity for a bijection
        let g = ScalarStage::one_plus();
        let x = 0.75;
        let direct = relcond(&g.inverse().unwrap(), 1.0 + x).unwrap();
        assert!((direct - 1.0 / relcond(&g, x).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn beta_chain_expansions() {
        assert_eq!(beta_chain(&[1.0, 1.0, 1.0], &[2.0, 3.0]).unwrap(), 9.0);
        assert_eq!(beta_chain(&[0.5, 2.0], &[4.0]).unwrap(), 0.5 + 4.0 * 2.0);
        assert_eq!(beta_chain(&[0.0; 4], &[5.0, 6.0, 7.0]).unwrap(), 0.0);
        assert_eq!(beta_chain(&[3.0], &[]).unwrap(), 3.0);
        assert_eq!(
            beta_chain(&[1.0, 2.0, 3.0, 4.0], &[2.0, 3.0, 5.0]).unwrap(),
            1.0 + 2.0 * (2.0 + 3.0 * (3.0 + 5.0 * 4.0))
        );
        assert!(matches!(
            beta_chain(&[1.0, 1.0], &[1.0, 1.0]),
            Err(Error::LengthMismatch {
                betas: 2,
                kappas: 2,
                expected: 3
            })
        ));
        assert!(beta_chain(&[], &[]).is_err());
    }

    #[test]
    fn log2_examples() {
        assert_eq!(eval_naive_log2_1px(0.0).unwrap(), 0.0);
        assert_eq!(eval_stable_log2_1px(0.0).unwrap(), 0.0);
        let x = 2f64.powi(-60);
        assert_eq!(eval_naive_log2_1px(x).unwrap(), 0.0);
        let stable = eval_stable_log2_1px(x).unwrap();
        assert!((stable - x * x).abs() <= 4.0 * U * x * x);

        let x = 1e-8;
        let exact = log1p_dd(x).unwrap();
        let exact = exact * exact;
        let stable = relative_error(eval_stable_log2_1px(x).unwrap(), exact);
        assert!(stable <= 8.0 * U);
        // fl(1 + x) is off by at most u absolutely, i.e. by up to u/x relative
        // to x, and squaring doubles that
        let naive = relative_error(eval_naive_log2_1px(x).unwrap(), exact);
        assert!(naive <= 2.0 * U / x * 1.001);
        assert!(naive >= 1e3 * stable.max(U));

        for bad in [-1.0, -2.0, f64::NAN] {
            assert!(eval_naive_log2_1px(bad).is_err());
            assert!(eval_stable_log2_1px(bad).is_err());
        }
    }

    #[test]
    fn log1p_reference_against_rational_series() {
        // for tiny x the series x − x²/2 + x³/3 truncated after three terms is
        // exact far beyond double-double precision
        let x = 2f64.powi(-40);
        let xr = Rational::from_f64(x).unwrap();
        let x2 = xr.mul(&xr);
        let x3 = x2.mul(&xr);
        let series = xr
            .sub(&x2.div(&Rational::from_integer(2)).unwrap())
            .add(&x3.div(&Rational::from_integer(3)).unwrap());
        let dd = log1p_dd(x).unwrap().to_rational().unwrap();
        let err = dd.sub(&series).abs();
        let tol = series.mul(&Rational::from_f64(2f64.powi(-100)).unwrap());
        assert!(err.compare(&tol).is_le());

        let l = log1p_dd(1.0).unwrap();
        assert_eq!(l.hi, std::f64::consts::LN_2);
        assert!((l.lo - LN2.lo).abs() < 1e-31);
        let l = log1p_dd(3.0).unwrap();
        assert_eq!(l.to_f64(), 2.0 * std::f64::consts::LN_2);
    }

    #[test]
    fn expm1_inverts_log1p() {
        for x in [-0.9, -1e-5, 3e-12, 0.5, 4.0, 1e6] {
            let back = expm1_dd(log1p_dd(x).unwrap());
            assert!(relative_error(x, back) < 1e-28, "{x}");
        }
    }

    #[test]
    fn naive_backward_error_follows_kappa() {
        let x = 1e-8;
        let naive = analyze_log2_1px(x, Log2Decomposition::Naive).unwrap();
        assert!((naive.kappa_g_inv - (1.0 + x) / x).abs() < 1e-6 * naive.kappa_g_inv);
        let measured = naive.measured_backward_error.unwrap();
        assert!(measured > 1e-10 && measured <= predicted_backward_error(&naive));

        let stable = analyze_log2_1px(x, Log2Decomposition::Stable).unwrap();
        assert!((stable.kappa_g_inv - 1.0).abs() < 1e-7);
        assert!(stable.beta_bound < 2.1);
        assert!(stable.measured_backward_error.unwrap() <= 4.0 * U);
        assert!(stable.measured_forward_error.unwrap() < naive.measured_forward_error.unwrap());

        // information is lost completely once fl(1 + x) = 1
        let lost = analyze_log2_1px(2f64.powi(-60), Log2Decomposition::Naive).unwrap();
        assert_eq!(lost.measured_backward_error, Some(1.0));
        assert_eq!(lost.measured_forward_error, Some(1.0));
    }

    #[test]
    fn stable_log1p_on_unit_range() {
        let n = 2001;
        for i in 0..n {
            let x = -0.5 + 1.5 * i as f64 / (n - 1) as f64;
            let err = relative_error(log1p_kahan(x), log1p_dd(x).unwrap());
            assert!(err <= 8.0 * U, "x = {x}: {err}");
        }
    }

    proptest! {
        #[test]
        fn beta_chain_is_monotone(
            betas in prop::collection::vec(0.0f64..10.0, 1..6),
            seed in 0.0f64..10.0,
            bump in 0.0f64..5.0,
            pick in 0usize..16,
        ) {
            let kappas: Vec<f64> = (1..betas.len()).map(|i| seed + i as f64).collect();
            let base = beta_chain(&betas, &kappas).unwrap();
            let mut b2 = betas.clone();
            let i = pick % b2.len();
            b2[i] += bump;
            prop_assert!(beta_chain(&b2, &kappas).unwrap() >= base);
            if !kappas.is_empty() {
                let mut k2 = kappas.clone();
                let j = pick % k2.len();
                k2[j] += bump;
                prop_assert!(beta_chain(&betas, &k2).unwrap() >= base);
            }
        }

        #[test]
        fn stable_log1p_matches_reference(x in -0.5f64..1.0) {
            let err = relative_error(log1p_kahan(x), log1p_dd(x).unwrap());
            prop_assert!(err <= 8.0 * U);
        }
    }
}
