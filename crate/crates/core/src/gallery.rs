//! Deterministic test matrices, right-hand sides and exact solutions.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::binomial;

use crate::error::{Error, Result};
use crate::extprec::Rational;
use crate::matrix::{Matrix, Vector};

/// Largest order supported by [`invhilbert_exact`].
pub const MAX_INVHILBERT: usize = 20;
pub const DEFAULT_SEED: u64 = 42;

/// A linear system with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct TestInstance {
    pub name: String,
    pub a: Matrix,
    pub b: Vector,
    /// Exact solution rounded to binary64, when known.
    pub x_exact: Option<Vector>,
    pub parameters: BTreeMap<String, f64>,
    /// Inverse known in closed form, rounded once per entry.
    pub known_inverse: Option<Matrix>,
}

impl TestInstance {
    fn new(name: &str, a: Matrix, b: Vector, params: &[(&str, f64)]) -> Self {
        TestInstance {
            name: name.to_string(),
            a,
            b,
            x_exact: None,
            parameters: params.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            known_inverse: None,
        }
    }
}

/// H_m with entries fl(1/(i + j − 1)), 1-based.
pub fn hilbert(m: usize) -> Matrix {
    Matrix::from_fn(m, m, |i, j| 1.0 / (i + j + 1) as f64)
}

/// Exact entries of H_m.
pub fn hilbert_rational(m: usize) -> Vec<Vec<Rational>> {
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| Rational::new(1, (i + j + 1) as i64).unwrap())
                .collect()
        })
        .collect()
}

/// Exact integer entry (i, j) of H_m⁻¹, 1-based:
/// (−1)^(i+j)·(i+j−1)·C(m+i−1, m−j)·C(m+j−1, m−i)·C(i+j−2, i−1)².
pub fn invhilbert_entry(m: usize, i: usize, j: usize) -> BigInt {
    let big = |n: usize| BigInt::from(n);
    let c1 = binomial(big(m + i - 1), big(m - j));
    let c2 = binomial(big(m + j - 1), big(m - i));
    let c3 = binomial(big(i + j - 2), big(i - 1));
    let v = big(i + j - 1) * c1 * c2 * &c3 * &c3;
    if (i + j) % 2 == 1 {
        -v
    } else {
        v
    }
}

/// H_m⁻¹ from the closed form, each exact integer rounded once.
pub fn invhilbert_exact(m: usize) -> Result<Matrix> {
    if m == 0 || m > MAX_INVHILBERT {
        return Err(Error::UnsupportedDimension {
            m,
            max: MAX_INVHILBERT,
        });
    }
    Ok(Matrix::from_fn(m, m, |i, j| {
        Rational::from_integer(invhilbert_entry(m, i + 1, j + 1)).to_nearest_f64()
    }))
}

/// Hilbert system with b = ones, carrying the closed-form inverse.
pub fn hilbert_instance(m: usize) -> TestInstance {
    let mut inst = TestInstance::new("hilbert", hilbert(m), Vector::ones(m), &[("m", m as f64)]);
    inst.known_inverse = invhilbert_exact(m).ok();
    inst
}

/// Hilbert system whose exact solution is all ones: b_i = Σ_j 1/(i+j−1)
/// evaluated exactly and rounded once.
pub fn hilbert_ones_solution(m: usize) -> TestInstance {
    let h = hilbert_rational(m);
    let b = h
        .iter()
        .map(|row| {
            row.iter()
                .fold(Rational::zero(), |s, v| s.add(v))
                .to_nearest_f64()
        })
        .collect();
    let mut inst = TestInstance::new(
        "hilbert_ones",
        hilbert(m),
        Vector::new(b),
        &[("m", m as f64)],
    );
    inst.x_exact = Some(Vector::ones(m));
    inst.known_inverse = invhilbert_exact(m).ok();
    inst
}

/// Unit diagonal, −1 strictly below, ones in the last column. Partial
/// pivoting doubles the last column at every step.
pub fn wilkinson_growth(m: usize) -> Matrix {
    Matrix::from_fn(m, m, |i, j| {
        if j == m - 1 || i == j {
            1.0
        } else if i > j {
            -1.0
        } else {
            0.0
        }
    })
}

/// The L-factor of [`wilkinson_growth`]: unit diagonal, −1 strictly below.
pub fn wilkinson_growth_l(m: usize) -> Matrix {
    Matrix::from_fn(m, m, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => -1.0,
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Less => 0.0,
    })
}

pub fn wilkinson_instance(m: usize, seed: u64) -> TestInstance {
    TestInstance::new(
        "wilkinson",
        wilkinson_growth(m),
        seeded_random_vector(m, seed),
        &[("m", m as f64), ("seed", seed as f64)],
    )
}

/// 4×4 system on which naive inversion is stable although cond(A⁻¹) is
/// of order ε⁻¹; x = (1, ε⁻¹, ε⁻¹, 1).
pub fn skeel4(eps: f64) -> TestInstance {
    let a = Matrix::from_rows(&[
        [1.0, 1.0, -1.0, -1.0],
        [1.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, eps, 0.0],
        [0.0, eps, 0.0, 0.0],
    ]);
    let mut inst = TestInstance::new(
        "skeel4",
        a,
        Vector::new(vec![0.0, 2.0, 1.0, 1.0]),
        &[("eps", eps)],
    );
    let inv_eps = Rational::from_integer(1)
        .div(&Rational::from_f64(eps).expect("finite eps"))
        .map(|q| q.to_nearest_f64())
        .unwrap_or(f64::INFINITY);
    inst.x_exact = Some(Vector::new(vec![1.0, inv_eps, inv_eps, 1.0]));
    inst
}

/// Badly scaled 3×3 system with x = (ε, 1, 1).
pub fn skeel3(eps: f64) -> TestInstance {
    let a = Matrix::from_rows(&[
        [3.0, 2.0, 1.0],
        [2.0, 2.0 * eps, 2.0 * eps],
        [1.0, 2.0 * eps, -eps],
    ]);
    let e = Rational::from_f64(eps).expect("finite eps");
    let three = Rational::from_integer(3);
    let b = vec![
        three.add(&three.mul(&e)).to_nearest_f64(),
        Rational::from_integer(6).mul(&e).to_nearest_f64(),
        Rational::from_integer(2).mul(&e).to_nearest_f64(),
    ];
    let mut inst = TestInstance::new("skeel3", a, Vector::new(b), &[("eps", eps)]);
    inst.x_exact = Some(Vector::new(vec![eps, 1.0, 1.0]));
    inst
}

/// [[ε, 1], [1, 1]]·x = (1, 0): elimination without pivoting breaks down
/// for small ε.
pub fn cancel2(eps: f64) -> TestInstance {
    let a = Matrix::from_rows(&[[eps, 1.0], [1.0, 1.0]]);
    let mut inst = TestInstance::new("cancel2", a, Vector::new(vec![1.0, 0.0]), &[("eps", eps)]);
    // x = (−1, 1)/(1 − ε)
    let one = Rational::from_integer(1);
    let den = one.sub(&Rational::from_f64(eps).expect("finite eps"));
    inst.x_exact = one.div(&den).ok().map(|x| {
        let x = x.to_nearest_f64();
        Vector::new(vec![-x, x])
    });
    inst
}

/// SplitMix64 (Steele, Lea, Flood 2014): state advances by the golden-ratio
/// increment 0x9E3779B97F4A7C15 and is finalized by the MurmurHash3-style
/// mixer with multipliers 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

pub fn seeded_random_vector(m: usize, seed: u64) -> Vector {
    let mut rng = SplitMix64::new(seed);
    Vector::new((0..m).map(|_| rng.next_f64()).collect())
}

/// A gallery family addressable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Family {
    pub name: &'static str,
    pub params: &'static [&'static str],
    pub description: &'static str,
}

pub const FAMILIES: &[Family] = &[
    Family {
        name: "hilbert",
        params: &["m"],
        description: "Hilbert matrix H_m, b = ones, closed-form inverse for m <= 20",
    },
    Family {
        name: "hilbert_ones",
        params: &["m"],
        description: "Hilbert matrix H_m with exact solution ones",
    },
    Family {
        name: "wilkinson",
        params: &["m", "seed"],
        description: "Wilkinson growth matrix, b from SplitMix64 (default seed 42)",
    },
    Family {
        name: "skeel4",
        params: &["eps"],
        description: "4x4 system where naive inversion is stable, x = (1, 1/eps, 1/eps, 1)",
    },
    Family {
        name: "skeel3",
        params: &["eps"],
        description: "badly scaled 3x3 system, x = (eps, 1, 1)",
    },
    Family {
        name: "cancel2",
        params: &["eps"],
        description: "[[eps, 1], [1, 1]] x = (1, 0), small pivot without pivoting",
    },
];

pub fn family(name: &str) -> Option<&'static Family> {
    FAMILIES.iter().find(|f| f.name == name)
}

/// Parses `name:key=value,...` into the family name and raw parameters.
pub fn parse_spec(spec: &str) -> Result<(String, BTreeMap<String, String>)> {
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), r.trim()),
        None => (spec.trim(), ""),
    };
    if name.is_empty() {
        return Err(Error::Config(format!("empty instance name in {spec:?}")));
    }
    let mut params = BTreeMap::new();
    for kv in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {kv:?}")))?;
        if params
            .insert(k.trim().to_string(), v.trim().to_string())
            .is_some()
        {
            return Err(Error::Config(format!("parameter {k:?} given twice")));
        }
    }
    Ok((name.to_string(), params))
}

/// Parses a parameter value: a decimal literal, `u` for the unit roundoff
/// 2⁻⁵³, or a power of two written `2^k`.
pub fn parse_value(v: &str) -> Result<f64> {
    let v = v.trim();
    if v == "u" {
        return Ok(crate::diagnostics::UNIT_ROUNDOFF);
    }
    if let Some(k) = v.strip_prefix("2^") {
        let k: i32 = k
            .parse()
            .map_err(|_| Error::Config(format!("bad exponent in {v:?}")))?;
        return Ok(2f64.powi(k));
    }
    v.parse::<f64>()
        .map_err(|_| Error::Config(format!("bad parameter value {v:?}")))
}

fn integer_param(v: f64, key: &str) -> Result<usize> {
    if v.fract() != 0.0 || !(1.0..=1e6).contains(&v) {
        return Err(Error::Config(format!(
            "{key} must be a positive integer, got {v}"
        )));
    }
    Ok(v as usize)
}

/// Builds a gallery instance from its family name and numeric parameters.
pub fn build(
    name: &str,
    params: &BTreeMap<String, f64>,
    seed: Option<u64>,
) -> Result<TestInstance> {
    let fam =
        family(name).ok_or_else(|| Error::Config(format!("unknown instance family {name:?}")))?;
    if let Some(k) = params.keys().find(|k| !fam.params.contains(&k.as_str())) {
        return Err(Error::Config(format!("{name} has no parameter {k:?}")));
    }
    let get = |k: &str| {
        params
            .get(k)
            .copied()
            .ok_or_else(|| Error::Config(format!("{name} needs parameter {k}")))
    };
    let eps = || -> Result<f64> {
        let e = get("eps")?;
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::Config(format!("eps must lie in (0, 1), got {e}")));
        }
        Ok(e)
    };
    Ok(match name {
        "hilbert" => hilbert_instance(integer_param(get("m")?, "m")?),
        "hilbert_ones" => hilbert_ones_solution(integer_param(get("m")?, "m")?),
        "wilkinson" => {
            let seed = match params.get("seed") {
                Some(&s) => integer_param(s + 1.0, "seed")? as u64 - 1,
                None => seed.unwrap_or(DEFAULT_SEED),
            };
            wilkinson_instance(integer_param(get("m")?, "m")?, seed)
        }
        "skeel4" => skeel4(eps()?),
        "skeel3" => skeel3(eps()?),
        "cancel2" => cancel2(eps()?),
        _ => unreachable!("family table and constructors agree"),
    })
}

/// Parses and builds a gallery spec such as `hilbert:m=20` or
/// `skeel3:eps=1e-4`.
pub fn instance_from_spec(spec: &str, seed: Option<u64>) -> Result<TestInstance> {
    let (name, raw) = parse_spec(spec)?;
    let params = raw
        .iter()
        .map(|(k, v)| Ok((k.clone(), parse_value(v)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    build(&name, &params, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extprec::rational_residual;

    fn rational_matrix(a: &Matrix) -> Vec<Vec<Rational>> {
        (0..a.rows())
            .map(|i| {
                a.row(i)
                    .iter()
                    .map(|&v| Rational::from_f64(v).unwrap())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn hilbert_small() {
        assert_eq!(hilbert(1), Matrix::from_rows(&[[1.0]]));
        assert_eq!(
            hilbert(2),
            Matrix::from_rows(&[[1.0, 0.5], [0.5, 1.0 / 3.0]])
        );
        assert!(hilbert(7).is_symmetric());
    }

    #[test]
    fn hilbert_20_norm_is_rounded_harmonic_sum() {
        let harmonic = (1..=20)
            .map(|j| Rational::new(1, j).unwrap())
            .fold(Rational::zero(), |s, v| s.add(&v));
        let exact = harmonic.to_nearest_f64();
        let got = hilbert(20).inf_norm();
        assert!((got - exact).abs() <= 20.0 * f64::EPSILON * exact);
        assert!((exact - 3.597739657143682).abs() < 1e-15);
    }

    #[test]
    fn invhilbert_small_and_errors() {
        assert_eq!(invhilbert_exact(1).unwrap(), Matrix::from_rows(&[[1.0]]));
        assert_eq!(
            invhilbert_exact(2).unwrap(),
            Matrix::from_rows(&[[4.0, -6.0], [-6.0, 12.0]])
        );
        assert_eq!(
            invhilbert_exact(21),
            Err(Error::UnsupportedDimension { m: 21, max: 20 })
        );
        assert!(invhilbert_exact(0).is_err());
    }

    #[test]
    fn invhilbert_is_exact_inverse() {
        for m in 1..=8 {
            let h = hilbert_rational(m);
            let inv: Vec<Vec<BigInt>> = (1..=m)
                .map(|i| (1..=m).map(|j| invhilbert_entry(m, i, j)).collect())
                .collect();
            for (i, row) in h.iter().enumerate() {
                for j in 0..m {
                    let s = row
                        .iter()
                        .zip(&inv)
                        .fold(Rational::zero(), |s, (hk, inv_k)| {
                            s.add(&hk.mul(&Rational::from_integer(inv_k[j].clone())))
                        });
                    let expected = if i == j { 1 } else { 0 };
                    assert_eq!(s, Rational::from_integer(expected), "m={m} ({i},{j})");
                }
            }
            // below 2^53 every entry is an exactly representable integer
            let rounded = invhilbert_exact(m).unwrap();
            for i in 0..m {
                for j in 0..m {
                    assert_eq!(
                        Rational::from_f64(rounded[(i, j)]).unwrap(),
                        Rational::from_integer(inv[i][j].clone())
                    );
                }
            }
        }
    }

    #[test]
    fn wilkinson_shape() {
        assert_eq!(
            wilkinson_growth(3),
            Matrix::from_rows(&[[1.0, 0.0, 1.0], [-1.0, 1.0, 1.0], [-1.0, -1.0, 1.0]])
        );
        assert_eq!(
            crate::diagnostics::cond_inverse(&wilkinson_growth_l(12), crate::matrix::Norm::Inf)
                .unwrap(),
            4095.0
        );
    }

    #[test]
    fn instances_solve_exactly_in_rationals() {
        let eps = 2f64.powi(-20);
        for inst in [
            skeel4(eps),
            skeel3(eps),
            skeel3(0.25),
            skeel4(0.5),
            cancel2(0.25),
        ] {
            let x = inst.x_exact.as_ref().unwrap();
            let r = rational_residual(&inst.a, &inst.b, x);
            if inst.name == "cancel2" {
                // x = (−4/3, 4/3) is not representable; the residual is only tiny
                let tol = Rational::from_integer(1).mul_pow2(-50);
                assert!(r.iter().all(|v| v.abs() < tol));
            } else {
                assert!(r.iter().all(Rational::is_zero), "{}", inst.name);
            }
        }
        let h = hilbert_ones_solution(5);
        let hb = rational_matrix(&h.a);
        assert_eq!(hb.len(), 5);
    }

    #[test]
    fn cancel2_exact_solution_near_minus_one_one() {
        let inst = cancel2(crate::diagnostics::UNIT_ROUNDOFF);
        let x = inst.x_exact.unwrap();
        assert!((x[0] + 1.0).abs() <= 2.0 * f64::EPSILON);
        assert!((x[1] - 1.0).abs() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn seeded_vectors() {
        assert_eq!(seeded_random_vector(5, 42), seeded_random_vector(5, 42));
        assert_ne!(seeded_random_vector(5, 42), seeded_random_vector(5, 43));
        let v = seeded_random_vector(1000, 3);
        assert!(v.iter().all(|&x| (0.0..1.0).contains(&x)));
        // first output for seed 0 as published with the reference generator
        assert_eq!(SplitMix64::new(0).next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(seeded_random_vector(3, 42).as_slice(), &GOLDEN_SEED_42);
    }

    // frozen from a reference implementation outside this crate
    const GOLDEN_SEED_42: [f64; 3] = [0.7415648787718233, 0.1599103928769201, 0.27860113025513866];

    #[test]
    fn spec_parsing() {
        let inst = instance_from_spec("hilbert:m=20", None).unwrap();
        assert_eq!(inst.a.rows(), 20);
        assert!(inst.known_inverse.is_some());
        let inst = instance_from_spec("skeel3:eps=1e-4", None).unwrap();
        assert_eq!(inst.parameters["eps"], 1e-4);
        let inst = instance_from_spec("cancel2:eps=u", None).unwrap();
        assert_eq!(inst.parameters["eps"], 2f64.powi(-53));
        let inst = instance_from_spec("skeel4: eps = 2^-20", None).unwrap();
        assert_eq!(inst.parameters["eps"], 2f64.powi(-20));
        let w = instance_from_spec("wilkinson:m=5", Some(7)).unwrap();
        assert_eq!(w.b, seeded_random_vector(5, 7));
        let w = instance_from_spec("wilkinson:m=5,seed=9", Some(7)).unwrap();
        assert_eq!(w.b, seeded_random_vector(5, 9));
        for bad in [
            "nope:m=3",
            "hilbert",
            "hilbert:m=2.5",
            "hilbert:m=3,q=1",
            "skeel3:eps=2",
            "skeel3:eps",
            ":m=1",
            "hilbert:m=1,m=2",
        ] {
            assert!(
                matches!(instance_from_spec(bad, None), Err(Error::Config(_))),
                "{bad}"
            );
        }
    }
}
