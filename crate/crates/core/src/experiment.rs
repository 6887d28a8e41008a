//! End-to-end experiments: solve a gallery instance, measure its backward
//! errors and set them against the model bounds; sweep a parameter for the
//! refinement study; tabulate the scalar case study.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{
    self, backward_error_report, ext_f64, ext_f64_seq, model_analysis, refinement_premise, Factors,
    ModelBounds, ModelQuantities, ResidualMode,
};
use crate::error::{Error, Result};
use crate::factor::{cholesky, cholesky_solve, invert, lu_factor, lu_solve, PivotStrategy};
use crate::gallery::{instance_from_spec, TestInstance};
use crate::matrix::{Matrix, Norm, Vector};
use crate::refine::{refine, RefinementTrace};
use crate::scalar::{eval_naive_log2_1px, eval_stable_log2_1px, forward_error_log2_1px};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Solver {
    #[serde(rename = "naive")]
    Naive,
    #[serde(rename = "ge-nopivot")]
    GeNoPivot,
    #[serde(rename = "ge-partial")]
    GePartial,
    #[serde(rename = "cholesky")]
    Cholesky,
}

impl Solver {
    pub const NAMES: [&'static str; 4] = ["naive", "ge-nopivot", "ge-partial", "cholesky"];

    pub fn pivot_strategy(self) -> Option<PivotStrategy> {
        match self {
            Solver::GeNoPivot => Some(PivotStrategy::NoPivot),
            Solver::GePartial => Some(PivotStrategy::Partial),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Solver::Naive => "naive",
            Solver::GeNoPivot => "ge-nopivot",
            Solver::GePartial => "ge-partial",
            Solver::Cholesky => "cholesky",
        }
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "naive" => Ok(Solver::Naive),
            "ge-nopivot" | "nopivot" => Ok(Solver::GeNoPivot),
            "ge-partial" | "partial" | "ge" => Ok(Solver::GePartial),
            "cholesky" => Ok(Solver::Cholesky),
            _ => Err(Error::Config(format!(
                "unknown solver {s:?}, expected one of {}",
                Solver::NAMES.join(", ")
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Gallery spec (`skeel3:eps=1e-4`) or `file:PATH` for a matrix in the
    /// text format, solved with b = ones.
    pub instance: String,
    pub solver: Solver,
    pub refinement_steps: usize,
    /// `None` picks the documented default: double-double for measuring
    /// backward errors, working precision for refinement corrections.
    pub residual_mode: Option<ResidualMode>,
    /// `None` means ‖·‖∞, or ‖·‖₂ for Cholesky.
    pub norm: Option<Norm>,
    pub output: OutputFormat,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn new(instance: impl Into<String>, solver: Solver) -> Self {
        ExperimentConfig {
            instance: instance.into(),
            solver,
            refinement_steps: 0,
            residual_mode: None,
            norm: None,
            output: OutputFormat::Json,
            seed: None,
        }
    }

    pub fn norm(&self) -> Norm {
        self.norm.unwrap_or(match self.solver {
            Solver::Cholesky => Norm::Two,
            _ => Norm::Inf,
        })
    }

    pub fn measure_mode(&self) -> ResidualMode {
        self.residual_mode.unwrap_or(ResidualMode::DoubleDouble)
    }

    pub fn correction_mode(&self) -> ResidualMode {
        self.residual_mode.unwrap_or(ResidualMode::Working)
    }

    /// Checks the combinations that make no sense before any work is done.
    pub fn validate(&self, inst: &TestInstance) -> Result<()> {
        if self.solver == Solver::Cholesky && !inst.a.is_symmetric() {
            return Err(Error::Config(format!(
                "cholesky needs a symmetric matrix, {} is not",
                inst.name
            )));
        }
        if self.refinement_steps > 0 && self.solver.pivot_strategy().is_none() {
            return Err(Error::Config(format!(
                "refinement reuses LU factors and is not available for the {} solver",
                self.solver.name()
            )));
        }
        Ok(())
    }
}

/// Loads a gallery instance or a matrix file.
pub fn load_instance(spec: &str, seed: Option<u64>) -> Result<TestInstance> {
    match spec.strip_prefix("file:") {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {path}: {e}")))?;
            let a = Matrix::from_text(&text)?;
            if !a.is_square() {
                return Err(Error::DimensionMismatch(format!(
                    "{}x{} matrix is not square",
                    a.rows(),
                    a.cols()
                )));
            }
            let m = a.rows();
            Ok(TestInstance {
                name: path.to_string(),
                a,
                b: Vector::ones(m),
                x_exact: None,
                parameters: BTreeMap::new(),
                known_inverse: None,
            })
        }
        None => instance_from_spec(spec, seed),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Premise {
    #[serde(with = "ext_f64")]
    pub value: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementReport {
    #[serde(with = "ext_f64_seq")]
    pub omegas: Vec<f64>,
    pub steps: usize,
    pub residual_mode: ResidualMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// The JSON document emitted by `run`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub instance: String,
    pub parameters: BTreeMap<String, f64>,
    pub solver: Solver,
    pub dimension: usize,
    #[serde(with = "ext_f64")]
    pub eta: f64,
    #[serde(with = "ext_f64")]
    pub omega: f64,
    #[serde(flatten)]
    pub quantities: ModelQuantities,
    pub bounds: ModelBounds,
    pub premise: Option<Premise>,
    pub residual_mode: ResidualMode,
    pub norm: Norm,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refinement: Option<RefinementReport>,
    #[serde(skip)]
    pub solution: Vector,
    #[serde(skip)]
    pub trace: Option<RefinementTrace>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report fields serialize")
    }

    /// One header line and one value line with the scalar fields.
    pub fn to_csv(&self) -> String {
        let q = &self.quantities;
        let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        let (pv, ph) = match &self.premise {
            Some(p) => (fmt_num(p.value), p.holds.to_string()),
            None => (String::new(), String::new()),
        };
        let omega_1 = self
            .refinement
            .as_ref()
            .and_then(|r| r.omegas.get(1).copied());
        format!(
            "instance,solver,eta,omega,gamma_naive,gamma_growth,cond_L_inv,cond_A_inv,skeel_cond_A,sigma,omega_1,premise_value,premise_holds,residual_mode,norm\n\
             {},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            csv_field(&self.instance),
            self.solver.name(),
            fmt_num(self.eta),
            fmt_num(self.omega),
            fmt_num(q.gamma_naive),
            opt(q.gamma_growth),
            opt(q.cond_l_inv),
            fmt_num(q.cond_a_inv),
            fmt_num(q.skeel_cond_a),
            fmt_num(q.sigma),
            opt(omega_1),
            pv,
            ph,
            self.residual_mode,
            self.norm,
        )
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Shortest round-trip scientific notation; byte-stable for a given value.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:e}")
    }
}

pub fn run(config: &ExperimentConfig) -> Result<Report> {
    let inst = load_instance(&config.instance, config.seed)?;
    run_instance(&inst, config)
}

pub fn run_instance(inst: &TestInstance, config: &ExperimentConfig) -> Result<Report> {
    config.validate(inst)?;
    let (a, b) = (&inst.a, &inst.b);
    let norm = config.norm();
    let computed_inverse;
    let a_inv = match &inst.known_inverse {
        Some(inv) => inv,
        None => {
            computed_inverse = invert(a, PivotStrategy::Partial)?;
            &computed_inverse
        }
    };

    let (x, lu, chol) = match config.solver {
        Solver::Naive => (a_inv.matvec(b)?, None, None),
        Solver::GeNoPivot | Solver::GePartial => {
            let f = lu_factor(a, config.solver.pivot_strategy().unwrap())?;
            (lu_solve(&f, b)?, Some(f), None)
        }
        Solver::Cholesky => {
            let c = cholesky(a)?;
            (cholesky_solve(&c, b)?, None, Some(c))
        }
    };
    let factors = match (&lu, &chol) {
        (Some(f), _) => Factors::Lu(f),
        (_, Some(c)) => Factors::Cholesky(&c.l),
        _ => Factors::None,
    };

    let errors = backward_error_report(a, b, &x, config.measure_mode(), norm)?;
    let (quantities, mut bounds) = model_analysis(a, b, &x, factors, Some(a_inv), norm)?;

    let mut trace = None;
    let mut refinement = None;
    if let Some(f) = &lu {
        if config.refinement_steps > 0 {
            let t = refine(
                a,
                f,
                b,
                &x,
                config.refinement_steps,
                config.correction_mode(),
            )?;
            // the premise and the refined bound are statements about ỹ
            let y = &t.iterates[1];
            let (value, holds) = refinement_premise(&f.l, a, y)?;
            bounds.refinement_premise_value = Some(value);
            bounds.refinement_premise_holds = Some(holds);
            bounds.bound_omega_refined = Some(diagnostics::bound_omega_refined(&f.l, a, y)?);
            refinement = Some(RefinementReport {
                omegas: t.omegas.clone(),
                steps: t.steps(),
                residual_mode: t.residual_mode,
                note: (t.steps() > 1).then(|| {
                    "the model analyses a single refinement step; later steps are reported without bounds"
                        .to_string()
                }),
            });
            trace = Some(t);
        }
    }
    let premise = bounds
        .refinement_premise_value
        .zip(bounds.refinement_premise_holds)
        .map(|(value, holds)| Premise { value, holds });

    Ok(Report {
        instance: inst.name.clone(),
        parameters: inst.parameters.clone(),
        solver: config.solver,
        dimension: a.rows(),
        eta: errors.eta,
        omega: errors.omega,
        quantities,
        bounds,
        premise,
        residual_mode: errors.residual_mode,
        norm,
        refinement,
        solution: x,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Log,
    Linear,
}

/// `points` values from `lo` to `hi`. With `centered` the values sit in the
/// middle of `points` equal cells instead of on the cell boundaries, so the
/// end points themselves are excluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub spacing: Spacing,
    pub centered: bool,
}

impl Grid {
    pub fn log(lo: f64, hi: f64, points: usize) -> Self {
        Grid {
            lo,
            hi,
            points,
            spacing: Spacing::Log,
            centered: false,
        }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points == 0 || !self.lo.is_finite() || !self.hi.is_finite() || self.lo > self.hi {
            return Err(Error::Config(format!(
                "bad grid [{}, {}] with {} points",
                self.lo, self.hi, self.points
            )));
        }
        if self.spacing == Spacing::Log && self.lo <= 0.0 {
            return Err(Error::Config("a log grid needs positive bounds".into()));
        }
        let (lo, hi) = match self.spacing {
            Spacing::Log => (self.lo.log10(), self.hi.log10()),
            Spacing::Linear => (self.lo, self.hi),
        };
        let n = self.points;
        let t = |i: usize| -> f64 {
            if self.centered {
                (i as f64 + 0.5) / n as f64
            } else if n == 1 {
                0.0
            } else {
                i as f64 / (n - 1) as f64
            }
        };
        Ok((0..n)
            .map(|i| {
                if !self.centered && i == 0 {
                    return self.lo;
                }
                if !self.centered && i == n - 1 {
                    return self.hi;
                }
                let s = lo + (hi - lo) * t(i);
                match self.spacing {
                    Spacing::Log => 10f64.powf(s),
                    Spacing::Linear => s,
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub parameter: f64,
    pub omega_0: f64,
    pub omega_1: f64,
    pub premise_value: f64,
    pub premise_holds: bool,
}

pub const SWEEP_HEADER: &str = "parameter,omega_0,omega_1,premise_value,premise_holds";

/// Solves, refines once (or `refinement_steps` times) and records ω before
/// and after the first step together with the refinement premise at ỹ.
pub fn sweep_point(
    inst: &TestInstance,
    parameter: f64,
    config: &ExperimentConfig,
) -> Result<SweepRow> {
    let strategy = config.solver.pivot_strategy().ok_or_else(|| {
        Error::Config(format!(
            "a refinement sweep needs an LU solver, not {}",
            config.solver.name()
        ))
    })?;
    let f = lu_factor(&inst.a, strategy)?;
    let x = lu_solve(&f, &inst.b)?;
    let t = refine(
        &inst.a,
        &f,
        &inst.b,
        &x,
        config.refinement_steps.max(1),
        config.correction_mode(),
    )?;
    let (premise_value, premise_holds) = refinement_premise(&f.l, &inst.a, &t.iterates[1])?;
    Ok(SweepRow {
        parameter,
        omega_0: t.omegas[0],
        omega_1: t.omegas[1],
        premise_value,
        premise_holds,
    })
}

/// Evaluates `make` at every grid value in parallel; rows come back in grid
/// order.
pub fn sweep_with<F>(make: F, grid: &Grid, config: &ExperimentConfig) -> Result<Vec<SweepRow>>
where
    F: Fn(f64) -> Result<TestInstance> + Sync,
{
    grid.values()?
        .par_iter()
        .map(|&p| sweep_point(&make(p)?, p, config))
        .collect()
}

/// Sweeps a gallery spec whose single free parameter is written `?`, e.g.
/// `skeel3:eps=?`.
pub fn sweep(spec: &str, grid: &Grid, config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let free = spec.matches('?').count();
    if free != 1 {
        return Err(Error::Config(format!(
            "sweep spec needs exactly one free parameter written '?', found {free} in {spec:?}"
        )));
    }
    let seed = config.seed;
    sweep_with(
        |p| instance_from_spec(&spec.replace('?', &format!("{p:e}")), seed),
        grid,
        config,
    )
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_num(r.parameter),
            fmt_num(r.omega_0),
            fmt_num(r.omega_1),
            fmt_num(r.premise_value),
            r.premise_holds
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarRow {
    pub x: f64,
    pub err_naive: f64,
    pub err_stable: f64,
}

pub const SCALAR_HEADER: &str = "x,err_naive,err_stable";

/// Relative forward errors of the naive and the stable evaluation of
/// log²(1 + x) against the double-double reference.
pub fn scalar_demo(grid: &Grid) -> Result<Vec<ScalarRow>> {
    if grid.lo <= -1.0 {
        return Err(Error::Config(format!(
            "scalar demo needs x > -1, grid starts at {}",
            grid.lo
        )));
    }
    grid.values()?
        .into_iter()
        .map(|x| {
            Ok(ScalarRow {
                x,
                err_naive: forward_error_log2_1px(x, eval_naive_log2_1px(x)?)?,
                err_stable: forward_error_log2_1px(x, eval_stable_log2_1px(x)?)?,
            })
        })
        .collect()
}

/// The grid used by the command line: logarithmic for positive ranges,
/// linear otherwise.
pub fn scalar_grid(xmin: f64, xmax: f64, points: usize, centered: bool) -> Result<Grid> {
    if !(xmin > -1.0 && xmin < xmax) {
        return Err(Error::Config(format!(
            "need -1 < xmin < xmax, got [{xmin}, {xmax}]"
        )));
    }
    Ok(Grid {
        lo: xmin,
        hi: xmax,
        points,
        spacing: if xmin > 0.0 {
            Spacing::Log
        } else {
            Spacing::Linear
        },
        centered,
    })
}

pub fn scalar_csv(rows: &[ScalarRow]) -> String {
    let mut out = String::from(SCALAR_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_num(r.x),
            fmt_num(r.err_naive),
            fmt_num(r.err_stable)
        );
    }
    out
}

/// One line per gallery family.
pub fn gallery_listing() -> String {
    let mut out = String::new();
    for f in crate::gallery::FAMILIES {
        let params: Vec<String> = f.params.iter().map(|p| format!("{p}=…")).collect();
        let _ = writeln!(
            out,
            "{:<28} {}",
            format!("{}:{}", f.name, params.join(",")),
            f.description
        );
    }
    out
}
