//! Problem files (JSON) and trace files (CSV).
//!
//! See `docs/problem_format.md` for the problem schema.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::problem::{ImplicitClass, LinearConstraint, Problem, QuadraticForm, SmoothFunction};
use crate::prox::{BoxBounds, Piece, ProxFunction, ProxKind};
use crate::solvers::Trace;
use crate::{Error, Matrix, Result, Vector};

pub const TRACE_HEADER: [&str; 8] = [
    "k",
    "objective",
    "feasibility",
    "stationarity",
    "lyapunov",
    "lambda_norm",
    "xz_gap",
    "wall_time",
];

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    objective: ObjectiveSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    implicit_class: Option<ClassSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectiveSpec {
    #[serde(default)]
    smooth: Option<SmoothSpec>,
    prox: ProxSpec,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum SmoothSpec {
    Quadratic {
        q: Vec<Vec<f64>>,
        r: Vec<f64>,
        #[serde(default)]
        c: f64,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ProxSpec {
    Zero {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        implicit_class: Option<ClassSpec>,
    },
    Quadratic {
        q: Vec<Vec<f64>>,
        r: Vec<f64>,
        #[serde(default)]
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        implicit_class: Option<ClassSpec>,
    },
    Box {
        lower: Vec<Option<f64>>,
        upper: Vec<Option<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        implicit_class: Option<ClassSpec>,
    },
    L1 {
        weight: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        implicit_class: Option<ClassSpec>,
    },
    Scad {
        lambda: f64,
        a: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        implicit_class: Option<ClassSpec>,
    },
    Mcp {
        lambda: f64,
        a: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        implicit_class: Option<ClassSpec>,
    },
    PointwiseMin {
        pieces: Vec<PieceSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        implicit_class: Option<ClassSpec>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceSpec {
    q: Vec<Vec<f64>>,
    r: Vec<f64>,
    #[serde(default)]
    c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lower: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    upper: Option<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ClassSpec {
    LipschitzSubgradient { constant: f64 },
    BoundedSubgradient { constant: f64 },
    Unknown,
}

impl From<ClassSpec> for ImplicitClass {
    fn from(c: ClassSpec) -> Self {
        match c {
            ClassSpec::LipschitzSubgradient { constant } => ImplicitClass::LipschitzSubgradient(constant),
            ClassSpec::BoundedSubgradient { constant } => ImplicitClass::BoundedSubgradient(constant),
            ClassSpec::Unknown => ImplicitClass::Unknown,
        }
    }
}

impl From<ImplicitClass> for ClassSpec {
    fn from(c: ImplicitClass) -> Self {
        match c {
            ImplicitClass::LipschitzSubgradient(constant) => ClassSpec::LipschitzSubgradient { constant },
            ImplicitClass::BoundedSubgradient(constant) => ClassSpec::BoundedSubgradient { constant },
            ImplicitClass::Unknown => ClassSpec::Unknown,
        }
    }
}

fn schema(location: impl Into<String>, e: impl ToString) -> Error {
    Error::Schema {
        location: location.into(),
        message: e.to_string(),
    }
}

fn matrix(rows: &[Vec<f64>], field: &str) -> Result<Matrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(schema(field, "matrix must be non-empty"));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(schema(
            format!("{field}[{i}]"),
            format!("row has {} entries, expected {ncols}", rows[i].len()),
        ));
    }
    Ok(Matrix::from_row_iterator(nrows, ncols, rows.iter().flatten().copied()))
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn bound_vec(v: &[Option<f64>], missing: f64) -> Vec<f64> {
    v.iter().map(|x| x.unwrap_or(missing)).collect()
}

fn bound_spec(v: &Vector) -> Vec<Option<f64>> {
    v.iter().map(|x| x.is_finite().then_some(*x)).collect()
}

fn quadratic(q: &[Vec<f64>], r: &[f64], c: f64, field: &str) -> Result<QuadraticForm> {
    let qm = matrix(q, &format!("{field}.q"))?;
    QuadraticForm::new(qm, Vector::from_row_slice(r), c).map_err(|e| schema(field, e))
}

fn build_prox(spec: ProxSpec) -> Result<ProxFunction> {
    let field = "objective.prox";
    let wrap = |r: Result<ProxFunction>| r.map_err(|e| schema(field, e));
    let (g, class) = match spec {
        ProxSpec::Zero { implicit_class } => (ProxFunction::zero(), implicit_class),
        ProxSpec::Quadratic {
            q,
            r,
            c,
            implicit_class,
        } => (ProxFunction::quadratic(quadratic(&q, &r, c, field)?), implicit_class),
        ProxSpec::Box {
            lower,
            upper,
            implicit_class,
        } => (
            wrap(ProxFunction::box_indicator(
                bound_vec(&lower, f64::NEG_INFINITY),
                bound_vec(&upper, f64::INFINITY),
            ))?,
            implicit_class,
        ),
        ProxSpec::L1 { weight, implicit_class } => (wrap(ProxFunction::l1(weight))?, implicit_class),
        ProxSpec::Scad {
            lambda,
            a,
            implicit_class,
        } => (wrap(ProxFunction::scad(lambda, a))?, implicit_class),
        ProxSpec::Mcp {
            lambda,
            a,
            implicit_class,
        } => (wrap(ProxFunction::mcp(lambda, a))?, implicit_class),
        ProxSpec::PointwiseMin {
            pieces,
            rho,
            implicit_class,
        } => {
            let mut out = Vec::with_capacity(pieces.len());
            for (i, p) in pieces.into_iter().enumerate() {
                let loc = format!("{field}.pieces[{i}]");
                let form = quadratic(&p.q, &p.r, p.c, &loc)?;
                let n = form.dim();
                let bounds = match (p.lower, p.upper) {
                    (None, None) => None,
                    (lo, hi) => {
                        let lo = lo.map_or(vec![f64::NEG_INFINITY; n], |v| bound_vec(&v, f64::NEG_INFINITY));
                        let hi = hi.map_or(vec![f64::INFINITY; n], |v| bound_vec(&v, f64::INFINITY));
                        Some(BoxBounds::new(lo, hi).map_err(|e| schema(&loc, e))?)
                    }
                };
                out.push(Piece { form, bounds });
            }
            (wrap(ProxFunction::pointwise_min(out, rho))?, implicit_class)
        }
    };
    Ok(match class {
        Some(c) => g.with_implicit_class(c.into()),
        None => g,
    })
}

fn prox_spec(g: &ProxFunction) -> ProxSpec {
    let implicit_class = g.declared_class().map(ClassSpec::from);
    match g.kind() {
        ProxKind::Zero => ProxSpec::Zero { implicit_class },
        ProxKind::Quadratic(qf) => ProxSpec::Quadratic {
            q: rows_of(qf.q()),
            r: qf.r().iter().copied().collect(),
            c: qf.c(),
            implicit_class,
        },
        ProxKind::Box(b) => ProxSpec::Box {
            lower: bound_spec(b.lower()),
            upper: bound_spec(b.upper()),
            implicit_class,
        },
        ProxKind::L1 { weight } => ProxSpec::L1 {
            weight: *weight,
            implicit_class,
        },
        ProxKind::Scad { lambda, a } => ProxSpec::Scad {
            lambda: *lambda,
            a: *a,
            implicit_class,
        },
        ProxKind::Mcp { lambda, a } => ProxSpec::Mcp {
            lambda: *lambda,
            a: *a,
            implicit_class,
        },
        ProxKind::PointwiseMin(pieces) => ProxSpec::PointwiseMin {
            pieces: pieces
                .iter()
                .map(|p| PieceSpec {
                    q: rows_of(p.form.q()),
                    r: p.form.r().iter().copied().collect(),
                    c: p.form.c(),
                    lower: p.bounds.as_ref().map(|b| bound_spec(b.lower())),
                    upper: p.bounds.as_ref().map(|b| bound_spec(b.upper())),
                })
                .collect(),
            rho: Some(g.rho()),
            implicit_class,
        },
    }
}

/// Parses a problem from JSON text.
pub fn parse_problem(text: &str) -> Result<Problem> {
    let file: ProblemFile =
        serde_json::from_str(text).map_err(|e| schema(format!("line {}, column {}", e.line(), e.column()), e))?;
    let a = matrix(&file.a, "A")?;
    let constraint = LinearConstraint::new(a, Vector::from_vec(file.b)).map_err(|e| schema("A, b", e))?;
    let g = build_prox(file.objective.prox)?;
    let problem = match file.objective.smooth {
        None => Problem::pure(constraint, g),
        Some(SmoothSpec::Quadratic { q, r, c }) => {
            let h = quadratic(&q, &r, c, "objective.smooth")?;
            Problem::composite(constraint, SmoothFunction::Quadratic(h), g)
        }
    }
    .map_err(|e| schema("objective", e))?;
    Ok(match file.implicit_class {
        Some(c) => problem.with_implicit_class(c.into()),
        None => problem,
    })
}

pub fn load_problem(path: &Path) -> Result<Problem> {
    parse_problem(&fs::read_to_string(path)?)
}

/// Serializes a problem; custom smooth parts have no file representation.
pub fn problem_to_json(problem: &Problem) -> Result<String> {
    let smooth = match &problem.smooth {
        None => None,
        Some(SmoothFunction::Quadratic(qf)) => Some(SmoothSpec::Quadratic {
            q: rows_of(qf.q()),
            r: qf.r().iter().copied().collect(),
            c: qf.c(),
        }),
        Some(SmoothFunction::Custom(_)) => {
            return Err(Error::invalid("smooth", "custom smooth functions cannot be serialized"));
        }
    };
    let file = ProblemFile {
        a: rows_of(problem.constraint.a()),
        b: problem.constraint.b().iter().copied().collect(),
        objective: ObjectiveSpec {
            smooth,
            prox: prox_spec(&problem.prox_part),
        },
        implicit_class: Some(problem.implicit_class().into()),
    };
    serde_json::to_string_pretty(&file).map_err(|e| schema("problem", e))
}

pub fn save_problem(problem: &Problem, path: &Path) -> Result<()> {
    fs::write(path, problem_to_json(problem)?)?;
    Ok(())
}

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn write_trace<W: std::io::Write>(trace: &Trace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in &trace.rows {
        w.write_record([
            r.k.to_string(),
            fmt_float(r.objective),
            fmt_float(r.feasibility),
            fmt_float(r.stationarity),
            r.lyapunov.map(fmt_float).unwrap_or_default(),
            fmt_float(r.lambda_norm),
            fmt_float(r.xz_gap),
            fmt_float(r.wall_time),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trace(trace: &Trace, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    write_trace(trace, fs::File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_nulls_mean_unbounded() {
        let text = r#"{"A": [[1, -1]], "b": [0],
            "objective": {"smooth": {"kind": "quadratic", "q": [[2, 0], [0, -2]], "r": [0, 0]},
                          "prox": {"kind": "box", "lower": [-1, null], "upper": [1, null]}}}"#;
        let p = parse_problem(text).unwrap();
        match p.prox_part.kind() {
            ProxKind::Box(b) => {
                assert_eq!(b.lower()[1], f64::NEG_INFINITY);
                assert_eq!(b.upper()[1], f64::INFINITY);
            }
            other => panic!("unexpected kind {other:?}"),
        }
    }

    #[test]
    fn truncated_file_is_a_schema_error() {
        let err = parse_problem(r#"{"A": [[1, 0]], "b": "#).unwrap_err();
        assert!(matches!(err, Error::Schema { ref location, .. } if location.starts_with("line 1")));
    }

    #[test]
    fn ragged_matrix_names_the_row() {
        let err =
            parse_problem(r#"{"A": [[1, 0], [1]], "b": [0, 0], "objective": {"prox": {"kind": "zero"}}}"#).unwrap_err();
        assert!(matches!(err, Error::Schema { ref location, .. } if location == "A[1]"));
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let err = parse_problem(r#"{"A": [[1]], "b": [0], "objective": {"prox": {"kind": "huber"}}}"#).unwrap_err();
        assert!(matches!(err, Error::Schema { .. }));
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 26.0, 1e-300, -3.5e12, 0.0401] {
            assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
        }
    }
}
