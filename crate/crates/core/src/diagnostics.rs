//! Brute-force oracles and numerical certifiers.
//!
//! None of these share code with the solvers' closed forms: the prox oracle
//! is a grid search, the QP oracle enumerates active sets, and gradients are
//! checked by central differences.

use crate::problem::{LinearConstraint, Problem, QuadraticForm, SmoothFunction};
use crate::prox::{BoxBounds, Piece, ProxFunction, ProxKind};
use crate::rng::UniformStream;
use crate::solvers::Trace;
use crate::{Error, Matrix, Result, Vector};

/// Largest dimension accepted by the active-set enumeration.
pub const ORACLE_MAX_DIM: usize = 8;
/// Feasibility, bound and sign tolerance of the active-set oracle.
pub const ORACLE_TOL: f64 = 1e-8;
/// Minimum number of usable points for a rate fit.
pub const MIN_FIT_POINTS: usize = 20;

/// Grid argmin of `g(t) + (t - v)²/(2γ)` over `[-range, range]`, refined by a
/// ternary search on the neighbouring cells.
pub fn grid_prox_oracle(g: impl Fn(f64) -> f64, gamma: f64, v: f64, range: f64, step: f64) -> Result<f64> {
    if !(gamma > 0.0 && range > 0.0 && step > 0.0 && step < range) {
        return Err(Error::invalid(
            "grid",
            "gamma, range and step must be positive with step < range",
        ));
    }
    let obj = |t: f64| g(t) + (t - v) * (t - v) / (2.0 * gamma);
    let cells = (2.0 * range / step).round() as usize;
    let mut best = (f64::INFINITY, 0usize);
    for i in 0..=cells {
        let t = -range + i as f64 * step;
        let val = obj(t);
        if val < best.0 {
            best = (val, i);
        }
    }
    if best.0.is_infinite() {
        return Err(Error::OutsideDomain);
    }
    if best.1 == 0 || best.1 == cells {
        return Err(Error::RangeTooSmall);
    }
    let centre = -range + best.1 as f64 * step;
    let (mut lo, mut hi) = (centre - step, centre + step);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if obj(m1) <= obj(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let refined = 0.5 * (lo + hi);
    Ok(if obj(refined) <= best.0 { refined } else { centre })
}

/// One stationary point found by the active-set enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPoint {
    pub x: Vector,
    /// Multipliers of `Ax = b`, in the sign convention `Qx + r + Aᵀλ ∈ -N_C(x)`.
    pub lambda: Vector,
    pub value: f64,
    /// Per coordinate: 0 free, 1 at lower bound, 2 at upper bound.
    pub pattern: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub points: Vec<StationaryPoint>,
    pub singular_patterns: usize,
}

/// Every KKT point of `min ½xᵀQx + rᵀx s.t. Ax = b, ℓ ≤ x ≤ u`, in
/// lexicographic pattern order, duplicates removed.
///
/// Pass an `m × n` matrix with `m = 0` for box-only problems.
pub fn active_set_qp_oracle(
    q: &Matrix,
    r: &Vector,
    a: &Matrix,
    b: &Vector,
    lower: &Vector,
    upper: &Vector,
) -> Result<OracleResult> {
    let n = q.nrows();
    if n > ORACLE_MAX_DIM {
        return Err(Error::invalid(
            "n",
            format!("active-set oracle supports n <= {ORACLE_MAX_DIM}"),
        ));
    }
    if q.ncols() != n || r.len() != n || lower.len() != n || upper.len() != n {
        return Err(Error::dim("oracle data", n, r.len()));
    }
    let m = a.nrows();
    if m > 0 && a.ncols() != n {
        return Err(Error::dim("oracle constraint columns", n, a.ncols()));
    }
    if b.len() != m {
        return Err(Error::dim("oracle right-hand side", m, b.len()));
    }

    let mut points: Vec<StationaryPoint> = Vec::new();
    let mut singular = 0usize;
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        // most significant digit is coordinate 0, so codes run lexicographically
        let mut pattern = vec![0u8; n];
        let mut c = code;
        for i in (0..n).rev() {
            pattern[i] = (c % 3) as u8;
            c /= 3;
        }
        let mut x = Vector::zeros(n);
        let mut skip = false;
        for i in 0..n {
            match pattern[i] {
                1 => x[i] = lower[i],
                2 => x[i] = upper[i],
                _ => {}
            }
            if !x[i].is_finite() {
                skip = true;
            }
        }
        if skip {
            continue;
        }
        let free: Vec<usize> = (0..n).filter(|&i| pattern[i] == 0).collect();
        let nf = free.len();
        let dim = nf + m;
        let mut lambda = Vector::zeros(m);
        if dim > 0 {
            let mut kkt = Matrix::zeros(dim, dim);
            let mut rhs = Vector::zeros(dim);
            let fixed_part = q * &x + r;
            for (p, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    kkt[(p, s)] = q[(i, j)];
                }
                for row in 0..m {
                    kkt[(p, nf + row)] = a[(row, i)];
                    kkt[(nf + row, p)] = a[(row, i)];
                }
                rhs[p] = -fixed_part[i];
            }
            let ax_fixed = if m > 0 { a * &x } else { Vector::zeros(0) };
            for row in 0..m {
                rhs[nf + row] = b[row] - ax_fixed[row];
            }
            let svd = kkt.clone().svd(true, true);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            if !(smin > 1e-12 * smax.max(1e-300)) {
                singular += 1;
                continue;
            }
            let sol = svd.solve(&rhs, 0.0).expect("u and v computed");
            for (p, &i) in free.iter().enumerate() {
                x[i] = sol[p];
            }
            for row in 0..m {
                lambda[row] = sol[nf + row];
            }
        }
        // bounds, feasibility and multiplier signs
        let grad = q * &x
            + r
            + if m > 0 {
                a.transpose() * &lambda
            } else {
                Vector::zeros(n)
            };
        let mut ok = true;
        for i in 0..n {
            ok &= match pattern[i] {
                0 => x[i] >= lower[i] - ORACLE_TOL && x[i] <= upper[i] + ORACLE_TOL,
                1 => grad[i] >= -ORACLE_TOL,
                _ => grad[i] <= ORACLE_TOL,
            };
        }
        if m > 0 {
            ok &= (a * &x - b).amax() <= ORACLE_TOL;
        }
        if !ok {
            continue;
        }
        if points.iter().any(|p| (&p.x - &x).amax() <= 1e-9) {
            continue;
        }
        let value = 0.5 * x.dot(&(q * &x)) + r.dot(&x);
        points.push(StationaryPoint {
            x,
            lambda,
            value,
            pattern,
        });
    }
    Ok(OracleResult {
        points,
        singular_patterns: singular,
    })
}

/// Global minimizer of `½xᵀQx + rᵀx` over a box (infinite sides allowed).
///
/// The global minimizer is a KKT point, so it is the best enumerated one.
/// `Q` restricted to coordinates with an infinite bound must be positive
/// definite, otherwise the problem may be unbounded and is rejected.
pub fn box_qp_global_min(q: &Matrix, r: &Vector, lower: &Vector, upper: &Vector) -> Result<Vector> {
    let n = q.nrows();
    if n > ORACLE_MAX_DIM {
        return Err(Error::SubproblemNonconvexUnsupported(format!(
            "global minimization needs n <= {ORACLE_MAX_DIM}, got {n}"
        )));
    }
    let unbounded: Vec<usize> = (0..n)
        .filter(|&i| !lower[i].is_finite() || !upper[i].is_finite())
        .collect();
    if !unbounded.is_empty() {
        let sub = Matrix::from_fn(unbounded.len(), unbounded.len(), |i, j| q[(unbounded[i], unbounded[j])]);
        if crate::linalg::symmetric_eigenvalues(&sub)[0] <= 0.0 {
            return Err(Error::SubproblemNonconvexUnsupported(
                "objective is not bounded below along unbounded coordinates".into(),
            ));
        }
    }
    let res = active_set_qp_oracle(q, r, &Matrix::zeros(0, n), &Vector::zeros(0), lower, upper)?;
    let mut best: Option<&StationaryPoint> = None;
    for p in &res.points {
        if best.is_none_or(|b| p.value < b.value) {
            best = Some(p);
        }
    }
    best.map(|p| p.x.clone())
        .ok_or_else(|| Error::SubproblemNonconvexUnsupported("no nondegenerate KKT point found".into()))
}

/// First-order optimality report for `0 ∈ ∂f(x) + Aᵀλ`, `Ax = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct KKTReport {
    /// Upper bound on `dist(0, ∂f(x) + Aᵀλ)`.
    pub stationarity_residual: f64,
    pub feasibility: f64,
    pub active_lower: Vec<usize>,
    pub active_upper: Vec<usize>,
    /// Set when several pointwise-min pieces are active and the residual is
    /// only the best single-piece bound.
    pub conservative: bool,
}

/// Distance from `-v` to the normal cone of a box at `x`, per coordinate.
fn box_residual(v: &Vector, x: &Vector, bx: &BoxBounds, tol: f64, lo: &mut Vec<usize>, hi: &mut Vec<usize>) -> f64 {
    let mut sq = 0.0;
    for i in 0..x.len() {
        let at_lo = x[i] <= bx.lower()[i] + tol;
        let at_hi = x[i] >= bx.upper()[i] - tol;
        if at_lo {
            lo.push(i);
        }
        if at_hi {
            hi.push(i);
        }
        let d = match (at_lo, at_hi) {
            (true, true) => 0.0,
            (true, false) => (-v[i]).max(0.0),
            (false, true) => v[i].max(0.0),
            _ => v[i].abs(),
        };
        sq += d * d;
    }
    sq.sqrt()
}

/// Coordinate-wise interval subdifferential residual for separable kinds.
fn interval_residual(v: &Vector, x: &Vector, interval: impl Fn(f64) -> (f64, f64)) -> f64 {
    v.iter()
        .zip(x.iter())
        .map(|(&vi, &xi)| {
            let (lo, hi) = interval(xi);
            let t = -vi;
            let d = if t < lo {
                lo - t
            } else if t > hi {
                t - hi
            } else {
                0.0
            };
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Active-bound tolerance used by [`kkt_residual`].
pub const ACTIVE_TOL: f64 = 1e-9;

pub fn kkt_residual(problem: &Problem, x: &Vector, lambda: &Vector) -> Result<KKTReport> {
    if x.len() != problem.dim() {
        return Err(Error::dim("kkt point", problem.dim(), x.len()));
    }
    if lambda.len() != problem.constraint.rows() {
        return Err(Error::dim("kkt multiplier", problem.constraint.rows(), lambda.len()));
    }
    if !problem.objective_value(x).is_finite() {
        return Err(Error::OutsideDomain);
    }
    let v = problem.smooth_gradient(x) + problem.constraint.a().transpose() * lambda;
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    let mut conservative = false;
    let stationarity_residual = match problem.prox_part.kind() {
        ProxKind::Zero => v.norm(),
        ProxKind::Quadratic(qf) => (v + qf.gradient(x)).norm(),
        ProxKind::Box(bx) => box_residual(&v, x, bx, ACTIVE_TOL, &mut lo, &mut hi),
        ProxKind::L1 { weight } => {
            let w = *weight;
            interval_residual(&v, x, |t| {
                if t == 0.0 {
                    (-w, w)
                } else {
                    (w * t.signum(), w * t.signum())
                }
            })
        }
        ProxKind::Scad { lambda: l, a } => {
            let (l, a) = (*l, *a);
            interval_residual(&v, x, |t| {
                let s = t.abs();
                let d = if s == 0.0 {
                    return (-l, l);
                } else if s <= l {
                    l
                } else if s <= a * l {
                    (a * l - s) / (a - 1.0)
                } else {
                    0.0
                };
                (d * t.signum(), d * t.signum())
            })
        }
        ProxKind::Mcp { lambda: l, a } => {
            let (l, a) = (*l, *a);
            interval_residual(&v, x, |t| {
                let s = t.abs();
                if s == 0.0 {
                    return (-l, l);
                }
                let d = if s <= a * l { l - s / a } else { 0.0 };
                (d * t.signum(), d * t.signum())
            })
        }
        ProxKind::PointwiseMin(pieces) => {
            let fmin = problem.prox_part.value(x);
            let active: Vec<_> = pieces
                .iter()
                .filter(|p| (p.value(x) - fmin).abs() <= 1e-9 * (1.0 + fmin.abs()))
                .collect();
            conservative = active.len() > 1;
            let mut best = f64::INFINITY;
            for p in active {
                let gv = &v + p.form.gradient(x);
                let (mut l2, mut h2) = (Vec::new(), Vec::new());
                let res = match &p.bounds {
                    Some(bx) => box_residual(&gv, x, bx, ACTIVE_TOL, &mut l2, &mut h2),
                    None => gv.norm(),
                };
                if res < best {
                    best = res;
                    lo = l2;
                    hi = h2;
                }
            }
            best
        }
    };
    Ok(KKTReport {
        stationarity_residual,
        feasibility: problem.constraint.violation(x),
        active_lower: lo,
        active_upper: hi,
        conservative,
    })
}

/// Largest relative error between `grad` and central differences of `f` at
/// `x` with step `h`; the denominator is `max(|g_i|, |fd_i|, 1)`.
pub fn finite_diff_check(f: impl Fn(&Vector) -> f64, grad: &Vector, x: &Vector, h: f64) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        let fd = (f(&xp) - f(&xm)) / (2.0 * h);
        let denom = grad[i].abs().max(fd.abs()).max(1.0);
        worst = worst.max((grad[i] - fd).abs() / denom);
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateKind {
    /// `y_k ≈ C τ^k`.
    Linear { tau: f64 },
    /// `y_k ≈ C k^power`.
    Sublinear { power: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub kind: RateKind,
    pub r2: f64,
    pub linear_r2: f64,
    pub sublinear_r2: f64,
    pub points: usize,
}

/// Least-squares line fit; returns (slope, intercept, r²).
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}

/// Classifies the decay of `values[k]`, `k ≥ burn_in` (and `k ≥ 1`), by
/// fitting `ln y` against `k` and against `ln k`. Nonpositive values are
/// dropped; the better r² wins, ties go to the linear kind.
pub fn rate_fit(values: &[f64], burn_in: usize) -> Result<RateFit> {
    let (ks, ys): (Vec<f64>, Vec<f64>) = values
        .iter()
        .enumerate()
        .filter(|&(k, &y)| k >= burn_in.max(1) && y > 0.0 && y.is_finite())
        .map(|(k, &y)| (k as f64, y.ln()))
        .unzip();
    if ks.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(ks.len()));
    }
    let (slope_lin, _, r2_lin) = linear_regression(&ks, &ys);
    let logk: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let (slope_sub, _, r2_sub) = linear_regression(&logk, &ys);
    let (kind, r2) = if r2_lin >= r2_sub {
        (RateKind::Linear { tau: slope_lin.exp() }, r2_lin)
    } else {
        (RateKind::Sublinear { power: slope_sub }, r2_sub)
    };
    Ok(RateFit {
        kind,
        r2,
        linear_r2: r2_lin,
        sublinear_r2: r2_sub,
        points: ks.len(),
    })
}

/// Which trace column to analyse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Objective,
    Feasibility,
    Stationarity,
    RawStationarity,
    LambdaNorm,
    XzGap,
}

pub fn trace_column(trace: &Trace, column: Column) -> Vec<f64> {
    match column {
        Column::RawStationarity => trace.raw_stationarity.clone(),
        _ => trace
            .rows
            .iter()
            .map(|r| match column {
                Column::Objective => r.objective.abs(),
                Column::Feasibility => r.feasibility,
                Column::Stationarity => r.stationarity,
                Column::LambdaNorm => r.lambda_norm,
                _ => r.xz_gap,
            })
            .collect(),
    }
}

pub fn rate_fit_trace(trace: &Trace, column: Column, burn_in: usize) -> Result<RateFit> {
    rate_fit(&trace_column(trace, column), burn_in)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendFit {
    pub slope: f64,
    pub r2: f64,
    pub points: usize,
}

impl TrendFit {
    pub fn nonincreasing(&self) -> bool {
        self.slope <= 0.0
    }
}

/// Regresses `k·ξ_k²` on `k` over the last half of the sequence.
pub fn complexity_trend(xi: &[f64]) -> Result<TrendFit> {
    let start = (xi.len() / 2).max(1);
    let (ks, ys): (Vec<f64>, Vec<f64>) = (start..xi.len()).map(|k| (k as f64, k as f64 * xi[k] * xi[k])).unzip();
    if ks.len() < 2 {
        return Err(Error::InsufficientData(ks.len()));
    }
    let (slope, _, r2) = linear_regression(&ks, &ys);
    Ok(TrendFit {
        slope,
        r2,
        points: ks.len(),
    })
}

/// Outcome of one certification check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Worst finite-difference error of `∇M_{γ,g}` and worst step-identity
/// error `|‖prox(v) - v‖ - γ‖∇M(v)‖| / max(1, ‖prox(v) - v‖)` over `points`.
pub fn moreau_certificate(g: &ProxFunction, gamma: f64, points: &[Vector]) -> Result<(f64, f64)> {
    let mut fd_worst = 0.0_f64;
    let mut step_worst = 0.0_f64;
    for v in points {
        let m = g.moreau_value_grad(gamma, v)?;
        let envelope = |w: &Vector| g.moreau_value_grad(gamma, w).map(|e| e.value).unwrap_or(f64::NAN);
        fd_worst = fd_worst.max(finite_diff_check(envelope, &m.grad, v, 1e-6));
        let step = (&m.prox_point - v).norm();
        step_worst = step_worst.max((step - gamma * m.grad.norm()).abs() / step.max(1.0));
    }
    Ok((fd_worst, step_worst))
}

/// Closed-form prox of a separable kind against the grid oracle on random
/// `(γ, v)` draws; returns the worst absolute coordinate error.
pub fn separable_prox_vs_grid(g: &ProxFunction, draws: usize, rng: &mut UniformStream) -> Result<f64> {
    let gamma_max = if g.rho() > 0.0 { 0.95 / g.rho() } else { 2.0 };
    let mut worst = 0.0_f64;
    for _ in 0..draws {
        let gamma = rng.uniform_in(0.05, gamma_max);
        let v = rng.uniform_in(-5.0, 5.0);
        let p = g.prox(gamma, &Vector::from_element(1, v))?[0];
        let oracle = grid_prox_oracle(|t| g.coordinate_value(0, t).unwrap_or(f64::NAN), gamma, v, 10.0, 1e-3)?;
        worst = worst.max((p - oracle).abs());
    }
    Ok(worst)
}

/// Random box QP `min ½xᵀQx + rᵀx s.t. Ax = b, x ∈ [0, 1]ⁿ` with `b = Ax̃`.
pub fn random_box_qp(rng: &mut UniformStream, m: usize, n: usize, convex: bool) -> Result<Problem> {
    let g = rng.matrix(n, n).map(|t| 2.0 * t - 1.0);
    let q = if convex {
        g.transpose() * &g + Matrix::identity(n, n) * 0.1
    } else {
        (&g + g.transpose()) * 0.5
    };
    let r = rng.vector(n).map(|t| 2.0 * t - 1.0);
    let a = rng.matrix(m, n).map(|t| 2.0 * t - 1.0);
    let x_tilde = rng.vector(n);
    let b = &a * x_tilde;
    let c = LinearConstraint::new(a, b)?;
    let h = QuadraticForm::new(q, r, 0.0)?;
    let bx = ProxFunction::box_indicator(vec![0.0; n], vec![1.0; n])?;
    Problem::composite(c, SmoothFunction::Quadratic(h), bx)
}

/// Box-restricted quadratic data of a problem, for the active-set oracle.
pub fn qp_data(problem: &Problem) -> Option<(Matrix, Vector, Vector, Vector)> {
    let n = problem.dim();
    let qf = problem.smooth.as_ref()?.as_quadratic()?;
    let (lo, hi) = match problem.prox_part.kind() {
        ProxKind::Box(b) => (b.lower().clone(), b.upper().clone()),
        ProxKind::Zero => (
            Vector::from_element(n, f64::NEG_INFINITY),
            Vector::from_element(n, f64::INFINITY),
        ),
        _ => return None,
    };
    Some((qf.q().clone(), qf.r().clone(), lo, hi))
}

/// The catalog certification run by `meal check`.
pub fn certification_suite(seed: u64) -> Vec<CheckOutcome> {
    let mut rng = UniformStream::new(seed);
    let mut out = Vec::new();
    let mut record = |name: &str, res: Result<(bool, String)>| {
        let (passed, detail) = res.unwrap_or_else(|e| (false, e.to_string()));
        out.push(CheckOutcome {
            name: name.to_string(),
            passed,
            detail,
        });
    };

    let separable = [
        ("zero", ProxFunction::zero()),
        ("l1", ProxFunction::l1(0.7).expect("valid")),
        ("scad", ProxFunction::scad(1.0, 3.7).expect("valid")),
        ("mcp", ProxFunction::mcp(1.0, 2.5).expect("valid")),
        (
            "box",
            ProxFunction::box_indicator(vec![-1.0], vec![2.0]).expect("valid"),
        ),
    ];
    for (name, g) in &separable {
        let res = separable_prox_vs_grid(g, 200, &mut rng).map(|w| (w <= 1e-3, format!("max |prox - grid| = {w:.3e}")));
        record(&format!("prox_vs_grid_{name}"), res);
    }

    for (name, g, gamma) in catalog_samples() {
        let n = g.dim().unwrap_or(3);
        let points: Vec<Vector> = (0..50).map(|_| rng.vector(n).map(|t| 6.0 * t - 3.0)).collect();
        let res = moreau_certificate(&g, gamma, &points).map(|(fd, step)| {
            (
                fd <= 1e-4 && step <= 1e-10,
                format!("fd rel err {fd:.3e}, step identity err {step:.3e}"),
            )
        });
        record(&format!("moreau_gradient_{name}"), res);
    }

    let res = (|| {
        let p = random_box_qp(&mut rng, 2, 5, false)?;
        let (q, r, lo, hi) = qp_data(&p).expect("box QP");
        let res = active_set_qp_oracle(&q, &r, p.constraint.a(), p.constraint.b(), &lo, &hi)?;
        let mut worst = 0.0_f64;
        for pt in &res.points {
            let rep = kkt_residual(&p, &pt.x, &pt.lambda)?;
            worst = worst.max(rep.stationarity_residual).max(rep.feasibility);
        }
        Ok((
            !res.points.is_empty() && worst <= 1e-6,
            format!("{} stationary points, worst KKT residual {worst:.3e}", res.points.len()),
        ))
    })();
    record("active_set_oracle_kkt", res);

    let res = (|| {
        let ys: Vec<f64> = (0..80).map(|k| 0.9f64.powi(k)).collect();
        let fit = rate_fit(&ys, 0)?;
        let ok = matches!(fit.kind, RateKind::Linear { tau } if (tau - 0.9).abs() < 0.01) && fit.r2 >= 0.999;
        Ok((ok, format!("{:?}, r2 = {:.6}", fit.kind, fit.r2)))
    })();
    record("rate_fit_planted_linear", res);

    out
}

/// One instance of every catalog kind with an admissible `γ`.
pub fn catalog_samples() -> Vec<(&'static str, ProxFunction, f64)> {
    let q = Matrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, -1.0, 0.3, 0.0, 0.3, 1.0]);
    let qf = QuadraticForm::new(q, Vector::from_vec(vec![0.2, -0.1, 0.4]), 0.5).expect("valid");
    let well = |c: f64, lo: f64, hi: f64| Piece {
        form: QuadraticForm::new(
            Matrix::identity(3, 3) * 2.0,
            Vector::from_element(3, -2.0 * c),
            3.0 * c * c,
        )
        .expect("valid"),
        bounds: Some(BoxBounds::new(vec![lo; 3], vec![hi; 3]).expect("valid")),
    };
    let dense = Piece {
        form: QuadraticForm::new(
            Matrix::from_row_slice(3, 3, &[3.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 1.0]),
            Vector::from_vec(vec![0.5, 0.0, -0.5]),
            0.2,
        )
        .expect("valid"),
        bounds: None,
    };
    vec![
        ("zero", ProxFunction::zero(), 0.7),
        ("quadratic", ProxFunction::quadratic(qf), 0.5),
        (
            "box",
            ProxFunction::box_indicator(vec![-1.0, f64::NEG_INFINITY, 0.0], vec![1.0, 0.5, f64::INFINITY])
                .expect("valid"),
            0.8,
        ),
        ("l1", ProxFunction::l1(0.7).expect("valid"), 0.9),
        ("scad", ProxFunction::scad(1.0, 3.7).expect("valid"), 0.5),
        ("mcp", ProxFunction::mcp(1.0, 2.5).expect("valid"), 0.5),
        (
            "pointwise_min",
            ProxFunction::pointwise_min(vec![well(1.0, -4.0, 4.0), well(-1.0, -4.0, 4.0), dense], None).expect("valid"),
            0.5,
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_oracle_soft_threshold() {
        let t = grid_prox_oracle(|t| t.abs(), 1.0, 2.0, 10.0, 1e-4).unwrap();
        assert!((t - 1.0).abs() < 1e-6);
        let t = grid_prox_oracle(|_| 0.0, 0.7, -3.3, 10.0, 1e-4).unwrap();
        assert!((t + 3.3).abs() < 1e-6);
    }

    #[test]
    fn grid_oracle_range_too_small() {
        assert!(matches!(
            grid_prox_oracle(|_| 0.0, 1.0, 20.0, 10.0, 1e-3),
            Err(Error::RangeTooSmall)
        ));
    }

    #[test]
    fn oracle_equality_only() {
        // min ½‖x‖² s.t. x₁ = 1
        let n = 3;
        let inf = Vector::from_element(n, f64::INFINITY);
        let res = active_set_qp_oracle(
            &Matrix::identity(n, n),
            &Vector::zeros(n),
            &Matrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]),
            &Vector::from_vec(vec![1.0]),
            &(-&inf),
            &inf,
        )
        .unwrap();
        assert_eq!(res.points.len(), 1);
        assert!((&res.points[0].x - Vector::from_vec(vec![1.0, 0.0, 0.0])).norm() < 1e-12);
        assert!((res.points[0].lambda[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_infeasible_is_empty() {
        let n = 2;
        let res = active_set_qp_oracle(
            &Matrix::identity(n, n),
            &Vector::zeros(n),
            &Matrix::zeros(1, 2),
            &Vector::from_vec(vec![1.0]),
            &Vector::from_element(n, -1.0),
            &Vector::from_element(n, 1.0),
        )
        .unwrap();
        assert!(res.points.is_empty());
    }

    #[test]
    fn box_global_min_of_indefinite_quadratic() {
        // min x² - 2y² on [-1, 1]²: y = ±1, first in order is y = -1
        let q = Matrix::from_diagonal(&Vector::from_vec(vec![2.0, -4.0]));
        let x = box_qp_global_min(
            &q,
            &Vector::zeros(2),
            &Vector::from_element(2, -1.0),
            &Vector::from_element(2, 1.0),
        )
        .unwrap();
        assert_eq!(x, Vector::from_vec(vec![0.0, -1.0]));
    }

    #[test]
    fn box_global_min_rejects_unbounded_direction() {
        let q = Matrix::from_diagonal(&Vector::from_vec(vec![2.0, -4.0]));
        let lo = Vector::from_vec(vec![-1.0, f64::NEG_INFINITY]);
        let hi = Vector::from_vec(vec![1.0, f64::INFINITY]);
        assert!(matches!(
            box_qp_global_min(&q, &Vector::zeros(2), &lo, &hi),
            Err(Error::SubproblemNonconvexUnsupported(_))
        ));
    }

    #[test]
    fn kkt_residual_examples() {
        let n = 3;
        let c = LinearConstraint::new(Matrix::identity(n, n), Vector::zeros(n)).unwrap();
        let h = SmoothFunction::Quadratic(
            QuadraticForm::new(Matrix::zeros(n, n), Vector::from_vec(vec![1.0, 0.0, 0.0]), 0.0).unwrap(),
        );
        let g = ProxFunction::box_indicator(vec![-1.0; 3], vec![1.0; 3]).unwrap();
        let p = Problem::composite(c, h, g).unwrap();
        let rep = kkt_residual(&p, &Vector::zeros(n), &Vector::zeros(n)).unwrap();
        assert!((rep.stationarity_residual - 1.0).abs() < 1e-15);
        // at the lower bound the gradient (1, 0, 0) is balanced by the cone
        let rep = kkt_residual(&p, &Vector::from_vec(vec![-1.0, 0.0, 0.0]), &Vector::zeros(n)).unwrap();
        assert_eq!(rep.stationarity_residual, 0.0);
        assert_eq!(rep.active_lower, vec![0]);
    }

    #[test]
    fn kkt_residual_unconstrained_optimum() {
        let c = LinearConstraint::new(Matrix::from_row_slice(1, 2, &[1.0, 1.0]), Vector::from_vec(vec![0.0])).unwrap();
        let h = SmoothFunction::Quadratic(QuadraticForm::half_squared_norm(2));
        let p = Problem::composite(c, h, ProxFunction::zero()).unwrap();
        let rep = kkt_residual(&p, &Vector::zeros(2), &Vector::zeros(1)).unwrap();
        assert_eq!(rep.stationarity_residual, 0.0);
    }

    #[test]
    fn finite_differences() {
        let lin = |x: &Vector| 3.0 * x[0] - 2.0 * x[1];
        let x = Vector::from_vec(vec![0.3, 0.7]);
        assert!(finite_diff_check(lin, &Vector::from_vec(vec![3.0, -2.0]), &x, 1e-6) <= 1e-10);
        let quad = |x: &Vector| x.norm_squared();
        assert!(finite_diff_check(quad, &(&x * 2.0), &x, 1e-6) <= 1e-8);
    }

    #[test]
    fn planted_linear_rate() {
        let ys: Vec<f64> = (0..80).map(|k| 0.9f64.powi(k)).collect();
        let fit = rate_fit(&ys, 0).unwrap();
        match fit.kind {
            RateKind::Linear { tau } => assert!((tau - 0.9).abs() < 0.01),
            other => panic!("expected linear, got {other:?}"),
        }
        assert!(fit.r2 >= 0.999);
    }

    #[test]
    fn planted_sublinear_rate() {
        let ys: Vec<f64> = (0..200).map(|k| ((k.max(1)) as f64).powf(-0.5)).collect();
        let fit = rate_fit(&ys, 1).unwrap();
        match fit.kind {
            RateKind::Sublinear { power } => assert!((power + 0.5).abs() < 0.05),
            other => panic!("expected sublinear, got {other:?}"),
        }
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(rate_fit(&[1.0; 10], 0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn trend_of_fast_sequence_is_nonincreasing() {
        let xi: Vec<f64> = (0..100).map(|k| 1.0 / (1.0 + k as f64)).collect();
        assert!(complexity_trend(&xi).unwrap().nonincreasing());
    }
}
