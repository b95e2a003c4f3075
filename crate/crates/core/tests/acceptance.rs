//! Acceptance criteria 1–10. Runs without the test harness and prints one
//! PASS/FAIL line per criterion; exits nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use meal_core::diagnostics::{self, RateKind};
use meal_core::envelope::{IterateState, PenaltyPlan, SubproblemSolver};
use meal_core::experiments::{self, ExperimentSpec};
use meal_core::linalg;
use meal_core::measures::prefix_min;
use meal_core::penalty::{self, CapVariant};
use meal_core::problem::{ImplicitClass, LinearConstraint, Problem, QuadraticForm, SmoothFunction};
use meal_core::prox::ProxFunction;
use meal_core::rng::UniformStream;
use meal_core::solvers::{self, EpsilonSchedule, ProxIalmParams, SolverConfig, StopRule, TerminalStatus, Trace};
use meal_core::{Matrix, Vector};

// Pinned tolerances.
const OSC_FEAS_MIN: f64 = 1e-3;
const EXP1_TOL: f64 = 1e-6;
const EXP1_MAX_K: usize = 50;
const EXP1_RUNTIME: f64 = 1.0;
const RATE_R2: f64 = 0.95;
const EXP2_RUNTIME: f64 = 5.0;
const PROGRESS_ITERS: usize = 200;
const FD_REL: f64 = 1e-4;
const STEP_IDENTITY: f64 = 1e-10;
const MOREAU_POINTS: usize = 100;
const ORACLE_MATCH: f64 = 1e-5;
const KKT_TOL: f64 = 1e-5;
const FIXED_POINT_MOVE: f64 = 1e-8;

type Verdict = (bool, String);
type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        ("exp1 ALM oscillates, LiMEAL converges", criterion_1),
        ("exp1 LiMEAL linear rate", criterion_2),
        ("exp2 LiMEAL beats Prox-iALM and iALM", criterion_3),
        ("MEAL one-step progress", criterion_4),
        ("MEAL dual-by-primal control", criterion_5),
        ("Moreau envelope machinery", criterion_6),
        ("oracle equivalence on box QPs", criterion_7),
        ("complexity trend surrogate", criterion_8),
        ("fixed-point invariance", criterion_9),
        ("exp2 determinism", criterion_10),
    ];
    std::panic::set_hook(Box::new(|info| println!("  panic: {info}")));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = match std::panic::catch_unwind(check) {
            Ok(v) => v,
            Err(_) => (false, "panicked".to_string()),
        };
        println!(
            "{} criterion {:>2} ({name}): {detail}",
            if ok { "PASS" } else { "FAIL" },
            i + 1
        );
        if !ok {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn exp1_traces() -> (experiments::Bundle, f64) {
    let start = Instant::now();
    let bundle = experiments::run_experiment(&ExperimentSpec::exp1().unwrap()).unwrap();
    (bundle, start.elapsed().as_secs_f64())
}

fn criterion_1() -> Verdict {
    let (bundle, secs) = exp1_traces();
    let alm = bundle.trace("alm_beta50").unwrap();
    let feas_500 = alm.rows.get(500).map_or(0.0, |r| r.feasibility);
    let mut ok = alm.oscillating && feas_500 >= OSC_FEAS_MIN && secs < EXP1_RUNTIME;
    let mut detail = format!("ALM oscillating={} feas@500={feas_500:.4e};", alm.oscillating);
    for eta in experiments::EXP_ETAS {
        let t = bundle.trace(&format!("limeal_eta{eta}")).unwrap();
        let hit = t
            .rows
            .iter()
            .position(|r| r.objective.abs() <= EXP1_TOL && r.feasibility <= EXP1_TOL)
            .filter(|&k| k < EXP1_MAX_K);
        ok &= hit.is_some();
        detail += &format!(
            " LiMEAL η={eta} reached at k={};",
            hit.map_or("-".into(), |k| k.to_string())
        );
    }
    (ok, format!("{detail} runtime {secs:.3}s"))
}

/// LiMEAL on Exp1 run past the default stop, to the round-off floor.
fn exp1_limeal_long(eta: f64) -> Trace {
    let plan = PenaltyPlan::fixed(experiments::EXP_BETA, 0.5, eta).unwrap();
    let cfg = SolverConfig::limeal(plan).with_stop(StopRule {
        max_iters: 500,
        stat_tol: 1e-13,
        feas_tol: 1e-13,
    });
    solvers::run(&experiments::build_exp1(), &cfg, Some(experiments::exp1_init())).unwrap()
}

fn criterion_2() -> Verdict {
    let mut ok = true;
    let mut fitted = 0;
    let mut detail = String::new();
    for eta in experiments::EXP_ETAS {
        let t = exp1_limeal_long(eta);
        match diagnostics::rate_fit(&t.stationarity(), experiments::RATE_BURN_IN) {
            Ok(fit) => {
                fitted += 1;
                let linear = matches!(fit.kind, RateKind::Linear { .. });
                ok &= linear && fit.r2 >= RATE_R2;
                detail += &format!(" η={eta}: {:?} r²={:.4} ({} pts);", fit.kind, fit.r2, fit.points);
            }
            Err(e) => {
                detail += &format!(" η={eta}: not fitted, {e} (reaches 1e-13 in {} steps);", t.rows.len());
            }
        }
    }
    (ok && fitted > 0, detail.trim().to_string())
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let spec = ExperimentSpec::exp2(experiments::DEFAULT_SEED, 5, 20, SubproblemSolver::exact()).unwrap();
    let bundle = experiments::run_experiment(&spec).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let iters = |label: &str| bundle.trace(label).unwrap().iterations_to_tol;
    let show = |k: Option<usize>| k.map_or("∞".to_string(), |k| k.to_string());
    let faster = |a: Option<usize>, b: Option<usize>| match (a, b) {
        (Some(a), Some(b)) => a < b,
        (Some(_), None) => true,
        _ => false,
    };
    let (l05, l1) = (iters("limeal_eta0.5"), iters("limeal_eta1"));
    let (p05, i1) = (iters("prox_ialm_eta0.5"), iters("ialm_eta1"));
    let ok = faster(l05, p05) && faster(l1, i1) && secs < EXP2_RUNTIME;
    (
        ok,
        format!(
            "η=0.5: LiMEAL {} vs Prox-iALM {}; η=1: LiMEAL {} vs iALM {}; runtime {secs:.3}s",
            show(l05),
            show(p05),
            show(l1),
            show(i1)
        ),
    )
}

fn convex_qp(rng: &mut UniformStream, m: usize, n: usize) -> Problem {
    let g = rng.matrix(n, n).map(|t| 2.0 * t - 1.0);
    let q = g.transpose() * &g + Matrix::identity(n, n) * 0.1;
    let r = rng.vector(n).map(|t| 2.0 * t - 1.0);
    let a = rng.matrix(m, n).map(|t| 2.0 * t - 1.0);
    let b = &a * rng.vector(n);
    let c = LinearConstraint::new(a, b).unwrap();
    let h = QuadraticForm::new(q, r, 0.0).unwrap();
    Problem::composite(c, SmoothFunction::Quadratic(h), ProxFunction::zero()).unwrap()
}

/// MEAL runs for criteria 4 and 5: Exp1 (declared implicit Lipschitz
/// constant 2) and three random convex QPs, β from the MEAL-a cap.
fn progress_runs() -> Vec<(String, Trace)> {
    let mut problems = vec![(
        "exp1".to_string(),
        experiments::build_exp1().with_implicit_class(ImplicitClass::LipschitzSubgradient(2.0)),
        Some(experiments::exp1_init()),
    )];
    let mut rng = UniformStream::new(7);
    for (i, (m, n)) in [(1, 3), (2, 5), (3, 6)].into_iter().enumerate() {
        problems.push((format!("convex_qp{i}"), convex_qp(&mut rng, m, n), None));
    }
    let eta = 1.0;
    problems
        .into_iter()
        .map(|(name, p, init)| {
            let gamma = 0.5 / p.rho_total().max(1.0);
            let beta = penalty::auto_beta(&p, gamma, eta, CapVariant::MealA).unwrap();
            let cfg = SolverConfig::meal(PenaltyPlan::fixed(beta, gamma, eta).unwrap())
                .with_monitors(true)
                .with_stop(StopRule {
                    max_iters: PROGRESS_ITERS,
                    stat_tol: f64::MIN_POSITIVE,
                    feas_tol: f64::MIN_POSITIVE,
                });
            (name, solvers::run(&p, &cfg, init).unwrap())
        })
        .collect()
}

fn criterion_4() -> Verdict {
    let mut ok = true;
    let mut detail = String::new();
    for (name, t) in progress_runs() {
        let m = &t.monitors;
        ok &= m.descent_checked > 0 && m.descent_violations == 0;
        detail += &format!(
            " {name}: {}/{} violations, worst shortfall {:.2e};",
            m.descent_violations, m.descent_checked, m.worst_descent_gap
        );
    }
    (ok, detail.trim().to_string())
}

fn criterion_5() -> Verdict {
    let mut ok = true;
    let mut detail = String::new();
    for (name, t) in progress_runs() {
        let m = &t.monitors;
        ok &= m.dual_checked > 0 && m.dual_violations == 0;
        detail += &format!(
            " {name}: {}/{} violations, worst lhs-rhs {:.2e};",
            m.dual_violations, m.dual_checked, m.worst_dual_gap
        );
    }
    (ok, detail.trim().to_string())
}

fn criterion_6() -> Verdict {
    let mut rng = UniformStream::new(experiments::DEFAULT_SEED);
    let mut ok = true;
    let mut worst_fd = 0.0_f64;
    let mut worst_step = 0.0_f64;
    for (name, g, gamma) in diagnostics::catalog_samples() {
        let n = g.dim().unwrap_or(3);
        let points: Vec<Vector> = (0..MOREAU_POINTS)
            .map(|_| rng.vector(n).map(|t| 10.0 * t - 5.0))
            .collect();
        let (fd, _) = diagnostics::moreau_certificate(&g, gamma, &points).unwrap();
        // absolute step identity
        let step = points
            .iter()
            .map(|v| {
                let m = g.moreau_value_grad(gamma, v).unwrap();
                ((&m.prox_point - v).norm() - gamma * m.grad.norm()).abs()
            })
            .fold(0.0, f64::max);
        if fd > FD_REL || step > STEP_IDENTITY {
            ok = false;
            println!("  {name}: fd {fd:.2e} step {step:.2e}");
        }
        worst_fd = worst_fd.max(fd);
        worst_step = worst_step.max(step);
    }
    (
        ok,
        format!(
            "7 kinds × {MOREAU_POINTS} points, worst fd rel err {worst_fd:.2e}, worst step identity {worst_step:.2e}"
        ),
    )
}

fn tight_stop() -> StopRule {
    StopRule {
        max_iters: 20_000,
        stat_tol: 1e-9,
        feas_tol: 1e-9,
    }
}

fn box_qps(seed: u64) -> Vec<Problem> {
    let mut rng = UniformStream::new(seed);
    (0..10)
        .map(|i| {
            let n = 3 + i % 4;
            let m = 1 + i % 2;
            diagnostics::random_box_qp(&mut rng, m, n, i % 2 == 0).unwrap()
        })
        .collect()
}

fn criterion_7() -> Verdict {
    let mut ok = true;
    let mut worst_match = 0.0_f64;
    let mut worst_kkt = 0.0_f64;
    let mut runs = 0;
    for (i, p) in box_qps(11).iter().enumerate() {
        let (q, r, lo, hi) = diagnostics::qp_data(p).unwrap();
        let oracle = diagnostics::active_set_qp_oracle(&q, &r, p.constraint.a(), p.constraint.b(), &lo, &hi).unwrap();
        let gamma_meal = 0.5 / p.rho_total().max(1e-12);
        let gamma_limeal = 0.5 / p.smooth_lipschitz();
        let configs = [
            SolverConfig::meal(PenaltyPlan::fixed(50.0, gamma_meal, 1.0).unwrap()),
            SolverConfig::limeal(PenaltyPlan::fixed(50.0, gamma_limeal, 1.0).unwrap()),
        ];
        for cfg in configs {
            let t = solvers::run(p, &cfg.clone().with_stop(tight_stop()), None).unwrap();
            let x = &t.final_state.x;
            let dist = oracle
                .points
                .iter()
                .map(|s| (&s.x - x).norm())
                .fold(f64::INFINITY, f64::min);
            let kkt = diagnostics::kkt_residual(p, x, &t.final_state.lambda).unwrap();
            let res = kkt.stationarity_residual.max(kkt.feasibility);
            let good = t.status == TerminalStatus::Converged && dist <= ORACLE_MATCH && res <= KKT_TOL;
            if !good {
                println!(
                    "  qp{i} {}: status {} dist {dist:.2e} kkt {res:.2e}",
                    cfg.label,
                    t.status.name()
                );
            }
            ok &= good;
            worst_match = worst_match.max(dist);
            worst_kkt = worst_kkt.max(res);
            runs += 1;
        }
    }
    (
        ok,
        format!("{runs} runs on 10 QPs (n ≤ 6), worst distance to oracle {worst_match:.2e}, worst KKT residual {worst_kkt:.2e}"),
    )
}

fn criterion_8() -> Verdict {
    let mut traces: Vec<(String, Trace)> = Vec::new();
    let (exp1, _) = exp1_traces();
    let spec = ExperimentSpec::exp2(experiments::DEFAULT_SEED, 5, 20, SubproblemSolver::exact()).unwrap();
    let exp2 = experiments::run_experiment(&spec).unwrap();
    for (tag, bundle) in [("exp1", exp1), ("exp2", exp2)] {
        for o in bundle.outcomes {
            if let Ok(t) = o.result {
                if t.status == TerminalStatus::Converged && t.algorithm != solvers::Algorithm::Alm {
                    traces.push((format!("{tag}/{}", o.label), t));
                }
            }
        }
    }
    traces.extend(progress_runs().into_iter().map(|(n, t)| (format!("meal/{n}"), t)));
    let mut ok = !traces.is_empty();
    let mut detail = String::new();
    for (name, t) in &traces {
        // stop at the round-off floor so plateaus do not count as growth
        let xi: Vec<f64> = prefix_min(&t.raw_stationarity)
            .into_iter()
            .take_while(|&v| v > 1e-12)
            .collect();
        match diagnostics::complexity_trend(&xi) {
            Ok(fit) => {
                ok &= fit.nonincreasing();
                detail += &format!(" {name}: slope {:.2e} r² {:.3};", fit.slope, fit.r2);
            }
            Err(_) => detail += &format!(" {name}: too short;"),
        }
    }
    (ok, detail.trim().to_string())
}

fn criterion_9() -> Verdict {
    let mut ok = true;
    let mut worst = 0.0_f64;
    let mut seeded = 0;
    for (i, p) in box_qps(23).iter().enumerate().take(4) {
        let (q, r, lo, hi) = diagnostics::qp_data(p).unwrap();
        let oracle = diagnostics::active_set_qp_oracle(&q, &r, p.constraint.a(), p.constraint.b(), &lo, &hi).unwrap();
        let convex = i % 2 == 0;
        let lh = p.smooth_lipschitz();
        let gamma = 0.5 / p.rho_total().max(1e-12);
        let params = ProxIalmParams {
            p: 2.0 * lh,
            s: 1.0 / (2.0 * (3.0 * lh + 50.0 * linalg::spectral_norm(p.constraint.a()).powi(2))),
            alpha_dual: None,
        };
        let mut configs = vec![
            SolverConfig::meal(PenaltyPlan::fixed(50.0, gamma, 1.0).unwrap()),
            SolverConfig::imeal(
                PenaltyPlan::fixed(50.0, gamma, 1.0).unwrap(),
                EpsilonSchedule::Harmonic { eps0: 1e-2 },
            ),
            SolverConfig::limeal(PenaltyPlan::fixed(50.0, 0.5 / lh, 1.0).unwrap()),
            SolverConfig::prox_ialm(50.0, 0.5, params).unwrap(),
            SolverConfig::ialm(50.0, params).unwrap(),
        ];
        // ALM minimizes the augmented Lagrangian globally, so only global
        // minimizers are its fixed points; seed it on convex instances.
        if convex {
            configs.push(SolverConfig::alm(50.0).unwrap());
        }
        for s in &oracle.points {
            for cfg in &configs {
                let cfg = cfg.clone().with_stop(StopRule {
                    max_iters: 5,
                    stat_tol: f64::MIN_POSITIVE,
                    feas_tol: f64::MIN_POSITIVE,
                });
                let init = IterateState::new(s.x.clone(), s.x.clone(), s.lambda.clone());
                let t = solvers::run(p, &cfg, Some(init)).unwrap();
                let moved = (&t.final_state.x - &s.x)
                    .norm()
                    .max((&t.final_state.z - &s.x).norm())
                    .max((&t.final_state.lambda - &s.lambda).norm())
                    .max(t.rows.iter().map(|r| r.xz_gap).fold(0.0, f64::max));
                if moved > FIXED_POINT_MOVE {
                    println!("  qp{i} {}: moved {moved:.2e}", cfg.label);
                    ok = false;
                }
                worst = worst.max(moved);
                seeded += 1;
            }
        }
    }
    (
        ok,
        format!("{seeded} seeded runs × 5 steps, worst displacement {worst:.2e}"),
    )
}

fn strip_wall_time(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .into_iter()
        .map(|f| {
            let text = std::fs::read_to_string(&f).unwrap();
            let mut lines = text.lines();
            let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
            let skip = header.iter().position(|h| *h == "wall_time");
            let body: Vec<String> = std::iter::once(header.join(","))
                .chain(lines.map(|l| {
                    l.split(',')
                        .enumerate()
                        .filter(|(i, _)| Some(*i) != skip)
                        .map(|(_, c)| c)
                        .collect::<Vec<_>>()
                        .join(",")
                }))
                .collect();
            (f.file_name().unwrap().to_string_lossy().into_owned(), body.join("\n"))
        })
        .collect()
}

fn criterion_10() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_meal");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let status = Command::new(bin)
            .args(["exp2", "--seed", "42", "--output"])
            .arg(d.path())
            .output()
            .unwrap();
        if !status.status.success() {
            return (false, format!("exp2 exited with {:?}", status.status.code()));
        }
    }
    let a = strip_wall_time(&dirs[0].path().join("exp2"));
    let b = strip_wall_time(&dirs[1].path().join("exp2"));
    let identical = a == b && !a.is_empty();
    (
        identical,
        format!(
            "{} CSV files compared, identical modulo wall_time: {identical}",
            a.len()
        ),
    )
}
