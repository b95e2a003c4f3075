//! Proximal-gradient inner solver for strongly convex composite subproblems.

use crate::Vector;

pub(crate) struct InnerSettings {
    /// Lipschitz constant of the smooth part's gradient.
    pub lipschitz: f64,
    /// Strong-convexity modulus of the smooth part; enables momentum when set.
    pub momentum_modulus: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

pub(crate) struct InnerOutcome {
    pub x: Vector,
    /// Certified element of `∇q(x) + ∂g(x)`.
    pub residual: Vector,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `q + g` where `q` is smooth and `g` has a prox.
///
/// Each step `x⁺ = prox_{t g}(y - t∇q(y))` with `t = 1/L` yields the residual
/// `s = ∇q(x⁺) - ∇q(y) + (y - x⁺)/t ∈ ∇q(x⁺) + ∂g(x⁺)`, which is the
/// stopping quantity. Iteration stops once `‖s‖` falls below `tol` or a
/// round-off floor proportional to `L·(1 + ‖x⁺‖)`.
pub(crate) fn proximal_gradient<G, P>(grad: G, prox: P, x0: Vector, settings: &InnerSettings) -> InnerOutcome
where
    G: Fn(&Vector) -> Vector,
    P: Fn(f64, &Vector) -> Vector,
{
    let l = settings.lipschitz;
    let t = 1.0 / l;
    let theta = settings
        .momentum_modulus
        .filter(|&mu| mu > 0.0 && mu < l)
        .map(|mu| (l.sqrt() - mu.sqrt()) / (l.sqrt() + mu.sqrt()))
        .unwrap_or(0.0);

    let mut x = x0.clone();
    let mut y = x0;
    let mut grad_y = grad(&y);
    let mut best: Option<(f64, Vector, Vector)> = None;

    for it in 1..=settings.max_iter {
        let x_new = prox(t, &(&y - t * &grad_y));
        let grad_new = grad(&x_new);
        let residual = &grad_new - &grad_y + (&y - &x_new) * l;
        let r_norm = residual.norm();
        let floor = 1e-13 * l * (1.0 + x_new.norm());

        if r_norm <= settings.tol || r_norm <= floor {
            return InnerOutcome {
                x: x_new,
                residual,
                iterations: it,
                converged: true,
            };
        }
        if best.as_ref().is_none_or(|(b, _, _)| r_norm < *b) {
            best = Some((r_norm, x_new.clone(), residual));
        }

        if theta > 0.0 {
            // gradient-mapping restart
            let restart = (&y - &x_new).dot(&(&x_new - &x)) > 0.0;
            let y_new = if restart {
                x_new.clone()
            } else {
                &x_new + theta * (&x_new - &x)
            };
            x = x_new;
            y = y_new;
            grad_y = if restart { grad_new } else { grad(&y) };
        } else {
            x = x_new.clone();
            y = x_new;
            grad_y = grad_new;
        }
    }

    let (_, x, residual) = best.expect("max_iter >= 1");
    InnerOutcome {
        x,
        residual,
        iterations: settings.max_iter,
        converged: false,
    }
}
