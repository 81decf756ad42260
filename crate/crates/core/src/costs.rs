//! The seven robust cost functions, their lifted slack-variable
//! reformulations, and closed-form optimal slacks.
//!
//! Each cost `rho(r, beta)` admits an identity `rho = min_slack lifted(r,
//! slack)` where the lifted form is polynomial in the slack. Only the TLS
//! lifting feeds the SDP pipeline; the others exist as evaluable forms with
//! the min-identity checked property-style.

use crate::poly::{Monomial, PolyError, Polynomial, PopInstance, VarSpace};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("beta must be positive, got {0}")]
    InvalidBeta(f64),
    #[error("adaptive scale must satisfy q >= 1, p != 0, p/q != 2, |p| <= 8, q <= 8: p={p}, q={q}")]
    InvalidAdaptiveScale { p: i32, q: i32 },
    #[error("residual {index} has degree {degree}, expected quadratic")]
    ResidualDegreeTooHigh { index: usize, degree: usize },
    #[error("expected {expected} betas, got {got}")]
    BetaCountMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Robust cost selector. The adaptive cost carries a rational scale `p/q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostKind {
    Tls,
    Mc,
    Gm,
    Tb,
    L1,
    Hb,
    /// Adaptive with scale `s = p/q`, `s` rational, `s != 0`, `s != 2`.
    Adt { p: i32, q: i32 },
}

impl CostKind {
    pub fn validate(&self) -> Result<(), CostError> {
        if let CostKind::Adt { p, q } = *self {
            // Degrees blow up with the scale; keep |p|, q small.
            if q < 1 || p == 0 || p == 2 * q || p.abs() > 8 || q > 8 {
                return Err(CostError::InvalidAdaptiveScale { p, q });
            }
        }
        Ok(())
    }

    fn adt_scale(&self) -> Option<f64> {
        match *self {
            CostKind::Adt { p, q } => Some(p as f64 / q as f64),
            _ => None,
        }
    }
}

/// Slack assignment for one measurement: a confidence `theta` and/or a
/// nonnegative magnitude `gamma`, depending on the cost.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SlackValue {
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
}

impl SlackValue {
    pub fn theta(t: f64) -> Self {
        Self { theta: Some(t), gamma: None }
    }

    pub fn gamma(g: f64) -> Self {
        Self { theta: None, gamma: Some(g) }
    }

    pub fn theta_gamma(t: f64, g: f64) -> Self {
        Self { theta: Some(t), gamma: Some(g) }
    }
}

fn check_beta(beta: f64) -> Result<(), CostError> {
    if !(beta > 0.0) {
        return Err(CostError::InvalidBeta(beta));
    }
    Ok(())
}

/// Evaluate the robust cost `rho(r, beta)`.
pub fn rho_eval(kind: CostKind, r: f64, beta: f64) -> Result<f64, CostError> {
    check_beta(beta)?;
    kind.validate()?;
    let a = (r / beta) * (r / beta);
    Ok(match kind {
        CostKind::Tls => a.min(1.0),
        CostKind::Mc => {
            if r.abs() <= beta {
                0.0
            } else {
                1.0
            }
        }
        CostKind::Gm => a / (1.0 + a),
        CostKind::Tb => {
            if r.abs() <= beta {
                a - a * a + a * a * a / 3.0
            } else {
                1.0 / 3.0
            }
        }
        CostKind::L1 => r.abs() / beta,
        CostKind::Hb => {
            if r.abs() <= beta {
                a / 2.0
            } else {
                r.abs() / beta - 0.5
            }
        }
        CostKind::Adt { .. } => {
            let s = kind.adt_scale().unwrap();
            let base = a / (s - 2.0).abs() + 1.0;
            (s - 2.0).abs() / s * (base.powf(s / 2.0) - 1.0)
        }
    })
}

const EQ_TOL: f64 = 1e-9;

fn binary(theta: f64) -> bool {
    theta == 1.0 || theta == -1.0
}

fn unit_interval(theta: f64) -> bool {
    (0.0..=1.0).contains(&theta)
}

/// Evaluate the lifted objective term at a given slack. Domain violations
/// return `f64::INFINITY` so that minimizing over the slack is well posed.
pub fn lifted_eval(kind: CostKind, r: f64, beta: f64, slack: SlackValue) -> Result<f64, CostError> {
    check_beta(beta)?;
    kind.validate()?;
    let a = (r / beta) * (r / beta);
    let inf = f64::INFINITY;
    Ok(match kind {
        CostKind::Tls => match slack.theta {
            Some(t) if binary(t) => (1.0 + t) / 2.0 * a + (1.0 - t) / 2.0,
            _ => inf,
        },
        CostKind::Mc => match slack.theta {
            Some(t) if binary(t) && -t * (r * r - beta * beta) >= -EQ_TOL * beta * beta => {
                (1.0 - t) / 2.0
            }
            _ => inf,
        },
        CostKind::Gm => match slack.theta {
            Some(t) if unit_interval(t) => t * t * a + (t - 1.0) * (t - 1.0),
            _ => inf,
        },
        CostKind::Tb => match slack.theta {
            Some(t) if unit_interval(t) => t * t * a + 1.0 / 3.0 - t * t + 2.0 / 3.0 * t * t * t,
            _ => inf,
        },
        CostKind::L1 => match slack.gamma {
            Some(g) if g >= 0.0 && (g * g - r * r).abs() <= EQ_TOL * (1.0 + r * r) => g / beta,
            _ => inf,
        },
        CostKind::Hb => match (slack.theta, slack.gamma) {
            (Some(t), Some(g))
                if binary(t)
                    && g >= 0.0
                    && (g * g - r * r).abs() <= EQ_TOL * (1.0 + r * r)
                    && t * (g - beta) <= EQ_TOL * (1.0 + beta) =>
            {
                (1.0 + t) / 2.0 * g * g / (2.0 * beta * beta)
                    + (1.0 - t) / 2.0 * (g / beta - 0.5)
            }
            _ => inf,
        },
        CostKind::Adt { p, q } => match slack.gamma {
            Some(g) if g >= 0.0 => {
                let s = kind.adt_scale().unwrap();
                let base = a / (s - 2.0).abs() + 1.0;
                let h = if p > 0 {
                    g.powi(2 * q) - base.powi(p)
                } else {
                    g.powi(2 * q) * base.powi(-p) - 1.0
                };
                let scale = 1.0 + base.powi(p.abs()) + g.powi(2 * q);
                if h.abs() <= 1e-7 * scale {
                    (s - 2.0).abs() / s * (g - 1.0)
                } else {
                    inf
                }
            }
            _ => inf,
        },
    })
}

/// Closed-form slack minimizing [`lifted_eval`]. Ties at `|r| = beta`
/// resolve to the inlier branch.
pub fn optimal_slack(kind: CostKind, r: f64, beta: f64) -> Result<SlackValue, CostError> {
    check_beta(beta)?;
    kind.validate()?;
    let a = (r / beta) * (r / beta);
    Ok(match kind {
        CostKind::Tls | CostKind::Mc => {
            SlackValue::theta(if r * r <= beta * beta { 1.0 } else { -1.0 })
        }
        // Stationarity of t^2 a + (t-1)^2 gives t = 1/(1+a).
        CostKind::Gm => SlackValue::theta(1.0 / (1.0 + a)),
        // Stationarity of t^2 a + 1/3 - t^2 + (2/3) t^3 gives t = 1 - a,
        // clipped to the unit interval.
        CostKind::Tb => SlackValue::theta((1.0 - a).clamp(0.0, 1.0)),
        CostKind::L1 => SlackValue::gamma(r.abs()),
        CostKind::Hb => {
            SlackValue::theta_gamma(if r.abs() <= beta { 1.0 } else { -1.0 }, r.abs())
        }
        CostKind::Adt { p, q } => {
            let s = kind.adt_scale().unwrap();
            let base = a / (s - 2.0).abs() + 1.0;
            SlackValue::gamma(base.powf(p as f64 / (2.0 * q as f64)))
        }
    })
}

/// A collection of squared residuals (quadratic polynomials in `x`) together
/// with the polynomial description of the feasible set.
#[derive(Debug, Clone)]
pub struct ResidualPop {
    pub d: usize,
    pub residuals_sq: Vec<Polynomial>,
    pub equalities: Vec<Polynomial>,
    pub inequalities: Vec<Polynomial>,
}

/// Lift the TLS estimation problem into a polynomial optimization instance:
/// append one binary `theta_i` per measurement, set the objective to
/// `sum_i (1+theta_i)/2 * r_i^2/beta_i^2 + (1-theta_i)/2`, and add the
/// `theta_i^2 - 1 = 0` equalities.
pub fn tls_pop_reformulate(base: &ResidualPop, betas: &[f64]) -> Result<PopInstance, CostError> {
    let n = base.residuals_sq.len();
    if betas.len() != n {
        return Err(CostError::BetaCountMismatch { expected: n, got: betas.len() });
    }
    for (i, r2) in base.residuals_sq.iter().enumerate() {
        if r2.degree() > 2 {
            return Err(CostError::ResidualDegreeTooHigh { index: i, degree: r2.degree() });
        }
    }
    for &b in betas {
        check_beta(b)?;
    }
    let vars = VarSpace::new(base.d, n);
    let mut objective = Polynomial::zero();
    let mut equalities = base.equalities.clone();
    for (i, r2) in base.residuals_sq.iter().enumerate() {
        let w = 1.0 / (2.0 * betas[i] * betas[i]);
        let theta = Monomial::var(vars.theta_var(i));
        objective = objective.add(&r2.scale(w));
        objective = objective.add(&r2.scale(w).mul_monomial(&theta));
        objective.add_term(Monomial::one(), 0.5);
        objective.add_term(theta.clone(), -0.5);
        // theta_i^2 - 1 = 0
        let mut sq = Polynomial::zero();
        sq.add_term(Monomial::from_powers(vec![(vars.theta_var(i) as u16, 2)]), 1.0);
        sq.add_term(Monomial::one(), -1.0);
        equalities.push(sq);
    }
    let pop = PopInstance {
        vars,
        objective,
        equalities,
        inequalities: base.inequalities.clone(),
    };
    pop.validate()?;
    Ok(pop)
}

/// TLS objective value at a candidate `(x, theta)` given per-measurement
/// squared residual values.
pub fn tls_objective(residual_sq_values: &[f64], betas: &[f64], theta: &[f64]) -> f64 {
    residual_sq_values
        .iter()
        .zip(betas)
        .zip(theta)
        .map(|((&r2, &b), &t)| (1.0 + t) / 2.0 * r2 / (b * b) + (1.0 - t) / 2.0)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    pub const ALL_KINDS: [CostKind; 9] = [
        CostKind::Tls,
        CostKind::Mc,
        CostKind::Gm,
        CostKind::Tb,
        CostKind::L1,
        CostKind::Hb,
        CostKind::Adt { p: 1, q: 1 },
        CostKind::Adt { p: -2, q: 1 },
        CostKind::Adt { p: 4, q: 3 },
    ];

    /// Grid minimization of the lifted form; the independent oracle used to
    /// validate the min-identity and the closed-form slacks.
    pub fn grid_min_lifted(kind: CostKind, r: f64, beta: f64, step: f64) -> (f64, SlackValue) {
        let mut best = (f64::INFINITY, SlackValue::default());
        let mut consider = |s: SlackValue| {
            let v = lifted_eval(kind, r, beta, s).unwrap();
            if v < best.0 {
                best = (v, s);
            }
        };
        match kind {
            CostKind::Tls | CostKind::Mc => {
                consider(SlackValue::theta(1.0));
                consider(SlackValue::theta(-1.0));
            }
            CostKind::Gm | CostKind::Tb => {
                let n = (1.0 / step) as usize;
                for k in 0..=n {
                    consider(SlackValue::theta(k as f64 * step));
                }
            }
            CostKind::L1 | CostKind::Adt { .. } => {
                // The equality constraint pins gamma; grid points off the
                // equality evaluate to infinity, so only nearby candidates
                // and the closed form matter.
                let g0 = r.abs();
                for k in -2i32..=2 {
                    consider(SlackValue::gamma((g0 + k as f64 * step).max(0.0)));
                }
            }
            CostKind::Hb => {
                for t in [-1.0, 1.0] {
                    for k in -2i32..=2 {
                        consider(SlackValue::theta_gamma(t, (r.abs() + k as f64 * step).max(0.0)));
                    }
                }
            }
        }
        // Always include the closed-form candidate.
        consider(optimal_slack(kind, r, beta).unwrap());
        best
    }

    #[test]
    fn rho_spot_values() {
        let b = 0.7;
        assert_eq!(rho_eval(CostKind::Tls, 0.0, b).unwrap(), 0.0);
        assert_eq!(rho_eval(CostKind::Tls, 2.0 * b, b).unwrap(), 1.0);
        assert!((rho_eval(CostKind::Gm, b, b).unwrap() - 0.5).abs() < 1e-15);
        assert!((rho_eval(CostKind::Tb, b, b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((rho_eval(CostKind::Tb, 5.0 * b, b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(rho_eval(CostKind::Mc, 0.5 * b, b).unwrap(), 0.0);
        assert_eq!(rho_eval(CostKind::Mc, 1.5 * b, b).unwrap(), 1.0);
        assert!(rho_eval(CostKind::Tls, 1.0, 0.0).is_err());
        assert!(rho_eval(CostKind::Tls, 1.0, -0.5).is_err());
    }

    #[test]
    fn lifted_spot_values() {
        let b = 1.3;
        assert_eq!(lifted_eval(CostKind::Tls, 0.0, b, SlackValue::theta(1.0)).unwrap(), 0.0);
        assert_eq!(lifted_eval(CostKind::Tls, 42.0, b, SlackValue::theta(-1.0)).unwrap(), 1.0);
        assert_eq!(
            lifted_eval(CostKind::Tls, 0.0, b, SlackValue::theta(0.3)).unwrap(),
            f64::INFINITY
        );
        // GM at r = beta with the optimal slack hits rho = 1/2.
        let s = optimal_slack(CostKind::Gm, b, b).unwrap();
        assert!((lifted_eval(CostKind::Gm, b, b, s).unwrap() - 0.5).abs() < 1e-12);
        let (grid, _) = grid_min_lifted(CostKind::Gm, b, b, 1e-4);
        assert!((grid - 0.5).abs() < 1e-6);
    }

    #[test]
    fn optimal_slack_spot_values() {
        let b = 0.9;
        assert_eq!(optimal_slack(CostKind::Tls, 0.0, b).unwrap().theta, Some(1.0));
        assert_eq!(optimal_slack(CostKind::Tls, 3.0 * b, b).unwrap().theta, Some(-1.0));
        // tie resolves to inlier
        assert_eq!(optimal_slack(CostKind::Tls, b, b).unwrap().theta, Some(1.0));
        assert_eq!(optimal_slack(CostKind::Mc, b, b).unwrap().theta, Some(1.0));
        // GM at r = beta: w = theta^2 = 1/4.
        let t = optimal_slack(CostKind::Gm, b, b).unwrap().theta.unwrap();
        assert!((t * t - 0.25).abs() < 1e-12);
    }

    #[test]
    fn min_identity_all_kinds() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for kind in ALL_KINDS {
            for _ in 0..500 {
                let beta: f64 = rng.gen_range(0.05..3.0);
                let r: f64 = rng.gen_range(-5.0..5.0) * beta;
                let rho = rho_eval(kind, r, beta).unwrap();
                let (grid, _) = grid_min_lifted(kind, r, beta, 1e-4);
                assert!(
                    (grid - rho).abs() <= 1e-6,
                    "{kind:?}: rho={rho}, grid={grid}, r={r}, beta={beta}"
                );
                let s = optimal_slack(kind, r, beta).unwrap();
                let at_closed = lifted_eval(kind, r, beta, s).unwrap();
                let tol = match kind {
                    CostKind::Tls | CostKind::Mc => 1e-8,
                    _ => 1e-6,
                };
                assert!(
                    at_closed <= grid + tol,
                    "{kind:?}: closed={at_closed}, grid={grid}, r={r}, beta={beta}"
                );
            }
        }
    }

    #[test]
    fn bound_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..2000 {
            let beta: f64 = rng.gen_range(0.05..3.0);
            let r: f64 = rng.gen_range(-10.0..10.0);
            assert!(rho_eval(CostKind::Tls, r, beta).unwrap() <= 1.0);
            let mc = rho_eval(CostKind::Mc, r, beta).unwrap();
            assert!(mc == 0.0 || mc == 1.0);
            assert!(rho_eval(CostKind::Tb, r, beta).unwrap() <= 1.0 / 3.0 + 1e-15);
        }
    }

    #[test]
    fn adt_scale_validation() {
        assert!(CostKind::Adt { p: 0, q: 1 }.validate().is_err());
        assert!(CostKind::Adt { p: 2, q: 1 }.validate().is_err());
        assert!(CostKind::Adt { p: 4, q: 2 }.validate().is_err());
        assert!(CostKind::Adt { p: 9, q: 1 }.validate().is_err());
        assert!(CostKind::Adt { p: 1, q: 9 }.validate().is_err());
        assert!(CostKind::Adt { p: -3, q: 2 }.validate().is_ok());
    }

    #[test]
    fn tls_reformulation_structure() {
        // Single measurement with identically zero residual.
        let base = ResidualPop {
            d: 1,
            residuals_sq: vec![Polynomial::zero()],
            equalities: vec![],
            inequalities: vec![],
        };
        let pop = tls_pop_reformulate(&base, &[1.0]).unwrap();
        assert_eq!(pop.vars.total(), 2);
        // objective = (1 - theta_1)/2, minimized at theta = +1 with value 0
        assert_eq!(pop.objective.eval(&[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(pop.objective.eval(&[0.0, -1.0]).unwrap(), 1.0);

        // A quadratic residual produces the degree-3 objective.
        let mut r2 = Polynomial::zero();
        r2.add_term(Monomial::from_powers(vec![(0, 2)]), 1.0);
        let base = ResidualPop {
            d: 2,
            residuals_sq: vec![r2.clone(), r2],
            equalities: vec![],
            inequalities: vec![],
        };
        let pop = tls_pop_reformulate(&base, &[1.0, 2.0]).unwrap();
        assert_eq!(pop.objective.degree(), 3);
        assert_eq!(pop.vars.total(), 2 + 2);
        assert_eq!(pop.equalities.len(), 2);

        // Residual of degree > 2 is rejected.
        let mut r3 = Polynomial::zero();
        r3.add_term(Monomial::from_powers(vec![(0, 3)]), 1.0);
        let base =
            ResidualPop { d: 1, residuals_sq: vec![r3], equalities: vec![], inequalities: vec![] };
        assert!(tls_pop_reformulate(&base, &[1.0]).is_err());
    }

    #[test]
    fn tls_objective_matches_reformulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut r2a = Polynomial::zero();
        r2a.add_term(Monomial::from_powers(vec![(0, 2)]), 1.0);
        let mut r2b = Polynomial::zero();
        r2b.add_term(Monomial::from_powers(vec![(1, 2)]), 2.0);
        r2b.add_term(Monomial::var(0), 0.5);
        r2b.add_term(Monomial::one(), 0.25);
        let betas = [0.8, 1.7];
        let base = ResidualPop {
            d: 2,
            residuals_sq: vec![r2a.clone(), r2b.clone()],
            equalities: vec![],
            inequalities: vec![],
        };
        let pop = tls_pop_reformulate(&base, &betas).unwrap();
        for _ in 0..50 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let th = [
                if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
                if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
            ];
            let pt = [x[0], x[1], th[0], th[1]];
            let direct = tls_objective(
                &[r2a.eval(&x).unwrap(), r2b.eval(&x).unwrap()],
                &betas,
                &th,
            );
            let via_pop = pop.objective.eval(&pt).unwrap();
            assert!((direct - via_pop).abs() < 1e-12 * (1.0 + direct.abs()));
        }
    }
}
