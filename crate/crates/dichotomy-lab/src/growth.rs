//! Growth rates: the time scales against which decay and expansion are
//! measured.
//!
//! A growth rate is an increasing function `mu` on `[0, inf)` with
//! `mu(0) = 1` that tends to infinity. The exponential rate `exp(t)` and the
//! polynomial rate `t + 1` are the classical scales; `t + sqrt(t^2 + 1)` sits
//! strictly between them. Custom rates come from the expression language and
//! carry a symbolic derivative.

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::report::{Check, ValidationReport, WorstCase};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    Exponential,
    Polynomial,
    SqrtShift,
    Custom,
}

/// A differentiable growth rate `mu` with derivative `mu'` and, when known
/// analytically, a bound on the logarithmic derivative `mu'/mu`.
#[derive(Debug, Clone)]
pub struct GrowthRate {
    kind: RateKind,
    /// Present only for custom rates: the expression and its symbolic
    /// derivative.
    custom: Option<(Expression, Expression)>,
    known_log_derivative_bound: Option<f64>,
}

impl GrowthRate {
    /// `mu(t) = exp(t)`; recovers exponential dichotomies.
    pub fn exponential() -> Self {
        GrowthRate {
            kind: RateKind::Exponential,
            custom: None,
            known_log_derivative_bound: Some(1.0),
        }
    }

    /// `mu(t) = t + 1`; recovers polynomial dichotomies.
    pub fn polynomial() -> Self {
        GrowthRate {
            kind: RateKind::Polynomial,
            custom: None,
            known_log_derivative_bound: Some(1.0),
        }
    }

    /// `mu(t) = t + sqrt(t^2 + 1)`, with `mu'/mu = 1/sqrt(t^2 + 1) <= 1`.
    pub fn sqrt_shift() -> Self {
        GrowthRate {
            kind: RateKind::SqrtShift,
            custom: None,
            known_log_derivative_bound: Some(1.0),
        }
    }

    /// A rate given by an expression in `t`; the derivative is symbolic.
    pub fn custom(expr: Expression) -> Self {
        let deriv = expr.derivative();
        GrowthRate {
            kind: RateKind::Custom,
            custom: Some((expr, deriv)),
            known_log_derivative_bound: None,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "exponential" => Some(Self::exponential()),
            "polynomial" => Some(Self::polynomial()),
            "sqrt_shift" => Some(Self::sqrt_shift()),
            _ => None,
        }
    }

    pub fn with_known_log_derivative_bound(mut self, k: f64) -> Self {
        self.known_log_derivative_bound = Some(k);
        self
    }

    pub fn kind(&self) -> RateKind {
        self.kind
    }

    /// The expression for a custom rate, if this is one.
    pub fn expression(&self) -> Option<&Expression> {
        self.custom.as_ref().map(|(e, _)| e)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.kind {
            RateKind::Exponential => t.exp(),
            RateKind::Polynomial => t + 1.0,
            RateKind::SqrtShift => t + (t * t + 1.0).sqrt(),
            RateKind::Custom => self.custom.as_ref().unwrap().0.eval(t),
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match self.kind {
            RateKind::Exponential => t.exp(),
            RateKind::Polynomial => 1.0,
            RateKind::SqrtShift => 1.0 + t / (t * t + 1.0).sqrt(),
            RateKind::Custom => self.custom.as_ref().unwrap().1.eval(t),
        }
    }

    /// `mu'(t) / mu(t)`.
    pub fn log_derivative(&self, t: f64) -> f64 {
        self.deriv(t) / self.eval(t)
    }

    /// `log mu(t)`, computed directly where a closed form exists.
    pub fn log_eval(&self, t: f64) -> f64 {
        match self.kind {
            RateKind::Exponential => t,
            _ => self.eval(t).ln(),
        }
    }

    pub fn known_log_derivative_bound(&self) -> Option<f64> {
        self.known_log_derivative_bound
    }
}

/// Grid estimate of `sup mu'/mu`.
#[derive(Debug, Clone, Serialize)]
pub struct LogDerivativeSup {
    pub sup: f64,
    /// Grid point where the supremum was attained.
    pub at: f64,
    pub known_bound: Option<f64>,
    /// True when the grid supremum exceeds the declared analytic bound by
    /// more than 1e-9.
    pub exceeds_known: bool,
}

/// Maximum of `mu'/mu` over the grid, checked against the analytic bound
/// when one is declared.
pub fn estimate_log_derivative_sup(rate: &GrowthRate, grid: &[f64]) -> Result<LogDerivativeSup> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("grid for log-derivative estimate"));
    }
    let (mut sup, mut at) = (f64::NEG_INFINITY, grid[0]);
    for &t in grid {
        let v = rate.log_derivative(t);
        if v > sup {
            sup = v;
            at = t;
        }
    }
    let known = rate.known_log_derivative_bound();
    Ok(LogDerivativeSup {
        sup,
        at,
        known_bound: known,
        exceeds_known: known.map_or(false, |k| sup > k + 1e-9),
    })
}

/// Validate the growth-rate axioms on a grid.
///
/// `deriv_tol` is the relative tolerance for agreement between the declared
/// derivative and a finite difference of `eval`; the remaining checks use
/// fixed tolerances (1e-12 absolute). Rates whose values dip below 1 are
/// reported as failures, not errors.
pub fn validate_growth_rate(
    rate: &GrowthRate,
    grid: &[f64],
    deriv_tol: f64,
) -> Result<ValidationReport> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("growth-rate validation grid"));
    }
    if grid[0] != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "validation grid must start at 0, got {}",
            grid[0]
        )));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(
            "validation grid must be sorted ascending".into(),
        ));
    }

    let mut report = ValidationReport::new();

    let unit_residual = (rate.eval(0.0) - 1.0).abs();
    report.push(Check::new(
        "unit_at_zero",
        unit_residual <= 1e-12,
        unit_residual,
    ));

    let mut below_one = WorstCase::new();
    for &t in grid {
        below_one.observe(1.0 - rate.eval(t), || format!("t = {t}"));
    }
    report.push(below_one.into_check("values_at_least_one", 1e-12));

    let mut decrease = WorstCase::new();
    for w in grid.windows(2) {
        decrease.observe(rate.eval(w[0]) - rate.eval(w[1]), || {
            format!("t = {} .. {}", w[0], w[1])
        });
    }
    report.push(decrease.into_check("nondecreasing", 1e-12));

    // Unbounded growth: probe geometrically out to 1e6 for a value > 1e3.
    let mut best = grid
        .iter()
        .map(|&t| rate.eval(t))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut probe = 1.0;
    while probe <= 1e6 && best <= 1e3 {
        best = best.max(rate.eval(probe));
        probe *= 10.0;
    }
    report.push(Check::new("unbounded", best > 1e3, (1e3 - best).max(0.0)));

    let mut deriv_mismatch = WorstCase::new();
    for &t in grid {
        let h = 1e-6f64.max(1e-6 * t);
        let fd = if t - h >= 0.0 {
            (rate.eval(t + h) - rate.eval(t - h)) / (2.0 * h)
        } else {
            // second-order one-sided difference near the left endpoint
            (-3.0 * rate.eval(t) + 4.0 * rate.eval(t + h) - rate.eval(t + 2.0 * h)) / (2.0 * h)
        };
        let rel = (fd - rate.deriv(t)).abs() / 1f64.max(rate.deriv(t).abs());
        deriv_mismatch.observe(rel, || format!("t = {t}"));
    }
    report.push(deriv_mismatch.into_check("derivative_consistency", deriv_tol));

    Ok(report)
}

/// The three equivalent formulations of "K bounds the logarithmic
/// derivative of mu", each checked on a finite grid.
#[derive(Debug, Clone, Serialize)]
pub struct LogDerivativeBoundReport {
    pub bound: f64,
    /// `mu'(t)/mu(t) <= K` on the grid (residual: relative excess over K).
    pub derivative: Check,
    /// `mu(t) <= mu(t0) exp(K (t - t0))` over grid pairs (residual: log excess).
    pub envelope: Check,
    /// `mu(t + d) <= mu(t) exp(K d)` for grid t and offsets d (residual: log excess).
    pub shift: Check,
    /// Whether the three verdicts are consistent: either all pass, or the
    /// derivative bound fails together with at least one of the others.
    pub agree: bool,
}

impl LogDerivativeBoundReport {
    pub fn all_pass(&self) -> bool {
        self.derivative.pass && self.envelope.pass && self.shift.pass
    }
}

/// Check `K` against the three formulations. A "pass" means no violation was
/// found on the supplied grid, not a proof over all times.
pub fn check_log_derivative_bound(
    rate: &GrowthRate,
    k: f64,
    grid: &[f64],
    deltas: &[f64],
    tol: f64,
) -> Result<LogDerivativeBoundReport> {
    if k <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "bound K must be positive, got {k}"
        )));
    }
    if grid.is_empty() || deltas.is_empty() {
        return Err(Error::EmptyInput("log-derivative bound grid/deltas"));
    }

    let mut derivative = WorstCase::new();
    for &t in grid {
        derivative.observe(rate.log_derivative(t) / k - 1.0, || format!("t = {t}"));
    }
    let derivative = derivative.into_check("derivative_bound", tol);

    let mut envelope = WorstCase::new();
    for (i, &t0) in grid.iter().enumerate() {
        let log_mu0 = rate.log_eval(t0);
        for &t in &grid[i..] {
            let excess = rate.log_eval(t) - log_mu0 - k * (t - t0);
            envelope.observe(excess, || format!("t0 = {t0}, t = {t}"));
        }
    }
    let envelope = envelope.into_check("integrated_envelope", tol);

    let mut shift = WorstCase::new();
    for &t in grid {
        let log_mu = rate.log_eval(t);
        for &d in deltas {
            let excess = rate.log_eval(t + d) - log_mu - k * d;
            shift.observe(excess, || format!("t = {t}, delta = {d}"));
        }
    }
    let shift = shift.into_check("shift_ratio", tol);

    let passes = [derivative.pass, envelope.pass, shift.pass];
    let agree = if passes[0] {
        passes[1] && passes[2]
    } else {
        !passes[1] || !passes[2]
    };

    Ok(LogDerivativeBoundReport {
        bound: k,
        derivative,
        envelope,
        shift,
        agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid_0_to_10() -> Vec<f64> {
        (0..=10).map(|i| i as f64).collect()
    }

    #[test]
    fn builtin_rates_validate() {
        for rate in [
            GrowthRate::exponential(),
            GrowthRate::polynomial(),
            GrowthRate::sqrt_shift(),
        ] {
            let report = validate_growth_rate(&rate, &grid_0_to_10(), 1e-5).unwrap();
            assert!(report.pass, "{:?}: {:?}", rate.kind(), report);
        }
        // exp(0) = 1 exactly
        assert_eq!(GrowthRate::exponential().eval(0.0), 1.0);
        assert_eq!(GrowthRate::sqrt_shift().eval(0.0), 1.0);
    }

    #[test]
    fn custom_rate_from_expression_validates() {
        let rate = GrowthRate::custom(Expression::parse("t + sqrt(t^2 + 1)").unwrap());
        let report = validate_growth_rate(&rate, &grid_0_to_10(), 1e-5).unwrap();
        assert!(report.pass, "{report:?}");
        let builtin = GrowthRate::sqrt_shift();
        for &t in &grid_0_to_10() {
            assert!((rate.eval(t) - builtin.eval(t)).abs() < 1e-12);
            assert!((rate.deriv(t) - builtin.deriv(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn bounded_rate_fails_unbounded_check() {
        let rate = GrowthRate::custom(Expression::parse("2 - exp(-t)").unwrap());
        let report = validate_growth_rate(&rate, &grid_0_to_10(), 1e-5).unwrap();
        assert!(!report.pass);
        assert!(!report.check("unbounded").unwrap().pass);
        assert!(report.check("nondecreasing").unwrap().pass);
    }

    #[test]
    fn decreasing_rate_reports_failures_not_errors() {
        let rate = GrowthRate::custom(Expression::parse("exp(-t)").unwrap());
        let report = validate_growth_rate(&rate, &grid_0_to_10(), 1e-5).unwrap();
        assert!(!report.check("values_at_least_one").unwrap().pass);
        assert!(!report.check("nondecreasing").unwrap().pass);
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(validate_growth_rate(&GrowthRate::exponential(), &[], 1e-5).is_err());
        assert!(estimate_log_derivative_sup(&GrowthRate::exponential(), &[]).is_err());
    }

    #[test]
    fn log_derivative_sup_of_builtins_is_one() {
        let grid = grid_0_to_10();
        for rate in [
            GrowthRate::exponential(),
            GrowthRate::polynomial(),
            GrowthRate::sqrt_shift(),
        ] {
            let est = estimate_log_derivative_sup(&rate, &grid).unwrap();
            assert!(
                (est.sup - 1.0).abs() < 1e-12,
                "{:?}: {}",
                rate.kind(),
                est.sup
            );
            assert!(!est.exceeds_known);
        }
        // polynomial and sqrt_shift attain it at t = 0
        let est = estimate_log_derivative_sup(&GrowthRate::polynomial(), &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(est.at, 0.0);
    }

    #[test]
    fn exponential_bound_one_passes_with_equality() {
        let deltas = [0.5, 1.0, 2.0];
        let report = check_log_derivative_bound(
            &GrowthRate::exponential(),
            1.0,
            &grid_0_to_10(),
            &deltas,
            1e-12,
        )
        .unwrap();
        assert!(report.all_pass(), "{report:?}");
        assert!(report.agree);
        // equality in the envelope: residual is roundoff
        assert!(report.envelope.worst_residual.abs() < 1e-12);
    }

    #[test]
    fn exponential_bound_half_fails_all_three() {
        let report = check_log_derivative_bound(
            &GrowthRate::exponential(),
            0.5,
            &grid_0_to_10(),
            &[0.5, 1.0, 2.0],
            1e-12,
        )
        .unwrap();
        assert!(!report.derivative.pass);
        assert!(!report.envelope.pass);
        assert!(!report.shift.pass);
        assert!(report.agree);
    }

    #[test]
    fn polynomial_bound_one_passes() {
        let report = check_log_derivative_bound(
            &GrowthRate::polynomial(),
            1.0,
            &grid_0_to_10(),
            &[0.5, 1.0, 2.0],
            1e-12,
        )
        .unwrap();
        assert!(report.all_pass(), "{report:?}");
    }

    proptest! {
        // Adding grid points never decreases the estimated supremum.
        #[test]
        fn sup_estimate_monotone_in_grid(
            base in proptest::collection::vec(0.0f64..50.0, 1..20),
            extra in proptest::collection::vec(0.0f64..50.0, 0..10),
        ) {
            let rate = GrowthRate::sqrt_shift();
            let small = estimate_log_derivative_sup(&rate, &base).unwrap().sup;
            let mut grid = base.clone();
            grid.extend_from_slice(&extra);
            let big = estimate_log_derivative_sup(&rate, &grid).unwrap().sup;
            prop_assert!(big >= small);
        }

        // Above the grid supremum every formulation passes; below it the
        // derivative formulation must fail.
        #[test]
        fn bound_verdicts_track_the_supremum(which in 0usize..3, slack in 1e-6f64..0.5) {
            let rate = match which {
                0 => GrowthRate::exponential(),
                1 => GrowthRate::polynomial(),
                _ => GrowthRate::sqrt_shift(),
            };
            let grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.25).collect();
            let deltas: Vec<f64> = (1..=10).map(|i| i as f64 * 0.3).collect();
            let sup = estimate_log_derivative_sup(&rate, &grid).unwrap().sup;

            let above =
                check_log_derivative_bound(&rate, sup + slack, &grid, &deltas, 1e-12).unwrap();
            prop_assert!(above.all_pass(), "{:?}", above);
            prop_assert!(above.agree);

            // Below the supremum only the derivative verdict is guaranteed
            // to fail on a finite grid: for K within a grid spacing of the
            // supremum, the envelope violation can fall between grid points.
            let below =
                check_log_derivative_bound(&rate, sup - slack.min(sup * 0.5), &grid, &deltas, 1e-12)
                    .unwrap();
            prop_assert!(!below.derivative.pass);

            // At half the supremum the disagreement window is macroscopic
            // and all three verdicts fail together.
            let half = check_log_derivative_bound(&rate, 0.5 * sup, &grid, &deltas, 1e-12).unwrap();
            prop_assert!(!half.derivative.pass && !half.envelope.pass && !half.shift.pass);
            prop_assert!(half.agree, "{:?}", half);
        }
    }
}
