//! Validate growth rates and bound their logarithmic derivative.
//!
//! ```bash
//! cargo run --example growth_rates
//! ```

use dichotomy_lab::expr::Expression;
use dichotomy_lab::growth::{
    check_log_derivative_bound, estimate_log_derivative_sup, validate_growth_rate, GrowthRate,
};

fn main() -> dichotomy_lab::Result<()> {
    let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
    let deltas = [0.5, 1.0, 2.0, 4.0];

    let rates = [
        ("exponential", GrowthRate::exponential()),
        ("polynomial", GrowthRate::polynomial()),
        ("sqrt_shift", GrowthRate::sqrt_shift()),
        (
            "custom log-type",
            GrowthRate::custom(Expression::parse("exp(sqrt(log(t + 1)))")?),
        ),
    ];

    for (name, rate) in &rates {
        let report = validate_growth_rate(rate, &grid, 1e-5)?;
        println!(
            "{name}: validation {}",
            if report.pass { "pass" } else { "FAIL" }
        );
        for check in &report.checks {
            println!(
                "    {:<24} {}  worst residual {:.3e}",
                check.name,
                if check.pass { "pass" } else { "FAIL" },
                check.worst_residual
            );
        }

        let sup = estimate_log_derivative_sup(rate, &grid)?;
        println!(
            "    sup mu'/mu ~ {:.6} (attained at t = {})",
            sup.sup, sup.at
        );

        // the three equivalent formulations agree above the supremum and
        // disagree below it
        for factor in [2.0, 0.5] {
            let k = factor * sup.sup;
            let bound = check_log_derivative_bound(rate, k, &grid, &deltas, 1e-9)?;
            println!(
                "    K = {k:.3}: derivative {} / envelope {} / shift {}  (verdicts agree: {})",
                bound.derivative.pass, bound.envelope.pass, bound.shift.pass, bound.agree
            );
        }
        println!();
    }

    // the custom rate above is unbounded but sub-polynomial; the built-in
    // scales bracket it
    let custom = &rates[3].1;
    for t in [10.0, 1e3, 1e6] {
        println!("custom rate at t = {t:>9}: mu = {:.6}", custom.eval(t));
    }
    Ok(())
}
