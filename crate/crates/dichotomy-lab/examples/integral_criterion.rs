//! The weighted-integral criterion: evaluate the Green-kernel integral and
//! decide whether a claimed bound holds.
//!
//! ```bash
//! cargo run --example integral_criterion
//! ```

use dichotomy_lab::datko::{check_condition, integral, theoretical_d_bound, DatkoParams};
use dichotomy_lab::evolution::CompatiblePair;
use dichotomy_lab::growth::GrowthRate;
use dichotomy_lab::quad::QuadSettings;
use nalgebra::DVector;

fn main() -> dichotomy_lab::Result<()> {
    let rate = GrowthRate::exponential();
    let pair = CompatiblePair::example_one(&rate, 2.0, 3.0, 0.0)?;
    let quad = QuadSettings::default();

    // single integrals against their antiderivatives
    let e1 = DVector::from_vec(vec![1.0, 0.0]);
    let e2 = DVector::from_vec(vec![0.0, 1.0]);
    println!("criterion integrals at p = 1, gamma = 1:");
    for t in [1.0, 2.0, 5.0] {
        let stable = integral(&pair, &rate, 1.0, 1.0, t, &e1, t + 40.0, &quad)?;
        let unstable = integral(&pair, &rate, 1.0, 1.0, t, &e2, t + 40.0, &quad)?;
        println!(
            "    t = {t}: stable {:.9} (exact 1), unstable {:.9} (exact {:.9})",
            stable.total(),
            unstable.total(),
            (1.0 - (-2.0 * t).exp()) / 2.0
        );
    }

    // grid verdict with the theoretical bound
    let d = theoretical_d_bound(1.0, 1.0, 1.0, 2.0, 3.0, 1.0)?;
    let params = DatkoParams {
        p: 1.0,
        gamma: 1.0,
        epsilon: 0.0,
        d_bound: d,
    };
    let t_grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
    let samples = vec![e1.clone(), e2.clone(), DVector::from_vec(vec![0.7, -0.7])];
    let report = check_condition(&pair, &rate, &params, &t_grid, &samples, 40.0, &quad)?;
    println!(
        "\nuniform system, D = {d}: {} (max ratio {:.9} at t = {}, x #{})",
        if report.pass { "pass" } else { "FAIL" },
        report.max_ratio,
        report.argmax_t,
        report.argmax_x
    );

    // a weight exponent at or past the decay exponent makes the forward
    // integral blow up; the tail fit reports it
    let params = DatkoParams {
        p: 1.0,
        gamma: 2.5,
        epsilon: 0.0,
        d_bound: 1e6,
    };
    let report = check_condition(&pair, &rate, &params, &[1.0], &[e1.clone()], 40.0, &quad)?;
    println!(
        "gamma = 2.5 past the decay exponent a = 2: divergence flagged = {}, verdict {}",
        report.tail_divergence,
        if report.pass { "pass" } else { "FAIL" }
    );

    // the oscillating preset over the sqrt-shift rate
    let pair = CompatiblePair::example_two(3.0, 3.0, 0.5)?;
    let rate = GrowthRate::sqrt_shift();
    let params = DatkoParams {
        p: 1.0,
        gamma: 2.0,
        epsilon: 1.5,
        d_bound: 2.0,
    };
    let report = check_condition(&pair, &rate, &params, &t_grid, &[e1, e2], 200.0, &quad)?;
    println!(
        "oscillating system, D = 2: {} (max ratio {:.9})",
        if report.pass { "pass" } else { "FAIL" },
        report.max_ratio
    );
    Ok(())
}
