//! Construct a Lyapunov function from an admissible weight and check its
//! three defining conditions; then the quadratic-form variant.
//!
//! ```bash
//! cargo run --example lyapunov_functions
//! ```

use dichotomy_lab::evolution::CompatiblePair;
use dichotomy_lab::growth::GrowthRate;
use dichotomy_lab::lyapunov::{
    check_lyapunov_conditions, check_quadratic_certificate, check_weight_membership,
    LyapunovCheckParams, LyapunovFunction, QuadraticCertificate, WeightOperator,
};
use dichotomy_lab::quad::QuadSettings;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};

fn main() -> dichotomy_lab::Result<()> {
    let rate = GrowthRate::exponential();
    let pair = CompatiblePair::example_one(&rate, 2.0, 3.0, 0.0)?;
    let quad = QuadSettings::default();

    // the canonical weight saturates the admissibility bound
    let weight = WeightOperator::canonical(&pair, &rate, 1.0, 1.0)?;
    let grid: Vec<(f64, DVector<f64>)> = (0..=10)
        .map(|i| (i as f64 * 0.5, DVector::from_vec(vec![0.6, -0.8])))
        .collect();
    let membership = check_weight_membership(&weight, &pair, &rate, 1.0, 1.0, &grid)?;
    println!("canonical weight admissible: {}", membership.pass);

    // closed forms of the constructed function on the two branches
    let l = LyapunovFunction::construct(&pair, &rate, &weight, 1.0, 50.0, quad)?;
    println!("\nbranch values against closed forms:");
    for t in [0.0, 1.0, 2.0, 4.0] {
        let stable = l.value(t, &DVector::from_vec(vec![1.0, 0.0]))?;
        let unstable = l.value(t, &DVector::from_vec(vec![0.0, 1.0]))?;
        println!(
            "    t = {t}: L on stable branch {stable:.9} (exact {:.9}), on unstable {unstable:.9} (exact {:.9})",
            t.exp(),
            -((-t).exp() - (-3.0 * t).exp()) / 2.0
        );
    }

    // the three conditions on randomized triples
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let triples: Vec<(f64, f64, DVector<f64>)> = (0..100)
        .map(|_| {
            let s = rng.gen_range(0.0..4.0);
            let d = rng.gen_range(0.0..4.0);
            let x = DVector::from_vec(vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0f64)]);
            let x = if x.norm() < 1e-3 {
                DVector::from_vec(vec![1.0, 0.0])
            } else {
                x
            };
            (s + d, s, x)
        })
        .collect();
    let params = LyapunovCheckParams {
        gamma: 1.0,
        epsilon: 0.0,
        d_bound: 1.5,
    };
    let report = check_lyapunov_conditions(
        &l, &pair, &rate, &weight, 1.0, &params, &triples, &quad, 1e-6,
    )?;
    println!("\nconditions on {} random triples:", triples.len());
    for check in &report.checks {
        println!(
            "    {:<28} {}  worst residual {:+.3e}",
            check.name,
            if check.pass { "pass" } else { "FAIL" },
            check.worst_residual
        );
    }

    // quadratic form for the p = 2 case on the same (diagonal) system
    let weight2 = WeightOperator::canonical(&pair, &rate, 1.0, 2.0)?;
    let w = QuadraticCertificate::from_fn(|t| {
        let w11 = (2.0 * t).exp();
        let w22 = -(((-2.0 * t).exp() - (-6.0 * t).exp()) / 2.0);
        DMatrix::from_row_slice(2, 2, &[w11, 0.0, 0.0, w22])
    });
    let params = LyapunovCheckParams {
        gamma: 1.0,
        epsilon: 0.0,
        d_bound: 1.5,
    };
    let report =
        check_quadratic_certificate(&w, &pair, &rate, &weight2, &params, &triples, &quad, 1e-6)?;
    println!(
        "\nquadratic certificate (p = 2): {}",
        if report.pass { "pass" } else { "FAIL" }
    );
    for check in &report.checks {
        println!(
            "    {:<34} {}  worst residual {:+.3e}",
            check.name,
            if check.pass { "pass" } else { "FAIL" },
            check.worst_residual
        );
    }
    Ok(())
}
