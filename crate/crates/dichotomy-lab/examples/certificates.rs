//! From a verified integral bound to explicit dichotomy constants.
//!
//! A passing integral check plus a growth bound on the Green kernel yields
//! constants `(a, b, eps, N1, N2)` with the two branch inequalities; the
//! derived certificate is then re-verified against the operator on the
//! same grid.
//!
//! ```bash
//! cargo run --example certificates
//! ```

use dichotomy_lab::datko::{
    check_condition, check_growth_bound, derive_certificate, verify_certificate, DatkoParams,
    GrowthBound,
};
use dichotomy_lab::estimate::{fit_constants, sample_norms};
use dichotomy_lab::evolution::CompatiblePair;
use dichotomy_lab::growth::{estimate_log_derivative_sup, GrowthRate};
use dichotomy_lab::quad::QuadSettings;
use nalgebra::DVector;

fn main() -> dichotomy_lab::Result<()> {
    let rate = GrowthRate::exponential();
    let pair = CompatiblePair::example_one(&rate, 2.0, 3.0, 0.0)?;

    let mut pairs = Vec::new();
    for i in 0..=10 {
        for j in 0..=10 {
            pairs.push((i as f64 * 0.5 + j as f64 * 0.5, i as f64 * 0.5));
        }
    }

    // step 1: the kernel growth bound holds on the grid
    let bound = GrowthBound {
        m: 1.0,
        omega: 0.1,
        alpha: 0.0,
    };
    let distinct: Vec<(f64, f64)> = pairs.iter().copied().filter(|&(t, s)| t != s).collect();
    let growth = check_growth_bound(&pair, &rate, &bound, &distinct)?;
    println!(
        "growth bound (M = 1, omega = 0.1, alpha = 0): {}",
        verdict(growth.pass)
    );

    // step 2: the integral condition passes with D = 1.5
    let params = DatkoParams {
        p: 1.0,
        gamma: 1.0,
        epsilon: 0.0,
        d_bound: 1.5,
    };
    let t_grid: Vec<f64> = (0..=10).map(|i| i as f64).collect();
    let basis = [
        DVector::from_vec(vec![1.0, 0.0]),
        DVector::from_vec(vec![0.0, 1.0]),
    ];
    let datko = check_condition(
        &pair,
        &rate,
        &params,
        &t_grid,
        &basis,
        40.0,
        &QuadSettings::default(),
    )?;
    println!(
        "integral condition (gamma = 1, D = 1.5): {}",
        verdict(datko.pass)
    );

    // step 3: derive constants and verify them
    let k = estimate_log_derivative_sup(&rate, &t_grid)?.sup;
    let cert = derive_certificate(&params, &bound, k)?;
    println!(
        "derived certificate: a = {:.3}, b = {:.3}, eps = {:.3}, N1 = {:.6}, N2 = {:.6}",
        cert.a, cert.b, cert.epsilon, cert.n1, cert.n2
    );
    let verification = verify_certificate(&pair, &rate, &cert, &pairs, 1e-9)?;
    println!("verification on the grid: {}", verdict(verification.pass));
    for check in &verification.checks {
        println!(
            "    {:<24} worst ratio {:.9}",
            check.name,
            check.worst_residual + 1.0
        );
    }

    // alternative route: fit constants from sampled norms instead
    let samples = sample_norms(&pair, &rate, &pairs)?;
    let fitted = fit_constants(&samples)?
        .certificate()
        .expect("both branches present");
    println!(
        "\nfitted certificate:  a = {:.6}, b = {:.6}, eps = {:.6}, N1 = {:.6}, N2 = {:.6}",
        fitted.a, fitted.b, fitted.epsilon, fitted.n1, fitted.n2
    );
    let verification = verify_certificate(&pair, &rate, &fitted, &pairs, 1e-9)?;
    println!("verification on the grid: {}", verdict(verification.pass));
    Ok(())
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}
