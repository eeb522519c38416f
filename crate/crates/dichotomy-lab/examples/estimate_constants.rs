//! Fit dichotomy constants to sampled operator norms and classify the
//! behavior as uniform, nonuniform, or not dichotomic.
//!
//! ```bash
//! cargo run --example estimate_constants
//! ```

use dichotomy_lab::estimate::{
    classify_uniformity, fit_constants, sample_norms, DEFAULT_UNIFORMITY_TOL,
};
use dichotomy_lab::evolution::{CompatiblePair, EvolutionOperator, ProjectionFamily};
use dichotomy_lab::growth::GrowthRate;
use nalgebra::DMatrix;

fn main() -> dichotomy_lab::Result<()> {
    let mut pairs = Vec::new();
    for i in 0..=10 {
        for j in 1..=10 {
            pairs.push((i as f64 * 0.5 + j as f64 * 0.5, i as f64 * 0.5));
        }
    }

    let rate = GrowthRate::exponential();
    for (label, eps) in [("uniform (eps = 0)", 0.0), ("nonuniform (eps = 0.1)", 0.1)] {
        let pair = CompatiblePair::example_one(&rate, 2.0, 3.0, eps)?;
        let samples = sample_norms(&pair, &rate, &pairs)?;
        let est = fit_constants(&samples)?;
        let stable = est.stable.as_ref().unwrap();
        let unstable = est.unstable.as_ref().unwrap();
        println!("{label}:");
        println!(
            "    a = {:.9}, b = {:.9}, eps = {:.9}",
            stable.rate_exponent, unstable.rate_exponent, est.epsilon
        );
        println!(
            "    log N1 = {:.3e} (envelope slack {:.3e}), log N2 = {:.3e}",
            stable.log_n, stable.residual, unstable.log_n
        );
        println!(
            "    classified: {:?}",
            classify_uniformity(&est, DEFAULT_UNIFORMITY_TOL)
        );
    }

    // identity dynamics has no decay at all
    let u = EvolutionOperator::closed_form(2, |_, _| DMatrix::identity(2, 2));
    let p = ProjectionFamily::constant(DMatrix::identity(2, 2))?;
    let pair = CompatiblePair::new(u, p)?;
    let samples = sample_norms(&pair, &rate, &pairs)?;
    let est = fit_constants(&samples)?;
    println!(
        "identity dynamics: a = {:.3}, classified {:?}",
        est.stable.as_ref().unwrap().rate_exponent,
        classify_uniformity(&est, DEFAULT_UNIFORMITY_TOL)
    );

    // the sample table exports as CSV for external plotting
    let pair = CompatiblePair::example_one(&rate, 2.0, 3.0, 0.1)?;
    let samples = sample_norms(&pair, &rate, &pairs[..6])?;
    println!("\nCSV preview:\n{}", samples.to_csv());
    Ok(())
}
