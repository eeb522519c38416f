//! The coupled two-dimensional preset and its exact norm identities.
//!
//! The stable branch norm is exactly `(mu(t)/mu(s))^-a mu(s)^eps` in the
//! max norm, and the projection norm grows like `mu(s)^eps`, so for
//! `eps > 0` no time-independent bound exists: the dichotomy is genuinely
//! nonuniform.
//!
//! ```bash
//! cargo run --example exact_norms
//! ```

use dichotomy_lab::evolution::{check_cocycle, check_compatibility, CompatiblePair};
use dichotomy_lab::growth::GrowthRate;
use dichotomy_lab::norm::NormKind;
use nalgebra::DVector;

fn main() -> dichotomy_lab::Result<()> {
    let rate = GrowthRate::exponential();
    let (a, b, eps) = (2.0, 3.0, 0.1);
    let pair = CompatiblePair::example_one(&rate, a, b, eps)?;

    println!("stable-branch norms against the closed form:");
    for (t, s) in [(1.0, 0.0), (3.0, 1.0), (6.0, 2.0), (10.0, 10.0)] {
        let observed = NormKind::Max.operator(&(pair.u(t, s)? * pair.proj(s)));
        let exact = (rate.eval(t) / rate.eval(s)).powf(-a) * rate.eval(s).powf(eps);
        println!("    (t, s) = ({t:>4}, {s:>4}): {observed:.12e} vs {exact:.12e}");
    }

    println!("\nprojection norms grow like mu(s)^eps (nonuniformity):");
    for s in [0.0, 5.0, 10.0, 20.0] {
        println!(
            "    ||P({s:>4})|| = {:.6}",
            NormKind::Max.operator(&pair.proj(s))
        );
    }

    let mut pairs = Vec::new();
    for i in 0..=8 {
        for j in 0..=i {
            pairs.push((i as f64 * 0.5, j as f64 * 0.5));
        }
    }
    let compat = check_compatibility(&pair, &pairs, 1e-8)?;
    println!("\ncompatibility checks ({} pairs):", pairs.len());
    for check in &compat.checks {
        println!(
            "    {:<24} {}  worst residual {:.3e}",
            check.name,
            if check.pass { "pass" } else { "FAIL" },
            check.worst_residual
        );
    }

    let triples: Vec<(f64, f64, f64)> = pairs
        .iter()
        .filter(|(t, s)| t > s)
        .map(|&(t, s)| (t, 0.5 * (t + s), s))
        .collect();
    let cocycle = check_cocycle(pair.operator(), &triples, 1e-10)?;
    println!(
        "cocycle law on {} triples: {}",
        triples.len(),
        if cocycle.pass { "pass" } else { "FAIL" }
    );

    // the Green kernel switches branch (and sign) at tau = t
    println!("\nGreen kernel applied to basis vectors at t = 1:");
    let e1 = DVector::from_vec(vec![1.0, 0.0]);
    let e2 = DVector::from_vec(vec![0.0, 1.0]);
    for tau in [2.0, 1.0, 0.0] {
        let g1 = pair.green_apply(tau, 1.0, &e1)?;
        let g2 = pair.green_apply(tau, 1.0, &e2)?;
        println!(
            "    tau = {tau}: G e1 = ({:+.6}, {:+.6}), G e2 = ({:+.6}, {:+.6})",
            g1[0], g1[1], g2[0], g2[1]
        );
    }
    Ok(())
}
