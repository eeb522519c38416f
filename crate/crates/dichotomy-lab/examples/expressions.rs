//! The expression sublanguage: parsing, evaluation, symbolic derivatives.
//!
//! ```bash
//! cargo run --example expressions
//! ```

use dichotomy_lab::expr::Expression;

fn main() {
    let inputs = [
        "t + sqrt(t^2 + 1)",
        "exp(-2*t) * cos(t)",
        "2^3^2",
        "-t^2 + 1/(t + 1)",
        "log(t + 1) / (1 + sin(t)^2)",
    ];
    for text in inputs {
        let expr = Expression::parse(text).unwrap();
        let deriv = expr.derivative();
        println!("input:      {text}");
        println!("canonical:  {expr}");
        println!("derivative: {deriv}");
        for t in [0.0, 1.0, 2.5] {
            println!(
                "    t = {t}: value {:.9}, slope {:.9}",
                expr.eval(t),
                deriv.eval(t)
            );
        }
        println!();
    }

    // errors carry byte offsets
    for bad in ["2 +", "sin t", "2 * foo(1)"] {
        println!("{bad:?} -> {}", Expression::parse(bad).unwrap_err());
    }
}
