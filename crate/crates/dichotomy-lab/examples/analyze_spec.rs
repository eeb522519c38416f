//! The full pipeline on a JSON system spec, as the `analyze` subcommand
//! runs it.
//!
//! ```bash
//! cargo run --example analyze_spec
//! ```

use dichotomy_lab::pipeline::run_analysis;
use dichotomy_lab::spec::SystemSpec;

const SPEC: &str = r#"{
    "growth_rate": {"kind": "exponential"},
    "operator": {"kind": "example1", "a": 2.0, "b": 3.0, "epsilon": 0.1},
    "analysis": {
        "p": 1.0,
        "gammas": [0.5, 1.0, 1.5],
        "growth_bound": {"m": 1.1, "omega": 0.1, "alpha": 0.1}
    }
}"#;

fn main() -> dichotomy_lab::Result<()> {
    let spec = SystemSpec::from_json(SPEC)?;
    println!(
        "canonical spec with defaults filled:\n{}\n",
        spec.to_json_pretty()
    );

    let out = run_analysis(&spec, 42)?;
    println!("summary:");
    for line in out.report.summary_lines() {
        println!("    {line}");
    }

    println!("\nestimate section:");
    println!(
        "{}",
        serde_json::to_string_pretty(&out.report.estimate).expect("serializable section")
    );

    println!(
        "\nfull report: {} bytes of JSON; norm samples: {} CSV rows",
        out.report.to_json_pretty().len(),
        out.samples_csv.lines().count() - 1
    );
    Ok(())
}
