//! # dichotomy-lab
//!
//! Numerical analysis of dichotomies for nonautonomous linear systems.
//!
//! A nonautonomous linear system is described here by an evolution operator
//! `U(t, s)` together with a compatible projection family `P(t)` splitting
//! the state space into a decaying range and an expanding complement. The
//! decay and expansion are measured against a growth rate `mu` (exponential
//! `exp(t)`, polynomial `t + 1`, or anything in between), with an optional
//! loss of sharpness `mu(s)^eps` along trajectories. The toolkit can:
//!
//! - validate growth rates, cocycle laws, and projection compatibility on
//!   grids ([`growth`], [`evolution`]);
//! - evaluate the weighted Green-kernel integral criterion and decide
//!   whether a claimed bound holds ([`datko`]);
//! - derive explicit dichotomy constants from a verified integral bound
//!   plus a kernel growth bound, and verify any claimed constants
//!   ([`datko`]);
//! - fit dichotomy constants to sampled operator norms and classify the
//!   behavior as uniform, nonuniform, or not dichotomic ([`estimate`]);
//! - construct Lyapunov functions from admissible weights and check their
//!   defining conditions, including quadratic forms in the Euclidean case
//!   ([`lyapunov`]);
//! - run everything as one pipeline over a JSON system spec, from the
//!   library ([`pipeline`]) or the `dichotomy-lab` binary ([`cli`]).
//!
//! ## Example
//!
//! ```rust
//! use dichotomy_lab::evolution::CompatiblePair;
//! use dichotomy_lab::growth::GrowthRate;
//! use dichotomy_lab::datko::{check_condition, DatkoParams};
//! use dichotomy_lab::quad::QuadSettings;
//! use nalgebra::DVector;
//!
//! let rate = GrowthRate::exponential();
//! let pair = CompatiblePair::example_one(&rate, 2.0, 3.0, 0.0).unwrap();
//! let params = DatkoParams { p: 1.0, gamma: 1.0, epsilon: 0.0, d_bound: 1.5 };
//! let t_grid: Vec<f64> = (0..=10).map(|i| i as f64).collect();
//! let x = vec![DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![0.0, 1.0])];
//! let report = check_condition(
//!     &pair, &rate, &params, &t_grid, &x, 40.0, &QuadSettings::default(),
//! ).unwrap();
//! assert!(report.pass);
//! ```
//!
//! The runnable examples under `examples/` walk through each capability;
//! `cargo run -- analyze --spec <file>` drives the full pipeline from a
//! spec file.

pub mod error;
pub mod expr;
pub mod norm;
pub mod quad;
pub mod report;

pub mod growth;
pub mod ode;

pub mod datko;
pub mod estimate;
pub mod evolution;
pub mod lyapunov;

pub mod cli;
pub mod pipeline;
pub mod spec;

pub use error::{Error, Result};
pub use evolution::{CompatiblePair, EvolutionOperator, ProjectionFamily};
pub use growth::GrowthRate;
pub use norm::NormKind;
