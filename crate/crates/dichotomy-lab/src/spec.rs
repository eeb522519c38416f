//! System specification files: the JSON input consumed by the pipeline.
//!
//! A spec names a growth rate, an operator (a built-in preset, a diagonal
//! family over the rate, or a coefficient matrix integrated on demand), a
//! projection, and an analysis block. Loading validates the schema, fills
//! every default, and enforces the constructors' parameter constraints, so
//! a loaded spec is the canonical form: serializing it and loading the
//! result is the identity.

use crate::datko::GrowthBound;
use crate::error::{Error, Result};
use crate::evolution::{CompatiblePair, EvolutionOperator, ProjectionFamily};
use crate::expr::Expression;
use crate::growth::GrowthRate;
use crate::norm::NormKind;
use crate::ode::OdeSettings;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GrowthRateSpec {
    Exponential,
    Polynomial,
    SqrtShift,
    Custom { expr: String },
}

impl GrowthRateSpec {
    pub fn build(&self) -> Result<GrowthRate> {
        match self {
            GrowthRateSpec::Exponential => Ok(GrowthRate::exponential()),
            GrowthRateSpec::Polynomial => Ok(GrowthRate::polynomial()),
            GrowthRateSpec::SqrtShift => Ok(GrowthRate::sqrt_shift()),
            GrowthRateSpec::Custom { expr } => {
                let parsed = Expression::parse(expr).map_err(|e| Error::Spec {
                    pointer: "/growth_rate/expr".into(),
                    message: e.to_string(),
                })?;
                Ok(GrowthRate::custom(parsed))
            }
        }
    }

    fn canonicalize(&mut self) -> Result<()> {
        if let GrowthRateSpec::Custom { expr } = self {
            let parsed = Expression::parse(expr).map_err(|e| Error::Spec {
                pointer: "/growth_rate/expr".into(),
                message: e.to_string(),
            })?;
            *expr = parsed.to_string();
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Example1 { a: f64, b: f64, epsilon: f64 },
    Example2 { a: f64, b: f64, alpha: f64 },
    Diagonal { exponents: Vec<f64> },
    Ode { matrix: Vec<Vec<String>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProjectionSpec {
    /// Defined by the operator: the presets carry their own projection,
    /// a diagonal operator projects onto its negative exponents.
    Implied,
    Coordinate {
        indices: Vec<usize>,
    },
    Constant {
        entries: Vec<Vec<f64>>,
    },
}

impl Default for ProjectionSpec {
    fn default() -> Self {
        ProjectionSpec::Implied
    }
}

/// Inclusive arithmetic grid `start, start + step, ..` up to `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        GridSpec { start, stop, step }
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step).round() as usize;
        (0..=n)
            .map(|i| self.start + self.step * i as f64)
            .filter(|&t| t <= self.stop + 1e-12)
            .collect()
    }

    fn validate(&self, pointer: &str) -> Result<()> {
        if !(self.step > 0.0) || !(self.stop >= self.start) || self.start < 0.0 {
            return Err(Error::Spec {
                pointer: pointer.into(),
                message: format!(
                    "grid requires 0 <= start <= stop and step > 0 (start = {}, stop = {}, step = {})",
                    self.start, self.stop, self.step
                ),
            });
        }
        Ok(())
    }
}

/// Two-parameter grid of ordered pairs `(s + offset, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairGridSpec {
    pub base: GridSpec,
    pub offset: GridSpec,
}

impl PairGridSpec {
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for &s in &self.base.points() {
            for &d in &self.offset.points() {
                out.push((s + d, s));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default = "default_p")]
    pub p: f64,
    pub gammas: Vec<f64>,
    /// Nonuniformity exponent of the claimed integral bound. Defaults to
    /// the preset's exact value (example1: its epsilon; example2:
    /// alpha + 1), else 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Claimed bound `D`; when absent, each check uses the theoretical
    /// value computed from the fitted constants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth_bound: Option<GrowthBound>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_grid: Option<PairGridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_samples: Option<usize>,
    /// Truncation offset for semi-infinite integrals; when absent it is
    /// derived per gamma from the fitted decay exponent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max_offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniformity_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov_triples: Option<usize>,
}

fn default_p() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub growth_rate: GrowthRateSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    pub operator: OperatorSpec,
    #[serde(default)]
    pub projection: ProjectionSpec,
    pub analysis: AnalysisSpec,
}

impl SystemSpec {
    /// Parse, validate, and canonicalize a spec from JSON text.
    pub fn from_json(text: &str) -> Result<SystemSpec> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut spec: SystemSpec = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let pointer = if path == "." {
                "/".to_string()
            } else {
                format!("/{}", path.replace('.', "/"))
            };
            Error::Spec {
                pointer,
                message: e.inner().to_string(),
            }
        })?;
        spec.resolve()?;
        Ok(spec)
    }

    pub fn load(path: &std::path::Path) -> Result<SystemSpec> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Fill defaults and enforce constraints; after this the spec is in
    /// canonical form.
    pub fn resolve(&mut self) -> Result<()> {
        self.growth_rate.canonicalize()?;

        // dimension comes from the operator
        let implied_dim = match &self.operator {
            OperatorSpec::Example1 { .. } | OperatorSpec::Example2 { .. } => 2,
            OperatorSpec::Diagonal { exponents } => exponents.len(),
            OperatorSpec::Ode { matrix } => matrix.len(),
        };
        match self.dimension {
            None => self.dimension = Some(implied_dim),
            Some(d) if d == implied_dim => {}
            Some(d) => {
                return Err(Error::Spec {
                    pointer: "/dimension".into(),
                    message: format!(
                        "dimension {d} does not match the operator's dimension {implied_dim}"
                    ),
                })
            }
        }

        // operator parameter constraints
        match &self.operator {
            OperatorSpec::Example1 { a, b, epsilon } => {
                if !(*a > 0.0 && *b > 0.0) {
                    return Err(Error::Spec {
                        pointer: "/operator".into(),
                        message: format!("example1 requires a > 0 and b > 0 (a = {a}, b = {b})"),
                    });
                }
                if *epsilon < 0.0 {
                    return Err(Error::Spec {
                        pointer: "/operator/epsilon".into(),
                        message: format!("example1 requires epsilon >= 0 (got {epsilon})"),
                    });
                }
            }
            OperatorSpec::Example2 { a, b, alpha } => {
                if !(*a > 1.0 && *b > 1.0 && *alpha >= 0.0 && alpha + 1.0 < a.min(*b)) {
                    return Err(Error::Spec {
                        pointer: "/operator".into(),
                        message: format!(
                            "example2 requires a > 1, b > 1, alpha >= 0 and alpha + 1 < min(a, b) \
                             (a = {a}, b = {b}, alpha = {alpha})"
                        ),
                    });
                }
                if self.growth_rate != GrowthRateSpec::SqrtShift {
                    return Err(Error::Spec {
                        pointer: "/growth_rate".into(),
                        message: "example2 is defined over the sqrt_shift rate".into(),
                    });
                }
            }
            OperatorSpec::Diagonal { exponents } => {
                if exponents.is_empty() {
                    return Err(Error::Spec {
                        pointer: "/operator/exponents".into(),
                        message: "diagonal operator needs at least one exponent".into(),
                    });
                }
            }
            OperatorSpec::Ode { matrix } => {
                let d = matrix.len();
                if d == 0 || matrix.iter().any(|row| row.len() != d) {
                    return Err(Error::Spec {
                        pointer: "/operator/matrix".into(),
                        message: "coefficient matrix must be square and nonempty".into(),
                    });
                }
                for (i, row) in matrix.iter().enumerate() {
                    for (j, entry) in row.iter().enumerate() {
                        Expression::parse(entry).map_err(|e| Error::Spec {
                            pointer: format!("/operator/matrix/{i}/{j}"),
                            message: e.to_string(),
                        })?;
                    }
                }
            }
        }
        // canonicalize ODE entries
        if let OperatorSpec::Ode { matrix } = &mut self.operator {
            for row in matrix.iter_mut() {
                for entry in row.iter_mut() {
                    *entry = Expression::parse(entry)
                        .expect("validated above")
                        .to_string();
                }
            }
        }

        // projection defaults and constraints
        match (&self.operator, &self.projection) {
            (
                OperatorSpec::Example1 { .. } | OperatorSpec::Example2 { .. },
                ProjectionSpec::Implied,
            ) => {}
            (OperatorSpec::Example1 { .. } | OperatorSpec::Example2 { .. }, _) => {
                return Err(Error::Spec {
                    pointer: "/projection".into(),
                    message: "preset operators define their own projection; use kind \"implied\""
                        .into(),
                });
            }
            (OperatorSpec::Diagonal { exponents }, ProjectionSpec::Implied) => {
                let indices: Vec<usize> = exponents
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c < 0.0)
                    .map(|(i, _)| i)
                    .collect();
                self.projection = ProjectionSpec::Coordinate { indices };
            }
            (OperatorSpec::Diagonal { .. }, _) => {}
            (OperatorSpec::Ode { .. }, ProjectionSpec::Implied) => {
                return Err(Error::Spec {
                    pointer: "/projection".into(),
                    message:
                        "an ode operator needs an explicit projection (coordinate or constant)"
                            .into(),
                });
            }
            (OperatorSpec::Ode { .. }, _) => {}
        }
        let dim = self.dimension.unwrap();
        match &self.projection {
            ProjectionSpec::Coordinate { indices } => {
                if let Some(&bad) = indices.iter().find(|&&i| i >= dim) {
                    return Err(Error::Spec {
                        pointer: "/projection/indices".into(),
                        message: format!("index {bad} out of range for dimension {dim}"),
                    });
                }
            }
            ProjectionSpec::Constant { entries } => {
                if entries.len() != dim || entries.iter().any(|r| r.len() != dim) {
                    return Err(Error::Spec {
                        pointer: "/projection/entries".into(),
                        message: format!("projection matrix must be {dim} x {dim}"),
                    });
                }
            }
            ProjectionSpec::Implied => {}
        }

        // analysis block
        let analysis = &mut self.analysis;
        if !(analysis.p > 0.0) {
            return Err(Error::Spec {
                pointer: "/analysis/p".into(),
                message: format!("p must be positive, got {}", analysis.p),
            });
        }
        if analysis.gammas.is_empty() {
            return Err(Error::Spec {
                pointer: "/analysis/gammas".into(),
                message: "at least one gamma is required".into(),
            });
        }
        let decay_bound = match &self.operator {
            OperatorSpec::Example1 { a, b, .. } | OperatorSpec::Example2 { a, b, .. } => {
                Some(a.min(*b))
            }
            _ => None,
        };
        for (i, &gamma) in analysis.gammas.iter().enumerate() {
            if !(gamma > 0.0) {
                return Err(Error::Spec {
                    pointer: format!("/analysis/gammas/{i}"),
                    message: format!("gamma must be positive, got {gamma}"),
                });
            }
            if let Some(min_ab) = decay_bound {
                if gamma >= min_ab {
                    return Err(Error::Spec {
                        pointer: format!("/analysis/gammas/{i}"),
                        message: format!(
                            "the integral condition requires gamma < min(a, b) \
                             (gamma = {gamma}, min(a, b) = {min_ab})"
                        ),
                    });
                }
            }
        }
        if analysis.epsilon.is_none() {
            analysis.epsilon = Some(match &self.operator {
                OperatorSpec::Example1 { epsilon, .. } => *epsilon,
                OperatorSpec::Example2 { alpha, .. } => alpha + 1.0,
                _ => 0.0,
            });
        }
        if let Some(eps) = analysis.epsilon {
            if eps < 0.0 {
                return Err(Error::Spec {
                    pointer: "/analysis/epsilon".into(),
                    message: format!("epsilon must be nonnegative, got {eps}"),
                });
            }
        }
        if let Some(d) = analysis.d_bound {
            if !(d > 0.0) {
                return Err(Error::Spec {
                    pointer: "/analysis/d_bound".into(),
                    message: format!("d_bound must be positive, got {d}"),
                });
            }
        }
        if let Some(gb) = &analysis.growth_bound {
            gb.validate().map_err(|e| Error::Spec {
                pointer: "/analysis/growth_bound".into(),
                message: e.to_string(),
            })?;
        }
        if analysis.t_grid.is_none() {
            analysis.t_grid = Some(GridSpec::new(0.0, 10.0, 0.5));
        }
        analysis.t_grid.unwrap().validate("/analysis/t_grid")?;
        if analysis.pair_grid.is_none() {
            analysis.pair_grid = Some(PairGridSpec {
                base: GridSpec::new(0.0, 5.0, 0.5),
                offset: GridSpec::new(0.0, 5.0, 0.5),
            });
        }
        let pg = analysis.pair_grid.unwrap();
        pg.base.validate("/analysis/pair_grid/base")?;
        pg.offset.validate("/analysis/pair_grid/offset")?;
        if analysis.random_samples.is_none() {
            analysis.random_samples = Some(8);
        }
        if let Some(offset) = analysis.t_max_offset {
            if !(offset > 0.0) {
                return Err(Error::Spec {
                    pointer: "/analysis/t_max_offset".into(),
                    message: format!("t_max_offset must be positive, got {offset}"),
                });
            }
        }
        if analysis.quad_rel_tol.is_none() {
            analysis.quad_rel_tol = Some(1e-9);
        }
        if !(analysis.quad_rel_tol.unwrap() > 0.0) {
            return Err(Error::Spec {
                pointer: "/analysis/quad_rel_tol".into(),
                message: "quadrature tolerance must be positive".into(),
            });
        }
        if analysis.norm.is_none() {
            analysis.norm = Some(match &self.operator {
                OperatorSpec::Ode { .. } => NormKind::Spectral,
                _ => NormKind::Max,
            });
        }
        if analysis.uniformity_tol.is_none() {
            analysis.uniformity_tol = Some(crate::estimate::DEFAULT_UNIFORMITY_TOL);
        }
        if analysis.lyapunov_triples.is_none() {
            analysis.lyapunov_triples = Some(100);
        }

        // expressions must evaluate to finite values across the analysis
        // window
        let mut window = analysis.t_grid.unwrap().points();
        let pg = analysis.pair_grid.unwrap();
        window.push(pg.base.stop + pg.offset.stop);
        if let GrowthRateSpec::Custom { expr } = &self.growth_rate {
            let parsed = Expression::parse(expr).expect("canonicalized above");
            let deriv = parsed.derivative();
            for &t in &window {
                if !parsed.eval(t).is_finite() || !deriv.eval(t).is_finite() {
                    return Err(Error::Spec {
                        pointer: "/growth_rate/expr".into(),
                        message: format!("expression or its derivative is not finite at t = {t}"),
                    });
                }
            }
        }
        if let OperatorSpec::Ode { matrix } = &self.operator {
            for (i, row) in matrix.iter().enumerate() {
                for (j, entry) in row.iter().enumerate() {
                    let parsed = Expression::parse(entry).expect("validated above");
                    if let Some(&t) = window.iter().find(|&&t| !parsed.eval(t).is_finite()) {
                        return Err(Error::Spec {
                            pointer: format!("/operator/matrix/{i}/{j}"),
                            message: format!("entry is not finite at t = {t}"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Construct the growth rate and the operator/projection pair this
    /// spec describes. The spec must be resolved.
    pub fn build(&self) -> Result<(GrowthRate, CompatiblePair)> {
        let rate = self.growth_rate.build()?;
        let norm = self.analysis.norm.expect("resolved spec");
        let pair = match &self.operator {
            OperatorSpec::Example1 { a, b, epsilon } => {
                CompatiblePair::example_one(&rate, *a, *b, *epsilon)?
            }
            OperatorSpec::Example2 { a, b, alpha } => CompatiblePair::example_two(*a, *b, *alpha)?,
            OperatorSpec::Diagonal { exponents } => {
                let stable = match &self.projection {
                    ProjectionSpec::Coordinate { indices } => indices.clone(),
                    _ => {
                        return Err(Error::Spec {
                            pointer: "/projection".into(),
                            message: "diagonal operators use a coordinate projection".into(),
                        })
                    }
                };
                CompatiblePair::diagonal(&rate, exponents, &stable)?
            }
            OperatorSpec::Ode { matrix } => {
                let entries: Vec<Vec<Expression>> = matrix
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|e| Expression::parse(e))
                            .collect::<Result<_>>()
                    })
                    .collect::<Result<_>>()?;
                let u = EvolutionOperator::from_coefficient_exprs(entries, OdeSettings::default())?;
                let proj = match &self.projection {
                    ProjectionSpec::Coordinate { indices } => {
                        ProjectionFamily::coordinate(u.dim(), indices)?
                    }
                    ProjectionSpec::Constant { entries } => {
                        let d = entries.len();
                        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| entries[i][j]);
                        ProjectionFamily::constant(m)?
                    }
                    ProjectionSpec::Implied => unreachable!("rejected during resolve"),
                };
                CompatiblePair::new(u, proj)?
            }
        };
        Ok((rate, pair.with_norm(norm)))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "growth_rate": {"kind": "exponential"},
        "operator": {"kind": "example1", "a": 2.0, "b": 3.0, "epsilon": 0.0},
        "analysis": {"p": 1.0, "gammas": [1.0]}
    }"#;

    #[test]
    fn minimal_spec_loads_with_defaults() {
        let spec = SystemSpec::from_json(MINIMAL).unwrap();
        assert_eq!(spec.dimension, Some(2));
        assert_eq!(spec.analysis.epsilon, Some(0.0));
        assert_eq!(spec.analysis.random_samples, Some(8));
        assert_eq!(spec.analysis.norm, Some(NormKind::Max));
        assert_eq!(spec.analysis.t_grid.unwrap().points().len(), 21);
        let (_, pair) = spec.build().unwrap();
        assert_eq!(pair.dim(), 2);
    }

    #[test]
    fn canonical_round_trip_is_identity() {
        let spec = SystemSpec::from_json(MINIMAL).unwrap();
        let text = spec.to_json_pretty();
        let again = SystemSpec::from_json(&text).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn oversized_gamma_is_rejected_at_load() {
        let text = MINIMAL.replace("[1.0]", "[3.5]");
        match SystemSpec::from_json(&text) {
            Err(Error::Spec { pointer, message }) => {
                assert_eq!(pointer, "/analysis/gammas/0");
                assert!(message.contains("gamma < min(a, b)"), "{message}");
            }
            other => panic!("expected spec error, got {other:?}"),
        }
    }

    #[test]
    fn example2_constraint_is_rejected_at_load() {
        let text = r#"{
            "growth_rate": {"kind": "sqrt_shift"},
            "operator": {"kind": "example2", "a": 2.0, "b": 3.0, "alpha": 1.5},
            "analysis": {"p": 1.0, "gammas": [1.0]}
        }"#;
        match SystemSpec::from_json(text) {
            Err(Error::Spec { pointer, message }) => {
                assert_eq!(pointer, "/operator");
                assert!(message.contains("alpha + 1 < min(a, b)"), "{message}");
            }
            other => panic!("expected spec error, got {other:?}"),
        }
    }

    #[test]
    fn schema_violations_carry_json_pointers() {
        let text = r#"{
            "growth_rate": {"kind": "exponential"},
            "operator": {"kind": "example1", "a": "two", "b": 3.0, "epsilon": 0.0},
            "analysis": {"p": 1.0, "gammas": [1.0]}
        }"#;
        match SystemSpec::from_json(text) {
            Err(Error::Spec { pointer, .. }) => assert!(pointer.contains("/operator")),
            other => panic!("expected spec error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = MINIMAL.replace("\"p\": 1.0", "\"p\": 1.0, \"power\": 2");
        assert!(SystemSpec::from_json(&text).is_err());
    }

    #[test]
    fn custom_rate_expression_is_canonicalized() {
        let text = r#"{
            "growth_rate": {"kind": "custom", "expr": "t + sqrt((t^2) + (1))"},
            "operator": {"kind": "diagonal", "exponents": [-2.0, 3.0]},
            "analysis": {"p": 1.0, "gammas": [1.0]}
        }"#;
        let spec = SystemSpec::from_json(text).unwrap();
        match &spec.growth_rate {
            GrowthRateSpec::Custom { expr } => assert_eq!(expr, "t + sqrt(t^2 + 1)"),
            other => panic!("{other:?}"),
        }
        // implied projection resolved onto the decaying coordinate
        assert_eq!(
            spec.projection,
            ProjectionSpec::Coordinate { indices: vec![0] }
        );
    }

    #[test]
    fn ode_operator_requires_explicit_projection() {
        let text = r#"{
            "growth_rate": {"kind": "exponential"},
            "operator": {"kind": "ode", "matrix": [["-2", "0"], ["0", "3"]]},
            "analysis": {"p": 1.0, "gammas": [1.0]}
        }"#;
        match SystemSpec::from_json(text) {
            Err(Error::Spec { pointer, .. }) => assert_eq!(pointer, "/projection"),
            other => panic!("expected spec error, got {other:?}"),
        }
    }

    #[test]
    fn ode_operator_builds_with_projection() {
        let text = r#"{
            "growth_rate": {"kind": "exponential"},
            "operator": {"kind": "ode", "matrix": [["-2", "0"], ["0", "3"]]},
            "projection": {"kind": "coordinate", "indices": [0]},
            "analysis": {"p": 1.0, "gammas": [1.0]}
        }"#;
        let spec = SystemSpec::from_json(text).unwrap();
        assert_eq!(spec.analysis.norm, Some(NormKind::Spectral));
        let (_, pair) = spec.build().unwrap();
        let u = pair.u(1.0, 0.0).unwrap();
        assert!((u[(0, 0)] - (-2.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn non_finite_expression_on_the_window_is_rejected() {
        let text = r#"{
            "growth_rate": {"kind": "exponential"},
            "operator": {"kind": "ode", "matrix": [["-2", "0"], ["0", "1/(t - 5)"]]},
            "projection": {"kind": "coordinate", "indices": [0]},
            "analysis": {"p": 1.0, "gammas": [1.0]}
        }"#;
        match SystemSpec::from_json(text) {
            Err(Error::Spec { pointer, message }) => {
                assert_eq!(pointer, "/operator/matrix/1/1");
                assert!(message.contains("not finite"), "{message}");
            }
            other => panic!("expected spec error, got {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let text = MINIMAL.replace("\"analysis\"", "\"dimension\": 3, \"analysis\"");
        match SystemSpec::from_json(&text) {
            Err(Error::Spec { pointer, .. }) => assert_eq!(pointer, "/dimension"),
            other => panic!("expected spec error, got {other:?}"),
        }
    }
}
