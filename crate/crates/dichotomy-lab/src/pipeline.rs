//! The analysis pipeline: growth validation, compatibility checks, constant
//! estimation, the integral criterion per gamma, certificate derivation and
//! verification, and Lyapunov condition checks, assembled into one report.
//!
//! Numerical failures never abort the pipeline; they are recorded in the
//! section where they happened and dependent sections are skipped with a
//! reason. Reports are deterministic for a fixed spec and seed, except for
//! the timing block.

use crate::datko::{self, DatkoParams, DatkoReport, DichotomyCertificate};
use crate::error::Result;
use crate::estimate::{self, Classification, DichotomyEstimate};
use crate::evolution::{check_cocycle, check_compatibility};
use crate::growth::{
    check_log_derivative_bound, estimate_log_derivative_sup, validate_growth_rate,
    LogDerivativeBoundReport, LogDerivativeSup,
};
use crate::lyapunov::{
    check_lyapunov_conditions, LyapunovCheckParams, LyapunovFunction, WeightOperator,
};
use crate::quad::QuadSettings;
use crate::report::ValidationReport;
use crate::spec::SystemSpec;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::time::Instant;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionStatus {
    Ok,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthSection {
    pub status: SectionStatus,
    pub validation: ValidationReport,
    pub log_derivative_sup: LogDerivativeSup,
    pub bound_check: LogDerivativeBoundReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatibilitySection {
    pub status: SectionStatus,
    pub tolerance: f64,
    pub projection: ValidationReport,
    pub cocycle: ValidationReport,
    pub pair: ValidationReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateSection {
    pub status: SectionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub rows: usize,
    pub dropped_stable: usize,
    pub dropped_unstable: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<DichotomyEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Classification>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatkoSection {
    pub gamma: f64,
    pub status: SectionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<DatkoReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateEntry {
    pub gamma: f64,
    pub status: SectionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<DichotomyCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<ValidationReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificatesSection {
    /// Check of the supplied Green-kernel growth bound, when one was given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth_bound: Option<ValidationReport>,
    pub entries: Vec<CertificateEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovSection {
    pub gamma: f64,
    pub status: SectionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub divergence: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditions: Option<ValidationReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepTiming {
    pub name: String,
    pub millis: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingSection {
    pub total_millis: f64,
    pub steps: Vec<StepTiming>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub toolkit_version: String,
    /// Canonical echo of the spec, defaults included: together with the
    /// seed this reproduces every verdict below.
    pub spec: SystemSpec,
    pub seed: u64,
    pub growth: GrowthSection,
    pub compatibility: CompatibilitySection,
    pub estimate: EstimateSection,
    pub datko: Vec<DatkoSection>,
    pub certificates: CertificatesSection,
    pub lyapunov: Vec<LyapunovSection>,
    pub timing: TimingSection,
}

impl AnalysisReport {
    /// 0 when every executed verdict passed, 1 when any failed.
    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }

    pub fn all_pass(&self) -> bool {
        let mut ok = self.growth.status != SectionStatus::Fail
            && self.compatibility.status != SectionStatus::Fail
            && self.estimate.status != SectionStatus::Fail;
        ok &= self.datko.iter().all(|s| s.status != SectionStatus::Fail);
        ok &= self
            .certificates
            .growth_bound
            .as_ref()
            .map_or(true, |r| r.pass);
        ok &= self
            .certificates
            .entries
            .iter()
            .all(|s| s.status != SectionStatus::Fail);
        ok &= self
            .lyapunov
            .iter()
            .all(|s| s.status != SectionStatus::Fail);
        ok
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// One human-readable verdict line per section.
    pub fn summary_lines(&self) -> Vec<String> {
        fn word(s: SectionStatus) -> &'static str {
            match s {
                SectionStatus::Ok => "pass",
                SectionStatus::Fail => "FAIL",
                SectionStatus::Skipped => "skipped",
            }
        }
        let mut lines = vec![
            format!("growth            {}", word(self.growth.status)),
            format!("compatibility     {}", word(self.compatibility.status)),
            format!(
                "estimate          {}{}",
                word(self.estimate.status),
                self.estimate
                    .classification
                    .map(|c| format!(
                        " ({})",
                        serde_json::to_string(&c).unwrap().trim_matches('"')
                    ))
                    .unwrap_or_default()
            ),
        ];
        for s in &self.datko {
            let detail = s
                .report
                .as_ref()
                .map(|r| {
                    format!(
                        " (max ratio {:.6} vs D = {:.6})",
                        r.max_ratio, r.params.d_bound
                    )
                })
                .unwrap_or_default();
            lines.push(format!(
                "datko gamma={:<6} {}{}",
                s.gamma,
                word(s.status),
                detail
            ));
        }
        if let Some(gb) = &self.certificates.growth_bound {
            lines.push(format!(
                "growth bound      {}",
                if gb.pass { "pass" } else { "FAIL" }
            ));
        }
        for s in &self.certificates.entries {
            lines.push(format!(
                "certificate gamma={:<6} {}",
                s.gamma,
                word(s.status)
            ));
        }
        for s in &self.lyapunov {
            lines.push(format!("lyapunov gamma={:<6} {}", s.gamma, word(s.status)));
        }
        lines
    }
}

/// The run's artifacts: the report plus the sampled-norms CSV.
#[derive(Debug, Clone)]
pub struct AnalysisOutput {
    pub report: AnalysisReport,
    pub samples_csv: String,
}

fn status(pass: bool) -> SectionStatus {
    if pass {
        SectionStatus::Ok
    } else {
        SectionStatus::Fail
    }
}

/// Random unit vector (Euclidean) via Box-Muller from the seeded stream.
fn random_unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        });
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

/// Run the full pipeline. Deterministic for fixed `(spec, seed)` up to the
/// timing block.
pub fn run_analysis(spec: &SystemSpec, seed: u64) -> Result<AnalysisOutput> {
    let total_start = Instant::now();
    let mut steps: Vec<StepTiming> = Vec::new();
    let timed = |name: &str, start: Instant, steps: &mut Vec<StepTiming>| {
        steps.push(StepTiming {
            name: name.into(),
            millis: start.elapsed().as_secs_f64() * 1e3,
        });
    };

    let (rate, pair) = spec.build()?;
    let analysis = &spec.analysis;
    let p = analysis.p;
    let epsilon = analysis.epsilon.expect("resolved spec");
    let quad = QuadSettings {
        rel_tol: analysis.quad_rel_tol.expect("resolved spec"),
        ..QuadSettings::default()
    };
    let t_grid = analysis.t_grid.expect("resolved spec").points();
    let pair_grid = analysis.pair_grid.expect("resolved spec");
    let pairs = pair_grid.pairs();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = pair.dim();
    let mut x_samples: Vec<DVector<f64>> = (0..dim)
        .map(|i| DVector::from_fn(dim, |j, _| if i == j { 1.0 } else { 0.0 }))
        .collect();
    for _ in 0..analysis.random_samples.expect("resolved spec") {
        x_samples.push(random_unit_vector(&mut rng, dim));
    }

    // growth rate
    let start = Instant::now();
    let mut growth_grid = t_grid.clone();
    if growth_grid.first() != Some(&0.0) {
        growth_grid.insert(0, 0.0);
    }
    let validation = validate_growth_rate(&rate, &growth_grid, 1e-5)?;
    let sup = estimate_log_derivative_sup(&rate, &growth_grid)?;
    let k = rate
        .known_log_derivative_bound()
        .map_or(sup.sup, |known| known.max(sup.sup));
    let deltas: Vec<f64> = analysis
        .pair_grid
        .expect("resolved spec")
        .offset
        .points()
        .into_iter()
        .filter(|&d| d > 0.0)
        .collect();
    let deltas = if deltas.is_empty() { vec![1.0] } else { deltas };
    let bound_check = check_log_derivative_bound(&rate, k, &growth_grid, &deltas, 1e-9)?;
    let growth = GrowthSection {
        status: status(validation.pass && bound_check.all_pass() && !sup.exceeds_known),
        validation,
        log_derivative_sup: sup,
        bound_check,
    };
    timed("growth", start, &mut steps);

    // compatibility
    let start = Instant::now();
    let tolerance = pair.operator().default_cocycle_tol();
    let projection = pair.projection().validate(&t_grid)?;
    let mut triples: Vec<(f64, f64, f64)> = Vec::new();
    for &s in pair_grid.base.points().iter().take(4) {
        triples.push((s, s, s));
    }
    for &(t, s) in &pairs {
        if t > s {
            triples.push((t, 0.5 * (t + s), s));
        }
    }
    let cocycle = check_cocycle(pair.operator(), &triples, tolerance)?;
    let pair_report = check_compatibility(&pair, &pairs, tolerance.max(1e-7))?;
    let compatibility = CompatibilitySection {
        status: status(projection.pass && cocycle.pass && pair_report.pass),
        tolerance,
        projection,
        cocycle,
        pair: pair_report,
    };
    timed("compatibility", start, &mut steps);

    // estimation
    let start = Instant::now();
    let samples = estimate::sample_norms(&pair, &rate, &pairs)?;
    let samples_csv = samples.to_csv();
    let (estimate_section, fitted) = match estimate::fit_constants(&samples) {
        Ok(est) => {
            let classification =
                estimate::classify_uniformity(&est, analysis.uniformity_tol.expect("resolved"));
            (
                EstimateSection {
                    status: SectionStatus::Ok,
                    error: None,
                    rows: samples.rows.len(),
                    dropped_stable: samples.dropped_stable,
                    dropped_unstable: samples.dropped_unstable,
                    estimate: Some(est.clone()),
                    classification: Some(classification),
                },
                Some(est),
            )
        }
        Err(e) => (
            EstimateSection {
                status: SectionStatus::Fail,
                error: Some(e.to_string()),
                rows: samples.rows.len(),
                dropped_stable: samples.dropped_stable,
                dropped_unstable: samples.dropped_unstable,
                estimate: None,
                classification: None,
            },
            None,
        ),
    };
    timed("estimate", start, &mut steps);

    // integral condition per gamma
    let start = Instant::now();
    let a_est = fitted
        .as_ref()
        .and_then(|e| e.stable.as_ref())
        .map(|f| f.rate_exponent);
    let mut datko_sections = Vec::new();
    let mut d_used: Vec<Option<(f64, bool)>> = Vec::new(); // (d_bound, datko passed)
    for &gamma in &analysis.gammas {
        let (d_bound, d_source) = match analysis.d_bound {
            Some(d) => (Some(d), "spec"),
            None => {
                let derived = fitted.as_ref().and_then(|est| {
                    let cert = est.certificate()?;
                    datko::theoretical_d_bound(cert.n1, cert.n2, p, cert.a, cert.b, gamma).ok()
                });
                (derived, "estimate")
            }
        };
        let Some(d_bound) = d_bound else {
            datko_sections.push(DatkoSection {
                gamma,
                status: SectionStatus::Skipped,
                reason: Some(
                    "no claimed d_bound and no usable theoretical value from the estimate".into(),
                ),
                d_source: None,
                report: None,
            });
            d_used.push(None);
            continue;
        };
        let params = DatkoParams {
            p,
            gamma,
            epsilon,
            d_bound,
        };
        let t_max_offset = analysis
            .t_max_offset
            .unwrap_or_else(|| datko::default_t_max(0.0, p, a_est, gamma));
        match datko::check_condition(
            &pair,
            &rate,
            &params,
            &t_grid,
            &x_samples,
            t_max_offset,
            &quad,
        ) {
            Ok(report) => {
                let pass = report.pass;
                datko_sections.push(DatkoSection {
                    gamma,
                    status: status(pass),
                    reason: None,
                    d_source: Some(d_source.into()),
                    report: Some(report),
                });
                d_used.push(Some((d_bound, pass)));
            }
            Err(e) => {
                datko_sections.push(DatkoSection {
                    gamma,
                    status: SectionStatus::Fail,
                    reason: Some(e.to_string()),
                    d_source: Some(d_source.into()),
                    report: None,
                });
                d_used.push(Some((d_bound, false)));
            }
        }
    }
    timed("datko", start, &mut steps);

    // certificates
    let start = Instant::now();
    let growth_bound_report = match &analysis.growth_bound {
        Some(bound) => {
            let distinct: Vec<(f64, f64)> =
                pairs.iter().copied().filter(|&(t, s)| t != s).collect();
            Some(datko::check_growth_bound(&pair, &rate, bound, &distinct)?)
        }
        None => None,
    };
    let mut cert_entries = Vec::new();
    for (i, &gamma) in analysis.gammas.iter().enumerate() {
        let skip = |reason: String| CertificateEntry {
            gamma,
            status: SectionStatus::Skipped,
            reason: Some(reason),
            certificate: None,
            verification: None,
        };
        let Some(bound) = &analysis.growth_bound else {
            cert_entries.push(skip("no growth bound supplied".into()));
            continue;
        };
        if let Some(gb) = &growth_bound_report {
            if !gb.pass {
                cert_entries.push(skip("the supplied growth bound failed on the grid".into()));
                continue;
            }
        }
        let Some((d_bound, datko_passed)) = d_used[i] else {
            cert_entries.push(skip("the integral condition was not evaluated".into()));
            continue;
        };
        if !datko_passed {
            cert_entries.push(skip("the integral condition failed for this gamma".into()));
            continue;
        }
        let params = DatkoParams {
            p,
            gamma,
            epsilon,
            d_bound,
        };
        match datko::derive_certificate(&params, bound, k) {
            Ok(cert) => {
                let verification = datko::verify_certificate(&pair, &rate, &cert, &pairs, 1e-9)?;
                cert_entries.push(CertificateEntry {
                    gamma,
                    status: status(verification.pass),
                    reason: None,
                    certificate: Some(cert),
                    verification: Some(verification),
                });
            }
            Err(e) => cert_entries.push(skip(e.to_string())),
        }
    }
    let certificates = CertificatesSection {
        growth_bound: growth_bound_report,
        entries: cert_entries,
    };
    timed("certificates", start, &mut steps);

    // Lyapunov conditions
    let start = Instant::now();
    let n_triples = analysis.lyapunov_triples.expect("resolved spec");
    let lyapunov_triples: Vec<(f64, f64, DVector<f64>)> = (0..n_triples)
        .map(|_| {
            let base = pair_grid.base;
            let offset = pair_grid.offset;
            let s = rng.gen_range(base.start..=base.stop);
            let d = rng.gen_range(offset.start..=offset.stop);
            (s + d, s, random_unit_vector(&mut rng, dim))
        })
        .collect();
    let mut lyapunov_sections = Vec::new();
    for (i, &gamma) in analysis.gammas.iter().enumerate() {
        let skip = |reason: String| LyapunovSection {
            gamma,
            status: SectionStatus::Skipped,
            reason: Some(reason),
            divergence: false,
            conditions: None,
        };
        if p < 1.0 {
            lyapunov_sections.push(skip(format!(
                "the Lyapunov construction requires p >= 1 (got p = {p})"
            )));
            continue;
        }
        let Some((d_bound, _)) = d_used[i] else {
            lyapunov_sections.push(skip("no d_bound available for the combined bound".into()));
            continue;
        };
        let t_max_offset = analysis
            .t_max_offset
            .unwrap_or_else(|| datko::default_t_max(0.0, p, a_est, gamma));
        // one shared horizon past every triple's anchor
        let horizon = pair_grid.base.stop + pair_grid.offset.stop + t_max_offset;
        let weight = WeightOperator::canonical(&pair, &rate, gamma, p)?;
        let l = LyapunovFunction::construct(&pair, &rate, &weight, p, horizon, quad)?;
        let params = LyapunovCheckParams {
            gamma,
            epsilon,
            d_bound,
        };
        match check_lyapunov_conditions(
            &l,
            &pair,
            &rate,
            &weight,
            p,
            &params,
            &lyapunov_triples,
            &quad,
            1e-6,
        ) {
            Ok(conditions) => {
                // divergence surfaces through the tail fit of the anchors
                let divergence = lyapunov_triples
                    .iter()
                    .take(4)
                    .map(|(t, _, x)| l.eval(*t, x).map(|v| v.forward_tail.diverges))
                    .collect::<Result<Vec<bool>>>()?
                    .into_iter()
                    .any(|d| d);
                lyapunov_sections.push(LyapunovSection {
                    gamma,
                    status: status(conditions.pass && !divergence),
                    reason: None,
                    divergence,
                    conditions: Some(conditions),
                });
            }
            Err(e) => lyapunov_sections.push(LyapunovSection {
                gamma,
                status: SectionStatus::Fail,
                reason: Some(e.to_string()),
                divergence: false,
                conditions: None,
            }),
        }
    }
    timed("lyapunov", start, &mut steps);

    let report = AnalysisReport {
        schema_version: SCHEMA_VERSION,
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        spec: spec.clone(),
        seed,
        growth,
        compatibility,
        estimate: estimate_section,
        datko: datko_sections,
        certificates,
        lyapunov: lyapunov_sections,
        timing: TimingSection {
            total_millis: total_start.elapsed().as_secs_f64() * 1e3,
            steps,
        },
    };
    Ok(AnalysisOutput {
        report,
        samples_csv,
    })
}
