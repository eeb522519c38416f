//! Estimate dichotomy constants from sampled operator norms.
//!
//! Both branch bounds are log-linear in the regressors `log(mu(t)/mu(s))`
//! and `log mu(.)`, so ordinary least squares recovers the exponents.
//! Because the target is an inequality, a mean fit is not enough: the
//! intercept is lifted afterwards until the fitted bound dominates every
//! sample (an upper envelope), otherwise the estimate would contradict the
//! data it was fitted on.

use crate::error::{Error, Result};
use crate::evolution::CompatiblePair;
use crate::growth::GrowthRate;
use crate::norm::NormKind;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

/// One sampled pair `(t, s)`. Branch logs are absent when the branch norm
/// was zero (rank-0 projection): those entries are dropped and counted.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormSampleRow {
    pub t: f64,
    pub s: f64,
    pub log_mu_ratio: f64,
    pub log_mu_s: f64,
    pub log_norm_stable: Option<f64>,
    pub log_mu_t: f64,
    pub log_norm_unstable: Option<f64>,
}

/// Norm samples over a pair grid, in deterministic (input) order.
#[derive(Debug, Clone, Serialize)]
pub struct NormSamples {
    pub norm: NormKind,
    pub rows: Vec<NormSampleRow>,
    pub dropped_stable: usize,
    pub dropped_unstable: usize,
}

impl NormSamples {
    /// RFC-4180-style CSV: header row, `.` decimal separator, empty cells
    /// for dropped branch entries.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("log_mu_ratio,log_mu_s,log_norm_stable,log_mu_t,log_norm_unstable\n");
        for row in &self.rows {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.log_mu_ratio,
                row.log_mu_s,
                opt(row.log_norm_stable),
                row.log_mu_t,
                opt(row.log_norm_unstable),
            ));
        }
        out
    }
}

/// Sample `||U(t,s) P(s)||` and `||U_Q(s,t) Q(t)||` over ordered pairs.
pub fn sample_norms(
    pair: &CompatiblePair,
    rate: &GrowthRate,
    pairs: &[(f64, f64)],
) -> Result<NormSamples> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("norm sample grid"));
    }
    let norm = pair.norm_kind();
    let rows: Vec<NormSampleRow> = pairs
        .par_iter()
        .map(|&(t, s)| -> Result<NormSampleRow> {
            if !(t >= s && s >= 0.0) {
                return Err(Error::TimeOrder {
                    context: "norm sample requires t >= s >= 0",
                    t,
                    s,
                });
            }
            let stable = norm.operator(&(pair.u(t, s)? * pair.proj(s)));
            let unstable = norm.operator(&pair.uq(s, t)?);
            Ok(NormSampleRow {
                t,
                s,
                log_mu_ratio: rate.log_eval(t) - rate.log_eval(s),
                log_mu_s: rate.log_eval(s),
                log_norm_stable: (stable > 0.0).then(|| stable.ln()),
                log_mu_t: rate.log_eval(t),
                log_norm_unstable: (unstable > 0.0).then(|| unstable.ln()),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let dropped_stable = rows.iter().filter(|r| r.log_norm_stable.is_none()).count();
    let dropped_unstable = rows
        .iter()
        .filter(|r| r.log_norm_unstable.is_none())
        .count();
    Ok(NormSamples {
        norm,
        rows,
        dropped_stable,
        dropped_unstable,
    })
}

/// Fitted constants for one branch.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BranchFit {
    /// Decay exponent (`a` for the stable branch, `b` for the unstable).
    pub rate_exponent: f64,
    /// Intercept after the envelope lift, clamped at `log N >= 0`.
    pub log_n: f64,
    /// Largest slack between the fitted bound and a sample, in log scale.
    pub residual: f64,
    pub samples: usize,
}

/// Joint estimate; the nonuniformity exponent is shared by both branches
/// (the larger branch estimate, clamped at zero).
#[derive(Debug, Clone, Serialize)]
pub struct DichotomyEstimate {
    pub stable: Option<BranchFit>,
    pub unstable: Option<BranchFit>,
    pub epsilon: f64,
    pub norm: NormKind,
}

impl DichotomyEstimate {
    pub fn certificate(&self) -> Option<crate::datko::DichotomyCertificate> {
        let (s, u) = (self.stable.as_ref()?, self.unstable.as_ref()?);
        Some(crate::datko::DichotomyCertificate {
            a: s.rate_exponent,
            b: u.rate_exponent,
            epsilon: self.epsilon,
            n1: s.log_n.exp(),
            n2: u.log_n.exp(),
            provenance: crate::datko::CertificateProvenance::Estimated,
        })
    }
}

struct BranchData {
    log_ratio: Vec<f64>,
    log_mu: Vec<f64>,
    y: Vec<f64>,
}

/// OLS coefficients for `y ~ c - rate * log_ratio + eps * log_mu`, returned
/// as `(c, rate, eps)`.
fn ols(branch: &BranchData, name: &str) -> Result<(f64, f64, f64)> {
    let n = branch.y.len();
    let design = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => branch.log_ratio[i],
        _ => branch.log_mu[i],
    });
    let target = DVector::from_column_slice(&branch.y);

    // diagnose missing variation before solving
    let variance = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64
    };
    if variance(&branch.log_ratio) < 1e-20 {
        return Err(Error::RankDeficient(format!(
            "{name} branch: log(mu(t)/mu(s)) does not vary on the sample grid"
        )));
    }
    if variance(&branch.log_mu) < 1e-20 {
        return Err(Error::RankDeficient(format!(
            "{name} branch: log mu does not vary on the sample grid (all samples share one base time)"
        )));
    }

    let svd = design.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (mut smin, mut smax) = (f64::INFINITY, 0.0f64);
    for &s in sv.iter() {
        smin = smin.min(s);
        smax = smax.max(s);
    }
    if smin < 1e-12 * smax {
        return Err(Error::RankDeficient(format!(
            "{name} branch: regressors are collinear (singular value ratio {:.3e})",
            smin / smax
        )));
    }
    let beta = svd
        .solve(&target, 1e-14)
        .map_err(|e| Error::RankDeficient(format!("{name} branch: {e}")))?;
    Ok((beta[0], -beta[1], beta[2]))
}

/// Least squares per branch, then the minimal intercept lift that makes the
/// bound an upper envelope of the samples. Branches with no rows at all are
/// vacuous and omitted; branches with fewer than 3 rows cannot pin three
/// coefficients and are an error.
pub fn fit_constants(samples: &NormSamples) -> Result<DichotomyEstimate> {
    let collect = |pick: fn(&NormSampleRow) -> Option<(f64, f64, f64)>| -> BranchData {
        let mut data = BranchData {
            log_ratio: Vec::new(),
            log_mu: Vec::new(),
            y: Vec::new(),
        };
        for row in &samples.rows {
            if let Some((lr, lm, y)) = pick(row) {
                data.log_ratio.push(lr);
                data.log_mu.push(lm);
                data.y.push(y);
            }
        }
        data
    };
    let stable_data = collect(|r| r.log_norm_stable.map(|y| (r.log_mu_ratio, r.log_mu_s, y)));
    let unstable_data = collect(|r| r.log_norm_unstable.map(|y| (r.log_mu_ratio, r.log_mu_t, y)));

    let fit_branch = |data: &BranchData, name: &str| -> Result<Option<(f64, f64, f64)>> {
        match data.y.len() {
            0 => Ok(None),
            1 | 2 => Err(Error::InvalidParameter(format!(
                "{name} branch has {} usable samples; fitting three constants needs at least 3",
                data.y.len()
            ))),
            _ => ols(data, name).map(Some),
        }
    };

    let stable_ols = fit_branch(&stable_data, "stable")?;
    let unstable_ols = fit_branch(&unstable_data, "unstable")?;
    if stable_ols.is_none() && unstable_ols.is_none() {
        return Err(Error::EmptyInput("no usable rows in either branch"));
    }

    let epsilon = stable_ols
        .iter()
        .chain(unstable_ols.iter())
        .map(|&(_, _, e)| e)
        .fold(0.0f64, f64::max);

    let envelope = |data: &BranchData, coeffs: Option<(f64, f64, f64)>| -> Option<BranchFit> {
        let (_, rate_exp, _) = coeffs?;
        // minimal intercept dominating every sample at the shared epsilon
        let c = data
            .y
            .iter()
            .zip(data.log_ratio.iter().zip(data.log_mu.iter()))
            .map(|(&y, (&lr, &lm))| y + rate_exp * lr - epsilon * lm)
            .fold(f64::NEG_INFINITY, f64::max);
        let log_n = c.max(0.0);
        let residual = data
            .y
            .iter()
            .zip(data.log_ratio.iter().zip(data.log_mu.iter()))
            .map(|(&y, (&lr, &lm))| (log_n - rate_exp * lr + epsilon * lm) - y)
            .fold(0.0f64, f64::max);
        Some(BranchFit {
            rate_exponent: rate_exp,
            log_n,
            residual,
            samples: data.y.len(),
        })
    };

    Ok(DichotomyEstimate {
        stable: envelope(&stable_data, stable_ols),
        unstable: envelope(&unstable_data, unstable_ols),
        epsilon,
        norm: samples.norm,
    })
}

pub const DEFAULT_UNIFORMITY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Uniform,
    Nonuniform,
    NotDichotomic,
}

/// Classify the fitted behavior: no dichotomy when a branch shows no decay,
/// uniform when the nonuniformity exponent vanishes within `tol`.
pub fn classify_uniformity(est: &DichotomyEstimate, tol: f64) -> Classification {
    let no_decay = est
        .stable
        .iter()
        .chain(est.unstable.iter())
        .any(|fit| fit.rate_exponent <= tol);
    if no_decay {
        Classification::NotDichotomic
    } else if est.epsilon <= tol {
        Classification::Uniform
    } else {
        Classification::Nonuniform
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{EvolutionOperator, ProjectionFamily};
    use proptest::prelude::*;

    fn pair_grid() -> Vec<(f64, f64)> {
        let mut pairs = Vec::new();
        for i in 0..=6 {
            let s = i as f64 * 0.5;
            for j in 0..=6 {
                let dt = j as f64 * 0.5;
                pairs.push((s + dt, s));
            }
        }
        pairs
    }

    #[test]
    fn samples_of_the_coupled_system_are_exactly_log_linear() {
        let rate = GrowthRate::exponential();
        let pair = CompatiblePair::example_one(&rate, 2.0, 3.0, 0.1).unwrap();
        let samples = sample_norms(&pair, &rate, &pair_grid()).unwrap();
        assert_eq!(samples.dropped_stable, 0);
        for row in &samples.rows {
            let expect = -2.0 * (row.t - row.s) + 0.1 * row.s;
            assert!((row.log_norm_stable.unwrap() - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_projection_drops_stable_rows() {
        let u = EvolutionOperator::closed_form(2, |t, s| {
            nalgebra::DMatrix::identity(2, 2) * (2.0 * (t - s)).exp()
        });
        let p = ProjectionFamily::constant(nalgebra::DMatrix::zeros(2, 2)).unwrap();
        let pair = CompatiblePair::new(u, p).unwrap();
        let rate = GrowthRate::exponential();
        let samples = sample_norms(&pair, &rate, &pair_grid()).unwrap();
        assert_eq!(samples.dropped_stable, samples.rows.len());
        assert_eq!(samples.dropped_unstable, 0);
        // the fit still works on the unstable branch alone; the inverse of
        // e^{2(t-s)} decays at rate 2
        let est = fit_constants(&samples).unwrap();
        assert!(est.stable.is_none());
        assert!((est.unstable.unwrap().rate_exponent - 2.0).abs() < 1e-6);
    }

    #[test]
    fn recovers_exact_constants() {
        let rate = GrowthRate::exponential();
        let pair = CompatiblePair::example_one(&rate, 2.0, 3.0, 0.1).unwrap();
        let samples = sample_norms(&pair, &rate, &pair_grid()).unwrap();
        let est = fit_constants(&samples).unwrap();
        let stable = est.stable.unwrap();
        let unstable = est.unstable.unwrap();
        assert!(
            (stable.rate_exponent - 2.0).abs() < 1e-8,
            "{}",
            stable.rate_exponent
        );
        assert!((unstable.rate_exponent - 3.0).abs() < 1e-8);
        assert!((est.epsilon - 0.1).abs() < 1e-8);
        assert!(stable.log_n.abs() < 1e-8);
        assert!(stable.residual < 1e-8);
    }

    #[test]
    fn uniform_system_fits_epsilon_zero_and_unit_constants() {
        let rate = GrowthRate::exponential();
        let pair = CompatiblePair::example_one(&rate, 2.0, 3.0, 0.0).unwrap();
        let samples = sample_norms(&pair, &rate, &pair_grid()).unwrap();
        let est = fit_constants(&samples).unwrap();
        assert!(est.epsilon.abs() < 1e-9);
        assert!(est.stable.unwrap().log_n.abs() < 1e-9);
        assert!(est.unstable.unwrap().log_n.abs() < 1e-9);
        assert_eq!(
            classify_uniformity(&est, DEFAULT_UNIFORMITY_TOL),
            Classification::Uniform
        );
    }

    #[test]
    fn nonuniform_system_is_classified_nonuniform() {
        let rate = GrowthRate::exponential();
        let pair = CompatiblePair::example_one(&rate, 2.0, 3.0, 0.1).unwrap();
        let samples = sample_norms(&pair, &rate, &pair_grid()).unwrap();
        let est = fit_constants(&samples).unwrap();
        assert_eq!(
            classify_uniformity(&est, DEFAULT_UNIFORMITY_TOL),
            Classification::Nonuniform
        );
    }

    #[test]
    fn identity_dynamics_is_not_dichotomic() {
        let u = EvolutionOperator::closed_form(2, |_, _| nalgebra::DMatrix::identity(2, 2));
        let p = ProjectionFamily::constant(nalgebra::DMatrix::identity(2, 2)).unwrap();
        let pair = CompatiblePair::new(u, p).unwrap();
        let rate = GrowthRate::exponential();
        let samples = sample_norms(&pair, &rate, &pair_grid()).unwrap();
        let est = fit_constants(&samples).unwrap();
        let stable = est.stable.as_ref().unwrap();
        assert!(stable.rate_exponent.abs() < 1e-10);
        assert!(est.unstable.is_none());
        assert_eq!(
            classify_uniformity(&est, DEFAULT_UNIFORMITY_TOL),
            Classification::NotDichotomic
        );
    }

    #[test]
    fn constant_base_time_is_rank_deficient() {
        let rate = GrowthRate::exponential();
        let pair = CompatiblePair::example_one(&rate, 2.0, 3.0, 0.1).unwrap();
        let pairs: Vec<(f64, f64)> = (1..=8).map(|i| (i as f64 * 0.5, 0.0)).collect();
        let samples = sample_norms(&pair, &rate, &pairs).unwrap();
        match fit_constants(&samples) {
            Err(Error::RankDeficient(msg)) => {
                assert!(msg.contains("log mu does not vary"), "{msg}")
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn csv_has_header_and_five_columns() {
        let rate = GrowthRate::exponential();
        let pair = CompatiblePair::example_one(&rate, 2.0, 3.0, 0.0).unwrap();
        let samples = sample_norms(&pair, &rate, &[(1.0, 0.0), (2.0, 0.5)]).unwrap();
        let csv = samples.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "log_mu_ratio,log_mu_s,log_norm_stable,log_mu_t,log_norm_unstable"
        );
        for line in lines {
            assert_eq!(line.split(',').count(), 5, "{line}");
        }
    }

    /// Synthetic sample table with exactly log-linear branch norms.
    fn synthetic(log_n1: f64, a: f64, log_n2: f64, b: f64, eps: f64) -> NormSamples {
        let mut rows = Vec::new();
        for i in 0..=6 {
            let s = i as f64 * 0.5;
            for j in 1..=6 {
                let dt = j as f64 * 0.5;
                let t = s + dt;
                rows.push(NormSampleRow {
                    t,
                    s,
                    log_mu_ratio: dt,
                    log_mu_s: s,
                    log_norm_stable: Some(log_n1 - a * dt + eps * s),
                    log_mu_t: t,
                    log_norm_unstable: Some(log_n2 - b * dt + eps * t),
                });
            }
        }
        NormSamples {
            norm: NormKind::Max,
            rows,
            dropped_stable: 0,
            dropped_unstable: 0,
        }
    }

    proptest! {
        // Exact recovery on synthetic log-linear data over random constants.
        #[test]
        fn recovery_over_random_constants(
            a in 0.5f64..4.0,
            b in 0.5f64..4.0,
            eps in 0.0f64..0.5,
            n1 in 1.0f64..3.0,
            n2 in 1.0f64..3.0,
        ) {
            let samples = synthetic(n1.ln(), a, n2.ln(), b, eps);
            let est = fit_constants(&samples).unwrap();
            let stable = est.stable.unwrap();
            let unstable = est.unstable.unwrap();
            prop_assert!((stable.rate_exponent - a).abs() <= 1e-6 * a.max(1.0));
            prop_assert!((unstable.rate_exponent - b).abs() <= 1e-6 * b.max(1.0));
            prop_assert!((est.epsilon - eps).abs() <= 1e-6 * eps.max(1.0));
            prop_assert!((stable.log_n - n1.ln()).abs() <= 1e-6);
            prop_assert!((unstable.log_n - n2.ln()).abs() <= 1e-6);

            // envelope: no sample violates the fitted bound
            for row in &samples.rows {
                let bound = stable.log_n - stable.rate_exponent * row.log_mu_ratio
                    + est.epsilon * row.log_mu_s;
                prop_assert!(row.log_norm_stable.unwrap() <= bound + 1e-9);
                let bound = unstable.log_n - unstable.rate_exponent * row.log_mu_ratio
                    + est.epsilon * row.log_mu_t;
                prop_assert!(row.log_norm_unstable.unwrap() <= bound + 1e-9);
            }
        }

        // Rescaling every norm by a common factor shifts only the
        // intercepts; the classification is unchanged.
        #[test]
        fn classification_invariant_under_rescaling(c in 0.01f64..100.0, eps in 0.0f64..0.3) {
            let base = synthetic(0.3, 1.5, 0.2, 2.5, eps);
            let mut scaled = base.clone();
            for row in &mut scaled.rows {
                row.log_norm_stable = row.log_norm_stable.map(|y| y + c.ln());
                row.log_norm_unstable = row.log_norm_unstable.map(|y| y + c.ln());
            }
            let est0 = fit_constants(&base).unwrap();
            let est1 = fit_constants(&scaled).unwrap();
            prop_assert_eq!(
                classify_uniformity(&est0, DEFAULT_UNIFORMITY_TOL),
                classify_uniformity(&est1, DEFAULT_UNIFORMITY_TOL)
            );
            let d = est1.stable.unwrap().rate_exponent - est0.stable.unwrap().rate_exponent;
            prop_assert!(d.abs() < 1e-7);
        }
    }
}
