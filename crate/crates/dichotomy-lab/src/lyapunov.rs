//! Lyapunov functions: sign-split scalar certificates of dichotomy.
//!
//! A weight operator `H(t)` bounded by `(mu'/mu)^(1/p) mu^g` on the stable
//! range and `(mu'/mu)^(1/p) mu^-g` on the unstable one turns the criterion
//! integral into a function
//!
//! ```text
//! L(t, x) = 2^(p-1) ( int_t^inf ||H(tau) U(tau,t) P(t) x||^p dtau
//!                   - int_0^t   ||H(tau) U_Q(tau,t) Q(t) x||^p dtau )
//! ```
//!
//! that is nonincreasing along trajectories up to an explicit integral
//! term, nonnegative on the stable range, nonpositive on the unstable one,
//! and bounded by `2^(p-1) D mu(t)^(p eps) ||x||^p` in a weighted
//! combination. The checks below verify those three conditions for the
//! constructed function or for any user-supplied candidate.

use crate::error::{Error, Result};
use crate::evolution::CompatiblePair;
use crate::growth::GrowthRate;
use crate::quad::{integrate_result, tail_from_window_masses, QuadSettings, TailEstimate};
use crate::report::{ValidationReport, WorstCase};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

/// An operator-valued weight `H(t)`, tagged with the `(gamma, p)` pair it
/// is admissible for.
#[derive(Clone)]
pub struct WeightOperator {
    eval: Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>,
    gamma: f64,
    p: f64,
}

impl WeightOperator {
    pub fn from_fn<F>(gamma: f64, p: f64, f: F) -> Self
    where
        F: Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    {
        WeightOperator {
            eval: Arc::new(f),
            gamma,
            p,
        }
    }

    /// The canonical admissible weight, which saturates the membership
    /// bound on both ranges:
    /// `H(t) = (mu'/mu)^(1/p) (mu^g P(t) + mu^-g Q(t))`.
    pub fn canonical(pair: &CompatiblePair, rate: &GrowthRate, gamma: f64, p: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if p < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "p must be at least 1, got {p}"
            )));
        }
        let pair = pair.clone();
        let rate = rate.clone();
        Ok(WeightOperator {
            eval: Arc::new(move |t| {
                let w = rate.log_derivative(t).powf(1.0 / p);
                let mu_g = rate.eval(t).powf(gamma);
                pair.proj(t) * (w * mu_g) + pair.comp(t) * (w / mu_g)
            }),
            gamma,
            p,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn matrix(&self, t: f64) -> DMatrix<f64> {
        (self.eval)(t)
    }

    pub fn apply(&self, t: f64, x: &DVector<f64>) -> DVector<f64> {
        (self.eval)(t) * x
    }
}

impl std::fmt::Debug for WeightOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeightOperator")
            .field("gamma", &self.gamma)
            .field("p", &self.p)
            .finish_non_exhaustive()
    }
}

/// Check the admissibility bound
/// `||H(t) x|| <= (mu'/mu)^(1/p) (mu^g ||P x|| + mu^-g ||Q x||)`
/// on a grid of `(t, x)` points; ratio tolerance `1 + 1e-9`.
pub fn check_weight_membership(
    weight: &WeightOperator,
    pair: &CompatiblePair,
    rate: &GrowthRate,
    gamma: f64,
    p: f64,
    grid: &[(f64, DVector<f64>)],
) -> Result<ValidationReport> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("weight membership grid"));
    }
    let norm = pair.norm_kind();
    let mut worst = WorstCase::new();
    for (t, x) in grid {
        let lhs = norm.vector(&weight.apply(*t, x));
        let w = rate.log_derivative(*t).powf(1.0 / p);
        let mu_g = rate.eval(*t).powf(gamma);
        let rhs = w * mu_g * norm.vector(&(pair.proj(*t) * x))
            + w / mu_g * norm.vector(&(pair.comp(*t) * x));
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst.observe(ratio - 1.0, || format!("t = {t}"));
    }
    let mut report = ValidationReport::new();
    report.push(worst.into_check("weight_membership", 1e-9));
    Ok(report)
}

/// One evaluation of the constructed function.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LyapunovValue {
    /// `2^(p-1) (forward + tail - backward)`.
    pub value: f64,
    pub quad_error: f64,
    /// Decay fit of the forward integrand past the truncation point;
    /// `diverges` warns that the forward integral is not settling (the
    /// weight exponent is at or beyond the decay exponent of the system).
    pub forward_tail: TailEstimate,
}

/// The Lyapunov function built from a compatible pair and a weight.
#[derive(Clone)]
pub struct LyapunovFunction {
    pair: CompatiblePair,
    rate: GrowthRate,
    weight: WeightOperator,
    p: f64,
    t_max: f64,
    quad: QuadSettings,
}

impl LyapunovFunction {
    /// The forward integral is truncated at the absolute horizon `t_max`
    /// with a fitted tail estimate in log-mu scale. A shared horizon makes
    /// truncation errors cancel between evaluations along one trajectory,
    /// which is what the decay condition compares.
    pub fn construct(
        pair: &CompatiblePair,
        rate: &GrowthRate,
        weight: &WeightOperator,
        p: f64,
        t_max: f64,
        quad: QuadSettings,
    ) -> Result<Self> {
        if p < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "p must be at least 1, got {p}"
            )));
        }
        if !(t_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_max must be positive, got {t_max}"
            )));
        }
        Ok(LyapunovFunction {
            pair: pair.clone(),
            rate: rate.clone(),
            weight: weight.clone(),
            p,
            t_max,
            quad,
        })
    }

    pub fn eval(&self, t: f64, x: &DVector<f64>) -> Result<LyapunovValue> {
        let norm = self.pair.norm_kind();
        let p = self.p;

        let px = self.pair.proj(t) * x;
        let forward_integrand = |tau: f64| -> Result<f64> {
            let v = self.pair.u(tau, t)? * &px;
            Ok(norm.vector(&self.weight.apply(tau, &v)).powf(p))
        };
        // anchors past the horizon still integrate a unit window
        let t_max = self.t_max.max(t + 1.0);
        let forward = integrate_result(&forward_integrand, t, t_max, &self.quad)?;

        // remaining forward mass, extrapolated in log-mu scale
        let forward_tail = tail_from_window_masses(
            &forward_integrand,
            &|tau| self.rate.log_eval(tau),
            t,
            t_max,
            &self.quad,
        )?;

        let qx = self.pair.comp(t) * x;
        let backward = if qx.iter().all(|v| *v == 0.0) {
            crate::quad::QuadResult {
                value: 0.0,
                abs_error: 0.0,
                evaluations: 0,
                converged: true,
            }
        } else {
            let backward_integrand = |tau: f64| -> Result<f64> {
                let v = self.pair.uq(tau, t)? * x;
                Ok(norm.vector(&self.weight.apply(tau, &v)).powf(p))
            };
            integrate_result(backward_integrand, 0.0, t, &self.quad)?
        };

        let factor = 2f64.powf(p - 1.0);
        Ok(LyapunovValue {
            value: factor * (forward.value + forward_tail.value - backward.value),
            quad_error: factor * (forward.abs_error + backward.abs_error),
            forward_tail,
        })
    }

    pub fn value(&self, t: f64, x: &DVector<f64>) -> Result<f64> {
        Ok(self.eval(t, x)?.value)
    }

    pub fn weight(&self) -> &WeightOperator {
        &self.weight
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

impl std::fmt::Debug for LyapunovFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LyapunovFunction")
            .field("p", &self.p)
            .field("t_max", &self.t_max)
            .finish_non_exhaustive()
    }
}

/// Any scalar candidate `L(t, x)`; implemented by [`LyapunovFunction`] and
/// by plain closures, so externally supplied candidates can be checked.
pub trait LyapunovCandidate: Sync {
    fn eval_candidate(&self, t: f64, x: &DVector<f64>) -> Result<f64>;

    /// `L(t, U(t, s) x)` for a candidate that can evaluate consistently
    /// along a trajectory. `None` falls back to evaluating the candidate at
    /// the propagated vector directly.
    fn eval_along_trajectory(&self, _t: f64, _s: f64, _x: &DVector<f64>) -> Option<Result<f64>> {
        None
    }
}

impl LyapunovCandidate for LyapunovFunction {
    fn eval_candidate(&self, t: f64, x: &DVector<f64>) -> Result<f64> {
        self.value(t, x)
    }

    /// The two integrals defining `L(t, U(t,s)x)` split exactly into the
    /// integrals defining `L(s, x)` minus the stretch over `[s, t]`, because
    /// the integrands coincide along one trajectory. Evaluating through this
    /// split keeps the shared truncated mass bit-identical on both sides of
    /// the decay condition, which a fresh truncation at `t` cannot do.
    fn eval_along_trajectory(&self, t: f64, s: f64, x: &DVector<f64>) -> Option<Result<f64>> {
        let go = || -> Result<f64> {
            let base = self.value(s, x)?;
            let norm = self.pair.norm_kind();
            let p = self.p;
            let mut stretch = 0.0;
            for branch in [self.pair.proj(s) * x, self.pair.comp(s) * x] {
                if branch.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let mass = integrate_result(
                    |tau| {
                        let v = self.pair.u(tau, s)? * &branch;
                        Ok(norm.vector(&self.weight.apply(tau, &v)).powf(p))
                    },
                    s,
                    t,
                    &self.quad,
                )?;
                stretch += mass.value;
            }
            Ok(base - 2f64.powf(p - 1.0) * stretch)
        };
        Some(go())
    }
}

impl<F> LyapunovCandidate for F
where
    F: Fn(f64, &DVector<f64>) -> Result<f64> + Sync,
{
    fn eval_candidate(&self, t: f64, x: &DVector<f64>) -> Result<f64> {
        self(t, x)
    }
}

/// Parameters for the combined bound (iii).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LyapunovCheckParams {
    pub gamma: f64,
    pub epsilon: f64,
    pub d_bound: f64,
}

/// Check the three Lyapunov conditions on triples `(t, s, x)` with
/// `t >= s` and `x != 0`:
///
/// (i) `L(t, U(t,s)x) + int_s^t ||H(tau) U(tau,s) x||^p dtau <= L(s, x)`;
/// (ii) `L(t, P(t)x) >= 0 >= L(t, Q(t)x)` (within `tol ||x||^p`);
/// (iii) `mu^(-p g) L(t, Px) - mu^(p g) L(t, Qx) <= 2^(p-1) D mu^(p eps) ||x||^p`.
#[allow(clippy::too_many_arguments)]
pub fn check_lyapunov_conditions<L: LyapunovCandidate + ?Sized>(
    candidate: &L,
    pair: &CompatiblePair,
    rate: &GrowthRate,
    weight: &WeightOperator,
    p: f64,
    params: &LyapunovCheckParams,
    triples: &[(f64, f64, DVector<f64>)],
    quad: &QuadSettings,
    tol: f64,
) -> Result<ValidationReport> {
    if triples.is_empty() {
        return Err(Error::EmptyInput("lyapunov check triples"));
    }
    let norm = pair.norm_kind();

    // triples are independent; evaluate in parallel and reduce in order
    let rows: Vec<(f64, f64, f64)> = triples
        .par_iter()
        .map(|(t, s, x)| -> Result<(f64, f64, f64)> {
            let (t, s) = (*t, *s);
            if !(t >= s && s >= 0.0) {
                return Err(Error::TimeOrder {
                    context: "lyapunov triple requires t >= s >= 0",
                    t,
                    s,
                });
            }
            let xnorm = norm.vector(x);
            if xnorm == 0.0 {
                return Err(Error::InvalidParameter(
                    "lyapunov triples require x != 0".into(),
                ));
            }

            // (i)
            let ux = pair.u(t, s)? * x;
            let l_end = match candidate.eval_along_trajectory(t, s, x) {
                Some(v) => v?,
                None => candidate.eval_candidate(t, &ux)?,
            };
            let l_start = candidate.eval_candidate(s, x)?;
            let along = integrate_result(
                |tau| {
                    let v = pair.u(tau, s)? * x;
                    Ok(norm.vector(&weight.apply(tau, &v)).powf(p))
                },
                s,
                t,
                quad,
            )?;
            let decay = (l_end + along.value - l_start) / l_start.abs().max(1.0);

            // (ii)
            let l_p = candidate.eval_candidate(t, &(pair.proj(t) * x))?;
            let l_q = candidate.eval_candidate(t, &(pair.comp(t) * x))?;
            let scale = xnorm.powf(p);
            let sign = (-l_p).max(l_q) / scale;

            // (iii)
            let mu_pg = rate.eval(t).powf(p * params.gamma);
            let lhs = l_p / mu_pg - l_q * mu_pg;
            let rhs =
                2f64.powf(p - 1.0) * params.d_bound * rate.eval(t).powf(p * params.epsilon) * scale;
            Ok((decay, sign, lhs / rhs - 1.0))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut decay = WorstCase::new();
    let mut signs = WorstCase::new();
    let mut combined = WorstCase::new();
    for ((t, s, _), &(d, sg, c)) in triples.iter().zip(rows.iter()) {
        decay.observe(d, || format!("(t, s) = ({t}, {s})"));
        signs.observe(sg, || format!("t = {t}"));
        combined.observe(c, || format!("t = {t}"));
    }

    let mut report = ValidationReport::new();
    report.push(decay.into_check("decay_along_trajectories", tol));
    report.push(signs.into_check("sign_split", tol));
    report.push(combined.into_check("combined_bound", tol));
    Ok(report)
}

/// A symmetric operator-valued function `W(t)` representing the quadratic
/// candidate `L(t, x) = <W(t) x, x>`.
#[derive(Clone)]
pub struct QuadraticCertificate {
    eval: Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>,
}

impl QuadraticCertificate {
    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    {
        QuadraticCertificate { eval: Arc::new(f) }
    }

    pub fn matrix(&self, t: f64) -> DMatrix<f64> {
        (self.eval)(t)
    }

    pub fn form(&self, t: f64, x: &DVector<f64>) -> f64 {
        (self.matrix(t) * x).dot(x)
    }
}

impl std::fmt::Debug for QuadraticCertificate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QuadraticCertificate")
            .finish_non_exhaustive()
    }
}

/// Check a quadratic certificate in the Euclidean inner product (the `p = 2`
/// case). Symmetry of `W` is checked first; if it fails, the inequality
/// checks are not run.
///
/// The inequalities, on triples `(t, s, x)`:
/// monotonicity `<U* W(t) U x, x> + int_s^t ||H U x||^2 <= <W(s) x, x>`,
/// sign split `<W P x, P x> >= 0 >= <W Q x, Q x>`, and the combined bound
/// `mu^(-2 g) <W P x, P x> - mu^(2 g) <W Q x, Q x> <= D mu(t)^(2 eps) ||x||^2`.
#[allow(clippy::too_many_arguments)]
pub fn check_quadratic_certificate(
    w: &QuadraticCertificate,
    pair: &CompatiblePair,
    rate: &GrowthRate,
    weight: &WeightOperator,
    params: &LyapunovCheckParams,
    triples: &[(f64, f64, DVector<f64>)],
    quad: &QuadSettings,
    tol: f64,
) -> Result<ValidationReport> {
    if triples.is_empty() {
        return Err(Error::EmptyInput("quadratic certificate triples"));
    }

    let mut symmetry = WorstCase::new();
    for (t, _, _) in triples {
        let m = w.matrix(*t);
        symmetry.observe((&m - m.transpose()).norm(), || format!("t = {t}"));
    }
    let symmetry = symmetry.into_check("symmetric", 1e-10);
    if !symmetry.pass {
        let mut report = ValidationReport::new();
        report.push(symmetry);
        return Ok(report);
    }

    let mut monotone = WorstCase::new();
    let mut signs = WorstCase::new();
    let mut combined = WorstCase::new();

    for (t, s, x) in triples {
        let (t, s) = (*t, *s);
        if !(t >= s && s >= 0.0) {
            return Err(Error::TimeOrder {
                context: "quadratic certificate triple requires t >= s >= 0",
                t,
                s,
            });
        }
        let xnorm2 = x.dot(x);
        if xnorm2 == 0.0 {
            return Err(Error::InvalidParameter("triples require x != 0".into()));
        }

        let ux = pair.u(t, s)? * x;
        let along = integrate_result(
            |tau| {
                let v = pair.u(tau, s)? * x;
                let hv = weight.apply(tau, &v);
                Ok(hv.dot(&hv))
            },
            s,
            t,
            quad,
        )?;
        let lhs = w.form(t, &ux) + along.value;
        let rhs = w.form(s, x);
        monotone.observe((lhs - rhs) / rhs.abs().max(1.0), || {
            format!("(t, s) = ({t}, {s})")
        });

        let px = pair.proj(t) * x;
        let qx = pair.comp(t) * x;
        let w_p = w.form(t, &px);
        let w_q = w.form(t, &qx);
        signs.observe((-w_p).max(w_q) / xnorm2, || format!("t = {t}"));

        let mu_2g = rate.eval(t).powf(2.0 * params.gamma);
        let lhs = w_p / mu_2g - w_q * mu_2g;
        let rhs = params.d_bound * rate.eval(t).powf(2.0 * params.epsilon) * xnorm2;
        combined.observe(lhs / rhs - 1.0, || format!("t = {t}"));
    }

    let mut report = ValidationReport::new();
    report.push(symmetry);
    report.push(monotone.into_check("form_monotone_along_trajectories", tol));
    report.push(signs.into_check("sign_split", tol));
    report.push(combined.into_check("combined_bound", tol));
    Ok(report)
}
