//! Adaptive quadrature on finite intervals, plus decay fitting for the
//! truncated tails of semi-infinite integrals.
//!
//! One engine serves both the integral criterion and the Lyapunov
//! construction; their integrands differ only in weights.

use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::cell::Cell;

/// 7-point Gauss / 15-point Kronrod nodes and weights on [-1, 1]
/// (positive abscissae; the rule is symmetric).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Tolerances and subdivision budget for adaptive quadrature.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

/// Value and error estimate of an adaptive integration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    /// False when the interval budget ran out before reaching tolerance.
    pub converged: bool,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    let mut resabs = 0.0;
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let (f1, f2) = if x == 0.0 {
            let v = f(center);
            (v, 0.0)
        } else {
            (f(center - half * x), f(center + half * x))
        };
        let sum = f1 + f2;
        kronrod += wk * sum;
        resabs += wk * (f1.abs() + f2.abs());
        // odd Kronrod indices carry the embedded Gauss rule
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        } else if x == 0.0 {
            gauss += WG[3] * f1;
        }
    }
    let value = kronrod * half;
    let mut error = ((kronrod - gauss) * half).abs();
    // QUADPACK-style sharpening of the raw difference estimate
    let resabs = resabs * half.abs();
    if resabs != 0.0 && error != 0.0 {
        let scale = (200.0 * error / resabs).powf(1.5);
        error = if scale < 1.0 { resabs * scale } else { resabs };
    }
    (value, error.max(f64::EPSILON * resabs))
}

/// Adaptive integration of `f` over `[a, b]`: globally refine the segment
/// with the largest error estimate until the total estimate meets tolerance.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    settings: &QuadSettings,
) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
            converged: true,
        };
    }
    let mut evals = 15usize;
    let (v, e) = gauss_kronrod(&mut f, a, b);
    let mut segments = vec![Segment {
        a,
        b,
        value: v,
        error: e,
    }];
    loop {
        let total_value: f64 = segments.iter().map(|s| s.value).sum();
        let total_error: f64 = segments.iter().map(|s| s.error).sum();
        let target = settings.abs_tol.max(settings.rel_tol * total_value.abs());
        if total_error <= target {
            return QuadResult {
                value: total_value,
                abs_error: total_error,
                evaluations: evals,
                converged: true,
            };
        }
        if segments.len() >= settings.max_intervals {
            return QuadResult {
                value: total_value,
                abs_error: total_error,
                evaluations: evals,
                converged: false,
            };
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval no longer splittable in f64; keep its estimate
            segments.push(seg);
            let total_value: f64 = segments.iter().map(|s| s.value).sum();
            let total_error: f64 = segments.iter().map(|s| s.error).sum();
            return QuadResult {
                value: total_value,
                abs_error: total_error,
                evaluations: evals,
                converged: false,
            };
        }
        let (v1, e1) = gauss_kronrod(&mut f, seg.a, mid);
        let (v2, e2) = gauss_kronrod(&mut f, mid, seg.b);
        evals += 30;
        segments.push(Segment {
            a: seg.a,
            b: mid,
            value: v1,
            error: e1,
        });
        segments.push(Segment {
            a: mid,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }
}

/// Like [`integrate`] but for integrands that can fail. The first error
/// aborts the refinement and is returned.
pub fn integrate_result<F: Fn(f64) -> Result<f64>>(
    f: F,
    a: f64,
    b: f64,
    settings: &QuadSettings,
) -> Result<QuadResult> {
    let failure = Cell::new(false);
    let mut first_error = None;
    let result = {
        let mut wrapped = |x: f64| -> f64 {
            if failure.get() {
                return 0.0;
            }
            match f(x) {
                Ok(v) => v,
                Err(e) => {
                    failure.set(true);
                    first_error = Some(e);
                    0.0
                }
            }
        };
        integrate(&mut wrapped, a, b, settings)
    };
    match first_error {
        Some(e) => Err(e),
        None => Ok(result),
    }
}

/// Tail of a truncated semi-infinite integral, estimated from the decay of
/// the integrand's mass near the truncation point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailEstimate {
    /// Estimated mass of the tail beyond the truncation point (0 when the
    /// estimate reports divergence).
    pub value: f64,
    /// Decay exponent of an exponential-in-`u` model matched to the last
    /// two windows.
    pub decay_exponent: f64,
    /// True when the integrand is not decaying at the truncation point.
    pub diverges: bool,
}

/// Estimate the mass of `int_hi^inf f(tau) dtau` by matching the model
/// `f dtau = c exp(-beta u) du` (with `u` a monotone scale, typically
/// `log mu`) to the masses of the last two equal-width `u`-windows before
/// `hi`. Matching window masses rather than pointwise samples keeps the
/// estimate stable for oscillating integrands; for an exactly exponential
/// density the resulting geometric tail is exact.
pub fn tail_from_window_masses(
    f: &dyn Fn(f64) -> Result<f64>,
    u: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    settings: &QuadSettings,
) -> Result<TailEstimate> {
    let u_lo = u(lo);
    let u_hi = u(hi);
    let width = (std::f64::consts::LN_10).min(0.5 * (u_hi - u_lo));
    if !(width > 1e-9) {
        return Ok(TailEstimate {
            value: 0.0,
            decay_exponent: f64::INFINITY,
            diverges: false,
        });
    }
    // invert u by bisection (u is increasing)
    let tau_at = |target: f64| -> f64 {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if u(mid) < target {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    };
    let tau1 = tau_at(u_hi - 2.0 * width);
    let tau2 = tau_at(u_hi - width);

    let window_settings = QuadSettings {
        rel_tol: settings.rel_tol.max(1e-6),
        ..*settings
    };
    let m1 = integrate_result(f, tau1, tau2, &window_settings)?.value;
    let m2 = integrate_result(f, tau2, hi, &window_settings)?.value;

    if m2 <= 0.0 {
        return Ok(TailEstimate {
            value: 0.0,
            decay_exponent: f64::INFINITY,
            diverges: false,
        });
    }
    if m1 <= 0.0 || m2 >= m1 {
        return Ok(TailEstimate {
            value: 0.0,
            decay_exponent: 0.0,
            diverges: true,
        });
    }
    let ratio = m2 / m1;
    let beta = -ratio.ln() / width;
    Ok(TailEstimate {
        value: m2 * ratio / (1.0 - ratio),
        decay_exponent: beta,
        diverges: false,
    })
}
