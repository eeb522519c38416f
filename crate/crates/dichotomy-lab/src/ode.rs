//! Fundamental-matrix solutions of `X' = A(t) X` by adaptive Runge-Kutta.
//!
//! Transition matrices are integrated anchor-to-query with Dormand-Prince
//! 5(4). Results are memoized at a fixed checkpoint lattice per anchor so
//! that repeated quadrature queries stay cheap. The lattice is what makes
//! caching observationally pure: the value returned for `(t, s)` depends
//! only on `(t, s)` and the lattice, never on query order.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

pub type CoefficientFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OdeSettings {
    /// Per-step relative tolerance.
    pub rel_tol: f64,
    /// Per-step absolute tolerance.
    pub abs_tol: f64,
    /// Spacing of the memoized checkpoint lattice.
    pub checkpoint_spacing: f64,
    pub max_steps: usize,
}

impl Default for OdeSettings {
    fn default() -> Self {
        OdeSettings {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            checkpoint_spacing: 1.0,
            max_steps: 200_000,
        }
    }
}

// Dormand-Prince 5(4) coefficients.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate `Y' = A(t) Y` from `(from, y0)` to `to` (either direction).
pub fn integrate_matrix(
    coeffs: &dyn Fn(f64) -> DMatrix<f64>,
    from: f64,
    to: f64,
    y0: DMatrix<f64>,
    settings: &OdeSettings,
) -> Result<DMatrix<f64>> {
    if from == to {
        return Ok(y0);
    }
    let dir = (to - from).signum();
    let mut t = from;
    let mut y = y0;
    let mut h = (to - from) / 16.0;
    let mut steps = 0usize;

    while (to - t) * dir > 0.0 {
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t });
        }
        steps += 1;
        if steps > settings.max_steps {
            return Err(Error::StepBudget { t });
        }
        // do not overshoot
        if (t + h - to) * dir > 0.0 {
            h = to - t;
        }

        let mut k: Vec<DMatrix<f64>> = Vec::with_capacity(7);
        for stage in 0..7 {
            let mut yi = y.clone();
            for (j, kj) in k.iter().enumerate().take(stage) {
                if A[stage][j] != 0.0 {
                    yi += kj * (h * A[stage][j]);
                }
            }
            k.push(coeffs(t + C[stage] * h) * yi);
        }

        let mut y_next = y.clone();
        let mut err = DMatrix::zeros(y.nrows(), y.ncols());
        for (i, ki) in k.iter().enumerate() {
            if B5[i] != 0.0 {
                y_next += ki * (h * B5[i]);
            }
            if ERR[i] != 0.0 {
                err += ki * (h * ERR[i]);
            }
        }

        let mut err_norm = 0.0f64;
        for ((e, a), b) in err.iter().zip(y.iter()).zip(y_next.iter()) {
            let scale = settings.abs_tol + settings.rel_tol * a.abs().max(b.abs());
            err_norm = err_norm.max(e.abs() / scale);
        }

        if err_norm <= 1.0 {
            t += h;
            y = y_next;
        }
        let factor = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok(y)
}

type CheckpointMap = Arc<Mutex<HashMap<i64, DMatrix<f64>>>>;

/// Transition matrices of `X' = A(t) X` with per-anchor checkpoint caches.
pub struct MatrixOde {
    dim: usize,
    coeffs: CoefficientFn,
    settings: OdeSettings,
    // anchor bits -> checkpoint index -> transition matrix from the anchor
    forward: Mutex<HashMap<u64, CheckpointMap>>,
    backward: Mutex<HashMap<u64, CheckpointMap>>,
}

impl MatrixOde {
    pub fn new(dim: usize, coeffs: CoefficientFn, settings: OdeSettings) -> Self {
        MatrixOde {
            dim,
            coeffs,
            settings,
            forward: Mutex::new(HashMap::new()),
            backward: Mutex::new(HashMap::new()),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn settings(&self) -> &OdeSettings {
        &self.settings
    }

    fn anchor_cache(table: &Mutex<HashMap<u64, CheckpointMap>>, anchor: f64) -> CheckpointMap {
        let mut guard = table.lock().unwrap();
        guard
            .entry(anchor.to_bits())
            .or_insert_with(|| Arc::new(Mutex::new(HashMap::new())))
            .clone()
    }

    /// `U(t, s)` for `t >= s`: the solution of `X' = A X, X(s) = Id` at `t`.
    pub fn transition(&self, t: f64, s: f64) -> Result<DMatrix<f64>> {
        if t < s {
            return Err(Error::TimeOrder {
                context: "forward transition requires t >= s",
                t,
                s,
            });
        }
        let cache = Self::anchor_cache(&self.forward, s);
        self.propagate(&cache, s, t, 1.0)
    }

    /// `U(s, t)` for `s <= t`: backward solution with `X(t) = Id`, i.e. the
    /// inverse flow, obtained by integrating toward the past.
    pub fn backward_transition(&self, s: f64, t: f64) -> Result<DMatrix<f64>> {
        if t < s {
            return Err(Error::TimeOrder {
                context: "backward transition requires t >= s",
                t,
                s,
            });
        }
        let cache = Self::anchor_cache(&self.backward, t);
        self.propagate(&cache, t, s, -1.0)
    }

    /// Walk the checkpoint lattice `anchor + k * dir * spacing` up to the
    /// query point, then integrate the remainder. Checkpoint k is always
    /// computed from checkpoint k-1, so cached values are query-order
    /// independent.
    fn propagate(
        &self,
        cache: &CheckpointMap,
        anchor: f64,
        target: f64,
        dir: f64,
    ) -> Result<DMatrix<f64>> {
        let spacing = self.settings.checkpoint_spacing;
        let k_max = ((target - anchor) * dir / spacing).floor().max(0.0) as i64;

        let mut guard = cache.lock().unwrap();
        let mut k_have = (0..=k_max)
            .rev()
            .find(|k| *k == 0 || guard.contains_key(k))
            .unwrap_or(0);
        let mut base = if k_have == 0 {
            DMatrix::identity(self.dim, self.dim)
        } else {
            guard[&k_have].clone()
        };
        while k_have < k_max {
            let from = anchor + dir * spacing * k_have as f64;
            let to = anchor + dir * spacing * (k_have + 1) as f64;
            base = integrate_matrix(&*self.coeffs, from, to, base, &self.settings)?;
            k_have += 1;
            guard.insert(k_have, base.clone());
        }
        drop(guard);

        let from = anchor + dir * spacing * k_max as f64;
        integrate_matrix(&*self.coeffs, from, target, base, &self.settings)
    }
}

impl std::fmt::Debug for MatrixOde {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MatrixOde")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn constant_diag() -> CoefficientFn {
        Arc::new(|_t| dmatrix![-2.0, 0.0; 0.0, 3.0])
    }

    #[test]
    fn constant_coefficients_match_exponentials() {
        let ode = MatrixOde::new(2, constant_diag(), OdeSettings::default());
        let u = ode.transition(1.0, 0.0).unwrap();
        assert!((u[(0, 0)] - (-2.0f64).exp()).abs() / (-2.0f64).exp() < 1e-6);
        assert!((u[(1, 1)] - 3.0f64.exp()).abs() / 3.0f64.exp() < 1e-6);
        assert!(u[(0, 1)].abs() < 1e-10 && u[(1, 0)].abs() < 1e-10);
    }

    #[test]
    fn zero_field_gives_identity() {
        let ode = MatrixOde::new(
            2,
            Arc::new(|_| DMatrix::zeros(2, 2)),
            OdeSettings::default(),
        );
        let u = ode.transition(7.5, 1.25).unwrap();
        assert!((u - DMatrix::<f64>::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn separable_time_dependent_coefficients() {
        let coeffs: CoefficientFn =
            Arc::new(|t| dmatrix![-1.0 / (t + 1.0), 0.0; 0.0, 1.0 / (t + 1.0)]);
        let ode = MatrixOde::new(2, coeffs, OdeSettings::default());
        for &t in &[0.5, 2.0, 5.0, 10.0] {
            let u = ode.transition(t, 0.0).unwrap();
            let exact = 1.0 / (t + 1.0);
            assert!((u[(0, 0)] - exact).abs() / exact < 1e-6, "t = {t}");
            assert!((u[(1, 1)] - (t + 1.0)).abs() / (t + 1.0) < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn rotation_field() {
        let coeffs: CoefficientFn = Arc::new(|_| dmatrix![0.0, 1.0; -1.0, 0.0]);
        let ode = MatrixOde::new(2, coeffs, OdeSettings::default());
        let t = std::f64::consts::FRAC_PI_2;
        let u = ode.transition(t, 0.0).unwrap();
        let expect = dmatrix![t.cos(), t.sin(); -t.sin(), t.cos()];
        assert!((u - expect).norm() < 1e-7);
    }

    #[test]
    fn backward_transition_inverts_forward() {
        let ode = MatrixOde::new(2, constant_diag(), OdeSettings::default());
        let u = ode.transition(2.0, 0.5).unwrap();
        let v = ode.backward_transition(0.5, 2.0).unwrap();
        let prod = &u * &v;
        assert!((prod - DMatrix::<f64>::identity(2, 2)).norm() < 1e-6);
    }

    #[test]
    fn cache_is_observationally_pure() {
        let mk = || MatrixOde::new(2, constant_diag(), OdeSettings::default());
        // cold query
        let a = mk().transition(5.3, 0.0).unwrap();
        // same query after the cache was warmed along a different path
        let ode = mk();
        ode.transition(2.0, 0.0).unwrap();
        ode.transition(4.9, 0.0).unwrap();
        let b = ode.transition(5.3, 0.0).unwrap();
        assert_eq!(
            a, b,
            "checkpointed result must be bit-identical to the cold result"
        );
    }

    #[test]
    fn reports_time_order_errors() {
        let ode = MatrixOde::new(2, constant_diag(), OdeSettings::default());
        assert!(ode.transition(0.0, 1.0).is_err());
        assert!(ode.backward_transition(1.0, 0.0).is_err());
    }
}
