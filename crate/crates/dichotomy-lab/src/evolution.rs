//! Evolution operators, projection families, and compatible pairs.
//!
//! An evolution operator is a two-parameter family `U(t, s)` (`t >= s >= 0`)
//! with `U(t, t) = Id` and the cocycle law `U(t, tau) U(tau, s) = U(t, s)`.
//! A projection family `P(t)` is compatible with `U` when `P` commutes with
//! `U` along trajectories and `U(t, s)` restricted to the complementary
//! subspace `Q(s)X` is invertible onto `Q(t)X`; the inverse composed with
//! `Q(t)` is written `uq(s, t)` here. Invertibility is only ever required on
//! that restriction, never on the whole space, so `uq` is computed by a
//! rank-restricted least-squares solve (or by backward integration for
//! ODE-backed operators), not by matrix inversion.

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::growth::GrowthRate;
use crate::norm::{relative_frobenius, NormKind};
use crate::ode::{CoefficientFn, MatrixOde, OdeSettings};
use crate::report::{Check, ValidationReport, WorstCase};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::sync::Arc;

// ── Projection families ──────────────────────────────────────────────

/// A time-dependent projection `P(t)` splitting the state space into a
/// decaying range and an expanding complement `Q(t) = Id - P(t)`.
#[derive(Clone)]
pub struct ProjectionFamily {
    dim: usize,
    eval: Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>,
}

impl ProjectionFamily {
    pub fn from_fn<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    {
        ProjectionFamily {
            dim,
            eval: Arc::new(f),
        }
    }

    /// A constant projection. Rejects matrices that are not idempotent
    /// within Frobenius tolerance 1e-9.
    pub fn constant(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidParameter(
                "projection matrix must be square".into(),
            ));
        }
        let residual = (&m * &m - &m).norm();
        if residual > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "projection matrix is not idempotent (||P^2 - P|| = {residual:.3e})"
            )));
        }
        let dim = m.nrows();
        Ok(ProjectionFamily {
            dim,
            eval: Arc::new(move |_| m.clone()),
        })
    }

    /// Orthogonal projection onto the listed coordinates.
    pub fn coordinate(dim: usize, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= dim) {
            return Err(Error::InvalidParameter(format!(
                "coordinate index {bad} out of range for dimension {dim}"
            )));
        }
        let mut m = DMatrix::zeros(dim, dim);
        for &i in indices {
            m[(i, i)] = 1.0;
        }
        Self::constant(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `P(t)`.
    pub fn matrix(&self, t: f64) -> DMatrix<f64> {
        (self.eval)(t)
    }

    /// `Q(t) = Id - P(t)`.
    pub fn complement(&self, t: f64) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim) - (self.eval)(t)
    }

    /// Rank of a (near-)idempotent matrix: the number of singular values
    /// above 1/2, which separates the 0 and >= 1 clusters of a projection.
    pub fn rank_at(&self, t: f64) -> usize {
        let sv = self.matrix(t).singular_values();
        sv.iter().filter(|&&s| s > 0.5).count()
    }

    /// Idempotency (Frobenius tolerance 1e-9) and rank constancy on a grid.
    pub fn validate(&self, grid: &[f64]) -> Result<ValidationReport> {
        if grid.is_empty() {
            return Err(Error::EmptyInput("projection validation grid"));
        }
        let mut report = ValidationReport::new();
        let mut idem = WorstCase::new();
        for &t in grid {
            let p = self.matrix(t);
            idem.observe((&p * &p - &p).norm(), || format!("t = {t}"));
        }
        report.push(idem.into_check("idempotent", 1e-9));

        let rank0 = self.rank_at(grid[0]);
        let mut drift = WorstCase::new();
        for &t in grid {
            let r = self.rank_at(t);
            drift.observe((r as f64 - rank0 as f64).abs(), || {
                format!("t = {t} (rank {r})")
            });
        }
        report.push(
            drift
                .into_check("constant_rank", 0.0)
                .detail(format!("rank = {rank0}")),
        );
        Ok(report)
    }
}

impl std::fmt::Debug for ProjectionFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProjectionFamily")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

// ── Evolution operators ──────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    ClosedForm,
    OdeBacked,
}

/// A two-parameter transition family on the ordered domain `t >= s >= 0`.
#[derive(Clone)]
pub struct EvolutionOperator {
    dim: usize,
    backend: Backend,
    eval: Arc<dyn Fn(f64, f64) -> Result<DMatrix<f64>> + Send + Sync>,
    /// Backward solver, present for ODE-backed operators.
    ode: Option<Arc<MatrixOde>>,
}

impl EvolutionOperator {
    pub fn closed_form<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64, f64) -> DMatrix<f64> + Send + Sync + 'static,
    {
        EvolutionOperator {
            dim,
            backend: Backend::ClosedForm,
            eval: Arc::new(move |t, s| Ok(f(t, s))),
            ode: None,
        }
    }

    /// The fundamental-matrix operator of `x' = A(t) x`.
    pub fn from_coefficients(dim: usize, coeffs: CoefficientFn, settings: OdeSettings) -> Self {
        let ode = Arc::new(MatrixOde::new(dim, coeffs, settings));
        let solver = ode.clone();
        EvolutionOperator {
            dim,
            backend: Backend::OdeBacked,
            eval: Arc::new(move |t, s| solver.transition(t, s)),
            ode: Some(ode),
        }
    }

    /// Like [`from_coefficients`](Self::from_coefficients), with `A(t)`
    /// given entrywise as expressions in `t`.
    pub fn from_coefficient_exprs(
        entries: Vec<Vec<Expression>>,
        settings: OdeSettings,
    ) -> Result<Self> {
        let dim = entries.len();
        if dim == 0 || entries.iter().any(|row| row.len() != dim) {
            return Err(Error::InvalidParameter(
                "coefficient matrix must be square and nonempty".into(),
            ));
        }
        let entries = Arc::new(entries);
        let coeffs: CoefficientFn = Arc::new(move |t| {
            DMatrix::from_fn(entries.len(), entries.len(), |i, j| entries[i][j].eval(t))
        });
        Ok(Self::from_coefficients(dim, coeffs, settings))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// Cocycle residual tolerance appropriate to the backend.
    pub fn default_cocycle_tol(&self) -> f64 {
        match self.backend {
            Backend::ClosedForm => 1e-8,
            Backend::OdeBacked => 1e-5,
        }
    }

    /// `U(t, s)` for `t >= s >= 0`.
    pub fn matrix(&self, t: f64, s: f64) -> Result<DMatrix<f64>> {
        if s < 0.0 || t < s {
            return Err(Error::TimeOrder {
                context: "evolution operator requires t >= s >= 0",
                t,
                s,
            });
        }
        (self.eval)(t, s)
    }

    pub(crate) fn ode(&self) -> Option<&Arc<MatrixOde>> {
        self.ode.as_ref()
    }
}

impl std::fmt::Debug for EvolutionOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EvolutionOperator")
            .field("dim", &self.dim)
            .field("backend", &self.backend)
            .finish_non_exhaustive()
    }
}

/// Cocycle law on explicit triples `t >= tau >= s`: one check per triple,
/// residuals in relative Frobenius norm.
pub fn check_cocycle(
    u: &EvolutionOperator,
    triples: &[(f64, f64, f64)],
    tol: f64,
) -> Result<ValidationReport> {
    if triples.is_empty() {
        return Err(Error::EmptyInput("cocycle triples"));
    }
    let mut report = ValidationReport::new();
    for &(t, tau, s) in triples {
        if !(t >= tau && tau >= s && s >= 0.0) {
            return Err(Error::TimeOrder {
                context: "cocycle triple requires t >= tau >= s >= 0",
                t,
                s,
            });
        }
        let left = u.matrix(t, tau)? * u.matrix(tau, s)?;
        let right = u.matrix(t, s)?;
        let residual = relative_frobenius(&left, &right);
        report.push(Check::new(
            format!("cocycle(t={t}, tau={tau}, s={s})"),
            residual <= tol,
            residual,
        ));
    }
    Ok(report)
}

// ── Compatible pairs ─────────────────────────────────────────────────

#[derive(Clone)]
enum UqBackend {
    /// Closed-form `(s, t) -> U_Q(s, t) Q(t)`.
    ClosedForm(Arc<dyn Fn(f64, f64) -> DMatrix<f64> + Send + Sync>),
    /// Rank-restricted least squares on `U(t, s) Q(s)`.
    Restricted,
    /// Backward integration of the ODE flow, projected onto the
    /// complementary subspaces.
    OdeBackward,
}

/// An evolution operator together with a compatible projection family and
/// a way to invert the operator on the complementary subspaces.
#[derive(Clone)]
pub struct CompatiblePair {
    u: EvolutionOperator,
    p: ProjectionFamily,
    uq: UqBackend,
    norm: NormKind,
}

impl CompatiblePair {
    /// Pair a generic operator with a projection family. ODE-backed
    /// operators invert by backward integration; everything else uses the
    /// restricted least-squares solve.
    pub fn new(u: EvolutionOperator, p: ProjectionFamily) -> Result<Self> {
        if u.dim() != p.dim() {
            return Err(Error::InvalidParameter(format!(
                "operator dimension {} does not match projection dimension {}",
                u.dim(),
                p.dim()
            )));
        }
        let uq = if u.ode().is_some() {
            UqBackend::OdeBackward
        } else {
            UqBackend::Restricted
        };
        Ok(CompatiblePair {
            u,
            p,
            uq,
            norm: NormKind::Spectral,
        })
    }

    /// The coupled two-dimensional closed-form system, in the max norm:
    /// `P(t)(x1, x2) = (x1 + (mu(t)^eps - 1) x2, 0)` and
    /// `U(t, s) = (mu(t)/mu(s))^-a P(s) + (mu(t)/mu(s))^b Q(t)`.
    ///
    /// The decaying branch has the exact identity
    /// `||U(t,s) P(s)|| = (mu(t)/mu(s))^-a mu(s)^eps`; for `eps > 0` the
    /// projection norms grow like `mu(s)^eps`, so no uniform bound exists.
    pub fn example_one(rate: &GrowthRate, a: f64, b: f64, eps: f64) -> Result<Self> {
        if a <= 0.0 || b <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "example1 requires a > 0 and b > 0 (got a = {a}, b = {b})"
            )));
        }
        if eps < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "example1 requires epsilon >= 0 (got {eps})"
            )));
        }
        let proj_rate = rate.clone();
        let proj = ProjectionFamily::from_fn(2, move |t| {
            let w = proj_rate.eval(t).powf(eps) - 1.0;
            DMatrix::from_row_slice(2, 2, &[1.0, w, 0.0, 0.0])
        });

        let u_rate = rate.clone();
        let u_proj = proj.clone();
        let u = EvolutionOperator::closed_form(2, move |t, s| {
            let r = u_rate.eval(t) / u_rate.eval(s);
            let p_s = u_proj.matrix(s);
            let q_t = u_proj.complement(t);
            p_s * r.powf(-a) + q_t * r.powf(b)
        });

        let uq_rate = rate.clone();
        let uq_proj = proj.clone();
        let uq = Arc::new(move |s: f64, t: f64| {
            let r = uq_rate.eval(t) / uq_rate.eval(s);
            uq_proj.complement(s) * r.powf(-b)
        });

        Ok(CompatiblePair {
            u,
            p: proj,
            uq: UqBackend::ClosedForm(uq),
            norm: NormKind::Max,
        })
    }

    /// The diagonal two-dimensional system over the rate
    /// `mu(t) = t + sqrt(t^2 + 1)`, with an oscillating loss of
    /// hyperbolicity of strength `alpha` on both branches and coordinate
    /// projection `P(t)(x1, x2) = (x1, 0)`.
    pub fn example_two(a: f64, b: f64, alpha: f64) -> Result<Self> {
        if !(a > 1.0 && b > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "example2 requires a > 1 and b > 1 (got a = {a}, b = {b})"
            )));
        }
        if alpha < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "example2 requires alpha >= 0 (got {alpha})"
            )));
        }
        if !(alpha + 1.0 < a.min(b)) {
            return Err(Error::InvalidParameter(format!(
                "example2 requires alpha + 1 < min(a, b) (got alpha + 1 = {}, min(a, b) = {})",
                alpha + 1.0,
                a.min(b)
            )));
        }
        let rate = GrowthRate::sqrt_shift();
        let osc = move |rate: &GrowthRate, t: f64| alpha * t.sin().powi(2) * rate.eval(t).ln();

        let u_rate = rate.clone();
        let u = EvolutionOperator::closed_form(2, move |t, s| {
            let dr = u_rate.deriv(s) / u_rate.deriv(t);
            let r = u_rate.eval(t) / u_rate.eval(s);
            let phase = osc(&u_rate, s) - osc(&u_rate, t);
            let u1 = dr * r.powf(-a) * phase.exp();
            let u2 = dr * r.powf(b) * (-phase).exp();
            DMatrix::from_row_slice(2, 2, &[u1, 0.0, 0.0, u2])
        });

        let uq_rate = rate.clone();
        let uq = Arc::new(move |s: f64, t: f64| {
            let dr = uq_rate.deriv(t) / uq_rate.deriv(s);
            let r = uq_rate.eval(t) / uq_rate.eval(s);
            let phase = osc(&uq_rate, s) - osc(&uq_rate, t);
            let inv_u2 = dr * r.powf(-b) * phase.exp();
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, inv_u2])
        });

        let p = ProjectionFamily::coordinate(2, &[0])?;
        Ok(CompatiblePair {
            u,
            p,
            uq: UqBackend::ClosedForm(uq),
            norm: NormKind::Max,
        })
    }

    /// Diagonal closed-form system `U(t, s) = diag((mu(t)/mu(s))^{c_i})`
    /// with coordinate projection onto `stable`.
    pub fn diagonal(rate: &GrowthRate, exponents: &[f64], stable: &[usize]) -> Result<Self> {
        let dim = exponents.len();
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "diagonal system needs at least one exponent".into(),
            ));
        }
        let p = ProjectionFamily::coordinate(dim, stable)?;

        let exps: Vec<f64> = exponents.to_vec();
        let u_rate = rate.clone();
        let u = EvolutionOperator::closed_form(dim, move |t, s| {
            let r = u_rate.eval(t) / u_rate.eval(s);
            DMatrix::from_fn(exps.len(), exps.len(), |i, j| {
                if i == j {
                    r.powf(exps[i])
                } else {
                    0.0
                }
            })
        });

        let unstable: Vec<usize> = (0..dim).filter(|i| !stable.contains(i)).collect();
        let exps: Vec<f64> = exponents.to_vec();
        let uq_rate = rate.clone();
        let uq = Arc::new(move |s: f64, t: f64| {
            let r = uq_rate.eval(t) / uq_rate.eval(s);
            let mut m = DMatrix::zeros(exps.len(), exps.len());
            for &i in &unstable {
                m[(i, i)] = r.powf(-exps[i]);
            }
            m
        });

        Ok(CompatiblePair {
            u,
            p,
            uq: UqBackend::ClosedForm(uq),
            norm: NormKind::Max,
        })
    }

    pub fn with_norm(mut self, norm: NormKind) -> Self {
        self.norm = norm;
        self
    }

    pub fn dim(&self) -> usize {
        self.u.dim()
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm
    }

    pub fn operator(&self) -> &EvolutionOperator {
        &self.u
    }

    pub fn projection(&self) -> &ProjectionFamily {
        &self.p
    }

    pub fn u(&self, t: f64, s: f64) -> Result<DMatrix<f64>> {
        self.u.matrix(t, s)
    }

    /// `P(t)`.
    pub fn proj(&self, t: f64) -> DMatrix<f64> {
        self.p.matrix(t)
    }

    /// `Q(t) = Id - P(t)`.
    pub fn comp(&self, t: f64) -> DMatrix<f64> {
        self.p.complement(t)
    }

    /// `U_Q(s, t) Q(t)` for `t >= s`: the matrix `M` with `U(t, s) M q = q`
    /// on the range of `Q(t)` and `M p = 0` on the range of `P(t)`.
    pub fn uq(&self, s: f64, t: f64) -> Result<DMatrix<f64>> {
        if s < 0.0 || t < s {
            return Err(Error::TimeOrder {
                context: "uq requires t >= s >= 0",
                t,
                s,
            });
        }
        match &self.uq {
            UqBackend::ClosedForm(f) => Ok(f(s, t)),
            UqBackend::Restricted => {
                let u_ts = self.u.matrix(t, s)?;
                restricted_inverse(&u_ts, &self.comp(s), &self.comp(t), s, t)
            }
            UqBackend::OdeBackward => {
                let ode = self.u.ode().expect("ode backend present");
                let v = ode.backward_transition(s, t)?;
                Ok(self.comp(s) * v * self.comp(t))
            }
        }
    }

    /// Green kernel: `U(tau, t) P(t)` ahead of `t`, `-U_Q(tau, t) Q(t)`
    /// behind it, and `P(t)` at `tau = t` (the single point does not affect
    /// any integral; taking the decaying branch keeps the kernel total).
    pub fn green(&self, tau: f64, t: f64) -> Result<DMatrix<f64>> {
        if tau > t {
            Ok(self.u.matrix(tau, t)? * self.proj(t))
        } else if tau < t {
            Ok(-self.uq(tau, t)?)
        } else {
            Ok(self.proj(t))
        }
    }

    pub fn green_apply(&self, tau: f64, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.green(tau, t)? * x)
    }
}

impl std::fmt::Debug for CompatiblePair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompatiblePair")
            .field("dim", &self.dim())
            .field("norm", &self.norm)
            .finish_non_exhaustive()
    }
}

/// Invert `U(t, s)` restricted to the complementary subspaces: the unique
/// `M = Q(s) pinv(U(t,s) Q(s)) Q(t)`. Fails when the restriction is
/// numerically singular (rank-th singular value below 1e-10) or the solve
/// residual exceeds `1e-7 ||Q(t)||`.
fn restricted_inverse(
    u_ts: &DMatrix<f64>,
    q_s: &DMatrix<f64>,
    q_t: &DMatrix<f64>,
    s: f64,
    t: f64,
) -> Result<DMatrix<f64>> {
    let dim = u_ts.nrows();
    let rank = q_t.singular_values().iter().filter(|&&v| v > 0.5).count();
    if rank == 0 {
        return Ok(DMatrix::zeros(dim, dim));
    }
    let a = u_ts * q_s;
    let svd = a.clone().svd(true, true);
    let u_svd = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let sv = &svd.singular_values;

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let smallest_restricted = sv[order[rank - 1]];
    if smallest_restricted < 1e-10 {
        return Err(Error::SingularRestriction {
            s,
            t,
            detail: format!(
                "restricted singular value {smallest_restricted:.3e} below 1e-10 (rank {rank})"
            ),
        });
    }

    let mut pinv = DMatrix::zeros(dim, dim);
    for &i in order.iter().take(rank) {
        let vi = v_t.row(i).transpose();
        let ui = u_svd.column(i);
        pinv += (vi * ui.transpose()) / sv[i];
    }
    let m = q_s * pinv * q_t;

    let residual = (u_ts * &m - q_t).norm();
    if residual > 1e-7 * q_t.norm().max(1.0) {
        return Err(Error::SingularRestriction {
            s,
            t,
            detail: format!("restricted solve residual {residual:.3e} exceeds tolerance"),
        });
    }
    Ok(m)
}

/// Commutation and inverse identities of a compatible pair on a grid of
/// ordered pairs. A numerically singular restriction is reported as a
/// failed check rather than an error.
pub fn check_compatibility(
    pair: &CompatiblePair,
    pairs: &[(f64, f64)],
    tol: f64,
) -> Result<ValidationReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("compatibility pairs"));
    }
    let mut commutation = WorstCase::new();
    let mut right_inverse = WorstCase::new();
    let mut left_inverse = WorstCase::new();
    let mut transitivity = WorstCase::new();
    let mut singular: Option<String> = None;

    for &(t, s) in pairs {
        if !(t >= s && s >= 0.0) {
            return Err(Error::TimeOrder {
                context: "compatibility pair requires t >= s >= 0",
                t,
                s,
            });
        }
        let u_ts = pair.u(t, s)?;
        let p_t = pair.proj(t);
        let p_s = pair.proj(s);
        let q_t = pair.comp(t);
        let q_s = pair.comp(s);

        commutation.observe(relative_frobenius(&(&p_t * &u_ts), &(&u_ts * &p_s)), || {
            format!("(t, s) = ({t}, {s})")
        });

        let m = match pair.uq(s, t) {
            Ok(m) => m,
            Err(Error::SingularRestriction { detail, .. }) => {
                if singular.is_none() {
                    singular = Some(format!("(t, s) = ({t}, {s}): {detail}"));
                }
                continue;
            }
            Err(e) => return Err(e),
        };

        right_inverse.observe(relative_frobenius(&(&u_ts * &m), &q_t), || {
            format!("(t, s) = ({t}, {s})")
        });
        left_inverse.observe(relative_frobenius(&(&m * &u_ts * &q_s), &q_s), || {
            format!("(t, s) = ({t}, {s})")
        });

        if t > s {
            let mid = 0.5 * (t + s);
            let chained = pair.uq(s, mid)? * pair.uq(mid, t)?;
            transitivity.observe(relative_frobenius(&chained, &m), || {
                format!("(t, mid, s) = ({t}, {mid}, {s})")
            });
        }
    }

    let mut report = ValidationReport::new();
    report.push(commutation.into_check("commutation", tol));
    report.push(right_inverse.into_check("inverse_on_complement", tol));
    report.push(left_inverse.into_check("inverse_from_complement", tol));
    report.push(transitivity.into_check("inverse_transitivity", tol));
    if let Some(detail) = singular {
        report.push(Check::new("restriction_invertible", false, f64::INFINITY).detail(detail));
    } else {
        report.push(Check::new("restriction_invertible", true, 0.0));
    }
    Ok(report)
}
