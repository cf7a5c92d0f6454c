//! Rotationally symmetric model manifolds, Hessian comparison factors and
//! the vanishing exponents of the monotonicity formulae.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Warp {
    Euclidean,
    Hyperbolic(f64),
    Custom { f: ScalarFn, f1: ScalarFn, f2: ScalarFn },
}

/// `g = dr^2 + f(r)^2 g_{S^{m-1}}` with a pole at `r = 0`.
#[derive(Clone)]
pub struct RadialManifold {
    m: usize,
    warp: Warp,
    name: String,
    r_max: f64,
    pole_ok: bool,
}

impl fmt::Debug for RadialManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialManifold")
            .field("m", &self.m)
            .field("warp", &self.name)
            .field("r_max", &self.r_max)
            .field("pole_ok", &self.pole_ok)
            .finish()
    }
}

const POLE_R: f64 = 1e-6;
const POLE_TOL: f64 = 1e-4;

impl RadialManifold {
    pub fn euclidean(m: usize) -> Result<Self> {
        Self::build(m, Warp::Euclidean, "euclidean".into())
    }

    /// Constant curvature `-beta^2`, `f = sinh(beta r)/beta`.
    pub fn hyperbolic(m: usize, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        Self::build(m, Warp::Hyperbolic(beta), format!("hyperbolic({beta})"))
    }

    /// A user warp with analytic first and second derivatives.
    pub fn custom<F, F1, F2>(m: usize, name: &str, f: F, f1: F1, f2: F2) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        F1: Fn(f64) -> f64 + Send + Sync + 'static,
        F2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let warp = Warp::Custom { f: Arc::new(f), f1: Arc::new(f1), f2: Arc::new(f2) };
        Self::build(m, warp, name.to_string())
    }

    fn build(m: usize, warp: Warp, name: String) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter(format!("dimension must be >= 2, got {m}")));
        }
        let mut man = RadialManifold { m, warp, name, r_max: 1e6, pole_ok: true };
        let r = POLE_R;
        man.pole_ok = ((man.warp(r) / r) - 1.0).abs() <= POLE_TOL
            && (man.warp_d1(r) - 1.0).abs() <= POLE_TOL
            && man.warp(r) > 0.0;
        Ok(man)
    }

    pub fn with_r_max(mut self, r_max: f64) -> Self {
        self.r_max = r_max;
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn pole_ok(&self) -> bool {
        self.pole_ok
    }

    pub fn warp(&self, r: f64) -> f64 {
        match &self.warp {
            Warp::Euclidean => r,
            Warp::Hyperbolic(b) => (b * r).sinh() / b,
            Warp::Custom { f, .. } => f(r),
        }
    }

    pub fn warp_d1(&self, r: f64) -> f64 {
        match &self.warp {
            Warp::Euclidean => 1.0,
            Warp::Hyperbolic(b) => (b * r).cosh(),
            Warp::Custom { f1, .. } => f1(r),
        }
    }

    pub fn warp_d2(&self, r: f64) -> f64 {
        match &self.warp {
            Warp::Euclidean => 0.0,
            Warp::Hyperbolic(b) => b * (b * r).sinh(),
            Warp::Custom { f2, .. } => f2(r),
        }
    }

    /// `f(r)^{m-1}`, the volume density relative to the round sphere.
    pub fn volume_density(&self, r: f64) -> f64 {
        self.warp(r).powi(self.m as i32 - 1)
    }

    /// `h(r) = f'(r)/f(r)`, so that `Hess(r) = h(r) [g - dr (x) dr]`.
    pub fn hessian_factor(&self, r: f64) -> Result<f64> {
        if !self.pole_ok {
            return Err(Error::PoleViolation);
        }
        Ok(match &self.warp {
            Warp::Euclidean => 1.0 / r,
            Warp::Hyperbolic(b) => b / (b * r).tanh(),
            Warp::Custom { .. } => self.warp_d1(r) / self.warp(r),
        })
    }

    /// `K_r = -f''(r)/f(r)`.
    pub fn radial_curvature(&self, r: f64) -> f64 {
        match &self.warp {
            Warp::Euclidean => 0.0,
            Warp::Hyperbolic(b) => -b * b,
            Warp::Custom { .. } => -self.warp_d2(r) / self.warp(r),
        }
    }
}

/// Radial-curvature hypotheses under which Hessian comparison bounds are
/// available. Build through the constructors, which validate parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurvatureRegime {
    /// `-alpha^2 <= K_r <= -beta^2`.
    PinchedNeg { alpha: f64, beta: f64 },
    /// `K_r = 0`.
    Flat,
    /// `-A/(1+r^2)^{1+eps} <= K_r <= B/(1+r^2)^{1+eps}`.
    EpsDecay { a: f64, b: f64, eps: f64 },
    /// `-A r^{2q} <= K_r <= -B r^{2q}` for `r >= 1`.
    PolyNeg { a: f64, b: f64, q: f64, b0: f64 },
}

impl CurvatureRegime {
    pub fn pinched_neg(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(Error::InvalidParameter("need alpha > 0 and beta > 0".into()));
        }
        if beta > alpha {
            return Err(Error::InvalidParameter("need beta <= alpha".into()));
        }
        Ok(Self::PinchedNeg { alpha, beta })
    }

    pub fn flat() -> Self {
        Self::Flat
    }

    pub fn eps_decay(a: f64, b: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && a >= 0.0 && b >= 0.0 && b < 2.0 * eps) {
            return Err(Error::InvalidParameter("need eps > 0, A >= 0, 0 <= B < 2 eps".into()));
        }
        Ok(Self::EpsDecay { a, b, eps })
    }

    pub fn poly_neg(a: f64, b: f64, q: f64) -> Result<Self> {
        if !(b > 0.0 && a >= b && q > 0.0) {
            return Err(Error::InvalidParameter("need A >= B > 0 and q > 0".into()));
        }
        let half = (q + 1.0) / 2.0;
        let b0 = (-half + (b + half * half).sqrt()).min(1.0);
        Ok(Self::PolyNeg { a, b, q, b0 })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Self::PinchedNeg { .. } => "pinched-neg",
            Self::Flat => "flat",
            Self::EpsDecay { .. } => "eps-decay",
            Self::PolyNeg { .. } => "poly-neg",
        }
    }

    /// Smallest radius at which the regime's bounds apply.
    pub fn min_radius(&self) -> f64 {
        match self {
            Self::PolyNeg { .. } => 1.0,
            _ => 0.0,
        }
    }

    /// `(h1, h2)` with `h1 [g - dr dr] <= Hess(r) <= h2 [g - dr dr]`.
    pub fn comparison_bounds(&self, r: f64) -> Result<(f64, f64)> {
        if !(r > 0.0) {
            return Err(Error::OutOfRegimeRange { r });
        }
        Ok(match *self {
            Self::PinchedNeg { alpha, beta } => (beta / (beta * r).tanh(), alpha / (alpha * r).tanh()),
            Self::Flat => (1.0 / r, 1.0 / r),
            Self::EpsDecay { a, b, eps } => ((1.0 - b / (2.0 * eps)) / r, (a / (2.0 * eps)).exp() / r),
            Self::PolyNeg { a, q, b0, .. } => {
                if r < 1.0 {
                    return Err(Error::OutOfRegimeRange { r });
                }
                let sa = a.sqrt();
                (b0 * r.powf(q), sa / sa.tanh() * r.powf(q))
            }
        })
    }

    /// Admissible band `[lo, hi]` for the radial curvature at `r`.
    pub fn curvature_band(&self, r: f64) -> (f64, f64) {
        match *self {
            Self::PinchedNeg { alpha, beta } => (-alpha * alpha, -beta * beta),
            Self::Flat => (0.0, 0.0),
            Self::EpsDecay { a, b, eps } => {
                let w = (1.0 + r * r).powf(1.0 + eps);
                (-a / w, b / w)
            }
            Self::PolyNeg { a, b, q, .. } => (-a * r.powf(2.0 * q), -b * r.powf(2.0 * q)),
        }
    }

    /// `1 + (m-1) r h1 - 2 p d_F r h2`, the pointwise factor in front of
    /// `F` in the lower bound for the radial pairing.
    pub fn monotonicity_factor(&self, m: usize, p: usize, d_f: f64, r: f64) -> Result<f64> {
        let (h1, h2) = self.comparison_bounds(r)?;
        Ok(1.0 + (m as f64 - 1.0) * r * h1 - 2.0 * p as f64 * d_f * r * h2)
    }

    /// Exponent data without rejecting inadmissible parameters.
    pub fn exponent_data(&self, m: usize, p: usize, d_f: f64) -> Result<ExponentResult> {
        if m < 2 || p < 1 {
            return Err(Error::InvalidParameter(format!("need m >= 2 and p >= 1, got m={m}, p={p}")));
        }
        if !d_f.is_finite() {
            return Err(Error::Inadmissible { value: d_f });
        }
        let (mf, pf) = (m as f64, p as f64);
        Ok(match *self {
            Self::PinchedNeg { alpha, beta } => {
                let side = (mf - 1.0) * beta - 2.0 * pf * alpha * d_f;
                ExponentResult {
                    kind: ExponentKind::Lambda,
                    value: mf - 2.0 * pf * alpha / beta * d_f,
                    exponent: mf - 2.0 * pf * alpha / beta * d_f,
                    side_value: side,
                    admissible: side >= 0.0,
                }
            }
            Self::Flat => {
                let l = mf - 2.0 * pf * d_f;
                ExponentResult { kind: ExponentKind::Lambda, value: l, exponent: l, side_value: l, admissible: l > 0.0 }
            }
            Self::EpsDecay { a, b, eps } => {
                let l = mf - (mf - 1.0) * b / (2.0 * eps) - 2.0 * pf * (a / (2.0 * eps)).exp() * d_f;
                ExponentResult { kind: ExponentKind::Lambda, value: l, exponent: l, side_value: l, admissible: l > 0.0 }
            }
            Self::PolyNeg { a, b0, .. } => {
                let sa = a.sqrt();
                let delta = (mf - 1.0) * b0 - 2.0 * pf * d_f * sa / sa.tanh();
                ExponentResult {
                    kind: ExponentKind::Delta,
                    value: delta,
                    exponent: 1.0 + delta,
                    side_value: delta,
                    admissible: delta >= 0.0,
                }
            }
        })
    }

    /// The vanishing exponent, or `Inadmissible` when the side condition
    /// fails and the monotonicity statement does not apply.
    pub fn vanishing_exponent(&self, m: usize, p: usize, d_f: f64) -> Result<ExponentResult> {
        let e = self.exponent_data(m, p, d_f)?;
        if e.admissible {
            Ok(e)
        } else {
            Err(Error::Inadmissible { value: e.side_value })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentKind {
    /// Ball-ratio exponent `lambda` from the pole.
    Lambda,
    /// Annulus exponent `1 + delta` from base radius 1.
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentResult {
    pub kind: ExponentKind,
    /// `lambda` or `delta`.
    pub value: f64,
    /// Power of `rho` in the monotone ratio (`lambda` or `1 + delta`).
    pub exponent: f64,
    /// Quantity whose sign decides admissibility.
    pub side_value: f64,
    pub admissible: bool,
}
