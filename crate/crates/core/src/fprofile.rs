//! Energy-density profiles `F` and their degree invariants.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Fraction of `cap` inside which evaluation is refused.
const CAP_GUARD: f64 = 1e-9;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Identity,
    Power(f64),
    BiPlus,
    BiMinus,
    ExpMinusOne,
    Custom { f: ScalarFn, df: ScalarFn },
}

/// A strictly increasing `C^2` profile with `F(0) = 0`, defined on `[0, cap)`.
#[derive(Clone)]
pub struct FProfile {
    name: String,
    kind: Kind,
    cap: f64,
    closed_form: Option<(f64, f64)>,
}

impl fmt::Debug for FProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FProfile")
            .field("name", &self.name)
            .field("cap", &self.cap)
            .field("closed_form", &self.closed_form)
            .finish()
    }
}

/// A degree value together with where it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Degree {
    pub value: f64,
    /// False when the value is a sampled estimate.
    pub closed_form: bool,
}

impl Degree {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

impl FProfile {
    pub fn identity() -> Self {
        FProfile { name: "identity".into(), kind: Kind::Identity, cap: f64::INFINITY, closed_form: Some((1.0, 1.0)) }
    }

    /// `F(t) = (2t)^{p/2} / p`, the p-energy density.
    pub fn power(p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("p-power needs p >= 1, got {p}")));
        }
        Ok(FProfile {
            name: format!("p-power({p})"),
            kind: Kind::Power(p),
            cap: f64::INFINITY,
            closed_form: Some((p / 2.0, p / 2.0)),
        })
    }

    /// `F(t) = sqrt(1 + 2t) - 1`.
    pub fn bi_plus() -> Self {
        FProfile { name: "bi-plus".into(), kind: Kind::BiPlus, cap: f64::INFINITY, closed_form: Some((1.0, 0.5)) }
    }

    /// `F(t) = 1 - sqrt(1 - 2t)` on `[0, 1/2)`.
    pub fn bi_minus() -> Self {
        FProfile { name: "bi-minus".into(), kind: Kind::BiMinus, cap: 0.5, closed_form: Some((f64::INFINITY, 1.0)) }
    }

    /// `F(t) = e^t - 1`.
    pub fn exp_minus_one() -> Self {
        FProfile {
            name: "exp-minus-one".into(),
            kind: Kind::ExpMinusOne,
            cap: f64::INFINITY,
            closed_form: Some((f64::INFINITY, 1.0)),
        }
    }

    /// A user profile. The derivative must be supplied; degrees are
    /// estimated by sampling.
    pub fn custom<F, D>(name: &str, f: F, df: D, cap: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(cap > 0.0) {
            return Err(Error::InvalidParameter(format!("cap must be positive, got {cap}")));
        }
        let f0 = f(0.0);
        if !(f0.abs() <= 1e-12) {
            return Err(Error::InvalidParameter(format!("F(0) = {f0}, expected 0")));
        }
        let prof = FProfile {
            name: name.to_string(),
            kind: Kind::Custom { f: Arc::new(f), df: Arc::new(df) },
            cap,
            closed_form: None,
        };
        for t in log_grid(cap, 64) {
            let d = prof.deriv_raw(t);
            if !(d > 0.0) {
                return Err(Error::InvalidParameter(format!("F' must be positive, got {d} at t = {t}")));
            }
        }
        Ok(prof)
    }

    /// Look up a built-in by its identifier. `p` is only read by `p-power`.
    pub fn by_name(name: &str, p: Option<f64>) -> Result<Self> {
        match name {
            "identity" | "id" => Ok(Self::identity()),
            "p-power" | "power" => Self::power(p.unwrap_or(2.0)),
            "bi-plus" => Ok(Self::bi_plus()),
            "bi-minus" => Ok(Self::bi_minus()),
            "exp-minus-one" | "exp" => Ok(Self::exp_minus_one()),
            other => Err(Error::InvalidParameter(format!("unknown profile '{other}'"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn closed_form_degrees(&self) -> Option<(f64, f64)> {
        self.closed_form
    }

    fn check(&self, t: f64) -> Result<()> {
        let limit = if self.cap.is_finite() { self.cap * (1.0 - CAP_GUARD) } else { f64::INFINITY };
        if t >= 0.0 && t < limit {
            Ok(())
        } else {
            Err(Error::DomainExceeded { t, cap: self.cap })
        }
    }

    fn value_raw(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Identity => t,
            Kind::Power(p) => (2.0 * t).powf(p / 2.0) / p,
            Kind::BiPlus => 2.0 * t / ((1.0 + 2.0 * t).sqrt() + 1.0),
            Kind::BiMinus => 2.0 * t / (1.0 + (1.0 - 2.0 * t).sqrt()),
            Kind::ExpMinusOne => t.exp_m1(),
            Kind::Custom { f, .. } => f(t),
        }
    }

    fn deriv_raw(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Identity => 1.0,
            Kind::Power(p) => (2.0 * t).powf(p / 2.0 - 1.0),
            Kind::BiPlus => 1.0 / (1.0 + 2.0 * t).sqrt(),
            Kind::BiMinus => 1.0 / (1.0 - 2.0 * t).sqrt(),
            Kind::ExpMinusOne => t.exp(),
            Kind::Custom { df, .. } => df(t),
        }
    }

    /// `(F(t), F'(t))`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        self.check(t)?;
        Ok((self.value_raw(t), self.deriv_raw(t)))
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.value_raw(t))
    }

    pub fn deriv(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.deriv_raw(t))
    }

    /// `F''(t)` by differencing `F'`: central where the stencil fits in
    /// the domain, one-sided near 0 and near the cap. Relative step 1e-5.
    pub fn second_deriv(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        if let Kind::Identity = self.kind {
            return Ok(0.0);
        }
        let mut h = 1e-5 * t.abs().max(1e-3);
        if self.cap.is_finite() {
            h = h.min(0.25 * (self.cap * (1.0 - CAP_GUARD) - t));
        }
        if t - h >= 0.0 && self.check(t + h).is_ok() {
            Ok((self.deriv_raw(t + h) - self.deriv_raw(t - h)) / (2.0 * h))
        } else if t - h < 0.0 {
            let (d0, d1, d2) = (self.deriv_raw(t), self.deriv_raw(t + h), self.deriv_raw(t + 2.0 * h));
            Ok((-3.0 * d0 + 4.0 * d1 - d2) / (2.0 * h))
        } else {
            let (d0, d1, d2) = (self.deriv_raw(t), self.deriv_raw(t - h), self.deriv_raw(t - 2.0 * h));
            Ok((3.0 * d0 - 4.0 * d1 + d2) / (2.0 * h))
        }
    }

    /// `tF'(t)/F(t)`, the quantity whose sup and inf define the degrees.
    pub fn degree_ratio(&self, t: f64) -> Result<f64> {
        let (f, df) = self.eval(t)?;
        Ok(t * df / f)
    }

    /// `d_F = sup tF'/F`.
    pub fn f_degree(&self) -> Degree {
        match self.closed_form {
            Some((d, _)) => Degree { value: d, closed_form: true },
            None => Degree { value: self.numeric_degree_bounds(1024).0, closed_form: false },
        }
    }

    /// `l_F = inf tF'/F`.
    pub fn f_lower_degree(&self) -> Degree {
        match self.closed_form {
            Some((_, l)) => Degree { value: l, closed_form: true },
            None => Degree { value: self.numeric_degree_bounds(1024).1, closed_form: false },
        }
    }

    /// Sampled `(sup, inf)` of `tF'/F` over a log grid on
    /// `[1e-8, min(cap (1 - 1e-6), 1e8)]`. For an unbounded domain the
    /// large-`t` limit is also probed at `t = 1e16`, mirroring the small-`t`
    /// limit taken at the left end. Non-finite samples (overflow) are
    /// skipped.
    pub fn numeric_degree_bounds(&self, samples: usize) -> (f64, f64) {
        let samples = samples.max(16);
        let mut ts = log_grid(self.cap, samples);
        if self.cap.is_infinite() {
            ts.push(1e16);
        }
        let mut sup = f64::NEG_INFINITY;
        let mut inf = f64::INFINITY;
        for t in ts {
            let r = t * self.deriv_raw(t) / self.value_raw(t);
            if r.is_finite() {
                sup = sup.max(r);
                inf = inf.min(r);
            }
        }
        (sup, inf)
    }
}

/// Log-spaced sample points on `[1e-8, min(cap (1 - 1e-6), 1e8)]`.
pub fn log_grid(cap: f64, samples: usize) -> Vec<f64> {
    let lo: f64 = 1e-8;
    let hi = if cap.is_finite() { (cap * (1.0 - 1e-6)).min(1e8) } else { 1e8 };
    let (a, b) = (lo.ln(), hi.ln());
    let n = samples.max(2);
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_point_values() {
        assert_eq!(FProfile::identity().eval(2.0).unwrap(), (2.0, 1.0));
        let (f, d) = FProfile::bi_plus().eval(4.0).unwrap();
        assert!((f - 2.0).abs() < 1e-15 && (d - 1.0 / 3.0).abs() < 1e-15);
        let (f, d) = FProfile::bi_minus().eval(0.18).unwrap();
        assert!((f - 0.2).abs() < 1e-15 && (d - 1.25).abs() < 1e-14);
    }

    #[test]
    fn cap_is_enforced() {
        let bm = FProfile::bi_minus();
        assert!(matches!(bm.eval(0.5), Err(Error::DomainExceeded { .. })));
        assert!(bm.eval(0.5 * (1.0 - 1e-10)).is_err());
        assert!(bm.eval(0.5 * (1.0 - 1e-8)).is_ok());
        assert!(FProfile::identity().eval(-1e-3).is_err());
        assert!(FProfile::identity().eval(f64::NAN).is_err());
    }

    #[test]
    fn zero_at_origin() {
        for p in [
            FProfile::identity(),
            FProfile::power(3.0).unwrap(),
            FProfile::bi_plus(),
            FProfile::bi_minus(),
            FProfile::exp_minus_one(),
        ] {
            assert!(p.value(0.0).unwrap().abs() <= 1e-12, "{}", p.name());
        }
    }

    #[test]
    fn degrees() {
        assert_eq!(FProfile::bi_plus().f_degree().value, 1.0);
        assert_eq!(FProfile::bi_plus().f_lower_degree().value, 0.5);
        assert_eq!(FProfile::power(3.0).unwrap().f_degree().value, 1.5);
        assert!(FProfile::bi_minus().f_degree().value.is_infinite());
        assert_eq!(FProfile::bi_minus().f_lower_degree().value, 1.0);
        assert_eq!(FProfile::identity().f_degree().value, 1.0);
    }

    #[test]
    fn numeric_bounds_bracket_closed_forms() {
        let (s, i) = FProfile::bi_plus().numeric_degree_bounds(1024);
        assert!((1.0 - 1e-6..=1.0).contains(&s), "{s}");
        assert!((0.5..=0.5 + 1e-6).contains(&i), "{i}");
        assert_eq!(FProfile::identity().numeric_degree_bounds(64), (1.0, 1.0));
        let (s, _) = FProfile::exp_minus_one().numeric_degree_bounds(1024);
        assert!(s > 10.0);
        let (s, i) = FProfile::power(3.0).unwrap().numeric_degree_bounds(256);
        assert!((s - 1.5).abs() < 1e-12 && (i - 1.5).abs() < 1e-12);
        let (_, i) = FProfile::bi_minus().numeric_degree_bounds(1024);
        assert!((i - 1.0).abs() < 1e-6);
    }

    #[test]
    fn custom_profile_estimates_degrees() {
        let p = FProfile::custom("quad", |t| t * t + t, |t| 2.0 * t + 1.0, f64::INFINITY).unwrap();
        let d = p.f_degree();
        assert!(!d.closed_form);
        assert!((d.value - 2.0).abs() < 1e-6);
        assert!((p.f_lower_degree().value - 1.0).abs() < 1e-6);
        assert!(FProfile::custom("bad", |t| t + 1.0, |_| 1.0, 1.0).is_err());
        assert!(FProfile::custom("dec", |t| -t, |_| -1.0, 1.0).is_err());
    }

    #[test]
    fn second_derivative_by_differencing() {
        let bp = FProfile::bi_plus();
        let exact = -(1.0f64 + 2.0).powf(-1.5);
        assert!((bp.second_deriv(1.0).unwrap() - exact).abs() < 1e-8);
        let bm = FProfile::bi_minus();
        let t = 0.5 * (1.0 - 1e-7);
        assert!(bm.second_deriv(t).unwrap() > 0.0);
        assert!(bp.second_deriv(0.0).unwrap() < 0.0);
    }

    #[test]
    fn power_rejects_small_exponent() {
        assert!(FProfile::power(0.5).is_err());
        assert!(FProfile::by_name("nope", None).is_err());
    }
}
