//! Ball energies of rotationally symmetric fields on model manifolds,
//! monotonicity experiments, the Stokes integral identity, the unit-sphere
//! boundary condition, and a growth classifier for slowly divergent
//! energies.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exterior::{radial_boundary_term, stress_energy, PointForm};
use crate::fields::{conservation_residual, div_stress, GridField};
use crate::fprofile::FProfile;
use crate::geometry::{CurvatureRegime, ExponentKind, RadialManifold};
use crate::quad::{adaptive_simpson, integrate, pairwise_sum, unit_sphere_area};

/// Radial quadrature starts here instead of at the pole.
pub const R_START: f64 = 1e-8;
/// Relative tolerance of the radial quadrature.
pub const ENERGY_TOL: f64 = 1e-8;
/// Multiplicative slack allowed when comparing consecutive ratios.
pub const RATIO_SLACK: f64 = 1e-8;

type Amplitude = Arc<dyn Fn(f64) -> PointForm + Send + Sync>;

/// A field whose coefficients in the adapted frame `{e_1, .., e_{m-1},
/// d/dr}` depend on `r` only.
#[derive(Clone)]
pub struct RadialField {
    man: RadialManifold,
    p: usize,
    k: usize,
    name: String,
    amplitude: Amplitude,
}

impl fmt::Debug for RadialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialField")
            .field("man", &self.man)
            .field("p", &self.p)
            .field("k", &self.k)
            .field("name", &self.name)
            .finish()
    }
}

impl RadialField {
    pub fn new<A>(man: RadialManifold, p: usize, k: usize, name: &str, amplitude: A) -> Result<Self>
    where
        A: Fn(f64) -> PointForm + Send + Sync + 'static,
    {
        let probe = amplitude(1.0);
        if probe.shape() != (man.m(), p, k) {
            return Err(Error::ShapeMismatch(format!(
                "amplitude has shape {:?}, expected {:?}",
                probe.shape(),
                (man.m(), p, k)
            )));
        }
        Ok(RadialField { man, p, k, name: name.to_string(), amplitude: Arc::new(amplitude) })
    }

    /// `|w| = 1` along the first tangential direction; the frame picture of
    /// `du` for `u = x^1`, whose energy density is constant.
    pub fn tangential_unit(man: RadialManifold) -> Result<Self> {
        Self::tangential(man, "tangential-unit", |_| 1.0)
    }

    /// `a(r) e^1`.
    pub fn tangential<A>(man: RadialManifold, name: &str, a: A) -> Result<Self>
    where
        A: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let m = man.m();
        Self::new(man, 1, 1, name, move |r| PointForm::basis(m, &[0]).expect("m >= 2").scale(a(r)))
    }

    /// `a(r) dr`.
    pub fn radial<A>(man: RadialManifold, name: &str, a: A) -> Result<Self>
    where
        A: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let m = man.m();
        Self::new(man, 1, 1, name, move |r| PointForm::basis(m, &[m - 1]).expect("m >= 2").scale(a(r)))
    }

    /// The parallel identity endomorphism `w(e_i) = e_i`, an `R^m`-valued
    /// 1-form with `w . w = g` and `|w|^2 = m`. Its stress tensor is a
    /// constant multiple of `g`, so it is conservative for every profile.
    pub fn parallel_identity(man: RadialManifold) -> Result<Self> {
        let m = man.m();
        Self::new(man, 1, m, "parallel-identity", move |_| {
            let mut w = PointForm::zeros(m, 1, m).expect("m within limits");
            for i in 0..m {
                w.coeffs_mut()[i * m + i] = 1.0;
            }
            w
        })
    }

    pub fn zero(man: RadialManifold, p: usize, k: usize) -> Result<Self> {
        let m = man.m();
        PointForm::zeros(m, p, k)?;
        Self::new(man, p, k, "zero", move |_| PointForm::zeros(m, p, k).expect("checked"))
    }

    pub fn manifold(&self) -> &RadialManifold {
        &self.man
    }
    pub fn p(&self) -> usize {
        self.p
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn form_at(&self, r: f64) -> PointForm {
        (self.amplitude)(r)
    }
}

fn density(fld: &RadialField, profile: &FProfile, r: f64) -> Result<f64> {
    let t = 0.5 * fld.form_at(r).norm_sq();
    Ok(profile.value(t)? * fld.man.volume_density(r))
}

/// `vol(S^{m-1}) int_a^b F(|w|^2/2) f^{m-1} dr`.
pub fn annulus_energy(fld: &RadialField, profile: &FProfile, a: f64, b: f64) -> Result<f64> {
    if !(b > a && a >= 0.0) {
        return Err(Error::InvalidParameter(format!("need 0 <= a < b, got [{a}, {b}]")));
    }
    if b >= fld.man.r_max() {
        return Err(Error::OutOfRegimeRange { r: b });
    }
    let area = unit_sphere_area(fld.man.m());
    let lo = a.max(R_START);
    if lo >= b {
        return Ok(0.0);
    }
    let v = adaptive_simpson(|r| density(fld, profile, r), lo, b, ENERGY_TOL)?;
    Ok(area * v)
}

/// Energy of the geodesic ball `B_rho` about the pole.
pub fn ball_energy(fld: &RadialField, profile: &FProfile, rho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {rho}")));
    }
    annulus_energy(fld, profile, 0.0, rho)
}

/// `d/drho E(rho)` by the coarea formula: the energy density integrated
/// over the sphere of radius `rho`.
pub fn sphere_energy(fld: &RadialField, profile: &FProfile, rho: f64) -> Result<f64> {
    Ok(unit_sphere_area(fld.man.m()) * density(fld, profile, rho)?)
}

/// Evidence that the field obeys the conservation law.
#[derive(Debug, Clone)]
pub enum ConservationCertificate {
    /// The caller vouches for exact conservation (e.g. a parallel field).
    Asserted,
    /// A grid sampling of the field; it must pass the residual pre-check.
    Sampled(GridField),
}

/// `10 h^2 max|w|^2`, the pre-check threshold for a sampled field.
pub fn precheck_threshold(sample: &GridField) -> f64 {
    let scale = sample.norm_sq().into_iter().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let h = sample.spec().max_h();
    10.0 * h * h * scale
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub radii: Vec<f64>,
    pub energies: Vec<f64>,
    /// `E(rho) / rho^exponent`.
    pub ratios: Vec<f64>,
    /// Coarea derivative `dE/drho`.
    pub de_drho: Vec<f64>,
    /// `lambda` for ball ratios, `1 + delta` for annulus ratios.
    pub exponent: f64,
    pub kind: ExponentKind,
    pub monotone: bool,
    /// Largest relative drop between consecutive ratios (0 if none).
    pub worst_violation: f64,
    /// `rho E' >= exponent E` at every radius.
    pub differential_ok: bool,
    /// Radii at which `E = 0`, where the ratio test says nothing.
    pub zero_energy: Vec<bool>,
    pub precheck: Option<(f64, f64)>,
}

fn check_regime(man: &RadialManifold, regime: &CurvatureRegime, radii: &[f64]) -> Result<()> {
    let r_hi = radii[radii.len() - 1];
    let lo = regime.min_radius().max(1e-3);
    let samples = (0..=64).map(|i| lo + (r_hi - lo) * i as f64 / 64.0).chain(radii.iter().copied());
    for r in samples {
        if r < regime.min_radius() || r <= 0.0 {
            continue;
        }
        let k = man.radial_curvature(r);
        let (a, b) = regime.curvature_band(r);
        let tol = 1e-10 * (1.0 + a.abs().max(b.abs()));
        if !(k >= a - tol && k <= b + tol) {
            return Err(Error::RegimeMismatch { r, k });
        }
    }
    Ok(())
}

/// Energies and ratios over `radii`, after checking that the exponent is
/// admissible, the manifold's curvature lies in the regime's band, and the
/// field passes the conservation pre-check. For the polynomial-decay regime
/// the energies are taken over `B_rho \ B_1` with exponent `1 + delta`.
pub fn monotonicity_experiment(
    fld: &RadialField,
    profile: &FProfile,
    regime: &CurvatureRegime,
    radii: &[f64],
    p: usize,
    certificate: &ConservationCertificate,
) -> Result<MonotonicityReport> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
        return Err(Error::InvalidParameter("radii must be positive and strictly increasing".into()));
    }
    let d_f = profile.f_degree().value;
    if !d_f.is_finite() {
        return Err(Error::InadmissibleExponent(format!("profile {} has infinite degree", profile.name())));
    }
    let m = fld.man.m();
    let ex = regime.exponent_data(m, p, d_f)?;
    if !ex.admissible {
        return Err(Error::InadmissibleExponent(format!(
            "{} regime, m={m}, p={p}, d_F={d_f}: side value {}",
            regime.tag(),
            ex.side_value
        )));
    }
    let base = match ex.kind {
        ExponentKind::Lambda => 0.0,
        ExponentKind::Delta => 1.0,
    };
    if radii[0] <= base {
        return Err(Error::OutOfRegimeRange { r: radii[0] });
    }
    check_regime(&fld.man, regime, radii)?;
    let precheck = match certificate {
        ConservationCertificate::Asserted => None,
        ConservationCertificate::Sampled(g) => {
            let residual = conservation_residual(g, profile)?;
            let threshold = precheck_threshold(g);
            if residual > threshold {
                return Err(Error::ConservationPrecheckFailed { residual, threshold });
            }
            Some((residual, threshold))
        }
    };
    let rows: Result<Vec<(f64, f64)>> = radii
        .par_iter()
        .map(|&rho| Ok((annulus_energy(fld, profile, base, rho)?, sphere_energy(fld, profile, rho)?)))
        .collect();
    let (energies, de_drho): (Vec<f64>, Vec<f64>) = rows?.into_iter().unzip();
    let ratios: Vec<f64> = energies.iter().zip(radii).map(|(e, r)| e / r.powf(ex.exponent)).collect();
    let mut worst: f64 = 0.0;
    for w in ratios.windows(2) {
        if w[0] > 0.0 {
            worst = worst.max((w[0] - w[1]) / w[0]);
        }
    }
    let monotone = ratios.windows(2).all(|w| w[1] >= w[0] * (1.0 - RATIO_SLACK));
    let differential_ok = radii
        .iter()
        .zip(&energies)
        .zip(&de_drho)
        .all(|((r, e), d)| r * d >= ex.exponent * e * (1.0 - RATIO_SLACK) - 1e-300);
    Ok(MonotonicityReport {
        radii: radii.to_vec(),
        zero_energy: energies.iter().map(|&e| e == 0.0).collect(),
        energies,
        ratios,
        de_drho,
        exponent: ex.exponent,
        kind: ex.kind,
        monotone,
        worst_violation: worst.max(0.0),
        differential_ok,
        precheck,
    })
}

/// Sign of the unit-sphere boundary integrand `F - F' |i_{d/dr} w|^2`,
/// which is constant on the sphere for rotationally symmetric fields.
pub fn boundary_condition_check(fld: &RadialField, profile: &FProfile) -> Result<bool> {
    let w = fld.form_at(1.0);
    Ok(radial_boundary_term(profile, &w, 1.0)? >= -1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesReport {
    /// `int_{dD} S(X, nu)`.
    pub lhs: f64,
    /// `int_D <S, g> + (div S)(X)`.
    pub rhs: f64,
    pub rel_err: f64,
}

/// Boundary-versus-volume form of the stress-tensor identity for the
/// position field `X`, on the node box `lo..=hi`. Requires at least two
/// nodes between the box and the grid boundary.
pub fn stokes_identity_check(fld: &GridField, profile: &FProfile, lo: &[usize], hi: &[usize]) -> Result<StokesReport> {
    let spec = fld.spec();
    let m = spec.m();
    if lo.len() != m || hi.len() != m {
        return Err(Error::ShapeMismatch("box corners must have one index per axis".into()));
    }
    for a in 0..m {
        if lo[a] < 2 || hi[a] + 2 >= spec.n(a) || hi[a] < lo[a] + 2 {
            return Err(Error::InvalidParameter(format!(
                "box [{}, {}] on axis {a} is not strictly interior",
                lo[a], hi[a]
            )));
        }
    }
    let div = div_stress(fld, profile)?;
    let in_box = |multi: &[usize]| multi.iter().zip(lo.iter().zip(hi)).all(|(&i, (&l, &h))| i >= l && i <= h);
    let weight = |multi: &[usize], skip: Option<usize>| -> f64 {
        (0..m)
            .filter(|&a| Some(a) != skip)
            .map(|a| {
                let h = spec.h(a);
                if multi[a] == lo[a] || multi[a] == hi[a] {
                    0.5 * h
                } else {
                    h
                }
            })
            .product()
    };
    let nodes: Vec<usize> = (0..spec.len()).filter(|&n| in_box(&spec.multi(n))).collect();
    let terms: Result<Vec<(f64, f64, f64)>> = nodes
        .par_iter()
        .map(|&node| {
            let multi = spec.multi(node);
            let x = spec.point(node);
            let s = stress_energy(profile, &fld.form_at(node))?;
            let dv = div.node(node);
            let vol = weight(&multi, None) * (s.trace() + (0..m).map(|j| dv[j] * x[j]).sum::<f64>());
            let mut bnd = 0.0;
            let mut bnd_abs = 0.0;
            for a in 0..m {
                let sign = if multi[a] == hi[a] {
                    1.0
                } else if multi[a] == lo[a] {
                    -1.0
                } else {
                    continue;
                };
                let sxn: f64 = (0..m).map(|b| s.get(b, a) * x[b]).sum::<f64>() * sign;
                let w = weight(&multi, Some(a));
                bnd += w * sxn;
                bnd_abs += w * sxn.abs();
            }
            Ok((vol, bnd, bnd_abs))
        })
        .collect();
    let terms = terms?;
    let rhs = pairwise_sum(&terms.iter().map(|t| t.0).collect::<Vec<_>>());
    let lhs = pairwise_sum(&terms.iter().map(|t| t.1).collect::<Vec<_>>());
    let scale = pairwise_sum(&terms.iter().map(|t| t.2).collect::<Vec<_>>());
    let denom = lhs.abs().max(rhs.abs()).max(scale);
    let rel_err = if denom == 0.0 { 0.0 } else { (lhs - rhs).abs() / denom };
    Ok(StokesReport { lhs, rhs, rel_err })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Divergence {
    Diverging,
    Converging,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthVerdict {
    /// Whether `int dr / (r psi(r))` diverges.
    pub psi_divergence: Divergence,
    /// Ratio of the integral over `ln r in [70, 700]` to that over `[7, 70]`.
    pub psi_increment_ratio: f64,
    /// Whether the running sum of `dE / psi` levels off.
    pub energy_over_psi_bounded: bool,
    /// Whether `E / rho^lambda` is nonincreasing over the last decade.
    pub little_o_lambda: bool,
}

/// Heuristic classification of sampled energy growth against a weight
/// `psi`. The divergence test integrates `ds / psi(e^s)` over successive
/// decades of `s = ln r` (that is `dr / (r psi)`) and calls the integral
/// divergent when the later decade contributes at least half as much as the
/// earlier one.
pub fn growth_classify<P>(samples: &[(f64, f64)], psi: P, lambda: f64) -> Result<GrowthVerdict>
where
    P: Fn(f64) -> f64,
{
    if samples.len() < 2 || samples.windows(2).any(|w| !(w[1].0 > w[0].0)) || !(samples[0].0 > 0.0) {
        return Err(Error::InvalidParameter("samples must have increasing positive radii".into()));
    }
    let (r0, r1) = (samples[0].0, samples[samples.len() - 1].0);
    if r1 / r0 < 1e3 * (1.0 - 1e-12) {
        return Err(Error::SpanTooShort);
    }
    let over_log = |s: f64| 1.0 / psi(s.exp());
    let early = integrate(over_log, 7.0, 70.0, 1e-10);
    let late = integrate(over_log, 70.0, 700.0, 1e-10);
    let ratio = late / early;
    let psi_divergence = if ratio >= 0.5 { Divergence::Diverging } else { Divergence::Converging };

    // Running Stieltjes sum of dE / psi.
    let mut running = vec![0.0; samples.len()];
    for i in 1..samples.len() {
        let de = samples[i].1 - samples[i - 1].1;
        running[i] = running[i - 1] + de / psi(samples[i].0);
    }
    // Compare the increments over two adjacent windows in s = ln r: halves
    // of [s_hi/4, s_hi] when the samples reach that far down, thirds of the
    // sampled span otherwise.
    let at = |s: f64| -> f64 {
        let i = samples.iter().position(|x| x.0.ln() >= s).unwrap_or(samples.len() - 1);
        running[i]
    };
    let (s_lo, s_hi) = (r0.ln(), r1.ln());
    let (a, b) = if s_hi > 0.0 && s_hi / 4.0 >= s_lo {
        (s_hi / 4.0, s_hi / 2.0)
    } else {
        let w = (s_hi - s_lo) / 3.0;
        (s_hi - 2.0 * w, s_hi - w)
    };
    let total = running[samples.len() - 1];
    let last = total - at(b);
    let prev = at(b) - at(a);
    let energy_over_psi_bounded = last.abs() <= 0.75 * prev.abs() || last.abs() <= 1e-12 * (1.0 + total.abs());

    let tail: Vec<f64> =
        samples.iter().filter(|s| s.0 >= r1 / 10.0 * (1.0 - 1e-12)).map(|s| s.1 / s.0.powf(lambda)).collect();
    let little_o_lambda = tail.len() >= 2 && tail.windows(2).all(|w| w[1] <= w[0]) && tail[tail.len() - 1] < tail[0];
    Ok(GrowthVerdict { psi_divergence, psi_increment_ratio: ratio, energy_over_psi_bounded, little_o_lambda })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::GridSpec;
    use std::f64::consts::PI;

    #[test]
    fn zero_field_has_zero_energy() {
        let man = RadialManifold::euclidean(3).unwrap();
        let z = RadialField::zero(man, 2, 1).unwrap();
        assert_eq!(ball_energy(&z, &FProfile::bi_plus(), 3.0).unwrap(), 0.0);
    }

    #[test]
    fn euclidean_constant_density() {
        let man = RadialManifold::euclidean(4).unwrap();
        let f = RadialField::tangential_unit(man).unwrap();
        for rho in [0.5, 1.0, 3.0] {
            let e = ball_energy(&f, &FProfile::identity(), rho).unwrap();
            let exact = PI * PI * rho.powi(4) / 4.0;
            assert!((e - exact).abs() <= 1e-8 * exact, "{e} vs {exact}");
        }
    }

    #[test]
    fn hyperbolic_sech_energy_matches_reference() {
        let man = RadialManifold::hyperbolic(3, 1.0).unwrap();
        let f = RadialField::tangential(man, "sech", |r| 1.0 / r.cosh()).unwrap();
        let e1 = ball_energy(&f, &FProfile::identity(), 1.0).unwrap();
        let e2 = ball_energy(&f, &FProfile::identity(), 2.0).unwrap();
        assert!((e1 - 1.497_948_096_444_486).abs() < 1e-7);
        assert!((e2 - 6.509_206_687_510_908).abs() < 1e-7);
    }

    #[test]
    fn coarea_derivative() {
        let man = RadialManifold::hyperbolic(3, 0.5).unwrap();
        let f = RadialField::tangential(man, "decay", |r| (-r).exp()).unwrap();
        let prof = FProfile::bi_plus();
        let (rho, h) = (1.3, 1e-4);
        let num = (ball_energy(&f, &prof, rho + h).unwrap() - ball_energy(&f, &prof, rho - h).unwrap()) / (2.0 * h);
        let exact = sphere_energy(&f, &prof, rho).unwrap();
        assert!((num - exact).abs() < 1e-5 * exact);
    }

    #[test]
    fn euclidean_monotonicity_preset() {
        let man = RadialManifold::euclidean(4).unwrap();
        let f = RadialField::tangential_unit(man).unwrap();
        let radii: Vec<f64> = (0..50).map(|i| 0.1 * 100f64.powf(i as f64 / 49.0)).collect();
        let rep = monotonicity_experiment(
            &f,
            &FProfile::identity(),
            &CurvatureRegime::flat(),
            &radii,
            1,
            &ConservationCertificate::Asserted,
        )
        .unwrap();
        assert_eq!(rep.exponent, 2.0);
        assert!(rep.monotone && rep.differential_ok);
        assert_eq!(rep.worst_violation, 0.0);
    }

    #[test]
    fn zero_field_is_trivially_monotone() {
        let man = RadialManifold::euclidean(4).unwrap();
        let f = RadialField::zero(man, 1, 1).unwrap();
        let rep = monotonicity_experiment(
            &f,
            &FProfile::identity(),
            &CurvatureRegime::flat(),
            &[1.0, 2.0, 3.0],
            1,
            &ConservationCertificate::Asserted,
        )
        .unwrap();
        assert!(rep.monotone && rep.ratios.iter().all(|&r| r == 0.0));
        assert!(rep.zero_energy.iter().all(|&z| z));
    }

    #[test]
    fn precheck_rejects_cubic_sampling() {
        let man = RadialManifold::euclidean(2).unwrap();
        let f = RadialField::tangential_unit(man).unwrap();
        let spec = GridSpec::cube(2, -1.0, 1.0, 65).unwrap();
        let sample = GridField::scalar(spec, |x| x[0].powi(3)).exterior_d().unwrap();
        let err = monotonicity_experiment(
            &f,
            &FProfile::power(1.5).unwrap(),
            &CurvatureRegime::flat(),
            &[1.0, 2.0],
            1,
            &ConservationCertificate::Sampled(sample),
        );
        assert!(matches!(err, Err(Error::ConservationPrecheckFailed { .. })), "{err:?}");
    }

    #[test]
    fn regime_and_exponent_guards() {
        let hyp = RadialManifold::hyperbolic(5, 1.0).unwrap();
        let f = RadialField::parallel_identity(hyp.clone()).unwrap();
        let flat = monotonicity_experiment(
            &f,
            &FProfile::identity(),
            &CurvatureRegime::flat(),
            &[1.0, 2.0],
            1,
            &ConservationCertificate::Asserted,
        );
        assert!(matches!(flat, Err(Error::RegimeMismatch { .. })));
        let inf = monotonicity_experiment(
            &f,
            &FProfile::bi_minus(),
            &CurvatureRegime::pinched_neg(1.0, 1.0).unwrap(),
            &[1.0, 2.0],
            1,
            &ConservationCertificate::Asserted,
        );
        assert!(matches!(inf, Err(Error::InadmissibleExponent(_))));
        let rep = monotonicity_experiment(
            &f,
            &FProfile::identity(),
            &CurvatureRegime::pinched_neg(1.0, 1.0).unwrap(),
            &[0.5, 1.0, 2.0, 4.0],
            1,
            &ConservationCertificate::Asserted,
        )
        .unwrap();
        assert_eq!(rep.exponent, 3.0);
        assert!(rep.monotone && rep.differential_ok);
    }

    #[test]
    fn boundary_condition_examples() {
        let man = RadialManifold::euclidean(3).unwrap();
        let tang = RadialField::tangential_unit(man.clone()).unwrap();
        assert!(boundary_condition_check(&tang, &FProfile::identity()).unwrap());
        let rad = RadialField::radial(man, "dr", |_| 1.0).unwrap();
        assert!(!boundary_condition_check(&rad, &FProfile::identity()).unwrap());
        assert!(!boundary_condition_check(&rad, &FProfile::bi_plus()).unwrap());
    }

    #[test]
    fn stokes_zero_and_harmonic() {
        let spec = GridSpec::cube(3, -0.25, 1.25, 25).unwrap();
        let z = GridField::zeros(spec.clone(), 1, 1).unwrap();
        let rep = stokes_identity_check(&z, &FProfile::identity(), &[4, 4, 4], &[20, 20, 20]).unwrap();
        assert_eq!((rep.lhs, rep.rhs, rep.rel_err), (0.0, 0.0, 0.0));
        let w = GridField::scalar(spec, |x| x[0] * x[0] - x[1] * x[1] + x[0] * x[2]).exterior_d().unwrap();
        let rep = stokes_identity_check(&w, &FProfile::identity(), &[4, 4, 4], &[20, 20, 20]).unwrap();
        assert!(rep.rel_err < 1e-2, "{rep:?}");
        assert!(stokes_identity_check(&w, &FProfile::identity(), &[1, 4, 4], &[20, 20, 20]).is_err());
    }

    #[test]
    fn growth_examples() {
        let samples: Vec<(f64, f64)> = (0..=60)
            .map(|i| {
                let r = 10f64.powf(1.0 + i as f64 / 10.0);
                (r, r.ln())
            })
            .collect();
        let v1 = growth_classify(&samples, |r: f64| r.ln(), 0.5).unwrap();
        assert_eq!(v1.psi_divergence, Divergence::Diverging);
        assert!(v1.little_o_lambda);
        let v2 = growth_classify(&samples, |r: f64| r.ln().powi(2), 0.5).unwrap();
        assert_eq!(v2.psi_divergence, Divergence::Converging);
        assert!(v2.energy_over_psi_bounded);
        assert!(growth_classify(&samples[..15], |r: f64| r.ln(), 0.5) == Err(Error::SpanTooShort));
        let grow: Vec<(f64, f64)> = samples.iter().map(|&(r, _)| (r, r)).collect();
        assert!(!growth_classify(&grow, |_| 1.0, 0.5).unwrap().little_o_lambda);
    }
}
