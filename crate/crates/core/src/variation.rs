//! First-variation checks: a Richardson-extrapolated numerical derivative
//! of the energy along a compactly supported direction, against the
//! integral of the tension.

use rand::Rng;

use crate::error::{Error, Result};
use crate::fields::{form_energy, grid_inner, tension, GridField, GridSpec, TrigSeries};
use crate::fprofile::FProfile;

/// Variations must vanish on this many boundary layers.
pub const SUPPORT_MARGIN: usize = 3;

/// Base steps for the symmetric difference quotients.
pub const STEPS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

#[derive(Debug, Clone, PartialEq)]
pub struct VariationReport {
    /// Extrapolated `d/dt E(sigma + t eta)` at `t = 0`.
    pub lhs: f64,
    /// The claimed integral.
    pub rhs: f64,
    pub abs_err: f64,
    /// `|lhs - rhs| / max(1, |rhs|)`.
    pub rel_err: f64,
    pub step_sizes: Vec<f64>,
    /// Difference between the last two extrapolation levels plus a
    /// rounding allowance.
    pub extrapolation_error: f64,
    /// First-level extrapolant from the two largest steps.
    pub lhs_coarse: f64,
}

fn check_support(eta: &GridField) -> Result<()> {
    let spec = eta.spec();
    for node in 0..spec.len() {
        if !spec.is_interior(node, SUPPORT_MARGIN) && eta.node(node).iter().any(|&v| v != 0.0) {
            return Err(Error::SupportViolation);
        }
    }
    Ok(())
}

fn same_shape(a: &GridField, b: &GridField) -> Result<()> {
    if a.spec() != b.spec() || a.p() != b.p() || a.k() != b.k() {
        return Err(Error::ShapeMismatch("field and variation differ in grid, degree or fiber".into()));
    }
    Ok(())
}

fn energy_of(sigma: &GridField, eta: &GridField, t: f64, profile: &FProfile) -> Result<f64> {
    form_energy(&sigma.combine(1.0, eta, t)?.exterior_d()?, profile)
}

/// `d/dt E(sigma + t eta)|_0` against `-int <tau_F(sigma), eta>`.
pub fn first_variation_check(sigma: &GridField, eta: &GridField, profile: &FProfile) -> Result<VariationReport> {
    same_shape(sigma, eta)?;
    check_support(eta)?;
    let mut quotients = Vec::with_capacity(STEPS.len());
    let mut e_scale: f64 = 0.0;
    for &h in &STEPS {
        let ep = energy_of(sigma, eta, h, profile)?;
        let em = energy_of(sigma, eta, -h, profile)?;
        e_scale = e_scale.max(ep.abs()).max(em.abs());
        quotients.push((ep - em) / (2.0 * h));
    }
    let r1 = (4.0 * quotients[1] - quotients[0]) / 3.0;
    let r1b = (4.0 * quotients[2] - quotients[1]) / 3.0;
    let r2 = (16.0 * r1b - r1) / 15.0;
    let h_min = STEPS[STEPS.len() - 1];
    let extrapolation_error = (r2 - r1b).abs() + 8.0 * f64::EPSILON * (e_scale + 1.0) / h_min;
    let rhs = -grid_inner(&tension(sigma, profile)?, eta)?;
    let abs_err = (r2 - rhs).abs();
    Ok(VariationReport {
        lhs: r2,
        rhs,
        abs_err,
        rel_err: abs_err / rhs.abs().max(1.0),
        step_sizes: STEPS.to_vec(),
        extrapolation_error,
        lhs_coarse: r1,
    })
}

/// Abelian gauge version: `A`, `B` are connection 1-forms, the curvature is
/// `dA`, and the claimed derivative is `int <delta(F' dA), B>`.
pub fn ym_first_variation_check(a: &GridField, b: &GridField, profile: &FProfile) -> Result<VariationReport> {
    if a.p() != 1 || b.p() != 1 {
        return Err(Error::DegreeOutOfRange("connection forms must have degree 1".into()));
    }
    first_variation_check(a, b, profile)
}

/// Max-norm of `d(dA)` over interior nodes, using a fourth-order outer
/// derivative so that smooth fields leave a measurable `O(h^2)` trace,
/// quadratic fields leave none, and rough fields are exposed. In two
/// dimensions there are no 3-forms and the residual is 0.
pub fn bianchi_residual(a: &GridField) -> Result<f64> {
    if a.p() != 1 {
        return Err(Error::DegreeOutOfRange("connection forms must have degree 1".into()));
    }
    if a.m() < 3 {
        return Ok(0.0);
    }
    let r = a.exterior_d()?;
    Ok(r.exterior_d_order(4)?.max_interior_norm(3))
}

/// Product of `(1 - s^2)^3` bumps, one per axis, with `s = +-1` on the
/// `margin`-th node from each end. Exactly zero on the outer `margin + 1`
/// layers.
pub fn bump_weights(spec: &GridSpec, margin: usize) -> Vec<f64> {
    (0..spec.len())
        .map(|node| {
            spec.multi(node)
                .iter()
                .zip(spec.axes())
                .map(|(&i, ax)| {
                    let lo = margin as f64;
                    let hi = (ax.n - 1 - margin) as f64;
                    let s = (2.0 * i as f64 - lo - hi) / (hi - lo);
                    if s.abs() < 1.0 {
                        (1.0 - s * s).powi(3)
                    } else {
                        0.0
                    }
                })
                .product()
        })
        .collect()
}

/// A random smooth variation vanishing on the support margin.
pub fn random_variation<R: Rng>(spec: &GridSpec, p: usize, k: usize, rng: &mut R) -> Result<GridField> {
    let template = GridField::zeros(spec.clone(), p, k)?;
    let series: Vec<TrigSeries> = (0..template.ncomp()).map(|_| TrigSeries::random(spec.m(), 3, 3.0, rng)).collect();
    let raw = GridField::from_fn(spec.clone(), p, k, |x| series.iter().map(|s| s.eval(x)).collect())?;
    Ok(raw.scale_nodes(&bump_weights(spec, SUPPORT_MARGIN)))
}

/// A random smooth field of the given shape.
pub fn random_field<R: Rng>(spec: &GridSpec, p: usize, k: usize, rng: &mut R) -> Result<GridField> {
    let template = GridField::zeros(spec.clone(), p, k)?;
    let series: Vec<TrigSeries> = (0..template.ncomp()).map(|_| TrigSeries::random(spec.m(), 4, 2.5, rng)).collect();
    GridField::from_fn(spec.clone(), p, k, |x| series.iter().map(|s| s.eval(x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn square(n: usize) -> GridSpec {
        GridSpec::cube(2, -1.0, 1.0, n).unwrap()
    }

    #[test]
    fn critical_field_has_vanishing_variation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = square(41);
        let sigma = GridField::scalar(spec.clone(), |x| x[0] * x[0] - x[1] * x[1]);
        let eta = random_variation(&spec, 0, 1, &mut rng).unwrap();
        let rep = first_variation_check(&sigma, &eta, &FProfile::identity()).unwrap();
        assert!(rep.lhs.abs() < 1e-8 && rep.rhs.abs() < 1e-10, "{rep:?}");
    }

    #[test]
    fn cubic_with_bump() {
        let spec = square(64);
        let sigma = GridField::scalar(spec.clone(), |x| x[0].powi(3));
        let eta = GridField::scalar(spec.clone(), |x| 1.0 + x[0]).scale_nodes(&bump_weights(&spec, SUPPORT_MARGIN));
        let rep = first_variation_check(&sigma, &eta, &FProfile::identity()).unwrap();
        assert!(rep.rel_err <= 1e-3, "{rep:?}");
        assert!(rep.lhs.abs() > 1e-3);
    }

    #[test]
    fn random_bi_plus_variation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = square(64);
        let sigma = random_field(&spec, 0, 1, &mut rng).unwrap();
        let eta = random_variation(&spec, 0, 1, &mut rng).unwrap();
        let rep = first_variation_check(&sigma, &eta, &FProfile::bi_plus()).unwrap();
        assert!(rep.rel_err <= 1e-3, "{rep:?}");
        assert!((rep.lhs_coarse - rep.lhs).abs() <= 4.0 * rep.extrapolation_error.max(1e-12));
    }

    #[test]
    fn yang_mills_variation() {
        let spec = square(64);
        let a = GridField::from_fn(spec.clone(), 1, 1, |x| vec![x[1] * x[1], 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = random_variation(&spec, 1, 1, &mut rng).unwrap();
        for prof in [FProfile::identity(), FProfile::bi_plus()] {
            let rep = ym_first_variation_check(&a, &b, &prof).unwrap();
            assert!(rep.rel_err <= 1e-3, "{rep:?}");
        }
        let closed = GridField::from_fn(spec, 1, 1, |x| vec![2.0 * x[0], 0.0]).unwrap();
        let rep = ym_first_variation_check(&closed, &b, &FProfile::identity()).unwrap();
        assert!(rep.lhs.abs() < 1e-9 && rep.rhs.abs() < 1e-12);
    }

    #[test]
    fn support_is_enforced() {
        let spec = square(32);
        let sigma = GridField::scalar(spec.clone(), |x| x[0]);
        let eta = GridField::scalar(spec, |_| 1.0);
        assert_eq!(first_variation_check(&sigma, &eta, &FProfile::identity()), Err(Error::SupportViolation));
    }

    #[test]
    fn bianchi_levels() {
        let spec = |n| GridSpec::cube(3, 0.0, 1.0, n).unwrap();
        let quad = |n| {
            GridField::from_fn(spec(n), 1, 1, |x| vec![x[1] * x[2], x[0] * x[0] - x[2], x[0] * x[1] + x[2] * x[2]])
                .unwrap()
        };
        assert!(bianchi_residual(&quad(17)).unwrap() < 1e-10);
        let smooth = |n| {
            GridField::from_fn(spec(n), 1, 1, |x| {
                vec![(2.0 * x[1]).sin() * x[2].exp(), (x[0] * x[2]).cos(), (x[0] + 2.0 * x[1]).sin()]
            })
            .unwrap()
        };
        let (r1, r2) = (bianchi_residual(&smooth(17)).unwrap(), bianchi_residual(&smooth(33)).unwrap());
        assert!(r2 < r1 && (r1 / r2).log2() > 1.5, "{r1} {r2}");
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noisy = GridField::from_fn(spec(33), 1, 1, |_| vec![0.0; 3]).unwrap();
        let noise: Vec<f64> = (0..noisy.data().len()).map(|_| rng.gen_range(-1e-2..1e-2)).collect();
        let noisy = GridField::from_data(spec(33), 1, 1, noise).unwrap().combine(1.0, &smooth(33), 1.0).unwrap();
        let rn = bianchi_residual(&noisy).unwrap();
        assert!(rn > 100.0 * r2, "{rn} {r2}");
        let flat = GridField::from_fn(square(16), 1, 1, |x| vec![x[1], 0.0]).unwrap();
        assert_eq!(bianchi_residual(&flat).unwrap(), 0.0);
    }
}
