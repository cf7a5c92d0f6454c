use fenergy::born_infeld::{solve_radial, Sign};
use fenergy::energy::{ball_energy, sphere_energy};
use fenergy::exterior::{double_contract, stress_energy, PointForm};
use fenergy::{FProfile, GridField, GridSpec, RadialField, RadialManifold};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn form(m: usize, p: usize, k: usize, seed: u64, scale: f64) -> PointForm {
    PointForm::random(m, p, k, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap().scale(scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bi_ratios_stay_in_their_bands(u in 0.0f64..0.999) {
        let plus = FProfile::bi_plus();
        let minus = FProfile::bi_minus();
        let r = plus.degree_ratio(u * 50.0).unwrap();
        prop_assert!((0.5..=1.0 + 1e-12).contains(&r));
        let r = minus.degree_ratio(u * minus.cap()).unwrap();
        prop_assert!(r >= 1.0 - 1e-12);
    }

    #[test]
    fn stress_trace(m in 2usize..=4, seed in 0u64..1000, scale in 0.1f64..0.6) {
        let p = 1 + (seed as usize) % (m - 1);
        let w = form(m, p, 1, seed, scale);
        for prof in [FProfile::identity(), FProfile::bi_plus(), FProfile::exp_minus_one()] {
            let t = 0.5 * w.norm_sq();
            let (f, df) = prof.eval(t).unwrap();
            let tr = stress_energy(&prof, &w).unwrap().trace();
            let want = m as f64 * f - df * double_contract(&w).unwrap().trace();
            prop_assert!((tr - want).abs() <= 1e-12 * (1.0 + want.abs()), "{} {} {}", prof.name(), tr, want);
        }
    }

    #[test]
    fn double_star_sign(m in 2usize..=4, seed in 0u64..1000) {
        let p = (seed as usize) % (m + 1);
        let w = form(m, p, 2, seed, 1.0);
        let back = w.hodge_star().unwrap().hodge_star().unwrap();
        let s = if (p * (m - p)).is_multiple_of(2) { 1.0 } else { -1.0 };
        for (a, b) in back.coeffs().iter().zip(w.coeffs()) {
            prop_assert!((a - s * b).abs() < 1e-14);
        }
    }

    #[test]
    fn radial_first_integral_is_conserved(c in 0.2f64..2.0, m in 2usize..=4) {
        for sign in [Sign::Plus, Sign::Minus] {
            let a = 1.2 * c.powf(1.0 / (m as f64 - 1.0));
            let s = solve_radial(m, sign, c, (a, a + 3.0), 256).unwrap();
            prop_assert!(s.max_first_integral_residual() < 1e-10);
        }
    }
}

#[test]
fn coarea_derivative_matches_ball_energy() {
    let man = RadialManifold::hyperbolic(3, 1.0).unwrap();
    let fld = RadialField::tangential(man, "sech", |r: f64| 1.0 / r.cosh()).unwrap();
    let prof = FProfile::bi_plus();
    for rho in [0.5, 1.0, 2.0] {
        let h = 1e-4;
        let fd = (ball_energy(&fld, &prof, rho + h).unwrap() - ball_energy(&fld, &prof, rho - h).unwrap()) / (2.0 * h);
        let s = sphere_energy(&fld, &prof, rho).unwrap();
        assert!((fd - s).abs() < 1e-6 * s, "{fd} {s}");
    }
}

#[test]
fn grid_csv_roundtrip() {
    let spec = GridSpec::cube(2, -1.0, 1.0, 9).unwrap();
    let w = GridField::from_fn(spec, 1, 2, |x| vec![x[0], x[1] * 0.3, -x[0] * x[1], 1.0 / 3.0]).unwrap();
    let back = GridField::from_csv(&w.to_csv()).unwrap();
    assert_eq!(back.data(), w.data());
    assert_eq!((back.p(), back.k(), back.m()), (1, 2, 2));
}
