//! Fixtures shared by the criterion benches.

use fenergy::born_infeld::{solve_radial, Sign};
use fenergy::{FProfile, GridField, GridSpec, RadialField, RadialManifold};

/// Smooth R^2-valued 1-form on an `n x n` grid over `[-1, 1]^2`.
pub fn planar_one_form(n: usize) -> GridField {
    let spec = GridSpec::cube(2, -1.0, 1.0, n).expect("valid grid");
    GridField::from_fn(spec, 1, 2, |x| {
        vec![x[0].sin() * x[1], 0.5 * (x[0] + x[1]).cos(), 0.3 * x[0] * x[0], (2.0 * x[1]).sin()]
    })
    .expect("shape fits")
}

/// Catenoid potential sampled on `[-3.5, 3.5]^2` with spacing `h`.
pub fn catenoid_grid(h: f64) -> GridField {
    let sol = solve_radial(2, Sign::Plus, 1.0, (1.05, 5.0), 4096).expect("valid parameters");
    let spec = GridSpec::cube_with_spacing(2, -3.5, 3.5, h).expect("valid grid");
    sol.sample_on_grid(spec, &[0.0, 0.0]).expect("sampling succeeds")
}

/// sech-amplitude tangential field on hyperbolic 3-space.
pub fn sech_field() -> RadialField {
    let man = RadialManifold::hyperbolic(3, 1.0).expect("valid manifold");
    RadialField::tangential(man, "sech", |r: f64| 1.0 / r.cosh()).expect("valid field")
}

pub fn profiles() -> Vec<FProfile> {
    vec![FProfile::identity(), FProfile::bi_plus()]
}
