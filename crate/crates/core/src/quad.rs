//! Quadrature and summation primitives shared by the energy, flux and
//! variation modules.

use std::f64::consts::PI;

/// Pairwise (cascade) summation. The grouping depends only on the slice
/// length, so results are reproducible regardless of how the terms were
/// produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Area of the unit sphere `S^{m-1}` bounding the unit ball of `R^m`.
pub fn unit_sphere_area(m: usize) -> f64 {
    m as f64 * unit_ball_volume(m)
}

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to relative tolerance
/// `rel_tol`. The integrand may fail; the first error aborts the
/// integration.
pub fn adaptive_simpson<E, F>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64, E>
where
    F: Fn(f64) -> Result<f64, E>,
{
    if a == b {
        return Ok(0.0);
    }
    // Seed with a 16-panel composite estimate so the absolute tolerance is
    // tied to the integral's magnitude rather than to one coarse panel.
    const SEED: usize = 16;
    let hstep = (b - a) / SEED as f64;
    let mut fx = Vec::with_capacity(2 * SEED + 1);
    for i in 0..=2 * SEED {
        fx.push(f(a + 0.5 * hstep * i as f64)?);
    }
    let mut panels = Vec::with_capacity(SEED);
    let mut coarse = Vec::with_capacity(SEED);
    for i in 0..SEED {
        let (fa, fm, fb) = (fx[2 * i], fx[2 * i + 1], fx[2 * i + 2]);
        let lo = a + hstep * i as f64;
        let s = hstep / 6.0 * (fa + 4.0 * fm + fb);
        panels.push((lo, lo + hstep, fa, fm, fb, s));
        coarse.push(s);
    }
    let whole = pairwise_sum(&coarse);
    if !whole.is_finite() {
        return Ok(whole);
    }
    let abs_tol = rel_tol * whole.abs().max(f64::MIN_POSITIVE);
    let panel_tol = abs_tol / SEED as f64;
    let mut parts = Vec::with_capacity(SEED);
    for (lo, hi, fa, fm, fb, s) in panels {
        parts.push(refine(&f, lo, hi, fa, fm, fb, s, panel_tol, 0)?);
    }
    Ok(pairwise_sum(&parts))
}

#[allow(clippy::too_many_arguments)]
fn refine<E, F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64, E>
where
    F: Fn(f64) -> Result<f64, E>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // A non-finite estimate cannot improve under refinement.
    if !delta.is_finite() {
        return Ok(left + right);
    }
    if depth >= MAX_DEPTH || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?)
}

/// Infallible convenience wrapper around [`adaptive_simpson`].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    adaptive_simpson::<std::convert::Infallible, _>(|x| Ok(f(x)), a, b, rel_tol).unwrap_or_else(|e| match e {})
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Five-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss5<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const X: [f64; 5] =
        [-0.906_179_845_938_664, -0.538_469_310_105_683_1, 0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
    const W: [f64; 5] = [
        0.236_926_885_056_189_08,
        0.478_628_670_499_366_47,
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
    ];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for i in 0..5 {
        s += W[i] * f(c + h * X[i]);
    }
    s * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn simpson_hits_polynomials_and_transcendentals() {
        let v = integrate(|x| x * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 4.0).abs() < 1e-12);
        let v = integrate(|x| x.sin(), 0.0, PI, 1e-10);
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn legendre_rule_integrates_degree_2n_minus_1() {
        let (x, w) = gauss_legendre(6);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
        let s5 = gauss5(|t| t.powi(9), 0.0, 1.0);
        assert!((s5 - 0.1).abs() < 1e-14);
    }

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
    }
}
