//! Radially symmetric solutions of the plus- and minus-sign Born-Infeld
//! graph equations, the planar duality between them, the graph energy bound
//! and the pinching condition.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exterior::binomial;
use crate::fields::{el_residual, form_energy, Axis, GridField, GridSpec, RESIDUAL_MARGIN};
use crate::fprofile::FProfile;
use crate::quad::{adaptive_simpson, gauss5, unit_ball_volume, unit_sphere_area};

/// Which of the two equations: `div(du / sqrt(1 + |du|^2)) = 0` (plus) or
/// `div(du / sqrt(1 - |du|^2)) = 0` (minus).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sign {
    #[default]
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// The energy profile whose critical points solve this equation.
    pub fn profile(self) -> FProfile {
        match self {
            Sign::Plus => FProfile::bi_plus(),
            Sign::Minus => FProfile::bi_minus(),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        })
    }
}

impl FromStr for Sign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(Sign::Plus),
            "minus" | "-" => Ok(Sign::Minus),
            _ => Err(Error::Parse(format!("unknown sign {s:?}, expected plus or minus"))),
        }
    }
}

/// Smallest admissible number of radial nodes.
pub const MIN_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGraphSolution {
    pub m: usize,
    pub sign: Sign,
    pub c: f64,
    pub r_grid: Vec<f64>,
    pub slope: Vec<f64>,
    /// `u(r_grid[0]) = 0`.
    pub u: Vec<f64>,
}

fn slope_of(m: usize, sign: Sign, c: f64, r: f64) -> f64 {
    let cr = c / r.powi(m as i32 - 1);
    match sign {
        Sign::Plus => cr / (1.0 - cr * cr).sqrt(),
        Sign::Minus => cr / (1.0 + cr * cr).sqrt(),
    }
}

/// Radial solution from the first integral `r^{m-1} u' / sqrt(1 +- u'^2) = C`
/// on `n` equally spaced nodes of `[a, b]`.
pub fn solve_radial(m: usize, sign: Sign, c: f64, range: (f64, f64), n: usize) -> Result<RadialGraphSolution> {
    let (a, b) = range;
    if m < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {m}")));
    }
    if n < MIN_NODES {
        return Err(Error::InvalidParameter(format!("need at least {MIN_NODES} nodes, got {n}")));
    }
    if !(a > 0.0 && b > a && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("bad radial range [{a}, {b}]")));
    }
    if sign == Sign::Plus {
        let r_sing = c.abs().powf(1.0 / (m as f64 - 1.0));
        if a <= r_sing {
            return Err(Error::SingularRadius { a, r_sing });
        }
    }
    let h = (b - a) / (n - 1) as f64;
    let r_grid: Vec<f64> = (0..n).map(|i| if i == n - 1 { b } else { a + h * i as f64 }).collect();
    let slope: Vec<f64> = r_grid.iter().map(|&r| slope_of(m, sign, c, r)).collect();
    let mut u = vec![0.0; n];
    for i in 1..n {
        let (r0, r1) = (r_grid[i - 1], r_grid[i]);
        let mid = slope_of(m, sign, c, 0.5 * (r0 + r1));
        u[i] = u[i - 1] + (r1 - r0) / 6.0 * (slope[i - 1] + 4.0 * mid + slope[i]);
    }
    Ok(RadialGraphSolution { m, sign, c, r_grid, slope, u })
}

impl RadialGraphSolution {
    pub fn range(&self) -> (f64, f64) {
        (self.r_grid[0], self.r_grid[self.r_grid.len() - 1])
    }

    /// `u'(r)` from the closed form.
    pub fn slope_at(&self, r: f64) -> f64 {
        slope_of(self.m, self.sign, self.c, r)
    }

    /// `r^{m-1} u' / sqrt(1 +- u'^2)` at node `i`.
    pub fn first_integral(&self, i: usize) -> f64 {
        let s = self.slope[i];
        let w = match self.sign {
            Sign::Plus => (1.0 + s * s).sqrt(),
            Sign::Minus => (1.0 - s * s).sqrt(),
        };
        self.r_grid[i].powi(self.m as i32 - 1) * s / w
    }

    pub fn first_integral_residuals(&self) -> Vec<f64> {
        (0..self.r_grid.len()).map(|i| (self.first_integral(i) - self.c).abs()).collect()
    }

    pub fn max_first_integral_residual(&self) -> f64 {
        self.first_integral_residuals().into_iter().fold(0.0, f64::max)
    }

    fn node_below(&self, r: f64) -> usize {
        let i = self.r_grid.partition_point(|&x| x <= r);
        i.saturating_sub(1).min(self.r_grid.len() - 1)
    }

    /// `u(r)` for `r` in range: the nearest node below plus a Gauss rule on
    /// the closed-form slope. `None` outside the solved range.
    pub fn value_at(&self, r: f64) -> Option<f64> {
        let (a, b) = self.range();
        if !(r >= a && r <= b) {
            return None;
        }
        let i = self.node_below(r);
        Some(self.value_from(i, r))
    }

    fn value_from(&self, i: usize, r: f64) -> f64 {
        self.u[i] + gauss5(|s| self.slope_at(s), self.r_grid[i], r)
    }

    /// `u(|x - center|)` on a grid, NaN outside the solved range.
    pub fn sample_on_grid(&self, spec: GridSpec, center: &[f64]) -> Result<GridField> {
        if spec.m() != self.m || center.len() != self.m {
            return Err(Error::ShapeMismatch("grid and center must match the solution's dimension".into()));
        }
        Ok(GridField::scalar(spec, |x| {
            let r = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            self.value_at(r).unwrap_or(f64::NAN)
        }))
    }

    /// Residual of the full equation on a small box around the middle of
    /// the range, with 16 nodes of spacing `1e-3` per axis. Only `m` in
    /// {2, 3} can be sampled.
    pub fn pde_residual(&self) -> Result<f64> {
        const H: f64 = 1e-3;
        const N: usize = 16;
        let (a, b) = self.range();
        let r_mid = 0.5 * (a + b);
        let half = 0.5 * H * (N - 1) as f64;
        let axes = (0..self.m)
            .map(|d| {
                let c = if d == 0 { r_mid } else { 0.0 };
                Axis { min: c - half, max: c + half, n: N }
            })
            .collect();
        let spec = GridSpec::new(axes)?;
        let i0 = self.node_below(r_mid);
        let u = GridField::scalar(spec, |x| {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            self.value_from(i0, r)
        });
        el_residual(&u, &self.sign.profile())
    }
}

/// A 0-form and its dual 0-form on a planar rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct DualityPair {
    pub omega: GridField,
    pub sigma: GridField,
    /// `tau = d sigma` before integration.
    pub tau: GridField,
    pub sign: Sign,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityResiduals {
    /// `max | |dw|^2 - |ds|^2 / (1 - |ds|^2) |`.
    pub norm_relation: f64,
    /// Largest excess of `1 - sqrt(1 - |ds|^2)` over `sqrt(1 + |dw|^2) - 1`.
    pub energy_inequality: f64,
    /// `max | sqrt(1 + |dw|^2) - 1 - (1 - sqrt(1 - |ds|^2)) / sqrt(1 - |ds|^2) |`.
    pub energy_identity: f64,
    /// Max-norm of `dw` minus its reconstruction from `ds`.
    pub roundtrip: f64,
    /// Max-norm of `d tau`.
    pub closedness: f64,
}

/// Largest index rectangle of finite nodes; errors unless every non-finite
/// node lies outside it.
fn finite_rectangle(omega: &GridField) -> Result<GridSpec> {
    let spec = omega.spec();
    let finite = |node: usize| omega.node(node).iter().all(|v| v.is_finite());
    let (mut lo, mut hi) = ([usize::MAX; 2], [0usize; 2]);
    let mut any = false;
    for node in 0..spec.len() {
        if finite(node) {
            let mi = spec.multi(node);
            for a in 0..2 {
                lo[a] = lo[a].min(mi[a]);
                hi[a] = hi[a].max(mi[a]);
            }
            any = true;
        }
    }
    if !any {
        return Err(Error::NotSimplyConnectedSupport);
    }
    for j in lo[1]..=hi[1] {
        for i in lo[0]..=hi[0] {
            if !finite(spec.index(&[i, j])) {
                return Err(Error::NotSimplyConnectedSupport);
            }
        }
    }
    let axes = (0..2)
        .map(|a| {
            let ax = spec.axis(a);
            Axis { min: ax.coord(lo[a]), max: ax.coord(hi[a]), n: hi[a] - lo[a] + 1 }
        })
        .collect();
    GridSpec::new(axes).map_err(|_| Error::GridTooSmall)
}

fn shrink(spec: &GridSpec) -> Result<GridSpec> {
    let axes = (0..2)
        .map(|a| {
            let ax = spec.axis(a);
            Axis { min: ax.coord(1), max: ax.coord(ax.n - 2), n: ax.n.saturating_sub(2) }
        })
        .collect();
    GridSpec::new(axes).map_err(|_| Error::GridTooSmall)
}

fn crop_form(fld: &GridField, target: &GridSpec) -> Result<GridField> {
    let spec = fld.spec();
    let off: Vec<usize> =
        (0..2).map(|a| ((target.axis(a).min - spec.axis(a).min) / spec.h(a)).round() as usize).collect();
    let data = (0..target.len())
        .flat_map(|node| {
            let mi = target.multi(node);
            fld.node(spec.index(&[mi[0] + off[0], mi[1] + off[1]])).to_vec()
        })
        .collect();
    GridField::from_data(target.clone(), fld.p(), fld.k(), data)
}

/// Planar duality for scalars: `tau = s * (*(dw / sqrt(1 + |dw|^2)))` and
/// `sigma` its primitive, integrated by the trapezoid rule along the bottom
/// row and then up each column. Non-finite nodes must lie outside a
/// rectangle of finite ones; the result lives on that rectangle minus its
/// boundary layer.
pub fn dualize(omega: &GridField, sign: Sign) -> Result<DualityPair> {
    if omega.m() != 2 || omega.p() != 0 || omega.k() != 1 {
        return Err(Error::DegreeOutOfRange("duality is implemented for scalar fields in the plane".into()));
    }
    let full = finite_rectangle(omega)?;
    let dw = crop_form(omega, &full)?.exterior_d()?;
    // One-sided boundary stencils would put a kink into the primitive, so
    // the boundary layer is dropped.
    let spec = shrink(&full)?;
    let omega = crop_form(omega, &spec)?;
    let dw = crop_form(&dw, &spec)?;
    let s = sign.value();
    let tau_data: Vec<f64> = dw
        .data()
        .chunks(2)
        .flat_map(|g| {
            let w = (1.0 + g[0] * g[0] + g[1] * g[1]).sqrt();
            [-s * g[1] / w, s * g[0] / w]
        })
        .collect();
    let tau = GridField::from_data(spec.clone(), 1, 1, tau_data)?;
    let (nx, ny) = (spec.n(0), spec.n(1));
    let (hx, hy) = (spec.h(0), spec.h(1));
    let t = |i: usize, j: usize, c: usize| tau.node(spec.index(&[i, j]))[c];
    let mut sigma = vec![0.0; spec.len()];
    for i in 1..nx {
        sigma[spec.index(&[i, 0])] = sigma[spec.index(&[i - 1, 0])] + 0.5 * hx * (t(i - 1, 0, 0) + t(i, 0, 0));
    }
    for i in 0..nx {
        for j in 1..ny {
            sigma[spec.index(&[i, j])] = sigma[spec.index(&[i, j - 1])] + 0.5 * hy * (t(i, j - 1, 1) + t(i, j, 1));
        }
    }
    let sigma = GridField::from_data(spec, 0, 1, sigma)?;
    Ok(DualityPair { omega, sigma, tau, sign })
}

impl DualityPair {
    /// `dw = -s * (*(ds / sqrt(1 - |ds|^2)))`, the inverse transform.
    pub fn reconstruct_domega(&self) -> Result<GridField> {
        let ds = self.sigma.exterior_d()?;
        let s = self.sign.value();
        let data = ds
            .data()
            .chunks(2)
            .flat_map(|g| {
                let q = (1.0 - g[0] * g[0] - g[1] * g[1]).sqrt();
                [s * g[1] / q, -s * g[0] / q]
            })
            .collect();
        GridField::from_data(ds.spec().clone(), 1, 1, data)
    }

    /// Pointwise residuals over interior nodes, all from grid derivatives.
    pub fn residuals(&self) -> Result<DualityResiduals> {
        let dw = self.omega.exterior_d()?;
        let ds = self.sigma.exterior_d()?;
        let back = self.reconstruct_domega()?;
        let closedness = self.tau.exterior_d()?.max_interior_norm(RESIDUAL_MARGIN);
        let spec = dw.spec();
        let mut out = DualityResiduals {
            norm_relation: 0.0,
            energy_inequality: 0.0,
            energy_identity: 0.0,
            roundtrip: 0.0,
            closedness,
        };
        let wsq = dw.norm_sq();
        let ssq = ds.norm_sq();
        for node in 0..spec.len() {
            if !spec.is_interior(node, RESIDUAL_MARGIN) {
                continue;
            }
            let (w, s) = (wsq[node], ssq[node]);
            if !(s < 1.0) {
                return Err(Error::NotSpacelike { value: s });
            }
            let q = (1.0 - s).sqrt();
            let plus = (1.0 + w).sqrt() - 1.0;
            out.norm_relation = out.norm_relation.max((w - s / (1.0 - s)).abs());
            out.energy_inequality = out.energy_inequality.max((1.0 - q) - plus);
            out.energy_identity = out.energy_identity.max((plus - (1.0 - q) / q).abs());
            let diff: f64 = dw.node(node).iter().zip(back.node(node)).map(|(a, b)| (a - b) * (a - b)).sum();
            out.roundtrip = out.roundtrip.max(diff.sqrt());
        }
        Ok(out)
    }
}

/// `int sqrt(1 + |w|^2) - 1` (plus) or `int 1 - sqrt(1 - |w|^2)` (minus)
/// over the nodes where `keep` holds; `w` is the field strength, e.g. `dw`
/// for a potential `w`.
pub fn bi_energy<K>(w: &GridField, sign: Sign, keep: K) -> Result<f64>
where
    K: Fn(&[f64]) -> bool,
{
    form_energy(&w.clone().masked(keep), &sign.profile())
}

/// Energy of a radial solution over the annulus `a <= r <= b` by the
/// coarea formula.
pub fn bi_energy_radial(sol: &RadialGraphSolution, a: f64, b: f64) -> Result<f64> {
    let (lo, hi) = sol.range();
    if !(a >= lo && b <= hi && b > a) {
        return Err(Error::InvalidParameter(format!("[{a}, {b}] is not inside the solved range [{lo}, {hi}]")));
    }
    let prof = sol.sign.profile();
    let m = sol.m;
    let v = adaptive_simpson(
        |r| {
            let s = sol.slope_at(r);
            Ok::<_, Error>(prof.value(0.5 * s * s)? * r.powi(m as i32 - 1))
        },
        a,
        b,
        1e-12,
    )?;
    Ok(unit_sphere_area(m) * v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphBound {
    pub energy: f64,
    pub bound: f64,
    pub ok: bool,
    pub el_residual: f64,
}

/// `m sqrt(C(m, p)) vol(B^m) rho^m`.
pub fn graph_energy_bound(m: usize, p: usize, rho: f64) -> f64 {
    m as f64 * (binomial(m, p) as f64).sqrt() * unit_ball_volume(m) * rho.powi(m as i32)
}

/// Plus-sign energy of `d omega` over `|x| <= rho` and `|omega^a| <= rho`,
/// compared with [`graph_energy_bound`]. `omega` must solve the plus-sign
/// equation to within `tol`.
pub fn graph_energy_bound_check(omega: &GridField, rho: f64, tol: f64) -> Result<GraphBound> {
    let prof = FProfile::bi_plus();
    let residual = el_residual(omega, &prof)?;
    if !(residual <= tol) {
        return Err(Error::NotASolution { residual, tol });
    }
    let spec = omega.spec();
    let dw = omega.exterior_d()?;
    let keep: Vec<bool> = (0..spec.len())
        .map(|node| {
            let x = spec.point(node);
            x.iter().map(|v| v * v).sum::<f64>().sqrt() <= rho && omega.node(node).iter().all(|v| v.abs() <= rho)
        })
        .collect();
    let dens: Result<Vec<f64>> = dw
        .norm_sq()
        .into_iter()
        .zip(&keep)
        .map(|(s, &k)| if k && s.is_finite() { prof.value(0.5 * s) } else { Ok(0.0) })
        .collect();
    let energy = spec.integrate(&dens?);
    let bound = graph_energy_bound(spec.m(), omega.p(), rho);
    Ok(GraphBound { energy, bound, ok: energy <= bound * (1.0 + 1e-6), el_residual: residual })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pinching {
    pub threshold: f64,
    pub max_norm_sq: f64,
    pub holds: bool,
    pub margin: f64,
}

/// `1 - (q+1)^2 / (m-q-1)^2`, defined for `q < (m-2)/2`.
pub fn pinching_threshold(m: usize, q: usize) -> Result<f64> {
    if 2 * q + 2 >= m {
        return Err(Error::DegreeOutOfRange(format!("pinching needs q < (m-2)/2, got m={m}, q={q}")));
    }
    let (a, b) = ((q + 1) as f64, (m - q - 1) as f64);
    Ok(1.0 - a * a / (b * b))
}

/// Pinching verdict from a known maximum of `|d sigma|^2`.
pub fn pinching_from_max(m: usize, q: usize, max_norm_sq: f64) -> Result<Pinching> {
    let threshold = pinching_threshold(m, q)?;
    let margin = threshold - max_norm_sq;
    Ok(Pinching { threshold, max_norm_sq, holds: margin >= 0.0, margin })
}

/// Pinching verdict for a sampled `q`-form over interior nodes.
pub fn pinching_check(sigma: &GridField) -> Result<Pinching> {
    let (m, q) = (sigma.m(), sigma.p());
    pinching_threshold(m, q)?;
    let ds = sigma.exterior_d()?;
    let spec = ds.spec();
    let max = ds
        .norm_sq()
        .into_iter()
        .enumerate()
        .filter(|&(node, v)| v.is_finite() && spec.is_interior(node, RESIDUAL_MARGIN))
        .map(|(_, v)| v)
        .fold(0.0, f64::max);
    pinching_from_max(m, q, max)
}
