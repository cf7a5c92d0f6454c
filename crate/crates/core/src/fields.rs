//! Exterior calculus on uniform rectangular grids with a trivial bundle:
//! finite-difference `d` and `delta`, the divergence of the stress-energy
//! tensor, and conservation / Euler-Lagrange residuals.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exterior::{binomial, combinations, contraction_table, rank, stress_energy, PointForm};
use crate::fprofile::FProfile;
use crate::quad::pairwise_sum;

/// Nodes closer than this to the boundary are excluded from residual norms.
pub const RESIDUAL_MARGIN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn h(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        if i == self.n - 1 {
            self.max
        } else {
            self.min + self.h() * i as f64
        }
    }
}

/// Uniform tensor grid in 2 or 3 dimensions. Axis 0 varies fastest in the
/// node numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    axes: Vec<Axis>,
    strides: Vec<usize>,
    len: usize,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if !(2..=3).contains(&axes.len()) {
            return Err(Error::InvalidParameter(format!("grid dimension must be 2 or 3, got {}", axes.len())));
        }
        for a in &axes {
            if a.n < 8 || !(a.max > a.min) || !a.min.is_finite() || !a.max.is_finite() {
                return Err(Error::InvalidParameter(format!("bad axis {a:?}: need n >= 8 and min < max")));
            }
        }
        let mut strides = Vec::with_capacity(axes.len());
        let mut s = 1;
        for a in &axes {
            strides.push(s);
            s *= a.n;
        }
        Ok(GridSpec { axes, strides, len: s })
    }

    /// `[min, max]^m` with `n` points per axis.
    pub fn cube(m: usize, min: f64, max: f64, n: usize) -> Result<Self> {
        Self::new(vec![Axis { min, max, n }; m])
    }

    /// Cube with spacing `h`, extended so that `[min, max]` lies on nodes.
    pub fn cube_with_spacing(m: usize, min: f64, max: f64, h: f64) -> Result<Self> {
        let n = ((max - min) / h).round() as usize + 1;
        Self::cube(m, min, max, n)
    }

    pub fn m(&self) -> usize {
        self.axes.len()
    }
    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }
    pub fn axis(&self, a: usize) -> &Axis {
        &self.axes[a]
    }
    pub fn n(&self, a: usize) -> usize {
        self.axes[a].n
    }
    pub fn h(&self, a: usize) -> f64 {
        self.axes[a].h()
    }
    pub fn max_h(&self) -> f64 {
        (0..self.m()).map(|a| self.h(a)).fold(0.0, f64::max)
    }
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
    pub fn stride(&self, a: usize) -> usize {
        self.strides[a]
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi(&self, mut node: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.m());
        for a in &self.axes {
            out.push(node % a.n);
            node /= a.n;
        }
        out
    }

    pub fn point(&self, node: usize) -> Vec<f64> {
        self.multi(node).iter().zip(&self.axes).map(|(&i, a)| a.coord(i)).collect()
    }

    /// True when every index is at least `margin` away from both ends.
    pub fn is_interior(&self, node: usize, margin: usize) -> bool {
        self.multi(node).iter().zip(&self.axes).all(|(&i, a)| i >= margin && i + margin < a.n)
    }

    /// Trapezoid weights per node.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        (0..self.len)
            .map(|node| {
                self.multi(node)
                    .iter()
                    .zip(&self.axes)
                    .map(|(&i, a)| if i == 0 || i == a.n - 1 { 0.5 * a.h() } else { a.h() })
                    .product()
            })
            .collect()
    }

    /// Trapezoid integral of nodal values; non-finite values count as zero.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let w = self.trapezoid_weights();
        let terms: Vec<f64> = values.iter().zip(&w).map(|(v, w)| if v.is_finite() { v * w } else { 0.0 }).collect();
        pairwise_sum(&terms)
    }
}

/// Finite-difference derivative along `axis` of component `comp` at
/// `node`. Order 2 uses central differences with second-order one-sided
/// stencils at the ends; order 4 uses the five-point stencil where it fits.
fn diff(spec: &GridSpec, data: &[f64], ncomp: usize, comp: usize, axis: usize, node: usize, order: u8) -> f64 {
    let ax = spec.axis(axis);
    let n = ax.n;
    let h = ax.h();
    let s = spec.stride(axis);
    let i = (node / s) % n;
    let f = |j: usize| data[(node + j * s - i * s) * ncomp + comp];
    if order >= 4 && i >= 2 && i + 2 < n {
        return (-f(i + 2) + 8.0 * f(i + 1) - 8.0 * f(i - 1) + f(i - 2)) / (12.0 * h);
    }
    if i == 0 {
        (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
    } else if i == n - 1 {
        (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h)
    } else {
        (f(i + 1) - f(i - 1)) / (2.0 * h)
    }
}

/// Gradient of a scalar nodal array, `m` entries per node.
pub fn gradient(spec: &GridSpec, values: &[f64]) -> Vec<f64> {
    let m = spec.m();
    let mut out = vec![0.0; spec.len() * m];
    out.par_chunks_mut(m).enumerate().for_each(|(node, g)| {
        for (a, ga) in g.iter_mut().enumerate() {
            *ga = diff(spec, values, 1, 0, a, node, 2);
        }
    });
    out
}

/// Sum of a few random plane waves; a cheap source of smooth test fields.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSeries {
    modes: Vec<(f64, Vec<f64>, f64)>,
    offset: f64,
}

impl TrigSeries {
    pub fn random<R: Rng>(m: usize, n_modes: usize, max_freq: f64, rng: &mut R) -> Self {
        let modes = (0..n_modes)
            .map(|_| {
                let amp = rng.gen_range(-1.0..1.0) / n_modes as f64;
                let k: Vec<f64> = (0..m).map(|_| rng.gen_range(-max_freq..max_freq)).collect();
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                (amp, k, phase)
            })
            .collect();
        TrigSeries { modes, offset: rng.gen_range(-0.5..0.5) }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.offset
            + self
                .modes
                .iter()
                .map(|(a, k, ph)| a * (k.iter().zip(x).map(|(k, x)| k * x).sum::<f64>() + ph).sin())
                .sum::<f64>()
    }
}

/// A discretised `R^k`-valued p-form: `C(m, p) * k` coefficients per node,
/// laid out as in [`PointForm`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    spec: GridSpec,
    p: usize,
    k: usize,
    data: Vec<f64>,
}

impl GridField {
    pub fn zeros(spec: GridSpec, p: usize, k: usize) -> Result<Self> {
        PointForm::zeros(spec.m(), p, k)?;
        let n = binomial(spec.m(), p) * k * spec.len();
        Ok(GridField { spec, p, k, data: vec![0.0; n] })
    }

    pub fn from_data(spec: GridSpec, p: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        PointForm::zeros(spec.m(), p, k)?;
        let want = binomial(spec.m(), p) * k * spec.len();
        if data.len() != want {
            return Err(Error::ShapeMismatch(format!("expected {want} values, got {}", data.len())));
        }
        Ok(GridField { spec, p, k, data })
    }

    /// Samples `f(x)` (coefficients in tuple-major order) at every node.
    pub fn from_fn<F>(spec: GridSpec, p: usize, k: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Sync,
    {
        let mut fld = Self::zeros(spec, p, k)?;
        let nc = fld.ncomp();
        let spec = &fld.spec;
        let bad = fld
            .data
            .par_chunks_mut(nc)
            .enumerate()
            .map(|(node, out)| {
                let v = f(&spec.point(node));
                if v.len() != nc {
                    return true;
                }
                out.copy_from_slice(&v);
                false
            })
            .reduce(|| false, |a, b| a || b);
        if bad {
            return Err(Error::ShapeMismatch(format!("sampler must return {nc} coefficients")));
        }
        Ok(fld)
    }

    pub fn scalar<F: Fn(&[f64]) -> f64 + Sync>(spec: GridSpec, f: F) -> Self {
        Self::from_fn(spec, 0, 1, |x| vec![f(x)]).expect("scalar fields always fit")
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }
    pub fn m(&self) -> usize {
        self.spec.m()
    }
    pub fn p(&self) -> usize {
        self.p
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn ncomp(&self) -> usize {
        binomial(self.m(), self.p) * self.k
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn node(&self, node: usize) -> &[f64] {
        let nc = self.ncomp();
        &self.data[node * nc..(node + 1) * nc]
    }

    pub fn form_at(&self, node: usize) -> PointForm {
        PointForm::from_coeffs(self.m(), self.p, self.k, self.node(node).to_vec())
            .expect("shape checked at construction")
    }

    /// Pointwise `|w|^2`.
    pub fn norm_sq(&self) -> Vec<f64> {
        self.data.chunks(self.ncomp()).map(|c| c.iter().map(|v| v * v).sum()).collect()
    }

    /// Replaces values by NaN wherever `keep(x)` is false.
    pub fn masked<F: Fn(&[f64]) -> bool>(mut self, keep: F) -> Self {
        let nc = self.ncomp();
        for node in 0..self.spec.len() {
            if !keep(&self.spec.point(node)) {
                self.data[node * nc..(node + 1) * nc].fill(f64::NAN);
            }
        }
        self
    }

    /// Pointwise `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.spec != other.spec || self.p != other.p || self.k != other.k {
            return Err(Error::ShapeMismatch("fields live on different grids or degrees".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        Ok(GridField { data, ..self.clone() })
    }

    /// Multiplies every node's coefficients by a nodal scalar.
    pub fn scale_nodes(&self, s: &[f64]) -> Self {
        let nc = self.ncomp();
        let mut data = self.data.clone();
        for (chunk, &w) in data.chunks_mut(nc).zip(s) {
            chunk.iter_mut().for_each(|v| *v *= w);
        }
        GridField { data, ..self.clone() }
    }

    /// `dw` with second-order stencils.
    pub fn exterior_d(&self) -> Result<Self> {
        self.exterior_d_order(2)
    }

    /// `dw` with stencils of the given order (2 or 4).
    pub fn exterior_d_order(&self, order: u8) -> Result<Self> {
        let m = self.m();
        if self.p >= m {
            return Err(Error::DegreeOutOfRange(format!("d of a {}-form in dimension {m}", self.p)));
        }
        let k = self.k;
        let nc_in = self.ncomp();
        // (sign, axis, input rank) per output tuple.
        let plan: Vec<Vec<(f64, usize, usize)>> = combinations(m, self.p + 1)
            .into_iter()
            .map(|t| {
                (0..t.len())
                    .map(|j| {
                        let rest: Vec<usize> = t.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v).collect();
                        (if j % 2 == 0 { 1.0 } else { -1.0 }, t[j], rank(m, &rest))
                    })
                    .collect()
            })
            .collect();
        let mut out = GridField::zeros(self.spec.clone(), self.p + 1, k)?;
        let nc_out = out.ncomp();
        let (spec, data) = (&self.spec, &self.data);
        out.data.par_chunks_mut(nc_out).enumerate().for_each(|(node, o)| {
            for (ro, terms) in plan.iter().enumerate() {
                for c in 0..k {
                    o[ro * k + c] =
                        terms.iter().map(|&(s, ax, ri)| s * diff(spec, data, nc_in, ri * k + c, ax, node, order)).sum();
                }
            }
        });
        Ok(out)
    }

    /// `delta w = -sum_i D_i w(e_i, ...)` for the flat metric.
    pub fn codifferential(&self) -> Result<Self> {
        if self.p == 0 {
            return Err(Error::DegreeZero);
        }
        let m = self.m();
        let k = self.k;
        let nc_in = self.ncomp();
        let table = contraction_table(m, self.p);
        let mut out = GridField::zeros(self.spec.clone(), self.p - 1, k)?;
        let nc_out = out.ncomp();
        let (spec, data) = (&self.spec, &self.data);
        out.data.par_chunks_mut(nc_out).enumerate().for_each(|(node, o)| {
            for (a, entries) in table.iter().enumerate() {
                for &(rj, r, sign) in entries {
                    for c in 0..k {
                        o[rj * k + c] -= sign * diff(spec, data, nc_in, r * k + c, a, node, 2);
                    }
                }
            }
        });
        Ok(out)
    }

    /// Max over interior nodes of the pointwise coefficient norm; nodes
    /// with non-finite values are skipped.
    pub fn max_interior_norm(&self, margin: usize) -> f64 {
        let nc = self.ncomp();
        (0..self.spec.len())
            .into_par_iter()
            .filter(|&node| self.spec.is_interior(node, margin))
            .map(|node| self.data[node * nc..(node + 1) * nc].iter().map(|v| v * v).sum::<f64>().sqrt())
            .filter(|v| v.is_finite())
            .reduce(|| 0.0, f64::max)
    }

    /// Multilinear interpolation; `None` outside the grid.
    pub fn interpolate(&self, x: &[f64]) -> Option<Vec<f64>> {
        let m = self.m();
        let mut base = Vec::with_capacity(m);
        let mut frac = Vec::with_capacity(m);
        for (a, &xa) in x.iter().enumerate().take(m) {
            let ax = self.spec.axis(a);
            let s = (xa - ax.min) / ax.h();
            let tol = 1e-9;
            if s < -tol || s > (ax.n - 1) as f64 + tol {
                return None;
            }
            let i = (s.floor().max(0.0) as usize).min(ax.n - 2);
            base.push(i);
            frac.push((s - i as f64).clamp(0.0, 1.0));
        }
        let nc = self.ncomp();
        let mut out = vec![0.0; nc];
        for corner in 0..(1usize << m) {
            let mut w = 1.0;
            let mut idx = base.clone();
            for a in 0..m {
                if corner >> a & 1 == 1 {
                    idx[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w == 0.0 {
                continue;
            }
            let v = self.node(self.spec.index(&idx));
            for (o, vi) in out.iter_mut().zip(v) {
                *o += w * vi;
            }
        }
        Some(out)
    }

    /// Tensor-product cubic Lagrange interpolation on the four nodes
    /// around `x` (shifted inward at the grid edges); `None` outside.
    pub fn interpolate_cubic(&self, x: &[f64]) -> Option<Vec<f64>> {
        let m = self.m();
        let mut base = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        for (a, &xa) in x.iter().enumerate().take(m) {
            let ax = self.spec.axis(a);
            let s = (xa - ax.min) / ax.h();
            if s < -1e-9 || s > (ax.n - 1) as f64 + 1e-9 {
                return None;
            }
            let i = (s.floor().max(1.0) as usize).min(ax.n - 3) - 1;
            let t = s - i as f64;
            let w: [f64; 4] = std::array::from_fn(|j| {
                (0..4).filter(|&l| l != j).map(|l| (t - l as f64) / (j as f64 - l as f64)).product()
            });
            base.push(i);
            weights.push(w);
        }
        let nc = self.ncomp();
        let mut out = vec![0.0; nc];
        let mut idx = vec![0; m];
        for code in 0..4usize.pow(m as u32) {
            let mut w = 1.0;
            let mut c = code;
            for a in 0..m {
                idx[a] = base[a] + c % 4;
                w *= weights[a][c % 4];
                c /= 4;
            }
            let v = self.node(self.spec.index(&idx));
            for (o, vi) in out.iter_mut().zip(v) {
                *o += w * vi;
            }
        }
        Some(out)
    }

    /// Flat Hodge star applied node by node.
    pub fn hodge_star(&self) -> Result<Self> {
        let q = self.m() - self.p;
        let mut out = GridField::zeros(self.spec.clone(), q, self.k)?;
        let nc = out.ncomp();
        out.data.par_chunks_mut(nc).enumerate().for_each(|(node, chunk)| {
            let star = self.form_at(node).hodge_star().expect("shape checked at construction");
            chunk.copy_from_slice(star.coeffs());
        });
        Ok(out)
    }

    fn column_names(&self) -> Vec<String> {
        let m = self.m();
        let mut cols: Vec<String> = (0..m).map(|a| format!("x{a}")).collect();
        for t in combinations(m, self.p) {
            let digits: String = t.iter().map(|i| char::from(b'1' + *i as u8)).collect();
            if self.k == 1 {
                cols.push(format!("w[{digits}]"));
            } else {
                for c in 0..self.k {
                    cols.push(format!("w[{digits}].{}", c + 1));
                }
            }
        }
        cols
    }

    /// CSV with a header row, one row per node: coordinates then
    /// coefficients in lexicographic tuple order.
    pub fn to_csv(&self) -> String {
        let mut s = self.column_names().join(",");
        s.push('\n');
        for node in 0..self.spec.len() {
            let mut first = true;
            for v in self.spec.point(node).iter().chain(self.node(node)) {
                if !first {
                    s.push(',');
                }
                first = false;
                let _ = write!(s, "{v:?}");
            }
            s.push('\n');
        }
        s
    }

    /// Parses the format written by [`GridField::to_csv`]. Lines starting
    /// with `#` are ignored.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let header: Vec<&str> =
            lines.next().ok_or_else(|| Error::Parse("empty input".into()))?.split(',').map(str::trim).collect();
        let m = header.iter().take_while(|h| h.starts_with('x')).count();
        if !(2..=3).contains(&m) {
            return Err(Error::Parse(format!("expected 2 or 3 coordinate columns, found {m}")));
        }
        let comps = &header[m..];
        let first = comps.first().ok_or_else(|| Error::Parse("no coefficient columns".into()))?;
        let p = first
            .strip_prefix("w[")
            .and_then(|s| s.split(']').next())
            .ok_or_else(|| Error::Parse(format!("bad column '{first}'")))?
            .len();
        let n_tuples = binomial(m, p);
        if !comps.len().is_multiple_of(n_tuples) {
            return Err(Error::Parse("coefficient column count does not match a form degree".into()));
        }
        let k = comps.len() / n_tuples;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (ln, line) in lines.enumerate() {
            let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| Error::Parse(format!("row {}: {e}", ln + 1)))?;
            if vals.len() != header.len() {
                return Err(Error::Parse(format!(
                    "row {} has {} fields, expected {}",
                    ln + 1,
                    vals.len(),
                    header.len()
                )));
            }
            rows.push(vals);
        }
        let mut axes = Vec::with_capacity(m);
        let mut coords: Vec<Vec<f64>> = Vec::with_capacity(m);
        for a in 0..m {
            let mut c: Vec<f64> = rows.iter().map(|r| r[a]).collect();
            c.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
            c.dedup();
            if c.len() < 8 {
                return Err(Error::Parse(format!("axis {a} has {} distinct coordinates", c.len())));
            }
            let h = (c[c.len() - 1] - c[0]) / (c.len() - 1) as f64;
            if c.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-6 * h) {
                return Err(Error::Parse(format!("axis {a} is not uniformly spaced")));
            }
            axes.push(Axis { min: c[0], max: c[c.len() - 1], n: c.len() });
            coords.push(c);
        }
        let spec = GridSpec::new(axes)?;
        if rows.len() != spec.len() {
            return Err(Error::Parse(format!("{} rows for a grid of {} nodes", rows.len(), spec.len())));
        }
        let mut fld = GridField::zeros(spec, p, k)?;
        let nc = fld.ncomp();
        let mut seen = vec![false; fld.spec.len()];
        for r in &rows {
            let mut multi = Vec::with_capacity(m);
            for a in 0..m {
                let i = coords[a]
                    .binary_search_by(|c| c.partial_cmp(&r[a]).unwrap_or(std::cmp::Ordering::Equal))
                    .map_err(|_| Error::Parse("coordinate lookup failed".into()))?;
                multi.push(i);
            }
            let node = fld.spec.index(&multi);
            if seen[node] {
                return Err(Error::Parse("duplicate node".into()));
            }
            seen[node] = true;
            fld.data[node * nc..(node + 1) * nc].copy_from_slice(&r[m..]);
        }
        Ok(fld)
    }
}

pub fn exterior_d(fld: &GridField) -> Result<GridField> {
    fld.exterior_d()
}

pub fn codifferential(fld: &GridField) -> Result<GridField> {
    fld.codifferential()
}

/// Nodal `(F'(t), F''(t))` with `t = |w|^2/2`; NaN where the field is not
/// finite.
fn profile_slopes(fld: &GridField, profile: &FProfile) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let t: Vec<f64> = fld.norm_sq().into_iter().map(|s| 0.5 * s).collect();
    let slopes: Result<Vec<(f64, f64)>> =
        t.par_iter()
            .map(|&t| {
                if t.is_finite() {
                    Ok((profile.deriv(t)?, profile.second_deriv(t)?))
                } else {
                    Ok((f64::NAN, f64::NAN))
                }
            })
            .collect();
    let (fp, fpp) = slopes?.into_iter().unzip();
    Ok((t, fp, fpp))
}

/// `(div S)(e_j)` from the identity
/// `F'<delta w, i_j w> + F'<i_j dw, w> - <i_{grad F'} w, i_j w>`,
/// with `grad F' = F'' grad t`. Returned as a 1-form field.
pub fn div_stress(fld: &GridField, profile: &FProfile) -> Result<GridField> {
    let m = fld.m();
    let p = fld.p();
    let (t, fp, fpp) = profile_slopes(fld, profile)?;
    let dw = if p < m { Some(fld.exterior_d()?) } else { None };
    let delta = if p >= 1 { Some(fld.codifferential()?) } else { None };
    let gt = gradient(fld.spec(), &t);
    let mut out = GridField::zeros(fld.spec().clone(), 1, 1)?;
    out.data.par_chunks_mut(m).enumerate().for_each(|(node, o)| {
        let w = fld.form_at(node);
        let (f1, f2) = (fp[node], fpp[node]);
        let iw: Vec<PointForm> =
            if p >= 1 { (0..m).map(|j| w.interior_basis(j).expect("p >= 1")).collect() } else { Vec::new() };
        let grad_fp: Vec<f64> = gt[node * m..(node + 1) * m].iter().map(|g| f2 * g).collect();
        let i_grad = if p >= 1 { Some(w.interior(&grad_fp).expect("p >= 1")) } else { None };
        let dw_node = dw.as_ref().map(|d| d.form_at(node));
        let del_node = delta.as_ref().map(|d| d.form_at(node));
        for (j, oj) in o.iter_mut().enumerate() {
            let mut v = 0.0;
            if let Some(dn) = &dw_node {
                let idw = dn.interior_basis(j).expect("degree >= 1");
                v += f1 * dot(idw.coeffs(), w.coeffs());
            }
            if p >= 1 {
                let dl = del_node.as_ref().expect("p >= 1");
                v += f1 * dot(dl.coeffs(), iw[j].coeffs());
                v -= dot(i_grad.as_ref().expect("p >= 1").coeffs(), iw[j].coeffs());
            }
            *oj = v;
        }
    });
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(div S)(e_j) = sum_i D_i S(e_i, e_j)` by differencing the nodal stress
/// tensor.
pub fn div_stress_direct(fld: &GridField, profile: &FProfile) -> Result<GridField> {
    let m = fld.m();
    let n = fld.spec().len();
    let mut s = vec![0.0; n * m * m];
    let status: Result<()> = s
        .par_chunks_mut(m * m)
        .enumerate()
        .map(|(node, out)| {
            let w = fld.form_at(node);
            if w.coeffs().iter().any(|v| !v.is_finite()) {
                out.fill(f64::NAN);
                return Ok(());
            }
            let st = stress_energy(profile, &w)?;
            for i in 0..m {
                for j in 0..m {
                    out[i * m + j] = st.get(i, j);
                }
            }
            Ok(())
        })
        .collect();
    status?;
    let spec = fld.spec();
    let mut out = GridField::zeros(spec.clone(), 1, 1)?;
    out.data.par_chunks_mut(m).enumerate().for_each(|(node, o)| {
        for (j, oj) in o.iter_mut().enumerate() {
            *oj = (0..m).map(|i| diff(spec, &s, m * m, i * m + j, i, node, 2)).sum();
        }
    });
    Ok(out)
}

/// Max-norm of `div S` over interior nodes.
pub fn conservation_residual(fld: &GridField, profile: &FProfile) -> Result<f64> {
    Ok(div_stress(fld, profile)?.max_interior_norm(RESIDUAL_MARGIN))
}

/// Tension `tau_F(sigma) = -delta(F'(|d sigma|^2/2) d sigma)`.
pub fn tension(sigma: &GridField, profile: &FProfile) -> Result<GridField> {
    let ds = sigma.exterior_d()?;
    let (_, fp, _) = profile_slopes(&ds, profile)?;
    let flux = ds.scale_nodes(&fp);
    let mut tau = flux.codifferential()?;
    tau.data.iter_mut().for_each(|v| *v = -*v);
    Ok(tau)
}

/// Max-norm of the tension over interior nodes.
pub fn el_residual(sigma: &GridField, profile: &FProfile) -> Result<f64> {
    Ok(tension(sigma, profile)?.max_interior_norm(RESIDUAL_MARGIN))
}

/// Residual of `delta(F' d sigma) = rho` for a prescribed source `rho`.
pub fn el_residual_with_source(sigma: &GridField, profile: &FProfile, source: &GridField) -> Result<f64> {
    let tau = tension(sigma, profile)?;
    // delta(F' d sigma) - rho = -tau - rho
    let r = tau.combine(-1.0, source, -1.0)?;
    Ok(r.max_interior_norm(RESIDUAL_MARGIN))
}

/// Energy `int F(|w|^2/2)` by the trapezoid rule.
pub fn form_energy(fld: &GridField, profile: &FProfile) -> Result<f64> {
    let dens: Result<Vec<f64>> = fld
        .norm_sq()
        .into_par_iter()
        .map(|s| if s.is_finite() { profile.value(0.5 * s) } else { Ok(f64::NAN) })
        .collect();
    Ok(fld.spec().integrate(&dens?))
}

/// Trapezoid `L^2` pairing `int <a, b>`.
pub fn grid_inner(a: &GridField, b: &GridField) -> Result<f64> {
    if a.spec != b.spec || a.p != b.p || a.k != b.k {
        return Err(Error::ShapeMismatch("fields live on different grids or degrees".into()));
    }
    let nc = a.ncomp();
    let vals: Vec<f64> = a.data.chunks(nc).zip(b.data.chunks(nc)).map(|(x, y)| dot(x, y)).collect();
    Ok(a.spec.integrate(&vals))
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
    fn spec_indexing_roundtrip() {
        let s = GridSpec::new(vec![
            Axis { min: 0.0, max: 1.0, n: 9 },
            Axis { min: -1.0, max: 1.0, n: 10 },
            Axis { min: 2.0, max: 3.0, n: 8 },
        ])
        .unwrap();
        for node in [0, 17, 311, s.len() - 1] {
            assert_eq!(s.index(&s.multi(node)), node);
        }
        assert_eq!(s.point(s.len() - 1), vec![1.0, 1.0, 3.0]);
        assert!(GridSpec::cube(2, 0.0, 1.0, 5).is_err());
        assert!(GridSpec::cube(4, 0.0, 1.0, 9).is_err());
    }

    #[test]
    fn d_of_constants_and_linear_functions() {
        let c = GridField::scalar(square(17), |_| 3.0);
        assert!(c.exterior_d().unwrap().data().iter().all(|v| v.abs() < 1e-12));
        let u = GridField::scalar(square(17), |x| x[0]);
        let du = u.exterior_d().unwrap();
        for node in 0..du.spec().len() {
            assert!((du.node(node)[0] - 1.0).abs() < 1e-12 && du.node(node)[1].abs() < 1e-12);
        }
    }

    #[test]
    fn d_squared_is_small() {
        let spec = GridSpec::cube(3, 0.0, 1.0, 33).unwrap();
        let u = GridField::scalar(spec, |x| (x[0] * 2.0).sin() * (x[1] + x[2]).cos() + x[0] * x[2] * x[2]);
        let dd = u.exterior_d().unwrap().exterior_d().unwrap();
        assert!(dd.max_interior_norm(1) < 1e-10);
    }

    #[test]
    fn codifferential_examples() {
        let dx = GridField::from_fn(square(17), 1, 1, |_| vec![1.0, 0.0]).unwrap();
        assert!(dx.codifferential().unwrap().max_interior_norm(0) < 1e-12);
        let spec = GridSpec::cube(2, -1.0, 1.0, 65).unwrap();
        let u = GridField::scalar(spec, |x| x[0] * x[0] + x[1] * x[1]);
        let lap = u.exterior_d().unwrap().codifferential().unwrap();
        for node in 0..lap.spec().len() {
            if lap.spec().is_interior(node, 2) {
                assert!((lap.node(node)[0] + 4.0).abs() < 1e-10);
            }
        }
        assert_eq!(u.codifferential(), Err(Error::DegreeZero));
    }

    #[test]
    fn discrete_adjointness_with_compact_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = GridSpec::cube(2, -1.0, 1.0, 49).unwrap();
        let bump = |x: &[f64]| -> f64 {
            let r2 = x[0] * x[0] + x[1] * x[1];
            if r2 < 0.64 {
                (1.0 - r2 / 0.64).powi(3)
            } else {
                0.0
            }
        };
        let ts = TrigSeries::random(2, 3, 3.0, &mut rng);
        let ta = TrigSeries::random(2, 3, 3.0, &mut rng);
        let tb = TrigSeries::random(2, 3, 3.0, &mut rng);
        let sigma = GridField::scalar(spec.clone(), |x| bump(x) * ts.eval(x));
        let rho = GridField::from_fn(spec, 1, 1, |x| vec![bump(x) * ta.eval(x), bump(x) * tb.eval(x)]).unwrap();
        let lhs = grid_inner(&sigma.exterior_d().unwrap(), &rho).unwrap();
        let rhs = grid_inner(&sigma, &rho.codifferential().unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn harmonic_field_is_conservative() {
        let id = FProfile::identity();
        let u = GridField::scalar(square(129), |x| x[0] * x[0] - x[1] * x[1]);
        let w = u.exterior_d().unwrap();
        assert!(conservation_residual(&w, &id).unwrap() < 1e-10);
        let lin = GridField::scalar(square(33), |x| x[0]).exterior_d().unwrap();
        assert!(conservation_residual(&lin, &FProfile::bi_plus()).unwrap() <= 1e-10);
        let zero = GridField::zeros(square(17), 1, 1).unwrap();
        assert_eq!(div_stress(&zero, &id).unwrap().max_interior_norm(0), 0.0);
    }

    #[test]
    fn cubic_is_not_conservative() {
        let id = FProfile::identity();
        // |div S| = |Laplacian(u) u_x| = 18 |x|^3 for u = x^3.
        for n in [33, 65, 129] {
            let w = GridField::scalar(square(n), |x| x[0].powi(3)).exterior_d().unwrap();
            let r = conservation_residual(&w, &id).unwrap();
            assert!(r > 10.0 && r < 18.5, "{r}");
        }
    }

    #[test]
    fn formula_matches_direct_divergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ts = TrigSeries::random(2, 4, 2.0, &mut rng);
        let u = GridField::scalar(square(129), |x| ts.eval(x));
        let w = u.exterior_d().unwrap();
        for prof in [FProfile::identity(), FProfile::bi_plus()] {
            let a = div_stress(&w, &prof).unwrap();
            let b = div_stress_direct(&w, &prof).unwrap();
            let diff = a.combine(1.0, &b, -1.0).unwrap().max_interior_norm(2);
            let scale = b.max_interior_norm(2);
            assert!(diff <= 0.05 * scale, "{diff} vs {scale}");
        }
    }

    #[test]
    fn tension_of_harmonic_function() {
        let u = GridField::scalar(square(65), |x| x[0] * x[0] - x[1] * x[1]);
        assert!(el_residual(&u, &FProfile::identity()).unwrap() < 1e-10);
        let c = GridField::scalar(square(17), |_| 2.5);
        assert_eq!(el_residual(&c, &FProfile::bi_plus()).unwrap(), 0.0);
        let src = GridField::scalar(square(65), |_| -4.0);
        let q = GridField::scalar(square(65), |x| x[0] * x[0] + x[1] * x[1]);
        assert!(el_residual_with_source(&q, &FProfile::identity(), &src).unwrap() < 1e-10);
    }

    #[test]
    fn steep_field_exceeds_minus_cap() {
        let u = GridField::scalar(square(17), |x| 2.0 * x[0]);
        assert!(matches!(el_residual(&u, &FProfile::bi_minus()), Err(Error::DomainExceeded { .. })));
    }

    #[test]
    fn interpolation_is_exact_on_bilinear() {
        let f = GridField::scalar(square(11), |x| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1]);
        let v = f.interpolate(&[0.33, -0.71]).unwrap()[0];
        assert!((v - (1.0 + 0.66 + 0.71 - 0.5 * 0.33 * 0.71)).abs() < 1e-12);
        assert!(f.interpolate(&[1.5, 0.0]).is_none());
        assert!(f.interpolate(&[1.0, 1.0]).is_some());
    }

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let f = GridField::scalar(square(11), |x| x[0].powi(3) - 2.0 * x[0] * x[1] * x[1] + x[1]);
        for p in [[0.33, -0.71], [-0.99, 0.95], [1.0, -1.0]] {
            let v = f.interpolate_cubic(&p).unwrap()[0];
            let exact = p[0].powi(3) - 2.0 * p[0] * p[1] * p[1] + p[1];
            assert!((v - exact).abs() < 1e-12, "{v} {exact}");
        }
        assert!(f.interpolate_cubic(&[0.0, 1.2]).is_none());
    }

    #[test]
    fn grid_star_rotates_gradients() {
        let f = GridField::from_fn(square(8), 1, 1, |x| vec![x[0], 2.0]).unwrap();
        let s = f.hodge_star().unwrap();
        let node = 9;
        assert_eq!(s.node(node), &[-2.0, f.node(node)[0]]);
    }

    #[test]
    fn csv_roundtrip() {
        let spec = GridSpec::new(vec![
            Axis { min: 0.0, max: 1.0, n: 8 },
            Axis { min: -0.5, max: 0.25, n: 9 },
            Axis { min: 1.0, max: 2.0, n: 8 },
        ])
        .unwrap();
        let f =
            GridField::from_fn(spec, 2, 2, |x| (0..6).map(|i| x[0] * i as f64 - x[1] + 0.1 * x[2]).collect()).unwrap();
        let text = f.to_csv();
        assert!(text.starts_with("x0,x1,x2,w[12].1,w[12].2,w[13].1"));
        let back = GridField::from_csv(&format!("# comment\n{text}")).unwrap();
        assert_eq!(back, f);
        let s = GridField::scalar(square(8), |x| x[0]);
        assert!(s.to_csv().starts_with("x0,x1,w[]\n"));
        assert_eq!(GridField::from_csv(&s.to_csv()).unwrap(), s);
        assert!(GridField::from_csv("x0,x1,w[1]\n1,2\n").is_err());
    }

    #[test]
    fn masked_nodes_are_skipped() {
        let u = GridField::scalar(square(33), |x| x[0] * x[0] - x[1] * x[1]).masked(|x| x[0] > -0.5);
        assert!(el_residual(&u, &FProfile::identity()).unwrap() < 1e-10);
    }
}
