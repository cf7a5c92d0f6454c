//! Pointwise algebra of vector-valued p-forms over an orthonormal frame.

use std::sync::OnceLock;

use rand::Rng;

use crate::error::{Error, Result};
use crate::fprofile::FProfile;

pub const MAX_DIM: usize = 8;
pub const MAX_DEGREE: usize = 4;

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c = 1usize;
    for i in 0..k {
        c = c * (n - i) / (i + 1);
    }
    c
}

/// All strictly increasing `p`-tuples from `0..m`, in lexicographic order.
pub fn combinations(m: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(m, p));
    if p > m {
        return out;
    }
    let mut cur: Vec<usize> = (0..p).collect();
    loop {
        out.push(cur.clone());
        let mut i = p;
        while i > 0 && cur[i - 1] == m - p + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        let i = i - 1;
        cur[i] += 1;
        for j in i + 1..p {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Lexicographic rank of a strictly increasing tuple among `combinations(m, p)`.
pub fn rank(m: usize, tuple: &[usize]) -> usize {
    let p = tuple.len();
    let total = binomial(m, p);
    let mut s = 0;
    for (j, &c) in tuple.iter().enumerate() {
        s += binomial(m - 1 - c, p - j);
    }
    total - 1 - s
}

/// Sorts `idx` in place and returns the permutation sign, or 0 when an
/// index repeats.
pub fn sort_with_sign(idx: &mut [usize]) -> i32 {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        0
    } else {
        sign
    }
}

type ContractionEntries = Vec<Vec<(usize, usize, f64)>>;

/// For contraction with `e_a` of a p-form in dimension m: entries
/// `(rank of J, rank of sorted (a, J), sign)` over (p-1)-tuples `J` not
/// containing `a`. Built once for every supported shape.
pub fn contraction_table(m: usize, p: usize) -> &'static ContractionEntries {
    static TABLES: OnceLock<Vec<Vec<ContractionEntries>>> = OnceLock::new();
    let all = TABLES.get_or_init(|| {
        (0..=MAX_DIM)
            .map(|m| {
                (0..=m)
                    .map(|p| {
                        if p == 0 {
                            return vec![Vec::new(); m];
                        }
                        let lower = combinations(m, p - 1);
                        (0..m)
                            .map(|a| {
                                let mut e = Vec::new();
                                for (rj, tj) in lower.iter().enumerate() {
                                    if tj.contains(&a) {
                                        continue;
                                    }
                                    let below = tj.iter().filter(|&&j| j < a).count();
                                    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
                                    let mut full = tj.clone();
                                    full.insert(below, a);
                                    e.push((rj, rank(m, &full), sign));
                                }
                                e
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    });
    &all[m][p]
}

/// An `R^k`-valued p-form at a point, stored over increasing index tuples.
/// Coefficients are laid out tuple-major: `coeffs[rank * k + a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointForm {
    m: usize,
    p: usize,
    k: usize,
    coeffs: Vec<f64>,
}

impl PointForm {
    fn check_shape(m: usize, p: usize, k: usize) -> Result<()> {
        if m == 0 || m > MAX_DIM || p > m || k == 0 || p.min(m - p) > MAX_DEGREE {
            return Err(Error::ShapeMismatch(format!("unsupported form shape m={m}, p={p}, k={k}")));
        }
        Ok(())
    }

    pub fn zeros(m: usize, p: usize, k: usize) -> Result<Self> {
        Self::check_shape(m, p, k)?;
        Ok(PointForm { m, p, k, coeffs: vec![0.0; binomial(m, p) * k] })
    }

    pub fn from_coeffs(m: usize, p: usize, k: usize, coeffs: Vec<f64>) -> Result<Self> {
        Self::check_shape(m, p, k)?;
        if coeffs.len() != binomial(m, p) * k {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coefficients, got {}",
                binomial(m, p) * k,
                coeffs.len()
            )));
        }
        Ok(PointForm { m, p, k, coeffs })
    }

    /// The scalar basis form `dx^{i_1} ^ ... ^ dx^{i_p}` (any order; the
    /// sign of the sorting permutation is applied).
    pub fn basis(m: usize, idx: &[usize]) -> Result<Self> {
        let mut w = Self::zeros(m, idx.len(), 1)?;
        let mut sorted = idx.to_vec();
        let s = sort_with_sign(&mut sorted);
        if sorted.iter().any(|&i| i >= m) {
            return Err(Error::ShapeMismatch(format!("index out of range for m={m}")));
        }
        if s != 0 {
            w.coeffs[rank(m, &sorted)] = s as f64;
        }
        Ok(w)
    }

    /// Coefficients drawn uniformly from [-1, 1].
    pub fn random<R: Rng>(m: usize, p: usize, k: usize, rng: &mut R) -> Result<Self> {
        let mut w = Self::zeros(m, p, k)?;
        for c in &mut w.coeffs {
            *c = rng.gen_range(-1.0..1.0);
        }
        Ok(w)
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn p(&self) -> usize {
        self.p
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.m, self.p, self.k)
    }

    /// Fiber vector at an increasing tuple rank.
    pub fn at_rank(&self, r: usize) -> &[f64] {
        &self.coeffs[r * self.k..(r + 1) * self.k]
    }

    /// Fiber vector at an arbitrary tuple, with the antisymmetry sign.
    pub fn eval(&self, idx: &[usize]) -> Vec<f64> {
        assert_eq!(idx.len(), self.p, "tuple length must equal the degree");
        let mut sorted = idx.to_vec();
        let s = sort_with_sign(&mut sorted);
        if s == 0 {
            return vec![0.0; self.k];
        }
        let r = rank(self.m, &sorted);
        self.at_rank(r).iter().map(|v| s as f64 * v).collect()
    }

    pub fn scale(&self, a: f64) -> Self {
        PointForm { coeffs: self.coeffs.iter().map(|c| a * c).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(PointForm { coeffs, ..self.clone() })
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", self.shape(), other.shape())));
        }
        Ok(())
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// `i_X w`, contraction in the first slot.
    pub fn interior(&self, x: &[f64]) -> Result<Self> {
        if self.p == 0 {
            return Err(Error::DegreeZero);
        }
        if x.len() != self.m {
            return Err(Error::ShapeMismatch(format!("vector of length {} for m={}", x.len(), self.m)));
        }
        let mut out = PointForm::zeros(self.m, self.p - 1, self.k)?;
        let k = self.k;
        for (a, &xa) in x.iter().enumerate() {
            if xa == 0.0 {
                continue;
            }
            for &(rj, r, sign) in &contraction_table(self.m, self.p)[a] {
                for c in 0..k {
                    out.coeffs[rj * k + c] += sign * xa * self.coeffs[r * k + c];
                }
            }
        }
        Ok(out)
    }

    /// `i_{e_a} w`.
    pub fn interior_basis(&self, a: usize) -> Result<Self> {
        let mut x = vec![0.0; self.m];
        x[a] = 1.0;
        self.interior(&x)
    }

    /// Hodge star for the flat metric and orientation `dx^1 ^ ... ^ dx^m`.
    pub fn hodge_star(&self) -> Result<Self> {
        let q = self.m - self.p;
        let mut out = PointForm::zeros(self.m, q, self.k)?;
        for (ri, t) in combinations(self.m, self.p).iter().enumerate() {
            let comp: Vec<usize> = (0..self.m).filter(|i| !t.contains(i)).collect();
            let mut perm: Vec<usize> = t.iter().chain(comp.iter()).copied().collect();
            let s = sort_with_sign(&mut perm) as f64;
            let rc = rank(self.m, &comp);
            for c in 0..self.k {
                out.coeffs[rc * self.k + c] = s * self.coeffs[ri * self.k + c];
            }
        }
        Ok(out)
    }
}

/// `<a, b>`, summed over increasing tuples and fiber components.
pub fn form_inner(a: &PointForm, b: &PointForm) -> Result<f64> {
    a.same_shape(b)?;
    Ok(a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x * y).sum())
}

pub fn interior_mult(x: &[f64], w: &PointForm) -> Result<PointForm> {
    w.interior(x)
}

/// Symmetric 2-tensor over an orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor2 {
    m: usize,
    entries: Vec<f64>,
}

impl SymTensor2 {
    pub fn zeros(m: usize) -> Self {
        SymTensor2 { m, entries: vec![0.0; m * m] }
    }

    /// The metric `g`.
    pub fn identity(m: usize) -> Self {
        let mut t = Self::zeros(m);
        for i in 0..m {
            t.entries[i * m + i] = 1.0;
        }
        t
    }

    /// Built from the upper triangle of `f(i, j)`; symmetric by construction.
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(m: usize, mut f: F) -> Self {
        let mut t = Self::zeros(m);
        for i in 0..m {
            for j in i..m {
                let v = f(i, j);
                t.entries[i * m + j] = v;
                t.entries[j * m + i] = v;
            }
        }
        t
    }

    pub fn diag(d: &[f64]) -> Self {
        let m = d.len();
        Self::from_fn(m, |i, j| if i == j { d[i] } else { 0.0 })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.m).map(|i| self.get(i, i)).sum()
    }

    /// `x^T T y`.
    pub fn apply(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.m {
            for j in 0..self.m {
                s += x[i] * self.entries[i * self.m + j] * y[j];
            }
        }
        s
    }

    /// `a A + b B`.
    pub fn combine(a: f64, ta: &Self, b: f64, tb: &Self) -> Result<Self> {
        if ta.m != tb.m {
            return Err(Error::ShapeMismatch(format!("m={} vs m={}", ta.m, tb.m)));
        }
        let entries = ta.entries.iter().zip(&tb.entries).map(|(x, y)| a * x + b * y).collect();
        Ok(SymTensor2 { m: ta.m, entries })
    }
}

/// `sum_{i,j} T1(e_i, e_j) T2(e_i, e_j)`.
pub fn tensor_inner(a: &SymTensor2, b: &SymTensor2) -> Result<f64> {
    if a.m != b.m {
        return Err(Error::ShapeMismatch(format!("m={} vs m={}", a.m, b.m)));
    }
    Ok(a.entries.iter().zip(&b.entries).map(|(x, y)| x * y).sum())
}

/// `(w . w)(X, Y) = <i_X w, i_Y w>`.
pub fn double_contract(w: &PointForm) -> Result<SymTensor2> {
    if w.p == 0 {
        return Err(Error::DegreeZero);
    }
    let contractions: Vec<PointForm> = (0..w.m).map(|a| w.interior_basis(a)).collect::<Result<_>>()?;
    Ok(SymTensor2::from_fn(w.m, |i, j| {
        contractions[i].coeffs.iter().zip(&contractions[j].coeffs).map(|(x, y)| x * y).sum()
    }))
}

/// `S = F(|w|^2/2) g - F'(|w|^2/2) (w . w)`. For 0-forms the contraction
/// term vanishes.
pub fn stress_energy(profile: &FProfile, w: &PointForm) -> Result<SymTensor2> {
    let (f, df) = profile.eval(0.5 * w.norm_sq())?;
    let g = SymTensor2::identity(w.m);
    if w.p == 0 {
        return SymTensor2::combine(f, &g, 0.0, &g);
    }
    SymTensor2::combine(f, &g, -df, &double_contract(w)?)
}

/// `<S, nabla theta_X>` for `X = r d/dr` where `Hess(r) = h [g - dr dr]`
/// and the last frame vector is `d/dr`.
pub fn radial_pairing(profile: &FProfile, w: &PointForm, h: f64, r: f64) -> Result<f64> {
    let (f, df) = profile.eval(0.5 * w.norm_sq())?;
    let m = w.m;
    let rh = r * h;
    let mut pairing = f * (1.0 + (m as f64 - 1.0) * rh);
    if w.p > 0 {
        let ww = double_contract(w)?;
        let tangential: f64 = (0..m - 1).map(|i| ww.get(i, i)).sum();
        pairing -= df * rh * tangential + df * ww.get(m - 1, m - 1);
    }
    Ok(pairing)
}

/// `S(r d/dr, d/dr) = r (F - F' |i_{d/dr} w|^2)` with `d/dr` the last
/// frame vector.
pub fn radial_boundary_term(profile: &FProfile, w: &PointForm, r: f64) -> Result<f64> {
    let (f, df) = profile.eval(0.5 * w.norm_sq())?;
    if w.p == 0 {
        return Ok(r * f);
    }
    let ir = w.interior_basis(w.m - 1)?;
    Ok(r * (f - df * ir.norm_sq()))
}
