//! Homogeneous-tree combinatorics, radial functions and convolution.
//!
//! A homogeneous tree of degree `Q+1` is stored either implicitly through
//! radial data (values per distance from the base point `o`) or explicitly as
//! a BFS-ordered [`TruncatedTree`], which serves as a brute-force oracle for
//! the radial formulas.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default vertex budget for explicit trees.
pub const DEFAULT_VERTEX_BUDGET: usize = 10_000_000;
/// Largest branching number the brute-force oracles accept by default.
pub const ORACLE_MAX_Q: u32 = 3;
/// Largest radius the brute-force oracles accept by default.
pub const ORACLE_MAX_RADIUS: usize = 12;

/// Branching number `q` (every vertex has `q + 1` neighbours) and the radial
/// truncation index `n` (largest stored radius).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeParams {
    pub q: u32,
    pub n: usize,
}

impl TreeParams {
    pub fn new(q: u32, n: usize) -> Result<Self> {
        if q < 2 {
            return Err(Error::Domain(format!(
                "branching number Q={q} must be at least 2"
            )));
        }
        if n < 1 {
            return Err(Error::Domain(
                "radial truncation index N must be at least 1".into(),
            ));
        }
        Ok(Self { q, n })
    }

    pub fn with_radius(self, n: usize) -> Self {
        Self { n: n.max(1), ..self }
    }

    /// `ln Q`.
    pub fn log_q(&self) -> f64 {
        (self.q as f64).ln()
    }

    /// `γ(0) = 2 / (Q^{1/2} + Q^{-1/2})`, the spectral radius of the mean operator.
    pub fn gamma0(&self) -> f64 {
        let s = (self.q as f64).sqrt();
        2.0 / (s + 1.0 / s)
    }

    pub fn sphere_size(&self, n: usize) -> Result<u128> {
        sphere_size(self, n)
    }
}

/// `|S(o, n)|` as an exact integer: `1` for `n = 0`, `(Q+1)Q^{n-1}` otherwise.
pub fn sphere_size(params: &TreeParams, n: usize) -> Result<u128> {
    if n == 0 {
        return Ok(1);
    }
    let q = params.q as u128;
    let overflow = || Error::Overflow { q: params.q, n };
    let exp = u32::try_from(n - 1).map_err(|_| overflow())?;
    q.checked_pow(exp)
        .and_then(|p| p.checked_mul(q + 1))
        .ok_or_else(overflow)
}

/// Sphere size as a float, usable as a measure weight far beyond `u128`.
pub fn sphere_weight(q: u32, n: usize) -> f64 {
    if n == 0 {
        1.0
    } else {
        let q = q as f64;
        (q + 1.0) * q.powi((n - 1) as i32)
    }
}

/// Weights `w(0..=n)`.
pub fn sphere_weights(q: u32, n: usize) -> Vec<f64> {
    (0..=n).map(|k| sphere_weight(q, k)).collect()
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Domain(format!("L^p exponent p={p} must be in [1, inf]")));
    }
    Ok(())
}

/// Complex amplitudes on the radii `0..=N` of the tree.
///
/// `trusted` is the largest radius whose value is exact; operators that need
/// a neighbour beyond `N` lower it instead of inventing boundary values.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    pub params: TreeParams,
    pub values: Vec<Complex64>,
    pub trusted: usize,
}

impl RadialFunction {
    pub fn zeros(params: TreeParams) -> Self {
        Self {
            params,
            values: vec![Complex64::new(0.0, 0.0); params.n + 1],
            trusted: params.n,
        }
    }

    /// Builds a radial function whose truncation index is `values.len() - 1`.
    pub fn from_values(q: u32, values: Vec<Complex64>) -> Result<Self> {
        let n = values.len().saturating_sub(1);
        let params = TreeParams::new(q, n)?;
        Ok(Self {
            params,
            values,
            trusted: n,
        })
    }

    pub fn from_real(q: u32, values: &[f64]) -> Result<Self> {
        Self::from_values(q, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Indicator of the sphere `S(o, k)`.
    pub fn delta(params: TreeParams, k: usize) -> Self {
        let mut f = Self::zeros(params);
        if k <= params.n {
            f.values[k] = Complex64::new(1.0, 0.0);
        }
        f
    }

    pub fn q(&self) -> u32 {
        self.params.q
    }

    pub fn radius(&self) -> usize {
        self.params.n
    }

    pub fn get(&self, n: usize) -> Complex64 {
        self.values.get(n).copied().unwrap_or_default()
    }

    /// Largest radius carrying a nonzero value (0 for the zero function).
    pub fn support_radius(&self) -> usize {
        self.values
            .iter()
            .rposition(|v| *v != Complex64::new(0.0, 0.0))
            .unwrap_or(0)
    }

    /// Pads with zeros or truncates to radius `n`.
    pub fn resized(&self, n: usize) -> Self {
        let n = n.max(1);
        let mut values = self.values.clone();
        values.resize(n + 1, Complex64::new(0.0, 0.0));
        Self {
            params: self.params.with_radius(n),
            values,
            trusted: if self.trusted >= self.params.n { n } else { self.trusted.min(n) },
        }
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * a).collect(),
            ..self.clone()
        }
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm(self, p)
    }

    /// Squared `L²` norm.
    pub fn mass(&self) -> f64 {
        weighted_power_sum(self, 2.0)
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn conj(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| v.conj()).collect(),
            ..self.clone()
        }
    }

    /// `max_n |f(n) - g(n)|` over the common range, zero-extending the shorter one.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let len = self.values.len().max(other.values.len());
        (0..len)
            .map(|n| (self.get(n) - other.get(n)).norm())
            .fold(0.0, f64::max)
    }

    /// `L²` distance, zero-extending the shorter function.
    pub fn l2_distance(&self, other: &Self) -> f64 {
        let len = self.values.len().max(other.values.len());
        (0..len)
            .map(|n| sphere_weight(self.q(), n) * (self.get(n) - other.get(n)).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn weighted_power_sum(f: &RadialFunction, p: f64) -> f64 {
    let q = f.q();
    let mut sum = 0.0;
    for (n, v) in f.values.iter().enumerate() {
        let a = v.norm();
        if a == 0.0 {
            continue;
        }
        let w = sphere_weight(q, n);
        let term = if w.is_finite() && w < 1e290 {
            w * a.powf(p)
        } else {
            // w(n) alone overflows; combine in log space.
            ((q as f64).ln() * (n as f64 - 1.0) + ((q + 1) as f64).ln() + p * a.ln()).exp()
        };
        sum += term;
    }
    sum
}

/// `(Σ_n w(n)|f(n)|^p)^{1/p}`, or `sup_n |f(n)|` for `p = ∞`.
pub fn lp_norm(f: &RadialFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if p.is_infinite() {
        return Ok(f.sup());
    }
    Ok(weighted_power_sum(f, p).powf(1.0 / p))
}

/// Radial reduction of the mean operator:
/// `(Mf)(0) = f(1)` and `(Mf)(n) = (f(n-1) + Q f(n+1)) / (Q+1)`.
///
/// The entry at `N` needs `f(N+1)` and is therefore zeroed and marked
/// untrusted.
pub fn mean_apply(f: &RadialFunction) -> RadialFunction {
    let n_max = f.radius();
    let q = f.q() as f64;
    let mut out = RadialFunction::zeros(f.params);
    out.values[0] = f.values[1];
    for n in 1..n_max {
        out.values[n] = (f.values[n - 1] + f.values[n + 1] * q) / (q + 1.0);
    }
    out.trusted = f.trusted.min(n_max).saturating_sub(1);
    out
}

/// `L = I - M` on radial data, with the same boundary flagging as [`mean_apply`].
pub fn laplacian_apply(f: &RadialFunction) -> RadialFunction {
    let mut out = mean_apply(f);
    for (o, v) in out.values.iter_mut().zip(&f.values).take(out.trusted + 1) {
        *o = v - *o;
    }
    out
}

/// Explicit tree of radius `R` around the base point, vertices in BFS order.
///
/// The root is vertex 0; children of a vertex are contiguous and the vertices
/// of each level occupy `level_start[l]..level_start[l + 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedTree {
    pub params: TreeParams,
    pub parent: Vec<Option<u32>>,
    pub level: Vec<u32>,
    pub level_start: Vec<usize>,
}

/// Vertex count `1 + Σ_{n=1..R} (Q+1)Q^{n-1}` without building anything.
pub fn truncated_vertex_count(q: u32, radius: usize) -> Option<u128> {
    let params = TreeParams { q, n: radius.max(1) };
    let mut total: u128 = 1;
    for n in 1..=radius {
        total = total.checked_add(sphere_size(&params, n).ok()?)?;
    }
    Some(total)
}

pub fn build_truncated_tree(params: TreeParams) -> Result<TruncatedTree> {
    build_truncated_tree_with_budget(params, DEFAULT_VERTEX_BUDGET)
}

/// Builds the tree of radius `params.n`, refusing if it exceeds `budget` vertices.
pub fn build_truncated_tree_with_budget(params: TreeParams, budget: usize) -> Result<TruncatedTree> {
    let radius = params.n;
    let count = truncated_vertex_count(params.q, radius);
    let budget_err = |vertices| Error::Budget {
        q: params.q,
        radius,
        vertices,
        budget,
    };
    let count = match count {
        Some(c) if c <= budget as u128 => c as usize,
        Some(c) => return Err(budget_err(c)),
        None => return Err(budget_err(u128::MAX)),
    };

    let mut parent = Vec::with_capacity(count);
    let mut level = Vec::with_capacity(count);
    let mut level_start = Vec::with_capacity(radius + 2);
    parent.push(None);
    level.push(0);
    level_start.push(0);
    for l in 1..=radius {
        let prev = level_start[l - 1]..parent.len();
        level_start.push(parent.len());
        let children = if l == 1 { params.q + 1 } else { params.q };
        for v in prev {
            for _ in 0..children {
                parent.push(Some(v as u32));
                level.push(l as u32);
            }
        }
    }
    level_start.push(parent.len());
    Ok(TruncatedTree {
        params,
        parent,
        level,
        level_start,
    })
}

impl TruncatedTree {
    pub fn radius(&self) -> usize {
        self.params.n
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn level_range(&self, l: usize) -> std::ops::Range<usize> {
        self.level_start[l]..self.level_start[l + 1]
    }

    pub fn children(&self, v: usize) -> std::ops::Range<usize> {
        let l = self.level[v] as usize;
        if l >= self.radius() {
            return 0..0;
        }
        if l == 0 {
            return 1..(self.params.q as usize + 2);
        }
        let q = self.params.q as usize;
        let start = self.level_start[l + 1] + (v - self.level_start[l]) * q;
        start..start + q
    }

    /// Neighbours inside the truncated tree: parent first, then children.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.parent[v]
            .map(|p| p as usize)
            .into_iter()
            .chain(self.children(v))
    }

    /// Visits every vertex at distance `<= depth` from `x`, calling
    /// `visit(vertex, distance)`. Requires the ball to lie inside the tree
    /// for the result to be the true sphere structure.
    pub fn for_each_in_ball(&self, x: usize, depth: usize, mut visit: impl FnMut(usize, usize)) {
        let mut stack = vec![(x, usize::MAX, 0usize)];
        while let Some((v, from, d)) = stack.pop() {
            visit(v, d);
            if d == depth {
                continue;
            }
            for y in self.neighbors(v) {
                if y != from {
                    stack.push((y, v, d + 1));
                }
            }
        }
    }
}

/// Complex amplitudes attached to the vertices of a [`TruncatedTree`].
#[derive(Debug, Clone, PartialEq)]
pub struct VertexField {
    pub tree: Arc<TruncatedTree>,
    pub values: Vec<Complex64>,
    pub trusted_radius: usize,
}

impl VertexField {
    pub fn zeros(tree: Arc<TruncatedTree>) -> Self {
        let len = tree.len();
        let radius = tree.radius();
        Self {
            tree,
            values: vec![Complex64::new(0.0, 0.0); len],
            trusted_radius: radius,
        }
    }

    /// Lifts radial data; radii beyond `f`'s truncation index get zero.
    pub fn from_radial(tree: Arc<TruncatedTree>, f: &RadialFunction) -> Self {
        let values = tree.level.iter().map(|&l| f.get(l as usize)).collect();
        let radius = tree.radius();
        Self {
            tree,
            values,
            trusted_radius: radius,
        }
    }

    pub fn delta_root(tree: Arc<TruncatedTree>) -> Self {
        let mut f = Self::zeros(tree);
        f.values[0] = Complex64::new(1.0, 0.0);
        f
    }

    /// Reads one vertex per level up to the trusted radius.
    pub fn radial_profile(&self) -> Result<RadialFunction> {
        let values = (0..=self.trusted_radius)
            .map(|l| self.values[self.tree.level_start[l]])
            .collect();
        RadialFunction::from_values(self.tree.params.q, pad_single(values))
    }

    /// Largest deviation from being constant on spheres, over the trusted range.
    pub fn radial_defect(&self) -> f64 {
        (0..=self.trusted_radius)
            .flat_map(|l| {
                let r = self.tree.level_range(l);
                let first = self.values[r.start];
                self.values[r].iter().map(move |v| (v - first).norm())
            })
            .fold(0.0, f64::max)
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        let range = 0..self.tree.level_start[self.trusted_radius + 1];
        if p.is_infinite() {
            return Ok(self.values[range].iter().map(|v| v.norm()).fold(0.0, f64::max));
        }
        Ok(self.values[range]
            .iter()
            .map(|v| v.norm().powf(p))
            .sum::<f64>()
            .powf(1.0 / p))
    }

    /// Neighbour averaging at every vertex whose neighbours all lie in the tree.
    pub fn mean_apply(&self) -> VertexField {
        let tree = &self.tree;
        let q1 = (tree.params.q + 1) as f64;
        let trusted = self.trusted_radius.min(tree.radius()).saturating_sub(1);
        let mut out = VertexField::zeros(tree.clone());
        for v in 0..tree.level_start[trusted + 1] {
            let s: Complex64 = tree.neighbors(v).map(|y| self.values[y]).sum();
            out.values[v] = s / q1;
        }
        out.trusted_radius = trusted;
        out
    }
}

fn pad_single(mut values: Vec<Complex64>) -> Vec<Complex64> {
    if values.len() < 2 {
        values.resize(2, Complex64::new(0.0, 0.0));
    }
    values
}

/// Brute-force convolution with a radial kernel:
/// `(f ∗ g)(x) = Σ_n g(n) Σ_{y ∈ S(x,n)} f(y)`.
///
/// Exact at every vertex whose ball of radius `supp(g)` fits in the tree,
/// i.e. at radii `<= R - supp(g)`; other vertices are left at zero.
pub fn vertex_convolve(f: &VertexField, g: &RadialFunction) -> Result<VertexField> {
    let tree = &f.tree;
    if g.q() != tree.params.q {
        return Err(Error::Domain(format!(
            "kernel has Q={} but the tree has Q={}",
            g.q(),
            tree.params.q
        )));
    }
    let support = g.support_radius();
    let radius = tree.radius();
    if support > radius {
        return Err(Error::EmptyTrusted { support, radius });
    }
    if support > f.trusted_radius {
        return Err(Error::EmptyTrusted {
            support,
            radius: f.trusted_radius,
        });
    }
    let trusted = f.trusted_radius - support;
    let mut out = VertexField::zeros(tree.clone());
    let mut sums = vec![Complex64::new(0.0, 0.0); support + 1];
    for x in 0..tree.level_start[trusted + 1] {
        sums.iter_mut().for_each(|s| *s = Complex64::new(0.0, 0.0));
        tree.for_each_in_ball(x, support, |y, d| sums[d] += f.values[y]);
        out.values[x] = sums
            .iter()
            .zip(&g.values)
            .map(|(s, gv)| gv * s)
            .sum();
    }
    out.trusted_radius = trusted;
    Ok(out)
}

/// Number of vertices at distance `j` from `o` on the sphere `S(x, k)`, for
/// any `x` with `|x| = n`. Returned as `(j, count)` pairs.
fn sphere_distance_classes(q: u32, n: usize, k: usize) -> Vec<(usize, f64)> {
    let qf = q as f64;
    if k == 0 {
        return vec![(n, 1.0)];
    }
    if n == 0 {
        return vec![(k, sphere_weight(q, k))];
    }
    let mut out = Vec::with_capacity(k.min(n) + 2);
    // i = number of initial steps towards o.
    out.push((n + k, qf.powi(k as i32)));
    for i in 1..k.min(n) {
        out.push((n + k - 2 * i, (qf - 1.0) * qf.powi((k - i - 1) as i32)));
    }
    if k <= n {
        out.push((n - k, 1.0));
    } else {
        out.push((k - n, qf.powi((k - n) as i32)));
    }
    out
}

/// Convolution of two radial functions, computed from the distance-class
/// counts of the tree. The result has truncation index `N_f + N_g`.
pub fn radial_convolve(f: &RadialFunction, g: &RadialFunction) -> Result<RadialFunction> {
    if f.q() != g.q() {
        return Err(Error::Domain(format!(
            "cannot convolve radial functions with Q={} and Q={}",
            f.q(),
            g.q()
        )));
    }
    let q = f.q();
    let n_out = f.radius() + g.radius();
    let mut out = RadialFunction::zeros(TreeParams::new(q, n_out)?);
    for n in 0..=n_out {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, gk) in g.values.iter().enumerate() {
            if *gk == Complex64::new(0.0, 0.0) {
                continue;
            }
            let inner: Complex64 = sphere_distance_classes(q, n, k)
                .into_iter()
                .map(|(j, c)| f.get(j) * c)
                .sum();
            acc += gk * inner;
        }
        out.values[n] = acc;
    }
    out.trusted = f.trusted.min(f.radius()) + g.trusted.min(g.radius());
    Ok(out)
}

/// Empirical Kunze–Stein constant `sup ||f1 ∗ f2||_q / (||f1||_{q'} ||f2||_r)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KunzeSteinReport {
    pub q: f64,
    pub r: f64,
    pub trials: usize,
    pub seed: u64,
    pub ratios: Vec<f64>,
    pub sup_ratio: f64,
}

/// Sampling setup for [`kunze_stein_probe`]: `f1` lives on the ball of radius
/// `f1_radius`, `f2` is radial with support `<= f2_radius`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KunzeSteinProbe {
    pub branching: u32,
    pub f1_radius: usize,
    pub f2_radius: usize,
}

impl Default for KunzeSteinProbe {
    fn default() -> Self {
        Self {
            branching: 2,
            f1_radius: 3,
            f2_radius: 3,
        }
    }
}

fn check_kunze_stein_regime(q: f64, r: f64) -> Result<()> {
    if !(q > 2.0 && q.is_finite()) {
        return Err(Error::Domain(format!("need 2 < q < inf, got q={q}")));
    }
    if !(r > 2.0 && r.is_finite()) {
        return Err(Error::Domain(format!("need 2 < r < inf, got r={r}")));
    }
    if !(q / 2.0 < r && r < q) {
        return Err(Error::Domain(format!(
            "need q/2 < r < q, got q={q}, r={r}"
        )));
    }
    Ok(())
}

/// Ratio `||f1 ∗ f2||_q / (||f1||_{q'} ||f2||_r)` for one pair.
pub fn kunze_stein_ratio(f1: &VertexField, f2: &RadialFunction, q: f64, r: f64) -> Result<f64> {
    let conv = vertex_convolve(f1, f2)?;
    let q_dual = q / (q - 1.0);
    let num = conv.lp_norm(q)?;
    let den = f1.lp_norm(q_dual)? * f2.lp_norm(r)?;
    Ok(num / den)
}

impl KunzeSteinProbe {
    pub fn run(&self, q: f64, r: f64, trials: usize, seed: u64) -> Result<KunzeSteinReport> {
        check_kunze_stein_regime(q, r)?;
        let radius = self.f1_radius + 2 * self.f2_radius;
        if self.branching > ORACLE_MAX_Q || radius > ORACLE_MAX_RADIUS {
            return Err(Error::Domain(format!(
                "oracle tree Q={}, R={radius} exceeds the oracle limits Q<={ORACLE_MAX_Q}, R<={ORACLE_MAX_RADIUS}",
                self.branching
            )));
        }
        let tree = Arc::new(build_truncated_tree(TreeParams::new(self.branching, radius)?)?);
        let ball = tree.level_start[self.f1_radius + 1];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample = |rng: &mut ChaCha8Rng| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        };
        let mut ratios = Vec::with_capacity(trials);
        for _ in 0..trials {
            let mut f1 = VertexField::zeros(tree.clone());
            for v in f1.values.iter_mut().take(ball) {
                *v = sample(&mut rng);
            }
            let values = (0..=self.f2_radius.max(1))
                .map(|k| {
                    if k <= self.f2_radius {
                        sample(&mut rng)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect();
            let f2 = RadialFunction::from_values(self.branching, values)?;
            ratios.push(kunze_stein_ratio(&f1, &f2, q, r)?);
        }
        let sup_ratio = ratios.iter().copied().fold(0.0, f64::max);
        Ok(KunzeSteinReport {
            q,
            r,
            trials,
            seed,
            ratios,
            sup_ratio,
        })
    }
}

/// [`KunzeSteinProbe::run`] with the default sampling setup (`Q = 2`).
pub fn kunze_stein_probe(q: f64, r: f64, trials: usize, seed: u64) -> Result<KunzeSteinReport> {
    KunzeSteinProbe::default().run(q, r, trials, seed)
}
