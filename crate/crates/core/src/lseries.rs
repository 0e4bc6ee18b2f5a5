//! Dirichlet series near `s = 1`: truncated sums, Euler-product logarithms,
//! continuation left of `Re s = 1` and zero finding in `B(1, c₀/log Q)`.
//!
//! Evaluation left of the line uses a [`SeriesModel`]: the Taylor coefficients
//! about `s = 1` of a weighted sum `Σ_{n<=X} w(n) f(n) n^{-s}`, built in one
//! pass over `n`. With the Riesz weight `w(n) = (1 - n/X)^k` the truncation
//! error decays like a power of `X` strictly left of `Re s = 1`, which the
//! sharp cut-off does not. Tail bounds always come from the declared class
//! bound, never from observed decay.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multfun::{log_euler_factor, ClassParams, MultFunc};
use crate::numeric::{chunk_of, exp_integral_e1, integrate, ComplexSum};
use crate::primes::{prime_reduce, Limits};
use crate::sums::map_value_blocks;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Rosser–Schoenfeld: `π(t) < 1.25506 t / log t` for `t > 1`.
const PI_UPPER: f64 = 1.25506;
/// Margin (in `Re s`) kept from the abscissa `1 - 1/log Q`.
pub const CONTINUATION_MARGIN: f64 = 0.01;
/// Riesz order used by default for models.
pub const RIESZ_ORDER: u32 = 4;
/// Default truncation-warning level for Euler-product tails.
pub const TAIL_WARNING: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub s: Complex64,
    /// Sift level; 0 means no sifting.
    pub y: f64,
    pub value: Complex64,
    pub log_value: Option<Complex64>,
    pub truncation: u64,
    pub tail_bound: f64,
    pub warnings: Vec<String>,
}

impl SeriesPoint {
    fn warn(&mut self, msg: String) {
        log::debug!("{msg}");
        self.warnings.push(msg);
    }
}

/// Weighting of the terms `n <= X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Truncation {
    /// `w = 1`, with the boundary term `-M(X) X^{-s}` subtracted so the
    /// result equals `s ∫_1^X M(x) x^{-s-1} dx`.
    Sharp,
    /// `w(n) = (1 - n/X)^k`.
    Riesz(u32),
}

impl Truncation {
    #[inline]
    fn weight(self, n: u64, x: u64) -> f64 {
        match self {
            Truncation::Sharp => 1.0,
            Truncation::Riesz(k) => (1.0 - n as f64 / x as f64).powi(k as i32),
        }
    }
}

/// Sum `per_n(n, f(n), acc)` contributions into a vector of `width`
/// accumulators over `n <= x` (sifted by `y` if `y >= 2`), with the canonical
/// chunk order.
fn chunked_vector_sum<F>(f: &MultFunc, x: u64, y: f64, width: usize, limits: &Limits, per_n: F) -> Result<Vec<Complex64>>
where
    F: Fn(u64, Complex64, &mut [Complex64]) + Sync,
{
    limits.check_sum("X", x)?;
    let sift = (y >= 2.0).then_some(y);
    let blocks = map_value_blocks(f, 1, x + 1, sift, limits, |a, vals| {
        let mut chunks: Vec<Vec<Complex64>> = Vec::new();
        let mut current = u64::MAX;
        for (i, v) in vals.iter().enumerate() {
            let n = a + i as u64;
            if chunk_of(n) != current {
                current = chunk_of(n);
                chunks.push(vec![ZERO; width]);
            }
            if v.re != 0.0 || v.im != 0.0 {
                per_n(n, *v, chunks.last_mut().unwrap());
            }
        }
        chunks
    })?;
    let mut acc = vec![ComplexSum::new(); width];
    for chunk in blocks.into_iter().flatten() {
        for (a, v) in acc.iter_mut().zip(chunk) {
            a.add(v);
        }
    }
    Ok(acc.iter().map(ComplexSum::value).collect())
}

/// `Σ_{n<=X, P⁻(n)>y} f(n) (-log n)^j n^{-s}` for every `s` in `ss`.
pub fn dirichlet_sums(f: &MultFunc, ss: &[Complex64], j: u32, y: f64, x: u64, limits: &Limits) -> Result<Vec<Complex64>> {
    chunked_vector_sum(f, x, y, ss.len(), limits, |n, v, acc| {
        let ln = (n as f64).ln();
        let c = v * (-ln).powi(j as i32);
        for (a, s) in acc.iter_mut().zip(ss) {
            *a += c * (-s * ln).exp();
        }
    })
}

/// `log B(e^u)` for the class bound, valid for `e^u >= Q`.
fn log_bound(params: &ClassParams, u: f64) -> f64 {
    let lq = params.log_q();
    let d = params.d as f64;
    if params.is_strong() {
        (1.0 - 1.0 / lq) * u - (d + 1.0) * u.ln()
    } else {
        (1.0 - params.eta / lq) * u + (params.a - d - 1.0) * lq.ln() - params.a * u.ln()
    }
}

/// Exponent `a` with `B(t) t^{-σ} = t^{1-a} (log t)^{-power} · const`.
fn decay(params: &ClassParams, sigma: f64) -> (f64, f64) {
    let lq = params.log_q();
    if params.is_strong() {
        (sigma - 1.0 + 1.0 / lq, params.d as f64 + 1.0)
    } else {
        (sigma - 1.0 + params.eta / lq, params.a)
    }
}

/// `∫_X^∞ B(t) t^{-σ-1} (log t)^{j-1} (j + |s| log t) dt`, the Abel tail of
/// `Σ_{n>X} f(n) (-log n)^j n^{-s}` against the class bound, plus the
/// boundary term `B(X) (log X)^j X^{-σ}` when `boundary` is set.
pub fn class_tail(params: &ClassParams, sigma: f64, abs_s: f64, j: u32, x: u64, boundary: bool) -> f64 {
    let l = (x as f64).ln();
    if (x as f64) < params.q {
        return f64::INFINITY;
    }
    let (a, power) = decay(params, sigma);
    let jf = j as f64;
    if a < 0.0 || (a == 0.0 && power <= jf + 1.0) {
        return f64::INFINITY;
    }
    let g = |u: f64| (log_bound(params, u) - sigma * u).exp() * u.powf(jf - 1.0) * (jf + abs_s * u);
    // substitute u = e^v and integrate v over [log L, log L + 6]
    let (v0, v1) = (l.ln(), l.ln() + 6.0);
    let q = integrate(|v: f64| g(v.exp()) * v.exp(), v0, v1, 1e-14, 400);
    let u_end = v1.exp();
    let rest = if a > 0.0 {
        g(u_end) / a
    } else {
        g(u_end) * u_end / (power - jf - 1.0)
    };
    let edge = if boundary { (log_bound(params, l) - sigma * l).exp() * l.powf(jf) } else { 0.0 };
    q.value + q.error + rest + edge
}

/// Production `ζ(s)` by the Borwein alternating-series algorithm.
pub fn zeta(s: Complex64) -> Result<Complex64> {
    if s == ONE {
        return Err(Error::Pole);
    }
    const N: usize = 50;
    // d_k = N Σ_{i<=k} (N+i-1)! 4^i / ((N-i)! (2i)!)
    let mut d = Vec::with_capacity(N + 1);
    let mut term = 1.0 / N as f64;
    let mut acc = 0.0;
    for i in 0..=N {
        acc += term;
        d.push(N as f64 * acc);
        let fi = i as f64;
        term *= 4.0 * (N as f64 + fi) * (N as f64 - fi) / ((2.0 * fi + 1.0) * (2.0 * fi + 2.0));
    }
    let dn = d[N];
    let mut eta = ZERO;
    for k in 0..N {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        eta += sign * (d[k] - dn) * (-s * ((k + 1) as f64).ln()).exp();
    }
    eta = -eta / dn;
    let denom = ONE - (Complex64::new(1.0, 0.0) - s).expf(2.0);
    if denom.norm() < 1e-300 {
        return Err(Error::Pole);
    }
    Ok(eta / denom)
}

/// Tail `Σ_{p>P} Σ_k D p^{-kσ}/k` of an Euler-product logarithm.
pub fn euler_tail(d: u32, sigma: f64, cutoff: f64) -> f64 {
    if sigma <= 1.0 {
        return f64::INFINITY;
    }
    let d = d.max(1) as f64;
    let lp = cutoff.max(2.0).ln();
    d * (PI_UPPER * sigma * exp_integral_e1((sigma - 1.0) * lp) + 2.0 * cutoff.powf(1.0 - 2.0 * sigma) / (2.0 * sigma - 1.0))
}

/// Error from cutting the local sums at the rule depth, over primes in `(y, cutoff]`.
fn depth_tail(f: &MultFunc, sigma: f64, y: f64, cutoff: u64) -> f64 {
    let d = f.degree().max(1) as f64;
    let k = f.depth() as f64 + 1.0;
    crate::primes::small_primes(cutoff.min(1000))
        .into_iter()
        .filter(|&p| p as f64 > y)
        .map(|p| {
            let r = (p as f64).powf(-sigma);
            d * r.powf(k) / (1.0 - r)
        })
        .sum()
}

/// `log L_y(s, f) = Σ_{y<p<=cutoff} Σ_k Λ_f(p^k) / (p^{ks} k log p)` with the tail bound.
pub fn log_l_truncated(f: &MultFunc, s: Complex64, y: f64, p_cutoff: u64, limits: &Limits) -> Result<SeriesPoint> {
    log_l_truncated_with(f, s, y, p_cutoff, false, limits)
}

/// As [`log_l_truncated`]; `allow_edge` accepts `Re s = 1`, where the tail is unbounded.
pub fn log_l_truncated_with(
    f: &MultFunc,
    s: Complex64,
    y: f64,
    p_cutoff: u64,
    allow_edge: bool,
    limits: &Limits,
) -> Result<SeriesPoint> {
    Ok(log_l_truncated_grid_with(f, s, &[y], p_cutoff, allow_edge, limits)?.remove(0))
}

/// [`log_l_truncated`] at several sift levels with one prime sweep.
pub fn log_l_truncated_grid(f: &MultFunc, s: Complex64, ys: &[f64], p_cutoff: u64, limits: &Limits) -> Result<Vec<SeriesPoint>> {
    log_l_truncated_grid_with(f, s, ys, p_cutoff, false, limits)
}

fn log_l_truncated_grid_with(
    f: &MultFunc,
    s: Complex64,
    ys: &[f64],
    p_cutoff: u64,
    allow_edge: bool,
    limits: &Limits,
) -> Result<Vec<SeriesPoint>> {
    if s.re < 1.0 || (s.re == 1.0 && !allow_edge) {
        return Err(Error::Divergence(s.re));
    }
    limits.check_prime("p_cutoff", p_cutoff)?;
    let mut cuts: Vec<u64> = ys.iter().map(|&y| if y < 2.0 { 1 } else { (y.floor() as u64).min(p_cutoff) }).collect();
    let mut order: Vec<usize> = (0..ys.len()).collect();
    order.sort_by_key(|&i| cuts[i]);
    let sorted: Vec<u64> = order.iter().map(|&i| cuts[i]).collect();
    let lowest = sorted.first().copied().unwrap_or(1).max(1);
    let (total, at) = prime_reduce::<ComplexSum, _>(lowest + 1, p_cutoff + 1, &sorted, limits, |p| log_euler_factor(f, p, s))?;
    for (k, &i) in order.iter().enumerate() {
        cuts[i] = k as u64;
    }
    let tail = euler_tail(f.degree(), s.re, p_cutoff as f64);
    Ok(ys
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let below = at[cuts[i] as usize];
            let empty = y >= p_cutoff as f64;
            let log_value = if empty { ZERO } else { total - below };
            let mut pt = SeriesPoint {
                s,
                y: y.max(0.0),
                value: log_value.exp(),
                log_value: Some(log_value),
                truncation: p_cutoff,
                tail_bound: tail + depth_tail(f, s.re, y, p_cutoff),
                warnings: Vec::new(),
            };
            if pt.tail_bound > TAIL_WARNING {
                pt.warn(format!("cutoff {p_cutoff} too small: tail bound {:.3e}", pt.tail_bound));
            }
            pt
        })
        .collect())
}

/// `Σ_{n<=X, P⁻(n)>y} f(n) n^{-s}`; the tail uses the class bound when
/// `params` is given and there is no sifting.
pub fn l_truncated(f: &MultFunc, s: Complex64, y: f64, x: u64, params: Option<&ClassParams>, limits: &Limits) -> Result<SeriesPoint> {
    l_derivative(f, s, 0, y, x, params, limits)
}

/// `Σ_{n<=X, P⁻(n)>y} f(n) (-log n)^j n^{-s}`.
pub fn l_derivative(
    f: &MultFunc,
    s: Complex64,
    j: u32,
    y: f64,
    x: u64,
    params: Option<&ClassParams>,
    limits: &Limits,
) -> Result<SeriesPoint> {
    let mut pt = SeriesPoint {
        s,
        y: y.max(0.0),
        value: if j == 0 { ONE } else { ZERO },
        log_value: None,
        truncation: x,
        tail_bound: 0.0,
        warnings: Vec::new(),
    };
    if x < 2 {
        return Ok(pt);
    }
    pt.value = dirichlet_sums(f, &[s], j, y, x, limits)?[0];
    pt.tail_bound = match params {
        Some(p) if y < 2.0 => class_tail(p, s.re, s.norm(), j, x, true),
        _ => f64::INFINITY,
    };
    if !pt.tail_bound.is_finite() {
        pt.warn(format!("no tail estimate for {} at s = {s}", f.label()));
    }
    Ok(pt)
}

fn check_continuation(params: &ClassParams, re: f64) -> Result<()> {
    if !params.is_strong() {
        return Err(Error::domain("continuation needs the strong class (eta = 1)"));
    }
    let abscissa = 1.0 - 1.0 / params.log_q();
    if re <= abscissa + CONTINUATION_MARGIN {
        return Err(Error::Margin { re, abscissa, margin: CONTINUATION_MARGIN });
    }
    Ok(())
}

/// Closed-form strong-class tail `|s| X^{-a} / (a (log X)^{D+1})`, `a = σ - 1 + 1/log Q`.
fn strong_tail(params: &ClassParams, s: Complex64, x: u64) -> f64 {
    let l = (x as f64).ln();
    let a = s.re - 1.0 + 1.0 / params.log_q();
    if a <= 0.0 || (x as f64) < params.q {
        return f64::INFINITY;
    }
    s.norm() * (-a * l).exp() / (a * l.powi(params.d as i32 + 1))
}

/// `L(s, f) ≈ s ∫_1^X M_f(x) x^{-s-1} dx = Σ_{n<=X} f(n) n^{-s} - M_f(X) X^{-s}`.
pub fn l_continuation(f: &MultFunc, params: &ClassParams, s: Complex64, x: u64, limits: &Limits) -> Result<SeriesPoint> {
    check_continuation(params, s.re)?;
    let v = dirichlet_sums(f, &[s, ZERO], 0, 0.0, x, limits)?;
    let value = v[0] - v[1] * (-s * (x as f64).ln()).exp();
    Ok(SeriesPoint { s, y: 0.0, value, log_value: None, truncation: x, tail_bound: strong_tail(params, s, x), warnings: Vec::new() })
}

/// Taylor model of a weighted truncated Dirichlet series about a real centre.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesModel {
    pub label: String,
    pub center: f64,
    pub radius: f64,
    /// `a_j` with `L(s) ≈ Σ_j a_j (s - center)^j`.
    pub coeffs: Vec<Complex64>,
    pub truncation: u64,
    pub weighting: Truncation,
    pub params: Option<ClassParams>,
}

impl SeriesModel {
    pub fn build(
        f: &MultFunc,
        center: f64,
        radius: f64,
        x: u64,
        weighting: Truncation,
        params: Option<&ClassParams>,
        limits: &Limits,
    ) -> Result<Self> {
        if !(radius > 0.0) || x < 2 {
            return Err(Error::domain("series model needs radius > 0 and X >= 2"));
        }
        let lx = (x as f64).ln();
        let rl = radius * lx;
        let mass = lx.powi(f.degree().max(1) as i32) + 1.0;
        let mut k = 8usize;
        let mut term: f64 = (1..=k).map(|i| rl / i as f64).product();
        while term * rl.exp() * mass > 1e-16 && k < 400 {
            k += 1;
            term *= rl / k as f64;
        }
        let width = k + 1;
        let mut coeffs = chunked_vector_sum(f, x, 0.0, width, limits, |n, v, acc| {
            let ln = (n as f64).ln();
            let mut t = v * (weighting.weight(n, x) * (-center * ln).exp());
            acc[0] += t;
            for (j, a) in acc.iter_mut().enumerate().skip(1) {
                t *= -ln / j as f64;
                *a += t;
            }
        })?;
        if weighting == Truncation::Sharp {
            let m = crate::sums::partial_sum(f, x, limits)?;
            let mut t = m * (-center * lx).exp();
            for (j, a) in coeffs.iter_mut().enumerate() {
                if j > 0 {
                    t *= -lx / j as f64;
                }
                *a -= t;
            }
        }
        Ok(Self { label: f.label().to_string(), center, radius, coeffs, truncation: x, weighting, params: params.copied() })
    }

    fn offset(&self, s: Complex64) -> Result<Complex64> {
        let z = s - self.center;
        if z.norm() > self.radius * (1.0 + 1e-9) {
            return Err(Error::domain(format!("s = {s} is outside the model disc of radius {}", self.radius)));
        }
        Ok(z)
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let z = self.offset(s)?;
        Ok(self.coeffs.iter().rev().fold(ZERO, |acc, a| acc * z + a))
    }

    /// `d^j/ds^j` of the model.
    pub fn derivative(&self, s: Complex64, j: usize) -> Result<Complex64> {
        let z = self.offset(s)?;
        let mut acc = ZERO;
        for i in (j..self.coeffs.len()).rev() {
            let falling: f64 = ((i - j + 1)..=i).map(|t| t as f64).product();
            acc = acc * z + self.coeffs[i] * falling;
        }
        Ok(acc)
    }

    /// Bound on `|L(s) - model(s)|` from the class bound (infinite without parameters).
    pub fn tail_bound(&self, s: Complex64) -> f64 {
        let Some(params) = self.params.as_ref() else { return f64::INFINITY };
        let x = self.truncation;
        match self.weighting {
            Truncation::Sharp if params.is_strong() => strong_tail(params, s, x),
            Truncation::Sharp => class_tail(params, s.re, s.norm(), 0, x, true),
            Truncation::Riesz(k) => {
                let far = class_tail(params, s.re, s.norm(), 0, x, false);
                let lq = params.log_q();
                let lx = (x as f64).ln();
                let d = params.d as i32;
                let sigma = s.re;
                let low = integrate(|u: f64| (u * (2.0 - sigma)).exp() * (1.0 + u).powi(d - 1), 0.0, lq.min(lx), 1e-12, 200);
                let high = if lx > lq {
                    integrate(|u: f64| (log_bound(params, u) + u * (1.0 - sigma)).exp(), lq, lx, 1e-12, 400)
                } else {
                    crate::numeric::Quadrature { value: 0.0, error: 0.0, intervals: 0 }
                };
                let near = k as f64 * (s.norm() + 1.0) / x as f64 * (low.value + low.error + high.value + high.error);
                far + near
            }
        }
    }

    pub fn point(&self, s: Complex64) -> Result<SeriesPoint> {
        Ok(SeriesPoint {
            s,
            y: 0.0,
            value: self.eval(s)?,
            log_value: None,
            truncation: self.truncation,
            tail_bound: self.tail_bound(s),
            warnings: Vec::new(),
        })
    }
}

/// Sifted values `L_y(s, τ_k * g)` via
/// `[ζ(s) Π_{p<=y}(1 - p^{-s})]^k · L(s, g) / Π_{p<=y} E_p(s, g)`.
///
/// `L(s, g)` comes from a Riesz [`SeriesModel`]; the finite Euler products
/// are accumulated over primes in one ordered sweep per `(s, k)`.
#[derive(Debug, Clone)]
pub struct SiftedSeries {
    g: MultFunc,
    model: SeriesModel,
}

impl SiftedSeries {
    pub fn new(g: &MultFunc, radius: f64, x: u64, limits: &Limits) -> Result<Self> {
        let model = SeriesModel::build(g, 1.0, radius, x, Truncation::Riesz(RIESZ_ORDER), None, limits)?;
        Ok(Self { g: g.clone(), model })
    }

    pub fn model(&self) -> &SeriesModel {
        &self.model
    }

    /// `L_y(s, τ_k * g)` for each `y` in `ys` (any order, `y >= 2`).
    pub fn values(&self, s: f64, k: u32, ys: &[f64], limits: &Limits) -> Result<Vec<Complex64>> {
        if k > 0 && s <= 1.0 {
            return Err(Error::Pole);
        }
        let sc = Complex64::new(s, 0.0);
        let full = self.model.eval(sc)?;
        let zeta_log = if k > 0 { zeta(sc)?.ln() * k as f64 } else { ZERO };
        let mut order: Vec<usize> = (0..ys.len()).collect();
        order.sort_by(|&a, &b| ys[a].total_cmp(&ys[b]));
        let cuts: Vec<u64> = order.iter().map(|&i| ys[i].max(1.0).floor() as u64).collect();
        let top = cuts.last().copied().unwrap_or(1);
        let kf = k as f64;
        let g = &self.g;
        let (_, at) = prime_reduce::<ComplexSum, _>(2, top + 1, &cuts, limits, |p| {
            let local = if k > 0 { (ONE - (-sc * (p as f64).ln()).exp()).ln() * kf } else { ZERO };
            local - log_euler_factor(g, p, sc)
        })?;
        let mut out = vec![ZERO; ys.len()];
        for (pos, &i) in order.iter().enumerate() {
            out[i] = (zeta_log + at[pos]).exp() * full;
        }
        Ok(out)
    }
}

/// One zero with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub rho: Complex64,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    pub center: Complex64,
    pub radius: f64,
    /// Sorted by `|ρ - 1|`.
    pub zeros: Vec<Zero>,
    pub total: u32,
    /// Raw winding estimate of the final contour.
    pub winding: f64,
    pub contour_points: usize,
    pub truncation: u64,
    /// Class-bound error on the contour.
    pub tail_bound: f64,
}

/// Knobs for [`find_zeros_with`].
#[derive(Debug, Clone, Copy)]
pub struct ZeroOptions {
    pub min_points: usize,
    pub max_points: usize,
    pub weighting: Truncation,
}

impl Default for ZeroOptions {
    fn default() -> Self {
        Self { min_points: 64, max_points: 1 << 16, weighting: Truncation::Riesz(RIESZ_ORDER) }
    }
}

/// Count and locate the zeros of `L(s, f)` in `B(1, c0/log Q)`.
pub fn find_zeros(f: &MultFunc, params: &ClassParams, c0: f64, x: u64, limits: &Limits) -> Result<ZeroSet> {
    find_zeros_with(f, params, c0, x, ZeroOptions::default(), limits)
}

/// Relative radii tried when the contour passes too close to a zero.
const RADIUS_STEPS: [f64; 4] = [1.0, 1.05, 0.95, 1.1025];
const CONTOUR_FLOOR: f64 = 1e-8;

pub fn find_zeros_with(
    f: &MultFunc,
    params: &ClassParams,
    c0: f64,
    x: u64,
    opts: ZeroOptions,
    limits: &Limits,
) -> Result<ZeroSet> {
    if !(c0 > 0.0 && c0 <= 1.0) {
        return Err(Error::domain(format!("c0 must lie in (0, 1], got {c0}")));
    }
    let base = c0 / params.log_q();
    let widest = base * RADIUS_STEPS.iter().cloned().fold(0.0, f64::max);
    check_continuation(params, 1.0 - widest)?;
    let model = SeriesModel::build(f, 1.0, widest, x, opts.weighting, Some(params), limits)?;
    let mut last_err = None;
    for step in RADIUS_STEPS {
        let r = base * step;
        match contour(&model, r, opts) {
            Ok(c) => return finish_zeros(&model, params, r, c),
            Err(e @ Error::ContourThroughZero { .. }) => {
                log::warn!("{e}; perturbing the radius");
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap())
}

struct Contour {
    n: usize,
    winding: f64,
    /// `p_j = Σ (ρ - 1)^j`, `j = 1..=count`.
    power_sums: Vec<Complex64>,
    count: u32,
    min_abs: f64,
}

fn contour(model: &SeriesModel, r: f64, opts: ZeroOptions) -> Result<Contour> {
    use rayon::prelude::*;
    let mut n = opts.min_points.max(16);
    let mut previous: Option<f64> = None;
    let mut last = f64::NAN;
    while n <= opts.max_points {
        let samples: Vec<(Complex64, Complex64, Complex64)> = (0..n)
            .into_par_iter()
            .map(|k| {
                let z = Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / n as f64);
                let s = z + 1.0;
                (z, model.eval(s).unwrap(), model.derivative(s, 1).unwrap())
            })
            .collect();
        let min_abs = samples.iter().map(|t| t.1.norm()).fold(f64::INFINITY, f64::min);
        if min_abs < CONTOUR_FLOOR {
            return Err(Error::ContourThroughZero { radius: r, min_abs });
        }
        let mut acc = ComplexSum::new();
        for (z, l, dl) in &samples {
            acc.add(dl / l * z);
        }
        let w = acc.value() / n as f64;
        let winding = w.re;
        let mut phase = 0.0;
        let mut max_step: f64 = 0.0;
        for k in 0..n {
            let step = (samples[(k + 1) % n].1 / samples[k].1).arg();
            max_step = max_step.max(step.abs());
            phase += step;
        }
        let phase_winding = phase / std::f64::consts::TAU;
        let count = winding.round();
        let settled = previous.is_some_and(|p| (p - winding).abs() < 1e-6)
            && (winding - count).abs() < 0.1
            && w.im.abs() < 0.1
            && max_step <= std::f64::consts::FRAC_PI_4
            && phase_winding.round() == count;
        if settled {
            let count = count.max(0.0) as u32;
            let power_sums = (1..=count as i32)
                .map(|j| {
                    let mut acc = ComplexSum::new();
                    for (z, l, dl) in &samples {
                        acc.add(dl / l * z.powi(j + 1));
                    }
                    acc.value() / n as f64
                })
                .collect();
            return Ok(Contour { n, winding, power_sums, count, min_abs });
        }
        previous = Some(winding);
        last = winding;
        n *= 2;
    }
    Err(Error::NonIntegerWinding(last))
}

/// Roots of `z^n - e_1 z^{n-1} + e_2 z^{n-2} - ...` from the power sums.
fn roots_from_power_sums(p: &[Complex64], scale: f64) -> Vec<Complex64> {
    let n = p.len();
    if n == 0 {
        return Vec::new();
    }
    let ps: Vec<Complex64> = p.iter().enumerate().map(|(i, v)| v / scale.powi(i as i32 + 1)).collect();
    let mut e = vec![ONE];
    for k in 1..=n {
        let mut acc = ZERO;
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += e[k - i] * ps[i - 1] * sign;
        }
        e.push(acc / k as f64);
    }
    // monic coefficients, highest degree first
    let coeffs: Vec<Complex64> = (0..=n).map(|k| if k % 2 == 0 { e[k] } else { -e[k] }).collect();
    let poly = |z: Complex64| coeffs.iter().fold(ZERO, |acc, c| acc * z + c);
    let mut roots: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(0.4 + 0.5 * k as f64 / n as f64, 0.9 + 2.1 * k as f64)).collect();
    for _ in 0..500 {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let mut denom = ONE;
            for j in 0..n {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = poly(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 {
            break;
        }
    }
    roots.into_iter().map(|z| z * scale).collect()
}

fn newton(model: &SeriesModel, start: Complex64, mult: u32, r: f64) -> Complex64 {
    let h = 1e-5 * r;
    let mut s = start;
    for _ in 0..60 {
        let (Ok(l), Ok(lp), Ok(lm)) = (model.eval(s), model.eval(s + h), model.eval(s - h)) else { return start };
        let dl = (lp - lm) / (2.0 * h);
        if dl.norm() == 0.0 {
            break;
        }
        let step = l / dl * mult as f64;
        s -= step;
        if (s - start).norm() > 0.1 * r {
            return start;
        }
        if step.norm() <= 1e-9 {
            break;
        }
    }
    s
}

/// Agglomerative merge of roots (relative to 1). Two clusters merge when they
/// are numerically coincident, or when they are close and the model cannot
/// tell `L` at their mean apart from zero within its truncation error.
fn cluster_roots(model: &SeriesModel, roots: &[Complex64], r: f64) -> Vec<Vec<Complex64>> {
    let mut clusters: Vec<Vec<Complex64>> = roots.iter().map(|&z| vec![z]).collect();
    let mean = |c: &[Complex64]| c.iter().sum::<Complex64>() / c.len() as f64;
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let d = (mean(&clusters[i]) - mean(&clusters[j])).norm();
                let merge = d < 1e-3 * r || {
                    d < 0.1 * r && {
                        let joint: Vec<Complex64> = clusters[i].iter().chain(&clusters[j]).copied().collect();
                        let s = mean(&joint) + 1.0;
                        model.eval(s).map_or(false, |v| v.norm() <= model.tail_bound(s))
                    }
                };
                if merge && best.map_or(true, |(_, _, b)| d < b) {
                    best = Some((i, j, d));
                }
            }
        }
        match best {
            Some((i, j, _)) => {
                let moved = clusters.remove(j);
                clusters[i].extend(moved);
            }
            None => return clusters,
        }
    }
}

fn finish_zeros(model: &SeriesModel, params: &ClassParams, r: f64, c: Contour) -> Result<ZeroSet> {
    let roots = roots_from_power_sums(&c.power_sums, r);
    let mut zeros = Vec::new();
    for members in cluster_roots(model, &roots, r) {
        let mult = members.len() as u32;
        let mean = members.iter().sum::<Complex64>() / mult as f64 + 1.0;
        let mut rho = newton(model, mean, mult, r);
        if (rho - 1.0).norm() > r * (1.0 + 1e-6) {
            rho = mean;
        }
        zeros.push(Zero { rho, multiplicity: mult });
    }
    zeros.sort_by(|a, b| (a.rho - 1.0).norm().total_cmp(&(b.rho - 1.0).norm()).then(a.rho.im.total_cmp(&b.rho.im)));
    let total = c.count;
    if total > params.d {
        return Err(Error::Check(format!("{total} zeros in the ball exceed D = {}", params.d)));
    }
    log::debug!("contour r = {r}: {} points, min |L| = {:.3e}", c.n, c.min_abs);
    let tail_bound = model.tail_bound(Complex64::new(1.0 - r, 0.0));
    Ok(ZeroSet {
        center: ONE,
        radius: r,
        zeros,
        total,
        winding: c.winding,
        contour_points: c.n,
        truncation: model.truncation,
        tail_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityReport {
    pub m: u32,
    /// `|L^{(j)}(1)|` for `j = 0..=D`.
    pub derivatives: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub degenerate: bool,
}

/// Smallest `j <= D` with `|L^{(j)}(1)| > θ (log Q)^j`.
pub fn detect_multiplicity(f: &MultFunc, params: &ClassParams, theta: f64, x: u64, limits: &Limits) -> Result<u32> {
    Ok(multiplicity_report(f, params, theta, x, limits)?.m)
}

pub fn multiplicity_report(f: &MultFunc, params: &ClassParams, theta: f64, x: u64, limits: &Limits) -> Result<MultiplicityReport> {
    if !(theta > 0.0) {
        return Err(Error::domain("theta must be positive"));
    }
    let model = SeriesModel::build(f, 1.0, 0.05, x, Truncation::Riesz(RIESZ_ORDER), Some(params), limits)?;
    let lq = params.log_q();
    let mut derivatives = Vec::new();
    let mut thresholds = Vec::new();
    let mut m = None;
    for j in 0..=params.d as usize {
        let v = model.derivative(ONE, j)?.norm();
        let t = theta * lq.powi(j as i32);
        derivatives.push(v);
        thresholds.push(t);
        if m.is_none() && v > t {
            m = Some(j as u32);
        }
    }
    let degenerate = m.is_none();
    if degenerate {
        log::warn!("all derivatives of L({}) at 1 are below threshold; reporting m = D", f.label());
    }
    Ok(MultiplicityReport { m: m.unwrap_or(params.d), derivatives, thresholds, degenerate })
}
