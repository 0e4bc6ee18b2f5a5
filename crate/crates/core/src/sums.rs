//! Summation engines: partial sums `M_f(x)`, sifted sums over `P⁻(n) > y`,
//! logarithmic prime sums over intervals and Chebyshev-weighted prime sums.
//!
//! Values `f(n)` for a whole block are produced by a multiplicative sieve:
//! every entry starts at 1, each base prime `p <= sqrt(hi)` multiplies in
//! `f(p^e)` for the exact power dividing `n`, and whatever cofactor remains is
//! a single prime contributing `f(q)`. Reductions go through the canonical
//! chunk scheme of [`crate::numeric`].

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multfun::{ClassParams, MultFunc};
use crate::numeric::{aligned_segments, cuts_in, fold_segments, ChunkReducer, ComplexSum, Neumaier};
use crate::primes::{isqrt, prime_reduce, small_primes, Limits, PrimeSegment};

/// Sifted sums switch from enumeration to sieving above this many surviving primes.
pub const ENUMERATION_SWITCH: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumKind {
    Partial,
    Sifted,
    PrimeLog,
    Chebyshev,
    Heuristic,
}

impl SumKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SumKind::Partial => "partial",
            SumKind::Sifted => "sifted",
            SumKind::PrimeLog => "prime_log",
            SumKind::Chebyshev => "chebyshev",
            SumKind::Heuristic => "heuristic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "partial" => SumKind::Partial,
            "sifted" => SumKind::Sifted,
            "prime_log" => SumKind::PrimeLog,
            "chebyshev" => SumKind::Chebyshev,
            "heuristic" => SumKind::Heuristic,
            _ => return None,
        })
    }
}

/// An evaluated sum with the data needed to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumRecord {
    pub kind: SumKind,
    pub label: String,
    pub lo: f64,
    pub hi: f64,
    pub j_shift: u32,
    pub value: Complex64,
    pub truncation: u64,
    pub error_budget: f64,
}

pub const CSV_HEADER: &str = "kind,f,lo,hi,j,value_re,value_im,truncation,error_budget";

impl SumRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.kind.as_str(),
            csv_quote(&self.label),
            self.lo,
            self.hi,
            self.j_shift,
            self.value.re,
            self.value.im,
            self.truncation,
            self.error_budget
        )
    }

    pub fn from_csv_row(row: &str) -> Result<Self> {
        let fields = split_csv(row);
        if fields.len() != 9 {
            return Err(Error::domain(format!("expected 9 CSV fields, got {}", fields.len())));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i].parse::<f64>().map_err(|_| Error::domain(format!("bad number `{}`", fields[i])))
        };
        Ok(SumRecord {
            kind: SumKind::parse(&fields[0]).ok_or_else(|| Error::domain(format!("bad kind `{}`", fields[0])))?,
            label: fields[1].clone(),
            lo: num(2)?,
            hi: num(3)?,
            j_shift: fields[4].parse().map_err(|_| Error::domain("bad j"))?,
            value: Complex64::new(num(5)?, num(6)?),
            truncation: fields[7].parse().map_err(|_| Error::domain("bad truncation"))?,
            error_budget: num(8)?,
        })
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn split_csv(row: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = row.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}

/// Multiplicative value sieve for blocks below a fixed `hi`.
pub(crate) struct ValueSieve<'a> {
    f: &'a MultFunc,
    base: Vec<u64>,
    tables: Vec<Vec<Complex64>>,
}

impl<'a> ValueSieve<'a> {
    pub(crate) fn new(f: &'a MultFunc, hi: u64) -> Result<Self> {
        let base = small_primes(isqrt(hi.saturating_sub(1)));
        let mut tables = Vec::with_capacity(base.len());
        for &p in &base {
            let mut k = 1u32;
            let mut pk = p;
            while pk.saturating_mul(p) < hi {
                pk *= p;
                k += 1;
            }
            tables.push(f.local(p, k)?);
        }
        if hi > 2 && f.depth() < 1 {
            return Err(Error::domain("rule depth must be at least 1"));
        }
        Ok(Self { f, base, tables })
    }

    /// Values `f(n)` for `n` in `[lo, hi)`, `lo >= 1`.
    pub(crate) fn block(&self, lo: u64, hi: u64) -> Vec<Complex64> {
        let len = (hi - lo) as usize;
        let mut vals = vec![Complex64::new(1.0, 0.0); len];
        let mut rem: Vec<u64> = (lo..hi).collect();
        for (&p, table) in self.base.iter().zip(&self.tables) {
            let mut m = lo.div_ceil(p) * p;
            while m < hi {
                let i = (m - lo) as usize;
                let mut r = rem[i] / p;
                let mut e = 1;
                while r % p == 0 {
                    r /= p;
                    e += 1;
                }
                rem[i] = r;
                vals[i] *= table[e];
                m += p;
            }
        }
        for (v, &r) in vals.iter_mut().zip(&rem) {
            if r > 1 && *v != Complex64::new(0.0, 0.0) {
                *v *= self.f.raw(r, 1);
            }
        }
        vals
    }
}

/// Marks integers in `[lo, hi)` that have a prime factor `<= y`.
fn sift_mask(lo: u64, hi: u64, sift_primes: &[u64]) -> Vec<bool> {
    let mut hit = vec![false; (hi - lo) as usize];
    for &p in sift_primes {
        let mut m = lo.div_ceil(p) * p;
        while m < hi {
            hit[(m - lo) as usize] = true;
            m += p;
        }
    }
    hit
}

/// Run `per_block(lo, values)` over aligned blocks of `[lo, hi)` in parallel,
/// returning the results in block order. With `sift = Some(y)`, values of
/// integers with a prime factor `<= y` are replaced by zero.
pub(crate) fn map_value_blocks<T, F>(
    f: &MultFunc,
    lo: u64,
    hi: u64,
    sift: Option<f64>,
    limits: &Limits,
    per_block: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &[Complex64]) -> T + Sync,
{
    let lo = lo.max(1);
    if lo >= hi {
        return Ok(Vec::new());
    }
    let sieve = ValueSieve::new(f, hi)?;
    let sift_primes = match sift {
        Some(y) if y >= 2.0 => small_primes((y.floor() as u64).min(hi)),
        _ => Vec::new(),
    };
    let parts = aligned_segments(lo, hi, limits.reduction_segment());
    Ok(parts
        .par_iter()
        .map(|&(a, b)| {
            let mut vals = sieve.block(a, b);
            if !sift_primes.is_empty() {
                for (v, hit) in vals.iter_mut().zip(sift_mask(a, b, &sift_primes)) {
                    if hit {
                        *v = Complex64::new(0.0, 0.0);
                    }
                }
            }
            per_block(a, &vals)
        })
        .collect())
}

fn ordered_sums_at(f: &MultFunc, xs: &[u64], sift: Option<f64>, limits: &Limits) -> Result<Vec<Complex64>> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by_key(|&i| xs[i]);
    let cuts: Vec<u64> = order.iter().map(|&i| xs[i]).collect();
    let Some(&top) = cuts.last() else { return Ok(Vec::new()) };
    limits.check_sum("x", top)?;
    let nblocks = aligned_segments(1, top + 1, limits.reduction_segment()).len();
    let outs = map_value_blocks(f, 1, top + 1, sift, limits, |a, vals| {
        let b = a + vals.len() as u64;
        let first = a == 1;
        let last = b == top + 1;
        let (c0, c1) = cuts_in(&cuts, if first { 0 } else { a }, if last { u64::MAX } else { b });
        let mut red = ChunkReducer::<ComplexSum>::new(&cuts[c0..c1], c0);
        for (i, v) in vals.iter().enumerate() {
            if v.re != 0.0 || v.im != 0.0 {
                red.push(a + i as u64, *v);
            }
        }
        red.finish()
    })?;
    debug_assert_eq!(outs.len(), nblocks);
    let (_, at) = fold_segments::<ComplexSum>(outs, cuts.len());
    let mut result = vec![Complex64::new(0.0, 0.0); xs.len()];
    for (k, &i) in order.iter().enumerate() {
        result[i] = at[k];
    }
    Ok(result)
}

/// `M_f(x) = Σ_{n<=x} f(n)` at every requested `x` (any order) in one sweep.
pub fn partial_sums_at(f: &MultFunc, xs: &[u64], limits: &Limits) -> Result<Vec<Complex64>> {
    ordered_sums_at(f, xs, None, limits)
}

/// `M_f(x) = Σ_{n<=x} f(n)`.
pub fn partial_sum(f: &MultFunc, x: u64, limits: &Limits) -> Result<Complex64> {
    if x == 0 {
        return Err(Error::domain("partial_sum needs x >= 1"));
    }
    Ok(partial_sums_at(f, &[x], limits)?[0])
}

/// Rounding budget for a sum of `terms` values bounded by `scale`.
fn rounding_budget(terms: f64, scale: f64) -> f64 {
    4.0 * f64::EPSILON * terms.max(1.0) * scale.max(1.0)
}

pub fn partial_sum_record(f: &MultFunc, x: u64, limits: &Limits) -> Result<SumRecord> {
    let value = partial_sum(f, x, limits)?;
    let scale = (1.0 + (x as f64).ln()).powi(f.degree() as i32 - 1);
    Ok(SumRecord {
        kind: SumKind::Partial,
        label: f.label().to_string(),
        lo: 1.0,
        hi: x as f64,
        j_shift: 0,
        value,
        truncation: x,
        error_budget: rounding_budget(x as f64, scale),
    })
}

/// Number of primes in `[lo, hi)`.
pub fn prime_count(lo: u64, hi: u64, limits: &Limits) -> Result<u64> {
    limits.check_prime("hi", hi.saturating_sub(1))?;
    let lo = lo.max(2);
    if lo >= hi {
        return Ok(0);
    }
    let base = small_primes(isqrt(hi - 1));
    let parts = aligned_segments(lo, hi, limits.reduction_segment());
    Ok(parts.par_iter().map(|&(a, b)| PrimeSegment::sieve(a, b, &base).count() as u64).sum())
}

/// Which path [`sifted_sum`] takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiftStrategy {
    Auto,
    Enumerate,
    Sieve,
}

/// `Σ_{n<=x, P⁻(n)>y} f(n)`.
pub fn sifted_sum(f: &MultFunc, x: u64, y: f64, limits: &Limits) -> Result<Complex64> {
    sifted_sum_with(f, x, y, SiftStrategy::Auto, limits)
}

pub fn sifted_sum_with(f: &MultFunc, x: u64, y: f64, strategy: SiftStrategy, limits: &Limits) -> Result<Complex64> {
    if x == 0 {
        return Err(Error::domain("sifted_sum needs x >= 1"));
    }
    limits.check_sum("x", x)?;
    if y < 2.0 {
        return partial_sum(f, x, limits);
    }
    if y >= x as f64 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let y_int = y.floor() as u64;
    let use_enum = match strategy {
        SiftStrategy::Enumerate => true,
        SiftStrategy::Sieve => false,
        SiftStrategy::Auto => prime_count(y_int + 1, x + 1, limits)? <= ENUMERATION_SWITCH,
    };
    if use_enum {
        let primes: Vec<u64> = crate::primes::primes_stream(y_int + 1, x + 1, limits.segment_size.max(64), limits)?.collect();
        let mut acc = ComplexSum::new();
        enumerate_sifted(f, &primes, 0, 1, Complex64::new(1.0, 0.0), x, &mut acc)?;
        Ok(acc.value())
    } else {
        Ok(ordered_sums_at(f, &[x], Some(y), limits)?[0])
    }
}

fn enumerate_sifted(
    f: &MultFunc,
    primes: &[u64],
    start: usize,
    n: u64,
    val: Complex64,
    x: u64,
    acc: &mut ComplexSum,
) -> Result<()> {
    acc.add(val);
    for i in start..primes.len() {
        let p = primes[i];
        if n.saturating_mul(p) > x {
            break;
        }
        let mut m = n * p;
        let mut k = 1;
        loop {
            let v = val * f.at(p, k)?;
            if v.re != 0.0 || v.im != 0.0 {
                enumerate_sifted(f, primes, i + 1, m, v, x, acc)?;
            }
            match m.checked_mul(p) {
                Some(next) if next <= x => {
                    m = next;
                    k += 1;
                }
                _ => break,
            }
        }
    }
    Ok(())
}

fn prime_range(lo: f64, hi: f64, limits: &Limits) -> Result<(u64, u64)> {
    if !(lo >= 2.0) || !(lo <= hi) {
        return Err(Error::domain(format!("prime interval needs 2 <= lo <= hi, got ({lo}, {hi}]")));
    }
    let top = hi.floor() as u64;
    limits.check_sum("hi", top)?;
    Ok((lo.floor() as u64 + 1, top + 1))
}

/// `Σ_{lo<p<=hi} (Re f(p) + j) / p`.
pub fn prime_log_sum(f: &MultFunc, lo: f64, hi: f64, j: u32, limits: &Limits) -> Result<f64> {
    let (a, b) = prime_range(lo, hi, limits)?;
    let jf = j as f64;
    let (v, _) = prime_reduce::<Neumaier, _>(a, b, &[], limits, |p| (f.raw(p, 1).re + jf) / p as f64)?;
    Ok(v)
}

pub fn prime_log_record(f: &MultFunc, lo: f64, hi: f64, j: u32, limits: &Limits) -> Result<SumRecord> {
    let v = prime_log_sum(f, lo, hi, j, limits)?;
    Ok(SumRecord {
        kind: SumKind::PrimeLog,
        label: f.label().to_string(),
        lo,
        hi,
        j_shift: j,
        value: Complex64::new(v, 0.0),
        truncation: hi.floor() as u64,
        error_budget: rounding_budget(hi.ln().max(1.0), (f.degree() + j) as f64),
    })
}

/// Cumulative prime sums `Σ_{p<=x} Re f(p)/p` and `Σ_{p<=x} 1/p` at sorted breakpoints.
///
/// Interval sums for any shift follow by differences, which is how the
/// structure verifier evaluates many sub-intervals with one sweep.
#[derive(Debug, Clone)]
pub struct PrimeLogTable {
    pub points: Vec<f64>,
    re_part: Vec<f64>,
    inv_part: Vec<f64>,
}

impl PrimeLogTable {
    pub fn build(f: &MultFunc, points: &[f64], limits: &Limits) -> Result<Self> {
        let mut points = points.to_vec();
        points.sort_by(f64::total_cmp);
        points.dedup();
        if points.first().is_some_and(|&p| !(p >= 2.0)) {
            return Err(Error::domain("breakpoints must be >= 2"));
        }
        let cuts: Vec<u64> = points.iter().map(|p| p.floor() as u64).collect();
        let top = cuts.last().copied().unwrap_or(2);
        limits.check_sum("hi", top)?;
        let (_, re_part) = prime_reduce::<Neumaier, _>(2, top + 1, &cuts, limits, |p| f.raw(p, 1).re / p as f64)?;
        let (_, inv_part) = prime_reduce::<Neumaier, _>(2, top + 1, &cuts, limits, |p| 1.0 / p as f64)?;
        Ok(Self { points, re_part, inv_part })
    }

    fn index(&self, x: f64) -> Result<usize> {
        self.points
            .binary_search_by(|p| p.total_cmp(&x))
            .map_err(|_| Error::domain(format!("{x} is not a breakpoint of the table")))
    }

    /// `Σ_{lo<p<=hi} (Re f(p) + j)/p` for breakpoints `lo <= hi`.
    pub fn interval(&self, lo: f64, hi: f64, j: u32) -> Result<f64> {
        let (a, b) = (self.index(lo)?, self.index(hi)?);
        let re = self.re_part[b] - self.re_part[a];
        let inv = self.inv_part[b] - self.inv_part[a];
        Ok(re + j as f64 * inv)
    }
}

/// `Σ_{p<=x} f(p) log p`.
pub fn chebyshev_sum(f: &MultFunc, x: u64, limits: &Limits) -> Result<Complex64> {
    limits.check_sum("x", x)?;
    let (v, _) = prime_reduce::<ComplexSum, _>(2, x + 1, &[], limits, |p| f.raw(p, 1) * (p as f64).ln())?;
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallnessRow {
    pub x: u64,
    pub abs_sum: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallnessReport {
    pub max_normalized: f64,
    pub witness_x: u64,
    pub rows: Vec<SmallnessRow>,
}

/// `max_x |M_f(x)| / bound(x)` over the grid, with the bound chosen by `params.eta`.
pub fn smallness_scan(f: &MultFunc, params: &ClassParams, grid: &[u64], limits: &Limits) -> Result<SmallnessReport> {
    if grid.is_empty() {
        return Err(Error::domain("empty grid"));
    }
    if let Some(&x) = grid.iter().find(|&&x| (x as f64) < params.q) {
        return Err(Error::domain(format!("grid point {x} is below Q = {}", params.q)));
    }
    let sums = partial_sums_at(f, grid, limits)?;
    let rows: Vec<SmallnessRow> = grid
        .iter()
        .zip(&sums)
        .map(|(&x, m)| {
            let bound = params.bound(x as f64);
            SmallnessRow { x, abs_sum: m.norm(), bound, ratio: m.norm() / bound }
        })
        .collect();
    let worst = rows.iter().fold(&rows[0], |w, r| if r.ratio > w.ratio { r } else { w });
    Ok(SmallnessReport { max_normalized: worst.ratio, witness_x: worst.x, rows: rows.clone() })
}

/// Geometric grid of integers from `lo` to `hi` inclusive with `points` entries.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<u64> {
    if points <= 1 {
        return vec![lo.round() as u64];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut out: Vec<u64> = (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp().round() as u64)
        .collect();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multfun::{convolve, tau_k, twist, CLOSED_FORM_DEPTH};

    fn one() -> MultFunc {
        MultFunc::new("one", 1, CLOSED_FORM_DEPTH, |_, _| Complex64::new(1.0, 0.0))
    }

    fn mu() -> MultFunc {
        MultFunc::new("moebius", 1, CLOSED_FORM_DEPTH, |_, k| {
            Complex64::new(if k == 1 { -1.0 } else { 0.0 }, 0.0)
        })
    }

    #[test]
    fn partial_sum_examples() {
        let lim = Limits::default();
        assert_eq!(partial_sum(&mu(), 10, &lim).unwrap().re, -1.0);
        assert_eq!(partial_sum(&mu(), 1000, &lim).unwrap().re, 2.0);
        assert_eq!(partial_sum(&one(), 1000, &lim).unwrap().re, 1000.0);
        let many = partial_sums_at(&mu(), &[1000, 10, 100], &lim).unwrap();
        assert_eq!(many.iter().map(|z| z.re).collect::<Vec<_>>(), vec![2.0, -1.0, 1.0]);
    }

    #[test]
    fn capacity_error_above_ceiling() {
        let lim = Limits::default();
        assert!(matches!(partial_sum(&mu(), 200_000_000, &lim), Err(Error::Capacity { .. })));
    }

    #[test]
    fn block_sieve_handles_high_prime_powers() {
        let lim = Limits::default();
        let tau2 = tau_k(2).unwrap();
        let sieve = ValueSieve::new(&tau2, 1 << 20).unwrap();
        let vals = sieve.block(1 << 19, (1 << 19) + 4);
        assert_eq!(vals[0].re, 20.0);
        assert_eq!(partial_sum(&tau2, 10, &lim).unwrap().re, 27.0);
    }

    #[test]
    fn sifted_examples() {
        let lim = Limits::default();
        let tau2 = tau_k(2).unwrap();
        assert_eq!(sifted_sum(&tau2, 100, 10.0, &lim).unwrap().re, 43.0);
        assert_eq!(sifted_sum(&one(), 50, 7.0, &lim).unwrap().re, 12.0);
        assert_eq!(sifted_sum(&mu(), 50, 60.0, &lim).unwrap().re, 1.0);
        assert_eq!(sifted_sum(&mu(), 5000, 1.5, &lim).unwrap(), partial_sum(&mu(), 5000, &lim).unwrap());
    }

    #[test]
    fn sifted_paths_agree() {
        let lim = Limits::default();
        let f = convolve(&twist(&mu(), 0.2), &mu());
        for (x, y) in [(100_000u64, 30.0), (250_000, 7.0), (60_000, 300.0)] {
            let a = sifted_sum_with(&f, x, y, SiftStrategy::Enumerate, &lim).unwrap();
            let b = sifted_sum_with(&f, x, y, SiftStrategy::Sieve, &lim).unwrap();
            assert!((a - b).norm() <= 1e-9 * x as f64, "{x} {y}: {a} vs {b}");
        }
    }

    #[test]
    fn prime_log_examples() {
        let lim = Limits::default();
        assert_eq!(prime_log_sum(&mu(), 2.0, 100.0, 1, &lim).unwrap(), 0.0);
        let v = prime_log_sum(&one(), 10.0, 1000.0, 0, &lim).unwrap();
        assert!((v - (1000f64.ln() / 10f64.ln()).ln()).abs() < 0.3, "{v}");
        let g = 0.37;
        let tw = twist(&mu(), g);
        let inv = prime_log_sum(&one(), 5.5, 20_000.0, 0, &lim).unwrap();
        let (cos_part, _) = prime_reduce::<Neumaier, _>(6, 20_001, &[], &lim, |p| {
            (g * (p as f64).ln()).cos() / p as f64
        })
        .unwrap();
        let j = 3;
        let lhs = prime_log_sum(&tw, 5.5, 20_000.0, j, &lim).unwrap();
        assert!((lhs - (j as f64 * inv - cos_part)).abs() < 1e-12);
        assert!(prime_log_sum(&mu(), 1.0, 10.0, 0, &lim).is_err());
    }

    #[test]
    fn chebyshev_examples() {
        let lim = Limits::default();
        let v = chebyshev_sum(&one(), 10, &lim).unwrap();
        assert!((v.re - 210f64.ln()).abs() < 1e-14);
        let w = chebyshev_sum(&mu(), 10, &lim).unwrap();
        assert_eq!(w.re, -v.re);
    }

    #[test]
    fn prime_log_table_matches_direct() {
        let lim = Limits::default();
        let tw = twist(&mu(), 0.1);
        let pts = [3.0, 100.0, 1234.5, 50_000.0];
        let t = PrimeLogTable::build(&tw, &pts, &lim).unwrap();
        for (a, b) in [(3.0, 100.0), (100.0, 50_000.0), (3.0, 1234.5)] {
            for j in 0..3 {
                let d = prime_log_sum(&tw, a, b, j, &lim).unwrap();
                assert!((t.interval(a, b, j).unwrap() - d).abs() < 1e-12);
            }
        }
        assert!(t.interval(3.0, 7.0, 0).is_err());
    }

    #[test]
    fn smallness_scan_examples() {
        let lim = Limits::default();
        let p = ClassParams::new(1, 2.5, 100.0, 0.0).unwrap();
        let grid = log_grid(100.0, 1e5, 8);
        let r = smallness_scan(&mu(), &p, &grid, &lim).unwrap();
        assert!(r.max_normalized.is_finite());
        let r1 = smallness_scan(&one(), &p, &grid, &lim).unwrap();
        assert!(r1.max_normalized > 10.0);
        assert!(smallness_scan(&mu(), &p, &[10], &lim).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let r = SumRecord {
            kind: SumKind::Sifted,
            label: "conv(moebius,tau:k=2)".into(),
            lo: 1.0,
            hi: 1e6,
            j_shift: 2,
            value: Complex64::new(-0.25, 1e-300),
            truncation: 1_000_000,
            error_budget: 1e-9,
        };
        assert_eq!(SumRecord::from_csv_row(&r.to_csv_row()).unwrap(), r);
    }
}
