//! Segmented prime sieve, smallest-prime-factor blocks and ordered prime reductions.
//!
//! Segments store odd numbers only (a wheel of size 2). Reductions over primes
//! go through [`prime_reduce`], which sieves aligned segments in parallel and
//! folds the canonical chunk sums in ascending order, so the output is
//! independent of the worker count and of the segment length.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{
    aligned_segment, aligned_segments, cuts_in, fold_segments, ChunkReducer, Compensated, Neumaier,
};

pub const DEFAULT_PRIME_CEILING: u64 = 1_000_000_000;
pub const DEFAULT_SUM_CEILING: u64 = 100_000_000;
pub const DEFAULT_SEGMENT: u64 = 1 << 18;
pub const MIN_SEGMENT: u64 = 64;

/// Capacity configuration shared by every engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Largest integer any sieve may touch.
    pub prime_ceiling: u64,
    /// Largest truncation accepted by the summation engines.
    pub sum_ceiling: u64,
    /// Sieve block length (entries).
    pub segment_size: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            prime_ceiling: DEFAULT_PRIME_CEILING,
            sum_ceiling: DEFAULT_SUM_CEILING,
            segment_size: DEFAULT_SEGMENT,
        }
    }
}

impl Limits {
    pub fn with_segment(mut self, segment_size: u64) -> Self {
        self.segment_size = segment_size;
        self
    }

    pub fn check_prime(&self, what: &'static str, n: u64) -> Result<()> {
        if n > self.prime_ceiling {
            return Err(Error::Capacity { what, requested: n, ceiling: self.prime_ceiling });
        }
        Ok(())
    }

    pub fn check_sum(&self, what: &'static str, n: u64) -> Result<()> {
        let ceiling = self.sum_ceiling.min(self.prime_ceiling);
        if n > ceiling {
            return Err(Error::Capacity { what, requested: n, ceiling });
        }
        Ok(())
    }

    /// Segment length used by the reductions (a whole number of chunks).
    pub fn reduction_segment(&self) -> u64 {
        aligned_segment(self.segment_size.max(MIN_SEGMENT))
    }
}

/// Integer square root (floor).
pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.saturating_mul(r) > n {
        r -= 1;
    }
    while (r + 1).saturating_mul(r + 1) <= n {
        r += 1;
    }
    r
}

/// All primes `<= limit` by a plain sieve; used for base primes.
pub fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Primality flags for `[lo, hi)`, stored for odd numbers only.
#[derive(Debug, Clone)]
pub struct PrimeSegment {
    lo: u64,
    hi: u64,
    first_odd: u64,
    bits: Vec<u64>,
}

impl PrimeSegment {
    /// Sieve `[lo, hi)` with `base`, which must contain every prime `<= sqrt(hi - 1)`.
    pub fn sieve(lo: u64, hi: u64, base: &[u64]) -> Self {
        let first_odd = lo | 1;
        let count = if hi > first_odd { (hi - first_odd).div_ceil(2) } else { 0 };
        let words = count.div_ceil(64) as usize;
        let mut bits = vec![!0u64; words];
        if count % 64 != 0 && words > 0 {
            bits[words - 1] = (1u64 << (count % 64)) - 1;
        }
        if count > 0 && first_odd == 1 {
            bits[0] &= !1;
        }
        let top = if hi > 0 { isqrt(hi - 1) } else { 0 };
        for &p in base.iter().skip_while(|&&p| p == 2) {
            if p > top {
                break;
            }
            let mut start = (p * p).max(lo.div_ceil(p) * p);
            if start % 2 == 0 {
                start += p;
            }
            let mut idx = (start - first_odd) / 2;
            while idx < count {
                bits[(idx / 64) as usize] &= !(1u64 << (idx % 64));
                idx += p;
            }
        }
        Self { lo, hi, first_odd, bits }
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn is_prime(&self, n: u64) -> bool {
        if n < self.lo || n >= self.hi {
            return false;
        }
        if n == 2 {
            return true;
        }
        if n % 2 == 0 {
            return false;
        }
        let idx = (n - self.first_odd) / 2;
        self.bits[(idx / 64) as usize] >> (idx % 64) & 1 == 1
    }

    /// Primes of the segment in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        let two = (self.lo <= 2 && self.hi > 2).then_some(2);
        let first_odd = self.first_odd;
        let odd = self.bits.iter().enumerate().flat_map(move |(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let b = word.trailing_zeros() as u64;
                word &= word - 1;
                Some(first_odd + 2 * (w as u64 * 64 + b))
            })
        });
        two.into_iter().chain(odd)
    }

    pub fn count(&self) -> usize {
        let two = usize::from(self.lo <= 2 && self.hi > 2);
        two + self.bits.iter().map(|w| w.count_ones() as usize).sum::<usize>()
    }
}

/// Lazy iterator over the primes of `[lo, hi)`, one segment at a time.
#[derive(Debug)]
pub struct PrimeStream {
    next_lo: u64,
    hi: u64,
    segment_size: u64,
    base: Vec<u64>,
    current: Vec<u64>,
    pos: usize,
}

impl Iterator for PrimeStream {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            if self.pos < self.current.len() {
                self.pos += 1;
                return Some(self.current[self.pos - 1]);
            }
            if self.next_lo >= self.hi {
                return None;
            }
            let b = self.next_lo.saturating_add(self.segment_size).min(self.hi);
            let seg = PrimeSegment::sieve(self.next_lo, b, &self.base);
            self.current = seg.iter().collect();
            self.pos = 0;
            self.next_lo = b;
        }
    }
}

/// Primes in `[lo, hi)` in increasing order.
pub fn primes_stream(lo: u64, hi: u64, segment_size: u64, limits: &Limits) -> Result<PrimeStream> {
    if lo < 2 || lo > hi {
        return Err(Error::domain(format!("primes_stream needs 2 <= lo <= hi, got [{lo}, {hi})")));
    }
    if segment_size < MIN_SEGMENT {
        return Err(Error::domain(format!("segment size {segment_size} is below {MIN_SEGMENT}")));
    }
    limits.check_prime("hi", hi.saturating_sub(1))?;
    let base = small_primes(isqrt(hi.saturating_sub(1)));
    Ok(PrimeStream { next_lo: lo, hi, segment_size, base, current: Vec::new(), pos: 0 })
}

/// Ordered compensated reduction of `term(p)` over the primes in `[lo, hi)`.
///
/// Returns the total and, for every entry `x` of the sorted `cuts`, the sum
/// over primes `p <= x` (and `p >= lo`).
pub fn prime_reduce<A, F>(lo: u64, hi: u64, cuts: &[u64], limits: &Limits, term: F) -> Result<(A::Item, Vec<A::Item>)>
where
    A: Compensated,
    A::Item: Sync,
    F: Fn(u64) -> A::Item + Sync,
{
    debug_assert!(cuts.windows(2).all(|w| w[0] <= w[1]));
    limits.check_prime("hi", hi.saturating_sub(1))?;
    let lo = lo.max(2);
    if lo >= hi {
        let zero = A::default().get();
        return Ok((zero, vec![zero; cuts.len()]));
    }
    let base = small_primes(isqrt(hi - 1));
    let parts = aligned_segments(lo, hi, limits.reduction_segment());
    let outs: Vec<_> = parts
        .par_iter()
        .enumerate()
        .map(|(i, &(a, b))| {
            // cuts below lo belong to the first segment, above hi to the last
            let seg_lo = if i == 0 { 0 } else { a };
            let seg_hi = if i + 1 == parts.len() { u64::MAX } else { b };
            let (c0, c1) = cuts_in(cuts, seg_lo, seg_hi);
            let seg = PrimeSegment::sieve(a, b, &base);
            let mut red = ChunkReducer::<A>::new(&cuts[c0..c1], c0);
            for p in seg.iter() {
                red.push(p, term(p));
            }
            red.finish()
        })
        .collect();
    Ok(fold_segments::<A>(outs, cuts.len()))
}

/// Smallest prime factor of every integer in `[lo, hi)`.
#[derive(Debug, Clone)]
pub struct FactorSieve {
    lo: u64,
    hi: u64,
    spf: Vec<u32>,
}

impl FactorSieve {
    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn contains(&self, n: u64) -> bool {
        n >= self.lo && n < self.hi
    }

    /// Smallest prime factor of `n`.
    pub fn spf(&self, n: u64) -> Result<u64> {
        if !self.contains(n) {
            return Err(Error::Range(n, self.lo, self.hi));
        }
        Ok(self.spf[(n - self.lo) as usize] as u64)
    }

    /// Prime factorization of `n` as `(p, exponent)` in increasing `p`.
    ///
    /// Only the first factor comes from the table; the cofactor is split by
    /// trial division over primes `>= spf`, which is cheap because the cofactor
    /// has no factor below `spf`.
    pub fn factorize(&self, n: u64) -> Result<Vec<(u64, u32)>> {
        if n == 1 {
            return Ok(Vec::new());
        }
        let mut p = self.spf(n)?;
        let mut rest = n;
        let mut out = Vec::new();
        loop {
            let mut e = 0;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            out.push((p, e));
            if rest == 1 {
                return Ok(out);
            }
            p = if self.contains(rest) { self.spf(rest)? } else { least_factor_from(rest, p + 1) };
        }
    }
}

fn least_factor_from(n: u64, start: u64) -> u64 {
    let mut d = start.max(2);
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return d;
        }
        d += 1;
    }
    n
}

/// Smallest-prime-factor table for `[lo, hi)`.
pub fn factor_segment(lo: u64, hi: u64, limits: &Limits) -> Result<FactorSieve> {
    if lo < 2 || lo >= hi {
        return Err(Error::domain(format!("factor_segment needs 2 <= lo < hi, got [{lo}, {hi})")));
    }
    limits.check_prime("hi", hi.saturating_sub(1))?;
    let cap = limits.segment_size.max(MIN_SEGMENT).max(1 << 24);
    if hi - lo > cap {
        return Err(Error::Capacity { what: "hi - lo", requested: hi - lo, ceiling: cap });
    }
    let len = (hi - lo) as usize;
    let mut spf = vec![0u32; len];
    for p in small_primes(isqrt(hi - 1)) {
        let mut m = (p * p).max(lo.div_ceil(p) * p);
        while m < hi {
            let slot = &mut spf[(m - lo) as usize];
            if *slot == 0 {
                *slot = p as u32;
            }
            m += p;
        }
    }
    for (i, slot) in spf.iter_mut().enumerate() {
        if *slot == 0 {
            *slot = (lo + i as u64) as u32;
        }
    }
    Ok(FactorSieve { lo, hi, spf })
}

/// Mertens product `V(y) = prod_{p <= y} (1 - 1/p)`, computed as the
/// exponential of a compensated sum of logarithms.
pub fn mertens_v(y: f64, limits: &Limits) -> Result<f64> {
    if !(y >= 2.0) {
        return Err(Error::domain(format!("mertens_v needs y >= 2, got {y}")));
    }
    let top = y.floor() as u64;
    limits.check_prime("y", top)?;
    let (log_v, _) = prime_reduce::<Neumaier, _>(2, top + 1, &[], limits, |p| (-1.0 / p as f64).ln_1p())?;
    Ok(log_v.exp())
}

/// `V(y)` at each sorted `y` in one sweep.
pub fn mertens_v_grid(ys: &[f64], limits: &Limits) -> Result<Vec<f64>> {
    let cuts: Vec<u64> = ys.iter().map(|y| y.floor() as u64).collect();
    if ys.iter().any(|&y| !(y >= 2.0)) || cuts.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::domain("mertens_v_grid needs sorted y >= 2"));
    }
    let top = cuts.last().copied().unwrap_or(2);
    limits.check_prime("y", top)?;
    let (_, at) = prime_reduce::<Neumaier, _>(2, top + 1, &cuts, limits, |p| (-1.0 / p as f64).ln_1p())?;
    Ok(at.into_iter().map(f64::exp).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_is_prime(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n % d == 0 {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn small_ranges() {
        let lim = Limits::default();
        let v: Vec<u64> = primes_stream(2, 11, 1024, &lim).unwrap().collect();
        assert_eq!(v, vec![2, 3, 5, 7]);
        assert_eq!(primes_stream(14, 15, 1024, &lim).unwrap().count(), 0);
    }

    #[test]
    fn stream_matches_trial_division_to_1e5() {
        let lim = Limits::default();
        let fast: Vec<u64> = primes_stream(2, 100_000, 1000, &lim).unwrap().collect();
        let slow: Vec<u64> = (2..100_000).filter(|&n| trial_is_prime(n)).collect();
        assert_eq!(fast, slow);
    }

    #[test]
    fn segment_size_independence() {
        let lim = Limits::default();
        let a: Vec<u64> = primes_stream(999_000, 1_010_000, 64, &lim).unwrap().collect();
        let b: Vec<u64> = primes_stream(999_000, 1_010_000, 1 << 18, &lim).unwrap().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn capacity_and_domain_errors() {
        let lim = Limits::default();
        assert!(matches!(primes_stream(2, 2_000_000_000, 1024, &lim), Err(Error::Capacity { .. })));
        assert!(matches!(primes_stream(1, 10, 1024, &lim), Err(Error::Domain(_))));
        assert!(matches!(primes_stream(2, 10, 8, &lim), Err(Error::Domain(_))));
    }

    #[test]
    fn factor_examples() {
        let lim = Limits::default();
        let fs = factor_segment(2, 10_000, &lim).unwrap();
        assert_eq!(fs.spf(12).unwrap(), 2);
        assert_eq!(fs.factorize(12).unwrap(), vec![(2, 2), (3, 1)]);
        assert_eq!(fs.spf(9991).unwrap(), 97);
        assert_eq!(fs.factorize(9991).unwrap(), vec![(97, 1), (103, 1)]);
        assert_eq!(fs.spf(97).unwrap(), 97);
        assert!(matches!(fs.spf(10_000), Err(Error::Range(..))));
    }

    #[test]
    fn factor_segment_far_from_origin() {
        let lim = Limits::default();
        let fs = factor_segment(1_000_000, 1_001_000, &lim).unwrap();
        for n in 1_000_000..1_001_000u64 {
            let f = fs.factorize(n).unwrap();
            assert_eq!(f.iter().map(|&(p, e)| p.pow(e)).product::<u64>(), n);
            assert_eq!(f[0].0, least_factor_from(n, 2));
            assert!(f.iter().all(|&(p, _)| trial_is_prime(p)));
        }
    }

    #[test]
    fn mertens_product_examples() {
        let lim = Limits::default();
        assert_eq!(mertens_v(2.0, &lim).unwrap(), 0.5);
        assert!((mertens_v(10.0, &lim).unwrap() - 8.0 / 35.0).abs() < 1e-15);
        assert!((mertens_v(10.5, &lim).unwrap() - 8.0 / 35.0).abs() < 1e-15);
    }

    #[test]
    fn prime_reduce_cuts_match_standalone() {
        let lim = Limits::default().with_segment(4096);
        let cuts = [10u64, 4095, 4096, 50_000, 123_457];
        let (_, at) = prime_reduce::<Neumaier, _>(2, 200_000, &cuts, &lim, |p| 1.0 / p as f64).unwrap();
        for (x, v) in cuts.iter().zip(at) {
            let (solo, _) = prime_reduce::<Neumaier, _>(2, x + 1, &[], &lim, |p| 1.0 / p as f64).unwrap();
            assert_eq!(solo.to_bits(), v.to_bits(), "cut {x}");
        }
    }
}
