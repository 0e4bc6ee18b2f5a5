//! Compensated accumulation, ordered chunk reduction and small quadrature helpers.
//!
//! Every reduction over integers or primes in this crate is organised around
//! canonical chunks of [`CHUNK`] consecutive integers aligned at multiples of
//! [`CHUNK`]. Inside a chunk terms are added in ascending order with Neumaier
//! compensation; chunk results are then folded in ascending chunk order. The
//! partition only depends on the integers involved, so the result is the same
//! bit pattern for every segment size (a multiple of `CHUNK`) and thread count.

use num_complex::Complex64;

/// Width of the canonical reduction chunk.
pub const CHUNK: u64 = 4096;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Componentwise Neumaier accumulator for complex terms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ComplexSum {
    re: Neumaier,
    im: Neumaier,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Compensated accumulator abstraction shared by the ordered reductions.
pub trait Compensated: Default + Clone + Send {
    type Item: Copy + Send + Default;
    fn push(&mut self, x: Self::Item);
    fn get(&self) -> Self::Item;
}

impl Compensated for Neumaier {
    type Item = f64;
    #[inline]
    fn push(&mut self, x: f64) {
        self.add(x)
    }
    #[inline]
    fn get(&self) -> f64 {
        self.value()
    }
}

impl Compensated for ComplexSum {
    type Item = Complex64;
    #[inline]
    fn push(&mut self, x: Complex64) {
        self.add(x)
    }
    #[inline]
    fn get(&self) -> Complex64 {
        self.value()
    }
}

/// Output of one canonical chunk: its compensated value plus the partial
/// values at any cut points inside it.
#[derive(Debug, Clone)]
pub struct ChunkOut<T> {
    pub value: T,
    pub cuts: Vec<(usize, T)>,
}

/// Per-segment output of a [`ChunkReducer`].
#[derive(Debug, Clone, Default)]
pub struct SegmentOut<T> {
    /// Cuts that precede every term of the segment.
    pub leading: Vec<usize>,
    pub chunks: Vec<ChunkOut<T>>,
}

/// Streams `(n, term)` pairs in ascending `n` and produces canonical chunk sums.
///
/// `cuts` is a sorted list of integers `x`; the reduction reports the running
/// total over all terms with index `<= x` for each of them.
pub struct ChunkReducer<'a, A: Compensated> {
    cuts: &'a [u64],
    cut_offset: usize,
    next_cut: usize,
    current: Option<u64>,
    acc: A,
    out: SegmentOut<A::Item>,
    pending: Vec<(usize, A::Item)>,
}

impl<'a, A: Compensated> ChunkReducer<'a, A> {
    /// `cuts` must already be restricted to the segment; `cut_offset` is the
    /// global index of `cuts[0]`.
    pub fn new(cuts: &'a [u64], cut_offset: usize) -> Self {
        Self {
            cuts,
            cut_offset,
            next_cut: 0,
            current: None,
            acc: A::default(),
            out: SegmentOut { leading: Vec::new(), chunks: Vec::new() },
            pending: Vec::new(),
        }
    }

    fn record_cuts_below(&mut self, n: u64) {
        while self.next_cut < self.cuts.len() && self.cuts[self.next_cut] < n {
            let idx = self.cut_offset + self.next_cut;
            if self.current.is_some() {
                self.pending.push((idx, self.acc.get()));
            } else {
                self.out.leading.push(idx);
            }
            self.next_cut += 1;
        }
    }

    fn close_chunk(&mut self) {
        if self.current.take().is_some() {
            let value = self.acc.get();
            self.out.chunks.push(ChunkOut { value, cuts: std::mem::take(&mut self.pending) });
            self.acc = A::default();
        }
    }

    #[inline]
    pub fn push(&mut self, n: u64, x: A::Item) {
        self.record_cuts_below(n);
        let c = chunk_of(n);
        if self.current != Some(c) {
            self.close_chunk();
            self.current = Some(c);
        }
        self.acc.push(x);
    }

    pub fn finish(mut self) -> SegmentOut<A::Item> {
        self.record_cuts_below(u64::MAX);
        self.close_chunk();
        self.out
    }
}

/// Fold segment outputs in order. Returns the grand total and the value at
/// every cut (`ncuts` of them).
pub fn fold_segments<A: Compensated>(segments: Vec<SegmentOut<A::Item>>, ncuts: usize) -> (A::Item, Vec<A::Item>) {
    let mut top = A::default();
    let mut at_cuts = vec![A::Item::default(); ncuts];
    for seg in segments {
        for idx in seg.leading {
            at_cuts[idx] = top.get();
        }
        for chunk in seg.chunks {
            for (idx, partial) in chunk.cuts {
                let mut t = top.clone();
                t.push(partial);
                at_cuts[idx] = t.get();
            }
            top.push(chunk.value);
        }
    }
    (top.get(), at_cuts)
}

/// Range of indices of sorted `cuts` that fall in `[lo, hi)`.
pub fn cuts_in(cuts: &[u64], lo: u64, hi: u64) -> (usize, usize) {
    let a = cuts.partition_point(|&c| c < lo);
    let b = cuts.partition_point(|&c| c < hi);
    (a, b)
}

/// Index of the canonical chunk containing `n`.
#[inline]
pub fn chunk_of(n: u64) -> u64 {
    n / CHUNK
}

/// Round a requested segment length up to a whole number of chunks.
pub fn aligned_segment(segment_size: u64) -> u64 {
    segment_size.max(1).div_ceil(CHUNK) * CHUNK
}

/// Split `[lo, hi)` into segments whose interior boundaries are multiples of
/// `seg` (itself a multiple of [`CHUNK`]).
pub fn aligned_segments(lo: u64, hi: u64, seg: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    if lo >= hi {
        return out;
    }
    let mut a = lo;
    while a < hi {
        let b = ((a / seg) + 1).saturating_mul(seg).min(hi);
        out.push((a, b));
        a = b;
    }
    out
}

/// Relative closeness with an absolute floor, used by tests and checks.
pub fn rel_err(a: Complex64, b: Complex64) -> f64 {
    let d = (a - b).norm();
    d / b.norm().max(1e-300)
}

/// Exponential integral `E1(x)` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 requires x > 0");
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            let t = term / k as f64;
            sum += t;
            if t.abs() < 1e-18 {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        // modified Lentz on the continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..200 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Result of [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature on `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate drops below `abs_tol` or `max_intervals` is reached.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, max_intervals: usize) -> Quadrature {
    if a == b {
        return Quadrature { value: 0.0, error: 0.0, intervals: 0 };
    }
    let mut parts: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(&f, a, b);
    parts.push((a, b, v, e));
    loop {
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol || parts.len() >= max_intervals {
            let value = parts.iter().map(|p| p.2).collect::<Neumaier>().value();
            return Quadrature { value, error: err, intervals: parts.len() };
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Minimal `key = value` parser for the flat configuration format.
pub fn parse_flat_kv(text: &str) -> Vec<(String, String)> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| {
            let (k, v) = l.split_once('=')?;
            Some((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let mut acc = Neumaier::new();
        for x in [1.0, 1e100, 1.0, -1e100] {
            acc.add(x);
        }
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn e1_matches_reference_values() {
        // A&S table values
        assert!((exp_integral_e1(0.5) - 0.559_773_594_776_160_8).abs() < 1e-13);
        assert!((exp_integral_e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-13);
        assert!((exp_integral_e1(2.0) - 0.048_900_510_708_061_1).abs() < 1e-13);
        assert!((exp_integral_e1(10.0) - 4.156_968_929_685_324e-6).abs() < 1e-17);
    }

    #[test]
    fn quadrature_of_oscillatory_integrand() {
        let q = integrate(|u: f64| u.cos() / u, 1.0, 200.0, 1e-10, 2000);
        // Ci(200) - Ci(1)
        let exact = -0.341_782_368_993_996;
        assert!((q.value - exact).abs() < 1e-8, "{}", q.value);
    }

    #[test]
    fn segments_align_to_chunk_multiples() {
        let seg = aligned_segment(100);
        assert_eq!(seg, CHUNK);
        let parts = aligned_segments(5, 3 * CHUNK + 7, seg);
        assert_eq!(parts.first().unwrap().0, 5);
        assert_eq!(parts.last().unwrap().1, 3 * CHUNK + 7);
        for w in parts.windows(2) {
            assert_eq!(w[0].1, w[1].0);
            assert_eq!(w[0].1 % CHUNK, 0);
        }
    }
}
