//! Rule-based multiplicative functions and their algebra.
//!
//! A [`MultFunc`] is a closure `(p, k) -> f(p^k)` together with its declared
//! Λ-bound `D`, a label and the largest exponent the rule is declared for.
//! Everything else (Λ_f, inverses, convolutions, twists) is derived lazily by
//! composing rules, so summation engines never need tables indexed by `n`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primes::FactorSieve;

/// `⌊log₂(10⁹)⌋`: enough for every prime power below the sieve ceiling.
pub const DEFAULT_DEPTH: u32 = 30;
/// Depth declared by closed-form rules; lets Euler factors at `p = 2`
/// be summed to double precision.
pub const CLOSED_FORM_DEPTH: u32 = 64;
/// Multiplicative slack in the Λ-bound comparison.
pub const CLASS_SLACK: f64 = 1e-9;

type Rule = dyn Fn(u64, u32) -> Complex64 + Send + Sync;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone)]
pub struct MultFunc {
    rule: Arc<Rule>,
    degree: u32,
    depth: u32,
    label: String,
}

impl std::fmt::Debug for MultFunc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MultFunc")
            .field("label", &self.label)
            .field("degree", &self.degree)
            .field("depth", &self.depth)
            .finish()
    }
}

impl MultFunc {
    /// Wrap a prime-power rule. The rule is only ever called with `k >= 1`.
    pub fn new<F>(label: impl Into<String>, degree: u32, depth: u32, rule: F) -> Self
    where
        F: Fn(u64, u32) -> Complex64 + Send + Sync + 'static,
    {
        Self { rule: Arc::new(rule), degree, depth, label: label.into() }
    }

    /// Build `f` from a rule for `Λ_f(p^k)` by the inverse recursion.
    pub fn from_lambda<F>(label: impl Into<String>, degree: u32, depth: u32, lambda: F) -> Self
    where
        F: Fn(u64, u32) -> Complex64 + Send + Sync + 'static,
    {
        Self::new(label, degree, depth, move |p, k| {
            let lam: Vec<Complex64> = (1..=k).map(|j| lambda(p, j)).collect();
            *local_from_lambda(p, &lam).last().unwrap()
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Declared Λ-bound `D`.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_degree(mut self, degree: u32) -> Self {
        self.degree = degree;
        self
    }

    #[inline]
    pub(crate) fn raw(&self, p: u64, k: u32) -> Complex64 {
        if k == 0 {
            ONE
        } else {
            (self.rule)(p, k)
        }
    }

    fn check_depth(&self, p: u64, k: u32) -> Result<()> {
        if k > self.depth {
            return Err(Error::Depth { label: self.label.clone(), p, k, depth: self.depth });
        }
        Ok(())
    }

    /// `f(p^k)`; `k = 0` gives 1.
    pub fn at(&self, p: u64, k: u32) -> Result<Complex64> {
        self.check_depth(p, k)?;
        Ok(self.raw(p, k))
    }

    /// `[f(1), f(p), ..., f(p^k_max)]`.
    pub fn local(&self, p: u64, k_max: u32) -> Result<Vec<Complex64>> {
        self.check_depth(p, k_max)?;
        Ok((0..=k_max).map(|k| self.raw(p, k)).collect())
    }
}

/// `[Λ_f(p), ..., Λ_f(p^k_max)]` for one prime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaTable {
    pub p: u64,
    pub values: Vec<Complex64>,
}

impl LambdaTable {
    pub fn k_max(&self) -> u32 {
        self.values.len() as u32
    }

    /// `Λ_f(p^k)` for `1 <= k <= k_max`.
    pub fn get(&self, k: u32) -> Complex64 {
        self.values[k as usize - 1]
    }
}

/// `Λ_f(p^k) = f(p^k) k log p - Σ_{j<k} Λ_f(p^j) f(p^{k-j})`, from the local values `[1, f(p), ...]`.
pub fn lambda_from_local(p: u64, local: &[Complex64]) -> Vec<Complex64> {
    let log_p = (p as f64).ln();
    let k_max = local.len() - 1;
    let mut lam = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut v = local[k] * (k as f64 * log_p);
        for j in 1..k {
            v -= lam[j - 1] * local[k - j];
        }
        lam.push(v);
    }
    lam
}

/// `f(p^k) = (k log p)^{-1} Σ_{j=1}^{k} Λ_f(p^j) f(p^{k-j})`, returning `[1, f(p), ...]`.
pub fn local_from_lambda(p: u64, lambda: &[Complex64]) -> Vec<Complex64> {
    let log_p = (p as f64).ln();
    let mut local = Vec::with_capacity(lambda.len() + 1);
    local.push(ONE);
    for k in 1..=lambda.len() {
        let mut acc = ZERO;
        for j in 1..=k {
            acc += lambda[j - 1] * local[k - j];
        }
        local.push(acc / (k as f64 * log_p));
    }
    local
}

pub fn lambda_of(f: &MultFunc, p: u64, k_max: u32) -> Result<LambdaTable> {
    let local = f.local(p, k_max)?;
    Ok(LambdaTable { p, values: lambda_from_local(p, &local) })
}

/// Local values `[f(1), f(p), ..., f(p^k_max)]` reconstructed from Λ_f.
pub fn f_of_lambda(table: &LambdaTable) -> Result<Vec<Complex64>> {
    if table.p < 2 {
        return Err(Error::domain("f_of_lambda needs p >= 2"));
    }
    Ok(local_from_lambda(table.p, &table.values))
}

/// Dirichlet inverse: `Σ_{j=0}^{k} f(p^j) g(p^{k-j}) = 0` for `k >= 1`.
pub fn dirichlet_inverse(f: &MultFunc) -> MultFunc {
    let inner = f.clone();
    MultFunc::new(format!("inv({})", f.label()), f.degree(), f.depth(), move |p, k| {
        let fl: Vec<Complex64> = (0..=k).map(|j| inner.raw(p, j)).collect();
        let mut g = vec![ONE];
        for e in 1..=k as usize {
            let mut acc = ZERO;
            for j in 1..=e {
                acc -= fl[j] * g[e - j];
            }
            g.push(acc);
        }
        g[k as usize]
    })
}

/// Dirichlet convolution of two multiplicative functions.
pub fn convolve(f: &MultFunc, h: &MultFunc) -> MultFunc {
    let (a, b) = (f.clone(), h.clone());
    MultFunc::new(
        format!("conv({},{})", f.label(), h.label()),
        f.degree() + h.degree(),
        f.depth().min(h.depth()),
        move |p, k| (0..=k).map(|j| a.raw(p, j) * b.raw(p, k - j)).sum(),
    )
}

/// Convolution of a non-empty list, left to right.
pub fn convolve_all(fs: &[MultFunc]) -> Result<MultFunc> {
    let (first, rest) = fs.split_first().ok_or_else(|| Error::domain("empty convolution"))?;
    let mut acc = first.clone();
    for h in rest {
        acc = convolve(&acc, h);
    }
    let label = format!("conv({})", fs.iter().map(|f| f.label().to_string()).collect::<Vec<_>>().join(","));
    Ok(acc.relabel(label))
}

/// `n ↦ f(n) n^{iγ}`.
pub fn twist(f: &MultFunc, gamma: f64) -> MultFunc {
    let inner = f.clone();
    MultFunc::new(format!("twist({},gamma={})", f.label(), gamma), f.degree(), f.depth(), move |p, k| {
        let phase = gamma * k as f64 * (p as f64).ln();
        inner.raw(p, k) * Complex64::from_polar(1.0, phase)
    })
}

/// `binomial(e + k - 1, k - 1)`, exactly when it fits in `u128`.
pub fn divisor_binomial(e: u32, k: u32) -> std::result::Result<u128, f64> {
    let mut acc: u128 = 1;
    let mut approx = 1.0f64;
    let mut overflow = false;
    for i in 1..k as u128 {
        approx *= (e as u128 + i) as f64 / i as f64;
        if !overflow {
            match acc.checked_mul(e as u128 + i) {
                Some(v) => acc = v / i,
                None => overflow = true,
            }
        }
    }
    if overflow {
        Err(approx)
    } else {
        Ok(acc)
    }
}

/// The k-fold divisor function `τ_k`.
pub fn tau_k(k: u32) -> Result<MultFunc> {
    if k == 0 {
        return Err(Error::domain("tau_k needs k >= 1"));
    }
    Ok(MultFunc::new(format!("tau:k={k}"), k, CLOSED_FORM_DEPTH, move |_, e| match divisor_binomial(e, k) {
        Ok(v) => Complex64::new(v as f64, 0.0),
        Err(approx) => {
            log::warn!("tau_{k}(p^{e}) overflows u128; using floating point");
            Complex64::new(approx, 0.0)
        }
    }))
}

/// `f(n)` from the factorization held in `fs`.
pub fn value_at(f: &MultFunc, n: u64, fs: &FactorSieve) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::domain("value_at needs n >= 1"));
    }
    if n == 1 {
        return Ok(ONE);
    }
    let mut v = ONE;
    for (p, e) in fs.factorize(n)? {
        v *= f.at(p, e)?;
    }
    Ok(v)
}

/// Class parameters `(D, A, Q, η)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub d: u32,
    pub a: f64,
    pub q: f64,
    pub eta: f64,
}

impl ClassParams {
    pub fn new(d: u32, a: f64, q: f64, eta: f64) -> Result<Self> {
        if !(a > d as f64 + 1.0) {
            return Err(Error::domain(format!("need A > D + 1, got A = {a}, D = {d}")));
        }
        if !(q >= 3.0) {
            return Err(Error::domain(format!("need Q >= 3, got {q}")));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::domain(format!("need eta in [0, 1], got {eta}")));
        }
        Ok(Self { d, a, q, eta })
    }

    /// Strong-class parameters (`η = 1`); `A` is set to `D + 2`, it plays no role there.
    pub fn strong(d: u32, q: f64) -> Result<Self> {
        Self::new(d, d as f64 + 2.0, q, 1.0)
    }

    pub fn is_strong(&self) -> bool {
        self.eta == 1.0
    }

    pub fn log_q(&self) -> f64 {
        self.q.ln()
    }

    /// Bound on `|Σ_{n<=x} f(n)|` for `x >= Q`.
    ///
    /// With `η = 1` this is `x^{1-1/log Q} / (log x)^{D+1}`; otherwise
    /// `x^{1-η/log Q} (log Q)^{A-D-1} / (log x)^A`, which is the plain class
    /// bound at `η = 0`.
    pub fn bound(&self, x: f64) -> f64 {
        let lx = x.ln();
        let lq = self.log_q();
        if self.is_strong() {
            x.powf(1.0 - 1.0 / lq) / lx.powi(self.d as i32 + 1)
        } else {
            x.powf(1.0 - self.eta / lq) * lq.powf(self.a - self.d as f64 - 1.0) / lx.powf(self.a)
        }
    }

    /// A bound valid for every `x >= 1`: the class bound above `Q` and the
    /// divisor bound `x (1 + log x)^{D-1}` below it.
    pub fn bound_everywhere(&self, x: f64) -> f64 {
        if x >= self.q {
            self.bound(x)
        } else {
            x * (1.0 + x.max(1.0).ln()).powi(self.d as i32 - 1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWitness {
    pub p: u64,
    pub k: u32,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub passes: bool,
    /// `max |Λ_f(p^k)| / (D log p)` over the scanned box.
    pub worst_ratio: f64,
    pub witness: Option<ClassWitness>,
}

/// Scan `|Λ_f(p^k)| <= D Λ(p^k)` over `p <= p_max`, `k <= k_max`.
pub fn class_check(f: &MultFunc, params: &ClassParams, p_max: u64, k_max: u32) -> Result<ClassReport> {
    let d = params.d as f64;
    let mut worst = ClassWitness { p: 2, k: 1, ratio: 0.0 };
    for p in crate::primes::small_primes(p_max) {
        let table = lambda_of(f, p, k_max)?;
        let scale = d * (p as f64).ln();
        for (i, lam) in table.values.iter().enumerate() {
            let ratio = if scale > 0.0 { lam.norm() / scale } else if lam.norm() == 0.0 { 0.0 } else { f64::INFINITY };
            if ratio > worst.ratio {
                worst = ClassWitness { p, k: i as u32 + 1, ratio };
            }
        }
    }
    let passes = worst.ratio <= 1.0 + CLASS_SLACK;
    Ok(ClassReport { passes, worst_ratio: worst.ratio, witness: (worst.ratio > 0.0).then_some(worst) })
}

/// Euler factor at `p`: `Σ_k f(p^k) p^{-ks}` via `exp(Σ_k Λ_f(p^k) p^{-ks} / (k log p))`.
///
/// Terms are added until `D p^{-k Re s} / k` falls below `1e-18` or the rule depth is reached.
pub fn log_euler_factor(f: &MultFunc, p: u64, s: Complex64) -> Complex64 {
    let log_p = (p as f64).ln();
    let d = f.degree().max(1) as f64;
    let mut k_max = 1u32;
    while k_max < f.depth() && d * (-(k_max as f64) * s.re * log_p).exp() / k_max as f64 > 1e-18 {
        k_max += 1;
    }
    let local: Vec<Complex64> = (0..=k_max).map(|k| f.raw(p, k)).collect();
    let lam = lambda_from_local(p, &local);
    let mut acc = ZERO;
    for (i, l) in lam.iter().enumerate() {
        let k = i as f64 + 1.0;
        acc += l * (-(s * k * log_p)).exp() / (k * log_p);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::{factor_segment, Limits};

    fn one() -> MultFunc {
        MultFunc::new("one", 1, CLOSED_FORM_DEPTH, |_, _| ONE)
    }

    fn mu() -> MultFunc {
        MultFunc::new("moebius", 1, CLOSED_FORM_DEPTH, |_, k| if k == 1 { -ONE } else { ZERO })
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1.0)
    }

    #[test]
    fn lambda_examples() {
        let t = lambda_of(&one(), 2, 3).unwrap();
        assert!(close(t.get(3), Complex64::new(2f64.ln(), 0.0), 1e-14));
        let t = lambda_of(&mu(), 7, 6).unwrap();
        for k in 1..=6 {
            assert!(close(t.get(k), Complex64::new(-(7f64.ln()), 0.0), 1e-13), "k={k}");
        }
    }

    #[test]
    fn f_of_lambda_examples() {
        let lp = 5f64.ln();
        let von_mangoldt = LambdaTable { p: 5, values: vec![Complex64::new(lp, 0.0); 4] };
        for v in f_of_lambda(&von_mangoldt).unwrap() {
            assert!(close(v, ONE, 1e-14));
        }
        let mu_table = LambdaTable { p: 5, values: vec![Complex64::new(-lp, 0.0); 3] };
        let f = f_of_lambda(&mu_table).unwrap();
        assert!(close(f[1], -ONE, 1e-14));
        assert!(f[2].norm() < 1e-14);
        let two = LambdaTable { p: 5, values: vec![Complex64::new(2.0 * lp, 0.0); 2] };
        assert!(close(f_of_lambda(&two).unwrap()[2], Complex64::new(3.0, 0.0), 1e-14));
    }

    #[test]
    fn inverse_and_convolution_examples() {
        let g = dirichlet_inverse(&one());
        assert_eq!(g.at(3, 1).unwrap(), -ONE);
        assert_eq!(g.at(3, 2).unwrap(), ZERO);
        let tau2 = tau_k(2).unwrap();
        let h = dirichlet_inverse(&tau2);
        assert_eq!(h.at(3, 1).unwrap(), Complex64::new(-2.0, 0.0));
        assert_eq!(h.at(3, 2).unwrap(), ONE);
        let back = dirichlet_inverse(&mu());
        for k in 0..6 {
            assert_eq!(back.at(11, k).unwrap(), ONE);
        }
        let mm = convolve(&mu(), &mu());
        assert_eq!(mm.at(5, 1).unwrap(), Complex64::new(-2.0, 0.0));
        assert_eq!(mm.at(5, 2).unwrap(), ONE);
        assert_eq!(mm.degree(), 2);
        let eps = convolve(&one(), &mu());
        for k in 1..8 {
            assert_eq!(eps.at(13, k).unwrap(), ZERO);
        }
        assert_eq!(convolve(&one(), &one()).at(2, 2).unwrap(), Complex64::new(3.0, 0.0));
    }

    #[test]
    fn tau_examples() {
        let t1 = tau_k(1).unwrap();
        assert_eq!(t1.at(2, 9).unwrap(), ONE);
        assert_eq!(tau_k(3).unwrap().at(2, 2).unwrap(), Complex64::new(6.0, 0.0));
        let fs = factor_segment(2, 100, &Limits::default()).unwrap();
        assert_eq!(value_at(&tau_k(2).unwrap(), 12, &fs).unwrap(), Complex64::new(6.0, 0.0));
        assert_eq!(value_at(&tau_k(2).unwrap(), 36, &fs).unwrap(), Complex64::new(9.0, 0.0));
        assert!(tau_k(0).is_err());
        assert!(divisor_binomial(60, 80).is_err());
        assert_eq!(divisor_binomial(4, 3), Ok(15));
    }

    #[test]
    fn value_at_examples() {
        let fs = factor_segment(2, 100, &Limits::default()).unwrap();
        let tw = twist(&mu(), 0.3);
        assert_eq!(value_at(&tw, 12, &fs).unwrap(), ZERO);
        assert_eq!(value_at(&mu(), 30, &fs).unwrap(), -ONE);
        assert_eq!(value_at(&mu(), 1, &fs).unwrap(), ONE);
        assert!(matches!(value_at(&mu(), 100, &fs), Err(Error::Range(..))));
    }

    #[test]
    fn depth_is_enforced() {
        let shallow = MultFunc::new("shallow", 1, 3, |_, _| ONE);
        assert!(matches!(shallow.at(2, 4), Err(Error::Depth { .. })));
        assert!(lambda_of(&shallow, 2, 4).is_err());
    }

    #[test]
    fn class_check_examples() {
        let p1 = ClassParams::new(1, 2.5, 10.0, 0.0).unwrap();
        let r = class_check(&mu(), &p1, 200, 6).unwrap();
        assert!(r.passes);
        assert!((r.worst_ratio - 1.0).abs() < 1e-12);
        let p2 = ClassParams::new(2, 3.5, 10.0, 0.0).unwrap();
        assert!(class_check(&convolve(&mu(), &mu()), &p2, 200, 6).unwrap().passes);
        let r = class_check(&tau_k(3).unwrap(), &p2, 200, 6).unwrap();
        assert!(!r.passes);
        assert!((r.worst_ratio - 1.5).abs() < 1e-12);
        assert!(r.witness.is_some());
    }

    #[test]
    fn class_params_validation() {
        assert!(ClassParams::new(1, 2.0, 10.0, 0.0).is_err());
        assert!(ClassParams::new(1, 2.5, 2.0, 0.0).is_err());
        assert!(ClassParams::new(1, 2.5, 10.0, 1.5).is_err());
        let strong = ClassParams::strong(2, 20.0).unwrap();
        let x: f64 = 1e6;
        let expect = x.powf(1.0 - 1.0 / 20f64.ln()) / x.ln().powi(3);
        assert!((strong.bound(x) - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn euler_factor_of_moebius() {
        let s = Complex64::new(2.0, 0.0);
        let v = log_euler_factor(&mu(), 3, s).exp();
        assert!(close(v, Complex64::new(1.0 - 1.0 / 9.0, 0.0), 1e-15));
        let v = log_euler_factor(&one(), 2, Complex64::new(1.0, 0.0)).exp();
        assert!(close(v, Complex64::new(2.0, 0.0), 1e-15));
    }
}
