//! Example functions with analytically known metadata.
//!
//! Every entry carries the class parameters it is meant to be tested with and,
//! where known, the multiplicity of the zero at `s = 1` and the zeros of
//! `L(s, f)` near 1. The zeros come from the factorisations
//! `L(s, μ·n^{iγ}) = 1/ζ(s - iγ)` and `L(s, μ*μ) = 1/ζ(s)²`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::multfun::{convolve, convolve_all, tau_k, ClassParams, MultFunc, CLOSED_FORM_DEPTH, DEFAULT_DEPTH};

/// Default `Q` for entries that do not need a particular one.
pub const DEFAULT_Q: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct GalleryEntry {
    pub f: MultFunc,
    pub params: ClassParams,
    pub known_m: Option<u32>,
    /// Zeros of `L(s, f)` near 1, repeated according to multiplicity.
    pub known_zeros: Option<Vec<Complex64>>,
    pub notes: String,
}

impl GalleryEntry {
    /// `|ρ - 1|` for every known zero.
    pub fn zero_distances(&self) -> Vec<f64> {
        self.known_zeros.iter().flatten().map(|z| (z - 1.0).norm()).collect()
    }

    pub fn with_q(mut self, q: f64) -> Result<Self> {
        self.params = ClassParams::new(self.params.d, self.params.a, q, self.params.eta)?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basic {
    One,
    Moebius,
    TauK(u32),
    MoebiusConvMoebius,
}

pub fn one() -> MultFunc {
    MultFunc::new("one", 1, CLOSED_FORM_DEPTH, |_, _| Complex64::new(1.0, 0.0))
}

pub fn moebius() -> MultFunc {
    MultFunc::new("moebius", 1, CLOSED_FORM_DEPTH, |_, k| Complex64::new(if k == 1 { -1.0 } else { 0.0 }, 0.0))
}

/// `μ(n) n^{iγ}` as a closed-form rule.
pub fn moebius_twist(gamma: f64) -> MultFunc {
    MultFunc::new(format!("moebius_twist:gamma={gamma}"), 1, CLOSED_FORM_DEPTH, move |p, k| {
        if k == 1 {
            -Complex64::from_polar(1.0, gamma * (p as f64).ln())
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

pub fn make_basic(name: Basic) -> Result<GalleryEntry> {
    let strong = |d| ClassParams::strong(d, DEFAULT_Q);
    Ok(match name {
        Basic::One => GalleryEntry {
            f: one(),
            params: ClassParams::new(1, 2.5, DEFAULT_Q, 0.0)?,
            known_m: None,
            known_zeros: None,
            notes: "not in any class: partial sums equal x".into(),
        },
        Basic::Moebius => GalleryEntry {
            f: moebius(),
            params: strong(1)?,
            known_m: Some(1),
            known_zeros: Some(vec![Complex64::new(1.0, 0.0)]),
            notes: "L = 1/zeta, simple zero at 1".into(),
        },
        Basic::TauK(k) => GalleryEntry {
            f: tau_k(k)?,
            params: ClassParams::new(k, k as f64 + 1.5, DEFAULT_Q, 0.0)?,
            known_m: None,
            known_zeros: None,
            notes: format!("L = zeta^{k}; pole at 1, not in class"),
        },
        Basic::MoebiusConvMoebius => GalleryEntry {
            f: convolve(&moebius(), &moebius()),
            params: strong(2)?,
            known_m: Some(2),
            known_zeros: Some(vec![Complex64::new(1.0, 0.0); 2]),
            notes: "L = 1/zeta^2, double zero at 1".into(),
        },
    })
}

pub fn make_moebius_twist(gamma: f64) -> Result<GalleryEntry> {
    if !(gamma.abs() > 0.0 && gamma.abs() <= 1.0) {
        return Err(Error::domain(format!("twist needs 0 < |gamma| <= 1, got {gamma}")));
    }
    Ok(GalleryEntry {
        f: moebius_twist(gamma),
        params: ClassParams::strong(1, DEFAULT_Q)?,
        known_m: Some(0),
        known_zeros: Some(vec![Complex64::new(1.0, gamma)]),
        notes: format!("L = 1/zeta(s - {gamma}i)"),
    })
}

pub fn make_twist_product(gammas: &[f64]) -> Result<GalleryEntry> {
    if gammas.is_empty() || gammas.len() > 3 {
        return Err(Error::domain("twist product takes 1 to 3 parameters"));
    }
    for (i, g) in gammas.iter().enumerate() {
        if gammas[..i].contains(g) {
            return Err(Error::domain(format!("repeated gamma {g}")));
        }
    }
    if gammas.len() == 1 {
        return make_moebius_twist(gammas[0]);
    }
    let parts = gammas.iter().map(|&g| make_moebius_twist(g).map(|e| e.f)).collect::<Result<Vec<_>>>()?;
    let d = gammas.len() as u32;
    Ok(GalleryEntry {
        f: convolve_all(&parts)?,
        params: ClassParams::strong(d, DEFAULT_Q)?,
        known_m: Some(0),
        known_zeros: Some(gammas.iter().map(|&g| Complex64::new(1.0, g)).collect()),
        notes: "product of shifted 1/zeta factors".into(),
    })
}

/// `Λ_f(p^k) = (-D + 1_{p>100}/log log p) log p`.
pub fn remark(d: u32) -> MultFunc {
    MultFunc::from_lambda(format!("remark:D={d}"), d, DEFAULT_DEPTH, move |p, _| {
        let lp = (p as f64).ln();
        let bump = if p > 100 { 1.0 / lp.ln() } else { 0.0 };
        Complex64::new((bump - d as f64) * lp, 0.0)
    })
}

pub fn make_remark(d: u32) -> Result<GalleryEntry> {
    if d == 0 {
        return Err(Error::domain("remark function needs D >= 1"));
    }
    Ok(GalleryEntry {
        f: remark(d),
        params: ClassParams::new(d, d as f64 + 1.5, DEFAULT_Q, 0.0)?,
        known_m: None,
        known_zeros: None,
        notes: "partial sums only measured, never asserted".into(),
    })
}

/// Kronecker symbol `(a / n)`.
pub fn kronecker(a: i64, n: u64) -> i32 {
    if n == 0 {
        return i32::from(a == 1 || a == -1);
    }
    let mut n = n;
    let mut result = 1;
    let v = n.trailing_zeros();
    if v > 0 {
        if a % 2 == 0 {
            return 0;
        }
        if v % 2 == 1 && matches!(a.rem_euclid(8), 3 | 5) {
            result = -result;
        }
        n >>= v;
    }
    // Jacobi symbol (a / n) for odd n
    let mut a = a.rem_euclid(n as i64) as u64;
    while a != 0 {
        let t = a.trailing_zeros();
        a >>= t;
        if t % 2 == 1 && matches!(n % 8, 3 | 5) {
            result = -result;
        }
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

fn squarefree(n: u64) -> bool {
    let mut d = 2;
    while d * d <= n {
        if n % (d * d) == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Fundamental discriminant with `|d| = q`, preferring `d > 0`.
pub fn fundamental_discriminant(q: i64) -> Result<i64> {
    let is_fundamental = |d: i64| {
        let m = d.rem_euclid(4);
        if m == 1 {
            squarefree(d.unsigned_abs())
        } else if m == 0 {
            let r = d / 4;
            matches!(r.rem_euclid(4), 2 | 3) && squarefree(r.unsigned_abs())
        } else {
            false
        }
    };
    if q < 3 {
        return Err(Error::UnsupportedModulus(q));
    }
    [q, -q].into_iter().find(|&d| is_fundamental(d)).ok_or(Error::UnsupportedModulus(q))
}

/// `χ_d` for the fundamental discriminant `d` with `|d| = q`.
pub fn quadratic_char(q: i64) -> Result<MultFunc> {
    let d = fundamental_discriminant(q)?;
    Ok(MultFunc::new(format!("char:q={q}"), 1, CLOSED_FORM_DEPTH, move |p, k| {
        let c = kronecker(d, p) as f64;
        Complex64::new(c.powi(k as i32), 0.0)
    }))
}

pub fn make_quadratic_char(q: i64) -> Result<GalleryEntry> {
    let d = fundamental_discriminant(q)?;
    Ok(GalleryEntry {
        f: quadratic_char(q)?,
        params: ClassParams::new(1, 2.5, DEFAULT_Q, 0.0)?,
        known_m: Some(0),
        known_zeros: None,
        notes: format!("real character of discriminant {d}"),
    })
}

/// `1 * χ`, whose partial sums grow like `L(1, χ) x`.
pub fn make_one_conv_char(q: i64) -> Result<GalleryEntry> {
    let f = convolve(&one(), &quadratic_char(q)?).relabel(format!("one_conv_char:q={q}"));
    Ok(GalleryEntry {
        f,
        params: ClassParams::new(2, 3.5, DEFAULT_Q, 0.0)?,
        known_m: None,
        known_zeros: None,
        notes: "illustration only: not in class".into(),
    })
}

/// The entries used by the property suites.
pub fn standard_entries() -> Result<Vec<GalleryEntry>> {
    Ok(vec![
        make_basic(Basic::One)?,
        make_basic(Basic::Moebius)?,
        make_basic(Basic::TauK(2))?,
        make_basic(Basic::TauK(3))?,
        make_basic(Basic::MoebiusConvMoebius)?,
        make_moebius_twist(0.3)?,
        make_twist_product(&[0.1, 0.2])?,
        make_twist_product(&[0.08, 0.4])?,
        make_remark(2)?,
        make_quadratic_char(5)?,
        make_one_conv_char(5)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multfun::{class_check, lambda_of};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basic_entries() {
        let mu = make_basic(Basic::Moebius).unwrap();
        assert_eq!(mu.f.at(7, 1).unwrap(), c(-1.0, 0.0));
        assert_eq!(mu.f.at(7, 2).unwrap(), c(0.0, 0.0));
        assert_eq!((mu.params.d, mu.known_m), (1, Some(1)));
        let t3 = make_basic(Basic::TauK(3)).unwrap();
        let p2 = ClassParams::new(2, 3.5, 10.0, 0.0).unwrap();
        assert!(!class_check(&t3.f, &p2, 50, 4).unwrap().passes);
        assert!(make_basic(Basic::One).unwrap().known_m.is_none());
    }

    #[test]
    fn twist_entries() {
        let e = make_moebius_twist(0.3).unwrap();
        let v = e.f.at(5, 1).unwrap();
        assert!((v + Complex64::from_polar(1.0, 0.3 * 5f64.ln())).norm() < 1e-15);
        assert_eq!(e.f.at(2, 2).unwrap(), c(0.0, 0.0));
        assert!(make_moebius_twist(0.0).is_err());
        assert!(make_moebius_twist(1.5).is_err());
    }

    #[test]
    fn twist_product_entries() {
        let e = make_twist_product(&[0.08, 0.4]).unwrap();
        assert_eq!(e.params.d, 2);
        let p = 11u64;
        let lp = (p as f64).ln();
        let lam = lambda_of(&e.f, p, 1).unwrap().get(1);
        let expect = -(Complex64::from_polar(1.0, 0.08 * lp) + Complex64::from_polar(1.0, 0.4 * lp)) * lp;
        assert!((lam - expect).norm() < 1e-12);
        let single = make_twist_product(&[0.3]).unwrap();
        assert_eq!(single.f.label(), "moebius_twist:gamma=0.3");
        assert!(make_twist_product(&[0.1, 0.1]).is_err());
        assert!(make_twist_product(&[]).is_err());
    }

    #[test]
    fn remark_entries() {
        let e = make_remark(2).unwrap();
        let l101 = lambda_of(&e.f, 101, 3).unwrap();
        let lp = 101f64.ln();
        assert!((l101.get(1).re - (-2.0 + 1.0 / lp.ln()) * lp).abs() < 1e-10);
        let l97 = lambda_of(&e.f, 97, 3).unwrap();
        assert!((l97.get(1).re + 2.0 * 97f64.ln()).abs() < 1e-10);
        assert!((l97.get(3).re + 2.0 * 97f64.ln()).abs() < 1e-9);
        assert!(class_check(&e.f, &e.params, 2000, 5).unwrap().passes);
    }

    #[test]
    fn kronecker_matches_legendre_table() {
        // quadratic residues mod 5 are 1 and 4
        let expect = [0, 1, -1, -1, 1];
        for n in 1..40u64 {
            assert_eq!(kronecker(5, n), expect[(n % 5) as usize], "n={n}");
        }
        let chi = quadratic_char(5).unwrap();
        assert_eq!(chi.at(2, 1).unwrap().re, -1.0);
        assert_eq!(chi.at(5, 1).unwrap().re, 0.0);
        assert_eq!(fundamental_discriminant(3).unwrap(), -3);
        assert_eq!(fundamental_discriminant(8).unwrap(), 8);
        assert!(matches!(quadratic_char(9), Err(Error::UnsupportedModulus(9))));
    }

    #[test]
    fn character_is_multiplicative() {
        for d in [5i64, -3, 8, -4, 13, -7] {
            for m in 1..200u64 {
                for n in 1..60u64 {
                    if num_gcd(m * n, d.unsigned_abs()) == 1 {
                        assert_eq!(kronecker(d, m * n), kronecker(d, m) * kronecker(d, n));
                    }
                }
            }
        }
    }

    fn num_gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            num_gcd(b, a % b)
        }
    }
}
