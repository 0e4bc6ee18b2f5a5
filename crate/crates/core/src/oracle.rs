//! Brute-force reference paths and the frozen-constants file.
//!
//! The reference functions use trial division and divisor enumeration only;
//! they never touch the sieves or the Λ-recursions of the production code.
//! The suites below run the scans whose outcomes are frozen once and then
//! compared bit-for-bit (to `1e-9`) on every rerun.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gallery::{make_basic, make_moebius_twist, make_twist_product, Basic};
use crate::lseries::{find_zeros, log_l_truncated_grid, ZeroSet};
use crate::multfun::MultFunc;
use crate::numeric::parse_flat_kv;
use crate::primes::Limits;
use crate::structure::{
    geometric_grid, heuristic_demo, log_intervals, transition_points, verify_structure, zero_to_intervals, HeuristicRow,
    StructureReport, TransitionProfile,
};
use crate::sums::PrimeLogTable;

/// Largest `n` for the divisor-enumeration oracles.
pub const BRUTE_CONVOLUTION_MAX: u64 = 100_000;
/// Largest `x` for [`brute_partial_sums`].
pub const BRUTE_PARTIAL_MAX: u64 = 1_000_000;
/// Relative tolerance for reruns of frozen values.
pub const REPRODUCE_TOL: f64 = 1e-9;
/// Default location of the committed constants.
pub const FROZEN_FILE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/frozen_constants.txt");

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `(p, e)` pairs of `n` by trial division.
pub fn trial_factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// `f(n)` for `n = 1..=n_max` (index 0 unused) from the prime-power values.
pub fn brute_values(f: &MultFunc, n_max: u64) -> Result<Vec<Complex64>> {
    check(n_max, BRUTE_PARTIAL_MAX)?;
    let mut out = vec![ZERO; n_max as usize + 1];
    for n in 1..=n_max {
        let mut v = ONE;
        for (p, e) in trial_factor(n) {
            v *= f.at(p, e)?;
        }
        out[n as usize] = v;
    }
    Ok(out)
}

fn check(n: u64, ceiling: u64) -> Result<()> {
    if n > ceiling {
        return Err(Error::Capacity { what: "oracle range", requested: n, ceiling });
    }
    Ok(())
}

/// `(f*h)(n) = Σ_{d|n} f(d) h(n/d)` for `n <= n_max`.
pub fn brute_convolution(f: &MultFunc, h: &MultFunc, n_max: u64) -> Result<Vec<Complex64>> {
    check(n_max, BRUTE_CONVOLUTION_MAX)?;
    let (fv, hv) = (brute_values(f, n_max)?, brute_values(h, n_max)?);
    let n = n_max as usize;
    let mut out = vec![ZERO; n + 1];
    for d in 1..=n {
        for k in 1..=n / d {
            out[d * k] += fv[d] * hv[k];
        }
    }
    Ok(out)
}

/// Dirichlet inverse by the recursion `f⁻¹(n) = -Σ_{d|n, d>1} f(d) f⁻¹(n/d)`,
/// with each finished value pushed forward to its multiples.
pub fn brute_inverse(f: &MultFunc, n_max: u64) -> Result<Vec<Complex64>> {
    check(n_max, BRUTE_CONVOLUTION_MAX)?;
    let fv = brute_values(f, n_max)?;
    let n = n_max as usize;
    let mut acc = vec![ZERO; n + 1];
    let mut inv = vec![ZERO; n + 1];
    for m in 1..=n {
        inv[m] = if m == 1 { ONE / fv[1] } else { -acc[m] / fv[1] };
        for d in 2..=n / m {
            acc[m * d] += fv[d] * inv[m];
        }
    }
    Ok(inv)
}

/// `Λ_f` from `f log = f * Λ_f`, solved term by term.
pub fn brute_lambda(f: &MultFunc, n_max: u64) -> Result<Vec<Complex64>> {
    check(n_max, BRUTE_CONVOLUTION_MAX)?;
    let fv = brute_values(f, n_max)?;
    let n = n_max as usize;
    let mut acc = vec![ZERO; n + 1];
    let mut lam = vec![ZERO; n + 1];
    for m in 2..=n {
        lam[m] = (fv[m] * (m as f64).ln() - acc[m]) / fv[1];
        for k in 2..=n / m {
            acc[m * k] += lam[m] * fv[k];
        }
    }
    Ok(lam)
}

/// `M_f(x)` for `x = 0..=x_max`.
pub fn brute_partial_sums(f: &MultFunc, x_max: u64) -> Result<Vec<Complex64>> {
    check(x_max, BRUTE_PARTIAL_MAX)?;
    let values = brute_values(f, x_max)?;
    let mut out = Vec::with_capacity(values.len());
    let mut acc = ZERO;
    out.push(ZERO);
    for v in &values[1..] {
        acc += v;
        out.push(acc);
    }
    Ok(out)
}

/// `B_2, B_4, ..., B_16`.
const BERNOULLI: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// `ζ(s)` by Euler–Maclaurin with `N = 50` and eight Bernoulli corrections.
pub fn zeta_reference(s: Complex64) -> Result<Complex64> {
    if s == ONE {
        return Err(Error::Pole);
    }
    if s.re <= 0.0 {
        return Err(Error::domain("zeta_reference needs Re s > 0"));
    }
    const N: f64 = 50.0;
    let mut sum = ZERO;
    for n in 1..50 {
        sum += (-s * (n as f64).ln()).exp();
    }
    let n_s = (-s * N.ln()).exp();
    sum += n_s * N / (s - 1.0) + n_s * 0.5;
    // term_k = B_{2k}/(2k)! · s(s+1)...(s+2k-2) · N^{-s-2k+1}
    let mut rising = s;
    let mut fact = 2.0;
    let mut npow = n_s / N;
    for (k, b) in BERNOULLI.iter().enumerate() {
        sum += rising * npow * (b / fact);
        let k2 = 2.0 * (k + 1) as f64;
        rising *= (s + (k2 - 1.0)) * (s + k2);
        fact *= (k2 + 1.0) * (k2 + 2.0);
        npow /= N * N;
    }
    Ok(sum)
}

/// Flat `key = value` store backing the frozen thresholds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrozenConstants {
    pub values: BTreeMap<String, f64>,
}

impl FrozenConstants {
    /// Missing file reads as an empty store.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = match std::fs::read_to_string(path.as_ref()) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::default()),
            Err(e) => return Err(e.into()),
        };
        let mut values = BTreeMap::new();
        for (k, v) in parse_flat_kv(&text) {
            let x: f64 = v.parse().map_err(|_| Error::domain(format!("frozen constant {k} = {v} is not a number")))?;
            values.insert(k, x);
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Result<f64> {
        self.values.get(key).copied().ok_or_else(|| Error::Check(format!("frozen constant {key} is missing")))
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# Frozen observations and thresholds; regenerate with `multlab check --suite <name> --freeze`.\n");
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v:e}\n"));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.render())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenEntry {
    pub key: String,
    pub value: f64,
    /// Value found in the file before this run.
    pub frozen: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub suite: String,
    pub entries: Vec<FrozenEntry>,
    /// Observations that exceed their threshold.
    pub failures: Vec<String>,
    pub written: bool,
}

impl OracleReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

pub const SUITES: [&str; 3] = ["lemma22", "structure", "heuristic"];

/// Run `suite` (or `all`), compare with the file at `path` and add missing
/// keys. With `overwrite` every key is rewritten instead of compared.
pub fn freeze_constants(suite: &str, path: impl AsRef<Path>, overwrite: bool, limits: &Limits) -> Result<OracleReport> {
    let names: Vec<&str> = match suite {
        "all" => SUITES.to_vec(),
        s if SUITES.contains(&s) => vec![s],
        s => return Err(Error::domain(format!("unknown suite `{s}` (expected one of {SUITES:?} or all)"))),
    };
    let mut observed: Vec<(String, f64)> = Vec::new();
    for name in names {
        observed.extend(match name {
            "lemma22" => lemma22_suite(limits)?.iter().flat_map(Lemma22Scan::constants).collect(),
            "structure" => structure_scan(limits)?.constants(),
            _ => heuristic_scan(limits)?.constants(),
        });
    }
    let mut store = FrozenConstants::load(path.as_ref())?;
    let mut entries = Vec::new();
    let mut written = false;
    for (key, value) in observed {
        let frozen = store.values.get(&key).copied();
        match frozen {
            Some(old) if !overwrite => {
                if (value - old).abs() > REPRODUCE_TOL * old.abs().max(1.0) {
                    return Err(Error::Regression { key, value, frozen: old });
                }
            }
            _ => {
                store.values.insert(key.clone(), value);
                written = true;
            }
        }
        entries.push(FrozenEntry { key, value, frozen });
    }
    if written {
        store.save(path.as_ref())?;
    }
    let failures = threshold_failures(&store, &entries);
    Ok(OracleReport { suite: suite.to_string(), entries, failures, written })
}

/// Every `<prefix>.threshold` bounds the other observations under `<prefix>`
/// whose key ends in `max_abs`, `sup` or `max_gap`.
fn threshold_failures(store: &FrozenConstants, entries: &[FrozenEntry]) -> Vec<String> {
    let mut out = Vec::new();
    for e in entries {
        let Some((prefix, last)) = e.key.rsplit_once('.') else { continue };
        if !matches!(last, "max_abs" | "zero_max_abs" | "sup" | "max_gap") {
            continue;
        }
        if let Some(&t) = store.values.get(&format!("{prefix}.threshold")) {
            if e.value > t {
                out.push(format!("{} = {} exceeds {prefix}.threshold = {t}", e.key, e.value));
            }
        }
    }
    out
}

/// Grid shared by the Euler-product comparison.
pub const LEMMA22_GRID: (f64, f64, usize) = (1e2, 1e7, 5);
pub const LEMMA22_CUTOFF: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma22Row {
    pub y: f64,
    pub z: f64,
    pub log_l_re: f64,
    pub prime_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma22Scan {
    pub name: String,
    pub d: u32,
    pub rows: Vec<Lemma22Row>,
    pub sup: f64,
}

impl Lemma22Scan {
    pub fn threshold(&self) -> f64 {
        2.0 + self.d as f64
    }

    pub fn constants(&self) -> Vec<(String, f64)> {
        vec![(format!("lemma22.{}.sup", self.name), self.sup), (format!("lemma22.{}.threshold", self.name), self.threshold())]
    }
}

/// `sup |Re log L_y(1 + 1/log z, f) - Σ_{y<p<=z} Re f(p)/p|` over the grid.
pub fn lemma22_scan(name: &str, f: &MultFunc, d: u32, limits: &Limits) -> Result<Lemma22Scan> {
    let (lo, hi, n) = LEMMA22_GRID;
    let grid: Vec<f64> = (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect();
    let table = PrimeLogTable::build(f, &grid, limits)?;
    let mut rows = Vec::new();
    for &z in &grid {
        let s = Complex64::new(1.0 + 1.0 / z.ln(), 0.0);
        let logs = log_l_truncated_grid(f, s, &grid, LEMMA22_CUTOFF, limits)?;
        for (&y, pt) in grid.iter().zip(&logs) {
            let prime_sum = if y < z { table.interval(y, z, 0)? } else { 0.0 };
            rows.push(Lemma22Row { y, z, log_l_re: pt.log_value.unwrap_or(ZERO).re, prime_sum });
        }
    }
    let sup = rows.iter().map(|r| (r.log_l_re - r.prime_sum).abs()).fold(0.0, f64::max);
    Ok(Lemma22Scan { name: name.to_string(), d, rows, sup })
}

pub fn lemma22_suite(limits: &Limits) -> Result<Vec<Lemma22Scan>> {
    let cases = [
        ("one", make_basic(Basic::One)?),
        ("moebius", make_basic(Basic::Moebius)?),
        ("twist_0.3", make_moebius_twist(0.3)?),
        ("moebius_conv_moebius", make_basic(Basic::MoebiusConvMoebius)?),
    ];
    cases.iter().map(|(name, e)| lemma22_scan(name, &e.f, e.params.d, limits)).collect()
}

/// Parameters of the structure scan.
pub const STRUCTURE_CEILING: u64 = 100_000_000;
pub const STRUCTURE_GRID_RATIO: f64 = 1.2;
pub const STRUCTURE_SUBINTERVALS: usize = 6;
pub const PRODUCT_GAMMAS: [f64; 2] = [0.08, 0.4];
pub const PRODUCT_LOG_Q: f64 = 1.8;
pub const PRODUCT_C0: f64 = 0.8;
pub const ZEROS_X: u64 = 10_000_000;
/// Head-room of a structure threshold over the largest observed value.
pub const THRESHOLD_SLACK: f64 = 1.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureScan {
    pub twist: TransitionProfile,
    pub twist_report: StructureReport,
    pub product: TransitionProfile,
    pub product_report: StructureReport,
    pub zeros: ZeroSet,
    pub zero_profile: TransitionProfile,
    pub zero_report: StructureReport,
    /// `Q_1 ↔ Q_2` in the constructed profile.
    pub swapped_report: StructureReport,
}

impl StructureScan {
    pub fn twist_threshold(&self) -> f64 {
        THRESHOLD_SLACK * self.twist_report.max_abs
    }

    pub fn product_threshold(&self) -> f64 {
        THRESHOLD_SLACK * self.product_report.max_abs.max(self.zero_report.max_abs)
    }

    pub fn constants(&self) -> Vec<(String, f64)> {
        let t = "structure.twist_0.1";
        let p = "structure.product_0.08_0.4";
        vec![
            (format!("{t}.log_q1"), self.twist.log_q(1).unwrap_or(f64::NAN)),
            (format!("{t}.max_abs"), self.twist_report.max_abs),
            (format!("{t}.threshold"), self.twist_threshold()),
            (format!("{p}.log_q1"), self.product.log_q(1).unwrap_or(f64::NAN)),
            (format!("{p}.log_q2"), self.product.log_q(2).unwrap_or(f64::NAN)),
            (format!("{p}.max_abs"), self.product_report.max_abs),
            (format!("{p}.zero_max_abs"), self.zero_report.max_abs),
            (format!("{p}.swapped_max_abs_control"), self.swapped_report.max_abs),
            (format!("{p}.threshold"), self.product_threshold()),
        ]
    }
}

/// Transition profiles and verifier runs for the twist `γ = 0.1` (`Q = 10`)
/// and the two-twist product, by construction and from zeros.
pub fn structure_scan(limits: &Limits) -> Result<StructureScan> {
    let ceiling = STRUCTURE_CEILING as f64;
    let x = STRUCTURE_CEILING;
    let unjudged = f64::INFINITY;

    let e = make_moebius_twist(0.1)?;
    let grid = geometric_grid(e.params.q, ceiling, STRUCTURE_GRID_RATIO)?;
    let twist = transition_points(&e.f, &e.params, 0, &grid, x, limits)?;
    let twist_report = verify_structure(&e.f, &twist, STRUCTURE_SUBINTERVALS, x, unjudged, limits)?;

    let q = PRODUCT_LOG_Q.exp();
    let e = make_twist_product(&PRODUCT_GAMMAS)?.with_q(q)?;
    let grid = geometric_grid(q, ceiling, STRUCTURE_GRID_RATIO)?;
    let product = transition_points(&e.f, &e.params, 0, &grid, x, limits)?;
    let product_report = verify_structure(&e.f, &product, STRUCTURE_SUBINTERVALS, x, unjudged, limits)?;
    let zeros = find_zeros(&e.f, &e.params, PRODUCT_C0, ZEROS_X, limits)?;
    let zero_profile = zero_to_intervals(&zeros, q, PRODUCT_C0)?;
    let zero_report = verify_structure(&e.f, &zero_profile, STRUCTURE_SUBINTERVALS, x, unjudged, limits)?;
    let swapped_report = verify_structure(&e.f, &product.swapped(1, 2)?, STRUCTURE_SUBINTERVALS, x, unjudged, limits)?;

    Ok(StructureScan { twist, twist_report, product, product_report, zeros, zero_profile, zero_report, swapped_report })
}

pub const HEURISTIC_GAMMA: f64 = 0.3;
pub const HEURISTIC_RANGE: (f64, f64, usize) = (30.0, 1e7, 6);
/// Upper limit any frozen heuristic constant may take.
pub const HEURISTIC_CAP: f64 = 2.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicScan {
    pub rows: Vec<HeuristicRow>,
    pub max_gap: f64,
}

impl HeuristicScan {
    pub fn threshold(&self) -> f64 {
        (THRESHOLD_SLACK * self.max_gap).min(HEURISTIC_CAP)
    }

    pub fn constants(&self) -> Vec<(String, f64)> {
        vec![
            ("heuristic.twist_0.3.max_gap".into(), self.max_gap),
            ("heuristic.twist_0.3.threshold".into(), self.threshold()),
        ]
    }
}

/// Model against measurement for the twist `γ = 0.3` on a log-log grid.
pub fn heuristic_scan(limits: &Limits) -> Result<HeuristicScan> {
    let (lo, hi, n) = HEURISTIC_RANGE;
    let f = make_moebius_twist(HEURISTIC_GAMMA)?.f;
    let rho = Complex64::new(1.0, HEURISTIC_GAMMA);
    let rows = heuristic_demo(&[rho], &log_intervals(lo, hi, n)?, Some(&f), limits)?;
    let max_gap = rows.iter().filter_map(HeuristicRow::gap).fold(0.0, f64::max);
    Ok(HeuristicScan { rows, max_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{moebius, one};
    use crate::lseries::zeta;
    use std::f64::consts::PI;

    #[test]
    fn trial_factor_small() {
        assert_eq!(trial_factor(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert_eq!(trial_factor(97), vec![(97, 1)]);
        assert!(trial_factor(1).is_empty());
    }

    #[test]
    fn brute_examples() {
        let c = brute_convolution(&one(), &one(), 12).unwrap();
        assert_eq!(c[12], Complex64::new(6.0, 0.0));
        let c = brute_convolution(&moebius(), &one(), 1000).unwrap();
        assert!(c[2..].iter().all(|v| v.norm() == 0.0) && c[1] == ONE);
        let m = brute_partial_sums(&moebius(), 1000).unwrap();
        assert_eq!((m[10].re, m[100].re, m[1000].re), (-1.0, 1.0, 2.0));
        let m = brute_partial_sums(&one(), 50).unwrap();
        assert_eq!(m[50].re, 50.0);
        assert!(brute_partial_sums(&one(), BRUTE_PARTIAL_MAX + 1).is_err());
    }

    #[test]
    fn brute_lambda_of_one_is_von_mangoldt() {
        let lam = brute_lambda(&one(), 64).unwrap();
        assert!((lam[8].re - 2f64.ln()).abs() < 1e-12);
        assert!((lam[49].re - 7f64.ln()).abs() < 1e-12);
        assert!(lam[12].norm() < 1e-12);
        let inv = brute_inverse(&one(), 30).unwrap();
        assert_eq!(inv[30].re, -1.0);
    }

    #[test]
    fn zeta_reference_values() {
        let z2 = zeta_reference(Complex64::new(2.0, 0.0)).unwrap();
        assert!((z2.re - PI * PI / 6.0).abs() < 1e-10);
        assert_eq!(zeta_reference(ONE), Err(Error::Pole));
        assert!(zeta_reference(Complex64::new(1.0, 0.3)).unwrap().norm().is_finite());
        let inv = 1.0 / zeta_reference(Complex64::new(1.01, 0.0)).unwrap().re;
        assert!(inv > 0.0 && inv < 0.011);
        for s in [Complex64::new(0.5, 10.0), Complex64::new(0.7, 0.3), Complex64::new(1.2, -4.0)] {
            let (a, b) = (zeta_reference(s).unwrap(), zeta(s).unwrap());
            assert!((a - b).norm() <= 1e-10 * a.norm(), "{s}: {a} vs {b}");
        }
    }

    #[test]
    fn frozen_store_round_trip() {
        let mut c = FrozenConstants::default();
        c.values.insert("a.b.sup".into(), 0.123_456_789_012_345_6);
        c.values.insert("a.b.threshold".into(), 3.0);
        let dir = std::env::temp_dir().join(format!("multlab-frozen-{}", std::process::id()));
        c.save(&dir).unwrap();
        assert_eq!(FrozenConstants::load(&dir).unwrap(), c);
        std::fs::remove_file(&dir).unwrap();
        assert!(FrozenConstants::load(&dir).unwrap().values.is_empty());
    }
}
