//! Transition points, the bounded-interval verifier, the zero-to-interval
//! correspondence and the heuristic integrals.
//!
//! A profile stores the logarithms of its cut points in ascending order,
//! `log Q_{D+1} <= log Q_D <= ... <= log Q_{m+1}`, with `Q_m = ∞` implicit.
//! On level `j` (for `m <= j <= D`) the sums `Σ_{p∈I} (Re f(p) + j)/p` should
//! stay bounded for every `I ⊆ [Q_{j+1}, Q_j)`.

use std::f64::consts::E;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lseries::{SiftedSeries, ZeroSet};
use crate::multfun::{convolve, tau_k, ClassParams, MultFunc};
use crate::numeric::integrate;
use crate::primes::Limits;
use crate::sums::PrimeLogTable;

/// Largest admissible ratio between consecutive `y` grid points.
pub const MAX_GRID_RATIO: f64 = 1.2;
/// A zero this close to 1 counts towards the multiplicity at 1.
pub const AT_ONE: f64 = 1e-6;
/// Absolute tolerance of [`heuristic_integral`].
pub const HEURISTIC_TOL: f64 = 1e-6;
/// Far end of the "after the transition" window, in `log y`.
pub const POST_WINDOW_END: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Constructed,
    FromZeros,
}

/// One minimisation step of the construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// `k` in `Z_{k+1}`; 0 for `Y_1`.
    pub k: u32,
    /// Real point at which `L_y` was evaluated.
    pub sigma: f64,
    /// Grid minimiser.
    pub y_star: f64,
    pub l_value: Complex64,
    /// `log y* · max(1, 1/|L_{y*}|)`.
    pub log_value: f64,
    /// The minimiser is the first or last admissible grid point.
    pub at_endpoint: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionProfile {
    pub m: u32,
    pub d: u32,
    /// `log Q_{D+1}, ..., log Q_{m+1}` (ascending).
    pub log_cut_points: Vec<f64>,
    /// Parallel to `log_cut_points`; set when the point was capped at the ceiling.
    pub saturated: Vec<bool>,
    pub provenance: Provenance,
    pub diagnostics: Vec<StepRecord>,
    pub warnings: Vec<String>,
}

impl TransitionProfile {
    /// `log Q_j`, or `None` for `j <= m` (where `Q_j = ∞`).
    pub fn log_q(&self, j: u32) -> Option<f64> {
        if j <= self.m || j > self.d + 1 {
            return None;
        }
        Some(self.log_cut_points[(self.d + 1 - j) as usize])
    }

    pub fn q(&self, j: u32) -> f64 {
        self.log_q(j).map_or(f64::INFINITY, f64::exp)
    }

    pub fn is_monotone(&self) -> bool {
        self.log_cut_points.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn any_saturated(&self) -> bool {
        self.saturated.iter().any(|&s| s)
    }

    /// Copy with `Q_a` and `Q_b` exchanged (used as a negative control).
    pub fn swapped(&self, a: u32, b: u32) -> Result<Self> {
        let (Some(_), Some(_)) = (self.log_q(a), self.log_q(b)) else {
            return Err(Error::domain(format!("levels {a} and {b} are not both finite cut points")));
        };
        let mut out = self.clone();
        let (ia, ib) = ((self.d + 1 - a) as usize, (self.d + 1 - b) as usize);
        out.log_cut_points.swap(ia, ib);
        out.saturated.swap(ia, ib);
        out.warnings.push(format!("levels Q_{a} and Q_{b} swapped"));
        Ok(out)
    }
}

/// Geometric grid from `lo` to `hi` (both included) with ratio at most `ratio`.
pub fn geometric_grid(lo: f64, hi: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && ratio > 1.0) {
        return Err(Error::domain("geometric grid needs 0 < lo <= hi and ratio > 1"));
    }
    let span = (hi / lo).ln();
    let steps = (span / ratio.ln()).ceil().max(1.0) as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|i| lo * (span * i as f64 / steps as f64).exp()).collect();
    grid[0] = lo;
    grid[steps] = hi;
    grid.dedup();
    Ok(grid)
}

/// `log y · max(1, 1/|L|)` minimised over the supplied points.
fn grid_min(k: u32, sigma: f64, ys: &[f64], values: &[Complex64]) -> StepRecord {
    let score = |i: usize| ys[i].ln() * (1.0 / values[i].norm()).max(1.0);
    let best = (0..ys.len()).min_by(|&a, &b| score(a).total_cmp(&score(b))).expect("non-empty grid");
    StepRecord {
        k,
        sigma,
        y_star: ys[best],
        l_value: values[best],
        log_value: score(best),
        at_endpoint: ys.len() > 1 && (best == 0 || best + 1 == ys.len()),
    }
}

/// The inductive construction of the cut points on a finite `y` grid.
///
/// `y_grid` must start at `Q`, be increasing with ratio at most
/// [`MAX_GRID_RATIO`]; its last point acts as the ceiling. `L_y` comes from
/// a Riesz-weighted model of `L(s, τ_m * f)` truncated at `x`.
pub fn transition_points(
    f: &MultFunc,
    params: &ClassParams,
    m: u32,
    y_grid: &[f64],
    x: u64,
    limits: &Limits,
) -> Result<TransitionProfile> {
    let d = params.d;
    if m > d {
        return Err(Error::domain(format!("multiplicity {m} exceeds D = {d}")));
    }
    let q = params.q;
    if q < 2.0 {
        return Err(Error::domain("Q must be at least 2"));
    }
    if y_grid.first().is_none_or(|&y| (y - q).abs() > 1e-9 * q) {
        return Err(Error::domain("y grid must start at Q"));
    }
    if y_grid.windows(2).any(|w| !(w[1] > w[0] && w[1] <= w[0] * MAX_GRID_RATIO * (1.0 + 1e-12))) {
        return Err(Error::domain(format!("y grid must increase with ratio <= {MAX_GRID_RATIO}")));
    }
    let ceiling = *y_grid.last().unwrap();
    limits.check_sum("y grid", ceiling.floor() as u64)?;
    limits.check_sum("X", x)?;
    let log_ceiling = ceiling.ln();

    let mut profile = TransitionProfile {
        m,
        d,
        log_cut_points: vec![q.ln()],
        saturated: vec![false],
        provenance: Provenance::Constructed,
        diagnostics: Vec::new(),
        warnings: Vec::new(),
    };
    if m == d {
        return Ok(profile);
    }

    let g = if m == 0 { f.clone() } else { convolve(&tau_k(m)?, f) };
    let radius = (1.05 / params.log_q()).max(0.05);
    let series = SiftedSeries::new(&g, radius, x, limits)?;

    // Y_1 .. Y_{D-m}, as logarithms.
    let mut ys_log: Vec<f64> = Vec::new();
    let push = |profile: &mut TransitionProfile, step: StepRecord, log_y: f64| {
        if step.at_endpoint {
            let msg = format!("step k = {}: minimiser y = {:.4e} at a grid endpoint", step.k, step.y_star);
            log::warn!("{msg}");
            profile.warnings.push(msg);
        }
        profile.diagnostics.push(step);
        log_y
    };

    let values = series.values(1.0, 0, y_grid, limits)?;
    let step = grid_min(0, 1.0, y_grid, &values);
    let v = step.log_value;
    ys_log.push(push(&mut profile, step, v));

    for k in 1..(d - m) {
        let log_yk = *ys_log.last().unwrap();
        let sigma = 1.0 + 1.0 / log_yk;
        let window: Vec<f64> = y_grid.iter().copied().filter(|y| y.ln() <= log_yk * (1.0 + 1e-12)).collect();
        let values = series.values(sigma, k, &window, limits)?;
        let step = grid_min(k, sigma, &window, &values);
        let z = step.log_value;
        let next = push(&mut profile, step, z).min(log_yk);
        if z >= log_yk {
            log::debug!("k = {k}: Z >= Y_k, keeping Y_{{k+1}} = Y_k");
        }
        ys_log.push(next);
    }

    // Q_{m+j} = Y_j, stored ascending: Q_D = Y_{D-m} first.
    for &ly in ys_log.iter().rev() {
        let saturated = ly >= log_ceiling * (1.0 - 1e-12);
        profile.log_cut_points.push(ly.min(log_ceiling));
        profile.saturated.push(saturated);
    }
    if profile.any_saturated() {
        profile.warnings.push(format!("cut points capped at the ceiling {ceiling:.3e}"));
    }
    assert!(profile.is_monotone(), "constructed profile is not monotone: {:?}", profile.log_cut_points);
    Ok(profile)
}

/// Cut points `e^{1/|ρ_j - 1|}` from the zeros near 1, with the outer
/// convention `Q_{d+1} = Q^{1/c0}`. `D` is taken to be the zero count `d`.
pub fn zero_to_intervals(zeros: &ZeroSet, q: f64, c0: f64) -> Result<TransitionProfile> {
    if !(q > 1.0 && c0 > 0.0) {
        return Err(Error::domain("need Q > 1 and c0 > 0"));
    }
    let mut dist: Vec<f64> = zeros
        .zeros
        .iter()
        .flat_map(|z| std::iter::repeat_n((z.rho - 1.0).norm(), z.multiplicity as usize))
        .collect();
    dist.sort_by(f64::total_cmp);
    let m = dist.iter().filter(|&&r| r <= AT_ONE).count() as u32;
    let d = dist.len() as u32;
    let mut log_cut_points = vec![q.ln() / c0];
    log_cut_points.extend(dist[m as usize..].iter().rev().map(|r| 1.0 / r));
    let n = log_cut_points.len();
    let mut warnings = Vec::new();
    if n > 1 && log_cut_points[1] < log_cut_points[0] {
        warnings.push("a zero lies outside the ball implied by c0".to_string());
    }
    Ok(TransitionProfile {
        m,
        d,
        log_cut_points,
        saturated: vec![false; n],
        provenance: Provenance::FromZeros,
        diagnostics: Vec::new(),
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub j: u32,
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub profile: TransitionProfile,
    pub records: Vec<IntervalRecord>,
    pub max_abs: f64,
    pub threshold: f64,
    pub pass: bool,
    pub warnings: Vec<String>,
}

/// Sample every sub-interval between `subintervals + 1` log-spaced
/// breakpoints of each level `[Q_{j+1}, min(Q_j, x))` and compare the largest
/// `|Σ (Re f(p) + j)/p|` with `threshold`.
pub fn verify_structure(
    f: &MultFunc,
    profile: &TransitionProfile,
    subintervals: usize,
    x: u64,
    threshold: f64,
    limits: &Limits,
) -> Result<StructureReport> {
    if subintervals == 0 {
        return Err(Error::domain("need at least one sub-interval per level"));
    }
    limits.check_sum("X", x)?;
    let log_x = (x as f64).ln();
    let mut warnings = Vec::new();
    let mut levels: Vec<(u32, Vec<f64>)> = Vec::new();
    for j in profile.m..=profile.d {
        let lo = profile.log_q(j + 1).unwrap().max(2f64.ln());
        let hi = profile.log_q(j).unwrap_or(f64::INFINITY).min(log_x);
        if hi <= lo {
            let msg = format!("level {j} is empty below the ceiling");
            log::warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        let points = (0..=subintervals)
            .map(|i| (lo + (hi - lo) * i as f64 / subintervals as f64).exp())
            .map(|y| y.clamp(2.0, x as f64))
            .collect();
        levels.push((j, points));
    }
    let all: Vec<f64> = levels.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let table = PrimeLogTable::build(f, &all, limits)?;
    let mut records = Vec::new();
    for (j, points) in &levels {
        for a in 0..points.len() {
            for b in a + 1..points.len() {
                let value = table.interval(points[a], points[b], *j)?;
                records.push(IntervalRecord { j: *j, lo: points[a], hi: points[b], value });
            }
        }
    }
    let max_abs = records.iter().map(|r| r.value.abs()).fold(0.0, f64::max);
    Ok(StructureReport { profile: profile.clone(), records, max_abs, threshold, pass: max_abs <= threshold, warnings })
}

/// `Re ∫_{e^a}^{e^b} y^{ρ-2} / log y dy`, computed as `Re ∫_a^b e^{(ρ-1)u}/u du`.
pub fn heuristic_integral_log(rho: Complex64, a: f64, b: f64) -> Result<f64> {
    if !(a >= 1.0) {
        return Err(Error::domain(format!("lower end e^{a} is below e")));
    }
    if !(b >= a) {
        return Err(Error::domain("interval must satisfy lo <= hi"));
    }
    let w = rho - 1.0;
    let g = |u: f64| (w * u).exp().re / u;
    // Split at the oscillation period so each piece is easy for the rule.
    let pieces = ((b - a) * w.im.abs() / std::f64::consts::PI).ceil().max(1.0) as usize;
    let mut total = 0.0;
    for i in 0..pieces {
        let lo = a + (b - a) * i as f64 / pieces as f64;
        let hi = a + (b - a) * (i + 1) as f64 / pieces as f64;
        total += integrate(g, lo, hi, HEURISTIC_TOL / pieces as f64, 200).value;
    }
    Ok(total)
}

/// `Re ∫_lo^hi y^{ρ-2} / log y dy` for `e <= lo <= hi`.
pub fn heuristic_integral(rho: Complex64, lo: f64, hi: f64) -> Result<f64> {
    if !(lo >= E) {
        return Err(Error::domain(format!("lower end {lo} is below e")));
    }
    heuristic_integral_log(rho, lo.ln(), hi.ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicRow {
    pub lo: f64,
    pub hi: f64,
    /// `log(log hi / log lo)`.
    pub loglog_ratio: f64,
    /// `-Σ_ρ heuristic_integral(ρ, I)`.
    pub prediction: f64,
    /// `Σ_{lo<p<=hi} Re f(p)/p`.
    pub measured: Option<f64>,
}

impl HeuristicRow {
    pub fn gap(&self) -> Option<f64> {
        self.measured.map(|m| (m - self.prediction).abs())
    }
}

/// Model prediction per interval, with the measured prime sum alongside when
/// `f` is given. `zeros` lists each zero as often as its multiplicity.
pub fn heuristic_demo(
    zeros: &[Complex64],
    intervals: &[(f64, f64)],
    f: Option<&MultFunc>,
    limits: &Limits,
) -> Result<Vec<HeuristicRow>> {
    let mut rows = intervals
        .par_iter()
        .map(|&(lo, hi)| {
            let mut prediction = 0.0;
            for &rho in zeros {
                prediction -= heuristic_integral(rho, lo, hi)?;
            }
            Ok(HeuristicRow { lo, hi, loglog_ratio: (hi.ln() / lo.ln()).ln(), prediction, measured: None })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(f) = f {
        let points: Vec<f64> = intervals.iter().flat_map(|&(lo, hi)| [lo, hi]).collect();
        let table = PrimeLogTable::build(f, &points, limits)?;
        for row in &mut rows {
            row.measured = Some(table.interval(row.lo, row.hi, 0)?);
        }
    }
    Ok(rows)
}

/// Consecutive intervals between `points + 1` log-log-spaced breakpoints of `[lo, hi]`.
pub fn log_intervals(lo: f64, hi: f64, count: usize) -> Result<Vec<(f64, f64)>> {
    if !(lo > 1.0 && hi > lo && count > 0) {
        return Err(Error::domain("need 1 < lo < hi and count > 0"));
    }
    let (a, b) = (lo.ln().ln(), hi.ln().ln());
    let edge = |i: usize| if i == 0 { lo } else if i == count { hi } else { (a + (b - a) * i as f64 / count as f64).exp().exp() };
    Ok((0..count).map(|i| (edge(i), edge(i + 1))).collect())
}

/// Sums over the windows just before and just after `e^{1/|γ|}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTransition {
    pub gamma: f64,
    pub before: HeuristicRow,
    pub after: HeuristicRow,
    /// Smallest of `-value / loglog_ratio` before the transition (model and measurement).
    pub growth: f64,
    /// Largest of `|value| / loglog_ratio` after it.
    pub flatness: f64,
    pub visible: bool,
}

/// Criterion for "visible": sums fall at least half as fast as `-log log y`
/// before the transition and move at most half as fast after it.
pub const PHASE_RATE: f64 = 0.5;

/// Before/after comparison for the zero `1 + iγ` and (optionally) a function realising it.
pub fn phase_transition(gamma: f64, f: Option<&MultFunc>, limits: &Limits) -> Result<PhaseTransition> {
    let t = 1.0 / gamma.abs();
    if !(t > 1.0 && t < POST_WINDOW_END) {
        return Err(Error::domain(format!("1/|γ| = {t} must lie in (1, {POST_WINDOW_END})")));
    }
    let rho = Complex64::new(1.0, gamma);
    let rows = heuristic_demo(&[rho], &[(E, t.exp()), (t.exp(), POST_WINDOW_END.exp())], f, limits)?;
    let (before, after) = (rows[0].clone(), rows[1].clone());
    let values = |r: &HeuristicRow| [Some(r.prediction), r.measured].into_iter().flatten().collect::<Vec<_>>();
    let growth = values(&before).iter().map(|v| -v / before.loglog_ratio).fold(f64::INFINITY, f64::min);
    let flatness = values(&after).iter().map(|v| v.abs() / after.loglog_ratio).fold(0.0, f64::max);
    Ok(PhaseTransition { gamma, before, after, growth, flatness, visible: growth >= PHASE_RATE && flatness <= PHASE_RATE })
}
