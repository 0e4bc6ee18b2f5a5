//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use multlab::gallery::{make_basic, make_moebius_twist, make_twist_product, moebius, standard_entries, Basic};
use multlab::lseries::find_zeros;
use multlab::multfun::{class_check, convolve, dirichlet_inverse, f_of_lambda, lambda_of, tau_k, value_at};
use multlab::oracle::{
    brute_convolution, brute_inverse, brute_lambda, brute_partial_sums, brute_values, heuristic_scan, lemma22_suite,
    structure_scan, trial_factor, FrozenConstants, StructureScan, FROZEN_FILE, REPRODUCE_TOL,
};
use multlab::primes::{factor_segment, mertens_v, Limits};
use multlab::structure::phase_transition;
use multlab::sums::{partial_sum, partial_sums_at, sifted_sum};
use multlab::Complex64;

fn report(n: u32, pass: bool, detail: impl AsRef<str>) {
    println!("criterion {n}: {} ({})", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
    assert!(pass, "criterion {n} failed: {}", detail.as_ref());
}

fn frozen() -> FrozenConstants {
    FrozenConstants::load(FROZEN_FILE).expect("frozen constants file")
}

fn reproduces(store: &FrozenConstants, key: &str, value: f64) -> bool {
    let old = store.get(key).expect("frozen key");
    (value - old).abs() <= REPRODUCE_TOL * old.abs().max(1.0)
}

fn structure() -> &'static (StructureScan, Duration) {
    static SCAN: OnceLock<(StructureScan, Duration)> = OnceLock::new();
    SCAN.get_or_init(|| {
        let t = Instant::now();
        let scan = structure_scan(&Limits::default()).expect("structure scan");
        (scan, t.elapsed())
    })
}

#[test]
fn criterion_01_algebra_matches_divisor_enumeration() {
    const N: u64 = 10_000;
    let t = Instant::now();
    let fs = factor_segment(2, N + 1, &Limits::default()).unwrap();
    let entries = standard_entries().unwrap();
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    let mut note = |what: &str, n: u64, a: Complex64, b: Complex64| {
        let err = (a - b).norm() / b.norm().max(1.0);
        worst = worst.max(err);
        if err > 1e-10 {
            bad.push(format!("{what} at {n}: {a} vs {b}"));
        }
    };
    for (i, e) in entries.iter().enumerate() {
        let label = e.f.label();
        let partner = &entries[(i + 1) % entries.len()].f;
        let conv = convolve(&e.f, partner);
        let brute_conv = brute_convolution(&e.f, partner, N).unwrap();
        let inv = dirichlet_inverse(&e.f);
        let brute_inv = brute_inverse(&e.f, N).unwrap();
        for n in 2..=N {
            note(&format!("conv({label},..)"), n, value_at(&conv, n, &fs).unwrap(), brute_conv[n as usize]);
            note(&format!("inv({label})"), n, value_at(&inv, n, &fs).unwrap(), brute_inv[n as usize]);
        }
        let brute_lam = brute_lambda(&e.f, N).unwrap();
        let values = brute_values(&e.f, N).unwrap();
        for n in 2..=N {
            let fac = trial_factor(n);
            if fac.len() > 1 {
                note(&format!("lambda support ({label})"), n, brute_lam[n as usize], Complex64::new(0.0, 0.0));
                continue;
            }
            let (p, k) = fac[0];
            let table = lambda_of(&e.f, p, k).unwrap();
            note(&format!("lambda_of({label})"), n, table.get(k), brute_lam[n as usize]);
            note(&format!("f_of_lambda({label})"), n, f_of_lambda(&table).unwrap()[k as usize], values[n as usize]);
        }
    }
    let elapsed = t.elapsed();
    report(
        1,
        bad.is_empty() && elapsed < Duration::from_secs(10),
        format!("{} entries, n <= {N}, worst rel err {worst:.1e}, {} mismatches, {elapsed:.1?}", entries.len(), bad.len()),
    );
}

fn tau(d: u32, n: u64) -> f64 {
    trial_factor(n)
        .into_iter()
        .map(|(_, e)| (1..=e).map(|i| (i + d - 1) as f64 / i as f64).product::<f64>())
        .product()
}

#[test]
fn criterion_02_divisor_bound() {
    const N: u64 = 100_000;
    let t = Instant::now();
    let fs = factor_segment(2, N + 1, &Limits::default()).unwrap();
    let mut checked = Vec::new();
    let mut bad = Vec::new();
    for e in standard_entries().unwrap() {
        if !class_check(&e.f, &e.params, 1000, 16).unwrap().passes {
            continue;
        }
        let d = e.params.d;
        let inv = dirichlet_inverse(&e.f);
        for n in 2..=N {
            let bound = tau(d, n) * (1.0 + 1e-12);
            let (a, b) = (value_at(&e.f, n, &fs).unwrap().norm(), value_at(&inv, n, &fs).unwrap().norm());
            if a > bound || b > bound {
                bad.push(format!("{} at {n}: |f| = {a}, |g| = {b}, tau_{d} = {bound}", e.f.label()));
            }
        }
        checked.push(e.f.label().to_string());
    }
    let elapsed = t.elapsed();
    report(
        2,
        bad.is_empty() && !checked.is_empty() && elapsed < Duration::from_secs(30),
        format!("{} class members to n = {N} ({}), {} violations, {elapsed:.1?}", checked.len(), checked.join(" "), bad.len()),
    );
}

#[test]
fn criterion_03_partial_sums() {
    const X: u64 = 1_000_000;
    let limits = Limits::default();
    let fns = [
        moebius(),
        make_basic(Basic::MoebiusConvMoebius).unwrap().f,
        make_moebius_twist(0.3).unwrap().f,
        make_twist_product(&[0.1, 0.2]).unwrap().f,
    ];
    let mut xs: Vec<u64> = (1..=2000).collect();
    xs.extend((0..=120).map(|i| (2000.0 * (X as f64 / 2000.0).powf(i as f64 / 120.0)).round() as u64));
    xs.sort_unstable();
    xs.dedup();
    let mut worst = 0.0f64;
    for f in &fns {
        let brute = brute_partial_sums(f, X).unwrap();
        let fast = partial_sums_at(f, &xs, &limits).unwrap();
        for (&x, v) in xs.iter().zip(&fast) {
            worst = worst.max((v - brute[x as usize]).norm() / x as f64);
        }
    }
    let m: Vec<f64> = [10, 100, 1000].iter().map(|&x| partial_sum(&moebius(), x, &limits).unwrap().re).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let t = Instant::now();
    let big = pool.install(|| partial_sum(&moebius(), 100_000_000, &limits)).unwrap();
    let elapsed = t.elapsed();
    report(
        3,
        worst <= 1e-9 && m == [-1.0, 1.0, 2.0] && big.re == 1928.0 && elapsed < Duration::from_secs(120),
        format!(
            "max |diff|/x = {worst:.1e} over {} points x 4 functions; M_mu(10,100,1000) = {m:?}; M_mu(1e8) = {} in {elapsed:.1?} on one thread",
            xs.len(),
            big.re
        ),
    );
}

#[test]
fn criterion_04_euler_product_matches_prime_sums() {
    let t = Instant::now();
    let store = frozen();
    let scans = lemma22_suite(&Limits::default()).unwrap();
    let elapsed = t.elapsed();
    let mut ok = elapsed < Duration::from_secs(300);
    let mut parts = Vec::new();
    for s in &scans {
        let threshold = store.get(&format!("lemma22.{}.threshold", s.name)).unwrap();
        let same = reproduces(&store, &format!("lemma22.{}.sup", s.name), s.sup);
        ok &= s.sup <= threshold && same && threshold <= 2.0 + s.d as f64;
        parts.push(format!("{} sup {:.3} <= {threshold}{}", s.name, s.sup, if same { "" } else { " (not reproduced)" }));
    }
    report(4, ok, format!("{}; {elapsed:.1?}", parts.join(", ")));
}

#[test]
fn criterion_05_sifted_divisor_sums_are_linear_in_log_x() {
    let limits = Limits::default();
    let y = 100.0;
    let v = mertens_v(y, &limits).unwrap();
    let t2 = tau_k(2).unwrap();
    let xs: Vec<u64> = (0..=12).map(|i| (1e4 * 1e3f64.powf(i as f64 / 12.0)).round() as u64).collect();
    let pts: Vec<(f64, f64)> =
        xs.iter().map(|&x| ((x as f64).ln(), sifted_sum(&t2, x, y, &limits).unwrap().re / (x as f64 * v))).collect();
    let n = pts.len() as f64;
    let (sx, sy) = (pts.iter().map(|p| p.0).sum::<f64>(), pts.iter().map(|p| p.1).sum::<f64>());
    let sxx = pts.iter().map(|p| p.0 * p.0).sum::<f64>();
    let sxy = pts.iter().map(|p| p.0 * p.1).sum::<f64>();
    let b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let a = (sy - b * sx) / n;
    let worst = pts.iter().map(|&(u, r)| ((r - (a + b * u)) / (a + b * u)).abs()).fold(0.0, f64::max);
    report(5, worst <= 0.05, format!("fit {a:.4} + {b:.4} log x on [1e4, 1e7], max relative residual {:.2}%", 100.0 * worst));
}

#[test]
fn criterion_06_zero_finding() {
    let limits = Limits::default();
    let t = Instant::now();
    let e = make_moebius_twist(0.3).unwrap().with_q(2f64.exp()).unwrap();
    let z = find_zeros(&e.f, &e.params, 0.8, 10_000_000, &limits).unwrap();
    let elapsed = t.elapsed();
    let target = Complex64::new(1.0, 0.3);
    let single = z.total == 1 && z.zeros.len() == 1 && (z.zeros[0].rho - target).norm() <= 1e-3;
    let e2 = make_twist_product(&[0.1, 0.2]).unwrap().with_q(3f64.exp()).unwrap();
    let z2 = find_zeros(&e2.f, &e2.params, 0.8, 10_000_000, &limits).unwrap();
    let both = [0.1, 0.2].iter().all(|&g| z2.zeros.iter().any(|z| (z.rho - Complex64::new(1.0, g)).norm() <= 1e-3));
    let integral = (z.winding - z.total as f64).abs() <= 0.1 && (z2.winding - z2.total as f64).abs() <= 0.1;
    report(
        6,
        single && both && z2.total <= e2.params.d && integral && elapsed < Duration::from_secs(60),
        format!(
            "twist 0.3: {} at distance {:.1e} in {elapsed:.1?}; product: total {} <= D = {}, zeros {:?}; windings {:.4}, {:.4}",
            z.zeros.first().map_or("none".into(), |z| z.rho.to_string()),
            z.zeros.first().map_or(f64::NAN, |z| (z.rho - target).norm()),
            z2.total,
            e2.params.d,
            z2.zeros.iter().map(|z| z.rho.to_string()).collect::<Vec<_>>(),
            z.winding,
            z2.winding
        ),
    );
}

fn within_factor_10(value: f64, centre: f64) -> bool {
    value >= centre / 10.0 && value <= centre * 10.0
}

#[test]
fn criterion_07_transition_construction() {
    let (scan, elapsed) = structure();
    let store = frozen();
    let twist_q1 = scan.twist.log_q(1).unwrap();
    let (q1, q2) = (scan.product.log_q(1).unwrap(), scan.product.log_q(2).unwrap());
    let t_thr = store.get("structure.twist_0.1.threshold").unwrap();
    let p_thr = store.get("structure.product_0.08_0.4.threshold").unwrap();
    let same = reproduces(&store, "structure.twist_0.1.log_q1", twist_q1)
        && reproduces(&store, "structure.product_0.08_0.4.log_q1", q1)
        && reproduces(&store, "structure.product_0.08_0.4.log_q2", q2)
        && reproduces(&store, "structure.product_0.08_0.4.max_abs", scan.product_report.max_abs);
    let intervals = scan.product_report.records.iter().all(|r| {
        let lo = scan.product.q(r.j + 1).max(2.0);
        let hi = scan.product.q(r.j);
        r.lo >= lo * (1.0 - 1e-12) && r.hi <= hi * (1.0 + 1e-12)
    });
    let pass = within_factor_10(twist_q1, 10.0)
        && within_factor_10(q1, 1.0 / 0.08)
        && within_factor_10(q2, 1.0 / 0.4)
        && scan.twist_report.max_abs <= t_thr
        && scan.product_report.max_abs <= p_thr
        && scan.swapped_report.max_abs > p_thr
        && intervals
        && same
        && !scan.twist.any_saturated()
        && *elapsed < Duration::from_secs(600);
    report(
        7,
        pass,
        format!(
            "twist 0.1: log Q1 = {twist_q1:.3} (band [1, 100]), max {:.3} <= {t_thr:.3}; product: log Q1 = {q1:.3} (band [1.25, 125]), log Q2 = {q2:.3} (band [0.25, 25]), max {:.3} <= {p_thr:.3}; swapped control {:.3} > {p_thr:.3}; {elapsed:.1?}",
            scan.twist_report.max_abs, scan.product_report.max_abs, scan.swapped_report.max_abs
        ),
    );
}

#[test]
fn criterion_08_route_consistency() {
    let (scan, _) = structure();
    let store = frozen();
    let p_thr = store.get("structure.product_0.08_0.4.threshold").unwrap();
    let mut levels = Vec::new();
    let mut agree = scan.product.d == scan.zero_profile.d && scan.product.m == scan.zero_profile.m;
    for j in (scan.product.m + 1)..=(scan.product.d + 1) {
        let (a, b) = (scan.product.log_q(j).unwrap(), scan.zero_profile.log_q(j).unwrap());
        agree &= within_factor_10(a, b);
        levels.push(format!("log Q{j}: {a:.3} vs {b:.3}"));
    }
    let both = scan.product_report.max_abs <= p_thr && scan.zero_report.max_abs <= p_thr;
    report(
        8,
        agree && both,
        format!(
            "{}; verifier max {:.3} (constructed) and {:.3} (from zeros) <= {p_thr:.3}",
            levels.join(", "),
            scan.product_report.max_abs,
            scan.zero_report.max_abs
        ),
    );
}

#[test]
fn criterion_09_heuristic_reproduction() {
    let limits = Limits::default();
    let store = frozen();
    let scan = heuristic_scan(&limits).unwrap();
    let threshold = store.get("heuristic.twist_0.3.threshold").unwrap();
    let same = reproduces(&store, "heuristic.twist_0.3.max_gap", scan.max_gap);
    println!("{:>12} {:>12} {:>10} {:>10} {:>10}", "lo", "hi", "loglog", "model", "measured");
    for r in &scan.rows {
        println!("{:>12.4e} {:>12.4e} {:>10.4} {:>10.4} {:>10.4}", r.lo, r.hi, r.loglog_ratio, r.prediction, r.measured.unwrap());
    }
    let mut phases = Vec::new();
    let mut visible = true;
    for g in [0.1, 0.3] {
        let f = make_moebius_twist(g).unwrap().f;
        let p = phase_transition(g, Some(&f), &limits).unwrap();
        println!(
            "gamma {g}: before e^(1/gamma) model {:.3} measured {:.3} (loglog {:.3}); after: model {:.3} measured {:.3} (loglog {:.3})",
            p.before.prediction,
            p.before.measured.unwrap(),
            p.before.loglog_ratio,
            p.after.prediction,
            p.after.measured.unwrap(),
            p.after.loglog_ratio
        );
        visible &= p.visible;
        phases.push(format!("gamma {g}: growth {:.2}, flatness {:.2}", p.growth, p.flatness));
    }
    report(
        9,
        scan.rows.len() == 6 && scan.max_gap <= threshold && threshold <= 2.5 && same && visible,
        format!("max |model - measured| = {:.4} <= {threshold:.4} over 6 intervals; {}", scan.max_gap, phases.join(", ")),
    );
}

fn run_cli(args: &[&str]) -> (Option<i32>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_multlab")).args(args).output().expect("run multlab");
    (out.status.code(), out.stdout)
}

#[test]
fn criterion_10_determinism_across_threads_and_segments() {
    let constants = std::env::temp_dir().join(format!("multlab-acceptance-{}.txt", std::process::id()));
    std::fs::copy(FROZEN_FILE, &constants).unwrap();
    let constants = constants.to_str().unwrap().to_string();
    let q2 = 2f64.exp().to_string();
    let runs: Vec<Vec<&str>> = vec![
        vec!["sums", "--f", "moebius", "--x", "10,100,1000,1000000,10000000"],
        vec!["sums", "--f", "conv(moebius_twist:gamma=0.1,moebius_twist:gamma=0.2)", "--x", "1e6,3e6", "--format", "json"],
        vec!["sums", "--f", "tau:k=2", "--x", "1e6", "--sift", "100"],
        vec!["sums", "--f", "moebius_twist:gamma=0.3", "--interval", "30", "1e7", "--j", "1"],
        vec!["zeros", "--f", "moebius_twist:gamma=0.3", "--Q", &q2, "--c0", "0.8", "--X", "1e7"],
        vec!["transition", "--f", "moebius_twist:gamma=0.1", "--D", "1", "--Q", "10", "--m", "0", "--ceiling", "1e7"],
        vec!["heuristic", "--rho", "1+0.3i", "--intervals", "30:82,82:300,300:1600,1600:1e7", "--f", "moebius_twist:gamma=0.3"],
        vec!["check", "--suite", "heuristic", "--constants", &constants],
    ];
    let settings: [[&str; 4]; 3] = [
        ["--threads", "1", "--segment-size", "4096"],
        ["--threads", "3", "--segment-size", "65536"],
        ["--threads", "8", "--segment-size", "1048576"],
    ];
    let mut mismatches = Vec::new();
    let mut failures = Vec::new();
    for args in &runs {
        let outputs: Vec<(Option<i32>, Vec<u8>)> =
            settings.iter().map(|s| run_cli(&s.iter().copied().chain(args.iter().copied()).collect::<Vec<_>>())).collect();
        if outputs[0].0 != Some(0) || outputs[0].1.is_empty() {
            failures.push(format!("{} exited {:?}", args[0], outputs[0].0));
        }
        if outputs.iter().any(|o| o != &outputs[0]) {
            mismatches.push(args.join(" "));
        }
    }
    std::fs::remove_file(&constants).ok();
    report(
        10,
        mismatches.is_empty() && failures.is_empty(),
        format!(
            "{} commands x {} thread/segment settings; mismatches: {:?}; failures: {:?}",
            runs.len(),
            settings.len(),
            mismatches,
            failures
        ),
    );
}
