//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Every check compares library output with an oracle computed here from
//! first principles (trial division, direct `cis` sums, literal formulas).

use std::f64::consts::TAU;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use certsum_core::additive::{check_unordered_inequality, exhaustive_cube_scan, tau_solver};
use certsum_core::arith::{
    dyadic_count_lower_bound, dyadic_count_upper_bound, largest_prime_leq, primes_in_dyadic_real,
};
use certsum_core::ripmat::{
    build_set_a, closed_form_inner, coherence, exact_rip_constant, verify_dissociativity,
    Dissociativity,
};
use certsum_core::turan::turan_frame;
use certsum_core::{
    additive_energy, build_frame, construct_thin_set, construct_turan, ConstructionParams,
    EnergyMode, PowerSumMethod, PrimeModulus, ResidueSet, ScanMode, StageVariant,
    ThinSetCertificate, ThinSetParams, TuranParams, TuranPointSet,
};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: f64, what: &str) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_secs, || {
        format!("{what} took {:.1}s, limit {limit_secs}s", elapsed.as_secs_f64())
    })
}

fn trial_division_prime(n: u64) -> bool {
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

fn primes_between(lo_exclusive: u64, hi_inclusive: u64) -> Vec<u64> {
    (lo_exclusive + 1..=hi_inclusive).filter(|&n| trial_division_prime(n)).collect()
}

fn e(num: u64, den: u64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * (num % den) as f64 / den as f64)
}

/// `⟨u_{a1,b1}, u_{a2,b2}⟩` summed term by term.
fn direct_inner(p: u64, (a1, b1): (u64, u64), (a2, b2): (u64, u64)) -> Complex64 {
    let da = (a1 + p - a2) % p;
    let db = (b1 + p - b2) % p;
    (0..p)
        .map(|x| e((da * (x * x % p) + db * x) % p, p))
        .sum::<Complex64>()
        / p as f64
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for p in [13u64, 101, 1009] {
        let pm = PrimeModulus::new(p).map_err(|e| e.to_string())?;
        for _ in 0..10_000 {
            let a1 = rng.random_range(0..p);
            let a2 = (a1 + rng.random_range(1..p)) % p;
            let (b1, b2) = (rng.random_range(0..p), rng.random_range(0..p));
            let closed = closed_form_inner(&pm, (a1, b1), (a2, b2)).map_err(|e| e.to_string())?;
            worst = worst.max((closed - direct_inner(p, (a1, b1), (a2, b2))).norm());
        }
    }
    ensure(worst < 1e-9, || format!("max deviation {worst:e}"))?;
    within(start.elapsed(), 10.0, "30000 pairs")?;
    Ok(format!("max |direct - closed form| = {worst:.2e} over 3 x 10^4 pairs"))
}

fn criterion_2() -> Check {
    let pm = PrimeModulus::new(101).unwrap();
    let all: Vec<u64> = (0..101).collect();
    let frame = build_frame(&pm, &all, &all, 101 * 101, 101).map_err(|e| e.to_string())?;
    let mu = coherence(&frame.matrix).map_err(|e| e.to_string())?;
    let target = 1.0 / 101f64.sqrt();
    ensure((mu - target).abs() < 1e-12, || format!("mu = {mu}, 1/sqrt(101) = {target}"))?;
    Ok(format!("mu = {mu:.15}, |mu - 101^(-1/2)| = {:.1e}", (mu - target).abs()))
}

fn criterion_3() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let primes = [13u64, 17, 19, 23, 29, 31, 37];
    let mut tightest = f64::INFINITY;
    for trial in 0..20 {
        let p = primes[rng.random_range(0..primes.len())];
        let pm = PrimeModulus::new(p).unwrap();
        let all: Vec<u64> = (0..p).collect();
        let full = build_frame(&pm, &all, &all, (p * p) as usize, p as usize).map_err(|e| e.to_string())?;
        let n_cols = rng.random_range(5..=40usize);
        let mut cols = sample(&mut rng, (p * p) as usize, n_cols).into_vec();
        cols.sort_unstable();
        let sub = full.matrix.select_columns(&cols);
        let mu = coherence(&sub).map_err(|e| e.to_string())?;
        for k in 2..=4usize {
            let delta = exact_rip_constant(&sub, k).map_err(|e| e.to_string())?;
            let bound = (k - 1) as f64 * mu;
            ensure(delta <= bound + 1e-9, || {
                format!("trial {trial}: p = {p}, N = {n_cols}, k = {k}: delta = {delta} > {bound}")
            })?;
            tightest = tightest.min(bound - delta);
        }
    }
    within(start.elapsed(), 120.0, "20 sub-frames")?;
    Ok(format!("60 exhaustive cases, smallest slack {tightest:.3e}"))
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut largest = 0;
    for _ in 0..200 {
        let m = rng.random_range(2..=2003u64);
        let draw = |rng: &mut ChaCha8Rng| {
            let k = rng.random_range(1..=m.min(150));
            ResidueSet::new(m, (0..k).map(|_| rng.random_range(0..m))).unwrap()
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let brute = additive_energy(&a, &b, EnergyMode::Brute).map_err(|e| e.to_string())?.energy;
        let conv = additive_energy(&a, &b, EnergyMode::Convolution).map_err(|e| e.to_string())?.energy;
        let neg = additive_energy(&a, &b.negate(), EnergyMode::Convolution).map_err(|e| e.to_string())?.energy;
        ensure(brute == conv, || format!("mod {m}: brute {brute} != convolution {conv}"))?;
        ensure(conv == neg, || format!("mod {m}: E(A,B) = {conv} != E(A,-B) = {neg}"))?;
        largest = largest.max(conv);
    }
    Ok(format!("200 pairs agree exactly, E(A,B) = E(A,-B); largest energy {largest}"))
}

fn criterion_5() -> Check {
    let start = Instant::now();
    let tau2 = tau_solver(2).map_err(|e| e.to_string())?.tau;
    let golden = (2.0 / (5f64.sqrt() - 1.0)).log2();
    ensure((tau2 - golden).abs() < 1e-10, || format!("tau_2 = {tau2}, expected {golden}"))?;
    let mut pairs = 0;
    let mut min_margin = f64::INFINITY;
    for (m, r) in [(2, 1), (2, 2), (2, 3), (3, 2)] {
        let rep = exhaustive_cube_scan(m, r).map_err(|e| e.to_string())?;
        ensure(rep.failures == 0, || format!("C_{{{m},{r}}}: {} failures", rep.failures))?;
        pairs += rep.pairs_checked;
        min_margin = min_margin.min(rep.min_margin);
    }
    ensure(min_margin >= -1e-9, || format!("margin {min_margin}"))?;
    within(start.elapsed(), 300.0, "cube scans")?;
    Ok(format!("{pairs} subset pairs, min margin {min_margin:.3e}; tau_2 = {tau2:.12}"))
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut min_gap = f64::INFINITY;
    for i in 0..10_000 {
        let m = rng.random_range(2..=6usize);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..m)
                .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() * 10.0 })
                .collect()
        };
        let u = draw(&mut rng);
        let v = draw(&mut rng);
        let rep = check_unordered_inequality(&u, &v).map_err(|e| e.to_string())?;
        ensure(rep.pass, || format!("pair {i}: u = {u:?}, v = {v:?}, lhs {} < rhs {}", rep.lhs, rep.rhs))?;
        min_gap = min_gap.min(rep.lhs - rep.rhs);
    }
    Ok(format!("10^4 pairs hold, min lhs - rhs = {min_gap:.3e}"))
}

fn criterion_7() -> Check {
    let start = Instant::now();
    let p = largest_prime_leq(100_000_000_000_000).map_err(|e| e.to_string())?;
    ensure(trial_division_prime(p.get()), || format!("{} is composite", p.get()))?;
    let params = ConstructionParams::custom(&p, 2, 3, 3u64.pow(7), 1, 1).map_err(|e| e.to_string())?;
    let a = build_set_a(&p, &params).map_err(|e| e.to_string())?;
    let outcome = verify_dissociativity(&a, &p, 2).map_err(|e| e.to_string())?;
    within(start.elapsed(), 1.0, "dissociativity")?;
    match outcome {
        Dissociativity::Pass { tuples_checked } => {
            ensure(tuples_checked == 48, || format!("{tuples_checked} tuples checked, expected 48"))?;
            Ok(format!("p = {}, A = {a:?}, {tuples_checked} ordered 4-tuples (16 per base point)", p.get()))
        }
        other => Err(format!("counterexample {other:?}")),
    }
}

fn criterion_8() -> Check {
    let n = PrimeModulus::new(1_000_003).unwrap();
    let expected_size: u64 = 2 * primes_between(125, 250).iter().map(|p| p - 1).sum::<u64>();
    let bound = 15.0 * 1_000_003f64.ln() / 250.0;
    let params = ThinSetParams::OneIteration { p: 250.0, r: 2 };

    let start = Instant::now();
    let smoke = construct_thin_set(
        &n,
        params,
        StageVariant::Nonzero,
        false,
        ScanMode::Sampled { count: 100_000, seed: 8 },
    )
    .map_err(|e| e.to_string())?;
    let smoke_time = start.elapsed();
    within(smoke_time, 10.0, "sampled smoke run")?;
    ensure(smoke.certificate.measured().max_normalized <= bound, || "sampled maximum above bound".into())?;

    let start = Instant::now();
    let full = construct_thin_set(&n, params, StageVariant::Nonzero, false, ScanMode::Full)
        .map_err(|e| e.to_string())?;
    let full_time = start.elapsed();
    within(full_time, 600.0, "full scan")?;
    let set = &full.set;
    ensure(set.is_set() && full.certificate.distinct(), || "T has repeated elements".into())?;
    ensure(set.size() == expected_size, || format!("|T| = {}, expected {expected_size}", set.size()))?;
    let measured = full.certificate.measured();
    ensure(!measured.lower_bound_only, || "full scan flagged as sampled".into())?;
    ensure(measured.max_normalized <= bound, || format!("|f_T| = {} > {bound}", measured.max_normalized))?;
    ensure(full.certificate.bound().is_some_and(|b| (b - bound).abs() < 1e-12), || {
        format!("certificate bound {:?} != {bound}", full.certificate.bound())
    })?;
    Ok(format!(
        "|T| = {expected_size} distinct, |f_T| = {:.6} <= {bound:.6} (full {:.1}s, sampled {:.1}s)",
        measured.max_normalized,
        full_time.as_secs_f64(),
        smoke_time.as_secs_f64()
    ))
}

fn criterion_9() -> Check {
    let (p1, r1) = (200.0, 4u32);
    let n = (160_000u64..).find(|&q| trial_division_prime(q)).unwrap();
    let pm = PrimeModulus::new(n).unwrap();
    let built = construct_thin_set(
        &pm,
        ThinSetParams::TwoStage { p0: 40.0, p1, r0: 2, r1 },
        StageVariant::Nonzero,
        false,
        ScanMode::Full,
    )
    .map_err(|e| e.to_string())?;
    let ThinSetCertificate::TwoStage { composition, stages, .. } = &built.certificate else {
        return Err("not a two-stage certificate".into());
    };
    let v1 = primes_between(100, 200).len();
    ensure(composition.v1 == v1, || format!("V1 = {}, expected {v1}", composition.v1))?;
    let stage_eps = stages.iter().map(|s| s.measured.max_normalized).fold(0.0, f64::max);
    ensure(stages.iter().all(|s| !s.measured.lower_bound_only), || "stage scan not full".into())?;
    let bound = stage_eps + (2.0 / 3f64.sqrt()) / r1 as f64 + (n as f64 / 3.0).ln() / (v1 as f64 * (p1 / 2.0).ln());
    let measured = composition.measured.max_normalized;
    ensure(measured <= bound + 1e-9, || format!("|f_T| = {measured} > {bound}"))?;
    Ok(format!("N = {n}, |T| = {}, |f_T| = {measured:.6} <= {bound:.6} (stage eps {stage_eps:.6})", built.set.size()))
}

fn criterion_10() -> Check {
    let start = Instant::now();
    let k_max = 100_000u64;
    let built = construct_turan(
        k_max,
        TuranParams::Explicit { p0: 50.0, p1: 6000.0, r0: 2 },
        StageVariant::Nonzero,
        false,
        PowerSumMethod::Periodic,
    )
    .map_err(|e| e.to_string())?;
    let c = &built.certificate;
    let v1 = primes_between(3000, 6000).len();
    ensure(c.v1 == v1, || format!("V1 = {}, expected {v1}", c.v1))?;
    let stage_eps = c.stages.iter().map(|s| s.measured.max_normalized).fold(0.0, f64::max);
    let bound = stage_eps + (k_max as f64).ln() / (v1 as f64 * 3000f64.ln());
    ensure(c.measured <= bound + 1e-9, || format!("M_N/n = {} > {bound}", c.measured))?;
    ensure(c.er_reference > 0.0, || "missing random reference".into())?;
    within(start.elapsed(), 900.0, "power-sum scan")?;
    Ok(format!(
        "n = {}, M_N/n = {:.6} <= {bound:.6}; random reference M_N/n ~ {:.6}",
        c.n,
        c.measured,
        c.er_reference / c.n as f64
    ))
}

fn criterion_11() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let n = rng.random_range(2..=64usize);
        let cols = rng.random_range(2..=512usize);
        let points: Vec<(u64, u64, u64)> = (0..n)
            .map(|_| {
                let q = rng.random_range(2..=400u64);
                (rng.random_range(0..q), q, 1)
            })
            .collect();
        let z = TuranPointSet::new(points.clone()).map_err(|e| e.to_string())?;
        let frame = turan_frame(&z, cols).map_err(|e| e.to_string())?;
        let m = (1..cols as u64)
            .map(|k| points.iter().map(|&(s, q, _)| e(k * s % q, q)).sum::<Complex64>().norm())
            .fold(0.0, f64::max);
        let diff = (frame.coherence - m / n as f64).abs();
        ensure(diff <= 1e-9, || format!("n = {n}, N = {cols}: coherence {} vs {}", frame.coherence, m / n as f64))?;
        worst = worst.max(diff);
    }
    Ok(format!("10 point sets, max |mu - M_(N-1)/n| = {worst:.2e}"))
}

fn criterion_12() -> Check {
    let primes = primes_between(1, 5000);
    let count = |p_param: f64| primes.iter().filter(|&&q| q as f64 > p_param / 2.0 && q as f64 <= p_param).count();
    // The count is constant between consecutive points of {q, 2q}; both bounds
    // increase in P, so each interval is tight at its ends.
    let mut points: Vec<f64> = vec![3.0, 250.0, 5000.0];
    for &q in &primes {
        for b in [q as f64, 2.0 * q as f64] {
            points.extend([b, b - 1e-7]);
        }
    }
    points.extend((6..=10_000).map(|h| h as f64 / 2.0));
    let mut checked = 0;
    for &p_param in points.iter().filter(|&&x| (3.0..=5000.0).contains(&x)) {
        let c = count(p_param);
        ensure(primes_in_dyadic_real(p_param).len() == c, || format!("prime count differs at P = {p_param}"))?;
        ensure(c as f64 <= dyadic_count_upper_bound(p_param), || format!("upper bound fails at P = {p_param}: {c}"))?;
        if p_param >= 250.0 {
            ensure(c as f64 >= dyadic_count_lower_bound(p_param), || format!("lower bound fails at P = {p_param}: {c}"))?;
        }
        checked += 1;
    }
    Ok(format!("{checked} evaluation points including every breakpoint"))
}

fn run_cli(dir: &Path, threads: usize, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_certsum"))
        .current_dir(dir)
        .arg("--threads")
        .arg(threads.to_string())
        .args(args)
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || format!("certsum {args:?} exited with {status}"))
}

fn criterion_13() -> Check {
    let outputs = [
        "frame.qpf",
        "frame.cert.json",
        "set.json",
        "set.cert.json",
        "profile.csv",
        "points.json",
        "points.cert.json",
        "flat.json",
        "fourier.json",
    ];
    let runs: [&[&str]; 5] = [
        &["gen", "rip", "--p", "101", "--full", "--N", "400", "--out", "frame.qpf"],
        &[
            "gen", "thinset", "--N", "100003", "--P", "60", "--R", "2", "--scan", "sampled", "--samples", "20000",
            "--seed", "7", "--out", "set.json", "--emit-profile", "profile.csv",
        ],
        &["gen", "turan", "--N", "5000", "--P0", "20", "--P1", "80", "--R0", "2", "--out", "points.json"],
        &[
            "verify", "flat-rip", "frame.qpf", "--k", "3", "--mode", "sampled", "--samples", "5000", "--seed", "9",
            "--out", "flat.json",
        ],
        &["verify", "fourier", "set.json", "--scan", "sampled", "--samples", "5000", "--seed", "3", "--out", "fourier.json"],
    ];
    let mut reference: Option<Vec<Vec<u8>>> = None;
    for threads in [1usize, 4, 8] {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        for args in runs {
            run_cli(dir.path(), threads, args)?;
        }
        let bytes: Vec<Vec<u8>> = outputs
            .iter()
            .map(|f| std::fs::read(dir.path().join(f)).map_err(|e| format!("{f}: {e}")))
            .collect::<Result<_, _>>()?;
        match &reference {
            None => reference = Some(bytes),
            Some(r) => {
                for ((f, a), b) in outputs.iter().zip(r).zip(&bytes) {
                    ensure(a == b, || format!("{f} differs between 1 and {threads} threads"))?;
                }
            }
        }
    }
    Ok(format!("{} artifacts byte-identical at 1, 4 and 8 threads", outputs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 13] = [
        ("Gauss sum closed form matches direct inner products", criterion_1),
        ("full frame at p = 101 has coherence 101^(-1/2)", criterion_2),
        ("exact RIP constant bounded by (k-1) coherence", criterion_3),
        ("brute and convolution energies agree", criterion_4),
        ("cube sumset bound holds exhaustively", criterion_5),
        ("unordered inequality holds on random vectors", criterion_6),
        ("dilation set near 10^14 is dissociated", criterion_7),
        ("one-iteration thin set at N = 1000003", criterion_8),
        ("two-stage composition bound", criterion_9),
        ("power-sum certificate at N = 10^5", criterion_10),
        ("power frame coherence equals normalised power sum", criterion_11),
        ("dyadic prime-count bounds", criterion_12),
        ("CLI outputs independent of thread count", criterion_13),
    ];
    let quiet = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} [{secs:.2}s]: {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL {:>2} {name} [{secs:.2}s]: {why}", i + 1);
            }
        }
    }
    std::panic::set_hook(quiet);
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
