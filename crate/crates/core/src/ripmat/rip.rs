use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_cost, Error, Result};
use crate::matrix::ComplexMatrix;

/// Exhaustive flat-RIP scans are limited to this many ordered support pairs.
pub const FLAT_RIP_PAIR_LIMIT: u128 = 10_000_000;
/// Exact RIP scans are limited to this many supports.
pub const EXACT_RIP_SUPPORT_LIMIT: u128 = 100_000;
const EXACT_RIP_MAX_ORDER: usize = 24;
/// Trials per independently seeded chunk in sampled flat-RIP.
const SAMPLE_CHUNK: u64 = 1024;

/// `⟨u_i, u_j⟩ = Σ_x u_i(x) · conj(u_j(x))` over every stored row.
pub fn inner_product(m: &ComplexMatrix, i: usize, j: usize) -> Complex64 {
    let (a, b) = (m.column(i), m.column(j));
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.im * y.re - x.re * y.im;
    }
    Complex64::new(re, im)
}

/// Gram entry from the canonical `i < j` evaluation, so `G[j][i]` is the exact
/// conjugate of `G[i][j]`.
fn gram_entry(m: &ComplexMatrix, i: usize, j: usize) -> Complex64 {
    if i <= j {
        inner_product(m, i, j)
    } else {
        inner_product(m, j, i).conj()
    }
}

/// Full Hermitian Gram matrix, row-major `N × N`.
pub fn gram_matrix(m: &ComplexMatrix) -> Vec<Complex64> {
    let n = m.cols();
    let mut g = vec![Complex64::new(0.0, 0.0); n * n];
    g.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = gram_entry(m, i, j);
        }
    });
    g
}

/// Pick the larger value; ties go to the lexicographically smaller witness.
fn better<W: Ord>(a: (f64, W), b: (f64, W)) -> (f64, W) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Maximum `|⟨u_r, u_s⟩|` over unordered pairs of distinct columns, with the
/// first pair attaining it.
pub fn coherence_with_pair(m: &ComplexMatrix) -> Result<(f64, (usize, usize))> {
    let n = m.cols();
    if n < 2 {
        return Err(Error::InvalidArgument("coherence needs at least two columns".into()));
    }
    Ok((0..n - 1)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::NEG_INFINITY, (i, i + 1));
            for j in i + 1..n {
                best = better(best, (inner_product(m, i, j).norm(), (i, j)));
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, (usize::MAX, usize::MAX)), better))
}

pub fn coherence(m: &ComplexMatrix) -> Result<f64> {
    coherence_with_pair(m).map(|(mu, _)| mu)
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FlatRipMode {
    Exhaustive,
    /// Random disjoint support pairs; the result is a lower bound.
    Sampled { trials: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatRipResult {
    pub delta: f64,
    pub k: usize,
    pub mode: FlatRipMode,
    /// True for sampled runs: `delta` only bounds the constant from below.
    pub lower_bound_only: bool,
    pub witness: (Vec<usize>, Vec<usize>),
    pub pairs_evaluated: u64,
}

/// Smallest `δ` with `|⟨Σ_{J1} u_j, Σ_{J2} u_j⟩| <= δ (|J1||J2|)^{1/2}` over
/// disjoint nonempty `J1, J2` with `|J_i| <= k`.
pub fn flat_rip_constant(m: &ComplexMatrix, k: usize, mode: FlatRipMode) -> Result<FlatRipResult> {
    let n = m.cols();
    if k == 0 {
        return Err(Error::InvalidArgument("order k must be at least 1".into()));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("flat RIP needs at least two columns".into()));
    }
    let k = k.min(n - 1);
    match mode {
        FlatRipMode::Exhaustive => {
            let cost: u128 = (1..=k as u128)
                .flat_map(|i| (1..=k as u128).map(move |j| (i, j)))
                .map(|(i, j)| binomial(n as u128, i).saturating_mul(binomial(n as u128 - i, j)))
                .fold(0u128, |a, b| a.saturating_add(b));
            check_cost(cost, FLAT_RIP_PAIR_LIMIT)?;
            let g = gram_matrix(m);
            let (delta, witness) = flat_exhaustive(&g, n, k);
            Ok(FlatRipResult {
                delta,
                k,
                mode,
                lower_bound_only: false,
                witness,
                pairs_evaluated: cost as u64,
            })
        }
        FlatRipMode::Sampled { trials, seed } => {
            let g = gram_matrix(m);
            let chunks = trials.div_ceil(SAMPLE_CHUNK);
            let best = (0..chunks)
                .into_par_iter()
                .map(|chunk| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(chunk);
                    let count = SAMPLE_CHUNK.min(trials - chunk * SAMPLE_CHUNK);
                    let mut best = (f64::NEG_INFINITY, (Vec::new(), Vec::new()));
                    for _ in 0..count {
                        let s1 = rng.random_range(1..=k);
                        let s2 = rng.random_range(1..=k).min(n - s1);
                        let idx = sample(&mut rng, n, s1 + s2).into_vec();
                        let (mut j1, mut j2) = (idx[..s1].to_vec(), idx[s1..].to_vec());
                        j1.sort_unstable();
                        j2.sort_unstable();
                        assert!(j1.iter().all(|x| j2.binary_search(x).is_err()), "overlapping supports");
                        let v = flat_value(&g, n, &j1, &j2);
                        best = better(best, (v, (j1, j2)));
                    }
                    best
                })
                .reduce(|| (f64::NEG_INFINITY, (Vec::new(), Vec::new())), better);
            Ok(FlatRipResult {
                delta: best.0.max(0.0),
                k,
                mode,
                lower_bound_only: true,
                witness: best.1,
                pairs_evaluated: trials,
            })
        }
    }
}

fn flat_value(g: &[Complex64], n: usize, j1: &[usize], j2: &[usize]) -> f64 {
    let mut s = Complex64::new(0.0, 0.0);
    for &i in j1 {
        for &j in j2 {
            s += g[i * n + j];
        }
    }
    s.norm() / ((j1.len() * j2.len()) as f64).sqrt()
}

type Witness = (Vec<usize>, Vec<usize>);

fn flat_exhaustive(g: &[Complex64], n: usize, k: usize) -> (f64, Witness) {
    (0..n)
        .into_par_iter()
        .map(|first| {
            let mut best = (f64::NEG_INFINITY, (Vec::new(), Vec::new()));
            let mut j1 = vec![first];
            let mut row: Vec<Complex64> = g[first * n..(first + 1) * n].to_vec();
            extend_j1(g, n, k, &mut j1, &mut row, &mut best);
            best
        })
        .reduce(|| (f64::NEG_INFINITY, (Vec::new(), Vec::new())), better)
}

/// Visits every `J1` starting with the current prefix; `row[c] = Σ_{i∈J1} G[i][c]`.
fn extend_j1(
    g: &[Complex64],
    n: usize,
    k: usize,
    j1: &mut Vec<usize>,
    row: &mut Vec<Complex64>,
    best: &mut (f64, Witness),
) {
    let mut j2 = Vec::with_capacity(k);
    scan_j2(n, k, j1, row, 0, Complex64::new(0.0, 0.0), &mut j2, best);
    if j1.len() == k {
        return;
    }
    let last = *j1.last().unwrap();
    for next in last + 1..n {
        j1.push(next);
        for (c, v) in row.iter_mut().enumerate() {
            *v += g[next * n + c];
        }
        extend_j1(g, n, k, j1, row, best);
        for (c, v) in row.iter_mut().enumerate() {
            *v -= g[next * n + c];
        }
        j1.pop();
    }
    // restore bit-exactly: recompute from scratch after the subtraction drift
    if j1.len() == 1 {
        row.copy_from_slice(&g[j1[0] * n..(j1[0] + 1) * n]);
    }
}

#[allow(clippy::too_many_arguments)]
fn scan_j2(
    n: usize,
    k: usize,
    j1: &[usize],
    row: &[Complex64],
    start: usize,
    acc: Complex64,
    j2: &mut Vec<usize>,
    best: &mut (f64, Witness),
) {
    for c in start..n {
        if j1.contains(&c) {
            continue;
        }
        let s = acc + row[c];
        j2.push(c);
        let v = s.norm() / ((j1.len() * j2.len()) as f64).sqrt();
        if v > best.0 {
            *best = (v, (j1.to_vec(), j2.clone()));
        }
        if j2.len() < k {
            scan_j2(n, k, j1, row, c + 1, s, j2, best);
        }
        j2.pop();
    }
}

/// `max_S max(λ_max(G_S) - 1, 1 - λ_min(G_S))` over all `k`-column supports.
pub fn exact_rip_constant(m: &ComplexMatrix, k: usize) -> Result<f64> {
    let n = m.cols();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("order k = {k} outside [1, {n}]")));
    }
    if k > EXACT_RIP_MAX_ORDER {
        return Err(Error::TooLarge {
            cost: k as u128,
            limit: EXACT_RIP_MAX_ORDER as u128,
        });
    }
    check_cost(binomial(n as u128, k as u128), EXACT_RIP_SUPPORT_LIMIT)?;
    let g = gram_matrix(m);
    let worst = (0..=n - k)
        .into_par_iter()
        .map(|first| {
            let mut support = Vec::with_capacity(k);
            support.push(first);
            let mut worst = 0.0f64;
            visit_supports(&g, n, k, &mut support, &mut worst);
            worst
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

fn visit_supports(g: &[Complex64], n: usize, k: usize, support: &mut Vec<usize>, worst: &mut f64) {
    if support.len() == k {
        let sub = DMatrix::from_fn(k, k, |r, c| g[support[r] * n + support[c]]);
        let eig = sub.symmetric_eigenvalues();
        let (lo, hi) = eig
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        *worst = worst.max((hi - 1.0).max(1.0 - lo));
        return;
    }
    let last = *support.last().unwrap();
    let remaining = k - support.len();
    for next in last + 1..=n - remaining {
        support.push(next);
        visit_supports(g, n, k, support, worst);
        support.pop();
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RipBounds {
    /// `(k - 1) μ`.
    pub from_coherence: f64,
    /// `44 s δ_flat log k`, the RIP constant of order `2sk` implied by flat RIP.
    pub from_flat: f64,
    /// `μ <= 1/k`.
    pub flat2_hypothesis_ok: bool,
    /// The flat-to-RIP conversion is only stated for `k >= 2^10`.
    pub conversion_regime_ok: bool,
}

pub fn rip_bounds(mu: f64, delta_flat: f64, k: usize, s: usize) -> Result<RipBounds> {
    if k < 2 || s < 1 {
        return Err(Error::InvalidArgument(format!("need k >= 2 and s >= 1, got k = {k}, s = {s}")));
    }
    Ok(RipBounds {
        from_coherence: (k as f64 - 1.0) * mu,
        from_flat: 44.0 * s as f64 * delta_flat * (k as f64).ln(),
        flat2_hypothesis_ok: mu <= 1.0 / k as f64,
        conversion_regime_ok: k >= 1 << 10,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RipReport {
    pub k: usize,
    pub coherence: f64,
    pub delta_flat: f64,
    pub delta_exact: Option<f64>,
    pub delta_from_coherence: f64,
    pub mode: FlatRipMode,
    pub flat_is_lower_bound: bool,
    /// `delta_exact <= delta_from_coherence + 1e-9` when the exact value is present.
    pub coherence_bound_holds: Option<bool>,
}

/// Runs coherence, flat RIP and (optionally) exact RIP of order `k`.
pub fn rip_report(m: &ComplexMatrix, k: usize, mode: FlatRipMode, exact: bool) -> Result<RipReport> {
    let mu = coherence(m)?;
    let flat = flat_rip_constant(m, k, mode)?;
    let delta_exact = if exact { Some(exact_rip_constant(m, k)?) } else { None };
    let delta_from_coherence = (k as f64 - 1.0).max(0.0) * mu;
    Ok(RipReport {
        k,
        coherence: mu,
        delta_flat: flat.delta,
        delta_exact,
        delta_from_coherence,
        mode,
        flat_is_lower_bound: flat.lower_bound_only,
        coherence_bound_holds: delta_exact.map(|d| d <= delta_from_coherence + 1e-9),
    })
}
