//! Point sets on the unit circle with small power sums
//! `M_N(z) = max_{1 <= k <= N} |Σ_j z_j^k|`, built from thin stage sets.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{mul_mod, primes_in_dyadic_real, unit_phase, PhaseTable, PrimeModulus};
use crate::error::{check_cost, Error, Result};
use crate::matrix::ComplexMatrix;
use crate::ripmat::coherence_with_pair;
use crate::thinsets::{
    build_stage_set, check_mu, enforce, mu_conditions, r0_condition, staged_from_mu,
    ConditionCheck, ScanMode, StageCertificate, StageVariant,
};

/// Cost limit of a power-sum scan.
pub const POWER_SUM_LIMIT: u128 = 10_000_000_000;
/// `n · N` limit for materialising a power frame.
pub const TURAN_FRAME_LIMIT: u128 = 10_000_000;
const K_BLOCK: u64 = 4096;
const TOLERANCE: f64 = 1e-9;

/// Multiset of rational phases `e(s/q)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPointSet")]
pub struct TuranPointSet {
    /// `(s, q, multiplicity)` sorted by `(q, s)` with `0 <= s < q`.
    points: Vec<(u64, u64, u64)>,
}

#[derive(Deserialize)]
struct RawPointSet {
    points: Vec<(u64, u64, u64)>,
}

impl TryFrom<RawPointSet> for TuranPointSet {
    type Error = Error;
    fn try_from(raw: RawPointSet) -> Result<Self> {
        TuranPointSet::new(raw.points)
    }
}

impl TuranPointSet {
    pub fn new(points: impl IntoIterator<Item = (u64, u64, u64)>) -> Result<Self> {
        let mut merged: BTreeMap<(u64, u64), u64> = BTreeMap::new();
        for (s, q, m) in points {
            if q == 0 || s >= q {
                return Err(Error::InvalidArgument(format!("point ({s}, {q}) needs 0 <= s < q")));
            }
            if m > 0 {
                let slot = merged.entry((q, s)).or_default();
                *slot = slot
                    .checked_add(m)
                    .ok_or_else(|| Error::InvalidArgument("multiplicity overflow".into()))?;
            }
        }
        Ok(TuranPointSet {
            points: merged.into_iter().map(|((q, s), m)| (s, q, m)).collect(),
        })
    }

    pub fn points(&self) -> &[(u64, u64, u64)] {
        &self.points
    }

    /// Number of points counted with multiplicity.
    pub fn n(&self) -> u64 {
        self.points.iter().map(|p| p.2).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points grouped by denominator: `(q, [(s, multiplicity)])`.
    fn by_denominator(&self) -> Vec<(u64, Vec<(u64, u64)>)> {
        let mut out: Vec<(u64, Vec<(u64, u64)>)> = Vec::new();
        for &(s, q, m) in &self.points {
            match out.last_mut() {
                Some((last, v)) if *last == q => v.push((s, m)),
                _ => out.push((q, vec![(s, m)])),
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerSumMethod {
    /// One exact phase per point and frequency.
    Direct,
    /// `Σ_j z_j^k` depends on `k mod q` only within each denominator, so each
    /// period is tabulated once and the scan adds one entry per denominator.
    #[default]
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSumMax {
    /// `M_N(z)`.
    pub m: f64,
    pub argmax_k: u64,
    pub n: u64,
    pub k_max: u64,
    pub method: PowerSumMethod,
}

fn better(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// Estimated work of a scan over `k = 1..=k_max`.
pub fn power_sum_cost(z: &TuranPointSet, k_max: u64, method: PowerSumMethod) -> u128 {
    match method {
        PowerSumMethod::Direct => z.points.len() as u128 * k_max as u128,
        PowerSumMethod::Periodic => z
            .by_denominator()
            .iter()
            .map(|(q, pts)| pts.len() as u128 * *q as u128 + k_max as u128)
            .sum(),
    }
}

/// `Σ_{s} w e(k's/q)` for `k' = 0..q`.
fn period_table(q: u64, pts: &[(u64, u64)]) -> Vec<Complex64> {
    let table = PhaseTable::new(q);
    let mut out = vec![Complex64::new(0.0, 0.0); q as usize];
    for &(s, w) in pts {
        let wf = w as f64;
        let mut acc = 0u64;
        for slot in out.iter_mut() {
            *slot += table.phase(acc) * wf;
            acc += s;
            if acc >= q {
                acc -= q;
            }
        }
    }
    out
}

/// `Σ_j z_j^k` for `k = k0 .. k0 + out.len()`.
fn block_power_sums(
    groups: &[(u64, Vec<(u64, u64)>)],
    periods: Option<&[Vec<Complex64>]>,
    k0: u64,
    out: &mut [Complex64],
) {
    out.fill(Complex64::new(0.0, 0.0));
    match periods {
        Some(periods) => {
            for ((q, _), period) in groups.iter().zip(periods) {
                let q = *q as usize;
                let mut idx = (k0 % q as u64) as usize;
                for slot in out.iter_mut() {
                    *slot += period[idx];
                    idx += 1;
                    if idx == q {
                        idx = 0;
                    }
                }
            }
        }
        None => {
            for (q, pts) in groups {
                for &(s, w) in pts {
                    let wf = w as f64;
                    let mut acc = mul_mod(k0 % q, s, *q);
                    for slot in out.iter_mut() {
                        *slot += unit_phase(acc, *q) * wf;
                        acc += s;
                        if acc >= *q {
                            acc -= q;
                        }
                    }
                }
            }
        }
    }
}

/// Runs `visit(k0, sums)` over the blocks of `1..=k_max`, in parallel.
fn scan_blocks<T: Send>(
    z: &TuranPointSet,
    k_max: u64,
    method: PowerSumMethod,
    visit: impl Fn(u64, &[Complex64]) -> T + Sync,
) -> Result<Vec<T>> {
    check_cost(power_sum_cost(z, k_max, method), POWER_SUM_LIMIT)?;
    let groups = z.by_denominator();
    let periods: Option<Vec<Vec<Complex64>>> = match method {
        PowerSumMethod::Periodic => Some(groups.par_iter().map(|(q, pts)| period_table(*q, pts)).collect()),
        PowerSumMethod::Direct => None,
    };
    let blocks = k_max.div_ceil(K_BLOCK);
    Ok((0..blocks)
        .into_par_iter()
        .map(|b| {
            let k0 = 1 + b * K_BLOCK;
            let len = K_BLOCK.min(k_max + 1 - k0) as usize;
            let mut sums = vec![Complex64::new(0.0, 0.0); len];
            block_power_sums(&groups, periods.as_deref(), k0, &mut sums);
            visit(k0, &sums)
        })
        .collect())
}

/// `M_N(z) = max_{1 <= k <= N} |Σ_j z_j^k|`, ties to the smallest `k`.
pub fn power_sum_max(z: &TuranPointSet, k_max: u64, method: PowerSumMethod) -> Result<PowerSumMax> {
    if z.is_empty() {
        return Err(Error::EmptySet);
    }
    if k_max == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let best = scan_blocks(z, k_max, method, |k0, sums| {
        sums.iter()
            .enumerate()
            .fold((f64::NEG_INFINITY, u64::MAX), |acc, (i, s)| better(acc, (s.norm(), k0 + i as u64)))
    })?
    .into_iter()
    .fold((f64::NEG_INFINITY, u64::MAX), better);
    Ok(PowerSumMax {
        m: best.0,
        argmax_k: best.1,
        n: z.n(),
        k_max,
        method,
    })
}

/// `|Σ_j z_j^k|` for every `k = 1..=N`.
pub fn power_sum_profile(z: &TuranPointSet, k_max: u64) -> Result<Vec<f64>> {
    if z.is_empty() {
        return Err(Error::EmptySet);
    }
    let parts = scan_blocks(z, k_max, PowerSumMethod::Periodic, |_, sums| {
        sums.iter().map(|s| s.norm()).collect::<Vec<f64>>()
    })?;
    Ok(parts.concat())
}

/// `(6 n log(N + 1))^{1/2}`, the random-point reference level.
pub fn er_reference_bound(n: u64, k_max: u64) -> f64 {
    (6.0 * n as f64 * ((k_max as f64) + 1.0).ln()).sqrt()
}

#[derive(Clone, Debug)]
pub struct TuranFrame {
    /// `n × N`, column `k` holds `n^{-1/2} (z_j^{k-1})_j`.
    pub matrix: ComplexMatrix,
    pub coherence: f64,
    pub coherence_pair: (usize, usize),
    /// `M_{N-1}(z) / n`.
    pub power_sum_ratio: f64,
    pub agree: bool,
}

/// Materialises the power frame and checks its coherence against `M_{N-1}(z)/n`.
pub fn turan_frame(z: &TuranPointSet, n_columns: usize) -> Result<TuranFrame> {
    if z.is_empty() {
        return Err(Error::EmptySet);
    }
    if n_columns < 2 {
        return Err(Error::InvalidArgument("the frame needs at least two columns".into()));
    }
    let n = z.n();
    check_cost(n as u128 * n_columns as u128, TURAN_FRAME_LIMIT)?;
    let rows: Vec<(u64, u64)> = z
        .points
        .iter()
        .flat_map(|&(s, q, m)| std::iter::repeat_n((s, q), m as usize))
        .collect();
    let scale = 1.0 / (n as f64).sqrt();
    let mut matrix = ComplexMatrix::zeros(rows.len(), n_columns);
    for k in 0..n_columns {
        let col = matrix.column_mut(k);
        for (slot, &(s, q)) in col.iter_mut().zip(&rows) {
            *slot = unit_phase(mul_mod(k as u64 % q, s, q), q) * scale;
        }
    }
    let (coherence, coherence_pair) = coherence_with_pair(&matrix)?;
    let power_sum_ratio = power_sum_max(z, n_columns as u64 - 1, PowerSumMethod::Direct)?.m / n as f64;
    Ok(TuranFrame {
        matrix,
        coherence,
        coherence_pair,
        power_sum_ratio,
        agree: (coherence - power_sum_ratio).abs() <= TOLERANCE,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TuranParams {
    Explicit { p0: f64, p1: f64, r0: u32 },
    /// `P1 = (8/μ) log N`, `P0 = (45/μ) log P1`, `R0 = ⌊2 + log(1 + 13/μ)/2⌋`.
    Mu { mu: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuranCertificate {
    #[serde(rename = "N")]
    pub k_max: u64,
    pub p0: f64,
    pub p1: f64,
    pub r0: u32,
    pub mu: Option<f64>,
    pub strict: bool,
    pub variant: StageVariant,
    pub v0: usize,
    pub v1: usize,
    /// Common stage size `S`.
    pub stage_size: u64,
    pub n: u64,
    /// Largest measured `|f_{S_q}|`.
    pub stage_eps: f64,
    /// `15 log P1 / P0`.
    pub stage_eps_lemma: f64,
    /// `log N / (V1 log(P1/2))`.
    pub divisor_term: f64,
    /// `stage_eps + divisor_term`.
    pub bound: f64,
    /// `M_N(z) / n`.
    pub measured: f64,
    pub argmax_k: u64,
    pub er_reference: f64,
    pub bound_holds: bool,
    pub conditions: Vec<ConditionCheck>,
    pub stages: Vec<StageCertificate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuranConstruction {
    #[serde(flatten)]
    pub points: TuranPointSet,
    #[serde(rename = "N")]
    pub k_max: u64,
    pub certificate: TuranCertificate,
}

/// Union over primes `q ∈ (P1/2, P1]` of `{e(s/q) : s ∈ S_q}`, where each
/// `S_q` is a stage set modulo `q` with parameters `P0`, `R0`.
pub fn construct_turan(
    k_max: u64,
    params: TuranParams,
    variant: StageVariant,
    strict: bool,
    method: PowerSumMethod,
) -> Result<TuranConstruction> {
    if k_max < 2 {
        return Err(Error::InvalidArgument("N must be at least 2".into()));
    }
    let (p0, p1, r0, mu) = match params {
        TuranParams::Explicit { p0, p1, r0 } => (p0, p1, r0, None),
        TuranParams::Mu { mu } => {
            check_mu(mu)?;
            let (p0, p1, r0) = staged_from_mu(k_max, mu);
            (p0, p1, r0, Some(mu))
        }
    };
    let mut conditions = Vec::new();
    if let Some(mu) = mu {
        conditions.extend(mu_conditions(k_max, mu, 3, false));
    }
    conditions.push(ConditionCheck::le("P0_min", "250 <= P0", 250.0, p0));
    conditions.push(ConditionCheck::lt("P1_vs_P0", "2 P0^2 < P1", 2.0 * p0 * p0, p1));
    conditions.push(r0_condition(p0, p1, r0));
    if let Some(mu) = mu {
        conditions.push(ConditionCheck::le(
            "errors2",
            "15 log P1/P0 + 5 log N/(2 P1) <= mu",
            15.0 * p1.ln() / p0 + 5.0 * (k_max as f64).ln() / (2.0 * p1),
            mu,
        ));
    }
    if strict {
        enforce(&conditions)?;
    }

    let qs = primes_in_dyadic_real(p1);
    if qs.is_empty() {
        return Err(Error::InvalidArgument(format!("no primes in ({}, {p1}]", p1 / 2.0)));
    }
    let stages = qs
        .par_iter()
        .map(|&q| build_stage_set(&PrimeModulus::new(q)?, p0, r0, variant, ScanMode::Full))
        .collect::<Result<Vec<_>>>()?;
    let sizes: Vec<u64> = stages.iter().map(|s| s.set.size()).collect();
    if sizes.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::UnequalStageSizes(format!("{sizes:?}")));
    }
    let points = TuranPointSet::new(stages.iter().flat_map(|st| {
        let q = st.set.modulus();
        st.set.elements().iter().map(move |&(s, m)| (s, q, m))
    }))?;
    let n = points.n();
    let stage_size = sizes[0];
    debug_assert_eq!(n, stage_size * qs.len() as u64);

    let ps = power_sum_max(&points, k_max, method)?;
    let stage_eps = stages
        .iter()
        .map(|s| s.certificate.measured.max_normalized)
        .fold(0.0, f64::max);
    let v1 = qs.len();
    let divisor_term = (k_max as f64).ln() / (v1 as f64 * (p1 / 2.0).ln());
    let bound = stage_eps + divisor_term;
    let measured = ps.m / n as f64;
    Ok(TuranConstruction {
        certificate: TuranCertificate {
            k_max,
            p0,
            p1,
            r0,
            mu,
            strict,
            variant,
            v0: primes_in_dyadic_real(p0).len(),
            v1,
            stage_size,
            n,
            stage_eps,
            stage_eps_lemma: 15.0 * p1.ln() / p0,
            divisor_term,
            bound,
            measured,
            argmax_k: ps.argmax_k,
            er_reference: er_reference_bound(n, k_max),
            bound_holds: measured <= bound + TOLERANCE,
            conditions,
            stages: stages.into_iter().map(|s| s.certificate).collect(),
        },
        points,
        k_max,
    })
}
