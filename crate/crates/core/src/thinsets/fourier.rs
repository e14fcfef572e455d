use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{mul_mod, reduce, unit_phase, PhaseTable, MAX_MODULUS};
use crate::error::{check_cost, Error, Result};

/// `|S| · N` limit of a full profile scan.
pub const FOURIER_SCAN_LIMIT: u128 = 10_000_000_000;
const K_BLOCK: u64 = 4096;
const SAMPLE_CHUNK: u64 = 1024;

/// Residues modulo `N` with multiplicities. Sizes always count multiplicity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMultiset")]
pub struct ResidueMultiset {
    modulus: u64,
    /// `(value, multiplicity)`, strictly increasing values, positive multiplicities.
    elements: Vec<(u64, u64)>,
}

#[derive(Deserialize)]
struct RawMultiset {
    modulus: u64,
    elements: Vec<(u64, u64)>,
}

impl TryFrom<RawMultiset> for ResidueMultiset {
    type Error = Error;
    fn try_from(raw: RawMultiset) -> Result<Self> {
        ResidueMultiset::new(raw.modulus, raw.elements)
    }
}

impl ResidueMultiset {
    /// Merges repeated values and drops zero multiplicities.
    pub fn new(modulus: u64, entries: impl IntoIterator<Item = (u64, u64)>) -> Result<Self> {
        if modulus == 0 || modulus > MAX_MODULUS {
            return Err(Error::ModulusOutOfRange { value: modulus });
        }
        let mut entries: Vec<(u64, u64)> = entries.into_iter().filter(|e| e.1 > 0).collect();
        if let Some(&(bad, _)) = entries.iter().find(|e| e.0 >= modulus) {
            return Err(Error::InvalidArgument(format!(
                "element {bad} is not reduced modulo {modulus}"
            )));
        }
        entries.sort_unstable();
        let mut merged: Vec<(u64, u64)> = Vec::with_capacity(entries.len());
        for (v, m) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == v => {
                    last.1 = last.1.checked_add(m).ok_or_else(|| {
                        Error::InvalidArgument("multiplicity overflow".into())
                    })?
                }
                _ => merged.push((v, m)),
            }
        }
        Ok(ResidueMultiset {
            modulus,
            elements: merged,
        })
    }

    /// Each value counted once per occurrence, reduced modulo `modulus`.
    pub fn from_integers(modulus: u64, values: impl IntoIterator<Item = i64>) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::ModulusOutOfRange { value: 0 });
        }
        ResidueMultiset::new(
            modulus,
            values.into_iter().map(|v| (reduce(v as i128, modulus), 1)),
        )
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn elements(&self) -> &[(u64, u64)] {
        &self.elements
    }

    pub fn distinct(&self) -> usize {
        self.elements.len()
    }

    /// Total size counted with multiplicity.
    pub fn size(&self) -> u64 {
        self.elements.iter().map(|e| e.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// True when every multiplicity is one.
    pub fn is_set(&self) -> bool {
        self.elements.iter().all(|e| e.1 == 1)
    }

    /// Multiset union of two multisets with the same modulus.
    pub fn union(&self, other: &ResidueMultiset) -> Result<ResidueMultiset> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch {
                left: self.modulus,
                right: other.modulus,
            });
        }
        ResidueMultiset::new(
            self.modulus,
            self.elements.iter().chain(&other.elements).copied(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScanMode {
    Full,
    /// Uniformly random frequencies in `[1, N-1]`; the maximum is a lower bound.
    Sampled { count: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierProfile {
    pub modulus: u64,
    pub set_size: u64,
    /// `max_k |f_S(k)| / |S|` over the scanned frequencies.
    pub max_normalized: f64,
    pub argmax_k: u64,
    pub scan: ScanMode,
    pub frequencies_evaluated: u64,
    pub lower_bound_only: bool,
}

/// `f_S(k) = Σ_{s ∈ S} e(ks/N)` evaluated term by term with exact phases.
pub fn fourier_coefficient(set: &ResidueMultiset, k: u64) -> Complex64 {
    let n = set.modulus;
    let k = k % n;
    set.elements
        .iter()
        .map(|&(s, w)| unit_phase(mul_mod(k, s, n), n) * w as f64)
        .sum()
}

/// Larger value wins; ties go to the smaller frequency.
fn better(a: (f64, u64), b: (f64, u64)) -> (f64, u64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

/// `f_S(k)` for `k0 <= k < k0 + out.len()`, advancing `k·s mod N` by one
/// addition per step.
fn block_sums(set: &ResidueMultiset, table: &PhaseTable, k0: u64, out: &mut [Complex64]) {
    let n = set.modulus;
    out.fill(Complex64::new(0.0, 0.0));
    for &(s, w) in &set.elements {
        let mut acc = mul_mod(k0 % n, s, n);
        if w == 1 {
            for slot in out.iter_mut() {
                *slot += table.phase(acc);
                acc += s;
                if acc >= n {
                    acc -= n;
                }
            }
        } else {
            let wf = w as f64;
            for slot in out.iter_mut() {
                *slot += table.phase(acc) * wf;
                acc += s;
                if acc >= n {
                    acc -= n;
                }
            }
        }
    }
}

fn full_scan_cost(set: &ResidueMultiset) -> u128 {
    set.size() as u128 * set.modulus as u128
}

/// `|f_S| = max_{1 <= k <= N-1} |f_S(k)| / |S|`.
///
/// The full scan covers `1 <= k <= N/2` and uses `|f_S(N-k)| = |f_S(k)|`.
pub fn fourier_max_profile(set: &ResidueMultiset, scan: ScanMode) -> Result<FourierProfile> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let n = set.modulus;
    let size = set.size();
    let (best, evaluated) = match scan {
        ScanMode::Full => {
            check_cost(full_scan_cost(set), FOURIER_SCAN_LIMIT)?;
            let half = n / 2;
            let table = PhaseTable::new(n);
            let blocks = half.div_ceil(K_BLOCK);
            let best = (0..blocks)
                .into_par_iter()
                .map(|b| {
                    let k0 = 1 + b * K_BLOCK;
                    let len = K_BLOCK.min(half + 1 - k0) as usize;
                    let mut sums = vec![Complex64::new(0.0, 0.0); len];
                    block_sums(set, &table, k0, &mut sums);
                    sums.iter()
                        .enumerate()
                        .fold((f64::NEG_INFINITY, u64::MAX), |acc, (i, z)| {
                            better(acc, (z.norm(), k0 + i as u64))
                        })
                })
                .reduce(|| (f64::NEG_INFINITY, u64::MAX), better);
            (best, half)
        }
        ScanMode::Sampled { count, seed } => {
            check_cost(
                count as u128 * set.distinct() as u128,
                FOURIER_SCAN_LIMIT,
            )?;
            if n < 2 {
                ((f64::NEG_INFINITY, u64::MAX), 0)
            } else {
                let table = PhaseTable::new(n);
                let chunks = count.div_ceil(SAMPLE_CHUNK);
                let best = (0..chunks)
                    .into_par_iter()
                    .map(|chunk| {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        rng.set_stream(chunk);
                        let mut best = (f64::NEG_INFINITY, u64::MAX);
                        for _ in 0..SAMPLE_CHUNK.min(count - chunk * SAMPLE_CHUNK) {
                            let k = rng.random_range(1..n);
                            let z: Complex64 = set
                                .elements
                                .iter()
                                .map(|&(s, w)| table.phase(mul_mod(k, s, n)) * w as f64)
                                .sum();
                            best = better(best, (z.norm(), k));
                        }
                        best
                    })
                    .reduce(|| (f64::NEG_INFINITY, u64::MAX), better);
                (best, count)
            }
        }
    };
    let (max_normalized, argmax_k) = if best.1 == u64::MAX {
        (0.0, 0)
    } else {
        ((best.0 / size as f64).min(1.0), best.1)
    };
    Ok(FourierProfile {
        modulus: n,
        set_size: size,
        max_normalized,
        argmax_k,
        scan,
        frequencies_evaluated: evaluated,
        lower_bound_only: matches!(scan, ScanMode::Sampled { .. }),
    })
}

/// `|f_S(k)| / |S|` for every `k = 1, ..., N-1`.
pub fn fourier_profile_values(set: &ResidueMultiset) -> Result<Vec<f64>> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    check_cost(full_scan_cost(set), FOURIER_SCAN_LIMIT)?;
    let n = set.modulus;
    let size = set.size() as f64;
    let table = PhaseTable::new(n);
    let total = n.saturating_sub(1);
    let blocks = total.div_ceil(K_BLOCK);
    let parts: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let k0 = 1 + b * K_BLOCK;
            let len = K_BLOCK.min(total + 1 - k0) as usize;
            let mut sums = vec![Complex64::new(0.0, 0.0); len];
            block_sums(set, &table, k0, &mut sums);
            sums.iter().map(|z| z.norm() / size).collect()
        })
        .collect();
    Ok(parts.concat())
}
