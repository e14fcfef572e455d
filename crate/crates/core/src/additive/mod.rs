//! Sumsets and additive energy over `Z/mZ`, plus the digit-cube machinery in
//! [`cube`].
//!
//! Every fast routine here has a slow companion (brute-force energy, explicit
//! coordinate sums) so that the inequalities can be checked on small inputs
//! without trusting either path alone.

pub mod cube;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{mul_mod, PrimeModulus};
use crate::error::{check_cost, Error, Result};

pub use cube::{
    check_unordered_inequality, cube_decode, cube_encode, exhaustive_cube_scan, tau_solver,
    verify_cube_sumset_bound, CubePoint, CubeSumsetReport, ExhaustiveCubeReport,
    InequalityReport, TauSolution,
};

/// Brute-force energy is limited to `|A|·|B|` at most this.
pub const BRUTE_ENERGY_LIMIT: u128 = 1_000_000;
/// Sorted-sum energy is limited to `|A|·|B|` at most this (memory bound).
pub const CONVOLUTION_ENERGY_LIMIT: u128 = 50_000_000;
/// `|A|^2·|B|` limit of [`dyadic_energy_scan`].
pub const DYADIC_SCAN_LIMIT: u128 = 100_000_000;

/// A set of residues modulo `modulus`, kept sorted and duplicate-free.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawResidueSet")]
pub struct ResidueSet {
    modulus: u64,
    elements: Vec<u64>,
}

#[derive(Deserialize)]
struct RawResidueSet {
    modulus: u64,
    elements: Vec<u64>,
}

impl TryFrom<RawResidueSet> for ResidueSet {
    type Error = Error;
    fn try_from(raw: RawResidueSet) -> Result<Self> {
        ResidueSet::new(raw.modulus, raw.elements)
    }
}

impl ResidueSet {
    /// Builds a set from residues that must already lie in `[0, modulus)`.
    pub fn new(modulus: u64, elements: impl IntoIterator<Item = u64>) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::InvalidArgument("modulus must be positive".into()));
        }
        let mut elements: Vec<u64> = elements.into_iter().collect();
        if let Some(&bad) = elements.iter().find(|&&x| x >= modulus) {
            return Err(Error::InvalidArgument(format!(
                "element {bad} is not reduced modulo {modulus}"
            )));
        }
        elements.sort_unstable();
        elements.dedup();
        Ok(ResidueSet { modulus, elements })
    }

    /// Builds a set from arbitrary integers, reducing each modulo `modulus`.
    pub fn from_integers(modulus: u64, values: impl IntoIterator<Item = i64>) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::InvalidArgument("modulus must be positive".into()));
        }
        ResidueSet::new(
            modulus,
            values
                .into_iter()
                .map(|v| crate::arith::reduce(v as i128, modulus)),
        )
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, x: u64) -> bool {
        self.elements.binary_search(&x).is_ok()
    }

    /// `-A`.
    pub fn negate(&self) -> ResidueSet {
        let m = self.modulus;
        let elements = self.elements.iter().map(|&x| (m - x) % m);
        ResidueSet::new(m, elements).expect("negation stays reduced")
    }

    /// `bA = {b·a}`.
    pub fn dilate(&self, b: u64) -> ResidueSet {
        let m = self.modulus;
        let b = b % m;
        ResidueSet::new(m, self.elements.iter().map(|&x| mul_mod(b, x, m)))
            .expect("dilation stays reduced")
    }

    fn require_same_modulus(&self, other: &ResidueSet) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch {
                left: self.modulus,
                right: other.modulus,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineMode {
    Sum,
    Difference,
    /// `A +_F B` for the listed pairs `F ⊆ A × B`.
    Restricted(Vec<(u64, u64)>),
}

/// Sumset, difference set or `F`-restricted sumset modulo the shared modulus.
pub fn set_combine(a: &ResidueSet, b: &ResidueSet, mode: &CombineMode) -> Result<ResidueSet> {
    a.require_same_modulus(b)?;
    let m = a.modulus;
    let out: Vec<u64> = match mode {
        CombineMode::Sum => a
            .elements
            .iter()
            .flat_map(|&x| b.elements.iter().map(move |&y| ((x as u128 + y as u128) % m as u128) as u64))
            .collect(),
        CombineMode::Difference => a
            .elements
            .iter()
            .flat_map(|&x| b.elements.iter().map(move |&y| ((x as u128 + (m - y) as u128) % m as u128) as u64))
            .collect(),
        CombineMode::Restricted(pairs) => {
            let mut out = Vec::with_capacity(pairs.len());
            for &(x, y) in pairs {
                if !a.contains(x) || !b.contains(y) {
                    return Err(Error::PairOutOfRange(x, y));
                }
                out.push(((x as u128 + y as u128) % m as u128) as u64);
            }
            out
        }
    };
    ResidueSet::new(m, out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyMode {
    /// Counts quadruples directly: for each `(a1, b1, a2)` test whether
    /// `a1 + b1 - a2` lies in `B`.
    Brute,
    /// `Σ_s r(s)^2` where `r(s)` counts representations `s = a + b`,
    /// i.e. `‖1_A * 1_B‖_2^2` over the cyclic group.
    Convolution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub energy: u64,
    pub set_sizes: (usize, usize),
    /// `E / (|A|^2 · min(|A|, |B|))`; zero for empty inputs.
    pub ratio_to_cube: f64,
}

impl EnergyReport {
    fn new(energy: u64, na: usize, nb: usize) -> Self {
        let denom = (na as f64).powi(2) * na.min(nb) as f64;
        EnergyReport {
            energy,
            set_sizes: (na, nb),
            ratio_to_cube: if denom > 0.0 { energy as f64 / denom } else { 0.0 },
        }
    }
}

/// The additive energy `E(A, B)`: solutions of `a1 + b1 = a2 + b2`.
pub fn additive_energy(a: &ResidueSet, b: &ResidueSet, mode: EnergyMode) -> Result<EnergyReport> {
    a.require_same_modulus(b)?;
    let cost = a.len() as u128 * b.len() as u128;
    let energy = match mode {
        EnergyMode::Brute => {
            check_cost(cost, BRUTE_ENERGY_LIMIT)?;
            brute_energy(a, b)
        }
        EnergyMode::Convolution => {
            check_cost(cost, CONVOLUTION_ENERGY_LIMIT)?;
            sorted_sum_energy(a, b)
        }
    };
    Ok(EnergyReport::new(energy, a.len(), b.len()))
}

fn brute_energy(a: &ResidueSet, b: &ResidueSet) -> u64 {
    let m = a.modulus as u128;
    let mut count = 0u64;
    for &a1 in &a.elements {
        for &b1 in &b.elements {
            let s = a1 as u128 + b1 as u128;
            for &a2 in &a.elements {
                let b2 = ((s + m - a2 as u128) % m) as u64;
                if b.contains(b2) {
                    count += 1;
                }
            }
        }
    }
    count
}

pub(crate) fn sorted_sum_energy(a: &ResidueSet, b: &ResidueSet) -> u64 {
    let m = a.modulus as u128;
    let mut sums: Vec<u64> = Vec::with_capacity(a.len() * b.len());
    for &x in &a.elements {
        for &y in &b.elements {
            sums.push(((x as u128 + y as u128) % m) as u64);
        }
    }
    sums.sort_unstable();
    sums.chunk_by(|x, y| x == y)
        .map(|run| (run.len() as u64).pow(2))
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicEnergyReport {
    /// `Σ_{b ∈ B} E(A, bA)`.
    pub total: u64,
    /// `total / (|A|^3 |B|)`.
    pub normalized: f64,
}

/// Sum of dilated energies `Σ_{b∈B} E(A, bA)`. Raw measurement only.
pub fn dyadic_energy_scan(
    a: &ResidueSet,
    b: &ResidueSet,
    p: &PrimeModulus,
) -> Result<DyadicEnergyReport> {
    let pv = p.get();
    for set in [a, b] {
        if set.modulus != pv {
            return Err(Error::ModulusMismatch {
                left: set.modulus,
                right: pv,
            });
        }
    }
    if b.contains(0) {
        return Err(Error::ZeroDilation);
    }
    check_cost(
        (a.len() as u128).pow(2) * b.len() as u128,
        DYADIC_SCAN_LIMIT,
    )?;
    let total: u64 = b
        .elements
        .par_iter()
        .map(|&d| sorted_sum_energy(a, &a.dilate(d)))
        .sum();
    let denom = (a.len() as f64).powi(3) * b.len() as f64;
    Ok(DyadicEnergyReport {
        total,
        normalized: if denom > 0.0 { total as f64 / denom } else { 0.0 },
    })
}
