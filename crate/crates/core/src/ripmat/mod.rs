//! Quadratic-phase frames `u_{a,b}(x) = p^{-1/2} e_p(a x^2 + b x)` built over a
//! sparse dilation set `A` and a digit set `B`, and the verifiers that measure
//! their coherence and restricted isometry constants.

mod expsum;
mod rip;

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{inv_mod, legendre_symbol, mul_mod, reduce, unit_phase, PrimeModulus};
use crate::error::{check_cost, Error, Result};
use crate::matrix::ComplexMatrix;

pub use expsum::{exp_sum_energy_check, ExpSumEnergyReport, EXP_SUM_LIMIT};
pub use rip::{
    coherence, coherence_with_pair, exact_rip_constant, flat_rip_constant, gram_matrix,
    inner_product, rip_bounds, rip_report, FlatRipMode, FlatRipResult, RipBounds, RipReport,
    EXACT_RIP_SUPPORT_LIMIT, FLAT_RIP_PAIR_LIMIT,
};

/// Frames are limited to this many stored entries.
pub const FRAME_ENTRY_LIMIT: u128 = 40_000_000;
/// Digit sets are limited to this many elements.
pub const SET_B_LIMIT: u128 = 10_000_000;
/// `|A|^{2m} · |A|` limit of [`verify_dissociativity`].
pub const DISSOCIATIVITY_LIMIT: u128 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamMode {
    /// Every parameter follows from `p` and `m` through the asymptotic recipe.
    Derived,
    /// `L`, `U`, `M`, `r` supplied directly for desk-scale primes.
    Override,
}

/// Parameters of the sets `A = {x^2 + Ux : 1 <= x <= L}` and
/// `B = {Σ x_j (2M)^{j-1} : 0 <= x_j < M}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionParams {
    pub m: u32,
    pub alpha: f64,
    pub beta: f64,
    pub l: u64,
    pub u: u64,
    pub m_digits: u64,
    pub r_digits: u32,
    pub mode: ParamMode,
}

/// Which of the inequalities used by the dissociativity argument hold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamChecks {
    /// `U >= 2m · L^{4m-2}`.
    pub u_dominates: bool,
    /// `U^{2m} < p`.
    pub u_power_below_p: bool,
    /// `(2M)^r <= p`.
    pub cube_fits: bool,
}

impl ParamChecks {
    pub fn all(&self) -> bool {
        self.u_dominates && self.u_power_below_p && self.cube_fits
    }
}

fn checked_pow(base: u64, exp: u32) -> Option<u128> {
    (base as u128).checked_pow(exp)
}

impl ConstructionParams {
    /// `α = 1/(8m^2)`, `L = ⌊p^α⌋`, `U = L^{4m-1}`, `β = α/2`,
    /// `r = ⌊β log p / log 2⌋`, `M = 2^{16m^2-1}`.
    ///
    /// Fails with [`Error::ParamsTooLarge`] unless `L >= 2m`, which needs
    /// `p >= (2m)^{8m^2}`; no 64-bit prime qualifies for `m >= 2`.
    pub fn derived(p: &PrimeModulus, m: u32) -> Result<Self> {
        if m < 2 || m % 2 != 0 {
            return Err(Error::InvalidArgument(format!("m must be even and >= 2, got {m}")));
        }
        let pv = p.get();
        let root = 8 * m * m;
        let alpha = 1.0 / root as f64;
        let beta = alpha / 2.0;
        // exact integer root: largest L with L^{8m^2} <= p
        let mut l = (pv as f64).powf(alpha).floor() as u64;
        while checked_pow(l + 1, root).is_some_and(|v| v <= pv as u128) {
            l += 1;
        }
        while l > 1 && checked_pow(l, root).is_none_or(|v| v > pv as u128) {
            l -= 1;
        }
        if l < 2 * m as u64 {
            return Err(Error::ParamsTooLarge(format!(
                "L = floor({pv}^(1/{root})) = {l} < 2m = {}; need p > (2m)^(8m^2)",
                2 * m
            )));
        }
        let u = checked_pow(l, 4 * m - 1)
            .filter(|&v| v <= u64::MAX as u128)
            .ok_or_else(|| Error::ParamsTooLarge(format!("U = {l}^{} overflows", 4 * m - 1)))?
            as u64;
        let m_exp = 16 * m * m - 1;
        if m_exp >= 64 {
            return Err(Error::ParamsTooLarge(format!("M = 2^{m_exp} overflows")));
        }
        let r_digits = (beta * (pv as f64).ln() / 2f64.ln()).floor() as u32;
        Ok(ConstructionParams {
            m,
            alpha,
            beta,
            l,
            u,
            m_digits: 1 << m_exp,
            r_digits,
            mode: ParamMode::Derived,
        })
    }

    /// Directly supplied parameters. `alpha` and `beta` record the effective
    /// exponents `log L / log p` and `r log 2 / log p`.
    pub fn custom(
        p: &PrimeModulus,
        m: u32,
        l: u64,
        u: u64,
        m_digits: u64,
        r_digits: u32,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("m must be positive".into()));
        }
        if l == 0 {
            return Err(Error::InvalidArgument("L must be at least 1".into()));
        }
        if m_digits < 1 {
            return Err(Error::InvalidArgument("M must be at least 1".into()));
        }
        let lp = (p.get() as f64).ln();
        Ok(ConstructionParams {
            m,
            alpha: (l as f64).ln() / lp,
            beta: r_digits as f64 * 2f64.ln() / lp,
            l,
            u,
            m_digits,
            r_digits,
            mode: ParamMode::Override,
        })
    }

    pub fn checks(&self, p: &PrimeModulus) -> ParamChecks {
        let pv = p.get() as u128;
        let m = self.m;
        let u_dominates = checked_pow(self.l, 4 * m - 2)
            .and_then(|v| v.checked_mul(2 * m as u128))
            .is_some_and(|v| self.u as u128 >= v);
        let u_power_below_p = checked_pow(self.u, 2 * m).is_some_and(|v| v < pv);
        let cube_fits = cube_size(self.m_digits, self.r_digits).is_some_and(|v| v <= pv);
        ParamChecks {
            u_dominates,
            u_power_below_p,
            cube_fits,
        }
    }
}

fn cube_size(m_digits: u64, r: u32) -> Option<u128> {
    (2 * m_digits as u128).checked_pow(r)
}

/// `A = {x^2 + Ux mod p : 1 <= x <= L}`, sorted ascending.
pub fn build_set_a(p: &PrimeModulus, params: &ConstructionParams) -> Result<Vec<u64>> {
    if params.mode == ParamMode::Derived && params.l < 2 * params.m as u64 {
        return Err(Error::ParamsTooLarge(format!("L = {} < 2m", params.l)));
    }
    if params.l == 0 {
        return Err(Error::InvalidArgument("L must be at least 1".into()));
    }
    let pv = p.get();
    let u = params.u % pv;
    let mut seen: HashMap<u64, u64> = HashMap::with_capacity(params.l as usize);
    for x in 1..=params.l {
        let xr = x % pv;
        let value = (mul_mod(xr, xr, pv) as u128 + mul_mod(u, xr, pv) as u128) % pv as u128;
        let value = value as u64;
        if let Some(&x1) = seen.get(&value) {
            return Err(Error::DuplicateElements { x1, x2: x, value });
        }
        seen.insert(value, x);
    }
    let mut out: Vec<u64> = seen.into_keys().collect();
    out.sort_unstable();
    Ok(out)
}

/// All `M^r` digit expansions `Σ x_j (2M)^{j-1}`, sorted ascending.
pub fn build_set_b(p: &PrimeModulus, params: &ConstructionParams) -> Result<Vec<u64>> {
    let pv = p.get();
    let size = cube_size(params.m_digits, params.r_digits);
    if size.is_none_or(|s| s > pv as u128) {
        return Err(Error::CubeOverflow {
            size: size.map_or_else(|| "overflow".into(), |s| s.to_string()),
            p: pv,
        });
    }
    let count = (params.m_digits as u128)
        .checked_pow(params.r_digits)
        .unwrap_or(u128::MAX);
    check_cost(count, SET_B_LIMIT)?;
    let base = 2 * params.m_digits;
    let mut out = vec![0u64];
    let mut scale = 1u64;
    for _ in 0..params.r_digits {
        out = out
            .iter()
            .flat_map(|&v| (0..params.m_digits).map(move |d| v + d * scale))
            .collect();
        scale = scale.saturating_mul(base);
    }
    out.sort_unstable();
    debug_assert!(out.last().is_none_or(|&v| 2 * v < pv));
    Ok(out)
}

/// Outcome of the dissociativity check on a dilation set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "result")]
pub enum Dissociativity {
    Pass {
        /// Ordered `2m`-tuples covered, summed over base points.
        tuples_checked: u128,
    },
    /// `Σ_{j<=m} 1/(a - a_j) = Σ_{j>m} 1/(a - a_j)` although the two halves are
    /// not permutations of each other.
    Counterexample {
        base: u64,
        left: Vec<u64>,
        right: Vec<u64>,
    },
}

impl Dissociativity {
    pub fn passed(&self) -> bool {
        matches!(self, Dissociativity::Pass { .. })
    }
}

/// Exhaustively checks that sums of `m` reciprocals `1/(a - a_j)` over
/// `A \ {a}` coincide only for permuted tuples.
pub fn verify_dissociativity(a: &[u64], p: &PrimeModulus, m: u32) -> Result<Dissociativity> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    let pv = p.get();
    let mut sorted = a.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument(format!("duplicate element {} in A", w[0])));
    }
    if let Some(&bad) = sorted.iter().find(|&&x| x >= pv) {
        return Err(Error::InvalidArgument(format!("element {bad} is not reduced modulo {pv}")));
    }
    let n = a.len() as u128;
    let cost = n
        .checked_pow(2 * m)
        .and_then(|v| v.checked_mul(n))
        .unwrap_or(u128::MAX);
    check_cost(cost, DISSOCIATIVITY_LIMIT)?;
    if a.len() <= 1 {
        return Ok(Dissociativity::Pass { tuples_checked: 0 });
    }

    let others_len = a.len() - 1;
    let half_tuples = (others_len as u128).pow(m);
    for &base in a {
        let others: Vec<u64> = a.iter().copied().filter(|&x| x != base).collect();
        let recips: Vec<u64> = others
            .iter()
            .map(|&x| inv_mod(reduce(base as i128 - x as i128, pv), pv))
            .collect();
        // sum -> (sorted multiset, witness tuple)
        let mut seen: HashMap<u64, (Vec<usize>, Vec<usize>)> = HashMap::new();
        let mut idx = vec![0usize; m as usize];
        for _ in 0..half_tuples {
            let sum = idx
                .iter()
                .fold(0u64, |acc, &j| ((acc as u128 + recips[j] as u128) % pv as u128) as u64);
            let mut key = idx.clone();
            key.sort_unstable();
            match seen.get(&sum) {
                Some((multiset, witness)) if *multiset != key => {
                    return Ok(Dissociativity::Counterexample {
                        base,
                        left: witness.iter().map(|&j| others[j]).collect(),
                        right: idx.iter().map(|&j| others[j]).collect(),
                    });
                }
                Some(_) => {}
                None => {
                    seen.insert(sum, (key, idx.clone()));
                }
            }
            // odometer increment
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot < others_len {
                    break;
                }
                *slot = 0;
            }
        }
    }
    Ok(Dissociativity::Pass {
        tuples_checked: n * half_tuples * half_tuples,
    })
}

/// The frame `Φ_p` (optionally zero-padded to `n_rows`) with its index map.
#[derive(Clone, Debug)]
pub struct QuadPhaseFrame {
    pub p: PrimeModulus,
    pub set_a: Vec<u64>,
    pub set_b: Vec<u64>,
    /// `(a, b)` for each column, `a` outer and `b` inner, both ascending.
    pub columns: Vec<(u64, u64)>,
    pub n_rows: usize,
    pub matrix: ComplexMatrix,
    pub params: Option<ConstructionParams>,
}

/// Metadata describing a frame, serialised next to the exported matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameMetadata {
    pub p: PrimeModulus,
    pub n_rows: usize,
    pub n_columns: usize,
    pub set_a: Vec<u64>,
    pub set_b: Vec<u64>,
    pub columns: Vec<(u64, u64)>,
    pub params: Option<ConstructionParams>,
    pub param_checks: Option<ParamChecks>,
}

impl QuadPhaseFrame {
    pub fn metadata(&self) -> FrameMetadata {
        FrameMetadata {
            p: self.p,
            n_rows: self.n_rows,
            n_columns: self.columns.len(),
            set_a: self.set_a.clone(),
            set_b: self.set_b.clone(),
            columns: self.columns.clone(),
            params: self.params.clone(),
            param_checks: self.params.as_ref().map(|c| c.checks(&self.p)),
        }
    }

    /// Largest closed-form inner-product modulus over distinct column pairs:
    /// `p^{-1/2}` once two columns differ in `a`.
    pub fn predicted_coherence(&self) -> f64 {
        predicted_coherence(&self.p, &self.columns)
    }
}

pub fn predicted_coherence(p: &PrimeModulus, columns: &[(u64, u64)]) -> f64 {
    let mut sorted = columns.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return 1.0;
    }
    let distinct_a = sorted.windows(2).any(|w| w[0].0 != w[1].0);
    if distinct_a {
        1.0 / (p.get() as f64).sqrt()
    } else {
        0.0
    }
}

/// First `n_columns` columns of the `(a, b)` grid in row-major order.
pub fn build_frame(
    p: &PrimeModulus,
    set_a: &[u64],
    set_b: &[u64],
    n_columns: usize,
    n_rows: usize,
) -> Result<QuadPhaseFrame> {
    p.require_odd()?;
    let pv = p.get();
    let mut a = set_a.to_vec();
    a.sort_unstable();
    a.dedup();
    let mut b = set_b.to_vec();
    b.sort_unstable();
    b.dedup();
    if let Some(&bad) = a.iter().chain(&b).find(|&&x| x >= pv) {
        return Err(Error::InvalidArgument(format!("element {bad} is not reduced modulo {pv}")));
    }
    let available = a.len() * b.len();
    if n_columns > available {
        return Err(Error::TooManyColumns {
            requested: n_columns,
            available,
        });
    }
    if (n_rows as u64) < pv {
        return Err(Error::InvalidArgument(format!("n_rows = {n_rows} < p = {pv}")));
    }
    check_cost(n_rows as u128 * n_columns as u128, FRAME_ENTRY_LIMIT)?;

    let columns: Vec<(u64, u64)> = a
        .iter()
        .flat_map(|&x| b.iter().map(move |&y| (x, y)))
        .take(n_columns)
        .collect();
    let scale = 1.0 / (pv as f64).sqrt();
    let mut matrix = ComplexMatrix::zeros(n_rows, n_columns);
    for (c, &(ca, cb)) in columns.iter().enumerate() {
        let col = matrix.column_mut(c);
        for x in 0..pv {
            let phase = (mul_mod(ca, mul_mod(x, x, pv), pv) as u128 + mul_mod(cb, x, pv) as u128)
                % pv as u128;
            col[x as usize] = unit_phase(phase as u64, pv) * scale;
        }
    }
    Ok(QuadPhaseFrame {
        p: *p,
        set_a: a,
        set_b: b,
        columns,
        n_rows,
        matrix,
        params: None,
    })
}

/// Builds `A`, `B` from `params` and assembles the frame.
pub fn build_frame_from_params(
    p: &PrimeModulus,
    params: &ConstructionParams,
    n_columns: usize,
    n_rows: usize,
) -> Result<QuadPhaseFrame> {
    let a = build_set_a(p, params)?;
    let b = build_set_b(p, params)?;
    let mut frame = build_frame(p, &a, &b, n_columns, n_rows)?;
    frame.params = Some(params.clone());
    Ok(frame)
}

/// `⟨u_{a1,b1}, u_{a2,b2}⟩` from the Gauss-sum evaluation:
/// `(σ_p/√p) · ((a1-a2)/p) · e_p(-(b1-b2)^2 / (4(a1-a2)))` for `a1 ≠ a2`,
/// and `1{b1 = b2}` otherwise.
pub fn closed_form_inner(p: &PrimeModulus, first: (u64, u64), second: (u64, u64)) -> Result<Complex64> {
    p.require_odd()?;
    let pv = p.get();
    let d = reduce(first.0 as i128 - second.0 as i128, pv);
    let c = reduce(first.1 as i128 - second.1 as i128, pv);
    if d == 0 {
        return Ok(if c == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        });
    }
    let inv4d = inv_mod(mul_mod(4, d, pv), pv);
    let phase = reduce(-(mul_mod(mul_mod(c, c, pv), inv4d, pv) as i128), pv);
    let chi = f64::from(legendre_symbol(d as i64, p));
    Ok(p.gauss_sign() * unit_phase(phase, pv) * (chi / (pv as f64).sqrt()))
}
