//! Thin sets of residues with uniformly small Fourier coefficients, built
//! from the staged sets `r + s·(p^{-1})_q`.

mod fourier;

use serde::{Deserialize, Serialize};

use crate::arith::{inv_mod, primes_in_dyadic_real, reduce, PrimeModulus};
use crate::error::{check_cost, Error, Result};

pub use fourier::{
    fourier_coefficient, fourier_max_profile, fourier_profile_values, FourierProfile,
    ResidueMultiset, ScanMode, FOURIER_SCAN_LIMIT,
};

/// Stage sets are limited to this many elements counted with multiplicity.
pub const STAGE_SIZE_LIMIT: u128 = 50_000_000;
const TOLERANCE: f64 = 1e-9;

/// Which integers of `(-p/2, p/2)` form `S_p`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageVariant {
    /// All nonzero integers; carries the `15 log q / P` bound.
    #[default]
    Nonzero,
    /// All integers, including 0.
    AllIntegers,
}

/// The integers of `(-p/2, p/2)` selected by `variant`.
pub fn stage_integers(p: u64, variant: StageVariant) -> Vec<i64> {
    let h = ((p - 1) / 2) as i64;
    (-h..=h)
        .filter(|&s| variant == StageVariant::AllIntegers || s != 0)
        .collect()
}

/// `1 + log(1 + 0.26 P / log(2q)) / 2`, the least `R` for the `15 log q / P` bound.
pub fn stage_r_threshold(p_param: f64, q: u64) -> f64 {
    1.0 + (1.0 + 0.26 * p_param / (2.0 * q as f64).ln()).ln() / 2.0
}

/// Weaker bound for the all-integers variant, in terms of
/// `W = 4 log(q/2) / log(P/2)` and the prime count `V`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllIntegersBound {
    pub w: f64,
    pub bound: f64,
}

fn all_integers_bound(q: u64, p_param: f64, r: u32, v: usize) -> Option<AllIntegersBound> {
    if p_param < 4.0 || v == 0 {
        return None;
    }
    let w = 4.0 * (q as f64 / 2.0).ln() / (p_param / 2.0).ln();
    let v = v as f64;
    let bound = w / (2.0 * v) + w / (r as f64 * v) * (1.0 + (1.0 + v / w).ln() / 2.0);
    Some(AllIntegersBound { w, bound })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageCertificate {
    pub q: u64,
    pub p_param: f64,
    pub r: u32,
    pub variant: StageVariant,
    pub primes: Vec<u64>,
    pub v: usize,
    /// `|T|` with multiplicity, `R · Σ_p |S_p|`.
    pub size: u64,
    /// `15 log q / P`.
    pub lemma_bound: f64,
    pub r_threshold: f64,
    pub p_at_least_250: bool,
    pub r_at_least_threshold: bool,
    /// Nonzero variant with every precondition of the `15 log q / P` bound met.
    pub bound_certified: bool,
    pub all_integers_bound: Option<AllIntegersBound>,
    pub distinct: bool,
    /// `q >= R P^2` and 0 lies in at most one `S_p`, under which
    /// distinctness is guaranteed.
    pub distinctness_guaranteed: bool,
    pub measured: FourierProfile,
}

impl StageCertificate {
    /// `measured <= bound` for every bound that applies.
    pub fn bounds_hold(&self) -> bool {
        let lemma = !self.bound_certified || self.measured.max_normalized <= self.lemma_bound + TOLERANCE;
        let iter = self
            .all_integers_bound
            .as_ref()
            .is_none_or(|b| self.measured.max_normalized <= b.bound + TOLERANCE);
        lemma && iter
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSet {
    pub set: ResidueMultiset,
    pub certificate: StageCertificate,
}

fn check_stage_size(r: u32, family: &[(u64, Vec<i64>)]) -> Result<u64> {
    let per_r: u128 = family.iter().map(|(_, s)| s.len() as u128).sum();
    let size = per_r * r as u128;
    check_cost(size, STAGE_SIZE_LIMIT)?;
    Ok(size as u64)
}

fn staged_values(q: u64, r: u32, family: &[(u64, Vec<i64>)]) -> impl Iterator<Item = (u64, (u32, u64, i64))> + '_ {
    family.iter().flat_map(move |(p, s)| {
        let inv = inv_mod(p % q, q) as i128;
        (1..=r).flat_map(move |ri| {
            s.iter()
                .map(move |&si| (reduce(ri as i128 + si as i128 * inv, q), (ri, *p, si)))
        })
    })
}

/// `T = {r + s (p^{-1})_q : 1 <= r <= R, P/2 < p <= P, s ∈ S_p}` with its
/// certificate and measured `|f_T|`.
pub fn build_stage_set(
    q: &PrimeModulus,
    p_param: f64,
    r: u32,
    variant: StageVariant,
    scan: ScanMode,
) -> Result<StageSet> {
    let qv = q.get();
    if !(qv as f64 > p_param) {
        return Err(Error::ModulusTooSmall { q: qv, p_param });
    }
    if r == 0 {
        return Err(Error::InvalidArgument("R must be at least 1".into()));
    }
    let primes = primes_in_dyadic_real(p_param);
    let family: Vec<(u64, Vec<i64>)> = primes.iter().map(|&p| (p, stage_integers(p, variant))).collect();
    let size = check_stage_size(r, &family)?;
    let set = ResidueMultiset::new(qv, staged_values(qv, r, &family).map(|(v, _)| (v, 1)))?;
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    debug_assert_eq!(set.size(), size);
    let measured = fourier_max_profile(&set, scan)?;

    let r_threshold = stage_r_threshold(p_param, qv);
    let p_at_least_250 = p_param >= 250.0;
    let r_at_least_threshold = r as f64 >= r_threshold;
    let v = primes.len();
    let certificate = StageCertificate {
        q: qv,
        p_param,
        r,
        variant,
        v,
        size,
        lemma_bound: 15.0 * (qv as f64).ln() / p_param,
        r_threshold,
        p_at_least_250,
        r_at_least_threshold,
        bound_certified: variant == StageVariant::Nonzero
            && p_at_least_250
            && r_at_least_threshold,
        all_integers_bound: match variant {
            StageVariant::AllIntegers => all_integers_bound(qv, p_param, r, v),
            StageVariant::Nonzero => None,
        },
        distinct: set.is_set(),
        distinctness_guaranteed: qv as f64 >= r as f64 * p_param * p_param
            && (variant == StageVariant::Nonzero || v < 2),
        measured,
        primes,
    };
    Ok(StageSet { set, certificate })
}

/// Two index triples `(r, p, s)` landing on the same residue.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collision {
    pub value: u64,
    pub first: (u32, u64, i64),
    pub second: (u32, u64, i64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistinctnessReport {
    pub distinct: bool,
    /// `q >= R P^2` and 0 lies in at most one `S_p`.
    pub guaranteed: bool,
    pub collision: Option<Collision>,
}

/// Exhaustive pairwise check that the values `r + s (p^{-1})_q` are distinct.
pub fn check_distinctness(
    r: u32,
    p_param: f64,
    family: &[(u64, Vec<i64>)],
    q: &PrimeModulus,
) -> Result<DistinctnessReport> {
    let qv = q.get();
    for (p, s) in family {
        if *p % qv == 0 {
            return Err(Error::NotCoprime { a: *p as i64, m: qv });
        }
        if let Some(&bad) = s.iter().find(|&&x| 2 * x.unsigned_abs() >= *p) {
            return Err(Error::InvalidArgument(format!("{bad} lies outside (-{p}/2, {p}/2)")));
        }
    }
    check_stage_size(r, family)?;
    let mut values: Vec<(u64, (u32, u64, i64))> = staged_values(qv, r, family).collect();
    values.sort_unstable();
    let collision = values.windows(2).find(|w| w[0].0 == w[1].0).map(|w| Collision {
        value: w[0].0,
        first: w[0].1,
        second: w[1].1,
    });
    Ok(DistinctnessReport {
        distinct: collision.is_none(),
        guaranteed: qv as f64 >= r as f64 * p_param * p_param
            && family.iter().filter(|(_, s)| s.contains(&0)).count() < 2,
        collision,
    })
}

/// Certificate of a composition of stage sets modulo `N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionCertificate {
    pub modulus: u64,
    pub p1: f64,
    pub r1: u32,
    pub v1: usize,
    /// Common stage size `S`.
    pub stage_size: u64,
    pub size: u64,
    /// Largest measured `|f_{S_q}|` over the stages.
    pub stage_eps: f64,
    /// Every stage maximum comes from a full scan.
    pub stage_eps_exact: bool,
    pub rounding_term: f64,
    pub divisor_term: f64,
    /// `stage_eps + (2/√3)/R1 + log(N/3)/(V1 log(P1/2))`.
    pub composed_bound: f64,
    pub p1_at_least_4: bool,
    pub stage_size_at_least_2: bool,
    pub distinct: bool,
    pub distinctness_guaranteed: bool,
    pub measured: FourierProfile,
    pub bound_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComposedSet {
    pub set: ResidueMultiset,
    pub certificate: CompositionCertificate,
}

/// Symmetric representative of `s mod q` in `(-q/2, q/2]`.
fn lift(s: u64, q: u64) -> i128 {
    if 2 * s > q {
        s as i128 - q as i128
    } else {
        s as i128
    }
}

/// `T = {r + s (q^{-1})_N : 1 <= r <= R1, P1/2 < q <= P1, s ∈ S_q}`, where the
/// stage residues are lifted to `(-q/2, q/2)`.
pub fn compose_thin_set(
    n: &PrimeModulus,
    p1: f64,
    r1: u32,
    stages: &[StageSet],
    scan: ScanMode,
) -> Result<ComposedSet> {
    let nv = n.get();
    if !(nv as f64 > p1) {
        return Err(Error::ModulusTooSmall { q: nv, p_param: p1 });
    }
    if r1 == 0 {
        return Err(Error::InvalidArgument("R1 must be at least 1".into()));
    }
    let expected = primes_in_dyadic_real(p1);
    let got: Vec<u64> = stages.iter().map(|s| s.set.modulus()).collect();
    if got != expected {
        return Err(Error::InvalidArgument(format!(
            "stage moduli {got:?} are not the primes in ({}, {p1}]",
            p1 / 2.0
        )));
    }
    let sizes: Vec<u64> = stages.iter().map(|s| s.set.size()).collect();
    if sizes.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::UnequalStageSizes(format!("{sizes:?}")));
    }
    let stage_size = sizes[0];
    let v1 = stages.len();
    let count = stage_size as u128 * v1 as u128 * r1 as u128;
    check_cost(count, STAGE_SIZE_LIMIT)?;

    let entries = stages.iter().flat_map(|stage| {
        let q = stage.set.modulus();
        let inv = inv_mod(q % nv, nv) as i128;
        stage.set.elements().iter().flat_map(move |&(s, w)| {
            let shifted = lift(s, q) * inv;
            (1..=r1).map(move |ri| (reduce(ri as i128 + shifted, nv), w))
        })
    });
    let set = ResidueMultiset::new(nv, entries)?;
    let measured = fourier_max_profile(&set, scan)?;

    let stage_eps = stages
        .iter()
        .map(|s| s.certificate.measured.max_normalized)
        .fold(0.0, f64::max);
    let rounding_term = (2.0 / 3f64.sqrt()) / r1 as f64;
    let divisor_term = (nv as f64 / 3.0).ln() / (v1 as f64 * (p1 / 2.0).ln());
    let composed_bound = stage_eps + rounding_term + divisor_term;
    let bound_holds = measured.max_normalized <= composed_bound + TOLERANCE;
    Ok(ComposedSet {
        certificate: CompositionCertificate {
            modulus: nv,
            p1,
            r1,
            v1,
            stage_size,
            size: set.size(),
            stage_eps,
            stage_eps_exact: stages.iter().all(|s| !s.certificate.measured.lower_bound_only),
            rounding_term,
            divisor_term,
            composed_bound,
            p1_at_least_4: p1 >= 4.0,
            stage_size_at_least_2: stage_size >= 2,
            distinct: set.is_set(),
            distinctness_guaranteed: nv as f64 >= r1 as f64 * p1 * p1
                && stages.iter().all(|s| s.set.is_set())
                && stages.iter().filter(|s| s.set.elements().first().is_some_and(|e| e.0 == 0)).count() < 2,
            measured,
            bound_holds,
        },
        set,
    })
}

/// A named inequality evaluated on concrete parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub name: String,
    pub expression: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl ConditionCheck {
    pub fn le(name: &str, expression: &str, lhs: f64, rhs: f64) -> Self {
        ConditionCheck {
            name: name.into(),
            expression: expression.into(),
            lhs,
            rhs,
            holds: lhs <= rhs,
        }
    }

    pub fn lt(name: &str, expression: &str, lhs: f64, rhs: f64) -> Self {
        ConditionCheck {
            holds: lhs < rhs,
            ..ConditionCheck::le(name, expression, lhs, rhs)
        }
    }

    fn describe(&self) -> String {
        format!("{} [{}]: {} vs {}", self.name, self.expression, self.lhs, self.rhs)
    }
}

/// Fails with [`Error::ParameterConditionViolated`] listing every violated check.
pub fn enforce(conditions: &[ConditionCheck]) -> Result<()> {
    let violated: Vec<String> = conditions.iter().filter(|c| !c.holds).map(|c| c.describe()).collect();
    if violated.is_empty() {
        Ok(())
    } else {
        Err(Error::ParameterConditionViolated(violated))
    }
}

/// `log N`, `log log N`.
fn log_levels(n: u64) -> (f64, f64) {
    let l1 = (n as f64).ln();
    (l1, l1.ln())
}

/// `L_2^e / L_1 <= μ < 1`, plus `1/μ ∈ N` when `integral`.
pub(crate) fn mu_conditions(n: u64, mu: f64, exponent: i32, integral: bool) -> Vec<ConditionCheck> {
    let (l1, l2) = log_levels(n);
    let name = if exponent == 4 { "log_ratio_4" } else { "log_ratio_3" };
    let mut out = vec![
        ConditionCheck::le(name, &format!("L_2^{exponent}/L_1 <= mu"), l2.powi(exponent) / l1, mu),
        ConditionCheck::lt("mu_below_one", "mu < 1", mu, 1.0),
    ];
    if integral {
        let inv = 1.0 / mu;
        out.push(ConditionCheck {
            name: "mu_reciprocal_integer".into(),
            expression: "1/mu is a positive integer".into(),
            lhs: inv,
            rhs: inv.round(),
            holds: (inv - inv.round()).abs() < 1e-9 && inv.round() >= 1.0,
        });
    }
    out
}

/// `R0 = ⌊2 + log(1 + 13/μ)/2⌋`, `P1 = (8/μ) log N`, `P0 = (45/μ) log P1`.
pub(crate) fn staged_from_mu(n: u64, mu: f64) -> (f64, f64, u32) {
    let r0 = (2.0 + (1.0 + 13.0 / mu).ln() / 2.0).floor() as u32;
    let p1 = 8.0 / mu * (n as f64).ln();
    let p0 = 45.0 / mu * p1.ln();
    (p0, p1, r0)
}

pub(crate) fn r0_condition(p0: f64, p1: f64, r0: u32) -> ConditionCheck {
    ConditionCheck::le(
        "R0_threshold",
        "1 + log(1 + 0.26 P0/log P1)/2 <= R0",
        1.0 + (1.0 + 0.26 * p0 / p1.ln()).ln() / 2.0,
        r0 as f64,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ThinSetParams {
    OneIteration { p: f64, r: u32 },
    /// `P = (15/μ) log N`, `R = ⌊2 + log(1 + 5/μ)/2⌋`.
    OneIterationMu { mu: f64 },
    TwoStage { p0: f64, p1: f64, r0: u32, r1: u32 },
    /// `R1 = 4/μ` with `R0`, `P0`, `P1` as in [`staged_from_mu`].
    TwoStageMu { mu: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ThinSetCertificate {
    OneIteration {
        mu: Option<f64>,
        strict: bool,
        conditions: Vec<ConditionCheck>,
        stage: StageCertificate,
    },
    TwoStage {
        mu: Option<f64>,
        strict: bool,
        conditions: Vec<ConditionCheck>,
        p0: f64,
        r0: u32,
        v0: usize,
        /// `15 log P1 / P0`.
        stage1_eps: f64,
        /// The composed bound with `stage1_eps` in place of the measured stage maxima.
        composed_bound_analytic: f64,
        stages: Vec<StageCertificate>,
        composition: CompositionCertificate,
    },
}

impl ThinSetCertificate {
    pub fn measured(&self) -> &FourierProfile {
        match self {
            ThinSetCertificate::OneIteration { stage, .. } => &stage.measured,
            ThinSetCertificate::TwoStage { composition, .. } => &composition.measured,
        }
    }

    pub fn distinct(&self) -> bool {
        match self {
            ThinSetCertificate::OneIteration { stage, .. } => stage.distinct,
            ThinSetCertificate::TwoStage { composition, .. } => composition.distinct,
        }
    }

    pub fn conditions(&self) -> &[ConditionCheck] {
        match self {
            ThinSetCertificate::OneIteration { conditions, .. }
            | ThinSetCertificate::TwoStage { conditions, .. } => conditions,
        }
    }

    /// The bound the measured `|f_T|` is certified against, if any.
    pub fn bound(&self) -> Option<f64> {
        match self {
            ThinSetCertificate::OneIteration { stage, .. } => {
                if stage.bound_certified {
                    Some(stage.lemma_bound)
                } else {
                    stage.all_integers_bound.as_ref().map(|b| b.bound)
                }
            }
            ThinSetCertificate::TwoStage { composition, .. } => Some(composition.composed_bound),
        }
    }

    /// Every bound carried by the certificate holds against the measurement.
    pub fn bounds_hold(&self) -> bool {
        match self {
            ThinSetCertificate::OneIteration { stage, .. } => stage.bounds_hold(),
            ThinSetCertificate::TwoStage { stages, composition, .. } => {
                composition.bound_holds && stages.iter().all(StageCertificate::bounds_hold)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinSet {
    #[serde(flatten)]
    pub set: ResidueMultiset,
    pub certificate: ThinSetCertificate,
}

/// Builds a thin set modulo `N` in one of the four parameter modes. In strict
/// mode every recorded condition must hold; otherwise they are only reported.
pub fn construct_thin_set(
    n: &PrimeModulus,
    params: ThinSetParams,
    variant: StageVariant,
    strict: bool,
    scan: ScanMode,
) -> Result<ThinSet> {
    let nv = n.get();
    match params {
        ThinSetParams::OneIteration { .. } | ThinSetParams::OneIterationMu { .. } => {
            let (p, r, mu) = match params {
                ThinSetParams::OneIteration { p, r } => (p, r, None),
                ThinSetParams::OneIterationMu { mu } => {
                    check_mu(mu)?;
                    let p = 15.0 / mu * (nv as f64).ln();
                    let r = (2.0 + (1.0 + 5.0 / mu).ln() / 2.0).floor() as u32;
                    (p, r, Some(mu))
                }
                _ => unreachable!(),
            };
            let mut conditions = Vec::new();
            if let Some(mu) = mu {
                conditions.extend(mu_conditions(nv, mu, 4, false));
                let l1 = (nv as f64).ln();
                conditions.push(ConditionCheck::le(
                    "mu_range",
                    "N^(-1/2) log^2 N <= mu",
                    l1 * l1 / (nv as f64).sqrt(),
                    mu,
                ));
            }
            conditions.push(ConditionCheck::le("P_min", "250 <= P", 250.0, p));
            conditions.push(ConditionCheck::le(
                "R_threshold",
                "1 + log(1 + 0.26 P/log(2N))/2 <= R",
                stage_r_threshold(p, nv),
                r as f64,
            ));
            conditions.push(ConditionCheck::le("distinct", "R P^2 <= N", r as f64 * p * p, nv as f64));
            if strict {
                enforce(&conditions)?;
            }
            let stage = build_stage_set(n, p, r, variant, scan)?;
            Ok(ThinSet {
                set: stage.set,
                certificate: ThinSetCertificate::OneIteration {
                    mu,
                    strict,
                    conditions,
                    stage: stage.certificate,
                },
            })
        }
        ThinSetParams::TwoStage { .. } | ThinSetParams::TwoStageMu { .. } => {
            let (p0, p1, r0, r1, mu) = match params {
                ThinSetParams::TwoStage { p0, p1, r0, r1 } => (p0, p1, r0, r1, None),
                ThinSetParams::TwoStageMu { mu } => {
                    check_mu(mu)?;
                    let (p0, p1, r0) = staged_from_mu(nv, mu);
                    (p0, p1, r0, (4.0 / mu).round().max(1.0) as u32, Some(mu))
                }
                _ => unreachable!(),
            };
            let mut conditions = Vec::new();
            if let Some(mu) = mu {
                conditions.extend(mu_conditions(nv, mu, 4, true));
            }
            conditions.push(ConditionCheck::le("P0_min", "250 <= P0", 250.0, p0));
            conditions.push(ConditionCheck::le("P1_vs_P0", "2 R0 P0^2 <= P1", 2.0 * r0 as f64 * p0 * p0, p1));
            conditions.push(ConditionCheck::le("N_vs_P1", "R1 P1^2 <= N", r1 as f64 * p1 * p1, nv as f64));
            conditions.push(r0_condition(p0, p1, r0));
            if let Some(mu) = mu {
                let lhs = (2.0 / 3f64.sqrt()) / r1 as f64
                    + 15.0 * p1.ln() / p0
                    + 5.0 * (nv as f64).ln() / (2.0 * p1);
                conditions.push(ConditionCheck::le(
                    "errors",
                    "(2/sqrt 3)/R1 + 15 log P1/P0 + 5 log N/(2 P1) <= mu",
                    lhs,
                    mu,
                ));
            }
            if strict {
                enforce(&conditions)?;
            }
            let stages = primes_in_dyadic_real(p1)
                .into_iter()
                .map(|q| build_stage_set(&PrimeModulus::new(q)?, p0, r0, variant, ScanMode::Full))
                .collect::<Result<Vec<_>>>()?;
            if stages.is_empty() {
                return Err(Error::InvalidArgument(format!("no primes in ({}, {p1}]", p1 / 2.0)));
            }
            let composed = compose_thin_set(n, p1, r1, &stages, scan)?;
            let stage1_eps = 15.0 * p1.ln() / p0;
            let c = &composed.certificate;
            Ok(ThinSet {
                set: composed.set,
                certificate: ThinSetCertificate::TwoStage {
                    mu,
                    strict,
                    conditions,
                    p0,
                    r0,
                    v0: primes_in_dyadic_real(p0).len(),
                    stage1_eps,
                    composed_bound_analytic: stage1_eps + c.rounding_term + c.divisor_term,
                    stages: stages.into_iter().map(|s| s.certificate).collect(),
                    composition: composed.certificate,
                },
            })
        }
    }
}

pub(crate) fn check_mu(mu: f64) -> Result<()> {
    if mu.is_finite() && mu > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")))
    }
}
