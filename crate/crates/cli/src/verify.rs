use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use certsum_core::additive::{cube_decode, verify_cube_sumset_bound, CubeSumsetReport};
use certsum_core::ripmat::{
    coherence_with_pair, exp_sum_energy_check, flat_rip_constant, rip_report, ExpSumEnergyReport,
    FlatRipResult,
};
use certsum_core::thinsets::fourier_max_profile;
use certsum_core::turan::{power_sum_max, PowerSumMax};
use certsum_core::{
    additive_energy, set_combine, CombineMode, ComplexMatrix, EnergyMode, EnergyReport, Error,
    FlatRipMode, FourierProfile, PowerSumMethod, PrimeModulus, ResidueMultiset, ResidueSet,
    RipReport, ScanMode, ThinSet, TuranConstruction, TuranPointSet,
};

use crate::gen::{scan_mode, MethodArg};
use crate::output::{emit_report, from_value, read_json};
use crate::{sibling, CliError, CliResult, ScanArg, DEFAULT_SEED};

const TOLERANCE: f64 = 1e-9;

#[derive(Subcommand, Debug)]
pub enum VerifyCheck {
    /// Largest off-diagonal Gram entry of a stored frame.
    Coherence(CoherenceArgs),
    /// Flat restricted isometry constant of order k.
    FlatRip(FlatRipArgs),
    /// Coherence, flat and exact restricted isometry constants of order k.
    Rip(RipArgs),
    /// Largest normalised Fourier coefficient of a stored set.
    Fourier(FourierArgs),
    /// Additive energy E(A, B) by two independent methods.
    Energy(PairArgs),
    /// Sumset size checks for two residue sets.
    Sumset(SumsetArgs),
    /// Maximum power sum of a stored point set.
    PowerSum(PowerSumArgs),
    /// Quadratic exponential sum against its energy bound.
    ExpSum(ExpSumArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RipModeArg {
    Exhaustive,
    Sampled,
}

#[derive(Args, Debug)]
pub struct CoherenceArgs {
    input: PathBuf,
    /// Expected coherence; defaults to the prediction in the sibling certificate.
    #[arg(long)]
    expected: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FlatRipArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, value_enum, default_value = "exhaustive")]
    mode: RipModeArg,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RipArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, value_enum, default_value = "exhaustive")]
    mode: RipModeArg,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Skip the eigenvalue computation of the exact constant.
    #[arg(long)]
    no_exact: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FourierArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "full")]
    scan: ScanArg,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PairArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SumsetArgs {
    a: PathBuf,
    b: PathBuf,
    /// Read elements as base-2M expansions of points of the cube with side M.
    #[arg(long = "cube-M", requires = "cube_r")]
    cube_m: Option<u32>,
    /// Cube dimension for `--cube-M`.
    #[arg(long = "cube-r", requires = "cube_m")]
    cube_r: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PowerSumArgs {
    input: PathBuf,
    /// Scan length; defaults to the N stored with the construction.
    #[arg(long = "N")]
    n: Option<u64>,
    #[arg(long, value_enum, default_value = "periodic")]
    method: MethodArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExpSumArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long, default_value_t = 1)]
    theta: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(check: VerifyCheck) -> CliResult<bool> {
    match check {
        VerifyCheck::Coherence(args) => verify_coherence(args),
        VerifyCheck::FlatRip(args) => verify_flat_rip(args),
        VerifyCheck::Rip(args) => verify_rip(args),
        VerifyCheck::Fourier(args) => verify_fourier(args),
        VerifyCheck::Energy(args) => verify_energy(args),
        VerifyCheck::Sumset(args) => verify_sumset(args),
        VerifyCheck::PowerSum(args) => verify_power_sum(args),
        VerifyCheck::ExpSum(args) => verify_exp_sum(args),
    }
}

fn load_matrix(path: &Path) -> CliResult<ComplexMatrix> {
    Ok(ComplexMatrix::read_file(path)?.0)
}

/// The certificate written next to `input` by `gen`, if present.
fn sibling_certificate(input: &Path) -> CliResult<Option<Value>> {
    let path = sibling(input, "cert.json");
    if path.exists() {
        read_json(&path).map(Some)
    } else {
        Ok(None)
    }
}

fn rip_mode(mode: RipModeArg, samples: u64, seed: u64) -> FlatRipMode {
    match mode {
        RipModeArg::Exhaustive => FlatRipMode::Exhaustive,
        RipModeArg::Sampled => FlatRipMode::Sampled { trials: samples, seed },
    }
}

#[derive(Serialize)]
struct CoherenceReport {
    mu: f64,
    pair: (usize, usize),
    expected: Option<f64>,
    pass: bool,
}

fn verify_coherence(args: CoherenceArgs) -> CliResult<bool> {
    let matrix = load_matrix(&args.input)?;
    let (mu, pair) = coherence_with_pair(&matrix)?;
    let expected = match args.expected {
        Some(e) => Some(e),
        None => sibling_certificate(&args.input)?
            .and_then(|c| c.get("predicted_coherence").and_then(Value::as_f64)),
    };
    let pass = expected.is_none_or(|e| (mu - e).abs() <= TOLERANCE);
    emit_report(&CoherenceReport { mu, pair, expected, pass }, args.out.as_deref())?;
    Ok(pass)
}

#[derive(Serialize)]
struct FlatRipReport {
    #[serde(flatten)]
    result: FlatRipResult,
    coherence: f64,
    /// `k μ`, which bounds the flat constant from above.
    coherence_bound: f64,
    pass: bool,
}

fn verify_flat_rip(args: FlatRipArgs) -> CliResult<bool> {
    let matrix = load_matrix(&args.input)?;
    let (mu, _) = coherence_with_pair(&matrix)?;
    let result = flat_rip_constant(&matrix, args.k, rip_mode(args.mode, args.samples, args.seed))?;
    let coherence_bound = args.k as f64 * mu;
    let pass = result.delta <= coherence_bound + TOLERANCE;
    emit_report(&FlatRipReport { result, coherence: mu, coherence_bound, pass }, args.out.as_deref())?;
    Ok(pass)
}

#[derive(Serialize)]
struct FullRipReport {
    #[serde(flatten)]
    report: RipReport,
    pass: bool,
}

fn verify_rip(args: RipArgs) -> CliResult<bool> {
    let matrix = load_matrix(&args.input)?;
    let report = rip_report(&matrix, args.k, rip_mode(args.mode, args.samples, args.seed), !args.no_exact)?;
    let pass = report.coherence_bound_holds.unwrap_or(true);
    emit_report(&FullRipReport { report, pass }, args.out.as_deref())?;
    Ok(pass)
}

/// A thin set with its certificate, or a bare multiset.
fn load_multiset(path: &Path) -> CliResult<(ResidueMultiset, Option<ThinSet>)> {
    let value = read_json(path)?;
    if value.get("certificate").is_some() {
        let thin: ThinSet = from_value(value, &path.display().to_string())?;
        Ok((thin.set.clone(), Some(thin)))
    } else {
        Ok((from_value(value, &path.display().to_string())?, None))
    }
}

#[derive(Serialize)]
struct FourierReport {
    profile: FourierProfile,
    bound: Option<f64>,
    bound_holds: Option<bool>,
    /// Whether a full rescan reproduces the stored maximum.
    matches_certificate: Option<bool>,
    distinct: bool,
    pass: bool,
}

fn verify_fourier(args: FourierArgs) -> CliResult<bool> {
    let (set, thin) = load_multiset(&args.input)?;
    let scan = scan_mode(args.scan, args.samples, args.seed);
    let profile = fourier_max_profile(&set, scan)?;
    let cert = thin.as_ref().map(|t| &t.certificate);
    let bound = cert.and_then(|c| c.bound());
    let bound_holds = bound.map(|b| profile.max_normalized <= b + TOLERANCE);
    let matches_certificate = cert.and_then(|c| {
        let stored = c.measured();
        (scan == ScanMode::Full && stored.scan == ScanMode::Full)
            .then(|| (stored.max_normalized - profile.max_normalized).abs() <= TOLERANCE)
    });
    let pass = bound_holds.unwrap_or(true) && matches_certificate.unwrap_or(true);
    let report = FourierReport {
        distinct: set.is_set(),
        profile,
        bound,
        bound_holds,
        matches_certificate,
        pass,
    };
    emit_report(&report, args.out.as_deref())?;
    Ok(pass)
}

/// Residue sets are read from `{"modulus", "elements": [..]}`; multiset files
/// (including thin sets) contribute their distinct values.
fn load_residue_set(path: &Path) -> CliResult<ResidueSet> {
    let value = read_json(path)?;
    let pairs = value
        .get("elements")
        .and_then(Value::as_array)
        .and_then(|e| e.first())
        .is_some_and(Value::is_array);
    if pairs {
        let (multiset, _) = load_multiset(path)?;
        Ok(ResidueSet::new(multiset.modulus(), multiset.elements().iter().map(|&(v, _)| v))?)
    } else {
        from_value(value, &path.display().to_string())
    }
}

#[derive(Serialize)]
struct EnergyCheckReport {
    brute: Option<EnergyReport>,
    convolution: EnergyReport,
    agree: Option<bool>,
    pass: bool,
}

fn verify_energy(args: PairArgs) -> CliResult<bool> {
    let a = load_residue_set(&args.a)?;
    let b = load_residue_set(&args.b)?;
    let convolution = additive_energy(&a, &b, EnergyMode::Convolution)?;
    let brute = match additive_energy(&a, &b, EnergyMode::Brute) {
        Ok(r) => Some(r),
        Err(Error::TooLarge { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let agree = brute.as_ref().map(|r| r.energy == convolution.energy);
    let pass = agree.unwrap_or(true);
    emit_report(&EnergyCheckReport { brute, convolution, agree, pass }, args.out.as_deref())?;
    Ok(pass)
}

#[derive(Serialize)]
struct SumsetReport {
    sizes: (usize, usize),
    sumset: usize,
    difference_set: usize,
    energy: u64,
    /// `|A + B| >= min(p, |A| + |B| - 1)` for prime moduli.
    cauchy_davenport: Option<bool>,
    /// `E(A, B) >= |A|^2 |B|^2 / |A + B|`.
    energy_lower_bound: f64,
    energy_bound_holds: bool,
    /// `|A + A| <= |A - A|^2 / |A|`, checked when both inputs are the same set.
    plunnecke_ruzsa: Option<bool>,
    cube: Option<CubeSumsetReport>,
    pass: bool,
}

fn verify_sumset(args: SumsetArgs) -> CliResult<bool> {
    let a = load_residue_set(&args.a)?;
    let b = load_residue_set(&args.b)?;
    let sumset = set_combine(&a, &b, &CombineMode::Sum)?.len();
    let difference_set = set_combine(&a, &b, &CombineMode::Difference)?.len();
    let energy = additive_energy(&a, &b, EnergyMode::Convolution)?.energy;
    let (na, nb) = (a.len(), b.len());
    let cauchy_davenport = PrimeModulus::new(a.modulus())
        .ok()
        .map(|p| sumset as u64 >= p.get().min((na + nb) as u64 - 1));
    let energy_lower_bound = (na * na) as f64 * (nb * nb) as f64 / sumset as f64;
    let energy_bound_holds = energy as f64 >= energy_lower_bound * (1.0 - TOLERANCE);
    let plunnecke_ruzsa =
        (a == b).then(|| (sumset * na) as f64 <= (difference_set * difference_set) as f64);
    let cube = match (args.cube_m, args.cube_r) {
        (Some(m), Some(r)) => {
            let decode = |s: &ResidueSet| -> CliResult<Vec<_>> {
                s.elements().iter().map(|&v| cube_decode(v, m, r).map_err(CliError::from)).collect()
            };
            Some(verify_cube_sumset_bound(&decode(&a)?, &decode(&b)?)?)
        }
        _ => None,
    };
    let pass = cauchy_davenport.unwrap_or(true)
        && energy_bound_holds
        && plunnecke_ruzsa.unwrap_or(true)
        && cube.as_ref().is_none_or(|c| c.pass);
    let report = SumsetReport {
        sizes: (na, nb),
        sumset,
        difference_set,
        energy,
        cauchy_davenport,
        energy_lower_bound,
        energy_bound_holds,
        plunnecke_ruzsa,
        cube,
        pass,
    };
    emit_report(&report, args.out.as_deref())?;
    Ok(pass)
}

#[derive(Serialize)]
struct PowerSumReport {
    #[serde(flatten)]
    max: PowerSumMax,
    normalized: f64,
    bound: Option<f64>,
    bound_holds: Option<bool>,
    matches_certificate: Option<bool>,
    pass: bool,
}

fn verify_power_sum(args: PowerSumArgs) -> CliResult<bool> {
    let value = read_json(&args.input)?;
    let what = args.input.display().to_string();
    let (points, construction): (TuranPointSet, Option<TuranConstruction>) = if value.get("certificate").is_some() {
        let c: TuranConstruction = from_value(value, &what)?;
        (c.points.clone(), Some(c))
    } else {
        (from_value(value, &what)?, None)
    };
    let k_max = match (args.n, &construction) {
        (Some(n), _) => n,
        (None, Some(c)) => c.k_max,
        (None, None) => return Err(CliError::Usage("--N is required for a bare point set".into())),
    };
    let method: PowerSumMethod = args.method.into();
    let max = power_sum_max(&points, k_max, method)?;
    let normalized = max.m / max.n as f64;
    let cert = construction.as_ref().map(|c| &c.certificate).filter(|c| c.k_max == k_max);
    let bound = cert.map(|c| c.bound);
    let bound_holds = bound.map(|b| normalized <= b + TOLERANCE);
    let matches_certificate = cert.map(|c| (c.measured - normalized).abs() <= TOLERANCE);
    let pass = bound_holds.unwrap_or(true) && matches_certificate.unwrap_or(true);
    emit_report(
        &PowerSumReport { max, normalized, bound, bound_holds, matches_certificate, pass },
        args.out.as_deref(),
    )?;
    Ok(pass)
}

fn verify_exp_sum(args: ExpSumArgs) -> CliResult<bool> {
    let a = load_residue_set(&args.a)?;
    let b = load_residue_set(&args.b)?;
    let p = PrimeModulus::new(a.modulus())?;
    let report: ExpSumEnergyReport = exp_sum_energy_check(args.theta, &a, &b, &p)?;
    let pass = report.pass;
    emit_report(&report, args.out.as_deref())?;
    Ok(pass)
}
