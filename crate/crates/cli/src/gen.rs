use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use certsum_core::arith::PrimeModulus;
use certsum_core::ripmat::{
    build_frame, build_set_a, build_set_b, verify_dissociativity, ConstructionParams,
    Dissociativity, FrameMetadata,
};
use certsum_core::thinsets::fourier_profile_values;
use certsum_core::turan::power_sum_profile;
use certsum_core::{
    construct_thin_set, construct_turan, Error, PowerSumMethod, ScanMode,
    ThinSetParams, TuranParams,
};

use crate::output::{to_json_bytes, write_digest, RunManifest};
use crate::{sibling, CliError, CliResult, Context, ScanArg, VariantArg, DEFAULT_SEED};

#[derive(Subcommand, Debug)]
pub enum GenTarget {
    /// Quadratic-phase frame over the sets A and B.
    Rip(RipArgs),
    /// Thin set modulo a prime N.
    Thinset(ThinsetArgs),
    /// Point set with small power sums.
    Turan(TuranArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MatrixFormatArg {
    Text,
    Binary,
}

#[derive(Args, Debug)]
pub struct RipArgs {
    #[arg(long)]
    p: u64,
    /// Dissociativity order.
    #[arg(long, default_value_t = 2)]
    m: u32,
    #[arg(long = "L")]
    l: Option<u64>,
    #[arg(long = "U")]
    u: Option<u64>,
    #[arg(long = "M")]
    m_digits: Option<u64>,
    #[arg(long = "r")]
    r_digits: Option<u32>,
    /// Derive L, U, M, r from p and m.
    #[arg(long, conflicts_with_all = ["l", "u", "m_digits", "r_digits", "full"])]
    derived: bool,
    /// Use every (a, b) in F_p x F_p.
    #[arg(long, conflicts_with_all = ["l", "u", "m_digits", "r_digits"])]
    full: bool,
    /// Number of columns; defaults to |A||B|.
    #[arg(long = "N")]
    n_columns: Option<usize>,
    /// Rows after zero padding; defaults to p.
    #[arg(long)]
    n_rows: Option<usize>,
    /// Defaults to text for `.txt` outputs and binary otherwise.
    #[arg(long, value_enum)]
    format: Option<MatrixFormatArg>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ThinsetArgs {
    #[arg(long = "N")]
    n: u64,
    #[arg(long, conflicts_with = "two_stage")]
    one_iteration: bool,
    #[arg(long)]
    two_stage: bool,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long = "P")]
    p: Option<f64>,
    #[arg(long = "R")]
    r: Option<u32>,
    #[arg(long = "P0")]
    p0: Option<f64>,
    #[arg(long = "P1")]
    p1: Option<f64>,
    #[arg(long = "R0")]
    r0: Option<u32>,
    #[arg(long = "R1")]
    r1: Option<u32>,
    #[arg(long, value_enum, default_value = "nonzero")]
    variant: VariantArg,
    /// Refuse parameters that violate any recorded condition.
    #[arg(long)]
    strict: bool,
    #[arg(long, value_enum, default_value = "full")]
    scan: ScanArg,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the full profile as CSV.
    #[arg(long)]
    emit_profile: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Periodic,
    Direct,
}

impl From<MethodArg> for PowerSumMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Periodic => PowerSumMethod::Periodic,
            MethodArg::Direct => PowerSumMethod::Direct,
        }
    }
}

#[derive(Args, Debug)]
pub struct TuranArgs {
    #[arg(long = "N")]
    n: u64,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long = "P0")]
    p0: Option<f64>,
    #[arg(long = "P1")]
    p1: Option<f64>,
    #[arg(long = "R0")]
    r0: Option<u32>,
    #[arg(long, value_enum, default_value = "nonzero")]
    variant: VariantArg,
    #[arg(long)]
    strict: bool,
    #[arg(long, value_enum, default_value = "periodic")]
    method: MethodArg,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    emit_profile: Option<PathBuf>,
}

pub fn run(target: GenTarget, ctx: &Context) -> CliResult<bool> {
    match target {
        GenTarget::Rip(args) => gen_rip(args, ctx),
        GenTarget::Thinset(args) => gen_thinset(args, ctx),
        GenTarget::Turan(args) => gen_turan(args, ctx),
    }
}

fn missing(flag: &str) -> CliError {
    CliError::Usage(format!("missing required flag {flag}"))
}

#[derive(Serialize)]
struct RipCertificate {
    frame: FrameMetadata,
    predicted_coherence: f64,
    /// Absent when the exhaustive check exceeds its size limit.
    dissociativity: Option<Dissociativity>,
}

fn write_outputs(
    manifest: &mut RunManifest,
    out: &Path,
    construction: &[u8],
    certificate: &[u8],
) -> CliResult<()> {
    let digest = write_digest(out, construction)?;
    manifest.record(out, digest);
    let cert_path = sibling(out, "cert.json");
    let digest = write_digest(&cert_path, certificate)?;
    manifest.record(&cert_path, digest);
    Ok(())
}

fn finish_manifest(manifest: &RunManifest, out: &Path) -> CliResult<()> {
    write_digest(&sibling(out, "manifest.json"), &to_json_bytes(manifest)?)?;
    Ok(())
}

fn gen_rip(args: RipArgs, ctx: &Context) -> CliResult<bool> {
    let start = Instant::now();
    let p = PrimeModulus::new(args.p)?;
    let (params, set_a, set_b) = if args.full {
        let all: Vec<u64> = (0..args.p).collect();
        (None, all.clone(), all)
    } else {
        let params = if args.derived {
            ConstructionParams::derived(&p, args.m)?
        } else {
            ConstructionParams::custom(
                &p,
                args.m,
                args.l.ok_or_else(|| missing("--L"))?,
                args.u.ok_or_else(|| missing("--U"))?,
                args.m_digits.ok_or_else(|| missing("--M"))?,
                args.r_digits.ok_or_else(|| missing("--r"))?,
            )?
        };
        let a = build_set_a(&p, &params)?;
        let b = build_set_b(&p, &params)?;
        (Some(params), a, b)
    };
    let n_columns = args.n_columns.unwrap_or(set_a.len() * set_b.len());
    let n_rows = args.n_rows.unwrap_or(args.p as usize);
    let mut frame = build_frame(&p, &set_a, &set_b, n_columns, n_rows)?;
    frame.params = params.clone();
    let mut manifest = RunManifest::new(
        "gen rip",
        &ctx.argv,
        json!({ "p": args.p, "m": args.m, "params": params, "full": args.full, "N": n_columns, "n_rows": n_rows }),
        None,
        ctx.threads,
    );
    manifest.time("build", start);

    let start = Instant::now();
    let dissociativity = match verify_dissociativity(&frame.set_a, &p, args.m) {
        Ok(d) => Some(d),
        Err(Error::TooLarge { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    manifest.time("dissociativity", start);

    let format = args.format.unwrap_or(if args.out.extension().is_some_and(|e| e == "txt") {
        MatrixFormatArg::Text
    } else {
        MatrixFormatArg::Binary
    });
    let mut bytes = Vec::new();
    match format {
        MatrixFormatArg::Text => frame.matrix.write_text(&mut bytes)?,
        MatrixFormatArg::Binary => frame.matrix.write_binary(&mut bytes)?,
    }
    let cert = RipCertificate {
        frame: frame.metadata(),
        predicted_coherence: frame.predicted_coherence(),
        dissociativity,
    };
    write_outputs(&mut manifest, &args.out, &bytes, &to_json_bytes(&cert)?)?;
    finish_manifest(&manifest, &args.out)?;
    eprintln!(
        "wrote {} ({} x {}), predicted coherence {:.10}",
        args.out.display(),
        frame.n_rows,
        n_columns,
        cert.predicted_coherence
    );
    Ok(true)
}

fn thinset_params(args: &ThinsetArgs) -> CliResult<ThinSetParams> {
    let explicit_one = args.p.is_some() || args.r.is_some();
    let explicit_two = args.p0.is_some() || args.p1.is_some() || args.r0.is_some() || args.r1.is_some();
    if let Some(mu) = args.mu {
        if explicit_one || explicit_two {
            return Err(CliError::Usage("--mu cannot be combined with explicit parameters".into()));
        }
        return match (args.one_iteration, args.two_stage) {
            (true, _) => Ok(ThinSetParams::OneIterationMu { mu }),
            (_, true) => Ok(ThinSetParams::TwoStageMu { mu }),
            _ => Err(CliError::Usage("--mu needs --one-iteration or --two-stage".into())),
        };
    }
    let one = args.one_iteration || (explicit_one && !args.two_stage);
    if one {
        Ok(ThinSetParams::OneIteration {
            p: args.p.ok_or_else(|| missing("--P"))?,
            r: args.r.ok_or_else(|| missing("--R"))?,
        })
    } else if args.two_stage || explicit_two {
        Ok(ThinSetParams::TwoStage {
            p0: args.p0.ok_or_else(|| missing("--P0"))?,
            p1: args.p1.ok_or_else(|| missing("--P1"))?,
            r0: args.r0.ok_or_else(|| missing("--R0"))?,
            r1: args.r1.ok_or_else(|| missing("--R1"))?,
        })
    } else {
        Err(CliError::Usage("give --mu or explicit parameters (--P --R or --P0 --P1 --R0 --R1)".into()))
    }
}

pub fn scan_mode(scan: ScanArg, samples: u64, seed: u64) -> ScanMode {
    match scan {
        ScanArg::Full => ScanMode::Full,
        ScanArg::Sampled => ScanMode::Sampled { count: samples, seed },
    }
}

pub fn csv_rows(header: &str, values: &[f64]) -> Vec<u8> {
    let mut out = String::with_capacity(values.len() * 24 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, v));
    }
    out.into_bytes()
}

fn gen_thinset(args: ThinsetArgs, ctx: &Context) -> CliResult<bool> {
    let params = thinset_params(&args)?;
    let n = PrimeModulus::new(args.n)?;
    let scan = scan_mode(args.scan, args.samples, args.seed);
    let mut manifest = RunManifest::new(
        "gen thinset",
        &ctx.argv,
        json!({ "N": args.n, "params": params, "variant": certsum_core::StageVariant::from(args.variant), "strict": args.strict, "scan": scan }),
        matches!(scan, ScanMode::Sampled { .. }).then_some(args.seed),
        ctx.threads,
    );
    let start = Instant::now();
    let thin = construct_thin_set(&n, params, args.variant.into(), args.strict, scan)?;
    manifest.time("construct_and_scan", start);

    write_outputs(&mut manifest, &args.out, &to_json_bytes(&thin)?, &to_json_bytes(&thin.certificate)?)?;
    if let Some(path) = &args.emit_profile {
        let start = Instant::now();
        let values = fourier_profile_values(&thin.set)?;
        let digest = write_digest(path, &csv_rows("k,magnitude", &values))?;
        manifest.record(path, digest);
        manifest.time("profile", start);
    }
    finish_manifest(&manifest, &args.out)?;
    let measured = thin.certificate.measured();
    eprintln!(
        "wrote {}: |T| = {}, measured |f_T| = {:.6}{}, bound {}",
        args.out.display(),
        thin.set.size(),
        measured.max_normalized,
        if measured.lower_bound_only { " (sampled lower bound)" } else { "" },
        thin.certificate.bound().map_or_else(|| "none".into(), |b| format!("{b:.6}")),
    );
    Ok(thin.certificate.bounds_hold())
}

fn gen_turan(args: TuranArgs, ctx: &Context) -> CliResult<bool> {
    let params = match (args.mu, args.p0, args.p1, args.r0) {
        (Some(mu), None, None, None) => TuranParams::Mu { mu },
        (None, Some(p0), Some(p1), Some(r0)) => TuranParams::Explicit { p0, p1, r0 },
        _ => return Err(CliError::Usage("give either --mu or all of --P0 --P1 --R0".into())),
    };
    let mut manifest = RunManifest::new(
        "gen turan",
        &ctx.argv,
        json!({ "N": args.n, "params": params, "variant": certsum_core::StageVariant::from(args.variant), "strict": args.strict, "method": PowerSumMethod::from(args.method) }),
        None,
        ctx.threads,
    );
    let start = Instant::now();
    let built = construct_turan(args.n, params, args.variant.into(), args.strict, args.method.into())?;
    manifest.time("construct_and_scan", start);
    write_outputs(&mut manifest, &args.out, &to_json_bytes(&built)?, &to_json_bytes(&built.certificate)?)?;
    if let Some(path) = &args.emit_profile {
        let values = power_sum_profile(&built.points, args.n)?;
        let digest = write_digest(path, &csv_rows("k,|sum|", &values))?;
        manifest.record(path, digest);
    }
    finish_manifest(&manifest, &args.out)?;
    let c = &built.certificate;
    eprintln!(
        "wrote {}: n = {}, M_N/n = {:.6}, bound {:.6}, random reference M_N/n ~ {:.6}",
        args.out.display(),
        c.n,
        c.measured,
        c.bound,
        c.er_reference / c.n as f64
    );
    Ok(c.bound_holds)
}
