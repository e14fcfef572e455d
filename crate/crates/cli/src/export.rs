use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::{json, Value};

use certsum_core::thinsets::fourier_profile_values;
use certsum_core::turan::power_sum_profile;
use certsum_core::{ComplexMatrix, Error, ResidueMultiset, TuranConstruction};

use crate::gen::csv_rows;
use crate::output::{from_value, read_bytes, read_json, sha256_hex, to_json_bytes, write_digest};
use crate::{sibling, CliError, CliResult};

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    /// Frame matrix as text.
    Text,
    /// Frame matrix in the binary layout.
    Binary,
    /// Fourier or power-sum profile, one line per frequency.
    Csv,
    /// Certificate bundled with the manifest digest.
    Cert,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    input: PathBuf,
    #[arg(long, value_enum)]
    format: ExportFormat,
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: ExportArgs) -> CliResult<bool> {
    let bytes = read_bytes(&args.input)?;
    let is_json = bytes.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{');
    let output = match args.format {
        ExportFormat::Text | ExportFormat::Binary => {
            if is_json {
                return Err(CliError::Usage("text and binary export apply to frame matrices".into()));
            }
            let (matrix, _) = ComplexMatrix::read_file(&args.input)?;
            let mut out = Vec::new();
            if args.format == ExportFormat::Text {
                matrix.write_text(&mut out)?;
            } else {
                matrix.write_binary(&mut out)?;
            }
            out
        }
        ExportFormat::Csv => {
            if !is_json {
                return Err(CliError::Usage("csv export applies to set and point files".into()));
            }
            let value: Value = serde_json::from_slice(&bytes).map_err(|e| Error::Format(e.to_string()))?;
            let what = args.input.display().to_string();
            if value.get("points").is_some() {
                let c: TuranConstruction = from_value(value, &what)?;
                csv_rows("k,|sum|", &power_sum_profile(&c.points, c.k_max)?)
            } else {
                let set: ResidueMultiset = from_value(strip_certificate(value), &what)?;
                csv_rows("k,magnitude", &fourier_profile_values(&set)?)
            }
        }
        ExportFormat::Cert => {
            let cert_path = sibling(&args.input, "cert.json");
            let certificate = if cert_path.exists() {
                read_json(&cert_path)?
            } else if is_json {
                let value: Value = serde_json::from_slice(&bytes).map_err(|e| Error::Format(e.to_string()))?;
                value
                    .get("certificate")
                    .cloned()
                    .ok_or_else(|| Error::Format("input carries no certificate".into()))?
            } else {
                return Err(Error::Io(format!("{} not found", cert_path.display())).into());
            };
            let manifest_path = sibling(&args.input, "manifest.json");
            let (manifest, manifest_sha256) = if manifest_path.exists() {
                let raw = read_bytes(&manifest_path)?;
                let parsed: Value = serde_json::from_slice(&raw).map_err(|e| Error::Format(e.to_string()))?;
                (Some(parsed), Some(sha256_hex(&raw)))
            } else {
                (None, None)
            };
            to_json_bytes(&json!({
                "input": args.input.file_name().map(|n| n.to_string_lossy().into_owned()),
                "input_sha256": sha256_hex(&bytes),
                "certificate": certificate,
                "manifest_sha256": manifest_sha256,
                "manifest": manifest,
            }))?
        }
    };
    write_digest(&args.out, &output)?;
    Ok(true)
}

fn strip_certificate(mut value: Value) -> Value {
    if let Some(map) = value.as_object_mut() {
        map.retain(|k, _| k == "modulus" || k == "elements");
    }
    value
}
