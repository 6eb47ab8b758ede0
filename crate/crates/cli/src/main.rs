//! Command-line front end: certified component counts, range scans, lower
//! bounds, gap-norm certificates, field construction, sampling, and
//! verification, all with machine-readable JSON output.
//!
//! Exit codes: 0 certified success, 1 input error, 2 ambiguity or precision
//! exhaustion, 3 capacity exceeded.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use divisor_range::characters::{CharacterDescriptor, DirichletCharacter};
use divisor_range::closure::{self, ClosureConfig};
use divisor_range::construct::{self, RealizeOptions};
use divisor_range::error::Error;
use divisor_range::mighty::{self, SequenceMode};
use divisor_range::numberfield::{FieldDescriptor, FieldSpec};
use divisor_range::oracle;
use divisor_range::primes::Primes;
use divisor_range::rigor::{parse_rational, Precision};
use divisor_range::{bounds, Result};

#[derive(Parser)]
#[command(
    name = "divisor-range",
    about = "Certified closures of twisted ideal divisor function ranges",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config file; explicit flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Working precision in bits.
    #[arg(long, global = true)]
    precision_bits: Option<u32>,
    /// Precision-escalation ceiling in bits.
    #[arg(long, global = true)]
    max_precision_bits: Option<u32>,
    /// Truncation norm for streams and Euler products.
    #[arg(long, global = true)]
    horizon: Option<u64>,
    /// Horizon-escalation ceiling.
    #[arg(long, global = true)]
    max_horizon: Option<u64>,
    /// Suppress the timestamp field for byte-identical reruns.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Write the JSON result to a file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct FieldArg {
    /// Field: rational | quadratic:D | cyclotomic:M | inline JSON | @file.
    #[arg(long, default_value = "rational")]
    field: String,
}

#[derive(Args, Clone)]
struct CharArg {
    /// Character: principal:M | kronecker:D | inline JSON | @file.
    #[arg(long = "char", default_value = "principal:1")]
    character: String,
}

#[derive(Subcommand)]
enum Command {
    /// Certified connected-component count of the closure.
    Components {
        #[command(flatten)]
        field: FieldArg,
        #[command(flatten)]
        character: CharArg,
        #[arg(long)]
        r: String,
    },
    /// Full interval union with certified endpoints.
    Closure {
        #[command(flatten)]
        field: FieldArg,
        #[command(flatten)]
        character: CharArg,
        #[arg(long)]
        r: String,
    },
    /// Scan the principal-character moduli: formula vs algorithm counts.
    Scan {
        #[arg(long)]
        r: String,
        /// First scan index (defaults to the least admissible).
        #[arg(long)]
        i_from: Option<usize>,
        /// Last scan index (defaults to i_from + 5).
        #[arg(long)]
        i_to: Option<usize>,
    },
    /// Lower bounds for the component count.
    LowerBound {
        /// "pi" (power-of-two bound) or "partition".
        #[arg(long)]
        kind: String,
        #[arg(long)]
        r: String,
        /// Character modulus for the pi bound.
        #[arg(long, default_value = "1")]
        modulus: String,
        #[command(flatten)]
        field: FieldArg,
        /// Epsilon for the partition bound.
        #[arg(long, default_value = "1/2")]
        epsilon: String,
    },
    /// Certified gap-norm certificate.
    Mighty {
        #[command(flatten)]
        field: FieldArg,
        #[arg(long)]
        r: String,
        #[arg(long)]
        d: u64,
    },
    /// Construct a field with prescribed split/inert primes.
    ConstructField {
        #[arg(long)]
        s: u32,
        /// Comma-separated primes to split completely.
        #[arg(long, value_delimiter = ',')]
        split: Vec<u64>,
        /// Comma-separated primes to stay inert.
        #[arg(long, value_delimiter = ',')]
        inert: Vec<u64>,
        /// Override the auxiliary Eisenstein prime.
        #[arg(long)]
        eisenstein: Option<u64>,
    },
    /// End-to-end pipeline: sequence, field, certificates.
    Realize {
        #[arg(long)]
        r: String,
        #[arg(long)]
        s: u32,
        #[arg(long)]
        m: u32,
        /// strict | desk (default: strict with automatic fallback).
        #[arg(long)]
        mode: Option<String>,
    },
    /// Enumerate divisor-function values up to a norm bound.
    Sample {
        #[command(flatten)]
        field: FieldArg,
        #[command(flatten)]
        character: CharArg,
        #[arg(long)]
        r: String,
        #[arg(long, default_value_t = 10_000)]
        max_norm: u64,
        /// Write scatter data CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Scatter-plot figure of the sampled image.
    Figure {
        #[command(flatten)]
        field: FieldArg,
        #[command(flatten)]
        character: CharArg,
        #[arg(long)]
        r: String,
        #[arg(long, default_value_t = 100_000)]
        max_norm: u64,
        #[arg(long)]
        svg: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Sample and check containment against the computed closure.
    Verify {
        #[command(flatten)]
        field: FieldArg,
        #[command(flatten)]
        character: CharArg,
        #[arg(long)]
        r: String,
        #[arg(long, default_value_t = 100_000)]
        max_norm: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

struct Ctx {
    config: ClosureConfig,
    primes: Primes,
    no_timestamp: bool,
    output: Option<PathBuf>,
}

impl Ctx {
    fn emit(&self, command: &str, result: Value) -> Result<()> {
        let mut envelope = serde_json::Map::new();
        envelope.insert("command".into(), json!(command));
        if !self.no_timestamp {
            envelope.insert(
                "timestamp".into(),
                json!(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
            );
        }
        envelope.insert("result".into(), result);
        let text =
            serde_json::to_string_pretty(&Value::Object(envelope)).expect("serializable result");
        match &self.output {
            Some(path) => {
                std::fs::write(path, text + "\n")?;
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                let _ = writeln!(stdout, "{text}");
            }
        }
        Ok(())
    }
}

fn load_config_value(path: &Option<PathBuf>) -> Result<Value> {
    match path {
        None => Ok(Value::Null),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::InvalidInput(format!("bad config file: {e}")))
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let file_cfg = load_config_value(&cli.config)?;
    let grab_u64 = |key: &str| file_cfg.get(key).and_then(Value::as_u64);
    let defaults = ClosureConfig::default();
    let bits = cli
        .precision_bits
        .or(grab_u64("precision_bits").map(|v| v as u32))
        .unwrap_or(defaults.precision.bits);
    let max_bits = cli
        .max_precision_bits
        .or(grab_u64("max_precision_bits").map(|v| v as u32))
        .unwrap_or(defaults.precision.max_bits);
    let horizon = cli
        .horizon
        .or(grab_u64("horizon"))
        .unwrap_or(defaults.norm_horizon);
    let max_horizon = cli
        .max_horizon
        .or(grab_u64("max_horizon"))
        .unwrap_or(horizon.saturating_mul(16));
    let ctx = Ctx {
        config: ClosureConfig {
            precision: Precision::new(bits, max_bits),
            norm_horizon: horizon,
            max_norm_horizon: max_horizon,
        },
        primes: Primes::default(),
        no_timestamp: cli.no_timestamp,
        output: cli.output.clone(),
    };
    match &cli.command {
        Command::Components {
            field,
            character,
            r,
        } => {
            let (field, chi, r) = parse_triple(field, character, r, &ctx)?;
            let res = closure::compute_closure(&field, &chi, &r, &ctx.config, &ctx.primes)?;
            ctx.emit(
                "components",
                serde_json::to_value(res.to_json()).expect("json"),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Closure {
            field,
            character,
            r,
        } => {
            let (field, chi, r) = parse_triple(field, character, r, &ctx)?;
            let res = closure::compute_closure(&field, &chi, &r, &ctx.config, &ctx.primes)?;
            let mut v = serde_json::to_value(res.to_json()).expect("json");
            let detailed: Vec<Value> = res
                .union
                .intervals
                .iter()
                .map(|iv| {
                    json!({
                        "lo": iv.lo.to_json(),
                        "hi": iv.hi.to_json(),
                    })
                })
                .collect();
            v["interval_enclosures"] = Value::Array(detailed);
            ctx.emit("closure", v)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Scan { r, i_from, i_to } => {
            let r = parse_rational(r)?;
            let fctx = closure::formula_context(&r, &ctx.config, &ctx.primes)?;
            let from = i_from.unwrap_or(fctx.min_scan_index);
            let to = i_to.unwrap_or(from + 5);
            if from < fctx.min_scan_index {
                return Err(Error::InvalidInput(format!(
                    "scan start {from} below the least admissible index {}",
                    fctx.min_scan_index
                )));
            }
            let mut rows = Vec::new();
            let mut prev: Option<u64> = None;
            for i in from..=to {
                let m = closure::scan_modulus(i, fctx.retained_index, &ctx.primes)?;
                let formula = closure::formula_count(&r, i, &fctx, &ctx.config, &ctx.primes)?;
                let m_u128 = m
                    .to_u128()
                    .ok_or_else(|| Error::InvalidInput("scan modulus exceeds u128".into()))?;
                let chi = DirichletCharacter::principal(m_u128);
                let alg = closure::compute_closure(
                    &FieldSpec::Rational,
                    &chi,
                    &r,
                    &ctx.config,
                    &ctx.primes,
                )?;
                let step = prev.map(|p| formula as i64 - p as i64);
                if let Some(st) = step {
                    if !(0..=1).contains(&st) {
                        return Err(Error::InvalidInput(format!(
                            "scan step {st} outside {{0, 1}} at i = {i}"
                        )));
                    }
                }
                prev = Some(formula);
                rows.push(json!({
                    "i": i,
                    "modulus": m.to_string(),
                    "formula_count": formula,
                    "algorithm_count": alg.count,
                    "step": step,
                }));
            }
            ctx.emit(
                "scan",
                json!({
                    "r": r.to_string(),
                    "base_index_trivial": fctx.base_index_trivial,
                    "retained_index": fctx.retained_index,
                    "min_scan_index": fctx.min_scan_index,
                    "rows": rows,
                }),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::LowerBound {
            kind,
            r,
            modulus,
            field,
            epsilon,
        } => {
            let r = parse_rational(r)?;
            match kind.as_str() {
                "pi" => {
                    let m: BigUint = modulus
                        .parse()
                        .map_err(|_| Error::InvalidInput(format!("bad modulus {modulus:?}")))?;
                    let bound = bounds::power_of_two_lower_bound(&r, &m, &ctx.primes)?;
                    ctx.emit(
                        "lower-bound",
                        json!({
                            "bound": bound.to_string(),
                            "kind": "pi",
                            "parameters": {"r": r.to_string(), "modulus": m.to_string()},
                            "certified": true,
                        }),
                    )?;
                }
                "partition" => {
                    let field = parse_field(&field.field, &ctx)?;
                    let eps = parse_rational(epsilon)?;
                    let (bound, depth) = bounds::partition_lower_bound(
                        &field,
                        &r,
                        &eps,
                        &ctx.config.precision,
                        &ctx.primes,
                    )?;
                    ctx.emit(
                        "lower-bound",
                        json!({
                            "bound": bound.to_string(),
                            "kind": "partition",
                            "parameters": {
                                "r": r.to_string(),
                                "epsilon": eps.to_string(),
                                "depth": depth.h,
                                "depth_formula": depth.h_formula,
                                "depth_scan": depth.h_scan,
                                "eta": depth.eta.to_json(),
                            },
                            "certified": true,
                        }),
                    )?;
                }
                other => {
                    return Err(Error::InvalidInput(format!(
                        "unknown bound kind {other:?} (expected pi or partition)"
                    )))
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Mighty { field, r, d } => {
            let field = parse_field(&field.field, &ctx)?;
            let r = parse_rational(r)?;
            let cert = mighty::is_mighty(&field, &r, *d, &ctx.config, &ctx.primes)?;
            ctx.emit(
                "mighty",
                serde_json::to_value(cert.to_json()).expect("json"),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::ConstructField {
            s,
            split,
            inert,
            eisenstein,
        } => {
            let c = construct::construct_field(*s, split, inert, *eisenstein, 0, &ctx.primes)?;
            println!("f(x) = {}", construct::display_poly(&c.poly));
            ctx.emit(
                "construct-field",
                serde_json::to_value(c.to_json()).expect("json"),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Realize { r, s, m, mode } => {
            let r = parse_rational(r)?;
            let mode = match mode.as_deref() {
                None => None,
                Some("strict") => Some(SequenceMode::Strict),
                Some("desk") => Some(SequenceMode::DeskBudget),
                Some(other) => {
                    return Err(Error::InvalidInput(format!(
                        "unknown mode {other:?} (expected strict or desk)"
                    )))
                }
            };
            let options = RealizeOptions {
                mode,
                ..RealizeOptions::default()
            };
            let real =
                construct::realize_components(&r, *s, *m, &options, &ctx.config, &ctx.primes)?;
            println!("f(x) = {}", construct::display_poly(&real.construction.poly));
            let certs: Vec<Value> = real
                .certificates
                .iter()
                .map(|c| serde_json::to_value(c.to_json()).expect("json"))
                .collect();
            ctx.emit(
                "realize",
                json!({
                    "construction": serde_json::to_value(real.construction.to_json()).expect("json"),
                    "sequence": {
                        "primes": real.sequence.primes_chosen,
                        "horizon": real.sequence.horizon,
                        "mode": format!("{:?}", real.sequence.mode),
                        "conditions": serde_json::to_value(&real.sequence.condition_log).expect("json"),
                    },
                    "certificates": certs,
                    "component_lower_bound": real.component_lower_bound,
                    "fallback_used": real.fallback_used,
                }),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sample {
            field,
            character,
            r,
            max_norm,
            csv,
        } => {
            let (field, chi, r) = parse_triple(field, character, r, &ctx)?;
            let set = oracle::sample_image(&field, &chi, &r, *max_norm, &ctx.primes)?;
            if let Some(path) = csv {
                let mut f = std::fs::File::create(path)?;
                oracle::write_csv(&set, &mut f)?;
            }
            ctx.emit(
                "sample",
                json!({
                    "max_norm": set.max_norm,
                    "count": set.samples.len(),
                    "csv": csv.as_ref().map(|p| p.display().to_string()),
                }),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Figure {
            field,
            character,
            r,
            max_norm,
            svg,
            csv,
        } => {
            let (field, chi, r) = parse_triple(field, character, r, &ctx)?;
            let set = oracle::sample_image(&field, &chi, &r, *max_norm, &ctx.primes)?;
            let mut f = std::fs::File::create(svg)?;
            oracle::write_svg(&set, &mut f)?;
            if let Some(path) = csv {
                let mut f = std::fs::File::create(path)?;
                oracle::write_csv(&set, &mut f)?;
            }
            ctx.emit(
                "figure",
                json!({
                    "max_norm": set.max_norm,
                    "count": set.samples.len(),
                    "svg": svg.display().to_string(),
                }),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            field,
            character,
            r,
            max_norm,
        } => {
            let (field, chi, r) = parse_triple(field, character, r, &ctx)?;
            let res = closure::compute_closure(&field, &chi, &r, &ctx.config, &ctx.primes)?;
            let set = oracle::sample_image(&field, &chi, &r, *max_norm, &ctx.primes)?;
            let report = oracle::verify_against_closure(&set, &res)?;
            let pass = report.is_pass();
            ctx.emit(
                "verify",
                json!({
                    "count": res.count,
                    "samples": report.total_samples,
                    "containment_failures": report.containment_failures,
                    "interval_hits": report.interval_hits,
                    "class_consistent": report.class_consistent,
                    "pass": pass,
                }),
            )?;
            if pass {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::FAILURE)
            }
        }
    }
}

fn parse_triple(
    field: &FieldArg,
    character: &CharArg,
    r: &str,
    ctx: &Ctx,
) -> Result<(FieldSpec, DirichletCharacter, BigRational)> {
    Ok((
        parse_field(&field.field, ctx)?,
        parse_character(&character.character)?,
        parse_rational(r)?,
    ))
}

fn parse_field(spec: &str, ctx: &Ctx) -> Result<FieldSpec> {
    let spec = spec.trim();
    let desc: FieldDescriptor = if let Some(path) = spec.strip_prefix('@') {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("bad field file: {e}")))?
    } else if spec.starts_with('{') {
        serde_json::from_str(spec)
            .map_err(|e| Error::InvalidInput(format!("bad field JSON: {e}")))?
    } else if spec == "rational" {
        FieldDescriptor::Rational
    } else if let Some(d) = spec.strip_prefix("quadratic:") {
        FieldDescriptor::Quadratic {
            d: d
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad quadratic d {d:?}")))?,
        }
    } else if let Some(m) = spec.strip_prefix("cyclotomic:") {
        FieldDescriptor::Cyclotomic {
            m: m
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad cyclotomic m {m:?}")))?,
        }
    } else {
        return Err(Error::InvalidInput(format!(
            "unrecognized field {spec:?} (rational | quadratic:D | cyclotomic:M | JSON | @file)"
        )));
    };
    FieldSpec::from_descriptor(&desc, &ctx.primes)
}

fn parse_character(spec: &str) -> Result<DirichletCharacter> {
    let spec = spec.trim();
    let desc: CharacterDescriptor = if let Some(path) = spec.strip_prefix('@') {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("bad character file: {e}")))?
    } else if spec.starts_with('{') {
        serde_json::from_str(spec)
            .map_err(|e| Error::InvalidInput(format!("bad character JSON: {e}")))?
    } else if let Some(m) = spec.strip_prefix("principal:") {
        CharacterDescriptor::Principal {
            modulus: m.to_string(),
        }
    } else if let Some(d) = spec.strip_prefix("kronecker:") {
        CharacterDescriptor::Kronecker {
            d: d
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad kronecker d {d:?}")))?,
        }
    } else {
        return Err(Error::InvalidInput(format!(
            "unrecognized character {spec:?} (principal:M | kronecker:D | JSON | @file)"
        )));
    };
    DirichletCharacter::from_descriptor(&desc)
}
