use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde_json::{json, Value};

use orbifold_arith::brauer::{adelic_obstruction, invariant_at_point, invariant_profile, ObstructionConfig, ProfileMode, ProfileOptions};
use orbifold_arith::census::{count_lower_bound, growth_table, CensusOptions};
use orbifold_arith::localfields::{hilbert_symbol, zp_points_with_units, Place};
use orbifold_arith::model_io::{load_model, ModelFile, SCHEMA_VERSION};
use orbifold_arith::orbifold::{classify_global, classify_local, normalize_point, search_points, PointFlag, Weight};
use orbifold_arith::{registry, Error, Result};

#[derive(Parser)]
#[command(name = "orbifold-arith", version, about = "Integral, Darmon and Campana points on orbifold models; Brauer-Manin checks")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Indented output (still JSON).
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Integral,
    Darmon,
    Campana,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlagArg {
    Any,
    Integral,
    Darmon,
    Campana,
    WeakCampana,
}

impl From<FlagArg> for PointFlag {
    fn from(f: FlagArg) -> PointFlag {
        match f {
            FlagArg::Any => PointFlag::Any,
            FlagArg::Integral => PointFlag::Integral,
            FlagArg::Darmon => PointFlag::Darmon,
            FlagArg::Campana => PointFlag::Campana,
            FlagArg::WeakCampana => PointFlag::WeakCampana,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classify a point, globally or at one prime.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        prime: Option<u64>,
        /// Replace every divisor weight.
        #[arg(long)]
        weight: Option<u64>,
        #[arg(required = true, allow_hyphen_values = true)]
        point: Vec<BigInt>,
    },
    /// Points of bounded height carrying a flag.
    Search {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        height: u64,
        #[arg(long, value_enum, default_value = "any")]
        flag: FlagArg,
        #[arg(long)]
        weight: Option<u64>,
    },
    /// Hilbert symbol (a, b) at a place ("real" or a prime).
    Hilbert {
        #[arg(allow_hyphen_values = true)]
        a: String,
        #[arg(allow_hyphen_values = true)]
        b: String,
        place: Place,
    },
    /// p-adic integral points on the model's first equation.
    SolveLocal {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        prime: u64,
        #[arg(long, default_value_t = 12)]
        depth: u32,
        /// Require the divisor forms to be units.
        #[arg(long)]
        off_divisor: bool,
    },
    /// Invariant profile at a place, or the invariant at one rational point.
    Invariant {
        #[arg(long)]
        model: PathBuf,
        /// "real" or a prime.
        #[arg(long)]
        prime: Place,
        #[arg(long, value_enum, default_value = "integral")]
        mode: ModeArg,
        #[arg(long)]
        weight: Option<u64>,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(allow_hyphen_values = true)]
        point: Vec<BigInt>,
    },
    /// Adelic Brauer-Manin obstruction report.
    Obstruct {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "integral")]
        mode: ModeArg,
        #[arg(long)]
        weight: Option<u64>,
        #[arg(long)]
        depth: Option<u32>,
    },
    /// Count family members up to a bound, or tabulate growth.
    Census {
        #[arg(long, required_unless_present = "growth")]
        bound: Option<u64>,
        /// Comma-separated ascending bounds; emits a growth table.
        #[arg(long, value_delimiter = ',', conflicts_with = "bound")]
        growth: Option<Vec<u64>>,
        /// Growth table as CSV instead of JSON.
        #[arg(long, requires = "growth")]
        csv: bool,
        #[arg(long, default_value_t = 1e-3)]
        verify_fraction: f64,
        #[arg(long, default_value_t = 25)]
        min_sample: usize,
        /// Height bound of the brute-force integral point search per sampled member.
        #[arg(long, default_value_t = 200)]
        height: u64,
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Check the built-in example registry.
    PaperVerify {
        #[arg(default_value = "all")]
        id: String,
    },
}

fn mode(m: ModeArg, weight: Option<u64>) -> Result<ProfileMode> {
    let name = match m {
        ModeArg::Integral => "integral",
        ModeArg::Darmon => "darmon",
        ModeArg::Campana => "campana",
    };
    ProfileMode::new(name, weight)
}

fn load(path: &Path, weight: Option<u64>) -> Result<ModelFile> {
    let mut file = load_model(path)?;
    if let Some(m) = weight {
        file.model = file.model.with_weight(Weight::new(m)?);
    }
    Ok(file)
}

fn rational(s: &str) -> Result<num_rational::BigRational> {
    s.parse().map_err(|_| Error::Parse(format!("bad rational {s:?}")))
}

fn profile_options(depth: Option<u32>, seed: u64) -> ProfileOptions {
    ProfileOptions { max_depth: depth, seed, ..ProfileOptions::default() }
}

/// Returns the JSON result and whether every expectation held.
fn run(cli: &Cli) -> Result<(Value, bool)> {
    let ok = |v: Value| Ok((v, true));
    match &cli.command {
        Command::Classify { model, prime, weight, point } => {
            let file = load(model, *weight)?;
            let pt = normalize_point(point)?;
            match prime {
                Some(p) => ok(json!(classify_local(&pt, &file.model, *p)?)),
                None => ok(json!(classify_global(&pt, &file.model)?)),
            }
        }
        Command::Search { model, height, flag, weight } => {
            let file = load(model, *weight)?;
            let pts = search_points(&file.model, *height, (*flag).into(), &[])?;
            ok(json!({ "height": height, "count": pts.len(), "points": pts }))
        }
        Command::Hilbert { a, b, place } => {
            let s = hilbert_symbol(&rational(a)?, &rational(b)?, *place)?;
            ok(json!({ "a": a, "b": b, "place": place, "symbol": s }))
        }
        Command::SolveLocal { model, prime, depth, off_divisor } => {
            let file = load(model, None)?;
            let f = file.model.equations().first().ok_or_else(|| Error::InvalidModel("model has no equation".into()))?;
            let units: Vec<_> = if *off_divisor {
                file.model.divisor().iter().filter(|c| c.weight.in_support()).map(|c| c.form.clone()).collect()
            } else {
                vec![]
            };
            ok(json!({ "prime": prime, "verdict": zp_points_with_units(f, &units, *prime, *depth)? }))
        }
        Command::Invariant { model, prime, mode: m, weight, depth, point } => {
            let file = load(model, None)?;
            let class = file.class.as_ref().ok_or_else(|| Error::InvalidModel("model file has no class".into()))?;
            if !point.is_empty() {
                let pt = normalize_point(point)?;
                return ok(json!({ "point": pt, "place": prime, "invariant": invariant_at_point(class, &pt, *prime)? }));
            }
            let mode = mode(*m, *weight)?;
            ok(json!(invariant_profile(class, &file.model, *prime, mode, &profile_options(*depth, cli.seed))?))
        }
        Command::Obstruct { model, mode: m, weight, depth } => {
            let file = load(model, None)?;
            let class = file.class.as_ref().ok_or_else(|| Error::InvalidModel("model file has no class".into()))?;
            let cfg = ObstructionConfig { profile: profile_options(*depth, cli.seed), ..ObstructionConfig::default() };
            ok(json!(adelic_obstruction(class, &file.model, mode(*m, *weight)?, &cfg)?))
        }
        Command::Census { bound, growth, csv, verify_fraction, min_sample, height, resume } => {
            if let Some(bounds) = growth {
                let table = growth_table(bounds)?;
                if *csv {
                    let mut out = String::from("bound,count,ratio\n");
                    for r in &table {
                        out.push_str(&format!("{},{},{:.6e}\n", r.bound, r.count, r.ratio));
                    }
                    return ok(Value::String(out));
                }
                return ok(json!({ "growth": table }));
            }
            let options = CensusOptions {
                verify_fraction: *verify_fraction,
                min_sample: *min_sample,
                seed: cli.seed,
                height_bound: Some(*height),
                resume: resume.clone(),
                ..CensusOptions::default()
            };
            ok(json!(count_lower_bound(bound.expect("clap requires bound"), &options)?))
        }
        Command::PaperVerify { id } => {
            let reports = registry::verify(id)?;
            let all = reports.iter().all(|r| r.passed);
            Ok((json!({ "passed": all, "cases": reports }), all))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ORBIFOLD_ARITH_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match run(&cli) {
        Ok((Value::String(csv), _)) => {
            print!("{csv}");
            ExitCode::SUCCESS
        }
        Ok((result, passed)) => {
            let out = json!({ "schema": SCHEMA_VERSION, "result": result });
            let text = if cli.pretty { serde_json::to_string_pretty(&out) } else { serde_json::to_string(&out) };
            println!("{}", text.expect("JSON values serialize"));
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(5)
            }
        }
        Err(e) => {
            let out = json!({ "schema": SCHEMA_VERSION, "error": { "message": e.to_string(), "exit_code": e.exit_code() } });
            eprintln!("{out}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
