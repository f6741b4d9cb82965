//! `bmo`: generate dyadic grid functions and run the BMO verifications.
//!
//! Exit status: 0 on success, 1 on input or usage errors, 2 when a
//! verification ran but found a violated inequality.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use bmo_core::integrability::{admissible_limit, sweep_to_csv};
use bmo_core::{
    bmo_seminorm, check_features, containment_check, decompose, duality_report, exp_sweep, pair,
    verify_jn, AtomicSum, ContainmentReport, DualityReport, DyadicCube, ExpIntegralReport,
    FeatureReport, GeneratorKind, GridFunction, GridShape, JnReport, RootCube, DEFAULT_THETA,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "bmo",
    version,
    about = "Dyadic BMO seminorm, stopping-time decomposition and John-Nirenberg checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a grid function
    Gen(GenArgs),
    /// Dyadic BMO seminorm of a grid function
    Norm(NormArgs),
    /// Stopping-time decomposition and its feature checks
    Decompose(DecomposeArgs),
    /// John-Nirenberg distribution inequality sweep
    Jn(JnArgs),
    /// Exponential integrability sweep
    Expint(ExpintArgs),
    /// Pairing with H1 atoms and the duality bound
    Duality(DualityArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Output {
    /// Output file; standard output when omitted
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct CubeArgs {
    /// Level of the cube to analyse (default: the root)
    #[arg(long, default_value_t = 0)]
    level: u32,
    /// Comma-separated cube index, one entry per axis
    #[arg(long, value_delimiter = ',')]
    index: Option<Vec<u64>>,
}

impl CubeArgs {
    fn cube(&self, dimension: usize) -> Result<DyadicCube> {
        let index = self.index.clone().unwrap_or_else(|| vec![0; dimension]);
        if index.len() != dimension {
            bail!(
                "--index has {} entries, the grid has {dimension} axes",
                index.len()
            );
        }
        Ok(DyadicCube::new(self.level, index)?)
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    levels: u32,
    /// Generator parameter as key=value; repeatable
    #[arg(long = "param")]
    params: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct NormArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THETA)]
    theta: f64,
    /// Number of generations to select
    #[arg(long, default_value_t = 5)]
    generations: usize,
    #[command(flatten)]
    cube: CubeArgs,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct JnArgs {
    #[arg(long)]
    input: PathBuf,
    /// Largest threshold of the sweep (default: 10 times the seminorm)
    #[arg(long)]
    alpha_max: Option<f64>,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = DEFAULT_THETA)]
    theta: f64,
    /// Generations used for the level-set containment checks
    #[arg(long, default_value_t = 5)]
    generations: usize,
    #[command(flatten)]
    cube: CubeArgs,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct ExpintArgs {
    #[arg(long)]
    input: PathBuf,
    /// Largest zeta of the sweep (default: 0.95 / (2^n e))
    #[arg(long)]
    zeta_max: Option<f64>,
    #[arg(long, default_value_t = 20)]
    steps: usize,
    #[command(flatten)]
    cube: CubeArgs,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct DualityArgs {
    #[arg(long)]
    input: PathBuf,
    /// Atomic sum file
    #[arg(long, conflicts_with = "random_atoms")]
    atoms: Option<PathBuf>,
    /// Draw this many random Haar atoms instead of reading a file
    #[arg(long)]
    random_atoms: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: Output,
}

/// What a command produced and whether its inequalities held.
struct Outcome {
    text: String,
    violated: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (outcome, out) = match run(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = emit(&outcome.text, out) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    ExitCode::from(status(&outcome))
}

/// 2 when a verification found a violated inequality, 0 otherwise.
fn status(outcome: &Outcome) -> u8 {
    if outcome.violated {
        2
    } else {
        0
    }
}

fn run(command: &Command) -> Result<(Outcome, &Output)> {
    match command {
        Command::Gen(a) => Ok((gen(a)?, &a.out)),
        Command::Norm(a) => Ok((norm(a)?, &a.out)),
        Command::Decompose(a) => Ok((decompose_cmd(a)?, &a.out)),
        Command::Jn(a) => Ok((jn(a)?, &a.out)),
        Command::Expint(a) => Ok((expint(a)?, &a.out)),
        Command::Duality(a) => Ok((duality(a)?, &a.out)),
    }
}

/// Writes to a temporary file next to the target and renames it in place.
fn emit(text: &str, out: &Output) -> Result<()> {
    match &out.output {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .with_context(|| format!("cannot create a file in {}", dir.display()))?;
            tmp.write_all(text.as_bytes())?;
            tmp.persist(path)
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
    }
    Ok(())
}

fn load(path: &Path) -> Result<GridFunction> {
    GridFunction::load(path)
        .with_context(|| format!("cannot read grid function {}", path.display()))
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn json_only(out: &Output, command: &str) -> Result<()> {
    if out.format == Format::Csv {
        bail!("`{command}` has no CSV output");
    }
    Ok(())
}

fn parse_params(raw: &[String]) -> Result<BTreeMap<String, f64>> {
    raw.iter()
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| anyhow!("parameter `{p}` is not of the form key=value"))?;
            let v: f64 = v
                .parse()
                .with_context(|| format!("parameter `{k}` has a non-numeric value `{v}`"))?;
            Ok((k.to_string(), v))
        })
        .collect()
}

fn gen(a: &GenArgs) -> Result<Outcome> {
    let kind: GeneratorKind = a.kind.parse()?;
    if a.n == 0 {
        bail!("--n must be at least 1");
    }
    let shape = GridShape::new(RootCube::unit(a.n), a.levels)?;
    let f = GridFunction::generate(kind, shape, &parse_params(&a.params)?, a.seed)?;
    let text = match a.out.format {
        Format::Json => {
            let mut t = f.to_json_string();
            t.push('\n');
            t
        }
        Format::Csv => f.to_csv_string()?,
    };
    Ok(Outcome {
        text,
        violated: false,
    })
}

#[derive(Serialize)]
struct NormReport {
    bmo_norm: f64,
    argmax_cube: DyadicCube,
    reference: &'static str,
}

fn norm(a: &NormArgs) -> Result<Outcome> {
    json_only(&a.out, "norm")?;
    let f = load(&a.input)?;
    let n = bmo_seminorm(&f);
    Ok(Outcome {
        text: json(&NormReport {
            bmo_norm: n.value,
            argmax_cube: n.argmax_cube,
            reference: "dyadic BMO seminorm: supremum of mean oscillation over dyadic cubes",
        })?,
        violated: false,
    })
}

#[derive(Serialize)]
struct DecomposeReport {
    reference: &'static str,
    root: DyadicCube,
    max_generation: usize,
    truncated_at_level: bool,
    #[serde(flatten)]
    decomposition: bmo_core::Decomposition,
    features: FeatureReport,
    passed: bool,
}

fn decompose_cmd(a: &DecomposeArgs) -> Result<Outcome> {
    json_only(&a.out, "decompose")?;
    let f = load(&a.input)?;
    let root = a.cube.cube(f.dimension())?;
    let d = decompose(&f, &root, a.theta, a.generations)?;
    let features = check_features(&f, &d)?;
    let passed = features.passed();
    let report = DecomposeReport {
        reference: "stopping-time decomposition: complement, average-jump, selection-window, \
                    measure-decay and telescoped bounds",
        root,
        max_generation: d.max_generation(),
        truncated_at_level: d.truncated_at_level,
        decomposition: d,
        features,
        passed,
    };
    Ok(Outcome {
        text: json(&report)?,
        violated: !passed,
    })
}

#[derive(Serialize)]
struct JnCommandReport {
    reference: &'static str,
    #[serde(flatten)]
    report: JnReport,
    theta: f64,
    containment: Vec<ContainmentReport>,
    passed: bool,
}

fn jn(a: &JnArgs) -> Result<Outcome> {
    let f = load(&a.input)?;
    let cube = a.cube.cube(f.dimension())?;
    let norm = bmo_core::oscillation::nonzero_seminorm(&f)?.value;
    let alpha_max = a.alpha_max.unwrap_or(10.0 * norm);
    let report = verify_jn(&f, &cube, alpha_max, a.steps)?;
    let d = decompose(&f, &cube, a.theta, a.generations)?;
    let containment = (1..=d.max_generation())
        .map(|l| containment_check(&f, &d, l))
        .collect::<bmo_core::Result<Vec<_>>>()?;
    let passed = report.dominated && containment.iter().all(|c| c.passed);
    let text = match a.out.format {
        Format::Csv => report.to_csv_string(),
        Format::Json => json(&JnCommandReport {
            reference: "John-Nirenberg distribution inequality with level-set containment",
            report,
            theta: a.theta,
            containment,
            passed,
        })?,
    };
    Ok(Outcome {
        text,
        violated: !passed,
    })
}

#[derive(Serialize)]
struct ExpintReport {
    reference: &'static str,
    cube: DyadicCube,
    norm: f64,
    rows: Vec<ExpIntegralReport>,
    dominated: bool,
}

fn expint(a: &ExpintArgs) -> Result<Outcome> {
    let f = load(&a.input)?;
    let cube = a.cube.cube(f.dimension())?;
    let zeta_max = a.zeta_max.unwrap_or(0.95 * admissible_limit(f.dimension()));
    if !(zeta_max > 0.0 && zeta_max.is_finite()) {
        bail!("--zeta-max must be positive, got {zeta_max}");
    }
    if a.steps == 0 {
        bail!("--steps must be at least 1");
    }
    let zetas: Vec<f64> = (1..=a.steps)
        .map(|i| zeta_max * i as f64 / a.steps as f64)
        .collect();
    let rows = exp_sweep(&f, &cube, &zetas)?;
    let dominated = rows.iter().all(ExpIntegralReport::dominated);
    let text = match a.out.format {
        Format::Csv => sweep_to_csv(&rows),
        Format::Json => json(&ExpintReport {
            reference:
                "exponential integrability: layer-cake bound 1 + e q / (1 - q), q = 2^n e zeta",
            cube,
            norm: bmo_seminorm(&f).value,
            rows,
            dominated,
        })?,
    };
    Ok(Outcome {
        text,
        violated: !dominated,
    })
}

#[derive(Serialize)]
struct DualityCommandReport {
    reference: &'static str,
    terms: usize,
    #[serde(flatten)]
    report: DualityReport,
    /// Largest single-atom pairing `|∫ φ τ_j|`.
    max_atom_pairing: f64,
    atoms_within_norm: bool,
}

fn duality(a: &DualityArgs) -> Result<Outcome> {
    json_only(&a.out, "duality")?;
    let f = load(&a.input)?;
    let sum = match (&a.atoms, a.random_atoms) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read atoms {}", path.display()))?;
            AtomicSum::from_json_str(&text, f.shape())?
        }
        (None, Some(count)) => {
            AtomicSum::random_haar(f.shape(), count, &mut ChaCha8Rng::seed_from_u64(a.seed))?
        }
        (None, None) => bail!("one of --atoms or --random-atoms is required"),
    };
    let report = duality_report(&f, &sum)?;
    let max_atom_pairing = sum
        .terms
        .iter()
        .map(|(_, atom)| pair(&f, atom).map(f64::abs))
        .collect::<bmo_core::Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let atoms_within_norm = max_atom_pairing <= report.norm + bmo_core::duality::DUALITY_TOL;
    let violated = !(report.passed && atoms_within_norm);
    Ok(Outcome {
        text: json(&DualityCommandReport {
            reference: "H1-BMO pairing bound |sum k_j <phi, tau_j>| <= sum |k_j| ||phi||_BMO",
            terms: sum.terms.len(),
            report,
            max_atom_pairing,
            atoms_within_norm,
        })?,
        violated,
    })
}
