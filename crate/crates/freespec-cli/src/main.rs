use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use freespec::ball_classifier::{build_envelope, classify_free_circular, EnvelopeOptions};
use freespec::circular_classifier::classify_circular;
use freespec::freepoly::{eval_poly, invariance_test, FreeMatrixPolynomial};
use freespec::generate::{boundary_point, generate, GeneratorSpec};
use freespec::inclusion_sdp::{includes_with, InclusionOptions, InclusionStatus};
use freespec::io::matrix_to_repr;
use freespec::pencil_core::{eval_homogeneous, eval_monic, membership};
use freespec::separation::{separate_with, DetailedBoundaryPoint, SeparationOptions};
use freespec::tuple_algebra::{irreducible_blocks, minimize_pencil_seeded};
use freespec::{Error, MatrixTuple, Tolerance};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "freespec",
    version,
    about = "Free spectrahedra workbench: pencils, inclusion, circularity, separation"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Absolute tolerance; the relative tolerance is 100 times larger.
    #[arg(long, global = true, env = "FREESPEC_TOL")]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte-Carlo audit size.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Main input file (pencil, polynomial or generator spec); `-` or absent reads stdin.
    #[arg(short = 'i', long = "input", visible_alias = "pencil", global = true)]
    input: Option<PathBuf>,
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate L_A(X) and Λ_A(X).
    Eval(PointArg),
    /// Membership of a point in D_A.
    Member(PointArg),
    /// Random detailed boundary point at a level.
    BoundaryPoint {
        #[arg(long, default_value_t = 1)]
        level: usize,
    },
    /// Decomposition into irreducible summands.
    Blocks,
    /// Minimal defining pencil.
    Minimize,
    /// Decide D_A ⊆ D_B for the input A.
    Include {
        /// The candidate superset pencil B.
        #[arg(long)]
        target: PathBuf,
    },
    /// Circularity verdict with grading data.
    Circular,
    /// Block superdiagonal canonical form of a circular pencil.
    CanonicalForm,
    /// Free-circularity verdict with the pencil-ball form.
    FreeCircular,
    /// Envelope of separating pencils for a free-circular pencil.
    Envelope {
        #[arg(long)]
        level: Option<usize>,
    },
    /// Separation certificate at a detailed boundary point.
    Separate(PointArg),
    /// Evaluate a polynomial at a point.
    PolyEval(PointArg),
    /// Coordinate-unitary invariance test.
    PolyInvariant,
    /// Direct-sum decomposition of an invariant polynomial.
    PolyDecompose,
    /// Seeded instance generator; the input is a JSON generator spec.
    Gen {
        /// Inline generator spec instead of an input file.
        #[arg(long)]
        spec: Option<String>,
    },
}

#[derive(Args)]
struct PointArg {
    #[arg(long)]
    point: PathBuf,
}

enum Failure {
    Input(String),
    Indeterminate(Value),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::DimensionMismatch(_)
            | Error::NonFinite(_)
            | Error::InvalidInput(_)
            | Error::NotBoundary(_)
            | Error::NotMonic(_)
            | Error::TooLarge(_)
            | Error::Unbounded(_) => Failure::Input(e.to_string()),
            Error::Indeterminate(_)
            | Error::IterationLimit(_)
            | Error::AmbiguousLevels(_)
            | Error::RankAmbiguity(_)
            | Error::DegenerateSplit(_) => {
                Failure::Indeterminate(json!({ "indeterminate": e.to_string() }))
            }
            _ => Failure::Other(e.to_string()),
        }
    }
}

type Outcome = Result<(Value, bool), Failure>;

fn read_text(path: Option<&Path>) -> Result<String, Failure> {
    let mut text = String::new();
    match path {
        Some(p) if p != Path::new("-") => {
            text = std::fs::read_to_string(p)
                .map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
        }
        _ => {
            std::io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| Failure::Input(format!("stdin: {e}")))?;
        }
    }
    Ok(text)
}

fn parse<T: DeserializeOwned>(text: &str, what: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Input(format!("malformed {what} JSON: {e}")))
}

fn load<T: DeserializeOwned>(path: Option<&Path>, what: &str) -> Result<T, Failure> {
    parse(&read_text(path)?, what)
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::Other(e.to_string()))
}

fn run(cli: &Cli) -> Outcome {
    let c = &cli.common;
    let tol = match c.tol {
        Some(t) => Tolerance::from_abs(t)?,
        None => Tolerance::default(),
    };
    let seed = c.seed.unwrap_or(0);
    let input = c.input.as_deref();
    match &cli.command {
        Command::Eval(p) => {
            let a: MatrixTuple = load(input, "pencil")?;
            let x: MatrixTuple = load(Some(&p.point), "point")?;
            Ok((
                json!({
                    "monic": matrix_to_repr(&eval_monic(&a, &x)?),
                    "homogeneous": matrix_to_repr(&eval_homogeneous(&a, &x)?),
                }),
                false,
            ))
        }
        Command::Member(p) => {
            let a: MatrixTuple = load(input, "pencil")?;
            let x: MatrixTuple = load(Some(&p.point), "point")?;
            Ok((to_value(&membership(&a, &x, &tol)?)?, false))
        }
        Command::BoundaryPoint { level } => {
            let a: MatrixTuple = load(input, "pencil")?;
            Ok((to_value(&boundary_point(&a, *level, seed)?)?, false))
        }
        Command::Blocks => {
            let a: MatrixTuple = load(input, "pencil")?;
            Ok((to_value(&irreducible_blocks(&a, &tol, seed)?)?, false))
        }
        Command::Minimize => {
            let a: MatrixTuple = load(input, "pencil")?;
            let cert = minimize_pencil_seeded(&a, &tol, seed)?;
            Ok((to_value(&cert)?, cert.indeterminate))
        }
        Command::Include { target } => {
            let a: MatrixTuple = load(input, "pencil")?;
            let b: MatrixTuple = load(Some(target), "target pencil")?;
            let opts = InclusionOptions {
                seed,
                ..InclusionOptions::default()
            };
            let v = includes_with(&a, &b, &tol, &opts)?;
            let undecided = v.status == InclusionStatus::Indeterminate;
            Ok((to_value(&v)?, undecided))
        }
        Command::Circular => {
            let a: MatrixTuple = load(input, "pencil")?;
            let r = classify_circular(&a, &tol)?;
            let mut out = json!({
                "circular": r.circular,
                "block_sizes": r.form.as_ref().map(|f| f.block_sizes.clone()),
            });
            if let Some(g) = &r.grading {
                out["K_levels"] = to_value(&g.levels)?;
                out["residual"] = json!(g.residual);
                out["basis"] = to_value(&matrix_to_repr(&g.basis))?;
            }
            let undecided = !r.circular && r.minimality.indeterminate;
            Ok((out, undecided))
        }
        Command::CanonicalForm => {
            let a: MatrixTuple = load(input, "pencil")?;
            let r = classify_circular(&a, &tol)?;
            match r.form {
                Some(form) => Ok((to_value(&form)?, false)),
                None => Err(Failure::Input(
                    "pencil is not circular; no canonical form".into(),
                )),
            }
        }
        Command::FreeCircular => {
            let a: MatrixTuple = load(input, "pencil")?;
            let r = classify_free_circular(&a, &tol)?;
            let undecided = !r.free_circular && r.minimality.indeterminate;
            Ok((to_value(&r)?, undecided))
        }
        Command::Envelope { level } => {
            let a: MatrixTuple = load(input, "pencil")?;
            let r = classify_free_circular(&a, &tol)?;
            let m = &r.minimality.minimal_tuple;
            let form = r.form.ok_or_else(|| {
                Failure::Input("pencil is not free circular (or degenerate); no envelope".into())
            })?;
            let mut opts = EnvelopeOptions {
                seed,
                level: *level,
                ..EnvelopeOptions::default()
            };
            if let Some(s) = c.samples {
                opts.samples = s;
            }
            Ok((to_value(&build_envelope(m, &form, &tol, &opts)?)?, false))
        }
        Command::Separate(p) => {
            let a: MatrixTuple = load(input, "pencil")?;
            let pt: DetailedBoundaryPoint = load(Some(&p.point), "boundary point")?;
            let mut opts = SeparationOptions {
                seed,
                ..SeparationOptions::default()
            };
            if let Some(s) = c.samples {
                opts.samples = s;
            }
            Ok((to_value(&separate_with(&a, &pt, &tol, &opts)?)?, false))
        }
        Command::PolyEval(p) => {
            let poly: FreeMatrixPolynomial = load(input, "polynomial")?;
            let x: MatrixTuple = load(Some(&p.point), "point")?;
            Ok((to_value(&matrix_to_repr(&eval_poly(&poly, &x)?))?, false))
        }
        Command::PolyInvariant => {
            let poly: FreeMatrixPolynomial = load(input, "polynomial")?;
            Ok((to_value(&invariance_test(&poly, &tol, seed)?)?, false))
        }
        Command::PolyDecompose => {
            let poly: FreeMatrixPolynomial = load(input, "polynomial")?;
            let v = invariance_test(&poly, &tol, seed)?;
            match v.decomposition {
                Some(d) => Ok((to_value(&d)?, false)),
                None => Err(Failure::Input(format!(
                    "polynomial is not coordinate-unitary invariant: {}",
                    serde_json::to_string(&v.witness).unwrap_or_default()
                ))),
            }
        }
        Command::Gen { spec } => {
            let seed = c
                .seed
                .ok_or_else(|| Failure::Input("--seed is required for gen".into()))?;
            let text = match spec {
                Some(s) => s.clone(),
                None => read_text(input)?,
            };
            let spec: GeneratorSpec = parse(&text, "generator spec")?;
            Ok((to_value(&generate(&spec, seed)?)?, false))
        }
    }
}

fn emit(value: &Value, output: Option<&Path>) -> Result<(), String> {
    let mut text = serde_json::to_string(value).map_err(|e| e.to_string())?;
    text.push('\n');
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = cli.common.output.as_deref();
    let (value, code) = match run(&cli) {
        Ok((v, false)) => (Some(v), 0),
        Ok((v, true)) => (Some(v), 2),
        Err(Failure::Indeterminate(v)) => (Some(v), 2),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            (None, 3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            (None, 1)
        }
    };
    if let Some(v) = value {
        if let Err(e) = emit(&v, output) {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    ExitCode::from(code)
}
