//! Command-line front end: argument parsing, JSON input and output, and the
//! mapping from library errors to exit codes.

use std::ffi::OsString;
use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fockspace::catalog::{self, ClassicalCoeffs};
use fockspace::codim1::{self, Lambda};
use fockspace::factor::{self, Verdict};
use fockspace::opnorm::{self, FiniteSection};
use fockspace::vncheck;
use fockspace::{Complex64, FockError, FreePoly, TruncatedSeries, Word};

use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_RESOURCE_CAP: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "fock",
    version,
    about = "Computations in the full Fock space and its multiplier algebra"
)]
pub struct Cli {
    #[command(flatten)]
    pub config: Config,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Config {
    /// Truncation degree.
    #[arg(short = 'N', long = "degree", global = true, default_value_t = 12)]
    pub degree: usize,
    /// Numerical tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Input file, or `-` for standard input.
    #[arg(long, global = true, default_value = "-")]
    pub input: String,
    /// Largest finite section (number of columns) a command may build.
    #[arg(long, global = true, default_value_t = opnorm::DEFAULT_COLUMN_CAP)]
    pub max_columns: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lower estimate of the multiplier norm from a finite section.
    Norm {
        /// Grow the section until successive values agree within --tol.
        #[arg(long)]
        estimate: bool,
        /// Also write the section in Matrix Market format, with the word
        /// table next to it as `<path>.words.json`.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Whether left multiplication is an isometry.
    InnerCheck,
    /// Distance from the vacuum to the span of `psi (x) h`, by degree.
    OuterCheck,
    /// Inner-outer factorization.
    Factor,
    /// Invertibility diagnostics and the formal inverse.
    Invert,
    /// Inner quotient `phi3` with `input = by (x) phi3`.
    Divide {
        #[arg(long)]
        by: PathBuf,
    },
    /// Wandering subspace of the invariant subspace generated by a JSON
    /// array of polynomials.
    Wandering,
    /// Truncated two-sided Mobius-type inner function.
    Mobius {
        #[arg(long)]
        word: String,
        #[arg(long, allow_hyphen_values = true)]
        mu: String,
        #[arg(long)]
        n: usize,
    },
    /// Truncated eigenvector of the adjoint shifts.
    Zlambda {
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
    },
    /// Commutative image of the input.
    Abelianize,
    /// Membership in the commutator ideal.
    IdealCheck,
    /// Projection onto the codimension-one subspace or its wandering part.
    Project {
        #[arg(long, value_enum)]
        which: Projection,
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
    },
    /// Inner functions spanning the wandering subspace of the codimension-one
    /// subspace.
    WanderingLambda {
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
    },
    /// Whether the two-sided ideal generated by the input misses the
    /// eigenvector at `lambda`.
    MlambdaContains {
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
    },
    /// Sampled operator norms on random boundary row contractions.
    VnTest {
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value = "2,4,8")]
        dims: String,
    },
    /// Named families of inner, outer and invertible elements.
    Catalog(CatalogArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    Q,
    P,
}

#[derive(Args, Debug)]
pub struct CatalogArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Alphabet size, for constructors without an input polynomial.
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated letters.
    #[arg(long)]
    pub word: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub letter: Option<usize>,
    /// Comma-separated classical Taylor coefficients.
    #[arg(long, allow_hyphen_values = true)]
    pub coeffs: Option<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Monomial,
    Homogeneous,
    DistinctFirst,
    RightLetter,
    Inherited,
    Mobius,
    HSeries,
    Exp,
    GeometricInverse,
    #[value(name = "x-k")]
    XK,
    #[value(name = "y-k")]
    YK,
}

#[derive(Debug)]
enum CliError {
    Lib(FockError),
    Usage(String),
    Io(String),
}

impl From<FockError> for CliError {
    fn from(e: FockError) -> Self {
        CliError::Lib(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Lib(FockError::Json(e))
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(FockError::ResourceCap { .. }) => EXIT_RESOURCE_CAP,
            CliError::Lib(_) | CliError::Usage(_) => EXIT_PRECONDITION,
            CliError::Io(_) => EXIT_FAILURE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Runs one command. Returns the process exit code; the result goes to
/// `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(
    args: I,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            // help and version requests are successes and go to stdout
            let _ = if code == 0 {
                write!(stdout, "{e}")
            } else {
                write!(stderr, "{e}")
            };
            return code;
        }
    };
    match execute(&cli, stdin) {
        Ok(value) => {
            let text = serde_json::to_string_pretty(&value).expect("serializable output");
            match writeln!(stdout, "{text}") {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    EXIT_FAILURE
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, stdin: &mut dyn Read) -> CliResult<Value> {
    let cfg = &cli.config;
    if !(cfg.tol > 0.0) {
        return Err(CliError::Usage(format!(
            "--tol must be positive, got {}",
            cfg.tol
        )));
    }
    let mut input = || read_input(&cfg.input, stdin);
    match &cli.command {
        Command::Norm { estimate, export } => {
            let series = parse_series(&input()?)?;
            norm(&series, cfg, *estimate, export.as_ref())
        }
        Command::InnerCheck => {
            let series = parse_series(&input()?)?;
            let check = factor::is_inner(&series, cfg.tol);
            let slack = cfg.tol + check.allowance;
            Ok(json!({
                "verdict": check.verdict,
                "value": check.defect,
                "interval": [(check.defect - check.allowance).max(0.0), check.defect + check.allowance],
                "converged": true,
                "degree": series.trunc_degree,
                "allowance": check.allowance,
                "threshold": slack,
            }))
        }
        Command::OuterCheck => {
            let psi = parse_poly(&input()?)?;
            let profile =
                factor::outer_profile_with_cap(&psi, cfg.degree, cfg.tol, cfg.max_columns)?;
            let dist = *profile.dists.last().expect("nonempty profile");
            Ok(json!({
                "verdict": profile.outer_at_tolerance,
                "value": dist,
                "interval": [0.0, dist],
                "converged": profile.outer_at_tolerance,
                "degree": cfg.degree,
                "dists": profile.dists,
            }))
        }
        Command::Factor => {
            let psi = parse_poly(&input()?)?;
            let result = factor::inner_outer(&psi, cfg.degree)?;
            Ok(json!({
                "inner": result.inner_part,
                "outer": result.outer_part,
                "residual": result.residual,
                "inner_defect": result.inner_defect,
                "degree": result.trunc_degree,
            }))
        }
        Command::Invert => {
            let phi = parse_poly(&input()?)?;
            invert(&phi, cfg)
        }
        Command::Divide { by } => {
            let dividend = parse_series(&input()?)?;
            let divisor = parse_series(&read_file(by)?)?;
            let q = factor::inner_divide(&dividend, &divisor, cfg.degree, cfg.tol)?;
            Ok(serde_json::to_value(q)?)
        }
        Command::Wandering => {
            let text = input()?;
            let generators: Vec<FreePoly> = serde_json::from_str(&text)?;
            if generators.is_empty() {
                return Err(CliError::Usage(
                    "expected a nonempty JSON array of polynomials".into(),
                ));
            }
            let basis = factor::wandering_basis(&generators, cfg.degree)?;
            Ok(json!({
                "generators": basis.generators,
                "degree": basis.trunc_degree,
                "gram_defect": basis.gram_defect,
            }))
        }
        Command::Mobius { word, mu, n } => {
            let f = parse_word(word, *n)?;
            let series = catalog::mobius(*n, &f, parse_complex(mu)?, cfg.degree)?;
            Ok(serde_json::to_value(series)?)
        }
        Command::Zlambda { lambda } => {
            let lam = parse_lambda(lambda)?;
            Ok(serde_json::to_value(codim1::z_lambda(&lam, cfg.degree)?)?)
        }
        Command::Abelianize => {
            let psi = parse_poly(&input()?)?;
            Ok(codim1::abelianize(&psi).to_json())
        }
        Command::IdealCheck => {
            let psi = parse_poly(&input()?)?;
            let ab = codim1::abelianize(&psi);
            Ok(json!({
                "verdict": ab.vanishes(),
                "abelianization": ab.to_json(),
            }))
        }
        Command::Project { which, lambda } => {
            let lam = parse_lambda(lambda)?;
            let psi = parse_poly(&input()?)?;
            let out = match which {
                Projection::Q => codim1::q_lambda(&psi, &lam, cfg.degree)?,
                Projection::P => codim1::p_lambda(&psi, &lam, cfg.degree)?,
            };
            Ok(serde_json::to_value(out)?)
        }
        Command::WanderingLambda { lambda } => {
            let lam = parse_lambda(lambda)?;
            Ok(serde_json::to_value(codim1::wandering_lambda(
                &lam, cfg.degree,
            )?)?)
        }
        Command::MlambdaContains { lambda } => {
            let lam = parse_lambda(lambda)?;
            let series = parse_series(&input()?)?;
            let c = codim1::m_lambda_contains(&series, &lam)?;
            let size = c.pairing.norm();
            Ok(json!({
                "verdict": c.contained,
                "value": size,
                "interval": [(size - c.uncertainty).max(0.0), size + c.uncertainty],
                "converged": series.tail_bound == 0.0,
                "degree": series.trunc_degree,
                "pairing": {"re": c.pairing.re, "im": c.pairing.im},
                "within_uncertainty": c.within_uncertainty,
            }))
        }
        Command::VnTest { samples, dims } => {
            let p = parse_poly(&input()?)?;
            let dims = parse_list::<usize>(dims, "dimension")?;
            let report = vncheck::vn_check(&p, *samples, &dims, cfg.seed)?;
            let bound = if report.homogeneous {
                report.l1_bound.min(report.l2_norm)
            } else {
                report.l1_bound
            };
            let mut value = serde_json::to_value(&report)?;
            let obj = value.as_object_mut().expect("report is an object");
            obj.insert("value".into(), json!(report.max_norm));
            obj.insert("interval".into(), json!([report.max_norm, bound]));
            obj.insert("seed".into(), json!(cfg.seed));
            Ok(value)
        }
        Command::Catalog(args) => catalog_command(args, cfg, input),
    }
}

fn norm(
    series: &TruncatedSeries,
    cfg: &Config,
    estimate: bool,
    export: Option<&PathBuf>,
) -> CliResult<Value> {
    let (est, history) = if estimate {
        let e = opnorm::linf_estimate_with_cap(&series.poly, cfg.tol, cfg.degree, cfg.max_columns)?;
        let mut est = e.estimate;
        est.converged = e.converged;
        (est, Some(e.history))
    } else {
        (
            opnorm::linf_lower_series(series, cfg.degree, cfg.max_columns)?,
            None,
        )
    };
    let (mut lower, mut upper) = (est.lower, est.upper);
    if estimate && series.tail_bound > 0.0 {
        lower = (est.value - series.tail_bound).max(0.0);
        upper = est.value + series.tail_bound;
    }
    if let Some(path) = export {
        let section = FiniteSection::with_cap(&series.poly, est.degree, cfg.max_columns)?;
        let file =
            fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        section
            .write_matrix_market(std::io::BufWriter::new(file))
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut table_path = path.clone().into_os_string();
        table_path.push(".words.json");
        fs::write(&table_path, section.index_table_json().to_string())
            .map_err(|e| CliError::Io(format!("{}: {e}", PathBuf::from(&table_path).display())))?;
    }
    let mut out = json!({
        "value": est.value,
        "interval": [lower, upper],
        "converged": est.converged,
        "degree": est.degree,
    });
    if let Some(h) = history {
        out["history"] = json!(h);
    }
    Ok(out)
}

fn invert(phi: &FreePoly, cfg: &Config) -> CliResult<Value> {
    let report = factor::invertibility_report(phi, cfg.degree, cfg.tol)?;
    let last = report.sigma_min.last();
    let (value, lower, upper) = last.map_or((0.0, 0.0, 0.0), |s| (s.value, s.lower, s.upper));
    Ok(json!({
        "verdict": report.verdict,
        "reasons": report.reasons,
        "value": value,
        "interval": [lower, upper],
        "converged": report.verdict != Verdict::Inconclusive,
        "degree": cfg.degree,
        "outer_dists": report.outer.dists,
        "sigma_min": report.sigma_min,
        "formal_inverse": report.formal_inverse.as_ref().map(|f| json!({
            "inverse": f.inverse,
            "norm_growth": f.norm_growth,
            "growth_rate": f.growth_rate,
            "linf_lower": f.linf_lower,
            "probe_degree": f.probe_degree,
        })),
    }))
}

fn catalog_command(
    args: &CatalogArgs,
    cfg: &Config,
    mut input: impl FnMut() -> CliResult<String>,
) -> CliResult<Value> {
    let need_n = || {
        args.n
            .ok_or_else(|| CliError::Usage("--n is required for this kind".into()))
    };
    let need_word = |n: usize| {
        args.word
            .as_deref()
            .ok_or_else(|| CliError::Usage("--word is required for this kind".into()))
            .and_then(|w| parse_word(w, n))
    };
    let need_mu = || {
        args.mu
            .as_deref()
            .ok_or_else(|| CliError::Usage("--mu is required for this kind".into()))
            .and_then(parse_complex)
    };
    let need_k = || {
        args.k
            .ok_or_else(|| CliError::Usage("--k is required for this kind".into()))
    };
    let series = match args.kind {
        Kind::Monomial => {
            let n = need_n()?;
            TruncatedSeries::exact(catalog::monomial(n, &need_word(n)?))
        }
        Kind::Homogeneous | Kind::DistinctFirst => {
            let p = parse_poly(&input()?)?;
            let terms: Vec<(Word, Complex64)> = p.terms().map(|(w, c)| (w.clone(), *c)).collect();
            let out = if args.kind == Kind::Homogeneous {
                catalog::homogeneous(p.alphabet_size(), &terms)?
            } else {
                catalog::distinct_first_letter(p.alphabet_size(), &terms)?
            };
            TruncatedSeries::exact(out)
        }
        Kind::RightLetter => {
            let p = parse_poly(&input()?)?;
            let letter = args.letter.unwrap_or(p.alphabet_size());
            TruncatedSeries::exact(catalog::right_letter_inner(&p, letter)?)
        }
        Kind::Inherited => {
            let n = need_n()?;
            let coeffs = args
                .coeffs
                .as_deref()
                .ok_or_else(|| CliError::Usage("--coeffs is required for this kind".into()))?;
            let coeffs = coeffs
                .split(',')
                .map(parse_complex)
                .collect::<CliResult<Vec<_>>>()?;
            catalog::inherited(n, &need_word(n)?, &ClassicalCoeffs::new(coeffs), cfg.degree)?
        }
        Kind::Mobius => {
            let n = need_n()?;
            catalog::mobius(n, &need_word(n)?, need_mu()?, cfg.degree)?
        }
        Kind::HSeries => {
            let n = need_n()?;
            catalog::h_series(n, &need_word(n)?, need_mu()?, cfg.degree)?
        }
        Kind::Exp => catalog::exp_series(&parse_poly(&input()?)?, cfg.tol)?,
        Kind::GeometricInverse => catalog::geometric_inverse(&parse_poly(&input()?)?, cfg.degree)?,
        Kind::XK => TruncatedSeries::exact(catalog::x_k(need_n()?, need_k()?)),
        Kind::YK => {
            let k = need_k()?;
            if k == 0 {
                return Err(CliError::Usage("--k must be at least 1".into()));
            }
            TruncatedSeries::exact(catalog::y_k(k))
        }
    };
    Ok(serde_json::to_value(series)?)
}

fn read_input(source: &str, stdin: &mut dyn Read) -> CliResult<String> {
    if source == "-" {
        let mut text = String::new();
        stdin
            .read_to_string(&mut text)
            .map_err(|e| CliError::Io(format!("reading standard input: {e}")))?;
        Ok(text)
    } else {
        read_file(&PathBuf::from(source))
    }
}

fn read_file(path: &PathBuf) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn parse_poly(text: &str) -> CliResult<FreePoly> {
    Ok(FreePoly::from_json(text)?)
}

/// A polynomial, or a truncated series when `trunc_degree` is present.
fn parse_series(text: &str) -> CliResult<TruncatedSeries> {
    let value: Value = serde_json::from_str(text)?;
    if value.get("trunc_degree").is_some() {
        Ok(TruncatedSeries::from_json(text)?)
    } else {
        Ok(TruncatedSeries::exact(FreePoly::from_json(text)?))
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("invalid {what} {p:?}")))
        })
        .collect()
}

fn parse_word(s: &str, n: usize) -> CliResult<Word> {
    let letters = parse_list::<usize>(s, "letter")?;
    Ok(Word::new(&letters, n)?)
}

fn parse_lambda(s: &str) -> CliResult<Lambda> {
    let entries = s
        .split(',')
        .map(parse_complex)
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Lambda::new(entries)?)
}

/// Parses `a`, `bi`, `a+bi` or `a-bi`.
fn parse_complex(s: &str) -> CliResult<Complex64> {
    let t = s.trim();
    let bad = || CliError::Usage(format!("invalid complex number {s:?}"));
    let Some(body) = t.strip_suffix('i') else {
        return t
            .parse::<f64>()
            .map(|re| Complex64::new(re, 0.0))
            .map_err(|_| bad());
    };
    // split at the last sign that is not a leading sign or an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let im_part = |p: &str| -> CliResult<f64> {
        match p {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => p.parse().map_err(|_| bad()),
        }
    };
    match split {
        Some(i) => {
            let re: f64 = body[..i].parse().map_err(|_| bad())?;
            Ok(Complex64::new(re, im_part(&body[i..])?))
        }
        None => Ok(Complex64::new(0.0, im_part(body)?)),
    }
}
