//! Command-line front end. [`run`] parses arguments, writes the report to
//! `out`, diagnostics to `err`, and returns the process exit code.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::seed_corpus;
use crate::ext::ExtNat;
use crate::fincat::{CategoryDescription, CategoryError, FinCategory, HypothesisReport};
use crate::geometry::{self, DimensionReport, GeometryError, TheoremStatus};
use crate::logic::{self, LogicError};
use crate::presheaf::{BaseRef, Presheaf, PresheafDescription, PresheafError};
use crate::sites::{self, Example, SiteError, SiteKind, SiteSpec};

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code for a failed assertion about the mathematics.
pub const EXIT_VERDICT: i32 = 1;
/// Exit code for unreadable or invalid input.
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "etendue", version, about = "Finite sites, presheaves and their dimension")]
pub struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Run the theorem check over the built-in example corpus.
    #[arg(long)]
    pub seed_corpus: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a category JSON file and report the structural hypotheses.
    Validate { path: PathBuf },
    /// Generate a truncation of Δ or of finite non-empty sets.
    Site {
        kind: SiteArg,
        #[arg(long)]
        max: usize,
        /// Print the category JSON.
        #[arg(long)]
        emit: bool,
        /// Raise the size guard to `max`.
        #[arg(long)]
        allow_large: bool,
    },
    /// Build a bundled presheaf.
    Presheaf {
        #[command(subcommand)]
        action: PresheafCommand,
    },
    /// Full dimension report.
    Analyze { presheaf: String },
    Dim { presheaf: String },
    Depth { presheaf: String },
    /// Internal logic of the presheaf topos.
    Logic {
        #[command(subcommand)]
        action: LogicCommand,
    },
    /// Idempotent ideals of a site.
    Levels {
        site: String,
        #[arg(long, default_value_t = 40)]
        budget: usize,
    },
    /// Check `dim X ≤ n` against the depth-n sentence.
    Theorem {
        presheaf: String,
        #[arg(long)]
        nmax: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SiteArg {
    Delta,
    Finset,
}

#[derive(Debug, Subcommand)]
pub enum PresheafCommand {
    /// `representable:<obj>`, `boundary:<n>`, `loop_Y` or `collapsed_Z`.
    Build {
        example: String,
        #[arg(long)]
        base: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum LogicCommand {
    /// Truth value of a sentence as the sieve of objects forcing it.
    Eval {
        #[arg(long)]
        site: String,
        #[arg(long)]
        formula: String,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Json(String),
    #[error("invalid argument: {0}")]
    Usage(String),
    #[error(transparent)]
    Category(#[from] CategoryError),
    #[error(transparent)]
    Presheaf(#[from] PresheafError),
    #[error(transparent)]
    Site(#[from] SiteError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn category_code(e: &CategoryError) -> &'static str {
    match e {
        CategoryError::MalformedInput(_) => "MalformedInput",
        CategoryError::AxiomViolation { .. } => "AxiomViolation",
        CategoryError::UnknownObject(_) | CategoryError::UnknownMorphism(_) => "UnknownObject",
        CategoryError::NoFactorization { .. } => "HypothesisFailed",
        CategoryError::BudgetExceeded { .. } => "BudgetExceeded",
        CategoryError::InvariantViolation(_) => "Internal",
    }
}

fn presheaf_code(e: &PresheafError) -> &'static str {
    match e {
        PresheafError::MalformedInput(_) => "MalformedInput",
        PresheafError::NotFunctorial(_) => "NotFunctorial",
        PresheafError::NotClosed(_) => "NotClosed",
        PresheafError::NotNatural { .. } => "NotNatural",
        PresheafError::ParentMismatch => "ParentMismatch",
        PresheafError::UnknownObject(_) | PresheafError::UnknownElement { .. } => "UnknownObject",
        PresheafError::BudgetExceeded { .. } => "BudgetExceeded",
        PresheafError::Category(c) => category_code(c),
    }
}

impl CliError {
    /// Machine-readable code printed as `error[code]`.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "Io",
            CliError::Json(_) => "MalformedInput",
            CliError::Usage(_) => "Usage",
            CliError::Category(e) => category_code(e),
            CliError::Presheaf(e) => presheaf_code(e),
            CliError::Site(e) => match e {
                SiteError::BudgetExceeded { .. } => "BudgetExceeded",
                SiteError::IncompatibleBase { .. } => "IncompatibleBase",
                SiteError::Unknown(_) => "UnknownExample",
                SiteError::Category(c) => category_code(c),
                SiteError::Presheaf(p) => presheaf_code(p),
            },
            CliError::Logic(e) => match e {
                LogicError::Parse { .. } => "ParseError",
                LogicError::UnboundVariable(_) => "UnboundVariable",
                LogicError::Presheaf(p) => presheaf_code(p),
                _ => "Internal",
            },
            CliError::Geometry(e) => match e {
                GeometryError::HypothesisFailed(_) => "HypothesisFailed",
                GeometryError::TheoremViolation(_) => "TheoremViolation",
                GeometryError::InvariantViolation(_) => "Internal",
                GeometryError::Category(c) => category_code(c),
                GeometryError::Presheaf(p) => presheaf_code(p),
                GeometryError::Logic(_) => "Internal",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.code() {
            "TheoremViolation" | "Internal" => EXIT_VERDICT,
            _ => EXIT_INPUT,
        }
    }
}

type Result<T, E = CliError> = std::result::Result<T, E>;

// ---- JSON reports ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidateReport {
    pub objects: usize,
    pub morphisms: usize,
    pub heights: Option<Vec<usize>>,
    pub hypotheses: HypothesisReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteSummary {
    pub site: String,
    pub objects: Vec<String>,
    pub morphisms: usize,
    pub heights: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalReport {
    pub formula: String,
    /// Objects at which the sentence is forced.
    pub forced_at: Vec<String>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelReport {
    pub ideal: Vec<String>,
    pub full_subcategory: Option<Vec<String>>,
    pub level_e: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelsReport {
    pub levels: Vec<LevelReport>,
    /// Objects of the level-e site, absent when the site lacks the hypotheses.
    pub level_e_site: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub status: TheoremStatus,
    pub report: DimensionReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRow {
    pub name: String,
    pub site: String,
    pub status: TheoremStatus,
    pub report: DimensionReport,
}

// ---- loading ----

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| CliError::Json(format!("{origin}: {e}")))
}

/// A site given as `delta:K`, `finset:K`, or a path to a category JSON file.
pub fn load_site(arg: &str, relative_to: Option<&Path>) -> Result<FinCategory> {
    if let Some(spec) = SiteSpec::parse(arg) {
        return Ok(spec.build()?);
    }
    let path = match relative_to {
        Some(dir) if Path::new(arg).is_relative() => dir.join(arg),
        _ => PathBuf::from(arg),
    };
    let desc: CategoryDescription = parse_json(&read(&path)?, &path.display().to_string())?;
    Ok(FinCategory::validate(&desc)?)
}

/// A presheaf given as `<example>@<site>` or a path to a presheaf JSON file.
pub fn load_presheaf(arg: &str) -> Result<Presheaf> {
    if let Some((which, site)) = arg.rsplit_once('@') {
        if let Some(spec) = SiteSpec::parse(site) {
            let base = Arc::new(spec.build()?);
            return Ok(sites::example(&Example::parse(which)?, &base)?);
        }
    }
    let path = Path::new(arg);
    let desc: PresheafDescription = parse_json(&read(path)?, arg)?;
    let base = match &desc.base {
        BaseRef::Named(name) => load_site(name, path.parent())?,
        BaseRef::Inline(cat) => FinCategory::validate(cat)?,
    };
    Ok(Presheaf::from_description(&desc, Arc::new(base))?)
}

// ---- commands ----

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Json(e.to_string()))?;
    writeln!(out, "{text}").map_err(io_out)
}

fn io_out(e: std::io::Error) -> CliError {
    CliError::Io {
        path: "<stdout>".into(),
        message: e.to_string(),
    }
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(io_out)?
    };
}

fn heights(cat: &FinCategory) -> Result<Vec<usize>> {
    Ok(cat.objects().map(|c| cat.height(c)).collect::<Result<_, _>>()?)
}

fn validate(path: &Path, json: bool, out: &mut dyn Write) -> Result<i32> {
    let desc: CategoryDescription = parse_json(&read(path)?, &path.display().to_string())?;
    let cat = FinCategory::validate(&desc)?;
    let report = ValidateReport {
        objects: cat.object_count(),
        morphisms: cat.morphism_count(),
        heights: heights(&cat).ok(),
        hypotheses: cat.check_hypotheses(),
    };
    if json {
        emit(out, &report)?;
    } else {
        let h = &report.hypotheses;
        say!(out, "valid category: {} objects, {} morphisms", report.objects, report.morphisms);
        say!(out, "split-epi/mono factorization: {}", h.split_epi_mono_factorization);
        say!(out, "strong-epi/mono factorization: {}", h.strong_epi_mono_factorization);
        say!(out, "ACC on monos: {}", h.acc);
        say!(out, "well-founded: {}", h.well_founded);
        for w in &h.witnesses {
            say!(out, "  fails {}: {}", w.property, w.morphisms.join(", "));
        }
        if let Some(hs) = &report.heights {
            for c in cat.objects() {
                say!(out, "height({}) = {}", cat.object_name(c), hs[c]);
            }
        }
    }
    Ok(EXIT_OK)
}

fn site(kind: SiteArg, max: usize, emit_json: bool, allow_large: bool, json: bool, out: &mut dyn Write) -> Result<i32> {
    let spec = SiteSpec {
        kind: match kind {
            SiteArg::Delta => SiteKind::Delta,
            SiteArg::Finset => SiteKind::Finset,
        },
        max,
    };
    let cat = match (spec.kind, allow_large) {
        (_, false) => spec.build()?,
        (SiteKind::Delta, true) => sites::build_delta_with_limit(max, max)?,
        (SiteKind::Finset, true) => sites::build_finset_with_limit(max, max)?,
    };
    if emit_json {
        return emit(out, &cat.describe()).map(|_| EXIT_OK);
    }
    let summary = SiteSummary {
        site: spec.to_string(),
        objects: cat.object_names().to_vec(),
        morphisms: cat.morphism_count(),
        heights: heights(&cat)?,
    };
    if json {
        emit(out, &summary)?;
    } else {
        say!(out, "{}: {} objects, {} morphisms", summary.site, summary.objects.len(), summary.morphisms);
        for (name, h) in summary.objects.iter().zip(&summary.heights) {
            say!(out, "height({name}) = {h}");
        }
    }
    Ok(EXIT_OK)
}

fn build_presheaf(example: &str, base: &str, json: bool, out: &mut dyn Write) -> Result<i32> {
    let cat = Arc::new(load_site(base, None)?);
    let x = sites::example(&Example::parse(example)?, &cat)?;
    let base_ref = match SiteSpec::parse(base) {
        Some(spec) => BaseRef::Named(spec.to_string()),
        None => BaseRef::Inline(cat.describe()),
    };
    let desc = x.describe(base_ref);
    if json {
        emit(out, &desc)?;
    } else {
        say!(out, "{example} over {base}:");
        for (c, names) in &desc.elements {
            say!(out, "  {c}: {{{}}}", names.join(", "));
        }
    }
    Ok(EXIT_OK)
}

fn print_report(out: &mut dyn Write, r: &DimensionReport) -> Result<()> {
    say!(out, "dim = {}  (largest n whose skeleton misses an element; skeleton by factorization through objects of height ≤ n)", r.dim);
    say!(out, "depth = {}  (longest chain of non-invertible maps in the site of minimal figures, confirmed by forcing the depth sentences)", r.depth);
    say!(out, "strongly regular: {}  (minimal covers in the category of elements are monic)", r.strongly_regular);
    say!(out, "non-singular: {}  (every minimal figure is preterminal)", r.non_singular);
    say!(out, "localic: {}  (site of minimal figures is a preorder)", r.localic);
    say!(out, "n  dim≤n  depth-n sentence");
    for row in &r.table {
        say!(out, "{:<2} {:<6} {}", row.n, row.dim_le_n, row.ibd_n);
    }
    for w in &r.witnesses {
        say!(out, "witness: {w}");
    }
    Ok(())
}

fn status_name(s: TheoremStatus) -> &'static str {
    match s {
        TheoremStatus::Equivalent => "equivalent",
        TheoremStatus::OneWayOnly => "one_way_only",
    }
}

fn theorem(arg: &str, nmax: Option<usize>, json: bool, out: &mut dyn Write) -> Result<i32> {
    let x = Arc::new(load_presheaf(arg)?);
    let report = geometry::verify_dimension_theorem(&x, nmax)?;
    let status = report.theorem_status();
    // the equivalence is guaranteed for strongly regular presheaves
    let code = if report.strongly_regular && status != TheoremStatus::Equivalent {
        EXIT_VERDICT
    } else {
        EXIT_OK
    };
    if json {
        emit(out, &TheoremReport { status, report })?;
    } else {
        say!(out, "{}", status_name(status));
        print_report(out, &report)?;
    }
    Ok(code)
}

fn logic_eval(site: &str, formula: &str, json: bool, out: &mut dyn Write) -> Result<i32> {
    let cat = Arc::new(load_site(site, None)?);
    let phi = logic::parse_formula(formula, &cat)?;
    let value = logic::sentence_value(&cat, &phi)?;
    let report = EvalReport {
        formula: phi.render(&cat),
        forced_at: value.members().into_iter().map(|c| cat.object_name(c).to_string()).collect(),
        holds: value.is_all(),
    };
    if json {
        emit(out, &report)?;
    } else {
        say!(out, "{}", report.formula);
        say!(out, "forced at: {{{}}}", report.forced_at.join(", "));
        say!(out, "holds: {}", report.holds);
    }
    Ok(EXIT_OK)
}

fn levels(site: &str, budget: usize, json: bool, out: &mut dyn Write) -> Result<i32> {
    let cat = load_site(site, None)?;
    let names = |ids: &[usize], f: &dyn Fn(usize) -> String| ids.iter().map(|&i| f(i)).collect::<Vec<_>>();
    let mor = |f: usize| cat.morphism_name(f).to_string();
    let obj = |c: usize| cat.object_name(c).to_string();
    let report = LevelsReport {
        levels: cat
            .enumerate_levels(budget)?
            .iter()
            .map(|l| LevelReport {
                ideal: names(&l.ideal, &mor),
                full_subcategory: l.full_subcategory.as_ref().map(|s| names(s, &obj)),
                level_e: l.level_e,
            })
            .collect(),
        level_e_site: match geometry::level_e_site(&cat) {
            Ok(sub) => Some(names(&sub.objects, &obj)),
            Err(GeometryError::HypothesisFailed(_)) => None,
            Err(e) => return Err(e.into()),
        },
    };
    if json {
        emit(out, &report)?;
    } else {
        say!(out, "{} levels", report.levels.len());
        for (i, l) in report.levels.iter().enumerate() {
            let full = match &l.full_subcategory {
                Some(objs) => format!("identities of {{{}}}", objs.join(", ")),
                None => "not generated by identities".to_string(),
            };
            let e = if l.level_e { ", level e" } else { "" };
            say!(out, "level {i}: {} maps, {full}{e}", l.ideal.len());
        }
        match &report.level_e_site {
            Some(objs) => say!(out, "level-e site: {{{}}}", objs.join(", ")),
            None => say!(out, "level-e site: hypotheses fail"),
        }
    }
    Ok(EXIT_OK)
}

fn corpus(json: bool, out: &mut dyn Write) -> Result<i32> {
    let mut rows = Vec::new();
    let mut code = EXIT_OK;
    for entry in seed_corpus()? {
        let report = geometry::verify_dimension_theorem(&entry.presheaf, None)?;
        let status = report.theorem_status();
        if report.strongly_regular && status != TheoremStatus::Equivalent {
            code = EXIT_VERDICT;
        }
        rows.push(CorpusRow {
            name: entry.name,
            site: entry.site,
            status,
            report,
        });
    }
    if json {
        emit(out, &rows)?;
    } else {
        for r in &rows {
            say!(
                out,
                "{}: dim {}, depth {}, strongly regular {}, non-singular {}, localic {}, {}",
                r.name,
                r.report.dim,
                r.report.depth,
                r.report.strongly_regular,
                r.report.non_singular,
                r.report.localic,
                status_name(r.status)
            );
        }
    }
    Ok(code)
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let json = cli.json;
    let mut code = EXIT_OK;
    if cli.seed_corpus {
        code = corpus(json, out)?;
    }
    let Some(command) = cli.command else {
        if cli.seed_corpus {
            return Ok(code);
        }
        return Err(CliError::Usage("no command given (try --help)".into()));
    };
    let c = match command {
        Command::Validate { path } => validate(&path, json, out)?,
        Command::Site {
            kind,
            max,
            emit,
            allow_large,
        } => site(kind, max, emit, allow_large, json, out)?,
        Command::Presheaf {
            action: PresheafCommand::Build { example, base },
        } => build_presheaf(&example, &base, json, out)?,
        Command::Analyze { presheaf } => {
            let x = Arc::new(load_presheaf(&presheaf)?);
            let report = geometry::verify_dimension_theorem(&x, None)?;
            if json {
                emit(out, &report)?;
            } else {
                print_report(out, &report)?;
            }
            EXIT_OK
        }
        Command::Dim { presheaf } => {
            let d = geometry::dim(&Arc::new(load_presheaf(&presheaf)?))?;
            scalar(out, json, "dim", d)?
        }
        Command::Depth { presheaf } => {
            let d = geometry::depth(&Arc::new(load_presheaf(&presheaf)?))?;
            scalar(out, json, "depth", d)?
        }
        Command::Logic {
            action: LogicCommand::Eval { site, formula },
        } => logic_eval(&site, &formula, json, out)?,
        Command::Levels { site, budget } => levels(&site, budget, json, out)?,
        Command::Theorem { presheaf, nmax } => theorem(&presheaf, nmax, json, out)?,
    };
    Ok(code.max(c))
}

fn scalar(out: &mut dyn Write, json: bool, key: &str, value: ExtNat) -> Result<i32> {
    if json {
        emit(out, &serde_json::json!({ key: value }))?;
    } else {
        say!(out, "{value}");
    }
    Ok(EXIT_OK)
}

/// Runs the command line `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                return EXIT_INPUT;
            }
            let _ = write!(out, "{rendered}");
            return EXIT_OK;
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {e}", e.code());
            e.exit_code()
        }
    }
}
