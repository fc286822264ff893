use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use siegel_km::borcherds::f2_table;
use siegel_km::cache::{Cache, CacheError};
use siegel_km::forms::Form;
use siegel_km::fourier::{to_interchange, FourierSeries3};
use siegel_km::hecke::humbert_count;
use siegel_km::lattice::{mult_table, Tag};
use siegel_km::report::{run_suite, Report, Suite, Tables};
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CORRUPT: u8 = 3;

#[derive(Parser)]
#[command(name = "siegel-km", version, about = "Exact Fourier expansions of genus-2 Siegel modular forms")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Cache directory for expansions.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algebra {
    #[value(name = "A1_0")]
    A10,
    #[value(name = "A1_I")]
    A1I,
    #[value(name = "A1_II")]
    A1II,
}

impl Algebra {
    fn tag(self) -> Tag {
        match self {
            Algebra::A10 => Tag::M10,
            Algebra::A1I => Tag::M1I,
            Algebra::A1II => Tag::M1II,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the interchange expansion of a named form.
    Expand {
        #[arg(conflicts_with = "form")]
        name: Option<String>,
        #[arg(long)]
        form: Option<String>,
        /// Quarter units past the leading term (q-powers for one-variable and Jacobi forms).
        #[arg(long, default_value_t = 16)]
        order: i64,
    },
    /// Run a verification suite and print its report.
    Verify {
        #[arg(conflicts_with = "suite")]
        name: Option<String>,
        #[arg(long)]
        suite: Option<String>,
        #[arg(long, default_value_t = 16)]
        order: i64,
    },
    /// Root multiplicities by norm.
    Mult {
        #[arg(long, value_enum)]
        algebra: Algebra,
        #[arg(long, default_value_t = 4)]
        norm_bound: i64,
    },
    /// The twelve Cartan matrices and the lattice checks.
    Cartan,
    /// Humbert surface counts.
    Humbert {
        #[arg(long, num_args = 1.., default_values_t = [2, 3])]
        p: Vec<i64>,
    },
}

enum Failure {
    Usage(String),
    Failed(String),
    Corrupt(String),
}

impl From<CacheError> for Failure {
    fn from(e: CacheError) -> Self {
        match e {
            CacheError::Corrupt { .. } => Failure::Corrupt(e.to_string()),
            e => Failure::Failed(e.to_string()),
        }
    }
}

fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    let res = match &common.out {
        Some(p) => fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    };
    res.map_err(|e| Failure::Failed(format!("write failed: {e}")))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn series_csv(s: &FourierSeries3) -> String {
    let mut out = String::from("n4,l4,m4,re,im\n");
    for (e, c) in s.iter() {
        out.push_str(&format!("{},{},{},{},{}\n", e.n4, e.l4, e.m4, c.re, c.im));
    }
    out
}

fn report_text(r: &Report, format: Format) -> String {
    match format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(r).expect("serializable")),
        Format::Csv => {
            let mut out = String::from("name,status,witness\n");
            for c in &r.checks {
                let w = c.witness.as_ref().map(|w| w.to_string()).unwrap_or_default();
                let status = if c.passed() { "pass" } else { "fail" };
                out.push_str(&format!("{},{status},{}\n", csv_field(&c.name), csv_field(&w)));
            }
            out
        }
    }
}

fn rows_text(rows: &[Value], cols: &[&str], format: Format) -> String {
    match format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(rows).expect("serializable")),
        Format::Csv => {
            let mut out = cols.join(",") + "\n";
            for r in rows {
                let cells: Vec<String> = cols
                    .iter()
                    .map(|c| match &r[*c] {
                        Value::String(s) => csv_field(s),
                        Value::Null => String::new(),
                        v => csv_field(&v.to_string()),
                    })
                    .collect();
                out.push_str(&(cells.join(",") + "\n"));
            }
            out
        }
    }
}

fn pick(pos: Option<String>, flag: Option<String>, what: &str) -> Result<String, Failure> {
    pos.or(flag).ok_or_else(|| Failure::Usage(format!("no {what} given")))
}

fn expand(common: &Common, name: String, order: i64) -> Result<(), Failure> {
    let form: Form = name.parse().map_err(Failure::Usage)?;
    if order < form.min_order() {
        return Err(Failure::Usage(format!("{form} needs --order >= {}", form.min_order())));
    }
    let region = form.region(order);
    let cache = common.cache.as_ref().map(Cache::open).transpose()?;
    let cached = match &cache {
        Some(c) => c.load(form.name(), order, region)?,
        None => None,
    };
    let s = match cached {
        Some(s) => s,
        None => {
            let s = form.expand(&Tables::new(), order).map_err(Failure::Failed)?;
            if let Some(c) = &cache {
                c.store(form.name(), order, &s)?;
            }
            s
        }
    };
    let text = match common.format {
        Format::Json => to_interchange(form.name(), &s),
        Format::Csv => series_csv(&s),
    };
    emit(common, &text)
}

fn verify(common: &Common, name: String, order: i64) -> Result<bool, Failure> {
    let suite: Suite = name.parse().map_err(Failure::Usage)?;
    let report = run_suite(suite, order, &Tables::new()).map_err(Failure::Usage)?;
    emit(common, &report_text(&report, common.format))?;
    Ok(report.passed())
}

fn mult(common: &Common, algebra: Algebra, norm_bound: i64) -> Result<(), Failure> {
    if norm_bound < 0 {
        return Err(Failure::Usage("--norm-bound must be >= 0".into()));
    }
    let t = Tables::new();
    let f = t.f(16 * norm_bound.max(4) + 16).map_err(|e| Failure::Failed(e.to_string()))?;
    let f2 = f2_table(&f).map_err(|e| Failure::Failed(e.to_string()))?;
    let rows = mult_table(algebra.tag(), &f, &f2, norm_bound).map_err(|e| Failure::Failed(e.to_string()))?;
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "norm": r.norm.to_string(),
                "real": r.real,
                "in_m1ii": r.in_m1ii,
                "multiplicity": r.multiplicity.to_string(),
                "representative": r.representative.as_ref().map(|v| v.to_string()),
            })
        })
        .collect();
    let cols = ["norm", "real", "in_m1ii", "multiplicity", "representative"];
    emit(common, &rows_text(&rows, &cols, common.format))
}

fn humbert(common: &Common, ps: &[i64]) -> Result<(), Failure> {
    if let Some(p) = ps.iter().find(|p| **p < 2) {
        return Err(Failure::Usage(format!("p = {p} is not a prime")));
    }
    let rows: Vec<Value> = ps
        .iter()
        .map(|&p| {
            let (a, b) = humbert_count(p);
            json!({ "p": p, "alpha": a, "beta": b })
        })
        .collect();
    emit(common, &rows_text(&rows, &["p", "alpha", "beta"], common.format))
}

fn run(cli: Cli) -> Result<bool, Failure> {
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let c = &cli.common;
    match cli.cmd {
        Cmd::Expand { name, form, order } => expand(c, pick(name, form, "form")?, order).map(|_| true),
        Cmd::Verify { name, suite, order } => verify(c, pick(name, suite, "suite")?, order),
        Cmd::Mult { algebra, norm_bound } => mult(c, algebra, norm_bound).map(|_| true),
        Cmd::Cartan => verify(c, "cartan".into(), Suite::Cartan.min_order()),
        Cmd::Humbert { p } => humbert(c, &p).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Failed(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_FAILED)
        }
        Err(Failure::Corrupt(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CORRUPT)
        }
    }
}
