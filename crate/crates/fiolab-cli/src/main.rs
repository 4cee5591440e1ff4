//! `fiolab`: command-line front end for the time-frequency toolkit.

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fiolab::experiments::{self, ExponentTuple, ReportFormat, SweepConfig, Theorem};
use fiolab::fio::{self, SymbolSpec};
use fiolab::grid::{Grid, SampledFunction};
use fiolab::phase::{self, PhaseSpec};
use fiolab::spaces::{self, Exponent, SpaceSpec, Weight, DEFAULT_EPS};
use fiolab::tfr::{self, StftLattice, DEFAULT_WINDOW};
use fiolab::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "fiolab", version, about = "Modulation-space norms, FIOs and threshold sweeps")]
struct Cli {
    /// Points per axis of generated inputs.
    #[arg(long = "grid-n", global = true)]
    grid_n: Option<usize>,
    /// Half-width of generated inputs' grid.
    #[arg(long = "grid-L", global = true)]
    grid_l: Option<f64>,
    /// Window id (`gauss` or `gauss:<width>`).
    #[arg(long, global = true)]
    window: Option<String>,
    /// The ε of the `v_{d+ε}` weights.
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// File of `key=value` lines supplying defaults for the flags above and phase parameters.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// STFT of a sampled function as CSV.
    Stft {
        /// Input function CSV; a Gaussian on the configured grid when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Evaluate on a unit-window lattice with this shift spacing instead of the full grid.
        #[arg(long)]
        lattice_dx: Option<f64>,
    },
    /// Modulation or amalgam norm as one CSV row.
    Norm(NormArgs),
    /// Applies an FIO to a sampled function.
    Apply {
        /// `one` (default) or `power:<s1>,<s2>`.
        #[arg(long)]
        symbol: Option<String>,
        /// Phase as comma-separated `key=value` pairs, e.g. `kind=mild_growth,alpha=0.5`.
        #[arg(long)]
        phase: Option<String>,
        #[arg(long)]
        input: PathBuf,
        /// Same as `--out`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Exponent predicates and phase verifiers as CSV verdict rows.
    Check {
        #[command(subcommand)]
        what: CheckCommand,
    },
    /// Threshold sweep of one theorem over its default tuple grid.
    Sweep {
        /// 1 (separated), 2 (non-separated) or 3 (high growth).
        #[arg(long)]
        theorem: Option<String>,
        /// Family sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<usize>>,
        /// Keep only the first this many tuples.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Renders sweep rows as CSV or SVG.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "svg")]
        format: String,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SpaceArg {
    M,
    W,
}

#[derive(Args, Debug)]
struct NormArgs {
    #[arg(long, value_enum, default_value = "m")]
    space: SpaceArg,
    #[arg(long, default_value = "2")]
    p: String,
    #[arg(long, default_value = "2")]
    q: String,
    /// Weight exponent on the time variable.
    #[arg(long, default_value_t = 0.0)]
    s: f64,
    /// Weight exponent on the frequency variable.
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    lattice_dx: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum CheckCommand {
    /// `l^{q1}_{s1} ⊂ l^{q2}_{s2}`.
    Embedding {
        #[arg(long)]
        q1: String,
        #[arg(long)]
        s1: f64,
        #[arg(long)]
        q2: String,
        #[arg(long)]
        s2: f64,
        #[arg(long, default_value_t = 1)]
        d: usize,
    },
    /// Boundedness predicate of one theorem.
    Theorem {
        #[arg(long)]
        number: String,
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        s1: f64,
        #[arg(long, default_value_t = 0.0)]
        s2: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        t1: f64,
        #[arg(long, default_value_t = 0.0)]
        t2: f64,
        #[arg(long, default_value_t = 1)]
        d: usize,
    },
    /// Declared growth parameters of a phase on the nested boxes.
    Phase {
        #[arg(long)]
        phase: Option<String>,
        #[arg(long, default_value_t = 1)]
        d: usize,
    },
}

/// Flags merged with the `key=value` config file; flags win.
#[derive(Debug, Default)]
struct Settings {
    grid_n: Option<usize>,
    grid_l: Option<f64>,
    window: Option<String>,
    eps: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    theorem: Option<String>,
    symbol: Option<String>,
    phase: Vec<(String, String)>,
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad value for {key}: {v:?}")))
}

fn parse_pairs(text: &str, sep: char) -> Result<Vec<(String, String)>> {
    text.split(sep)
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {l:?}")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

impl Settings {
    fn load(cli: &Cli) -> Result<Self> {
        let mut s = Settings::default();
        if let Some(path) = &cli.config {
            for (k, v) in parse_pairs(&fs::read_to_string(path)?, '\n')? {
                match k.as_str() {
                    "grid-n" | "grid_n" => s.grid_n = Some(parse_num(&k, &v)?),
                    "grid-L" | "grid_L" => s.grid_l = Some(parse_num(&k, &v)?),
                    "window" => s.window = Some(v),
                    "eps" => s.eps = Some(parse_num(&k, &v)?),
                    "seed" => s.seed = Some(parse_num(&k, &v)?),
                    "out" => s.out = Some(PathBuf::from(v)),
                    "theorem" => s.theorem = Some(v),
                    "symbol" => s.symbol = Some(v),
                    _ => s.phase.push((k, v)),
                }
            }
        }
        s.grid_n = cli.grid_n.or(s.grid_n);
        s.grid_l = cli.grid_l.or(s.grid_l);
        s.window = cli.window.clone().or(s.window);
        s.eps = cli.eps.or(s.eps);
        s.seed = cli.seed.or(s.seed);
        s.out = cli.out.clone().or(s.out);
        Ok(s)
    }

    fn grid(&self) -> Result<Grid> {
        let d = Grid::default_1d();
        Grid::with_half_width(1, self.grid_n.unwrap_or(d.n()), self.grid_l.unwrap_or(d.half_width()))
    }

    fn window(&self) -> &str {
        self.window.as_deref().unwrap_or(DEFAULT_WINDOW)
    }

    fn eps(&self) -> f64 {
        self.eps.unwrap_or(DEFAULT_EPS)
    }

    fn phase(&self, flag: Option<&str>, d: usize) -> Result<PhaseSpec> {
        let mut pairs = self.phase.clone();
        if let Some(text) = flag {
            pairs.extend(parse_pairs(text, ',')?);
        }
        if pairs.is_empty() {
            return Err(Error::Parse("no phase given: pass --phase or kind=... in the config".into()));
        }
        // later pairs override earlier ones
        pairs.reverse();
        PhaseSpec::from_pairs(&pairs, d)
    }
}

fn read_function(path: Option<&Path>, s: &Settings) -> Result<SampledFunction> {
    match path {
        Some(p) => SampledFunction::read_csv(BufReader::new(fs::File::open(p)?)),
        None => Ok(tfr::gaussian_window(s.grid()?)),
    }
}

fn lattice(grid: &Grid, dx: Option<f64>) -> Result<StftLattice> {
    match dx {
        None => Ok(StftLattice::full()),
        Some(dx) if dx > 0.0 && dx.is_finite() => Ok(StftLattice::for_unit_window(grid, dx)),
        Some(dx) => Err(Error::Validation(format!("lattice spacing must be positive, got {dx}"))),
    }
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => match io::stdout().lock().write_all(bytes) {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
            other => other?,
        },
    }
    Ok(())
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn clause_rows(clauses: &[spaces::Clause]) -> Vec<Vec<String>> {
    clauses
        .iter()
        .map(|c| {
            let op = if c.strict { ">" } else { ">=" };
            vec![
                format!("lhs {op} rhs"),
                c.rhs.to_string(),
                c.lhs.to_string(),
                c.holds().to_string(),
            ]
        })
        .collect()
}

const VERDICT_HEADER: [&str; 4] = ["condition", "threshold", "measured", "pass"];

fn run(cli: Cli) -> Result<()> {
    let s = Settings::load(&cli)?;
    let out = s.out.as_deref();
    match cli.command {
        Command::Stft { input, lattice_dx } => {
            let f = read_function(input.as_deref(), &s)?;
            let g = tfr::window_by_id(s.window(), *f.grid())?;
            let v = tfr::stft_with(&f, &g, lattice(f.grid(), lattice_dx)?)?;
            let mut buf = Vec::new();
            v.write_csv(&mut buf)?;
            write_out(out, &buf)
        }
        Command::Norm(a) => {
            let f = read_function(a.input.as_deref(), &s)?;
            let p: Exponent = a.p.parse()?;
            let q: Exponent = a.q.parse()?;
            let w = Weight::new(a.s, a.t, f.grid().dim());
            let spec = match a.space {
                SpaceArg::M => SpaceSpec::modulation(p, q, w),
                SpaceArg::W => SpaceSpec::amalgam(p, q, w),
            }
            .with_window(s.window())
            .with_lattice(lattice(f.grid(), a.lattice_dx)?);
            let value = match a.space {
                SpaceArg::M => spaces::modulation_norm(&f, &spec)?,
                SpaceArg::W => spaces::amalgam_norm(&f, &spec)?,
            };
            let row = vec![spec.descriptor(), spec.window.clone(), f.grid().descriptor(), value.to_string()];
            write_out(out, &csv_bytes(&["space", "window", "grid", "value"], [row])?)
        }
        Command::Apply { symbol, phase, input, output } => {
            let f = read_function(Some(&input), &s)?;
            let sigma: SymbolSpec = symbol.or(s.symbol.clone()).as_deref().unwrap_or("one").parse()?;
            let phi = s.phase(phase.as_deref(), f.grid().dim())?;
            let tf = fio::apply_fio(&sigma, &phi, &f)?;
            let mut buf = Vec::new();
            tf.write_csv(&mut buf)?;
            write_out(output.as_deref().or(out), &buf)
        }
        Command::Check { what } => {
            let rows = match what {
                CheckCommand::Embedding { q1, s1, q2, s2, d } => {
                    let (q1, q2): (Exponent, Exponent) = (q1.parse()?, q2.parse()?);
                    let holds = spaces::embedding_holds(q1, s1, q2, s2, d);
                    let margin = spaces::embedding_margin(q1, s1, q2, s2, d);
                    vec![vec![
                        format!("l^{{{q1}}}_{{{s1}}} in l^{{{q2}}}_{{{s2}}}"),
                        "0".to_string(),
                        margin.to_string(),
                        holds.to_string(),
                    ]]
                }
                CheckCommand::Theorem { number, p, q, s1, s2, alpha, t1, t2, d } => {
                    let theorem: Theorem = number.parse()?;
                    let p: Exponent = p.parse()?;
                    let q: Exponent = q.as_deref().map_or(Ok(p), str::parse)?;
                    let tuple = match theorem {
                        Theorem::HighGrowth => ExponentTuple { d, ..ExponentTuple::high_growth(p, s1, s2, t1, t2) },
                        _ => ExponentTuple { d, ..ExponentTuple::separated(p, q, s1, s2, alpha) },
                    };
                    let mut rows = clause_rows(&tuple.clauses(theorem)?);
                    let holds = tuple.verdict(theorem)? == experiments::Verdict::PredictedBounded;
                    rows.push(vec![
                        format!("thm{theorem} predicate"),
                        String::new(),
                        String::new(),
                        holds.to_string(),
                    ]);
                    rows
                }
                CheckCommand::Phase { phase, d } => {
                    let phi = s.phase(phase.as_deref(), d)?;
                    phase::verify_declared(&phi, s.eps(), &phase::DEFAULT_BOXES)?
                        .into_iter()
                        .map(|r| {
                            vec![r.condition, r.threshold.to_string(), r.measured.to_string(), r.pass.to_string()]
                        })
                        .collect()
                }
            };
            write_out(out, &csv_bytes(&VERDICT_HEADER, rows)?)
        }
        Command::Sweep { theorem, ns, limit } => {
            let theorem: Theorem = theorem
                .or(s.theorem.clone())
                .ok_or_else(|| Error::Parse("sweep needs --theorem".into()))?
                .parse()?;
            if s.window() != DEFAULT_WINDOW {
                return Err(Error::Validation(format!("sweeps use the {DEFAULT_WINDOW} window, got {:?}", s.window())));
            }
            let mut tuples = experiments::default_tuples(theorem);
            if let Some(l) = limit {
                tuples.truncate(l);
            }
            let mut cfg = SweepConfig::default();
            if let Some(ns) = ns {
                cfg.ns = ns;
            }
            cfg.seed = s.seed.unwrap_or(cfg.seed);
            let rows = experiments::threshold_sweep(theorem, &tuples, &cfg)?;
            write_out(out, &experiments::emit_report(&rows, ReportFormat::Csv)?)
        }
        Command::Report { input, format } => {
            let format: ReportFormat = format.parse()?;
            let rows = experiments::parse_report(&fs::read(input)?)?;
            write_out(out, &experiments::emit_report(&rows, format)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fiolab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
