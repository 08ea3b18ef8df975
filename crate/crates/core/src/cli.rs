//! Command-line front end. All logic lives here so it can be driven from
//! tests; the binary only forwards `std::env::args` and the exit code.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::harness::{run_cv_experiment, run_dv_experiment, ConstellationRow, CvExperimentConfig, DvExperimentConfig};
use crate::planner::{best_path, Network};
use crate::rates::{skr_cv_asymptotic, skr_dv_finite, CvRateInput, DetectorTrust, DvRateInput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const CSV_HEADER: &str = "symbol_index,x_a,p_a,x_b,p_b";

#[derive(Debug, Parser)]
#[command(name = "hqkd", version, about = "Hybrid DV/CV QKD simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Protocol {
    Cv,
    Dv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an end-to-end experiment from a JSON config.
    Simulate {
        #[arg(value_enum)]
        mode: Protocol,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Evaluate a key-rate bound without simulation.
    Rate {
        #[arg(value_enum)]
        mode: Protocol,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        cv: CvFlags,
        /// `<param>:<lo>:<hi>:<n>` over a CV rate parameter; prints CSV.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Assign link modes and find the widest route in a network file.
    Plan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a constellation CSV for a CV config (V_A = 12.4 SNU point by default).
    PlotData {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Symbols (CV) or pulses (DV) to simulate.
    #[arg(long)]
    pub symbols: Option<u64>,
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvFlags {
    #[arg(long)]
    pub v_a: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub loss_db: Option<f64>,
    #[arg(long)]
    pub xi_a: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub v_el: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub symbol_rate: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(default)]
    pub trust: Option<TrustArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrustArg {
    NoiseOnly,
    Full,
}

impl From<TrustArg> for DetectorTrust {
    fn from(t: TrustArg) -> Self {
        match t {
            TrustArg::NoiseOnly => DetectorTrust::NoiseOnly,
            TrustArg::Full => DetectorTrust::Full,
        }
    }
}

/// Failure split by exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Failure::Usage(e.to_string())
    }

    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Report wrapper carrying provenance.
#[derive(Debug, Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    seed: Option<u64>,
    config_sha256: String,
    config: &'a C,
    report: R,
}

fn config_hash<C: Serialize>(cfg: &C) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    hex::encode(Sha256::digest(bytes))
}

fn envelope<'a, C: Serialize, R: Serialize>(command: &'a str, seed: Option<u64>, config: &'a C, report: R) -> Envelope<'a, C, R> {
    Envelope {
        command,
        seed,
        config_sha256: config_hash(config),
        config,
        report,
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(Failure::runtime)?;
    }
    fs::write(path, contents).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

pub fn constellation_csv(rows: &[ConstellationRow]) -> String {
    let mut s = String::with_capacity(rows.len() * 64);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!("{},{},{},{},{}\n", r.symbol_index, r.x_a, r.p_a, r.x_b, r.p_b));
    }
    s
}

fn cv_config(run: &RunArgs, default: Option<CvExperimentConfig>) -> CliResult<CvExperimentConfig> {
    let mut cfg = match (&run.config, default) {
        (Some(p), _) => read_json::<CvExperimentConfig>(p)?,
        (None, Some(d)) => d,
        (None, None) => return Err(Failure::usage("--config is required")),
    };
    if let Some(s) = run.seed {
        cfg.seed = s;
    }
    if let Some(n) = run.symbols {
        cfg.n_symbols = n as usize;
    }
    cfg.validate().map_err(Failure::usage)?;
    Ok(cfg)
}

fn dv_config(run: &RunArgs) -> CliResult<DvExperimentConfig> {
    let path = run.config.as_ref().ok_or_else(|| Failure::usage("--config is required"))?;
    let mut cfg = read_json::<DvExperimentConfig>(path)?;
    if let Some(s) = run.seed {
        cfg.seed = s;
    }
    if let Some(n) = run.symbols {
        cfg.duration = n as f64 / cfg.pulse_rate;
    }
    cfg.validate().map_err(Failure::usage)?;
    Ok(cfg)
}

fn simulate(mode: Protocol, run: &RunArgs, out: &mut dyn Write) -> CliResult<()> {
    match mode {
        Protocol::Cv => {
            let cfg = cv_config(run, None)?;
            let result = run_cv_experiment(&cfg).map_err(Failure::runtime)?;
            let json = to_json(&envelope("simulate cv", Some(cfg.seed), &cfg, &result.report));
            if let Some(dir) = &run.out {
                write_file(&dir.join("report.json"), &json)?;
                write_file(&dir.join("constellation.csv"), &constellation_csv(&result.constellation))?;
            }
            out.write_all(json.as_bytes()).map_err(Failure::runtime)
        }
        Protocol::Dv => {
            let cfg = dv_config(run)?;
            let report = run_dv_experiment(&cfg).map_err(Failure::runtime)?;
            let json = to_json(&envelope("simulate dv", Some(cfg.seed), &cfg, &report));
            if let Some(dir) = &run.out {
                write_file(&dir.join("report.json"), &json)?;
            }
            out.write_all(json.as_bytes()).map_err(Failure::runtime)
        }
    }
}

fn merge_cv(config: Option<&PathBuf>, flags: &CvFlags) -> CliResult<CvRateInput> {
    let base: CvFlags = match config {
        Some(p) => read_json(p)?,
        None => CvFlags::default(),
    };
    let pick = |f: Option<f64>, b: Option<f64>| f.or(b);
    let t = match (pick(flags.t, base.t), pick(flags.loss_db, base.loss_db)) {
        (Some(_), Some(_)) => return Err(Failure::usage("give only one of --t and --loss-db")),
        (Some(t), None) => Some(t),
        (None, Some(db)) => Some(crate::channel::db_to_transmittance(db).map_err(Failure::usage)?),
        (None, None) => None,
    };
    let fields = [
        ("v_a", pick(flags.v_a, base.v_a)),
        ("t or loss_db", t),
        ("xi_a", pick(flags.xi_a, base.xi_a)),
        ("eta", pick(flags.eta, base.eta)),
        ("v_el", pick(flags.v_el, base.v_el)),
        ("beta", pick(flags.beta, base.beta)),
        ("symbol_rate", pick(flags.symbol_rate, base.symbol_rate)),
    ];
    let missing: Vec<_> = fields.iter().filter(|(_, v)| v.is_none()).map(|(n, _)| *n).collect();
    if !missing.is_empty() {
        return Err(Failure::Usage(format!("missing rate parameters: {}", missing.join(", "))));
    }
    let v = |i: usize| fields[i].1.unwrap();
    let input = CvRateInput {
        v_a: v(0),
        t: v(1),
        xi_a: v(2),
        eta: v(3),
        v_el: v(4),
        beta: v(5),
        symbol_rate: v(6),
        trust: flags.trust.or(base.trust).map(Into::into).unwrap_or_default(),
    };
    input.validate().map_err(Failure::usage)?;
    Ok(input)
}

/// Parsed `--sweep` argument.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl std::str::FromStr for Sweep {
    type Err = Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        let bad = || Error::Config(format!("sweep `{s}` is not <param>:<lo>:<hi>:<n>"));
        let parts: Vec<&str> = s.split(':').collect();
        let [param, lo, hi, n] = parts[..] else {
            return Err(bad());
        };
        let sweep = Sweep {
            param: param.to_string(),
            lo: lo.parse().map_err(|_| bad())?,
            hi: hi.parse().map_err(|_| bad())?,
            n: n.parse().map_err(|_| bad())?,
        };
        if sweep.n < 2 {
            return Err(Error::Config("sweep needs at least 2 points".into()));
        }
        Ok(sweep)
    }
}

impl Sweep {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|k| self.lo + (self.hi - self.lo) * k as f64 / (self.n - 1) as f64)
    }

    fn apply(&self, base: &CvRateInput, value: f64) -> crate::Result<CvRateInput> {
        let mut inp = *base;
        match self.param.as_str() {
            "v_a" => inp.v_a = value,
            "t" => inp.t = value,
            "loss_db" => inp.t = crate::channel::db_to_transmittance(value)?,
            "xi_a" | "xi" => inp.xi_a = value,
            "eta" => inp.eta = value,
            "v_el" => inp.v_el = value,
            "beta" => inp.beta = value,
            other => return Err(Error::Config(format!("cannot sweep `{other}`"))),
        }
        inp.validate()?;
        Ok(inp)
    }
}

fn rate(mode: Protocol, config: Option<&PathBuf>, flags: &CvFlags, sweep: Option<&str>, out: &mut dyn Write) -> CliResult<()> {
    match mode {
        Protocol::Cv => {
            let input = merge_cv(config, flags)?;
            if let Some(spec) = sweep {
                let sweep: Sweep = spec.parse().map_err(Failure::usage)?;
                let mut csv = format!("{},i_ab,chi_e,skr_per_symbol,skr_bps\n", sweep.param);
                for v in sweep.values() {
                    let inp = sweep.apply(&input, v).map_err(Failure::usage)?;
                    let r = skr_cv_asymptotic(&inp).map_err(Failure::runtime)?;
                    csv.push_str(&format!("{v},{},{},{},{}\n", r.i_ab, r.chi_e, r.skr_per_symbol, r.skr_bps));
                }
                return out.write_all(csv.as_bytes()).map_err(Failure::runtime);
            }
            let r = skr_cv_asymptotic(&input).map_err(Failure::runtime)?;
            out.write_all(to_json(&envelope("rate cv", None, &input, r)).as_bytes()).map_err(Failure::runtime)
        }
        Protocol::Dv => {
            if sweep.is_some() {
                return Err(Failure::usage("--sweep is only available for cv"));
            }
            let path = config.ok_or_else(|| Failure::usage("rate dv needs --config with block statistics"))?;
            let input: DvRateInput = read_json(path)?;
            input.validate().map_err(Failure::usage)?;
            let r = skr_dv_finite(&input).map_err(Failure::runtime)?;
            out.write_all(to_json(&envelope("rate dv", None, &input, r)).as_bytes()).map_err(Failure::runtime)
        }
    }
}

fn plan(config: &Path, dest: Option<&PathBuf>, out: &mut dyn Write) -> CliResult<()> {
    let net: Network = read_json(config)?;
    for l in &net.links {
        l.validate().map_err(Failure::usage)?;
    }
    let plan = best_path(&net, &net.src, &net.dst).map_err(|e| match e {
        Error::UnknownNode(_) | Error::Config(_) => Failure::usage(e),
        e => Failure::runtime(e),
    })?;
    let json = to_json(&envelope("plan", None, &net, plan));
    if let Some(p) = dest {
        write_file(p, &json)?;
    }
    out.write_all(json.as_bytes()).map_err(Failure::runtime)
}

/// Constellation operating point: `V_A ≈ 12.4` SNU on the baseline channel.
pub fn constellation_config(seed: u64) -> CvExperimentConfig {
    CvExperimentConfig {
        v_a: 12.4,
        n_symbols: 20_000,
        batches: 1,
        ..CvExperimentConfig::baseline(seed)
    }
}

fn plot_data(run: &RunArgs, out: &mut dyn Write) -> CliResult<()> {
    let cfg = cv_config(run, Some(constellation_config(run.seed.unwrap_or(1))))?;
    let result = run_cv_experiment(&cfg).map_err(Failure::runtime)?;
    let csv = constellation_csv(&result.constellation);
    match &run.out {
        Some(p) => {
            write_file(p, &csv)?;
            let summary = envelope("plot-data", Some(cfg.seed), &cfg, p.display().to_string());
            out.write_all(to_json(&summary).as_bytes()).map_err(Failure::runtime)
        }
        None => out.write_all(csv.as_bytes()).map_err(Failure::runtime),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            if code == EXIT_OK {
                let _ = write!(out, "{e}");
            } else {
                let _ = write!(err, "{e}");
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Simulate { mode, run } => simulate(*mode, run, out),
        Command::Rate {
            mode,
            config,
            cv,
            sweep,
        } => rate(*mode, config.as_ref(), cv, sweep.as_deref(), out),
        Command::Plan { config, out: dest } => plan(config, dest.as_ref(), out),
        Command::PlotData { run } => plot_data(run, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_RUNTIME
        }
    }
}
