//! Command-line front end: config loading, the four subcommands, CSV and
//! manifest output. Exit codes: 0 success, 2 configuration error,
//! 3 pipeline or output failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuits::{AncillaKind, NetworkConfig, Topology};
use crate::detection::herald_set;
use crate::error::Error;
use crate::optimizer::{grid_scan, log_grid, noise_sweep_with, Bounds, RateSurface, SearchSettings};
use crate::validation::{d4_suite, oracle_suite, vacuum_suite};

#[derive(Debug, Parser)]
#[command(name = "qswap", version, about = "Qudit entanglement-swapping key-rate simulator")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rate surface over the (s, ancilla) grid.
    Scan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimised rate against crosstalk for each configured series.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Perfect heralding patterns for the configured dimension.
    Heralds {
        #[arg(long, required_unless_present = "d")]
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "config")]
        d: Option<usize>,
        /// Override the measurement topology.
        #[arg(long, value_enum)]
        topology: Option<TopologyArg>,
        #[arg(long)]
        json: bool,
    },
    /// Gaussian vs Fock cross-checks.
    Validate {
        #[arg(long, value_enum, default_value = "small")]
        scale: Scale,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TopologyArg {
    Default,
    PerLevel,
    Unmixed,
}

impl From<TopologyArg> for Topology {
    fn from(t: TopologyArg) -> Self {
        match t {
            TopologyArg::Default => Topology::Default,
            TopologyArg::PerLevel => Topology::PerLevel,
            TopologyArg::Unmixed => Topology::Unmixed,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Scale {
    Small,
    Vacuum,
    D4,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Pipeline(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Pipeline(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(m) => CliError::Config(m),
            other => CliError::Pipeline(other.to_string()),
        }
    }
}

/// Explicit values or `{"logspace": [lo, hi, n]}` / `{"linspace": [lo, hi, n]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Log { logspace: (f64, f64, usize) },
    Lin { linspace: (f64, f64, usize) },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::Values(v) => v.clone(),
            Grid::Log { logspace: (a, b, n) } => log_grid(*a, *b, *n),
            Grid::Lin { linspace: (a, b, n) } => match n {
                0 => Vec::new(),
                1 => vec![*a],
                _ => (0..*n).map(|i| a + (b - a) * i as f64 / (*n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub s_grid: Grid,
    pub ancilla_grid: Grid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Series {
    pub d: usize,
    #[serde(default)]
    pub k: usize,
    pub ancilla: AncillaKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub thetas: Grid,
    pub series: Vec<Series>,
    #[serde(default)]
    pub s_bounds: Option<(f64, f64)>,
    #[serde(default)]
    pub ancilla_bounds: Option<(f64, f64)>,
    #[serde(default = "yes")]
    pub warm_start: bool,
    #[serde(default)]
    pub coarse: Option<usize>,
    #[serde(default)]
    pub rounds: Option<usize>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: NetworkConfig,
    #[serde(default)]
    pub scan: Option<ScanSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

/// Line of the first `"field"` key in the config text.
fn field_line(text: &str, field: &str) -> Option<usize> {
    let key = format!("\"{field}\"");
    text.lines().position(|l| l.contains(&key)).map(|i| i + 1)
}

/// Prefix a semantic error with the line of the first backticked field it
/// names.
fn anchored(path: &Path, text: &str, msg: &str) -> CliError {
    let field = msg.split('`').nth(1);
    match field.and_then(|f| field_line(text, f)) {
        Some(line) => CliError::Config(format!("{}:{line}: {msg}", path.display())),
        None => CliError::Config(format!("{}: {msg}", path.display())),
    }
}

pub fn parse_config(path: &Path, text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))?;
    cfg.network.validate().map_err(|e| anchored(path, text, &e.to_string()))?;
    if let Some(sw) = &cfg.sweep {
        let th = sw.thetas.values();
        if th.is_empty() || th.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || th.windows(2).any(|w| w[1] < w[0]) {
            return Err(anchored(path, text, "`thetas` must be a non-empty sorted list of non-negative values"));
        }
        if sw.series.is_empty() {
            return Err(anchored(path, text, "`series` must name at least one configuration"));
        }
        for s in &sw.series {
            series_config(&cfg.network, s).validate().map_err(|e| anchored(path, text, &e.to_string()))?;
        }
    }
    if let Some(sc) = &cfg.scan {
        for (name, g) in [("s_grid", &sc.s_grid), ("ancilla_grid", &sc.ancilla_grid)] {
            let v = g.values();
            if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(anchored(path, text, &format!("`{name}` must be non-empty with finite values ≥ 0")));
            }
        }
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<(RunConfig, Vec<u8>), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| CliError::Config(format!("{}: not UTF-8", path.display())))?;
    Ok((parse_config(path, text)?, bytes))
}

fn series_config(base: &NetworkConfig, s: &Series) -> NetworkConfig {
    let mut c = base.clone();
    c.d = s.d;
    c.k = if s.k == 0 { s.d } else { s.k };
    c.ancilla = s.ancilla;
    c
}

/// 17 significant digits, round-trip exact.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn ancilla_tag(a: AncillaKind) -> &'static str {
    match a {
        AncillaKind::Wcs => "wcs",
        AncillaKind::Tms => "tms",
        AncillaKind::Hsps => "hsps",
        AncillaKind::IdealOracle => "ideal",
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<String>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn write_out(dir: &Path, name: &str, body: &str) -> Result<(), CliError> {
    fs::write(dir.join(name), body).map_err(|e| CliError::Pipeline(format!("{}: {e}", dir.join(name).display())))
}

fn finish_run(dir: &Path, command: &str, config: &[u8], started: u64, outputs: Vec<String>) -> Result<Vec<PathBuf>, CliError> {
    let manifest = RunManifest {
        tool: "qswap".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config_sha256: sha256_hex(config),
        started_unix: started,
        finished_unix: now(),
        outputs: outputs.clone(),
    };
    let body = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Pipeline(e.to_string()))?;
    write_out(dir, "manifest.json", &(body + "\n"))?;
    let mut paths: Vec<PathBuf> = outputs.iter().map(|o| dir.join(o)).collect();
    paths.push(dir.join("manifest.json"));
    Ok(paths)
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Pipeline(format!("{}: {e}", dir.display())))
}

pub fn surface_csv(surf: &RateSurface) -> String {
    let mut out = String::from("s,ancilla_param,bits_per_round,accept_probability,sift_probability,H_key,H_test\n");
    for row in &surf.cells {
        for c in row {
            let f = [c.s, c.ancilla_param, c.bits_per_round, c.accept_probability, c.sift_probability, c.h_key, c.h_test];
            out += &f.iter().map(|v| fmt17(*v)).collect::<Vec<_>>().join(",");
            out.push('\n');
        }
    }
    out
}

/// Writes `scan.csv` and `manifest.json` under `out`.
pub fn cmd_scan(config: &Path, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let started = now();
    let (cfg, bytes) = load_config(config)?;
    let scan = cfg.scan.as_ref().ok_or_else(|| CliError::Config(format!("{}: missing `scan` section", config.display())))?;
    let surf = grid_scan(&cfg.network, &scan.s_grid.values(), &scan.ancilla_grid.values())?;
    prepare_dir(out)?;
    write_out(out, "scan.csv", &surface_csv(&surf))?;
    let failed: Vec<&str> = surf.cells.iter().flatten().filter_map(|c| c.error.as_deref()).collect();
    if !failed.is_empty() {
        let mut log = String::new();
        for row in &surf.cells {
            for c in row {
                if let Some(e) = &c.error {
                    let _ = writeln!(log, "{},{},{e}", fmt17(c.s), fmt17(c.ancilla_param));
                }
            }
        }
        write_out(out, "scan_failures.csv", &log)?;
        return finish_run(out, "scan", &bytes, started, vec!["scan.csv".into(), "scan_failures.csv".into()]);
    }
    finish_run(out, "scan", &bytes, started, vec!["scan.csv".into()])
}

/// One `sweep_d{d}_k{k}_{ancilla}.csv` per series plus `manifest.json`.
pub fn cmd_sweep(config: &Path, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let started = now();
    let (cfg, bytes) = load_config(config)?;
    let sw = cfg.sweep.as_ref().ok_or_else(|| CliError::Config(format!("{}: missing `sweep` section", config.display())))?;
    let thetas = sw.thetas.values();
    let mut settings = SearchSettings::default();
    if let Some(c) = sw.coarse {
        settings.coarse = c;
    }
    if let Some(r) = sw.rounds {
        settings.rounds = r;
    }
    prepare_dir(out)?;
    let mut outputs = Vec::new();
    for s in &sw.series {
        let net = series_config(&cfg.network, s);
        let mut bounds = Bounds::default_for(net.ancilla);
        if let Some(b) = sw.s_bounds {
            bounds.s = b;
        }
        if let Some(b) = sw.ancilla_bounds {
            bounds.ancilla = b;
        }
        let res = noise_sweep_with(&net, &thetas, &bounds, &settings, sw.warm_start)?;
        let mut csv = String::from("theta,best_s,best_ancilla_param,bits_per_round,evaluations\n");
        for r in &res {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                fmt17(r.theta),
                fmt17(r.s),
                fmt17(r.ancilla_param),
                fmt17(r.bits_per_round),
                r.evaluations
            );
        }
        let name = format!("sweep_d{}_k{}_{}.csv", net.d, net.subspace(), ancilla_tag(net.ancilla));
        write_out(out, &name, &csv)?;
        outputs.push(name);
    }
    finish_run(out, "sweep", &bytes, started, outputs)
}

#[derive(Debug, Clone, Serialize)]
pub struct HeraldReport {
    pub d: usize,
    pub topology: Topology,
    pub perfect: Vec<crate::detection::HeraldPattern>,
    pub other_maximally_entangled: usize,
}

pub fn cmd_heralds(d: usize, topology: Topology, json: bool) -> Result<String, CliError> {
    if !(2..=4).contains(&d) {
        return Err(CliError::Config(format!("`d` = {d} must be 2, 3 or 4")));
    }
    let hs = herald_set(d, topology)?;
    let rep = HeraldReport {
        d,
        topology,
        perfect: hs.perfect.clone(),
        other_maximally_entangled: hs.other_maxent.len(),
    };
    if json {
        return serde_json::to_string_pretty(&rep).map_err(|e| CliError::Pipeline(e.to_string()));
    }
    let mut s = format!("d = {d}: {} perfect heralds\n", rep.perfect.len());
    for h in &rep.perfect {
        let clicks: Vec<String> = h.clicks.iter().map(|(g, p)| format!("{g}.{p}")).collect();
        let _ = writeln!(
            s,
            "  clicks [{}]  fidelity {:.12}  corrected {:.12}  bob relabel {:?}",
            clicks.join(" "),
            h.fidelity,
            h.corrected_fidelity,
            h.permutation
        );
    }
    let _ = writeln!(s, "  other maximally entangled heralds: {}", rep.other_maximally_entangled);
    Ok(s)
}

pub fn cmd_validate(scale: Scale, json: bool) -> Result<String, CliError> {
    let value = match scale {
        Scale::Small => serde_json::to_value(oracle_suite(50, 1, 12, 15)?),
        Scale::Vacuum => serde_json::to_value(serde_json::json!({ "max_deviation": vacuum_suite(6)? })),
        Scale::D4 => serde_json::to_value(d4_suite()?),
    }
    .map_err(|e| CliError::Pipeline(e.to_string()))?;
    if json {
        return serde_json::to_string_pretty(&value).map_err(|e| CliError::Pipeline(e.to_string()));
    }
    let mut s = String::new();
    if let Some(obj) = value.as_object() {
        for (k, v) in obj {
            let _ = writeln!(s, "{k}: {v}");
        }
    }
    Ok(s)
}

/// Parse arguments, run, and return the process exit code.
pub fn run(cli: Cli) -> i32 {
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return 2;
        }
    }
    let result = match cli.command {
        Command::Scan { config, out } => cmd_scan(&config, &out).map(|p| list(&p)),
        Command::Sweep { config, out } => cmd_sweep(&config, &out).map(|p| list(&p)),
        Command::Heralds { config, d, topology, json } => (|| {
            let (d, topo) = match (config, d) {
                (Some(path), _) => {
                    let (cfg, _) = load_config(&path)?;
                    (cfg.network.d, cfg.network.topology)
                }
                (None, Some(d)) => (d, Topology::Default),
                (None, None) => return Err(CliError::Config("need --config or --d".into())),
            };
            cmd_heralds(d, topology.map_or(topo, Into::into), json)
        })(),
        Command::Validate { scale, json } => cmd_validate(scale, json),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn list(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| format!("{}\n", p.display())).collect()
}
