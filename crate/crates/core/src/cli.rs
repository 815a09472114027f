//! `csd-sim` commands: campaign runs with CSV output and plan inspection.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::allocator::{verify_allocation, Allocation, Engine, Mode};
use crate::config::{ConfigFile, ConfigFileError, RunManifest};
use crate::fixture::{self, FixtureName};
use crate::radio::watts_to_dbm;
use crate::scenario::{generate_drop, Scenario, SimConfig};
use crate::simkit::{run_campaign_with_threads, sweep_tau, CampaignResult, CampaignSpec, Scheme, SimError};

pub const THREADS_ENV: &str = "CSD_SIM_THREADS";

#[derive(Parser, Debug)]
#[command(name = "csd-sim", version, about = "Combined shared/dedicated D2D allocation simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a Monte-Carlo campaign and write fig3.csv, fig4.csv, tau_opt.csv
    /// and manifest.toml.
    Campaign {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        drops: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the neighbor relations, cliques and allocation plan of one drop.
    Inspect {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        drop: u64,
        /// Use a built-in scenario (fig1 or fig2) instead of a random drop.
        #[arg(long)]
        fixture: Option<FixtureName>,
        #[arg(long, value_parser = parse_scheme, default_value = "csd")]
        scheme: Scheme,
    },
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    match s {
        "csd" => Ok(Scheme::Csd),
        "max_sd" => Ok(Scheme::MaxSd),
        other => Err(format!("unknown scheme `{other}` (expected csd or max_sd)")),
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigFileError),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0} plan invariant violation(s)")]
    Violations(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigFileError::Io { .. }) | CliError::Io { .. } => 3,
            CliError::Config(_) | CliError::Invalid(_) => 2,
            CliError::Violations(_) => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_owned(),
        source,
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Campaign {
            config,
            out: dir,
            drops,
            seed,
        } => {
            let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok());
            cmd_campaign(&config, &dir, drops, seed, threads, out)
        }
        Command::Inspect {
            config,
            drop,
            fixture,
            scheme,
        } => cmd_inspect(&config, drop, fixture, scheme, out),
    }
}

fn fmt_db(v: f64) -> String {
    // avoid "-0.00"
    let r = (v * 100.0).round() / 100.0;
    format!("{:.2}", if r == 0.0 { 0.0 } else { r })
}

fn fmt_bits(v: f64) -> String {
    format!("{}", v.round() as i64)
}

pub const CSV_HEADER: &str = "scheme,num_pairs,pt_dbm,tau_n_db,mean_csum_bits,stderr,drops";

fn csv_rows<'a>(result: &'a CampaignResult, keep: impl Fn(f64) -> bool + 'a) -> String {
    let mut s = String::new();
    s.push_str(CSV_HEADER);
    s.push('\n');
    for c in result.cells.iter().filter(|c| keep(c.tau_n_db)) {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            c.scheme,
            c.num_pairs,
            fmt_db(c.pt_dbm),
            fmt_db(c.tau_n_db),
            fmt_bits(c.mean_csum),
            fmt_bits(c.stderr),
            c.drops
        )
        .unwrap();
    }
    s
}

/// Capacity against #pairs at the base τ_N.
pub fn fig3_csv(spec: &CampaignSpec, result: &CampaignResult) -> String {
    let tau = spec.base.tau_n_db;
    csv_rows(result, move |t| t == tau)
}

/// Capacity against τ_N over the listed sweep values.
pub fn fig4_csv(spec: &CampaignSpec, result: &CampaignResult) -> String {
    let taus = spec.tau_n_values_db.clone();
    csv_rows(result, move |t| taus.contains(&t))
}

/// Best τ_N per (scheme, #pairs, Pt) over the sweep values.
pub fn tau_opt_csv(spec: &CampaignSpec, result: &CampaignResult) -> String {
    let swept = CampaignResult {
        cells: result
            .cells
            .iter()
            .filter(|c| spec.tau_n_values_db.contains(&c.tau_n_db))
            .cloned()
            .collect(),
    };
    let mut s = String::from("scheme,num_pairs,pt_dbm,tau_opt_db,mean_csum_bits\n");
    for curve in sweep_tau(&swept) {
        let best = curve
            .points
            .iter()
            .find(|p| p.0 == curve.argmax_tau_db)
            .expect("argmax is one of the points");
        writeln!(
            s,
            "{},{},{},{},{}",
            curve.scheme,
            curve.num_pairs,
            fmt_db(curve.pt_dbm),
            fmt_db(curve.argmax_tau_db),
            fmt_bits(best.1)
        )
        .unwrap();
    }
    s
}

pub fn cmd_campaign(
    config: &Path,
    out_dir: &Path,
    drops: Option<usize>,
    seed: Option<u64>,
    threads: Option<usize>,
    log: &mut dyn Write,
) -> Result<(), CliError> {
    let file = ConfigFile::load(config)?;
    let mut spec = file.campaign_spec(config)?;
    if let Some(d) = drops {
        spec.drops = d;
        spec.base.drops = d;
    }
    if let Some(s) = seed {
        if i64::try_from(s).is_err() {
            return Err(CliError::Invalid("--seed must fit in a signed 64-bit integer".into()));
        }
        spec.base.rng_seed = s;
    }
    spec.validate()
        .map_err(|e| CliError::Invalid(format!("{}: {e}", config.display())))?;

    let started = Instant::now();
    let started_unix_s = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let result = run_campaign_with_threads(&spec, threads).map_err(|e| match e {
        SimError::Config(c) => CliError::Invalid(c.to_string()),
        SimError::Pool(p) => CliError::Invalid(p),
    })?;

    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let outputs = [
        ("fig3.csv", fig3_csv(&spec, &result)),
        ("fig4.csv", fig4_csv(&spec, &result)),
        ("tau_opt.csv", tau_opt_csv(&spec, &result)),
    ];
    for (name, body) in &outputs {
        let path = out_dir.join(name);
        std::fs::write(&path, body).map_err(io_err(&path))?;
    }

    let mut manifest = ConfigFile::from_spec(&spec);
    manifest.manifest = Some(RunManifest {
        config_path: config.display().to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix_s,
        wall_clock_s: started.elapsed().as_secs_f64(),
        outputs: outputs.iter().map(|(n, _)| n.to_string()).collect(),
    });
    let path = out_dir.join("manifest.toml");
    std::fs::write(&path, manifest.to_toml()).map_err(io_err(&path))?;

    writeln!(
        log,
        "{} cells, {} drops each, written to {}",
        result.cells.len(),
        spec.drops,
        out_dir.display()
    )
    .map_err(io_err(Path::new("<stdout>")))?;
    Ok(())
}

fn label_list(ids: &[usize]) -> String {
    let labels: Vec<String> = ids.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", labels.join(","))
}

/// Consecutive RBs with identical contents, as `(first, last, key)`.
fn runs<K: PartialEq>(keys: impl Iterator<Item = K>) -> Vec<(usize, usize, K)> {
    let mut out: Vec<(usize, usize, K)> = Vec::new();
    for (i, k) in keys.enumerate() {
        match out.last_mut() {
            Some(last) if last.2 == k => last.1 = i,
            _ => out.push((i, i, k)),
        }
    }
    out
}

/// Human-readable dump of one allocation.
pub fn render_inspection(scenario: &Scenario, config: &SimConfig, scheme: Scheme) -> (String, usize) {
    let engine = Engine::new(scenario, config);
    let alloc: Allocation = match scheme {
        Scheme::Csd => engine.csd(),
        Scheme::MaxSd => engine.max_sd(),
    };
    let mut s = String::new();
    let c = scenario.num_cues();
    let d = scenario.num_pairs();
    writeln!(
        s,
        "scheme {scheme}: {c} CUEs, {d} pairs, n_s = {}, n_d = {}, Pt(CUE) = {} dBm, Pt(DUE, dedicated) = {} dBm, tau_N = {} dB",
        config.n_s,
        config.n_d,
        fmt_db(config.pt_cue_dbm),
        fmt_db(config.pt_due_dedicated_dbm),
        fmt_db(config.tau_n_db)
    )
    .unwrap();
    writeln!(s, "labels are 1-based").unwrap();

    writeln!(s, "\nCUE ownership of the shared region:").unwrap();
    for (z, r) in engine.cue_ranges.iter().enumerate() {
        writeln!(s, "  CUE {}: RBs {}..{} ({} RBs)", z + 1, r.start, r.end, r.len()).unwrap();
    }
    if d > 0 {
        writeln!(s, "\nCUE neighbors (row CUE, column pair; 1 = may not reuse):").unwrap();
        for z in 0..c {
            let row: Vec<&str> = (0..d)
                .map(|j| if engine.relations.cue_neighbor[(z, j)] { "1" } else { "0" })
                .collect();
            writeln!(s, "  CUE {:>3}: {}", z + 1, row.join(" ")).unwrap();
        }
        writeln!(s, "\nDUE adjacency (1 = mutual neighbors):").unwrap();
        for i in 0..d {
            let row: Vec<&str> = (0..d)
                .map(|j| if engine.relations.due_adjacency[(i, j)] { "1" } else { "0" })
                .collect();
            writeln!(s, "  pair {:>3}: {}", i + 1, row.join(" ")).unwrap();
        }
        if let Some(modes) = &alloc.modes {
            let shared: Vec<usize> = (0..d).filter(|&j| modes[j] == Mode::Shared).collect();
            writeln!(s, "\nmodes: shared {}, others dedicated", label_list(&shared)).unwrap();
        }
        writeln!(s, "\nsubgraphs and maximal cliques:").unwrap();
        for (z, sg) in alloc.subgraphs.shared.iter().enumerate() {
            let cl: Vec<String> = alloc.cliques.shared[z].iter().map(|k| label_list(k)).collect();
            writeln!(
                s,
                "  G^s,{}: vertices {}  cliques [{}]  N_mc = {}",
                z + 1,
                label_list(&sg.vertices),
                cl.join(" "),
                cl.len()
            )
            .unwrap();
        }
        for (z, sg) in alloc.subgraphs.dedicated.iter().enumerate() {
            let cl: Vec<String> = alloc.cliques.dedicated[z].iter().map(|k| label_list(k)).collect();
            writeln!(
                s,
                "  G^d,{}: vertices {}  cliques [{}]  N_mc = {}  default RBs = {}",
                z + 1,
                label_list(&sg.vertices),
                cl.join(" "),
                cl.len(),
                alloc.quotas[z]
            )
            .unwrap();
        }

        writeln!(s, "\nshared region plan:").unwrap();
        let keyed = alloc.plan.shared.iter().map(|rb| (rb.owner, rb.transmitters.clone()));
        for (a, b, (owner, tx)) in runs(keyed) {
            let list: Vec<String> = tx
                .iter()
                .map(|t| format!("pair {} @ {} dBm", t.pair + 1, fmt_db(watts_to_dbm(t.power_w))))
                .collect();
            writeln!(s, "  RBs {a}..={b} owner CUE {}: {}", owner + 1, or_none(&list)).unwrap();
        }
        writeln!(s, "\ndedicated region plan:").unwrap();
        let keyed = alloc.plan.dedicated.iter().map(|rb| (rb.owner, rb.transmitters.clone()));
        for (a, b, (owner, tx)) in runs(keyed) {
            let list: Vec<String> = tx
                .iter()
                .map(|t| format!("pair {} @ {} dBm", t.pair + 1, fmt_db(watts_to_dbm(t.power_w))))
                .collect();
            let who = owner.map(|o| format!("pair {}", o + 1)).unwrap_or_else(|| "unassigned".into());
            writeln!(s, "  RBs {a}..={b} owner {who}: {}", or_none(&list)).unwrap();
        }

        writeln!(s, "\nper-pair capacity (bits per frame):").unwrap();
        for (j, bits) in alloc.report.per_pair.iter().enumerate() {
            writeln!(s, "  pair {}: {}", j + 1, fmt_bits(*bits)).unwrap();
        }
    }
    writeln!(
        s,
        "\nC^s = {}  C^d = {}  C = {}",
        fmt_bits(alloc.report.c_shared),
        fmt_bits(alloc.report.c_dedicated),
        fmt_bits(alloc.report.c_sum)
    )
    .unwrap();

    let violations = verify_allocation(&engine, &alloc);
    if violations.is_empty() {
        writeln!(s, "plan invariants: ok").unwrap();
    } else {
        writeln!(s, "plan invariants: {} violation(s)", violations.len()).unwrap();
        for v in &violations {
            writeln!(s, "  {v}").unwrap();
        }
    }
    (s, violations.len())
}

fn or_none(list: &[String]) -> String {
    if list.is_empty() {
        "no D2D transmitters".into()
    } else {
        list.join(", ")
    }
}

pub fn cmd_inspect(
    config: &Path,
    drop_index: u64,
    fixture_name: Option<FixtureName>,
    scheme: Scheme,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let file = ConfigFile::load(config)?;
    let (scenario, cfg, header) = match fixture_name {
        Some(name) => {
            let f = fixture::load(name);
            let header = format!("fixture {}: {}\n", f.name, f.summary);
            (f.scenario, f.config, header)
        }
        None => {
            let s = generate_drop(&file.sim, drop_index);
            (s, file.sim.clone(), format!("drop {drop_index} (seed {})\n", file.sim.rng_seed))
        }
    };
    let (text, violations) = render_inspection(&scenario, &cfg, scheme);
    let stdout = Path::new("<stdout>");
    out.write_all(header.as_bytes()).map_err(io_err(stdout))?;
    out.write_all(text.as_bytes()).map_err(io_err(stdout))?;
    if violations > 0 {
        return Err(CliError::Violations(violations));
    }
    Ok(())
}
