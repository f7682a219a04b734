//! `imfa` — link-level simulation and analytical bounds for index-modulated
//! fluid-antenna transmission.
//!
//! Subcommands: `ber-sim`, `ber-bound`, `capacity`, `exit-chart`, `wef`.
//! Results are CSV (or JSON for `wef`) plus a `.manifest.json` sidecar.

mod output;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use imfa_core::analysis::{
    capacity_mc, exit_curve, exit_trajectory, spc_ber_bound, turbo_ber_bound, uncoded_union_bound,
    BoundSpec,
};
use imfa_core::conv::{compute_iowef, compute_wef, RscCode};
use imfa_core::im::ImConfig;
use imfa_core::sim::{noise_var_from_snr_db, ExperimentConfig, Scheme};
use imfa_core::turbo::{turbo_cwef, Interleaver, TurboCode};
use imfa_core::{Constellation, Correlation, Quadrature};

use output::{fmt_float, Csv, ManifestWriter};

#[derive(Parser)]
#[command(
    name = "imfa",
    version,
    about = "Index-modulated fluid-antenna link simulator and bound toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo BER simulation (uncoded, SPC or turbo scheme)
    BerSim(BerSimArgs),
    /// Analytical BER bounds
    BerBound(BerBoundArgs),
    /// Discrete-input capacity estimate
    Capacity(CapacityArgs),
    /// EXIT curve and decoding trajectory
    ExitChart(ExitArgs),
    /// Weight enumerator dump (event spectrum and optional IOWEF)
    Wef(WefArgs),
}

#[derive(Args, Clone)]
struct CommonLink {
    /// Number of FA ports N (power of two)
    #[arg(long = "ports")]
    ports: Option<usize>,
    /// Modulation order M
    #[arg(long = "mod")]
    mod_order: Option<usize>,
    /// FA aperture W in wavelengths
    #[arg(long = "fa-size")]
    fa_size: Option<f64>,
    /// SNR grid in dB: single value or start:step:stop
    #[arg(long = "snr")]
    snr: Option<String>,
}

#[derive(Args)]
struct BerSimArgs {
    #[command(flatten)]
    link: CommonLink,
    /// Transmission scheme
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Cap on information-bearing intervals per SNR point
    #[arg(long)]
    trials: Option<u64>,
    /// Early-stop bit-error target per SNR point
    #[arg(long = "min-errors")]
    min_errors: Option<u64>,
    /// Octal generators, comma separated, feedback last (e.g. 13,15,17,11)
    #[arg(long = "gen")]
    generators: Option<String>,
    /// Block/interleaver length in symbols
    #[arg(long)]
    interleaver: Option<usize>,
    /// Turbo decoder iterations
    #[arg(long)]
    iters: Option<usize>,
    /// Cap on parallel worker threads
    #[arg(long)]
    workers: Option<usize>,
    /// JSON config file; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path
    #[arg(long, default_value = "ber.csv")]
    out: PathBuf,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum SchemeArg {
    Uncoded,
    Spc,
    Turbo,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Uncoded => Scheme::Uncoded,
            SchemeArg::Spc => Scheme::Spc,
            SchemeArg::Turbo => Scheme::Turbo,
        }
    }
}

#[derive(Args)]
struct BerBoundArgs {
    #[command(flatten)]
    link: CommonLink,
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long = "gen")]
    generators: Option<String>,
    /// Non-zero spectrum terms kept in the SPC bound
    #[arg(long, default_value_t = 10)]
    terms: usize,
    /// Block length for the turbo enumerator
    #[arg(long)]
    interleaver: Option<usize>,
    /// Turbo input-weight truncation
    #[arg(long, default_value_t = 8)]
    wmax: u32,
    /// Turbo parity-weight truncation
    #[arg(long, default_value_t = 30)]
    zmax: u32,
    #[arg(long, default_value = "bound.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct CapacityArgs {
    #[command(flatten)]
    link: CommonLink,
    /// Monte Carlo samples per SNR point
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "capacity.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct ExitArgs {
    #[command(flatten)]
    link: CommonLink,
    #[arg(long = "gen")]
    generators: Option<String>,
    /// Interleaver length in symbols
    #[arg(long)]
    interleaver: Option<usize>,
    /// Trajectory iterations
    #[arg(long, default_value_t = 15)]
    iters: usize,
    /// Blocks averaged per point
    #[arg(long, default_value_t = 2)]
    blocks: usize,
    /// Number of a priori grid points on [0, k_TCM]
    #[arg(long = "ia-steps", default_value_t = 11)]
    ia_steps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Curve CSV path; the trajectory goes to <out>.trajectory.csv
    #[arg(long, default_value = "exit.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct WefArgs {
    /// Octal generators, comma separated, feedback last
    #[arg(long = "gen")]
    generators: String,
    /// Maximum output weight of the event spectrum
    #[arg(long, default_value_t = 20)]
    dmax: usize,
    /// Optional block length: also dump the length-L IOWEF
    #[arg(long)]
    interleaver: Option<usize>,
    #[arg(long, default_value_t = 8)]
    wmax: u32,
    #[arg(long, default_value_t = 30)]
    zmax: u32,
    #[arg(long, default_value = "wef.json")]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BerSim(a) => cmd_ber_sim(a),
        Command::BerBound(a) => cmd_ber_bound(a),
        Command::Capacity(a) => cmd_capacity(a),
        Command::ExitChart(a) => cmd_exit(a),
        Command::Wef(a) => cmd_wef(a),
    }
}

fn parse_snr_grid(s: &str) -> Result<Vec<f64>> {
    if let Some((a, rest)) = s.split_once(':') {
        let (b, c) = rest
            .split_once(':')
            .context("SNR grid must be start:step:stop or a single value")?;
        let start: f64 = a.trim().parse().context("bad SNR start")?;
        let step: f64 = b.trim().parse().context("bad SNR step")?;
        let stop: f64 = c.trim().parse().context("bad SNR stop")?;
        if step <= 0.0 {
            bail!("SNR step must be positive");
        }
        let mut grid = Vec::new();
        let mut x = start;
        while x <= stop + 1e-9 {
            grid.push(x);
            x += step;
        }
        if grid.is_empty() {
            bail!("empty SNR grid");
        }
        Ok(grid)
    } else {
        Ok(vec![s.trim().parse().context("bad SNR value")?])
    }
}

fn parse_generators(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|t| {
            u32::from_str_radix(t.trim(), 8)
                .with_context(|| format!("`{t}` is not an octal literal in --gen"))
        })
        .collect()
}

fn cmd_ber_sim(a: BerSimArgs) -> Result<()> {
    let manifest = ManifestWriter::start("ber-sim");
    // config file first, flags override
    let mut file_cfg: Option<ExperimentConfig> = None;
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        file_cfg = Some(serde_json::from_str(&text).context("parsing config JSON")?);
    }
    let gens = a.generators.as_deref().map(parse_generators).transpose()?;
    let snr = a.link.snr.as_deref().map(parse_snr_grid).transpose()?;
    let config = match file_cfg {
        Some(mut c) => {
            if let Some(s) = a.scheme {
                c.scheme = s.into();
            }
            if let Some(v) = a.link.ports {
                c.n_ports = v;
            }
            if let Some(v) = a.link.mod_order {
                c.mod_order = v;
            }
            if let Some(v) = a.link.fa_size {
                c.fa_size = v;
            }
            if let Some(v) = snr {
                c.snr_grid_db = v;
            }
            if let Some(v) = a.seed {
                c.seed = v;
            }
            if let Some(v) = a.trials {
                c.max_trials = v;
            }
            if let Some(v) = a.min_errors {
                c.min_errors = v;
            }
            if let Some(v) = gens {
                c.generators = Some(v);
            }
            if let Some(v) = a.interleaver {
                c.interleaver_len = Some(v);
            }
            if let Some(v) = a.iters {
                c.turbo_iters = Some(v);
            }
            c
        }
        None => ExperimentConfig {
            scheme: a
                .scheme
                .map(Scheme::from)
                .context("missing --scheme (or provide --config)")?,
            n_ports: a.link.ports.context("missing --ports")?,
            mod_order: a.link.mod_order.context("missing --mod")?,
            fa_size: a.link.fa_size.unwrap_or(1.0),
            snr_grid_db: snr.context("missing --snr")?,
            max_trials: a.trials.unwrap_or(1_000_000),
            min_errors: a.min_errors.unwrap_or(100),
            seed: a.seed.unwrap_or(1),
            generators: gens,
            interleaver_len: a.interleaver,
            turbo_iters: a.iters,
        },
    };
    config.validate()?;
    let curve = match a.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .context("building worker pool")?;
            pool.install(|| imfa_core::sim::run(&config))?
        }
        None => imfa_core::sim::run(&config)?,
    };
    let mut csv = Csv::new(&["snr_db", "ber", "bit_errors", "bits_sent", "std_error"]);
    for p in &curve.points {
        csv.row(&[
            fmt_float(p.snr_db),
            fmt_float(p.ber),
            p.bit_errors.to_string(),
            p.bits_sent.to_string(),
            fmt_float(p.mc_std_error),
        ]);
    }
    csv.write(&a.out)?;
    manifest.finish(&curve.config, Some(curve.config.seed), &[a.out.clone()])?;
    eprintln!(
        "ber-sim: {} point(s) in {} ms -> {}",
        curve.points.len(),
        curve.wall_time_ms,
        a.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct BoundConfig {
    scheme: String,
    n_ports: usize,
    mod_order: usize,
    fa_size: f64,
    snr_grid_db: Vec<f64>,
    generators: Option<Vec<u32>>,
    terms: usize,
    interleaver_len: Option<usize>,
    w_max: u32,
    z_max: u32,
}

fn cmd_ber_bound(a: BerBoundArgs) -> Result<()> {
    let manifest = ManifestWriter::start("ber-bound");
    let ports = a.link.ports.context("missing --ports")?;
    let mod_order = a.link.mod_order.context("missing --mod")?;
    let fa_size = a.link.fa_size.unwrap_or(1.0);
    let grid = parse_snr_grid(a.link.snr.as_deref().context("missing --snr")?)?;
    let cfg = ImConfig::new(ports, mod_order)?;
    let cons = Constellation::new(mod_order)?;
    let corr = if ports == 1 {
        Correlation::identity(1)
    } else {
        Correlation::jakes(ports, fa_size)?
    };
    let gens = a.generators.as_deref().map(parse_generators).transpose()?;
    let spec = BoundSpec {
        terms: a.terms,
        w_max: a.wmax,
        z_max: a.zmax,
    };
    let scheme: Scheme = a.scheme.into();
    // scheme-specific precomputation
    let code = match scheme {
        Scheme::Uncoded => None,
        _ => {
            Some(RscCode::new(&gens.clone().with_context(|| {
                format!("scheme {scheme} requires --gen")
            })?)?)
        }
    };
    let cwef = match scheme {
        Scheme::Turbo => {
            let ell = a
                .interleaver
                .context("turbo bound requires --interleaver")?;
            let code = code.as_ref().unwrap();
            let io = compute_iowef(code, ell, spec.w_max, spec.z_max)?;
            Some(turbo_cwef(&io, &io, ell, spec.w_max, spec.z_max)?)
        }
        _ => None,
    };
    let rule = Quadrature::default_rule();
    let mut csv = Csv::new(&["snr_db", "bound"]);
    for &snr in &grid {
        let nv = noise_var_from_snr_db(snr);
        let bound = match scheme {
            Scheme::Uncoded => uncoded_union_bound(&cfg, &corr, nv, &cons)?,
            Scheme::Spc => spc_ber_bound(code.as_ref().unwrap(), &cfg, &corr, nv, &cons, &spec)?,
            Scheme::Turbo => {
                turbo_ber_bound(cwef.as_ref().unwrap(), &cfg, &corr, nv, &cons, &rule)?
            }
        };
        csv.row(&[fmt_float(snr), fmt_float(bound)]);
    }
    csv.write(&a.out)?;
    let config = BoundConfig {
        scheme: scheme.to_string(),
        n_ports: ports,
        mod_order,
        fa_size,
        snr_grid_db: grid,
        generators: gens,
        terms: a.terms,
        interleaver_len: a.interleaver,
        w_max: a.wmax,
        z_max: a.zmax,
    };
    manifest.finish(&config, None, &[a.out.clone()])?;
    eprintln!("ber-bound -> {}", a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct CapacityConfig {
    n_ports: usize,
    mod_order: usize,
    fa_size: f64,
    snr_grid_db: Vec<f64>,
    samples: usize,
    seed: u64,
}

fn cmd_capacity(a: CapacityArgs) -> Result<()> {
    let manifest = ManifestWriter::start("capacity");
    let ports = a.link.ports.context("missing --ports")?;
    let mod_order = a.link.mod_order.context("missing --mod")?;
    let fa_size = a.link.fa_size.unwrap_or(1.0);
    let grid = parse_snr_grid(a.link.snr.as_deref().context("missing --snr")?)?;
    let cfg = ImConfig::new(ports, mod_order)?;
    let cons = Constellation::new(mod_order)?;
    let corr = if ports == 1 {
        Correlation::identity(1)
    } else {
        Correlation::jakes(ports, fa_size)?
    };
    let mut csv = Csv::new(&["snr_db", "capacity", "std_error"]);
    for (i, &snr) in grid.iter().enumerate() {
        let mut rng = imfa_core::sim::substream(a.seed, i as u64, 0);
        let est = capacity_mc(
            &cfg,
            &corr,
            noise_var_from_snr_db(snr),
            &cons,
            a.samples,
            &mut rng,
        )?;
        csv.row(&[
            fmt_float(snr),
            fmt_float(est.value),
            fmt_float(est.std_error),
        ]);
    }
    csv.write(&a.out)?;
    let config = CapacityConfig {
        n_ports: ports,
        mod_order,
        fa_size,
        snr_grid_db: grid,
        samples: a.samples,
        seed: a.seed,
    };
    manifest.finish(&config, Some(a.seed), &[a.out.clone()])?;
    eprintln!("capacity -> {}", a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct ExitConfig {
    n_ports: usize,
    mod_order: usize,
    fa_size: f64,
    snr_db: f64,
    generators: Vec<u32>,
    interleaver_len: usize,
    iters: usize,
    blocks: usize,
    ia_steps: usize,
    seed: u64,
}

fn cmd_exit(a: ExitArgs) -> Result<()> {
    let manifest = ManifestWriter::start("exit-chart");
    let ports = a.link.ports.context("missing --ports")?;
    let mod_order = a.link.mod_order.context("missing --mod")?;
    let fa_size = a.link.fa_size.unwrap_or(1.0);
    let grid = parse_snr_grid(a.link.snr.as_deref().context("missing --snr")?)?;
    if grid.len() != 1 {
        bail!("exit-chart expects a single --snr value");
    }
    let snr = grid[0];
    let gens = parse_generators(a.generators.as_deref().context("missing --gen")?)?;
    let ell = a.interleaver.context("missing --interleaver")?;
    let code = RscCode::new(&gens)?;
    let cfg = ImConfig::new(ports, mod_order)?;
    let cons = Constellation::new(mod_order)?;
    let corr = Correlation::jakes(ports, fa_size)?;
    let tc = TurboCode::new(code, Interleaver::random(ell, a.seed))?;
    let k_tcm = tc.info_bits_per_word() as f64;
    if a.ia_steps < 2 {
        bail!("--ia-steps must be at least 2");
    }
    let ia_grid: Vec<f64> = (0..a.ia_steps)
        .map(|i| k_tcm * i as f64 / (a.ia_steps - 1) as f64)
        .collect();
    let nv = noise_var_from_snr_db(snr);
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let curve = exit_curve(&tc, &cfg, &corr, nv, &cons, &ia_grid, a.blocks, &mut rng)?;
    let mut csv = Csv::new(&["i_a", "i_e"]);
    for p in &curve {
        csv.row(&[fmt_float(p.i_a), fmt_float(p.i_e)]);
    }
    csv.write(&a.out)?;
    let traj = exit_trajectory(&tc, &cfg, &corr, nv, &cons, a.iters, a.blocks, &mut rng)?;
    let traj_path = {
        let mut name = a.out.file_stem().unwrap_or_default().to_os_string();
        name.push(".trajectory.csv");
        a.out.with_file_name(name)
    };
    let mut csv = Csv::new(&["half_iteration", "i_e"]);
    for (i, v) in &traj {
        csv.row(&[i.to_string(), fmt_float(*v)]);
    }
    csv.write(&traj_path)?;
    let config = ExitConfig {
        n_ports: ports,
        mod_order,
        fa_size,
        snr_db: snr,
        generators: gens,
        interleaver_len: ell,
        iters: a.iters,
        blocks: a.blocks,
        ia_steps: a.ia_steps,
        seed: a.seed,
    };
    manifest.finish(&config, Some(a.seed), &[a.out.clone(), traj_path])?;
    eprintln!("exit-chart -> {}", a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct WefDump {
    generators: Vec<u32>,
    rate: String,
    memory: usize,
    num_states: usize,
    d_free: usize,
    spectrum: Vec<WefTerm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iowef: Option<IowefDump>,
}

#[derive(Serialize)]
struct WefTerm {
    d: usize,
    a: String,
}

#[derive(Serialize)]
struct IowefDump {
    block_len: usize,
    w_max: u32,
    z_max: u32,
    terms: Vec<IowefTerm>,
}

#[derive(Serialize)]
struct IowefTerm {
    w: u32,
    u: u32,
    z: u32,
    count: String,
}

fn cmd_wef(a: WefArgs) -> Result<()> {
    let manifest = ManifestWriter::start("wef");
    let gens = parse_generators(&a.generators)?;
    let code = RscCode::new(&gens)?;
    let spectrum = compute_wef(&code, a.dmax)?;
    let iowef = a
        .interleaver
        .map(|ell| -> Result<IowefDump> {
            let io = compute_iowef(&code, ell, a.wmax, a.zmax)?;
            Ok(IowefDump {
                block_len: ell,
                w_max: a.wmax,
                z_max: a.zmax,
                terms: io
                    .terms()
                    .map(|((w, z), c)| IowefTerm {
                        w,
                        u: w,
                        z,
                        count: c.to_string(),
                    })
                    .collect(),
            })
        })
        .transpose()?;
    let dump = WefDump {
        generators: gens.clone(),
        rate: format!("{}/{}", code.input_arity(), code.output_arity()),
        memory: code.memory(),
        num_states: code.num_states(),
        d_free: spectrum.d_free(),
        spectrum: spectrum
            .coefficients()
            .map(|(d, c)| WefTerm {
                d,
                a: c.to_string(),
            })
            .collect(),
        iowef,
    };
    let json = serde_json::to_vec_pretty(&dump)?;
    std::fs::write(&a.out, &json).with_context(|| format!("writing {}", a.out.display()))?;
    #[derive(Serialize)]
    struct WefConfig {
        generators: Vec<u32>,
        dmax: usize,
        interleaver: Option<usize>,
        wmax: u32,
        zmax: u32,
    }
    manifest.finish(
        &WefConfig {
            generators: gens,
            dmax: a.dmax,
            interleaver: a.interleaver,
            wmax: a.wmax,
            zmax: a.zmax,
        },
        None,
        &[a.out.clone()],
    )?;
    eprintln!("wef -> {}", a.out.display());
    Ok(())
}
