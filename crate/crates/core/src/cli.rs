//! Command-line front end: `fit`, `simulate`, `tcd`, `synth` and `validate`.
//!
//! Exit codes: 0 success, 2 unreadable or invalid input, 3 data that cannot be
//! modelled (incompatible boreholes, missing chain, bad sample index), 4
//! numerical failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fieldsim::{cross_section, Simulator};
use crate::gauss::Smoothness;
use crate::io;
use crate::likelihood::{tcd, LayerParams};
use crate::mcmc::{run_chain, select_most_likely, Model, PosteriorSample};
use crate::sequence::{BoreholeObservation, Facies, ParentSequence};
use crate::synth::SyntheticScenario;

#[derive(Debug, Parser)]
#[command(name = "strata", version, about = "Stratigraphic sequence modelling from borehole logs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the posterior sampler and write the chain to the output directory.
    Fit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        n_iter: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        thin: Option<usize>,
        /// Print the starting values and exit.
        #[arg(long)]
        dry_run: bool,
    },
    /// Simulate layer thicknesses on the configured grid and/or transect.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Chain directory written by `fit`.
        #[arg(long)]
        chain: Option<PathBuf>,
        /// `most-likely` or a 0-based sample index.
        #[arg(long, default_value = "most-likely")]
        select: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Posterior thickness distribution of one facies against the observed one.
    Tcd {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        facies: String,
        /// 1-based parent layer; defaults to the first layer of the facies.
        #[arg(long)]
        layer: Option<usize>,
        #[arg(long)]
        z_max: Option<f64>,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic data set with its truth and a matching run file.
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 12)]
        n_boreholes: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Check boreholes against the parent sequence.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Unconditional,
    Conditional,
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Incompatible { .. } | Error::Dataset(_) => 3,
        e if e.is_numeric() => 4,
        _ => 2,
    }
}

/// Parses `args` and runs the command, writing reports to `out`. Returns the
/// process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = write!(err, "{e}");
            return 2;
        }
        Err(e) => {
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Fit {
            config,
            seed,
            output,
            n_iter,
            burn_in,
            thin,
            dry_run,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            cfg.chain.seed = seed;
            if let Some(v) = n_iter {
                cfg.chain.n_iter = v;
            }
            if let Some(v) = burn_in {
                cfg.chain.burn_in = v;
            }
            if let Some(v) = thin {
                cfg.chain.thin = v;
            }
            fit(&cfg, output, dry_run, out)
        }
        Command::Simulate {
            config,
            mode,
            chain,
            select,
            seed,
            output,
        } => {
            let cfg = RunConfig::load(&config)?;
            simulate(&cfg, mode, chain.as_deref(), &select, seed, output, out)
        }
        Command::Tcd {
            config,
            chain,
            facies,
            layer,
            z_max,
            points,
            output,
        } => {
            let cfg = RunConfig::load(&config)?;
            let text = tcd_table(&cfg, &chain, &Facies::from(facies.as_str()), layer, z_max, points)?;
            match output {
                Some(p) => io::write_string(&p, &text),
                None => out.write_all(text.as_bytes()).map_err(Error::from),
            }
        }
        Command::Synth {
            seed,
            n_boreholes,
            output,
        } => synth(seed, n_boreholes, &output, out),
        Command::Validate { config } => {
            let cfg = RunConfig::load(&config)?;
            let (model, _) = load_model(&cfg)?;
            writeln!(
                out,
                "{} boreholes compatible with a {}-layer parent sequence",
                model.boreholes.len(),
                model.parent.len()
            )?;
            Ok(())
        }
    }
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::InvalidConfiguration(format!("`{key}` is not set")))
}

fn load_parent(cfg: &RunConfig) -> Result<ParentSequence> {
    let parent = io::read_parent(required(&cfg.parent, "parent")?)?;
    cfg.check_facies(&parent)?;
    Ok(parent)
}

fn load_model(cfg: &RunConfig) -> Result<(Model, Vec<Smoothness>)> {
    let parent = load_parent(cfg)?;
    let boreholes = io::read_boreholes(required(&cfg.boreholes, "boreholes")?)?;
    let nu = layer_nu(cfg, &parent);
    Ok((Model::new(parent, boreholes)?, nu))
}

fn layer_nu(cfg: &RunConfig, parent: &ParentSequence) -> Vec<Smoothness> {
    parent.layers().iter().map(|f| cfg.nu_for(f)).collect()
}

fn output_dir(cfg: &RunConfig, over: Option<PathBuf>) -> Result<PathBuf> {
    over.or_else(|| cfg.output.clone())
        .ok_or_else(|| Error::InvalidConfiguration("no output directory (`output` or --output)".into()))
}

/// Starting-value table printed by `fit --dry-run`.
pub fn init_table(model: &Model) -> Result<String> {
    let mut s = String::from("facies,records,slots,presence,mean_thickness,p0,tau0,mu0\n");
    for e in model.empirical_summary() {
        let (p0, mu0) = e.initial_values()?;
        let tau0 = e.initial_tau()?;
        let _ = writeln!(
            s,
            "{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4}",
            e.facies,
            e.records,
            e.slots,
            e.presence(),
            e.mean_thickness,
            p0,
            tau0,
            mu0
        );
    }
    Ok(s)
}

fn fit(cfg: &RunConfig, output: Option<PathBuf>, dry_run: bool, out: &mut dyn Write) -> Result<()> {
    let (model, _) = load_model(cfg)?;
    if dry_run {
        out.write_all(init_table(&model)?.as_bytes())?;
        return Ok(());
    }
    let dir = output_dir(cfg, output)?;
    let params = model.initial_params(&|f| cfg.nu_for(f), cfg.initial_range)?;
    log::info!(
        "fitting {} layers to {} boreholes, {} iterations",
        model.parent.len(),
        model.boreholes.len(),
        cfg.chain.n_iter
    );
    let chain = run_chain(&model, params, cfg.priors, cfg.proposals, cfg.chain.clone())?;
    io::write_chain(&dir, &model.parent, &chain.samples, &chain.diagnostics)?;
    writeln!(
        out,
        "wrote {} samples to {} (initial log-likelihood {:.3}, final {:.3})",
        chain.samples.len(),
        dir.display(),
        chain.diagnostics.initial_log_likelihood,
        chain.diagnostics.log_likelihood_trace.last().copied().unwrap_or(f64::NAN)
    )?;
    Ok(())
}

/// Picks a stored sample by `most-likely` or 0-based index.
pub fn select_sample<'a>(samples: &'a [PosteriorSample], select: &str) -> Result<&'a PosteriorSample> {
    if select == "most-likely" {
        return select_most_likely(samples);
    }
    let k: usize = select
        .parse()
        .map_err(|_| Error::InvalidConfiguration(format!("--select `{select}`: expected most-likely or an index")))?;
    samples.get(k).ok_or_else(|| {
        Error::Dataset(format!("sample index {k} out of range ({} samples)", samples.len()))
    })
}

fn load_chain(dir: &Path, nu: &[Smoothness]) -> Result<Vec<PosteriorSample>> {
    if !dir.join("samples.csv").is_file() {
        return Err(Error::Dataset(format!("no chain found in {}", dir.display())));
    }
    let samples = io::read_chain(dir, nu)?;
    if samples.is_empty() {
        return Err(Error::Dataset(format!("chain in {} has no samples", dir.display())));
    }
    Ok(samples)
}

fn simulate(
    cfg: &RunConfig,
    mode: Mode,
    chain: Option<&Path>,
    select: &str,
    seed: u64,
    output: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    let dir = output_dir(cfg, output)?;
    let parent = load_parent(cfg)?;
    let nu = layer_nu(cfg, &parent);
    let sample = match chain {
        Some(c) => Some(select_sample(&load_chain(c, &nu)?, select)?.clone()),
        None if mode == Mode::Conditional => {
            return Err(Error::Dataset("conditional simulation needs --chain".into()))
        }
        None => None,
    };
    let params: Vec<LayerParams> = match &sample {
        Some(s) => s.params.clone(),
        None => cfg.fixed_params(&parent)?,
    };
    let conditioning = if mode == Mode::Conditional {
        let sample = sample.as_ref().expect("checked above");
        let boreholes = io::read_boreholes(required(&cfg.boreholes, "boreholes")?)?;
        Some(align(&boreholes, sample)?)
    } else {
        None
    };
    let grids = [
        ("grid", cfg.sim_grid()?),
        ("section", cfg.sim_transect()?),
    ];
    if grids.iter().all(|g| g.1.is_none()) {
        return Err(Error::InvalidConfiguration("set `grid` and/or `transect`".into()));
    }
    for (name, grid) in grids {
        let Some(grid) = grid else { continue };
        let mut sim = Simulator::new(grid.clone());
        let stack = match &conditioning {
            None => sim.unconditional(&params, seed)?,
            Some((configs, locations, ground)) => {
                sim.conditional(&params, configs, locations, ground, seed)?
            }
        };
        if name == "grid" {
            io::write_string(&dir.join("grid.txt"), &io::format_grid(&grid, &stack, &parent))?;
            io::write_string(&dir.join("raster.csv"), &io::format_stack(&stack, &parent))?;
        } else {
            let cs = cross_section(&stack, &grid, cfg.section_rows)?;
            io::write_string(&dir.join("section.csv"), &io::format_section_raster(&cs, &parent))?;
            io::write_string(&dir.join("polylines.csv"), &io::format_polylines(&cs))?;
        }
        writeln!(out, "wrote {name} ({} nodes) to {}", grid.len(), dir.display())?;
    }
    Ok(())
}

type Conditioning = (
    Vec<crate::sequence::AugmentedConfiguration>,
    Vec<crate::sequence::Point>,
    Vec<f64>,
);

/// Matches the sample's configurations to borehole locations by id.
fn align(boreholes: &[BoreholeObservation], sample: &PosteriorSample) -> Result<Conditioning> {
    let mut configs = Vec::new();
    let mut locations = Vec::new();
    let mut ground = Vec::new();
    for c in &sample.configs {
        let b = boreholes
            .iter()
            .find(|b| b.id == c.borehole_id)
            .ok_or_else(|| Error::Dataset(format!("chain borehole `{}` not in the borehole file", c.borehole_id)))?;
        configs.push(c.clone());
        locations.push(b.location);
        ground.push(b.ground_level);
    }
    if configs.is_empty() {
        return Err(Error::Dataset("selected sample has no configurations".into()));
    }
    Ok((configs, locations, ground))
}

/// Posterior median and 90% band of the thickness distribution of one layer,
/// with the empirical distribution of recorded thicknesses of its facies.
pub fn tcd_table(
    cfg: &RunConfig,
    chain: &Path,
    facies: &Facies,
    layer: Option<usize>,
    z_max: Option<f64>,
    points: usize,
) -> Result<String> {
    let (model, nu) = load_model(cfg)?;
    let layers = model.parent.layers_of(facies);
    let j = match layer {
        Some(l) if l >= 1 && layers.contains(&(l - 1)) => l - 1,
        Some(l) => {
            return Err(Error::InvalidConfiguration(format!(
                "layer {l} is not a {facies} layer"
            )))
        }
        None => *layers
            .first()
            .ok_or_else(|| Error::InvalidConfiguration(format!("facies {facies} not in the parent")))?,
    };
    if points < 2 {
        return Err(Error::InvalidConfiguration("--points must be at least 2".into()));
    }
    let samples = load_chain(chain, &nu)?;
    let mut observed: Vec<f64> = model
        .boreholes
        .iter()
        .flat_map(|b| b.records().iter())
        .filter(|r| &r.facies == facies)
        .map(|r| r.thickness)
        .collect();
    observed.sort_by(|a, b| a.total_cmp(b));
    let z_max = z_max.unwrap_or_else(|| {
        let top = observed.last().copied().unwrap_or(0.0);
        let scale = samples.iter().map(|s| s.params[j].mu()).fold(0.0, f64::max);
        (1.5 * top).max(3.0 * scale).max(1.0)
    });
    if !(z_max > 0.0) {
        return Err(Error::InvalidConfiguration("--z-max must be positive".into()));
    }
    let mut s = String::from("z,median,q05,q95,empirical\n");
    let mut vals = vec![0.0; samples.len()];
    for k in 0..points {
        let z = z_max * k as f64 / (points - 1) as f64;
        for (v, smp) in vals.iter_mut().zip(&samples) {
            *v = tcd(z, &smp.params[j]);
        }
        vals.sort_by(|a, b| a.total_cmp(b));
        let emp = if observed.is_empty() {
            f64::NAN
        } else {
            observed.partition_point(|&t| t <= z) as f64 / observed.len() as f64
        };
        let _ = writeln!(
            s,
            "{z},{},{},{},{emp}",
            io::quantile_sorted(&vals, 0.5),
            io::quantile_sorted(&vals, 0.05),
            io::quantile_sorted(&vals, 0.95)
        );
    }
    Ok(s)
}

fn synth(seed: u64, n_boreholes: usize, dir: &Path, out: &mut dyn Write) -> Result<()> {
    if n_boreholes == 0 {
        return Err(Error::InvalidConfiguration("--n-boreholes must be positive".into()));
    }
    let scenario = SyntheticScenario {
        n_boreholes,
        ..SyntheticScenario::default()
    }
    .with_seed(seed);
    let data = scenario.generate()?;
    io::write_boreholes(&dir.join("boreholes.csv"), &data.boreholes)?;
    io::write_parent(&dir.join("parent.txt"), &scenario.parent)?;
    io::write_truth(&dir.join("truth.csv"), &scenario.parent, &data.truth)?;
    let mut run = String::from("boreholes = boreholes.csv\nparent = parent.txt\noutput = out\n");
    let _ = writeln!(run, "nu = {}", scenario.nu.value());
    let _ = writeln!(run, "seed = {seed}");
    let _ = writeln!(run, "grid = 0 0 2 2 51 51\ntransect = 0 0 100 100 100\nground = constant {}", scenario.ground_level);
    for (f, t) in &scenario.truth {
        let _ = writeln!(run, "params.{f} = {} {} {} {}", t.p, t.mu, t.beta, t.alpha);
    }
    io::write_string(&dir.join("run.cfg"), &run)?;
    writeln!(
        out,
        "wrote {} boreholes, parent, truth and run.cfg to {}",
        data.boreholes.len(),
        dir.display()
    )?;
    Ok(())
}
