mod manifest;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use sepnet_core::genie::{
    aggregate_throughput, dms_rates, genie_rate_matrix, induce_orders_for, optimize_aux_chain,
    quadratic_genie_rate_matrix, verify_rate_loss_bounds, AuxChain, ChainSearch,
};
use sepnet_core::network::{
    edge_capacities, frontier_table, separation_feasible_unicast, separation_frontier_point_to_point,
    CapacityPolytope, DistortionMatrix, NetworkSpec,
};
use sepnet_core::prob::{DistortionMeasure, Dmc, FiniteAbelianGroup, Pmf, SeededRng, Typicality};
use sepnet_core::sim::{
    channel_simulation_experiment, dnjscc_separation_experiment, jscmud_superchannel_experiment,
    separation_baseline_experiment, BaseJointCode, BaselineParams, SimReport,
};
use sepnet_core::solvers::{
    channel_capacity, constrained_additive_capacity, distortion_rate, quadratic_grid, rate_distortion,
    worst_noise_capacity, SolverConfig, SolverResult,
};

use manifest::RunManifest;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: sepnet_core::Error },
    #[error(transparent)]
    Core(#[from] sepnet_core::Error),
    #[error("writing output: {0}")]
    Write(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        fn core(e: &sepnet_core::Error) -> u8 {
            match e {
                sepnet_core::Error::EnumerationCap { .. } | sepnet_core::Error::EmptyTypicalSet { .. } => 4,
                sepnet_core::Error::Solver { source, .. } => core(source),
                _ => 2,
            }
        }
        match self {
            CliError::Core(e) | CliError::Parse { source: e, .. } => core(e),
            _ => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "sepnet", version, about = "Separation-scheme quantities for network source-channel coding")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Args)]
struct Common {
    /// Result file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Bracket width for solvers, in bits.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[arg(long, global = true)]
    max_iterations: Option<usize>,
    /// Seed for randomized verbs; falls back to SEPNET_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// Source law (pmf JSON).
    #[arg(long)]
    source: PathBuf,
    /// Distortion measure JSON.
    #[arg(long)]
    distortion: PathBuf,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long = "nprime", default_value_t = 1000)]
    n_prime: usize,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Per-trial CSV mirror of the report.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Capacity of a discrete memoryless channel.
    Capacity {
        #[arg(long)]
        dmc: PathBuf,
    },
    /// Rate-distortion function at one distortion.
    Rd {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long = "d")]
        target: f64,
    },
    /// Distortion-rate function at one rate.
    Dr {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long)]
        rate: f64,
    },
    /// Capacity of the additive-noise channel under an input cost budget.
    Cdn {
        /// Noise law (pmf JSON) on the cyclic group of its size.
        #[arg(long)]
        noise: PathBuf,
        /// Difference distortion measure JSON.
        #[arg(long)]
        distortion: PathBuf,
        #[arg(long)]
        budget: f64,
    },
    /// Worst-noise capacity; either a difference measure or a quadratic grid size.
    WorstNoise {
        #[arg(long, conflicts_with = "grid")]
        distortion: Option<PathBuf>,
        /// Points of a squared-error grid over +-4 sqrt(budget).
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        budget: f64,
    },
    /// Capacity of every edge of a dnjscc network.
    EdgeCaps {
        #[arg(long)]
        network: PathBuf,
    },
    /// Whether separation meets unicast distortions inside a capacity polytope.
    SepFeasible {
        #[arg(long)]
        network: PathBuf,
        /// Per-source distortions as a JSON array.
        #[arg(long)]
        distortions: PathBuf,
        /// Capacity polytope JSON `{"A": [[...]], "b": [...]}`.
        #[arg(long)]
        region: PathBuf,
    },
    /// Point-to-point separation optimum `D(kappa C)`.
    Opta {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long)]
        dmc: PathBuf,
        #[arg(long)]
        kappa: f64,
    },
    /// Table of `(kappa, C, D(kappa C))` over a kappa grid.
    Frontier {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long)]
        dmc: PathBuf,
        /// Comma-separated kappa values.
        #[arg(long, value_delimiter = ',', required = true)]
        kappas: Vec<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Genie rate matrix with heuristically searched aux chains.
    Genie {
        #[arg(long)]
        network: PathBuf,
        /// Distortion matrix JSON (sources by nodes, numbers or "max").
        #[arg(long)]
        distortions: PathBuf,
        #[arg(long, default_value_t = 3)]
        starts: usize,
        #[arg(long, default_value_t = 8)]
        sweeps: usize,
    },
    /// Genie rate matrix for squared error: every defined entry is half a bit.
    GenieQuadratic {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        distortions: PathBuf,
    },
    /// Degraded-message-set rates of an aux chain.
    DmsRates {
        #[arg(long)]
        source: PathBuf,
        /// Aux chain JSON.
        #[arg(long)]
        chain: PathBuf,
    },
    /// Checks the rate-loss inequalities for reconstructions along an aux chain.
    VerifyLemma1 {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        chain: PathBuf,
        /// JSON array of reconstruction channels, one per chain level.
        #[arg(long)]
        recon: PathBuf,
    },
    /// Channel simulation by covering on one channel.
    SimChansim {
        #[arg(long)]
        dmc: PathBuf,
        /// Input law (pmf JSON).
        #[arg(long)]
        input: PathBuf,
        /// Codebook rate above `I(X; Y)`, in bits.
        #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
        margin: f64,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Base code over a dnjscc network with every edge replaced by channel simulation.
    SimDnjscc {
        #[arg(long)]
        network: PathBuf,
        /// Base joint code JSON.
        #[arg(long)]
        code: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Superchannel separation over a jscmud network.
    SimUnicast {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        code: PathBuf,
        /// Comma-separated target distortions, one per source.
        #[arg(long, value_delimiter = ',', required = true)]
        targets: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Separate source and channel random coding on one channel.
    SimBaseline {
        #[command(flatten)]
        src: SourceArgs,
        #[arg(long)]
        dmc: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        /// Source block length.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long)]
        target: f64,
        #[arg(long, default_value_t = 0.03, allow_negative_numbers = true)]
        margin: f64,
        /// Relative typicality tolerance of the source cover.
        #[arg(long, default_value_t = 0.05)]
        source_delta: f64,
        /// Absolute typicality tolerance of the channel decoder.
        #[arg(long, default_value_t = 0.03)]
        channel_delta: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

struct Run {
    manifest: RunManifest,
    cfg: SolverConfig,
    /// Set when a solver result did not certify its tolerance.
    unconverged: Vec<String>,
}

impl Run {
    fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).map_err(|source| CliError::Read { path: path.into(), source })?;
        self.manifest.record(path, &bytes);
        String::from_utf8(bytes).map_err(|e| CliError::Usage(format!("{}: not UTF-8: {e}", path.display())))
    }

    fn load<T: DeserializeOwned>(&mut self, path: &Path) -> Result<T> {
        let text = self.read(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Parse { path: path.into(), source: e.into() })
    }

    fn network(&mut self, path: &Path) -> Result<NetworkSpec> {
        let text = self.read(path)?;
        NetworkSpec::from_json(&text).map_err(|source| CliError::Parse { path: path.into(), source })
    }

    fn solver(&mut self, what: &str, r: SolverResult) -> Result<Value> {
        if !r.converged {
            self.unconverged.push(what.into());
        }
        Ok(serde_json::to_value(r).map_err(sepnet_core::Error::from)?)
    }

    fn seed(&self) -> u64 {
        self.manifest.seed.unwrap_or(0)
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v).map_err(sepnet_core::Error::from)?)
}

fn write_csv(path: &Option<PathBuf>, text: &str) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, text)?;
    }
    Ok(())
}

fn sim_result(report: SimReport, csv: &Option<PathBuf>) -> Result<Value> {
    report.check()?;
    write_csv(csv, &report.to_csv())?;
    to_value(&report)
}

fn difference_group(d: &DistortionMeasure) -> Result<FiniteAbelianGroup> {
    d.require_difference("this verb")?;
    Ok(FiniteAbelianGroup::cyclic(d.source_size()))
}

fn dispatch(verb: Verb, run: &mut Run) -> Result<Value> {
    let cfg = run.cfg.clone();
    match verb {
        Verb::Capacity { dmc } => {
            let ch: Dmc = run.load(&dmc)?;
            let r = channel_capacity(&ch, &cfg)?;
            run.solver("capacity", r)
        }
        Verb::Rd { src, target } => {
            let (p, d) = (run.load::<Pmf>(&src.source)?, run.load::<DistortionMeasure>(&src.distortion)?);
            let r = rate_distortion(&p, &d, target, &cfg)?;
            run.solver("rate-distortion", r)
        }
        Verb::Dr { src, rate } => {
            let (p, d) = (run.load::<Pmf>(&src.source)?, run.load::<DistortionMeasure>(&src.distortion)?);
            let r = distortion_rate(&p, &d, rate, &cfg)?;
            run.solver("distortion-rate", r)
        }
        Verb::Cdn { noise, distortion, budget } => {
            let n: Pmf = run.load(&noise)?;
            let d: DistortionMeasure = run.load(&distortion)?;
            let g = difference_group(&d)?;
            let r = constrained_additive_capacity(&n, &d, budget, &g, &cfg)?;
            run.solver("additive-noise capacity", r)
        }
        Verb::WorstNoise { distortion, grid, budget } => {
            let (g, d) = match (distortion, grid) {
                (Some(p), None) => {
                    let d: DistortionMeasure = run.load(&p)?;
                    (difference_group(&d)?, d)
                }
                (None, Some(len)) if len >= 3 => quadratic_grid(budget, len),
                _ => return Err(CliError::Usage("give --distortion or --grid (at least 3 points)".into())),
            };
            let r = worst_noise_capacity(&g, &d, budget, &cfg)?;
            run.solver("worst-noise capacity", r)
        }
        Verb::EdgeCaps { network } => {
            let spec = run.network(&network)?;
            let caps = edge_capacities(&spec, &cfg)?;
            for c in &caps {
                if !c.capacity.converged {
                    run.unconverged.push(format!("edge {} -> {}", c.from, c.to));
                }
            }
            to_value(&caps)
        }
        Verb::SepFeasible { network, distortions, region } => {
            let spec = run.network(&network)?;
            let d: Vec<f64> = run.load(&distortions)?;
            let poly: CapacityPolytope = run.load(&region)?;
            to_value(&separation_feasible_unicast(&spec, &poly, &d, &cfg)?)
        }
        Verb::Opta { src, dmc, kappa } => {
            let (p, d) = (run.load::<Pmf>(&src.source)?, run.load::<DistortionMeasure>(&src.distortion)?);
            let ch: Dmc = run.load(&dmc)?;
            let v = separation_frontier_point_to_point(&p, &d, &ch, kappa, &cfg)?;
            Ok(json!({ "kappa": kappa, "distortion": v }))
        }
        Verb::Frontier { src, dmc, kappas, csv } => {
            let (p, d) = (run.load::<Pmf>(&src.source)?, run.load::<DistortionMeasure>(&src.distortion)?);
            let ch: Dmc = run.load(&dmc)?;
            let rows = frontier_table(&p, &d, &ch, &kappas, &cfg)?;
            let mut text = String::from("kappa,capacity,distortion\n");
            for r in &rows {
                text.push_str(&format!("{},{},{}\n", r.kappa, r.capacity, r.distortion));
            }
            write_csv(&csv, &text)?;
            to_value(&rows)
        }
        Verb::Genie { network, distortions, starts, sweeps } => {
            let spec = run.network(&network)?;
            let matrix = run.load::<DistortionMatrix>(&distortions)?.resolve(&spec)?;
            let orders = induce_orders_for(&spec, &matrix)?;
            let search = ChainSearch { starts, sweeps, seed: run.seed() };
            let mut chains = Vec::with_capacity(orders.per_source.len());
            for (i, slots) in orders.per_source.iter().enumerate() {
                if slots.len() <= 1 {
                    chains.push(None);
                    continue;
                }
                let d = &spec.distortion_measures[i];
                let budgets: Vec<f64> = slots.iter().map(|s| s.distortion).collect();
                chains.push(Some(optimize_aux_chain(&difference_group(d)?, d, &budgets, &search, &cfg)?));
            }
            let m = genie_rate_matrix(&orders, &chains, spec.nodes, &cfg)?;
            if !m.converged {
                run.unconverged.push("genie rate matrix".into());
            }
            let aggregate = aggregate_throughput(&m, &orders)?;
            Ok(json!({ "orders": to_value(&orders)?, "chains": to_value(&chains)?, "matrix": to_value(&m)?, "aggregate": aggregate }))
        }
        Verb::GenieQuadratic { network, distortions } => {
            let spec = run.network(&network)?;
            let matrix = run.load::<DistortionMatrix>(&distortions)?.resolve(&spec)?;
            let orders = induce_orders_for(&spec, &matrix)?;
            let m = quadratic_genie_rate_matrix(&orders, spec.nodes)?;
            let aggregate = aggregate_throughput(&m, &orders)?;
            Ok(json!({ "orders": to_value(&orders)?, "matrix": to_value(&m)?, "aggregate": aggregate }))
        }
        Verb::DmsRates { source, chain } => {
            let p: Pmf = run.load(&source)?;
            let c: AuxChain = run.load(&chain)?;
            let r = dms_rates(&p, &c, &cfg)?;
            if !r.converged {
                run.unconverged.push("degraded-message-set rates".into());
            }
            to_value(&r)
        }
        Verb::VerifyLemma1 { source, chain, recon } => {
            let p: Pmf = run.load(&source)?;
            let c: AuxChain = run.load(&chain)?;
            let r: Vec<Dmc> = run.load(&recon)?;
            to_value(&verify_rate_loss_bounds(&p, &r, &c, &cfg)?)
        }
        Verb::SimChansim { dmc, input, margin, sim } => {
            let ch: Dmc = run.load(&dmc)?;
            let x: Pmf = run.load(&input)?;
            let rng = SeededRng::new(run.seed());
            let r = channel_simulation_experiment(&ch, &x, sim.n_prime, sim.delta, margin, sim.trials, &rng)?;
            sim_result(r, &sim.csv)
        }
        Verb::SimDnjscc { network, code, sim } => {
            let spec = run.network(&network)?;
            let base: BaseJointCode = run.load(&code)?;
            let rng = SeededRng::new(run.seed());
            let r = dnjscc_separation_experiment(&spec, &base, sim.n_prime, sim.delta, sim.trials, &rng)?;
            sim_result(r, &sim.csv)
        }
        Verb::SimUnicast { network, code, targets, epsilon, sim } => {
            let spec = run.network(&network)?;
            let base: BaseJointCode = run.load(&code)?;
            let rng = SeededRng::new(run.seed());
            let r = jscmud_superchannel_experiment(
                &spec, &base, &targets, epsilon, sim.delta, sim.n_prime, sim.trials, &rng, &cfg,
            )?;
            sim_result(r, &sim.csv)
        }
        Verb::SimBaseline {
            src,
            dmc,
            kappa,
            n,
            target,
            margin,
            source_delta,
            channel_delta,
            trials,
            csv,
        } => {
            let (p, d) = (run.load::<Pmf>(&src.source)?, run.load::<DistortionMeasure>(&src.distortion)?);
            let ch: Dmc = run.load(&dmc)?;
            let params = BaselineParams {
                target_distortion: target,
                rate_margin: margin,
                source_typicality: Typicality::Robust(source_delta),
                channel_typicality: Typicality::Absolute(channel_delta),
            };
            let rng = SeededRng::new(run.seed());
            let r = separation_baseline_experiment(&p, &d, &ch, kappa, n, &params, trials, &rng, &cfg)?;
            sim_result(r, &csv)
        }
    }
}

fn is_randomized(v: &Verb) -> bool {
    matches!(
        v,
        Verb::Genie { .. } | Verb::SimChansim { .. } | Verb::SimDnjscc { .. } | Verb::SimUnicast { .. } | Verb::SimBaseline { .. }
    )
}

fn execute(cli: Cli, argv: Vec<String>) -> Result<bool> {
    let env_seed = match std::env::var("SEPNET_SEED") {
        Ok(s) => Some(
            s.trim()
                .parse::<u64>()
                .map_err(|_| CliError::Usage(format!("SEPNET_SEED must be an unsigned integer, got {s:?}")))?,
        ),
        Err(_) => None,
    };
    let seed = is_randomized(&cli.verb).then(|| cli.common.seed.or(env_seed).unwrap_or(0));
    let mut cfg = SolverConfig::default();
    if let Some(t) = cli.common.tolerance {
        cfg.tolerance = t;
    }
    if let Some(m) = cli.common.max_iterations {
        cfg.max_iterations = m;
    }
    cfg.validate()?;
    let mut run = Run {
        manifest: RunManifest::new(argv, seed),
        cfg,
        unconverged: Vec::new(),
    };
    let result = dispatch(cli.verb, &mut run)?;
    let out = json!({ "manifest": to_value(&run.manifest)?, "result": result });
    let text = serde_json::to_string_pretty(&out).map_err(sepnet_core::Error::from)? + "\n";
    match &cli.common.out {
        Some(p) => fs::write(p, text)?,
        None => {
            // a closed pipe (e.g. `| head`) is not an error
            if let Err(e) = std::io::stdout().lock().write_all(text.as_bytes()) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
    }
    for what in &run.unconverged {
        eprintln!("sepnet: {what} did not reach the requested tolerance; bounds are in the result");
    }
    Ok(run.unconverged.is_empty())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match execute(cli, argv) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("sepnet: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
