use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use semwalk_core::exp::{
    build_population, run_experiments, run_sweep_artifacts, Experiment, ExperimentConfig, Layout,
    SweepAxes,
};
use semwalk_core::semgraph::{write_edge_list, EdgeListHeader};
use semwalk_core::verify;
use semwalk_core::ConceptGraph;

mod table;

#[derive(Parser, Debug)]
#[command(
    name = "semwalk",
    version,
    about = "Ideation experiments on rewired semantic networks"
)]
struct Cli {
    #[command(flatten)]
    opts: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Overrides {
    /// TOML file with experiment settings; missing fields take defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "SEMWALK_OUT", value_name = "DIR")]
    out: Option<PathBuf>,
    /// Number of concepts.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Lattice degree (even).
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Walk length.
    #[arg(short = 'T', long = "walk-length", global = true)]
    walk_length: Option<usize>,
    /// Multiplies population size, ordered pairs and matched instances.
    #[arg(long, global = true)]
    scale_factor: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,
    /// Make trace incorporation a no-op.
    #[arg(long, global = true)]
    no_inspiration: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write agent graphs as edge lists.
    Gen {
        /// Fixed rewiring probability; otherwise p is drawn from the configured range.
        #[arg(long)]
        p: Option<f64>,
        /// Number of graphs (default: the configured population size).
        #[arg(long)]
        count: Option<usize>,
    },
    /// Modularity against rewiring probability.
    Exp1,
    /// Expected breadth against modularity.
    Exp2,
    /// Overlap and gain in dyadic exposures.
    Exp3,
    /// Shared-source versus independent-source redundancy.
    Exp4,
    /// Rerun experiments over walk lengths, substrate sizes and seeds.
    Sweep {
        /// Walk lengths to cover.
        #[arg(long, value_delimiter = ',', default_value = "10,20,30")]
        walk_lengths: Vec<usize>,
        /// Substrate sizes as NxK (default: the configured n and k).
        #[arg(long, value_delimiter = ',', value_parser = parse_size)]
        sizes: Vec<(usize, usize)>,
        /// Seeds (default: the master seed and the next two).
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Experiments to rerun in every cell (exp1..exp4).
        #[arg(long, value_delimiter = ',', value_parser = parse_experiment, default_value = "exp1,exp2,exp3,exp4")]
        experiments: Vec<Experiment>,
    },
    /// All four experiments on one population.
    All,
    /// Run the acceptance checks and print PASS/FAIL per criterion.
    Verify {
        /// Also run the redundancy experiment at full instance count.
        #[arg(long)]
        full_scale: bool,
    },
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (n, k) = s
        .split_once('x')
        .ok_or_else(|| format!("expected NxK, got {s:?}"))?;
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok((num(n)?, num(k)?))
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    match s {
        "exp1" => Ok(Experiment::Modularity),
        "exp2" => Ok(Experiment::Breadth),
        "exp3" => Ok(Experiment::Stimulation),
        "exp4" => Ok(Experiment::Redundancy),
        _ => Err(format!("unknown experiment {s:?} (expected exp1..exp4)")),
    }
}

fn resolve(opts: &Overrides, scale: bool) -> Result<ExperimentConfig> {
    let mut config = match &opts.config {
        Some(path) => {
            ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = opts.seed {
        config.master_seed = seed;
    }
    if let Some(out) = &opts.out {
        config.output_dir = out.clone();
    }
    if let Some(n) = opts.n {
        config.n = n;
    }
    if let Some(k) = opts.k {
        config.k = k;
    }
    if let Some(t) = opts.walk_length {
        config.walk_length = t;
    }
    if opts.no_inspiration {
        config.inspiration = false;
    }
    if let Some(f) = opts.scale_factor {
        // verify scales internally so that it can widen its tolerances
        let scaled = config.scaled(f)?;
        if scale {
            config = scaled;
        }
    }
    if opts.threads == Some(0) {
        bail!("--threads must be at least 1");
    }
    config.validate()?;
    Ok(config)
}

fn write(files: &semwalk_core::exp::Artifacts, dir: &Path, force: bool) -> Result<()> {
    files
        .write_to(dir, force)
        .with_context(|| format!("writing results to {}", dir.display()))?;
    for (name, _) in &files.files {
        eprintln!("wrote {}", dir.join(name).display());
    }
    Ok(())
}

fn write_graph(path: &Path, header: &EdgeListHeader, graph: &ConceptGraph) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    write_edge_list(&mut out, header, graph)?;
    out.flush()?;
    Ok(())
}

fn generate(
    config: &ExperimentConfig,
    p: Option<f64>,
    count: Option<usize>,
    force: bool,
) -> Result<()> {
    let count = count.unwrap_or(config.population_size);
    if p.is_some_and(|p| !(0.0..=1.0).contains(&p)) {
        bail!("p must lie in [0, 1]");
    }
    if count == 0 {
        bail!("--count must be at least 1");
    }
    let layout = match p {
        Some(p) => Layout::Grid {
            p_grid: vec![p],
            per_p: count,
        },
        None => Layout::Range {
            low: config.p_range[0],
            high: config.p_range[1],
            agents: count,
        },
    };
    let population = build_population(config, &layout)?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    let header = |p: f64| EdgeListHeader {
        n: config.n,
        k: config.k,
        p,
        seed: config.master_seed,
    };
    let mut names = vec!["substrate.edges".to_string(), "agents.csv".to_string()];
    names.extend(
        population
            .agents
            .iter()
            .map(|a| format!("agent_{:04}.edges", a.spec.agent_id)),
    );
    if !force {
        if let Some(existing) = names.iter().map(|n| dir.join(n)).find(|p| p.exists()) {
            bail!(
                "{} already exists (pass --force to overwrite)",
                existing.display()
            );
        }
    }
    write_graph(&dir.join(&names[0]), &header(0.0), &population.substrate)?;
    let mut table = String::from("agent_id,p,Q\n");
    for a in &population.agents {
        table.push_str(&format!("{},{},{}\n", a.spec.agent_id, a.spec.p, a.q));
    }
    fs::write(dir.join(&names[1]), table)?;
    for agent in &population.agents {
        let path = dir.join(format!("agent_{:04}.edges", agent.spec.agent_id));
        write_graph(&path, &header(agent.spec.p), &agent.graph)?;
    }
    eprintln!("wrote {} graphs to {}", population.len(), dir.display());
    Ok(())
}

/// Runs the command; `Ok(false)` reports failed checks.
fn execute(cli: Cli, config: ExperimentConfig) -> Result<bool> {
    let opts = &cli.opts;
    if let Some(threads) = opts.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    let dir = config.output_dir.clone();
    let single = |e: Experiment| -> Result<bool> {
        let (summary, files) = run_experiments(&config, &[e])?;
        write(&files, &dir, opts.force)?;
        table::print_summary(&summary);
        Ok(true)
    };
    match cli.command {
        Command::Gen { p, count } => generate(&config, p, count, opts.force).map(|_| true),
        Command::Exp1 => single(Experiment::Modularity),
        Command::Exp2 => single(Experiment::Breadth),
        Command::Exp3 => single(Experiment::Stimulation),
        Command::Exp4 => single(Experiment::Redundancy),
        Command::All => {
            let (summary, files) = run_experiments(&config, &Experiment::ALL)?;
            write(&files, &dir, opts.force)?;
            table::print_summary(&summary);
            Ok(true)
        }
        Command::Sweep {
            walk_lengths,
            sizes,
            seeds,
            experiments,
        } => {
            let axes = SweepAxes {
                walk_lengths,
                sizes: if sizes.is_empty() {
                    vec![(config.n, config.k)]
                } else {
                    sizes
                },
                seeds: if seeds.is_empty() {
                    (0..3).map(|i| config.master_seed.wrapping_add(i)).collect()
                } else {
                    seeds
                },
            };
            let (report, files) = run_sweep_artifacts(&config, &axes, &experiments)?;
            write(&files, &dir, opts.force)?;
            table::print_sweep(&report);
            Ok(report.signs_consistent)
        }
        Command::Verify { full_scale } => {
            let scale = opts.scale_factor.unwrap_or(1.0);
            let mut checks = verify::run_suite_with(&config, scale, |c| println!("{c}"))?;
            if full_scale {
                let check = verify::check_redundancy_full_scale(&config)?;
                println!("{check}");
                checks.push(check);
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!(
                "{} of {} criteria passed",
                checks.len() - failed,
                checks.len()
            );
            Ok(failed == 0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match resolve(&cli.opts, !matches!(cli.command, Command::Verify { .. })) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: invalid configuration: {e:#}");
            return ExitCode::from(2);
        }
    };
    match execute(cli, config) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
