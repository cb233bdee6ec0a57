use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use combwm_core::bandit::BanditState;
use combwm_core::build::{build_st_paths, EdgeOrder, EdgeZdd};
use combwm_core::check::oracle_suite;
use combwm_core::experiment::{run_experiment, ExperimentConfig};
use combwm_core::graph::read_graph;
use combwm_core::zdd::{read_zdd, write_zdd};
use combwm_core::{Error, Zdd};

const RUN_ABOUT: &str = "\
Run a seeded bandit experiment described by a `key = value` config file.

Keys: problem (osp | dst | cg | custom-zdd), grid_rows, grid_cols, graph_file,
zdd_file, alpha (2 or 3), horizon, trials, seed, reset_prob, kappa, players,
output, adversary (reset-bernoulli | zero).

Writes `output` with columns trial,player,t,chosen_cost,cum_cost,
best_fixed_cost,regret and `<stem>_aggregate.<ext>` with t,mean_regret,std_regret.

The reset-Bernoulli adversary keeps a mean vector mu in [0,1]^d, redraws it
uniformly with probability reset_prob before every round after the first, then
draws h_i ~ Bernoulli(mu_i) independently per arm and sets the loss of arm i to
+1/d if h_i = 1 and -1/d otherwise. (The per-arm draw h_i decides arm i's sign;
a single per-round draw h_t is not used.)";

#[derive(Parser)]
#[command(name = "combwm", version, about = "Adversarial combinatorial bandits on ZDD decision sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile every start-goal path of a graph into a ZDD file.
    ///
    /// Also writes `<out>.edges`, mapping each ZDD arm to its graph edge id.
    BuildPaths {
        graph: PathBuf,
        out: PathBuf,
        /// Variable order: `bfs` (breadth-first from start) or `identity`.
        #[arg(long, default_value = "bfs")]
        order: String,
    },
    /// Print the number of super arms and the largest cardinality.
    Count { zdd: PathBuf },
    /// Print L, lambda and the diagram size.
    Stats { zdd: PathBuf },
    #[command(long_about = RUN_ABOUT, about = "Run a seeded experiment and write CSV regret curves")]
    Run { config: PathBuf },
    /// Check the ZDD pipeline against brute-force enumeration on a 3 x n grid.
    OracleCheck {
        #[arg(long, default_value_t = 3)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn load_zdd(path: &Path) -> Result<Zdd, Failure> {
    Ok(read_zdd(open(path)?)?)
}

fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".edges");
    PathBuf::from(name)
}

fn build_paths(graph: &Path, out: &Path, order: &str) -> Result<(), Failure> {
    let order = match order {
        "bfs" => EdgeOrder::BreadthFirst,
        "identity" => EdgeOrder::Identity,
        other => return Err(Failure::Validation(format!("unknown order `{other}`"))),
    };
    let g = read_graph(open(graph)?)?;
    let (s, t) = match (g.start, g.goal) {
        (Some(s), Some(t)) => (s, t),
        _ => return Err(Failure::Validation("graph needs `start` and `goal` lines".into())),
    };
    let EdgeZdd { zdd, arm_edges } = build_st_paths(&g, s, t, &order)?;
    write_zdd(&zdd, BufWriter::new(File::create(out)?))?;
    let mut map = BufWriter::new(File::create(sidecar(out))?);
    for (k, e) in arm_edges.iter().enumerate() {
        writeln!(map, "{} {}", k + 1, e)?;
    }
    map.flush()?;
    println!("{}", zdd.count());
    Ok(())
}

fn count(path: &Path) -> Result<(), Failure> {
    let z = load_zdd(path)?;
    println!("{}", z.count());
    match z.max_cardinality() {
        Ok(m) => println!("max_cardinality {m}"),
        Err(_) => println!("max_cardinality none"),
    }
    Ok(())
}

fn stats(path: &Path) -> Result<(), Failure> {
    let z = Arc::new(load_zdd(path)?);
    let vertices = z.id_count();
    let arms = z.arms();
    let state = BanditState::new(z, 2.0)?;
    println!("arms {arms}");
    println!("vertices {vertices}");
    println!("L {}", state.l());
    println!("L2 {}", state.l_squared());
    println!("lambda {}", state.lambda());
    Ok(())
}

fn run(config: &Path) -> Result<(), Failure> {
    let cfg = ExperimentConfig::from_file(config)?;
    let result = run_experiment(&cfg)?;
    if let Some(last) = result.aggregate.last() {
        println!(
            "t {} mean_regret {} std_regret {}",
            last.t, last.mean_regret, last.std_regret
        );
    }
    println!("wrote {}", cfg.output.display());
    println!("wrote {}", cfg.aggregate_path().display());
    Ok(())
}

fn oracle_check(size: usize, seed: u64) -> Result<(), Failure> {
    let outcomes = oracle_suite(size, seed)?;
    let mut ok = true;
    for c in &outcomes {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        ok &= c.passed;
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Runtime("oracle mismatch".into()))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::BuildPaths { graph, out, order } => build_paths(graph, out, order),
        Command::Count { zdd } => count(zdd),
        Command::Stats { zdd } => stats(zdd),
        Command::Run { config } => run(config),
        Command::OracleCheck { size, seed } => oracle_check(*size, *seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
