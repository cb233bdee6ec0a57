//! Seeded experiment runner: builds the decision set, plays every trial and
//! writes per-checkpoint regret rows plus a mean/std aggregate.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bandit::{checkpoint_rounds, BanditState, LossSource, Policy, RegretAccount, RegretTrace, ZeroLosses};
use crate::build::{brute_force_steiner_trees, build_st_paths, reduce_from_family, EdgeOrder};
use crate::env::{CongestionEnv, ResetBernoulliAdversary};
use crate::error::{Error, Result};
use crate::graph::{build_grid, read_graph, Graph, GridSpec};
use crate::zdd::{read_zdd, SuperArm, Zdd};

/// Header of the per-checkpoint CSV.
pub const CSV_HEADER: &str = "trial,player,t,chosen_cost,cum_cost,best_fixed_cost,regret";
/// Header of the aggregate CSV.
pub const AGGREGATE_HEADER: &str = "t,mean_regret,std_regret";

/// RNG stream carrying the adversary of a trial.
pub const ADVERSARY_STREAM: u64 = 0;

/// RNG stream of player `k`'s policy.
pub fn player_stream(k: usize) -> u64 {
    1 + k as u64
}

/// Generator for `stream` of the trial seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    /// Online shortest path between the start and goal nodes.
    Osp,
    /// Dynamic Steiner tree over the terminal nodes (small graphs only).
    Dst,
    /// Multi-player congestion game on s-t paths.
    Cg,
    /// A ZDD loaded from file.
    CustomZdd,
}

impl std::str::FromStr for Problem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "osp" => Ok(Problem::Osp),
            "dst" => Ok(Problem::Dst),
            "cg" => Ok(Problem::Cg),
            "custom-zdd" => Ok(Problem::CustomZdd),
            _ => Err(Error::Config(format!(
                "unknown problem `{s}` (expected osp, dst, cg or custom-zdd)"
            ))),
        }
    }
}

/// Loss model for the single-player problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adversary {
    ResetBernoulli,
    Zero,
}

impl std::str::FromStr for Adversary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reset-bernoulli" => Ok(Adversary::ResetBernoulli),
            "zero" => Ok(Adversary::Zero),
            _ => Err(Error::Config(format!(
                "unknown adversary `{s}` (expected reset-bernoulli or zero)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub graph_file: Option<PathBuf>,
    pub zdd_file: Option<PathBuf>,
    pub alpha: f64,
    pub horizon: u64,
    pub trials: u64,
    pub seed: u64,
    pub reset_prob: f64,
    pub kappa: f64,
    pub players: usize,
    pub output: PathBuf,
    pub adversary: Adversary,
}

impl ExperimentConfig {
    pub fn new(problem: Problem) -> Self {
        ExperimentConfig {
            problem,
            grid_rows: 3,
            grid_cols: 3,
            graph_file: None,
            zdd_file: None,
            alpha: 2.0,
            horizon: 1000,
            trials: 1,
            seed: 0,
            reset_prob: 0.1,
            kappa: 10.0,
            players: 2,
            output: PathBuf::from("regret.csv"),
            adversary: Adversary::ResetBernoulli,
        }
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        Self::parse(&text, base)
    }

    /// Parses flat `key = value` lines. `#` starts a comment.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut problem = None;
        let mut cfg = ExperimentConfig::new(Problem::Osp);
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = k + 1;
            let (key, value) = line
                .split_once('=')
                .map(|(a, b)| (a.trim(), b.trim()))
                .ok_or_else(|| Error::parse(lineno, "expected `key = value`"))?;
            let num_err = |what: &str| Error::parse(lineno, format!("`{key}` expects {what}, got `{value}`"));
            let path = || base_dir.join(value);
            match key {
                "problem" => problem = Some(value.parse::<Problem>()?),
                "grid_rows" => cfg.grid_rows = value.parse().map_err(|_| num_err("an integer"))?,
                "grid_cols" => cfg.grid_cols = value.parse().map_err(|_| num_err("an integer"))?,
                "graph_file" => cfg.graph_file = Some(path()),
                "zdd_file" => cfg.zdd_file = Some(path()),
                "alpha" => cfg.alpha = value.parse().map_err(|_| num_err("a number"))?,
                "horizon" => cfg.horizon = value.parse().map_err(|_| num_err("an integer"))?,
                "trials" => cfg.trials = value.parse().map_err(|_| num_err("an integer"))?,
                "seed" => cfg.seed = value.parse().map_err(|_| num_err("an integer"))?,
                "reset_prob" => cfg.reset_prob = value.parse().map_err(|_| num_err("a number"))?,
                "kappa" => cfg.kappa = value.parse().map_err(|_| num_err("a number"))?,
                "players" => cfg.players = value.parse().map_err(|_| num_err("an integer"))?,
                "output" => cfg.output = path(),
                "adversary" => cfg.adversary = value.parse()?,
                _ => return Err(Error::parse(lineno, format!("unknown key `{key}`"))),
            }
        }
        cfg.problem = problem.ok_or_else(|| Error::Config("missing required key `problem`".into()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.horizon < 1 {
            return bad("horizon must be at least 1".into());
        }
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if self.alpha != 2.0 && self.alpha != 3.0 {
            return bad(format!("alpha must be 2 or 3, got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.reset_prob) {
            return bad(format!("reset_prob must lie in [0, 1], got {}", self.reset_prob));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa must be positive, got {}", self.kappa));
        }
        if self.problem == Problem::Cg && self.players < 1 {
            return bad("players must be at least 1".into());
        }
        if self.problem == Problem::CustomZdd && self.zdd_file.is_none() {
            return bad("problem custom-zdd needs `zdd_file`".into());
        }
        if self.problem == Problem::Cg && self.adversary == Adversary::Zero {
            return bad("the congestion game has no adversary to replace".into());
        }
        if self.graph_file.is_none() && self.problem != Problem::CustomZdd {
            GridSpec::new(self.grid_rows, self.grid_cols)
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Players per trial.
    pub fn player_count(&self) -> usize {
        if self.problem == Problem::Cg {
            self.players
        } else {
            1
        }
    }

    /// Path of the aggregate file: `<stem>_aggregate.<ext>` next to `output`.
    pub fn aggregate_path(&self) -> PathBuf {
        aggregate_path_for(&self.output)
    }
}

pub fn aggregate_path_for(output: &Path) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("regret");
    let name = match output.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_aggregate.{ext}"),
        None => format!("{stem}_aggregate"),
    };
    output.with_file_name(name)
}

/// The decision set of an experiment together with per-arm edge lengths.
#[derive(Debug, Clone)]
pub struct DecisionSet {
    pub zdd: Arc<Zdd>,
    pub betas: Vec<f64>,
}

fn load_graph(cfg: &ExperimentConfig) -> Result<Graph> {
    match &cfg.graph_file {
        Some(p) => read_graph(BufReader::new(File::open(p)?)),
        None => Ok(build_grid(GridSpec::new(cfg.grid_rows, cfg.grid_cols)?)),
    }
}

/// Builds or loads the decision set named by the config.
pub fn prepare(cfg: &ExperimentConfig) -> Result<DecisionSet> {
    let set = match cfg.problem {
        Problem::Osp | Problem::Cg => {
            let g = load_graph(cfg)?;
            let (s, t) = match (g.start, g.goal) {
                (Some(s), Some(t)) => (s, t),
                _ => return Err(Error::Config("graph needs `start` and `goal` nodes".into())),
            };
            let ez = build_st_paths(&g, s, t, &EdgeOrder::default())?;
            let betas = ez.per_arm(&g.betas());
            DecisionSet {
                zdd: Arc::new(ez.zdd),
                betas,
            }
        }
        Problem::Dst => {
            let g = load_graph(cfg)?;
            if g.terminals.len() < 2 {
                return Err(Error::Config("Steiner problem needs at least two terminals".into()));
            }
            let fam = brute_force_steiner_trees(&g, &g.terminals)?;
            DecisionSet {
                zdd: Arc::new(reduce_from_family(&fam, g.n_edges())?),
                betas: g.betas(),
            }
        }
        Problem::CustomZdd => {
            let p = cfg.zdd_file.as_ref().expect("validated");
            let zdd = read_zdd(BufReader::new(File::open(p)?))?;
            let betas = vec![1.0; zdd.arms()];
            DecisionSet {
                zdd: Arc::new(zdd),
                betas,
            }
        }
    };
    if set.zdd.is_empty_family() {
        return Err(Error::EmptyFamily);
    }
    Ok(set)
}

/// Traces of every player in one trial.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: u64,
    pub players: Vec<RegretTrace>,
}

/// Plays trial `trial` (seed `cfg.seed + trial`). With `keep_rounds` the
/// traces also hold every round's choice and cost.
pub fn run_trial(cfg: &ExperimentConfig, set: &DecisionSet, trial: u64, keep_rounds: bool) -> Result<TrialResult> {
    let seed = cfg.seed.wrapping_add(trial);
    let checkpoints = checkpoint_rounds(cfg.horizon);
    let players = cfg.player_count();
    let d = set.zdd.arms();
    let mut policies = (0..players)
        .map(|_| BanditState::new(Arc::clone(&set.zdd), cfg.alpha))
        .collect::<Result<Vec<_>>>()?;
    let mut rngs: Vec<ChaCha8Rng> = (0..players).map(|k| stream_rng(seed, player_stream(k))).collect();
    let mut accounts: Vec<RegretAccount> = (0..players).map(|_| RegretAccount::new(d, keep_rounds)).collect();

    let mut env: Option<Box<dyn LossSource>> = None;
    let mut game = None;
    if cfg.problem == Problem::Cg {
        game = Some(CongestionEnv::new(Arc::clone(&set.zdd), set.betas.clone(), cfg.kappa, players)?);
    } else {
        env = Some(match cfg.adversary {
            Adversary::ResetBernoulli => Box::new(ResetBernoulliAdversary::new(
                d,
                cfg.reset_prob,
                stream_rng(seed, ADVERSARY_STREAM),
            )?),
            Adversary::Zero => Box::new(ZeroLosses(d)),
        });
    }

    let mut next_cp = 0;
    let mut choices: Vec<SuperArm> = Vec::with_capacity(players);
    for t in 1..=cfg.horizon {
        choices.clear();
        for (p, rng) in policies.iter_mut().zip(rngs.iter_mut()) {
            choices.push(p.select(rng)?);
        }
        let losses = match (&mut env, &game) {
            (Some(env), _) => vec![env.next_losses()],
            (None, Some(game)) => game.losses(&choices)?,
            (None, None) => unreachable!("one environment is always set"),
        };
        for k in 0..players {
            let cost = accounts[k].record(t, &choices[k], &losses[k]);
            policies[k].feedback(cost)?;
        }
        if checkpoints.get(next_cp) == Some(&t) {
            next_cp += 1;
            for a in &mut accounts {
                a.checkpoint(t, &set.zdd)?;
            }
        }
    }
    Ok(TrialResult {
        trial,
        players: accounts.into_iter().map(RegretAccount::into_trace).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub t: u64,
    pub mean_regret: f64,
    pub std_regret: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub trials: Vec<TrialResult>,
    pub aggregate: Vec<AggregateRow>,
}

/// Mean and sample standard deviation of regret over every (trial, player)
/// trace at each logged round.
pub fn aggregate(trials: &[TrialResult]) -> Vec<AggregateRow> {
    let traces: Vec<&RegretTrace> = trials.iter().flat_map(|r| r.players.iter()).collect();
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    let n = traces.len() as f64;
    (0..first.checkpoints.len())
        .map(|j| {
            let vals: Vec<f64> = traces.iter().map(|tr| tr.checkpoints[j].regret).collect();
            let mean = vals.iter().sum::<f64>() / n;
            let var = if vals.len() > 1 {
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            AggregateRow {
                t: first.checkpoints[j].t,
                mean_regret: mean,
                std_regret: var.sqrt(),
            }
        })
        .collect()
}

/// Runs every trial in memory. Trials run in parallel; the result is
/// independent of scheduling.
pub fn simulate(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let set = prepare(cfg)?;
    simulate_on(cfg, &set)
}

pub fn simulate_on(cfg: &ExperimentConfig, set: &DecisionSet) -> Result<ExperimentResult> {
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|k| run_trial(cfg, set, k, false))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = aggregate(&trials);
    Ok(ExperimentResult { trials, aggregate })
}

pub fn write_rows<W: Write>(result: &ExperimentResult, mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    let mut line = String::new();
    for tr in &result.trials {
        for (k, trace) in tr.players.iter().enumerate() {
            for c in &trace.checkpoints {
                line.clear();
                let _ = writeln!(
                    line,
                    "{},{},{},{},{},{},{}",
                    tr.trial, k, c.t, c.cost, c.cum_cost, c.best_fixed, c.regret
                );
                out.write_all(line.as_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_aggregate<W: Write>(rows: &[AggregateRow], mut out: W) -> Result<()> {
    writeln!(out, "{AGGREGATE_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.t, r.mean_regret, r.std_regret)?;
    }
    out.flush()?;
    Ok(())
}

/// Runs the experiment and writes `output` and its aggregate file.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let result = simulate(cfg)?;
    if let Some(dir) = cfg.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_rows(&result, BufWriter::new(File::create(&cfg.output)?))?;
    write_aggregate(&result.aggregate, BufWriter::new(File::create(cfg.aggregate_path())?))?;
    Ok(result)
}

/// Reads back a CSV written by [`write_rows`] into `(trial, player, t, cost,
/// cum_cost, best_fixed, regret)` tuples.
pub fn read_rows<R: BufRead>(reader: R) -> Result<Vec<(u64, usize, u64, f64, f64, f64, f64)>> {
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if k == 0 {
            if line != CSV_HEADER {
                return Err(Error::parse(1, "unexpected header"));
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::parse(k + 1, "expected 7 fields"));
        }
        let num = |i: usize| f[i].parse::<f64>().map_err(|_| Error::parse(k + 1, "bad number"));
        let int = |i: usize| f[i].parse::<u64>().map_err(|_| Error::parse(k + 1, "bad integer"));
        out.push((int(0)?, int(1)? as usize, int(2)?, num(3)?, num(4)?, num(5)?, num(6)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn osp(horizon: u64, trials: u64, seed: u64) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(Problem::Osp);
        c.horizon = horizon;
        c.trials = trials;
        c.seed = seed;
        c
    }

    fn csv(cfg: &ExperimentConfig) -> Vec<u8> {
        let mut buf = Vec::new();
        write_rows(&simulate(cfg).unwrap(), &mut buf).unwrap();
        buf
    }

    #[test]
    fn parse_config() {
        let text = "# run\nproblem = cg\nalpha=3\nhorizon = 50 # short\ntrials = 2\nseed = 7\n\
                    players = 3\nkappa = 5\noutput = out/r.csv\ngrid_cols = 4\n";
        let c = ExperimentConfig::parse(text, Path::new("/base")).unwrap();
        assert_eq!(c.problem, Problem::Cg);
        assert_eq!((c.alpha, c.horizon, c.trials, c.seed), (3.0, 50, 2, 7));
        assert_eq!((c.players, c.kappa, c.grid_cols), (3, 5.0, 4));
        assert_eq!(c.output, PathBuf::from("/base/out/r.csv"));
        assert_eq!(c.aggregate_path(), PathBuf::from("/base/out/r_aggregate.csv"));
    }

    #[test]
    fn config_errors() {
        let p = Path::new(".");
        for text in [
            "alpha = 2",
            "problem = osp\nalpha = 2.5",
            "problem = osp\nhorizon = 0",
            "problem = osp\ntrials = 0",
            "problem = osp\ncolour = red",
            "problem = knapsack",
            "problem = osp\nhorizon",
            "problem = osp\nseed = -1",
            "problem = custom-zdd",
            "problem = osp\ngrid_rows = 1",
        ] {
            let e = ExperimentConfig::parse(text, p).unwrap_err();
            assert!(e.is_validation(), "{text}: {e}");
        }
    }

    #[test]
    fn deterministic_rows() {
        let cfg = osp(10, 1, 7);
        let a = csv(&cfg);
        assert_eq!(a, csv(&cfg));
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().next(), Some(CSV_HEADER));
        assert_eq!(text.lines().count(), 11);
        assert_ne!(csv(&osp(10, 1, 8)), csv(&cfg));
    }

    #[test]
    fn trial_seeds_are_offsets() {
        let two = simulate(&osp(30, 2, 5)).unwrap();
        let single = simulate(&osp(30, 1, 6)).unwrap();
        assert_eq!(two.trials[1].players[0].checkpoints, single.trials[0].players[0].checkpoints);
    }

    #[test]
    fn zero_adversary_has_zero_regret() {
        let mut cfg = osp(40, 2, 1);
        cfg.adversary = Adversary::Zero;
        let r = simulate(&cfg).unwrap();
        assert!(r.trials.iter().all(|t| t.players[0].checkpoints.iter().all(|c| c.regret == 0.0)));
        assert!(r.aggregate.iter().all(|a| a.mean_regret == 0.0 && a.std_regret == 0.0));
    }

    #[test]
    fn aggregate_statistics() {
        let r = simulate(&osp(20, 3, 11)).unwrap();
        let row = r.aggregate[19];
        let vals: Vec<f64> = r.trials.iter().map(|t| t.players[0].checkpoints[19].regret).collect();
        let mean = vals.iter().sum::<f64>() / 3.0;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 2.0).sqrt();
        assert_eq!(row.t, 20);
        assert!((row.mean_regret - mean).abs() < 1e-12);
        assert!((row.std_regret - sd).abs() < 1e-12);
    }

    #[test]
    fn congestion_rows_per_player() {
        let mut cfg = ExperimentConfig::new(Problem::Cg);
        cfg.horizon = 15;
        let r = simulate(&cfg).unwrap();
        assert_eq!(r.trials[0].players.len(), 2);
        let mut buf = Vec::new();
        write_rows(&r, &mut buf).unwrap();
        let rows = read_rows(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 30);
        assert!(rows.iter().all(|r| r.3 >= 1.0));
    }

    #[test]
    fn steiner_problem_builds() {
        let mut cfg = ExperimentConfig::new(Problem::Dst);
        cfg.horizon = 5;
        let set = prepare(&cfg).unwrap();
        assert_eq!(set.zdd.count_u64(), Some(266));
    }

    #[test]
    fn aggregate_file_name() {
        assert_eq!(aggregate_path_for(Path::new("a/b.csv")), PathBuf::from("a/b_aggregate.csv"));
        assert_eq!(aggregate_path_for(Path::new("b")), PathBuf::from("b_aggregate"));
    }
}
