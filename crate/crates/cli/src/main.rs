use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use neurd::eval::nashconv;
use neurd::experiment::{run_experiment, ExperimentConfig, Settings};
use neurd::games::GameId;
use neurd::policy::TabularPolicy;

/// NeuRD, Hedge, softmax policy gradient and CFR experiments on small games.
#[derive(Parser, Debug)]
#[command(name = "neurd", version)]
struct Cli {
    /// Seed for every random choice; overrides the config's seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Directory for CSV output.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Flat key=value config file, applied on top of the preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named preset to start from.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Extra key=value overrides, applied last.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Repeated matching pennies against a scripted opponent.
    Pennies(PenniesArgs),
    /// Euler-integrated RD / QPG dynamics on a matrix game.
    Dynamics(DynamicsArgs),
    /// Tabular CFR with NeuRD, Hedge or SPG local learners.
    Cfr(CfrArgs),
    /// Neural actor-critic training with NeuRD or SPG.
    Train(TrainArgs),
    /// NashConv of a policy table.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct PenniesArgs {
    /// Comma-separated learners (hedge, neurd, spg).
    #[arg(long)]
    learner: Option<String>,
    /// Comma-separated step sizes, or `auto` to tune over the default grid.
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Drop the forfeit action.
    #[arg(long)]
    no_forfeit: bool,
}

#[derive(Args, Debug)]
struct DynamicsArgs {
    /// Matrix game, e.g. rps:3.
    #[arg(long)]
    game: Option<String>,
    /// Comma-separated dynamics (rd, qpg).
    #[arg(long)]
    dynamics: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    trajectories: Option<usize>,
    /// Phase schedule, e.g. `nu=20,1000:nu=0,2000:nu=20`.
    #[arg(long)]
    schedule: Option<String>,
    /// logit or policy.
    #[arg(long)]
    integrator: Option<String>,
    #[arg(long)]
    eval_every: Option<usize>,
}

#[derive(Args, Debug)]
struct CfrArgs {
    #[arg(long)]
    game: Option<String>,
    /// Comma-separated learners (neurd, hedge, spg).
    #[arg(long)]
    learner: Option<String>,
    /// Comma-separated constant step sizes.
    #[arg(long, conflicts_with = "eta_schedule")]
    eta: Option<String>,
    /// Step-size schedule, e.g. `bound:1000`.
    #[arg(long)]
    eta_schedule: Option<String>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    eval_every: Option<usize>,
    /// Reward phases, e.g. `identity,500:negate`.
    #[arg(long)]
    schedule: Option<String>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    game: Option<String>,
    /// Comma-separated algorithms (neurd, spg).
    #[arg(long)]
    algo: Option<String>,
    /// Comma-separated entropy regularization levels.
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    /// Seed list `0,1,2` or range `0..5`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    policy_updates: Option<usize>,
    /// Negate rewards every this many policy updates (0 disables).
    #[arg(long)]
    switch_every: Option<usize>,
    #[arg(long)]
    eval_every: Option<usize>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    game: String,
    /// Policy table: one `key p0 p1 ...` line per information state.
    #[arg(long)]
    policy: PathBuf,
}

fn put<T: ToString>(s: &mut Settings, key: &str, value: &Option<T>) -> Result<()> {
    if let Some(v) = value {
        s.set(key, &v.to_string())?;
    }
    Ok(())
}

fn settings(cli: &Cli, kind: &str) -> Result<Settings> {
    let mut s = match &cli.preset {
        Some(p) => Settings::preset(p)?,
        None => {
            let mut s = Settings::new();
            s.set("kind", kind)?;
            s
        }
    };
    if let Some(path) = &cli.config {
        s.load(path)
            .with_context(|| format!("reading config {}", path.display()))?;
    }
    if s.get("kind") != Some(kind) {
        bail!(
            "preset/config is a `{}` experiment, not `{kind}`",
            s.get("kind").unwrap_or("?")
        );
    }
    match &cli.command {
        Command::Pennies(a) => {
            put(&mut s, "algos", &a.learner)?;
            put(&mut s, "etas", &a.eta)?;
            put(&mut s, "horizon", &a.horizon)?;
            if a.no_forfeit {
                s.set("forfeit", "false")?;
            }
        }
        Command::Dynamics(a) => {
            put(&mut s, "game", &a.game)?;
            put(&mut s, "algos", &a.dynamics)?;
            put(&mut s, "dt", &a.dt)?;
            put(&mut s, "horizon", &a.steps)?;
            put(&mut s, "trajectories", &a.trajectories)?;
            put(&mut s, "schedule", &a.schedule)?;
            put(&mut s, "integrator", &a.integrator)?;
            put(&mut s, "eval_every", &a.eval_every)?;
        }
        Command::Cfr(a) => {
            put(&mut s, "game", &a.game)?;
            put(&mut s, "algos", &a.learner)?;
            put(&mut s, "etas", &a.eta)?;
            put(&mut s, "etas", &a.eta_schedule)?;
            put(&mut s, "horizon", &a.iters)?;
            put(&mut s, "eval_every", &a.eval_every)?;
            put(&mut s, "schedule", &a.schedule)?;
        }
        Command::Train(a) => {
            put(&mut s, "game", &a.game)?;
            put(&mut s, "algos", &a.algo)?;
            put(&mut s, "taus", &a.tau)?;
            put(&mut s, "beta", &a.beta)?;
            put(&mut s, "seeds", &a.seeds)?;
            put(&mut s, "horizon", &a.policy_updates)?;
            put(&mut s, "switch_every", &a.switch_every)?;
            put(&mut s, "eval_every", &a.eval_every)?;
        }
        Command::Eval(_) => unreachable!("eval does not run an experiment"),
    }
    put(&mut s, "seeds", &cli.seed)?;
    for pair in &cli.set {
        s.set_pair(pair)?;
    }
    Ok(s)
}

fn eval(args: &EvalArgs) -> Result<()> {
    let game: GameId = args.game.parse()?;
    let tree = game.tree();
    let text = fs::read_to_string(&args.policy)
        .with_context(|| format!("reading policy {}", args.policy.display()))?;
    let policy = TabularPolicy::from_text(&tree, &text)?;
    let r = nashconv(&tree, &policy);
    println!("game: {game}");
    for p in 0..2 {
        println!(
            "player {p}: expected value {:.6}, best-response value {:.6}",
            r.expected_values[p], r.br_values[p]
        );
    }
    println!("nashconv: {:.6}", r.nashconv);
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let kind = match &cli.command {
        Command::Eval(a) => return eval(a),
        Command::Pennies(_) => "pennies",
        Command::Dynamics(_) => "dynamics",
        Command::Cfr(_) => "cfr",
        Command::Train(_) => "train",
    };
    let settings = settings(&cli, kind)?;
    let config = ExperimentConfig::from_settings(&settings, &cli.out_dir)?;
    let out = run_experiment(&config, cli.workers)?;
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    println!("wrote {}", out.summary.display());
    print!("{}", fs::read_to_string(&out.summary)?);
    Ok(())
}
