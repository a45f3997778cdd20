//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::drl::{load_agent, save_agent, FlopsReport};
use crate::error::{Error, Result};
use crate::orchestrator::{
    episode_means, evaluate_inference, exhaustive_baseline, rate_sweep, tail_mean, train_beamsteering,
    train_clustering, train_hierarchical, BeamAgents, Policy, RunOptions, RunPlan, SweepOptions, Training,
};
use crate::par::Execution;
use crate::partitioning::{enumerate_configs, CountReport, DEFAULT_CAP};
use crate::report::{fmt_float, key_values, write_csv, write_text};

#[derive(Debug, Parser)]
#[command(name = "cellfree", version, about = "Cell-free mmWave MIMO partitioning and hybrid beamforming simulator")]
pub struct Cli {
    /// Overrides the plan's master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run plan (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// No progress or summary on the terminal.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerated, closed-form and printed-formula configuration counts.
    CountConfigs {
        m: usize,
        k: usize,
        n: usize,
        l: usize,
        /// Largest space to enumerate explicitly.
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u64,
    },
    /// Hybrid against conventional sum rate over transmit powers.
    Simulate {
        /// Transmit powers in dBm.
        #[arg(long, value_delimiter = ',', default_values_t = [20.0, 25.0, 30.0, 35.0, 40.0])]
        powers: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        draws: usize,
        /// Subnetwork counts (default: the plan's).
        #[arg(long, value_delimiter = ',')]
        subnetworks: Vec<usize>,
    },
    /// Trains the clustering agent with the plan's inner beam stage.
    TrainCluster,
    /// Trains one beamsteering agent on a fixed configuration.
    TrainBeam,
    /// Two-timescale training of clustering and beamsteering agents.
    TrainHier,
    /// Inference rollout of a saved clustering agent against the random and
    /// exhaustive baselines.
    Eval {
        /// Clustering agent snapshot.
        #[arg(long)]
        agent: PathBuf,
        /// Beamsteering agent snapshots, one per subnetwork in order.
        #[arg(long = "beam-agent")]
        beam_agents: Vec<PathBuf>,
        /// Slots to roll out (default: the plan's eval_slots).
        #[arg(long)]
        slots: Option<usize>,
    },
    /// Inference FLOPs of an agent network.
    Flops {
        #[arg(long)]
        state: u64,
        #[arg(long)]
        action: u64,
    },
}

/// Parses `args` (program name first) and runs; returns the exit status.
/// Errors print one line on `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let first = e.to_string().lines().next().unwrap_or("invalid arguments").to_string();
            let usage = <Cli as clap::CommandFactory>::command().render_usage().to_string();
            let _ = writeln!(err, "{}; {}", first.trim(), usage.trim());
            return 2;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.to_string().replace('\n', " "));
            1
        }
    }
}

fn load_plan(cli: &Cli) -> Result<RunPlan> {
    let mut plan = match &cli.config {
        Some(p) => RunPlan::load(p)?,
        None => RunPlan::default(),
    };
    if let Some(s) = cli.seed {
        plan.seed = s;
    }
    plan.validate()?;
    Ok(plan)
}

fn options(cli: &Cli) -> RunOptions {
    RunOptions {
        exec: if cli.sequential { Execution::Sequential } else { Execution::Parallel },
        progress: !cli.quiet,
    }
}

fn say(cli: &Cli, out: &mut dyn Write, text: &str) -> Result<()> {
    if !cli.quiet {
        out.write_all(text.as_bytes()).map_err(|e| Error::io(Path::new("<stdout>"), e))?;
    }
    Ok(())
}

fn pair(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::CountConfigs { m, k, n, l, cap } => count_configs(*m, *k, *n, *l, *cap, out),
        Command::Flops { state, action } => {
            let r = FlopsReport::new(*state, *action);
            writeln!(out, "flops_estimate = {}\ntable_form = {}", r.estimate, r.table_form)
                .map_err(|e| Error::io(Path::new("<stdout>"), e))
        }
        Command::Simulate {
            powers,
            draws,
            subnetworks,
        } => {
            let plan = load_plan(cli)?;
            let sweep = SweepOptions {
                powers_dbm: powers.clone(),
                draws: *draws,
                subnetworks: if subnetworks.is_empty() { vec![plan.network.subnetworks] } else { subnetworks.clone() },
                ..SweepOptions::default()
            };
            let samples = rate_sweep(&plan, &sweep, options(cli).exec)?;
            write_csv(&samples, &cli.out.join("simulate.csv"))?;
            let mut pairs = Vec::new();
            for &n in &sweep.subnetworks {
                for &p in &sweep.powers_dbm {
                    let sel: Vec<_> = samples.iter().filter(|s| s.subnetworks == n && s.tx_power_dbm == p).collect();
                    let c = sel.len() as f64;
                    let h = sel.iter().map(|s| s.hybrid).sum::<f64>() / c;
                    let v = sel.iter().map(|s| s.conventional).sum::<f64>() / c;
                    pairs.push(pair(&format!("n{n}_p{p}_hybrid"), fmt_float(h)));
                    pairs.push(pair(&format!("n{n}_p{p}_conventional"), fmt_float(v)));
                }
            }
            let text = key_values(&pairs);
            write_text(&cli.out.join("summary.txt"), &text)?;
            say(cli, out, &text)
        }
        Command::TrainCluster | Command::TrainHier => {
            let plan = load_plan(cli)?;
            let training = if matches!(cli.command, Command::TrainHier) {
                train_hierarchical(&plan, options(cli))?
            } else {
                train_clustering(&plan, options(cli))?
            };
            let exhaustive = exhaustive_baseline(&plan, options(cli))?;
            write_training(cli, &plan, &training, exhaustive.best_reward, out)
        }
        Command::TrainBeam => {
            let plan = load_plan(cli)?;
            let t = train_beamsteering(&plan, options(cli))?;
            write_csv(&t.log, &cli.out.join("beam_log.csv"))?;
            write_text(&cli.out.join("beam_agent.txt"), &save_agent(t.agent.as_ref()))?;
            write_text(&cli.out.join("plan.toml"), &plan.to_toml()?)?;
            let mut pairs = vec![
                pair("algorithm", plan.beamsteering.algorithm),
                pair("steps", t.log.len()),
                pair("final_reward", fmt_float(t.final_reward)),
            ];
            if let Some(g) = t.grid_optimum {
                pairs.push(pair("grid_optimum", fmt_float(g)));
                pairs.push(pair("grid_ratio", fmt_float(t.final_reward / g)));
            }
            pairs.push(pair("wall_clock_s", format!("{:.3}", t.wall_clock.as_secs_f64())));
            let text = key_values(&pairs);
            write_text(&cli.out.join("summary.txt"), &text)?;
            say(cli, out, &text)
        }
        Command::Eval {
            agent,
            beam_agents,
            slots,
        } => {
            let plan = load_plan(cli)?;
            let hyper = plan.hyper(1)?;
            let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
            let mut cluster = load_agent(&read(agent)?, &hyper).map_err(|e| e.context(agent.display().to_string()))?;
            let mut beams: BeamAgents = Vec::new();
            for p in beam_agents {
                beams.push(Some(load_agent(&read(p)?, &hyper).map_err(|e| e.context(p.display().to_string()))?));
            }
            let slots = slots.unwrap_or(plan.clustering.eval_slots);
            let opts = RunOptions {
                progress: false,
                ..options(cli)
            };
            let trained = evaluate_inference(&plan, Policy::Agent(cluster.as_mut()), &mut beams, slots, opts)?;
            let random = evaluate_inference(&plan, Policy::Random, &mut beams, slots, opts)?;
            write_csv(&trained.slots, &cli.out.join("eval.csv"))?;
            write_csv(&random.slots, &cli.out.join("eval_random.csv"))?;
            let text = key_values(&[
                pair("slots", slots),
                pair("agent_mean_reward", fmt_float(trained.mean_reward)),
                pair("agent_mean_ue_rate", fmt_float(trained.mean_ue_rate)),
                pair("random_mean_reward", fmt_float(random.mean_reward)),
                pair("random_mean_ue_rate", fmt_float(random.mean_ue_rate)),
                pair("oracle_mean_reward", fmt_float(trained.oracle_mean_reward)),
                pair("oracle_ratio", fmt_float(trained.oracle_ratio())),
            ]);
            write_text(&cli.out.join("summary.txt"), &text)?;
            say(cli, out, &text)
        }
    }
}

fn count_configs(m: usize, k: usize, n: usize, l: usize, cap: u64, out: &mut dyn Write) -> Result<()> {
    let report = CountReport::new(m, k, n, l)?;
    let enumerated = match enumerate_configs(m, k, n, l, cap) {
        Ok(space) => space.len().to_string(),
        Err(Error::ActionSpaceTooLarge { .. }) => format!("{} (counted, above cap {cap})", report.enumerated),
        Err(e) => return Err(e),
    };
    let text = key_values(&[
        pair("enumerated", enumerated),
        pair("closed_form", &report.closed_form),
        pair("paper_formula", report.paper_formula),
        pair("discrepancy", report.paper_discrepancy()),
    ]);
    out.write_all(text.as_bytes()).map_err(|e| Error::io(Path::new("<stdout>"), e))
}

fn write_training(cli: &Cli, plan: &RunPlan, t: &Training, optimum: f64, out: &mut dyn Write) -> Result<()> {
    write_csv(&t.cluster_log, &cli.out.join("cluster_log.csv"))?;
    if !t.beam_log.is_empty() {
        write_csv(&t.beam_log, &cli.out.join("beam_log.csv"))?;
    }
    write_text(&cli.out.join("cluster_agent.txt"), &save_agent(t.cluster_agent.as_ref()))?;
    for (n, a) in t.beam_agents.iter().enumerate() {
        if let Some(a) = a {
            write_text(&cli.out.join(format!("beam_agent_{n}.txt")), &save_agent(a.as_ref()))?;
        }
    }
    write_text(&cli.out.join("plan.toml"), &plan.to_toml()?)?;
    let means = episode_means(&t.cluster_log);
    let final_mean = tail_mean(&means, 100);
    let text = key_values(&[
        pair("algorithm", plan.clustering.algorithm),
        pair("episodes", means.len()),
        pair("final_mean_reward", fmt_float(final_mean)),
        pair("exhaustive_optimum", fmt_float(optimum)),
        pair("oracle_ratio", fmt_float(if optimum > 0.0 { final_mean / optimum } else { 0.0 })),
        pair("wall_clock_s", format!("{:.3}", t.wall_clock.as_secs_f64())),
    ]);
    write_text(&cli.out.join("summary.txt"), &text)?;
    say(cli, out, &text)
}
