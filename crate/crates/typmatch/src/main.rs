use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use typmatch::dist::LogBase;
use typmatch::harness::{
    cmd_gen, cmd_match, cmd_mi, cmd_permtyp, cmd_sweep, parse_base_arg, parse_epsilon_arg,
    parse_mode_arg, CmdOutput, HarnessError,
};
use typmatch::matcher::{EpsilonChoice, SearchMode};

/// Correlated graph pairs: generate, anonymize, and re-match by joint
/// typicality.
#[derive(Parser)]
#[command(name = "typmatch", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a correlated pair, anonymize one side, write a pair directory
    Gen {
        /// Number of vertices
        #[arg(long)]
        n: usize,
        /// Joint distribution file
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory to write graph1/graph2_anon/truth/dist into
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover the hidden labeling of a generated pair directory
    Match {
        /// Pair directory produced by gen
        #[arg(long)]
        pair: PathBuf,
        /// Typicality slack: 'auto' or a positive number
        #[arg(long, default_value = "auto", value_parser = parse_epsilon_arg)]
        epsilon: EpsilonChoice,
        /// 'exhaustive' (exact, small n) or 'greedy' (heuristic)
        #[arg(long, default_value = "exhaustive", value_parser = parse_mode_arg)]
        mode: SearchMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Probability that a permuted pair stays jointly typical
    Permtyp {
        #[arg(long)]
        dist: PathBuf,
        /// Number of vertices the cycle spec must cover
        #[arg(long)]
        n: usize,
        /// Cycle type, e.g. 'm=1;3,2' for one fixed point, a 3-cycle and
        /// a 2-cycle
        #[arg(long)]
        cycles: String,
        #[arg(long)]
        epsilon: f64,
        /// Monte Carlo sample count, used when exact enumeration is too
        /// large
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Decay horizon for the bound; defaults to the longest cycle
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Accept fixed points when there are fewer than sqrt(n) of them
        #[arg(long, default_value_t = false)]
        trust_positive_m: bool,
    },
    /// Run a (n, rho) experiment grid from a config file into a CSV
    Sweep {
        /// key=value config: n_list, rho_list, trials, epsilon, seed,
        /// mode, optional l
        #[arg(long)]
        config: PathBuf,
        /// CSV output path
        #[arg(long)]
        out: PathBuf,
    },
    /// Mutual information of a joint distribution file
    Mi {
        #[arg(long)]
        dist: PathBuf,
        /// '2' for bits, 'e' for nats
        #[arg(long, default_value = "2", value_parser = parse_base_arg)]
        base: LogBase,
    },
}

fn run(cli: Cli) -> Result<CmdOutput, HarnessError> {
    match cli.command {
        Command::Gen { n, dist, seed, out } => cmd_gen(n, &dist, seed, &out),
        Command::Match { pair, epsilon, mode, seed } => cmd_match(&pair, epsilon, mode, seed),
        Command::Permtyp { dist, n, cycles, epsilon, trials, t, seed, trust_positive_m } => {
            cmd_permtyp(&dist, n, &cycles, epsilon, trials, t, seed, trust_positive_m)
        }
        Command::Sweep { config, out } => cmd_sweep(&config, &out),
        Command::Mi { dist, base } => cmd_mi(&dist, base),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            eprint!("{}", out.stderr);
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
