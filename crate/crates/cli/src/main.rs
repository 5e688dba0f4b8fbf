use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ellsberg_core::model::DecisionRule;
use ellsberg_core::preference::MaxminEu;
use ellsberg_core::rational::parse_rational;
use ellsberg_core::savage::{ExchangeScope, DEFAULT_BUDGET};

use ellsberg_cli::{commands, Output, UsageError};

#[derive(Parser)]
#[command(name = "ellsberg", version, about = "Analysis and verification for the informational-draw urn design")]
struct Cli {
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Joint,
    PerRiskyColor,
}

#[derive(Subcommand)]
enum Command {
    /// Classify one rule, or all 81 and check the partition.
    Classify {
        #[arg(long, conflicts_with = "all")]
        rule: Option<DecisionRule>,
        #[arg(long)]
        all: bool,
    },
    /// Scan all ordered pairs and print a certificate for every dominated rule.
    DominanceAudit,
    /// Worst-case winning probability of each rule over an interval of states.
    Maxmin {
        /// Interval `lo,hi` of green shares, as fractions or decimals.
        #[arg(long, value_parser = parse_interval, default_value = "0,1")]
        interval: MaxminEu,
    },
    /// Exact binomial confidence interval.
    Ci {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 0.95, value_parser = parse_confidence)]
        conf: f64,
    },
    /// Frequency table of chosen rules.
    Table {
        /// Choice CSV; the bundled dataset when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Share of dominated choices with its interval.
    Result1 {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 0.95, value_parser = parse_confidence)]
        conf: f64,
    },
    /// Check the state-space derivations and the embedded Ellsberg acts.
    SavageVerify {
        #[arg(long, value_enum, default_value = "per-risky-color")]
        scope: ScopeArg,
        /// Most search nodes visited per derivation.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Simulate a population of agents.
    Simulate {
        /// Population spec (JSON).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Also write the simulated choices as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the session service.
    Serve {
        #[arg(long, env = "ELLSBERG_ADDR", default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Directory for session logs; sessions are kept in memory when omitted.
        #[arg(long, env = "ELLSBERG_DATA")]
        data: Option<PathBuf>,
    },
}

fn parse_interval(s: &str) -> Result<MaxminEu, String> {
    let (lo, hi) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo = parse_rational(lo.trim()).map_err(|e| e.to_string())?;
    let hi = parse_rational(hi.trim()).map_err(|e| e.to_string())?;
    MaxminEu::new(lo, hi).map_err(|e| e.to_string())
}

fn parse_confidence(s: &str) -> Result<f64, String> {
    let c: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if c > 0.0 && c < 1.0 {
        Ok(c)
    } else {
        Err("confidence must lie strictly between 0 and 1".into())
    }
}

fn run(command: Command) -> anyhow::Result<Output> {
    match command {
        Command::Classify { rule, all: _ } => commands::classify(rule),
        Command::DominanceAudit => commands::dominance_audit(),
        Command::Maxmin { interval } => commands::maxmin(interval),
        Command::Ci { k, n, conf } => commands::ci(k, n, conf),
        Command::Table { data } => commands::table(data.as_deref()),
        Command::Result1 { data, conf } => commands::result1(data.as_deref(), conf),
        Command::SavageVerify { scope, budget } => {
            let scope = match scope {
                ScopeArg::Joint => ExchangeScope::Joint,
                ScopeArg::PerRiskyColor => ExchangeScope::PerRiskyColor,
            };
            commands::savage_verify(scope, budget)
        }
        Command::Simulate { spec, seed, out } => commands::simulate(&spec, seed, out.as_deref()),
        Command::Serve { .. } => unreachable!("handled in main"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Serve { addr, data } = cli.command {
        let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
        eprintln!("listening on {addr}");
        return match runtime.block_on(ellsberg_server::serve(addr, data)) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        };
    }
    match run(cli.command) {
        Ok(out) => {
            if cli.json {
                println!("{}", out.json);
            } else {
                print!("{}", out.text);
            }
            if out.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
