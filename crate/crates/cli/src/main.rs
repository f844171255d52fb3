use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use reclab_core::fixtures::FixtureName;
use reclab_core::harness::{
    emit_reports, run_sweep, summarize, summary_text, ChannelFamily, Checks, ExperimentConfig,
    Status, TrialRecord,
};

#[derive(Parser, Debug)]
#[command(name = "reclab", version, about = "Recovery-channel inequality sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one check family (or `all`) on the default configuration.
    Check {
        /// dpi, thm1, thm2, lemma_mon, limit, hirsch, examples, regularize or all
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run a sweep described by a JSON config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a closed-form example: conditional-expectation, davies or identity.
    Fixture {
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Print the default configuration as JSON.
    DefaultConfig,
}

#[derive(Args, Debug, Default)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Directory for records.jsonl, summary.csv and summary.txt.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quad_panels: Option<usize>,
    #[arg(long)]
    quad_nodes: Option<usize>,
    #[arg(long)]
    tol_slack: Option<f64>,
}

impl Common {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(p) = self.quad_panels {
            cfg.quadrature.panels = p;
        }
        if let Some(n) = self.quad_nodes {
            cfg.quadrature.nodes_per_panel = n;
        }
        if let Some(t) = self.tol_slack {
            cfg.tolerances.slack_tol = t;
        }
    }
}

fn execute(
    cfg: &ExperimentConfig,
    keep: impl Fn(&TrialRecord) -> bool,
    out: Option<&PathBuf>,
) -> reclab_core::Result<i32> {
    cfg.validate()?;
    let records: Vec<TrialRecord> = run_sweep(cfg)?.into_iter().filter(|r| keep(r)).collect();
    print!("{}", summary_text(&summarize(&records)));
    let failures = records.iter().filter(|r| r.status == Status::Fail).count();
    if let Some(dir) = out {
        let outcome = emit_reports(&records, dir)?;
        for f in &outcome.files {
            eprintln!("wrote {}", f.display());
        }
        return Ok(outcome.exit_code());
    }
    Ok(i32::from(failures > 0))
}

fn run(cli: Cli) -> reclab_core::Result<i32> {
    match cli.command {
        Command::DefaultConfig => {
            println!(
                "{}",
                serde_json::to_string_pretty(&ExperimentConfig::default())?
            );
            Ok(0)
        }
        Command::Check { name, common } => {
            let mut cfg = ExperimentConfig {
                checks: Checks::only(&name)?,
                ..ExperimentConfig::default()
            };
            common.apply(&mut cfg);
            execute(&cfg, |_| true, common.out.as_ref())
        }
        Command::Sweep { config, common } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            common.apply(&mut cfg);
            execute(&cfg, |_| true, common.out.as_ref())
        }
        Command::Fixture { name, common } => {
            let fixture: FixtureName = name.parse()?;
            let mut cfg = ExperimentConfig {
                trials: 20,
                ..ExperimentConfig::default()
            };
            let prefix = match fixture {
                FixtureName::Identity => {
                    cfg.channel = ChannelFamily::Identity;
                    cfg.checks = Checks {
                        examples: false,
                        regularize: false,
                        ..Checks::all(true)
                    };
                    ""
                }
                FixtureName::ConditionalExpectation => {
                    cfg.checks = Checks::only("examples")?;
                    "condexp-"
                }
                FixtureName::Davies => {
                    cfg.checks = Checks::only("examples")?;
                    "davies-"
                }
            };
            common.apply(&mut cfg);
            execute(&cfg, |r| r.check.starts_with(prefix), common.out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
