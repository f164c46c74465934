use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hdc_cli::commands::{
    cmd_data_prepare, cmd_eval, cmd_opcount, cmd_sweep, cmd_theory, cmd_theta_sweep, cmd_train, TheoryCommand,
    TheoryParams,
};
use hdc_cli::datasets::data_dir;
use hdc_cli::{CliError, CliResult, ExperimentConfig};
use hdc_core::model::CLASSIC_BASELINE_ADDITIONS;

#[derive(Parser)]
#[command(name = "hdc", version, about = "Binary hyperdimensional classifier experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Experiment flags; each overrides the matching key of `--config`.
#[derive(Args, Clone, Debug)]
struct ExpArgs {
    /// Flat TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    /// `median`, `auto` or a number.
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    retrain_step1: Option<bool>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    retrain_step2: Option<bool>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ExpArgs {
    fn resolve(&self) -> CliResult<ExperimentConfig> {
        let mut ov: Vec<(String, String)> = Vec::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects key=value, got {kv:?}")))?;
            ov.push((k.trim().to_string(), v.trim().to_string()));
        }
        let quoted = |s: &str| format!("{s:?}");
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                ov.push((k.to_string(), v));
            }
        };
        push("dataset", self.dataset.as_deref().map(quoted));
        push("dim", self.dim.map(|v| v.to_string()));
        push("layers", self.layers.map(|v| v.to_string()));
        push(
            "theta",
            self.theta.as_ref().map(|t| if t.parse::<f64>().is_ok() { t.clone() } else { quoted(t) }),
        );
        push("seed", self.seed.map(|v| v.to_string()));
        push("epochs", self.epochs.map(|v| v.to_string()));
        push("lr", self.lr.map(|v| format!("{v:e}")));
        push("retrain_step1", self.retrain_step1.map(|v| v.to_string()));
        push("retrain_step2", self.retrain_step2.map(|v| v.to_string()));
        push("out", self.out.as_ref().map(|p| quoted(&p.to_string_lossy())));
        ExperimentConfig::load(self.config.as_deref(), &ov)
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum TheoryKindArg {
    Worst,
    Average,
    Lemma2Check,
    Projection,
}

#[derive(Subcommand)]
enum DataAction {
    /// Binarize both splits and write EHDD containers to --out.
    Prepare(ExpArgs),
}

#[derive(Subcommand)]
enum Command {
    #[command(subcommand)]
    Data(DataAction),
    /// Train, generate prototypes, retrain, evaluate; writes model.ehdc.
    Train(ExpArgs),
    /// One pipeline per dimension; writes sweep.csv.
    Sweep {
        #[command(flatten)]
        exp: ExpArgs,
        #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
        dims: Vec<usize>,
    },
    /// Train once, regenerate prototypes per theta; writes theta_sweep.csv.
    ThetaSweep {
        #[command(flatten)]
        exp: ExpArgs,
        #[arg(long, value_delimiter = ',', default_value = "1000,1500,2000,2500,3000,3500,4000,4500")]
        thetas: Vec<f64>,
    },
    /// Theory curves and checks; writes theory_<kind>.csv.
    Theory {
        #[arg(value_enum)]
        kind: TheoryKindArg,
        /// Smallest dimension (default 1).
        #[arg(long, default_value_t = 1)]
        min_d: usize,
        /// Largest dimension; m for `projection`. Defaults: 1000, 1000, 10, 4.
        #[arg(long)]
        max_d: Option<usize>,
        /// Draws, instances or trials. Defaults: 1000, 100, 100.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        n_mc: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Inference op counts for an architecture like 784,64 or classic:784x10000.
    Opcount {
        #[arg(long, default_value = "784,64")]
        arch: String,
        #[arg(long, default_value_t = 10)]
        classes: usize,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Evaluate a saved model on the test split; writes eval.csv.
    Eval {
        #[command(flatten)]
        exp: ExpArgs,
        #[arg(long)]
        model: PathBuf,
    },
}

fn progress(line: &str) {
    eprintln!("{line}");
}

fn run(cli: Cli) -> CliResult<()> {
    let root = data_dir();
    match cli.command {
        Command::Data(DataAction::Prepare(exp)) => {
            let cfg = exp.resolve()?;
            for (path, digest) in cmd_data_prepare(&cfg, &root)? {
                println!("{}  {digest}", path.display());
            }
        }
        Command::Train(exp) => {
            let cfg = exp.resolve()?;
            let outcome = cmd_train(&cfg, &root, &mut progress)?;
            println!(
                "{} d={} layers={} theta={:.1} accuracy {:.2}%",
                cfg.dataset,
                cfg.dim,
                cfg.layers,
                outcome.prototypes.theta(),
                100.0 * outcome.accuracy()
            );
        }
        Command::Sweep { exp, dims } => {
            let cfg = exp.resolve()?;
            for r in cmd_sweep(&cfg, &root, &dims, &mut progress)? {
                println!("{},{:.4}", r.d, r.accuracy);
            }
        }
        Command::ThetaSweep { exp, thetas } => {
            let cfg = exp.resolve()?;
            for r in cmd_theta_sweep(&cfg, &root, &thetas, &mut progress)? {
                println!("{},{:.4}", r.theta, r.accuracy);
            }
        }
        Command::Theory {
            kind,
            min_d,
            max_d,
            n,
            n_mc,
            seed,
            out,
        } => {
            let (kind, default_max, default_n) = match kind {
                TheoryKindArg::Worst => (TheoryCommand::Worst, 1000, 0),
                TheoryKindArg::Average => (TheoryCommand::Average, 1000, 1000),
                TheoryKindArg::Lemma2Check => (TheoryCommand::Lemma2Check, 10, 100),
                TheoryKindArg::Projection => (TheoryCommand::Projection, 4, 100),
            };
            let max_d = max_d.unwrap_or(default_max);
            if min_d == 0 || min_d > max_d {
                return Err(CliError::Config(format!("need 1 <= min-d <= max-d, got {min_d}..{max_d}")));
            }
            let params = TheoryParams {
                kind,
                dims: (min_d..=max_d).collect(),
                n: n.unwrap_or(default_n),
                n_mc,
                seed,
                out,
            };
            let output = cmd_theory(&params)?;
            match (kind, output.passed) {
                (TheoryCommand::Lemma2Check, Some(true)) => println!("all matched"),
                (TheoryCommand::Lemma2Check, Some(false)) => println!("MISMATCH"),
                (TheoryCommand::Projection, Some(ok)) => {
                    println!("{}", if ok { "no violations" } else { "violations found" })
                }
                _ => {}
            }
            println!("wrote {}", output.path.display());
        }
        Command::Opcount { arch, classes, out } => {
            let r = cmd_opcount(&arch, classes, &out)?;
            println!("encoder additions {}", r.encoder_additions);
            println!("boolean ops       {}", r.boolean_ops);
            println!("similarity ops    {}", r.similarity_ops);
            println!(
                "ratio to {} baseline additions: {:.2}%",
                CLASSIC_BASELINE_ADDITIONS,
                100.0 * r.baseline_ratio()
            );
        }
        Command::Eval { exp, model } => {
            let cfg = exp.resolve()?;
            let eval = cmd_eval(&cfg, &root, &model)?;
            println!("accuracy {:.2}% ({}/{})", 100.0 * eval.accuracy(), eval.correct, eval.total);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
