//! `elmdoc`: CNN feature extraction and ELM classification from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use elmdoc_core::{Activation, ReportFormat};

use config::{ElmOverrides, GridOverrides};

#[derive(Debug, Parser)]
#[command(
    name = "elmdoc",
    version,
    about = "CNN features + extreme learning machine document classifier"
)]
struct Cli {
    /// Worker threads for extraction and grid evaluation [default: all cores]
    #[arg(long, global = true, env = "ELMDOC_THREADS")]
    threads: Option<usize>,

    /// JSON config file; command-line flags take precedence over it
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every image of a corpus through the CNN stub and write an FMX1 feature file
    Extract(ExtractArgs),
    /// Train an ELM on a feature file and write an ELM1 model
    Train(TrainArgs),
    /// Classify a feature file with a trained model
    Predict(PredictArgs),
    /// Run the partition grid and write accuracy reports
    Evaluate(EvaluateArgs),
    /// Time one training and one prediction pass
    Bench(BenchArgs),
    /// Write a built-in network description to an EFW1 file
    Netspec(NetspecArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ElmFlags {
    /// Hidden node count N [default: 2000]
    #[arg(long)]
    hidden: Option<usize>,
    /// Regularization coefficient C, larger is weaker [default: 1.0]
    #[arg(long = "reg")]
    reg: Option<f64>,
    /// Hidden activation [default: sigmoid]
    #[arg(long, value_parser = ["sigmoid", "relu"])]
    activation: Option<String>,
    /// Skip z-score normalization of the features
    #[arg(long)]
    no_normalize: bool,
    /// Seed for the random hidden layer and, unless set separately, the partitions [default: 0]
    #[arg(long)]
    seed: Option<u64>,
}

impl ElmFlags {
    fn overrides(&self) -> ElmOverrides {
        ElmOverrides {
            hidden: self.hidden,
            c: self.reg,
            activation: self
                .activation
                .as_deref()
                .map(|a| a.parse::<Activation>().expect("restricted by clap")),
            no_normalize: self.no_normalize,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GridFlags {
    /// Training images per class, comma separated [default: 10,20,...,100]
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Random partitions per size [default: 10]
    #[arg(long)]
    reps: Option<usize>,
    /// ELMs trained per partition, each with its own hidden layer [default: 10]
    #[arg(long)]
    elm_repeats: Option<usize>,
    /// Seed for the partitions [default: the ELM seed]
    #[arg(long)]
    partition_seed: Option<u64>,
}

impl GridFlags {
    fn overrides(&self) -> GridOverrides {
        GridOverrides {
            sizes: self.sizes.clone(),
            reps: self.reps,
            elm_repeats: self.elm_repeats,
            partition_seed: self.partition_seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Corpus root: one subdirectory per class (or a flat directory with --unlabeled)
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// EFW1 network file
    #[arg(long, conflicts_with = "alexnet_stub")]
    netspec: Option<PathBuf>,
    /// Use the AlexNet-shaped stub with random weights instead of a network file
    #[arg(long)]
    alexnet_stub: bool,
    /// Output feature file (.fmx)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Treat the corpus as a flat directory of images without classes
    #[arg(long)]
    unlabeled: bool,
    /// How images are fitted to the network input: squash, letterbox or letterbox:FILL
    #[arg(long, default_value = "squash")]
    resize: String,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled features (.fmx or .csv)
    #[arg(long)]
    features: Option<PathBuf>,
    /// Output model file (.elm)
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    elm: ElmFlags,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// ELM1 model file
    #[arg(long)]
    model: PathBuf,
    /// Features to classify (.fmx or .csv, labels optional)
    #[arg(long)]
    features: Option<PathBuf>,
    /// Write the predictions CSV here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Labeled features (.fmx or .csv)
    #[arg(long)]
    features: Option<PathBuf>,
    /// Report prefix: writes PREFIX.csv, PREFIX.json and PREFIX.confusion.txt
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format on standard output
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[command(flatten)]
    elm: ElmFlags,
    #[command(flatten)]
    grid: GridFlags,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Labeled features (.fmx or .csv)
    #[arg(long, conflicts_with = "synthetic")]
    features: Option<PathBuf>,
    /// Generate NxD Gaussian training features instead of reading a file, e.g. 1000x9216
    #[arg(long)]
    synthetic: Option<String>,
    /// Classes in the synthetic set
    #[arg(long, default_value_t = 10)]
    classes: usize,
    /// Training images per class; the rest is the test set [default: N/classes with --synthetic, otherwise 100 capped so every class keeps a test image]
    #[arg(long)]
    train_per_class: Option<usize>,
    /// Output format on standard output
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[command(flatten)]
    elm: ElmFlags,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NetKind {
    /// AlexNet-shaped conv stack with random weights, 3x227x227 to 9216 features
    AlexnetStub,
    /// One 1x1 convolution that copies its 3 input channels
    Identity,
}

#[derive(Debug, Args)]
pub struct NetspecArgs {
    #[arg(value_enum)]
    kind: NetKind,
    /// Output EFW1 file
    #[arg(long)]
    out: PathBuf,
    /// Weight seed for the stub
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Input height and width of the identity network
    #[arg(long, default_value_t = 8)]
    size: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        anyhow::ensure!(n >= 1, "--threads must be at least 1");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    let file = config::FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Extract(a) => commands::extract(&file, a),
        Command::Train(a) => commands::train(&file, a),
        Command::Predict(a) => commands::predict(&file, a),
        Command::Evaluate(a) => commands::evaluate(&file, a),
        Command::Bench(a) => commands::bench(&file, a),
        Command::Netspec(a) => commands::netspec(a),
    }
}
