//! Batch driver for the impostor pipeline.
//!
//! Every subcommand prints its results as `key=value` lines on standard
//! output. Failures print one `error kind=<usage|data|numerical> msg=...`
//! line on standard error and map to exit codes 1, 2 and 3.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use impostor::io::config::ConfigFile;
use impostor::rendering::RenderMode;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "impostor", version, about = "Train, render and edit tetrahedral neural impostors")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Storage precision of trainable values.
    #[arg(long, global = true, value_enum, default_value_t = Precision::F64)]
    pub precision: Precision,
    /// Worker threads; 1 is the reproducible reference.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// File of `flag = value` lines; explicit flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Early,
    DecodeFirst,
}

impl From<Mode> for RenderMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Early => RenderMode::EarlyIntegration,
            Mode::DecodeFirst => RenderMode::DecodeFirst,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Background {
    White,
    Black,
}

impl Background {
    pub fn rgb(self) -> [f64; 3] {
        match self {
            Background::White => [1.0; 3],
            Background::Black => [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SceneKind {
    Toy,
}

/// Options shared by every subcommand that renders.
#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    /// Integration mode.
    #[arg(long, value_enum, default_value_t = Mode::Early)]
    pub mode: Mode,
    /// Constant background colour.
    #[arg(long, value_enum, default_value_t = Background::White)]
    pub background: Background,
    /// Growth of the sampling step with distance travelled.
    #[arg(long, default_value_t = 0.01)]
    pub cone_angle: f64,
    /// Initial sampling step in barycentric units.
    #[arg(long, default_value_t = 0.05)]
    pub base_step: f64,
    /// Upper bound on samples per ray.
    #[arg(long, default_value_t = 512)]
    pub max_samples: usize,
}

/// Optimiser settings.
#[derive(Debug, Clone, Args)]
pub struct OptimArgs {
    /// Optimisation steps.
    #[arg(long, default_value_t = 5000)]
    pub steps: usize,
    /// Rays per step.
    #[arg(long, default_value_t = 1024)]
    pub batch: usize,
    /// Learning rate of the hash-table features.
    #[arg(long, default_value_t = 1e-2)]
    pub lr_features: f64,
    /// Learning rate of both decoders.
    #[arg(long, default_value_t = 1e-3)]
    pub lr_decoders: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the toy scene: proxy mesh plus rendered training and held-out views.
    GenScene {
        /// Output directory; receives mesh.tet, train/ and holdout/.
        #[arg(long)]
        out: PathBuf,
        /// Image width and height.
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        /// Quadrature samples per ray of the reference renderer.
        #[arg(long, default_value_t = 512)]
        quality: usize,
        /// Constant background colour.
        #[arg(long, value_enum, default_value_t = Background::White)]
        background: Background,
    },
    /// Fit a model to a dataset and write a checkpoint.
    Train {
        /// Built-in scene to fit.
        #[arg(long, value_enum, conflicts_with = "data")]
        scene: Option<SceneKind>,
        /// Dataset directory with cameras.txt and frame_####.ppm files.
        #[arg(long, requires = "mesh")]
        data: Option<PathBuf>,
        /// Proxy mesh for --data.
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// Held-out dataset directory reported as psnr_holdout.
        #[arg(long)]
        holdout: Option<PathBuf>,
        /// Checkpoint to write.
        #[arg(long)]
        out: PathBuf,
        /// Base-2 logarithm of the hash-table budget.
        #[arg(long, default_value_t = 19)]
        log2_table: u32,
        /// Spherical-harmonic bands of the direction encoding.
        #[arg(long, default_value_t = 4)]
        sh_degree: usize,
        #[command(flatten)]
        optim: OptimArgs,
        #[command(flatten)]
        render: RenderArgs,
    },
    /// Render a checkpoint from every camera of a camera file.
    Render {
        /// Checkpoint to render.
        #[arg(long)]
        model: PathBuf,
        /// Camera file.
        #[arg(long)]
        camera: PathBuf,
        /// Output image (.ppm or .png); several cameras add a _#### suffix.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        render: RenderArgs,
    },
    /// Replace the proxy's vertex positions.
    Deform {
        /// Checkpoint to deform.
        #[arg(long)]
        model: PathBuf,
        /// Frame file with the new vertex positions.
        #[arg(long)]
        frame: PathBuf,
        /// Checkpoint to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an edit script and render the edited model.
    Boolean {
        /// Checkpoint to edit.
        #[arg(long)]
        model: PathBuf,
        /// Edit script.
        #[arg(long)]
        script: PathBuf,
        /// Camera file.
        #[arg(long)]
        camera: PathBuf,
        /// Output image (.ppm or .png).
        #[arg(long)]
        out: PathBuf,
        /// Density threshold of density leaves.
        #[arg(long, default_value_t = impostor::editing::DEFAULT_EPS)]
        eps: f64,
        #[command(flatten)]
        render: RenderArgs,
    },
    /// Render one model with a second model substituted inside a mask.
    Blend {
        /// Base checkpoint.
        #[arg(long)]
        model: PathBuf,
        /// Checkpoint rendered inside the mask.
        #[arg(long)]
        other: PathBuf,
        /// Mask script of bool commands, starting from the empty set.
        #[arg(long)]
        mask: PathBuf,
        /// Camera file.
        #[arg(long)]
        camera: PathBuf,
        /// Output image (.ppm or .png).
        #[arg(long)]
        out: PathBuf,
        /// Density threshold of density leaves.
        #[arg(long, default_value_t = impostor::editing::DEFAULT_EPS)]
        eps: f64,
        #[command(flatten)]
        render: RenderArgs,
    },
    /// Move a trained field onto a re-tetrahedralized proxy.
    Retrain {
        /// Checkpoint trained on the old proxy.
        #[arg(long)]
        model: PathBuf,
        /// New proxy mesh.
        #[arg(long)]
        mesh: PathBuf,
        /// Checkpoint to write.
        #[arg(long)]
        out: PathBuf,
        /// Feature-matching steps.
        #[arg(long, default_value_t = 500)]
        stage1_steps: usize,
        /// Points per feature-matching step.
        #[arg(long, default_value_t = 16384)]
        stage1_points: usize,
        /// Render-matching steps.
        #[arg(long, default_value_t = 500)]
        stage2_steps: usize,
        /// Rays per render-matching step.
        #[arg(long, default_value_t = 512)]
        stage2_batch: usize,
        /// Keep both decoders fixed.
        #[arg(long)]
        freeze_decoders: bool,
        #[command(flatten)]
        render: RenderArgs,
    },
    /// Render several transformed checkpoints as one scene.
    Compose {
        /// Compose file of instance lines.
        #[arg(long)]
        scene: PathBuf,
        /// Camera file.
        #[arg(long)]
        camera: PathBuf,
        /// Output image (.ppm or .png).
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        render: RenderArgs,
    },
    /// Compare two images.
    Eval {
        /// First image.
        #[arg(long)]
        a: PathBuf,
        /// Second image.
        #[arg(long)]
        b: PathBuf,
    },
}

pub fn command() -> clap::Command {
    Cli::command()
}

/// Failure of a subcommand, classified for the exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn line(&self) -> String {
        let (kind, msg) = match self {
            Failure::Usage(m) => ("usage", m),
            Failure::Data(m) => ("data", m),
            Failure::Numerical(m) => ("numerical", m),
        };
        format!("error kind={kind} msg={}", msg.replace('\n', " "))
    }
}

impl From<impostor::Error> for Failure {
    fn from(e: impostor::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                impostor::Error::from(e).into()
            }
        }
    )*};
}

data_error!(
    impostor::io::FormatError,
    impostor::geometry::GeometryError,
    impostor::editing::EditError,
    impostor::training::TrainError,
    impostor::rendering::RenderError,
    impostor::encoding::EncodingError,
    impostor::sampling::SamplingError
);

/// Expands `--config` into flags placed before the explicit ones.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let strings: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let pos = strings.iter().position(|a| a == "--config" || a.starts_with("--config="));
    let Some(pos) = pos else { return Ok(args) };
    let path = match strings[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => strings
            .get(pos + 1)
            .cloned()
            .ok_or_else(|| Failure::Usage("--config needs a file".into()))?,
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::Data(format!("{path}: {e}")))?;
    let cfg = ConfigFile::parse(&text)?;
    let mut out = args;
    out.extend(cfg.to_args(&strings).into_iter().map(OsString::from));
    Ok(out)
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit code. Standard output receives the result lines.
pub fn run<I, T>(args: I, out: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let result = expand_config(args).and_then(|args| {
        let parsed = command()
            .try_get_matches_from(args)
            .and_then(|m| Cli::from_arg_matches(&m));
        match parsed {
            Ok(cli) => commands::execute(&cli, out).map(|()| EXIT_OK),
            Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
                let _ = write!(out, "{}", e.render());
                Ok(EXIT_OK)
            }
            Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                Err(Failure::Usage("missing subcommand".into()))
            }
            Err(e) => {
                let text = e.to_string();
                let msg: Vec<&str> = text
                    .lines()
                    .take_while(|l| !l.starts_with("Usage:"))
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .collect();
                Err(Failure::Usage(msg.join(" ").trim_start_matches("error: ").to_string()))
            }
        }
    });
    result.unwrap_or_else(|f| {
        eprintln!("{}", f.line());
        f.code()
    })
}
