use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lmt_core::pipeline::reconcile;
use lmt_core::{
    extract_merge_tree, geodesic_frames, interleaving_distance, linear_embedding_frames, one_center_tree,
    run_pipeline, AgreementMode, Connectivity, Ensemble, Frame, LabeledMergeTree, PipelineConfig, ScalarGrid,
};
use serde_json::{json, Map, Value};

use crate::document::{parse_tree, tree_to_value, TreeDocument};
use crate::failure::Failure;
use crate::report::{self, num, CenterView};

#[derive(Parser, Debug)]
#[command(name = "lmt", version, about = "Labeled merge tree ensembles: centers, consistency and morphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Full,
    Partial,
    Disagree,
}

impl From<Mode> for AgreementMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Full => AgreementMode::Full,
            Mode::Partial => AgreementMode::Partial,
            Mode::Disagree => AgreementMode::Disagree,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MorphMode {
    Geodesic,
    Linear,
}

#[derive(Args, Debug)]
struct Output {
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Glyph spacing.
    #[arg(long, default_value_t = 1.0)]
    g: f64,
    #[arg(long, value_enum, default_value_t = Mode::Partial)]
    mode: Mode,
    /// Use raw distances instead of dividing by the largest one.
    #[arg(long)]
    no_normalize: bool,
}

impl PipelineArgs {
    fn config(&self, delta: f64) -> PipelineConfig {
        PipelineConfig {
            mode: self.mode.into(),
            lambda: self.lambda,
            delta,
            g: self.g,
            normalize: !self.no_normalize,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// 1-center of an ensemble and each member's distance to it.
    Center {
        #[arg(required = true)]
        trees: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Partial)]
        mode: Mode,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Labeled interleaving distance between two trees.
    Distance { a: PathBuf, b: PathBuf },
    /// Relabel members against the pivot tree.
    Relabel {
        #[arg(required = true)]
        trees: Vec<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, value_enum, default_value_t = Mode::Partial)]
        mode: Mode,
        #[command(flatten)]
        output: Output,
    },
    /// Vertex, variational, statistical and edge consistency.
    Consistency {
        #[arg(required = true)]
        trees: Vec<PathBuf>,
        #[command(flatten)]
        params: PipelineArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Frames morphing tree `a` into tree `b`.
    Geodesic {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = MorphMode::Geodesic)]
        mode: MorphMode,
        /// Attach per-label consistency against `b` to every frame.
        #[arg(long)]
        consistency: bool,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Merge tree of a scalar grid (CSV, or binary for .bin files).
    Extract {
        grid: PathBuf,
        #[arg(long, default_value_t = 4, value_parser = parse_connectivity)]
        connectivity: u32,
        /// Keep regular samples as degree-2 vertices.
        #[arg(long)]
        augmented: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Consistency reports over several locality parameters.
    SweepDelta {
        #[arg(required = true)]
        trees: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.07,0.10,0.15")]
        deltas: Vec<f64>,
        #[command(flatten)]
        params: PipelineArgs,
        #[command(flatten)]
        output: Output,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Persist sessions here, one document per member.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

fn parse_connectivity(s: &str) -> Result<u32, String> {
    match s {
        "4" => Ok(4),
        "8" => Ok(8),
        _ => Err(format!("expected 4 or 8, got {s:?}")),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::io(&path.display().to_string(), e))
}

fn load_tree(path: &Path) -> Result<LabeledMergeTree, Failure> {
    parse_tree(&read(path)?).map_err(|mut f| {
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn load_ensemble(paths: &[PathBuf]) -> Result<Ensemble, Failure> {
    Ok(Ensemble::new(
        paths.iter().map(|p| load_tree(p)).collect::<Result<_, _>>()?,
    ))
}

pub fn center_command(ensemble: &Ensemble, mode: AgreementMode, lambda: f64) -> Result<Value, Failure> {
    let (harmonized, pivot, reports) = reconcile(ensemble, mode, lambda)?;
    let center = one_center_tree(&harmonized)?;
    report::center_value(&CenterView {
        mode,
        lambda,
        pivot,
        reports: &reports,
        members: ensemble.members(),
        center: &center,
        center_tree: None,
    })
}

pub fn relabel_command(ensemble: &Ensemble, mode: AgreementMode, lambda: f64) -> Result<Value, Failure> {
    let (harmonized, pivot, reports) = reconcile(ensemble, mode, lambda)?;
    let members = harmonized
        .members()
        .iter()
        .map(tree_to_value)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(json!({
        "mode": mode.as_str(),
        "pivot": pivot,
        "members": members,
        "reports": report::relabel_values(&reports, ensemble.members()),
    }))
}

pub fn consistency_command(ensemble: &Ensemble, config: &PipelineConfig) -> Result<Value, Failure> {
    let out = run_pipeline(ensemble, config)?;
    report::consistency_value(&out, config)
}

pub fn sweep_command(ensemble: &Ensemble, deltas: &[f64], base: &PipelineConfig) -> Result<Value, Failure> {
    if deltas.is_empty() {
        return Err(Failure::new("input", "no deltas given"));
    }
    let reports = deltas
        .iter()
        .map(|&delta| {
            let config = PipelineConfig { delta, ..*base };
            let out = run_pipeline(ensemble, &config)?;
            Ok(json!({
                "delta": num(delta),
                "mean_deviation": num(out.consistency.variational.mean_deviation()),
                "max_deviation": num(out.consistency.variational.max_deviation),
                "report": report::consistency_value(&out, &config)?,
            }))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    Ok(json!({"deltas": deltas.iter().map(|&d| num(d)).collect::<Vec<_>>(), "reports": reports}))
}

pub struct MorphRequest {
    pub steps: usize,
    pub mode: MorphMode,
    pub consistency: bool,
    pub delta: f64,
    pub lambda: f64,
}

pub fn morph(a: &LabeledMergeTree, b: &LabeledMergeTree, req: &MorphRequest) -> Result<Value, Failure> {
    let frames = match req.mode {
        MorphMode::Geodesic => {
            geodesic_frames(a, b, req.steps, req.consistency, req.delta, req.lambda)?.frames
        }
        MorphMode::Linear => {
            let trees = linear_embedding_frames(a, b, req.steps)?;
            let n = trees.len();
            trees
                .into_iter()
                .enumerate()
                .map(|(k, tree)| Frame {
                    lambda: k as f64 / (n - 1) as f64,
                    tree,
                    consistency: None,
                })
                .collect()
        }
    };
    let mode = match req.mode {
        MorphMode::Geodesic => "geodesic",
        MorphMode::Linear => "linear",
    };
    report::frames_value(mode, &frames)
}

pub fn extract_command(grid: &ScalarGrid, augmented: bool) -> Result<Value, Failure> {
    let ex = extract_merge_tree(grid, augmented)?;
    let critical: Vec<Value> = ex
        .critical
        .iter()
        .map(|c| {
            json!({
                "vertex": ex.tree.tree().name(c.vertex),
                "kind": c.kind.as_str(),
                "col": c.col,
                "row": c.row,
                "value": num(c.value),
            })
        })
        .collect();
    let mut meta = Map::new();
    meta.insert("width".into(), json!(grid.width()));
    meta.insert("height".into(), json!(grid.height()));
    meta.insert("connectivity".into(), json!(grid.connectivity().count()));
    meta.insert("augmented".into(), json!(augmented));
    meta.insert("critical".into(), Value::Array(critical));
    Ok(serde_json::to_value(TreeDocument::with_metadata(&ex.tree, meta)?).expect("documents serialize"))
}

pub fn load_grid(path: &Path) -> Result<ScalarGrid, Failure> {
    let bytes = read(path)?;
    let binary = path.extension().is_some_and(|e| e == "bin");
    let grid = if binary {
        ScalarGrid::from_binary(&bytes)?
    } else {
        let text = String::from_utf8(bytes).map_err(|_| Failure::syntax("grid file is not UTF-8"))?;
        ScalarGrid::from_csv(&text)?
    };
    Ok(grid)
}

fn emit(value: &Value, output: &Output, out: &mut dyn Write) -> Result<(), Failure> {
    let text = report::to_text(value);
    match &output.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::io(&p.display().to_string(), e)),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::io("stdout", e)),
    }
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        Command::Center {
            trees,
            mode,
            lambda,
            output,
        } => emit(&center_command(&load_ensemble(&trees)?, mode.into(), lambda)?, &output, out),
        Command::Distance { a, b } => {
            let d = interleaving_distance(&load_tree(&a)?, &load_tree(&b)?)?;
            writeln!(out, "{}", report::round(d)).map_err(|e| Failure::io("stdout", e))
        }
        Command::Relabel {
            trees,
            lambda,
            mode,
            output,
        } => emit(&relabel_command(&load_ensemble(&trees)?, mode.into(), lambda)?, &output, out),
        Command::Consistency {
            trees,
            params,
            output,
        } => {
            let config = params.config(params.delta);
            emit(&consistency_command(&load_ensemble(&trees)?, &config)?, &output, out)
        }
        Command::Geodesic {
            a,
            b,
            steps,
            mode,
            consistency,
            delta,
            lambda,
            output,
        } => {
            let req = MorphRequest {
                steps,
                mode,
                consistency,
                delta,
                lambda,
            };
            emit(&morph(&load_tree(&a)?, &load_tree(&b)?, &req)?, &output, out)
        }
        Command::Extract {
            grid,
            connectivity,
            augmented,
            output,
        } => {
            let c = Connectivity::from_count(connectivity)?;
            let g = load_grid(&grid)?.with_connectivity(c);
            emit(&extract_command(&g, augmented)?, &output, out)
        }
        Command::SweepDelta {
            trees,
            deltas,
            params,
            output,
        } => {
            let base = params.config(params.delta);
            emit(&sweep_command(&load_ensemble(&trees)?, &deltas, &base)?, &output, out)
        }
        Command::Serve {
            port,
            host,
            data_dir,
        } => {
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|_| Failure::new("input", format!("bad address {host}:{port}")))?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::io("runtime", e))?;
            runtime.block_on(crate::service::serve(addr, data_dir))
        }
    }
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 1 for usage errors, 2 for data errors (diagnostic as JSON on `err`).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "{}", f.to_json());
            2
        }
    }
}
