//! The `ns` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use crate::classic::{subdivide as classic_subdivide, Scheme};
use crate::eval::{compare_schemes, format_table, surface_distance, DEFAULT_SAMPLES};
use crate::mesh::{load_obj, save_obj, Mesh};
use crate::neural::{load_checkpoint, neural_subdivide, save_checkpoint};
use crate::selfparam::{decimate, save_map, DecimationPolicy};
use crate::train::{generate_dataset, grad_check, read_dataset, train, write_dataset, DatasetConfig, TargetKind, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Gradient checks above this relative error fail.
pub const GRADCHECK_TOL: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "ns", version, about = "Neural subdivision toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decimate a mesh and record the bijective coarse-to-fine map.
    Decimate(DecimateArgs),
    /// Generate training pairs from random decimations of a mesh.
    GenData(GenDataArgs),
    /// Train a network bundle on a generated dataset.
    Train(TrainArgs),
    /// Subdivide a mesh with a trained bundle.
    Subdivide(SubdivideArgs),
    /// Subdivide a mesh with a classic scheme.
    SubdivideClassic(ClassicArgs),
    /// Hausdorff and mean surface distance between two meshes.
    Eval(EvalArgs),
    /// Compare analytic gradients with finite differences.
    Gradcheck(GradcheckArgs),
    /// Measure Loop, butterfly and neural subdivision against a reference.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct DecimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub target_vertices: usize,
    #[arg(long, default_value = "qslim")]
    pub policy: DecimationPolicy,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
    /// Where to write the map (`NSM 1`).
    #[arg(long)]
    pub map: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    #[arg(long, default_value_t = 150)]
    pub min_v: usize,
    #[arg(long, default_value_t = 300)]
    pub max_v: usize,
    #[arg(long, default_value_t = 2)]
    pub levels: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// `map` for targets on the source, `loop` for Loop subdivision targets.
    #[arg(long, default_value = "map")]
    pub targets: TargetKind,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 700)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.002)]
    pub lr: f64,
    /// Train on the first this-many levels (default: all in the dataset).
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Also write the checkpoint every this many epochs.
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SubdivideArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub levels: usize,
    #[arg(long)]
    pub output: PathBuf,
    /// Also write every level as `level_<l>.obj` here.
    #[arg(long)]
    pub all_levels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassicArgs {
    #[arg(long)]
    pub scheme: Scheme,
    #[arg(long, default_value_t = 2)]
    pub levels: usize,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub a: PathBuf,
    /// Reference mesh; units are relative to its bounding box.
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Check the all-zero bundle instead of a random one.
    #[arg(long)]
    pub zero: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub coarse: PathBuf,
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub levels: usize,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

type Outcome = Result<(), (i32, String)>;

fn data<E: std::fmt::Display>(e: E) -> (i32, String) {
    (EXIT_DATA, e.to_string())
}

fn read_mesh(path: &Path) -> Result<Mesh, (i32, String)> {
    load_obj(path).map_err(|e| (EXIT_DATA, format!("{}: {e}", path.display())))
}

fn write_mesh(mesh: &Mesh, path: &Path) -> Outcome {
    save_obj(mesh, path).map_err(|e| (EXIT_DATA, format!("{}: {e}", path.display())))
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

pub fn execute(cmd: Command) -> Outcome {
    match cmd {
        Command::Decimate(a) => {
            let mesh = read_mesh(&a.input)?;
            let d = decimate(&mesh, a.target_vertices, a.policy, a.seed).map_err(data)?;
            if !d.reached_target {
                warn!("stopped at {} vertices: no valid collapse left", d.coarse.num_vertices());
            }
            write_mesh(&d.coarse, &a.output)?;
            if let Some(p) = &a.map {
                save_map(&d.map, p).map_err(data)?;
            }
            println!("{} -> {} vertices", mesh.num_vertices(), d.coarse.num_vertices());
        }
        Command::GenData(a) => {
            let mesh = read_mesh(&a.input)?;
            let cfg = DatasetConfig {
                count: a.count,
                min_v: a.min_v,
                max_v: a.max_v,
                levels: a.levels,
                seed: a.seed,
                targets: a.targets,
            };
            let ds = generate_dataset(&mesh, &cfg).map_err(data)?;
            write_dataset(&ds, &a.out_dir).map_err(data)?;
            println!("wrote {} pairs to {}", ds.pairs.len(), a.out_dir.display());
        }
        Command::Train(a) => {
            let mut ds = read_dataset(&a.data).map_err(data)?;
            if let Some(l) = a.levels {
                if l == 0 || l > ds.config.levels {
                    return Err((EXIT_DATA, format!("--levels {l}: dataset has {} levels", ds.config.levels)));
                }
                ds.config.levels = l;
                for p in &mut ds.pairs {
                    p.targets.truncate(l);
                    p.preimages.truncate(l);
                }
            }
            let cfg = TrainConfig {
                epochs: a.epochs,
                lr: a.lr,
                seed: a.seed,
                checkpoint_every: a.checkpoint_every,
                checkpoint: Some(a.checkpoint.clone()),
            };
            let out = match train(&ds, &cfg) {
                Ok(o) => o,
                Err(crate::train::TrainError::NonFiniteLoss { epoch, last_good }) => {
                    save_checkpoint(&last_good, &a.checkpoint).map_err(data)?;
                    return Err((EXIT_DATA, format!("non-finite loss at epoch {epoch}; last good bundle saved")));
                }
                Err(e) => return Err(data(e)),
            };
            save_checkpoint(&out.bundle, &a.checkpoint).map_err(data)?;
            for (e, l) in out.history.iter().enumerate() {
                info!("epoch {e} loss {l:e}");
            }
            match (out.history.first(), out.history.last()) {
                (Some(f), Some(l)) => println!("loss {f:.6e} -> {l:.6e} over {} epochs", out.history.len()),
                _ => println!("0 epochs; wrote initialization"),
            }
        }
        Command::Subdivide(a) => {
            let mesh = read_mesh(&a.input)?;
            let bundle = load_checkpoint(&a.checkpoint).map_err(data)?;
            if a.levels > bundle.levels {
                warn!("subdividing {} levels with a bundle trained for {}", a.levels, bundle.levels);
            }
            let out = neural_subdivide(&mesh, &bundle, a.levels).map_err(data)?;
            if let Some(dir) = &a.all_levels {
                std::fs::create_dir_all(dir).map_err(data)?;
                for (l, m) in out.iter().enumerate() {
                    write_mesh(m, &dir.join(format!("level_{}.obj", l + 1)))?;
                }
            }
            write_mesh(out.last().unwrap_or(&mesh), &a.output)?;
        }
        Command::SubdivideClassic(a) => {
            let mesh = read_mesh(&a.input)?;
            write_mesh(&classic_subdivide(&mesh, a.scheme, a.levels), &a.output)?;
        }
        Command::Eval(a) => {
            let (ma, mb) = (read_mesh(&a.a)?, read_mesh(&a.b)?);
            let r = surface_distance(&ma, &mb, a.samples, a.seed);
            if a.json {
                println!("{}", serde_json::to_string_pretty(&r).map_err(data)?);
            } else {
                let (h, m) = r.scaled();
                println!("hausdorff {} mean {}", r.hausdorff, r.mean_distance);
                println!("hausdorff {h:.4} mean {m:.4} (1e-3 of reference diagonal)");
                println!(
                    "a->b hausdorff {} mean {} ({} samples); b->a hausdorff {} mean {} ({} samples)",
                    r.a_to_b.hausdorff, r.a_to_b.mean, r.a_to_b.samples, r.b_to_a.hausdorff, r.b_to_a.mean, r.b_to_a.samples
                );
            }
        }
        Command::Gradcheck(a) => {
            let r = grad_check(a.seed, a.zero).map_err(data)?;
            println!("parameters          {}", r.num_params);
            println!("max relative error  {:e}", r.max_rel_error);
            println!("raw error at h=1e-5 {:e} ({} parameters cross a ReLU kink, {} unresolved)", r.raw_max_rel_error, r.kink_params, r.unresolved_kinks);
            println!("worst parameter     {} (analytic {:e}, numeric {:e})", r.worst_param, r.worst_analytic, r.worst_numeric);
            if !(r.max_rel_error < GRADCHECK_TOL) {
                return Err((EXIT_DATA, format!("gradient check failed: {:e} >= {GRADCHECK_TOL:e}", r.max_rel_error)));
            }
            println!("ok");
        }
        Command::Compare(a) => {
            let coarse = read_mesh(&a.coarse)?;
            let reference = read_mesh(&a.reference)?;
            let bundle = a.checkpoint.as_ref().map(load_checkpoint).transpose().map_err(data)?;
            let rows = compare_schemes(&coarse, &reference, bundle.as_ref(), a.levels, a.samples, a.seed).map_err(data)?;
            if a.json {
                println!("{}", serde_json::to_string_pretty(&rows).map_err(data)?);
            } else {
                print!("{}", format_table(&rows));
            }
        }
    }
    Ok(())
}
