//! `bevkit` command-line entry point.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 malformed
//! input file, 4 incompatible shapes.

mod commands;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::files::CliError;

#[derive(Parser, Debug)]
#[command(name = "bevkit", version, about = "Camera-to-BEV geometry pipeline stages")]
struct Cli {
    /// Worker threads (defaults to the number of CPUs). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
pub struct GridArgs {
    /// Voxel grid as `xmin,xmax,nx,ymin,ymax,ny,zmin,zmax,nz` (meters, cells).
    #[arg(long, default_value = "-50,50,200,-50,50,200,0,10,8", allow_hyphen_values = true)]
    pub grid: String,
}

#[derive(clap::Args, Debug, Clone)]
pub struct BinArgs {
    #[arg(long, default_value_t = 4.0)]
    pub d_min: f64,
    #[arg(long, default_value_t = 45.0)]
    pub d_max: f64,
    #[arg(long, default_value_t = 41)]
    pub bins: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum LiftMode {
    /// Depth-weighted frustum, sum-pooled into BEV pillars.
    Pool,
    /// Bilinear sampling of patch features at every voxel center.
    Bilinear,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random scene with a six-camera surround rig.
    GenScene {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        boxes: usize,
        /// Box centers are drawn from [-extent, extent] on both ground axes.
        #[arg(long, default_value_t = 40.0)]
        extent: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render exact plane depth for one camera of a scene (DMAP).
    RenderDepth {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        camera: usize,
        #[arg(long, default_value_t = 112)]
        height: usize,
        #[arg(long, default_value_t = 200)]
        width: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pool a depth image into a per-patch depth distribution (TNSR).
    DepthBin {
        #[arg(long)]
        depth: PathBuf,
        #[arg(long, default_value_t = 16)]
        patch: usize,
        #[command(flatten)]
        bins: BinArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lift per-camera patch features into BEV (pool) or voxel (bilinear) features (TNSR).
    LiftSplat {
        /// Scene file providing the camera rig.
        #[arg(long)]
        scene: PathBuf,
        /// Feature maps (TNSR [C, Hp, Wp]) in rig camera order.
        #[arg(long = "features", required = true, num_args = 1..)]
        features: Vec<PathBuf>,
        /// Depth distributions (TNSR [D, Hp, Wp]) in rig camera order; pool mode only.
        #[arg(long = "dist", num_args = 1..)]
        dists: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = LiftMode::Pool)]
        mode: LiftMode,
        #[arg(long, default_value_t = 16)]
        patch: usize,
        #[command(flatten)]
        bins: BinArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Unproject per-camera depth into one ego-frame point cloud (PLY).
    Pseudolidar {
        #[arg(long)]
        scene: PathBuf,
        /// Depth images (DMAP) in rig camera order.
        #[arg(long = "depth", required = true, num_args = 1..)]
        depths: Vec<PathBuf>,
        /// Decorate points with the scene's flat-shaded colors.
        #[arg(long)]
        rgb: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Voxelize a point cloud into a binary occupancy grid (GRID).
    Voxelize {
        #[arg(long)]
        cloud: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write the BEV reduction (2D GRID).
        #[arg(long)]
        bev_out: Option<PathBuf>,
    },
    /// Rasterize a scene's box footprints into a ground-truth BEV mask (GRID).
    TruthMask {
        #[arg(long)]
        scene: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the IoU of a prediction against a truth mask, or the global IoU of a manifest.
    EvalIou {
        /// Prediction: BEV mask (GRID) or score map (TNSR).
        #[arg(long, requires = "truth", conflicts_with = "manifest")]
        pred: Option<PathBuf>,
        #[arg(long, requires = "pred")]
        truth: Option<PathBuf>,
        #[arg(long, required_unless_present = "pred")]
        manifest: Option<PathBuf>,
        #[arg(long, default_value_t = bevkit::eval::DEFAULT_TAU)]
        tau: f64,
        /// Grid used to voxelize frames that have no score map.
        #[command(flatten)]
        grid: GridArgs,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Failure(e.to_string()))?;
    }
    match cli.command {
        Command::GenScene {
            seed,
            boxes,
            extent,
            out,
        } => commands::gen_scene(seed, boxes, extent, &out),
        Command::RenderDepth {
            scene,
            camera,
            height,
            width,
            out,
        } => commands::render_depth(&scene, camera, (height, width), &out),
        Command::DepthBin {
            depth,
            patch,
            bins,
            out,
        } => commands::depth_bin(&depth, patch, &bins, &out),
        Command::LiftSplat {
            scene,
            features,
            dists,
            mode,
            patch,
            bins,
            grid,
            out,
        } => commands::lift_splat(&scene, &features, &dists, mode, patch, &bins, &grid, &out),
        Command::Pseudolidar {
            scene,
            depths,
            rgb,
            out,
        } => commands::pseudolidar(&scene, &depths, rgb, &out),
        Command::Voxelize {
            cloud,
            grid,
            out,
            bev_out,
        } => commands::voxelize(&cloud, &grid, &out, bev_out.as_deref()),
        Command::TruthMask { scene, grid, out } => commands::truth_mask(&scene, &grid, &out),
        Command::EvalIou {
            pred,
            truth,
            manifest,
            tau,
            grid,
        } => {
            let value = match (pred, truth, manifest) {
                (Some(pred), Some(truth), None) => commands::eval_pair(&pred, &truth, tau)?,
                (None, None, Some(manifest)) => commands::eval_manifest(&manifest, tau, &grid)?,
                _ => return Err(CliError::Usage("give either --pred and --truth, or --manifest".into())),
            };
            println!("{value:.4}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // clap exits with 2 on usage errors and 0 for --help / --version.
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bevkit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
