use std::path::Path;

use bevkit::depth::{bin_depth_image, BinSpec, DepthDistribution, DepthImage};
use bevkit::eval::{threshold, IouCounts, ScoreMap};
use bevkit::formats::{self, FrameRecord, Grid, Tensor, GRID_MAGIC, TNSR_MAGIC};
use bevkit::grid::VoxelGridSpec;
use bevkit::lift::{bilinear_voxel_lift, build_frustum, splat_pool, FeatureMap};
use bevkit::pseudolidar::{depth_to_cloud, merge_clouds, PointCloud};
use bevkit::synth::{self, SceneSpec};
use bevkit::voxel::{reduce_to_bev, voxelize as voxelize_cloud, BevMask};
use bevkit::Error;
use rayon::prelude::*;

use crate::files::{load, read, write_atomic, CliError, CliResult};
use crate::{BinArgs, GridArgs, LiftMode};

impl GridArgs {
    fn spec(&self) -> CliResult<VoxelGridSpec> {
        VoxelGridSpec::parse(&self.grid).map_err(|e| CliError::Usage(format!("--grid: {e}")))
    }
}

impl BinArgs {
    fn spec(&self) -> CliResult<BinSpec> {
        BinSpec::new(self.d_min, self.d_max, self.bins).map_err(|e| CliError::Usage(e.to_string()))
    }
}

fn load_scene(path: &Path) -> CliResult<SceneSpec> {
    load(path, formats::decode_scene)
}

fn load_tensor<T: TryFrom<Tensor, Error = Error>>(path: &Path) -> CliResult<T> {
    let tensor = load(path, formats::decode_tnsr)?;
    T::try_from(tensor).map_err(CliError::from)
}

fn check_rig(scene: &SceneSpec, inputs: usize) -> CliResult<()> {
    if inputs != scene.rig.len() {
        return Err(Error::RigMismatch {
            cameras: scene.rig.len(),
            inputs,
        }
        .into());
    }
    Ok(())
}

pub fn gen_scene(seed: u64, boxes: usize, extent: f64, out: &Path) -> CliResult<()> {
    if !(extent.is_finite() && extent > 0.0) {
        return Err(CliError::Usage(format!("--extent must be positive, got {extent}")));
    }
    let scene = synth::generate_scene(seed, boxes, extent)?;
    write_atomic(out, formats::encode_scene(&scene).as_bytes())
}

pub fn render_depth(scene: &Path, camera: usize, dims: (usize, usize), out: &Path) -> CliResult<()> {
    if dims.0 == 0 || dims.1 == 0 {
        return Err(CliError::Usage("--height and --width must be positive".into()));
    }
    let scene = load_scene(scene)?;
    if camera >= scene.rig.len() {
        return Err(CliError::Usage(format!(
            "--camera {camera} is out of range for a {}-camera rig",
            scene.rig.len()
        )));
    }
    let depth = synth::render_depth(&scene, camera, dims)?;
    write_atomic(out, &formats::encode_dmap(&depth))
}

pub fn depth_bin(depth: &Path, patch: usize, bins: &BinArgs, out: &Path) -> CliResult<()> {
    if patch == 0 {
        return Err(CliError::Usage("--patch must be positive".into()));
    }
    let bins = bins.spec()?;
    let img = load(depth, formats::decode_dmap)?;
    let dist = bin_depth_image(&img, &bins, patch)?;
    write_atomic(out, &formats::encode_tnsr(&Tensor::from(&dist)))
}

#[allow(clippy::too_many_arguments)]
pub fn lift_splat(
    scene: &Path,
    features: &[std::path::PathBuf],
    dists: &[std::path::PathBuf],
    mode: LiftMode,
    patch: usize,
    bins: &BinArgs,
    grid: &GridArgs,
    out: &Path,
) -> CliResult<()> {
    if patch == 0 {
        return Err(CliError::Usage("--patch must be positive".into()));
    }
    let grid = grid.spec()?;
    let bins = bins.spec()?;
    let scene = load_scene(scene)?;
    check_rig(&scene, features.len())?;
    let feats = features
        .iter()
        .map(|p| load_tensor::<FeatureMap>(p))
        .collect::<CliResult<Vec<_>>>()?;

    let tensor = match mode {
        LiftMode::Pool => {
            if dists.len() != features.len() {
                return Err(CliError::Shape(format!(
                    "{} feature maps but {} depth distributions",
                    features.len(),
                    dists.len()
                )));
            }
            let dists = dists
                .iter()
                .map(|p| load_tensor::<DepthDistribution>(p))
                .collect::<CliResult<Vec<_>>>()?;
            let frusta = scene
                .rig
                .cameras()
                .iter()
                .zip(feats.iter().zip(&dists))
                .map(|((intr, pose), (f, d))| build_frustum(f, d, intr, pose, patch, &bins))
                .collect::<bevkit::Result<Vec<_>>>()?;
            Tensor::from(&splat_pool(&frusta, feats[0].channels(), &grid)?)
        }
        LiftMode::Bilinear => {
            if !dists.is_empty() {
                return Err(CliError::Usage("--dist is only used with --mode pool".into()));
            }
            Tensor::from(&bilinear_voxel_lift(&feats, &scene.rig, patch, &grid)?)
        }
    };
    write_atomic(out, &formats::encode_tnsr(&tensor))
}

fn scene_cloud(scene: &SceneSpec, depths: &[DepthImage], rgb: bool) -> CliResult<PointCloud> {
    check_rig(scene, depths.len())?;
    let clouds = depths
        .par_iter()
        .enumerate()
        .map(|(i, depth)| {
            let (intr, pose) = scene.rig.camera(i)?;
            let colors = if rgb {
                Some(synth::render_rgb(scene, i, (depth.height(), depth.width()))?)
            } else {
                None
            };
            depth_to_cloud(depth, intr, pose, colors.as_ref())
        })
        .collect::<bevkit::Result<Vec<_>>>()?;
    Ok(merge_clouds(&clouds)?)
}

pub fn pseudolidar(scene: &Path, depths: &[std::path::PathBuf], rgb: bool, out: &Path) -> CliResult<()> {
    let scene = load_scene(scene)?;
    let depths = depths
        .iter()
        .map(|p| load(p, formats::decode_dmap))
        .collect::<CliResult<Vec<_>>>()?;
    let cloud = scene_cloud(&scene, &depths, rgb)?;
    write_atomic(out, &formats::encode_ply(&cloud))
}

pub fn voxelize(cloud: &Path, grid: &GridArgs, out: &Path, bev_out: Option<&Path>) -> CliResult<()> {
    let grid = grid.spec()?;
    let cloud = load(cloud, formats::decode_ply)?;
    let occupancy = voxelize_cloud(&cloud, &grid);
    write_atomic(out, &formats::encode_grid(&Grid::from(&occupancy)))?;
    if let Some(path) = bev_out {
        write_atomic(path, &formats::encode_grid(&Grid::from(&reduce_to_bev(&occupancy))))?;
    }
    Ok(())
}

pub fn truth_mask(scene: &Path, grid: &GridArgs, out: &Path) -> CliResult<()> {
    let grid = grid.spec()?;
    let scene = load_scene(scene)?;
    let mask = synth::scene_truth_mask(&scene, &grid);
    write_atomic(out, &formats::encode_grid(&Grid::from(&mask)))
}

fn check_tau(tau: f64) -> CliResult<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(CliError::Usage(format!("--tau must lie in [0, 1], got {tau}")));
    }
    Ok(())
}

fn load_mask(path: &Path) -> CliResult<BevMask> {
    let grid = load(path, formats::decode_grid)?;
    BevMask::try_from(grid).map_err(CliError::from)
}

/// A GRID mask as is, or a TNSR score map thresholded at `tau`.
fn load_prediction(path: &Path, tau: f64) -> CliResult<BevMask> {
    let bytes = read(path)?;
    match bytes.get(..4) {
        Some(m) if m == GRID_MAGIC => {
            let grid = formats::decode_grid(&bytes).map_err(CliError::in_file(path))?;
            Ok(BevMask::try_from(grid)?)
        }
        Some(m) if m == TNSR_MAGIC => {
            let tensor = formats::decode_tnsr(&bytes).map_err(CliError::in_file(path))?;
            Ok(threshold(&ScoreMap::try_from(tensor)?, tau))
        }
        _ => Err(CliError::Format {
            path: path.to_path_buf(),
            offset: 0,
            message: "expected a GRID mask or a TNSR score map".into(),
        }),
    }
}

pub fn eval_pair(pred: &Path, truth: &Path, tau: f64) -> CliResult<f64> {
    check_tau(tau)?;
    let pred = load_prediction(pred, tau)?;
    let truth = load_mask(truth)?;
    Ok(IouCounts::between(&pred, &truth)?.ratio())
}

fn frame_counts(frame: &FrameRecord, tau: f64, grid: &VoxelGridSpec) -> CliResult<IouCounts> {
    let truth = load_mask(&frame.truth)?;
    let pred = match &frame.score {
        Some(score) => load_prediction(score, tau)?,
        None => {
            let scene = load_scene(&frame.scene)?;
            let depths = frame
                .depth
                .iter()
                .map(|p| load(p, formats::decode_dmap))
                .collect::<CliResult<Vec<_>>>()?;
            let cloud = scene_cloud(&scene, &depths, false)?;
            reduce_to_bev(&voxelize_cloud(&cloud, grid))
        }
    };
    Ok(IouCounts::between(&pred, &truth)?)
}

/// Global IoU over every frame of a manifest.
pub fn eval_manifest(manifest: &Path, tau: f64, grid: &GridArgs) -> CliResult<f64> {
    check_tau(tau)?;
    let grid = grid.spec()?;
    let frames = load(manifest, formats::decode_manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let frames: Vec<FrameRecord> = frames.iter().map(|f| f.resolved(base)).collect();
    for f in &frames {
        if let Some(missing) = f.paths().find(|p| !p.is_file()) {
            return Err(CliError::Format {
                path: manifest.to_path_buf(),
                offset: 0,
                message: format!("referenced file {} does not exist", missing.display()),
            });
        }
    }
    // Integer sums, so parallel evaluation cannot change the result.
    let counts = frames
        .par_iter()
        .map(|f| frame_counts(f, tau, &grid))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(counts.into_iter().fold(IouCounts::default(), |a, b| a + b).ratio())
}
