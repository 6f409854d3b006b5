//! Subcommand implementations. Each reads its inputs, calls into the
//! library and writes the declared file formats.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use nalgebra::{Point3, Vector3};
use rustc_hash::FxHashMap;
use voxtrav_core::dataset::{
    compute_normalization, kfold_split, load_dataset, save_dataset, split_cubes, CubeSample, Dataset,
    DatasetManifest, SceneEntry,
};
use voxtrav_core::eval::{
    compress_2d, confusion, kfold_report, mcc_by_density, temporal_eval, threshold_probabilities,
    write_density_csv, write_kfold_csv, write_temporal_csv, ColumnIndex, CtcConfig, LabelMap,
};
use voxtrav_core::labeling::{load_hand_labels, load_pose_log, save_hand_labels, save_pose_log, Provenance, RobotGeometry};
use voxtrav_core::map::{load_map, read_ray_log, save_map, write_ply, write_ray_log};
use voxtrav_core::sim::{LidarSpec, MissionSpec};
use voxtrav_core::{RayRecord, VoxelMap};
use voxtrav_scnn::{load_model, save_model, train_ensemble, EnsembleConfig, Model};

use crate::args::*;
use crate::config::PipelineConfig;
use crate::error::{AtPath, CliError, CliResult};
use crate::pipeline::{build_map, ctc_predictions, fuse, predict_map, simulate, split_events};
use crate::temap::{read_te_map, write_te_map, TeMap};

/// Files written by `sim` inside its output directory.
pub const SCENE_FILE: &str = "scene.cfg";
pub const RAYS_FILE: &str = "rays.ftrl";
pub const POSES_FILE: &str = "poses.log";
pub const COLLISIONS_FILE: &str = "collisions.log";
pub const ORACLE_FILE: &str = "oracle_labels.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn model_file(n: usize) -> String {
    format!("model_{n}.ftnn")
}

pub fn dataset_file(scene: &str) -> String {
    format!("{scene}.ftds")
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).at(dir)
}

fn create(path: &Path) -> CliResult<File> {
    File::create(path).at(path)
}

fn open(path: &Path) -> CliResult<File> {
    File::open(path).at(path)
}

pub fn sim(cfg: &PipelineConfig, args: &SimArgs) -> CliResult<()> {
    let scene_cfg = cfg.scene()?;
    let mission = MissionSpec::lawnmower(scene_cfg.extent_x, scene_cfg.extent_y, cfg.row_spacing, cfg.mission_margin);
    let run = simulate(&scene_cfg, &mission, &RobotGeometry::default(), &LidarSpec::default())?;
    create_dir(&args.out)?;
    let path = args.out.join(SCENE_FILE);
    fs::write(&path, scene_cfg.to_string()).at(&path)?;
    let path = args.out.join(RAYS_FILE);
    write_ray_log(&run.log.rays, create(&path)?).at(&path)?;
    let (poses, collisions) = split_events(&run.log.poses);
    let path = args.out.join(POSES_FILE);
    save_pose_log(&poses, &path).at(&path)?;
    let path = args.out.join(COLLISIONS_FILE);
    save_pose_log(&collisions, &path).at(&path)?;
    let path = args.out.join(ORACLE_FILE);
    save_hand_labels(&run.oracle, &path).at(&path)?;
    println!(
        "scene: {} elements; mission {:?} in {:.1} s; {} rays, {} pose and {} collision events",
        run.scene.elements.len(),
        run.log.status,
        run.log.duration,
        run.log.rays.len(),
        poses.len(),
        collisions.len()
    );
    Ok(())
}

pub fn load_rays(path: &Path) -> CliResult<Vec<RayRecord>> {
    read_ray_log(open(path)?).at(path)
}

pub fn map(cfg: &PipelineConfig, args: &MapArgs) -> CliResult<()> {
    let rays = load_rays(&args.rays)?;
    let start = Instant::now();
    let (map, rejected) = build_map(&rays, cfg.resolution);
    let elapsed = start.elapsed();
    if rejected > 0 {
        log::warn!("{rejected} malformed rays skipped");
    }
    save_map(&map, &args.out).at(&args.out)?;
    if let Some(ply) = &args.ply {
        let res = map.resolution();
        let points: Vec<_> = map
            .active()
            .map(|(k, s)| (k.center(res), 1.0 / (1.0 + (-s.l_occ).exp())))
            .collect();
        write_ply(create(ply)?, "occupancy", points.into_iter()).at(ply)?;
    }
    println!(
        "{} active voxels from {} rays in {:.3} s",
        map.active_count(),
        rays.len(),
        elapsed.as_secs_f64()
    );
    Ok(())
}

pub fn label(args: &LabelArgs) -> CliResult<()> {
    let map = load_map(&args.map).at(&args.map)?;
    let hand = match &args.hand {
        Some(p) => Some(load_hand_labels(p, Provenance::Hand).at(p)?),
        None => None,
    };
    let mut events = Vec::new();
    for p in &args.events {
        events.extend(load_pose_log(p).at(p)?);
    }
    if hand.is_none() && events.is_empty() {
        return Err(CliError::Usage("label needs --hand, --events or both".into()));
    }
    let labels = fuse(&map, hand.as_ref(), &events, &RobotGeometry::default())?;
    save_hand_labels(&labels, &args.out).at(&args.out)?;
    let tr = labels.labels.iter().filter(|(_, l)| l.is_traversable()).count();
    println!("{} labelled voxels ({} TR, {} NT)", labels.len(), tr, labels.len() - tr);
    Ok(())
}

fn parse_scene_spec(spec: &str) -> CliResult<(String, PathBuf, PathBuf)> {
    let bad = || CliError::Usage(format!("--scene expects id=MAP,LABELS, got {spec:?}"));
    let (id, files) = spec.split_once('=').ok_or_else(bad)?;
    let (map, labels) = files.split_once(',').ok_or_else(bad)?;
    if id.is_empty() || id.contains(['/', '\\']) {
        return Err(bad());
    }
    Ok((id.to_string(), map.into(), labels.into()))
}

pub fn dataset(cfg: &PipelineConfig, args: &DatasetArgs) -> CliResult<()> {
    let specs = args.scenes.iter().map(|s| parse_scene_spec(s)).collect::<CliResult<Vec<_>>>()?;
    if !specs.iter().any(|(id, ..)| *id == args.test) {
        return Err(CliError::Usage(format!("test scene {:?} is not among the scenes", args.test)));
    }
    let mut scenes: Vec<(String, Vec<CubeSample>)> = Vec::new();
    for (id, map_path, label_path) in &specs {
        if scenes.iter().any(|(s, _)| s == id) {
            return Err(CliError::Usage(format!("scene id {id:?} given twice")));
        }
        let map = load_map(map_path).at(map_path)?;
        let labels = load_hand_labels(label_path, Provenance::Fused).at(label_path)?;
        scenes.push((id.clone(), split_cubes(&map, &labels)));
    }
    let entries: Vec<SceneEntry> = scenes
        .iter()
        .map(|(id, cubes)| SceneEntry { id: id.clone(), cubes: cubes.len() })
        .collect();
    let manifest = kfold_split(&entries, args.k, &args.test, cfg.seed)?;
    let normalization = compute_normalization(
        scenes.iter().filter(|(id, _)| *id != args.test).flat_map(|(_, c)| c.iter()),
    )?;
    create_dir(&args.out)?;
    for (id, cubes) in scenes {
        let path = args.out.join(dataset_file(&id));
        let n = cubes.len();
        save_dataset(&path, &Dataset { normalization: normalization.clone(), cubes }).at(&path)?;
        println!("{id}: {n} cubes");
    }
    let path = args.out.join(MANIFEST_FILE);
    manifest.save(&path).at(&path)?;
    let sizes: Vec<usize> = manifest.folds.iter().map(Vec::len).collect();
    println!("{} folds of sizes {sizes:?}; test scene {}", manifest.k(), manifest.test_scene);
    Ok(())
}

pub fn train(cfg: &PipelineConfig, args: &TrainArgs) -> CliResult<()> {
    let path = args.dataset.join(MANIFEST_FILE);
    let manifest = DatasetManifest::load(&path).at(&path)?;
    if args.fold >= manifest.k() {
        return Err(CliError::Usage(format!("fold {} out of range for {} folds", args.fold, manifest.k())));
    }
    let scenes = manifest
        .scenes
        .iter()
        .map(|s| {
            let path = args.dataset.join(dataset_file(&s.id));
            let ds = load_dataset(&path).at(&path)?;
            if ds.cubes.len() != s.cubes {
                return Err(CliError::Data(format!(
                    "{}: {} cubes, manifest says {}",
                    path.display(),
                    ds.cubes.len(),
                    s.cubes
                )));
            }
            Ok(ds.cubes)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let pick = |refs: &[voxtrav_core::dataset::CubeRef]| -> Vec<CubeSample> {
        refs.iter().map(|r| scenes[r.scene][r.cube].clone()).collect()
    };
    let train_cubes = pick(&manifest.training_cubes(args.fold));
    let val_cubes = pick(&manifest.folds[args.fold]);
    let mut config = cfg.train.clone();
    config.seed = cfg.seed;
    if let Some(e) = args.epochs {
        config.max_epochs = e;
    }
    if let Some(lr) = args.lr {
        config.lr = lr;
    }
    let members = args.members.unwrap_or(cfg.ensemble_size);
    let ensemble = EnsembleConfig::new(members, cfg.seed)?;
    log::info!("training {members} model(s) on {} cubes, validating on {}", train_cubes.len(), val_cubes.len());
    let trained = train_ensemble(&train_cubes, &val_cubes, &config, &ensemble)?;
    create_dir(&args.out)?;
    for (n, (model, log)) in trained.iter().enumerate() {
        let path = args.out.join(model_file(n));
        save_model(&path, model).at(&path)?;
        let path = args.out.join(format!("train_log_{n}.csv"));
        log.save_csv(&path).at(&path)?;
        println!(
            "model {n}: best epoch {} val loss {:.5} after {} epochs{}",
            log.best_epoch,
            log.best_val_loss,
            log.epochs.len(),
            if log.stopped_early { " (early stop)" } else { "" }
        );
    }
    Ok(())
}

/// Loads model files, expanding directories to their sorted `.ftnn` files.
pub fn load_models(paths: &[PathBuf]) -> CliResult<Vec<Model>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .at(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "ftnn"))
                .collect();
            if found.is_empty() {
                return Err(CliError::Usage(format!("{}: no .ftnn files", p.display())));
            }
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    files.iter().map(|f| load_model(f).at(f)).collect()
}

/// Horizontal centre of the active voxels' bounding box, at their median
/// height so the default box sits on the ground rather than in the canopy.
fn active_center(map: &VoxelMap) -> Point3<f64> {
    let res = map.resolution();
    let centers: Vec<Point3<f64>> = map.active().map(|(k, _)| k.center(res)).collect();
    if centers.is_empty() {
        return Point3::origin();
    }
    let (mut lo, mut hi) = (centers[0], centers[0]);
    for c in &centers {
        lo = lo.inf(c);
        hi = hi.sup(c);
    }
    let mut z: Vec<f64> = centers.iter().map(|c| c.z).collect();
    let mid = z.len() / 2;
    let (_, median, _) = z.select_nth_unstable_by(mid, f64::total_cmp);
    Point3::new((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0, *median)
}

pub fn infer(cfg: &PipelineConfig, args: &InferArgs) -> CliResult<()> {
    let mut models = load_models(&args.models)?;
    let map = load_map(&args.map).at(&args.map)?;
    let region = if args.full {
        None
    } else {
        let extent = Vector3::from(args.extent.unwrap_or(cfg.local_extent));
        if extent.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(CliError::Usage(format!("extent must be positive, got {extent:?}")));
        }
        let center = args.center.map(Point3::from).unwrap_or_else(|| active_center(&map));
        Some((center, extent))
    };
    let start = Instant::now();
    let probs = predict_map(&mut models, &map, region)?;
    let elapsed = start.elapsed();
    write_te_map(&probs, create(&args.out)?).at(&args.out)?;
    if let Some(ply) = &args.ply {
        let res = map.resolution();
        let mut rows: Vec<_> = probs.iter().collect();
        rows.sort_unstable_by_key(|(k, _)| **k);
        let points: Vec<_> = rows.into_iter().map(|(k, p)| (k.center(res), *p)).collect();
        write_ply(create(ply)?, "traversability", points.into_iter()).at(ply)?;
    }
    println!(
        "{} voxels classified by {} model(s) in {:.3} s",
        probs.len(),
        models.len(),
        elapsed.as_secs_f64()
    );
    Ok(())
}

fn need<'a, T>(v: &'a Option<T>, flag: &str, mode: &str) -> CliResult<&'a T> {
    v.as_ref().ok_or_else(|| CliError::Usage(format!("{mode} evaluation needs --{flag}")))
}

fn load_labels(path: &Path) -> CliResult<LabelMap> {
    Ok(load_hand_labels(path, Provenance::Fused).at(path)?.to_map())
}

fn load_te(path: &Path) -> CliResult<TeMap> {
    read_te_map(open(path)?).at(path)
}

fn single_te<'a>(args: &'a EvalArgs, mode: &str) -> CliResult<&'a Path> {
    match args.te.as_slice() {
        [p] => Ok(p),
        _ => Err(CliError::Usage(format!("{mode} evaluation needs exactly one --te"))),
    }
}

pub fn eval(cfg: &PipelineConfig, args: &EvalArgs) -> CliResult<()> {
    match args.mode {
        EvalMode::Global => eval_global(args),
        EvalMode::Density => eval_density(args),
        EvalMode::Temporal => eval_temporal(cfg, args),
        EvalMode::Compress2d => eval_compress(args),
    }
}

fn eval_global(args: &EvalArgs) -> CliResult<()> {
    let labels = load_labels(need(&args.labels, "labels", "global")?)?;
    if args.te.is_empty() {
        return Err(CliError::Usage("global evaluation needs at least one --te".into()));
    }
    let mut folds = Vec::new();
    for p in &args.te {
        let c = confusion(&threshold_probabilities(&load_te(p)?, args.threshold), &labels).at(p)?;
        println!("{}: MCC {:.4} F1 {:.4} over {} voxels", p.display(), c.mcc(), c.f1(), c.total());
        folds.push((c.mcc(), c.f1()));
    }
    let mcc = kfold_report(&folds.iter().map(|f| f.0).collect::<Vec<_>>())?;
    let f1 = kfold_report(&folds.iter().map(|f| f.1).collect::<Vec<_>>())?;
    write_kfold_csv(&folds, &mcc, &f1, create(&args.out)?).at(&args.out)?;
    println!("MCC {:.4} ± {:.4}, F1 {:.4} ± {:.4}", mcc.mean, mcc.std, f1.mean, f1.std);
    if args.ctc {
        let map_path = need(&args.map, "map", "baseline")?;
        let map = load_map(map_path).at(map_path)?;
        let preds = threshold_probabilities(&ctc_predictions(&map, &CtcConfig::default()), 0.5);
        let c = confusion(&preds, &labels)?;
        println!("geometric baseline: MCC {:.4} F1 {:.4}", c.mcc(), c.f1());
    }
    Ok(())
}

fn eval_density(args: &EvalArgs) -> CliResult<()> {
    let labels = load_labels(need(&args.labels, "labels", "density")?)?;
    let map_path = need(&args.map, "map", "density")?;
    let map = load_map(map_path).at(map_path)?;
    let te = load_te(single_te(args, "density")?)?;
    let bins = mcc_by_density(
        &threshold_probabilities(&te, args.threshold),
        &labels,
        &ColumnIndex::from_map(&map),
        args.bins,
    );
    write_density_csv(&bins, create(&args.out)?).at(&args.out)?;
    for b in bins.iter().filter(|b| b.counts.total() > 0) {
        println!("[{:.2}, {:.2}): MCC {:.4} over {}", b.lo, b.hi, b.mcc, b.counts.total());
    }
    Ok(())
}

fn eval_temporal(cfg: &PipelineConfig, args: &EvalArgs) -> CliResult<()> {
    let labels = load_labels(need(&args.labels, "labels", "temporal")?)?;
    let rays = load_rays(need(&args.rays, "rays", "temporal")?)?;
    if args.models.is_empty() {
        return Err(CliError::Usage("temporal evaluation needs --model".into()));
    }
    if !(args.interval.is_finite() && args.interval > 0.0) {
        return Err(CliError::Usage(format!("interval must be positive, got {}", args.interval)));
    }
    let models = Mutex::new(load_models(&args.models)?);
    let failure = Mutex::new(None);
    let classify = |map: &VoxelMap| -> FxHashMap<_, f64> {
        let mut models = models.lock().expect("model lock");
        predict_map(&mut models, map, None).unwrap_or_else(|e| {
            failure.lock().expect("error lock").get_or_insert(e);
            FxHashMap::default()
        })
    };
    let points = temporal_eval(&rays, cfg.resolution, &classify, &labels, args.interval);
    if let Some(e) = failure.into_inner().expect("error lock") {
        return Err(e.into());
    }
    write_temporal_csv(&points, create(&args.out)?).at(&args.out)?;
    if let Some(last) = points.last() {
        println!("{} snapshots; final coverage {:.3}, scores {:?}", points.len(), last.coverage, last.scores);
    }
    Ok(())
}

fn eval_compress(args: &EvalArgs) -> CliResult<()> {
    let map_path = need(&args.map, "map", "compress2d")?;
    let map = load_map(map_path).at(map_path)?;
    let te = load_te(single_te(args, "compress2d")?)?;
    let grid = compress_2d(&te, &ColumnIndex::from_map(&map), args.threshold);
    grid.write_csv(create(&args.out)?).at(&args.out)?;
    let pgm = args.out.with_extension("pgm");
    grid.write_pgm(create(&pgm)?).at(&pgm)?;
    println!("{} x {} grid written", grid.width, grid.height);
    Ok(())
}
