use std::io::Write;
use std::path::{Path, PathBuf};

use impostor::editing::{
    blend_image, compose_image, deform, parse_compose, parse_script, render_boolean_image, BoolOp, BooleanField,
    CompositeScene, EditCommand, Instance,
};
use impostor::io::{
    read_cameras, read_checkpoint, read_frame, read_ppm, read_tetmesh, save_dataset, write_checkpoint, write_png,
    write_ppm, write_tetmesh,
};
use impostor::model::{ImpostorModel, ModelConfig};
use impostor::rendering::{psnr, render_image, Camera, Image, RenderOptions};
use impostor::sampling::SamplerParams;
use impostor::training::oracle::{oracle_render, toy_holdout_cameras, toy_scene, toy_train_cameras, ORACLE_QUALITY};
use impostor::training::retrain::{retrain_local, RetrainConfig, RetrainRegion};
use impostor::training::{evaluate, train, TrainConfig};

use crate::{Cli, Command, Failure, OptimArgs, Precision, RenderArgs, SceneKind};

type Views = Vec<(Camera, Image)>;

fn emit(out: &mut dyn Write, key: &str, value: impl std::fmt::Display) -> Result<(), Failure> {
    writeln!(out, "{key}={value}").map_err(|e| Failure::Data(format!("stdout: {e}")))
}

fn render_options(r: &RenderArgs, threads: usize) -> Result<RenderOptions, Failure> {
    let sampler = SamplerParams::new(r.cone_angle, r.base_step, r.max_samples)?;
    Ok(RenderOptions::default()
        .with_mode(r.mode.into())
        .with_background(r.background.rgb())
        .with_sampler(sampler)
        .with_threads(threads))
}

fn save_image(path: &Path, img: &Image) -> Result<(), Failure> {
    let png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if png {
        write_png(path, img)?;
    } else {
        write_ppm(path, img)?;
    }
    Ok(())
}

/// `base` for a single image, otherwise `stem_####.ext` beside it.
fn numbered(base: &Path, i: usize, n: usize) -> PathBuf {
    if n == 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().map_or("image".into(), |s| s.to_string_lossy().into_owned());
    let name = match base.extension() {
        Some(ext) => format!("{stem}_{i:04}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{i:04}"),
    };
    base.with_file_name(name)
}

fn render_all(
    cameras: &[Camera],
    base: &Path,
    out: &mut dyn Write,
    mut render: impl FnMut(&Camera) -> Result<Image, Failure>,
) -> Result<(), Failure> {
    if cameras.is_empty() {
        return Err(Failure::Data("camera file lists no cameras".into()));
    }
    for (i, cam) in cameras.iter().enumerate() {
        save_image(&numbered(base, i, cameras.len()), &render(cam)?)?;
    }
    emit(out, "images", cameras.len())
}

fn relative_to(file: &Path, p: &Path) -> PathBuf {
    match file.parent() {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

/// Result of running an edit script against model 0.
struct Edited {
    model: ImpostorModel,
    field: BooleanField,
    blend: Option<(ImpostorModel, BooleanField)>,
}

/// Folds the bool commands of `cmds` into `field`. Other commands are
/// handled by the caller through `other`.
fn fold_bool(
    script: &Path,
    cmds: &[EditCommand],
    mut field: BooleanField,
    eps: &mut f64,
    mut other: impl FnMut(&EditCommand) -> Result<(), Failure>,
) -> Result<BooleanField, Failure> {
    for cmd in cmds {
        match cmd {
            EditCommand::Eps(e) => *eps = *e,
            EditCommand::Bool(op, leaf) => {
                let image = match leaf {
                    impostor::editing::LeafSpec::Mask { image, .. } => Some(read_ppm(&relative_to(script, image))?),
                    _ => None,
                };
                field = field.combine(*op, leaf.to_field(*eps, 0, image)?);
            }
            c => other(c)?,
        }
    }
    Ok(field)
}

fn run_script(model: ImpostorModel, script: &Path, eps: f64) -> Result<Edited, Failure> {
    let cmds = parse_script(&read_text(script)?)?;
    let mut eps = eps;
    let mut model = model;
    let mut blend = None;
    let mut blend_eps = eps;
    let field = fold_bool(script, &cmds, BooleanField::Const(true), &mut eps, |cmd| {
        match cmd {
            EditCommand::Deform(frame) => {
                model = deform(&model, read_frame(&relative_to(script, frame))?)?;
            }
            EditCommand::Blend { model: other, mask } => {
                if blend.is_some() {
                    return Err(Failure::Data("only one blend per script".into()));
                }
                let other = read_checkpoint(&relative_to(script, other))?;
                let mask = relative_to(script, mask);
                let mask_field = mask_script(&mask, &mut blend_eps)?;
                blend = Some((other, mask_field));
            }
            _ => unreachable!("bool commands are folded"),
        }
        Ok(())
    })?;
    Ok(Edited { model, field, blend })
}

/// A mask script: bool commands only, starting from the empty set.
fn mask_script(path: &Path, eps: &mut f64) -> Result<BooleanField, Failure> {
    let cmds = parse_script(&read_text(path)?)?;
    fold_bool(path, &cmds, BooleanField::Const(false), eps, |_| {
        Err(Failure::Data(format!("{}: mask scripts may only hold bool and eps", path.display())))
    })
}

fn render_edited(edited: &Edited, camera: &Camera, opts: &RenderOptions) -> Result<Image, Failure> {
    Ok(match &edited.blend {
        None => render_boolean_image(&[&edited.model], 0, &edited.field, camera, opts)?,
        Some((other, mask)) => {
            let base = edited.field.clone().combine(BoolOp::Difference, mask.clone());
            blend_image(&[&edited.model, other], (0, &base), (1, mask), camera, opts)?
        }
    })
}

fn train_config(o: &OptimArgs, cli: &Cli) -> TrainConfig {
    TrainConfig {
        steps: o.steps,
        batch_size: o.batch,
        lr_features: o.lr_features,
        lr_decoders: o.lr_decoders,
        seed: cli.global.seed,
        threads: cli.global.threads,
        f32_params: cli.global.precision == Precision::F32,
        ..TrainConfig::default()
    }
}

fn toy_views(cams: &[Camera], background: [f64; 3], quality: usize, threads: usize) -> Views {
    let scene = toy_scene();
    cams.iter()
        .map(|c| (*c, oracle_render(&scene, c, quality, background, threads)))
        .collect()
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let threads = cli.global.threads;
    if threads == 0 {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    match &cli.command {
        Command::GenScene {
            out: dir,
            resolution,
            quality,
            background,
        } => {
            if *resolution == 0 || *quality == 0 {
                return Err(Failure::Usage("--resolution and --quality must be positive".into()));
            }
            let bg = background.rgb();
            let scene = toy_scene();
            let train_views = toy_views(&toy_train_cameras(*resolution), bg, *quality, threads);
            let hold_views = toy_views(&toy_holdout_cameras(*resolution), bg, *quality, threads);
            save_dataset(&dir.join("train"), &train_views)?;
            save_dataset(&dir.join("holdout"), &hold_views)?;
            write_text(&dir.join("mesh.tet"), &write_tetmesh(&scene.mesh))?;
            emit(out, "tets", scene.mesh.num_tets())?;
            emit(out, "views_train", train_views.len())?;
            emit(out, "views_holdout", hold_views.len())
        }
        Command::Train {
            scene,
            data,
            mesh,
            holdout,
            out: path,
            log2_table,
            sh_degree,
            optim,
            render,
        } => {
            let opts = render_options(render, threads)?;
            let (mesh, views, hold) = match (scene, data) {
                (Some(SceneKind::Toy), _) => {
                    let bg = opts.background;
                    let train = toy_views(&toy_train_cameras(64), bg, ORACLE_QUALITY, threads);
                    let hold = toy_views(&toy_holdout_cameras(64), bg, ORACLE_QUALITY, threads);
                    (toy_scene().mesh, train, Some(hold))
                }
                (None, Some(dir)) => {
                    let mesh_path = mesh.as_ref().expect("clap requires --mesh with --data");
                    let hold = holdout.as_ref().map(|h| impostor::io::load_dataset(h)).transpose()?;
                    (read_tetmesh(mesh_path)?, impostor::io::load_dataset(dir)?, hold)
                }
                (None, None) => return Err(Failure::Usage("train needs --scene or --data".into())),
            };
            let cfg = ModelConfig {
                log2_table_size: *log2_table,
                sh_degree: *sh_degree,
                ..ModelConfig::default()
            };
            let mut model = ImpostorModel::new(mesh, cfg, cli.global.seed)?;
            let tc = train_config(optim, cli);
            tc.validate()?;
            let report = train(&mut model, &views, &tc, &opts)?;
            write_checkpoint(path, &model)?;
            emit(out, "steps", report.losses.len())?;
            if let Some(l) = report.losses.last() {
                emit(out, "loss", format!("{l:.6e}"))?;
            }
            emit(out, "psnr_train", format!("{:.3}", evaluate(&model, &views, &opts)))?;
            if let Some(h) = hold {
                emit(out, "psnr_holdout", format!("{:.3}", evaluate(&model, &h, &opts)))?;
            }
            Ok(())
        }
        Command::Render {
            model,
            camera,
            out: path,
            render,
        } => {
            let opts = render_options(render, threads)?;
            let model = read_checkpoint(model)?;
            let cams = read_cameras(camera)?;
            render_all(&cams, path, out, |c| Ok(render_image(&model, c, &opts)))
        }
        Command::Deform {
            model,
            frame,
            out: path,
        } => {
            let model = read_checkpoint(model)?;
            let moved = deform(&model, read_frame(frame)?)?;
            write_checkpoint(path, &moved)?;
            emit(out, "vertices", moved.mesh.vertices().len())
        }
        Command::Boolean {
            model,
            script,
            camera,
            out: path,
            eps,
            render,
        } => {
            let opts = render_options(render, threads)?;
            let edited = run_script(read_checkpoint(model)?, script, *eps)?;
            let cams = read_cameras(camera)?;
            render_all(&cams, path, out, |c| render_edited(&edited, c, &opts))
        }
        Command::Blend {
            model,
            other,
            mask,
            camera,
            out: path,
            eps,
            render,
        } => {
            let opts = render_options(render, threads)?;
            let mut eps = *eps;
            let edited = Edited {
                model: read_checkpoint(model)?,
                field: BooleanField::Const(true),
                blend: Some((read_checkpoint(other)?, mask_script(mask, &mut eps)?)),
            };
            let cams = read_cameras(camera)?;
            render_all(&cams, path, out, |c| render_edited(&edited, c, &opts))
        }
        Command::Retrain {
            model,
            mesh,
            out: path,
            stage1_steps,
            stage1_points,
            stage2_steps,
            stage2_batch,
            freeze_decoders,
            render,
        } => {
            let opts = render_options(render, threads)?;
            let old = read_checkpoint(model)?;
            let new_mesh = read_tetmesh(mesh)?;
            let region = RetrainRegion::infer(&old.mesh, &new_mesh);
            let cfg = RetrainConfig {
                stage1_steps: *stage1_steps,
                stage1_points: *stage1_points,
                stage2: TrainConfig {
                    steps: *stage2_steps,
                    batch_size: *stage2_batch,
                    seed: cli.global.seed,
                    threads,
                    f32_params: cli.global.precision == Precision::F32,
                    ..TrainConfig::default()
                },
                update_decoders: !freeze_decoders,
                seed: cli.global.seed,
                ..RetrainConfig::default()
            };
            let changed = region.changed.len();
            let (new, report) = retrain_local(&old, new_mesh, &region, &cfg, &opts)?;
            write_checkpoint(path, &new)?;
            emit(out, "changed_tets", changed)?;
            if let Some(l) = report.stage1_losses.last() {
                emit(out, "stage1_loss", format!("{l:.6e}"))?;
            }
            if let Some(l) = report.stage2_losses.last() {
                emit(out, "stage2_loss", format!("{l:.6e}"))?;
            }
            Ok(())
        }
        Command::Compose {
            scene,
            camera,
            out: path,
            render,
        } => {
            let opts = render_options(render, threads)?;
            let specs = parse_compose(&read_text(scene)?)?;
            if specs.is_empty() {
                return Err(Failure::Data("compose file lists no instances".into()));
            }
            let instances = specs
                .iter()
                .map(|s| Ok(Instance::new(read_checkpoint(&relative_to(scene, &s.model))?, s.to_world)?))
                .collect::<Result<Vec<_>, Failure>>()?;
            let composite = CompositeScene { instances };
            let cams = read_cameras(camera)?;
            render_all(&cams, path, out, |c| Ok(compose_image(&composite, c, &opts)))
        }
        Command::Eval { a, b } => {
            let (ia, ib) = (read_ppm(a)?, read_ppm(b)?);
            let p = psnr(&ia, &ib)?;
            emit(out, "psnr", format!("{p:?}"))?;
            emit(out, "max_abs_diff", format!("{:?}", ia.max_abs_diff(&ib)))
        }
    }
}
