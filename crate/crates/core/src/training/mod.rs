//! Fitting models to posed images, procedural ground truth and local
//! retraining after remeshing.

pub mod optim;
pub mod oracle;
pub mod retrain;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::Ray;
use crate::model::ImpostorModel;
use crate::parallel::chunks;
use crate::rendering::{psnr, render_image, Camera, Gradients, Image, RayWorkspace, RenderOptions};

pub use optim::Adam;
pub use oracle::{oracle_render, toy_scene, OracleScene, Primitive};
pub use retrain::{retrain_local, RetrainConfig, RetrainRegion, RetrainReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("loss diverged at step {step}")]
    Diverged { step: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("retraining region is empty")]
    EmptyRegion,
    #[error("unchanged tet {0} has no counterpart in the old mesh")]
    UnmappedTet(usize),
    #[error("invalid retraining region: {0}")]
    InvalidRegion(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    /// Rays per step.
    pub batch_size: usize,
    pub lr_features: f64,
    pub lr_decoders: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    pub threads: usize,
    /// Round all trainable values through 32-bit floats after each step.
    pub f32_params: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 5000,
            batch_size: 1024,
            lr_features: 1e-2,
            lr_decoders: 1e-3,
            beta1: 0.9,
            beta2: 0.99,
            eps: 1e-15,
            seed: 0,
            threads: 1,
            f32_params: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.into()));
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if !(self.lr_features > 0.0 && self.lr_decoders > 0.0) {
            return bad("learning rates must be positive");
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return bad("moment decays must lie in [0, 1)");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if self.threads == 0 {
            return bad("threads must be positive");
        }
        Ok(())
    }
}

/// A ray and the colour it should render to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayTarget {
    pub ray: Ray,
    pub target: [f64; 3],
}

struct Worker {
    ws: RayWorkspace,
    grads: Gradients,
}

/// Optimiser state plus per-worker scratch for one model.
pub struct Trainer {
    cfg: TrainConfig,
    table: Adam,
    density: Adam,
    radiance: Adam,
    workers: Vec<Worker>,
    total: Gradients,
    /// Update the decoders as well as the feature table.
    pub update_decoders: bool,
    /// Feature-table ranges that stay fixed.
    pub frozen: Vec<std::ops::Range<usize>>,
    step: usize,
}

impl Trainer {
    pub fn new(model: &ImpostorModel, cfg: &TrainConfig) -> Result<Self, TrainError> {
        cfg.validate()?;
        let g = Gradients::zeros(model);
        let adam = |n, lr| Adam::new(n, lr, cfg.beta1, cfg.beta2, cfg.eps);
        Ok(Trainer {
            table: adam(g.table.len(), cfg.lr_features),
            density: adam(g.density.len(), cfg.lr_decoders),
            radiance: adam(g.radiance.len(), cfg.lr_decoders),
            workers: (0..cfg.threads)
                .map(|_| Worker {
                    ws: RayWorkspace::new(),
                    grads: g.clone(),
                })
                .collect(),
            total: g,
            cfg: cfg.clone(),
            update_decoders: true,
            frozen: Vec::new(),
            step: 0,
        })
    }

    /// Gradient of the mean squared colour error over `batch`, left in the
    /// trainer, and the loss value. Workers reduce in a fixed order.
    pub fn gradients(&mut self, model: &ImpostorModel, batch: &[RayTarget], opts: &RenderOptions) -> f64 {
        let scale = 1.0 / (3 * batch.len()).max(1) as f64;
        let ranges = chunks(batch.len(), self.workers.len());
        let run = |w: &mut Worker, range: std::ops::Range<usize>| {
            w.grads.clear();
            let mut sse = 0.0;
            for rt in &batch[range] {
                let out = w.ws.forward(model, &rt.ray, &rt.ray.dir, opts, None);
                let mut d = [0.0; 3];
                for k in 0..3 {
                    let e = out.rgb[k] - rt.target[k];
                    sse += e * e;
                    d[k] = 2.0 * e * scale;
                }
                w.ws.backward(model, d, &mut w.grads);
            }
            sse
        };
        let sums: Vec<f64> = if ranges.len() == 1 {
            vec![run(&mut self.workers[0], ranges[0].clone())]
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = self
                    .workers
                    .iter_mut()
                    .zip(ranges)
                    .map(|(w, r)| s.spawn(move || run(w, r)))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
            })
        };
        let used = sums.len();
        self.total.clear();
        for w in &self.workers[..used] {
            self.total.add(&w.grads);
        }
        sums.iter().sum::<f64>() * scale
    }

    /// One optimiser step on `batch`; returns the loss before the update.
    pub fn step(&mut self, model: &mut ImpostorModel, batch: &[RayTarget], opts: &RenderOptions) -> Result<f64, TrainError> {
        let loss = self.gradients(model, batch, opts);
        if !loss.is_finite() {
            return Err(TrainError::Diverged { step: self.step });
        }
        for r in &self.frozen {
            self.total.table[r.clone()].fill(0.0);
        }
        self.table.step(&mut model.table.values, &self.total.table);
        if self.update_decoders {
            self.density.step(&mut model.decoders.density.params, &self.total.density);
            self.radiance.step(&mut model.decoders.radiance.params, &self.total.radiance);
        }
        if self.cfg.f32_params {
            model.round_to_f32();
        }
        if !model.all_finite() {
            return Err(TrainError::Diverged { step: self.step });
        }
        self.step += 1;
        Ok(loss)
    }

    pub fn last_gradients(&self) -> &Gradients {
        &self.total
    }
}

/// Per-step batch losses of a training run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub losses: Vec<f64>,
}

/// Random `(view, pixel)` rays with their target colours.
pub fn sample_batch(data: &[(Camera, Image)], n: usize, rng: &mut ChaCha8Rng) -> Vec<RayTarget> {
    (0..n)
        .map(|_| {
            let (cam, img) = &data[rng.gen_range(0..data.len())];
            let x = rng.gen_range(0..cam.width);
            let y = rng.gen_range(0..cam.height);
            RayTarget {
                ray: cam.ray(x, y),
                target: img.get(x, y),
            }
        })
        .collect()
}

/// Fits `model` to `data` by minimising the mean squared colour error over
/// random ray batches. With one thread the result only depends on the seed.
pub fn train(
    model: &mut ImpostorModel,
    data: &[(Camera, Image)],
    cfg: &TrainConfig,
    opts: &RenderOptions,
) -> Result<TrainReport, TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut trainer = Trainer::new(model, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = TrainReport::default();
    for step in 0..cfg.steps {
        let batch = sample_batch(data, cfg.batch_size, &mut rng);
        let loss = trainer.step(model, &batch, opts)?;
        if step % 500 == 0 {
            log::info!("step {step} loss {loss:.6e}");
        }
        report.losses.push(loss);
    }
    Ok(report)
}

/// Mean PSNR of the model's renders against `views`.
pub fn evaluate(model: &ImpostorModel, views: &[(Camera, Image)], opts: &RenderOptions) -> f64 {
    let total: f64 = views
        .iter()
        .map(|(cam, img)| psnr(&render_image(model, cam, opts), img).expect("view size matches camera"))
        .sum();
    total / views.len().max(1) as f64
}

/// Trailing moving average with the given window.
pub fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(values.len().saturating_sub(w - 1));
    let mut acc: f64 = values.iter().take(w).sum();
    if values.len() < w {
        return out;
    }
    out.push(acc / w as f64);
    for i in w..values.len() {
        acc += values[i] - values[i - w];
        out.push(acc / w as f64);
    }
    out
}
