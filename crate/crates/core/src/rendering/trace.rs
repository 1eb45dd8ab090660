//! Per-ray forward and reverse passes.
//!
//! Both render modes share one sample stream: every sample carries its
//! interval length in the Manhattan barycentric measure, a decoded density
//! and a compositing weight `w_i = T_i (1 - exp(-sigma_i * delta_i))`, with
//! the transmittance `T` chained over all tetrahedra of the ray.

use super::{RenderMode, RenderOptions};
use crate::decoders::MlpScratch;
use crate::encoding::{encode_position_backward, sh_basis};
use crate::geometry::{Ray, Vec3};
use crate::model::ImpostorModel;
use crate::sampling::{sample_ray, TetSample};

/// Below this accumulated opacity the integrated feature is taken as zero.
pub const MIN_OPACITY: f64 = 1e-10;

/// Result of one ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayOutput {
    /// Colour over the background.
    pub rgb: [f64; 3],
    /// Colour contribution without the background term.
    pub premult: [f64; 3],
    /// Transmittance left after the last sample.
    pub transmittance: f64,
}

/// Gradient accumulators matching one model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub table: Vec<f64>,
    pub density: Vec<f64>,
    pub radiance: Vec<f64>,
}

impl Gradients {
    pub fn zeros(model: &ImpostorModel) -> Self {
        Gradients {
            table: vec![0.0; model.table.values.len()],
            density: vec![0.0; model.decoders.density.num_params()],
            radiance: vec![0.0; model.decoders.radiance.num_params()],
        }
    }

    pub fn clear(&mut self) {
        self.table.fill(0.0);
        self.density.fill(0.0);
        self.radiance.fill(0.0);
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in [
            (&mut self.table, &other.table),
            (&mut self.density, &other.density),
            (&mut self.radiance, &other.radiance),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

/// Per-sample density multiplier, used by boolean masks.
pub type SampleMask<'a> = &'a dyn Fn(&TetSample) -> f64;

/// Scratch state for one ray, reusable across rays.
#[derive(Debug, Default, Clone)]
pub struct RayWorkspace {
    pub samples: Vec<TetSample>,
    pub delta: Vec<f64>,
    pub sigma: Vec<f64>,
    pub weight: Vec<f64>,
    /// Transmittance before each sample, plus the final value.
    pub trans: Vec<f64>,
    mask: Vec<f64>,
    feat: Vec<f64>,
    dhid: Vec<f64>,
    draw: Vec<f64>,
    dsig: Vec<f64>,
    dir_feat: Vec<f64>,
    rin: Vec<f64>,
    rhid: Vec<f64>,
    rraw: Vec<f64>,
    rout: Vec<f64>,
    opacity: f64,
    mode: Option<RenderMode>,
    background: [f64; 3],
    dfeat: Vec<f64>,
    din: Vec<f64>,
    scratch: MlpScratch,
}

impl RayWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of samples of the last traced ray.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Traces `ray` through `model`. `view_dir` feeds the direction encoding
    /// (normally `ray.dir`); `mask` scales each sample's density.
    pub fn forward(
        &mut self,
        model: &ImpostorModel,
        ray: &Ray,
        view_dir: &Vec3,
        opts: &RenderOptions,
        mask: Option<SampleMask>,
    ) -> RayOutput {
        let rs = sample_ray(&model.mesh, ray, &opts.sampler);
        self.samples = rs.samples;
        let n = self.samples.len();
        let pd = model.pos_dim();
        let dd = model.dir_dim();
        let dnet = &model.decoders.density;
        let hd = dnet.hidden_len();
        self.mode = Some(opts.mode);
        self.background = opts.background;

        self.delta.clear();
        self.delta
            .extend(self.samples.iter().map(|s| s.d_alpha * rs.segments[s.segment].l1_length()));
        self.mask.clear();
        match mask {
            Some(m) => self.mask.extend(self.samples.iter().map(m)),
            None => self.mask.resize(n, 1.0),
        }
        self.feat.clear();
        self.feat.resize(n * pd, 0.0);
        self.dhid.clear();
        self.dhid.resize(n * hd, 0.0);
        self.draw.clear();
        self.draw.resize(n, f64::NEG_INFINITY);
        self.dsig.clear();
        self.dsig.resize(n, 0.0);
        self.sigma.clear();
        self.sigma.resize(n, 0.0);
        for i in 0..n {
            if self.mask[i] == 0.0 {
                continue;
            }
            let s = &self.samples[i];
            let f = &mut self.feat[i * pd..(i + 1) * pd];
            model.encode_into(s.tet, &s.bary, f);
            let mut out = [0.0];
            dnet.forward(
                f,
                &mut self.dhid[i * hd..(i + 1) * hd],
                std::slice::from_mut(&mut self.draw[i]),
                &mut out,
            );
            self.dsig[i] = out[0];
            self.sigma[i] = self.mask[i] * out[0];
        }

        self.weight.clear();
        self.trans.clear();
        let mut t = 1.0;
        for i in 0..n {
            let e = (-self.sigma[i] * self.delta[i]).exp();
            self.trans.push(t);
            self.weight.push(t * (1.0 - e));
            t *= e;
        }
        self.trans.push(t);

        self.dir_feat.clear();
        self.dir_feat.resize(dd, 0.0);
        sh_basis(view_dir, model.config.sh_degree, &mut self.dir_feat);

        let rnet = &model.decoders.radiance;
        let rd = pd + dd;
        let rh = rnet.hidden_len();
        let mut premult = [0.0; 3];
        match opts.mode {
            RenderMode::DecodeFirst => {
                self.rin.clear();
                self.rin.resize(n * rd, 0.0);
                self.rhid.clear();
                self.rhid.resize(n * rh, 0.0);
                self.rraw.clear();
                self.rraw.resize(n * 3, 0.0);
                self.rout.clear();
                self.rout.resize(n * 3, 0.0);
                for i in 0..n {
                    if self.weight[i] == 0.0 {
                        continue;
                    }
                    let input = &mut self.rin[i * rd..(i + 1) * rd];
                    input[..pd].copy_from_slice(&self.feat[i * pd..(i + 1) * pd]);
                    input[pd..].copy_from_slice(&self.dir_feat);
                    rnet.forward(
                        input,
                        &mut self.rhid[i * rh..(i + 1) * rh],
                        &mut self.rraw[i * 3..i * 3 + 3],
                        &mut self.rout[i * 3..i * 3 + 3],
                    );
                    for k in 0..3 {
                        premult[k] += self.weight[i] * self.rout[i * 3 + k];
                    }
                }
            }
            RenderMode::EarlyIntegration => {
                self.rin.clear();
                self.rin.resize(rd, 0.0);
                self.rhid.clear();
                self.rhid.resize(rh, 0.0);
                self.rraw.clear();
                self.rraw.resize(3, 0.0);
                self.rout.clear();
                self.rout.resize(3, 0.0);
                let a = 1.0 - t;
                self.opacity = a;
                if a > MIN_OPACITY {
                    for i in 0..n {
                        let w = self.weight[i];
                        if w == 0.0 {
                            continue;
                        }
                        for (g, f) in self.rin[..pd].iter_mut().zip(&self.feat[i * pd..(i + 1) * pd]) {
                            *g += w * f;
                        }
                    }
                    for g in &mut self.rin[..pd] {
                        *g /= a;
                    }
                }
                self.rin[pd..].copy_from_slice(&self.dir_feat);
                rnet.forward(&self.rin, &mut self.rhid, &mut self.rraw, &mut self.rout);
                for k in 0..3 {
                    premult[k] = a * self.rout[k];
                }
            }
        }
        let mut rgb = [0.0; 3];
        for k in 0..3 {
            rgb[k] = premult[k] + t * opts.background[k];
        }
        RayOutput {
            rgb,
            premult,
            transmittance: t,
        }
    }

    /// Reverse pass for the last [`forward`](Self::forward) call on the same
    /// model, given the loss gradient with respect to the output colour.
    pub fn backward(&mut self, model: &ImpostorModel, d_rgb: [f64; 3], grads: &mut Gradients) {
        let n = self.samples.len();
        let pd = model.pos_dim();
        let dd = model.dir_dim();
        let rd = pd + dd;
        let rnet = &model.decoders.radiance;
        let rh = rnet.hidden_len();
        let dnet = &model.decoders.density;
        let hd = dnet.hidden_len();
        let t_final = self.trans[n];
        let bg = self.background;
        let dot3 = |a: &[f64], b: &[f64]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];

        // dL/dw_i, dL/dT_final and dL/d(feature_i).
        let mut g = vec![0.0; n];
        let mut d_final = dot3(&d_rgb, &bg);
        self.dfeat.clear();
        self.dfeat.resize(n * pd, 0.0);
        match self.mode.expect("forward must run before backward") {
            RenderMode::DecodeFirst => {
                self.din.resize(rd, 0.0);
                for i in 0..n {
                    let w = self.weight[i];
                    if w == 0.0 {
                        continue;
                    }
                    g[i] = dot3(&d_rgb, &self.rout[i * 3..i * 3 + 3]);
                    let d_out = [w * d_rgb[0], w * d_rgb[1], w * d_rgb[2]];
                    self.din.fill(0.0);
                    rnet.backward(
                        &self.rin[i * rd..(i + 1) * rd],
                        &self.rhid[i * rh..(i + 1) * rh],
                        &self.rraw[i * 3..i * 3 + 3],
                        &self.rout[i * 3..i * 3 + 3],
                        &d_out,
                        &mut grads.radiance,
                        Some(&mut self.din),
                        &mut self.scratch,
                    );
                    self.dfeat[i * pd..(i + 1) * pd].copy_from_slice(&self.din[..pd]);
                }
            }
            RenderMode::EarlyIntegration => {
                let a = self.opacity;
                let d_out = [a * d_rgb[0], a * d_rgb[1], a * d_rgb[2]];
                self.din.clear();
                self.din.resize(rd, 0.0);
                rnet.backward(
                    &self.rin,
                    &self.rhid,
                    &self.rraw,
                    &self.rout,
                    &d_out,
                    &mut grads.radiance,
                    Some(&mut self.din),
                    &mut self.scratch,
                );
                let mut da = dot3(&d_rgb, &self.rout);
                if a > MIN_OPACITY {
                    let fbar = &self.rin[..pd];
                    let dfbar = &self.din[..pd];
                    da -= fbar.iter().zip(dfbar).map(|(f, d)| f * d).sum::<f64>() / a;
                    for i in 0..n {
                        let w = self.weight[i];
                        if w == 0.0 {
                            continue;
                        }
                        let f = &self.feat[i * pd..(i + 1) * pd];
                        g[i] = f.iter().zip(dfbar).map(|(f, d)| f * d).sum::<f64>() / a;
                        for (df, d) in self.dfeat[i * pd..(i + 1) * pd].iter_mut().zip(dfbar) {
                            *df = w * d / a;
                        }
                    }
                }
                d_final -= da;
            }
        }

        let mut suffix = 0.0;
        let mut dfeat_density = vec![0.0; pd];
        for k in (0..n).rev() {
            let dk = self.delta[k];
            let dsigma = dk * (g[k] * self.trans[k + 1] - suffix) - dk * t_final * d_final;
            suffix += g[k] * self.weight[k];
            let m = self.mask[k];
            if m == 0.0 {
                continue;
            }
            let d_out = [m * dsigma];
            dfeat_density.fill(0.0);
            dnet.backward(
                &self.feat[k * pd..(k + 1) * pd],
                &self.dhid[k * hd..(k + 1) * hd],
                &self.draw[k..k + 1],
                &self.dsig[k..k + 1],
                &d_out,
                &mut grads.density,
                Some(&mut dfeat_density),
                &mut self.scratch,
            );
            let df = &mut self.dfeat[k * pd..(k + 1) * pd];
            for (a, b) in df.iter_mut().zip(&dfeat_density) {
                *a += b;
            }
            let s = &self.samples[k];
            encode_position_backward(&model.layout, s.tet, &s.bary, df, &mut grads.table);
        }
    }
}
