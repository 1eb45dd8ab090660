//! Density and radiance decoders.
//!
//! Both are small fully connected networks with rectified hidden layers and
//! a fixed output transform. Parameters live in one flat vector per network
//! (weights row-major, then biases, layer by layer), which keeps gradient
//! buffers and optimiser state simple.

use rand::Rng;
use thiserror::Error;

/// Raw density outputs are clamped here before exponentiation.
pub const MAX_LOG_DENSITY: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecoderError {
    #[error("non-finite decoder input or output")]
    NonFinite,
    #[error("expected {expected} inputs, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputTransform {
    /// `exp(min(x, 20))`.
    Exp,
    /// Logistic function.
    Sigmoid,
    Identity,
}

impl OutputTransform {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            OutputTransform::Exp => x.min(MAX_LOG_DENSITY).exp(),
            OutputTransform::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            OutputTransform::Identity => x,
        }
    }

    /// Derivative with respect to the raw value, given raw and transformed.
    #[inline]
    pub fn derivative(self, raw: f64, y: f64) -> f64 {
        match self {
            OutputTransform::Exp => {
                if raw < MAX_LOG_DENSITY {
                    y
                } else {
                    0.0
                }
            }
            OutputTransform::Sigmoid => y * (1.0 - y),
            OutputTransform::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    /// Layer widths, input first, output last.
    pub sizes: Vec<usize>,
    pub output: OutputTransform,
    pub params: Vec<f64>,
}

/// Reusable buffers for [`Mlp::backward`].
#[derive(Debug, Clone, Default)]
pub struct MlpScratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Mlp {
    /// Network with all parameters zero.
    pub fn zeros(sizes: Vec<usize>, output: OutputTransform) -> Self {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0));
        let n = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Mlp {
            sizes,
            output,
            params: vec![0.0; n],
        }
    }

    /// Weights and biases uniform in `±1/sqrt(fan_in)`.
    pub fn random(sizes: Vec<usize>, output: OutputTransform, rng: &mut impl Rng) -> Self {
        let mut m = Self::zeros(sizes, output);
        let mut off = 0;
        for w in m.sizes.clone().windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for p in &mut m.params[off..off + w[0] * w[1] + w[1]] {
                *p = rng.gen_range(-bound..=bound);
            }
            off += w[0] * w[1] + w[1];
        }
        m
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Total width of the hidden layers, the size of the activation cache.
    pub fn hidden_len(&self) -> usize {
        self.sizes[1..self.sizes.len() - 1].iter().sum()
    }

    /// Offset of layer `k`'s weights; its biases follow them.
    fn layer_offset(&self, k: usize) -> usize {
        self.sizes[..k + 1].windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Output-layer bias entries.
    pub fn output_bias_mut(&mut self) -> &mut [f64] {
        let k = self.sizes.len() - 2;
        let off = self.layer_offset(k) + self.sizes[k] * self.sizes[k + 1];
        let n = self.sizes[k + 1];
        &mut self.params[off..off + n]
    }

    /// Output-layer weights, row-major `out x in`.
    pub fn output_weights_mut(&mut self) -> &mut [f64] {
        let k = self.sizes.len() - 2;
        let off = self.layer_offset(k);
        let n = self.sizes[k] * self.sizes[k + 1];
        &mut self.params[off..off + n]
    }

    /// Forward pass. Hidden activations (after the rectifier) go to
    /// `hidden`, pre-transform outputs to `raw`; transformed outputs are
    /// written to `out`.
    pub fn forward(&self, input: &[f64], hidden: &mut [f64], raw: &mut [f64], out: &mut [f64]) {
        let nl = self.sizes.len() - 1;
        let mut off = 0;
        let mut hoff = 0;
        for k in 0..nl {
            let (n_in, n_out) = (self.sizes[k], self.sizes[k + 1]);
            let w = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            let (before, after) = hidden.split_at_mut(hoff);
            let x: &[f64] = if k == 0 { input } else { &before[hoff - n_in..] };
            if k + 1 == nl {
                for j in 0..n_out {
                    raw[j] = b[j] + dot(&w[j * n_in..(j + 1) * n_in], x);
                }
            } else {
                for j in 0..n_out {
                    after[j] = (b[j] + dot(&w[j * n_in..(j + 1) * n_in], x)).max(0.0);
                }
                hoff += n_out;
            }
            off += n_in * n_out + n_out;
        }
        for j in 0..self.output_dim() {
            out[j] = self.output.apply(raw[j]);
        }
    }

    /// Reverse pass from `d_out` (gradient with respect to the transformed
    /// outputs). Parameter gradients are added to `grad`; the input gradient
    /// is added to `d_input` when given.
    #[allow(clippy::too_many_arguments)]
    pub fn backward(
        &self,
        input: &[f64],
        hidden: &[f64],
        raw: &[f64],
        out: &[f64],
        d_out: &[f64],
        grad: &mut [f64],
        d_input: Option<&mut [f64]>,
        scratch: &mut MlpScratch,
    ) {
        let nl = self.sizes.len() - 1;
        let n_last = self.output_dim();
        scratch.a.clear();
        scratch
            .a
            .extend((0..n_last).map(|j| d_out[j] * self.output.derivative(raw[j], out[j])));
        let mut hoff = self.hidden_len();
        let mut d_input = d_input;
        for k in (0..nl).rev() {
            let (n_in, n_out) = (self.sizes[k], self.sizes[k + 1]);
            let off = self.layer_offset(k);
            let x: &[f64] = if k == 0 {
                input
            } else {
                &hidden[hoff - n_in..hoff]
            };
            let delta = &scratch.a;
            {
                let (gw, gb) = grad[off..off + n_in * n_out + n_out].split_at_mut(n_in * n_out);
                for j in 0..n_out {
                    let d = delta[j];
                    if d == 0.0 {
                        continue;
                    }
                    gb[j] += d;
                    for (g, xi) in gw[j * n_in..(j + 1) * n_in].iter_mut().zip(x) {
                        *g += d * xi;
                    }
                }
            }
            let w = &self.params[off..off + n_in * n_out];
            if k == 0 {
                if let Some(di) = d_input.as_deref_mut() {
                    for j in 0..n_out {
                        let d = delta[j];
                        if d == 0.0 {
                            continue;
                        }
                        for (g, wi) in di.iter_mut().zip(&w[j * n_in..(j + 1) * n_in]) {
                            *g += d * wi;
                        }
                    }
                }
            } else {
                scratch.b.clear();
                scratch.b.resize(n_in, 0.0);
                for j in 0..n_out {
                    let d = delta[j];
                    if d == 0.0 {
                        continue;
                    }
                    for (g, wi) in scratch.b.iter_mut().zip(&w[j * n_in..(j + 1) * n_in]) {
                        *g += d * wi;
                    }
                }
                for (g, xi) in scratch.b.iter_mut().zip(x) {
                    if *xi <= 0.0 {
                        *g = 0.0;
                    }
                }
                std::mem::swap(&mut scratch.a, &mut scratch.b);
                hoff -= n_in;
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The density and radiance networks of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderParams {
    pub density: Mlp,
    pub radiance: Mlp,
}

impl DecoderParams {
    /// `density: pos -> density_hidden -> 1`, `radiance: pos + dir ->
    /// radiance_hidden... -> 3`.
    pub fn random(
        pos_dim: usize,
        dir_dim: usize,
        density_hidden: &[usize],
        radiance_hidden: &[usize],
        radiance_output: OutputTransform,
        rng: &mut impl Rng,
    ) -> Self {
        DecoderParams {
            density: Mlp::random(layer_sizes(pos_dim, density_hidden, 1), OutputTransform::Exp, rng),
            radiance: Mlp::random(layer_sizes(pos_dim + dir_dim, radiance_hidden, 3), radiance_output, rng),
        }
    }

    pub fn zeros(
        pos_dim: usize,
        dir_dim: usize,
        density_hidden: &[usize],
        radiance_hidden: &[usize],
        radiance_output: OutputTransform,
    ) -> Self {
        DecoderParams {
            density: Mlp::zeros(layer_sizes(pos_dim, density_hidden, 1), OutputTransform::Exp),
            radiance: Mlp::zeros(layer_sizes(pos_dim + dir_dim, radiance_hidden, 3), radiance_output),
        }
    }

    pub fn density_forward(&self, pos: &[f64]) -> Result<f64, DecoderError> {
        let out = run(&self.density, pos)?;
        Ok(out[0])
    }

    pub fn radiance_forward(&self, input: &[f64]) -> Result<[f64; 3], DecoderError> {
        let out = run(&self.radiance, input)?;
        Ok([out[0], out[1], out[2]])
    }
}

pub(crate) fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut s = vec![input];
    s.extend_from_slice(hidden);
    s.push(output);
    s
}

fn run(net: &Mlp, input: &[f64]) -> Result<Vec<f64>, DecoderError> {
    if input.len() != net.input_dim() {
        return Err(DecoderError::ShapeMismatch {
            expected: net.input_dim(),
            got: input.len(),
        });
    }
    if input.iter().any(|x| x.is_nan()) {
        return Err(DecoderError::NonFinite);
    }
    let mut hidden = vec![0.0; net.hidden_len()];
    let mut raw = vec![0.0; net.output_dim()];
    let mut out = vec![0.0; net.output_dim()];
    net.forward(input, &mut hidden, &mut raw, &mut out);
    if out.iter().any(|x| x.is_nan()) {
        return Err(DecoderError::NonFinite);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Straight-line reimplementation used as a forward oracle.
    fn oracle(net: &Mlp, input: &[f64]) -> Vec<f64> {
        let mut x = input.to_vec();
        let mut off = 0;
        let nl = net.sizes.len() - 1;
        for k in 0..nl {
            let (ni, no) = (net.sizes[k], net.sizes[k + 1]);
            let mut y = vec![0.0; no];
            for j in 0..no {
                let mut s = net.params[off + ni * no + j];
                for i in 0..ni {
                    s += net.params[off + j * ni + i] * x[i];
                }
                y[j] = if k + 1 < nl { s.max(0.0) } else { s };
            }
            off += ni * no + no;
            x = y;
        }
        x.into_iter().map(|v| net.output.apply(v)).collect()
    }

    #[test]
    fn zero_density_net_gives_unit_density() {
        let d = DecoderParams::zeros(16, 16, &[16], &[64, 64], OutputTransform::Sigmoid);
        assert_eq!(d.density_forward(&[0.3; 16]).unwrap(), 1.0);
        assert_eq!(d.radiance_forward(&[0.3; 32]).unwrap(), [0.5; 3]);
    }

    #[test]
    fn density_falls_as_last_layer_goes_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let base = DecoderParams::random(8, 4, &[16], &[64, 64], OutputTransform::Sigmoid, &mut rng);
        let x: Vec<f64> = (0..8).map(|i| 0.1 * i as f64 + 0.05).collect();
        let mut last = f64::INFINITY;
        for s in [0.0, 1.0, 10.0, 100.0, 1000.0] {
            let mut d = base.clone();
            d.density.output_weights_mut().fill(-s);
            let sigma = d.density_forward(&x).unwrap();
            assert!(sigma <= last);
            last = sigma;
        }
        assert!(last < 1e-30);
    }

    #[test]
    fn matches_straight_line_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = DecoderParams::random(16, 16, &[16], &[64, 64], OutputTransform::Sigmoid, &mut rng);
        for _ in 0..50 {
            let x: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = d.density_forward(&x[..16]).unwrap();
            assert!((s - oracle(&d.density, &x[..16])[0]).abs() <= 1e-12 * s.max(1.0));
            let c = d.radiance_forward(&x).unwrap();
            let want = oracle(&d.radiance, &x);
            for k in 0..3 {
                assert!((c[k] - want[k]).abs() < 1e-12);
                assert!((0.0..=1.0).contains(&c[k]));
            }
        }
    }

    #[test]
    fn rejects_nan_and_bad_shapes() {
        let d = DecoderParams::zeros(4, 1, &[16], &[8], OutputTransform::Sigmoid);
        assert_eq!(d.density_forward(&[f64::NAN; 4]), Err(DecoderError::NonFinite));
        assert!(matches!(d.density_forward(&[0.0; 3]), Err(DecoderError::ShapeMismatch { .. })));
    }

    fn loss(net: &Mlp, x: &[f64], w: &[f64]) -> f64 {
        let mut h = vec![0.0; net.hidden_len()];
        let mut r = vec![0.0; net.output_dim()];
        let mut o = vec![0.0; net.output_dim()];
        net.forward(x, &mut h, &mut r, &mut o);
        o.iter().zip(w).map(|(a, b)| a * b).sum()
    }

    fn check_gradients(net: &mut Mlp, x: &[f64], rng: &mut ChaCha8Rng) {
        let w: Vec<f64> = (0..net.output_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut h = vec![0.0; net.hidden_len()];
        let mut r = vec![0.0; net.output_dim()];
        let mut o = vec![0.0; net.output_dim()];
        net.forward(x, &mut h, &mut r, &mut o);
        let mut g = vec![0.0; net.num_params()];
        let mut gi = vec![0.0; x.len()];
        net.backward(x, &h, &r, &o, &w, &mut g, Some(&mut gi), &mut MlpScratch::default());
        let hstep = 1e-6;
        for p in 0..net.num_params() {
            let orig = net.params[p];
            net.params[p] = orig + hstep;
            let lp = loss(net, x, &w);
            net.params[p] = orig - hstep;
            let lm = loss(net, x, &w);
            net.params[p] = orig;
            let fd = (lp - lm) / (2.0 * hstep);
            let scale = fd.abs().max(g[p].abs());
            assert!(scale < 1e-10 || (fd - g[p]).abs() / scale < 1e-6, "param {p}: {fd} vs {}", g[p]);
        }
        let mut xv = x.to_vec();
        for i in 0..x.len() {
            xv[i] = x[i] + hstep;
            let lp = loss(net, &xv, &w);
            xv[i] = x[i] - hstep;
            let lm = loss(net, &xv, &w);
            xv[i] = x[i];
            let fd = (lp - lm) / (2.0 * hstep);
            let scale = fd.abs().max(gi[i].abs());
            assert!(scale < 1e-10 || (fd - gi[i]).abs() / scale < 1e-6);
        }
    }

    /// Pre-activations within 1e-3 of zero are moved away from the kink.
    fn nudge_away_from_kinks(net: &mut Mlp, x: &[f64]) {
        for _ in 0..10 {
            let mut moved = false;
            let mut off = 0;
            let mut act = x.to_vec();
            for k in 0..net.sizes.len() - 2 {
                let (ni, no) = (net.sizes[k], net.sizes[k + 1]);
                let mut y = vec![0.0; no];
                for j in 0..no {
                    let mut s = net.params[off + ni * no + j];
                    for i in 0..ni {
                        s += net.params[off + j * ni + i] * act[i];
                    }
                    if s.abs() < 1e-3 {
                        net.params[off + ni * no + j] += 2e-3;
                        moved = true;
                    }
                    y[j] = s.max(0.0);
                }
                off += ni * no + no;
                act = y;
            }
            if !moved {
                return;
            }
        }
    }

    #[test]
    fn toy_net_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for output in [OutputTransform::Exp, OutputTransform::Sigmoid, OutputTransform::Identity] {
            let mut net = Mlp::random(vec![4, 6, 5, 2], output, &mut rng);
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            nudge_away_from_kinks(&mut net, &x);
            check_gradients(&mut net, &x, &mut rng);
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let net = Mlp::random(vec![4, 8, 3], OutputTransform::Sigmoid, &mut rng);
        let x = [0.1, 0.2, -0.3, 0.4];
        let mut h = vec![0.0; net.hidden_len()];
        let mut r = vec![0.0; 3];
        let mut o = vec![0.0; 3];
        net.forward(&x, &mut h, &mut r, &mut o);
        let mut g = vec![0.0; net.num_params()];
        let mut gi = vec![0.0; 4];
        net.backward(&x, &h, &r, &o, &[0.0; 3], &mut g, Some(&mut gi), &mut MlpScratch::default());
        assert!(g.iter().chain(&gi).all(|&v| v == 0.0));
    }

    #[test]
    fn no_hidden_layer_is_affine() {
        let mut net = Mlp::zeros(vec![3, 2], OutputTransform::Identity);
        net.params.copy_from_slice(&[1.0, 2.0, 3.0, -1.0, 0.0, 1.0, 0.5, -0.5]);
        assert_eq!(oracle(&net, &[1.0, 1.0, 1.0]), vec![6.5, -0.5]);
        assert_eq!(loss(&net, &[1.0, 1.0, 1.0], &[1.0, 0.0]), 6.5);
    }
}
