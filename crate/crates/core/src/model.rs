use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::decoders::{DecoderParams, OutputTransform};
use crate::encoding::{encode_position_into, EncodingError, FeatureTable, HashLayout, MAX_SH_DEGREE};
use crate::geometry::{Bary4, TetMesh};

/// Structural hyperparameters of an [`ImpostorModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Base-2 logarithm of the whole-mesh table budget.
    pub log2_table_size: u32,
    pub levels: usize,
    pub features: usize,
    pub max_resolution: u32,
    /// Number of spherical-harmonic bands.
    pub sh_degree: usize,
    pub density_hidden: Vec<usize>,
    pub radiance_hidden: Vec<usize>,
    pub radiance_output: OutputTransform,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            log2_table_size: 19,
            levels: 8,
            features: 2,
            max_resolution: 16,
            sh_degree: 4,
            density_hidden: vec![16],
            radiance_hidden: vec![64, 64],
            radiance_output: OutputTransform::Sigmoid,
        }
    }
}

impl ModelConfig {
    pub fn pos_dim(&self) -> usize {
        self.levels * self.features
    }

    pub fn dir_dim(&self) -> usize {
        self.sh_degree * self.sh_degree
    }

    pub fn layout_for(&self, tet_count: usize) -> Result<HashLayout, EncodingError> {
        if !(1..=MAX_SH_DEGREE).contains(&self.sh_degree) {
            return Err(EncodingError::InvalidDegree(self.sh_degree));
        }
        HashLayout::with_max_resolution(
            tet_count,
            self.log2_table_size,
            self.levels,
            self.features,
            self.max_resolution,
        )
    }
}

/// A proxy mesh with its per-tetrahedron feature tables and decoders.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpostorModel {
    pub config: ModelConfig,
    pub mesh: TetMesh,
    pub layout: HashLayout,
    pub table: FeatureTable,
    pub decoders: DecoderParams,
}

impl ImpostorModel {
    /// Randomly initialised model; all randomness comes from `seed`.
    pub fn new(mesh: TetMesh, config: ModelConfig, seed: u64) -> Result<Self, EncodingError> {
        let layout = config.layout_for(mesh.num_tets())?;
        Ok(Self::with_layout(mesh, config, layout, seed))
    }

    pub fn with_layout(mesh: TetMesh, config: ModelConfig, layout: HashLayout, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = FeatureTable::random(&layout, &mut rng);
        let decoders = DecoderParams::random(
            layout.output_dim(),
            config.dir_dim(),
            &config.density_hidden,
            &config.radiance_hidden,
            config.radiance_output,
            &mut rng,
        );
        ImpostorModel {
            config,
            mesh,
            layout,
            table,
            decoders,
        }
    }

    /// Density `sigma` and colour `rgb` everywhere, independent of position
    /// and direction. `sigma = 0` gives an empty model.
    pub fn constant(mesh: TetMesh, config: ModelConfig, sigma: f64, rgb: [f64; 3]) -> Result<Self, EncodingError> {
        let layout = config.layout_for(mesh.num_tets())?;
        let mut decoders = DecoderParams::zeros(
            layout.output_dim(),
            config.dir_dim(),
            &config.density_hidden,
            &config.radiance_hidden,
            config.radiance_output,
        );
        decoders.density.output_bias_mut()[0] = if sigma > 0.0 { sigma.ln() } else { f64::NEG_INFINITY };
        for (b, c) in decoders.radiance.output_bias_mut().iter_mut().zip(rgb) {
            *b = match config.radiance_output {
                OutputTransform::Sigmoid => {
                    let c = c.clamp(1e-12, 1.0 - 1e-12);
                    (c / (1.0 - c)).ln()
                }
                OutputTransform::Exp => c.ln(),
                OutputTransform::Identity => c,
            };
        }
        Ok(ImpostorModel {
            table: FeatureTable::zeros(&layout),
            config,
            mesh,
            layout,
            decoders,
        })
    }

    pub fn pos_dim(&self) -> usize {
        self.layout.output_dim()
    }

    pub fn dir_dim(&self) -> usize {
        self.config.dir_dim()
    }

    pub fn encode_into(&self, tet: usize, bary: &Bary4, out: &mut [f64]) {
        encode_position_into(&self.layout, &self.table, tet, bary, out);
    }

    /// Decoded density at a sample.
    pub fn density_at(&self, tet: usize, bary: &Bary4) -> f64 {
        let mut f = vec![0.0; self.pos_dim()];
        self.encode_into(tet, bary, &mut f);
        let net = &self.decoders.density;
        let mut hidden = vec![0.0; net.hidden_len()];
        let (mut raw, mut out) = ([0.0], [0.0]);
        net.forward(&f, &mut hidden, &mut raw, &mut out);
        out[0]
    }

    /// Total number of trainable values.
    pub fn num_params(&self) -> usize {
        self.table.values.len() + self.decoders.density.num_params() + self.decoders.radiance.num_params()
    }

    /// Rounds every trainable value through 32-bit floats.
    pub fn round_to_f32(&mut self) {
        let round = |v: &mut Vec<f64>| v.iter_mut().for_each(|x| *x = *x as f32 as f64);
        round(&mut self.table.values);
        round(&mut self.decoders.density.params);
        round(&mut self.decoders.radiance.params);
    }

    pub fn all_finite(&self) -> bool {
        let ok = |v: &[f64]| v.iter().all(|x| !x.is_nan() && *x != f64::INFINITY);
        ok(&self.table.values) && ok(&self.decoders.density.params) && ok(&self.decoders.radiance.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn unit_tet() -> TetMesh {
        TetMesh::build(vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()], vec![[0, 1, 2, 3]]).unwrap()
    }

    #[test]
    fn constant_model_decodes_constants() {
        let m = ImpostorModel::constant(unit_tet(), ModelConfig::default(), 2.5, [0.2, 0.4, 0.9]).unwrap();
        assert!((m.density_at(0, &Bary4::CENTROID) - 2.5).abs() < 1e-12);
        let mut input = vec![0.0; m.pos_dim() + m.dir_dim()];
        input[m.pos_dim()] = 0.28;
        let c = m.decoders.radiance_forward(&input).unwrap();
        for (a, b) in c.iter().zip([0.2, 0.4, 0.9]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_model_has_zero_density() {
        let m = ImpostorModel::constant(unit_tet(), ModelConfig::default(), 0.0, [0.5; 3]).unwrap();
        assert_eq!(m.density_at(0, &Bary4([0.1, 0.2, 0.3, 0.4])), 0.0);
    }

    #[test]
    fn seeded_init_is_reproducible() {
        let a = ImpostorModel::new(unit_tet(), ModelConfig::default(), 5).unwrap();
        let b = ImpostorModel::new(unit_tet(), ModelConfig::default(), 5).unwrap();
        let c = ImpostorModel::new(unit_tet(), ModelConfig::default(), 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.table, c.table);
        assert!(a.table.values.iter().all(|v| v.abs() <= 1e-4));
    }
}
