use super::EncodingError;

/// Smallest per-tetrahedron table, as a base-2 logarithm.
pub const MIN_PER_TET_LOG2: u32 = 4;
/// Default finest grid resolution.
pub const DEFAULT_MAX_RESOLUTION: u32 = 16;
/// Coarsest grid resolution.
pub const BASE_RESOLUTION: u32 = 2;

pub(crate) const PRIMES: [u64; 4] = [1, 2_654_435_761, 805_459_861, 3_674_653_429];

/// Addressing of the packed per-tetrahedron hash tables.
///
/// Storage is tet-major: each tetrahedron owns `2^per_tet_log2` entries,
/// split evenly between the levels. Each entry holds `features` values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashLayout {
    pub levels: usize,
    pub features: usize,
    pub global_log2: u32,
    pub per_tet_log2: u32,
    pub tet_count: usize,
    pub resolutions: Vec<u32>,
}

fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// Geometric progression from [`BASE_RESOLUTION`] to `max`, bumped where
/// needed so that it is strictly increasing.
pub fn level_resolutions(levels: usize, max: u32) -> Vec<u32> {
    let base = BASE_RESOLUTION as f64;
    let growth = if levels > 1 {
        (max as f64 / base).powf(1.0 / (levels - 1) as f64)
    } else {
        1.0
    };
    let mut out: Vec<u32> = Vec::with_capacity(levels);
    for l in 0..levels {
        let r = (base * growth.powi(l as i32)).round() as u32;
        let r = match out.last() {
            Some(&prev) if r <= prev => prev + 1,
            _ => r,
        };
        out.push(r);
    }
    out
}

impl HashLayout {
    /// Layout with the per-tetrahedron budget `H' = max(H - ceil(log2 T), 4)`
    /// and resolutions up to [`DEFAULT_MAX_RESOLUTION`].
    pub fn new(tet_count: usize, global_log2: u32, levels: usize, features: usize) -> Result<Self, EncodingError> {
        Self::with_max_resolution(tet_count, global_log2, levels, features, DEFAULT_MAX_RESOLUTION)
    }

    pub fn with_max_resolution(
        tet_count: usize,
        global_log2: u32,
        levels: usize,
        features: usize,
        max_resolution: u32,
    ) -> Result<Self, EncodingError> {
        if tet_count == 0 || global_log2 == 0 {
            return Err(EncodingError::InvalidLayout("tet count and table size must be positive".into()));
        }
        let per_tet = global_log2
            .saturating_sub(ceil_log2(tet_count))
            .max(MIN_PER_TET_LOG2);
        Self::with_per_tet_log2(tet_count, global_log2, per_tet, levels, features, max_resolution)
    }

    /// Layout with an explicit per-tetrahedron size, as used when a remeshed
    /// model must keep the slice size of the model it copies from.
    pub fn with_per_tet_log2(
        tet_count: usize,
        global_log2: u32,
        per_tet_log2: u32,
        levels: usize,
        features: usize,
        max_resolution: u32,
    ) -> Result<Self, EncodingError> {
        if tet_count == 0 || levels == 0 || features == 0 {
            return Err(EncodingError::InvalidLayout("tet count, levels and features must be positive".into()));
        }
        if per_tet_log2 > 30 || global_log2 > 40 {
            return Err(EncodingError::InvalidLayout("table too large".into()));
        }
        if levels > (1usize << per_tet_log2) {
            return Err(EncodingError::InvalidLayout(format!(
                "{levels} levels do not fit in 2^{per_tet_log2} entries"
            )));
        }
        if max_resolution < BASE_RESOLUTION {
            return Err(EncodingError::InvalidLayout("max resolution below base".into()));
        }
        let total = (tet_count as u128) << per_tet_log2;
        if total > 1u128 << (global_log2 + 1) {
            return Err(EncodingError::BudgetExceeded {
                tet_count,
                per_tet_log2,
                global_log2,
            });
        }
        Ok(HashLayout {
            levels,
            features,
            global_log2,
            per_tet_log2,
            tet_count,
            resolutions: level_resolutions(levels, max_resolution),
        })
    }

    pub fn slots_per_tet(&self) -> usize {
        1 << self.per_tet_log2
    }

    pub fn slots_per_level(&self) -> usize {
        self.slots_per_tet() / self.levels
    }

    pub fn total_slots(&self) -> usize {
        self.tet_count * self.slots_per_tet()
    }

    /// Length of the flattened feature vector, `levels * features`.
    pub fn output_dim(&self) -> usize {
        self.levels * self.features
    }

    /// True when every corner of the level grid has its own slot.
    pub fn is_dense(&self, level: usize) -> bool {
        let side = self.resolutions[level] as u128 + 1;
        side.pow(4) <= self.slots_per_level() as u128
    }

    /// Slot of a grid corner, inside the slice owned by `tet` and `level`.
    /// `corner` coordinates range over `0..=resolution`.
    #[inline]
    pub fn slot(&self, tet: usize, level: usize, corner: [u32; 4]) -> usize {
        let base = tet * self.slots_per_tet() + level * self.slots_per_level();
        base + self.local_slot(level, corner)
    }

    #[inline]
    pub(crate) fn local_slot(&self, level: usize, corner: [u32; 4]) -> usize {
        let n = self.slots_per_level() as u64;
        if self.is_dense(level) {
            let side = self.resolutions[level] as u64 + 1;
            let c = corner.map(u64::from);
            (c[0] + side * (c[1] + side * (c[2] + side * c[3]))) as usize
        } else {
            let mut h = 0u64;
            for i in 0..4 {
                h ^= (corner[i] as u64).wrapping_mul(PRIMES[i]);
            }
            (h % n) as usize
        }
    }
}
