//! Superimposed DMRS built from orthogonal cover codes.
//!
//! A base cover sequence per layer is repeated over every `g_f x g_t` group of
//! resource elements and multiplied by one random QPSK value per group. The
//! random value is shared by all layers, so the per-group inner product of two
//! layers reduces to the inner product of their cover rows, which is zero.

use ndarray::{s, Array3, ArrayView3, Axis};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scenario::GridDims;

#[derive(Debug, Clone, PartialEq)]
pub struct SiDmrsConfig {
    /// Fraction E of the per-RE transmit power spent on the pilot.
    pub power_ratio: f64,
    /// Subcarriers and OFDM symbols per cover-code group.
    pub occ_group_shape: (usize, usize),
    /// One ±1 sequence of length `g_f * g_t` per layer, frequency-major.
    pub base_occ: Vec<Vec<f64>>,
    pub scrambling_seed: u64,
}

/// Rows of the Sylvester Walsh-Hadamard matrix of order `n` (a power of two).
pub fn walsh_hadamard(n: usize) -> Vec<Vec<f64>> {
    assert!(n.is_power_of_two(), "Walsh-Hadamard order must be a power of two");
    let mut h = vec![vec![1.0]];
    while h.len() < n {
        let m = h.len();
        let mut next = vec![vec![0.0; 2 * m]; 2 * m];
        for r in 0..m {
            for c in 0..m {
                next[r][c] = h[r][c];
                next[r][c + m] = h[r][c];
                next[r + m][c] = h[r][c];
                next[r + m][c + m] = -h[r][c];
            }
        }
        h = next;
    }
    h
}

impl SiDmrsConfig {
    /// Walsh covers sized for `total_layers`: 2x2 groups up to four layers,
    /// 4x2 up to eight, 4x4 up to sixteen.
    pub fn for_layers(power_ratio: f64, total_layers: usize, scrambling_seed: u64) -> Result<Self> {
        let size = total_layers.max(4).next_power_of_two();
        let shape = match size {
            4 => (2, 2),
            8 => (4, 2),
            16 => (4, 4),
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "{total_layers} layers exceed the 16 supported cover codes"
                )))
            }
        };
        SiDmrsConfig::with_shape(power_ratio, shape, total_layers, scrambling_seed)
    }

    pub fn with_shape(
        power_ratio: f64,
        occ_group_shape: (usize, usize),
        total_layers: usize,
        scrambling_seed: u64,
    ) -> Result<Self> {
        let len = occ_group_shape.0 * occ_group_shape.1;
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "cover group {occ_group_shape:?} must hold a power-of-two number of REs"
            )));
        }
        let mut base_occ = walsh_hadamard(len);
        if total_layers > len {
            return Err(Error::NotEnoughCovers {
                needed: total_layers,
                available: len,
            });
        }
        base_occ.truncate(total_layers);
        let cfg = SiDmrsConfig {
            power_ratio,
            occ_group_shape,
            base_occ,
            scrambling_seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.power_ratio) {
            return Err(Error::InvalidConfig(format!(
                "power ratio {} outside [0, 1]",
                self.power_ratio
            )));
        }
        let (gf, gt) = self.occ_group_shape;
        if gf == 0 || gt == 0 {
            return Err(Error::InvalidConfig("empty cover group".into()));
        }
        for (l, row) in self.base_occ.iter().enumerate() {
            if row.len() != gf * gt {
                return Err(Error::InvalidConfig(format!(
                    "cover row {l} has length {}, group holds {}",
                    row.len(),
                    gf * gt
                )));
            }
            if row.iter().any(|v| (v.abs() - 1.0).abs() > 1e-12) {
                return Err(Error::InvalidConfig(format!("cover row {l} is not unit-modulus")));
            }
        }
        Ok(())
    }
}

fn qpsk_scrambler(rng: &mut ChaCha8Rng) -> Complex64 {
    let quarter = rng.random_range(0..4u32) as f64;
    Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4 + std::f64::consts::FRAC_PI_2 * quarter)
}

/// Pilot field `p` of shape `(n_F, n_T, total_layers)`.
///
/// Groups are enumerated frequency-group-major; the scrambling value of each
/// group is drawn in that order. A trailing partial group uses the leading
/// entries of the cover rows, so orthogonality only holds over full groups.
pub fn build_si_dmrs(cfg: &SiDmrsConfig, dims: GridDims, total_layers: usize) -> Result<Array3<Complex64>> {
    cfg.validate()?;
    if cfg.base_occ.len() < total_layers {
        return Err(Error::NotEnoughCovers {
            needed: total_layers,
            available: cfg.base_occ.len(),
        });
    }
    let (gf, gt) = cfg.occ_group_shape;
    let (nf, nt) = (dims.num_subcarriers, dims.num_symbols);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.scrambling_seed);
    let mut grid = Array3::zeros((nf, nt, total_layers));
    for f0 in (0..nf).step_by(gf) {
        let rows = gf.min(nf - f0);
        for t0 in (0..nt).step_by(gt) {
            let cols = gt.min(nt - t0);
            let scramble = qpsk_scrambler(&mut rng);
            for a in 0..rows {
                for b in 0..cols {
                    let pos = a * cols + b;
                    for (l, row) in cfg.base_occ.iter().take(total_layers).enumerate() {
                        grid[[f0 + a, t0 + b, l]] = scramble * row[pos];
                    }
                }
            }
        }
    }
    Ok(grid)
}

/// Superimposed pilots of a whole scenario, stacked over users' layers.
#[derive(Debug, Clone, PartialEq)]
pub struct SiPilots {
    pub grid: Array3<Complex64>,
    pub layers_per_user: Vec<usize>,
    pub config: SiDmrsConfig,
}

impl SiPilots {
    pub fn build(cfg: SiDmrsConfig, dims: GridDims, layers_per_user: &[usize]) -> Result<Self> {
        let total: usize = layers_per_user.iter().sum();
        let grid = build_si_dmrs(&cfg, dims, total)?;
        Ok(SiPilots {
            grid,
            layers_per_user: layers_per_user.to_vec(),
            config: cfg,
        })
    }

    pub fn power_ratio(&self) -> f64 {
        self.config.power_ratio
    }

    pub fn num_users(&self) -> usize {
        self.layers_per_user.len()
    }

    pub fn total_layers(&self) -> usize {
        self.grid.dim().2
    }

    pub fn dims(&self) -> GridDims {
        let (f, t, _) = self.grid.dim();
        GridDims::new(f, t)
    }

    pub fn user(&self, k: usize) -> ArrayView3<'_, Complex64> {
        let off: usize = self.layers_per_user[..k].iter().sum();
        self.grid.slice(s![.., .., off..off + self.layers_per_user[k]])
    }

    /// Sum over one cover group of `p_a * conj(p_b)` for every group.
    pub fn group_inner_products(&self, a: usize, b: usize) -> Vec<Complex64> {
        let (gf, gt) = self.config.occ_group_shape;
        let (nf, nt, _) = self.grid.dim();
        let la = self.grid.index_axis(Axis(2), a);
        let lb = self.grid.index_axis(Axis(2), b);
        let mut out = Vec::new();
        for f0 in (0..nf).step_by(gf) {
            for t0 in (0..nt).step_by(gt) {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in f0..(f0 + gf).min(nf) {
                    for j in t0..(t0 + gt).min(nt) {
                        acc += la[[i, j]] * lb[[i, j]].conj();
                    }
                }
                out.push(acc);
            }
        }
        out
    }
}
