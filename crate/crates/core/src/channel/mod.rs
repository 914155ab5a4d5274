//! Frequency-domain MIMO fading channel and AWGN.
//!
//! Each transmit/receive antenna pair gets independent Rayleigh taps with an
//! exponential power-delay profile. Taps evolve over OFDM symbols either not
//! at all (block fading) or through a first-order autoregression whose
//! coefficient is the Jakes autocorrelation at one symbol lag.

mod bessel;

use ndarray::{Array3, Array4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use bessel::bessel_j0;

use crate::error::{Error, Result};
use crate::scenario::{GridDims, NoiseModel, ScenarioConfig};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationModel {
    BlockFading,
    JakesAr1,
}

impl std::str::FromStr for CorrelationModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "block_fading" | "block" => Ok(CorrelationModel::BlockFading),
            "jakes_ar1" | "jakes" | "ar1" => Ok(CorrelationModel::JakesAr1),
            other => Err(Error::Parse {
                what: "correlation model",
                detail: format!("unknown model {other:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub num_taps: usize,
    /// Exponential decay per tap: tap `l` has power proportional to `exp(-decay * l)`.
    pub pdp_decay: f64,
    /// Delay between consecutive taps in seconds.
    pub tap_spacing: f64,
    /// UE speed in m/s.
    pub velocity: f64,
    pub carrier_frequency: f64,
    pub subcarrier_spacing: f64,
    pub correlation_model: CorrelationModel,
}

impl Default for ChannelProfile {
    /// Eight taps one 128-point-FFT sample apart, last tap 15 dB below the first.
    fn default() -> Self {
        ChannelProfile {
            num_taps: 8,
            pdp_decay: ChannelProfile::decay_for_span(8, 15.0),
            tap_spacing: 1.0 / (128.0 * 30e3),
            velocity: 3.0,
            carrier_frequency: 3.5e9,
            subcarrier_spacing: 30e3,
            correlation_model: CorrelationModel::JakesAr1,
        }
    }
}

impl ChannelProfile {
    /// Single static tap.
    pub fn flat_block() -> Self {
        ChannelProfile {
            num_taps: 1,
            velocity: 0.0,
            correlation_model: CorrelationModel::BlockFading,
            ..ChannelProfile::default()
        }
    }

    /// Decay rate putting the last of `num_taps` taps `span_db` below the first.
    pub fn decay_for_span(num_taps: usize, span_db: f64) -> f64 {
        if num_taps <= 1 {
            return 0.0;
        }
        span_db / 10.0 * std::f64::consts::LN_10 / (num_taps - 1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.num_taps == 0 {
            return fail("channel needs at least one tap".into());
        }
        if !(self.pdp_decay >= 0.0) || !(self.tap_spacing >= 0.0) {
            return fail("tap decay and spacing must be nonnegative".into());
        }
        if !(self.velocity >= 0.0) || !(self.carrier_frequency > 0.0) || !(self.subcarrier_spacing > 0.0) {
            return fail("velocity, carrier and subcarrier spacing must be positive".into());
        }
        if self.max_doppler() >= self.subcarrier_spacing / 10.0 {
            return fail(format!(
                "Doppler {:.1} Hz too large for {} Hz subcarriers",
                self.max_doppler(),
                self.subcarrier_spacing
            ));
        }
        Ok(())
    }

    /// Tap powers, normalized to unit sum.
    pub fn tap_powers(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.num_taps).map(|l| (-self.pdp_decay * l as f64).exp()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }

    pub fn tap_delays(&self) -> Vec<f64> {
        (0..self.num_taps).map(|l| l as f64 * self.tap_spacing).collect()
    }

    pub fn max_doppler(&self) -> f64 {
        self.velocity * self.carrier_frequency / SPEED_OF_LIGHT
    }

    /// OFDM symbol duration without cyclic prefix.
    pub fn symbol_duration(&self) -> f64 {
        1.0 / self.subcarrier_spacing
    }

    /// Per-symbol correlation coefficient of the taps.
    pub fn ar1_coefficient(&self) -> f64 {
        match self.correlation_model {
            CorrelationModel::BlockFading => 1.0,
            CorrelationModel::JakesAr1 => {
                bessel_j0(2.0 * std::f64::consts::PI * self.max_doppler() * self.symbol_duration())
            }
        }
    }

    /// `E[H_i conj(H_{i+lag})]` implied by the power-delay profile.
    pub fn frequency_correlation(&self, lag: f64) -> Complex64 {
        self.tap_powers()
            .iter()
            .zip(self.tap_delays())
            .map(|(&p, tau)| Complex64::from_polar(p, 2.0 * std::f64::consts::PI * lag * self.subcarrier_spacing * tau))
            .sum()
    }
}

/// Per-user channel tensors, shape `(n_F, n_T, N_R, N_T^(k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub users: Vec<Array4<Complex64>>,
}

impl ChannelRealization {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn rx_antennas(&self) -> usize {
        self.users.first().map_or(0, |h| h.dim().2)
    }
}

fn complex_normal(rng: &mut ChaCha8Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

pub fn generate_channel(profile: &ChannelProfile, cfg: &ScenarioConfig, seed: u64) -> Result<ChannelRealization> {
    profile.validate()?;
    let dims = cfg.dims();
    let (nf, nt) = (dims.num_subcarriers, dims.num_symbols);
    let powers = profile.tap_powers();
    let delays = profile.tap_delays();
    let rho = profile.ar1_coefficient();
    let innovation = (1.0 - rho * rho).max(0.0).sqrt();
    let phases: Vec<Vec<Complex64>> = (0..nf)
        .map(|i| {
            delays
                .iter()
                .map(|tau| {
                    Complex64::from_polar(
                        1.0,
                        -2.0 * std::f64::consts::PI * i as f64 * profile.subcarrier_spacing * tau,
                    )
                })
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut users = Vec::with_capacity(cfg.num_users);
    let mut taps = vec![Complex64::new(0.0, 0.0); profile.num_taps];
    for &layers in &cfg.layers_per_user {
        let mut h = Array4::zeros((nf, nt, cfg.rx_antennas, layers));
        for r in 0..cfg.rx_antennas {
            for t in 0..layers {
                for j in 0..nt {
                    for (tap, &p) in taps.iter_mut().zip(&powers) {
                        *tap = if j == 0 {
                            complex_normal(&mut rng, p)
                        } else if rho == 1.0 {
                            *tap
                        } else {
                            *tap * rho + complex_normal(&mut rng, p) * innovation
                        };
                    }
                    for i in 0..nf {
                        h[[i, j, r, t]] = taps.iter().zip(&phases[i]).map(|(a, b)| a * b).sum();
                    }
                }
            }
        }
        users.push(h);
    }
    Ok(ChannelRealization { users })
}

/// Circularly-symmetric complex Gaussian field with unit variance per entry.
pub fn unit_noise(dims: GridDims, rx_antennas: usize, seed: u64) -> Array3<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array3::from_shape_simple_fn((dims.num_subcarriers, dims.num_symbols, rx_antennas), || {
        complex_normal(&mut rng, 1.0)
    })
}

/// `sum_k H^(k) x^(k)` per resource element, no noise.
pub fn propagate(tx: &[Array3<Complex64>], h: &ChannelRealization) -> Result<Array3<Complex64>> {
    if tx.len() != h.num_users() || tx.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} transmit grids for {} channels",
            tx.len(),
            h.num_users()
        )));
    }
    let (nf, nt, _, _) = h.users[0].dim();
    let nr = h.rx_antennas();
    let mut y = Array3::zeros((nf, nt, nr));
    for (x, hk) in tx.iter().zip(&h.users) {
        let (hf, ht, hr, hl) = hk.dim();
        if x.dim() != (hf, ht, hl) || (hf, ht, hr) != (nf, nt, nr) {
            return Err(Error::ShapeMismatch(format!(
                "grid {:?} vs channel {:?}",
                x.dim(),
                hk.dim()
            )));
        }
        for i in 0..nf {
            for j in 0..nt {
                for r in 0..nr {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for l in 0..hl {
                        acc += hk[[i, j, r, l]] * x[[i, j, l]];
                    }
                    y[[i, j, r]] += acc;
                }
            }
        }
    }
    Ok(y)
}

/// Received grid `y = sum_k H^(k) x^(k) + n` with `n ~ CN(0, sigma^2)` drawn from `seed`.
pub fn apply_channel(
    tx: &[Array3<Complex64>],
    h: &ChannelRealization,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Array3<Complex64>> {
    let mut y = propagate(tx, h)?;
    if noise.noise_variance > 0.0 {
        let (nf, nt, nr) = y.dim();
        let w = unit_noise(GridDims::new(nf, nt), nr, seed);
        let s = noise.noise_variance.sqrt();
        y.zip_mut_with(&w, |a, &b| *a += b * s);
    }
    Ok(y)
}
