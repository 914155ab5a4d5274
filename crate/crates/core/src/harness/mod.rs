//! Monte-Carlo link simulation: per-drop transmission, reception at every
//! SNR point, decoding, and metric accumulation.
//!
//! Every drop draws its bits, channel, noise and pilot scrambling from seeds
//! derived from the master seed and the drop index. The same drop is reused
//! at every SNR point, only the noise scaling changes.

mod config;
mod dataset;
mod results;

use std::sync::Arc;

use ndarray::Array3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{snr_points, RunConfig};
pub use dataset::{
    export_dataset, read_dataset, record_tensors, write_dataset, DatasetHeader, DatasetRecord, Dtype, TensorSpec,
    DATASET_MAGIC, DATASET_VERSION,
};
pub use results::{read_csv, read_json, write_csv, write_json, CSV_COLUMNS};

use crate::channel::{generate_channel, propagate, unit_noise, ChannelProfile, ChannelRealization};
use crate::chest::WindowSchedule;
use crate::detect::{
    genie_lmmse_baseline, iterative_receive, one_shot_orthogonal, one_shot_si, DecoderFeedback, LlrGrid, NoFeedback,
};
use crate::error::{Error, Result};
use crate::fec::CodeSpec;
use crate::scenario::{derive_stream_seeds, DmrsScheme, ScenarioConfig, SeedPurpose};
use crate::waveform::{
    build_orthogonal_grid, superimpose, Constellation, DataLayout, OrthDmrsConfig, OrthPilots, PilotPattern,
    SiDmrsConfig, SiPilots,
};

/// Seed of the LDPC construction; the code is part of the system, not of a drop.
pub const CODE_SEED: u64 = 0x1d9c_5eed;

/// Git revision the binary was built from, or `unknown`.
pub fn build_hash() -> &'static str {
    env!("SIDMRS_BUILD_HASH")
}

/// Slot throughput in bits: `(1 - bler) N_d log2(M)` summed over layers.
pub fn throughput(bler: f64, n_d: usize, constellation_order: usize, total_layers: usize) -> f64 {
    (1.0 - bler) * n_d as f64 * (constellation_order as f64).log2() * total_layers as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverKind {
    OneShot,
    Iterative,
    GenieLmmse,
}

impl ReceiverKind {
    pub fn name(self) -> &'static str {
        match self {
            ReceiverKind::OneShot => "one_shot",
            ReceiverKind::Iterative => "iterative",
            ReceiverKind::GenieLmmse => "genie_lmmse",
        }
    }

    pub fn supports(self, scheme: DmrsScheme) -> bool {
        match self {
            ReceiverKind::OneShot => scheme != DmrsScheme::GenieCsi,
            ReceiverKind::Iterative => scheme == DmrsScheme::Superimposed,
            ReceiverKind::GenieLmmse => true,
        }
    }
}

impl std::fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ReceiverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "one_shot" | "oneshot" => Ok(ReceiverKind::OneShot),
            "iterative" => Ok(ReceiverKind::Iterative),
            "genie_lmmse" | "genie" => Ok(ReceiverKind::GenieLmmse),
            other => Err(Error::Parse {
                what: "receiver",
                detail: format!("unknown receiver {other:?}"),
            }),
        }
    }
}

/// Power ratio and iterative-receiver windows tuned for one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiPreset {
    pub power_ratio: f64,
    pub windows: &'static [(usize, usize)],
}

const WINDOWS_QPSK: &[(usize, usize)] = &[(12, 14), (6, 14)];
const WINDOWS_16QAM: &[(usize, usize)] = &[(8, 14), (6, 14), (6, 14), (4, 14)];
const WINDOWS_64QAM: &[(usize, usize)] = &[(8, 14), (6, 14), (6, 14), (4, 14), (2, 14)];

/// `(users, layers per user, M, power ratio)`.
const PRESETS: &[(usize, usize, usize, f64)] = &[
    (1, 1, 4, 0.14),
    (1, 1, 16, 0.22),
    (1, 1, 64, 0.3),
    (1, 2, 4, 0.22),
    (1, 2, 16, 0.35),
    (1, 2, 64, 0.43),
    (2, 1, 16, 0.35),
    (2, 1, 64, 0.43),
    (4, 1, 4, 0.24),
    (4, 1, 64, 0.55),
];

fn windows_for(order: usize) -> &'static [(usize, usize)] {
    match order {
        4 => WINDOWS_QPSK,
        16 => WINDOWS_16QAM,
        _ => WINDOWS_64QAM,
    }
}

/// Tuned superimposed-pilot settings for a scenario.
///
/// Exact table rows are returned as listed. Other scenarios get the
/// single-user single-layer power ratio of their constellation.
pub fn si_preset(cfg: &ScenarioConfig) -> SiPreset {
    let layers = cfg.layers_per_user.first().copied().unwrap_or(1);
    let uniform = cfg.layers_per_user.iter().all(|&l| l == layers);
    let order = cfg.constellation_order;
    let exact = PRESETS
        .iter()
        .find(|&&(k, l, m, _)| uniform && k == cfg.num_users && l == layers && m == order);
    let (.., power_ratio) = exact
        .or_else(|| PRESETS.iter().find(|&&(k, l, m, _)| k == 1 && l == 1 && m == order))
        .copied()
        .unwrap_or((1, 1, order, 0.14));
    SiPreset {
        power_ratio,
        windows: windows_for(order),
    }
}

/// Everything needed to simulate one link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub scenario: ScenarioConfig,
    pub channel: ChannelProfile,
    /// Per-drop UE speed drawn uniformly from this range; `None` keeps the
    /// profile's velocity.
    pub velocity_range: Option<(f64, f64)>,
    pub power_ratio: f64,
    pub schedule: WindowSchedule,
    /// Feed decoded codewords back into the iterative receiver.
    pub decoder_in_loop: bool,
}

impl LinkConfig {
    /// Default channel, speeds in [1, 10] m/s and the tuned pilot settings.
    pub fn new(scenario: ScenarioConfig) -> Result<Self> {
        let preset = si_preset(&scenario);
        Ok(LinkConfig {
            schedule: WindowSchedule::from_pairs(preset.windows)?,
            power_ratio: preset.power_ratio,
            scenario,
            channel: ChannelProfile::default(),
            velocity_range: Some((1.0, 10.0)),
            decoder_in_loop: true,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.channel.validate()?;
        if let Some((lo, hi)) = self.velocity_range {
            if !(lo >= 0.0 && hi >= lo) {
                return Err(Error::InvalidConfig(format!("bad velocity range [{lo}, {hi}]")));
            }
            ChannelProfile {
                velocity: hi,
                ..self.channel.clone()
            }
            .validate()?;
        }
        if self.scenario.dmrs_scheme == DmrsScheme::Superimposed && !(self.power_ratio > 0.0 && self.power_ratio < 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "superimposed power ratio {} outside (0, 1)",
                self.power_ratio
            )));
        }
        self.schedule.validate_for(self.scenario.dims())
    }
}

/// One drop's transmit side, reused at every SNR point.
#[derive(Debug, Clone)]
pub struct Transmission {
    pub drop_index: u64,
    pub pattern: PilotPattern,
    /// Per-user transmit grids.
    pub tx: Vec<Array3<Complex64>>,
    pub truth: ChannelRealization,
    /// Noiseless received grid.
    pub clean_rx: Array3<Complex64>,
    /// Unit-variance noise realization.
    pub noise: Array3<Complex64>,
    pub info_bits: Vec<Vec<u8>>,
    /// Mapped bits per user: codeword followed by zero padding.
    pub mapped_bits: Vec<Vec<u8>>,
    pub velocity: f64,
}

impl Transmission {
    pub fn received(&self, noise_variance: f64) -> Array3<Complex64> {
        let s = noise_variance.sqrt();
        let mut y = self.clean_rx.clone();
        if s > 0.0 {
            y.zip_mut_with(&self.noise, |a, &w| *a += w * s);
        }
        y
    }
}

/// Error counts of one drop at one SNR point. All fields add across drops.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounts {
    pub uncoded_errors: u64,
    pub uncoded_bits: u64,
    pub info_errors: u64,
    pub info_bits: u64,
    pub block_errors: u64,
    pub blocks: u64,
    /// Info-bit errors after each iteration of the iterative receiver.
    pub iteration_info_errors: Vec<u64>,
}

impl DropCounts {
    pub fn merge(&mut self, other: &DropCounts) {
        self.uncoded_errors += other.uncoded_errors;
        self.uncoded_bits += other.uncoded_bits;
        self.info_errors += other.info_errors;
        self.info_bits += other.info_bits;
        self.block_errors += other.block_errors;
        self.blocks += other.blocks;
        if self.iteration_info_errors.len() < other.iteration_info_errors.len() {
            self.iteration_info_errors.resize(other.iteration_info_errors.len(), 0);
        }
        for (a, b) in self.iteration_info_errors.iter_mut().zip(&other.iteration_info_errors) {
            *a += b;
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub drops: u64,
    pub uncoded_ber: f64,
    pub coded_ber: f64,
    pub bler: f64,
    /// Bits per slot.
    pub throughput: f64,
    pub n_d: usize,
    /// Coded BER after each iteration of the iterative receiver.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub iteration_coded_ber: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub scenario: ScenarioConfig,
    pub receiver: ReceiverKind,
    pub power_ratio: Option<f64>,
    pub schedule: Option<String>,
    pub build: String,
    pub points: Vec<SweepPoint>,
}

/// A configured link with its code, constellation and data layout fixed.
#[derive(Debug, Clone)]
pub struct Link {
    cfg: LinkConfig,
    constellation: Constellation,
    layout: DataLayout,
    codes: Vec<Arc<CodeSpec>>,
}

impl Link {
    pub fn new(cfg: LinkConfig) -> Result<Self> {
        cfg.validate()?;
        let sc = &cfg.scenario;
        let constellation = Constellation::new(sc.constellation_order)?;
        let layout = match sc.dmrs_scheme {
            DmrsScheme::Orthogonal => OrthPilots::build(
                OrthDmrsConfig::default_for(sc.total_layers(), 0)?,
                sc.dims(),
                &sc.layers_per_user,
            )?
            .layout(),
            DmrsScheme::Superimposed | DmrsScheme::GenieCsi => DataLayout::full(sc.dims()),
        };
        let mut built: Vec<(usize, Arc<CodeSpec>)> = Vec::new();
        let mut codes = Vec::with_capacity(sc.num_users);
        for &layers in &sc.layers_per_user {
            let capacity = layout.num_data_res() * layers * constellation.bits_per_symbol();
            let code = match built.iter().find(|(c, _)| *c == capacity) {
                Some((_, code)) => code.clone(),
                None => {
                    let code = Arc::new(CodeSpec::for_capacity(capacity, sc.code_rate, CODE_SEED)?);
                    built.push((capacity, code.clone()));
                    code
                }
            };
            codes.push(code);
        }
        Ok(Link {
            cfg,
            constellation,
            layout,
            codes,
        })
    }

    pub fn config(&self) -> &LinkConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &DataLayout {
        &self.layout
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn code(&self, user: usize) -> &CodeSpec {
        &self.codes[user]
    }

    /// Number of data resource elements per slot, N_d.
    pub fn n_d(&self) -> usize {
        self.layout.num_data_res()
    }

    fn capacity(&self, user: usize) -> usize {
        self.n_d() * self.cfg.scenario.layers_per_user[user] * self.constellation.bits_per_symbol()
    }

    fn pilots(&self, drop: u64) -> Result<PilotPattern> {
        let sc = &self.cfg.scenario;
        let seed = derive_stream_seeds(sc, SeedPurpose::Scrambling, drop);
        Ok(match sc.dmrs_scheme {
            DmrsScheme::Superimposed => PilotPattern::Superimposed(SiPilots::build(
                SiDmrsConfig::for_layers(self.cfg.power_ratio, sc.total_layers(), seed)?,
                sc.dims(),
                &sc.layers_per_user,
            )?),
            DmrsScheme::Orthogonal => PilotPattern::Orthogonal(OrthPilots::build(
                OrthDmrsConfig::default_for(sc.total_layers(), seed)?,
                sc.dims(),
                &sc.layers_per_user,
            )?),
            DmrsScheme::GenieCsi => PilotPattern::None,
        })
    }

    /// Map mapped bits of `user` onto its transmit grid.
    fn data_grid(&self, user: usize, bits: &[u8]) -> Result<Array3<Complex64>> {
        let symbols = self.constellation.modulate(bits)?;
        self.layout.place(&symbols, self.cfg.scenario.layers_per_user[user])
    }

    pub fn transmit(&self, drop: u64) -> Result<Transmission> {
        let sc = &self.cfg.scenario;
        let pattern = self.pilots(drop)?;

        let mut rng = ChaCha8Rng::seed_from_u64(derive_stream_seeds(sc, SeedPurpose::Bits, drop));
        let mut info_bits = Vec::with_capacity(sc.num_users);
        let mut mapped_bits = Vec::with_capacity(sc.num_users);
        let mut tx = Vec::with_capacity(sc.num_users);
        for k in 0..sc.num_users {
            let code = &self.codes[k];
            let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
            let mut bits = code.encode(&info)?;
            bits.resize(self.capacity(k), 0);
            let data = self.data_grid(k, &bits)?;
            let grid = match &pattern {
                PilotPattern::Superimposed(p) => superimpose(&data, &p.user(k).to_owned(), p.power_ratio())?.values,
                PilotPattern::Orthogonal(p) => {
                    let symbols = self.constellation.modulate(&bits)?;
                    build_orthogonal_grid(&symbols, p, k)?.values
                }
                PilotPattern::None => data,
            };
            info_bits.push(info);
            mapped_bits.push(bits);
            tx.push(grid);
        }

        let channel_seed = derive_stream_seeds(sc, SeedPurpose::Channel, drop);
        let mut profile = self.cfg.channel.clone();
        if let Some((lo, hi)) = self.cfg.velocity_range {
            let mut vrng = ChaCha8Rng::seed_from_u64(channel_seed);
            vrng.set_stream(1);
            profile.velocity = lo + (hi - lo) * vrng.random::<f64>();
        }
        let truth = generate_channel(&profile, sc, channel_seed)?;
        let clean_rx = propagate(&tx, &truth)?;
        let noise = unit_noise(
            sc.dims(),
            sc.rx_antennas,
            derive_stream_seeds(sc, SeedPurpose::Noise, drop),
        );
        Ok(Transmission {
            drop_index: drop,
            pattern,
            tx,
            truth,
            clean_rx,
            noise,
            info_bits,
            mapped_bits,
            velocity: profile.velocity,
        })
    }

    fn check_receiver(&self, receiver: ReceiverKind) -> Result<()> {
        let scheme = self.cfg.scenario.dmrs_scheme;
        if receiver.supports(scheme) {
            Ok(())
        } else {
            Err(Error::ReceiverScheme {
                receiver: receiver.name(),
                scheme: scheme.name(),
            })
        }
    }

    /// Count errors of `llrs` against the transmitted words.
    fn score(&self, tx: &Transmission, llrs: &[LlrGrid], counts: &mut DropCounts) -> Vec<u64> {
        let mut info_errors = Vec::with_capacity(llrs.len());
        for (k, grid) in llrs.iter().enumerate() {
            let code = &self.codes[k];
            let n = code.n();
            let soft = grid.gather(&self.layout);
            let sent = &tx.mapped_bits[k][..n];
            counts.uncoded_errors += soft[..n]
                .iter()
                .zip(sent)
                .filter(|(l, &b)| ((**l < 0.0) as u8) != b)
                .count() as u64;
            counts.uncoded_bits += n as u64;
            let out = code.decode(&soft[..n]);
            let errors = out
                .info_bits
                .iter()
                .zip(&tx.info_bits[k])
                .filter(|(a, b)| a != b)
                .count() as u64;
            counts.info_errors += errors;
            counts.info_bits += code.k() as u64;
            counts.blocks += 1;
            if errors > 0 || !out.parity_ok {
                counts.block_errors += 1;
            }
            info_errors.push(errors);
        }
        info_errors
    }

    /// Receive one drop at one noise level and count errors.
    pub fn receive(&self, tx: &Transmission, snr_db: f64, receiver: ReceiverKind) -> Result<DropCounts> {
        self.check_receiver(receiver)?;
        let sigma2 = 10f64.powf(-snr_db / 10.0);
        let y = tx.received(sigma2);
        let c = &self.constellation;
        let mut counts = DropCounts::default();
        match (receiver, &tx.pattern) {
            (ReceiverKind::GenieLmmse, pattern) => {
                let out = genie_lmmse_baseline(&y, &tx.truth, sigma2, pattern, c)?;
                self.score(tx, &out.llrs, &mut counts);
            }
            (ReceiverKind::OneShot, PilotPattern::Superimposed(p)) => {
                let out = one_shot_si(&y, p, self.cfg.schedule.first(), sigma2, c)?;
                self.score(tx, &out.llrs, &mut counts);
            }
            (ReceiverKind::OneShot, PilotPattern::Orthogonal(p)) => {
                let out = one_shot_orthogonal(&y, p, sigma2, c)?;
                self.score(tx, &out.llrs, &mut counts);
            }
            (ReceiverKind::Iterative, PilotPattern::Superimposed(p)) => {
                let mut in_loop = LoopDecoder { link: self };
                let feedback: &mut dyn DecoderFeedback = if self.cfg.decoder_in_loop {
                    &mut in_loop
                } else {
                    &mut NoFeedback
                };
                let out = iterative_receive(&y, p, &self.cfg.schedule, sigma2, c, feedback)?;
                let mut scratch = DropCounts::default();
                for record in &out.iterations {
                    let errors = self.score(tx, &record.llrs, &mut scratch);
                    counts.iteration_info_errors.push(errors.iter().sum());
                }
                self.score(tx, &out.llrs, &mut counts);
            }
            _ => {
                return Err(Error::ReceiverScheme {
                    receiver: receiver.name(),
                    scheme: tx.pattern.scheme_name(),
                })
            }
        }
        Ok(counts)
    }
}

/// Decoder in the iterative loop: successful decodes are re-encoded and
/// re-modulated, failures keep the detector output.
struct LoopDecoder<'a> {
    link: &'a Link,
}

impl DecoderFeedback for LoopDecoder<'_> {
    fn feedback(&mut self, user: usize, llrs: &LlrGrid) -> Option<Array3<Complex64>> {
        let link = self.link;
        let code = &link.codes[user];
        let soft = llrs.gather(&link.layout);
        let out = code.decode(&soft[..code.n()]);
        if !out.parity_ok {
            return None;
        }
        let mut bits = code.encode(&out.info_bits).ok()?;
        bits.resize(link.capacity(user), 0);
        link.data_grid(user, &bits).ok()
    }
}

/// Simulate `drops` drops at every SNR point.
///
/// Drops run in parallel; counts are integers, so the result does not depend
/// on scheduling.
pub fn run_sweep(link: &Link, receiver: ReceiverKind, snr_db: &[f64], drops: usize) -> Result<SweepResult> {
    if drops == 0 {
        return Err(Error::InvalidConfig("a sweep needs at least one drop".into()));
    }
    link.check_receiver(receiver)?;
    let per_drop: Vec<Vec<DropCounts>> = (0..drops as u64)
        .into_par_iter()
        .map(|d| {
            let tx = link.transmit(d)?;
            snr_db.iter().map(|&s| link.receive(&tx, s, receiver)).collect()
        })
        .collect::<Result<_>>()?;

    let sc = &link.cfg.scenario;
    let points = snr_db
        .iter()
        .enumerate()
        .map(|(idx, &snr)| {
            let mut total = DropCounts::default();
            for d in &per_drop {
                total.merge(&d[idx]);
            }
            let bler = ratio(total.block_errors, total.blocks);
            SweepPoint {
                snr_db: snr,
                drops: drops as u64,
                uncoded_ber: ratio(total.uncoded_errors, total.uncoded_bits),
                coded_ber: ratio(total.info_errors, total.info_bits),
                bler,
                throughput: throughput(bler, link.n_d(), sc.constellation_order, sc.total_layers()),
                n_d: link.n_d(),
                iteration_coded_ber: total
                    .iteration_info_errors
                    .iter()
                    .map(|&e| ratio(e, total.info_bits))
                    .collect(),
            }
        })
        .collect();
    let si = sc.dmrs_scheme == DmrsScheme::Superimposed;
    Ok(SweepResult {
        scenario: sc.clone(),
        receiver,
        power_ratio: si.then_some(link.cfg.power_ratio),
        schedule: (si && receiver == ReceiverKind::Iterative).then(|| link.cfg.schedule.to_string()),
        build: build_hash().to_string(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link(scheme: DmrsScheme) -> Link {
        let sc = ScenarioConfig {
            dmrs_scheme: scheme,
            ..ScenarioConfig::default()
        };
        Link::new(LinkConfig::new(sc).unwrap()).unwrap()
    }

    #[test]
    fn throughput_arithmetic() {
        assert_eq!(throughput(0.5, 1008, 4, 1), 1008.0);
        assert_eq!(throughput(0.0, 936, 16, 2), 936.0 * 4.0 * 2.0);
    }

    #[test]
    fn data_re_counts_per_scheme() {
        assert_eq!(link(DmrsScheme::Superimposed).n_d(), 1008);
        assert_eq!(link(DmrsScheme::Orthogonal).n_d(), 936);
        assert_eq!(link(DmrsScheme::GenieCsi).n_d(), 1008);
    }

    #[test]
    fn presets_follow_table() {
        let p = si_preset(&ScenarioConfig::default());
        assert_eq!(p.power_ratio, 0.14);
        assert_eq!(p.windows, &[(12, 14), (6, 14)]);
        let sc = ScenarioConfig {
            constellation_order: 64,
            ..ScenarioConfig::uniform(4, 1, 16)
        };
        assert_eq!(si_preset(&sc).power_ratio, 0.55);
        assert_eq!(si_preset(&sc).windows.len(), 5);
        let sc = ScenarioConfig {
            constellation_order: 16,
            ..ScenarioConfig::uniform(3, 1, 4)
        };
        assert_eq!(si_preset(&sc).power_ratio, 0.22);
    }

    #[test]
    fn receiver_names_round_trip() {
        for r in [ReceiverKind::OneShot, ReceiverKind::Iterative, ReceiverKind::GenieLmmse] {
            assert_eq!(r.name().parse::<ReceiverKind>().unwrap(), r);
        }
        assert!("ml".parse::<ReceiverKind>().is_err());
    }

    #[test]
    fn invalid_receiver_scheme_pairs_rejected() {
        let l = link(DmrsScheme::Orthogonal);
        assert!(matches!(
            run_sweep(&l, ReceiverKind::Iterative, &[10.0], 1),
            Err(Error::ReceiverScheme { .. })
        ));
        let l = link(DmrsScheme::GenieCsi);
        assert!(run_sweep(&l, ReceiverKind::OneShot, &[10.0], 1).is_err());
        assert!(run_sweep(&l, ReceiverKind::GenieLmmse, &[10.0], 0).is_err());
    }

    #[test]
    fn transmission_is_deterministic_and_seed_dependent() {
        let l = link(DmrsScheme::Superimposed);
        let a = l.transmit(3).unwrap();
        let b = l.transmit(3).unwrap();
        assert_eq!(a.tx, b.tx);
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.noise, b.noise);
        assert!((1.0..=10.0).contains(&a.velocity));
        let mut cfg = l.config().clone();
        cfg.scenario.master_seed += 1;
        let other = Link::new(cfg).unwrap();
        let differing = (0..100).filter(|&d| other.transmit(d).unwrap().info_bits != l.transmit(d).unwrap().info_bits);
        assert_eq!(differing.count(), 100);
    }

    #[test]
    fn noiseless_genie_is_error_free() {
        for scheme in [DmrsScheme::Superimposed, DmrsScheme::Orthogonal, DmrsScheme::GenieCsi] {
            let l = link(scheme);
            let r = run_sweep(&l, ReceiverKind::GenieLmmse, &[90.0], 4).unwrap();
            let p = &r.points[0];
            assert_eq!(p.bler, 0.0, "{scheme}");
            assert_eq!(p.coded_ber, 0.0);
            assert_eq!(p.throughput, l.n_d() as f64 * 2.0);
        }
    }

    #[test]
    fn iterative_reports_each_iteration() {
        let l = link(DmrsScheme::Superimposed);
        let r = run_sweep(&l, ReceiverKind::Iterative, &[8.0], 2).unwrap();
        assert_eq!(r.points[0].iteration_coded_ber.len(), 2);
        assert_eq!(r.points[0].iteration_coded_ber[1], r.points[0].coded_ber);
        assert_eq!(r.schedule.as_deref(), Some("12x14,6x14"));
    }
}
