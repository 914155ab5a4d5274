//! Run configuration: a scenario plus channel, receiver and sweep settings,
//! read from a flat `key = value` file.

use super::{LinkConfig, ReceiverKind};
use crate::channel::{ChannelProfile, CorrelationModel};
use crate::chest::WindowSchedule;
use crate::error::{Error, Result};
use crate::scenario::{KeyValues, ScenarioConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub link: LinkConfig,
    pub receiver: ReceiverKind,
    pub snr_start: f64,
    pub snr_stop: f64,
    pub snr_step: f64,
    pub drops: usize,
}

impl RunConfig {
    pub fn new(scenario: ScenarioConfig) -> Result<Self> {
        Ok(RunConfig {
            link: LinkConfig::new(scenario)?,
            receiver: ReceiverKind::Iterative,
            snr_start: 0.0,
            snr_stop: 20.0,
            snr_step: 2.0,
            drops: 100,
        })
    }

    /// Parse a configuration document. Absent keys keep their defaults;
    /// unknown keys are an error.
    ///
    /// Beyond the scenario keys: `receiver`, `snr_start`, `snr_stop`,
    /// `snr_step`, `drops`, `power_ratio`, `windows` (e.g. `12x14,6x14`),
    /// `decoder_in_loop`, `velocity` (fixed speed), `velocity_min`,
    /// `velocity_max`, `num_taps`, `pdp_span_db`, `carrier_frequency`,
    /// `subcarrier_spacing` and `correlation_model`.
    pub fn from_config_text(text: &str) -> Result<Self> {
        let mut kv = KeyValues::parse(text)?;
        let mut run = RunConfig::new(ScenarioConfig::from_key_values(&mut kv)?)?;
        if let Some(v) = kv.take_parsed("receiver")? {
            run.receiver = v;
        }
        if let Some(v) = kv.take_parsed("snr_start")? {
            run.snr_start = v;
        }
        if let Some(v) = kv.take_parsed("snr_stop")? {
            run.snr_stop = v;
        }
        if let Some(v) = kv.take_parsed("snr_step")? {
            run.snr_step = v;
        }
        if let Some(v) = kv.take_parsed("drops")? {
            run.drops = v;
        }
        let link = &mut run.link;
        if let Some(v) = kv.take_parsed("power_ratio")? {
            link.power_ratio = v;
        }
        if let Some(v) = kv.take_parsed::<WindowSchedule>("windows")? {
            link.schedule = v;
        }
        if let Some(v) = kv.take_parsed("decoder_in_loop")? {
            link.decoder_in_loop = v;
        }
        if let Some(v) = kv.take_parsed("velocity")? {
            link.channel.velocity = v;
            link.velocity_range = None;
        }
        let lo = kv.take_parsed::<f64>("velocity_min")?;
        let hi = kv.take_parsed::<f64>("velocity_max")?;
        if lo.is_some() || hi.is_some() {
            let (dlo, dhi) = link.velocity_range.unwrap_or((1.0, 10.0));
            link.velocity_range = Some((lo.unwrap_or(dlo), hi.unwrap_or(dhi)));
        }
        if let Some(v) = kv.take_parsed("num_taps")? {
            link.channel.num_taps = v;
        }
        if let Some(v) = kv.take_parsed::<f64>("pdp_span_db")? {
            link.channel.pdp_decay = ChannelProfile::decay_for_span(link.channel.num_taps, v);
        } else {
            link.channel.pdp_decay = ChannelProfile::decay_for_span(link.channel.num_taps, 15.0);
        }
        if let Some(v) = kv.take_parsed("carrier_frequency")? {
            link.channel.carrier_frequency = v;
        }
        if let Some(v) = kv.take_parsed("subcarrier_spacing")? {
            link.channel.subcarrier_spacing = v;
        }
        if let Some(v) = kv.take_parsed::<CorrelationModel>("correlation_model")? {
            link.channel.correlation_model = v;
        }
        kv.finish()?;
        run.validate()?;
        Ok(run)
    }

    pub fn snr_points(&self) -> Result<Vec<f64>> {
        snr_points(self.snr_start, self.snr_stop, self.snr_step)
    }

    pub fn validate(&self) -> Result<()> {
        self.link.validate()?;
        if self.drops == 0 {
            return Err(Error::InvalidConfig("drops must be at least 1".into()));
        }
        self.snr_points().map(|_| ())
    }
}

/// `start, start + step, ...` up to and including `stop`.
pub fn snr_points(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step > 0.0 && stop >= start) {
        return Err(Error::InvalidConfig(format!(
            "bad SNR sweep start={start} stop={stop} step={step}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}
