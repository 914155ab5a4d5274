//! Binary dataset of simulated slots for offline receiver training.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "SIPD" | version: u16 | header_len: u32 | header JSON (header_len bytes) | records
//! ```
//!
//! Each record is the concatenation of the tensors listed in the header, in
//! the listed order, as row-major `f32`. Complex tensors interleave real and
//! imaginary parts, so a complex tensor of shape `s` takes `2 * prod(s)`
//! floats.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, Array3, Array4, ArrayD, IxDyn};
use num_complex::{Complex32, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Link, Transmission};
use crate::error::{Error, Result};
use crate::scenario::{derive_stream_seed, ScenarioConfig, SeedPurpose};
use crate::waveform::PilotPattern;

pub const DATASET_MAGIC: [u8; 4] = *b"SIPD";
pub const DATASET_VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    /// Interleaved `(re, im)` pairs of `f32`.
    Complex64,
    Float32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub dtype: Dtype,
    pub shape: Vec<usize>,
}

impl TensorSpec {
    fn new(name: &str, dtype: Dtype, shape: &[usize]) -> Self {
        TensorSpec {
            name: name.into(),
            dtype,
            shape: shape.to_vec(),
        }
    }

    pub fn num_floats(&self) -> usize {
        let n: usize = self.shape.iter().product();
        match self.dtype {
            Dtype::Complex64 => 2 * n,
            Dtype::Float32 => n,
        }
    }
}

/// Tensors of one record, in file order, for a scenario.
///
/// `pilots` holds the unit-power pilot symbols of every layer (zero where a
/// layer has no pilot); `bits` holds the mapped bits on data resource
/// elements and zero elsewhere, with `data_mask` marking the data elements.
pub fn record_tensors(cfg: &ScenarioConfig) -> Vec<TensorSpec> {
    let (nf, nt, nr, nl, b) = (
        cfg.num_subcarriers,
        cfg.num_symbols,
        cfg.rx_antennas,
        cfg.total_layers(),
        cfg.bits_per_symbol(),
    );
    vec![
        TensorSpec::new("y", Dtype::Complex64, &[nf, nt, nr]),
        TensorSpec::new("pilots", Dtype::Complex64, &[nf, nt, nl]),
        TensorSpec::new("h", Dtype::Complex64, &[nf, nt, nr, nl]),
        TensorSpec::new("bits", Dtype::Float32, &[nf, nt, nl, b]),
        TensorSpec::new("data_mask", Dtype::Float32, &[nf, nt]),
        TensorSpec::new("noise_variance", Dtype::Float32, &[1]),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub record_count: usize,
    pub scheme: String,
    pub scenario: ScenarioConfig,
    /// Superimposed pilot power ratio, zero for other schemes.
    pub power_ratio: f64,
    pub snr_db_range: (f64, f64),
    /// Drop index of each record; with the scenario's master seed it
    /// regenerates the slot.
    pub drop_indices: Vec<u64>,
    /// Parity-check matrix of each user's code in alist format.
    pub alist: Vec<String>,
    pub tensors: Vec<TensorSpec>,
}

impl DatasetHeader {
    pub fn record_floats(&self) -> usize {
        self.tensors.iter().map(TensorSpec::num_floats).sum()
    }

    pub fn record_bytes(&self) -> usize {
        4 * self.record_floats()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub y: Array3<Complex32>,
    pub pilots: Array3<Complex32>,
    pub h: Array4<Complex32>,
    pub bits: Array4<f32>,
    pub data_mask: Array2<f32>,
    pub noise_variance: f32,
}

fn narrow<D: ndarray::Dimension>(a: &ndarray::Array<Complex64, D>) -> ndarray::Array<Complex32, D> {
    a.mapv(|z| Complex32::new(z.re as f32, z.im as f32))
}

impl DatasetRecord {
    /// Snapshot of `tx` received at noise variance `sigma2`.
    pub fn from_transmission(link: &Link, tx: &Transmission, sigma2: f64) -> Result<Self> {
        let sc = &link.config().scenario;
        let (nf, nt, nl) = (sc.num_subcarriers, sc.num_symbols, sc.total_layers());
        let pilots = match &tx.pattern {
            PilotPattern::Superimposed(p) => narrow(&p.grid),
            PilotPattern::Orthogonal(p) => narrow(&p.pilots),
            PilotPattern::None => Array3::zeros((nf, nt, nl)),
        };
        let mut h = Array4::zeros((nf, nt, sc.rx_antennas, nl));
        for (k, hk) in tx.truth.users.iter().enumerate() {
            let off = sc.layer_offset(k);
            for l in 0..sc.layers_per_user[k] {
                h.slice_mut(ndarray::s![.., .., .., off + l])
                    .assign(&narrow(&hk.slice(ndarray::s![.., .., .., l]).to_owned()));
            }
        }
        let bps = sc.bits_per_symbol();
        let mut bits = Array4::zeros((nf, nt, nl, bps));
        let mut data_mask = Array2::zeros((nf, nt));
        for (k, mapped) in tx.mapped_bits.iter().enumerate() {
            let off = sc.layer_offset(k);
            let mut it = mapped.iter();
            for &(i, j) in link.layout().positions() {
                data_mask[[i, j]] = 1.0;
                for l in 0..sc.layers_per_user[k] {
                    for b in 0..bps {
                        bits[[i, j, off + l, b]] = f32::from(
                            *it.next()
                                .ok_or_else(|| Error::Dataset(format!("user {k} has too few mapped bits")))?,
                        );
                    }
                }
            }
        }
        Ok(DatasetRecord {
            y: narrow(&tx.received(sigma2)),
            pilots,
            h,
            bits,
            data_mask,
            noise_variance: sigma2 as f32,
        })
    }

    fn floats(&self) -> Vec<f32> {
        let mut out = Vec::new();
        let complex = |out: &mut Vec<f32>, it: &mut dyn Iterator<Item = &Complex32>| {
            for z in it {
                out.push(z.re);
                out.push(z.im);
            }
        };
        complex(&mut out, &mut self.y.iter());
        complex(&mut out, &mut self.pilots.iter());
        complex(&mut out, &mut self.h.iter());
        out.extend(self.bits.iter());
        out.extend(self.data_mask.iter());
        out.push(self.noise_variance);
        out
    }

    fn from_floats(tensors: &[TensorSpec], data: &[f32]) -> Result<Self> {
        let mut parts = Vec::with_capacity(tensors.len());
        let mut at = 0;
        for t in tensors {
            let n = t.num_floats();
            parts.push(&data[at..at + n]);
            at += n;
        }
        let complex = |i: usize| -> Result<ArrayD<Complex32>> {
            let v = parts[i].chunks_exact(2).map(|c| Complex32::new(c[0], c[1])).collect();
            ArrayD::from_shape_vec(IxDyn(&tensors[i].shape), v).map_err(|e| Error::Dataset(e.to_string()))
        };
        let real = |i: usize| -> Result<ArrayD<f32>> {
            ArrayD::from_shape_vec(IxDyn(&tensors[i].shape), parts[i].to_vec())
                .map_err(|e| Error::Dataset(e.to_string()))
        };
        let dim = |e: ndarray::ShapeError| Error::Dataset(e.to_string());
        Ok(DatasetRecord {
            y: complex(0)?.into_dimensionality().map_err(dim)?,
            pilots: complex(1)?.into_dimensionality().map_err(dim)?,
            h: complex(2)?.into_dimensionality().map_err(dim)?,
            bits: real(3)?.into_dimensionality().map_err(dim)?,
            data_mask: real(4)?.into_dimensionality().map_err(dim)?,
            noise_variance: real(5)?.into_dimensionality::<ndarray::Ix1>().map_err(dim)?[0],
        })
    }
}

/// Write a header and its records. The header's tensor list must be the one
/// of its scenario and its record count must match.
pub fn write_dataset<W: Write>(header: &DatasetHeader, records: &[DatasetRecord], out: W) -> Result<()> {
    if header.tensors != record_tensors(&header.scenario) {
        return Err(Error::Dataset("tensor list does not match the scenario".into()));
    }
    if header.record_count != records.len() {
        return Err(Error::Dataset(format!(
            "header declares {} records, got {}",
            header.record_count,
            records.len()
        )));
    }
    let json = serde_json::to_vec(header)?;
    let len = u32::try_from(json.len()).map_err(|_| Error::Dataset("header too large".into()))?;
    let mut w = BufWriter::new(out);
    w.write_all(&DATASET_MAGIC)?;
    w.write_all(&DATASET_VERSION.to_le_bytes())?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(&json)?;
    for r in records {
        let floats = r.floats();
        if floats.len() != header.record_floats() {
            return Err(Error::Dataset("record shape does not match header".into()));
        }
        if floats.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset record"));
        }
        for v in floats {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R) -> Result<(DatasetHeader, Vec<DatasetRecord>)> {
    let mut r = BufReader::new(input);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != DATASET_MAGIC {
        return Err(Error::Dataset(format!("bad magic {magic:?}")));
    }
    let mut word = [0u8; 2];
    r.read_exact(&mut word)?;
    let version = u16::from_le_bytes(word);
    if version != DATASET_VERSION {
        return Err(Error::Dataset(format!("unsupported version {version}")));
    }
    let mut dword = [0u8; 4];
    r.read_exact(&mut dword)?;
    let mut json = vec![0u8; u32::from_le_bytes(dword) as usize];
    r.read_exact(&mut json)?;
    let header: DatasetHeader = serde_json::from_slice(&json)?;
    if header.tensors != record_tensors(&header.scenario) {
        return Err(Error::Dataset("tensor list does not match the scenario".into()));
    }
    let mut bytes = vec![0u8; header.record_bytes()];
    let mut records = Vec::with_capacity(header.record_count);
    for i in 0..header.record_count {
        r.read_exact(&mut bytes)
            .map_err(|e| Error::Dataset(format!("record {i}: {e}")))?;
        let floats: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        records.push(DatasetRecord::from_floats(&header.tensors, &floats)?);
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Dataset("trailing bytes after last record".into()));
    }
    Ok((header, records))
}

/// Simulate `num_records` drops, each at an SNR drawn uniformly from
/// `snr_db_range`, and write them to `path`.
pub fn export_dataset(link: &Link, num_records: usize, snr_db_range: (f64, f64), path: &Path) -> Result<DatasetHeader> {
    let (lo, hi) = snr_db_range;
    if !(lo.is_finite() && hi.is_finite() && hi >= lo) {
        return Err(Error::InvalidConfig(format!("bad SNR range [{lo}, {hi}]")));
    }
    let sc = &link.config().scenario;
    let mut snr_rng = ChaCha8Rng::seed_from_u64(derive_stream_seed(sc.master_seed, SeedPurpose::Noise, u64::MAX));
    let records = (0..num_records as u64)
        .map(|d| {
            let tx = link.transmit(d)?;
            let snr = lo + (hi - lo) * snr_rng.random::<f64>();
            DatasetRecord::from_transmission(link, &tx, 10f64.powf(-snr / 10.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let header = DatasetHeader {
        record_count: num_records,
        scheme: sc.dmrs_scheme.name().into(),
        scenario: sc.clone(),
        power_ratio: match sc.dmrs_scheme {
            crate::scenario::DmrsScheme::Superimposed => link.config().power_ratio,
            _ => 0.0,
        },
        snr_db_range,
        drop_indices: (0..num_records as u64).collect(),
        alist: (0..sc.num_users).map(|k| link.code(k).to_alist()).collect(),
        tensors: record_tensors(sc),
    };
    write_dataset(&header, &records, File::create(path)?)?;
    Ok(header)
}
