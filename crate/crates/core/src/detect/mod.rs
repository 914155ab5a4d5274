//! Symbol detection: pilot removal, LMMSE equalization, max-log demapping,
//! and the one-shot, genie and iterative receivers built from them.

mod iterative;
mod linalg;

use ndarray::{concatenate, s, Array3, Array4, Axis};
use num_complex::Complex64;

pub use iterative::{iterative_receive, DecoderFeedback, IterationRecord, IterativeOutput, NoFeedback};

use crate::channel::ChannelRealization;
use crate::chest::{estimate_orthogonal, ls_estimate_sip, pilot_contribution, smooth, ChannelEstimate, Window};
use crate::error::{Error, Result};
use crate::waveform::{Constellation, DataLayout, OrthPilots, PilotPattern, SiPilots};

/// Regularization added to the Gram matrix so the solve is always defined.
pub const SIGMA2_FLOOR: f64 = 1e-9;
/// Magnitude limit of every output LLR.
pub const LLR_CLAMP: f64 = 40.0;
const VARIANCE_FLOOR: f64 = 1e-15;

/// LMMSE output for the streams of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizedSymbols {
    /// Soft estimates `d_hat`, shape `(n_F, n_T, streams)`.
    pub symbols: Array3<Complex64>,
    /// Per-stream gain `mu`, so that `d_hat = mu d + e`.
    pub gain: Array3<f64>,
    /// Variance of `e` (noise plus residual interference).
    pub variance: Array3<f64>,
}

impl EqualizedSymbols {
    pub fn num_streams(&self) -> usize {
        self.symbols.dim().2
    }

    /// Unit-gain wrapper around plain symbol estimates.
    pub fn with_variance(symbols: Array3<Complex64>, variance: f64) -> Self {
        let shape = symbols.dim();
        EqualizedSymbols {
            symbols,
            gain: Array3::from_elem(shape, 1.0),
            variance: Array3::from_elem(shape, variance.max(VARIANCE_FLOOR)),
        }
    }
}

/// Per-bit LLRs of one user, shape `(n_F, n_T, streams, log2 M)`.
///
/// Positive values favour bit 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrGrid {
    pub llrs: Array4<f64>,
}

impl LlrGrid {
    pub fn num_streams(&self) -> usize {
        self.llrs.dim().2
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.llrs.dim().3
    }

    /// LLRs of the data REs in the order the bits were mapped.
    pub fn gather(&self, layout: &DataLayout) -> Vec<f64> {
        let (_, _, nl, nb) = self.llrs.dim();
        let mut out = Vec::with_capacity(layout.num_data_res() * nl * nb);
        for &(i, j) in layout.positions() {
            for l in 0..nl {
                for b in 0..nb {
                    out.push(self.llrs[[i, j, l, b]]);
                }
            }
        }
        out
    }
}

/// Output of a one-shot receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverOutput {
    pub llrs: Vec<LlrGrid>,
    pub equalized: Vec<EqualizedSymbols>,
    pub estimate: ChannelEstimate,
}

fn ensure_finite<'a>(values: impl IntoIterator<Item = &'a Complex64>, what: &'static str) -> Result<()> {
    if values.into_iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn check_power_ratio_for_data(e: f64) -> Result<()> {
    if !(0.0..1.0).contains(&e) {
        return Err(Error::InvalidConfig(format!(
            "power ratio {e} leaves no power for data"
        )));
    }
    Ok(())
}

/// Received grid with every user's estimated pilot contribution subtracted.
pub fn remove_pilots(y: &Array3<Complex64>, est: &ChannelEstimate, pilots: &SiPilots) -> Result<Array3<Complex64>> {
    remove_pilots_with(y, &est.users, pilots)
}

pub(crate) fn remove_pilots_with(
    y: &Array3<Complex64>,
    h: &[Array4<Complex64>],
    pilots: &SiPilots,
) -> Result<Array3<Complex64>> {
    let amp = pilots.power_ratio().sqrt();
    let mut out = y.clone();
    for k in 0..pilots.num_users() {
        let hk = h.get(k).ok_or(Error::MissingEstimate(k))?;
        check_user_shape(y, hk, pilots.layers_per_user[k])?;
        pilot_contribution(hk, pilots.user(k), amp, &mut out, -1.0);
    }
    Ok(out)
}

fn check_user_shape(y: &Array3<Complex64>, h: &Array4<Complex64>, layers: usize) -> Result<()> {
    let (nf, nt, nr) = y.dim();
    if h.dim() != (nf, nt, nr, layers) {
        return Err(Error::ShapeMismatch(format!(
            "estimate {:?} vs received grid {:?} with {layers} layers",
            h.dim(),
            y.dim()
        )));
    }
    Ok(())
}

/// Per-RE LMMSE `d_hat = G^{-1} H^H t` with `G = H^H H + sigma^2 I`.
///
/// `t` has shape `(n_F, n_T, N_R)`, `h` has shape `(n_F, n_T, N_R, streams)`.
/// `sigma2` is raised to [`SIGMA2_FLOOR`] when smaller.
pub fn lmmse_detect(t: &Array3<Complex64>, h: &Array4<Complex64>, sigma2: f64) -> Result<EqualizedSymbols> {
    let (nf, nt, nr) = t.dim();
    let (hf, ht, hr, ns) = h.dim();
    if (hf, ht, hr) != (nf, nt, nr) {
        return Err(Error::ShapeMismatch(format!(
            "channel {:?} vs signal {:?}",
            h.dim(),
            t.dim()
        )));
    }
    if !sigma2.is_finite() {
        return Err(Error::NonFinite("noise variance"));
    }
    ensure_finite(t.iter(), "detector input")?;
    ensure_finite(h.iter(), "channel estimate")?;
    let s2 = sigma2.max(SIGMA2_FLOOR);

    let mut symbols = Array3::zeros((nf, nt, ns));
    let mut gain = Array3::zeros((nf, nt, ns));
    let mut variance = Array3::zeros((nf, nt, ns));
    let mut g = vec![Complex64::new(0.0, 0.0); ns * ns];
    let mut rhs = vec![Complex64::new(0.0, 0.0); ns];
    let mut diag = vec![0.0; ns];
    let mut scratch = Vec::with_capacity(ns);
    for i in 0..nf {
        for j in 0..nt {
            for a in 0..ns {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..nr {
                    acc += h[[i, j, r, a]].conj() * t[[i, j, r]];
                }
                rhs[a] = acc;
                for b in 0..=a {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for r in 0..nr {
                        acc += h[[i, j, r, a]].conj() * h[[i, j, r, b]];
                    }
                    g[a * ns + b] = acc;
                    g[b * ns + a] = acc.conj();
                }
                g[a * ns + a] += s2;
            }
            if !linalg::cholesky(&mut g, ns) {
                return Err(Error::NonFinite("Gram matrix factorization"));
            }
            linalg::forward(&g, ns, &mut rhs);
            linalg::backward(&g, ns, &mut rhs);
            linalg::inverse_diagonal(&g, ns, &mut diag, &mut scratch);
            for a in 0..ns {
                let mu = (1.0 - s2 * diag[a]).clamp(0.0, 1.0);
                symbols[[i, j, a]] = rhs[a];
                gain[[i, j, a]] = mu;
                variance[[i, j, a]] = (mu * (1.0 - mu)).max(VARIANCE_FLOOR);
            }
        }
    }
    Ok(EqualizedSymbols {
        symbols,
        gain,
        variance,
    })
}

/// LMMSE over the stacked streams of all users, split back per user.
pub fn joint_lmmse(t: &Array3<Complex64>, users: &[Array4<Complex64>], sigma2: f64) -> Result<Vec<EqualizedSymbols>> {
    if users.is_empty() {
        return Err(Error::MissingEstimate(0));
    }
    let views: Vec<_> = users.iter().map(|h| h.view()).collect();
    let stacked =
        concatenate(Axis(3), &views).map_err(|e| Error::ShapeMismatch(format!("cannot stack user channels: {e}")))?;
    let eq = lmmse_detect(t, &stacked, sigma2)?;
    let mut out = Vec::with_capacity(users.len());
    let mut off = 0;
    for h in users {
        let n = h.dim().3;
        out.push(EqualizedSymbols {
            symbols: eq.symbols.slice(s![.., .., off..off + n]).to_owned(),
            gain: eq.gain.slice(s![.., .., off..off + n]).to_owned(),
            variance: eq.variance.slice(s![.., .., off..off + n]).to_owned(),
        });
        off += n;
    }
    Ok(out)
}

/// Max-log LLRs: `(min_{s: b=1} |d - mu s|^2 - min_{s: b=0} |d - mu s|^2) / var`,
/// clamped to [`LLR_CLAMP`].
pub fn demap_llr(eq: &EqualizedSymbols, c: &Constellation) -> LlrGrid {
    let (nf, nt, ns) = eq.symbols.dim();
    let bits = c.bits_per_symbol();
    let mut llrs = Array4::zeros((nf, nt, ns, bits));
    let mut min0 = vec![0.0; bits];
    let mut min1 = vec![0.0; bits];
    for ((i, j, l), &d) in eq.symbols.indexed_iter() {
        let mu = eq.gain[[i, j, l]];
        let var = eq.variance[[i, j, l]].max(VARIANCE_FLOOR);
        min0.fill(f64::INFINITY);
        min1.fill(f64::INFINITY);
        for (label, &s) in c.points().iter().enumerate() {
            let dist = (d - s * mu).norm_sqr();
            for b in 0..bits {
                let slot = if (label >> (bits - 1 - b)) & 1 == 1 {
                    &mut min1[b]
                } else {
                    &mut min0[b]
                };
                if dist < *slot {
                    *slot = dist;
                }
            }
        }
        for b in 0..bits {
            let l_b = (min1[b] - min0[b]) / var;
            llrs[[i, j, l, b]] = if l_b.is_nan() {
                0.0
            } else {
                l_b.clamp(-LLR_CLAMP, LLR_CLAMP)
            };
        }
    }
    LlrGrid { llrs }
}

/// Detector input `t = (y - pilots - other users' data) / sqrt(1 - E)` for user
/// `k`; with `data = None` no data is subtracted.
pub(crate) fn si_detection_input(
    y: &Array3<Complex64>,
    h: &[Array4<Complex64>],
    data: Option<&[Array3<Complex64>]>,
    pilots: &SiPilots,
    k: Option<usize>,
) -> Result<Array3<Complex64>> {
    let e = pilots.power_ratio();
    check_power_ratio_for_data(e)?;
    let mut t = remove_pilots_with(y, h, pilots)?;
    if let (Some(data), Some(k)) = (data, k) {
        let amp = (1.0 - e).sqrt();
        for (kp, (hk, dk)) in h.iter().zip(data).enumerate() {
            if kp != k {
                pilot_contribution(hk, dk.view(), amp, &mut t, -1.0);
            }
        }
    }
    let scale = 1.0 / (1.0 - e).sqrt();
    t.mapv_inplace(|z| z * scale);
    Ok(t)
}

/// Interference seen by user `k` when re-estimating its channel:
/// every user's data plus every other user's pilots.
pub fn build_interference(
    h: &[Array4<Complex64>],
    data: &[Array3<Complex64>],
    pilots: &SiPilots,
    k: usize,
) -> Result<Array3<Complex64>> {
    let kk = pilots.num_users();
    if h.len() < kk || data.len() < kk {
        return Err(Error::MissingEstimate(h.len().min(data.len())));
    }
    let (nf, nt, nr, _) = h[0].dim();
    let e = pilots.power_ratio();
    let (a_data, a_pilot) = ((1.0 - e).sqrt(), e.sqrt());
    let mut v = Array3::zeros((nf, nt, nr));
    for kp in 0..kk {
        let layers = pilots.layers_per_user[kp];
        if h[kp].dim() != (nf, nt, nr, layers) || data[kp].dim() != (nf, nt, layers) {
            return Err(Error::ShapeMismatch(format!(
                "user {kp}: estimate {:?}, data {:?}",
                h[kp].dim(),
                data[kp].dim()
            )));
        }
        pilot_contribution(&h[kp], data[kp].view(), a_data, &mut v, 1.0);
        if kp != k {
            pilot_contribution(&h[kp], pilots.user(kp), a_pilot, &mut v, 1.0);
        }
    }
    Ok(v)
}

fn demap_all(eq: &[EqualizedSymbols], c: &Constellation) -> Vec<LlrGrid> {
    eq.iter().map(|e| demap_llr(e, c)).collect()
}

/// One-shot superimposed-DMRS receiver: LS, smoothing, pilot removal and
/// joint LMMSE over all users.
pub fn one_shot_si(
    y: &Array3<Complex64>,
    pilots: &SiPilots,
    window: Window,
    sigma2: f64,
    c: &Constellation,
) -> Result<ReceiverOutput> {
    check_power_ratio_for_data(pilots.power_ratio())?;
    let estimate = smooth(&ls_estimate_sip(y, pilots)?, window);
    let t = si_detection_input(y, &estimate.users, None, pilots, None)?;
    let equalized = joint_lmmse(&t, &estimate.users, sigma2 / (1.0 - pilots.power_ratio()))?;
    Ok(ReceiverOutput {
        llrs: demap_all(&equalized, c),
        equalized,
        estimate,
    })
}

/// One-shot orthogonal-DMRS receiver: LS on DMRS, interpolation, joint LMMSE.
pub fn one_shot_orthogonal(
    y: &Array3<Complex64>,
    pilots: &OrthPilots,
    sigma2: f64,
    c: &Constellation,
) -> Result<ReceiverOutput> {
    let estimate = estimate_orthogonal(y, pilots)?;
    let equalized = joint_lmmse(y, &estimate.users, sigma2)?;
    Ok(ReceiverOutput {
        llrs: demap_all(&equalized, c),
        equalized,
        estimate,
    })
}

/// Linear receiver with perfect channel knowledge.
///
/// Superimposed pilots are removed with the true channel first; the other
/// schemes equalize the received grid directly.
pub fn genie_lmmse_baseline(
    y: &Array3<Complex64>,
    h_true: &ChannelRealization,
    sigma2: f64,
    pattern: &PilotPattern,
    c: &Constellation,
) -> Result<ReceiverOutput> {
    let estimate = ChannelEstimate::from_truth(h_true);
    let equalized = match pattern {
        PilotPattern::Superimposed(p) => {
            let t = si_detection_input(y, &estimate.users, None, p, None)?;
            joint_lmmse(&t, &estimate.users, sigma2 / (1.0 - p.power_ratio()))?
        }
        PilotPattern::Orthogonal(_) | PilotPattern::None => joint_lmmse(y, &estimate.users, sigma2)?,
    };
    Ok(ReceiverOutput {
        llrs: demap_all(&equalized, c),
        equalized,
        estimate,
    })
}
