//! Iterative channel estimation, interference cancellation and detection
//! for superimposed pilots.
//!
//! Users are processed in order within an iteration and each step uses the
//! most recent estimates of every other user, so user `k` already sees the
//! current-iteration results of users `0..k`.

use ndarray::{Array3, Array4};
use num_complex::Complex64;

use super::{
    build_interference, check_power_ratio_for_data, demap_llr, lmmse_detect, si_detection_input, EqualizedSymbols,
    LlrGrid,
};
use crate::chest::{ls_estimate_sip_user, smooth_tensor, ChannelEstimate, Provenance, Window, WindowSchedule};
use crate::error::{Error, Result};
use crate::waveform::{Constellation, SiPilots};

/// Hook that lets a channel decoder refine the symbols used for cancellation.
pub trait DecoderFeedback {
    /// Symbols of `user`, shape `(n_F, n_T, N_T^(k))`, to cancel in later
    /// steps, or `None` to keep the detector's soft output.
    fn feedback(&mut self, user: usize, llrs: &LlrGrid) -> Option<Array3<Complex64>>;
}

/// Decoder outside the loop.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoFeedback;

impl DecoderFeedback for NoFeedback {
    fn feedback(&mut self, _user: usize, _llrs: &LlrGrid) -> Option<Array3<Complex64>> {
        None
    }
}

/// State after one pass over all users.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub window: Window,
    pub estimate: ChannelEstimate,
    pub llrs: Vec<LlrGrid>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterativeOutput {
    /// LLRs of the last iteration.
    pub llrs: Vec<LlrGrid>,
    pub equalized: Vec<EqualizedSymbols>,
    pub estimate: ChannelEstimate,
    pub iterations: Vec<IterationRecord>,
}

/// Run the iterative receiver with one iteration per schedule window.
///
/// Initial estimates are the LS estimates smoothed with the first window and
/// initial data estimates are zero.
pub fn iterative_receive(
    y: &Array3<Complex64>,
    pilots: &SiPilots,
    schedule: &WindowSchedule,
    sigma2: f64,
    c: &Constellation,
    feedback: &mut dyn DecoderFeedback,
) -> Result<IterativeOutput> {
    let e = pilots.power_ratio();
    check_power_ratio_for_data(e)?;
    schedule.validate_for(pilots.dims())?;
    let kk = pilots.num_users();
    let (nf, nt, _) = y.dim();
    let sigma2_t = sigma2 / (1.0 - e);

    let mut h: Vec<Array4<Complex64>> = (0..kk)
        .map(|k| Ok(smooth_tensor(&ls_estimate_sip_user(y, pilots, k)?, schedule.first())))
        .collect::<Result<_>>()?;
    let mut d: Vec<Array3<Complex64>> = pilots
        .layers_per_user
        .iter()
        .map(|&l| Array3::zeros((nf, nt, l)))
        .collect();

    let mut iterations = Vec::with_capacity(schedule.len());
    let mut equalized = Vec::new();
    let mut llrs = Vec::new();
    for (u, &window) in schedule.windows().iter().enumerate() {
        equalized.clear();
        llrs.clear();
        for k in 0..kk {
            let v = build_interference(&h, &d, pilots, k)?;
            let cleaned = y - &v;
            h[k] = smooth_tensor(&ls_estimate_sip_user(&cleaned, pilots, k)?, window);
            let t = si_detection_input(y, &h, Some(&d), pilots, Some(k))?;
            let eq = lmmse_detect(&t, &h[k], sigma2_t)?;
            let llr = demap_llr(&eq, c);
            d[k] = match feedback.feedback(k, &llr) {
                Some(sym) if sym.dim() == eq.symbols.dim() => sym,
                Some(sym) => {
                    return Err(Error::ShapeMismatch(format!(
                        "decoder feedback {:?} for symbols {:?}",
                        sym.dim(),
                        eq.symbols.dim()
                    )))
                }
                None => eq.symbols.clone(),
            };
            equalized.push(eq);
            llrs.push(llr);
        }
        iterations.push(IterationRecord {
            window,
            estimate: ChannelEstimate {
                users: h.clone(),
                provenance: Provenance::Smoothed,
                iteration: u + 1,
            },
            llrs: llrs.clone(),
        });
    }
    Ok(IterativeOutput {
        llrs,
        equalized,
        estimate: ChannelEstimate {
            users: h,
            provenance: Provenance::Smoothed,
            iteration: schedule.len(),
        },
        iterations,
    })
}
