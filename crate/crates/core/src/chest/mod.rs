//! Channel estimation for both pilot schemes.
//!
//! Superimposed pilots give a raw least-squares estimate on every resource
//! element, polluted by data-to-pilot interference, which is then averaged
//! with a sliding window. Orthogonal pilots give clean estimates on the DMRS
//! resource elements only, which are spread over the grid by interpolation.

use ndarray::{Array2, Array3, Array4, ArrayView2, ArrayView3, ArrayViewMut1, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::scenario::GridDims;
use crate::waveform::{OrthDmrsConfig, OrthPilots, SiPilots};

/// Width of the frequency averaging applied after time interpolation.
pub const DEFAULT_INTERP_FREQ_WINDOW: usize = 4;

/// Sliding-window size in subcarriers and OFDM symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub freq: usize,
    pub time: usize,
}

impl Window {
    pub fn new(freq: usize, time: usize) -> Result<Self> {
        for (name, w) in [("frequency", freq), ("time", time)] {
            if w == 0 || w % 2 != 0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} window {w} must be even and positive"
                )));
            }
        }
        Ok(Window { freq, time })
    }
}

impl std::fmt::Display for Window {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.freq, self.time)
    }
}

/// Smoothing windows of the iterative receiver, one per iteration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSchedule {
    windows: Vec<Window>,
}

impl WindowSchedule {
    pub fn new(windows: Vec<Window>) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::InvalidConfig("window schedule is empty".into()));
        }
        Ok(WindowSchedule { windows })
    }

    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        let windows = pairs
            .iter()
            .map(|&(f, t)| Window::new(f, t))
            .collect::<Result<Vec<_>>>()?;
        WindowSchedule::new(windows)
    }

    /// Windows larger than twice the grid are pointless: clipping already
    /// covers the whole grid at that size.
    pub fn validate_for(&self, dims: GridDims) -> Result<()> {
        for w in &self.windows {
            if w.freq > 2 * dims.num_subcarriers || w.time > 2 * dims.num_symbols {
                return Err(Error::InvalidConfig(format!(
                    "window {w} exceeds twice the {}x{} grid",
                    dims.num_subcarriers, dims.num_symbols
                )));
            }
        }
        Ok(())
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    /// Number of receiver iterations U.
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn first(&self) -> Window {
        self.windows[0]
    }
}

impl std::str::FromStr for WindowSchedule {
    type Err = Error;

    /// Parses `12x14,6x14`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |detail: String| Error::Parse {
            what: "window schedule",
            detail,
        };
        let mut windows = Vec::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (f, t) = item
                .split_once(['x', 'X'])
                .ok_or_else(|| bad(format!("expected FxT, got {item:?}")))?;
            let f = f.trim().parse().map_err(|e| bad(format!("{item:?}: {e}")))?;
            let t = t.trim().parse().map_err(|e| bad(format!("{item:?}: {e}")))?;
            windows.push(Window::new(f, t)?);
        }
        WindowSchedule::new(windows)
    }
}

impl std::fmt::Display for WindowSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.windows.iter().map(|w| format!("{}x{}", w.freq, w.time)).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    RawLs,
    Smoothed,
    Interpolated,
}

/// Full-grid channel estimate, one `(n_F, n_T, N_R, N_T^(k))` tensor per user.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub users: Vec<Array4<Complex64>>,
    pub provenance: Provenance,
    /// Receiver iteration that produced the estimate; 0 for one-shot.
    pub iteration: usize,
}

impl ChannelEstimate {
    /// The true channel, for genie receivers and error measurements.
    pub fn from_truth(h: &ChannelRealization) -> Self {
        ChannelEstimate {
            users: h.users.clone(),
            provenance: Provenance::Interpolated,
            iteration: 0,
        }
    }

    /// Mean squared error against the true channel over every coefficient.
    pub fn mse(&self, truth: &ChannelRealization) -> f64 {
        let mut acc = 0.0;
        let mut n = 0usize;
        for (est, h) in self.users.iter().zip(&truth.users) {
            acc += est.iter().zip(h.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>();
            n += h.len();
        }
        acc / n.max(1) as f64
    }
}

/// Orthogonal-DMRS estimate, meaningful only where `support` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct DmrsEstimate {
    pub users: Vec<Array4<Complex64>>,
    /// `(n_F, n_T, N_T^(k))` per user.
    pub support: Vec<Array3<bool>>,
}

fn check_rx_grid(y: &Array3<Complex64>, dims: GridDims) -> Result<()> {
    let (nf, nt, _) = y.dim();
    if (nf, nt) != (dims.num_subcarriers, dims.num_symbols) {
        return Err(Error::ShapeMismatch(format!(
            "received grid {nf}x{nt} vs pilot grid {}x{}",
            dims.num_subcarriers, dims.num_symbols
        )));
    }
    Ok(())
}

/// Per-RE least-squares estimate of user `k` from `y` (or from `y` with
/// interference already removed).
///
/// With more than one layer in the scenario the per-RE values are averaged
/// over each cover-code group, which is what separates the layers.
pub fn ls_estimate_sip_user(y: &Array3<Complex64>, pilots: &SiPilots, k: usize) -> Result<Array4<Complex64>> {
    let e = pilots.power_ratio();
    if e <= 0.0 {
        return Err(Error::NoPilotEnergy(e));
    }
    check_rx_grid(y, pilots.dims())?;
    let p = pilots.user(k);
    let (nf, nt, nr) = y.dim();
    let layers = p.dim().2;
    let scale = 1.0 / e.sqrt();
    let mut h = Array4::zeros((nf, nt, nr, layers));
    for i in 0..nf {
        for j in 0..nt {
            for l in 0..layers {
                let pc = p[[i, j, l]].conj() * scale;
                for r in 0..nr {
                    h[[i, j, r, l]] = y[[i, j, r]] * pc;
                }
            }
        }
    }
    if pilots.total_layers() > 1 {
        average_over_groups(&mut h, pilots.config.occ_group_shape);
    }
    Ok(h)
}

/// Replace every entry with the mean over its `(g_f, g_t)` tile.
fn average_over_groups(h: &mut Array4<Complex64>, (gf, gt): (usize, usize)) {
    let (nf, nt, nr, nl) = h.dim();
    for f0 in (0..nf).step_by(gf) {
        let f1 = (f0 + gf).min(nf);
        for t0 in (0..nt).step_by(gt) {
            let t1 = (t0 + gt).min(nt);
            let count = ((f1 - f0) * (t1 - t0)) as f64;
            for r in 0..nr {
                for l in 0..nl {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i in f0..f1 {
                        for j in t0..t1 {
                            acc += h[[i, j, r, l]];
                        }
                    }
                    let mean = acc / count;
                    for i in f0..f1 {
                        for j in t0..t1 {
                            h[[i, j, r, l]] = mean;
                        }
                    }
                }
            }
        }
    }
}

/// Raw least-squares estimate of every user from superimposed pilots.
pub fn ls_estimate_sip(y: &Array3<Complex64>, pilots: &SiPilots) -> Result<ChannelEstimate> {
    let users = (0..pilots.num_users())
        .map(|k| ls_estimate_sip_user(y, pilots, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelEstimate {
        users,
        provenance: Provenance::RawLs,
        iteration: 0,
    })
}

/// Clipped window `[i - w/2 + 1, i + w/2]` intersected with `[0, n)`.
fn window_bounds(i: usize, w: usize, n: usize) -> (usize, usize) {
    let lo = (i + 1).saturating_sub(w / 2);
    let hi = (i + w / 2).min(n - 1);
    (lo, hi)
}

fn box_mean_lane(mut lane: ArrayViewMut1<'_, Complex64>, w: usize, scratch: &mut Vec<Complex64>) {
    let n = lane.len();
    scratch.clear();
    scratch.extend(lane.iter().copied());
    for i in 0..n {
        let (lo, hi) = window_bounds(i, w, n);
        let sum: Complex64 = scratch[lo..=hi].iter().sum();
        lane[i] = sum / (hi - lo + 1) as f64;
    }
}

/// Sliding-window mean of one tensor over its first two axes.
///
/// The clipped window is a product of two intervals, so the 2-D mean is a
/// frequency pass followed by a time pass.
pub fn smooth_tensor(h: &Array4<Complex64>, window: Window) -> Array4<Complex64> {
    let mut out = h.clone();
    let mut scratch = Vec::new();
    for lane in out.lanes_mut(Axis(0)) {
        box_mean_lane(lane, window.freq, &mut scratch);
    }
    for lane in out.lanes_mut(Axis(1)) {
        box_mean_lane(lane, window.time, &mut scratch);
    }
    out
}

pub fn smooth(est: &ChannelEstimate, window: Window) -> ChannelEstimate {
    ChannelEstimate {
        users: est.users.iter().map(|h| smooth_tensor(h, window)).collect(),
        provenance: Provenance::Smoothed,
        iteration: est.iteration,
    }
}

/// Least-squares estimate on the DMRS resource elements.
///
/// A port alone in its CDM group is estimated per resource element. When
/// both ports of a group are active, each pair of consecutive comb
/// subcarriers is de-spread with the port's cover and the result assigned to
/// both elements of the pair.
pub fn ls_estimate_orthogonal(y: &Array3<Complex64>, pilots: &OrthPilots) -> Result<DmrsEstimate> {
    check_rx_grid(y, pilots.dims())?;
    let (nf, nt, nr) = y.dim();
    let shared = pilots.config.ports_per_group();
    let mut users = Vec::with_capacity(pilots.layers_per_user.len());
    let mut supports = Vec::with_capacity(pilots.layers_per_user.len());
    for (k, &layers) in pilots.layers_per_user.iter().enumerate() {
        let off = pilots.layer_offset(k);
        let mut h = Array4::zeros((nf, nt, nr, layers));
        let mut support = Array3::from_elem((nf, nt, layers), false);
        for l in 0..layers {
            let layer = off + l;
            let port = pilots.config.port_assignment[layer];
            let despread = shared[OrthDmrsConfig::cdm_group(port)] > 1;
            for j in 0..nt {
                let comb: Vec<usize> = (0..nf).filter(|&i| pilots.support[[i, j, layer]]).collect();
                if comb.is_empty() {
                    continue;
                }
                let pairs: Vec<&[usize]> = if despread {
                    comb.chunks(2).collect()
                } else {
                    comb.chunks(1).collect()
                };
                for chunk in pairs {
                    for r in 0..nr {
                        let sum: Complex64 = chunk
                            .iter()
                            .map(|&i| y[[i, j, r]] * pilots.pilots[[i, j, layer]].conj())
                            .sum();
                        let v = sum / chunk.len() as f64;
                        for &i in chunk {
                            h[[i, j, r, l]] = v;
                        }
                    }
                    for &i in chunk {
                        support[[i, j, l]] = true;
                    }
                }
            }
        }
        users.push(h);
        supports.push(support);
    }
    Ok(DmrsEstimate {
        users,
        support: supports,
    })
}

/// Linear interpolation between known symbols of one row; nearest value
/// outside the known span.
fn interpolate_time(row: &mut [Complex64], known: &[usize]) {
    let first = known[0];
    let last = *known.last().expect("nonempty");
    for j in 0..row.len() {
        if j <= first {
            row[j] = row[first];
        } else if j >= last {
            row[j] = row[last];
        } else {
            let b = known.partition_point(|&x| x <= j);
            let (j0, j1) = (known[b - 1], known[b]);
            if j0 == j {
                continue;
            }
            let w = (j - j0) as f64 / (j1 - j0) as f64;
            row[j] = row[j0] * (1.0 - w) + row[j1] * w;
        }
    }
}

/// Fill one layer's `(n_F, n_T)` plane from its DMRS entries.
fn interpolate_plane(
    values: ArrayView2<'_, Complex64>,
    support: ArrayView2<'_, bool>,
    freq_window: usize,
) -> Option<Array2<Complex64>> {
    let (nf, nt) = values.dim();
    let mut filled = values.to_owned();
    let mut known_rows = Vec::new();
    for i in 0..nf {
        let known: Vec<usize> = (0..nt).filter(|&j| support[[i, j]]).collect();
        if known.is_empty() {
            continue;
        }
        let mut row: Vec<Complex64> = filled.row(i).to_vec();
        interpolate_time(&mut row, &known);
        for (dst, v) in filled.row_mut(i).iter_mut().zip(row) {
            *dst = v;
        }
        known_rows.push(i);
    }
    if known_rows.is_empty() {
        return None;
    }
    let mut out = Array2::zeros((nf, nt));
    for i in 0..nf {
        let (lo, hi) = window_bounds(i, freq_window, nf);
        let a = known_rows.partition_point(|&x| x < lo);
        let b = known_rows.partition_point(|&x| x <= hi);
        let rows: &[usize] = if a < b {
            &known_rows[a..b]
        } else {
            // No comb subcarrier inside the window: fall back to the nearest one.
            let near = if a == known_rows.len() || (a > 0 && i - known_rows[a - 1] <= known_rows[a] - i) {
                a - 1
            } else {
                a
            };
            std::slice::from_ref(&known_rows[near])
        };
        for j in 0..nt {
            let sum: Complex64 = rows.iter().map(|&r| filled[[r, j]]).sum();
            out[[i, j]] = sum / rows.len() as f64;
        }
    }
    Some(out)
}

/// Spread a DMRS estimate over the whole grid: linear in time between DMRS
/// symbols, then a clipped moving average of `freq_window` subcarriers over
/// the comb subcarriers only.
pub fn interpolate(est: &DmrsEstimate, freq_window: usize) -> Result<ChannelEstimate> {
    if freq_window == 0 || !freq_window.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "interpolation window {freq_window} must be even and positive"
        )));
    }
    let mut users = Vec::with_capacity(est.users.len());
    let mut layer_base = 0;
    for (h, support) in est.users.iter().zip(&est.support) {
        let (nf, nt, nr, nl) = h.dim();
        let mut out = Array4::zeros((nf, nt, nr, nl));
        for l in 0..nl {
            let sup = support.index_axis(Axis(2), l);
            for r in 0..nr {
                let plane = h.index_axis(Axis(3), l);
                let plane = plane.index_axis(Axis(2), r);
                let filled = interpolate_plane(plane, sup, freq_window).ok_or(Error::NoDmrs(layer_base + l))?;
                out.index_axis_mut(Axis(3), l)
                    .index_axis_mut(Axis(2), r)
                    .assign(&filled);
            }
        }
        layer_base += nl;
        users.push(out);
    }
    Ok(ChannelEstimate {
        users,
        provenance: Provenance::Interpolated,
        iteration: 0,
    })
}

/// Complete orthogonal-DMRS estimator: LS on DMRS then interpolation.
pub fn estimate_orthogonal(y: &Array3<Complex64>, pilots: &OrthPilots) -> Result<ChannelEstimate> {
    interpolate(&ls_estimate_orthogonal(y, pilots)?, DEFAULT_INTERP_FREQ_WINDOW)
}

/// Transmitted pilot contribution `sum_l H[.., l] sqrt(E) p_l` of one user.
pub(crate) fn pilot_contribution(
    h: &Array4<Complex64>,
    p: ArrayView3<'_, Complex64>,
    amplitude: f64,
    out: &mut Array3<Complex64>,
    sign: f64,
) {
    let (nf, nt, nr, nl) = h.dim();
    let a = amplitude * sign;
    for i in 0..nf {
        for j in 0..nt {
            for l in 0..nl {
                let x = p[[i, j, l]] * a;
                for r in 0..nr {
                    out[[i, j, r]] += h[[i, j, r, l]] * x;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_channel, generate_channel, ChannelProfile};
    use crate::scenario::{NoiseModel, ScenarioConfig};
    use crate::waveform::{superimpose, SiDmrsConfig};
    use ndarray::Array1;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_tensor(rng: &mut ChaCha8Rng, shape: (usize, usize, usize, usize)) -> Array4<Complex64> {
        Array4::from_shape_simple_fn(shape, || c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    /// Direct double sum over the clipped window.
    fn brute_window(h: &Array4<Complex64>, i: usize, j: usize, w: Window) -> Complex64 {
        let (nf, nt, _, _) = h.dim();
        let mut acc = c(0.0, 0.0);
        let mut n = 0.0;
        for m in -(w.freq as isize) / 2 + 1..=(w.freq as isize) / 2 {
            for q in -(w.time as isize) / 2 + 1..=(w.time as isize) / 2 {
                let (a, b) = (i as isize + m, j as isize + q);
                if a >= 0 && b >= 0 && (a as usize) < nf && (b as usize) < nt {
                    acc += h[[a as usize, b as usize, 0, 0]];
                    n += 1.0;
                }
            }
        }
        acc / n
    }

    #[test]
    fn window_validation() {
        assert!(Window::new(3, 14).is_err());
        assert!(Window::new(0, 2).is_err());
        assert!(WindowSchedule::new(vec![]).is_err());
        let s: WindowSchedule = "12x14, 6x14".parse().unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.to_string(), "12x14,6x14");
        assert!(s.validate_for(GridDims::default()).is_ok());
        let big = WindowSchedule::from_pairs(&[(146, 14)]).unwrap();
        assert!(big.validate_for(GridDims::default()).is_err());
    }

    #[test]
    fn constant_field_is_preserved() {
        let h = Array4::from_elem((72, 14, 2, 1), c(0.3, -1.2));
        for w in [(2, 2), (12, 14), (6, 4)] {
            let out = smooth_tensor(&h, Window::new(w.0, w.1).unwrap());
            for v in out.iter() {
                assert!((v - c(0.3, -1.2)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn smoothing_matches_brute_force_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_tensor(&mut rng, (20, 14, 1, 1));
        for w in [(2, 2), (4, 6), (12, 14), (6, 2)] {
            let w = Window::new(w.0, w.1).unwrap();
            let out = smooth_tensor(&h, w);
            for i in 0..20 {
                for j in 0..14 {
                    assert!((out[[i, j, 0, 0]] - brute_window(&h, i, j, w)).norm() < 1e-13);
                }
            }
        }
        // Interior (2, 2) window: REs (i, j), (i+1, j), (i, j+1), (i+1, j+1).
        let out = smooth_tensor(&h, Window::new(2, 2).unwrap());
        let direct = (h[[5, 5, 0, 0]] + h[[6, 5, 0, 0]] + h[[5, 6, 0, 0]] + h[[6, 6, 0, 0]]) / 4.0;
        assert!((out[[5, 5, 0, 0]] - direct).norm() < 1e-15);
    }

    #[test]
    fn double_size_window_gives_global_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_tensor(&mut rng, (72, 14, 1, 1));
        let mean = h.iter().sum::<Complex64>() / h.len() as f64;
        let out = smooth_tensor(&h, Window::new(144, 28).unwrap());
        for v in out.iter() {
            assert!((v - mean).norm() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn smoothing_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0,
                               wf in 1usize..8, wt in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_tensor(&mut rng, (16, 14, 2, 1));
            let y = random_tensor(&mut rng, (16, 14, 2, 1));
            let w = Window::new(2 * wf, 2 * wt).unwrap();
            let lhs = smooth_tensor(&(x.mapv(|v| v * a) + y.mapv(|v| v * b)), w);
            let rhs = smooth_tensor(&x, w).mapv(|v| v * a) + smooth_tensor(&y, w).mapv(|v| v * b);
            for (p, q) in lhs.iter().zip(rhs.iter()) {
                prop_assert!((p - q).norm() < 1e-12);
            }
        }
    }

    fn scalar_pilots(e: f64) -> SiPilots {
        let cfg = SiDmrsConfig::for_layers(e, 1, 0).unwrap();
        let mut p = SiPilots::build(cfg, GridDims::new(1, 1), &[1]).unwrap();
        p.grid[[0, 0, 0]] = c(1.0, 0.0);
        p
    }

    #[test]
    fn pure_pilot_scalar_estimate() {
        let p = scalar_pilots(1.0);
        let y = Array3::from_elem((1, 1, 1), c(2.0, 0.0));
        let est = ls_estimate_sip(&y, &p).unwrap();
        assert_eq!(est.users[0][[0, 0, 0, 0]], c(2.0, 0.0));
        assert_eq!(est.provenance, Provenance::RawLs);
    }

    #[test]
    fn superimposed_scalar_estimate() {
        let p = scalar_pilots(0.25);
        let d = c(1.0, 1.0) / 2f64.sqrt();
        let x = superimpose(&Array3::from_elem((1, 1, 1), d), &p.grid, 0.25).unwrap();
        let est = ls_estimate_sip(&x.values, &p).unwrap();
        let expected = c(1.0, 0.0) + d * 3f64.sqrt();
        assert!((est.users[0][[0, 0, 0, 0]] - expected).norm() < 1e-12);
        assert!((est.users[0][[0, 0, 0, 0]] - c(2.2247, 1.2247)).norm() < 1e-4);
    }

    #[test]
    fn zero_power_ratio_is_rejected() {
        let p = scalar_pilots(0.0);
        let y = Array3::from_elem((1, 1, 1), c(1.0, 0.0));
        assert!(matches!(ls_estimate_sip(&y, &p), Err(Error::NoPilotEnergy(_))));
    }

    #[test]
    fn multi_layer_groups_separate_layers() {
        // Flat channel, pilots only: group de-spreading recovers each column.
        let cfg = ScenarioConfig::uniform(2, 2, 4);
        let dims = cfg.dims();
        let pilots = SiPilots::build(SiDmrsConfig::for_layers(1.0, 4, 8).unwrap(), dims, &cfg.layers_per_user).unwrap();
        let profile = ChannelProfile::flat_block();
        let h = generate_channel(&profile, &cfg, 2).unwrap();
        let tx: Vec<Array3<Complex64>> = (0..2).map(|k| pilots.user(k).to_owned()).collect();
        let y = apply_channel(&tx, &h, &NoiseModel::noiseless(), 0).unwrap();
        let est = ls_estimate_sip(&y, &pilots).unwrap();
        for k in 0..2 {
            for (a, b) in est.users[k].iter().zip(h.users[k].iter()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    fn orth_setup(layers: usize) -> (ScenarioConfig, OrthPilots) {
        let cfg = ScenarioConfig::uniform(1, layers, 4);
        let oc = OrthDmrsConfig::default_for(layers, 5).unwrap();
        let pilots = OrthPilots::build(oc, cfg.dims(), &cfg.layers_per_user).unwrap();
        (cfg, pilots)
    }

    fn orth_rx(pilots: &OrthPilots, h: &ChannelRealization, noise: f64, seed: u64) -> Array3<Complex64> {
        let tx = vec![pilots.pilots.clone()];
        let nm = if noise > 0.0 {
            NoiseModel::from_variance(noise).unwrap()
        } else {
            NoiseModel::noiseless()
        };
        apply_channel(&tx, h, &nm, seed).unwrap()
    }

    #[test]
    fn orthogonal_noiseless_flat_is_exact() {
        let (cfg, pilots) = orth_setup(1);
        let h = generate_channel(&ChannelProfile::flat_block(), &cfg, 1).unwrap();
        let y = orth_rx(&pilots, &h, 0.0, 0);
        let est = ls_estimate_orthogonal(&y, &pilots).unwrap();
        let mut count = 0;
        for ((i, j, l), &s) in est.support[0].indexed_iter() {
            if s {
                count += 1;
                for r in 0..4 {
                    assert!((est.users[0][[i, j, r, l]] - h.users[0][[i, j, r, l]]).norm() < 1e-12);
                }
            }
        }
        assert_eq!(count, 72);
        let full = interpolate(&est, DEFAULT_INTERP_FREQ_WINDOW).unwrap();
        for (a, b) in full.users[0].iter().zip(h.users[0].iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn cdm_pair_ports_do_not_leak() {
        // Ports 0 and 1 share CDM group 0.
        let cfg = ScenarioConfig::uniform(1, 2, 2);
        let oc = OrthDmrsConfig {
            port_assignment: vec![0, 1],
            ..OrthDmrsConfig::default_for(2, 5).unwrap()
        };
        let pilots = OrthPilots::build(oc, cfg.dims(), &cfg.layers_per_user).unwrap();
        let h = generate_channel(&ChannelProfile::flat_block(), &cfg, 6).unwrap();
        let y = orth_rx(&pilots, &h, 0.0, 0);
        let est = ls_estimate_orthogonal(&y, &pilots).unwrap();
        for ((i, j, l), &s) in est.support[0].indexed_iter() {
            if s {
                for r in 0..2 {
                    assert!((est.users[0][[i, j, r, l]] - h.users[0][[i, j, r, l]]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn orthogonal_noise_variance_and_bias() {
        let (cfg, pilots) = orth_setup(1);
        let h = generate_channel(&ChannelProfile::flat_block(), &cfg, 1).unwrap();
        let sigma2 = 0.2;
        let mut sum = c(0.0, 0.0);
        let mut sq = 0.0;
        let mut n = 0.0;
        // 140 trials x 72 DMRS REs = 10080 coefficients.
        for t in 0..140 {
            let y = orth_rx(&pilots, &h, sigma2, 1000 + t);
            let est = ls_estimate_orthogonal(&y, &pilots).unwrap();
            for ((i, j, _), &s) in est.support[0].indexed_iter() {
                if s {
                    let e = est.users[0][[i, j, 0, 0]] - h.users[0][[i, j, 0, 0]];
                    sum += e;
                    sq += e.norm_sqr();
                    n += 1.0;
                }
            }
        }
        let var = sq / n;
        assert!((var / sigma2 - 1.0).abs() < 0.05, "{var}");
        let se = (sigma2 / 2.0 / n).sqrt();
        let mean = sum / n;
        assert!(mean.re.abs() < 3.0 * se && mean.im.abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn time_interpolation_arithmetic() {
        let nf = 4;
        let mut vals = Array4::zeros((nf, 14, 1, 1));
        let mut support = Array3::from_elem((nf, 14, 1), false);
        for i in 0..nf {
            vals[[i, 2, 0, 0]] = c(0.0, 0.0);
            vals[[i, 11, 0, 0]] = c(9.0, 0.0);
            support[[i, 2, 0]] = true;
            support[[i, 11, 0]] = true;
        }
        let est = DmrsEstimate {
            users: vec![vals],
            support: vec![support],
        };
        let out = interpolate(&est, 2).unwrap();
        assert!((out.users[0][[1, 5, 0, 0]] - c(3.0, 0.0)).norm() < 1e-12);
        assert_eq!(out.users[0][[0, 0, 0, 0]], c(0.0, 0.0));
        assert_eq!(out.users[0][[0, 13, 0, 0]], c(9.0, 0.0));
    }

    #[test]
    fn comb_gaps_filled_by_frequency_average() {
        // Oracle: direct evaluation of the pipeline on a linear frequency ramp.
        let nf = 12;
        let ramp = Array1::from_shape_fn(nf, |i| c(i as f64, 0.0));
        let mut vals = Array4::zeros((nf, 3, 1, 1));
        let mut support = Array3::from_elem((nf, 3, 1), false);
        for i in (0..nf).step_by(2) {
            vals[[i, 1, 0, 0]] = ramp[i];
            support[[i, 1, 0]] = true;
        }
        let est = DmrsEstimate {
            users: vec![vals],
            support: vec![support.clone()],
        };
        let out = interpolate(&est, 4).unwrap();
        for i in 0..nf {
            let lo = (i + 1).saturating_sub(2);
            let hi = (i + 2).min(nf - 1);
            let known: Vec<f64> = (lo..=hi).filter(|x| x % 2 == 0).map(|x| x as f64).collect();
            let expect = known.iter().sum::<f64>() / known.len() as f64;
            for j in 0..3 {
                assert!((out.users[0][[i, j, 0, 0]].re - expect).abs() < 1e-12);
            }
        }
        // Flat values stay flat, odd subcarriers included.
        let mut flat = DmrsEstimate {
            users: vec![Array4::zeros((nf, 3, 1, 1))],
            support: vec![support],
        };
        for i in (0..nf).step_by(2) {
            flat.users[0][[i, 1, 0, 0]] = c(2.0, 1.0);
        }
        let out = interpolate(&flat, 4).unwrap();
        for v in out.users[0].iter() {
            assert!((v - c(2.0, 1.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn interpolation_without_dmrs_fails() {
        let est = DmrsEstimate {
            users: vec![Array4::zeros((4, 4, 1, 1))],
            support: vec![Array3::from_elem((4, 4, 1), false)],
        };
        assert!(matches!(interpolate(&est, 4), Err(Error::NoDmrs(0))));
        assert!(interpolate(&est, 3).is_err());
    }
}
