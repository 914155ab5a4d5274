//! Orthogonal DMRS with a comb-2, two-CDM-group layout.
//!
//! Ports 0 and 1 share CDM group 0 (even subcarriers), ports 2 and 3 share
//! CDM group 1 (odd subcarriers). Within a group the two ports are separated
//! by a length-2 frequency-domain cover over consecutive comb subcarriers.
//! Every subcarrier of a CDM group in use is reserved on the DMRS symbols;
//! unused CDM groups keep carrying data.

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scenario::GridDims;
use crate::waveform::grid::{DataLayout, ReRole, ResourceGrid};

pub const NUM_PORTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrthDmrsConfig {
    pub dmrs_symbol_indices: Vec<usize>,
    /// DMRS port of every stacked layer.
    pub port_assignment: Vec<usize>,
    pub scrambling_seed: u64,
}

impl OrthDmrsConfig {
    /// Front-loaded DMRS at symbol 2 plus one additional at symbol 11; port 0
    /// for one layer, ports 0 and 2 for two, ports 0..=3 for up to four.
    pub fn default_for(total_layers: usize, scrambling_seed: u64) -> Result<Self> {
        let port_assignment = match total_layers {
            1 => vec![0],
            2 => vec![0, 2],
            3 => vec![0, 1, 2],
            4 => vec![0, 1, 2, 3],
            n => {
                return Err(Error::InvalidConfig(format!(
                    "orthogonal DMRS supports 1..=4 layers, got {n}"
                )))
            }
        };
        Ok(OrthDmrsConfig {
            dmrs_symbol_indices: vec![2, 11],
            port_assignment,
            scrambling_seed,
        })
    }

    pub fn cdm_group(port: usize) -> usize {
        port / 2
    }

    /// First comb subcarrier of a CDM group.
    pub fn comb_offset(cdm_group: usize) -> usize {
        cdm_group
    }

    /// Frequency-domain cover of a port over one CDM pair.
    pub fn fd_occ(port: usize) -> [f64; 2] {
        if port.is_multiple_of(2) {
            [1.0, 1.0]
        } else {
            [1.0, -1.0]
        }
    }

    pub fn validate(&self, dims: GridDims) -> Result<()> {
        if self.dmrs_symbol_indices.is_empty() {
            return Err(Error::InvalidConfig(
                "orthogonal DMRS needs at least one DMRS symbol".into(),
            ));
        }
        if let Some(&j) = self.dmrs_symbol_indices.iter().find(|&&j| j >= dims.num_symbols) {
            return Err(Error::InvalidConfig(format!(
                "DMRS symbol {j} outside a {}-symbol slot",
                dims.num_symbols
            )));
        }
        let mut seen = [false; NUM_PORTS];
        for &p in &self.port_assignment {
            if p >= NUM_PORTS {
                return Err(Error::InvalidConfig(format!("DMRS port {p} does not exist")));
            }
            if seen[p] {
                return Err(Error::PortCollision(p));
            }
            seen[p] = true;
        }
        Ok(())
    }

    fn sorted_symbols(&self) -> Vec<usize> {
        let mut s = self.dmrs_symbol_indices.clone();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Number of active ports in each CDM group.
    pub fn ports_per_group(&self) -> [usize; 2] {
        let mut n = [0; 2];
        for &p in &self.port_assignment {
            n[Self::cdm_group(p)] += 1;
        }
        n
    }
}

/// Orthogonal DMRS of a whole scenario over the stacked layers.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthPilots {
    /// Port sequence of every layer; zero away from that layer's DMRS REs.
    pub pilots: Array3<Complex64>,
    /// DMRS REs of every layer's own port.
    pub support: Array3<bool>,
    /// Role mask shared by every layer.
    pub roles: Array2<ReRole>,
    pub layers_per_user: Vec<usize>,
    pub config: OrthDmrsConfig,
}

impl OrthPilots {
    pub fn build(cfg: OrthDmrsConfig, dims: GridDims, layers_per_user: &[usize]) -> Result<Self> {
        cfg.validate(dims)?;
        let total: usize = layers_per_user.iter().sum();
        if total != cfg.port_assignment.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} ports assigned for {total} layers",
                cfg.port_assignment.len()
            )));
        }
        let (nf, nt) = (dims.num_subcarriers, dims.num_symbols);
        let symbols = cfg.sorted_symbols();

        // Base QPSK sequence shared by all ports, one value per DMRS RE.
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.scrambling_seed);
        let mut base = Array2::from_elem((nf, nt), Complex64::new(0.0, 0.0));
        for &j in &symbols {
            for i in 0..nf {
                let q = rng.random_range(0..4u32) as f64;
                base[[i, j]] =
                    Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4 + std::f64::consts::FRAC_PI_2 * q);
            }
        }

        let mut roles = Array2::from_elem((nf, nt), ReRole::Data);
        let used = cfg.ports_per_group();
        for (g, &count) in used.iter().enumerate() {
            if count == 0 {
                continue;
            }
            for &j in &symbols {
                for i in (OrthDmrsConfig::comb_offset(g)..nf).step_by(2) {
                    roles[[i, j]] = ReRole::Dmrs;
                }
            }
        }

        let mut pilots = Array3::zeros((nf, nt, total));
        let mut support = Array3::from_elem((nf, nt, total), false);
        for (l, &port) in cfg.port_assignment.iter().enumerate() {
            let occ = OrthDmrsConfig::fd_occ(port);
            let offset = OrthDmrsConfig::comb_offset(OrthDmrsConfig::cdm_group(port));
            for &j in &symbols {
                for (m, i) in (offset..nf).step_by(2).enumerate() {
                    pilots[[i, j, l]] = base[[i, j]] * occ[m % 2];
                    support[[i, j, l]] = true;
                }
            }
        }
        Ok(OrthPilots {
            pilots,
            support,
            roles,
            layers_per_user: layers_per_user.to_vec(),
            config: cfg,
        })
    }

    pub fn dims(&self) -> GridDims {
        let (f, t) = self.roles.dim();
        GridDims::new(f, t)
    }

    pub fn layout(&self) -> DataLayout {
        DataLayout::from_roles(&self.roles)
    }

    pub fn layer_offset(&self, user: usize) -> usize {
        self.layers_per_user[..user].iter().sum()
    }

    pub fn dmrs_re_count(&self) -> usize {
        self.roles.iter().filter(|r| **r == ReRole::Dmrs).count()
    }
}

/// Transmit grid of `user`: data on data REs, port sequences on DMRS REs.
///
/// `symbols` are the user's data symbols in [`DataLayout`] order.
pub fn build_orthogonal_grid(symbols: &[Complex64], pilots: &OrthPilots, user: usize) -> Result<ResourceGrid> {
    let layers = pilots.layers_per_user[user];
    let off = pilots.layer_offset(user);
    let mut values = pilots.layout().place(symbols, layers)?;
    let (nf, nt, _) = values.dim();
    for l in 0..layers {
        for i in 0..nf {
            for j in 0..nt {
                if pilots.support[[i, j, off + l]] {
                    values[[i, j, l]] = pilots.pilots[[i, j, off + l]];
                }
            }
        }
    }
    Ok(ResourceGrid {
        values,
        roles: pilots.roles.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_layer_data_count() {
        let cfg = OrthDmrsConfig::default_for(1, 3).unwrap();
        let pilots = OrthPilots::build(cfg, GridDims::default(), &[1]).unwrap();
        // Counting oracle over the role mask.
        let mut dmrs = 0;
        for i in 0..72 {
            for j in 0..14 {
                if pilots.roles[[i, j]] == ReRole::Dmrs {
                    assert!(j == 2 || j == 11);
                    assert_eq!(i % 2, 0);
                    dmrs += 1;
                }
            }
        }
        assert_eq!(dmrs, 72);
        assert_eq!(pilots.layout().num_data_res(), 936);
    }

    #[test]
    fn two_cdm_groups_reserve_full_symbols() {
        let cfg = OrthDmrsConfig::default_for(2, 3).unwrap();
        let pilots = OrthPilots::build(cfg, GridDims::default(), &[2]).unwrap();
        assert_eq!(pilots.layout().num_data_res(), 72 * 12);
    }

    #[test]
    fn fd_occ_ports_orthogonal() {
        let cfg = OrthDmrsConfig::default_for(4, 8).unwrap();
        let pilots = OrthPilots::build(cfg, GridDims::default(), &[1, 1, 1, 1]).unwrap();
        // Ports 0 and 1 (layers 0, 1) over each CDM pair of group 0.
        for &j in &[2, 11] {
            for pair in 0..18 {
                let (i0, i1) = (4 * pair, 4 * pair + 2);
                let ip = pilots.pilots[[i0, j, 0]] * pilots.pilots[[i0, j, 1]].conj()
                    + pilots.pilots[[i1, j, 0]] * pilots.pilots[[i1, j, 1]].conj();
                assert!(ip.norm() < 1e-12);
            }
        }
        // Port 0 vs port 2: disjoint combs.
        let ip: Complex64 = (0..72)
            .map(|i| pilots.pilots[[i, 2, 0]] * pilots.pilots[[i, 2, 2]].conj())
            .sum();
        assert!(ip.norm() < 1e-12);
    }

    #[test]
    fn zero_dmrs_symbols_rejected() {
        let mut cfg = OrthDmrsConfig::default_for(1, 0).unwrap();
        cfg.dmrs_symbol_indices.clear();
        assert!(OrthPilots::build(cfg, GridDims::default(), &[1]).is_err());
    }

    #[test]
    fn port_collision_rejected() {
        let cfg = OrthDmrsConfig {
            dmrs_symbol_indices: vec![2],
            port_assignment: vec![0, 0],
            scrambling_seed: 0,
        };
        assert!(matches!(
            OrthPilots::build(cfg, GridDims::default(), &[1, 1]),
            Err(Error::PortCollision(0))
        ));
    }

    #[test]
    fn grid_has_no_data_on_dmrs() {
        let cfg = OrthDmrsConfig::default_for(2, 1).unwrap();
        let pilots = OrthPilots::build(cfg, GridDims::default(), &[1, 1]).unwrap();
        let nd = pilots.layout().num_data_res();
        let data = vec![Complex64::new(5.0, 5.0); nd];
        for user in 0..2 {
            let grid = build_orthogonal_grid(&data, &pilots, user).unwrap();
            for i in 0..72 {
                for j in 0..14 {
                    let v = grid.values[[i, j, 0]];
                    if grid.roles[[i, j]] == ReRole::Dmrs {
                        assert!((v.norm() - 1.0).abs() < 1e-12 || v.norm() == 0.0);
                    } else {
                        assert_eq!(v, Complex64::new(5.0, 5.0));
                    }
                }
            }
        }
    }
}
