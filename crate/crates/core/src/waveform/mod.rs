//! Transmit side: symbol mapping, pilot fields and resource grids.

mod constellation;
mod grid;
mod orth_dmrs;
mod si_dmrs;

pub use constellation::{label_bits, Constellation};
pub use grid::{superimpose, DataLayout, ReRole, ResourceGrid};
pub use orth_dmrs::{build_orthogonal_grid, OrthDmrsConfig, OrthPilots, NUM_PORTS};
pub use si_dmrs::{build_si_dmrs, walsh_hadamard, SiDmrsConfig, SiPilots};

/// Pilot layout of a slot, covering every user.
#[derive(Debug, Clone, PartialEq)]
pub enum PilotPattern {
    Superimposed(SiPilots),
    Orthogonal(OrthPilots),
    /// No pilots; receivers need genie CSI.
    None,
}

impl PilotPattern {
    pub fn scheme_name(&self) -> &'static str {
        match self {
            PilotPattern::Superimposed(_) => "superimposed",
            PilotPattern::Orthogonal(_) => "orthogonal",
            PilotPattern::None => "genie_csi",
        }
    }
}
