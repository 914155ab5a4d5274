use ndarray::{Array2, Array3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scenario::GridDims;

/// What a resource element carries. Shared by every layer of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReRole {
    Data,
    Dmrs,
    Superimposed,
}

impl ReRole {
    pub fn carries_data(self) -> bool {
        matches!(self, ReRole::Data | ReRole::Superimposed)
    }
}

/// Transmit grid of one user, shape `(subcarrier, symbol, layer)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    pub values: Array3<Complex64>,
    pub roles: Array2<ReRole>,
}

impl ResourceGrid {
    pub fn dims(&self) -> GridDims {
        let (f, t, _) = self.values.dim();
        GridDims::new(f, t)
    }

    pub fn num_layers(&self) -> usize {
        self.values.dim().2
    }

    pub fn data_re_count(&self) -> usize {
        self.roles.iter().filter(|r| r.carries_data()).count()
    }
}

/// Order in which data symbols are written to a grid: OFDM symbol outermost,
/// then subcarrier, then layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataLayout {
    dims: GridDims,
    positions: Vec<(usize, usize)>,
}

impl DataLayout {
    pub fn from_roles(roles: &Array2<ReRole>) -> Self {
        let (nf, nt) = roles.dim();
        let mut positions = Vec::new();
        for j in 0..nt {
            for i in 0..nf {
                if roles[[i, j]].carries_data() {
                    positions.push((i, j));
                }
            }
        }
        DataLayout {
            dims: GridDims::new(nf, nt),
            positions,
        }
    }

    pub fn full(dims: GridDims) -> Self {
        DataLayout::from_roles(&Array2::from_elem(
            (dims.num_subcarriers, dims.num_symbols),
            ReRole::Data,
        ))
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    /// Number of data-carrying resource elements, N_d.
    pub fn num_data_res(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    /// Scatter `symbols` into a zero grid with `layers` layers.
    pub fn place(&self, symbols: &[Complex64], layers: usize) -> Result<Array3<Complex64>> {
        let expected = self.positions.len() * layers;
        if symbols.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} data symbols for {} data REs x {} layers",
                symbols.len(),
                self.positions.len(),
                layers
            )));
        }
        let mut grid = Array3::zeros((self.dims.num_subcarriers, self.dims.num_symbols, layers));
        let mut it = symbols.iter();
        for &(i, j) in &self.positions {
            for l in 0..layers {
                grid[[i, j, l]] = *it.next().expect("length checked");
            }
        }
        Ok(grid)
    }

    /// Inverse of [`DataLayout::place`].
    pub fn gather<T: Copy>(&self, grid: &Array3<T>) -> Vec<T> {
        let layers = grid.dim().2;
        let mut out = Vec::with_capacity(self.positions.len() * layers);
        for &(i, j) in &self.positions {
            for l in 0..layers {
                out.push(grid[[i, j, l]]);
            }
        }
        out
    }
}

/// Data/pilot superposition `x = sqrt(1 - E) d + sqrt(E) p`, elementwise.
pub fn superimpose(data: &Array3<Complex64>, pilots: &Array3<Complex64>, power_ratio: f64) -> Result<ResourceGrid> {
    if data.dim() != pilots.dim() {
        return Err(Error::ShapeMismatch(format!(
            "data {:?} vs pilots {:?}",
            data.dim(),
            pilots.dim()
        )));
    }
    if !(0.0..=1.0).contains(&power_ratio) {
        return Err(Error::InvalidConfig(format!(
            "power ratio {power_ratio} outside [0, 1]"
        )));
    }
    let a = (1.0 - power_ratio).sqrt();
    let b = power_ratio.sqrt();
    let mut values = data.mapv(|d| d * a);
    values.zip_mut_with(pilots, |x, &p| *x += p * b);
    let role = if power_ratio == 0.0 {
        ReRole::Data
    } else if power_ratio == 1.0 {
        ReRole::Dmrs
    } else {
        ReRole::Superimposed
    };
    let (nf, nt, _) = data.dim();
    Ok(ResourceGrid {
        values,
        roles: Array2::from_elem((nf, nt), role),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::Constellation;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn superimpose_limits() {
        let d = Array3::from_elem((2, 2, 1), c(0.3, -0.7));
        let p = Array3::from_elem((2, 2, 1), c(0.0, 1.0));
        assert_eq!(superimpose(&d, &p, 0.0).unwrap().values, d);
        assert_eq!(superimpose(&d, &p, 1.0).unwrap().values, p);
    }

    #[test]
    fn superimpose_quarter_power() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let d = Array3::from_elem((1, 1, 1), c(s, s));
        let p = Array3::from_elem((1, 1, 1), c(1.0, 0.0));
        let x = superimpose(&d, &p, 0.25).unwrap().values[[0, 0, 0]];
        // sqrt(0.75) * (1+j)/sqrt(2) + 0.5
        let expected = c(0.75f64.sqrt() * s + 0.5, 0.75f64.sqrt() * s);
        assert!((x - expected).norm() < 1e-12);
        assert!((x - c(1.1124, 0.6124)).norm() < 1e-4);
    }

    #[test]
    fn superimpose_shape_mismatch() {
        let d = Array3::<Complex64>::zeros((2, 2, 1));
        let p = Array3::<Complex64>::zeros((2, 2, 2));
        assert!(matches!(superimpose(&d, &p, 0.1), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn place_gather_round_trip() {
        let layout = DataLayout::full(GridDims::new(12, 3));
        let con = Constellation::new(16).unwrap();
        let syms: Vec<Complex64> = (0..72).map(|k| con.point(k % 16)).collect();
        let grid = layout.place(&syms, 2).unwrap();
        assert_eq!(layout.gather(&grid), syms);
        assert!(layout.place(&syms[1..], 2).is_err());
    }
}
