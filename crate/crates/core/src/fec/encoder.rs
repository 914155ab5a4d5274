//! Systematic encoding from an arbitrary parity-check matrix.

/// Dense GF(2) row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BitRow(Vec<u64>);

impl BitRow {
    pub(crate) fn zeros(n: usize) -> Self {
        BitRow(vec![0; n.div_ceil(64)])
    }

    pub(crate) fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub(crate) fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }

    fn dot(&self, other: &BitRow) -> u8 {
        let ones: u32 = self.0.iter().zip(&other.0).map(|(a, b)| (a & b).count_ones()).sum();
        (ones & 1) as u8
    }
}

/// Encoder derived from the reduced row-echelon form of `H`.
///
/// Pivot columns carry parity; the first `n - m` non-pivot columns carry the
/// information bits. When `H` is rank deficient the leftover free columns are
/// held at zero so the information length stays `n - m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystematicEncoder {
    n: usize,
    info_positions: Vec<usize>,
    /// `(pivot column, reduced row)`; the row is zero on every other pivot.
    pivots: Vec<(usize, BitRow)>,
}

impl SystematicEncoder {
    pub fn new(n: usize, check_to_vars: &[Vec<usize>]) -> Self {
        let m = check_to_vars.len();
        let mut rows: Vec<BitRow> = check_to_vars
            .iter()
            .map(|vars| {
                let mut r = BitRow::zeros(n);
                for &v in vars {
                    // Repeated entries cancel over GF(2).
                    r.0[v / 64] ^= 1 << (v % 64);
                }
                r
            })
            .collect();

        let mut pivot_cols = Vec::new();
        let mut rank = 0;
        // Scan from the right so parity tends to sit at the end of the word.
        for col in (0..n).rev() {
            if rank == m {
                break;
            }
            let Some(p) = (rank..m).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row.get(col) {
                    row.xor_assign(&pivot);
                }
            }
            pivot_cols.push(col);
            rank += 1;
        }
        rows.truncate(rank);

        let mut is_pivot = vec![false; n];
        for &c in &pivot_cols {
            is_pivot[c] = true;
        }
        let info_positions: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).take(n - m).collect();
        let pivots = pivot_cols.into_iter().zip(rows).collect();
        SystematicEncoder {
            n,
            info_positions,
            pivots,
        }
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn encode(&self, info: &[u8]) -> Vec<u8> {
        debug_assert_eq!(info.len(), self.info_positions.len());
        let mut word = BitRow::zeros(self.n);
        for (&pos, &b) in self.info_positions.iter().zip(info) {
            if b & 1 == 1 {
                word.set(pos);
            }
        }
        let mut out: Vec<u8> = (0..self.n).map(|i| word.get(i) as u8).collect();
        for (col, row) in &self.pivots {
            out[*col] = row.dot(&word);
        }
        out
    }

    pub fn extract_info(&self, codeword: &[u8]) -> Vec<u8> {
        self.info_positions.iter().map(|&p| codeword[p]).collect()
    }
}
