//! Regular LDPC codes: construction, systematic encoding and min-sum decoding.
//!
//! LLR convention, used everywhere in the crate: `L = ln(P(b = 0) / P(b = 1))`,
//! so a positive LLR favours a zero bit.

mod decoder;
mod encoder;
mod peg;

use std::fmt::Write as _;
use std::ops::Range;

pub use decoder::{DecodeOutput, MinSumDecoder, LLR_INPUT_LIMIT};
pub use encoder::SystematicEncoder;
pub use peg::{has_four_cycle, regular_peg};

use crate::error::{Error, Result};
use crate::scenario::CodeRate;

pub const DEFAULT_BP_ITERATIONS: usize = 25;
pub const DEFAULT_NORMALIZATION: f64 = 0.75;
pub const DEFAULT_VAR_DEGREE: usize = 3;

/// Longest block for which the construction insists on girth of at least six.
pub const GIRTH_CHECK_MAX_N: usize = 2048;

/// A binary LDPC code defined by a sparse parity-check matrix.
#[derive(Debug, Clone)]
pub struct CodeSpec {
    n: usize,
    check_offsets: Vec<usize>,
    edge_var: Vec<usize>,
    var_edges: Vec<Vec<usize>>,
    pub max_bp_iterations: usize,
    pub normalization_factor: f64,
    encoder: SystematicEncoder,
}

impl CodeSpec {
    /// Code from explicit check rows (variable indices of each check).
    pub fn from_checks(n: usize, checks: Vec<Vec<usize>>) -> Result<Self> {
        if checks.is_empty() {
            return Err(Error::InvalidConfig("parity-check matrix has no rows".into()));
        }
        let mut var_edges = vec![Vec::new(); n];
        let mut check_offsets = Vec::with_capacity(checks.len() + 1);
        let mut edge_var = Vec::new();
        check_offsets.push(0);
        for (c, row) in checks.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::InvalidConfig(format!("check {c} is an empty row")));
            }
            for (k, &v) in row.iter().enumerate() {
                if v >= n {
                    return Err(Error::InvalidConfig(format!(
                        "check {c} references variable {v} >= {n}"
                    )));
                }
                if row[..k].contains(&v) {
                    return Err(Error::InvalidConfig(format!("check {c} lists variable {v} twice")));
                }
                var_edges[v].push(edge_var.len());
                edge_var.push(v);
            }
            check_offsets.push(edge_var.len());
        }
        if let Some(v) = var_edges.iter().position(Vec::is_empty) {
            return Err(Error::InvalidConfig(format!("variable {v} is an empty column")));
        }
        let encoder = SystematicEncoder::new(n, &checks);
        Ok(CodeSpec {
            n,
            check_offsets,
            edge_var,
            var_edges,
            max_bp_iterations: DEFAULT_BP_ITERATIONS,
            normalization_factor: DEFAULT_NORMALIZATION,
            encoder,
        })
    }

    /// `(var_degree, check_degree)`-regular code of length `n` built by
    /// progressive edge growth. For `n <= 2048` seeds are retried until the
    /// graph is free of 4-cycles.
    pub fn regular(n: usize, var_degree: usize, check_degree: usize, seed: u64) -> Result<Self> {
        if n == 0 || !(n * var_degree).is_multiple_of(check_degree) || check_degree <= var_degree {
            return Err(Error::InvalidConfig(format!(
                "no ({var_degree},{check_degree})-regular code of length {n}"
            )));
        }
        let m = n * var_degree / check_degree;
        const ATTEMPTS: u64 = 64;
        for attempt in 0..ATTEMPTS {
            let s = seed.wrapping_add(attempt.wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let Some(var_adj) = regular_peg(n, var_degree, check_degree, s) else {
                continue;
            };
            if n <= GIRTH_CHECK_MAX_N && has_four_cycle(&var_adj, m) {
                continue;
            }
            let mut checks = vec![Vec::with_capacity(check_degree); m];
            for (v, cs) in var_adj.iter().enumerate() {
                for &c in cs {
                    checks[c].push(v);
                }
            }
            return CodeSpec::from_checks(n, checks);
        }
        Err(Error::InvalidConfig(format!(
            "progressive edge growth failed for n = {n} after {ATTEMPTS} seeds"
        )))
    }

    /// Check degree giving `rate` with the default variable degree.
    pub fn check_degree_for(rate: CodeRate) -> Result<usize> {
        let (num, den) = (rate.num as usize, rate.den as usize);
        if num >= den {
            return Err(Error::InvalidConfig(format!(
                "rate {rate} leaves no room for parity checks"
            )));
        }
        let dv = DEFAULT_VAR_DEGREE;
        if !(dv * den).is_multiple_of(den - num) {
            return Err(Error::InvalidConfig(format!(
                "rate {rate} is not reachable with column weight {dv}"
            )));
        }
        Ok(dv * den / (den - num))
    }

    /// Longest regular code at `rate` that fits into `capacity_bits`.
    pub fn for_capacity(capacity_bits: usize, rate: CodeRate, seed: u64) -> Result<Self> {
        let dc = CodeSpec::check_degree_for(rate)?;
        let n = capacity_bits / dc * dc;
        CodeSpec::regular(n, DEFAULT_VAR_DEGREE, dc, seed)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.check_offsets.len() - 1
    }

    /// Information bits per block.
    pub fn k(&self) -> usize {
        self.n - self.m()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n as f64
    }

    pub fn num_edges(&self) -> usize {
        self.edge_var.len()
    }

    fn edge_range(&self, check: usize) -> Range<usize> {
        self.check_offsets[check]..self.check_offsets[check + 1]
    }

    pub fn check_vars(&self, check: usize) -> &[usize] {
        &self.edge_var[self.edge_range(check)]
    }

    pub fn var_checks(&self, var: usize) -> Vec<usize> {
        // Edges are laid out in check order, so binary search the offsets.
        self.var_edges[var]
            .iter()
            .map(|&e| self.check_offsets.partition_point(|&o| o <= e) - 1)
            .collect()
    }

    pub fn info_positions(&self) -> &[usize] {
        self.encoder.info_positions()
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k() {
            return Err(Error::InfoLength {
                got: info.len(),
                expected: self.k(),
            });
        }
        Ok(self.encoder.encode(info))
    }

    pub fn syndrome_ok(&self, word: &[u8]) -> bool {
        (0..self.m()).all(|c| self.check_vars(c).iter().fold(0u8, |a, &v| a ^ (word[v] & 1)) == 0)
    }

    pub fn decode(&self, llrs: &[f64]) -> DecodeOutput {
        MinSumDecoder::new(self).decode(llrs, self.max_bp_iterations)
    }

    /// MacKay alist text.
    pub fn to_alist(&self) -> String {
        let m = self.m();
        let col_checks: Vec<Vec<usize>> = (0..self.n).map(|v| self.var_checks(v)).collect();
        let max_col = col_checks.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = (0..m).map(|c| self.check_vars(c).len()).max().unwrap_or(0);
        let mut s = String::new();
        let join = |it: &mut dyn Iterator<Item = usize>| it.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "{} {}", self.n, m);
        let _ = writeln!(s, "{max_col} {max_row}");
        let _ = writeln!(s, "{}", join(&mut col_checks.iter().map(Vec::len)));
        let _ = writeln!(s, "{}", join(&mut (0..m).map(|c| self.check_vars(c).len())));
        for cs in &col_checks {
            let mut row: Vec<usize> = cs.iter().map(|c| c + 1).collect();
            row.resize(max_col, 0);
            let _ = writeln!(s, "{}", join(&mut row.into_iter()));
        }
        for c in 0..m {
            let mut row: Vec<usize> = self.check_vars(c).iter().map(|v| v + 1).collect();
            row.resize(max_row, 0);
            let _ = writeln!(s, "{}", join(&mut row.into_iter()));
        }
        s
    }

    /// Parse MacKay alist text. Check rows come from the row section.
    pub fn from_alist(text: &str) -> Result<Self> {
        let bad = |detail: String| Error::Parse { what: "alist", detail };
        let mut nums = text
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| bad(format!("not an integer: {t:?}"))));
        let mut next = || nums.next().unwrap_or_else(|| Err(bad("truncated file".into())));
        let n = next()?;
        let m = next()?;
        let max_col = next()?;
        let max_row = next()?;
        let col_deg: Vec<usize> = (0..n).map(|_| next()).collect::<Result<_>>()?;
        let row_deg: Vec<usize> = (0..m).map(|_| next()).collect::<Result<_>>()?;
        for _ in 0..n * max_col {
            next()?;
        }
        let mut checks = Vec::with_capacity(m);
        for (c, &deg) in row_deg.iter().enumerate() {
            let entries: Vec<usize> = (0..max_row).map(|_| next()).collect::<Result<_>>()?;
            let vars: Vec<usize> = entries.iter().filter(|&&x| x > 0).map(|x| x - 1).collect();
            if vars.len() != deg {
                return Err(bad(format!("row {c} lists {} entries, degree {deg}", vars.len())));
            }
            checks.push(vars);
        }
        let code = CodeSpec::from_checks(n, checks)?;
        for (v, &deg) in col_deg.iter().enumerate() {
            if code.var_edges[v].len() != deg {
                return Err(bad(format!("column {v} degree disagrees with row section")));
            }
        }
        Ok(code)
    }
}
