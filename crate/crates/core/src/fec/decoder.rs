//! Normalized min-sum belief propagation with a flooding schedule.

use super::CodeSpec;

/// Largest magnitude an input LLR is allowed to carry.
pub const LLR_INPUT_LIMIT: f64 = 1.0e4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutput {
    pub info_bits: Vec<u8>,
    /// Hard decision on the full codeword.
    pub codeword: Vec<u8>,
    /// Decoding stopped early on a zero syndrome.
    pub converged: bool,
    /// The final hard decision satisfies every parity check.
    pub parity_ok: bool,
    pub iterations: usize,
}

/// Per-decode message buffers.
#[derive(Debug, Clone)]
pub struct MinSumDecoder<'a> {
    code: &'a CodeSpec,
    channel: Vec<f64>,
    check_to_var: Vec<f64>,
    var_to_check: Vec<f64>,
    posterior: Vec<f64>,
    hard: Vec<u8>,
}

impl<'a> MinSumDecoder<'a> {
    pub fn new(code: &'a CodeSpec) -> Self {
        let edges = code.num_edges();
        MinSumDecoder {
            code,
            channel: vec![0.0; code.n()],
            check_to_var: vec![0.0; edges],
            var_to_check: vec![0.0; edges],
            posterior: vec![0.0; code.n()],
            hard: vec![0; code.n()],
        }
    }

    fn syndrome_ok(&self) -> bool {
        let code = self.code;
        (0..code.m()).all(|c| code.edge_range(c).fold(0u8, |acc, e| acc ^ self.hard[code.edge_var[e]]) == 0)
    }

    fn harden(&mut self) {
        for (h, &p) in self.hard.iter_mut().zip(&self.posterior) {
            *h = (p < 0.0) as u8;
        }
    }

    /// Decode `llrs` (positive favours bit 0) in at most `max_iterations`.
    pub fn decode(&mut self, llrs: &[f64], max_iterations: usize) -> DecodeOutput {
        let code = self.code;
        assert_eq!(llrs.len(), code.n(), "LLR count must equal the block length");
        for (dst, &l) in self.channel.iter_mut().zip(llrs) {
            *dst = if l.is_nan() {
                0.0
            } else {
                l.clamp(-LLR_INPUT_LIMIT, LLR_INPUT_LIMIT)
            };
        }
        self.posterior.copy_from_slice(&self.channel);
        self.harden();
        let mut iterations = 0;
        let mut converged = self.syndrome_ok();

        if !converged {
            for e in 0..code.num_edges() {
                self.var_to_check[e] = self.channel[code.edge_var[e]];
            }
        }
        let alpha = code.normalization_factor;
        while !converged && iterations < max_iterations {
            iterations += 1;
            // Check update.
            for c in 0..code.m() {
                let range = code.edge_range(c);
                let mut min1 = f64::INFINITY;
                let mut min2 = f64::INFINITY;
                let mut min_edge = usize::MAX;
                let mut sign_neg = false;
                for e in range.clone() {
                    let v = self.var_to_check[e];
                    sign_neg ^= v < 0.0;
                    let a = v.abs();
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        min_edge = e;
                    } else if a < min2 {
                        min2 = a;
                    }
                }
                for e in range {
                    let mag = if e == min_edge { min2 } else { min1 };
                    let neg = sign_neg ^ (self.var_to_check[e] < 0.0);
                    self.check_to_var[e] = if neg { -alpha * mag } else { alpha * mag };
                }
            }
            // Variable update.
            for v in 0..code.n() {
                let edges = &code.var_edges[v];
                let total = self.channel[v] + edges.iter().map(|&e| self.check_to_var[e]).sum::<f64>();
                self.posterior[v] = total;
                for &e in edges {
                    self.var_to_check[e] = total - self.check_to_var[e];
                }
            }
            self.harden();
            converged = self.syndrome_ok();
        }
        let parity_ok = converged || self.syndrome_ok();
        DecodeOutput {
            info_bits: code.encoder.extract_info(&self.hard),
            codeword: self.hard.clone(),
            converged,
            parity_ok,
            iterations,
        }
    }
}
