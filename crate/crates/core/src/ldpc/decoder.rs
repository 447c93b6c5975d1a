//! Flooding sum-product decoding from hard decisions.

use super::LdpcCode;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    pub max_iterations: usize,
    /// BSC crossover probability used to turn hard bits into LLRs.
    pub crossover: f64,
    /// Stop as soon as the hard decision satisfies every check.
    pub early_stop: bool,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            max_iterations: 20,
            crossover: 0.05,
            early_stop: true,
        }
    }
}

impl DecoderConfig {
    /// Magnitude of the channel LLR, `ln((1-p)/p)`.
    pub fn llr_magnitude(&self) -> f64 {
        let p = self.crossover.clamp(1e-12, 0.5 - 1e-12);
        ((1.0 - p) / p).ln()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub info_bits: Vec<u8>,
    /// Hard decision over the full codeword after the last iteration.
    pub codeword: Vec<u8>,
    pub converged: bool,
    /// Iterations run; 0 when the input already satisfied every check.
    pub iterations: usize,
}

const MAX_TANH: f64 = 1.0 - 1e-12;

/// Decodes `n` hard bits with channel LLRs `(1 - 2y) ln((1-p)/p)`.
///
/// # Panics
///
/// If `hard_bits.len() != code.n()`.
pub fn decode(hard_bits: &[u8], cfg: &DecoderConfig, code: &LdpcCode) -> DecodeOutcome {
    assert_eq!(hard_bits.len(), code.n(), "decoder input length");
    let mag = cfg.llr_magnitude();
    let channel: Vec<f64> = hard_bits
        .iter()
        .map(|&b| if b & 1 == 0 { mag } else { -mag })
        .collect();

    let mut hard: Vec<u8> = hard_bits.iter().map(|b| b & 1).collect();
    if code.is_codeword(&hard) && cfg.early_stop {
        return DecodeOutcome {
            info_bits: code.extract_info(&hard),
            codeword: hard,
            converged: true,
            iterations: 0,
        };
    }

    // Edges are numbered in check order; var_edges lists them per variable.
    let checks = code.checks();
    let mut edge_var = Vec::with_capacity(code.edge_count());
    let mut check_start = Vec::with_capacity(checks.len() + 1);
    for row in checks {
        check_start.push(edge_var.len());
        edge_var.extend_from_slice(row);
    }
    check_start.push(edge_var.len());
    let mut var_edges = vec![Vec::new(); code.n()];
    for (e, &v) in edge_var.iter().enumerate() {
        var_edges[v].push(e);
    }

    let mut v2c: Vec<f64> = edge_var.iter().map(|&v| channel[v]).collect();
    let mut c2v = vec![0.0; edge_var.len()];
    let mut prefix = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=cfg.max_iterations {
        iterations = it;
        for w in check_start.windows(2) {
            let (start, end) = (w[0], w[1]);
            let t: Vec<f64> = v2c[start..end].iter().map(|m| (m / 2.0).tanh()).collect();
            // exclusive products via prefix and suffix sweeps
            prefix.clear();
            let mut acc = 1.0;
            for &x in &t {
                prefix.push(acc);
                acc *= x;
            }
            let mut suffix = 1.0;
            for i in (0..t.len()).rev() {
                let p = (prefix[i] * suffix).clamp(-MAX_TANH, MAX_TANH);
                c2v[start + i] = 2.0 * p.atanh();
                suffix *= t[i];
            }
        }
        for (v, edges) in var_edges.iter().enumerate() {
            let total = channel[v] + edges.iter().map(|&e| c2v[e]).sum::<f64>();
            for &e in edges {
                v2c[e] = total - c2v[e];
            }
            hard[v] = (total < 0.0) as u8;
        }
        if code.is_codeword(&hard) {
            converged = true;
            if cfg.early_stop {
                break;
            }
        } else {
            converged = false;
        }
    }
    if cfg.max_iterations == 0 {
        converged = code.is_codeword(&hard);
    }

    DecodeOutcome {
        info_bits: code.extract_info(&hard),
        codeword: hard,
        converged,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::construct_code;

    #[test]
    fn clean_codeword_stops_immediately() {
        let code = construct_code(64, 0.5, 2).unwrap();
        let info: Vec<u8> = (0..code.k()).map(|i| (i % 3 == 0) as u8).collect();
        let cw = code.encode(&info).unwrap();
        let out = decode(&cw, &DecoderConfig::default(), &code);
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.info_bits, info);
    }

    #[test]
    fn corrects_one_flip() {
        let code = construct_code(64, 0.5, 2).unwrap();
        let cw = code.encode(&vec![0; code.k()]).unwrap();
        let mut rx = cw.clone();
        rx[5] ^= 1;
        let out = decode(&rx, &DecoderConfig::default(), &code);
        assert!(out.converged);
        assert_eq!(out.codeword, cw);
        assert!(out.iterations >= 1);
    }

    #[test]
    fn llr_magnitude() {
        let cfg = DecoderConfig {
            crossover: 0.1,
            ..Default::default()
        };
        assert!((cfg.llr_magnitude() - 9f64.ln()).abs() < 1e-12);
    }
}
