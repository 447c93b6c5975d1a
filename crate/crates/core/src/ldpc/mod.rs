//! Binary LDPC codes: parity-check matrix, systematic encoder and
//! sum-product decoder.

mod alist;
mod decoder;
mod peg;

pub use alist::{load_alist, parse_alist, save_alist, write_alist};
pub use decoder::{decode, DecodeOutcome, DecoderConfig};
pub use peg::{construct_code, PegConfig};

use crate::error::{Error, Result};

/// A binary linear code given by a sparse parity-check matrix, with a
/// systematic encoder derived by Gaussian elimination over GF(2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdpcCode {
    n: usize,
    /// Column indices of each parity check.
    checks: Vec<Vec<usize>>,
    /// Row indices of each variable node.
    vars: Vec<Vec<usize>>,
    info_positions: Vec<usize>,
    parity_positions: Vec<usize>,
    // One packed mask over the information bits per parity position.
    parity_masks: Vec<Vec<u64>>,
}

fn words(bits: usize) -> usize {
    bits.div_ceil(64)
}

impl LdpcCode {
    /// Builds a code from the column indices of every check. The column lists
    /// of the variable nodes are derived in row order.
    pub fn from_checks(n: usize, checks: Vec<Vec<usize>>) -> Result<Self> {
        let mut vars = vec![Vec::new(); n];
        for (r, row) in checks.iter().enumerate() {
            for &c in row {
                if c >= n {
                    return Err(Error::Shape(format!(
                        "check {r} references column {c} >= {n}"
                    )));
                }
                vars[c].push(r);
            }
        }
        Self::from_lists(n, checks, vars)
    }

    /// Builds a code from matching row and column adjacency lists; the order
    /// of each list is preserved.
    pub(crate) fn from_lists(
        n: usize,
        checks: Vec<Vec<usize>>,
        vars: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if n == 0 || checks.is_empty() {
            return Err(Error::Shape("empty parity-check matrix".into()));
        }
        let m = checks.len();
        let mut dense = vec![vec![0u64; words(n)]; m];
        for (r, row) in checks.iter().enumerate() {
            for &c in row {
                if c >= n {
                    return Err(Error::Shape(format!(
                        "check {r} references column {c} >= {n}"
                    )));
                }
                if dense[r][c / 64] >> (c % 64) & 1 == 1 {
                    return Err(Error::Shape(format!("duplicate entry ({r}, {c})")));
                }
                dense[r][c / 64] |= 1 << (c % 64);
            }
        }

        // Reduced row echelon form; pivot columns carry parity bits.
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..n {
            let (w, b) = (col / 64, col % 64);
            let Some(p) = (rank..m).find(|&r| dense[r][w] >> b & 1 == 1) else {
                continue;
            };
            dense.swap(rank, p);
            let pivot_row = dense[rank].clone();
            for (r, row) in dense.iter_mut().enumerate() {
                if r != rank && row[w] >> b & 1 == 1 {
                    row.iter_mut().zip(&pivot_row).for_each(|(a, p)| *a ^= p);
                }
            }
            pivots.push(col);
            rank += 1;
            if rank == m {
                break;
            }
        }
        let mut is_pivot = vec![false; n];
        pivots.iter().for_each(|&p| is_pivot[p] = true);
        let info_positions: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let k = info_positions.len();
        let parity_masks = dense[..rank]
            .iter()
            .map(|row| {
                let mut mask = vec![0u64; words(k)];
                for (i, &c) in info_positions.iter().enumerate() {
                    if row[c / 64] >> (c % 64) & 1 == 1 {
                        mask[i / 64] |= 1 << (i % 64);
                    }
                }
                mask
            })
            .collect();

        Ok(LdpcCode {
            n,
            checks,
            vars,
            info_positions,
            parity_positions: pivots,
            parity_masks,
        })
    }

    /// Block length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Information length `n - rank(H)`.
    pub fn k(&self) -> usize {
        self.info_positions.len()
    }

    /// Number of parity checks (rows of `H`), including dependent ones.
    pub fn m(&self) -> usize {
        self.checks.len()
    }

    pub fn rank(&self) -> usize {
        self.parity_positions.len()
    }

    /// Rows of `H` that are linearly dependent on the others.
    pub fn rank_deficiency(&self) -> usize {
        self.m() - self.rank()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n as f64
    }

    pub fn checks(&self) -> &[Vec<usize>] {
        &self.checks
    }

    pub fn vars(&self) -> &[Vec<usize>] {
        &self.vars
    }

    /// Codeword positions holding the information bits, ascending.
    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn edge_count(&self) -> usize {
        self.checks.iter().map(Vec::len).sum()
    }

    /// `H · cᵀ` over GF(2) is zero.
    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        bits.len() == self.n
            && self
                .checks
                .iter()
                .all(|row| row.iter().fold(0u8, |acc, &c| acc ^ bits[c]) & 1 == 0)
    }

    /// Number of unsatisfied checks.
    pub fn syndrome_weight(&self, bits: &[u8]) -> usize {
        self.checks
            .iter()
            .filter(|row| row.iter().fold(0u8, |acc, &c| acc ^ bits[c]) & 1 == 1)
            .count()
    }

    /// Systematic encoding: information bits go to [`Self::info_positions`],
    /// parity bits are solved from the reduced parity-check matrix.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k() {
            return Err(Error::Shape(format!(
                "{} information bits for a code with k = {}",
                info.len(),
                self.k()
            )));
        }
        let mut packed = vec![0u64; words(info.len())];
        for (i, &b) in info.iter().enumerate() {
            packed[i / 64] |= ((b & 1) as u64) << (i % 64);
        }
        let mut out = vec![0u8; self.n];
        for (&pos, &b) in self.info_positions.iter().zip(info) {
            out[pos] = b & 1;
        }
        for (&pos, mask) in self.parity_positions.iter().zip(&self.parity_masks) {
            let ones: u32 = mask
                .iter()
                .zip(&packed)
                .map(|(m, p)| (m & p).count_ones())
                .sum();
            out[pos] = (ones & 1) as u8;
        }
        Ok(out)
    }

    /// Information bits of a codeword (or hard decision).
    pub fn extract_info(&self, bits: &[u8]) -> Vec<u8> {
        self.info_positions.iter().map(|&p| bits[p]).collect()
    }

    /// Number of length-4 cycles, i.e. pairs of columns sharing two or more
    /// rows, counted per shared row pair.
    pub fn four_cycle_count(&self) -> usize {
        let mut count = 0;
        for row in &self.checks {
            for (i, &a) in row.iter().enumerate() {
                for &b in &row[i + 1..] {
                    // other rows containing both a and b
                    count += self.vars[a]
                        .iter()
                        .filter(|&&r| self.vars[b].contains(&r))
                        .count()
                        - 1;
                }
            }
        }
        count / 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hamming() -> LdpcCode {
        LdpcCode::from_checks(
            7,
            vec![vec![0, 1, 2, 4], vec![1, 2, 3, 5], vec![0, 2, 3, 6]],
        )
        .unwrap()
    }

    #[test]
    fn hamming_dimensions() {
        let code = hamming();
        assert_eq!((code.n(), code.k(), code.rank()), (7, 4, 3));
        assert_eq!(code.four_cycle_count(), 3);
    }

    #[test]
    fn encode_all_messages() {
        let code = hamming();
        for msg in 0..16u8 {
            let info: Vec<u8> = (0..4).map(|i| (msg >> i) & 1).collect();
            let cw = code.encode(&info).unwrap();
            assert!(code.is_codeword(&cw));
            assert_eq!(code.extract_info(&cw), info);
        }
        assert_eq!(code.encode(&[0; 4]).unwrap(), vec![0; 7]);
        assert!(code.encode(&[0; 3]).is_err());
    }

    #[test]
    fn dependent_rows_reduce_rank() {
        let code =
            LdpcCode::from_checks(4, vec![vec![0, 1], vec![2, 3], vec![0, 1, 2, 3]]).unwrap();
        assert_eq!(code.rank(), 2);
        assert_eq!(code.rank_deficiency(), 1);
        assert_eq!(code.k(), 2);
        let cw = code.encode(&[1, 1]).unwrap();
        assert!(code.is_codeword(&cw));
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(LdpcCode::from_checks(3, vec![vec![0, 3]]).is_err());
        assert!(LdpcCode::from_checks(3, vec![vec![0, 0]]).is_err());
        assert!(LdpcCode::from_checks(3, vec![]).is_err());
    }
}
