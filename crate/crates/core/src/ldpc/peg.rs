//! Progressive edge-growth construction of parity-check matrices.

use rand::seq::IndexedRandom;

use super::LdpcCode;
use crate::channel::{derive_seed, rng_from_seed, SimRng};
use crate::error::{Error, Result};

const RANK_ATTEMPTS: u64 = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PegConfig {
    /// Block length (columns).
    pub n: usize,
    /// Parity checks (rows).
    pub m: usize,
    /// Column weight of every variable node.
    pub var_degree: usize,
}

impl PegConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.m >= self.n {
            return Err(Error::Construction(format!(
                "need 0 < m < n, got n = {}, m = {}",
                self.n, self.m
            )));
        }
        if self.var_degree == 0 || self.var_degree > self.m {
            return Err(Error::Construction(format!(
                "column weight {} infeasible with {} checks",
                self.var_degree, self.m
            )));
        }
        Ok(())
    }

    /// Runs one PEG pass and returns the column indices of every check.
    pub fn run(&self, seed: u64) -> Result<Vec<Vec<usize>>> {
        self.validate()?;
        let mut peg = Peg {
            checks: vec![Vec::new(); self.m],
            vars: vec![Vec::new(); self.n],
            rng: rng_from_seed(seed),
        };
        for v in 0..self.n {
            for e in 0..self.var_degree {
                let c = if e == 0 {
                    peg.lowest_degree(&(0..self.m).collect::<Vec<_>>())
                } else {
                    let cands = peg.far_checks(v);
                    peg.lowest_degree(&cands)
                };
                peg.vars[v].push(c);
                peg.checks[c].push(v);
            }
        }
        for row in &mut peg.checks {
            row.sort_unstable();
        }
        Ok(peg.checks)
    }
}

struct Peg {
    checks: Vec<Vec<usize>>,
    vars: Vec<Vec<usize>>,
    rng: SimRng,
}

impl Peg {
    fn lowest_degree(&mut self, candidates: &[usize]) -> usize {
        let min = candidates
            .iter()
            .map(|&c| self.checks[c].len())
            .min()
            .expect("candidate set is never empty");
        let best: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&c| self.checks[c].len() == min)
            .collect();
        *best.choose(&mut self.rng).unwrap()
    }

    /// Checks not yet connected to `v` that are farthest from it in the
    /// current graph: either unreachable ones, or those first reached at the
    /// deepest level of the breadth-first expansion.
    fn far_checks(&self, v: usize) -> Vec<usize> {
        let m = self.checks.len();
        let mut reached = vec![false; m];
        let mut seen_var = vec![false; self.vars.len()];
        seen_var[v] = true;
        let mut frontier: Vec<usize> = self.vars[v].clone();
        frontier.iter().for_each(|&c| reached[c] = true);
        let mut n_reached = frontier.len();
        loop {
            let mut next = Vec::new();
            for &c in &frontier {
                for &u in &self.checks[c] {
                    if seen_var[u] {
                        continue;
                    }
                    seen_var[u] = true;
                    for &c2 in &self.vars[u] {
                        if !reached[c2] && !next.contains(&c2) {
                            next.push(c2);
                        }
                    }
                }
            }
            if next.is_empty() || n_reached + next.len() == m {
                return (0..m).filter(|&c| !reached[c]).collect();
            }
            next.iter().for_each(|&c| reached[c] = true);
            n_reached += next.len();
            frontier = next;
        }
    }
}

/// Constructs a column-weight-3 PEG code of length `n` and design rate
/// `rate`. Seeds derived from `seed` are tried in turn until the matrix has
/// full row rank; if none does, the last matrix is returned with `k` taken
/// from its actual rank.
pub fn construct_code(n: usize, rate: f64, seed: u64) -> Result<LdpcCode> {
    let k_design = n as f64 * rate;
    if !(rate > 0.0 && rate < 1.0) || (k_design - k_design.round()).abs() > 1e-9 {
        return Err(Error::Construction(format!(
            "n * rate = {k_design} is not an integer information length in (0, n)"
        )));
    }
    let m = n - k_design.round() as usize;
    let cfg = PegConfig {
        n,
        m,
        var_degree: 3.min(m),
    };
    let mut last = None;
    for attempt in 0..RANK_ATTEMPTS {
        let checks = cfg.run(derive_seed(seed, 0x9e6, &[attempt]))?;
        let code = LdpcCode::from_checks(n, checks)?;
        if code.rank_deficiency() == 0 {
            return Ok(code);
        }
        last = Some(code);
    }
    Ok(last.expect("at least one attempt"))
}
