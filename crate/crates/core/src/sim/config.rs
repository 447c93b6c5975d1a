use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constellation::LabelMap;
use crate::error::{Error, Result};
use crate::ldpc::{construct_code, load_alist, LdpcCode};
use crate::precoder::{SolverOptions, MAX_LUT_RX_DIM};

const RATE_EPS: f64 = 1e-9;

/// Transmit powers of the desk profile; spans both waterfalls of the
/// 64-antenna, two-user, two-antenna setup.
pub const DESK_PTX_DB: [f64; 8] = [-20.0, -15.0, -10.0, -7.5, -5.0, -2.5, 0.0, 5.0];

fn default_name() -> String {
    "sweep".into()
}
fn default_bp_iters() -> usize {
    20
}
fn default_crossover() -> f64 {
    0.05
}
fn default_pilot_uses() -> usize {
    64
}
fn default_n() -> usize {
    256
}
fn default_ldpc_seed() -> u64 {
    1
}

/// LDPC code selection: a seeded PEG construction or an alist file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdpcSpec {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alist: Option<PathBuf>,
    /// Seed of the PEG construction.
    #[serde(default = "default_ldpc_seed")]
    pub seed: u64,
}

impl Default for LdpcSpec {
    fn default() -> Self {
        LdpcSpec {
            n: default_n(),
            rate: Some(0.375),
            alist: None,
            seed: default_ldpc_seed(),
        }
    }
}

impl LdpcSpec {
    pub fn build(&self) -> Result<LdpcCode> {
        match (&self.alist, self.rate) {
            (Some(path), _) => {
                let code = load_alist(path)?;
                if code.n() != self.n {
                    return Err(Error::Config(format!(
                        "alist {} has n = {}, config says {}",
                        path.display(),
                        code.n(),
                        self.n
                    )));
                }
                Ok(code)
            }
            (None, Some(rate)) => construct_code(self.n, rate, self.seed),
            (None, None) => Err(Error::Config("ldpc needs either `rate` or `alist`".into())),
        }
    }
}

/// Optional overrides of the precoder solver defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub phase1_iters: Option<usize>,
}

impl SolverSection {
    pub fn options(&self) -> SolverOptions {
        let mut o = SolverOptions::default();
        if let Some(v) = self.max_iters {
            o.max_iters = v;
        }
        if let Some(v) = self.tol {
            o.tol = v;
        }
        if let Some(v) = self.phase1_iters {
            o.phase1_iters = v;
        }
        o
    }
}

/// One BER-vs-transmit-power sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Transmit antennas `N`.
    pub tx_antennas: usize,
    /// Users `M`.
    pub users: usize,
    /// Receive antennas per user `K`.
    pub antennas: usize,
    /// Receive correlation factor of each user's antennas.
    pub rho: f64,
    /// Transmit powers in dB.
    pub ptx_db: Vec<f64>,
    /// Selected inputs per user `L'_m` (powers of two, at least 2).
    pub subset_sizes: Vec<usize>,
    #[serde(default)]
    pub ldpc: LdpcSpec,
    #[serde(default = "default_bp_iters")]
    pub bp_iters: usize,
    /// BSC crossover for the decoder LLRs.
    #[serde(default = "default_crossover")]
    pub crossover: f64,
    /// Estimate the crossover per block and power point from pilot uses.
    #[serde(default)]
    pub estimate_crossover: bool,
    #[serde(default = "default_pilot_uses")]
    pub pilot_uses: usize,
    /// Coherence blocks (independent channel draws).
    pub blocks: usize,
    /// Information bits per user and power point.
    pub bits_per_user: u64,
    /// LDPC codewords per user per block; derived from `bits_per_user` when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codewords_per_block: Option<usize>,
    pub seed: u64,
    /// Expected total rate `r_m = r_LDPC · r_SC,m` of every user.
    pub total_rate: f64,
    #[serde(default)]
    pub solver: SolverSection,
    /// Gray-preserving quadrant relabeling applied when ordering codebooks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_map: Option<[u8; 4]>,
}

impl SweepConfig {
    /// Desk-scale profile of the two-user, two-antenna, 64-antenna downlink
    /// with total rate 3/8.
    pub fn desk_profile(rho: f64, sc_rate: f64) -> Result<Self> {
        let mut cfg = SweepConfig {
            name: "sweep".into(),
            tx_antennas: 64,
            users: 2,
            antennas: 2,
            rho,
            ptx_db: DESK_PTX_DB.to_vec(),
            subset_sizes: vec![16, 16],
            ldpc: LdpcSpec::default(),
            bp_iters: 20,
            crossover: default_crossover(),
            estimate_crossover: false,
            pilot_uses: default_pilot_uses(),
            blocks: 200,
            bits_per_user: 100_000,
            codewords_per_block: None,
            seed: 1,
            total_rate: 0.375,
            solver: SolverSection::default(),
            label_map: None,
        };
        cfg.set_sc_rate(sc_rate)?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        // alist paths are relative to the config file
        if let (Some(alist), Some(dir)) = (&cfg.ldpc.alist, path.parent()) {
            if alist.is_relative() {
                cfg.ldpc.alist = Some(dir.join(alist));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Sets every user's subset size for spatial coding rate `r`
    /// (`L' = 2^(2K r)`) and, for constructed codes, the LDPC rate that keeps
    /// the total rate.
    pub fn set_sc_rate(&mut self, r: f64) -> Result<()> {
        let bits = 2.0 * self.antennas as f64 * r;
        if !(r > 0.0 && r <= 1.0) || (bits - bits.round()).abs() > RATE_EPS {
            return Err(Error::Config(format!(
                "spatial coding rate {r} is not a whole number of bits for K = {}",
                self.antennas
            )));
        }
        self.subset_sizes = vec![1usize << bits.round() as u32; self.users];
        if self.ldpc.alist.is_none() {
            self.ldpc.rate = Some(self.total_rate / r);
        }
        Ok(())
    }

    /// `log2(L'_m) / (2K)` per user.
    pub fn sc_rates(&self) -> Vec<f64> {
        self.subset_sizes
            .iter()
            .map(|&l| l.trailing_zeros() as f64 / (2 * self.antennas) as f64)
            .collect()
    }

    /// Mean spatial coding rate over users.
    pub fn sc_rate(&self) -> f64 {
        let r = self.sc_rates();
        r.iter().sum::<f64>() / r.len().max(1) as f64
    }

    /// Structural checks that do not need the LDPC code.
    pub fn validate(&self) -> Result<()> {
        let mk = self.users * self.antennas;
        let fail = |msg: String| Err(Error::Config(msg));
        if self.users == 0 || self.antennas == 0 {
            return fail("users and antennas must be >= 1".into());
        }
        if mk > MAX_LUT_RX_DIM {
            return fail(format!(
                "MK = {mk} exceeds the lookup-table cap {MAX_LUT_RX_DIM}"
            ));
        }
        if self.tx_antennas < mk {
            return fail(format!("N = {} < MK = {mk}", self.tx_antennas));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return fail(format!("rho = {} outside [0, 1]", self.rho));
        }
        if self.ptx_db.is_empty() || self.ptx_db.iter().any(|p| p.is_nan()) {
            return fail("ptx_db must list at least one transmit power".into());
        }
        if self.subset_sizes.len() != self.users {
            return fail(format!(
                "{} subset sizes for {} users",
                self.subset_sizes.len(),
                self.users
            ));
        }
        let per_user = 1usize << (2 * self.antennas);
        for &l in &self.subset_sizes {
            if l < 2 || !l.is_power_of_two() || l > per_user {
                return fail(format!(
                    "subset size {l} must be a power of two in 2..={per_user}"
                ));
            }
        }
        if self.blocks == 0 || self.bits_per_user == 0 {
            return fail("blocks and bits_per_user must be >= 1".into());
        }
        if self.codewords_per_block == Some(0) {
            return fail("codewords_per_block must be >= 1".into());
        }
        if !(self.crossover > 0.0 && self.crossover < 0.5) {
            return fail(format!("crossover {} outside (0, 0.5)", self.crossover));
        }
        if self.estimate_crossover && self.pilot_uses == 0 {
            return fail("pilot_uses must be >= 1 when estimating the crossover".into());
        }
        if let Some(map) = self.label_map {
            LabelMap::new(map)?;
        }
        self.solver.options().validate()
    }

    /// `r_LDPC · r_SC,m = r_m` for every user.
    pub fn check_rates(&self, ldpc_rate: f64) -> Result<()> {
        for (m, r_sc) in self.sc_rates().iter().enumerate() {
            let total = ldpc_rate * r_sc;
            if (total - self.total_rate).abs() > RATE_EPS {
                return Err(Error::Config(format!(
                    "user {}: r_LDPC {ldpc_rate} x r_SC {r_sc} = {total} != declared total rate {}",
                    m + 1,
                    self.total_rate
                )));
            }
        }
        Ok(())
    }

    pub fn codewords_per_block(&self, k: usize) -> usize {
        self.codewords_per_block.unwrap_or_else(|| {
            let per_block = self.bits_per_user.div_ceil(self.blocks as u64);
            per_block.div_ceil(k as u64).max(1) as usize
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_profile_rates() {
        let cfg = SweepConfig::desk_profile(0.8, 0.5).unwrap();
        assert_eq!(cfg.subset_sizes, vec![4, 4]);
        assert_eq!(cfg.ldpc.rate, Some(0.75));
        cfg.validate().unwrap();
        cfg.check_rates(0.75).unwrap();
        assert!(cfg.check_rates(0.375).is_err());

        let cfg = SweepConfig::desk_profile(0.8, 0.75).unwrap();
        assert_eq!(cfg.subset_sizes, vec![8, 8]);
        assert_eq!(cfg.ldpc.rate, Some(0.5));
        assert!(SweepConfig::desk_profile(0.8, 0.3).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = SweepConfig::desk_profile(0.2, 1.0).unwrap();
        let text = cfg.to_toml_string();
        assert_eq!(SweepConfig::from_toml_str(&text).unwrap(), cfg);
        assert!(SweepConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn validation() {
        let base = SweepConfig::desk_profile(0.2, 1.0).unwrap();
        let mut c = base.clone();
        c.subset_sizes = vec![3, 4];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.tx_antennas = 3;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.users = 5;
        c.subset_sizes = vec![4; 5];
        assert!(c.validate().is_err());
        let mut c = base;
        c.rho = 1.5;
        assert!(c.validate().is_err());
    }

    #[test]
    fn codewords_per_block() {
        let cfg = SweepConfig::desk_profile(0.2, 1.0).unwrap();
        // 100000 / 200 = 500 bits per block, k = 96 → 6 codewords
        assert_eq!(cfg.codewords_per_block(96), 6);
        assert_eq!(cfg.codewords_per_block(192), 3);
    }
}
