//! Correlated Rayleigh block-fading channel and AWGN generation.
//!
//! Each user has `K` receive antennas correlated by `ρ`; different users are
//! uncorrelated. With users stacked as contiguous blocks of `K` rows the
//! receive correlation is `I_M ⊗ ((1-ρ) I_K + ρ 1_K)`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Deterministic generator used for every random stream of the simulator.
pub type SimRng = ChaCha12Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed, a stream tag and
/// an index path, so work units can run in any order.
pub fn derive_seed(base: u64, stream: u64, path: &[u64]) -> u64 {
    let mut h = splitmix64(base ^ splitmix64(stream));
    for &p in path {
        h = splitmix64(h ^ splitmix64(p.wrapping_add(0x51_7cc1_b727_220a)));
    }
    h
}

/// Draws one circularly-symmetric `CN(0, 1)` sample.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `I_M ⊗ ((1-ρ) I_K + ρ 1_K)`.
pub fn receive_correlation(users: usize, antennas: usize, rho: f64) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!(
            "correlation factor {rho} outside [0, 1]"
        )));
    }
    if users == 0 || antennas == 0 {
        return Err(Error::Shape("users and antennas must be >= 1".into()));
    }
    let mk = users * antennas;
    Ok(DMatrix::from_fn(mk, mk, |i, j| {
        if i / antennas != j / antennas {
            0.0
        } else if i == j {
            1.0
        } else {
            rho
        }
    }))
}

/// Symmetric PSD square root through the eigendecomposition. Negative
/// eigenvalues from round-off are clamped to zero, so singular `R` (ρ = 1)
/// is fine.
pub fn psd_sqrt(r: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(r.clone());
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&sqrt_vals) * v.transpose()
}

/// One coherence-block realization of the `MK × N` downlink channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    h: DMatrix<Complex64>,
    rho: f64,
    users: usize,
    antennas: usize,
}

impl ChannelMatrix {
    /// Wraps an explicit matrix. `h` must have `users·antennas` rows.
    pub fn from_matrix(
        h: DMatrix<Complex64>,
        users: usize,
        antennas: usize,
        rho: f64,
    ) -> Result<Self> {
        if users == 0 || antennas == 0 || h.nrows() != users * antennas || h.ncols() == 0 {
            return Err(Error::Shape(format!(
                "channel is {}x{}, expected {} rows",
                h.nrows(),
                h.ncols(),
                users * antennas
            )));
        }
        if h.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite channel entry".into()));
        }
        Ok(ChannelMatrix {
            h,
            rho,
            users,
            antennas,
        })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// Number of receive dimensions `MK`.
    pub fn rx_dim(&self) -> usize {
        self.h.nrows()
    }

    /// Number of transmit antennas `N`.
    pub fn tx_dim(&self) -> usize {
        self.h.ncols()
    }

    /// `H x` for a transmit vector of length `N`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(x.len(), self.tx_dim());
        (0..self.rx_dim())
            .map(|i| {
                self.h
                    .row(i)
                    .iter()
                    .zip(x)
                    .fold(Complex64::new(0.0, 0.0), |acc, (h, x)| acc + h * x)
            })
            .collect()
    }

    /// Channel scaled by a real factor, used by scale-equivariance checks.
    pub fn scaled(&self, c: f64) -> Self {
        ChannelMatrix {
            h: self.h.map(|v| v * c),
            ..self.clone()
        }
    }
}

/// Draws `H = R^{1/2} H_w` with i.i.d. `CN(0,1)` entries in `H_w`.
pub fn draw_channel(
    users: usize,
    antennas: usize,
    tx: usize,
    rho: f64,
    seed: u64,
) -> Result<ChannelMatrix> {
    let mk = users * antennas;
    if mk == 0 || tx < mk {
        return Err(Error::Shape(format!(
            "need N >= MK >= 1, got N = {tx}, MK = {mk}"
        )));
    }
    let root =
        psd_sqrt(&receive_correlation(users, antennas, rho)?).map(|v| Complex64::new(v, 0.0));
    let mut rng = rng_from_seed(seed);
    // row-major draw order keeps the stream layout independent of nalgebra storage
    let mut hw = DMatrix::<Complex64>::zeros(mk, tx);
    for i in 0..mk {
        for n in 0..tx {
            hw[(i, n)] = complex_gaussian(&mut rng);
        }
    }
    ChannelMatrix::from_matrix(root * hw, users, antennas, rho)
}

/// `rows × count` matrix of i.i.d. `CN(0, 1)` noise samples.
pub fn draw_noise(rows: usize, count: usize, seed: u64) -> Result<DMatrix<Complex64>> {
    if rows == 0 || count == 0 {
        return Err(Error::Shape("noise dimensions must be >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut out = DMatrix::<Complex64>::zeros(rows, count);
    for c in 0..count {
        for r in 0..rows {
            out[(r, c)] = complex_gaussian(&mut rng);
        }
    }
    Ok(out)
}
