//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use spatial_coding::channel::ChannelMatrix;
use spatial_coding::constellation::QpskVector;

pub const HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// `Φ = Π_i (Re z_i − Im z_i)(Re z_i + Im z_i)` with `z_i = (Hx)_i s_i*`,
/// computed straight from complex arithmetic. Returns `None` unless every
/// factor is positive.
pub fn direct_phi(h: &DMatrix<Complex64>, x: &[Complex64], s: &[Complex64]) -> (f64, bool) {
    let mut phi = 1.0;
    let mut positive = true;
    for i in 0..h.nrows() {
        let r: Complex64 = (0..h.ncols()).map(|n| h[(i, n)] * x[n]).sum();
        let z = r * s[i].conj();
        let (a, b) = (z.re - z.im, z.re + z.im);
        positive &= a > 0.0 && b > 0.0;
        phi *= a * b;
    }
    (phi, positive)
}

/// Largest `Φ` over a `pts`-per-axis grid of the box `[-1/√2, 1/√2]^{2N}`,
/// restricted to points with every margin positive.
pub fn grid_max_phi(h: &DMatrix<Complex64>, s: &QpskVector, pts: usize) -> f64 {
    let n = h.ncols();
    let dims = 2 * n;
    let axis: Vec<f64> = (0..pts)
        .map(|i| -HALF + 2.0 * HALF * i as f64 / (pts - 1) as f64)
        .collect();
    let s = s.values();
    let mut idx = vec![0usize; dims];
    let mut best = f64::NEG_INFINITY;
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    loop {
        for (k, xk) in x.iter_mut().enumerate() {
            *xk = Complex64::new(axis[idx[2 * k]], axis[idx[2 * k + 1]]);
        }
        let (phi, ok) = direct_phi(h, &x, &s);
        if ok && phi > best {
            best = phi;
        }
        let mut d = 0;
        loop {
            if d == dims {
                return best;
            }
            idx[d] += 1;
            if idx[d] < pts {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

pub fn random_channel<R: Rng>(
    rng: &mut R,
    users: usize,
    antennas: usize,
    tx: usize,
) -> ChannelMatrix {
    let h = DMatrix::from_fn(users * antennas, tx, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    ChannelMatrix::from_matrix(h, users, antennas, 0.0).unwrap()
}

pub fn random_qpsk<R: Rng>(rng: &mut R, len: usize) -> QpskVector {
    let labels: Vec<u8> = (0..len).map(|_| rng.random_range(0..4u8)).collect();
    QpskVector::from_labels(&labels).unwrap()
}

pub fn random_box<R: Rng>(rng: &mut R, len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|_| Complex64::new(rng.random_range(-HALF..HALF), rng.random_range(-HALF..HALF)))
        .collect()
}

/// 95% Wilson score interval of `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64) -> (f64, f64) {
    let z = 1.959_963_984_540_054;
    let n = n as f64;
    let p = k as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// First transmit power at which a BER curve falls to `target`, linear in
/// `log10 BER` between grid points. Zero-BER points count as below any target.
pub fn crossing_db(ptx_db: &[f64], ber: &[f64], target: f64) -> Option<f64> {
    let lg = |b: f64| if b > 0.0 { b.log10() } else { -12.0 };
    for i in 0..ptx_db.len() {
        if ber[i] <= target {
            if i == 0 {
                return Some(ptx_db[0]);
            }
            let (y0, y1) = (lg(ber[i - 1]), lg(ber[i]));
            let t = (target.log10() - y0) / (y1 - y0);
            return Some(ptx_db[i - 1] + t * (ptx_db[i] - ptx_db[i - 1]));
        }
    }
    None
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive single-user optimum: the `k`-subset with the largest summed
/// cost; among equal sums the lexicographically first subset.
pub fn best_subset(costs: &[f64], k: usize) -> Vec<usize> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for sub in subsets(costs.len(), k) {
        let total: f64 = sub.iter().map(|&i| costs[i]).sum();
        if best.as_ref().is_none_or(|(b, _)| total > *b) {
            best = Some((total, sub));
        }
    }
    best.unwrap().1
}
