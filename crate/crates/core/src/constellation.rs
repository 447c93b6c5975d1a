//! QPSK constellation with Gray decimal labels, 1-bit quantization and the
//! box relaxation of the constellation.
//!
//! Label convention (quadrant → label):
//!
//! ```text
//!        Im
//!    1   |   0        (-1+j)/√2 → 1    (1+j)/√2 → 0
//!  ------+------ Re
//!    3   |   2        (-1-j)/√2 → 3    (1-j)/√2 → 2
//! ```
//!
//! Bit 0 of the label is the sign of the real part, bit 1 the sign of the
//! imaginary part, so quadrant neighbours differ in exactly one bit.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Half-width of the QPSK box, also the per-dimension amplitude of a symbol.
pub const BOX_HALF_WIDTH: f64 = FRAC_1_SQRT_2;

const POINTS: [Complex64; 4] = [
    Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    Complex64::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
];

// Label of j·s for each label of s.
const ROTATE_J: [u8; 4] = [1, 3, 0, 2];

/// Gray decimal label of a QPSK symbol, in `0..=3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GrayLabel(u8);

impl GrayLabel {
    pub fn new(label: u8) -> Result<Self> {
        if label < 4 {
            Ok(GrayLabel(label))
        } else {
            Err(Error::InvalidLabel(label))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// The two label bits, most significant first.
    pub fn bits(self) -> [u8; 2] {
        [(self.0 >> 1) & 1, self.0 & 1]
    }
}

/// A point of the unit-energy QPSK constellation.
///
/// Stored by label, so the complex value always comes from the fixed table
/// and has modulus exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QpskSymbol(GrayLabel);

impl QpskSymbol {
    pub const ALL: [QpskSymbol; 4] = [
        QpskSymbol(GrayLabel(0)),
        QpskSymbol(GrayLabel(1)),
        QpskSymbol(GrayLabel(2)),
        QpskSymbol(GrayLabel(3)),
    ];

    pub fn value(self) -> Complex64 {
        POINTS[self.0 .0 as usize]
    }

    pub fn label(self) -> GrayLabel {
        self.0
    }

    /// The symbol `j·s`.
    pub fn rotate_j(self) -> Self {
        QpskSymbol(GrayLabel(ROTATE_J[self.0 .0 as usize]))
    }

    /// Hard decision of a single sample, with `sign(0) = +1`.
    pub fn from_sign(z: Complex64) -> Self {
        let re_neg = (z.re < 0.0) as u8;
        let im_neg = (z.im < 0.0) as u8;
        QpskSymbol(GrayLabel(re_neg | (im_neg << 1)))
    }
}

impl fmt::Display for QpskSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0 .0)
    }
}

pub fn gray_encode(sym: QpskSymbol) -> GrayLabel {
    sym.label()
}

pub fn gray_decode(label: u8) -> Result<QpskSymbol> {
    GrayLabel::new(label).map(QpskSymbol)
}

/// A vector of QPSK symbols, e.g. the `K` symbols of one user or the stacked
/// `MK` symbols of all users.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QpskVector(Vec<QpskSymbol>);

impl QpskVector {
    pub fn new(symbols: Vec<QpskSymbol>) -> Self {
        QpskVector(symbols)
    }

    /// Builds a vector from Gray labels, first entry first.
    pub fn from_labels(labels: &[u8]) -> Result<Self> {
        labels
            .iter()
            .map(|&l| gray_decode(l))
            .collect::<Result<Vec<_>>>()
            .map(QpskVector)
    }

    /// Inverse of [`decimal_value`] for a vector of `len` symbols.
    pub fn from_decimal(mut value: usize, len: usize) -> Self {
        let mut symbols = Vec::with_capacity(len);
        for _ in 0..len {
            symbols.push(QpskSymbol(GrayLabel((value & 3) as u8)));
            value >>= 2;
        }
        QpskVector(symbols)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[QpskSymbol] {
        &self.0
    }

    pub fn labels(&self) -> Vec<u8> {
        self.0.iter().map(|s| s.label().value()).collect()
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.0.iter().map(|s| s.value()).collect()
    }

    pub fn rotate_j(&self) -> Self {
        QpskVector(self.0.iter().map(|s| s.rotate_j()).collect())
    }

    /// Splits a stacked vector into consecutive chunks of `k` symbols.
    pub fn split(&self, k: usize) -> Vec<QpskVector> {
        self.0.chunks(k).map(|c| QpskVector(c.to_vec())).collect()
    }

    pub fn concat(parts: &[QpskVector]) -> Self {
        QpskVector(parts.iter().flat_map(|p| p.0.iter().copied()).collect())
    }
}

/// `Σ_k 4^(k-1) · D_G(s_k)`, the base-4 number whose least significant digit
/// is the label of the first symbol.
pub fn decimal_value(s: &QpskVector) -> Result<usize> {
    if s.is_empty() {
        return Err(Error::EmptyVector);
    }
    Ok(decimal_unchecked(s.symbols()))
}

pub(crate) fn decimal_unchecked(symbols: &[QpskSymbol]) -> usize {
    symbols
        .iter()
        .rev()
        .fold(0usize, |acc, s| (acc << 2) | s.label().value() as usize)
}

/// Entrywise 1-bit quantizer `(sign(Re z) + j sign(Im z)) / √2`.
pub fn quantize(z: &[Complex64]) -> Result<QpskVector> {
    z.iter()
        .enumerate()
        .map(|(i, v)| {
            if v.re.is_nan() || v.im.is_nan() {
                Err(Error::NotANumber(i))
            } else {
                Ok(QpskSymbol::from_sign(*v))
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(QpskVector)
}

/// A transmit vector whose entries lie in the closed QPSK box
/// `|Re|, |Im| <= 1/√2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSignal(Vec<Complex64>);

impl BoxSignal {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        for (index, v) in entries.iter().enumerate() {
            if v.re.is_nan() || v.im.is_nan() {
                return Err(Error::NotANumber(index));
            }
            if v.re.abs() > BOX_HALF_WIDTH || v.im.abs() > BOX_HALF_WIDTH {
                return Err(Error::OutsideBox {
                    index,
                    value: format!("{v}"),
                });
            }
        }
        Ok(BoxSignal(entries))
    }

    pub(crate) fn from_clamped(entries: Vec<Complex64>) -> Self {
        debug_assert!(entries
            .iter()
            .all(|v| v.re.abs() <= BOX_HALF_WIDTH && v.im.abs() <= BOX_HALF_WIDTH));
        BoxSignal(entries)
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `j·x`. The box is invariant under quarter-turn rotations.
    pub fn rotate_j(&self) -> Self {
        BoxSignal(self.0.iter().map(|v| Complex64::new(-v.im, v.re)).collect())
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }
}

fn clamp_box(v: f64) -> f64 {
    v.clamp(-BOX_HALF_WIDTH, BOX_HALF_WIDTH)
}

/// Clamps real and imaginary parts independently onto the QPSK box.
pub fn project_box(z: &[Complex64]) -> Result<BoxSignal> {
    z.iter()
        .enumerate()
        .map(|(i, v)| {
            if v.re.is_nan() || v.im.is_nan() {
                Err(Error::NotANumber(i))
            } else {
                Ok(Complex64::new(clamp_box(v.re), clamp_box(v.im)))
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(BoxSignal)
}

/// A relabeling of the four quadrants that keeps the Gray property: labels
/// at Hamming distance one stay at distance one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LabelMap([u8; 4]);

impl LabelMap {
    pub const IDENTITY: LabelMap = LabelMap([0, 1, 2, 3]);

    /// `map[l]` is the new label of the quadrant with label `l`.
    pub fn new(map: [u8; 4]) -> Result<Self> {
        let mut seen = [false; 4];
        for &v in &map {
            if v > 3 || std::mem::replace(&mut seen[v as usize], true) {
                return Err(Error::InvalidParameter(format!(
                    "label map {map:?} is not a permutation"
                )));
            }
        }
        for a in 0..4 {
            for b in 0..4 {
                if (map[a] ^ map[b]).count_ones() != (a ^ b).count_ones() {
                    return Err(Error::InvalidParameter(format!(
                        "label map {map:?} breaks the Gray property"
                    )));
                }
            }
        }
        Ok(LabelMap(map))
    }

    pub fn apply(self, label: u8) -> u8 {
        self.0[label as usize]
    }

    /// Decimal value of `s` under the relabeled constellation.
    pub fn decimal(self, s: &QpskVector) -> usize {
        s.symbols().iter().rev().fold(0, |acc, sym| {
            acc * 4 + self.apply(sym.label().value()) as usize
        })
    }
}
