//! Spatial coding: per-user subset selection on the lookup-table costs,
//! codebooks with positional bit labels, and the mapping between coded bit
//! blocks and input vectors.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::constellation::{decimal_unchecked, decimal_value, BoxSignal, LabelMap, QpskVector};
use crate::error::{Error, Result};
use crate::precoder::LookupTable;

/// Costs `Φ` arranged by the per-user decimal values `(ℓ_1, ..., ℓ_M)`.
///
/// The flat index is `Σ_m ℓ_m · (4^K)^{m-1}`, which is also the lookup-table
/// column of the stacked input vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiTable {
    users: usize,
    antennas: usize,
    values: Vec<f64>,
}

impl PhiTable {
    pub fn new(users: usize, antennas: usize, values: Vec<f64>) -> Result<Self> {
        if users == 0 || antennas == 0 || 2 * users * antennas >= usize::BITS as usize {
            return Err(Error::Shape(format!("{users} users x {antennas} antennas")));
        }
        let expected = 1usize << (2 * users * antennas);
        if values.len() != expected {
            return Err(Error::Shape(format!(
                "cost table has {} entries, expected {expected}",
                values.len()
            )));
        }
        Ok(PhiTable {
            users,
            antennas,
            values,
        })
    }

    pub fn from_lut(lut: &LookupTable) -> Self {
        PhiTable {
            users: lut.users(),
            antennas: lut.antennas(),
            values: lut.costs().to_vec(),
        }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// `L_m = 4^K`.
    pub fn per_user(&self) -> usize {
        1 << (2 * self.antennas)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, multi: &[usize]) -> f64 {
        self.values[self.flat(multi)]
    }

    pub fn flat(&self, multi: &[usize]) -> usize {
        let base = self.per_user();
        multi.iter().rev().fold(0, |acc, &l| acc * base + l)
    }

    /// Per-user decimal value of user `m` in a flat index.
    pub fn coordinate(&self, flat: usize, m: usize) -> usize {
        (flat >> (2 * self.antennas * m)) & (self.per_user() - 1)
    }
}

/// The selected input vectors of one user, sorted by decimal value, with the
/// position of each vector as its bit word.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetCodebook {
    antennas: usize,
    entries: Vec<QpskVector>,
    decimals: Vec<usize>,
    width: usize,
    position: HashMap<usize, usize>,
    // For every possible received vector: position of the closest entry.
    decode_table: Vec<usize>,
}

impl SubsetCodebook {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// Bits carried per channel use, `log2(L'_m)`.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn entries(&self) -> &[QpskVector] {
        &self.entries
    }

    /// Decimal values of the entries in codebook order (ascending unless the
    /// codebook was built with a relabeled constellation).
    pub fn decimals(&self) -> &[usize] {
        &self.decimals
    }

    /// `log2(L'_m) / log2(4^K)`.
    pub fn rate(&self) -> f64 {
        self.width as f64 / (2 * self.antennas) as f64
    }

    pub fn contains_decimal(&self, d: usize) -> bool {
        self.position.contains_key(&d)
    }

    pub fn position_of(&self, s: &QpskVector) -> Option<usize> {
        decimal_value(s)
            .ok()
            .and_then(|d| self.position.get(&d).copied())
    }

    /// Codebook entry for a word value.
    pub fn codeword(&self, word: usize) -> &QpskVector {
        &self.entries[word]
    }

    /// The `width` bits of a word, most significant first.
    pub fn word_bits(&self, word: usize) -> Vec<u8> {
        (0..self.width)
            .rev()
            .map(|b| ((word >> b) & 1) as u8)
            .collect()
    }

    /// Text dump: `user <m>: <decimal>=<bits> ...`.
    pub fn dump(&self, user: usize) -> String {
        let mut out = format!("user {user}:");
        for (pos, d) in self.decimals.iter().enumerate() {
            let bits: String = self
                .word_bits(pos)
                .iter()
                .map(|b| char::from(b'0' + b))
                .collect();
            let _ = write!(out, " {d}={}", if bits.is_empty() { "-" } else { &bits });
        }
        out
    }
}

/// Sorts a set of input vectors and labels each with the binary word of its
/// position.
pub fn build_codebook(set: &[QpskVector]) -> Result<SubsetCodebook> {
    build_codebook_labeled(set, LabelMap::IDENTITY)
}

/// Like [`build_codebook`], with entries ordered by their decimal value under
/// a relabeled constellation. Decoding ties go to the smaller relabeled
/// value.
pub fn build_codebook_labeled(set: &[QpskVector], labels: LabelMap) -> Result<SubsetCodebook> {
    if set.is_empty() || !set.len().is_power_of_two() {
        return Err(Error::NotPowerOfTwo(set.len()));
    }
    let antennas = set[0].len();
    if antennas == 0 {
        return Err(Error::EmptyVector);
    }
    if set.iter().any(|s| s.len() != antennas) {
        return Err(Error::Shape("codebook vectors differ in length".into()));
    }
    let mut pairs: Vec<(usize, QpskVector)> =
        set.iter().map(|s| (labels.decimal(s), s.clone())).collect();
    pairs.sort_by_key(|(d, _)| *d);
    if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateVector(decimal_unchecked(w[0].1.symbols())));
    }
    let entries: Vec<QpskVector> = pairs.into_iter().map(|(_, s)| s).collect();
    let decimals: Vec<usize> = entries
        .iter()
        .map(|s| decimal_unchecked(s.symbols()))
        .collect();
    let position = decimals.iter().enumerate().map(|(p, &d)| (d, p)).collect();

    // Gray labels pack two bits per symbol into the decimal value, so the
    // Gray-bit Hamming distance of two vectors is the popcount of the XOR of
    // their decimal values; Gray-preserving relabelings keep that distance.
    // Ties resolve to the first position.
    let decode_table = (0..1usize << (2 * antennas))
        .map(|rx| {
            decimals
                .iter()
                .enumerate()
                .min_by_key(|(p, &d)| ((rx ^ d).count_ones(), *p))
                .map(|(p, _)| p)
                .unwrap()
        })
        .collect();

    Ok(SubsetCodebook {
        antennas,
        width: set.len().trailing_zeros() as usize,
        entries,
        decimals,
        position,
        decode_table,
    })
}

fn build_codebook_from_decimals(decimals: &[usize], antennas: usize) -> Result<SubsetCodebook> {
    let set: Vec<QpskVector> = decimals
        .iter()
        .map(|&d| QpskVector::from_decimal(d, antennas))
        .collect();
    build_codebook(&set)
}

/// Indices of the `count` largest scores; ties go to the smaller index.
/// The result is sorted ascending.
fn top_k(scores: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(count);
    idx.sort_unstable();
    idx
}

fn check_subset_size(l_prime: usize, available: usize) -> Result<()> {
    if !l_prime.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(l_prime));
    }
    if l_prime > available {
        return Err(Error::InvalidParameter(format!(
            "subset size {l_prime} exceeds the {available} available inputs"
        )));
    }
    Ok(())
}

/// Single-user selection: the `L'` inputs with the largest costs.
pub fn select_subset_su(lut: &LookupTable, l_prime: usize) -> Result<SubsetCodebook> {
    if lut.users() != 1 {
        return Err(Error::InvalidParameter(format!(
            "single-user selection on a {}-user table",
            lut.users()
        )));
    }
    select_from_costs(lut.costs(), lut.antennas(), l_prime)
}

/// Single-user selection on a bare cost vector indexed by decimal value.
pub fn select_from_costs(costs: &[f64], antennas: usize, l_prime: usize) -> Result<SubsetCodebook> {
    if antennas == 0 || costs.len() != 1usize << (2 * antennas) {
        return Err(Error::Shape(format!(
            "{} costs for {antennas} antennas",
            costs.len()
        )));
    }
    check_subset_size(l_prime, costs.len())?;
    build_codebook_from_decimals(&top_k(costs, l_prime), antennas)
}

/// Per-user average costs of user `m` over the current candidate sets of the
/// other users.
pub fn user_averages(phi: &PhiTable, allowed: &[Vec<bool>], m: usize) -> Vec<f64> {
    let per_user = phi.per_user();
    let mut sums = vec![0.0; per_user];
    let mut counts = vec![0usize; per_user];
    'cells: for (flat, &v) in phi.values().iter().enumerate() {
        for (j, mask) in allowed.iter().enumerate() {
            if j != m && !mask[phi.coordinate(flat, j)] {
                continue 'cells;
            }
        }
        let l = phi.coordinate(flat, m);
        sums[l] += v;
        counts[l] += 1;
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect()
}

/// Multi-user successive selection: user by user, keep the `L'_m` inputs with
/// the best average cost over the already selected sets of earlier users and
/// the full sets of later users.
pub fn select_subsets_mu(phi: &PhiTable, l_primes: &[usize]) -> Result<Vec<SubsetCodebook>> {
    if phi.users() < 2 || l_primes.len() != phi.users() {
        return Err(Error::Shape(format!(
            "{} subset sizes for a {}-user table",
            l_primes.len(),
            phi.users()
        )));
    }
    let per_user = phi.per_user();
    for &l in l_primes {
        check_subset_size(l, per_user)?;
    }
    let mut allowed = vec![vec![true; per_user]; phi.users()];
    let mut books = Vec::with_capacity(phi.users());
    for (m, &l_prime) in l_primes.iter().enumerate() {
        let averages = user_averages(phi, &allowed, m);
        let chosen = top_k(&averages, l_prime);
        allowed[m] = vec![false; per_user];
        for &c in &chosen {
            allowed[m][c] = true;
        }
        books.push(build_codebook_from_decimals(&chosen, phi.antennas())?);
    }
    Ok(books)
}

/// Runs single- or multi-user selection depending on the table.
pub fn select_subsets(lut: &LookupTable, l_primes: &[usize]) -> Result<Vec<SubsetCodebook>> {
    if lut.users() == 1 {
        let [l] = l_primes else {
            return Err(Error::Shape("one subset size per user".into()));
        };
        Ok(vec![select_subset_su(lut, *l)?])
    } else {
        select_subsets_mu(&PhiTable::from_lut(lut), l_primes)
    }
}

/// Maps one block of `width` coded bits (most significant first) to its
/// input vector.
pub fn spatial_encode(bits: &[u8], cb: &SubsetCodebook) -> Result<QpskVector> {
    if bits.len() != cb.width() {
        return Err(Error::Shape(format!(
            "bit block of {} bits for a {}-bit codebook",
            bits.len(),
            cb.width()
        )));
    }
    let word = bits
        .iter()
        .fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
    Ok(cb.codeword(word).clone())
}

/// Position of the codebook entry closest in Gray-bit Hamming distance to a
/// received vector.
pub fn spatial_decode_word(s_hat: &QpskVector, cb: &SubsetCodebook) -> usize {
    debug_assert_eq!(s_hat.len(), cb.antennas());
    cb.decode_table[decimal_unchecked(s_hat.symbols())]
}

pub fn spatial_decode(s_hat: &QpskVector, cb: &SubsetCodebook) -> Vec<u8> {
    cb.word_bits(spatial_decode_word(s_hat, cb))
}

/// The columns of the lookup table reachable from the selected product set.
#[derive(Debug, Clone)]
pub struct SubLut<'a> {
    lut: &'a LookupTable,
    books: &'a [SubsetCodebook],
}

impl<'a> SubLut<'a> {
    pub fn new(lut: &'a LookupTable, books: &'a [SubsetCodebook]) -> Result<Self> {
        if books.len() != lut.users() || books.iter().any(|b| b.antennas() != lut.antennas()) {
            return Err(Error::Shape(
                "codebooks do not match the lookup table".into(),
            ));
        }
        Ok(SubLut { lut, books })
    }

    /// `L' = Π_m L'_m`.
    pub fn len(&self) -> usize {
        self.books.iter().map(|b| b.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lookup-table column indices of the product set, in ascending order.
    pub fn column_indices(&self) -> Vec<usize> {
        let k2 = 2 * self.lut.antennas();
        let mut out = vec![0usize];
        for (m, book) in self.books.iter().enumerate() {
            out = out
                .iter()
                .flat_map(|&base| book.decimals().iter().map(move |&d| base | (d << (k2 * m))))
                .collect();
        }
        out.sort_unstable();
        out
    }

    /// Mean cost over the selected product set.
    pub fn mean_cost(&self) -> f64 {
        let idx = self.column_indices();
        idx.iter().map(|&i| self.lut.cost(i)).sum::<f64>() / idx.len() as f64
    }

    /// Columns of the product set that were infeasible in the full table.
    pub fn infeasible_count(&self) -> usize {
        self.column_indices()
            .into_iter()
            .filter(|&i| self.lut.is_infeasible(i))
            .count()
    }

    /// Transmit vector (and its cost) for a stacked input vector.
    pub fn map_to_transmit(&self, s: &QpskVector) -> Result<(&'a BoxSignal, f64)> {
        let k = self.lut.antennas();
        if s.len() != k * self.books.len() {
            return Err(Error::Shape(format!(
                "input vector has {} symbols, expected {}",
                s.len(),
                k * self.books.len()
            )));
        }
        let index = decimal_unchecked(s.symbols());
        for (part, book) in s.symbols().chunks(k).zip(self.books) {
            if !book.contains_decimal(decimal_unchecked(part)) {
                return Err(Error::NotSelected(index));
            }
        }
        Ok((self.lut.column(index), self.lut.cost(index)))
    }
}

/// Column lookup of `s` in the sub-table spanned by `books`.
pub fn map_to_transmit<'a>(
    s: &QpskVector,
    lut: &'a LookupTable,
    books: &'a [SubsetCodebook],
) -> Result<&'a BoxSignal> {
    SubLut::new(lut, books)?.map_to_transmit(s).map(|(x, _)| x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(labels: &[u8]) -> QpskVector {
        QpskVector::from_labels(labels).unwrap()
    }

    fn user1_set() -> Vec<QpskVector> {
        vec![v(&[2, 3]), v(&[0, 2]), v(&[1, 0]), v(&[3, 1])]
    }

    #[test]
    fn worked_example_codebooks() {
        let cb1 = build_codebook(&user1_set()).unwrap();
        assert_eq!(cb1.decimals(), &[1, 7, 8, 14]);
        let expect1 = [[1, 0], [3, 1], [0, 2], [2, 3]];
        for (word, labels) in expect1.iter().enumerate() {
            assert_eq!(cb1.codeword(word).labels(), labels.to_vec());
        }
        assert_eq!(cb1.word_bits(1), vec![0, 1]);
        assert_eq!(cb1.rate(), 0.5);

        let cb2 = build_codebook(&[v(&[3, 3]), v(&[0, 0]), v(&[2, 2]), v(&[1, 1])]).unwrap();
        for (word, l) in (0u8..4).enumerate() {
            assert_eq!(cb2.codeword(word).labels(), vec![l, l]);
        }
        assert_eq!(cb2.dump(2), "user 2: 0=00 5=01 10=10 15=11");
    }

    #[test]
    fn codebook_errors() {
        assert!(matches!(
            build_codebook(&[v(&[0]), v(&[1]), v(&[2])]),
            Err(Error::NotPowerOfTwo(3))
        ));
        assert!(matches!(
            build_codebook(&[v(&[1, 0]), v(&[1, 0])]),
            Err(Error::DuplicateVector(1))
        ));
        assert!(build_codebook(&[]).is_err());
    }

    #[test]
    fn singleton_codebook() {
        let cb = build_codebook(&[v(&[2, 1])]).unwrap();
        assert_eq!(cb.width(), 0);
        assert_eq!(spatial_encode(&[], &cb).unwrap(), v(&[2, 1]));
        assert!(spatial_decode(&v(&[0, 0]), &cb).is_empty());
    }

    #[test]
    fn encode_examples() {
        let cb1 = build_codebook(&user1_set()).unwrap();
        assert_eq!(spatial_encode(&[0, 1], &cb1).unwrap(), v(&[3, 1]));
        assert_eq!(spatial_encode(&[0, 0], &cb1).unwrap(), v(&[1, 0]));
        assert!(spatial_encode(&[0], &cb1).is_err());
        for word in 0..4 {
            let bits = cb1.word_bits(word);
            let s = spatial_encode(&bits, &cb1).unwrap();
            assert_eq!(spatial_decode(&s, &cb1), bits);
        }
    }

    #[test]
    fn decode_tie_break() {
        let cb2 = build_codebook(&[v(&[0, 0]), v(&[1, 1]), v(&[2, 2]), v(&[3, 3])]).unwrap();
        assert_eq!(spatial_decode(&v(&[0, 1]), &cb2), vec![0, 0]);
    }

    #[test]
    fn su_selection_example() {
        let lut_costs = [0.9, 0.1, 0.8, 0.2];
        assert_eq!(top_k(&lut_costs, 2), vec![0, 2]);
        assert_eq!(top_k(&[1.0; 4], 2), vec![0, 1]);
    }

    #[test]
    fn mu_constant_table_picks_smallest() {
        let phi = PhiTable::new(2, 2, vec![3.0; 256]).unwrap();
        let books = select_subsets_mu(&phi, &[4, 8]).unwrap();
        assert_eq!(books[0].decimals(), &[0, 1, 2, 3]);
        assert_eq!(books[1].decimals(), &[0, 1, 2, 3, 4, 5, 6, 7]);
    }

    #[test]
    fn mu_argument_errors() {
        let phi = PhiTable::new(2, 1, vec![1.0; 16]).unwrap();
        assert!(matches!(
            select_subsets_mu(&phi, &[3, 2]),
            Err(Error::NotPowerOfTwo(3))
        ));
        assert!(select_subsets_mu(&phi, &[2]).is_err());
        assert!(select_subsets_mu(&phi, &[8, 2]).is_err());
        assert!(PhiTable::new(2, 1, vec![1.0; 15]).is_err());
    }

    #[test]
    fn phi_table_indexing() {
        let phi = PhiTable::new(2, 2, (0..256).map(|i| i as f64).collect()).unwrap();
        assert_eq!(phi.get(&[3, 5]), (3 + 16 * 5) as f64);
        assert_eq!(phi.coordinate(3 + 16 * 5, 0), 3);
        assert_eq!(phi.coordinate(3 + 16 * 5, 1), 5);
    }
}
