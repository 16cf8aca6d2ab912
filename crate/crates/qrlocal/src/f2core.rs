//! Bit-exact linear algebra over F2: bit vectors, linear codes with a
//! privileged generator basis, erasure words, and the ideal erasure decoder.
//!
//! Indexing convention, stated once for the whole crate: every index in the
//! Rust API is 0-based. The JSON and text formats produced by the `*_json`
//! helpers, `Display` impls and the CLI are 1-based.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{BitXor, BitXorAssign};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `distance_bruteforce` enumerates all 2^k codewords; above this dimension
/// the caller must declare the distance instead.
pub const DISTANCE_BRUTEFORCE_CAP: usize = 20;

/// Random codewords sampled when spot-checking a declared distance.
pub const DECLARED_DISTANCE_SAMPLES: usize = 100_000;

// ---------------------------------------------------------------------------
// BitVector
// ---------------------------------------------------------------------------

/// Fixed-length vector over F2, packed 64 bits per word.
///
/// The length is fixed at construction; all mutating operations preserve it.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Indicator vector of `support` inside a length-`len` vector.
    pub fn from_support(len: usize, support: &[usize]) -> Result<Self> {
        let mut v = BitVector::zeros(len);
        for &i in support {
            if i >= len {
                return Err(Error::Index(format!(
                    "support position {} out of range for length {}",
                    i + 1,
                    len
                )));
            }
            v.set(i, true);
        }
        Ok(v)
    }

    /// Parses a string of '0'/'1' characters; leftmost character is index 0.
    pub fn from_bitstring(s: &str) -> Result<Self> {
        let mut v = BitVector::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                _ => {
                    return Err(Error::Parse(format!(
                        "bit string may only contain '0'/'1', found {c:?}"
                    )))
                }
            }
        }
        Ok(v)
    }

    /// The standard basis vector e_i of the given length.
    pub fn unit(len: usize, i: usize) -> Result<Self> {
        Self::from_support(len, &[i])
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Parity of the positions where both vectors are 1.
    pub fn inner_product(&self, other: &BitVector) -> Result<bool> {
        if self.len != other.len {
            return Err(Error::Dimension(format!(
                "inner product of lengths {} and {}",
                self.len, other.len
            )));
        }
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        Ok(ones % 2 == 1)
    }

    /// Ascending indices of the 1-entries.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.weight());
        for (wi, &w) in self.words.iter().enumerate() {
            let mut bits = w;
            while bits != 0 {
                out.push(wi * 64 + bits.trailing_zeros() as usize);
                bits &= bits - 1;
            }
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn to_bitstring(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }
}

impl BitXorAssign<&BitVector> for BitVector {
    fn bitxor_assign(&mut self, rhs: &BitVector) {
        assert_eq!(self.len, rhs.len, "xor of mismatched lengths");
        for (a, b) in self.words.iter_mut().zip(&rhs.words) {
            *a ^= b;
        }
    }
}

impl BitXor<&BitVector> for &BitVector {
    type Output = BitVector;
    fn bitxor(self, rhs: &BitVector) -> BitVector {
        let mut out = self.clone();
        out ^= rhs;
        out
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({})", self.to_bitstring())
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

impl FromStr for BitVector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BitVector::from_bitstring(s)
    }
}

/// Rank over F2 by Gaussian elimination. Pivots are chosen lowest column
/// index first so certificates derived from the elimination are reproducible.
pub fn rank_f2(rows: &[BitVector]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let ncols = rows[0].len();
    let mut mat: Vec<BitVector> = rows.to_vec();
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pivot) = (rank..mat.len()).find(|&r| mat[r].get(col)) else {
            continue;
        };
        mat.swap(rank, pivot);
        let pivot_row = mat[rank].clone();
        for (r, row) in mat.iter_mut().enumerate() {
            if r != rank && row.get(col) {
                *row ^= &pivot_row;
            }
        }
        rank += 1;
        if rank == mat.len() {
            break;
        }
    }
    rank
}

// ---------------------------------------------------------------------------
// LinearCode
// ---------------------------------------------------------------------------

/// Binary [n, k, d] linear code with a privileged generator basis.
///
/// Row `i` of the generator is the basis codeword g_i, the image of the
/// standard basis vector e_i under the encoding map. The distance `d` is
/// optional and only present once computed or declared.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCode {
    name: String,
    n: usize,
    k: usize,
    rows: Vec<BitVector>,
    d: Option<usize>,
}

impl LinearCode {
    /// Builds a code from generator rows, checking that the rows are nonzero,
    /// of equal length, and linearly independent.
    pub fn new(name: impl Into<String>, rows: Vec<BitVector>, d: Option<usize>) -> Result<Self> {
        let name = name.into();
        if rows.is_empty() {
            return Err(Error::Construction(format!(
                "code {name:?} has no generator rows"
            )));
        }
        let n = rows[0].len();
        let k = rows.len();
        if n == 0 {
            return Err(Error::Construction(format!(
                "code {name:?} has block length 0"
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "generator row {} has length {}, expected {}",
                    i + 1,
                    row.len(),
                    n
                )));
            }
            if row.is_zero() {
                return Err(Error::Construction(format!(
                    "generator row {} is zero",
                    i + 1
                )));
            }
        }
        if rank_f2(&rows) != k {
            return Err(Error::Construction(format!(
                "generator rows of {name:?} are linearly dependent"
            )));
        }
        if let Some(d) = d {
            if d == 0 || d > n {
                return Err(Error::Construction(format!(
                    "declared distance {d} outside 1..={n}"
                )));
            }
        }
        Ok(LinearCode { name, n, k, rows, d })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn distance(&self) -> Option<usize> {
        self.d
    }

    pub fn generator_rows(&self) -> &[BitVector] {
        &self.rows
    }

    pub fn generator_row(&self, i: usize) -> &BitVector {
        &self.rows[i]
    }

    /// Column profile of position `p`: the vector (g_1[p], ..., g_k[p]).
    pub fn column(&self, p: usize) -> BitVector {
        let mut col = BitVector::zeros(self.k);
        for (j, row) in self.rows.iter().enumerate() {
            if row.get(p) {
                col.set(j, true);
            }
        }
        col
    }

    /// Encodes a k-bit message as the F2 sum of the selected basis codewords.
    pub fn encode(&self, m: &BitVector) -> Result<BitVector> {
        if m.len() != self.k {
            return Err(Error::Dimension(format!(
                "message length {} does not match dimension {}",
                m.len(),
                self.k
            )));
        }
        let mut cw = BitVector::zeros(self.n);
        for (i, row) in self.rows.iter().enumerate() {
            if m.get(i) {
                cw ^= row;
            }
        }
        Ok(cw)
    }

    /// Exact minimum distance by enumerating all nonzero codewords in Gray
    /// order (one row xor per step). Refuses codes with k above `cap`.
    pub fn distance_bruteforce_with_cap(&self, cap: usize) -> Result<usize> {
        if self.k > cap {
            return Err(Error::Capacity(format!(
                "distance brute force needs k <= {cap}, code has k = {}; declare d instead",
                self.k
            )));
        }
        let mut cw = BitVector::zeros(self.n);
        let mut prev_gray: u64 = 0;
        let mut best = usize::MAX;
        for t in 1..(1u64 << self.k) {
            let gray = t ^ (t >> 1);
            let flipped = (gray ^ prev_gray).trailing_zeros() as usize;
            cw ^= &self.rows[flipped];
            prev_gray = gray;
            best = best.min(cw.weight());
        }
        Ok(best)
    }

    pub fn distance_bruteforce(&self) -> Result<usize> {
        self.distance_bruteforce_with_cap(DISTANCE_BRUTEFORCE_CAP)
    }

    /// Returns the same code with `d` set to the brute-forced distance.
    pub fn with_computed_distance(mut self) -> Result<Self> {
        self.d = Some(self.distance_bruteforce()?);
        Ok(self)
    }

    /// Returns the same code with `d` declared by the caller (range-checked
    /// only; see [`LinearCode::spot_check_declared_distance`]).
    pub fn with_declared_distance(mut self, d: usize) -> Result<Self> {
        if d == 0 || d > self.n {
            return Err(Error::Construction(format!(
                "declared distance {d} outside 1..={}",
                self.n
            )));
        }
        self.d = Some(d);
        Ok(self)
    }

    /// Samples random nonzero messages looking for a codeword lighter than
    /// the declared distance. Used for codes too large to brute force.
    pub fn spot_check_declared_distance(&self, samples: usize, seed: u64) -> Result<()> {
        let Some(d) = self.d else {
            return Err(Error::Construction(
                "spot check requires a declared distance".into(),
            ));
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let mut m = BitVector::zeros(self.k);
            while m.is_zero() {
                for i in 0..self.k {
                    m.set(i, rng.gen_bool(0.5));
                }
            }
            let w = self.encode(&m)?.weight();
            if w < d {
                return Err(Error::Construction(format!(
                    "declared distance {d} refuted: message {m} encodes to weight {w}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> CodeJson {
        CodeJson {
            name: self.name.clone(),
            n: self.n,
            k: self.k,
            d: self.d,
            generator: self.rows.iter().map(|r| r.to_bitstring()).collect(),
        }
    }

    pub fn from_json(json: &CodeJson) -> Result<Self> {
        if json.generator.len() != json.k {
            return Err(Error::Parse(format!(
                "code {:?} declares k = {} but has {} generator rows",
                json.name,
                json.k,
                json.generator.len()
            )));
        }
        let rows = json
            .generator
            .iter()
            .map(|s| {
                if s.len() != json.n {
                    return Err(Error::Parse(format!(
                        "generator row {s:?} has length {}, expected n = {}",
                        s.len(),
                        json.n
                    )));
                }
                BitVector::from_bitstring(s)
            })
            .collect::<Result<Vec<_>>>()?;
        LinearCode::new(json.name.clone(), rows, json.d)
    }
}

/// On-disk form of a code: each generator string has exactly n characters
/// over '0'/'1'; the leftmost character is coordinate 1 and row i is g_i.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CodeJson {
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub d: Option<usize>,
    pub generator: Vec<String>,
}

/// Action of the k-bit gate CNOT_{control,target}: m -> m + m_control * e_target.
pub fn cnot_message(m: &BitVector, control: usize, target: usize) -> BitVector {
    assert!(control < m.len() && target < m.len() && control != target);
    let mut out = m.clone();
    if m.get(control) {
        out.set(target, !m.get(target));
    }
    out
}

// ---------------------------------------------------------------------------
// Erasures
// ---------------------------------------------------------------------------

/// One symbol of a word that may have been hit by the erasure channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    Zero,
    One,
    Erased,
}

impl Symbol {
    pub fn from_bit(b: bool) -> Self {
        if b {
            Symbol::One
        } else {
            Symbol::Zero
        }
    }

    pub fn bit(self) -> Option<bool> {
        match self {
            Symbol::Zero => Some(false),
            Symbol::One => Some(true),
            Symbol::Erased => None,
        }
    }

    pub fn is_erased(self) -> bool {
        matches!(self, Symbol::Erased)
    }

    /// XOR with the erasure symbol absorbing.
    pub fn xor(self, other: Symbol) -> Symbol {
        match (self.bit(), other.bit()) {
            (Some(a), Some(b)) => Symbol::from_bit(a ^ b),
            _ => Symbol::Erased,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Symbol::Zero => '0',
            Symbol::One => '1',
            Symbol::Erased => '?',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            '0' => Ok(Symbol::Zero),
            '1' => Ok(Symbol::One),
            '?' => Ok(Symbol::Erased),
            _ => Err(Error::Parse(format!(
                "erasure words use '0', '1' and '?', found {c:?}"
            ))),
        }
    }
}

/// A length-n word over {0, 1, erased}. The erased index set is exactly the
/// set of positions holding the erasure symbol, by construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErasureWord {
    symbols: Vec<Symbol>,
}

impl ErasureWord {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        ErasureWord { symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, i: usize) -> Symbol {
        self.symbols[i]
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn erased(&self) -> BTreeSet<usize> {
        self.symbols
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.is_erased().then_some(i))
            .collect()
    }

    pub fn erased_count(&self) -> usize {
        self.symbols.iter().filter(|s| s.is_erased()).count()
    }

    pub fn to_text(&self) -> String {
        self.symbols.iter().map(|s| s.to_char()).collect()
    }

    pub fn from_text(s: &str) -> Result<Self> {
        Ok(ErasureWord {
            symbols: s.chars().map(Symbol::from_char).collect::<Result<_>>()?,
        })
    }
}

impl fmt::Display for ErasureWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for ErasureWord {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ErasureWord::from_text(s)
    }
}

/// Replaces the symbols of `word` at the positions in `erased` by the erasure
/// symbol, leaving the complement unchanged.
pub fn erase(word: &BitVector, erased: &BTreeSet<usize>) -> Result<ErasureWord> {
    if let Some(&max) = erased.iter().next_back() {
        if max >= word.len() {
            return Err(Error::Index(format!(
                "erasure position {} out of range for length {}",
                max + 1,
                word.len()
            )));
        }
    }
    let symbols = (0..word.len())
        .map(|i| {
            if erased.contains(&i) {
                Symbol::Erased
            } else {
                Symbol::from_bit(word.get(i))
            }
        })
        .collect();
    Ok(ErasureWord { symbols })
}

// ---------------------------------------------------------------------------
// Ideal decoder
// ---------------------------------------------------------------------------

/// Outcome of the ideal erasure decoder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecodeOutcome {
    /// The unique message whose codeword matches the word on all known
    /// positions.
    Decoded(BitVector),
    /// Several codewords match on the known positions; equivalently some
    /// nonzero codeword is supported inside the erased set.
    NotDecodable,
}

/// Ideal erasure decoder: solves for the message on the non-erased columns.
///
/// Returns `Corruption` if the word disagrees with every codeword on its
/// known positions — that signals a non-erasure fault and is kept distinct
/// from [`DecodeOutcome::NotDecodable`].
pub fn ideal_decode(code: &LinearCode, word: &ErasureWord) -> Result<DecodeOutcome> {
    if word.len() != code.n() {
        return Err(Error::Dimension(format!(
            "word length {} does not match block length {}",
            word.len(),
            code.n()
        )));
    }
    let k = code.k();
    // One augmented row per known position: (g_1[p], ..., g_k[p] | w[p]).
    let mut rows: Vec<BitVector> = Vec::new();
    for (p, s) in word.symbols().iter().enumerate() {
        if let Some(bit) = s.bit() {
            let mut row = BitVector::zeros(k + 1);
            for j in 0..k {
                if code.generator_row(j).get(p) {
                    row.set(j, true);
                }
            }
            row.set(k, bit);
            rows.push(row);
        }
    }

    // Gauss-Jordan over the k coefficient columns, lowest pivot index first.
    let mut pivot_row_of_col: Vec<Option<usize>> = vec![None; k];
    let mut next = 0;
    for col in 0..k {
        let Some(r) = (next..rows.len()).find(|&r| rows[r].get(col)) else {
            continue;
        };
        rows.swap(next, r);
        let pivot = rows[next].clone();
        for (rr, row) in rows.iter_mut().enumerate() {
            if rr != next && row.get(col) {
                *row ^= &pivot;
            }
        }
        pivot_row_of_col[col] = Some(next);
        next += 1;
    }

    // A row that is zero on the coefficients but 1 on the augment means the
    // known symbols are inconsistent with every codeword.
    for row in &rows {
        if row.get(k) && (0..k).all(|c| !row.get(c)) {
            return Err(Error::Corruption(
                "known symbols are inconsistent with every codeword".into(),
            ));
        }
    }

    if pivot_row_of_col.iter().any(|p| p.is_none()) {
        return Ok(DecodeOutcome::NotDecodable);
    }

    let mut m = BitVector::zeros(k);
    for (col, pivot) in pivot_row_of_col.iter().enumerate() {
        if rows[pivot.unwrap()].get(k) {
            m.set(col, true);
        }
    }
    Ok(DecodeOutcome::Decoded(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn repetition3() -> LinearCode {
        LinearCode::new(
            "repetition-3",
            vec![BitVector::from_bitstring("111").unwrap()],
            Some(3),
        )
        .unwrap()
    }

    /// [8,3,4] code whose row i evaluates x -> x_i over F2^3 in
    /// lexicographic order (x_1 is the leftmost component).
    fn hadamard3() -> LinearCode {
        LinearCode::new(
            "hadamard-3",
            vec![
                BitVector::from_bitstring("00001111").unwrap(),
                BitVector::from_bitstring("00110011").unwrap(),
                BitVector::from_bitstring("01010101").unwrap(),
            ],
            None,
        )
        .unwrap()
    }

    fn set(indices: &[usize]) -> BTreeSet<usize> {
        indices.iter().copied().collect()
    }

    #[test]
    fn encode_repetition() {
        let code = repetition3();
        let m = BitVector::from_bitstring("1").unwrap();
        assert_eq!(code.encode(&m).unwrap().to_bitstring(), "111");
    }

    #[test]
    fn encode_zero_message_is_zero() {
        let code = hadamard3();
        let m = BitVector::zeros(3);
        assert!(code.encode(&m).unwrap().is_zero());
    }

    #[test]
    fn encode_hadamard_first_basis_vector() {
        // Evaluating x -> x_1 at all 8 points of F2^3.
        let code = hadamard3();
        let m = BitVector::from_bitstring("100").unwrap();
        assert_eq!(code.encode(&m).unwrap().to_bitstring(), "00001111");
    }

    #[test]
    fn encode_rejects_wrong_length() {
        let code = hadamard3();
        let m = BitVector::zeros(4);
        assert!(matches!(code.encode(&m), Err(Error::Dimension(_))));
    }

    #[test]
    fn encode_is_linear_exhaustively() {
        let code = hadamard3();
        let k = code.k();
        for a in 0..(1u32 << k) {
            for b in 0..(1u32 << k) {
                let ma = BitVector::from_bools(&(0..k).map(|i| a >> i & 1 == 1).collect::<Vec<_>>());
                let mb = BitVector::from_bools(&(0..k).map(|i| b >> i & 1 == 1).collect::<Vec<_>>());
                let sum = &ma ^ &mb;
                assert_eq!(
                    code.encode(&sum).unwrap(),
                    &code.encode(&ma).unwrap() ^ &code.encode(&mb).unwrap()
                );
            }
        }
    }

    #[test]
    fn distance_repetition() {
        assert_eq!(repetition3().distance_bruteforce().unwrap(), 3);
    }

    #[test]
    fn distance_hadamard() {
        // All 7 nonzero codewords have weight 4.
        assert_eq!(hadamard3().distance_bruteforce().unwrap(), 4);
    }

    #[test]
    fn distance_parity_check_code() {
        let code = LinearCode::new(
            "parity-3-2",
            vec![
                BitVector::from_bitstring("101").unwrap(),
                BitVector::from_bitstring("011").unwrap(),
            ],
            None,
        )
        .unwrap();
        assert_eq!(code.distance_bruteforce().unwrap(), 2);
    }

    #[test]
    fn distance_matches_naive_enumeration() {
        // Independent route: encode every message from scratch.
        let code = hadamard3();
        let naive = (1u32..8)
            .map(|m| {
                let bits: Vec<bool> = (0..3).map(|i| m >> i & 1 == 1).collect();
                code.encode(&BitVector::from_bools(&bits)).unwrap().weight()
            })
            .min()
            .unwrap();
        assert_eq!(code.distance_bruteforce().unwrap(), naive);
    }

    #[test]
    fn distance_respects_cap() {
        let code = hadamard3();
        assert!(matches!(
            code.distance_bruteforce_with_cap(2),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn spot_check_accepts_true_distance_and_refutes_inflated() {
        let code = hadamard3().with_declared_distance(4).unwrap();
        code.spot_check_declared_distance(1000, 7).unwrap();
        let inflated = hadamard3().with_declared_distance(5).unwrap();
        assert!(inflated.spot_check_declared_distance(1000, 7).is_err());
    }

    #[test]
    fn erase_examples() {
        let w = BitVector::from_bitstring("111").unwrap();
        assert_eq!(erase(&w, &set(&[0])).unwrap().to_text(), "?11");
        assert_eq!(erase(&w, &set(&[])).unwrap().to_text(), "111");
        let w = BitVector::from_bitstring("00001111").unwrap();
        assert_eq!(erase(&w, &set(&[0, 4])).unwrap().to_text(), "?000?111");
        assert!(matches!(erase(&w, &set(&[8])), Err(Error::Index(_))));
    }

    #[test]
    fn erased_set_tracks_symbols() {
        let w = ErasureWord::from_text("?0?1").unwrap();
        assert_eq!(w.erased(), set(&[0, 2]));
        assert_eq!(w.to_text(), "?0?1");
    }

    #[test]
    fn decode_repetition_single_survivor() {
        let code = repetition3();
        let w = ErasureWord::from_text("?1?").unwrap();
        assert_eq!(
            ideal_decode(&code, &w).unwrap(),
            DecodeOutcome::Decoded(BitVector::from_bitstring("1").unwrap())
        );
    }

    #[test]
    fn decode_not_decodable_when_basis_row_erased() {
        // Erasing supp(g_1) leaves g_1 itself supported inside the erasure.
        let code = hadamard3();
        let m = BitVector::from_bitstring("010").unwrap();
        let cw = code.encode(&m).unwrap();
        let e: BTreeSet<usize> = code.generator_row(0).support().into_iter().collect();
        let w = erase(&cw, &e).unwrap();
        assert_eq!(ideal_decode(&code, &w).unwrap(), DecodeOutcome::NotDecodable);
    }

    #[test]
    fn decode_succeeds_below_distance() {
        // d = 4, so every erasure of weight <= 3 leaves a unique completion.
        let code = hadamard3().with_computed_distance().unwrap();
        for m_bits in 0u32..8 {
            let m = BitVector::from_bools(&(0..3).map(|i| m_bits >> i & 1 == 1).collect::<Vec<_>>());
            let cw = code.encode(&m).unwrap();
            for a in 0..8 {
                for b in a + 1..8 {
                    for c in b + 1..8 {
                        let w = erase(&cw, &set(&[a, b, c])).unwrap();
                        assert_eq!(
                            ideal_decode(&code, &w).unwrap(),
                            DecodeOutcome::Decoded(m.clone())
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn decode_flags_corruption_distinctly() {
        let code = repetition3();
        let w = ErasureWord::from_text("10?").unwrap();
        assert!(matches!(ideal_decode(&code, &w), Err(Error::Corruption(_))));
    }

    /// Brute-force completion count; the independent oracle for the decoder.
    fn completions(code: &LinearCode, word: &ErasureWord) -> Vec<BitVector> {
        let k = code.k();
        let mut out = Vec::new();
        for m_bits in 0u64..(1 << k) {
            let m = BitVector::from_bools(&(0..k).map(|i| m_bits >> i & 1 == 1).collect::<Vec<_>>());
            let cw = code.encode(&m).unwrap();
            let agrees = word
                .symbols()
                .iter()
                .enumerate()
                .all(|(p, s)| s.bit().map(|b| b == cw.get(p)).unwrap_or(true));
            if agrees {
                out.push(m);
            }
        }
        out
    }

    #[test]
    fn decode_agrees_with_completion_enumeration() {
        let code = hadamard3();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..2000 {
            let m = BitVector::from_bools(&(0..3).map(|_| rng.gen_bool(0.5)).collect::<Vec<_>>());
            let cw = code.encode(&m).unwrap();
            let e: BTreeSet<usize> = (0..8).filter(|_| rng.gen_bool(0.4)).collect();
            let w = erase(&cw, &e).unwrap();
            let expected = completions(&code, &w);
            match ideal_decode(&code, &w).unwrap() {
                DecodeOutcome::Decoded(got) => assert_eq!(expected, vec![got]),
                DecodeOutcome::NotDecodable => assert!(expected.len() > 1),
            }
        }
    }

    #[test]
    fn decode_boundary_at_distance() {
        // There is an erasure of weight exactly d that is not decodable:
        // the support of a minimum-weight codeword.
        for code in [repetition3(), hadamard3()] {
            let code = code.with_computed_distance().unwrap();
            let d = code.distance().unwrap();
            let k = code.k();
            let min_word = (1u64..(1 << k))
                .map(|bits| {
                    let m =
                        BitVector::from_bools(&(0..k).map(|i| bits >> i & 1 == 1).collect::<Vec<_>>());
                    code.encode(&m).unwrap()
                })
                .find(|cw| cw.weight() == d)
                .unwrap();
            let e: BTreeSet<usize> = min_word.support().into_iter().collect();
            let w = erase(&code.encode(&BitVector::zeros(k)).unwrap(), &e).unwrap();
            assert_eq!(ideal_decode(&code, &w).unwrap(), DecodeOutcome::NotDecodable);
        }
    }

    #[test]
    fn inner_product_examples() {
        let u = BitVector::from_bitstring("110").unwrap();
        let w = BitVector::from_bitstring("101").unwrap();
        assert!(u.inner_product(&w).unwrap());
        assert!(!BitVector::zeros(3)
            .inner_product(&BitVector::from_bitstring("111").unwrap())
            .unwrap());
        assert!(matches!(
            u.inner_product(&BitVector::zeros(4)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn inner_product_reads_message_bit() {
        // Indicator of the points x = 000 and x = 100 sums two evaluations
        // that differ exactly by m_1.
        let code = hadamard3();
        let u = BitVector::from_support(8, &[0, 4]).unwrap();
        for m_bits in 0u32..8 {
            let m = BitVector::from_bools(&(0..3).map(|i| m_bits >> i & 1 == 1).collect::<Vec<_>>());
            let cw = code.encode(&m).unwrap();
            assert_eq!(u.inner_product(&cw).unwrap(), m.get(0));
        }
    }

    #[test]
    fn cnot_message_action() {
        let m = BitVector::from_bitstring("10").unwrap();
        assert_eq!(cnot_message(&m, 0, 1).to_bitstring(), "11");
        let m = BitVector::from_bitstring("01").unwrap();
        assert_eq!(cnot_message(&m, 0, 1).to_bitstring(), "01");
    }

    #[test]
    fn code_json_round_trip() {
        let code = hadamard3().with_computed_distance().unwrap();
        let json = code.to_json();
        let back = LinearCode::from_json(&json).unwrap();
        assert_eq!(back, code);
        assert_eq!(json.generator[0], "00001111");
    }

    #[test]
    fn code_rejects_dependent_rows() {
        let rows = vec![
            BitVector::from_bitstring("110").unwrap(),
            BitVector::from_bitstring("011").unwrap(),
            BitVector::from_bitstring("101").unwrap(),
        ];
        assert!(matches!(
            LinearCode::new("dependent", rows, None),
            Err(Error::Construction(_))
        ));
    }
}
