//! Bit-packed binary vectors and permutation algebra.
//!
//! A [`BitVector`] packs logical bits little-endian into `u64` words: logical
//! index `i` lives in word `i / 64` at bit `i % 64`. Pad bits past `len` are
//! kept zero so that word-level kernels (`hamming`, `dot`) need no masking.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    /// All-zero vector of `len` bits.
    pub fn zeros(len: usize) -> Self {
        BitVector {
            len,
            words: vec![0u64; len.div_ceil(WORD_BITS)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.words[i / WORD_BITS] |= 1u64 << (i % WORD_BITS);
            }
        }
        v
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut v = BitVector::zeros(len);
        for i in 0..len {
            if f(i) {
                v.words[i / WORD_BITS] |= 1u64 << (i % WORD_BITS);
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    /// Appends one bit, growing the vector by one position.
    pub fn push(&mut self, value: bool) {
        if self.len % WORD_BITS == 0 {
            self.words.push(0);
        }
        let i = self.len;
        self.len += 1;
        if value {
            self.words[i / WORD_BITS] |= 1u64 << (i % WORD_BITS);
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    /// Number of positions where `self` and `other` differ.
    pub fn hamming(&self, other: &BitVector) -> Result<u64> {
        self.check_len(other)?;
        Ok(hamming_words(&self.words, &other.words))
    }

    /// Population count of the bitwise AND, i.e. the 0/1 dot product.
    pub fn dot(&self, other: &BitVector) -> Result<u64> {
        self.check_len(other)?;
        Ok(dot_words(&self.words, &other.words))
    }

    /// Bitwise complement with pad bits kept zero.
    pub fn complement(&self) -> BitVector {
        let mut out = BitVector {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.mask_pad();
        out
    }

    /// Gathers bits through a permutation: output bit `i` is input bit `t(i)`.
    pub fn permute(&self, t: &Permutation) -> Result<BitVector> {
        if self.len != t.size() {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: t.size(),
            });
        }
        let mut out = BitVector::zeros(self.len);
        for (i, &src) in t.map.iter().enumerate() {
            let src = src as usize;
            if (self.words[src / WORD_BITS] >> (src % WORD_BITS)) & 1 == 1 {
                out.words[i / WORD_BITS] |= 1u64 << (i % WORD_BITS);
            }
        }
        Ok(out)
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    /// True when every pad bit beyond `len` is zero.
    pub fn pad_is_zero(&self) -> bool {
        let r = self.len % WORD_BITS;
        if self.words.len() != self.len.div_ceil(WORD_BITS) {
            return false;
        }
        if r == 0 {
            return true;
        }
        match self.words.last() {
            Some(&w) => w >> r == 0,
            None => true,
        }
    }

    fn mask_pad(&mut self) {
        let r = self.len % WORD_BITS;
        if r != 0 {
            if let Some(w) = self.words.last_mut() {
                *w &= (1u64 << r) - 1;
            }
        }
    }

    fn check_len(&self, other: &BitVector) -> Result<()> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        Ok(())
    }
}

impl std::fmt::Debug for BitVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitVector[{}; ", self.len)?;
        for i in 0..self.len.min(128) {
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        if self.len > 128 {
            write!(f, "…")?;
        }
        write!(f, "]")
    }
}

#[inline]
pub(crate) fn hamming_words(a: &[u64], b: &[u64]) -> u64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| u64::from((x ^ y).count_ones()))
        .sum()
}

#[inline]
pub(crate) fn dot_words(a: &[u64], b: &[u64]) -> u64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| u64::from((x & y).count_ones()))
        .sum()
}

/// A bijection on `{0..n}` stored as `map[i] = image of i`.
///
/// Serializes as `{"size": n, "map": [...]}`; deserialization revalidates the
/// bijection invariant.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(try_from = "PermutationRepr", into = "PermutationRepr")]
pub struct Permutation {
    map: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct PermutationRepr {
    size: usize,
    map: Vec<u32>,
}

impl From<Permutation> for PermutationRepr {
    fn from(p: Permutation) -> Self {
        PermutationRepr {
            size: p.map.len(),
            map: p.map,
        }
    }
}

impl TryFrom<PermutationRepr> for Permutation {
    type Error = Error;

    fn try_from(repr: PermutationRepr) -> Result<Self> {
        if repr.size != repr.map.len() {
            return Err(Error::InvalidData(format!(
                "permutation size field {} does not match map length {}",
                repr.size,
                repr.map.len()
            )));
        }
        Permutation::from_map(repr.map)
    }
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            map: (0..n as u32).collect(),
        }
    }

    /// Uniformly random permutation (Fisher–Yates via `shuffle`).
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let mut map: Vec<u32> = (0..n as u32).collect();
        map.shuffle(rng);
        Permutation { map }
    }

    /// Validates that `map` is a bijection on `{0..map.len()}`.
    pub fn from_map(map: Vec<u32>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            let v = v as usize;
            if v >= n || seen[v] {
                return Err(Error::NotABijection(format!(
                    "value {v} repeated or out of range for size {n}"
                )));
            }
            seen[v] = true;
        }
        Ok(Permutation { map })
    }

    /// Builds the pixel permutation realizing a coordinate bijection on an
    /// `side`×`side` grid: the pixel at source `(u, v)` moves to `f(u, v)`.
    ///
    /// The result satisfies `permute(x, t)[index(f(u, v))] = x[index(u, v)]`.
    pub fn from_coord_map(side: usize, f: impl Fn(usize, usize) -> (usize, usize)) -> Result<Self> {
        let n = side * side;
        let mut map = vec![u32::MAX; n];
        for v in 0..side {
            for u in 0..side {
                let (du, dv) = f(u, v);
                if du >= side || dv >= side {
                    return Err(Error::NotABijection(format!(
                        "coordinate map sends ({u}, {v}) outside the grid to ({du}, {dv})"
                    )));
                }
                map[dv * side + du] = (v * side + u) as u32;
            }
        }
        Permutation::from_map(map)
    }

    /// Grid rotation by +90°: source `(u, v)` maps to `(side-1-v, u)`.
    pub fn rot90(side: usize) -> Self {
        Permutation::from_coord_map(side, |u, v| (side - 1 - v, u))
            .expect("rotation is a bijection")
    }

    pub fn size(&self) -> usize {
        self.map.len()
    }

    #[inline]
    pub fn get(&self, i: usize) -> usize {
        self.map[i] as usize
    }

    pub fn map(&self) -> &[u32] {
        &self.map
    }

    /// Exchanges the values at positions `i` and `j`.
    pub fn swap(&mut self, i: usize, j: usize) -> Result<()> {
        let n = self.map.len();
        for idx in [i, j] {
            if idx >= n {
                return Err(Error::IndexOutOfRange { index: idx, size: n });
            }
        }
        self.map.swap(i, j);
        Ok(())
    }

    #[inline]
    pub(crate) fn swap_unchecked(&mut self, i: usize, j: usize) {
        self.map.swap(i, j);
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0u32; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v as usize] = i as u32;
        }
        Permutation { map: inv }
    }

    /// Composition such that `permute(permute(x, a), b) == permute(x, a.compose(b))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.size() != other.size() {
            return Err(Error::LengthMismatch {
                left: self.size(),
                right: other.size(),
            });
        }
        let map = other.map.iter().map(|&j| self.map[j as usize]).collect();
        Ok(Permutation { map })
    }

    pub fn is_bijection(&self) -> bool {
        let n = self.map.len();
        let mut seen = vec![false; n];
        for &v in &self.map {
            if (v as usize) >= n || seen[v as usize] {
                return false;
            }
            seen[v as usize] = true;
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bv(s: &str) -> BitVector {
        BitVector::from_bools(&s.chars().map(|c| c == '1').collect::<Vec<_>>())
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_bits(len: usize, r: &mut ChaCha8Rng) -> BitVector {
        BitVector::from_fn(len, |_| r.gen_bool(0.5))
    }

    #[test]
    fn hamming_examples() {
        let x = bv("10110");
        assert_eq!(x.hamming(&x).unwrap(), 0);
        assert_eq!(bv("0000").hamming(&bv("1111")).unwrap(), 4);
        assert_eq!(bv("10110").hamming(&bv("11010")).unwrap(), 2);
        assert!(bv("10").hamming(&bv("100")).is_err());
    }

    #[test]
    fn dot_examples() {
        assert_eq!(bv("1111").dot(&bv("1111")).unwrap(), 4);
        assert_eq!(bv("1010").dot(&bv("0101")).unwrap(), 0);
        assert_eq!(bv("1100").dot(&bv("1010")).unwrap(), 1);
        assert!(bv("1").dot(&bv("11")).is_err());
    }

    #[test]
    fn permute_identity_and_reversal() {
        let x = bv("1010");
        assert_eq!(x.permute(&Permutation::identity(4)).unwrap(), x);
        let rev = Permutation::from_map(vec![3, 2, 1, 0]).unwrap();
        assert_eq!(x.permute(&rev).unwrap(), bv("0101"));
        assert!(x.permute(&Permutation::identity(5)).is_err());
    }

    #[test]
    fn permute_composition_law() {
        // permute(permute(x, t1), t2) == permute(x, compose(t1, t2)), checked
        // elementwise against direct evaluation.
        let mut r = rng(11);
        for _ in 0..20 {
            let x = random_bits(64, &mut r);
            let t1 = Permutation::random(64, &mut r);
            let t2 = Permutation::random(64, &mut r);
            let lhs = x.permute(&t1).unwrap().permute(&t2).unwrap();
            let rhs = x.permute(&t1.compose(&t2).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
            for i in 0..64 {
                assert_eq!(lhs.get(i), x.get(t1.get(t2.get(i))));
            }
        }
    }

    #[test]
    fn random_permutation_contract() {
        let mut r = rng(3);
        assert_eq!(Permutation::random(1, &mut r).map(), &[0]);
        let a = Permutation::random(4096, &mut rng(42));
        let b = Permutation::random(4096, &mut rng(42));
        assert_eq!(a, b);
        assert!(a.is_bijection());
    }

    #[test]
    fn swap_examples() {
        let mut t = Permutation::identity(4);
        t.swap(0, 1).unwrap();
        assert_eq!(t.map(), &[1, 0, 2, 3]);
        let before = t.clone();
        t.swap(2, 2).unwrap();
        assert_eq!(t, before);
        t.swap(1, 3).unwrap();
        t.swap(1, 3).unwrap();
        assert_eq!(t, before);
        assert!(t.swap(0, 4).is_err());
    }

    #[test]
    fn inverse_composes_to_identity() {
        let t = Permutation::random(128, &mut rng(9));
        assert_eq!(
            t.compose(&t.inverse()).unwrap(),
            Permutation::identity(128)
        );
        assert_eq!(
            t.inverse().compose(&t).unwrap(),
            Permutation::identity(128)
        );
    }

    #[test]
    fn hamming_popcount_relation() {
        // hamming(a, b) = pop(a) + pop(b) - 2 * dot(a, b)
        let mut r = rng(17);
        for _ in 0..1000 {
            let a = random_bits(4096, &mut r);
            let b = random_bits(4096, &mut r);
            let h = a.hamming(&b).unwrap();
            assert_eq!(h, a.count_ones() + b.count_ones() - 2 * a.dot(&b).unwrap());
        }
    }

    #[test]
    fn packed_kernels_match_naive_loop() {
        let mut r = rng(23);
        for _ in 0..100 {
            let len = r.gen_range(1..200);
            let a = random_bits(len, &mut r);
            let b = random_bits(len, &mut r);
            let mut naive_h = 0u64;
            let mut naive_d = 0u64;
            for i in 0..len {
                naive_h += u64::from(a.get(i) != b.get(i));
                naive_d += u64::from(a.get(i) && b.get(i));
            }
            assert_eq!(a.hamming(&b).unwrap(), naive_h);
            assert_eq!(a.dot(&b).unwrap(), naive_d);
        }
    }

    #[test]
    fn permute_preserves_popcount() {
        let mut r = rng(31);
        for _ in 0..50 {
            let x = random_bits(300, &mut r);
            let t = Permutation::random(300, &mut r);
            assert_eq!(x.permute(&t).unwrap().count_ones(), x.count_ones());
        }
    }

    #[test]
    fn pad_bits_stay_zero() {
        let mut v = BitVector::zeros(70);
        v.set(69, true);
        assert!(v.pad_is_zero());
        assert!(v.complement().pad_is_zero());
        let mut r = rng(5);
        let t = Permutation::random(70, &mut r);
        assert!(v.permute(&t).unwrap().pad_is_zero());
        let mut w = BitVector::zeros(0);
        for i in 0..130 {
            w.push(i % 3 == 0);
        }
        assert_eq!(w.len(), 130);
        assert!(w.pad_is_zero());
        assert_eq!(w.count_ones(), 44);
    }

    #[test]
    fn coord_map_round_trip() {
        let side = 8;
        let t = Permutation::rot90(side);
        assert!(t.is_bijection());
        // Four quarter turns give the identity.
        let twice = t.compose(&t).unwrap();
        let four = twice.compose(&twice).unwrap();
        assert_eq!(four, Permutation::identity(side * side));
    }

    #[test]
    fn permutation_json_round_trip() {
        let t = Permutation::random(16, &mut rng(1));
        let js = serde_json::to_string(&t).unwrap();
        assert!(js.contains("\"size\":16"));
        let back: Permutation = serde_json::from_str(&js).unwrap();
        assert_eq!(t, back);
        let bad = r#"{"size": 3, "map": [0, 0, 2]}"#;
        assert!(serde_json::from_str::<Permutation>(bad).is_err());
    }

    proptest! {
        #[test]
        fn bijection_invariant_survives_swaps(seed in 0u64..1000, swaps in proptest::collection::vec((0usize..64, 0usize..64), 0..40)) {
            let mut t = Permutation::random(64, &mut rng(seed));
            for (i, j) in swaps {
                t.swap(i, j).unwrap();
            }
            prop_assert!(t.is_bijection());
        }

        #[test]
        fn hamming_symmetric_and_zero_iff_equal(seed in 0u64..500) {
            let mut r = rng(seed);
            let a = random_bits(257, &mut r);
            let b = random_bits(257, &mut r);
            prop_assert_eq!(a.hamming(&b).unwrap(), b.hamming(&a).unwrap());
            prop_assert_eq!(a.hamming(&a).unwrap(), 0);
            if a != b {
                prop_assert!(a.hamming(&b).unwrap() > 0);
            }
        }
    }
}
