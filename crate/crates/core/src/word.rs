use serde::{Deserialize, Serialize};
use std::fmt;

/// A move word `j_1 ... j_n` over `{0,1}`. Bit `j_l` is stored at position
/// `l - 1`, so `j_1` is the least significant bit. On layered graphs a `0`
/// step moves one layer up (towards smaller layer index) and a `1` step one
/// layer down.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    bits: u32,
    len: u8,
}

impl Word {
    pub fn new(bits: u32, len: usize) -> Self {
        assert!(len <= 31, "word length {len} out of range");
        let mask = if len == 0 { 0 } else { (1u32 << len) - 1 };
        Word { bits: bits & mask, len: len as u8 }
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Bit `j_l` for `l` in `1..=n`.
    pub fn bit(&self, l: usize) -> u32 {
        debug_assert!(l >= 1 && l <= self.len());
        (self.bits >> (l - 1)) & 1
    }

    /// All words of a given length, ordered by their bit pattern.
    pub fn all(len: usize) -> impl Iterator<Item = Word> {
        (0..(1u32 << len)).map(move |bits| Word::new(bits, len))
    }

    /// `j_2 ... j_n b`: drop the first letter and append `b` (a head move).
    pub fn advance(&self, b: u32) -> Word {
        let n = self.len();
        Word::new((self.bits >> 1) | ((b & 1) << (n - 1)), n)
    }

    /// `c j_1 ... j_{n-1}`: drop the last letter and prepend `c` (a tail move).
    pub fn retreat(&self, c: u32) -> Word {
        let n = self.len();
        let kept = self.bits & ((1u32 << (n - 1)) - 1);
        Word::new((kept << 1) | (c & 1), n)
    }

    /// Net displacement after `l` steps: `z_l = sum_{m<=l} (2 j_m - 1)`.
    pub fn partial_sum(&self, l: usize) -> i32 {
        let mut z = 0i32;
        for m in 1..=l {
            z += 2 * self.bit(m) as i32 - 1;
        }
        z
    }

    /// Partial sums `z_0 = 0, z_1, ..., z_n`.
    pub fn walk(&self) -> Vec<i32> {
        let mut z = vec![0i32; self.len() + 1];
        for l in 1..=self.len() {
            z[l] = z[l - 1] + 2 * self.bit(l) as i32 - 1;
        }
        z
    }

    /// Word balance `|j|_± = -(sum of (-1)^{j_y})` = (#ones - #zeros).
    pub fn balance(&self) -> i32 {
        self.partial_sum(self.len())
    }

    pub fn hamming_weight(&self) -> u32 {
        self.bits.count_ones()
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in 1..=self.len() {
            write!(f, "{}", self.bit(l))?;
        }
        Ok(())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Span of a word's layer walk: the interval `(min z_l, max z_l)` visited by
/// the partial sums, and its width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub min: i32,
    pub max: i32,
}

impl Span {
    pub fn length(&self) -> i32 {
        self.max - self.min
    }

    /// Center in doubled coordinates, so half-integer centers stay exact.
    pub fn doubled_center(&self) -> i32 {
        self.min + self.max
    }
}

/// Span of the walk `z_0 = 0, z_1, ..., z_n` of a word.
pub fn span_of_word(j: &Word) -> Span {
    let mut z = 0i32;
    let (mut lo, mut hi) = (0i32, 0i32);
    for l in 1..=j.len() {
        z += 2 * j.bit(l) as i32 - 1;
        lo = lo.min(z);
        hi = hi.max(z);
    }
    Span { min: lo, max: hi }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_order_matches_word_notation() {
        // j = 01 means j_1 = 0, j_2 = 1.
        let w = Word::new(0b10, 2);
        assert_eq!(w.bit(1), 0);
        assert_eq!(w.bit(2), 1);
        assert_eq!(format!("{w}"), "01");
    }

    #[test]
    fn advance_and_retreat() {
        let w = Word::new(0b011, 3); // j = 110
        assert_eq!(format!("{w}"), "110");
        assert_eq!(format!("{}", w.advance(1)), "101");
        assert_eq!(format!("{}", w.advance(0)), "100");
        assert_eq!(format!("{}", w.retreat(1)), "111");
        assert_eq!(format!("{}", w.retreat(0)), "011");
    }

    #[test]
    fn monotone_word_span() {
        let w = Word::new((1 << 5) - 1, 5); // 11111
        let s = span_of_word(&w);
        assert_eq!((s.min, s.max), (0, 5));
        assert_eq!(s.length(), 5);
    }

    #[test]
    fn alternating_word_span_length_one() {
        // 1010... and 0101... both have span length 1.
        let n = 8;
        let mut up = 0u32;
        for l in (1..=n).step_by(2) {
            up |= 1 << (l - 1);
        }
        let w = Word::new(up, n); // 1010...
        assert_eq!(span_of_word(&w).length(), 1);
        let v = Word::new(!up, n); // 0101...
        assert_eq!(span_of_word(&v).length(), 1);
    }

    #[test]
    fn balance_is_final_partial_sum() {
        for w in Word::all(6) {
            assert_eq!(w.balance(), w.partial_sum(6));
            assert_eq!(w.balance(), 2 * w.hamming_weight() as i32 - 6);
        }
    }
}
