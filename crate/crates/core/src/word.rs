//! Words over the alphabet `{1, ..., n}` and their graded-lexicographic
//! indexing.
//!
//! Words are ordered first by length, then lexicographically. The same order
//! is used for the row and column indices of finite sections, so the words of
//! length at most `N` always occupy the index range `0..word_count(n, N)`.

use std::cmp::Ordering;
use std::fmt;

use smallvec::SmallVec;

use crate::error::{FockError, Result};

/// A word `f = f(1) f(2) ... f(k)`; the empty word is the vacuum `e_0`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(SmallVec<[u8; 16]>);

impl Word {
    pub fn empty() -> Self {
        Word(SmallVec::new())
    }

    /// Builds a word, checking every letter against the alphabet size.
    pub fn new(letters: &[usize], n: usize) -> Result<Self> {
        if n == 0 {
            return Err(FockError::EmptyAlphabet);
        }
        if n > u8::MAX as usize {
            return Err(FockError::Precondition(format!(
                "alphabet size {n} exceeds {}",
                u8::MAX
            )));
        }
        let mut w = SmallVec::with_capacity(letters.len());
        for &letter in letters {
            if letter == 0 || letter > n {
                return Err(FockError::LetterOutOfRange { letter, n });
            }
            w.push(letter as u8);
        }
        Ok(Word(w))
    }

    /// Builds a word without an alphabet check. Letters must be nonzero.
    pub fn from_letters<I: IntoIterator<Item = u8>>(letters: I) -> Self {
        let w: SmallVec<[u8; 16]> = letters.into_iter().collect();
        debug_assert!(w.iter().all(|&l| l > 0));
        Word(w)
    }

    /// The single-letter word `e_i`.
    pub fn letter(i: u8) -> Self {
        debug_assert!(i > 0);
        Word(SmallVec::from_slice(&[i]))
    }

    /// `f^k`, the k-fold concatenation.
    pub fn power(&self, k: usize) -> Self {
        let mut w = SmallVec::with_capacity(self.len() * k);
        for _ in 0..k {
            w.extend_from_slice(&self.0);
        }
        Word(w)
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<u8> {
        self.0.first().copied()
    }

    pub fn max_letter(&self) -> u8 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut w = SmallVec::with_capacity(self.len() + other.len());
        w.extend_from_slice(&self.0);
        w.extend_from_slice(&other.0);
        Word(w)
    }

    pub fn reverse(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    pub fn starts_with(&self, prefix: &Word) -> bool {
        self.0.starts_with(&prefix.0)
    }

    /// The suffix left after deleting `prefix`, if `prefix` is one.
    pub fn strip_prefix(&self, prefix: &Word) -> Option<Word> {
        self.0
            .strip_prefix(prefix.0.as_slice())
            .map(|rest| Word(SmallVec::from_slice(rest)))
    }

    /// The suffix starting at position `at`.
    pub fn suffix(&self, at: usize) -> Word {
        Word(SmallVec::from_slice(&self.0[at..]))
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word(SmallVec::from_slice(&self.0[..len]))
    }

    /// Letter counts `(k_1, ..., k_n)`.
    pub fn multidegree(&self, n: usize) -> Vec<usize> {
        let mut counts = vec![0; n];
        for &l in &self.0 {
            counts[l as usize - 1] += 1;
        }
        counts
    }

    /// Rank of the word among the words of the same length, i.e. the letters
    /// read as base-`n` digits.
    pub fn lex_rank(&self, n: usize) -> usize {
        self.0
            .iter()
            .fold(0usize, |acc, &l| acc * n + (l as usize - 1))
    }

    /// Position of the word in the graded-lexicographic enumeration.
    pub fn graded_index(&self, n: usize) -> usize {
        level_offset(n, self.len()) + self.lex_rank(n)
    }

    /// Inverse of [`Word::graded_index`].
    pub fn from_graded_index(n: usize, mut index: usize) -> Word {
        let mut len = 0;
        loop {
            let size = level_size(n, len);
            if index < size {
                break;
            }
            index -= size;
            len += 1;
        }
        let mut letters = vec![0u8; len];
        for slot in letters.iter_mut().rev() {
            *slot = (index % n) as u8 + 1;
            index /= n;
        }
        Word(SmallVec::from_vec(letters))
    }
}

/// `n^k`, the number of words of length exactly `k`.
pub fn level_size(n: usize, k: usize) -> usize {
    n.pow(k as u32)
}

/// Number of words of length strictly less than `k`.
pub fn level_offset(n: usize, k: usize) -> usize {
    if n == 1 {
        k
    } else {
        (n.pow(k as u32) - 1) / (n - 1)
    }
}

/// Number of words of length at most `k`, or `None` on overflow.
pub fn word_count(n: usize, k: usize) -> Option<usize> {
    if n == 1 {
        return k.checked_add(1);
    }
    let top = n.checked_pow(k as u32 + 1)?;
    Some((top - 1) / (n - 1))
}

/// Iterator over all words of length exactly `k`, in lexicographic order.
pub fn words_of_length(n: usize, k: usize) -> impl Iterator<Item = Word> {
    let offset = level_offset(n, k);
    (0..level_size(n, k)).map(move |r| Word::from_graded_index(n, offset + r))
}

/// Iterator over all words of length at most `k`, in graded-lex order.
pub fn words_up_to(n: usize, k: usize) -> impl Iterator<Item = Word> {
    (0..=k).flat_map(move |len| words_of_length(n, len))
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "e0");
        }
        write!(f, "e[")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "]")
    }
}
