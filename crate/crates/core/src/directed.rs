//! The construction operator `O_T`, in finite and streaming form, plus the
//! run-length encoding operator.
//!
//! The i-th block of `O_T` has length equal to the i-th letter of `O_T`
//! itself and is filled with `t_i`. When block `i` starts and the output is
//! exactly `i` letters long, the block's length is its own first letter,
//! i.e. `t_i`.

use crate::error::{Error, Result};
use crate::fifo::PendingQueue;
use crate::word::{Alphabet, Letter, Word};

/// Anything that yields directing letters one at a time.
pub trait LetterSource {
    /// Next directing letter, or `None` once a finite source is exhausted.
    fn next_letter(&mut self) -> Option<Letter>;

    /// The two-letter alphabet every emitted letter belongs to, if known.
    fn alphabet(&self) -> Option<Alphabet>;
}

impl<S: LetterSource + ?Sized> LetterSource for &mut S {
    fn next_letter(&mut self) -> Option<Letter> {
        (**self).next_letter()
    }

    fn alphabet(&self) -> Option<Alphabet> {
        (**self).alphabet()
    }
}

/// A finite word replayed as a directing sequence.
#[derive(Debug, Clone)]
pub struct WordSource {
    word: Word,
    pos: usize,
    alphabet: Option<Alphabet>,
}

impl WordSource {
    pub fn new(word: Word) -> Self {
        let alphabet = word.alphabet();
        WordSource {
            word,
            pos: 0,
            alphabet,
        }
    }

    pub fn consumed(&self) -> usize {
        self.pos
    }
}

impl LetterSource for WordSource {
    fn next_letter(&mut self) -> Option<Letter> {
        let l = self.word.letters().get(self.pos).copied()?;
        self.pos += 1;
        Some(l)
    }

    fn alphabet(&self) -> Option<Alphabet> {
        self.alphabet
    }
}

/// `O_T` for a finite directing word `T`.
///
/// Letters are validated by construction of [`Letter`]; an empty `T` is
/// rejected.
pub fn direct_finite(t: &Word) -> Result<Word> {
    if t.is_empty() {
        return Err(Error::domain("directing word must be nonempty"));
    }
    let mut x: Vec<Letter> = Vec::with_capacity(2 * t.len());
    for (k, &letter) in t.letters().iter().enumerate() {
        x.push(letter);
        let extra = x[k].block_len() - 1;
        x.extend(std::iter::repeat_n(letter, extra));
    }
    Ok(Word::from_letters(x))
}

/// Streaming state of the construction over an arbitrary source.
///
/// `pending` holds the emitted letters whose values have not yet been used
/// as block lengths: positions `blocks..emitted` (0-indexed). Each block
/// pops one of them, or, when the queue is empty, uses its own fill letter.
#[derive(Debug, Clone)]
pub struct DirectedStream<S> {
    source: S,
    pending: PendingQueue,
    blocks: u64,
    emitted: u64,
    fill: Letter,
    remaining: usize,
    exhausted: bool,
}

impl<S: LetterSource> DirectedStream<S> {
    pub fn new(source: S) -> Self {
        let pending = PendingQueue::for_alphabet(source.alphabet());
        DirectedStream {
            source,
            pending,
            blocks: 0,
            emitted: 0,
            fill: Letter::ONE,
            remaining: 0,
            exhausted: false,
        }
    }

    /// Letters emitted so far.
    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    /// Blocks started so far, equal to the directing letters consumed.
    pub fn blocks(&self) -> u64 {
        self.blocks
    }

    /// Length of the pending queue.
    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn pending_heap_bytes(&self) -> usize {
        self.pending.heap_bytes()
    }

    pub fn source(&self) -> &S {
        &self.source
    }

    pub fn into_source(self) -> S {
        self.source
    }

    /// Emits the next letter of `O_T`; `None` once a finite source runs out
    /// between blocks.
    #[inline]
    pub fn next_letter(&mut self) -> Option<Letter> {
        if self.remaining == 0 {
            if self.exhausted {
                return None;
            }
            let Some(fill) = self.source.next_letter() else {
                self.exhausted = true;
                return None;
            };
            self.blocks += 1;
            self.fill = fill;
            match self.pending.pop() {
                Some(len) => self.remaining = len.block_len(),
                None => {
                    // The block's first letter is also its own length, so it
                    // is consumed immediately and never queued.
                    self.remaining = fill.block_len() - 1;
                    self.emitted += 1;
                    return Some(fill);
                }
            }
        }
        self.remaining -= 1;
        self.emitted += 1;
        self.pending.push(self.fill);
        Some(self.fill)
    }

    /// Emits up to `n` letters into a word.
    pub fn take_word(&mut self, n: usize) -> Word {
        std::iter::from_fn(|| self.next_letter()).take(n).collect()
    }
}

impl<S: LetterSource> Iterator for DirectedStream<S> {
    type Item = Letter;

    fn next(&mut self) -> Option<Letter> {
        self.next_letter()
    }
}

/// A maximal run of one letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub letter: Letter,
    pub len: u64,
}

/// Maximal runs of a finite word.
///
/// The last run of a finite word may continue in any extension, so
/// `last_run_complete` is always `false`; callers comparing run lengths
/// of prefixes should drop the final run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunEncoding {
    pub runs: Vec<Run>,
    pub last_run_complete: bool,
}

impl RunEncoding {
    /// Runs that are certain to be maximal in every extension of the word.
    pub fn complete_runs(&self) -> &[Run] {
        if self.last_run_complete {
            &self.runs
        } else {
            &self.runs[..self.runs.len().saturating_sub(1)]
        }
    }

    pub fn total_len(&self) -> u64 {
        self.runs.iter().map(|r| r.len).sum()
    }
}

pub fn rle(w: &Word) -> RunEncoding {
    let mut runs: Vec<Run> = Vec::new();
    for &l in w.letters() {
        match runs.last_mut() {
            Some(r) if r.letter == l => r.len += 1,
            _ => runs.push(Run { letter: l, len: 1 }),
        }
    }
    RunEncoding {
        runs,
        last_run_complete: false,
    }
}

/// Run lengths of `w` as a word (the exponent trajectory).
///
/// Fails if a run is longer than the largest representable letter.
pub fn delta(w: &Word) -> Result<Word> {
    rle(w)
        .runs
        .iter()
        .map(|r| {
            u32::try_from(r.len)
                .map_err(|_| Error::InvalidLetter(u32::MAX))
                .and_then(Letter::new)
        })
        .collect::<Result<Vec<_>>>()
        .map(Word::from_letters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        Word::from_digits(s).unwrap()
    }

    fn runs(pairs: &[(u32, u64)]) -> Vec<Run> {
        pairs
            .iter()
            .map(|&(l, len)| Run {
                letter: Letter::new(l).unwrap(),
                len,
            })
            .collect()
    }

    #[test]
    fn classic_prefix() {
        assert_eq!(direct_finite(&w("12121212")).unwrap(), w("122112122122"));
    }

    #[test]
    fn step_five_of_block_walkthrough() {
        assert_eq!(direct_finite(&w("21122")).unwrap(), w("2211122"));
    }

    #[test]
    fn one_three_prefix() {
        assert_eq!(
            direct_finite(&w("13131313")).unwrap(),
            w("1333111333131333")
        );
    }

    #[test]
    fn empty_directing_word() {
        assert!(direct_finite(&Word::new()).is_err());
    }

    #[test]
    fn stream_classic_fifteen() {
        let src = WordSource::new(w("121212121212121212"));
        let mut s = DirectedStream::new(src);
        assert_eq!(s.take_word(15), w("122112122122112"));
    }

    #[test]
    fn stream_zero_emissions() {
        let mut s = DirectedStream::new(WordSource::new(w("12")));
        assert!(s.take_word(0).is_empty());
        assert_eq!(s.emitted(), 0);
    }

    #[test]
    fn stream_exhausts_finite_source() {
        let t = w("21122");
        let mut s = DirectedStream::new(WordSource::new(t.clone()));
        let all: Word = s.by_ref().collect();
        assert_eq!(all, direct_finite(&t).unwrap());
        assert_eq!(s.next_letter(), None);
    }

    #[test]
    fn stream_byte_queue_for_wide_words() {
        let t = w("1231231231");
        let got: Word = DirectedStream::new(WordSource::new(t.clone())).collect();
        assert_eq!(got, direct_finite(&t).unwrap());
    }

    #[test]
    fn rle_examples() {
        assert_eq!(
            rle(&w("122112")).runs,
            runs(&[(1, 1), (2, 2), (1, 2), (2, 1)])
        );
        assert_eq!(rle(&w("222")).runs, runs(&[(2, 3)]));
        assert_eq!(
            rle(&w("122112122122")).runs,
            runs(&[
                (1, 1),
                (2, 2),
                (1, 2),
                (2, 1),
                (1, 1),
                (2, 2),
                (1, 1),
                (2, 2)
            ])
        );
        let enc = rle(&w("122"));
        assert!(!enc.last_run_complete);
        assert_eq!(enc.complete_runs().len(), 1);
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta(&w("122112122")).unwrap(), w("122112"));
        assert_eq!(delta(&w("1")).unwrap(), w("1"));
        assert_eq!(delta(&w("333111")).unwrap(), w("33"));
    }

    fn word_12(max: usize) -> impl Strategy<Value = Word> {
        proptest::collection::vec(1u32..=2, 1..=max).prop_map(|v| Word::from_values(v).unwrap())
    }

    fn word_any(max: usize) -> impl Strategy<Value = Word> {
        (1u32..=3, 2u32..=5).prop_flat_map(move |(a, b)| {
            let b = if a == b { a + 1 } else { b };
            proptest::collection::vec(prop_oneof![Just(a), Just(b)], 1..=max)
                .prop_map(|v| Word::from_values(v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn prefix_monotone(t in word_any(16), extra in 1u32..=5) {
            let o = direct_finite(&t).unwrap();
            let mut t2 = t.clone();
            t2.push(Letter::new(extra).unwrap());
            prop_assert!(o.is_prefix_of(&direct_finite(&t2).unwrap()));
        }

        #[test]
        fn length_at_least_directing_length(t in word_any(16)) {
            prop_assert!(direct_finite(&t).unwrap().len() >= t.len());
        }

        #[test]
        fn first_n_letters_depend_on_first_n_directing_letters(
            t in word_12(16), tail_a in word_12(8), tail_b in word_12(8)
        ) {
            let n = t.len();
            let mut ta = t.clone();
            let mut tb = t.clone();
            tail_a.letters().iter().for_each(|&l| ta.push(l));
            tail_b.letters().iter().for_each(|&l| tb.push(l));
            let oa = direct_finite(&ta).unwrap();
            let ob = direct_finite(&tb).unwrap();
            prop_assert_eq!(oa.prefix(n), ob.prefix(n));
        }

        #[test]
        fn stream_equals_batch(t in word_any(64), n in 0usize..200) {
            let mut s = DirectedStream::new(WordSource::new(t.clone()));
            let got = s.take_word(n);
            let consumed = s.blocks() as usize;
            let batch = direct_finite(&t.prefix(consumed.max(1))).unwrap();
            prop_assert_eq!(got.clone(), batch.prefix(got.len()));
            if got.len() < n {
                prop_assert_eq!(got, direct_finite(&t).unwrap());
            }
        }
    }
}
