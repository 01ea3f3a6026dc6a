//! FIFO of letters whose values are still to be read as block lengths.
//!
//! The gap between the write cursor and the read cursor of the construction
//! grows linearly with the emitted length, so for two-letter alphabets the
//! queue stores one bit per letter in a ring of 64-bit words.

use std::collections::VecDeque;

use crate::word::{Alphabet, Letter};

/// Bit-packed FIFO: `false` / `true` per entry, 64 entries per word.
#[derive(Debug, Clone, Default)]
pub struct BitFifo {
    words: VecDeque<u64>,
    // Bit offset of the front entry inside `words[0]`.
    head: u32,
    len: usize,
}

impl BitFifo {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        let pos = self.head as usize + self.len;
        let slot = pos / 64;
        if slot == self.words.len() {
            self.words.push_back(0);
        }
        if bit {
            self.words[slot] |= 1u64 << (pos % 64);
        }
        self.len += 1;
    }

    #[inline]
    pub fn pop(&mut self) -> Option<bool> {
        if self.len == 0 {
            return None;
        }
        let bit = (self.words[0] >> self.head) & 1 == 1;
        self.len -= 1;
        self.head += 1;
        if self.head == 64 {
            self.words.pop_front();
            self.head = 0;
        } else if self.len == 0 {
            // Keep the ring from accumulating a stale partial word.
            self.words.clear();
            self.head = 0;
        }
        Some(bit)
    }

    /// Heap bytes held by the ring.
    pub fn heap_bytes(&self) -> usize {
        self.words.capacity() * std::mem::size_of::<u64>()
    }
}

/// Queue of pending letters: packed when the alphabet is known to have two
/// letters, one byte per letter otherwise.
#[derive(Debug, Clone)]
pub enum PendingQueue {
    Packed { bits: BitFifo, alphabet: Alphabet },
    Bytes(VecDeque<u8>),
}

impl PendingQueue {
    pub fn for_alphabet(alphabet: Option<Alphabet>) -> Self {
        match alphabet {
            Some(alphabet) => PendingQueue::Packed {
                bits: BitFifo::new(),
                alphabet,
            },
            None => PendingQueue::Bytes(VecDeque::new()),
        }
    }

    #[inline]
    pub fn push(&mut self, l: Letter) {
        match self {
            PendingQueue::Packed { bits, alphabet } => {
                debug_assert!(alphabet.contains(l), "letter {l} outside {alphabet}");
                bits.push(l == alphabet.hi());
            }
            PendingQueue::Bytes(q) => q.push_back(l.value()),
        }
    }

    #[inline]
    pub fn pop(&mut self) -> Option<Letter> {
        match self {
            PendingQueue::Packed { bits, alphabet } => {
                bits.pop()
                    .map(|b| if b { alphabet.hi() } else { alphabet.lo() })
            }
            PendingQueue::Bytes(q) => q.pop_front().map(Letter::from_raw),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        match self {
            PendingQueue::Packed { bits, .. } => bits.len(),
            PendingQueue::Bytes(q) => q.len(),
        }
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn heap_bytes(&self) -> usize {
        match self {
            PendingQueue::Packed { bits, .. } => bits.heap_bytes(),
            PendingQueue::Bytes(q) => q.capacity(),
        }
    }

    /// Upper bound on the bytes needed to hold `entries` letters.
    pub fn bytes_for(entries: u64, packed: bool) -> u64 {
        if packed {
            entries.div_ceil(64) * 8
        } else {
            entries
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_pop() {
        let mut f = BitFifo::new();
        assert_eq!(f.pop(), None);
        f.push(true);
        assert_eq!(f.pop(), Some(true));
        assert_eq!(f.pop(), None);
        assert!(f.is_empty());
    }

    #[test]
    fn crosses_word_boundaries() {
        let mut f = BitFifo::new();
        for i in 0..200 {
            f.push(i % 3 == 0);
        }
        for i in 0..150 {
            assert_eq!(f.pop(), Some(i % 3 == 0));
        }
        for i in 200..300 {
            f.push(i % 3 == 0);
        }
        for i in 150..300 {
            assert_eq!(f.pop(), Some(i % 3 == 0));
        }
        assert_eq!(f.len(), 0);
    }

    #[derive(Debug, Clone)]
    enum Op {
        Push(bool),
        Pop,
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![3 => any::<bool>().prop_map(Op::Push), 2 => Just(Op::Pop)]
    }

    proptest! {
        #[test]
        fn matches_vecdeque(ops in proptest::collection::vec(op(), 0..2000)) {
            let mut f = BitFifo::new();
            let mut model = VecDeque::new();
            for o in ops {
                match o {
                    Op::Push(b) => { f.push(b); model.push_back(b); }
                    Op::Pop => prop_assert_eq!(f.pop(), model.pop_front()),
                }
                prop_assert_eq!(f.len(), model.len());
            }
        }
    }

    #[test]
    fn packed_queue_maps_letters() {
        let ab = Alphabet::from_values(1, 3).unwrap();
        let mut q = PendingQueue::for_alphabet(Some(ab));
        for v in [3u32, 1, 1, 3] {
            q.push(Letter::new(v).unwrap());
        }
        let out: Vec<u8> = std::iter::from_fn(|| q.pop()).map(|l| l.value()).collect();
        assert_eq!(out, vec![3, 1, 1, 3]);
    }
}
