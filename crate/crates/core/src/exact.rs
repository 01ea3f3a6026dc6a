//! Exact letter probabilities of directed sequences.
//!
//! Closed forms for the i.i.d. and Markov two-step laws, the `S_{n,k}`
//! classification of directing prefixes, and brute-force oracles that sum
//! over every directing tuple of length `n`.
//!
//! The oracles visit tuples in lexicographic order (first letter most
//! significant, `lo < hi`), split into a fixed number of contiguous shards.
//! Each shard is summed with a compensated accumulator and shard totals are
//! merged in order, so the result does not depend on the thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sum::NeumaierSum;
use crate::word::{Alphabet, Letter, Word};

/// Largest tuple length the enumeration oracles accept.
pub const MAX_ENUM_N: usize = 24;

const DEFAULT_SHARD_BITS: u32 = 8;

/// A probability in `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Probability(f64);

impl Probability {
    pub fn new(p: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&p) {
            Ok(Probability(p))
        } else {
            Err(Error::domain(format!("probability {p} must lie in [0,1]")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn complement(self) -> Probability {
        Probability(1.0 - self.0)
    }
}

/// `X_n - (2 - p)` for a letter over `{1,2}`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CenteredLetter(f64);

impl CenteredLetter {
    pub fn get(self) -> f64 {
        self.0
    }
}

pub fn center(x: Letter, p: Probability) -> Result<CenteredLetter> {
    match x.value() {
        1 | 2 => Ok(CenteredLetter(x.value() as f64 - (2.0 - p.get()))),
        v => Err(Error::domain(format!(
            "cannot center letter {v} outside {{1,2}}"
        ))),
    }
}

fn check_enum_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    if n > MAX_ENUM_N {
        return Err(Error::ResourceLimit(format!(
            "enumeration over 2^{n} tuples exceeds the cap n <= {MAX_ENUM_N}"
        )));
    }
    Ok(())
}

/// First `limit` letters of `O_t` written into `out`; returns how many were
/// written (less than `limit` only when `t` is too short).
#[inline]
pub(crate) fn directed_prefix(t: &[u8], limit: usize, out: &mut [u8]) -> usize {
    let mut len = 0;
    for (k, &x) in t.iter().enumerate() {
        if len >= limit {
            break;
        }
        let block = if k < len { out[k] } else { x } as usize;
        let w = block.min(limit - len);
        out[len..len + w].fill(x);
        len += w;
    }
    len
}

/// Decodes tuple `index` of `{lo,hi}^n` in lexicographic order.
#[inline]
fn decode_tuple(index: u32, n: usize, alphabet: Alphabet, out: &mut [u8]) {
    let (lo, hi) = (alphabet.lo().value(), alphabet.hi().value());
    for (j, slot) in out[..n].iter_mut().enumerate() {
        *slot = if (index >> (n - 1 - j)) & 1 == 1 {
            hi
        } else {
            lo
        };
    }
}

/// Weighted sum over all `2^bits` indices, in fixed shards.
fn sharded_sum<F>(bits: u32, shard_bits: u32, f: F) -> f64
where
    F: Fn(u32) -> f64 + Sync,
{
    let shard_bits = shard_bits.min(bits);
    let shards = 1u32 << shard_bits;
    let per_shard = 1u32 << (bits - shard_bits);
    let partials: Vec<NeumaierSum> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let start = s * per_shard;
            (start..start + per_shard).map(&f).collect()
        })
        .collect();
    let mut total = NeumaierSum::new();
    partials.iter().for_each(|p| total.merge(p));
    total.value()
}

/// Same as [`sharded_sum`] for several accumulators at once.
fn sharded_sums<const K: usize, F>(bits: u32, shard_bits: u32, f: F) -> [f64; K]
where
    F: Fn(u32, &mut [NeumaierSum; K]) + Sync,
{
    let shard_bits = shard_bits.min(bits);
    let shards = 1u32 << shard_bits;
    let per_shard = 1u32 << (bits - shard_bits);
    let partials: Vec<[NeumaierSum; K]> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut acc = [NeumaierSum::new(); K];
            let start = s * per_shard;
            (start..start + per_shard).for_each(|i| f(i, &mut acc));
            acc
        })
        .collect();
    let mut total = [NeumaierSum::new(); K];
    for p in &partials {
        for (t, q) in total.iter_mut().zip(p) {
            t.merge(q);
        }
    }
    total.map(|s| s.value())
}

/// `p^i` and `(1-p)^i` for `i` in `0..=n`.
fn power_tables(p: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let pw = |x: f64| (0..=n as i32).map(|i| x.powi(i)).collect::<Vec<_>>();
    (pw(p), pw(1.0 - p))
}

/// The `k` with `t ∈ S_{n,k}`, `n = |t|`: the smallest `j` such that the
/// letters of `O_{t_1..t_j}` sum to at least `n`.
pub fn snk_index(t: &Word) -> Result<usize> {
    if t.is_empty() {
        return Err(Error::domain("snk_index needs a nonempty tuple"));
    }
    if let Some(bad) = t.letters().iter().find(|l| l.value() > 2) {
        return Err(Error::domain(format!(
            "snk_index is defined over {{1,2}}; found letter {bad}"
        )));
    }
    Ok(snk_index_raw(&t.values()))
}

/// Letters must lie in `{1,2}`.
fn snk_index_raw(t: &[u8]) -> usize {
    let n = t.len();
    // |w_j| <= 2j <= 2n and one block may overshoot by at most 2.
    let mut out = [0u8; 2 * MAX_ENUM_N + 4];
    let mut buf_vec;
    let out: &mut [u8] = if 2 * n + 4 <= out.len() {
        &mut out[..]
    } else {
        buf_vec = vec![0u8; 2 * n + 4];
        &mut buf_vec[..]
    };
    let mut len = 0usize;
    let mut total = 0usize;
    for (k, &x) in t.iter().enumerate() {
        let block = if k < len { out[k] } else { x } as usize;
        out[len..len + block].fill(x);
        len += block;
        total += block * x as usize;
        if total >= n {
            return k + 1;
        }
    }
    unreachable!("letters of O_t sum to at least |t|")
}

/// `|S_{n,k}|` for every `k ∈ [1,n]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SnkTable {
    pub n: usize,
    /// `sizes[k - 1] = |S_{n,k}|`.
    pub sizes: Vec<u64>,
}

impl SnkTable {
    pub fn size(&self, k: usize) -> u64 {
        self.sizes[k - 1]
    }

    pub fn total(&self) -> u64 {
        self.sizes.iter().sum()
    }
}

pub fn snk_partition(n: usize) -> Result<SnkTable> {
    check_enum_n(n)?;
    let shard_bits = DEFAULT_SHARD_BITS.min(n as u32);
    let per_shard = 1u32 << (n as u32 - shard_bits);
    let partials: Vec<Vec<u64>> = (0..1u32 << shard_bits)
        .into_par_iter()
        .map(|s| {
            let mut sizes = vec![0u64; n];
            let mut t = [0u8; MAX_ENUM_N];
            for i in s * per_shard..(s + 1) * per_shard {
                decode_tuple(i, n, Alphabet::ONE_TWO, &mut t);
                sizes[snk_index_raw(&t[..n]) - 1] += 1;
            }
            sizes
        })
        .collect();
    let mut sizes = vec![0u64; n];
    for p in partials {
        sizes.iter_mut().zip(p).for_each(|(a, b)| *a += b);
    }
    Ok(SnkTable { n, sizes })
}

/// Every tuple of `{1,2}^n` with its `S_{n,k}` index, in lexicographic order.
pub fn snk_listing(n: usize) -> Result<Vec<(Word, usize)>> {
    check_enum_n(n)?;
    let mut t = [0u8; MAX_ENUM_N];
    Ok((0..1u32 << n)
        .map(|i| {
            decode_tuple(i, n, Alphabet::ONE_TWO, &mut t);
            let w = t[..n].iter().map(|&v| Letter::from_raw(v)).collect();
            (w, snk_index_raw(&t[..n]))
        })
        .collect())
}

/// `P(X_n = lo)` under the i.i.d. law with `P(T = lo) = p`, by closed form.
///
/// * `{1,2}`: `p(1 - p^(n-2) + p^(n-1))` for `n >= 2`;
/// * `{1,a}`, `a > 2`: `p(1 - p^(n-a) + p^(n-1))` for `n >= a`;
/// * `{a,b}`, `1 < a < b`: `p` for `n >= b + 1`.
///
/// Below the threshold the closed form does not apply and an
/// [`Error::OutOfRange`] is returned; use [`p_xn_enum`] there.
pub fn p_xn_closed(p: Probability, n: u64, alphabet: Alphabet) -> Result<Probability> {
    let p = p.get();
    let (lo, hi) = (alphabet.lo().value() as u64, alphabet.hi().value() as u64);
    let value = if lo == 1 {
        if n < hi {
            return Err(Error::OutOfRange {
                what: "closed form over {1,a} needs n >= a",
                n,
                min: hi,
            });
        }
        let e1 = i32::try_from(n - hi).unwrap_or(i32::MAX);
        let e2 = i32::try_from(n - 1).unwrap_or(i32::MAX);
        p * (1.0 - p.powi(e1) + p.powi(e2))
    } else {
        if n < hi + 1 {
            return Err(Error::OutOfRange {
                what: "closed form over {a,b} needs n >= b+1",
                n,
                min: hi + 1,
            });
        }
        p
    };
    Probability::new(value.clamp(0.0, 1.0))
}

/// `P(X_n = letter)` by weighted enumeration of `{lo,hi}^n`.
pub fn p_xn_enum(
    p: Probability,
    n: usize,
    alphabet: Alphabet,
    letter: Letter,
) -> Result<Probability> {
    p_xn_enum_sharded(p, n, alphabet, letter, DEFAULT_SHARD_BITS)
}

pub(crate) fn p_xn_enum_sharded(
    p: Probability,
    n: usize,
    alphabet: Alphabet,
    letter: Letter,
    shard_bits: u32,
) -> Result<Probability> {
    check_enum_n(n)?;
    if !alphabet.contains(letter) {
        return Err(Error::domain(format!(
            "letter {letter} is not in {alphabet}"
        )));
    }
    let (pw_lo, pw_hi) = power_tables(p.get(), n);
    let target = letter.value();
    let value = sharded_sum(n as u32, shard_bits, |i| {
        let mut t = [0u8; MAX_ENUM_N];
        let mut x = [0u8; MAX_ENUM_N];
        decode_tuple(i, n, alphabet, &mut t);
        directed_prefix(&t[..n], n, &mut x);
        if x[n - 1] == target {
            let h = i.count_ones() as usize;
            pw_lo[n - h] * pw_hi[h]
        } else {
            0.0
        }
    });
    Probability::new(value.clamp(0.0, 1.0))
}

/// `P(X_m = a ∧ X_n = b)` for every `a, b ∈ {1,2}`: `table[a-1][b-1]`.
pub fn joint_table(p: Probability, m: usize, n: usize) -> Result<[[f64; 2]; 2]> {
    check_enum_n(n)?;
    if m == 0 || m >= n {
        return Err(Error::domain(format!("need 1 <= m < n, got m={m}, n={n}")));
    }
    let (pw_lo, pw_hi) = power_tables(p.get(), n);
    let sums = sharded_sums::<4, _>(n as u32, DEFAULT_SHARD_BITS, |i, acc| {
        let mut t = [0u8; MAX_ENUM_N];
        let mut x = [0u8; MAX_ENUM_N];
        decode_tuple(i, n, Alphabet::ONE_TWO, &mut t);
        directed_prefix(&t[..n], n, &mut x);
        let h = i.count_ones() as usize;
        let cell = 2 * (x[m - 1] as usize - 1) + (x[n - 1] as usize - 1);
        acc[cell].add(pw_lo[n - h] * pw_hi[h]);
    });
    Ok([[sums[0], sums[1]], [sums[2], sums[3]]])
}

/// `P(X_m = lm ∧ X_n = ln)` over `{1,2}` by enumeration.
pub fn joint_enum(
    p: Probability,
    m: usize,
    n: usize,
    lm: Letter,
    ln: Letter,
) -> Result<Probability> {
    for l in [lm, ln] {
        if !Alphabet::ONE_TWO.contains(l) {
            return Err(Error::domain(format!("letter {l} is not in {{1,2}}")));
        }
    }
    let table = joint_table(p, m, n)?;
    Probability::new(table[lm.block_len() - 1][ln.block_len() - 1].clamp(0.0, 1.0))
}

/// `E(X̃_m X̃_n) = -(1-p)^2 p^(n-1)`, valid for `n >= m + 2`.
pub fn corr_closed(p: Probability, m: u64, n: u64) -> Result<f64> {
    if n < m + 2 {
        return Err(Error::OutOfRange {
            what: "correlation closed form needs n >= m+2",
            n,
            min: m + 2,
        });
    }
    let p = p.get();
    let e = i32::try_from(n - 1).unwrap_or(i32::MAX);
    Ok(-(1.0 - p).powi(2) * p.powi(e))
}

/// `E(X̃_m X̃_n)` from the exact joint law.
pub fn corr_enum(p: Probability, m: usize, n: usize) -> Result<f64> {
    let table = joint_table(p, m, n)?;
    let c = [center(Letter::ONE, p)?.get(), center(Letter::TWO, p)?.get()];
    let mut s = NeumaierSum::new();
    for (a, row) in table.iter().enumerate() {
        for (b, &prob) in row.iter().enumerate() {
            s.add(prob * c[a] * c[b]);
        }
    }
    Ok(s.value())
}

/// `P(T_s = T_r)` (`same`) or `P(T_s ≠ T_r)` for a symmetric two-state chain
/// with switch probability `p`, `gap = s - r`.
pub fn markov_two_step(p: Probability, gap: u32, same: bool) -> Result<Probability> {
    if gap == 0 {
        return Err(Error::domain("gap must be at least 1"));
    }
    let r = (1.0 - 2.0 * p.get()).powi(gap as i32);
    let v = if same {
        0.5 * (1.0 + r)
    } else {
        0.5 * (1.0 - r)
    };
    Probability::new(v.clamp(0.0, 1.0))
}

/// `P(X_n = lo)` when `T` is the symmetric chain on `alphabet` started at
/// `start`, by enumeration of all `2^(n-1)` switch patterns.
pub fn markov_xn_enum(
    p: Probability,
    n: usize,
    alphabet: Alphabet,
    start: Letter,
) -> Result<Probability> {
    markov_xn_enum_letter(p, n, alphabet, start, alphabet.lo())
}

pub fn markov_xn_enum_letter(
    p: Probability,
    n: usize,
    alphabet: Alphabet,
    start: Letter,
    letter: Letter,
) -> Result<Probability> {
    check_enum_n(n)?;
    if !alphabet.contains(start) || !alphabet.contains(letter) {
        return Err(Error::domain(format!(
            "start {start} and letter {letter} must belong to {alphabet}"
        )));
    }
    let bits = (n - 1) as u32;
    let (pw_flip, pw_stay) = power_tables(p.get(), n);
    let (lo, hi) = (alphabet.lo().value(), alphabet.hi().value());
    let target = letter.value();
    let value = sharded_sum(bits, DEFAULT_SHARD_BITS, |i| {
        let mut t = [0u8; MAX_ENUM_N];
        let mut x = [0u8; MAX_ENUM_N];
        t[0] = start.value();
        for j in 1..n {
            let flip = (i >> (bits as usize - j)) & 1 == 1;
            t[j] = match (flip, t[j - 1] == lo) {
                (false, _) => t[j - 1],
                (true, true) => hi,
                (true, false) => lo,
            };
        }
        directed_prefix(&t[..n], n, &mut x);
        if x[n - 1] == target {
            let f = i.count_ones() as usize;
            pw_flip[f] * pw_stay[n - 1 - f]
        } else {
            0.0
        }
    });
    Probability::new(value.clamp(0.0, 1.0))
}

/// Probability of `S_{n,k}` and `P(X_n = 1 | S_{n,k})` under the i.i.d.
/// law, for every `k` with nonzero mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnkConditional {
    pub k: usize,
    pub mass: f64,
    pub p_one_given: f64,
}

pub fn conditional_by_snk(p: Probability, n: usize) -> Result<Vec<SnkConditional>> {
    check_enum_n(n)?;
    let (pw_lo, pw_hi) = power_tables(p.get(), n);
    let mut mass = vec![NeumaierSum::new(); n];
    let mut ones = vec![NeumaierSum::new(); n];
    let mut t = [0u8; MAX_ENUM_N];
    let mut x = [0u8; MAX_ENUM_N];
    for i in 0..1u32 << n {
        decode_tuple(i, n, Alphabet::ONE_TWO, &mut t);
        let k = snk_index_raw(&t[..n]);
        directed_prefix(&t[..n], n, &mut x);
        let h = i.count_ones() as usize;
        let w = pw_lo[n - h] * pw_hi[h];
        mass[k - 1].add(w);
        if x[n - 1] == 1 {
            ones[k - 1].add(w);
        }
    }
    Ok(mass
        .iter()
        .zip(&ones)
        .enumerate()
        .filter(|(_, (m, _))| m.value() > 0.0)
        .map(|(i, (m, o))| SnkConditional {
            k: i + 1,
            mass: m.value(),
            p_one_given: o.value() / m.value(),
        })
        .collect())
}
