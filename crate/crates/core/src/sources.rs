//! Directing-sequence generators and the source descriptor mini-language.
//!
//! Descriptor grammar (keys are case-sensitive, no whitespace):
//!
//! ```text
//! periodic:<digits>                      e.g. periodic:122
//! classic:<a>,<b>                        e.g. classic:1,3
//! iid:p=<float>,a=<int>,b=<int>          P(a) = p
//! markov:p=<float>,a=<int>,b=<int>[,start=<int>]   switch probability p
//! selfref
//! ```
//!
//! Randomness: every stochastic source owns a ChaCha8 generator seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`. Independent trials use
//! [`Seed::derive`], a SplitMix64 finalizer over `seed + (i+1)·φ64`.
//! A Bernoulli(p) draw takes the top 53 bits of one `u64` as `u ∈ [0,1)` and
//! succeeds iff `u < p`.

use std::fmt;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::directed::LetterSource;
use crate::error::{Error, Result};
use crate::fifo::BitFifo;
use crate::word::{Alphabet, Letter, Word};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    /// Seed of trial `index`, independent of how trials are scheduled.
    pub fn derive(self, index: u64) -> Seed {
        Seed(splitmix64(self.0.wrapping_add(
            GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1)),
        )))
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A probability strictly inside `]0,1[`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct OpenProb(f64);

impl OpenProb {
    pub fn new(p: f64) -> Result<Self> {
        if p > 0.0 && p < 1.0 {
            Ok(OpenProb(p))
        } else {
            Err(Error::domain(format!("probability {p} must lie in ]0,1[")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// Parsed directing-sequence descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SourceSpec {
    /// `pattern` repeated forever.
    Periodic { pattern: Word },
    /// Alternating `a, b, a, b, ...`; directs the generalized Kolakoski word.
    Classic { a: Letter, b: Letter },
    /// Independent letters, `a` with probability `p`.
    Iid { p: OpenProb, a: Letter, b: Letter },
    /// Two-state chain starting at `start`, switching with probability `p`.
    Markov {
        p: OpenProb,
        a: Letter,
        b: Letter,
        start: Letter,
    },
    /// The directing word built jointly with its directed word.
    SelfRef,
}

impl SourceSpec {
    pub fn periodic(pattern: Word) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::domain("periodic pattern must be nonempty"));
        }
        let distinct = {
            let mut v = pattern.values();
            v.sort_unstable();
            v.dedup();
            v.len()
        };
        if distinct > 2 {
            return Err(Error::domain(
                "periodic pattern may use at most two distinct letters",
            ));
        }
        Ok(SourceSpec::Periodic { pattern })
    }

    pub fn classic(a: Letter, b: Letter) -> Result<Self> {
        Alphabet::from_pair(a, b)?;
        Ok(SourceSpec::Classic { a, b })
    }

    pub fn iid(p: f64, a: Letter, b: Letter) -> Result<Self> {
        Alphabet::from_pair(a, b)?;
        Ok(SourceSpec::Iid {
            p: OpenProb::new(p)?,
            a,
            b,
        })
    }

    pub fn markov(p: f64, a: Letter, b: Letter, start: Option<Letter>) -> Result<Self> {
        Alphabet::from_pair(a, b)?;
        let start = start.unwrap_or(a);
        if start != a && start != b {
            return Err(Error::domain(format!(
                "start letter {start} is not one of {a},{b}"
            )));
        }
        Ok(SourceSpec::Markov {
            p: OpenProb::new(p)?,
            a,
            b,
            start,
        })
    }

    /// The alphabet whose smaller letter is tracked by density statistics.
    ///
    /// A periodic pattern made of a single letter `x` is taken over `{1,x}`
    /// (or `{1,2}` when `x = 1`), so the tracked letter is `1`.
    pub fn alphabet(&self) -> Alphabet {
        match self {
            SourceSpec::Periodic { pattern } => pattern.alphabet().unwrap_or_else(|| {
                let x = pattern.letters()[0];
                if x == Letter::ONE {
                    Alphabet::ONE_TWO
                } else {
                    Alphabet::new(Letter::ONE, x).expect("x > 1")
                }
            }),
            SourceSpec::Classic { a, b }
            | SourceSpec::Iid { a, b, .. }
            | SourceSpec::Markov { a, b, .. } => {
                Alphabet::from_pair(*a, *b).expect("validated on construction")
            }
            SourceSpec::SelfRef => Alphabet::ONE_TWO,
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, SourceSpec::Iid { .. } | SourceSpec::Markov { .. })
    }

    /// Fresh generator state.
    pub fn start(&self, seed: Seed) -> SourceState {
        SourceState::new(self.clone(), seed)
    }
}

impl fmt::Display for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceSpec::Periodic { pattern } => write!(f, "periodic:{pattern}"),
            SourceSpec::Classic { a, b } => write!(f, "classic:{a},{b}"),
            SourceSpec::Iid { p, a, b } => write!(f, "iid:p={},a={a},b={b}", p.get()),
            SourceSpec::Markov { p, a, b, start } => {
                write!(f, "markov:p={},a={a},b={b},start={start}", p.get())
            }
            SourceSpec::SelfRef => f.write_str("selfref"),
        }
    }
}

impl std::str::FromStr for SourceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_spec(s)
    }
}

/// Parses a source descriptor. Syntax errors report a 0-based byte offset.
pub fn parse_spec(text: &str) -> Result<SourceSpec> {
    let syntax = |position: usize, message: String| Error::Syntax { position, message };
    if text.is_empty() {
        return Err(syntax(0, "empty descriptor".into()));
    }
    let (kind, body, body_at) = match text.find(':') {
        Some(i) => (&text[..i], Some(&text[i + 1..]), i + 1),
        None => (text, None, text.len()),
    };
    match (kind, body) {
        ("selfref", None) => Ok(SourceSpec::SelfRef),
        ("selfref", Some(_)) => Err(syntax(body_at - 1, "selfref takes no arguments".into())),
        ("periodic", Some(body)) => {
            if body.is_empty() {
                return Err(syntax(body_at, "expected a digit pattern".into()));
            }
            let pattern = Word::from_digits(body).map_err(|e| match e {
                Error::Syntax { position, message } => syntax(body_at + position, message),
                other => other,
            })?;
            SourceSpec::periodic(pattern)
        }
        ("classic", Some(body)) => {
            let items = split_items(body, body_at);
            if items.len() != 2 {
                return Err(syntax(body_at, "expected <a>,<b>".into()));
            }
            let a = parse_letter(items[0])?;
            let b = parse_letter(items[1])?;
            SourceSpec::classic(a, b)
        }
        ("iid" | "markov", Some(body)) => {
            let mut p = None;
            let mut a = None;
            let mut b = None;
            let mut start = None;
            for (at, item) in split_items(body, body_at) {
                let Some(eq) = item.find('=') else {
                    return Err(syntax(at, format!("expected key=value, found {item:?}")));
                };
                let (key, value) = (&item[..eq], &item[eq + 1..]);
                let value_at = at + eq + 1;
                let dup = |slot_set: bool| {
                    if slot_set {
                        Err(syntax(at, format!("duplicate key {key:?}")))
                    } else {
                        Ok(())
                    }
                };
                match key {
                    "p" => {
                        dup(p.is_some())?;
                        p = Some(value.parse::<f64>().map_err(|_| {
                            syntax(value_at, format!("invalid probability {value:?}"))
                        })?);
                    }
                    "a" => {
                        dup(a.is_some())?;
                        a = Some(parse_letter((value_at, value))?);
                    }
                    "b" => {
                        dup(b.is_some())?;
                        b = Some(parse_letter((value_at, value))?);
                    }
                    "start" if kind == "markov" => {
                        dup(start.is_some())?;
                        start = Some(parse_letter((value_at, value))?);
                    }
                    _ => return Err(syntax(at, format!("unknown key {key:?}"))),
                }
            }
            let missing = |k: &str| syntax(text.len(), format!("missing key {k:?}"));
            let p = p.ok_or_else(|| missing("p"))?;
            let a = a.ok_or_else(|| missing("a"))?;
            let b = b.ok_or_else(|| missing("b"))?;
            if kind == "iid" {
                SourceSpec::iid(p, a, b)
            } else {
                SourceSpec::markov(p, a, b, start)
            }
        }
        ("periodic" | "classic" | "iid" | "markov", None) => Err(syntax(
            text.len(),
            format!("{kind} needs ':' and arguments"),
        )),
        _ => Err(syntax(0, format!("unknown source kind {kind:?}"))),
    }
}

fn split_items(body: &str, offset: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut at = offset;
    for item in body.split(',') {
        out.push((at, item));
        at += item.len() + 1;
    }
    out
}

fn parse_letter((at, s): (usize, &str)) -> Result<Letter> {
    let v: u32 = s.parse().map_err(|_| Error::Syntax {
        position: at,
        message: format!("expected a positive integer, found {s:?}"),
    })?;
    Letter::new(v)
}

/// Resumable state of the coupled construction of `T` and `O_T` where
/// blocks of length 2 are filled with `1` and blocks of length 1 alternate
/// `1, 2, 1, ...`.
#[derive(Debug, Clone)]
pub struct SelfRefState {
    // Letters of O_T at positions >= steps, not yet read as block lengths;
    // bit set means 2.
    unread: BitFifo,
    digit: Letter,
    steps: u64,
}

/// One step of the coupled construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelfRefStep {
    /// The directing letter `t_i`.
    pub fill: Letter,
    /// The block length `x_i`, which is also the i-th letter of `O_T`.
    pub block_len: Letter,
}

impl Default for SelfRefState {
    fn default() -> Self {
        Self::new()
    }
}

impl SelfRefState {
    pub fn new() -> Self {
        SelfRefState {
            unread: BitFifo::new(),
            digit: Letter::ONE,
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self) -> SelfRefStep {
        self.steps += 1;
        if self.steps == 1 {
            // T = (2), O = 22; position 1 is its own length, position 2 is unread.
            self.unread.push(true);
            return SelfRefStep {
                fill: Letter::TWO,
                block_len: Letter::TWO,
            };
        }
        let two = self.unread.pop().expect("O_T always runs ahead of T");
        if two {
            self.unread.push(false);
            self.unread.push(false);
            SelfRefStep {
                fill: Letter::ONE,
                block_len: Letter::TWO,
            }
        } else {
            let d = self.digit;
            self.unread.push(d == Letter::TWO);
            self.digit = Alphabet::ONE_TWO.flip(d);
            SelfRefStep {
                fill: d,
                block_len: Letter::ONE,
            }
        }
    }
}

/// `(T^(n), O^(n))` of the coupled construction, built with plain vectors.
///
/// `O^(n)` is the full buffer after `n` steps: blocks `1..=n` filled.
pub fn selfref_build(n: usize) -> Result<(Word, Word)> {
    if n == 0 {
        return Err(Error::domain("selfref_build needs n >= 1"));
    }
    let mut t = vec![2u8];
    let mut o = vec![2u8, 2];
    let mut d = 1u8;
    for i in 1..n {
        if o[i] == 2 {
            t.push(1);
            o.extend([1, 1]);
        } else {
            t.push(d);
            o.push(d);
            d = 3 - d;
        }
    }
    let to_word = |v: Vec<u8>| v.into_iter().map(Letter::from_raw).collect::<Word>();
    Ok((to_word(t), to_word(o)))
}

#[derive(Debug, Clone)]
enum Generator {
    Periodic {
        pattern: Word,
        idx: usize,
    },
    Classic {
        next: Letter,
        other: Letter,
    },
    Iid {
        p: f64,
        a: Letter,
        b: Letter,
        rng: Box<ChaCha8Rng>,
    },
    Markov {
        p: f64,
        alphabet: Alphabet,
        prev: Option<Letter>,
        start: Letter,
        rng: Box<ChaCha8Rng>,
    },
    SelfRef(SelfRefState),
}

/// Resumable directing-sequence generator for a [`SourceSpec`].
#[derive(Debug, Clone)]
pub struct SourceState {
    spec: SourceSpec,
    seed: Seed,
    position: u64,
    generator: Generator,
}

#[inline]
fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> bool {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    u < p
}

impl SourceState {
    pub fn new(spec: SourceSpec, seed: Seed) -> Self {
        let rng = || Box::new(ChaCha8Rng::seed_from_u64(seed.0));
        let generator = match &spec {
            SourceSpec::Periodic { pattern } => Generator::Periodic {
                pattern: pattern.clone(),
                idx: 0,
            },
            SourceSpec::Classic { a, b } => Generator::Classic {
                next: *a,
                other: *b,
            },
            SourceSpec::Iid { p, a, b } => Generator::Iid {
                p: p.get(),
                a: *a,
                b: *b,
                rng: rng(),
            },
            SourceSpec::Markov { p, start, .. } => Generator::Markov {
                p: p.get(),
                alphabet: spec.alphabet(),
                prev: None,
                start: *start,
                rng: rng(),
            },
            SourceSpec::SelfRef => Generator::SelfRef(SelfRefState::new()),
        };
        SourceState {
            spec,
            seed,
            position: 0,
            generator,
        }
    }

    pub fn spec(&self) -> &SourceSpec {
        &self.spec
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    /// Letters emitted so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    #[inline]
    pub fn draw(&mut self) -> Letter {
        self.position += 1;
        match &mut self.generator {
            Generator::Periodic { pattern, idx } => {
                let l = pattern.letters()[*idx];
                *idx += 1;
                if *idx == pattern.len() {
                    *idx = 0;
                }
                l
            }
            Generator::Classic { next, other } => {
                let l = *next;
                std::mem::swap(next, other);
                l
            }
            Generator::Iid { p, a, b, rng } => {
                if bernoulli(rng, *p) {
                    *a
                } else {
                    *b
                }
            }
            Generator::Markov {
                p,
                alphabet,
                prev,
                start,
                rng,
            } => {
                let l = match *prev {
                    None => *start,
                    Some(last) if bernoulli(rng, *p) => alphabet.flip(last),
                    Some(last) => last,
                };
                *prev = Some(l);
                l
            }
            Generator::SelfRef(state) => state.step().fill,
        }
    }
}

impl LetterSource for SourceState {
    #[inline]
    fn next_letter(&mut self) -> Option<Letter> {
        Some(self.draw())
    }

    fn alphabet(&self) -> Option<Alphabet> {
        Some(self.spec.alphabet())
    }
}

impl Iterator for SourceState {
    type Item = Letter;

    fn next(&mut self) -> Option<Letter> {
        Some(self.draw())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(v: u32) -> Letter {
        Letter::new(v).unwrap()
    }

    fn take(spec: &SourceSpec, seed: u64, n: usize) -> Vec<u8> {
        let mut s = spec.start(Seed(seed));
        (0..n).map(|_| s.draw().value()).collect()
    }

    #[test]
    fn parse_examples() {
        assert_eq!(
            parse_spec("periodic:122").unwrap(),
            SourceSpec::Periodic {
                pattern: Word::from_digits("122").unwrap()
            }
        );
        assert_eq!(
            parse_spec("markov:p=0.99,a=1,b=3").unwrap(),
            SourceSpec::markov(0.99, l(1), l(3), Some(l(1))).unwrap()
        );
        assert_eq!(
            parse_spec("iid:p=1.2,a=1,b=2").unwrap_err().kind(),
            crate::ErrorKind::Domain
        );
        assert_eq!(parse_spec("selfref").unwrap(), SourceSpec::SelfRef);
        assert_eq!(
            parse_spec("classic:1,3").unwrap(),
            SourceSpec::Classic { a: l(1), b: l(3) }
        );
        assert_eq!(
            parse_spec("markov:p=0.5,a=1,b=2,start=2").unwrap(),
            SourceSpec::markov(0.5, l(1), l(2), Some(l(2))).unwrap()
        );
    }

    #[test]
    fn parse_errors() {
        let kind = |s: &str| parse_spec(s).unwrap_err().kind();
        use crate::ErrorKind::*;
        assert_eq!(kind("iid:p=0,a=1,b=2"), Domain);
        assert_eq!(kind("iid:p=1,a=1,b=2"), Domain);
        assert_eq!(kind("iid:p=0.5,a=2,b=2"), Domain);
        assert_eq!(kind("classic:1,1"), Domain);
        assert_eq!(kind("markov:p=0.5,a=1,b=2,start=3"), Domain);
        assert_eq!(kind("periodic:123"), Domain);
        assert_eq!(kind("iid:p=0.5,a=0,b=2"), Domain);
        assert_eq!(kind(""), Usage);
        assert_eq!(kind("Periodic:12"), Usage);
        assert_eq!(kind("periodic:"), Usage);
        assert_eq!(kind("iid:p=0.5,a=1"), Usage);
        assert_eq!(kind("iid:p=0.5,a=1,b=2,start=1"), Usage);
        assert_eq!(kind("iid:q=0.5,a=1,b=2"), Usage);
        assert_eq!(kind("selfref:1"), Usage);
        assert_eq!(kind("classic:1,2,3"), Usage);
    }

    #[test]
    fn syntax_error_positions() {
        match parse_spec("periodic:12x").unwrap_err() {
            Error::Syntax { position, .. } => assert_eq!(position, 11),
            e => panic!("{e:?}"),
        }
        match parse_spec("iid:p=abc,a=1,b=2").unwrap_err() {
            Error::Syntax { position, .. } => assert_eq!(position, 6),
            e => panic!("{e:?}"),
        }
        match parse_spec("markov:p=0.5,x=1").unwrap_err() {
            Error::Syntax { position, .. } => assert_eq!(position, 13),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn display_round_trips() {
        for s in [
            "periodic:2112111",
            "classic:1,3",
            "iid:p=0.3,a=1,b=2",
            "markov:p=0.99,a=1,b=3,start=1",
            "selfref",
        ] {
            let spec = parse_spec(s).unwrap();
            assert_eq!(spec.to_string(), s);
            assert_eq!(parse_spec(&spec.to_string()).unwrap(), spec);
        }
    }

    #[test]
    fn deterministic_sources() {
        let periodic = parse_spec("periodic:12").unwrap();
        assert_eq!(take(&periodic, 0, 6), vec![1, 2, 1, 2, 1, 2]);
        let classic = parse_spec("classic:3,1").unwrap();
        assert_eq!(take(&classic, 0, 4), vec![3, 1, 3, 1]);
        assert_eq!(classic.alphabet(), Alphabet::from_values(1, 3).unwrap());
        let single = parse_spec("periodic:2").unwrap();
        assert_eq!(single.alphabet(), Alphabet::ONE_TWO);
        assert_eq!(take(&single, 0, 3), vec![2, 2, 2]);
    }

    #[test]
    fn markov_starts_at_start() {
        for seed in 0..20 {
            let spec = parse_spec("markov:p=0.5,a=1,b=2").unwrap();
            assert_eq!(take(&spec, seed, 1), vec![1]);
            let spec = parse_spec("markov:p=0.5,a=1,b=3,start=3").unwrap();
            assert_eq!(take(&spec, seed, 1), vec![3]);
        }
    }

    #[test]
    fn iid_frequency() {
        let spec = parse_spec("iid:p=0.5,a=1,b=2").unwrap();
        let n = 1_000_000;
        let ones = take(&spec, 7, n).iter().filter(|&&v| v == 1).count();
        // 3 sigma of Binomial(1e6, 0.5) is 0.0015.
        assert!((ones as f64 / n as f64 - 0.5).abs() <= 0.002);
    }

    #[test]
    fn markov_flip_frequency() {
        for p in [0.1, 0.7, 0.99] {
            let spec = SourceSpec::markov(p, l(1), l(2), None).unwrap();
            let n = 1_000_000;
            let v = take(&spec, 11, n + 1);
            let flips = v.windows(2).filter(|w| w[0] != w[1]).count() as f64;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((flips / n as f64 - p).abs() <= 3.0 * sigma, "p={p}");
        }
    }

    #[test]
    fn same_seed_same_letters() {
        for s in ["iid:p=0.3,a=1,b=2", "markov:p=0.7,a=1,b=3"] {
            let spec = parse_spec(s).unwrap();
            assert_eq!(take(&spec, 42, 5000), take(&spec, 42, 5000));
            assert_ne!(take(&spec, 42, 5000), take(&spec, 43, 5000));
        }
    }

    #[test]
    fn derived_seeds_differ() {
        let s = Seed(0);
        let derived: std::collections::HashSet<u64> = (0..1000).map(|i| s.derive(i).0).collect();
        assert_eq!(derived.len(), 1000);
        assert_eq!(s.derive(3), Seed(0).derive(3));
    }

    #[test]
    fn selfref_build_examples() {
        let (t, o) = selfref_build(1).unwrap();
        assert_eq!(t.values(), vec![2]);
        assert_eq!(o.values(), vec![2, 2]);
        let (t, _) = selfref_build(4).unwrap();
        assert_eq!(t.values(), vec![2, 1, 1, 2]);
        let (t, o) = selfref_build(7).unwrap();
        assert_eq!(t.values(), vec![2, 1, 1, 2, 1, 1, 2]);
        assert_eq!(o.values(), vec![2, 2, 1, 1, 1, 2, 1, 1, 1, 2]);
        assert!(selfref_build(0).is_err());
    }

    #[test]
    fn selfref_stream_matches_vectors() {
        let n = 10_000;
        let (t, o) = selfref_build(n).unwrap();
        let mut state = SelfRefState::new();
        for i in 0..n {
            let step = state.step();
            assert_eq!(step.fill, t.letters()[i]);
            assert_eq!(step.block_len, o.letters()[i]);
        }
    }

    #[test]
    fn selfref_two_count_coupling() {
        for n in 1..=2000 {
            let (t, o) = selfref_build(n).unwrap();
            assert_eq!(o.count(Letter::TWO), t.count(Letter::TWO) + 1, "n={n}");
        }
    }

    #[test]
    fn selfref_directed_word_is_reproduced() {
        for n in [1usize, 2, 7, 100, 10_000] {
            let (t, o) = selfref_build(n).unwrap();
            let direct = crate::direct_finite(&t).unwrap();
            assert_eq!(direct, o, "n={n}");
        }
    }
}
