//! Letter densities of directed sequences: single-realization traces,
//! seeded Monte Carlo estimates, and the self-referential construction.
//!
//! Monte Carlo trial `i` always runs on [`Seed::derive`]`(i)` of the base
//! seed. Per-trial outcomes are integers (letter counts) and are pooled as
//! integers, so results are bit-identical for any thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::directed::DirectedStream;
use crate::error::{Error, Result};
use crate::fifo::PendingQueue;
use crate::sources::{Seed, SelfRefState, SourceSpec};
use crate::word::Letter;

/// Longest stream the statistics functions accept.
pub const MAX_LENGTH: u64 = 1 << 40;

/// Default cap on the pending-queue memory of one stream.
pub const DEFAULT_QUEUE_BUDGET_BYTES: u64 = 4 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Checkpoint {
    /// 1-indexed position: letters `1..=position` have been counted.
    pub position: u64,
    pub count_lo: u64,
    pub count_hi: u64,
    pub density_lo: f64,
}

impl Checkpoint {
    pub fn new(position: u64, count_lo: u64) -> Self {
        Checkpoint {
            position,
            count_lo,
            count_hi: position - count_lo,
            density_lo: count_lo as f64 / position as f64,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DensityTrace {
    pub checkpoints: Vec<Checkpoint>,
}

impl DensityTrace {
    pub fn last(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }

    pub fn at(&self, position: u64) -> Option<&Checkpoint> {
        self.checkpoints
            .binary_search_by_key(&position, |c| c.position)
            .ok()
            .map(|i| &self.checkpoints[i])
    }
}

/// Powers of two from `2^10` below `length`, then `length` itself.
pub fn default_checkpoints(length: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(1u64 << 10), |&c| c.checked_mul(2))
        .take_while(|&c| c < length)
        .collect();
    if length > 0 {
        out.push(length);
    }
    out
}

/// Checks length and checkpoint constraints and the queue memory budget.
fn validate(length: u64, checkpoints: &[u64], budget_bytes: u64) -> Result<()> {
    if length > MAX_LENGTH {
        return Err(Error::ResourceLimit(format!(
            "length {length} exceeds the maximum 2^40"
        )));
    }
    // The queue never holds more than `length` letters.
    let need = PendingQueue::bytes_for(length, true);
    if need > budget_bytes {
        return Err(Error::ResourceLimit(format!(
            "length {length} may need {need} bytes of pending queue, budget is {budget_bytes}"
        )));
    }
    let mut prev = 0;
    for &c in checkpoints {
        if c == 0 || c > length {
            return Err(Error::domain(format!(
                "checkpoint {c} outside 1..={length}"
            )));
        }
        if c <= prev {
            return Err(Error::domain("checkpoints must be strictly increasing"));
        }
        prev = c;
    }
    Ok(())
}

/// Streams one realization of `O_T` and records counts of the alphabet's
/// smaller letter at each checkpoint.
pub fn density_trace(
    spec: &SourceSpec,
    length: u64,
    checkpoints: &[u64],
    seed: Seed,
) -> Result<DensityTrace> {
    density_trace_with_budget(spec, length, checkpoints, seed, DEFAULT_QUEUE_BUDGET_BYTES)
}

pub fn density_trace_with_budget(
    spec: &SourceSpec,
    length: u64,
    checkpoints: &[u64],
    seed: Seed,
    budget_bytes: u64,
) -> Result<DensityTrace> {
    validate(length, checkpoints, budget_bytes)?;
    let lo = spec.alphabet().lo();
    let mut stream = DirectedStream::new(spec.start(seed));
    let mut count_lo = 0u64;
    let mut position = 0u64;
    let mut out = Vec::with_capacity(checkpoints.len());
    for &c in checkpoints {
        count_lo += count_letter(&mut stream, lo, c - position);
        position = c;
        out.push(Checkpoint::new(position, count_lo));
    }
    Ok(DensityTrace { checkpoints: out })
}

#[inline]
fn count_letter<S: crate::LetterSource>(stream: &mut DirectedStream<S>, lo: Letter, n: u64) -> u64 {
    let mut c = 0;
    for _ in 0..n {
        let l = stream
            .next_letter()
            .expect("generated sources never run out");
        c += (l == lo) as u64;
    }
    c
}

/// Pooled Monte Carlo estimate.
///
/// Each trial contributes an integer count `c_i`; its value is
/// `c_i / scale`. Sums are kept as integers so pooling is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MCResult {
    pub trials: u64,
    pub sum_counts: u128,
    pub sum_sq_counts: u128,
    /// Denominator turning a count into a trial value.
    pub scale: u64,
    pub seed: Seed,
}

impl MCResult {
    pub fn empty(scale: u64, seed: Seed) -> Self {
        MCResult {
            trials: 0,
            sum_counts: 0,
            sum_sq_counts: 0,
            scale,
            seed,
        }
    }

    pub fn from_counts(counts: &[u64], scale: u64, seed: Seed) -> Self {
        let mut r = MCResult::empty(scale, seed);
        for &c in counts {
            r.trials += 1;
            r.sum_counts += c as u128;
            r.sum_sq_counts += (c as u128) * (c as u128);
        }
        r
    }

    /// Sum of trial values.
    pub fn sum(&self) -> f64 {
        self.sum_counts as f64 / self.scale as f64
    }

    /// Sum of squared trial values.
    pub fn sum_sq(&self) -> f64 {
        self.sum_sq_counts as f64 / (self.scale as f64 * self.scale as f64)
    }

    pub fn mean(&self) -> f64 {
        if self.trials == 0 {
            return f64::NAN;
        }
        self.sum_counts as f64 / (self.trials as f64 * self.scale as f64)
    }

    /// `sqrt((sum_sq/trials - mean^2) / trials)`.
    pub fn stderr(&self) -> f64 {
        if self.trials == 0 {
            return f64::NAN;
        }
        let t = self.trials as f64;
        let mean = self.mean();
        let var = (self.sum_sq() / t - mean * mean).max(0.0);
        (var / t).sqrt()
    }
}

/// Pools two results from the same experiment.
///
/// Panics if both are nonempty with different scales.
pub fn merge(a: &MCResult, b: &MCResult) -> MCResult {
    if a.trials == 0 {
        return MCResult {
            seed: if b.trials == 0 { a.seed } else { b.seed },
            ..*b
        };
    }
    if b.trials == 0 {
        return *a;
    }
    assert_eq!(a.scale, b.scale, "merging results with different scales");
    MCResult {
        trials: a.trials + b.trials,
        sum_counts: a.sum_counts + b.sum_counts,
        sum_sq_counts: a.sum_sq_counts + b.sum_sq_counts,
        scale: a.scale,
        seed: a.seed,
    }
}

/// Terminal count of the smaller letter for each of `trials` realizations
/// of length `length`, in trial order.
pub fn density_counts(spec: &SourceSpec, length: u64, trials: u64, seed: Seed) -> Result<Vec<u64>> {
    if trials == 0 {
        return Err(Error::domain("need at least one trial"));
    }
    if length == 0 {
        return Err(Error::domain("length must be at least 1"));
    }
    validate(length, &[length], DEFAULT_QUEUE_BUDGET_BYTES)?;
    let lo = spec.alphabet().lo();
    Ok((0..trials)
        .into_par_iter()
        .map(|i| {
            let mut stream = DirectedStream::new(spec.start(seed.derive(i)));
            count_letter(&mut stream, lo, length)
        })
        .collect())
}

/// Mean terminal density of the smaller letter over independent trials.
pub fn mc_density(spec: &SourceSpec, length: u64, trials: u64, seed: Seed) -> Result<MCResult> {
    let counts = density_counts(spec, length, trials, seed)?;
    Ok(MCResult::from_counts(&counts, length, seed))
}

/// Empirical frequency of `X_n = lo` over independent trials.
pub fn mc_pointwise(spec: &SourceSpec, n: u64, trials: u64, seed: Seed) -> Result<MCResult> {
    if trials == 0 {
        return Err(Error::domain("need at least one trial"));
    }
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    validate(n, &[n], DEFAULT_QUEUE_BUDGET_BYTES)?;
    let lo = spec.alphabet().lo();
    let hits: Vec<u64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut stream = DirectedStream::new(spec.start(seed.derive(i)));
            let x = stream
                .by_ref()
                .nth((n - 1) as usize)
                .expect("generated sources never run out");
            (x == lo) as u64
        })
        .collect();
    Ok(MCResult::from_counts(&hits, 1, seed))
}

/// Counts after `n` steps of the coupled construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SelfRefCounts {
    pub n: u64,
    /// `|T^(n)|_1`, `|T^(n)|_2`.
    pub t_ones: u64,
    pub t_twos: u64,
    /// Counts over `x_1..x_n`, the first `n` letters of `O_T`.
    pub x_ones: u64,
    pub x_twos: u64,
    /// Counts over the whole buffer `O^(n)` (blocks `1..=n` filled).
    pub o_ones: u64,
    pub o_twos: u64,
}

impl SelfRefCounts {
    /// `|T^(n)|_1 - (|x_1..x_n|_2 - 1 + |x_1..x_n|_1 / 2)`.
    pub fn counting_gap(&self) -> f64 {
        self.t_ones as f64 - (self.x_twos as f64 - 1.0 + 0.5 * self.x_ones as f64)
    }

    pub fn densities(&self) -> SelfRefDensities {
        let n = self.n as f64;
        let d_t = self.t_ones as f64 / n;
        let d_o = self.x_ones as f64 / n;
        let d_o2 = self.x_twos as f64 / n;
        let d_o_residual = if self.t_ones == 0 {
            None
        } else {
            Some(d_o - (3.0 * d_t - 1.0) / (2.0 * d_t))
        };
        SelfRefDensities {
            n: self.n,
            d_t,
            d_o,
            d_o_residual,
            d_t_residual: d_t - (d_o2 + 0.5 * d_o),
        }
    }
}

/// Finite-`n` densities of `1` in `T^(n)` and in `x_1..x_n`, with the
/// residuals of the two limit relations
/// `d_O = (3 d_T - 1) / (2 d_T)` (undefined while `d_T = 0`) and
/// `d_T = d_O2 + d_O / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfRefDensities {
    pub n: u64,
    pub d_t: f64,
    pub d_o: f64,
    pub d_o_residual: Option<f64>,
    pub d_t_residual: f64,
}

/// Runs the coupled construction, reporting counts at each checkpoint.
pub fn selfref_trace(n: u64, checkpoints: &[u64]) -> Result<Vec<SelfRefCounts>> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    validate(n, checkpoints, DEFAULT_QUEUE_BUDGET_BYTES)?;
    let mut state = SelfRefState::new();
    let mut c = SelfRefCounts {
        n: 0,
        t_ones: 0,
        t_twos: 0,
        x_ones: 0,
        x_twos: 0,
        o_ones: 0,
        o_twos: 0,
    };
    let mut out = Vec::with_capacity(checkpoints.len());
    for &cp in checkpoints {
        while c.n < cp {
            let step = state.step();
            c.n += 1;
            let len = step.block_len.value() as u64;
            if step.fill == Letter::ONE {
                c.t_ones += 1;
                c.o_ones += len;
            } else {
                c.t_twos += 1;
                c.o_twos += len;
            }
            if step.block_len == Letter::ONE {
                c.x_ones += 1;
            } else {
                c.x_twos += 1;
            }
        }
        out.push(c);
    }
    Ok(out)
}

pub fn selfref_densities(n: u64) -> Result<SelfRefDensities> {
    Ok(selfref_trace(n, &[n])?[0].densities())
}

/// Density trace of `O_T` (tracked letter `1`) for the coupled construction.
pub fn selfref_density_trace(n: u64, checkpoints: &[u64]) -> Result<DensityTrace> {
    Ok(DensityTrace {
        checkpoints: selfref_trace(n, checkpoints)?
            .iter()
            .map(|c| Checkpoint::new(c.n, c.x_ones))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::{parse_spec, selfref_build};

    fn spec(s: &str) -> SourceSpec {
        parse_spec(s).unwrap()
    }

    #[test]
    fn classic_fifteen() {
        let t = density_trace(&spec("classic:1,2"), 15, &[15], Seed(0)).unwrap();
        let c = t.last().unwrap();
        assert_eq!((c.count_lo, c.count_hi), (7, 8));
        assert_eq!(c.density_lo, 7.0 / 15.0);
    }

    #[test]
    fn all_twos() {
        let t = density_trace(&spec("periodic:2"), 5000, &[1, 10, 4999, 5000], Seed(0)).unwrap();
        assert!(t.checkpoints.iter().all(|c| c.density_lo == 0.0));
    }

    #[test]
    fn checkpoint_validation() {
        let s = spec("classic:1,2");
        assert!(density_trace(&s, 10, &[5, 5], Seed(0)).is_err());
        assert!(density_trace(&s, 10, &[0], Seed(0)).is_err());
        assert!(density_trace(&s, 10, &[11], Seed(0)).is_err());
        assert!(density_trace(&s, 10, &[], Seed(0))
            .unwrap()
            .checkpoints
            .is_empty());
        assert!(matches!(
            density_trace(&s, MAX_LENGTH + 1, &[1], Seed(0)),
            Err(Error::ResourceLimit(_))
        ));
        assert!(matches!(
            density_trace_with_budget(&s, 1 << 20, &[1], Seed(0), 1024),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn default_grid() {
        assert_eq!(default_checkpoints(100), vec![100]);
        assert_eq!(default_checkpoints(1024), vec![1024]);
        assert_eq!(default_checkpoints(5000), vec![1024, 2048, 4096, 5000]);
        assert!(default_checkpoints(0).is_empty());
    }

    #[test]
    fn trace_matches_recount() {
        let s = spec("iid:p=0.4,a=1,b=2");
        let n = 100_000u64;
        let cps: Vec<u64> = (1..=n).step_by(997).chain([n]).collect();
        let t = density_trace(&s, n, &cps, Seed(5)).unwrap();
        let letters = DirectedStream::new(s.start(Seed(5))).take_word(n as usize);
        for c in &t.checkpoints {
            let ones = letters.prefix(c.position as usize).count(Letter::ONE) as u64;
            assert_eq!(c.count_lo, ones);
            assert_eq!(c.count_lo + c.count_hi, c.position);
        }
    }

    #[test]
    fn merge_rules() {
        let a = MCResult::from_counts(&[3, 4, 5], 10, Seed(1));
        let b = MCResult::from_counts(&[7], 10, Seed(2));
        let c = MCResult::from_counts(&[1, 9], 10, Seed(3));
        let e = MCResult::empty(10, Seed(9));
        assert_eq!(merge(&a, &e), a);
        assert_eq!(merge(&e, &a), a);
        assert_eq!(merge(&a, &b).trials, 4);
        let ab_c = merge(&merge(&a, &b), &c);
        let a_bc = merge(&a, &merge(&b, &c));
        let cb_a = merge(&merge(&c, &b), &a);
        for r in [a_bc, cb_a] {
            assert_eq!(
                (r.trials, r.sum_counts, r.sum_sq_counts),
                (ab_c.trials, ab_c.sum_counts, ab_c.sum_sq_counts)
            );
        }
        let all = MCResult::from_counts(&[3, 4, 5, 7, 1, 9], 10, Seed(1));
        assert_eq!(ab_c, all);
    }

    #[test]
    fn mc_moments() {
        let r = MCResult::from_counts(&[1, 3], 4, Seed(0));
        assert_eq!(r.mean(), 0.5);
        assert_eq!(r.sum(), 1.0);
        assert_eq!(r.sum_sq(), 10.0 / 16.0);
        // values 0.25, 0.75: population variance 0.0625, stderr sqrt(0.0625/2).
        assert!((r.stderr() - (0.0625f64 / 2.0).sqrt()).abs() < 1e-15);
        assert!(MCResult::empty(1, Seed(0)).mean().is_nan());
    }

    #[test]
    fn pointwise_first_letter_is_deterministic() {
        let r = mc_pointwise(&spec("markov:p=0.3,a=1,b=2"), 1, 500, Seed(0)).unwrap();
        assert_eq!(r.mean(), 1.0);
        let r = mc_pointwise(&spec("markov:p=0.3,a=1,b=2,start=2"), 1, 500, Seed(0)).unwrap();
        assert_eq!(r.mean(), 0.0);
    }

    #[test]
    fn mc_density_is_reproducible() {
        let s = spec("markov:p=0.7,a=1,b=3");
        let a = mc_density(&s, 20_000, 16, Seed(3)).unwrap();
        let b = mc_density(&s, 20_000, 16, Seed(3)).unwrap();
        assert_eq!(a, b);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let c = single
            .install(|| mc_density(&s, 20_000, 16, Seed(3)))
            .unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn trials_split_and_merge() {
        // Trial i uses seed.derive(i), so the per-trial counts of one run
        // pooled in any grouping give the single-run result.
        let s = spec("iid:p=0.3,a=1,b=2");
        let counts = density_counts(&s, 5000, 10, Seed(8)).unwrap();
        let whole = mc_density(&s, 5000, 10, Seed(8)).unwrap();
        let left = MCResult::from_counts(&counts[..4], 5000, Seed(8));
        let right = MCResult::from_counts(&counts[4..], 5000, Seed(8));
        assert_eq!(merge(&left, &right), whole);
    }

    #[test]
    fn selfref_small_n() {
        let d = selfref_densities(1).unwrap();
        assert_eq!((d.d_t, d.d_o), (0.0, 0.0));
        assert_eq!(d.d_o_residual, None);
        let d7 = selfref_trace(7, &[7]).unwrap()[0];
        assert_eq!((d7.t_ones, d7.t_twos), (4, 3));
        assert_eq!((d7.x_ones, d7.x_twos), (4, 3));
        assert_eq!((d7.o_ones, d7.o_twos), (6, 4));
    }

    #[test]
    fn selfref_counts_agree_with_vectors() {
        let cps: Vec<u64> = (1..=3000).collect();
        let trace = selfref_trace(3000, &cps).unwrap();
        for c in trace.iter().filter(|c| c.n % 97 == 1 || c.n == 3000) {
            let (t, o) = selfref_build(c.n as usize).unwrap();
            assert_eq!(c.t_ones as usize, t.count(Letter::ONE));
            assert_eq!(c.o_ones as usize, o.count(Letter::ONE));
            assert_eq!(c.o_twos as usize, o.count(Letter::TWO));
            assert_eq!(c.x_ones as usize, o.prefix(c.n as usize).count(Letter::ONE));
        }
        for c in &trace {
            assert_eq!(c.o_twos, c.t_twos + 1);
            let gap = c.counting_gap();
            assert!(gap == 0.0 || gap == 0.5, "n={} gap={gap}", c.n);
            let r = c.densities().d_t_residual.abs();
            assert!(r <= 2.0 / c.n as f64);
        }
    }
}
