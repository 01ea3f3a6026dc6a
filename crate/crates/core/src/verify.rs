//! Self-check suite run by `randkol verify`.
//!
//! Each check re-derives an invariant of the library from an independent
//! route (batch vs. streaming, closed form vs. enumeration, integer counts
//! vs. recount) and reports pass/fail with a one-line detail.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::Serialize;

use crate::directed::{delta, direct_finite, rle, DirectedStream, WordSource};
use crate::exact::{
    conditional_by_snk, corr_closed, corr_enum, joint_table, markov_two_step, p_xn_closed,
    p_xn_enum, snk_partition, Probability,
};
use crate::sources::{parse_spec, Seed};
use crate::stats::{density_trace, mc_density, selfref_trace};
use crate::word::{Alphabet, Letter, Word};
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn from_result(name: &'static str, r: Result<std::result::Result<String, String>>) -> Self {
        match r {
            Ok(Ok(detail)) => CheckOutcome {
                name,
                passed: true,
                detail,
            },
            Ok(Err(detail)) => CheckOutcome {
                name,
                passed: false,
                detail,
            },
            Err(e) => CheckOutcome {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        }
    }
}

type CheckResult = Result<std::result::Result<String, String>>;
type Check = fn(Scale) -> CheckResult;

/// Problem sizes for the suite; `fast` trims every range.
#[derive(Debug, Clone, Copy)]
pub struct Scale {
    pub prefix_samples: usize,
    pub stream_len: usize,
    pub fixed_point_len: usize,
    pub partition_n: usize,
    pub closed_n_max: usize,
    pub corr_n_max: usize,
    pub conditional_n_max: usize,
    pub selfref_n: u64,
}

impl Scale {
    pub fn full() -> Self {
        Scale {
            prefix_samples: 2000,
            stream_len: 100_000,
            fixed_point_len: 10_000,
            partition_n: 16,
            closed_n_max: 20,
            corr_n_max: 18,
            conditional_n_max: 14,
            selfref_n: 100_000,
        }
    }

    pub fn fast() -> Self {
        Scale {
            prefix_samples: 200,
            stream_len: 10_000,
            fixed_point_len: 2_000,
            partition_n: 12,
            closed_n_max: 14,
            corr_n_max: 12,
            conditional_n_max: 10,
            selfref_n: 10_000,
        }
    }
}

pub fn run_all(scale: Scale) -> Vec<CheckOutcome> {
    let checks: [(&'static str, Check); 13] = [
        (
            "core: prefix monotonicity and length bound",
            check_prefix_monotone,
        ),
        ("core: stream equals batch", check_stream_batch),
        (
            "core: classic word is its own run-length encoding",
            check_fixed_point,
        ),
        ("exact: S_{n,k} is a partition", check_partition),
        ("exact: closed form equals enumeration", check_closed_forms),
        (
            "exact: correlation closed form equals enumeration",
            check_correlation,
        ),
        ("exact: P(X_m=2, X_n=1) = p P(X_m=2)", check_lemma),
        ("exact: P(X_n=1 | S_{n,k}) is constant", check_conditional),
        (
            "exact: Markov two-step law equals matrix power",
            check_two_step,
        ),
        ("sources: self-referential coupling", check_selfref),
        ("sources: seeded reproducibility", check_reproducible),
        ("stats: trace counts equal recount", check_trace),
        (
            "stats: parallel Monte Carlo is deterministic",
            check_mc_deterministic,
        ),
    ];
    checks
        .into_iter()
        .map(|(name, f)| CheckOutcome::from_result(name, f(scale)))
        .collect()
}

fn random_word(rng: &mut ChaCha8Rng, len: usize, alphabet: Alphabet) -> Word {
    (0..len)
        .map(|_| {
            if rng.next_u32() & 1 == 0 {
                alphabet.lo()
            } else {
                alphabet.hi()
            }
        })
        .collect()
}

fn check_prefix_monotone(scale: Scale) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let alphabets = [
        Alphabet::ONE_TWO,
        Alphabet::from_values(1, 3)?,
        Alphabet::from_values(2, 3)?,
    ];
    for i in 0..scale.prefix_samples {
        let alphabet = alphabets[i % alphabets.len()];
        let len = 1 + (rng.next_u32() % 16) as usize;
        let t = random_word(&mut rng, len, alphabet);
        let o = direct_finite(&t)?;
        if o.len() < t.len() {
            return Ok(Err(format!("|O_T| < |T| for T={t}")));
        }
        let mut t2 = t.clone();
        t2.push(random_word(&mut rng, 1, alphabet).letters()[0]);
        if !o.is_prefix_of(&direct_finite(&t2)?) {
            return Ok(Err(format!("O_T not a prefix of O_Tt for T={t}")));
        }
    }
    Ok(Ok(format!(
        "{} random directing words",
        scale.prefix_samples
    )))
}

fn check_stream_batch(scale: Scale) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for alphabet in [Alphabet::ONE_TWO, Alphabet::from_values(1, 3)?] {
        let t = random_word(&mut rng, scale.stream_len, alphabet);
        let mut stream = DirectedStream::new(WordSource::new(t.clone()));
        let got = stream.take_word(scale.stream_len);
        let consumed = stream.blocks() as usize;
        let batch = direct_finite(&t.prefix(consumed))?;
        if got != batch.prefix(got.len()) || got.len() != scale.stream_len {
            return Ok(Err(format!("mismatch over {alphabet}")));
        }
    }
    Ok(Ok(format!(
        "{} letters over {{1,2}} and {{1,3}}",
        scale.stream_len
    )))
}

fn check_fixed_point(scale: Scale) -> CheckResult {
    let m = scale.fixed_point_len;
    let spec = parse_spec("classic:1,2")?;
    let stream: Word = DirectedStream::new(spec.start(Seed(0))).take_word(m);
    if stream.letters()[0] != Letter::ONE {
        return Ok(Err("classic word must start with 1".into()));
    }
    for len in (1..=m).step_by((m / 50).max(1)).chain([m]) {
        let prefix = stream.prefix(len);
        let enc = rle(&prefix);
        let complete: Word = enc
            .complete_runs()
            .iter()
            .map(|r| Letter::new(r.len as u32))
            .collect::<Result<Vec<_>>>()?
            .into();
        if !complete.is_prefix_of(&stream) {
            return Ok(Err(format!("Δ(prefix {len}) is not a prefix")));
        }
    }
    let d = delta(&stream)?;
    Ok(Ok(format!("{m} letters, {} runs", d.len())))
}

fn check_partition(scale: Scale) -> CheckResult {
    for n in 1..=scale.partition_n {
        let table = snk_partition(n)?;
        if table.total() != 1u64 << n {
            return Ok(Err(format!("n={n}: sizes sum to {}", table.total())));
        }
        if n >= 2 && table.size(n) != 2 {
            return Ok(Err(format!("n={n}: |S_n,n| = {}", table.size(n))));
        }
        if n >= 3 && table.size(n - 1) != 2 {
            return Ok(Err(format!("n={n}: |S_n,n-1| = {}", table.size(n - 1))));
        }
    }
    Ok(Ok(format!("n <= {}", scale.partition_n)))
}

fn check_closed_forms(scale: Scale) -> CheckResult {
    let mut worst = 0.0f64;
    let grid = [
        (Alphabet::ONE_TWO, 2usize, scale.closed_n_max),
        (Alphabet::from_values(1, 3)?, 3, scale.closed_n_max),
        (Alphabet::from_values(2, 3)?, 4, scale.closed_n_max.min(16)),
    ];
    for (alphabet, lo_n, hi_n) in grid {
        for p in [0.2, 0.5, 0.8] {
            let p = Probability::new(p)?;
            for n in lo_n..=hi_n {
                let c = p_xn_closed(p, n as u64, alphabet)?.get();
                let e = p_xn_enum(p, n, alphabet, alphabet.lo())?.get();
                worst = worst.max((c - e).abs());
            }
        }
    }
    verdict(worst, 1e-12)
}

fn check_correlation(scale: Scale) -> CheckResult {
    let mut worst = 0.0f64;
    for p in [0.3, 0.5, 0.7] {
        let p = Probability::new(p)?;
        for m in 1..=6usize {
            for n in m + 2..=scale.corr_n_max {
                let c = corr_closed(p, m as u64, n as u64)?;
                let e = corr_enum(p, m, n)?;
                worst = worst.max((c - e).abs());
            }
        }
    }
    verdict(worst, 1e-12)
}

fn check_lemma(scale: Scale) -> CheckResult {
    let mut worst = 0.0f64;
    for p in [0.3, 0.5, 0.7] {
        let pr = Probability::new(p)?;
        for m in 1..=6usize {
            for n in m + 2..=scale.corr_n_max {
                let t = joint_table(pr, m, n)?;
                let pm2 = t[1][0] + t[1][1];
                worst = worst.max((t[1][0] - p * pm2).abs());
            }
        }
    }
    verdict(worst, 1e-12)
}

fn check_conditional(scale: Scale) -> CheckResult {
    let mut worst = 0.0f64;
    for p in [0.3, 0.5, 0.7] {
        for n in 2..=scale.conditional_n_max {
            for c in conditional_by_snk(Probability::new(p)?, n)? {
                let expect = if c.k + 1 == n { 0.0 } else { p };
                worst = worst.max((c.p_one_given - expect).abs());
            }
        }
    }
    verdict(worst, 1e-12)
}

fn check_two_step(_: Scale) -> CheckResult {
    let mut worst = 0.0f64;
    for p in [0.1, 0.3, 0.5, 0.7, 0.99] {
        let pr = Probability::new(p)?;
        let step = [[1.0 - p, p], [p, 1.0 - p]];
        let mut power = step;
        for gap in 1..=30u32 {
            let same = markov_two_step(pr, gap, true)?.get();
            let diff = markov_two_step(pr, gap, false)?.get();
            worst = worst
                .max((power[0][0] - same).abs())
                .max((power[1][1] - same).abs())
                .max((power[0][1] - diff).abs())
                .max((power[1][0] - diff).abs());
            power = mat_mul(&power, &step);
        }
    }
    verdict(worst, 1e-12)
}

fn mat_mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn check_selfref(scale: Scale) -> CheckResult {
    let n = scale.selfref_n;
    let cps: Vec<u64> = (1..=n).collect();
    for c in selfref_trace(n, &cps)? {
        if c.o_twos != c.t_twos + 1 {
            return Ok(Err(format!(
                "n={}: |O|_2 - |T|_2 = {}",
                c.n,
                c.o_twos as i64 - c.t_twos as i64
            )));
        }
        let gap = c.counting_gap();
        if !(0.0..=1.0).contains(&gap) {
            return Ok(Err(format!("n={}: counting gap {gap}", c.n)));
        }
    }
    Ok(Ok(format!("n <= {n}")))
}

fn check_reproducible(_: Scale) -> CheckResult {
    for s in ["iid:p=0.3,a=1,b=2", "markov:p=0.7,a=1,b=3"] {
        let spec = parse_spec(s)?;
        let a: Vec<Letter> = spec.start(Seed(17)).take(10_000).collect();
        let b: Vec<Letter> = spec.start(Seed(17)).take(10_000).collect();
        if a != b {
            return Ok(Err(format!("{s}: runs differ")));
        }
    }
    Ok(Ok("iid and markov, 10^4 letters".into()))
}

fn check_trace(scale: Scale) -> CheckResult {
    let spec = parse_spec("iid:p=0.3,a=1,b=2")?;
    let n = scale.stream_len as u64;
    let mut cps: Vec<u64> = (1..=n).step_by(101).chain([n]).collect();
    cps.dedup();
    let trace = density_trace(&spec, n, &cps, Seed(3))?;
    let letters = DirectedStream::new(spec.start(Seed(3))).take_word(n as usize);
    let mut ones = 0u64;
    let mut upto = 0usize;
    for c in &trace.checkpoints {
        let end = c.position as usize;
        ones += letters.letters()[upto..end]
            .iter()
            .filter(|&&l| l == Letter::ONE)
            .count() as u64;
        upto = end;
        if c.count_lo != ones || c.count_lo + c.count_hi != c.position {
            return Ok(Err(format!("checkpoint {} disagrees", c.position)));
        }
    }
    Ok(Ok(format!("{} checkpoints", trace.checkpoints.len())))
}

fn check_mc_deterministic(_: Scale) -> CheckResult {
    let spec = parse_spec("markov:p=0.7,a=1,b=2")?;
    let reference = mc_density(&spec, 10_000, 8, Seed(4))?;
    for threads in [1, 4] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| crate::Error::ResourceLimit(e.to_string()))?;
        let r = pool.install(|| mc_density(&spec, 10_000, 8, Seed(4)))?;
        if r != reference {
            return Ok(Err(format!("{threads} threads changed the result")));
        }
    }
    Ok(Ok("1 and 4 threads agree".into()))
}

fn verdict(worst: f64, tol: f64) -> CheckResult {
    if worst <= tol {
        Ok(Ok(format!("max |diff| = {worst:.3e}")))
    } else {
        Ok(Err(format!("max |diff| = {worst:.3e} > {tol:e}")))
    }
}
