use randkol::verify::{run_all, Scale};
use randkol::{
    delta, density_trace, direct_finite, mc_density, mc_pointwise, merge, p_xn_enum, parse_spec,
    selfref_densities, stream_new, Alphabet, Letter, MCResult, Probability, Seed, Word,
};

fn spec(text: &str) -> randkol::SourceSpec {
    parse_spec(text).unwrap()
}

#[test]
fn stream_equals_batch_for_long_periodic_words() {
    let n = 100_000;
    for pattern in ["12", "13", "122", "2112111", "31"] {
        let t = Word::from_digits(&pattern.repeat(n / pattern.len() + 1)).unwrap();
        let batch = direct_finite(&t).unwrap();
        let streamed: Word = stream_new(&spec(&format!("periodic:{pattern}")), Seed(0))
            .take(n)
            .collect();
        assert_eq!(streamed, batch.prefix(n), "pattern {pattern}");
    }
}

#[test]
fn stream_equals_batch_for_random_words() {
    let t: Word = randkol::SourceState::new(spec("iid:p=0.4,a=1,b=3"), Seed(11))
        .take(60_000)
        .collect();
    let batch = direct_finite(&t).unwrap();
    let streamed: Word = stream_new(&spec("iid:p=0.4,a=1,b=3"), Seed(11))
        .take(batch.len())
        .collect();
    assert_eq!(streamed, batch);
}

#[test]
fn kolakoski_word_is_its_own_run_length_encoding() {
    let o: Word = stream_new(&spec("classic:1,2"), Seed(0))
        .take(10_000)
        .collect();
    let d = delta(&o).unwrap();
    // The last run may be cut by the prefix, so drop it.
    let complete = d.prefix(d.len() - 1);
    assert!(complete.is_prefix_of(&o));
    assert!(complete.len() > 6_000);
}

#[test]
fn trace_counts_match_recount() {
    let s = spec("markov:p=0.3,a=1,b=2");
    let n = 100_000u64;
    let cps: Vec<u64> = (1..=n).filter(|c| c % 977 == 0 || *c == n).collect();
    let trace = density_trace(&s, n, &cps, Seed(2)).unwrap();
    let o: Word = stream_new(&s, Seed(2)).take(n as usize).collect();
    for c in &trace.checkpoints {
        let ones = o.prefix(c.position as usize).count(Letter::ONE) as u64;
        assert_eq!(c.count_lo, ones);
        assert_eq!(c.count_lo + c.count_hi, c.position);
        assert_eq!(c.density_lo, ones as f64 / c.position as f64);
    }
}

#[test]
fn periodic_densities_follow_the_directing_word() {
    let d = |text: &str| {
        density_trace(&spec(text), 1_000_000, &[1_000_000], Seed(0))
            .unwrap()
            .last()
            .unwrap()
            .density_lo
    };
    let d122 = d("periodic:122");
    assert!((0.323..=0.343).contains(&d122), "{d122}");
    assert!((d("periodic:2112111") - 5.0 / 7.0).abs() < 0.01);
    assert_eq!(d("periodic:2"), 0.0);
}

#[test]
fn iid_mean_density() {
    let r = mc_density(&spec("iid:p=0.3,a=1,b=2"), 1_000_000, 100, Seed(0)).unwrap();
    assert!((r.mean() - 0.3).abs() <= 0.005, "{}", r.mean());
}

#[test]
fn pointwise_frequency_at_n2() {
    let r = mc_pointwise(&spec("iid:p=0.5,a=1,b=2"), 2, 1_000_000, Seed(1)).unwrap();
    assert!((r.mean() - 0.25).abs() <= 0.0013, "{}", r.mean());
}

#[test]
fn pointwise_markov_far_position() {
    let r = mc_pointwise(&spec("markov:p=0.99,a=1,b=3"), 10_000, 10_000, Seed(2)).unwrap();
    assert!((r.mean() - 0.5).abs() <= 0.015, "{}", r.mean());
}

#[test]
fn pointwise_first_letter_is_deterministic() {
    for text in [
        "markov:p=0.4,a=1,b=2",
        "markov:p=0.4,a=1,b=2,start=2",
        "classic:1,3",
    ] {
        let r = mc_pointwise(&spec(text), 1, 500, Seed(3)).unwrap();
        assert!(r.mean() == 0.0 || r.mean() == 1.0, "{text}");
    }
}

#[test]
fn pointwise_agrees_with_oracle() {
    let trials = 20_000;
    let mut inside = 0;
    let mut total = 0;
    for (i, p) in [0.3, 0.5, 0.8].into_iter().enumerate() {
        for n in 1..=20usize {
            let exact = p_xn_enum(
                Probability::new(p).unwrap(),
                n,
                Alphabet::ONE_TWO,
                Letter::ONE,
            )
            .unwrap()
            .get();
            let s = spec(&format!("iid:p={p},a=1,b=2"));
            let r = mc_pointwise(&s, n as u64, trials, Seed(100 + (i * 20 + n) as u64)).unwrap();
            let sigma = (exact * (1.0 - exact) / trials as f64).sqrt().max(1e-12);
            total += 1;
            inside += ((r.mean() - exact).abs() <= 4.0 * sigma) as usize;
        }
    }
    assert!(inside * 100 >= total * 95, "{inside}/{total}");
}

#[test]
fn merge_is_exact_and_order_free() {
    let s = spec("iid:p=0.5,a=1,b=2");
    let parts: Vec<MCResult> = (0..4)
        .map(|i| mc_density(&s, 1_000, 5, Seed(i)).unwrap())
        .collect();
    let forward = parts
        .iter()
        .fold(MCResult::empty(1_000, Seed(0)), |a, b| merge(&a, b));
    let backward = parts
        .iter()
        .rev()
        .fold(MCResult::empty(1_000, Seed(0)), |a, b| merge(&a, b));
    assert_eq!(forward.trials, 20);
    assert_eq!(forward.sum_counts, backward.sum_counts);
    assert_eq!(forward.sum_sq_counts, backward.sum_sq_counts);
}

#[test]
fn selfref_limits() {
    let d = selfref_densities(1_000_000).unwrap();
    assert!((d.d_t - (1.0 + 17f64.sqrt()) / 8.0).abs() <= 0.005);
    assert!((d.d_o - (7.0 - 17f64.sqrt()) / 4.0).abs() <= 0.005);
    assert!(d.d_t_residual.abs() <= 2.0 / 1e6);
    let first = selfref_densities(1).unwrap();
    assert_eq!((first.d_t, first.d_o, first.d_o_residual), (0.0, 0.0, None));
}

#[test]
fn built_in_checks_pass() {
    for outcome in run_all(Scale::fast()) {
        assert!(outcome.passed, "{}: {}", outcome.name, outcome.detail);
    }
}
