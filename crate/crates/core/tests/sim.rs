use bottleneck_core::prob::{Alphabet, Channel, JointPmf, Metric, Pmf};
use bottleneck_core::sim::{
    decode, generate_codebook, relay_compress_mindist, relay_compress_typicality, simulate, threshold_level,
    Codebook, CodebookStyle, DecoderRule, Engine, RelaySpec, SimConfig, Symbol,
};
use bottleneck_core::simplex::{dirichlet_uniform, rng_for};
use bottleneck_core::Error;
use rand::Rng;

fn bin(name: &str) -> Alphabet {
    Alphabet::indexed(name, 2)
}

fn uniform(name: &str, k: usize) -> Pmf {
    Pmf::uniform(Alphabet::indexed(name, k))
}

fn bsc(p: f64, a: &str, b: &str) -> Channel {
    Channel::bsc(p, a, b).unwrap()
}

fn fraction(word: &[Symbol], s: Symbol) -> f64 {
    word.iter().filter(|&&v| v == s).count() as f64 / word.len() as f64
}

/// BSC(0.1) into a BSC(`relay`) test channel with a typicality relay.
fn acceptance_config(rate: f64, n: usize, trials: usize, seed: u64, decoder: DecoderRule) -> SimConfig {
    SimConfig::new(
        bsc(0.1, "X", "Y"),
        uniform("X", 2),
        RelaySpec::Typicality {
            test_channel: bsc(0.02, "Y", "Z"),
            eps: 0.2,
        },
        decoder,
        rate,
        1.0,
        n,
        trials,
        seed,
    )
}

fn mismatched_metric() -> Metric {
    Metric::decoding(bin("X"), bin("Z"), vec![vec![0.9, 0.1], vec![0.5, 0.5]]).unwrap()
}

#[test]
fn codebook_shapes() {
    let point = Pmf::point_mass(Alphabet::indexed("X", 3), 2).unwrap();
    let book = generate_codebook(&point, 6, 5, CodebookStyle::Iid, 1);
    assert_eq!(book.len(), 5);
    assert!(book.iter().all(|w| w.iter().all(|&s| s == 2)));

    let cc = generate_codebook(&uniform("X", 2), 4, 50, CodebookStyle::ConstantComposition, 2);
    assert!(cc.iter().all(|w| w.iter().filter(|&&s| s == 0).count() == 2));
    let distinct: std::collections::BTreeSet<&[Symbol]> = cc.iter().collect();
    assert!(distinct.len() > 1, "words are permuted");

    let iid = generate_codebook(&uniform("X", 2), 10_000, 100, CodebookStyle::Iid, 3);
    let close = iid.iter().filter(|w| (fraction(w, 0) - 0.5).abs() < 0.02).count();
    assert!(close >= 99, "{close} of 100 words within 0.02");
}

#[test]
fn codebooks_are_seeded() {
    let p = Pmf::new(Alphabet::indexed("X", 3), vec![0.2, 0.3, 0.5]).unwrap();
    let a = generate_codebook(&p, 20, 10, CodebookStyle::Iid, 9);
    assert_eq!(a, generate_codebook(&p, 20, 10, CodebookStyle::Iid, 9));
    assert_ne!(a, generate_codebook(&p, 20, 10, CodebookStyle::Iid, 10));
}

#[test]
fn typicality_relay_finds_the_observation() {
    let joint = JointPmf::new(bin("Y"), bin("Z"), vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
    let y: Vec<Symbol> = vec![0, 1, 1, 0, 1, 0, 0, 1];
    let mut words = vec![1; 8];
    words.extend(&y);
    words.extend(vec![0; 8]);
    let book = Codebook::from_words(8, words);
    let mut rng = rng_for(0, 0);
    let c = relay_compress_typicality(&y, &book, &joint, 0.05, &mut rng);
    assert_eq!(c.index, 1);
    assert!(!c.fallback);

    let none = Codebook::from_words(8, [vec![1; 8], vec![0; 8]].concat());
    let c = relay_compress_typicality(&y, &none, &joint, 0.05, &mut rng);
    assert!(c.fallback);
    assert!(c.index < 2);
}

#[test]
fn typicality_relay_rarely_fails_above_the_test_channel_rate() {
    // I(Y;Z) = 1 - h2(0.1) = 0.531 < B = 1.
    let mut cfg = SimConfig::new(
        bsc(0.1, "X", "Y"),
        uniform("X", 2),
        RelaySpec::Typicality {
            test_channel: bsc(0.1, "Y", "Z"),
            eps: 0.2,
        },
        DecoderRule::MatchedMl,
        0.1,
        1.0,
        200,
        200,
        5,
    );
    let out = simulate(&cfg).unwrap();
    assert_eq!(out.engine, Engine::Ensemble);
    assert!(out.relay_failure_rate < 0.1, "{}", out.relay_failure_rate);

    // Below the test-channel rate the covering fails almost surely.
    cfg.bottleneck = 0.3;
    let out = simulate(&cfg).unwrap();
    assert!(out.relay_failure_rate > 0.9, "{}", out.relay_failure_rate);
}

#[test]
fn mindist_relay_examples() {
    let hamming = Metric::hamming(&bin("Y"), "Z");
    let y: Vec<Symbol> = vec![0, 1, 1, 0];
    let book = Codebook::from_words(4, [vec![1, 1, 1, 1], y.clone(), vec![0, 0, 0, 0]].concat());
    assert_eq!(relay_compress_mindist(&y, &book, &hamming).unwrap(), 1);

    // Distortion 2 for both words.
    let tied = Codebook::from_words(4, [vec![1, 1, 1, 1], vec![0, 0, 0, 0]].concat());
    assert_eq!(relay_compress_mindist(&y, &tied, &hamming).unwrap(), 0);

    let mut rng = rng_for(11, 0);
    for trial in 0..50 {
        let d: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
        let d0 = Metric::distortion(Alphabet::indexed("Y", 3), Alphabet::indexed("Z", 3), d.clone()).unwrap();
        let y: Vec<Symbol> = (0..8).map(|_| rng.gen_range(0..3)).collect();
        let book = Codebook::from_words(8, (0..32).map(|_| rng.gen_range(0..3)).collect());
        let totals: Vec<f64> = book
            .iter()
            .map(|z| y.iter().zip(z).map(|(&a, &b)| d[a as usize][b as usize]).sum())
            .collect();
        let best = (0..4).fold(0, |b, i| if totals[i] < totals[b] - 1e-12 { i } else { b });
        assert_eq!(relay_compress_mindist(&y, &book, &d0).unwrap(), best, "trial {trial}");
    }
}

#[test]
fn log_loss_distortion_is_maximum_likelihood() {
    let mut rng = rng_for(12, 0);
    for _ in 0..50 {
        let rows: Vec<Vec<f64>> = (0..3).map(|_| dirichlet_uniform(&mut rng, 3)).collect();
        let d: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|p| 4.0 - p.ln()).collect()).collect();
        let d0 = Metric::distortion(Alphabet::indexed("Y", 3), Alphabet::indexed("Z", 3), d).unwrap();
        let y: Vec<Symbol> = (0..10).map(|_| rng.gen_range(0..3)).collect();
        let book = Codebook::from_words(10, (0..80).map(|_| rng.gen_range(0..3)).collect());
        let likelihood = |z: &[Symbol]| -> f64 { y.iter().zip(z).map(|(&a, &b)| rows[a as usize][b as usize].ln()).sum() };
        let ml = (0..8).fold(0, |b, i| if likelihood(book.word(i)) > likelihood(book.word(b)) + 1e-12 { i } else { b });
        assert_eq!(relay_compress_mindist(&y, &book, &d0).unwrap(), ml);
    }
}

#[test]
fn decoders_on_explicit_codebooks() {
    let book = generate_codebook(&uniform("X", 2), 16, 32, CodebookStyle::Iid, 4);
    let matched = Metric::matched(&Channel::identity(bin("X"), "Z"));
    for m in [0, 7, 31] {
        let z = book.word(m).to_vec();
        let first = (0..32).find(|&i| book.word(i) == z.as_slice()).unwrap();
        assert_eq!(decode(&z, &book, &DecoderRule::MaxMetric(matched.clone())).unwrap(), first);
        assert_eq!(decode(&z, &book, &DecoderRule::Mmi).unwrap(), first);
    }

    // Independent received word: every empirical MI is near zero and duplicates tie low.
    let mut rng = rng_for(13, 0);
    let n = 4000;
    let w: Vec<Symbol> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    let z: Vec<Symbol> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    let book = Codebook::from_words(n, [w.clone(), w.clone(), w].concat());
    assert_eq!(decode(&z, &book, &DecoderRule::Mmi).unwrap(), 0);
    let mi = bottleneck_core::prob::joint_empirical_type(
        &book.word(0).iter().map(|&s| s as usize).collect::<Vec<_>>(),
        &z.iter().map(|&s| s as usize).collect::<Vec<_>>(),
        &bin("X"),
        &bin("Z"),
    )
    .unwrap()
    .to_joint()
    .unwrap()
    .mutual_information();
    assert!(mi < 1e-3, "{mi}");

    assert!(matches!(
        decode(&z, &book, &DecoderRule::MatchedMl),
        Err(Error::DecoderConfig(_))
    ));
}

#[test]
fn threshold_decoder_accepts_the_true_codeword() {
    let w = bsc(0.1, "X", "Z");
    let metric = Metric::decoding(bin("X"), bin("Z"), vec![vec![0.8, 0.2], vec![0.2, 0.8]]).unwrap();
    let p_xz = JointPmf::from_channel(&w, &uniform("X", 2)).unwrap();
    let theta = threshold_level(&p_xz, &metric).unwrap();
    let rule = DecoderRule::Threshold {
        metric,
        theta,
        eps: 0.05,
    };
    let mut rng = rng_for(14, 0);
    let n = 500;
    let mut passed = 0;
    for _ in 0..200 {
        let x: Vec<Symbol> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let z: Vec<Symbol> = x.iter().map(|&s| if rng.gen::<f64>() < 0.1 { 1 - s } else { s }).collect();
        if decode(&z, &Codebook::from_words(n, x), &rule).is_ok() {
            passed += 1;
        }
    }
    assert!(passed >= 190, "{passed} of 200");

    // Two identical passing codewords are a decoding failure.
    let x: Vec<Symbol> = vec![0; 10];
    let book = Codebook::from_words(10, [x.clone(), x.clone()].concat());
    assert!(matches!(decode(&x, &book, &rule), Err(Error::DecodeFailure { passing: 2 })));
}

#[test]
fn identity_chain_is_error_free() {
    let cfg = SimConfig::new(
        Channel::identity(bin("X"), "Y"),
        uniform("X", 2),
        RelaySpec::MinDistortion {
            d0: Metric::hamming(&bin("Y"), "Z"),
            p_z: uniform("Z", 2),
        },
        DecoderRule::MaxMetric(Metric::matched(&Channel::identity(bin("X"), "Z"))),
        0.5,
        2.0,
        32,
        1000,
        0,
    );
    let out = simulate(&cfg).unwrap();
    assert_eq!(out.errors, 0);
    assert_eq!(out.ci_low, 0.0);
}

#[test]
fn rates_above_the_alphabet_size_fail() {
    let mut cfg = SimConfig::new(
        Channel::identity(bin("X"), "Y"),
        uniform("X", 2),
        RelaySpec::Typicality {
            test_channel: Channel::identity(bin("Y"), "Z"),
            eps: 0.5,
        },
        DecoderRule::MatchedMl,
        1.5,
        2.0,
        8,
        200,
        1,
    );
    for engine in [Engine::Explicit, Engine::Ensemble] {
        cfg.engine = engine;
        let out = simulate(&cfg).unwrap();
        assert!(out.ci_low > 0.5, "{engine:?}: {out:?}");
    }
}

#[test]
fn engines_agree_on_a_small_instance() {
    for (relay, decoder) in [
        (
            RelaySpec::Typicality {
                test_channel: bsc(0.05, "Y", "Z"),
                eps: 0.4,
            },
            DecoderRule::MatchedMl,
        ),
        (
            RelaySpec::MinDistortion {
                d0: Metric::hamming(&bin("Y"), "Z"),
                p_z: uniform("Z", 2),
            },
            DecoderRule::Mmi,
        ),
    ] {
        let mut cfg = SimConfig::new(bsc(0.1, "X", "Y"), uniform("X", 2), relay, decoder, 0.5, 0.75, 12, 3000, 21);
        cfg.engine = Engine::Explicit;
        let a = simulate(&cfg).unwrap();
        cfg.engine = Engine::Ensemble;
        let b = simulate(&cfg).unwrap();
        let (pa, pb) = (a.error_estimate, b.error_estimate);
        let se = ((pa * (1.0 - pa) + pb * (1.0 - pb)) / 3000.0).sqrt();
        assert!((pa - pb).abs() < 4.0 * se, "explicit {pa} vs ensemble {pb}");
    }
}

#[test]
fn constant_composition_engines_agree() {
    let mut cfg = acceptance_config(0.5, 12, 3000, 22, DecoderRule::MatchedMl);
    cfg.codebook_style = CodebookStyle::ConstantComposition;
    cfg.bottleneck = 0.75;
    cfg.relay = RelaySpec::Typicality {
        test_channel: bsc(0.05, "Y", "Z"),
        eps: 0.4,
    };
    cfg.engine = Engine::Explicit;
    let a = simulate(&cfg).unwrap();
    cfg.engine = Engine::Ensemble;
    let b = simulate(&cfg).unwrap();
    let (pa, pb) = (a.error_estimate, b.error_estimate);
    let se = ((pa * (1.0 - pa) + pb * (1.0 - pb)) / 3000.0).sqrt();
    assert!((pa - pb).abs() < 4.0 * se, "explicit {pa} vs ensemble {pb}");
}

#[test]
fn error_rate_separates_rates_around_capacity() {
    let low = simulate(&acceptance_config(0.25, 200, 1000, 7, DecoderRule::MatchedMl)).unwrap();
    let high = simulate(&acceptance_config(0.8, 200, 1000, 7, DecoderRule::MatchedMl)).unwrap();
    assert!(low.ci_high < high.ci_low, "{low:?} vs {high:?}");
}

#[test]
fn matched_never_loses_to_mismatched_on_common_randomness() {
    for seed in 0..20 {
        let matched = simulate(&acceptance_config(0.25, 200, 200, seed, DecoderRule::MatchedMl)).unwrap();
        let mismatched =
            simulate(&acceptance_config(0.25, 200, 200, seed, DecoderRule::MaxMetric(mismatched_metric()))).unwrap();
        assert!(matched.errors <= mismatched.errors, "seed {seed}: {matched:?} vs {mismatched:?}");
    }
}

#[test]
fn simulation_is_deterministic() {
    let cfg = acceptance_config(0.4, 60, 300, 99, DecoderRule::Mmi);
    let a = simulate(&cfg).unwrap();
    assert_eq!(a, simulate(&cfg).unwrap());
    let other = simulate(&SimConfig { seed: 100, ..cfg }).unwrap();
    assert_eq!(other.seed, 100);
}

#[test]
fn configuration_errors() {
    let mut cfg = acceptance_config(0.5, 40, 10, 0, DecoderRule::MatchedMl);
    cfg.engine = Engine::Explicit;
    assert!(matches!(simulate(&cfg), Err(Error::BudgetExceeded { .. })));

    let mut cfg = acceptance_config(0.5, 40, 10, 0, DecoderRule::MatchedMl);
    cfg.relay = RelaySpec::MinDistortion {
        d0: Metric::hamming(&bin("Y"), "Z"),
        p_z: uniform("Z", 2),
    };
    assert!(matches!(simulate(&cfg), Err(Error::DecoderConfig(_))));

    let mut cfg = acceptance_config(0.5, 40, 10, 0, DecoderRule::MatchedMl);
    cfg.n = 0;
    assert!(matches!(simulate(&cfg), Err(Error::InvalidArgument(_))));

    let mut cfg = acceptance_config(0.5, 4000, 10, 0, DecoderRule::MatchedMl);
    cfg.channel = Channel::new(
        Alphabet::indexed("X", 2),
        Alphabet::indexed("Y", 2),
        vec![vec![0.5, 0.5], vec![0.5, 0.5]],
    )
    .unwrap();
    cfg.budget = 1e3;
    assert!(matches!(simulate(&cfg), Err(Error::BudgetExceeded { .. })));
}
