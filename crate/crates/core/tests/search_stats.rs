use std::f64::consts::PI;

use beamalign::channel::{single_path_channel, SteeringConfig};
use beamalign::codebook::{hierarchical_codebooks, CodebookKind, IdealBeam, PairCodebook, Beam};
use beamalign::search::{
    best_pair, exhaustive_search, feedback_overhead_bits, hierarchical_search, measure, otss, OtssParams, Searcher,
    TrainingBudget,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn arrays() -> (SteeringConfig, SteeringConfig) {
    (SteeringConfig::half_wavelength(64).unwrap(), SteeringConfig::half_wavelength(32).unwrap())
}

fn random_gains(cb: &PairCodebook, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let (tx, rx) = arrays();
    let psi = rng.random_range(0.0..2.0 * PI);
    let phi = rng.random_range(0.0..2.0 * PI);
    let gamma = Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
    cb.effective_gains(&single_path_channel(gamma, psi, phi, tx, rx)).unwrap()
}

#[test]
fn null_measurement_statistic() {
    let mut rng = ChaCha8Rng::seed_from_u64(301);
    let (e, sigma2) = (0.7, 1.3);
    let draws = 1_000_000;
    let mean = (0..draws)
        .map(|_| measure(Complex64::new(0.0, 0.0), e, sigma2, &mut rng).norm_sqr() / (sigma2 / 2.0 * e))
        .sum::<f64>()
        / draws as f64;
    assert!((mean - 2.0).abs() < 0.01, "{mean}");
}

#[test]
fn signal_measurement_statistic() {
    let mut rng = ChaCha8Rng::seed_from_u64(302);
    let (e, sigma2) = (0.05, 1.0);
    let h = Complex64::new(128f64.sqrt(), 0.0);
    let lambda = 2.0 * h.norm_sqr() * e / sigma2;
    let draws = 1_000_000;
    let mean = (0..draws).map(|_| 2.0 * measure(h, e, sigma2, &mut rng).norm_sqr() / (e * sigma2)).sum::<f64>()
        / draws as f64;
    assert!((mean - (2.0 + lambda)).abs() < 0.005 * (2.0 + lambda), "{mean} vs {}", 2.0 + lambda);
}

#[test]
fn zero_energy_measurement_is_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    assert_eq!(measure(Complex64::new(3.0, 1.0), 0.0, 1.0, &mut rng), Complex64::new(0.0, 0.0));
}

#[test]
fn noiseless_searches_find_the_best_pair() {
    let cb = PairCodebook::ideal(16, 8).unwrap();
    let hcb = hierarchical_codebooks(CodebookKind::Ideal, 4, 3).unwrap();
    let budget = TrainingBudget::new(10.0, 1e-30).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(304);
    let (tx, rx) = arrays();
    for _ in 0..500 {
        let psi = rng.random_range(0.0..2.0 * PI);
        let phi = rng.random_range(0.0..2.0 * PI);
        let h = single_path_channel(Complex64::new(1.0, 0.0), psi, phi, tx, rx);
        let gains = cb.effective_gains(&h).unwrap();
        let l_opt = best_pair(&gains);
        assert_eq!(exhaustive_search(&gains, budget, &mut rng).unwrap().chosen, l_opt);
        let p = OtssParams::new(117, 0.93, 128).unwrap();
        assert_eq!(otss(&gains, budget, p, &mut rng).unwrap().chosen, l_opt);
        let o = hierarchical_search(&h, &hcb, budget, &mut rng).unwrap();
        assert_eq!(cb.join(o.tx, o.rx), l_opt);
        let (lt, lr) = cb.split(l_opt);
        let (Beam::Ideal(bt), Beam::Ideal(br)) = (&cb.tx[lt], &cb.rx[lr]) else { panic!("ideal beams expected") };
        assert!(bt.interval.contains(psi) && br.interval.contains(phi));
    }
}

#[test]
fn single_path_gain_on_covering_pair() {
    let cb = PairCodebook::ideal(16, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(305);
    for _ in 0..100 {
        let g = random_gains(&cb, &mut rng);
        let nonzero: Vec<f64> = g.iter().map(|h| h.norm_sqr()).filter(|&v| v > 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert!((nonzero[0] - 128.0).abs() < 1e-9);
    }
}

#[test]
fn exhaustive_search_vanishing_budget() {
    let cb = PairCodebook::ideal(16, 8).unwrap();
    let budget = TrainingBudget::new(1e-12, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(306);
    let mut searcher = Searcher::new();
    let trials = 100_000;
    let mut misses = 0;
    for _ in 0..trials {
        let g = random_gains(&cb, &mut rng);
        if searcher.exhaustive(&g, budget, &mut rng) != best_pair(&g) {
            misses += 1;
        }
    }
    let p = misses as f64 / trials as f64;
    assert!((p - 127.0 / 128.0).abs() < 0.01 * 127.0 / 128.0, "{p}");
}

#[test]
fn hierarchical_search_vanishing_budget() {
    let (tx, rx) = arrays();
    let hcb = hierarchical_codebooks(CodebookKind::Ideal, 4, 3).unwrap();
    let cb = hcb.flat();
    let budget = TrainingBudget::new(1e-12, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(307);
    let trials = 100_000;
    let mut hits = 0;
    for _ in 0..trials {
        let psi = rng.random_range(0.0..2.0 * PI);
        let phi = rng.random_range(0.0..2.0 * PI);
        let h = single_path_channel(Complex64::new(1.0, 0.0), psi, phi, tx, rx);
        let o = hierarchical_search(&h, &hcb, budget, &mut rng).unwrap();
        if cb.join(o.tx, o.rx) == best_pair(&cb.effective_gains(&h).unwrap()) {
            hits += 1;
        }
    }
    let p = hits as f64 / trials as f64;
    assert!((p - 1.0 / 128.0).abs() < 0.2 / 128.0, "{p}");
}

#[test]
fn two_stage_with_full_first_stage_is_exhaustive() {
    let cb = PairCodebook::ideal(16, 8).unwrap();
    let p = OtssParams::new(127, 1.0, 128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(308);
    for t in 0..1000u64 {
        let g = random_gains(&cb, &mut rng);
        let budget = TrainingBudget::from_db(9.0 + (t % 6) as f64).unwrap();
        let es = exhaustive_search(&g, budget, &mut ChaCha8Rng::seed_from_u64(t)).unwrap();
        let two = otss(&g, budget, p, &mut ChaCha8Rng::seed_from_u64(t)).unwrap();
        assert_eq!(es.chosen, two.chosen);
        assert_eq!(es.stage1_stats, two.stage1_stats);
    }
}

#[test]
fn hierarchy_structure() {
    let hcb = hierarchical_codebooks(CodebookKind::Ideal, 4, 3).unwrap();
    assert_eq!(hcb.total_measurements(), 14);
    for (k, level) in hcb.tx_levels.iter().enumerate() {
        assert_eq!(level.len(), 1 << (k + 1));
        for b in level {
            let Beam::Ideal(b) = b else { panic!() };
            assert!((b.gain - (1 << (k + 1)) as f64).abs() < 1e-12);
        }
    }
    let flat = PairCodebook::ideal(16, 8).unwrap();
    assert_eq!(hcb.flat(), flat);
    // every child interval sits inside its parent
    for levels in [&hcb.tx_levels, &hcb.rx_levels] {
        for k in 1..levels.len() {
            for (c, child) in levels[k].iter().enumerate() {
                let (Beam::Ideal(ch), Beam::Ideal(pa)) = (child, &levels[k - 1][c / 2]) else { panic!() };
                let inside = |b: &IdealBeam, x: f64| b.interval.start <= x + 1e-12 && x <= b.interval.end + 1e-12;
                assert!(inside(pa, ch.interval.start) && inside(pa, ch.interval.end));
            }
        }
    }
}

#[test]
fn feedback_bits() {
    let (s1, s2, es) = feedback_overhead_bits(128, 117).unwrap();
    assert_eq!(es, 7.0);
    assert_eq!((s1 + s2).ceil(), 55.0);
    let (_, s2, _) = feedback_overhead_bits(128, 127).unwrap();
    assert_eq!(s2, 0.0);
    let (s1, _, _) = feedback_overhead_bits(4, 2).unwrap();
    assert!((s1 - 6f64.log2()).abs() < 1e-12);
    assert!(feedback_overhead_bits(4, 4).is_err());
    assert!(feedback_overhead_bits(4, 0).is_err());
}

#[test]
fn searches_reject_bad_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(309);
    let budget = TrainingBudget::from_db(10.0).unwrap();
    assert!(exhaustive_search(&[], budget, &mut rng).is_err());
    assert!(OtssParams::new(0, 0.5, 8).is_err());
    assert!(OtssParams::new(8, 0.5, 8).is_err());
    assert!(OtssParams::new(3, 0.0, 8).is_err());
    assert!(OtssParams::new(3, 1.1, 8).is_err());
    assert!(TrainingBudget::new(0.0, 1.0).is_err());
}
