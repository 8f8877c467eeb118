mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use walsh_filter::filters::*;
use walsh_filter::ControlSequence;

fn random_sequence(rng: &mut ChaCha8Rng, n: usize) -> ControlSequence {
    let triples: Vec<(f64, f64, f64)> =
        (0..n).map(|_| (rng.gen_range(-20.0..20.0), rng.gen_range(0.05..0.5), rng.gen_range(-PI..PI))).collect();
    ControlSequence::from_triples(&triples, "random").unwrap()
}

#[test]
fn control_vectors_match_time_domain_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let seq = random_sequence(&mut rng, 4);
        let ev = FilterEvaluator::new(&seq);
        for _ in 0..20 {
            let w = 10f64.powf(rng.gen_range(-3.0..2.0));
            for q in [Quadrature::Dephasing, Quadrature::Amplitude] {
                let fast = ev.control_vector(q, w).components;
                let slow = common::control_vector_by_quadrature(&seq, q, w);
                let norm = slow.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                let err = fast.iter().zip(&slow).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
                assert!(err <= 1e-6 * norm, "{q:?} w={w} err={err} norm={norm}");
            }
        }
    }
}

#[test]
fn taylor_fit_matches_time_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..3 {
        let seq = random_sequence(&mut rng, 5);
        for q in [Quadrature::Dephasing, Quadrature::Amplitude] {
            let exact = common::taylor_by_moments(&seq, q, 3);
            let fit = taylor_fit(&seq, q).unwrap();
            for (k, c) in exact.iter().enumerate() {
                let got = fit.coefficient(k + 1);
                assert!((got - c).abs() < 1e-6 * c.abs().max(1e-3), "{q:?} C{} fit {got} exact {c}", 2 * (k + 1));
            }
            assert!((leading_coefficient(&seq, q) - exact[0]).abs() < 1e-9 * exact[0].max(1.0));
        }
    }
}

#[test]
fn continuous_across_resonance() {
    let seq = ControlSequence::from_triples(&[(6.0, 0.4, 0.3), (-9.0, 0.35, 1.2), (4.0, 0.25, 0.0)], "r").unwrap();
    let ev = FilterEvaluator::new(&seq);
    for om in [6.0, 9.0, 4.0] {
        for eps in [1e-5, 1e-7, 1e-9] {
            let lo = ev.filter(Quadrature::Dephasing, om * (1.0 - eps));
            let hi = ev.filter(Quadrature::Dephasing, om * (1.0 + eps));
            let at = ev.filter(Quadrature::Dephasing, om);
            let slope_scale = 10.0 * eps;
            assert!((lo - at).abs() <= (1e-6 + slope_scale) * at, "Omega={om} eps={eps}");
            assert!((hi - at).abs() <= (1e-6 + slope_scale) * at, "Omega={om} eps={eps}");
        }
    }
}

proptest! {
    #[test]
    fn filters_are_non_negative(triples in prop::collection::vec((-30.0f64..30.0, 0.01f64..1.0, -PI..PI), 1..8),
                                w in 1e-6f64..1e3) {
        let seq = ControlSequence::from_triples(&triples, "p").unwrap();
        let ev = FilterEvaluator::new(&seq);
        for q in [Quadrature::Dephasing, Quadrature::Amplitude] {
            let f = ev.filter(q, w);
            prop_assert!(f.is_finite() && f >= 0.0);
        }
    }

    #[test]
    fn amplitude_floor_of_constant_phase(triples in prop::collection::vec((0.5f64..30.0, 0.05f64..1.0), 1..6), phi in -PI..PI) {
        let t: Vec<(f64, f64, f64)> = triples.iter().map(|&(o, d)| (o, d, phi)).collect();
        let seq = ControlSequence::from_triples(&t, "amf").unwrap();
        let theta: f64 = t.iter().map(|(o, d, _)| o * d).sum();
        let c2 = taylor_fit(&seq, Quadrature::Amplitude).unwrap().coefficient(1);
        let tau = seq.total_duration();
        let want = 0.25 * theta * theta / (tau * tau);
        prop_assert!((c2 - want).abs() < 1e-3 * want, "{} vs {}", c2, want);
    }
}
