mod common;

use num_rational::Rational64;
use proptest::prelude::*;
use walsh_filter::walsh::*;

#[test]
fn hadamard_rows_are_orthogonal() {
    for n in 0..=10 {
        let h = hadamard(n).unwrap();
        let m = h.order();
        let dense = h.to_dense();
        for i in 0..m {
            let row_i = &dense[i * m..(i + 1) * m];
            for j in i..m {
                let row_j = &dense[j * m..(j + 1) * m];
                let dot: i64 = row_i.iter().zip(row_j).map(|(a, b)| (*a as i64) * (*b as i64)).sum();
                let want = if i == j { m as i64 } else { 0 };
                assert_eq!(dot, want, "n={n} rows {i},{j}");
            }
        }
    }
}

#[test]
fn paley_matches_hadamard_columns() {
    for n in 0..=8u32 {
        let h = hadamard(n).unwrap();
        let m = h.order();
        for k in 0..m as u64 {
            let col = paley_to_hadamard_column(PaleyIndex(k), n).unwrap() - 1;
            let bins = paley_bins(PaleyIndex(k), m).unwrap();
            for (row, b) in bins.iter().enumerate() {
                assert_eq!(*b, h.entry(row, col), "n={n} k={k} row={row}");
            }
        }
    }
}

#[test]
fn fourier_roll_off_follows_hamming_weight() {
    let nus: Vec<f64> = walsh_filter::filters::log_grid_n(1e-3, 1e-1, 41);
    for k in 0..=31u64 {
        let idx = PaleyIndex(k);
        let mags: Vec<f64> = nus.iter().map(|&nu| paley_fourier::<f64>(idx, nu).norm()).collect();
        let slope = common::loglog_slope(&nus, &mags);
        assert!((slope - idx.hamming_weight() as f64).abs() < 0.2, "k={k} slope {slope}");
    }
}

#[test]
fn fourier_matches_bin_sum() {
    for k in [1u64, 6, 13, 31] {
        let idx = PaleyIndex(k);
        let m = idx.segment_count();
        let bins = paley_bins(idx, m).unwrap();
        for nu in [0.7, 3.0, 25.0] {
            let direct: num_complex::Complex64 = bins
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let (a, c) = (i as f64 / m as f64, (i + 1) as f64 / m as f64);
                    let e = (num_complex::Complex64::new(0.0, nu * c).exp() - num_complex::Complex64::new(0.0, nu * a).exp())
                        / num_complex::Complex64::new(0.0, nu);
                    e * *b as f64
                })
                .sum();
            assert!((paley_fourier::<f64>(idx, nu) - direct).norm() < 1e-13, "k={k} nu={nu}");
        }
    }
}

proptest! {
    #[test]
    fn paley_is_balanced(k in 1u64..4096) {
        let idx = PaleyIndex(k);
        let sum: i64 = paley_bins(idx, idx.segment_count()).unwrap().iter().map(|&b| b as i64).sum();
        prop_assert_eq!(sum, 0);
    }

    #[test]
    fn index_digits(k in 0u64..1 << 20) {
        let idx = PaleyIndex(k);
        prop_assert!(idx.hamming_weight() <= idx.msb_position());
        prop_assert_eq!(idx.hamming_weight(), k.count_ones());
        let rebuilt: u64 = (1..=idx.msb_position()).filter(|&j| idx.has_factor(j)).map(|j| 1u64 << (j - 1)).sum();
        prop_assert_eq!(rebuilt, k);
    }

    #[test]
    fn exact_round_trip(values in prop::collection::vec(-1000i64..1000, 1..=64usize)) {
        let m = values.len().next_power_of_two();
        let mut amps: Vec<Rational64> = values.iter().map(|&v| Rational64::new(v, 7)).collect();
        amps.resize(m, Rational64::from_integer(0));
        let spectrum = WalshSpectrum::new(amps.clone(), Modulation::Amplitude, Rational64::from_integer(1));
        let segs = synthesize(&spectrum).unwrap();
        prop_assert_eq!(segs.len(), m);
        let back = analyze(&segs, Modulation::Amplitude, Rational64::from_integer(1)).unwrap();
        prop_assert_eq!(back.amplitudes, amps);
    }

    #[test]
    fn synthesis_matches_dense_product(values in prop::collection::vec(-5.0f64..5.0, 16)) {
        let spectrum = WalshSpectrum::new(values.clone(), Modulation::Amplitude, 1.0);
        let fast = synthesize(&spectrum).unwrap();
        for (i, f) in fast.iter().enumerate() {
            let x = (i as f64 + 0.5) / 16.0;
            let direct: f64 = values.iter().enumerate().map(|(k, a)| a * paley(PaleyIndex(k as u64), x).unwrap() as f64).sum();
            prop_assert!((f - direct).abs() < 1e-12);
        }
    }
}
