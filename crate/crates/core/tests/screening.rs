use proptest::prelude::*;
use sobol_stream::heuristic::screen;
use sobol_stream::{filter, noise_sigma, Error};

fn indices() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.2f64..1.0, 1..60)
}

proptest! {
    #[test]
    fn sigma_positive_iff_some_negative(xs in indices()) {
        match noise_sigma(&xs, 4.0) {
            Ok(t) => {
                prop_assert!(xs.iter().any(|&s| s < 0.0));
                prop_assert!(t.sigma > 0.0 && t.n_negative >= 1);
                prop_assert!((t.threshold - 4.0 * t.sigma).abs() <= 1e-15 * t.threshold);
            }
            Err(e) => {
                prop_assert_eq!(e, Error::NoNegativeIndices);
                prop_assert!(xs.iter().all(|&s| s >= 0.0));
            }
        }
    }

    #[test]
    fn scale_equivariance(xs in indices(), c in 1e-3f64..1e3) {
        prop_assume!(xs.iter().any(|&s| s < 0.0));
        let scaled: Vec<f64> = xs.iter().map(|s| s * c).collect();
        let a = filter(&xs, 4.0).unwrap();
        let b = filter(&scaled, 4.0).unwrap();
        prop_assert!((b.threshold.sigma - c * a.threshold.sigma).abs() <= 1e-12 * b.threshold.sigma);
        let ia: Vec<usize> = a.significant.iter().map(|p| p.0).collect();
        let ib: Vec<usize> = b.significant.iter().map(|p| p.0).collect();
        // Entries sitting on the threshold may flip from rounding alone.
        let borderline = xs.iter().any(|&s| (s - a.threshold.threshold).abs() < 1e-12);
        prop_assert!(ia == ib || borderline);
    }

    #[test]
    fn significant_set_is_sorted_and_above_threshold(xs in indices()) {
        prop_assume!(xs.iter().any(|&s| s < 0.0));
        let out = filter(&xs, 2.5).unwrap();
        prop_assert!(out.significant.windows(2).all(|w| w[0].1 >= w[1].1));
        prop_assert!(out.significant.iter().all(|&(i, s)| xs[i] == s && s > out.threshold.threshold));
        let rest = xs.iter().filter(|&&s| s > out.threshold.threshold).count();
        prop_assert_eq!(rest, out.significant.len());
        let again = screen(&xs, out.threshold);
        prop_assert_eq!(again, out);
    }
}

mod tracking {
    use ndarray::{concatenate, Axis};
    use sobol_stream::models::{generate, rng::derive_seed, sample_inputs};
    use sobol_stream::{all_at_once, noise_sigma, ModelSpec, PartitionConfig, Scheme};

    /// Sobol' G outputs with `dummies` extra independent uniform inputs
    /// appended after the model inputs.
    fn indices_with_dummies(n: usize, dummies: usize, seed: u64) -> Vec<f64> {
        let sample = generate(&ModelSpec::SobolG { d: 1000 }, 0, n, seed).unwrap();
        let x = if dummies == 0 {
            sample.x
        } else {
            let extra = sample_inputs(&ModelSpec::SobolG { d: dummies }, n, derive_seed(seed, 1)).unwrap();
            concatenate(Axis(1), &[sample.x.view(), extra.view()]).unwrap()
        };
        all_at_once(x.view(), sample.y.view(), &PartitionConfig::new(Scheme::Equidistant, 50))
            .unwrap()
            .s
    }

    #[test]
    fn symmetrized_sigma_tracks_replicate_noise() {
        for n in [1_000, 10_000] {
            // 10 replicates x 50 dummy inputs = 500 zero-index estimates.
            let zeros: Vec<f64> = (0..10)
                .flat_map(|r| indices_with_dummies(n, 50, derive_seed(900 + n as u64, r)).split_off(1000))
                .collect();
            let mean = zeros.iter().sum::<f64>() / zeros.len() as f64;
            let sigma_noise = (zeros.iter().map(|s| (s - mean).powi(2)).sum::<f64>()
                / (zeros.len() - 1) as f64)
                .sqrt();
            let run = indices_with_dummies(n, 0, 5 + n as u64);
            let sigma_symm = noise_sigma(&run, 4.0).unwrap().sigma;
            let ratio = sigma_symm / sigma_noise;
            assert!((0.5..=2.0).contains(&ratio), "N={n}: symm {sigma_symm}, noise {sigma_noise}");
        }
    }
}
