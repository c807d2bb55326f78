use sobol_stream::models::{
    analytic_indices, exact_bin_statistics, generate, oracle_indices, sample_inputs,
};
use sobol_stream::partition::{equidistant_edges, quantile_edges};
use sobol_stream::{ModelSpec, Partition, Scheme};

fn assert_indices_close(a: &[f64], b: &[f64], tol: f64, what: &str) {
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= tol, "{what}: input {i}: {x} vs {y}");
    }
}

#[test]
fn oracle_agrees_with_closed_forms() {
    let models = [
        ModelSpec::polynomial_normal(),
        ModelSpec::polynomial_uniform(),
        ModelSpec::polynomial_exponential(),
        ModelSpec::ishigami(),
        ModelSpec::SobolG { d: 3 },
    ];
    for spec in models {
        let exact = analytic_indices(&spec).unwrap();
        let oracle = oracle_indices(&spec, 4_000_000, 101).unwrap();
        assert_indices_close(&oracle.first_order, &exact.first_order, 0.005, spec.name());
        assert!(
            (oracle.variance / exact.variance - 1.0).abs() < 0.02,
            "{}: variance {} vs {}",
            spec.name(),
            oracle.variance,
            exact.variance
        );
    }
}

#[test]
fn sobol_g_explains_about_a_third() {
    let r = analytic_indices(&ModelSpec::SobolG { d: 1000 }).unwrap();
    let fraction: f64 = r.first_order.iter().sum();
    assert!((0.32..=0.38).contains(&fraction), "{fraction}");
}

fn skewness(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

#[test]
fn gamma_output_moments() {
    for alpha in [0.1, 1.0, 0.01] {
        let y = generate(&ModelSpec::GammaOutput { alpha }, 0, 1_000_000, 9).unwrap().y.to_vec();
        let target = 2.0 / alpha.sqrt();
        let skew = skewness(&y);
        // Sample skewness converges slowly for very heavy tails.
        let tol = if alpha < 0.05 { 0.3 } else { 0.15 };
        assert!((skew / target - 1.0).abs() < tol, "alpha {alpha}: skewness {skew} vs {target}");
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - 1.0).abs() < 0.1, "alpha {alpha}: variance {var}");
    }
}

#[test]
fn spike_slab_zero_fraction() {
    let n = 200_000;
    let x = sample_inputs(&ModelSpec::polynomial_spike_slab(), n, 4).unwrap();
    let zeros = x.column(1).iter().filter(|&&v| v == 0.0).count() as f64;
    let sd = (n as f64 * 0.25).sqrt();
    assert!((zeros - 0.5 * n as f64).abs() < 3.0 * sd);
}

#[test]
fn samples_are_bit_reproducible() {
    for spec in [ModelSpec::polynomial_spike_slab(), ModelSpec::ishigami(), ModelSpec::GammaOutput { alpha: 0.1 }] {
        let a = generate(&spec, 0, 5_000, 42).unwrap();
        let b = generate(&spec, 0, 5_000, 42).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y.to_vec().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                   b.y.to_vec().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        let c = generate(&spec, 0, 5_000, 43).unwrap();
        assert_ne!(a.x, c.x);
    }
}

#[test]
fn exact_bin_probabilities_sum_to_one() {
    let spec = ModelSpec::polynomial_normal();
    let x = sample_inputs(&spec, 1_000, 6).unwrap();
    let column = x.column(1).to_vec();
    for p in [
        quantile_edges(&column, 50).unwrap(),
        equidistant_edges(&column, 50, None).unwrap(),
        Partition::from_edges(vec![], Scheme::Equidistant).unwrap(),
    ] {
        let stats = exact_bin_statistics(&spec, 1, &p).unwrap();
        let total: f64 = stats.iter().map(|b| b.probability).sum();
        assert!((total - 1.0).abs() < 1e-9, "{total}");
        let numerator: f64 = stats
            .iter()
            .filter(|b| b.probability > 0.0)
            .map(|b| b.mean_conditional_variance * b.probability)
            .sum();
        assert!((numerator - 2.0).abs() < 1e-6, "{numerator}");
    }
}

#[test]
fn outer_bins_carry_the_largest_gap() {
    let spec = ModelSpec::polynomial_normal();
    let column = sample_inputs(&spec, 10_000, 7).unwrap().column(1).to_vec();
    let p = quantile_edges(&column, 50).unwrap();
    let stats = exact_bin_statistics(&spec, 1, &p).unwrap();
    let gaps: Vec<f64> = stats.iter().map(|b| b.conditional_mean_variance).collect();
    let inner = gaps[1..gaps.len() - 1].iter().copied().fold(0.0, f64::max);
    assert!(gaps[0] > inner && gaps[gaps.len() - 1] > inner);
}
