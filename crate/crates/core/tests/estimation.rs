use ndarray::{s, ArrayView1, ArrayView2};
use proptest::prelude::*;
use sobol_stream::models::{generate, rng::derive_seed, Sample};
use sobol_stream::{ModelSpec, PartitionConfig, Scheme, SobolAccumulator, SobolResult};

fn sample(spec: &ModelSpec, n: usize, seed: u64) -> Sample {
    generate(spec, 0, n, seed).unwrap()
}

/// Partitions from the first `n0` rows, then the remainder in `batch` rows.
fn stream(sample: &Sample, config: &PartitionConfig, n0: usize, batch: usize) -> SobolAccumulator {
    let mut acc = SobolAccumulator::initialize(
        sample.x.slice(s![..n0, ..]),
        sample.y.slice(s![..n0]),
        config,
    )
    .unwrap();
    let n = sample.y.len();
    let mut start = n0;
    while start < n {
        let end = (start + batch).min(n);
        acc.ingest_batch(sample.x.slice(s![start..end, ..]), sample.y.slice(s![start..end]))
            .unwrap();
        start = end;
    }
    acc
}

/// Fresh accumulator over `x, y` using the partitions of `like`.
fn refit(like: &SobolAccumulator, x: ArrayView2<f64>, y: ArrayView1<f64>) -> SobolResult {
    let mut acc = SobolAccumulator::with_partitions(like.partitions().to_vec()).unwrap();
    acc.ingest_batch(x, y).unwrap();
    acc.finalize().unwrap()
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn batching_does_not_change_indices(
        seed in any::<u64>(),
        batch in 1usize..700,
        n0 in 20usize..200,
        scheme in prop::sample::select(vec![Scheme::Quantile, Scheme::Kde, Scheme::Equidistant]),
    ) {
        let sample = sample(&ModelSpec::ishigami(), 3_000, seed);
        let config = PartitionConfig::new(scheme, 8);
        let acc = stream(&sample, &config, n0, batch);
        let streamed = acc.finalize().unwrap();
        let whole = refit(&acc, sample.x.view(), sample.y.view());
        prop_assert!(max_gap(&streamed.s, &whole.s) < 1e-10);
        prop_assert_eq!(streamed.bin_counts, whole.bin_counts);
    }

    #[test]
    fn result_invariants(seed in any::<u64>(), m in 2usize..40) {
        let sample = sample(&ModelSpec::polynomial_exponential(), 2_000, seed);
        let r = stream(&sample, &PartitionConfig::new(Scheme::Quantile, m), 200, 333)
            .finalize()
            .unwrap();
        for i in 0..r.dim() {
            prop_assert!(r.s[i] <= 1.0);
            prop_assert!(r.ev[i] >= 0.0);
            prop_assert_eq!(r.bin_counts[i].iter().sum::<u64>(), r.n);
            prop_assert_eq!(r.bin_counts[i].len(), r.bins[i]);
        }
    }

    #[test]
    fn shard_merge_matches_sequential(seed in any::<u64>(), cut in 1usize..1_999) {
        let sample = sample(&ModelSpec::polynomial_normal(), 2_000, seed);
        let config = PartitionConfig::new(Scheme::Equidistant, 10);
        let base = SobolAccumulator::initialize(
            sample.x.slice(s![..100, ..]),
            sample.y.slice(s![..100]),
            &config,
        )
        .unwrap();
        let mut a = SobolAccumulator::with_partitions(base.partitions().to_vec()).unwrap();
        let mut b = a.clone();
        a.ingest_batch(sample.x.slice(s![..cut, ..]), sample.y.slice(s![..cut])).unwrap();
        b.ingest_batch(sample.x.slice(s![cut.., ..]), sample.y.slice(s![cut..])).unwrap();
        a.merge(&b).unwrap();
        let whole = refit(&base, sample.x.view(), sample.y.view());
        prop_assert!(max_gap(&a.finalize().unwrap().s, &whole.s) < 1e-10);
    }
}

#[test]
fn snapshots_refine_along_the_stream() {
    let sample = sample(&ModelSpec::polynomial_uniform(), 20_000, 3);
    let config = PartitionConfig::new(Scheme::Equidistant, 20);
    let mut acc = SobolAccumulator::initialize(
        sample.x.slice(s![..500, ..]),
        sample.y.slice(s![..500]),
        &config,
    )
    .unwrap();
    for (start, end) in [(500, 7_000), (7_000, 13_000), (13_000, 20_000)] {
        acc.ingest_batch(sample.x.slice(s![start..end, ..]), sample.y.slice(s![start..end]))
            .unwrap();
        let snap = acc.finalize().unwrap();
        let fresh = refit(&acc, sample.x.slice(s![..end, ..]), sample.y.slice(s![..end]));
        assert_eq!(snap.n, end as u64);
        assert!(max_gap(&snap.s, &fresh.s) < 1e-10);
    }
}

#[test]
fn snapshot_resume_is_exact() {
    let sample = sample(&ModelSpec::ishigami(), 10_000, 8);
    let config = PartitionConfig::new(Scheme::Kde, 16);
    let mut straight = stream(&sample, &config, 1_000, 4_000);
    let mut resumed = SobolAccumulator::from_snapshot_json(&straight.to_snapshot_json()).unwrap();
    assert_eq!(resumed, straight);
    let more = generate(&ModelSpec::ishigami(), 10_000, 2_000, 8).unwrap();
    straight.ingest_batch(more.x.view(), more.y.view()).unwrap();
    resumed.ingest_batch(more.x.view(), more.y.view()).unwrap();
    assert_eq!(resumed.finalize().unwrap(), straight.finalize().unwrap());
}

#[test]
fn dummy_input_is_null_on_average() {
    let spec = ModelSpec::polynomial_normal();
    let r = 100;
    let s3: Vec<f64> = (0..r)
        .map(|k| {
            let sample = sample(&spec, 10_000, derive_seed(77, k));
            stream(&sample, &PartitionConfig::new(Scheme::Equidistant, 20), 1_000, 1_000)
                .finalize()
                .unwrap()
                .s[2]
        })
        .collect();
    let (mean, std) = mean_std(&s3);
    assert!(mean.abs() <= 4.0 * std / (r as f64).sqrt(), "mean {mean}, std {std}");
}

#[test]
fn uniform_input_schemes_agree() {
    let spec = ModelSpec::polynomial_uniform();
    let r = 30;
    let mut q = Vec::new();
    let mut e = Vec::new();
    for k in 0..r {
        let sample = sample(&spec, 20_000, derive_seed(5, k));
        q.push(stream(&sample, &PartitionConfig::new(Scheme::Quantile, 30), 3_000, 5_000).finalize().unwrap().s[0]);
        e.push(stream(&sample, &PartitionConfig::new(Scheme::Equidistant, 30), 3_000, 5_000).finalize().unwrap().s[0]);
    }
    let (mq, sq) = mean_std(&q);
    let (me, se) = mean_std(&e);
    let noise = 4.0 * sq.max(se);
    assert!((mq - me).abs() < noise, "{mq} vs {me} (noise {noise})");
}

#[test]
fn accumulator_size_does_not_grow_with_samples() {
    let spec = ModelSpec::SobolG { d: 200 };
    let config = PartitionConfig::new(Scheme::Equidistant, 50);
    let small = stream(&sample(&spec, 2_000, 1), &config, 1_000, 500);
    let large = stream(&sample(&spec, 40_000, 1), &config, 1_000, 500);
    assert_eq!(small.moment_cells(), 200 * 50 + 1);
    assert_eq!(small.moment_cells(), large.moment_cells());
    assert_eq!(small.heap_bytes(), large.heap_bytes());
    assert_eq!(large.n_seen(), 40_000);
}

#[test]
fn deterministic_input_function_approaches_one() {
    // y = x0 exactly, with one sample per bin in the limit.
    let sample = sample(&ModelSpec::SobolG { d: 1 }, 4_000, 2);
    let y = sample.x.column(0).to_owned();
    let acc = SobolAccumulator::initialize(
        sample.x.view(),
        y.view(),
        &PartitionConfig::new(Scheme::Quantile, 2_000),
    )
    .unwrap();
    assert!(acc.finalize().unwrap().s[0] > 0.999);
}
