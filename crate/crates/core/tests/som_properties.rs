use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use visrisk_core::som::{self, masked_distance, neighborhood, TrainConfig};
use visrisk_core::{DataCube, Neighborhood, Sample, SomModel, SotmConfig, TimePoint};

fn names(n: usize) -> Vec<String> {
    (0..n).map(|k| format!("x{k}")).collect()
}

fn random_sample(rng: &mut ChaCha8Rng, dim: usize) -> Sample<f64> {
    let mut observed: Vec<bool> = (0..dim).map(|_| rng.random_bool(0.7)).collect();
    let keep = rng.random_range(0..dim);
    observed[keep] = true;
    Sample {
        values: (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect(),
        observed,
    }
}

proptest! {
    #[test]
    fn full_mask_distance_is_euclidean(
        pair in (1usize..8).prop_flat_map(|n| (
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(-10.0f64..10.0, n),
        ))
    ) {
        let (x, m) = pair;
        let d = masked_distance(&Sample::complete(x.clone()), &m).unwrap();
        let e = x.iter().zip(&m).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        prop_assert!((d - e).abs() <= 1e-12 * (1.0 + e));
    }

    #[test]
    fn neighborhood_strictly_decreasing(a in 0.0f64..20.0, b in 0.0f64..20.0, sigma in 0.1f64..10.0) {
        prop_assume!(a < b);
        let (ha, hb) = (neighborhood(a, sigma), neighborhood(b, sigma));
        prop_assert!(ha > hb || hb == 0.0);
        prop_assert!(ha <= 1.0);
        if a > 0.0 { prop_assert!(ha < 1.0); }
    }
}

#[test]
fn bmu_matches_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let dim = rng.random_range(1..=10);
        let (w, h) = (rng.random_range(1..=8), rng.random_range(1..=8));
        // duplicated units exercise the lowest-index tie-break
        let mut refs: Vec<Vec<f64>> = (0..w * h)
            .map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let dup = rng.random_range(0..w * h);
        refs.push(refs[dup].clone());
        refs.truncate(w * h);
        let model = SomModel::from_refs(w, h, names(dim), refs.clone(), TrainConfig::default()).unwrap();
        let x = random_sample(&mut rng, dim);
        let mut best = (0, f64::INFINITY);
        for (i, m) in refs.iter().enumerate() {
            let d = masked_distance(&x, m).unwrap();
            if d < best.1 {
                best = (i, d);
            }
        }
        assert_eq!(model.find_bmu(&x).unwrap().unit, best.0);
    }
}

#[test]
fn hard_epoch_is_lloyd_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let dim = rng.random_range(1..=6);
        let (w, h) = (rng.random_range(1..=5), rng.random_range(1..=4));
        let refs: Vec<Vec<f64>> = (0..w * h)
            .map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let data: Vec<Sample<f64>> = (0..rng.random_range(1..60))
            .map(|_| random_sample(&mut rng, dim))
            .collect();
        let model = SomModel::from_refs(w, h, names(dim), refs.clone(), TrainConfig::default()).unwrap();
        let next = model.batch_epoch(&data, Neighborhood::Hard).unwrap();
        for (i, r) in refs.iter().enumerate() {
            for k in 0..dim {
                let members: Vec<f64> = data
                    .iter()
                    .filter(|x| x.observed[k] && model.find_bmu(x).unwrap().unit == i)
                    .map(|x| x.values[k])
                    .collect();
                let expected = if members.is_empty() {
                    r[k]
                } else {
                    members.iter().sum::<f64>() / members.len() as f64
                };
                assert!((next.refs()[i][k] - expected).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn training_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data: Vec<Sample<f64>> = (0..80)
        .map(|_| Sample::complete((0..4).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect();
    let a = som::train(&data, 6, 4, names(4), TrainConfig::default()).unwrap();
    let b = som::train(&data, 6, 4, names(4), TrainConfig::default()).unwrap();
    assert_eq!(a, b);
    let qe_init = som::pca_init(&data, 6, 4, names(4), TrainConfig::default())
        .unwrap()
        .quantization_error(&data)
        .unwrap();
    assert!(a.quantization_error(&data).unwrap() <= qe_init);
}

fn drifting_cube(slices: usize, delta: f64) -> DataCube {
    let entities: Vec<String> = (0..12).map(|e| format!("E{e:02}")).collect();
    let times: Vec<TimePoint> = (0..slices)
        .map(|t| TimePoint::parse(&format!("{}Q1", 2000 + t)).unwrap())
        .collect();
    let mut values = Vec::new();
    for e in 0..12 {
        for t in 0..slices {
            let base = if e < 6 { 0.0 } else { 10.0 };
            let jitter = (e % 6) as f64 * 0.1;
            values.push(base + jitter + delta * t as f64);
            values.push(base - jitter + delta * t as f64);
        }
    }
    let n = values.len();
    DataCube::new(entities, times, names(2), values, vec![true; n]).unwrap()
}

#[test]
fn sotm_follows_drift_and_keeps_order() {
    let delta = 1.5;
    let model = visrisk_core::sotm::train_sotm(
        &drifting_cube(5, delta),
        SotmConfig { units: 4, sigma: 0.5, epochs_per_slice: 20 },
    )
    .unwrap();
    let s = model.slices();
    for t in 1..s.len() {
        for i in 0..4 {
            for k in 0..2 {
                assert!((s[t][i][k] - s[t - 1][i][k] - delta).abs() < 0.05);
            }
        }
        let first: Vec<f64> = s[t].iter().map(|v| v[0]).collect();
        let prev: Vec<f64> = s[t - 1].iter().map(|v| v[0]).collect();
        let rising = |v: &[f64]| v.windows(2).all(|w| w[0] <= w[1]);
        assert_eq!(rising(&first), rising(&prev));
    }
    let planes = model.component_plane_t(0).unwrap();
    for i in 0..4 {
        assert!((1..planes.len()).all(|t| planes[t][i] > planes[t - 1][i]));
    }
}

#[test]
fn sotm_stationary_cube_gives_identical_slices() {
    let model = visrisk_core::sotm::train_sotm(&drifting_cube(6, 0.0), SotmConfig::default()).unwrap();
    let first = &model.slices()[0];
    for slice in model.slices() {
        for (a, b) in slice.iter().zip(first) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-6);
            }
        }
    }
    let coloring = model.profile_coloring();
    for row in &coloring {
        for (a, b) in row.iter().zip(&coloring[0]) {
            assert!((a - b).abs() <= 1e-6);
        }
    }
}
