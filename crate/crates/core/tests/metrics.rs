mod common;

use common::{clip, dft_magnitudes, sine};
use naseval::audio::{stft, StftParams, Window};
use naseval::metrics::ndb::{kmeans, two_proportion_z_test};
use naseval::metrics::{
    fad, fit_gaussian, fit_ndb, frechet_distance, inception_score, kid, mse_mae,
    multi_scale_distance, EmbeddingSet, GaussianStats, NdbModel, ProbabilityMatrix,
};
use naseval::metrics::ndb_score;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn gaussian_set(rng: &mut ChaCha8Rng, n: usize, means: &[f64], sds: &[f64]) -> EmbeddingSet {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            means
                .iter()
                .zip(sds)
                .map(|(&m, &s)| Normal::new(m, s).unwrap().sample(rng))
                .collect()
        })
        .collect();
    EmbeddingSet::from_rows(&rows, "g").unwrap()
}

/// Brute-force multi-scale term for one FFT size: direct DFT, periodic Hann,
/// hop size/4, trailing partial frame zero-padded.
fn multi_scale_oracle(x: &[f64], y: &[f64], size: usize) -> f64 {
    let hop = size / 4;
    let frames = if x.len() <= size { 1 } else { 1 + (x.len() - size).div_ceil(hop) };
    let w: Vec<f64> = (0..size)
        .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / size as f64).cos()))
        .collect();
    let spectrum = |s: &[f64], f: usize| {
        let frame: Vec<f64> = (0..size)
            .map(|t| s.get(f * hop + t).copied().unwrap_or(0.0) * w[t])
            .collect();
        dft_magnitudes(&frame)
    };
    let (mut lin, mut log, mut count) = (0.0, 0.0, 0.0);
    for f in 0..frames {
        for (a, b) in spectrum(x, f).iter().zip(spectrum(y, f)) {
            lin += (a - b).abs();
            log += ((a + 1e-7).ln() - (b + 1e-7).ln()).abs();
            count += 1.0;
        }
    }
    lin / count + log / count
}

#[test]
fn multi_scale_half_amplitude_matches_oracle() {
    let x = sine(440.0, 1.0, 1500);
    let y = sine(440.0, 0.5, 1500);
    let got = multi_scale_distance(&clip(x.clone()), &clip(y.clone()), &[256]).unwrap();
    let want = multi_scale_oracle(&x, &y, 256);
    assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
}

#[test]
fn multi_scale_sums_sizes() {
    let x = common::tone(57, 3000);
    let y: Vec<f64> = x.iter().zip(common::noise(3, 0.01, 3000)).map(|(a, b)| a + b).collect();
    let sizes = [512, 128, 64];
    let got = multi_scale_distance(&clip(x.clone()), &clip(y.clone()), &sizes).unwrap();
    let want: f64 = sizes.iter().map(|&s| multi_scale_oracle(&x, &y, s)).sum();
    assert!((got - want).abs() <= 1e-6 * want);
    assert_eq!(multi_scale_distance(&clip(vec![0.0; 900]), &clip(vec![0.0; 900]), &sizes).unwrap(), 0.0);
    assert!(multi_scale_distance(&clip(x.clone()), &clip(x[..2000].to_vec()), &sizes).is_err());
    assert!(multi_scale_distance(&clip(x.clone()), &clip(y), &[]).is_err());
}

#[test]
fn spectrogram_errors_are_symmetric() {
    let p = StftParams::default();
    let a = stft(&clip(common::tone(60, 4000)), p).unwrap();
    let b = stft(&clip(common::tone(62, 4000)), p).unwrap();
    assert_eq!(mse_mae(&a, &b).unwrap(), mse_mae(&b, &a).unwrap());
    let short = stft(&clip(common::tone(62, 2000)), p).unwrap();
    assert!(mse_mae(&a, &short).is_err());
    let other = stft(&clip(common::tone(62, 4000)), StftParams::new(512, 256, Window::Hann).unwrap()).unwrap();
    assert!(mse_mae(&a, &other).is_err());
}

/// Unbiased MMD² written from the definition, kernel matrices in full.
fn kid_oracle(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let d = a[0].len() as f64;
    let k = |x: &[f64], y: &[f64]| {
        let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
        (1.0 + dot / d).powi(3)
    };
    let within = |s: &[Vec<f64>]| {
        let n = s.len();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    total += k(&s[i], &s[j]);
                }
            }
        }
        total / (n * (n - 1)) as f64
    };
    let mut cross = 0.0;
    for x in a {
        for y in b {
            cross += k(x, y);
        }
    }
    within(a) + within(b) - 2.0 * cross / (a.len() * b.len()) as f64
}

fn rows_of(set: &EmbeddingSet) -> Vec<Vec<f64>> {
    set.iter_rows().map(<[f64]>::to_vec).collect()
}

#[test]
fn kid_matches_oracle_and_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a = gaussian_set(&mut rng, 40, &[0.0, 1.0, -1.0], &[1.0, 0.5, 2.0]);
    let b = gaussian_set(&mut rng, 30, &[0.5, 1.0, 0.0], &[1.0, 1.0, 1.0]);
    let got = kid(&a, &b).unwrap();
    let want = kid_oracle(&rows_of(&a), &rows_of(&b));
    assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0));
    assert!((got - kid(&b, &a).unwrap()).abs() <= 1e-9 * got.abs().max(1.0));
}

#[test]
fn kid_same_distribution_near_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = gaussian_set(&mut rng, 1000, &[0.0; 16], &[1.0; 16]);
    let b = gaussian_set(&mut rng, 1000, &[0.0; 16], &[1.0; 16]);
    assert!(kid(&a, &b).unwrap().abs() < 0.01);
}

fn covariance_2d(rows: &[Vec<f64>]) -> ([f64; 2], [[f64; 2]; 2]) {
    let n = rows.len() as f64;
    let mean = [
        rows.iter().map(|r| r[0]).sum::<f64>() / n,
        rows.iter().map(|r| r[1]).sum::<f64>() / n,
    ];
    let mut c = [[0.0; 2]; 2];
    for r in rows {
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / (n - 1.0);
            }
        }
    }
    (mean, c)
}

/// For 2×2 PSD `A`, `B`: `tr √(A^½ B A^½) = √(tr(AB) + 2√(det A det B))`.
fn fad_oracle_2d(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let (ma, ca) = covariance_2d(a);
    let (mb, cb) = covariance_2d(b);
    let det = |c: [[f64; 2]; 2]| c[0][0] * c[1][1] - c[0][1] * c[1][0];
    let tr_ab = ca[0][0] * cb[0][0] + ca[0][1] * cb[1][0] + ca[1][0] * cb[0][1] + ca[1][1] * cb[1][1];
    let cross = (tr_ab + 2.0 * (det(ca) * det(cb)).sqrt()).sqrt();
    let mean_term = (ma[0] - mb[0]).powi(2) + (ma[1] - mb[1]).powi(2);
    mean_term + ca[0][0] + ca[1][1] + cb[0][0] + cb[1][1] - 2.0 * cross
}

#[test]
fn fad_matches_closed_form_in_two_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mix = |rng: &mut ChaCha8Rng, n: usize, shift: f64| -> EmbeddingSet {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let (u, v): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                vec![u + 0.3 * v + shift, 2.0 * v - 0.5 * u]
            })
            .collect();
        EmbeddingSet::from_rows(&rows, "m").unwrap()
    };
    let a = mix(&mut rng, 300, 0.0);
    let b = mix(&mut rng, 200, 0.7);
    let got = fad(&a, &b).unwrap();
    let want = fad_oracle_2d(&rows_of(&a), &rows_of(&b));
    assert!((got - want).abs() < 1e-9, "{got} vs {want}");
}

#[test]
fn frechet_closed_forms() {
    let g = |m: f64, v: f64| GaussianStats::new(vec![m], vec![vec![v]], 2).unwrap();
    assert!((frechet_distance(&g(0.0, 1.0), &g(1.0, 1.0)).unwrap() - 1.0).abs() < 1e-9);
    assert!((frechet_distance(&g(0.0, 1.0), &g(0.0, 4.0)).unwrap() - 1.0).abs() < 1e-9);
    assert!(frechet_distance(&g(0.3, 2.0), &g(0.3, 2.0)).unwrap().abs() < 1e-9);

    let fit = fit_gaussian(&EmbeddingSet::from_rows(&[vec![0.0], vec![2.0]], "x").unwrap()).unwrap();
    assert_eq!(fit.mean(), &[1.0]);
    assert!((fit.covariance()[(0, 0)] - 2.0).abs() < 1e-12);
    assert!(fit_gaussian(&EmbeddingSet::from_rows(&[vec![1.0]], "x").unwrap()).is_err());
}

#[test]
fn fad_scales_with_square_of_factor() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let a = gaussian_set(&mut rng, 200, &[0.0, 0.0, 1.0], &[1.0, 2.0, 0.5]);
    let b = gaussian_set(&mut rng, 200, &[1.0, -1.0, 1.0], &[1.5, 1.0, 0.5]);
    let base = fad(&a, &b).unwrap();
    for c in [-3.0, 0.5, 10.0] {
        let scaled = fad(&a.scaled(c).unwrap(), &b.scaled(c).unwrap()).unwrap();
        assert!((scaled - c * c * base).abs() < 1e-8 * scaled.max(1.0));
    }

    // 1-D: mean term alone scales by c²
    let g = |m: f64| GaussianStats::new(vec![m], vec![vec![1.0]], 2).unwrap();
    for c in [2.0, 7.0] {
        assert!((frechet_distance(&g(0.0), &g(c)).unwrap() - c * c).abs() < 1e-9);
    }
}

#[test]
fn frechet_bounded_below_by_mean_term() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..10 {
        let a = gaussian_set(&mut rng, 60, &[0.0, 1.0, 2.0, 0.0], &[1.0, 0.1, 3.0, 1.0]);
        let b = gaussian_set(&mut rng, 80, &[0.5, 1.0, 0.0, 0.2], &[0.7, 1.0, 1.0, 2.0]);
        let (ga, gb) = (fit_gaussian(&a).unwrap(), fit_gaussian(&b).unwrap());
        let mean_term: f64 = ga.mean().iter().zip(gb.mean()).map(|(x, y)| (x - y).powi(2)).sum();
        let d = frechet_distance(&ga, &gb).unwrap();
        assert!(d >= mean_term - 1e-12);
        assert!((d - frechet_distance(&gb, &ga).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn ndb_two_clusters_against_nearest_centroid() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut rows = Vec::new();
    for centre in [[-10.0, 0.0], [10.0, 5.0]] {
        for _ in 0..50 {
            rows.push(vec![centre[0] + rng.random_range(-1.0..1.0), centre[1] + rng.random_range(-1.0..1.0)]);
        }
    }
    let train = EmbeddingSet::from_rows(&rows, "train").unwrap();
    let model = fit_ndb(&train, 2, 0.05, 9).unwrap();
    assert_eq!(model.train_bin_proportions, vec![0.5, 0.5]);

    // oracle: each point goes to the centroid at least distance
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let mut counts = [0usize; 2];
    for r in &rows {
        let c = if dist(r, &model.centroids[0]) <= dist(r, &model.centroids[1]) { 0 } else { 1 };
        counts[c] += 1;
        // both points of a cluster agree
        let same = rows.iter().filter(|o| (o[0] > 0.0) == (r[0] > 0.0));
        for o in same {
            assert_eq!(model.nearest(o), model.nearest(r));
        }
    }
    assert_eq!(counts, [50, 50]);

    let score = ndb_score(&model, &train).unwrap();
    assert_eq!(score.ndb, 0);
}

#[test]
fn ndb_shifted_example() {
    let model = NdbModel::new(vec![vec![0.0], vec![10.0]], vec![0.5, 0.5], 1000, 0.05).unwrap();
    let mut rows = vec![vec![0.1]; 900];
    rows.extend(vec![vec![9.9]; 100]);
    let score = ndb_score(&model, &EmbeddingSet::from_rows(&rows, "t").unwrap()).unwrap();
    assert_eq!(score.ndb, 2);
    assert_eq!(score.ratio, 1.0);
    // pooled z from the definition: p̂ = 0.7, se = √(0.7·0.3·(2/1000))
    let z = (0.5 - 0.9) / (0.7f64 * 0.3 * 0.002).sqrt();
    assert!((score.per_bin[0].z - z).abs() < 1e-9);
    assert!(z.abs() > 19.0);

    let even = ndb_score(&model, &EmbeddingSet::from_rows(&[vec![0.0], vec![10.0]], "t").unwrap()).unwrap();
    assert_eq!(even.ndb, 0);

    let single = NdbModel::new(vec![vec![0.0]], vec![1.0], 10, 0.05).unwrap();
    let s = ndb_score(&single, &EmbeddingSet::from_rows(&rows, "t").unwrap()).unwrap();
    assert_eq!((s.ndb, s.ratio), (0, 0.0));
}

#[test]
fn ndb_errors_and_degenerate_inputs() {
    let two = EmbeddingSet::from_rows(&[vec![0.0], vec![1.0]], "t").unwrap();
    assert!(fit_ndb(&two, 3, 0.05, 1).is_err());
    let same = EmbeddingSet::from_rows(&vec![vec![4.0, 4.0]; 10], "t").unwrap();
    let err = fit_ndb(&same, 2, 0.05, 1).unwrap_err();
    assert!(err.to_string().contains("insufficient diversity"), "{err}");

    let one = fit_ndb(&two, 1, 0.05, 1).unwrap();
    assert_eq!(one.centroids, vec![vec![0.5]]);
    assert_eq!(one.train_bin_proportions, vec![1.0]);

    let wide = EmbeddingSet::from_rows(&[vec![0.0, 1.0]], "t").unwrap();
    assert!(ndb_score(&one, &wide).is_err());
}

#[test]
fn ndb_is_deterministic_and_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let train = gaussian_set(&mut rng, 400, &[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]);
    let test = gaussian_set(&mut rng, 300, &[0.3, 0.0, 0.0], &[1.0, 1.0, 1.0]);
    let a = fit_ndb(&train, 8, 0.05, 123).unwrap();
    let b = fit_ndb(&train, 8, 0.05, 123).unwrap();
    assert_eq!(a, b);
    assert_eq!(kmeans(&train, 8, 123).unwrap(), kmeans(&train, 8, 123).unwrap());

    let score = ndb_score(&a, &test).unwrap();
    assert_eq!(score.ratio, score.ndb as f64 / 8.0);
    for bin in &score.per_bin {
        assert!((0.0..=1.0).contains(&bin.p_value));
        let (_, p) = two_proportion_z_test(bin.train_proportion, 400, bin.test_proportion, 300);
        assert_eq!(p, bin.p_value);
    }
}

#[test]
fn inception_examples() {
    let m = |rows: &[Vec<f64>]| ProbabilityMatrix::from_rows(rows).unwrap();
    assert!((inception_score(&m(&vec![vec![0.5, 0.5]; 4])) - 1.0).abs() < 1e-12);
    assert!((inception_score(&m(&[vec![1.0, 0.0], vec![0.0, 1.0]])) - 2.0).abs() < 1e-12);
    let hand = (0.8 * 1.6f64.ln() + 0.2 * 0.4f64.ln()).exp();
    assert!((inception_score(&m(&[vec![0.8, 0.2], vec![0.2, 0.8]])) - hand).abs() < 1e-12);
    assert!(ProbabilityMatrix::from_rows(&[vec![0.7, 0.7]]).is_err());
}

fn stochastic_rows() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..8).prop_flat_map(|c| {
        prop::collection::vec(prop::collection::vec(0.0f64..1.0, c), 1..30).prop_map(|rows| {
            rows.into_iter()
                .map(|r| {
                    let r: Vec<f64> = r.iter().map(|v| v + 1e-3).collect();
                    let s: f64 = r.iter().sum();
                    r.iter().map(|v| v / s).collect()
                })
                .collect()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inception_bounded_and_order_free(rows in stochastic_rows(), rot in 0usize..30) {
        let classes = rows[0].len() as f64;
        let score = inception_score(&ProbabilityMatrix::from_rows(&rows).unwrap());
        prop_assert!((1.0..=classes).contains(&score));
        let mut shuffled = rows.clone();
        shuffled.rotate_left(rot % rows.len());
        shuffled.reverse();
        let again = inception_score(&ProbabilityMatrix::from_rows(&shuffled).unwrap());
        prop_assert!((score - again).abs() <= 1e-12 * score);
    }
}
