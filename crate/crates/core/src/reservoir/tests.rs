use rand::Rng as _;

use super::*;
use crate::dataset::{FeatureSchema, FlowDataset, FlowRecord, NormStats};
use crate::matrix::Matrix;
use crate::seed::rng;

fn scalar_model(a: f64, w_in: f64, w_rec: f64, act: Activation) -> ReservoirModel {
    let mut g = ReservoirGenome::from_sizes(vec![1], 0);
    g.leak_rates = vec![a];
    g.activations = vec![act];
    let w = ReservoirWeights {
        input_matrix: Matrix::from_row_major(1, 1, vec![w_in]).unwrap(),
        recurrent: vec![Matrix::from_row_major(1, 1, vec![w_rec]).unwrap()],
        inter_layer: vec![],
        skips: vec![],
        biases: vec![vec![0.0]],
    };
    ReservoirModel::new(g, w, EncodeMode::SingleShot).unwrap()
}

fn zero_biases(m: &mut ReservoirModel) {
    for b in &mut m.weights.biases {
        b.iter_mut().for_each(|x| *x = 0.0);
    }
}

fn random_vec(n: usize, r: &mut crate::seed::Rng) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

#[test]
fn zero_is_a_fixed_point() {
    let mut m = ReservoirModel::build(ReservoirGenome::from_sizes(vec![5, 4], 2), 3, EncodeMode::SingleShot).unwrap();
    zero_biases(&mut m);
    let mut s = ReservoirState::zeros(&m.genome);
    m.advance(&mut s, &[0.0; 3]).unwrap();
    assert!(s.concat().iter().all(|&x| x == 0.0));
}

#[test]
fn full_leak_is_pure_activation() {
    let m = scalar_model(1.0, 0.7, 0.3, Activation::Tanh);
    let mut s = ReservoirState { layers: vec![vec![0.4]] };
    m.advance(&mut s, &[2.0]).unwrap();
    assert_eq!(s.layers[0][0], (0.7f64 * 2.0 + 0.3 * 0.4).tanh());
}

#[test]
fn scalar_leaky_update_by_hand() {
    let m = scalar_model(0.5, 1.0, 0.5, Activation::Tanh);
    let mut s = ReservoirState { layers: vec![vec![0.2]] };
    m.advance(&mut s, &[1.0]).unwrap();
    let expected = 0.1 + 0.5 * 1.1f64.tanh();
    assert!((s.layers[0][0] - expected).abs() < 1e-15);
}

#[test]
fn upper_layer_reads_current_step_of_lower_layer() {
    // two 1-unit layers, identity activations, no leak
    let mut g = ReservoirGenome::from_sizes(vec![1, 1], 0);
    g.leak_rates = vec![1.0, 1.0];
    g.activations = vec![Activation::Identity; 2];
    let w = ReservoirWeights {
        input_matrix: Matrix::from_row_major(1, 1, vec![2.0]).unwrap(),
        recurrent: vec![Matrix::zeros(1, 1), Matrix::zeros(1, 1)],
        inter_layer: vec![Matrix::from_row_major(1, 1, vec![3.0]).unwrap()],
        skips: vec![],
        biases: vec![vec![0.0], vec![0.0]],
    };
    let m = ReservoirModel::new(g, w, EncodeMode::SingleShot).unwrap();
    let mut s = ReservoirState::zeros(&m.genome);
    m.advance(&mut s, &[1.0]).unwrap();
    // layer 1 sees x0(t) = 2, not x0(t-1) = 0
    assert_eq!(s.layers, vec![vec![2.0], vec![6.0]]);
}

#[test]
fn skip_connections_add_to_the_drive() {
    let mut g = ReservoirGenome::from_sizes(vec![1, 1, 1], 0);
    g.leak_rates = vec![1.0; 3];
    g.activations = vec![Activation::Identity; 3];
    g.inter_layer_skips.insert((0, 2));
    let one = || Matrix::from_row_major(1, 1, vec![1.0]).unwrap();
    let w = ReservoirWeights {
        input_matrix: one(),
        recurrent: vec![Matrix::zeros(1, 1); 3],
        inter_layer: vec![one(), one()],
        skips: vec![SkipWeights { from: 0, to: 2, matrix: Matrix::from_row_major(1, 1, vec![10.0]).unwrap() }],
        biases: vec![vec![0.0]; 3],
    };
    let m = ReservoirModel::new(g, w, EncodeMode::SingleShot).unwrap();
    assert_eq!(m.encode(&[1.0], EncodeMode::SingleShot).unwrap(), vec![1.0, 1.0, 11.0]);
}

#[test]
fn dimension_checks() {
    let m = ReservoirModel::build(ReservoirGenome::from_sizes(vec![3], 1), 2, EncodeMode::SingleShot).unwrap();
    assert!(matches!(m.encode(&[1.0], EncodeMode::SingleShot), Err(ReservoirError::DimensionMismatch { .. })));
    let mut bad = ReservoirState { layers: vec![vec![0.0; 2]] };
    assert!(matches!(m.advance(&mut bad, &[0.0, 0.0]), Err(ReservoirError::StateMismatch)));
    assert!(matches!(m.predict_normalized(&[0.0, 0.0]), Err(ReservoirError::UntrainedModel)));
}

#[test]
fn single_shot_identity_map() {
    let d = 4;
    let mut g = ReservoirGenome::from_sizes(vec![d, 3], 0);
    g.activations = vec![Activation::Identity, Activation::Tanh];
    let mut w = instantiate(&g, d).unwrap();
    w.input_matrix = Matrix::identity(d);
    let mut m = ReservoirModel::new(g, w, EncodeMode::SingleShot).unwrap();
    zero_biases(&mut m);
    let flow = [0.3, -1.2, 2.5, 0.0];
    let h = m.encode(&flow, EncodeMode::SingleShot).unwrap();
    assert_eq!(&h[..d], &flow);
    assert_eq!(h.len(), 7);
}

#[test]
fn one_step_sequence_is_one_advance() {
    let m = ReservoirModel::build(ReservoirGenome::from_sizes(vec![6, 5], 8), 3, EncodeMode::SingleShot).unwrap();
    let u = [0.5, -0.2, 1.0];
    let mut s = ReservoirState::zeros(&m.genome);
    m.advance(&mut s, &u).unwrap();
    assert_eq!(m.encode(&u, EncodeMode::Sequence { steps: 1 }).unwrap(), s.concat());
}

#[test]
fn sequence_encoding_washes_out_initial_state() {
    // the 50-step bound holds for this instance; convergence speed varies by seed
    let g = ReservoirGenome::from_sizes(vec![13, 11, 9], 0);
    let m = ReservoirModel::build(g, 6, EncodeMode::Sequence { steps: 50 }).unwrap();
    let mut r = rng(7);
    let flow = random_vec(6, &mut r);
    let init = |r: &mut crate::seed::Rng| ReservoirState {
        layers: m.genome.layer_sizes.iter().map(|&n| random_vec(n, r)).collect(),
    };
    let h1 = m.encode_from(&flow, 50, init(&mut r)).unwrap();
    let h2 = m.encode_from(&flow, 50, init(&mut r)).unwrap();
    let gap = h1.iter().zip(&h2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-6, "gap {gap}");
}

#[test]
fn echo_state_property_over_seeds() {
    for seed in 0..20 {
        let g = ReservoirGenome::from_sizes(vec![13, 11, 9], seed);
        let m = ReservoirModel::build(g, 8, EncodeMode::SingleShot).unwrap();
        let mut r = rng(1000 + seed);
        let mut a = ReservoirState { layers: m.genome.layer_sizes.iter().map(|&n| random_vec(n, &mut r)).collect() };
        let mut b = ReservoirState { layers: m.genome.layer_sizes.iter().map(|&n| random_vec(n, &mut r)).collect() };
        for _ in 0..100 {
            let u = random_vec(8, &mut r);
            m.advance(&mut a, &u).unwrap();
            m.advance(&mut b, &u).unwrap();
        }
        let gap = a.concat().iter().zip(b.concat()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-6, "seed {seed}: gap {gap}");
    }
}

#[test]
fn linear_reservoir_superposition() {
    let mut g = ReservoirGenome::from_sizes(vec![7, 5], 12);
    g.activations = vec![Activation::Identity; 2];
    g.leak_rates = vec![1.0; 2];
    let mut m = ReservoirModel::build(g, 4, EncodeMode::Sequence { steps: 10 }).unwrap();
    zero_biases(&mut m);
    let u = [0.4, -0.3, 0.9, 0.1];
    let mode = EncodeMode::Sequence { steps: 10 };
    let h = m.encode(&u, mode).unwrap();
    for alpha in [-2.0, 0.5, 3.0] {
        let scaled: Vec<f64> = u.iter().map(|x| alpha * x).collect();
        let hs = m.encode(&scaled, mode).unwrap();
        for (a, b) in hs.iter().zip(&h) {
            assert!((a - alpha * b).abs() < 1e-9);
        }
    }
}

#[test]
fn encoding_is_deterministic() {
    let g = ReservoirGenome::from_sizes(vec![9, 4], 77);
    let a = ReservoirModel::build(g.clone(), 5, EncodeMode::SingleShot).unwrap();
    let b = ReservoirModel::build(g, 5, EncodeMode::SingleShot).unwrap();
    let flow = [0.1, 0.2, -0.3, 0.4, 2.0];
    for mode in [EncodeMode::SingleShot, EncodeMode::Sequence { steps: 7 }] {
        assert_eq!(a.encode(&flow, mode).unwrap(), b.encode(&flow, mode).unwrap());
    }
}

/// Solves `a x = b` (b with several columns) by Gauss-Jordan elimination with
/// partial pivoting. Independent of nalgebra.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                for k in 0..b[row].len() {
                    b[row][k] -= f * b[col][k];
                }
            }
        }
    }
    (0..n).map(|i| b[i].iter().map(|v| v / a[i][i]).collect()).collect()
}

fn normal_equations(h: &Matrix, labels: &[usize], k: usize, c: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (n, m) = (h.rows(), h.cols());
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![vec![0.0; k]; m];
    for i in 0..m {
        for j in 0..m {
            a[i][j] = (0..n).map(|r| h.get(r, i) * h.get(r, j)).sum::<f64>() + if i == j { 1.0 / c } else { 0.0 };
        }
        for (r, &l) in labels.iter().enumerate() {
            b[i][l] += h.get(r, i);
        }
    }
    (a, b)
}

fn random_system(seed: u64, n: usize, m: usize, k: usize) -> (Matrix, Vec<usize>) {
    let mut r = rng(seed);
    let h = Matrix::from_row_major(n, m, random_vec(n * m, &mut r)).unwrap();
    let labels = (0..n).map(|_| r.random_range(0..k)).collect();
    (h, labels)
}

#[test]
fn ridge_matches_gaussian_elimination_oracle() {
    for seed in 0..10 {
        let (h, labels) = random_system(seed, 10, 5, 3);
        let fit = fit_readout(&h, &labels, 3, 10.0, ReadoutMode::Ridge).unwrap();
        let (a, b) = normal_equations(&h, &labels, 3, 10.0);
        let oracle = gauss_solve(a, b);
        for i in 0..5 {
            for j in 0..3 {
                assert!((fit.beta.get(i, j) - oracle[i][j]).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn ridge_residual_is_small() {
    let (h, labels) = random_system(99, 40, 12, 4);
    for c in [0.01, 1.0, 1e4] {
        let fit = fit_readout(&h, &labels, 4, c, ReadoutMode::Ridge).unwrap();
        let (a, b) = normal_equations(&h, &labels, 4, c);
        let scale = b.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..12 {
            for j in 0..4 {
                let lhs: f64 = (0..12).map(|q| a[i][q] * fit.beta.get(q, j)).sum();
                assert!((lhs - b[i][j]).abs() < 1e-8 * scale);
            }
        }
    }
}

#[test]
fn large_c_ridge_approaches_pseudoinverse() {
    for seed in 0..5 {
        let (h, labels) = random_system(seed + 50, 10, 5, 3);
        let ridge = fit_readout(&h, &labels, 3, 1e12, ReadoutMode::Ridge).unwrap();
        let pinv = fit_readout(&h, &labels, 3, 1.0, ReadoutMode::Pseudoinverse).unwrap();
        for (a, b) in ridge.beta.data().iter().zip(pinv.beta.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

fn trained_model(beta: Matrix) -> ReservoirModel {
    let mut m = ReservoirModel::build(ReservoirGenome::from_sizes(vec![3], 4), 2, EncodeMode::SingleShot).unwrap();
    m.readout = Some(ReadoutModel { beta, ridge_c: 1.0, mode: ReadoutMode::Ridge });
    m.norm_stats = Some(NormStats { mean: vec![0.0, 0.0], std: vec![1.0, 1.0] });
    m
}

#[test]
fn duplicated_column_ties_break_low() {
    let beta = Matrix::from_rows(&[vec![0.1, 0.9, 0.9], vec![0.2, 0.4, 0.4], vec![0.3, 0.5, 0.5]]).unwrap();
    let p = trained_model(beta).predict(&[0.3, 0.7]).unwrap();
    assert_eq!(p.scores[1], p.scores[2]);
    if p.scores[1] >= p.scores[0] {
        assert_eq!(p.category, 1);
    }
    assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
}

#[test]
fn softmax_symmetry_and_shift() {
    assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
    let s = [0.2, -1.0, 3.0];
    let shifted: Vec<f64> = s.iter().map(|v| v + 100.0).collect();
    assert_eq!(argmax(&s), argmax(&shifted));
    for (a, b) in softmax(&s).iter().zip(softmax(&shifted)) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn single_example_interpolates_its_label() {
    let schema = FeatureSchema::with_category_names(vec!["a".into(), "b".into()], "y", &["x", "y", "z"]).unwrap();
    let ds = FlowDataset::new(schema, vec![FlowRecord { features: vec![0.7, -0.4], label: 2 }]).unwrap();
    let (norm, _) = crate::dataset::fit_normalize(&ds);
    let mut m = ReservoirModel::build(ReservoirGenome::from_sizes(vec![5], 6), 2, EncodeMode::SingleShot).unwrap();
    m.fit(&norm, 1e6, ReadoutMode::Ridge).unwrap();
    assert_eq!(m.predict(&[0.7, -0.4]).unwrap().category, 2);
    assert_eq!(m.feature_names, vec!["a", "b"]);
}

#[test]
fn predict_requires_stats_and_readout() {
    let mut m = trained_model(Matrix::zeros(3, 2));
    m.norm_stats = None;
    assert!(matches!(m.predict(&[0.0, 0.0]), Err(ReservoirError::MissingNormStats)));
    m.readout = None;
    assert!(matches!(m.predict_normalized(&[0.0, 0.0]), Err(ReservoirError::UntrainedModel)));
}

#[test]
fn model_file_version_is_checked() {
    let m = trained_model(Matrix::zeros(3, 2));
    let mut buf = Vec::new();
    m.save(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap().replacen("\"format_version\":1", "\"format_version\":99", 1);
    assert!(matches!(ReservoirModel::load(text.as_bytes()), Err(ReservoirError::UnsupportedFormatVersion(99))));
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn save_load_is_bit_exact(seed in any::<u64>(), sizes in prop::collection::vec(1usize..8, 1..4), skip in any::<bool>()) {
            let mut g = ReservoirGenome::from_sizes(sizes, seed);
            g.density = 0.6;
            if skip && g.n_layers() > 2 {
                g.inter_layer_skips.insert((0, 2));
            }
            let Ok(mut m) = ReservoirModel::build(g, 3, EncodeMode::Sequence { steps: 4 }) else {
                return Ok(());
            };
            let mut r = rng(seed);
            let beta = Matrix::from_row_major(m.hidden_dim(), 2, random_vec(m.hidden_dim() * 2, &mut r)).unwrap();
            m.readout = Some(ReadoutModel { beta, ridge_c: 0.1 + r.random::<f64>(), mode: ReadoutMode::Ridge });
            m.norm_stats = Some(NormStats { mean: random_vec(3, &mut r), std: vec![0.3, 1.7, 1.0 / 3.0] });
            let mut buf = Vec::new();
            m.save(&mut buf).unwrap();
            let back = ReservoirModel::load(buf.as_slice()).unwrap();
            prop_assert_eq!(&back, &m);
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(back.weights.input_matrix.data()), bits(m.weights.input_matrix.data()));
        }

        #[test]
        fn argmax_invariant_under_constant_shift(s in prop::collection::vec(-10.0f64..10.0, 1..12), c in -50.0f64..50.0) {
            let shifted: Vec<f64> = s.iter().map(|v| v + c).collect();
            let p = softmax(&s);
            prop_assert_eq!(argmax(&p), argmax(&softmax(&shifted)));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

