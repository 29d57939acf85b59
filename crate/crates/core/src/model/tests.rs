use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::tensor::{rdft_values, Tape, Tensor};

fn small_cfg() -> ModelConfig {
    ModelConfig {
        lookback: 8,
        horizon: 4,
        n_endo: 3,
        n_exo: 2,
        d_model: 8,
        n_heads: 2,
        d_head: 4,
        n_layers: 1,
        dropout: 0.0,
        target_indices: vec![1, 2],
        seed: 11,
        ..Default::default()
    }
}

fn random_matrix(rows: usize, cols: usize, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Tensor::new(vec![rows, cols], data).unwrap()
}

fn reconstruct(series: &[f64]) -> Vec<f64> {
    let bases = DbfmBases::new(series.len()).unwrap();
    let tape = Tape::new();
    let e = tape.constant(Tensor::new(vec![series.len(), 1], series.to_vec()).unwrap());
    let (f_r, f_i) = dbfm_features(e, &bases).unwrap();
    let sum = f_r.add(f_i).unwrap().to_tensor();
    sum.into_data()
}

#[test]
fn frequency_features_sum_to_input() {
    for (l, seed) in [(4, 1), (48, 2), (96, 3)] {
        let x = random_matrix(l, 1, seed).into_data();
        let back = reconstruct(&x);
        let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "L={l}: {err}");
    }
}

#[test]
fn constant_series_lives_in_cosine_features() {
    let bases = DbfmBases::new(48).unwrap();
    let tape = Tape::new();
    let e = tape.constant(Tensor::filled(&[48, 1], 2.5));
    let (f_r, f_i) = dbfm_features(e, &bases).unwrap();
    assert!(f_r.to_tensor().data().iter().all(|v| (v - 2.5).abs() < 1e-12));
    assert!(f_i.to_tensor().data().iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn pure_sine_lives_in_sine_features() {
    let l = 48;
    let x: Vec<f64> = (0..l).map(|n| (2.0 * PI * 3.0 * n as f64 / l as f64).sin()).collect();
    let bases = DbfmBases::new(l).unwrap();
    let tape = Tape::new();
    let e = tape.constant(Tensor::new(vec![l, 1], x.clone()).unwrap());
    let (f_r, f_i) = dbfm_features(e, &bases).unwrap();
    assert!(f_r.to_tensor().data().iter().all(|v| v.abs() < 1e-12));
    let f_i = f_i.to_tensor();
    for (a, b) in f_i.data().iter().zip(&x) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn cosine_basis_rows_are_orthogonal() {
    let b = DbfmBases::new(16).unwrap();
    let g = b.w_cos.matmul(&b.w_cos.transpose()).unwrap();
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            if i != j {
                assert!(g.get(i, j).abs() < 1e-12, "({i},{j}) = {}", g.get(i, j));
            }
        }
    }
    // Row norms follow the a_k/L scaling: (a_k/L)^2 * L * (1 or 1/2).
    assert!((g.get(0, 0) - 1.0 / 16.0).abs() < 1e-12);
    assert!((g.get(1, 1) - 2.0 / 16.0).abs() < 1e-12);
    assert!((g.get(8, 8) - 1.0 / 16.0).abs() < 1e-12);
    assert!(b.w_sin.row(0).iter().chain(b.w_sin.row(8).iter()).all(|v| *v == 0.0));
}

#[test]
fn features_match_direct_inverse_transform() {
    let x = random_matrix(12, 1, 5).into_data();
    let (re, im) = rdft_values(&x).unwrap();
    let l = x.len();
    for n in 0..l {
        let mut fr = 0.0;
        let mut fi = 0.0;
        for k in 0..=l / 2 {
            let w = if k == 0 || k == l / 2 { 1.0 } else { 2.0 };
            let arg = 2.0 * PI * (k * n) as f64 / l as f64;
            fr += w / l as f64 * re[k] * arg.cos();
            if w == 2.0 {
                fi -= w / l as f64 * im[k] * arg.sin();
            }
        }
        assert!((fr + fi - x[n]).abs() < 1e-10);
    }
}

#[test]
fn odd_lookback_is_rejected() {
    assert!(DbfmBases::new(7).is_err());
    assert!(position_encoding(4, 5).is_err());
}

#[test]
fn position_encoding_values() {
    let pe = position_encoding(48, 16).unwrap();
    assert_eq!(pe.shape(), &[48, 16]);
    for i in 0..8 {
        assert_eq!(pe.get(0, 2 * i), 0.0);
        assert_eq!(pe.get(0, 2 * i + 1), 1.0);
    }
    assert!((pe.get(1, 0) - 0.841_470_984_807_896_5).abs() < 1e-12);
    assert!((pe.get(1, 1) - 0.540_302_305_868_139_8).abs() < 1e-12);
    let expected = (2.0 / 10000f64.powf(2.0 / 16.0)).sin();
    assert!((pe.get(2, 2) - expected).abs() < 1e-12);
    assert!(pe.data().iter().all(|v| v.abs() <= 1.0));
}

#[test]
fn output_shapes_and_attention_are_stochastic() {
    let cfg = ModelConfig { n_layers: 2, ..small_cfg() };
    let model = Model::new(&cfg).unwrap();
    let tape = Tape::new();
    let p = model.params.bind_constant(&tape);
    let x = tape.constant(random_matrix(8, 3, 1));
    let z = tape.constant(random_matrix(8, 2, 2));
    let out = model.network().forward::<ChaCha8Rng>(x, z, &p, None).unwrap();
    assert_eq!(out.yhat.shape(), vec![3, 4]);
    assert_eq!(out.cross_attention.shape(), &[3, 2]);
    assert_eq!(out.temporal_attention.len(), 2);
    let rows_sum_to_one = |t: &Tensor| {
        (0..t.rows()).all(|r| (t.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12)
            && t.data().iter().all(|v| *v >= 0.0)
    };
    assert!(rows_sum_to_one(&out.cross_attention));
    for layer in &out.temporal_attention {
        assert_eq!(layer.len(), 2);
        for w in layer {
            assert_eq!(w.shape(), &[8, 8]);
            assert!(rows_sum_to_one(w));
        }
    }
}

#[test]
fn default_configuration_shapes() {
    let cfg = ModelConfig::default();
    let model = Model::new(&cfg).unwrap();
    let pred = model
        .predict(&random_matrix(48, 9, 3), &random_matrix(48, 3, 4))
        .unwrap();
    assert_eq!(pred.yhat.shape(), &[9, 48]);
    assert_eq!(pred.cross_attention.shape(), &[9, 3]);
    assert!(pred.yhat.is_finite());
}

#[test]
fn wrong_input_shape_is_an_error() {
    let model = Model::new(&small_cfg()).unwrap();
    let err = model.predict(&random_matrix(8, 2, 1), &random_matrix(8, 2, 2)).unwrap_err();
    assert!(err.to_string().contains("[8, 2]"), "{err}");
}

#[test]
fn prediction_is_deterministic() {
    let cfg = small_cfg();
    let a = Model::new(&cfg).unwrap();
    let b = Model::new(&cfg).unwrap();
    let x = random_matrix(8, 3, 7);
    let z = random_matrix(8, 2, 8);
    let pa = a.predict(&x, &z).unwrap().yhat;
    let pb = b.predict(&x, &z).unwrap().yhat;
    assert_eq!(
        pa.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        pb.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
}

fn permute_columns(t: &Tensor, perm: &[usize]) -> Tensor {
    t.select_columns(perm)
}

#[test]
fn exogenous_order_does_not_matter() {
    let cfg = ModelConfig { n_exo: 3, ..small_cfg() };
    for ablation in Ablation::ALL {
        let model = Model::new(&cfg.clone().with_ablation(ablation)).unwrap();
        let x = random_matrix(8, 3, 21);
        let z = random_matrix(8, 3, 22);
        let perm = [2, 0, 1];
        let a = model.predict(&x, &z).unwrap();
        let b = model.predict(&x, &permute_columns(&z, &perm)).unwrap();
        assert!(a.yhat.max_abs_diff(&b.yhat) < 1e-12, "{ablation}");
        for (j, &src) in perm.iter().enumerate() {
            for (u, v) in a.cross_attention.column(src).iter().zip(b.cross_attention.column(j)) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn endogenous_order_permutes_outputs_without_temporal_branch() {
    let cfg = small_cfg().with_ablation(Ablation::E2eca);
    let model = Model::new(&cfg).unwrap();
    let x = random_matrix(8, 3, 31);
    let z = random_matrix(8, 2, 32);
    let perm = [1, 2, 0];
    let a = model.predict(&x, &z).unwrap().yhat;
    let b = model.predict(&permute_columns(&x, &perm), &z).unwrap().yhat;
    for (i, &src) in perm.iter().enumerate() {
        for (u, v) in a.row(src).iter().zip(b.row(i)) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}

#[test]
fn temporal_branch_off_ignores_its_weights() {
    let cfg = small_cfg().with_ablation(Ablation::E2eca);
    let mut model = Model::new(&cfg).unwrap();
    let x = random_matrix(8, 3, 41);
    let z = random_matrix(8, 2, 42);
    let before = model.predict(&x, &z).unwrap().yhat;
    for layer in &mut model.params.layers {
        layer.dbfm_proj = layer.dbfm_proj.map(|v| v * 7.0 + 1.0);
        layer.ta_wo = layer.ta_wo.map(|v| -v);
    }
    model.params.bridge = model.params.bridge.map(|v| v + 3.0);
    model.params.embed = model.params.embed.map(|v| v + 3.0);
    let after = model.predict(&x, &z).unwrap().yhat;
    assert_eq!(before, after);

    // With the branch on, rescaling the bridge changes the output. (A constant
    // shift would not: layer-norm rows with unit gain and zero bias sum to zero.)
    let full = Model::new(&small_cfg()).unwrap();
    let mut edited = full.clone();
    edited.params.bridge = edited.params.bridge.map(|v| v * 3.0);
    assert!(full.predict(&x, &z).unwrap().yhat.max_abs_diff(&edited.predict(&x, &z).unwrap().yhat) > 1e-6);
}

#[test]
fn zero_head_weights_emit_bias() {
    let mut model = Model::new(&small_cfg()).unwrap();
    model.params.head = Tensor::zeros(&[8, 4]);
    model.params.head_bias = Tensor::vector(vec![0.5, -1.0, 2.0, 0.0]);
    let y = model.predict(&random_matrix(8, 3, 1), &random_matrix(8, 2, 2)).unwrap().yhat;
    for r in 0..3 {
        assert_eq!(y.row(r), vec![0.5, -1.0, 2.0, 0.0]);
    }
}

#[test]
fn mse_loss_worked_case() {
    let tape = Tape::new();
    let yhat = tape.constant(Tensor::from_rows(&[vec![9.0, 9.0], vec![1.0, 2.0], vec![0.0, 0.0]]).unwrap());
    let y = tape.constant(Tensor::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 2.0]]).unwrap());
    // Rows 1 and 2 only: (1 + 4 + 1 + 4) / 4.
    let l = mse_loss(yhat, y, &[1, 2]).unwrap();
    assert!((l.scalar() - 2.5).abs() < 1e-15);
    assert!(mse_loss(yhat, y, &[]).is_err());
}

#[test]
fn dropout_keeps_mean_and_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mask = dropout_mask(&[100_000], 0.1, &mut rng);
    let zeros = mask.data().iter().filter(|v| **v == 0.0).count() as f64 / 1e5;
    let mean = mask.data().iter().sum::<f64>() / 1e5;
    assert!((zeros - 0.1).abs() < 0.005, "{zeros}");
    assert!((mean - 1.0).abs() < 0.01, "{mean}");
    assert!(mask.data().iter().all(|v| *v == 0.0 || (v - 1.0 / 0.9).abs() < 1e-15));

    let tape = Tape::new();
    let v = tape.constant(Tensor::filled(&[3, 3], 2.0));
    assert_eq!(dropout(v, 0.0, &mut rng).unwrap().to_tensor(), Tensor::filled(&[3, 3], 2.0));
}

#[test]
fn training_mode_dropout_changes_output_and_is_seeded() {
    let cfg = ModelConfig { dropout: 0.5, ..small_cfg() };
    let model = Model::new(&cfg).unwrap();
    let x = random_matrix(8, 3, 1);
    let z = random_matrix(8, 2, 2);
    let run = |seed| {
        let tape = Tape::new();
        let p = model.params.bind_constant(&tape);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        model
            .network()
            .forward(tape.constant(x.clone()), tape.constant(z.clone()), &p, Some(&mut rng))
            .unwrap()
            .yhat
            .to_tensor()
    };
    assert_eq!(run(1), run(1));
    let eval = model.predict(&x, &z).unwrap().yhat;
    assert!(run(1).max_abs_diff(&eval) > 1e-9);
}

fn loss_at(model: &Model, flat: &[f64], x: &Tensor, z: &Tensor, y: &Tensor) -> f64 {
    let params = model.params.unflatten(flat).unwrap();
    let tape = Tape::new();
    let p = params.bind_constant(&tape);
    let out = model
        .network()
        .forward::<ChaCha8Rng>(tape.constant(x.clone()), tape.constant(z.clone()), &p, None)
        .unwrap();
    mse_loss(out.yhat, tape.constant(y.clone()), &model.config().target_indices)
        .unwrap()
        .scalar()
}

#[test]
fn full_model_gradients_match_finite_differences() {
    for ablation in Ablation::ALL {
        let cfg = ModelConfig {
            n_layers: 2,
            scaled_attention: ablation == Ablation::Full,
            ..small_cfg()
        }
        .with_ablation(ablation);
        let model = Model::new(&cfg).unwrap();
        let x = random_matrix(8, 3, 51);
        let z = random_matrix(8, 2, 52);
        let y = random_matrix(3, 4, 53);

        let tape = Tape::new();
        let p = model.params.bind(&tape);
        let out = model
            .network()
            .forward::<ChaCha8Rng>(tape.constant(x.clone()), tape.constant(z.clone()), &p, None)
            .unwrap();
        let loss = mse_loss(out.yhat, tape.constant(y.clone()), &cfg.target_indices).unwrap();
        let mut grads = tape.backward(loss).unwrap();
        let analytic = p.gradients(&mut grads).flatten();

        let flat = model.params.flatten();
        let h = 1e-6;
        let mut worst = 0.0f64;
        let mut probe = flat.clone();
        for i in 0..flat.len() {
            probe[i] = flat[i] + h;
            let fp = loss_at(&model, &probe, &x, &z, &y);
            probe[i] = flat[i] - h;
            let fm = loss_at(&model, &probe, &x, &z, &y);
            probe[i] = flat[i];
            let numeric = (fp - fm) / (2.0 * h);
            let denom = analytic[i].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((analytic[i] - numeric).abs() / denom);
        }
        assert!(worst < 1e-4, "{ablation}: max relative error {worst}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reconstruction_holds_for_any_series(
        half in 1usize..33,
        values in proptest::collection::vec(-100.0f64..100.0, 66),
    ) {
        let l = 2 * half;
        let x = &values[..l];
        let back = reconstruct(x);
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn cross_attention_is_row_stochastic(seed in 0u64..1000) {
        let cfg = ModelConfig { seed, ..small_cfg() };
        let model = Model::new(&cfg).unwrap();
        let pred = model.predict(&random_matrix(8, 3, seed), &random_matrix(8, 2, seed + 1)).unwrap();
        for r in 0..3 {
            prop_assert!((pred.cross_attention.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
