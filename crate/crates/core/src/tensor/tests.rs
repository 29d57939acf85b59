use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn naive_matmul(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = Tensor::zeros(&[m, n]);
    for i in 0..m {
        for j in 0..n {
            let mut s = 0.0;
            for p in 0..k {
                s += a.get(i, p) * b.get(p, j);
            }
            out.set(i, j, s);
        }
    }
    out
}

/// O(L²) complex DFT, kept independent of the twiddle-table path.
fn naive_dft(x: &[f64]) -> Vec<num_complex::Complex64> {
    let l = x.len();
    (0..l)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(n, &v)| {
                    let theta = -2.0 * std::f64::consts::PI * (k * n) as f64 / l as f64;
                    num_complex::Complex64::from_polar(v, theta)
                })
                .sum()
        })
        .collect()
}

#[test]
fn tensor_rejects_bad_shapes() {
    assert!(Tensor::new(vec![2, 3], vec![0.0; 5]).is_err());
    assert!(Tensor::new(vec![0, 3], vec![]).is_err());
}

#[test]
fn matmul_identity_and_worked_case() {
    let b = Tensor::from_rows(&[vec![5.0, 6.0], vec![7.0, 8.0]]).unwrap();
    assert_eq!(Tensor::identity(2).matmul(&b).unwrap(), b);
    let a = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let c = a.matmul(&b).unwrap();
    assert_eq!(c, naive_matmul(&a, &b));
    assert_eq!(c.data(), &[19.0, 22.0, 43.0, 50.0]);
}

#[test]
fn matmul_dimension_error_names_shapes() {
    let tape = Tape::new();
    let a = tape.constant(Tensor::zeros(&[2, 3]));
    let b = tape.constant(Tensor::zeros(&[4, 2]));
    let err = a.matmul(b).unwrap_err();
    match &err {
        TensorError::Dimension { lhs, rhs, .. } => {
            assert_eq!(lhs, &vec![2, 3]);
            assert_eq!(rhs, &vec![4, 2]);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(err.to_string().contains("[2, 3]"));
}

#[test]
fn softmax_worked_rows() {
    let tape = Tape::new();
    let x = tape.constant(
        Tensor::from_rows(&[
            vec![0.7, 0.7, 0.7],
            vec![0.0, 2f64.ln(), f64::NEG_INFINITY.max(-1e300)],
        ])
        .unwrap(),
    );
    let y = x.softmax_rows().to_tensor();
    for c in 0..3 {
        assert!((y.get(0, c) - 1.0 / 3.0).abs() < 1e-15);
    }
    assert!((y.get(1, 0) - 1.0 / 3.0).abs() < 1e-15);
    assert!((y.get(1, 1) - 2.0 / 3.0).abs() < 1e-15);

    let big = tape.constant(Tensor::from_rows(&[vec![1000.0, 0.0]]).unwrap());
    let y = big.softmax_rows().to_tensor();
    assert!(y.is_finite());
    // e^-1000 underflows to 0 in f64; exact answer is 1 - 5e-435.
    assert_eq!(y.get(0, 0), 1.0);
    assert!(y.get(0, 1) < 1e-300);
}

#[test]
fn layer_norm_cases() {
    let tape = Tape::new();
    let eps = 1e-5;
    let ones = tape.constant(Tensor::filled(&[2], 1.0));
    let zeros = tape.constant(Tensor::zeros(&[2]));
    let c = tape.constant(Tensor::from_rows(&[vec![4.0, 4.0]]).unwrap());
    let y = c.layer_norm(ones, zeros, eps).unwrap().to_tensor();
    assert!(y.data().iter().all(|v| v.abs() <= eps.sqrt()));

    let x = tape.constant(Tensor::from_rows(&[vec![1.0, 3.0]]).unwrap());
    let y = x.layer_norm(ones, zeros, 1e-14).unwrap().to_tensor();
    assert!((y.get(0, 0) + 1.0).abs() < 1e-12);
    assert!((y.get(0, 1) - 1.0).abs() < 1e-12);

    let bias = tape.constant(Tensor::vector(vec![0.3, -0.2]));
    let y = x.layer_norm(zeros, bias, eps).unwrap().to_tensor();
    assert_eq!(y.data(), &[0.3, -0.2]);

    assert!(x.layer_norm(ones, zeros, 0.0).is_err());
}

#[test]
fn rdft_dc_and_single_cosine() {
    let l = 8;
    let (re, im) = rdft_values(&vec![2.5; l]).unwrap();
    assert!((re[0] - 2.5 * l as f64).abs() < 1e-12);
    assert!(re[1..].iter().all(|v| v.abs() < 1e-12));
    assert!(im.iter().all(|v| v.abs() < 1e-12));

    let l = 48;
    let x: Vec<f64> = (0..l)
        .map(|n| (2.0 * std::f64::consts::PI * n as f64 / l as f64).cos())
        .collect();
    let (re, im) = rdft_values(&x).unwrap();
    for k in 0..=l / 2 {
        let want = if k == 1 { l as f64 / 2.0 } else { 0.0 };
        assert!((re[k] - want).abs() < 1e-9, "bin {k}");
        assert!(im[k].abs() < 1e-9);
    }
}

#[test]
fn rdft_rejects_odd_lengths() {
    assert!(matches!(
        rdft_values(&[1.0, 2.0, 3.0]),
        Err(TensorError::UnsupportedLength { len: 3, .. })
    ));
    assert!(rdft_values(&[1.0]).is_err());
}

#[test]
fn rdft_matches_naive_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for &l in &[2usize, 4, 8, 48, 96] {
        for _ in 0..20 {
            let x: Vec<f64> = (0..l).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let (re, im) = rdft_values(&x).unwrap();
            let oracle = naive_dft(&x);
            for k in 0..=l / 2 {
                assert!((re[k] - oracle[k].re).abs() < 1e-9);
                assert!((im[k] - oracle[k].im).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn rdft_on_tape_matches_values_per_column() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random(&[8, 3], &mut rng);
    let tape = Tape::new();
    let (re, im) = tape.constant(x.clone()).rdft().unwrap();
    let (re, im) = (re.to_tensor(), im.to_tensor());
    assert_eq!(re.shape(), &[5, 3]);
    for c in 0..3 {
        let (r, i) = rdft_values(&x.column(c)).unwrap();
        for k in 0..5 {
            assert!((re.get(k, c) - r[k]).abs() < 1e-12);
            assert!((im.get(k, c) - i[k]).abs() < 1e-12);
        }
    }
    let v = tape.constant(Tensor::vector(x.column(0)));
    let (rv, _) = v.rdft().unwrap();
    assert_eq!(rv.shape(), vec![5]);
}

#[test]
fn backward_sum_is_ones() {
    let tape = Tape::new();
    let x = tape.param(Tensor::vector(vec![1.0, -2.0, 3.0]));
    let g = tape.backward(x.sum()).unwrap();
    assert_eq!(g.get(x).unwrap().data(), &[1.0, 1.0, 1.0]);
}

#[test]
fn backward_rejects_non_scalar() {
    let tape = Tape::new();
    let x = tape.param(Tensor::vector(vec![1.0, 2.0]));
    assert!(matches!(tape.backward(x), Err(TensorError::NonScalarLoss(_))));
}

#[test]
fn untouched_leaf_gets_zero_gradient() {
    let tape = Tape::new();
    let x = tape.param(Tensor::vector(vec![1.0, 2.0]));
    let unused = tape.param(Tensor::vector(vec![5.0]));
    let g = tape.backward(x.sum()).unwrap();
    assert_eq!(g.get(unused).unwrap().data(), &[0.0]);
}

#[test]
fn gradcheck_squared_matmul() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random(&[3, 4], &mut rng);
    let b = random(&[4, 2], &mut rng);
    let b2 = b.clone();
    let report = gradient_check(
        move |t, x| {
            let p = x.matmul(t.constant(b2.clone()))?;
            p.mul(p).map(|s| s.sum())
        },
        &a,
        1e-5,
        1e-4,
    )
    .unwrap();
    assert!(report.pass, "{report:?}");
    let a2 = a.clone();
    let report = gradient_check(
        move |t, x| {
            let p = t.constant(a2.clone()).matmul(x)?;
            p.mul(p).map(|s| s.sum())
        },
        &b,
        1e-5,
        1e-4,
    )
    .unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn gradcheck_composite_softmax_layernorm_matmul() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = random(&[4, 6], &mut rng);
    let w = random(&[6, 6], &mut rng);
    let gain = random(&[6], &mut rng);
    let bias = random(&[6], &mut rng);
    let target = random(&[4, 6], &mut rng);
    let report = gradient_check(
        move |t, x| {
            let h = x.matmul(t.constant(w.clone()))?;
            let n = h.layer_norm(t.constant(gain.clone()), t.constant(bias.clone()), 1e-5)?;
            let a = n.matmul(n.t())?.softmax_rows();
            let o = a.matmul(n)?;
            let o = Var::concat_cols(&[o, x])?.select_rows(&[0, 2, 3])?;
            let tt = t.constant(target.select_columns(&(0..6).collect::<Vec<_>>()));
            let tt = Var::concat_cols(&[tt, tt])?.select_rows(&[1, 2, 3])?;
            let d = o.sub(tt)?.scale(0.5);
            Ok(d.mul(d)?.mean())
        },
        &x,
        1e-5,
        1e-4,
    )
    .unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn gradcheck_layernorm_parameters_and_rdft() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = random(&[8, 3], &mut rng);
    let g0 = random(&[3], &mut rng);
    let x2 = x.clone();
    let report = gradient_check(
        move |t, gain| {
            let xv = t.constant(x2.clone());
            let ln = xv.layer_norm(gain, t.constant(Tensor::zeros(&[3])), 1e-5)?;
            let (re, im) = ln.rdft()?;
            let w = t.constant(Tensor::filled(&[1, 5], 0.3));
            let y = w.matmul(re)?.add(w.matmul(im)?)?.add_row(gain)?;
            Ok(y.mul(y)?.sum())
        },
        &g0,
        1e-5,
        1e-4,
    )
    .unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn gradcheck_quadratic_is_exact() {
    let x = Tensor::vector(vec![0.3, -1.7, 2.2, 0.01]);
    let r = gradient_check(|_, x| Ok(x.mul(x)?.sum()), &x, 1e-5, 1e-7).unwrap();
    assert!(r.max_rel_err < 1e-7, "{r:?}");
}

#[test]
fn gradcheck_zero_tolerance_fails_on_nonzero_error() {
    let x = Tensor::vector(vec![0.3, -1.7, 2.2]);
    let r = gradient_check(
        |_, x| Ok(x.mul(x)?.mul(x)?.sum()),
        &x,
        1e-3,
        0.0,
    )
    .unwrap();
    assert!(r.max_rel_err > 0.0);
    assert!(!r.pass);
}

#[test]
fn gradcheck_reports_non_finite() {
    let x = Tensor::vector(vec![1e308, 1e308]);
    let r = gradient_check(|_, x| Ok(x.mul(x)?.sum()), &x, 1e-5, 1e-4);
    assert!(matches!(r, Err(TensorError::NonFinite(_))));
}

#[test]
fn backward_is_bit_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let a = random(&[5, 7], &mut rng);
    let b = random(&[7, 5], &mut rng);
    let run = || {
        let tape = Tape::new();
        let av = tape.param(a.clone());
        let bv = tape.param(b.clone());
        let s = av.matmul(bv).unwrap().softmax_rows();
        let loss = s.mul(s).unwrap().sum();
        let g = tape.backward(loss).unwrap();
        (g.get(av).unwrap(), g.get(bv).unwrap())
    };
    let (a1, b1) = run();
    let (a2, b2) = run();
    let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a1), bits(&a2));
    assert_eq!(bits(&b1), bits(&b2));
}

#[test]
fn fan_out_gradients_accumulate() {
    let tape = Tape::new();
    let x = tape.param(Tensor::vector(vec![2.0]));
    let y = x.add(x).unwrap().add(x).unwrap();
    let g = tape.backward(y.sum()).unwrap();
    assert_eq!(g.get(x).unwrap().data(), &[3.0]);
}

proptest! {
    #[test]
    fn softmax_rows_sum_to_one(vals in proptest::collection::vec(-50.0f64..50.0, 12)) {
        let tape = Tape::new();
        let x = tape.constant(Tensor::matrix(3, 4, vals).unwrap());
        let y = x.softmax_rows().to_tensor();
        for r in 0..3 {
            let s: f64 = y.row(r).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(y.row(r).iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn matmul_is_associative(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random(&[3, 4], &mut rng);
        let b = random(&[4, 5], &mut rng);
        let c = random(&[5, 2], &mut rng);
        let l = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let r = a.matmul(&b.matmul(&c).unwrap()).unwrap();
        for (x, y) in l.data().iter().zip(r.data()) {
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0));
        }
    }

    #[test]
    fn reverse_mode_agrees_with_central_differences(seed in 0u64..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random(&[3, 4], &mut rng);
        let w = random(&[4, 4], &mut rng);
        let r = gradient_check(
            move |t, x| {
                let wv = t.constant(w.clone());
                let ones = t.constant(Tensor::filled(&[4], 1.0));
                let zeros = t.constant(Tensor::zeros(&[4]));
                let h = x.matmul(wv)?.softmax_rows().layer_norm(ones, zeros, 1e-5)?;
                let h = h.add(x)?.t();
                Ok(h.mul(h)?.sum().scale(0.25))
            },
            &x,
            1e-5,
            1e-4,
        ).unwrap();
        prop_assert!(r.pass, "{:?}", r);
    }
}
