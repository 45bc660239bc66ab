mod support;

use adascan_core::numcore::{
    self, loss, Activation, BatchNormStats, NormMode, Tape, Tensor, Var,
};
use adascan_core::Error;
use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use support::gradcheck::{
    max_rel_error, random, random_away_from_zero, weighted_sum,
};

fn t2(rows: &[&[f64]]) -> Tensor<f64> {
    Tensor::from_rows(rows).unwrap()
}

#[test]
fn matmul_identity_and_selection() {
    let mut tape = Tape::<f64>::new();
    let a = tape.constant(t2(&[&[1., 2.], &[3., 4.]]));
    let i = tape.constant(t2(&[&[1., 0.], &[0., 1.]]));
    let p = tape.matmul(a, i).unwrap();
    assert_eq!(tape.value(p).data(), &[1., 2., 3., 4.]);

    let r = tape.constant(t2(&[&[1., 0.]]));
    let c = tape.constant(t2(&[&[5.], &[7.]]));
    let s = tape.matmul(r, c).unwrap();
    assert_eq!(tape.value(s).data(), &[5.]);
}

#[test]
fn matmul_shape_mismatch_names_both_shapes() {
    let mut tape = Tape::<f64>::new();
    let a = tape.constant(Tensor::zeros(&[2, 3]));
    let b = tape.constant(Tensor::zeros(&[2, 3]));
    match tape.matmul(a, b) {
        Err(Error::Dimension { lhs, rhs, .. }) => {
            assert_eq!(lhs, vec![2, 3]);
            assert_eq!(rhs, vec![2, 3]);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn matmul_gradient_matches_finite_differences() {
    let inputs = [random(&[3, 4], 1), random(&[4, 2], 2)];
    let err = max_rel_error(&inputs, |tape, v| {
        let p = tape.matmul(v[0], v[1]).unwrap();
        tape.sum(p).unwrap()
    });
    assert!(err < 1e-5, "{err}");
}

#[test]
fn conv2d_identity_kernel() {
    let x = random(&[1, 5, 6], 3);
    let k = Tensor::new(&[1, 1, 1, 1], vec![1.0]).unwrap();
    let y = numcore::conv2d(&x, &k, 1).unwrap();
    assert_eq!(y, x);
}

#[test]
fn conv2d_box_sum_on_constant_image() {
    let c = 0.75;
    let x = Tensor::full(&[1, 6, 6], c);
    let k = Tensor::full(&[1, 1, 3, 3], 1.0);
    let y = numcore::conv2d(&x, &k, 1).unwrap();
    for r in 1..5 {
        for col in 1..5 {
            assert_abs_diff_eq!(y.data()[r * 6 + col], 9.0 * c, epsilon = 1e-12);
        }
    }
    // corners see 4 pixels under zero padding
    assert_abs_diff_eq!(y.data()[0], 4.0 * c, epsilon = 1e-12);
}

#[test]
fn conv2d_rejects_even_kernel() {
    let x = Tensor::<f64>::zeros(&[1, 4, 4]);
    let k = Tensor::zeros(&[1, 1, 2, 2]);
    assert!(matches!(numcore::conv2d(&x, &k, 1), Err(Error::Config(_))));
}

#[test]
fn conv2d_output_extent_is_ceil_of_stride() {
    let x = Tensor::<f64>::zeros(&[2, 1, 7, 9]);
    let k = Tensor::zeros(&[3, 1, 3, 3]);
    let y = numcore::conv2d(&x, &k, 2).unwrap();
    assert_eq!(y.shape(), &[2, 3, 4, 5]);
}

#[test]
fn conv2d_gradient_matches_finite_differences() {
    for stride in [1, 2] {
        let inputs = [random(&[2, 5, 5], 4), random(&[3, 2, 3, 3], 5)];
        let err = max_rel_error(&inputs, |tape, v| {
            let y = tape.conv2d(v[0], v[1], stride).unwrap();
            weighted_sum(tape, y, 6)
        });
        assert!(err < 1e-5, "stride {stride}: {err}");
    }
}

#[test]
fn conv2d_transpose_identity_and_shape() {
    let x = random(&[1, 4, 4], 7);
    let k = Tensor::new(&[1, 1, 1, 1], vec![1.0]).unwrap();
    assert_eq!(numcore::conv2d_transpose(&x, &k, 1).unwrap(), x);

    let x = random(&[1, 2, 2], 8);
    let k = random(&[1, 1, 3, 3], 9);
    let y = numcore::conv2d_transpose(&x, &k, 2).unwrap();
    assert_eq!(y.shape(), &[1, 4, 4]);
}

fn dot(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

#[test]
fn conv2d_transpose_is_adjoint_of_conv2d() {
    for (seed, (c_in, c_out, h, k, s)) in
        [(2, 3, 6, 3, 1), (2, 4, 8, 3, 2), (1, 2, 9, 5, 3), (3, 1, 4, 1, 2)].into_iter().enumerate()
    {
        let seed = seed as u64 * 10;
        let x = random(&[2, c_in, h, h], seed);
        let kernel = random(&[c_out, c_in, k, k], seed + 1);
        let cx = numcore::conv2d(&x, &kernel, s).unwrap();
        let y = random(cx.shape(), seed + 2);
        let ty = numcore::conv2d_transpose(&y, &kernel, s).unwrap();
        // transpose output extent is stride * input; crop happens only when h % s != 0
        if ty.shape() == x.shape() {
            let (l, r) = (dot(&cx, &y), dot(&x, &ty));
            assert!((l - r).abs() <= 1e-10 * l.abs().max(1.0), "{l} vs {r}");
        }
    }
}

#[test]
fn conv2d_transpose_gradient_matches_finite_differences() {
    let inputs = [random(&[2, 3, 3], 11), random(&[2, 3, 3, 3], 12)];
    let err = max_rel_error(&inputs, |tape, v| {
        let y = tape.conv2d_transpose(v[0], v[1], 2).unwrap();
        weighted_sum(tape, y, 13)
    });
    assert!(err < 1e-5, "{err}");
}

#[test]
fn activation_values() {
    let mut tape = Tape::<f64>::new();
    let x = tape.constant(Tensor::new(&[3], vec![-1.0, 0.0, 0.0]).unwrap());
    let r = tape.relu(x).unwrap();
    let t = tape.tanh(x).unwrap();
    let s = tape.sigmoid(x).unwrap();
    assert_eq!(tape.value(r).data()[0], 0.0);
    assert_eq!(tape.value(t).data()[1], 0.0);
    assert_eq!(tape.value(s).data()[2], 0.5);
}

#[test]
fn activation_gradients_match_finite_differences() {
    for kind in [Activation::Relu, Activation::Tanh, Activation::Sigmoid] {
        let inputs = [random_away_from_zero(&[4, 4], 14, 0.05)];
        let err = max_rel_error(&inputs, |tape, v| {
            let y = tape.activation(v[0], kind).unwrap();
            weighted_sum(tape, y, 15)
        });
        assert!(err < 1e-6, "{kind:?}: {err}");
    }
}

#[test]
fn batch_norm_constant_input_is_zero() {
    let mut tape = Tape::<f64>::new();
    let x = tape.constant(Tensor::full(&[3, 2, 2, 2], 4.0));
    let g = tape.constant(Tensor::full(&[2], 1.0));
    let b = tape.constant(Tensor::zeros(&[2]));
    let mut stats = BatchNormStats::new(2);
    let y = tape.batch_norm(x, g, b, &mut stats, NormMode::Train).unwrap();
    assert!(tape.value(y).data().iter().all(|&v| v == 0.0));
}

#[test]
fn batch_norm_zero_scale_outputs_shift() {
    let mut tape = Tape::<f64>::new();
    let x = tape.constant(random(&[2, 2, 3, 3], 16));
    let g = tape.constant(Tensor::zeros(&[2]));
    let b = tape.constant(Tensor::new(&[2], vec![0.3, -0.7]).unwrap());
    let mut stats = BatchNormStats::new(2);
    let y = tape.batch_norm(x, g, b, &mut stats, NormMode::Train).unwrap();
    for (i, plane) in tape.value(y).data().chunks(9).enumerate() {
        let want = [0.3, -0.7][i % 2];
        assert!(plane.iter().all(|&v| v == want));
    }
}

#[test]
fn batch_norm_train_output_is_standardized() {
    let mut tape = Tape::<f64>::new();
    let x = tape.constant(random(&[4, 3, 5, 5], 17).map(|v| 3.0 * v + 1.5));
    let g = tape.constant(Tensor::full(&[3], 1.0));
    let b = tape.constant(Tensor::zeros(&[3]));
    let mut stats = BatchNormStats::new(3);
    let y = tape.batch_norm(x, g, b, &mut stats, NormMode::Train).unwrap();
    let yv = tape.value(y).data();
    for ch in 0..3 {
        let vals: Vec<f64> = (0..4).flat_map(|b| yv[(b * 3 + ch) * 25..][..25].to_vec()).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-4, "{mean}");
        // the 1e-5 epsilon shrinks the variance slightly below one
        assert!((var - 1.0).abs() < 1e-4, "{var}");
    }
    // running statistics moved 1% of the way toward the batch statistics
    assert!(stats.mean.iter().all(|&m| m != 0.0));
}

#[test]
fn batch_norm_train_rejects_batch_of_one() {
    let mut tape = Tape::<f64>::new();
    let x = tape.constant(Tensor::zeros(&[1, 2, 2, 2]));
    let g = tape.constant(Tensor::full(&[2], 1.0));
    let b = tape.constant(Tensor::zeros(&[2]));
    let mut stats = BatchNormStats::new(2);
    let r = tape.batch_norm(x, g, b, &mut stats, NormMode::Train);
    assert!(matches!(r, Err(Error::Config(_))));
    // inference mode is fine with a single sample
    assert!(tape.batch_norm(x, g, b, &mut stats, NormMode::Infer).is_ok());
}

#[test]
fn batch_norm_gradient_matches_finite_differences() {
    let inputs = [
        random(&[3, 2, 3, 3], 18),
        random(&[2], 19).map(|v| v + 1.5),
        random(&[2], 20),
    ];
    for mode in [NormMode::Train, NormMode::Infer] {
        let err = max_rel_error(&inputs, |tape, v| {
            let mut stats = BatchNormStats {
                mean: vec![0.1, -0.2],
                var: vec![0.8, 1.3],
            };
            let y = tape.batch_norm(v[0], v[1], v[2], &mut stats, mode).unwrap();
            weighted_sum(tape, y, 21)
        });
        assert!(err < 1e-5, "{mode:?}: {err}");
    }
}

#[test]
fn mse_values_and_gradient() {
    let mut tape = Tape::<f64>::new();
    let p = tape.param(Tensor::new(&[2], vec![0.0, 2.0]).unwrap());
    let zero = Tensor::zeros(&[2]);
    let l = tape.mse_loss(p, &zero).unwrap();
    assert_eq!(tape.value(l).item(), 2.0);
    let g = tape.backward(l).unwrap().get(p);
    // 2 (pred - target) / n
    assert_eq!(g.data(), &[0.0, 2.0]);

    let same = tape.mse_loss(p, &Tensor::new(&[2], vec![0.0, 2.0]).unwrap()).unwrap();
    assert_eq!(tape.value(same).item(), 0.0);

    let target = random(&[3, 4], 22);
    let err = max_rel_error(&[random(&[3, 4], 23)], |tape, v| tape.mse_loss(v[0], &target).unwrap());
    assert!(err < 1e-6, "{err}");
}

#[test]
fn mse_shape_mismatch() {
    let mut tape = Tape::<f64>::new();
    let p = tape.param(Tensor::zeros(&[2]));
    assert!(matches!(tape.mse_loss(p, &Tensor::zeros(&[3])), Err(Error::Dimension { .. })));
}

// Direct Sobel-then-MSE evaluation, independent of the convolution kernels.
fn sobel_loss_oracle(p: &[f64], t: &[f64], h: usize, w: usize) -> f64 {
    let gx = [[-1., 0., 1.], [-2., 0., 2.], [-1., 0., 1.]];
    let gy = [[-1., -2., -1.], [0., 0., 0.], [1., 2., 1.]];
    let at = |img: &[f64], y: isize, x: isize| {
        if y < 0 || x < 0 || y >= h as isize || x >= w as isize {
            0.0
        } else {
            img[y as usize * w + x as usize]
        }
    };
    let mut sq = 0.0;
    for k in [gx, gy] {
        for y in 0..h as isize {
            for x in 0..w as isize {
                let mut dp = 0.0;
                let mut dt = 0.0;
                for (ky, row) in k.iter().enumerate() {
                    for (kx, &kv) in row.iter().enumerate() {
                        let (yy, xx) = (y + ky as isize - 1, x + kx as isize - 1);
                        dp += kv * at(p, yy, xx);
                        dt += kv * at(t, yy, xx);
                    }
                }
                sq += (dp - dt).powi(2);
            }
        }
    }
    sq / (2 * h * w) as f64
}

#[test]
fn sobel_loss_cases() {
    let mut tape = Tape::<f64>::new();
    let c = Tensor::full(&[6, 6], 0.4);
    let p = tape.param(c.clone());
    let l = tape.sobel_loss(p, &c).unwrap();
    assert_eq!(tape.value(l).item(), 0.0);

    let r = random(&[6, 6], 24);
    let p = tape.param(r.clone());
    let l = tape.sobel_loss(p, &r).unwrap();
    assert_eq!(tape.value(l).item(), 0.0);

    let ramp = Tensor::from_fn(&[8, 8], |i| (i % 8) as f64);
    let flat = Tensor::full(&[8, 8], 0.5);
    let p = tape.param(ramp.clone());
    let l = tape.sobel_loss(p, &flat).unwrap();
    let oracle = sobel_loss_oracle(ramp.data(), flat.data(), 8, 8);
    assert!((tape.value(l).item() - oracle).abs() < 1e-12 * oracle, "{oracle}");

    let target = random(&[5, 7], 25);
    let err = max_rel_error(&[random(&[5, 7], 26)], |tape, v| tape.sobel_loss(v[0], &target).unwrap());
    assert!(err < 1e-6, "{err}");
}

#[test]
fn region_max_cases() {
    let mut tape = Tape::<f64>::new();
    let a = random(&[10, 10], 27);
    let p = tape.param(a.clone());
    let l = tape.region_max_mse(p, &a, 5).unwrap();
    assert_eq!(tape.value(l).item(), 0.0);

    let mut b = a.clone();
    b.data_mut()[7 * 10 + 2] += 0.3;
    let l = tape.region_max_mse(p, &b, 5).unwrap();
    assert_abs_diff_eq!(tape.value(l).item(), 0.09 / 25.0, epsilon = 1e-15);

    let too_small = Tensor::zeros(&[4, 9]);
    let q = tape.param(too_small.clone());
    assert!(matches!(tape.region_max_mse(q, &too_small, 5), Err(Error::Config(_))));
}

#[test]
fn region_max_matches_exhaustive_tile_scan() {
    let (p, t) = (random(&[15, 15], 28), random(&[15, 15], 29));
    let mut best: f64 = 0.0;
    for ty in 0..3 {
        for tx in 0..3 {
            let mut s = 0.0;
            for y in 0..5 {
                for x in 0..5 {
                    let i = (ty * 5 + y) * 15 + tx * 5 + x;
                    s += (p.data()[i] - t.data()[i]).powi(2);
                }
            }
            best = best.max(s / 25.0);
        }
    }
    let mut tape = Tape::<f64>::new();
    let v = tape.param(p.clone());
    let l = tape.region_max_mse(v, &t, 5).unwrap();
    assert_abs_diff_eq!(tape.value(l).item(), best, epsilon = 1e-14);

    let err = max_rel_error(&[p], |tape, v| tape.region_max_mse(v[0], &t, 5).unwrap());
    assert!(err < 1e-6, "{err}");
}

#[test]
fn backward_square_and_accumulation() {
    let mut tape = Tape::<f64>::new();
    let x = tape.param(Tensor::scalar(3.0));
    let sq = tape.mul(x, x).unwrap();
    let g = tape.backward(sq).unwrap();
    assert_eq!(g.get(x).item(), 6.0);

    let mut tape = Tape::<f64>::new();
    let x = tape.param(random(&[3, 2], 30));
    let y = tape.add(x, x).unwrap();
    let s = tape.sum(y).unwrap();
    let g = tape.backward(s).unwrap();
    assert!(g.get(x).data().iter().all(|&v| v == 2.0));
}

#[test]
fn backward_independent_tensor_gets_exact_zero() {
    let mut tape = Tape::<f64>::new();
    let x = tape.param(random(&[2, 2], 31));
    let unused = tape.param(random(&[3], 32));
    let _dead = tape.scale(unused, 4.0).unwrap();
    let s = tape.sum(x).unwrap();
    let g = tape.backward(s).unwrap();
    assert!(g.get(unused).data().iter().all(|&v| v == 0.0));
}

#[test]
fn backward_rejects_foreign_or_non_scalar_loss() {
    let mut a = Tape::<f64>::new();
    let mut b = Tape::<f64>::new();
    let x = a.param(Tensor::scalar(1.0));
    let _ = b.param(Tensor::scalar(1.0));
    assert!(matches!(b.backward(x), Err(Error::Usage(_))));

    let v = a.param(Tensor::zeros(&[2]));
    assert!(matches!(a.backward(v), Err(Error::Usage(_))));
}

fn lstm_params(n_in: usize, n: usize, zero: bool, seed: u64) -> [Tensor<f64>; 3] {
    if zero {
        let mut b = vec![0.0; 4 * n];
        b[n..2 * n].fill(1.0);
        [Tensor::zeros(&[n_in, 4 * n]), Tensor::zeros(&[n, 4 * n]), Tensor::new(&[4 * n], b).unwrap()]
    } else {
        [random(&[n_in, 4 * n], seed), random(&[n, 4 * n], seed + 1), random(&[4 * n], seed + 2)]
    }
}

fn lstm_once(c0: f64) -> (f64, f64) {
    let mut tape = Tape::<f64>::new();
    let [wx, wh, b] = lstm_params(1, 1, true, 0).map(|t| tape.param(t));
    let x = tape.constant(Tensor::zeros(&[1, 1]));
    let h = tape.constant(Tensor::zeros(&[1, 1]));
    let c = tape.constant(Tensor::full(&[1, 1], c0));
    let (h1, c1) = tape.lstm_cell(x, h, c, wx, wh, b).unwrap();
    (tape.value(h1).item(), tape.value(c1).item())
}

#[test]
fn lstm_cell_hand_evaluation() {
    assert_eq!(lstm_once(0.0), (0.0, 0.0));
    let (h, c) = lstm_once(1.0);
    // c' = sigmoid(1) * 1, h' = sigmoid(0) * tanh(c')
    let sig1 = 1.0 / (1.0 + (-1.0f64).exp());
    assert_abs_diff_eq!(c, sig1, epsilon = 1e-15);
    assert_abs_diff_eq!(h, 0.5 * sig1.tanh(), epsilon = 1e-15);
    assert_abs_diff_eq!(c, 0.7311, epsilon = 1e-4);
    assert_abs_diff_eq!(h, 0.31186, epsilon = 1e-5);
}

#[test]
fn lstm_cell_shape_errors() {
    let mut tape = Tape::<f64>::new();
    let [wx, wh, b] = lstm_params(3, 2, true, 0).map(|t| tape.param(t));
    let x = tape.constant(Tensor::zeros(&[1, 4]));
    let h = tape.constant(Tensor::zeros(&[1, 2]));
    let c = tape.constant(Tensor::zeros(&[1, 2]));
    assert!(matches!(tape.lstm_cell(x, h, c, wx, wh, b), Err(Error::Dimension { .. })));
}

#[test]
fn lstm_bptt_matches_finite_differences() {
    let (n_in, n, batch, steps) = (3, 4, 2, 5);
    let [wx, wh, b] = lstm_params(n_in, n, false, 33);
    let xs = random(&[steps * batch, n_in], 36);
    let inputs = [wx, wh, b, random(&[batch, n], 37), random(&[batch, n], 38), xs];
    let err = max_rel_error(&inputs, |tape, v| {
        let (mut h, mut c) = (v[3], v[4]);
        let mut outs: Vec<Var> = Vec::new();
        let x_rows = v[5];
        for s in 0..steps {
            let x_t = pick_rows(tape, x_rows, s * batch, batch);
            (h, c) = tape.lstm_cell(x_t, h, c, v[0], v[1], v[2]).unwrap();
            outs.push(h);
        }
        let all = tape.concat_cols(&outs).unwrap();
        weighted_sum(tape, all, 39)
    });
    assert!(err < 1e-4, "{err}");
}

// Rows [start, start + count) of a rank-2 variable, via transposed column slicing.
fn pick_rows(tape: &mut Tape<f64>, x: Var, start: usize, count: usize) -> Var {
    let (rows, cols) = {
        let s = tape.value(x).shape();
        (s[0], s[1])
    };
    let flat = tape.reshape(x, &[1, rows * cols]).unwrap();
    let part = tape.slice_cols(flat, start * cols, count * cols).unwrap();
    tape.reshape(part, &[count, cols]).unwrap()
}

#[test]
fn sobel_value_helper_matches_tape() {
    let x = random(&[1, 1, 6, 5], 40);
    let s = loss::sobel(&x).unwrap();
    assert_eq!(s.shape(), &[1, 2, 6, 5]);
}

fn elementwise_case(op: usize, shape: &[usize], seed: u64) -> f64 {
    let inputs = [random_away_from_zero(shape, seed, 0.05), random(shape, seed + 1)];
    max_rel_error(&inputs, |tape, v| {
        let y = match op {
            0 => tape.add(v[0], v[1]).unwrap(),
            1 => tape.sub(v[0], v[1]).unwrap(),
            2 => tape.mul(v[0], v[1]).unwrap(),
            3 => tape.relu(v[0]).unwrap(),
            4 => tape.tanh(v[0]).unwrap(),
            5 => tape.sigmoid(v[0]).unwrap(),
            _ => tape.scale(v[0], -1.7).unwrap(),
        };
        weighted_sum(tape, y, seed + 2)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn elementwise_gradients_agree_on_many_shapes(
        op in 0usize..7,
        shape in prop::sample::select(vec![vec![1usize, 5], vec![3, 4], vec![2, 3, 2, 2]]),
        seed in 0u64..1000,
    ) {
        let err = elementwise_case(op, &shape, seed);
        prop_assert!(err < 1e-5, "op {} shape {:?}: {}", op, shape, err);
    }

    #[test]
    fn structural_gradients_agree(m in 1usize..4, n in 1usize..5, seed in 0u64..1000) {
        let inputs = [random(&[m, n], seed), random(&[m, 2], seed + 1), random(&[1, n], seed + 2), random(&[n], seed + 3)];
        let err = max_rel_error(&inputs, |tape, v| {
            let cat = tape.concat_cols(&[v[0], v[1]]).unwrap();
            let sl = tape.slice_cols(cat, 1, n).unwrap();
            let br = tape.broadcast_rows(v[2], m).unwrap();
            let s = tape.add(sl, br).unwrap();
            let b = tape.add_row_bias(s, v[3]).unwrap();
            let nr = tape.normalize_rows(b).unwrap();
            let mean = tape.mean(nr).unwrap();
            let w = weighted_sum(tape, nr, seed);
            tape.add(mean, w).unwrap()
        });
        prop_assert!(err < 1e-5, "{}", err);
    }

    #[test]
    fn adjointness_holds(c_in in 1usize..3, c_out in 1usize..3, h in 2usize..7, s in 1usize..4, seed in 0u64..1000) {
        let h = h * s;
        let x = random(&[c_in, h, h], seed);
        let k = random(&[c_out, c_in, 3, 3], seed + 1);
        let cx = numcore::conv2d(&x, &k, s).unwrap();
        let y = random(cx.shape(), seed + 2);
        let ty = numcore::conv2d_transpose(&y, &k, s).unwrap();
        let (l, r) = (dot(&cx, &y), dot(&x, &ty));
        prop_assert!((l - r).abs() <= 1e-4 * l.abs().max(r.abs()).max(1e-12));
    }

    #[test]
    fn channel_bias_and_conv_chain(seed in 0u64..1000) {
        let inputs = [random(&[2, 2, 4, 4], seed), random(&[3, 2, 3, 3], seed + 1), random(&[3], seed + 2)];
        let err = max_rel_error(&inputs, |tape, v| {
            let y = tape.conv2d(v[0], v[1], 2).unwrap();
            let y = tape.add_channel_bias(y, v[2]).unwrap();
            weighted_sum(tape, y, seed + 3)
        });
        prop_assert!(err < 1e-5, "{}", err);
    }
}

#[test]
fn forward_outputs_stay_finite() {
    let mut tape = Tape::<f32>::new();
    let x = tape.constant(Tensor::from_fn(&[2, 2, 8, 8], |i| (i as f32 * 0.37).sin() * 50.0));
    let k = tape.param(Tensor::from_fn(&[3, 2, 3, 3], |i| (i as f32 * 0.11).cos()));
    let y = tape.conv2d(x, k, 2).unwrap();
    let y = tape.sigmoid(y).unwrap();
    assert!(tape.value(y).all_finite());
}
