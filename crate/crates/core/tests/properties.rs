//! Randomized properties of the numeric building blocks, each against an
//! independent oracle.

use proptest::prelude::*;
use stemcast_core::metrics::{evaluate_with_bins, histogram};
use stemcast_core::ndmath::{softmax_in_place, Tape, Tensor};
use stemcast_core::wavelet::{decompose, min_signal_len, reconstruct, Extension, FilterBank};

fn extension() -> impl Strategy<Value = Extension> {
    prop_oneof![Just(Extension::Symmetric), Just(Extension::Periodic)]
}

fn signal(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0..100.0f64, len)
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Tensor> {
    prop::collection::vec(-3.0..3.0f64, rows * cols).prop_map(move |d| Tensor::matrix(rows, cols, d).unwrap())
}

proptest! {
    #[test]
    fn wavelet_round_trip(x in signal(16..1025), ext in extension(), levels in 1usize..5) {
        let bank = FilterBank::db2();
        prop_assume!(x.len() >= min_signal_len(bank.len(), levels, ext));
        let dec = decompose(&x, &bank, levels, ext).unwrap();
        let back = reconstruct(&dec, &bank).unwrap();
        prop_assert_eq!(back.len(), x.len());
        let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-10, "max error {err}");
    }

    #[test]
    fn wavelet_is_linear(
        pair in (16usize..300).prop_flat_map(|n| (signal(n..n + 1), signal(n..n + 1))),
        a in -2.0..2.0f64,
        ext in extension(),
    ) {
        let bank = FilterBank::db2();
        let (x, y) = pair;
        let combo: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + v).collect();
        let dx = decompose(&x, &bank, 2, ext).unwrap();
        let dy = decompose(&y, &bank, 2, ext).unwrap();
        let dc = decompose(&combo, &bank, 2, ext).unwrap();
        for ((cx, cy), cc) in dx.coefficients().zip(dy.coefficients()).zip(dc.coefficients()) {
            prop_assert!((a * cx + cy - cc).abs() < 1e-9);
        }
    }

    #[test]
    fn softmax_is_a_distribution(row in prop::collection::vec(-50.0..50.0f64, 1..40), shift in -100.0..100.0f64) {
        let mut w = row.clone();
        softmax_in_place(&mut w);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|&v| v > 0.0));
        // shift invariance
        let mut shifted: Vec<f64> = row.iter().map(|v| v + shift).collect();
        softmax_in_place(&mut shifted);
        for (a, b) in w.iter().zip(&shifted) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        // order preserving against a direct exp-ratio oracle
        let total: f64 = row.iter().map(|v| (v - 50.0).exp()).sum();
        for (v, p) in row.iter().zip(&w) {
            prop_assert!((p - (v - 50.0).exp() / total).abs() < 1e-12);
        }
    }

    #[test]
    fn matmul_matches_triple_loop(
        (a, b, bt) in (1usize..7, 1usize..7, 1usize..7)
            .prop_flat_map(|(m, k, n)| (matrix(m, k), matrix(k, n), matrix(n, k)))
    ) {
        let mut tape = Tape::new();
        let (va, vb, vbt) = (tape.constant(a.clone()), tape.constant(b.clone()), tape.constant(bt.clone()));
        let ab = tape.matmul(va, vb).unwrap();
        let abt = tape.matmul_t(va, vbt).unwrap();
        let (m, k, n) = (a.rows(), a.cols(), b.cols());
        for i in 0..m {
            for j in 0..n {
                let plain: f64 = (0..k).map(|p| a.get2(i, p) * b.get2(p, j)).sum();
                let trans: f64 = (0..k).map(|p| a.get2(i, p) * bt.get2(j, p)).sum();
                prop_assert!((tape.value(ab).get2(i, j) - plain).abs() < 1e-12);
                prop_assert!((tape.value(abt).get2(i, j) - trans).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn backward_is_linear_in_the_loss(x in matrix(3, 4), w in matrix(2, 4), c in 0.1..5.0f64) {
        // d(c * sum(tanh(x W^T)))/dW == c * d(sum(tanh(x W^T)))/dW
        let grad = |scale: f64| {
            let mut tape = Tape::new();
            let vx = tape.constant(x.clone());
            let vw = tape.leaf(w.clone().with_requires_grad(true));
            let vc = tape.constant(Tensor::filled(&[3, 2], scale));
            let h = tape.matmul_t(vx, vw).unwrap();
            let h = tape.tanh(h).unwrap();
            let h = tape.mul(h, vc).unwrap();
            let loss = tape.sum(h).unwrap();
            tape.backward(loss).unwrap();
            tape.grad(vw).unwrap().to_vec()
        };
        let (g1, gc) = (grad(1.0), grad(c));
        for (a, b) in g1.iter().zip(&gc) {
            prop_assert!((c * a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn metrics_match_naive_oracle(
        pairs in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 1..60),
    ) {
        let (actual, predicted): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let eps = 1e-3;
        let r = evaluate_with_bins(&actual, &predicted, eps, 10).unwrap();
        let n = actual.len() as f64;
        let mse_abs = actual.iter().zip(&predicted).map(|(a, f)| (a - f) * (a - f)).sum::<f64>() / n;
        let mae_abs = actual.iter().zip(&predicted).map(|(a, f)| (a - f).abs()).sum::<f64>() / n;
        let kept: Vec<(f64, f64)> = actual.iter().zip(&predicted).filter(|(a, _)| a.abs() >= eps).map(|(a, f)| (*a, *f)).collect();
        prop_assert_eq!(r.n_skipped, actual.len() - kept.len());
        prop_assert!((r.mse_abs - mse_abs).abs() < 1e-12 * (1.0 + mse_abs));
        prop_assert!((r.mae_abs - mae_abs).abs() < 1e-12 * (1.0 + mae_abs));
        prop_assert!((r.rmse_abs - mse_abs.sqrt()).abs() < 1e-12 * (1.0 + mse_abs));
        if !kept.is_empty() {
            let k = kept.len() as f64;
            let mse_rel = kept.iter().map(|(a, f)| ((a - f) / a).powi(2)).sum::<f64>() / k;
            let mae_rel = kept.iter().map(|(a, f)| ((a - f) / a).abs()).sum::<f64>() / k;
            prop_assert!((r.mse_rel - mse_rel).abs() <= 1e-12 * (1.0 + mse_rel));
            prop_assert!((r.mae_rel - mae_rel).abs() <= 1e-12 * (1.0 + mae_rel));
        }
    }

    #[test]
    fn absolute_metrics_scale_with_data(
        pairs in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 1..40),
        s in 0.5..4.0f64,
    ) {
        let (actual, predicted): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let scaled = |v: &[f64]| v.iter().map(|x| x * s).collect::<Vec<f64>>();
        let r = evaluate_with_bins(&actual, &predicted, 1e-3, 5).unwrap();
        let rs = evaluate_with_bins(&scaled(&actual), &scaled(&predicted), 1e-3 * s, 5).unwrap();
        prop_assert!((rs.mae_abs - s * r.mae_abs).abs() < 1e-9 * (1.0 + rs.mae_abs));
        prop_assert!((rs.rmse_abs - s * r.rmse_abs).abs() < 1e-9 * (1.0 + rs.rmse_abs));
        // relative measures are scale free
        if r.mae_rel.is_finite() {
            prop_assert!((rs.mae_rel - r.mae_rel).abs() < 1e-9 * (1.0 + r.mae_rel));
        }
    }

    #[test]
    fn histogram_matches_brute_force(values in prop::collection::vec(-5.0..5.0f64, 1..200), bins in 1usize..30) {
        let h = histogram(&values, bins).unwrap();
        prop_assert_eq!(h.edges.len(), bins + 1);
        prop_assert_eq!(h.counts.iter().sum::<usize>(), values.len());
        prop_assert!(h.edges.windows(2).all(|e| e[0] < e[1]));
        for (b, &count) in h.counts.iter().enumerate() {
            let (lo, hi) = (h.edges[b], h.edges[b + 1]);
            let last = b + 1 == bins;
            let expected = values.iter().filter(|&&v| v >= lo && (v < hi || (last && v <= hi))).count();
            prop_assert_eq!(count, expected, "bin {}", b);
        }
    }
}

#[test]
fn wavelet_round_trip_batch_of_200() {
    use rand::{Rng, SeedableRng};
    let bank = FilterBank::db2();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for i in 0..200 {
        let n = rng.random_range(16..=1024);
        let ext = if i % 2 == 0 {
            Extension::Symmetric
        } else {
            Extension::Periodic
        };
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dec = decompose(&x, &bank, 2, ext).unwrap();
        let back = reconstruct(&dec, &bank).unwrap();
        worst = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(worst, f64::max);
    }
    assert!(worst < 1e-10, "{worst}");
}
