use split_inr::analysis::{finite_difference_gradients, max_relative_error, FD_DEFAULT_STEP};
use split_inr::math::{DenseMatrix, Prng};
use split_inr::network::{backward, forward, init_network, ActivationKind, ActivationSpec, EncodingSpec, NetworkSpec};
use split_inr::training::{bce_loss, mse_loss};

fn batch(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut g = Prng::new(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| g.uniform(-1.0, 1.0).unwrap())
}

fn specs(kind: ActivationKind) -> Vec<NetworkSpec> {
    let act = ActivationSpec::new(kind);
    let base = NetworkSpec::baseline(2, 1, 6, 2, act);
    let mut split_in = base.clone().with_splits(2);
    split_in.split_input = true;
    vec![base.clone(), base.clone().with_splits(2), base.clone().with_splits(3), split_in]
}

/// Analytic gradients of an MSE loss against central differences.
fn check(spec: &NetworkSpec, seed: u64) -> f64 {
    assert!(spec.param_count() <= 500, "{} params", spec.param_count());
    // jitter the initialization so no unit sits exactly on a relu kink
    let mut params = init_network(spec, seed).unwrap();
    let mut g = Prng::new(seed + 30);
    for v in &mut params.values {
        *v += g.uniform(-0.1, 0.1).unwrap();
    }
    let x = batch(5, spec.d_in, seed + 10);
    let y = batch(5, spec.d_out, seed + 20);
    let (out, cache) = forward(spec, &params, &x).unwrap();
    let (_, d_out) = mse_loss(&out, &y).unwrap();
    let (grads, _) = backward(spec, &params, &cache, &d_out).unwrap();
    let loss = |o: &DenseMatrix| mse_loss(o, &y).map(|r| r.0);
    let fd = finite_difference_gradients(spec, &params, &x, &loss, FD_DEFAULT_STEP).unwrap();
    let scale = grads.max_abs().max(1e-12);
    max_relative_error(&grads.values, &fd.values, 1e-3 * scale)
}

#[test]
fn every_activation_dense_and_split() {
    for kind in ActivationKind::ALL {
        for (k, spec) in specs(kind).iter().enumerate() {
            for seed in 0..2 {
                let err = check(spec, seed);
                assert!(err < 1e-5, "{} variant {k} seed {seed}: rel err {err:.3e}", kind.name());
            }
        }
    }
}

#[test]
fn positional_encoding_and_sigmoid_head() {
    let act = ActivationSpec::relu();
    for splits in [0, 2] {
        let spec = NetworkSpec::baseline(2, 1, 5, 1, act).with_encoding(EncodingSpec::positional(2)).with_splits(splits);
        assert!(check(&spec, 3) < 1e-5);
        let spec = spec.with_final_sigmoid(true);
        let params = init_network(&spec, 4).unwrap();
        let x = batch(6, 2, 1);
        let labels = DenseMatrix::from_vec(6, 1, vec![0.0, 1.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        let (out, cache) = forward(&spec, &params, &x).unwrap();
        let (_, d_out) = bce_loss(&out, &labels).unwrap();
        let (grads, _) = backward(&spec, &params, &cache, &d_out).unwrap();
        let loss = |o: &DenseMatrix| bce_loss(o, &labels).map(|r| r.0);
        let fd = finite_difference_gradients(&spec, &params, &x, &loss, FD_DEFAULT_STEP).unwrap();
        assert!(max_relative_error(&grads.values, &fd.values, 1e-3 * grads.max_abs()) < 1e-5);
    }
}

#[test]
fn zero_output_gradient_gives_zero_gradients() {
    for spec in specs(ActivationKind::Sine) {
        let params = init_network(&spec, 0).unwrap();
        let x = batch(4, 2, 0);
        let (_, cache) = forward(&spec, &params, &x).unwrap();
        let (g, dx) = backward(&spec, &params, &cache, &DenseMatrix::zeros(4, 1)).unwrap();
        assert_eq!(g.max_abs(), 0.0);
        assert!(dx.as_slice().iter().all(|&v| v == 0.0));
    }
}
