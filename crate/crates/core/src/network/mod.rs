//! Coordinate networks built from dense and split layers.
//!
//! A split layer with `N` branches computes
//! `z = (W_1 x + b_1) * (W_2 x + b_2) * ... * (W_N x + b_N)` elementwise and
//! then applies the backbone activation, so every output is a degree-`N`
//! polynomial of the layer input.

mod activation;
mod encoding;
mod forward;
mod params;
mod spec;

pub use activation::{ActivationKind, ActivationSpec};
pub use encoding::{positional_encode, EncodingKind, EncodingSpec};
pub use forward::{backward, forward, predict, ForwardCache, LayerCache, CHUNK_ROWS};
pub use params::{init_network, Gradients, NetworkParams, VARIABLE_PERIODIC_BIAS_RANGE};
pub use spec::{
    branch_width, param_count, BranchSlot, LayerKind, LayerLayout, LayerRole, LayerSpec, NetworkSpec,
    ParamLayout,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{DenseMatrix, Prng};

    fn random_params(spec: &NetworkSpec, seed: u64, scale: f64) -> NetworkParams {
        let mut g = Prng::new(seed);
        NetworkParams {
            values: (0..spec.param_count()).map(|_| g.uniform(-scale, scale).unwrap()).collect(),
        }
    }

    fn random_batch(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut g = Prng::new(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| g.uniform(-1.0, 1.0).unwrap())
    }

    #[test]
    fn zero_network_outputs_zero() {
        let spec = NetworkSpec::baseline(2, 3, 8, 2, ActivationSpec::relu());
        let params = NetworkParams::zeros(&spec);
        let (out, _) = forward(&spec, &params, &random_batch(5, 2, 1)).unwrap();
        assert!(out.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_split_is_quadratic() {
        let mut spec = NetworkSpec::baseline(1, 1, 2, 0, ActivationSpec::identity()).with_splits(2);
        spec.split_input = true;
        spec.split_bias = false;
        // input layer: two branches with weight 1, output layer: weight 1, bias 0
        let params = NetworkParams { values: vec![1.0, 1.0, 1.0, 0.0] };
        let batch = DenseMatrix::from_vec(1, 1, vec![3.0]).unwrap();
        let (out, cache) = forward(&spec, &params, &batch).unwrap();
        assert_eq!(cache.layer_pre(0)[(0, 0)], 9.0);
        assert_eq!(out[(0, 0)], 9.0);
    }

    #[test]
    fn scalar_split_gradient_by_hand() {
        let mut spec = NetworkSpec::baseline(1, 1, 2, 0, ActivationSpec::identity()).with_splits(2);
        spec.split_input = true;
        spec.split_bias = false;
        let (w1, w2, x) = (0.7, -1.3, 2.5);
        let params = NetworkParams { values: vec![w1, w2, 1.0, 0.0] };
        let batch = DenseMatrix::from_vec(1, 1, vec![x]).unwrap();
        let (_, cache) = forward(&spec, &params, &batch).unwrap();
        let (g, dx) = backward(&spec, &params, &cache, &DenseMatrix::from_vec(1, 1, vec![1.0]).unwrap()).unwrap();
        assert!((g.values[0] - x * (w2 * x)).abs() < 1e-15);
        assert!((g.values[1] - x * (w1 * x)).abs() < 1e-15);
        assert!((dx[(0, 0)] - 2.0 * w1 * w2 * x).abs() < 1e-14);
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let spec = NetworkSpec::baseline(2, 2, 6, 2, ActivationSpec::sine(30.0)).with_splits(3);
        let params = init_network(&spec, 8).unwrap();
        let batch = random_batch(7, 2, 2);
        let (_, cache) = forward(&spec, &params, &batch).unwrap();
        let (g, dx) = backward(&spec, &params, &cache, &DenseMatrix::zeros(7, 2)).unwrap();
        assert!(g.values.iter().all(|&v| v == 0.0));
        assert!(dx.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic_and_replayable() {
        let spec = NetworkSpec::baseline(2, 3, 10, 2, ActivationSpec::gauss(3.0)).with_splits(2);
        let params = random_params(&spec, 3, 0.5);
        let batch = random_batch(600, 2, 4);
        let (a, cache) = forward(&spec, &params, &batch).unwrap();
        let (b, _) = forward(&spec, &params, &batch).unwrap();
        assert_eq!(a, b);
        assert_eq!(predict(&spec, &params, &batch).unwrap(), a);
        // replay from the cached input of the last layer
        let last = cache.num_layers() - 1;
        let input = cache.layer_input(last);
        let w = params.weights(&spec, last, 0);
        let bias = params.bias(&spec, last, 0).unwrap();
        for r in 0..batch.rows() {
            for o in 0..3 {
                let mut z = bias[o];
                for i in 0..input.cols() {
                    z += input[(r, i)] * w[o * input.cols() + i];
                }
                assert_eq!(z.to_bits(), a[(r, o)].to_bits());
            }
        }
    }

    #[test]
    fn branch_permutation_invariance() {
        let spec = NetworkSpec::baseline(2, 1, 12, 2, ActivationSpec::relu()).with_splits(3);
        let params = random_params(&spec, 5, 0.6);
        let mut permuted = params.clone();
        let layout = spec.layout();
        for layer in layout.layers.iter().filter(|l| l.spec.kind == LayerKind::Split) {
            // rotate branches 0 -> 1 -> 2 -> 0
            let size = layer.spec.param_count() / 3;
            let start = layer.branches[0].weight;
            let block = params.values[start..start + 3 * size].to_vec();
            for b in 0..3 {
                let dst = start + ((b + 1) % 3) * size;
                permuted.values[dst..dst + size].copy_from_slice(&block[b * size..(b + 1) * size]);
            }
        }
        let batch = random_batch(40, 2, 6);
        let a = predict(&spec, &params, &batch).unwrap();
        let b = predict(&spec, &permuted, &batch).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn shape_errors() {
        let spec = NetworkSpec::baseline(2, 1, 4, 1, ActivationSpec::relu());
        let params = NetworkParams::zeros(&spec);
        assert!(forward(&spec, &params, &DenseMatrix::zeros(3, 3)).is_err());
        let (_, cache) = forward(&spec, &params, &DenseMatrix::zeros(3, 2)).unwrap();
        let other = NetworkSpec::baseline(2, 1, 5, 1, ActivationSpec::relu());
        assert!(backward(&other, &NetworkParams::zeros(&other), &cache, &DenseMatrix::zeros(3, 1)).is_err());
        assert!(backward(&spec, &params, &cache, &DenseMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn non_finite_output_names_layer() {
        let spec = NetworkSpec::baseline(1, 1, 2, 1, ActivationSpec::identity());
        let mut params = NetworkParams::zeros(&spec);
        params.values[0] = 1e300;
        params.values[4] = 1e300;
        params.values[6] = 1e300;
        let err = forward(&spec, &params, &DenseMatrix::from_vec(1, 1, vec![1e300]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { layer: 0, .. }), "{err}");
    }

    use crate::Error;
}
