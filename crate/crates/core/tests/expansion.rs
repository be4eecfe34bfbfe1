//! Split-layer pre-activations against their symbolic polynomial expansion.

use split_inr::analysis::split_layer_polynomials;
use split_inr::math::{DenseMatrix, Prng};
use split_inr::network::{branch_width, forward, init_network, ActivationSpec, NetworkSpec};

/// Smallest backbone width whose branch width is `w` for `n` splits.
fn width_for(w: usize, n: usize) -> usize {
    (1..).find(|&c| branch_width(c, n) == w && n <= c * c).unwrap()
}

#[test]
fn split_forward_matches_expansion() {
    for w in 1..=4 {
        for n in 2..=3 {
            let c = width_for(w, n);
            let mut spec = NetworkSpec::baseline(w, 1, c, 1, ActivationSpec::identity()).with_splits(n);
            spec.split_bias = false;
            let params = init_network(&spec, (w * 10 + n) as u64).unwrap();
            let polys = split_layer_polynomials(&spec, &params, 1).unwrap();
            assert_eq!(polys.len(), w);
            let mut g = Prng::new(7);
            let x = DenseMatrix::from_fn(100, w, |_, _| g.uniform(-1.0, 1.0).unwrap());
            let (_, cache) = forward(&spec, &params, &x).unwrap();
            let input = cache.layer_input(1);
            let pre = cache.layer_pre(1);
            for s in 0..100 {
                for (i, p) in polys.iter().enumerate() {
                    let sym = p.evaluate(input.row(s));
                    let num = pre[(s, i)];
                    assert!((sym - num).abs() <= 1e-10 * num.abs().max(1.0), "w={w} n={n}: {sym} vs {num}");
                }
            }
        }
    }
}

#[test]
fn biased_layers_are_refused() {
    let spec = NetworkSpec::baseline(2, 1, 4, 1, ActivationSpec::identity()).with_splits(2);
    let params = init_network(&spec, 0).unwrap();
    assert!(split_layer_polynomials(&spec, &params, 1).is_err());
    assert!(split_layer_polynomials(&spec, &params, 0).is_err());
}
