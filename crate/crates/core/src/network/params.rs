use serde::{Deserialize, Serialize};

use super::{ActivationKind, LayerRole, NetworkSpec};
use crate::error::{Error, Result};
use crate::math::{InitScheme, Prng};

/// Flat parameter store; the layout comes from [`NetworkSpec::layout`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub values: Vec<f64>,
}

/// One partial derivative per parameter, same layout as [`NetworkParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradients {
    pub values: Vec<f64>,
}

impl NetworkParams {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        NetworkParams { values: vec![0.0; spec.param_count()] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check(&self, spec: &NetworkSpec) -> Result<()> {
        let expected = spec.param_count();
        if self.values.len() != expected {
            return Err(Error::shape(format!(
                "parameter vector has {} entries, network needs {expected}",
                self.values.len()
            )));
        }
        Ok(())
    }

    /// Weight matrix (row-major `out x in`) of one branch.
    pub fn weights(&self, spec: &NetworkSpec, layer: usize, branch: usize) -> &[f64] {
        let layout = spec.layout();
        let l = &layout.layers[layer];
        let off = l.branches[branch].weight;
        &self.values[off..off + l.spec.in_width * l.spec.out_width]
    }

    pub fn weights_mut(&mut self, spec: &NetworkSpec, layer: usize, branch: usize) -> &mut [f64] {
        let layout = spec.layout();
        let l = &layout.layers[layer];
        let off = l.branches[branch].weight;
        &mut self.values[off..off + l.spec.in_width * l.spec.out_width]
    }

    pub fn bias(&self, spec: &NetworkSpec, layer: usize, branch: usize) -> Option<&[f64]> {
        let layout = spec.layout();
        let l = &layout.layers[layer];
        l.branches[branch].bias.map(|off| &self.values[off..off + l.spec.out_width])
    }

    pub fn bias_mut(&mut self, spec: &NetworkSpec, layer: usize, branch: usize) -> Option<&mut [f64]> {
        let layout = spec.layout();
        let l = &layout.layers[layer];
        let w = l.spec.out_width;
        l.branches[branch].bias.map(move |off| &mut self.values[off..off + w])
    }
}

impl Gradients {
    pub fn zeros(len: usize) -> Self {
        Gradients { values: vec![0.0; len] }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Bias range for the variable-periodic backbone.
pub const VARIABLE_PERIODIC_BIAS_RANGE: f64 = 1.0;

/// Initial parameters.
///
/// Sine and variable-periodic backbones use the sine-network first-layer
/// scheme on layer 0 and the hidden scheme everywhere else (fan-in of a
/// split branch is the branch width). All other backbones use LeCun uniform.
/// Variable-periodic biases are `U(-1, 1)`; all other biases start at 0.
/// Values are drawn layer by layer, branch by branch, weights before bias.
pub fn init_network(spec: &NetworkSpec, seed: u64) -> Result<NetworkParams> {
    spec.validate()?;
    let mut prng = Prng::new(seed);
    let layout = spec.layout();
    let mut values = vec![0.0; layout.total];
    let periodic = matches!(spec.activation.kind, ActivationKind::Sine | ActivationKind::VariablePeriodic);
    let omega = spec.activation.omega;
    for layer in &layout.layers {
        let fan_in = layer.spec.in_width;
        let scheme = match (periodic, layer.spec.role) {
            (true, LayerRole::Input) => InitScheme::SirenFirst,
            (true, _) => InitScheme::SirenHidden,
            (false, _) => InitScheme::Lecun,
        };
        let bound = scheme.bound(fan_in, omega)?;
        for slot in &layer.branches {
            let n = layer.spec.in_width * layer.spec.out_width;
            for v in &mut values[slot.weight..slot.weight + n] {
                *v = prng.uniform(-bound, bound)?;
            }
            if let Some(b) = slot.bias {
                if spec.activation.kind == ActivationKind::VariablePeriodic {
                    for v in &mut values[b..b + layer.spec.out_width] {
                        *v = prng.uniform(-VARIABLE_PERIODIC_BIAS_RANGE, VARIABLE_PERIODIC_BIAS_RANGE)?;
                    }
                }
            }
        }
    }
    Ok(NetworkParams { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::ActivationSpec;

    #[test]
    fn deterministic() {
        let spec = NetworkSpec::baseline(2, 3, 16, 2, ActivationSpec::sine(30.0)).with_splits(2);
        assert_eq!(init_network(&spec, 4).unwrap(), init_network(&spec, 4).unwrap());
        assert_ne!(init_network(&spec, 4).unwrap(), init_network(&spec, 5).unwrap());
    }

    #[test]
    fn relu_within_lecun_bound() {
        let spec = NetworkSpec::baseline(2, 3, 16, 2, ActivationSpec::relu());
        let p = init_network(&spec, 1).unwrap();
        for (l, layer) in spec.layers().iter().enumerate() {
            let bound = (3.0 / layer.in_width as f64).sqrt();
            assert!(p.weights(&spec, l, 0).iter().all(|w| w.abs() <= bound));
            assert!(p.bias(&spec, l, 0).unwrap().iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn sine_hidden_bound() {
        let spec = NetworkSpec::baseline(2, 1, 256, 1, ActivationSpec::sine(30.0)).with_splits(2);
        let p = init_network(&spec, 1).unwrap();
        let bound = (6.0f64 / 181.0).sqrt() / 30.0;
        assert!((bound - 6.07e-3).abs() < 1e-5);
        for b in 0..2 {
            let w = p.weights(&spec, 1, b);
            assert!(w.iter().all(|v| v.abs() <= bound));
            // the bound is actually approached
            assert!(w.iter().any(|v| v.abs() > 0.9 * bound));
        }
        assert!(p.weights(&spec, 0, 0).iter().all(|v| v.abs() <= 0.5));
    }

    #[test]
    fn variable_periodic_biases() {
        let spec = NetworkSpec::baseline(2, 1, 8, 1, ActivationSpec::variable_periodic(30.0));
        let p = init_network(&spec, 3).unwrap();
        let b = p.bias(&spec, 0, 0).unwrap();
        assert!(b.iter().all(|v| v.abs() <= 1.0));
        assert!(b.iter().any(|v| *v != 0.0));
    }
}
