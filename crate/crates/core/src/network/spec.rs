use serde::{Deserialize, Serialize};

use super::{ActivationSpec, EncodingSpec};
use crate::error::{Error, Result};

/// Per-branch width of a split layer built from a backbone of width `c`:
/// `floor(c / sqrt(n))`, at least 1. Computed in integers as the largest
/// `w` with `n * w^2 <= c^2`.
pub fn branch_width(c: usize, n: usize) -> usize {
    if n <= 1 {
        return c;
    }
    let (c2, n) = (c as u128 * c as u128, n as u128);
    let mut w = ((c2 as f64 / n as f64).sqrt()) as u128;
    while n * (w + 1) * (w + 1) <= c2 {
        w += 1;
    }
    while w > 0 && n * w * w > c2 {
        w -= 1;
    }
    (w as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerKind {
    Dense,
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerRole {
    Input,
    Hidden,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub role: LayerRole,
    pub in_width: usize,
    pub out_width: usize,
    /// Number of branches; 1 for dense layers.
    pub num_splits: usize,
    pub bias: bool,
}

impl LayerSpec {
    pub fn branches(&self) -> usize {
        match self.kind {
            LayerKind::Dense => 1,
            LayerKind::Split => self.num_splits,
        }
    }

    pub fn param_count(&self) -> usize {
        self.branches() * (self.in_width * self.out_width + if self.bias { self.out_width } else { 0 })
    }
}

fn default_true() -> bool {
    true
}

/// Architecture of a coordinate network.
///
/// Layers: an input layer (encoded input to trunk width), `hidden_layers`
/// trunk-to-trunk layers, and an affine output layer. With `num_splits >= 2`
/// every hidden layer becomes a split layer whose branches have width
/// [`branch_width`]`(backbone_width, num_splits)`; `split_input` additionally
/// splits the input layer (ignored for dense networks).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub d_in: usize,
    pub d_out: usize,
    pub backbone_width: usize,
    pub hidden_layers: usize,
    pub encoding: EncodingSpec,
    pub activation: ActivationSpec,
    /// 0 or 1 means the plain fully connected baseline.
    pub num_splits: usize,
    pub final_sigmoid: bool,
    /// Whether split branches carry their own bias.
    #[serde(default = "default_true")]
    pub split_bias: bool,
    #[serde(default)]
    pub split_input: bool,
}

/// Offsets of one branch inside the flat parameter vector. Weights are
/// stored row-major as `out_width x in_width`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchSlot {
    pub weight: usize,
    pub bias: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerLayout {
    pub spec: LayerSpec,
    pub branches: Vec<BranchSlot>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub layers: Vec<LayerLayout>,
    pub total: usize,
}

impl NetworkSpec {
    pub fn baseline(d_in: usize, d_out: usize, width: usize, hidden_layers: usize, activation: ActivationSpec) -> Self {
        NetworkSpec {
            d_in,
            d_out,
            backbone_width: width,
            hidden_layers,
            encoding: EncodingSpec::none(),
            activation,
            num_splits: 0,
            final_sigmoid: false,
            split_bias: true,
            split_input: false,
        }
    }

    pub fn with_splits(mut self, n: usize) -> Self {
        self.num_splits = n;
        self
    }

    pub fn with_split_input(mut self, on: bool) -> Self {
        self.split_input = on;
        self
    }

    pub fn with_encoding(mut self, encoding: EncodingSpec) -> Self {
        self.encoding = encoding;
        self
    }

    pub fn with_final_sigmoid(mut self, on: bool) -> Self {
        self.final_sigmoid = on;
        self
    }

    pub fn is_split(&self) -> bool {
        self.num_splits >= 2
    }

    /// Width of the hidden trunk.
    pub fn trunk_width(&self) -> usize {
        if self.is_split() {
            branch_width(self.backbone_width, self.num_splits)
        } else {
            self.backbone_width
        }
    }

    pub fn encoded_dim(&self) -> usize {
        self.encoding.output_dim(self.d_in)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_in == 0 || self.d_out == 0 {
            return Err(Error::config("input and output dimensions must be positive"));
        }
        if self.backbone_width == 0 {
            return Err(Error::config("backbone width must be positive"));
        }
        if self.is_split() {
            let max = (self.backbone_width as u128).pow(2);
            if self.num_splits as u128 > max {
                return Err(Error::config(format!(
                    "split number {} outside [2, {max}] for width {}",
                    self.num_splits, self.backbone_width
                )));
            }
        }
        self.activation.validate()
    }

    pub fn layers(&self) -> Vec<LayerSpec> {
        let t = self.trunk_width();
        let split = self.is_split();
        let mut layers = Vec::with_capacity(self.hidden_layers + 2);
        layers.push(if split && self.split_input {
            LayerSpec {
                kind: LayerKind::Split,
                role: LayerRole::Input,
                in_width: self.encoded_dim(),
                out_width: t,
                num_splits: self.num_splits,
                bias: self.split_bias,
            }
        } else {
            LayerSpec {
                kind: LayerKind::Dense,
                role: LayerRole::Input,
                in_width: self.encoded_dim(),
                out_width: t,
                num_splits: 1,
                bias: true,
            }
        });
        for _ in 0..self.hidden_layers {
            layers.push(if split {
                LayerSpec {
                    kind: LayerKind::Split,
                    role: LayerRole::Hidden,
                    in_width: t,
                    out_width: t,
                    num_splits: self.num_splits,
                    bias: self.split_bias,
                }
            } else {
                LayerSpec {
                    kind: LayerKind::Dense,
                    role: LayerRole::Hidden,
                    in_width: t,
                    out_width: t,
                    num_splits: 1,
                    bias: true,
                }
            });
        }
        layers.push(LayerSpec {
            kind: LayerKind::Dense,
            role: LayerRole::Output,
            in_width: t,
            out_width: self.d_out,
            num_splits: 1,
            bias: true,
        });
        layers
    }

    pub fn layout(&self) -> ParamLayout {
        let mut offset = 0;
        let layers = self
            .layers()
            .into_iter()
            .map(|spec| {
                let branches = (0..spec.branches())
                    .map(|_| {
                        let weight = offset;
                        offset += spec.in_width * spec.out_width;
                        let bias = spec.bias.then(|| {
                            let b = offset;
                            offset += spec.out_width;
                            b
                        });
                        BranchSlot { weight, bias }
                    })
                    .collect();
                LayerLayout { spec, branches }
            })
            .collect();
        ParamLayout { layers, total: offset }
    }

    pub fn param_count(&self) -> usize {
        param_count(self)
    }
}

/// Exact number of weights and biases.
pub fn param_count(spec: &NetworkSpec) -> usize {
    spec.layers().iter().map(LayerSpec::param_count).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_width_examples() {
        assert_eq!(branch_width(256, 2), 181);
        assert_eq!(branch_width(77, 1), 77);
        assert_eq!(branch_width(9, 2), 6);
        assert_eq!(branch_width(9, 3), 5);
        assert_eq!(branch_width(32, 2), 22);
        assert_eq!(branch_width(4, 4), 2);
        assert_eq!(branch_width(3, 100), 1);
    }

    #[test]
    fn branch_width_matches_float_formula() {
        for c in 1..300usize {
            for n in 2..40usize {
                let expect = ((c as f64) / (n as f64).sqrt()).floor().max(1.0) as usize;
                assert_eq!(branch_width(c, n), expect, "c={c} n={n}");
            }
        }
    }

    fn hidden_weights(c: usize, n: usize) -> usize {
        let spec = NetworkSpec::baseline(2, 1, c, 1, ActivationSpec::relu()).with_splits(n);
        let l = spec.layers()[1];
        l.branches() * l.in_width * l.out_width
    }

    #[test]
    fn hidden_layer_counts() {
        let base = NetworkSpec::baseline(2, 3, 256, 1, ActivationSpec::relu());
        assert_eq!(base.layers()[1].param_count(), 65792);
        let split = base.clone().with_splits(2);
        assert_eq!(split.layers()[1].param_count(), 65884);
        assert_eq!(hidden_weights(256, 2), 65522);
    }

    #[test]
    fn split_never_exceeds_baseline_weights() {
        for c in 1..=1024 {
            for n in 2..=16 {
                if n > c * c {
                    continue;
                }
                assert!(hidden_weights(c, n) <= c * c, "c={c} n={n}");
            }
        }
    }

    #[test]
    fn total_count_with_slack() {
        for c in [8, 32, 64, 256] {
            for n in [2, 3, 4, 8] {
                let base = NetworkSpec::baseline(2, 3, c, 3, ActivationSpec::sine(30.0));
                let split = base.clone().with_splits(n);
                let slack = (n * branch_width(c, n)).saturating_sub(c);
                assert!(param_count(&split) <= param_count(&base) + slack);
                assert_eq!(split.layout().total, param_count(&split));
            }
        }
    }

    #[test]
    fn validation() {
        let mut s = NetworkSpec::baseline(2, 1, 2, 1, ActivationSpec::relu()).with_splits(5);
        assert!(s.validate().is_err());
        s.num_splits = 4;
        assert!(s.validate().is_ok());
        // split_input has no effect on a dense network
        s.num_splits = 0;
        s.split_input = true;
        assert!(s.validate().is_ok());
        assert_eq!(s.layers()[0].kind, LayerKind::Dense);
    }

    #[test]
    fn split_input_layer() {
        let mut s = NetworkSpec::baseline(2, 1, 9, 1, ActivationSpec::sine(30.0)).with_splits(2);
        s.split_input = true;
        let l = s.layers();
        assert_eq!(l[0].kind, LayerKind::Split);
        assert_eq!((l[0].in_width, l[0].out_width), (2, 6));
    }
}
