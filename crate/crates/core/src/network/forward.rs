//! Batched forward evaluation and reverse-mode gradients.
//!
//! A batch is processed in fixed chunks of [`CHUNK_ROWS`] samples. Chunks
//! are independent during the forward pass; in the backward pass each chunk
//! produces a partial gradient and the partials are summed in chunk order,
//! so the result never depends on how many workers ran.

use super::activation::sigmoid;
use super::{Gradients, LayerKind, LayerLayout, LayerRole, NetworkParams, NetworkSpec};
use crate::error::{Error, Result};
use crate::math::{axpy, par, DenseMatrix};

pub const CHUNK_ROWS: usize = 256;

/// Per-layer values kept for the backward pass (one chunk of samples).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerCache {
    /// Affine branch outputs `a_n` (split layers only), each `rows x out`.
    pub branches: Vec<Vec<f64>>,
    /// Pre-activation `rows x out`.
    pub pre: Vec<f64>,
    /// Post-activation `rows x out`.
    pub post: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
struct ChunkCache {
    rows: usize,
    coords: Vec<f64>,
    encoded: Vec<f64>,
    layers: Vec<LayerCache>,
}

/// Everything the backward pass needs, for every sample of the batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    shapes: Vec<(usize, usize, usize)>,
    d_in: usize,
    batch: usize,
    chunks: Vec<ChunkCache>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.batch
    }

    pub fn num_layers(&self) -> usize {
        self.shapes.len()
    }

    fn gather(&self, width: usize, pick: impl Fn(&ChunkCache) -> &[f64]) -> DenseMatrix {
        let mut data = Vec::with_capacity(self.batch * width);
        for c in &self.chunks {
            data.extend_from_slice(pick(c));
        }
        DenseMatrix::from_vec(self.batch, width, data).expect("cache shapes are consistent")
    }

    /// Input to `layer` for the whole batch (the encoded coordinates for layer 0).
    pub fn layer_input(&self, layer: usize) -> DenseMatrix {
        let width = self.shapes[layer].0;
        if layer == 0 {
            self.gather(width, |c| &c.encoded)
        } else {
            self.gather(width, |c| &c.layers[layer - 1].post)
        }
    }

    pub fn layer_pre(&self, layer: usize) -> DenseMatrix {
        self.gather(self.shapes[layer].1, |c| &c.layers[layer].pre)
    }

    pub fn layer_post(&self, layer: usize) -> DenseMatrix {
        self.gather(self.shapes[layer].1, |c| &c.layers[layer].post)
    }

    /// Affine output of one branch of a split layer.
    pub fn branch_output(&self, layer: usize, branch: usize) -> Option<DenseMatrix> {
        if branch >= self.shapes[layer].2 || self.chunks.first()?.layers[layer].branches.is_empty() {
            return None;
        }
        Some(self.gather(self.shapes[layer].1, |c| &c.layers[layer].branches[branch]))
    }
}

struct PreparedBranch {
    /// Transposed weights, `in x out`.
    wt: Vec<f64>,
    bias: Option<Vec<f64>>,
}

struct Prepared {
    layers: Vec<(LayerLayout, Vec<PreparedBranch>)>,
}

fn prepare(spec: &NetworkSpec, params: &NetworkParams) -> Result<Prepared> {
    spec.validate()?;
    params.check(spec)?;
    let layout = spec.layout();
    let layers = layout
        .layers
        .into_iter()
        .map(|l| {
            let (inw, outw) = (l.spec.in_width, l.spec.out_width);
            let branches = l
                .branches
                .iter()
                .map(|slot| {
                    let w = &params.values[slot.weight..slot.weight + inw * outw];
                    let mut wt = vec![0.0; inw * outw];
                    for o in 0..outw {
                        for i in 0..inw {
                            wt[i * outw + o] = w[o * inw + i];
                        }
                    }
                    let bias = slot.bias.map(|b| params.values[b..b + outw].to_vec());
                    PreparedBranch { wt, bias }
                })
                .collect();
            (l, branches)
        })
        .collect();
    Ok(Prepared { layers })
}

/// `out[r] = bias + sum_i x[r][i] * W[:, i]`, accumulated in input order.
fn affine(x: &[f64], rows: usize, inw: usize, branch: &PreparedBranch, outw: usize, out: &mut [f64]) {
    for r in 0..rows {
        let row = &mut out[r * outw..(r + 1) * outw];
        match &branch.bias {
            Some(b) => row.copy_from_slice(b),
            None => row.fill(0.0),
        }
        let xr = &x[r * inw..(r + 1) * inw];
        for (i, &xi) in xr.iter().enumerate() {
            if xi != 0.0 {
                axpy(row, xi, &branch.wt[i * outw..(i + 1) * outw]);
            }
        }
    }
}

fn forward_chunk(spec: &NetworkSpec, prep: &Prepared, coords: &[f64], rows: usize) -> Result<ChunkCache> {
    let enc_dim = spec.encoded_dim();
    let mut encoded = Vec::with_capacity(rows * enc_dim);
    for r in 0..rows {
        spec.encoding.encode_into(&coords[r * spec.d_in..(r + 1) * spec.d_in], &mut encoded);
    }
    let mut layers: Vec<LayerCache> = Vec::with_capacity(prep.layers.len());
    for (idx, (layout, branches)) in prep.layers.iter().enumerate() {
        let ls = layout.spec;
        let input: &[f64] = if idx == 0 { &encoded } else { &layers[idx - 1].post };
        let n = rows * ls.out_width;
        let mut pre = vec![0.0; n];
        let mut branch_out = Vec::new();
        match ls.kind {
            LayerKind::Dense => affine(input, rows, ls.in_width, &branches[0], ls.out_width, &mut pre),
            LayerKind::Split => {
                for (b, branch) in branches.iter().enumerate() {
                    let mut a = vec![0.0; n];
                    affine(input, rows, ls.in_width, branch, ls.out_width, &mut a);
                    if b == 0 {
                        pre.copy_from_slice(&a);
                    } else {
                        for (p, v) in pre.iter_mut().zip(&a) {
                            *p *= v;
                        }
                    }
                    branch_out.push(a);
                }
            }
        }
        let post: Vec<f64> = match ls.role {
            LayerRole::Output if spec.final_sigmoid => pre.iter().map(|&z| sigmoid(z)).collect(),
            LayerRole::Output => pre.clone(),
            _ => pre.iter().map(|&z| spec.activation.apply(z)).collect(),
        };
        if let Some(bad) = post.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                layer: idx,
                detail: format!("output {} of a {:?} layer is {}", bad % ls.out_width, ls.role, post[bad]),
            });
        }
        layers.push(LayerCache { branches: branch_out, pre, post });
    }
    Ok(ChunkCache { rows, coords: coords.to_vec(), encoded, layers })
}

fn check_batch(spec: &NetworkSpec, batch: &DenseMatrix) -> Result<()> {
    if batch.cols() != spec.d_in {
        return Err(Error::shape(format!(
            "batch has {} coordinate columns, network expects {}",
            batch.cols(),
            spec.d_in
        )));
    }
    Ok(())
}

fn run_chunks<T: Send>(
    batch: &DenseMatrix,
    f: impl Fn(&[f64], usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    let n = batch.rows();
    let cols = batch.cols();
    let chunks = n.div_ceil(CHUNK_ROWS);
    par::map_indexed(chunks, |c| {
        let lo = c * CHUNK_ROWS;
        let hi = (lo + CHUNK_ROWS).min(n);
        f(&batch.as_slice()[lo * cols..hi * cols], hi - lo)
    })
    .into_iter()
    .collect()
}

/// Evaluates the network on every row of `batch` (`B x d_in`) and keeps the
/// intermediate values needed by [`backward`].
pub fn forward(spec: &NetworkSpec, params: &NetworkParams, batch: &DenseMatrix) -> Result<(DenseMatrix, ForwardCache)> {
    check_batch(spec, batch)?;
    let prep = prepare(spec, params)?;
    let chunks = run_chunks(batch, |coords, rows| forward_chunk(spec, &prep, coords, rows))?;
    let mut out = Vec::with_capacity(batch.rows() * spec.d_out);
    for c in &chunks {
        out.extend_from_slice(&c.layers.last().expect("network has an output layer").post);
    }
    let shapes = prep
        .layers
        .iter()
        .map(|(l, b)| (l.spec.in_width, l.spec.out_width, b.len()))
        .collect();
    let cache = ForwardCache { shapes, d_in: spec.d_in, batch: batch.rows(), chunks };
    Ok((DenseMatrix::from_vec(batch.rows(), spec.d_out, out)?, cache))
}

/// Forward pass without retaining the cache; suited to large evaluation grids.
pub fn predict(spec: &NetworkSpec, params: &NetworkParams, batch: &DenseMatrix) -> Result<DenseMatrix> {
    check_batch(spec, batch)?;
    let prep = prepare(spec, params)?;
    let parts = run_chunks(batch, |coords, rows| {
        let c = forward_chunk(spec, &prep, coords, rows)?;
        Ok(c.layers.into_iter().last().expect("network has an output layer").post)
    })?;
    DenseMatrix::from_vec(batch.rows(), spec.d_out, parts.concat())
}

/// Accumulates the gradients of one affine map and propagates `d_z` to its input.
#[allow(clippy::too_many_arguments)]
fn affine_backward(
    d_z: &[f64],
    x: &[f64],
    rows: usize,
    inw: usize,
    outw: usize,
    w: &[f64],
    grad_w: &mut [f64],
    mut grad_b: Option<&mut [f64]>,
    d_x: &mut [f64],
) {
    for r in 0..rows {
        let xr = &x[r * inw..(r + 1) * inw];
        let dxr = &mut d_x[r * inw..(r + 1) * inw];
        for o in 0..outw {
            let g = d_z[r * outw + o];
            if g == 0.0 {
                continue;
            }
            if let Some(gb) = grad_b.as_deref_mut() {
                gb[o] += g;
            }
            axpy(&mut grad_w[o * inw..(o + 1) * inw], g, xr);
            axpy(dxr, g, &w[o * inw..(o + 1) * inw]);
        }
    }
}

fn backward_chunk(
    spec: &NetworkSpec,
    params: &NetworkParams,
    layouts: &[LayerLayout],
    total: usize,
    chunk: &ChunkCache,
    d_out: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let rows = chunk.rows;
    let mut grads = vec![0.0; total];
    let mut d_post = d_out.to_vec();
    for idx in (0..layouts.len()).rev() {
        let layout = &layouts[idx];
        let ls = layout.spec;
        let lc = &chunk.layers[idx];
        let d_pre: Vec<f64> = match ls.role {
            LayerRole::Output if spec.final_sigmoid => {
                d_post.iter().zip(&lc.post).map(|(d, s)| d * s * (1.0 - s)).collect()
            }
            LayerRole::Output => d_post,
            _ => d_post.iter().zip(&lc.pre).map(|(d, &z)| d * spec.activation.derivative(z)).collect(),
        };
        let input: &[f64] = if idx == 0 { &chunk.encoded } else { &chunk.layers[idx - 1].post };
        let mut d_in = vec![0.0; rows * ls.in_width];
        let nw = ls.in_width * ls.out_width;
        for (b, slot) in layout.branches.iter().enumerate() {
            let d_branch: Vec<f64> = match ls.kind {
                LayerKind::Dense => d_pre.clone(),
                LayerKind::Split => {
                    // d z / d a_b = product of the other branches
                    let mut d = d_pre.clone();
                    for (m, other) in lc.branches.iter().enumerate() {
                        if m != b {
                            for (di, v) in d.iter_mut().zip(other) {
                                *di *= v;
                            }
                        }
                    }
                    d
                }
            };
            let w = &params.values[slot.weight..slot.weight + nw];
            let (gw, gb) = split_grad_slices(&mut grads, slot.weight, nw, slot.bias, ls.out_width);
            affine_backward(&d_branch, input, rows, ls.in_width, ls.out_width, w, gw, gb, &mut d_in);
        }
        d_post = d_in;
    }
    let mut d_coords = vec![0.0; rows * spec.d_in];
    let enc = spec.encoded_dim();
    for r in 0..rows {
        spec.encoding.backprop(
            &chunk.coords[r * spec.d_in..(r + 1) * spec.d_in],
            &d_post[r * enc..(r + 1) * enc],
            &mut d_coords[r * spec.d_in..(r + 1) * spec.d_in],
        );
    }
    (grads, d_coords)
}

fn split_grad_slices(
    grads: &mut [f64],
    weight: usize,
    nw: usize,
    bias: Option<usize>,
    outw: usize,
) -> (&mut [f64], Option<&mut [f64]>) {
    match bias {
        Some(b) => {
            debug_assert_eq!(b, weight + nw);
            let (gw, rest) = grads[weight..].split_at_mut(nw);
            (gw, Some(&mut rest[..outw]))
        }
        None => (&mut grads[weight..weight + nw], None),
    }
}

/// Gradients of a scalar loss whose derivative with respect to the network
/// outputs is `d_outputs`, summed over the batch, together with the
/// derivative with respect to the input coordinates.
pub fn backward(
    spec: &NetworkSpec,
    params: &NetworkParams,
    cache: &ForwardCache,
    d_outputs: &DenseMatrix,
) -> Result<(Gradients, DenseMatrix)> {
    params.check(spec)?;
    let layout = spec.layout();
    let shapes: Vec<_> = layout
        .layers
        .iter()
        .map(|l| (l.spec.in_width, l.spec.out_width, l.branches.len()))
        .collect();
    if shapes != cache.shapes || cache.d_in != spec.d_in {
        return Err(Error::shape("forward cache was produced by a different architecture"));
    }
    if d_outputs.shape() != (cache.batch, spec.d_out) {
        return Err(Error::shape(format!(
            "output gradient is {}x{}, expected {}x{}",
            d_outputs.rows(),
            d_outputs.cols(),
            cache.batch,
            spec.d_out
        )));
    }
    let mut starts = Vec::with_capacity(cache.chunks.len());
    let mut acc = 0;
    for c in &cache.chunks {
        starts.push(acc);
        acc += c.rows;
    }
    let parts = par::map_indexed(cache.chunks.len(), |i| {
        let c = &cache.chunks[i];
        let lo = starts[i] * spec.d_out;
        let d = &d_outputs.as_slice()[lo..lo + c.rows * spec.d_out];
        backward_chunk(spec, params, &layout.layers, layout.total, c, d)
    });
    let mut grads = vec![0.0; layout.total];
    let mut d_coords = Vec::with_capacity(cache.batch * spec.d_in);
    for (g, d) in parts {
        for (a, b) in grads.iter_mut().zip(&g) {
            *a += b;
        }
        d_coords.extend_from_slice(&d);
    }
    let grads = Gradients { values: grads };
    if !grads.is_finite() {
        return Err(Error::NonFinite { layer: 0, detail: "gradient contains a non-finite entry".into() });
    }
    Ok((grads, DenseMatrix::from_vec(cache.batch, spec.d_in, d_coords)?))
}
