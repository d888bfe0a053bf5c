//! Full marginal-detector network: stacked blocks, flatten, affine head,
//! sigmoid outputs.

use ndarray::{Array1, Array2, ArrayViewMutD};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dafc::{DafcCache, DafcGrads, DafcParams};
use crate::error::{Error, Result};
use crate::scalar::{draw_uniform, real, Real};

/// Shape plan of a network: the input matrix, each block's output shape,
/// and the output length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkArch {
    pub input: (usize, usize),
    pub blocks: Vec<(usize, usize)>,
    pub output_dim: usize,
}

impl NetworkArch {
    pub fn new(input: (usize, usize), blocks: Vec<(usize, usize)>, output_dim: usize) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::invalid("network needs at least one block"));
        }
        let mut dims = std::iter::once(input).chain(blocks.iter().copied());
        if dims.any(|(h, w)| h == 0 || w == 0) {
            return Err(Error::invalid("network dimensions must be positive"));
        }
        if output_dim == 0 {
            return Err(Error::invalid("output dimension must be positive"));
        }
        Ok(NetworkArch {
            input,
            blocks,
            output_dim,
        })
    }

    /// The stock dwell-sized architecture: 64x128 input shrinking through
    /// 128x1024, 16x256 and 4x128 to `output_dim` probabilities.
    pub fn dwell(output_dim: usize) -> Result<Self> {
        NetworkArch::new(
            (64, 128),
            vec![(128, 1024), (16, 256), (4, 128)],
            output_dim,
        )
    }

    /// Flattened feature length entering the affine head.
    pub fn feature_len(&self) -> usize {
        let (h, w) = *self.blocks.last().expect("validated non-empty");
        h * w
    }

    /// Total learnable scalar count.
    pub fn param_count(&self) -> usize {
        let mut count = 0;
        let mut prev = self.input;
        for &out in &self.blocks {
            let (h, w) = prev;
            let (h2, w2) = out;
            count += w2 * (w + 1) + h2 * (h + 1);
            prev = out;
        }
        count + self.feature_len() * self.output_dim + self.output_dim
    }
}

/// Learnable parameters of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T: Real> {
    arch: NetworkArch,
    pub blocks: Vec<DafcParams<T>>,
    /// Affine head weights, `feature_len x output_dim`.
    pub final_w: Array2<T>,
    pub final_b: Array1<T>,
}

/// Intermediate activations of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<T: Real> {
    pub blocks: Vec<DafcCache<T>>,
    /// Sigmoid outputs.
    pub outputs: Array1<T>,
}

/// Gradients with the same shape as [`NetworkParams`].
#[derive(Debug, Clone)]
pub struct GradientSet<T: Real> {
    pub blocks: Vec<DafcGrads<T>>,
    pub final_w: Array2<T>,
    pub final_b: Array1<T>,
}

fn xavier_uniform<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Array2<T> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(draw_uniform::<T, _>(rng, -bound, bound));
    }
    Array2::from_shape_vec((rows, cols), data).expect("sized above")
}

impl<T: Real> NetworkParams<T> {
    /// All-zero parameters (outputs 0.5 everywhere).
    pub fn zeros(arch: NetworkArch) -> Self {
        let mut blocks = Vec::with_capacity(arch.blocks.len());
        let mut prev = arch.input;
        for &out in &arch.blocks {
            blocks.push(DafcParams::zeros(prev, out));
            prev = out;
        }
        let final_w = Array2::zeros((arch.feature_len(), arch.output_dim));
        let final_b = Array1::zeros(arch.output_dim);
        NetworkParams {
            arch,
            blocks,
            final_w,
            final_b,
        }
    }

    /// Symmetric uniform initialization scaled per matrix by fan-in and
    /// fan-out; biases start at zero. Matrices are drawn in declaration
    /// order so a seed pins the full parameter vector.
    pub fn init<R: Rng + ?Sized>(arch: NetworkArch, rng: &mut R) -> Self {
        let mut net = NetworkParams::zeros(arch);
        for block in &mut net.blocks {
            let (w, w2) = block.wr.dim();
            block.wr = xavier_uniform(rng, w, w2);
            let (h, h2) = block.wc.dim();
            block.wc = xavier_uniform(rng, h, h2);
        }
        let (f, d) = net.final_w.dim();
        net.final_w = xavier_uniform(rng, f, d);
        net
    }

    pub fn arch(&self) -> &NetworkArch {
        &self.arch
    }

    pub fn output_dim(&self) -> usize {
        self.arch.output_dim
    }

    pub fn param_count(&self) -> usize {
        self.blocks.iter().map(|b| b.param_count()).sum::<usize>()
            + self.final_w.len()
            + self.final_b.len()
    }

    /// Forward pass returning only the output probabilities.
    pub fn forward(&self, z0: &Array2<T>) -> Result<Array1<T>> {
        Ok(self.forward_cached(z0)?.outputs)
    }

    /// Forward pass keeping per-block activations for a backward pass.
    pub fn forward_cached(&self, z0: &Array2<T>) -> Result<ForwardCache<T>> {
        let mut caches = Vec::with_capacity(self.blocks.len());
        let mut current = z0;
        for block in &self.blocks {
            let cache = block.forward(current)?;
            caches.push(cache);
            current = &caches.last().expect("just pushed").zout;
        }
        // Row-major flatten; fixed so checkpoints stay portable.
        let features: Array1<T> = current.iter().copied().collect();
        let mut logits = features.dot(&self.final_w);
        logits += &self.final_b;
        let outputs = logits.mapv(|u| sigmoid(u));
        Ok(ForwardCache {
            blocks: caches,
            outputs,
        })
    }

    /// Reverse-mode pass from a gradient on the logits. Feeding
    /// d(loss)/d(logit) keeps the sigmoid and loss fused, which is both
    /// faster and numerically safer than differentiating through the
    /// probabilities.
    pub fn backward_from_logits(
        &self,
        z0: &Array2<T>,
        cache: &ForwardCache<T>,
        d_logits: &Array1<T>,
    ) -> GradientSet<T> {
        let features: Array1<T> = cache
            .blocks
            .last()
            .expect("validated non-empty")
            .zout
            .iter()
            .copied()
            .collect();
        let d_final_w = outer(&features, d_logits);
        let d_final_b = d_logits.clone();
        let d_features = self.final_w.dot(d_logits);
        let last_shape = *self.arch.blocks.last().expect("non-empty");
        let mut d_z = d_features
            .into_shape_with_order(last_shape)
            .expect("feature length matches last block");
        let mut block_grads = vec![None; self.blocks.len()];
        for i in (0..self.blocks.len()).rev() {
            let zin = if i == 0 { z0 } else { &cache.blocks[i - 1].zout };
            let (grads, d_zin) = self.blocks[i].backward(zin, &cache.blocks[i], &d_z);
            block_grads[i] = Some(grads);
            d_z = d_zin;
        }
        GradientSet {
            blocks: block_grads
                .into_iter()
                .map(|g| g.expect("filled in loop"))
                .collect(),
            final_w: d_final_w,
            final_b: d_final_b,
        }
    }

    /// Mutable views over every parameter tensor in declaration order:
    /// per block `wr, br, wc, bc`, then the head weights and bias. This
    /// order is the serialization order of checkpoints.
    pub fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, T>> {
        let mut views = Vec::with_capacity(4 * self.blocks.len() + 2);
        for block in &mut self.blocks {
            views.push(block.wr.view_mut().into_dyn());
            views.push(block.br.view_mut().into_dyn());
            views.push(block.wc.view_mut().into_dyn());
            views.push(block.bc.view_mut().into_dyn());
        }
        views.push(self.final_w.view_mut().into_dyn());
        views.push(self.final_b.view_mut().into_dyn());
        views
    }

    /// Immutable counterpart of [`Self::tensors_mut`].
    pub fn tensors(&self) -> Vec<ndarray::ArrayViewD<'_, T>> {
        let mut views = Vec::with_capacity(4 * self.blocks.len() + 2);
        for block in &self.blocks {
            views.push(block.wr.view().into_dyn());
            views.push(block.br.view().into_dyn());
            views.push(block.wc.view().into_dyn());
            views.push(block.bc.view().into_dyn());
        }
        views.push(self.final_w.view().into_dyn());
        views.push(self.final_b.view().into_dyn());
        views
    }

    /// Sum of squared entries of the weight matrices (biases excluded).
    pub fn weight_norm_sq(&self) -> T {
        let mut acc = T::zero();
        for block in &self.blocks {
            acc += block.wr.iter().map(|&v| v * v).sum();
            acc += block.wc.iter().map(|&v| v * v).sum();
        }
        acc + self.final_w.iter().map(|&v| v * v).sum()
    }

    /// Converts every parameter to another precision.
    pub fn cast<U: Real>(&self) -> NetworkParams<U> {
        let mut out = NetworkParams::<U>::zeros(self.arch.clone());
        for (dst, src) in out.tensors_mut().iter_mut().zip(self.tensors()) {
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                *d = real::<U>(s.to_f64().expect("finite parameter"));
            }
        }
        out
    }
}

impl<T: Real> GradientSet<T> {
    pub fn zeros_like(net: &NetworkParams<T>) -> Self {
        GradientSet {
            blocks: net
                .blocks
                .iter()
                .map(|b| DafcGrads {
                    wr: Array2::zeros(b.wr.dim()),
                    br: Array1::zeros(b.br.len()),
                    wc: Array2::zeros(b.wc.dim()),
                    bc: Array1::zeros(b.bc.len()),
                })
                .collect(),
            final_w: Array2::zeros(net.final_w.dim()),
            final_b: Array1::zeros(net.final_b.len()),
        }
    }

    /// Tensor views in the same declaration order as the parameters.
    pub fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, T>> {
        let mut views = Vec::with_capacity(4 * self.blocks.len() + 2);
        for block in &mut self.blocks {
            views.push(block.wr.view_mut().into_dyn());
            views.push(block.br.view_mut().into_dyn());
            views.push(block.wc.view_mut().into_dyn());
            views.push(block.bc.view_mut().into_dyn());
        }
        views.push(self.final_w.view_mut().into_dyn());
        views.push(self.final_b.view_mut().into_dyn());
        views
    }

    pub fn tensors(&self) -> Vec<ndarray::ArrayViewD<'_, T>> {
        let mut views = Vec::with_capacity(4 * self.blocks.len() + 2);
        for block in &self.blocks {
            views.push(block.wr.view().into_dyn());
            views.push(block.br.view().into_dyn());
            views.push(block.wc.view().into_dyn());
            views.push(block.bc.view().into_dyn());
        }
        views.push(self.final_w.view().into_dyn());
        views.push(self.final_b.view().into_dyn());
        views
    }

    /// Accumulates another gradient set.
    pub fn add_assign(&mut self, other: &GradientSet<T>) {
        for (mut dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            dst.zip_mut_with(&src, |d, &s| *d += s);
        }
    }

    /// Scales every gradient.
    pub fn scale(&mut self, factor: T) {
        for mut t in self.tensors_mut() {
            t.mapv_inplace(|v| v * factor);
        }
    }

    /// Adds the weight-decay term `2 l2 W` for every weight matrix,
    /// leaving biases untouched.
    pub fn add_weight_decay(&mut self, net: &NetworkParams<T>, l2: T) {
        let two_l2 = real::<T>(2.0) * l2;
        for (g, p) in self.blocks.iter_mut().zip(net.blocks.iter()) {
            g.wr.zip_mut_with(&p.wr, |d, &w| *d += two_l2 * w);
            g.wc.zip_mut_with(&p.wc, |d, &w| *d += two_l2 * w);
        }
        self.final_w
            .zip_mut_with(&net.final_w, |d, &w| *d += two_l2 * w);
    }
}

#[inline]
pub fn sigmoid<T: Real>(u: T) -> T {
    if u >= T::zero() {
        let e = (-u).exp();
        T::one() / (T::one() + e)
    } else {
        let e = u.exp();
        e / (T::one() + e)
    }
}

fn outer<T: Real>(a: &Array1<T>, b: &Array1<T>) -> Array2<T> {
    let mut out = Array2::zeros((a.len(), b.len()));
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[(i, j)] = ai * bj;
        }
    }
    out
}
