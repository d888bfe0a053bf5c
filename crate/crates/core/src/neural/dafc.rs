//! One dimensional-alternating block: a row transform followed by a
//! column transform, each a learned affine map under a pointwise
//! activation.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pointwise activation of a block stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply<T: Real>(self, x: T) -> T {
        match self {
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    pub fn derivative_from_output<T: Real>(self, y: T) -> T {
        match self {
            Activation::Tanh => T::one() - y * y,
        }
    }
}

/// Learnable parameters of one block mapping `H x W` to `H' x W'`.
///
/// The row stage right-multiplies: `Zr = h(Zin Wr + 1 br^T)`, shape
/// `H x W'`. The column stage left-multiplies: `Zout = h(Wc^T Zr + bc 1^T)`,
/// shape `H' x W'`.
#[derive(Debug, Clone, PartialEq)]
pub struct DafcParams<T: Real> {
    /// `W x W'` row-transform weights.
    pub wr: Array2<T>,
    /// Length `W'` row-transform bias.
    pub br: Array1<T>,
    /// `H x H'` column-transform weights.
    pub wc: Array2<T>,
    /// Length `H'` column-transform bias.
    pub bc: Array1<T>,
    pub row_activation: Activation,
    pub col_activation: Activation,
}

/// Stage outputs kept for the backward pass.
#[derive(Debug, Clone)]
pub struct DafcCache<T: Real> {
    pub zr: Array2<T>,
    pub zout: Array2<T>,
}

/// Parameter gradients of one block, same shapes as [`DafcParams`].
#[derive(Debug, Clone)]
pub struct DafcGrads<T: Real> {
    pub wr: Array2<T>,
    pub br: Array1<T>,
    pub wc: Array2<T>,
    pub bc: Array1<T>,
}

impl<T: Real> DafcParams<T> {
    /// Zero-initialized block for the given input and output shapes.
    pub fn zeros(input: (usize, usize), output: (usize, usize)) -> Self {
        let (h, w) = input;
        let (h_out, w_out) = output;
        DafcParams {
            wr: Array2::zeros((w, w_out)),
            br: Array1::zeros(w_out),
            wc: Array2::zeros((h, h_out)),
            bc: Array1::zeros(h_out),
            row_activation: Activation::Tanh,
            col_activation: Activation::Tanh,
        }
    }

    /// `(H, W)` accepted by this block.
    pub fn input_shape(&self) -> (usize, usize) {
        (self.wc.nrows(), self.wr.nrows())
    }

    /// `(H', W')` produced by this block.
    pub fn output_shape(&self) -> (usize, usize) {
        (self.wc.ncols(), self.wr.ncols())
    }

    /// Learnable scalar count, `W'(W+1) + H'(H+1)`.
    pub fn param_count(&self) -> usize {
        self.wr.len() + self.br.len() + self.wc.len() + self.bc.len()
    }

    fn check_input(&self, zin: &Array2<T>) -> Result<()> {
        if zin.dim() != self.input_shape() {
            return Err(Error::invalid(format!(
                "block expects {:?}, got {:?}",
                self.input_shape(),
                zin.dim()
            )));
        }
        Ok(())
    }

    /// Forward pass keeping the stage outputs.
    pub fn forward(&self, zin: &Array2<T>) -> Result<DafcCache<T>> {
        self.check_input(zin)?;
        let mut zr = zin.dot(&self.wr);
        zr += &self.br;
        zr.mapv_inplace(|x| self.row_activation.apply(x));
        let mut zout = self.wc.t().dot(&zr);
        let bc_col = self.bc.view().insert_axis(Axis(1));
        zout += &bc_col;
        zout.mapv_inplace(|x| self.col_activation.apply(x));
        Ok(DafcCache { zr, zout })
    }

    /// Reverse-mode pass. Takes the block input, the cached stage
    /// outputs, and the loss gradient with respect to the block output;
    /// returns parameter gradients and the gradient with respect to the
    /// input.
    pub fn backward(
        &self,
        zin: &Array2<T>,
        cache: &DafcCache<T>,
        d_zout: &Array2<T>,
    ) -> (DafcGrads<T>, Array2<T>) {
        let mut d_b = d_zout.clone();
        azip_mul_derivative(&mut d_b, &cache.zout, self.col_activation);
        let d_wc = cache.zr.dot(&d_b.t());
        let d_bc = d_b.sum_axis(Axis(1));
        let mut d_a = self.wc.dot(&d_b);
        azip_mul_derivative(&mut d_a, &cache.zr, self.row_activation);
        let d_wr = zin.t().dot(&d_a);
        let d_br = d_a.sum_axis(Axis(0));
        let d_zin = d_a.dot(&self.wr.t());
        (
            DafcGrads {
                wr: d_wr,
                br: d_br,
                wc: d_wc,
                bc: d_bc,
            },
            d_zin,
        )
    }
}

fn azip_mul_derivative<T: Real>(grad: &mut Array2<T>, output: &Array2<T>, act: Activation) {
    ndarray::Zip::from(grad)
        .and(output)
        .for_each(|g, &y| *g *= act.derivative_from_output(y));
}
