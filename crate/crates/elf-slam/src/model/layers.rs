//! Forward and backward passes of the encoder layers. Everything operates
//! on flat row-major buffers with explicit channel/height/width bookkeeping.

use crate::scalar::Scalar;

/// Spatial extent of one feature map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Dims {
    pub fn numel(&self) -> usize {
        self.c * self.h * self.w
    }

    /// Output extent of a 2x downsample with partial edge windows.
    pub fn halved(&self) -> Dims {
        Dims {
            c: self.c,
            h: self.h.div_ceil(2),
            w: self.w.div_ceil(2),
        }
    }
}

/// 3x3 convolution with zero padding 1 and stride 1.
/// `weight` is `[c_out, c_in, 3, 3]`, `bias` is `[c_out]`.
pub fn conv3x3_forward<T: Scalar>(
    input: &[T],
    dims: Dims,
    weight: &[T],
    bias: &[T],
    c_out: usize,
) -> Vec<T> {
    let (h, w) = (dims.h, dims.w);
    let hw = h * w;
    let mut out = vec![T::zero(); c_out * hw];
    for co in 0..c_out {
        let out_c = &mut out[co * hw..(co + 1) * hw];
        for v in out_c.iter_mut() {
            *v = bias[co];
        }
        for ci in 0..dims.c {
            let in_c = &input[ci * hw..(ci + 1) * hw];
            for ky in 0..3usize {
                let dy = ky as isize - 1;
                for kx in 0..3usize {
                    let dx = kx as isize - 1;
                    let wgt = weight[((co * dims.c + ci) * 3 + ky) * 3 + kx];
                    let y0 = (-dy).max(0) as usize;
                    let y1 = (h as isize - dy).min(h as isize) as usize;
                    let x0 = (-dx).max(0) as usize;
                    let x1 = (w as isize - dx).min(w as isize) as usize;
                    for y in y0..y1 {
                        let src_row = ((y as isize + dy) as usize) * w;
                        let dst_row = y * w;
                        for x in x0..x1 {
                            out_c[dst_row + x] +=
                                wgt * in_c[src_row + (x as isize + dx) as usize];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Backward pass of [`conv3x3_forward`]. Accumulates into `d_weight` and
/// `d_bias`; returns the input gradient.
#[allow(clippy::too_many_arguments)]
pub fn conv3x3_backward<T: Scalar>(
    input: &[T],
    dims: Dims,
    weight: &[T],
    c_out: usize,
    d_out: &[T],
    d_weight: &mut [T],
    d_bias: &mut [T],
) -> Vec<T> {
    let (h, w) = (dims.h, dims.w);
    let hw = h * w;
    let mut d_in = vec![T::zero(); dims.numel()];
    for co in 0..c_out {
        let d_out_c = &d_out[co * hw..(co + 1) * hw];
        let mut db = T::zero();
        for &g in d_out_c {
            db += g;
        }
        d_bias[co] += db;
        for ci in 0..dims.c {
            let in_c = &input[ci * hw..(ci + 1) * hw];
            let d_in_c = &mut d_in[ci * hw..(ci + 1) * hw];
            for ky in 0..3usize {
                let dy = ky as isize - 1;
                for kx in 0..3usize {
                    let dx = kx as isize - 1;
                    let widx = ((co * dims.c + ci) * 3 + ky) * 3 + kx;
                    let wgt = weight[widx];
                    let mut dw = T::zero();
                    let y0 = (-dy).max(0) as usize;
                    let y1 = (h as isize - dy).min(h as isize) as usize;
                    let x0 = (-dx).max(0) as usize;
                    let x1 = (w as isize - dx).min(w as isize) as usize;
                    for y in y0..y1 {
                        let src_row = ((y as isize + dy) as usize) * w;
                        let dst_row = y * w;
                        for x in x0..x1 {
                            let g = d_out_c[dst_row + x];
                            let s = src_row + (x as isize + dx) as usize;
                            dw += g * in_c[s];
                            d_in_c[s] += wgt * g;
                        }
                    }
                    d_weight[widx] += dw;
                }
            }
        }
    }
    d_in
}

/// 2x2 average pooling with stride 2; edge windows average over the cells
/// they actually cover, so odd extents shrink to `ceil(n/2)`.
pub fn avgpool2_forward<T: Scalar>(input: &[T], dims: Dims) -> (Vec<T>, Dims) {
    let out_dims = dims.halved();
    let mut out = vec![T::zero(); out_dims.numel()];
    for c in 0..dims.c {
        let in_c = &input[c * dims.h * dims.w..];
        let out_c = &mut out[c * out_dims.h * out_dims.w..];
        for oy in 0..out_dims.h {
            for ox in 0..out_dims.w {
                let y1 = (2 * oy + 2).min(dims.h);
                let x1 = (2 * ox + 2).min(dims.w);
                let mut acc = T::zero();
                let mut count = 0usize;
                for y in 2 * oy..y1 {
                    for x in 2 * ox..x1 {
                        acc += in_c[y * dims.w + x];
                        count += 1;
                    }
                }
                out_c[oy * out_dims.w + ox] = acc / T::of_usize(count);
            }
        }
    }
    (out, out_dims)
}

pub fn avgpool2_backward<T: Scalar>(d_out: &[T], dims: Dims) -> Vec<T> {
    let out_dims = dims.halved();
    let mut d_in = vec![T::zero(); dims.numel()];
    for c in 0..dims.c {
        let d_out_c = &d_out[c * out_dims.h * out_dims.w..];
        let d_in_c = &mut d_in[c * dims.h * dims.w..];
        for oy in 0..out_dims.h {
            for ox in 0..out_dims.w {
                let y1 = (2 * oy + 2).min(dims.h);
                let x1 = (2 * ox + 2).min(dims.w);
                let count = (y1 - 2 * oy) * (x1 - 2 * ox);
                let g = d_out_c[oy * out_dims.w + ox] / T::of_usize(count);
                for y in 2 * oy..y1 {
                    for x in 2 * ox..x1 {
                        d_in_c[y * dims.w + x] += g;
                    }
                }
            }
        }
    }
    d_in
}

fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// SiLU activation, applied in place; returns a copy of the pre-activation
/// for the backward pass.
pub fn silu_forward<T: Scalar>(x: &mut [T]) -> Vec<T> {
    let pre = x.to_vec();
    for v in x.iter_mut() {
        *v = *v * sigmoid(*v);
    }
    pre
}

pub fn silu_backward<T: Scalar>(pre: &[T], d_out: &[T]) -> Vec<T> {
    pre.iter()
        .zip(d_out)
        .map(|(&x, &g)| {
            let s = sigmoid(x);
            g * s * (T::one() + x * (T::one() - s))
        })
        .collect()
}

/// Global average pool over the spatial extent.
pub fn gap_forward<T: Scalar>(input: &[T], dims: Dims) -> Vec<T> {
    let hw = dims.h * dims.w;
    let inv = T::one() / T::of_usize(hw);
    (0..dims.c)
        .map(|c| {
            let mut acc = T::zero();
            for v in &input[c * hw..(c + 1) * hw] {
                acc += *v;
            }
            acc * inv
        })
        .collect()
}

pub fn gap_backward<T: Scalar>(d_out: &[T], dims: Dims) -> Vec<T> {
    let hw = dims.h * dims.w;
    let inv = T::one() / T::of_usize(hw);
    let mut d_in = vec![T::zero(); dims.numel()];
    for c in 0..dims.c {
        let g = d_out[c] * inv;
        for v in &mut d_in[c * hw..(c + 1) * hw] {
            *v = g;
        }
    }
    d_in
}

/// Fully connected layer: `out = W x + b` with `W` of shape `[out, in]`.
pub fn dense_forward<T: Scalar>(x: &[T], weight: &[T], bias: &[T], n_out: usize) -> Vec<T> {
    let n_in = x.len();
    (0..n_out)
        .map(|o| {
            let row = &weight[o * n_in..(o + 1) * n_in];
            let mut acc = bias[o];
            for (w, xi) in row.iter().zip(x) {
                acc += *w * *xi;
            }
            acc
        })
        .collect()
}

pub fn dense_backward<T: Scalar>(
    x: &[T],
    weight: &[T],
    n_out: usize,
    d_out: &[T],
    d_weight: &mut [T],
    d_bias: &mut [T],
) -> Vec<T> {
    let n_in = x.len();
    let mut d_in = vec![T::zero(); n_in];
    for o in 0..n_out {
        let g = d_out[o];
        d_bias[o] += g;
        let row = &weight[o * n_in..(o + 1) * n_in];
        let d_row = &mut d_weight[o * n_in..(o + 1) * n_in];
        for i in 0..n_in {
            d_row[i] += g * x[i];
            d_in[i] += row[i] * g;
        }
    }
    d_in
}

/// L2 normalization with a linear fallback below `eps`.
pub fn l2_normalize_forward<T: Scalar>(v: &[T], eps: T) -> (Vec<T>, T) {
    let norm = v.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
    let denom = norm.max(eps);
    (v.iter().map(|&x| x / denom).collect(), norm)
}

pub fn l2_normalize_backward<T: Scalar>(z: &[T], norm: T, eps: T, d_z: &[T]) -> Vec<T> {
    if norm <= eps {
        // Linear branch: z = v / eps.
        return d_z.iter().map(|&g| g / eps).collect();
    }
    let z_dot_g = z.iter().zip(d_z).fold(T::zero(), |a, (&zi, &gi)| a + zi * gi);
    z.iter()
        .zip(d_z)
        .map(|(&zi, &gi)| (gi - zi * z_dot_g) / norm)
        .collect()
}
