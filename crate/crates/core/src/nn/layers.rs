//! Dense kernels on CHW `f32` buffers.

use alloc::vec;
use alloc::vec::Vec;

/// `C (m x n) = A (m x k) * B (k x n)`, optionally accumulating into `C`.
/// `a_t` / `b_t` mean the operand is stored transposed.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(m: usize, k: usize, n: usize, a: &[f32], a_t: bool, b: &[f32], b_t: bool, c: &mut [f32], acc: bool) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    let beta = if acc { 1.0 } else { 0.0 };
    // SAFETY: the asserts above bound every index the strides can reach.
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// 3x3, stride 1, zero padding 1.
pub(crate) fn im2col3(input: &[f32], channels: usize, h: usize, w: usize, col: &mut [f32]) {
    let hw = h * w;
    debug_assert_eq!(col.len(), channels * 9 * hw);
    for c in 0..channels {
        let plane = &input[c * hw..(c + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let dst = &mut col[(c * 9 + ky * 3 + kx) * hw..(c * 9 + ky * 3 + kx + 1) * hw];
                for y in 0..h {
                    let row = &mut dst[y * w..(y + 1) * w];
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        row.fill(0.0);
                        continue;
                    }
                    let src = &plane[sy as usize * w..(sy as usize + 1) * w];
                    match kx {
                        0 => {
                            row[0] = 0.0;
                            row[1..].copy_from_slice(&src[..w - 1]);
                        }
                        1 => row.copy_from_slice(src),
                        _ => {
                            row[..w - 1].copy_from_slice(&src[1..]);
                            row[w - 1] = 0.0;
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col3`]: scatter-add columns back into `d_input`.
pub(crate) fn col2im3(col: &[f32], channels: usize, h: usize, w: usize, d_input: &mut [f32]) {
    let hw = h * w;
    for c in 0..channels {
        let plane = &mut d_input[c * hw..(c + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let src = &col[(c * 9 + ky * 3 + kx) * hw..(c * 9 + ky * 3 + kx + 1) * hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let row = &src[y * w..(y + 1) * w];
                    let dst = &mut plane[sy as usize * w..(sy as usize + 1) * w];
                    match kx {
                        0 => dst[..w - 1].iter_mut().zip(&row[1..]).for_each(|(d, s)| *d += s),
                        1 => dst.iter_mut().zip(row).for_each(|(d, s)| *d += s),
                        _ => dst[1..].iter_mut().zip(&row[..w - 1]).for_each(|(d, s)| *d += s),
                    }
                }
            }
        }
    }
}

/// 2x2 max pooling; returns the pooled map and the flat argmax per output.
pub(crate) fn maxpool2(input: &[f32], channels: usize, h: usize, w: usize) -> (Vec<f32>, Vec<u32>) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![0.0; channels * oh * ow];
    let mut arg = vec![0u32; channels * oh * ow];
    for c in 0..channels {
        for y in 0..oh {
            for x in 0..ow {
                let base = c * h * w;
                let cands = [
                    base + 2 * y * w + 2 * x,
                    base + 2 * y * w + 2 * x + 1,
                    base + (2 * y + 1) * w + 2 * x,
                    base + (2 * y + 1) * w + 2 * x + 1,
                ];
                let mut best = cands[0];
                for &i in &cands[1..] {
                    if input[i] > input[best] {
                        best = i;
                    }
                }
                let o = c * oh * ow + y * ow + x;
                out[o] = input[best];
                arg[o] = best as u32;
            }
        }
    }
    (out, arg)
}

/// Nearest-neighbour 2x upsampling.
pub(crate) fn upsample2(input: &[f32], channels: usize, h: usize, w: usize) -> Vec<f32> {
    let (oh, ow) = (2 * h, 2 * w);
    let mut out = vec![0.0; channels * oh * ow];
    for c in 0..channels {
        for y in 0..oh {
            let src = &input[c * h * w + (y / 2) * w..c * h * w + (y / 2 + 1) * w];
            let dst = &mut out[c * oh * ow + y * ow..c * oh * ow + (y + 1) * ow];
            for (x, d) in dst.iter_mut().enumerate() {
                *d = src[x / 2];
            }
        }
    }
    out
}

/// Adjoint of [`upsample2`]: sum each 2x2 block. `h`, `w` are the small size.
pub(crate) fn upsample2_backward(d_out: &[f32], channels: usize, h: usize, w: usize) -> Vec<f32> {
    let (oh, ow) = (2 * h, 2 * w);
    let mut d_in = vec![0.0; channels * h * w];
    for c in 0..channels {
        for y in 0..oh {
            for x in 0..ow {
                d_in[c * h * w + (y / 2) * w + x / 2] += d_out[c * oh * ow + y * ow + x];
            }
        }
    }
    d_in
}

/// `ln(1 + e^x)`, overflow-safe.
#[inline]
pub fn softplus(x: f32) -> f32 {
    x.max(0.0) + libm::log1pf(libm::expf(-libm::fabsf(x)))
}

/// Derivative of [`softplus`], the logistic sigmoid.
#[inline]
pub fn softplus_grad(x: f32) -> f32 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::expf(-x))
    } else {
        let e = libm::expf(x);
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gemm_transposes() {
        // A = [[1,2,3],[4,5,6]] (2x3), B = [[1,0],[0,1],[1,1]] (3x2)
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [1.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let mut c = [0.0; 4];
        gemm(2, 3, 2, &a, false, &b, false, &mut c, false);
        assert_eq!(c, [4.0, 5.0, 10.0, 11.0]);
        let at = [1.0, 4.0, 2.0, 5.0, 3.0, 6.0];
        let bt = [1.0, 0.0, 1.0, 0.0, 1.0, 1.0];
        let mut c2 = [1.0; 4];
        gemm(2, 3, 2, &at, true, &bt, true, &mut c2, true);
        assert_eq!(c2, [5.0, 6.0, 11.0, 12.0]);
    }

    #[test]
    fn col2im_is_adjoint_of_im2col() {
        // <im2col(x), y> == <x, col2im(y)>
        let (c, h, w) = (2, 5, 6);
        let x: Vec<f32> = (0..c * h * w).map(|i| ((i * 7) % 11) as f32 - 5.0).collect();
        let y: Vec<f32> = (0..c * 9 * h * w).map(|i| ((i * 5) % 13) as f32 - 6.0).collect();
        let mut col = vec![0.0; c * 9 * h * w];
        im2col3(&x, c, h, w, &mut col);
        let mut back = vec![0.0; c * h * w];
        col2im3(&y, c, h, w, &mut back);
        let lhs: f64 = col.iter().zip(&y).map(|(a, b)| (*a as f64) * (*b as f64)).sum();
        let rhs: f64 = x.iter().zip(&back).map(|(a, b)| (*a as f64) * (*b as f64)).sum();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn upsample_adjoint() {
        let (c, h, w) = (2, 3, 4);
        let x: Vec<f32> = (0..c * h * w).map(|i| i as f32).collect();
        let y: Vec<f32> = (0..c * 4 * h * w).map(|i| (i % 5) as f32).collect();
        let up = upsample2(&x, c, h, w);
        let back = upsample2_backward(&y, c, h, w);
        let lhs: f32 = up.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f32 = x.iter().zip(&back).map(|(a, b)| a * b).sum();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0) - core::f32::consts::LN_2).abs() < 1e-7);
        assert_eq!(softplus(100.0), 100.0);
        assert!(softplus(-100.0) >= 0.0);
        assert!((softplus_grad(0.0) - 0.5).abs() < 1e-7);
    }
}
