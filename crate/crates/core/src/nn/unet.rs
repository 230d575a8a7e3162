use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::layers::{col2im3, gemm, im2col3, maxpool2, softplus, softplus_grad, upsample2, upsample2_backward};
use super::EvidenceModel;
use crate::error::{Error, Result};
use crate::evidence::EvidenceMap;
use crate::image::ImageSlice;

/// Shape of the encoder-decoder.
///
/// `levels` resolution levels, each with two 3x3 conv + ReLU blocks; widths
/// double per level starting at `base_channels`; nearest upsampling and
/// skip concatenation on the way up; a 1x1 head to `classes` channels
/// followed by softplus. Inputs in `[0, 1]` are mapped to `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UNetArch {
    pub base_channels: usize,
    pub levels: usize,
    pub classes: usize,
}

#[derive(Debug, Clone, Copy)]
struct ConvSpec {
    cin: usize,
    cout: usize,
    kernel: usize,
    w_off: usize,
    b_off: usize,
}

impl ConvSpec {
    fn fan_in(&self) -> usize {
        self.cin * self.kernel * self.kernel
    }
}

impl UNetArch {
    pub fn new(base_channels: usize, levels: usize, classes: usize) -> Self {
        assert!(levels >= 1 && base_channels >= 1 && classes >= 2);
        Self { base_channels, levels, classes }
    }

    fn width(&self, level: usize) -> usize {
        self.base_channels << level
    }

    fn convs(&self) -> Vec<ConvSpec> {
        let mut shapes = Vec::new();
        for l in 0..self.levels {
            let cin = if l == 0 { 1 } else { self.width(l - 1) };
            shapes.push((cin, self.width(l), 3));
            shapes.push((self.width(l), self.width(l), 3));
        }
        for l in (0..self.levels - 1).rev() {
            shapes.push((self.width(l + 1) + self.width(l), self.width(l), 3));
            shapes.push((self.width(l), self.width(l), 3));
        }
        shapes.push((self.width(0), self.classes, 1));
        let mut off = 0;
        shapes
            .into_iter()
            .map(|(cin, cout, kernel)| {
                let w_off = off;
                let b_off = w_off + cout * cin * kernel * kernel;
                off = b_off + cout;
                ConvSpec { cin, cout, kernel, w_off, b_off }
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.convs().last().map_or(0, |c| c.b_off + c.cout)
    }

    /// Human-readable layer table; stable input for checkpoint hashing.
    pub fn describe(&self) -> String {
        let mut s = format!("unet levels={} base={} classes={};", self.levels, self.base_channels, self.classes);
        for c in self.convs() {
            s.push_str(&format!(" conv{}x{}:{}->{}", c.kernel, c.kernel, c.cin, c.cout));
        }
        s
    }

    /// Side lengths must be divisible by this.
    pub fn size_multiple(&self) -> usize {
        1 << (self.levels - 1)
    }
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    height: usize,
    width: usize,
    /// Per conv layer: its im2col buffer (3x3) or its input (1x1).
    cols: Vec<Vec<f32>>,
    /// Per conv layer: post-ReLU output; for the head, the raw logits.
    outs: Vec<Vec<f32>>,
    pool_args: Vec<Vec<u32>>,
}

impl ForwardCache {
    /// Non-negative evidence, channel-major `K x V`.
    pub fn evidence_chw(&self) -> Vec<f32> {
        self.outs.last().map(|l| l.iter().map(|&x| softplus(x)).collect()).unwrap_or_default()
    }
}

/// The network: architecture plus one flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct UNet {
    arch: UNetArch,
    params: Vec<f32>,
}

impl UNet {
    /// He-normal weights, zero biases.
    pub fn new(arch: UNetArch, seed: u64) -> Self {
        let mut rng = crate::rng_from_seed(seed);
        let mut params = vec![0.0f32; arch.param_count()];
        for c in arch.convs() {
            let std = libm::sqrtf(2.0 / c.fan_in() as f32);
            let normal = Normal::new(0.0f32, std).expect("positive std");
            for p in &mut params[c.w_off..c.b_off] {
                *p = normal.sample(&mut rng);
            }
        }
        Self { arch, params }
    }

    pub fn from_params(arch: UNetArch, params: Vec<f32>) -> Result<Self> {
        if params.len() != arch.param_count() {
            return Err(Error::BufferLength { expected: arch.param_count(), got: params.len() });
        }
        Ok(Self { arch, params })
    }

    pub fn arch(&self) -> UNetArch {
        self.arch
    }

    pub fn params(&self) -> &[f32] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f32] {
        &mut self.params
    }

    fn check_size(&self, h: usize, w: usize) -> Result<()> {
        let m = self.arch.size_multiple();
        if !h.is_multiple_of(m) || !w.is_multiple_of(m) {
            return Err(Error::InvalidConfig(format!("image {h}x{w} not divisible by {m}")));
        }
        Ok(())
    }

    fn conv(&self, spec: &ConvSpec, input: &[f32], h: usize, w: usize, relu: bool) -> (Vec<f32>, Vec<f32>) {
        let hw = h * w;
        let weights = &self.params[spec.w_off..spec.b_off];
        let bias = &self.params[spec.b_off..spec.b_off + spec.cout];
        let col = if spec.kernel == 3 {
            let mut col = vec![0.0; spec.cin * 9 * hw];
            im2col3(input, spec.cin, h, w, &mut col);
            col
        } else {
            input.to_vec()
        };
        let mut out = vec![0.0; spec.cout * hw];
        gemm(spec.cout, spec.fan_in(), hw, weights, false, &col, false, &mut out, false);
        for (o, &b) in out.chunks_mut(hw).zip(bias) {
            if relu {
                o.iter_mut().for_each(|v| *v = (*v + b).max(0.0));
            } else {
                o.iter_mut().for_each(|v| *v += b);
            }
        }
        (col, out)
    }

    /// Forward pass over a single-channel image, keeping activations.
    pub fn forward(&self, img: &ImageSlice) -> Result<ForwardCache> {
        let (h, w) = (img.height(), img.width());
        self.check_size(h, w)?;
        let specs = self.arch.convs();
        let levels = self.arch.levels;
        let mut cache = ForwardCache { height: h, width: w, cols: Vec::new(), outs: Vec::new(), pool_args: Vec::new() };
        let mut x: Vec<f32> = img.data().iter().map(|&v| 2.0 * v as f32 - 1.0).collect();
        let (mut ch, mut cw) = (h, w);
        let mut layer = 0;
        let mut skip_layers = Vec::new();

        for l in 0..levels {
            if l > 0 {
                let (pooled, arg) = maxpool2(&x, self.arch.width(l - 1), ch, cw);
                cache.pool_args.push(arg);
                x = pooled;
                ch /= 2;
                cw /= 2;
            }
            for _ in 0..2 {
                let (col, out) = self.conv(&specs[layer], &x, ch, cw, true);
                cache.cols.push(col);
                x = out.clone();
                cache.outs.push(out);
                layer += 1;
            }
            skip_layers.push(layer - 1);
        }
        for l in (0..levels - 1).rev() {
            let mut cat = upsample2(&x, self.arch.width(l + 1), ch, cw);
            ch *= 2;
            cw *= 2;
            cat.extend_from_slice(&cache.outs[skip_layers[l]]);
            x = cat;
            for _ in 0..2 {
                let (col, out) = self.conv(&specs[layer], &x, ch, cw, true);
                cache.cols.push(col);
                x = out.clone();
                cache.outs.push(out);
                layer += 1;
            }
        }
        let (col, logits) = self.conv(&specs[layer], &x, ch, cw, false);
        cache.cols.push(col);
        cache.outs.push(logits);
        Ok(cache)
    }

    fn conv_backward(
        &self,
        spec: &ConvSpec,
        col: &[f32],
        d_out: &[f32],
        hw: usize,
        grads: &mut [f32],
        want_input: bool,
    ) -> Option<Vec<f32>> {
        let k = spec.fan_in();
        gemm(spec.cout, hw, k, d_out, false, col, true, &mut grads[spec.w_off..spec.b_off], true);
        for (g, row) in grads[spec.b_off..spec.b_off + spec.cout].iter_mut().zip(d_out.chunks(hw)) {
            *g += row.iter().sum::<f32>();
        }
        if !want_input {
            return None;
        }
        let weights = &self.params[spec.w_off..spec.b_off];
        let mut d_col = vec![0.0; k * hw];
        gemm(k, spec.cout, hw, weights, true, d_out, false, &mut d_col, false);
        Some(d_col)
    }

    fn relu_mask(d: &mut [f32], out: &[f32]) {
        d.iter_mut().zip(out).for_each(|(g, &o)| {
            if o <= 0.0 {
                *g = 0.0;
            }
        });
    }

    #[allow(clippy::too_many_arguments)]
    fn conv3_backward(
        &self,
        spec: &ConvSpec,
        cache: &ForwardCache,
        layer: usize,
        mut d_out: Vec<f32>,
        h: usize,
        w: usize,
        grads: &mut [f32],
        want_input: bool,
    ) -> Option<Vec<f32>> {
        Self::relu_mask(&mut d_out, &cache.outs[layer]);
        let d_col = self.conv_backward(spec, &cache.cols[layer], &d_out, h * w, grads, want_input)?;
        let mut d_in = vec![0.0; spec.cin * h * w];
        col2im3(&d_col, spec.cin, h, w, &mut d_in);
        Some(d_in)
    }

    /// Accumulate `d loss / d params` into `grads` given `d loss / d evidence`
    /// (channel-major `K x V`).
    pub fn backward(&self, cache: &ForwardCache, d_evidence: &[f32], grads: &mut [f32]) {
        assert_eq!(grads.len(), self.params.len());
        let specs = self.arch.convs();
        let levels = self.arch.levels;
        let (h, w) = (cache.height, cache.width);
        let head = specs.len() - 1;
        let logits = &cache.outs[head];
        assert_eq!(d_evidence.len(), logits.len());
        let d_logits: Vec<f32> = d_evidence.iter().zip(logits).map(|(&d, &z)| d * softplus_grad(z)).collect();
        let mut d_x = self
            .conv_backward(&specs[head], &cache.cols[head], &d_logits, h * w, grads, true)
            .expect("input grad requested");

        // Decoder, last level first.
        let mut layer = head;
        let (mut ch, mut cw) = (h, w);
        let mut d_skips: Vec<Option<Vec<f32>>> = vec![None; levels];
        for l in 0..levels - 1 {
            layer -= 1;
            d_x = self.conv3_backward(&specs[layer], cache, layer, d_x, ch, cw, grads, true).expect("input grad");
            layer -= 1;
            let d_cat = self.conv3_backward(&specs[layer], cache, layer, d_x, ch, cw, grads, true).expect("input grad");
            let up_ch = self.arch.width(l + 1);
            let split = up_ch * ch * cw;
            d_skips[l] = Some(d_cat[split..].to_vec());
            ch /= 2;
            cw /= 2;
            d_x = upsample2_backward(&d_cat[..split], up_ch, ch, cw);
        }

        // Encoder, deepest level first.
        for l in (0..levels).rev() {
            if let Some(ds) = d_skips[l].take() {
                d_x.iter_mut().zip(&ds).for_each(|(a, b)| *a += b);
            }
            layer -= 1;
            d_x = self.conv3_backward(&specs[layer], cache, layer, d_x, ch, cw, grads, true).expect("input grad");
            layer -= 1;
            let want = l > 0;
            let d_in = self.conv3_backward(&specs[layer], cache, layer, d_x, ch, cw, grads, want);
            if l == 0 {
                break;
            }
            let d_pooled = d_in.expect("input grad");
            let c_prev = self.arch.width(l - 1);
            let mut up = vec![0.0; c_prev * ch * 2 * cw * 2];
            for (o, &src) in cache.pool_args[l - 1].iter().enumerate() {
                up[src as usize] += d_pooled[o];
            }
            ch *= 2;
            cw *= 2;
            d_x = up;
        }
        debug_assert_eq!(layer, 0);
    }
}

/// Channel-major `K x V` `f32` evidence to a row-major `V x K` map.
pub(crate) fn evidence_map_from_chw(chw: &[f32], classes: usize) -> Result<EvidenceMap> {
    let v = chw.len() / classes;
    let mut e = vec![0.0; v * classes];
    for k in 0..classes {
        for i in 0..v {
            e[i * classes + k] = chw[k * v + i] as f64;
        }
    }
    EvidenceMap::new(v, classes, e)
}

/// Row-major `V x K` gradient to channel-major `K x V` `f32`.
pub(crate) fn grad_to_chw(grad: &[f64], classes: usize) -> Vec<f32> {
    let v = grad.len() / classes;
    let mut out = vec![0.0f32; grad.len()];
    for i in 0..v {
        for k in 0..classes {
            out[k * v + i] = grad[i * classes + k] as f32;
        }
    }
    out
}

impl EvidenceModel for UNet {
    fn classes(&self) -> usize {
        self.arch.classes
    }

    fn evidence(&self, img: &ImageSlice) -> Result<EvidenceMap> {
        let cache = self.forward(img)?;
        evidence_map_from_chw(&cache.evidence_chw(), self.arch.classes)
    }
}

impl UNet {
    /// Evidence map and forward cache in one call.
    pub fn evidence_with_cache(&self, img: &ImageSlice) -> Result<(EvidenceMap, ForwardCache)> {
        let cache = self.forward(img)?;
        let e = evidence_map_from_chw(&cache.evidence_chw(), self.arch.classes)?;
        Ok((e, cache))
    }

    /// Backpropagate a row-major `V x K` evidence gradient.
    pub fn backward_evidence_grad(&self, cache: &ForwardCache, grad: &[f64], grads: &mut [f32]) {
        self.backward(cache, &grad_to_chw(grad, self.arch.classes), grads);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn image(h: usize, w: usize, seed: u64) -> ImageSlice {
        let mut rng = crate::rng_from_seed(seed);
        ImageSlice::new(h, w, (0..h * w).map(|_| rng.random::<f64>()).collect()).unwrap()
    }

    #[test]
    fn param_count_matches_layout() {
        let arch = UNetArch::new(4, 3, 3);
        // enc: 1->4, 4->4, 4->8, 8->8, 8->16, 16->16; dec: 24->8, 8->8, 12->4, 4->4; head 4->3
        let convs = [(1, 4), (4, 4), (4, 8), (8, 8), (8, 16), (16, 16), (24, 8), (8, 8), (12, 4), (4, 4)];
        let want: usize = convs.iter().map(|(i, o)| o * i * 9 + o).sum::<usize>() + 3 * 4 + 3;
        assert_eq!(arch.param_count(), want);
    }

    #[test]
    fn output_is_nonnegative_and_deterministic() {
        for seed in 0..3 {
            let net = UNet::new(UNetArch::new(4, 3, 3), seed);
            let img = image(16, 16, seed + 10);
            let a = net.evidence(&img).unwrap();
            assert!(a.evidence().iter().all(|&e| e >= 0.0 && e.is_finite()));
            assert_eq!(a, net.evidence(&img).unwrap());
        }
    }

    #[test]
    fn rejects_indivisible_size() {
        let net = UNet::new(UNetArch::new(2, 3, 2), 0);
        assert!(net.evidence(&image(10, 12, 0)).is_err());
    }

    /// Directional finite-difference check of the full backward pass with
    /// the scalar loss `sum(c * evidence)`, evaluated in f64 on f32 params.
    #[test]
    fn backward_matches_finite_differences() {
        let arch = UNetArch::new(3, 3, 3);
        let net = UNet::new(arch, 5);
        let img = image(8, 8, 1);
        let mut rng = crate::rng_from_seed(99);
        let coef: Vec<f32> = (0..3 * 64).map(|_| rng.random::<f32>() - 0.5).collect();
        let loss = |n: &UNet| -> f64 {
            let e = n.forward(&img).unwrap().evidence_chw();
            e.iter().zip(&coef).map(|(&a, &c)| a as f64 * c as f64).sum()
        };
        let cache = net.forward(&img).unwrap();
        let mut grads = vec![0.0f32; arch.param_count()];
        net.backward(&cache, &coef, &mut grads);

        let dir: Vec<f32> = (0..grads.len()).map(|_| rng.random::<f32>() - 0.5).collect();
        let analytic: f64 = grads.iter().zip(&dir).map(|(&g, &d)| g as f64 * d as f64).sum();
        // small step: ReLU and max-pool kinks bias larger ones
        let step = 2e-4f32;
        let shifted = |s: f32| {
            let mut n = net.clone();
            n.params_mut().iter_mut().zip(&dir).for_each(|(p, d)| *p += s * d);
            loss(&n)
        };
        let numeric = (shifted(step) - shifted(-step)) / (2.0 * step as f64);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs());
        assert!(rel < 5e-3, "analytic {analytic} numeric {numeric}");
    }
}
