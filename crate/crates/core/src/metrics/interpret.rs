use alloc::vec::Vec;
use rand::RngCore;

use super::rank::spearman;
use crate::error::{Error, Result};
use crate::geometry::BoundaryGeometry;
use crate::supervision::random_ordered_pair;

/// One level of a noise sweep: the noise mean and the resulting uncertainty.
pub type NoiseLevelMap<'a> = (f64, &'a [f64]);

/// Spearman correlation between gradient and uncertainty on the boundary set.
pub fn ucc_gradient(u: &[f64], geom: &BoundaryGeometry) -> Result<f64> {
    if geom.boundary.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two boundary pixels"));
    }
    let g: Vec<f64> = geom.boundary.iter().map(|&i| geom.gradient[i]).collect();
    let ub: Vec<f64> = geom.boundary.iter().map(|&i| u[i]).collect();
    spearman(&g, &ub)
}

/// Spearman correlation between noise mean and uncertainty, pooling every
/// `(mu, u_i)` observation over pixels with `d <= d0` and all levels.
pub fn ucc_noise(sweep: &[NoiseLevelMap<'_>], geom: &BoundaryGeometry, d0: f64) -> Result<f64> {
    if sweep.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two noise levels"));
    }
    let near = geom.near(d0);
    if near.is_empty() {
        return Err(Error::UndefinedCorrelation("no pixels within d0 of a boundary"));
    }
    let mut mus = Vec::with_capacity(near.len() * sweep.len());
    let mut us = Vec::with_capacity(near.len() * sweep.len());
    for &(mu, u) in sweep {
        for &i in &near {
            mus.push(mu);
            us.push(u[i]);
        }
    }
    spearman(&mus, &us)
}

/// Share of pairs satisfying the expected ordering, plus the share of
/// pairs that satisfy it only through a tie.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UrResult {
    pub ratio: f64,
    pub ties: f64,
    pub pairs: usize,
}

/// Share of ordered boundary pairs with `(g_i - g_j)(u_i - u_j) <= 0`.
///
/// Pairs are enumerated exhaustively up to `max_pairs`, otherwise
/// `max_pairs` uniformly drawn ordered pairs are used.
pub fn ur_gradient<R: RngCore>(u: &[f64], geom: &BoundaryGeometry, max_pairs: usize, rng: &mut R) -> Option<UrResult> {
    let b = &geom.boundary;
    let g = &geom.gradient;
    let n = b.len();
    if n < 2 {
        return None;
    }
    let total = n * (n - 1);
    let (mut ok, mut tied) = (0usize, 0usize);
    if total <= max_pairs {
        for a in 0..n {
            for c in a + 1..n {
                let prod = (g[b[a]] - g[b[c]]) * (u[b[a]] - u[b[c]]);
                ok += 2 * usize::from(prod <= 0.0);
                tied += 2 * usize::from(prod == 0.0);
            }
        }
        let t = total as f64;
        return Some(UrResult { ratio: ok as f64 / t, ties: tied as f64 / t, pairs: total });
    }
    for _ in 0..max_pairs {
        let (a, c) = random_ordered_pair(rng, n);
        let prod = (g[b[a]] - g[b[c]]) * (u[b[a]] - u[b[c]]);
        ok += usize::from(prod <= 0.0);
        tied += usize::from(prod == 0.0);
    }
    let t = max_pairs as f64;
    Some(UrResult { ratio: ok as f64 / t, ties: tied as f64 / t, pairs: max_pairs })
}

/// Share of (near pixel, ordered level pair) observations with
/// `(mu_a - mu_b)(u_a - u_b) >= 0`.
pub fn ur_noise(sweep: &[NoiseLevelMap<'_>], geom: &BoundaryGeometry, d0: f64) -> Option<UrResult> {
    let near = geom.near(d0);
    if sweep.len() < 2 || near.is_empty() {
        return None;
    }
    let (mut ok, mut tied, mut total) = (0usize, 0usize, 0usize);
    for a in 0..sweep.len() {
        for c in a + 1..sweep.len() {
            let (mu_a, ua) = sweep[a];
            let (mu_c, uc) = sweep[c];
            for &i in &near {
                let prod = (mu_a - mu_c) * (ua[i] - uc[i]);
                ok += 2 * usize::from(prod >= 0.0);
                tied += 2 * usize::from(prod == 0.0);
                total += 2;
            }
        }
    }
    let t = total as f64;
    Some(UrResult { ratio: ok as f64 / t, ties: tied as f64 / t, pairs: total })
}
