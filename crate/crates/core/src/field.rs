//! Spatially correlated Gaussian fields.
//!
//! White noise on a regular grid is filtered in the 2-D frequency domain so that
//! the result has the exponential autocorrelation `exp(-d / d_corr)` with `d` the
//! horizontal Euclidean distance. The filter is the square root of the spectrum of
//! the target covariance, embedded on a torus twice the size of the grid (circulant
//! embedding), which makes the covariance exact between every pair of grid nodes.
//! Query points between nodes are bilinearly interpolated and rescaled to unit
//! variance.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::rng::rng_from_seed;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("correlation distance must be > 0, got {0}")]
    CorrDist(f64),
    #[error("field extent must be positive and finite, got {width} x {height}")]
    Extent { width: f64, height: f64 },
    #[error("grid step must be > 0 and at most half the correlation distance, got {step} for d_corr = {corr_dist}")]
    Step { step: f64, corr_dist: f64 },
    #[error("point ({x}, {y}) lies outside the field")]
    OutsideField { x: f64, y: f64 },
}

/// Axis-aligned rectangle covered by a field, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extent {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
}

impl Extent {
    pub fn new(x0: f64, y0: f64, width: f64, height: f64) -> Self {
        Self {
            x0,
            y0,
            width,
            height,
        }
    }

    /// Extent anchored at the origin.
    pub fn sized(width: f64, height: f64) -> Self {
        Self::new(0.0, 0.0, width, height)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && y >= self.y0 && x <= self.x0 + self.width && y <= self.y0 + self.height
    }
}

/// Standard-normal values on a grid with exponential spatial autocorrelation.
#[derive(Debug, Clone)]
pub struct GaussianField {
    extent: Extent,
    step: f64,
    corr_dist: f64,
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl GaussianField {
    pub fn corr_dist(&self) -> f64 {
        self.corr_dist
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn extent(&self) -> Extent {
        self.extent
    }

    /// Grid dimensions `(nx, ny)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Node value at grid index `(ix, iy)`.
    pub fn node(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn covariance(&self, dx_nodes: f64, dy_nodes: f64) -> f64 {
        (-(dx_nodes.hypot(dy_nodes)) * self.step / self.corr_dist).exp()
    }

    /// Field value at an arbitrary point inside the extent.
    ///
    /// Bilinear interpolation of the four surrounding nodes shrinks the variance
    /// between nodes; the interpolated value is divided by the exact standard
    /// deviation of the weighted combination so every point stays N(0, 1).
    pub fn sample(&self, x: f64, y: f64) -> Result<f64, FieldError> {
        let gx = (x - self.extent.x0) / self.step;
        let gy = (y - self.extent.y0) / self.step;
        let eps = 1e-9;
        if !(gx >= -eps && gy >= -eps && gx <= (self.nx - 1) as f64 + eps && gy <= (self.ny - 1) as f64 + eps)
        {
            return Err(FieldError::OutsideField { x, y });
        }
        let gx = gx.clamp(0.0, (self.nx - 1) as f64);
        let gy = gy.clamp(0.0, (self.ny - 1) as f64);
        let ix = (gx.floor() as usize).min(self.nx.saturating_sub(2));
        let iy = (gy.floor() as usize).min(self.ny.saturating_sub(2));
        let fx = if self.nx > 1 { gx - ix as f64 } else { 0.0 };
        let fy = if self.ny > 1 { gy - iy as f64 } else { 0.0 };

        let corners = [
            (0usize, 0usize, (1.0 - fx) * (1.0 - fy)),
            (1, 0, fx * (1.0 - fy)),
            (0, 1, (1.0 - fx) * fy),
            (1, 1, fx * fy),
        ];
        let mut value = 0.0;
        let mut variance = 0.0;
        for &(ax, ay, wa) in &corners {
            if wa == 0.0 {
                continue;
            }
            value += wa * self.node(ix + ax, iy + ay);
            for &(bx, by, wb) in &corners {
                if wb == 0.0 {
                    continue;
                }
                let dx = ax as f64 - bx as f64;
                let dy = ay as f64 - by as f64;
                variance += wa * wb * self.covariance(dx, dy);
            }
        }
        Ok(value / variance.sqrt())
    }
}

fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

fn fft2(data: &mut [Complex64], m: usize, fft: &Arc<dyn Fft<f64>>) {
    for row in data.chunks_exact_mut(m) {
        fft.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); m];
    for c in 0..m {
        for r in 0..m {
            column[r] = data[r * m + c];
        }
        fft.process(&mut column);
        for r in 0..m {
            data[r * m + c] = column[r];
        }
    }
}

/// Generate a unit-variance Gaussian field with autocorrelation `exp(-d / corr_dist)`
/// over `extent`, sampled every `grid_step` meters. Deterministic for a fixed seed.
pub fn generate_field(
    corr_dist: f64,
    extent: Extent,
    grid_step: f64,
    rng_seed: u64,
) -> Result<GaussianField, FieldError> {
    if !(corr_dist > 0.0 && corr_dist.is_finite()) {
        return Err(FieldError::CorrDist(corr_dist));
    }
    if !(extent.width > 0.0 && extent.height > 0.0 && extent.width.is_finite() && extent.height.is_finite())
    {
        return Err(FieldError::Extent {
            width: extent.width,
            height: extent.height,
        });
    }
    if !(grid_step > 0.0 && grid_step <= corr_dist / 2.0 + 1e-12) {
        return Err(FieldError::Step {
            step: grid_step,
            corr_dist,
        });
    }

    let nx = (extent.width / grid_step - 1e-9).ceil() as usize + 1;
    let ny = (extent.height / grid_step - 1e-9).ceil() as usize + 1;
    let m = smooth_size(2 * (nx.max(ny) - 1)).max(2);

    // Covariance of the torus node at (i, j) relative to node (0, 0), by minimum image.
    let mut spectrum: Vec<Complex64> = Vec::with_capacity(m * m);
    for i in 0..m {
        let di = i.min(m - i) as f64;
        for j in 0..m {
            let dj = j.min(m - j) as f64;
            let d = di.hypot(dj) * grid_step;
            spectrum.push(Complex64::new((-d / corr_dist).exp(), 0.0));
        }
    }
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(m);
    let inverse = planner.plan_fft_inverse(m);
    fft2(&mut spectrum, m, &forward);

    // Clipped eigenvalues of the circulant covariance; their mean is the node
    // variance after clipping, used to restore unit variance.
    let eigen: Vec<f64> = spectrum.iter().map(|c| c.re.max(0.0)).collect();
    let node_variance = eigen.iter().sum::<f64>() / (m * m) as f64;

    let mut rng = rng_from_seed(rng_seed);
    let mut noise: Vec<Complex64> = (0..m * m)
        .map(|_| Complex64::new(rng.sample::<f64, _>(StandardNormal), 0.0))
        .collect();
    fft2(&mut noise, m, &forward);
    for (z, l) in noise.iter_mut().zip(&eigen) {
        *z *= l.sqrt();
    }
    fft2(&mut noise, m, &inverse);

    let norm = 1.0 / ((m * m) as f64 * node_variance.sqrt());
    let mut values = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            values.push(noise[iy * m + ix].re * norm);
        }
    }

    Ok(GaussianField {
        extent,
        step: grid_step,
        corr_dist,
        nx,
        ny,
        values,
    })
}

/// Empirical autocorrelation of the grid nodes at a lag of `lag_nodes` along x.
pub fn empirical_autocorrelation_x(field: &GaussianField, lag_nodes: usize) -> f64 {
    let (nx, ny) = field.shape();
    let mut acc = 0.0;
    let mut count = 0usize;
    for iy in 0..ny {
        for ix in 0..nx.saturating_sub(lag_nodes) {
            acc += field.node(ix, iy) * field.node(ix + lag_nodes, iy);
            count += 1;
        }
    }
    acc / count as f64
}
