//! 3D Weierstrass-Mandelbrot surface evaluation.
//!
//! ```text
//! z(x, y) = A * sum_{m=1..M} sum_{n=1..n_max} gamma^((D-3)n)
//!           * [cos(phi_mn) - cos(2 pi gamma^n r / L * cos(theta - pi m / M) + phi_mn)]
//! A = L (G/L)^(D-2) sqrt(ln(gamma) / M)
//! ```
//!
//! with `r = sqrt(x^2 + y^2)` and `theta = atan2(y, x)` (`theta(0, 0) = 0`).
//!
//! For large `n` the cosine argument is enormous, so the last bits of every
//! intermediate decide the value of a term. The kernel therefore evaluates the
//! argument with exactly the operation order of the formula above and only
//! hoists loop invariants (`2 pi gamma^n`, `gamma^((D-3)n)`, `cos(theta - pi m/M)`,
//! `cos(phi)`); it is bit-identical to a literal triple loop.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dem::{Dem, Stage};
use crate::error::{invalid, Error, Result};
use crate::exec::{self, Schedule};
use crate::seed::Stream;

/// Grids above this many bytes of `f64` storage are refused.
pub const GRID_BUDGET_BYTES: usize = 1 << 30;

/// Default relative amplitude below which frequency terms are dropped.
pub const DEFAULT_TRUNCATION: f64 = 1e-12;

/// Parameters of one monofractal band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WmParams {
    /// Number of ridges `M`.
    pub ridges: u32,
    /// Upper frequency index `n_max`.
    pub n_max: u32,
    /// Frequency density ratio `gamma > 1`.
    pub gamma: f64,
    /// Fractal dimension `D` in (2, 3).
    pub dimension: f64,
    /// Sampling length `L`.
    pub length: f64,
    /// Elevation scaling coefficient `G`.
    pub scale: f64,
}

impl WmParams {
    pub const TABLE_N_MAX: u32 = 1009;
    pub const TABLE_GAMMA: f64 = 1.5;
    pub const TABLE_LENGTH: f64 = 100.9;

    fn table(ridges: u32, dimension: f64, scale: f64) -> Self {
        Self {
            ridges,
            n_max: Self::TABLE_N_MAX,
            gamma: Self::TABLE_GAMMA,
            dimension,
            length: Self::TABLE_LENGTH,
            scale,
        }
    }

    /// Low-frequency band: M = 16, D = 2.2, G = 1e-6.
    pub fn low_frequency() -> Self {
        Self::table(16, 2.2, 1e-6)
    }

    /// Mid-frequency band: M = 32, D = 2.45, G = 8e-8.
    pub fn mid_frequency() -> Self {
        Self::table(32, 2.45, 8e-8)
    }

    /// High-frequency band: M = 64, G = 1e-8, with the experiment's `D`.
    pub fn high_frequency(dimension: f64) -> Self {
        Self::table(64, dimension, 1e-8)
    }

    pub fn with_n_max(mut self, n_max: u32) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.ridges < 1 {
            return Err(invalid("ridges must be >= 1"));
        }
        if self.n_max < 1 {
            return Err(invalid("n_max must be >= 1"));
        }
        if !(self.gamma > 1.0) || !self.gamma.is_finite() {
            return Err(invalid(format!("gamma must be > 1, got {}", self.gamma)));
        }
        if !(self.dimension > 2.0 && self.dimension < 3.0) {
            return Err(invalid(format!(
                "fractal dimension must lie in (2, 3), got {}",
                self.dimension
            )));
        }
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(invalid(format!("sampling length must be > 0, got {}", self.length)));
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(invalid(format!("scale G must be > 0, got {}", self.scale)));
        }
        Ok(())
    }

    /// Number of frequency terms kept when terms with relative amplitude
    /// `gamma^((D-3)n) / gamma^(D-3)` below `tolerance` are dropped.
    pub fn effective_terms(&self, truncation: Truncation) -> u32 {
        let Truncation::Relative(tol) = truncation else {
            return self.n_max;
        };
        let first = self.gamma.powf(self.dimension - 3.0);
        let mut n = 1;
        while n <= self.n_max {
            let decay = self.gamma.powf((self.dimension - 3.0) * n as f64);
            if decay < tol * first {
                break;
            }
            n += 1;
        }
        n - 1
    }
}

/// Amplitude coefficient `A = L (G/L)^(D-2) sqrt(ln(gamma)/M)`.
pub fn amplitude_coefficient(params: &WmParams) -> Result<f64> {
    params.validate()?;
    let WmParams {
        ridges,
        gamma,
        dimension,
        length,
        scale,
        ..
    } = *params;
    Ok(length * (scale / length).powf(dimension - 2.0) * (gamma.ln() / ridges as f64).sqrt())
}

/// Random phases `phi[m][n]` in `[0, pi)`, row-major over `(m, n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseMatrix {
    ridges: usize,
    n_max: usize,
    phases: Vec<f64>,
}

impl PhaseMatrix {
    pub fn from_seed(seed: u64, ridges: u32, n_max: u32) -> Self {
        let mut stream = Stream::new(seed);
        let len = ridges as usize * n_max as usize;
        let phases = (0..len).map(|_| stream.unit() * PI).collect();
        Self {
            ridges: ridges as usize,
            n_max: n_max as usize,
            phases,
        }
    }

    /// Build from explicit values; every entry must lie in `[0, pi]`.
    pub fn from_values(ridges: usize, n_max: usize, phases: Vec<f64>) -> Result<Self> {
        if phases.len() != ridges * n_max {
            return Err(invalid(format!(
                "phase matrix needs {} entries, got {}",
                ridges * n_max,
                phases.len()
            )));
        }
        if let Some(p) = phases.iter().find(|p| !(0.0..=PI).contains(*p)) {
            return Err(invalid(format!("phase {p} outside [0, pi]")));
        }
        Ok(Self {
            ridges,
            n_max,
            phases,
        })
    }

    pub fn ridges(&self) -> usize {
        self.ridges
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Phase for 1-based ridge `m` and frequency `n`.
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.phases[(m - 1) * self.n_max + (n - 1)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.phases
    }

    fn check(&self, params: &WmParams) -> Result<()> {
        if self.ridges != params.ridges as usize || self.n_max != params.n_max as usize {
            return Err(invalid(format!(
                "phase matrix is {}x{}, parameters need {}x{}",
                self.ridges, self.n_max, params.ridges, params.n_max
            )));
        }
        Ok(())
    }
}

/// Placement of the sample window in model space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub size_px: usize,
    pub x0: f64,
    pub y0: f64,
    pub spacing: f64,
}

impl GridSpec {
    /// `n_max` samples spaced `L / n_max` apart, starting at `(L, L)` so the
    /// radial centre of the function lies off the map.
    pub fn for_params(params: &WmParams) -> Self {
        Self {
            size_px: params.n_max as usize,
            x0: params.length,
            y0: params.length,
            spacing: params.length / params.n_max as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size_px < 2 {
            return Err(invalid(format!("grid needs >= 2 pixels per side, got {}", self.size_px)));
        }
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(invalid(format!("grid spacing must be > 0, got {}", self.spacing)));
        }
        if !self.x0.is_finite() || !self.y0.is_finite() {
            return Err(invalid("grid origin must be finite"));
        }
        let pixels = self.size_px.saturating_mul(self.size_px);
        if pixels.saturating_mul(std::mem::size_of::<f64>()) > GRID_BUDGET_BYTES {
            return Err(Error::Resource {
                pixels,
                budget_bytes: GRID_BUDGET_BYTES,
            });
        }
        Ok(())
    }

    /// Model-space coordinates of pixel `(row, col)`.
    pub fn position(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.x0 + col as f64 * self.spacing,
            self.y0 + row as f64 * self.spacing,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Truncation {
    /// Sum every term up to `n_max`.
    Off,
    /// Drop terms whose relative amplitude is below the given fraction.
    Relative(f64),
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Relative(DEFAULT_TRUNCATION)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WmOptions {
    pub truncation: Truncation,
    pub schedule: Schedule,
}

/// Angle convention: `atan2`, with the origin mapped to 0.
#[inline]
pub fn polar_angle(x: f64, y: f64) -> f64 {
    if x == 0.0 && y == 0.0 {
        0.0
    } else {
        y.atan2(x)
    }
}

/// Precomputed evaluator for one parameter set, or for a sweep of fractal
/// dimensions that share every other parameter and the phase matrix.
///
/// The cosine terms do not depend on `D`, so they are summed over ridges once
/// per frequency index and then weighted by `gamma^((D-3) n)` for each
/// dimension. Results match a direct double sum up to rounding.
pub struct WmKernel {
    length: f64,
    n_max: usize,
    /// Largest truncated term count over the sweep.
    terms: usize,
    /// `pi m / M` for m = 1..=M.
    ridge_angle: Vec<f64>,
    /// `2 pi gamma^n` for n = 1..=terms.
    wave: Vec<f64>,
    phases: Vec<f64>,
    cos_phases: Vec<f64>,
    sweep: Vec<DimensionTerms>,
}

struct DimensionTerms {
    amplitude: f64,
    /// `gamma^((D-3) n)` for n = 1..=terms of this dimension.
    decay: Vec<f64>,
}

impl WmKernel {
    pub fn new(params: &WmParams, phases: &PhaseMatrix, truncation: Truncation) -> Result<Self> {
        Self::sweep(params, &[params.dimension], phases, truncation)
    }

    /// Kernel for `params` evaluated at each of `dimensions`.
    pub fn sweep(
        params: &WmParams,
        dimensions: &[f64],
        phases: &PhaseMatrix,
        truncation: Truncation,
    ) -> Result<Self> {
        if dimensions.is_empty() {
            return Err(invalid("dimension sweep is empty"));
        }
        phases.check(params)?;
        let sweep = dimensions
            .iter()
            .map(|&dimension| {
                let p = WmParams { dimension, ..*params };
                let amplitude = amplitude_coefficient(&p)?;
                let terms = p.effective_terms(truncation) as usize;
                let decay = (1..=terms)
                    .map(|n| p.gamma.powf((p.dimension - 3.0) * n as f64))
                    .collect();
                Ok(DimensionTerms { amplitude, decay })
            })
            .collect::<Result<Vec<_>>>()?;
        let terms = sweep.iter().map(|d| d.decay.len()).max().unwrap_or(0);
        let ridges = params.ridges as usize;
        Ok(Self {
            length: params.length,
            n_max: params.n_max as usize,
            terms,
            ridge_angle: (1..=ridges).map(|m| PI * m as f64 / ridges as f64).collect(),
            wave: (1..=terms).map(|n| 2.0 * PI * params.gamma.powf(n as f64)).collect(),
            phases: phases.as_slice().to_vec(),
            cos_phases: phases.as_slice().iter().map(|p| p.cos()).collect(),
            sweep,
        })
    }

    /// Amplitude coefficient of the first (or only) dimension.
    pub fn amplitude(&self) -> f64 {
        self.sweep[0].amplitude
    }

    /// Frequency terms summed per ridge (the largest over the sweep).
    pub fn terms(&self) -> usize {
        self.terms
    }

    pub fn dimensions(&self) -> usize {
        self.sweep.len()
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut scratch = vec![0.0; self.terms];
        let mut out = [0.0];
        self.eval_sweep(x, y, &mut scratch, &mut out);
        out[0]
    }

    /// Surface height at `(x, y)` for every dimension of the sweep, written to
    /// `out`. `scratch` must hold [`terms`](Self::terms) values.
    pub fn eval_sweep(&self, x: f64, y: f64, scratch: &mut [f64], out: &mut [f64]) {
        let r = (x * x + y * y).sqrt();
        let theta = polar_angle(x, y);
        let scratch = &mut scratch[..self.terms];
        scratch.fill(0.0);
        for (m, &angle) in self.ridge_angle.iter().enumerate() {
            let orient = (theta - angle).cos();
            let row = m * self.n_max;
            let phases = &self.phases[row..row + self.terms];
            let cos_phases = &self.cos_phases[row..row + self.terms];
            for n in 0..self.terms {
                let arg = self.wave[n] * r / self.length * orient + phases[n];
                scratch[n] += cos_phases[n] - arg.cos();
            }
        }
        for (dim, z) in self.sweep.iter().zip(out.iter_mut()) {
            let sum: f64 = dim.decay.iter().zip(scratch.iter()).map(|(w, s)| w * s).sum();
            *z = dim.amplitude * sum;
        }
    }
}

/// Evaluate the surface at one model-space point with every term included.
pub fn evaluate_wm(x: f64, y: f64, params: &WmParams, phases: &PhaseMatrix) -> Result<f64> {
    Ok(WmKernel::new(params, phases, Truncation::Off)?.eval(x, y))
}

/// Raw monofractal grid with default options (truncation on, parallel).
pub fn generate_monofractal(params: &WmParams, grid: &GridSpec, seed: u64) -> Result<Dem> {
    generate_monofractal_with(params, grid, seed, &WmOptions::default())
}

pub fn generate_monofractal_with(
    params: &WmParams,
    grid: &GridSpec,
    seed: u64,
    options: &WmOptions,
) -> Result<Dem> {
    Ok(generate_dimension_sweep(params, &[params.dimension], grid, seed, options)?
        .pop()
        .expect("one dimension in, one grid out"))
}

/// Raw grids for `params` at each of `dimensions`, all sharing the phase
/// matrix drawn from `seed`. Each grid is identical to
/// [`generate_monofractal_with`] run with that dimension.
pub fn generate_dimension_sweep(
    params: &WmParams,
    dimensions: &[f64],
    grid: &GridSpec,
    seed: u64,
    options: &WmOptions,
) -> Result<Vec<Dem>> {
    for &dimension in dimensions {
        WmParams { dimension, ..*params }.validate()?;
    }
    grid.validate()?;
    let phases = PhaseMatrix::from_seed(seed, params.ridges, params.n_max);
    let kernel = WmKernel::sweep(params, dimensions, &phases, options.truncation)?;
    let size = grid.size_px;
    let k = dimensions.len();
    // Pixel-major interleaved: k heights per pixel.
    let mut values = vec![0.0; size * size * k];
    exec::fill_chunks(options.schedule, &mut values, size * k, |row, out| {
        let mut scratch = vec![0.0; kernel.terms()];
        for (col, v) in out.chunks_mut(k).enumerate() {
            let (x, y) = grid.position(row, col);
            kernel.eval_sweep(x, y, &mut scratch, v);
        }
    });
    (0..k)
        .map(|i| Dem::new(size, values.iter().skip(i).step_by(k).copied().collect(), Stage::Raw))
        .collect()
}
