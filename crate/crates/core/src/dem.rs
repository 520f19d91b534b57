//! Elevation grids: smoothing, normalization, multifractal combination,
//! 16-bit quantization and world-unit heightfields.

use std::io::Cursor;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::{self, Schedule};
use crate::seed::derive_seed;
use crate::wm::{self, GridSpec, WmOptions, WmParams};

pub const PIPELINE_VERSION: &str = "wmterrain-pipeline/1";

/// Full 16-bit span in metres at 100 % Z scale.
pub const FULL_Z_SPAN_M: f64 = 512.0;
/// Pixel size in metres before the XY reduction.
pub const BASE_XY_RESOLUTION_M: f64 = 1.0;
pub const DEFAULT_XY_REDUCTION_PCT: f64 = 95.0;
pub const DEFAULT_Z_SCALE_PCT: f64 = 0.75;
pub const DEFAULT_SIGMA_PX: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Raw,
    Smoothed,
    Normalized,
    Combined,
}

/// Square grid of finite elevations stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dem {
    size: usize,
    values: Vec<f64>,
    stage: Stage,
}

impl Dem {
    pub fn new(size: usize, values: Vec<f64>, stage: Stage) -> Result<Self> {
        if values.len() != size * size {
            return Err(invalid(format!(
                "{} values do not form a {size}x{size} grid",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("elevations must be finite"));
        }
        Ok(Self {
            size,
            values,
            stage,
        })
    }

    pub fn from_fn(size: usize, stage: Stage, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let values = (0..size * size).map(|k| f(k / size, k % size)).collect();
        Self::new(size, values, stage)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.size + col]
    }

    fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Discrete Gaussian weights for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Separable Gaussian low-pass filter with edge replication.
pub fn gaussian_smooth(dem: &Dem, sigma: f64) -> Result<Dem> {
    gaussian_smooth_with(dem, sigma, Schedule::default())
}

pub fn gaussian_smooth_with(dem: &Dem, sigma: f64, schedule: Schedule) -> Result<Dem> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid(format!("sigma must be > 0, got {sigma}")));
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let n = dem.size;
    let last = n as i64 - 1;
    let clamp = |k: i64| k.clamp(0, last) as usize;

    let mut horizontal = vec![0.0; n * n];
    exec::fill_chunks(schedule, &mut horizontal, n, |row, out| {
        let src = &dem.values[row * n..(row + 1) * n];
        for (col, v) in out.iter_mut().enumerate() {
            *v = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * src[clamp(col as i64 + k as i64 - radius)])
                .sum();
        }
    });
    let mut values = vec![0.0; n * n];
    exec::fill_chunks(schedule, &mut values, n, |row, out| {
        for (col, v) in out.iter_mut().enumerate() {
            *v = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * horizontal[clamp(row as i64 + k as i64 - radius) * n + col])
                .sum();
        }
    });
    Dem::new(n, values, Stage::Smoothed)
}

/// `(v - mean) / max|v - mean|`: zero mean, peak magnitude one.
pub fn normalize_zero_mean_unit(dem: &Dem) -> Result<Dem> {
    let count = dem.values.len() as f64;
    let mean = dem.values.iter().sum::<f64>() / count;
    let peak = dem
        .values
        .iter()
        .map(|v| (v - mean).abs())
        .fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Degenerate("cannot normalize a constant grid".into()));
    }
    let values = dem.values.iter().map(|v| (v - mean) / peak).collect();
    Dem::new(dem.size, values, Stage::Normalized)
}

/// Pixel-wise product of three equally sized grids.
pub fn combine_product(low: &Dem, mid: &Dem, high: &Dem) -> Result<Dem> {
    for other in [mid, high] {
        if other.size != low.size {
            return Err(Error::SizeMismatch {
                expected: low.size,
                actual: other.size,
            });
        }
    }
    let values = low
        .values
        .iter()
        .zip(&mid.values)
        .zip(&high.values)
        .map(|((a, b), c)| a * b * c)
        .collect();
    Dem::new(low.size, values, Stage::Combined)
}

/// 16-bit elevation image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedDem {
    size: usize,
    values: Vec<u16>,
}

impl QuantizedDem {
    pub fn new(size: usize, values: Vec<u16>) -> Result<Self> {
        if values.len() != size * size {
            return Err(invalid(format!(
                "{} values do not form a {size}x{size} grid",
                values.len()
            )));
        }
        Ok(Self { size, values })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> &[u16] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.values[row * self.size + col]
    }

    /// Grayscale 16-bit PNG, big-endian samples, fixed encoder settings.
    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut bytes = Vec::new();
        {
            let side = self.size as u32;
            let mut encoder = png::Encoder::new(&mut bytes, side, side);
            encoder.set_color(png::ColorType::Grayscale);
            encoder.set_depth(png::BitDepth::Sixteen);
            encoder.set_compression(png::Compression::Default);
            encoder.set_filter(png::FilterType::Paeth);
            encoder.set_adaptive_filter(png::AdaptiveFilterType::NonAdaptive);
            let mut writer = encoder.write_header().map_err(png_err)?;
            let data: Vec<u8> = self.values.iter().flat_map(|v| v.to_be_bytes()).collect();
            writer.write_image_data(&data).map_err(png_err)?;
            writer.finish().map_err(png_err)?;
        }
        Ok(bytes)
    }

    pub fn decode_png(bytes: &[u8]) -> Result<Self> {
        let decoder = png::Decoder::new(Cursor::new(bytes));
        let mut reader = decoder.read_info().map_err(png_err)?;
        let info = reader.info();
        if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Sixteen
        {
            return Err(Error::Png(format!(
                "expected 16-bit grayscale, got {:?} {:?}",
                info.color_type, info.bit_depth
            )));
        }
        if info.width != info.height {
            return Err(Error::Png(format!(
                "expected a square image, got {}x{}",
                info.width, info.height
            )));
        }
        let size = info.width as usize;
        let mut buf = vec![0; reader.output_buffer_size()];
        let frame = reader.next_frame(&mut buf).map_err(png_err)?;
        let values = buf[..frame.buffer_size()]
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]))
            .collect();
        Self::new(size, values)
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        let bytes = self.encode_png()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn read_png(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode_png(&bytes).map_err(|e| Error::format(path, e.to_string()))
    }
}

fn png_err(e: impl std::fmt::Display) -> Error {
    Error::Png(e.to_string())
}

/// Affine min-max map onto `0..=65535`, rounding half to even.
pub fn quantize_png16(dem: &Dem) -> Result<QuantizedDem> {
    let (lo, hi) = dem.min_max();
    if !(hi > lo) {
        return Err(Error::Degenerate("cannot quantize a constant grid".into()));
    }
    let span = hi - lo;
    let values = dem
        .values
        .iter()
        .map(|v| ((v - lo) / span * 65535.0).round_ties_even().clamp(0.0, 65535.0) as u16)
        .collect();
    QuantizedDem::new(dem.size, values)
}

/// Elevations in metres on a regular grid. Pixel `(row, col)` sits at
/// `x = col * xy_resolution`, `y = row * xy_resolution`.
#[derive(Clone, Debug, PartialEq)]
pub struct Heightfield {
    size: usize,
    xy_resolution: f64,
    z_span_m: f64,
    elevations: Vec<f64>,
}

impl Heightfield {
    pub fn new(size: usize, xy_resolution: f64, elevations: Vec<f64>) -> Result<Self> {
        if size < 2 || elevations.len() != size * size {
            return Err(invalid(format!(
                "{} elevations do not form a {size}x{size} grid",
                elevations.len()
            )));
        }
        if !(xy_resolution > 0.0) || !xy_resolution.is_finite() {
            return Err(invalid(format!("xy resolution must be > 0, got {xy_resolution}")));
        }
        if elevations.iter().any(|v| !v.is_finite()) {
            return Err(invalid("elevations must be finite"));
        }
        let (lo, hi) = elevations
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        Ok(Self {
            size,
            xy_resolution,
            z_span_m: hi - lo,
            elevations,
        })
    }

    pub fn from_fn(
        size: usize,
        xy_resolution: f64,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let elevations = (0..size * size)
            .map(|k| {
                let (row, col) = (k / size, k % size);
                f(col as f64 * xy_resolution, row as f64 * xy_resolution)
            })
            .collect();
        Self::new(size, xy_resolution, elevations)
    }

    /// `elevation = (u / 65535 - 0.5) * z_span_m`.
    pub fn from_quantized(q: &QuantizedDem, xy_resolution: f64, z_span_m: f64) -> Result<Self> {
        if !(z_span_m > 0.0) || !z_span_m.is_finite() {
            return Err(invalid(format!("z span must be > 0, got {z_span_m}")));
        }
        let elevations = q
            .values
            .iter()
            .map(|&u| (u as f64 / 65535.0 - 0.5) * z_span_m)
            .collect();
        let mut h = Self::new(q.size, xy_resolution, elevations)?;
        h.z_span_m = z_span_m;
        Ok(h)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn xy_resolution(&self) -> f64 {
        self.xy_resolution
    }

    pub fn z_span_m(&self) -> f64 {
        self.z_span_m
    }

    /// Distance between the outermost pixel centres.
    pub fn extent_m(&self) -> f64 {
        (self.size - 1) as f64 * self.xy_resolution
    }

    pub fn elevations(&self) -> &[f64] {
        &self.elevations
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.elevations[row * self.size + col]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let e = self.extent_m();
        (0.0..=e).contains(&x) && (0.0..=e).contains(&y)
    }

    /// Bilinear height at a world position.
    pub fn height_at(&self, x: f64, y: f64) -> Result<f64> {
        if !self.contains(x, y) {
            return Err(Error::OutOfBounds { x, y });
        }
        let fx = x / self.xy_resolution;
        let fy = y / self.xy_resolution;
        let last = self.size - 1;
        let c0 = (fx.floor() as usize).min(last - 1);
        let r0 = (fy.floor() as usize).min(last - 1);
        let tx = fx - c0 as f64;
        let ty = fy - r0 as f64;
        let z00 = self.get(r0, c0);
        let z01 = self.get(r0, c0 + 1);
        let z10 = self.get(r0 + 1, c0);
        let z11 = self.get(r0 + 1, c0 + 1);
        let top = z00 + (z01 - z00) * tx;
        let bottom = z10 + (z11 - z10) * tx;
        Ok(top + (bottom - top) * ty)
    }

    /// Nearest pixel `(row, col)` to a world position inside the map.
    pub fn nearest_pixel(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        self.contains(x, y).then(|| {
            (
                (y / self.xy_resolution).round() as usize,
                (x / self.xy_resolution).round() as usize,
            )
        })
    }

    /// Largest absolute slope (rise over run) from a pixel to its Moore neighbours.
    pub fn max_slope_at(&self, row: usize, col: usize) -> f64 {
        let z = self.get(row, col);
        let diag = std::f64::consts::SQRT_2 * self.xy_resolution;
        let mut best = 0.0f64;
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (r, c) = (row as i64 + dr, col as i64 + dc);
                if r < 0 || c < 0 || r >= self.size as i64 || c >= self.size as i64 {
                    continue;
                }
                let dist = if dr != 0 && dc != 0 { diag } else { self.xy_resolution };
                best = best.max((z - self.get(r as usize, c as usize)).abs() / dist);
            }
        }
        best
    }
}

/// Pixel size after shrinking the base landscape by `xy_reduction_pct`.
pub fn xy_resolution_for(xy_reduction_pct: f64) -> Result<f64> {
    if !(0.0..100.0).contains(&xy_reduction_pct) {
        return Err(invalid(format!(
            "xy reduction must lie in [0, 100), got {xy_reduction_pct}"
        )));
    }
    Ok(BASE_XY_RESOLUTION_M * (1.0 - xy_reduction_pct / 100.0))
}

/// Elevation span in metres for a Z scale percentage.
pub fn z_span_for(z_scale_pct: f64) -> Result<f64> {
    if !(z_scale_pct > 0.0) || !z_scale_pct.is_finite() {
        return Err(invalid(format!("z scale must be > 0, got {z_scale_pct}")));
    }
    Ok(z_scale_pct / 100.0 * FULL_Z_SPAN_M)
}

/// World heightfield: defaults (95 %, 0.75 %) give 5 cm pixels and a 3.84 m span.
pub fn to_heightfield(q: &QuantizedDem, xy_reduction_pct: f64, z_scale_pct: f64) -> Result<Heightfield> {
    Heightfield::from_quantized(q, xy_resolution_for(xy_reduction_pct)?, z_span_for(z_scale_pct)?)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothingPlacement {
    /// Smooth every band before normalization.
    #[default]
    PerBand,
    /// Smooth only the combined product.
    PostCombine,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineOptions {
    pub sigma: f64,
    pub smoothing: SmoothingPlacement,
    pub wm: WmOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            sigma: DEFAULT_SIGMA_PX,
            smoothing: SmoothingPlacement::default(),
            wm: WmOptions::default(),
        }
    }
}

/// Seed of band `index` (0 = low, 1 = mid, 2 = high) for a map seed.
pub fn band_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, index as u64 + 1)
}

/// One band through generation, (optional) smoothing and normalization.
pub fn prepare_band(
    params: &WmParams,
    grid: &GridSpec,
    seed: u64,
    options: &PipelineOptions,
) -> Result<Dem> {
    shape_band(&wm::generate_monofractal_with(params, grid, seed, &options.wm)?, options)
}

/// Smoothing (when per band) and normalization of a raw band.
pub fn shape_band(raw: &Dem, options: &PipelineOptions) -> Result<Dem> {
    match options.smoothing {
        SmoothingPlacement::PerBand => {
            normalize_zero_mean_unit(&gaussian_smooth_with(raw, options.sigma, options.wm.schedule)?)
        }
        SmoothingPlacement::PostCombine => normalize_zero_mean_unit(raw),
    }
}

/// Combine prepared bands and quantize.
pub fn finish_multifractal(bands: [&Dem; 3], options: &PipelineOptions) -> Result<QuantizedDem> {
    let combined = combine_product(bands[0], bands[1], bands[2])?;
    let combined = match options.smoothing {
        SmoothingPlacement::PerBand => combined,
        SmoothingPlacement::PostCombine => {
            gaussian_smooth_with(&combined, options.sigma, options.wm.schedule)?
        }
    };
    quantize_png16(&combined)
}

pub fn build_multifractal(
    low: &WmParams,
    mid: &WmParams,
    high: &WmParams,
    grid: &GridSpec,
    seed: u64,
    sigma: f64,
) -> Result<QuantizedDem> {
    let options = PipelineOptions {
        sigma,
        ..PipelineOptions::default()
    };
    build_multifractal_with([low, mid, high], grid, seed, &options)
}

pub fn build_multifractal_with(
    bands: [&WmParams; 3],
    grid: &GridSpec,
    seed: u64,
    options: &PipelineOptions,
) -> Result<QuantizedDem> {
    let prepared = bands
        .iter()
        .enumerate()
        .map(|(i, p)| prepare_band(p, grid, band_seed(seed, i), options))
        .collect::<Result<Vec<_>>>()?;
    finish_multifractal([&prepared[0], &prepared[1], &prepared[2]], options)
}

/// Multifractal DEMs for each of `dimensions`, substituted into the
/// high-frequency band. Low and mid bands are computed once and the high band
/// is evaluated as a single sweep; each output is byte-identical to
/// [`build_multifractal_with`] with that dimension.
pub fn build_multifractal_sweep(
    bands: [&WmParams; 3],
    dimensions: &[f64],
    grid: &GridSpec,
    seed: u64,
    options: &PipelineOptions,
) -> Result<Vec<QuantizedDem>> {
    let low = prepare_band(bands[0], grid, band_seed(seed, 0), options)?;
    let mid = prepare_band(bands[1], grid, band_seed(seed, 1), options)?;
    wm::generate_dimension_sweep(bands[2], dimensions, grid, band_seed(seed, 2), &options.wm)?
        .iter()
        .map(|raw| finish_multifractal([&low, &mid, &shape_band(raw, options)?], options))
        .collect()
}

/// JSON sidecar written next to every DEM image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemMetadata {
    pub pipeline_version: String,
    pub map_id: String,
    pub seed: u64,
    pub band_seeds: [u64; 3],
    pub low: WmParams,
    pub mid: WmParams,
    pub high: WmParams,
    pub sigma_px: f64,
    pub smoothing: SmoothingPlacement,
    pub truncation: Option<f64>,
    pub grid: GridSpec,
    pub xy_resolution_m: f64,
    pub z_span_m: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strip(values: &[f64]) -> Dem {
        let n = (values.len() as f64).sqrt() as usize;
        Dem::new(n, values.to_vec(), Stage::Raw).unwrap()
    }

    #[test]
    fn smoothing_preserves_constants() {
        let d = Dem::from_fn(12, Stage::Raw, |_, _| 3.25).unwrap();
        let s = gaussian_smooth(&d, 1.7).unwrap();
        assert!(s.values().iter().all(|v| (v - 3.25).abs() < 1e-12));
        assert_eq!(s.stage(), Stage::Smoothed);
        assert!(gaussian_smooth(&d, 0.0).is_err());
    }

    #[test]
    fn impulse_response_is_sampled_gaussian() {
        let d = Dem::from_fn(9, Stage::Raw, |r, c| if (r, c) == (4, 4) { 1.0 } else { 0.0 }).unwrap();
        let s = gaussian_smooth(&d, 1.0).unwrap();
        // Direct 2D evaluation of the normalized discrete kernel.
        let norm: f64 = (-3i32..=3).map(|k| (-(k * k) as f64 / 2.0).exp()).sum();
        for r in 0..9i32 {
            for c in 0..9i32 {
                let (dr, dc) = (r - 4, c - 4);
                let expect = if dr.abs() <= 3 && dc.abs() <= 3 {
                    (-((dr * dr + dc * dc) as f64) / 2.0).exp() / (norm * norm)
                } else {
                    0.0
                };
                assert!((s.get(r as usize, c as usize) - expect).abs() < 1e-15);
            }
        }
        assert!((s.get(4, 4) - 0.159_241_125_690_702_45).abs() < 1e-14);
    }

    #[test]
    fn smoothing_lowers_variance_of_noise() {
        let mut stream = crate::seed::Stream::new(9);
        let d = Dem::from_fn(40, Stage::Raw, |_, _| 0.0).unwrap();
        let noise: Vec<f64> = d.values().iter().map(|_| stream.unit() - 0.5).collect();
        let d = Dem::new(40, noise, Stage::Raw).unwrap();
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
        };
        let s = gaussian_smooth(&d, 2.0).unwrap();
        assert!(var(s.values()) < var(d.values()));
    }

    #[test]
    fn normalization() {
        let d = strip(&[1.0, 2.0, 3.0, 2.0]);
        let n = normalize_zero_mean_unit(&d).unwrap();
        assert_eq!(n.values(), &[-1.0, 0.0, 1.0, 0.0]);
        let c = strip(&[5.0; 9]);
        assert!(matches!(normalize_zero_mean_unit(&c), Err(Error::Degenerate(_))));
    }

    #[test]
    fn product_identity_and_signs() {
        let d = Dem::from_fn(4, Stage::Normalized, |r, c| (r as f64 - 1.5) * (c as f64 + 0.5)).unwrap();
        let ones = Dem::from_fn(4, Stage::Normalized, |_, _| 1.0).unwrap();
        assert_eq!(combine_product(&d, &ones, &ones).unwrap().values(), d.values());

        let a = Dem::from_fn(4, Stage::Raw, |r, c| (r * 4 + c) as f64 - 7.0).unwrap();
        let b = Dem::from_fn(4, Stage::Raw, |r, c| (c as f64) - (r as f64)).unwrap();
        let c = Dem::from_fn(4, Stage::Raw, |r, _| -(r as f64) - 1.0).unwrap();
        let p = combine_product(&a, &b, &c).unwrap();
        // Hand-computed corners: (-7)(0)(-1), (-4)(3)(-1), (5)(-3)(-4), (8)(0)(-4)
        assert_eq!(p.get(0, 0), 0.0);
        assert_eq!(p.get(0, 3), 12.0);
        assert_eq!(p.get(3, 0), 60.0);
        assert_eq!(p.get(3, 3), 0.0);
        assert_eq!(p.get(1, 0), -3.0 * -1.0 * -2.0);

        let small = Dem::from_fn(3, Stage::Raw, |_, _| 1.0).unwrap();
        assert!(matches!(combine_product(&a, &small, &c), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn quantization_endpoints_and_ties() {
        let d = strip(&[0.0, 0.5, 1.0, 0.25]);
        let q = quantize_png16(&d).unwrap();
        assert_eq!(q.values(), &[0, 32768, 65535, 16384]);
        assert!(quantize_png16(&strip(&[2.0; 4])).is_err());
    }

    #[test]
    fn png_round_trip() {
        let q = QuantizedDem::new(3, vec![0, 1, 2, 300, 65535, 40000, 7, 8, 9]).unwrap();
        let bytes = q.encode_png().unwrap();
        assert_eq!(QuantizedDem::decode_png(&bytes).unwrap(), q);
        assert_eq!(bytes, q.encode_png().unwrap());
    }

    #[test]
    fn heightfield_conventions() {
        let q = QuantizedDem::new(2, vec![0, 65535, 0, 65535]).unwrap();
        let h = to_heightfield(&q, 95.0, 0.75).unwrap();
        assert!((h.xy_resolution() - 0.05).abs() < 1e-15);
        assert!((h.get(0, 0) + 1.92).abs() < 1e-12);
        assert!((h.get(0, 1) - 1.92).abs() < 1e-12);
        assert!((h.z_span_m() - 3.84).abs() < 1e-12);
        assert!(to_heightfield(&q, 95.0, 0.0).is_err());
        assert!(to_heightfield(&q, 100.0, 0.75).is_err());

        // 1009 pixels at 5 cm: 50.4 m between outer centres, 50.45 m footprint.
        let extent = 1008.0 * xy_resolution_for(95.0).unwrap();
        assert!((extent - 50.4).abs() < 1e-9);
        assert!((1009.0 * 0.05 - 50.45_f64).abs() < 1e-9);
    }

    #[test]
    fn bilinear_lookup() {
        let h = Heightfield::from_fn(5, 0.5, |x, y| 2.0 * x - y + 1.0).unwrap();
        let z = h.height_at(0.8, 1.3).unwrap();
        assert!((z - (1.6 - 1.3 + 1.0)).abs() < 1e-12);
        assert!((h.height_at(2.0, 2.0).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(h.height_at(2.1, 0.0), Err(Error::OutOfBounds { .. })));
        assert!((h.max_slope_at(2, 2) - 3.0 / std::f64::consts::SQRT_2).abs() < 1e-12);
    }
}
