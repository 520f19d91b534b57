//! Moore-neighbourhood gradient maps and three-class roughness segmentation.
//!
//! Gradients are raw 16-bit elevation units per centimetre of pixel distance,
//! the regime in which the default 50 / 140 thresholds apply.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dem::QuantizedDem;
use crate::error::{invalid, Error, Result};
use crate::exec::{self, Schedule};

pub const DEFAULT_LOW_SEMI: f64 = 50.0;
pub const DEFAULT_SEMI_HIGH: f64 = 140.0;
pub const DEFAULT_DISK_RADIUS_PX: usize = 5;
pub const DEFAULT_BORDER_M: f64 = 5.0;

/// Moore neighbour offsets `(d_row, d_col)`.
const MOORE: [(i64, i64); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

#[derive(Clone, Debug, PartialEq)]
pub struct GradientMap {
    size: usize,
    values: Vec<f64>,
}

impl GradientMap {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.size + col]
    }
}

pub fn moore_gradient_map(q: &QuantizedDem, xy_resolution: f64) -> Result<GradientMap> {
    moore_gradient_map_with(q, xy_resolution, Schedule::default())
}

/// Per pixel: `max |Z_P - Z_Q| / dist(P, Q)` over in-bounds Moore neighbours,
/// with `dist` in centimetres.
pub fn moore_gradient_map_with(
    q: &QuantizedDem,
    xy_resolution: f64,
    schedule: Schedule,
) -> Result<GradientMap> {
    let n = q.size();
    if n < 3 {
        return Err(Error::TooSmall(format!(
            "gradient map needs at least 3x3 pixels, got {n}x{n}"
        )));
    }
    if !(xy_resolution > 0.0) || !xy_resolution.is_finite() {
        return Err(invalid(format!("xy resolution must be > 0, got {xy_resolution}")));
    }
    let edge_cm = xy_resolution * 100.0;
    let diag_cm = std::f64::consts::SQRT_2 * edge_cm;
    let z = q.values();
    let mut values = vec![0.0; n * n];
    exec::fill_chunks(schedule, &mut values, n, |row, out| {
        for (col, v) in out.iter_mut().enumerate() {
            let zp = z[row * n + col] as f64;
            let mut best = 0.0f64;
            for &(dr, dc) in &MOORE {
                let (r, c) = (row as i64 + dr, col as i64 + dc);
                if r < 0 || c < 0 || r >= n as i64 || c >= n as i64 {
                    continue;
                }
                let dist = if dr != 0 && dc != 0 { diag_cm } else { edge_cm };
                let zq = z[r as usize * n + c as usize] as f64;
                best = best.max((zp - zq).abs() / dist);
            }
            *v = best;
        }
    });
    Ok(GradientMap { size: n, values })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum Class {
    Low = 0,
    Semi = 1,
    High = 2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub low_semi: f64,
    pub semi_high: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            low_semi: DEFAULT_LOW_SEMI,
            semi_high: DEFAULT_SEMI_HIGH,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.low_semi < self.semi_high) {
            return Err(invalid(format!(
                "thresholds must be increasing, got ({}, {})",
                self.low_semi, self.semi_high
            )));
        }
        Ok(())
    }

    /// Lower class wins on equality.
    pub fn class_of(&self, g: f64) -> Class {
        if g <= self.low_semi {
            Class::Low
        } else if g <= self.semi_high {
            Class::Semi
        } else {
            Class::High
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoughnessMap {
    size: usize,
    classes: Vec<Class>,
    thresholds: Thresholds,
}

impl RoughnessMap {
    pub fn new(size: usize, classes: Vec<Class>, thresholds: Thresholds) -> Result<Self> {
        if classes.len() != size * size {
            return Err(invalid(format!(
                "{} classes do not form a {size}x{size} grid",
                classes.len()
            )));
        }
        Ok(Self {
            size,
            classes,
            thresholds,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn classes(&self) -> &[Class] {
        &self.classes
    }

    pub fn thresholds(&self) -> Thresholds {
        self.thresholds
    }

    pub fn get(&self, row: usize, col: usize) -> Class {
        self.classes[row * self.size + col]
    }

    /// Indexed 8-bit PNG: 0 = low, 1 = semi, 2 = high.
    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut bytes = Vec::new();
        {
            let side = self.size as u32;
            let mut encoder = png::Encoder::new(&mut bytes, side, side);
            encoder.set_color(png::ColorType::Indexed);
            encoder.set_depth(png::BitDepth::Eight);
            encoder.set_palette(vec![40, 70, 200, 240, 140, 30, 250, 220, 40]);
            encoder.set_compression(png::Compression::Default);
            let mut writer = encoder
                .write_header()
                .map_err(|e| Error::Png(e.to_string()))?;
            let data: Vec<u8> = self.classes.iter().map(|&c| c as u8).collect();
            writer
                .write_image_data(&data)
                .map_err(|e| Error::Png(e.to_string()))?;
        }
        Ok(bytes)
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        let bytes = self.encode_png()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

pub fn classify(g: &GradientMap, thresholds: Thresholds) -> Result<RoughnessMap> {
    thresholds.validate()?;
    let classes = g.values.iter().map(|&v| thresholds.class_of(v)).collect();
    RoughnessMap::new(g.size, classes, thresholds)
}

/// Offsets `(d_row, d_col)` with `d_row^2 + d_col^2 <= radius^2`.
pub fn disk_offsets(radius: usize) -> Vec<(i64, i64)> {
    let r = radius as i64;
    (-r..=r)
        .flat_map(|dr| (-r..=r).map(move |dc| (dr, dc)))
        .filter(|(dr, dc)| dr * dr + dc * dc <= r * r)
        .collect()
}

/// Half-width of the disk on each row offset `-r..=r`.
fn disk_spans(radius: usize) -> Vec<(i64, i64)> {
    let r = radius as i64;
    (-r..=r)
        .map(|dr| {
            let mut w = 0;
            while (w + 1) * (w + 1) + dr * dr <= r * r {
                w += 1;
            }
            (dr, w)
        })
        .collect()
}

/// Row prefix counts: `prefix[row * (n + 1) + k]` = set pixels in `row[..k]`.
fn row_prefix(mask: &[bool], n: usize) -> Vec<u32> {
    let mut prefix = vec![0u32; n * (n + 1)];
    for row in 0..n {
        let base = row * (n + 1);
        for col in 0..n {
            prefix[base + col + 1] = prefix[base + col] + mask[row * n + col] as u32;
        }
    }
    prefix
}

/// Binary dilation with the disk; pixels outside the image count as unset.
pub fn dilate(mask: &[bool], n: usize, radius: usize) -> Vec<bool> {
    let prefix = row_prefix(mask, n);
    let spans = disk_spans(radius);
    let mut out = vec![false; n * n];
    for row in 0..n {
        for col in 0..n {
            out[row * n + col] = spans.iter().any(|&(dr, w)| {
                let r = row as i64 + dr;
                if r < 0 || r >= n as i64 {
                    return false;
                }
                let lo = (col as i64 - w).max(0) as usize;
                let hi = (col as i64 + w).min(n as i64 - 1) as usize;
                let base = r as usize * (n + 1);
                prefix[base + hi + 1] > prefix[base + lo]
            });
        }
    }
    out
}

/// Binary erosion with the disk; pixels outside the image count as set.
pub fn erode(mask: &[bool], n: usize, radius: usize) -> Vec<bool> {
    let prefix = row_prefix(mask, n);
    let spans = disk_spans(radius);
    let mut out = vec![false; n * n];
    for row in 0..n {
        for col in 0..n {
            out[row * n + col] = spans.iter().all(|&(dr, w)| {
                let r = row as i64 + dr;
                if r < 0 || r >= n as i64 {
                    return true;
                }
                let lo = (col as i64 - w).max(0) as usize;
                let hi = (col as i64 + w).min(n as i64 - 1) as usize;
                let base = r as usize * (n + 1);
                (prefix[base + hi + 1] - prefix[base + lo]) as usize == hi - lo + 1
            });
        }
    }
    out
}

pub fn close_mask(mask: &[bool], n: usize, radius: usize) -> Vec<bool> {
    erode(&dilate(mask, n, radius), n, radius)
}

/// Close the high mask, then the semi-or-high mask, and recompose with
/// priority high > semi > low.
pub fn morphological_close(r: &RoughnessMap, disk_radius: usize) -> Result<RoughnessMap> {
    if disk_radius < 1 {
        return Err(invalid("disk radius must be >= 1"));
    }
    let n = r.size;
    let high: Vec<bool> = r.classes.iter().map(|&c| c == Class::High).collect();
    let rough: Vec<bool> = r.classes.iter().map(|&c| c != Class::Low).collect();
    let high = close_mask(&high, n, disk_radius);
    let rough = close_mask(&rough, n, disk_radius);
    let classes = high
        .iter()
        .zip(&rough)
        .map(|(&h, &s)| {
            if h {
                Class::High
            } else if s {
                Class::Semi
            } else {
                Class::Low
            }
        })
        .collect();
    RoughnessMap::new(n, classes, r.thresholds)
}

/// Whether pixel index `k` along one axis lies at least `border_m` from both edges.
pub fn in_interior(k: usize, size: usize, xy_resolution: f64, border_m: f64) -> bool {
    let eps = 1e-9;
    let near = k as f64 * xy_resolution;
    let far = (size - 1 - k) as f64 * xy_resolution;
    near >= border_m - eps && far >= border_m - eps
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    pub low_pct: f64,
    pub semi_pct: f64,
    pub high_pct: f64,
}

/// Class percentages over pixels at least `border_m` from every edge.
/// Feed this the map from [`classify`], before closing.
pub fn composition(r: &RoughnessMap, border_m: f64, xy_resolution: f64) -> Result<Composition> {
    let n = r.size;
    let interior: Vec<usize> = (0..n)
        .filter(|&k| in_interior(k, n, xy_resolution, border_m))
        .collect();
    if interior.is_empty() {
        return Err(Error::EmptyInput("no pixels remain after removing the border"));
    }
    let mut counts = [0usize; 3];
    for &row in &interior {
        for &col in &interior {
            counts[r.get(row, col) as usize] += 1;
        }
    }
    let total = (interior.len() * interior.len()) as f64;
    Ok(Composition {
        low_pct: counts[0] as f64 / total * 100.0,
        semi_pct: counts[1] as f64 / total * 100.0,
        high_pct: counts[2] as f64 / total * 100.0,
    })
}
