//! Independent reference implementations shared by the oracle tests and the
//! acceptance suite. Nothing here calls into the library's own algorithms.
#![allow(dead_code)]

use std::f64::consts::PI;

use wmterrain::seed::Stream;
use wmterrain::wm::GridSpec;
use wmterrain::{Class, Mission, PhaseMatrix, QuantizedDem, RoughnessMap, WmParams};

// -------------------------------------------------------------------- W-M

/// Naive evaluation: amplitude, polar coordinates and every (m, n) term
/// computed in place. The cosine argument is written in the formula's own
/// left-to-right order; at high `n` it is huge, so any algebraically equal but
/// differently rounded argument would decorrelate the cosine entirely.
pub fn wm_oracle(x: f64, y: f64, p: &WmParams, phases: &PhaseMatrix) -> f64 {
    let (big_m, n_max) = (p.ridges as usize, p.n_max as usize);
    let a = p.length
        * (p.scale / p.length).powf(p.dimension - 2.0)
        * (p.gamma.ln() / big_m as f64).sqrt();
    let r = (x * x + y * y).sqrt();
    let theta = if x == 0.0 && y == 0.0 { 0.0 } else { y.atan2(x) };
    let mut z = 0.0;
    for m in 1..=big_m {
        for n in 1..=n_max {
            let phi = phases.get(m, n);
            let w = p.gamma.powf((p.dimension - 3.0) * n as f64);
            let arg = 2.0 * PI * p.gamma.powf(n as f64) * r / p.length
                * (theta - PI * m as f64 / big_m as f64).cos()
                + phi;
            z += a * w * (phi.cos() - arg.cos());
        }
    }
    z
}

pub fn draw_params(s: &mut Stream) -> WmParams {
    WmParams {
        ridges: 1 + s.index(64) as u32,
        n_max: 1 + s.index(160) as u32,
        gamma: 1.1 + s.unit() * 0.9,
        dimension: 2.01 + s.unit() * 0.98,
        length: 1.0 + s.unit() * 150.0,
        scale: 10f64.powf(-9.0 + s.unit() * 8.0),
    }
}

pub fn grid_for(p: &WmParams, size: usize) -> GridSpec {
    GridSpec {
        size_px: size,
        x0: p.length,
        y0: p.length,
        spacing: p.length / size as f64,
    }
}

// -------------------------------------------------------------- roughness

pub fn brute_gradient(z: &[u16], n: usize, res_m: f64) -> Vec<f64> {
    let cm = res_m * 100.0;
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            let mut best = 0.0f64;
            for rr in r.saturating_sub(1)..=(r + 1).min(n - 1) {
                for cc in c.saturating_sub(1)..=(c + 1).min(n - 1) {
                    if (rr, cc) == (r, c) {
                        continue;
                    }
                    let steps = (rr != r) as u32 + (cc != c) as u32;
                    let dist = (steps as f64).sqrt() * cm;
                    let dz = (z[r * n + c] as f64 - z[rr * n + cc] as f64).abs();
                    best = best.max(dz / dist);
                }
            }
            out[r * n + c] = best;
        }
    }
    out
}

fn in_disk(dr: i64, dc: i64, radius: usize) -> bool {
    dr * dr + dc * dc <= (radius * radius) as i64
}

pub fn brute_dilate(m: &[bool], n: usize, radius: usize) -> Vec<bool> {
    let r = radius as i64;
    let mut out = vec![false; n * n];
    for row in 0..n as i64 {
        for col in 0..n as i64 {
            let mut hit = false;
            for dr in -r..=r {
                for dc in -r..=r {
                    let (y, x) = (row + dr, col + dc);
                    if in_disk(dr, dc, radius)
                        && (0..n as i64).contains(&y)
                        && (0..n as i64).contains(&x)
                        && m[(y * n as i64 + x) as usize]
                    {
                        hit = true;
                    }
                }
            }
            out[(row * n as i64 + col) as usize] = hit;
        }
    }
    out
}

pub fn brute_erode(m: &[bool], n: usize, radius: usize) -> Vec<bool> {
    let r = radius as i64;
    let mut out = vec![true; n * n];
    for row in 0..n as i64 {
        for col in 0..n as i64 {
            for dr in -r..=r {
                for dc in -r..=r {
                    let (y, x) = (row + dr, col + dc);
                    let inside = (0..n as i64).contains(&y) && (0..n as i64).contains(&x);
                    if in_disk(dr, dc, radius) && inside && !m[(y * n as i64 + x) as usize] {
                        out[(row * n as i64 + col) as usize] = false;
                    }
                }
            }
        }
    }
    out
}

pub fn brute_close(classes: &[Class], n: usize, radius: usize) -> Vec<Class> {
    let close = |m: Vec<bool>| brute_erode(&brute_dilate(&m, n, radius), n, radius);
    let high = close(classes.iter().map(|&c| c == Class::High).collect());
    let rough = close(classes.iter().map(|&c| c != Class::Low).collect());
    (0..n * n)
        .map(|k| match (high[k], rough[k]) {
            (true, _) => Class::High,
            (false, true) => Class::Semi,
            _ => Class::Low,
        })
        .collect()
}

/// Class of one gradient value under the default thresholds.
pub fn class_of(v: f64) -> Class {
    if v <= 50.0 {
        Class::Low
    } else if v <= 140.0 {
        Class::Semi
    } else {
        Class::High
    }
}

/// Random DEM whose relief amplitude changes per 8x8 block, so all three
/// classes appear at 5 cm pixels.
pub fn random_dem(seed: u64, n: usize) -> QuantizedDem {
    let mut s = Stream::new(seed);
    let amps = [200usize, 600, 3000];
    let v = (0..n * n)
        .map(|k| {
            let amp = amps[(k / n / 8 + k % n / 8) % 3];
            (30_000 + s.index(amp + 1)) as u16
        })
        .collect();
    QuantizedDem::new(n, v).unwrap()
}

// --------------------------------------------------------------- missions

/// Independent restatement of the mission constraints.
pub fn check_mission(m: &Mission, map: &RoughnessMap, res: f64, length: f64) -> Result<(), String> {
    let extent = (map.size() - 1) as f64 * res;
    let len = ((m.goal[0] - m.start[0]).powi(2) + (m.goal[1] - m.start[1]).powi(2)).sqrt();
    if (len - length).abs() > 1e-6 {
        return Err(format!("length {len}"));
    }
    for p in [m.start, m.goal] {
        if p.iter().any(|&v| v < 5.0 - 1e-9 || v > extent - 5.0 + 1e-9) {
            return Err(format!("point {p:?} within 5 m of the edge"));
        }
    }
    let class = |p: [f64; 2]| map.get((p[1] / res).round() as usize, (p[0] / res).round() as usize);
    if class(m.start) != Class::Low {
        return Err("start not low".into());
    }
    if class(m.goal) == Class::High {
        return Err("goal high".into());
    }
    Ok(())
}

// ------------------------------------------------------------- statistics

/// Type-7 quantile written from the 1-based definition
/// `Q(p) = (1 - g) x_j + g x_(j+1)`, `j + g = 1 + (n - 1) p`.
pub fn ref_quantile(values: &[f64], p: f64) -> f64 {
    let mut x = values.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = 1.0 + (x.len() - 1) as f64 * p;
    let j = m.floor() as usize;
    let g = m - j as f64;
    if j >= x.len() {
        return x[x.len() - 1];
    }
    (1.0 - g) * x[j - 1] + g * x[j]
}

/// Compensated sum of squares.
pub fn ref_rms(values: &[f64]) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let y = v * v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    (sum / values.len() as f64).sqrt()
}

/// Tukey fences at 1.5 IQR; returns sorted outliers.
pub fn ref_outliers(values: &[f64]) -> Vec<f64> {
    let (q1, q3) = (ref_quantile(values, 0.25), ref_quantile(values, 0.75));
    let iqr = q3 - q1;
    let mut o: Vec<f64> = values
        .iter()
        .copied()
        .filter(|&v| v < q1 - 1.5 * iqr || v > q3 + 1.5 * iqr)
        .collect();
    o.sort_by(|a, b| a.partial_cmp(b).unwrap());
    o
}

/// Sample with a heavy right tail so outliers occur; scale spans 1e-3..1e3.
pub fn heavy_tailed_sample(s: &mut Stream) -> (Vec<f64>, f64) {
    let n = 1 + s.index(300);
    let scale = 10f64.powf(-3.0 + 6.0 * s.unit());
    let values = (0..n)
        .map(|_| {
            if s.unit() < 0.05 {
                scale * (20.0 + 100.0 * s.unit())
            } else {
                scale * (s.unit() - 0.3)
            }
        })
        .collect();
    (values, scale)
}
