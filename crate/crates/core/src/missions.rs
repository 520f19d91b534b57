//! Random straight-line A-to-B missions on a closed roughness map.
//!
//! World frame: `x` grows with the column index, `y` with the row index, and
//! headings are measured counter-clockwise from `+x` in degrees.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::roughness::{in_interior, Class, RoughnessMap, DEFAULT_BORDER_M};
use crate::seed::{derive_seed, Stream};

pub const DEFAULT_MISSION_LENGTH_M: f64 = 35.0;
pub const DEFAULT_RETRY_CAP: u32 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mission {
    pub start: [f64; 2],
    pub heading_deg: f64,
    pub goal: [f64; 2],
    pub length_m: f64,
}

impl Mission {
    pub fn from_heading(start: [f64; 2], heading_deg: f64, length_m: f64) -> Self {
        let h = heading_deg.to_radians();
        Self {
            start,
            heading_deg,
            goal: [start[0] + length_m * h.cos(), start[1] + length_m * h.sin()],
            length_m,
        }
    }

    pub fn euclidean_length(&self) -> f64 {
        (self.goal[0] - self.start[0]).hypot(self.goal[1] - self.start[1])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissionConstraints {
    pub length_m: f64,
    pub border_m: f64,
    pub retry_cap: u32,
}

impl Default for MissionConstraints {
    fn default() -> Self {
        Self {
            length_m: DEFAULT_MISSION_LENGTH_M,
            border_m: DEFAULT_BORDER_M,
            retry_cap: DEFAULT_RETRY_CAP,
        }
    }
}

/// Reasons a mission breaks the sampling constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Violation {
    Length,
    StartNearEdge,
    GoalNearEdge,
    StartNotLow,
    GoalTooRough,
}

fn near_edge(p: [f64; 2], extent: f64, border: f64) -> bool {
    let eps = 1e-9;
    p.iter().any(|&v| v < border - eps || v > extent - border + eps)
}

fn class_at(map: &RoughnessMap, xy_resolution: f64, p: [f64; 2]) -> Option<Class> {
    let n = map.size() as i64;
    let col = (p[0] / xy_resolution).round() as i64;
    let row = (p[1] / xy_resolution).round() as i64;
    ((0..n).contains(&row) && (0..n).contains(&col)).then(|| map.get(row as usize, col as usize))
}

/// Every constraint a mission breaks on `map` (empty when valid).
pub fn violations(
    mission: &Mission,
    map: &RoughnessMap,
    xy_resolution: f64,
    constraints: &MissionConstraints,
) -> Vec<Violation> {
    let extent = (map.size() - 1) as f64 * xy_resolution;
    let mut out = Vec::new();
    if (mission.euclidean_length() - constraints.length_m).abs() > 1e-6 {
        out.push(Violation::Length);
    }
    if near_edge(mission.start, extent, constraints.border_m) {
        out.push(Violation::StartNearEdge);
    }
    if near_edge(mission.goal, extent, constraints.border_m) {
        out.push(Violation::GoalNearEdge);
    }
    if class_at(map, xy_resolution, mission.start) != Some(Class::Low) {
        out.push(Violation::StartNotLow);
    }
    if !matches!(
        class_at(map, xy_resolution, mission.goal),
        Some(Class::Low | Class::Semi)
    ) {
        out.push(Violation::GoalTooRough);
    }
    out
}

/// Low pixels at least `border_m` from every edge, as `(row, col)`.
pub fn eligible_starts(map: &RoughnessMap, xy_resolution: f64, border_m: f64) -> Vec<(usize, usize)> {
    let n = map.size();
    let inside: Vec<bool> = (0..n)
        .map(|k| in_interior(k, n, xy_resolution, border_m))
        .collect();
    (0..n * n)
        .map(|k| (k / n, k % n))
        .filter(|&(r, c)| inside[r] && inside[c] && map.get(r, c) == Class::Low)
        .collect()
}

/// Mission sampler bound to one (post-closing) roughness map.
#[derive(Clone, Debug)]
pub struct MissionSampler<'a> {
    map: &'a RoughnessMap,
    xy_resolution: f64,
    constraints: MissionConstraints,
    starts: Vec<(usize, usize)>,
}

impl<'a> MissionSampler<'a> {
    pub fn new(
        map: &'a RoughnessMap,
        xy_resolution: f64,
        constraints: MissionConstraints,
    ) -> Result<Self> {
        if !(xy_resolution > 0.0) {
            return Err(invalid(format!("xy resolution must be > 0, got {xy_resolution}")));
        }
        if !(constraints.length_m > 0.0) || constraints.border_m < 0.0 {
            return Err(invalid("mission length must be > 0 and border >= 0"));
        }
        let starts = eligible_starts(map, xy_resolution, constraints.border_m);
        Ok(Self {
            map,
            xy_resolution,
            constraints,
            starts,
        })
    }

    pub fn eligible_start_count(&self) -> usize {
        self.starts.len()
    }

    /// Draw `(start, heading)` pairs until the goal is legal; also returns the
    /// number of attempts used.
    pub fn sample_counted(&self, stream: &mut Stream) -> Result<(Mission, u32)> {
        if self.starts.is_empty() {
            return Err(Error::NoValidMission { attempts: 0 });
        }
        for attempt in 1..=self.constraints.retry_cap {
            let (row, col) = self.starts[stream.index(self.starts.len())];
            let heading = stream.unit() * 360.0;
            let start = [col as f64 * self.xy_resolution, row as f64 * self.xy_resolution];
            let mission = Mission::from_heading(start, heading, self.constraints.length_m);
            if violations(&mission, self.map, self.xy_resolution, &self.constraints).is_empty() {
                return Ok((mission, attempt));
            }
        }
        Err(Error::NoValidMission {
            attempts: self.constraints.retry_cap,
        })
    }

    pub fn sample(&self, stream: &mut Stream) -> Result<Mission> {
        self.sample_counted(stream).map(|(m, _)| m)
    }
}

pub fn sample_mission(
    map: &RoughnessMap,
    xy_resolution: f64,
    stream: &mut Stream,
) -> Result<Mission> {
    MissionSampler::new(map, xy_resolution, MissionConstraints::default())?.sample(stream)
}

/// Seed of mission `index` under a per-map mission seed.
pub fn mission_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, index as u64)
}

/// `n` independent draws; mission `i` uses the stream of [`mission_seed`]`(seed, i)`.
pub fn sample_missions(
    map: &RoughnessMap,
    xy_resolution: f64,
    n: usize,
    seed: u64,
    constraints: MissionConstraints,
) -> Result<Vec<Mission>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let sampler = MissionSampler::new(map, xy_resolution, constraints)?;
    (0..n)
        .map(|i| sampler.sample(&mut Stream::new(mission_seed(seed, i))))
        .collect()
}

/// One line of a missions JSONL file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissionRecord {
    pub map_id: String,
    pub index: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub mission: Mission,
}
