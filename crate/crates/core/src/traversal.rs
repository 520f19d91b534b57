//! Kinematic skid-steer surrogate driving straight-line missions.
//!
//! The chassis pose comes from a least-squares plane through the four wheel
//! contact heights. A pure-pursuit tracker follows the start-goal segment at
//! the commanded speed, slowed by `max(0, cos(pitch)) * traction(slope)`, where
//! traction drops linearly from 1 to 0 between two terrain slopes sampled at
//! the wheel contacts. Runs end on reaching the goal, tipping past the
//! threshold, failing to move far enough within the stuck window, leaving the
//! map, or hitting the time cap.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dem::Heightfield;
use crate::error::{invalid, Error, Result};
use crate::missions::Mission;
use crate::roughness::Thresholds;

/// Sampling rate of the simulation and of every log, in Hz.
pub const SAMPLE_RATE_HZ: f64 = 20.0;
pub const DT: f64 = 1.0 / SAMPLE_RATE_HZ;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleSpec {
    pub wheelbase_m: f64,
    pub track_m: f64,
    pub tire_radius_m: f64,
    pub tire_width_m: f64,
    pub speed_mps: f64,
    pub max_accel_mps2: f64,
    pub max_yaw_rate_dps: f64,
    pub lookahead_m: f64,
    pub goal_tolerance_m: f64,
    pub tip_deg: f64,
    pub stuck_displacement_m: f64,
    pub stuck_window_s: f64,
    pub time_cap_s: f64,
    /// Slope (rise over run) up to which traction is full.
    pub traction_full_slope: f64,
    /// Slope at and above which traction is zero.
    pub traction_zero_slope: f64,
}

impl Default for VehicleSpec {
    fn default() -> Self {
        let (full, zero) = traction_slopes(&Thresholds::default(), crate::dem::DEFAULT_Z_SCALE_PCT / 100.0 * crate::dem::FULL_Z_SPAN_M);
        Self {
            wheelbase_m: 0.512,
            track_m: 0.555,
            tire_radius_m: 0.165,
            tire_width_m: 0.125,
            speed_mps: 1.0,
            max_accel_mps2: 0.5,
            max_yaw_rate_dps: 90.0,
            lookahead_m: 1.0,
            goal_tolerance_m: 0.5,
            tip_deg: 75.0,
            stuck_displacement_m: 0.2,
            stuck_window_s: 30.0,
            time_cap_s: 300.0,
            traction_full_slope: full,
            traction_zero_slope: zero,
        }
    }
}

/// Physical slopes matching the roughness thresholds, which are expressed in
/// 16-bit units per centimetre, for a heightfield spanning `z_span_m`.
pub fn traction_slopes(thresholds: &Thresholds, z_span_m: f64) -> (f64, f64) {
    let per_unit = z_span_m / 65535.0 * 100.0;
    (thresholds.low_semi * per_unit, thresholds.semi_high * per_unit)
}

impl VehicleSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wheelbase", self.wheelbase_m),
            ("track", self.track_m),
            ("tire radius", self.tire_radius_m),
            ("tire width", self.tire_width_m),
            ("speed", self.speed_mps),
            ("max acceleration", self.max_accel_mps2),
            ("max yaw rate", self.max_yaw_rate_dps),
            ("lookahead", self.lookahead_m),
            ("goal tolerance", self.goal_tolerance_m),
            ("stuck displacement", self.stuck_displacement_m),
            ("stuck window", self.stuck_window_s),
            ("time cap", self.time_cap_s),
            ("traction zero slope", self.traction_zero_slope),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.tip_deg > 0.0 && self.tip_deg < 90.0) {
            return Err(invalid(format!("tip threshold must lie in (0, 90), got {}", self.tip_deg)));
        }
        if !(self.traction_full_slope >= 0.0 && self.traction_full_slope < self.traction_zero_slope) {
            return Err(invalid("traction slopes must satisfy 0 <= full < zero"));
        }
        Ok(())
    }

    pub fn traction(&self, slope: f64) -> f64 {
        if slope <= self.traction_full_slope {
            1.0
        } else if slope >= self.traction_zero_slope {
            0.0
        } else {
            (self.traction_zero_slope - slope) / (self.traction_zero_slope - self.traction_full_slope)
        }
    }

    /// Wheel contact offsets `(forward, left)` in the body frame.
    fn contacts(&self) -> [(f64, f64); 4] {
        let (a, b) = (self.wheelbase_m / 2.0, self.track_m / 2.0);
        [(a, b), (a, -b), (-a, b), (-a, -b)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub z: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw_deg: f64,
    /// Positive nose up.
    pub pitch_deg: f64,
    /// Positive left side up.
    pub roll_deg: f64,
    pub speed_mps: f64,
}

impl VehicleState {
    fn planar_distance(&self, p: [f64; 2]) -> f64 {
        (self.x - p[0]).hypot(self.y - p[1])
    }
}

/// Least-squares plane `z = a + b u + c v` through the given points.
pub fn fit_plane(points: &[(f64, f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = points.len() as f64;
    let (mut su, mut sv, mut suu, mut suv, mut svv) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut sz, mut suz, mut svz) = (0.0, 0.0, 0.0);
    for &(u, v, z) in points {
        su += u;
        sv += v;
        suu += u * u;
        suv += u * v;
        svv += v * v;
        sz += z;
        suz += u * z;
        svz += v * z;
    }
    let m = [[n, su, sv], [su, suu, suv], [sv, suv, svv]];
    let rhs = [sz, suz, svz];
    let det3 = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let det = det3(&m);
    if det.abs() < 1e-12 {
        return None;
    }
    let solve = |col: usize| {
        let mut k = m;
        for row in 0..3 {
            k[row][col] = rhs[row];
        }
        det3(&k) / det
    };
    Some((solve(0), solve(1), solve(2)))
}

fn contact_world(x: f64, y: f64, yaw: f64, (u, v): (f64, f64)) -> (f64, f64) {
    let (s, c) = yaw.sin_cos();
    (x + c * u - s * v, y + s * u + c * v)
}

/// Chassis height and attitude from the plane through the four wheel contacts.
pub fn pose_on_terrain(h: &Heightfield, x: f64, y: f64, yaw_deg: f64, spec: &VehicleSpec) -> Result<Pose> {
    let yaw = yaw_deg.to_radians();
    let mut points = [(0.0, 0.0, 0.0); 4];
    for (p, offset) in points.iter_mut().zip(spec.contacts()) {
        let (wx, wy) = contact_world(x, y, yaw, offset);
        *p = (offset.0, offset.1, h.height_at(wx, wy)?);
    }
    let (a, b, c) = fit_plane(&points).ok_or_else(|| invalid("degenerate wheel footprint"))?;
    Ok(Pose {
        z: a + spec.tire_radius_m,
        pitch_deg: b.atan().to_degrees(),
        roll_deg: c.atan().to_degrees(),
    })
}

/// Largest terrain slope under the footprint: every pixel whose centre lies in
/// the chassis rectangle spanned by the outer tyre edges, plus the pixels
/// nearest each wheel contact (so coarse grids never sample nothing).
pub fn footprint_slope(h: &Heightfield, x: f64, y: f64, yaw_deg: f64, spec: &VehicleSpec) -> Result<f64> {
    let yaw = yaw_deg.to_radians();
    let mut best = 0.0f64;
    for offset in spec.contacts() {
        let (wx, wy) = contact_world(x, y, yaw, offset);
        let (row, col) = h.nearest_pixel(wx, wy).ok_or(Error::OutOfBounds { x: wx, y: wy })?;
        best = best.max(h.max_slope_at(row, col));
    }
    let half_len = spec.wheelbase_m / 2.0 + spec.tire_radius_m;
    let half_wid = (spec.track_m + spec.tire_width_m) / 2.0;
    let reach = half_len.hypot(half_wid);
    let res = h.xy_resolution();
    let last = (h.size() - 1) as f64;
    let (s, c) = yaw.sin_cos();
    let lo = |v: f64| ((v - reach) / res).ceil().clamp(0.0, last) as usize;
    let hi = |v: f64| ((v + reach) / res).floor().clamp(0.0, last) as usize;
    for row in lo(y)..=hi(y) {
        for col in lo(x)..=hi(x) {
            let (dx, dy) = (col as f64 * res - x, row as f64 * res - y);
            let along = c * dx + s * dy;
            let across = c * dy - s * dx;
            if along.abs() <= half_len && across.abs() <= half_wid {
                best = best.max(h.max_slope_at(row, col));
            }
        }
    }
    Ok(best)
}

/// Pure-pursuit target: the point on the start-goal segment `lookahead` ahead
/// of the vehicle's projection (the far circle-segment intersection when the
/// vehicle is within `lookahead` of the line), clamped to the segment.
pub fn lookahead_point(position: [f64; 2], start: [f64; 2], goal: [f64; 2], lookahead: f64) -> [f64; 2] {
    let d = [goal[0] - start[0], goal[1] - start[1]];
    let len = d[0].hypot(d[1]);
    if len == 0.0 {
        return goal;
    }
    let u = [d[0] / len, d[1] / len];
    let rel = [position[0] - start[0], position[1] - start[1]];
    let along = rel[0] * u[0] + rel[1] * u[1];
    let lateral = u[0] * rel[1] - u[1] * rel[0];
    let s = if lateral.abs() < lookahead {
        along + (lookahead * lookahead - lateral * lateral).sqrt()
    } else {
        along
    };
    let s = s.clamp(0.0, len);
    [start[0] + u[0] * s, start[1] + u[1] * s]
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut a = a % two_pi;
    if a > std::f64::consts::PI {
        a -= two_pi;
    } else if a < -std::f64::consts::PI {
        a += two_pi;
    }
    a
}

/// Commanded yaw rate in deg/s for the current state.
pub fn yaw_rate_command(state: &VehicleState, mission: &Mission, spec: &VehicleSpec) -> f64 {
    let target = lookahead_point([state.x, state.y], mission.start, mission.goal, spec.lookahead_m);
    let (dx, dy) = (target[0] - state.x, target[1] - state.y);
    let dist = dx.hypot(dy);
    if dist < 1e-9 {
        return 0.0;
    }
    let alpha = wrap_angle(dy.atan2(dx) - state.yaw_deg.to_radians());
    let curvature = 2.0 * alpha.sin() / dist;
    (state.speed_mps * curvature)
        .to_degrees()
        .clamp(-spec.max_yaw_rate_dps, spec.max_yaw_rate_dps)
}

pub fn initial_state(mission: &Mission, h: &Heightfield, spec: &VehicleSpec) -> Result<VehicleState> {
    let [x, y] = mission.start;
    let pose = pose_on_terrain(h, x, y, mission.heading_deg, spec)?;
    Ok(VehicleState {
        t: 0.0,
        x,
        y,
        z: pose.z,
        yaw_deg: mission.heading_deg,
        pitch_deg: pose.pitch_deg,
        roll_deg: pose.roll_deg,
        speed_mps: 0.0,
    })
}

/// Advance one tick of `dt` seconds.
pub fn step(
    state: &VehicleState,
    mission: &Mission,
    h: &Heightfield,
    spec: &VehicleSpec,
    dt: f64,
) -> Result<VehicleState> {
    let slope = footprint_slope(h, state.x, state.y, state.yaw_deg, spec)?;
    let target_speed =
        spec.speed_mps * state.pitch_deg.to_radians().cos().max(0.0) * spec.traction(slope);
    let speed = target_speed.min(state.speed_mps + spec.max_accel_mps2 * dt);
    let yaw_rate = yaw_rate_command(&VehicleState { speed_mps: speed, ..*state }, mission, spec);
    let yaw_deg = state.yaw_deg + yaw_rate * dt;
    let (s, c) = yaw_deg.to_radians().sin_cos();
    let x = state.x + speed * dt * c;
    let y = state.y + speed * dt * s;
    let pose = pose_on_terrain(h, x, y, yaw_deg, spec)?;
    Ok(VehicleState {
        t: state.t + dt,
        x,
        y,
        z: pose.z,
        yaw_deg,
        pitch_deg: pose.pitch_deg,
        roll_deg: pose.roll_deg,
        speed_mps: speed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Tipped,
    Stuck,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Tipped => "tipped",
            Outcome::Stuck => "stuck",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "success" => Some(Outcome::Success),
            "tipped" => Some(Outcome::Tipped),
            "stuck" => Some(Outcome::Stuck),
            _ => None,
        }
    }
}

/// Which rule ended a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Goal,
    TipThreshold,
    StuckWindow,
    TimeCap,
    LeftMap,
}

impl Termination {
    pub fn outcome(self) -> Outcome {
        match self {
            Termination::Goal => Outcome::Success,
            Termination::TipThreshold => Outcome::Tipped,
            Termination::StuckWindow | Termination::TimeCap | Termination::LeftMap => Outcome::Stuck,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Goal => "goal",
            Termination::TipThreshold => "tip-threshold",
            Termination::StuckWindow => "stuck-window",
            Termination::TimeCap => "time-cap",
            Termination::LeftMap => "left-map",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraversalLog {
    pub seed: u64,
    pub samples: Vec<VehicleState>,
    pub outcome: Outcome,
    pub termination: Termination,
    /// Seconds from start to goal, successes only.
    pub traversal_time_s: Option<f64>,
}

#[derive(Serialize)]
struct OutcomeRecord<'a> {
    seed: u64,
    outcome: Outcome,
    termination: Termination,
    traversal_time_s: Option<f64>,
    samples: usize,
    final_state: Option<&'a VehicleState>,
}

impl TraversalLog {
    pub fn last(&self) -> &VehicleState {
        self.samples.last().expect("a log always holds the start sample")
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "t,x,y,z,yaw,pitch,roll")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.t, s.x, s.y, s.z, s.yaw_deg, s.pitch_deg, s.roll_deg
            )?;
        }
        Ok(())
    }

    pub fn outcome_json(&self) -> String {
        serde_json::to_string_pretty(&OutcomeRecord {
            seed: self.seed,
            outcome: self.outcome,
            termination: self.termination,
            traversal_time_s: self.traversal_time_s,
            samples: self.samples.len(),
            final_state: self.samples.last(),
        })
        .expect("outcome record serializes")
    }

    /// Writes `<stem>.csv` and `<stem>.json`.
    pub fn write_files(&self, stem: &Path) -> Result<()> {
        let csv = stem.with_extension("csv");
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(&csv, e))?;
        std::fs::write(&csv, buf).map_err(|e| Error::io(&csv, e))?;
        let json = stem.with_extension("json");
        std::fs::write(&json, self.outcome_json()).map_err(|e| Error::io(&json, e))
    }
}

fn tipped(state: &VehicleState, spec: &VehicleSpec) -> bool {
    state.pitch_deg.abs() > spec.tip_deg || state.roll_deg.abs() > spec.tip_deg
}

/// Simulate one mission at 20 Hz. The surrogate is deterministic; `seed` is
/// carried into the log for bookkeeping.
pub fn run_mission(mission: &Mission, h: &Heightfield, spec: &VehicleSpec, seed: u64) -> TraversalLog {
    let window = (spec.stuck_window_s * SAMPLE_RATE_HZ).round() as usize;
    let cap = (spec.time_cap_s * SAMPLE_RATE_HZ).round() as usize;
    let finish = |samples: Vec<VehicleState>, termination: Termination| {
        let traversal_time_s = (termination == Termination::Goal).then(|| samples.last().unwrap().t);
        TraversalLog {
            seed,
            samples,
            outcome: termination.outcome(),
            termination,
            traversal_time_s,
        }
    };
    let Ok(first) = initial_state(mission, h, spec) else {
        let [x, y] = mission.start;
        let placeholder = VehicleState {
            t: 0.0,
            x,
            y,
            z: 0.0,
            yaw_deg: mission.heading_deg,
            pitch_deg: 0.0,
            roll_deg: 0.0,
            speed_mps: 0.0,
        };
        return finish(vec![placeholder], Termination::LeftMap);
    };
    let mut samples = vec![first];
    loop {
        let k = samples.len() - 1;
        let state = samples[k];
        if tipped(&state, spec) {
            return finish(samples, Termination::TipThreshold);
        }
        if state.planar_distance(mission.goal) <= spec.goal_tolerance_m {
            return finish(samples, Termination::Goal);
        }
        if k >= window {
            let back = samples[k - window];
            if state.planar_distance([back.x, back.y]) < spec.stuck_displacement_m {
                return finish(samples, Termination::StuckWindow);
            }
        }
        if k >= cap {
            return finish(samples, Termination::TimeCap);
        }
        match step(&state, mission, h, spec, DT) {
            Ok(mut next) => {
                // Integer tick count keeps timestamps on the 20 Hz lattice.
                next.t = (k + 1) as f64 * DT;
                samples.push(next);
            }
            Err(_) => return finish(samples, Termination::LeftMap),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dynamics {
    /// Timestamps of interior samples.
    pub accel_t: Vec<f64>,
    /// Second central difference of z, m/s^2.
    pub vertical_accel: Vec<f64>,
    /// Midpoints between consecutive samples.
    pub rate_t: Vec<f64>,
    /// deg/s
    pub pitch_rate: Vec<f64>,
    /// deg/s
    pub roll_rate: Vec<f64>,
}

/// Differentiate a 20 Hz log: z twice (interior samples, `n - 2` values) and
/// pitch/roll once (half-step central differences, `n - 1` values).
pub fn derive_dynamics(log: &TraversalLog) -> Result<Dynamics> {
    derive_dynamics_from(&log.samples)
}

pub fn derive_dynamics_from(samples: &[VehicleState]) -> Result<Dynamics> {
    if samples.len() < 3 {
        return Err(Error::TooSmall(format!(
            "dynamics need at least 3 samples, got {}",
            samples.len()
        )));
    }
    let mut d = Dynamics::default();
    for w in samples.windows(3) {
        d.accel_t.push(w[1].t);
        d.vertical_accel.push((w[2].z - 2.0 * w[1].z + w[0].z) / (DT * DT));
    }
    for w in samples.windows(2) {
        d.rate_t.push(0.5 * (w[0].t + w[1].t));
        d.pitch_rate.push((w[1].pitch_deg - w[0].pitch_deg) / DT);
        d.roll_rate.push((w[1].roll_deg - w[0].roll_deg) / DT);
    }
    Ok(d)
}
