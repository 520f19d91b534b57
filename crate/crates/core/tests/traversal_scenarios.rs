//! Traversal surrogate on crafted terrains.

use wmterrain::missions::mission_seed;
use wmterrain::stats::MissionMetrics;
use wmterrain::traversal::{derive_dynamics_from, pose_on_terrain, Termination, VehicleState, DT};
use wmterrain::{
    derive_dynamics, rms, run_mission, sample_missions, Class, Heightfield, Mission,
    MissionConstraints, Outcome, RoughnessMap, Thresholds, VehicleSpec,
};

const RES: f64 = 0.2;
const SIZE: usize = 253;

fn flat() -> Heightfield {
    Heightfield::from_fn(SIZE, RES, |_, _| 0.37).unwrap()
}

#[test]
fn flat_map_missions_all_succeed_on_time() {
    let h = flat();
    let map = RoughnessMap::new(SIZE, vec![Class::Low; SIZE * SIZE], Thresholds::default()).unwrap();
    let missions = sample_missions(&map, RES, 100, 42, MissionConstraints::default()).unwrap();
    let spec = VehicleSpec::default();
    for (i, m) in missions.iter().enumerate() {
        let log = run_mission(m, &h, &spec, mission_seed(42, i));
        assert_eq!(log.outcome, Outcome::Success, "mission {i}: {:?}", log.termination);
        let t = log.traversal_time_s.unwrap();
        assert!((35.0..=38.0).contains(&t), "mission {i}: {t} s");
        let metrics = MissionMetrics::from_log(&log).unwrap();
        assert!(metrics.rms_vertical_accel < 1e-6);
        assert!(metrics.rms_pitch_rate < 1e-9 && metrics.rms_roll_rate < 1e-9);
        for s in &log.samples {
            assert!((s.z - (0.37 + spec.tire_radius_m)).abs() < 1e-12);
        }
    }
}

#[test]
fn log_samples_sit_on_the_20hz_lattice() {
    let h = flat();
    let m = Mission::from_heading([10.0, 10.0], 30.0, 35.0);
    let log = run_mission(&m, &h, &VehicleSpec::default(), 0);
    for (k, s) in log.samples.iter().enumerate() {
        assert_eq!(s.t, k as f64 * DT);
    }
}

/// Plane rising along +y with the given grade.
fn side_slope(grade: f64) -> Heightfield {
    Heightfield::from_fn(SIZE, RES, |_, y| grade * y).unwrap()
}

#[test]
fn steep_side_slope_tips_at_first_sample() {
    let grade = 76f64.to_radians().tan();
    let h = side_slope(grade);
    let spec = VehicleSpec::default();
    let mut tipped = 0;
    for i in 0..20 {
        // Headings along the contour, both directions, with small offsets.
        let heading = if i % 2 == 0 { 0.0 } else { 180.0 } + (i as f64 - 10.0) * 0.5;
        let start = [if i % 2 == 0 { 7.0 } else { 43.0 }, 20.0 + i as f64 * 0.3];
        let m = Mission::from_heading(start, heading, 35.0);
        let log = run_mission(&m, &h, &spec, i);
        assert_eq!(log.termination, Termination::TipThreshold);
        let last = log.last();
        assert!(last.roll_deg.abs() > 75.0 || last.pitch_deg.abs() > 75.0);
        assert_eq!(log.samples.len(), 1, "tipped at the first sample past the threshold");
        tipped += 1;
    }
    assert_eq!(tipped, 20);
}

#[test]
fn side_slope_roll_sign_and_magnitude() {
    let h = side_slope(0.3);
    let spec = VehicleSpec::default();
    // Heading +x: the left side faces +y, which is uphill.
    let pose = pose_on_terrain(&h, 25.0, 25.0, 0.0, &spec).unwrap();
    assert!((pose.roll_deg - 0.3f64.atan().to_degrees()).abs() < 1e-9);
    assert!(pose.pitch_deg.abs() < 1e-9);
    // Heading +y: driving straight uphill.
    let pose = pose_on_terrain(&h, 25.0, 25.0, 90.0, &spec).unwrap();
    assert!((pose.pitch_deg - 0.3f64.atan().to_degrees()).abs() < 1e-9);
}

/// Flat ground with a 1 m step across the map at `x = wall_x`.
fn wall(wall_x: f64) -> Heightfield {
    Heightfield::from_fn(SIZE, RES, |x, _| if x >= wall_x { 1.0 } else { 0.0 }).unwrap()
}

#[test]
fn wall_blocks_every_mission_after_a_full_window() {
    let h = wall(20.0);
    let spec = VehicleSpec::default();
    let window = (spec.stuck_window_s / DT).round() as usize;
    for i in 0..20 {
        let heading = -20.0 + 2.0 * i as f64;
        let m = Mission::from_heading([8.0, 25.2], heading, 35.0);
        let log = run_mission(&m, &h, &spec, i);
        assert_eq!(log.outcome, Outcome::Stuck, "mission {i}");
        assert_eq!(log.termination, Termination::StuckWindow);
        let k = log.samples.len() - 1;
        let t = log.last().t;
        assert!(t >= spec.stuck_window_s, "stuck flagged at {t} s");
        let disp = |a: &VehicleState, b: &VehicleState| (a.x - b.x).hypot(a.y - b.y);
        // Fires at the first eligible instant: the previous tick still moved enough.
        assert!(disp(&log.samples[k], &log.samples[k - window]) < spec.stuck_displacement_m);
        assert!(
            k == window || disp(&log.samples[k - 1], &log.samples[k - 1 - window]) >= spec.stuck_displacement_m
        );
        assert!(log.last().x < 20.0, "vehicle stays in front of the wall");
    }
}

#[test]
fn time_cap_counts_as_stuck() {
    // A crawl just fast enough to beat the stuck window but not reach the goal.
    let spec = VehicleSpec {
        time_cap_s: 40.0,
        speed_mps: 0.5,
        ..VehicleSpec::default()
    };
    let m = Mission::from_heading([8.0, 25.2], 0.0, 35.0);
    let log = run_mission(&m, &flat(), &spec, 0);
    assert_eq!(log.termination, Termination::TimeCap);
    assert_eq!(log.outcome, Outcome::Stuck);
    assert!(log.traversal_time_s.is_none());
}

#[test]
fn steeper_side_slopes_never_rescue_a_tipped_run() {
    let spec = VehicleSpec::default();
    let grades: Vec<f64> = (0..12).map(|i| 0.5 + 0.35 * i as f64).collect();
    for &g in &grades {
        for k in [1.05, 1.5, 2.0, 4.0] {
            let m = Mission::from_heading([7.0, 20.0], 3.0, 35.0);
            let base = run_mission(&m, &side_slope(g), &spec, 0).outcome;
            let scaled = run_mission(&m, &side_slope(k * g), &spec, 0).outcome;
            if base == Outcome::Tipped {
                assert_eq!(scaled, Outcome::Tipped, "grade {g} scaled by {k}");
            }
            if base != Outcome::Success {
                assert_ne!(scaled, Outcome::Success, "grade {g} scaled by {k}");
            }
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let h = Heightfield::from_fn(SIZE, RES, |x, y| 0.3 * (x * 0.7).sin() * (y * 0.4).cos()).unwrap();
    let m = Mission::from_heading([9.0, 9.0], 40.0, 35.0);
    let spec = VehicleSpec::default();
    assert_eq!(run_mission(&m, &h, &spec, 1), run_mission(&m, &h, &spec, 1));
}

fn synthetic(n: usize, f: impl Fn(f64) -> (f64, f64, f64)) -> Vec<VehicleState> {
    (0..n)
        .map(|k| {
            let t = k as f64 * DT;
            let (z, pitch, roll) = f(t);
            VehicleState {
                t,
                x: 0.0,
                y: 0.0,
                z,
                yaw_deg: 0.0,
                pitch_deg: pitch,
                roll_deg: roll,
                speed_mps: 0.0,
            }
        })
        .collect()
}

#[test]
fn dynamics_recover_analytic_derivatives() {
    let a = 1.7;
    let samples = synthetic(400, |t| (0.5 * a * t * t, t.sin(), (2.0 * t).cos()));
    let d = derive_dynamics_from(&samples).unwrap();
    assert_eq!(d.vertical_accel.len(), 398);
    assert_eq!(d.pitch_rate.len(), 399);
    for (t, v) in d.accel_t.iter().zip(&d.vertical_accel) {
        assert!((v - a).abs() < 1e-9, "t={t}: {v}");
    }
    for ((t, p), r) in d.rate_t.iter().zip(&d.pitch_rate).zip(&d.roll_rate) {
        assert!((p - t.cos()).abs() < 1e-3);
        assert!((r + 2.0 * (2.0 * t).sin()).abs() < 1e-3);
    }
    assert_eq!(d.accel_t[0], DT);
    assert!((d.rate_t[0] - DT / 2.0).abs() < 1e-15);
    assert!(derive_dynamics_from(&samples[..2]).is_err());
}

#[test]
fn constant_log_has_zero_dynamics() {
    let h = flat();
    let m = Mission::from_heading([10.0, 30.0], -45.0, 35.0);
    let log = run_mission(&m, &h, &VehicleSpec::default(), 0);
    let d = derive_dynamics(&log).unwrap();
    assert_eq!(rms(&d.vertical_accel).unwrap(), 0.0);
}
