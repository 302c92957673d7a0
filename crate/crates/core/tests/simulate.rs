use mppi::report::{read_trajectory_csv, write_trajectory_csv, MetricsSummary};
use mppi::scene::{Footprint, ObstacleTrack, ReferencePath};
use mppi::sim::{builtin_scenario, run, Outcome, Scenario, ScenarioKind, SimOptions};
use mppi::{Error, PlannerConfig, VehicleState};

const V_GOAL: f64 = 30.0 / 3.6;

fn quick_config() -> PlannerConfig {
    PlannerConfig {
        rollouts: 256,
        seed: 3,
        ..PlannerConfig::default()
    }
}

fn straight(len: f64) -> ReferencePath {
    let n = (len / 0.5) as usize;
    let pts: Vec<[f64; 2]> = (0..=n).map(|i| [i as f64 * 0.5, 0.0]).collect();
    ReferencePath::from_points(&pts, V_GOAL).unwrap()
}

fn cruise(duration: f64, obstacles: Vec<ObstacleTrack>) -> Scenario {
    Scenario {
        kind: ScenarioKind::Custom,
        path: straight(300.0),
        obstacles,
        initial_state: VehicleState::new(0.0, 0.0, 0.0, V_GOAL, 0.0),
        duration,
        avoidance_gate: false,
    }
}

#[test]
fn empty_scene_cruise_completes_under_the_cap() {
    let log = run(&cruise(6.0, Vec::new()), &quick_config(), &SimOptions::default()).unwrap();
    assert_eq!(log.outcome, Outcome::TimeUp);
    let m = MetricsSummary::from_log(&log);
    assert_eq!(m.min_d_obj, None);
    assert!(log.records.iter().all(|r| r.d_obj == f64::INFINITY));
    assert!(m.max_speed <= V_GOAL + 0.14);
    assert!(m.completed && !m.collision);
}

#[test]
fn one_record_per_tick_with_monotone_time() {
    let log = run(&cruise(2.0, Vec::new()), &quick_config(), &SimOptions::default()).unwrap();
    assert_eq!(log.records.len(), 41);
    assert!(log.records.windows(2).all(|w| w[1].t > w[0].t));
    // 20 Hz over 2 s
    assert_eq!(log.cycle_times_ms.len(), 40);
}

#[test]
fn inputs_are_held_between_replans() {
    let opts = SimOptions {
        plant_dt: 0.01,
        replan_hz: 4.0,
        ..SimOptions::default()
    };
    let log = run(&cruise(1.0, Vec::new()), &quick_config(), &opts).unwrap();
    assert_eq!(log.cycle_times_ms.len(), 4);
    for chunk in log.records[..100].chunks(25) {
        assert!(chunk.iter().all(|r| r.input == chunk[0].input));
    }
}

#[test]
fn replan_period_must_be_a_multiple_of_plant_step() {
    let opts = SimOptions {
        plant_dt: 0.03,
        ..SimOptions::default()
    };
    let err = run(&cruise(1.0, Vec::new()), &quick_config(), &opts).unwrap_err();
    assert!(matches!(err, Error::InvalidParameter { ref key, .. } if key == "plant_dt"), "{err}");
}

#[test]
fn wall_across_the_road_is_never_a_silent_pass() {
    let wall = ObstacleTrack::stationary(Footprint {
        center: [30.0, 0.0],
        yaw: std::f64::consts::FRAC_PI_2,
        length: 40.0,
        width: 2.0,
    });
    let mut scenario = cruise(12.0, vec![wall]);
    scenario.avoidance_gate = true;
    let log = run(&scenario, &quick_config(), &SimOptions::default()).unwrap();
    let m = MetricsSummary::from_log(&log);
    // either it hits the wall or it stops short of it; it cannot get past
    assert!(log.final_state().unwrap().x < 30.0);
    assert!(!m.completed);
    assert!(matches!(log.outcome, Outcome::Collision | Outcome::Blocked), "{:?}", log.outcome);
    if m.collision {
        assert!(m.min_d_obj.unwrap() <= 0.0);
    }
}

#[test]
fn overflowing_costs_trip_the_fault_policy() {
    let mut cfg = quick_config();
    cfg.weights.w_dist = 1e308;
    let mut scenario = cruise(2.0, Vec::new());
    scenario.initial_state.y = 5.0;
    let log = run(&scenario, &cfg, &SimOptions::default()).unwrap();
    assert_eq!(log.outcome, Outcome::PlannerFault);
    assert_eq!(log.faults, 3);
    assert!(!log.completed());
}

#[test]
fn arriving_at_the_target_ends_the_run() {
    let mut scenario = cruise(30.0, Vec::new());
    scenario.path = straight(10.0);
    scenario.initial_state = VehicleState::new(9.0, 0.0, 0.0, 0.0, 0.0);
    let log = run(&scenario, &quick_config(), &SimOptions::default()).unwrap();
    assert_eq!(log.outcome, Outcome::Arrived);
    assert_eq!(log.records.len(), 1);
}

#[test]
fn trajectory_csv_round_trips_and_matches_metrics() {
    let scenario = builtin_scenario("object_avoidance").unwrap();
    let mut short = scenario.clone();
    short.duration = 3.0;
    let log = run(&short, &quick_config(), &SimOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, &log.records).unwrap();
    let back = read_trajectory_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), log.records.len());
    for (a, b) in back.iter().zip(&log.records) {
        for (x, y) in [(a.t, b.t), (a.state.x, b.state.x), (a.state.v, b.state.v), (a.d_obj, b.d_obj), (a.cycle_ms, b.cycle_ms)] {
            assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
        }
    }
    let m = MetricsSummary::from_log(&log);
    let max_v = back.iter().map(|r| r.state.v).fold(f64::MIN, f64::max);
    let min_d = back.iter().map(|r| r.d_obj).fold(f64::INFINITY, f64::min);
    assert_eq!(m.max_speed, max_v);
    assert_eq!(m.min_d_obj, Some(min_d));
}

#[test]
fn moving_lead_vehicle_is_predicted() {
    let lead = ObstacleTrack::moving(
        Footprint {
            center: [25.0, 0.0],
            yaw: 0.0,
            length: 4.5,
            width: 1.8,
        },
        [4.0, 0.0],
    );
    let log = run(&cruise(8.0, vec![lead]), &quick_config(), &SimOptions::default()).unwrap();
    assert!(!log.collision());
    assert!(log.records.iter().all(|r| r.d_obj > 0.0));
}
