use reachlab::env::{EnvConfig, EnvMode};
use reachlab::policy::{rollout, PolicyParams, PolicyShape};
use reachlab::trajectory::COLUMNS;
use reachlab_harness::trajio::{read_columns, read_trajectory, sidecar_path, write_trajectory};

fn long_episode() -> (reachlab::trajectory::Trajectory, EnvConfig) {
    let env = EnvConfig::default().with_mode(EnvMode::Evaluation);
    let params = PolicyParams::new(PolicyShape::default(), (0..PolicyShape::default().n_params()).map(|i| ((i as f64) * 0.37).sin() * 0.2).collect()).unwrap();
    let (traj, _) = rollout(&params, &env, 4).unwrap();
    (traj, env)
}

#[test]
fn round_trip_is_lossless() {
    let (traj, env) = long_episode();
    assert_eq!(traj.n_steps(), 500, "expected a full-horizon episode");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ep.csv");
    write_trajectory(&path, &traj, &env).unwrap();
    let (back, side) = read_trajectory(&path).unwrap();
    assert_eq!(back.rows.len(), traj.rows.len());
    for (a, b) in back.rows.iter().zip(&traj.rows) {
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
    assert_eq!(back, traj);
    assert_eq!(side.env, env);
    assert_eq!(side.steps, 500);
}

#[test]
fn header_matches_column_contract() {
    let (traj, env) = long_episode();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ep.csv");
    write_trajectory(&path, &traj, &env).unwrap();
    let first = std::fs::read_to_string(&path).unwrap().lines().next().unwrap().to_string();
    assert_eq!(
        first,
        "t,q1,q2,qd1,qd2,hand_x,hand_y,hand_vx,hand_vy,hand_ax,hand_ay,speed,u1,u2,u3,u4,u5,u6,\
         a1,a2,a3,a4,a5,a6,r_sparse,r_effort,r_jerk,r_work,r_total"
    );
    assert_eq!(first.split(',').count(), COLUMNS.len());
}

#[test]
fn missing_column_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    std::fs::write(&path, "t,q1\n0,1\n").unwrap();
    let err = read_columns(&path, &["t", "speed"]).unwrap_err().to_string();
    assert!(err.contains("missing column `speed`"), "{err}");
}

#[test]
fn schema_mismatch_is_rejected() {
    let (traj, env) = long_episode();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ep.csv");
    write_trajectory(&path, &traj, &env).unwrap();
    let side = sidecar_path(&path);
    let text = std::fs::read_to_string(&side).unwrap().replace("\"schema_version\": 1", "\"schema_version\": 99");
    std::fs::write(&side, text).unwrap();
    let err = read_trajectory(&path).unwrap_err().to_string();
    assert!(err.contains("schema version"), "{err}");
}

#[test]
fn sidecar_movement_time_counts_control_steps() {
    let (mut traj, env) = long_episode();
    traj.rows.truncate(38);
    traj.success = true;
    traj.movement_time = 37.0 * env.control_dt();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ep.csv");
    write_trajectory(&path, &traj, &env).unwrap();
    let (_, side) = read_trajectory(&path).unwrap();
    assert_eq!(side.steps, 37);
    assert!((side.movement_time - side.steps as f64 * 0.01).abs() < 1e-12);
}
