//! Independent reference for the passive two-link arm: equations of motion
//! written out from the Lagrangian and an adaptive Dormand–Prince 5(4)
//! integrator. Shared by the physics tests of several crates.

#![allow(dead_code)]

use reachlab::arm::{self, ArmParams, ArmState};

pub const DT: f64 = 0.002;

/// Zero damping and joint limits far outside the motion.
pub fn passive_params() -> ArmParams {
    ArmParams {
        damping: [0.0, 0.0],
        joint_limits: [[-10.0, 10.0], [-10.0, 10.0]],
        ..ArmParams::default()
    }
}

/// Equations of motion written out independently of the crate:
/// state y = (q1, q2, qd1, qd2).
pub fn rhs(p: &ArmParams, y: [f64; 4]) -> [f64; 4] {
    let [l1, _] = p.link_lengths;
    let [m1, m2] = p.link_masses;
    let [c1, c2] = p.com_offsets;
    let [i1, i2] = p.inertias;
    let g = p.gravity;
    let (q1, q2, w1, w2) = (y[0], y[1], y[2], y[3]);
    let a = i1 + i2 + m1 * c1 * c1 + m2 * (l1 * l1 + c2 * c2);
    let b = m2 * l1 * c2;
    let d = i2 + m2 * c2 * c2;
    let m11 = a + 2.0 * b * q2.cos();
    let m12 = d + b * q2.cos();
    let m22 = d;
    // Lagrangian with heights y1 = -c1 cos q1, y2 = -l1 cos q1 - c2 cos(q1+q2).
    let h1 = -b * q2.sin() * (2.0 * w1 * w2 + w2 * w2) + (m1 * c1 + m2 * l1) * g * q1.sin() + m2 * c2 * g * (q1 + q2).sin();
    let h2 = b * q2.sin() * w1 * w1 + m2 * c2 * g * (q1 + q2).sin();
    let det = m11 * m22 - m12 * m12;
    let a1 = (-m22 * h1 + m12 * h2) / det;
    let a2 = (m12 * h1 - m11 * h2) / det;
    [w1, w2, a1, a2]
}

pub fn axpy(y: [f64; 4], h: f64, terms: &[(f64, [f64; 4])]) -> [f64; 4] {
    let mut out = y;
    for (c, k) in terms {
        for i in 0..4 {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Adaptive Dormand–Prince 5(4) from `t0` to `t1`.
pub fn dopri(p: &ArmParams, mut y: [f64; 4], t0: f64, t1: f64, tol: f64) -> [f64; 4] {
    let mut t = t0;
    let mut h = (t1 - t0) / 4.0;
    while t < t1 {
        h = h.min(t1 - t);
        let k1 = rhs(p, y);
        let k2 = rhs(p, axpy(y, h, &[(1.0 / 5.0, k1)]));
        let k3 = rhs(p, axpy(y, h, &[(3.0 / 40.0, k1), (9.0 / 40.0, k2)]));
        let k4 = rhs(p, axpy(y, h, &[(44.0 / 45.0, k1), (-56.0 / 15.0, k2), (32.0 / 9.0, k3)]));
        let k5 = rhs(
            p,
            axpy(y, h, &[(19372.0 / 6561.0, k1), (-25360.0 / 2187.0, k2), (64448.0 / 6561.0, k3), (-212.0 / 729.0, k4)]),
        );
        let k6 = rhs(
            p,
            axpy(
                y,
                h,
                &[(9017.0 / 3168.0, k1), (-355.0 / 33.0, k2), (46732.0 / 5247.0, k3), (49.0 / 176.0, k4), (-5103.0 / 18656.0, k5)],
            ),
        );
        let y5 = axpy(
            y,
            h,
            &[(35.0 / 384.0, k1), (500.0 / 1113.0, k3), (125.0 / 192.0, k4), (-2187.0 / 6784.0, k5), (11.0 / 84.0, k6)],
        );
        let k7 = rhs(p, y5);
        let y4 = axpy(
            y,
            h,
            &[
                (5179.0 / 57600.0, k1),
                (7571.0 / 16695.0, k3),
                (393.0 / 640.0, k4),
                (-92097.0 / 339200.0, k5),
                (187.0 / 2100.0, k6),
                (1.0 / 40.0, k7),
            ],
        );
        let err = (0..4).map(|i| (y5[i] - y4[i]).abs() / (tol + tol * y5[i].abs())).fold(0.0, f64::max);
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        h *= (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
    }
    y
}

pub fn simulate(p: &ArmParams, q0: [f64; 2], seconds: f64) -> Vec<ArmState> {
    simulate_dt(p, q0, seconds, DT)
}

pub fn simulate_dt(p: &ArmParams, q0: [f64; 2], seconds: f64, dt: f64) -> Vec<ArmState> {
    let mut s = ArmState::at_rest(q0);
    let mut out = vec![s];
    for _ in 0..(seconds / dt).round() as usize {
        s = arm::step(&s, &[0.0; 6], dt, p).unwrap();
        out.push(s);
    }
    out
}

/// Relative change between the energy averaged over the first and over the
/// last second of a 5 s passive swing, and the largest instantaneous
/// deviation from the initial energy.
pub fn energy_drift(q0: [f64; 2], dt: f64) -> (f64, f64) {
    let p = passive_params();
    let states = simulate_dt(&p, q0, 5.0, dt);
    let energy: Vec<f64> = states.iter().map(|s| arm::mechanical_energy(s, &p)).collect();
    let window = (1.0 / dt).round() as usize;
    let head = energy[..window].iter().sum::<f64>() / window as f64;
    let tail = energy[energy.len() - window..].iter().sum::<f64>() / window as f64;
    let e0 = energy[0];
    let excursion = energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0;
    ((tail - head).abs() / head, excursion)
}


/// Largest joint-angle difference between the crate's integrator and the
/// reference over `seconds` of passive motion from rest at `q0`.
pub fn max_reference_error(q0: [f64; 2], seconds: f64) -> f64 {
    let p = passive_params();
    let states = simulate(&p, q0, seconds);
    let mut y = [q0[0], q0[1], 0.0, 0.0];
    let mut worst: f64 = 0.0;
    for (k, s) in states.iter().enumerate().skip(1) {
        y = dopri(&p, y, (k - 1) as f64 * DT, k as f64 * DT, 1e-12);
        worst = worst.max((s.q[0] - y[0]).abs()).max((s.q[1] - y[1]).abs());
    }
    worst
}
