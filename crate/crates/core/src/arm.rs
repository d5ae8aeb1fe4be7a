//! Two-link planar arm in the sagittal plane driven by six muscles.
//!
//! Frame: shoulder joint at the origin, +x forward, +y up. The shoulder angle
//! is measured from the downward vertical (0 = arm hanging, positive = forward
//! flexion); the elbow angle is the interior flexion (0 = straight). With this
//! convention the rest pose (0, 90 deg) places the forearm horizontal.
//!
//! Muscles produce force `activation * f_max` through constant signed moment
//! arms; there is no force-length-velocity scaling. Activations follow the
//! first-order law `da/dt = (u - a) / tau`, with `tau_act` while rising and
//! `tau_deact` while falling.
//!
//! Rigid-body dynamics are the standard Lagrangian two-link equations
//! `M(q) qdd + C(q, qd) qd + G(q) + B qd = tau`, integrated with
//! semi-implicit Euler (velocity first, then position).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const N_MUSCLES: usize = 6;
pub const N_JOINTS: usize = 2;

pub const SHOULDER: usize = 0;
pub const ELBOW: usize = 1;

/// The six actuators, in the order used by every six-vector in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Muscle {
    ShoulderFlexor,
    ShoulderExtensor,
    ElbowFlexor,
    ElbowExtensor,
    BiarticularFlexor,
    BiarticularExtensor,
}

impl Muscle {
    pub const ALL: [Muscle; N_MUSCLES] = [
        Muscle::ShoulderFlexor,
        Muscle::ShoulderExtensor,
        Muscle::ElbowFlexor,
        Muscle::ElbowExtensor,
        Muscle::BiarticularFlexor,
        Muscle::BiarticularExtensor,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_flexor(self) -> bool {
        self.index().is_multiple_of(2)
    }
}

/// Antagonist pairs: monoarticular shoulder (S), biarticular (B) and
/// monoarticular elbow (E).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MusclePair {
    S,
    B,
    E,
}

impl MusclePair {
    pub const ALL: [MusclePair; 3] = [MusclePair::S, MusclePair::B, MusclePair::E];

    pub fn flexor(self) -> Muscle {
        match self {
            MusclePair::S => Muscle::ShoulderFlexor,
            MusclePair::B => Muscle::BiarticularFlexor,
            MusclePair::E => Muscle::ElbowFlexor,
        }
    }

    pub fn extensor(self) -> Muscle {
        match self {
            MusclePair::S => Muscle::ShoulderExtensor,
            MusclePair::B => Muscle::BiarticularExtensor,
            MusclePair::E => Muscle::ElbowExtensor,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MusclePair::S => "S",
            MusclePair::B => "B",
            MusclePair::E => "E",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmParams {
    /// Upper arm and forearm lengths (m).
    pub link_lengths: [f64; 2],
    pub link_masses: [f64; 2],
    /// Distance from the proximal joint to each link's center of mass (m).
    pub com_offsets: [f64; 2],
    /// Inertia of each link about its own center of mass (kg m^2).
    pub inertias: [f64; 2],
    pub gravity: f64,
    /// Viscous joint damping (N m s / rad).
    pub damping: [f64; 2],
    /// `[min, max]` per joint (rad).
    pub joint_limits: [[f64; 2]; 2],
    pub tau_act: f64,
    pub tau_deact: f64,
    pub f_max: [f64; N_MUSCLES],
    /// Signed `[shoulder, elbow]` moment arm per muscle (m). Positive arms
    /// flex the joint.
    pub moment_arms: [[f64; 2]; N_MUSCLES],
}

impl Default for ArmParams {
    fn default() -> Self {
        let (l1, l2) = (0.35, 0.35);
        let (m1, m2) = (2.0, 1.5);
        let mono = 0.04;
        let bi = 0.03;
        Self {
            link_lengths: [l1, l2],
            link_masses: [m1, m2],
            com_offsets: [l1 / 2.0, l2 / 2.0],
            inertias: [m1 * l1 * l1 / 12.0, m2 * l2 * l2 / 12.0],
            gravity: 9.81,
            damping: [0.05, 0.05],
            joint_limits: [
                [(-60f64).to_radians(), 150f64.to_radians()],
                [0.0, 150f64.to_radians()],
            ],
            tau_act: 0.01,
            tau_deact: 0.04,
            f_max: [300.0; N_MUSCLES],
            moment_arms: [
                [mono, 0.0],
                [-mono, 0.0],
                [0.0, mono],
                [0.0, -mono],
                [bi, bi],
                [-bi, -bi],
            ],
        }
    }
}

impl ArmParams {
    pub fn reach(&self) -> f64 {
        self.link_lengths[0] + self.link_lengths[1]
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(format!("arm.{name} must be positive, got {v}")))
            }
        };
        for j in 0..N_JOINTS {
            positive("link_lengths", self.link_lengths[j])?;
            positive("link_masses", self.link_masses[j])?;
            positive("com_offsets", self.com_offsets[j])?;
            positive("inertias", self.inertias[j])?;
            if !(self.damping[j] >= 0.0) {
                return Err(Error::config("arm.damping must be nonnegative"));
            }
            let [lo, hi] = self.joint_limits[j];
            if !(lo < hi) {
                return Err(Error::config(format!("arm.joint_limits[{j}] must satisfy min < max")));
            }
        }
        positive("tau_act", self.tau_act)?;
        positive("tau_deact", self.tau_deact)?;
        if !(self.gravity >= 0.0) {
            return Err(Error::config("arm.gravity must be nonnegative"));
        }
        for &f in &self.f_max {
            positive("f_max", f)?;
        }
        // Pair structure: S spans only the shoulder, E only the elbow, B both,
        // and within each pair the spanned arms have opposite signs.
        for pair in MusclePair::ALL {
            let flex = self.moment_arms[pair.flexor().index()];
            let ext = self.moment_arms[pair.extensor().index()];
            let spans = match pair {
                MusclePair::S => [true, false],
                MusclePair::E => [false, true],
                MusclePair::B => [true, true],
            };
            for j in 0..N_JOINTS {
                let ok = if spans[j] {
                    flex[j] != 0.0 && ext[j] != 0.0 && flex[j].signum() != ext[j].signum()
                } else {
                    flex[j] == 0.0 && ext[j] == 0.0
                };
                if !ok {
                    return Err(Error::config(format!(
                        "arm.moment_arms: pair {} violates the antagonist layout on joint {j}",
                        pair.label()
                    )));
                }
            }
        }
        Ok(())
    }

    fn at_limit(&self, j: usize, q: f64) -> Option<f64> {
        let [lo, hi] = self.joint_limits[j];
        if q <= lo {
            Some(-1.0)
        } else if q >= hi {
            Some(1.0)
        } else {
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    pub q: [f64; 2],
    pub qd: [f64; 2],
    pub act: [f64; N_MUSCLES],
    pub t: f64,
}

impl ArmState {
    /// Shoulder 0, elbow 90 deg, at rest, muscles silent.
    pub fn initial() -> Self {
        Self::at_rest([0.0, std::f64::consts::FRAC_PI_2])
    }

    pub fn at_rest(q: [f64; 2]) -> Self {
        Self { q, qd: [0.0; 2], act: [0.0; N_MUSCLES], t: 0.0 }
    }

    fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.qd).chain(&self.act).all(|v| v.is_finite())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HandState {
    pub p: [f64; 2],
    pub v: [f64; 2],
    pub a: [f64; 2],
}

pub fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

fn check_unit(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfUnitRange { what, value })
    }
}

/// Advance one activation by `dt` under a constant stimulation `u`, using the
/// exact solution of the linear first-order law.
pub fn activation_step(act: f64, u: f64, dt: f64, params: &ArmParams) -> Result<f64> {
    check_unit("activation", act)?;
    check_unit("stimulation", u)?;
    if !(dt > 0.0) {
        return Err(Error::config(format!("dt must be positive, got {dt}")));
    }
    let tau = if u > act { params.tau_act } else { params.tau_deact };
    let next = act + (u - act) * (1.0 - (-dt / tau).exp());
    // Rounding can overshoot `u` by an ulp; the exact solution never does.
    Ok(if u > act { next.min(u) } else { next.max(u) })
}

pub fn muscle_forces(act: &[f64; N_MUSCLES], params: &ArmParams) -> [f64; N_MUSCLES] {
    std::array::from_fn(|i| act[i] * params.f_max[i])
}

/// Joint torques `(shoulder, elbow)` produced by the given activations.
pub fn muscle_torques(act: &[f64; N_MUSCLES], params: &ArmParams) -> Result<[f64; 2]> {
    for &a in act {
        check_unit("activation", a)?;
    }
    Ok(torques_unchecked(act, params))
}

fn torques_unchecked(act: &[f64; N_MUSCLES], params: &ArmParams) -> [f64; 2] {
    let forces = muscle_forces(act, params);
    let mut tau = [0.0; 2];
    for (force, arm) in forces.iter().zip(&params.moment_arms) {
        tau[0] += arm[0] * force;
        tau[1] += arm[1] * force;
    }
    tau
}

/// Joint-space inertia matrix `M(q)`.
pub fn mass_matrix(q: [f64; 2], params: &ArmParams) -> [[f64; 2]; 2] {
    let [l1, _] = params.link_lengths;
    let [m1, m2] = params.link_masses;
    let [c1, c2] = params.com_offsets;
    let [i1, i2] = params.inertias;
    let cos2 = q[1].cos();
    let m22 = i2 + m2 * c2 * c2;
    let m12 = m22 + m2 * l1 * c2 * cos2;
    let m11 = i1 + m1 * c1 * c1 + i2 + m2 * (l1 * l1 + c2 * c2 + 2.0 * l1 * c2 * cos2);
    [[m11, m12], [m12, m22]]
}

/// Velocity-product, gravity and damping terms `C(q, qd) qd + G(q) + B qd`.
pub fn bias_torques(q: [f64; 2], qd: [f64; 2], params: &ArmParams) -> [f64; 2] {
    let [l1, _] = params.link_lengths;
    let [m1, m2] = params.link_masses;
    let [c1, c2] = params.com_offsets;
    let g = params.gravity;
    let h = m2 * l1 * c2 * q[1].sin();
    let coriolis = [-h * (2.0 * qd[0] * qd[1] + qd[1] * qd[1]), h * qd[0] * qd[0]];
    let s1 = q[0].sin();
    let s12 = (q[0] + q[1]).sin();
    let gravity = [m1 * g * c1 * s1 + m2 * g * (l1 * s1 + c2 * s12), m2 * g * c2 * s12];
    std::array::from_fn(|j| coriolis[j] + gravity[j] + params.damping[j] * qd[j])
}

/// Unconstrained joint accelerations `M^-1 (tau - C qd - G - B qd)`.
pub fn forward_dynamics(state: &ArmState, torques: [f64; 2], params: &ArmParams) -> Result<[f64; 2]> {
    let m = mass_matrix(state.q, params);
    let bias = bias_torques(state.q, state.qd, params);
    let rhs = [torques[0] - bias[0], torques[1] - bias[1]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let qdd = [
        (m[1][1] * rhs[0] - m[0][1] * rhs[1]) / det,
        (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det,
    ];
    if qdd.iter().all(|v| v.is_finite()) {
        Ok(qdd)
    } else {
        Err(Error::NonFinite { what: "joint acceleration", t: state.t })
    }
}

/// Joint accelerations accounting for joints resting against a limit.
///
/// A joint sitting at a limit, not moving away from it, whose free
/// acceleration would push further into the limit is held fixed; the other
/// joint then moves under the reduced one-joint equation.
pub fn constrained_accelerations(
    state: &ArmState,
    torques: [f64; 2],
    params: &ArmParams,
) -> Result<[f64; 2]> {
    let free = forward_dynamics(state, torques, params)?;
    let pressing = |j: usize, qdd: f64| match params.at_limit(j, state.q[j]) {
        Some(side) => state.qd[j] * side <= 0.0 && qdd * side > 0.0,
        None => false,
    };
    let locked: Vec<usize> = (0..N_JOINTS).filter(|&j| pressing(j, free[j])).collect();
    match locked.as_slice() {
        [] => Ok(free),
        [_, _] => Ok([0.0; 2]),
        [j] => {
            let j = *j;
            let other = 1 - j;
            let m = mass_matrix(state.q, params);
            let bias = bias_torques(state.q, state.qd, params);
            let mut qdd = [0.0; 2];
            qdd[other] = (torques[other] - bias[other]) / m[other][other];
            // Releasing the reduced system can make the locked joint want to
            // leave the limit; in that case the free solution is the right one.
            let residual_pushes = {
                let rhs_j = torques[j] - bias[j] - m[j][other] * qdd[other];
                pressing(j, rhs_j / m[j][j])
            };
            Ok(if residual_pushes { qdd } else { free })
        }
        _ => unreachable!(),
    }
}

/// Advance the plant by `dt` with stimulations `u` held constant.
///
/// Semi-implicit Euler on the joints (torques from the current activations),
/// exact activation update, then joint limits enforced by clamping the angle
/// and zeroing any velocity pointing further out.
pub fn step(state: &ArmState, u: &[f64; N_MUSCLES], dt: f64, params: &ArmParams) -> Result<ArmState> {
    let torques = muscle_torques(&state.act, params)?;
    let qdd = constrained_accelerations(state, torques, params)?;
    let mut next = *state;
    for j in 0..N_JOINTS {
        next.qd[j] = state.qd[j] + qdd[j] * dt;
        next.q[j] = state.q[j] + next.qd[j] * dt;
        let [lo, hi] = params.joint_limits[j];
        if next.q[j] < lo {
            next.q[j] = lo;
            next.qd[j] = next.qd[j].max(0.0);
        } else if next.q[j] > hi {
            next.q[j] = hi;
            next.qd[j] = next.qd[j].min(0.0);
        }
    }
    for i in 0..N_MUSCLES {
        next.act[i] = activation_step(state.act[i], u[i], dt, params)?;
    }
    next.t = state.t + dt;
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::NonFinite { what: "arm state", t: next.t })
    }
}

/// Hand (forearm tip) position.
pub fn hand_position(q: [f64; 2], params: &ArmParams) -> [f64; 2] {
    let [l1, l2] = params.link_lengths;
    let (s1, c1) = q[0].sin_cos();
    let (s12, c12) = (q[0] + q[1]).sin_cos();
    [l1 * s1 + l2 * s12, -l1 * c1 - l2 * c12]
}

/// Hand Jacobian `d p / d q`, row-major.
pub fn jacobian(q: [f64; 2], params: &ArmParams) -> [[f64; 2]; 2] {
    let [l1, l2] = params.link_lengths;
    let (s1, c1) = q[0].sin_cos();
    let (s12, c12) = (q[0] + q[1]).sin_cos();
    [[l1 * c1 + l2 * c12, l2 * c12], [l1 * s1 + l2 * s12, l2 * s12]]
}

pub fn hand_state(state: &ArmState, qdd: [f64; 2], params: &ArmParams) -> HandState {
    let [l1, l2] = params.link_lengths;
    let q = state.q;
    let qd = state.qd;
    let jac = jacobian(q, params);
    let (s1, c1) = q[0].sin_cos();
    let (s12, c12) = (q[0] + q[1]).sin_cos();
    let w1 = qd[0];
    let w12 = qd[0] + qd[1];
    // Jdot * qd
    let centripetal = [
        -l1 * s1 * w1 * w1 - l2 * s12 * w12 * w12,
        l1 * c1 * w1 * w1 + l2 * c12 * w12 * w12,
    ];
    let mul = |m: [[f64; 2]; 2], x: [f64; 2]| [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]];
    let v = mul(jac, qd);
    let jqdd = mul(jac, qdd);
    HandState {
        p: hand_position(q, params),
        v,
        a: [jqdd[0] + centripetal[0], jqdd[1] + centripetal[1]],
    }
}

/// `|qd1 tau1| + |qd2 tau2|` (W).
pub fn instantaneous_power(qd: [f64; 2], torques: [f64; 2]) -> f64 {
    (qd[0] * torques[0]).abs() + (qd[1] * torques[1]).abs()
}

/// Kinetic plus gravitational potential energy, with the potential measured
/// from the hanging pose.
pub fn mechanical_energy(state: &ArmState, params: &ArmParams) -> f64 {
    let m = mass_matrix(state.q, params);
    let qd = state.qd;
    let kinetic = 0.5
        * (m[0][0] * qd[0] * qd[0] + 2.0 * m[0][1] * qd[0] * qd[1] + m[1][1] * qd[1] * qd[1]);
    let [l1, _] = params.link_lengths;
    let [m1, m2] = params.link_masses;
    let [c1, c2] = params.com_offsets;
    let g = params.gravity;
    let y1 = -c1 * state.q[0].cos();
    let y2 = -l1 * state.q[0].cos() - c2 * (state.q[0] + state.q[1]).cos();
    let potential = m1 * g * (y1 + c1) + m2 * g * (y2 + l1 + c2);
    kinetic + potential
}

/// Elbow-flexed inverse kinematics; `None` when `p` is out of reach or the
/// solution violates a joint limit.
pub fn inverse_kinematics(p: [f64; 2], params: &ArmParams) -> Option<[f64; 2]> {
    let [l1, l2] = params.link_lengths;
    let r2 = p[0] * p[0] + p[1] * p[1];
    // r^2 = l1^2 + l2^2 + 2 l1 l2 cos(elbow)
    let cos_elbow = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    if !(-1.0..=1.0).contains(&cos_elbow) {
        return None;
    }
    let elbow = cos_elbow.acos();
    // Direction of the hand from the shoulder, measured from the downward
    // vertical, minus the angle the forearm adds.
    let hand_dir = p[0].atan2(-p[1]);
    let offset = (l2 * elbow.sin()).atan2(l1 + l2 * elbow.cos());
    let mut shoulder = hand_dir - offset;
    let [lo, hi] = params.joint_limits[SHOULDER];
    // atan2 wraps at +-pi; try the equivalent branch.
    if shoulder < lo {
        shoulder += std::f64::consts::TAU;
    } else if shoulder > hi {
        shoulder -= std::f64::consts::TAU;
    }
    let q = [shoulder, elbow];
    let within = (0..N_JOINTS).all(|j| {
        let [lo, hi] = params.joint_limits[j];
        (lo..=hi).contains(&q[j])
    });
    within.then_some(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn point_mass_params() -> ArmParams {
        ArmParams {
            link_lengths: [1.0, 1.0],
            link_masses: [1.0, 1.0],
            com_offsets: [1.0, 1.0],
            inertias: [0.0, 0.0],
            gravity: 0.0,
            damping: [0.0, 0.0],
            joint_limits: [[-10.0, 10.0], [-10.0, 10.0]],
            ..ArmParams::default()
        }
    }

    #[test]
    fn defaults_validate() {
        ArmParams::default().validate().unwrap();
    }

    #[test]
    fn layout_violations_are_rejected() {
        let mut p = ArmParams::default();
        p.moment_arms[Muscle::ShoulderFlexor.index()][ELBOW] = 0.01;
        assert!(p.validate().is_err());
        let mut p = ArmParams::default();
        p.moment_arms[Muscle::BiarticularExtensor.index()] = [0.03, 0.03];
        assert!(p.validate().is_err());
        let mut p = ArmParams::default();
        p.tau_deact = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn activation_fixed_point_and_rest() {
        let p = ArmParams::default();
        assert_eq!(activation_step(0.3, 0.3, 0.002, &p).unwrap(), 0.3);
        assert_eq!(activation_step(0.0, 0.0, 0.002, &p).unwrap(), 0.0);
    }

    #[test]
    fn activation_rise_matches_closed_form() {
        let p = ArmParams::default();
        let a = activation_step(0.0, 1.0, 0.002, &p).unwrap();
        assert_relative_eq!(a, 0.18126924692201818, epsilon = 1e-15);
    }

    #[test]
    fn activation_decay_uses_deactivation_constant() {
        let p = ArmParams::default();
        let a = activation_step(1.0, 0.0, 0.002, &p).unwrap();
        assert_relative_eq!(a, (-0.05f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn activation_rejects_out_of_range() {
        let p = ArmParams::default();
        assert!(matches!(
            activation_step(0.0, 1.2, 0.002, &p),
            Err(Error::OutOfUnitRange { what: "stimulation", .. })
        ));
        assert!(activation_step(-0.1, 0.5, 0.002, &p).is_err());
        assert!(activation_step(0.1, 0.5, 0.0, &p).is_err());
    }

    #[test]
    fn torques_from_single_flexor() {
        let p = ArmParams::default();
        let mut act = [0.0; 6];
        assert_eq!(muscle_torques(&act, &p).unwrap(), [0.0, 0.0]);
        act[Muscle::ShoulderFlexor.index()] = 1.0;
        let tau = muscle_torques(&act, &p).unwrap();
        assert_relative_eq!(tau[0], 300.0 * 0.04, epsilon = 1e-12);
        assert_eq!(tau[1], 0.0);
    }

    #[test]
    fn antagonists_cancel() {
        let p = ArmParams::default();
        for pair in MusclePair::ALL {
            let mut act = [0.0; 6];
            act[pair.flexor().index()] = 0.5;
            act[pair.extensor().index()] = 0.5;
            assert_eq!(muscle_torques(&act, &p).unwrap(), [0.0, 0.0]);
        }
    }

    #[test]
    fn hanging_arm_is_an_equilibrium() {
        let p = ArmParams::default();
        let s = ArmState::at_rest([0.0, 0.0]);
        assert_eq!(forward_dynamics(&s, [0.0, 0.0], &p).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn point_mass_acceleration_matches_lagrangian() {
        // Independently derived: M = [[5, 2], [2, 1]] at q2 = 0, so M qdd = (1, 0)
        // gives qdd = (1, -2).
        let p = point_mass_params();
        let s = ArmState::at_rest([0.3, 0.0]);
        let m = mass_matrix(s.q, &p);
        assert_relative_eq!(m[0][0], 5.0, epsilon = 1e-12);
        assert_relative_eq!(m[0][1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(m[1][1], 1.0, epsilon = 1e-12);
        let qdd = forward_dynamics(&s, [1.0, 0.0], &p).unwrap();
        assert_relative_eq!(qdd[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(qdd[1], -2.0, epsilon = 1e-9);
    }

    #[test]
    fn mass_matrix_is_positive_definite() {
        let p = ArmParams::default();
        for k in 0..=360 {
            let q2 = (k as f64).to_radians();
            let m = mass_matrix([0.0, q2], &p);
            let tr = m[0][0] + m[1][1];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            assert_eq!(m[0][1], m[1][0]);
            // both eigenvalues positive iff trace and determinant are
            assert!(tr > 0.0 && det > 0.0, "q2 = {q2}");
        }
    }

    #[test]
    fn gravity_compensated_pose_stays_put() {
        let p = ArmParams::default();
        let q = [0.4, 0.9];
        let g = bias_torques(q, [0.0, 0.0], &p);
        // Shoulder and elbow flexors alone balance gravity here (both torques positive).
        assert!(g[0] > 0.0 && g[1] > 0.0);
        let mut s = ArmState::at_rest(q);
        s.act[Muscle::ShoulderFlexor.index()] = g[0] / (300.0 * 0.04);
        s.act[Muscle::ElbowFlexor.index()] = g[1] / (300.0 * 0.04);
        let u = s.act;
        let next = step(&s, &u, 0.002, &p).unwrap();
        for j in 0..2 {
            assert!((next.q[j] - s.q[j]).abs() < 1e-12);
            assert!(next.qd[j].abs() < 1e-12);
        }
        assert_eq!(next.act, s.act);
    }

    #[test]
    fn step_is_deterministic() {
        let p = ArmParams::default();
        let u = [0.9, 0.1, 0.3, 0.7, 0.5, 0.2];
        let run = || {
            let mut s = ArmState::initial();
            for _ in 0..500 {
                s = step(&s, &u, 0.002, &p).unwrap();
            }
            s
        };
        let (a, b) = (run(), run());
        assert_eq!(a.q.map(f64::to_bits), b.q.map(f64::to_bits));
        assert_eq!(a.qd.map(f64::to_bits), b.qd.map(f64::to_bits));
    }

    #[test]
    fn limits_are_enforced() {
        let p = ArmParams::default();
        // Elbow extensor and shoulder extensor at full stimulation slam both joints.
        let mut u = [0.0; 6];
        u[Muscle::ElbowExtensor.index()] = 1.0;
        u[Muscle::ShoulderExtensor.index()] = 1.0;
        let mut s = ArmState::initial();
        for _ in 0..2000 {
            s = step(&s, &u, 0.002, &p).unwrap();
            for j in 0..2 {
                let [lo, hi] = p.joint_limits[j];
                assert!(s.q[j] >= lo && s.q[j] <= hi);
            }
        }
        assert_eq!(s.q[ELBOW], 0.0);
    }

    #[test]
    fn resting_against_limit_reports_zero_acceleration() {
        let p = ArmParams::default();
        // Hanging straight with the elbow against its lower limit and an
        // extensor torque pushing further: nothing should move.
        let mut s = ArmState::at_rest([0.0, 0.0]);
        s.act[Muscle::ElbowExtensor.index()] = 0.2;
        let tau = muscle_torques(&s.act, &p).unwrap();
        let free = forward_dynamics(&s, tau, &p).unwrap();
        assert!(free[1] < 0.0);
        let qdd = constrained_accelerations(&s, tau, &p).unwrap();
        assert_eq!(qdd[1], 0.0);
        assert_eq!(qdd[0], 0.0);
    }

    #[test]
    fn forward_kinematics_right_angle() {
        let p = ArmParams::default();
        let s = ArmState::initial();
        let h = hand_state(&s, [0.0, 0.0], &p);
        assert_relative_eq!(h.p[0], 0.35, epsilon = 1e-12);
        assert_relative_eq!(h.p[1], -0.35, epsilon = 1e-12);
        assert_eq!(h.v, [0.0, 0.0]);
    }

    #[test]
    fn power_examples() {
        assert_eq!(instantaneous_power([0.0, 0.0], [5.0, -3.0]), 0.0);
        assert_eq!(instantaneous_power([1.0, -2.0], [3.0, 4.0]), 11.0);
        assert_eq!(instantaneous_power([-1.0, 2.0], [3.0, -4.0]), 11.0);
    }

    #[test]
    fn inverse_kinematics_round_trip() {
        let p = ArmParams::default();
        for &q in &[[0.3, 0.5], [1.5, 2.4], [-0.8, 0.1], [2.5, 1.0]] {
            let hand = hand_position(q, &p);
            let sol = inverse_kinematics(hand, &p).unwrap();
            assert_relative_eq!(sol[0], q[0], epsilon = 1e-9);
            assert_relative_eq!(sol[1], q[1], epsilon = 1e-9);
        }
        assert!(inverse_kinematics([0.0, 0.8], &p).is_none());
        // Within the annulus but needs shoulder beyond 150 deg.
        assert!(inverse_kinematics([-0.1, 0.6], &p).is_none());
    }
}
