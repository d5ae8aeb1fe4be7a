//! Passive arm against an independent adaptive Dormand–Prince integration of
//! the two-link pendulum equations.

#[path = "support/reference.rs"]
mod reference;

use reachlab::arm::{self, ArmState};
use reference::*;

#[test]
fn passive_pendulum_matches_reference() {
    let worst = max_reference_error([0.1, 0.0], 2.0);
    println!("max joint-angle error over 2 s: {worst:.3e} rad");
    assert!(worst < 1e-3, "max error {worst}");
}

#[test]
fn reference_integrator_conserves_energy() {
    let p = passive_params();
    let e = |y: [f64; 4]| arm::mechanical_energy(&ArmState { q: [y[0], y[1]], qd: [y[2], y[3]], ..ArmState::at_rest([0.0; 2]) }, &p);
    let y0 = [0.8, 0.5, 0.0, 0.0];
    let y1 = dopri(&p, y0, 0.0, 2.0, 1e-12);
    assert!((e(y1) - e(y0)).abs() / e(y0) < 1e-8);
}

#[test]
fn passive_energy_drift_is_small() {
    let (drift, excursion) = energy_drift([0.1, 0.0], DT);
    println!("drift {:.4}%, max excursion {:.4}%", 100.0 * drift, 100.0 * excursion);
    assert!(drift < 5e-3 && excursion < 5e-3);
}

/// Large chaotic swings drift by a few percent at 2 ms; the drift is an
/// integrator error and shrinks linearly with the step.
#[test]
fn large_swing_drift_is_first_order() {
    let (coarse, _) = energy_drift([0.8, 0.5], DT);
    let (fine, _) = energy_drift([0.8, 0.5], DT / 4.0);
    println!("large swing drift: {:.3}% at 2 ms, {:.3}% at 0.5 ms", 100.0 * coarse, 100.0 * fine);
    assert!(fine < coarse / 2.5);
}
