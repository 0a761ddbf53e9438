use rand::Rng;
use rand_distr::StandardNormal;

use super::{Action, NoiseParams, Pose, RobotState};
use crate::geometry::wrap_angle;

pub const CONTROL_DT: f64 = 0.2;

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        sigma * rng.sample::<f64, _>(StandardNormal)
    }
}

/// One explicit-Euler unicycle step. The action is clamped to bounds before
/// process noise is added. Collisions are not checked here.
pub fn step_dynamics<R: Rng + ?Sized>(
    state: &RobotState,
    action: Action,
    dt: f64,
    noise: &NoiseParams,
    rng: &mut R,
) -> RobotState {
    debug_assert!(dt > 0.0);
    let a = action.clamped();
    let v = a.v + gaussian(rng, noise.sigma_speed);
    let w = a.w + gaussian(rng, noise.sigma_turning);
    let (s, c) = state.heading.sin_cos();
    RobotState {
        x: state.x + v * c * dt,
        y: state.y + v * s * dt,
        heading: wrap_angle(state.heading + w * dt),
        radius: state.radius,
    }
}

/// Believed pose: position perturbed by `sigma_localize`, heading exact.
pub fn localize<R: Rng + ?Sized>(state: &RobotState, noise: &NoiseParams, rng: &mut R) -> Pose {
    Pose {
        x: state.x + gaussian(rng, noise.sigma_localize),
        y: state.y + gaussian(rng, noise.sigma_localize),
        heading: state.heading,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;

    #[test]
    fn zero_action_is_fixed_point() {
        let s = RobotState::new(1.0, 2.0, 0.5);
        let n = step_dynamics(&s, Action::default(), CONTROL_DT, &NoiseParams::zero(), &mut rng_from(0));
        assert_eq!(s, n);
    }

    #[test]
    fn straight_line_step() {
        let s = RobotState::new(0.0, 0.0, 0.0);
        let n = step_dynamics(&s, Action::new(1.0, 0.0), 0.2, &NoiseParams::zero(), &mut rng_from(0));
        assert_eq!((n.x, n.y, n.heading), (0.2, 0.0, 0.0));
    }

    #[test]
    fn out_of_bounds_action_is_clamped() {
        let s = RobotState::new(0.0, 0.0, 0.0);
        let zero = NoiseParams::zero();
        let a = step_dynamics(&s, Action::new(2.0, -3.0), 0.2, &zero, &mut rng_from(0));
        let b = step_dynamics(&s, Action::new(1.0, -1.0), 0.2, &zero, &mut rng_from(0));
        assert_eq!(a, b);
    }

    #[test]
    fn localization_noise_statistics() {
        let s = RobotState::new(3.0, -1.0, 1.0);
        let noise = NoiseParams { sigma_localize: 0.1, ..NoiseParams::zero() };
        let mut rng = rng_from(5);
        let n = 100_000;
        let (mut sx, mut sxx, mut sy, mut syy) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let p = localize(&s, &noise, &mut rng);
            assert_eq!(p.heading, 1.0);
            let (dx, dy) = (p.x - 3.0, p.y + 1.0);
            sx += dx;
            sxx += dx * dx;
            sy += dy;
            syy += dy * dy;
        }
        let nf = n as f64;
        let std_x = (sxx / nf - (sx / nf).powi(2)).sqrt();
        let std_y = (syy / nf - (sy / nf).powi(2)).sqrt();
        assert!((std_x - 0.1).abs() < 0.002, "{std_x}");
        assert!((std_y - 0.1).abs() < 0.002, "{std_y}");
        let exact = localize(&s, &NoiseParams::zero(), &mut rng);
        assert_eq!(exact, Pose::from(s));
    }
}
