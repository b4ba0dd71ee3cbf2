use super::GlobalState;

/// Distance from a landmark to an agent, computed from the displacement
/// `landmark - agent`. Observations store the same displacement, so rewards
/// recomputed from observations agree bit for bit.
#[inline]
pub(crate) fn displacement_norm(dx: f64, dy: f64) -> f64 {
    dx.hypot(dy)
}

/// Wrapped absolute angle between two unit direction vectors, in `[0, pi]`.
#[inline]
pub(crate) fn unit_angle(u: (f64, f64), v: (f64, f64)) -> f64 {
    let cross = u.0 * v.1 - u.1 * v.0;
    let dot = u.0 * v.0 + u.1 * v.1;
    cross.abs().atan2(dot)
}

/// Wrapped absolute angular difference between two orientations, in `[0, pi]`.
pub fn angular_difference(a: f64, b: f64) -> f64 {
    unit_angle((a.cos(), a.sin()), (b.cos(), b.sin()))
}

/// `exp(-mean pairwise angle)` over all agent pairs; 1 for a single agent.
pub(crate) fn weight_from_directions(dirs: &[(f64, f64)]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..dirs.len() {
        for j in i + 1..dirs.len() {
            total += unit_angle(dirs[i], dirs[j]);
            pairs += 1;
        }
    }
    if pairs == 0 {
        1.0
    } else {
        (-(total / pairs as f64)).exp()
    }
}

/// Orientation agreement factor of the coordination reward.
pub fn coordination_weight(state: &GlobalState) -> f64 {
    let dirs: Vec<(f64, f64)> = state
        .agents
        .iter()
        .map(|a| (a.theta.cos(), a.theta.sin()))
        .collect();
    weight_from_directions(&dirs)
}

/// `exp(-(1/L) * sum_l min_i |pos_i - landmark_l|)`, in `(0, 1]`.
pub fn reward_spread(state: &GlobalState) -> f64 {
    let total: f64 = state
        .landmarks
        .iter()
        .map(|lm| {
            state
                .agents
                .iter()
                .map(|a| displacement_norm(lm[0] - a.pos[0], lm[1] - a.pos[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    (-(total / state.landmarks.len() as f64)).exp()
}

/// Spread reward weighted by `exp(-angle between agent orientations)`.
pub fn reward_coord(state: &GlobalState) -> f64 {
    reward_spread(state) * coordination_weight(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::AgentState;
    use std::f64::consts::PI;

    fn state(agents: &[([f64; 2], f64)], landmarks: &[[f64; 2]]) -> GlobalState {
        GlobalState {
            agents: agents
                .iter()
                .map(|&(pos, theta)| AgentState { pos, theta })
                .collect(),
            landmarks: landmarks.to_vec(),
        }
    }

    #[test]
    fn covered_landmarks_give_unit_reward() {
        let s = state(
            &[([0.2, 0.3], 0.0), ([-0.5, 0.1], 0.0)],
            &[[0.2, 0.3], [-0.5, 0.1], [0.2, 0.3]],
        );
        assert_eq!(reward_spread(&s), 1.0);
    }

    #[test]
    fn single_agent_single_landmark() {
        let s = state(&[([0.0, 0.0], 0.0)], &[[1.0, 0.0]]);
        assert!((reward_spread(&s) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((reward_spread(&s) - 0.3679).abs() < 1e-4);
    }

    #[test]
    fn identical_orientations_keep_spread_reward() {
        let s = state(&[([0.1, 0.0], 1.3), ([0.4, -0.2], 1.3)], &[[0.0, 0.5]]);
        assert_eq!(reward_coord(&s), reward_spread(&s));
    }

    #[test]
    fn opposite_orientations_scale_by_exp_minus_pi() {
        let s = state(&[([0.1, 0.0], 0.0), ([0.4, -0.2], PI)], &[[0.0, 0.5]]);
        let factor = reward_coord(&s) / reward_spread(&s);
        assert!((factor - (-PI).exp()).abs() < 1e-12);
        assert!((factor - 0.0432).abs() < 1e-4);
    }

    #[test]
    fn angle_difference_wraps() {
        assert!((angular_difference(0.1, 2.0 * PI - 0.1) - 0.2).abs() < 1e-12);
        assert!((angular_difference(2.0 * PI - 0.1, 0.1) - 0.2).abs() < 1e-12);
        assert!((angular_difference(0.0, PI) - PI).abs() < 1e-12);
        assert_eq!(angular_difference(0.7, 0.7), 0.0);
    }

    #[test]
    fn three_agent_weight_is_mean_pairwise() {
        let s = state(
            &[([0.0, 0.0], 0.0), ([0.0, 0.0], 0.5), ([0.0, 0.0], 1.0)],
            &[[0.0, 0.0]],
        );
        let expected = (-(0.5 + 1.0 + 0.5) / 3.0f64).exp();
        assert!((coordination_weight(&s) - expected).abs() < 1e-12);
    }
}
