//! Exponentially weighted input update.

use crate::dynamics::{ControlInput, InputBounds};
use crate::planner::rollout::RolloutBatch;

/// Normalised rollout weights `exp(-(S_m - S_min) / lambda) / sum`.
/// Summation runs in rollout-index order.
pub fn rollout_weights(costs: &[f64], lambda: f64) -> Vec<f64> {
    let s_min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let mut weights: Vec<f64> = costs.iter().map(|s| (-(s - s_min) / lambda).exp()).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    weights
}

/// `u_t + sum_m w_m eps_{t,m} / sum_m w_m`, then clamped to `bounds`.
///
/// One weight per rollout, derived from its whole cost-to-go.
pub fn update_inputs(
    nominal: &[ControlInput],
    batch: &RolloutBatch,
    lambda: f64,
    bounds: &InputBounds,
) -> Vec<ControlInput> {
    let costs = &batch.costs;
    assert!(!costs.is_empty(), "update needs at least one rollout");
    let s_min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = costs.iter().map(|s| (-(s - s_min) / lambda).exp()).collect();
    let denom: f64 = raw.iter().sum();
    nominal
        .iter()
        .enumerate()
        .map(|(t, u)| {
            let mut num = ControlInput::ZERO;
            for (m, w) in raw.iter().enumerate() {
                let e = batch.noise.get(m, t);
                num.a += w * e.a;
                num.omega += w * e.omega;
            }
            bounds.clamp(ControlInput::new(u.a + num.a / denom, u.omega + num.omega / denom))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::noise::NoiseBatch;
    use approx::assert_relative_eq;

    const WIDE: InputBounds = InputBounds {
        a_min: -100.0,
        a_max: 100.0,
        omega_max: 100.0,
    };

    fn batch(costs: Vec<f64>, rows: Vec<Vec<ControlInput>>) -> RolloutBatch {
        RolloutBatch {
            noise: NoiseBatch::from_rows(rows),
            costs,
        }
    }

    #[test]
    fn equal_costs_average_noise() {
        let b = batch(
            vec![3.0; 3],
            vec![
                vec![ControlInput::new(0.3, 0.01)],
                vec![ControlInput::new(-0.6, 0.02)],
                vec![ControlInput::new(0.9, 0.03)],
            ],
        );
        let u = update_inputs(&[ControlInput::new(0.5, 0.0)], &b, 150.0, &WIDE);
        assert_relative_eq!(u[0].a, 0.5 + 0.2, epsilon = 1e-15);
        assert_relative_eq!(u[0].omega, 0.02, epsilon = 1e-15);
    }

    #[test]
    fn two_rollouts_give_tanh_half() {
        let lambda = 150.0;
        let b = batch(
            vec![0.0, lambda],
            vec![vec![ControlInput::new(1.0, 0.0)], vec![ControlInput::new(-1.0, 0.0)]],
        );
        let u = update_inputs(&[ControlInput::ZERO], &b, lambda, &WIDE);
        // (1 - e^-1) / (1 + e^-1) = tanh(1/2) = 0.46211715726000974
        assert_relative_eq!(u[0].a, 0.462_117_157_260_009_7, epsilon = 1e-15);
    }

    #[test]
    fn weights_sum_to_one() {
        let w = rollout_weights(&[10.0, 20.0, 5.0, 1e6], 2.0);
        assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_eq!(w[3], 0.0);
        assert!(w[2] > w[0] && w[0] > w[1]);
    }

    #[test]
    fn low_temperature_picks_best_rollout() {
        let rows = vec![
            vec![ControlInput::new(0.4, 0.01), ControlInput::new(0.1, 0.0)],
            vec![ControlInput::new(-0.2, -0.03), ControlInput::new(0.5, 0.02)],
            vec![ControlInput::new(0.7, 0.05), ControlInput::new(-0.9, 0.01)],
        ];
        let b = batch(vec![12.0, 11.5, 30.0], rows);
        let nominal = [ControlInput::new(0.1, 0.0); 2];
        let mut prev_err = f64::INFINITY;
        for lambda in [10.0, 1.0, 0.1, 0.01] {
            let u = update_inputs(&nominal, &b, lambda, &WIDE);
            let err = (u[0].a - (0.1 - 0.2)).abs() + (u[1].a - 0.6).abs();
            assert!(err <= prev_err);
            prev_err = err;
        }
        assert!(prev_err < 1e-12);
    }

    #[test]
    fn update_is_clamped() {
        let b = batch(vec![0.0], vec![vec![ControlInput::new(5.0, 1.0)]]);
        let bounds = InputBounds {
            a_min: -2.5,
            a_max: 1.1,
            omega_max: 0.11,
        };
        let u = update_inputs(&[ControlInput::ZERO], &b, 150.0, &bounds);
        assert_eq!(u[0], ControlInput::new(1.1, 0.11));
    }
}
