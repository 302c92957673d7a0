//! Seeded Gaussian input perturbations.
//!
//! Each rollout draws from its own ChaCha stream keyed by `(seed, cycle)`,
//! so the perturbations never depend on how rollouts are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dynamics::{ControlInput, InputBounds};
use crate::error::{Error, Result};
use crate::parallel::Backend;

/// Per-channel standard deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseScale {
    pub sigma_a: f64,
    pub sigma_omega: f64,
}

impl NoiseScale {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_a >= 0.0 && self.sigma_a.is_finite()) {
            return Err(Error::invalid("sigma_a", "must be finite and non-negative"));
        }
        if !(self.sigma_omega >= 0.0 && self.sigma_omega.is_finite()) {
            return Err(Error::invalid("sigma_omega", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Random stream identity: run seed plus planning-cycle counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub seed: u64,
    pub cycle: u64,
}

impl StreamKey {
    fn rng(&self, rollout: usize) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.cycle.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(rollout as u64);
        rng
    }
}

/// `rollouts x horizon` perturbations, row-major by rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBatch {
    rollouts: usize,
    horizon: usize,
    data: Vec<ControlInput>,
}

impl NoiseBatch {
    pub fn zeros(rollouts: usize, horizon: usize) -> Self {
        Self {
            rollouts,
            horizon,
            data: vec![ControlInput::ZERO; rollouts * horizon],
        }
    }

    pub fn from_rows(rows: Vec<Vec<ControlInput>>) -> Self {
        let rollouts = rows.len();
        let horizon = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == horizon), "ragged noise rows");
        Self {
            rollouts,
            horizon,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rollouts(&self) -> usize {
        self.rollouts
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn row(&self, m: usize) -> &[ControlInput] {
        &self.data[m * self.horizon..(m + 1) * self.horizon]
    }

    pub fn get(&self, m: usize, t: usize) -> ControlInput {
        self.data[m * self.horizon + t]
    }

    pub fn as_slice(&self) -> &[ControlInput] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [ControlInput] {
        &mut self.data
    }
}

/// Unclamped draws `eps ~ N(0, diag(sigma_a^2, sigma_omega^2))`.
pub fn gaussian_draws(
    key: StreamKey,
    rollouts: usize,
    horizon: usize,
    scale: NoiseScale,
    backend: &Backend,
) -> Result<NoiseBatch> {
    scale.validate()?;
    let mut batch = NoiseBatch::zeros(rollouts, horizon);
    let mut slots = vec![(); rollouts];
    backend.for_each_row(batch.as_mut_slice(), horizon, &mut slots, |m, row, _| {
        let mut rng = key.rng(m);
        for eps in row.iter_mut() {
            let za: f64 = StandardNormal.sample(&mut rng);
            let zw: f64 = StandardNormal.sample(&mut rng);
            *eps = ControlInput::new(scale.sigma_a * za, scale.sigma_omega * zw);
        }
    });
    Ok(batch)
}

/// Gaussian draws adjusted so that `nominal[t] + eps` stays inside `bounds`:
/// the sum is clamped to the box and `eps` becomes the clamped value minus
/// the nominal input.
pub fn sample_noise(
    key: StreamKey,
    nominal: &[ControlInput],
    scale: NoiseScale,
    bounds: &InputBounds,
    rollouts: usize,
    backend: &Backend,
) -> Result<NoiseBatch> {
    let mut batch = gaussian_draws(key, rollouts, nominal.len(), scale, backend)?;
    let horizon = nominal.len();
    let mut slots = vec![(); rollouts];
    backend.for_each_row(batch.as_mut_slice(), horizon, &mut slots, |_, row, _| {
        for (eps, u) in row.iter_mut().zip(nominal) {
            *eps = bounds.clamp(*u + *eps) - *u;
        }
    });
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BOUNDS: InputBounds = InputBounds {
        a_min: -2.5,
        a_max: 1.1,
        omega_max: 0.11,
    };
    const SCALE: NoiseScale = NoiseScale {
        sigma_a: 0.85,
        sigma_omega: 0.05,
    };

    #[test]
    fn zero_sigma_gives_zero_noise() {
        let key = StreamKey { seed: 1, cycle: 0 };
        let scale = NoiseScale {
            sigma_a: 0.0,
            sigma_omega: 0.0,
        };
        let b = sample_noise(key, &[ControlInput::ZERO; 16], scale, &BOUNDS, 64, &Backend::Sequential)
            .unwrap();
        assert!(b.as_slice().iter().all(|e| *e == ControlInput::ZERO));
    }

    #[test]
    fn rejects_invalid_sigma() {
        let key = StreamKey { seed: 1, cycle: 0 };
        for bad in [-0.1, f64::NAN, f64::INFINITY] {
            let scale = NoiseScale {
                sigma_a: bad,
                sigma_omega: 0.05,
            };
            assert!(gaussian_draws(key, 4, 4, scale, &Backend::Sequential).is_err());
        }
    }

    #[test]
    fn saturated_nominal_clamps_positive_draws() {
        let key = StreamKey { seed: 5, cycle: 2 };
        let nominal = [ControlInput::new(1.1, 0.0); 8];
        let raw = gaussian_draws(key, 32, 8, SCALE, &Backend::Sequential).unwrap();
        let clamped = sample_noise(key, &nominal, SCALE, &BOUNDS, 32, &Backend::Sequential).unwrap();
        let mut saw_positive = false;
        for m in 0..32 {
            for t in 0..8 {
                let r = raw.get(m, t);
                let c = clamped.get(m, t);
                if r.a > 0.0 {
                    saw_positive = true;
                    assert_eq!(c.a, 0.0);
                } else if r.a > -3.6 {
                    assert!((c.a - r.a).abs() <= 1e-15);
                }
            }
        }
        assert!(saw_positive);
    }

    #[test]
    fn statistics_of_draws() {
        let key = StreamKey { seed: 2024, cycle: 0 };
        let n = 100_000;
        let raw = gaussian_draws(key, n, 1, SCALE, &Backend::Sequential).unwrap();
        let mean = raw.as_slice().iter().map(|e| e.a).sum::<f64>() / n as f64;
        assert!(mean.abs() < 3.0 * 0.85 / (n as f64).sqrt(), "mean {mean}");
        let var = raw.as_slice().iter().map(|e| (e.a - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var.sqrt() - 0.85).abs() < 0.01);

        let clamped =
            sample_noise(key, &[ControlInput::ZERO], SCALE, &BOUNDS, n, &Backend::Sequential).unwrap();
        assert!(clamped.as_slice().iter().all(|e| BOUNDS.contains(*e)));
    }

    #[test]
    fn independent_of_backend_and_distinct_per_cycle() {
        let key = StreamKey { seed: 9, cycle: 4 };
        let seq = gaussian_draws(key, 50, 16, SCALE, &Backend::Sequential).unwrap();
        for workers in [2, 4, 8] {
            let par = gaussian_draws(key, 50, 16, SCALE, &Backend::with_workers(workers)).unwrap();
            assert_eq!(seq, par);
        }
        let next = gaussian_draws(StreamKey { cycle: 5, ..key }, 50, 16, SCALE, &Backend::Sequential)
            .unwrap();
        assert_ne!(seq, next);
        assert_ne!(seq.row(0), seq.row(1));
    }
}
