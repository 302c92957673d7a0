//! Planner configuration and its TOML representation.
//!
//! File keys follow the usual MPPI parameter names (`lambda`, `M`, `T`, `dt`,
//! `sigma_omega`, ...). Speeds in the file are km/h; everything in memory is SI.

use serde::{Deserialize, Serialize};

use crate::cost::{CostWeights, InputCostParams};
use crate::dynamics::{InputBounds, VehicleParams};
use crate::error::{Error, Result};
use crate::planner::smooth::SmoothingKernel;

pub const KMH_PER_MPS: f64 = 3.6;

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    /// Rollouts per cycle.
    pub rollouts: usize,
    /// Horizon steps.
    pub horizon: usize,
    /// Softmax temperature.
    pub lambda: f64,
    pub sigma_omega: f64,
    pub sigma_a: f64,
    pub omega_max: f64,
    pub a_max: f64,
    pub a_min: f64,
    /// Speed cap, m/s.
    pub v_goal: f64,
    pub seed: u64,
    pub vehicle: VehicleParams,
    pub weights: CostWeights,
    pub input_cost: InputCostParams,
    /// Geometric inflation added to every obstacle circle, m.
    pub obstacle_margin: f64,
    pub smoothing: SmoothingKernel,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            rollouts: 2560,
            horizon: 16,
            lambda: 150.0,
            sigma_omega: 0.05,
            sigma_a: 0.85,
            omega_max: 0.11,
            a_max: 1.1,
            a_min: -2.5,
            v_goal: 30.0 / KMH_PER_MPS,
            seed: 0,
            vehicle: VehicleParams::default(),
            weights: CostWeights::default(),
            input_cost: InputCostParams::default(),
            obstacle_margin: 0.0,
            smoothing: SmoothingKernel::default(),
        }
    }
}

impl PlannerConfig {
    pub fn dt(&self) -> f64 {
        self.vehicle.dt
    }

    pub fn bounds(&self) -> InputBounds {
        InputBounds {
            a_min: self.a_min,
            a_max: self.a_max,
            omega_max: self.omega_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rollouts < 1 {
            return Err(Error::invalid("M", "must be at least 1"));
        }
        if self.horizon < 1 {
            return Err(Error::invalid("T", "must be at least 1"));
        }
        let positive = [
            ("lambda", self.lambda),
            ("sigma_omega", self.sigma_omega),
            ("sigma_a", self.sigma_a),
            ("omega_max", self.omega_max),
            ("a_max", self.a_max),
            ("v_goal", self.v_goal),
        ];
        for (key, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::invalid(key, "must be positive and finite"));
            }
        }
        if !(self.a_min < 0.0 && self.a_min.is_finite()) {
            return Err(Error::invalid("a_min", "must be negative and finite"));
        }
        if !(self.obstacle_margin >= 0.0 && self.obstacle_margin.is_finite()) {
            return Err(Error::invalid("obstacle_margin", "must be non-negative"));
        }
        self.vehicle.validate()?;
        self.weights.validate()?;
        self.input_cost.validate()?;
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse {
            what: "config".into(),
            message: e.to_string(),
        })?;
        file.into_config()
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_file(&self) -> ConfigFile {
        ConfigFile {
            lambda: Some(self.lambda),
            rollouts: Some(self.rollouts),
            horizon: Some(self.horizon),
            dt: Some(self.vehicle.dt),
            sigma_omega: Some(self.sigma_omega),
            sigma_a: Some(self.sigma_a),
            omega_max: Some(self.omega_max),
            a_max: Some(self.a_max),
            a_min: Some(self.a_min),
            d_safe_c: Some(self.weights.d_safe_c),
            d_safe_0: Some(self.weights.d_safe_0),
            v_goal: Some(self.v_goal * KMH_PER_MPS),
            seed: Some(self.seed),
            w_dist: Some(self.weights.w_dist),
            w_target: Some(self.weights.w_target),
            w_yaw: Some(self.weights.w_yaw),
            w_speed: Some(self.weights.w_speed),
            w_safe: Some(self.weights.w_safe),
            w_terminal: Some(self.weights.w_terminal),
            gamma: Some(self.input_cost.gamma),
            r: Some(self.input_cost.r),
            wheelbase: Some(self.vehicle.wheelbase),
            delta_max: Some(self.vehicle.delta_max),
            obstacle_margin: Some(self.obstacle_margin),
            sg_coeffs: Some(self.smoothing.taps().to_vec()),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_file()).expect("config serializes")
    }
}

/// On-disk form; every key is optional and falls back to the default.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub lambda: Option<f64>,
    #[serde(rename = "M")]
    pub rollouts: Option<usize>,
    #[serde(rename = "T")]
    pub horizon: Option<usize>,
    pub dt: Option<f64>,
    pub sigma_omega: Option<f64>,
    pub sigma_a: Option<f64>,
    pub omega_max: Option<f64>,
    pub a_max: Option<f64>,
    pub a_min: Option<f64>,
    pub d_safe_c: Option<f64>,
    pub d_safe_0: Option<f64>,
    /// km/h
    pub v_goal: Option<f64>,
    pub seed: Option<u64>,
    pub w_dist: Option<f64>,
    pub w_target: Option<f64>,
    pub w_yaw: Option<f64>,
    pub w_speed: Option<f64>,
    pub w_safe: Option<f64>,
    pub w_terminal: Option<f64>,
    pub gamma: Option<f64>,
    #[serde(rename = "R")]
    pub r: Option<[[f64; 2]; 2]>,
    pub wheelbase: Option<f64>,
    pub delta_max: Option<f64>,
    pub obstacle_margin: Option<f64>,
    pub sg_coeffs: Option<Vec<f64>>,
}

impl ConfigFile {
    pub fn into_config(self) -> Result<PlannerConfig> {
        let d = PlannerConfig::default();
        let smoothing = match self.sg_coeffs {
            Some(taps) => SmoothingKernel::new(taps)?,
            None => d.smoothing.clone(),
        };
        let cfg = PlannerConfig {
            rollouts: self.rollouts.unwrap_or(d.rollouts),
            horizon: self.horizon.unwrap_or(d.horizon),
            lambda: self.lambda.unwrap_or(d.lambda),
            sigma_omega: self.sigma_omega.unwrap_or(d.sigma_omega),
            sigma_a: self.sigma_a.unwrap_or(d.sigma_a),
            omega_max: self.omega_max.unwrap_or(d.omega_max),
            a_max: self.a_max.unwrap_or(d.a_max),
            a_min: self.a_min.unwrap_or(d.a_min),
            v_goal: self.v_goal.map(|k| k / KMH_PER_MPS).unwrap_or(d.v_goal),
            seed: self.seed.unwrap_or(d.seed),
            vehicle: VehicleParams {
                wheelbase: self.wheelbase.unwrap_or(d.vehicle.wheelbase),
                delta_max: self.delta_max.unwrap_or(d.vehicle.delta_max),
                dt: self.dt.unwrap_or(d.vehicle.dt),
            },
            weights: CostWeights {
                w_dist: self.w_dist.unwrap_or(d.weights.w_dist),
                w_target: self.w_target.unwrap_or(d.weights.w_target),
                w_yaw: self.w_yaw.unwrap_or(d.weights.w_yaw),
                w_speed: self.w_speed.unwrap_or(d.weights.w_speed),
                w_safe: self.w_safe.unwrap_or(d.weights.w_safe),
                w_terminal: self.w_terminal.unwrap_or(d.weights.w_terminal),
                d_safe_c: self.d_safe_c.unwrap_or(d.weights.d_safe_c),
                d_safe_0: self.d_safe_0.unwrap_or(d.weights.d_safe_0),
                avoidance_gate: false,
            },
            input_cost: InputCostParams {
                r: self.r.unwrap_or(d.input_cost.r),
                gamma: self.gamma.unwrap_or(d.input_cost.gamma),
            },
            obstacle_margin: self.obstacle_margin.unwrap_or(d.obstacle_margin),
            smoothing,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
