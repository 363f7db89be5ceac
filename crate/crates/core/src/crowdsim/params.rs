use serde::{Deserialize, Serialize};

use super::SimError;

/// Physical and numerical constants of the simulator.
///
/// Defaults follow the escape-panic parameterization of the social-force
/// model (80 kg pedestrians, τ = 0.5 s, A = 2000 N, B = 0.08 m,
/// k = 1.2e5 kg/s², κ = 2.4e5 kg/(m·s), radii 0.25–0.35 m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    /// kg
    pub mass: f64,
    /// s
    pub relaxation_time: f64,
    /// A, N
    pub repulsion_strength: f64,
    /// B, m
    pub repulsion_range: f64,
    /// k, kg/s²
    pub body_stiffness: f64,
    /// κ, kg/(m·s)
    pub sliding_friction: f64,
    /// v0, m/s
    pub base_desired_speed: f64,
    /// vmax, m/s
    pub panic_desired_speed: f64,
    /// Value placed on ritual completion relative to survival. Mapped to the
    /// urgency fraction `r / (1 + r)`.
    pub urgency_ratio: f64,
    /// N/m of body circumference.
    pub crush_pressure_threshold: f64,
    /// s, cumulative.
    pub crush_duration: f64,
    /// Output and bookkeeping step, s.
    pub dt: f64,
    /// Longest internal integration step, s. Each `dt` is split into equal
    /// substeps no longer than this, keeping the stiff contact terms stable.
    pub max_substep: f64,
    pub seed: u64,
    pub radius_min: f64,
    pub radius_max: f64,
    /// Centre distance beyond which agents and walls do not interact, m.
    pub interaction_cutoff: f64,
    /// Side of a density-monitoring cell, m.
    pub density_cell: f64,
    /// Evaluate forces on the rayon pool. Results are identical either way.
    pub parallel: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            mass: 80.0,
            relaxation_time: 0.5,
            repulsion_strength: 2000.0,
            repulsion_range: 0.08,
            body_stiffness: 1.2e5,
            sliding_friction: 2.4e5,
            base_desired_speed: 1.0,
            panic_desired_speed: 5.0,
            urgency_ratio: 3.2,
            crush_pressure_threshold: 1600.0,
            crush_duration: 1.0,
            dt: 0.05,
            max_substep: 0.005,
            seed: 42,
            radius_min: 0.25,
            radius_max: 0.35,
            interaction_cutoff: 1.5,
            density_cell: 1.0,
            parallel: true,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("mass", self.mass),
            ("relaxation_time", self.relaxation_time),
            ("repulsion_strength", self.repulsion_strength),
            ("repulsion_range", self.repulsion_range),
            ("body_stiffness", self.body_stiffness),
            ("sliding_friction", self.sliding_friction),
            ("base_desired_speed", self.base_desired_speed),
            ("panic_desired_speed", self.panic_desired_speed),
            ("crush_pressure_threshold", self.crush_pressure_threshold),
            ("crush_duration", self.crush_duration),
            ("dt", self.dt),
            ("max_substep", self.max_substep),
            ("interaction_cutoff", self.interaction_cutoff),
            ("density_cell", self.density_cell),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SimError::InvalidParams(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.dt > 0.1 {
            return Err(SimError::InvalidParams(format!(
                "dt must be in (0, 0.1], got {}",
                self.dt
            )));
        }
        if self.panic_desired_speed < self.base_desired_speed {
            return Err(SimError::InvalidParams(
                "panic_desired_speed must be at least base_desired_speed".into(),
            ));
        }
        if !(self.urgency_ratio >= 0.0) || !self.urgency_ratio.is_finite() {
            return Err(SimError::InvalidParams(
                "urgency_ratio must be non-negative".into(),
            ));
        }
        if !(0.2 <= self.radius_min && self.radius_min <= self.radius_max && self.radius_max <= 0.4)
        {
            return Err(SimError::InvalidParams(
                "radii must satisfy 0.2 <= radius_min <= radius_max <= 0.4".into(),
            ));
        }
        if self.interaction_cutoff < 2.0 * self.radius_max {
            return Err(SimError::InvalidParams(
                "interaction_cutoff must cover body contact (>= 2 * radius_max)".into(),
            ));
        }
        Ok(())
    }

    /// Fraction of the way from v0 to vmax that urgency pushes the desired
    /// speed.
    pub fn urgency_fraction(&self) -> f64 {
        self.urgency_ratio / (1.0 + self.urgency_ratio)
    }

    /// Desired speed without any ritual multiplier.
    pub fn baseline_desired_speed(&self) -> f64 {
        let v0 = self.base_desired_speed;
        v0 * (1.0 + self.urgency_fraction() * (self.panic_desired_speed / v0 - 1.0))
    }

    pub fn desired_speed(&self, multiplier: f64) -> f64 {
        multiplier * self.baseline_desired_speed()
    }

    /// Number of equal substeps that make up one `dt`.
    pub fn substeps(&self) -> u32 {
        ((self.dt / self.max_substep) - 1e-9).ceil().max(1.0) as u32
    }

    /// Hard cap on agent speed.
    pub fn speed_limit(&self) -> f64 {
        self.panic_desired_speed + 1.0
    }

    /// Applies `key=value` overrides by field name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SimError> {
        let mut obj = serde_json::to_value(&*self).expect("params serialize");
        let map = obj.as_object_mut().expect("params are an object");
        let Some(slot) = map.get_mut(key) else {
            return Err(SimError::InvalidParams(format!(
                "unknown parameter '{key}'"
            )));
        };
        *slot = match slot {
            serde_json::Value::Bool(_) => value
                .parse::<bool>()
                .map(serde_json::Value::from)
                .map_err(|_| SimError::InvalidParams(format!("{key}: expected true/false")))?,
            serde_json::Value::Number(n) if n.is_u64() => value
                .parse::<u64>()
                .map(serde_json::Value::from)
                .map_err(|_| SimError::InvalidParams(format!("{key}: expected an integer")))?,
            _ => value
                .parse::<f64>()
                .ok()
                .and_then(|v| serde_json::Number::from_f64(v).map(serde_json::Value::Number))
                .ok_or_else(|| SimError::InvalidParams(format!("{key}: expected a number")))?,
        };
        *self = serde_json::from_value(obj).map_err(|e| SimError::InvalidParams(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RitualWindow {
    /// s
    pub start: f64,
    /// s, exclusive
    pub end: f64,
    pub speed_multiplier: f64,
}

/// Time windows during which desired speeds surge.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RitualSchedule {
    windows: Vec<RitualWindow>,
}

impl RitualSchedule {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(windows: Vec<RitualWindow>) -> Result<Self, SimError> {
        for (i, w) in windows.iter().enumerate() {
            if !(w.start < w.end) || !w.start.is_finite() {
                return Err(SimError::InvalidSchedule(format!(
                    "window {i} has start >= end"
                )));
            }
            if !(1.0..=2.0).contains(&w.speed_multiplier) {
                return Err(SimError::InvalidSchedule(format!(
                    "window {i} multiplier {} outside [1, 2]",
                    w.speed_multiplier
                )));
            }
            if i > 0 && w.start < windows[i - 1].end {
                return Err(SimError::InvalidSchedule(format!(
                    "window {i} overlaps or precedes window {}",
                    i - 1
                )));
            }
        }
        Ok(Self { windows })
    }

    /// One window covering `[0, end)`.
    pub fn constant(multiplier: f64, end: f64) -> Result<Self, SimError> {
        Self::new(vec![RitualWindow {
            start: 0.0,
            end,
            speed_multiplier: multiplier,
        }])
    }

    pub fn windows(&self) -> &[RitualWindow] {
        &self.windows
    }

    pub fn multiplier(&self, t: f64) -> f64 {
        self.windows
            .iter()
            .find(|w| w.start <= t && t < w.end)
            .map_or(1.0, |w| w.speed_multiplier)
    }
}
