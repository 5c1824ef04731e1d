//! Sweep specification files.

use serde::{Deserialize, Serialize};
use shared_effort::IsfpConfig;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("{axis}: steps must be at least 1")]
    Steps { axis: &'static str },
    #[error("{axis}: need finite lo <= hi, got lo = {lo}, hi = {hi}")]
    Range {
        axis: &'static str,
        lo: f64,
        hi: f64,
    },
    #[error("{field}: {value} is outside {allowed}")]
    Value {
        field: String,
        value: f64,
        allowed: &'static str,
    },
    #[error("isfp: {0}")]
    Isfp(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    /// Second-largest over largest project coefficient.
    AlphaRatio,
    /// Second-largest over largest budget.
    BudgetRatio,
    Theta,
    Players,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: Param,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Axis {
    pub fn value(&self, index: usize) -> f64 {
        if self.steps <= 1 {
            self.lo
        } else {
            let f = index as f64 / (self.steps - 1) as f64;
            // hits both endpoints exactly
            self.lo * (1.0 - f) + self.hi * f
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.value(i)).collect()
    }
}

/// Parameters of a single cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fixed {
    pub theta: f64,
    pub n: usize,
    pub m: usize,
    pub alpha_ratio: f64,
    pub budget_ratio: f64,
    /// Lowest coefficient when more than two projects are spread out.
    pub alpha_floor: f64,
    /// Lowest budget when more than two budgets are spread out.
    pub budget_floor: f64,
}

impl Default for Fixed {
    fn default() -> Self {
        Fixed {
            theta: 0.5,
            n: 2,
            m: 2,
            alpha_ratio: 0.5,
            budget_ratio: 0.5,
            alpha_floor: 0.1,
            budget_floor: 0.1,
        }
    }
}

impl Fixed {
    pub fn with(mut self, param: Param, v: f64) -> Self {
        match param {
            Param::AlphaRatio => self.alpha_ratio = v,
            Param::BudgetRatio => self.budget_ratio = v,
            Param::Theta => self.theta = v,
            Param::Players => self.n = v.round() as usize,
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IsfpSettings {
    pub restarts: usize,
    pub max_iterations: usize,
    pub alpha_weights: Vec<f64>,
}

impl Default for IsfpSettings {
    fn default() -> Self {
        let c = IsfpConfig::default();
        IsfpSettings {
            restarts: c.restarts,
            max_iterations: c.max_iterations,
            alpha_weights: c.alpha_weights,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis1: Axis,
    pub axis2: Axis,
    #[serde(default)]
    pub fixed: Fixed,
    #[serde(default)]
    pub isfp: IsfpSettings,
    #[serde(default = "default_grid_resolution")]
    pub grid_resolution: u64,
    #[serde(default)]
    pub seed: u64,
}

fn default_grid_resolution() -> u64 {
    100
}

fn check(field: &str, value: f64, ok: bool, allowed: &'static str) -> Result<(), SpecError> {
    if ok {
        Ok(())
    } else {
        Err(SpecError::Value {
            field: field.to_string(),
            value,
            allowed,
        })
    }
}

/// Checks a single cell's parameters.
pub fn check_params(p: &Fixed) -> Result<(), SpecError> {
    check("theta", p.theta, (0.0..=1.0).contains(&p.theta), "[0, 1]")?;
    check("n", p.n as f64, p.n >= 1, "n >= 1")?;
    check("m", p.m as f64, p.m >= 1, "m >= 1")?;
    let unit = |v: f64| v > 0.0 && v <= 1.0;
    check("alpha_ratio", p.alpha_ratio, unit(p.alpha_ratio), "(0, 1]")?;
    check("budget_ratio", p.budget_ratio, unit(p.budget_ratio), "(0, 1]")?;
    check("alpha_floor", p.alpha_floor, unit(p.alpha_floor), "(0, 1]")?;
    check("budget_floor", p.budget_floor, unit(p.budget_floor), "(0, 1]")?;
    Ok(())
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        for (name, axis) in [("axis1", &self.axis1), ("axis2", &self.axis2)] {
            if axis.steps < 1 {
                return Err(SpecError::Steps { axis: name });
            }
            if !(axis.lo.is_finite() && axis.hi.is_finite() && axis.lo <= axis.hi) {
                return Err(SpecError::Range {
                    axis: name,
                    lo: axis.lo,
                    hi: axis.hi,
                });
            }
            // both ends of the axis must give valid cells
            for v in [axis.lo, axis.hi] {
                check_params(&self.fixed.with(axis.param, v)).map_err(|e| match e {
                    SpecError::Value { field, value, allowed } => SpecError::Value {
                        field: format!("{name}.{field}"),
                        value,
                        allowed,
                    },
                    other => other,
                })?;
            }
        }
        check_params(&self.fixed)?;
        if self.grid_resolution == 0 {
            return Err(SpecError::Value {
                field: "grid_resolution".into(),
                value: 0.0,
                allowed: ">= 1",
            });
        }
        self.isfp_config(0)
            .validate()
            .map_err(|e| SpecError::Isfp(e.to_string()))
    }

    pub fn isfp_config(&self, seed: u64) -> IsfpConfig {
        IsfpConfig {
            max_iterations: self.isfp.max_iterations,
            restarts: self.isfp.restarts,
            alpha_weights: self.isfp.alpha_weights.clone(),
            seed,
            grid_resolution: self.grid_resolution,
            ..IsfpConfig::default()
        }
    }

    pub fn num_cells(&self) -> usize {
        self.axis1.steps * self.axis2.steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SweepSpec {
        serde_json::from_str(
            r#"{"axis1":{"param":"alpha_ratio","lo":0.1,"hi":1.0,"steps":4},
                "axis2":{"param":"budget_ratio","lo":0.1,"hi":1.0,"steps":3}}"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_and_values() {
        let s = spec();
        assert!(s.validate().is_ok());
        assert_eq!(s.fixed, Fixed::default());
        assert_eq!(s.isfp.restarts, 45);
        assert_eq!(s.grid_resolution, 100);
        assert_eq!(s.num_cells(), 12);
        let v = s.axis1.values();
        assert_eq!(v.len(), 4);
        assert!((v[3] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_ranges() {
        let mut s = spec();
        s.axis1.steps = 0;
        assert_eq!(s.validate(), Err(SpecError::Steps { axis: "axis1" }));
        let mut s = spec();
        s.axis2.hi = 1.5;
        assert!(matches!(s.validate(), Err(SpecError::Value { .. })));
        let mut s = spec();
        s.axis1.lo = 0.0;
        assert!(s.validate().unwrap_err().to_string().contains("axis1.alpha_ratio"));
    }

    #[test]
    fn unknown_fields_are_errors() {
        let r: Result<SweepSpec, _> = serde_json::from_str(
            r#"{"axis1":{"param":"alpha_ratio","lo":0.1,"hi":1.0,"steps":4},
                "axis2":{"param":"budget_ratio","lo":0.1,"hi":1.0,"steps":3},
                "bogus":1}"#,
        );
        assert!(r.unwrap_err().to_string().contains("bogus"));
    }
}
