//! Run configuration, read from a single JSON file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{Group, GroupSpec};
use crate::measure::{MeasureSpec, StepMeasure};

/// Version of the output documents.
pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub group: GroupSpec,
    /// Step measure; uniform on the generators when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    /// One-parameter family `μ_θ = μ + θ·direction`, used by `sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    /// Atlas precision `N`.
    #[serde(default = "default_precision")]
    pub precision: usize,
    /// Anchor size; defaults to `max(4·max|g|, 4)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<usize>,
    /// Radius of the stored kernel domain; defaults to twice the anchor size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_radius: Option<usize>,
    #[serde(default)]
    pub kernel: KernelChoice,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub walk: WalkSettings,
    #[serde(default)]
    pub seed: u64,
    /// Atlas point from which the minimal component is grown.
    #[serde(default)]
    pub boundary_seed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    /// Signed weights summing to zero.
    pub direction: MeasureSpec,
    pub grid: Grid,
}

/// `points` equally spaced values from `start` to `stop`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let h = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.start + h * i as f64).collect()
    }
}

/// Kernel used in the entropy formula.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    /// Fixed point when the anchor fits the atlas, ratio limits otherwise.
    #[default]
    Auto,
    FixedPoint,
    Ratio,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub eps_green: f64,
    pub eps_fp: f64,
    pub eps_ratio: f64,
    pub t0: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eps_green: 1e-13,
            eps_fp: 1e-10,
            eps_ratio: 1e-10,
            t0: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkSettings {
    pub steps: usize,
    pub samples: usize,
    /// Adds a Monte Carlo drift check to every sweep row.
    pub cross_check: bool,
}

impl Default for WalkSettings {
    fn default() -> Self {
        WalkSettings {
            steps: 10_000,
            samples: 1_000,
            cross_check: false,
        }
    }
}

fn default_precision() -> usize {
    4
}

impl RunConfig {
    /// Minimal config for a group with the uniform measure on its generators.
    pub fn for_group(group: GroupSpec) -> Self {
        RunConfig {
            group,
            measure: None,
            family: None,
            precision: default_precision(),
            anchor: None,
            domain_radius: None,
            kernel: KernelChoice::Auto,
            tolerances: Tolerances::default(),
            walk: WalkSettings::default(),
            seed: 0,
            boundary_seed: 0,
        }
    }

    /// Parses JSON, reporting the path of the offending field on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Malformed(format!("at `{path}`: {}", e.into_inner()))
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn group(&self) -> Result<Group> {
        Group::new(self.group.clone())
    }

    /// The base measure (`θ = 0` of the family).
    pub fn base_measure(&self, group: &Group) -> Result<StepMeasure> {
        match &self.measure {
            Some(spec) => StepMeasure::from_spec(group, spec),
            None => Ok(StepMeasure::uniform_on_generators(group)),
        }
    }

    /// `μ_θ`, checked to be an admissible probability measure.
    pub fn measure_at(&self, group: &Group, theta: f64) -> Result<StepMeasure> {
        let base = self.base_measure(group)?;
        let mu = match (&self.family, theta) {
            (_, t) if t == 0.0 => base,
            (Some(fam), t) => {
                let dir = StepMeasure::from_spec(group, &fam.direction)?;
                let mut support = base.support().to_vec();
                let mut weights = base.weights().to_vec();
                support.extend(dir.support().iter().cloned());
                weights.extend(dir.weights().iter().map(|w| t * w));
                StepMeasure::new(support, weights)?
            }
            (None, _) => return Err(Error::Malformed("a nonzero θ needs a `family`".into())),
        };
        mu.require_admissible(group).map_err(|e| match e {
            Error::InvalidMeasure(m) if theta != 0.0 => Error::InvalidMeasure(format!("at θ = {theta}: {m}")),
            other => other,
        })?;
        Ok(mu)
    }

    /// Checks the family and every grid point before anything runs.
    pub fn validate(&self) -> Result<()> {
        let group = self.group()?;
        self.measure_at(&group, 0.0)?;
        if let Some(fam) = &self.family {
            let total: f64 = fam.direction.weights.iter().sum();
            if total.abs() > 1e-12 {
                return Err(Error::Malformed(format!(
                    "family.direction weights sum to {total}, not 0"
                )));
            }
            if fam.grid.points == 0 {
                return Err(Error::Malformed("family.grid.points must be positive".into()));
            }
            for t in fam.grid.values() {
                self.measure_at(&group, t)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_defaults_and_reports_paths() {
        let cfg = RunConfig::from_json(
            r#"{"group": {"family": {"free_group": {"rank": 2}}, "generators": ["a","a^-1","b","b^-1"]}}"#,
        )
        .unwrap();
        assert_eq!(cfg.precision, 4);
        assert_eq!(cfg.kernel, KernelChoice::Auto);
        cfg.validate().unwrap();
        let bad = RunConfig::from_json(
            r#"{"group": {"family": {"free_group": {"rank": 2}}, "generators": ["a"]}, "tolerances": {"eps_fp": "x"}}"#,
        )
        .unwrap_err();
        assert!(bad.to_string().contains("tolerances.eps_fp"), "{bad}");
    }

    #[test]
    fn negative_weight_is_a_config_error() {
        let mut cfg = RunConfig::for_group(GroupSpec::free_group(2));
        cfg.measure = Some(MeasureSpec {
            support: vec!["a".into(), "a^-1".into(), "b".into(), "b^-1".into()],
            weights: vec![0.6, -0.1, 0.25, 0.25],
        });
        let err = cfg.validate().unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn family_grid_is_checked() {
        let mut cfg = RunConfig::for_group(GroupSpec::free_group(2));
        cfg.family = Some(FamilySpec {
            direction: MeasureSpec {
                support: vec!["a".into(), "a^-1".into(), "b".into(), "b^-1".into()],
                weights: vec![0.5, 0.5, -0.5, -0.5],
            },
            grid: Grid {
                start: 0.0,
                stop: 1.0,
                points: 3,
            },
        });
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("θ = 0.5") || err.to_string().contains("θ = 1"), "{err}");
        assert_eq!(Grid { start: 0.0, stop: 0.5, points: 11 }.values().len(), 11);
    }
}
