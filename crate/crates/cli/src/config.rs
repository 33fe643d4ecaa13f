use std::path::{Path, PathBuf};
use std::time::Duration;

use canalplan_core::fleet::{HorizonRule, PlanOptions};
use canalplan_core::partition::PartitionSpec;
use canalplan_core::solver::SolveConfig;
use canalplan_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// A run configuration file. Relative paths resolve against the file's
/// directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct RunConfig {
    pub canal: PathBuf,
    pub road: PathBuf,
    #[serde(rename = "K")]
    pub uavs: usize,
    #[serde(rename = "K_car")]
    pub cars: usize,
    /// Battery, in edges per charge.
    #[serde(rename = "M")]
    pub battery: usize,
    /// Target canal edge length in metres.
    #[serde(rename = "w_c")]
    pub edge_length: f64,
    /// Car-UAV link range in metres.
    #[serde(rename = "R_max")]
    pub comm_range: f64,
    /// Road node id the cars start from and return to.
    pub office: String,
    #[serde(default = "one")]
    pub car_hops_per_step: usize,
    #[serde(default = "ten")]
    pub unit_step_minutes: f64,
    #[serde(default = "ten")]
    pub transfer_minutes: f64,
    /// Per solver call, in seconds.
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Extra metres kept around the link range when trimming the road.
    #[serde(default)]
    pub road_margin: f64,
    /// Smallest subgraph in edges; `K` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_lower_bound: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_subgraphs: Option<usize>,
    /// Start the horizon search at `ceil(N / (K·M))` instead of `ceil(N / K)`.
    #[serde(default)]
    pub literal_horizon: bool,
}

fn one() -> usize {
    1
}

fn ten() -> f64 {
    10.0
}

fn default_time_limit() -> f64 {
    600.0
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = crate::output::read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.canal, &mut cfg.road, &mut cfg.output] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("K", self.uavs),
            ("K_car", self.cars),
            ("M", self.battery),
            ("carHopsPerStep", self.car_hops_per_step),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Usage(format!("{name} must be at least 1")));
        }
        let positive = [
            ("w_c", self.edge_length),
            ("R_max", self.comm_range),
            ("unitStepMinutes", self.unit_step_minutes),
            ("transferMinutes", self.transfer_minutes),
            ("timeLimit", self.time_limit),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Usage(format!("{name} must be positive (got {v})")));
        }
        if !(self.road_margin.is_finite() && self.road_margin >= 0.0) {
            return Err(Error::Usage(format!("roadMargin must be non-negative (got {})", self.road_margin)));
        }
        Ok(())
    }

    pub fn solver(&self) -> SolveConfig {
        SolveConfig {
            time_limit: Duration::from_secs_f64(self.time_limit),
            ..SolveConfig::default()
        }
    }

    pub fn partition_spec(&self) -> PartitionSpec {
        let mut spec = PartitionSpec::new(self.uavs, self.battery);
        if let Some(lb) = self.size_lower_bound {
            spec.size_lower_bound = lb;
        }
        spec.max_subgraphs = self.max_subgraphs;
        spec
    }

    pub fn plan_options(&self) -> PlanOptions {
        PlanOptions {
            max_t: None,
            horizon_rule: if self.literal_horizon {
                HorizonRule::Literal
            } else {
                HorizonRule::PerStep
            },
            solver: self.solver(),
        }
    }

    /// `unitStepMinutes·ΣT + transferMinutes·(S − 1 + 2)`: every subgraph's
    /// flying time plus the legs between subgraphs and to and from the office.
    pub fn inspection_minutes(&self, horizons: &[usize]) -> f64 {
        let steps: usize = horizons.iter().sum();
        let legs = horizons.len() + 1;
        self.unit_step_minutes * steps as f64 + self.transfer_minutes * legs as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunConfig {
        serde_json::from_str(
            r#"{"canal": "c.json", "road": "r.json", "K": 4, "K_car": 2, "M": 3,
                "w_c": 100, "R_max": 400, "office": "office"}"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults() {
        let cfg = sample();
        assert_eq!(cfg.car_hops_per_step, 1);
        assert_eq!((cfg.unit_step_minutes, cfg.transfer_minutes), (10.0, 10.0));
        assert_eq!(cfg.output, PathBuf::from("out"));
        assert_eq!(cfg.partition_spec().size_lower_bound, 4);
        cfg.validate().unwrap();
    }

    #[test]
    fn time_model() {
        let cfg = sample();
        assert_eq!(cfg.inspection_minutes(&[3; 8]), 10.0 * 24.0 + 10.0 * 9.0);
        assert_eq!(cfg.inspection_minutes(&[1]), 30.0);
    }

    #[test]
    fn rejects_zero_counts() {
        let mut cfg = sample();
        cfg.cars = 0;
        assert!(matches!(cfg.validate(), Err(Error::Usage(m)) if m.contains("K_car")));
    }

    #[test]
    fn unknown_field() {
        let err = serde_json::from_str::<RunConfig>(r#"{"canal": "c", "bogus": 1}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }
}
