//! Config-file schema: systems are zoo specs, potentials are built-in
//! families or explicit tables, the schedule mirrors the estimator fields.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::metric::MetricSpace;
use crate::nds::Nds;
use crate::potential::Potential;
use crate::pressure::Schedule;
use crate::zoo::{self, OracleValues};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ZooSpec {
    Symbolic {
        #[serde(default)]
        label: Option<String>,
        alphabet_sizes: Vec<usize>,
        word_len: usize,
        /// Optional power-system transform applied after construction.
        #[serde(default)]
        power: Option<usize>,
    },
    CircleExpanding {
        #[serde(default)]
        label: Option<String>,
        multipliers: Vec<usize>,
        grid: usize,
        horizon: usize,
        #[serde(default)]
        power: Option<usize>,
    },
    TentSequence {
        #[serde(default)]
        label: Option<String>,
        slopes: Vec<f64>,
        grid: usize,
        horizon: usize,
        #[serde(default)]
        power: Option<usize>,
    },
    CustomTable {
        #[serde(default)]
        label: Option<String>,
        /// Row-major distance tables, one per level.
        stage_tables: Vec<Vec<f64>>,
        /// Index arrays `X_k -> X_{k+1}`, one per level below the horizon.
        maps: Vec<Vec<u32>>,
    },
}

impl ZooSpec {
    /// True for grid-discretized families, which carry discretization error
    /// and therefore use the wide (relative) slack class in the harness.
    pub fn grid_like(&self) -> bool {
        matches!(self, ZooSpec::CircleExpanding { .. } | ZooSpec::TentSequence { .. })
    }

    pub fn build(&self) -> Result<(Nds, Option<OracleValues>), Error> {
        let (nds, oracle, power) = match self {
            ZooSpec::Symbolic { label, alphabet_sizes, word_len, power } => {
                let (nds, oracle) = zoo::make_symbolic(alphabet_sizes, *word_len)?;
                let nds = match label {
                    Some(l) => nds.with_label(l.clone()),
                    None => nds,
                };
                (nds, Some(oracle), *power)
            }
            ZooSpec::CircleExpanding { label, multipliers, grid, horizon, power } => {
                let (nds, oracle) = zoo::make_circle_expanding(multipliers, *grid, *horizon)?;
                let nds = match label {
                    Some(l) => nds.with_label(l.clone()),
                    None => nds,
                };
                (nds, Some(oracle), *power)
            }
            ZooSpec::TentSequence { label, slopes, grid, horizon, power } => {
                let (nds, oracle) = zoo::make_tent_sequence(slopes, *grid, *horizon)?;
                let nds = match label {
                    Some(l) => nds.with_label(l.clone()),
                    None => nds,
                };
                (nds, Some(oracle), *power)
            }
            ZooSpec::CustomTable { label, stage_tables, maps } => {
                let mut stages = Vec::with_capacity(stage_tables.len());
                for (k, table) in stage_tables.iter().enumerate() {
                    let n = (table.len() as f64).sqrt().round() as usize;
                    if n * n != table.len() {
                        return Err(Error::Config(format!(
                            "stage table {k} has {} entries, not a square",
                            table.len()
                        )));
                    }
                    stages.push(Arc::new(MetricSpace::from_table(n, table.clone())));
                }
                let maps = maps.iter().map(|m| Arc::new(m.clone())).collect();
                let nds = Nds::new(
                    label.clone().unwrap_or_else(|| "custom".into()),
                    stages,
                    maps,
                )?;
                (nds, None, None)
            }
        };
        let nds = match power {
            Some(m) => nds.power_system(m)?,
            None => nds,
        };
        Ok((nds, oracle))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// The constant sequence `a * 1`.
    Constant {
        a: f64,
        #[serde(default)]
        label: Option<String>,
    },
    /// `f_k(word) = c * first symbol` on symbolic systems.
    FirstCoordinate {
        c: f64,
        #[serde(default)]
        label: Option<String>,
    },
    /// `f_k(i) = c * i / count` on grid systems.
    GridPosition {
        c: f64,
        #[serde(default)]
        label: Option<String>,
    },
    /// Explicit per-level value tables.
    Table {
        values: Vec<Vec<f64>>,
        #[serde(default)]
        label: Option<String>,
    },
}

impl PotentialSpec {
    pub fn build(&self, nds: &Nds) -> Result<Potential, Error> {
        let f = match self {
            PotentialSpec::Constant { a, label } => {
                let f = Potential::constant(nds, *a);
                match label {
                    Some(l) => f.relabel(l.clone()),
                    None => f,
                }
            }
            PotentialSpec::FirstCoordinate { c, label } => {
                let f = zoo::first_symbol_potential(nds, *c);
                match label {
                    Some(l) => f.relabel(l.clone()),
                    None => f,
                }
            }
            PotentialSpec::GridPosition { c, label } => {
                let f = zoo::grid_position_potential(nds, *c);
                match label {
                    Some(l) => f.relabel(l.clone()),
                    None => f,
                }
            }
            PotentialSpec::Table { values, label } => Potential::new(
                label.clone().unwrap_or_else(|| "table".into()),
                values.clone(),
            )?,
        };
        f.validate_for(nds)?;
        Ok(f)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub systems: Vec<ZooSpec>,
    pub potentials: Vec<PotentialSpec>,
    pub schedule: Schedule,
    /// Theorem checks to run; see `list-checks` for the known ids.
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, Error> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config schema: {e}")))
    }

    /// Schema-level validation: non-empty systems, resolvable potentials,
    /// schedule feasible for every system horizon.
    pub fn validate(&self) -> Result<(), Error> {
        if self.systems.is_empty() {
            return Err(Error::Config("systems list is empty".into()));
        }
        if self.potentials.is_empty() {
            return Err(Error::Config("potentials list is empty".into()));
        }
        for spec in &self.systems {
            let (nds, _) = spec.build()?;
            self.schedule
                .validate(&nds)
                .map_err(|e| Error::InfeasibleSchedule(format!("{e}")))?;
            for p in &self.potentials {
                p.build(&nds)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_validate() {
        let text = r#"{
            "systems": [
                {"family": "symbolic", "alphabet_sizes": [2], "word_len": 6}
            ],
            "potentials": [
                {"kind": "constant", "a": 0.0, "label": "zero"},
                {"kind": "first_coordinate", "c": 1.0}
            ],
            "schedule": {
                "n_list": [1, 2, 3, 4, 5, 6],
                "eps_list": [0.5],
                "mode": {"kind": "exact", "exact_budget": 64}
            },
            "checks": ["inequality_chain"],
            "seed": 7
        }"#;
        let cfg = RunConfig::from_json(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.schedule.tail_window, 0.5);

        let (nds, oracle) = cfg.systems[0].build().unwrap();
        assert_eq!(nds.stage(0).point_count(), 64);
        assert!(oracle.is_some());
    }

    #[test]
    fn schema_violations_are_errors() {
        assert!(RunConfig::from_json("{}").is_err());
        let empty = r#"{
            "systems": [],
            "potentials": [{"kind": "constant", "a": 0.0}],
            "schedule": {"n_list": [1], "eps_list": [0.5], "mode": {"kind": "greedy"}}
        }"#;
        let cfg = RunConfig::from_json(empty).unwrap();
        assert!(cfg.validate().is_err());

        // Infeasible schedule: depth beyond the horizon.
        let infeasible = r#"{
            "systems": [{"family": "symbolic", "alphabet_sizes": [2], "word_len": 3}],
            "potentials": [{"kind": "constant", "a": 0.0}],
            "schedule": {"n_list": [1, 9], "eps_list": [0.5], "mode": {"kind": "greedy"}}
        }"#;
        let cfg = RunConfig::from_json(infeasible).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::InfeasibleSchedule(_))));
    }

    #[test]
    fn custom_table_system_builds() {
        let text = r#"{
            "systems": [{
                "family": "custom_table",
                "label": "pair",
                "stage_tables": [[0.0, 1.0, 1.0, 0.0], [0.0, 1.0, 1.0, 0.0]],
                "maps": [[1, 0]]
            }],
            "potentials": [{"kind": "constant", "a": 0.25}],
            "schedule": {"n_list": [1], "eps_list": [0.5], "mode": {"kind": "exact", "exact_budget": 4}}
        }"#;
        let cfg = RunConfig::from_json(text).unwrap();
        cfg.validate().unwrap();
        let (nds, oracle) = cfg.systems[0].build().unwrap();
        assert!(oracle.is_none());
        assert_eq!(nds.horizon(), 1);
    }

    #[test]
    fn power_transform_in_spec() {
        let text = r#"{
            "systems": [{"family": "symbolic", "alphabet_sizes": [2], "word_len": 8, "power": 2}],
            "potentials": [{"kind": "constant", "a": 0.0}],
            "schedule": {"n_list": [1, 2, 3, 4], "eps_list": [0.25], "mode": {"kind": "greedy"}}
        }"#;
        let cfg = RunConfig::from_json(text).unwrap();
        cfg.validate().unwrap();
        let (nds, _) = cfg.systems[0].build().unwrap();
        assert_eq!(nds.horizon(), 4);
    }
}
