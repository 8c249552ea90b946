//! Batch pipeline: build configured systems and potentials, run the six
//! pressure estimators and the requested theorem checks, and render the
//! CSV/JSON/TSV outputs. Rendering is deterministic: reruns with the same
//! config and seed produce byte-identical text.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::config::{RunConfig, ZooSpec};
use crate::error::Error;
use crate::harness::{self, CheckStatus, HarnessCfg, TheoremCheck};
use crate::measure::{self, MeasureValueRequest};
use crate::nds::Nds;
use crate::potential::Potential;
use crate::pressure::{capacity_pressure, CapacityKind, PressureEstimate, Schedule};
use crate::span_sep::SolveKind;

/// One row of `estimates.csv`. Columns are fixed:
/// `system,potential,kind,n,epsilon,s,value,certified`.
#[derive(Clone, Debug)]
pub struct EstimateRow {
    pub system: String,
    pub potential: String,
    pub kind: String,
    pub n: usize,
    pub epsilon: f64,
    pub s: Option<f64>,
    pub value: f64,
    pub certified: bool,
}

/// The six pressure proxies of one (system, potential) pair.
#[derive(Clone, Debug, Serialize)]
pub struct SummaryEntry {
    pub system: String,
    pub potential: String,
    pub q_lower: f64,
    pub q_upper: f64,
    pub p_lower: f64,
    pub p_upper: f64,
    pub p_bowen: f64,
    pub p_packing: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub system: String,
    pub potential: String,
    #[serde(flatten)]
    pub check: TheoremCheck,
}

#[derive(Clone, Debug)]
pub struct RunOutputs {
    pub rows: Vec<EstimateRow>,
    pub summaries: Vec<SummaryEntry>,
    pub checks: Vec<CheckRecord>,
}

impl RunOutputs {
    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.check.status != CheckStatus::Fail)
    }

    pub fn estimates_csv(&self) -> String {
        let mut out = String::from("system,potential,kind,n,epsilon,s,value,certified\n");
        for r in &self.rows {
            let s = r.s.map(fmt_f).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.system,
                r.potential,
                r.kind,
                r.n,
                fmt_f(r.epsilon),
                s,
                fmt_f(r.value),
                r.certified
            );
        }
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summaries).expect("summary serializes") + "\n"
    }

    pub fn checks_json(&self) -> String {
        serde_json::to_string_pretty(&self.checks).expect("checks serialize") + "\n"
    }

    /// Per-(system, potential, kind, radius) series of `n` vs `(1/n) log`
    /// value, as `name -> TSV text`.
    pub fn plot_data(&self) -> Vec<(String, String)> {
        let mut series: BTreeMap<String, Vec<(usize, f64)>> = BTreeMap::new();
        for r in &self.rows {
            if r.kind != "span" && r.kind != "sep" {
                continue;
            }
            let key = format!(
                "{}__{}__{}__eps{}",
                sanitize(&r.system),
                sanitize(&r.potential),
                r.kind,
                fmt_f(r.epsilon)
            );
            series.entry(key).or_default().push((r.n, r.value));
        }
        series
            .into_iter()
            .map(|(name, mut pts)| {
                pts.sort_by_key(|p| p.0);
                let mut text = String::from("n\tvalue\n");
                for (n, v) in pts {
                    let _ = writeln!(text, "{n}\t{}", fmt_f(v));
                }
                (format!("{name}.tsv"), text)
            })
            .collect()
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// The theorem-check ids `run` understands (the `power_rule` entry accepts an
/// optional `:m` suffix).
pub const KNOWN_CHECKS: &[(&str, &str)] = &[
    ("inequality_chain", "three pressure chains per system and potential"),
    ("subset_properties", "monotonicity, closure identity, union rules"),
    ("potential_properties", "per-cell potential identities"),
    ("power_rule:m", "power-rule direction and equality (default m = 2)"),
    ("product_rules", "product directions and estimate chains (first two systems)"),
    ("invariance", "relabeling and bounded-metric bit-exact invariance"),
    ("homogeneous_collapse", "packing equals upper pressure on homogeneous sets"),
];

pub fn run_config(cfg: &RunConfig) -> Result<RunOutputs, Error> {
    cfg.validate()?;
    let mut rows: Vec<EstimateRow> = Vec::new();
    let mut summaries = Vec::new();
    let mut checks: Vec<CheckRecord> = Vec::new();

    struct Built {
        nds: Nds,
        potentials: Vec<Potential>,
        grid_like: bool,
    }
    let mut built: Vec<Built> = Vec::new();
    for spec in &cfg.systems {
        let (nds, _) = spec.build()?;
        let potentials: Vec<Potential> = cfg
            .potentials
            .iter()
            .map(|p| p.build(&nds))
            .collect::<Result<_, _>>()?;
        built.push(Built { nds, potentials, grid_like: spec.grid_like() });
    }

    for b in &built {
        let z: Vec<usize> = (0..b.nds.stage(0).point_count()).collect();
        for f in &b.potentials {
            let bundle = estimate_bundle(&b.nds, f, &z, &cfg.schedule)?;
            rows.extend(bundle.rows);
            summaries.push(bundle.summary);
        }
    }

    // Theorem checks, aggregated deterministically by check id then system.
    let mut requested: Vec<String> = cfg.checks.clone();
    requested.sort();
    for entry in &requested {
        let (id, arg) = match entry.split_once(':') {
            Some((id, arg)) => (id, Some(arg)),
            None => (entry.as_str(), None),
        };
        match id {
            "product_rules" => {
                let (a, b) = (&built[0], built.get(1).unwrap_or(&built[0]));
                let cfg_h = harness_cfg(a.grid_like || b.grid_like, cfg.seed);
                let fa = &a.potentials[0];
                let fb = b.potentials.get(1).unwrap_or(&b.potentials[0]);
                let check =
                    harness::check_product_rules(&a.nds, fa, &b.nds, fb, &cfg.schedule, cfg_h)?;
                checks.push(CheckRecord {
                    system: format!("{}x{}", a.nds.label(), b.nds.label()),
                    potential: format!("{}(+){}", fa.label(), fb.label()),
                    check,
                });
            }
            _ => {
                for b in &built {
                    let cfg_h = harness_cfg(b.grid_like, cfg.seed);
                    let z: Vec<usize> = (0..b.nds.stage(0).point_count()).collect();
                    for f in &b.potentials {
                        let check = match id {
                            "inequality_chain" => {
                                harness::check_inequality_chain(&b.nds, f, &z, &cfg.schedule, cfg_h)?
                            }
                            "subset_properties" => {
                                harness::check_subset_properties(&b.nds, f, &cfg.schedule, cfg_h)?
                            }
                            "potential_properties" => harness::check_potential_properties(
                                &b.nds,
                                f,
                                &cfg.schedule,
                                cfg_h,
                            )?,
                            "power_rule" => {
                                let m: usize = arg
                                    .map(|a| {
                                        a.parse().map_err(|_| {
                                            Error::Config(format!("bad power exponent '{a}'"))
                                        })
                                    })
                                    .transpose()?
                                    .unwrap_or(2);
                                harness::check_power_rule(&b.nds, f, m, &cfg.schedule, cfg_h)?
                            }
                            "invariance" => {
                                harness::check_invariance(&b.nds, f, &cfg.schedule, cfg_h)?
                            }
                            "homogeneous_collapse" => harness::check_homogeneous_collapse(
                                &b.nds,
                                f,
                                &cfg.schedule,
                                cfg_h,
                            )?,
                            other => {
                                return Err(Error::Config(format!("unknown check '{other}'")))
                            }
                        };
                        checks.push(CheckRecord {
                            system: b.nds.label().to_string(),
                            potential: f.label().to_string(),
                            check,
                        });
                    }
                }
            }
        }
    }

    Ok(RunOutputs { rows, summaries, checks })
}

fn harness_cfg(grid_like: bool, seed: u64) -> HarnessCfg {
    let mut cfg = if grid_like { HarnessCfg::grid() } else { HarnessCfg::symbolic() };
    cfg.seed = seed;
    cfg
}

struct EstimateBundle {
    rows: Vec<EstimateRow>,
    summary: SummaryEntry,
}

fn estimate_bundle(
    nds: &Nds,
    f: &Potential,
    z: &[usize],
    schedule: &Schedule,
) -> Result<EstimateBundle, Error> {
    let mut rows = Vec::new();
    let span = capacity_pressure(nds, f, z, CapacityKind::SpanLower, schedule)?;
    let sep = capacity_pressure(nds, f, z, CapacityKind::SepLower, schedule)?;
    let pb = measure::bowen_pressure(nds, f, z, schedule)?;
    let pp = measure::packing_pressure(nds, f, z, schedule)?;

    let push_cells = |rows: &mut Vec<EstimateRow>, kind: &str, est: &PressureEstimate| {
        for c in &est.per_cell {
            rows.push(EstimateRow {
                system: nds.label().to_string(),
                potential: f.label().to_string(),
                kind: kind.to_string(),
                n: c.n,
                epsilon: c.eps,
                s: None,
                value: c.value,
                certified: c.certified,
            });
        }
    };
    push_cells(&mut rows, "span", &span);
    push_cells(&mut rows, "sep", &sep);
    push_cells(&mut rows, "bowen", &pb);
    push_cells(&mut rows, "packing", &pp);
    // Jump rows carry their own s* in the s column.
    for r in rows.iter_mut() {
        if r.kind == "bowen" || r.kind == "packing" {
            r.s = Some(r.value);
        }
    }

    // Sampled measure values around the jump at the smallest radius, for the
    // per-(eps, s) CSV contract.
    let eps = schedule.eps_min();
    if pb.value.is_finite() {
        let min_depth = schedule.tail()[0];
        for ds in [-0.2, -0.1, 0.0, 0.1, 0.2] {
            let s = pb.value + ds;
            let req = MeasureValueRequest {
                s,
                min_depth,
                epsilon: eps,
                z: z.to_vec(),
                mode: schedule.mode,
                max_depth: schedule.n_max(),
            };
            let value = measure::bowen_measure_value(nds, f, &req)?;
            rows.push(EstimateRow {
                system: nds.label().to_string(),
                potential: f.label().to_string(),
                kind: "bowen_measure".to_string(),
                n: schedule.n_max(),
                epsilon: eps,
                s: Some(s),
                value,
                certified: schedule.mode.kind == SolveKind::Exact,
            });
        }
    }
    if pp.value.is_finite() {
        let pool = measure::partition_pool(nds, z, &schedule.eps_list);
        for ds in [-0.2, -0.1, 0.0, 0.1, 0.2] {
            let s = pp.value + ds;
            let value = measure::modified_packing_value(
                nds,
                f,
                s,
                eps,
                z,
                &pool,
                schedule.n_max(),
                schedule.mode,
            )?;
            rows.push(EstimateRow {
                system: nds.label().to_string(),
                potential: f.label().to_string(),
                kind: "packing_measure".to_string(),
                n: schedule.n_max(),
                epsilon: eps,
                s: Some(s),
                value,
                certified: schedule.mode.kind == SolveKind::Exact,
            });
        }
    }

    let mut diagnostics = BTreeMap::new();
    for (k, v) in &span.diagnostics {
        diagnostics.insert(format!("span_{k}"), *v);
    }
    for (k, v) in &sep.diagnostics {
        diagnostics.insert(format!("sep_{k}"), *v);
    }
    for (k, v) in &pp.diagnostics {
        diagnostics.insert(format!("packing_{k}"), *v);
    }
    diagnostics.insert("span_eps_monotone".to_string(), f64::from(u8::from(span.epsilon_monotone_ok)));
    diagnostics.insert("sep_eps_monotone".to_string(), f64::from(u8::from(sep.epsilon_monotone_ok)));

    let summary = SummaryEntry {
        system: nds.label().to_string(),
        potential: f.label().to_string(),
        q_lower: span.value_lower_proxy,
        q_upper: span.value_upper_proxy,
        p_lower: sep.value_lower_proxy,
        p_upper: sep.value_upper_proxy,
        p_bowen: pb.value,
        p_packing: pp.value,
        diagnostics,
    };
    Ok(EstimateBundle { rows, summary })
}

/// Reruns `run_config` with one field varied; the returned rows carry the
/// sweep value in a `#param=value` suffix on the system label so the CSV
/// columns stay fixed.
pub fn sweep_config(
    cfg: &RunConfig,
    parameter: &str,
    values: &[f64],
) -> Result<Vec<(f64, RunOutputs)>, Error> {
    let mut out = Vec::new();
    for &v in values {
        let mut varied = cfg.clone();
        match parameter {
            "epsilon" => {
                varied.schedule.eps_list = vec![v];
            }
            "power" => {
                let m = v as usize;
                if m == 0 || (v - m as f64).abs() > 0.0 {
                    return Err(Error::Config(format!("power sweep needs positive integers, got {v}")));
                }
                for spec in varied.systems.iter_mut() {
                    match spec {
                        ZooSpec::Symbolic { power, .. }
                        | ZooSpec::CircleExpanding { power, .. }
                        | ZooSpec::TentSequence { power, .. } => *power = Some(m),
                        ZooSpec::CustomTable { .. } => {
                            return Err(Error::Config(
                                "power sweep does not apply to custom_table systems".into(),
                            ))
                        }
                    }
                }
                // Depths must stay within the contracted horizon.
                varied.schedule.n_list.retain(|&n| {
                    varied.systems.iter().all(|s| {
                        s.build().map(|(nds, _)| n <= nds.horizon()).unwrap_or(false)
                    })
                });
                if varied.schedule.n_list.is_empty() {
                    return Err(Error::InfeasibleSchedule(format!(
                        "no scheduled depth survives the power-{m} horizon"
                    )));
                }
            }
            "seed" => {
                varied.seed = v as u64;
            }
            other => {
                return Err(Error::Config(format!("unknown sweep parameter '{other}'")));
            }
        }
        let mut outputs = run_config(&varied)?;
        for row in outputs.rows.iter_mut() {
            row.system = format!("{}#{}={}", row.system, parameter, fmt_f(v));
        }
        for s in outputs.summaries.iter_mut() {
            s.system = format!("{}#{}={}", s.system, parameter, fmt_f(v));
        }
        out.push((v, outputs));
    }
    Ok(out)
}

/// Concatenates sweep outputs into one CSV with the fixed column set.
pub fn sweep_csv(results: &[(f64, RunOutputs)]) -> String {
    let mut out = String::from("system,potential,kind,n,epsilon,s,value,certified\n");
    for (_, r) in results {
        let body = r.estimates_csv();
        out.push_str(body.split_once('\n').map(|(_, b)| b).unwrap_or(""));
    }
    out
}
