//! Monte Carlo sweeps with paired seeding across modes.

use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{bail, Context};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rsma_core::{evaluate_allocation, optimize, ChannelSet, Modes, NetworkConfig, OptimizerOptions};
use serde::{Deserialize, Serialize};

use crate::scenario::SweepParam;

/// Status of a trial that finished with a clean audit.
pub const STATUS_OK: &str = "ok";

/// Everything needed to reproduce a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// `None` runs the base configuration once per trial and mode.
    pub param: Option<SweepParam>,
    pub values: Vec<f64>,
    pub trials: usize,
    pub modes: Vec<Modes>,
    pub base: NetworkConfig,
    pub master_seed: u64,
    /// Objective, RIS set, tolerances; `modes` is overridden per mode.
    pub options: OptimizerOptions,
}

impl SweepSpec {
    /// Checks the spec and returns the configuration of every point.
    pub fn point_configs(&self) -> anyhow::Result<Vec<NetworkConfig>> {
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if self.modes.is_empty() {
            bail!("at least one mode is required");
        }
        self.options.validate()?;
        match self.param {
            None => {
                self.base.validate()?;
                Ok(vec![self.base.clone(); self.values.len().max(1)])
            }
            Some(p) => {
                if self.values.is_empty() {
                    bail!("the value list of a sweep must not be empty");
                }
                self.values
                    .iter()
                    .map(|&v| p.apply(&self.base, v).with_context(|| format!("{p} = {v}")))
                    .collect()
            }
        }
    }

    fn point_values(&self) -> Vec<f64> {
        match self.param {
            None if self.values.is_empty() => vec![0.0],
            _ => self.values.clone(),
        }
    }
}

/// Seed of trial `trial`, shared by every mode and swept value.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial as u64);
    rng.next_u64()
}

/// One optimized trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_param: String,
    pub value: f64,
    pub mode: String,
    pub seed: u64,
    /// Max-min rate in bits per channel use, or EE in bits per Joule
    /// per channel use; `NaN` (empty or `null` on disk) when the trial
    /// failed.
    #[serde(with = "nan_as_null")]
    pub objective_bits: f64,
    pub iterations: usize,
    pub wall_ms: f64,
    pub status: String,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }
}

/// Mean objective of one (value, mode) point over successful trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub value: f64,
    pub mode: String,
    pub trials: usize,
    #[serde(with = "nan_as_null")]
    pub mean_bits: f64,
}

/// Percentage gain `100(A − B)/B` of paired means at one value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gain {
    pub value: f64,
    pub mode: String,
    pub baseline: String,
    /// Trials where both modes succeeded.
    pub paired_trials: usize,
    #[serde(with = "nan_as_null")]
    pub gain_percent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct Summary {
    pub points: Vec<PointSummary>,
    pub gains: Vec<Gain>,
}

/// Aggregates rows; only the rows themselves enter, so the summary of
/// re-read rows equals the summary of the original run.
pub fn summarize(rows: &[ResultRow]) -> Summary {
    // Values and modes in order of first appearance.
    let mut values: Vec<f64> = Vec::new();
    let mut modes: Vec<String> = Vec::new();
    for r in rows {
        if !values.iter().any(|v| v.to_bits() == r.value.to_bits()) {
            values.push(r.value);
        }
        if !modes.contains(&r.mode) {
            modes.push(r.mode.clone());
        }
    }
    let ok = |v: f64, m: &str| -> BTreeMap<u64, f64> {
        rows.iter()
            .filter(|r| r.value.to_bits() == v.to_bits() && r.mode == m && r.is_ok())
            .map(|r| (r.seed, r.objective_bits))
            .collect()
    };
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let mut out = Summary::default();
    for &v in &values {
        for m in &modes {
            let xs: Vec<f64> = ok(v, m).into_values().collect();
            out.points.push(PointSummary {
                value: v,
                mode: m.clone(),
                trials: xs.len(),
                mean_bits: if xs.is_empty() { f64::NAN } else { mean(&xs) },
            });
        }
        for a in &modes {
            for b in modes.iter().filter(|b| *b != a) {
                let (ra, rb) = (ok(v, a), ok(v, b));
                let pairs: Vec<(f64, f64)> = ra
                    .iter()
                    .filter_map(|(s, &x)| rb.get(s).map(|&y| (x, y)))
                    .collect();
                let (ma, mb) = if pairs.is_empty() {
                    (f64::NAN, f64::NAN)
                } else {
                    let xa: Vec<f64> = pairs.iter().map(|p| p.0).collect();
                    let xb: Vec<f64> = pairs.iter().map(|p| p.1).collect();
                    (mean(&xa), mean(&xb))
                };
                out.gains.push(Gain {
                    value: v,
                    mode: a.clone(),
                    baseline: b.clone(),
                    paired_trials: pairs.len(),
                    gain_percent: 100.0 * (ma - mb) / mb,
                });
            }
        }
    }
    out
}

/// Rows in deterministic order plus their summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
}

impl SweepOutput {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }
}

/// Worker count from `RSMA_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("RSMA_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Optimizes and audits one trial; failures become rows with a status.
pub fn run_trial(
    cfg: &NetworkConfig,
    options: &OptimizerOptions,
    modes: Modes,
    seed: u64,
) -> (f64, usize, f64, String) {
    let start = Instant::now();
    let opts = OptimizerOptions { modes, ..*options };
    let result = ChannelSet::draw(cfg, seed).and_then(|ch| {
        let alloc = optimize(cfg, &ch, &opts, seed)?;
        let report = evaluate_allocation(cfg, &ch, &alloc)?;
        Ok((alloc, report))
    });
    let wall = if options.deterministic {
        0.0
    } else {
        start.elapsed().as_secs_f64() * 1e3
    };
    match result {
        Ok((alloc, report)) => {
            let status = match report.violations.first() {
                None => STATUS_OK.to_string(),
                Some(v) => format!("audit_failed: {} by {:e}", v.what, v.amount),
            };
            (
                alloc.objective / std::f64::consts::LN_2,
                alloc.trace.iterations(),
                wall,
                status,
            )
        }
        Err(e) => (f64::NAN, 0, wall, format!("error: {e}")),
    }
}

/// Runs every (value, mode, trial) combination on a pool of `threads`
/// workers (all cores when `None`). Every mode of a trial sees the same
/// channel realization and starting seed.
pub fn run_sweep(spec: &SweepSpec, threads: Option<usize>) -> anyhow::Result<SweepOutput> {
    let configs = spec.point_configs()?;
    let values = spec.point_values();
    let name = spec.param.map_or("none", SweepParam::name).to_string();
    let jobs: Vec<(usize, usize, usize)> = (0..configs.len())
        .flat_map(|v| {
            (0..spec.modes.len()).flat_map(move |m| (0..spec.trials).map(move |t| (v, m, t)))
        })
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("building worker pool")?;
    let mut done: Vec<((usize, usize, usize), ResultRow)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(v, m, t)| {
                let seed = trial_seed(spec.master_seed, t);
                let (obj, iterations, wall_ms, status) =
                    run_trial(&configs[v], &spec.options, spec.modes[m], seed);
                let row = ResultRow {
                    sweep_param: name.clone(),
                    value: values[v],
                    mode: spec.modes[m].to_string(),
                    seed,
                    objective_bits: obj,
                    iterations,
                    wall_ms,
                    status,
                };
                ((v, m, t), row)
            })
            .collect()
    });
    done.sort_by_key(|(k, _)| *k);
    let rows: Vec<ResultRow> = done.into_iter().map(|(_, r)| r).collect();
    let summary = summarize(&rows);
    Ok(SweepOutput { rows, summary })
}

/// Missing values travel as `null`, which JSON can represent and NaN not.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}
