//! Timing of single precoder and RIS updates over a grid of problem sizes.

use std::time::Instant;

use anyhow::Context;
use nalgebra::{DMatrix, DVector};
use rsma_core::kernel::{solve_ris_unitmod, solve_w_step};
use rsma_core::rates::FblParams;
use rsma_core::surrogate::ExpansionPoint;
use rsma_core::{initialize, ChannelSet, DesignContext, NetworkConfig, OptimizerOptions};
use serde::{Deserialize, Serialize};

/// One problem size of the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    #[serde(rename = "K")]
    pub users: usize,
    #[serde(rename = "N_BS")]
    pub bs_antennas: usize,
    #[serde(rename = "N_RIS")]
    pub ris_elements: usize,
}

/// Full factorial grid.
pub fn grid(users: &[usize], bs_antennas: &[usize], ris_elements: &[usize]) -> Vec<GridPoint> {
    let mut out = Vec::new();
    for &k in users {
        for &n in bs_antennas {
            for &r in ris_elements {
                out.push(GridPoint {
                    users: k,
                    bs_antennas: n,
                    ris_elements: r,
                });
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    #[serde(flatten)]
    pub point: GridPoint,
    /// Mean wall time of one precoder update.
    pub w_ms: f64,
    /// Coefficient of variation of the precoder timings.
    pub w_cv: f64,
    pub ris_ms: f64,
    pub ris_cv: f64,
    /// Measured repetitions (the warm-up run is not counted).
    pub reps: usize,
}

/// Log-log slopes of the timings in each grid dimension; `None` where the
/// grid does not vary that dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct Exponents {
    #[serde(rename = "K")]
    pub users: Option<f64>,
    #[serde(rename = "N_BS")]
    pub bs_antennas: Option<f64>,
    #[serde(rename = "N_RIS")]
    pub ris_elements: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<TimingRow>,
    pub w_exponents: Exponents,
    pub ris_exponents: Exponents,
}

fn mean_cv(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt() / mean)
}

/// Least-squares fit of `ln t = a + Σ_d b_d ln x_d` over the dimensions
/// that vary across `points`.
pub fn fit_exponents(points: &[GridPoint], times: &[f64]) -> Exponents {
    let dims: [fn(&GridPoint) -> usize; 3] = [|p| p.users, |p| p.bs_antennas, |p| p.ris_elements];
    let varying: Vec<usize> = (0..3)
        .filter(|&d| points.iter().any(|p| dims[d](p) != dims[d](&points[0])))
        .collect();
    let mut out = Exponents::default();
    if varying.is_empty() || points.len() <= varying.len() {
        return out;
    }
    let x = DMatrix::from_fn(points.len(), varying.len() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            (dims[varying[j - 1]](&points[i]) as f64).ln()
        }
    });
    let y = DVector::from_iterator(times.len(), times.iter().map(|t| t.max(1e-9).ln()));
    let Ok(beta) = x.svd(true, true).solve(&y, 1e-12) else {
        return out;
    };
    for (j, &d) in varying.iter().enumerate() {
        let b = Some(beta[j + 1]);
        match d {
            0 => out.users = b,
            1 => out.bs_antennas = b,
            _ => out.ris_elements = b,
        }
    }
    out
}

/// Times `reps` precoder and unit-modulus RIS updates at every grid point,
/// after one discarded warm-up run, from [`initialize`]'s starting point.
pub fn benchmark_complexity(
    base: &NetworkConfig,
    points: &[GridPoint],
    reps: usize,
    seed: u64,
    options: &OptimizerOptions,
) -> anyhow::Result<BenchReport> {
    let reps = reps.max(1);
    let mut rows = Vec::with_capacity(points.len());
    for &pt in points {
        let cfg = NetworkConfig {
            users_per_cell: pt.users,
            bs_antennas: pt.bs_antennas,
            ris_elements: pt.ris_elements,
            alpha: None,
            lambda: None,
            ..base.clone()
        };
        cfg.validate()?;
        let ctx_err = || format!("grid point {pt:?}");
        let ch = ChannelSet::draw(&cfg, seed).with_context(ctx_err)?;
        let start = initialize(&cfg, &ch, options, seed).with_context(ctx_err)?;
        let ctx = DesignContext::new(&cfg, options.modes.scheme, options.objective_kind, options.modes.rate_model)?;
        let fbl = FblParams::new(&cfg, options.modes.rate_model)?;
        let exp = ExpansionPoint::new(&cfg, &ch, &start.precoders, &start.ris, fbl).with_context(ctx_err)?;
        let mut w_times = Vec::with_capacity(reps);
        let mut ris_times = Vec::with_capacity(reps);
        for rep in 0..=reps {
            let t0 = Instant::now();
            solve_w_step(&exp, &cfg, &ctx, options.gamma2, &options.solver).with_context(ctx_err)?;
            let t1 = Instant::now();
            solve_ris_unitmod(&exp, &ch, &cfg, &ctx, options.delta0, &options.solver).with_context(ctx_err)?;
            let t2 = Instant::now();
            if rep > 0 {
                w_times.push((t1 - t0).as_secs_f64() * 1e3);
                ris_times.push((t2 - t1).as_secs_f64() * 1e3);
            }
        }
        let (w_ms, w_cv) = mean_cv(&w_times);
        let (ris_ms, ris_cv) = mean_cv(&ris_times);
        rows.push(TimingRow {
            point: pt,
            w_ms,
            w_cv,
            ris_ms,
            ris_cv,
            reps,
        });
    }
    let w: Vec<f64> = rows.iter().map(|r| r.w_ms).collect();
    let ris: Vec<f64> = rows.iter().map(|r| r.ris_ms).collect();
    Ok(BenchReport {
        w_exponents: fit_exponents(points, &w),
        ris_exponents: fit_exponents(points, &ris),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let pts = grid(&[2, 3, 4], &[1, 2], &[4, 8, 16]);
        let t: Vec<f64> = pts
            .iter()
            .map(|p| 0.5 * (p.users as f64).powi(2) * (p.ris_elements as f64).powf(1.5))
            .collect();
        let e = fit_exponents(&pts, &t);
        assert!((e.users.unwrap() - 2.0).abs() < 1e-9);
        assert!(e.bs_antennas.unwrap().abs() < 1e-9);
        assert!((e.ris_elements.unwrap() - 1.5).abs() < 1e-9);
    }

    #[test]
    fn constant_dimensions_have_no_exponent() {
        assert_eq!(fit_exponents(&grid(&[2], &[2], &[4]), &[1.0]), Exponents::default());
        let pts = grid(&[2], &[2], &[4, 8, 16]);
        let e = fit_exponents(&pts, &[1.0, 2.0, 4.0]);
        assert_eq!(e.users, None);
        assert!((e.ris_elements.unwrap() - 1.0).abs() < 1e-9);
    }
}
