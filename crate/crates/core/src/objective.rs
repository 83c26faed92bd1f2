//! True (non-surrogate) objective of a design point.

use crate::error::Result;
use crate::model::{NetworkConfig, ObjectiveKind, PrecoderSet, RateModel, Scheme};
use crate::rates::{rate_table, rate_threshold_nats, user_power, FblParams, RateTable};
use crate::scalar::{to_f64, CMat, Real};
use crate::split::{optimal_split, SplitInputs, SplitSolution};

/// Everything that fixes the meaning of "objective" during a design.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesignContext {
    pub scheme: Scheme,
    pub kind: ObjectiveKind,
    pub rate_model: RateModel,
    pub fbl: FblParams,
    /// Latency threshold in nats.
    pub r_th: f64,
    /// Static circuit power per user.
    pub p_c: f64,
}

impl DesignContext {
    pub fn new(
        cfg: &NetworkConfig,
        scheme: Scheme,
        kind: ObjectiveKind,
        rate_model: RateModel,
    ) -> Result<Self> {
        Ok(Self {
            scheme,
            kind,
            rate_model,
            fbl: FblParams::new(cfg, rate_model)?,
            r_th: rate_threshold_nats(cfg)?,
            p_c: cfg.p_c,
        })
    }

    /// Denominator of user `(l, k)` in the max-min objective: `α_lk` for
    /// rates, `λ_lk·p_lk(W)` for energy efficiency.
    pub fn coef<T: Real>(&self, cfg: &NetworkConfig, p: &PrecoderSet<T>, l: usize, k: usize) -> f64 {
        match self.kind {
            ObjectiveKind::MaxMinRate => cfg.alpha(l, k),
            ObjectiveKind::MaxMinEE => {
                cfg.lambda(l, k) * to_f64(user_power(p, l, k, self.p_c, cfg.eta))
            }
        }
    }

    /// Split-LP inputs for given private and common rates.
    pub fn split_inputs<T: Real>(
        &self,
        cfg: &NetworkConfig,
        private: Vec<Vec<f64>>,
        common: &[Vec<f64>],
        p: &PrecoderSet<T>,
    ) -> SplitInputs {
        let budget = common
            .iter()
            .map(|row| match self.scheme {
                Scheme::Rsma => Some(row.iter().copied().fold(f64::INFINITY, f64::min)),
                Scheme::Tin => None,
            })
            .collect();
        let coef = (0..cfg.cells)
            .map(|l| (0..cfg.users_per_cell).map(|k| self.coef(cfg, p, l, k)).collect())
            .collect();
        SplitInputs {
            private,
            budget,
            coef,
            r_th: self.r_th,
            latency_rates: None,
        }
    }
}

/// Rates at a point together with the best common-rate split.
#[derive(Clone, Debug, PartialEq)]
pub struct PointValue<T> {
    pub table: RateTable<T>,
    /// `None` when the latency thresholds cannot be met.
    pub split: Option<SplitSolution>,
}

impl<T> PointValue<T> {
    /// Objective value, `−∞` when infeasible.
    pub fn objective(&self) -> f64 {
        self.split.as_ref().map_or(f64::NEG_INFINITY, |s| s.objective)
    }
}

/// Evaluates the exact rates at `p` with effective channels `h` and solves
/// the split LP.
pub fn evaluate_design<T: Real>(
    ctx: &DesignContext,
    cfg: &NetworkConfig,
    h: &[Vec<Vec<CMat<T>>>],
    p: &PrecoderSet<T>,
) -> Result<PointValue<T>> {
    let table = rate_table(h, p, cfg, &ctx.fbl)?;
    let to64 = |m: &Vec<Vec<T>>| -> Vec<Vec<f64>> {
        m.iter().map(|r| r.iter().map(|&x| to_f64(x)).collect()).collect()
    };
    let inp = ctx.split_inputs(cfg, to64(&table.private), &to64(&table.common), p);
    let split = optimal_split(&inp);
    Ok(PointValue { table, split })
}
