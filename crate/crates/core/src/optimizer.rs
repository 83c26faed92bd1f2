//! Alternating optimization of precoders and RIS coefficients.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{effective_channels, ChannelSet};
use crate::error::{Error, Result};
use crate::kernel::{solve_margin_w, solve_ris_unitdisc, solve_ris_unitmod, solve_w_step, SolverOptions};
use crate::linalg::{fro2, HpdFactor};
use crate::model::{
    transmit_power, Allocation, CommonRateSplit, ConvergenceTrace, FeasibilitySet, NetworkConfig,
    ObjectiveKind, PrecoderSet, RateModel, RisPhases, Scheme, StopReason, StreamMode,
};
use crate::objective::{evaluate_design, DesignContext, PointValue};
use crate::rates::{fbl_report, user_covariances, user_power, FblParams, FblRateReport};
use crate::scalar::{cx, lit, to_f64, CMat, Real};
use crate::split::SplitSolution;
use crate::surrogate::ExpansionPoint;

/// How the RIS coefficients are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum RisMode {
    /// Updated in every outer iteration.
    #[default]
    Optimized,
    /// Drawn once with uniform phases and kept.
    Random,
    /// RIS legs removed from the channel.
    Off,
}

/// A baseline variant: combination of scheme, RIS handling, design rate
/// model and stream mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct Modes {
    pub scheme: Scheme,
    pub ris: RisMode,
    pub rate_model: RateModel,
    pub stream_mode: StreamMode,
}

impl FromStr for Modes {
    type Err = Error;

    /// Parses `+`-joined flags: `RSMA`, `TIN`, `NoRIS`, `RandomRIS`,
    /// `ShannonDesign`, `SingleStream` (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let mut m = Modes::default();
        for tok in s.split('+').map(str::trim).filter(|t| !t.is_empty()) {
            match tok.to_ascii_lowercase().as_str() {
                "rsma" => m.scheme = Scheme::Rsma,
                "tin" | "sdma" => m.scheme = Scheme::Tin,
                "noris" => m.ris = RisMode::Off,
                "randomris" => m.ris = RisMode::Random,
                "shannondesign" => m.rate_model = RateModel::Shannon,
                "singlestream" => m.stream_mode = StreamMode::SingleStream,
                _ => return Err(Error::validation("modes", format!("unknown mode flag `{tok}`"))),
            }
        }
        Ok(m)
    }
}

impl fmt::Display for Modes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = vec![match self.scheme {
            Scheme::Rsma => "RSMA",
            Scheme::Tin => "TIN",
        }];
        match self.ris {
            RisMode::Optimized => {}
            RisMode::Random => parts.push("RandomRIS"),
            RisMode::Off => parts.push("NoRIS"),
        }
        if self.rate_model == RateModel::Shannon {
            parts.push("ShannonDesign");
        }
        if self.stream_mode == StreamMode::SingleStream {
            parts.push("SingleStream");
        }
        f.write_str(&parts.join("+"))
    }
}

/// Settings of the alternating optimization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    /// Outer relative-improvement threshold.
    pub gamma1: f64,
    /// Dinkelbach relative-change threshold.
    pub gamma2: f64,
    pub max_outer_iterations: usize,
    pub objective_kind: ObjectiveKind,
    pub modes: Modes,
    pub ris_set: FeasibilitySet,
    pub solver: SolverOptions,
    /// Initial CCP relaxation, halved per outer iteration.
    pub delta0: f64,
    pub delta_min: f64,
    /// Max-min-rate iterations allowed to reach the latency thresholds.
    pub repair_iterations: usize,
    /// Records zero wall times so that results are bit-reproducible.
    pub deterministic: bool,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            gamma1: 1e-4,
            gamma2: 1e-3,
            max_outer_iterations: 100,
            objective_kind: ObjectiveKind::MaxMinRate,
            modes: Modes::default(),
            ris_set: FeasibilitySet::UnitModulus,
            solver: SolverOptions::default(),
            delta0: 0.05,
            delta_min: 1e-3,
            repair_iterations: 10,
            deterministic: false,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma1 > 0.0 && self.gamma2 > 0.0) {
            return Err(Error::validation("gamma", "thresholds must be positive"));
        }
        if !(self.delta0 > 0.0 && self.delta0 < 1.0 && self.delta_min > 0.0 && self.delta_min <= self.delta0) {
            return Err(Error::validation("delta", "need 0 < delta_min <= delta0 < 1"));
        }
        self.solver.validate()
    }
}

/// Precoder seed stream, disjoint from the channel streams.
const STREAM_INIT: u64 = 16 << 40;
const STREAM_PERTURB: u64 = 17 << 40;

fn cn<T: Real>(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat<T> {
    CMat::<T>::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        cx(lit(re), lit(im))
    })
}

fn scale_to_budget<T: Real>(p: &mut PrecoderSet<T>, power: f64) {
    for l in 0..p.cells() {
        let tp = to_f64(transmit_power(p, l));
        if tp > 0.0 {
            p.scale_cell(l, lit((power / tp).sqrt()));
        }
    }
}

/// Problem actually solved for a mode: channels and circuit power after
/// removing the RIS when requested.
struct Setup<T: Real> {
    cfg: NetworkConfig,
    ch: ChannelSet<T>,
    ctx: DesignContext,
}

fn setup<T: Real>(cfg: &NetworkConfig, ch: &ChannelSet<T>, opts: &OptimizerOptions) -> Result<Setup<T>> {
    cfg.validate()?;
    opts.validate()?;
    let mut cfg = cfg.clone();
    let ch = if opts.modes.ris == RisMode::Off {
        // The RIS operating power is no longer spent.
        cfg.p_c -= cfg.ris_power * cfg.ris_count as f64 / cfg.users() as f64;
        if !(cfg.p_c > 0.0) {
            return Err(Error::validation("p_c", "circuit power without RIS must stay positive"));
        }
        ch.without_ris()
    } else {
        ch.clone()
    };
    let ctx = DesignContext::new(&cfg, opts.modes.scheme, opts.objective_kind, opts.modes.rate_model)?;
    Ok(Setup { cfg, ch, ctx })
}

/// Current iterate of the alternating optimization.
#[derive(Clone)]
struct State<T: Real> {
    p: PrecoderSet<T>,
    ris: RisPhases<T>,
    value: PointValue<T>,
}

impl<T: Real> State<T> {
    fn eval(s: &Setup<T>, ctx: &DesignContext, p: PrecoderSet<T>, ris: RisPhases<T>) -> Result<Self> {
        let h = effective_channels(&s.ch, &ris);
        let value = evaluate_design(ctx, &s.cfg, &h, &p)?;
        Ok(Self { p, ris, value })
    }

    fn objective(&self) -> f64 {
        self.value.objective()
    }
}

/// Builds an expansion point, nudging precoders whose dispersion vanishes.
fn expansion<T: Real>(
    s: &Setup<T>,
    p: &PrecoderSet<T>,
    ris: &RisPhases<T>,
    rng: &mut ChaCha8Rng,
) -> Result<ExpansionPoint<T>> {
    let mut p = p.clone();
    let h = effective_channels(&s.ch, ris);
    let limit = s.cfg.users() + s.cfg.cells + 1;
    for _ in 0..limit {
        let exp = ExpansionPoint::with_channels(&s.cfg, h.clone(), &p, ris, s.ctx.fbl)?;
        let fail = if s.ctx.fbl.qinv_p == 0.0 && s.ctx.fbl.qinv_c == 0.0 {
            None
        } else {
            degenerate_slot(s, &exp)
        };
        let Some((l, common, k)) = fail else { return Ok(exp) };
        let target = 1e-6 * s.cfg.power;
        let w = if common { &mut p.common[l] } else { &mut p.private[l][k] };
        let mut z = cn::<T>(w.nrows(), w.ncols(), rng);
        let zp = to_f64(fro2(&z));
        z *= cx(lit((target / zp).sqrt()), T::zero());
        *w += z;
        let tp = to_f64(transmit_power(&p, l));
        if tp > s.cfg.power {
            p.scale_cell(l, lit((s.cfg.power / tp).sqrt()));
        }
    }
    Err(Error::DegenerateExpansion {
        cell: 0,
        user: 0,
        what: "repeated perturbation",
        value: 0.0,
    })
}

/// First `(cell, is_common, user)` whose barred dispersion is degenerate.
fn degenerate_slot<T: Real>(s: &Setup<T>, exp: &ExpansionPoint<T>) -> Option<(usize, bool, usize)> {
    use crate::surrogate::DEGENERATE_DISPERSION as TOL;
    for (l, k) in s.cfg.user_indices() {
        if s.ctx.fbl.qinv_p > 0.0 && !(to_f64(exp.zeta_p[l][k]) >= TOL) {
            return Some((l, false, k));
        }
        if s.ctx.scheme == Scheme::Rsma && s.ctx.fbl.qinv_c > 0.0 && !(to_f64(exp.zeta_c[l][k]) >= TOL) {
            return Some((l, true, k));
        }
    }
    None
}

/// Random starting point: complex Gaussian precoders scaled to the power
/// budget, uniform RIS phases and the best common-rate split. If the
/// latency or decodability constraints fail, up to `repair_iterations`
/// precoder updates maximizing their smallest slack are run.
pub fn initialize<T: Real>(
    cfg: &NetworkConfig,
    ch: &ChannelSet<T>,
    opts: &OptimizerOptions,
    seed: u64,
) -> Result<Allocation<T>> {
    let s = setup(cfg, ch, opts)?;
    let state = initial_state(&s, opts, seed)?;
    Ok(finish(&s, opts, state, ConvergenceTrace::default()))
}

fn initial_state<T: Real>(s: &Setup<T>, opts: &OptimizerOptions, seed: u64) -> Result<State<T>> {
    let cfg = &s.cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STREAM_INIT);
    let mut p = PrecoderSet::<T>::zeros(cfg, opts.modes.stream_mode);
    let d = cfg.streams(opts.modes.stream_mode);
    for l in 0..cfg.cells {
        if opts.modes.scheme == Scheme::Rsma {
            p.common[l] = cn(cfg.bs_antennas, d, &mut rng);
        }
        for k in 0..cfg.users_per_cell {
            p.private[l][k] = cn(cfg.bs_antennas, d, &mut rng);
        }
    }
    scale_to_budget(&mut p, cfg.power);
    let ris = RisPhases {
        upsilon: (0..cfg.ris_count)
            .map(|_| {
                (0..cfg.ris_elements)
                    .map(|_| {
                        let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                        cx(lit(th.cos()), lit(th.sin()))
                    })
                    .collect()
            })
            .collect(),
        feasibility_set: opts.ris_set,
    };
    let mut state = State::eval(s, &s.ctx, p, ris)?;
    if state.value.split.is_some() {
        return Ok(state);
    }
    // Repair: minorize-maximize the smallest latency/decodability slack.
    let mut prng = ChaCha8Rng::seed_from_u64(seed);
    prng.set_stream(STREAM_PERTURB);
    for _ in 0..opts.repair_iterations {
        let exp = expansion(s, &state.p, &state.ris, &mut prng)?;
        let step = solve_margin_w(&exp, &s.cfg, &s.ctx, &opts.solver)?;
        state = State::eval(s, &s.ctx, step.precoders, state.ris)?;
        if state.value.split.is_some() {
            return Ok(state);
        }
    }
    Err(Error::InfeasibleStart(format!(
        "latency threshold {:.4e} nats not reached after {} repair iterations",
        s.ctx.r_th, opts.repair_iterations
    )))
}

fn to_t<T: Real>(sol: &Option<SplitSolution>, cfg: &NetworkConfig) -> CommonRateSplit<T> {
    match sol {
        Some(s) => CommonRateSplit {
            t: s.t.iter().map(|r| r.iter().map(|&x| lit(x)).collect()).collect(),
        },
        None => CommonRateSplit::zeros(cfg),
    }
}

fn finish<T: Real>(s: &Setup<T>, opts: &OptimizerOptions, st: State<T>, trace: ConvergenceTrace) -> Allocation<T> {
    let split = to_t(&st.value.split, &s.cfg);
    let mut rates = vec![vec![T::zero(); s.cfg.users_per_cell]; s.cfg.cells];
    let mut ees = rates.clone();
    for (l, k) in s.cfg.user_indices() {
        let r = split.t[l][k] + st.value.table.private[l][k].max(T::zero());
        rates[l][k] = r;
        ees[l][k] = r / user_power(&st.p, l, k, s.cfg.p_c, s.cfg.eta);
    }
    let objective = weighted_min(&s.cfg, opts.objective_kind, &rates, &ees);
    Allocation {
        precoders: st.p,
        ris: st.ris,
        split,
        rates,
        ees,
        objective,
        objective_kind: opts.objective_kind,
        rate_model: opts.modes.rate_model,
        scheme: opts.modes.scheme,
        ris_enabled: opts.modes.ris != RisMode::Off,
        circuit_power: s.cfg.p_c,
        trace,
    }
}

fn weighted_min<T: Real>(cfg: &NetworkConfig, kind: ObjectiveKind, rates: &[Vec<T>], ees: &[Vec<T>]) -> T {
    cfg.user_indices()
        .map(|(l, k)| match kind {
            ObjectiveKind::MaxMinRate => rates[l][k] / lit(cfg.alpha(l, k)),
            ObjectiveKind::MaxMinEE => ees[l][k] / lit(cfg.lambda(l, k)),
        })
        .fold(lit(f64::INFINITY), |a: T, b| a.min(b))
}

/// Runs the alternating optimization from [`initialize`]'s point.
///
/// Every block update is accepted only when the true objective (with the
/// common-rate split re-optimized) does not decrease, so the recorded
/// trace is nondecreasing. The loop stops when the relative improvement
/// of an outer iteration falls below `gamma1` or at the iteration cap.
pub fn optimize<T: Real>(
    cfg: &NetworkConfig,
    ch: &ChannelSet<T>,
    opts: &OptimizerOptions,
    seed: u64,
) -> Result<Allocation<T>> {
    let start = Instant::now();
    let s = setup(cfg, ch, opts)?;
    let mut state = initial_state(&s, opts, seed)?;
    let mut prng = ChaCha8Rng::seed_from_u64(seed);
    prng.set_stream(STREAM_PERTURB + 1);

    let elapsed = |start: &Instant| {
        if opts.deterministic {
            0.0
        } else {
            start.elapsed().as_secs_f64() * 1e3
        }
    };
    let mut trace = ConvergenceTrace {
        objective: vec![state.objective()],
        wall_ms: vec![elapsed(&start)],
        ..ConvergenceTrace::default()
    };
    let ris_active = opts.modes.ris == RisMode::Optimized
        && s.cfg.ris_count > 0
        && s.cfg.ris_elements > 0;
    let mut delta = opts.delta0;
    trace.stop = StopReason::IterationCap;

    for _ in 0..opts.max_outer_iterations {
        let prev = state.objective();
        let mut iters = 0;

        let exp = expansion(&s, &state.p, &state.ris, &mut prng)?;
        if let Some(w) = rejected_if_infeasible(solve_w_step(&exp, &s.cfg, &s.ctx, opts.gamma2, &opts.solver))? {
            iters += w.iterations;
            if !w.mu.is_empty() {
                trace.gda_mu.push(w.mu.clone());
            }
            let cand = State::eval(&s, &s.ctx, w.precoders, state.ris.clone())?;
            if cand.objective() >= state.objective() {
                state = cand;
            }
        }
        trace.w_phase.push(state.objective());

        if ris_active {
            let exp = expansion(&s, &state.p, &state.ris, &mut prng)?;
            let step = rejected_if_infeasible(match opts.ris_set {
                FeasibilitySet::UnitDisc => solve_ris_unitdisc(&exp, &s.ch, &s.cfg, &s.ctx, &opts.solver),
                FeasibilitySet::UnitModulus => solve_ris_unitmod(&exp, &s.ch, &s.cfg, &s.ctx, delta, &opts.solver),
            })?;
            if let Some(step) = step {
                iters += step.iterations;
                if let Some(a) = step.acceptance {
                    trace.ris_acceptance.push(a);
                }
                let cand = State::eval(&s, &s.ctx, exp.precoders, step.ris)?;
                if cand.objective() >= state.objective() {
                    state = cand;
                }
            }
            trace.ris_phase.push(state.objective());
            delta = (delta / 2.0).max(opts.delta_min);
        }

        let obj = state.objective();
        trace.objective.push(obj);
        trace.wall_ms.push(elapsed(&start));
        trace.subproblem_iterations.push(iters);
        if (obj - prev) / prev.abs().max(1e-12) < opts.gamma1 {
            trace.stop = StopReason::Converged;
            break;
        }
    }
    Ok(finish(&s, opts, state, trace))
}

/// A block subproblem with no strictly feasible point around a perturbed
/// expansion is treated like a rejected step: the iterate stays put.
fn rejected_if_infeasible<S>(r: Result<S>) -> Result<Option<S>> {
    match r {
        Ok(step) => Ok(Some(step)),
        Err(Error::Infeasible(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// One constraint violation found by [`evaluate_allocation`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub what: String,
    /// Amount by which the constraint is violated.
    pub amount: f64,
}

/// Metrics of an allocation recomputed from scratch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationReport {
    /// Raw (possibly negative) common decoding rates `r_c,lk`.
    pub common_rates: Vec<Vec<f64>>,
    /// Raw private rates `r_p,lk`.
    pub private_rates: Vec<Vec<f64>>,
    /// Reported rates `t_lk + max(0, r_p,lk)`.
    pub rates: Vec<Vec<f64>>,
    pub ees: Vec<Vec<f64>>,
    pub objective: f64,
    pub violations: Vec<Violation>,
}

impl AllocationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Audit tolerance of [`evaluate_allocation`].
pub const AUDIT_TOL: f64 = 1e-6;

/// Recomputes rates and energy efficiencies of `alloc` with its own rate
/// model and checks every constraint at [`AUDIT_TOL`].
pub fn evaluate_allocation<T: Real>(
    cfg: &NetworkConfig,
    ch: &ChannelSet<T>,
    alloc: &Allocation<T>,
) -> Result<AllocationReport> {
    evaluate_allocation_with(cfg, ch, alloc, alloc.rate_model)
}

/// As [`evaluate_allocation`] with an explicit rate model.
pub fn evaluate_allocation_with<T: Real>(
    cfg: &NetworkConfig,
    ch: &ChannelSet<T>,
    alloc: &Allocation<T>,
    model: RateModel,
) -> Result<AllocationReport> {
    alloc.precoders.check_shape(cfg)?;
    let ch = if alloc.ris_enabled { ch.clone() } else { ch.without_ris() };
    let fbl = FblParams::new(cfg, model)?;
    let h = effective_channels(&ch, &alloc.ris);
    let table = crate::rates::rate_table(&h, &alloc.precoders, cfg, &fbl)?;
    let r_th = crate::rates::rate_threshold_nats(cfg)?;
    let mut violations = Vec::new();
    let mut flag = |what: String, amount: f64| {
        if amount > AUDIT_TOL || amount.is_nan() {
            violations.push(Violation { what, amount });
        }
    };

    for l in 0..cfg.cells {
        let tp = to_f64(transmit_power(&alloc.precoders, l));
        flag(format!("power budget of cell {l}"), (tp - cfg.power) / cfg.power.max(1.0));
    }
    if alloc.ris_enabled {
        flag("RIS feasible set".into(), alloc.ris.modulus_violation());
    }
    let t: Vec<Vec<f64>> = alloc
        .split
        .t
        .iter()
        .map(|r| r.iter().map(|&x| to_f64(x)).collect())
        .collect();
    let common: Vec<Vec<f64>> = table.common.iter().map(|r| r.iter().map(|&x| to_f64(x)).collect()).collect();
    let private: Vec<Vec<f64>> = table.private.iter().map(|r| r.iter().map(|&x| to_f64(x)).collect()).collect();
    for l in 0..cfg.cells {
        let total: f64 = t[l].iter().sum();
        for k in 0..cfg.users_per_cell {
            flag(format!("split t[{l}][{k}] nonnegative"), -t[l][k]);
            if alloc.scheme == Scheme::Tin {
                flag(format!("split t[{l}][{k}] without common message"), t[l][k].abs());
            }
        }
        if total > 0.0 {
            let cmin = common[l].iter().copied().fold(f64::INFINITY, f64::min);
            flag(format!("decodability of cell {l}"), total - cmin);
        }
    }
    let mut rates = vec![vec![0.0; cfg.users_per_cell]; cfg.cells];
    let mut ees = rates.clone();
    for (l, k) in cfg.user_indices() {
        flag(format!("latency of user ({l},{k})"), r_th - (t[l][k] + private[l][k]));
        rates[l][k] = t[l][k] + private[l][k].max(0.0);
        ees[l][k] = rates[l][k]
            / to_f64(user_power(&alloc.precoders, l, k, alloc.circuit_power, cfg.eta));
    }
    let objective = weighted_min(cfg, alloc.objective_kind, &rates, &ees);
    if model == alloc.rate_model {
        let rel = (objective - to_f64(alloc.objective)).abs() / objective.abs().max(1e-12);
        flag("reported objective".into(), rel);
    }
    Ok(AllocationReport {
        common_rates: common,
        private_rates: private,
        rates,
        ees,
        objective,
        violations,
    })
}

/// Common and private rates of a one-stream user computed through
/// Sylvester's identity: with `h = H w`, `ln|I + D⁻¹hhᴴ| = ln(1 + hᴴD⁻¹h)`
/// and `2Tr(hhᴴ(D + hhᴴ)⁻¹) = 2γ/(1 + γ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleStreamRates {
    pub common: FblRateReport<f64>,
    pub private: FblRateReport<f64>,
}

/// Single-stream rates of user `(l, k)`; every precoder must have one column.
pub fn single_stream_rate<T: Real>(
    ch: &ChannelSet<T>,
    ris: &RisPhases<T>,
    p: &PrecoderSet<T>,
    l: usize,
    k: usize,
    cfg: &NetworkConfig,
    fbl: &FblParams,
) -> Result<SingleStreamRates> {
    if p.common.iter().chain(p.private.iter().flatten()).any(|w| w.ncols() != 1) {
        return Err(Error::validation("precoders", "single-stream rates need one-column precoders"));
    }
    let h = effective_channels(ch, ris);
    let c = user_covariances(&h, p, cfg.sigma2, l, k);
    let quad = |d: &CMat<T>, v: &CMat<T>| -> Result<f64> {
        let f = HpdFactor::new(d, T::zero(), "interference covariance")?;
        let x = f.solve(v);
        Ok(to_f64((v.adjoint() * x)[(0, 0)].re))
    };
    let hc = &h[l][k][l] * &p.common[l];
    let hp = &h[l][k][l] * &p.private[l][k];
    let gc = quad(&c.d_c, &hc)?;
    let gp = quad(&c.d, &hp)?;
    let gp_c = quad(&c.d_c, &hp)?;
    Ok(SingleStreamRates {
        common: fbl_report(gc.ln_1p(), 2.0 * gc / (1.0 + gc), fbl.n, fbl.qinv_c),
        private: fbl_report(gp.ln_1p(), 2.0 * gp_c, fbl.n, fbl.qinv_p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_infeasibility_is_swallowed() {
        assert_eq!(rejected_if_infeasible(Ok(3)).unwrap(), Some(3));
        assert_eq!(rejected_if_infeasible::<i32>(Err(Error::Infeasible("x".into()))).unwrap(), None);
        assert!(rejected_if_infeasible::<i32>(Err(Error::InfeasibleStart("x".into()))).is_err());
    }

    #[test]
    fn mode_strings_round_trip() {
        for s in ["RSMA", "TIN", "RSMA+NoRIS", "TIN+RandomRIS+ShannonDesign", "RSMA+SingleStream"] {
            let m: Modes = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert!("RSMA+Bogus".parse::<Modes>().is_err());
        assert_eq!("tin".parse::<Modes>().unwrap().scheme, Scheme::Tin);
    }

    #[test]
    fn default_options_validate() {
        assert!(OptimizerOptions::default().validate().is_ok());
        let bad = OptimizerOptions {
            gamma1: 0.0,
            ..OptimizerOptions::default()
        };
        assert!(bad.validate().is_err());
    }
}
