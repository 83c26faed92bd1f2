//! Convexified subproblems of the alternating optimization.
//!
//! Each block update maximizes an epigraph variable `s` subject to one
//! concave quadratic constraint per user and rate type, built from the
//! surrogates at the current expansion point, and hands the resulting
//! program to the interior-point solver in [`ipm`].

pub mod ipm;
mod lower;

pub use ipm::{solve_program, ConvexProgram, QuadConstraint, Solution, SolveStatus, SolverOptions};

use nalgebra::Complex;

use crate::channel::{effective_channels, ChannelSet};
use crate::error::{Error, Result};
use crate::model::{
    CommonRateSplit, NetworkConfig, ObjectiveKind, PrecoderSet, RisAcceptance, RisPhases, Scheme,
};
use crate::objective::{evaluate_design, DesignContext};
use crate::rates::user_power;
use crate::scalar::{lit, to_f64, Real};
use crate::split::{interior_split, optimal_split, SplitInputs};
use crate::surrogate::{
    build_common_surrogate_w, build_private_surrogate_w, build_surrogates_ris, ExpansionPoint, Slot,
};
use lower::{lower_ris, lower_w, m64, p64, pt, sur64, QuadBuilder, RisGeometry, RisLayout, WLayout};

/// Shrink factor applied to the expansion point so that the warm start is
/// well inside the power and unit-disc constraints.
const NUDGE: f64 = 1.0 - 1e-3;

/// Default cap on Dinkelbach iterations per precoder update.
pub const GDA_MAX_ITERATIONS: usize = 20;

/// Outcome of a precoder update.
#[derive(Clone, Debug, PartialEq)]
pub struct WStep<T: Real> {
    pub precoders: PrecoderSet<T>,
    pub split: CommonRateSplit<T>,
    /// Subproblem optimum (`r`, or the final `μ` for energy efficiency).
    pub objective: f64,
    pub iterations: usize,
    /// Dinkelbach parameters, starting with the value at the expansion
    /// point; empty for rate updates.
    pub mu: Vec<f64>,
}

/// Outcome of an RIS update.
#[derive(Clone, Debug, PartialEq)]
pub struct RisStep<T: Real> {
    pub ris: RisPhases<T>,
    pub split: CommonRateSplit<T>,
    /// Subproblem optimum.
    pub objective: f64,
    pub iterations: usize,
    /// Unit-modulus acceptance decision in true objective units.
    pub acceptance: Option<RisAcceptance>,
}

fn split_from<T: Real>(cfg: &NetworkConfig, t: &Option<Vec<Vec<usize>>>, z: &[f64]) -> CommonRateSplit<T> {
    match t {
        Some(idx) => CommonRateSplit {
            t: idx
                .iter()
                .map(|row| row.iter().map(|&i| lit(z[i].max(0.0))).collect())
                .collect(),
        },
        None => CommonRateSplit::zeros(cfg),
    }
}

fn write_split(t: &Option<Vec<Vec<usize>>>, vals: &[Vec<f64>], z: &mut [f64]) {
    if let Some(idx) = t {
        for (row, vrow) in idx.iter().zip(vals) {
            for (&i, &v) in row.iter().zip(vrow) {
                z[i] = v;
            }
        }
    }
}

/// Rate and common-rate constraints shared by both blocks.
struct RateRows {
    /// Private surrogate per user, without `t` or `s`.
    private: Vec<Vec<QuadBuilder>>,
    /// Common surrogate per user (empty without a common message).
    common: Vec<Vec<QuadBuilder>>,
}

impl RateRows {
    fn values(rows: &[Vec<QuadBuilder>], z: &[f64]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| r.iter().map(|b| b.clone().finish("").value(z)).collect())
            .collect()
    }

    /// Latency, decodability and `t ≥ 0` rows. With `margin`, the latency
    /// and decodability rows must hold with that variable as slack.
    fn common_constraints(
        &self,
        t: &Option<Vec<Vec<usize>>>,
        r_th: f64,
        margin: Option<usize>,
        out: &mut Vec<QuadConstraint>,
    ) {
        for (l, row) in self.private.iter().enumerate() {
            for (k, b) in row.iter().enumerate() {
                let mut lat = b.clone();
                if let Some(t) = t {
                    lat.add_linear(t[l][k], 1.0);
                }
                if let Some(v) = margin {
                    lat.add_linear(v, -1.0);
                }
                lat.constant -= r_th;
                out.push(lat.finish(format!("latency {l},{k}")));
            }
        }
        if let Some(t) = t {
            for (l, row) in self.common.iter().enumerate() {
                for (k, b) in row.iter().enumerate() {
                    let mut c = b.clone();
                    for &i in &t[l] {
                        c.add_linear(i, -1.0);
                    }
                    if let Some(v) = margin {
                        c.add_linear(v, -1.0);
                    }
                    out.push(c.finish(format!("decodability {l},{k}")));
                }
            }
            for (l, row) in t.iter().enumerate() {
                for (k, &i) in row.iter().enumerate() {
                    out.push(QuadConstraint::affine(format!("split {l},{k}"), 0.0, vec![(i, 1.0)]));
                }
            }
        }
    }
}

/// Interior warm start of `(t, s)` for surrogate rates at the warm point.
/// `shifted` are the rates entering the objective rows (differing from
/// `private` for energy efficiency), `coef` their `s` coefficients.
fn warm_split(
    private: &[Vec<f64>],
    shifted: Vec<Vec<f64>>,
    common: &[Vec<f64>],
    coef: Vec<Vec<f64>>,
    scheme: Scheme,
    r_th: f64,
) -> (Vec<Vec<f64>>, f64, bool) {
    let inp = SplitInputs {
        private: shifted,
        budget: budgets(common, scheme, private.len()),
        coef,
        r_th,
        latency_rates: Some(private.to_vec()),
    };
    match optimal_split(&inp) {
        Some(sol) => {
            let s = sol.objective - 1e-3 * sol.objective.abs().max(1e-3);
            match interior_split(&inp, s) {
                Some(t) => (t, s, true),
                None => (sol.t, s, false),
            }
        }
        None => {
            let s = inp
                .private
                .iter()
                .flatten()
                .zip(inp.coef.iter().flatten())
                .map(|(r, c)| r / c)
                .fold(f64::INFINITY, f64::min);
            (
                private.iter().map(|r| vec![0.0; r.len()]).collect(),
                s - 1.0,
                false,
            )
        }
    }
}

struct WProblem {
    lay: WLayout,
    rows: RateRows,
    fixed: PrecoderSet<f64>,
}

impl WProblem {
    fn new<T: Real>(exp: &ExpansionPoint<T>, cfg: &NetworkConfig, scheme: Scheme) -> Result<Self> {
        let fixed = p64(&exp.precoders);
        let d = fixed.common[0].ncols();
        let lay = WLayout::new(cfg.cells, cfg.users_per_cell, cfg.bs_antennas, d, scheme);
        let mut private = Vec::with_capacity(cfg.cells);
        let mut common = Vec::new();
        for l in 0..cfg.cells {
            let mut prow = Vec::with_capacity(cfg.users_per_cell);
            let mut crow = Vec::new();
            for k in 0..cfg.users_per_cell {
                let h: Vec<_> = exp.h[l][k].iter().map(m64).collect();
                let sp = sur64(&build_private_surrogate_w(exp, cfg, l, k)?);
                prow.push(lower_w(&sp, &h, &lay, &fixed));
                if scheme == Scheme::Rsma {
                    let sc = sur64(&build_common_surrogate_w(exp, cfg, l, k)?);
                    crow.push(lower_w(&sc, &h, &lay, &fixed));
                }
            }
            private.push(prow);
            if scheme == Scheme::Rsma {
                common.push(crow);
            }
        }
        Ok(Self {
            lay,
            rows: RateRows { private, common },
            fixed,
        })
    }

    /// Program for weights `coef_s` on `s`; with `mu` the objective rows
    /// also subtract `μ·λ_lk·p_lk(W)`.
    fn program(&self, cfg: &NetworkConfig, ctx: &DesignContext, mu: Option<f64>) -> ConvexProgram {
        let lay = &self.lay;
        let mut cons = Vec::new();
        for l in 0..cfg.cells {
            for k in 0..cfg.users_per_cell {
                let mut main = self.rows.private[l][k].clone();
                if let Some(t) = &lay.t {
                    main.add_linear(t[l][k], 1.0);
                }
                match mu {
                    None => main.add_linear(lay.s, -cfg.alpha(l, k)),
                    Some(mu) => {
                        let lam = cfg.lambda(l, k);
                        main.add_linear(lay.s, -lam);
                        // A negative parameter would make the power term convex.
                        let c = mu.max(0.0) * lam;
                        main.constant -= c * ctx.p_c;
                        if let Some(off) = lay.offset(Slot::Private(l, k)) {
                            main.add_squares(&lay.coords(off), c * cfg.eta);
                        }
                        if let Some(off) = lay.offset(Slot::Common(l)) {
                            main.add_squares(
                                &lay.coords(off),
                                c * cfg.eta / cfg.users_per_cell as f64,
                            );
                        }
                    }
                }
                cons.push(main.finish(format!("objective {l},{k}")));
            }
        }
        self.rows.common_constraints(&lay.t, ctx.r_th, None, &mut cons);
        self.power_rows(cfg, &mut cons);
        ConvexProgram {
            dim: lay.dim,
            objective: vec![(lay.s, 1.0)],
            constraints: cons,
        }
    }

    /// Program maximizing the smallest latency and decodability slack.
    fn margin_program(&self, cfg: &NetworkConfig, ctx: &DesignContext) -> ConvexProgram {
        let lay = &self.lay;
        let mut cons = Vec::new();
        self.rows.common_constraints(&lay.t, ctx.r_th, Some(lay.s), &mut cons);
        self.power_rows(cfg, &mut cons);
        ConvexProgram {
            dim: lay.dim,
            objective: vec![(lay.s, 1.0)],
            constraints: cons,
        }
    }

    fn power_rows(&self, cfg: &NetworkConfig, cons: &mut Vec<QuadConstraint>) {
        let lay = &self.lay;
        for l in 0..cfg.cells {
            let mut pw = QuadBuilder::new(cfg.power);
            for (slot, off) in lay.variable_slots() {
                if slot.bs() == l {
                    pw.add_squares(&lay.coords(off), 1.0);
                }
            }
            cons.push(pw.finish(format!("power {l}")));
        }
    }

    fn pack(&self, p: &PrecoderSet<f64>, scale: f64) -> Vec<f64> {
        let mut z = vec![0.0; self.lay.dim];
        self.lay.pack(p, scale, &mut z);
        z
    }

    fn warm_start(&self, cfg: &NetworkConfig, ctx: &DesignContext, from: &PrecoderSet<f64>, mu: Option<f64>) -> Vec<f64> {
        // Shrinking the precoders moves them inside the power ball but also
        // lowers the rates; when a latency row is tight the full nudge can
        // leave no feasible split, so progressively smaller nudges are tried.
        let mut fallback = None;
        for nudge in [NUDGE, 1.0 - 1e-5, 1.0] {
            let mut z = self.pack(from, nudge);
            let p = self.lay.unpack(&z, &self.fixed);
            let private = RateRows::values(&self.rows.private, &z);
            let common = RateRows::values(&self.rows.common, &z);
            let (shifted, coef) = match mu {
                None => (private.clone(), grid(cfg, |l, k| cfg.alpha(l, k))),
                Some(mu) => (
                    grid(cfg, |l, k| {
                        private[l][k]
                            - mu.max(0.0) * cfg.lambda(l, k) * user_power(&p, l, k, ctx.p_c, cfg.eta)
                    }),
                    grid(cfg, |l, k| cfg.lambda(l, k)),
                ),
            };
            let (t, s, found) = warm_split(&private, shifted, &common, coef, ctx.scheme, ctx.r_th);
            write_split(&self.lay.t, &t, &mut z);
            z[self.lay.s] = s;
            if found {
                return z;
            }
            fallback.get_or_insert(z);
        }
        fallback.expect("at least one nudge is tried")
    }

    /// Best `min_lk (r̃_p + t)/(λ p)` at precoders `p`, from surrogate rates.
    fn ee_parameter(&self, cfg: &NetworkConfig, ctx: &DesignContext, p: &PrecoderSet<f64>) -> f64 {
        let z = self.pack(p, 1.0);
        let private = RateRows::values(&self.rows.private, &z);
        let common = RateRows::values(&self.rows.common, &z);
        let inp = SplitInputs {
            private,
            budget: budgets(&common, ctx.scheme, cfg.cells),
            coef: grid(cfg, |l, k| cfg.lambda(l, k) * user_power(p, l, k, ctx.p_c, cfg.eta)),
            r_th: ctx.r_th,
            latency_rates: None,
        };
        optimal_split(&inp).map_or(f64::NEG_INFINITY, |s| s.objective)
    }
}

fn grid(cfg: &NetworkConfig, f: impl Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
    (0..cfg.cells)
        .map(|l| (0..cfg.users_per_cell).map(|k| f(l, k)).collect())
        .collect()
}

fn budgets(common: &[Vec<f64>], scheme: Scheme, cells: usize) -> Vec<Option<f64>> {
    match scheme {
        Scheme::Rsma => common
            .iter()
            .map(|r| Some(r.iter().copied().fold(f64::INFINITY, f64::min)))
            .collect(),
        Scheme::Tin => vec![None; cells],
    }
}

/// Solves an assembled convex program from a warm start and reports the
/// result; the entry point for callers that build programs themselves.
pub fn solve_subproblem(p: &ConvexProgram, warm: &[f64], opts: &SolverOptions) -> Result<Solution> {
    solve_program(p, warm, opts)
}

/// Precoder update for the max-min rate objective: maximizes `r` subject
/// to `r̃_p + t ≥ α r`, `r̃_p + t ≥ r_th`, `Σ_k t ≤ r̃_c`, `t ≥ 0` and the
/// power budgets.
pub fn solve_maxmin_rate_w<T: Real>(
    exp: &ExpansionPoint<T>,
    cfg: &NetworkConfig,
    ctx: &DesignContext,
    opts: &SolverOptions,
) -> Result<WStep<T>> {
    let wp = WProblem::new(exp, cfg, ctx.scheme)?;
    let prog = wp.program(cfg, ctx, None);
    let z0 = wp.warm_start(cfg, ctx, &wp.fixed, None);
    let sol = solve_program(&prog, &z0, opts)?;
    Ok(WStep {
        precoders: pt(&wp.lay.unpack(&sol.z, &wp.fixed)),
        split: split_from(cfg, &wp.lay.t, &sol.z),
        objective: sol.objective,
        iterations: sol.iterations,
        mu: Vec::new(),
    })
}

/// Precoder update that maximizes the smallest slack `v` of the latency
/// and decodability constraints, `r̃_p + t − r_th ≥ v` and
/// `r̃_c − Σ_k t ≥ v`. Used to reach a feasible point; the returned
/// objective is `v`.
pub fn solve_margin_w<T: Real>(
    exp: &ExpansionPoint<T>,
    cfg: &NetworkConfig,
    ctx: &DesignContext,
    opts: &SolverOptions,
) -> Result<WStep<T>> {
    let wp = WProblem::new(exp, cfg, ctx.scheme)?;
    let prog = wp.margin_program(cfg, ctx);
    let mut z = wp.pack(&wp.fixed, NUDGE);
    if let Some(t) = &wp.lay.t {
        for &i in t.iter().flatten() {
            z[i] = 1e-6;
        }
    }
    let v = wp.lay.s;
    let lo = prog
        .constraints
        .iter()
        .filter(|c| c.linear.iter().any(|&(i, _)| i == v))
        .map(|c| c.value(&z))
        .fold(f64::INFINITY, f64::min);
    z[v] = lo - 1e-3 * (1.0 + lo.abs());
    let sol = solve_program(&prog, &z, opts)?;
    Ok(WStep {
        precoders: pt(&wp.lay.unpack(&sol.z, &wp.fixed)),
        split: split_from(cfg, &wp.lay.t, &sol.z),
        objective: sol.objective,
        iterations: sol.iterations,
        mu: Vec::new(),
    })
}

/// Precoder update for max-min energy efficiency by the generalized
/// Dinkelbach method on the surrogate problem.
///
/// Each iteration maximizes `e` subject to
/// `r̃_p + t − μ λ p(W) ≥ λ e` and the rate-update constraints, then
/// sets `μ` to the best ratio at the new precoders. A new iterate whose
/// ratio falls below the current `μ` is discarded and the loop stops. A
/// drop larger than `1e-6` relative after a subproblem solved to optimality
/// is reported as [`Error::Nonmonotone`].
pub fn solve_maxmin_ee_w<T: Real>(
    exp: &ExpansionPoint<T>,
    cfg: &NetworkConfig,
    ctx: &DesignContext,
    gamma2: f64,
    max_iterations: usize,
    opts: &SolverOptions,
) -> Result<WStep<T>> {
    let wp = WProblem::new(exp, cfg, ctx.scheme)?;
    let mut w = wp.fixed.clone();
    let mut t = wp.warm_start(cfg, ctx, &w, None);
    let mut mu = wp.ee_parameter(cfg, ctx, &w);
    let mut mus = vec![mu];
    let mut iterations = 0;
    for _ in 0..max_iterations {
        let prog = wp.program(cfg, ctx, Some(mu));
        let z0 = wp.warm_start(cfg, ctx, &w, Some(mu));
        let sol = solve_program(&prog, &z0, opts)?;
        iterations += sol.iterations;
        let w_new = wp.lay.unpack(&sol.z, &wp.fixed);
        let mu_new = wp.ee_parameter(cfg, ctx, &w_new);
        let scale = mu.abs().max(1e-12);
        if mu_new < mu {
            if sol.status == SolveStatus::Optimal && mu - mu_new > 1e-6 * scale {
                return Err(Error::Nonmonotone {
                    previous: mu,
                    current: mu_new,
                });
            }
            break;
        }
        w = w_new;
        t = sol.z;
        mus.push(mu_new);
        let done = (mu_new - mu) / scale < gamma2;
        mu = mu_new;
        if done {
            break;
        }
    }
    Ok(WStep {
        precoders: pt(&w),
        split: split_from(cfg, &wp.lay.t, &t),
        objective: mu,
        iterations,
        mu: mus,
    })
}

/// Feasible set imposed by an RIS update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RisUpdate {
    /// `|υ| ≤ 1`.
    UnitDisc,
    /// `|υ| ≤ 1` plus the linearized `|υ|² ≥ 1 − δ` around the current point.
    Ccp { delta: f64 },
}

fn flatten_ris<T: Real>(ris: &RisPhases<T>) -> Vec<Complex<f64>> {
    ris.upsilon
        .iter()
        .flatten()
        .map(|v| Complex::new(to_f64(v.re), to_f64(v.im)))
        .collect()
}

fn unflatten_ris<T: Real>(like: &RisPhases<T>, v: &[Complex<f64>]) -> RisPhases<T> {
    let mut out = like.clone();
    let mut it = v.iter();
    for x in out.upsilon.iter_mut().flatten() {
        let c = it.next().expect("length matches");
        *x = Complex::new(lit(c.re), lit(c.im));
    }
    out
}

/// Solves the convexified RIS problem and returns the raw minimizer
/// (not normalized).
fn ris_subproblem<T: Real>(
    exp: &ExpansionPoint<T>,
    ch: &ChannelSet<T>,
    cfg: &NetworkConfig,
    ctx: &DesignContext,
    update: RisUpdate,
    opts: &SolverOptions,
) -> Result<(Vec<Complex<f64>>, CommonRateSplit<T>, Solution)> {
    let ups = flatten_ris(&exp.ris);
    let lay = RisLayout::new(cfg.cells, cfg.users_per_cell, ups.len(), ctx.scheme);
    let geo = RisGeometry::new(ch);
    let p = p64(&exp.precoders);
    let mut private = Vec::with_capacity(cfg.cells);
    let mut common = Vec::new();
    for l in 0..cfg.cells {
        let mut prow = Vec::new();
        let mut crow = Vec::new();
        for k in 0..cfg.users_per_cell {
            if ctx.scheme == Scheme::Rsma {
                let (sp, sc) = build_surrogates_ris(exp, cfg, l, k)?;
                prow.push(lower_ris(&sur64(&sp), &geo, &lay, &p));
                crow.push(lower_ris(&sur64(&sc), &geo, &lay, &p));
            } else {
                let sp = build_private_surrogate_w(exp, cfg, l, k)?;
                prow.push(lower_ris(&sur64(&sp), &geo, &lay, &p));
            }
        }
        private.push(prow);
        if ctx.scheme == Scheme::Rsma {
            common.push(crow);
        }
    }
    let rows = RateRows { private, common };
    let coef = grid(cfg, |l, k| ctx.coef(cfg, &exp.precoders, l, k));

    let mut cons = Vec::new();
    for l in 0..cfg.cells {
        for k in 0..cfg.users_per_cell {
            let mut main = rows.private[l][k].clone();
            if let Some(t) = &lay.t {
                main.add_linear(t[l][k], 1.0);
            }
            main.add_linear(lay.s, -coef[l][k]);
            cons.push(main.finish(format!("objective {l},{k}")));
        }
    }
    rows.common_constraints(&lay.t, ctx.r_th, None, &mut cons);
    for (j, u) in ups.iter().enumerate() {
        let mut disc = QuadBuilder::new(1.0);
        disc.add_squares(&[2 * j, 2 * j + 1], 1.0);
        cons.push(disc.finish(format!("unit disc {j}")));
        if let RisUpdate::Ccp { delta } = update {
            cons.push(QuadConstraint::affine(
                format!("ccp {j}"),
                -u.norm_sqr() - (1.0 - delta),
                vec![(2 * j, 2.0 * u.re), (2 * j + 1, 2.0 * u.im)],
            ));
        }
    }
    let prog = ConvexProgram {
        dim: lay.dim,
        objective: vec![(lay.s, 1.0)],
        constraints: cons,
    };

    // The CCP row at the shrunk point has slack δ − 2(1 − shrink).
    let shrink = match update {
        RisUpdate::UnitDisc => NUDGE,
        RisUpdate::Ccp { delta } => NUDGE.max(1.0 - delta / 4.0),
    };
    let mut z = vec![0.0; lay.dim];
    for (j, u) in ups.iter().enumerate() {
        z[2 * j] = u.re * shrink;
        z[2 * j + 1] = u.im * shrink;
    }
    let pr = RateRows::values(&rows.private, &z);
    let cr = RateRows::values(&rows.common, &z);
    let (t, s, _) = warm_split(&pr, pr.clone(), &cr, coef, ctx.scheme, ctx.r_th);
    write_split(&lay.t, &t, &mut z);
    z[lay.s] = s;

    let sol = solve_program(&prog, &z, opts)?;
    let v = (0..ups.len())
        .map(|j| Complex::new(sol.z[2 * j], sol.z[2 * j + 1]))
        .collect();
    Ok((v, split_from(cfg, &lay.t, &sol.z), sol))
}

/// RIS update over the unit disc: maximizes the max-min objective of the
/// kind in `ctx` with the precoders fixed at the expansion point.
pub fn solve_ris_unitdisc<T: Real>(
    exp: &ExpansionPoint<T>,
    ch: &ChannelSet<T>,
    cfg: &NetworkConfig,
    ctx: &DesignContext,
    opts: &SolverOptions,
) -> Result<RisStep<T>> {
    if exp.ris.upsilon.iter().all(|v| v.is_empty()) {
        return unchanged(exp, cfg, ctx);
    }
    let (v, split, sol) = ris_subproblem(exp, ch, cfg, ctx, RisUpdate::UnitDisc, opts)?;
    Ok(RisStep {
        ris: unflatten_ris(&exp.ris, &v),
        split,
        objective: sol.objective,
        iterations: sol.iterations,
        acceptance: None,
    })
}

fn unchanged<T: Real>(exp: &ExpansionPoint<T>, cfg: &NetworkConfig, ctx: &DesignContext) -> Result<RisStep<T>> {
    let val = evaluate_design(ctx, cfg, &exp.h, &exp.precoders)?;
    let split = val.split.as_ref().map_or_else(
        || CommonRateSplit::zeros(cfg),
        |s| CommonRateSplit {
            t: s.t.iter().map(|r| r.iter().map(|&x| lit(x)).collect()).collect(),
        },
    );
    Ok(RisStep {
        ris: exp.ris.clone(),
        split,
        objective: val.objective(),
        iterations: 0,
        acceptance: None,
    })
}

/// RIS update over the unit circle by the convex-concave procedure.
///
/// The solution of the relaxed problem is projected onto `|υ| = 1`
/// (elements with `|υ| < 1e-9` keep their previous value). The projected
/// point is accepted only when the true objective, with the common-rate
/// split re-optimized, does not decrease; otherwise the previous
/// coefficients are returned.
pub fn solve_ris_unitmod<T: Real>(
    exp: &ExpansionPoint<T>,
    ch: &ChannelSet<T>,
    cfg: &NetworkConfig,
    ctx: &DesignContext,
    delta: f64,
    opts: &SolverOptions,
) -> Result<RisStep<T>> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::validation("delta", "must lie in (0, 1)"));
    }
    if exp.ris.upsilon.iter().all(|v| v.is_empty()) {
        return unchanged(exp, cfg, ctx);
    }
    let (v, _, sol) = ris_subproblem(exp, ch, cfg, ctx, RisUpdate::Ccp { delta }, opts)?;
    let prev = flatten_ris(&exp.ris);
    let projected: Vec<Complex<f64>> = v
        .iter()
        .zip(&prev)
        .map(|(x, p)| {
            let r = x.norm_sqr().sqrt();
            if r < 1e-9 {
                *p
            } else {
                x / r
            }
        })
        .collect();
    let candidate = unflatten_ris::<T>(&exp.ris, &projected);

    let before = evaluate_design(ctx, cfg, &exp.h, &exp.precoders)?;
    let h_new = effective_channels(ch, &candidate);
    let after = evaluate_design(ctx, cfg, &h_new, &exp.precoders)?;
    let (before_obj, after_obj) = (before.objective(), after.objective());
    let accepted = after_obj >= before_obj;
    let (ris, chosen) = if accepted {
        (candidate, after)
    } else {
        (exp.ris.clone(), before)
    };
    let split = chosen.split.as_ref().map_or_else(
        || CommonRateSplit::zeros(cfg),
        |s| CommonRateSplit {
            t: s.t.iter().map(|r| r.iter().map(|&x| lit(x)).collect()).collect(),
        },
    );
    Ok(RisStep {
        ris,
        split,
        objective: sol.objective,
        iterations: sol.iterations,
        acceptance: Some(RisAcceptance {
            before: before_obj,
            candidate: after_obj,
            accepted,
        }),
    })
}

/// Kind-dispatching precoder update with the default Dinkelbach settings.
pub fn solve_w_step<T: Real>(
    exp: &ExpansionPoint<T>,
    cfg: &NetworkConfig,
    ctx: &DesignContext,
    gamma2: f64,
    opts: &SolverOptions,
) -> Result<WStep<T>> {
    match ctx.kind {
        ObjectiveKind::MaxMinRate => solve_maxmin_rate_w(exp, cfg, ctx, opts),
        ObjectiveKind::MaxMinEE => solve_maxmin_ee_w(exp, cfg, ctx, gamma2, GDA_MAX_ITERATIONS, opts),
    }
}
