//! Log-barrier interior-point method for
//!
//! ```text
//! maximize cᵀz  subject to  g_j(z) = c_j + b_jᵀz − z_Sjᵀ Q_j z_Sj ≥ 0,
//! ```
//!
//! with every `Q_j` symmetric positive semidefinite, so each `g_j` is
//! concave. A phase-I problem supplies a strictly feasible start when the
//! caller's point is not one.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One concave quadratic constraint `g(z) ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadConstraint {
    pub label: String,
    pub constant: f64,
    /// Sparse linear part `(index, coefficient)`.
    pub linear: Vec<(usize, f64)>,
    /// Variables entering the quadratic part.
    pub support: Vec<usize>,
    /// Row-major PSD matrix of size `support.len()²`.
    pub q: Vec<f64>,
}

impl QuadConstraint {
    /// Affine constraint `constant + Σ b_i z_i ≥ 0`.
    pub fn affine(label: impl Into<String>, constant: f64, linear: Vec<(usize, f64)>) -> Self {
        Self {
            label: label.into(),
            constant,
            linear,
            support: Vec::new(),
            q: Vec::new(),
        }
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        let mut v = self.constant;
        for &(i, b) in &self.linear {
            v += b * z[i];
        }
        let m = self.support.len();
        for (a, &i) in self.support.iter().enumerate() {
            let row = &self.q[a * m..(a + 1) * m];
            let mut acc = 0.0;
            for (qv, &j) in row.iter().zip(&self.support) {
                acc += qv * z[j];
            }
            v -= z[i] * acc;
        }
        v
    }

    /// Value at `z`; the gradient is written to `grad` at the positions
    /// listed in `idx` (sorted, every index the constraint touches).
    fn value_gradient(&self, z: &[f64], grad: &mut [f64], idx: &mut Vec<usize>) -> f64 {
        idx.clear();
        idx.extend(self.linear.iter().map(|&(i, _)| i));
        idx.extend(&self.support);
        idx.sort_unstable();
        idx.dedup();
        for &i in idx.iter() {
            grad[i] = 0.0;
        }
        let mut v = self.constant;
        for &(i, b) in &self.linear {
            v += b * z[i];
            grad[i] += b;
        }
        let m = self.support.len();
        for (a, &i) in self.support.iter().enumerate() {
            let row = &self.q[a * m..(a + 1) * m];
            let acc: f64 = row.iter().zip(&self.support).map(|(qv, &j)| qv * z[j]).sum();
            v -= z[i] * acc;
            grad[i] -= 2.0 * acc;
        }
        v
    }

    /// Adds `w·Q` into the lower triangle of the column-major `n × n` `h`.
    fn add_curvature_lower(&self, w: f64, n: usize, h: &mut [f64]) {
        let m = self.support.len();
        for (a, &i) in self.support.iter().enumerate() {
            let row = &self.q[a * m..(a + 1) * m];
            for (&qv, &j) in row.iter().zip(&self.support) {
                if i >= j {
                    h[j * n + i] += w * qv;
                }
            }
        }
    }

    fn shifted(&self, extra: usize) -> Self {
        let mut c = self.clone();
        c.linear.push((extra, 1.0));
        c
    }
}

/// `maximize cᵀz` subject to concave quadratic constraints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexProgram {
    pub dim: usize,
    /// Sparse objective `(index, coefficient)`.
    pub objective: Vec<(usize, f64)>,
    pub constraints: Vec<QuadConstraint>,
}

impl ConvexProgram {
    pub fn objective_value(&self, z: &[f64]) -> f64 {
        self.objective.iter().map(|&(i, c)| c * z[i]).sum()
    }

    /// Smallest constraint value at `z`.
    pub fn min_slack(&self, z: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.value(z))
            .fold(f64::INFINITY, f64::min)
    }

    /// JSON dump for cross-checking with an external solver.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Tolerances of the interior-point solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Allowed constraint violation of returned points.
    pub feasibility_tol: f64,
    /// Bound on the duality gap at termination.
    pub optimality_tol: f64,
    pub max_iterations: usize,
    /// Barrier parameter growth factor.
    pub barrier_growth: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-6,
            max_iterations: 200,
            barrier_growth: 10.0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.feasibility_tol > 0.0 && self.optimality_tol > 0.0 && self.barrier_growth > 1.0)
        {
            return Err(Error::validation(
                "solver_options",
                "tolerances must be positive and barrier growth above 1",
            ));
        }
        Ok(())
    }
}

/// Termination status of a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    /// Gap and residual tolerances met.
    Optimal,
    /// Iteration cap reached at a feasible point.
    IterationLimit,
    /// The solver could not improve on the warm start, which is returned.
    WarmStart,
}

/// Result of [`solve_program`].
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub z: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub iterations: usize,
}

const ALPHA: f64 = 0.01;
/// Half the squared Newton decrement at which a stage counts as centered.
const CENTERING_TOL: f64 = 1e-10;
const BETA: f64 = 0.5;

/// Solves `h x = rhs` for symmetric positive (semi)definite `h`, reading
/// only its lower triangle.
fn solve_spd(mut h: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let n = h.nrows();
    let scale = (0..n).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut reg = 1e-14 * scale;
    for _ in 0..8 {
        let mut hr = h.clone();
        for i in 0..n {
            hr[(i, i)] += reg;
        }
        if let Some(c) = hr.cholesky() {
            let x = c.solve(rhs);
            if x.iter().all(|v| v.is_finite()) {
                return Some(x);
            }
        }
        reg *= 100.0;
    }
    // Last resort for rank-deficient systems.
    h.fill_upper_triangle_with_lower_triangle();
    for i in 0..n {
        h[(i, i)] += reg;
    }
    h.lu().solve(rhs).filter(|x| x.iter().all(|v| v.is_finite()))
}

/// Value and derivatives of `−t·cᵀz − Σ ln g_j(z)`, or `None` outside the
/// strict interior.
fn barrier(p: &ConvexProgram, z: &[f64], t: f64) -> Option<f64> {
    let mut f = -t * p.objective_value(z);
    for c in &p.constraints {
        let g = c.value(z);
        if !(g > 0.0) {
            return None;
        }
        f -= g.ln();
    }
    Some(f)
}

/// Gradient and Hessian of the barrier function at a strictly feasible
/// `z`. Only the lower triangle of the Hessian is filled.
fn barrier_derivatives(p: &ConvexProgram, z: &[f64], t: f64) -> (DVector<f64>, DMatrix<f64>) {
    let n = p.dim;
    let mut grad = DVector::<f64>::zeros(n);
    for &(i, c) in &p.objective {
        grad[i] -= t * c;
    }
    let mut h = vec![0.0; n * n];
    let mut gr = vec![0.0; n];
    let mut idx = Vec::new();
    for c in &p.constraints {
        let g = c.value_gradient(z, &mut gr, &mut idx);
        // −∇² ln g = 2Q/g + ∇g∇gᵀ/g².
        c.add_curvature_lower(2.0 / g, n, &mut h);
        let w = 1.0 / (g * g);
        for (ia, &a) in idx.iter().enumerate() {
            let ga = gr[a];
            grad[a] -= ga / g;
            if ga == 0.0 {
                continue;
            }
            let col_scale = w * ga;
            for &b in &idx[..=ia] {
                h[b * n + a] += col_scale * gr[b];
            }
        }
    }
    (grad, DMatrix::from_vec(n, n, h))
}

/// Initial barrier weight balancing the objective against the barrier
/// gradient in the Hessian metric.
fn initial_weight(p: &ConvexProgram, z: &[f64]) -> f64 {
    let (g0, h) = barrier_derivatives(p, z, 0.0);
    let mut c = DVector::<f64>::zeros(p.dim);
    for &(i, v) in &p.objective {
        c[i] = v;
    }
    let Some(hc) = solve_spd(h, &c) else { return 1.0 };
    let num = -hc.dot(&g0);
    let den = hc.dot(&c);
    let t = -num / den;
    if t.is_finite() && t > 0.0 {
        t.clamp(1e-3, 1e6)
    } else {
        1.0
    }
}

/// Log-barrier path following from a strictly feasible `z0`. Each stage
/// centers with damped Newton steps and then multiplies the barrier
/// weight; the suboptimality after a stage is at most `m/t`.
/// `early_stop` is checked after every accepted step.
fn barrier_method(
    p: &ConvexProgram,
    z0: &[f64],
    opts: &SolverOptions,
    early_stop: Option<&dyn Fn(&[f64]) -> bool>,
) -> Result<(Vec<f64>, usize, bool)> {
    let m = p.constraints.len();
    let mut z = z0.to_vec();
    if p.min_slack(&z) <= 0.0 {
        return Err(Error::Numerical("interior-point start is not strictly feasible".into()));
    }
    if m == 0 {
        return Ok((z, 0, true));
    }
    let mut t = initial_weight(p, &z);
    let mut iters = 0;
    loop {
        // Centering.
        let mut f = barrier(p, &z, t).expect("iterate stays interior");
        while iters < opts.max_iterations {
            let (grad, h) = barrier_derivatives(p, &z, t);
            let dz = solve_spd(h, &(-&grad))
                .ok_or_else(|| Error::Numerical("Newton system factorization failed".into()))?;
            let decrement = -grad.dot(&dz);
            if !(decrement / 2.0 > CENTERING_TOL) {
                break;
            }
            iters += 1;
            let mut s = 1.0;
            let mut moved = false;
            while s > 1e-14 {
                let zn: Vec<f64> = z.iter().zip(dz.iter()).map(|(a, b)| a + s * b).collect();
                if let Some(fn_) = barrier(p, &zn, t) {
                    if fn_ <= f - ALPHA * s * decrement {
                        z = zn;
                        f = fn_;
                        moved = true;
                        break;
                    }
                }
                s *= BETA;
            }
            if let Some(stop) = early_stop {
                if stop(&z) {
                    return Ok((z, iters, true));
                }
            }
            if !moved {
                break;
            }
        }
        if m as f64 / t <= opts.optimality_tol {
            return Ok((z, iters, true));
        }
        if iters >= opts.max_iterations {
            return Ok((z, iters, false));
        }
        t *= opts.barrier_growth;
    }
}

/// Searches for a strictly feasible point starting from `z0`. Returns
/// `None` when the minimal uniform violation stays nonnegative.
fn phase_one(p: &ConvexProgram, z0: &[f64], opts: &SolverOptions) -> Result<Option<(Vec<f64>, usize)>> {
    let n = p.dim;
    let worst = -p.min_slack(z0);
    let sigma0 = worst.max(0.0) + 1.0;
    let mut constraints: Vec<QuadConstraint> = p.constraints.iter().map(|c| c.shifted(n)).collect();
    // Keeps the auxiliary variable bounded below.
    constraints.push(QuadConstraint::affine("phase-one floor", sigma0, vec![(n, 1.0)]));
    let aux = ConvexProgram {
        dim: n + 1,
        objective: vec![(n, -1.0)],
        constraints,
    };
    let mut start = z0.to_vec();
    start.push(sigma0);
    let margin = 1e-9;
    let stop = |z: &[f64]| z[n] < -margin && p.min_slack(&z[..n]) > 0.0;
    let (z, it, _) = barrier_method(&aux, &start, opts, Some(&stop))?;
    let point = z[..n].to_vec();
    if p.min_slack(&point) > 0.0 {
        Ok(Some((point, it)))
    } else {
        Ok(None)
    }
}

/// Solves `p` from the warm start `z0`.
///
/// The returned point is never worse than the warm start when the warm
/// start is feasible within `feasibility_tol`. If no strictly feasible
/// point exists but the warm start is feasible, the warm start is returned
/// with status [`SolveStatus::Optimal`].
pub fn solve_program(p: &ConvexProgram, z0: &[f64], opts: &SolverOptions) -> Result<Solution> {
    opts.validate()?;
    if z0.len() != p.dim {
        return Err(Error::validation("warm_start", "dimension mismatch"));
    }
    let warm_feasible = p.min_slack(z0) >= -opts.feasibility_tol;
    let warm_obj = p.objective_value(z0);
    let warm = |status, iterations| Solution {
        z: z0.to_vec(),
        objective: warm_obj,
        status,
        iterations,
    };

    let (start, mut iterations) = if p.min_slack(z0) > 0.0 {
        (z0.to_vec(), 0)
    } else {
        match phase_one(p, z0, opts)? {
            Some(s) => s,
            None if warm_feasible => return Ok(warm(SolveStatus::Optimal, 0)),
            None => {
                return Err(Error::Infeasible(format!(
                    "no strictly feasible point; worst violation {:e}",
                    -p.min_slack(z0)
                )))
            }
        }
    };

    let (z, it, converged) = match barrier_method(p, &start, opts, None) {
        Ok(r) => r,
        Err(_) if warm_feasible => return Ok(warm(SolveStatus::WarmStart, iterations)),
        Err(e) => return Err(e),
    };
    iterations += it;
    let obj = p.objective_value(&z);
    if warm_feasible && obj < warm_obj {
        return Ok(warm(SolveStatus::WarmStart, iterations));
    }
    Ok(Solution {
        z,
        objective: obj,
        status: if converged {
            SolveStatus::Optimal
        } else {
            SolveStatus::IterationLimit
        },
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// maximize r s.t. −w² + 2w − r ≥ 0, 1 − w² ≥ 0.
    fn toy() -> ConvexProgram {
        ConvexProgram {
            dim: 2,
            objective: vec![(1, 1.0)],
            constraints: vec![
                QuadConstraint {
                    label: "rate".into(),
                    constant: 0.0,
                    linear: vec![(0, 2.0), (1, -1.0)],
                    support: vec![0],
                    q: vec![1.0],
                },
                QuadConstraint {
                    label: "power".into(),
                    constant: 1.0,
                    linear: vec![],
                    support: vec![0],
                    q: vec![1.0],
                },
            ],
        }
    }

    #[test]
    fn one_dimensional_calculus() {
        let s = solve_program(&toy(), &[0.5, 0.0], &SolverOptions::default()).unwrap();
        assert!((s.z[0] - 1.0).abs() < 1e-3, "{:?}", s.z);
        assert!((s.objective - 1.0).abs() < 1e-6);
        assert_eq!(s.status, SolveStatus::Optimal);
    }

    #[test]
    fn infeasible_start_goes_through_phase_one() {
        let s = solve_program(&toy(), &[3.0, 5.0], &SolverOptions::default()).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-6);
    }

    #[test]
    fn only_warm_start_feasible() {
        // z = 0 is the only point with −z² ≥ 0.
        let p = ConvexProgram {
            dim: 1,
            objective: vec![(0, 1.0)],
            constraints: vec![QuadConstraint {
                label: "tight".into(),
                constant: 0.0,
                linear: vec![],
                support: vec![0],
                q: vec![1.0],
            }],
        };
        let s = solve_program(&p, &[0.0], &SolverOptions::default()).unwrap();
        assert_eq!(s.z, vec![0.0]);
        assert_eq!(s.status, SolveStatus::Optimal);
    }

    #[test]
    fn truly_infeasible_is_reported() {
        let p = ConvexProgram {
            dim: 1,
            objective: vec![(0, 1.0)],
            constraints: vec![QuadConstraint {
                label: "impossible".into(),
                constant: -1.0,
                linear: vec![],
                support: vec![0],
                q: vec![1.0],
            }],
        };
        assert!(matches!(
            solve_program(&p, &[0.3], &SolverOptions::default()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn program_dump_round_trips() {
        let p = toy();
        let back: ConvexProgram = serde_json::from_str(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
    }
}
