//! Exact common-rate split for fixed rates.
//!
//! With the private and common rates frozen, choosing `t` to maximize the
//! minimum weighted objective is a linear program that decouples per cell:
//! user `k` needs `t_k ≥ max(0, c_k·s − r_p,k, r_th − r_p,k)` and the
//! cell's budget is `Σ_k t_k ≤ r_c,l`. The largest feasible `s` is found
//! by walking the breakpoints of the piecewise-linear demand.

/// Per-cell inputs of the split problem.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitInputs {
    /// Private rates `r_p[l][k]`.
    pub private: Vec<Vec<f64>>,
    /// Common-rate budget per cell (`min_k r_c,lk`), `None` when the
    /// scheme has no common message.
    pub budget: Vec<Option<f64>>,
    /// Objective coefficients `c[l][k]` (rate weights, or `λ·p` for EE).
    pub coef: Vec<Vec<f64>>,
    /// Latency threshold in nats.
    pub r_th: f64,
    /// Rates checked against the latency threshold when they differ from
    /// `private` (the energy-efficiency subproblem shifts `private`).
    pub latency_rates: Option<Vec<Vec<f64>>>,
}

impl SplitInputs {
    fn floor(&self, l: usize) -> Vec<f64> {
        let rates = self.latency_rates.as_ref().unwrap_or(&self.private);
        rates[l].iter().map(|&r| (self.r_th - r).max(0.0)).collect()
    }
}

/// Optimal split and objective value.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitSolution {
    pub t: Vec<Vec<f64>>,
    /// Largest achievable `min_k (r_p,k + t_k)/c_k`.
    pub objective: f64,
}

fn demand(rp: &[f64], coef: &[f64], floor: &[f64], s: f64) -> f64 {
    rp.iter()
        .zip(coef)
        .zip(floor)
        .map(|((&r, &c), &a)| a.max(c * s - r))
        .sum()
}

/// Largest `s` with `Σ_k max(a_k, c_k s − r_k) ≤ budget`.
fn cell_max(rp: &[f64], coef: &[f64], floor: &[f64], budget: f64) -> f64 {
    let mut kinks: Vec<(f64, f64)> = rp
        .iter()
        .zip(coef)
        .zip(floor)
        .map(|((&r, &c), &a)| ((r + a) / c, c))
        .collect();
    kinks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let base: f64 = floor.iter().sum();
    // Between kinks the demand is base + Σ_{active} (c s − r − a).
    let mut slope = 0.0;
    let mut intercept = base;
    for (idx, &(s_k, c)) in kinks.iter().enumerate() {
        // Activate user at its kink.
        slope += c;
        intercept -= c * s_k;
        let next = kinks.get(idx + 1).map_or(f64::INFINITY, |n| n.0);
        let s_star = (budget - intercept) / slope;
        if s_star <= next {
            return s_star;
        }
    }
    f64::INFINITY
}

/// Solves the split LP. Returns `None` when the latency thresholds cannot
/// be met within some cell's budget.
pub fn optimal_split(inp: &SplitInputs) -> Option<SplitSolution> {
    let mut s = f64::INFINITY;
    let mut floors = Vec::with_capacity(inp.private.len());
    for (l, rp) in inp.private.iter().enumerate() {
        let floor: Vec<f64> = match inp.budget[l] {
            Some(_) => inp.floor(l),
            None => vec![0.0; rp.len()],
        };
        let s_l = match inp.budget[l] {
            Some(b) => {
                if floor.iter().sum::<f64>() > b {
                    return None;
                }
                cell_max(rp, &inp.coef[l], &floor, b)
            }
            None => {
                let lat = inp.latency_rates.as_ref().unwrap_or(&inp.private);
                if lat[l].iter().any(|&r| r < inp.r_th) {
                    return None;
                }
                rp.iter()
                    .zip(&inp.coef[l])
                    .map(|(&r, &c)| r / c)
                    .fold(f64::INFINITY, f64::min)
            }
        };
        s = s.min(s_l);
        floors.push(floor);
    }
    let t = inp
        .private
        .iter()
        .enumerate()
        .map(|(l, rp)| match inp.budget[l] {
            Some(_) => rp
                .iter()
                .zip(&inp.coef[l])
                .zip(&floors[l])
                .map(|((&r, &c), &a)| a.max(c * s - r))
                .collect(),
            None => vec![0.0; rp.len()],
        })
        .collect();
    Some(SplitSolution { t, objective: s })
}

/// A split that satisfies every inequality strictly at objective `s`,
/// spreading each cell's unused budget evenly over `t` and the budget
/// slack. Returns `None` when some cell has no slack left.
pub fn interior_split(inp: &SplitInputs, s: f64) -> Option<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(inp.private.len());
    for (l, rp) in inp.private.iter().enumerate() {
        let Some(b) = inp.budget[l] else {
            out.push(vec![0.0; rp.len()]);
            continue;
        };
        let floor = inp.floor(l);
        let need = demand(rp, &inp.coef[l], &floor, s);
        let slack = b - need;
        if !(slack > 0.0) {
            return None;
        }
        let eps = slack / (rp.len() as f64 + 1.0);
        out.push(
            rp.iter()
                .zip(&inp.coef[l])
                .zip(&floor)
                .map(|((&r, &c), &a)| a.max(c * s - r) + eps)
                .collect(),
        );
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(rp: Vec<f64>, budget: Option<f64>, r_th: f64) -> SplitInputs {
        let k = rp.len();
        SplitInputs {
            private: vec![rp],
            budget: vec![budget],
            coef: vec![vec![1.0; k]],
            r_th,
            latency_rates: None,
        }
    }

    #[test]
    fn equalizes_weak_users() {
        // Budget 1 lifts users at 0.2 and 0.6 to a common level 0.9.
        let sol = optimal_split(&inputs(vec![0.2, 0.6, 2.0], Some(1.0), 0.0)).unwrap();
        assert!((sol.objective - 0.9).abs() < 1e-12);
        assert!((sol.t[0][0] - 0.7).abs() < 1e-12);
        assert!((sol.t[0][1] - 0.3).abs() < 1e-12);
        assert_eq!(sol.t[0][2], 0.0);
    }

    #[test]
    fn no_common_message() {
        let sol = optimal_split(&inputs(vec![0.5, 0.3], None, 0.0)).unwrap();
        assert_eq!(sol.objective, 0.3);
        assert!(optimal_split(&inputs(vec![0.5, 0.3], None, 0.4)).is_none());
    }

    #[test]
    fn latency_floor_consumes_budget() {
        let sol = optimal_split(&inputs(vec![0.1, 3.0], Some(0.5), 0.4)).unwrap();
        // 0.3 goes to the floor, 0.2 more lifts user 0 to 0.6.
        assert!((sol.objective - 0.6).abs() < 1e-12);
        assert!(optimal_split(&inputs(vec![0.1, 3.0], Some(0.2), 0.4)).is_none());
    }

    #[test]
    fn interior_split_is_strict() {
        let inp = inputs(vec![0.2, 0.6], Some(1.0), 0.0);
        let t = interior_split(&inp, 0.7).unwrap();
        assert!(t[0].iter().all(|&x| x > 0.0));
        assert!(t[0].iter().sum::<f64>() < 1.0);
        assert!(0.2 + t[0][0] > 0.7 && 0.6 + t[0][1] > 0.7);
    }
}
