use proptest::prelude::*;
use rsma_core::split::{optimal_split, SplitInputs};
use rsma_core::Modes;

/// Independent feasibility check of objective level `s` in one cell.
fn cell_feasible(rp: &[f64], coef: &[f64], budget: f64, r_th: f64, s: f64) -> bool {
    let need: f64 = rp
        .iter()
        .zip(coef)
        .map(|(&r, &c)| (c * s - r).max(r_th - r).max(0.0))
        .sum();
    need <= budget
}

fn inputs() -> impl Strategy<Value = SplitInputs> {
    (1usize..3, 1usize..4).prop_flat_map(|(cells, users)| {
        (
            prop::collection::vec(prop::collection::vec(0.0..3.0f64, users), cells),
            prop::collection::vec(0.0..4.0f64, cells),
            prop::collection::vec(prop::collection::vec(0.2..2.0f64, users), cells),
            0.0..1.0f64,
        )
            .prop_map(|(private, budget, coef, r_th)| SplitInputs {
                private,
                budget: budget.into_iter().map(Some).collect(),
                coef,
                r_th,
                latency_rates: None,
            })
    })
}

proptest! {
    #[test]
    fn split_is_feasible_and_optimal(inp in inputs()) {
        match optimal_split(&inp) {
            Some(sol) => {
                for (l, t) in sol.t.iter().enumerate() {
                    let b = inp.budget[l].unwrap();
                    prop_assert!(t.iter().sum::<f64>() <= b + 1e-9 * b.max(1.0));
                    for (k, &tk) in t.iter().enumerate() {
                        prop_assert!(tk >= 0.0);
                        let r = inp.private[l][k] + tk;
                        prop_assert!(r >= inp.r_th - 1e-9);
                        prop_assert!(r / inp.coef[l][k] >= sol.objective - 1e-9 * sol.objective.abs().max(1.0));
                    }
                }
                // No cell can reach a slightly higher level.
                let up = sol.objective + 1e-6 * sol.objective.abs().max(1.0);
                let all = inp.private.iter().enumerate().all(|(l, rp)| {
                    cell_feasible(rp, &inp.coef[l], inp.budget[l].unwrap(), inp.r_th, up)
                });
                prop_assert!(!all);
            }
            None => {
                let some_cell_short = inp.private.iter().enumerate().any(|(l, rp)| {
                    !cell_feasible(rp, &inp.coef[l], inp.budget[l].unwrap(), inp.r_th, f64::NEG_INFINITY)
                });
                prop_assert!(some_cell_short);
            }
        }
    }

    #[test]
    fn mode_strings_round_trip(
        tin in any::<bool>(),
        ris in 0usize..3,
        shannon in any::<bool>(),
        single in any::<bool>(),
    ) {
        let mut parts = vec![if tin { "TIN" } else { "RSMA" }];
        match ris {
            1 => parts.push("RandomRIS"),
            2 => parts.push("NoRIS"),
            _ => {}
        }
        if shannon {
            parts.push("ShannonDesign");
        }
        if single {
            parts.push("SingleStream");
        }
        let text = parts.join("+");
        let m: Modes = text.to_lowercase().parse().unwrap();
        prop_assert_eq!(m.to_string(), text);
    }
}
