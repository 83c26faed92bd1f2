use rsma_core::model::StopReason;
use rsma_core::rates::FblParams;
use rsma_core::{
    evaluate_allocation, initialize, optimize, single_stream_rate, transmit_power, Allocation, ChannelSet,
    FeasibilitySet, Modes, NetworkConfig, ObjectiveKind, OptimizerOptions,
};

fn small() -> NetworkConfig {
    NetworkConfig {
        ris_elements: 4,
        ..NetworkConfig::scenario1()
    }
}

fn options(kind: ObjectiveKind, set: FeasibilitySet) -> OptimizerOptions {
    OptimizerOptions {
        objective_kind: kind,
        ris_set: set,
        max_outer_iterations: 15,
        deterministic: true,
        ..OptimizerOptions::default()
    }
}

fn assert_nondecreasing(xs: &[f64]) {
    for w in xs.windows(2) {
        assert!(w[1] >= w[0] - 1e-6 * w[0].abs().max(1e-12), "trace decreased: {xs:?}");
    }
}

#[test]
fn initialization_is_seeded_and_within_budget() {
    let cfg = small();
    let ch = ChannelSet::draw(&cfg, 4).unwrap();
    let opts = options(ObjectiveKind::MaxMinRate, FeasibilitySet::UnitModulus);
    let a = initialize(&cfg, &ch, &opts, 4).unwrap();
    let b = initialize(&cfg, &ch, &opts, 4).unwrap();
    assert_eq!(a, b);
    let c = initialize(&cfg, &ch, &opts, 5).unwrap();
    assert_ne!(a.precoders, c.precoders);
    for l in 0..cfg.cells {
        assert!(transmit_power(&a.precoders, l) <= cfg.power * (1.0 + 1e-9));
    }
    assert!(a.ris.modulus_violation() <= 1e-12);
    assert!(evaluate_allocation(&cfg, &ch, &a).unwrap().is_clean());
}

#[test]
fn rate_traces_are_monotone_and_audited() {
    let cfg = small();
    for set in [FeasibilitySet::UnitDisc, FeasibilitySet::UnitModulus] {
        for seed in [1, 2] {
            let ch = ChannelSet::draw(&cfg, seed).unwrap();
            let opts = options(ObjectiveKind::MaxMinRate, set);
            let start = initialize(&cfg, &ch, &opts, seed).unwrap();
            let alloc = optimize(&cfg, &ch, &opts, seed).unwrap();
            assert_nondecreasing(&alloc.trace.objective);
            assert!(alloc.objective >= start.objective - 1e-9);
            assert_ne!(alloc.trace.stop, StopReason::NotRun);
            let report = evaluate_allocation(&cfg, &ch, &alloc).unwrap();
            assert!(report.is_clean(), "{:?}", report.violations);
            if set == FeasibilitySet::UnitModulus {
                assert!(alloc.ris.modulus_violation() <= 1e-12);
            }
        }
    }
}

#[test]
fn energy_efficiency_run_keeps_dinkelbach_parameter_monotone() {
    let cfg = small();
    let ch = ChannelSet::draw(&cfg, 3).unwrap();
    let opts = OptimizerOptions {
        max_outer_iterations: 4,
        ..options(ObjectiveKind::MaxMinEE, FeasibilitySet::UnitModulus)
    };
    let alloc = optimize(&cfg, &ch, &opts, 3).unwrap();
    assert_nondecreasing(&alloc.trace.objective);
    assert!(!alloc.trace.gda_mu.is_empty());
    for mu in &alloc.trace.gda_mu {
        for w in mu.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "{mu:?}");
        }
    }
    assert!(evaluate_allocation(&cfg, &ch, &alloc).unwrap().is_clean());
}

#[test]
fn deterministic_runs_are_bit_identical() {
    let cfg = small();
    let ch = ChannelSet::draw(&cfg, 9).unwrap();
    let opts = options(ObjectiveKind::MaxMinRate, FeasibilitySet::UnitModulus);
    let a = optimize(&cfg, &ch, &opts, 9).unwrap();
    let b = optimize(&cfg, &ch, &opts, 9).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.trace.wall_ms.iter().all(|&t| t == 0.0));
}

#[test]
fn single_stream_rates_match_the_audit() {
    let cfg = small();
    let ch = ChannelSet::draw(&cfg, 6).unwrap();
    let opts = OptimizerOptions {
        modes: "RSMA+SingleStream".parse::<Modes>().unwrap(),
        ..options(ObjectiveKind::MaxMinRate, FeasibilitySet::UnitModulus)
    };
    let alloc = initialize(&cfg, &ch, &opts, 6).unwrap();
    let report = evaluate_allocation(&cfg, &ch, &alloc).unwrap();
    let fbl = FblParams::new(&cfg, opts.modes.rate_model).unwrap();
    for (l, k) in cfg.user_indices() {
        let ss = single_stream_rate(&ch, &alloc.ris, &alloc.precoders, l, k, &cfg, &fbl).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-12);
        assert!(rel(ss.common.fbl, report.common_rates[l][k]) < 1e-9);
        assert!(rel(ss.private.fbl, report.private_rates[l][k]) < 1e-9);
    }
    let full = initialize(&cfg, &ch, &options(ObjectiveKind::MaxMinRate, FeasibilitySet::UnitModulus), 6).unwrap();
    assert!(single_stream_rate(&ch, &full.ris, &full.precoders, 0, 0, &cfg, &fbl).is_err());
}

#[test]
fn allocation_survives_json() {
    let cfg = small();
    let ch = ChannelSet::draw(&cfg, 8).unwrap();
    let opts = OptimizerOptions {
        max_outer_iterations: 2,
        ..options(ObjectiveKind::MaxMinRate, FeasibilitySet::UnitModulus)
    };
    let alloc = optimize(&cfg, &ch, &opts, 8).unwrap();
    let text = serde_json::to_string(&alloc).unwrap();
    let back: Allocation = serde_json::from_str(&text).unwrap();
    assert_eq!(back, alloc);
    assert!(evaluate_allocation(&cfg, &ch, &back).unwrap().is_clean());
}
