mod common;

use common::*;
use rand::Rng;
use rsma_core::channel::effective_channels;
use rsma_core::linalg::hermitian_eigenvalues;
use rsma_core::model::{FeasibilitySet, NetworkConfig, PrecoderSet, RateModel, StreamMode};
use rsma_core::rates::{common_report, private_report, user_covariances, FblParams};
use rsma_core::scalar::{CMat, Cx};
use rsma_core::surrogate::*;
use rsma_core::Error;

fn true_rates(cfg: &NetworkConfig, h: &[Vec<Vec<CMat<f64>>>], p: &PrecoderSet<f64>, fbl: &FblParams, l: usize, k: usize) -> (f64, f64) {
    let c = user_covariances(h, p, cfg.sigma2, l, k);
    (
        private_report(&c, fbl.n, fbl.qinv_p).unwrap().fbl,
        common_report(&c, fbl.n, fbl.qinv_c).unwrap().fbl,
    )
}

fn perturb(p: &PrecoderSet<f64>, scale: f64, rng: &mut impl Rng) -> PrecoderSet<f64> {
    let mut q = p.clone();
    for w in q.common.iter_mut().chain(q.private.iter_mut().flatten()) {
        *w += cn(w.nrows(), w.ncols(), scale, rng);
    }
    q
}

struct Instance {
    cfg: NetworkConfig,
    ch: rsma_core::channel::ChannelSet<f64>,
    exp: ExpansionPoint<f64>,
}

fn instance(seed: u64, dim: usize, mode: StreamMode) -> Instance {
    let mut r = rng(seed);
    let cfg = config(2, 2, 1, dim, dim, 3);
    let ch = random_channels(&cfg, 0.5, &mut r);
    let p = random_precoders(&cfg, mode, cfg.power, &mut r);
    let ris = random_ris(&cfg, FeasibilitySet::UnitDisc, &mut r);
    let fbl = FblParams::new(&cfg, RateModel::Fbl).unwrap();
    let exp = ExpansionPoint::new(&cfg, &ch, &p, &ris, fbl).unwrap();
    Instance { cfg, ch, exp }
}

#[test]
fn surrogates_are_tangent_at_expansion_point() {
    for seed in 0..30 {
        for dim in [1, 2, 4] {
            let Instance { cfg, exp, .. } = instance(seed, dim, StreamMode::Full);
            for (l, k) in cfg.user_indices() {
                let (rp, rc) = true_rates(&cfg, &exp.h, &exp.precoders, &exp.fbl, l, k);
                let sp = build_private_surrogate_w(&exp, &cfg, l, k).unwrap();
                let sc = build_common_surrogate_w(&exp, &cfg, l, k).unwrap();
                let vp = sp.evaluate(&exp.h[l][k], &exp.precoders);
                let vc = sc.evaluate(&exp.h[l][k], &exp.precoders);
                assert!(rel_err(vp, rp) < 1e-8, "private {vp} vs {rp}");
                assert!(rel_err(vc, rc) < 1e-8, "common {vc} vs {rc}");
            }
        }
    }
}

#[test]
fn surrogates_minorize_in_precoders() {
    let mut r = rng(99);
    for seed in 0..20 {
        let Instance { cfg, exp, .. } = instance(seed, 2, StreamMode::Full);
        for scale in [0.01, 0.3, 3.0] {
            let q = perturb(&exp.precoders, scale, &mut r);
            for (l, k) in cfg.user_indices() {
                let (rp, rc) = true_rates(&cfg, &exp.h, &q, &exp.fbl, l, k);
                let vp = build_private_surrogate_w(&exp, &cfg, l, k).unwrap().evaluate(&exp.h[l][k], &q);
                let vc = build_common_surrogate_w(&exp, &cfg, l, k).unwrap().evaluate(&exp.h[l][k], &q);
                assert!(vp <= rp + 1e-9, "private {vp} > {rp}");
                assert!(vc <= rc + 1e-9, "common {vc} > {rc}");
            }
        }
    }
}

#[test]
fn surrogates_minorize_in_ris() {
    let mut r = rng(7);
    for seed in 0..20 {
        let Instance { cfg, ch, exp } = instance(seed, 2, StreamMode::Full);
        for _ in 0..5 {
            let ris = random_ris(&cfg, FeasibilitySet::UnitDisc, &mut r);
            let h = effective_channels(&ch, &ris);
            for (l, k) in cfg.user_indices() {
                let (rp, rc) = true_rates(&cfg, &h, &exp.precoders, &exp.fbl, l, k);
                let (sp, sc) = build_surrogates_ris(&exp, &cfg, l, k).unwrap();
                assert_eq!(sp.kind, SurrogateKind::PrivateInRis);
                assert!(sp.evaluate(&h[l][k], &exp.precoders) <= rp + 1e-9);
                assert!(sc.evaluate(&h[l][k], &exp.precoders) <= rc + 1e-9);
            }
        }
    }
}

#[test]
fn directional_derivatives_match() {
    let mut r = rng(5);
    let step = 1e-6;
    for seed in 0..5 {
        let Instance { cfg, exp, .. } = instance(seed, 2, StreamMode::Full);
        let (l, k) = (0, 1);
        let sp = build_private_surrogate_w(&exp, &cfg, l, k).unwrap();
        let sc = build_common_surrogate_w(&exp, &cfg, l, k).unwrap();
        for _ in 0..10 {
            let dir = perturb(&PrecoderSet::zeros(&cfg, StreamMode::Full), 1.0, &mut r);
            let at = |t: f64| {
                let mut q = exp.precoders.clone();
                for (w, d) in q
                    .common
                    .iter_mut()
                    .chain(q.private.iter_mut().flatten())
                    .zip(dir.common.iter().chain(dir.private.iter().flatten()))
                {
                    *w += d * Cx::new(t, 0.0);
                }
                q
            };
            let (qp, qm) = (at(step), at(-step));
            let fd = |f: &dyn Fn(&PrecoderSet<f64>) -> f64| (f(&qp) - f(&qm)) / (2.0 * step);
            let tp = fd(&|q| true_rates(&cfg, &exp.h, q, &exp.fbl, l, k).0);
            let tc = fd(&|q| true_rates(&cfg, &exp.h, q, &exp.fbl, l, k).1);
            let gp = fd(&|q| sp.evaluate(&exp.h[l][k], q));
            let gc = fd(&|q| sc.evaluate(&exp.h[l][k], q));
            assert!((tp - gp).abs() < 1e-5 * tp.abs().max(1.0), "{tp} vs {gp}");
            assert!((tc - gc).abs() < 1e-5 * tc.abs().max(1.0), "{tc} vs {gc}");
        }
    }
}

#[test]
fn quadratic_weights_are_psd() {
    for seed in 0..20 {
        let Instance { cfg, exp, .. } = instance(seed, 2, StreamMode::SingleStream);
        for (l, k) in cfg.user_indices() {
            for s in [
                build_private_surrogate_w(&exp, &cfg, l, k).unwrap(),
                build_common_surrogate_w(&exp, &cfg, l, k).unwrap(),
            ] {
                assert!(hermitian_eigenvalues(&s.b)[0] >= -1e-10);
            }
        }
    }
}

#[test]
fn zero_common_precoder_is_degenerate() {
    let Instance { cfg, ch, exp } = instance(1, 2, StreamMode::Full);
    let mut p = exp.precoders.clone();
    p.common[0].fill(Cx::new(0.0, 0.0));
    let e = ExpansionPoint::new(&cfg, &ch, &p, &exp.ris, exp.fbl).unwrap();
    assert!(matches!(
        build_common_surrogate_w(&e, &cfg, 0, 0),
        Err(Error::DegenerateExpansion { .. })
    ));
    let shannon = FblParams::shannon(&cfg);
    let e = ExpansionPoint::new(&cfg, &ch, &p, &exp.ris, shannon).unwrap();
    assert!(build_common_surrogate_w(&e, &cfg, 0, 0).is_ok());
}

#[test]
fn scalar_bounds_hold_on_random_tuples() {
    let mut r = rng(3);
    for _ in 0..200 {
        let (m, n) = (2, 3);
        let g = cn(m, n, 1.0, &mut r);
        let gb = cn(m, n, 1.0, &mut r);
        let o = { let x = cn(m, m, 1.0, &mut r); &x * x.adjoint() + CMat::identity(m, m) * Cx::new(0.1, 0.0) };
        let ob = { let x = cn(m, m, 1.0, &mut r); &x * x.adjoint() + CMat::identity(m, m) * Cx::new(0.1, 0.0) };
        assert!(logdet_lower_bound(&g, &gb, &o, &ob).unwrap() <= logdet_value(&g, &o).unwrap() + 1e-9);
        assert!(trace_lower_bound(&g, &gb, &o, &ob).unwrap() <= trace_quadratic(&g, &o).unwrap() + 1e-9);
        assert!((logdet_lower_bound(&g, &g, &o, &o).unwrap() - logdet_value(&g, &o).unwrap()).abs() < 1e-10);
        assert!((trace_lower_bound(&g, &g, &o, &o).unwrap() - trace_quadratic(&g, &o).unwrap()).abs() < 1e-10);
        let (z, zb) = (r.random::<f64>() * 4.0, r.random::<f64>() * 4.0 + 1e-3);
        assert!(sqrt_upper_bound(z, zb).unwrap() >= z.sqrt() - 1e-12);
    }
}
