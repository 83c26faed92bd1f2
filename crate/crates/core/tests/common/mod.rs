#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rsma_core::channel::ChannelSet;
use rsma_core::model::{FeasibilitySet, NetworkConfig, PrecoderSet, RisPhases, StreamMode};
use rsma_core::scalar::{CMat, Cx};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn config(l: usize, k: usize, m: usize, nbs: usize, nu: usize, nris: usize) -> NetworkConfig {
    NetworkConfig {
        cells: l,
        users_per_cell: k,
        ris_count: m,
        bs_antennas: nbs,
        user_antennas: nu,
        ris_elements: nris,
        ..NetworkConfig::scenario1()
    }
}

pub fn cn(rows: usize, cols: usize, std: f64, rng: &mut impl Rng) -> CMat<f64> {
    let s = std / 2f64.sqrt();
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Cx::new(s * re, s * im)
    })
}

/// Unit-variance i.i.d. channels, RIS legs scaled by `ris_scale`.
pub fn random_channels(cfg: &NetworkConfig, ris_scale: f64, rng: &mut impl Rng) -> ChannelSet<f64> {
    let (l_n, k_n, m_n) = (cfg.cells, cfg.users_per_cell, cfg.ris_count);
    let direct = (0..l_n)
        .map(|_| {
            (0..k_n)
                .map(|_| (0..l_n).map(|_| cn(cfg.user_antennas, cfg.bs_antennas, 1.0, rng)).collect())
                .collect()
        })
        .collect();
    let ris_user = (0..l_n)
        .map(|_| {
            (0..k_n)
                .map(|_| (0..m_n).map(|_| cn(cfg.user_antennas, cfg.ris_elements, ris_scale, rng)).collect())
                .collect()
        })
        .collect();
    let bs_ris = (0..m_n)
        .map(|_| (0..l_n).map(|_| cn(cfg.ris_elements, cfg.bs_antennas, ris_scale, rng)).collect())
        .collect();
    ChannelSet { direct, ris_user, bs_ris, seed: 0 }
}

/// Random precoders with every cell at power `power`.
pub fn random_precoders(
    cfg: &NetworkConfig,
    mode: StreamMode,
    power: f64,
    rng: &mut impl Rng,
) -> PrecoderSet<f64> {
    let mut p = PrecoderSet::zeros(cfg, mode);
    let d = cfg.streams(mode);
    for l in 0..cfg.cells {
        p.common[l] = cn(cfg.bs_antennas, d, 1.0, rng);
        for k in 0..cfg.users_per_cell {
            p.private[l][k] = cn(cfg.bs_antennas, d, 1.0, rng);
        }
        let pw = rsma_core::transmit_power(&p, l);
        p.scale_cell(l, (power / pw).sqrt());
    }
    p
}

pub fn random_ris(cfg: &NetworkConfig, set: FeasibilitySet, rng: &mut impl Rng) -> RisPhases<f64> {
    let upsilon = (0..cfg.ris_count)
        .map(|_| {
            (0..cfg.ris_elements)
                .map(|_| {
                    let phase = std::f64::consts::TAU * rng.random::<f64>();
                    let r = match set {
                        FeasibilitySet::UnitModulus => 1.0,
                        FeasibilitySet::UnitDisc => rng.random::<f64>().sqrt(),
                    };
                    Cx::from_polar(r, phase)
                })
                .collect()
        })
        .collect();
    RisPhases { upsilon, feasibility_set: set }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
