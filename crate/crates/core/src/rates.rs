//! Shannon and finite-blocklength rates, dispersions, per-user rates and
//! energy efficiencies.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::channel::effective_channels;
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{gram, hermitian_eigenvalues, identity, log_det_i_plus, sandwich, trace_re, HpdFactor};
use crate::model::{
    transmit_covariance, CommonRateSplit, NetworkConfig, PrecoderSet, RateModel, RisPhases,
};
use crate::scalar::{creal, lit, to_f64, CMat, Real};

/// Relative regularization applied to ill-conditioned covariances.
const REG_REL: f64 = 1e-12;

/// Desired-signal and interference-plus-noise covariances seen by a receiver.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkStatistics<T: Real> {
    /// Desired signal `S`, Hermitian PSD.
    pub s: CMat<T>,
    /// Interference plus noise `D`, Hermitian positive definite.
    pub d: CMat<T>,
}

/// Breakdown of a finite-blocklength rate, all rates in nats.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FblRateReport<T> {
    pub shannon: T,
    pub dispersion: T,
    pub penalty: T,
    pub fbl: T,
    pub fbl_clamped: T,
}

/// `Q⁻¹(ε)`, the inverse Gaussian tail function.
pub fn inverse_q(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("Q-inverse needs 0 < eps < 1, got {eps}")));
    }
    Ok(std::f64::consts::SQRT_2 * erfc_inv(2.0 * eps))
}

pub(crate) fn factor<T: Real>(m: &CMat<T>, what: &str) -> Result<HpdFactor<T>> {
    let n = m.nrows().max(1);
    let scale = trace_re(m) / lit::<T>(n as f64);
    let floor = lit::<T>(REG_REL) * scale.max(T::min_value().unwrap_or(T::zero()));
    HpdFactor::new(m, floor, what)
}

/// `ln det(I + D⁻¹ S)`.
pub fn shannon_rate<T: Real>(ls: &LinkStatistics<T>) -> Result<T> {
    let d = factor(&ls.d, "interference covariance")?;
    Ok(log_det_i_plus(&d, &ls.s).max(T::zero()))
}

/// `2 Tr(S (D + S)⁻¹)`.
pub fn achievable_dispersion<T: Real>(ls: &LinkStatistics<T>) -> Result<T> {
    let total = &ls.d + &ls.s;
    let f = factor(&total, "total received covariance")?;
    Ok(lit::<T>(2.0) * trace_re(&f.whiten(&ls.s)).max(T::zero()))
}

/// `Tr(I − (I + D⁻¹S)⁻²)`, the optimal dispersion (diagnostic only).
pub fn optimal_dispersion<T: Real>(ls: &LinkStatistics<T>) -> Result<T> {
    let d = factor(&ls.d, "interference covariance")?;
    let ev = hermitian_eigenvalues(&d.whiten(&ls.s));
    Ok(ev.iter().fold(T::zero(), |acc, &mu| {
        let g = T::one() + mu.max(T::zero());
        acc + T::one() - T::one() / (g * g)
    }))
}

/// Assembles a report from its Shannon part, the dispersion and `Q⁻¹(ε)`.
pub fn fbl_report<T: Real>(shannon: T, dispersion: T, n: f64, qinv: f64) -> FblRateReport<T> {
    let penalty = if qinv == 0.0 {
        T::zero()
    } else {
        lit::<T>(qinv) * (dispersion / lit(n)).sqrt()
    };
    let fbl = shannon - penalty;
    FblRateReport {
        shannon,
        dispersion,
        penalty,
        fbl,
        fbl_clamped: fbl.max(T::zero()),
    }
}

/// Normal-approximation rate `ln|I + D⁻¹S| − Q⁻¹(ε)·sqrt(2Tr(S(D+S)⁻¹)/n)`.
pub fn fbl_rate<T: Real>(ls: &LinkStatistics<T>, n: f64, eps: f64) -> Result<FblRateReport<T>> {
    if !(n >= 1.0) {
        return Err(Error::Domain(format!("block length must be >= 1, got {n}")));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Domain(format!("eps must lie in (0, 0.5), got {eps}")));
    }
    Ok(fbl_report(
        shannon_rate(ls)?,
        achievable_dispersion(ls)?,
        n,
        inverse_q(eps)?,
    ))
}

/// Block length and tail quantiles used by the rate expressions. Shannon
/// mode is the special case of zero quantiles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FblParams {
    pub n: f64,
    pub qinv_c: f64,
    pub qinv_p: f64,
}

impl FblParams {
    pub fn new(cfg: &NetworkConfig, model: RateModel) -> Result<Self> {
        Ok(match model {
            RateModel::Fbl => Self {
                n: cfg.blocklength as f64,
                qinv_c: inverse_q(cfg.eps_c)?,
                qinv_p: inverse_q(cfg.eps_p)?,
            },
            RateModel::Shannon => Self::shannon(cfg),
        })
    }

    pub fn shannon(cfg: &NetworkConfig) -> Self {
        Self {
            n: cfg.blocklength as f64,
            qinv_c: 0.0,
            qinv_p: 0.0,
        }
    }
}

/// The four covariances of user `(l, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct UserCovariances<T: Real> {
    /// `D_lk`: everything except the own private and own common streams.
    pub d: CMat<T>,
    /// `D_c,lk = D_lk + S_lk`.
    pub d_c: CMat<T>,
    /// `S_lk`, own private stream.
    pub s: CMat<T>,
    /// `S_c,lk`, own cell's common stream.
    pub s_c: CMat<T>,
}

/// Covariances of user `(l, k)` from precomputed effective channels
/// `h[l][k][i]`.
pub fn user_covariances<T: Real>(
    h: &[Vec<Vec<CMat<T>>>],
    p: &PrecoderSet<T>,
    sigma2: f64,
    l: usize,
    k: usize,
) -> UserCovariances<T> {
    let hl = &h[l][k];
    let nu = hl[l].nrows();
    let mut d_c = identity::<T>(nu) * creal(lit::<T>(sigma2));
    for w in &p.private[l] {
        d_c += gram(&(&hl[l] * w));
    }
    for (i, hi) in hl.iter().enumerate() {
        if i != l {
            d_c += sandwich(hi, &transmit_covariance(p, i));
        }
    }
    let s = gram(&(&hl[l] * &p.private[l][k]));
    let s_c = gram(&(&hl[l] * &p.common[l]));
    UserCovariances {
        d: &d_c - &s,
        d_c,
        s,
        s_c,
    }
}

/// Interference covariances `(D_lk, D_c,lk, S_lk, S_c,lk)` of user `(l, k)`.
pub fn interference_covariances<T: Real>(
    ch: &ChannelSet<T>,
    ris: &RisPhases<T>,
    p: &PrecoderSet<T>,
    sigma2: f64,
    l: usize,
    k: usize,
) -> UserCovariances<T> {
    user_covariances(&effective_channels(ch, ris), p, sigma2, l, k)
}

/// Common-message decoding rate report from user covariances.
pub fn common_report<T: Real>(c: &UserCovariances<T>, n: f64, qinv: f64) -> Result<FblRateReport<T>> {
    let ls = LinkStatistics {
        s: c.s_c.clone(),
        d: c.d_c.clone(),
    };
    Ok(fbl_report(shannon_rate(&ls)?, achievable_dispersion(&ls)?, n, qinv))
}

/// Private-message rate report; the dispersion pairs `S_lk` with `D_c,lk`.
pub fn private_report<T: Real>(c: &UserCovariances<T>, n: f64, qinv: f64) -> Result<FblRateReport<T>> {
    let ls = LinkStatistics {
        s: c.s.clone(),
        d: c.d.clone(),
    };
    let shannon = shannon_rate(&ls)?;
    let dc = factor(&c.d_c, "common interference covariance")?;
    let dispersion = lit::<T>(2.0) * trace_re(&dc.whiten(&c.s)).max(T::zero());
    Ok(fbl_report(shannon, dispersion, n, qinv))
}

/// Raw FBL rate of the common message of cell `l` at user `(l, k)`.
pub fn common_decode_rate<T: Real>(
    ch: &ChannelSet<T>,
    ris: &RisPhases<T>,
    p: &PrecoderSet<T>,
    cfg: &NetworkConfig,
    l: usize,
    k: usize,
) -> Result<T> {
    let c = interference_covariances(ch, ris, p, cfg.sigma2, l, k);
    Ok(common_report(&c, cfg.blocklength as f64, inverse_q(cfg.eps_c)?)?.fbl)
}

/// Raw FBL rate of the private message of user `(l, k)`.
pub fn private_rate<T: Real>(
    ch: &ChannelSet<T>,
    ris: &RisPhases<T>,
    p: &PrecoderSet<T>,
    cfg: &NetworkConfig,
    l: usize,
    k: usize,
) -> Result<T> {
    let c = interference_covariances(ch, ris, p, cfg.sigma2, l, k);
    Ok(private_report(&c, cfg.blocklength as f64, inverse_q(cfg.eps_p)?)?.fbl)
}

/// `r_lk = t_lk + r_p,lk`.
pub fn user_rate<T: Real>(split: &CommonRateSplit<T>, private: T, l: usize, k: usize) -> T {
    split.t[l][k] + private
}

/// Power attributed to user `(l, k)`:
/// `p_c + η‖W_lk‖² + (η/K)‖W_l‖²`.
pub fn user_power<T: Real>(p: &PrecoderSet<T>, l: usize, k: usize, p_c: f64, eta: f64) -> T {
    let kk = p.private[l].len() as f64;
    lit::<T>(p_c)
        + lit::<T>(eta) * crate::linalg::fro2(&p.private[l][k])
        + lit::<T>(eta / kk) * crate::linalg::fro2(&p.common[l])
}

/// Energy efficiency `r_lk / p_lk`, in the units of `rate` per Watt.
pub fn user_ee<T: Real>(rate: T, p: &PrecoderSet<T>, l: usize, k: usize, cfg: &NetworkConfig) -> T {
    rate / user_power(p, l, k, cfg.p_c, cfg.eta)
}

/// Probability that either the common or the private message fails.
pub fn combine_error_prob(eps_c: f64, eps_p: f64) -> f64 {
    eps_c + (1.0 - eps_c) * eps_p
}

/// Minimum rate `2n/(ωτ)` in bits/s/Hz meeting the latency target.
pub fn latency_threshold(n: f64, omega: f64, tau: f64) -> Result<f64> {
    let wt = omega * tau;
    if !(wt > 0.0) {
        return Err(Error::Domain(format!("omega*tau must be positive, got {wt}")));
    }
    Ok(2.0 * n / wt)
}

/// Latency threshold of `cfg` in nats per channel use.
pub fn rate_threshold_nats(cfg: &NetworkConfig) -> Result<f64> {
    Ok(latency_threshold(cfg.blocklength as f64, cfg.omega, cfg.tau)? * std::f64::consts::LN_2)
}

/// Raw common and private rates of every user.
#[derive(Clone, Debug, PartialEq)]
pub struct RateTable<T> {
    /// `r_c,lk`, common message of cell `l` decoded at `(l, k)`.
    pub common: Vec<Vec<T>>,
    /// `r_p,lk`.
    pub private: Vec<Vec<T>>,
}

impl<T: Real> RateTable<T> {
    /// `r_c,l = min_k r_c,lk`.
    pub fn common_min(&self, l: usize) -> T {
        self.common[l]
            .iter()
            .copied()
            .fold(T::max_value().unwrap_or(lit(f64::MAX)), |a, b| a.min(b))
    }
}

/// Rates of every user from precomputed effective channels.
pub fn rate_table<T: Real>(
    h: &[Vec<Vec<CMat<T>>>],
    p: &PrecoderSet<T>,
    cfg: &NetworkConfig,
    fbl: &FblParams,
) -> Result<RateTable<T>> {
    let mut common = vec![vec![T::zero(); cfg.users_per_cell]; cfg.cells];
    let mut private = common.clone();
    for (l, k) in cfg.user_indices() {
        let c = user_covariances(h, p, cfg.sigma2, l, k);
        common[l][k] = common_report(&c, fbl.n, fbl.qinv_c)?.fbl;
        private[l][k] = private_report(&c, fbl.n, fbl.qinv_p)?.fbl;
    }
    Ok(RateTable { common, private })
}

/// Converts nats to bits.
pub fn nats_to_bits<T: Real>(x: T) -> f64 {
    to_f64(x) / std::f64::consts::LN_2
}
