//! Concave quadratic minorants of the finite-blocklength rates.
//!
//! A surrogate of user `(l, k)` has the form
//!
//! ```text
//! f = a + Σ_s 2·Re Tr(A_s (H_{i(s)} W_s)ᴴ) − Tr(B · (σ²I + Σ_{s∈Q} H_{i(s)} W_s W_sᴴ H_{i(s)}ᴴ))
//! ```
//!
//! where `s` ranges over precoder slots and `H_i = H_lk,i`. With the
//! channels frozen it is a concave quadratic in the precoders; with the
//! precoders frozen it is a concave quadratic in the RIS coefficients,
//! because every `H_lk,i` is affine in them.

use serde::{Deserialize, Serialize};

use crate::channel::{effective_channels, ChannelSet};
use crate::error::{Error, Result};
use crate::linalg::{gram, log_det_i_plus, re_inner, sandwich, trace_re};
use crate::model::{NetworkConfig, PrecoderSet, RisPhases};
use crate::rates::{factor, user_covariances, FblParams, UserCovariances};
use crate::scalar::{creal, lit, to_f64, CMat, Real};

/// Threshold below which a barred dispersion is treated as zero.
pub const DEGENERATE_DISPERSION: f64 = 1e-12;

/// A precoder of the network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Slot {
    /// `W_i`.
    Common(usize),
    /// `W_ij`.
    Private(usize, usize),
}

impl Slot {
    /// Serving BS of the precoder.
    pub fn bs(self) -> usize {
        match self {
            Slot::Common(i) | Slot::Private(i, _) => i,
        }
    }

    pub fn get<T: Real>(self, p: &PrecoderSet<T>) -> &CMat<T> {
        match self {
            Slot::Common(i) => &p.common[i],
            Slot::Private(i, j) => &p.private[i][j],
        }
    }

    pub fn get_mut<T: Real>(self, p: &mut PrecoderSet<T>) -> &mut CMat<T> {
        match self {
            Slot::Common(i) => &mut p.common[i],
            Slot::Private(i, j) => &mut p.private[i][j],
        }
    }

    /// Every slot of a configuration, common precoders first.
    pub fn all(cfg: &NetworkConfig) -> Vec<Slot> {
        let mut v: Vec<Slot> = (0..cfg.cells).map(Slot::Common).collect();
        v.extend(cfg.user_indices().map(|(i, j)| Slot::Private(i, j)));
        v
    }
}

/// Slots whose signals appear in `D_c,lk`: every private precoder and the
/// common precoders of the other cells.
pub fn interference_slots(cfg: &NetworkConfig, l: usize) -> Vec<Slot> {
    let mut v: Vec<Slot> = cfg.user_indices().map(|(i, j)| Slot::Private(i, j)).collect();
    v.extend((0..cfg.cells).filter(|&i| i != l).map(Slot::Common));
    v
}

/// Which rate a surrogate bounds and in which block it is quadratic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SurrogateKind {
    PrivateInW,
    CommonInW,
    PrivateInRis,
    CommonInRis,
}

/// Coefficients `(a, {A_s}, B)` of one surrogate.
#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateCoefficients<T: Real> {
    pub kind: SurrogateKind,
    pub cell: usize,
    pub user: usize,
    pub a: T,
    /// Linear coefficients, one per slot.
    pub linear: Vec<(Slot, CMat<T>)>,
    /// Slots in the quadratic term.
    pub quadratic: Vec<Slot>,
    /// Hermitian PSD weight of the quadratic term.
    pub b: CMat<T>,
    /// Noise variance entering the quadratic term.
    pub sigma2: f64,
}

impl<T: Real> SurrogateCoefficients<T> {
    /// Value at precoders `p` with effective channels `h_user[i] = H_lk,i`.
    pub fn evaluate(&self, h_user: &[CMat<T>], p: &PrecoderSet<T>) -> T {
        let two = lit::<T>(2.0);
        let mut f = self.a - lit::<T>(self.sigma2) * trace_re(&self.b);
        for (slot, a) in &self.linear {
            f += two * re_inner(a, &(&h_user[slot.bs()] * slot.get(p)));
        }
        for slot in &self.quadratic {
            let g = &h_user[slot.bs()] * slot.get(p);
            f -= trace_re(&(&self.b * gram(&g)));
        }
        f
    }

    /// Same coefficients, tagged as an RIS-block surrogate.
    fn into_ris(mut self) -> Self {
        self.kind = match self.kind {
            SurrogateKind::PrivateInW => SurrogateKind::PrivateInRis,
            SurrogateKind::CommonInW => SurrogateKind::CommonInRis,
            k => k,
        };
        self
    }
}

/// Cached statistics at the point where surrogates are built.
#[derive(Clone, Debug)]
pub struct ExpansionPoint<T: Real> {
    pub precoders: PrecoderSet<T>,
    pub ris: RisPhases<T>,
    /// `H̄[l][k][i]`.
    pub h: Vec<Vec<Vec<CMat<T>>>>,
    /// Covariances of every user.
    pub cov: Vec<Vec<UserCovariances<T>>>,
    /// `ζ̄_c,lk = 2Tr(S̄_c (D̄_c + S̄_c)⁻¹)`.
    pub zeta_c: Vec<Vec<T>>,
    /// `ζ̄_p,lk = 2Tr(S̄ D̄_c⁻¹)`.
    pub zeta_p: Vec<Vec<T>>,
    pub fbl: FblParams,
    pub sigma2: f64,
}

impl<T: Real> ExpansionPoint<T> {
    pub fn new(
        cfg: &NetworkConfig,
        ch: &ChannelSet<T>,
        precoders: &PrecoderSet<T>,
        ris: &RisPhases<T>,
        fbl: FblParams,
    ) -> Result<Self> {
        let h = effective_channels(ch, ris);
        Self::with_channels(cfg, h, precoders, ris, fbl)
    }

    /// Builds from precomputed effective channels.
    pub fn with_channels(
        cfg: &NetworkConfig,
        h: Vec<Vec<Vec<CMat<T>>>>,
        precoders: &PrecoderSet<T>,
        ris: &RisPhases<T>,
        fbl: FblParams,
    ) -> Result<Self> {
        let mut cov = Vec::with_capacity(cfg.cells);
        let mut zeta_c = vec![vec![T::zero(); cfg.users_per_cell]; cfg.cells];
        let mut zeta_p = zeta_c.clone();
        for l in 0..cfg.cells {
            let mut row = Vec::with_capacity(cfg.users_per_cell);
            for k in 0..cfg.users_per_cell {
                let c = user_covariances(&h, precoders, cfg.sigma2, l, k);
                let y = factor(&(&c.d_c + &c.s_c), "common received covariance")?;
                zeta_c[l][k] = lit::<T>(2.0) * trace_re(&y.whiten(&c.s_c));
                let dc = factor(&c.d_c, "common interference covariance")?;
                zeta_p[l][k] = lit::<T>(2.0) * trace_re(&dc.whiten(&c.s));
                row.push(c);
            }
            cov.push(row);
        }
        Ok(Self {
            precoders: precoders.clone(),
            ris: ris.clone(),
            h,
            cov,
            zeta_c,
            zeta_p,
            fbl,
            sigma2: cfg.sigma2,
        })
    }
}

/// Returns `κ = q/√(nζ̄)` and `q√ζ̄/(2√n)`, the dispersion-bound constants,
/// or a degenerate-point error when `q > 0` and `ζ̄` vanishes.
fn dispersion_constants<T: Real>(
    q: f64,
    n: f64,
    zeta: T,
    l: usize,
    k: usize,
    what: &'static str,
) -> Result<(T, T)> {
    if q == 0.0 {
        return Ok((T::zero(), T::zero()));
    }
    let z = to_f64(zeta);
    if !(z >= DEGENERATE_DISPERSION) {
        return Err(Error::DegenerateExpansion {
            cell: l,
            user: k,
            what,
            value: z,
        });
    }
    let kappa = q / (n * z).sqrt();
    let half = q * z.sqrt() / (2.0 * n.sqrt());
    Ok((lit(kappa), lit(half)))
}

/// Minorant of the private rate `r_p,lk` in the precoders.
pub fn build_private_surrogate_w<T: Real>(
    exp: &ExpansionPoint<T>,
    cfg: &NetworkConfig,
    l: usize,
    k: usize,
) -> Result<SurrogateCoefficients<T>> {
    let c = &exp.cov[l][k];
    let h = &exp.h[l][k];
    let p = &exp.precoders;
    let nu = lit::<T>(c.d.nrows() as f64);
    let (kappa, half) =
        dispersion_constants(exp.fbl.qinv_p, exp.fbl.n, exp.zeta_p[l][k], l, k, "private dispersion")?;

    let d = factor(&c.d, "private interference covariance")?;
    let dc = factor(&c.d_c, "common interference covariance")?;
    let d_inv = d.inverse();
    let dc_inv = dc.inverse();
    let ck = creal(kappa);

    let own = Slot::Private(l, k);
    let quadratic = interference_slots(cfg, l);
    let mut linear = vec![(own, d.solve(&(&h[l] * own.get(p))))];
    if kappa > T::zero() {
        for &s in quadratic.iter().filter(|&&s| s != own) {
            let g = &h[s.bs()] * s.get(p);
            linear.push((s, dc.solve(&g) * ck));
        }
    }
    let b = &d_inv - &dc_inv + sandwich(&dc_inv, &c.d) * ck;

    let s2 = lit::<T>(exp.sigma2);
    let a = log_det_i_plus(&d, &c.s) - trace_re(&d.whiten(&c.s)) - half - kappa * nu
        + lit::<T>(2.0) * kappa * s2 * trace_re(&dc_inv);
    Ok(SurrogateCoefficients {
        kind: SurrogateKind::PrivateInW,
        cell: l,
        user: k,
        a,
        linear,
        quadratic,
        b: crate::linalg::hermitian_part(&b),
        sigma2: exp.sigma2,
    })
}

/// Minorant of the common decoding rate `r_c,lk` in the precoders.
pub fn build_common_surrogate_w<T: Real>(
    exp: &ExpansionPoint<T>,
    cfg: &NetworkConfig,
    l: usize,
    k: usize,
) -> Result<SurrogateCoefficients<T>> {
    let c = &exp.cov[l][k];
    let h = &exp.h[l][k];
    let p = &exp.precoders;
    let nu = lit::<T>(c.d.nrows() as f64);
    let (kappa, half) =
        dispersion_constants(exp.fbl.qinv_c, exp.fbl.n, exp.zeta_c[l][k], l, k, "common dispersion")?;

    let dc = factor(&c.d_c, "common interference covariance")?;
    let y = factor(&(&c.d_c + &c.s_c), "common received covariance")?;
    let dc_inv = dc.inverse();
    let y_inv = y.inverse();
    let ck = creal(kappa);

    let own = Slot::Common(l);
    let interference = interference_slots(cfg, l);
    let mut linear = vec![(own, dc.solve(&(&h[l] * own.get(p))))];
    if kappa > T::zero() {
        for &s in &interference {
            let g = &h[s.bs()] * s.get(p);
            linear.push((s, y.solve(&g) * ck));
        }
    }
    let mut quadratic = interference;
    quadratic.push(own);
    let b = &dc_inv - &y_inv + sandwich(&y_inv, &c.d_c) * ck;

    let s2 = lit::<T>(exp.sigma2);
    let a = log_det_i_plus(&dc, &c.s_c) - trace_re(&dc.whiten(&c.s_c)) - half - kappa * nu
        + lit::<T>(2.0) * kappa * s2 * trace_re(&y_inv);
    Ok(SurrogateCoefficients {
        kind: SurrogateKind::CommonInW,
        cell: l,
        user: k,
        a,
        linear,
        quadratic,
        b: crate::linalg::hermitian_part(&b),
        sigma2: exp.sigma2,
    })
}

/// Private and common minorants in the RIS coefficients. They share the
/// precoder-block coefficients and are evaluated with `H_lk,i(υ)`.
pub fn build_surrogates_ris<T: Real>(
    exp: &ExpansionPoint<T>,
    cfg: &NetworkConfig,
    l: usize,
    k: usize,
) -> Result<(SurrogateCoefficients<T>, SurrogateCoefficients<T>)> {
    Ok((
        build_private_surrogate_w(exp, cfg, l, k)?.into_ris(),
        build_common_surrogate_w(exp, cfg, l, k)?.into_ris(),
    ))
}

/// Right-hand side of the log-det minorant:
/// `ln|I + Ω̄⁻¹Γ̄Γ̄ᴴ| − Tr(Ω̄⁻¹Γ̄Γ̄ᴴ) + 2ReTr(Ω̄⁻¹Γ̄Γᴴ) − Tr((Ω̄⁻¹ − (Γ̄Γ̄ᴴ+Ω̄)⁻¹)(ΓΓᴴ+Ω))`.
pub fn logdet_lower_bound<T: Real>(
    gamma: &CMat<T>,
    gamma_bar: &CMat<T>,
    omega: &CMat<T>,
    omega_bar: &CMat<T>,
) -> Result<T> {
    let ob = factor(omega_bar, "omega_bar")?;
    factor(omega, "omega")?;
    let sb = gram(gamma_bar);
    let tot = factor(&(&sb + omega_bar), "gamma_bar gamma_barᴴ + omega_bar")?;
    let weight = ob.inverse() - tot.inverse();
    Ok(log_det_i_plus(&ob, &sb) - trace_re(&ob.whiten(&sb))
        + lit::<T>(2.0) * re_inner(&ob.solve(gamma_bar), gamma)
        - trace_re(&(weight * (gram(gamma) + omega))))
}

/// Right-hand side of the trace minorant:
/// `2ReTr(Ω̄⁻¹Γ̄Γᴴ) − Tr(Ω̄⁻¹Γ̄Γ̄ᴴΩ̄⁻¹Ω)`.
pub fn trace_lower_bound<T: Real>(
    gamma: &CMat<T>,
    gamma_bar: &CMat<T>,
    omega: &CMat<T>,
    omega_bar: &CMat<T>,
) -> Result<T> {
    let ob = factor(omega_bar, "omega_bar")?;
    let x = ob.solve(gamma_bar);
    Ok(lit::<T>(2.0) * re_inner(&x, gamma) - trace_re(&(gram(&x) * omega)))
}

/// Tangent majorant `√ζ̄/2 + ζ/(2√ζ̄)` of `√ζ`.
pub fn sqrt_upper_bound(zeta: f64, zeta_bar: f64) -> Result<f64> {
    if !(zeta_bar > 0.0) {
        return Err(Error::Domain(format!("zeta_bar must be positive, got {zeta_bar}")));
    }
    let r = zeta_bar.sqrt();
    Ok(r / 2.0 + zeta / (2.0 * r))
}

/// `Tr(Ω⁻¹ΓΓᴴ)`, the left-hand side of [`trace_lower_bound`].
pub fn trace_quadratic<T: Real>(gamma: &CMat<T>, omega: &CMat<T>) -> Result<T> {
    let o = factor(omega, "omega")?;
    Ok(trace_re(&o.whiten(&gram(gamma))))
}

/// `ln|I + Ω⁻¹ΓΓᴴ|`, the left-hand side of [`logdet_lower_bound`].
pub fn logdet_value<T: Real>(gamma: &CMat<T>, omega: &CMat<T>) -> Result<T> {
    let o = factor(omega, "omega")?;
    Ok(log_det_i_plus(&o, &gram(gamma)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_bound_examples() {
        assert_eq!(sqrt_upper_bound(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(sqrt_upper_bound(0.0, 1.0).unwrap(), 0.5);
        assert_eq!(sqrt_upper_bound(4.0, 1.0).unwrap(), 2.5);
        assert!(sqrt_upper_bound(1.0, 0.0).is_err());
    }

    #[test]
    fn bounds_vanish_at_zero() {
        let z = CMat::<f64>::zeros(2, 2);
        let o = CMat::<f64>::identity(2, 2);
        assert!(logdet_lower_bound(&z, &z, &o, &o).unwrap().abs() < 1e-14);
        assert!(trace_lower_bound(&z, &z, &o, &o).unwrap().abs() < 1e-14);
    }
}
