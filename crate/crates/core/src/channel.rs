//! Channel realizations: Rayleigh direct links, Rician RIS legs with
//! geometry-based path loss, and the RIS-dependent effective channel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{NetworkConfig, RisPhases};
use crate::scalar::{cx, lit, CMat, Cx, Real};
use crate::wire::{from_wire, to_wire, WireMatrix};

/// Placement and large-scale fading parameters.
///
/// BS `l` sits at `(bs_spacing·l, 0, bs_height)`. Each cell has an anchor
/// `ris_offset` metres from its BS along `y`; RIS `m` is placed at the
/// anchor of cell `m mod L` and the users of a cell are dropped uniformly in
/// a disc of radius `user_radius` around the cell anchor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometryModel {
    pub bs_spacing: f64,
    pub bs_height: f64,
    pub ris_offset: f64,
    pub ris_height: f64,
    pub user_radius: f64,
    pub user_height: f64,
    pub pathloss_exp_direct: f64,
    pub pathloss_exp_ris: f64,
    /// Path loss at 1 m in dB.
    pub ref_loss_db: f64,
    /// Rician factor of the RIS legs; `f64::INFINITY` gives pure LoS.
    pub rician_k: f64,
    /// Receiver noise power in dB; gains of links ending at a user are
    /// expressed relative to it so that `sigma2 = 1` is consistent.
    pub noise_floor_db: f64,
    /// Fixed user positions `[l][k] = [x, y, z]` replacing the random drop.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub user_positions: Option<Vec<Vec<[f64; 3]>>>,
}

impl Default for GeometryModel {
    fn default() -> Self {
        Self {
            bs_spacing: 200.0,
            bs_height: 10.0,
            ris_offset: 20.0,
            ris_height: 10.0,
            user_radius: 50.0,
            user_height: 1.5,
            pathloss_exp_direct: 3.75,
            pathloss_exp_ris: 2.2,
            ref_loss_db: 30.0,
            rician_k: 3.0,
            noise_floor_db: -92.0,
            user_positions: None,
        }
    }
}

type Point = [f64; 3];

fn distance(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

impl GeometryModel {
    pub fn validate(&self, cfg: &NetworkConfig) -> Result<()> {
        let field = |name: &str, reason: &str| Err(Error::validation(name, reason));
        if !(self.pathloss_exp_direct > 0.0) {
            return field("geometry.pathloss_exp_direct", "must be positive");
        }
        if !(self.pathloss_exp_ris > 0.0) {
            return field("geometry.pathloss_exp_ris", "must be positive");
        }
        if !(self.rician_k >= 0.0) {
            return field("geometry.rician_k", "must be nonnegative");
        }
        if !(self.user_radius >= 0.0) {
            return field("geometry.user_radius", "must be nonnegative");
        }
        if let Some(pos) = &self.user_positions {
            if pos.len() != cfg.cells || pos.iter().any(|c| c.len() != cfg.users_per_cell) {
                return field("geometry.user_positions", "shape must be L x K");
            }
        }
        Ok(())
    }

    pub fn bs_position(&self, l: usize) -> Point {
        [self.bs_spacing * l as f64, 0.0, self.bs_height]
    }

    fn anchor(&self, l: usize) -> [f64; 2] {
        [self.bs_spacing * l as f64, self.ris_offset]
    }

    pub fn ris_position(&self, m: usize, cells: usize) -> Point {
        let [x, y] = self.anchor(m % cells);
        [x, y, self.ris_height]
    }

    /// User positions, drawn from `rng` unless fixed by configuration.
    pub fn user_positions(&self, cfg: &NetworkConfig, rng: &mut impl Rng) -> Vec<Vec<Point>> {
        if let Some(p) = &self.user_positions {
            return p.clone();
        }
        (0..cfg.cells)
            .map(|l| {
                let [cx0, cy0] = self.anchor(l);
                (0..cfg.users_per_cell)
                    .map(|_| {
                        let r = self.user_radius * rng.random::<f64>().sqrt();
                        let phi = std::f64::consts::TAU * rng.random::<f64>();
                        [cx0 + r * phi.cos(), cy0 + r * phi.sin(), self.user_height]
                    })
                    .collect()
            })
            .collect()
    }

    /// Linear power gain of a link of length `d` with exponent `exp`.
    pub fn gain(&self, d: f64, exp: f64) -> f64 {
        10f64.powf(-(self.ref_loss_db + 10.0 * exp * d.log10()) / 10.0)
    }

    fn noise_scale(&self) -> f64 {
        10f64.powf(-self.noise_floor_db / 10.0)
    }
}

/// All channel matrices of one Monte Carlo draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "ChannelWire<T>", try_from = "ChannelWire<T>", bound = "T: Real")]
pub struct ChannelSet<T: Real> {
    /// Direct link `F[l][k][i]` from BS `i` to user `(l, k)`, `N_u × N_BS`.
    pub direct: Vec<Vec<Vec<CMat<T>>>>,
    /// RIS-to-user `G_ru[l][k][m]`, `N_u × N_RIS`.
    pub ris_user: Vec<Vec<Vec<CMat<T>>>>,
    /// BS-to-RIS `G_br[m][i]`, `N_RIS × N_BS`.
    pub bs_ris: Vec<Vec<CMat<T>>>,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct ChannelWire<T: Real> {
    direct: Vec<Vec<Vec<WireMatrix<T>>>>,
    ris_user: Vec<Vec<Vec<WireMatrix<T>>>>,
    bs_ris: Vec<Vec<WireMatrix<T>>>,
    seed: u64,
}

fn wire3<T: Real>(v: &[Vec<Vec<CMat<T>>>]) -> Vec<Vec<Vec<WireMatrix<T>>>> {
    v.iter()
        .map(|a| a.iter().map(|b| b.iter().map(to_wire).collect()).collect())
        .collect()
}

fn unwire3<T: Real>(v: &[Vec<Vec<WireMatrix<T>>>]) -> Result<Vec<Vec<Vec<CMat<T>>>>> {
    v.iter()
        .map(|a| {
            a.iter()
                .map(|b| b.iter().map(from_wire).collect())
                .collect()
        })
        .collect()
}

impl<T: Real> From<ChannelSet<T>> for ChannelWire<T> {
    fn from(c: ChannelSet<T>) -> Self {
        Self {
            direct: wire3(&c.direct),
            ris_user: wire3(&c.ris_user),
            bs_ris: c
                .bs_ris
                .iter()
                .map(|row| row.iter().map(to_wire).collect())
                .collect(),
            seed: c.seed,
        }
    }
}

impl<T: Real> TryFrom<ChannelWire<T>> for ChannelSet<T> {
    type Error = Error;

    fn try_from(w: ChannelWire<T>) -> Result<Self> {
        Ok(Self {
            direct: unwire3(&w.direct)?,
            ris_user: unwire3(&w.ris_user)?,
            bs_ris: w
                .bs_ris
                .iter()
                .map(|row| row.iter().map(from_wire).collect())
                .collect::<Result<_>>()?,
            seed: w.seed,
        })
    }
}

/// Stream identifiers keep every link on its own reproducible RNG stream.
const STREAM_POSITIONS: u64 = 0;
const STREAM_DIRECT: u64 = 1 << 40;
const STREAM_RIS_USER: u64 = 2 << 40;
const STREAM_BS_RIS: u64 = 3 << 40;

fn link_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn cn_matrix<T: Real>(rows: usize, cols: usize, std: f64, rng: &mut impl Rng) -> CMat<T> {
    let s = std * std::f64::consts::FRAC_1_SQRT_2;
    CMat::<T>::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        cx(lit(s * re), lit(s * im))
    })
}

/// Half-wavelength ULA response along the `x` axis.
fn steering(n: usize, dir_cos: f64) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let ph = std::f64::consts::PI * i as f64 * dir_cos;
            (ph.cos(), ph.sin())
        })
        .collect()
}

/// Rician link from `tx` to `rx` with `rows` receive and `cols` transmit
/// elements and amplitude `amp`.
fn rician<T: Real>(
    rows: usize,
    cols: usize,
    tx: Point,
    rx: Point,
    amp: f64,
    kappa: f64,
    rng: &mut impl Rng,
) -> CMat<T> {
    let (w_los, w_nlos) = if kappa.is_infinite() {
        (1.0, 0.0)
    } else {
        ((kappa / (1.0 + kappa)).sqrt(), (1.0 / (1.0 + kappa)).sqrt())
    };
    let d = distance(tx, rx);
    let dir_cos = (rx[0] - tx[0]) / d;
    let a_rx = steering(rows, dir_cos);
    let a_tx = steering(cols, dir_cos);
    let nlos = cn_matrix::<f64>(rows, cols, 1.0, rng);
    CMat::<T>::from_fn(rows, cols, |r, c| {
        // a_rx[r] · conj(a_tx[c])
        let (ar, ai) = a_rx[r];
        let (br, bi) = a_tx[c];
        let los_re = ar * br + ai * bi;
        let los_im = ai * br - ar * bi;
        let z = nlos[(r, c)];
        cx(
            lit(amp * (w_los * los_re + w_nlos * z.re)),
            lit(amp * (w_los * los_im + w_nlos * z.im)),
        )
    })
}

fn checked_distance(a: Point, b: Point, what: &str) -> Result<f64> {
    let d = distance(a, b);
    if d > 1e-9 && d.is_finite() {
        Ok(d)
    } else {
        Err(Error::Geometry(format!("{what} has zero length")))
    }
}

/// Draws one channel realization; deterministic in `(cfg, geom, seed)`.
pub fn draw_channels<T: Real>(
    cfg: &NetworkConfig,
    geom: &GeometryModel,
    seed: u64,
) -> Result<ChannelSet<T>> {
    geom.validate(cfg)?;
    let (l_n, k_n, m_n) = (cfg.cells, cfg.users_per_cell, cfg.ris_count);
    let users = geom.user_positions(cfg, &mut link_rng(seed, STREAM_POSITIONS));
    let noise = geom.noise_scale();
    let kappa = geom.rician_k;

    let mut direct = Vec::with_capacity(l_n);
    let mut ris_user = Vec::with_capacity(l_n);
    for l in 0..l_n {
        let mut f_cell = Vec::with_capacity(k_n);
        let mut g_cell = Vec::with_capacity(k_n);
        for (k, &u) in users[l].iter().enumerate() {
            let uid = (l * k_n + k) as u64;
            let mut f_user = Vec::with_capacity(l_n);
            for i in 0..l_n {
                let d = checked_distance(geom.bs_position(i), u, "BS-user link")?;
                let std = (geom.gain(d, geom.pathloss_exp_direct) * noise).sqrt();
                let mut rng = link_rng(seed, STREAM_DIRECT + uid * 4096 + i as u64);
                f_user.push(cn_matrix(cfg.user_antennas, cfg.bs_antennas, std, &mut rng));
            }
            let mut g_user = Vec::with_capacity(m_n);
            for m in 0..m_n {
                let r = geom.ris_position(m, l_n);
                let d = checked_distance(r, u, "RIS-user link")?;
                let amp = (geom.gain(d, geom.pathloss_exp_ris) * noise).sqrt();
                let mut rng = link_rng(seed, STREAM_RIS_USER + uid * 4096 + m as u64);
                g_user.push(rician(
                    cfg.user_antennas,
                    cfg.ris_elements,
                    r,
                    u,
                    amp,
                    kappa,
                    &mut rng,
                ));
            }
            f_cell.push(f_user);
            g_cell.push(g_user);
        }
        direct.push(f_cell);
        ris_user.push(g_cell);
    }

    let mut bs_ris = Vec::with_capacity(m_n);
    for m in 0..m_n {
        let r = geom.ris_position(m, l_n);
        let mut row = Vec::with_capacity(l_n);
        for i in 0..l_n {
            let b = geom.bs_position(i);
            let d = checked_distance(b, r, "BS-RIS link")?;
            let amp = geom.gain(d, geom.pathloss_exp_ris).sqrt();
            let mut rng = link_rng(seed, STREAM_BS_RIS + (m * 4096 + i) as u64);
            row.push(rician(cfg.ris_elements, cfg.bs_antennas, b, r, amp, kappa, &mut rng));
        }
        bs_ris.push(row);
    }

    Ok(ChannelSet {
        direct,
        ris_user,
        bs_ris,
        seed,
    })
}

impl<T: Real> ChannelSet<T> {
    /// Draws with the geometry stored in `cfg`.
    pub fn draw(cfg: &NetworkConfig, seed: u64) -> Result<Self> {
        draw_channels(cfg, &cfg.geometry, seed)
    }

    pub fn cells(&self) -> usize {
        self.direct.len()
    }

    pub fn ris_count(&self) -> usize {
        self.bs_ris.len()
    }

    /// Copy with every RIS leg set to zero.
    pub fn without_ris(&self) -> Self {
        let mut c = self.clone();
        for m in c.ris_user.iter_mut().flatten().flatten() {
            m.fill(Cx::new(T::zero(), T::zero()));
        }
        for m in c.bs_ris.iter_mut().flatten() {
            m.fill(Cx::new(T::zero(), T::zero()));
        }
        c
    }

    /// Rank-one contribution of element `n` of RIS `m` to `H_lk,i`, so that
    /// `H = F + Σ υ_mn · ris_basis(m, n)`.
    pub fn ris_basis(&self, l: usize, k: usize, i: usize, m: usize, n: usize) -> CMat<T> {
        self.ris_user[l][k][m].column(n) * self.bs_ris[m][i].row(n)
    }
}

/// `Υ_m = diag(υ_m1, …, υ_mN)`.
pub fn ris_scattering_matrix<T: Real>(ris: &RisPhases<T>, m: usize) -> CMat<T> {
    CMat::<T>::from_diagonal(&nalgebra::DVector::from_vec(ris.upsilon[m].clone()))
}

/// `H_lk,i = Σ_m G_ru[l][k][m] Υ_m G_br[m][i] + F[l][k][i]`.
pub fn effective_channel<T: Real>(
    ch: &ChannelSet<T>,
    ris: &RisPhases<T>,
    l: usize,
    k: usize,
    i: usize,
) -> CMat<T> {
    let mut h = ch.direct[l][k][i].clone();
    for (m, g_ru) in ch.ris_user[l][k].iter().enumerate() {
        let mut scaled = g_ru.clone();
        for (n, mut col) in scaled.column_iter_mut().enumerate() {
            col *= ris.upsilon[m][n];
        }
        h += scaled * &ch.bs_ris[m][i];
    }
    h
}

/// Effective channels `H[l][k][i]` for all users and BSs.
pub fn effective_channels<T: Real>(ch: &ChannelSet<T>, ris: &RisPhases<T>) -> Vec<Vec<Vec<CMat<T>>>> {
    (0..ch.direct.len())
        .map(|l| {
            (0..ch.direct[l].len())
                .map(|k| {
                    (0..ch.direct[l][k].len())
                        .map(|i| effective_channel(ch, ris, l, k, i))
                        .collect()
                })
                .collect()
        })
        .collect()
}
