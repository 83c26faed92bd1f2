//! Validated data model: network configuration, precoders, RIS phases,
//! common-rate splits and allocations.

use serde::{Deserialize, Serialize};

use crate::channel::GeometryModel;
use crate::error::{Error, Result};
use crate::linalg::{fro2, gram};
use crate::scalar::{CMat, Cx, Real};
use crate::wire::{from_wire, to_wire, vec_from_wire, vec_to_wire, WireMatrix};

/// Feasible set of the RIS reflection coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum FeasibilitySet {
    /// `|υ| ≤ 1`.
    UnitDisc,
    /// `|υ| = 1`.
    #[default]
    UnitModulus,
}

/// Number of data streams carried by each precoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum StreamMode {
    /// `N_BS` streams per message.
    #[default]
    Full,
    /// One stream per message.
    SingleStream,
}

/// Which objective an allocation maximizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum ObjectiveKind {
    #[default]
    MaxMinRate,
    MaxMinEE,
}

/// Transmission scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Scheme {
    /// One common message per cell plus private messages.
    #[default]
    Rsma,
    /// Private messages only; interference is treated as noise.
    Tin,
}

/// Rate expression used by the design (and by default for evaluation).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum RateModel {
    /// Normal approximation with the dispersion penalty.
    #[default]
    Fbl,
    /// Penalty dropped.
    Shannon,
}

fn one() -> f64 {
    1.0
}

/// Network dimensions, budgets, coding parameters and weights.
///
/// Field names in JSON follow the conventional symbols (`L`, `K`, `N_BS`,
/// ...). Power quantities are linear; `P` is relative to a unit noise floor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    #[serde(rename = "L")]
    pub cells: usize,
    #[serde(rename = "K")]
    pub users_per_cell: usize,
    #[serde(rename = "M")]
    pub ris_count: usize,
    #[serde(rename = "N_BS")]
    pub bs_antennas: usize,
    #[serde(rename = "N_u")]
    pub user_antennas: usize,
    #[serde(rename = "N_RIS")]
    pub ris_elements: usize,
    #[serde(rename = "P")]
    pub power: f64,
    #[serde(default = "one")]
    pub sigma2: f64,
    #[serde(rename = "n")]
    pub blocklength: u64,
    pub eps_c: f64,
    pub eps_p: f64,
    /// Bandwidth in Hz.
    pub omega: f64,
    /// Latency target in seconds.
    pub tau: f64,
    /// Rate weights `alpha[l][k]`; all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<Vec<f64>>>,
    /// EE weights `lambda[l][k]`; all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<Vec<f64>>>,
    /// Static power per user in Watts.
    pub p_c: f64,
    /// Inverse power-amplifier efficiency.
    pub eta: f64,
    /// Power drawn by each RIS in Watts.
    pub ris_power: f64,
    #[serde(default)]
    pub geometry: GeometryModel,
    #[serde(default)]
    pub feasibility_set: FeasibilitySet,
}

/// Converts decibels to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl NetworkConfig {
    /// Two cells, three users each, one RIS per cell, `P = 10 dB`.
    pub fn scenario1() -> Self {
        Self {
            cells: 2,
            users_per_cell: 3,
            ris_count: 2,
            bs_antennas: 2,
            user_antennas: 2,
            ris_elements: 20,
            power: db_to_linear(10.0),
            sigma2: 1.0,
            blocklength: 256,
            eps_c: 0.5e-5,
            eps_p: 0.5e-5,
            omega: 1e6,
            tau: 10e-3,
            alpha: None,
            lambda: None,
            p_c: 1.0,
            eta: 1.0,
            ris_power: 1.0,
            geometry: GeometryModel::default(),
            feasibility_set: FeasibilitySet::UnitModulus,
        }
    }

    /// Single cell with one RIS; otherwise as [`NetworkConfig::scenario1`].
    pub fn scenario2() -> Self {
        Self {
            cells: 1,
            ris_count: 1,
            ..Self::scenario1()
        }
    }

    /// Sets `eps_c = eps_p = eps / 2`.
    pub fn with_total_eps(mut self, eps: f64) -> Self {
        self.eps_c = eps / 2.0;
        self.eps_p = eps / 2.0;
        self
    }

    pub fn users(&self) -> usize {
        self.cells * self.users_per_cell
    }

    /// Iterator over all `(cell, user)` index pairs in row-major order.
    pub fn user_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.cells).flat_map(move |l| (0..self.users_per_cell).map(move |k| (l, k)))
    }

    pub fn alpha(&self, l: usize, k: usize) -> f64 {
        self.alpha.as_ref().map_or(1.0, |a| a[l][k])
    }

    pub fn lambda(&self, l: usize, k: usize) -> f64 {
        self.lambda.as_ref().map_or(1.0, |a| a[l][k])
    }

    /// Streams per precoder for a stream mode.
    pub fn streams(&self, mode: StreamMode) -> usize {
        match mode {
            StreamMode::Full => self.bs_antennas,
            StreamMode::SingleStream => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_config(self)
    }
}

fn check_weights(field: &str, w: &Option<Vec<Vec<f64>>>, cfg: &NetworkConfig) -> Result<()> {
    let Some(w) = w else { return Ok(()) };
    if w.len() != cfg.cells || w.iter().any(|row| row.len() != cfg.users_per_cell) {
        return Err(Error::validation(field, "shape must be L x K"));
    }
    if w.iter().flatten().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::validation(field, "weights must be positive and finite"));
    }
    Ok(())
}

/// Checks every configuration invariant, reporting the first violated field.
pub fn validate_config(cfg: &NetworkConfig) -> Result<()> {
    let dims = [
        ("L", cfg.cells),
        ("K", cfg.users_per_cell),
        ("N_BS", cfg.bs_antennas),
        ("N_u", cfg.user_antennas),
        ("N_RIS", cfg.ris_elements),
    ];
    for (field, v) in dims {
        if v < 1 {
            return Err(Error::validation(field, "must be at least 1"));
        }
    }
    if !(cfg.power > 0.0 && cfg.power.is_finite()) {
        return Err(Error::validation("P", "must be positive and finite"));
    }
    if !(cfg.sigma2 > 0.0 && cfg.sigma2.is_finite()) {
        return Err(Error::validation("sigma2", "must be positive and finite"));
    }
    if cfg.blocklength < 1 {
        return Err(Error::validation("n", "must be at least 1"));
    }
    for (field, eps) in [("eps_c", cfg.eps_c), ("eps_p", cfg.eps_p)] {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::validation(field, "must lie in (0, 0.5)"));
        }
    }
    if !(cfg.omega > 0.0 && cfg.omega.is_finite()) {
        return Err(Error::validation("omega", "must be positive and finite"));
    }
    if !(cfg.tau > 0.0) {
        return Err(Error::validation("tau", "must be positive"));
    }
    check_weights("alpha", &cfg.alpha, cfg)?;
    check_weights("lambda", &cfg.lambda, cfg)?;
    if !(cfg.p_c > 0.0 && cfg.p_c.is_finite()) {
        return Err(Error::validation("p_c", "must be positive and finite"));
    }
    if !(cfg.eta >= 1.0 && cfg.eta.is_finite()) {
        return Err(Error::validation("eta", "must be finite and at least 1"));
    }
    if !(cfg.ris_power >= 0.0 && cfg.ris_power.is_finite()) {
        return Err(Error::validation("ris_power", "must be nonnegative and finite"));
    }
    cfg.geometry.validate(cfg)
}

/// Common precoder per BS and private precoder per user.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    into = "PrecoderWire<T>",
    try_from = "PrecoderWire<T>",
    bound = "T: Real"
)]
pub struct PrecoderSet<T: Real> {
    /// `W_l`, `N_BS × d`.
    pub common: Vec<CMat<T>>,
    /// `W_lk`, `N_BS × d`.
    pub private: Vec<Vec<CMat<T>>>,
    pub stream_mode: StreamMode,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct PrecoderWire<T: Real> {
    common: Vec<WireMatrix<T>>,
    private: Vec<Vec<WireMatrix<T>>>,
    stream_mode: StreamMode,
}

impl<T: Real> From<PrecoderSet<T>> for PrecoderWire<T> {
    fn from(p: PrecoderSet<T>) -> Self {
        Self {
            common: p.common.iter().map(to_wire).collect(),
            private: p
                .private
                .iter()
                .map(|cell| cell.iter().map(to_wire).collect())
                .collect(),
            stream_mode: p.stream_mode,
        }
    }
}

impl<T: Real> TryFrom<PrecoderWire<T>> for PrecoderSet<T> {
    type Error = Error;

    fn try_from(w: PrecoderWire<T>) -> Result<Self> {
        Ok(Self {
            common: w.common.iter().map(from_wire).collect::<Result<_>>()?,
            private: w
                .private
                .iter()
                .map(|cell| cell.iter().map(from_wire).collect::<Result<Vec<_>>>())
                .collect::<Result<_>>()?,
            stream_mode: w.stream_mode,
        })
    }
}

impl<T: Real> PrecoderSet<T> {
    /// All-zero precoders with the dimensions implied by `cfg` and `mode`.
    pub fn zeros(cfg: &NetworkConfig, mode: StreamMode) -> Self {
        let d = cfg.streams(mode);
        let z = || CMat::<T>::zeros(cfg.bs_antennas, d);
        Self {
            common: (0..cfg.cells).map(|_| z()).collect(),
            private: (0..cfg.cells)
                .map(|_| (0..cfg.users_per_cell).map(|_| z()).collect())
                .collect(),
            stream_mode: mode,
        }
    }

    pub fn cells(&self) -> usize {
        self.common.len()
    }

    /// Checks matrix dimensions against `cfg` and the stream mode.
    pub fn check_shape(&self, cfg: &NetworkConfig) -> Result<()> {
        let d = cfg.streams(self.stream_mode);
        let ok_mat = |m: &CMat<T>| m.nrows() == cfg.bs_antennas && m.ncols() == d;
        let ok = self.common.len() == cfg.cells
            && self.private.len() == cfg.cells
            && self.common.iter().all(ok_mat)
            && self
                .private
                .iter()
                .all(|c| c.len() == cfg.users_per_cell && c.iter().all(ok_mat));
        if ok {
            Ok(())
        } else {
            Err(Error::validation("precoders", "dimensions do not match configuration"))
        }
    }

    /// Multiplies every precoder of cell `l` by `factor`.
    pub fn scale_cell(&mut self, l: usize, factor: T) {
        let f = Cx::new(factor, T::zero());
        self.common[l] *= f;
        for w in &mut self.private[l] {
            *w *= f;
        }
    }
}

/// `C_l = W_l W_lᴴ + Σ_k W_lk W_lkᴴ`.
pub fn transmit_covariance<T: Real>(p: &PrecoderSet<T>, l: usize) -> CMat<T> {
    p.private[l]
        .iter()
        .fold(gram(&p.common[l]), |acc, w| acc + gram(w))
}

/// `Tr(C_l)`, computed as a sum of squared Frobenius norms.
pub fn transmit_power<T: Real>(p: &PrecoderSet<T>, l: usize) -> T {
    p.private[l]
        .iter()
        .fold(fro2(&p.common[l]), |acc, w| acc + fro2(w))
}

/// Reflection coefficients of every RIS.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "RisWire<T>", from = "RisWire<T>", bound = "T: Real")]
pub struct RisPhases<T: Real> {
    /// `upsilon[m][n]`.
    pub upsilon: Vec<Vec<Cx<T>>>,
    pub feasibility_set: FeasibilitySet,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct RisWire<T: Real> {
    upsilon: Vec<Vec<[T; 2]>>,
    feasibility_set: FeasibilitySet,
}

impl<T: Real> From<RisPhases<T>> for RisWire<T> {
    fn from(r: RisPhases<T>) -> Self {
        Self {
            upsilon: r.upsilon.iter().map(|v| vec_to_wire(v)).collect(),
            feasibility_set: r.feasibility_set,
        }
    }
}

impl<T: Real> From<RisWire<T>> for RisPhases<T> {
    fn from(w: RisWire<T>) -> Self {
        Self {
            upsilon: w.upsilon.iter().map(|v| vec_from_wire(v)).collect(),
            feasibility_set: w.feasibility_set,
        }
    }
}

/// Tolerance on the modulus constraints of [`RisPhases`].
pub const MODULUS_TOL: f64 = 1e-12;

impl<T: Real> RisPhases<T> {
    /// Every coefficient set to `value`.
    pub fn constant(cfg: &NetworkConfig, value: Cx<T>, set: FeasibilitySet) -> Self {
        Self {
            upsilon: vec![vec![value; cfg.ris_elements]; cfg.ris_count],
            feasibility_set: set,
        }
    }

    pub fn ris_count(&self) -> usize {
        self.upsilon.len()
    }

    /// Largest violation of the feasibility set.
    pub fn modulus_violation(&self) -> f64 {
        let mut worst = 0f64;
        for v in self.upsilon.iter().flatten() {
            let r = crate::scalar::to_f64(v.norm_sqr().sqrt());
            let dev = match self.feasibility_set {
                FeasibilitySet::UnitDisc => r - 1.0,
                FeasibilitySet::UnitModulus => (r - 1.0).abs(),
            };
            worst = worst.max(dev);
        }
        worst
    }

    pub fn check(&self) -> Result<()> {
        let v = self.modulus_violation();
        if v <= MODULUS_TOL {
            Ok(())
        } else {
            Err(Error::validation(
                "upsilon",
                format!("feasible-set violation {v:e}"),
            ))
        }
    }
}

/// Portions `t[l][k]` of the common message assigned to each user, in nats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CommonRateSplit<T: Real> {
    pub t: Vec<Vec<T>>,
}

impl<T: Real> CommonRateSplit<T> {
    pub fn zeros(cfg: &NetworkConfig) -> Self {
        Self {
            t: vec![vec![T::zero(); cfg.users_per_cell]; cfg.cells],
        }
    }

    /// `Σ_k t[l][k]`.
    pub fn cell_total(&self, l: usize) -> T {
        self.t[l].iter().fold(T::zero(), |a, &b| a + b)
    }
}

/// Why the outer loop stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum StopReason {
    #[default]
    NotRun,
    /// Relative improvement fell below the threshold.
    Converged,
    /// Iteration cap reached.
    IterationCap,
}

/// Outcome of one unit-modulus RIS update, in true objective units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RisAcceptance {
    pub before: f64,
    pub candidate: f64,
    pub accepted: bool,
}

/// Per-iteration record of the alternating optimization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct ConvergenceTrace {
    /// True objective after each outer iteration; entry 0 is the start.
    pub objective: Vec<f64>,
    /// True objective after each precoder update.
    pub w_phase: Vec<f64>,
    /// True objective after each RIS update.
    pub ris_phase: Vec<f64>,
    /// Cumulative wall time in milliseconds after each outer iteration.
    pub wall_ms: Vec<f64>,
    /// Interior-point iterations spent in each outer iteration.
    pub subproblem_iterations: Vec<usize>,
    /// Dinkelbach parameter sequence of every EE precoder update.
    pub gda_mu: Vec<Vec<f64>>,
    /// Unit-modulus acceptance decisions.
    pub ris_acceptance: Vec<RisAcceptance>,
    pub stop: StopReason,
}

impl ConvergenceTrace {
    pub fn iterations(&self) -> usize {
        self.objective.len().saturating_sub(1)
    }
}

/// Complete resource allocation with its achieved metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Allocation<T: Real> {
    pub precoders: PrecoderSet<T>,
    pub ris: RisPhases<T>,
    pub split: CommonRateSplit<T>,
    /// Per-user rates `t_lk + r_p,lk` in nats per channel use.
    pub rates: Vec<Vec<T>>,
    /// Per-user energy efficiencies in nats per channel use per Watt.
    pub ees: Vec<Vec<T>>,
    /// Minimum weighted rate or EE, matching `objective_kind`.
    pub objective: T,
    pub objective_kind: ObjectiveKind,
    pub rate_model: RateModel,
    pub scheme: Scheme,
    /// `false` when the design ignored the RIS legs.
    pub ris_enabled: bool,
    /// Static power per user used for the energy efficiencies.
    pub circuit_power: f64,
    pub trace: ConvergenceTrace,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    #[test]
    fn scenario_presets_validate() {
        assert!(validate_config(&NetworkConfig::scenario1()).is_ok());
        assert!(validate_config(&NetworkConfig::scenario2()).is_ok());
    }

    #[test]
    fn first_violated_field_is_named() {
        let cfg = NetworkConfig {
            eps_c: 0.7,
            ..NetworkConfig::scenario1()
        };
        match validate_config(&cfg) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "eps_c"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn no_ris_is_valid() {
        let cfg = NetworkConfig {
            ris_count: 0,
            ..NetworkConfig::scenario1()
        };
        assert!(validate_config(&cfg).is_ok());
    }

    #[test]
    fn bad_weights_rejected() {
        let cfg = NetworkConfig {
            alpha: Some(vec![vec![1.0; 3], vec![1.0, 0.0, 1.0]]),
            ..NetworkConfig::scenario1()
        };
        assert!(matches!(
            validate_config(&cfg),
            Err(Error::Validation { field, .. }) if field == "alpha"
        ));
    }

    #[test]
    fn identity_common_precoder() {
        let mut cfg = NetworkConfig::scenario2();
        cfg.users_per_cell = 1;
        let mut p = PrecoderSet::<f64>::zeros(&cfg, StreamMode::Full);
        p.common[0] = CMat::identity(2, 2);
        let c = transmit_covariance(&p, 0);
        assert_eq!(c, CMat::identity(2, 2));
        assert_eq!(transmit_power(&p, 0), 2.0);
    }

    #[test]
    fn zero_precoders_zero_covariance() {
        let cfg = NetworkConfig::scenario1();
        let p = PrecoderSet::<f64>::zeros(&cfg, StreamMode::Full);
        assert_eq!(transmit_covariance(&p, 1), CMat::zeros(2, 2));
        assert_eq!(transmit_power(&p, 1), 0.0);
    }

    #[test]
    fn precoders_round_trip_json() {
        let cfg = NetworkConfig::scenario2();
        let mut p = PrecoderSet::<f64>::zeros(&cfg, StreamMode::Full);
        p.private[0][1][(1, 0)] = cx(0.1, -1.0 / 3.0);
        let s = serde_json::to_string(&p).unwrap();
        let back: PrecoderSet<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn config_json_uses_symbol_names() {
        let s = serde_json::to_value(NetworkConfig::scenario1()).unwrap();
        assert_eq!(s["N_BS"], 2);
        assert_eq!(s["n"], 256);
        let back: NetworkConfig = serde_json::from_value(s).unwrap();
        assert_eq!(back, NetworkConfig::scenario1());
    }

    #[test]
    fn modulus_violation_per_set() {
        let cfg = NetworkConfig::scenario2();
        let mut r = RisPhases::<f64>::constant(&cfg, cx(0.5, 0.0), FeasibilitySet::UnitDisc);
        assert!(r.check().is_ok());
        r.feasibility_set = FeasibilitySet::UnitModulus;
        assert!(r.check().is_err());
    }
}
