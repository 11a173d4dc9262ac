//! Parameter validation and the derived scalars of the construction.
//!
//! `RawParams` is what a user writes down (flags or a flat key-value file);
//! [`Params`] is the validated record with every derived quantity filled in:
//! the resonator budget `N = floor(T^kappa)`, the common prime weight
//! `f_p = 1/sqrt(|log(2 sigma - 1)|)` and the two factor-count thresholds.

use std::f64::consts::E;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `e^2 - e`, the prime-number-theorem mass of the middle window.
pub const WINDOW_MASS: f64 = E * E - E;

/// Smallest resonator budget for which the prime windows are well defined.
pub const MIN_SET_BUDGET: u64 = 16;

/// Unvalidated parameters as read from flags or a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    pub sigma: f64,
    pub beta: f64,
    pub kappa: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(rename = "T")]
    pub t_height: f64,
    pub a: f64,
    pub gamma: f64,
    pub b: f64,
    /// Explicit resonator budget replacing `floor(T^kappa)`.
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n_override: Option<u64>,
}

impl Default for RawParams {
    fn default() -> Self {
        RawParams {
            sigma: 0.75,
            beta: 0.5,
            kappa: 0.2,
            theta: 0.0,
            t_height: 1e8,
            a: 1.5,
            gamma: 0.5,
            b: 0.9,
            n_override: None,
        }
    }
}

/// Partially specified parameters; unset keys fall back to another record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamOverrides {
    pub sigma: Option<f64>,
    pub beta: Option<f64>,
    pub kappa: Option<f64>,
    pub theta: Option<f64>,
    #[serde(rename = "T")]
    pub t_height: Option<f64>,
    pub a: Option<f64>,
    pub gamma: Option<f64>,
    pub b: Option<f64>,
    #[serde(rename = "N")]
    pub n_override: Option<u64>,
}

impl ParamOverrides {
    pub fn apply(&self, base: RawParams) -> RawParams {
        RawParams {
            sigma: self.sigma.unwrap_or(base.sigma),
            beta: self.beta.unwrap_or(base.beta),
            kappa: self.kappa.unwrap_or(base.kappa),
            theta: self.theta.unwrap_or(base.theta),
            t_height: self.t_height.unwrap_or(base.t_height),
            a: self.a.unwrap_or(base.a),
            gamma: self.gamma.unwrap_or(base.gamma),
            b: self.b.unwrap_or(base.b),
            n_override: self.n_override.or(base.n_override),
        }
    }
}

/// Flat key-value configuration file (`key = value` lines, `#` comments).
///
/// Parameter keys are `sigma, beta, kappa, theta, T, a, gamma, b, N`; the
/// remaining keys tune the numerics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub sigma: Option<f64>,
    pub beta: Option<f64>,
    pub kappa: Option<f64>,
    pub theta: Option<f64>,
    #[serde(rename = "T")]
    pub t_height: Option<f64>,
    pub a: Option<f64>,
    pub gamma: Option<f64>,
    pub b: Option<f64>,
    #[serde(rename = "N")]
    pub n_override: Option<u64>,
    pub r_window_literal: Option<bool>,
    pub enum_cap: Option<usize>,
    pub tol: Option<f64>,
    pub zero_db: Option<String>,
    pub quad_step: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn overrides(&self) -> ParamOverrides {
        ParamOverrides {
            sigma: self.sigma,
            beta: self.beta,
            kappa: self.kappa,
            theta: self.theta,
            t_height: self.t_height,
            a: self.a,
            gamma: self.gamma,
            b: self.b,
            n_override: self.n_override,
        }
    }
}

/// Validated parameters with every derived scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params {
    pub sigma: f64,
    pub beta: f64,
    pub kappa: f64,
    pub theta: f64,
    #[serde(rename = "T")]
    pub t_height: f64,
    pub a: f64,
    pub gamma: f64,
    pub b: f64,
    /// Resonator budget `N`.
    #[serde(rename = "N")]
    pub n_budget: u64,
    /// True when `N` came from an explicit override instead of `floor(T^kappa)`.
    pub n_overridden: bool,
    /// `|log(2 sigma - 1)|`.
    pub log_gap: f64,
    pub f_p: f64,
    pub k_max: f64,
    pub k_min: f64,
}

fn domain(name: &'static str, value: f64, reason: impl Into<String>) -> Error {
    Error::Domain {
        name,
        value,
        reason: reason.into(),
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.5 && sigma < 1.0 {
        Ok(())
    } else {
        Err(domain("sigma", sigma, "must lie in (1/2, 1)"))
    }
}

fn check_unit(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(domain(name, x, "must lie in (0, 1)"))
    }
}

/// `floor(T^kappa)` with a guard against `x.9999999` results of exact powers.
pub fn budget_from_height(t_height: f64, kappa: f64) -> u64 {
    let x = t_height.powf(kappa);
    let n = x.floor();
    if n + 1.0 - x <= 1e-12 * x {
        (n + 1.0) as u64
    } else {
        n as u64
    }
}

/// Validate raw parameters and compute the derived fields.
pub fn validate(raw: &RawParams) -> Result<Params> {
    check_sigma(raw.sigma)?;
    check_unit("beta", raw.beta)?;
    check_unit("gamma", raw.gamma)?;
    check_unit("b", raw.b)?;
    let kappa_cap = (raw.sigma - 0.5).min(1.0 - raw.beta);
    if !(raw.kappa > 0.0 && raw.kappa < kappa_cap) {
        return Err(domain(
            "kappa",
            raw.kappa,
            format!("must lie in (0, min(sigma - 1/2, 1 - beta)) = (0, {kappa_cap})"),
        ));
    }
    if !raw.theta.is_finite() {
        return Err(domain("theta", raw.theta, "must be finite"));
    }
    if !(raw.t_height.is_finite() && raw.t_height >= 100.0) {
        return Err(domain("T", raw.t_height, "must be at least 100"));
    }
    if !(raw.a.is_finite() && raw.a > 1.0) {
        return Err(domain("a", raw.a, "must exceed 1"));
    }
    let n_budget = match raw.n_override {
        Some(0) => return Err(domain("N", 0.0, "must be positive")),
        Some(n) => n,
        None => budget_from_height(raw.t_height, raw.kappa),
    };
    if n_budget < 1 {
        return Err(domain("N", n_budget as f64, "floor(T^kappa) must be at least 1"));
    }
    let log_gap = (2.0 * raw.sigma - 1.0).ln().abs();
    let log_n = (n_budget as f64).ln();
    Ok(Params {
        sigma: raw.sigma,
        beta: raw.beta,
        kappa: raw.kappa,
        theta: raw.theta,
        t_height: raw.t_height,
        a: raw.a,
        gamma: raw.gamma,
        b: raw.b,
        n_budget,
        n_overridden: raw.n_override.is_some(),
        log_gap,
        f_p: 1.0 / log_gap.sqrt(),
        k_max: raw.a * log_n / log_gap,
        k_min: raw.gamma * log_n / log_gap,
    })
}

/// Validate for a run that builds the prime windows and sets (`N >= 16`).
pub fn validate_for_sets(raw: &RawParams) -> Result<Params> {
    let p = validate(raw)?;
    p.require_sets()?;
    Ok(p)
}

impl Params {
    pub fn require_sets(&self) -> Result<()> {
        if self.n_budget < MIN_SET_BUDGET {
            Err(Error::DegenerateWindow { n: self.n_budget })
        } else {
            Ok(())
        }
    }

    /// `f(p)^2`, the common weight of every prime in the middle window.
    pub fn prime_weight(&self) -> f64 {
        1.0 / self.log_gap
    }

    /// The resonator length scale standing in for `T^kappa`.
    ///
    /// Equals `T^kappa` unless `N` was overridden, in which case it is `N`.
    pub fn resonator_scale(&self) -> f64 {
        if self.n_overridden {
            self.n_budget as f64
        } else {
            self.t_height.powf(self.kappa)
        }
    }

    pub fn c_sigma(&self) -> f64 {
        self.log_gap / (self.log_gap + 1.0)
    }

    pub fn to_raw(&self) -> RawParams {
        RawParams {
            sigma: self.sigma,
            beta: self.beta,
            kappa: self.kappa,
            theta: self.theta,
            t_height: self.t_height,
            a: self.a,
            gamma: self.gamma,
            b: self.b,
            n_override: self.n_overridden.then_some(self.n_budget),
        }
    }
}

/// `C(sigma) = 1/(1 + f(p)^2) = |log(2 sigma - 1)| / (|log(2 sigma - 1)| + 1)`.
pub fn c_sigma(sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let l = (2.0 * sigma - 1.0).ln().abs();
    Ok(l / (l + 1.0))
}

/// `(b - 1)/log b`, which tends to 1 as `b -> 1`.
fn tilt_factor(b: f64) -> f64 {
    let d = b - 1.0;
    if d.abs() < 1e-8 {
        1.0 - d / 2.0
    } else {
        d / d.ln_1p()
    }
}

/// Largest admissible `gamma`: `min{1, C(sigma)(e^2 - e)(b - 1)/log b}`.
pub fn gamma_max(sigma: f64, b: f64) -> Result<f64> {
    check_unit("b", b)?;
    Ok((c_sigma(sigma)? * WINDOW_MASS * tilt_factor(b)).min(1.0))
}

/// The `b -> 1` limit of [`gamma_max`].
pub fn gamma_max_limit(sigma: f64) -> Result<f64> {
    Ok((c_sigma(sigma)? * WINDOW_MASS).min(1.0))
}

/// Root of `C(sigma)(e^2 - e) = 1` in `(1/2, 1)`.
///
/// Below this abscissa `gamma` may be taken arbitrarily close to 1.
pub fn sigma_star() -> f64 {
    let g = |s: f64| {
        let l = (2.0 * s - 1.0).ln().abs();
        l / (l + 1.0) * WINDOW_MASS - 1.0
    };
    // g decreases from +inf at 1/2 to -1 at 1.
    let (mut lo, mut hi) = (0.5 + 1e-12, 1.0 - 1e-12);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Shape of the lower-bound function: `min{1, (e^2 - e) C(sigma)}`.
pub fn upsilon_shape(sigma: f64) -> Result<f64> {
    gamma_max_limit(sigma)
}

/// The extreme-value lower bound evaluated with a unit constant.
///
/// The three factors are kept apart so a caller can rescale the constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremBound {
    pub sigma: f64,
    pub kappa: f64,
    #[serde(rename = "T")]
    pub t_height: f64,
    pub constant: f64,
    pub upsilon_shape: f64,
    /// `kappa^(1 - sigma) / sqrt(|log(2 sigma - 1)|)`.
    pub kappa_factor: f64,
    /// `(log T)^(1 - sigma) / (log log T)^sigma`.
    pub growth_factor: f64,
    pub value: f64,
}

impl TheoremBound {
    pub fn with_constant(mut self, c: f64) -> Self {
        self.value = self.value / self.constant * c;
        self.constant = c;
        self
    }
}

/// `(log T)^(1 - sigma) / (log log T)^sigma`.
pub fn growth_factor(sigma: f64, t_height: f64) -> f64 {
    let lt = t_height.ln();
    lt.powf(1.0 - sigma) / lt.ln().powf(sigma)
}

pub fn theorem_bound(params: &Params) -> Result<TheoremBound> {
    theorem_bound_at(params.sigma, params.kappa, params.t_height)
}

/// [`theorem_bound`] from the three scalars it depends on.
pub fn theorem_bound_at(sigma: f64, kappa: f64, t_height: f64) -> Result<TheoremBound> {
    check_sigma(sigma)?;
    if !(kappa > 0.0 && kappa < sigma - 0.5) {
        return Err(domain("kappa", kappa, "must lie in (0, sigma - 1/2)"));
    }
    if !(t_height > E) {
        return Err(domain("T", t_height, "log log T must be positive"));
    }
    let shape = upsilon_shape(sigma)?;
    let log_gap = (2.0 * sigma - 1.0).ln().abs();
    let kappa_factor = kappa.powf(1.0 - sigma) / log_gap.sqrt();
    let growth = growth_factor(sigma, t_height);
    Ok(TheoremBound {
        sigma,
        kappa,
        t_height,
        constant: 1.0,
        upsilon_shape: shape,
        kappa_factor,
        growth_factor: growth,
        value: shape * kappa_factor * growth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(sigma: f64, beta: f64, kappa: f64, t: f64) -> RawParams {
        RawParams {
            sigma,
            beta,
            kappa,
            t_height: t,
            ..RawParams::default()
        }
    }

    #[test]
    fn small_budget_is_degenerate_for_sets() {
        let r = raw(0.75, 0.3, 0.2, 1e6);
        assert_eq!(validate(&r).unwrap().n_budget, 15);
        assert!(matches!(
            validate_for_sets(&r),
            Err(Error::DegenerateWindow { n: 15 })
        ));
    }

    #[test]
    fn derived_fields() {
        let p = validate_for_sets(&raw(0.75, 0.3, 0.24, 1e8)).unwrap();
        assert_eq!(p.n_budget, 83);
        assert!((p.f_p - 1.0 / 2f64.ln().sqrt()).abs() < 1e-15);
        assert!(p.k_min < p.k_max);
    }

    #[test]
    fn kappa_constraint() {
        let err = validate(&raw(0.6, 0.5, 0.2, 1e8)).unwrap_err();
        assert!(matches!(err, Error::Domain { name: "kappa", .. }));
    }

    #[test]
    fn out_of_range_inputs() {
        assert!(validate(&raw(0.5, 0.3, 0.1, 1e8)).is_err());
        assert!(validate(&raw(0.75, 1.0, 0.1, 1e8)).is_err());
        assert!(validate(&raw(0.75, 0.3, 0.1, 50.0)).is_err());
        let mut r = raw(0.75, 0.3, 0.1, 1e8);
        r.gamma = 1.0;
        assert!(validate(&r).is_err());
        r.gamma = 0.5;
        r.a = 1.0;
        assert!(validate(&r).is_err());
    }

    #[test]
    fn exact_power_budget() {
        assert_eq!(budget_from_height(1e4, 0.5), 100);
        assert_eq!(budget_from_height(1e6, 0.5), 1000);
    }

    #[test]
    fn c_sigma_values() {
        let s = (1.0 + (-1f64).exp()) / 2.0;
        assert!((c_sigma(s).unwrap() - 0.5).abs() < 1e-15);
        // mpmath: log 2 / (log 2 + 1)
        assert!((c_sigma(0.75).unwrap() - 0.409_383_890_850_358_75).abs() < 1e-15);
        assert!(c_sigma(0.5 + 1e-12).unwrap() > 0.96);
        assert!(c_sigma(1.0).is_err());
    }

    #[test]
    fn gamma_max_values() {
        // mpmath reference
        assert!((gamma_max(0.95, 0.9).unwrap() - 0.422_556_641_413_224).abs() < 1e-13);
        let lim = gamma_max_limit(0.95).unwrap();
        assert!((gamma_max(0.95, 1.0 - 1e-10).unwrap() - lim).abs() < 1e-9);
        assert!((gamma_max_limit(0.880766).unwrap() - 1.0).abs() < 1e-4);
        assert!(gamma_max(0.95, 1.0).is_err());
    }

    #[test]
    fn sigma_star_threshold() {
        let s = sigma_star();
        assert!((s - 0.880_766_378_803_683_9).abs() < 1e-10);
        assert!((c_sigma(s).unwrap() * WINDOW_MASS - 1.0).abs() < 1e-8);
        assert!(c_sigma(s - 0.01).unwrap() * WINDOW_MASS > 1.0);
    }

    #[test]
    fn bound_factors_match_reference() {
        // mpmath, 50 digits
        let b = theorem_bound_at(0.75, 0.2, 1e8).unwrap();
        assert_eq!(b.upsilon_shape, 1.0);
        assert!((b.kappa_factor / 0.803_238_965_965_865_1 - 1.0).abs() < 1e-10);
        assert!((b.growth_factor / 0.929_005_019_006_128_6 - 1.0).abs() < 1e-10);
        assert!((b.with_constant(2.0).value - 2.0 * b.value).abs() < 1e-15);
    }

    #[test]
    fn bound_ignores_theta() {
        let mut r = raw(0.75, 0.3, 0.2, 1e8);
        let b0 = theorem_bound(&validate(&r).unwrap()).unwrap();
        r.theta = std::f64::consts::PI;
        let b1 = theorem_bound(&validate(&r).unwrap()).unwrap();
        assert_eq!(b0, b1);
    }

    #[test]
    fn config_file_parses_flat_keys() {
        let cfg = ConfigFile::parse("sigma = 0.8\nT = 1000\n# c\nN = 16\nr_window_literal = true\n")
            .unwrap();
        let raw = cfg.overrides().apply(RawParams::default());
        assert_eq!(raw.sigma, 0.8);
        assert_eq!(raw.t_height, 1000.0);
        assert_eq!(raw.n_override, Some(16));
        assert_eq!(cfg.r_window_literal, Some(true));
        assert!(ConfigFile::parse("bogus = 1").is_err());
    }
}
