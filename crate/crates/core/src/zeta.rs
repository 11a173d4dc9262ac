//! `zeta(s)` by Euler-Maclaurin summation, a branch-tracked `log zeta`, and
//! the zero indicator backed by a plain-text zero list.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numtheory::prime_powers;
use crate::sum::{ComplexNeumaier, Neumaier};

/// Default absolute tolerance on the Euler-Maclaurin correction terms.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Environment variable naming a zero database file.
pub const ZERO_DB_ENV: &str = "RZL_ZERO_DB";

const MAX_HEIGHT: f64 = 1e8;
const MIN_SIGMA: f64 = 0.4;
const MAX_CORRECTIONS: usize = 60;

/// `B_{2k}/(2k)!` for `k = 1..=MAX_CORRECTIONS`.
fn bernoulli_ratios() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (1..=MAX_CORRECTIONS)
            .map(|k| {
                let two_k = 2.0 * k as f64;
                let z = zeta_even(k);
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                // (2pi)^{2k} overflows nothing for k <= 60
                sign * 2.0 * z / (2.0 * PI).powf(two_k)
            })
            .collect()
    })
}

/// `zeta(2k)` by direct summation with an Euler-Maclaurin tail.
fn zeta_even(k: usize) -> f64 {
    if k == 1 {
        return PI * PI / 6.0;
    }
    let s = 2.0 * k as f64;
    let m = 100.0f64;
    let mut acc = Neumaier::new();
    for n in (1..100).rev() {
        acc.add((n as f64).powf(-s));
    }
    acc.add(m.powf(1.0 - s) / (s - 1.0));
    acc.add(0.5 * m.powf(-s));
    acc.add(s / 12.0 * m.powf(-s - 1.0));
    acc.add(-s * (s + 1.0) * (s + 2.0) / 720.0 * m.powf(-s - 3.0));
    acc.value()
}

/// Precomputed `log n` and `n^{-it}` for one height `t`.
///
/// Evaluating several abscissae at the same height reuses the phases.
#[derive(Debug, Clone)]
pub struct ZetaHeight {
    pub t: f64,
    /// Truncation point `N`: terms `n < N` are summed directly.
    pub cut: usize,
    ln_n: Vec<f64>,
    phase: Vec<Complex64>,
}

impl ZetaHeight {
    pub fn new(t: f64) -> Result<Self> {
        if !(t.is_finite() && t.abs() <= MAX_HEIGHT) {
            return Err(Error::Domain {
                name: "t",
                value: t,
                reason: format!("|t| must not exceed {MAX_HEIGHT:e}"),
            });
        }
        let cut = (t.abs() / 4.0).ceil() as usize + 15;
        let ln_n: Vec<f64> = (1..=cut).map(|n| (n as f64).ln()).collect();
        let phase = ln_n.iter().map(|&l| Complex64::from_polar(1.0, -t * l)).collect();
        Ok(ZetaHeight { t, cut, ln_n, phase })
    }

    /// `zeta(sigma + it)` and an error estimate.
    pub fn zeta(&self, sigma: f64, tol: f64) -> Result<(Complex64, f64)> {
        check_sigma_tol(sigma, tol)?;
        let t = self.t;
        let s = Complex64::new(sigma, t);
        let n = self.cut;
        let mut head = ComplexNeumaier::default();
        let mut rounding = Neumaier::new();
        // descending n: small terms first
        for k in (0..n - 1).rev() {
            let mag = (-sigma * self.ln_n[k]).exp();
            head.add(self.phase[k] * mag);
            rounding.add(mag * (3.0 + t.abs() * self.ln_n[k]));
        }
        let ln_cut = self.ln_n[n - 1];
        let cut_pow = self.phase[n - 1] * (-sigma * ln_cut).exp(); // N^{-s}
        let nf = n as f64;
        let mut total = head.value() + cut_pow * nf / (s - 1.0) + cut_pow * 0.5;

        let ratios = bernoulli_ratios();
        let mut poch = s;
        let mut n_pow = cut_pow / nf; // N^{-s-1}
        let inv_n2 = 1.0 / (nf * nf);
        let mut prev = f64::INFINITY;
        let mut last = f64::INFINITY;
        let mut converged = false;
        for (k, &b) in ratios.iter().enumerate() {
            let term = poch * n_pow * b;
            let mag = term.norm();
            total += term;
            last = mag;
            if mag < tol {
                converged = true;
                break;
            }
            if k >= 2 && mag > prev {
                break;
            }
            prev = mag;
            let kk = (k + 1) as f64;
            poch = poch * (s + 2.0 * kk - 1.0) * (s + 2.0 * kk);
            n_pow *= inv_n2;
        }
        if !converged {
            return Err(Error::ToleranceUnreachable { sigma, t, tol });
        }
        let eps = f64::EPSILON;
        let err = last + 2.0 * eps * rounding.value() + 4.0 * eps * total.norm();
        Ok((total, err))
    }
}

fn check_sigma_tol(sigma: f64, tol: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma >= MIN_SIGMA) {
        return Err(Error::Domain {
            name: "sigma",
            value: sigma,
            reason: format!("zeta evaluation needs sigma >= {MIN_SIGMA}"),
        });
    }
    if !(tol >= 1e-13) {
        return Err(Error::Domain {
            name: "tol",
            value: tol,
            reason: "tolerance must be at least 1e-13".into(),
        });
    }
    Ok(())
}

/// `zeta(sigma + it)` with an error estimate.
pub fn zeta_em(sigma: f64, t: f64, tol: f64) -> Result<(Complex64, f64)> {
    check_sigma_tol(sigma, tol)?;
    if t == 0.0 && sigma == 1.0 {
        return Err(Error::Domain {
            name: "sigma",
            value: sigma,
            reason: "pole at s = 1".into(),
        });
    }
    ZetaHeight::new(t)?.zeta(sigma, tol)
}

/// One evaluated point of `log zeta(sigma + it)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogZetaSample {
    pub sigma: f64,
    pub t: f64,
    pub value: Complex64,
    pub zeta: Complex64,
    /// Absolute error estimate of `zeta`.
    pub err_est: f64,
    /// Horizontal continuation steps taken from the anchor line.
    pub path_steps: usize,
}

impl LogZetaSample {
    /// Error estimate carried over to `log zeta`.
    pub fn log_err(&self) -> f64 {
        self.err_est / self.zeta.norm()
    }
}

/// Continuation step controls.
#[derive(Debug, Clone, Copy)]
pub struct PathOptions {
    pub max_step: f64,
    pub min_step: f64,
    /// Largest accepted change of `arg zeta` per step.
    pub max_turn: f64,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions {
            max_step: 0.25,
            min_step: 1e-6,
            max_turn: PI / 4.0,
        }
    }
}

/// Abscissa where the branch is fixed: there `|Im log zeta| <= log zeta(2) < pi`.
const ANCHOR_SIGMA: f64 = 2.0;

/// `log zeta(sigma + it)` continued horizontally from `2 + it`.
pub fn log_zeta(sigma: f64, t: f64, tol: f64) -> Result<LogZetaSample> {
    log_zeta_with(sigma, t, tol, PathOptions::default())
}

pub fn log_zeta_with(sigma: f64, t: f64, tol: f64, opts: PathOptions) -> Result<LogZetaSample> {
    if t < 0.0 {
        let mut s = log_zeta_with(sigma, -t, tol, opts)?;
        s.t = t;
        s.value = s.value.conj();
        s.zeta = s.zeta.conj();
        return Ok(s);
    }
    if !(t >= 1.0 || (t == 0.0 && sigma > 1.0)) {
        return Err(Error::Precondition(format!(
            "log zeta needs |t| >= 1 (or t = 0 with sigma > 1), got sigma = {sigma}, t = {t}"
        )));
    }
    let height = ZetaHeight::new(t)?;
    continue_from_anchor(&height, sigma, tol, opts)
}

fn continue_from_anchor(height: &ZetaHeight, sigma: f64, tol: f64, opts: PathOptions) -> Result<LogZetaSample> {
    let t = height.t;
    let start = ANCHOR_SIGMA.max(sigma);
    let (mut z, mut err) = height.zeta(start, tol)?;
    let mut log = z.ln();
    let mut cur = start;
    let mut step = opts.max_step;
    let mut steps = 0;
    while cur > sigma {
        let next = (cur - step).max(sigma);
        let (z_next, err_next) = height.zeta(next, tol)?;
        if z_next.norm() <= 8.0 * err_next {
            return Err(Error::Continuation {
                sigma,
                t,
                reason: format!("zeta vanishes to working accuracy at sigma = {next}"),
            });
        }
        let delta = (z_next / z).ln();
        if delta.im.abs() > opts.max_turn || !delta.is_finite() {
            step *= 0.5;
            if step < opts.min_step {
                return Err(Error::Continuation {
                    sigma,
                    t,
                    reason: format!("step underflow near sigma = {cur}; a zero is close to the path"),
                });
            }
            continue;
        }
        log += delta;
        z = z_next;
        err = err_next;
        cur = next;
        steps += 1;
        step = (step * 1.5).min(opts.max_step);
    }
    Ok(LogZetaSample {
        sigma,
        t,
        value: rebranch(z, log.im),
        zeta: z,
        err_est: err,
        path_steps: steps,
    })
}

/// Principal `Log z` shifted by the multiple of `2 pi i` nearest `target_im`.
fn rebranch(z: Complex64, target_im: f64) -> Complex64 {
    let principal = z.ln();
    let k = ((target_im - principal.im) / (2.0 * PI)).round();
    Complex64::new(principal.re, principal.im + 2.0 * PI * k)
}

/// Nodes per horizontal re-anchor along a vertical line.
const REANCHOR_EVERY: usize = 32;

/// `log zeta(sigma + i t)` at ascending `ts >= 1`.
///
/// Consecutive nodes are linked by unwrapping `arg zeta`; a horizontal
/// continuation re-anchors the branch every 32 nodes and whenever a jump
/// exceeds `pi/2`. Failures are reported per node.
pub fn log_zeta_vertical(sigma: f64, ts: &[f64], tol: f64) -> Vec<Result<Complex64>> {
    if ts.windows(2).any(|w| w[1] < w[0]) {
        return ts
            .iter()
            .map(|_| Err(Error::Precondition("vertical sampling needs ascending heights".into())))
            .collect();
    }
    let chunks: Vec<&[f64]> = ts.chunks(REANCHOR_EVERY).collect();
    chunks
        .par_iter()
        .map(|chunk| vertical_chunk(sigma, chunk, tol))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn vertical_chunk(sigma: f64, ts: &[f64], tol: f64) -> Vec<Result<Complex64>> {
    let mut out = Vec::with_capacity(ts.len());
    let mut prev: Option<Complex64> = None;
    for &t in ts {
        let r = (|| {
            if t < 1.0 {
                return log_zeta(sigma, t, tol).map(|s| s.value);
            }
            let height = ZetaHeight::new(t)?;
            match prev {
                Some(p) => {
                    let (z, _) = height.zeta(sigma, tol)?;
                    let candidate = rebranch(z, p.im);
                    if (candidate.im - p.im).abs() <= 0.5 * PI {
                        Ok(candidate)
                    } else {
                        continue_from_anchor(&height, sigma, tol, PathOptions::default()).map(|s| s.value)
                    }
                }
                None => continue_from_anchor(&height, sigma, tol, PathOptions::default()).map(|s| s.value),
            }
        })();
        prev = r.as_ref().ok().copied();
        out.push(r);
    }
    out
}

/// Truncated Dirichlet series `sum_{n <= n_max} Lambda(n)/(n^s log n)`.
///
/// Converges absolutely for `sigma > 1`; used as an independent check of the
/// branch at the anchor line.
pub fn log_zeta_dirichlet(sigma: f64, t: f64, n_max: u64) -> Result<Complex64> {
    if sigma <= 1.0 {
        return Err(Error::Precondition("Dirichlet series needs sigma > 1".into()));
    }
    let mut acc = ComplexNeumaier::default();
    for pp in prime_powers(1.0, n_max as f64)?.iter().rev() {
        let ln = (pp.n as f64).ln();
        acc.add(Complex64::from_polar(pp.lambda_over_log() * (-sigma * ln).exp(), -t * ln));
    }
    Ok(acc.value())
}

/// A list of zero ordinates and the height up to which it is complete.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroDatabase {
    pub verified_height: f64,
    /// Ordinates of zeros on the critical line, ascending.
    pub ordinates: Vec<f64>,
    /// Zeros off the critical line as `(re, im)`.
    pub off_line: Vec<(f64, f64)>,
}

const BUNDLED_ZEROS: &str = include_str!("../data/zeros.txt");

impl ZeroDatabase {
    /// Parse the text format: `verified_height <h>` then one ordinate (or
    /// `re im` pair) per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut verified_height = None;
        let mut ordinates = Vec::new();
        let mut off_line = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Config(format!("zero database line {}: {what}", lineno + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number `{s}`")));
            match fields.as_slice() {
                ["verified_height", h] => verified_height = Some(num(h)?),
                [im] => ordinates.push(num(im)?),
                [re, im] => off_line.push((num(re)?, num(im)?)),
                _ => return Err(bad("expected one or two columns")),
            }
        }
        let verified_height =
            verified_height.ok_or_else(|| Error::Config("zero database lacks a `verified_height` header".into()))?;
        if ordinates.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Config("zero ordinates must be positive".into()));
        }
        if ordinates.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("zero ordinates must be ascending".into()));
        }
        Ok(ZeroDatabase {
            verified_height,
            ordinates,
            off_line,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The shipped list of the first ten zeros, complete below height 50.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_ZEROS).expect("bundled zero list parses")
    }

    /// The file named by `RZL_ZERO_DB`, if set.
    pub fn from_env() -> Result<Option<Self>> {
        match std::env::var_os(ZERO_DB_ENV) {
            Some(p) if !p.is_empty() => Ok(Some(Self::load(Path::new(&p))?)),
            _ => Ok(None),
        }
    }

    /// No zeros, certified complete up to `height`.
    pub fn empty_verified(height: f64) -> Self {
        ZeroDatabase {
            verified_height: height,
            ordinates: Vec::new(),
            off_line: Vec::new(),
        }
    }

    /// Zeros with real part at least `sigma` and ordinate within `radius` of `t`.
    fn has_zero_near(&self, sigma: f64, t: f64, radius: f64) -> bool {
        if sigma <= 0.5 {
            let lo = self.ordinates.partition_point(|&y| y < t - radius);
            if lo < self.ordinates.len() && self.ordinates[lo] <= t + radius {
                return true;
            }
        }
        // off-line zeros come in pairs re and 1 - re
        self.off_line
            .iter()
            .any(|&(re, im)| re.max(1.0 - re) >= sigma && (t - im).abs() <= radius)
    }
}

/// Value of the zero indicator and whether it rests on an uncertified range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Indicator {
    pub value: u8,
    pub heuristic: bool,
}

/// 1 when no zero with real part `>= sigma` lies within `(log t)^2` of `t`.
pub fn indicator(sigma: f64, t: f64, db: &ZeroDatabase) -> Result<Indicator> {
    if !(t > 1.0) {
        return Err(Error::Precondition(format!("indicator needs t > 1, got {t}")));
    }
    if sigma > 1.0 {
        return Ok(Indicator {
            value: 1,
            heuristic: false,
        });
    }
    let radius = t.ln().powi(2);
    if db.has_zero_near(sigma, t, radius) {
        return Ok(Indicator {
            value: 0,
            heuristic: false,
        });
    }
    Ok(Indicator {
        value: 1,
        heuristic: t + radius > db.verified_height,
    })
}
