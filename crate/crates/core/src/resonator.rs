//! The weight `f`, the coefficients `r` and the resonator `R(t) = sum r(m) m^{-it}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::Params;
use crate::sets::SetFamily;
use crate::sum::{compensated_sum, ComplexNeumaier, Neumaier};

/// `f(m)`: multiplicative, supported on square-free `m` with every prime factor
/// in `primes`, and equal to `f_p` on each such prime.
pub fn f_value(m: u64, primes: &[u64], f_p: f64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let mut rest = m;
    let mut count = 0;
    for &p in primes {
        if rest.is_multiple_of(p) {
            rest /= p;
            if rest.is_multiple_of(p) {
                return 0.0;
            }
            count += 1;
        }
    }
    if rest == 1 {
        f_p.powi(count)
    } else {
        0.0
    }
}

/// Immutable resonator: `log m` and `r(m)` for `m` in the representative set.
#[derive(Debug, Clone, Serialize)]
pub struct ResonatorData {
    pub log_m: Vec<f64>,
    pub r: Vec<f64>,
    /// `sum_{l in M} f(l)^2`.
    pub sum_f2: f64,
}

/// Steps between re-anchoring a phase recurrence on an explicit exponential.
const RENORM_EVERY: usize = 1 << 16;

impl ResonatorData {
    pub fn from_family(fam: &SetFamily) -> Result<Self> {
        let elems = fam
            .m_enum
            .as_ref()
            .ok_or_else(|| Error::Precondition("resonator needs an enumerated support set".into()))?;
        let sum_f2 = compensated_sum(elems.iter().map(|e| e.weight(fam.prime_weight)));
        Ok(ResonatorData {
            log_m: fam.mprime.iter().map(|x| x.elem.log).collect(),
            r: fam.mprime.iter().map(|x| x.r).collect(),
            sum_f2,
        })
    }

    /// Explicit coefficients, for tests and hand-built instances.
    pub fn from_parts(log_m: Vec<f64>, r: Vec<f64>, sum_f2: f64) -> Result<Self> {
        if log_m.len() != r.len() {
            return Err(Error::Precondition("log_m and r differ in length".into()));
        }
        if !log_m.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Precondition("log_m must be strictly increasing".into()));
        }
        if r.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::Precondition("coefficients must be nonnegative".into()));
        }
        Ok(ResonatorData { log_m, r, sum_f2 })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// `R(0) = sum r(m)`.
    pub fn value_at_zero(&self) -> f64 {
        compensated_sum(self.r.iter().copied())
    }

    /// `sum r(m)^2`.
    pub fn sum_r2(&self) -> f64 {
        compensated_sum(self.r.iter().map(|x| x * x))
    }

    /// `R(t)`, summed in ascending-`m` order.
    pub fn value(&self, t: f64) -> Complex64 {
        let mut acc = ComplexNeumaier::default();
        for (&l, &r) in self.log_m.iter().zip(&self.r) {
            acc.add(Complex64::from_polar(r, -t * l));
        }
        acc.value()
    }

    /// `|R(t)|^2`.
    pub fn power(&self, t: f64) -> f64 {
        self.value(t).norm_sqr()
    }

    /// `R` at arbitrary points, in parallel, in input order.
    pub fn values(&self, ts: &[f64]) -> Vec<Complex64> {
        ts.par_iter().map(|&t| self.value(t)).collect()
    }

    /// `R(t0 + k step)` for `k < n` by phase recurrence.
    ///
    /// Each term's phase is advanced by multiplying with `m^{-i step}` and
    /// re-anchored on an explicit exponential every 65536 steps.
    pub fn values_on_grid(&self, t0: f64, step: f64, n: usize) -> Vec<Complex64> {
        let chunks: Vec<usize> = (0..n).step_by(RENORM_EVERY).collect();
        let per_chunk: Vec<Vec<Complex64>> = chunks
            .par_iter()
            .map(|&start| {
                let len = RENORM_EVERY.min(n - start);
                let t_start = t0 + start as f64 * step;
                let mut phase: Vec<Complex64> = self
                    .log_m
                    .iter()
                    .zip(&self.r)
                    .map(|(&l, &r)| Complex64::from_polar(r, -t_start * l))
                    .collect();
                let rot: Vec<Complex64> = self
                    .log_m
                    .iter()
                    .map(|&l| Complex64::from_polar(1.0, -step * l))
                    .collect();
                let mut out = Vec::with_capacity(len);
                for _ in 0..len {
                    let mut acc = ComplexNeumaier::default();
                    for z in &phase {
                        acc.add(*z);
                    }
                    out.push(acc.value());
                    for (z, w) in phase.iter_mut().zip(&rot) {
                        *z *= w;
                    }
                }
                out
            })
            .collect();
        per_chunk.concat()
    }

    /// `|R(t) - R(t')| <= |t - t'| sum r(m) log m`.
    pub fn lipschitz_constant(&self) -> f64 {
        self.log_m
            .iter()
            .zip(&self.r)
            .map(|(l, r)| l * r)
            .collect::<Neumaier>()
            .value()
    }
}

/// Outcome of checking `|R(t)|^2 <= 3 T^kappa sum f^2` and its two proof steps.
#[derive(Debug, Clone, Serialize)]
pub struct ResonatorBoundReport {
    /// `T^kappa`, or `N` when the budget was given explicitly.
    pub scale: f64,
    pub bound: f64,
    pub samples: usize,
    pub max_power: f64,
    pub worst_t: f64,
    /// `R(0)^2`.
    pub r0_squared: f64,
    /// `|M'| sum r^2`.
    pub cauchy_schwarz_rhs: f64,
    pub sum_r2: f64,
    /// `3 sum_{M} f^2`.
    pub overlap_rhs: f64,
    pub representatives: usize,
    pub bound_holds: bool,
    pub cauchy_schwarz_holds: bool,
    pub overlap_holds: bool,
}

impl ResonatorBoundReport {
    pub fn all_hold(&self) -> bool {
        self.bound_holds && self.cauchy_schwarz_holds && self.overlap_holds
    }

    /// Turn a failed check into an error naming the violated inequality.
    pub fn into_result(self) -> Result<Self> {
        if !self.bound_holds {
            return Err(Error::BoundViolated {
                what: "resonator size bound",
                t: self.worst_t,
                lhs: self.max_power,
                rhs: self.bound,
            });
        }
        if !self.cauchy_schwarz_holds {
            return Err(Error::BoundViolated {
                what: "Cauchy-Schwarz step",
                t: 0.0,
                lhs: self.r0_squared,
                rhs: self.cauchy_schwarz_rhs,
            });
        }
        if !self.overlap_holds {
            return Err(Error::BoundViolated {
                what: "window overlap step",
                t: 0.0,
                lhs: self.sum_r2,
                rhs: self.overlap_rhs,
            });
        }
        Ok(self)
    }
}

/// Evaluate `|R|^2` at every sample (and at 0) against `3 T^kappa sum f^2`.
pub fn check_r_bound(data: &ResonatorData, t_samples: &[f64], params: &Params) -> ResonatorBoundReport {
    let scale = params.resonator_scale();
    let bound = 3.0 * scale * data.sum_f2;
    let mut ts = Vec::with_capacity(t_samples.len() + 1);
    ts.push(0.0);
    ts.extend_from_slice(t_samples);
    let powers: Vec<f64> = ts.par_iter().map(|&t| data.power(t)).collect();
    let (worst, max_power) = powers
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
    let r0 = data.value_at_zero();
    let sum_r2 = data.sum_r2();
    let r0_squared = r0 * r0;
    let cauchy_schwarz_rhs = data.len() as f64 * sum_r2;
    let overlap_rhs = 3.0 * data.sum_f2;
    // the identity cases (|M'| = 1) are equalities; allow rounding slack
    let slack = 1.0 + 1e-12;
    ResonatorBoundReport {
        scale,
        bound,
        samples: ts.len(),
        max_power,
        worst_t: ts[worst],
        r0_squared,
        cauchy_schwarz_rhs,
        sum_r2,
        overlap_rhs,
        representatives: data.len(),
        bound_holds: max_power <= bound * slack,
        cauchy_schwarz_holds: r0_squared <= cauchy_schwarz_rhs * slack,
        overlap_holds: sum_r2 <= overlap_rhs * slack,
    }
}
