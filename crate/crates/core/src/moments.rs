//! The two moments whose ratio lower-bounds the maximum, in a quadrature mode
//! (direct double integral) and an analytic mode (near-diagonal triple sums).

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::convolution::Kernel;
use crate::error::{Error, Result};
use crate::params::Params;
use crate::quad::{composite, gl16};
use crate::resonator::ResonatorData;
use crate::sets::{symmetric_sums, SetFamily};
use crate::sum::{compensated_sum, ComplexNeumaier, Neumaier};
use crate::zeta::{indicator, log_zeta_vertical, ZeroDatabase};

/// `Phi(x) = exp(-x^2/2)`.
pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp()
}

/// `|T log(mp/v)|` beyond which Gaussian weights are dropped (`e^{-72}`).
pub const GAUSSIAN_CUTOFF: f64 = 12.0;

/// Beyond `t/T = 9` the weight `Phi(t/T)` is below `1e-17`.
const PHI_SUPPORT: f64 = 9.0;

/// `int_R Phi(t) e^{-ity} dt` by Gauss-Legendre panels on `[-40, 40]`.
pub fn phi_hat_quadrature(y: f64) -> f64 {
    let width = (PI / (y.abs() + 1.0)).min(0.5);
    composite(|t| phi(t) * (t * y).cos(), -40.0, 40.0, width)
}

/// `Re int Phi(t/T) e^{-it lam} dt` over `[T^beta, T log T]` next to its
/// half-line closed form and the bounds on the two pieces left out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianResonance {
    pub closed_form: f64,
    pub quad_value: f64,
    /// Bound on the piece over `[0, T^beta]`.
    pub head_bound: f64,
    /// `int_{T log T}^inf Phi(t/T) dt`, a bound on the piece beyond `T log T`.
    pub tail_bound: f64,
    /// The coarser `1/(T log T)` bound, valid for `T > 193`.
    pub tail_bound_reciprocal: f64,
}

pub fn gaussian_resonance_integral(t_height: f64, lam: f64, beta: f64) -> Result<GaussianResonance> {
    if !(t_height > E) {
        return Err(Error::Domain {
            name: "T",
            value: t_height,
            reason: "must exceed e".into(),
        });
    }
    if !(lam.abs() <= 1.0) {
        return Err(Error::Domain {
            name: "lam",
            value: lam,
            reason: "|lam| must be at most 1".into(),
        });
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain {
            name: "beta",
            value: beta,
            reason: "must lie in (0, 1)".into(),
        });
    }
    let lo = t_height.powf(beta);
    let hi = t_height * t_height.ln();
    let width = (0.25 * t_height).min(PI / lam.abs().max(1e-300));
    let quad_value = composite(|t| phi(t / t_height) * (t * lam).cos(), lo, hi, width);
    Ok(GaussianResonance {
        closed_form: t_height * (2.0 * PI).sqrt() / 2.0 * phi(t_height * lam),
        quad_value,
        head_bound: lo,
        tail_bound: t_height * (PI / 2.0).sqrt() * libm::erfc(t_height.ln() / 2f64.sqrt()),
        tail_bound_reciprocal: 1.0 / hi,
    })
}

/// `sum_{m,v} sum_p r(m) r(v) c_p Phi(T log(m p / v))` over pairs with
/// `|T log(mp/v)| <= cutoff`, found by binary search in the sorted `log v`.
pub fn triple_sum(data: &ResonatorData, prime_logs: &[(f64, f64)], t_height: f64, cutoff: f64) -> f64 {
    let reach = cutoff / t_height;
    let partial: Vec<f64> = data
        .log_m
        .par_iter()
        .zip(data.r.par_iter())
        .map(|(&lm, &rm)| {
            let mut acc = Neumaier::new();
            for &(lp, c) in prime_logs {
                let target = lm + lp;
                let start = data.log_m.partition_point(|&x| x < target - reach);
                for (lv, rv) in data.log_m[start..].iter().zip(&data.r[start..]) {
                    if *lv > target + reach {
                        break;
                    }
                    acc.add(rm * rv * c * phi(t_height * (target - lv)));
                }
            }
            acc.value()
        })
        .collect();
    compensated_sum(partial)
}

/// `(log p, p^-sigma)` for each prime.
fn plain_weights(primes: &[u64], sigma: f64) -> Vec<(f64, f64)> {
    primes
        .iter()
        .map(|&p| {
            let l = (p as f64).ln();
            (l, (-sigma * l).exp())
        })
        .collect()
}

/// `(log p, p^-sigma (1/2 - |log(p/x)|))` for each prime.
fn triangle_weights(primes: &[u64], sigma: f64, centre: f64) -> Vec<(f64, f64)> {
    let lc = centre.ln();
    primes
        .iter()
        .map(|&p| {
            let l = (p as f64).ln();
            (l, (-sigma * l).exp() * (0.5 - (l - lc).abs()).max(0.0))
        })
        .collect()
}

/// Coefficient `T pi sqrt(2 pi)/16` of the main term.
fn main_coefficient(t_height: f64) -> f64 {
    t_height * PI * (2.0 * PI).sqrt() / 16.0
}

/// `T (pi sqrt(2 pi)/16) sum_{m,v} sum_{p in P} r(m) r(v) p^-sigma Phi(T log(mp/v))`.
pub fn m2_main_term(data: &ResonatorData, fam: &SetFamily, params: &Params) -> f64 {
    let w = plain_weights(fam.primes(), params.sigma);
    main_coefficient(params.t_height) * triple_sum(data, &w, params.t_height, GAUSSIAN_CUTOFF)
}

/// Nonnegative contributions of the two outer windows, weighted by their triangles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowSurplus {
    pub minus: f64,
    pub plus: f64,
}

pub fn window_surplus(data: &ResonatorData, fam: &SetFamily, params: &Params) -> WindowSurplus {
    let [lo_centre, _, hi_centre] = fam.windows.kernel_centres();
    let coef = params.t_height * (2.0 * PI).sqrt() / 2.0 * PI / 4.0;
    let minus = triangle_weights(&fam.windows.p_minus, params.sigma, lo_centre);
    let plus = triangle_weights(&fam.windows.p_plus, params.sigma, hi_centre);
    WindowSurplus {
        minus: coef * triple_sum(data, &minus, params.t_height, GAUSSIAN_CUTOFF),
        plus: coef * triple_sum(data, &plus, params.t_height, GAUSSIAN_CUTOFF),
    }
}

/// The near-diagonal triple sum against its divisor-sum lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripleSumBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `sum_{v in M} f(v)^2 sum_{p | v} 1/(f(p) p^sigma)` by swapping the sums:
/// each prime contributes `p^-sigma f_p sum_{u} f(u)^2` over `u` free of `p`
/// with at most `k_max - 1` factors.
pub fn divisor_sum_dp(fam: &SetFamily, params: &Params) -> Result<f64> {
    let primes = fam.primes();
    if primes.is_empty() || fam.k_max < 1.0 {
        return Ok(0.0);
    }
    let w = fam.prime_weight;
    let rest = symmetric_sums(&vec![w; primes.len() - 1], primes.len() - 1)?;
    let top = ((fam.k_max - 1.0).floor() as usize).min(rest.len() - 1);
    let inner = compensated_sum(rest[..=top].iter().copied());
    let f_p = w.sqrt();
    Ok(compensated_sum(
        primes.iter().map(|&p| (p as f64).powf(-params.sigma) * f_p * inner),
    ))
}

/// The same divisor sum over an enumerated support set.
pub fn divisor_sum_enumerated(fam: &SetFamily, params: &Params) -> Option<f64> {
    let elems = fam.m_enum.as_ref()?;
    let primes = fam.primes();
    let f_p = fam.prime_weight.sqrt();
    let inv: Vec<f64> = primes
        .iter()
        .map(|&p| 1.0 / (f_p * (p as f64).powf(params.sigma)))
        .collect();
    Some(compensated_sum(elems.iter().map(|v| {
        let mut s = 0.0;
        let mut mask = v.mask;
        while mask != 0 {
            let i = mask.trailing_zeros() as usize;
            s += inv[i];
            mask &= mask - 1;
        }
        v.weight(fam.prime_weight) * s
    })))
}

pub fn triple_sum_lower(data: &ResonatorData, fam: &SetFamily, params: &Params) -> Result<TripleSumBound> {
    let w = plain_weights(fam.primes(), params.sigma);
    let lhs = triple_sum(data, &w, params.t_height, GAUSSIAN_CUTOFF);
    let rhs = match divisor_sum_enumerated(fam, params) {
        Some(v) => v,
        None => divisor_sum_dp(fam, params)?,
    };
    Ok(TripleSumBound {
        lhs,
        rhs,
        holds: lhs >= rhs * (1.0 - 1e-12),
    })
}

/// `(log N)^{1-sigma}/(log log N)^sigma`.
fn log_shape(params: &Params) -> f64 {
    let ln = (params.n_budget as f64).ln();
    ln.powf(1.0 - params.sigma) / ln.ln().powf(params.sigma)
}

/// Lower bound for the divisor sum over the large-factor-count subset.
pub fn factor_count_lower(fam: &SetFamily, params: &Params) -> Result<TripleSumBound> {
    let lhs = match divisor_sum_enumerated(fam, params) {
        Some(v) => v,
        None => divisor_sum_dp(fam, params)?,
    };
    let rhs = params.gamma * fam.mass_l() * (-2.0 * params.sigma).exp() / params.log_gap.sqrt() * log_shape(params);
    Ok(TripleSumBound {
        lhs,
        rhs,
        holds: lhs >= rhs * (1.0 - 1e-12),
    })
}

/// Tunables shared by both moment modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentOptions {
    /// Grid step of the quadrature mode in `t`.
    pub quad_step: f64,
    /// Tolerance passed to the zeta evaluator.
    pub zeta_tol: f64,
    /// Ceiling on the estimated work of the quadrature mode.
    pub cost_limit: f64,
}

impl Default for MomentOptions {
    fn default() -> Self {
        MomentOptions {
            quad_step: 0.05,
            zeta_tol: 1e-10,
            cost_limit: 2e10,
        }
    }
}

/// `M_1` mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum M1Mode {
    /// Inner kernel mass over `[-(log t)^2, (log t)^2]`, outer Simpson rule.
    Quadrature,
    /// Full-line kernel mass `3 pi / 2` and the half-line Gaussian closed form.
    Bound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct M1Estimate {
    pub value: f64,
    pub err: f64,
    pub empirical_c2: f64,
}

/// `int_0^{T^beta} Phi(t/T) |R(t)|^2 dt`.
fn head_power(data: &ResonatorData, t_height: f64, head: f64) -> f64 {
    let spread = match (data.log_m.first(), data.log_m.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    };
    let width = (PI / (spread + 1.0)).min(1.0);
    composite(|t| phi(t / t_height) * data.power(t), 0.0, head, width)
}

/// `(3 pi/2) int_{T^beta}^inf Phi(t/T) |R(t)|^2 dt`, via the half-line closed form.
pub fn m1_bound(data: &ResonatorData, params: &Params) -> M1Estimate {
    let t = params.t_height;
    let n: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    let half_line = t * (2.0 * PI).sqrt() / 2.0 * triple_sum(data, &n, t, GAUSSIAN_CUTOFF);
    let value = 1.5 * PI * (half_line - head_power(data, t, t.powf(params.beta)));
    M1Estimate {
        value,
        err: 1.5 * PI * data.value_at_zero().powi(2) * (-0.5 * GAUSSIAN_CUTOFF.powi(2)).exp() * data.len() as f64,
        empirical_c2: value / (t * data.sum_f2),
    }
}

pub fn m1_estimate(data: &ResonatorData, params: &Params, mode: M1Mode, opts: &MomentOptions) -> Result<M1Estimate> {
    match mode {
        M1Mode::Bound => Ok(m1_bound(data, params)),
        M1Mode::Quadrature => {
            let grid = OuterGrid::new(params, opts)?;
            let power = grid.power(data, params.t_height);
            let kernel = Kernel::for_budget(params.theta, params.n_budget)?;
            let masses = grid.kernel_masses(&kernel);
            let fine = grid.simpson(1, |i| power[i] * masses[i]);
            let coarse = grid.simpson(2, |i| power[i] * masses[i]);
            Ok(M1Estimate {
                value: fine,
                err: (fine - coarse).abs(),
                empirical_c2: fine / (params.t_height * data.sum_f2),
            })
        }
    }
}

/// `(log t)^2`, the half-width of the inner window.
fn inner_half_width(t: f64) -> f64 {
    t.ln().powi(2)
}

/// Uniform outer grid `t_i = T^beta + i h`, `i = 0..=n`, `n` a multiple of 4.
#[derive(Debug, Clone)]
struct OuterGrid {
    start: f64,
    step: f64,
    n: usize,
    /// The nominal upper limit `T log T`.
    end: f64,
}

impl OuterGrid {
    fn new(params: &Params, opts: &MomentOptions) -> Result<Self> {
        if !(opts.quad_step > 0.0) {
            return Err(Error::Config(format!("quad_step must be positive, got {}", opts.quad_step)));
        }
        let t = params.t_height;
        let start = t.powf(params.beta);
        let end = t * t.ln();
        let stop = end.min(PHI_SUPPORT * t);
        let n = (((stop - start) / opts.quad_step).ceil() as usize).div_ceil(4).max(1) * 4;
        Ok(OuterGrid {
            start,
            step: (stop - start) / n as f64,
            n,
            end,
        })
    }

    fn t(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    fn power(&self, data: &ResonatorData, t_height: f64) -> Vec<f64> {
        data.values_on_grid(self.start, self.step, self.n + 1)
            .iter()
            .enumerate()
            .map(|(i, r)| r.norm_sqr() * phi(self.t(i) / t_height))
            .collect()
    }

    /// Composite Simpson over nodes `0, s, 2s, ..., n`.
    fn simpson<F: Fn(usize) -> f64>(&self, stride: usize, f: F) -> f64 {
        let m = self.n / stride;
        let mut acc = Neumaier::new();
        for q in 0..=m {
            acc.add(simpson_weight(q, m) * f(q * stride));
        }
        acc.value() * self.step * stride as f64 / 3.0
    }

    fn simpson_complex<F: Fn(usize) -> Complex64 + Sync>(&self, stride: usize, f: F) -> Complex64 {
        let m = self.n / stride;
        let parts: Vec<Complex64> = (0..=m)
            .into_par_iter()
            .map(|q| f(q * stride) * simpson_weight(q, m))
            .collect();
        let mut acc = ComplexNeumaier::default();
        for p in parts {
            acc.add(p);
        }
        acc.value() * (self.step * stride as f64 / 3.0)
    }

    /// `int_{-(log t)^2}^{(log t)^2} K` at each node.
    fn kernel_masses(&self, kernel: &Kernel) -> Vec<f64> {
        let cum = CumulativeMass::new(kernel, self.step, inner_half_width(self.t(self.n)));
        (0..=self.n).into_par_iter().map(|i| cum.mass(inner_half_width(self.t(i)))).collect()
    }
}

fn simpson_weight(q: usize, m: usize) -> f64 {
    if q == 0 || q == m {
        1.0
    } else if q % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

/// Running integral of the even part of `K` on cells of width `h`.
struct CumulativeMass<'a> {
    kernel: &'a Kernel,
    step: f64,
    cells: Vec<f64>,
}

impl<'a> CumulativeMass<'a> {
    fn new(kernel: &'a Kernel, step: f64, reach: f64) -> Self {
        let n = (reach / step).ceil() as usize + 1;
        let rule = gl16();
        let even = |u: f64| 0.5 * (kernel.eval(u) + kernel.eval(-u));
        let cell: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|k| rule.integrate(k as f64 * step, (k + 1) as f64 * step, even))
            .collect();
        let mut cells = Vec::with_capacity(n + 1);
        let mut acc = Neumaier::new();
        cells.push(0.0);
        for c in cell {
            acc.add(c);
            cells.push(acc.value());
        }
        CumulativeMass { kernel, step, cells }
    }

    fn mass(&self, half_width: f64) -> f64 {
        let k = (half_width / self.step).floor() as usize;
        let lo = k as f64 * self.step;
        let even = |u: f64| 0.5 * (self.kernel.eval(u) + self.kernel.eval(-u));
        2.0 * (self.cells[k] + gl16().integrate(lo, half_width, even))
    }
}

/// Samples shared by every `theta` in the quadrature mode: `log zeta` on a
/// uniform `tau` grid covering each inner window, `|R(t)|^2 Phi(t/T)` and the
/// zero indicator on the outer grid.
#[derive(Debug, Clone)]
pub struct QuadGrid {
    outer: OuterGrid,
    sigma: f64,
    n_budget: u64,
    /// Index in `log_zeta` of the outer node `t_0`.
    offset: usize,
    log_zeta: Vec<Complex64>,
    power: Vec<f64>,
    indicator: Vec<u8>,
    heuristic: usize,
}

impl QuadGrid {
    pub fn build(params: &Params, data: &ResonatorData, db: &ZeroDatabase, opts: &MomentOptions) -> Result<Self> {
        let outer = OuterGrid::new(params, opts)?;
        let h = outer.step;
        let pad_lo = (inner_half_width(outer.start) / h).ceil() as usize + 3;
        let last = outer.t(outer.n);
        let pad_hi = (inner_half_width(last) / h).ceil() as usize + 3;
        let first_tau = outer.start - pad_lo as f64 * h;
        if first_tau < 1.0 {
            return Err(Error::Precondition(format!(
                "inner windows reach height {first_tau:.3} < 1; raise T^beta (now {:.3})",
                outer.start
            )));
        }
        let count = pad_lo + outer.n + 1 + pad_hi;
        let last_tau = first_tau + (count - 1) as f64 * h;
        let zeta_work = count as f64 * (0.5 * (first_tau + last_tau) / 4.0 + 15.0);
        let kernel_work = (outer.n + 1) as f64 * 2.0 * inner_half_width(last) / h;
        let cost = zeta_work + kernel_work;
        if cost > opts.cost_limit {
            return Err(Error::CostGuard {
                what: "moment quadrature",
                cost,
                limit: opts.cost_limit,
            });
        }
        let taus: Vec<f64> = (0..count).map(|k| first_tau + k as f64 * h).collect();
        let log_zeta = log_zeta_vertical(params.sigma, &taus, opts.zeta_tol)
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let power = outer.power(data, params.t_height);
        let inds = (0..=outer.n)
            .into_par_iter()
            .map(|i| indicator(params.sigma, outer.t(i), db))
            .collect::<Result<Vec<_>>>()?;
        let heuristic = inds.iter().filter(|x| x.heuristic).count();
        Ok(QuadGrid {
            outer,
            sigma: params.sigma,
            n_budget: params.n_budget,
            offset: pad_lo,
            log_zeta,
            power,
            indicator: inds.iter().map(|x| x.value).collect(),
            heuristic,
        })
    }

    pub fn outer_points(&self) -> usize {
        self.outer.n + 1
    }

    pub fn step(&self) -> f64 {
        self.outer.step
    }

    /// Measure of outer nodes with `I(sigma, t) = 0`.
    pub fn excised_measure(&self) -> f64 {
        self.indicator.iter().filter(|&&v| v == 0).count() as f64 * self.outer.step
    }

    pub fn heuristic_nodes(&self) -> usize {
        self.heuristic
    }

    /// `(tau, log zeta(sigma + i tau))` for every sample.
    pub fn samples(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        let first = self.outer.start - self.offset as f64 * self.outer.step;
        self.log_zeta
            .iter()
            .enumerate()
            .map(move |(k, z)| (first + k as f64 * self.outer.step, *z))
    }

    /// Largest `Re(e^{-i theta} log zeta)` over samples in `[lo, hi]`.
    pub fn max_on(&self, theta: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let rot = Complex64::from_polar(1.0, -theta);
        self.samples()
            .filter(|(t, _)| *t >= lo && *t <= hi)
            .map(|(t, z)| (t, (rot * z).re))
            .fold(None, |best, (t, v)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((t, v)),
            })
    }

    /// Inner integral `int K(u) log zeta(sigma + i(t_i + u)) du` on the sample
    /// grid with step `stride * h`, Simpson inside and linear end cells.
    fn inner(&self, kernel_table: &[f64], i: usize, stride: usize) -> Complex64 {
        let h = self.outer.step * stride as f64;
        let l = inner_half_width(self.outer.t(i));
        let d = (l / h).floor() as usize;
        let frac = l - d as f64 * h;
        let centre = self.offset + i;
        let g = |j: isize| -> Complex64 {
            let idx = (centre as isize + j * stride as isize) as usize;
            let k = j.unsigned_abs() * stride;
            self.log_zeta[idx] * kernel_table[2 * k + usize::from(j < 0)]
        };
        let mut acc = ComplexNeumaier::default();
        let m = 2 * d;
        for q in 0..=m {
            acc.add(g(q as isize - d as isize) * simpson_weight(q, m));
        }
        let mut total = acc.value() * (h / 3.0);
        for sign in [-1isize, 1] {
            let a = g(sign * d as isize);
            let b = g(sign * (d as isize + 1));
            let at_end = a + (b - a) * (frac / h);
            total += (a + at_end) * (0.5 * frac);
        }
        total
    }

    /// `K(+-k h)` interleaved as `[K(0), K(0), K(h), K(-h), ...]`.
    fn kernel_table(&self, kernel: &Kernel) -> Vec<f64> {
        let reach = inner_half_width(self.outer.t(self.outer.n)) / self.outer.step;
        let n = reach.ceil() as usize + 4;
        let h = self.outer.step;
        (0..n)
            .flat_map(|k| [kernel.eval(k as f64 * h), kernel.eval(-(k as f64) * h)])
            .collect()
    }

    fn kernel(&self, theta: f64) -> Result<Kernel> {
        Kernel::for_budget(theta, self.n_budget)
    }

    /// `e^{i theta} M_2` (the kernel-weighted integral before rotation) at step `stride * h`.
    fn unrotated_m2(&self, table: &[f64], stride: usize) -> Complex64 {
        self.outer.simpson_complex(stride, |i| {
            if self.indicator[i] == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                self.inner(table, i, stride) * self.power[i]
            }
        })
    }

    /// `M_1` and `M_2` at angle `theta`, each with a step-halving error estimate.
    pub fn evaluate(&self, theta: f64) -> Result<QuadMoments> {
        let kernel = self.kernel(theta)?;
        let table = self.kernel_table(&kernel);
        let rot = Complex64::from_polar(1.0, -theta);
        let m2 = self.unrotated_m2(&table, 1) * rot;
        let m2_coarse = self.unrotated_m2(&table, 2) * rot;
        let masses = self.outer.kernel_masses(&kernel);
        let m1 = self.outer.simpson(1, |i| self.power[i] * masses[i]);
        let m1_coarse = self.outer.simpson(2, |i| self.power[i] * masses[i]);
        Ok(QuadMoments {
            theta,
            m1,
            m1_err: (m1 - m1_coarse).abs(),
            m2,
            m2_err: (m2 - m2_coarse).norm(),
        })
    }

    /// `sigma` of the sampled vertical line.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// The nominal outer range `[T^beta, T log T]`.
    pub fn range(&self) -> (f64, f64) {
        (self.outer.start, self.outer.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadMoments {
    pub theta: f64,
    pub m1: f64,
    pub m1_err: f64,
    pub m2: Complex64,
    pub m2_err: f64,
}

/// Quantities shared by both modes and independent of `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticParts {
    pub main: f64,
    pub surplus: WindowSurplus,
    pub triple_sum: TripleSumBound,
    pub factor_count: TripleSumBound,
    pub error_budget: f64,
    pub empirical_c1: f64,
    pub sum_f2_m: f64,
    pub sum_f2_l: f64,
}

pub fn analytic_parts(data: &ResonatorData, fam: &SetFamily, params: &Params) -> Result<AnalyticParts> {
    let t = params.t_height;
    let w = plain_weights(fam.primes(), params.sigma);
    let s = triple_sum(data, &w, t, GAUSSIAN_CUTOFF);
    let main = main_coefficient(t) * s;
    let triple_sum = triple_sum_lower(data, fam, params)?;
    let factor_count = factor_count_lower(fam, params)?;
    let shape = log_shape(params);
    let sum_f2_m = data.sum_f2;
    let sum_f2_l = fam.mass_l();
    let error_budget = ((1.5 - params.sigma) * t.ln()).exp() * t.ln().powi(9) * params.resonator_scale()
        + t.powf(params.beta) * params.resonator_scale();
    let error_budget = error_budget * sum_f2_m * shape;
    let c1_scale = params.gamma * t * sum_f2_l * shape / params.log_gap.sqrt();
    Ok(AnalyticParts {
        main,
        surplus: window_surplus(data, fam, params),
        triple_sum,
        factor_count,
        error_budget,
        empirical_c1: if c1_scale > 0.0 { main / c1_scale } else { f64::NAN },
        sum_f2_m,
        sum_f2_l,
    })
}

/// Everything measured about the two moments at one `theta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub mode: String,
    pub theta: f64,
    #[serde(rename = "M1")]
    pub m1: f64,
    #[serde(rename = "M1_err")]
    pub m1_err: f64,
    #[serde(rename = "M2_re")]
    pub m2_re: f64,
    #[serde(rename = "M2_im")]
    pub m2_im: f64,
    #[serde(rename = "M2_err")]
    pub m2_err: f64,
    #[serde(rename = "M2_main")]
    pub m2_main: f64,
    #[serde(rename = "M2_error_budget")]
    pub m2_error_budget: f64,
    pub surplus_minus: f64,
    pub surplus_plus: f64,
    pub triple_sum_lhs: f64,
    pub triple_sum_rhs: f64,
    pub factor_count_lhs: f64,
    pub factor_count_rhs: f64,
    pub ratio: f64,
    pub empirical_c1: f64,
    pub empirical_c2: f64,
    pub sum_f2_m: f64,
    pub sum_f2_l: f64,
    pub excised_measure: f64,
    pub heuristic_nodes: usize,
    pub grid_points: usize,
    /// Largest sampled `Re(e^{-i theta} log zeta)` on `[T^beta, T log T]`.
    pub grid_max: Option<f64>,
    /// The same over every sample entering the inner integrals.
    pub grid_max_extended: Option<f64>,
}

impl MomentReport {
    fn from_parts(mode: &str, theta: f64, parts: &AnalyticParts) -> Self {
        MomentReport {
            mode: mode.into(),
            theta,
            m1: f64::NAN,
            m1_err: 0.0,
            m2_re: f64::NAN,
            m2_im: 0.0,
            m2_err: 0.0,
            m2_main: parts.main,
            m2_error_budget: parts.error_budget,
            surplus_minus: parts.surplus.minus,
            surplus_plus: parts.surplus.plus,
            triple_sum_lhs: parts.triple_sum.lhs,
            triple_sum_rhs: parts.triple_sum.rhs,
            factor_count_lhs: parts.factor_count.lhs,
            factor_count_rhs: parts.factor_count.rhs,
            ratio: f64::NAN,
            empirical_c1: parts.empirical_c1,
            empirical_c2: f64::NAN,
            sum_f2_m: parts.sum_f2_m,
            sum_f2_l: parts.sum_f2_l,
            excised_measure: 0.0,
            heuristic_nodes: 0,
            grid_points: 0,
            grid_max: None,
            grid_max_extended: None,
        }
    }
}

/// Everything a moment strategy needs.
#[derive(Clone, Copy)]
pub struct MomentContext<'a> {
    pub params: &'a Params,
    pub family: &'a SetFamily,
    pub data: &'a ResonatorData,
    pub zero_db: &'a ZeroDatabase,
    pub options: MomentOptions,
}

/// A way of evaluating the moments.
pub trait MomentStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn compute_many(&self, ctx: &MomentContext<'_>, thetas: &[f64]) -> Result<Vec<MomentReport>>;

    fn compute(&self, ctx: &MomentContext<'_>) -> Result<MomentReport> {
        Ok(self.compute_many(ctx, &[ctx.params.theta])?.remove(0))
    }
}

/// Direct double integral on a uniform grid.
pub struct QuadratureMoments;

impl MomentStrategy for QuadratureMoments {
    fn name(&self) -> &'static str {
        "quad"
    }

    fn compute_many(&self, ctx: &MomentContext<'_>, thetas: &[f64]) -> Result<Vec<MomentReport>> {
        let parts = analytic_parts(ctx.data, ctx.family, ctx.params)?;
        let grid = QuadGrid::build(ctx.params, ctx.data, ctx.zero_db, &ctx.options)?;
        let (lo, hi) = grid.range();
        thetas
            .iter()
            .map(|&theta| {
                let q = grid.evaluate(theta)?;
                let mut rep = MomentReport::from_parts(self.name(), theta, &parts);
                rep.m1 = q.m1;
                rep.m1_err = q.m1_err;
                rep.m2_re = q.m2.re;
                rep.m2_im = q.m2.im;
                rep.m2_err = q.m2_err;
                rep.ratio = q.m2.re / q.m1;
                rep.empirical_c2 = q.m1 / (ctx.params.t_height * parts.sum_f2_m);
                rep.excised_measure = grid.excised_measure();
                rep.heuristic_nodes = grid.heuristic_nodes();
                rep.grid_points = grid.outer_points();
                rep.grid_max = grid.max_on(theta, lo, hi).map(|x| x.1);
                rep.grid_max_extended = grid.max_on(theta, f64::NEG_INFINITY, f64::INFINITY).map(|x| x.1);
                Ok(rep)
            })
            .collect()
    }
}

/// Main term plus outer-window surplus over the full-line `M_1` bound.
pub struct AnalyticMoments;

impl MomentStrategy for AnalyticMoments {
    fn name(&self) -> &'static str {
        "analytic"
    }

    fn compute_many(&self, ctx: &MomentContext<'_>, thetas: &[f64]) -> Result<Vec<MomentReport>> {
        let parts = analytic_parts(ctx.data, ctx.family, ctx.params)?;
        let m1 = m1_bound(ctx.data, ctx.params);
        Ok(thetas
            .iter()
            .map(|&theta| {
                let mut rep = MomentReport::from_parts(self.name(), theta, &parts);
                rep.m1 = m1.value;
                rep.m1_err = m1.err;
                rep.m2_re = parts.main + parts.surplus.minus + parts.surplus.plus;
                rep.m2_err = parts.error_budget;
                rep.ratio = rep.m2_re / m1.value;
                rep.empirical_c2 = m1.empirical_c2;
                rep
            })
            .collect())
    }
}

/// Named moment strategies.
pub struct MomentRegistry {
    entries: Vec<Box<dyn MomentStrategy>>,
}

impl Default for MomentRegistry {
    fn default() -> Self {
        MomentRegistry {
            entries: vec![Box::new(QuadratureMoments), Box::new(AnalyticMoments)],
        }
    }
}

impl MomentRegistry {
    pub fn register(&mut self, strategy: Box<dyn MomentStrategy>) {
        self.entries.retain(|s| s.name() != strategy.name());
        self.entries.push(strategy);
    }

    pub fn get(&self, name: &str) -> Result<&dyn MomentStrategy> {
        self.entries
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::UnknownStrategy(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|s| s.name()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{validate_for_sets, RawParams};
    use crate::sets::SetOptions;

    fn tiny() -> (Params, SetFamily, ResonatorData) {
        let raw = RawParams {
            sigma: 0.8,
            beta: 0.36,
            kappa: 0.25,
            t_height: 1e3,
            n_override: Some(16),
            ..RawParams::default()
        };
        let p = validate_for_sets(&raw).unwrap();
        let fam = SetFamily::build(&p, SetOptions::default()).unwrap();
        let data = ResonatorData::from_family(&fam).unwrap();
        (p, fam, data)
    }

    #[test]
    fn fourier_identity() {
        for y in [0.0, 0.5, 1.0, 3.3, 10.0] {
            let q = phi_hat_quadrature(y);
            assert!((q - (2.0 * PI).sqrt() * phi(y)).abs() < 1e-12, "y={y}");
        }
    }

    #[test]
    fn gaussian_integral_examples() {
        let g = gaussian_resonance_integral(50.0, 0.01, 0.3).unwrap();
        assert!((g.quad_value - g.closed_form).abs() <= g.head_bound + g.tail_bound);
        let g = gaussian_resonance_integral(1e3, 0.0, 0.5).unwrap();
        assert!((g.closed_form - 1e3 * (PI / 2.0).sqrt()).abs() < 1e-9);
        assert!(g.tail_bound < g.tail_bound_reciprocal);
        let g = gaussian_resonance_integral(100.0, 0.1, 0.5).unwrap();
        assert!(g.closed_form < 1e-20 * 100.0);
        assert!(gaussian_resonance_integral(100.0, 1.5, 0.5).is_err());
    }

    fn brute_triple(data: &ResonatorData, w: &[(f64, f64)], t: f64) -> f64 {
        let mut acc = Neumaier::new();
        for (lm, rm) in data.log_m.iter().zip(&data.r) {
            for (lv, rv) in data.log_m.iter().zip(&data.r) {
                for (lp, c) in w {
                    acc.add(rm * rv * c * phi(t * (lm + lp - lv)));
                }
            }
        }
        acc.value()
    }

    #[test]
    fn triple_sum_matches_brute_force() {
        let (p, fam, data) = tiny();
        let w = plain_weights(fam.primes(), p.sigma);
        let fast = triple_sum(&data, &w, p.t_height, GAUSSIAN_CUTOFF);
        let slow = brute_triple(&data, &w, p.t_height);
        assert!((fast - slow).abs() <= 1e-12 * slow.abs());
        let wide = triple_sum(&data, &w, p.t_height, 16.0);
        assert!((fast - wide).abs() <= 1e-9 * wide.abs());
    }

    #[test]
    fn divisor_sum_swap() {
        let (p, fam, _) = tiny();
        let a = divisor_sum_dp(&fam, &p).unwrap();
        let b = divisor_sum_enumerated(&fam, &p).unwrap();
        assert!((a - b).abs() < 1e-12 * b);
    }

    #[test]
    fn singleton_resonator() {
        let (p, fam, _) = tiny();
        let one = ResonatorData::from_parts(vec![0.0], vec![1.0], 1.0).unwrap();
        assert_eq!(m2_main_term(&one, &fam, &p), 0.0);
        let est = m1_estimate(&one, &p, M1Mode::Quadrature, &MomentOptions::default()).unwrap();
        let k = Kernel::for_budget(p.theta, p.n_budget).unwrap();
        let lo = p.t_height.powf(p.beta);
        let hi = p.t_height * p.t_height.ln();
        let exact = crate::quad::adaptive_gk_real(|t| k.window_mass(inner_half_width(t)) * phi(t / p.t_height), lo, hi, 64, 1e-9)
            .unwrap()
            .0;
        assert!((est.value - exact).abs() < 1e-6 * exact, "{} {exact}", est.value);
        let bound = m1_bound(&one, &p);
        assert!(bound.value >= est.value);
    }

    #[test]
    fn cumulative_mass_matches_closed_form() {
        let k = Kernel::for_budget(0.4, 1000).unwrap();
        let cum = CumulativeMass::new(&k, 0.05, 90.0);
        for l in [6.17, 20.0, 47.7, 84.3] {
            assert!((cum.mass(l) - k.window_mass(l)).abs() < 1e-12, "{l}");
            assert!(cum.mass(l) <= 1.5 * PI);
        }
    }

    #[test]
    fn registry_lookup() {
        let reg = MomentRegistry::default();
        assert_eq!(reg.names(), vec!["quad", "analytic"]);
        assert!(reg.get("quad").is_ok());
        assert!(matches!(reg.get("nope"), Err(Error::UnknownStrategy(_))));
    }

    #[test]
    fn analytic_report_consistency() {
        let (p, fam, data) = tiny();
        let db = ZeroDatabase::empty_verified(3e12);
        let ctx = MomentContext {
            params: &p,
            family: &fam,
            data: &data,
            zero_db: &db,
            options: MomentOptions::default(),
        };
        let r = AnalyticMoments.compute(&ctx).unwrap();
        assert!(r.m1 > 0.0);
        // singleton buckets make the divisor bound an equality up to rounding
        assert!(r.triple_sum_lhs >= r.triple_sum_rhs * (1.0 - 1e-12));
        assert!(r.factor_count_lhs >= r.factor_count_rhs);
        assert!(r.surplus_minus >= 0.0 && r.surplus_plus >= 0.0);
        assert!((r.triple_sum_rhs - r.factor_count_lhs).abs() < 1e-12 * r.triple_sum_rhs);
    }
}
