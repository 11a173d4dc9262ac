//! The square-free sets behind the resonator.
//!
//! Elements of the support of `f` are square-free products of primes from the
//! middle window `P`. They are stored as a bitmask over `P` together with
//! `log m`, because products of twenty primes overflow every integer type.
//!
//! Large-`N` weight sums never enumerate: with every prime carrying the same
//! weight `w = f(p)^2`, the mass of elements with exactly `j` prime factors is
//! the elementary symmetric sum `e_j(w, ..., w)`, computed by [`symmetric_sums`].

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numtheory::{prime_windows, PrimeWindows};
use crate::params::{gamma_max, Params, WINDOW_MASS};
use crate::sum::compensated_sum;

/// Default limit on the number of enumerated elements.
pub const DEFAULT_ENUM_CAP: usize = 10_000_000;

/// A square-free product of primes from a fixed prime list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SquareFree {
    /// Bit `i` set when the `i`-th prime divides the element.
    pub mask: u64,
    pub log: f64,
}

impl SquareFree {
    pub const ONE: SquareFree = SquareFree { mask: 0, log: 0.0 };

    pub fn omega(&self) -> u32 {
        self.mask.count_ones()
    }

    pub fn divides_by(&self, prime_index: usize) -> bool {
        self.mask >> prime_index & 1 == 1
    }

    /// Exact value, when it fits in `u128`.
    pub fn value(&self, primes: &[u64]) -> Option<u128> {
        let mut v: u128 = 1;
        for (i, &p) in primes.iter().enumerate() {
            if self.divides_by(i) {
                v = v.checked_mul(p as u128)?;
            }
        }
        Some(v)
    }

    /// `f(m)^2 = w^omega(m)` for a common prime weight `w`.
    pub fn weight(&self, prime_weight: f64) -> f64 {
        prime_weight.powi(self.omega() as i32)
    }
}

/// Number of subsets of an `n`-set with at most `k` elements.
fn subsets_up_to(n: usize, k: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for j in 0..=k.min(n) {
        total = total.saturating_add(c);
        c = c * (n - j) as u128 / (j + 1) as u128;
    }
    total
}

/// Largest integer factor count allowed by a real threshold ("at most `k`").
pub fn count_bound(k: f64) -> usize {
    if k < 0.0 {
        0
    } else {
        k.floor() as usize
    }
}

/// All square-free products of `primes` with at most `k_max` prime factors,
/// ascending, including 1.
pub fn enumerate_squarefree(primes: &[u64], k_max: f64, cap: usize) -> Result<Vec<SquareFree>> {
    if primes.is_empty() {
        return Err(Error::Precondition("prime set is empty".into()));
    }
    if primes.len() > 64 {
        return Err(Error::Precondition(format!(
            "enumeration supports at most 64 primes, got {}",
            primes.len()
        )));
    }
    let k = count_bound(k_max).min(primes.len());
    let count = subsets_up_to(primes.len(), k);
    if count > cap as u128 {
        return Err(Error::EnumerationCap { count, cap });
    }
    let logs: Vec<f64> = primes.iter().map(|&p| (p as f64).ln()).collect();
    let mut out = Vec::with_capacity(count as usize);
    // Depth-first over increasing prime index; `log` accumulates in that order.
    let mut stack = vec![(SquareFree::ONE, 0usize)];
    while let Some((elem, next)) = stack.pop() {
        out.push(elem);
        if elem.omega() as usize == k {
            continue;
        }
        for i in next..primes.len() {
            stack.push((
                SquareFree {
                    mask: elem.mask | 1 << i,
                    log: elem.log + logs[i],
                },
                i + 1,
            ));
        }
    }
    sort_squarefree(&mut out, primes);
    Ok(out)
}

fn sort_squarefree(elems: &mut [SquareFree], primes: &[u64]) {
    elems.sort_by(|x, y| match (x.value(primes), y.value(primes)) {
        (Some(a), Some(b)) => a.cmp(&b),
        _ => x.log.total_cmp(&y.log).then(x.mask.cmp(&y.mask)),
    });
}

/// Elementary symmetric sums `e_0..=e_{j_max}` of nonnegative weights.
pub fn symmetric_sums(weights: &[f64], j_max: usize) -> Result<Vec<f64>> {
    if j_max > weights.len() {
        return Err(Error::Precondition(format!(
            "j_max = {j_max} exceeds the number of weights {}",
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::Precondition(format!("negative weight {w}")));
    }
    let mut e = vec![0.0; j_max + 1];
    e[0] = 1.0;
    for &w in weights {
        for j in (1..=j_max).rev() {
            e[j] += w * e[j - 1];
        }
    }
    Ok(e)
}

/// The full table `e_0..=e_|P|` for the prime weights of a window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetricTable {
    pub e: Vec<f64>,
}

impl SymmetricTable {
    pub fn new(weights: &[f64]) -> Result<Self> {
        Ok(SymmetricTable {
            e: symmetric_sums(weights, weights.len())?,
        })
    }

    /// `sum_{j <= k} e_j` for a real "at most" threshold.
    pub fn sum_at_most(&self, k: f64) -> f64 {
        if k < 0.0 {
            return 0.0;
        }
        let top = count_bound(k).min(self.e.len() - 1);
        compensated_sum(self.e[..=top].iter().copied())
    }

    /// `sum_{j > k} e_j`.
    pub fn sum_above(&self, k: f64) -> f64 {
        let start = if k < 0.0 { 0 } else { count_bound(k) + 1 };
        if start >= self.e.len() {
            return 0.0;
        }
        compensated_sum(self.e[start..].iter().copied())
    }

    /// `sum_j e_j = prod_p (1 + w_p)`.
    pub fn total(&self) -> f64 {
        compensated_sum(self.e.iter().copied())
    }

    /// Order-sensitive fingerprint of the table, for reproducibility checks.
    pub fn checksum(&self) -> u64 {
        self.e.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, x| {
            (h ^ x.to_bits()).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}

/// Window convention for the resonator coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum RWindow {
    /// Buckets `j-1, j, j+1` of the `(1 + 1/T)` lattice.
    #[default]
    Lattice,
    /// The printed endpoints `(1 - 1/T)^{j-1} <= n <= (1 + 1/T)^{j+2}`.
    Literal,
}

/// One occupied bucket of the geometric lattice and its representative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Representative {
    /// Bucket index `j`.
    pub j: i64,
    pub elem: SquareFree,
    /// `r(m_j) >= 0`.
    pub r: f64,
}

/// Bucket index `floor(log m / log(1 + 1/T))`.
pub fn bucket_index(log_m: f64, t_height: f64) -> i64 {
    (log_m / (1.0 / t_height).ln_1p()).floor() as i64
}

/// Quantize a sorted support set onto the `(1 + 1/T)` lattice.
///
/// Returns one representative per occupied bucket (the bucket minimum) with
/// `r(m_j)^2` equal to the `f^2`-mass of its window.
pub fn quantize(
    elems: &[SquareFree],
    t_height: f64,
    prime_weight: f64,
    window: RWindow,
) -> Vec<Representative> {
    let buckets: Vec<i64> = elems.iter().map(|e| bucket_index(e.log, t_height)).collect();
    let weights: Vec<f64> = elems.iter().map(|e| e.weight(prime_weight)).collect();

    // Occupied buckets with their index range into `elems`.
    let mut groups: Vec<(i64, usize, usize)> = Vec::new();
    for (i, &j) in buckets.iter().enumerate() {
        match groups.last_mut() {
            Some((bj, _, end)) if *bj == j => *end = i + 1,
            _ => groups.push((j, i, i + 1)),
        }
    }
    let mass: Vec<f64> = groups
        .iter()
        .map(|&(_, s, e)| compensated_sum(weights[s..e].iter().copied()))
        .collect();
    let mass_of: HashMap<i64, f64> = groups.iter().zip(&mass).map(|(g, m)| (g.0, *m)).collect();

    let mut prefix = Vec::with_capacity(weights.len() + 1);
    prefix.push(0.0);
    let mut acc = crate::sum::Neumaier::new();
    for &w in &weights {
        acc.add(w);
        prefix.push(acc.value());
    }
    let up = (1.0 / t_height).ln_1p();
    let down = (-1.0 / t_height).ln_1p();

    groups
        .iter()
        .map(|&(j, start, _)| {
            let r2 = match window {
                RWindow::Lattice => (j - 1..=j + 1)
                    .map(|b| mass_of.get(&b).copied().unwrap_or(0.0))
                    .sum::<f64>(),
                RWindow::Literal => {
                    let lo = (j - 1) as f64 * down;
                    let hi = (j + 2) as f64 * up;
                    let a = elems.partition_point(|e| e.log < lo);
                    let b = elems.partition_point(|e| e.log <= hi);
                    if b > a {
                        prefix[b] - prefix[a]
                    } else {
                        0.0
                    }
                }
            };
            Representative {
                j,
                elem: elems[start],
                r: r2.sqrt(),
            }
        })
        .collect()
}

/// Options for building a [`SetFamily`].
#[derive(Debug, Clone, Copy)]
pub struct SetOptions {
    /// Enumerate the support set explicitly (required for the resonator).
    pub enumerate: bool,
    pub enum_cap: usize,
    pub window: RWindow,
}

impl Default for SetOptions {
    fn default() -> Self {
        SetOptions {
            enumerate: true,
            enum_cap: DEFAULT_ENUM_CAP,
            window: RWindow::Lattice,
        }
    }
}

/// Windows, thresholds, the support set and its quantization.
#[derive(Debug, Clone, Serialize)]
pub struct SetFamily {
    pub windows: PrimeWindows,
    pub k_max: f64,
    pub k_min: f64,
    /// `f(p)^2`.
    pub prime_weight: f64,
    pub t_height: f64,
    /// Enumerated support set, ascending.
    #[serde(skip)]
    pub m_enum: Option<Vec<SquareFree>>,
    /// Lattice representatives and their coefficients, ascending.
    #[serde(skip)]
    pub mprime: Vec<Representative>,
    pub table: SymmetricTable,
}

impl SetFamily {
    pub fn build(params: &Params, opts: SetOptions) -> Result<Self> {
        params.require_sets()?;
        let windows = prime_windows(params.n_budget)?;
        Self::from_primes(windows, params, opts)
    }

    /// Build from explicit windows (used for hand-made instances).
    pub fn from_primes(windows: PrimeWindows, params: &Params, opts: SetOptions) -> Result<Self> {
        if windows.p.is_empty() {
            return Err(Error::EmptyWindow {
                n: windows.n_budget,
            });
        }
        let w = params.prime_weight();
        let table = SymmetricTable::new(&vec![w; windows.p.len()])?;
        let (m_enum, mprime) = if opts.enumerate {
            let elems = enumerate_squarefree(&windows.p, params.k_max, opts.enum_cap)?;
            let reps = quantize(&elems, params.t_height, w, opts.window);
            (Some(elems), reps)
        } else {
            (None, Vec::new())
        };
        Ok(SetFamily {
            windows,
            k_max: params.k_max,
            k_min: params.k_min,
            prime_weight: w,
            t_height: params.t_height,
            m_enum,
            mprime,
            table,
        })
    }

    pub fn primes(&self) -> &[u64] {
        &self.windows.p
    }

    /// `sum_{v in M} f(v)^2` (support set: at most `k_max` factors).
    pub fn mass_m(&self) -> f64 {
        self.table.sum_at_most(self.k_max)
    }

    /// `sum_{v in L} f(v)^2` (more than `k_min` and at most `k_max` factors).
    pub fn mass_l(&self) -> f64 {
        if self.k_min >= self.k_max {
            return 0.0;
        }
        let top = count_bound(self.k_max).min(self.table.e.len() - 1);
        let start = count_bound(self.k_min) + 1;
        if start > top {
            return 0.0;
        }
        compensated_sum(self.table.e[start..=top].iter().copied())
    }

    /// Enumerated `sum_{v in M} f(v)^2`, when available.
    pub fn mass_m_enumerated(&self) -> Option<f64> {
        self.m_enum
            .as_ref()
            .map(|m| compensated_sum(m.iter().map(|e| e.weight(self.prime_weight))))
    }

    pub fn diagnostics(&self) -> SetDiagnostics {
        let np = self.windows.p.len();
        let log_n = (self.windows.n_budget as f64).ln();
        let log_gap = 1.0 / self.prime_weight;
        let weight_sum = np as f64 * self.prime_weight;
        let pnt = WINDOW_MASS * log_n / log_gap;
        let count_m = subsets_up_to(np, count_bound(self.k_max));
        SetDiagnostics {
            n_primes: np,
            prime_weight_sum: weight_sum,
            pnt_prediction: pnt,
            pnt_relative_deviation: (weight_sum - pnt) / pnt,
            cardinality_bound: std::f64::consts::E.powi(2) * log_n,
            cardinality_ok: (np as f64) <= std::f64::consts::E.powi(2) * log_n,
            count_m,
            count_mprime: self.m_enum.as_ref().map(|_| self.mprime.len()),
            within_budget: count_m <= self.windows.n_budget as u128,
        }
    }
}

/// Size and prime-mass diagnostics of a [`SetFamily`].
#[derive(Debug, Clone, Serialize)]
pub struct SetDiagnostics {
    pub n_primes: usize,
    /// `sum_{p in P} f(p)^2 = |P| / |log(2 sigma - 1)|`.
    pub prime_weight_sum: f64,
    /// `(e^2 - e) log N / |log(2 sigma - 1)|`.
    pub pnt_prediction: f64,
    pub pnt_relative_deviation: f64,
    pub cardinality_bound: f64,
    pub cardinality_ok: bool,
    /// `|M|` from the binomial count.
    pub count_m: u128,
    pub count_mprime: Option<usize>,
    /// `|M| <= N`; expected only asymptotically.
    pub within_budget: bool,
}

fn prime_table(params: &Params) -> Result<SymmetricTable> {
    params.require_sets()?;
    let w = prime_windows(params.n_budget)?;
    if w.p.is_empty() {
        return Err(Error::EmptyWindow { n: params.n_budget });
    }
    SymmetricTable::new(&vec![params.prime_weight(); w.p.len()])
}

/// Relative `f^2`-mass of integers with at least `k_max` factors in `P`.
pub fn tail_ratio_m(params: &Params) -> Result<f64> {
    let t = prime_table(params)?;
    Ok(t.sum_above(params.k_max) / t.total())
}

/// `sum_{L} f^2 / sum_{M} f^2` from the symmetric table.
pub fn ratio_l_over_m(params: &Params) -> Result<f64> {
    let g = gamma_max(params.sigma, params.b)?;
    if params.gamma >= g {
        return Err(Error::Precondition(format!(
            "gamma = {} is not below gamma_max(sigma, b) = {g}",
            params.gamma
        )));
    }
    let t = prime_table(params)?;
    let m = t.sum_at_most(params.k_max);
    let top = count_bound(params.k_max).min(t.e.len() - 1);
    let start = count_bound(params.k_min) + 1;
    let l = if start > top {
        0.0
    } else {
        compensated_sum(t.e[start..=top].iter().copied())
    };
    Ok(l / m)
}

/// The tilted-generating-function bound on the low-factor-count mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowFactorBound {
    /// `sum_{v in L'} f(v)^2`.
    pub lhs: f64,
    /// `b^{-k_min} prod_p (1 + b f(p)^2)`.
    pub rhs: f64,
    /// `C(sigma)(e^2 - e)(b - 1) - gamma log b`; negative means decay.
    pub margin: f64,
    pub holds: bool,
}

pub fn low_factor_bound(params: &Params) -> Result<LowFactorBound> {
    let t = prime_table(params)?;
    let lhs = t.sum_at_most(params.k_min);
    let w = params.prime_weight();
    let np = t.e.len() - 1;
    let log_rhs = -params.k_min * params.b.ln() + np as f64 * (params.b * w).ln_1p();
    let rhs = log_rhs.exp();
    let margin = params.c_sigma() * WINDOW_MASS * (params.b - 1.0) - params.gamma * params.b.ln();
    Ok(LowFactorBound {
        lhs,
        rhs,
        margin,
        holds: lhs <= rhs,
    })
}
