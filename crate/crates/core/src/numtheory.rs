//! Prime sieving, the von Mangoldt function and the three prime windows.

use std::f64::consts::E;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::MIN_SET_BUDGET;

/// Default upper limit on sieve bounds.
pub const DEFAULT_SIEVE_CAP: u64 = 1 << 40;

const SEGMENT: u64 = 1 << 16;

/// Simple sieve of Eratosthenes for all primes `<= n`.
fn small_primes(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Primes in the integer range `[lo, hi]` with a segmented sieve.
///
/// Segments are processed in parallel and concatenated in order, so the
/// output does not depend on the worker count.
pub fn sieve_range(lo: u64, hi: u64, cap: u64) -> Result<Vec<u64>> {
    if hi > cap {
        return Err(Error::SieveCap { hi, cap });
    }
    let lo = lo.max(2);
    if hi < lo {
        return Ok(Vec::new());
    }
    let base = small_primes(isqrt(hi));
    let n_segments = (hi - lo) / SEGMENT + 1;
    let chunks: Vec<Vec<u64>> = (0..n_segments)
        .into_par_iter()
        .map(|s| {
            let start = lo + s * SEGMENT;
            let end = (start + SEGMENT - 1).min(hi);
            let mut composite = vec![false; (end - start + 1) as usize];
            for &p in &base {
                if p * p > end {
                    break;
                }
                let first = (p * p).max(start.div_ceil(p) * p);
                let mut m = first;
                while m <= end {
                    composite[(m - start) as usize] = true;
                    m += p;
                }
            }
            composite
                .iter()
                .enumerate()
                .filter(|(_, &c)| !c)
                .map(|(i, _)| start + i as u64)
                .collect()
        })
        .collect();
    Ok(chunks.concat())
}

/// Integer bounds `(first, last)` of the half-open real interval `(lo, hi]`.
fn integer_span(lo: f64, hi: f64) -> (u64, u64) {
    let first = if lo < 0.0 { 0 } else { lo.floor() as u64 + 1 };
    let last = if hi < 0.0 { 0 } else { hi.floor() as u64 };
    (first, last)
}

/// Primes `p` with `lo < p <= hi`.
pub fn sieve_primes(lo: f64, hi: f64) -> Result<Vec<u64>> {
    sieve_primes_capped(lo, hi, DEFAULT_SIEVE_CAP)
}

pub fn sieve_primes_capped(lo: f64, hi: f64, cap: u64) -> Result<Vec<u64>> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Precondition(format!("non-finite sieve interval ({lo}, {hi}]")));
    }
    if hi > cap as f64 {
        return Err(Error::SieveCap { hi: hi as u64, cap });
    }
    let (first, last) = integer_span(lo, hi);
    if last < first {
        return Ok(Vec::new());
    }
    sieve_range(first, last, cap)
}

/// Smallest prime factor of `n >= 2` by trial division.
fn smallest_factor(n: u64) -> u64 {
    if n.is_multiple_of(2) {
        return 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return d;
        }
        d += 2;
    }
    n
}

/// `Lambda(n)`: `log p` when `n = p^k`, otherwise 0.
pub fn von_mangoldt(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let p = smallest_factor(n);
    let mut m = n;
    while m.is_multiple_of(p) {
        m /= p;
    }
    if m == 1 {
        (p as f64).ln()
    } else {
        0.0
    }
}

/// A prime power `p^k` with its base and exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PrimePower {
    pub n: u64,
    pub p: u64,
    pub k: u32,
}

impl PrimePower {
    /// `Lambda(n)/log n = 1/k`.
    pub fn lambda_over_log(&self) -> f64 {
        1.0 / self.k as f64
    }
}

/// Prime powers `n = p^k` (`k >= 1`) with `lo < n <= hi`, ascending in `n`.
pub fn prime_powers(lo: f64, hi: f64) -> Result<Vec<PrimePower>> {
    let (first, last) = integer_span(lo, hi);
    if last < first.max(2) {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for p in sieve_range(2, last, DEFAULT_SIEVE_CAP)? {
        let mut n = p;
        let mut k = 1;
        loop {
            if n >= first {
                out.push(PrimePower { n, p, k });
            }
            match n.checked_mul(p) {
                Some(m) if m <= last => {
                    n = m;
                    k += 1;
                }
                _ => break,
            }
        }
    }
    out.sort_by_key(|pp| pp.n);
    Ok(out)
}

/// The prime sets `P-`, `P`, `P+` attached to a resonator budget `N`.
///
/// With `X = log N * log log N` the windows are `(e^{1/2}X, eX]`,
/// `(eX, e^2 X]` and `(e^2 X, e^{5/2}X]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimeWindows {
    #[serde(rename = "N")]
    pub n_budget: u64,
    /// `log N * log log N`.
    pub scale: f64,
    pub lo_minus: f64,
    pub hi_minus: f64,
    pub lo: f64,
    pub hi: f64,
    pub lo_plus: f64,
    pub hi_plus: f64,
    pub p_minus: Vec<u64>,
    pub p: Vec<u64>,
    pub p_plus: Vec<u64>,
    /// Names of windows that contain no prime.
    pub empty: Vec<&'static str>,
}

impl PrimeWindows {
    /// Centre `y` of the three kernel frequencies, `e^{k} X` for `k = 1, 3/2, 2`.
    pub fn kernel_centres(&self) -> [f64; 3] {
        [E * self.scale, E.powf(1.5) * self.scale, E * E * self.scale]
    }
}

/// Build the three windows for `N >= 16`.
pub fn prime_windows(n_budget: u64) -> Result<PrimeWindows> {
    if n_budget < MIN_SET_BUDGET {
        return Err(Error::DegenerateWindow { n: n_budget });
    }
    let log_n = (n_budget as f64).ln();
    let scale = log_n * log_n.ln();
    let at = |k: f64| k.exp() * scale;
    let (lo_minus, lo, hi, hi_plus) = (at(0.5), at(1.0), at(2.0), at(2.5));
    let p_minus = sieve_primes(lo_minus, lo)?;
    let p = sieve_primes(lo, hi)?;
    let p_plus = sieve_primes(hi, hi_plus)?;
    let mut empty = Vec::new();
    for (name, set) in [("P-", &p_minus), ("P", &p), ("P+", &p_plus)] {
        if set.is_empty() {
            empty.push(name);
        }
    }
    Ok(PrimeWindows {
        n_budget,
        scale,
        lo_minus,
        hi_minus: lo,
        lo,
        hi,
        lo_plus: hi,
        hi_plus,
        p_minus,
        p,
        p_plus,
        empty,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division_primes(lo: f64, hi: f64) -> Vec<u64> {
        let is_prime = |n: u64| n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d));
        ((lo.floor() as u64 + 1)..=(hi.floor() as u64))
            .filter(|&n| is_prime(n))
            .collect()
    }

    #[test]
    fn small_cases() {
        assert_eq!(sieve_primes(1.0, 10.0).unwrap(), vec![2, 3, 5, 7]);
        assert!(sieve_primes(10.0, 10.0).unwrap().is_empty());
        // half-open: 7 excluded, 11 included
        assert_eq!(sieve_primes(7.0, 11.0).unwrap(), vec![11]);
    }

    #[test]
    fn matches_trial_division() {
        let got = sieve_primes(98.62, 268.1).unwrap();
        assert_eq!(got, trial_division_primes(98.62, 268.1));
        assert_eq!(got.len(), 31);
        for (lo, hi) in [(0.0, 2.0), (1e5, 1e5 + 3000.0), (65_530.0, 65_600.0), (0.5, 200_000.0)] {
            assert_eq!(sieve_primes(lo, hi).unwrap(), trial_division_primes(lo, hi));
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            sieve_primes_capped(0.0, 1e6, 1000),
            Err(Error::SieveCap { .. })
        ));
    }

    #[test]
    fn von_mangoldt_values() {
        assert_eq!(von_mangoldt(1), 0.0);
        assert_eq!(von_mangoldt(8), 2f64.ln());
        assert_eq!(von_mangoldt(6), 0.0);
        assert_eq!(von_mangoldt(97), 97f64.ln());
        assert_eq!(von_mangoldt(121), 11f64.ln());
    }

    #[test]
    fn prime_powers_match_von_mangoldt() {
        let pp = prime_powers(60.65, 164.87).unwrap();
        let direct: Vec<u64> = (61..=164).filter(|&n| von_mangoldt(n) > 0.0).collect();
        assert_eq!(pp.iter().map(|x| x.n).collect::<Vec<_>>(), direct);
        assert!(pp.iter().any(|x| x.n == 64 && x.k == 6));
        assert!(pp.iter().any(|x| x.n == 125 && x.p == 5 && x.k == 3));
    }

    #[test]
    fn windows_reference_values() {
        // endpoints and counts from mpmath + trial division
        let w = prime_windows(1_000_000).unwrap();
        assert!((w.lo - 98.610_174_577_694_3).abs() < 1e-9);
        assert!((w.hi - 268.050_245_655_721).abs() < 1e-9);
        assert_eq!((w.p_minus.len(), w.p.len(), w.p_plus.len()), (8, 31, 29));

        let w = prime_windows(1000).unwrap();
        assert!((w.lo - 36.289_706_270_604_4).abs() < 1e-9);
        assert!((w.hi - 98.645_649_115_500_2).abs() < 1e-9);
        assert_eq!((w.p_minus.len(), w.p.len(), w.p_plus.len()), (3, 14, 12));

        let w = prime_windows(16).unwrap();
        assert!(((16f64).ln().ln() - 1.019_781_440_538_23).abs() < 1e-12);
        assert_eq!(w.p, vec![11, 13, 17, 19]);
        assert!(w.empty.is_empty());

        assert!(matches!(prime_windows(15), Err(Error::DegenerateWindow { n: 15 })));
    }

    #[test]
    fn window_invariants() {
        for n in [16u64, 50, 1000, 12_345, 1_000_000, 10_000_000_000] {
            let w = prime_windows(n).unwrap();
            let log_n = (n as f64).ln();
            assert!((w.p.len() as f64) <= E * E * log_n);
            assert!(w.p_minus.iter().all(|&p| (p as f64) > w.lo_minus && (p as f64) <= w.lo));
            assert!(w.p.iter().all(|&p| (p as f64) > w.lo && (p as f64) <= w.hi));
            assert!(w.p_plus.iter().all(|&p| (p as f64) > w.hi && (p as f64) <= w.hi_plus));
            if let (Some(a), Some(b), Some(c), Some(d)) =
                (w.p_minus.last(), w.p.first(), w.p.last(), w.p_plus.first())
            {
                assert!(a < b && c < d);
            }
        }
    }
}
