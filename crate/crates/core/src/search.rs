//! Grid search for large values of `Re(e^{-i theta} log zeta(sigma + it))`
//! on `[T^beta, T]`, with golden-section refinement of the best candidates.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{theorem_bound_at, TheoremBound};
use crate::zeta::{indicator, log_zeta, log_zeta_vertical, ZeroDatabase};

/// Candidates refined around the best grid samples.
pub const REFINE_CANDIDATES: usize = 5;

/// Bracket width at which refinement stops.
pub const REFINE_WIDTH: f64 = 1e-6;

/// What to search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchRequest {
    pub sigma: f64,
    pub beta: f64,
    #[serde(rename = "T")]
    pub t_height: f64,
    pub grid_n: usize,
    /// `kappa` of the comparison bound; `(sigma - 1/2)/2` when absent.
    pub kappa: Option<f64>,
    pub zeta_tol: f64,
}

impl SearchRequest {
    pub fn new(sigma: f64, beta: f64, t_height: f64, grid_n: usize) -> Self {
        SearchRequest {
            sigma,
            beta,
            t_height,
            grid_n,
            kappa: None,
            zeta_tol: 1e-10,
        }
    }

    pub fn bound_kappa(&self) -> f64 {
        self.kappa.unwrap_or(0.5 * (self.sigma - 0.5))
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.5 && self.sigma < 1.0) {
            return Err(Error::Domain {
                name: "sigma",
                value: self.sigma,
                reason: "must lie in (1/2, 1)".into(),
            });
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Domain {
                name: "beta",
                value: self.beta,
                reason: "must lie in (0, 1)".into(),
            });
        }
        if self.grid_n < 2 {
            return Err(Error::Precondition(format!("grid needs at least 2 points, got {}", self.grid_n)));
        }
        let lo = self.t_height.powf(self.beta);
        if !(lo >= 1.0 && self.t_height > lo) {
            return Err(Error::Precondition(format!(
                "search range [T^beta, T] = [{lo}, {}] must be nonempty and start at height >= 1",
                self.t_height
            )));
        }
        Ok(())
    }
}

/// Best point found for one `theta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub t_star: f64,
    pub value: f64,
    pub grid_points: usize,
    pub refinement_iters: usize,
    pub bound_value: f64,
    pub ratio_to_bound: f64,
    pub theta: f64,
    pub sigma: f64,
    pub beta: f64,
    #[serde(rename = "T")]
    pub t_height: f64,
    pub grid_best_t: f64,
    pub grid_best_value: f64,
    /// Grid points where `log zeta` could not be continued.
    pub skipped: usize,
    /// Grid points with a catalogued zero of real part `>= sigma` within `(log t)^2`.
    pub near_zero_points: usize,
}

/// `log zeta` sampled once on a log-uniform grid, reusable for every `theta`.
#[derive(Debug, Clone)]
pub struct SearchGrid {
    pub request: SearchRequest,
    pub ts: Vec<f64>,
    pub samples: Vec<Option<Complex64>>,
    pub near_zero_points: usize,
}

/// `Re(e^{-i theta} w)`.
pub fn rotate(theta: f64, w: Complex64) -> f64 {
    theta.cos() * w.re + theta.sin() * w.im
}

/// Larger value first, then smaller `t`.
fn better(a: (f64, f64), b: (f64, f64)) -> bool {
    a.1 > b.1 || (a.1 == b.1 && a.0 < b.0)
}

impl SearchGrid {
    pub fn build(request: SearchRequest, db: &ZeroDatabase) -> Result<Self> {
        request.validate()?;
        let lo = request.t_height.powf(request.beta).ln();
        let hi = request.t_height.ln();
        let n = request.grid_n;
        let ts: Vec<f64> = (0..n)
            .map(|i| {
                if i + 1 == n {
                    request.t_height
                } else {
                    (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()
                }
            })
            .collect();
        let samples: Vec<Option<Complex64>> = log_zeta_vertical(request.sigma, &ts, request.zeta_tol)
            .into_iter()
            .map(|r| r.ok())
            .collect();
        let mut near_zero_points = 0;
        for &t in &ts {
            if t > 1.0 && indicator(request.sigma, t, db)?.value == 0 {
                near_zero_points += 1;
            }
        }
        Ok(SearchGrid {
            request,
            ts,
            samples,
            near_zero_points,
        })
    }

    pub fn skipped(&self) -> usize {
        self.samples.iter().filter(|s| s.is_none()).count()
    }

    pub fn objective(&self, theta: f64) -> Vec<Option<f64>> {
        self.samples.iter().map(|s| s.map(|w| rotate(theta, w))).collect()
    }

    /// Best grid sample with `t` in `[lo, hi]`.
    pub fn max_on(&self, theta: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for (t, s) in self.ts.iter().zip(&self.samples) {
            if let Some(w) = s {
                if *t >= lo && *t <= hi {
                    let cand = (*t, rotate(theta, *w));
                    if best.is_none_or(|b| better(cand, b)) {
                        best = Some(cand);
                    }
                }
            }
        }
        best
    }

    /// Refine the best grid candidates and report the overall maximum.
    pub fn scan(&self, theta: f64) -> Result<SearchResult> {
        let vals = self.objective(theta);
        let mut order: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].is_some()).collect();
        if order.is_empty() {
            return Err(Error::Continuation {
                sigma: self.request.sigma,
                t: self.request.t_height,
                reason: "no grid point could be evaluated".into(),
            });
        }
        order.sort_by(|&a, &b| {
            let (va, vb) = (vals[a].unwrap(), vals[b].unwrap());
            vb.total_cmp(&va).then(a.cmp(&b))
        });
        let grid_best = (self.ts[order[0]], vals[order[0]].unwrap());
        let mut best = grid_best;
        let mut iters = 0;
        let mut taken: Vec<usize> = Vec::new();
        for &i in &order {
            if taken.len() == REFINE_CANDIDATES {
                break;
            }
            // one candidate per local peak
            if taken.iter().any(|&j| j.abs_diff(i) <= 1) {
                continue;
            }
            taken.push(i);
            let a = self.ts[i.saturating_sub(1)];
            let b = self.ts[(i + 1).min(self.ts.len() - 1)];
            let (cand, n) = self.golden_section(theta, a, b, (self.ts[i], vals[i].unwrap()))?;
            iters += n;
            if better(cand, best) {
                best = cand;
            }
        }
        let bound = self.bound()?;
        Ok(SearchResult {
            t_star: best.0,
            value: best.1,
            grid_points: self.ts.len(),
            refinement_iters: iters,
            bound_value: bound.value,
            ratio_to_bound: best.1 / bound.value,
            theta,
            sigma: self.request.sigma,
            beta: self.request.beta,
            t_height: self.request.t_height,
            grid_best_t: grid_best.0,
            grid_best_value: grid_best.1,
            skipped: self.skipped(),
            near_zero_points: self.near_zero_points,
        })
    }

    fn bound(&self) -> Result<TheoremBound> {
        theorem_bound_at(self.request.sigma, self.request.bound_kappa(), self.request.t_height)
    }

    fn eval(&self, theta: f64, t: f64) -> Option<f64> {
        log_zeta(self.request.sigma, t, self.request.zeta_tol)
            .ok()
            .map(|s| rotate(theta, s.value))
    }

    /// Golden-section maximisation on `[a, b]`; never returns less than `start`.
    fn golden_section(&self, theta: f64, mut a: f64, mut b: f64, start: (f64, f64)) -> Result<((f64, f64), usize)> {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut best = start;
        let mut x1 = b - g * (b - a);
        let mut x2 = a + g * (b - a);
        let mut f1 = self.eval(theta, x1);
        let mut f2 = self.eval(theta, x2);
        let mut n = 2;
        while b - a > REFINE_WIDTH {
            for (x, f) in [(x1, f1), (x2, f2)] {
                if let Some(v) = f {
                    if better((x, v), best) {
                        best = (x, v);
                    }
                }
            }
            let left = match (f1, f2) {
                (Some(v1), Some(v2)) => v1 >= v2,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => break,
            };
            if left {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = self.eval(theta, x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = self.eval(theta, x2);
            }
            n += 1;
        }
        for (x, f) in [(x1, f1), (x2, f2)] {
            if let Some(v) = f {
                if better((x, v), best) {
                    best = (x, v);
                }
            }
        }
        Ok((best, n))
    }
}

pub fn scan_max(request: SearchRequest, theta: f64, db: &ZeroDatabase) -> Result<SearchResult> {
    SearchGrid::build(request, db)?.scan(theta)
}

/// Largest `-log |zeta|` on the range, i.e. the `theta = pi` search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinModulus {
    pub result: SearchResult,
    pub min_modulus: f64,
}

pub fn min_modulus_scan(request: SearchRequest, db: &ZeroDatabase) -> Result<MinModulus> {
    let result = scan_max(request, std::f64::consts::PI, db)?;
    Ok(MinModulus {
        min_modulus: (-result.value).exp(),
        result,
    })
}

/// One result per `theta`, all sharing one grid of samples.
pub fn theta_sweep(request: SearchRequest, thetas: &[f64], db: &ZeroDatabase) -> Result<Vec<SearchResult>> {
    let grid = SearchGrid::build(request, db)?;
    thetas.iter().map(|&th| grid.scan(th)).collect()
}

/// One rung of a height ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremComparison {
    #[serde(rename = "T")]
    pub t_height: f64,
    pub value: f64,
    pub bound_value: f64,
    pub ratio: f64,
    pub growth_factor: f64,
}

pub fn compare_to_theorem(result: &SearchResult, kappa: f64) -> Result<TheoremComparison> {
    let bound = theorem_bound_at(result.sigma, kappa, result.t_height)?;
    Ok(TheoremComparison {
        t_height: result.t_height,
        value: result.value,
        bound_value: bound.value,
        ratio: result.value / bound.value,
        growth_factor: bound.growth_factor,
    })
}

/// Scan each height of a ladder at one `theta`.
pub fn height_ladder(base: SearchRequest, heights: &[f64], theta: f64, db: &ZeroDatabase) -> Result<Vec<SearchResult>> {
    heights
        .iter()
        .map(|&t| {
            scan_max(
                SearchRequest {
                    t_height: t,
                    ..base
                },
                theta,
                db,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> SearchGrid {
        SearchGrid::build(SearchRequest::new(0.6, 0.5, 2000.0, 3000), &ZeroDatabase::empty_verified(3e12)).unwrap()
    }

    #[test]
    fn refinement_never_loses() {
        let g = grid();
        for th in [0.0, 1.0, PI] {
            let r = g.scan(th).unwrap();
            assert!(r.value >= r.grid_best_value);
            assert!(r.t_star >= 2000f64.sqrt() && r.t_star <= 2000.0);
            assert!(r.refinement_iters > 0);
            assert_eq!(r.ratio_to_bound, r.value / r.bound_value);
        }
    }

    #[test]
    fn periodic_in_theta() {
        let g = grid();
        let a = g.scan(0.4).unwrap();
        let b = g.scan(0.4 + 2.0 * PI).unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
        assert!((a.t_star - b.t_star).abs() < 1e-5);
    }

    #[test]
    fn rotation_envelope() {
        let g = grid();
        for w in g.samples.iter().flatten().step_by(97) {
            let peak = rotate(w.arg(), *w);
            assert!((peak - w.norm()).abs() < 1e-12 * w.norm().max(1.0));
            for k in 0..8 {
                let th = k as f64 * 0.7;
                assert!((rotate(th, *w) - w.norm() * (th - w.arg()).cos()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn min_modulus_is_pi_scan() {
        let req = SearchRequest::new(0.6, 0.5, 1000.0, 2000);
        let db = ZeroDatabase::empty_verified(3e12);
        let c = min_modulus_scan(req, &db).unwrap();
        let s = scan_max(req, PI, &db).unwrap();
        assert_eq!(c.result, s);
        let z = crate::zeta::zeta_em(0.6, c.result.t_star, 1e-12).unwrap().0;
        assert!((z.norm() - c.min_modulus).abs() < 1e-10);
    }

    #[test]
    fn sweep_matches_independent_scans() {
        let req = SearchRequest::new(0.7, 0.5, 600.0, 800);
        let db = ZeroDatabase::empty_verified(3e12);
        let thetas = [0.0, 0.5 * PI, PI, 1.5 * PI];
        let sweep = theta_sweep(req, &thetas, &db).unwrap();
        for (th, r) in thetas.iter().zip(&sweep) {
            assert_eq!(*r, scan_max(req, *th, &db).unwrap());
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let db = ZeroDatabase::empty_verified(3e12);
        assert!(scan_max(SearchRequest::new(0.6, 0.5, 1000.0, 1), 0.0, &db).is_err());
        assert!(scan_max(SearchRequest::new(0.4, 0.5, 1000.0, 10), 0.0, &db).is_err());
    }
}
