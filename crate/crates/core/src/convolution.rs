//! The convolution identity linking a kernel-weighted integral of `log zeta`
//! over `[t - (log t)^2, t + (log t)^2]` to a finite von Mangoldt sum.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numtheory::{prime_powers, PrimeWindows, DEFAULT_SIEVE_CAP};
use crate::quad::{fejer_factor, fejer_line_integral, fejer_window_integral, gl16, Cosine};
use crate::sum::ComplexNeumaier;
use crate::zeta::{indicator, log_zeta_vertical, ZeroDatabase};

/// `(sin(psi u)/u)^2` with its limit `psi^2` at the origin.
pub fn sinc_square(psi: f64, u: f64) -> f64 {
    let x = psi * u;
    if x.abs() < 1e-4 {
        psi * psi * (1.0 - x * x / 3.0)
    } else {
        let s = x.sin() / u;
        s * s
    }
}

/// The three-centre kernel `K(u) = (sin(u/2)/u)^2 sum_y (1 + cos(theta + u log y))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kernel {
    pub theta: f64,
    /// `log y` for the three centres `y = e^{1, 3/2, 2} log N log log N`.
    pub log_centres: [f64; 3],
}

impl Kernel {
    pub fn new(theta: f64, windows: &PrimeWindows) -> Self {
        Kernel {
            theta,
            log_centres: windows.kernel_centres().map(f64::ln),
        }
    }

    pub fn for_budget(theta: f64, n_budget: u64) -> Result<Self> {
        let w = crate::numtheory::prime_windows(n_budget)?;
        Ok(Self::new(theta, &w))
    }

    pub fn eval(&self, u: f64) -> f64 {
        let f = fejer_factor(u);
        let c: f64 = self
            .log_centres
            .iter()
            .map(|&l| 1.0 + (self.theta + u * l).cos())
            .sum();
        f * c
    }

    /// The kernel as a sum of cosines against `(sin(u/2)/u)^2`.
    pub fn cosines(&self) -> Vec<Cosine> {
        let mut v = vec![Cosine {
            amp: 3.0,
            freq: 0.0,
            phase: 0.0,
        }];
        v.extend(self.log_centres.iter().map(|&l| Cosine {
            amp: 1.0,
            freq: l,
            phase: self.theta,
        }));
        v
    }

    /// `int_R K` by quadrature.
    pub fn mass(&self) -> f64 {
        fejer_line_integral(&self.cosines())
    }

    /// `int_{-L}^{L} K` in closed form.
    pub fn window_mass(&self, half_width: f64) -> f64 {
        fejer_window_integral(&self.cosines(), half_width)
    }
}

/// `K(u)` for the centres attached to the budget `N`.
pub fn kernel_k(u: f64, theta: f64, n_budget: u64) -> Result<f64> {
    Ok(Kernel::for_budget(theta, n_budget)?.eval(u))
}

/// Triangle weight of the prime sum, `max(0, psi - |H - log n|)`.
pub fn fejer_weight(psi: f64, h: f64, n: u64) -> f64 {
    (psi - (h - (n as f64).ln()).abs()).max(0.0)
}

/// Half-width of the triangle multiplying `Lambda(n)/(n^s log n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum TriangleWidth {
    /// `psi`, as displayed alongside the kernel `(sin(psi u)/u)^2`.
    Displayed,
    /// `2 psi`, the support of the Fourier transform of `(sin(psi u)/u)^2`.
    #[default]
    Transform,
}

impl TriangleWidth {
    fn half_width(self, psi: f64) -> f64 {
        match self {
            TriangleWidth::Displayed => psi,
            TriangleWidth::Transform => 2.0 * psi,
        }
    }
}

/// `sum_n Lambda(n) max(0, w - |H - log n|)/(n^{sigma+it} log n)`.
pub fn conv_rhs(sigma: f64, t: f64, psi: f64, h: f64, width: TriangleWidth) -> Result<Complex64> {
    if !(psi > 0.0 && h.is_finite()) {
        return Err(Error::Precondition(format!("need psi > 0 and finite H, got psi = {psi}, H = {h}")));
    }
    let w = width.half_width(psi);
    let hi = (h + w).exp();
    if hi > DEFAULT_SIEVE_CAP as f64 {
        return Err(Error::SieveCap {
            hi: hi.min(u64::MAX as f64) as u64,
            cap: DEFAULT_SIEVE_CAP,
        });
    }
    let mut acc = ComplexNeumaier::default();
    for pp in prime_powers((h - w).exp(), hi)? {
        let ln = (pp.n as f64).ln();
        let weight = (w - (h - ln).abs()).max(0.0);
        if weight > 0.0 {
            acc.add(Complex64::from_polar(weight * pp.lambda_over_log() * (-sigma * ln).exp(), -t * ln));
        }
    }
    Ok(acc.value())
}

/// Budget scale `e^{|H| + 2 psi}/(log t)^2`.
pub fn budget(t: f64, psi: f64, h: f64) -> f64 {
    (h.abs() + 2.0 * psi).exp() / t.ln().powi(2)
}

/// Samples of `log zeta(sigma + i(t + u))` at Gauss-Legendre nodes on
/// `[-(log t)^2, (log t)^2]`, refined level by level and shared by kernels.
#[derive(Debug, Clone)]
pub struct ConvolutionLine {
    pub sigma: f64,
    pub t: f64,
    pub half_width: f64,
    base_panels: usize,
    zeta_tol: f64,
    levels: Vec<Option<LineLevel>>,
}

#[derive(Debug, Clone)]
struct LineLevel {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<Complex64>,
}

/// Deepest refinement level (panel width `2^-8` of the base width).
const MAX_LEVEL: usize = 8;

impl ConvolutionLine {
    pub fn new(sigma: f64, t: f64, zeta_tol: f64) -> Result<Self> {
        if !(t.abs() >= 15.0) {
            return Err(Error::Precondition(format!("convolution needs |t| >= 15, got {t}")));
        }
        if !(sigma > 0.5 && sigma < 1.0) {
            return Err(Error::Domain {
                name: "sigma",
                value: sigma,
                reason: "must lie in (1/2, 1)".into(),
            });
        }
        let half_width = t.abs().ln().powi(2);
        let base_width = 1f64.min(4.0 * (sigma - 0.5));
        let base_panels = (2.0 * half_width / base_width).ceil() as usize;
        Ok(ConvolutionLine {
            sigma,
            t,
            half_width,
            base_panels,
            zeta_tol,
            levels: vec![None; MAX_LEVEL + 1],
        })
    }

    fn panel_width(&self, level: usize) -> f64 {
        2.0 * self.half_width / (self.base_panels << level) as f64
    }

    fn level(&mut self, level: usize) -> Result<&LineLevel> {
        if self.levels[level].is_none() {
            let panels = self.base_panels << level;
            let width = self.panel_width(level);
            let rule = gl16();
            let mut nodes = Vec::with_capacity(panels * 16);
            let mut weights = Vec::with_capacity(panels * 16);
            for k in 0..panels {
                let lo = -self.half_width + k as f64 * width;
                for (x, w) in rule.on(lo, lo + width) {
                    nodes.push(x);
                    weights.push(w);
                }
            }
            let ts: Vec<f64> = nodes.iter().map(|u| self.t + u).collect();
            let values = log_zeta_vertical(self.sigma, &ts, self.zeta_tol)
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            self.levels[level] = Some(LineLevel { nodes, weights, values });
        }
        Ok(self.levels[level].as_ref().unwrap())
    }

    fn sum_level<F: Fn(f64) -> Complex64>(&mut self, level: usize, weight: &F) -> Result<Complex64> {
        let lv = self.level(level)?;
        let mut acc = ComplexNeumaier::default();
        for ((u, w), v) in lv.nodes.iter().zip(&lv.weights).zip(&lv.values) {
            acc.add(*v * weight(*u) * *w);
        }
        Ok(acc.value())
    }

    /// `int log zeta(sigma + i(t + u)) weight(u) du` refined until two
    /// successive levels differ by less than `tol`.
    ///
    /// `max_freq` is the largest angular frequency in `weight`; panels start no
    /// wider than one of its periods.
    pub fn integrate<F: Fn(f64) -> Complex64>(&mut self, weight: F, max_freq: f64, tol: f64) -> Result<LineIntegral> {
        let mut level = 0;
        while level < MAX_LEVEL && max_freq * self.panel_width(level) > 2.0 * PI {
            level += 1;
        }
        let mut prev = self.sum_level(level, &weight)?;
        let mut last_err = f64::INFINITY;
        while level < MAX_LEVEL {
            level += 1;
            let cur = self.sum_level(level, &weight)?;
            last_err = (cur - prev).norm();
            if last_err < tol {
                return Ok(LineIntegral {
                    value: cur,
                    err: last_err,
                    nodes: self.base_panels << level << 4,
                });
            }
            prev = cur;
        }
        Err(Error::Quadrature { err: last_err, tol })
    }
}

/// A converged line integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineIntegral {
    pub value: Complex64,
    pub err: f64,
    pub nodes: usize,
}

/// `(2/pi) int log zeta(sigma + i(t+u)) (sin(psi u)/u)^2 e^{iHu} du`.
pub fn conv_lhs_on(line: &mut ConvolutionLine, psi: f64, h: f64, tol: f64) -> Result<LineIntegral> {
    let r = line.integrate(
        |u| Complex64::from_polar(sinc_square(psi, u), h * u),
        h.abs() + 2.0 * psi,
        tol * FRAC_PI_2,
    )?;
    Ok(LineIntegral {
        value: r.value / FRAC_PI_2,
        err: r.err / FRAC_PI_2,
        nodes: r.nodes,
    })
}

pub fn conv_lhs(sigma: f64, t: f64, psi: f64, h: f64, tol: f64) -> Result<LineIntegral> {
    let mut line = ConvolutionLine::new(sigma, t, crate::zeta::DEFAULT_TOL)?;
    conv_lhs_on(&mut line, psi, h, tol)
}

/// Left side of the combined identity with weight `(sin(u/2)/u)^2 (1 + cos(theta + u log x))`.
pub fn combined_lhs_on(line: &mut ConvolutionLine, x: f64, theta: f64, tol: f64) -> Result<LineIntegral> {
    let lx = x.ln();
    let r = line.integrate(
        |u| Complex64::new(fejer_factor(u) * (1.0 + (theta + u * lx).cos()), 0.0),
        lx.abs() + 1.0,
        tol * FRAC_PI_2,
    )?;
    Ok(LineIntegral {
        value: r.value / FRAC_PI_2,
        err: r.err / FRAC_PI_2,
        nodes: r.nodes,
    })
}

/// Right side of the combined identity:
/// `(1/2) e^{i theta} sum_{e^{-1/2} x <= n <= e^{1/2} x} Lambda(n)(1/2 - |log(n/x)|)/(n^s log n)`.
pub fn combined_rhs(sigma: f64, t: f64, x: f64, theta: f64, width: TriangleWidth) -> Result<Complex64> {
    let lx = x.ln();
    let main = conv_rhs(sigma, t, 0.5, lx, width)? * Complex64::from_polar(0.5, theta);
    match width {
        TriangleWidth::Displayed => Ok(main),
        // with the wider triangle the H = -log x and H = 0 sums no longer vanish
        TriangleWidth::Transform => Ok(main
            + conv_rhs(sigma, t, 0.5, 0.0, width)?
            + conv_rhs(sigma, t, 0.5, -lx, width)? * Complex64::from_polar(0.5, -theta)),
    }
}

/// Residual of one instance of the convolution identity.
#[derive(Debug, Clone, Serialize)]
pub struct ConvolutionReport {
    pub sigma: f64,
    pub t: f64,
    pub psi: f64,
    #[serde(rename = "H")]
    pub h: Option<f64>,
    pub x: Option<f64>,
    pub theta: Option<f64>,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
    pub budget: f64,
    /// `residual / budget`, the measured constant of the error term.
    pub empirical_constant: f64,
    pub quadrature_err: f64,
    pub nodes: usize,
    pub triangle: TriangleWidth,
    /// True when the zero-free hypothesis rests on an uncertified height range.
    pub heuristic_indicator: bool,
}

fn require_zero_free(sigma: f64, t: f64, db: &ZeroDatabase) -> Result<bool> {
    let ind = indicator(sigma, t, db)?;
    if ind.value == 0 {
        return Err(Error::IndicatorRefusal {
            t,
            reason: format!("a zero with real part >= {sigma} lies within (log t)^2 of t"),
        });
    }
    Ok(ind.heuristic)
}

/// Check one instance of the identity at shift `H`.
pub fn verify_convolution(
    sigma: f64,
    t: f64,
    psi: f64,
    h: f64,
    tol: f64,
    db: &ZeroDatabase,
    width: TriangleWidth,
) -> Result<ConvolutionReport> {
    let heuristic = require_zero_free(sigma, t, db)?;
    let mut line = ConvolutionLine::new(sigma, t, crate::zeta::DEFAULT_TOL)?;
    verify_on(&mut line, psi, h, tol, width, heuristic)
}

/// [`verify_convolution`] reusing the samples cached in `line`.
pub fn verify_on(
    line: &mut ConvolutionLine,
    psi: f64,
    h: f64,
    tol: f64,
    width: TriangleWidth,
    heuristic: bool,
) -> Result<ConvolutionReport> {
    let lhs = conv_lhs_on(line, psi, h, tol)?;
    let rhs = conv_rhs(line.sigma, line.t, psi, h, width)?;
    let residual = (lhs.value - rhs).norm();
    let b = budget(line.t, psi, h);
    Ok(ConvolutionReport {
        sigma: line.sigma,
        t: line.t,
        psi,
        h: Some(h),
        x: None,
        theta: None,
        lhs: lhs.value,
        rhs,
        residual,
        budget: b,
        empirical_constant: residual / b,
        quadrature_err: lhs.err,
        nodes: lhs.nodes,
        triangle: width,
        heuristic_indicator: heuristic,
    })
}

/// Check the combined identity at centre `x` and angle `theta`.
pub fn conv_combined(
    sigma: f64,
    t: f64,
    x: f64,
    theta: f64,
    tol: f64,
    db: &ZeroDatabase,
    width: TriangleWidth,
) -> Result<ConvolutionReport> {
    let heuristic = require_zero_free(sigma, t, db)?;
    let mut line = ConvolutionLine::new(sigma, t, crate::zeta::DEFAULT_TOL)?;
    combined_on(&mut line, x, theta, tol, width, heuristic)
}

pub fn combined_on(
    line: &mut ConvolutionLine,
    x: f64,
    theta: f64,
    tol: f64,
    width: TriangleWidth,
    heuristic: bool,
) -> Result<ConvolutionReport> {
    let (sigma, t) = (line.sigma, line.t);
    if !(x >= 0.5f64.exp() && x <= t.ln().powi(2)) {
        return Err(Error::Precondition(format!(
            "x = {x} must lie in [e^(1/2), (log t)^2] = [{}, {}]",
            0.5f64.exp(),
            t.ln().powi(2)
        )));
    }
    let lhs = combined_lhs_on(line, x, theta, tol)?;
    let rhs = combined_rhs(sigma, t, x, theta, width)?;
    let residual = (lhs.value - rhs).norm();
    let b = x / t.ln().powi(2);
    Ok(ConvolutionReport {
        sigma,
        t,
        psi: 0.5,
        h: None,
        x: Some(x),
        theta: Some(theta),
        lhs: lhs.value,
        rhs,
        residual,
        budget: b,
        empirical_constant: residual / b,
        quadrature_err: lhs.err,
        nodes: lhs.nodes,
        triangle: width,
        heuristic_indicator: heuristic,
    })
}
