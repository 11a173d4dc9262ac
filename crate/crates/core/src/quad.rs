//! Quadrature rules: Gauss-Legendre panels, adaptive Gauss-Kronrod and the
//! Fejer-weighted line integral used by the kernel checks.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sum::{ComplexNeumaier, Neumaier};

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` started from the Tricomi approximation.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Physical nodes and weights on `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (c + h * x, h * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).collect::<Neumaier>().value()
    }

    pub fn integrate_complex<F: Fn(f64) -> Complex64>(&self, a: f64, b: f64, f: F) -> Complex64 {
        let mut acc = ComplexNeumaier::default();
        for (x, w) in self.on(a, b) {
            acc.add(f(x) * w);
        }
        acc.value()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The shared 16-point rule used for composite panels.
pub fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// Composite 16-point Gauss-Legendre with panels no wider than `max_width`.
pub fn composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, max_width: f64) -> f64 {
    let n = panel_count(a, b, max_width);
    let h = (b - a) / n as f64;
    let rule = gl16();
    (0..n)
        .map(|k| {
            let lo = a + k as f64 * h;
            rule.integrate(lo, lo + h, &f)
        })
        .collect::<Neumaier>()
        .value()
}

pub fn composite_complex<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, max_width: f64) -> Complex64 {
    let n = panel_count(a, b, max_width);
    let h = (b - a) / n as f64;
    let rule = gl16();
    let mut acc = ComplexNeumaier::default();
    for k in 0..n {
        let lo = a + k as f64 * h;
        acc.add(rule.integrate_complex(lo, lo + h, &f));
    }
    acc.value()
}

fn panel_count(a: f64, b: f64, max_width: f64) -> usize {
    let n = ((b - a).abs() / max_width).ceil();
    (n as usize).max(1)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One G7/K15 panel: Kronrod value and `|K15 - G7|`.
fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: Complex64,
    pub err: f64,
    pub panels: usize,
}

/// Adaptive Gauss-Kronrod with absolute tolerance `tol`.
///
/// `initial` panels are laid out first (one per oscillation period is a good
/// choice); panels are bisected until their error estimates sum below `tol`.
pub fn adaptive_gk<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    initial: usize,
    tol: f64,
) -> Result<Integral> {
    const MAX_PANELS: usize = 200_000;
    let n0 = initial.max(1);
    let h = (b - a) / n0 as f64;
    let mut panels: Vec<(f64, f64, Complex64, f64)> = (0..n0)
        .map(|k| {
            let lo = a + k as f64 * h;
            let hi = if k + 1 == n0 { b } else { lo + h };
            let (v, e) = gk15(&f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();
    loop {
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= tol || panels.len() >= MAX_PANELS {
            // fixed left-to-right summation order
            panels.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut acc = ComplexNeumaier::default();
            for p in &panels {
                acc.add(p.2);
            }
            if err > tol {
                return Err(Error::Quadrature { err, tol });
            }
            return Ok(Integral {
                value: acc.value(),
                err,
                panels: panels.len(),
            });
        }
        // bisect every panel above the average share
        let share = tol / panels.len() as f64;
        let mut next = Vec::with_capacity(panels.len() * 2);
        let mut split_any = false;
        for p in panels {
            if p.3 > share && p.1 - p.0 > 1e-12 * (b - a).abs() {
                let m = 0.5 * (p.0 + p.1);
                let (v1, e1) = gk15(&f, p.0, m);
                let (v2, e2) = gk15(&f, m, p.1);
                next.push((p.0, m, v1, e1));
                next.push((m, p.1, v2, e2));
                split_any = true;
            } else {
                next.push(p);
            }
        }
        panels = next;
        if !split_any {
            let err: f64 = panels.iter().map(|p| p.3).sum();
            return Err(Error::Quadrature { err, tol });
        }
    }
}

/// Real-valued convenience wrapper around [`adaptive_gk`].
pub fn adaptive_gk_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, initial: usize, tol: f64) -> Result<(f64, f64)> {
    let r = adaptive_gk(|x| Complex64::new(f(x), 0.0), a, b, initial, tol)?;
    Ok((r.value.re, r.err))
}

/// `(sin(u/2)/u)^2` with its limit `1/4` at the origin.
pub fn fejer_factor(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        0.25 - u * u / 48.0
    } else {
        let s = (0.5 * u).sin() / u;
        s * s
    }
}

/// A cosine component `amp * cos(freq * u + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cosine {
    pub amp: f64,
    pub freq: f64,
    pub phase: f64,
}

/// Cut-off for the numerical part of a line integral.
const LINE_CUTOFF: f64 = 2000.0;

/// `Si(x) = int_0^x sin(v)/v dv`.
fn sine_integral(x: f64) -> f64 {
    let sinc = |v: f64| if v.abs() < 1e-8 { 1.0 - v * v / 6.0 } else { v.sin() / v };
    composite(sinc, 0.0, x, 1.0)
}

/// `int_U^inf cos(w u)/u^2 du` for `w >= 0`.
fn cos_over_square_tail(w: f64, cutoff: f64) -> f64 {
    if w == 0.0 {
        1.0 / cutoff
    } else if w * cutoff < 40.0 {
        tail_by_parts(w, cutoff)
    } else {
        tail_asymptotic(w, cutoff)
    }
}

/// One integration by parts: `cos(wU)/U - w (pi/2 - Si(wU))`.
fn tail_by_parts(w: f64, cutoff: f64) -> f64 {
    let x = w * cutoff;
    x.cos() / cutoff - w * (0.5 * PI - sine_integral(x))
}

/// Asymptotic series of `int_U^inf e^{iwu} u^-2 du`, real part.
fn tail_asymptotic(w: f64, cutoff: f64) -> f64 {
    let iw = Complex64::new(0.0, w);
    let mut term = Complex64::new(1.0, 0.0) / (iw * cutoff * cutoff);
    let mut acc = term;
    for j in 1..12 {
        term = term * (j as f64 + 1.0) / (iw * cutoff);
        acc += term;
        if term.norm() < 1e-18 {
            break;
        }
    }
    (-Complex64::from_polar(1.0, w * cutoff) * acc).re
}

/// `int_R (sin(u/2)/u)^2 sum_j amp_j cos(freq_j u + phase_j) du`.
///
/// The integrand is integrated with Gauss-Legendre panels on `[-U, U]`; the
/// two tails are added in closed form after writing `sin^2(u/2) = (1 - cos u)/2`.
pub fn fejer_line_integral(terms: &[Cosine]) -> f64 {
    let u = LINE_CUTOFF;
    let max_freq = terms.iter().map(|c| c.freq.abs()).fold(1.0, f64::max);
    let width = (2.0 * PI / (max_freq + 1.0)).min(1.0);
    let g = |x: f64| {
        let k = fejer_factor(x);
        k * terms
            .iter()
            .map(|c| c.amp * (c.freq * x + c.phase).cos())
            .sum::<f64>()
    };
    let body = composite(g, -u, u, width);
    let mut tail = Neumaier::new();
    for c in terms {
        // (1 - cos x)/(2x^2) cos(wx + p) = cos(wx+p)/(2x^2) - [cos((w+1)x+p) + cos((w-1)x+p)]/(4x^2)
        let sym = 2.0 * c.phase.cos();
        tail.add(c.amp * sym * 0.5 * cos_over_square_tail(c.freq.abs(), u));
        tail.add(-c.amp * sym * 0.25 * cos_over_square_tail((c.freq + 1.0).abs(), u));
        tail.add(-c.amp * sym * 0.25 * cos_over_square_tail((c.freq - 1.0).abs(), u));
    }
    body + tail.value()
}

/// `int_{-L}^{L} (sin(u/2)/u)^2 sum_j amp_j cos(freq_j u + phase_j) du` in
/// closed form: the full-line value minus the two tails beyond `L`.
pub fn fejer_window_integral(terms: &[Cosine], half_width: f64) -> f64 {
    let l = half_width;
    let mut acc = Neumaier::new();
    for c in terms {
        let w = c.freq.abs();
        let tail = 0.5 * cos_over_square_tail(w, l)
            - 0.25 * cos_over_square_tail(w + 1.0, l)
            - 0.25 * cos_over_square_tail((w - 1.0).abs(), l);
        acc.add(c.amp * c.phase.cos() * (fejer_transform(w) - 2.0 * tail));
    }
    acc.value()
}

/// Closed form `int_R (sin(u/2)/u)^2 e^{i u lam} du = (pi/2) max(0, 1 - |lam|)`.
pub fn fejer_transform(lam: f64) -> f64 {
    0.5 * PI * (1.0 - lam.abs()).max(0.0)
}
