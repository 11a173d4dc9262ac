//! The fourteen acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines always reach stdout; the
//! process exits with status 1 if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rzl_core::convolution::{combined_lhs_on, conv_lhs_on, verify_on, ConvolutionLine, Kernel, TriangleWidth};
use rzl_core::moments::{
    gaussian_resonance_integral, factor_count_lower, triple_sum_lower, phi, phi_hat_quadrature, MomentOptions, QuadGrid,
};
use rzl_core::numtheory::prime_windows;
use rzl_core::params::{sigma_star, validate_for_sets, RawParams};
use rzl_core::quad::{fejer_line_integral, fejer_transform, Cosine};
use rzl_core::resonator::{check_r_bound, ResonatorData};
use rzl_core::search::{min_modulus_scan, rotate, SearchGrid, SearchRequest};
use rzl_core::sets::{enumerate_squarefree, low_factor_bound, ratio_l_over_m, symmetric_sums, SetFamily, SetOptions};
use rzl_core::zeta::{log_zeta, zeta_em, ZeroDatabase};
use rzl_core::Params;

/// Zero list certified empty off the line up to the published verification height.
fn verified_db() -> ZeroDatabase {
    ZeroDatabase::empty_verified(3e12)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn params(raw: RawParams) -> Params {
    validate_for_sets(&raw).expect("acceptance parameters are valid")
}

fn sigma_star_threshold() -> Outcome {
    let s = sigma_star();
    let err = (s - 0.880766).abs();
    outcome(err < 1e-5, format!("sigma* = {s:.9}, |sigma* - 0.880766| = {err:.2e} (tol 1e-5)"))
}

fn fourier_identity() -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..=2000 {
        let y = -10.0 + k as f64 * 0.01;
        worst = worst.max((phi_hat_quadrature(y) - (2.0 * PI).sqrt() * phi(y)).abs());
    }
    outcome(worst < 1e-8, format!("max |Phi_hat - sqrt(2 pi) Phi| on 2001 points of [-10, 10] = {worst:.2e} (tol 1e-8)"))
}

fn kernel_mass() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_mass = 0.0f64;
    for _ in 0..5 {
        let theta = rng.random_range(-PI..PI);
        let n = rng.random_range(16u64..1_000_000);
        let k = Kernel::for_budget(theta, n).unwrap();
        worst_mass = worst_mass.max((k.mass() - 1.5 * PI).abs());
    }
    let mut worst_tri = 0.0f64;
    for lam in [0.0, 0.5, 1.0, 2.0] {
        let v = fejer_line_integral(&[Cosine {
            amp: 1.0,
            freq: lam,
            phase: 0.0,
        }]);
        worst_tri = worst_tri.max((v - fejer_transform(lam)).abs());
    }
    outcome(
        worst_mass < 1e-6 && worst_tri < 1e-6,
        format!("max |int K - 3 pi/2| over 5 (theta, N) = {worst_mass:.2e}; max triangle error = {worst_tri:.2e} (tol 1e-6)"),
    )
}

fn gaussian_integral() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for lam in [0.0, 0.01, 0.1] {
        let g = gaussian_resonance_integral(50.0, lam, 0.3).unwrap();
        let gap = (g.quad_value - g.closed_form).abs();
        let allowed = g.head_bound + g.tail_bound;
        pass &= gap <= allowed;
        parts.push(format!("lam={lam}: {gap:.3} <= {allowed:.3}"));
    }
    outcome(pass, format!("T=50, beta=0.3: {}", parts.join("; ")))
}

fn convolution_formula() -> Outcome {
    let db = verified_db();
    let mut pass = true;
    let mut means = Vec::new();
    let mut parts = Vec::new();
    for t in [1e3, 1e4] {
        let heuristic = rzl_core::zeta::indicator(0.8, t, &db).unwrap();
        assert_eq!(heuristic.value, 1);
        let mut line = ConvolutionLine::new(0.8, t, 1e-12).unwrap();
        let mut sum = 0.0;
        for h in [0.0, 100f64.ln()] {
            let r = verify_on(&mut line, 0.5, h, 1e-9, TriangleWidth::Transform, heuristic.heuristic).unwrap();
            pass &= r.residual <= 10.0 * r.budget;
            sum += r.residual;
            parts.push(format!("t={t:.0e} H={h:.2}: {:.2e} <= {:.2e}", r.residual, 10.0 * r.budget));
        }
        means.push(sum / 2.0);
    }
    pass &= means[1] < means[0];
    parts.push(format!("mean {:.2e} -> {:.2e}", means[0], means[1]));
    outcome(pass, format!("sigma=0.8 psi=1/2: {}", parts.join("; ")))
}

fn combined_formula() -> Outcome {
    let w = prime_windows(1000).unwrap();
    let mut line = ConvolutionLine::new(0.8, 1e3, 1e-12).unwrap();
    let tol = 1e-10;
    let mut worst = 0.0f64;
    for x in w.kernel_centres() {
        let lx = x.ln();
        let minus = conv_lhs_on(&mut line, 0.5, -lx, tol).unwrap().value;
        let zero = conv_lhs_on(&mut line, 0.5, 0.0, tol).unwrap().value;
        let plus = conv_lhs_on(&mut line, 0.5, lx, tol).unwrap().value;
        for theta in [0.0, 1.0, PI] {
            let comb = combined_lhs_on(&mut line, x, theta, tol).unwrap().value;
            let sum = minus * Complex64::from_polar(0.5, -theta) + zero + plus * Complex64::from_polar(0.5, theta);
            worst = worst.max((comb - sum).norm());
        }
    }
    outcome(worst < 1e-7, format!("max |combined - weighted sum| over 3 centres x 3 angles = {worst:.2e} (tol 1e-7)"))
}

/// Exhaustive `sum_{m,v} sum_p r(m) r(v) p^-sigma Phi(T log(mp/v))`.
fn triple_oracle(data: &ResonatorData, primes: &[u64], sigma: f64, t: f64) -> f64 {
    let mut acc = 0.0;
    for (lm, rm) in data.log_m.iter().zip(&data.r) {
        for (lv, rv) in data.log_m.iter().zip(&data.r) {
            for &p in primes {
                acc += rm * rv * (p as f64).powf(-sigma) * phi(t * (lm + (p as f64).ln() - lv));
            }
        }
    }
    acc
}

/// Exhaustive `sum_v f(v)^2 sum_{p | v} 1/(f(p) p^sigma)` on integer values.
fn divisor_oracle(fam: &SetFamily, sigma: f64) -> f64 {
    let f_p = fam.prime_weight.sqrt();
    let mut acc = 0.0;
    for v in fam.m_enum.as_ref().unwrap() {
        let value = v.value(fam.primes()).unwrap();
        let omega = fam.primes().iter().filter(|&&p| value % p as u128 == 0).count();
        let f2 = f_p.powi(2 * omega as i32);
        for &p in fam.primes() {
            if value % p as u128 == 0 {
                acc += f2 / (f_p * (p as f64).powf(sigma));
            }
        }
    }
    acc
}

fn triple_sum_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut done = 0;
    let mut worst_rel = 0.0f64;
    let mut pass = true;
    let mut min_margin = f64::INFINITY;
    while done < 20 {
        let n = rng.random_range(16u64..=50);
        let sigma = rng.random_range(0.52..0.62);
        let log_gap = (2.0f64 * sigma - 1.0).ln().abs();
        let top = 3.0 * log_gap / (n as f64).ln();
        if top <= 1.0 + 1e-3 {
            continue;
        }
        let a = rng.random_range(1.0 + 1e-4..top);
        let t = 10f64.powf(rng.random_range(2.0..4.0));
        let p = params(RawParams {
            sigma,
            a,
            gamma: rng.random_range(0.1..0.9),
            beta: 0.5,
            kappa: 0.01,
            t_height: t,
            n_override: Some(n),
            ..RawParams::default()
        });
        let fam = SetFamily::build(&p, SetOptions::default()).unwrap();
        assert!(fam.primes().len() <= 6 && p.k_max <= 3.0);
        let data = ResonatorData::from_family(&fam).unwrap();
        let b = triple_sum_lower(&data, &fam, &p).unwrap();
        let lhs_oracle = triple_oracle(&data, fam.primes(), sigma, t);
        let rhs_oracle = divisor_oracle(&fam, sigma);
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1e-300);
        worst_rel = worst_rel.max(rel(b.lhs, lhs_oracle)).max(rel(b.rhs, rhs_oracle));
        pass &= b.holds;
        min_margin = min_margin.min(b.lhs / b.rhs - 1.0);
        done += 1;
    }
    pass &= worst_rel < 1e-10;
    outcome(
        pass,
        format!("20 instances: lhs >= rhs (rel slack 1e-12), min lhs/rhs - 1 = {min_margin:.2e}; max oracle rel dev = {worst_rel:.2e} (tol 1e-10)"),
    )
}

fn factor_count_bound() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for sigma in [0.6, 0.75] {
        let p = params(RawParams {
            sigma,
            gamma: 0.5,
            kappa: 0.05,
            n_override: Some(10_000),
            ..RawParams::default()
        });
        let fam = SetFamily::build(&p, SetOptions::default()).unwrap();
        let b = factor_count_lower(&fam, &p).unwrap();
        pass &= b.holds;
        parts.push(format!(
            "sigma={sigma}: |M|={} lhs={:.4e} rhs={:.4e}",
            fam.m_enum.as_ref().unwrap().len(),
            b.lhs,
            b.rhs
        ));
    }
    outcome(pass, format!("N=1e4 gamma=0.5 by enumeration: {}", parts.join("; ")))
}

fn resonator_bound() -> Outcome {
    let p = params(RawParams {
        sigma: 0.55,
        kappa: 0.04,
        a: 1.1,
        t_height: 1e4,
        n_override: Some(1000),
        ..RawParams::default()
    });
    let fam = SetFamily::build(&p, SetOptions::default()).unwrap();
    let data = ResonatorData::from_family(&fam).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let reach = p.t_height * p.t_height.ln();
    let ts: Vec<f64> = (0..999).map(|_| rng.random_range(-reach..reach)).collect();
    let r = check_r_bound(&data, &ts, &p);
    outcome(
        r.all_hold() && r.samples >= 1000,
        format!(
            "{} samples incl. t=0: max |R|^2 = {:.4e} <= {:.4e}; R(0)^2 {:.4e} <= {:.4e}; sum r^2 {:.4e} <= {:.4e}",
            r.samples, r.max_power, r.bound, r.r0_squared, r.cauchy_schwarz_rhs, r.sum_r2, r.overlap_rhs
        ),
    )
}

fn dp_enumeration() -> Outcome {
    let all_primes: Vec<u64> = rzl_core::numtheory::sieve_primes(1.0, 200.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    let mut count = 0;
    for size in 1..=14usize {
        for k in 0..=4usize {
            let start = rng.random_range(0..all_primes.len() - size);
            let primes = &all_primes[start..start + size];
            let w = rng.random_range(0.1..5.0);
            let e = symmetric_sums(&vec![w; size], size).unwrap();
            let dp: f64 = e[..=k.min(size)].iter().sum();
            let elems = enumerate_squarefree(primes, k as f64, 1 << 20).unwrap();
            let en: f64 = elems.iter().map(|v| v.weight(w)).sum();
            worst = worst.max((dp - en).abs() / en);
            count += 1;
        }
    }
    for n in [16u64, 30, 50, 100, 300, 1000] {
        for sigma in [0.55, 0.7, 0.85, 0.95] {
            let log_gap = (2.0f64 * sigma - 1.0).ln().abs();
            let a = (4.0 * log_gap / (n as f64).ln()).max(1.01);
            let p = params(RawParams {
                sigma,
                a,
                kappa: 0.01,
                n_override: Some(n),
                ..RawParams::default()
            });
            if prime_windows(n).unwrap().p.len() > 14 || p.k_max > 4.0 {
                continue;
            }
            let fam = SetFamily::build(&p, SetOptions::default()).unwrap();
            let en = fam.mass_m_enumerated().unwrap();
            worst = worst.max((fam.mass_m() - en).abs() / en);
            count += 1;
        }
    }
    outcome(worst < 1e-12, format!("{count} instances with |P| <= 14, k_max <= 4: max rel dev = {worst:.2e} (tol 1e-12)"))
}

fn low_factor_trend() -> Outcome {
    let mut pass = true;
    let mut prev = f64::INFINITY;
    let mut parts = Vec::new();
    for n in [1_000u64, 10_000, 100_000, 1_000_000] {
        let p = params(RawParams {
            sigma: 0.6,
            a: 1.5,
            gamma: 0.5,
            kappa: 0.05,
            n_override: Some(n),
            ..RawParams::default()
        });
        let deficit = 1.0 - ratio_l_over_m(&p).unwrap();
        let mass_bound = low_factor_bound(&p).unwrap();
        pass &= deficit < prev && mass_bound.holds;
        prev = deficit;
        parts.push(format!("N={n:.0e}: deficit {deficit:.4e}, mass bound {}", if mass_bound.holds { "ok" } else { "FAILS" }));
    }
    outcome(pass, parts.join("; "))
}

fn zeta_evaluator() -> Outcome {
    let (z2, _) = zeta_em(2.0, 0.0, 1e-13).unwrap();
    let e2 = (z2.re - PI * PI / 6.0).abs() + z2.im.abs();
    let (z0, _) = zeta_em(0.5, 14.134725, 1e-12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let s = rng.random_range(0.55..0.95);
        let t = rng.random_range(15.0..1e4);
        let (z, err) = zeta_em(s, t, 1e-12).unwrap();
        let l = log_zeta(s, t, 1e-12).unwrap();
        worst = worst.max((l.value.exp() - z).norm() / (2.0 * err));
    }
    outcome(
        e2 < 1e-12 && z0.norm() < 1e-4 && worst <= 1.0,
        format!(
            "|zeta(2) - pi^2/6| = {e2:.1e}; |zeta(1/2 + 14.134725i)| = {:.2e}; max |exp(log zeta) - zeta|/(2 err) = {worst:.2e} on 1000 points",
            z0.norm()
        ),
    )
}

fn search_sanity() -> Outcome {
    let db = verified_db();
    let mut pass = true;
    let mut parts = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    let mut rotation = 0.0f64;
    let mut min_modulus_dev = 0.0f64;
    for (t, grid_n) in [(1e3, 20_000usize), (1e4, 50_000), (1e5, 100_000)] {
        let req = SearchRequest::new(0.6, 0.36, t, grid_n);
        let grid = SearchGrid::build(req, &db).unwrap();
        let r = grid.scan(0.0).unwrap();
        pass &= r.value >= prev;
        prev = r.value;
        parts.push(format!("T={t:.0e}: max log|zeta| {:.4}", r.value));
        for th in [0.0, 0.5 * PI, PI, 1.5 * PI, 2.0] {
            for w in grid.samples.iter().flatten() {
                let direct = (Complex64::from_polar(1.0, -th) * w).re;
                rotation = rotation.max((rotate(th, *w) - direct).abs());
            }
        }
        let c = min_modulus_scan(req, &db).unwrap();
        let pi_scan = grid.scan(PI).unwrap();
        pass &= c.result == pi_scan;
        let min_grid = grid
            .samples
            .iter()
            .flatten()
            .map(|w| w.re)
            .fold(f64::INFINITY, f64::min);
        pass &= c.result.value >= -min_grid;
        let at_star = zeta_em(0.6, c.result.t_star, 1e-12).unwrap().0.norm();
        min_modulus_dev = min_modulus_dev.max((at_star - c.min_modulus).abs());
    }
    pass &= rotation < 1e-12 && min_modulus_dev < 1e-10;
    parts.push(format!("rotation dev {rotation:.1e} (tol 1e-12); |zeta(t*)| vs exp(-value) {min_modulus_dev:.1e} (tol 1e-10)"));
    outcome(pass, format!("sigma=0.6 beta=0.36: {}", parts.join("; ")))
}

fn resonance_inequality() -> Outcome {
    let p = params(RawParams {
        sigma: 0.8,
        beta: 0.36,
        kappa: 0.25,
        t_height: 1e3,
        n_override: Some(16),
        ..RawParams::default()
    });
    let fam = SetFamily::build(&p, SetOptions::default()).unwrap();
    let data = ResonatorData::from_family(&fam).unwrap();
    let grid = QuadGrid::build(&p, &data, &verified_db(), &MomentOptions::default()).unwrap();
    let (lo, hi) = grid.range();
    let mut pass = true;
    let mut parts = Vec::new();
    for th in [0.0, 0.5 * PI, PI] {
        let q = grid.evaluate(th).unwrap();
        let ratio = q.m2.re / q.m1;
        let (_, max) = grid.max_on(th, lo, hi).unwrap();
        pass &= ratio <= max;
        parts.push(format!("theta={th:.3}: {ratio:.4} <= {max:.4}"));
    }
    outcome(
        pass,
        format!("T=1e3 sigma=0.8 N=16, {} outer nodes: {}", grid.outer_points(), parts.join("; ")),
    )
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 14] = [
        ("sigma-star threshold", Duration::from_secs(1), sigma_star_threshold),
        ("Fourier identity", Duration::from_secs(1), fourier_identity),
        ("kernel mass", Duration::from_secs(5), kernel_mass),
        ("Gaussian resonance integral", Duration::from_secs(5), gaussian_integral),
        ("convolution formula", Duration::from_secs(300), convolution_formula),
        ("combined formula", Duration::from_secs(120), combined_formula),
        ("triple-sum lower bound", Duration::from_secs(60), triple_sum_bound),
        ("factor-count lower bound", Duration::from_secs(60), factor_count_bound),
        ("resonator size bound", Duration::from_secs(60), resonator_bound),
        ("DP / enumeration equivalence", Duration::from_secs(10), dp_enumeration),
        ("low-factor mass trend", Duration::from_secs(10), low_factor_trend),
        ("zeta evaluator", Duration::from_secs(120), zeta_evaluator),
        ("search sanity", Duration::from_secs(600), search_sanity),
        ("resonance inequality", Duration::from_secs(900), resonance_inequality),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let pass = out.pass && took <= *budget;
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] {:02} {name}: {} [{:.2}s of {}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
