use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use rzl_core::convolution::{self, ConvolutionReport, TriangleWidth};
use rzl_core::moments::{MomentContext, MomentOptions, MomentRegistry};
use rzl_core::numtheory::{prime_windows, PrimeWindows};
use rzl_core::params::{
    budget_from_height, c_sigma, gamma_max, gamma_max_limit, sigma_star, theorem_bound_at, upsilon_shape,
    validate_for_sets, ConfigFile, ParamOverrides, RawParams, TheoremBound,
};
use rzl_core::resonator::ResonatorData;
use rzl_core::search::{compare_to_theorem, SearchGrid, SearchRequest, SearchResult, TheoremComparison};
use rzl_core::sets::{
    low_factor_bound, ratio_l_over_m, tail_ratio_m, LowFactorBound, RWindow, SetDiagnostics, SetFamily, SetOptions,
    DEFAULT_ENUM_CAP,
};
use rzl_core::zeta::{self, LogZetaSample, ZeroDatabase, ZERO_DB_ENV};
use rzl_core::{Error, Params, Result};
use serde::Serialize;

use crate::args::{Command, Grid, Triangle};
use crate::output::{json_bytes, num, CsvTable};

/// Where the zero database came from.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroDbInfo {
    pub source: String,
    pub verified_height: f64,
    pub zeros: usize,
}

/// Everything a command needs besides its own flags.
pub struct Context {
    /// Parameter keys set by a flag or the config file.
    pub explicit: ParamOverrides,
    pub raw: RawParams,
    pub config: ConfigFile,
    pub zero_db_flag: Option<PathBuf>,
    pub enum_cap: Option<usize>,
    pub zero_db_info: Option<ZeroDbInfo>,
}

/// Primary output plus files written on the side.
pub struct Artifacts {
    pub primary: Vec<u8>,
    pub side: Vec<(PathBuf, Vec<u8>)>,
}

impl Artifacts {
    fn primary(primary: Vec<u8>) -> Self {
        Artifacts {
            primary,
            side: Vec::new(),
        }
    }
}

fn json<T: Serialize>(value: &T) -> Result<Artifacts> {
    Ok(Artifacts::primary(json_bytes(value)?))
}

/// Flags over config file, config file over `defaults`.
pub fn layer(flags: &ParamOverrides, config: &ParamOverrides) -> ParamOverrides {
    ParamOverrides {
        sigma: flags.sigma.or(config.sigma),
        beta: flags.beta.or(config.beta),
        kappa: flags.kappa.or(config.kappa),
        theta: flags.theta.or(config.theta),
        t_height: flags.t_height.or(config.t_height),
        a: flags.a.or(config.a),
        gamma: flags.gamma.or(config.gamma),
        b: flags.b.or(config.b),
        n_override: flags.n_override.or(config.n_override),
    }
}

impl Context {
    pub fn new(flags: ParamOverrides, config: ConfigFile, zero_db_flag: Option<PathBuf>, enum_cap: Option<usize>) -> Self {
        let explicit = layer(&flags, &config.overrides());
        let raw = explicit.apply(RawParams::default());
        Context {
            explicit,
            raw,
            config,
            zero_db_flag,
            enum_cap,
            zero_db_info: None,
        }
    }

    fn params(&self) -> Result<Params> {
        validate_for_sets(&self.raw)
    }

    fn set_options(&self, enumerate: bool, literal_flag: bool) -> SetOptions {
        let literal = literal_flag || self.config.r_window_literal.unwrap_or(false);
        SetOptions {
            enumerate,
            enum_cap: self.enum_cap.or(self.config.enum_cap).unwrap_or(DEFAULT_ENUM_CAP),
            window: if literal { RWindow::Literal } else { RWindow::Lattice },
        }
    }

    fn tol(&self, flag: Option<f64>, default: f64) -> f64 {
        flag.or(self.config.tol).unwrap_or(default)
    }

    /// Flag, then config file, then `RZL_ZERO_DB`, then the bundled list.
    fn zero_db(&mut self) -> Result<ZeroDatabase> {
        let from_file = |p: &Path, how: &str| -> Result<(ZeroDatabase, String)> {
            Ok((ZeroDatabase::load(p)?, format!("{how}:{}", p.display())))
        };
        let (db, source) = if let Some(p) = &self.zero_db_flag {
            from_file(p, "flag")?
        } else if let Some(p) = &self.config.zero_db {
            from_file(Path::new(p), "config")?
        } else if let Some(db) = ZeroDatabase::from_env()? {
            let p = std::env::var(ZERO_DB_ENV).unwrap_or_default();
            (db, format!("env:{p}"))
        } else {
            (ZeroDatabase::bundled(), "bundled".to_string())
        };
        self.zero_db_info = Some(ZeroDbInfo {
            source,
            verified_height: db.verified_height,
            zeros: db.ordinates.len() + db.off_line.len(),
        });
        Ok(db)
    }
}

pub fn run(cmd: &Command, ctx: &mut Context) -> Result<Artifacts> {
    match cmd {
        Command::Windows => windows(ctx),
        Command::Sets { enumerate } => sets(ctx, *enumerate),
        Command::Resonator { t_grid, literal_window } => resonator(ctx, t_grid, *literal_window),
        Command::Zeta { t, grid, log, tol } => zeta_cmd(ctx, *t, grid.as_ref(), *log, *tol),
        Command::VerifyConvolution {
            t,
            psi,
            shift,
            x,
            sweep_t,
            triangle,
            tol,
        } => verify(ctx, *t, *psi, *shift, *x, sweep_t.as_ref(), *triangle, *tol),
        Command::Moments {
            mode,
            thetas,
            quad_step,
            cost_limit,
            literal_window,
        } => moments(ctx, mode, thetas.as_deref(), *quad_step, *cost_limit, *literal_window),
        Command::Search {
            grid_n,
            sweep,
            thetas,
            csv,
        } => search(ctx, *grid_n, sweep.as_deref(), thetas.as_deref(), csv.as_deref()),
        Command::Bounds => bounds(ctx),
        Command::Ratios { budgets } => ratios(ctx, budgets),
    }
}

fn windows(ctx: &Context) -> Result<Artifacts> {
    let n = match ctx.raw.n_override {
        Some(n) => n,
        None => budget_from_height(ctx.raw.t_height, ctx.raw.kappa),
    };
    json(&prime_windows(n)?)
}

#[derive(Serialize)]
struct SetsReport {
    params: Params,
    windows: PrimeWindows,
    n_primes: usize,
    k_max: f64,
    k_min: f64,
    prime_weight: f64,
    diagnostics: SetDiagnostics,
    mass_m: f64,
    mass_l: f64,
    mass_m_enumerated: Option<f64>,
    tail_ratio_m: f64,
    ratio_l_over_m: Option<f64>,
    low_factor_bound: Option<LowFactorBound>,
    table_checksum: String,
}

fn sets(ctx: &Context, enumerate: bool) -> Result<Artifacts> {
    let params = ctx.params()?;
    let fam = SetFamily::build(&params, ctx.set_options(enumerate, false))?;
    let (ratio, bound) = if params.gamma < gamma_max(params.sigma, params.b)? {
        (Some(ratio_l_over_m(&params)?), Some(low_factor_bound(&params)?))
    } else {
        (None, None)
    };
    json(&SetsReport {
        n_primes: fam.primes().len(),
        k_max: fam.k_max,
        k_min: fam.k_min,
        prime_weight: fam.prime_weight,
        diagnostics: fam.diagnostics(),
        mass_m: fam.mass_m(),
        mass_l: fam.mass_l(),
        mass_m_enumerated: fam.mass_m_enumerated(),
        tail_ratio_m: tail_ratio_m(&params)?,
        ratio_l_over_m: ratio,
        low_factor_bound: bound,
        table_checksum: format!("{:016x}", fam.table.checksum()),
        windows: fam.windows,
        params,
    })
}

fn resonator(ctx: &Context, grid: &Grid, literal: bool) -> Result<Artifacts> {
    let params = ctx.params()?;
    let fam = SetFamily::build(&params, ctx.set_options(true, literal))?;
    let data = ResonatorData::from_family(&fam)?;
    let values = data.values_on_grid(grid.lo, grid.step(), grid.n);
    let mut table = CsvTable::new(&["t", "re", "im", "abs2"])?;
    for (t, r) in grid.points().into_iter().zip(values) {
        table.row([num(Some(t)), num(Some(r.re)), num(Some(r.im)), num(Some(r.norm_sqr()))])?;
    }
    Ok(Artifacts::primary(table.into_bytes()?))
}

#[derive(Serialize)]
struct ZetaValue {
    sigma: f64,
    t: f64,
    zeta: Complex64,
    err_est: f64,
}

fn zeta_cmd(ctx: &Context, t: Option<f64>, grid: Option<&Grid>, log: bool, tol: Option<f64>) -> Result<Artifacts> {
    let sigma = ctx.raw.sigma;
    let tol = ctx.tol(tol, zeta::DEFAULT_TOL);
    if let Some(g) = grid {
        let ts = g.points();
        let values: Vec<Result<(Complex64, f64)>> = ts.par_iter().map(|&t| zeta::zeta_em(sigma, t, tol)).collect();
        let mut header = vec!["t", "re", "im", "err_est"];
        let logs = if log {
            header.extend(["log_re", "log_im"]);
            Some(zeta::log_zeta_vertical(sigma, &ts, tol))
        } else {
            None
        };
        let mut table = CsvTable::new(&header)?;
        for (i, (&t, v)) in ts.iter().zip(values).enumerate() {
            let (z, err) = v?;
            let mut row = vec![num(Some(t)), num(Some(z.re)), num(Some(z.im)), num(Some(err))];
            if let Some(l) = &logs {
                let w = l[i].as_ref().ok();
                row.push(num(w.map(|w| w.re)));
                row.push(num(w.map(|w| w.im)));
            }
            table.row(row)?;
        }
        return Ok(Artifacts::primary(table.into_bytes()?));
    }
    let t = t.ok_or_else(|| Error::Precondition("zeta needs --t or --grid".into()))?;
    if log {
        let sample: LogZetaSample = zeta::log_zeta(sigma, t, tol)?;
        json(&sample)
    } else {
        let (z, err_est) = zeta::zeta_em(sigma, t, tol)?;
        json(&ZetaValue {
            sigma,
            t,
            zeta: z,
            err_est,
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn verify(
    ctx: &mut Context,
    t: Option<f64>,
    psi: f64,
    shift: f64,
    x: Option<f64>,
    sweep: Option<&Grid>,
    triangle: Triangle,
    tol: Option<f64>,
) -> Result<Artifacts> {
    let db = ctx.zero_db()?;
    let sigma = ctx.raw.sigma;
    let theta = ctx.raw.theta;
    let tol = ctx.tol(tol, 1e-8);
    let width = match triangle {
        Triangle::Transform => TriangleWidth::Transform,
        Triangle::Displayed => TriangleWidth::Displayed,
    };
    let one = |t: f64| -> Result<ConvolutionReport> {
        match x {
            Some(x) => convolution::conv_combined(sigma, t, x, theta, tol, &db, width),
            None => convolution::verify_convolution(sigma, t, psi, shift, tol, &db, width),
        }
    };
    let Some(grid) = sweep else {
        let t = t.ok_or_else(|| Error::Precondition("verify-convolution needs --t or --sweep-t".into()))?;
        return json(&one(t)?);
    };
    let ts = grid.points();
    let reports: Vec<Result<ConvolutionReport>> = ts.par_iter().map(|&t| one(t)).collect();
    let mut table = CsvTable::new(&[
        "t",
        "status",
        "residual",
        "budget",
        "empirical_constant",
        "quadrature_err",
        "heuristic_indicator",
    ])?;
    for (&t, rep) in ts.iter().zip(reports) {
        match rep {
            Ok(r) => table.row([
                num(Some(t)),
                "ok".into(),
                num(Some(r.residual)),
                num(Some(r.budget)),
                num(Some(r.empirical_constant)),
                num(Some(r.quadrature_err)),
                r.heuristic_indicator.to_string(),
            ])?,
            Err(e) if e.is_refusal() => table.row([
                num(Some(t)),
                "refused".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ])?,
            Err(e) => return Err(e),
        }
    }
    Ok(Artifacts::primary(table.into_bytes()?))
}

fn moments(
    ctx: &mut Context,
    mode: &str,
    thetas: Option<&[f64]>,
    quad_step: Option<f64>,
    cost_limit: Option<f64>,
    literal: bool,
) -> Result<Artifacts> {
    let registry = MomentRegistry::default();
    let strategy = registry.get(mode)?;
    let params = ctx.params()?;
    let family = SetFamily::build(&params, ctx.set_options(true, literal))?;
    let data = ResonatorData::from_family(&family)?;
    let zero_db = ctx.zero_db()?;
    let defaults = MomentOptions::default();
    let options = MomentOptions {
        quad_step: quad_step.or(ctx.config.quad_step).unwrap_or(defaults.quad_step),
        zeta_tol: ctx.config.tol.unwrap_or(defaults.zeta_tol),
        cost_limit: cost_limit.unwrap_or(defaults.cost_limit),
    };
    let mc = MomentContext {
        params: &params,
        family: &family,
        data: &data,
        zero_db: &zero_db,
        options,
    };
    match thetas {
        Some(list) => json(&strategy.compute_many(&mc, list)?),
        None => json(&strategy.compute(&mc)?),
    }
}

#[derive(Serialize)]
struct LadderRung {
    result: SearchResult,
    comparison: TheoremComparison,
}

fn search(
    ctx: &mut Context,
    grid_n: u64,
    heights: Option<&[f64]>,
    thetas: Option<&[f64]>,
    csv: Option<&Path>,
) -> Result<Artifacts> {
    let db = ctx.zero_db()?;
    let raw = ctx.raw;
    let mut request = SearchRequest::new(raw.sigma, raw.beta, raw.t_height, grid_n as usize);
    request.kappa = ctx.explicit.kappa;
    request.zeta_tol = ctx.config.tol.unwrap_or(request.zeta_tol);
    let ladder = heights.is_some();
    let heights: Vec<f64> = heights.map(<[f64]>::to_vec).unwrap_or_else(|| vec![raw.t_height]);
    let mut table = CsvTable::new(&["T", "t", "log_re", "log_im", "objective"])?;
    let mut results = Vec::new();
    for &t_height in &heights {
        let grid = SearchGrid::build(SearchRequest { t_height, ..request }, &db)?;
        if csv.is_some() {
            for (t, w) in grid.ts.iter().zip(&grid.samples) {
                table.row([
                    num(Some(t_height)),
                    num(Some(*t)),
                    num(w.map(|w| w.re)),
                    num(w.map(|w| w.im)),
                    num(w.map(|w| rzl_core::search::rotate(raw.theta, w))),
                ])?;
            }
        }
        match thetas {
            Some(list) => {
                for &theta in list {
                    results.push(grid.scan(theta)?);
                }
            }
            None => results.push(grid.scan(raw.theta)?),
        }
    }
    let primary = if ladder {
        let kappa = request.bound_kappa();
        let rungs = results
            .into_iter()
            .map(|result| {
                let comparison = compare_to_theorem(&result, kappa)?;
                Ok(LadderRung { result, comparison })
            })
            .collect::<Result<Vec<_>>>()?;
        json_bytes(&rungs)?
    } else if thetas.is_some() {
        json_bytes(&results)?
    } else {
        json_bytes(&results[0])?
    };
    let mut out = Artifacts::primary(primary);
    if let Some(p) = csv {
        out.side.push((p.to_path_buf(), table.into_bytes()?));
    }
    Ok(out)
}

#[derive(Serialize)]
struct BoundsReport {
    sigma: f64,
    kappa: f64,
    #[serde(rename = "T")]
    t_height: f64,
    b: f64,
    sigma_star: f64,
    c_sigma: f64,
    gamma_max: f64,
    gamma_max_limit: f64,
    upsilon_shape: f64,
    theorem_bound: TheoremBound,
}

fn bounds(ctx: &Context) -> Result<Artifacts> {
    let RawParams {
        sigma,
        kappa,
        t_height,
        b,
        ..
    } = ctx.raw;
    json(&BoundsReport {
        sigma,
        kappa,
        t_height,
        b,
        sigma_star: sigma_star(),
        c_sigma: c_sigma(sigma)?,
        gamma_max: gamma_max(sigma, b)?,
        gamma_max_limit: gamma_max_limit(sigma)?,
        upsilon_shape: upsilon_shape(sigma)?,
        theorem_bound: theorem_bound_at(sigma, kappa, t_height)?,
    })
}

#[derive(Serialize)]
struct RatioRow {
    #[serde(rename = "N")]
    n_budget: u64,
    n_primes: usize,
    k_max: f64,
    k_min: f64,
    tail_ratio_m: f64,
    ratio_l_over_m: f64,
    deficit: f64,
    low_factor_bound: LowFactorBound,
}

fn ratios(ctx: &Context, budgets: &[u64]) -> Result<Artifacts> {
    let rows = budgets
        .iter()
        .map(|&n| {
            let params = validate_for_sets(&RawParams {
                n_override: Some(n),
                ..ctx.raw
            })?;
            let ratio = ratio_l_over_m(&params)?;
            Ok(RatioRow {
                n_budget: n,
                n_primes: prime_windows(n)?.p.len(),
                k_max: params.k_max,
                k_min: params.k_min,
                tail_ratio_m: tail_ratio_m(&params)?,
                ratio_l_over_m: ratio,
                deficit: 1.0 - ratio,
                low_factor_bound: low_factor_bound(&params)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    json(&rows)
}
