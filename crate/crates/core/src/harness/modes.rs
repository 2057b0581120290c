use std::collections::{BTreeMap, BTreeSet};

use super::config::{ExperimentConfig, Tolerances};
use super::rows::{fit_constant, ComparisonRow, ConstantFit, Regime, RegimeGates, Statistic};
use super::Invariant;
use crate::asymptotics::{
    bound_large_dev, fit_slowly_varying, limit_law, predict_green, predict_normal_dev, predict_small_dev,
    AsymptoticContext, RenewalSource, RenewalSurrogate, SmoothedMeander, SvFit,
};
use crate::error::{Error, Result};
use crate::lattice::{
    green_exact_in_box, ladder_data, Backend, EvolveOpts, Evolver, KillRule, KilledField, LadderConfig, LadderData,
    LatticeBox, TailMode,
};
use crate::mc::{
    estimate_green_cubes, estimate_pn_cube, estimate_survival, meander_histogram, tv_distance_with_error, Binning,
    HeavyStepSampler,
};
use crate::step::{LatticeStep, ScalingSeq, StepDistribution};

/// Exact boxes with more cells are refused; `box_extent` clips them.
const MAX_CELLS: usize = 1 << 26;

#[derive(Default)]
pub(crate) struct Outcome {
    pub rows: Vec<ComparisonRow>,
    pub invariants: Vec<Invariant>,
    pub constants: BTreeMap<String, ConstantFit>,
    pub fits: BTreeMap<String, SvFit>,
    pub warnings: Vec<String>,
    pub files: Vec<(String, String)>,
}

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn lattice_point(p: &[f64]) -> Result<Vec<i64>> {
    if p.iter().any(|v| !v.is_finite() || v.fract() != 0.0) {
        return config_err(format!("lattice point expected, got {p:?}"));
    }
    Ok(p.iter().map(|&v| v as i64).collect())
}

fn require_lattice(step: &StepDistribution) -> Result<&LatticeStep> {
    step.as_lattice().ok_or_else(|| Error::Config("this mode needs a lattice walk".into()))
}

fn fmt_point(p: &[f64]) -> String {
    p.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(";")
}

fn check_dims(cfg: &ExperimentConfig, d: usize) -> Result<()> {
    let bad = cfg.grid.x.points().iter().chain(cfg.grid.y.points().iter()).any(|p| p.len() != d);
    if bad {
        return config_err(format!("grid points must have {d} coordinates"));
    }
    Ok(())
}

fn positive_times(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.grid.n.contains(&0) {
        return config_err("this mode needs n >= 1");
    }
    Ok(())
}

/// Reachable box from `x` in `n` steps, clipped by `box_extent`.
pub(crate) fn exact_box(step: &LatticeStep, x: &[i64], n: usize, tol: &Tolerances) -> Result<LatticeBox> {
    let mut b = LatticeBox::reachable(step, x, n, 0);
    if let Some(e) = tol.box_extent {
        b.hi[0] = b.hi[0].min(x[0] + e).max(x[0]);
        for k in 1..b.dim() {
            b.lo[k] = b.lo[k].max(x[k] - e);
            b.hi[k] = b.hi[k].min(x[k] + e);
        }
    }
    if b.len() > MAX_CELLS {
        return config_err(format!("exact box has {} cells; set tolerances.box_extent", b.len()));
    }
    Ok(b)
}

pub(crate) struct ExactRun {
    pub survival: BTreeMap<usize, f64>,
    /// p_n(x, y) for each requested y, keyed by n
    pub p: BTreeMap<usize, Vec<f64>>,
    /// max over times of |live + killed + escaped - 1|
    pub balance: f64,
    pub escaped: f64,
}

/// One exact evolution from `x`, sampled at the times in `ns`.
pub(crate) fn exact_run(
    step: &LatticeStep,
    x: &[i64],
    ys: &[Vec<i64>],
    ns: &[usize],
    tol: &Tolerances,
) -> Result<ExactRun> {
    let n_max = ns.iter().copied().max().unwrap_or(0);
    let bbox = exact_box(step, x, n_max, tol)?;
    let opts = EvolveOpts { backend: Backend::Auto, max_escaped: tol.max_escaped };
    let ev = Evolver::new(step, bbox.clone(), KillRule::HALF_SPACE, opts)?;
    let want: BTreeSet<usize> = ns.iter().copied().collect();
    let mut run = ExactRun { survival: BTreeMap::new(), p: BTreeMap::new(), balance: 0.0, escaped: 0.0 };
    let last = ev.run(KilledField::point_mass(bbox, x)?, n_max, |f| {
        let live = f.live_mass();
        run.balance = run.balance.max((live + f.killed_mass + f.escaped_mass - 1.0).abs());
        if want.contains(&f.time) {
            run.survival.insert(f.time, live);
            run.p.insert(f.time, ys.iter().map(|y| f.at(y)).collect());
        }
        Ok(())
    })?;
    run.escaped = last.escaped_mass;
    Ok(run)
}

/// Largest boundary distance among the grid points, for sizing renewal tables.
fn ladder_level(cfg: &ExperimentConfig) -> usize {
    let m = cfg.grid.x.points().iter().chain(cfg.grid.y.points().iter()).map(|p| p[0]).fold(0.0, f64::max);
    (m.ceil() as usize + 2).max(64)
}

fn ladder(step: &LatticeStep, level: usize) -> Result<LadderData> {
    ladder_data(&step.first_marginal(), &LadderConfig { level, ..Default::default() })
}

/// Limit law, scaling and renewal functions: exact tables for lattice walks,
/// unit-prefactor surrogates otherwise.
pub(crate) fn context(step: &StepDistribution, n_max: usize, level: usize) -> Result<(AsymptoticContext, Vec<String>)> {
    let (params, tail) = limit_law(step)?;
    let scaling = ScalingSeq::new(step, n_max.max(1))?;
    let mut warnings = Vec::new();
    let (renewal, lattice) = match step.as_lattice() {
        Some(l) => {
            let data = ladder(l, level)?;
            warnings.extend(data.warnings.iter().cloned());
            (RenewalSource::Tables(data), true)
        }
        None => (RenewalSource::Surrogate(RenewalSurrogate::from_params(&params, 1.0, 1.0)), false),
    };
    Ok((AsymptoticContext::new(params, scaling, renewal, tail, lattice)?, warnings))
}

fn meander_binning(d: usize, tol: &Tolerances) -> Result<Binning> {
    let w = tol.meander_window;
    let k = tol.meander_bins.max(1);
    let mut lo = vec![-w; d];
    let mut counts = vec![2 * k; d];
    lo[0] = 0.0;
    counts[0] = k;
    Binning::uniform(&lo, &vec![w; d], &counts)
}

pub(crate) fn exact(cfg: &ExperimentConfig, step: &StepDistribution) -> Result<Outcome> {
    let lat = require_lattice(step)?;
    check_dims(cfg, lat.dim())?;
    let yfs = cfg.grid.y.points();
    let ys = yfs.iter().map(|y| lattice_point(y)).collect::<Result<Vec<_>>>()?;
    let mut out = Outcome::default();
    let (mut balance, mut escaped) = (0.0f64, 0.0f64);
    for xf in cfg.grid.x.points() {
        let x = lattice_point(&xf)?;
        if x[0] < 0 {
            return config_err(format!("start {x:?} must have x_1 >= 0"));
        }
        let run = exact_run(lat, &x, &ys, &cfg.grid.n, &cfg.tolerances)?;
        balance = balance.max(run.balance);
        escaped = escaped.max(run.escaped);
        for &n in &cfg.grid.n {
            out.rows.push(ComparisonRow::new("survival", &xf, &[], Some(n), run.survival[&n], None));
            for (yf, p) in yfs.iter().zip(&run.p[&n]) {
                out.rows.push(ComparisonRow::new("p_n", &xf, yf, Some(n), *p, None));
            }
        }
    }
    out.invariants.push(Invariant::new(
        "mass_balance",
        balance <= 1e-12,
        format!("max |live + killed + escaped - 1| = {balance:.3e}"),
    ));
    out.invariants.push(Invariant::new(
        "escaped_mass",
        escaped <= cfg.tolerances.max_escaped,
        format!("largest escaped mass {escaped:.3e}"),
    ));
    Ok(out)
}

/// Fraction of Monte Carlo rows within three standard errors of the exact value.
fn passthrough(rows: &[ComparisonRow], exact: &[f64], samples: u64) -> Invariant {
    let mut fails = 0usize;
    for (r, &e) in rows.iter().zip(exact) {
        let se = r.stderr.unwrap_or(0.0);
        let ok = if se > 0.0 { (r.measured - e).abs() <= 3.0 * se } else { (r.measured - e).abs() <= 3.0 / samples as f64 };
        if !ok {
            fails += 1;
        }
    }
    let total = rows.len();
    let frac = if total == 0 { 1.0 } else { 1.0 - fails as f64 / total as f64 };
    let passed = frac >= 0.95 || (total < 20 && fails <= 1);
    Invariant::new(
        "lattice_passthrough",
        passed,
        format!("{} of {total} rows within 3 standard errors of the exact value", total - fails),
    )
}

pub(crate) fn monte_carlo(cfg: &ExperimentConfig, step: &StepDistribution) -> Result<Outcome> {
    let s = HeavyStepSampler::new(step)?;
    let d = s.dim();
    check_dims(cfg, d)?;
    let seed = cfg.seed.expect("validated");
    let r = cfg.tolerances.cube;
    let vol = r.powi(d as i32);
    let yfs = cfg.grid.y.points();
    let mut out = Outcome::default();
    let mut exact_values = Vec::new();
    let mut compared = Vec::new();
    for xf in cfg.grid.x.points() {
        let start = out.rows.len();
        for &n in &cfg.grid.n {
            let e = estimate_survival(&s, &xf, n, cfg.samples, seed)?;
            out.rows.push(ComparisonRow::new("survival", &xf, &[], Some(n), e.value, Some(e.stderr)));
            for y in &yfs {
                let e = estimate_pn_cube(&s, &xf, y, r, n, cfg.samples, seed)?;
                out.rows.push(ComparisonRow::new("p_n", &xf, y, Some(n), e.value / vol, Some(e.stderr / vol)));
            }
        }
        if let (Some(lat), true) = (step.as_lattice(), r == 1.0) {
            let x = lattice_point(&xf)?;
            let ys = yfs.iter().map(|y| lattice_point(y)).collect::<Result<Vec<_>>>()?;
            match exact_run(lat, &x, &ys, &cfg.grid.n, &cfg.tolerances) {
                Ok(run) => {
                    for &n in &cfg.grid.n {
                        exact_values.push(run.survival[&n]);
                        exact_values.extend(run.p[&n].iter().copied());
                    }
                    compared.extend(out.rows[start..].iter().cloned());
                }
                Err(e) => out.warnings.push(format!("no exact check from {xf:?}: {e}")),
            }
        }
    }
    if !compared.is_empty() {
        out.invariants.push(passthrough(&compared, &exact_values, cfg.samples));
    }
    Ok(out)
}

pub(crate) fn compare(cfg: &ExperimentConfig, step: &StepDistribution) -> Result<Outcome> {
    positive_times(cfg)?;
    let d = step.dim();
    check_dims(cfg, d)?;
    let n_max = cfg.grid.n.iter().copied().max().unwrap_or(1);
    let (ctx, warnings) = context(step, n_max, ladder_level(cfg))?;
    let mut out = Outcome { warnings, ..Default::default() };
    let tol = &cfg.tolerances;
    let gates = RegimeGates { delta_scale: tol.delta_scale, a: tol.large_dev_a };
    let s = HeavyStepSampler::new(step)?;
    let seed = cfg.seed.expect("validated");
    let r = tol.cube;
    let vol = r.powi(d as i32);
    let binning = meander_binning(d, tol)?;
    let mut meanders: BTreeMap<usize, SmoothedMeander> = BTreeMap::new();
    let yfs = cfg.grid.y.points();
    let lat = step.as_lattice();
    let ys = match lat {
        Some(_) => yfs.iter().map(|y| lattice_point(y)).collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let mut failures = 0usize;
    for xf in cfg.grid.x.points() {
        let exact = match lat {
            Some(l) => Some(exact_run(l, &lattice_point(&xf)?, &ys, &cfg.grid.n, tol)?),
            None => None,
        };
        let mut series = Vec::new();
        for &n in &cfg.grid.n {
            let (surv, surv_se) = match &exact {
                Some(run) => (run.survival[&n], None),
                None => {
                    let e = estimate_survival(&s, &xf, n, cfg.samples, seed)?;
                    (e.value, Some(e.stderr))
                }
            };
            out.rows.push(ComparisonRow::new("survival", &xf, &[], Some(n), surv, surv_se));
            if surv > 0.0 {
                series.push((n as f64, surv));
            }
            let c = ctx.scaling.c(n);
            for (j, y) in yfs.iter().enumerate() {
                let (m, se) = match &exact {
                    Some(run) => (run.p[&n][j], None),
                    None => {
                        let e = estimate_pn_cube(&s, &xf, y, r, n, cfg.samples, seed)?;
                        (e.value / vol, Some(e.stderr / vol))
                    }
                };
                let row = ComparisonRow::new("p_n", &xf, y, Some(n), m, se);
                let regime = gates.classify(&xf, y, n, c);
                let pred = match regime {
                    Regime::Large => bound_large_dev(&ctx, &xf, y),
                    Regime::Small => predict_small_dev(&ctx, &xf, y, n),
                    _ => {
                        if !meanders.contains_key(&n) {
                            let h = meander_histogram(&s, &vec![0.0; d], n, c, cfg.samples, &binning, seed)?;
                            meanders.insert(n, SmoothedMeander::new(&h, tol.bandwidth)?);
                        }
                        let sm = &meanders[&n];
                        predict_normal_dev(&ctx, &xf, y, n, surv, &|z| sm.density(z))
                    }
                };
                out.rows.push(match pred {
                    Ok(p) => row.with_prediction(p.value, regime, p.surrogate),
                    Err(e) => {
                        failures += 1;
                        if failures <= 10 {
                            out.warnings.push(format!("no prediction at x={xf:?}, y={y:?}, n={n}: {e}"));
                        }
                        ComparisonRow { regime, ..row }
                    }
                });
            }
        }
        match fit_slowly_varying(&series, -ctx.params.rho()) {
            Ok(f) => {
                out.fits.insert(format!("survival x={}", fmt_point(&xf)), f);
            }
            Err(e) => out.warnings.push(format!("survival fit from {xf:?}: {e}")),
        }
    }
    if failures > 10 {
        out.warnings.push(format!("{failures} rows without a prediction in total"));
    }
    for (regime, stat) in [(Regime::Normal, Statistic::Median), (Regime::Small, Statistic::Median), (Regime::Large, Statistic::Max)] {
        let rows: Vec<ComparisonRow> =
            out.rows.iter().filter(|r| r.quantity == "p_n" && r.regime == regime).cloned().collect();
        if rows.is_empty() {
            continue;
        }
        match fit_constant(&rows, stat) {
            Ok(f) => {
                out.constants.insert(regime.as_str().into(), f);
            }
            Err(e) => out.warnings.push(format!("{} constant: {e}", regime.as_str())),
        }
    }
    let bad = out.rows.iter().filter(|r| r.predicted.is_some_and(|p| !(p.is_finite() && p >= 0.0))).count();
    out.invariants.push(Invariant::new("predictions_finite", bad == 0, format!("{bad} predictions negative or not finite")));
    Ok(out)
}

pub(crate) fn green(cfg: &ExperimentConfig, step: &StepDistribution) -> Result<Outcome> {
    let d = step.dim();
    check_dims(cfg, d)?;
    let tol = &cfg.tolerances;
    let level = ladder_level(cfg);
    let mut out = Outcome::default();
    let ctx = if d >= 2 {
        match context(step, 1, level) {
            Ok((c, w)) => {
                out.warnings.extend(w);
                Some(c)
            }
            Err(e) => {
                out.warnings.push(format!("no Green prediction: {e}"));
                None
            }
        }
    } else {
        None
    };
    let yfs = cfg.grid.y.points();
    let mut tails = String::from("x,y,partial,tail_bound,constant,divergent\n");
    match step.as_lattice() {
        Some(lat) => {
            let ladder = ladder(lat, level)?;
            out.warnings.extend(ladder.warnings.iter().cloned());
            let scaling = ScalingSeq::new(step, tol.horizon.max(1))?;
            let ys = yfs.iter().map(|y| lattice_point(y)).collect::<Result<Vec<_>>>()?;
            for xf in cfg.grid.x.points() {
                let x = lattice_point(&xf)?;
                let bbox = exact_box(lat, &x, tol.horizon, tol)?;
                let opts = EvolveOpts { backend: Backend::Auto, max_escaped: tol.max_escaped };
                let rep = green_exact_in_box(&x, &ys, lat, tol.horizon, TailMode::Bound, &ladder, &scaling, bbox, opts)?;
                out.warnings.extend(rep.warnings);
                for (v, yf) in rep.values.iter().zip(&yfs) {
                    out.rows.push(ComparisonRow::new("green", &xf, yf, None, v.partial, None));
                    tails.push_str(&format!(
                        "{},{},{:.16e},{:.16e},{:.16e},{}\n",
                        fmt_point(&xf),
                        fmt_point(yf),
                        v.partial,
                        v.tail_bound,
                        v.constant,
                        v.divergent
                    ));
                    if !(v.tail_bound <= tol.horizon_tail * v.partial) {
                        out.warnings.push(format!(
                            "tail bound {:.3e} at x={xf:?}, y={yf:?} exceeds {} of the partial sum",
                            v.tail_bound, tol.horizon_tail
                        ));
                    }
                }
            }
            out.files.push(("green_tail.csv".into(), tails));
        }
        None => {
            let s = HeavyStepSampler::new(step)?;
            let seed = cfg.seed.expect("validated");
            let vol = tol.cube.powi(d as i32);
            for xf in cfg.grid.x.points() {
                let ests = estimate_green_cubes(&s, &xf, &yfs, tol.cube, tol.horizon, cfg.samples, seed)?;
                if let Some(e) = ests.first() {
                    if e.alive_at_horizon > tol.horizon_tail {
                        out.warnings.push(format!(
                            "{:.3e} of the paths from {xf:?} are alive at the horizon",
                            e.alive_at_horizon
                        ));
                    }
                }
                for e in ests {
                    let v = e.estimate;
                    out.rows.push(ComparisonRow::new("green", &xf, &e.y, None, v.value / vol, Some(v.stderr / vol)));
                }
            }
        }
    }
    if let Some(ctx) = &ctx {
        let mut in_regime = Vec::new();
        let mut outside = 0usize;
        for row in out.rows.iter_mut() {
            match predict_green(ctx, &row.x, &row.y) {
                Ok(p) => {
                    *row = row.clone().with_prediction(p.value, Regime::None, p.surrogate);
                    if p.in_regime {
                        in_regime.push(row.clone());
                    } else {
                        outside += 1;
                    }
                }
                Err(e) => out.warnings.push(format!("no Green prediction at x={:?}, y={:?}: {e}", row.x, row.y)),
            }
        }
        if outside > 0 {
            out.warnings.push(format!("{outside} rows have boundary distances above the regime fraction"));
        }
        match fit_constant(&in_regime, Statistic::Median) {
            Ok(f) => {
                out.constants.insert("green".into(), f);
            }
            Err(e) => out.warnings.push(format!("green constant: {e}")),
        }
    }
    Ok(out)
}

pub(crate) fn meander(cfg: &ExperimentConfig, step: &StepDistribution) -> Result<Outcome> {
    positive_times(cfg)?;
    let s = HeavyStepSampler::new(step)?;
    let d = s.dim();
    check_dims(cfg, d)?;
    let seed = cfg.seed.expect("validated");
    let n_max = cfg.grid.n.iter().copied().max().unwrap_or(1);
    let scaling = ScalingSeq::new(step, n_max)?;
    let binning = meander_binning(d, &cfg.tolerances)?;
    let mut out = Outcome::default();
    let mut nonpositive = 0u64;
    for (i, xf) in cfg.grid.x.points().iter().enumerate() {
        let mut prev = None;
        for &n in &cfg.grid.n {
            let h = meander_histogram(&s, xf, n, scaling.c(n), cfg.samples, &binning, seed)?;
            nonpositive += h.nonpositive_first;
            let p = h.accepted as f64 / cfg.samples as f64;
            let se = (p * (1.0 - p) / cfg.samples as f64).sqrt();
            out.rows.push(ComparisonRow::new("meander_survival", xf, &[], Some(n), p, Some(se)));
            let mut buf = Vec::new();
            h.write_csv_to(&mut buf)?;
            out.files.push((format!("meander_x{i}_n{n}.csv"), String::from_utf8(buf).expect("csv is utf-8")));
            if let Some(prev) = &prev {
                let (tv, tv_se) = tv_distance_with_error(prev, &h)?;
                out.rows.push(ComparisonRow::new("meander_tv", xf, &[], Some(n), tv, Some(tv_se)));
            }
            prev = Some(h);
        }
    }
    out.invariants.push(Invariant::new(
        "meander_support",
        nonpositive == 0,
        format!("{nonpositive} accepted endpoints with nonpositive first coordinate"),
    ));
    Ok(out)
}

pub(crate) fn table(cfg: &ExperimentConfig, step: &StepDistribution) -> Result<Outcome> {
    positive_times(cfg)?;
    let d = step.dim();
    check_dims(cfg, d)?;
    let n_max = cfg.grid.n.iter().copied().max().unwrap_or(1);
    let scaling = ScalingSeq::new(step, n_max)?;
    let mut out = Outcome::default();
    let mut prev = 0.0;
    let mut monotone = true;
    for &n in &cfg.grid.n {
        let c = scaling.c(n);
        out.rows.push(ComparisonRow::new("c_n", &[], &[], Some(n), c, None));
    }
    let mut sorted = cfg.grid.n.clone();
    sorted.sort_unstable();
    for n in sorted {
        let c = scaling.c(n);
        monotone &= c >= prev;
        prev = c;
    }
    out.invariants.push(Invariant::new("scaling_monotone", monotone, "c_n nondecreasing over the grid"));
    let (alpha, rho) = limit_law(step).map(|(p, _)| (p.alpha, p.rho())).unwrap_or((2.0, 0.5));
    for xf in cfg.grid.x.points() {
        let surv: Option<Vec<(f64, Option<f64>)>> = match step.as_lattice() {
            Some(lat) => {
                let run = exact_run(lat, &lattice_point(&xf)?, &[], &cfg.grid.n, &cfg.tolerances)?;
                Some(cfg.grid.n.iter().map(|n| (run.survival[n], None)).collect())
            }
            None => match cfg.seed {
                Some(seed) if cfg.samples > 0 => {
                    let s = HeavyStepSampler::new(step)?;
                    let mut v = Vec::new();
                    for &n in &cfg.grid.n {
                        let e = estimate_survival(&s, &xf, n, cfg.samples, seed)?;
                        v.push((e.value, Some(e.stderr)));
                    }
                    Some(v)
                }
                _ => {
                    out.warnings.push("survival of a continuous walk needs a seed and samples".into());
                    None
                }
            },
        };
        let Some(surv) = surv else { continue };
        let mut series = Vec::new();
        for (&n, (v, se)) in cfg.grid.n.iter().zip(surv) {
            out.rows.push(ComparisonRow::new("survival", &xf, &[], Some(n), v, se));
            if v > 0.0 {
                series.push((n as f64, v));
            }
        }
        match fit_slowly_varying(&series, -rho) {
            Ok(f) => {
                out.fits.insert(format!("survival x={}", fmt_point(&xf)), f);
            }
            Err(e) => out.warnings.push(format!("survival fit from {xf:?}: {e}")),
        }
    }
    if let Some(lat) = step.as_lattice() {
        let data = ladder(lat, ladder_level(cfg))?;
        out.warnings.extend(data.warnings.iter().cloned());
        for (name, t) in [("H", &data.h_table), ("V", &data.v_table)] {
            for (u, v) in t.iter().enumerate() {
                out.rows.push(ComparisonRow::new(name, &[u as f64], &[], None, *v, None));
            }
        }
        let pts = |t: &[f64]| -> Vec<(f64, f64)> { (1..t.len()).map(|u| (u as f64, t[u])).collect() };
        for (name, t, guess) in [("H", &data.h_table, alpha * rho), ("V", &data.v_table, alpha * (1.0 - rho))] {
            match fit_slowly_varying(&pts(t), guess) {
                Ok(f) => {
                    out.fits.insert(name.into(), f);
                }
                Err(e) => out.warnings.push(format!("{name} fit: {e}")),
            }
        }
    }
    Ok(out)
}
