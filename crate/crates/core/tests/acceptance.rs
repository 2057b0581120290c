//! Acceptance criteria. Runs without the test harness so that every
//! criterion prints its own line; pass criterion numbers to run a subset.

use std::collections::BTreeMap;
use std::time::Instant;

use halfspace_core::asymptotics::{
    bound_large_dev, fit_slowly_varying, limit_law, predict_small_dev, radial_green_integral, AsymptoticContext,
    DenfEvaluator, DenfOpts, RenewalSource, RenewalSurrogate,
};
use halfspace_core::lattice::{
    b_fields_via_recursion, bs_coefficients, green_exact, green_exact_in_box, killed_fields, ladder_data,
    p_n_via_min_decomposition, renewal_by_duality, Backend, EvolveOpts, Evolver, KillRule, KilledField,
    LadderConfig, LadderData, LatticeBox, RecursionForm, TailMode,
};
use halfspace_core::mc::{estimate_green_cubes, meander_histogram, tv_distance_with_error, Binning, HeavyStepSampler};
use halfspace_core::stable::{StableParams, TailProfile};
use halfspace_core::step::{ContinuousStep, LatticeStep, ScalingSeq, StepDistribution};

type Check = Result<(bool, String), halfspace_core::Error>;

fn ladder(step: &LatticeStep, level: usize) -> LadderData {
    ladder_data(&step.first_marginal(), &LadderConfig { level, ..Default::default() }).unwrap()
}

fn lattice_ctx(step: &LatticeStep, n_max: usize, ladder: LadderData) -> AsymptoticContext {
    let sd = StepDistribution::Lattice(step.clone());
    let (params, tail) = limit_law(&sd).unwrap();
    AsymptoticContext::new(params, ScalingSeq::new(&sd, n_max).unwrap(), RenewalSource::Tables(ladder), tail, true)
        .unwrap()
}

fn criterion_1() -> Check {
    let asym = LatticeStep::new(1, vec![vec![-1], vec![0], vec![2]], vec![0.4, 0.4, 0.2])?;
    let n = 15;
    let mut worst = 0.0f64;
    let mut points = 0usize;
    for (step, starts) in [
        (LatticeStep::srw(1), vec![vec![1], vec![2], vec![3]]),
        (asym, vec![vec![1], vec![2], vec![3]]),
        (LatticeStep::srw(2), vec![vec![1, 0], vec![2, -1]]),
    ] {
        // from the boundary: forward evolution against both recursion orders
        let dp = killed_fields(&step, &vec![0; step.dim()], n)?;
        for form in [RecursionForm::OverB, RecursionForm::OverKernel] {
            let rec = b_fields_via_recursion(&step, n, form)?;
            for m in 0..=n {
                for (p, _) in dp[m].nonzero().chain(rec[m].nonzero()) {
                    worst = worst.max((dp[m].at(&p) - rec[m].at(&p)).abs());
                    points += 1;
                }
            }
        }
        // from inside: forward evolution against the split at the running minimum
        for x in &starts {
            let fields = killed_fields(&step, x, n)?;
            for (m, f) in fields.iter().enumerate() {
                let bbox = f.bbox.clone();
                for i in 0..bbox.len() {
                    let y = bbox.point(i);
                    if y[0] < 1 {
                        continue;
                    }
                    let b = p_n_via_min_decomposition(x, &y, m, &step)?;
                    worst = worst.max((b - f.mass[i]).abs());
                    points += 1;
                }
            }
        }
    }
    Ok((worst <= 1e-12, format!("max route difference {worst:.2e} over {points} comparisons, n <= {n}")))
}

fn criterion_2() -> Check {
    let skew = LatticeStep::new(
        2,
        vec![vec![1, 0], vec![-1, 1], vec![-1, -1], vec![2, 1], vec![0, -1]],
        vec![0.3, 0.25, 0.15, 0.1, 0.2],
    )?;
    let mut worst = 0.0f64;
    for t in [-2.0, -0.7, 0.3, 1.1, 2.9] {
        let (l, r) = bs_coefficients(&LatticeStep::srw(1), &[t], 20)?;
        worst = l.iter().zip(&r).fold(worst, |w, (a, b)| w.max((a - b).norm()));
    }
    for t in [[0.0, 0.0], [0.3, -1.1], [2.0, 0.5], [-0.7, 0.2], [1.3, 2.9]] {
        let (l, r) = bs_coefficients(&skew, &t, 20)?;
        worst = l.iter().zip(&r).fold(worst, |w, (a, b)| w.max((a - b).norm()));
    }
    Ok((worst <= 1e-10, format!("max coefficient difference {worst:.2e}, n <= 20")))
}

/// 1 + sum_{k >= 1} P(Bin(k, 1/2) <= u), summed until the terms vanish.
fn binomial_v(u: u64) -> f64 {
    let mut total = 1.0;
    // row k of Pascal's triangle scaled by 2^{-k}
    let mut row = vec![1.0f64];
    for k in 1..4000u64 {
        let mut next = vec![0.0; row.len() + 1];
        for (j, r) in row.iter().enumerate() {
            next[j] += 0.5 * r;
            next[j + 1] += 0.5 * r;
        }
        row = next;
        let term: f64 = row.iter().take(u as usize + 1).sum();
        total += term;
        if k > u + 10 && term < 1e-18 {
            break;
        }
    }
    total
}

fn criterion_3() -> Check {
    let l = ladder(&LatticeStep::srw(1), 64);
    let h_err = (1..=50).map(|u| (l.h(u as f64) - u as f64).abs()).fold(0.0, f64::max);
    let v_err = (0..=20).map(|u| (l.v(u as f64) - binomial_v(u)).abs()).fold(0.0, f64::max);
    let ends = (l.v(0.0) - 2.0).abs().max((l.v(1.0) - 4.0).abs());
    Ok((
        h_err <= 1e-12 && v_err <= 1e-12 && ends <= 1e-12,
        format!("|H(u) - u| <= {h_err:.1e} on [1, 50], |V - oracle| <= {v_err:.1e} on [0, 20], V(0) = {}, V(1) = {}", l.v(0.0), l.v(1.0)),
    ))
}

fn criterion_4() -> Check {
    let step = LatticeStep::srw(1);
    let sd = StepDistribution::Lattice(step.clone());
    let l = ladder(&step, 16);
    let scaling = ScalingSeq::new(&sd, 10_000)?;
    let ys: Vec<Vec<i64>> = (1..=5).map(|y| vec![y]).collect();
    let sampler = HeavyStepSampler::new(&sd)?;
    let (mut exact_ok, mut mc_ok) = (true, true);
    let (mut worst_gap, mut worst_z) = (0.0f64, 0.0f64);
    for x in 1..=5i64 {
        let r = green_exact(&[x], &ys, &step, 10_000, TailMode::Bound, &l, &scaling)?;
        let mc = estimate_green_cubes(&sampler, &[x as f64], &ys.iter().map(|y| vec![y[0] as f64]).collect::<Vec<_>>(), 1.0, 1_000_000, 100_000, 40 + x as u64)?;
        for (v, e) in r.values.iter().zip(&mc) {
            let g = 2.0 * x.min(v.y[0]) as f64;
            let gap = g - v.partial;
            exact_ok &= gap >= -1e-12 && gap <= v.tail_bound;
            worst_gap = worst_gap.max(gap / v.tail_bound);
            let z = (e.estimate.value - g).abs() / e.estimate.stderr;
            worst_z = worst_z.max(z);
            mc_ok &= z <= 3.0;
        }
    }
    Ok((
        exact_ok && mc_ok,
        format!("exact: truncation gap at most {worst_gap:.3} of the bound; MC: max |z| = {worst_z:.2} at 1e5 paths"),
    ))
}

fn criterion_5() -> Check {
    let step = LatticeStep::pareto_1d(1.2, 1 << 15)?;
    let sd = StepDistribution::Lattice(step.clone());
    let scaling = ScalingSeq::new(&sd, 1 << 13)?;
    let reach = 1i64 << 15;
    let bbox = LatticeBox::new(vec![0], vec![reach])?;
    let ev = Evolver::new(&step, bbox.clone(), KillRule::HALF_SPACE, EvolveOpts { backend: Backend::Fft, max_escaped: 1e-2 })?;
    // half doublings across [2^8, 2^13]
    let ns: Vec<usize> = (16..=26).map(|k| 2f64.powf(k as f64 / 2.0).round() as usize).collect();
    // live mass, and live plus escaped as an upper bracket
    let mut surv = BTreeMap::new();
    ev.run(KilledField::point_mass(bbox, &[1])?, 1 << 13, |f| {
        if ns.contains(&f.time) {
            surv.insert(f.time, (f.live_mass(), f.live_mass() + f.escaped_mass));
        }
        Ok(())
    })?;
    let lower: Vec<(f64, f64)> = ns.iter().map(|&n| (n as f64, surv[&n].0)).collect();
    let upper: Vec<(f64, f64)> = ns.iter().map(|&n| (n as f64, surv[&n].1)).collect();
    let a = fit_slowly_varying(&lower, -0.5)?.index;
    let b = fit_slowly_varying(&upper, -0.5)?.index;

    let top = [1usize << 11, 1 << 12, 1 << 13];
    let levels: Vec<usize> = top.iter().map(|&n| scaling.c(n).ceil() as usize).collect();
    let h = renewal_by_duality(&step.first_marginal(), &levels, false, 1 << 15, reach)?;
    let ratios: Vec<f64> = top.iter().enumerate().map(|(i, &n)| h.value(i) / (n as f64 * surv[&n].0)).collect();
    let spread = ratios.iter().cloned().fold(f64::MIN, f64::max) / ratios.iter().cloned().fold(f64::MAX, f64::min) - 1.0;
    let ok = (a + 0.5).abs() <= 0.05 && (b + 0.5).abs() <= 0.05 && spread < 0.15;
    Ok((
        ok,
        format!(
            "survival index {a:.4} (with escaped mass {b:.4}); H(c_n)/(n P) = {:.4?} at c_n = {levels:?}, spread {:.1}%, tail share {:.1}%",
            ratios,
            100.0 * spread,
            100.0 * h.tail.iter().zip(&h.partial).map(|(t, p)| t / (t + p)).fold(0.0, f64::max)
        ),
    ))
}

fn criterion_6() -> Check {
    let (alpha, q, k1) = (1.2, 0.05, 64);
    let probe = LatticeStep::pareto_isotropic(2, alpha, 64, k1, q)?;
    let c_probe = ScalingSeq::new(&StepDistribution::Lattice(probe), 1024)?;
    let width = (50.0 * c_probe.c(1024)).ceil() as i64 + 16;
    let step = LatticeStep::pareto_isotropic(2, alpha, width, k1, q)?;
    let ctx = lattice_ctx(&step, 1024, ladder(&step, 64));
    let bbox = LatticeBox::new(vec![0, -width], vec![127, width])?;
    let ev = Evolver::new(&step, bbox.clone(), KillRule::HALF_SPACE, EvolveOpts { backend: Backend::Fft, max_escaped: 1.0 })?;
    let ns: Vec<usize> = (6..=10).map(|k| 1usize << k).collect();
    // ratio rows (x1, y1, n, radius index on the fine grid, ratio)
    let mut rows: Vec<(i64, i64, usize, usize, f64)> = Vec::new();
    let radii = 16usize;
    for x1 in 1..=5i64 {
        ev.run(KilledField::point_mass(bbox.clone(), &[x1, 0])?, 1024, |f| {
            if !ns.contains(&f.time) {
                return Ok(());
            }
            let c = ctx.scaling.c(f.time);
            for y1 in 1..=5i64 {
                for j in 0..radii {
                    let r = 5.0 * c * 10f64.powf(j as f64 / (radii - 1) as f64);
                    let dy = (y1 - x1) as f64;
                    let t = (r * r - dy * dy).sqrt().round();
                    let dist = (dy * dy + t * t).sqrt();
                    if dist < 5.0 * c || dist > 50.0 * c || t as i64 > width {
                        continue;
                    }
                    let y = [y1, t as i64];
                    let p = f.at(&y);
                    let b = bound_large_dev(&ctx, &[x1 as f64, 0.0], &[y1 as f64, t])?.value;
                    rows.push((x1, y1, f.time, j, p / b));
                }
            }
            Ok(())
        })?;
    }
    let coarse = |r: &&(i64, i64, usize, usize, f64)| {
        r.0 % 2 == 1 && r.1 % 2 == 1 && [64, 256, 1024].contains(&r.2) && r.3 % 2 == 0
    };
    let c_fine = rows.iter().map(|r| r.4).fold(0.0, f64::max);
    let c_coarse = rows.iter().filter(coarse).map(|r| r.4).fold(0.0, f64::max);
    let n_coarse = rows.iter().filter(coarse).count();
    let change = c_fine / c_coarse - 1.0;
    Ok((
        c_fine.is_finite() && c_coarse > 0.0 && change.abs() <= 0.2,
        format!(
            "C0 = {c_coarse:.4} on {} points, {c_fine:.4} on {} points (change {:.1}%)",
            n_coarse,
            rows.len(),
            100.0 * change
        ),
    ))
}

fn criterion_7() -> Check {
    let step = LatticeStep::pareto_1d(1.2, 1 << 15)?;
    let cfg = LadderConfig { level: 64, horizon: 1 << 14, depth: 1 << 14, tol: 1e-2 };
    let l = ladder_data(&step.first_marginal(), &cfg)?;
    let ctx = lattice_ctx(&step, 1 << 12, l);
    let bbox = LatticeBox::new(vec![0], vec![1 << 14])?;
    let ev = Evolver::new(&step, bbox.clone(), KillRule::HALF_SPACE, EvolveOpts { backend: Backend::Fft, max_escaped: 1e-2 })?;
    let mut ratios = Vec::new();
    ev.run(KilledField::point_mass(bbox, &[1])?, 1 << 12, |f| {
        if [1 << 10, 1 << 11, 1 << 12].contains(&f.time) {
            let pred = predict_small_dev(&ctx, &[1.0], &[1.0], f.time)?.value;
            ratios.push(f.at(&[1]) / pred);
        }
        Ok(())
    })?;
    let last = *ratios.last().unwrap();
    let toward = ratios.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs());
    Ok((
        (0.5..=2.0).contains(&last) && toward,
        format!("p_n / prediction at n = 2^10, 2^11, 2^12: {ratios:.5?}; V(1) = {:.5}, H(1) = {}", ctx.v(1.0), ctx.h(1.0)),
    ))
}

fn criterion_8() -> Check {
    let step = LatticeStep::pareto_isotropic(2, 1.2, 256, 255, 1.0)?;
    let ctx = lattice_ctx(&step, 3000, ladder(&step, 64));
    let bbox = LatticeBox::new(vec![0, -512], vec![255, 512])?;
    let ys = vec![vec![1, 32], vec![1, 64]];
    let l = match &ctx.renewal {
        RenewalSource::Tables(l) => l.clone(),
        _ => unreachable!(),
    };
    let opts = EvolveOpts { backend: Backend::Fft, max_escaped: 1.0 };
    let g = green_exact_in_box(&[1, 0], &ys, &step, 3000, TailMode::Bound, &l, &ctx.scaling, bbox, opts)?;
    let radial = radial_green_integral(&ctx, &[1.0])?;
    let norm = ctx.h(1.0) * ctx.v(1.0) * radial;
    let s: Vec<(f64, f64)> = g
        .values
        .iter()
        .map(|v| {
            let r2 = (v.y[1] * v.y[1]) as f64;
            (v.partial * r2 / norm, (v.partial + v.tail_bound) * r2 / norm)
        })
        .collect();
    let change = s[1].0 / s[0].0 - 1.0;
    let change_tail = s[1].1 / s[0].1 - 1.0;

    let cauchy = StableParams::isotropic(1.0, 1.0, 2)?;
    let cctx = AsymptoticContext::new(
        cauchy.clone(),
        ScalingSeq::new(&StepDistribution::Continuous(ContinuousStep::IsotropicPareto { dim: 2, alpha: 1.0 }), 8)?,
        RenewalSource::Surrogate(RenewalSurrogate::from_params(&cauchy, 1.0, 1.0)),
        TailProfile::pure_power(1.0),
        true,
    )?;
    let mut closed = 0.0f64;
    for w in [1.0, 0.5, 2.0] {
        let v = radial_green_integral(&cctx, &[w])?;
        closed = closed.max((v - 1.0 / (2.0 * std::f64::consts::PI * w * w)).abs());
    }
    Ok((
        change.abs() < 0.25 && change_tail.abs() < 0.25 && closed <= 1e-6,
        format!(
            "normalised G r^2 at r = 32, 64: {:.4} -> {:.4} ({:+.1}%), with tail {:.4} -> {:.4} ({:+.1}%); Cauchy radial error {closed:.1e}",
            s[0].0,
            s[1].0,
            100.0 * change,
            s[0].1,
            s[1].1,
            100.0 * change_tail
        ),
    ))
}

fn criterion_9() -> Check {
    let sd = StepDistribution::Continuous(ContinuousStep::ParetoLog { alpha: 1.2 });
    let sampler = HeavyStepSampler::new(&sd)?;
    let scaling = ScalingSeq::new(&sd, 512)?;
    let bins = Binning::uniform(&[0.0], &[5.0], &[10])?;
    let ns = [64usize, 128, 256, 512];
    let mut hists = Vec::new();
    for (i, &n) in ns.iter().enumerate() {
        hists.push(meander_histogram(&sampler, &[0.0], n, scaling.c(n), 20_000_000, &bins, 900 + i as u64)?);
    }
    let nonpositive: u64 = hists.iter().map(|h| h.nonpositive_first).sum();
    let tv: Vec<(f64, f64)> = hists.windows(2).map(|w| tv_distance_with_error(&w[0], &w[1])).collect::<Result<_, _>>()?;
    let decreasing = tv.windows(2).all(|w| w[0].0 - w[1].0 > 2.0 * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt());
    Ok((
        decreasing && nonpositive == 0,
        format!(
            "TV(n, 2n) for n = 64, 128, 256: {}; {nonpositive} accepted paths with nonpositive first coordinate",
            tv.iter().map(|(d, e)| format!("{d:.4} +- {e:.4}")).collect::<Vec<_>>().join(", ")
        ),
    ))
}

fn criterion_10() -> Check {
    let c = ContinuousStep::SymmetricPareto { alpha: 1.2 };
    let sd = StepDistribution::Continuous(c.clone());
    let (params, tail) = limit_law(&sd)?;
    let n = 512;
    let scaling = ScalingSeq::new(&sd, n)?;
    let ctx = AsymptoticContext::new(
        params.clone(),
        scaling.clone(),
        RenewalSource::Surrogate(RenewalSurrogate::from_params(&params, 1.0, 1.0)),
        tail,
        false,
    )?;
    let mut edges: Vec<f64> = (0..100).map(|k| k as f64 * 0.05).collect();
    edges.extend((0..80).map(|k| 5.0 * 80f64.powf(k as f64 / 79.0)));
    let fine = Binning::new(vec![edges.clone()])?;
    let h = meander_histogram(&HeavyStepSampler::new(&sd)?, &[0.0], n, scaling.c(n), 20_000_000, &fine, 1010)?;
    let coarse_edges: Vec<f64> = (0..=10).map(|k| k as f64 * 0.5).collect();
    let masses = h.masses();
    let mut hist = vec![0.0; 10];
    for (i, m) in masses.iter().enumerate() {
        let lo = edges[i];
        if lo < 5.0 - 1e-9 {
            hist[((lo + 1e-9) / 0.5) as usize] += m;
        }
    }
    let fixed = DenfEvaluator::new(&ctx, &h, DenfOpts::default())?.binned_1d(&coarse_edges)?;
    let tv = 0.5 * fixed.iter().zip(&hist).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let accepted = h.accepted as f64;
    let bound = 0.5 * hist.iter().map(|p| (p * (1.0 - p) / accepted).sqrt()).sum::<f64>();
    Ok((
        tv <= 3.0 * bound,
        format!("TV(meander fixed point, histogram) = {tv:.5} against 3 x {bound:.5} = {:.5}; {} accepted paths", 3.0 * bound, h.accepted),
    ))
}

fn main() {
    let checks: [fn() -> Check; 10] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, check) in checks.iter().enumerate() {
        let k = i + 1;
        if !only.is_empty() && !only.contains(&k) {
            continue;
        }
        let t = Instant::now();
        let (pass, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("[{}] criterion {k}: {detail} ({:.1} s)", if pass { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
