//! Quick self-checks run by the `verify` mode.

use super::config::ExperimentConfig;
use super::modes::{exact_run, lattice_point};
use super::Invariant;
use crate::asymptotics::limit_law;
use crate::error::Result;
use crate::lattice::{ladder_data, p_n_exact, p_n_via_min_decomposition, LadderConfig};
use crate::mc::{estimate_survival, HeavyStepSampler};
use crate::numerics::{integrate_to_inf, QuadOpts};
use crate::stable::stable_density_1d;
use crate::step::{LatticeStep, ScalingSeq, StepDistribution};

fn lattice_checks(cfg: &ExperimentConfig, lat: &LatticeStep, out: &mut Vec<Invariant>) -> Result<()> {
    let total: f64 = lat.probs().iter().sum();
    out.push(Invariant::new("probability_sum", (total - 1.0).abs() <= 1e-12, format!("sum = {total:.17}")));

    let x = lattice_point(&cfg.grid.x.points()[0])?;
    let n_max = cfg.grid.n.iter().copied().max().unwrap_or(16).clamp(1, 32);
    let ns: Vec<usize> = (0..=n_max).collect();
    let run = exact_run(lat, &x, &[], &ns, &cfg.tolerances)?;
    out.push(Invariant::new(
        "mass_balance",
        run.balance <= 1e-12,
        format!("max |live + killed + escaped - 1| = {:.3e} over n <= {n_max}", run.balance),
    ));
    let s: Vec<f64> = ns.iter().map(|n| run.survival[n]).collect();
    let monotone = s.windows(2).all(|w| w[1] <= w[0] + 1e-15);
    out.push(Invariant::new("survival_monotone", monotone, format!("P(tau > n) for n <= {n_max}")));

    // forward evolution against the decomposition at the running minimum
    if lat.len() <= 256 && x[0] >= 1 {
        let ys: Vec<Vec<i64>> = cfg.grid.y.points().iter().take(4).filter_map(|y| lattice_point(y).ok()).collect();
        let mut worst = 0.0f64;
        for y in ys.iter().filter(|y| y[0] >= 1) {
            for n in 1..=6 {
                let a = p_n_exact(&x, y, n, lat)?;
                let b = p_n_via_min_decomposition(&x, y, n, lat)?;
                worst = worst.max((a - b).abs());
            }
        }
        out.push(Invariant::new("routes_agree", worst <= 1e-12, format!("max difference {worst:.3e} for n <= 6")));
    }
    Ok(())
}

/// Closed forms for the one-dimensional simple random walk: H(u) = u, V(u) = 2(u + 1).
fn srw_identities() -> Result<Invariant> {
    let m = LatticeStep::srw(1).first_marginal();
    let l = ladder_data(&m, &LadderConfig { level: 32, ..Default::default() })?;
    let ok = (0..=32).all(|u| l.h(u as f64) == u as f64 && l.v(u as f64) == 2.0 * (u + 1) as f64);
    Ok(Invariant::new("srw_renewal_identities", ok, "H(u) = u and V(u) = 2(u + 1) for u <= 32"))
}

pub fn verify_suite(cfg: &ExperimentConfig, step: &StepDistribution) -> Result<Vec<Invariant>> {
    let mut out = vec![srw_identities()?];
    if let Some(lat) = step.as_lattice() {
        lattice_checks(cfg, lat, &mut out)?;
    }

    let scaling = ScalingSeq::new(step, 256)?;
    let monotone = (1..256).all(|n| scaling.c(n + 1) >= scaling.c(n));
    out.push(Invariant::new("scaling_monotone", monotone, "c_n nondecreasing for n <= 256"));

    if step.dim() == 1 {
        if let Ok((params, _)) = limit_law(step) {
            let opts = QuadOpts::new(1e-10, 1e-9);
            let right = integrate_to_inf(|t| stable_density_1d(t, &params).unwrap_or(f64::NAN), 0.0, opts)?.value;
            let left = integrate_to_inf(|t| stable_density_1d(-t, &params).unwrap_or(f64::NAN), 0.0, opts)?.value;
            let mass = left + right;
            out.push(Invariant::new(
                "limit_density_mass",
                (mass - 1.0).abs() <= 1e-6,
                format!("integral of the limit density = {mass:.9}"),
            ));
        }
    }

    if let Some(seed) = cfg.seed {
        let s = HeavyStepSampler::new(step)?;
        let x = &cfg.grid.x.points()[0];
        let mut start = x.clone();
        start[0] = start[0].max(1.0);
        let a = estimate_survival(&s, &start, 8, 20_000, seed)?;
        let b = estimate_survival(&s, &start, 8, 20_000, seed)?;
        out.push(Invariant::new(
            "mc_reproducible",
            a.value.to_bits() == b.value.to_bits() && a.stderr.to_bits() == b.stderr.to_bits(),
            format!("two runs with seed {seed} gave {} and {}", a.value, b.value),
        ));
    }
    Ok(out)
}
