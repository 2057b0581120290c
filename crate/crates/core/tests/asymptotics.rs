use halfspace_core::asymptotics::{
    fit_slowly_varying, limit_law, predict_green, predict_normal_dev, predict_small_dev, radial_green_integral,
    AsymptoticContext, RenewalSource, RenewalSurrogate,
};
use halfspace_core::harness::{fit_constant, ComparisonRow, Regime, RegimeGates, Statistic};
use halfspace_core::lattice::{ladder_data, survival_exact, LadderConfig};
use halfspace_core::stable::{StableParams, TailProfile};
use halfspace_core::step::{ContinuousStep, LatticeStep, ScalingSeq, StepDistribution};
use proptest::prelude::*;

fn cauchy_ctx(d: usize, lattice: bool) -> AsymptoticContext {
    let params = StableParams::isotropic(1.0, 1.0, d).unwrap();
    let step = StepDistribution::Continuous(ContinuousStep::IsotropicPareto { dim: d, alpha: 1.0 });
    let sur = RenewalSurrogate::from_params(&params, 1.0, 1.0);
    AsymptoticContext::new(
        params,
        ScalingSeq::new(&step, 64).unwrap(),
        RenewalSource::Surrogate(sur),
        TailProfile::pure_power(1.0),
        lattice,
    )
    .unwrap()
}

fn binom(k: u64, j: u64) -> f64 {
    (0..j).map(|i| (k - i) as f64 / (i + 1) as f64).product()
}

#[test]
fn renewal_v_matches_binomial_sum_for_lazy_walk() {
    // chi- is Bernoulli(p): V(u) = sum_k P(Bin(k, p) <= u)
    let p = 0.3;
    let step = LatticeStep::new(1, vec![vec![-1], vec![0], vec![1]], vec![p, 1.0 - 2.0 * p, p]).unwrap();
    let l = ladder_data(&step.first_marginal(), &LadderConfig { level: 12, ..Default::default() }).unwrap();
    for u in 0..=12u64 {
        let mut v = 0.0;
        for k in 0..4000u64 {
            let term: f64 = (0..=u.min(k)).map(|j| binom(k, j) * p.powi(j as i32) * (1.0 - p).powi((k - j) as i32)).sum();
            v += term;
            if k > 50 && term < 1e-15 {
                break;
            }
        }
        assert!((l.v(u as f64) - v).abs() < 1e-9 * v, "u={u}: {} vs {v}", l.v(u as f64));
        assert_eq!(l.h(u as f64), u as f64);
    }
}

#[test]
fn surrogate_fit_recovers_srw_renewal() {
    let l = ladder_data(&LatticeStep::srw(1).first_marginal(), &LadderConfig { level: 64, ..Default::default() }).unwrap();
    let s = RenewalSurrogate::fit(&l, 8).unwrap();
    assert!((s.index_h - 1.0).abs() < 1e-9 && (s.kappa_h - 1.0).abs() < 1e-9);
    // V(u) = 2(u + 1) is not a pure power; the fit is close to slope one
    assert!((s.index_v - 1.0).abs() < 0.05, "{}", s.index_v);
}

#[test]
fn srw_survival_exponent_fit() {
    let step = LatticeStep::srw(1);
    let series: Vec<(f64, f64)> =
        (4..=11).map(|k| 1usize << k).map(|n| (n as f64, survival_exact(&[1], n, &step).unwrap())).collect();
    let f = fit_slowly_varying(&series, -0.5).unwrap();
    assert!(f.guess_gap.unwrap().abs() < 0.02, "{}", f.index);
    // P(tau_1 > n) sqrt(n) -> sqrt(2 / pi)
    let last = f.sv_table.last().unwrap();
    assert!(last.0 == 2048.0 && (series.last().unwrap().1 * 2048f64.sqrt() - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-3);
}

#[test]
fn small_dev_lattice_versus_non_lattice_factor() {
    let a = cauchy_ctx(2, true);
    let b = cauchy_ctx(2, false);
    let (x, y, n) = ([1.0, 0.0], [3.0, 2.0], 40);
    let pa = predict_small_dev(&a, &x, &y, n).unwrap().value;
    let pb = predict_small_dev(&b, &x, &y, n).unwrap().value;
    // H(u) = u^{1/2}: H(3) against int_3^4 u^{1/2} du
    let h = 3f64.sqrt();
    let ih = (4f64.powf(1.5) - 3f64.powf(1.5)) / 1.5;
    assert!((pa / pb - h / ih).abs() < 1e-12);
    assert!(predict_small_dev(&a, &x, &y, n).unwrap().surrogate);
}

#[test]
fn normal_dev_scales_with_survival_and_density() {
    let ctx = cauchy_ctx(1, true);
    let n = 50;
    let c = ctx.scaling.c(n);
    let p = predict_normal_dev(&ctx, &[1.0], &[10.0], n, 0.2, &|_| Some(0.75)).unwrap().value;
    assert!((p - 0.2 * 0.75 / c).abs() < 1e-15);
    assert!(predict_normal_dev(&ctx, &[1.0], &[10.0], n, 0.2, &|_| None).is_err());
    assert!(predict_normal_dev(&ctx, &[1.0], &[-1.0], n, 0.2, &|_| Some(1.0)).is_err());
}

#[test]
fn cauchy_green_skeleton_closed_form() {
    // 2D Cauchy: g(0, w t) = 1 / (2 pi (1 + t^2 |w|^2)^{3/2}), so the radial integral is 1 / (2 pi |w|^2)
    let ctx = cauchy_ctx(2, true);
    let (x, y) = ([1.0, 0.0], [2.0, 30.0]);
    let g = predict_green(&ctx, &x, &y).unwrap();
    let r = (1.0f64 + 900.0).sqrt();
    let w = 30.0 / r;
    let expect = 2f64.sqrt() * 1.0 / (2.0 * std::f64::consts::PI * w * w) / (r * r);
    assert!((g.value - expect).abs() < 1e-6 * expect, "{} vs {expect}", g.value);
    assert!(g.in_regime);
    assert!(radial_green_integral(&cauchy_ctx(1, true), &[]).is_err());
}

#[test]
fn limit_law_for_lattice_and_continuous_steps() {
    let (p, _) = limit_law(&StepDistribution::Lattice(LatticeStep::pareto_1d(1.5, 1000).unwrap())).unwrap();
    assert_eq!((p.alpha, p.beta), (1.5, 0.0));
    let (q, _) =
        limit_law(&StepDistribution::Continuous(ContinuousStep::SkewedPareto { alpha: 1.5, p_plus: 0.9 })).unwrap();
    assert!((q.beta - 0.8).abs() < 1e-15);
    assert!((q.rho() - 0.5).abs() > 0.05);
    // no recorded tail
    assert!(limit_law(&StepDistribution::Lattice(LatticeStep::srw(1))).is_err());
}

#[test]
fn constant_fit_flags_dispersed_ratios() {
    let rows: Vec<ComparisonRow> = [1.0, 1.0, 1.0, 3.0, 5.0, 9.0]
        .iter()
        .map(|&m| ComparisonRow::new("p_n", &[1.0], &[2.0], Some(4), m, None).with_prediction(1.0, Regime::Normal, false))
        .collect();
    let f = fit_constant(&rows, Statistic::Median).unwrap();
    assert_eq!(f.value, 2.0);
    assert!(f.unstable);
    assert_eq!(fit_constant(&rows, Statistic::Max).unwrap().value, 9.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_recovers_power_law(index in -2.0f64..2.0, a in 0.1f64..10.0) {
        let s: Vec<(f64, f64)> = (0..9).map(|k| { let n = 4.0 * 2f64.powi(k); (n, a * n.powf(index)) }).collect();
        let f = fit_slowly_varying(&s, index).unwrap();
        prop_assert!((f.index - index).abs() < 1e-9);
        prop_assert!((f.intercept - a.ln()).abs() < 1e-8);
        prop_assert!(f.residual_rms < 1e-9);
    }

    #[test]
    fn constant_fit_is_scale_equivariant(k in 0.01f64..100.0, m in prop::collection::vec(0.1f64..10.0, 5..20)) {
        let mk = |s: f64| -> Vec<ComparisonRow> {
            m.iter().map(|&v| ComparisonRow::new("p_n", &[1.0], &[1.0], Some(1), s * v, None)
                .with_prediction(1.0, Regime::Small, false)).collect()
        };
        for st in [Statistic::Max, Statistic::Median] {
            let a = fit_constant(&mk(1.0), st).unwrap();
            let b = fit_constant(&mk(k), st).unwrap();
            prop_assert!((b.value - k * a.value).abs() <= 1e-12 * b.value);
            prop_assert!((b.dispersion - a.dispersion).abs() <= 1e-9);
        }
    }

    #[test]
    fn gates_partition_by_distance(x1 in 0.0f64..50.0, y1 in 0.1f64..50.0, t in -500.0f64..500.0, c in 1.0f64..100.0, n in 1usize..10_000) {
        let g = RegimeGates { delta_scale: 1.0, a: 5.0 };
        let (x, y) = ([x1, 0.0], [y1, t]);
        let dist = ((x1 - y1).powi(2) + t * t).sqrt();
        let r = g.classify(&x, &y, n, c);
        prop_assert_eq!(r == Regime::Large, dist >= 5.0 * c);
        if r == Regime::Small {
            prop_assert!(x1.max(y1) <= g.delta(n) * c);
        }
    }

    #[test]
    fn small_dev_linear_in_v(x1 in 1.0f64..20.0, y1 in 1.0f64..20.0, n in 1usize..60) {
        // V(u) = u^{1/2} for the Cauchy surrogate
        let ctx = cauchy_ctx(1, true);
        let a = predict_small_dev(&ctx, &[x1], &[y1], n).unwrap().value;
        let b = predict_small_dev(&ctx, &[4.0 * x1], &[y1], n).unwrap().value;
        prop_assert!((b / a - 2.0).abs() < 1e-12);
    }
}
