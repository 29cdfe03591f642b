mod common;

use bates_cva::bench::ConfigLabel;
use bates_cva::cva::{quadrature_weights, run_pipeline, CvaRun};
use bates_cva::{
    base_case, cva_quadrature, default_probability, CvaInputs, DefaultModel, Exercise,
    ExposureProfile, Method, NumericsConfig, OptionKind, OptionSpec,
};
use proptest::prelude::*;

fn inputs(s0: f64, exercise: Exercise, model: DefaultModel, numerics: NumericsConfig) -> CvaInputs {
    let base = base_case();
    CvaInputs {
        params: base.params_at(s0),
        spec: OptionSpec::new(OptionKind::Put, exercise, 100.0, 1.0).unwrap(),
        default_model: model,
        numerics,
        label: ConfigLabel::Custom,
    }
}

fn base_model() -> DefaultModel {
    base_case().default_model
}

fn coarse() -> NumericsConfig {
    NumericsConfig::new(25, 101, 2_000)
}

fn run(method: Method, inputs: &CvaInputs) -> CvaRun {
    run_pipeline(method, inputs).unwrap()
}

#[test]
fn full_recovery_or_zero_hazard_gives_zero_cva() {
    for model in [
        DefaultModel {
            recovery: 1.0,
            ..base_model()
        },
        DefaultModel {
            delta: 0.0,
            ..base_model()
        },
    ] {
        let inp = inputs(100.0, Exercise::American, model, coarse());
        assert_eq!(run(Method::CHtfd, &inp).result.cva, 0.0);
        assert_eq!(run(Method::HtfdHtmc, &inp).result.cva, 0.0);
    }
}

#[test]
fn coupled_cva_linear_in_loss_given_default() {
    let low = DefaultModel {
        recovery: 0.7,
        ..base_model()
    };
    let high = DefaultModel {
        recovery: 0.4,
        ..base_model()
    };
    for exercise in [Exercise::European, Exercise::American] {
        let a = run(Method::CHtfd, &inputs(100.0, exercise, low, coarse()))
            .result
            .cva;
        let b = run(Method::CHtfd, &inputs(100.0, exercise, high, coarse()))
            .result
            .cva;
        let scale = high.lgd() / low.lgd();
        assert!((b - scale * a).abs() <= 1e-13 * b, "{a} {b}");
        assert!((scale - 2.0).abs() < 1e-15);
    }
}

#[test]
fn small_hazard_cva_is_linear_in_hazard() {
    let at = |delta| {
        let model = DefaultModel {
            delta,
            ..base_model()
        };
        run(
            Method::CHtfd,
            &inputs(100.0, Exercise::European, model, coarse()),
        )
        .result
        .cva
    };
    let ratio = at(2e-3) / at(1e-3);
    assert!((ratio - 2.0).abs() < 0.02, "{ratio}");
}

#[test]
fn put_cva_decreases_in_spot_and_american_dominates() {
    let mut previous = [f64::INFINITY; 2];
    for s0 in [80.0, 100.0, 120.0] {
        let eu = run(
            Method::CHtfd,
            &inputs(s0, Exercise::European, base_model(), coarse()),
        );
        let am = run(
            Method::CHtfd,
            &inputs(s0, Exercise::American, base_model(), coarse()),
        );
        assert!(am.result.cva >= eu.result.cva, "S0 = {s0}");
        assert!(am.price >= eu.price);
        assert!(eu.result.cva < previous[0] && am.result.cva < previous[1]);
        previous = [eu.result.cva, am.result.cva];
    }
}

#[test]
fn monte_carlo_cva_below_peak_exposure_bound() {
    let model = base_model();
    for exercise in [Exercise::European, Exercise::American] {
        let out = run(Method::HtfdHtmc, &inputs(100.0, exercise, model, coarse()));
        let profile = out.exposure.unwrap();
        let r = base_case().params.r;
        let peak = profile
            .times
            .iter()
            .zip(&profile.ee)
            .map(|(t, ee)| (-r * t).exp() * ee)
            .fold(0.0, f64::max);
        let bound = model.lgd() * default_probability(&model, 1.0).unwrap() * peak;
        assert!(out.result.cva <= bound, "{} > {bound}", out.result.cva);
        assert!(profile.ee.iter().all(|&x| x >= 0.0));
    }
}

#[test]
fn confidence_interval_shrinks_with_root_n() {
    let ci = |n_paths| {
        let numerics = NumericsConfig {
            n_paths,
            ..coarse()
        };
        run(
            Method::HtfdHtmc,
            &inputs(100.0, Exercise::European, base_model(), numerics),
        )
        .result
        .ci_halfwidth
        .unwrap()
    };
    let ratio = ci(2_000) / ci(8_000);
    assert!((ratio - 2.0).abs() < 0.3, "{ratio}");
}

#[test]
fn monte_carlo_outputs_independent_of_worker_count() {
    let inp = inputs(100.0, Exercise::American, base_model(), coarse());
    let with_threads = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run(Method::HtfdHtmc, &inp))
    };
    let one = with_threads(1);
    let four = with_threads(4);
    assert_eq!(one.result.cva.to_bits(), four.result.cva.to_bits());
    assert_eq!(one.result.ci_halfwidth, four.result.ci_halfwidth);
    assert_eq!(one.exposure, four.exposure);
    assert_eq!(one.price.to_bits(), four.price.to_bits());
}

#[test]
fn estimators_agree_on_a_coarse_grid() {
    let numerics = NumericsConfig::new(50, 201, 5_000);
    for exercise in [Exercise::European, Exercise::American] {
        let inp = inputs(100.0, exercise, base_model(), numerics);
        let pde = run(Method::CHtfd, &inp).result.cva;
        let mc = run(Method::HtfdHtmc, &inp).result;
        let ci = mc.ci_halfwidth.unwrap();
        assert!((mc.cva - pde).abs() < ci, "{} vs {pde} +- {ci}", mc.cva);
    }
}

#[test]
fn terminal_exposure_matches_euler_oracle() {
    let numerics = NumericsConfig::new(50, 401, 20_000);
    let inp = inputs(100.0, Exercise::European, base_model(), numerics);
    let profile = run(Method::HtfdHtmc, &inp).exposure.unwrap();
    let df = (-inp.params.r).exp();
    let hybrid = df * profile.ee[50];
    let hybrid_se = df * profile.se[50];
    let oracle = common::euler_put_prices(&inp.params, &[100.0], 100.0, 1.0, 200_000, 100, 11)[0];
    let tol = 3.0 * (hybrid_se.powi(2) + oracle.se.powi(2)).sqrt();
    assert!(
        (hybrid - oracle.mean).abs() < tol,
        "{hybrid} vs {} (tol {tol})",
        oracle.mean
    );
}

fn profile_strategy() -> impl Strategy<Value = ExposureProfile> {
    (2usize..40, 0.1f64..3.0).prop_flat_map(|(n, t)| {
        prop::collection::vec(0.0f64..50.0, n + 1).prop_map(move |ee| {
            let m = ee.len();
            ExposureProfile {
                times: (0..m).map(|i| i as f64 * t / (m - 1) as f64).collect(),
                se: vec![0.0; m],
                covariance: vec![0.0; m * m],
                n_paths: 1,
                ee,
            }
        })
    })
}

proptest! {
    #[test]
    fn quadrature_linear_in_exposure_and_lgd(
        profile in profile_strategy(),
        scale in 0.0f64..10.0,
        recovery in 0.0f64..1.0,
        delta in 0.0f64..0.5,
        r in -0.02f64..0.1,
    ) {
        let model = DefaultModel { delta, recovery };
        let base = cva_quadrature(&profile, &model, r).unwrap().cva;
        let mut scaled = profile.clone();
        scaled.ee.iter_mut().for_each(|x| *x *= scale);
        let got = cva_quadrature(&scaled, &model, r).unwrap().cva;
        prop_assert!((got - scale * base).abs() <= 1e-12 * (1.0 + got.abs()));

        let riskless = DefaultModel { delta, recovery: 1.0 };
        prop_assert_eq!(cva_quadrature(&profile, &riskless, r).unwrap().cva, 0.0);
    }

    #[test]
    fn quadrature_weights_integrate_default_density(delta in 0.0f64..0.5, n in 200usize..400) {
        let model = DefaultModel { delta, recovery: 0.0 };
        let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let total: f64 = quadrature_weights(&times, &model, 0.0).iter().sum();
        let pd = default_probability(&model, 1.0).unwrap();
        prop_assert!((total - pd).abs() <= 1e-5 * pd.max(1e-12));
        prop_assert!(total >= pd - 1e-15);
    }
}
