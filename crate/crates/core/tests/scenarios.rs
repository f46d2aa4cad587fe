use echochain::chain::schedule;
use echochain::experiments::{
    gaussian_packet, packet_grid, run_blowup, run_oracle_check, run_scenario, run_single_chain, run_stability,
    run_sweep, write_outputs, ExperimentConfig, Scenario,
};
use echochain::integrator::{integrate_chain, StepControl};
use echochain::{Background, Error, Kernel, Profile};
use proptest::prelude::*;

const PHYSICS: &str = r#""physics": {"delta": 0.05, "sigma": 10.0, "epsilon": 4.1}"#;
const WEAK: &str = r#""physics": {"delta": 0.05, "sigma": 10.0, "epsilon": 0.013}"#;

fn config(body: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!("{{{body}}}")).unwrap()
}

#[test]
fn negative_frequency_packet_is_stationary() {
    let r = run_single_chain(&config(&format!(r#"{PHYSICS}, "chain": {{"k0": 3, "eta0": -1000}}"#)))
        .unwrap()
        .report;
    assert_eq!(r.windows, 0);
    assert_eq!(r.amplification, 1.0);
    assert!(r.sandwich.is_none());
    assert!(r.passed);
}

#[test]
fn single_chain_report() {
    let run = run_single_chain(&config(&format!(r#"{PHYSICS}, "chain": {{"k0": 2, "eta0": 1000}}"#))).unwrap();
    let r = &run.report;
    assert!(r.passed);
    assert_eq!(r.echoes.len(), 2);
    assert!(r.sandwich.as_ref().unwrap().contains);
    assert!(r.final_residual <= 1e-12);
    assert!(r.amplification > 1e5);
    assert_eq!(run.schedules[0].windows().len(), 2);
    assert!(run.trace.is_monotone());
}

#[test]
fn unseparated_chain_is_rejected() {
    let err = run_single_chain(&config(&format!(r#"{PHYSICS}, "chain": {{"k0": 2, "eta0": 100.5}}"#))).unwrap_err();
    assert!(matches!(err, Error::SeparationViolated { .. }));
}

#[test]
fn single_point_ladder_is_degenerate() {
    let err = run_sweep(&config(&format!(r#"{PHYSICS}, "chain": {{"eta0": [1000]}}"#))).unwrap_err();
    assert!(matches!(err, Error::DegenerateLadder(_)));
    let err = run_sweep(&config(&format!(r#"{PHYSICS}, "chain": {{"eta0": [1e3, 2e3, 4e3, 8e3]}}"#))).unwrap_err();
    assert!(matches!(err, Error::DegenerateLadder(_)));
}

#[test]
fn one_chain_blowup_is_normalized() {
    let r = run_blowup(&config(&format!(r#"{PHYSICS}, "blowup": {{"chains": 1}}"#))).unwrap().report;
    let c = &r.chains[0];
    assert!(c.normalization_error <= 1e-6);
    assert!((c.final_l2 - 1.0).abs() <= 1e-6);
    assert!((c.weight * c.c_measured - 1.0).abs() <= 1e-12);
    assert!(r.passed);
}

#[test]
fn zero_weights_reduce_to_one_chain() {
    let one = run_blowup(&config(&format!(r#"{PHYSICS}, "blowup": {{"chains": 1}}"#))).unwrap().report;
    let three = run_blowup(&config(&format!(
        r#"{PHYSICS}, "blowup": {{"chains": 3, "alpha": [1, 0, 0]}}"#
    )))
    .unwrap()
    .report;
    assert_eq!(one.chains[0].final_l2, three.chains[0].final_l2);
    assert_eq!(one.chains[0].weight, three.chains[0].weight);
    assert_eq!(one.hs_plateaus[0], three.hs_plateaus[0]);
    assert!(three.chains[1..].iter().all(|c| c.final_l2 == 0.0));
    assert_eq!(three.hs_plateaus[1], three.hs_plateaus[0]);
}

#[test]
fn small_ensembles_are_rejected() {
    let err = run_stability(&config(&format!(r#"{WEAK}, "stability": {{"packets": 4}}"#))).unwrap_err();
    assert_eq!(err, Error::EnsembleTooSmall { got: 4, need: 5 });
}

#[test]
fn zero_data_is_trivially_stable() {
    let r = run_stability(&config(&format!(r#"{WEAK}, "stability": {{"scales": [1000], "amplitude": 0}}"#)))
        .unwrap()
        .report;
    assert!(r.scales[0].trivially_stable);
    assert_eq!(r.scales[0].ratio, None);
    assert!(r.passed);
}

#[test]
fn wider_gevrey_gap_lowers_the_ratio() {
    let ratio = |c_in: f64| {
        let cfg = config(&format!(
            r#"{WEAK}, "stability": {{"scales": [1000, 10000], "c_in": {c_in}, "c_out": 1}}, "seed": 3"#
        ));
        run_stability(&cfg).unwrap().report.scales.iter().map(|s| s.ratio.unwrap()).collect::<Vec<_>>()
    };
    let narrow = ratio(1.5);
    let wide = ratio(2.5);
    for (n, w) in narrow.iter().zip(&wide) {
        assert!(w <= n, "{w} > {n}");
    }
}

#[test]
fn stability_ratios_shrink_with_scale() {
    let r = run_stability(&config(&format!(r#"{WEAK}, "seed": 5"#))).unwrap().report;
    assert_eq!(r.packets.len(), 15);
    let ratios: Vec<f64> = r.scales.iter().map(|s| s.ratio.unwrap()).collect();
    assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
    assert!(r.passed);
}

#[test]
fn oracle_check_limits() {
    let err = run_oracle_check(&config(&format!(r#"{PHYSICS}, "chain": {{"k0": 4, "eta0": 1000}}"#))).unwrap_err();
    assert!(matches!(err, Error::MethodMismatch(_)));
    let r = run_oracle_check(&config(&format!(r#"{PHYSICS}, "chain": {{"k0": [0, 1], "eta0": 1000}}"#)))
        .unwrap()
        .report;
    assert_eq!(r.cases[0].relative_error, 0.0);
    assert!(r.cases[1].relative_error <= 1e-5);
}

#[test]
fn outputs_are_written() {
    let cfg = config(&format!(r#"{PHYSICS}, "chain": {{"k0": 1, "eta0": 500}}"#));
    let outcome = run_scenario(Scenario::SingleChain, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(dir.path(), &cfg, &outcome).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv.starts_with("t,k,force_re,force_im,l2_norm,sobolev_norm,gevrey_norm,event\n"));
    assert!(csv.contains("window_exit:1"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenario"], "single_chain");
    assert_eq!(manifest["passed"], true);
    assert_eq!(manifest["schedules"][0]["k0"], 1);
    assert!(manifest["oracle"][0]["k0_opt"].is_u64());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["windows"], 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn chains_are_linear_in_the_data(scale in 1e-3f64..1e3, eta0 in 200.0f64..2000.0) {
        let bg = Background::new(4.1, Profile::new(0.05, 10.0).unwrap()).unwrap();
        let w = Kernel::coulomb();
        let sched = schedule(1, eta0, 0.05).unwrap();
        let h0 = gaussian_packet(1, eta0, packet_grid(&sched, 0.05 / 8.0).unwrap()).unwrap();
        let ctl = StepControl { record_forces: false, event_norms: false, ..StepControl::default() };
        let (a, _) = integrate_chain(&h0, &sched, &bg, &w, &ctl).unwrap();
        let (b, _) = integrate_chain(&h0.scaled(scale), &sched, &bg, &w, &ctl).unwrap();
        let gap = a.scaled(scale).combine(1.0, &b, -1.0).unwrap().max_modulus();
        prop_assert!(gap <= 1e-12 * b.max_modulus());
    }
}
