//! Estimates are bit-identical across runs and across the parallel and
//! sequential builds. The fixture was produced by the default build; run this
//! test with and without `--no-default-features`.
//! Set `RNLEVY_UPDATE_GOLDEN=1` to regenerate it.

use rnlevy_core::{gen_panel, run_estimate, EstimateConfig, SimModel, SimSpec};

const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/estimate_golden.json");

fn estimate_json(seed: u64) -> String {
    let spec = SimSpec {
        model: SimModel::JumpDiffusion,
        lambda: 3.0,
        paths: 700,
        steps: 128,
        seed,
        ..SimSpec::default()
    };
    let panel = gen_panel(&spec).unwrap();
    let cfg = EstimateConfig { bootstrap_resamples: 40, bootstrap_seed: seed, ..Default::default() };
    serde_json::to_string_pretty(&run_estimate(&panel, &cfg).unwrap()).unwrap()
}

#[test]
fn repeated_runs_are_identical() {
    assert_eq!(estimate_json(5), estimate_json(5));
    assert_ne!(estimate_json(5), estimate_json(6));
}

#[test]
fn matches_golden_fixture() {
    let got = estimate_json(5);
    if std::env::var_os("RNLEVY_UPDATE_GOLDEN").is_some() {
        std::fs::write(GOLDEN, &got).unwrap();
    }
    let want = std::fs::read_to_string(GOLDEN).expect("golden fixture missing");
    assert!(got == want, "estimate differs from {GOLDEN}");
}
