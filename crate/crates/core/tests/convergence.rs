//! Monte Carlo scaling of the ensemble statistics on GBM panels.

use rnlevy_core::fluctuation::{level_stats, StatsConfig};
use rnlevy_core::{
    estimate_mean_function, gen_panel, prices_densities, LadderScheme, MeanSource,
    PartitionLadder, SimSpec,
};

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn finest_stats(paths: usize, steps: usize, seed: u64) -> rnlevy_core::fluctuation::LevelStats {
    let spec = SimSpec { paths, steps, seed, ..SimSpec::default() };
    let panel = gen_panel(&spec).unwrap();
    let m = estimate_mean_function(&panel, MeanSource::EmpiricalEnsemble).unwrap();
    let dp = prices_densities(&panel, m).unwrap();
    let ladder = PartitionLadder::finest(panel.grid(), 1, 2, LadderScheme::Dyadic).unwrap();
    level_stats(&dp, ladder.finest_level(), &StatsConfig::default())
}

#[test]
fn s2_error_scales_like_inverse_root_m() {
    // RMS error of S2 against its limit sigma² T / 4 over replicate panels.
    let mut pts = Vec::new();
    for &m in &[250usize, 1000, 4000] {
        let reps = 12;
        let mse: f64 = (0..reps)
            .map(|r| (finest_stats(m, 128, 1000 * m as u64 + r).s2 - 0.01).powi(2))
            .sum::<f64>()
            / reps as f64;
        pts.push(((m as f64).ln(), mse.sqrt().ln()));
    }
    let b = slope(&pts);
    assert!((-0.7..=-0.3).contains(&b), "slope {b}, points {pts:?}");
}

#[test]
fn tilted_drift_is_negative() {
    let s = finest_stats(4000, 256, 17);
    assert!(s.s1 < 0.0, "S1 = {}", s.s1);
    // E_tilted[sqrt(p_j/p_{j-1}) - 1] ~ -sigma² delta / 8 per interval.
    assert!((s.s1 / -0.005 - 1.0).abs() < 0.2, "S1 = {}", s.s1);
}

#[test]
fn max_term_shrinks_linearly_with_mesh() {
    let spec = SimSpec { paths: 4000, steps: 1024, seed: 29, ..SimSpec::default() };
    let panel = gen_panel(&spec).unwrap();
    let m = estimate_mean_function(&panel, MeanSource::EmpiricalEnsemble).unwrap();
    let dp = prices_densities(&panel, m).unwrap();
    let ladder = PartitionLadder::finest(panel.grid(), 5, 2, LadderScheme::Dyadic).unwrap();
    let pts: Vec<(f64, f64)> = ladder
        .levels
        .iter()
        .map(|l| {
            let s = level_stats(&dp, l, &StatsConfig::default());
            (l.mesh.ln(), s.max_term.ln())
        })
        .collect();
    let b = slope(&pts);
    assert!((0.8..=1.2).contains(&b), "slope {b}, points {pts:?}");
}
