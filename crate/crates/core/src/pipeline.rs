//! End-to-end estimation and pricing on a price panel.

use serde::{Deserialize, Serialize};

use crate::error::{Result, Warning};
use crate::fluctuation::{
    calm_diagnostic, cluster_detect, level_stats, CalmConfig, CalmVerdict, ClusterSet,
    LevelStats, StatsConfig, Verdict,
};
use crate::levy::{
    bootstrap_triple, estimate_triple, neutrality_check, HorizonParams, JumpNormalization,
    LevyTripleEstimate, NeutralityReport, TripleConfig,
};
use crate::market_data::{
    estimate_mean_function, prices_densities, LadderScheme, MeanSource, PanelMode,
    PartitionLadder, PricePanel,
};
use crate::measure::{build_bundle, QBundle};
use crate::pricing::{
    mixture_price, price_call, price_call_calm, CallQuote, CallSpec, QuoteNeutrality,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    pub scheme: LadderScheme,
    pub levels: usize,
    pub refinement: usize,
    pub stats: StatsConfig,
    pub calm: CalmConfig,
    pub triple: TripleConfig,
    pub tol_neutrality: Option<f64>,
    pub bootstrap_resamples: usize,
    pub bootstrap_seed: u64,
    pub cluster_tol: f64,
    /// Explicit cluster weights, overriding the equal default.
    pub cluster_weights: Option<Vec<f64>>,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            scheme: LadderScheme::Dyadic,
            levels: 3,
            refinement: 4,
            stats: StatsConfig::default(),
            calm: CalmConfig::default(),
            triple: TripleConfig::default(),
            tol_neutrality: None,
            bootstrap_resamples: 200,
            bootstrap_seed: 0,
            cluster_tol: 2e-3,
            cluster_weights: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSummary {
    pub k: usize,
    pub mesh: f64,
    pub s1: f64,
    pub s2: f64,
    pub s2_se: f64,
    pub s2_trunc: Vec<(f64, f64)>,
    pub tail: Vec<(f64, f64)>,
    pub max_term: f64,
}

impl From<&LevelStats> for LevelSummary {
    fn from(s: &LevelStats) -> Self {
        LevelSummary {
            k: s.k,
            mesh: s.mesh,
            s1: s.s1,
            s2: s.s2,
            s2_se: s.s2_se(),
            s2_trunc: s.s2_trunc.clone(),
            tail: s.tail.clone(),
            max_term: s.max_term,
        }
    }
}

/// Residual under the normalization not selected, for comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlternativeResidual {
    pub normalization: JumpNormalization,
    pub residual_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub mode: PanelMode,
    pub mean_source: MeanSource,
    pub n_paths: usize,
    pub t0: f64,
    pub horizon: f64,
    /// Mean function at `t0`.
    pub mean_t0: f64,
    /// `ln(m(T) / m(t0))`.
    pub ln_growth: f64,
    pub scheme: LadderScheme,
    pub levels: Vec<LevelSummary>,
    pub calm: CalmVerdict,
    pub diffuse_cutoff: f64,
    pub triple: LevyTripleEstimate,
    pub horizon_params: HorizonParams,
    pub neutrality: NeutralityReport,
    pub alternative: AlternativeResidual,
    pub clusters: ClusterSet,
    pub warnings: Vec<Warning>,
}

/// Runs the estimation pipeline: mean function, densities, ladder, level
/// statistics, calm diagnostic, triple, bootstrap, neutrality and clusters.
pub fn run_estimate(panel: &PricePanel, cfg: &EstimateConfig) -> Result<Estimate> {
    let mut warnings = Vec::new();
    let source = match panel.mode() {
        PanelMode::Ensemble => MeanSource::EmpiricalEnsemble,
        PanelMode::SinglePath => {
            warnings.push(Warning::SinglePathTrend);
            MeanSource::ExponentialTrend
        }
    };
    let mean = estimate_mean_function(panel, source)?;
    let ln_growth = mean.ln_growth();
    let mean_t0 = mean.at_index(0);
    let dp = prices_densities(panel, mean)?;
    let grid = panel.grid();
    let ladder = PartitionLadder::finest(grid, cfg.levels, cfg.refinement, cfg.scheme)?;
    let stats: Vec<LevelStats> = ladder
        .levels
        .iter()
        .map(|l| level_stats(&dp, l, &cfg.stats))
        .collect();
    for s in &stats {
        for w in &s.warnings {
            if !warnings.contains(w) {
                warnings.push(w.clone());
            }
        }
    }
    let calm = calm_diagnostic(&stats, &cfg.calm);
    let cutoff = calm.diffuse_cutoff();
    let t0 = grid[0];
    let horizon = panel.horizon();
    let (mut triple, horizon_params, w) = estimate_triple(&stats, horizon, cutoff, &cfg.triple)?;
    warnings.extend(w);
    if cfg.bootstrap_resamples > 1 {
        triple.stderr = Some(bootstrap_triple(
            &dp,
            ladder.finest_level(),
            stats.last().unwrap(),
            &triple,
            cutoff,
            &cfg.triple,
            cfg.bootstrap_resamples,
            cfg.bootstrap_seed,
        ));
    }
    let neutrality = neutrality_check(&triple, horizon, cfg.tol_neutrality);
    let other = match triple.normalization {
        JumpNormalization::Literal => JumpNormalization::Intensity,
        JumpNormalization::Intensity => JumpNormalization::Literal,
    };
    let alternative = AlternativeResidual {
        normalization: other,
        residual_h: neutrality_check(&triple.renormalized(other), horizon, Some(0.0)).residual_h,
    };

    // Subsequences for cluster detection: the ladder's finest level, its
    // odd-index thinning, and a staggered partition of the same size.
    let finest = ladder.finest_level();
    let coarse = &stats[..stats.len() - 1];
    let mut subsequences = vec![(format!("{}-{}", cfg.scheme, finest.k()), triple.clone())];
    let mut alternates = vec![("thinning", finest.thin_odd(grid))];
    if let Ok(st) = PartitionLadder::finest(grid, 1, 2, LadderScheme::Staggered) {
        alternates.push(("staggered", st.finest_level().clone()));
    }
    for (name, level) in alternates {
        let mut chain = coarse.to_vec();
        chain.push(level_stats(&dp, &level, &cfg.stats));
        if let Ok((t, _, _)) = estimate_triple(&chain, horizon, cutoff, &cfg.triple) {
            subsequences.push((format!("{name}-{}", level.k()), t));
        }
    }
    let mut clusters = cluster_detect(&subsequences, cfg.cluster_tol)?;
    // Each cluster is represented by the estimate of its first member so
    // that a single cluster reproduces the headline triple exactly.
    for c in &mut clusters.clusters {
        if let Some((_, t)) = subsequences.iter().find(|(n, _)| *n == c.members[0]) {
            c.triple = t.clone();
        }
    }
    if let Some(w) = &cfg.cluster_weights {
        clusters = clusters.with_weights(w)?;
    }

    Ok(Estimate {
        mode: panel.mode(),
        mean_source: source,
        n_paths: panel.n_paths(),
        t0,
        horizon,
        mean_t0,
        ln_growth,
        scheme: cfg.scheme,
        levels: stats.iter().map(LevelSummary::from).collect(),
        calm,
        diffuse_cutoff: cutoff,
        triple,
        horizon_params,
        neutrality,
        alternative,
        clusters,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Priced {
    pub quote: CallQuote,
    pub bundles: Vec<QBundle>,
}

impl Estimate {
    /// `ln a` over the option's life, extrapolating the fitted growth rate.
    pub fn ln_a(&self, spec: &CallSpec) -> f64 {
        self.ln_growth / self.horizon * (spec.maturity - spec.t0)
    }

    /// Bundle for a triple scaled to the option's life.
    pub fn bundle_for(&self, triple: &LevyTripleEstimate, spec: &CallSpec) -> QBundle {
        let life = spec.maturity - spec.t0;
        let nr = neutrality_check(triple, life, self.neutrality_tolerance_for(life));
        build_bundle(&triple.horizon(life), &nr, self.ln_a(spec), spec.rho())
    }

    fn neutrality_tolerance_for(&self, life: f64) -> Option<f64> {
        Some(self.neutrality.tolerance * life / self.horizon)
    }

    /// Prices a call. Several clusters give a mixture; a calm stock without
    /// atoms uses the closed form.
    pub fn price(&self, spec: &CallSpec) -> Result<Priced> {
        let neutrality = QuoteNeutrality {
            residual: self.neutrality.residual_h,
            verdict: self.neutrality.verdict,
        };
        if self.clusters.clusters.len() > 1 {
            let bundles: Vec<QBundle> = self
                .clusters
                .clusters
                .iter()
                .map(|c| self.bundle_for(&c.triple, spec))
                .collect();
            let mut quote = mixture_price(&self.clusters, spec, &bundles)?;
            quote.neutrality = Some(neutrality);
            return Ok(Priced { quote, bundles });
        }
        let bundle = self.bundle_for(&self.triple, spec);
        let mut quote = if self.calm.verdict == Verdict::Calm && self.triple.atoms.is_empty() {
            price_call(&bundle, spec)?;
            price_call_calm(bundle.q.gauss_var.sqrt(), spec)
        } else {
            price_call(&bundle, spec)?
        };
        quote.neutrality = Some(neutrality);
        Ok(Priced {
            quote,
            bundles: vec![bundle],
        })
    }
}
