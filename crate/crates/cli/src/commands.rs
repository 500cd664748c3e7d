use std::fs::File;
use std::io::BufReader;

use rnlevy_core::measure::{build_bundle, default_grid, identity_report, IdentityReport, QBundle};
use rnlevy_core::pipeline::{run_estimate, Estimate};
use rnlevy_core::pricing::{price_call_calm, CallQuote, CallSpec};
use rnlevy_core::sim::{
    gbm_theory_check, gen_panel, lambda_distribution_check, qmd_diagnostic,
    trader_sample_lambda, GbmCheckReport, QmdReport, SimModel, SimSpec,
};
use rnlevy_core::ks::{ks_test, KsReport};
use rnlevy_core::{
    estimate_mean_function, ingest_panel, neutrality_check, prices_densities, CalmVerdict,
    MeanSource, NeutralityReport, PanelMode, PartitionLadder, PricePanel,
};
use serde::Serialize;

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::report::{to_json, write_atomic, Envelope};

pub const NOT_SUPPORTED: &str = "not supported by prices";

fn load_panel(cfg: &RunConfig) -> Result<PricePanel, CliError> {
    if let Some(path) = &cfg.input {
        let file = File::open(path).map_err(|e| CliError::Input {
            what: path.display().to_string(),
            msg: e.to_string(),
        })?;
        return Ok(ingest_panel(BufReader::new(file), cfg.mode)?);
    }
    if let Some(spec) = &cfg.simulate {
        return Ok(gen_panel(&sim_spec(spec, cfg))?);
    }
    Err(CliError::missing("--input"))
}

fn sim_spec(spec: &SimSpec, cfg: &RunConfig) -> SimSpec {
    let mut s = spec.clone();
    if let Some(seed) = cfg.seed {
        s.seed = seed;
    }
    s
}

fn emit<T: Serialize>(cfg: &RunConfig, command: Command, result: T) -> Result<(), CliError> {
    let bytes = to_json(&Envelope::new(command, cfg, result));
    write_atomic(cfg.output.as_deref(), &bytes)
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<(), CliError> {
    match command {
        Command::Simulate => simulate(cfg),
        Command::Estimate => estimate(cfg),
        Command::Price => price(cfg),
        Command::Verify => verify(cfg),
    }
}

fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = sim_spec(cfg.simulate.as_ref().ok_or_else(|| CliError::missing("[simulate]"))?, cfg);
    let panel = gen_panel(&spec)?;
    let mut bytes = Vec::new();
    panel.write_csv(&mut bytes)?;
    write_atomic(cfg.output.as_deref(), &bytes)
}

fn estimate(cfg: &RunConfig) -> Result<(), CliError> {
    let panel = load_panel(cfg)?;
    let est = run_estimate(&panel, &cfg.estimate)?;
    emit(cfg, Command::Estimate, est)
}

fn call_spec(cfg: &RunConfig, spot: Option<f64>) -> Result<CallSpec, CliError> {
    let c = &cfg.call;
    let spot = c.spot.or(spot).ok_or_else(|| CliError::missing("--spot"))?;
    let strike = c.strike.ok_or_else(|| CliError::missing("--strike"))?;
    Ok(CallSpec::new(spot, strike, c.rate.curve()?, c.t0, c.t0 + c.expiry)?)
}

#[derive(Serialize)]
struct PriceResult<'a> {
    quote: CallQuote,
    supported: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    watermark: Option<&'static str>,
    spot: f64,
    strike: f64,
    expiry: f64,
    rho: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ln_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    neutrality: Option<&'a NeutralityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    calm: Option<&'a CalmVerdict>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    bundles: Vec<QBundle>,
}

fn price(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.input.is_none() && cfg.simulate.is_none() {
        let sigma_h = cfg.call.sigma_h.ok_or_else(|| CliError::missing("--input or call.sigma_h"))?;
        if !(sigma_h >= 0.0) {
            return Err(rnlevy_core::Error::InvalidArgument(format!("sigma_h {sigma_h} < 0")).into());
        }
        let spec = call_spec(cfg, None)?;
        let result = PriceResult {
            quote: price_call_calm(sigma_h, &spec),
            supported: true,
            watermark: None,
            spot: spec.s_t0,
            strike: spec.strike,
            expiry: spec.maturity - spec.t0,
            rho: spec.rho(),
            ln_a: None,
            neutrality: None,
            calm: None,
            bundles: Vec::new(),
        };
        return emit(cfg, Command::Price, result);
    }
    let panel = load_panel(cfg)?;
    let est = run_estimate(&panel, &cfg.estimate)?;
    let supported = est.neutrality.verdict;
    if !supported && !cfg.force {
        return Err(CliError::NotNeutral {
            residual: est.neutrality.residual_h,
        });
    }
    let spec = call_spec(cfg, Some(est.mean_t0))?;
    let priced = est.price(&spec)?;
    let result = PriceResult {
        quote: priced.quote,
        supported,
        watermark: (!supported).then_some(NOT_SUPPORTED),
        spot: spec.s_t0,
        strike: spec.strike,
        expiry: spec.maturity - spec.t0,
        rho: spec.rho(),
        ln_a: Some(est.ln_a(&spec)),
        neutrality: Some(&est.neutrality),
        calm: Some(&est.calm),
        bundles: priced.bundles,
    };
    emit(cfg, Command::Price, result)
}

#[derive(Serialize)]
struct VerifyResult<'a> {
    passed: bool,
    identities: IdentityReport,
    /// Realized `ln(p_T / p_t0)` against the constructed `Q`.
    lambda_ks: KsReport,
    /// Trader-measure draws of `Λ` at the finest level against `Q`.
    trader_lambda_ks: KsReport,
    qmd: Option<QmdReport>,
    gbm: Option<GbmCheckReport>,
    estimate: &'a Estimate,
}

fn verify(cfg: &RunConfig) -> Result<(), CliError> {
    let panel = load_panel(cfg)?;
    let est = run_estimate(&panel, &cfg.estimate)?;
    let rho = cfg.call.rate.curve()?.integral(est.t0, est.t0 + est.horizon)?;
    let nr = neutrality_check(&est.triple, est.horizon, Some(est.neutrality.tolerance));
    let bundle = build_bundle(&est.horizon_params, &nr, est.ln_growth, rho);
    let v = &cfg.verify;
    let identities = identity_report(&bundle, &default_grid(&bundle, v.grid_points), v.identity_tol);

    let source = match panel.mode() {
        PanelMode::Ensemble => MeanSource::EmpiricalEnsemble,
        PanelMode::SinglePath => MeanSource::ExponentialTrend,
    };
    let dp = prices_densities(&panel, estimate_mean_function(&panel, source)?)?;
    let lambda_ks = lambda_distribution_check(&dp, &bundle.q, v.ks_alpha);
    let ladder = PartitionLadder::finest(
        panel.grid(),
        cfg.estimate.levels,
        cfg.estimate.refinement,
        cfg.estimate.scheme,
    )?;
    let seed = cfg.seed.unwrap_or(cfg.estimate.bootstrap_seed);
    let draws = trader_sample_lambda(&dp, ladder.finest_level(), panel.n_paths(), seed);
    let trader_lambda_ks = ks_test(&draws, |x| bundle.q.cdf(x), |x| bundle.q.cdf_left(x), v.ks_alpha);

    let grid = panel.grid();
    let dt = grid[1] - grid[0];
    let deltas: Vec<f64> = v
        .qmd_steps
        .iter()
        .filter(|&&s| s < grid.len())
        .map(|&s| s as f64 * dt)
        .collect();
    let qmd = qmd_diagnostic(&dp, &deltas).ok();
    let gbm = match (&cfg.simulate, &cfg.input) {
        (Some(spec), None) if spec.model == SimModel::Gbm || spec.lambda == 0.0 => {
            Some(gbm_theory_check(&dp, &ladder, spec.sigma, &cfg.estimate.stats))
        }
        _ => None,
    };
    let passed = identities.max_deviation() <= v.identity_tol;
    let violation = (!passed).then(|| {
        let (check, deviation) = [
            ("martingale", identities.martingale),
            ("tilt", identities.tilt),
            ("tail", identities.tail),
        ]
        .into_iter()
        .find(|(_, d)| !(*d <= v.identity_tol))
        .unwrap_or(("martingale", identities.martingale));
        rnlevy_core::Error::IdentityViolation {
            check,
            deviation,
            tol: v.identity_tol,
        }
    });
    emit(
        cfg,
        Command::Verify,
        VerifyResult {
            passed,
            identities,
            lambda_ks,
            trader_lambda_ks,
            qmd,
            gbm,
            estimate: &est,
        },
    )?;
    match violation {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}
