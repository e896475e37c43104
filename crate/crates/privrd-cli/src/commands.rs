use std::fs;
use std::path::{Path, PathBuf};

use privrd::data_model::{Dataset, Interval, ParamSpace, RngStream, SequenceSpec, Shape};
use privrd::diagnostics::{binned_means, dp_histogram, dp_test_power, mccrary_statistic};
use privrd::identification::{
    containment, credible_region, decision_consistency_experiment, fit_decision_density, predict_from_fit,
    ExampleRandomSet, IntervalSet, Selector, SetLaw,
};
use privrd::mechanisms::{
    audit_dp, bernoulli_laplace_mean, exponential_mean_dp, laplace_mean_dp, truncated_weighted_mean_dp,
    MechanismReport, NoiseKind, Normalization,
};
use privrd::montecarlo::{
    run_paths, run_rejection_table, PathConfig, Scenario, ScenarioConfig, SCENARIO2_NOISE_VARIANCE,
};
use privrd::output::{csv_string, fmt_float, with_provenance, write_text, Provenance};
use privrd::rdd::{dp_rdd_estimate, raw_estimate, select_bandwidth, BandwidthStrategy, Design, NoiseSpec};
use privrd::regimes::{
    classify_bernoulli_regime, classify_truncation_regime, preset_setup, simulate_limit_convergence, SimulationSetup,
};
use privrd::sensitivity::{
    ate_propensity_sensitivity, fuzzy_ll_sensitivity, local_linear_sensitivity, nr_boundary_sensitivity_with_model,
    sample_mean_sensitivity, weighted_mean_sensitivity_drop, weighted_mean_sensitivity_replace, NeighborhoodModel,
    SensitivityKind, SensitivityReport,
};
use privrd::KernelSpec;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::{
    Cli, Command, DiagnoseCmd, Estimator, IdentifyCmd, MechanismArgs, MechanismCmd, MechanismName, MontecarloCmd,
    RegimesCmd,
};

#[derive(Debug)]
pub enum CliError {
    Lib(privrd::Error),
    Config(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Lib(e) => e.code(),
            CliError::Config(_) => "ConfigError",
        }
    }

    /// 1 for domain errors, 2 for malformed configuration or input files.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if !e.is_input_error() => 1,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => e.fmt(f),
            CliError::Config(m) => write!(f, "configuration error: {m}"),
        }
    }
}

impl From<privrd::Error> for CliError {
    fn from(e: privrd::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn config_err<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Config(msg.into()))
}

struct Ctx<'a> {
    seed: u64,
    out: Option<&'a Path>,
    config: Option<Value>,
}

impl Ctx<'_> {
    fn stream(&self) -> RngStream {
        RngStream::new(self.seed, 0)
    }

    fn provenance(&self, command: &str, config: Value) -> Provenance {
        Provenance::new(command, self.seed, config)
    }

    fn write(&self, name: &str, text: &str) -> CliResult<Option<PathBuf>> {
        match self.out {
            Some(dir) => {
                let p = dir.join(name);
                write_text(&p, text)?;
                Ok(Some(p))
            }
            None => Ok(None),
        }
    }

    /// Attach provenance and write `<name>.json` when an output directory is set.
    fn finish(&self, name: &str, prov: &Provenance, value: Value) -> CliResult<Value> {
        let v = with_provenance(value, prov)?;
        self.write(&format!("{name}.json"), &serde_json::to_string_pretty(&v)?)?;
        Ok(v)
    }

    fn typed_config<T: for<'de> Deserialize<'de>>(&self) -> CliResult<Option<T>> {
        match &self.config {
            Some(v) => Ok(Some(serde_json::from_value(v.clone())?)),
            None => Ok(None),
        }
    }

    fn no_config(&self, command: &str) -> CliResult<()> {
        if self.config.is_some() {
            return config_err(format!("`{command}` takes its parameters from flags, not from --config"));
        }
        Ok(())
    }
}

pub fn run(cli: &Cli) -> CliResult<Value> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return config_err("--threads must be >= 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let config = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            Some(serde_json::from_str::<Value>(&text)?)
        }
        None => None,
    };
    let ctx = Ctx { seed: cli.seed, out: cli.out.as_deref(), config };
    match &cli.command {
        Command::Sensitivity(a) => {
            ctx.no_config("sensitivity")?;
            sensitivity(&ctx, a)
        }
        Command::Mechanism(m) => {
            ctx.no_config("mechanism")?;
            mechanism(&ctx, m)
        }
        Command::Regimes(r) => regimes(&ctx, r),
        Command::Rdd(a) => {
            ctx.no_config("rdd")?;
            rdd(&ctx, a)
        }
        Command::Diagnose(d) => {
            ctx.no_config("diagnose")?;
            diagnose(&ctx, d)
        }
        Command::Identify(i) => {
            ctx.no_config("identify")?;
            identify(&ctx, i)
        }
        Command::Montecarlo(m) => montecarlo(&ctx, m),
    }
}

fn interval(v: &Option<Vec<f64>>) -> CliResult<Interval> {
    match v.as_deref() {
        Some([lo, hi]) => Ok(Interval::new(*lo, *hi)?),
        Some(_) => config_err("ranges take two values"),
        None => Ok(Interval::unbounded()),
    }
}

/// Parse `coeff,n_power[,log_power]`.
fn sequence(s: &str) -> CliResult<SequenceSpec> {
    let parts: Vec<f64> =
        s.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| {
            CliError::Config(format!("cannot parse sequence `{s}`; expected coeff,n_power[,log_power]"))
        })?;
    match parts.as_slice() {
        [c] => Ok(SequenceSpec::constant(*c)?),
        [c, p] => Ok(SequenceSpec::new(*c, *p, 0.0)?),
        [c, p, l] => Ok(SequenceSpec::new(*c, *p, *l)?),
        _ => config_err(format!("sequence `{s}` has too many parts")),
    }
}

fn sensitivity(ctx: &Ctx, a: &crate::SensitivityArgs) -> CliResult<Value> {
    let kernel = KernelSpec::from_name(&a.kernel)?;
    let both = interval(&a.y_range)?;
    let y_left = if a.y_left.is_some() { interval(&a.y_left)? } else { both };
    let y_right = if a.y_right.is_some() { interval(&a.y_right)? } else { both };
    let n = a.n.unwrap_or(a.m_left + a.m_right);
    let finite = |v: f64, detail: &str| SensitivityReport::new(SensitivityKind::Finite { value: v }, detail);
    let report = match a.estimator {
        Estimator::SampleMean => {
            let v = sample_mean_sensitivity(n, both);
            if v.is_finite() {
                finite(v, "diam / N")
            } else {
                SensitivityReport::new(SensitivityKind::Infinite, "unbounded data range")
            }
        }
        Estimator::WeightedMean => {
            finite(weighted_mean_sensitivity_replace(a.t, a.c1, a.c2, a.d1, a.d2)?, "replace-one weighted mean")
        }
        Estimator::WeightedMeanDrop => {
            finite(weighted_mean_sensitivity_drop(a.t, a.c1, a.c2, a.d1, a.d2)?, "drop-one weighted mean")
        }
        Estimator::NrBoundary => {
            let model = if a.with_outside { NeighborhoodModel::WithOutside } else { NeighborhoodModel::Covering };
            nr_boundary_sensitivity_with_model(&kernel, y_left, y_right, a.m_left, a.m_right, n, model)?
        }
        Estimator::LocalLinear => {
            local_linear_sensitivity(&kernel, y_left, y_right, a.eigen_floor, a.m_left, a.m_right)
        }
        Estimator::FuzzyLl => fuzzy_ll_sensitivity(&kernel, y_left, y_right, a.treatment_variation)?,
        Estimator::Ate => ate_propensity_sensitivity(&kernel, interval(&a.x_range)?, sequence(&a.h)?, n),
    };
    let prov = ctx.provenance(
        "sensitivity",
        json!({
            "estimator": format!("{:?}", a.estimator),
            "kernel": kernel.name(),
            "y_left": [y_left.lo, y_left.hi],
            "y_right": [y_right.lo, y_right.hi],
            "n": n, "m_left": a.m_left, "m_right": a.m_right,
            "with_outside": a.with_outside, "eigen_floor": a.eigen_floor,
            "treatment_variation": a.treatment_variation,
            "t": a.t, "c1": a.c1, "c2": a.c2, "d1": a.d1, "d2": a.d2,
            "x_range": a.x_range, "h": a.h,
        }),
    );
    ctx.finish("sensitivity", &prov, serde_json::to_value(&report)?)
}

fn noise_kind(s: &str) -> CliResult<NoiseKind> {
    match s {
        "laplace" => Ok(NoiseKind::Laplace),
        "exponential" => Ok(NoiseKind::Exponential),
        _ => config_err(format!("unknown noise `{s}`; expected laplace or exponential")),
    }
}

fn mechanism_shape(m: MechanismName) -> Shape {
    match m {
        MechanismName::TruncatedMean => Shape::Weighted,
        _ => Shape::Univariate,
    }
}

fn run_mechanism(a: &MechanismArgs, data: &Dataset, stream: &RngStream) -> privrd::Result<MechanismReport> {
    match a.mechanism {
        MechanismName::LaplaceMean => laplace_mean_dp(data, a.epsilon, stream),
        MechanismName::ExponentialMean => exponential_mean_dp(data, a.epsilon, a.gamma, stream),
        MechanismName::TruncatedMean => {
            let kind = if a.noise == "exponential" { NoiseKind::Exponential } else { NoiseKind::Laplace };
            truncated_weighted_mean_dp(data, a.epsilon, a.delta_trunc, kind, a.gamma, stream)
        }
        MechanismName::BernoulliLaplace => {
            let norm = if a.realized { Normalization::Realized } else { Normalization::Expected };
            bernoulli_laplace_mean(data, a.pi, a.lambda, &ParamSpace::unit(), norm, stream)
        }
    }
}

fn mechanism_config(a: &MechanismArgs) -> Value {
    json!({
        "mechanism": format!("{:?}", a.mechanism),
        "data": a.data, "epsilon": a.epsilon, "gamma": a.gamma,
        "delta_trunc": a.delta_trunc, "noise": a.noise,
        "pi": a.pi, "lambda": a.lambda, "realized": a.realized,
    })
}

fn mechanism(ctx: &Ctx, m: &MechanismCmd) -> CliResult<Value> {
    match m {
        MechanismCmd::Run(a) => {
            noise_kind(&a.noise)?;
            let data = Dataset::from_csv_path(&a.data, mechanism_shape(a.mechanism))?;
            let report = run_mechanism(a, &data, &ctx.stream())?;
            let prov = ctx.provenance("mechanism run", mechanism_config(a));
            ctx.finish("mechanism", &prov, serde_json::to_value(&report)?)
        }
        MechanismCmd::Audit { mech, data_prime, trials, delta } => {
            noise_kind(&mech.noise)?;
            let shape = mechanism_shape(mech.mechanism);
            let d = Dataset::from_csv_path(&mech.data, shape)?;
            let dp = Dataset::from_csv_path(data_prime, shape)?;
            let report = audit_dp(
                |data, s| run_mechanism(mech, data, s).map(|r| r.estimate),
                &d,
                &dp,
                *trials,
                *delta,
                &ctx.stream(),
            )?;
            let analytic = run_mechanism(mech, &d, &ctx.stream())?.privacy;
            let mut cfg = mechanism_config(mech);
            cfg["data_prime"] = json!(data_prime);
            cfg["trials"] = json!(trials);
            cfg["delta"] = json!(delta);
            let prov = ctx.provenance("mechanism audit", cfg);
            ctx.finish("audit", &prov, json!({ "audit": report, "analytic": analytic }))
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    setup: SimulationSetup,
    n_grid: Vec<u64>,
    replications: usize,
}

fn regimes(ctx: &Ctx, r: &RegimesCmd) -> CliResult<Value> {
    match r {
        RegimesCmd::Classify { family, pi, delta, lambda } => {
            ctx.no_config("regimes classify")?;
            let pi_s = sequence(pi)?;
            let label = if family == "truncated" {
                let d = delta
                    .as_deref()
                    .map_or_else(|| config_err("--delta is required for the truncated family"), sequence)?;
                classify_truncation_regime(&pi_s, &d)?
            } else {
                let l = lambda
                    .as_deref()
                    .map_or_else(|| config_err("--lambda is required for the bernoulli family"), sequence)?;
                classify_bernoulli_regime(&l, &pi_s)
            };
            let prov = ctx.provenance(
                "regimes classify",
                json!({ "family": family, "pi": pi, "delta": delta, "lambda": lambda }),
            );
            ctx.finish("regime", &prov, serde_json::to_value(label)?)
        }
        RegimesCmd::Simulate { preset, n_grid, replications } => {
            let cfg = match (ctx.typed_config::<SimulateConfig>()?, preset) {
                (Some(c), None) => c,
                (None, Some(p)) => {
                    SimulateConfig { setup: preset_setup(p)?, n_grid: n_grid.clone(), replications: *replications }
                }
                (Some(_), Some(_)) => return config_err("give either --preset or --config, not both"),
                (None, None) => return config_err("regimes simulate needs --preset or --config"),
            };
            let report = simulate_limit_convergence(&cfg.setup, &cfg.n_grid, cfg.replications, &ctx.stream())?;
            let prov = ctx.provenance(
                "regimes simulate",
                json!({ "setup": cfg.setup, "n_grid": cfg.n_grid, "replications": cfg.replications }),
            );
            let rows: Vec<Vec<String>> = report
                .points
                .iter()
                .map(|p| {
                    vec![
                        p.n.to_string(),
                        p.distance.metric_name.clone(),
                        fmt_float(p.distance.metric),
                        fmt_float(p.distance.ks),
                        p.distance.levy.map_or("nan".into(), fmt_float),
                        fmt_float(p.mean),
                    ]
                })
                .collect();
            ctx.write(
                "convergence.csv",
                &csv_string(Some(&prov), &["N", "metric", "distance", "ks", "levy", "mean"], &rows)?,
            )?;
            ctx.finish("convergence", &prov, serde_json::to_value(&report)?)
        }
    }
}

fn rdd(ctx: &Ctx, a: &crate::RddArgs) -> CliResult<Value> {
    let design = Design::from_name(&a.design)?;
    let kernel = KernelSpec::from_name(&a.kernel)?;
    let data = Dataset::from_csv_path(&a.data, Shape::Rdd)?;
    let strategy = match a.bandwidth {
        Some(h) => BandwidthStrategy::Fixed { h },
        None if a.bandwidth_strategy == "ik" => BandwidthStrategy::Ik,
        None => BandwidthStrategy::RuleOfThumb { c_h: 1.84 },
    };
    let h = select_bandwidth(&data, a.cutoff, strategy, &kernel)?;
    let y = interval(&a.y_range)?;
    let sens = || -> CliResult<SensitivityReport> {
        Ok(match design {
            Design::SharpNr => {
                nr_boundary_sensitivity_with_model(&kernel, y, y, 1, 1, data.len() as u64, NeighborhoodModel::Covering)?
            }
            Design::SharpLl => local_linear_sensitivity(&kernel, y, y, None, 1, 1),
            Design::FuzzyLl => fuzzy_ll_sensitivity(&kernel, y, y, true)?,
            Design::Ate => {
                let xs: Vec<f64> = data.as_rdd()?.iter().map(|o| o.x).collect();
                let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                ate_propensity_sensitivity(
                    &kernel,
                    Interval::new(lo, hi)?,
                    SequenceSpec::constant(h)?,
                    data.len() as u64,
                )
            }
        })
    };
    let noise = match (a.epsilon, a.noise_variance) {
        (Some(epsilon), _) => Some(NoiseSpec::Calibrated { epsilon, sensitivity: sens()? }),
        (None, Some(variance)) => Some(NoiseSpec::FixedVariance { variance, sensitivity: Some(sens()?) }),
        (None, None) => None,
    };
    let result = match &noise {
        Some(n) => serde_json::to_value(dp_rdd_estimate(design, &data, a.cutoff, &kernel, h, n, None, &ctx.stream())?)?,
        None => json!({ "estimate": raw_estimate(design, &data, a.cutoff, &kernel, h, a.clip)?, "h": h }),
    };
    let prov = ctx.provenance(
        "rdd",
        json!({
            "data": a.data, "design": design.name(), "kernel": kernel.name(), "cutoff": a.cutoff,
            "bandwidth": strategy, "h": h, "epsilon": a.epsilon, "noise_variance": a.noise_variance,
            "y_range": a.y_range, "clip": a.clip,
        }),
    );
    ctx.finish("rdd", &prov, result)
}

fn xs_of(path: &Path) -> CliResult<Vec<f64>> {
    Ok(Dataset::from_csv_path(path, Shape::Univariate)?.as_univariate()?.to_vec())
}

fn diagnose(ctx: &Ctx, d: &DiagnoseCmd) -> CliResult<Value> {
    match d {
        DiagnoseCmd::Mccrary { data, cutoff, bandwidth, bins } => {
            let m = mccrary_statistic(&xs_of(data)?, *cutoff, *bandwidth, *bins)?;
            let prov = ctx.provenance(
                "diagnose mccrary",
                json!({ "data": data, "cutoff": cutoff, "bandwidth": bandwidth, "bins": bins }),
            );
            ctx.finish("mccrary", &prov, serde_json::to_value(m)?)
        }
        DiagnoseCmd::Power { se, tau, variance, alpha, sims } => {
            let p = dp_test_power(*se, *tau, *variance, *alpha, *sims, &ctx.stream())?;
            let prov = ctx.provenance(
                "diagnose power",
                json!({ "se": se, "tau": tau, "variance": variance, "alpha": alpha, "sims": sims }),
            );
            ctx.finish("power", &prov, serde_json::to_value(p)?)
        }
        DiagnoseCmd::Bins { data, cutoff, width } => {
            let ds = Dataset::from_csv_path(data, Shape::Rdd)?;
            let b = binned_means(&ds, *cutoff, *width)?;
            let prov = ctx.provenance("diagnose bins", json!({ "data": data, "cutoff": cutoff, "width": width }));
            ctx.write("bins.csv", &b.to_csv(Some(&prov))?)?;
            ctx.write("bins.svg", &b.to_svg("Binned outcome means", Some(*cutoff), Some(&prov))?)?;
            ctx.finish("bins", &prov, serde_json::to_value(&b)?)
        }
        DiagnoseCmd::Dphist { data, lo, hi, bins, epsilon } => {
            if !(hi > lo) || *bins == 0 {
                return config_err("need hi > lo and bins >= 1");
            }
            let edges: Vec<f64> = (0..=*bins).map(|k| lo + (hi - lo) * k as f64 / *bins as f64).collect();
            let h = dp_histogram(&xs_of(data)?, &edges, *epsilon, &ctx.stream())?;
            let prov = ctx.provenance(
                "diagnose dphist",
                json!({ "data": data, "lo": lo, "hi": hi, "bins": bins, "epsilon": epsilon }),
            );
            ctx.write("dphist.csv", &h.to_csv(Some(&prov))?)?;
            ctx.write("dphist.svg", &h.to_svg("DP histogram", None, Some(&prov))?)?;
            ctx.finish("dphist", &prov, serde_json::to_value(&h)?)
        }
    }
}

fn identify(ctx: &Ctx, i: &IdentifyCmd) -> CliResult<Value> {
    match i {
        IdentifyCmd::CredibleRegion { t, alpha } => {
            let r = credible_region(*t, *alpha)?;
            let prov = ctx.provenance("identify credible-region", json!({ "t": t, "alpha": alpha }));
            let mut v = serde_json::to_value(r)?;
            v["note"] = json!(
                "z_closed_form = 1 - (t(1-t))^alpha encloses posterior mass 1 - 2 alpha; the region of mass 1 - alpha has exponent alpha/2"
            );
            ctx.finish("credible_region", &prov, v)
        }
        IdentifyCmd::Containment { theta0, k_lo, k_hi } => {
            let law = SetLaw::Example(ExampleRandomSet::new(*theta0)?);
            let k = IntervalSet::new(*k_lo, *k_hi)?;
            let prov = ctx.provenance("identify containment", json!({ "theta0": theta0, "k": [k_lo, k_hi] }));
            ctx.finish("containment", &prov, json!({ "containment": containment(&law, &k) }))
        }
        IdentifyCmd::FitMap { r, k, half_width, no_constraint, signed } => {
            let w = *half_width;
            if !(w > 0.0 && w < 0.5) || *k < 2 {
                return config_err("need half-width in (0, 0.5) and k >= 2");
            }
            let grid: Vec<f64> = (0..*k).map(|j| w + (1.0 - 2.0 * w) * j as f64 / (*k - 1) as f64).collect();
            let sampler = |th: f64, _: &RngStream| IntervalSet { lo: th - w, hi: th + w };
            let fit = fit_decision_density(&grid, sampler, *r, !no_constraint, *signed, &ctx.stream())?;
            let held_out: Vec<f64> = (0..*k - 1).map(|j| 0.5 * (grid[j] + grid[j + 1])).collect();
            let mae = held_out
                .iter()
                .map(|&th| (predict_from_fit(&fit, &IntervalSet { lo: th - w, hi: th + w }) - th).abs())
                .sum::<f64>()
                / held_out.len() as f64;
            let prov = ctx.provenance(
                "identify fit-map",
                json!({ "r": r, "k": k, "half_width": w, "constraint": !no_constraint, "signed": signed }),
            );
            ctx.finish("fit_map", &prov, json!({ "fit": fit, "held_out_mae": mae }))
        }
        IdentifyCmd::Consistency { theta0, n_grid, replications, selector, delta, noise_scale } => {
            let sel = if selector == "uniform" { Selector::Uniform } else { Selector::ExampleF { delta: *delta } };
            let rep =
                decision_consistency_experiment(*theta0, n_grid, *replications, sel, *noise_scale, &ctx.stream())?;
            let prov = ctx.provenance(
                "identify consistency",
                json!({ "theta0": theta0, "n_grid": n_grid, "replications": replications, "selector": sel, "noise_scale": noise_scale }),
            );
            ctx.finish("consistency", &prov, serde_json::to_value(&rep)?)
        }
    }
}

fn montecarlo(ctx: &Ctx, m: &MontecarloCmd) -> CliResult<Value> {
    match m {
        MontecarloCmd::Rejection { sims, n_values, variances } => {
            let cfg = match ctx.typed_config::<ScenarioConfig>()? {
                Some(c) => c,
                None => {
                    let mut c = ScenarioConfig::rejection_study(*sims, ctx.seed);
                    if let Some(n) = n_values {
                        c.n_values = n.clone();
                    }
                    if let Some(v) = variances {
                        c.noise_variances = v.clone();
                    }
                    c
                }
            };
            cfg.validate()?;
            let table = run_rejection_table(&cfg)?;
            let prov = Provenance::new("montecarlo rejection", cfg.seed, serde_json::to_value(&cfg)?);
            ctx.write("rejection.csv", &table.to_csv(Some(&prov))?)?;
            ctx.finish("rejection", &prov, json!({ "cells": table.cells, "fits": table.fits }))
        }
        MontecarloCmd::Paths { scenario, variance, paths } => {
            let cfg = match ctx.typed_config::<PathConfig>()? {
                Some(c) => c,
                None => {
                    let sc = Scenario::from_number(*scenario)?;
                    let v = variance.unwrap_or(match sc {
                        Scenario::S1 => 0.0,
                        Scenario::S2 => SCENARIO2_NOISE_VARIANCE,
                    });
                    let mut c = PathConfig::figure(sc, v, ctx.seed);
                    c.n_paths = *paths;
                    c
                }
            };
            cfg.validate()?;
            let res = run_paths(&cfg)?;
            let prov = Provenance::new("montecarlo paths", cfg.seed, serde_json::to_value(&cfg)?);
            let stem = format!("paths_s{}_var{}", if cfg.scenario == Scenario::S1 { 1 } else { 2 }, cfg.variance);
            ctx.write(&format!("{stem}.csv"), &res.to_csv(Some(&prov))?)?;
            ctx.write(&format!("{stem}.svg"), &res.to_svg(None, Some(&prov))?)?;
            let terminal: Vec<f64> = res.estimates.iter().filter_map(|p| p.last().copied()).collect();
            ctx.finish(
                &stem,
                &prov,
                json!({ "terminal_spread": res.terminal_spread(), "terminal_estimates": terminal }),
            )
        }
    }
}
