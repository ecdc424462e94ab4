use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use ndarray::Array2;

use super::args::*;
use crate::backtest::{self, BacktestConfig, BacktestMode};
use crate::bounds::{self, InputDistribution, ReluJacobianSpec};
use crate::data::{self, Dataset, FactorPanel, HetPanelSpec, NoiseProfile};
use crate::error::{Error, Result};
use crate::gls::{fit_two_step, GlsConfig};
use crate::interpret::{self, report, Aggregation};
use crate::nn::{self, Activation, Architecture, InitRule, NetworkParams, TrainConfig};

/// Output directory with atomic (temp file + rename) writes.
pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn write(&self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            body(&mut w)?;
            w.flush()?;
        }
        tmp.persist(self.dir.join(name)).map_err(|e| Error::Io(e.error))?;
        Ok(())
    }

    pub fn write_str(&self, name: &str, text: &str) -> Result<()> {
        self.write(name, |w| Ok(w.write_all(text.as_bytes())?))
    }
}

pub fn parse_list<T: FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| Error::InvalidArgument(format!("{what}: cannot parse '{s}'")))
        })
        .collect()
}

/// `"50,10"` → two tanh hidden layers; `"linear"`, `"0"` or `""` → none.
pub fn parse_arch(text: &str, activation: &str) -> Result<Architecture> {
    let t = text.trim();
    if t.is_empty() || t == "0" || t.eq_ignore_ascii_case("linear") {
        return Ok(Architecture::linear());
    }
    let hidden: Vec<usize> = parse_list(t, "arch")?;
    if hidden.contains(&0) {
        return Err(Error::InvalidArgument("hidden layer widths must be positive".into()));
    }
    Ok(Architecture {
        hidden,
        activation: Activation::from_str(activation)?,
    })
}

fn train_config(flags: &TrainFlags, seed: u64) -> Result<TrainConfig> {
    let cfg = TrainConfig {
        learning_rate: flags.lr,
        epochs: flags.epochs,
        batch_size: flags.batch,
        l1_lambda: flags.l1,
        l2_lambda: flags.l2,
        seed,
        stream: 0,
        init: flags.init_scale.map_or(InitRule::Glorot, InitRule::Uniform),
        penalize_bias: flags.penalize_bias,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn gls_config(flags: &GlsFlags, train: TrainConfig) -> GlsConfig {
    GlsConfig {
        train,
        variance_floor: flags.variance_floor,
        centered: flags.centered,
        warm_start: flags.warm_start,
        standardize_targets: !flags.raw_targets,
        force_identity_covariance: false,
    }
}

fn load_panel(path: &Path, flags: &PanelFlags) -> Result<FactorPanel> {
    let (panel, report) = data::load_panel_csv(path, flags.min_coverage)?;
    for (asset, coverage) in &report.dropped_assets {
        log::warn!("dropped asset {asset} (coverage {coverage:.3})");
    }
    if flags.no_standardize {
        return Ok(panel);
    }
    let (std_panel, degenerate) = panel.standardize_with(data::StdConvention::Population);
    for (t, k) in degenerate {
        log::warn!(
            "factor {} has zero cross-sectional variance on {}; set to zero",
            std_panel.factor_names[k],
            std_panel.dates[t]
        );
    }
    Ok(std_panel)
}

pub fn gen(args: &GenArgs, seed: u64, out: &Output) -> Result<()> {
    let name = match args.kind {
        GenKind::Linear2 => "linear2",
        GenKind::Step10 => "step10",
        GenKind::Friedman => "friedman",
        GenKind::HetPanel => "het_panel",
    };
    let file = format!("{name}.csv");
    let dataset = match args.kind {
        GenKind::Linear2 => data::gen_linear2(args.n, args.sigma, seed)?,
        GenKind::Step10 => data::gen_step10(args.n, args.sigma, seed)?,
        GenKind::Friedman => data::gen_friedman(args.n, args.sigma, seed)?,
        GenKind::HetPanel => {
            let noise = match args.noise {
                NoiseKind::Constant => NoiseProfile::Constant { sigma: args.noise_min },
                NoiseKind::LogUniform => NoiseProfile::LogUniform {
                    min: args.noise_min,
                    max: args.noise_max,
                },
                NoiseKind::Outlier => NoiseProfile::Outlier {
                    sigma: args.noise_min,
                    asset: args.outlier_asset,
                    factor: args.outlier_factor,
                },
            };
            let spec = HetPanelSpec {
                t: args.t,
                n: args.assets,
                k: args.k,
                noise,
                signal_scale: args.signal_scale,
                interaction: args.interaction,
                curvature: args.curvature,
                seed,
            };
            let synthetic = data::gen_het_panel(&spec)?;
            return out.write(&file, |w| synthetic.panel.write_csv(w));
        }
    };
    out.write(&file, |w| dataset.write_csv(w))
}

pub fn train(args: &TrainCmdArgs, seed: u64, out: &Output) -> Result<()> {
    let arch = parse_arch(&args.train.arch, &args.train.activation)?;
    let cfg = train_config(&args.train, seed)?;
    if let Some(path) = &args.panel {
        let panel = load_panel(path, &args.panel_flags)?;
        let fit = fit_two_step(&panel, &arch, &gls_config(&args.gls, cfg))?;
        out.write_str("model.json", &fit.params.to_json())?;
        out.write_str("model_first_pass.json", &fit.params_first_pass.to_json())?;
        return out.write_str("gls.json", &fit.to_json()?);
    }
    let path = args.data.as_ref().expect("clap requires data or panel");
    let ds = Dataset::load(path)?;
    let fit = nn::train(ds.x.view(), ds.y.view(), &arch, &cfg, None)?;
    out.write_str("model.json", &fit.params.to_json())?;
    out.write("loss.csv", |w| {
        writeln!(w, "epoch,loss")?;
        for (e, l) in fit.loss_trace.iter().enumerate() {
            writeln!(w, "{},{}", e + 1, l)?;
        }
        Ok(())
    })
}

pub fn tune(args: &TuneArgs, seed: u64, out: &Output) -> Result<()> {
    let ds = Dataset::load(&args.data)?;
    let activation = Activation::from_str(&args.train.activation)?;
    let archs: Vec<Architecture> = args
        .hidden
        .split(';')
        .map(|h| parse_arch(h, &args.train.activation))
        .collect::<Result<_>>()?;
    let l1s: Vec<f64> = parse_list(&args.l1_grid, "l1-grid")?;
    let l2s: Vec<f64> = parse_list(&args.l2_grid, "l2-grid")?;
    let mut candidates = Vec::new();
    for a in &archs {
        for &l1 in &l1s {
            for &l2 in &l2s {
                candidates.push(nn::CvCandidate {
                    hidden: a.hidden.clone(),
                    l1,
                    l2,
                });
            }
        }
    }
    let cfg = train_config(&args.train, seed)?;
    let scores = nn::cross_validate(ds.x.view(), ds.y.view(), activation, &candidates, &cfg, args.folds, seed)?;
    let best = nn::select_best(&scores).expect("non-empty candidates");
    let arch_text = |h: &[usize]| {
        if h.is_empty() {
            "linear".to_string()
        } else {
            h.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
        }
    };
    out.write("tune.csv", |w| {
        writeln!(w, "arch,l1,l2,mean_mse,fold_mse")?;
        for s in &scores {
            let folds: Vec<String> = s.fold_mse.iter().map(|v| v.to_string()).collect();
            writeln!(
                w,
                "\"{}\",{},{},{},\"{}\"",
                arch_text(&s.candidate.hidden),
                s.candidate.l1,
                s.candidate.l2,
                s.mean_mse,
                folds.join(";")
            )?;
        }
        Ok(())
    })?;
    let mut best_table = toml::Table::new();
    best_table.insert("arch".into(), arch_text(&best.candidate.hidden).into());
    best_table.insert("activation".into(), args.train.activation.clone().into());
    best_table.insert("l1".into(), best.candidate.l1.to_string().into());
    best_table.insert("l2".into(), best.candidate.l2.to_string().into());
    let text = toml::to_string(&best_table).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    out.write_str("best.toml", &text)
}

fn check_inputs(params: &NetworkParams<f64>, x: &Array2<f64>) -> Result<()> {
    if params.input_dim() != x.ncols() {
        return Err(Error::DimensionMismatch {
            context: "model inputs vs dataset features".into(),
            expected: params.input_dim(),
            actual: x.ncols(),
        });
    }
    Ok(())
}

pub fn interpret(args: &InterpretArgs, out: &Output) -> Result<()> {
    let params = NetworkParams::<f64>::load(&args.model)?;
    let ds = Dataset::load(&args.data)?;
    check_inputs(&params, &ds.x)?;
    let names = &ds.feature_names;
    let dataset = args
        .data
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    match args.method {
        Method::Jacobian => {
            let agg = if args.median { Aggregation::Median } else { Aggregation::Mean };
            let rep = interpret::sensitivity_distribution_with(&params, ds.x.view(), agg)?;
            out.write("sensitivity.csv", |w| report::write_sensitivity_csv(w, &dataset, names, &rep))
        }
        Method::Hessian => {
            let rep = interpret::rank_interactions(&params, ds.x.view())?;
            out.write("interactions.csv", |w| report::write_interaction_csv(w, names, &rep))?;
            out.write("curvature.csv", |w| {
                writeln!(w, "input,own_curvature")?;
                for (n, c) in names.iter().zip(&rep.own_curvature) {
                    writeln!(w, "{n},{c}")?;
                }
                Ok(())
            })
        }
        Method::Garson | Method::Olden => {
            let table = if args.method == Method::Garson {
                interpret::garson(&params)?
            } else {
                interpret::olden(&params)?
            };
            out.write("importance.csv", |w| report::write_importance_csv(w, names, &table))
        }
        Method::Pdp => {
            let curves = (0..ds.n_features())
                .map(|j| {
                    let grid = interpret::default_grid(ds.x.view(), j, args.pdp_points)?;
                    interpret::partial_dependence(&params, ds.x.view(), j, &grid)
                })
                .collect::<Result<Vec<_>>>()?;
            out.write("pdp.csv", |w| {
                writeln!(w, "feature,value,prediction")?;
                for c in &curves {
                    for (g, v) in c.grid.iter().zip(&c.values) {
                        writeln!(w, "{},{g},{v}", names[c.feature])?;
                    }
                }
                Ok(())
            })
        }
    }
}

fn load_benchmark(path: &Path, dates: &[NaiveDate]) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path)?;
    let source = path.display().to_string();
    let mut by_date = std::collections::HashMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |message: String| Error::Parse {
            path: source.clone(),
            line,
            message,
        };
        if rec.len() != 2 {
            return Err(bad(format!("expected 2 fields (date,ret), got {}", rec.len())));
        }
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|e| bad(format!("bad date: {e}")))?;
        let ret: f64 = rec[1].trim().parse().map_err(|_| bad(format!("bad return '{}'", &rec[1])))?;
        by_date.insert(date, ret);
    }
    dates
        .iter()
        .map(|d| {
            by_date.get(d).copied().ok_or_else(|| Error::Parse {
                path: source.clone(),
                line: 0,
                message: format!("no benchmark return for {d}"),
            })
        })
        .collect()
}

pub fn backtest(args: &BacktestArgs, seed: u64, out: &Output) -> Result<()> {
    let panel = load_panel(&args.panel, &args.panel_flags)?;
    let arch = parse_arch(&args.train.arch, &args.train.activation)?;
    let mut cfg = BacktestConfig::new(args.window, parse_list(&args.sizes, "sizes")?, arch);
    cfg.gls = gls_config(&args.gls, train_config(&args.train, seed)?);
    cfg.mode = match args.mode {
        ModeArg::Model => BacktestMode::Model,
        ModeArg::Linear => BacktestMode::Linear,
        ModeArg::Random => BacktestMode::Random,
    };
    cfg.n_random_trials = args.random_trials;
    cfg.seed = seed;
    if let Some(b) = &args.benchmark {
        cfg.benchmark = Some(load_benchmark(b, &panel.dates)?);
    }
    let result = backtest::run_backtest(&panel, &cfg)?;
    out.write("predictions.csv", |w| backtest::report::write_predictions_csv(w, &result))?;
    out.write("portfolios.csv", |w| backtest::report::write_portfolios_csv(w, &result))?;
    out.write("summary.csv", |w| backtest::report::write_summary_csv(w, &result))?;
    if !result.windows.is_empty() {
        out.write("windows.csv", |w| backtest::report::write_windows_csv(w, &result))?;
        out.write("sensitivities.csv", |w| backtest::report::write_sensitivities_csv(w, &result))?;
    }
    if !result.skipped.is_empty() {
        out.write("skipped.csv", |w| {
            writeln!(w, "date")?;
            for d in &result.skipped {
                writeln!(w, "{d}")?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

pub fn bounds(args: &BoundsArgs, seed: u64, out: &Output) -> Result<()> {
    let spec_given = args.coefficients.is_some() || args.probabilities.is_some();
    if !args.sweep && !spec_given && args.model.is_none() {
        return Err(Error::InvalidArgument(
            "bounds needs --sweep, --coefficients/--probabilities, or --model".into(),
        ));
    }
    if args.sweep {
        if args.delta_steps == 0 || !(args.delta_max > 0.0) {
            return Err(Error::InvalidArgument("delta grid needs delta-max > 0 and delta-steps >= 1".into()));
        }
        let mus: Vec<f64> = parse_list(&args.mu, "mu")?;
        let deltas: Vec<f64> = (1..=args.delta_steps)
            .map(|i| args.delta_max * i as f64 / args.delta_steps as f64)
            .collect();
        let rows = bounds::bound_sweep(&mus, &deltas)?;
        out.write("bound_sweep.csv", |w| bounds::write_bound_sweep_csv(w, &rows))?;
    }
    if spec_given {
        let (Some(a), Some(p)) = (&args.coefficients, &args.probabilities) else {
            return Err(Error::InvalidArgument("--coefficients and --probabilities go together".into()));
        };
        let spec = ReluJacobianSpec::new(parse_list(a, "coefficients")?, parse_list(p, "probabilities")?)?;
        let (scaled, scale) = spec.rescaled();
        let tails = bounds::bernoulli_tails_mc(&scaled, args.delta, args.gamma, args.samples, seed)?;
        let mu = scaled.mean();
        let upper = bounds::chernoff_upper(mu, args.delta)?;
        let lower = bounds::chernoff_lower(mu, args.gamma)?;
        out.write("bernoulli_check.csv", |w| {
            writeln!(
                w,
                "scale,mu,variance_paper,variance_independent,variance_bound,mc_mean,mc_variance,delta,upper_frequency,chernoff_upper,gamma,lower_frequency,chernoff_lower"
            )?;
            writeln!(
                w,
                "{scale},{mu},{},{},{},{},{},{},{},{},{},{},{}",
                scaled.variance_paper(),
                scaled.variance_independent(),
                scaled.variance_bound(),
                tails.moments.mean,
                tails.moments.variance,
                args.delta,
                tails.upper_frequency,
                upper.bound_value,
                args.gamma,
                tails.lower_frequency,
                lower.bound_value
            )?;
            Ok(())
        })?;
    }
    if let Some(model) = &args.model {
        let params = NetworkParams::<f64>::load(model)?;
        let cmp = bounds::compare_variances(&params, &InputDistribution::standard_normal(), args.samples, seed)?;
        out.write("relu_variance.csv", |w| {
            writeln!(w, "mean_formula,variance_paper,variance_partition,mc_mean,mc_variance,mc_n")?;
            writeln!(
                w,
                "{},{},{},{},{},{}",
                cmp.mean_formula,
                cmp.variance_paper,
                cmp.variance_partition,
                cmp.monte_carlo.mean,
                cmp.monte_carlo.variance,
                cmp.monte_carlo.n
            )?;
            Ok(())
        })?;
    }
    Ok(())
}
