use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use arhd::basis::BasisSpec;
use arhd::curve::{read_trajectory, slice, write_trajectory, CurvePanel, Trajectory};
use arhd::estimator::{fit, ArhdFit, PenaltyConfig};
use arhd::eval::{benchmark_sst, benchmark_wong, forecast_block, EvalReport, SstConfig};
use arhd::predictors::{cross_validate, default_folds, predict_arhd, write_predictions_csv, Method};
use arhd::wong::{manifest, simulate_replicate, WongConfig};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::output::{open, write_atomic};

/// Resolved settings of one run, as `key=value` lines.
struct Echo(Vec<(String, String)>);

impl Echo {
    fn new(command: &str) -> Self {
        Echo(vec![("command".into(), command.into())])
    }

    fn set(mut self, key: &str, value: impl Display) -> Self {
        self.0.push((key.into(), value.to_string()));
        self
    }

    fn path(self, key: &str, value: &Path) -> Self {
        self.set(key, value.display())
    }

    fn maybe<T: Display>(self, key: &str, value: Option<T>) -> Self {
        match value {
            Some(v) => self.set(key, v),
            None => self,
        }
    }

    fn lines(&self) -> Vec<String> {
        self.0.iter().map(|(k, v)| format!("{k}={v}")).collect()
    }

    /// Replace the report's own echo, so that it reads as a config file.
    fn into_report(self, report: &mut EvalReport) {
        report.config_echo = self.0.into_iter().collect();
    }
}

impl Geometry {
    fn spec(&self) -> CliResult<BasisSpec> {
        let spec = match self.n_funcs {
            Some(n) => BasisSpec::new(self.delta, n)?,
            None => BasisSpec::for_grid(self.delta, self.m)?,
        };
        if spec.n_funcs() > self.m {
            return Err(CliError::Invalid(format!(
                "{} basis functions need at least as many samples per block, got m={}",
                spec.n_funcs(),
                self.m
            )));
        }
        Ok(spec)
    }

    fn echo(&self, echo: Echo) -> Echo {
        echo.set("m", self.m).set("delta", self.delta).maybe("n_funcs", self.n_funcs)
    }
}

impl Penalty {
    fn resolve(&self) -> CliResult<PenaltyConfig> {
        Ok(PenaltyConfig::new(self.alpha, self.beta)?)
    }
}

impl WongArgs {
    fn config(&self) -> CliResult<WongConfig> {
        let config = WongConfig {
            n_blocks: self.n,
            delta: self.delta,
            m: self.m,
            seed: self.seed,
            burn_in: self.burn_in,
            inner_steps: self.inner_steps,
        };
        config.validate()?;
        Ok(config)
    }

    fn echo(&self, echo: Echo) -> Echo {
        echo.set("n", self.n)
            .set("m", self.m)
            .set("delta", self.delta)
            .set("seed", self.seed)
            .set("burn_in", self.burn_in)
            .set("inner_steps", self.inner_steps)
    }
}

fn check_k(k: usize, n_funcs: usize) -> CliResult<()> {
    if k == 0 || k > n_funcs {
        return Err(CliError::Invalid(format!("k must be in 1..={n_funcs}, got {k}")));
    }
    Ok(())
}

fn baselines(first: Method, k: usize) -> [Method; 4] {
    [first, Method::Arh { k }, Method::Arf { k }, Method::Arw { k }]
}

fn load(path: &Path, delta: f64, m: usize) -> CliResult<Trajectory> {
    Ok(read_trajectory(open(path)?, delta, m)?)
}

fn load_panel(path: &Path, geometry: &Geometry) -> CliResult<(BasisSpec, CurvePanel)> {
    let spec = geometry.spec()?;
    let traj = load(path, geometry.delta, geometry.m)?;
    let panel = slice(&traj, &spec)?;
    Ok((spec, panel))
}

fn write_report(report: &EvalReport, csv: Option<&Path>, json: Option<&Path>) -> CliResult<()> {
    if let Some(path) = csv {
        let mut buf = Vec::new();
        report.write_csv(&mut buf)?;
        write_atomic(path, &buf)?;
    }
    if let Some(path) = json {
        write_atomic(path, (report.to_json() + "\n").as_bytes())?;
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    if !args.wong {
        return Err(CliError::Invalid(
            "only the Wong generator is available; pass --wong".into(),
        ));
    }
    let config = args.process.config()?;
    let echo = args
        .process
        .echo(Echo::new("simulate").set("wong", true))
        .set("replicate", args.replicate)
        .path("out", &args.out);
    let traj = simulate_replicate(&config, args.replicate)?;

    let mut buf = Vec::new();
    write_trajectory(&mut buf, &traj, &echo.lines())?;
    let manifest_path = args.manifest.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".manifest.json");
        PathBuf::from(p)
    });
    let mut doc = manifest(&config, args.replicate);
    doc["echo"] = serde_json::json!(echo.lines());
    let text = serde_json::to_string_pretty(&doc).expect("manifest serializes") + "\n";

    write_atomic(&args.out, &buf)?;
    write_atomic(&manifest_path, text.as_bytes())?;
    Ok(())
}

pub fn fit_cmd(args: &FitArgs) -> CliResult<()> {
    let penalty = args.penalty.resolve()?;
    let (_, panel) = load_panel(&args.input, &args.geometry)?;
    let echo = args
        .geometry
        .echo(Echo::new("fit").path("in", &args.input))
        .set("alpha", args.penalty.alpha)
        .set("beta", args.penalty.beta)
        .path("out", &args.out);
    let model = fit(&panel.center()?, &penalty)?;
    let mut buf = Vec::new();
    model.write_to(&mut buf, &echo.lines())?;
    write_atomic(&args.out, &buf)
}

pub fn predict(args: &PredictArgs) -> CliResult<()> {
    let model = ArhdFit::read_from(open(&args.fit)?)?;
    let delta = model.spec.delta();
    let traj = load(&args.input, delta, model.m)?;
    let panel = slice(&traj, &model.spec)?.center_with(&model.mean_curve.coeffs)?;
    let last = panel.n() - 1;
    let pred = predict_arhd(&model, &panel.curve(last), &panel.derivative(last))?;
    let echo = Echo::new("predict")
        .path("fit", &args.fit)
        .path("in", &args.input)
        .path("out", &args.out);
    let mut buf = Vec::new();
    let offset = traj.n_blocks() as f64 * delta;
    write_predictions_csv(&mut buf, &model.spec, offset, None, &[pred], &echo.lines())?;
    write_atomic(&args.out, &buf)
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult<()> {
    args.penalty.resolve()?;
    let (spec, panel) = load_panel(&args.input, &args.geometry)?;
    check_k(args.k, spec.n_funcs())?;
    let target = args.target.unwrap_or(panel.n() - 1);
    let methods = baselines(
        Method::Arhd {
            alpha: args.penalty.alpha,
            beta: args.penalty.beta,
        },
        args.k,
    );
    let scores = forecast_block(&panel, target, &methods)?;
    let mut report = EvalReport::from_scores(
        format!("forecast of block {target}"),
        &methods,
        &[scores],
        BTreeMap::new(),
    )?;
    args.geometry
        .echo(Echo::new("evaluate").path("in", &args.input))
        .set("alpha", args.penalty.alpha)
        .set("beta", args.penalty.beta)
        .set("k", args.k)
        .set("target", target)
        .into_report(&mut report);
    print!("{}", report.to_table());
    write_report(&report, args.out.as_deref(), args.json.as_deref())
}

pub fn cv(args: &CvArgs) -> CliResult<()> {
    let (_, panel) = load_panel(&args.input, &args.geometry)?;
    let grid: Vec<(f64, f64)> = args
        .alphas
        .iter()
        .flat_map(|&a| args.betas.iter().map(move |&b| (a, b)))
        .collect();
    let folds = args.folds.unwrap_or_else(|| default_folds(panel.n()));
    let result = cross_validate(&panel, &grid, folds)?;
    for ((a, b), s) in result.grid.iter().zip(&result.scores) {
        println!("alpha={a} beta={b} mse={s:.6}");
    }
    println!("best alpha={} beta={}", result.best.0, result.best.1);
    if let Some(out) = &args.out {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let echo = args
            .geometry
            .echo(Echo::new("cv").path("in", &args.input))
            .set("alphas", join(&args.alphas))
            .set("betas", join(&args.betas))
            .set("folds", folds)
            .path("out", out);
        let doc = serde_json::json!({ "echo": echo.lines(), "result": result });
        let text = serde_json::to_string_pretty(&doc).expect("cv result serializes") + "\n";
        write_atomic(out, text.as_bytes())?;
    }
    Ok(())
}

pub fn bench_wong(args: &BenchWongArgs) -> CliResult<()> {
    let config = args.process.config()?;
    args.penalty.resolve()?;
    check_k(args.k, BasisSpec::for_grid(config.delta, config.m)?.n_funcs())?;
    if args.replicates < 2 {
        return Err(CliError::Invalid(format!(
            "need at least 2 replicates, got {}",
            args.replicates
        )));
    }
    let methods = baselines(
        Method::Arhd {
            alpha: args.penalty.alpha,
            beta: args.penalty.beta,
        },
        args.k,
    );
    let mut report = benchmark_wong(args.replicates, &config, &methods)?.report;
    args.process
        .echo(Echo::new("bench-wong").set("replicates", args.replicates))
        .set("alpha", args.penalty.alpha)
        .set("beta", args.penalty.beta)
        .set("k", args.k)
        .into_report(&mut report);
    print!("{}", report.to_table());
    write_report(&report, args.out.as_deref(), args.json.as_deref())
}

pub fn bench_sst(args: &BenchSstArgs) -> CliResult<()> {
    PenaltyConfig::new(args.alpha, args.beta)?;
    PenaltyConfig::new(args.rolling_alpha, args.rolling_beta)?;
    check_k(args.k, BasisSpec::for_grid(args.delta, 12)?.n_funcs())?;
    let traj = load(&args.input, args.delta, 12)?;
    let config = SstConfig {
        start_year: args.start_year,
        one_shot_year: args.one_shot_year,
        rolling_first: args.rolling_first,
        rolling_last: args.rolling_last,
    };
    let shot = baselines(
        Method::Arhd {
            alpha: args.alpha,
            beta: args.beta,
        },
        args.k,
    );
    let rolling = baselines(
        Method::Arhd {
            alpha: args.rolling_alpha,
            beta: args.rolling_beta,
        },
        args.k,
    );
    let mut bench = benchmark_sst(&traj, &config, &shot, &rolling)?;
    let echo = || {
        Echo::new("bench-sst")
            .path("in", &args.input)
            .maybe("start_year", args.start_year)
            .set("one_shot_year", args.one_shot_year)
            .set("rolling_first", args.rolling_first)
            .set("rolling_last", args.rolling_last)
            .set("delta", args.delta)
            .set("alpha", args.alpha)
            .set("beta", args.beta)
            .set("rolling_alpha", args.rolling_alpha)
            .set("rolling_beta", args.rolling_beta)
            .set("k", args.k)
    };
    echo().into_report(&mut bench.one_shot);
    echo().into_report(&mut bench.rolling);
    print!("{}\n{}", bench.one_shot.to_table(), bench.rolling.to_table());

    if let Some(out) = &args.out {
        for (suffix, report) in [("one_shot", &bench.one_shot), ("rolling", &bench.rolling)] {
            let mut path = out.clone().into_os_string();
            path.push(format!(".{suffix}.csv"));
            write_report(report, Some(Path::new(&path)), None)?;
        }
    }
    if let Some(json) = &args.json {
        let doc = serde_json::json!({ "one_shot": bench.one_shot, "rolling": bench.rolling });
        let text = serde_json::to_string_pretty(&doc).expect("report serializes") + "\n";
        write_atomic(json, text.as_bytes())?;
    }
    Ok(())
}
