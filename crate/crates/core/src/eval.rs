//! Forecast scores and benchmark reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::curve::{slice, CurvePanel, Trajectory};
use crate::error::{ArhdError, Result};
use crate::predictors::Method;
use crate::wong::{simulate_replicate, WongConfig};

/// Observations with `|x|` below this are left out of RMAE.
pub const RMAE_THRESHOLD: f64 = 1e-8;

fn check_lengths(observed: &[f64], predicted: &[f64]) -> Result<()> {
    if observed.len() != predicted.len() {
        return Err(ArhdError::DimensionMismatch {
            expected: observed.len(),
            got: predicted.len(),
        });
    }
    if observed.is_empty() {
        return Err(ArhdError::InvalidParameter("cannot score an empty block".into()));
    }
    Ok(())
}

/// `(1/m) Σ (x_j − x̂_j)²`
pub fn mse(observed: &[f64], predicted: &[f64]) -> Result<f64> {
    check_lengths(observed, predicted)?;
    let sum: f64 = observed
        .iter()
        .zip(predicted)
        .map(|(o, p)| (o - p) * (o - p))
        .sum();
    Ok(sum / observed.len() as f64)
}

/// Relative mean absolute error and how many points were excluded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rmae {
    pub value: f64,
    pub excluded: usize,
}

/// Mean of `|x_j − x̂_j| / |x_j|` over points with `|x_j| ≥ 1e-8`.
///
/// The value is a ratio; multiply by 100 for percent.
pub fn rmae(observed: &[f64], predicted: &[f64]) -> Result<Rmae> {
    check_lengths(observed, predicted)?;
    let mut sum = 0.0;
    let mut used = 0usize;
    for (o, p) in observed.iter().zip(predicted) {
        if o.abs() < RMAE_THRESHOLD {
            continue;
        }
        sum += (o - p).abs() / o.abs();
        used += 1;
    }
    if used == 0 {
        return Err(ArhdError::InvalidParameter(
            "every observation is below the RMAE threshold".into(),
        ));
    }
    Ok(Rmae {
        value: sum / used as f64,
        excluded: observed.len() - used,
    })
}

/// Scores of one forecast.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub mse: f64,
    pub rmae: f64,
    pub rmae_excluded: usize,
}

pub fn score(observed: &[f64], predicted: &[f64]) -> Result<Score> {
    let r = rmae(observed, predicted)?;
    Ok(Score {
        mse: mse(observed, predicted)?,
        rmae: r.value,
        rmae_excluded: r.excluded,
    })
}

/// One line of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub params: String,
    pub mse: f64,
    /// Ratio, not percent.
    pub rmae: f64,
    pub replicates: usize,
    /// Total RMAE points skipped across replicates.
    pub rmae_excluded: usize,
    /// Reference value quoted from the literature, not computed here.
    pub published: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub title: String,
    pub rows: Vec<ReportRow>,
    pub replicates: usize,
    pub config_echo: BTreeMap<String, String>,
}

impl EvalReport {
    pub fn row(&self, method: &str, params: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.params == params && !r.published)
    }

    /// Average per-forecast scores into a report.
    pub fn from_scores(
        title: impl Into<String>,
        methods: &[Method],
        scores: &[Vec<Score>],
        config_echo: BTreeMap<String, String>,
    ) -> Result<Self> {
        let replicates = scores.len();
        if replicates == 0 {
            return Err(ArhdError::InvalidParameter("no forecasts to report".into()));
        }
        let rows = methods
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let n = replicates as f64;
                ReportRow {
                    method: m.label().into(),
                    params: m.params(),
                    mse: scores.iter().map(|s| s[i].mse).sum::<f64>() / n,
                    rmae: scores.iter().map(|s| s[i].rmae).sum::<f64>() / n,
                    replicates,
                    rmae_excluded: scores.iter().map(|s| s[i].rmae_excluded).sum(),
                    published: false,
                }
            })
            .collect();
        Ok(Self {
            title: title.into(),
            rows,
            replicates,
            config_echo,
        })
    }

    pub fn push_published(&mut self, method: &str, mse: f64, rmae_percent: f64) {
        self.rows.push(ReportRow {
            method: method.into(),
            params: String::new(),
            mse,
            rmae: rmae_percent / 100.0,
            replicates: 0,
            rmae_excluded: 0,
            published: true,
        });
    }

    /// Human-readable table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title);
        for (k, v) in &self.config_echo {
            let _ = writeln!(out, "  {k} = {v}");
        }
        let _ = writeln!(
            out,
            "{:<8} {:<22} {:>10} {:>10} {:>10}  note",
            "method", "params", "mse", "rmae", "replicates"
        );
        for r in &self.rows {
            let note = if r.published {
                "published, not computed".to_string()
            } else if r.rmae_excluded > 0 {
                format!("{} near-zero points excluded from rmae", r.rmae_excluded)
            } else {
                String::new()
            };
            let _ = writeln!(
                out,
                "{:<8} {:<22} {:>10.4} {:>10.4} {:>10}  {}",
                r.method, r.params, r.mse, r.rmae, r.replicates, note
            );
        }
        out
    }

    /// CSV with columns `method,params,mse,rmae,replicates,published`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# {}", self.title)?;
        for (k, v) in &self.config_echo {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(w, "method,params,mse,rmae,replicates,published")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},\"{}\",{},{},{},{}",
                r.method, r.params, r.mse, r.rmae, r.replicates, r.published
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Wong study output: the averaged report and every individual score.
#[derive(Debug, Clone, PartialEq)]
pub struct WongBenchmark {
    pub report: EvalReport,
    /// `per_replicate[r][i]` scores method `i` on replicate `r`.
    pub per_replicate: Vec<Vec<Score>>,
}

/// Forecast the last block of each replicate from all earlier blocks.
///
/// Replicate `r` uses the independent stream `r` of `config.seed`, so the
/// result does not depend on scheduling.
pub fn benchmark_wong(replicates: usize, config: &WongConfig, methods: &[Method]) -> Result<WongBenchmark> {
    if replicates < 2 {
        return Err(ArhdError::InvalidParameter(format!(
            "need at least 2 replicates, got {replicates}"
        )));
    }
    config.validate()?;
    if config.n_blocks < 4 {
        return Err(ArhdError::InsufficientHistory(format!(
            "need at least 4 blocks, got {}",
            config.n_blocks
        )));
    }
    let spec = BasisSpec::for_grid(config.delta, config.m)?;
    let per_replicate = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let traj = simulate_replicate(config, r as u64)?;
            let panel = slice(&traj, &spec)?;
            score_last_block(&panel, methods)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut echo = BTreeMap::new();
    echo.insert("replicates".into(), replicates.to_string());
    echo.insert("n_blocks".into(), config.n_blocks.to_string());
    echo.insert("m".into(), config.m.to_string());
    echo.insert("delta".into(), config.delta.to_string());
    echo.insert("seed".into(), config.seed.to_string());
    echo.insert("burn_in".into(), config.burn_in.to_string());
    echo.insert("inner_steps".into(), config.inner_steps.to_string());
    echo.insert("n_funcs".into(), spec.n_funcs().to_string());
    let report = EvalReport::from_scores("Wong process, last-block forecast", methods, &per_replicate, echo)?;
    Ok(WongBenchmark {
        report,
        per_replicate,
    })
}

/// Score every method on forecasting the final block of an uncentered panel.
pub fn score_last_block(panel: &CurvePanel, methods: &[Method]) -> Result<Vec<Score>> {
    forecast_block(panel, panel.n() - 1, methods)
}

/// Train on blocks `0..target` (centered on their mean) and score the
/// forecast of block `target`.
pub fn forecast_block(panel: &CurvePanel, target: usize, methods: &[Method]) -> Result<Vec<Score>> {
    let raw = panel.uncenter();
    if target < 3 || target >= raw.n() {
        return Err(ArhdError::InsufficientHistory(format!(
            "target block {target} needs at least 3 earlier blocks within {}",
            raw.n()
        )));
    }
    let train = raw.columns(0, target).center()?;
    let observed = raw.block_values(target);
    methods
        .iter()
        .map(|m| score(&observed, &m.forecast_next(&train)?.values))
        .collect()
}

/// Calendar layout of a monthly series with one block per year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SstConfig {
    /// Year of the first block; read from the trajectory's first timestamp
    /// when absent.
    pub start_year: Option<i32>,
    pub one_shot_year: i32,
    pub rolling_first: i32,
    pub rolling_last: i32,
}

impl Default for SstConfig {
    fn default() -> Self {
        Self {
            start_year: None,
            one_shot_year: 1986,
            rolling_first: 1987,
            rolling_last: 1996,
        }
    }
}

/// Minimum number of years before a forecast target.
pub const SST_MIN_HISTORY: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SstBenchmark {
    pub one_shot: EvalReport,
    pub rolling: EvalReport,
}

fn start_year(traj: &Trajectory, config: &SstConfig) -> Result<i32> {
    if let Some(y) = config.start_year {
        return Ok(y);
    }
    traj.t0
        .as_deref()
        .and_then(|t0| t0.get(..4))
        .and_then(|y| y.parse().ok())
        .ok_or_else(|| {
            ArhdError::InvalidParameter(
                "start year unknown: give it explicitly or use dated rows".into(),
            )
        })
}

/// One-year-ahead forecasts of a monthly series: a single target year and a
/// rolling range, each trained on every earlier year.
pub fn benchmark_sst(
    traj: &Trajectory,
    config: &SstConfig,
    one_shot_methods: &[Method],
    rolling_methods: &[Method],
) -> Result<SstBenchmark> {
    if traj.m() != 12 {
        return Err(ArhdError::InvalidParameter(format!(
            "monthly data need 12 points per block, got {}",
            traj.m()
        )));
    }
    let first = start_year(traj, config)?;
    let spec = BasisSpec::for_grid(traj.delta(), traj.m())?;
    let panel = slice(traj, &spec)?;
    let index = |year: i32| -> Result<usize> {
        let i = year - first;
        if i < SST_MIN_HISTORY as i32 {
            return Err(ArhdError::InsufficientHistory(format!(
                "forecasting {year} needs at least {SST_MIN_HISTORY} earlier years"
            )));
        }
        if i as usize >= panel.n() {
            return Err(ArhdError::InsufficientHistory(format!(
                "no data for {year}; series covers {first}-{}",
                first + panel.n() as i32 - 1
            )));
        }
        Ok(i as usize)
    };
    if config.rolling_last < config.rolling_first {
        return Err(ArhdError::InvalidParameter("empty rolling range".into()));
    }

    let mut echo = BTreeMap::new();
    echo.insert("start_year".into(), first.to_string());
    echo.insert("m".into(), traj.m().to_string());
    echo.insert("delta".into(), traj.delta().to_string());
    echo.insert("n_funcs".into(), spec.n_funcs().to_string());

    let shot = forecast_block(&panel, index(config.one_shot_year)?, one_shot_methods)?;
    let mut shot_echo = echo.clone();
    shot_echo.insert("target_year".into(), config.one_shot_year.to_string());
    let mut one_shot = EvalReport::from_scores(
        format!("SST one-year-ahead forecast of {}", config.one_shot_year),
        one_shot_methods,
        &[shot],
        shot_echo,
    )?;
    one_shot.push_published("WaveletII", 0.063, 0.89);
    one_shot.push_published("FAR", 0.065, 0.89);
    one_shot.push_published("WaveletIII", 0.191, 1.20);
    one_shot.push_published("SARIMA", 1.457, 3.72);

    let years: Vec<i32> = (config.rolling_first..=config.rolling_last).collect();
    let targets = years.iter().map(|&y| index(y)).collect::<Result<Vec<_>>>()?;
    let scores = targets
        .par_iter()
        .map(|&t| forecast_block(&panel, t, rolling_methods))
        .collect::<Result<Vec<_>>>()?;
    let mut roll_echo = echo;
    roll_echo.insert(
        "target_years".into(),
        format!("{}-{}", config.rolling_first, config.rolling_last),
    );
    let mut rolling = EvalReport::from_scores(
        format!(
            "SST rolling one-year-ahead forecasts {}-{}",
            config.rolling_first, config.rolling_last
        ),
        rolling_methods,
        &scores,
        roll_echo,
    )?;
    rolling.push_published("LocalFAR", 0.53, 2.2);
    rolling.push_published("FAR", 0.55, 2.3);
    rolling.push_published("SARIMA", 1.45, 3.7);

    Ok(SstBenchmark { one_shot, rolling })
}
