//! Experiment suites: grids of scenarios run under both policies with shared
//! seeds, written out as per-run CSV directories.
//!
//! Layout under the output root:
//!
//! ```text
//! <root>/<suite>/suite_summary.csv
//! <root>/<suite>/<grid label>/<policy>/seed-<n>/{delays.csv, cdf.csv, summary.csv, manifest.cfg}
//! ```
//!
//! `manifest.cfg` is the fully resolved scenario in configuration syntax, so
//! `intersim run --config manifest.cfg` reproduces the run.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::{PolicyKind, ScenarioConfig};
use crate::engine::{run, SimResult};
use crate::error::{ConfigError, SimError};
use crate::metrics::DelaySummary;
use crate::report::{cdf_csv, delays_csv, scopes, summary_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteName {
    Even,
    Uneven,
    Custom,
}

impl FromStr for SuiteName {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "even" => Ok(SuiteName::Even),
            "uneven" => Ok(SuiteName::Uneven),
            "custom" => Ok(SuiteName::Custom),
            other => Err(ConfigError::invalid(
                "suite",
                format!("expected `even`, `uneven` or `custom`, got `{other}`"),
            )),
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SuiteName::Even => "even",
            SuiteName::Uneven => "uneven",
            SuiteName::Custom => "custom",
        })
    }
}

pub const EVEN_GRID: [f64; 3] = [3.0, 4.0, 10.0];
pub const UNEVEN_FIXED: f64 = 3.0;
pub const UNEVEN_GRID: [f64; 4] = [3.0, 4.0, 6.0, 10.0];

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub label: String,
    pub interarrival: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSuite {
    pub name: SuiteName,
    pub base: ScenarioConfig,
    pub grid: Vec<GridPoint>,
    pub policies: Vec<PolicyKind>,
    pub seeds: Vec<u64>,
}

impl ExperimentSuite {
    /// Equal mean inter-arrival on all four directions.
    pub fn even(base: ScenarioConfig, seeds: Vec<u64>) -> Self {
        let grid = EVEN_GRID
            .iter()
            .map(|&t| GridPoint {
                label: format!("T={t}"),
                interarrival: [t; 4],
            })
            .collect();
        ExperimentSuite {
            name: SuiteName::Even,
            base,
            grid,
            policies: vec![PolicyKind::Light, PolicyKind::V2v],
            seeds,
        }
    }

    /// North/south fixed at 3 s, east/west swept.
    pub fn uneven(base: ScenarioConfig, seeds: Vec<u64>) -> Self {
        let grid = UNEVEN_GRID
            .iter()
            .map(|&t| GridPoint {
                label: format!("T2={t}"),
                interarrival: [UNEVEN_FIXED, t, UNEVEN_FIXED, t],
            })
            .collect();
        ExperimentSuite {
            name: SuiteName::Uneven,
            base,
            grid,
            policies: vec![PolicyKind::Light, PolicyKind::V2v],
            seeds,
        }
    }

    /// The base scenario as given, under its own policy.
    pub fn custom(base: ScenarioConfig, seeds: Vec<u64>) -> Self {
        ExperimentSuite {
            name: SuiteName::Custom,
            grid: vec![GridPoint {
                label: "custom".to_string(),
                interarrival: base.interarrival,
            }],
            policies: vec![base.policy],
            base,
            seeds,
        }
    }

    pub fn named(name: SuiteName, base: ScenarioConfig, seeds: Vec<u64>) -> Self {
        match name {
            SuiteName::Even => Self::even(base, seeds),
            SuiteName::Uneven => Self::uneven(base, seeds),
            SuiteName::Custom => Self::custom(base, seeds),
        }
    }

    /// Every grid point × policy × seed, in a fixed order.
    pub fn runs(&self) -> Vec<RunSpec> {
        let mut out = Vec::new();
        for point in &self.grid {
            for &policy in &self.policies {
                for &seed in &self.seeds {
                    let config = ScenarioConfig {
                        interarrival: point.interarrival,
                        policy,
                        seed,
                        ..self.base.clone()
                    };
                    out.push(RunSpec {
                        label: point.label.clone(),
                        config,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub label: String,
    pub config: ScenarioConfig,
}

impl RunSpec {
    pub fn relative_dir(&self) -> PathBuf {
        PathBuf::from(&self.label)
            .join(self.config.policy.to_string())
            .join(format!("seed-{}", self.config.seed))
    }
}

/// Rendered output files of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFiles {
    pub delays: String,
    pub cdf: String,
    pub summary: String,
    pub manifest: String,
}

impl RunFiles {
    pub fn render(result: &SimResult) -> Self {
        RunFiles {
            delays: delays_csv(&result.records),
            cdf: cdf_csv(&result.records),
            summary: summary_csv(result),
            manifest: result.config.to_text(),
        }
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), SimError> {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        for (name, body) in [
            ("delays.csv", &self.delays),
            ("cdf.csv", &self.cdf),
            ("summary.csv", &self.summary),
            ("manifest.cfg", &self.manifest),
        ] {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| io_error(&path, e))?;
        }
        Ok(())
    }
}

pub(crate) fn io_error(path: &Path, source: std::io::Error) -> SimError {
    SimError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Per-run statistics kept after the heavy result is dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub spec: RunSpec,
    /// `(scope, summary)` for pooled and per-direction populations; `None`
    /// when the scope has no records.
    pub summaries: Vec<(String, Option<DelaySummary>)>,
    pub spawned: usize,
    pub non_drained: usize,
    pub violations: usize,
    pub files: RunFiles,
}

impl RunOutcome {
    pub fn from_result(spec: RunSpec, result: &SimResult) -> Self {
        RunOutcome {
            summaries: scopes(&result.records)
                .into_iter()
                .map(|(scope, recs)| (scope, DelaySummary::of(&recs).ok()))
                .collect(),
            spawned: result.spawned,
            non_drained: result.non_drained.len(),
            violations: result.violations.len(),
            files: RunFiles::render(result),
            spec,
        }
    }

    pub fn summary(&self, scope: &str) -> Option<&DelaySummary> {
        self.summaries
            .iter()
            .find(|(s, _)| s == scope)
            .and_then(|(_, sum)| sum.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: SuiteName,
    pub runs: Vec<RunOutcome>,
}

impl SuiteReport {
    pub fn find(&self, label: &str, policy: PolicyKind, seed: u64) -> Option<&RunOutcome> {
        self.runs
            .iter()
            .find(|r| r.spec.label == label && r.spec.config.policy == policy && r.spec.config.seed == seed)
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("grid,policy,seed,scope,count,median,mean,max,frac_over_20s,non_drained,violations\n");
        for run in &self.runs {
            let c = &run.spec.config;
            for (scope, sum) in &run.summaries {
                let _ = write!(s, "{},{},{},{scope},", run.spec.label, c.policy, c.seed);
                match sum {
                    Some(sum) => {
                        let _ = write!(
                            s,
                            "{},{:.3},{:.3},{:.3},{:.6}",
                            sum.count, sum.median, sum.mean, sum.max, sum.over_20s
                        );
                    }
                    None => s.push_str("0,NA,NA,NA,NA"),
                }
                let _ = writeln!(s, ",{},{}", run.non_drained, run.violations);
            }
        }
        s
    }
}

/// Runs every simulation of the suite, in parallel across runs, without
/// touching the filesystem.
pub fn execute(suite: &ExperimentSuite) -> Result<SuiteReport, SimError> {
    let runs = suite
        .runs()
        .into_par_iter()
        .map(|spec| {
            let result = run(&spec.config)?;
            Ok(RunOutcome::from_result(spec, &result))
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    Ok(SuiteReport {
        name: suite.name,
        runs,
    })
}

/// Runs the suite and writes every run directory plus the suite summary
/// under `<out>/<suite name>/`.
pub fn run_suite(suite: &ExperimentSuite, out: &Path) -> Result<SuiteReport, SimError> {
    let report = execute(suite)?;
    let root = out.join(suite.name.to_string());
    for run in &report.runs {
        run.files.write_to(&root.join(run.spec.relative_dir()))?;
    }
    fs::create_dir_all(&root).map_err(|e| io_error(&root, e))?;
    let path = root.join("suite_summary.csv");
    fs::write(&path, report.summary_csv()).map_err(|e| io_error(&path, e))?;
    Ok(report)
}
