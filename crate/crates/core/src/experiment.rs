//! Preset experiments over seed ensembles.
//!
//! Each preset generates one scenario per seed, steps a designated user's
//! channel down (or up), runs one or more games at every step and writes
//!
//! - `seed_<s>/scenario.json`: the step-0 scenario,
//! - `seed_<s>/<scheme>.csv`: per-step equilibrium totals per user,
//! - `seed_<s>/trajectory.csv` (fig1 only): the iteration trajectory,
//! - `manifest.json`: resolved config, per-seed convergence and condition
//!   verdicts, signed comparison percentages and their ensemble medians.
//!
//! Every CSV has the columns `step,iteration,user,power_w,rate_nats`.
//! Configuration precedence: preset defaults, then config-file fields, then
//! command-line flags.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{self, ConditionCheck, GameConfig, GameKind, RunResult, DEFAULT_MAX_ITERATIONS};
use crate::error::{Error, Result};
use crate::network::{Scenario, UserParams, DEFAULT_STEP_FACTOR};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED_COUNT: usize = 20;
pub const DEFAULT_VARSIGMA: f64 = 1e-4;
pub const DEFAULT_POWER_BUDGET: f64 = 1.0;
pub const DEFAULT_PRICE: f64 = 100.0;
/// Presets stop at a tighter relative move than the engine default so the
/// reported equilibria meet their constraints to well below 1e-8.
pub const PRESET_TOLERANCE: f64 = 1e-10;

const REQUIRED_FIELDS: &str =
    "preset, seeds (non-empty), steps, step_factor (> 0), out; custom runs also need game and params";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "fig1_opc_convergence")]
    Fig1OpcConvergence,
    #[serde(rename = "fig2_opc_degradation")]
    Fig2OpcDegradation,
    #[serde(rename = "fig3_opc_vs_powermin")]
    Fig3OpcVsPowermin,
    #[serde(rename = "fig4_pricing_sweep")]
    Fig4PricingSweep,
    #[serde(rename = "fig5_6_fixed_vs_proposed_degrade")]
    Fig56FixedVsProposedDegrade,
    #[serde(rename = "fig7_8_fixed_vs_proposed_improve")]
    Fig78FixedVsProposedImprove,
    #[serde(rename = "custom")]
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Fig1OpcConvergence,
        Preset::Fig2OpcDegradation,
        Preset::Fig3OpcVsPowermin,
        Preset::Fig4PricingSweep,
        Preset::Fig56FixedVsProposedDegrade,
        Preset::Fig78FixedVsProposedImprove,
        Preset::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1OpcConvergence => "fig1_opc_convergence",
            Preset::Fig2OpcDegradation => "fig2_opc_degradation",
            Preset::Fig3OpcVsPowermin => "fig3_opc_vs_powermin",
            Preset::Fig4PricingSweep => "fig4_pricing_sweep",
            Preset::Fig56FixedVsProposedDegrade => "fig5_6_fixed_vs_proposed_degrade",
            Preset::Fig78FixedVsProposedImprove => "fig7_8_fixed_vs_proposed_improve",
            Preset::Custom => "custom",
        }
    }

    fn default_steps(self) -> usize {
        match self {
            Preset::Fig1OpcConvergence | Preset::Custom => 0,
            Preset::Fig2OpcDegradation | Preset::Fig3OpcVsPowermin => 4,
            Preset::Fig4PricingSweep => 8,
            Preset::Fig56FixedVsProposedDegrade | Preset::Fig78FixedVsProposedImprove => 6,
        }
    }

    fn default_subchannels(self) -> usize {
        match self {
            Preset::Fig1OpcConvergence | Preset::Fig2OpcDegradation | Preset::Fig3OpcVsPowermin | Preset::Custom => 20,
            _ => 10,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
            Error::usage(format!("unknown preset {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

/// Fully resolved experiment description. Recorded verbatim in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub preset: Preset,
    pub seeds: Vec<u64>,
    /// Number of channel-scaling steps after step 0 (fig4: number of price
    /// grid points after the first).
    pub steps: usize,
    pub step_factor: f64,
    pub out: PathBuf,
    pub users: usize,
    pub subchannels: usize,
    /// 0-based index of the user whose channel is scaled.
    pub target_user: usize,
    pub varsigma: f64,
    pub power_budget: f64,
    pub price: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Game for the custom preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game: Option<GameKind>,
    /// Parameters shared by every user in the custom preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<UserParams>,
    /// Scenario file used for every seed instead of the generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<PathBuf>,
}

/// Config-file form: every field but the preset is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub preset: Option<Preset>,
    pub seeds: Option<Vec<u64>>,
    pub steps: Option<usize>,
    pub step_factor: Option<f64>,
    pub out: Option<PathBuf>,
    pub users: Option<usize>,
    pub subchannels: Option<usize>,
    pub target_user: Option<usize>,
    pub varsigma: Option<f64>,
    pub power_budget: Option<f64>,
    pub price: Option<f64>,
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub game: Option<GameKind>,
    pub params: Option<UserParams>,
    pub scenario: Option<PathBuf>,
}

impl ExperimentFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

impl ExperimentSpec {
    /// Defaults for a preset: seeds `0..20`, output `runs/<preset>`.
    pub fn preset(preset: Preset) -> Self {
        let users = 5;
        Self {
            preset,
            seeds: (0..DEFAULT_SEED_COUNT as u64).collect(),
            steps: preset.default_steps(),
            step_factor: DEFAULT_STEP_FACTOR,
            out: PathBuf::from("runs").join(preset.name()),
            users,
            subchannels: preset.default_subchannels(),
            target_user: users - 1,
            varsigma: DEFAULT_VARSIGMA,
            power_budget: DEFAULT_POWER_BUDGET,
            price: DEFAULT_PRICE,
            tolerance: PRESET_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            game: None,
            params: None,
            scenario: None,
        }
    }

    /// Preset defaults overridden by the fields present in `file`. Relative
    /// scenario paths resolve against `base_dir`.
    pub fn from_file(file: ExperimentFile, base_dir: &Path) -> Result<Self> {
        let preset = file
            .preset
            .ok_or_else(|| Error::usage(format!("config file is missing \"preset\"; required fields: {REQUIRED_FIELDS}")))?;
        let mut spec = Self::preset(preset);
        let users_given = file.users.is_some();
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = file.$f { spec.$f = v; } )* };
        }
        take!(seeds, steps, step_factor, out, users, subchannels, target_user, varsigma, power_budget, price, tolerance, max_iterations);
        if users_given && file.target_user.is_none() {
            spec.target_user = spec.users.saturating_sub(1);
        }
        spec.game = file.game;
        spec.params = file.params;
        spec.scenario = file.scenario.map(|p| if p.is_relative() { base_dir.join(p) } else { p });
        // A scenario file fixes the dimensions.
        if let Some(path) = &spec.scenario {
            let s = Scenario::load(path)?;
            spec.users = s.users();
            spec.subchannels = s.subchannels();
            if file.target_user.is_none() {
                spec.target_user = spec.users - 1;
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |what: &str| Err(Error::usage(format!("{what}; required fields: {REQUIRED_FIELDS}")));
        if self.seeds.is_empty() {
            return fail("empty seed list");
        }
        if !(self.step_factor > 0.0 && self.step_factor.is_finite()) {
            return fail(&format!("step_factor must be positive, got {}", self.step_factor));
        }
        if self.users == 0 || self.subchannels == 0 {
            return fail("users and subchannels must be positive");
        }
        if self.target_user >= self.users {
            return fail(&format!("target_user {} out of range for {} users", self.target_user, self.users));
        }
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return fail("tolerance must be positive and max_iterations at least 1");
        }
        for (name, v) in [("varsigma", self.varsigma), ("power_budget", self.power_budget)] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(&format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.price >= 0.0 && self.price.is_finite()) {
            return fail(&format!("price must be nonnegative, got {}", self.price));
        }
        if self.preset == Preset::Custom && (self.game.is_none() || self.params.is_none()) {
            return fail("custom preset needs game and params");
        }
        Ok(())
    }

    /// Price grid of the pricing sweep: `λ_k = 10^(k/2)`, `k = 0..=steps`.
    pub fn price_grid(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| 10f64.powf(k as f64 / 2.0)).collect()
    }

    fn base_scenario(&self, seed: u64) -> Result<Scenario> {
        match &self.scenario {
            Some(path) => Scenario::load(path),
            None => Scenario::generate_reference(seed, self.users, self.subchannels),
        }
    }

    fn game(&self, kind: GameKind, params: UserParams, users: usize) -> GameConfig {
        GameConfig::new(kind, vec![params; users])
            .with_tolerance(self.tolerance)
            .with_max_iterations(self.max_iterations)
    }
}

/// One line of every experiment CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub step: usize,
    pub iteration: usize,
    pub user: usize,
    pub power_w: f64,
    pub rate_nats: f64,
}

pub fn write_csv(path: &Path, rows: &[CsvRow]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err)
}

/// Network totals of one scheme at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepTotal {
    pub step: usize,
    pub users: usize,
    pub power_w: f64,
    pub rate_nats: f64,
}

/// Per-step totals from CSV rows, using each user's last iteration at each
/// step and summing users in index order.
pub fn step_totals(rows: &[CsvRow]) -> Vec<StepTotal> {
    let mut steps: Vec<usize> = rows.iter().map(|r| r.step).collect();
    steps.sort_unstable();
    steps.dedup();
    steps
        .into_iter()
        .map(|step| {
            let at_step: Vec<&CsvRow> = rows.iter().filter(|r| r.step == step).collect();
            let last_it = at_step.iter().map(|r| r.iteration).max().unwrap_or(0);
            let mut finals: Vec<&CsvRow> = at_step.into_iter().filter(|r| r.iteration == last_it).collect();
            finals.sort_by_key(|r| r.user);
            StepTotal {
                step,
                users: finals.len(),
                power_w: finals.iter().map(|r| r.power_w).sum(),
                rate_nats: finals.iter().map(|r| r.rate_nats).sum(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub step: usize,
    pub power_a: f64,
    pub power_b: f64,
    pub rate_a: f64,
    pub rate_b: f64,
    /// `(power_a − power_b) / power_b × 100`.
    pub power_gap_pct: f64,
    pub rate_gap_pct: f64,
}

fn signed_pct(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b) / b * 100.0
    }
}

/// Signed per-step percentage differences of scheme `a` relative to `b`.
pub fn compare_schemes(a: &[StepTotal], b: &[StepTotal]) -> Result<Vec<ComparisonRow>> {
    if a.len() != b.len() {
        return Err(Error::usage(format!("cannot compare {} steps with {}", a.len(), b.len())));
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            if x.step != y.step || x.users != y.users {
                return Err(Error::usage(format!(
                    "mismatched records: step {} with {} users vs step {} with {} users",
                    x.step, x.users, y.step, y.users
                )));
            }
            Ok(ComparisonRow {
                step: x.step,
                power_a: x.power_w,
                power_b: y.power_w,
                rate_a: x.rate_nats,
                rate_b: y.rate_nats,
                power_gap_pct: signed_pct(x.power_w, y.power_w),
                rate_gap_pct: signed_pct(x.rate_nats, y.rate_nats),
            })
        })
        .collect()
}

pub fn write_comparison<W: std::io::Write>(out: W, rows: &[ComparisonRow]) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Price used at this step of the pricing sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price: Option<f64>,
    pub converged: bool,
    pub diverged: bool,
    pub iterations: usize,
    pub fixed_point_residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<ConditionCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeRecord {
    pub name: String,
    pub file: String,
    pub steps: Vec<StepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub a: String,
    pub b: String,
    pub rows: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub directory: String,
    pub schemes: Vec<SchemeRecord>,
    pub comparisons: Vec<ComparisonRecord>,
    /// fig1: whether the first user ends with less total power than the last.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_user_below_last: Option<bool>,
    /// Set when a comparison could not be formed (for example, prices could
    /// not be frozen because the pricing run did not converge).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Spread {
    /// Median and quartiles with linear interpolation; `None` when empty.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |f: f64| {
            let pos = f * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Some(Self {
            median: q(0.5),
            q1: q(0.25),
            q3: q(0.75),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub step: usize,
    pub seeds: usize,
    pub power_gap_pct: Spread,
    pub rate_gap_pct: Spread,
    /// Fraction of seeds with `power_gap_pct < rate_gap_pct`.
    pub power_gap_below_rate_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub a: String,
    pub b: String,
    pub steps: Vec<StepSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub preset: Preset,
    pub seeds: Vec<u64>,
    pub config: ExperimentSpec,
    pub csv_columns: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_grid: Option<Vec<f64>>,
    pub stopping_rule: String,
    pub runs: usize,
    pub converged_runs: usize,
    pub per_seed: Vec<SeedRecord>,
    pub summaries: Vec<ComparisonSummary>,
    /// fig1: fraction of seeds where the first user uses less power than the last.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_user_below_last_fraction: Option<f64>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn summary(&self, a: &str, b: &str) -> Option<&ComparisonSummary> {
        self.summaries.iter().find(|s| s.a == a && s.b == b)
    }
}

/// Equilibrium (or last) profile of one scheme at each step.
struct Series {
    name: String,
    steps: Vec<(usize, Option<f64>, Scenario, RunResult)>,
}

impl Series {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            steps: Vec::new(),
        }
    }

    fn push(&mut self, step: usize, price: Option<f64>, scenario: &Scenario, result: RunResult) {
        self.steps.push((step, price, scenario.clone(), result));
    }

    fn rows(&self) -> Vec<CsvRow> {
        self.steps
            .iter()
            .flat_map(|(step, _, _, r)| {
                r.users.iter().enumerate().map(move |(user, u)| CsvRow {
                    step: *step,
                    iteration: r.iterations,
                    user,
                    power_w: u.total_power,
                    rate_nats: u.total_rate,
                })
            })
            .collect()
    }

    fn record(&self) -> SchemeRecord {
        SchemeRecord {
            name: self.name.clone(),
            file: format!("{}.csv", self.name),
            steps: self
                .steps
                .iter()
                .map(|(step, price, _, r)| StepRecord {
                    step: *step,
                    price: *price,
                    converged: r.converged,
                    diverged: r.diverged,
                    iterations: r.iterations,
                    fixed_point_residual: r.fixed_point_residual,
                    condition: r.condition.clone(),
                })
                .collect(),
        }
    }
}

fn trajectory_rows(scenario: &Scenario, result: &RunResult) -> Vec<CsvRow> {
    result
        .trajectory
        .iter()
        .flat_map(|snap| {
            (0..scenario.users()).map(move |user| CsvRow {
                step: 0,
                iteration: snap.iteration,
                user,
                power_w: snap.profile.user_total(user),
                rate_nats: scenario.rate_unchecked(&snap.profile, user),
            })
        })
        .collect()
}

/// Scenarios at steps `0..=steps`: degrading multiplies the target user's
/// direct gains by `factor` per step; improving first applies `steps`
/// degradations and then undoes one per step.
fn step_scenarios(base: &Scenario, spec: &ExperimentSpec, improving: bool) -> Result<Vec<Scenario>> {
    let (mut current, factor) = if improving {
        (base.scale_user_steps(spec.target_user, spec.step_factor, spec.steps)?, 1.0 / spec.step_factor)
    } else {
        (base.clone(), spec.step_factor)
    };
    let mut out = Vec::with_capacity(spec.steps + 1);
    out.push(current.clone());
    for _ in 0..spec.steps {
        current = current.scale_user_channels(spec.target_user, factor)?;
        out.push(current.clone());
    }
    Ok(out)
}

struct SeedOutput {
    series: Vec<Series>,
    extra_files: Vec<(String, Vec<CsvRow>)>,
    comparisons: Vec<(String, String)>,
    first_user_below_last: Option<bool>,
    notes: Vec<String>,
    base: Scenario,
}

fn run_seed(spec: &ExperimentSpec, seed: u64) -> Result<SeedOutput> {
    let base = spec.base_scenario(seed)?;
    let m = base.users();
    if spec.target_user >= m {
        return Err(Error::usage(format!("target_user {} out of range for {m} users", spec.target_user)));
    }
    let mut out = SeedOutput {
        series: Vec::new(),
        extra_files: Vec::new(),
        comparisons: Vec::new(),
        first_user_below_last: None,
        notes: Vec::new(),
        base: base.clone(),
    };
    let opp = UserParams::opportunistic(spec.varsigma);
    match spec.preset {
        Preset::Fig1OpcConvergence => {
            let cfg = spec.game(GameKind::OpportunisticGne, opp, m).with_trajectory(true);
            let r = engine::run(&base, &cfg)?;
            out.extra_files.push(("trajectory".into(), trajectory_rows(&base, &r)));
            out.first_user_below_last = Some(r.users[0].total_power < r.users[m - 1].total_power);
            let mut s = Series::new("opportunistic");
            s.push(0, None, &base, RunResult { trajectory: Vec::new(), ..r });
            out.series.push(s);
        }
        Preset::Fig2OpcDegradation => {
            let cfg = spec.game(GameKind::OpportunisticGne, opp, m);
            let mut s = Series::new("opportunistic");
            for (k, sc) in step_scenarios(&base, spec, false)?.iter().enumerate() {
                s.push(k, None, sc, engine::run(sc, &cfg)?);
            }
            out.series.push(s);
        }
        Preset::Fig3OpcVsPowermin => {
            let cfg = spec.game(GameKind::OpportunisticGne, opp, m);
            let scenarios = step_scenarios(&base, spec, false)?;
            let mut o = Series::new("opportunistic");
            for (k, sc) in scenarios.iter().enumerate() {
                o.push(k, None, sc, engine::run(sc, &cfg)?);
            }
            // Rate targets: each user's equilibrium rate before degradation.
            let targets: Vec<UserParams> = o.steps[0].3.users.iter().map(|u| UserParams::power_min(u.total_rate)).collect();
            let pm_cfg = GameConfig {
                params: targets,
                ..spec.game(GameKind::PowerMinRate, UserParams::default(), m)
            };
            let mut p = Series::new("power_min");
            for (k, sc) in scenarios.iter().enumerate() {
                p.push(k, None, sc, engine::run(sc, &pm_cfg)?);
            }
            out.series.push(o);
            out.series.push(p);
            out.comparisons.push(("opportunistic".into(), "power_min".into()));
        }
        Preset::Fig4PricingSweep => {
            let mut priced = Series::new("priced");
            let mut plain = Series::new("waterfilling");
            let wf = engine::run(&base, &spec.game(GameKind::Waterfilling, UserParams::waterfilling(spec.power_budget), m))?;
            for (k, lambda) in spec.price_grid().into_iter().enumerate() {
                let cfg = spec.game(GameKind::PricedWaterfilling, UserParams::priced(spec.power_budget, lambda), m);
                priced.push(k, Some(lambda), &base, engine::run(&base, &cfg)?);
                plain.push(k, None, &base, wf.clone());
            }
            out.series.push(priced);
            out.series.push(plain);
            out.comparisons.push(("priced".into(), "waterfilling".into()));
        }
        Preset::Fig56FixedVsProposedDegrade | Preset::Fig78FixedVsProposedImprove => {
            let improving = spec.preset == Preset::Fig78FixedVsProposedImprove;
            let scenarios = step_scenarios(&base, spec, improving)?;
            let cfg = spec.game(GameKind::PricedWaterfilling, UserParams::priced(spec.power_budget, spec.price), m);
            let mut proposed = Series::new("proposed");
            for (k, sc) in scenarios.iter().enumerate() {
                proposed.push(k, None, sc, engine::run(sc, &cfg)?);
            }
            let freeze = &proposed.steps[0].3;
            if freeze.converged {
                let costs = engine::freeze_fixed_prices(&scenarios[0], freeze, &vec![spec.price; m])?;
                let fixed_cfg = GameConfig::fixed_priced(&vec![spec.power_budget; m], costs)
                    .with_tolerance(spec.tolerance)
                    .with_max_iterations(spec.max_iterations);
                let mut fixed = Series::new("fixed");
                for (k, sc) in scenarios.iter().enumerate() {
                    fixed.push(k, None, sc, engine::run(sc, &fixed_cfg)?);
                }
                out.series.push(proposed);
                out.series.push(fixed);
                out.comparisons.push(("proposed".into(), "fixed".into()));
            } else {
                out.notes.push("pricing run at step 0 did not converge; fixed prices not frozen".into());
                out.series.push(proposed);
            }
        }
        Preset::Custom => {
            let kind = spec.game.expect("validated");
            let cfg = spec.game(kind, spec.params.expect("validated"), m);
            let mut s = Series::new("custom");
            for (k, sc) in step_scenarios(&base, spec, false)?.iter().enumerate() {
                s.push(k, None, sc, engine::run(sc, &cfg)?);
            }
            out.series.push(s);
        }
    }
    Ok(out)
}

fn write_seed(dir: &Path, seed: u64, output: &SeedOutput) -> Result<SeedRecord> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    output.base.save(&dir.join("scenario.json"))?;
    let mut totals = Vec::new();
    for s in &output.series {
        let rows = s.rows();
        write_csv(&dir.join(format!("{}.csv", s.name)), &rows)?;
        totals.push((s.name.clone(), step_totals(&rows)));
    }
    for (name, rows) in &output.extra_files {
        write_csv(&dir.join(format!("{name}.csv")), rows)?;
    }
    let lookup = |name: &str| totals.iter().find(|(n, _)| n == name).map(|(_, t)| t.as_slice()).unwrap_or(&[]);
    let comparisons = output
        .comparisons
        .iter()
        .map(|(a, b)| {
            Ok(ComparisonRecord {
                a: a.clone(),
                b: b.clone(),
                rows: compare_schemes(lookup(a), lookup(b))?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SeedRecord {
        seed,
        directory: dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        schemes: output.series.iter().map(Series::record).collect(),
        comparisons,
        first_user_below_last: output.first_user_below_last,
        notes: output.notes.clone(),
    })
}

fn summarize(records: &[SeedRecord]) -> Vec<ComparisonSummary> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for r in records {
        for c in &r.comparisons {
            if !pairs.iter().any(|(a, b)| *a == c.a && *b == c.b) {
                pairs.push((c.a.clone(), c.b.clone()));
            }
        }
    }
    pairs
        .into_iter()
        .map(|(a, b)| {
            let rows: Vec<&ComparisonRow> = records
                .iter()
                .flat_map(|r| r.comparisons.iter().filter(|c| c.a == a && c.b == b))
                .flat_map(|c| &c.rows)
                .collect();
            let mut steps: Vec<usize> = rows.iter().map(|r| r.step).collect();
            steps.sort_unstable();
            steps.dedup();
            let steps = steps
                .into_iter()
                .map(|step| {
                    let at: Vec<&&ComparisonRow> = rows.iter().filter(|r| r.step == step).collect();
                    let pg: Vec<f64> = at.iter().map(|r| r.power_gap_pct).collect();
                    let rg: Vec<f64> = at.iter().map(|r| r.rate_gap_pct).collect();
                    let below = at.iter().filter(|r| r.power_gap_pct < r.rate_gap_pct).count();
                    StepSummary {
                        step,
                        seeds: at.len(),
                        power_gap_pct: Spread::of(&pg).expect("non-empty"),
                        rate_gap_pct: Spread::of(&rg).expect("non-empty"),
                        power_gap_below_rate_gap: below as f64 / at.len() as f64,
                    }
                })
                .collect();
            ComparisonSummary { a, b, steps }
        })
        .collect()
}

/// Runs every seed (in parallel, each into its own `seed_<s>` directory),
/// then writes `manifest.json` into `spec.out`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Manifest> {
    spec.validate()?;
    fs::create_dir_all(&spec.out).map_err(|e| Error::io(&spec.out, e))?;
    let per_seed: Vec<SeedRecord> = spec
        .seeds
        .par_iter()
        .map(|&seed| {
            let output = run_seed(spec, seed)?;
            write_seed(&spec.out.join(format!("seed_{seed}")), seed, &output)
        })
        .collect::<Result<_>>()?;
    let all_steps = || per_seed.iter().flat_map(|r| &r.schemes).flat_map(|s| &s.steps);
    let fig1: Vec<bool> = per_seed.iter().filter_map(|r| r.first_user_below_last).collect();
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        preset: spec.preset,
        seeds: spec.seeds.clone(),
        config: spec.clone(),
        csv_columns: ["step", "iteration", "user", "power_w", "rate_nats"].map(String::from).to_vec(),
        price_grid: (spec.preset == Preset::Fig4PricingSweep).then(|| spec.price_grid()),
        stopping_rule: format!(
            "relative sup-norm move < {:e} or {} sweeps; divergence above {:e} x game scale",
            spec.tolerance,
            spec.max_iterations,
            engine::DIVERGENCE_FACTOR
        ),
        runs: all_steps().count(),
        converged_runs: all_steps().filter(|s| s.converged).count(),
        summaries: summarize(&per_seed),
        first_user_below_last_fraction: (!fig1.is_empty())
            .then(|| fig1.iter().filter(|b| **b).count() as f64 / fig1.len() as f64),
        per_seed,
    };
    let path = spec.out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
