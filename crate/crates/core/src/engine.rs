//! Simultaneous (Jacobi) best-response iteration.
//!
//! Every sweep computes each user's response against the same frozen previous
//! profile, then all users switch together. A run stops when the relative
//! sup-norm move drops below the tolerance, when a power exceeds the
//! divergence guard, or at the iteration cap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::best_response::{BestResponseProblem, ResponseKind};
use crate::error::{Error, Result};
use crate::network::{PowerProfile, Scenario, UserParams};
use crate::single_carrier::{opc_response, tpc_response};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;
/// Powers above `DIVERGENCE_FACTOR × scale` end the run as diverged.
pub const DIVERGENCE_FACTOR: f64 = 1e9;
/// Default starting power as a fraction of the game's scale.
pub const INITIAL_FRACTION: f64 = 1e-3;
const ABSOLUTE_FLOOR: f64 = 1e-15;
/// Every sweep is recorded up to here, then every `DECIMATION`-th.
const DENSE_SNAPSHOTS: usize = 100;
const DECIMATION: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    OpportunisticGne,
    PowerMinRate,
    Waterfilling,
    PricedWaterfilling,
    FixedPricedWaterfilling,
    Tpc,
    Opc,
}

impl GameKind {
    pub fn is_single_carrier(self) -> bool {
        matches!(self, GameKind::Tpc | GameKind::Opc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum InitialProfile {
    /// Every entry at `INITIAL_FRACTION × scale`.
    Small,
    Zeros,
    /// Entries uniform in `[0, spread × scale]`.
    Random { seed: u64, spread: f64 },
    Explicit { profile: PowerProfile },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub kind: GameKind,
    pub params: Vec<UserParams>,
    /// Frozen per-channel prices `c_i^l`, required by the fixed-price game.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_costs: Option<Vec<Vec<f64>>>,
    pub initial: InitialProfile,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub record_trajectory: bool,
}

impl GameConfig {
    pub fn new(kind: GameKind, params: Vec<UserParams>) -> Self {
        Self {
            kind,
            params,
            fixed_costs: None,
            initial: InitialProfile::Small,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            record_trajectory: false,
        }
    }

    /// Fixed-price game with frozen costs.
    pub fn fixed_priced(budgets: &[f64], costs: Vec<Vec<f64>>) -> Self {
        let mut cfg = Self::new(
            GameKind::FixedPricedWaterfilling,
            budgets.iter().map(|&p| UserParams::waterfilling(p)).collect(),
        );
        cfg.fixed_costs = Some(costs);
        cfg
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_initial(mut self, initial: InitialProfile) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_trajectory(mut self, record: bool) -> Self {
        self.record_trajectory = record;
        self
    }

    fn param(&self, user: usize, name: &str, field: impl Fn(&UserParams) -> Option<f64>) -> Result<f64> {
        field(&self.params[user]).ok_or_else(|| Error::usage(format!("user {user} is missing {name} for {:?}", self.kind)))
    }

    pub fn validate(&self, scenario: &Scenario) -> Result<()> {
        let m = scenario.users();
        if self.params.len() != m {
            return Err(Error::usage(format!("config has {} users, scenario has {m}", self.params.len())));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::usage("tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::usage("max_iterations must be at least 1"));
        }
        if self.kind.is_single_carrier() && scenario.subchannels() != 1 {
            return Err(Error::usage(format!("{:?} needs a single-carrier scenario", self.kind)));
        }
        // Build every user's problem once against noise-only interference;
        // this runs all parameter checks.
        for i in 0..m {
            self.response_kind(i)?
                .map(|kind| BestResponseProblem::new(kind, scenario.noise_row(i).to_vec()))
                .transpose()?;
            match self.kind {
                GameKind::Tpc => positive_param(self.param(i, "target_sinr", |p| p.target_sinr)?)?,
                GameKind::Opc => positive_param(self.param(i, "opc_constant", |p| p.opc_constant)?)?,
                _ => {}
            }
        }
        if let InitialProfile::Explicit { profile } = &self.initial {
            scenario.check_profile(profile)?;
        }
        if let InitialProfile::Random { spread, .. } = self.initial {
            if !(spread > 0.0) {
                return Err(Error::usage("random start spread must be positive"));
            }
        }
        Ok(())
    }

    /// Multi-carrier problem kind for `user`; `None` for the single-carrier rules.
    fn response_kind(&self, user: usize) -> Result<Option<ResponseKind>> {
        Ok(Some(match self.kind {
            GameKind::OpportunisticGne => ResponseKind::Opportunistic {
                varsigma: self.param(user, "varsigma", |p| p.varsigma)?,
            },
            GameKind::PowerMinRate => ResponseKind::PowerMin {
                rate_target: self.param(user, "rate_target", |p| p.rate_target)?,
            },
            GameKind::Waterfilling => ResponseKind::Waterfill {
                budget: self.param(user, "power_budget", |p| p.power_budget)?,
            },
            GameKind::PricedWaterfilling => ResponseKind::Priced {
                budget: self.param(user, "power_budget", |p| p.power_budget)?,
                price: self.param(user, "price", |p| p.price)?,
            },
            GameKind::FixedPricedWaterfilling => ResponseKind::FixedPriced {
                budget: self.param(user, "power_budget", |p| p.power_budget)?,
                costs: self
                    .fixed_costs
                    .as_ref()
                    .and_then(|c| c.get(user).cloned())
                    .ok_or_else(|| Error::usage(format!("fixed-price game is missing prices for user {user}")))?,
            },
            GameKind::Tpc | GameKind::Opc => return Ok(None),
        }))
    }

    /// Power scale of the game: the largest power a single user could
    /// plausibly need. Drives the default start and the divergence guard.
    pub fn scale(&self, scenario: &Scenario) -> f64 {
        let m = scenario.users();
        let per_channel = |f: &dyn Fn(usize, usize) -> f64| -> f64 {
            (0..m)
                .flat_map(|i| (0..scenario.subchannels()).map(move |l| (i, l)))
                .map(|(i, l)| f(i, l))
                .fold(0.0, f64::max)
        };
        let get = |f: fn(&UserParams) -> Option<f64>, i: usize| f(&self.params[i]).unwrap_or(0.0);
        let s = match self.kind {
            GameKind::OpportunisticGne => per_channel(&|i, l| get(|p| p.varsigma, i).sqrt() / scenario.noise(i, l)),
            GameKind::PowerMinRate => per_channel(&|i, l| scenario.noise(i, l) * get(|p| p.rate_target, i).exp_m1()),
            GameKind::Waterfilling | GameKind::PricedWaterfilling | GameKind::FixedPricedWaterfilling => {
                (0..m).map(|i| get(|p| p.power_budget, i)).fold(0.0, f64::max)
            }
            GameKind::Tpc => per_channel(&|i, l| get(|p| p.target_sinr, i) * scenario.noise(i, l)),
            GameKind::Opc => per_channel(&|i, l| get(|p| p.opc_constant, i) / scenario.noise(i, l)),
        };
        if s > 0.0 && s.is_finite() {
            s
        } else {
            1.0
        }
    }

    fn initial_profile(&self, scenario: &Scenario) -> PowerProfile {
        let (m, l) = (scenario.users(), scenario.subchannels());
        match &self.initial {
            InitialProfile::Small => PowerProfile::filled(m, l, INITIAL_FRACTION * self.scale(scenario)),
            InitialProfile::Zeros => PowerProfile::zeros(m, l),
            InitialProfile::Random { seed, spread } => {
                let hi = spread * self.scale(scenario);
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut p = PowerProfile::zeros(m, l);
                for i in 0..m {
                    for v in p.row_mut(i) {
                        *v = rng.random::<f64>() * hi;
                    }
                }
                p
            }
            InitialProfile::Explicit { profile } => profile.clone(),
        }
    }
}

fn positive_param(v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::usage(format!("parameter must be positive, got {v}")))
    }
}

/// Solves each user's response against `profile`. Returns the new profile
/// and, for the multi-carrier games, the largest KKT residual.
fn sweep(scenario: &Scenario, config: &GameConfig, profile: &PowerProfile) -> (PowerProfile, f64) {
    let mut next = PowerProfile::zeros(scenario.users(), scenario.subchannels());
    let mut worst_kkt = 0.0_f64;
    for i in 0..scenario.users() {
        let interference = scenario.interference_vector(profile, i);
        match config.kind {
            GameKind::Tpc => {
                let t = config.params[i].target_sinr.expect("validated");
                next.set(i, 0, tpc_response(interference[0], t));
            }
            GameKind::Opc => {
                let z = config.params[i].opc_constant.expect("validated");
                next.set(i, 0, opc_response(interference[0], z));
            }
            _ => {
                let kind = config.response_kind(i).expect("validated").expect("multi-carrier");
                let problem = BestResponseProblem { kind, interference };
                let alloc = problem.solve();
                worst_kkt = worst_kkt.max(problem.kkt_residual(&alloc));
                next.row_mut(i).copy_from_slice(&alloc.powers);
            }
        }
    }
    (next, worst_kkt)
}

fn relative_move(prev: &PowerProfile, next: &PowerProfile) -> f64 {
    prev.sup_distance(next) / next.max().max(prev.max()).max(ABSOLUTE_FLOOR)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub iteration: usize,
    pub profile: PowerProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSummary {
    pub total_power: f64,
    pub total_rate: f64,
    /// Nonnegative when the user's constraint holds: `ς − Σ(pI)²`,
    /// `rate − R̂`, `P − Σp`, `γ − γ̂` or `ζ − pI` depending on the game.
    pub constraint_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    /// `"A is a P-matrix"` or `"D is a P-matrix"`.
    pub test: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub kind: GameKind,
    pub profile: PowerProfile,
    pub converged: bool,
    pub diverged: bool,
    /// Sweeps until the profile stopped moving (one confirming sweep follows).
    pub iterations: usize,
    /// Relative sup-norm move of one more sweep from the final profile.
    pub fixed_point_residual: f64,
    /// Largest KKT residual of that confirming sweep (0 for TPC/OPC).
    pub kkt_residual: f64,
    pub users: Vec<UserSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<ConditionCheck>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectory: Vec<Snapshot>,
}

impl RunResult {
    pub fn total_power(&self) -> f64 {
        self.users.iter().map(|u| u.total_power).sum()
    }

    pub fn total_rate(&self) -> f64 {
        self.users.iter().map(|u| u.total_rate).sum()
    }
}

fn summarize(scenario: &Scenario, config: &GameConfig, profile: &PowerProfile) -> Vec<UserSummary> {
    (0..scenario.users())
        .map(|i| {
            let interference = scenario.interference_vector(profile, i);
            let row = profile.row(i);
            let total_power: f64 = row.iter().sum();
            let total_rate = scenario.rate_unchecked(profile, i);
            let p = &config.params[i];
            let constraint_slack = match config.kind {
                GameKind::OpportunisticGne => {
                    p.varsigma.unwrap_or(0.0)
                        - row.iter().zip(&interference).map(|(p, i)| (p * i).powi(2)).sum::<f64>()
                }
                GameKind::PowerMinRate => total_rate - p.rate_target.unwrap_or(0.0),
                GameKind::Waterfilling | GameKind::PricedWaterfilling | GameKind::FixedPricedWaterfilling => {
                    p.power_budget.unwrap_or(0.0) - total_power
                }
                GameKind::Tpc => row[0] / interference[0] - p.target_sinr.unwrap_or(0.0),
                GameKind::Opc => p.opc_constant.unwrap_or(0.0) - row[0] * interference[0],
            };
            UserSummary {
                total_power,
                total_rate,
                constraint_slack,
            }
        })
        .collect()
}

fn condition_check(scenario: &Scenario, config: &GameConfig) -> Option<ConditionCheck> {
    match config.kind {
        GameKind::OpportunisticGne => {
            let vs: Vec<f64> = config.params.iter().map(|p| p.varsigma.unwrap_or(0.0)).collect();
            analysis::opportunistic_verdict(scenario, &vs).ok().map(|v| ConditionCheck {
                test: "A is a P-matrix".into(),
                passed: v.certified(),
            })
        }
        GameKind::PricedWaterfilling => {
            let budgets: Vec<f64> = config.params.iter().map(|p| p.power_budget.unwrap_or(0.0)).collect();
            let prices: Vec<f64> = config.params.iter().map(|p| p.price.unwrap_or(0.0)).collect();
            analysis::priced_verdict(scenario, &budgets, &prices).ok().map(|passed| ConditionCheck {
                test: "D is a P-matrix".into(),
                passed,
            })
        }
        _ => None,
    }
}

fn record(iteration: usize) -> bool {
    iteration <= DENSE_SNAPSHOTS || iteration.is_multiple_of(DECIMATION)
}

/// Iterates `p(n+1) = BR(p(n))` for all users simultaneously.
pub fn run(scenario: &Scenario, config: &GameConfig) -> Result<RunResult> {
    config.validate(scenario)?;
    let guard = DIVERGENCE_FACTOR * config.scale(scenario);
    let mut profile = config.initial_profile(scenario);
    let mut trajectory = Vec::new();
    if config.record_trajectory {
        trajectory.push(Snapshot {
            iteration: 0,
            profile: profile.clone(),
        });
    }
    let mut converged = false;
    let mut diverged = false;
    let mut iterations = 0;
    for n in 1..=config.max_iterations {
        let (next, _) = sweep(scenario, config, &profile);
        if next.as_slice().iter().any(|p| !p.is_finite() || *p > guard) {
            diverged = true;
            iterations = n;
            profile = next;
            break;
        }
        let step = relative_move(&profile, &next);
        profile = next;
        if step < config.tolerance {
            converged = true;
            iterations = n - 1;
            break;
        }
        iterations = n;
        if config.record_trajectory && record(n) {
            trajectory.push(Snapshot {
                iteration: n,
                profile: profile.clone(),
            });
        }
    }
    if config.record_trajectory && trajectory.last().map(|s| &s.profile) != Some(&profile) {
        trajectory.push(Snapshot {
            iteration: iterations,
            profile: profile.clone(),
        });
    }
    let (fixed_point_residual, kkt_residual) = if diverged {
        (f64::INFINITY, f64::INFINITY)
    } else {
        let (check, kkt) = sweep(scenario, config, &profile);
        (relative_move(&profile, &check), kkt)
    };
    Ok(RunResult {
        kind: config.kind,
        users: summarize(scenario, config, &profile),
        profile,
        converged,
        diverged,
        iterations,
        fixed_point_residual,
        kkt_residual,
        condition: condition_check(scenario, config),
        trajectory,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub starts: usize,
    pub all_converged: bool,
    /// Largest sup-norm distance between converged final profiles.
    pub max_distance: f64,
    pub iterations: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<ConditionCheck>,
}

/// Runs `config` from `num_starts` random initial profiles (entries uniform in
/// `[0, spread × scale]`, start `k` seeded with `k`) and compares the results.
pub fn uniqueness_probe(scenario: &Scenario, config: &GameConfig, num_starts: usize, spread: f64) -> Result<ProbeReport> {
    if num_starts < 2 {
        return Err(Error::usage("uniqueness probe needs at least two starts"));
    }
    let results: Vec<RunResult> = (0..num_starts as u64)
        .into_par_iter()
        .map(|seed| {
            let cfg = config
                .clone()
                .with_trajectory(false)
                .with_initial(InitialProfile::Random { seed, spread });
            run(scenario, &cfg)
        })
        .collect::<Result<_>>()?;
    let finals: Vec<&PowerProfile> = results.iter().filter(|r| r.converged).map(|r| &r.profile).collect();
    let mut max_distance = 0.0_f64;
    for a in 0..finals.len() {
        for b in a + 1..finals.len() {
            max_distance = max_distance.max(finals[a].sup_distance(finals[b]));
        }
    }
    Ok(ProbeReport {
        starts: num_starts,
        all_converged: results.iter().all(|r| r.converged),
        max_distance,
        iterations: results.iter().map(|r| r.iterations).collect(),
        condition: results.first().and_then(|r| r.condition.clone()),
    })
}

/// Fixed prices `c_i^l = λ_i I_i^l` at a converged profile.
pub fn freeze_fixed_prices(scenario: &Scenario, result: &RunResult, prices: &[f64]) -> Result<Vec<Vec<f64>>> {
    if !result.converged {
        return Err(Error::usage("cannot freeze prices from a run that did not converge"));
    }
    scenario.check_profile(&result.profile)?;
    if prices.len() != scenario.users() {
        return Err(Error::usage(format!("expected {} prices, got {}", scenario.users(), prices.len())));
    }
    Ok((0..scenario.users())
        .map(|i| {
            scenario
                .interference_vector(&result.profile, i)
                .into_iter()
                .map(|x| prices[i] * x)
                .collect()
        })
        .collect())
}
