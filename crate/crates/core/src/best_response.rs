//! Per-user best responses against a frozen interference vector.
//!
//! Every solver returns an [`Allocation`] carrying the powers, the multiplier
//! at the optimum and the objective value. [`BestResponseProblem`] wraps the
//! five problem kinds behind one interface and certifies solutions with a
//! relative KKT residual.
//!
//! | kind              | objective                          | constraint           | multiplier |
//! |-------------------|------------------------------------|----------------------|------------|
//! | opportunistic     | max Σ p                            | Σ (p I)² ≤ ς         | λ          |
//! | power-min         | min Σ p                            | Σ ln(1 + p/I) ≥ R̂    | water ν    |
//! | waterfilling      | max Σ ln(1 + p/I)                  | Σ p ≤ P              | water ν    |
//! | priced            | max Σ ln(1 + p/I) − λ Σ p I        | Σ p ≤ P              | μ          |
//! | fixed-priced      | max Σ ln(1 + p/I) − Σ c p          | Σ p ≤ P              | μ          |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this many sub-channels the water levels are found by bisection
/// instead of sort-then-threshold.
pub const EXACT_WATER_LEVEL_MAX_LEN: usize = 4096;

/// Components below this fraction of the largest one are reported as 0.
const POWER_FLOOR: f64 = 1e-15;

const BISECTION_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub powers: Vec<f64>,
    /// λ for the opportunistic game, the water level ν for power-min and
    /// waterfilling, μ for the priced variants.
    pub multiplier: f64,
    pub objective: f64,
}

impl Allocation {
    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaterLevelMethod {
    /// Sort the interference levels and pick the active set directly.
    Exact,
    Bisection,
}

impl WaterLevelMethod {
    fn for_len(len: usize) -> Self {
        if len <= EXACT_WATER_LEVEL_MAX_LEN {
            WaterLevelMethod::Exact
        } else {
            WaterLevelMethod::Bisection
        }
    }
}

fn snap_small(powers: &mut [f64]) {
    let max = powers.iter().copied().fold(0.0, f64::max);
    let floor = POWER_FLOOR * max;
    for p in powers.iter_mut() {
        if *p < floor {
            *p = 0.0;
        }
    }
}

/// Root of an increasing function on `[lo, hi]` (`f(lo) ≤ 0 ≤ f(hi)`), bisected
/// geometrically down to adjacent floats. Returns the final bracket.
fn bisect_increasing(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    debug_assert!(lo > 0.0 && hi >= lo);
    for _ in 0..BISECTION_MAX_ITER {
        let mid = if hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

// ---------------------------------------------------------------------------
// Opportunistic GNE game
// ---------------------------------------------------------------------------

/// Maximizes `Σ p_l` subject to `Σ (p_l I_l)² ≤ ς`.
///
/// Closed form: `p_l = √ς / (I_l² √(Σ_k I_k⁻²))`, with multiplier
/// `λ = ½ √(Σ_k I_k⁻² / ς)` so that `p_l = 1 / (2 λ I_l²)`.
pub fn br_opportunistic(interference: &[f64], varsigma: f64) -> Allocation {
    debug_assert!(varsigma > 0.0 && interference.iter().all(|&i| i > 0.0));
    // Scale by the smallest interference so Σ I⁻² cannot overflow.
    let min_i = interference.iter().copied().fold(f64::INFINITY, f64::min);
    let scaled: f64 = interference.iter().map(|&i| (min_i / i).powi(2)).sum();
    let root = scaled.sqrt() / min_i; // √(Σ I⁻²)
    let sqrt_s = varsigma.sqrt();
    let powers: Vec<f64> = interference.iter().map(|&i| sqrt_s / (i * i * root)).collect();
    Allocation {
        objective: powers.iter().sum(),
        multiplier: 0.5 * root / sqrt_s,
        powers,
    }
}

// ---------------------------------------------------------------------------
// Power minimization under a rate target
// ---------------------------------------------------------------------------

/// Minimizes `Σ p_l` subject to `Σ ln(1 + p_l/I_l) ≥ R̂`. The solution is
/// `p_l = [ν − I_l]⁺` with the water level chosen so the rate binds.
pub fn br_power_min(interference: &[f64], rate_target: f64) -> Allocation {
    br_power_min_with(interference, rate_target, WaterLevelMethod::for_len(interference.len()))
}

pub fn br_power_min_with(interference: &[f64], rate_target: f64, method: WaterLevelMethod) -> Allocation {
    debug_assert!(rate_target > 0.0 && interference.iter().all(|&i| i > 0.0));
    let mut level = match method {
        WaterLevelMethod::Exact => rate_level_exact(interference, rate_target),
        WaterLevelMethod::Bisection => {
            let lo = interference.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = interference.iter().copied().fold(0.0, f64::max) * rate_target.exp();
            let rate = |nu: f64| -> f64 { interference.iter().map(|&i| (nu / i).ln().max(0.0)).sum() };
            let (_, hi) = bisect_increasing(lo, hi, |nu| rate(nu) - rate_target);
            // Re-derive the level from the identified active set.
            rate_level_on_active(interference, rate_target, hi)
        }
    };
    // Rounding may leave the rate a hair short; the contract is rate ≥ R̂.
    let mut powers;
    let mut tries = 0;
    loop {
        powers = interference.iter().map(|&i| (level - i).max(0.0)).collect::<Vec<_>>();
        let rate: f64 = powers.iter().zip(interference).map(|(p, i)| (p / i).ln_1p()).sum();
        if rate >= rate_target || tries >= 64 {
            break;
        }
        level *= 1.0 + 2.0 * f64::EPSILON;
        tries += 1;
    }
    snap_small(&mut powers);
    Allocation {
        objective: powers.iter().sum(),
        multiplier: level,
        powers,
    }
}

fn rate_level_exact(interference: &[f64], rate_target: f64) -> f64 {
    let s = sorted(interference);
    let mut log_sum = 0.0;
    let mut level = 0.0;
    for k in 0..s.len() {
        log_sum += s[k].ln();
        level = ((rate_target + log_sum) / (k + 1) as f64).exp();
        if k + 1 < s.len() && level <= s[k + 1] {
            break;
        }
    }
    level
}

fn rate_level_on_active(interference: &[f64], rate_target: f64, approx_level: f64) -> f64 {
    let (k, log_sum) = interference
        .iter()
        .filter(|&&i| i < approx_level)
        .fold((0usize, 0.0), |(k, s), &i| (k + 1, s + i.ln()));
    if k == 0 {
        return approx_level;
    }
    ((rate_target + log_sum) / k as f64).exp()
}

// ---------------------------------------------------------------------------
// Waterfilling
// ---------------------------------------------------------------------------

/// Maximizes `Σ ln(1 + p_l/I_l)` subject to `Σ p_l ≤ P`:
/// `p_l = [ν − I_l]⁺` with `Σ p_l = P`.
pub fn br_waterfill(interference: &[f64], budget: f64) -> Allocation {
    br_waterfill_with(interference, budget, WaterLevelMethod::for_len(interference.len()))
}

pub fn br_waterfill_with(interference: &[f64], budget: f64, method: WaterLevelMethod) -> Allocation {
    debug_assert!(budget > 0.0 && interference.iter().all(|&i| i > 0.0));
    let level = match method {
        WaterLevelMethod::Exact => sum_level_exact(interference, budget),
        WaterLevelMethod::Bisection => {
            let lo = interference.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = lo + budget;
            let filled = |nu: f64| -> f64 { interference.iter().map(|&i| (nu - i).max(0.0)).sum() };
            let (_, hi) = bisect_increasing(lo, hi, |nu| filled(nu) - budget);
            sum_level_on_active(interference, budget, hi)
        }
    };
    let mut powers: Vec<f64> = interference.iter().map(|&i| (level - i).max(0.0)).collect();
    snap_small(&mut powers);
    Allocation {
        objective: rate_objective(interference, &powers),
        multiplier: level,
        powers,
    }
}

fn sum_level_exact(interference: &[f64], budget: f64) -> f64 {
    let s = sorted(interference);
    let mut sum = 0.0;
    let mut level = 0.0;
    for k in 0..s.len() {
        sum += s[k];
        level = (budget + sum) / (k + 1) as f64;
        if k + 1 < s.len() && level <= s[k + 1] {
            break;
        }
    }
    level
}

fn sum_level_on_active(interference: &[f64], budget: f64, approx_level: f64) -> f64 {
    let (k, sum) = interference
        .iter()
        .filter(|&&i| i < approx_level)
        .fold((0usize, 0.0), |(k, s), &i| (k + 1, s + i));
    if k == 0 {
        return approx_level;
    }
    (budget + sum) / k as f64
}

fn rate_objective(interference: &[f64], powers: &[f64]) -> f64 {
    powers.iter().zip(interference).map(|(p, i)| (p / i).ln_1p()).sum()
}

// ---------------------------------------------------------------------------
// Priced waterfilling
// ---------------------------------------------------------------------------

/// Maximizes `Σ ln(1 + p_l/I_l) − λ Σ p_l I_l` subject to `Σ p_l ≤ P`:
/// `p_l = [1/(μ + λ I_l) − I_l]⁺`.
pub fn br_priced(interference: &[f64], budget: f64, price: f64) -> Allocation {
    debug_assert!(price >= 0.0);
    let costs: Vec<f64> = interference.iter().map(|&i| price * i).collect();
    br_fixed_priced(interference, budget, &costs)
}

/// Maximizes `Σ ln(1 + p_l/I_l) − Σ c_l p_l` subject to `Σ p_l ≤ P`:
/// `p_l = [1/(μ + c_l) − I_l]⁺` with `μ ≥ 0` complementary to the budget.
pub fn br_fixed_priced(interference: &[f64], budget: f64, costs: &[f64]) -> Allocation {
    debug_assert!(budget > 0.0 && interference.iter().all(|&i| i > 0.0));
    debug_assert!(costs.len() == interference.len() && costs.iter().all(|&c| c >= 0.0));
    let alloc = |mu: f64| -> Vec<f64> {
        interference
            .iter()
            .zip(costs)
            .map(|(&i, &c)| (1.0 / (mu + c) - i).max(0.0))
            .collect()
    };
    let total = |mu: f64| -> f64 { alloc(mu).iter().sum() };

    let free_total = total(0.0);
    let multiplier = if free_total.is_finite() && free_total <= budget {
        0.0
    } else {
        // Every channel is off once μ ≥ 1 / min I.
        let hi = 1.0 / interference.iter().copied().fold(f64::INFINITY, f64::min);
        let lo = hi * 1e-18;
        let (lo, hi) = bisect_increasing(lo, hi, |mu| budget - total(mu));
        // hi keeps Σp ≤ P; lo is the tighter side when it already meets P.
        if total(lo) <= budget {
            lo
        } else {
            hi
        }
    };
    let mut powers = alloc(multiplier);
    snap_small(&mut powers);
    let objective = rate_objective(interference, &powers) - powers.iter().zip(costs).map(|(p, c)| p * c).sum::<f64>();
    Allocation {
        powers,
        multiplier,
        objective,
    }
}

// ---------------------------------------------------------------------------
// Unified problem interface
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ResponseKind {
    Opportunistic { varsigma: f64 },
    PowerMin { rate_target: f64 },
    Waterfill { budget: f64 },
    Priced { budget: f64, price: f64 },
    FixedPriced { budget: f64, costs: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// One user's problem against the interference it currently sees.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseProblem {
    pub kind: ResponseKind,
    pub interference: Vec<f64>,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::usage(format!("{name} must be positive, got {v}")))
    }
}

impl BestResponseProblem {
    pub fn new(kind: ResponseKind, interference: Vec<f64>) -> Result<Self> {
        if interference.is_empty() {
            return Err(Error::usage("interference vector is empty"));
        }
        if let Some(i) = interference.iter().find(|i| !(**i > 0.0 && i.is_finite())) {
            return Err(Error::usage(format!("interference must be positive, got {i}")));
        }
        match &kind {
            ResponseKind::Opportunistic { varsigma } => positive("varsigma", *varsigma)?,
            ResponseKind::PowerMin { rate_target } => positive("rate target", *rate_target)?,
            ResponseKind::Waterfill { budget } => positive("power budget", *budget)?,
            ResponseKind::Priced { budget, price } => {
                positive("power budget", *budget)?;
                if !(*price >= 0.0 && price.is_finite()) {
                    return Err(Error::usage(format!("price must be nonnegative, got {price}")));
                }
            }
            ResponseKind::FixedPriced { budget, costs } => {
                positive("power budget", *budget)?;
                if costs.len() != interference.len() {
                    return Err(Error::usage("price vector length differs from interference length"));
                }
                if let Some(c) = costs.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
                    return Err(Error::usage(format!("prices must be nonnegative, got {c}")));
                }
            }
        }
        Ok(Self { kind, interference })
    }

    pub fn solve(&self) -> Allocation {
        let i = &self.interference;
        match &self.kind {
            ResponseKind::Opportunistic { varsigma } => br_opportunistic(i, *varsigma),
            ResponseKind::PowerMin { rate_target } => br_power_min(i, *rate_target),
            ResponseKind::Waterfill { budget } => br_waterfill(i, *budget),
            ResponseKind::Priced { budget, price } => br_priced(i, *budget, *price),
            ResponseKind::FixedPriced { budget, costs } => br_fixed_priced(i, *budget, costs),
        }
    }

    pub fn sense(&self) -> Sense {
        match self.kind {
            ResponseKind::PowerMin { .. } => Sense::Minimize,
            _ => Sense::Maximize,
        }
    }

    /// Per-channel linear price, if the objective has one.
    fn costs(&self) -> Option<Vec<f64>> {
        match &self.kind {
            ResponseKind::Priced { price, .. } => Some(self.interference.iter().map(|i| price * i).collect()),
            ResponseKind::FixedPriced { costs, .. } => Some(costs.clone()),
            ResponseKind::Waterfill { .. } => Some(vec![0.0; self.interference.len()]),
            _ => None,
        }
    }

    pub fn objective(&self, powers: &[f64]) -> f64 {
        match &self.kind {
            ResponseKind::Opportunistic { .. } | ResponseKind::PowerMin { .. } => powers.iter().sum(),
            _ => {
                let costs = self.costs().expect("rate games carry costs");
                rate_objective(&self.interference, powers)
                    - powers.iter().zip(&costs).map(|(p, c)| p * c).sum::<f64>()
            }
        }
    }

    /// Feasibility with relative slack `tol` on the coupling constraint.
    pub fn is_feasible(&self, powers: &[f64], tol: f64) -> bool {
        if powers.len() != self.interference.len() || powers.iter().any(|p| !(*p >= 0.0)) {
            return false;
        }
        match &self.kind {
            ResponseKind::Opportunistic { varsigma } => {
                let q: f64 = powers.iter().zip(&self.interference).map(|(p, i)| (p * i).powi(2)).sum();
                q <= varsigma * (1.0 + tol)
            }
            ResponseKind::PowerMin { rate_target } => {
                rate_objective(&self.interference, powers) >= rate_target * (1.0 - tol)
            }
            ResponseKind::Waterfill { budget }
            | ResponseKind::Priced { budget, .. }
            | ResponseKind::FixedPriced { budget, .. } => powers.iter().sum::<f64>() <= budget * (1.0 + tol),
        }
    }

    /// True when `a` is a strictly better objective value than `b`.
    pub fn improves(&self, a: f64, b: f64) -> bool {
        match self.sense() {
            Sense::Maximize => a > b,
            Sense::Minimize => a < b,
        }
    }

    /// Largest relative violation among stationarity, sign and complementarity
    /// conditions for `alloc`. Zero means an exact KKT point.
    pub fn kkt_residual(&self, alloc: &Allocation) -> f64 {
        let p = &alloc.powers;
        let i = &self.interference;
        if p.len() != i.len() || p.iter().any(|v| !(*v >= 0.0)) || !alloc.multiplier.is_finite() {
            return f64::INFINITY;
        }
        match &self.kind {
            ResponseKind::Opportunistic { varsigma } => {
                let lambda = alloc.multiplier;
                if !(lambda > 0.0) {
                    return f64::INFINITY;
                }
                let stationarity = p
                    .iter()
                    .zip(i)
                    .map(|(p, i)| (1.0 - 2.0 * lambda * p * i * i).abs())
                    .fold(0.0, f64::max);
                let q: f64 = p.iter().zip(i).map(|(p, i)| (p * i).powi(2)).sum();
                stationarity.max((q - varsigma).abs() / varsigma)
            }
            ResponseKind::PowerMin { rate_target } => {
                let level = alloc.multiplier;
                let rate = rate_objective(i, p);
                level_residual(i, p, level).max((rate - rate_target).abs() / rate_target)
            }
            ResponseKind::Waterfill { budget } => {
                let level = alloc.multiplier;
                let total: f64 = p.iter().sum();
                level_residual(i, p, level).max((total - budget).abs() / budget)
            }
            ResponseKind::Priced { budget, .. } | ResponseKind::FixedPriced { budget, .. } => {
                let mu = alloc.multiplier;
                if mu < 0.0 {
                    return f64::INFINITY;
                }
                let costs = self.costs().expect("priced kinds carry costs");
                let mut worst = 0.0_f64;
                for ((&p, &i), &c) in p.iter().zip(i).zip(&costs) {
                    let r = if p > 0.0 {
                        ((mu + c) * (i + p) - 1.0).abs()
                    } else {
                        (1.0 - (mu + c) * i).max(0.0)
                    };
                    worst = worst.max(r);
                }
                let total: f64 = p.iter().sum();
                let budget_residual = if mu > 0.0 {
                    (total - budget).abs() / budget
                } else {
                    (total - budget).max(0.0) / budget
                };
                worst.max(budget_residual)
            }
        }
    }
}

/// Water-level conditions shared by power-min and waterfilling: active
/// channels sit at `I + p = ν`, inactive ones have `I ≥ ν`.
fn level_residual(interference: &[f64], powers: &[f64], level: f64) -> f64 {
    if !(level > 0.0) {
        return f64::INFINITY;
    }
    interference
        .iter()
        .zip(powers)
        .map(|(&i, &p)| {
            if p > 0.0 {
                (i + p - level).abs() / level
            } else {
                (level - i).max(0.0) / level
            }
        })
        .fold(0.0, f64::max)
}
