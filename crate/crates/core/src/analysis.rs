//! Sufficient conditions for equilibrium uniqueness and Jacobi convergence.
//!
//! For the opportunistic game the conditions are built from worst-case power
//! and interference bounds ([`BoundSet`]); matrix `A` must be a P-matrix, or
//! equivalently `ρ(B) < 1`. For the priced waterfilling game matrix `D` must
//! be a P-matrix. The conditions are sufficient only: a failing test
//! certifies nothing about the game.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::best_response::br_opportunistic;
use crate::error::{Error, Result};
use crate::linalg;
use crate::network::Scenario;

/// `σ` as a fraction of the smallest `(p̲ I̲)²` in the scenario.
pub const SIGMA_FRACTION: f64 = 1e-9;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Worst-case bounds for the opportunistic game, indexed `[i][l]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    /// `p̄ = √ς_i / η̂_i^l`.
    pub p_max: Vec<Vec<f64>>,
    /// `Σ_{j≠i} ĝ_{i,j}^l p̄_j^l + η̂_i^l`.
    pub i_max: Vec<Vec<f64>>,
    /// Best response of user `i` on channel `l` when every other user sits at
    /// `p̄` on channel `l` only.
    pub p_min: Vec<Vec<f64>>,
    /// `I̲ = η̂_i^l`.
    pub i_min: Vec<Vec<f64>>,
    /// `q̲ = max((p̲ I̲)² − σ, 0)`.
    pub q_min: Vec<Vec<f64>>,
    pub sigma: f64,
}

fn check_params(scenario: &Scenario, name: &str, values: &[f64], allow_zero: bool) -> Result<()> {
    if values.len() != scenario.users() {
        return Err(Error::usage(format!(
            "{name}: expected {} values, got {}",
            scenario.users(),
            values.len()
        )));
    }
    for v in values {
        let ok = if allow_zero { *v >= 0.0 } else { *v > 0.0 };
        if !(ok && v.is_finite()) {
            return Err(Error::usage(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

pub fn compute_bounds(scenario: &Scenario, varsigma: &[f64]) -> Result<BoundSet> {
    check_params(scenario, "varsigma", varsigma, false)?;
    let m = scenario.users();
    let l_count = scenario.subchannels();
    let p_max: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..l_count).map(|l| varsigma[i].sqrt() / scenario.noise(i, l)).collect())
        .collect();
    let i_max: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..l_count)
                .map(|l| {
                    scenario.noise(i, l)
                        + (0..m)
                            .filter(|&j| j != i)
                            .map(|j| scenario.cross_gain(i, j, l) * p_max[j][l])
                            .sum::<f64>()
                })
                .collect()
        })
        .collect();
    let p_min: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..l_count)
                .map(|l| {
                    let mut worst = scenario.noise_row(i).to_vec();
                    worst[l] = i_max[i][l];
                    br_opportunistic(&worst, varsigma[i]).powers[l]
                })
                .collect()
        })
        .collect();
    let i_min: Vec<Vec<f64>> = (0..m).map(|i| scenario.noise_row(i).to_vec()).collect();
    let min_q = (0..m)
        .flat_map(|i| (0..l_count).map(move |l| (i, l)))
        .map(|(i, l)| (p_min[i][l] * i_min[i][l]).powi(2))
        .fold(f64::INFINITY, f64::min);
    let sigma = SIGMA_FRACTION * min_q;
    let q_min = (0..m)
        .map(|i| {
            (0..l_count)
                .map(|l| ((p_min[i][l] * i_min[i][l]).powi(2) - sigma).max(0.0))
                .collect()
        })
        .collect();
    Ok(BoundSet {
        p_max,
        i_max,
        p_min,
        i_min,
        q_min,
        sigma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixKind {
    /// P-matrix test for the opportunistic game.
    A,
    /// Spectral-radius test for the opportunistic game.
    B,
    /// P-matrix test for the priced waterfilling game.
    D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionMatrix {
    pub kind: MatrixKind,
    pub entries: DMatrix<f64>,
    /// Set when some user's `min_l √q̲ η̂` is zero, which makes the test fail
    /// trivially.
    pub degenerate: bool,
}

/// `min_l √q̲_i^l η̂_i^l` per user.
fn diagonal_strength(scenario: &Scenario, bounds: &BoundSet) -> Vec<f64> {
    (0..scenario.users())
        .map(|i| {
            (0..scenario.subchannels())
                .map(|l| bounds.q_min[i][l].sqrt() * scenario.noise(i, l))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// `max_l ĝ_{i,j}^l / η̂_i^l`.
fn coupling(scenario: &Scenario, i: usize, j: usize) -> f64 {
    (0..scenario.subchannels())
        .map(|l| scenario.cross_gain(i, j, l) / scenario.noise(i, l))
        .fold(0.0, f64::max)
}

fn check_bounds(scenario: &Scenario, bounds: &BoundSet) -> Result<()> {
    if bounds.q_min.len() != scenario.users()
        || bounds.q_min.iter().any(|r| r.len() != scenario.subchannels())
    {
        return Err(Error::usage("bounds were computed for a different scenario"));
    }
    Ok(())
}

pub fn matrix_a(scenario: &Scenario, bounds: &BoundSet, varsigma: &[f64]) -> Result<ConditionMatrix> {
    check_params(scenario, "varsigma", varsigma, false)?;
    check_bounds(scenario, bounds)?;
    let m = scenario.users();
    let strength = diagonal_strength(scenario, bounds);
    let entries = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            strength[i] / varsigma[i].sqrt()
        } else {
            -3.0 * varsigma[i].sqrt() * coupling(scenario, i, j)
        }
    });
    Ok(ConditionMatrix {
        kind: MatrixKind::A,
        entries,
        degenerate: strength.iter().any(|&s| !(s > 0.0)),
    })
}

pub fn matrix_b(scenario: &Scenario, bounds: &BoundSet, varsigma: &[f64]) -> Result<ConditionMatrix> {
    check_params(scenario, "varsigma", varsigma, false)?;
    check_bounds(scenario, bounds)?;
    let m = scenario.users();
    let strength = diagonal_strength(scenario, bounds);
    let degenerate = strength.iter().any(|&s| !(s > 0.0));
    let entries = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            0.0
        } else {
            let c = coupling(scenario, i, j);
            if c == 0.0 {
                0.0
            } else {
                3.0 * varsigma[i] * c / strength[i]
            }
        }
    });
    Ok(ConditionMatrix {
        kind: MatrixKind::B,
        entries,
        degenerate,
    })
}

/// `ψ̄_i^l = Σ_j ĝ_{i,j}^l P_j + η̂_i^l`, the sum including `j = i` with
/// `ĝ_{i,i} = 1`.
pub fn psi_upper(scenario: &Scenario, budgets: &[f64]) -> Vec<Vec<f64>> {
    (0..scenario.users())
        .map(|i| {
            (0..scenario.subchannels())
                .map(|l| {
                    scenario.noise(i, l)
                        + (0..scenario.users())
                            .map(|j| scenario.cross_gain(i, j, l) * budgets[j])
                            .sum::<f64>()
                })
                .collect()
        })
        .collect()
}

pub fn matrix_d(scenario: &Scenario, budgets: &[f64], prices: &[f64]) -> Result<ConditionMatrix> {
    check_params(scenario, "power budgets", budgets, false)?;
    check_params(scenario, "prices", prices, true)?;
    let m = scenario.users();
    let upper = psi_upper(scenario, budgets);
    let entries = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            1.0
        } else {
            -(0..scenario.subchannels())
                .map(|l| {
                    let lower = scenario.noise(i, l);
                    scenario.cross_gain(i, j, l) * (1.0 + prices[i] * upper[i][l].powi(2)) * upper[j][l] / lower
                })
                .fold(0.0, f64::max)
        }
    });
    Ok(ConditionMatrix {
        kind: MatrixKind::D,
        entries,
        degenerate: false,
    })
}

impl ConditionMatrix {
    /// Verdict of the test this matrix feeds: P-matrix for `A` and `D`,
    /// `ρ < 1` for `B`.
    pub fn passes(&self) -> Result<bool> {
        if self.degenerate {
            return Ok(false);
        }
        match self.kind {
            MatrixKind::A | MatrixKind::D => linalg::is_p_matrix(&self.entries),
            MatrixKind::B => linalg::spectral_radius_below_one(&self.entries),
        }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        linalg::to_rows(&self.entries)
    }
}

/// Verdicts for the opportunistic game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpportunisticVerdict {
    pub a_is_p_matrix: bool,
    pub b_spectral_radius: f64,
    pub b_below_one: bool,
    pub degenerate: bool,
}

impl OpportunisticVerdict {
    pub fn certified(&self) -> bool {
        self.a_is_p_matrix
    }
}

pub fn opportunistic_verdict(scenario: &Scenario, varsigma: &[f64]) -> Result<OpportunisticVerdict> {
    let bounds = compute_bounds(scenario, varsigma)?;
    let a = matrix_a(scenario, &bounds, varsigma)?;
    let b = matrix_b(scenario, &bounds, varsigma)?;
    Ok(OpportunisticVerdict {
        a_is_p_matrix: a.passes()?,
        b_spectral_radius: linalg::spectral_radius(&b.entries)?,
        b_below_one: b.passes()?,
        degenerate: a.degenerate,
    })
}

pub fn priced_verdict(scenario: &Scenario, budgets: &[f64], prices: &[f64]) -> Result<bool> {
    matrix_d(scenario, budgets, prices)?.passes()
}

/// Serializable summary of every condition for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub users: usize,
    pub subchannels: usize,
    pub varsigma: Vec<f64>,
    pub power_budgets: Vec<f64>,
    pub prices: Vec<f64>,
    pub bounds: BoundSet,
    pub matrix_a: Vec<Vec<f64>>,
    pub matrix_b: Vec<Vec<f64>>,
    pub matrix_d: Vec<Vec<f64>>,
    pub a_is_p_matrix: bool,
    pub b_spectral_radius: f64,
    pub b_below_one: bool,
    pub d_is_p_matrix: bool,
    pub degenerate: bool,
    pub psi_upper_includes_own_budget: bool,
    pub note: String,
}

pub fn analyze(scenario: &Scenario, varsigma: &[f64], budgets: &[f64], prices: &[f64]) -> Result<AnalysisReport> {
    let bounds = compute_bounds(scenario, varsigma)?;
    let a = matrix_a(scenario, &bounds, varsigma)?;
    let b = matrix_b(scenario, &bounds, varsigma)?;
    let d = matrix_d(scenario, budgets, prices)?;
    Ok(AnalysisReport {
        schema_version: REPORT_SCHEMA_VERSION,
        users: scenario.users(),
        subchannels: scenario.subchannels(),
        varsigma: varsigma.to_vec(),
        power_budgets: budgets.to_vec(),
        prices: prices.to_vec(),
        a_is_p_matrix: a.passes()?,
        b_spectral_radius: linalg::spectral_radius(&b.entries)?,
        b_below_one: b.passes()?,
        d_is_p_matrix: d.passes()?,
        degenerate: a.degenerate,
        matrix_a: a.rows(),
        matrix_b: b.rows(),
        matrix_d: d.rows(),
        bounds,
        psi_upper_includes_own_budget: true,
        note: "conditions are sufficient only: a passing test certifies a unique equilibrium \
               reached by simultaneous best responses; a failing test certifies nothing"
            .into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hand_instance() -> Scenario {
        Scenario::from_normalized(
            &[vec![vec![1.0], vec![0.1]], vec![vec![0.1], vec![1.0]]],
            &[vec![0.01], vec![0.01]],
        )
        .unwrap()
    }

    #[test]
    fn single_user_bounds() {
        let s = Scenario::from_normalized(&[vec![vec![1.0]]], &[vec![0.02]]).unwrap();
        let b = compute_bounds(&s, &[4.0]).unwrap();
        assert_relative_eq!(b.p_max[0][0], 100.0);
        assert_relative_eq!(b.p_min[0][0], 100.0);
        assert_relative_eq!(b.q_min[0][0], 4.0 - b.sigma, max_relative = 1e-14);
        let a = matrix_a(&s, &b, &[4.0]).unwrap();
        assert!(a.entries[(0, 0)] > 0.0);
        assert!(a.passes().unwrap());
    }

    #[test]
    fn two_user_hand_bounds_and_matrices() {
        let s = hand_instance();
        let b = compute_bounds(&s, &[1.0, 1.0]).unwrap();
        assert_relative_eq!(b.p_max[0][0], 100.0, max_relative = 1e-14);
        assert_relative_eq!(b.i_max[0][0], 10.01, max_relative = 1e-14);
        assert_relative_eq!(b.p_min[0][0], 1.0 / 10.01, max_relative = 1e-14);

        // σ = 1e-9 (p̲ η̂)², q̲ = (1 − 1e-9)(p̲ η̂)².
        let pe = 0.01 / 10.01;
        assert_relative_eq!(b.sigma, 1e-9 * pe * pe, max_relative = 1e-12);
        let diag = (pe * pe * (1.0 - 1e-9)).sqrt() * 0.01;
        let a = matrix_a(&s, &b, &[1.0, 1.0]).unwrap();
        assert_relative_eq!(a.entries[(0, 0)], diag, max_relative = 1e-12);
        assert_relative_eq!(a.entries[(0, 1)], -30.0, max_relative = 1e-12);
        assert!(!a.passes().unwrap());

        let bm = matrix_b(&s, &b, &[1.0, 1.0]).unwrap();
        assert_eq!(bm.entries[(0, 0)], 0.0);
        assert_relative_eq!(bm.entries[(0, 1)], 30.0 / diag, max_relative = 1e-12);
    }

    #[test]
    fn b_is_normalized_off_diagonal_of_a() {
        let s = Scenario::generate_reference(9, 4, 6).unwrap();
        let vs = [1e-4, 2e-4, 5e-5, 1e-3];
        let b = compute_bounds(&s, &vs).unwrap();
        let a = matrix_a(&s, &b, &vs).unwrap();
        let bm = matrix_b(&s, &b, &vs).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_relative_eq!(bm.entries[(i, j)], -a.entries[(i, j)] / a.entries[(i, i)], max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_cross_gains_pass_everything() {
        let s = Scenario::generate(1, 3, 4, crate::network::CrossGainCeiling::Constant(1e-300), 0.01).unwrap();
        let zero = Scenario::from_normalized(
            &(0..3).map(|_| (0..3).map(|_| vec![0.0; 4]).collect()).collect::<Vec<_>>(),
            &(0..3).map(|_| vec![0.01; 4]).collect::<Vec<_>>(),
        )
        .unwrap();
        for sc in [&s, &zero] {
            let v = opportunistic_verdict(sc, &[1.0, 1.0, 1.0]).unwrap();
            assert!(v.a_is_p_matrix && v.b_below_one);
        }
        let d = matrix_d(&zero, &[1.0; 3], &[2.0; 3]).unwrap();
        assert_eq!(d.entries, DMatrix::identity(3, 3));
        assert!(d.passes().unwrap());
        let b = matrix_b(&zero, &compute_bounds(&zero, &[1.0; 3]).unwrap(), &[1.0; 3]).unwrap();
        assert_eq!(b.entries, DMatrix::zeros(3, 3));
    }

    #[test]
    fn d_hand_instance_and_zero_price() {
        let s = hand_instance();
        // ψ̄ = 0.1·2 + 1·1 + 0.01 for user 0 with budgets (1, 2).
        let budgets = [1.0, 2.0];
        let up = psi_upper(&s, &budgets);
        assert_relative_eq!(up[0][0], 1.21, max_relative = 1e-14);
        assert_relative_eq!(up[1][0], 0.1 + 2.0 + 0.01, max_relative = 1e-14);
        let d = matrix_d(&s, &budgets, &[0.5, 0.0]).unwrap();
        let d01 = 0.1 * (1.0 + 0.5 * 1.21 * 1.21) * 2.11 / 0.01;
        assert_relative_eq!(d.entries[(0, 1)], -d01, max_relative = 1e-12);
        let d10 = 0.1 * 1.21 / 0.01;
        assert_relative_eq!(d.entries[(1, 0)], -d10, max_relative = 1e-12);
        assert!(!d.passes().unwrap());
    }

    #[test]
    fn report_serializes() {
        let s = hand_instance();
        let r = analyze(&s, &[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["schema_version"], 1);
        assert!(json["matrix_a"].is_array());
        assert!(json["bounds"]["sigma"].as_f64().unwrap() > 0.0);
    }
}
