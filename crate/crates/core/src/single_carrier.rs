//! Classical single-carrier iterations: target-SINR tracking (TPC) and
//! opportunistic power control (OPC).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::network::{PowerProfile, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateKind {
    /// `p_i(n+1) = γ̂_i I_i(n)`.
    Tpc,
    /// `p_i(n+1) = ζ_i / I_i(n)`.
    Opc,
}

/// One of the two single-carrier rules with its per-user parameters
/// (`γ̂_i` for TPC, `ζ_i` for OPC).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleCarrierUpdate {
    pub kind: UpdateKind,
    pub params: Vec<f64>,
}

impl SingleCarrierUpdate {
    pub fn new(kind: UpdateKind, params: Vec<f64>) -> Result<Self> {
        if let Some(p) = params.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
            return Err(Error::usage(format!("{kind:?} parameters must be positive, got {p}")));
        }
        Ok(Self { kind, params })
    }

    pub fn step(&self, scenario: &Scenario, profile: &PowerProfile) -> Result<PowerProfile> {
        match self.kind {
            UpdateKind::Tpc => tpc_step(scenario, profile, &self.params),
            UpdateKind::Opc => opc_step(scenario, profile, &self.params),
        }
    }
}

fn check_single_carrier(scenario: &Scenario, profile: Option<&PowerProfile>, params: &[f64]) -> Result<()> {
    if scenario.subchannels() != 1 {
        return Err(Error::usage(format!(
            "single-carrier update needs L = 1, scenario has L = {}",
            scenario.subchannels()
        )));
    }
    if params.len() != scenario.users() {
        return Err(Error::usage(format!(
            "expected {} per-user parameters, got {}",
            scenario.users(),
            params.len()
        )));
    }
    if let Some(p) = profile {
        scenario.check_profile(p)?;
    }
    Ok(())
}

/// TPC response: product form `γ̂ · I`, which equals `(γ̂/γ)·p` whenever
/// `p > 0` and stays defined at `p = 0`.
#[inline]
pub fn tpc_response(interference: f64, target_sinr: f64) -> f64 {
    target_sinr * interference
}

#[inline]
pub fn opc_response(interference: f64, opc_constant: f64) -> f64 {
    opc_constant / interference
}

pub fn tpc_step(scenario: &Scenario, profile: &PowerProfile, targets: &[f64]) -> Result<PowerProfile> {
    check_single_carrier(scenario, Some(profile), targets)?;
    let next: Vec<f64> = (0..scenario.users())
        .map(|i| tpc_response(scenario.interference_at(profile, i, 0), targets[i]))
        .collect();
    PowerProfile::from_vector(&next)
}

pub fn opc_step(scenario: &Scenario, profile: &PowerProfile, constants: &[f64]) -> Result<PowerProfile> {
    check_single_carrier(scenario, Some(profile), constants)?;
    let next: Vec<f64> = (0..scenario.users())
        .map(|i| opc_response(scenario.interference_at(profile, i, 0), constants[i]))
        .collect();
    PowerProfile::from_vector(&next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    /// `ρ(diag(γ̂) F)` with `F` the normalized cross-gain matrix.
    pub spectral_radius: f64,
}

/// `diag(γ̂)·F`, `F_ij = ĝ_ij` off the diagonal and 0 on it.
pub fn tpc_gain_matrix(scenario: &Scenario, targets: &[f64]) -> Result<DMatrix<f64>> {
    check_single_carrier(scenario, None, targets)?;
    let m = scenario.users();
    Ok(DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            0.0
        } else {
            targets[i] * scenario.cross_gain(i, j, 0)
        }
    }))
}

/// Perron–Frobenius feasibility: targets are jointly reachable with finite
/// powers iff `ρ(diag(γ̂) F) < 1`.
pub fn tpc_feasible(scenario: &Scenario, targets: &[f64]) -> Result<Feasibility> {
    let h = tpc_gain_matrix(scenario, targets)?;
    Ok(Feasibility {
        feasible: linalg::spectral_radius_below_one(&h)?,
        spectral_radius: linalg::spectral_radius(&h)?,
    })
}

/// Minimal powers meeting all targets with equality:
/// `p = (I − diag(γ̂)F)⁻¹ diag(γ̂) η̂`. `None` when infeasible.
pub fn tpc_fixed_point(scenario: &Scenario, targets: &[f64]) -> Result<Option<Vec<f64>>> {
    if !tpc_feasible(scenario, targets)?.feasible {
        return Ok(None);
    }
    let m = scenario.users();
    let h = tpc_gain_matrix(scenario, targets)?;
    let lhs = DMatrix::identity(m, m) - h;
    let rhs = nalgebra::DVector::from_fn(m, |i, _| targets[i] * scenario.noise(i, 0));
    Ok(lhs.lu().solve(&rhs).map(|v| v.iter().copied().collect()))
}
