//! Physical-layer data model.
//!
//! A [`Scenario`] holds `M` users sharing `L` sub-channels. Gains and noise are
//! stored in normalized form: the direct gain of every user is 1, the cross
//! gain `ĝ[i][j][l] = G[i][j][l] / G[i][i][l]` and the noise
//! `η̂[i][l] = η[i][l] / G[i][i][l]`. Every quantity the games consume
//! (effective interference, SINR, rate) is a function of those two arrays.
//!
//! Indices are 0-based. User `i` here is user `i + 1` in the usual 1-based
//! notation, which matters for the generator's `(0, 0.1 / (i + 1))` ceiling.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Noise power used by the reference setup (Watts, normalized).
pub const DEFAULT_NOISE: f64 = 0.01;

/// Numerator of the per-receiver cross-gain ceiling `0.1 / i`.
pub const DEFAULT_CROSS_GAIN_BASE: f64 = 0.1;

/// Per-step channel scaling applied by the degradation presets.
pub const DEFAULT_STEP_FACTOR: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioFile", into = "ScenarioFile")]
pub struct Scenario {
    users: usize,
    subchannels: usize,
    /// `ĝ[(i * M + j) * L + l]`; the diagonal is exactly 1.
    cross: Vec<f64>,
    /// `η̂[i * L + l]`.
    noise: Vec<f64>,
    seed: Option<u64>,
}

/// How the generator bounds cross gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum CrossGainCeiling {
    /// `ĝ[i][j][l] ~ U(0, base / (i + 1))`: receivers with a larger index see
    /// less interference.
    PerReceiver(f64),
    /// `ĝ[i][j][l] ~ U(0, c)` for every receiver.
    Constant(f64),
}

impl Default for CrossGainCeiling {
    fn default() -> Self {
        CrossGainCeiling::PerReceiver(DEFAULT_CROSS_GAIN_BASE)
    }
}

impl CrossGainCeiling {
    pub fn ceiling(&self, receiver: usize) -> f64 {
        match *self {
            CrossGainCeiling::PerReceiver(base) => base / (receiver as f64 + 1.0),
            CrossGainCeiling::Constant(c) => c,
        }
    }
}

impl Scenario {
    /// Builds a scenario from already-normalized cross gains `[i][j][l]` and
    /// noise `[i][l]`. Diagonal entries of `cross` are ignored and set to 1.
    pub fn from_normalized(cross: &[Vec<Vec<f64>>], noise: &[Vec<f64>]) -> Result<Self> {
        let users = cross.len();
        if users == 0 {
            return Err(Error::usage("scenario needs at least one user"));
        }
        let subchannels = noise.first().map_or(0, Vec::len);
        if subchannels == 0 {
            return Err(Error::usage("scenario needs at least one sub-channel"));
        }
        if noise.len() != users {
            return Err(Error::usage(format!(
                "noise has {} rows, expected {users}",
                noise.len()
            )));
        }
        let mut flat_cross = vec![0.0; users * users * subchannels];
        let mut flat_noise = vec![0.0; users * subchannels];
        for i in 0..users {
            if cross[i].len() != users {
                return Err(Error::usage(format!("cross gains for receiver {i} have wrong width")));
            }
            if noise[i].len() != subchannels {
                return Err(Error::usage(format!("noise row {i} has wrong length")));
            }
            for l in 0..subchannels {
                let eta = noise[i][l];
                if !(eta > 0.0 && eta.is_finite()) {
                    return Err(Error::usage(format!("noise[{i}][{l}] must be positive, got {eta}")));
                }
                flat_noise[i * subchannels + l] = eta;
            }
            for j in 0..users {
                if cross[i][j].len() != subchannels {
                    return Err(Error::usage(format!("cross gains [{i}][{j}] have wrong length")));
                }
                for l in 0..subchannels {
                    let g = if i == j { 1.0 } else { cross[i][j][l] };
                    if !(g >= 0.0 && g.is_finite()) {
                        return Err(Error::usage(format!("cross gain [{i}][{j}][{l}] must be nonnegative, got {g}")));
                    }
                    flat_cross[(i * users + j) * subchannels + l] = g;
                }
            }
        }
        Ok(Self {
            users,
            subchannels,
            cross: flat_cross,
            noise: flat_noise,
            seed: None,
        })
    }

    /// Normalizes raw gains `G[i][j][l]` (transmitter `j` to receiver `i`) and
    /// noise powers `η[i][l]`.
    pub fn from_raw(gain: &[Vec<Vec<f64>>], noise: &[Vec<f64>]) -> Result<Self> {
        let users = gain.len();
        if noise.len() != users {
            return Err(Error::usage("gain and noise disagree on the number of users"));
        }
        let mut cross = Vec::with_capacity(users);
        let mut eta = Vec::with_capacity(users);
        for i in 0..users {
            let row = gain[i]
                .get(i)
                .ok_or_else(|| Error::usage(format!("gain row {i} lacks a direct gain")))?;
            if row.len() != noise[i].len() {
                return Err(Error::usage(format!("gain/noise length mismatch for user {i}")));
            }
            if let Some((l, g)) = row.iter().enumerate().find(|(_, g)| !(**g > 0.0)) {
                return Err(Error::usage(format!("direct gain [{i}][{i}][{l}] must be positive, got {g}")));
            }
            cross.push(
                gain[i]
                    .iter()
                    .map(|g_ij| g_ij.iter().zip(row).map(|(g, d)| g / d).collect())
                    .collect(),
            );
            eta.push(noise[i].iter().zip(row).map(|(n, d)| n / d).collect());
        }
        Self::from_normalized(&cross, &eta)
    }

    /// Random scenario: direct gains 1, cross gains uniform in
    /// `(0, ceiling(i))`, noise `noise` everywhere. Deterministic in `seed`.
    pub fn generate(
        seed: u64,
        users: usize,
        subchannels: usize,
        ceiling: CrossGainCeiling,
        noise: f64,
    ) -> Result<Self> {
        if users == 0 || subchannels == 0 {
            return Err(Error::usage("number of users and sub-channels must be positive"));
        }
        if !(noise > 0.0) {
            return Err(Error::usage(format!("noise level must be positive, got {noise}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cross = vec![0.0; users * users * subchannels];
        for i in 0..users {
            let hi = ceiling.ceiling(i);
            if !(hi > 0.0) {
                return Err(Error::usage(format!("cross-gain ceiling must be positive, got {hi}")));
            }
            for j in 0..users {
                for l in 0..subchannels {
                    cross[(i * users + j) * subchannels + l] = if i == j {
                        1.0
                    } else {
                        open_unit(&mut rng) * hi
                    };
                }
            }
        }
        Ok(Self {
            users,
            subchannels,
            cross,
            noise: vec![noise; users * subchannels],
            seed: Some(seed),
        })
    }

    /// Reference setup: `(0, 0.1 / i)` cross gains and 0.01 W noise.
    pub fn generate_reference(seed: u64, users: usize, subchannels: usize) -> Result<Self> {
        Self::generate(seed, users, subchannels, CrossGainCeiling::default(), DEFAULT_NOISE)
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn subchannels(&self) -> usize {
        self.subchannels
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Normalized gain `ĝ[i][j][l]`, equal to 1 when `i == j`.
    #[inline]
    pub fn cross_gain(&self, receiver: usize, transmitter: usize, subchannel: usize) -> f64 {
        self.cross[(receiver * self.users + transmitter) * self.subchannels + subchannel]
    }

    /// Normalized noise `η̂[i][l]`.
    #[inline]
    pub fn noise(&self, user: usize, subchannel: usize) -> f64 {
        self.noise[user * self.subchannels + subchannel]
    }

    pub fn noise_row(&self, user: usize) -> &[f64] {
        &self.noise[user * self.subchannels..(user + 1) * self.subchannels]
    }

    fn check_user(&self, user: usize) -> Result<()> {
        if user >= self.users {
            return Err(Error::usage(format!("user index {user} out of range (M = {})", self.users)));
        }
        Ok(())
    }

    fn check_index(&self, user: usize, subchannel: usize) -> Result<()> {
        self.check_user(user)?;
        if subchannel >= self.subchannels {
            return Err(Error::usage(format!(
                "sub-channel index {subchannel} out of range (L = {})",
                self.subchannels
            )));
        }
        Ok(())
    }

    pub fn check_profile(&self, profile: &PowerProfile) -> Result<()> {
        if profile.users() != self.users || profile.subchannels() != self.subchannels {
            return Err(Error::usage(format!(
                "profile is {}x{}, scenario is {}x{}",
                profile.users(),
                profile.subchannels(),
                self.users,
                self.subchannels
            )));
        }
        Ok(())
    }

    /// `I_i^l = Σ_{j≠i} ĝ_{i,j}^l p_j^l + η̂_i^l`.
    pub fn effective_interference(
        &self,
        profile: &PowerProfile,
        user: usize,
        subchannel: usize,
    ) -> Result<f64> {
        self.check_profile(profile)?;
        self.check_index(user, subchannel)?;
        Ok(self.interference_at(profile, user, subchannel))
    }

    #[inline]
    pub(crate) fn interference_at(&self, profile: &PowerProfile, user: usize, subchannel: usize) -> f64 {
        let mut acc = self.noise(user, subchannel);
        for j in 0..self.users {
            if j != user {
                acc += self.cross_gain(user, j, subchannel) * profile.get(j, subchannel);
            }
        }
        acc
    }

    /// Effective interference of `user` on every sub-channel. The profile must
    /// match the scenario; panics on an out-of-range user.
    pub fn interference_vector(&self, profile: &PowerProfile, user: usize) -> Vec<f64> {
        (0..self.subchannels)
            .map(|l| self.interference_at(profile, user, l))
            .collect()
    }

    /// `γ_i^l = p_i^l / I_i^l`.
    pub fn sinr(&self, profile: &PowerProfile, user: usize, subchannel: usize) -> Result<f64> {
        let interference = self.effective_interference(profile, user, subchannel)?;
        Ok(profile.get(user, subchannel) / interference)
    }

    /// `Σ_l ln(1 + γ_i^l)` in nats.
    pub fn user_rate(&self, profile: &PowerProfile, user: usize) -> Result<f64> {
        self.check_profile(profile)?;
        self.check_user(user)?;
        Ok(self.rate_unchecked(profile, user))
    }

    pub(crate) fn rate_unchecked(&self, profile: &PowerProfile, user: usize) -> f64 {
        (0..self.subchannels)
            .map(|l| (profile.get(user, l) / self.interference_at(profile, user, l)).ln_1p())
            .sum()
    }

    /// Multiplies the direct gains of `user` by `factor`. In normalized form
    /// this divides the user's noise and incoming cross gains by `factor`;
    /// the interference that user causes to others is unchanged.
    pub fn scale_user_channels(&self, user: usize, factor: f64) -> Result<Scenario> {
        self.check_user(user)?;
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::usage(format!("scaling factor must be positive, got {factor}")));
        }
        let mut out = self.clone();
        for l in 0..self.subchannels {
            out.noise[user * self.subchannels + l] /= factor;
            for j in 0..self.users {
                if j != user {
                    out.cross[(user * self.users + j) * self.subchannels + l] /= factor;
                }
            }
        }
        Ok(out)
    }

    /// Applies `steps` successive scalings of `user` by `factor`.
    pub fn scale_user_steps(&self, user: usize, factor: f64, steps: usize) -> Result<Scenario> {
        let mut out = self.clone();
        for _ in 0..steps {
            out = out.scale_user_channels(user, factor)?;
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("scenario serializes");
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Uniform draw in the open interval (0, 1).
fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// On-disk scenario layout. Either the normalized arrays or raw `gains` and
/// `noise` must be present; raw input is normalized on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioFile {
    users: usize,
    subchannels: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normalized_cross_gains: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normalized_noise: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gains: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    seed: Option<u64>,
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = String;

    fn try_from(file: ScenarioFile) -> std::result::Result<Self, String> {
        let mut scenario = match (
            &file.normalized_cross_gains,
            &file.normalized_noise,
            &file.gains,
            &file.noise,
        ) {
            (Some(cross), Some(noise), _, _) => Scenario::from_normalized(cross, noise),
            (_, _, Some(gains), Some(noise)) => Scenario::from_raw(gains, noise),
            _ => {
                return Err("scenario needs normalized_cross_gains + normalized_noise, or gains + noise".into())
            }
        }
        .map_err(|e| e.to_string())?;
        if scenario.users != file.users || scenario.subchannels != file.subchannels {
            return Err(format!(
                "declared size {}x{} does not match arrays {}x{}",
                file.users, file.subchannels, scenario.users, scenario.subchannels
            ));
        }
        scenario.seed = file.seed;
        Ok(scenario)
    }
}

impl From<Scenario> for ScenarioFile {
    fn from(s: Scenario) -> Self {
        let cross = (0..s.users)
            .map(|i| {
                (0..s.users)
                    .map(|j| (0..s.subchannels).map(|l| s.cross_gain(i, j, l)).collect())
                    .collect()
            })
            .collect();
        let noise = (0..s.users).map(|i| s.noise_row(i).to_vec()).collect();
        ScenarioFile {
            users: s.users,
            subchannels: s.subchannels,
            normalized_cross_gains: Some(cross),
            normalized_noise: Some(noise),
            gains: None,
            noise: None,
            seed: s.seed,
        }
    }
}

/// Transmit powers `p[i][l]` in Watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    users: usize,
    subchannels: usize,
    powers: Vec<f64>,
}

impl PowerProfile {
    pub fn zeros(users: usize, subchannels: usize) -> Self {
        Self::filled(users, subchannels, 0.0)
    }

    pub fn filled(users: usize, subchannels: usize, value: f64) -> Self {
        Self {
            users,
            subchannels,
            powers: vec![value; users * subchannels],
        }
    }

    /// Builds a profile from rows; every entry must be finite and nonnegative.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let users = rows.len();
        let subchannels = rows.first().map_or(0, Vec::len);
        let mut powers = Vec::with_capacity(users * subchannels);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != subchannels {
                return Err(Error::usage(format!("power row {i} has length {}, expected {subchannels}", row.len())));
            }
            if let Some(p) = row.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
                return Err(Error::usage(format!("power row {i} holds invalid value {p}")));
            }
            powers.extend_from_slice(row);
        }
        Ok(Self {
            users,
            subchannels,
            powers,
        })
    }

    /// Single-carrier profile (`L = 1`).
    pub fn from_vector(powers: &[f64]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = powers.iter().map(|&p| vec![p]).collect();
        Self::from_rows(&rows)
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn subchannels(&self) -> usize {
        self.subchannels
    }

    #[inline]
    pub fn get(&self, user: usize, subchannel: usize) -> f64 {
        self.powers[user * self.subchannels + subchannel]
    }

    #[inline]
    pub fn set(&mut self, user: usize, subchannel: usize, value: f64) {
        self.powers[user * self.subchannels + subchannel] = value;
    }

    pub fn row(&self, user: usize) -> &[f64] {
        &self.powers[user * self.subchannels..(user + 1) * self.subchannels]
    }

    pub fn row_mut(&mut self, user: usize) -> &mut [f64] {
        &mut self.powers[user * self.subchannels..(user + 1) * self.subchannels]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.users).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.powers
    }

    pub fn user_total(&self, user: usize) -> f64 {
        self.row(user).iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.powers.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.powers.iter().copied().fold(0.0, f64::max)
    }

    /// `max |a - b|` over all entries.
    pub fn sup_distance(&self, other: &PowerProfile) -> f64 {
        assert_eq!(self.powers.len(), other.powers.len(), "profile shapes differ");
        self.powers
            .iter()
            .zip(&other.powers)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Per-user game parameters. A game only reads the fields it needs; unused
/// ones may be `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UserParams {
    /// Bound `ς_i` on `Σ_l (p_i^l I_i^l)²` (W²).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub varsigma: Option<f64>,
    /// Rate target `R̂_i` (nats).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_target: Option<f64>,
    /// Total power budget `P_i` (W).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_budget: Option<f64>,
    /// Interference price `λ_i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price: Option<f64>,
    /// Target SINR `γ̂_i` (single-carrier TPC).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_sinr: Option<f64>,
    /// OPC constant `ζ_i` (W²).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opc_constant: Option<f64>,
}

impl UserParams {
    pub fn opportunistic(varsigma: f64) -> Self {
        Self {
            varsigma: Some(varsigma),
            ..Self::default()
        }
    }

    pub fn power_min(rate_target: f64) -> Self {
        Self {
            rate_target: Some(rate_target),
            ..Self::default()
        }
    }

    pub fn waterfilling(power_budget: f64) -> Self {
        Self {
            power_budget: Some(power_budget),
            ..Self::default()
        }
    }

    pub fn priced(power_budget: f64, price: f64) -> Self {
        Self {
            power_budget: Some(power_budget),
            price: Some(price),
            ..Self::default()
        }
    }

    pub fn tpc(target_sinr: f64) -> Self {
        Self {
            target_sinr: Some(target_sinr),
            ..Self::default()
        }
    }

    pub fn opc(opc_constant: f64) -> Self {
        Self {
            opc_constant: Some(opc_constant),
            ..Self::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_user() -> Scenario {
        // G11 = 1, G12 = 0.5, η1 = 1; user 2 mirrors.
        Scenario::from_raw(
            &[vec![vec![1.0], vec![0.5]], vec![vec![0.5], vec![1.0]]],
            &[vec![1.0], vec![1.0]],
        )
        .unwrap()
    }

    #[test]
    fn single_user_interference_is_normalized_noise() {
        let s = Scenario::from_raw(&[vec![vec![2.0]]], &[vec![0.01]]).unwrap();
        let p = PowerProfile::from_vector(&[3.0]).unwrap();
        assert_relative_eq!(s.effective_interference(&p, 0, 0).unwrap(), 0.005);
    }

    #[test]
    fn two_user_interference_by_hand() {
        let s = two_user();
        let p = PowerProfile::from_vector(&[0.0, 2.0]).unwrap();
        assert_relative_eq!(s.effective_interference(&p, 0, 0).unwrap(), 2.0);
    }

    #[test]
    fn sinr_and_rate_small_cases() {
        let s = two_user();
        let p = PowerProfile::from_vector(&[4.0, 2.0]).unwrap();
        assert_relative_eq!(s.sinr(&p, 0, 0).unwrap(), 2.0);
        assert_relative_eq!(s.user_rate(&p, 0).unwrap(), 3.0_f64.ln(), epsilon = 1e-15);
        let z = PowerProfile::from_vector(&[0.0, 2.0]).unwrap();
        assert_eq!(s.sinr(&z, 0, 0).unwrap(), 0.0);
        assert_eq!(s.user_rate(&z, 0).unwrap(), 0.0);
    }

    #[test]
    fn index_and_shape_errors() {
        let s = two_user();
        let p = PowerProfile::from_vector(&[1.0, 1.0]).unwrap();
        assert!(matches!(s.effective_interference(&p, 2, 0), Err(Error::Usage(_))));
        assert!(matches!(s.effective_interference(&p, 0, 1), Err(Error::Usage(_))));
        let wrong = PowerProfile::zeros(3, 1);
        assert!(s.user_rate(&wrong, 0).is_err());
    }

    #[test]
    fn rejects_invalid_gains_and_noise() {
        assert!(Scenario::from_raw(&[vec![vec![0.0]]], &[vec![0.01]]).is_err());
        assert!(Scenario::from_raw(&[vec![vec![1.0]]], &[vec![0.0]]).is_err());
        assert!(Scenario::from_normalized(&[vec![vec![1.0], vec![-0.1]], vec![vec![0.1], vec![1.0]]], &[vec![0.1], vec![0.1]]).is_err());
        assert!(Scenario::generate(1, 0, 4, CrossGainCeiling::default(), 0.01).is_err());
        assert!(Scenario::generate(1, 4, 0, CrossGainCeiling::default(), 0.01).is_err());
    }

    #[test]
    fn generator_matches_reference_setup() {
        let s = Scenario::generate_reference(7, 5, 20).unwrap();
        assert_eq!((s.users(), s.subchannels()), (5, 20));
        for i in 0..5 {
            for l in 0..20 {
                assert_eq!(s.noise(i, l), 0.01);
                assert_eq!(s.cross_gain(i, i, l), 1.0);
                for j in (0..5).filter(|&j| j != i) {
                    let g = s.cross_gain(i, j, l);
                    assert!(g > 0.0 && g < 0.1 / (i as f64 + 1.0));
                }
            }
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let a = Scenario::generate_reference(42, 5, 20).unwrap();
        let b = Scenario::generate_reference(42, 5, 20).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, Scenario::generate_reference(43, 5, 20).unwrap());
    }

    #[test]
    fn scaling_by_one_is_identity_and_half_doubles_noise() {
        let s = Scenario::generate_reference(3, 4, 6).unwrap();
        assert_eq!(s.scale_user_channels(2, 1.0).unwrap(), s);
        let h = s.scale_user_channels(2, 0.5).unwrap();
        for l in 0..6 {
            assert_relative_eq!(h.noise(2, l), 2.0 * s.noise(2, l));
            for j in 0..4 {
                if j != 2 {
                    assert_relative_eq!(h.cross_gain(2, j, l), 2.0 * s.cross_gain(2, j, l));
                }
                // Other receivers untouched.
                assert_eq!(h.cross_gain(0, j, l), s.cross_gain(0, j, l));
            }
        }
        assert!(s.scale_user_channels(2, 0.0).is_err());
        assert!(s.scale_user_channels(2, -1.0).is_err());
    }

    #[test]
    fn successive_degradation_raises_interference() {
        let s = Scenario::generate_reference(11, 5, 20).unwrap();
        let p = PowerProfile::filled(5, 20, 0.3);
        let mut cur = s.clone();
        let mut prev: Vec<f64> = cur.interference_vector(&p, 4);
        for _ in 0..4 {
            cur = cur.scale_user_channels(4, DEFAULT_STEP_FACTOR).unwrap();
            let next = cur.interference_vector(&p, 4);
            assert!(next.iter().zip(&prev).all(|(n, o)| n > o));
            prev = next;
        }
    }

    #[test]
    fn json_round_trip_and_raw_input() {
        let s = Scenario::generate_reference(5, 3, 4).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("normalized_cross_gains"));
        let back: Scenario = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);

        let raw = r#"{"users":1,"subchannels":2,"gains":[[[2.0,4.0]]],"noise":[[0.02,0.02]]}"#;
        let r: Scenario = serde_json::from_str(raw).unwrap();
        assert_relative_eq!(r.noise(0, 0), 0.01);
        assert_relative_eq!(r.noise(0, 1), 0.005);

        let bad = r#"{"users":2,"subchannels":2,"gains":[[[2.0,4.0]]],"noise":[[0.02,0.02]]}"#;
        assert!(serde_json::from_str::<Scenario>(bad).is_err());
    }
}
