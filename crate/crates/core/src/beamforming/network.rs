//! Cells, channels and SINR. Complex vectors are interleaved real pairs
//! `[re_0, im_0, re_1, im_1, ...]`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::BeamformingError;
use crate::rng::state_rng;

/// `h^H w` as `(re, im)`.
pub fn inner(h: &[f64], w: &[f64]) -> (f64, f64) {
    debug_assert_eq!(h.len(), w.len());
    let (mut re, mut im) = (0.0, 0.0);
    for k in (0..h.len()).step_by(2) {
        let (a, b, x, y) = (h[k], h[k + 1], w[k], w[k + 1]);
        re += a * x + b * y;
        im += a * y - b * x;
    }
    (re, im)
}

/// `|h^H w|^2`.
pub fn gain(h: &[f64], w: &[f64]) -> f64 {
    let (re, im) = inner(h, w);
    re * re + im * im
}

/// `||w||^2`.
pub fn power(w: &[f64]) -> f64 {
    w.iter().map(|v| v * v).sum()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// I.i.d. circularly-symmetric Gaussian entries with the given variance,
/// redrawn every slot; entries of magnitude above `truncation` are redrawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub variance: f64,
    pub truncation: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            variance: 1.0,
            truncation: 5.0,
        }
    }
}

impl ChannelSpec {
    fn entry<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let s = (self.variance / 2.0).sqrt();
        loop {
            let re: f64 = rng.sample::<f64, _>(StandardNormal) * s;
            let im: f64 = rng.sample::<f64, _>(StandardNormal) * s;
            if re.hypot(im) <= self.truncation {
                return (re, im);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellNetwork {
    /// Antennas per base station; `B = antennas.len()`.
    pub antennas: Vec<usize>,
    /// Serving base station `b(j)` of every user.
    pub users: Vec<usize>,
    pub sigma2: f64,
    /// SINR targets, linear scale.
    pub gamma: Vec<f64>,
    /// Instantaneous cap on every cross-cell leakage `|h^H w|`.
    pub rho: f64,
    #[serde(default)]
    pub channel: ChannelSpec,
}

impl CellNetwork {
    /// `b` cells with `n` antennas and `per_cell` users each, common target `gamma`.
    pub fn uniform(b: usize, n: usize, per_cell: usize, gamma: f64, sigma2: f64, rho: f64) -> Self {
        Self {
            antennas: vec![n; b],
            users: (0..b).flat_map(|i| std::iter::repeat_n(i, per_cell)).collect(),
            sigma2,
            gamma: vec![gamma; b * per_cell],
            rho,
            channel: ChannelSpec::default(),
        }
    }

    pub fn bs_count(&self) -> usize {
        self.antennas.len()
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn users_of(&self, i: usize) -> Vec<usize> {
        (0..self.users.len()).filter(|&j| self.users[j] == i).collect()
    }

    /// `sum_{m != i} card(U_m)`.
    pub fn foreign_users(&self, i: usize) -> usize {
        self.users.iter().filter(|&&m| m != i).count()
    }

    pub fn validate(&self) -> Result<(), BeamformingError> {
        let bad = |m: String| Err(BeamformingError::InvalidNetwork(m));
        if self.antennas.is_empty() || self.antennas.contains(&0) {
            return bad("every base station needs at least one antenna".into());
        }
        if self.users.is_empty() {
            return bad("network has no users".into());
        }
        if let Some(j) = self.users.iter().position(|&b| b >= self.bs_count()) {
            return bad(format!("user {j} is assigned to a missing base station"));
        }
        if self.gamma.len() != self.users.len() {
            return bad(format!(
                "{} SINR targets for {} users",
                self.gamma.len(),
                self.users.len()
            ));
        }
        if !self.gamma.iter().all(|g| g.is_finite() && *g > 0.0) {
            return bad("SINR targets must be positive".into());
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return bad("rho must be positive".into());
        }
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return bad("noise power must be positive".into());
        }
        if !(self.channel.variance > 0.0 && self.channel.truncation > 0.0) {
            return bad("channel variance and truncation must be positive".into());
        }
        Ok(())
    }

    /// Channels from base station `i` to every user at `slot`, user-major:
    /// `h_ij` occupies `[2 N_i j, 2 N_i (j + 1))`.
    pub fn sample_channels(&self, i: usize, slot: u64, seed: u64) -> Vec<f64> {
        let mut rng = state_rng(seed, i, slot);
        let n = self.antennas[i];
        let mut h = Vec::with_capacity(2 * n * self.user_count());
        for _ in 0..n * self.user_count() {
            let (re, im) = self.channel.entry(&mut rng);
            h.push(re);
            h.push(im);
        }
        h
    }

    /// Slice of `h_ij` inside the channels of base station `i`.
    pub fn link<'a>(&self, channels_i: &'a [f64], i: usize, j: usize) -> &'a [f64] {
        let w = 2 * self.antennas[i];
        &channels_i[w * j..w * (j + 1)]
    }
}

/// SINR of user `j` given the channels of every base station and the
/// beamformer of every user. Flagged cells transmit nothing: pass zero beams.
pub fn sinr(network: &CellNetwork, channels: &[Vec<f64>], beams: &[Vec<f64>], j: usize) -> f64 {
    let i = network.users[j];
    let own = network.link(&channels[i], i, j);
    let signal = gain(own, &beams[j]);
    let mut interference = network.sigma2;
    for (n, &m) in network.users.iter().enumerate() {
        if n == j {
            continue;
        }
        let h = network.link(&channels[m], m, j);
        interference += gain(h, &beams[n]);
    }
    signal / interference
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(v: &[f64]) -> Vec<f64> {
        v.iter().flat_map(|&x| [x, 0.0]).collect()
    }

    #[test]
    fn inner_product_conjugates_the_channel() {
        // h = i, w = 1 -> conj(i) * 1 = -i
        assert_eq!(inner(&[0.0, 1.0], &[1.0, 0.0]), (0.0, -1.0));
        assert_eq!(gain(&[3.0, 4.0], &[1.0, 0.0]), 25.0);
    }

    #[test]
    fn sinr_examples() {
        let single = CellNetwork::uniform(1, 1, 1, 1.0, 1.0, 1.0);
        assert_eq!(sinr(&single, &[real(&[1.0])], &[real(&[2.0])], 0), 4.0);

        // two users in one cell with orthogonal channels
        let cell = CellNetwork::uniform(1, 2, 2, 1.0, 1.0, 1.0);
        let ch = [real(&[1.0, 0.0]), real(&[0.0, 1.0])].concat();
        let beams = vec![real(&[1.0, 0.0]), real(&[0.0, 3.0])];
        assert_eq!(sinr(&cell, &[ch], &beams, 0), 1.0);

        // two cells: h11 = 1, h21 = 0.5, w = 2 each
        let two = CellNetwork::uniform(2, 1, 1, 1.0, 1.0, 1.0);
        let ch = vec![real(&[1.0, 7.0]), real(&[0.5, 1.0])];
        let beams = vec![real(&[2.0]), real(&[2.0])];
        assert_eq!(sinr(&two, &ch, &beams, 0), 2.0);
    }

    #[test]
    fn channels_are_reproducible_and_unit_variance() {
        let net = CellNetwork::uniform(3, 2, 1, 10.0, 1.0, 1.65);
        assert_eq!(net.sample_channels(1, 5, 9), net.sample_channels(1, 5, 9));
        assert_ne!(net.sample_channels(1, 5, 9), net.sample_channels(2, 5, 9));
        let n = 4_000;
        let mean_sq: f64 = (1..=n)
            .flat_map(|t| net.sample_channels(0, t, 1))
            .map(|v| v * v)
            .sum::<f64>()
            / (n as f64 * 12.0);
        // each real part carries half the unit variance
        assert!((mean_sq - 0.5).abs() < 0.02, "{mean_sq}");
    }

    #[test]
    fn validation_rejects_bad_networks() {
        let mut net = CellNetwork::uniform(2, 2, 1, 10.0, 1.0, 1.65);
        assert!(net.validate().is_ok());
        net.rho = 0.0;
        assert!(net.validate().is_err());
        let mut net = CellNetwork::uniform(2, 2, 1, 10.0, 1.0, 1.65);
        net.users[1] = 5;
        assert!(net.validate().is_err());
        assert!((db_to_linear(10.0) - 10.0).abs() < 1e-12);
        assert!((linear_to_db(db_to_linear(7.5)) - 7.5).abs() < 1e-12);
    }
}
