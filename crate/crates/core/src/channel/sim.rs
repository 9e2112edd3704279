//! Tapped-delay-line channel generator.
//!
//! A CIR at one site is the sum of
//!
//! * a line-of-sight tap at the propagation delay,
//! * a diffuse cluster with an exponential power-delay profile, split into a
//!   position-fixed part (a smooth random field over the plane, shared by all
//!   sites of one seed) and a part that fluctuates in time as an AR(1) process,
//! * complex Gaussian receiver noise.
//!
//! Every site draws its fluctuations from its own ChaCha stream, so records
//! do not depend on the order in which sites are generated.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::geometry::{mobile_geometry, static_geometry, MOBILE_NODES, SPEED_OF_LIGHT};
use super::{CirRecord, Dataset, NodeGeometry, Point, ScenarioParams};
use crate::error::{Error, Result};

const MAX_K_FACTOR_DB: f64 = 60.0;
const FIELD_FEATURES: usize = 64;
const ENVIRONMENT_STREAM: u64 = 0;

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, power: f64) -> Complex64 {
    let sd = (power / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sd * re, sd * im)
}

/// Unit-power complex Gaussian field over the plane with a Gaussian
/// covariance `exp(−r² / 2ℓ²)`, one independent field per delay bin,
/// built from random Fourier features.
struct ScatterField {
    /// `(amplitude, kx, ky)` per feature, `FIELD_FEATURES` per delay bin.
    features: Vec<(Complex64, f64, f64)>,
}

impl ScatterField {
    fn new(bins: usize, correlation_length: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(ENVIRONMENT_STREAM);
        let scale = 1.0 / correlation_length;
        let amp_power = 1.0 / FIELD_FEATURES as f64;
        let features = (0..bins * FIELD_FEATURES)
            .map(|_| {
                let a = complex_normal(&mut rng, amp_power);
                let kx: f64 = rng.sample(StandardNormal);
                let ky: f64 = rng.sample(StandardNormal);
                (a, kx * scale, ky * scale)
            })
            .collect();
        Self { features }
    }

    fn eval(&self, bin: usize, p: Point) -> Complex64 {
        self.features[bin * FIELD_FEATURES..(bin + 1) * FIELD_FEATURES]
            .iter()
            .map(|&(a, kx, ky)| a * Complex64::from_polar(1.0, kx * p.x + ky * p.y))
            .sum()
    }
}

/// The noiseless parts of the current CIR at one site.
#[derive(Debug, Clone, PartialEq)]
pub struct CirComponents {
    pub los: Vec<Complex64>,
    pub static_diffuse: Vec<Complex64>,
    pub dynamic: Vec<Complex64>,
    pub los_tap: usize,
}

impl CirComponents {
    pub fn total(&self) -> Vec<Complex64> {
        (0..self.los.len())
            .map(|i| self.los[i] + self.static_diffuse[i] + self.dynamic[i])
            .collect()
    }
}

/// The time-varying channel between one site and the receiver.
pub struct NodeChannel {
    node_id: u32,
    rho: f64,
    los: Vec<Complex64>,
    los_tap: usize,
    fixed: Vec<Complex64>,
    /// Stationary power of the fluctuating part, per tap.
    dyn_power: Vec<f64>,
    state: Vec<Complex64>,
    noise_floor: f64,
    time: u32,
    rng: ChaCha8Rng,
}

impl NodeChannel {
    pub fn new(
        scenario: &ScenarioParams,
        geometry: &NodeGeometry,
        node: u32,
        seed: u64,
    ) -> Result<Self> {
        scenario.validate()?;
        let field = ScatterField::new(
            scenario.cir_dim as usize,
            scenario.spatial_correlation_length,
            seed,
        );
        Self::with_field(scenario, geometry, node, seed, &field)
    }

    fn with_field(
        scenario: &ScenarioParams,
        geometry: &NodeGeometry,
        node: u32,
        seed: u64,
        field: &ScatterField,
    ) -> Result<Self> {
        let pos = geometry.position(node)?;
        let d_len = scenario.cir_dim as usize;
        let dist = pos.distance(geometry.bob_position);
        if !(dist > 0.0) {
            return Err(Error::Config(format!(
                "node {node} coincides with the receiver"
            )));
        }
        let fs = scenario.sample_rate;
        let los_tap = (dist / SPEED_OF_LIGHT * fs).round() as usize;
        if los_tap >= d_len {
            return Err(Error::Config(format!(
                "node {node} delay falls outside the {d_len}-tap window"
            )));
        }

        let gain_db = scenario.tx_gain_dbi + scenario.rx_gain_dbi;
        let amp = 10f64.powf(gain_db / 20.0) * dist.powf(-scenario.path_loss_exponent / 2.0);
        let k = 10f64.powf(scenario.k_factor_db.min(MAX_K_FACTOR_DB) / 10.0);
        let los_power = k / (k + 1.0);
        let diffuse_power = 1.0 / (k + 1.0);

        let mut los = vec![Complex64::new(0.0, 0.0); d_len];
        let phase = -std::f64::consts::TAU * scenario.carrier_frequency * dist / SPEED_OF_LIGHT;
        los[los_tap] = Complex64::from_polar(amp * los_power.sqrt(), phase);

        // Exponential power-delay profile starting after the LOS arrival.
        let onset = (((scenario.mean_delay - scenario.rms_delay_spread) * fs).round() as i64).max(1)
            as usize;
        let decay = scenario.rms_delay_spread * fs;
        let taps: Vec<(usize, f64)> = (0..scenario.num_taps as usize)
            .map(|k| (los_tap + onset + k, (-(k as f64) / decay).exp()))
            .filter(|&(n, _)| n < d_len)
            .collect();
        let pdp_total: f64 = taps.iter().map(|t| t.1).sum();

        let dyn_frac = scenario.dynamic_fraction;
        let mut fixed = vec![Complex64::new(0.0, 0.0); d_len];
        let mut dyn_power = vec![0.0; d_len];
        if pdp_total > 0.0 {
            let unit = diffuse_power / pdp_total;
            for &(n, w) in &taps {
                fixed[n] = field.eval(n, pos) * (w * unit * (1.0 - dyn_frac)).sqrt();
                dyn_power[n] = w * unit * dyn_frac * amp * amp;
            }
            // Pin the fixed part to its nominal power so the K-factor holds per site.
            let target = diffuse_power * (1.0 - dyn_frac);
            let got: f64 = fixed.iter().map(|c| c.norm_sqr()).sum();
            let rescale = if got > 0.0 {
                (target / got).sqrt()
            } else {
                0.0
            };
            for c in &mut fixed {
                *c *= rescale * amp;
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::from(node) + 1);
        let state = dyn_power
            .iter()
            .map(|&p| {
                if p > 0.0 {
                    complex_normal(&mut rng, p)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();

        Ok(Self {
            node_id: node,
            rho: scenario.temporal_correlation,
            los,
            los_tap,
            fixed,
            dyn_power,
            state,
            noise_floor: scenario.noise_floor,
            time: 0,
            rng,
        })
    }

    pub fn node_id(&self) -> u32 {
        self.node_id
    }

    pub fn los_tap(&self) -> usize {
        self.los_tap
    }

    pub fn components(&self) -> CirComponents {
        CirComponents {
            los: self.los.clone(),
            static_diffuse: self.fixed.clone(),
            dynamic: self.state.clone(),
            los_tap: self.los_tap,
        }
    }

    /// Moves the fluctuating part `steps` samples forward without emitting records.
    pub fn advance(&mut self, steps: u64) {
        if steps == 0 {
            return;
        }
        let rho_n = self.rho.powf(steps as f64);
        let innov = (1.0 - rho_n * rho_n).max(0.0);
        for (s, &p) in self.state.iter_mut().zip(&self.dyn_power) {
            if p > 0.0 {
                *s = *s * rho_n + complex_normal(&mut self.rng, p * innov);
            }
        }
    }

    /// Emits the current CIR with receiver noise, then steps the channel by one sample.
    pub fn next_record(&mut self, time_index: u32, is_alice: bool) -> CirRecord {
        let mut cir = Vec::with_capacity(self.los.len());
        for i in 0..self.los.len() {
            let mut c = self.los[i] + self.fixed[i] + self.state[i];
            if self.noise_floor > 0.0 {
                c += complex_normal(&mut self.rng, self.noise_floor);
            }
            cir.push(c);
        }
        self.advance(1);
        self.time += 1;
        CirRecord {
            node_id: self.node_id,
            time_index,
            cir,
            is_alice,
        }
    }
}

/// The `time_index`-th record of `node` in a dataset generated with `seed`.
pub fn cir_for_position(
    scenario: &ScenarioParams,
    geometry: &NodeGeometry,
    node: u32,
    time_index: u32,
    seed: u64,
) -> Result<CirRecord> {
    let mut ch = NodeChannel::new(scenario, geometry, node, seed)?;
    let is_alice = node == geometry.alice_node;
    for t in 0..time_index {
        ch.next_record(t, is_alice);
    }
    Ok(ch.next_record(time_index, is_alice))
}

fn check_samples(samples_per_node: u32) -> Result<()> {
    if samples_per_node == 0 {
        return Err(Error::Config("samples_per_node must be at least 1".into()));
    }
    Ok(())
}

/// Every site of `geometry` in id order, `samples_per_node` records each.
pub fn gen_static_dataset_with(
    scenario: &ScenarioParams,
    geometry: NodeGeometry,
    seed: u64,
    samples_per_node: u32,
) -> Result<Dataset> {
    check_samples(samples_per_node)?;
    scenario.validate()?;
    geometry.validate(scenario.carrier_frequency)?;
    let field = ScatterField::new(
        scenario.cir_dim as usize,
        scenario.spatial_correlation_length,
        seed,
    );
    let mut records = Vec::with_capacity(geometry.node_count() * samples_per_node as usize);
    for node in 1..=geometry.node_count() as u32 {
        let mut ch = NodeChannel::with_field(scenario, &geometry, node, seed, &field)?;
        let is_alice = node == geometry.alice_node;
        for t in 0..samples_per_node {
            records.push(ch.next_record(t, is_alice));
        }
    }
    Ok(Dataset {
        scenario: scenario.clone(),
        geometry,
        seed,
        eve_interval: 0,
        records,
    })
}

/// The 45-site open-area deployment with `scenario` statistics.
pub fn gen_static_dataset(
    scenario: &ScenarioParams,
    seed: u64,
    samples_per_node: u32,
) -> Result<Dataset> {
    gen_static_dataset_with(scenario, static_geometry(), seed, samples_per_node)
}

/// The moving-transmitter deployment.
///
/// The legitimate node visits the 32 loop sites in order, `samples_per_node`
/// records per site. The spoofer follows the same path `eve_interval` sites
/// behind, so it occupies site `k − eve_interval` while the legitimate node
/// is at site `k`. Spoofer records at a site continue that site's fading
/// process from the moment it arrives there.
///
/// Records are ordered as all legitimate groups by site, then all spoofer
/// groups by site. Legitimate records do not depend on `eve_interval`.
pub fn gen_mobile_dataset(
    scenario: &ScenarioParams,
    seed: u64,
    samples_per_node: u32,
    eve_interval: u32,
) -> Result<Dataset> {
    check_samples(samples_per_node)?;
    if eve_interval == 0 || eve_interval as usize >= MOBILE_NODES {
        return Err(Error::Config(format!(
            "eve_interval must lie in 1..{MOBILE_NODES}, got {eve_interval}"
        )));
    }
    scenario.validate()?;
    let geometry = mobile_geometry();
    geometry.validate(scenario.carrier_frequency)?;
    let field = ScatterField::new(
        scenario.cir_dim as usize,
        scenario.spatial_correlation_length,
        seed,
    );
    let spn = samples_per_node as usize;
    let eve_sites = MOBILE_NODES - eve_interval as usize;
    let mut alice = Vec::with_capacity(MOBILE_NODES * spn);
    let mut eve = Vec::with_capacity(eve_sites * spn);
    for site in 1..=MOBILE_NODES as u32 {
        let mut ch = NodeChannel::with_field(scenario, &geometry, site, seed, &field)?;
        for t in 0..samples_per_node {
            alice.push(ch.next_record(t, true));
        }
        if (site as usize) <= eve_sites {
            // The spoofer reaches this site `eve_interval` dwell periods after
            // the legitimate node arrived; `spn` of those samples are already used.
            ch.advance((u64::from(eve_interval) - 1) * spn as u64);
            for t in 0..samples_per_node {
                eve.push(ch.next_record(t, false));
            }
        }
    }
    alice.extend(eve);
    Ok(Dataset {
        scenario: scenario.clone(),
        geometry,
        seed,
        eve_interval,
        records: alice,
    })
}
