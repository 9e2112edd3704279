//! Synthetic channel impulse responses for two industrial deployments and
//! the dataset container they are stored in.

mod format;
mod geometry;
mod sim;

pub use format::{
    decode_dataset, encode_dataset, import_csv, import_csv_from_reader, load_dataset, save_dataset,
    DATASET_MAGIC, DATASET_VERSION,
};
pub use geometry::{
    half_wavelength, mobile_geometry, static_geometry, NodeGeometry, Point, MOBILE_NODES,
    SPEED_OF_LIGHT,
};
pub use sim::{
    cir_for_position, gen_mobile_dataset, gen_static_dataset, gen_static_dataset_with,
    CirComponents, NodeChannel,
};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Which deployment a dataset describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Fixed transmitter sites with a strong line of sight.
    Static,
    /// A transmitter moving along a loop, followed by a lagging spoofer.
    Mobile,
    /// CIRs imported from outside the simulator.
    External,
}

impl ScenarioKind {
    pub fn code(self) -> u8 {
        match self {
            ScenarioKind::Static => 0,
            ScenarioKind::Mobile => 1,
            ScenarioKind::External => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ScenarioKind::Static),
            1 => Some(ScenarioKind::Mobile),
            2 => Some(ScenarioKind::External),
            _ => None,
        }
    }
}

/// Large- and small-scale channel statistics of a deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub kind: ScenarioKind,
    /// Carrier frequency in Hz.
    pub carrier_frequency: f64,
    /// CIR sampling rate in Hz; one tap per sample.
    pub sample_rate: f64,
    /// Ratio of line-of-sight power to total diffuse power, in dB.
    pub k_factor_db: f64,
    pub path_loss_exponent: f64,
    /// RMS delay spread of the diffuse cluster, seconds.
    pub rms_delay_spread: f64,
    /// Mean excess delay of the diffuse cluster relative to the LOS path, seconds.
    pub mean_delay: f64,
    /// Number of diffuse taps in the tapped delay line.
    pub num_taps: u32,
    /// Length `D` of every CIR vector.
    pub cir_dim: u32,
    /// AR(1) coefficient linking successive CIRs at one site.
    pub temporal_correlation: f64,
    /// Fraction of diffuse power that fluctuates in time; the rest is a
    /// fixed function of position.
    pub dynamic_fraction: f64,
    /// Correlation length (m) of the position-fixed scattering field.
    pub spatial_correlation_length: f64,
    /// Complex noise power added to every CIR sample.
    pub noise_floor: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
}

impl ScenarioParams {
    /// Open-area outdoor site: Rician, short delay spread.
    pub fn static_default() -> Self {
        Self {
            kind: ScenarioKind::Static,
            carrier_frequency: 5.4e9,
            sample_rate: 800e6,
            k_factor_db: 12.2,
            path_loss_exponent: 1.9,
            rms_delay_spread: 6.1e-9,
            mean_delay: 24.4e-9,
            num_taps: 32,
            cir_dim: 128,
            temporal_correlation: 0.95,
            dynamic_fraction: 0.01,
            spatial_correlation_length: 0.5,
            noise_floor: 0.0,
            tx_gain_dbi: 10.32,
            rx_gain_dbi: -3.5,
        }
    }

    /// Indoor factory with a moving transmitter: Rayleigh-like, long delay spread.
    pub fn mobile_default() -> Self {
        Self {
            kind: ScenarioKind::Mobile,
            carrier_frequency: 5.4e9,
            sample_rate: 100e6,
            k_factor_db: 4.7,
            path_loss_exponent: 3.6,
            rms_delay_spread: 177.4e-9,
            mean_delay: 644.4e-9,
            num_taps: 72,
            cir_dim: 128,
            temporal_correlation: 0.7,
            dynamic_fraction: 0.5,
            spatial_correlation_length: 4.0,
            noise_floor: 1e-9,
            tx_gain_dbi: 3.6,
            rx_gain_dbi: -3.5,
        }
    }

    /// Placeholder statistics for imported data.
    pub fn external(cir_dim: u32) -> Self {
        Self {
            kind: ScenarioKind::External,
            cir_dim,
            num_taps: cir_dim.max(1),
            ..Self::static_default()
        }
    }

    pub fn k_factor_linear(&self) -> f64 {
        10f64.powf(self.k_factor_db / 10.0)
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.carrier_frequency > 0.0 && self.carrier_frequency.is_finite()) {
            return fail(format!(
                "carrier_frequency must be positive, got {}",
                self.carrier_frequency
            ));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return fail(format!(
                "sample_rate must be positive, got {}",
                self.sample_rate
            ));
        }
        if self.num_taps < 1 {
            return fail("num_taps must be at least 1".into());
        }
        if self.cir_dim < self.num_taps {
            return fail(format!(
                "cir_dim ({}) must be at least num_taps ({})",
                self.cir_dim, self.num_taps
            ));
        }
        if !(0.0..=1.0).contains(&self.temporal_correlation) {
            return fail(format!(
                "temporal_correlation must lie in [0, 1], got {}",
                self.temporal_correlation
            ));
        }
        if !(0.0..=1.0).contains(&self.dynamic_fraction) {
            return fail(format!(
                "dynamic_fraction must lie in [0, 1], got {}",
                self.dynamic_fraction
            ));
        }
        if !(self.rms_delay_spread > 0.0) || !(self.mean_delay >= 0.0) {
            return fail("delay statistics must be positive".into());
        }
        if !(self.spatial_correlation_length > 0.0) {
            return fail("spatial_correlation_length must be positive".into());
        }
        if !(self.noise_floor >= 0.0) || !self.noise_floor.is_finite() {
            return fail(format!(
                "noise_floor must be non-negative, got {}",
                self.noise_floor
            ));
        }
        for (name, v) in [
            ("k_factor_db", self.k_factor_db),
            ("path_loss_exponent", self.path_loss_exponent),
            ("tx_gain_dbi", self.tx_gain_dbi),
            ("rx_gain_dbi", self.rx_gain_dbi),
        ] {
            if !v.is_finite() {
                return fail(format!("{name} must be finite"));
            }
        }
        Ok(())
    }
}

/// One channel impulse response observed by the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct CirRecord {
    /// Transmitter site, 1-based (0 is the receiver).
    pub node_id: u32,
    /// Position of the record within its node group.
    pub time_index: u32,
    pub cir: Vec<Complex64>,
    /// Ground truth; read only by evaluation and the trusted training oracle.
    pub is_alice: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub scenario: ScenarioParams,
    pub geometry: NodeGeometry,
    pub seed: u64,
    /// Lag, in nodes, between the legitimate transmitter and the spoofer
    /// (mobile datasets only; 0 otherwise).
    pub eve_interval: u32,
    pub records: Vec<CirRecord>,
}

impl Dataset {
    pub fn cir_dim(&self) -> usize {
        self.scenario.cir_dim as usize
    }

    /// Contiguous runs of records sharing `(node_id, is_alice)`, in file order.
    pub fn groups(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.records.len() {
            let boundary = i == self.records.len() || {
                let (a, b) = (&self.records[i - 1], &self.records[i]);
                a.node_id != b.node_id || a.is_alice != b.is_alice
            };
            if boundary && i > start {
                out.push(start..i);
                start = i;
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        let d = self.cir_dim();
        for (i, r) in self.records.iter().enumerate() {
            if r.cir.len() != d {
                return Err(Error::Malformed(format!(
                    "record {i} has {} taps, expected {d}",
                    r.cir.len()
                )));
            }
            if r.cir.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(Error::Malformed(format!("record {i} has non-finite taps")));
            }
        }
        Ok(())
    }
}
