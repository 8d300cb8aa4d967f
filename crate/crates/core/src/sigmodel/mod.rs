//! Received-signal synthesis for a uniform linear array: a desired QPSK user,
//! backscattered copies of the node's own transmit stream, and white noise.

mod file;
mod presets;
mod qpsk;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::numerics::{CMat, CVec, Cplx};

pub use file::{ScenarioFile, ScenarioFileError};
pub use presets::{preset, preset_names, presets, PRESET_NOISE_DB};
pub use qpsk::{qpsk_demodulate, qpsk_modulate, qpsk_symbol, random_symbols, QPSK_AMPLITUDE};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SignalError {
    #[error("array needs at least 2 antennas, got {0}")]
    TooFewAntennas(usize),
    #[error("element spacing must be positive, got {0}")]
    BadSpacing(f64),
    #[error("scenario '{label}': {reason}")]
    InvalidScenario { label: String, reason: String },
    #[error("pilot fraction {fraction} of a {block_len}-symbol block gives no pilots or no payload")]
    InvalidFrame { block_len: usize, fraction: f64 },
    #[error("odd number of bits ({0}) cannot be QPSK modulated")]
    OddBitCount(usize),
    #[error("self-interference stream has {got} symbols, need {need}")]
    StreamTooShort { got: usize, need: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayGeometry {
    pub n_antennas: usize,
    #[serde(default = "default_spacing")]
    pub spacing_wavelengths: f64,
}

fn default_spacing() -> f64 {
    0.5
}

impl ArrayGeometry {
    pub fn new(n_antennas: usize, spacing_wavelengths: f64) -> Result<Self, SignalError> {
        let g = ArrayGeometry {
            n_antennas,
            spacing_wavelengths,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        if self.n_antennas < 2 {
            return Err(SignalError::TooFewAntennas(self.n_antennas));
        }
        if !(self.spacing_wavelengths > 0.0) || !self.spacing_wavelengths.is_finite() {
            return Err(SignalError::BadSpacing(self.spacing_wavelengths));
        }
        Ok(())
    }
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        ArrayGeometry {
            n_antennas: 10,
            spacing_wavelengths: 0.5,
        }
    }
}

/// Desired user plus backscattered self-interference paths.
///
/// Powers are in dB relative to the unit-power desired user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub label: String,
    pub desired_angle_deg: f64,
    pub int_angles_deg: Vec<f64>,
    pub int_powers_db: Vec<f64>,
    pub path_delays_symbols: Vec<usize>,
    pub noise_power_db: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SignalError> {
        let fail = |reason: String| SignalError::InvalidScenario {
            label: self.label.clone(),
            reason,
        };
        let l = self.int_angles_deg.len();
        if self.int_powers_db.len() != l || self.path_delays_symbols.len() != l {
            return Err(fail(format!(
                "{} angles, {} powers, {} delays",
                l,
                self.int_powers_db.len(),
                self.path_delays_symbols.len()
            )));
        }
        for &a in std::iter::once(&self.desired_angle_deg).chain(&self.int_angles_deg) {
            if !(a > -180.0 && a <= 180.0) {
                return Err(fail(format!("angle {a} outside (-180, 180]")));
            }
        }
        if self.int_powers_db.iter().chain([&self.noise_power_db]).any(|p| !p.is_finite()) {
            return Err(fail("non-finite power".into()));
        }
        Ok(())
    }

    pub fn n_paths(&self) -> usize {
        self.int_angles_deg.len()
    }

    /// Per-antenna complex noise variance σ².
    pub fn noise_variance(&self) -> f64 {
        db_to_linear(self.noise_power_db)
    }

    pub fn int_powers_linear(&self) -> Vec<f64> {
        self.int_powers_db.iter().map(|&p| db_to_linear(p)).collect()
    }

    pub fn max_delay(&self) -> usize {
        self.path_delays_symbols.iter().copied().max().unwrap_or(0)
    }

    pub fn with_noise_db(&self, noise_power_db: f64) -> Scenario {
        Scenario {
            noise_power_db,
            ..self.clone()
        }
    }

    /// The same scenario with every interference path removed.
    pub fn without_interference(&self) -> Scenario {
        Scenario {
            int_angles_deg: Vec::new(),
            int_powers_db: Vec::new(),
            path_delays_symbols: Vec::new(),
            ..self.clone()
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Block layout: `pilot_count` known symbols followed by payload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    pub block_len: usize,
    #[serde(default = "default_pilot_fraction")]
    pub pilot_fraction: f64,
}

fn default_pilot_fraction() -> f64 {
    0.10
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec {
            block_len: 1000,
            pilot_fraction: 0.10,
        }
    }
}

impl FrameSpec {
    pub fn validate(&self) -> Result<(), SignalError> {
        let bad = SignalError::InvalidFrame {
            block_len: self.block_len,
            fraction: self.pilot_fraction,
        };
        if !(self.pilot_fraction > 0.0 && self.pilot_fraction < 1.0) {
            return Err(bad);
        }
        let p = self.pilot_count();
        if p < 1 || p >= self.block_len {
            return Err(bad);
        }
        Ok(())
    }

    pub fn pilot_count(&self) -> usize {
        (self.pilot_fraction * self.block_len as f64).round() as usize
    }

    pub fn payload_count(&self) -> usize {
        self.block_len - self.pilot_count()
    }
}

/// QPSK symbols together with the bits they carry (two per symbol).
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolStream {
    pub symbols: Vec<Cplx>,
    pub bits: Vec<u8>,
}

impl SymbolStream {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> SymbolStream {
        SymbolStream {
            symbols: self.symbols[range.clone()].to_vec(),
            bits: self.bits[2 * range.start..2 * range.end].to_vec(),
        }
    }
}

/// Array observations, one column (snapshot) per symbol time.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    n_antennas: usize,
    n_symbols: usize,
    // column-major: snapshot t occupies [t*N, (t+1)*N)
    data: Vec<Cplx>,
}

impl SnapshotMatrix {
    pub fn zeros(n_antennas: usize, n_symbols: usize) -> Self {
        SnapshotMatrix {
            n_antennas,
            n_symbols,
            data: vec![Cplx::new(0.0, 0.0); n_antennas * n_symbols],
        }
    }

    pub fn from_columns(n_antennas: usize, columns: &[&[Cplx]]) -> Self {
        let mut data = Vec::with_capacity(n_antennas * columns.len());
        for c in columns {
            assert_eq!(c.len(), n_antennas, "snapshot length");
            data.extend_from_slice(c);
        }
        SnapshotMatrix {
            n_antennas,
            n_symbols: columns.len(),
            data,
        }
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn column(&self, t: usize) -> &[Cplx] {
        &self.data[t * self.n_antennas..(t + 1) * self.n_antennas]
    }

    pub fn column_mut(&mut self, t: usize) -> &mut [Cplx] {
        &mut self.data[t * self.n_antennas..(t + 1) * self.n_antennas]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Cplx]> {
        self.data.chunks_exact(self.n_antennas)
    }

    pub fn select(&self, range: std::ops::Range<usize>) -> SnapshotMatrix {
        SnapshotMatrix {
            n_antennas: self.n_antennas,
            n_symbols: range.len(),
            data: self.data[range.start * self.n_antennas..range.end * self.n_antennas].to_vec(),
        }
    }

    /// Appends the columns of `other`.
    pub fn extend(&mut self, other: &SnapshotMatrix) {
        assert_eq!(self.n_antennas, other.n_antennas, "antenna count");
        self.data.extend_from_slice(&other.data);
        self.n_symbols += other.n_symbols;
    }

    /// (1/T)·Σ_t x_t·x_tᴴ
    pub fn sample_covariance(&self) -> CMat {
        let n = self.n_antennas;
        let mut acc = vec![Cplx::new(0.0, 0.0); n * n];
        for x in self.columns() {
            for i in 0..n {
                let xi = x[i];
                for j in 0..n {
                    acc[i * n + j] += xi * x[j].conj();
                }
            }
        }
        let t = self.n_symbols.max(1) as f64;
        CMat::from_row_major(n, n, acc).scale_re(1.0 / t)
    }
}

/// sin of an angle in degrees, folded so that θ and 180°−θ give bit-identical
/// results.
pub fn sin_deg(angle_deg: f64) -> f64 {
    let mut a = angle_deg % 360.0;
    if a > 180.0 {
        a -= 360.0;
    } else if a <= -180.0 {
        a += 360.0;
    }
    if a > 90.0 {
        a = 180.0 - a;
    } else if a < -90.0 {
        a = -180.0 - a;
    }
    match a {
        x if x == 30.0 => 0.5,
        x if x == -30.0 => -0.5,
        x if x == 90.0 => 1.0,
        x if x == -90.0 => -1.0,
        _ => a.to_radians().sin(),
    }
}

/// Element n = exp(j·2π·d·n·sin θ), θ measured from broadside.
pub fn steering_vector(geometry: &ArrayGeometry, angle_deg: f64) -> CVec {
    let u = 2.0 * std::f64::consts::PI * geometry.spacing_wavelengths * sin_deg(angle_deg);
    CVec::from_fn(geometry.n_antennas, |n| {
        if n == 0 {
            Cplx::new(1.0, 0.0)
        } else {
            Cplx::from_polar(1.0, u * n as f64)
        }
    })
}

/// Columns are the steering vectors of the scenario's interference paths.
pub fn interference_steering(geometry: &ArrayGeometry, scenario: &Scenario) -> CMat {
    if scenario.n_paths() == 0 {
        return CMat::zeros(geometry.n_antennas, 0);
    }
    let cols: Vec<CVec> = scenario
        .int_angles_deg
        .iter()
        .map(|&a| steering_vector(geometry, a))
        .collect();
    CMat::from_columns(&cols)
}

/// σ²·I + Σ_l p_l·a(θ_l)·a(θ_l)ᴴ
pub fn analytic_covariance(scenario: &Scenario, geometry: &ArrayGeometry) -> CMat {
    let n = geometry.n_antennas;
    let mut s = CMat::identity(n).scale_re(scenario.noise_variance());
    for (&angle, p) in scenario.int_angles_deg.iter().zip(scenario.int_powers_linear()) {
        let a = steering_vector(geometry, angle);
        s = s.add(&CMat::outer(&a, &a).scale_re(p));
    }
    s
}

/// Which terms of the received-signal sum to include.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Components {
    pub desired: bool,
    pub interference: bool,
    pub noise: bool,
}

impl Components {
    pub const ALL: Components = Components {
        desired: true,
        interference: true,
        noise: true,
    };
}

/// Builds the received snapshots for one block.
///
/// `si` must hold `desired.len() + max_delay` symbols: path l at time t sees
/// `si[t + max_delay − τ_l]`, i.e. the leading `max_delay` symbols are the
/// transmit history before the block starts.
pub fn synthesize(
    scenario: &Scenario,
    geometry: &ArrayGeometry,
    desired: &SymbolStream,
    si: &SymbolStream,
    seed: u64,
) -> Result<SnapshotMatrix, SignalError> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    synthesize_with(scenario, geometry, &desired.symbols, &si.symbols, Components::ALL, &mut rng)
}

pub fn synthesize_with<R: Rng + ?Sized>(
    scenario: &Scenario,
    geometry: &ArrayGeometry,
    desired: &[Cplx],
    si: &[Cplx],
    parts: Components,
    rng: &mut R,
) -> Result<SnapshotMatrix, SignalError> {
    scenario.validate()?;
    geometry.validate()?;
    let t_len = desired.len();
    let max_delay = scenario.max_delay();
    if parts.interference && scenario.n_paths() > 0 && si.len() < t_len + max_delay {
        return Err(SignalError::StreamTooShort {
            got: si.len(),
            need: t_len + max_delay,
        });
    }
    let n = geometry.n_antennas;
    let a_d = steering_vector(geometry, scenario.desired_angle_deg);
    let paths: Vec<(CVec, f64, usize)> = scenario
        .int_angles_deg
        .iter()
        .zip(scenario.int_powers_linear())
        .zip(&scenario.path_delays_symbols)
        .map(|((&angle, p), &delay)| (steering_vector(geometry, angle), p.sqrt(), delay))
        .collect();
    let noise_std = (scenario.noise_variance() / 2.0).sqrt();

    let mut out = SnapshotMatrix::zeros(n, t_len);
    for t in 0..t_len {
        let col = out.column_mut(t);
        if parts.desired {
            let s = desired[t];
            for (x, a) in col.iter_mut().zip(a_d.iter()) {
                *x += a * s;
            }
        }
        if parts.interference {
            for (a, amp, delay) in &paths {
                let s = si[t + max_delay - delay] * amp;
                for (x, ai) in col.iter_mut().zip(a.iter()) {
                    *x += ai * s;
                }
            }
        }
        if parts.noise {
            for x in col.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *x += Cplx::new(re * noise_std, im * noise_std);
            }
        }
    }
    Ok(out)
}
