//! Narrowband beamformers: delay-and-sum, MVDR and LCMV, plus beam patterns.
//!
//! All weight vectors follow the y = Wᴴ·x convention and satisfy the
//! distortionless constraint Wᴴ·a(θ_d) = 1.

mod constraints;
mod pattern;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::numerics::{solve, CMat, CVec, Cplx, LinalgError};
use crate::sigmodel::{analytic_covariance, steering_vector, ArrayGeometry, Scenario};

pub use constraints::{
    build_constraints_evd, build_constraints_oracle, ConstraintSet, SubspaceSelection, DEFAULT_DROP_RATIO,
};
pub use pattern::{beam_pattern, pattern_grid, write_pattern_csv, PatternRow, PATTERN_FLOOR_DB};

/// Relative diagonal loading added before every covariance inversion.
pub const DIAGONAL_LOADING: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BeamformError {
    #[error("covariance matrix is singular: {0}")]
    SingularCovariance(LinalgError),
    #[error("constraint matrix is rank deficient")]
    RankDeficientConstraints,
    #[error("{needed} constraints exceed the {available} available degrees of freedom")]
    TooManyConstraints { needed: usize, available: usize },
    #[error("{got} snapshots, need at least {need}")]
    TooFewSnapshots { got: usize, need: usize },
    #[error("no eigenvalue falls below {drop_ratio} of the largest; interference fills the aperture")]
    NoSharpDrop { drop_ratio: f64, eigenvalues: Vec<f64> },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamMethod {
    Conventional,
    Mvdr,
    LcmvOracle,
    LcmvEvd,
}

impl BeamMethod {
    pub const ALL: [BeamMethod; 4] = [
        BeamMethod::Conventional,
        BeamMethod::Mvdr,
        BeamMethod::LcmvOracle,
        BeamMethod::LcmvEvd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BeamMethod::Conventional => "conventional",
            BeamMethod::Mvdr => "mvdr",
            BeamMethod::LcmvOracle => "lcmv_oracle",
            BeamMethod::LcmvEvd => "lcmv_evd",
        }
    }
}

impl fmt::Display for BeamMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BeamMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "conventional" => Ok(BeamMethod::Conventional),
            "mvdr" => Ok(BeamMethod::Mvdr),
            "lcmv" | "lcmv_oracle" => Ok(BeamMethod::LcmvOracle),
            "lcmv_evd" => Ok(BeamMethod::LcmvEvd),
            other => Err(format!("unknown beamforming method '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamWeights {
    pub taps: CVec,
    pub method: BeamMethod,
}

impl BeamWeights {
    /// Wᴴ·a
    pub fn response(&self, steering: &[Cplx]) -> Cplx {
        self.taps.dot(steering)
    }

    /// Combiner output Wᴴ·x for one snapshot.
    pub fn apply(&self, snapshot: &[Cplx]) -> Cplx {
        self.taps.dot(snapshot)
    }

    /// Wᴴ·S·W
    pub fn output_power(&self, s: &CMat) -> f64 {
        s.quad_form(&self.taps, &self.taps).re
    }

    /// Output SINR against the scenario's true interference-plus-noise
    /// covariance, with the unit-power desired user.
    pub fn sinr(&self, scenario: &Scenario, geometry: &ArrayGeometry) -> f64 {
        let a_d = steering_vector(geometry, scenario.desired_angle_deg);
        let s = analytic_covariance(scenario, geometry);
        self.response(&a_d).norm_sqr() / self.output_power(&s)
    }
}

/// Delay-and-sum: W = a(θ_d)/N.
pub fn conventional_weights(geometry: &ArrayGeometry, desired_angle_deg: f64) -> BeamWeights {
    let a = steering_vector(geometry, desired_angle_deg);
    let n = a.len() as f64;
    BeamWeights {
        taps: a.scale(Cplx::new(1.0 / n, 0.0)),
        method: BeamMethod::Conventional,
    }
}

fn loaded(s: &CMat) -> CMat {
    s.add_diagonal(DIAGONAL_LOADING * s.trace().re / s.rows() as f64)
}

fn check_covariance(s: &CMat, n: usize) -> Result<(), BeamformError> {
    if !s.is_square() || s.rows() != n {
        return Err(BeamformError::DimensionMismatch(format!(
            "covariance is {}x{}, steering has {} entries",
            s.rows(),
            s.cols(),
            n
        )));
    }
    Ok(())
}

/// W = S⁻¹a / (aᴴS⁻¹a).
pub fn mvdr_weights(s_nu: &CMat, steering_d: &[Cplx]) -> Result<BeamWeights, BeamformError> {
    check_covariance(s_nu, steering_d.len())?;
    let s_inv_a = solve(&loaded(s_nu), steering_d).map_err(BeamformError::SingularCovariance)?;
    let denom: Cplx = steering_d.iter().zip(s_inv_a.iter()).map(|(a, x)| a.conj() * x).sum();
    if !(denom.norm() > 0.0) || !denom.re.is_finite() {
        return Err(BeamformError::SingularCovariance(LinalgError::Singular {
            pivot: denom.norm(),
            column: 0,
        }));
    }
    // aᴴS⁻¹a is real for Hermitian S; dividing by its conjugate keeps Wᴴa = 1.
    Ok(BeamWeights {
        taps: s_inv_a.scale(Cplx::new(1.0, 0.0) / denom.conj()),
        method: BeamMethod::Mvdr,
    })
}

/// W = S⁻¹C·(CᴴS⁻¹C)⁻¹·g, the solution of min WᴴSW s.t. WᴴC = gᴴ.
pub fn lcmv_weights(
    s_nu: &CMat,
    constraints: &ConstraintSet,
    method: BeamMethod,
) -> Result<BeamWeights, BeamformError> {
    let c = &constraints.c;
    check_covariance(s_nu, c.rows())?;
    if c.cols() > c.rows() {
        return Err(BeamformError::TooManyConstraints {
            needed: c.cols(),
            available: c.rows(),
        });
    }
    let s = loaded(s_nu);
    let s_inv_c = crate::numerics::solve_many(&s, c).map_err(BeamformError::SingularCovariance)?;
    let gram = c.adjoint().matmul(&s_inv_c);
    let y = solve(&gram, &constraints.g).map_err(|_| BeamformError::RankDeficientConstraints)?;
    Ok(BeamWeights {
        taps: s_inv_c.matvec(&y),
        method,
    })
}
