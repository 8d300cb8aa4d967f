use std::io::Write;

use serde::Serialize;

use super::BeamWeights;
use crate::sigmodel::{steering_vector, ArrayGeometry};

/// Gains below this are reported as this value (exact nulls would be −∞).
pub const PATTERN_FLOOR_DB: f64 = -400.0;

/// 20·log10|Wᴴ·a(θ)| for each grid angle.
pub fn beam_pattern(weights: &BeamWeights, geometry: &ArrayGeometry, angles_deg: &[f64]) -> Vec<f64> {
    angles_deg
        .iter()
        .map(|&theta| {
            let r = weights.response(&steering_vector(geometry, theta)).norm();
            (20.0 * r.log10()).max(PATTERN_FLOOR_DB)
        })
        .collect()
}

/// Integer-degree grid over (−180°, 180°].
pub fn pattern_grid() -> Vec<f64> {
    (-179..=180).map(f64::from).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternRow {
    pub angle_deg: f64,
    pub method: String,
    pub gain_db: f64,
}

/// CSV with header `angle_deg,method,gain_db`.
pub fn write_pattern_csv<W: Write>(out: W, rows: &[PatternRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
