use super::{ArrayGeometry, FrameSpec, Scenario, ScenarioFile};

/// Noise floor used by the shipped presets, dB relative to the desired user.
pub const PRESET_NOISE_DB: f64 = -10.0;

// (name, label, interference angles, interference powers dB, element spacing)
const TABLE: [(&str, &str, [f64; 4], [f64; 4], f64); 7] = [
    ("epa", "EPA", [60.0, 20.0, 80.0, -30.0], [0.0, -1.0, -2.0, -3.0], 0.5),
    ("s1", "1st", [113.0, 146.0, -134.0, 149.0], [-20.0, -30.0, -40.0, -50.0], 0.5),
    ("s2", "2nd", [113.0, 146.0, -134.0, 149.0], [-8.0, -15.0, -20.0, -30.0], 0.5),
    ("s3", "3rd", [-95.0, -105.0, -130.0, -150.0], [-4.0, -5.0, -7.0, -8.0], 0.5),
    ("s4", "4th", [-95.0, -105.0, -130.0, -150.0], [-15.0, -18.0, -20.0, -25.0], 0.5),
    ("s5", "5th", [145.0, 160.0, 50.0, 25.0], [-15.0, -18.0, -20.0, -25.0], 0.25),
    ("s6", "6th", [-60.0, -85.0, -90.0, -115.0], [-2.0, -5.0, -10.0, -12.0], 0.25),
];

pub fn preset_names() -> Vec<&'static str> {
    TABLE.iter().map(|row| row.0).collect()
}

pub fn preset(name: &str) -> Option<ScenarioFile> {
    let (_, label, angles, powers, spacing) = TABLE.iter().find(|row| row.0 == name)?;
    Some(ScenarioFile {
        scenario: Scenario {
            label: (*label).to_string(),
            desired_angle_deg: 30.0,
            int_angles_deg: angles.to_vec(),
            int_powers_db: powers.to_vec(),
            path_delays_symbols: vec![0, 1, 2, 3],
            noise_power_db: PRESET_NOISE_DB,
        },
        array: ArrayGeometry {
            n_antennas: 10,
            spacing_wavelengths: *spacing,
        },
        frame: FrameSpec::default(),
    })
}

/// All seven scenarios in table order.
pub fn presets() -> Vec<ScenarioFile> {
    TABLE.iter().map(|row| preset(row.0).expect("table entry")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_valid_presets() {
        let all = presets();
        assert_eq!(all.len(), 7);
        for p in &all {
            p.validate().unwrap();
            assert_eq!(p.scenario.n_paths(), 4);
        }
        assert_eq!(all[5].array.spacing_wavelengths, 0.25);
        assert_eq!(all[6].array.spacing_wavelengths, 0.25);
        assert!(preset("s7").is_none());
    }
}
