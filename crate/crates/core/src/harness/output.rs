use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::sigmodel::ScenarioFile;

use super::{BerPoint, Experiment, HarnessError, ScenarioReport, SweepResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Serialize)]
struct BerRow<'a> {
    snr_db: f64,
    method: &'a str,
    bits: u64,
    errors: u64,
    ber: f64,
    stderr: f64,
}

pub fn write_ber_csv<W: Write>(out: W, points: &[BerPoint]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(BerRow {
            snr_db: p.snr_db,
            method: p.method.as_str(),
            bits: p.bits,
            errors: p.errors,
            ber: p.ber,
            stderr: p.stderr,
        })?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: "ber.csv".into(),
        source,
    })
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepResult]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: "sweep.csv".into(),
        source,
    })
}

/// One row of table1.csv. `time_s` stays empty unless wall time was
/// requested, so the file is reproducible by default.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub label: String,
    pub epochs: usize,
    pub best_epoch: usize,
    pub n_params: usize,
    pub gamma: f64,
    pub stopping: String,
    pub time_s: Option<f64>,
}

impl Table1Row {
    pub fn from_report(r: &ScenarioReport, record_wall_time: bool) -> Self {
        Table1Row {
            label: r.label.clone(),
            epochs: r.report.epochs_run,
            best_epoch: r.report.best_epoch,
            n_params: r.report.n_params,
            gamma: r.report.gamma,
            stopping: r.report.stopping.as_str().to_string(),
            time_s: record_wall_time.then_some(r.report.wall_time_s),
        }
    }
}

pub fn write_table1_csv<W: Write>(out: W, rows: &[Table1Row]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: "table1.csv".into(),
        source,
    })
}

/// Written next to every run's outputs; enough to repeat the run exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub seed: u64,
    pub config: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub widths: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenarios: Option<Vec<ScenarioFile>>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, argv: &[String], config: &Experiment) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            argv: argv.to_vec(),
            seed: config.plan.seed,
            config: config.clone(),
            widths: None,
            scenarios: None,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let io = |source| HarnessError::Io {
            path: path.display().to_string(),
            source,
        };
        let text = fs::read_to_string(path).map_err(io)?;
        serde_json::from_str(&text)
            .map_err(|e| io(std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Method;
    use crate::sigmodel::preset;

    #[test]
    fn ber_csv_header_and_row() {
        let p = BerPoint {
            snr_db: -2.0,
            method: Method::LcmvOracle,
            bits: 1800,
            errors: 18,
            ber: 0.01,
            stderr: 0.002345,
        };
        let mut buf = Vec::new();
        write_ber_csv(&mut buf, &[p]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "snr_db,method,bits,errors,ber,stderr\n-2.0,lcmv_oracle,1800,18,0.01,0.002345\n"
        );
    }

    #[test]
    fn table1_time_column_optional() {
        let rows = [
            Table1Row {
                label: "EPA".into(),
                epochs: 20,
                best_epoch: 20,
                n_params: 48,
                gamma: 12.5,
                stopping: "min_gradient".into(),
                time_s: None,
            },
            Table1Row {
                label: "1st".into(),
                epochs: 16,
                best_epoch: 9,
                n_params: 48,
                gamma: 7.0,
                stopping: "min_gradient".into(),
                time_s: Some(0.25),
            },
        ];
        let mut buf = Vec::new();
        write_table1_csv(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "label,epochs,best_epoch,n_params,gamma,stopping,time_s\n\
             EPA,20,20,48,12.5,min_gradient,\n\
             1st,16,9,48,7.0,min_gradient,0.25\n"
        );
    }

    #[test]
    fn sweep_csv_header() {
        let mut buf = Vec::new();
        write_sweep_csv(
            &mut buf,
            &[SweepResult {
                n_neurons: 3,
                val_mse: 0.5,
                best_epoch: 7,
            }],
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n_neurons,val_mse,best_epoch\n3,0.5,7\n");
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let exp = Experiment::new(preset("epa").unwrap());
        let mut m = Manifest::new("ber", &["ber".into(), "--seed".into(), "3".into()], &exp);
        m.outputs.push("ber.csv".into());
        m.write(dir.path()).unwrap();
        assert_eq!(Manifest::read(&dir.path().join(MANIFEST_FILE)).unwrap(), m);
    }
}
