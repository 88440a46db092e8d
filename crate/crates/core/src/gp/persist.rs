use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, FitReport, Hyperparameters, Standardization, TrainedGP};
use crate::error::{Error, Result};
use crate::io::write_atomic;

/// Format tag written into every persisted GP.
pub const GP_FORMAT: &str = "rcdsp-gp/1";

/// On-disk form. The factor is not stored; it is rebuilt with the recorded
/// jitter, which reproduces predictions bit for bit.
#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct GpRecord {
    format: String,
    dataset: Dataset,
    standardization: Standardization,
    hyperparameters: Hyperparameters,
    jitter: f64,
    fit_report: FitReport,
}

impl From<TrainedGP> for GpRecord {
    fn from(gp: TrainedGP) -> Self {
        GpRecord {
            format: GP_FORMAT.to_string(),
            jitter: gp.jitter(),
            fit_report: gp.fit_report().clone(),
            hyperparameters: gp.hyperparameters().clone(),
            standardization: gp.standardization().clone(),
            dataset: gp.dataset().clone(),
        }
    }
}

impl TryFrom<GpRecord> for TrainedGP {
    type Error = Error;

    fn try_from(r: GpRecord) -> Result<Self> {
        if r.format != GP_FORMAT {
            return Err(Error::input(format!(
                "unsupported GP format `{}` (expected `{GP_FORMAT}`)",
                r.format
            )));
        }
        if !(r.jitter.is_finite() && r.jitter >= 0.0) {
            return Err(Error::input(
                "stored jitter must be finite and non-negative",
            ));
        }
        TrainedGP::build(
            r.dataset,
            r.hyperparameters,
            r.standardization,
            Some(r.jitter),
            r.fit_report,
        )
    }
}

impl Serialize for TrainedGP {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GpRecord::from(self.clone()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for TrainedGP {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = GpRecord::deserialize(d)?;
        TrainedGP::try_from(r).map_err(serde::de::Error::custom)
    }
}

impl TrainedGP {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{fit, FitConfig};

    #[test]
    fn round_trip_is_bit_identical() {
        let rows: Vec<Vec<f64>> = (0..9)
            .map(|i| vec![i as f64 * 0.37, (i % 3) as f64])
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0].cos() * 3.0 + r[1]).collect();
        let gp = fit(&Dataset::new(rows, y).unwrap(), &FitConfig::default()).unwrap();
        let back = TrainedGP::from_json(&gp.to_json().unwrap()).unwrap();
        for i in 0..40 {
            let x = [i as f64 * 0.09, (i % 4) as f64 * 0.6];
            let a = gp.predict(&x).unwrap();
            let b = back.predict(&x).unwrap();
            assert_eq!(a.mean.to_bits(), b.mean.to_bits());
            assert_eq!(a.variance.to_bits(), b.variance.to_bits());
        }
    }

    #[test]
    fn rejects_foreign_format() {
        let ds = Dataset::new(vec![vec![0.0], vec![1.0]], vec![0.0, 1.0]).unwrap();
        let gp = TrainedGP::new(
            ds,
            Hyperparameters::new(vec![0.0], 1.0, 0.0),
            Standardization::identity(1),
        )
        .unwrap();
        let text = gp.to_json().unwrap().replace(GP_FORMAT, "other/9");
        assert!(TrainedGP::from_json(&text).is_err());
    }
}
