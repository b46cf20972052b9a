//! Report records emitted by the verification harness.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

/// Reports are written as JSON lines; bump when a field changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// Default `|z|` pass threshold.
pub const DEFAULT_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        })
    }
}

/// JSON has no encoding for non-finite numbers; they travel as strings.
mod lossless_f64 {
    use super::*;

    pub fn to_value(v: f64) -> Value {
        if v.is_finite() {
            serde_json::Number::from_f64(v).map(Value::Number).unwrap()
        } else if v.is_nan() {
            Value::String("NaN".into())
        } else if v > 0.0 {
            Value::String("inf".into())
        } else {
            Value::String("-inf".into())
        }
    }

    pub fn from_value(v: &Value) -> Option<f64> {
        match v {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => match s.as_str() {
                "NaN" => Some(f64::NAN),
                "inf" => Some(f64::INFINITY),
                "-inf" => Some(f64::NEG_INFINITY),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_value(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let v = Value::deserialize(d)?;
        from_value(&v).ok_or_else(|| serde::de::Error::custom(format!("not a number: {v}")))
    }
}

/// Encodes a real for [`VerificationReport::extras`].
pub fn number(v: f64) -> Value {
    lossless_f64::to_value(v)
}

/// Decodes a real written by [`number`].
pub fn as_number(v: &Value) -> Option<f64> {
    lossless_f64::from_value(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub test_id: String,
    pub n: u64,
    #[serde(with = "lossless_f64")]
    pub estimate: f64,
    #[serde(with = "lossless_f64")]
    pub target: f64,
    #[serde(with = "lossless_f64")]
    pub std_error: f64,
    #[serde(with = "lossless_f64")]
    pub z_score: f64,
    #[serde(with = "lossless_f64")]
    pub threshold: f64,
    pub status: Status,
    pub seed: u64,
    pub stream: u64,
    /// Formula the target was computed from.
    pub provenance: String,
    /// Exploratory reports are informative only and never gate a suite.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub exploratory: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, Value>,
    /// Wall-clock seconds; omitted from report files unless requested so
    /// that files stay reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

impl VerificationReport {
    /// Blank report; fill `estimate`, `target` and `std_error`, then call
    /// [`VerificationReport::finalize`].
    pub fn new(test_id: &str, seed: u64, stream: u64, provenance: &str) -> Self {
        VerificationReport {
            test_id: test_id.to_string(),
            n: 0,
            estimate: f64::NAN,
            target: f64::NAN,
            std_error: f64::NAN,
            z_score: f64::NAN,
            threshold: DEFAULT_THRESHOLD,
            status: Status::Inconclusive,
            seed,
            stream,
            provenance: provenance.to_string(),
            exploratory: false,
            extras: BTreeMap::new(),
            runtime_seconds: None,
        }
    }

    /// Mean-of-samples report against `target`.
    pub fn from_samples(
        test_id: &str,
        samples: &[f64],
        target: f64,
        seed: u64,
        stream: u64,
        provenance: &str,
    ) -> Self {
        let mut r = VerificationReport::new(test_id, seed, stream, provenance);
        let (mean, se) = mean_se(samples);
        r.n = samples.len() as u64;
        r.estimate = mean;
        r.target = target;
        r.std_error = se;
        r.finalize();
        r
    }

    /// Smallest standard error used in the z-score: keeps zero-variance
    /// checks meaningful at rounding level.
    pub fn se_floor(target: f64) -> f64 {
        1e-12 * (1.0 + target.abs())
    }

    /// Floors the standard error, recomputes `z_score` and sets `status`.
    /// Fewer than two draws or a non-finite error leave the report
    /// inconclusive.
    pub fn finalize(&mut self) {
        if self.n < 2 {
            self.status = Status::Inconclusive;
            self.z_score = f64::NAN;
            return;
        }
        self.finalize_exact();
    }

    /// Deterministic comparison: `std_error` carries `tol / threshold`, so
    /// the report passes iff `|estimate - target| <= tol`.
    pub fn deterministic(
        test_id: &str,
        n: u64,
        estimate: f64,
        target: f64,
        tol: f64,
        provenance: &str,
    ) -> Self {
        let mut r = VerificationReport::new(test_id, 0, 0, provenance);
        r.n = n;
        r.estimate = estimate;
        r.target = target;
        r.std_error = tol / r.threshold;
        r.finalize_exact();
        r
    }

    /// As [`VerificationReport::finalize`] but without the two-draw minimum,
    /// for counts and other exact quantities.
    pub fn finalize_exact(&mut self) {
        if !self.std_error.is_finite() || !self.estimate.is_finite() || !self.target.is_finite() {
            self.status = Status::Inconclusive;
            self.z_score = f64::NAN;
            return;
        }
        self.std_error = self.std_error.max(Self::se_floor(self.target));
        self.z_score = (self.estimate - self.target) / self.std_error;
        self.status = if self.z_score.abs() <= self.threshold {
            Status::Pass
        } else {
            Status::Fail
        };
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self.finalize();
        self
    }

    pub fn set_extra(&mut self, key: &str, v: f64) {
        self.extras.insert(key.to_string(), number(v));
    }

    pub fn set_extra_value(&mut self, key: &str, v: Value) {
        self.extras.insert(key.to_string(), v);
    }

    pub fn set_note(&mut self, note: &str) {
        self.extras
            .insert("note".to_string(), Value::String(note.to_string()));
    }

    pub fn extra(&self, key: &str) -> Option<f64> {
        self.extras.get(key).and_then(as_number)
    }

    /// Whether this report gates its suite's exit status.
    pub fn gates(&self) -> bool {
        !self.exploratory
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{:<40} {:<12} n={:<7} est={:<14.8e} target={:<14.8e} z={:+.3}{}",
            self.test_id,
            self.status,
            self.n,
            self.estimate,
            self.target,
            self.z_score,
            if self.exploratory {
                " (exploratory)"
            } else {
                ""
            }
        )
    }
}

/// First record of a report file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub schema_version: u32,
    pub suite: String,
    pub seed: u64,
    pub artifact_version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFile {
    pub header: ReportHeader,
    pub reports: Vec<VerificationReport>,
}

impl ReportFile {
    pub fn new(suite: &str, seed: u64, reports: Vec<VerificationReport>) -> Self {
        ReportFile {
            header: ReportHeader {
                schema_version: SCHEMA_VERSION,
                suite: suite.to_string(),
                seed,
                artifact_version: format!("matnorm {}", env!("CARGO_PKG_VERSION")),
            },
            reports,
        }
    }

    pub fn to_json_lines(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for r in &self.reports {
            out.push_str(&serde_json::to_string(r).expect("report serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_json_lines(text: &str) -> Result<Self, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: ReportHeader = serde_json::from_str(lines.next().ok_or("empty report file")?)
            .map_err(|e| format!("bad header: {e}"))?;
        if header.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema version {}",
                header.schema_version
            ));
        }
        let reports = lines
            .enumerate()
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("record {}: {e}", i + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ReportFile { header, reports })
    }

    /// All gating reports passed.
    pub fn all_pass(&self) -> bool {
        self.reports
            .iter()
            .filter(|r| r.gates())
            .all(|r| r.passed())
    }
}
