//! Trace parsing and multirate alignment.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::estimator::Measurement;
use crate::simulator::SimTrace;
use crate::trace::{
    EventKind, ForceSample, SlipEvent, TruthSample, VelocitySample, FORCE_HEADER, TRUTH_HEADER,
    VELOCITY_HEADER,
};

/// Accepted relative mismatch between the velocity period and `δt`.
pub const RATE_TOLERANCE: f64 = 0.25;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {}", .path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{file}: missing column `{column}`")]
    MissingColumn { file: String, column: String },
    #[error("{file}: {message}")]
    Schema { file: String, message: String },
    #[error("{file}: row {row}: time {t} does not increase")]
    Ordering { file: String, row: usize, t: f64 },
    #[error("{file}: row {row}, column `{column}`: invalid value `{value}`")]
    Value {
        file: String,
        row: usize,
        column: String,
        value: String,
    },
    #[error("alignment: {0}")]
    Alignment(String),
}

/// Validated force and velocity streams in the contact frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawStreams {
    pub force: Vec<ForceSample>,
    pub velocity: Vec<VelocitySample>,
}

impl From<&SimTrace> for RawStreams {
    fn from(trace: &SimTrace) -> Self {
        Self {
            force: trace.force_stream.clone(),
            velocity: trace.velocity_stream.clone(),
        }
    }
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads the named numeric columns. Rows are 1-based data rows. The first
/// column must be strictly increasing.
fn read_columns<R: Read>(
    input: R,
    file: &str,
    columns: &[&str],
) -> Result<Vec<Vec<f64>>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| IngestError::Schema {
            file: file.into(),
            message: e.to_string(),
        })?
        .clone();
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == *c)
                .ok_or_else(|| IngestError::MissingColumn {
                    file: file.into(),
                    column: (*c).into(),
                })
        })
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    let mut prev_t: Option<f64> = None;
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| IngestError::Schema {
            file: file.into(),
            message: format!("row {row}: {e}"),
        })?;
        let mut values = Vec::with_capacity(idx.len());
        for (&j, &name) in idx.iter().zip(columns) {
            let raw = rec.get(j).unwrap_or("");
            let v: f64 = raw
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| IngestError::Value {
                    file: file.into(),
                    row,
                    column: name.into(),
                    value: raw.into(),
                })?;
            values.push(v);
        }
        if let Some(p) = prev_t {
            if !(values[0] > p) {
                return Err(IngestError::Ordering {
                    file: file.into(),
                    row,
                    t: values[0],
                });
            }
        }
        prev_t = Some(values[0]);
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(IngestError::Schema {
            file: file.into(),
            message: "stream has no samples".into(),
        });
    }
    Ok(rows)
}

pub fn parse_force_csv<R: Read>(input: R, file: &str) -> Result<Vec<ForceSample>, IngestError> {
    let rows = read_columns(input, file, &FORCE_HEADER)?;
    if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r[3] < 0.0) {
        return Err(IngestError::Value {
            file: file.into(),
            row: row + 1,
            column: "fn".into(),
            value: r[3].to_string(),
        });
    }
    Ok(rows
        .into_iter()
        .map(|r| ForceSample {
            t: r[0],
            f_x: r[1],
            f_y: r[2],
            f_n: r[3],
            tau: r[4],
        })
        .collect())
}

pub fn parse_velocity_csv<R: Read>(
    input: R,
    file: &str,
) -> Result<Vec<VelocitySample>, IngestError> {
    Ok(read_columns(input, file, &VELOCITY_HEADER)?
        .into_iter()
        .map(|r| VelocitySample {
            t: r[0],
            v_x: r[1],
            v_y: r[2],
            omega: r[3],
        })
        .collect())
}

pub fn parse_truth_csv<R: Read>(input: R, file: &str) -> Result<Vec<TruthSample>, IngestError> {
    Ok(read_columns(input, file, &TRUTH_HEADER)?
        .into_iter()
        .map(|r| TruthSample {
            t: r[0],
            mu_s: r[1],
            mu_c: r[2],
            r: r[3],
        })
        .collect())
}

/// Events may be empty; times must be non-decreasing.
pub fn parse_events_csv<R: Read>(input: R, file: &str) -> Result<Vec<SlipEvent>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| IngestError::Schema {
            file: file.into(),
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn {
                file: file.into(),
                column: name.into(),
            })
    };
    let (ti, ki) = (col("t")?, col("kind")?);
    let mut out: Vec<SlipEvent> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| IngestError::Schema {
            file: file.into(),
            message: format!("row {row}: {e}"),
        })?;
        let bad = |column: &str, value: &str| IngestError::Value {
            file: file.into(),
            row,
            column: column.into(),
            value: value.into(),
        };
        let raw_t = rec.get(ti).unwrap_or("");
        let t: f64 = raw_t
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| bad("t", raw_t))?;
        let raw_k = rec.get(ki).unwrap_or("");
        let kind: EventKind = raw_k.parse().map_err(|_| bad("kind", raw_k))?;
        if out.last().is_some_and(|e| t < e.t) {
            return Err(IngestError::Ordering {
                file: file.into(),
                row,
                t,
            });
        }
        out.push(SlipEvent { t, kind });
    }
    Ok(out)
}

/// Loads and validates a force/velocity file pair.
pub fn parse_trace(
    force_file: impl AsRef<Path>,
    velocity_file: impl AsRef<Path>,
) -> Result<RawStreams, IngestError> {
    let (fp, vp) = (force_file.as_ref(), velocity_file.as_ref());
    let force = parse_force_csv(open(fp)?, &fp.display().to_string())?;
    let velocity = parse_velocity_csv(open(vp)?, &vp.display().to_string())?;
    Ok(RawStreams { force, velocity })
}

pub fn parse_truth_file(path: impl AsRef<Path>) -> Result<Vec<TruthSample>, IngestError> {
    let p = path.as_ref();
    parse_truth_csv(open(p)?, &p.display().to_string())
}

pub fn parse_events_file(path: impl AsRef<Path>) -> Result<Vec<SlipEvent>, IngestError> {
    let p = path.as_ref();
    parse_events_csv(open(p)?, &p.display().to_string())
}

/// One measurement per velocity sample inside the force stream's time
/// span, holding the latest force sample at or before the velocity time.
pub fn align(raw: &RawStreams, delta_t: f64) -> Result<Vec<Measurement>, IngestError> {
    let (force, vel) = (&raw.force, &raw.velocity);
    let (Some(f0), Some(f_last)) = (force.first(), force.last()) else {
        return Err(IngestError::Alignment("force stream is empty".into()));
    };
    if vel.is_empty() {
        return Err(IngestError::Alignment("velocity stream is empty".into()));
    }
    if !(delta_t > 0.0) {
        return Err(IngestError::Alignment(format!("tick {delta_t} must be positive")));
    }
    if vel.len() >= 2 {
        let period = (vel[vel.len() - 1].t - vel[0].t) / (vel.len() - 1) as f64;
        if ((period - delta_t) / delta_t).abs() > RATE_TOLERANCE {
            return Err(IngestError::Alignment(format!(
                "velocity period {period} s does not match estimator tick {delta_t} s"
            )));
        }
    }
    let mut out = Vec::new();
    let mut j = 0usize;
    for v in vel.iter().filter(|v| v.t >= f0.t && v.t <= f_last.t) {
        while j + 1 < force.len() && force[j + 1].t <= v.t {
            j += 1;
        }
        let f = &force[j];
        out.push(Measurement {
            t: v.t,
            f_x: f.f_x,
            f_y: f.f_y,
            f_n: f.f_n,
            tau: f.tau,
            v_x: v.v_x,
            v_y: v.v_y,
            omega: v.omega,
        });
    }
    if out.is_empty() {
        return Err(IngestError::Alignment(format!(
            "no velocity sample within the force span [{}, {}]",
            f0.t, f_last.t
        )));
    }
    Ok(out)
}

/// Time of the force sample each measurement was aligned to.
pub fn aligned_force_times(raw: &RawStreams, measurements: &[Measurement]) -> Vec<f64> {
    let mut j = 0usize;
    measurements
        .iter()
        .map(|m| {
            while j + 1 < raw.force.len() && raw.force[j + 1].t <= m.t {
                j += 1;
            }
            raw.force[j].t
        })
        .collect()
}
