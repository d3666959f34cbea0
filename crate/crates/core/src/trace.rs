//! Sensor-stream sample types and the trace CSV writers.
//!
//! A trial named `<name>` is stored as four files:
//!
//! | file                 | header                 |
//! |----------------------|------------------------|
//! | `<name>_force.csv`   | `t,fx,fy,fn,tau`       |
//! | `<name>_vel.csv`     | `t,vx,vy,omega`        |
//! | `<name>_truth.csv`   | `t,mu_s,mu_c,r`        |
//! | `<name>_events.csv`  | `t,kind`               |
//!
//! The readers live in [`crate::ingest`].

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::csv_format::{fmt_sig9, quantize};

pub const FORCE_HEADER: [&str; 5] = ["t", "fx", "fy", "fn", "tau"];
pub const VELOCITY_HEADER: [&str; 4] = ["t", "vx", "vy", "omega"];
pub const TRUTH_HEADER: [&str; 4] = ["t", "mu_s", "mu_c", "r"];
pub const EVENTS_HEADER: [&str; 2] = ["t", "kind"];

/// Contact-frame wrench sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceSample {
    pub t: f64,
    pub f_x: f64,
    pub f_y: f64,
    pub f_n: f64,
    pub tau: f64,
}

/// Slip velocity sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocitySample {
    pub t: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub omega: f64,
}

/// Ground-truth friction properties; `r` is the effective radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthSample {
    pub t: f64,
    pub mu_s: f64,
    pub mu_c: f64,
    pub r: f64,
}

impl ForceSample {
    pub fn quantized(&self) -> Self {
        Self {
            t: quantize(self.t),
            f_x: quantize(self.f_x),
            f_y: quantize(self.f_y),
            f_n: quantize(self.f_n),
            tau: quantize(self.tau),
        }
    }
}

impl VelocitySample {
    pub fn quantized(&self) -> Self {
        Self {
            t: quantize(self.t),
            v_x: quantize(self.v_x),
            v_y: quantize(self.v_y),
            omega: quantize(self.omega),
        }
    }
}

impl TruthSample {
    pub fn quantized(&self) -> Self {
        Self {
            t: quantize(self.t),
            mu_s: quantize(self.mu_s),
            mu_c: quantize(self.mu_c),
            r: quantize(self.r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    SlipOnset,
    StickOnset,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::SlipOnset => "SlipOnset",
            EventKind::StickOnset => "StickOnset",
        })
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "SlipOnset" => Ok(EventKind::SlipOnset),
            "StickOnset" => Ok(EventKind::StickOnset),
            other => Err(format!("unknown event kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipEvent {
    pub t: f64,
    pub kind: EventKind,
}

/// File names of one trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TracePaths {
    pub force: PathBuf,
    pub velocity: PathBuf,
    pub truth: PathBuf,
    pub events: PathBuf,
}

impl TracePaths {
    /// Paths for a prefix such as `out/trial_0`.
    pub fn from_prefix(prefix: impl AsRef<Path>) -> Self {
        let prefix = prefix.as_ref().to_string_lossy().into_owned();
        Self {
            force: PathBuf::from(format!("{prefix}_force.csv")),
            velocity: PathBuf::from(format!("{prefix}_vel.csv")),
            truth: PathBuf::from(format!("{prefix}_truth.csv")),
            events: PathBuf::from(format!("{prefix}_events.csv")),
        }
    }

    pub fn in_dir(dir: impl AsRef<Path>, name: &str) -> Self {
        Self::from_prefix(dir.as_ref().join(name))
    }
}

/// Latest truth sample at or before `t`.
pub fn truth_at(truth: &[TruthSample], t: f64) -> Option<&TruthSample> {
    let idx = truth.partition_point(|s| s.t <= t);
    idx.checked_sub(1).map(|i| &truth[i])
}

pub fn write_force_csv<W: Write>(samples: &[ForceSample], out: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(FORCE_HEADER)?;
    for s in samples {
        wtr.write_record([
            fmt_sig9(s.t),
            fmt_sig9(s.f_x),
            fmt_sig9(s.f_y),
            fmt_sig9(s.f_n),
            fmt_sig9(s.tau),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_velocity_csv<W: Write>(samples: &[VelocitySample], out: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(VELOCITY_HEADER)?;
    for s in samples {
        wtr.write_record([
            fmt_sig9(s.t),
            fmt_sig9(s.v_x),
            fmt_sig9(s.v_y),
            fmt_sig9(s.omega),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_truth_csv<W: Write>(samples: &[TruthSample], out: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(TRUTH_HEADER)?;
    for s in samples {
        wtr.write_record([
            fmt_sig9(s.t),
            fmt_sig9(s.mu_s),
            fmt_sig9(s.mu_c),
            fmt_sig9(s.r),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_events_csv<W: Write>(events: &[SlipEvent], out: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(EVENTS_HEADER)?;
    for e in events {
        wtr.write_record([fmt_sig9(e.t), e.kind.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}
