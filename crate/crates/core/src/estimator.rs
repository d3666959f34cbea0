//! Streaming contact-property estimator.
//!
//! Per tick, with `f_t = √(f_x² + f_y²)`:
//!
//! * `μ_c` is fitted by scalar RLS to `f_t = (γ_t f_n) μ_c` while `γ_t > ε_t`;
//! * `r` is fitted by scalar RLS to `|τ| = (γ_τ μ̂_c f_n) r` while `γ_τ > ε_τ`,
//!   using the `μ̂_c` of the same tick;
//! * `μ_s` is taken at stick/slip transitions as the mean of the `n_a`
//!   largest buffered values of `f_t / (γ_t f_n)`.
//!
//! Nothing is updated without contact (`f_n < ε_fn`). With the heuristic
//! enabled, a normal-force rise faster than `ε_δ` halts all updates for
//! `Δt` seconds.

use std::collections::VecDeque;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csv_format::{fmt_flag, fmt_sig9};
use crate::trace::TruthSample;

pub const MU_BOUNDS: (f64, f64) = (1e-4, 10.0);
pub const RADIUS_BOUNDS: (f64, f64) = (1e-4, 1.0);

/// Speeds at or below this are treated as exactly zero.
pub const ZERO_SPEED: f64 = 4.0 * f64::EPSILON;

/// Regularizer of the force-based `γ_t` denominator.
const GAMMA_FORCE_EPS: f64 = 1e-10;

/// Slack on the halt deadline so that `Δt / δt` whole ticks are halted.
const HALT_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("measurement time {t} does not follow previous time {prev}")]
    NonMonotonicTime { prev: f64, t: f64 },
    #[error("non-finite measurement field `{field}` at t = {t}")]
    NonFinite { field: &'static str, t: f64 },
    #[error("negative normal force {f_n} at t = {t}")]
    NegativeNormalForce { f_n: f64, t: f64 },
    #[error("fixed-point map undefined: {0}")]
    FixedPointDomain(&'static str),
    #[error("invalid estimator parameter `{key}`: {message}")]
    InvalidParams { key: &'static str, message: String },
    #[error("parameter file: {0}")]
    ParamFile(String),
}

fn default_heuristic() -> bool {
    true
}

/// Estimator tuning. Defaults are the values of the reference tuning:
/// `μ̂_c(0)=1.3, r̂(0)=0.02 m, μ̂_s(0)=1.5, ε_τ=ε_t=0.3, ε_v=1.5e-3 m/s,
/// ε_fn=0.2 N, P0=1, λ=0.98, n_b=16, n_a=2, ε_δ=150 N/s, Δt=0.05 s,
/// δt=1/120 s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorParams {
    pub mu_c_0: f64,
    pub r_0: f64,
    pub mu_s_0: f64,
    pub eps_tau: f64,
    pub eps_t: f64,
    pub eps_v: f64,
    pub eps_fn: f64,
    #[serde(rename = "P0")]
    pub p0: f64,
    pub lambda: f64,
    pub n_b: usize,
    pub n_a: usize,
    pub eps_delta: f64,
    /// Halt interval `Δt` after a fast normal-force rise.
    #[serde(rename = "Delta_t")]
    pub halt_duration: f64,
    /// Estimator tick `δt`, also the normal-force differencing step.
    pub delta_t: f64,
    /// Slip-detection threshold; `None` means `eps_v`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_s: Option<f64>,
    #[serde(default = "default_heuristic")]
    pub heuristic_enabled: bool,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        Self {
            mu_c_0: 1.3,
            r_0: 0.02,
            mu_s_0: 1.5,
            eps_tau: 0.3,
            eps_t: 0.3,
            eps_v: 1.5e-3,
            eps_fn: 0.2,
            p0: 1.0,
            lambda: 0.98,
            n_b: 16,
            n_a: 2,
            eps_delta: 150.0,
            halt_duration: 0.05,
            delta_t: 1.0 / 120.0,
            v_s: None,
            heuristic_enabled: true,
        }
    }
}

impl EstimatorParams {
    pub fn v_s(&self) -> f64 {
        self.v_s.unwrap_or(self.eps_v)
    }

    pub fn without_heuristic(mut self) -> Self {
        self.heuristic_enabled = false;
        self
    }

    /// Reads a TOML parameter file; absent keys keep their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self, EstimatorError> {
        let params: Self =
            toml::from_str(text).map_err(|e| EstimatorError::ParamFile(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        let bad = |key, message: String| Err(EstimatorError::InvalidParams { key, message });
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad("lambda", format!("must lie in (0, 1], got {}", self.lambda));
        }
        let positive = [
            ("eps_tau", self.eps_tau),
            ("eps_t", self.eps_t),
            ("eps_v", self.eps_v),
            ("eps_fn", self.eps_fn),
            ("eps_delta", self.eps_delta),
            ("P0", self.p0),
            ("Delta_t", self.halt_duration),
            ("delta_t", self.delta_t),
            ("v_s", self.v_s()),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(key, format!("must be positive, got {v}"));
            }
        }
        if !(self.mu_c_0 >= MU_BOUNDS.0 && self.mu_c_0 <= MU_BOUNDS.1) {
            return bad("mu_c_0", format!("must lie in {MU_BOUNDS:?}"));
        }
        if !(self.mu_s_0 >= MU_BOUNDS.0 && self.mu_s_0 <= MU_BOUNDS.1) {
            return bad("mu_s_0", format!("must lie in {MU_BOUNDS:?}"));
        }
        if !(self.r_0 >= RADIUS_BOUNDS.0 && self.r_0 <= RADIUS_BOUNDS.1) {
            return bad("r_0", format!("must lie in {RADIUS_BOUNDS:?}"));
        }
        if self.n_a == 0 {
            return bad("n_a", "must be at least 1".into());
        }
        if self.n_a > self.n_b {
            return bad("n_a", format!("must not exceed n_b = {}", self.n_b));
        }
        Ok(())
    }
}

/// One time-aligned estimator input.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Measurement {
    pub t: f64,
    pub f_x: f64,
    pub f_y: f64,
    pub f_n: f64,
    pub tau: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub omega: f64,
}

impl Measurement {
    pub fn tangential_force(&self) -> f64 {
        self.f_x.hypot(self.f_y)
    }

    pub fn linear_speed(&self) -> f64 {
        self.v_x.hypot(self.v_y)
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        let fields = [
            ("t", self.t),
            ("fx", self.f_x),
            ("fy", self.f_y),
            ("fn", self.f_n),
            ("tau", self.tau),
            ("vx", self.v_x),
            ("vy", self.v_y),
            ("omega", self.omega),
        ];
        if let Some((field, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(EstimatorError::NonFinite { field, t: self.t });
        }
        if self.f_n < 0.0 {
            return Err(EstimatorError::NegativeNormalForce {
                f_n: self.f_n,
                t: self.t,
            });
        }
        Ok(())
    }
}

/// One step of exponentially weighted scalar RLS:
/// `K = Pφ/(λ + φ²P)`, `θ' = θ + K(y − φθ)`, `P' = (1 − Kφ)P/λ`.
pub fn rls_scalar_update(theta: f64, p: f64, phi: f64, y: f64, lambda: f64) -> (f64, f64) {
    let gain = p * phi / (lambda + phi * phi * p);
    let theta = theta + gain * (y - phi * theta);
    let p = (1.0 - gain * phi) * p / lambda;
    (theta, p)
}

/// Mean of the `n` largest values (all of them if fewer).
pub fn mean_of_largest(values: impl IntoIterator<Item = f64>, n: usize) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() || n == 0 {
        return None;
    }
    v.sort_by(|a, b| b.total_cmp(a));
    let top = &v[..n.min(v.len())];
    Some(top.iter().sum::<f64>() / top.len() as f64)
}

/// Mutable estimator state.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub mu_c_hat: f64,
    pub p_mu: f64,
    pub r_hat: f64,
    pub p_r: f64,
    pub mu_s_hat: f64,
    /// Candidate static-friction ratios, at most `n_b` of them.
    pub buffer: VecDeque<f64>,
    /// Stick/slip flag: `true` while waiting for slip onset (`v_z = 1`).
    pub v_z: bool,
    pub halt_until: f64,
    pub last_fn: Option<f64>,
    pub last_t: Option<f64>,
}

/// Estimator output for one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRecord {
    pub t: f64,
    pub mu_c_hat: f64,
    pub mu_s_hat: f64,
    pub r_hat: f64,
    pub gamma_t: f64,
    pub gamma_tau: f64,
    pub updated_mu_c: bool,
    pub updated_r: bool,
    pub halted: bool,
    pub in_contact: bool,
}

impl EstimatorState {
    pub fn new(params: &EstimatorParams) -> Self {
        Self {
            mu_c_hat: params.mu_c_0,
            p_mu: params.p0,
            r_hat: params.r_0,
            p_r: params.p0,
            mu_s_hat: params.mu_s_0,
            buffer: VecDeque::with_capacity(params.n_b),
            v_z: true,
            halt_until: f64::NEG_INFINITY,
            last_fn: None,
            last_t: None,
        }
    }

    fn record(&self, t: f64) -> EstimateRecord {
        EstimateRecord {
            t,
            mu_c_hat: self.mu_c_hat,
            mu_s_hat: self.mu_s_hat,
            r_hat: self.r_hat,
            gamma_t: 0.0,
            gamma_tau: 0.0,
            updated_mu_c: false,
            updated_r: false,
            halted: false,
            in_contact: false,
        }
    }

    pub fn step(
        &mut self,
        meas: &Measurement,
        params: &EstimatorParams,
    ) -> Result<EstimateRecord, EstimatorError> {
        meas.validate()?;
        if let Some(prev) = self.last_t {
            if !(meas.t > prev) {
                return Err(EstimatorError::NonMonotonicTime { prev, t: meas.t });
            }
        }
        self.last_t = Some(meas.t);
        let prev_fn = self.last_fn.replace(meas.f_n);

        if meas.f_n < params.eps_fn {
            return Ok(self.record(meas.t));
        }

        if params.heuristic_enabled {
            if let Some(prev) = prev_fn {
                if (meas.f_n - prev) / params.delta_t > params.eps_delta {
                    self.halt_until = meas.t + params.halt_duration;
                }
            }
        }
        let halted = params.heuristic_enabled && meas.t < self.halt_until - HALT_SLACK;

        let v_t = meas.linear_speed();
        let v = v_t.hypot(self.r_hat * meas.omega);
        let (gamma_t, gamma_tau) = if v > 0.0 {
            (v_t / v, (self.r_hat * meas.omega).abs() / v)
        } else {
            (0.0, 0.0)
        };

        let mut updated_mu_c = false;
        let mut updated_r = false;
        if !halted && v > params.eps_v {
            if gamma_t > params.eps_t {
                (self.mu_c_hat, self.p_mu) = rls_scalar_update(
                    self.mu_c_hat,
                    self.p_mu,
                    gamma_t * meas.f_n,
                    meas.tangential_force(),
                    params.lambda,
                );
                updated_mu_c = true;
            }
            if gamma_tau > params.eps_tau {
                (self.r_hat, self.p_r) = rls_scalar_update(
                    self.r_hat,
                    self.p_r,
                    gamma_tau * self.mu_c_hat * meas.f_n,
                    meas.tau.abs(),
                    params.lambda,
                );
                updated_r = true;
            }
        }

        self.mu_s_step(meas, params, halted);

        self.mu_c_hat = self.mu_c_hat.clamp(MU_BOUNDS.0, MU_BOUNDS.1);
        self.mu_s_hat = self.mu_s_hat.clamp(MU_BOUNDS.0, MU_BOUNDS.1);
        self.r_hat = self.r_hat.clamp(RADIUS_BOUNDS.0, RADIUS_BOUNDS.1);

        Ok(EstimateRecord {
            gamma_t,
            gamma_tau,
            updated_mu_c,
            updated_r,
            halted,
            in_contact: true,
            ..self.record(meas.t)
        })
    }

    /// Static-friction update. `halted` suppresses buffer appends but not
    /// the stick/slip bookkeeping.
    pub fn mu_s_step(&mut self, meas: &Measurement, params: &EstimatorParams, halted: bool) {
        let v_t = meas.linear_speed();
        let v = v_t.hypot(self.r_hat * meas.omega);
        let f_t = meas.tangential_force();
        let gamma_t = if v <= ZERO_SPEED {
            let scaled_torque = meas.tau / self.r_hat;
            f_t / ((f_t * f_t + scaled_torque * scaled_torque).sqrt() + GAMMA_FORCE_EPS)
        } else {
            v_t / v
        };
        if !(gamma_t > params.eps_t) {
            return;
        }
        if !halted && meas.f_n > 0.0 {
            if self.buffer.len() == params.n_b {
                self.buffer.pop_front();
            }
            self.buffer.push_back(f_t / (gamma_t * meas.f_n));
        }
        let slip_onset = self.v_z && v_t > params.v_s();
        let stick_onset = !self.v_z && v_t <= ZERO_SPEED;
        if slip_onset || stick_onset {
            if let Some(mu_s) = mean_of_largest(self.buffer.iter().copied(), params.n_a) {
                self.mu_s_hat = mu_s;
            }
            self.v_z = !self.v_z;
            self.buffer.clear();
        }
    }
}

/// Estimator state bundled with its parameters.
#[derive(Debug, Clone)]
pub struct Estimator {
    params: EstimatorParams,
    state: EstimatorState,
}

impl Estimator {
    pub fn new(params: EstimatorParams) -> Result<Self, EstimatorError> {
        params.validate()?;
        let state = EstimatorState::new(&params);
        Ok(Self { params, state })
    }

    pub fn params(&self) -> &EstimatorParams {
        &self.params
    }

    pub fn state(&self) -> &EstimatorState {
        &self.state
    }

    pub fn step(&mut self, meas: &Measurement) -> Result<EstimateRecord, EstimatorError> {
        self.state.step(meas, &self.params)
    }

    pub fn run(&mut self, stream: &[Measurement]) -> Result<Vec<EstimateRecord>, EstimatorError> {
        stream.iter().map(|m| self.step(m)).collect()
    }
}

/// Intermediate quantities of the fixed-point map at a trial `μ_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointTerms {
    pub radius: f64,
    pub gamma_t: f64,
    pub gamma_tau: f64,
    pub mapped: f64,
}

/// Evaluates `T(μ_c) = f_t / (f_n γ_t(μ_c))`, where `r(μ_c)` solves
/// `r = |τ| / (γ_τ(r) μ_c f_n)` with `γ_τ(r) = r|ω| / √(v_t² + r²ω²)`.
///
/// With `a = |τ|/(μ_c f_n)` the radius equation reduces to
/// `ω² r⁴ − a² ω² r² − a² v_t² = 0`, whose non-negative root is
/// `r² = (a² + √(a⁴ + 4 a² v_t²/ω²)) / 2`.
pub fn fixed_point_terms(mu_c: f64, meas: &Measurement) -> Result<FixedPointTerms, EstimatorError> {
    meas.validate()?;
    let v_t = meas.linear_speed();
    let omega = meas.omega.abs();
    if !(mu_c > 0.0) {
        return Err(EstimatorError::FixedPointDomain("trial mu_c must be positive"));
    }
    if !(meas.f_n > 0.0) {
        return Err(EstimatorError::FixedPointDomain("normal force must be positive"));
    }
    if v_t == 0.0 {
        return Err(EstimatorError::FixedPointDomain("no linear slip, gamma_t vanishes"));
    }
    if omega == 0.0 || meas.tau == 0.0 {
        return Err(EstimatorError::FixedPointDomain(
            "no rotational coupling, radius is unidentifiable",
        ));
    }
    let a = meas.tau.abs() / (mu_c * meas.f_n);
    let a2 = a * a;
    let r_sq = 0.5 * (a2 + (a2 * a2 + 4.0 * a2 * v_t * v_t / (omega * omega)).sqrt());
    if !(r_sq >= 0.0 && r_sq.is_finite()) {
        return Err(EstimatorError::FixedPointDomain("no non-negative radius root"));
    }
    let radius = r_sq.sqrt();
    let norm = v_t.hypot(radius * omega);
    let gamma_t = v_t / norm;
    let gamma_tau = radius * omega / norm;
    Ok(FixedPointTerms {
        radius,
        gamma_t,
        gamma_tau,
        mapped: meas.tangential_force() / (meas.f_n * gamma_t),
    })
}

pub fn fixed_point_map(mu_c: f64, meas: &Measurement) -> Result<f64, EstimatorError> {
    fixed_point_terms(mu_c, meas).map(|t| t.mapped)
}

pub const ESTIMATE_HEADER: [&str; 10] = [
    "t",
    "mu_c",
    "mu_s",
    "r",
    "gamma_t",
    "gamma_tau",
    "updated_mu_c",
    "updated_r",
    "halted",
    "in_contact",
];

pub const ERROR_COLUMNS: [&str; 3] = ["err_mu_c", "err_mu_s", "err_r"];

/// Writes one row per record. With a truth stream, appends
/// `err_mu_c,err_mu_s,err_r` (estimate minus nearest-past truth).
pub fn write_estimates_csv<W: Write>(
    records: &[EstimateRecord],
    truth: Option<&[TruthSample]>,
    out: W,
) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = ESTIMATE_HEADER.to_vec();
    if truth.is_some() {
        header.extend(ERROR_COLUMNS);
    }
    wtr.write_record(&header)?;
    let mut cursor = 0usize;
    for r in records {
        let mut row = vec![
            fmt_sig9(r.t),
            fmt_sig9(r.mu_c_hat),
            fmt_sig9(r.mu_s_hat),
            fmt_sig9(r.r_hat),
            fmt_sig9(r.gamma_t),
            fmt_sig9(r.gamma_tau),
            fmt_flag(r.updated_mu_c).into(),
            fmt_flag(r.updated_r).into(),
            fmt_flag(r.halted).into(),
            fmt_flag(r.in_contact).into(),
        ];
        if let Some(truth) = truth {
            while cursor + 1 < truth.len() && truth[cursor + 1].t <= r.t {
                cursor += 1;
            }
            match truth.get(cursor).filter(|s| s.t <= r.t) {
                Some(s) => row.extend([
                    fmt_sig9(r.mu_c_hat - s.mu_c),
                    fmt_sig9(r.mu_s_hat - s.mu_s),
                    fmt_sig9(r.r_hat - s.r),
                ]),
                None => row.extend(["".to_string(), "".to_string(), "".to_string()]),
            }
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

fn parse_flag(s: &str) -> Option<bool> {
    match s {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    }
}

/// Reads an estimate CSV (extra columns are ignored).
pub fn read_estimates_csv<R: Read>(input: R) -> Result<Vec<EstimateRecord>, String> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
    let mut idx = [0usize; 10];
    for (slot, name) in idx.iter_mut().zip(ESTIMATE_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("missing column `{name}`"))?;
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let num = |i: usize| -> Result<f64, String> {
            rec.get(idx[i])
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| format!("row {}: bad `{}`", row + 1, ESTIMATE_HEADER[i]))
        };
        let flag = |i: usize| -> Result<bool, String> {
            rec.get(idx[i])
                .and_then(parse_flag)
                .ok_or_else(|| format!("row {}: bad `{}`", row + 1, ESTIMATE_HEADER[i]))
        };
        out.push(EstimateRecord {
            t: num(0)?,
            mu_c_hat: num(1)?,
            mu_s_hat: num(2)?,
            r_hat: num(3)?,
            gamma_t: num(4)?,
            gamma_tau: num(5)?,
            updated_mu_c: flag(6)?,
            updated_r: flag(7)?,
            halted: flag(8)?,
            in_contact: flag(9)?,
        });
    }
    Ok(out)
}
