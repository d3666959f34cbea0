//! Stick-slip trace simulator.
//!
//! A scenario is a list of segments. A segment with a nonzero commanded
//! twist slides: its wrench is the selected friction model evaluated at the
//! commanded twist. A segment with a zero twist sticks: the tangential load
//! ramps at `load_rate` until it exceeds `μ_s·f_n`, the contact breaks away
//! (one-velocity-tick slip pulse of `2·eps_v` along the load), the force
//! drops to `μ_c·f_n` and loading restarts.
//!
//! The simulation runs on a `dt_sim` grid; sensor streams are resampled by
//! nearest-past sample at `force_rate` and `velocity_rate`, and every emitted
//! value is rounded to the 9 significant digits used by the CSV format.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contact_model::{
    ellipsoid_wrench_with_threshold, scaled_speed, ContactParams, ContactPatch, FrictionWrench,
    ModelError, PlanarTwist, PressureDistribution, DEFAULT_EPS_V, DEFAULT_GRID_RESOLUTION,
};
use crate::csv_format::quantize;
use crate::trace::{EventKind, ForceSample, SlipEvent, TruthSample, VelocitySample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid `{key}`: {message}")]
    Config { key: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn config_err(key: impl Into<String>, message: impl Into<String>) -> SimError {
    SimError::Config {
        key: key.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrictionModel {
    /// Point-wise Coulomb friction summed over the segment's distribution.
    #[default]
    NumericLimitSurface,
    /// Rim-contact ellipsoid with the segment's `truth.r`.
    Ellipsoid,
}

/// Piecewise-linear normal force over segment-relative time, held constant
/// outside the knot range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NormalForceSpec", into = "NormalForceSpec")]
pub struct NormalForceProfile {
    knots: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum NormalForceSpec {
    Constant(f64),
    Knots(Vec<[f64; 2]>),
}

impl TryFrom<NormalForceSpec> for NormalForceProfile {
    type Error = String;

    fn try_from(spec: NormalForceSpec) -> Result<Self, Self::Error> {
        match spec {
            NormalForceSpec::Constant(f) => Ok(Self::constant(f)),
            NormalForceSpec::Knots(k) => {
                Self::piecewise(k.into_iter().map(|[t, f]| (t, f)).collect())
            }
        }
    }
}

impl From<NormalForceProfile> for NormalForceSpec {
    fn from(p: NormalForceProfile) -> Self {
        if p.knots.len() == 1 {
            NormalForceSpec::Constant(p.knots[0].1)
        } else {
            NormalForceSpec::Knots(p.knots.iter().map(|&(t, f)| [t, f]).collect())
        }
    }
}

impl NormalForceProfile {
    pub fn constant(f_n: f64) -> Self {
        Self {
            knots: vec![(0.0, f_n)],
        }
    }

    pub fn piecewise(knots: Vec<(f64, f64)>) -> Result<Self, String> {
        if knots.is_empty() {
            return Err("normal force profile needs at least one knot".into());
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err("normal force knot times must be strictly increasing".into());
        }
        Ok(Self { knots })
    }

    pub fn at(&self, u: f64) -> f64 {
        let first = self.knots[0];
        if u <= first.0 {
            return first.1;
        }
        for w in self.knots.windows(2) {
            let (t0, f0) = w[0];
            let (t1, f1) = w[1];
            if u <= t1 {
                return f0 + (f1 - f0) * (u - t0) / (t1 - t0);
            }
        }
        self.knots[self.knots.len() - 1].1
    }

    pub fn min(&self) -> f64 {
        self.knots.iter().map(|k| k.1).fold(f64::INFINITY, f64::min)
    }

    fn is_finite(&self) -> bool {
        self.knots.iter().all(|k| k.0.is_finite() && k.1.is_finite())
    }
}

/// One scripted phase of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSegment {
    pub duration: f64,
    /// Zero twist means a stick phase.
    pub commanded_twist: PlanarTwist,
    pub truth: ContactParams,
    pub dist: PressureDistribution,
    pub fn_profile: NormalForceProfile,
    /// Tangential load ramp during stick, N/s.
    pub load_rate: f64,
    /// Direction of the tangential load in the contact plane, rad.
    pub load_direction: f64,
}

impl ScenarioSegment {
    /// Segment whose pressure distribution is a uniform disc with effective
    /// radius `truth.r`.
    pub fn new(duration: f64, twist: PlanarTwist, truth: ContactParams, f_n: f64) -> Self {
        Self {
            duration,
            commanded_twist: twist,
            truth,
            dist: PressureDistribution::UniformDisc {
                radius: 1.5 * truth.r,
            },
            fn_profile: NormalForceProfile::constant(f_n),
            load_rate: 0.0,
            load_direction: 0.0,
        }
    }

    pub fn stick(duration: f64, truth: ContactParams, f_n: f64, load_rate: f64) -> Self {
        Self {
            load_rate,
            ..Self::new(duration, PlanarTwist::ZERO, truth, f_n)
        }
    }

    pub fn with_dist(mut self, dist: PressureDistribution) -> Self {
        self.dist = dist;
        self
    }

    pub fn with_fn_profile(mut self, profile: NormalForceProfile) -> Self {
        self.fn_profile = profile;
        self
    }

    pub fn is_stick(&self) -> bool {
        self.commanded_twist.is_zero()
    }

    fn validate(&self, index: usize, config: &SimConfig) -> Result<(), SimError> {
        let key = |field: &str| format!("segment[{index}].{field}");
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(config_err(key("duration"), format!("must be positive, got {}", self.duration)));
        }
        if !self.fn_profile.is_finite() || self.fn_profile.min() < 0.0 {
            return Err(config_err(key("fn"), "normal force must be finite and non-negative"));
        }
        self.truth
            .validate()
            .map_err(|e| config_err(key("truth"), e.to_string()))?;
        self.dist
            .validate()
            .map_err(|e| config_err(key("dist"), e.to_string()))?;
        self.commanded_twist
            .validate()
            .map_err(|e| config_err(key("twist"), e.to_string()))?;
        if !(self.load_rate >= 0.0 && self.load_rate.is_finite()) {
            return Err(config_err(key("load_rate"), "must be finite and non-negative"));
        }
        if !self.load_direction.is_finite() {
            return Err(config_err(key("load_direction"), "must be finite"));
        }
        if !self.is_stick() {
            let v = scaled_speed(&self.commanded_twist, self.truth.r)?;
            if v <= config.eps_v {
                return Err(config_err(
                    key("twist"),
                    format!("scaled speed {v} must exceed eps_v = {}", config.eps_v),
                ));
            }
        }
        Ok(())
    }
}

/// Normal-force transient: linear rise to `amplitude` over `rise_time`,
/// then exponential decay with time constant `decay_time`, optionally
/// modulated by a cosine at `oscillation_hz`. While active, the measured
/// tangential force and torque are scaled by `1 − tangential_dip·s/amplitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceTransient {
    pub amplitude: f64,
    pub rise_time: f64,
    pub decay_time: f64,
    #[serde(default)]
    pub oscillation_hz: f64,
    #[serde(default)]
    pub tangential_dip: f64,
}

impl ForceTransient {
    /// Normal-force offset `u` seconds after onset.
    pub fn shape(&self, u: f64) -> f64 {
        if u < 0.0 {
            0.0
        } else if u < self.rise_time {
            self.amplitude * u / self.rise_time
        } else {
            let s = u - self.rise_time;
            self.amplitude * (-s / self.decay_time).exp() * (2.0 * PI * self.oscillation_hz * s).cos()
        }
    }

    /// Time after which the transient is below 1e-6 of its amplitude.
    fn support(&self) -> f64 {
        self.rise_time + self.decay_time * 6.0 * std::f64::consts::LN_10
    }

    fn validate(&self, key: &str) -> Result<(), SimError> {
        let ok = self.amplitude.is_finite()
            && self.rise_time > 0.0
            && self.decay_time > 0.0
            && self.oscillation_hz >= 0.0
            && self.tangential_dip.is_finite()
            && self.rise_time.is_finite()
            && self.decay_time.is_finite()
            && self.oscillation_hz.is_finite();
        if ok {
            Ok(())
        } else {
            Err(config_err(
                key,
                "rise_time and decay_time must be positive and all fields finite",
            ))
        }
    }
}

/// Transients at Poisson-distributed times over the whole trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomTransients {
    pub rate_hz: f64,
    pub transient: ForceTransient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt_sim: f64,
    pub force_rate: f64,
    pub velocity_rate: f64,
    pub noise_force_std: f64,
    pub noise_torque_std: f64,
    pub noise_vel_std: f64,
    pub noise_omega_std: f64,
    pub seed: u64,
    pub friction_model: FrictionModel,
    /// Slip threshold; the break-away pulse has magnitude `2·eps_v`.
    pub eps_v: f64,
    pub grid_resolution: usize,
    /// Transient started at every break-away.
    pub break_transient: Option<ForceTransient>,
    pub random_transients: Option<RandomTransients>,
}

/// Keys accepted in the `[config]` table and as command-line overrides.
pub const SIM_CONFIG_KEYS: [&str; 13] = [
    "dt_sim",
    "force_rate",
    "velocity_rate",
    "noise_force_std",
    "noise_torque_std",
    "noise_vel_std",
    "noise_omega_std",
    "seed",
    "friction_model",
    "eps_v",
    "grid_resolution",
    "break_transient",
    "random_transients",
];

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt_sim: 1e-3,
            force_rate: 1000.0,
            velocity_rate: 120.0,
            noise_force_std: 0.0,
            noise_torque_std: 0.0,
            noise_vel_std: 0.0,
            noise_omega_std: 0.0,
            seed: 0,
            friction_model: FrictionModel::NumericLimitSurface,
            eps_v: DEFAULT_EPS_V,
            grid_resolution: DEFAULT_GRID_RESOLUTION,
            break_transient: None,
            random_transients: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("dt_sim", self.dt_sim),
            ("force_rate", self.force_rate),
            ("velocity_rate", self.velocity_rate),
            ("eps_v", self.eps_v),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_err(key, format!("must be positive, got {v}")));
            }
        }
        let noise = [
            ("noise_force_std", self.noise_force_std),
            ("noise_torque_std", self.noise_torque_std),
            ("noise_vel_std", self.noise_vel_std),
            ("noise_omega_std", self.noise_omega_std),
        ];
        for (key, v) in noise {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(config_err(key, format!("must be non-negative, got {v}")));
            }
        }
        if self.force_rate < self.velocity_rate {
            return Err(config_err("force_rate", "must be at least velocity_rate"));
        }
        if self.dt_sim > 1.0 / self.force_rate * (1.0 + 1e-12) {
            return Err(config_err("dt_sim", "must not exceed 1/force_rate"));
        }
        if let Some(t) = &self.break_transient {
            t.validate("break_transient")?;
        }
        if let Some(r) = &self.random_transients {
            if !(r.rate_hz > 0.0 && r.rate_hz.is_finite()) {
                return Err(config_err("random_transients.rate_hz", "must be positive"));
            }
            r.transient.validate("random_transients.transient")?;
        }
        Ok(())
    }
}

/// Simulator output. Timestamps are exact at CSV precision; channel values
/// carry full precision until written.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub force_stream: Vec<ForceSample>,
    pub velocity_stream: Vec<VelocitySample>,
    pub events: Vec<SlipEvent>,
    pub truth_stream: Vec<TruthSample>,
}

impl SimTrace {
    /// The trace as it reads back from CSV.
    pub fn quantized(&self) -> SimTrace {
        SimTrace {
            force_stream: self.force_stream.iter().map(ForceSample::quantized).collect(),
            velocity_stream: self.velocity_stream.iter().map(VelocitySample::quantized).collect(),
            events: self.events.clone(),
            truth_stream: self.truth_stream.iter().map(TruthSample::quantized).collect(),
        }
    }
}

/// Per-tick state of the simulated contact.
#[derive(Debug, Clone, Copy, Default)]
struct TickState {
    wrench: FrictionWrench,
    f_n: f64,
    twist: PlanarTwist,
    segment: usize,
}

fn tick_count(duration: f64, dt: f64) -> usize {
    (duration / dt).round().max(1.0) as usize
}

/// Index of the sim tick at or just before `t`.
fn nearest_past_tick(t: f64, dt: f64) -> usize {
    (t / dt + 1e-9).floor() as usize
}

fn gaussian(rng: &mut ChaCha8Rng, std: f64) -> f64 {
    if std == 0.0 {
        0.0
    } else {
        Normal::new(0.0, std).expect("validated std").sample(rng)
    }
}

pub fn run_scenario(segments: &[ScenarioSegment], config: &SimConfig) -> Result<SimTrace, SimError> {
    config.validate()?;
    if segments.is_empty() {
        return Err(config_err("segment", "scenario has no segments"));
    }
    for (i, seg) in segments.iter().enumerate() {
        seg.validate(i, config)?;
    }

    let dt = config.dt_sim;
    let total_ticks: usize = segments.iter().map(|s| tick_count(s.duration, dt)).sum();
    let mut ticks = vec![TickState::default(); total_ticks];
    let mut events = Vec::new();
    let mut break_ticks: Vec<(usize, f64)> = Vec::new();

    let mut k = 0usize;
    let mut last_ft = 0.0;
    for (seg_index, seg) in segments.iter().enumerate() {
        let n = tick_count(seg.duration, dt);
        if seg.is_stick() {
            let (c, s) = (seg.load_direction.cos(), seg.load_direction.sin());
            let mut ramp_origin = (last_ft, 0usize);
            for i in 0..n {
                let f_n = seg.fn_profile.at(i as f64 * dt);
                let ft = if i > 0 && ramp_origin.1 == i {
                    events.push(SlipEvent {
                        t: quantize(k as f64 * dt),
                        kind: EventKind::StickOnset,
                    });
                    ramp_origin.0
                } else {
                    ramp_origin.0 + seg.load_rate * (i - ramp_origin.1) as f64 * dt
                };
                if i + 1 < n && ft > seg.truth.mu_s * f_n {
                    events.push(SlipEvent {
                        t: quantize(k as f64 * dt),
                        kind: EventKind::SlipOnset,
                    });
                    break_ticks.push((k, seg.load_direction));
                    let next_fn = seg.fn_profile.at((i + 1) as f64 * dt);
                    ramp_origin = (seg.truth.mu_c * next_fn, i + 1);
                }
                ticks[k] = TickState {
                    wrench: FrictionWrench {
                        f_x: -ft * c,
                        f_y: -ft * s,
                        f_t: ft,
                        tau: 0.0,
                    },
                    f_n,
                    twist: PlanarTwist::ZERO,
                    segment: seg_index,
                };
                last_ft = ft;
                k += 1;
            }
        } else {
            // Friction is linear in f_n, so the unit-load wrench is computed once.
            let unit = match config.friction_model {
                FrictionModel::NumericLimitSurface => {
                    ContactPatch::discretize_with(&seg.dist, config.grid_resolution)?
                        .friction_wrench(&seg.commanded_twist, seg.truth.mu_c, 1.0)?
                }
                FrictionModel::Ellipsoid => ellipsoid_wrench_with_threshold(
                    &seg.commanded_twist,
                    1.0,
                    &seg.truth,
                    config.eps_v,
                )?,
            };
            for i in 0..n {
                let f_n = seg.fn_profile.at(i as f64 * dt);
                ticks[k] = TickState {
                    wrench: FrictionWrench {
                        f_x: unit.f_x * f_n,
                        f_y: unit.f_y * f_n,
                        f_t: unit.f_t * f_n,
                        tau: unit.tau * f_n,
                    },
                    f_n,
                    twist: seg.commanded_twist,
                    segment: seg_index,
                };
                last_ft = unit.f_t * f_n;
                k += 1;
            }
        }
    }

    let truth_r: Vec<f64> = segments
        .iter()
        .map(|s| match config.friction_model {
            FrictionModel::Ellipsoid => Ok(s.truth.r),
            FrictionModel::NumericLimitSurface => {
                ContactPatch::discretize_with(&s.dist, config.grid_resolution)
                    .map(|p| p.effective_radius())
            }
        })
        .collect::<Result<_, _>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let end_time = total_ticks as f64 * dt;

    let mut transients: Vec<(f64, ForceTransient)> = Vec::new();
    if let Some(random) = &config.random_transients {
        let gaps = Exp::new(random.rate_hz).expect("validated rate");
        let mut t = gaps.sample(&mut rng);
        while t < end_time {
            transients.push((t, random.transient));
            t += gaps.sample(&mut rng);
        }
    }
    if let Some(tr) = &config.break_transient {
        transients.extend(break_ticks.iter().map(|&(k, _)| (k as f64 * dt, *tr)));
    }
    transients.sort_by(|a, b| a.0.total_cmp(&b.0));

    let n_force = (end_time * config.force_rate - 1e-9).ceil().max(1.0) as usize;
    let mut force_stream = Vec::with_capacity(n_force);
    for j in 0..n_force {
        let t = j as f64 / config.force_rate;
        let st = &ticks[nearest_past_tick(t, dt).min(total_ticks - 1)];
        let (mut dn, mut dip) = (0.0, 0.0);
        for (onset, tr) in transients.iter().take_while(|(onset, _)| *onset <= t) {
            let u = t - onset;
            if u <= tr.support() {
                let s = tr.shape(u);
                dn += s;
                if tr.amplitude != 0.0 {
                    dip += tr.tangential_dip * s / tr.amplitude;
                }
            }
        }
        let scale = 1.0 - dip;
        force_stream.push(ForceSample {
            t: quantize(t),
            f_x: st.wrench.f_x * scale + gaussian(&mut rng, config.noise_force_std),
            f_y: st.wrench.f_y * scale + gaussian(&mut rng, config.noise_force_std),
            f_n: (st.f_n + dn + gaussian(&mut rng, config.noise_force_std)).max(0.0),
            tau: st.wrench.tau * scale + gaussian(&mut rng, config.noise_torque_std),
        });
    }

    let n_vel = (end_time * config.velocity_rate - 1e-9).ceil().max(1.0) as usize;
    let mut velocity_stream = Vec::with_capacity(n_vel);
    let mut truth_stream = Vec::with_capacity(n_vel);
    let mut prev_tick: Option<usize> = None;
    let mut next_break = 0usize;
    for j in 0..n_vel {
        let t = j as f64 / config.velocity_rate;
        let tick = nearest_past_tick(t, dt).min(total_ticks - 1);
        let st = &ticks[tick];
        let mut twist = st.twist;
        while next_break < break_ticks.len() && break_ticks[next_break].0 <= tick {
            let (bk, dir) = break_ticks[next_break];
            if prev_tick.is_none_or(|p| bk > p) {
                let speed = 2.0 * config.eps_v;
                twist = PlanarTwist {
                    v_x: speed * dir.cos(),
                    v_y: speed * dir.sin(),
                    omega: 0.0,
                };
            }
            next_break += 1;
        }
        if !twist.is_zero() {
            twist.v_x += gaussian(&mut rng, config.noise_vel_std);
            twist.v_y += gaussian(&mut rng, config.noise_vel_std);
            twist.omega += gaussian(&mut rng, config.noise_omega_std);
        }
        velocity_stream.push(VelocitySample {
            t: quantize(t),
            v_x: twist.v_x,
            v_y: twist.v_y,
            omega: twist.omega,
        });
        let seg = &segments[st.segment];
        truth_stream.push(TruthSample {
            t: quantize(t),
            mu_s: seg.truth.mu_s,
            mu_c: seg.truth.mu_c,
            r: truth_r[st.segment],
        });
        prev_tick = Some(tick);
    }

    Ok(SimTrace {
        force_stream,
        velocity_stream,
        events,
        truth_stream,
    })
}

/// Canonical five-segment scenario: linear slip, stick transition, rotation,
/// stick transition, planar slip, with step changes in μ_s, μ_c and r.
///
/// | segment | duration | twist (v_x, v_y, ω)      | μ_s  | μ_c  | r [m] |
/// |---------|----------|--------------------------|------|------|-------|
/// | linear  | 2 s      | (0.01, 0, 0)             | 0.60 | 0.40 | 0.010 |
/// | stick   | 1.5 s    | load 2 N/s along x       | 0.70 | 0.50 | 0.010 |
/// | rotate  | 2 s      | (0, 0, 1.0)              | 0.70 | 0.50 | 0.012 |
/// | stick   | 1.5 s    | load 2 N/s along y       | 0.65 | 0.45 | 0.012 |
/// | planar  | 3 s      | (0.008, 0.004, 0.6)      | 0.65 | 0.45 | 0.015 |
///
/// Normal force is 2 N throughout; every distribution is a uniform disc of
/// outer radius `1.5·r`.
pub fn make_paper_like_scenario() -> Vec<ScenarioSegment> {
    let truth = |mu_s, mu_c, r| ContactParams { mu_s, mu_c, r };
    let f_n = 2.0;
    vec![
        ScenarioSegment::new(
            2.0,
            PlanarTwist {
                v_x: 0.01,
                v_y: 0.0,
                omega: 0.0,
            },
            truth(0.6, 0.4, 0.010),
            f_n,
        ),
        ScenarioSegment::stick(1.5, truth(0.7, 0.5, 0.010), f_n, 2.0),
        ScenarioSegment::new(
            2.0,
            PlanarTwist {
                v_x: 0.0,
                v_y: 0.0,
                omega: 1.0,
            },
            truth(0.7, 0.5, 0.012),
            f_n,
        ),
        ScenarioSegment {
            load_direction: PI / 2.0,
            ..ScenarioSegment::stick(1.5, truth(0.65, 0.45, 0.012), f_n, 2.0)
        },
        ScenarioSegment::new(
            3.0,
            PlanarTwist {
                v_x: 0.008,
                v_y: 0.004,
                omega: 0.6,
            },
            truth(0.65, 0.45, 0.015),
            f_n,
        ),
    ]
}
