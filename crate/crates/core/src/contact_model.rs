//! Planar sliding contact model.
//!
//! Two friction models live here:
//!
//! * the rim-contact ellipsoid, where the sliding wrench is
//!
//!   ```text
//!   f_t = γ_t · μ_c · f_n,      γ_t = v_t / v
//!   τ   = γ_τ · μ_c · f_n · r,  γ_τ = |r ω| / v
//!   v   = √(v_x² + v_y² + r²ω²)
//!   ```
//!
//! * a brute-force limit surface obtained by summing point-wise Coulomb
//!   friction over a discretized pressure distribution. It is the reference
//!   the ellipsoid is checked against and the "true" model of the simulator.
//!
//! All torques are taken about the center of pressure, which every
//! distribution places at the origin.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csv_format::fmt_sig9;

/// Default slip threshold below which the ellipsoid model is not applied.
pub const DEFAULT_EPS_V: f64 = 1.5e-3;

/// Default per-axis cell count used to discretize continuous distributions.
pub const DEFAULT_GRID_RESOLUTION: usize = 64;

/// Smallest accepted grid resolution for continuous distributions.
pub const MIN_GRID_RESOLUTION: usize = 32;

/// Number of equally weighted points used for a rim distribution.
pub const RIM_POINTS: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("scaled speed is zero, motion ratios are undefined")]
    UndefinedRatios,
    #[error("scaled speed {speed} is not above the slip threshold {eps_v}")]
    BelowSlipThreshold { speed: f64, eps_v: f64 },
    #[error("no point of the contact patch moves under the given twist")]
    DegenerateTwist,
    #[error("normal force must be non-negative and finite, got {0}")]
    InvalidNormalForce(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid pressure distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid contact parameters: {0}")]
    InvalidParams(String),
    #[error("sweep needs at least {min} directions, got {got}")]
    TooFewDirections { min: usize, got: usize },
}

/// In-plane slip velocity of the object at the center of pressure.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanarTwist {
    pub v_x: f64,
    pub v_y: f64,
    pub omega: f64,
}

impl PlanarTwist {
    pub const ZERO: PlanarTwist = PlanarTwist {
        v_x: 0.0,
        v_y: 0.0,
        omega: 0.0,
    };

    pub fn new(v_x: f64, v_y: f64, omega: f64) -> Result<Self, ModelError> {
        let twist = Self { v_x, v_y, omega };
        twist.validate()?;
        Ok(twist)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.v_x.is_finite() && self.v_y.is_finite() && self.omega.is_finite() {
            Ok(())
        } else {
            Err(ModelError::NonFinite("twist"))
        }
    }

    /// Linear slip speed `v_t`.
    pub fn linear_speed(&self) -> f64 {
        self.v_x.hypot(self.v_y)
    }

    pub fn is_zero(&self) -> bool {
        self.v_x == 0.0 && self.v_y == 0.0 && self.omega == 0.0
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            v_x: self.v_x * c,
            v_y: self.v_y * c,
            omega: self.omega * c,
        }
    }
}

/// Friction properties of a contact: `mu_s ≥ mu_c > 0`, `r > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactParams {
    pub mu_s: f64,
    pub mu_c: f64,
    pub r: f64,
}

impl ContactParams {
    pub fn new(mu_s: f64, mu_c: f64, r: f64) -> Result<Self, ModelError> {
        let params = Self { mu_s, mu_c, r };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.mu_s.is_finite() && self.mu_c.is_finite() && self.r.is_finite()) {
            return Err(ModelError::NonFinite("contact parameters"));
        }
        if self.mu_c <= 0.0 {
            return Err(ModelError::InvalidParams(format!(
                "mu_c must be positive, got {}",
                self.mu_c
            )));
        }
        if self.mu_s < self.mu_c {
            return Err(ModelError::InvalidParams(format!(
                "mu_s ({}) must not be below mu_c ({})",
                self.mu_s, self.mu_c
            )));
        }
        if self.r <= 0.0 {
            return Err(ModelError::NonPositiveRadius(self.r));
        }
        Ok(())
    }
}

/// Fractions of the scaled twist norm due to linear (`gamma_t`) and
/// rotational (`gamma_tau`) motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionRatios {
    pub gamma_t: f64,
    pub gamma_tau: f64,
}

/// Friction wrench acting on the object: tangential force and torque about
/// the contact normal through the center of pressure.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrictionWrench {
    pub f_x: f64,
    pub f_y: f64,
    pub f_t: f64,
    pub tau: f64,
}

impl FrictionWrench {
    fn from_components(f_x: f64, f_y: f64, tau: f64) -> Self {
        Self {
            f_x,
            f_y,
            f_t: f_x.hypot(f_y),
            tau,
        }
    }

    /// Power exchanged with a twist; non-positive for a friction wrench.
    pub fn power(&self, twist: &PlanarTwist) -> f64 {
        self.f_x * twist.v_x + self.f_y * twist.v_y + self.tau * twist.omega
    }
}

/// Norm of the scaled twist `[v_x, v_y, r ω]`.
pub fn scaled_speed(twist: &PlanarTwist, r: f64) -> Result<f64, ModelError> {
    if !(r > 0.0) {
        return Err(ModelError::NonPositiveRadius(r));
    }
    twist.validate()?;
    Ok(twist.linear_speed().hypot(r * twist.omega))
}

pub fn motion_ratios(twist: &PlanarTwist, r: f64) -> Result<MotionRatios, ModelError> {
    let v = scaled_speed(twist, r)?;
    if v == 0.0 {
        return Err(ModelError::UndefinedRatios);
    }
    Ok(MotionRatios {
        gamma_t: twist.linear_speed() / v,
        gamma_tau: (r * twist.omega).abs() / v,
    })
}

/// Ellipsoid wrench with the default slip threshold [`DEFAULT_EPS_V`].
pub fn ellipsoid_wrench(
    twist: &PlanarTwist,
    f_n: f64,
    params: &ContactParams,
) -> Result<FrictionWrench, ModelError> {
    ellipsoid_wrench_with_threshold(twist, f_n, params, DEFAULT_EPS_V)
}

/// Rim-contact ellipsoid wrench. The force opposes the linear slip velocity
/// and the torque opposes the angular velocity.
pub fn ellipsoid_wrench_with_threshold(
    twist: &PlanarTwist,
    f_n: f64,
    params: &ContactParams,
    eps_v: f64,
) -> Result<FrictionWrench, ModelError> {
    if !(f_n >= 0.0 && f_n.is_finite()) {
        return Err(ModelError::InvalidNormalForce(f_n));
    }
    let speed = scaled_speed(twist, params.r)?;
    if speed <= eps_v {
        return Err(ModelError::BelowSlipThreshold { speed, eps_v });
    }
    let ratios = motion_ratios(twist, params.r)?;
    let f_t = ratios.gamma_t * f_n * params.mu_c;
    let tau_mag = ratios.gamma_tau * params.mu_c * f_n * params.r;
    let v_t = twist.linear_speed();
    let (f_x, f_y) = if v_t > 0.0 {
        (-f_t * twist.v_x / v_t, -f_t * twist.v_y / v_t)
    } else {
        (0.0, 0.0)
    };
    let tau = if twist.omega == 0.0 {
        0.0
    } else {
        -tau_mag.copysign(twist.omega)
    };
    Ok(FrictionWrench {
        f_x,
        f_y,
        f_t,
        tau,
    })
}

/// Normal pressure field over the contact patch, centered on the CoP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PressureDistribution {
    /// Uniform pressure over a disc of the given outer radius.
    UniformDisc { radius: f64 },
    /// All pressure on a circle of the given radius.
    Rim { radius: f64 },
    /// Discrete pressure points `(x, y, weight)`; weights sum to one.
    Grid { cells: Vec<[f64; 3]> },
}

impl PressureDistribution {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            Self::UniformDisc { radius } | Self::Rim { radius } => {
                if !radius.is_finite() {
                    Err(ModelError::NonFinite("distribution radius"))
                } else if *radius <= 0.0 {
                    Err(ModelError::NonPositiveRadius(*radius))
                } else {
                    Ok(())
                }
            }
            Self::Grid { cells } => validate_cells(cells),
        }
    }

    /// `∫ p ‖x‖ dA / f_n`, the rim radius with the same maximum torque.
    pub fn effective_radius(&self) -> Result<f64, ModelError> {
        self.validate()?;
        Ok(match self {
            Self::UniformDisc { radius } => 2.0 * radius / 3.0,
            Self::Rim { radius } => *radius,
            Self::Grid { cells } => cells
                .iter()
                .map(|c| c[2] * c[0].hypot(c[1]))
                .sum(),
        })
    }
}

fn validate_cells(cells: &[[f64; 3]]) -> Result<(), ModelError> {
    if cells.is_empty() {
        return Err(ModelError::InvalidDistribution("grid has no cells".into()));
    }
    if cells.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite("grid cells"));
    }
    if let Some(c) = cells.iter().find(|c| c[2] < 0.0) {
        return Err(ModelError::InvalidDistribution(format!(
            "negative weight {} at ({}, {})",
            c[2], c[0], c[1]
        )));
    }
    let total: f64 = cells.iter().map(|c| c[2]).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(ModelError::InvalidDistribution(format!(
            "weights sum to {total}, expected 1"
        )));
    }
    let extent = cells
        .iter()
        .map(|c| c[0].abs().max(c[1].abs()))
        .fold(0.0, f64::max);
    let cx: f64 = cells.iter().map(|c| c[2] * c[0]).sum();
    let cy: f64 = cells.iter().map(|c| c[2] * c[1]).sum();
    if cx.hypot(cy) > 1e-9 * extent.max(1e-12) {
        return Err(ModelError::InvalidDistribution(format!(
            "center of pressure at ({cx}, {cy}), expected the origin"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressurePoint {
    pub x: f64,
    pub y: f64,
    pub weight: f64,
}

/// A pressure distribution reduced to weighted points, ready for summation.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactPatch {
    points: Vec<PressurePoint>,
}

impl ContactPatch {
    pub fn discretize(dist: &PressureDistribution) -> Result<Self, ModelError> {
        Self::discretize_with(dist, DEFAULT_GRID_RESOLUTION)
    }

    /// Continuous discs use cell-center quadrature on a `resolution²` grid
    /// over the bounding square; rims use [`RIM_POINTS`] points.
    pub fn discretize_with(
        dist: &PressureDistribution,
        resolution: usize,
    ) -> Result<Self, ModelError> {
        dist.validate()?;
        let mut points = match dist {
            PressureDistribution::UniformDisc { radius } => {
                if resolution < MIN_GRID_RESOLUTION {
                    return Err(ModelError::InvalidDistribution(format!(
                        "grid resolution {resolution} below {MIN_GRID_RESOLUTION}"
                    )));
                }
                let h = 2.0 * radius / resolution as f64;
                let mut pts = Vec::with_capacity(resolution * resolution);
                for i in 0..resolution {
                    let x = -radius + (i as f64 + 0.5) * h;
                    for j in 0..resolution {
                        let y = -radius + (j as f64 + 0.5) * h;
                        if x * x + y * y <= radius * radius {
                            pts.push(PressurePoint { x, y, weight: 1.0 });
                        }
                    }
                }
                pts
            }
            PressureDistribution::Rim { radius } => (0..RIM_POINTS)
                .map(|k| {
                    let phi = 2.0 * PI * k as f64 / RIM_POINTS as f64;
                    PressurePoint {
                        x: radius * phi.cos(),
                        y: radius * phi.sin(),
                        weight: 1.0,
                    }
                })
                .collect(),
            PressureDistribution::Grid { cells } => cells
                .iter()
                .map(|c| PressurePoint {
                    x: c[0],
                    y: c[1],
                    weight: c[2],
                })
                .collect(),
        };
        let total: f64 = points.iter().map(|p| p.weight).sum();
        for p in &mut points {
            p.weight /= total;
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[PressurePoint] {
        &self.points
    }

    /// Weighted mean distance of the points from the CoP.
    pub fn effective_radius(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.weight * p.x.hypot(p.y))
            .sum()
    }

    /// Sums `μ_c p(x) (−v̂(x))` over the patch with `v(x) = (v_x − ω y, v_y + ω x)`.
    pub fn friction_wrench(
        &self,
        twist: &PlanarTwist,
        mu_c: f64,
        f_n: f64,
    ) -> Result<FrictionWrench, ModelError> {
        twist.validate()?;
        if !(f_n >= 0.0 && f_n.is_finite()) {
            return Err(ModelError::InvalidNormalForce(f_n));
        }
        let (mut fx, mut fy, mut tau) = (0.0, 0.0, 0.0);
        let mut moving = false;
        for p in &self.points {
            let vx = twist.v_x - twist.omega * p.y;
            let vy = twist.v_y + twist.omega * p.x;
            let speed = vx.hypot(vy);
            if speed == 0.0 {
                continue;
            }
            moving = true;
            let px = -p.weight * vx / speed;
            let py = -p.weight * vy / speed;
            fx += px;
            fy += py;
            tau += p.x * py - p.y * px;
        }
        if !moving {
            return Err(ModelError::DegenerateTwist);
        }
        let scale = mu_c * f_n;
        Ok(FrictionWrench::from_components(
            fx * scale,
            fy * scale,
            tau * scale,
        ))
    }
}

/// Numerically integrated Coulomb friction wrench over a pressure
/// distribution, at the default grid resolution.
pub fn limit_surface_numeric(
    dist: &PressureDistribution,
    twist: &PlanarTwist,
    mu_c: f64,
    f_n: f64,
) -> Result<FrictionWrench, ModelError> {
    ContactPatch::discretize(dist)?.friction_wrench(twist, mu_c, f_n)
}

pub fn effective_radius(dist: &PressureDistribution) -> Result<f64, ModelError> {
    dist.effective_radius()
}

/// One point of a normalized limit-surface sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub gamma_t: f64,
    pub gamma_tau: f64,
    pub ft_over_mufn: f64,
    pub tau_over_mufnr: f64,
}

impl SweepPoint {
    /// Relative distance between this numeric point and the ellipsoid
    /// point `(γ_t, γ_τ)` for the same twist.
    pub fn ellipsoid_relative_error(&self) -> f64 {
        let df = self.ft_over_mufn - self.gamma_t;
        let dt = self.tau_over_mufnr - self.gamma_tau;
        df.hypot(dt) / self.ft_over_mufn.hypot(self.tau_over_mufnr)
    }
}

/// Twist in direction `theta` from pure linear (0) to pure rotation (π/2),
/// with unit scaled norm for radius `r`.
pub fn sweep_twist(theta: f64, r: f64) -> PlanarTwist {
    let (sin, cos) = if theta == FRAC_PI_2 {
        (1.0, 0.0)
    } else {
        theta.sin_cos()
    };
    PlanarTwist {
        v_x: cos,
        v_y: 0.0,
        omega: sin / r,
    }
}

pub fn sweep_point(patch: &ContactPatch, r_eff: f64, theta: f64) -> Result<SweepPoint, ModelError> {
    let twist = sweep_twist(theta, r_eff);
    let ratios = motion_ratios(&twist, r_eff)?;
    let w = patch.friction_wrench(&twist, 1.0, 1.0)?;
    Ok(SweepPoint {
        gamma_t: ratios.gamma_t,
        gamma_tau: ratios.gamma_tau,
        ft_over_mufn: w.f_t,
        tau_over_mufnr: w.tau.abs() / r_eff,
    })
}

/// Normalized numeric limit surface over `n_dirs` directions spaced
/// evenly from pure linear to pure rotational slip. Normalization uses the
/// patch's own effective radius.
pub fn limit_surface_sweep(
    dist: &PressureDistribution,
    n_dirs: usize,
    resolution: usize,
) -> Result<Vec<SweepPoint>, ModelError> {
    if n_dirs < 2 {
        return Err(ModelError::TooFewDirections { min: 2, got: n_dirs });
    }
    let patch = ContactPatch::discretize_with(dist, resolution)?;
    let r_eff = patch.effective_radius();
    (0..n_dirs)
        .map(|i| {
            let theta = FRAC_PI_2 * i as f64 / (n_dirs - 1) as f64;
            sweep_point(&patch, r_eff, theta)
        })
        .collect()
}

/// Largest relative wrench error of the ellipsoid model against the
/// numeric limit surface over an `n_dirs` sweep.
pub fn ellipsoid_residual(dist: &PressureDistribution, n_dirs: usize) -> Result<f64, ModelError> {
    if n_dirs < 8 {
        return Err(ModelError::TooFewDirections { min: 8, got: n_dirs });
    }
    Ok(limit_surface_sweep(dist, n_dirs, DEFAULT_GRID_RESOLUTION)?
        .iter()
        .map(SweepPoint::ellipsoid_relative_error)
        .fold(0.0, f64::max))
}

/// Reads grid cells from CSV with header `x,y,weight`. Weights are
/// normalized to sum to one.
pub fn read_grid_csv<R: Read>(input: R) -> Result<PressureDistribution, ModelError> {
    let mut rdr = csv::Reader::from_reader(input);
    let bad = |m: String| ModelError::InvalidDistribution(m);
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| bad(format!("grid file lacks column `{name}`")))
    };
    let idx = [col("x")?, col("y")?, col("weight")?];
    let mut cells = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let mut cell = [0.0; 3];
        for (c, &i) in cell.iter_mut().zip(&idx) {
            let field = rec.get(i).unwrap_or("").trim();
            *c = field
                .parse()
                .map_err(|_| bad(format!("grid row {}: invalid value `{field}`", row + 1)))?;
        }
        cells.push(cell);
    }
    let total: f64 = cells.iter().map(|c| c[2]).sum();
    if total > 0.0 {
        for c in &mut cells {
            c[2] /= total;
        }
    }
    let dist = PressureDistribution::Grid { cells };
    dist.validate()?;
    Ok(dist)
}

pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], out: W) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["gamma_t", "gamma_tau", "ft_over_mufn", "tau_over_mufnr"])?;
    for p in points {
        wtr.write_record([
            fmt_sig9(p.gamma_t),
            fmt_sig9(p.gamma_tau),
            fmt_sig9(p.ft_over_mufn),
            fmt_sig9(p.tau_over_mufnr),
        ])?;
    }
    wtr.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn scaled_speed_examples() {
        assert_eq!(scaled_speed(&PlanarTwist::ZERO, 0.01).unwrap(), 0.0);
        let v = scaled_speed(&PlanarTwist::new(0.03, 0.0, 4.0).unwrap(), 0.01).unwrap();
        assert!(close(v, 0.05, 1e-15));
        let v = scaled_speed(&PlanarTwist::new(0.0, 0.0, 2.0).unwrap(), 0.02).unwrap();
        assert!(close(v, 0.04, 1e-15));
        assert_eq!(
            scaled_speed(&PlanarTwist::ZERO, 0.0),
            Err(ModelError::NonPositiveRadius(0.0))
        );
    }

    #[test]
    fn motion_ratio_examples() {
        let m = motion_ratios(&PlanarTwist::new(0.02, 0.0, 0.0).unwrap(), 0.01).unwrap();
        assert_eq!((m.gamma_t, m.gamma_tau), (1.0, 0.0));
        let m = motion_ratios(&PlanarTwist::new(0.0, 0.0, -3.0).unwrap(), 0.01).unwrap();
        assert_eq!((m.gamma_t, m.gamma_tau), (0.0, 1.0));
        let m = motion_ratios(&PlanarTwist::new(0.0, 0.03, 4.0).unwrap(), 0.01).unwrap();
        assert!(close(m.gamma_t, 0.6, 1e-15) && close(m.gamma_tau, 0.8, 1e-15));
        assert_eq!(
            motion_ratios(&PlanarTwist::ZERO, 0.01),
            Err(ModelError::UndefinedRatios)
        );
    }

    #[test]
    fn ellipsoid_examples() {
        let p = ContactParams::new(0.8, 0.5, 0.01).unwrap();
        let w = ellipsoid_wrench(&PlanarTwist::new(0.01, 0.0, 0.0).unwrap(), 2.0, &p).unwrap();
        assert!(close(w.f_t, 1.0, 1e-15) && w.tau == 0.0);
        assert!(close(w.f_x, -1.0, 1e-15));

        let w = ellipsoid_wrench(&PlanarTwist::new(0.0, 0.0, 1.0).unwrap(), 2.0, &p).unwrap();
        assert!(w.f_t == 0.0 && close(w.tau, -0.01, 1e-15));

        // γ_t = 0.6, γ_τ = 0.8 with r = 0.02: v_t = 0.03, rω = 0.04.
        let p = ContactParams::new(0.4, 0.4, 0.02).unwrap();
        let twist = PlanarTwist::new(0.03, 0.0, 2.0).unwrap();
        let w = ellipsoid_wrench(&twist, 5.0, &p).unwrap();
        assert!(close(w.f_t, 1.2, 1e-12));
        assert!(close(w.tau.abs(), 0.032, 1e-12));
        let membership = (w.f_t / (0.4 * 5.0)).powi(2) + (w.tau / (0.4 * 5.0 * 0.02)).powi(2);
        assert!(close(membership, 1.0, 1e-12));
    }

    #[test]
    fn ellipsoid_rejects_stiction_regime() {
        let p = ContactParams::new(0.8, 0.5, 0.01).unwrap();
        let err = ellipsoid_wrench(&PlanarTwist::new(1e-3, 0.0, 0.0).unwrap(), 2.0, &p);
        assert!(matches!(err, Err(ModelError::BelowSlipThreshold { .. })));
        let err = ellipsoid_wrench(&PlanarTwist::new(1.0, 0.0, 0.0).unwrap(), -1.0, &p);
        assert!(matches!(err, Err(ModelError::InvalidNormalForce(_))));
    }

    #[test]
    fn contact_params_invariants() {
        assert!(ContactParams::new(0.5, 0.6, 0.01).is_err());
        assert!(ContactParams::new(0.5, 0.0, 0.01).is_err());
        assert!(ContactParams::new(0.5, 0.4, -0.01).is_err());
        assert!(ContactParams::new(0.5, 0.5, 0.01).is_ok());
    }

    #[test]
    fn numeric_pure_linear_gives_full_force() {
        for dist in [
            PressureDistribution::UniformDisc { radius: 0.015 },
            PressureDistribution::Rim { radius: 0.01 },
        ] {
            let w = limit_surface_numeric(&dist, &PlanarTwist::new(0.0, 0.02, 0.0).unwrap(), 0.5, 2.0)
                .unwrap();
            assert!(close(w.f_t, 1.0, 1e-12), "{dist:?}: {w:?}");
            assert!(w.tau.abs() < 1e-14);
            assert!(close(w.f_y, -1.0, 1e-12));
        }
    }

    #[test]
    fn numeric_pure_rotation_torques() {
        let rim = limit_surface_numeric(
            &PressureDistribution::Rim { radius: 0.01 },
            &PlanarTwist::new(0.0, 0.0, 1.0).unwrap(),
            0.5,
            2.0,
        )
        .unwrap();
        assert!(close(rim.tau, -0.01, 1e-15));
        assert!(rim.f_t < 1e-14);

        // Closed form: τ = (2/3) μ f_n R. Cell-center quadrature error of
        // the 200² grid is well below 1e-3 relative.
        let patch = ContactPatch::discretize_with(
            &PressureDistribution::UniformDisc { radius: 0.015 },
            200,
        )
        .unwrap();
        let w = patch
            .friction_wrench(&PlanarTwist::new(0.0, 0.0, 2.0).unwrap(), 0.5, 2.0)
            .unwrap();
        let expected = 2.0 / 3.0 * 0.5 * 2.0 * 0.015;
        assert!(((w.tau.abs() - expected) / expected).abs() < 1e-3);
    }

    #[test]
    fn effective_radius_examples() {
        let er = effective_radius(&PressureDistribution::UniformDisc { radius: 0.015 }).unwrap();
        assert!(close(er, 0.010, 1e-12));
        assert_eq!(
            effective_radius(&PressureDistribution::Rim { radius: 0.008 }).unwrap(),
            0.008
        );
        let single = PressureDistribution::Grid {
            cells: vec![[0.005, 0.0, 0.5], [-0.005, 0.0, 0.5]],
        };
        assert!(close(effective_radius(&single).unwrap(), 0.005, 1e-15));
    }

    #[test]
    fn grid_validation() {
        let bad_sum = PressureDistribution::Grid {
            cells: vec![[0.01, 0.0, 0.4], [-0.01, 0.0, 0.4]],
        };
        assert!(matches!(bad_sum.validate(), Err(ModelError::InvalidDistribution(_))));
        let off_center = PressureDistribution::Grid {
            cells: vec![[0.01, 0.0, 1.0]],
        };
        assert!(off_center.validate().is_err());
        let negative = PressureDistribution::Grid {
            cells: vec![[0.01, 0.0, 1.5], [-0.01, 0.0, -0.5]],
        };
        assert!(negative.validate().is_err());
        assert!(PressureDistribution::Grid { cells: vec![] }.validate().is_err());
    }

    #[test]
    fn coarse_grids_rejected() {
        let d = PressureDistribution::UniformDisc { radius: 0.01 };
        assert!(ContactPatch::discretize_with(&d, 16).is_err());
    }

    #[test]
    fn degenerate_twist() {
        let point = PressureDistribution::Grid {
            cells: vec![[0.0, 0.0, 1.0]],
        };
        let err = limit_surface_numeric(&point, &PlanarTwist::new(0.0, 0.0, 1.0).unwrap(), 0.5, 1.0);
        assert_eq!(err, Err(ModelError::DegenerateTwist));
        let err = limit_surface_numeric(
            &PressureDistribution::Rim { radius: 0.01 },
            &PlanarTwist::ZERO,
            0.5,
            1.0,
        );
        assert_eq!(err, Err(ModelError::DegenerateTwist));
    }

    #[test]
    fn residual_zero_on_pure_linear() {
        for dist in [
            PressureDistribution::UniformDisc { radius: 0.015 },
            PressureDistribution::Rim { radius: 0.01 },
        ] {
            let patch = ContactPatch::discretize(&dist).unwrap();
            let p = sweep_point(&patch, patch.effective_radius(), 0.0).unwrap();
            assert!(p.ellipsoid_relative_error() < 1e-12);
        }
    }

    #[test]
    fn residuals_match_sweep_oracle() {
        // independent numpy sweep, 65 directions, 256 rim points, 64x64 disc grid
        let rim = ellipsoid_residual(&PressureDistribution::Rim { radius: 0.01 }, 65).unwrap();
        let disc =
            ellipsoid_residual(&PressureDistribution::UniformDisc { radius: 0.015 }, 65).unwrap();
        assert!((rim - 0.215_291_209).abs() < 1e-6, "rim residual {rim}");
        assert!((disc - 0.158_934_108).abs() < 1e-6, "disc residual {disc}");
        assert!(ellipsoid_residual(&PressureDistribution::Rim { radius: 0.01 }, 4).is_err());
    }

    #[test]
    fn monotone_coupling_along_sweep() {
        for dist in [
            PressureDistribution::UniformDisc { radius: 0.015 },
            PressureDistribution::Rim { radius: 0.01 },
        ] {
            let sweep = limit_surface_sweep(&dist, 65, DEFAULT_GRID_RESOLUTION).unwrap();
            for pair in sweep.windows(2) {
                assert!(pair[1].ft_over_mufn <= pair[0].ft_over_mufn + 1e-12);
                assert!(pair[1].tau_over_mufnr >= pair[0].tau_over_mufnr - 1e-12);
            }
        }
    }

    #[test]
    fn grid_csv_is_normalized() {
        let text = "x,y,weight\n0.005,0,2\n-0.005,0,2\n";
        let dist = read_grid_csv(text.as_bytes()).unwrap();
        assert_eq!(
            dist,
            PressureDistribution::Grid {
                cells: vec![[0.005, 0.0, 0.5], [-0.005, 0.0, 0.5]]
            }
        );
        assert!((effective_radius(&dist).unwrap() - 0.005).abs() < 1e-15);
        assert!(read_grid_csv("x,y\n0,0\n".as_bytes()).is_err());
        assert!(read_grid_csv("x,y,weight\n0.01,0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn sweep_csv_header() {
        let sweep = limit_surface_sweep(&PressureDistribution::Rim { radius: 0.01 }, 3, 64).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&sweep, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("gamma_t,gamma_tau,ft_over_mufn,tau_over_mufnr")
        );
        let rows: Vec<Vec<f64>> = lines
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 3);
        for (row, want) in [(&rows[0], [1.0, 0.0, 1.0, 0.0]), (&rows[2], [0.0, 1.0, 0.0, 1.0])] {
            for (a, b) in row.iter().zip(want) {
                assert!((a - b).abs() < 1e-12, "{row:?}");
            }
        }
    }
}
