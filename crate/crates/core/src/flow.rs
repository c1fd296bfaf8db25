//! Integral curves of the rescaled Hamilton vector field
//!
//! ```text
//! d omega/dt = 2 v,   d tau/dt = -2 |v|^2,   d v/dt = 2 tau v - 2 |v|^2 omega
//! ```
//!
//! on scattering covectors over the unit sphere. The field preserves
//! `g = tau^2 + |v|^2`; on the level set `g = E` with `k = sqrt(E)` the curves
//! are explicit: `tau(t) = -k tanh(2k(t - c))`, `|v(t)| = k sech(2k(t - c))`,
//! and `omega` runs along a great circle with arc-length rate `2|v|`. The
//! total arc length of a complete curve is `pi`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasespace::{ChartPoint, FaceChart, ScCovector};

/// Below this gap between `sqrt(lambda)` and `|tau|` a state is treated as radial.
pub const STAGNATION_GAP: f64 = 1e-12;
/// Admissible `|g - lambda|` of a starting state.
pub const SHELL_TOL: f64 = 1e-8;
/// Admissible energy drift of the RK4 integrator.
pub const RK4_DRIFT_TOL: f64 = 1e-5;

/// Tangent vector of the Hamilton field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScTangent {
    pub d_omega: DVector<f64>,
    pub d_tau: f64,
    pub d_v: DVector<f64>,
}

pub fn hamilton_field(xi: &ScCovector) -> ScTangent {
    let v2 = xi.v.norm_squared();
    ScTangent {
        d_omega: &xi.v * 2.0,
        d_tau: -2.0 * v2,
        d_v: &xi.v * (2.0 * xi.tau) - &xi.omega * (2.0 * v2),
    }
}

/// The model field `2 tau (mu d_mu + nu d_nu) - 2 (|mu|^2 + |nu|^2) d_tau
/// + 2 mu d_y + 2 nu d_z` in the chart coordinates of `pt`. It is the Hamilton
/// field of the flat metric and agrees with the chart field at `y = z = 0`.
pub fn model_field_at(pt: &ChartPoint) -> ChartPoint {
    ChartPoint {
        y: &pt.mu * 2.0,
        z: &pt.nu * 2.0,
        tau: -2.0 * (pt.mu.norm_squared() + pt.nu.norm_squared()),
        mu: &pt.mu * (2.0 * pt.tau),
        nu: &pt.nu * (2.0 * pt.tau),
    }
}

/// [`model_field_at`] evaluated at the chart coordinates of `xi`.
pub fn model_field_wflat(xi: &ScCovector, chart: &FaceChart) -> Result<ChartPoint> {
    Ok(model_field_at(&chart.coords(xi)?))
}

/// `tau(t)` on the energy shell `g = lambda` with `tau(0) = tau0`.
pub fn tau_closed_form(tau0: f64, lambda: f64, t: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidEnergy(lambda));
    }
    let k = lambda.sqrt();
    if tau0 * tau0 > lambda + SHELL_TOL {
        return Err(Error::OffShell { found: tau0 * tau0, lambda });
    }
    if k - tau0.abs() < STAGNATION_GAP {
        return Ok(tau0);
    }
    let x0 = -(tau0 / k).atanh();
    Ok(-k * (x0 + 2.0 * k * t).tanh())
}

/// Position of `omega` along its great circle, as a function of `x = 2k(t - c)`.
fn arc_angle(x: f64) -> f64 {
    (1.0 / x.cosh()).atan2(-x.tanh())
}

/// Exact flow of `xi` for time `t`, at whatever energy `xi` has. Returns the
/// new state and the arc length travelled (signed).
pub fn flow_analytic(xi: &ScCovector, t: f64) -> (ScCovector, f64) {
    let k = xi.g().sqrt();
    let vn = xi.v.norm();
    if k == 0.0 || k - xi.tau.abs() < STAGNATION_GAP || vn == 0.0 {
        return (xi.clone(), 0.0);
    }
    let u = &xi.v / vn;
    let x0 = -(xi.tau / k).clamp(-1.0, 1.0).atanh();
    let x = x0 + 2.0 * k * t;
    let ds = arc_angle(x) - arc_angle(x0);
    let (sn, cs) = ds.sin_cos();
    let omega = &xi.omega * cs + &u * sn;
    let dir = &u * cs - &xi.omega * sn;
    let speed = k / x.cosh();
    (ScCovector::projected(omega, -k * x.tanh(), dir * speed), ds)
}

/// Endpoints `omega(-inf)` and `omega(+inf)` of the complete curve through
/// `xi`. They are antipodal whenever `xi` is not radial.
pub fn free_trajectory_limits(xi: &ScCovector) -> (DVector<f64>, DVector<f64>) {
    let k = xi.g().sqrt();
    let vn = xi.v.norm();
    if k == 0.0 || k - xi.tau.abs() < STAGNATION_GAP || vn == 0.0 {
        return (xi.omega.clone(), xi.omega.clone());
    }
    let u = &xi.v / vn;
    let s0 = arc_angle(-(xi.tau / k).clamp(-1.0, 1.0).atanh());
    let at = |ds: f64| &xi.omega * ds.cos() + &u * ds.sin();
    (at(-s0), at(std::f64::consts::PI - s0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Integrator {
    /// Closed-form solution.
    Analytic,
    /// Classical fourth-order Runge-Kutta with a fixed step.
    Rk4 { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub lambda: f64,
    pub integrator: Integrator,
    /// Signed duration; negative values integrate backwards.
    pub max_time: f64,
    /// Output spacing for the analytic integrator.
    pub sample_dt: f64,
}

impl FlowConfig {
    pub fn analytic(lambda: f64, max_time: f64) -> Self {
        Self { lambda, integrator: Integrator::Analytic, max_time, sample_dt: 1e-2 }
    }

    pub fn rk4(lambda: f64, max_time: f64, step: f64) -> Self {
        Self { lambda, integrator: Integrator::Rk4 { step }, max_time, sample_dt: step }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSample {
    pub t: f64,
    /// Signed arc length travelled by `omega` since the start, negative when
    /// integrating backwards.
    pub s: f64,
    pub xi: ScCovector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    MaxTime,
    Predicate,
    /// The state is (or became) a radial point.
    Radial,
}

#[derive(Debug, Clone)]
pub struct BicharSegment {
    pub lambda: f64,
    pub samples: Vec<FlowSample>,
    pub stop: StopReason,
}

fn check_shell(xi: &ScCovector, lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidEnergy(lambda));
    }
    let g = xi.g();
    if (g - lambda).abs() > SHELL_TOL {
        return Err(Error::OffShell { found: g, lambda });
    }
    Ok(())
}

fn is_radial(xi: &ScCovector, lambda: f64) -> bool {
    lambda.sqrt() - xi.tau.abs() < STAGNATION_GAP
}

/// Integrates from `start` (which must satisfy `g = lambda`) until `max_time`,
/// until `stop` returns true, or until the state reaches a radial point.
pub fn integrate_bichar(
    start: &ScCovector,
    config: &FlowConfig,
    stop: Option<&dyn Fn(&FlowSample) -> bool>,
) -> Result<BicharSegment> {
    check_shell(start, config.lambda)?;
    let dir = config.max_time.signum();
    let duration = config.max_time.abs();
    let mut samples = vec![FlowSample { t: 0.0, s: 0.0, xi: start.clone() }];
    let finish = |samples: Vec<FlowSample>, stop| Ok(BicharSegment { lambda: config.lambda, samples, stop });

    if is_radial(start, config.lambda) {
        let dt = match config.integrator {
            Integrator::Analytic => config.sample_dt,
            Integrator::Rk4 { step } => step,
        };
        let n = (duration / dt).ceil() as usize;
        for i in 1..=n {
            let t = dir * (i as f64 * dt).min(duration);
            samples.push(FlowSample { t, s: 0.0, xi: start.clone() });
        }
        return finish(samples, StopReason::Radial);
    }

    match config.integrator {
        Integrator::Analytic => {
            if !(config.sample_dt > 0.0) {
                return Err(Error::Invalid("sample_dt must be positive".into()));
            }
            let n = (duration / config.sample_dt).ceil() as usize;
            for i in 1..=n {
                let t = dir * (i as f64 * config.sample_dt).min(duration);
                let (xi, ds) = flow_analytic(start, t);
                let sample = FlowSample { t, s: ds, xi };
                let halt = stop.is_some_and(|f| f(&sample));
                samples.push(sample);
                if halt {
                    return finish(samples, StopReason::Predicate);
                }
            }
            finish(samples, StopReason::MaxTime)
        }
        Integrator::Rk4 { step } => {
            if !(step > 0.0) {
                return Err(Error::Invalid("step must be positive".into()));
            }
            let n = (duration / step).ceil() as usize;
            let mut cur = start.clone();
            let mut s = 0.0;
            let mut t = 0.0;
            for i in 1..=n {
                let h = dir * ((i as f64 * step).min(duration) - ((i - 1) as f64 * step));
                let next = rk4_step(&cur, h);
                if !next.tau.is_finite()
                    || next.omega.iter().chain(next.v.iter()).any(|x| !x.is_finite())
                    || (next.g() - config.lambda).abs() > RK4_DRIFT_TOL
                {
                    return Err(Error::IntegrationDiverged { t });
                }
                let chord = (&next.omega - &cur.omega).norm();
                s += dir * 2.0 * (0.5 * chord).min(1.0).asin();
                t += h;
                cur = next;
                let sample = FlowSample { t, s, xi: cur.clone() };
                let halt = stop.is_some_and(|f| f(&sample));
                samples.push(sample);
                if halt {
                    return finish(samples, StopReason::Predicate);
                }
                if is_radial(&cur, config.lambda) {
                    return finish(samples, StopReason::Radial);
                }
            }
            finish(samples, StopReason::MaxTime)
        }
    }
}

fn rk4_step(xi: &ScCovector, h: f64) -> ScCovector {
    let add = |x: &ScCovector, d: &ScTangent, s: f64| ScCovector {
        omega: &x.omega + &d.d_omega * s,
        tau: x.tau + d.d_tau * s,
        v: &x.v + &d.d_v * s,
    };
    let k1 = hamilton_field(xi);
    let k2 = hamilton_field(&add(xi, &k1, 0.5 * h));
    let k3 = hamilton_field(&add(xi, &k2, 0.5 * h));
    let k4 = hamilton_field(&add(xi, &k3, h));
    let w = h / 6.0;
    let omega = &xi.omega + (&k1.d_omega + &k2.d_omega * 2.0 + &k3.d_omega * 2.0 + &k4.d_omega) * w;
    let tau = xi.tau + (k1.d_tau + 2.0 * k2.d_tau + 2.0 * k3.d_tau + k4.d_tau) * w;
    let v = &xi.v + (&k1.d_v + &k2.d_v * 2.0 + &k3.d_v * 2.0 + &k4.d_v) * w;
    ScCovector::projected(omega, tau, v)
}

/// A sample of a bicharacteristic in its geodesic parametrization.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicSample {
    pub s: f64,
    pub position: DVector<f64>,
    /// Unit tangent of the geodesic at `position`.
    pub direction: DVector<f64>,
}

/// A bicharacteristic segment written as a unit-speed geodesic `s -> gamma(s)`
/// with `tau = sqrt(lambda) cos(s - s1)`, `|v| = sqrt(lambda) sin(s - s1)` and
/// `t = t_center + artanh(-cos(s - s1)) / (2 sqrt(lambda))`.
#[derive(Debug, Clone)]
pub struct GeodesicRecord {
    pub lambda: f64,
    pub s1: f64,
    pub t_center: f64,
    pub samples: Vec<GeodesicSample>,
}

impl GeodesicRecord {
    pub fn tau(&self, s: f64) -> f64 {
        self.lambda.sqrt() * (s - self.s1).cos()
    }

    pub fn speed(&self, s: f64) -> f64 {
        self.lambda.sqrt() * (s - self.s1).sin()
    }

    pub fn time(&self, s: f64) -> f64 {
        self.t_center + (-(s - self.s1).cos()).atanh() / (2.0 * self.lambda.sqrt())
    }

    /// Reconstructs `(t, s, omega, tau, v)` from the geodesic data alone.
    pub fn rebuild(&self) -> Vec<FlowSample> {
        self.samples
            .iter()
            .map(|g| FlowSample {
                t: self.time(g.s),
                s: g.s,
                xi: ScCovector {
                    omega: g.position.clone(),
                    tau: self.tau(g.s),
                    v: &g.direction * self.speed(g.s),
                },
            })
            .collect()
    }

    /// Largest deviation from `|gamma| = 1`, `|gamma'| = 1`, `gamma . gamma' = 0`.
    pub fn unit_speed_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(|g| {
                let a = (g.position.norm() - 1.0).abs();
                let b = (g.direction.norm() - 1.0).abs();
                let c = g.position.dot(&g.direction).abs();
                a.max(b).max(c)
            })
            .fold(0.0, f64::max)
    }
}

/// Rewrites a segment in terms of its arc-length parameter. Segments that
/// touch a radial point have no well-defined direction and are rejected.
pub fn reparametrize(segment: &BicharSegment) -> Result<GeodesicRecord> {
    let lambda = segment.lambda;
    let k = lambda.sqrt();
    let first = segment.samples.first().ok_or_else(|| Error::Invalid("empty segment".into()))?;
    let mut samples = Vec::with_capacity(segment.samples.len());
    for smp in &segment.samples {
        let vn = smp.xi.v.norm();
        if vn < 1e-9 * k || is_radial(&smp.xi, lambda) {
            return Err(Error::RadialDegeneracy(format!("segment touches a radial point at t = {}", smp.t)));
        }
        samples.push(GeodesicSample { s: smp.s, position: smp.xi.omega.clone(), direction: &smp.xi.v / vn });
    }
    let s1 = first.s - first.xi.v.norm().atan2(first.xi.tau);
    let t_center = first.t - (-first.xi.tau / k).atanh() / (2.0 * k);
    Ok(GeodesicRecord { lambda, s1, t_center, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn start() -> ScCovector {
        ScCovector::new(DVector::from_vec(vec![1.0, 0.0, 0.0]), 0.0, DVector::from_vec(vec![0.0, 1.0, 0.0])).unwrap()
    }

    #[test]
    fn closed_form_tau() {
        for &t in &[0.0, 0.1, 0.5, 2.0] {
            let tau = tau_closed_form(0.0, 1.0, t).unwrap();
            assert!((tau + (2.0 * t).tanh()).abs() < 1e-15);
        }
        assert!(matches!(tau_closed_form(2.0, 1.0, 0.1), Err(Error::OffShell { .. })));
        assert!(matches!(tau_closed_form(0.0, -1.0, 0.1), Err(Error::InvalidEnergy(_))));
    }

    #[test]
    fn analytic_matches_rk4() {
        let xi = start();
        let a = integrate_bichar(&xi, &FlowConfig::analytic(1.0, 1.0), None).unwrap();
        let r = integrate_bichar(&xi, &FlowConfig::rk4(1.0, 1.0, 1e-3), None).unwrap();
        let ea = &a.samples.last().unwrap().xi;
        let er = &r.samples.last().unwrap().xi;
        assert!((ea.tau - er.tau).abs() < 1e-10);
        assert!((&ea.omega - &er.omega).norm() < 1e-10);
        assert!((a.samples.last().unwrap().s - r.samples.last().unwrap().s).abs() < 1e-10);
    }

    #[test]
    fn radial_start_is_constant() {
        let xi = ScCovector::new(DVector::from_vec(vec![0.0, 0.0, 1.0]), -1.0, DVector::zeros(3)).unwrap();
        let seg = integrate_bichar(&xi, &FlowConfig::rk4(1.0, 50.0, 0.1), None).unwrap();
        assert_eq!(seg.stop, StopReason::Radial);
        assert!(seg.samples.iter().all(|s| s.xi == xi));
        assert!(reparametrize(&seg).is_err());
    }

    #[test]
    fn limits_are_antipodal() {
        let xi = ScCovector::projected(DVector::from_vec(vec![0.3, 0.4, 0.5]), 0.2, DVector::from_vec(vec![0.1, -0.3, 0.5]));
        let (a, b) = free_trajectory_limits(&xi);
        assert!((a + b).norm() < 1e-14);
    }
}
