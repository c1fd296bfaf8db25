//! One-sided regularity of a generalized broken bicharacteristic at a break,
//! read off in the face chart centred at the break point.

use super::{bichar_t_of_s, BrokenPath};
use crate::arrangement::SubspaceLattice;
use crate::error::{Error, Result};
use crate::flow::FlowSample;
use crate::phasespace::{ChartPoint, FaceChart};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderSpec {
    pub lambda: f64,
    /// Index of the break event to examine.
    pub event: usize,
    pub h_max: f64,
    pub h_min: f64,
    /// Samples per side, geometrically spaced in `[h_min, h_max]`.
    pub samples: usize,
    /// Residuals at or below this are excluded from the fits.
    pub noise_floor: f64,
}

impl HolderSpec {
    pub fn new(lambda: f64, event: usize) -> Self {
        Self { lambda, event, h_max: 1e-1, h_min: 1e-4, samples: 16, noise_floor: 1e-13 }
    }
}

/// Fitted exponents and one-sided derivatives on one side of the break.
/// Exponents are `INFINITY` when fewer than three residuals exceed the noise floor.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderSide {
    /// Exponent of `|eta - W0eta (t - t0)|`.
    pub eta_exponent: f64,
    /// Exponents of `|y_j - 2 mu0 theta_j |t - t0||`.
    pub y_exponents: Vec<f64>,
    /// Exponent of `|r - 2 mu0 |t - t0||` with `r = |y|`.
    pub r_exponent: f64,
    pub tau_rate: f64,
    pub eta_rate: f64,
    pub z_rates: Vec<f64>,
    pub nu_rates: Vec<f64>,
    /// One-sided limit of `y / |y|`.
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderReport {
    pub t0: f64,
    pub tau0: f64,
    /// `lambda - tau0^2 - |nu0|^2`.
    pub normal_energy: f64,
    /// `2 (tau0^2 - lambda)`.
    pub expected_tau_rate: f64,
    /// `2 (lambda - tau0^2 - |nu0|^2)`.
    pub expected_eta_rate: f64,
    pub left: HolderSide,
    pub right: HolderSide,
}

impl HolderReport {
    pub fn min_exponent(&self) -> f64 {
        [&self.left, &self.right]
            .iter()
            .flat_map(|s| s.y_exponents.iter().copied().chain([s.eta_exponent, s.r_exponent]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Examines the break `spec.event` of `path`, viewed as a bicharacteristic
/// at energy `spec.lambda` with `t = 0` at arc length `pi/2`.
pub fn holder_check(lattice: &SubspaceLattice, path: &BrokenPath, spec: &HolderSpec) -> Result<HolderReport> {
    let ev = path
        .events
        .get(spec.event)
        .ok_or_else(|| Error::Invalid(format!("path has no event {}", spec.event)))?;
    if !(ev.s > 0.0 && ev.s < std::f64::consts::PI) {
        return Err(Error::InsufficientResolution("break lies outside (0, pi)".into()));
    }
    let t0 = bichar_t_of_s(ev.s, spec.lambda);
    let mut room = f64::INFINITY;
    for (i, other) in path.events.iter().enumerate() {
        if i != spec.event {
            room = room.min((bichar_t_of_s(other.s, spec.lambda) - t0).abs());
        }
    }
    let h_max = spec.h_max.min(0.5 * room);
    if h_max < 10.0 * spec.h_min {
        return Err(Error::InsufficientResolution(format!("neighbouring breaks leave only {room:e} of time")));
    }
    let hs = geometric(h_max, spec.h_min, spec.samples);
    let left_t: Vec<f64> = hs.iter().map(|h| t0 - h).collect();
    let right_t: Vec<f64> = hs.iter().map(|h| t0 + h).collect();
    let left = path.bichar_samples(spec.lambda, &left_t);
    let right = path.bichar_samples(spec.lambda, &right_t);
    debug_assert!(left.iter().all(|s| s.s < ev.s) && right.iter().all(|s| s.s > ev.s));
    let chart = FaceChart::new(lattice, ev.face, &ev.point)?;
    holder_check_samples(&chart, spec.lambda, t0, &left, &right, spec.noise_floor)
}

fn geometric(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| hi * (lo / hi).powf(i as f64 / (n - 1) as f64)).collect()
}

/// The same analysis from raw samples on each side of `t0`.
pub fn holder_check_samples(
    chart: &FaceChart,
    lambda: f64,
    t0: f64,
    left: &[FlowSample],
    right: &[FlowSample],
    noise_floor: f64,
) -> Result<HolderReport> {
    if left.len() < 3 || right.len() < 3 {
        return Err(Error::InsufficientResolution("need at least three samples per side".into()));
    }
    let lc: Vec<(f64, ChartPoint)> = left.iter().map(|s| Ok((s.t, chart.coords(&s.xi)?))).collect::<Result<_>>()?;
    let rc: Vec<(f64, ChartPoint)> = right.iter().map(|s| Ok((s.t, chart.coords(&s.xi)?))).collect::<Result<_>>()?;
    let near = |pts: &[(f64, ChartPoint)]| -> [(f64, ChartPoint); 3] {
        let mut v: Vec<&(f64, ChartPoint)> = pts.iter().collect();
        v.sort_by(|a, b| (a.0 - t0).abs().total_cmp(&(b.0 - t0).abs()));
        [v[0].clone(), v[1].clone(), v[2].clone()]
    };
    let (nl, nr) = (near(&lc), near(&rc));
    let tau0 = 0.5 * (extrapolate(&nl, t0, |p| p.tau).0 + extrapolate(&nr, t0, |p| p.tau).0);
    let m = chart.tangent_dim();
    let nu0: Vec<f64> = (0..m).map(|j| 0.5 * (extrapolate(&nl, t0, |p| p.nu[j]).0 + extrapolate(&nr, t0, |p| p.nu[j]).0)).collect();
    let normal_energy = lambda - tau0 * tau0 - nu0.iter().map(|x| x * x).sum::<f64>();
    let mu0 = normal_energy.max(0.0).sqrt();
    let side = |pts: &[(f64, ChartPoint)], nearest: &[(f64, ChartPoint); 3]| -> HolderSide {
        let k = chart.codim();
        let theta: Vec<f64> = (0..k).map(|j| extrapolate(nearest, t0, |p| p.y[j] / p.y.norm()).0).collect();
        let dt: Vec<f64> = pts.iter().map(|(t, _)| (t - t0).abs()).collect();
        let eta_res: Vec<f64> = pts.iter().map(|(t, p)| (p.eta() - 2.0 * normal_energy * (t - t0)).abs()).collect();
        let r_res: Vec<f64> = pts.iter().zip(&dt).map(|((_, p), h)| (p.y.norm() - 2.0 * mu0 * h).abs()).collect();
        let y_exponents = (0..k)
            .map(|j| {
                let res: Vec<f64> = pts.iter().zip(&dt).map(|((_, p), h)| (p.y[j] - 2.0 * mu0 * theta[j] * h).abs()).collect();
                fit_exponent(&dt, &res, noise_floor)
            })
            .collect();
        HolderSide {
            eta_exponent: fit_exponent(&dt, &eta_res, noise_floor),
            y_exponents,
            r_exponent: fit_exponent(&dt, &r_res, noise_floor),
            tau_rate: extrapolate(nearest, t0, |p| p.tau).1,
            eta_rate: extrapolate(nearest, t0, |p| p.eta()).1,
            z_rates: (0..m).map(|j| extrapolate(nearest, t0, |p| p.z[j]).1).collect(),
            nu_rates: (0..m).map(|j| extrapolate(nearest, t0, |p| p.nu[j]).1).collect(),
            theta,
        }
    };
    Ok(HolderReport {
        t0,
        tau0,
        normal_energy,
        expected_tau_rate: 2.0 * (tau0 * tau0 - lambda),
        expected_eta_rate: 2.0 * normal_energy,
        left: side(&lc, &nl),
        right: side(&rc, &nr),
    })
}

/// Value and derivative at `t0` of the quadratic through three samples.
fn extrapolate(pts: &[(f64, ChartPoint); 3], t0: f64, f: impl Fn(&ChartPoint) -> f64) -> (f64, f64) {
    let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().map(|(t, p)| (t - t0, f(p))).unzip();
    let l = |i: usize, j: usize, k: usize| y[i] / ((x[i] - x[j]) * (x[i] - x[k]));
    let (a0, a1, a2) = (l(0, 1, 2), l(1, 0, 2), l(2, 0, 1));
    let value = a0 * x[1] * x[2] + a1 * x[0] * x[2] + a2 * x[0] * x[1];
    let slope = -(a0 * (x[1] + x[2]) + a1 * (x[0] + x[2]) + a2 * (x[0] + x[1]));
    (value, slope)
}

/// Least-squares slope of `log res` against `log h`.
fn fit_exponent(h: &[f64], res: &[f64], floor: f64) -> f64 {
    let pts: Vec<(f64, f64)> = h.iter().zip(res).filter(|(_, &r)| r > floor).map(|(&h, &r)| (h.ln(), r.ln())).collect();
    if pts.len() < 3 {
        return f64::INFINITY;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
