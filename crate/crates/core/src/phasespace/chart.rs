//! Geodesic normal coordinates on the sphere centred at a point `p` of a face
//! `C_a`. Coordinates on the sphere are split as `(y, z)` with `y` along an
//! orthonormal basis of `X_a^perp` and `z` along an orthonormal basis of
//! `X_a` intersected with `p^perp`; the dual momenta are `(mu, nu)`. Every face
//! through `p` is a linear subspace in these coordinates.

use nalgebra::{DMatrix, DVector};

use super::ScCovector;
use crate::ad::Real;
use crate::arrangement::{MemberId, SubspaceLattice};
use crate::error::{Error, Result};
use crate::linalg;

/// Taylor coefficients of `r^2 / sin^2 r` in powers of `r^2`.
const C_SERIES: [f64; 11] = [
    1.0,
    1.0 / 3.0,
    1.0 / 15.0,
    2.0 / 189.0,
    1.0 / 675.0,
    2.0 / 10395.0,
    1382.0 / 58046625.0,
    4.0 / 1403325.0,
    3617.0 / 10854718875.0,
    87734.0 / 2292899734125.0,
    349222.0 / 80596287646875.0,
];

const SERIES_RADIUS: f64 = 0.1;

/// Returns `(c, c'/r, f, f'/r)` where `c = r^2 / sin^2 r` and
/// `f = (1 - c) / r^2`, so that the dual metric in normal coordinates is
/// `c |kappa|^2 + f (kappa . w)^2`.
pub fn radial_coefficients<D: Real>(r: D) -> [D; 4] {
    let r2 = r * r;
    if r.val() < SERIES_RADIUS {
        let horner = |coef: &dyn Fn(usize) -> f64, lo: usize| {
            let mut acc = D::zero();
            for k in (lo..C_SERIES.len()).rev() {
                acc = acc * r2 + D::cst(coef(k));
            }
            acc
        };
        let c = horner(&|k| C_SERIES[k], 0);
        let dc = horner(&|k| if k + 1 < C_SERIES.len() { 2.0 * (k + 1) as f64 * C_SERIES[k + 1] } else { 0.0 }, 0);
        let f = horner(&|k| if k + 1 < C_SERIES.len() { -C_SERIES[k + 1] } else { 0.0 }, 0);
        let df = horner(&|k| if k + 2 < C_SERIES.len() { -(2.0 * (k + 1) as f64) * C_SERIES[k + 2] } else { 0.0 }, 0);
        return [c, dc, f, df];
    }
    let s = r.sin();
    let co = r.cos();
    let s2 = s * s;
    let s3 = s2 * s;
    let c = r2 / s2;
    let dc = (s - r * co) * 2.0 / s3;
    let f = r2.recip() - s2.recip();
    let df = -(r2 * r2).recip() * 2.0 + co * 2.0 / (r * s3);
    [c, dc, f, df]
}

/// `h = c |kappa|^2 + f (kappa . w)^2` in coefficient coordinates.
pub(crate) fn dual_metric<D: Real>(w: &[D], kappa: &[D]) -> D {
    let r = crate::ad::norm2(w).sqrt();
    let [c, _, f, _] = radial_coefficients(r);
    let a = crate::ad::dot(kappa, w);
    c * crate::ad::norm2(kappa) + f * a * a
}

/// Hamilton vector field of `h` on `(w, kappa)` (without the `tau` terms).
/// Returns `(dh/dkappa, dh/dw)`.
pub(crate) fn dual_metric_gradients<D: Real>(w: &[D], kappa: &[D]) -> (Vec<D>, Vec<D>) {
    let r = crate::ad::norm2(w).sqrt();
    let [c, dc, f, df] = radial_coefficients(r);
    let a = crate::ad::dot(kappa, w);
    let k2 = crate::ad::norm2(kappa);
    let dk: Vec<D> = kappa.iter().zip(w).map(|(&k, &x)| (c * k + f * a * x) * 2.0).collect();
    let dw: Vec<D> = kappa
        .iter()
        .zip(w)
        .map(|(&k, &x)| dc * k2 * x + df * a * a * x + f * a * k * 2.0)
        .collect();
    (dk, dw)
}

/// Coordinates `(y, z, tau, mu, nu)` of a scattering covector in a face chart.
/// The same type carries tangent vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    pub tau: f64,
    pub mu: DVector<f64>,
    pub nu: DVector<f64>,
}

impl ChartPoint {
    pub fn zeros(k: usize, m: usize) -> Self {
        Self { y: DVector::zeros(k), z: DVector::zeros(m), tau: 0.0, mu: DVector::zeros(k), nu: DVector::zeros(m) }
    }

    pub fn codim(&self) -> usize {
        self.y.len()
    }

    pub fn tangent_dim(&self) -> usize {
        self.z.len()
    }

    /// Flattened as `(y, z, tau, mu, nu)`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * (self.y.len() + self.z.len()) + 1);
        out.extend(self.y.iter());
        out.extend(self.z.iter());
        out.push(self.tau);
        out.extend(self.mu.iter());
        out.extend(self.nu.iter());
        out
    }

    pub fn from_slice(k: usize, m: usize, x: &[f64]) -> Self {
        assert_eq!(x.len(), 2 * (k + m) + 1);
        Self {
            y: DVector::from_column_slice(&x[..k]),
            z: DVector::from_column_slice(&x[k..k + m]),
            tau: x[k + m],
            mu: DVector::from_column_slice(&x[k + m + 1..2 * k + m + 1]),
            nu: DVector::from_column_slice(&x[2 * k + m + 1..]),
        }
    }

    /// `self + s * dir`.
    pub fn offset(&self, s: f64, dir: &ChartPoint) -> ChartPoint {
        ChartPoint {
            y: &self.y + &dir.y * s,
            z: &self.z + &dir.z * s,
            tau: self.tau + s * dir.tau,
            mu: &self.mu + &dir.mu * s,
            nu: &self.nu + &dir.nu * s,
        }
    }

    pub fn norm(&self) -> f64 {
        self.to_vec().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `eta = y . mu`.
    pub fn eta(&self) -> f64 {
        self.y.dot(&self.mu)
    }

    pub(crate) fn w(&self) -> Vec<f64> {
        self.y.iter().chain(self.z.iter()).copied().collect()
    }

    pub(crate) fn kappa(&self) -> Vec<f64> {
        self.mu.iter().chain(self.nu.iter()).copied().collect()
    }
}

#[derive(Debug, Clone)]
pub struct FaceChart {
    face: MemberId,
    p: DVector<f64>,
    normal: DMatrix<f64>,
    tangent: DMatrix<f64>,
    max_radius: f64,
}

impl FaceChart {
    /// Chart centred at `p`, which must lie on `C_face`.
    pub fn new(lattice: &SubspaceLattice, face: MemberId, p: &DVector<f64>) -> Result<Self> {
        if p.len() != lattice.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: lattice.ambient_dim(), found: p.len() });
        }
        if (p.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidCovector(format!("chart centre has norm {}", p.norm())));
        }
        let x = lattice.member(face);
        if x.dim() == 0 {
            return Err(Error::Invalid("the origin has no face".into()));
        }
        let d = x.distance(p);
        if d > lattice.tolerance().inside {
            return Err(Error::NotOnFace { face: lattice.name(face).to_string(), distance: d });
        }
        let p = x.project(p).normalize();
        let normal = x.complement_basis();
        let tp = x.projector() - &p * p.transpose();
        let tangent = linalg::canonical_basis(&tp, x.dim() - 1);
        Ok(Self { face, p, normal, tangent, max_radius: std::f64::consts::FRAC_PI_2 })
    }

    pub fn with_max_radius(mut self, r: f64) -> Self {
        self.max_radius = r.min(std::f64::consts::PI - 1e-3);
        self
    }

    pub fn face(&self) -> MemberId {
        self.face
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.p
    }

    /// Orthonormal basis of `X_a^perp` (the `y` directions).
    pub fn normal_basis(&self) -> &DMatrix<f64> {
        &self.normal
    }

    /// Orthonormal basis of `X_a` intersected with `p^perp` (the `z` directions).
    pub fn tangent_basis(&self) -> &DMatrix<f64> {
        &self.tangent
    }

    pub fn codim(&self) -> usize {
        self.normal.ncols()
    }

    pub fn tangent_dim(&self) -> usize {
        self.tangent.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.p.len()
    }

    pub fn max_radius(&self) -> f64 {
        self.max_radius
    }

    fn to_ambient(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        &self.normal * a + &self.tangent * b
    }

    /// Inverse exponential map at `p`, as a vector in `p^perp`.
    pub fn log(&self, omega: &DVector<f64>) -> Result<DVector<f64>> {
        let cos = self.p.dot(omega);
        let perp = omega - &self.p * cos;
        let sin = perp.norm();
        let theta = sin.atan2(cos);
        if theta >= self.max_radius {
            return Err(Error::ChartDomain { radius: theta });
        }
        if sin == 0.0 {
            return Ok(DVector::zeros(self.p.len()));
        }
        Ok(perp * (theta / sin))
    }

    pub fn exp(&self, w: &DVector<f64>) -> DVector<f64> {
        let r = w.norm();
        if r == 0.0 {
            return self.p.clone();
        }
        &self.p * r.cos() + w * (r.sin() / r)
    }

    pub fn coords(&self, xi: &ScCovector) -> Result<ChartPoint> {
        let w = self.log(&xi.omega)?;
        let r = w.norm();
        let v_perp = &xi.v - &self.p * self.p.dot(&xi.v);
        let kappa = if r < 1e-300 {
            v_perp
        } else {
            let wh = &w / r;
            let er = &wh * r.cos() - &self.p * r.sin();
            let along = wh.dot(&xi.v);
            &wh * er.dot(&xi.v) + (&v_perp - &wh * along) * (r.sin() / r)
        };
        Ok(ChartPoint {
            y: self.normal.transpose() * &w,
            z: self.tangent.transpose() * &w,
            tau: xi.tau,
            mu: self.normal.transpose() * &kappa,
            nu: self.tangent.transpose() * &kappa,
        })
    }

    pub fn covector(&self, pt: &ChartPoint) -> Result<ScCovector> {
        let w = self.to_ambient(&pt.y, &pt.z);
        let kappa = self.to_ambient(&pt.mu, &pt.nu);
        let r = w.norm();
        if r >= self.max_radius {
            return Err(Error::ChartDomain { radius: r });
        }
        let omega = self.exp(&w);
        let v = if r < 1e-300 {
            kappa
        } else {
            let wh = &w / r;
            let er = &wh * r.cos() - &self.p * r.sin();
            let along = kappa.dot(&wh);
            &er * along + (&kappa - &wh * along) * (r / r.sin())
        };
        Ok(ScCovector::projected(omega, pt.tau, v))
    }

    /// The dual metric `h = |v|^2` in chart coordinates.
    pub fn h(&self, pt: &ChartPoint) -> f64 {
        dual_metric(&pt.w(), &pt.kappa())
    }

    pub fn g(&self, pt: &ChartPoint) -> f64 {
        pt.tau * pt.tau + self.h(pt)
    }

    /// The inverse metric matrix at `(y, z)` in the `(y, z)` basis.
    pub fn inverse_metric(&self, y: &DVector<f64>, z: &DVector<f64>) -> DMatrix<f64> {
        let w: Vec<f64> = y.iter().chain(z.iter()).copied().collect();
        let d = w.len();
        let r = crate::ad::norm2(&w).sqrt();
        let [c, ..] = radial_coefficients(r);
        let mut m = DMatrix::identity(d, d) * c;
        if r > 0.0 {
            let wh = DVector::from_vec(w) / r;
            m += &wh * wh.transpose() * (1.0 - c);
        }
        m
    }

    /// The rescaled Hamilton vector field in chart coordinates.
    pub fn field(&self, pt: &ChartPoint) -> ChartPoint {
        let w = pt.w();
        let kappa = pt.kappa();
        let (dk, dw) = dual_metric_gradients(&w, &kappa);
        let h = dual_metric(&w, &kappa);
        let (k, m) = (pt.codim(), pt.tangent_dim());
        let dkappa: Vec<f64> = kappa.iter().zip(&dw).map(|(&q, &g)| 2.0 * pt.tau * q - g).collect();
        ChartPoint {
            y: DVector::from_column_slice(&dk[..k]),
            z: DVector::from_column_slice(&dk[k..k + m]),
            tau: -2.0 * h,
            mu: DVector::from_column_slice(&dkappa[..k]),
            nu: DVector::from_column_slice(&dkappa[k..]),
        }
    }
}
