//! Scattering covectors `(omega, tau, v)` over the sphere at infinity, the
//! compressed phase space over each face and the `Sigma` classification.

mod chart;

pub use chart::{radial_coefficients, ChartPoint, FaceChart};
pub(crate) use chart::{dual_metric as chart_metric, dual_metric_gradients as chart_metric_gradients};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::arrangement::{MemberId, SubspaceLattice};
use crate::error::{Error, Result};

/// A point `omega` of the unit sphere with a scattering covector `(tau, v)`,
/// `v` tangent to the sphere at `omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCovector", into = "RawCovector")]
pub struct ScCovector {
    pub omega: DVector<f64>,
    pub tau: f64,
    pub v: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawCovector {
    omega: Vec<f64>,
    tau: f64,
    v: Vec<f64>,
}

impl TryFrom<RawCovector> for ScCovector {
    type Error = Error;
    fn try_from(r: RawCovector) -> Result<Self> {
        ScCovector::new(DVector::from_vec(r.omega), r.tau, DVector::from_vec(r.v))
    }
}

impl From<ScCovector> for RawCovector {
    fn from(c: ScCovector) -> Self {
        RawCovector { omega: c.omega.as_slice().to_vec(), tau: c.tau, v: c.v.as_slice().to_vec() }
    }
}

const UNIT_TOL: f64 = 1e-10;

impl ScCovector {
    /// Validates `|omega| = 1` and `v` orthogonal to `omega`.
    pub fn new(omega: DVector<f64>, tau: f64, v: DVector<f64>) -> Result<Self> {
        if omega.len() != v.len() {
            return Err(Error::DimensionMismatch { expected: omega.len(), found: v.len() });
        }
        if !tau.is_finite() || omega.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidCovector("non-finite component".into()));
        }
        if (omega.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidCovector(format!("|omega| = {}", omega.norm())));
        }
        let ip = omega.dot(&v);
        if ip.abs() > UNIT_TOL * v.norm().max(1.0) {
            return Err(Error::InvalidCovector(format!("<omega, v> = {ip:e}")));
        }
        Ok(Self { omega, tau, v })
    }

    /// Normalizes `omega` and removes the normal part of `v`.
    pub fn projected(omega: DVector<f64>, tau: f64, v: DVector<f64>) -> Self {
        let omega = omega.normalize();
        let v = &v - &omega * omega.dot(&v);
        Self { omega, tau, v }
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    /// The rescaled symbol `g = tau^2 + |v|^2`.
    pub fn g(&self) -> f64 {
        self.tau * self.tau + self.v.norm_squared()
    }
}

/// Decomposition of `v` at a point of `C_a` into the part normal to the face
/// and the part tangent to it.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumSplit {
    pub face: MemberId,
    /// `(I - P_a) v`, in `X_a^perp`.
    pub mu: DVector<f64>,
    /// `P_a v`, tangent to `C_a` at `omega`.
    pub nu: DVector<f64>,
}

pub fn split(xi: &ScCovector, lattice: &SubspaceLattice, face: MemberId) -> Result<MomentumSplit> {
    let d = lattice.distance(face, &xi.omega);
    if d > lattice.tolerance().inside {
        return Err(Error::NotOnFace { face: lattice.name(face).to_string(), distance: d });
    }
    let x = lattice.member(face);
    Ok(MomentumSplit { face, mu: x.reject(&xi.v), nu: x.project(&xi.v) })
}

/// A point of the compressed phase space over `C_a`: the normal momentum is
/// forgotten.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedCovector {
    pub face: MemberId,
    pub omega: DVector<f64>,
    pub tau: f64,
    pub nu: DVector<f64>,
}

impl CompressedCovector {
    /// `tau^2 + |nu|^2`.
    pub fn tangential_g(&self) -> f64 {
        self.tau * self.tau + self.nu.norm_squared()
    }

    /// The covector over this point with normal momentum `mu`.
    pub fn lift(&self, lattice: &SubspaceLattice, mu: &DVector<f64>) -> Result<ScCovector> {
        let x = lattice.member(self.face);
        if x.project(mu).norm() > UNIT_TOL * mu.norm().max(1.0) {
            return Err(Error::InvalidCovector("normal momentum has a component along the face".into()));
        }
        ScCovector::new(self.omega.clone(), self.tau, &self.nu + mu)
    }
}

/// Compresses `xi` over the smallest face containing `omega`.
pub fn compress(xi: &ScCovector, lattice: &SubspaceLattice) -> Result<CompressedCovector> {
    let loc = lattice.locate(&xi.omega)?;
    compress_on(xi, lattice, loc.face)
}

/// Compresses `xi` over a given face containing `omega`.
pub fn compress_on(xi: &ScCovector, lattice: &SubspaceLattice, face: MemberId) -> Result<CompressedCovector> {
    let s = split(xi, lattice, face)?;
    Ok(CompressedCovector { face, omega: xi.omega.clone(), tau: xi.tau, nu: s.nu })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SigmaClass {
    /// `tau^2 + |nu|^2 > lambda`: no covector of energy `lambda` lies over the point.
    Elliptic,
    /// `tau^2 + |nu|^2 < lambda`: the fiber is a sphere of positive radius.
    SigmaN,
    /// `tau^2 + |nu|^2 = lambda` with `nu != 0`.
    SigmaT,
    /// Radial point with `tau = +sqrt(lambda)`.
    RadialPlus,
    /// Radial point with `tau = -sqrt(lambda)`.
    RadialMinus,
}

impl SigmaClass {
    pub fn in_sigma(self) -> bool {
        !matches!(self, SigmaClass::Elliptic)
    }

    pub fn is_radial(self) -> bool {
        matches!(self, SigmaClass::RadialPlus | SigmaClass::RadialMinus)
    }

    pub fn label(self) -> &'static str {
        match self {
            SigmaClass::Elliptic => "elliptic",
            SigmaClass::SigmaN => "sigma_n",
            SigmaClass::SigmaT => "sigma_t",
            SigmaClass::RadialPlus => "radial_plus",
            SigmaClass::RadialMinus => "radial_minus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: SigmaClass,
    /// `tau^2 + |nu|^2 - lambda`.
    pub margin: f64,
}

pub const CLASSIFY_TOL: f64 = 1e-9;

pub fn classify(zeta: &CompressedCovector, lambda: f64, tol: f64) -> Classification {
    let nu2 = zeta.nu.norm_squared();
    let margin = zeta.tau * zeta.tau + nu2 - lambda;
    let class = if margin < -tol {
        SigmaClass::SigmaN
    } else if margin > tol {
        SigmaClass::Elliptic
    } else if nu2 <= tol {
        if zeta.tau > 0.0 {
            SigmaClass::RadialPlus
        } else {
            SigmaClass::RadialMinus
        }
    } else {
        SigmaClass::SigmaT
    };
    Classification { class, margin }
}

/// Compresses over the smallest face of `omega` and classifies.
pub fn classify_covector(xi: &ScCovector, lattice: &SubspaceLattice, lambda: f64) -> Result<(CompressedCovector, Classification)> {
    let z = compress(xi, lattice)?;
    let c = classify(&z, lambda, CLASSIFY_TOL);
    Ok((z, c))
}
