//! Commutator symbols `(omega, phi, q, b^2, e)` built around a point `xi0` of
//! the compressed characteristic set, and sampled certificates for the
//! positivity of `scHg phi` on the region where `q` is supported.
//!
//! Three families are provided:
//!
//! * **coarse** (normal, `xi0` in `Sigma_n`): `phi = y.mu + (beta/delta) omega`.
//! * **fine** (normal): `phi = tau0 - tau + omega / (eps^4 delta^3)` with
//!   `omega` measuring the distance to the straight model bicharacteristics.
//! * **tangential** (`xi0` in `Sigma_t`): `phi = tau0 - tau + |y|^2/eps + omega/eps^2`
//!   with `omega` invariant under the flow inside the face.
//!
//! Every function works in the face chart centred at the base point of `xi0`.
//! Chart points are flattened as `(y, z, tau, mu, nu)`.

mod certify;
mod coarse;
pub mod cutoffs;
mod fine;
mod sampling;
mod tangential;

pub use certify::{certify_positivity, measure_constants, Certificate, CertifyOptions, CheckResult, Constant, ConstantSource, MeasuredConstants, Witness};
pub use coarse::{omega_coarse, phi_coarse, q_b2_e_coarse};
pub use cutoffs::{cutoffs, CutoffValues};
pub use fine::{fine_family, FineValues, W0Data, FINE_PROBE_DELTA};
pub use tangential::{tangential_family, tangential_omega, TangentialValues, TANGENTIAL_PROBE_DELTA};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::arrangement::SubspaceLattice;
use crate::error::{Error, Result};
use crate::phasespace::{ChartPoint, CompressedCovector, FaceChart};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Coarse,
    Fine,
    Tangential,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Coarse => "coarse",
            FamilyKind::Fine => "fine",
            FamilyKind::Tangential => "tangential",
        }
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coarse" => Ok(FamilyKind::Coarse),
            "fine" => Ok(FamilyKind::Fine),
            "tangential" => Ok(FamilyKind::Tangential),
            _ => Err(Error::Invalid(format!("unknown family `{s}`"))),
        }
    }
}

/// Values of `(q, b^2, e)` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolTriple {
    pub q: f64,
    pub b2: f64,
    pub e: f64,
}

/// Parameters shared by the symbol families.
#[derive(Debug, Clone)]
pub struct SymbolContext {
    pub lambda: f64,
    pub chart: FaceChart,
    pub tau0: f64,
    /// Tangential momentum of the centre in the chart's `z` basis.
    pub nu0: DVector<f64>,
    pub eps: f64,
    pub delta: f64,
    pub a0: f64,
    /// Coarse family only; measured when absent.
    pub beta: Option<f64>,
    /// Fine and tangential families: the shift `t` in `(0, 1)`.
    pub t_shrink: f64,
}

impl SymbolContext {
    /// Context centred at `center`, whose base point must be a regular point
    /// of its face. Defaults: `eps = 0.5`, `delta = 1e-3`, `A0 = 8`, `t = 0.5`.
    pub fn new(lattice: &SubspaceLattice, center: &CompressedCovector, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidEnergy(lambda));
        }
        if !lattice.is_regular(center.face, &center.omega) {
            let smaller = lattice
                .faces()
                .find(|&b| lattice.lt(b, center.face) && lattice.distance(b, &center.omega) <= lattice.tolerance().inside);
            return Err(match smaller {
                Some(b) => Error::SingularBasePoint { smaller: lattice.name(b).to_string() },
                None => Error::NotOnFace {
                    face: lattice.name(center.face).to_string(),
                    distance: lattice.distance(center.face, &center.omega),
                },
            });
        }
        let chart = FaceChart::new(lattice, center.face, &center.omega)?;
        let nu0 = chart.tangent_basis().transpose() * &center.nu;
        Ok(Self { lambda, chart, tau0: center.tau, nu0, eps: 0.5, delta: 1e-3, a0: 8.0, beta: None, t_shrink: 0.5 })
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_a0(mut self, a0: f64) -> Self {
        self.a0 = a0;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn with_t_shrink(mut self, t: f64) -> Self {
        self.t_shrink = t;
        self
    }

    pub fn codim(&self) -> usize {
        self.chart.codim()
    }

    pub fn tangent_dim(&self) -> usize {
        self.chart.tangent_dim()
    }

    /// The lift of the centre with zero normal momentum.
    pub fn center_point(&self) -> ChartPoint {
        let mut p = ChartPoint::zeros(self.codim(), self.tangent_dim());
        p.tau = self.tau0;
        p.nu = self.nu0.clone();
        p
    }

    /// `lambda - tau0^2 - |nu0|^2`, the squared normal momentum over the centre.
    pub fn normal_energy(&self) -> f64 {
        self.lambda - self.tau0 * self.tau0 - self.nu0.norm_squared()
    }

    /// Blocks `(h_nn, h_nt, h_tt)` of the inverse metric at `(y, z)`.
    pub fn metric_blocks(&self, y: &DVector<f64>, z: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let g = self.chart.inverse_metric(y, z);
        let k = self.codim();
        let m = self.tangent_dim();
        (
            g.view((0, 0), (k, k)).into_owned(),
            g.view((0, k), (k, m)).into_owned(),
            g.view((k, k), (m, m)).into_owned(),
        )
    }

    fn check_common(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::ConstraintViolation(format!("eps = {} must lie in (0, 1)", self.eps)));
        }
        if !(self.delta > 0.0) {
            return Err(Error::ConstraintViolation(format!("delta = {} must be positive", self.delta)));
        }
        if !(self.a0 > 0.0) {
            return Err(Error::ConstraintViolation(format!("A0 = {} must be positive", self.a0)));
        }
        if !(self.t_shrink > 0.0 && self.t_shrink < 1.0) {
            return Err(Error::ConstraintViolation(format!("t = {} must lie in (0, 1)", self.t_shrink)));
        }
        Ok(())
    }
}

/// Index helpers for flattened chart points.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Layout {
    pub k: usize,
    pub m: usize,
}

impl Layout {
    pub fn of(ctx: &SymbolContext) -> Self {
        Self { k: ctx.codim(), m: ctx.tangent_dim() }
    }

    pub fn y<'a, T>(&self, x: &'a [T]) -> &'a [T] {
        &x[..self.k]
    }

    pub fn z<'a, T>(&self, x: &'a [T]) -> &'a [T] {
        &x[self.k..self.k + self.m]
    }

    pub fn w<'a, T>(&self, x: &'a [T]) -> &'a [T] {
        &x[..self.k + self.m]
    }

    pub fn tau<T: Copy>(&self, x: &[T]) -> T {
        x[self.k + self.m]
    }

    pub fn mu<'a, T>(&self, x: &'a [T]) -> &'a [T] {
        &x[self.k + self.m + 1..2 * self.k + self.m + 1]
    }

    pub fn nu<'a, T>(&self, x: &'a [T]) -> &'a [T] {
        &x[2 * self.k + self.m + 1..]
    }

    pub fn kappa<T: Copy>(&self, x: &[T]) -> Vec<T> {
        self.mu(x).iter().chain(self.nu(x)).copied().collect()
    }
}

/// `g = tau^2 + h` at a flattened chart point.
pub(crate) fn g_flat(l: Layout, x: &[f64]) -> f64 {
    let t = l.tau(x);
    t * t + crate::phasespace::chart_metric(l.w(x), &l.kappa(x))
}

/// The chart field at a flattened chart point.
pub(crate) fn field_flat(ctx: &SymbolContext, x: &[f64]) -> Vec<f64> {
    let l = Layout::of(ctx);
    ctx.chart.field(&ChartPoint::from_slice(l.k, l.m, x)).to_vec()
}

impl SymbolContext {
    /// Stratum of the centre at energy `lambda`.
    pub fn center_class(&self) -> crate::phasespace::SigmaClass {
        use crate::phasespace::SigmaClass;
        let nu2 = self.nu0.norm_squared();
        let margin = self.tau0 * self.tau0 + nu2 - self.lambda;
        let tol = crate::phasespace::CLASSIFY_TOL;
        if margin < -tol {
            SigmaClass::SigmaN
        } else if margin > tol {
            SigmaClass::Elliptic
        } else if nu2 <= tol {
            if self.tau0 > 0.0 {
                SigmaClass::RadialPlus
            } else {
                SigmaClass::RadialMinus
            }
        } else {
            SigmaClass::SigmaT
        }
    }
}

pub(crate) fn dot<D: crate::ad::Real>(a: &[D], b: &[D]) -> D {
    crate::ad::dot(a, b)
}

/// `|a - b|^2` with `b` constant.
pub(crate) fn dist2<D: crate::ad::Real>(a: &[D], b: &[f64]) -> D {
    a.iter().zip(b).fold(D::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}
