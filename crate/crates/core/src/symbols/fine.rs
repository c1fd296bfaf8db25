//! The fine normal family. `omega_0` is the squared distance in
//! `(z, tau, nu)` to the straight model curve tangent to the linearized field
//! `W_0 = 2c d_eta + 2 nu0 d_z - 2(lambda - tau0^2) d_tau + 2 tau0 nu0 d_nu`,
//! parametrized by `eta`, where `c = lambda - tau0^2 - |nu0|^2`. Then
//! `omega = omega_0^2 + (|y|^2 - eta^2/c)^2` and
//! `phi = tau0 - tau + omega / (eps^4 delta^3)`.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;

use super::certify::{base_params, chart_domain, evaluate, measured_sup, region_points, CertifyOptions, Constant, ConstantSource, Family, MeasuredConstants};
use super::sampling::{ball, reject, sphere, uniform};
use super::{dot, g_flat, FamilyKind, Layout, SymbolContext};
use crate::ad::Real;
use crate::error::{Error, Result};
use crate::phasespace::{ChartPoint, SigmaClass, CLASSIFY_TOL};

/// `delta` at which the fine constant `C8` is measured.
pub const FINE_PROBE_DELTA: f64 = 1e-3;

/// Coefficients of the linearized field at the centre.
#[derive(Debug, Clone, PartialEq)]
pub struct W0Data {
    pub eta_rate: f64,
    pub z_rate: Vec<f64>,
    pub tau_rate: f64,
    pub nu_rate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FineValues {
    pub omega: f64,
    pub omega0: f64,
    pub w0: W0Data,
    pub phi: f64,
    pub q: f64,
    pub b2: f64,
    pub e: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct FineFamily {
    ctx: SymbolContext,
    l: Layout,
    c: f64,
    c0: f64,
    slope_z: Vec<f64>,
    slope_tau: f64,
    slope_nu: Vec<f64>,
    constants: Vec<Constant>,
}

impl FineFamily {
    pub(crate) fn unchecked(ctx: &SymbolContext) -> Result<Self> {
        let c = ctx.normal_energy();
        if c.abs() <= CLASSIFY_TOL {
            return Err(Error::RadialDegeneracy(format!(
                "lambda - tau0^2 - |nu0|^2 = {c:e}: the d_eta coefficient of W_0 vanishes"
            )));
        }
        if c < 0.0 {
            return Err(Error::WrongStratum { expected: SigmaClass::SigmaN.label().into(), found: ctx.center_class().label().into() });
        }
        let e0 = ctx.lambda - ctx.tau0 * ctx.tau0;
        Ok(Self {
            ctx: ctx.clone(),
            l: Layout::of(ctx),
            c,
            c0: e0 / 2.0,
            slope_z: ctx.nu0.iter().map(|v| v / c).collect(),
            slope_tau: -e0 / c,
            slope_nu: ctx.nu0.iter().map(|v| ctx.tau0 * v / c).collect(),
            constants: Vec::new(),
        })
    }

    pub(crate) fn w0(&self) -> W0Data {
        let ctx = &self.ctx;
        W0Data {
            eta_rate: 2.0 * self.c,
            z_rate: ctx.nu0.iter().map(|v| 2.0 * v).collect(),
            tau_rate: -2.0 * (ctx.lambda - ctx.tau0 * ctx.tau0),
            nu_rate: ctx.nu0.iter().map(|v| 2.0 * ctx.tau0 * v).collect(),
        }
    }

    fn omega0<D: Real>(&self, x: &[D]) -> D {
        let l = self.l;
        let eta = dot(l.y(x), l.mu(x));
        let dt = l.tau(x) - eta * self.slope_tau - self.ctx.tau0;
        let mut acc = dt * dt;
        for i in 0..l.m {
            let dz = l.z(x)[i] - eta * self.slope_z[i];
            let dn = l.nu(x)[i] - eta * self.slope_nu[i] - self.ctx.nu0[i];
            acc = acc + dz * dz + dn * dn;
        }
        acc
    }

    pub(crate) fn measure(ctx: &SymbolContext, opts: &CertifyOptions) -> Result<MeasuredConstants> {
        let probe_ctx = ctx.clone().with_delta(FINE_PROBE_DELTA);
        let probe = Self::unchecked(&probe_ctx)?;
        let pts = region_points(&probe, opts.seed, 2 << 40, opts.measure_samples)?;
        let eps2 = ctx.eps * ctx.eps;
        let c8 = measured_sup(&pts, |x| {
            let ev = evaluate(&probe, x);
            let h = g_flat(probe.l, x) - probe.l.tau(x).powi(2);
            Some((ev.hphi - 2.0 * h).abs() * eps2 / FINE_PROBE_DELTA)
        });
        let c0 = probe.c0;
        let big_c0 = c0 / c8;
        let delta0 = (big_c0 * eps2).min(FINE_PROBE_DELTA);
        Ok(MeasuredConstants {
            family: FamilyKind::Fine,
            constants: vec![
                Constant::new("c0", c0, ConstantSource::Derived),
                Constant::new("C8", c8, ConstantSource::Measured),
                Constant::new("C0", big_c0, ConstantSource::Derived),
                Constant::new("probe_delta", FINE_PROBE_DELTA, ConstantSource::Policy),
                Constant::new("delta0", delta0, ConstantSource::Derived),
            ],
            threshold: c0,
            delta0,
        })
    }

    pub(crate) fn build(ctx: &SymbolContext, opts: &CertifyOptions) -> Result<Self> {
        let mut fam = Self::unchecked(ctx)?;
        let m = Self::measure(ctx, opts)?;
        let big_c0 = m.get("C0").unwrap_or(0.0);
        let ratio = ctx.delta / (ctx.eps * ctx.eps);
        if !(ratio < big_c0) {
            return Err(Error::ConstraintViolation(format!("delta/eps^2 = {ratio} must be below C0 = {big_c0}")));
        }
        if ctx.delta > FINE_PROBE_DELTA {
            return Err(Error::ConstraintViolation(format!(
                "delta = {} exceeds the measurement scale {FINE_PROBE_DELTA}",
                ctx.delta
            )));
        }
        fam.constants = m.constants;
        Ok(fam)
    }
}

impl Family for FineFamily {
    fn ctx(&self) -> &SymbolContext {
        &self.ctx
    }

    fn kind(&self) -> FamilyKind {
        FamilyKind::Fine
    }

    fn omega<D: Real>(&self, x: &[D]) -> D {
        let l = self.l;
        let eta = dot(l.y(x), l.mu(x));
        let w0 = self.omega0(x);
        let s = crate::ad::norm2(l.y(x)) - eta * eta / self.c;
        w0 * w0 + s * s
    }

    fn args<D: Real>(&self, x: &[D]) -> (D, D, D) {
        let ctx = &self.ctx;
        let (eps, delta, t) = (ctx.eps, ctx.delta, ctx.t_shrink);
        let u = -self.l.tau(x) + ctx.tau0;
        let phi = u + self.omega(x) / (eps.powi(4) * delta.powi(3));
        let a0 = (D::cst(1.0 + t) - phi / delta) / ctx.a0;
        let a1 = (u + delta) / (eps * delta) + t;
        (phi, a0, a1)
    }

    fn threshold(&self) -> f64 {
        self.c0
    }

    fn in_band(&self, x: &[f64]) -> bool {
        (self.ctx.lambda - g_flat(self.l, x)).abs() < self.ctx.delta
    }

    fn propose(&self, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        let (l, ctx) = (self.l, &self.ctx);
        let (eps, delta) = (ctx.eps, ctx.delta);
        let e0 = ctx.lambda - ctx.tau0 * ctx.tau0;
        let tube = 1.05 * std::f64::consts::SQRT_2 * eps * delta;
        let eta = uniform(rng, 1.05 * self.c * (2.0 + 1.5 * eps) * delta / e0);
        let off = ball(rng, 2 * l.m + 1, tube);
        let mu_hat = sphere(rng, l.k);
        let tau = ctx.tau0 + self.slope_tau * eta + off[l.m];
        let z: Vec<f64> = (0..l.m).map(|i| self.slope_z[i] * eta + off[i]).collect();
        let nu: Vec<f64> = (0..l.m).map(|i| ctx.nu0[i] + self.slope_nu[i] * eta + off[l.m + 1 + i]).collect();
        let m2 = ctx.lambda + uniform(rng, 1.1 * delta) - tau * tau - nu.iter().map(|v| v * v).sum::<f64>();
        if m2 <= 0.0 {
            return None;
        }
        let mut yp = ball(rng, l.k, 1.1 * tube);
        reject(&mut yp, &mu_hat);
        let mut x: Vec<f64> = yp.iter().zip(&mu_hat).map(|(a, u)| a + eta / m2.sqrt() * u).collect();
        x.extend(z);
        x.push(tau);
        x.extend(mu_hat.iter().map(|u| u * m2.sqrt()));
        x.extend(nu);
        Some(x)
    }

    fn supp_q_excess(&self, x: &[f64]) -> f64 {
        let (eps, delta) = (self.ctx.eps, self.ctx.delta);
        let w: f64 = self.omega(x);
        ((self.l.tau(x) - self.ctx.tau0).abs() / (2.0 * delta) - 1.0).max(w / (4.0 * eps.powi(4) * delta.powi(4)) - 1.0)
    }

    fn supp_e_excess(&self, x: &[f64]) -> f64 {
        fine_e_box(&self.ctx, self.l.tau(x))
    }

    fn constants(&self) -> Vec<Constant> {
        self.constants.clone()
    }

    fn params(&self) -> BTreeMap<String, f64> {
        base_params(&self.ctx)
    }

    fn region(&self) -> String {
        format!("fine: q > 0 and |lambda - g| < delta in the chart at face {}", self.ctx.chart.face().0)
    }
}

/// Excess of `tau0 - tau` over `[-delta - t eps delta, -delta + (1 - t) eps delta]`
/// in units of `eps delta`.
pub(crate) fn fine_e_box(ctx: &SymbolContext, tau: f64) -> f64 {
    let (eps, delta, t) = (ctx.eps, ctx.delta, ctx.t_shrink);
    let u = ctx.tau0 - tau;
    let lo = -delta - t * eps * delta;
    let hi = -delta + (1.0 - t) * eps * delta;
    (lo - u).max(u - hi) / (eps * delta)
}

/// All components of the fine family at a chart point.
pub fn fine_family(pt: &ChartPoint, ctx: &SymbolContext) -> Result<FineValues> {
    let x = pt.to_vec();
    chart_domain(ctx, &x)?;
    let fam = FineFamily::unchecked(ctx)?;
    let ev = evaluate(&fam, &x);
    Ok(FineValues {
        omega: fam.omega(x.as_slice()),
        omega0: fam.omega0(x.as_slice()),
        w0: fam.w0(),
        phi: ev.phi,
        q: ev.q,
        b2: ev.b2,
        e: ev.e,
    })
}
