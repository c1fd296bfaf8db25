//! The tangential family. `omega(z, tau, nu)` solves `W omega = 0` with
//! `omega = |z|^2 + |nu - nu0|^2` on `tau = tau0`, where `W` is the field
//! restricted to the face (`y = 0`, `mu = 0`). It is evaluated by RK4 along
//! the characteristic through the point, using `tau` as the parameter.
//! Then `phi = tau0 - tau + |y|^2/eps + omega/eps^2`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::certify::{base_params, chart_domain, evaluate, measured_sup, region_points, seed_along, CertifyOptions, Constant, ConstantSource, Family, MeasuredConstants};
use super::fine::fine_e_box;
use super::sampling::{ball, sphere, uniform};
use super::{dist2, dot, g_flat, FamilyKind, Layout, SymbolContext};
use crate::ad::Real;
use crate::error::{Error, Result};
use crate::phasespace::{chart_metric, chart_metric_gradients, radial_coefficients, ChartPoint, SigmaClass, CLASSIFY_TOL};

/// `delta` at which the tangential constants are measured.
pub const TANGENTIAL_PROBE_DELTA: f64 = 1e-2;
/// Largest RK4 step in `tau` for the Cauchy problem.
const CAUCHY_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct TangentialValues {
    pub omega: f64,
    pub phi: f64,
    pub q: f64,
    pub b2: f64,
    pub e: f64,
    /// `tau^2 + h(0, z, 0, nu) - lambda`.
    pub r0: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct TangentialFamily {
    ctx: SymbolContext,
    l: Layout,
    h0: f64,
    steps: usize,
    c: f64,
    c_r0: f64,
    constants: Vec<Constant>,
}

/// `d(z, nu)/d tau` along `W`.
fn cauchy_rhs<D: Real>(tau: D, z: &[D], nu: &[D]) -> Vec<D> {
    let h = chart_metric(z, nu);
    let (dh_dnu, dh_dz) = chart_metric_gradients(z, nu);
    let rate = -(h * 2.0);
    dh_dnu.iter().copied().chain(nu.iter().zip(&dh_dz).map(|(&n, &g)| tau * n * 2.0 - g)).map(|v| v / rate).collect()
}

impl TangentialFamily {
    pub(crate) fn unchecked(ctx: &SymbolContext) -> Result<Self> {
        match ctx.center_class() {
            SigmaClass::SigmaT => {}
            c if c.is_radial() => {
                return Err(Error::RadialDegeneracy(format!("centre is {}: W is tangent to tau = tau0", c.label())));
            }
            c => return Err(Error::WrongStratum { expected: SigmaClass::SigmaT.label().into(), found: c.label().into() }),
        }
        let h0 = ctx.nu0.norm_squared();
        if h0 <= CLASSIFY_TOL {
            return Err(Error::RadialDegeneracy(format!("h(z0, nu0) = {h0:e}")));
        }
        let steps = ((2.2 * ctx.delta / CAUCHY_STEP).ceil() as usize).max(8);
        Ok(Self { ctx: ctx.clone(), l: Layout::of(ctx), h0, steps, c: h0 / 2.0, c_r0: f64::INFINITY, constants: Vec::new() })
    }

    /// `omega` as a function of `(z, tau, nu)`.
    pub(crate) fn cauchy<D: Real>(&self, z: &[D], tau: D, nu: &[D]) -> D {
        let m = z.len();
        let n = self.steps;
        let h = (D::cst(self.ctx.tau0) - tau) / n as f64;
        let mut s: Vec<D> = z.iter().chain(nu).copied().collect();
        let mut t = tau;
        let add = |s: &[D], k: &[D], a: D| -> Vec<D> { s.iter().zip(k).map(|(&x, &y)| x + y * a).collect() };
        for _ in 0..n {
            let k1 = cauchy_rhs(t, &s[..m], &s[m..]);
            let s2 = add(&s, &k1, h * 0.5);
            let k2 = cauchy_rhs(t + h * 0.5, &s2[..m], &s2[m..]);
            let s3 = add(&s, &k2, h * 0.5);
            let k3 = cauchy_rhs(t + h * 0.5, &s3[..m], &s3[m..]);
            let s4 = add(&s, &k3, h);
            let k4 = cauchy_rhs(t + h, &s4[..m], &s4[m..]);
            for i in 0..s.len() {
                s[i] = s[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
            t = t + h;
        }
        crate::ad::norm2(&s[..m]) + dist2(&s[m..], self.ctx.nu0.as_slice())
    }

    fn r0(&self, x: &[f64]) -> f64 {
        let l = self.l;
        l.tau(x).powi(2) + chart_metric(l.z(x), l.nu(x)) - self.ctx.lambda
    }

    /// `W omega` at the `(z, tau, nu)` part of `x`.
    fn w_residual(&self, x: &[f64]) -> f64 {
        let l = self.l;
        let (z, nu) = (l.z(x), l.nu(x));
        let tau = l.tau(x);
        let h = chart_metric(z, nu);
        let (dh_dnu, dh_dz) = chart_metric_gradients(z, nu);
        let dnu: Vec<f64> = nu.iter().zip(&dh_dz).map(|(n, g)| 2.0 * tau * n - g).collect();
        let zd = seed_along(z, &dh_dnu);
        let nd = seed_along(nu, &dnu);
        self.cauchy(&zd, crate::ad::Dual64::new(tau, -2.0 * h), &nd).eps.abs()
    }

    pub(crate) fn measure(ctx: &SymbolContext, opts: &CertifyOptions) -> Result<MeasuredConstants> {
        let probe = Self::unchecked(&ctx.clone().with_delta(TANGENTIAL_PROBE_DELTA))?;
        let pts = region_points(&probe, opts.seed, 2 << 40, opts.measure_samples)?;
        let l = probe.l;
        let h_of = |x: &[f64]| g_flat(l, x) - l.tau(x).powi(2);
        let inf_h = pts.iter().map(|x| h_of(x)).fold(f64::INFINITY, f64::min);
        let c = 0.5 * inf_h;
        let scale = TANGENTIAL_PROBE_DELTA.powf(0.75);
        let c_prime = measured_sup(&pts, |x| Some((evaluate(&probe, x).hphi - 2.0 * h_of(x)).abs() / scale));
        let c_r0 = measured_sup(&pts, |x| {
            let w: f64 = probe.omega(x);
            (w > 1e-300).then(|| probe.r0(x).abs() / w.sqrt())
        });
        let delta0 = TANGENTIAL_PROBE_DELTA.min((c / c_prime).powf(4.0 / 3.0));
        Ok(MeasuredConstants {
            family: FamilyKind::Tangential,
            constants: vec![
                Constant::new("c", c, ConstantSource::Measured),
                Constant::new("C_prime", c_prime, ConstantSource::Measured),
                Constant::new("C_r0", c_r0, ConstantSource::Measured),
                Constant::new("probe_delta", TANGENTIAL_PROBE_DELTA, ConstantSource::Policy),
                Constant::new("delta0", delta0, ConstantSource::Derived),
            ],
            threshold: c,
            delta0,
        })
    }

    pub(crate) fn build(ctx: &SymbolContext, opts: &CertifyOptions) -> Result<Self> {
        let mut fam = Self::unchecked(ctx)?;
        let m = Self::measure(ctx, opts)?;
        if !(ctx.delta < m.delta0) {
            return Err(Error::ConstraintViolation(format!("delta = {} must be below delta0 = {}", ctx.delta, m.delta0)));
        }
        fam.c = m.threshold;
        fam.c_r0 = m.get("C_r0").unwrap_or(f64::INFINITY);
        fam.constants = m.constants;
        Ok(fam)
    }
}

impl Family for TangentialFamily {
    fn ctx(&self) -> &SymbolContext {
        &self.ctx
    }

    fn kind(&self) -> FamilyKind {
        FamilyKind::Tangential
    }

    fn omega<D: Real>(&self, x: &[D]) -> D {
        self.cauchy(self.l.z(x), self.l.tau(x), self.l.nu(x))
    }

    fn args<D: Real>(&self, x: &[D]) -> (D, D, D) {
        let ctx = &self.ctx;
        let (eps, delta, t) = (ctx.eps, ctx.delta, ctx.t_shrink);
        let u = -self.l.tau(x) + ctx.tau0;
        let phi = u + crate::ad::norm2(self.l.y(x)) / eps + self.omega(x) / (eps * eps);
        let a0 = (D::cst(1.0 + t) - phi / delta) / ctx.a0;
        let a1 = (u + delta) / (eps * delta) + t;
        (phi, a0, a1)
    }

    fn threshold(&self) -> f64 {
        self.c
    }

    fn in_band(&self, x: &[f64]) -> bool {
        (g_flat(self.l, x) - self.ctx.lambda).abs() < self.ctx.eps * self.ctx.delta
    }

    fn propose(&self, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        let (l, ctx) = (self.l, &self.ctx);
        let (eps, delta) = (ctx.eps, ctx.delta);
        let t = ctx.t_shrink;
        // On supp q: -delta (1 + t eps) < tau0 - tau < (1 + t) delta and
        // |y|^2/eps + omega/eps^2 < span.
        let span = delta * (2.0 + t + t * eps);
        let lo = -delta * (1.0 + t * eps);
        let dtau = -(lo + (span * rng.gen::<f64>()));
        let tau = ctx.tau0 + dtau;
        let off = ball(rng, 2 * l.m, 1.1 * eps * span.sqrt() + 10.0 * delta * delta);
        let z: Vec<f64> = (0..l.m).map(|i| -ctx.nu0[i] * dtau / self.h0 + off[i]).collect();
        let nu: Vec<f64> = (0..l.m).map(|i| ctx.nu0[i] * (1.0 - ctx.tau0 * dtau / self.h0) + off[l.m + i]).collect();
        let y = ball(rng, l.k, 1.02 * (eps * span).sqrt());
        let mu_hat = sphere(rng, l.k);
        let target = ctx.lambda + uniform(rng, 1.05 * eps * delta) - tau * tau;
        let w: Vec<f64> = y.iter().chain(&z).copied().collect();
        let [cr, _, f, _] = radial_coefficients(dot(&w, &w).sqrt());
        let (uy, nz) = (dot(&mu_hat, &y), dot(&nu, &z));
        let a = cr + f * uy * uy;
        let b = 2.0 * f * uy * nz;
        let c = cr * dot(&nu, &nu) + f * nz * nz;
        let disc = b * b + 4.0 * a * (target - c);
        if disc < 0.0 {
            return None;
        }
        let roots: Vec<f64> = [(-b + disc.sqrt()) / (2.0 * a), (-b - disc.sqrt()) / (2.0 * a)].into_iter().filter(|s| *s >= 0.0).collect();
        let s = match roots.len() {
            0 => return None,
            1 => roots[0],
            _ => roots[rng.gen_range(0..2)],
        };
        let mut x = y;
        x.extend(z);
        x.push(tau);
        x.extend(mu_hat.iter().map(|u| u * s));
        x.extend(nu);
        Some(x)
    }

    fn surely_outside(&self, x: &[f64]) -> bool {
        let ctx = &self.ctx;
        let lower = ctx.tau0 - self.l.tau(x) + crate::ad::norm2(self.l.y(x)) / ctx.eps;
        lower >= (1.0 + ctx.t_shrink) * ctx.delta
    }

    fn supp_q_excess(&self, x: &[f64]) -> f64 {
        let (eps, delta) = (self.ctx.eps, self.ctx.delta);
        let w: f64 = self.omega(x);
        let y2: f64 = crate::ad::norm2(self.l.y(x));
        ((self.l.tau(x) - self.ctx.tau0).abs() / (2.0 * delta) - 1.0)
            .max(y2 / (4.0 * eps * delta) - 1.0)
            .max(w / (4.0 * eps * eps * delta) - 1.0)
    }

    fn supp_e_excess(&self, x: &[f64]) -> f64 {
        fine_e_box(&self.ctx, self.l.tau(x))
    }

    fn extra_checks(&self) -> Vec<(&'static str, f64)> {
        vec![("w_invariance", 1e-7), ("r0_bound", 1e-9)]
    }

    fn extra_values(&self, x: &[f64]) -> Vec<f64> {
        let w: f64 = self.omega(x);
        let r0 = self.r0(x).abs();
        let r0_excess = if w > 0.0 { r0 / (self.c_r0 * w.sqrt()) - 1.0 } else { r0 };
        vec![self.w_residual(x), r0_excess]
    }

    fn constants(&self) -> Vec<Constant> {
        self.constants.clone()
    }

    fn params(&self) -> BTreeMap<String, f64> {
        base_params(&self.ctx)
    }

    fn region(&self) -> String {
        format!("tangential: q > 0 and |tau^2 + h - lambda| < eps delta in the chart at face {}", self.ctx.chart.face().0)
    }
}

/// All components of the tangential family at a chart point. The threshold
/// entering `b^2` is measured with the default options.
pub fn tangential_family(pt: &ChartPoint, ctx: &SymbolContext) -> Result<TangentialValues> {
    let x = pt.to_vec();
    chart_domain(ctx, &x)?;
    let mut fam = TangentialFamily::unchecked(ctx)?;
    fam.c = TangentialFamily::measure(ctx, &CertifyOptions::default())?.threshold;
    let ev = evaluate(&fam, &x);
    Ok(TangentialValues { omega: fam.omega(x.as_slice()), phi: ev.phi, q: ev.q, b2: ev.b2, e: ev.e, r0: fam.r0(&x) })
}

/// `omega` of the tangential family alone; no constants are measured.
pub fn tangential_omega(pt: &ChartPoint, ctx: &SymbolContext) -> Result<f64> {
    let x = pt.to_vec();
    chart_domain(ctx, &x)?;
    Ok(TangentialFamily::unchecked(ctx)?.omega(x.as_slice()))
}
