//! Bundle automorphisms from infinitesimal data: geodesics of the Poincaré
//! metric, parallel transport for the metric connection, and the exponential
//! chart Sigma with its inverse.

use crate::error::{CrError, Result};
use crate::line_bundle::model_gamma;
use crate::mobius_fuchsian::MobiusElement;
use crate::surface_mesh::{SectionField, SurfaceMesh};
use num_complex::Complex64 as C;
use serde::Serialize;

const ZERO: C = C { re: 0.0, im: 0.0 };

fn from_origin(p: C, z: C) -> C {
    (z + p) / (C::new(1.0, 0.0) + p.conj() * z)
}

/// Hyperbolic length 2|v|/(1-|p|^2) of a Euclidean tangent vector at p.
pub fn hyperbolic_norm(p: C, v: C) -> f64 {
    2.0 * v.norm() / (1.0 - p.norm_sqr())
}

/// Point at time t on the geodesic with initial point p and Euclidean
/// velocity v, for ds^2 = 4|dz|^2/(1-|z|^2)^2.
pub fn geodesic(p: C, v: C, t: f64) -> Result<C> {
    if p.norm() >= 1.0 {
        return Err(CrError::Domain(format!("point {p} is not inside the unit disk")));
    }
    let u = v / (1.0 - p.norm_sqr());
    let s = u.norm();
    if s == 0.0 {
        return Ok(p);
    }
    Ok(from_origin(p, u * ((s * t).tanh() / s)))
}

/// Velocity of the same geodesic at time t.
pub fn geodesic_velocity(p: C, v: C, t: f64) -> C {
    let u = v / (1.0 - p.norm_sqr());
    let s = u.norm();
    if s == 0.0 {
        return ZERO;
    }
    let x = u * ((s * t).tanh() / s);
    let dx = u / (s * t).cosh().powi(2);
    let den = C::new(1.0, 0.0) + p.conj() * x;
    dx * (1.0 - p.norm_sqr()) / (den * den)
}

/// Inverse of the exponential at p: the Euclidean velocity reaching q at t = 1.
pub fn geodesic_log(p: C, q: C) -> C {
    let x = (q - p) / (C::new(1.0, 0.0) - p.conj() * q);
    let r = x.norm();
    if r == 0.0 {
        return ZERO;
    }
    x * (r.atanh() / r) * (1.0 - p.norm_sqr())
}

fn simpson<F: Fn(f64) -> C>(f: &F, a: f64, b: f64, fa: C, fm: C, fb: C, whole: C, tol: f64, depth: usize) -> Result<C> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (fa + flm * 4.0 + fm) * ((m - a) / 6.0);
    let right = (fm + frm * 4.0 + fb) * ((b - m) / 6.0);
    let diff = left + right - whole;
    if diff.norm() <= 15.0 * tol {
        return Ok(left + right + diff / 15.0);
    }
    if depth == 0 {
        return Err(CrError::NonConvergence { iterations: 50, residual: diff.norm() });
    }
    Ok(simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)? + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Adaptive Simpson quadrature of a complex function on [a, b].
pub fn adaptive_simpson<F: Fn(f64) -> C>(f: &F, a: f64, b: f64, tol: f64) -> Result<C> {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (fa + fm * 4.0 + fb) * ((b - a) / 6.0);
    simpson(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Integral of the connection form Gamma dz along the geodesic from p with velocity v.
pub fn connection_integral(gamma: &dyn Fn(C) -> C, p: C, v: C) -> Result<C> {
    if v == ZERO {
        return Ok(ZERO);
    }
    let f = |t: f64| {
        let z = geodesic(p, v, t).unwrap_or(p);
        gamma(z) * geodesic_velocity(p, v, t)
    };
    adaptive_simpson(&f, 0.0, 1.0, 1e-10)
}

/// exp(-integral of Gamma dz) along the geodesic.
pub fn parallel_factor(gamma: &dyn Fn(C) -> C, p: C, v: C) -> Result<C> {
    Ok((-connection_integral(gamma, p, v)?).exp())
}

/// X = v1 d_z + v* w d_w + conjugate, sampled at the quotient vertex representatives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfinitesimalAuto {
    pub v1: SectionField,
    pub vstar: SectionField,
}

/// phi(z, w) = (base, w exp(fiber_log)) at each quotient vertex representative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BundleAutoSample {
    pub base: Vec<C>,
    pub fiber_log: Vec<C>,
}

impl BundleAutoSample {
    pub fn fiber_factor(&self) -> Vec<C> {
        self.fiber_log.iter().map(|l| l.exp()).collect()
    }
}

/// One point of Sigma: (gamma(z0, V, 1), exp(-int Gamma + v* + Gamma(z0) v1)).
pub fn sigma_point(gamma: &dyn Fn(C) -> C, z0: C, v1: C, vstar: C) -> Result<(C, C)> {
    let z1 = geodesic(z0, v1, 1.0)?;
    Ok((z1, -connection_integral(gamma, z0, v1)? + vstar + gamma(z0) * v1))
}

/// One point of the inverse: V from the geodesic logarithm and
/// v* = phi2 - Gamma(V) + int Gamma.
pub fn sigma_inverse_point(gamma: &dyn Fn(C) -> C, z0: C, z1: C, phi2: C) -> Result<(C, C)> {
    let v1 = geodesic_log(z0, z1);
    Ok((v1, phi2 - gamma(z0) * v1 + connection_integral(gamma, z0, v1)?))
}

/// The exponential chart on the mesh for the model connection with exponent e.
/// `bound` limits the hyperbolic length of V.
pub fn sigma_map(mesh: &SurfaceMesh, x: &InfinitesimalAuto, e: f64, bound: f64) -> Result<BundleAutoSample> {
    let reps = mesh.representatives();
    if x.v1.values.len() != reps.len() || x.vstar.values.len() != reps.len() {
        return Err(CrError::Precondition("field length differs from the quotient vertex count".into()));
    }
    let g = |z: C| model_gamma(z, e);
    let mut base = Vec::with_capacity(reps.len());
    let mut fiber_log = Vec::with_capacity(reps.len());
    for (k, &r) in reps.iter().enumerate() {
        let z0 = mesh.vertices[r];
        let v1 = x.v1.values[k];
        if hyperbolic_norm(z0, v1) > bound {
            return Err(CrError::Precondition(format!("|V| = {:.3e} at vertex {r} exceeds the bound {bound}", hyperbolic_norm(z0, v1))));
        }
        let (z1, l) = sigma_point(&g, z0, v1, x.vstar.values[k])?;
        base.push(z1);
        fiber_log.push(l);
    }
    Ok(BundleAutoSample { base, fiber_log })
}

pub fn sigma_inverse(mesh: &SurfaceMesh, phi: &BundleAutoSample, e: f64, radius: f64) -> Result<InfinitesimalAuto> {
    let reps = mesh.representatives();
    let g = |z: C| model_gamma(z, e);
    let mut v1 = Vec::with_capacity(reps.len());
    let mut vstar = Vec::with_capacity(reps.len());
    for (k, &r) in reps.iter().enumerate() {
        let z0 = mesh.vertices[r];
        let d = crate::mobius_fuchsian::hyperbolic_distance(z0, phi.base[k]);
        if d > radius {
            return Err(CrError::Precondition(format!("base map moves vertex {r} by {d:.3e}, beyond the injectivity radius {radius:.3e}")));
        }
        let (a, b) = sigma_inverse_point(&g, z0, phi.base[k], phi.fiber_log[k])?;
        v1.push(a);
        vstar.push(b);
    }
    Ok(InfinitesimalAuto { v1: SectionField { weight: (-1, 0), values: v1 }, vstar: SectionField { weight: (0, 0), values: vstar } })
}

/// Injectivity bound for the inverse chart: half the polygon side length.
pub fn injectivity_bound(mesh: &SurfaceMesh) -> f64 {
    0.5 * mesh.polygon.side_length()
}

/// Trivialization independence at the seams: for each boundary vertex, Sigma
/// computed in its own chart with transported data and mapped by the deck
/// element agrees with Sigma at the representative. Returns the max mismatch
/// of base points and fibre factors.
pub fn seam_defect(mesh: &SurfaceMesh, x: &InfinitesimalAuto, e: f64) -> Result<f64> {
    let g = |z: C| model_gamma(z, e);
    let n = e.round() as i32;
    let mut worst: f64 = 0.0;
    for v in 0..mesh.vertices.len() {
        if mesh.ident.rep[v] == v {
            continue;
        }
        let gam: &MobiusElement = &mesh.ident.gamma[v];
        let k = mesh.dof(v);
        let zb = mesh.vertices[v];
        let (zr, vr, sr) = (mesh.vertices[mesh.ident.rep[v]], x.v1.values[k], x.vstar.values[k]);
        let vb = vr / gam.derivative(zb);
        let glog = |z: C| -gam.c * e / gam.denominator(z);
        let sb = sr - vb * glog(zb);
        let (z1r, lr) = sigma_point(&g, zr, vr, sr)?;
        let (z1b, lb) = sigma_point(&g, zb, vb, sb)?;
        let gw = |z: C| gam.denominator(z).powi(-n);
        let mapped = lb.exp() * gw(z1b) / gw(zb);
        worst = worst.max((gam.eval(z1b) - z1r).norm()).max((mapped - lr.exp()).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_velocity_is_constant() {
        let p = C::new(0.3, -0.2);
        assert_eq!(geodesic(p, ZERO, 5.0).unwrap(), p);
        assert_eq!(parallel_factor(&|z| model_gamma(z, 1.0), p, ZERO).unwrap(), C::new(1.0, 0.0));
    }

    #[test]
    fn log_inverts_exp() {
        let (p, v) = (C::new(0.4, 0.1), C::new(-0.05, 0.07));
        let q = geodesic(p, v, 1.0).unwrap();
        assert!((geodesic_log(p, q) - v).norm() < 1e-14);
    }

    #[test]
    fn flat_connection_transports_trivially() {
        let f = parallel_factor(&|_| ZERO, C::new(0.1, 0.2), C::new(0.03, 0.0)).unwrap();
        assert!((f - 1.0).norm() < 1e-15);
    }
}
