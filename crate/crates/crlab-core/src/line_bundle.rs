//! Hermitian metrics on the line bundle, the contact form of the unit circle
//! bundle, and the explicit disk model.

use crate::error::{CrError, Result};
use crate::mobius_fuchsian::{FuchsianGroup, MobiusElement};
use crate::surface_mesh::{rho, SectionField, SurfaceMesh};
use nalgebra::Matrix4;
use num_complex::Complex64 as C;
use serde::Serialize;

/// Model metric h(z) = (1 - |z|^2)^{-e} of the section z -> (z, 1).
pub fn model_metric(z: C, e: f64) -> Result<f64> {
    if z.norm() >= 1.0 {
        return Err(CrError::Domain(format!("point {z} is not inside the unit disk")));
    }
    Ok((1.0 - z.norm_sqr()).powf(-e))
}

pub fn model_log_metric(z: C, e: f64) -> f64 {
    -e * (1.0 - z.norm_sqr()).ln()
}

/// Connection coefficient d_z log h of the model metric.
pub fn model_gamma(z: C, e: f64) -> C {
    z.conj() * (e / (1.0 - z.norm_sqr()))
}

/// d_z d_zbar log h of the model metric.
pub fn model_ddbar_log(z: C, e: f64) -> f64 {
    e / (1.0 - z.norm_sqr()).powi(2)
}

/// Right-hand side of the curvature identity: (m/(2g-2)) times the area
/// density, written in terms of the model exponent e = m/(g-1).
pub fn curvature_target(z: C, e: f64) -> f64 {
    0.25 * e * rho(z)
}

/// 4th-order central-difference d_z d_zbar = (f_xx + f_yy)/4.
pub fn ddbar_fd<F: Fn(C) -> f64>(f: &F, z: C, step: f64) -> f64 {
    let second = |d: C| {
        (-f(z + d * 2.0) + 16.0 * f(z + d) - 30.0 * f(z) + 16.0 * f(z - d) - f(z - d * 2.0)) / (12.0 * step * step)
    };
    0.25 * (second(C::new(step, 0.0)) + second(C::new(0.0, step)))
}

#[derive(Clone, Copy)]
pub enum Derivative<'a> {
    /// Closed form of d_z d_zbar log h.
    Analytic(&'a dyn Fn(C) -> f64),
    /// Finite differences of log h with the given step.
    FiniteDifference(&'a dyn Fn(C) -> f64, f64),
}

/// Max relative residual of d_z d_zbar log h = (e/4) rho over the points.
pub fn verify_curvature_identity(deriv: Derivative, e: f64, points: &[C]) -> f64 {
    points
        .iter()
        .map(|&z| {
            let lhs = match deriv {
                Derivative::Analytic(f) => f(z),
                Derivative::FiniteDifference(f, h) => ddbar_fd(&f, z, h),
            };
            let rhs = curvature_target(z, e);
            (lhs - rhs).abs() / rhs.abs()
        })
        .fold(0.0, f64::max)
}

/// Log of a hermitian metric sampled at the representatives of the quotient
/// vertices, with deck law log h(gz) = log h(z) - e log|g'(z)|.
#[derive(Debug, Clone, Serialize)]
pub struct HermitianMetricField {
    pub log_h: Vec<f64>,
    pub e: f64,
}

impl HermitianMetricField {
    pub fn model(mesh: &SurfaceMesh, e: f64) -> Self {
        let log_h = mesh.representatives().iter().map(|&v| model_log_metric(mesh.vertices[v], e)).collect();
        Self { log_h, e }
    }

    /// Value in the coordinates of mesh vertex v.
    pub fn at_vertex(&self, mesh: &SurfaceMesh, v: usize) -> f64 {
        let base = self.log_h[mesh.dof(v)];
        if mesh.ident.rep[v] == v {
            base
        } else {
            let g = &mesh.ident.gamma[v];
            base + self.e * g.derivative(mesh.vertices[v]).norm().ln()
        }
    }

    /// Max over boundary vertices of |transported value - exact(z)|.
    pub fn automorphy_residual<F: Fn(C) -> f64>(&self, mesh: &SurfaceMesh, exact: F) -> f64 {
        (0..mesh.vertices.len())
            .filter(|&v| mesh.ident.rep[v] != v)
            .map(|v| (self.at_vertex(mesh, v) - exact(mesh.vertices[v])).abs())
            .fold(0.0, f64::max)
    }

    /// The global function log h - log h_model(e).
    pub fn deviation_from_model(&self, mesh: &SurfaceMesh) -> SectionField {
        let values = mesh
            .representatives()
            .iter()
            .zip(&self.log_h)
            .map(|(&v, &l)| C::new(l - model_log_metric(mesh.vertices[v], self.e), 0.0))
            .collect();
        SectionField { weight: (0, 0), values }
    }
}

/// Deck covariance defect log h(gz) + e log|g'(z)| - log h(z) of the model.
pub fn deck_covariance_defect(g: &MobiusElement, z: C, e: f64) -> f64 {
    model_log_metric(g.eval(z), e) + e * g.derivative(z).norm().ln() - model_log_metric(z, e)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContactFormSample {
    pub z: C,
    pub w: C,
    /// Components of theta in the complex coframe (dz, dw); the real form is 2 Re.
    pub dz: C,
    pub dw: C,
    pub kappa: f64,
}

impl ContactFormSample {
    /// theta on the real tangent vector with complex components (Z, W).
    pub fn pair(&self, zv: C, wv: C) -> f64 {
        2.0 * (self.dz * zv + self.dw * wv).re
    }

    /// theta on the generator i w d_w - i wbar d_wbar of the fibre rotation.
    pub fn on_fibre_generator(&self) -> f64 {
        self.pair(C::new(0.0, 0.0), C::new(0.0, 1.0) * self.w)
    }
}

/// theta = -i kappa (Gamma dz + dw/w) at a point of the unit circle bundle of
/// a metric with log h and connection coefficient Gamma = d_z log h.
pub fn contact_form<L: Fn(C) -> f64, G: Fn(C) -> C>(log_h: &L, gamma: &G, kappa: f64, z: C, w: C) -> Result<ContactFormSample> {
    let level = log_h(z).exp() * w.norm_sqr();
    if (level - 1.0).abs() > 1e-10 {
        return Err(CrError::Domain(format!("point is off the unit circle bundle (norm {level})")));
    }
    let mi = C::new(0.0, -kappa);
    Ok(ContactFormSample { z, w, dz: mi * gamma(z) * 0.5, dw: mi / w * 0.5, kappa })
}

/// Real 1-form kappa Im(Gamma dz + dw/w) on (x, y, u, v), which agrees with the
/// contact form on the circle bundle.
pub fn contact_form_real<G: Fn(C) -> C>(gamma: &G, kappa: f64, p: &[f64; 4]) -> [f64; 4] {
    let g = gamma(C::new(p[0], p[1]));
    let iw = C::new(1.0, 0.0) / C::new(p[2], p[3]);
    [kappa * g.im, kappa * g.re, kappa * iw.im, kappa * iw.re]
}

/// d theta of the real contact form from the second derivatives of log h:
/// only the (x, y) block survives, with value 2 kappa d_z d_zbar log h.
pub fn dtheta_analytic(ddbar_log_h: f64, kappa: f64) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m[(0, 1)] = 2.0 * kappa * ddbar_log_h;
    m[(1, 0)] = -m[(0, 1)];
    m
}

/// Exterior derivative of a real 1-form field by 4th-order central differences:
/// (d alpha)_{ij} = d_i alpha_j - d_j alpha_i.
pub fn exterior_derivative_fd<F: Fn(&[f64; 4]) -> [f64; 4]>(alpha: &F, p: &[f64; 4], step: f64) -> Matrix4<f64> {
    let mut d = Matrix4::zeros();
    let shifted = |k: usize, s: f64| {
        let mut q = *p;
        q[k] += s;
        alpha(&q)
    };
    let mut grad = [[0.0; 4]; 4];
    for (k, row) in grad.iter_mut().enumerate() {
        let (a2, a1, b1, b2) = (shifted(k, 2.0 * step), shifted(k, step), shifted(k, -step), shifted(k, -2.0 * step));
        for j in 0..4 {
            row[j] = (-a2[j] + 8.0 * a1[j] - 8.0 * b1[j] + b2[j]) / (12.0 * step);
        }
    }
    for i in 0..4 {
        for j in 0..4 {
            d[(i, j)] = grad[i][j] - grad[j][i];
        }
    }
    d
}

/// Pullback of the hyperbolic area form rho dx ^ dy to (x, y, u, v).
pub fn area_form_pullback(z: C) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m[(0, 1)] = rho(z);
    m[(1, 0)] = -rho(z);
    m
}

/// The model action (z, w) -> ((az+b)/(cz+d), u w / (cz+d)^e).
pub fn model_group_action(a: &MobiusElement, z: C, w: C, e: f64) -> Result<(C, C)> {
    if e < 0.0 || (e - e.round()).abs() > 1e-12 {
        return Err(CrError::Unsupported(format!("exponent {e} is not a nonnegative integer; (cz+d)^e is multivalued")));
    }
    let z1 = crate::mobius_fuchsian::mobius_apply(a, z)?;
    let den = a.denominator(z);
    Ok((z1, a.phase * w / den.powi(e.round() as i32)))
}

/// The invariant norm |w|^2 / (1 - |z|^2)^e.
pub fn model_norm(z: C, w: C, e: f64) -> f64 {
    w.norm_sqr() * (1.0 - z.norm_sqr()).powf(-e)
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureCertificate {
    pub scalar_curvature: Vec<f64>,
    pub torsion: f64,
    pub cartan: f64,
    pub identity_residual: f64,
    pub tolerance: f64,
}

/// Pseudohermitian curvature of the circle bundle through the reduction
/// R = K = -1, certified by the residual of the curvature identity at the
/// mesh vertices.
pub fn reduced_tw_curvature(ddbar_log_h: &dyn Fn(C) -> f64, e: f64, mesh: &SurfaceMesh) -> Result<CurvatureCertificate> {
    let tol = 1e-9;
    let pts: Vec<C> = mesh.representatives().iter().map(|&v| mesh.vertices[v]).collect();
    let res = verify_curvature_identity(Derivative::Analytic(ddbar_log_h), e, &pts);
    if !(res <= tol) {
        return Err(CrError::Certificate(format!("curvature identity residual {res:.3e} exceeds {tol:.1e}")));
    }
    Ok(CurvatureCertificate { scalar_curvature: vec![-1.0; pts.len()], torsion: 0.0, cartan: 0.0, identity_residual: res, tolerance: tol })
}

/// Max deck covariance defect over the group generators and the points.
pub fn group_covariance_defect(group: &FuchsianGroup, points: &[C]) -> f64 {
    let e = group.model_exponent();
    let mut worst: f64 = 0.0;
    for g in &group.generators {
        for &z in points {
            worst = worst.max(deck_covariance_defect(g, z, e).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_values() {
        assert_eq!(model_metric(C::new(0.0, 0.0), 3.0).unwrap(), 1.0);
        assert!((model_metric(C::new(0.5, 0.0), 1.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(model_metric(C::new(1.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn fractional_exponent_rejected() {
        let r = model_group_action(&MobiusElement::identity(), C::new(0.1, 0.0), C::new(1.0, 0.0), 0.5);
        assert!(matches!(r, Err(CrError::Unsupported(_))));
    }

    #[test]
    fn off_level_set_rejected() {
        let r = contact_form(&|z| model_log_metric(z, 1.0), &|z| model_gamma(z, 1.0), 2.0, C::new(0.2, 0.0), C::new(1.0, 0.0));
        assert!(matches!(r, Err(CrError::Domain(_))));
    }
}
