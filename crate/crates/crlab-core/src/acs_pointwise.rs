//! Pointwise algebra of C*-invariant almost complex structures on the total
//! space, in real coordinates (Re z, Im z, Re w, Im w).

use crate::error::{CrError, Result};
use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

const I: C = C { re: 0.0, im: 1.0 };

/// Coefficients of J = dz (x) (f d_z + g d_zbar + h w d_w + l wbar d_wbar) + i dw (x) d_w + conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlmostComplexRecord {
    pub f: C,
    pub g: C,
    pub h: C,
    pub l: C,
}

/// E = E11bar dz (x) d_zbar + E1star wbar dz (x) d_wbar + conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformationTensorE {
    pub e11bar: C,
    pub e1star: C,
}

/// Real matrix of a real-linear map given on complex components (Z, W).
pub fn real_matrix<F: Fn(C, C) -> (C, C)>(f: F) -> Matrix4<f64> {
    let basis = [(C::new(1.0, 0.0), C::new(0.0, 0.0)), (I, C::new(0.0, 0.0)), (C::new(0.0, 0.0), C::new(1.0, 0.0)), (C::new(0.0, 0.0), I)];
    let mut m = Matrix4::zeros();
    for (j, &(z, w)) in basis.iter().enumerate() {
        let (a, b) = f(z, w);
        m[(0, j)] = a.re;
        m[(1, j)] = a.im;
        m[(2, j)] = b.re;
        m[(3, j)] = b.im;
    }
    m
}

fn apply(m: &Matrix4<f64>, z: C, w: C) -> (C, C) {
    let v = m * Vector4::new(z.re, z.im, w.re, w.im);
    (C::new(v[0], v[1]), C::new(v[2], v[3]))
}

/// The reference structure: multiplication by i on both factors.
pub fn j_hat() -> Matrix4<f64> {
    real_matrix(|z, w| (I * z, I * w))
}

impl DeformationTensorE {
    pub fn zero() -> Self {
        Self { e11bar: C::new(0.0, 0.0), e1star: C::new(0.0, 0.0) }
    }

    /// Real matrix at fibre coordinate w.
    pub fn matrix(&self, w: C) -> Matrix4<f64> {
        let (a, b) = (self.e11bar, self.e1star);
        real_matrix(|z, _| ((a * z).conj(), (b * w.conj() * z).conj()))
    }

    pub fn from_matrix(m: &Matrix4<f64>, w: C) -> Self {
        let (z1, w1) = apply(m, C::new(1.0, 0.0), C::new(0.0, 0.0));
        Self { e11bar: z1.conj(), e1star: w1.conj() / w.conj() }
    }

    /// Operator norm of the real matrix at w.
    pub fn norm(&self, w: C) -> f64 {
        self.matrix(w).singular_values().max()
    }
}

/// Residuals of the four algebraic conditions (a)-(d).
pub fn constraint_residuals(r: &AlmostComplexRecord) -> [f64; 4] {
    let (f, g, h, l) = (r.f, r.g, r.h, r.l);
    [
        (f * f + g.norm_sqr() + 1.0).norm(),
        (g * (f + f.conj())).norm(),
        (h * (f + I) + g * l.conj()).norm(),
        (l * (f - I) + g * h.conj()).norm(),
    ]
}

impl AlmostComplexRecord {
    pub fn standard() -> Self {
        Self { f: I, g: C::new(0.0, 0.0), h: C::new(0.0, 0.0), l: C::new(0.0, 0.0) }
    }

    /// Real matrix at fibre coordinate w.
    pub fn matrix(&self, w: C) -> Matrix4<f64> {
        let (f, g, h, l) = (self.f, self.g, self.h, self.l);
        real_matrix(|z, ww| (f * z + g.conj() * z.conj(), w * (h * z + l.conj() * z.conj()) + I * ww))
    }

    /// Reads the record off a real matrix; fails if J d_w is not i d_w.
    pub fn from_matrix(m: &Matrix4<f64>, w: C) -> Result<Self> {
        let (zw, ww) = apply(m, C::new(0.0, 0.0), C::new(1.0, 0.0));
        if zw.norm() > 1e-10 || (ww - I).norm() > 1e-10 {
            return Err(CrError::Precondition("structure is not standard along the fibre".into()));
        }
        let (z1, w1) = apply(m, C::new(1.0, 0.0), C::new(0.0, 0.0));
        let (z2, w2) = apply(m, I, C::new(0.0, 0.0));
        let f = (z1 - I * z2) * 0.5;
        let gb = (z1 + I * z2) * 0.5;
        let h = (w1 - I * w2) / (w * 2.0);
        let lb = (w1 + I * w2) / (w * 2.0);
        Ok(Self { f, g: gb.conj(), h, l: lb.conj() })
    }

    /// Rejects records violating any of the four conditions beyond `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let r = constraint_residuals(self);
        if let Some(i) = r.iter().position(|&x| x > tol) {
            return Err(CrError::Precondition(format!("condition {} violated by {:.3e}", ["a", "b", "c", "d"][i], r[i])));
        }
        Ok(())
    }
}

/// ||J^2 + I|| and det J of a real matrix.
pub fn structure_defects(j: &Matrix4<f64>) -> (f64, f64) {
    ((j * j + Matrix4::identity()).abs().max(), j.determinant())
}

/// Orientation of a structure relative to the reference one: the sign of det(e_x, J e_x, e_u, J e_u).
pub fn orientation(j: &Matrix4<f64>) -> f64 {
    let ex = Vector4::new(1.0, 0.0, 0.0, 0.0);
    let eu = Vector4::new(0.0, 0.0, 1.0, 0.0);
    Matrix4::from_columns(&[ex, j * ex, eu, j * eu]).determinant().signum()
}

/// J = (I - E J^/2) J^ (I - E J^/2)^{-1}, evaluated at fibre coordinate w.
pub fn phi_matrix(e: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    let jh = j_hat();
    let a = Matrix4::identity() - e * jh * 0.5;
    let inv = a.try_inverse().ok_or_else(|| CrError::Domain("I - E J/2 is singular".into()))?;
    Ok(a * jh * inv)
}

/// E = 2 (J - J^)(J + J^)^{-1} J^.
pub fn phi_inverse_matrix(j: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    let jh = j_hat();
    let inv = (j + jh).try_inverse().ok_or_else(|| CrError::Domain("J + J^ is singular".into()))?;
    let s = (j + jh).singular_values().min();
    if s < 1e-12 {
        return Err(CrError::Domain("J is too far from the reference structure".into()));
    }
    Ok((j - jh) * inv * jh * 2.0)
}

pub fn phi_map(e: &DeformationTensorE) -> Result<AlmostComplexRecord> {
    let w = C::new(1.0, 0.0);
    if e.norm(w) >= 2.0 {
        return Err(CrError::Domain(format!("deformation norm {:.3} is not below 2", e.norm(w))));
    }
    AlmostComplexRecord::from_matrix(&phi_matrix(&e.matrix(w))?, w)
}

pub fn phi_inverse(j: &AlmostComplexRecord) -> Result<DeformationTensorE> {
    let w = C::new(1.0, 0.0);
    Ok(DeformationTensorE::from_matrix(&phi_inverse_matrix(&j.matrix(w))?, w))
}

/// ||E J^ + J^ E|| for the real matrix of E at w.
pub fn anticommutation_defect(e: &DeformationTensorE, w: C) -> f64 {
    let m = e.matrix(w);
    let jh = j_hat();
    (m * jh + jh * m).abs().max()
}

/// L_X J for a constant structure J and a vector field with real Jacobian DX:
/// J DX - DX J.
pub fn lie_derivative_constant(j: &Matrix4<f64>, dx: &Matrix4<f64>) -> Matrix4<f64> {
    j * dx - dx * j
}

/// Complex components (coefficient of dzbar (x) d_z, coefficient of dzbar (x) w d_w)
/// of a real endomorphism, evaluated at fibre coordinate w.
pub fn dzbar_components(m: &Matrix4<f64>, w: C) -> (C, C) {
    let (z1, w1) = apply(m, C::new(1.0, 0.0), C::new(0.0, 0.0));
    let (z2, w2) = apply(m, I, C::new(0.0, 0.0));
    ((z1 + I * z2) * 0.5, (w1 + I * w2) * 0.5 / w)
}

/// Nijenhuis tensor N(e_i, e_j) = [JX,JY] - [X,Y] - J[JX,Y] - J[X,JY] by
/// central differences of the structure field with the given step.
pub fn nijenhuis_fd<F: Fn(&[f64; 4]) -> Matrix4<f64>>(field: &F, p: &[f64; 4], i: usize, j: usize, step: f64) -> Result<[f64; 4]> {
    if step < 1e-10 {
        return Err(CrError::Precondition("finite-difference step below 1e-10 is ill-conditioned".into()));
    }
    let jm = field(p);
    let dj: Vec<Matrix4<f64>> = (0..4)
        .map(|k| {
            let mut a = *p;
            let mut b = *p;
            a[k] += step;
            b[k] -= step;
            (field(&a) - field(&b)) / (2.0 * step)
        })
        .collect();
    let col = |m: &Matrix4<f64>, c: usize| m.column(c).into_owned();
    let mut br = Vector4::zeros();
    for k in 0..4 {
        br += col(&dj[k], j) * jm[(k, i)] - col(&dj[k], i) * jm[(k, j)];
    }
    let n = br + jm * col(&dj[j], i) - jm * col(&dj[i], j);
    Ok([n[0], n[1], n[2], n[3]])
}

/// Largest Nijenhuis component over all coordinate pairs.
pub fn nijenhuis_max<F: Fn(&[f64; 4]) -> Matrix4<f64>>(field: &F, p: &[f64; 4], step: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            for v in nijenhuis_fd(field, p, i, j, step)? {
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// Structure field (x, y, u, v) -> Phi(E(z)) with E a function of z only.
pub fn invariant_structure<'a>(e: &'a dyn Fn(C) -> DeformationTensorE) -> impl Fn(&[f64; 4]) -> Matrix4<f64> + 'a {
    move |p: &[f64; 4]| {
        let z = C::new(p[0], p[1]);
        let w = C::new(p[2], p[3]);
        phi_matrix(&e(z).matrix(w)).expect("small deformation")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_maps_to_reference() {
        let r = phi_map(&DeformationTensorE::zero()).unwrap();
        assert!((r.f - I).norm() < 1e-15 && r.g.norm() < 1e-15 && r.h.norm() < 1e-15 && r.l.norm() < 1e-15);
    }

    #[test]
    fn reference_record_matrix() {
        let m = AlmostComplexRecord::standard().matrix(C::new(0.3, 0.4));
        assert!((m - j_hat()).abs().max() < 1e-15);
        assert!(phi_inverse(&AlmostComplexRecord::standard()).unwrap().e11bar.norm() < 1e-15);
    }

    #[test]
    fn large_deformation_rejected() {
        let e = DeformationTensorE { e11bar: C::new(2.5, 0.0), e1star: C::new(0.0, 0.0) };
        assert!(phi_map(&e).is_err());
    }

    #[test]
    fn tiny_step_rejected() {
        let f = |_: &[f64; 4]| j_hat();
        assert!(nijenhuis_fd(&f, &[0.0; 4], 0, 1, 1e-12).is_err());
        assert_eq!(nijenhuis_max(&f, &[0.1, 0.2, 0.3, 0.4], 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn record_conversion_both_ways() {
        let e = DeformationTensorE { e11bar: C::new(0.2, -0.1), e1star: C::new(-0.3, 0.25) };
        let w = C::new(0.7, -1.2);
        let j = phi_matrix(&e.matrix(w)).unwrap();
        let r = AlmostComplexRecord::from_matrix(&j, w).unwrap();
        assert!((r.matrix(w) - j).abs().max() < 1e-14);
        let back = DeformationTensorE::from_matrix(&e.matrix(w), w);
        assert!((back.e11bar - e.e11bar).norm() < 1e-15 && (back.e1star - e.e1star).norm() < 1e-15);
    }
}
