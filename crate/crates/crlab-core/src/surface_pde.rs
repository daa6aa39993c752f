//! Elliptic problems on the quotient surface: Poisson, the canonical metric
//! equation and the reduced CR Yamabe equation.
//!
//! Conventions: A is the P1 cotangent stiffness (positive semidefinite, so
//! A u ~ -M Delta u with Delta the negative semidefinite Laplace-Beltrami
//! operator) and M the lumped hyperbolic mass.

use crate::error::{CrError, Result};
use crate::line_bundle::HermitianMetricField;
use crate::linalg::{lowest_eigenpairs, Cholesky, SparseMat};
use crate::surface_mesh::{SectionField, SurfaceMesh};
use num_complex::Complex64 as C;
use serde::Serialize;

fn cot(a: C, b: C, c: C) -> f64 {
    // cotangent of the angle at a
    let (u, v) = (b - a, c - a);
    (u.re * v.re + u.im * v.im) / (u.re * v.im - u.im * v.re)
}

/// P1 cotangent stiffness on the quotient vertices, in disk coordinates.
pub fn stiffness(mesh: &SurfaceMesh) -> SparseMat {
    let mut t = Vec::with_capacity(12 * mesh.triangles.len());
    for tri in &mesh.triangles {
        let z = [mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]];
        for k in 0..3 {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            let w = 0.5 * cot(z[k], z[i], z[j]);
            let (a, b) = (mesh.dof(tri[i]), mesh.dof(tri[j]));
            t.push((a, a, C::new(w, 0.0)));
            t.push((b, b, C::new(w, 0.0)));
            t.push((a, b, C::new(-w, 0.0)));
            t.push((b, a, C::new(-w, 0.0)));
        }
    }
    SparseMat::from_triplets(mesh.n_quotient(), mesh.n_quotient(), t)
}

/// Number of interior angles above pi/2 (their cotangent weights are negative).
pub fn obtuse_angle_count(mesh: &SurfaceMesh) -> usize {
    mesh.triangles
        .iter()
        .map(|tri| {
            let z = [mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]];
            (0..3).filter(|&k| cot(z[k], z[(k + 1) % 3], z[(k + 2) % 3]) < -1e-12).count()
        })
        .sum()
}

pub fn lumped_mass_matrix(mesh: &SurfaceMesh) -> SparseMat {
    SparseMat::diagonal(&mesh.lumped_mass())
}

fn re(v: &[C]) -> Vec<f64> {
    v.iter().map(|z| z.re).collect()
}

fn cx(v: &[f64]) -> Vec<C> {
    v.iter().map(|&x| C::new(x, 0.0)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves A x = b with x[pin] = 0; b must be orthogonal to constants.
fn pinned_solve(a: &SparseMat, b: &[f64], pin: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let keep: Vec<usize> = (0..n).filter(|&i| i != pin).collect();
    let sub = a.submatrix(&keep);
    let rhs: Vec<C> = keep.iter().map(|&i| C::new(b[i], 0.0)).collect();
    let x = Cholesky::new(&sub)?.solve(&rhs);
    let mut out = vec![0.0; n];
    for (k, &i) in keep.iter().enumerate() {
        out[i] = x[k].re;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct PoissonProblem<'a> {
    pub mesh: &'a SurfaceMesh,
    pub rhs: SectionField,
    pub normalization: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveLog {
    pub solver: String,
    pub iterations: usize,
    pub residual: f64,
}

/// Solves the weak problem -1/2 A u = b with u pinned. `b` is the assembled
/// right-hand side; its sum is the integral of the source.
pub fn solve_weak_poisson(mesh: &SurfaceMesh, b: &[f64], pin: usize) -> Result<(Vec<f64>, SolveLog)> {
    let area: f64 = mesh.lumped_mass().iter().sum();
    let integral: f64 = b.iter().sum();
    let tolerance = 1e-8 * area;
    if integral.abs() > tolerance {
        return Err(CrError::Solvability { integral, tolerance });
    }
    let a = stiffness(mesh);
    let rhs: Vec<f64> = b.iter().map(|x| -2.0 * x).collect();
    let u = pinned_solve(&a, &rhs, pin)?;
    let au = re(&a.mul_vec(&cx(&u)));
    let r: Vec<f64> = au.iter().zip(b).map(|(x, y)| -0.5 * x - y).collect();
    let bn = norm(b);
    let residual = if bn == 0.0 { norm(&r) } else { norm(&r) / bn };
    Ok((u, SolveLog { solver: "poisson".into(), iterations: 1, residual }))
}

/// u with 1/2 Delta u = rhs weakly, pinned to 0 at the normalization vertex.
pub fn solve_poisson(p: &PoissonProblem) -> Result<SectionField> {
    if p.rhs.weight != (0, 0) {
        return Err(CrError::Type("Poisson source must be a function".into()));
    }
    let m = p.mesh.lumped_mass();
    let b: Vec<f64> = p.rhs.values.iter().zip(&m).map(|(s, w)| s.re * w).collect();
    let (u, _) = solve_weak_poisson(p.mesh, &b, p.mesh.dof(p.normalization))?;
    Ok(SectionField { weight: (0, 0), values: cx(&u) })
}

/// log(lambda) with i d dbar log lambda = (m/(2g-2)) omega - i d dbar log h0,
/// pinned to 0 at vertex `pin`. The Laplacian of log h0 is applied through its
/// deviation from the model metric, which is a global function.
pub fn solve_hermitian_metric(mesh: &SurfaceMesh, log_h0: &HermitianMetricField, m: u32, pin: usize) -> Result<SectionField> {
    let c = m as f64 / (2.0 * mesh.genus as f64 - 2.0);
    let delta = re(&log_h0.deviation_from_model(mesh).values);
    let mass = mesh.lumped_mass();
    let ad = re(&stiffness(mesh).mul_vec(&cx(&delta)));
    let b: Vec<f64> = mass.iter().zip(&ad).map(|(w, a)| (c - 0.5 * log_h0.e) * w + 0.5 * a).collect();
    let (u, _) = solve_weak_poisson(mesh, &b, mesh.dof(pin))?;
    Ok(SectionField { weight: (0, 0), values: cx(&u) })
}

#[derive(Debug, Clone)]
pub struct YamabeProblem<'a> {
    pub mesh: &'a SurfaceMesh,
    pub r_hat: Vec<f64>,
    pub r_target: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct YamabeSolution {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
}

/// Residual 4 A u + M (R^ u) - R M u^3 of the reduced Yamabe equation.
pub fn yamabe_residual(a: &SparseMat, mass: &[f64], r_hat: &[f64], r_target: f64, u: &[f64]) -> Vec<f64> {
    let au = re(&a.mul_vec(&cx(u)));
    (0..u.len()).map(|i| 4.0 * au[i] + mass[i] * (r_hat[i] * u[i] - r_target * u[i].powi(3))).collect()
}

/// Damped Newton iteration with halving line search on the residual norm.
pub fn yamabe_newton(p: &YamabeProblem, u0: &[f64], max_iters: usize) -> Result<YamabeSolution> {
    if u0.iter().any(|&x| x <= 0.0) {
        return Err(CrError::Precondition("initial field must be positive".into()));
    }
    let a = stiffness(p.mesh);
    let mass = p.mesh.lumped_mass();
    let n = u0.len();
    let mut u = u0.to_vec();
    let scale = norm(&re(&SparseMat::diagonal(&mass).mul_vec(&cx(&u)))).max(1e-300);
    let mut r = yamabe_residual(&a, &mass, &p.r_hat, p.r_target, &u);
    let mut history = vec![norm(&r) / scale];
    for it in 0..max_iters {
        let rn = norm(&r);
        if rn / scale < 1e-10 {
            return Ok(YamabeSolution { u, iterations: it, residual: rn / scale, history });
        }
        let diag: Vec<f64> = (0..n).map(|i| mass[i] * (p.r_hat[i] - 3.0 * p.r_target * u[i] * u[i])).collect();
        let jac = a.scale(4.0).add(&SparseMat::diagonal(&diag));
        let neg: Vec<C> = r.iter().map(|&x| C::new(-x, 0.0)).collect();
        let du = re(&Cholesky::new(&jac).map_err(|_| CrError::Linalg("Yamabe Jacobian is not positive definite".into()))?.solve(&neg));
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(x, d)| x + t * d).collect();
            if trial.iter().all(|&x| x > 0.0) {
                let rt = yamabe_residual(&a, &mass, &p.r_hat, p.r_target, &trial);
                if norm(&rt) < rn {
                    u = trial;
                    r = rt;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-10 {
                return Err(CrError::NonConvergence { iterations: it + 1, residual: rn / scale });
            }
        }
        history.push(norm(&r) / scale);
    }
    let res = norm(&r) / scale;
    if res < 1e-10 {
        return Ok(YamabeSolution { u, iterations: max_iters, residual: res, history });
    }
    Err(CrError::NonConvergence { iterations: max_iters, residual: res })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundCheck {
    pub pass: bool,
    /// min u - sqrt((-R^)_min)
    pub lower_margin: f64,
    /// sqrt((-R^)_max) - max u
    pub upper_margin: f64,
}

pub fn maximum_principle_bounds(u: &[f64], r_hat: &[f64]) -> Result<BoundCheck> {
    if r_hat.iter().any(|&r| r >= 0.0) {
        return Err(CrError::Precondition("R^ must be negative everywhere".into()));
    }
    let neg_min = r_hat.iter().map(|r| -r).fold(f64::INFINITY, f64::min);
    let neg_max = r_hat.iter().map(|r| -r).fold(0.0, f64::max);
    let umin = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let umax = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lower_margin = umin - neg_min.sqrt();
    let upper_margin = neg_max.sqrt() - umax;
    Ok(BoundCheck { pass: lower_margin >= -1e-6 && upper_margin >= -1e-6, lower_margin, upper_margin })
}

/// Dimension of the kernel of the stiffness: eigenvalues of (A, M) below
/// 1e-8 times the first nonzero one.
pub fn laplacian_kernel_dim(mesh: &SurfaceMesh) -> Result<(usize, Vec<f64>)> {
    let r = lowest_eigenpairs(&stiffness(mesh), &lumped_mass_matrix(mesh), 4, 3)?;
    let top = r.values.last().copied().unwrap_or(1.0).abs();
    Ok((r.values.iter().filter(|v| v.abs() < 1e-8 * top).count(), r.values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stiffness_kills_constants() {
        let mesh = SurfaceMesh::regular(2, 1).unwrap();
        let a = stiffness(&mesh);
        let one = vec![C::new(1.0, 0.0); mesh.n_quotient()];
        assert!(a.mul_vec(&one).iter().all(|x| x.norm() < 1e-12));
        assert!(a.hermitian_defect() < 1e-14);
    }

    #[test]
    fn nonzero_mean_is_not_solvable() {
        let mesh = SurfaceMesh::regular(2, 1).unwrap();
        let rhs = SectionField::constant(&mesh, C::new(0.01, 0.0));
        let r = solve_poisson(&PoissonProblem { mesh: &mesh, rhs, normalization: 0 });
        assert!(matches!(r, Err(CrError::Solvability { .. })));
    }

    #[test]
    fn bounds_fail_above() {
        let c = maximum_principle_bounds(&[2.0, 2.0], &[-1.0, -1.0]).unwrap();
        assert!(!c.pass && (c.upper_margin + 1.0).abs() < 1e-15);
        assert!(maximum_principle_bounds(&[1.0], &[0.0]).is_err());
    }
}
