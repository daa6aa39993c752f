//! The discrete deformation complex: the gauge operator P from infinitesimal
//! bundle automorphisms V = (v1, v) to deformation tensors, its adjoint P*,
//! Delta = P*P, kernel counts with a spectral-gap policy, and the orthogonal
//! splitting of deformations.
//!
//! Deformation tensors are stored through their barred components
//! (E_1bar^1 with weight (-1,1), E_1bar with weight (0,1)), the complex
//! conjugates of (E_1^1bar, E_1). With rho = 4/(1-|z|^2)^2:
//!
//!   P(V)  = 2i (dbar v1, dbar v + mu rho v1)
//!   P*(F) = 2i (rho^-2 d(rho F_a) - mu rho^-1 F_b, rho^-1 d F_b)
//!
//! with norms |v1|^2 rho + |v|^2 and |E_a|^2 + |E_b|^2 / rho against dvol.

use crate::acs_pointwise::{dzbar_components, j_hat, lie_derivative_constant};
use crate::error::{CrError, Result};
use crate::fem::{assemble, AssembledOp, Coeff, FirstOrderOp, LagrangeSpace};
use crate::linalg::{lowest_eigenpairs, Cholesky, SparseMat};
use crate::line_bundle::model_gamma;
use crate::mobius_fuchsian::MobiusElement;
use crate::surface_mesh::{rho, SectionField, SurfaceMesh};
use nalgebra::{DMatrix, DVector, Matrix4};
use num_complex::Complex64 as C;
use serde::Serialize;
use std::collections::BTreeSet;

const I2: C = C { re: 0.0, im: 2.0 };
const ZERO: C = C { re: 0.0, im: 0.0 };

pub const V1_WEIGHT: (i32, i32) = (-1, 0);
pub const V_WEIGHT: (i32, i32) = (0, 0);
pub const EA_WEIGHT: (i32, i32) = (-1, 1);
pub const EB_WEIGHT: (i32, i32) = (0, 1);

/// Required ratio between consecutive singular values at the kernel edge.
pub const GAP_RATIO: f64 = 100.0;

/// Infinitesimal automorphism (v1, v) as coefficient fields of a Lagrange space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeformationPair {
    pub v1: SectionField,
    pub v: SectionField,
}

/// Cotangent-type pair (F_a, F_b) as coefficient fields of a Lagrange space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CotangentPair {
    pub fa: SectionField,
    pub fb: SectionField,
}

/// Values of a two-component field at the quadrature points, interleaved
/// point by point as (first, second).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointPair {
    pub weights: [(i32, i32); 2],
    pub values: Vec<C>,
}

impl PointPair {
    pub fn component(&self, k: usize) -> Vec<C> {
        self.values.iter().skip(k).step_by(2).copied().collect()
    }

    pub fn scale(&self, s: C) -> Self {
        Self { weights: self.weights, values: self.values.iter().map(|v| v * s).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { weights: self.weights, values: self.values.iter().zip(&o.values).map(|(a, b)| a - b).collect() }
    }
}

/// Smooth connection data: Gamma = d_z log h at the quotient vertices and the
/// certified constant mu = -rho^-1 d_z conj(Gamma).
#[derive(Debug, Clone, Serialize)]
pub struct ConnectionField {
    pub gamma: Vec<C>,
    pub mu: f64,
    pub mu_relative_spread: f64,
}

fn adjacency(mesh: &SurfaceMesh) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); mesh.vertices.len()];
    for t in &mesh.triangles {
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    adj[t[a]].insert(t[b]);
                }
            }
        }
    }
    adj
}

/// d_z of sampled values at vertex v from a quartic least-squares fit over
/// its 2-ring in disk coordinates.
fn fitted_dz(mesh: &SurfaceMesh, adj: &[BTreeSet<usize>], values: &[C], v: usize) -> Option<C> {
    let mut ring: BTreeSet<usize> = adj[v].clone();
    for &u in &adj[v] {
        ring.extend(adj[u].iter().copied());
    }
    ring.remove(&v);
    if ring.len() < 16 {
        return None;
    }
    let z0 = mesh.vertices[v];
    let h = ring.iter().map(|&u| (mesh.vertices[u] - z0).norm()).fold(0.0, f64::max);
    let rows: Vec<usize> = std::iter::once(v).chain(ring.iter().copied()).collect();
    let powers: Vec<(i32, i32)> = (0..=4).flat_map(|k| (0..=k).map(move |j| (k - j, j))).collect();
    let a = DMatrix::from_fn(rows.len(), powers.len(), |r, c| {
        let d = (mesh.vertices[rows[r]] - z0) / h;
        d.powi(powers[c].0) * d.conj().powi(powers[c].1)
    });
    let b = DVector::from_fn(rows.len(), |r, _| values[rows[r]]);
    let sol = a.svd(true, true).solve(&b, 1e-12).ok()?;
    Some(sol[1] / h)
}

/// mu = -rho^-1 d_z conj(Gamma) at every interior quotient vertex; returns the
/// mean and the relative standard deviation.
pub fn mu_constant(mesh: &SurfaceMesh, gamma_at: &dyn Fn(C) -> C) -> Result<(f64, f64)> {
    let adj = adjacency(mesh);
    let conj_gamma: Vec<C> = mesh.vertices.iter().map(|&z| gamma_at(z).conj()).collect();
    let mut class_size = vec![0usize; mesh.ident.n_classes];
    for &c in &mesh.ident.class {
        class_size[c] += 1;
    }
    let inside = |v: usize| class_size[mesh.ident.class[v]] == 1;
    // vertices whose 2-ring stays off the polygon boundary
    let interior: Vec<usize> = (0..mesh.vertices.len())
        .filter(|&v| inside(v) && adj[v].iter().all(|&u| inside(u) && adj[u].iter().all(|&w| inside(w))))
        .collect();
    let vals: Vec<f64> = interior
        .iter()
        .filter_map(|&v| fitted_dz(mesh, &adj, &conj_gamma, v).map(|d| -(d / rho(mesh.vertices[v])).re))
        .collect();
    if vals.is_empty() {
        return Err(CrError::Precondition("mesh has no interior vertices with a full 2-ring".into()));
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / vals.len() as f64;
    Ok((mean, var.sqrt() / mean.abs()))
}

/// Connection of the model metric with mu certified from the discrete fit.
pub fn model_connection(mesh: &SurfaceMesh, e: f64, tolerance: f64) -> Result<ConnectionField> {
    let g = |z: C| model_gamma(z, e);
    let (mu, spread) = mu_constant(mesh, &g)?;
    if spread > tolerance {
        return Err(CrError::Certificate(format!("mu spread {spread:.3e} exceeds {tolerance:.1e}")));
    }
    let gamma = mesh.representatives().iter().map(|&v| g(mesh.vertices[v])).collect();
    Ok(ConnectionField { gamma, mu, mu_relative_spread: spread })
}

/// E_1 = E_1* + E_1^1bar conj(Gamma), vertexwise.
pub fn gauge_tensor(e11bar: &SectionField, e1star: &SectionField, conn: &ConnectionField) -> Result<SectionField> {
    if e11bar.weight != (1, -1) || e1star.values.len() != e11bar.values.len() || conn.gamma.len() != e11bar.values.len() {
        return Err(CrError::Type("gauge_tensor needs E_1^1bar of weight (1,-1) and matching fields".into()));
    }
    let values = e11bar.values.iter().zip(&e1star.values).zip(&conn.gamma).map(|((a, s), g)| s + a * g.conj()).collect();
    Ok(SectionField { weight: (1, 0), values })
}

/// Deck consistency of the gauged component under the model trivialization
/// change (z, w) -> (g z, (cz+d)^-e w): transforms (E_1^1bar, E_1*) by the
/// tensor laws and compares the gauged result with E_1 / g'.
pub fn gauge_deck_defect(g: &MobiusElement, z: C, e11bar: C, e1star: C, e: f64) -> f64 {
    let hp = g.derivative(z);
    let glog = -g.c * e / g.denominator(z);
    let t11 = e11bar * hp.conj() / hp;
    let tstar = e1star / hp + e11bar / hp * glog.conj();
    let gamma_t = model_gamma(g.eval(z), e);
    let gamma = model_gamma(z, e);
    let law = (gamma - (gamma_t * hp + glog)).norm();
    let lhs = tstar + t11 * gamma_t.conj();
    let rhs = (e1star + e11bar * gamma.conj()) / hp;
    law.max((lhs - rhs).norm())
}

/// A kernel count with the spectrum that certifies it.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumCertificate {
    pub singular_values: Vec<f64>,
    /// Real dimension (twice the number of small complex singular values).
    pub count_below: usize,
    pub gap_ratio: f64,
    pub threshold: f64,
    pub required_ratio: f64,
}

impl SpectrumCertificate {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,singular_value\n");
        for (i, v) in self.singular_values.iter().enumerate() {
            s.push_str(&format!("{i},{v:.12e}\n"));
        }
        s
    }
}

/// Largest relative jump in a sorted list of singular values.
pub fn gap_policy(sv: &[f64], required: f64) -> Result<SpectrumCertificate> {
    let mut best = (0usize, 0.0f64);
    for i in 0..sv.len().saturating_sub(1) {
        let ratio = sv[i + 1] / sv[i].max(1e-300);
        if ratio > best.1 {
            best = (i + 1, ratio);
        }
    }
    if best.1 < required {
        return Err(CrError::Inconclusive { gap_ratio: best.1, required, spectrum: sv.to_vec() });
    }
    let k = best.0;
    Ok(SpectrumCertificate {
        singular_values: sv.to_vec(),
        count_below: 2 * k,
        gap_ratio: best.1,
        threshold: (sv[k - 1].max(1e-300) * sv[k]).sqrt(),
        required_ratio: required,
    })
}

/// Singular values of an operator from the pencil (A^H W A, M) and their gap count.
pub fn kernel_dimension(normal: &SparseMat, mass: &SparseMat, n_values: usize, seed: u64, required: f64) -> Result<SpectrumCertificate> {
    let r = lowest_eigenpairs(normal, mass, n_values, seed)?;
    let sv: Vec<f64> = r.values.iter().map(|v| v.max(0.0).sqrt()).collect();
    gap_policy(&sv, required)
}

/// Real dimension of the discrete kernel of dbar on weight-(q,0) sections.
pub fn holomorphic_section_dim(mesh: &SurfaceMesh, q: i32, degree: usize, seed: u64) -> Result<SpectrumCertificate> {
    if !(1..=2).contains(&q) {
        return Err(CrError::Unsupported(format!("q = {q}; only 1 and 2 are supported")));
    }
    let space = LagrangeSpace::new(mesh, degree)?;
    let ind = move |z: C| rho(z).powi(-q);
    let outd = move |z: C| rho(z).powi(-(q + 1));
    let co = |_: C, _: usize, _: usize| Coeff { dzb: C::new(1.0, 0.0), ..Default::default() };
    let op = FirstOrderOp { in_weights: vec![(q, 0)], in_density: vec![&ind], out_density: vec![&outd], coeff: &co };
    let a = assemble(&space, &op);
    let g = mesh.genus;
    let expected_complex = if q == 1 { g } else { 3 * g - 3 };
    kernel_dimension(&a.normal, &a.mass, 2 * expected_complex + 2, seed, GAP_RATIO)
}

/// The assembled complex on one Lagrange space.
pub struct DeformationComplex {
    pub space: LagrangeSpace,
    pub mu: f64,
    pub p: AssembledOp,
    pub p_star: AssembledOp,
    pub genus: usize,
}

fn one(_: C) -> f64 {
    1.0
}

fn inv_rho(z: C) -> f64 {
    1.0 / rho(z)
}

impl DeformationComplex {
    pub fn new(mesh: &SurfaceMesh, degree: usize, mu: f64) -> Result<Self> {
        let space = LagrangeSpace::new(mesh, degree)?;
        let pc = move |z: C, o: usize, i: usize| match (o, i) {
            (0, 0) | (1, 1) => Coeff { dzb: I2, ..Default::default() },
            (1, 0) => Coeff { val: I2 * (mu * rho(z)), ..Default::default() },
            _ => Coeff::default(),
        };
        let p_op = FirstOrderOp {
            in_weights: vec![V1_WEIGHT, V_WEIGHT],
            in_density: vec![&rho, &one],
            out_density: vec![&one, &inv_rho],
            coeff: &pc,
        };
        let p = assemble(&space, &p_op);
        let sc = move |z: C, o: usize, i: usize| {
            let ir = 1.0 / rho(z);
            match (o, i) {
                (0, 0) => Coeff { dz: I2 * ir, val: I2 * ir * (z.conj() * 2.0 / (1.0 - z.norm_sqr())), ..Default::default() },
                (0, 1) => Coeff { val: -I2 * (mu * ir), ..Default::default() },
                (1, 1) => Coeff { dz: I2 * ir, ..Default::default() },
                _ => Coeff::default(),
            }
        };
        let s_op = FirstOrderOp {
            in_weights: vec![EA_WEIGHT, EB_WEIGHT],
            in_density: vec![&one, &inv_rho],
            out_density: vec![&rho, &one],
            coeff: &sc,
        };
        let p_star = assemble(&space, &s_op);
        Ok(Self { space, mu, p, p_star, genus: mesh.genus })
    }

    pub fn n_dofs(&self) -> usize {
        self.space.n_dofs()
    }

    fn check_len(&self, f: &SectionField) -> Result<()> {
        if f.values.len() != self.n_dofs() {
            return Err(CrError::Precondition(format!("field has {} values, space has {} dofs", f.values.len(), self.n_dofs())));
        }
        Ok(())
    }

    fn pair_vector(&self, a: &SectionField, b: &SectionField, wa: (i32, i32), wb: (i32, i32)) -> Result<Vec<C>> {
        if a.weight != wa || b.weight != wb {
            return Err(CrError::Type(format!("expected weights {wa:?}, {wb:?}, got {:?}, {:?}", a.weight, b.weight)));
        }
        self.check_len(a)?;
        self.check_len(b)?;
        Ok(a.values.iter().chain(&b.values).copied().collect())
    }

    fn split_vector(&self, x: &[C], wa: (i32, i32), wb: (i32, i32)) -> (SectionField, SectionField) {
        let n = self.n_dofs();
        (SectionField { weight: wa, values: x[..n].to_vec() }, SectionField { weight: wb, values: x[n..].to_vec() })
    }

    pub fn pair_from_vector(&self, x: &[C]) -> DeformationPair {
        let (v1, v) = self.split_vector(x, V1_WEIGHT, V_WEIGHT);
        DeformationPair { v1, v }
    }

    pub fn pair_to_vector(&self, v: &DeformationPair) -> Result<Vec<C>> {
        self.pair_vector(&v.v1, &v.v, V1_WEIGHT, V_WEIGHT)
    }

    /// Nodal interpolants of smooth disk functions.
    pub fn interpolate_pair(&self, v1: &dyn Fn(C) -> C, v: &dyn Fn(C) -> C) -> DeformationPair {
        DeformationPair {
            v1: SectionField { weight: V1_WEIGHT, values: self.space.interpolate(v1) },
            v: SectionField { weight: V_WEIGHT, values: self.space.interpolate(v) },
        }
    }

    pub fn interpolate_cotangent(&self, fa: &dyn Fn(C) -> C, fb: &dyn Fn(C) -> C) -> CotangentPair {
        CotangentPair {
            fa: SectionField { weight: EA_WEIGHT, values: self.space.interpolate(fa) },
            fb: SectionField { weight: EB_WEIGHT, values: self.space.interpolate(fb) },
        }
    }

    /// Samples a smooth deformation tensor at the quadrature points.
    pub fn sample_e(&self, fa: &dyn Fn(C) -> C, fb: &dyn Fn(C) -> C) -> PointPair {
        let (z, _) = self.space.points();
        PointPair { weights: [EA_WEIGHT, EB_WEIGHT], values: z.iter().flat_map(|&p| [fa(p), fb(p)]).collect() }
    }

    /// Values of V at the quadrature points.
    pub fn eval_pair(&self, v: &DeformationPair) -> Result<PointPair> {
        self.pair_to_vector(v)?;
        let a = self.space.eval_points(&v.v1.values, V1_WEIGHT);
        let b = self.space.eval_points(&v.v.values, V_WEIGHT);
        Ok(PointPair { weights: [V1_WEIGHT, V_WEIGHT], values: a.iter().zip(&b).flat_map(|(x, y)| [*x, *y]).collect() })
    }

    pub fn apply_p(&self, v: &DeformationPair) -> Result<PointPair> {
        let x = self.pair_to_vector(v)?;
        Ok(PointPair { weights: [EA_WEIGHT, EB_WEIGHT], values: self.p.apply(&x) })
    }

    pub fn apply_p_star(&self, f: &CotangentPair) -> Result<PointPair> {
        let x = self.pair_vector(&f.fa, &f.fb, EA_WEIGHT, EB_WEIGHT)?;
        Ok(PointPair { weights: [V1_WEIGHT, V_WEIGHT], values: self.p_star.apply(&x) })
    }

    /// Integral of E_a conj(F_a) + rho^-1 E_b conj(F_b) against dvol.
    pub fn inner_product_e(&self, e: &PointPair, f: &PointPair) -> Result<C> {
        if e.weights != [EA_WEIGHT, EB_WEIGHT] || f.weights != e.weights {
            return Err(CrError::Type("inner_product_e needs deformation-tensor samples".into()));
        }
        Ok(self.p.out_inner(&e.values, &f.values))
    }

    /// Integral of rho v1 conj(u1) + v conj(u) against dvol.
    pub fn inner_product_v(&self, v: &DeformationPair, u: &DeformationPair) -> Result<C> {
        Ok(self.p.in_inner(&self.pair_to_vector(v)?, &self.pair_to_vector(u)?))
    }

    /// The same inner product for point samples.
    pub fn inner_product_v_points(&self, v: &PointPair, u: &PointPair) -> Result<C> {
        if v.weights != [V1_WEIGHT, V_WEIGHT] || u.weights != v.weights {
            return Err(CrError::Type("inner_product_v_points needs automorphism samples".into()));
        }
        Ok(self.p_star.out_inner(&v.values, &u.values))
    }

    /// Weak form of Delta = P*P: the matrix of (V, U) -> <PV, PU>.
    pub fn delta(&self) -> &SparseMat {
        &self.p.normal
    }

    /// Kernel of P* (complex dimension 4g-3 expected).
    pub fn p_star_kernel(&self, seed: u64) -> Result<SpectrumCertificate> {
        let n = 2 * (4 * self.genus - 3) + 2;
        kernel_dimension(&self.p_star.normal, &self.p_star.mass, n, seed, GAP_RATIO)
    }

    /// Kernel of Delta, i.e. of P (the constants v expected).
    pub fn delta_kernel(&self, seed: u64) -> Result<SpectrumCertificate> {
        kernel_dimension(&self.p.normal, &self.p.mass, 6, seed, GAP_RATIO)
    }

    /// Discrete adjoint M^-1 P^H W applied to point samples of E.
    pub fn discrete_adjoint(&self, e: &PointPair) -> Result<Vec<C>> {
        let rhs = self.p.adjoint_weighted(&e.values);
        Ok(Cholesky::new(&self.p.mass)?.solve(&rhs))
    }

    /// Orthogonal splitting E = E0 + P(V) with the discrete adjoint of P
    /// annihilating E0. V is normalized by v = 0 at the first dof.
    pub fn split_deformation(&self, e: &PointPair) -> Result<SplitResult> {
        if e.weights != [EA_WEIGHT, EB_WEIGHT] || e.values.len() != self.p.matrix.nrows {
            return Err(CrError::Type("split needs deformation-tensor samples on this space".into()));
        }
        let n = self.n_dofs();
        let pin = n;
        let keep: Vec<usize> = (0..2 * n).filter(|&i| i != pin).collect();
        let rhs_full = self.p.adjoint_weighted(&e.values);
        let rhs: Vec<C> = keep.iter().map(|&i| rhs_full[i]).collect();
        let sol = Cholesky::new(&self.p.normal.submatrix(&keep))?.solve(&rhs);
        let mut x = vec![ZERO; 2 * n];
        for (k, &i) in keep.iter().enumerate() {
            x[i] = sol[k];
        }
        let pv = PointPair { weights: e.weights, values: self.p.apply(&x) };
        let e0 = e.sub(&pv);
        let v = self.pair_from_vector(&x);
        let en = self.inner_product_e(e, e)?.re.sqrt();
        let e0n = self.inner_product_e(&e0, &e0)?.re.sqrt();
        let pvn = self.inner_product_e(&pv, &pv)?.re.sqrt();
        let adj = self.discrete_adjoint(&e0)?;
        let adj_norm = self.p.in_inner(&adj, &adj).re.max(0.0).sqrt();
        let ortho = self.inner_product_e(&e0, &pv)?.norm();
        Ok(SplitResult {
            e0,
            v,
            kernel_residual: adj_norm / en.max(1e-300),
            orthogonality: if e0n * pvn > 0.0 { ortho / (e0n * pvn) } else { 0.0 },
            e_norm: en,
            e0_norm: e0n,
        })
    }

    /// Random point samples of a deformation tensor.
    pub fn random_e<R: rand::Rng>(&self, rng: &mut R) -> PointPair {
        let values = (0..self.p.matrix.nrows).map(|_| C::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        PointPair { weights: [EA_WEIGHT, EB_WEIGHT], values }
    }

    pub fn random_pair<R: rand::Rng>(&self, rng: &mut R) -> DeformationPair {
        let x: Vec<C> = (0..2 * self.n_dofs()).map(|_| C::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        self.pair_from_vector(&x)
    }

    /// |<P V, F> - <V, P* F>| / (|V| |F|) for smooth V and F given as disk
    /// functions, with F sampled exactly on the left and interpolated on the right.
    pub fn adjointness_defect(&self, v: (&dyn Fn(C) -> C, &dyn Fn(C) -> C), f: (&dyn Fn(C) -> C, &dyn Fn(C) -> C)) -> Result<f64> {
        let vh = self.interpolate_pair(v.0, v.1);
        let fs = self.sample_e(f.0, f.1);
        let lhs = self.inner_product_e(&self.apply_p(&vh)?, &fs)?;
        let fh = self.interpolate_cotangent(f.0, f.1);
        let vs = self.eval_pair(&vh)?;
        let rhs = self.inner_product_v_points(&vs, &self.apply_p_star(&fh)?)?;
        let vn = self.inner_product_v_points(&vs, &vs)?.re.sqrt();
        let fn_ = self.inner_product_e(&fs, &fs)?.re.sqrt();
        Ok((lhs - rhs).norm() / (vn * fn_))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitResult {
    pub e0: PointPair,
    pub v: DeformationPair,
    /// |M^-1 P^H W E0| / |E|
    pub kernel_residual: f64,
    /// |<E0, P V>| / (|E0| |P V|)
    pub orthogonality: f64,
    pub e_norm: f64,
    pub e0_norm: f64,
}

/// Compactly supported smooth bump exp(1 - 1/(1 - |z-c|^2/r^2)).
pub fn bump(z: C, c: C, r: f64) -> f64 {
    let s = (z - c).norm_sqr() / (r * r);
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s)).exp()
    }
}

/// d_zbar by 4th-order central differences.
fn dzbar_fd(f: &dyn Fn(C) -> C, z: C, h: f64) -> C {
    let d = |dir: C| (-f(z + dir * 2.0) + f(z + dir) * 8.0 - f(z - dir) * 8.0 + f(z - dir * 2.0)) / (12.0 * h);
    let (fx, fy) = (d(C::new(h, 0.0)), d(C::new(0.0, h)));
    (fx + C::new(0.0, 1.0) * fy) * 0.5
}

/// Max difference between P(V) from its formula and the gauged Lie derivative
/// L_X J^ of X = 2 Re(v1 d_z + v* w d_w), computed from central differences of
/// X on the total space. Gamma is the model connection with exponent e.
pub fn lie_derivative_check(v1: &dyn Fn(C) -> C, vstar: &dyn Fn(C) -> C, e: f64, mu: f64, points: &[C], step: f64) -> f64 {
    let gamma = |z: C| model_gamma(z, e);
    let v = |z: C| vstar(z) + v1(z) * gamma(z);
    let jh = j_hat();
    let w0 = C::new(1.0, 0.0);
    let field = |p: [f64; 4]| {
        let z = C::new(p[0], p[1]);
        let w = C::new(p[2], p[3]);
        let a = v1(z);
        let b = vstar(z) * w;
        [a.re, a.im, b.re, b.im]
    };
    let mut worst: f64 = 0.0;
    for &z in points {
        let p0 = [z.re, z.im, w0.re, w0.im];
        let mut dx = Matrix4::zeros();
        for k in 0..4 {
            let (mut a, mut b) = (p0, p0);
            a[k] += step;
            b[k] -= step;
            let (fa, fb) = (field(a), field(b));
            for r in 0..4 {
                dx[(r, k)] = (fa[r] - fb[r]) / (2.0 * step);
            }
        }
        let l = lie_derivative_constant(&jh, &dx);
        let (c1, c2) = dzbar_components(&l, w0);
        let lie = [c1, c2 + c1 * gamma(z)];
        let formula = [I2 * dzbar_fd(v1, z, step), I2 * (dzbar_fd(&v, z, step) + v1(z) * (mu * rho(z)))];
        for k in 0..2 {
            worst = worst.max((lie[k] - formula[k]).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_policy_counts() {
        let c = gap_policy(&[1e-6, 2e-6, 0.5, 0.6], 100.0).unwrap();
        assert_eq!(c.count_below, 4);
        assert!(matches!(gap_policy(&[0.1, 0.2, 0.5], 100.0), Err(CrError::Inconclusive { .. })));
    }

    #[test]
    fn gauge_with_zero_e11bar_is_identity() {
        let mesh = SurfaceMesh::regular(2, 0).unwrap();
        let conn = ConnectionField { gamma: vec![C::new(0.3, 0.1); mesh.n_quotient()], mu: -0.25, mu_relative_spread: 0.0 };
        let a = SectionField { weight: (1, -1), values: vec![ZERO; mesh.n_quotient()] };
        let s = SectionField { weight: (1, 0), values: (0..mesh.n_quotient()).map(|i| C::new(i as f64, 1.0)).collect() };
        assert_eq!(gauge_tensor(&a, &s, &conn).unwrap().values, s.values);
    }

    #[test]
    fn weight_mismatch_is_type_error() {
        let mesh = SurfaceMesh::regular(2, 0).unwrap();
        let cx = DeformationComplex::new(&mesh, 1, -0.25).unwrap();
        let mut v = cx.pair_from_vector(&vec![ZERO; 2 * cx.n_dofs()]);
        v.v.weight = (1, 0);
        assert!(matches!(cx.apply_p(&v), Err(CrError::Type(_))));
    }
}
