//! Lagrange elements on Klein-straight triangles with automorphic gluing,
//! and assembly of weighted first-order operators into quadrature-point values.

use crate::error::Result;
use crate::linalg::SparseMat;
use crate::surface_mesh::{automorphy_factor, geodesic_fraction, identify_points, klein, poincare, Identification, SurfaceMesh};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use std::collections::HashMap;

const ZERO: C = C { re: 0.0, im: 0.0 };

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pn1) = if n == 1 { (t, 1.0) } else { (p1, p0) };
            let dp = n as f64 * (t * pn - pn1) / (t * t - 1.0);
            let dt = pn / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, t);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let (pn, pn1) = if n == 1 { (t, 1.0) } else { (p1, p0) };
        let dp = n as f64 * (t * pn - pn1) / (t * t - 1.0);
        x[i] = (1.0 - t) / 2.0;
        w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

/// Collapsed tensor Gauss rule on the reference triangle (u, v >= 0, u + v <= 1).
pub fn triangle_rule(n: usize) -> Vec<(f64, f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let u = x[i];
            out.push((u, x[j] * (1.0 - u), w[i] * w[j] * (1.0 - u)));
        }
    }
    out
}

/// Per-element data at quadrature points.
#[derive(Debug, Clone)]
pub struct ElementQuad {
    /// Disk coordinates of the quadrature points.
    pub z: Vec<C>,
    /// Hyperbolic volume weight of each point.
    pub dvol: Vec<f64>,
    /// Basis values, derivative d/dz and d/dzbar: [point][local node].
    pub val: Vec<Vec<f64>>,
    pub dz: Vec<Vec<C>>,
    pub dzb: Vec<Vec<C>>,
}

/// Continuous Lagrange space of fixed degree glued across paired sides.
#[derive(Debug, Clone)]
pub struct LagrangeSpace {
    pub degree: usize,
    pub nodes: Vec<C>,
    pub elements: Vec<Vec<usize>>,
    pub ident: Identification,
    pub quad: Vec<ElementQuad>,
}

fn lattice(deg: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for i in (0..=deg).rev() {
        for j in (0..=deg - i).rev() {
            out.push([i, j, deg - i - j]);
        }
    }
    out
}

fn monomials(deg: usize) -> Vec<(i32, i32)> {
    let mut out = Vec::new();
    for s in 0..=deg as i32 {
        for a in 0..=s {
            out.push((a, s - a));
        }
    }
    out
}

impl LagrangeSpace {
    pub fn new(mesh: &SurfaceMesh, degree: usize) -> Result<Self> {
        Self::with_rule(mesh, degree, degree + 2)
    }

    pub fn with_rule(mesh: &SurfaceMesh, degree: usize, quad_order: usize) -> Result<Self> {
        assert!(degree >= 1);
        let lat = lattice(degree);
        let mut nodes: Vec<C> = mesh.vertices.clone();
        let mut edge_nodes: HashMap<(usize, usize, usize), usize> = HashMap::new();
        let mut elements = Vec::with_capacity(mesh.triangles.len());
        for tri in mesh.triangles.iter() {
            let mut ids = Vec::with_capacity(lat.len());
            for b in &lat {
                let nz: Vec<usize> = (0..3).filter(|&x| b[x] > 0).collect();
                let id = match nz.len() {
                    1 => tri[nz[0]],
                    2 => {
                        let (i0, i1) = (nz[0], nz[1]);
                        let (mut v0, mut v1, mut s) = (tri[i0], tri[i1], b[i1]);
                        if v0 > v1 {
                            std::mem::swap(&mut v0, &mut v1);
                            s = degree - s;
                        }
                        *edge_nodes.entry((v0, v1, s)).or_insert_with(|| {
                            nodes.push(geodesic_fraction(mesh.vertices[v0], mesh.vertices[v1], s as f64 / degree as f64));
                            nodes.len() - 1
                        })
                    }
                    _ => {
                        let k: C = (0..3).map(|x| klein(mesh.vertices[tri[x]]) * b[x] as f64).sum::<C>() / degree as f64;
                        nodes.push(poincare(k));
                        nodes.len() - 1
                    }
                };
                ids.push(id);
            }
            elements.push(ids);
        }
        let ident = identify_points(&nodes, &mesh.polygon, 1e-9)?;
        let rule = triangle_rule(quad_order);
        let mons = monomials(degree);
        let mut quad = Vec::with_capacity(elements.len());
        for (e, tri) in mesh.triangles.iter().enumerate() {
            let kv = tri.map(|v| klein(mesh.vertices[v]));
            let origin = kv[0];
            let h = (kv[1] - kv[0]).norm().max((kv[2] - kv[0]).norm());
            let loc = |k: C| (k - origin) / h;
            let kn: Vec<C> = elements[e].iter().map(|&n| loc(klein(nodes[n]))).collect();
            let vand = DMatrix::from_fn(kn.len(), mons.len(), |i, m| {
                kn[i].re.powi(mons[m].0) * kn[i].im.powi(mons[m].1)
            });
            let coef = vand.try_inverse().expect("unisolvent element");
            let e1 = kv[1] - kv[0];
            let e2 = kv[2] - kv[0];
            let jac = (e1.re * e2.im - e1.im * e2.re).abs();
            let mut q = ElementQuad { z: vec![], dvol: vec![], val: vec![], dz: vec![], dzb: vec![] };
            for &(u, v, w) in &rule {
                let k = kv[0] + e1 * u + e2 * v;
                let p = loc(k);
                let z = poincare(k);
                let mv: Vec<f64> = mons.iter().map(|&(a, b)| p.re.powi(a) * p.im.powi(b)).collect();
                let mx: Vec<f64> = mons
                    .iter()
                    .map(|&(a, b)| if a > 0 { a as f64 * p.re.powi(a - 1) * p.im.powi(b) } else { 0.0 })
                    .collect();
                let my: Vec<f64> = mons
                    .iter()
                    .map(|&(a, b)| if b > 0 { b as f64 * p.re.powi(a) * p.im.powi(b - 1) } else { 0.0 })
                    .collect();
                let s = 1.0 + z.norm_sqr();
                let s2 = s * s;
                let dk_dz = C::new(2.0 / s2, 0.0);
                let dkb_dz = -z.conj() * z.conj() * (2.0 / s2);
                let dk_dzb = -z * z * (2.0 / s2);
                let dkb_dzb = C::new(2.0 / s2, 0.0);
                let n = kn.len();
                let mut val = vec![0.0; n];
                let mut dz = vec![ZERO; n];
                let mut dzb = vec![ZERO; n];
                for i in 0..n {
                    let (mut f, mut fx, mut fy) = (0.0, 0.0, 0.0);
                    for m in 0..mons.len() {
                        f += coef[(m, i)] * mv[m];
                        fx += coef[(m, i)] * mx[m];
                        fy += coef[(m, i)] * my[m];
                    }
                    fx /= h;
                    fy /= h;
                    let fk = C::new(fx, -fy) * 0.5;
                    let fkb = C::new(fx, fy) * 0.5;
                    val[i] = f;
                    dz[i] = fk * dk_dz + fkb * dkb_dz;
                    dzb[i] = fk * dk_dzb + fkb * dkb_dzb;
                }
                q.z.push(z);
                q.dvol.push(w * jac * (1.0 - k.norm_sqr()).powf(-1.5));
                q.val.push(val);
                q.dz.push(dz);
                q.dzb.push(dzb);
            }
            quad.push(q);
        }
        Ok(Self { degree, nodes, elements, ident, quad })
    }

    pub fn n_dofs(&self) -> usize {
        self.ident.n_classes
    }

    pub fn n_points(&self) -> usize {
        self.quad.iter().map(|q| q.z.len()).sum()
    }

    /// Disk position of the representative node of each class.
    pub fn dof_positions(&self) -> Vec<C> {
        let mut out = vec![ZERO; self.n_dofs()];
        for n in 0..self.nodes.len() {
            if self.ident.rep[n] == n {
                out[self.ident.class[n]] = self.nodes[n];
            }
        }
        out
    }

    /// Automorphy factor turning a class value into the value at node n.
    pub fn node_factor(&self, n: usize, weight: (i32, i32)) -> C {
        if self.ident.rep[n] == n || weight == (0, 0) {
            C::new(1.0, 0.0)
        } else {
            automorphy_factor(&self.ident.gamma[n], self.nodes[n], weight)
        }
    }

    /// Nodal interpolant of a disk function given in representative coordinates.
    pub fn interpolate<F: Fn(C) -> C>(&self, f: F) -> Vec<C> {
        self.dof_positions().into_iter().map(f).collect()
    }

    /// Values at all quadrature points of a section with the given weight.
    pub fn eval_points(&self, coeffs: &[C], weight: (i32, i32)) -> Vec<C> {
        let mut out = Vec::with_capacity(self.n_points());
        for (e, q) in self.quad.iter().enumerate() {
            let loc: Vec<C> = self.elements[e]
                .iter()
                .map(|&n| coeffs[self.ident.class[n]] * self.node_factor(n, weight))
                .collect();
            for p in 0..q.z.len() {
                out.push(loc.iter().zip(&q.val[p]).map(|(c, b)| c * *b).sum());
            }
        }
        out
    }

    /// All quadrature points and their volume weights, in evaluation order.
    pub fn points(&self) -> (Vec<C>, Vec<f64>) {
        let mut z = Vec::with_capacity(self.n_points());
        let mut w = Vec::with_capacity(self.n_points());
        for q in &self.quad {
            z.extend_from_slice(&q.z);
            w.extend_from_slice(&q.dvol);
        }
        (z, w)
    }
}

/// Coefficient of one term at a point: value, d/dz and d/dzbar multipliers.
#[derive(Debug, Clone, Copy, Default)]
pub struct Coeff {
    pub val: C,
    pub dz: C,
    pub dzb: C,
}

/// A first-order differential operator between tuples of automorphic sections.
pub struct FirstOrderOp<'a> {
    pub in_weights: Vec<(i32, i32)>,
    /// Density multiplying dvol in the input norm, per input component.
    pub in_density: Vec<&'a dyn Fn(C) -> f64>,
    /// Density multiplying dvol in the output norm, per output component.
    pub out_density: Vec<&'a dyn Fn(C) -> f64>,
    /// Coefficient of input component i in output component o at z.
    pub coeff: &'a dyn Fn(C, usize, usize) -> Coeff,
}

impl FirstOrderOp<'_> {
    pub fn n_in(&self) -> usize {
        self.in_weights.len()
    }
    pub fn n_out(&self) -> usize {
        self.out_density.len()
    }
}

/// Discretized operator: unweighted values at quadrature points plus the weights of the output norm.
#[derive(Debug, Clone)]
pub struct AssembledOp {
    /// Rows ordered (element, point, output component); columns (input component, dof).
    pub matrix: SparseMat,
    pub row_weights: Vec<f64>,
    /// Normal matrix A^H W A.
    pub normal: SparseMat,
    /// Consistent input mass matrix.
    pub mass: SparseMat,
    pub n_in: usize,
    pub n_out: usize,
    pub n_dofs: usize,
}

pub fn assemble(space: &LagrangeSpace, op: &FirstOrderOp) -> AssembledOp {
    let nd = space.n_dofs();
    let (ni, no) = (op.n_in(), op.n_out());
    let mut rows = Vec::new();
    let mut row_weights = Vec::new();
    let mut normal = Vec::new();
    let mut mass = Vec::new();
    let mut row = 0usize;
    for (e, q) in space.quad.iter().enumerate() {
        let el = &space.elements[e];
        let nl = el.len();
        let cols: Vec<usize> = (0..ni).flat_map(|i| el.iter().map(move |&n| (i, n))).map(|(i, n)| i * nd + space.ident.class[n]).collect();
        let fac: Vec<C> = (0..ni).flat_map(|i| el.iter().map(move |&n| (i, n))).map(|(i, n)| space.node_factor(n, op.in_weights[i])).collect();
        let mut loc_n = vec![ZERO; cols.len() * cols.len()];
        let mut loc_m = vec![ZERO; cols.len() * cols.len()];
        for p in 0..q.z.len() {
            let z = q.z[p];
            for o in 0..no {
                let w = q.dvol[p] * (op.out_density[o])(z);
                let mut r = vec![ZERO; cols.len()];
                for i in 0..ni {
                    let c = (op.coeff)(z, o, i);
                    if c.val == ZERO && c.dz == ZERO && c.dzb == ZERO {
                        continue;
                    }
                    for a in 0..nl {
                        let v = c.val * q.val[p][a] + c.dz * q.dz[p][a] + c.dzb * q.dzb[p][a];
                        r[i * nl + a] = v * fac[i * nl + a];
                    }
                }
                for (a, &ra) in r.iter().enumerate() {
                    if ra != ZERO {
                        rows.push((row, cols[a], ra));
                        for (b, &rb) in r.iter().enumerate() {
                            if rb != ZERO {
                                loc_n[a * cols.len() + b] += ra.conj() * rb * w;
                            }
                        }
                    }
                }
                row_weights.push(w);
                row += 1;
            }
            for i in 0..ni {
                let w = q.dvol[p] * (op.in_density[i])(z);
                for a in 0..nl {
                    for b in 0..nl {
                        let (ia, ib) = (i * nl + a, i * nl + b);
                        loc_m[ia * cols.len() + ib] += (fac[ia] * q.val[p][a]).conj() * fac[ib] * q.val[p][b] * w;
                    }
                }
            }
        }
        for a in 0..cols.len() {
            for b in 0..cols.len() {
                let (vn, vm) = (loc_n[a * cols.len() + b], loc_m[a * cols.len() + b]);
                if vn != ZERO {
                    normal.push((cols[a], cols[b], vn));
                }
                if vm != ZERO {
                    mass.push((cols[a], cols[b], vm));
                }
            }
        }
    }
    let dim = ni * nd;
    AssembledOp {
        matrix: SparseMat::from_triplets(row, dim, rows),
        row_weights,
        normal: SparseMat::from_triplets(dim, dim, normal),
        mass: SparseMat::from_triplets(dim, dim, mass),
        n_in: ni,
        n_out: no,
        n_dofs: nd,
    }
}

impl AssembledOp {
    pub fn apply(&self, x: &[C]) -> Vec<C> {
        self.matrix.mul_vec(x)
    }

    /// Weighted inner product of two output vectors.
    pub fn out_inner(&self, a: &[C], b: &[C]) -> C {
        a.iter().zip(b).zip(&self.row_weights).map(|((x, y), w)| x * y.conj() * *w).sum()
    }

    /// M-inner product of two input vectors, conjugate-linear in `b`.
    pub fn in_inner(&self, a: &[C], b: &[C]) -> C {
        let ma = self.mass.mul_vec(a);
        ma.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
    }

    /// A^H W y.
    pub fn adjoint_weighted(&self, y: &[C]) -> Vec<C> {
        let wy: Vec<C> = y.iter().zip(&self.row_weights).map(|(v, w)| v * *w).collect();
        self.matrix.adjoint_mul_vec(&wy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        for p in 0..10 {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            assert!((s - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "{p}");
        }
    }

    #[test]
    fn triangle_rule_area() {
        let s: f64 = triangle_rule(4).iter().map(|r| r.2).sum();
        assert!((s - 0.5).abs() < 1e-15);
        let m: f64 = triangle_rule(4).iter().map(|r| r.2 * r.0 * r.0 * r.1).sum();
        assert!((m - 1.0 / 60.0).abs() < 1e-15);
    }
}
