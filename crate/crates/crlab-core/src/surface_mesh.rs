//! Geodesic triangulations of the fundamental polygon, side-pairing
//! identification, automorphic fields and hyperbolic quadrature.

use crate::error::{CrError, Result};
use crate::mobius_fuchsian::{FuchsianGroup, MobiusElement, RegularPolygon};
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Poincaré disk to Klein disk.
pub fn klein(z: C) -> C {
    z * (2.0 / (1.0 + z.norm_sqr()))
}

/// Klein disk to Poincaré disk.
pub fn poincare(k: C) -> C {
    k / (1.0 + (1.0 - k.norm_sqr()).max(0.0).sqrt())
}

/// Hyperbolic metric density 4/(1-|z|^2)^2 with respect to |dz|^2.
pub fn rho(z: C) -> f64 {
    let s = 1.0 - z.norm_sqr();
    4.0 / (s * s)
}

/// Point at fraction t of the geodesic from a to b.
pub fn geodesic_fraction(a: C, b: C, t: f64) -> C {
    let to0 = MobiusElement::to_origin(a);
    let bb = to0.eval(b);
    let r = bb.norm();
    if r == 0.0 {
        return a;
    }
    let m = bb * ((t * r.atanh()).tanh() / r);
    to0.inverse().eval(m)
}

pub fn hyperbolic_midpoint(a: C, b: C) -> C {
    geodesic_fraction(a, b, 0.5)
}

/// Factor gamma'(z)^p conj(gamma'(z))^q.
pub fn automorphy_factor(gamma: &MobiusElement, z: C, weight: (i32, i32)) -> C {
    let dg = gamma.derivative(z);
    dg.powi(weight.0) * dg.conj().powi(weight.1)
}

/// Hyperbolic area of a geodesic triangle by the Klein-model edge-midpoint rule.
pub fn triangle_area(z: [C; 3]) -> f64 {
    let k = z.map(klein);
    let e1 = k[1] - k[0];
    let e2 = k[2] - k[0];
    let area = 0.5 * (e1.re * e2.im - e1.im * e2.re).abs();
    let dens = |p: C| (1.0 - p.norm_sqr()).powf(-1.5);
    let mids = [(k[0] + k[1]) * 0.5, (k[1] + k[2]) * 0.5, (k[2] + k[0]) * 0.5];
    area * mids.iter().map(|&m| dens(m)).sum::<f64>() / 3.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pairing {
    pub boundary: usize,
    pub rep: usize,
    pub gamma: MobiusElement,
}

/// Result of gluing points on the polygon boundary.
#[derive(Debug, Clone)]
pub struct Identification {
    /// Representative point of each point (itself for representatives).
    pub rep: Vec<usize>,
    /// Map carrying each point onto its representative.
    pub gamma: Vec<MobiusElement>,
    /// Quotient index of each point.
    pub class: Vec<usize>,
    pub n_classes: usize,
}

struct PointIndex {
    cell: f64,
    map: HashMap<(i64, i64), Vec<usize>>,
}

impl PointIndex {
    fn new(points: &[C], cell: f64) -> Self {
        let mut map: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            map.entry(Self::key(*p, cell)).or_default().push(i);
        }
        Self { cell, map }
    }

    fn key(p: C, cell: f64) -> (i64, i64) {
        ((p.re / cell).floor() as i64, (p.im / cell).floor() as i64)
    }

    fn nearest(&self, points: &[C], q: C) -> Option<(usize, f64)> {
        let (kx, ky) = Self::key(q, self.cell);
        let mut best: Option<(usize, f64)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(v) = self.map.get(&(kx + dx, ky + dy)) {
                    for &i in v {
                        let d = (points[i] - q).norm();
                        if best.is_none_or(|(_, bd)| d < bd) {
                            best = Some((i, d));
                        }
                    }
                }
            }
        }
        best
    }
}

fn on_side(poly: &RegularPolygon, side: usize, z: C, tol: f64) -> bool {
    let (a, b) = poly.side_endpoints(side);
    let to0 = MobiusElement::to_origin(a);
    let w = to0.eval(z);
    if w.norm() < tol {
        return true;
    }
    let bb = to0.eval(b);
    let cross = (w.conj() * bb).im / bb.norm();
    cross.abs() < tol && (w.conj() * bb).re > 0.0 && w.norm() <= bb.norm() + tol
}

/// Glues points lying on paired sides of the regular polygon.
pub fn identify_points(points: &[C], poly: &RegularPolygon, tol: f64) -> Result<Identification> {
    let n = points.len();
    let index = PointIndex::new(points, 1e-6);
    let mut parent: Vec<usize> = (0..n).collect();
    let mut gam = vec![MobiusElement::identity(); n];
    let root = |parent: &Vec<usize>, gam: &Vec<MobiusElement>, mut v: usize| {
        let mut m = MobiusElement::identity();
        while parent[v] != v {
            m = gam[v] * m;
            v = parent[v];
        }
        (v, m)
    };
    for j in 0..poly.sides {
        let k = poly.partner(j);
        if j > k {
            continue;
        }
        let map = poly.side_map(j, k);
        for v in 0..n {
            if !on_side(poly, j, points[v], tol) {
                continue;
            }
            let img = map.eval(points[v]);
            let (u, dist) = index
                .nearest(points, img)
                .ok_or_else(|| CrError::Construction(format!("no partner for boundary point {v}")))?;
            if dist > 1e-6 {
                return Err(CrError::Construction(format!(
                    "pairing mismatch {dist:.2e} at boundary point {v}"
                )));
            }
            let (rv, mv) = root(&parent, &gam, v);
            let (ru, mu) = root(&parent, &gam, u);
            if rv != ru {
                parent[rv] = ru;
                gam[rv] = mu * map * mv.inverse();
            }
        }
    }
    let mut rep = vec![0; n];
    let mut gamma = vec![MobiusElement::identity(); n];
    for v in 0..n {
        let (r, m) = root(&parent, &gam, v);
        rep[v] = r;
        gamma[v] = m;
    }
    let mut class = vec![usize::MAX; n];
    let mut n_classes = 0;
    for v in 0..n {
        if rep[v] == v {
            class[v] = n_classes;
            n_classes += 1;
        }
    }
    for v in 0..n {
        class[v] = class[rep[v]];
    }
    Ok(Identification { rep, gamma, class, n_classes })
}

/// Triangulated fundamental polygon with side pairings.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub vertices: Vec<C>,
    pub triangles: Vec<[usize; 3]>,
    pub pairings: Vec<Pairing>,
    pub genus: usize,
    pub refinement: usize,
    pub polygon: RegularPolygon,
    pub ident: Identification,
}

fn base_triangulation(poly: &RegularPolygon) -> (Vec<C>, Vec<[usize; 3]>) {
    let n = poly.sides;
    let mut verts = vec![C::new(0.0, 0.0)];
    for k in 0..n {
        verts.push(poly.corner(k));
    }
    for k in 0..n {
        verts.push(poly.side_midpoint(k));
    }
    let corner = |k: usize| 1 + k % n;
    let mid = |k: usize| 1 + n + k % n;
    let mut tris = Vec::with_capacity(2 * n);
    for k in 0..n {
        tris.push([0, mid(k), mid(k + 1)]);
        tris.push([mid(k), corner(k), mid(k + 1)]);
    }
    (verts, tris)
}

fn refine(verts: &mut Vec<C>, tris: &[[usize; 3]]) -> Vec<[usize; 3]> {
    let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |verts: &mut Vec<C>, i: usize, j: usize| {
        let key = (i.min(j), i.max(j));
        *mids.entry(key).or_insert_with(|| {
            verts.push(hyperbolic_midpoint(verts[key.0], verts[key.1]));
            verts.len() - 1
        })
    };
    let mut out = Vec::with_capacity(4 * tris.len());
    for &[i, j, k] in tris {
        let a = mid(verts, i, j);
        let b = mid(verts, j, k);
        let c = mid(verts, k, i);
        out.push([i, a, c]);
        out.push([a, j, b]);
        out.push([c, b, k]);
        out.push([a, b, c]);
    }
    out
}

/// Geodesic triangulation of the group's fundamental polygon.
pub fn build_mesh(group: &FuchsianGroup, refinement: usize) -> Result<SurfaceMesh> {
    SurfaceMesh::regular(group.genus, refinement)
}

impl SurfaceMesh {
    pub fn regular(genus: usize, refinement: usize) -> Result<Self> {
        if genus < 2 {
            return Err(CrError::Unsupported(format!("genus {genus}")));
        }
        let poly = RegularPolygon::new(genus);
        let (mut verts, mut tris) = base_triangulation(&poly);
        for _ in 0..refinement {
            tris = refine(&mut verts, &tris);
        }
        let ident = identify_points(&verts, &poly, 1e-9)?;
        let mut pairings = Vec::new();
        for v in 0..verts.len() {
            if ident.rep[v] != v {
                let gamma = ident.gamma[v];
                let err = (gamma.eval(verts[v]) - verts[ident.rep[v]]).norm();
                if err > 1e-9 {
                    return Err(CrError::Construction(format!("pairing of vertex {v} misses by {err:.2e}")));
                }
                pairings.push(Pairing { boundary: v, rep: ident.rep[v], gamma });
            }
        }
        let mesh = SurfaceMesh { vertices: verts, triangles: tris, pairings, genus, refinement, polygon: poly, ident };
        let chi = mesh.euler_characteristic();
        if chi != 2 - 2 * genus as i64 {
            return Err(CrError::Construction(format!("Euler characteristic {chi}")));
        }
        Ok(mesh)
    }

    pub fn n_quotient(&self) -> usize {
        self.ident.n_classes
    }

    /// Quotient index of a mesh vertex.
    pub fn dof(&self, v: usize) -> usize {
        self.ident.class[v]
    }

    /// Mesh vertex chosen as representative of each quotient vertex.
    pub fn representatives(&self) -> Vec<usize> {
        let mut out = vec![0; self.n_quotient()];
        for v in 0..self.vertices.len() {
            if self.ident.rep[v] == v {
                out[self.ident.class[v]] = v;
            }
        }
        out
    }

    pub fn pairing(&self, v: usize) -> Option<&Pairing> {
        self.pairings.iter().find(|p| p.boundary == v)
    }

    fn edge_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut ec = HashMap::new();
        for t in &self.triangles {
            for e in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *ec.entry((e.0.min(e.1), e.0.max(e.1))).or_insert(0) += 1;
            }
        }
        ec
    }

    /// V - E + F of the glued complex.
    pub fn euler_characteristic(&self) -> i64 {
        let ec = self.edge_counts();
        let boundary = ec.values().filter(|&&c| c == 1).count();
        let edges = ec.len() - boundary / 2;
        self.n_quotient() as i64 - edges as i64 + self.triangles.len() as i64
    }

    /// Every triangle has positive orientation in disk coordinates.
    pub fn orientation_ok(&self) -> bool {
        self.triangles.iter().all(|t| {
            let [a, b, c] = t.map(|i| self.vertices[i]);
            ((b - a).conj() * (c - a)).im > 0.0
        })
    }

    pub fn triangle_points(&self, t: usize) -> [C; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    /// Hyperbolic area weight of each triangle.
    pub fn triangle_weights(&self) -> Vec<f64> {
        (0..self.triangles.len()).map(|t| triangle_area(self.triangle_points(t))).collect()
    }

    /// Lumped hyperbolic area per quotient vertex.
    pub fn lumped_mass(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_quotient()];
        for (t, w) in self.triangle_weights().into_iter().enumerate() {
            for &v in &self.triangles[t] {
                m[self.dof(v)] += w / 3.0;
            }
        }
        m
    }

    /// Largest hyperbolic edge length.
    pub fn mesh_size(&self) -> f64 {
        self.edge_counts()
            .keys()
            .map(|&(i, j)| crate::mobius_fuchsian::hyperbolic_distance(self.vertices[i], self.vertices[j]))
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "vertices": self.vertices.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "triangles": self.triangles,
            "pairings": self.pairings,
            "genus": self.genus,
            "refinement": self.refinement,
        })
    }

    /// Samples a function of the disk point at the representative of every quotient vertex.
    pub fn sample<F: Fn(C) -> C>(&self, weight: (i32, i32), f: F) -> SectionField {
        let values = self.representatives().into_iter().map(|v| f(self.vertices[v])).collect();
        SectionField { weight, values }
    }
}

/// Sum of hyperbolic triangle areas.
pub fn hyperbolic_area(mesh: &SurfaceMesh) -> f64 {
    mesh.triangle_weights().iter().sum()
}

/// Per-quotient-vertex values of an automorphic section with weight (p, q):
/// value(gamma z) gamma'(z)^p conj(gamma'(z))^q = value(z).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionField {
    pub weight: (i32, i32),
    pub values: Vec<C>,
}

#[derive(Serialize, Deserialize)]
struct FieldJson {
    weight: [i32; 2],
    values: Vec<[f64; 2]>,
}

impl SectionField {
    pub fn zeros(mesh: &SurfaceMesh, weight: (i32, i32)) -> Self {
        Self { weight, values: vec![C::new(0.0, 0.0); mesh.n_quotient()] }
    }

    pub fn constant(mesh: &SurfaceMesh, c: C) -> Self {
        Self { weight: (0, 0), values: vec![c; mesh.n_quotient()] }
    }

    /// Value in the coordinates of mesh vertex v.
    pub fn at_vertex(&self, mesh: &SurfaceMesh, v: usize) -> C {
        let val = self.values[mesh.dof(v)];
        if mesh.ident.rep[v] == v {
            val
        } else {
            val * automorphy_factor(&mesh.ident.gamma[v], mesh.vertices[v], self.weight)
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(FieldJson {
            weight: [self.weight.0, self.weight.1],
            values: self.values.iter().map(|z| [z.re, z.im]).collect(),
        })
        .expect("field serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let f: FieldJson = serde_json::from_value(v.clone()).map_err(|e| CrError::Type(e.to_string()))?;
        Ok(Self { weight: (f.weight[0], f.weight[1]), values: f.values.iter().map(|p| C::new(p[0], p[1])).collect() })
    }
}

/// Representative value carried to the coordinates of a paired boundary vertex.
pub fn transport_across_pairing(mesh: &SurfaceMesh, field: &SectionField, vertex: usize) -> Result<C> {
    let p = mesh.pairing(vertex).ok_or(CrError::MissingPairing(vertex))?;
    Ok(field.values[mesh.dof(p.rep)] * automorphy_factor(&p.gamma, mesh.vertices[vertex], field.weight))
}

/// Integral of a function against the hyperbolic area form.
pub fn quadrature(mesh: &SurfaceMesh, field: &SectionField) -> Result<C> {
    if field.weight != (0, 0) {
        return Err(CrError::Type(format!("quadrature needs weight (0,0), got {:?}", field.weight)));
    }
    let w = mesh.triangle_weights();
    let mut acc = C::new(0.0, 0.0);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let s: C = tri.iter().map(|&v| field.values[mesh.dof(v)]).sum();
        acc += s * (w[t] / 3.0);
    }
    Ok(acc)
}
