//! SU(1,1) Möbius maps with a U(1) factor, and the regular 4g-gon surface groups.

use crate::error::{CrError, Result};
use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ONE: C = C { re: 1.0, im: 0.0 };
const ZERO: C = C { re: 0.0, im: 0.0 };

/// A 2x2 matrix acting on the disk by z -> (az+b)/(cz+d), together with a
/// unit complex number acting on the fibre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusElement {
    pub a: C,
    pub b: C,
    pub c: C,
    pub d: C,
    pub phase: C,
}

impl MobiusElement {
    pub fn identity() -> Self {
        Self { a: ONE, b: ZERO, c: ZERO, d: ONE, phase: ONE }
    }

    /// Builds an element and rescales the matrix to unit determinant.
    pub fn new(a: C, b: C, c: C, d: C, phase: C) -> Self {
        Self { a, b, c, d, phase }.normalized()
    }

    /// Disk rotation z -> e^{i alpha} z.
    pub fn rotation(alpha: f64) -> Self {
        Self {
            a: C::from_polar(1.0, alpha / 2.0),
            b: ZERO,
            c: ZERO,
            d: C::from_polar(1.0, -alpha / 2.0),
            phase: ONE,
        }
    }

    /// Hyperbolic translation of length `l` along the real diameter.
    pub fn translation(l: f64) -> Self {
        let (ch, sh) = ((l / 2.0).cosh(), (l / 2.0).sinh());
        Self { a: C::new(ch, 0.0), b: C::new(sh, 0.0), c: C::new(sh, 0.0), d: C::new(ch, 0.0), phase: ONE }
    }

    /// The disk automorphism sending `p` to 0, z -> (z - p)/(1 - conj(p) z).
    pub fn to_origin(p: C) -> Self {
        let s = 1.0 / (1.0 - p.norm_sqr()).sqrt();
        Self { a: C::new(s, 0.0), b: -p * s, c: -p.conj() * s, d: C::new(s, 0.0), phase: ONE }
    }

    pub fn with_phase(mut self, phase: C) -> Self {
        self.phase = phase / phase.norm();
        self
    }

    pub fn det(&self) -> C {
        self.a * self.d - self.b * self.c
    }

    #[must_use]
    pub fn normalized(self) -> Self {
        let k = ONE / self.det().sqrt();
        Self { a: self.a * k, b: self.b * k, c: self.c * k, d: self.d * k, phase: self.phase / self.phase.norm() }
    }

    /// Largest of |d - conj a| and |c - conj b|.
    pub fn su11_defect(&self) -> f64 {
        (self.d - self.a.conj()).norm().max((self.c - self.b.conj()).norm())
    }

    pub fn is_su11(&self, tol: f64) -> bool {
        self.su11_defect() < tol && (self.det() - ONE).norm() < tol
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a, phase: self.phase.conj() }
    }

    /// Möbius action without domain checks.
    pub fn eval(&self, z: C) -> C {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// Complex derivative 1/(cz+d)^2 (unit determinant).
    pub fn derivative(&self, z: C) -> C {
        let den = self.c * z + self.d;
        ONE / (den * den)
    }

    pub fn denominator(&self, z: C) -> C {
        self.c * z + self.d
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        ((self.a - other.a).norm_sqr()
            + (self.b - other.b).norm_sqr()
            + (self.c - other.c).norm_sqr()
            + (self.d - other.d).norm_sqr())
        .sqrt()
    }

    /// Distance to the identity in PU(1,1), i.e. modulo sign.
    pub fn projective_identity_distance(&self) -> f64 {
        let id = Self::identity();
        let neg = Self { a: -ONE, b: ZERO, c: ZERO, d: -ONE, phase: ONE };
        self.frobenius_distance(&id).min(self.frobenius_distance(&neg))
    }
}

/// Applies A to a disk point.
pub fn mobius_apply(m: &MobiusElement, z: C) -> Result<C> {
    if z.norm() >= 1.0 {
        return Err(CrError::Domain(format!("point {z} is not inside the unit disk")));
    }
    let den = m.c * z + m.d;
    if den.norm() < 1e-14 {
        return Err(CrError::Domain("singular denominator cz+d".into()));
    }
    Ok((m.a * z + m.b) / den)
}

/// Matrix product A*B (apply B first), phases multiplied, determinant renormalized.
pub fn mobius_compose(a: &MobiusElement, b: &MobiusElement) -> MobiusElement {
    MobiusElement {
        a: a.a * b.a + a.b * b.c,
        b: a.a * b.b + a.b * b.d,
        c: a.c * b.a + a.d * b.c,
        d: a.c * b.b + a.d * b.d,
        phase: a.phase * b.phase,
    }
    .normalized()
}

impl std::ops::Mul for MobiusElement {
    type Output = MobiusElement;
    fn mul(self, rhs: Self) -> Self {
        mobius_compose(&self, &rhs)
    }
}

/// Commutator a b a^{-1} b^{-1}.
pub fn commutator(a: &MobiusElement, b: &MobiusElement) -> MobiusElement {
    *a * *b * a.inverse() * b.inverse()
}

/// Geometry of the regular hyperbolic 4g-gon with interior angles 2 pi / 4g.
#[derive(Debug, Clone)]
pub struct RegularPolygon {
    pub genus: usize,
    pub sides: usize,
    /// Hyperbolic distance from the centre to a side midpoint.
    pub midpoint_distance: f64,
    /// Euclidean radius of the corners.
    pub corner_radius: f64,
}

impl RegularPolygon {
    pub fn new(genus: usize) -> Self {
        let n = 4 * genus;
        let nf = n as f64;
        let alpha = 2.0 * PI / nf;
        let d = ((alpha / 2.0).cos() / (PI / nf).sin()).acosh();
        let cot = 1.0 / (PI / nf).tan();
        let big_r = (cot * cot).acosh();
        Self { genus, sides: n, midpoint_distance: d, corner_radius: (big_r / 2.0).tanh() }
    }

    pub fn side_angle(&self, k: usize) -> f64 {
        2.0 * PI * (k % self.sides) as f64 / self.sides as f64
    }

    /// Corner k sits between side k and side k+1.
    pub fn corner(&self, k: usize) -> C {
        C::from_polar(self.corner_radius, self.side_angle(k) + PI / self.sides as f64)
    }

    /// Side k joins corner k-1 to corner k.
    pub fn side_endpoints(&self, k: usize) -> (C, C) {
        (self.corner((k + self.sides - 1) % self.sides), self.corner(k))
    }

    /// Euclidean radius of the inscribed circle.
    pub fn inscribed_radius(&self) -> f64 {
        (self.midpoint_distance / 2.0).tanh()
    }

    /// Uniform random points in the disk of 0.95 times the inscribed radius.
    pub fn interior_points<R: rand::Rng>(&self, rng: &mut R, n: usize) -> Vec<C> {
        let r0 = 0.95 * self.inscribed_radius();
        (0..n)
            .map(|_| C::from_polar(r0 * rng.gen::<f64>().sqrt(), 2.0 * PI * rng.gen::<f64>()))
            .collect()
    }

    pub fn side_midpoint(&self, k: usize) -> C {
        C::from_polar((self.midpoint_distance / 2.0).tanh(), self.side_angle(k))
    }

    pub fn partner(&self, k: usize) -> usize {
        (k + 2 * self.genus) % self.sides
    }

    /// The orientation-compatible isometry carrying side j onto side k.
    pub fn side_map(&self, j: usize, k: usize) -> MobiusElement {
        MobiusElement::rotation(self.side_angle(k))
            * MobiusElement::translation(2.0 * self.midpoint_distance)
            * MobiusElement::rotation(PI - self.side_angle(j))
    }

    /// Hyperbolic length of one side.
    pub fn side_length(&self) -> f64 {
        let (a, b) = self.side_endpoints(0);
        hyperbolic_distance(a, b)
    }

    /// Surface-group generators s_k (k < 2g) mapping side k+2g onto side k.
    pub fn side_generators(&self) -> Vec<MobiusElement> {
        (0..2 * self.genus).map(|k| self.side_map(self.partner(k), k)).collect()
    }

    /// The side pairings met when walking once around the corner cycle, as a
    /// word (k, e) = s_k^e whose product, read left to right, is +-I.
    pub fn corner_cycle(&self) -> Vec<(usize, i32)> {
        let n = self.sides;
        let mut out = Vec::new();
        let mut corner = 0usize;
        loop {
            let s = (corner + 1) % n;
            let sp = self.partner(s);
            if s >= 2 * self.genus {
                out.push((sp, 1));
            } else {
                out.push((s, -1));
            }
            corner = sp;
            if corner == 0 {
                break;
            }
        }
        out.reverse();
        out
    }
}

pub fn hyperbolic_distance(a: C, b: C) -> f64 {
    let w = MobiusElement::to_origin(a).eval(b).norm();
    2.0 * w.min(1.0 - 1e-16).atanh()
}

/// A surface group of genus g together with its U(1) data.
#[derive(Debug, Clone)]
pub struct FuchsianGroup {
    pub genus: usize,
    pub chern_m: u32,
    /// a_1, b_1, ..., a_g, b_g.
    pub generators: Vec<MobiusElement>,
    /// U(1) angles of the generators.
    pub phases: Vec<f64>,
    /// U(1) angle of the central element h.
    pub central_angle: f64,
}

type Word = Vec<(usize, i32)>;

fn invert_word(w: &[(usize, i32)]) -> Word {
    w.iter().rev().map(|&(k, e)| (k, -e)).collect()
}

/// Finds a cyclic rotation (possibly of the inverse) of `w` having the form
/// y_1 .. y_n y_1^{-1} .. y_n^{-1}, returning y_1 .. y_n.
fn split_relator(w: &[(usize, i32)]) -> Option<Word> {
    let len = w.len();
    if !len.is_multiple_of(2) {
        return None;
    }
    let half = len / 2;
    for cand in [w.to_vec(), invert_word(w)] {
        for r in 0..len {
            let rot: Word = (0..len).map(|i| cand[(i + r) % len]).collect();
            if (0..half).all(|i| rot[half + i] == (rot[i].0, -rot[i].1)) {
                return Some(rot[..half].to_vec());
            }
        }
    }
    None
}

/// Canonical basis (a_i, b_i) with prod [a_i, b_i] equal to the relator
/// y_1 .. y_n y_1^{-1} .. y_n^{-1}, as words in the letters y.
/// Letters are indices into y (0-based) with exponents.
pub fn canonical_basis_words(n: usize) -> Vec<(Word, Word)> {
    let g = n / 2;
    let mut out = Vec::with_capacity(g);
    for i in 1..=g {
        let mut a: Word = (0..2 * (i - 1)).rev().map(|j| (j, 1)).collect();
        a.push((2 * i - 2, 1));
        let b: Word = vec![(2 * i - 1, 1), (2 * i - 2, 1)];
        out.push((a, b));
    }
    out
}

fn eval_word(letters: &[MobiusElement], w: &[(usize, i32)]) -> MobiusElement {
    w.iter().fold(MobiusElement::identity(), |acc, &(k, e)| {
        if e > 0 {
            acc * letters[k]
        } else {
            acc * letters[k].inverse()
        }
    })
}

/// Standard regular 4g-gon surface group with trivial U(1) data.
pub fn fuchsian_group(genus: usize, m: u32) -> Result<FuchsianGroup> {
    if genus < 2 {
        return Err(CrError::Unsupported(format!("genus {genus} < 2 has no hyperbolic structure")));
    }
    if m < 1 {
        return Err(CrError::Unsupported("m must be positive".into()));
    }
    let poly = RegularPolygon::new(genus);
    let s = poly.side_generators();
    let cycle = poly.corner_cycle();
    let ys = split_relator(&cycle)
        .ok_or_else(|| CrError::Construction("corner cycle is not a commutator-type relator".into()))?;
    let yel: Vec<MobiusElement> = ys
        .iter()
        .map(|&(k, e)| if e > 0 { s[k] } else { s[k].inverse() })
        .collect();
    let mut generators = Vec::with_capacity(2 * genus);
    for (a, b) in canonical_basis_words(ys.len()) {
        generators.push(eval_word(&yel, &a));
        generators.push(eval_word(&yel, &b));
    }
    let group = FuchsianGroup { genus, chern_m: m, generators, phases: vec![0.0; 2 * genus], central_angle: 0.0 };
    let res = group_relation_residual(&group);
    if res > 1e-13 * relation_condition(&group) {
        return Err(CrError::Construction(format!("relation residual {res:.3e}")));
    }
    Ok(group)
}

impl FuchsianGroup {
    /// Sets generator phases and the central U(1) angle. The angle of h must
    /// satisfy m * angle = 0 mod 2 pi; which root is meant is left to the caller.
    pub fn with_phases(mut self, phases: Vec<f64>, central_angle: f64) -> Result<Self> {
        if phases.len() != self.generators.len() {
            return Err(CrError::Precondition("one phase per generator is required".into()));
        }
        let t = self.chern_m as f64 * central_angle / (2.0 * PI);
        if (t - t.round()).abs() > 1e-12 {
            return Err(CrError::Precondition("m * central angle must be a multiple of 2 pi".into()));
        }
        for (g, &p) in self.generators.iter_mut().zip(&phases) {
            g.phase = C::from_polar(1.0, p);
        }
        self.phases = phases;
        self.central_angle = central_angle;
        Ok(self)
    }

    pub fn model_exponent(&self) -> f64 {
        self.chern_m as f64 / (self.genus as f64 - 1.0)
    }

    pub fn commutator_product(&self) -> MobiusElement {
        self.generators
            .chunks(2)
            .fold(MobiusElement::identity(), |acc, ab| acc * commutator(&ab[0], &ab[1]))
    }
}

/// Distance of prod [a_i, b_i] to +-I, together with the U(1) mismatch
/// against h^{-m}.
pub fn group_relation_residual(g: &FuchsianGroup) -> f64 {
    let p = g.commutator_product();
    let target = C::from_polar(1.0, -(g.chern_m as f64) * g.central_angle);
    p.projective_identity_distance().max((p.phase - target).norm())
}

/// Upper bound prod (|a_i| |b_i|)^2 (Frobenius norms) on the entries met while
/// multiplying out the commutators; the residual is only meaningful relative to it.
pub fn relation_condition(g: &FuchsianGroup) -> f64 {
    let norm = |m: &MobiusElement| (m.a.norm_sqr() + m.b.norm_sqr() + m.c.norm_sqr() + m.d.norm_sqr()).sqrt();
    g.generators.chunks(2).map(|ab| (norm(&ab[0]) * norm(&ab[1])).powi(2)).product()
}

#[derive(Serialize, Deserialize)]
struct ElementJson {
    a: [f64; 2],
    b: [f64; 2],
    c: [f64; 2],
    d: [f64; 2],
    phase: f64,
}

#[derive(Serialize, Deserialize)]
struct GroupJson {
    genus: usize,
    m: u32,
    generators: Vec<ElementJson>,
    phases: Vec<f64>,
    #[serde(default)]
    central_angle: f64,
}

fn pair(z: C) -> [f64; 2] {
    [z.re, z.im]
}

fn unpair(p: [f64; 2]) -> C {
    C::new(p[0], p[1])
}

impl Serialize for MobiusElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ElementJson { a: pair(self.a), b: pair(self.b), c: pair(self.c), d: pair(self.d), phase: self.phase.arg() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MobiusElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let e = ElementJson::deserialize(d)?;
        Ok(MobiusElement {
            a: unpair(e.a),
            b: unpair(e.b),
            c: unpair(e.c),
            d: unpair(e.d),
            phase: C::from_polar(1.0, e.phase),
        })
    }
}

impl Serialize for FuchsianGroup {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GroupJson {
            genus: self.genus,
            m: self.chern_m,
            generators: self
                .generators
                .iter()
                .map(|g| ElementJson { a: pair(g.a), b: pair(g.b), c: pair(g.c), d: pair(g.d), phase: g.phase.arg() })
                .collect(),
            phases: self.phases.clone(),
            central_angle: self.central_angle,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FuchsianGroup {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let g = GroupJson::deserialize(d)?;
        Ok(FuchsianGroup {
            genus: g.genus,
            chern_m: g.m,
            generators: g
                .generators
                .into_iter()
                .map(|e| MobiusElement {
                    a: unpair(e.a),
                    b: unpair(e.b),
                    c: unpair(e.c),
                    d: unpair(e.d),
                    phase: C::from_polar(1.0, e.phase),
                })
                .collect(),
            phases: g.phases,
            central_angle: g.central_angle,
        })
    }
}

/// Random SU(1,1) element: a rotation composed with a translation to a point
/// of Euclidean radius below `max_radius`.
pub fn random_su11<R: rand::Rng>(rng: &mut R, max_radius: f64) -> MobiusElement {
    let r = max_radius * rng.gen::<f64>().sqrt();
    let p = C::from_polar(r, 2.0 * PI * rng.gen::<f64>());
    MobiusElement::to_origin(p).inverse() * MobiusElement::rotation(2.0 * PI * rng.gen::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_quarter_turn() {
        let a = MobiusElement::new(C::from_polar(1.0, PI / 4.0), ZERO, ZERO, C::from_polar(1.0, -PI / 4.0), ONE);
        let w = mobius_apply(&a, C::new(0.5, 0.0)).unwrap();
        assert!((w - C::new(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn rotations_add() {
        let r = MobiusElement::rotation(0.3) * MobiusElement::rotation(1.1);
        assert!(r.frobenius_distance(&MobiusElement::rotation(1.4)) < 1e-14);
    }

    #[test]
    fn singular_denominator_rejected() {
        let m = MobiusElement { a: ONE, b: ZERO, c: ONE, d: C::new(-0.5, 0.0), phase: ONE };
        assert!(mobius_apply(&m, C::new(0.5, 0.0)).is_err());
    }

    #[test]
    fn bolza_translation_length() {
        let poly = RegularPolygon::new(2);
        assert!((poly.midpoint_distance.cosh() - (1.0 + 2f64.sqrt())).abs() < 1e-13);
        assert!((poly.corner_radius - 2f64.powf(-0.25)).abs() < 1e-14);
        for s in poly.side_generators() {
            // cosh(l/2) = |trace|/2 with translation length l = 2d
            assert!((s.a.re.abs() - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        }
    }

    #[test]
    fn side_maps_carry_endpoints() {
        for g in 2..=4 {
            let poly = RegularPolygon::new(g);
            for j in 0..poly.sides {
                let k = poly.partner(j);
                let m = poly.side_map(j, k);
                let (a, b) = poly.side_endpoints(j);
                let (c, d) = poly.side_endpoints(k);
                assert!((m.eval(a) - d).norm() < 1e-12);
                assert!((m.eval(b) - c).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn bolza_cycle_sides() {
        let poly = RegularPolygon::new(2);
        let c = poly.corner_cycle();
        assert_eq!(c.len(), 8);
        let w = split_relator(&c).unwrap();
        assert_eq!(w.len(), 4);
    }

    #[test]
    fn genus_one_rejected() {
        assert!(matches!(fuchsian_group(1, 1), Err(CrError::Unsupported(_))));
    }

    #[test]
    fn identity_group_has_zero_residual() {
        let g = FuchsianGroup {
            genus: 2,
            chern_m: 1,
            generators: vec![MobiusElement::identity(); 4],
            phases: vec![0.0; 4],
            central_angle: 0.0,
        };
        assert_eq!(group_relation_residual(&g), 0.0);
    }

    #[test]
    fn central_angle_must_be_root() {
        let g = fuchsian_group(2, 3).unwrap();
        assert!(g.clone().with_phases(vec![0.1; 4], 2.0 * PI / 3.0).is_ok());
        assert!(g.with_phases(vec![0.1; 4], 0.5).is_err());
    }
}
