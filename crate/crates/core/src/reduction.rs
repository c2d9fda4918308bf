//! Reduction by the S¹ action generated by `K`.
//!
//! Two descriptions of `K⁻¹(k)/S¹` are provided. The algebraic one uses the
//! nine invariants `K, u3, v3, X_i, Y_i` with their syzygies and Poisson
//! table. The local-section one uses canonical coordinates
//! `(θu, u3, θv, v3)` on the slice `z = i|z|` and is what the stability
//! and normal-form computations work in.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Scalar;
use crate::phase_space::{eval_k, s1_action, PhasePoint, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantPoint {
    pub k: f64,
    pub u3: f64,
    pub v3: f64,
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub x3: f64,
    pub y3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Invariant {
    K,
    U3,
    V3,
    X1,
    Y1,
    X2,
    Y2,
    X3,
    Y3,
}

impl Invariant {
    pub const ALL: [Invariant; 9] = [
        Invariant::K,
        Invariant::U3,
        Invariant::V3,
        Invariant::X1,
        Invariant::Y1,
        Invariant::X2,
        Invariant::Y2,
        Invariant::X3,
        Invariant::Y3,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Invariant::K => "K",
            Invariant::U3 => "u3",
            Invariant::V3 => "v3",
            Invariant::X1 => "X1",
            Invariant::Y1 => "Y1",
            Invariant::X2 => "X2",
            Invariant::Y2 => "Y2",
            Invariant::X3 => "X3",
            Invariant::Y3 => "Y3",
        };
        f.write_str(s)
    }
}

impl FromStr for Invariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Invariant::ALL
            .into_iter()
            .find(|i| i.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownInvariant(s.to_string()))
    }
}

impl InvariantPoint {
    pub fn to_array(&self) -> [f64; 9] {
        [self.k, self.u3, self.v3, self.x1, self.y1, self.x2, self.y2, self.x3, self.y3]
    }

    pub fn from_array(a: [f64; 9]) -> Self {
        InvariantPoint { k: a[0], u3: a[1], v3: a[2], x1: a[3], y1: a[4], x2: a[5], y2: a[6], x3: a[7], y3: a[8] }
    }

    pub fn get(&self, which: Invariant) -> f64 {
        self.to_array()[which.index()]
    }

    /// The nine syzygies `σ1 … σ9`.
    pub fn syzygies(&self) -> [f64; 9] {
        let InvariantPoint { k, u3, v3, x1, y1, x2, y2, x3, y3 } = *self;
        let w = k - u3 - v3;
        let cu = 1.0 - u3 * u3;
        let cv = 1.0 - v3 * v3;
        [
            x1 * x1 + y1 * y1 - 2.0 * cv * w,
            x2 * x2 + y2 * y2 - 2.0 * cu * w,
            x3 * x3 + y3 * y3 - cv * cu,
            x1 * x3 - y1 * y3 - cv * x2,
            x1 * y3 + x3 * y1 + cv * y2,
            x2 * x3 - y2 * y3 - cu * x1,
            x2 * y3 + x3 * y2 + cu * y1,
            x1 * x2 - y1 * y2 - 2.0 * w * x3,
            x1 * y2 + x2 * y1 + 2.0 * w * y3,
        ]
    }

    /// `(Ĥ1, Ĥ2)` written in the invariants.
    pub fn hamiltonians(&self, params: &SystemParams) -> (f64, f64) {
        let c = 2.0 * params.spin_coupling();
        let sg = std::f64::consts::SQRT_2 * params.g;
        let coupling = c * (self.x3 + self.u3 * self.v3);
        (
            (params.delta1 - params.omega) * self.u3 + sg * self.y2 - coupling,
            (params.delta2 - params.omega) * self.v3 - sg * self.y1 + coupling,
        )
    }
}

/// Evaluates all invariants at `pt`.
pub fn invariants_of(pt: &PhasePoint) -> InvariantPoint {
    let (u1, u2, u3) = (pt.u.x, pt.u.y, pt.u.z);
    let (v1, v2, v3) = (pt.v.x, pt.v.y, pt.v.z);
    let (q, p) = (pt.q, pt.p);
    InvariantPoint {
        k: eval_k(pt),
        u3,
        v3,
        x1: p * v1 + q * v2,
        y1: -q * v1 + p * v2,
        x2: p * u1 + q * u2,
        y2: q * u1 - p * u2,
        x3: u1 * v1 + u2 * v2,
        y3: u2 * v1 - u1 * v2,
    }
}

/// Entry `{a, b}` of the invariant Poisson table evaluated at `x`.
pub fn poisson_table_bracket(a: Invariant, b: Invariant, x: &InvariantPoint) -> f64 {
    use Invariant::*;
    let InvariantPoint { k, u3, v3, x1, y1, x2, y2, x3, y3 } = *x;
    let w = k - u3 - v3;
    let ca = 2.0 * v3 * w + 1.0 - v3 * v3;
    let cb = 2.0 * u3 * w + 1.0 - u3 * u3;
    let cc = u3 * (1.0 - v3 * v3) - (1.0 - u3 * u3) * v3;
    match (a, b) {
        (K, _) | (_, K) => 0.0,
        (U3, X2) => -y2,
        (U3, Y2) => x2,
        (U3, X3) => y3,
        (U3, Y3) => -x3,
        (U3, _) => 0.0,
        (V3, X1) => y1,
        (V3, Y1) => -x1,
        (V3, X3) => -y3,
        (V3, Y3) => x3,
        (V3, _) => 0.0,
        (X1, V3) => -y1,
        (X1, Y1) => ca,
        (X1, X2) => -y3,
        (X1, Y2) => -x3,
        (X1, X3) => -v3 * y2,
        (X1, Y3) => -v3 * x2,
        (X1, _) => 0.0,
        (Y1, V3) => x1,
        (Y1, X1) => -ca,
        (Y1, X2) => -x3,
        (Y1, Y2) => y3,
        (Y1, X3) => -v3 * x2,
        (Y1, Y3) => v3 * y2,
        (Y1, _) => 0.0,
        (X2, U3) => y2,
        (X2, X1) => y3,
        (X2, Y1) => x3,
        (X2, Y2) => -cb,
        (X2, X3) => u3 * y1,
        (X2, Y3) => u3 * x1,
        (X2, _) => 0.0,
        (Y2, U3) => -x2,
        (Y2, X1) => x3,
        (Y2, Y1) => -y3,
        (Y2, X2) => cb,
        (Y2, X3) => u3 * x1,
        (Y2, Y3) => -u3 * y1,
        (Y2, _) => 0.0,
        (X3, U3) => -y3,
        (X3, V3) => y3,
        (X3, X1) => v3 * y2,
        (X3, Y1) => v3 * x2,
        (X3, X2) => -u3 * y1,
        (X3, Y2) => -u3 * x1,
        (X3, Y3) => cc,
        (X3, _) => 0.0,
        (Y3, U3) => x3,
        (Y3, V3) => -x3,
        (Y3, X1) => v3 * x2,
        (Y3, Y1) => -v3 * y2,
        (Y3, X2) => -u3 * x1,
        (Y3, Y2) => u3 * y1,
        (Y3, X3) => -cc,
        (Y3, _) => 0.0,
    }
}

/// Same as [`poisson_table_bracket`] with invariants given by name.
pub fn poisson_table_bracket_named(a: &str, b: &str, x: &InvariantPoint) -> Result<f64> {
    Ok(poisson_table_bracket(a.parse()?, b.parse()?, x))
}

/// `{f, g}` for functions of the invariants, via the table and the chain rule.
pub fn invariant_bracket<F, G>(f: F, g: G, x: &InvariantPoint) -> f64
where
    F: Fn(&InvariantPoint) -> f64,
    G: Fn(&InvariantPoint) -> f64,
{
    let df = invariant_gradient(&f, x);
    let dg = invariant_gradient(&g, x);
    let mut s = 0.0;
    for a in Invariant::ALL {
        for b in Invariant::ALL {
            let t = poisson_table_bracket(a, b, x);
            if t != 0.0 {
                s += df[a.index()] * dg[b.index()] * t;
            }
        }
    }
    s
}

/// `{a, {b, c}} + {b, {c, a}} + {c, {a, b}}` at `x`, with inner brackets from the
/// table and outer brackets by the chain rule.
pub fn jacobi_defect(a: Invariant, b: Invariant, c: Invariant, x: &InvariantPoint) -> f64 {
    let outer = |p: Invariant, q: Invariant, r: Invariant| {
        invariant_bracket(move |y: &InvariantPoint| y.get(p), move |y: &InvariantPoint| poisson_table_bracket(q, r, y), x)
    };
    outer(a, b, c) + outer(b, c, a) + outer(c, a, b)
}

fn invariant_gradient<F: Fn(&InvariantPoint) -> f64>(f: &F, x: &InvariantPoint) -> [f64; 9] {
    let base = x.to_array();
    let mut g = [0.0; 9];
    for i in 0..9 {
        let h = 1e-6 * base[i].abs().max(1.0);
        let mut a = base;
        let mut b = base;
        a[i] += h;
        b[i] -= h;
        g[i] = (f(&InvariantPoint::from_array(a)) - f(&InvariantPoint::from_array(b))) / (2.0 * h);
    }
    g
}

/// Point in the local section chart `z = i|z|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedPoint {
    pub theta_u: f64,
    pub u3: f64,
    pub theta_v: f64,
    pub v3: f64,
    pub k: f64,
}

impl ReducedPoint {
    pub fn check(&self) -> Result<()> {
        if !(self.u3.abs() < 1.0 && self.v3.abs() < 1.0) {
            return Err(Error::Domain(format!("|u3|, |v3| must be < 1, got ({}, {})", self.u3, self.v3)));
        }
        if !(self.k - self.u3 - self.v3 > 0.0) {
            return Err(Error::Domain(format!("k - u3 - v3 = {} is not positive", self.k - self.u3 - self.v3)));
        }
        Ok(())
    }
}

/// Lift `s(R)` of a reduced point: `q = [2(k-u3-v3)]^{1/2}`, `p = 0`.
pub fn section_lift(r: &ReducedPoint) -> Result<PhasePoint> {
    r.check()?;
    let q = (2.0 * (r.k - r.u3 - r.v3)).sqrt();
    Ok(PhasePoint::from_angles(r.theta_u, r.u3, r.theta_v, r.v3, q, 0.0))
}

/// Rotates `pt` along its S¹ orbit into the section and reads off the chart coordinates.
pub fn to_section(pt: &PhasePoint) -> Result<ReducedPoint> {
    if pt.z_norm_sq() == 0.0 {
        return Err(Error::Domain("z = 0 lies outside the section".into()));
    }
    let r = s1_action(FRAC_PI_2 - pt.phi(), pt);
    let out = ReducedPoint { theta_u: r.theta_u(), u3: r.u.z, theta_v: r.theta_v(), v3: r.v.z, k: eval_k(&r) };
    out.check()?;
    Ok(out)
}

/// `(Ĥ1, Ĥ2)` in the section chart, generic so jets can be pushed through.
pub fn reduced_hamiltonians_generic<S: Scalar>(
    theta_u: S,
    u3: S,
    theta_v: S,
    v3: S,
    k: S,
    params: &SystemParams,
) -> (S, S) {
    let c = 2.0 * params.spin_coupling();
    let ru = (S::cst(1.0) - u3 * u3).sqrt();
    let rv = (S::cst(1.0) - v3 * v3).sqrt();
    let rz = (k - u3 - v3).sqrt();
    let spin = ru * rv * (theta_u - theta_v).cos() + u3 * v3;
    let h1 = u3 * (params.delta1 - params.omega) + ru * rz * theta_u.cos() * (2.0 * params.g) - spin * c;
    let h2 = v3 * (params.delta2 - params.omega) + rv * rz * theta_v.cos() * (2.0 * params.g) + spin * c;
    (h1, h2)
}

pub fn reduced_hamiltonians(r: &ReducedPoint, params: &SystemParams) -> Result<(f64, f64)> {
    r.check()?;
    Ok(reduced_hamiltonians_generic(r.theta_u, r.u3, r.theta_v, r.v3, r.k, params))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelzantPolygon {
    /// Vertices `(J1, J2) = (u3, v3)` in counter-clockwise order starting from `(-1, -1)`.
    pub vertices: Vec<(Rational64, Rational64)>,
}

impl DelzantPolygon {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Smoothness and unimodularity: at each vertex the primitive edge directions form a Z² basis.
    pub fn is_delzant(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let prev = self.vertices[(i + n - 1) % n];
            let cur = self.vertices[i];
            let next = self.vertices[(i + 1) % n];
            let a = primitive(next.0 - cur.0, next.1 - cur.1);
            let b = primitive(prev.0 - cur.0, prev.1 - cur.1);
            match (a, b) {
                (Some(a), Some(b)) => (a.0 * b.1 - a.1 * b.0).abs() == 1,
                _ => false,
            }
        })
    }

    pub fn vertices_f64(&self) -> Vec<[f64; 2]> {
        self.vertices.iter().map(|(a, b)| [ratio_to_f64(*a), ratio_to_f64(*b)]).collect()
    }
}

fn ratio_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Primitive integer direction of a rational vector, if it is parallel to one.
fn primitive(dx: Rational64, dy: Rational64) -> Option<(i64, i64)> {
    if dx == Rational64::from_integer(0) && dy == Rational64::from_integer(0) {
        return None;
    }
    let l = num_integer_lcm(*dx.denom(), *dy.denom());
    let (x, y) = ((dx * l).to_integer(), (dy * l).to_integer());
    let g = gcd_i64(x.abs(), y.abs());
    Some((x / g, y / g))
}

fn gcd_i64(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd_i64(b, a % b)
    }
}

fn num_integer_lcm(a: i64, b: i64) -> i64 {
    a / gcd_i64(a, b) * b
}

/// Moment polygon of the residual T² action on `K⁻¹(k)/S¹`.
pub fn delzant_polygon(k: f64) -> Result<DelzantPolygon> {
    if !k.is_finite() || k < -2.0 {
        return Err(Error::OutOfRange(format!("reduced space is empty for k = {k}")));
    }
    if k == -2.0 || k == 0.0 || k == 2.0 {
        return Err(Error::SingularReducedSpace(k));
    }
    let kr = Rational64::approximate_float(k)
        .ok_or_else(|| Error::OutOfRange(format!("k = {k} is not representable as a rational")))?;
    let one = Rational64::from_integer(1);
    let vertices = if k < 0.0 {
        vec![(-one, -one), (kr + one, -one), (-one, kr + one)]
    } else if k < 2.0 {
        vec![(-one, -one), (one, -one), (one, kr - one), (kr - one, one), (-one, one)]
    } else {
        vec![(-one, -one), (one, -one), (one, one), (-one, one)]
    };
    Ok(DelzantPolygon { vertices })
}
