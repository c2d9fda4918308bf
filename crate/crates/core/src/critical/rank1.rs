use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::frobenius;
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::phase_space::{eval_integrals, vector_field, Integral, IntegralValue, PhasePoint, SystemParams};
use crate::reduction::{reduced_hamiltonians_generic, ReducedPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rank1Family {
    L1,
    L2,
    L3,
    L4,
    L5,
    L6,
    L7,
    L8,
    Hh,
    CStar,
    /// A point of the general `(x, y)` parameterisation.
    General,
}

impl Rank1Family {
    pub const THREADS: [Rank1Family; 8] = [
        Rank1Family::L1,
        Rank1Family::L2,
        Rank1Family::L3,
        Rank1Family::L4,
        Rank1Family::L5,
        Rank1Family::L6,
        Rank1Family::L7,
        Rank1Family::L8,
    ];

    /// Open `b` interval of a thread; the degenerate points return a point interval.
    pub fn interval(self) -> (f64, f64) {
        let c = 2f64.powf(2.0 / 3.0);
        match self {
            Rank1Family::L1 => (0.25, c),
            Rank1Family::L2 => (c, 4.0),
            Rank1Family::L3 | Rank1Family::L4 => (c, b_max()),
            Rank1Family::L5 | Rank1Family::L7 | Rank1Family::L8 => (0.0, 0.25),
            Rank1Family::L6 => (-4.0, 0.0),
            Rank1Family::Hh => (0.25, 0.25),
            Rank1Family::CStar => (c, c),
            Rank1Family::General => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Branch `a(b)` of the resonant relation.
    pub fn a_of_b(self, b: f64) -> f64 {
        match self {
            Rank1Family::L3 => -(b * b - 2.0 * b.sqrt()).sqrt(),
            Rank1Family::L4 => (b * b - 2.0 * b.sqrt()).sqrt(),
            Rank1Family::L7 => (b * b + 2.0 * b.sqrt()).sqrt(),
            Rank1Family::L8 => -(b * b + 2.0 * b.sqrt()).sqrt(),
            _ => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rank1Family::L1 => "l1",
            Rank1Family::L2 => "l2",
            Rank1Family::L3 => "l3",
            Rank1Family::L4 => "l4",
            Rank1Family::L5 => "l5",
            Rank1Family::L6 => "l6",
            Rank1Family::L7 => "l7",
            Rank1Family::L8 => "l8",
            Rank1Family::Hh => "hh",
            Rank1Family::CStar => "c*",
            Rank1Family::General => "general",
        }
    }
}

impl fmt::Display for Rank1Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rank1Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let all = [
            Rank1Family::L1,
            Rank1Family::L2,
            Rank1Family::L3,
            Rank1Family::L4,
            Rank1Family::L5,
            Rank1Family::L6,
            Rank1Family::L7,
            Rank1Family::L8,
            Rank1Family::Hh,
            Rank1Family::CStar,
        ];
        all.into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s) || (s.eq_ignore_ascii_case("cstar") && *f == Rank1Family::CStar))
            .ok_or_else(|| Error::OutOfRange(format!("unknown rank-1 family `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rank1Type {
    EER,
    EHR,
    HHR,
    FFR,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rank1Sample {
    pub family: Rank1Family,
    pub a: f64,
    pub b: f64,
    pub x: f64,
    pub y: f64,
    /// Representative on the S¹ orbit with `z = i|z|`.
    pub point: PhasePoint,
    pub critical_value: IntegralValue,
    pub kind: Rank1Type,
    /// `max(‖X_H1 - x X_K‖, ‖X_H2 - y X_K‖)` at `point`.
    pub residual: f64,
}

/// Largest `b` of the threads ℓ3, ℓ4, from the radical closed form.
pub fn b_max_radical() -> f64 {
    // (3455 - 48√5181)(3455 + 48√5181) = 1, which avoids the cancellation in the small root
    let big = (3455.0 + 48.0 * 5181f64.sqrt()).cbrt();
    (2.0 + 1.0 / big + big) / 12.0
}

pub fn b_max() -> f64 {
    b_max_radical()
}

/// `K` value of the central critical value.
pub fn k_star() -> f64 {
    (12.0 * 2f64.powf(2.0 / 3.0) - 1.0) / 16.0
}

/// The central critical value where ℓ1…ℓ4 meet.
pub fn central_value() -> IntegralValue {
    let h = 2.0 - 3.0 * 2f64.powf(-2.0 / 3.0);
    IntegralValue::new(h, -h, k_star())
}

/// `4g⁴(x²-y²) + (δ2-δ1)x²y²(2(x+y) - (δ1+δ2-2ω))` and the size of its terms.
fn relation_xy(x: f64, y: f64, p: &SystemParams) -> (f64, f64) {
    let g4 = p.g.powi(4);
    let t1 = 4.0 * g4 * (x * x - y * y);
    let t2 = (p.delta2 - p.delta1) * x * x * y * y * (2.0 * (x + y) - (p.delta1 + p.delta2 - 2.0 * p.omega));
    (t1 + t2, (4.0 * g4 * (x * x + y * y)).max(t2.abs()).max(1.0))
}

/// Phase-space representative for `X_H1 = x X_K`, `X_H2 = y X_K`, without the relation check.
fn build_point(x: f64, y: f64, p: &SystemParams) -> Result<PhasePoint> {
    let g2 = p.g * p.g;
    let u3 = -x / (2.0 * g2) * (x + y - (p.delta1 - p.omega));
    let v3 = -y / (2.0 * g2) * (x + y - (p.delta2 - p.omega));
    // the two expressions for |z|² agree on the relation; use the better-conditioned one
    let zz = if x.abs() >= y.abs() {
        2.0 * g2 / (x * x) - (x + y - (p.delta1 - p.omega)).powi(2) / (2.0 * g2)
    } else {
        2.0 * g2 / (y * y) - (x + y - (p.delta2 - p.omega)).powi(2) / (2.0 * g2)
    };
    if !(u3.abs() <= 1.0 && v3.abs() <= 1.0) || !(zz >= 0.0) || !zz.is_finite() {
        return Err(Error::ConstraintViolation(format!("u3 = {u3}, v3 = {v3}, |z|² = {zz}")));
    }
    let r = zz.sqrt();
    let su = x * r / (SQRT_2 * p.g);
    let sv = y * r / (SQRT_2 * p.g);
    Ok(PhasePoint::new_unchecked([su, 0.0, u3], [sv, 0.0, v3], r, 0.0))
}

fn proportionality_residual(pt: &PhasePoint, x: f64, y: f64, p: &SystemParams) -> f64 {
    let xk = vector_field(Integral::K, pt, p);
    let r1 = (vector_field(Integral::H1, pt, p) - x * xk).norm();
    let r2 = (vector_field(Integral::H2, pt, p) - y * xk).norm();
    r1.max(r2)
}

fn assemble(family: Rank1Family, a: f64, b: f64, x: f64, y: f64, p: &SystemParams) -> Result<Rank1Sample> {
    let point = build_point(x, y, p)?;
    let mut s = Rank1Sample {
        family,
        a,
        b,
        x,
        y,
        point,
        critical_value: eval_integrals(&point, p),
        kind: Rank1Type::Degenerate,
        residual: proportionality_residual(&point, x, y, p),
    };
    s.kind = rank1_classify_with(&s, p);
    Ok(s)
}

/// Sample of a resonant-parameter thread at parameter `b`.
pub fn rank1_sample(family: Rank1Family, b: f64) -> Result<Rank1Sample> {
    let (lo, hi) = family.interval();
    match family {
        Rank1Family::General => {
            return Err(Error::OutOfRange("use rank1_general for the general parameterisation".into()))
        }
        Rank1Family::Hh | Rank1Family::CStar => {
            if (b - lo).abs() > 1e-9 {
                return Err(Error::OutOfRange(format!("{family} requires b = {lo}, got {b}")));
            }
        }
        _ => {
            if !(b > lo && b < hi) {
                return Err(Error::OutOfRange(format!("b = {b} outside ({lo}, {hi}) for {family}")));
            }
        }
    }
    let b = if matches!(family, Rank1Family::Hh | Rank1Family::CStar) { lo } else { b };
    let a = family.a_of_b(b);
    assemble(family, a, b, a - b, a + b, &SystemParams::STC)
}

/// Critical value of a thread at `b`, without classifying the point.
pub(crate) fn rank1_value(family: Rank1Family, b: f64) -> Option<IntegralValue> {
    let (lo, hi) = family.interval();
    if !(b > lo && b < hi) {
        return None;
    }
    let a = family.a_of_b(b);
    build_point(a - b, a + b, &SystemParams::STC).ok().map(|pt| eval_integrals(&pt, &SystemParams::STC))
}

/// The degenerate points hh and c*.
pub fn rank1_special(family: Rank1Family) -> Result<Rank1Sample> {
    rank1_sample(family, family.interval().0)
}

/// Rank-1 point for general parameters, `None` if the constraints fail.
pub fn rank1_general(x: f64, y: f64, params: &SystemParams) -> Result<Option<Rank1Sample>> {
    params.validate()?;
    let (rel, scale) = relation_xy(x, y, params);
    if rel.abs() > 1e-10 * scale {
        return Err(Error::RelationViolated(rel));
    }
    match assemble(Rank1Family::General, (x + y) / 2.0, (y - x) / 2.0, x, y, params) {
        Ok(s) => Ok(Some(s)),
        Err(Error::ConstraintViolation(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `n` samples of a thread at interior parameters `lo + (hi-lo)·i/(n+1)`.
pub fn rank1_thread(family: Rank1Family, n: usize) -> Vec<Rank1Sample> {
    let (lo, hi) = family.interval();
    (1..=n)
        .filter_map(|i| rank1_sample(family, lo + (hi - lo) * i as f64 / (n + 1) as f64).ok())
        .collect()
}

/// `(DX_{Ĥ+}, DX_{Ĥ-})` in the section chart `(θu, u3, θv, v3)` at the sample.
pub fn reduced_linearizations(sample: &Rank1Sample, params: &SystemParams) -> (Matrix4<f64>, Matrix4<f64>) {
    let pt = &sample.point;
    let r = ReducedPoint {
        theta_u: pt.theta_u(),
        u3: pt.u.z,
        theta_v: pt.theta_v(),
        v3: pt.v.z,
        k: sample.critical_value.k,
    };
    let vars = [r.theta_u, r.u3, r.theta_v, r.v3, r.k];
    let j: Vec<Jet> = (0..5).map(|i| Jet::variable(vars[i], i)).collect();
    let (h1, h2) = reduced_hamiltonians_generic(j[0], j[1], j[2], j[3], j[4], params);
    (symplectic_times_hessian(&(h1 + h2)), symplectic_times_hessian(&(h1 - h2)))
}

/// `Ω·Hess` with `θ̇ = ∂H/∂u3`, `u̇3 = -∂H/∂θ` on both canonical pairs.
fn symplectic_times_hessian(h: &Jet) -> Matrix4<f64> {
    let hess = h.hessian();
    Matrix4::from_fn(|i, j| match i {
        0 => hess[1][j],
        1 => -hess[0][j],
        2 => hess[3][j],
        _ => -hess[2][j],
    })
}

/// Gradient of `(Ĥ1, Ĥ2)` in the four chart directions at the sample.
pub fn reduced_gradients(sample: &Rank1Sample, params: &SystemParams) -> ([f64; 4], [f64; 4]) {
    let pt = &sample.point;
    let vars = [pt.theta_u(), pt.u.z, pt.theta_v(), pt.v.z, sample.critical_value.k];
    let j: Vec<Jet> = (0..5).map(|i| Jet::variable(vars[i], i)).collect();
    let (h1, h2) = reduced_hamiltonians_generic(j[0], j[1], j[2], j[3], j[4], params);
    let (g1, g2) = (h1.gradient(), h2.gradient());
    ([g1[0], g1[1], g1[2], g1[3]], [g2[0], g2[1], g2[2], g2[3]])
}

/// Characteristic polynomial `det(r I - m)`, lowest degree first (Faddeev-LeVerrier).
pub fn char_poly4(m: &Matrix4<f64>) -> [f64; 5] {
    let mut c = [0.0; 5];
    c[4] = 1.0;
    let mut mk = Matrix4::<f64>::zeros();
    for k in 1..=4 {
        mk = m * (mk + Matrix4::identity() * c[5 - k]);
        c[4 - k] = -mk.trace() / k as f64;
    }
    c
}

/// Williamson type of a rank-1 point, from a generic combination of `DX_{Ĥ+}` and `DX_{Ĥ-}`.
pub fn rank1_classify(sample: &Rank1Sample) -> Rank1Type {
    rank1_classify_with(sample, &SystemParams::STC)
}

fn rank1_classify_with(sample: &Rank1Sample, params: &SystemParams) -> Rank1Type {
    let (plus, minus) = reduced_linearizations(sample, params);
    let (np, nm) = (frobenius(&plus), frobenius(&minus));
    let scale = np.max(nm);
    // the two linearisations must span a plane, otherwise the point is degenerate
    let overlap = plus.dot(&minus);
    let sin2 = 1.0 - (overlap * overlap) / (np * np * nm * nm).max(f64::MIN_POSITIVE);
    if !scale.is_finite() || np <= 1e-8 * scale || nm <= 1e-8 * scale || sin2 <= 1e-12 {
        return Rank1Type::Degenerate;
    }
    for phi in [0.618_033_988_749_894_9, std::f64::consts::SQRT_2] {
        if let Some(t) = hamiltonian4_type(&(plus + minus * phi)) {
            return t;
        }
    }
    Rank1Type::Degenerate
}

/// Type of a 4×4 Hamiltonian matrix from its characteristic polynomial `r⁴ + c2 r² + c0`.
///
/// Works with `s = r²`, so the result is insensitive to the `√ε` splitting that
/// rounding causes in the eigenvalues of a nilpotent or non-semisimple matrix.
/// `None` on a zero or repeated eigenvalue.
fn hamiltonian4_type(m: &Matrix4<f64>) -> Option<Rank1Type> {
    let c = char_poly4(m);
    let (c2, c0) = (c[2], c[0]);
    let s_scale = c2.abs().max(c0.abs().sqrt()).max(f64::MIN_POSITIVE);
    let disc = c2 * c2 - 4.0 * c0;
    let tol = 1e-9 * s_scale * s_scale;
    if c0.abs() <= tol || disc.abs() <= tol || s_scale <= 1e-12 * frobenius(m).powi(2) {
        return None;
    }
    if disc < 0.0 {
        return Some(Rank1Type::FFR);
    }
    let r = disc.sqrt();
    let roots = [0.5 * (-c2 - r), 0.5 * (-c2 + r)];
    Some(match roots.iter().filter(|s| **s < 0.0).count() {
        2 => Rank1Type::EER,
        1 => Rank1Type::EHR,
        _ => Rank1Type::HHR,
    })
}
