//! Phase space `S²_u × S²_v × R²`, the integral map and its Hamiltonian vector fields.
//!
//! Points are stored in ambient coordinates `(u1, u2, u3, v1, v2, v3, q, p)`.
//! The complex coordinates `u = u1 + i u2`, `v = v1 + i v2`, `z = p + i q`
//! never appear explicitly: every formula below is its expanded real form.
//!
//! Sign conventions: `X_f(g) = {g, f}` with `{u_i, u_j} = ε_ijk u_k` (same for v)
//! and `{q, p} = 1`. In ambient form this gives `u̇ = ∇_u f × u`, `v̇ = ∇_v f × v`,
//! `q̇ = ∂_p f`, `ṗ = -∂_q f`.

use std::f64::consts::SQRT_2;
use std::ops::{Add, Mul, Sub};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating sphere membership.
pub const SPHERE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub delta1: f64,
    pub delta2: f64,
    pub omega: f64,
    pub g: f64,
}

impl SystemParams {
    /// The resonant parameter set `(1/2, 3/2, 1, 1)`.
    pub const STC: SystemParams = SystemParams { delta1: 0.5, delta2: 1.5, omega: 1.0, g: 1.0 };

    pub fn new(delta1: f64, delta2: f64, omega: f64, g: f64) -> Result<Self> {
        let p = SystemParams { delta1, delta2, omega, g };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.delta1, self.delta2, self.omega, self.g];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        if self.delta1 == self.delta2 {
            return Err(Error::InvalidParams("delta1 must differ from delta2".into()));
        }
        if self.g == 0.0 {
            return Err(Error::InvalidParams("coupling g must be non-zero".into()));
        }
        Ok(())
    }

    /// `g² / (δ2 − δ1)`, the spin-spin coupling strength appearing in `H1`, `H2`.
    pub fn spin_coupling(&self) -> f64 {
        self.g * self.g / (self.delta2 - self.delta1)
    }

    /// Whether `δ1 + δ2 = 2ω` holds to rounding.
    pub fn is_resonant(&self) -> bool {
        (self.delta1 + self.delta2 - 2.0 * self.omega).abs() <= 1e-14 * (1.0 + self.omega.abs())
    }

    pub fn is_stc(&self) -> bool {
        *self == Self::STC
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::STC
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub u: Vector3<f64>,
    pub v: Vector3<f64>,
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    /// Builds a point and checks both sphere constraints.
    pub fn new(u: [f64; 3], v: [f64; 3], q: f64, p: f64) -> Result<Self> {
        let pt = Self::new_unchecked(u, v, q, p);
        pt.check()?;
        Ok(pt)
    }

    pub fn new_unchecked(u: [f64; 3], v: [f64; 3], q: f64, p: f64) -> Self {
        PhasePoint { u: Vector3::from(u), v: Vector3::from(v), q, p }
    }

    /// The S¹ fixed point `(0, σu; 0, σv; 0)`.
    pub fn fixed_point(sigma_u: f64, sigma_v: f64) -> Self {
        Self::new_unchecked([0.0, 0.0, sigma_u.signum()], [0.0, 0.0, sigma_v.signum()], 0.0, 0.0)
    }

    /// Point from spherical angles and heights, with the oscillator given in `(q, p)`.
    pub fn from_angles(theta_u: f64, u3: f64, theta_v: f64, v3: f64, q: f64, p: f64) -> Self {
        let ru = (1.0 - u3 * u3).max(0.0).sqrt();
        let rv = (1.0 - v3 * v3).max(0.0).sqrt();
        Self::new_unchecked(
            [ru * theta_u.cos(), ru * theta_u.sin(), u3],
            [rv * theta_v.cos(), rv * theta_v.sin(), v3],
            q,
            p,
        )
    }

    pub fn from_array(a: [f64; 8]) -> Self {
        Self::new_unchecked([a[0], a[1], a[2]], [a[3], a[4], a[5]], a[6], a[7])
    }

    pub fn to_array(&self) -> [f64; 8] {
        [self.u.x, self.u.y, self.u.z, self.v.x, self.v.y, self.v.z, self.q, self.p]
    }

    pub fn sphere_defects(&self) -> (f64, f64) {
        (self.u.norm_squared() - 1.0, self.v.norm_squared() - 1.0)
    }

    pub fn check(&self) -> Result<()> {
        let (du, dv) = self.sphere_defects();
        if self.to_array().iter().any(|x| !x.is_finite()) || du.abs() > SPHERE_TOL || dv.abs() > SPHERE_TOL {
            return Err(Error::OffSphere { u_defect: du, v_defect: dv });
        }
        Ok(())
    }

    /// Radial projection of both spin vectors back onto the unit sphere.
    pub fn project(&self) -> Self {
        PhasePoint { u: self.u.normalize(), v: self.v.normalize(), q: self.q, p: self.p }
    }

    pub fn theta_u(&self) -> f64 {
        self.u.y.atan2(self.u.x)
    }

    pub fn theta_v(&self) -> f64 {
        self.v.y.atan2(self.v.x)
    }

    /// Polar angle of the oscillator, `p + i q = √(2J) e^{iφ}`.
    pub fn phi(&self) -> f64 {
        self.q.atan2(self.p)
    }

    /// `|z|² = p² + q²`.
    pub fn z_norm_sq(&self) -> f64 {
        self.p * self.p + self.q * self.q
    }

    pub fn distance(&self, other: &PhasePoint) -> f64 {
        let a = self.to_array();
        let b = other.to_array();
        a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralValue {
    pub h1: f64,
    pub h2: f64,
    pub k: f64,
}

impl IntegralValue {
    pub const fn new(h1: f64, h2: f64, k: f64) -> Self {
        IntegralValue { h1, h2, k }
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.h1, self.h2, self.k]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        IntegralValue { h1: a[0], h2: a[1], k: a[2] }
    }

    /// Physical Hamiltonian `H = H1 + H2 + ω K` at this value.
    pub fn hamiltonian(&self, params: &SystemParams) -> f64 {
        self.h1 + self.h2 + params.omega * self.k
    }

    pub fn distance(&self, other: &IntegralValue) -> f64 {
        ((self.h1 - other.h1).powi(2) + (self.h2 - other.h2).powi(2) + (self.k - other.k).powi(2)).sqrt()
    }

    pub fn lerp(&self, other: &IntegralValue, t: f64) -> IntegralValue {
        IntegralValue {
            h1: self.h1 + t * (other.h1 - self.h1),
            h2: self.h2 + t * (other.h2 - self.h2),
            k: self.k + t * (other.k - self.k),
        }
    }
}

/// Tangent vector at a phase point, same layout as [`PhasePoint`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TangentVector {
    pub du: Vector3<f64>,
    pub dv: Vector3<f64>,
    pub dq: f64,
    pub dp: f64,
}

impl TangentVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn to_array(&self) -> [f64; 8] {
        [self.du.x, self.du.y, self.du.z, self.dv.x, self.dv.y, self.dv.z, self.dq, self.dp]
    }

    pub fn norm(&self) -> f64 {
        self.to_array().iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl Add for TangentVector {
    type Output = TangentVector;
    fn add(self, o: TangentVector) -> TangentVector {
        TangentVector { du: self.du + o.du, dv: self.dv + o.dv, dq: self.dq + o.dq, dp: self.dp + o.dp }
    }
}

impl Sub for TangentVector {
    type Output = TangentVector;
    fn sub(self, o: TangentVector) -> TangentVector {
        TangentVector { du: self.du - o.du, dv: self.dv - o.dv, dq: self.dq - o.dq, dp: self.dp - o.dp }
    }
}

impl Mul<TangentVector> for f64 {
    type Output = TangentVector;
    fn mul(self, t: TangentVector) -> TangentVector {
        TangentVector { du: self * t.du, dv: self * t.dv, dq: self * t.dq, dp: self * t.dp }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Integral {
    H1,
    H2,
    K,
}

impl Integral {
    pub const ALL: [Integral; 3] = [Integral::H1, Integral::H2, Integral::K];
}

/// Ambient gradient of one of the integrals (its polynomial extension to R⁸).
#[derive(Debug, Clone, Copy)]
pub struct Gradient {
    pub du: Vector3<f64>,
    pub dv: Vector3<f64>,
    pub dq: f64,
    pub dp: f64,
}

impl Gradient {
    /// Component tangent to the constraint manifold at `pt`.
    pub fn tangential(&self, pt: &PhasePoint) -> [f64; 8] {
        let du = self.du - self.du.dot(&pt.u) / pt.u.norm_squared() * pt.u;
        let dv = self.dv - self.dv.dot(&pt.v) / pt.v.norm_squared() * pt.v;
        [du.x, du.y, du.z, dv.x, dv.y, dv.z, self.dq, self.dp]
    }

    /// Hamiltonian vector field generated by this gradient.
    pub fn hamiltonian_field(&self, pt: &PhasePoint) -> TangentVector {
        TangentVector { du: self.du.cross(&pt.u), dv: self.dv.cross(&pt.v), dq: self.dp, dp: -self.dq }
    }
}

pub fn eval_h1(pt: &PhasePoint, params: &SystemParams) -> f64 {
    let c = params.spin_coupling();
    (params.delta1 - params.omega) * pt.u.z + SQRT_2 * params.g * (pt.q * pt.u.x - pt.p * pt.u.y)
        - 2.0 * c * pt.u.dot(&pt.v)
}

pub fn eval_h2(pt: &PhasePoint, params: &SystemParams) -> f64 {
    let c = params.spin_coupling();
    (params.delta2 - params.omega) * pt.v.z + SQRT_2 * params.g * (pt.q * pt.v.x - pt.p * pt.v.y)
        + 2.0 * c * pt.u.dot(&pt.v)
}

pub fn eval_k(pt: &PhasePoint) -> f64 {
    pt.u.z + pt.v.z + 0.5 * pt.z_norm_sq()
}

/// The integral map `F = (H1, H2, K)`.
pub fn eval_integrals(pt: &PhasePoint, params: &SystemParams) -> IntegralValue {
    IntegralValue { h1: eval_h1(pt, params), h2: eval_h2(pt, params), k: eval_k(pt) }
}

/// Physical Hamiltonian, evaluated directly from its defining formula.
pub fn eval_hamiltonian(pt: &PhasePoint, params: &SystemParams) -> f64 {
    params.delta1 * pt.u.z
        + params.delta2 * pt.v.z
        + 0.5 * params.omega * pt.z_norm_sq()
        + SQRT_2 * params.g * (pt.q * pt.u.x - pt.p * pt.u.y)
        + SQRT_2 * params.g * (pt.q * pt.v.x - pt.p * pt.v.y)
}

pub fn gradient(which: Integral, pt: &PhasePoint, params: &SystemParams) -> Gradient {
    let c = params.spin_coupling();
    let sg = SQRT_2 * params.g;
    match which {
        Integral::H1 => Gradient {
            du: Vector3::new(
                sg * pt.q - 2.0 * c * pt.v.x,
                -sg * pt.p - 2.0 * c * pt.v.y,
                (params.delta1 - params.omega) - 2.0 * c * pt.v.z,
            ),
            dv: -2.0 * c * pt.u,
            dq: sg * pt.u.x,
            dp: -sg * pt.u.y,
        },
        Integral::H2 => Gradient {
            du: 2.0 * c * pt.v,
            dv: Vector3::new(
                sg * pt.q + 2.0 * c * pt.u.x,
                -sg * pt.p + 2.0 * c * pt.u.y,
                (params.delta2 - params.omega) + 2.0 * c * pt.u.z,
            ),
            dq: sg * pt.v.x,
            dp: -sg * pt.v.y,
        },
        Integral::K => Gradient { du: Vector3::z(), dv: Vector3::z(), dq: pt.q, dp: pt.p },
    }
}

pub fn vector_field(which: Integral, pt: &PhasePoint, params: &SystemParams) -> TangentVector {
    gradient(which, pt, params).hamiltonian_field(pt)
}

/// `a1 X_H1 + a2 X_H2 + a3 X_K`.
pub fn combined_field(coeffs: [f64; 3], pt: &PhasePoint, params: &SystemParams) -> TangentVector {
    let mut out = TangentVector::zero();
    for (a, which) in coeffs.iter().zip(Integral::ALL) {
        if *a != 0.0 {
            out = out + *a * vector_field(which, pt, params);
        }
    }
    out
}

/// Time-`t` map of the S¹ action generated by `K`: rotates `u`, `v` and `z` by `t`.
pub fn s1_action(t: f64, pt: &PhasePoint) -> PhasePoint {
    let (s, c) = t.sin_cos();
    let rot = |x: f64, y: f64| (c * x - s * y, s * x + c * y);
    let (u1, u2) = rot(pt.u.x, pt.u.y);
    let (v1, v2) = rot(pt.v.x, pt.v.y);
    // z = p + i q
    let (p, q) = rot(pt.p, pt.q);
    PhasePoint::new_unchecked([u1, u2, pt.u.z], [v1, v2, pt.v.z], q, p)
}

/// Poisson bracket of two scalar fields computed from central finite-difference
/// gradients and the `so(3) ⊕ so(3) ⊕ sp(2,R)` structure.
pub fn poisson_bracket_fd<F, G>(f: F, g: G, pt: &PhasePoint) -> f64
where
    F: Fn(&PhasePoint) -> f64,
    G: Fn(&PhasePoint) -> f64,
{
    let gf = fd_gradient(&f, pt);
    let gg = fd_gradient(&g, pt);
    let fu = Vector3::new(gf[0], gf[1], gf[2]);
    let fv = Vector3::new(gf[3], gf[4], gf[5]);
    let gu = Vector3::new(gg[0], gg[1], gg[2]);
    let gv = Vector3::new(gg[3], gg[4], gg[5]);
    fu.dot(&gu.cross(&pt.u)) + fv.dot(&gv.cross(&pt.v)) + gf[6] * gg[7] - gf[7] * gg[6]
}

fn fd_gradient<F: Fn(&PhasePoint) -> f64>(f: &F, pt: &PhasePoint) -> [f64; 8] {
    let base = pt.to_array();
    let mut out = [0.0; 8];
    for i in 0..8 {
        let h = 1e-6 * base[i].abs().max(1.0);
        let mut plus = base;
        let mut minus = base;
        plus[i] += h;
        minus[i] -= h;
        out[i] = (f(&PhasePoint::from_array(plus)) - f(&PhasePoint::from_array(minus))) / (2.0 * h);
    }
    out
}

/// Value of the integrals at the fixed point `(0, σu; 0, σv; 0)` from the closed form.
pub fn fixed_point_value(sigma_u: f64, sigma_v: f64, params: &SystemParams) -> IntegralValue {
    let c = 2.0 * params.spin_coupling();
    IntegralValue {
        h1: (params.delta1 - params.omega) * sigma_u - c * sigma_u * sigma_v,
        h2: (params.delta2 - params.omega) * sigma_v + c * sigma_u * sigma_v,
        k: sigma_u + sigma_v,
    }
}

/// Uniformly distributed random phase point with oscillator coordinates in `[-r, r]²`.
pub fn random_point<R: rand::Rng>(rng: &mut R, r: f64) -> PhasePoint {
    let sphere = |rng: &mut R| loop {
        let x = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = x.norm();
        if n > 1e-3 && n <= 1.0 {
            return x / n;
        }
    };
    let u = sphere(rng);
    let v = sphere(rng);
    PhasePoint { u, v, q: rng.gen_range(-r..r), p: rng.gen_range(-r..r) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const STC: SystemParams = SystemParams::STC;

    #[test]
    fn fixed_point_values() {
        let f1 = eval_integrals(&PhasePoint::fixed_point(-1.0, -1.0), &STC);
        assert_eq!(f1, IntegralValue::new(-1.5, 1.5, -2.0));
        let f3 = eval_integrals(&PhasePoint::fixed_point(-1.0, 1.0), &STC);
        assert_eq!(f3, IntegralValue::new(2.5, -1.5, 0.0));
        let general = SystemParams::new(0.3, 1.7, 0.8, 1.3).unwrap();
        let top = eval_integrals(&PhasePoint::fixed_point(1.0, 1.0), &general);
        let closed = fixed_point_value(1.0, 1.0, &general);
        assert!((top.h1 - closed.h1).abs() < 1e-15 && (top.h2 - closed.h2).abs() < 1e-15);
        assert_eq!(top.k, 2.0);
    }

    #[test]
    fn rejects_equal_detunings() {
        assert!(SystemParams::new(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(SystemParams::new(0.5, 1.5, 1.0, 0.0).is_err());
        assert!(STC.is_resonant());
    }

    #[test]
    fn off_sphere_rejected() {
        assert!(PhasePoint::new([1.0, 0.1, 0.0], [0.0, 0.0, 1.0], 0.0, 0.0).is_err());
        assert!(PhasePoint::new([1.0, 0.0, 0.0], [0.0, 0.0, 1.0], 3.0, 0.0).is_ok());
    }

    #[test]
    fn k_field_vanishes_at_fixed_points() {
        for (su, sv) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let x = vector_field(Integral::K, &PhasePoint::fixed_point(su, sv), &STC);
            assert_eq!(x.norm(), 0.0);
        }
    }

    #[test]
    fn k_field_rotates_oscillator() {
        let pt = PhasePoint::new_unchecked([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 0.7, -0.3);
        let x = vector_field(Integral::K, &pt, &STC);
        assert_eq!((x.dp, x.dq), (-0.7, -0.3));
    }

    #[test]
    fn hamiltonian_decomposes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = SystemParams::new(0.4, 1.9, 1.3, 0.7).unwrap();
        for _ in 0..100 {
            let pt = random_point(&mut rng, 2.0);
            let f = eval_integrals(&pt, &params);
            let h = eval_hamiltonian(&pt, &params);
            assert!((f.hamiltonian(&params) - h).abs() < 1e-13 * (1.0 + h.abs()));
        }
    }

    #[test]
    fn fields_are_tangent() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let pt = random_point(&mut rng, 2.0);
            for which in Integral::ALL {
                let x = vector_field(which, &pt, &STC);
                assert!(pt.u.dot(&x.du).abs() < 1e-12);
                assert!(pt.v.dot(&x.dv).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn x_h1_preserves_h2() {
        // directional derivative of H2 along X_H1 by central differences
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let pt = random_point(&mut rng, 1.5);
            let x = vector_field(Integral::H1, &pt, &STC).to_array();
            let a = pt.to_array();
            let h = 1e-5;
            let shifted = |s: f64| {
                let mut b = a;
                for i in 0..8 {
                    b[i] += s * x[i];
                }
                eval_h2(&PhasePoint::from_array(b), &STC)
            };
            let d = (shifted(h) - shifted(-h)) / (2.0 * h);
            assert!(d.abs() < 1e-10, "directional derivative {d}");
        }
    }

    #[test]
    fn s1_action_identity_and_period() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pt = random_point(&mut rng, 1.0);
        assert_eq!(s1_action(0.0, &pt), pt);
        assert!(s1_action(2.0 * std::f64::consts::PI, &pt).distance(&pt) < 1e-14);
        let r = s1_action(std::f64::consts::FRAC_PI_3, &pt);
        let (a, b) = (eval_integrals(&pt, &STC), eval_integrals(&r, &STC));
        assert!(a.distance(&b) < 1e-12);
    }

    #[test]
    fn s1_action_matches_k_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pt = random_point(&mut rng, 1.0);
        let h = 1e-6;
        let a = s1_action(h, &pt).to_array();
        let b = s1_action(-h, &pt).to_array();
        let x = vector_field(Integral::K, &pt, &STC).to_array();
        for i in 0..8 {
            assert!(((a[i] - b[i]) / (2.0 * h) - x[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn brackets_of_integrals_vanish() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let params = SystemParams::new(0.2, 1.1, 0.9, 1.4).unwrap();
        for _ in 0..30 {
            let pt = random_point(&mut rng, 1.5);
            let h1 = |x: &PhasePoint| eval_h1(x, &params);
            let h2 = |x: &PhasePoint| eval_h2(x, &params);
            assert!(poisson_bracket_fd(h1, eval_k, &pt).abs() < 1e-8);
            assert!(poisson_bracket_fd(h2, eval_k, &pt).abs() < 1e-8);
            assert!(poisson_bracket_fd(h1, h2, &pt).abs() < 1e-8);
        }
    }

    #[test]
    fn spin_bracket_matches_structure_constants() {
        let pt = PhasePoint::new_unchecked([0.6, 0.8, 0.0], [0.0, 0.0, 1.0], 0.0, 0.0);
        let u1 = |x: &PhasePoint| x.u.x;
        let u2 = |x: &PhasePoint| x.u.y;
        let u3 = |x: &PhasePoint| x.u.z;
        // {u3, u1} = u2, {u1, u2} = u3, {u2, u3} = u1
        assert!((poisson_bracket_fd(u3, u1, &pt) - 0.8).abs() < 1e-9);
        assert!(poisson_bracket_fd(u1, u2, &pt).abs() < 1e-9);
        assert!((poisson_bracket_fd(u2, u3, &pt) - 0.6).abs() < 1e-9);
        let q = |x: &PhasePoint| x.q;
        let p = |x: &PhasePoint| x.p;
        assert!((poisson_bracket_fd(q, p, &pt) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn vector_field_agrees_with_bracket() {
        // X_f(g) = {g, f}
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pt = random_point(&mut rng, 1.0);
        let x = vector_field(Integral::H1, &pt, &STC);
        let h1 = |y: &PhasePoint| eval_h1(y, &STC);
        let comp = |i: usize| move |y: &PhasePoint| y.to_array()[i];
        let arr = x.to_array();
        for i in 0..8 {
            assert!((poisson_bracket_fd(comp(i), h1, &pt) - arr[i]).abs() < 1e-8);
        }
    }
}
