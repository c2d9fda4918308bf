//! Spectral Lax pair `L(λ)`, `M(λ)` and the spectral polynomial `Q₆`.
//!
//! `L` is traceless, so its eigenvalues are `±μ` with `μ² = −det L(λ)`; that is
//! the convention used for `Q₆` here.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flows::trajectory;
use crate::linalg::eigenvalues_complex;
use crate::phase_space::{combined_field, eval_integrals, IntegralValue, PhasePoint, SystemParams};
use crate::poly::{square_free, Poly};

pub type CMatrix2 = Matrix2<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `(u·σ)` for a real 3-vector.
fn pauli_dot(w: [f64; 3]) -> CMatrix2 {
    CMatrix2::new(c(w[2]), Complex64::new(w[0], -w[1]), Complex64::new(w[0], w[1]), c(-w[2]))
}

/// `z̄σ₊ − zσ₋` with `z = p + iq`.
fn ladder(q: f64, p: f64) -> CMatrix2 {
    let z = Complex64::new(p, q);
    CMatrix2::new(c(0.0), z.conj(), -z, c(0.0))
}

fn sigma_z() -> CMatrix2 {
    CMatrix2::new(c(1.0), c(0.0), c(0.0), c(-1.0))
}

/// `L(λ)` on raw coordinates `(u, v, q, p)`. It is affine in them, so this also
/// maps tangent vectors when `affine` is false (constant part dropped).
fn lax_l_raw(lam: Complex64, x: &[f64; 8], params: &SystemParams, affine: bool) -> CMatrix2 {
    let g = params.g;
    let a = lam - params.delta1 / 2.0;
    let b = lam - params.delta2 / 2.0;
    let mut osc = ladder(x[6], x[7]) * (I * std::f64::consts::SQRT_2 * g);
    if affine {
        osc += sigma_z() * (2.0 * lam - params.omega);
    }
    osc * (a * b / (g * g)) + pauli_dot([x[0], x[1], x[2]]) * b + pauli_dot([x[3], x[4], x[5]]) * a
}

/// `(L(λ), M(λ))` at a phase point.
pub fn lax_matrices(lam: Complex64, pt: &PhasePoint, params: &SystemParams) -> (CMatrix2, CMatrix2) {
    let l = lax_l_raw(lam, &pt.to_array(), params, true);
    let m = sigma_z() * (-I * lam) + ladder(pt.q, pt.p) * c(params.g / std::f64::consts::SQRT_2);
    (l, m)
}

/// `dL/dt` along a vector field, using that `L` is affine in the coordinates.
pub fn lax_derivative(lam: Complex64, field: &[f64; 8], params: &SystemParams) -> CMatrix2 {
    lax_l_raw(lam, field, params, false)
}

/// `Q₆(λ)` with coefficients lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPolynomial {
    pub coefficients: [f64; 7],
}

impl SpectralPolynomial {
    pub fn poly(&self) -> Poly {
        Poly::new(self.coefficients.to_vec())
    }

    pub fn eval(&self, lam: Complex64) -> Complex64 {
        self.coefficients.iter().rev().fold(c(0.0), |acc, &k| acc * lam + k)
    }
}

fn pmul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn padd(acc: &mut [f64], a: &[f64], s: f64) {
    for (i, x) in a.iter().enumerate() {
        acc[i] += s * x;
    }
}

/// Closed form of `Q₆` in terms of the integrals.
pub fn spectral_poly_from_values(v: &IntegralValue, params: &SystemParams) -> SpectralPolynomial {
    let g2 = params.g * params.g;
    let a = [-params.delta1 / 2.0, 1.0];
    let b = [-params.delta2 / 2.0, 1.0];
    let ab = pmul(&a, &b);
    let lead = [params.omega * params.omega / (g2 * g2) + 4.0 * v.k / g2, -4.0 * params.omega / (g2 * g2), 4.0 / (g2 * g2)];
    let mut out = [0.0; 7];
    padd(&mut out, &pmul(&lead, &pmul(&ab, &ab)), 1.0);
    let mut inner = [0.0; 2];
    padd(&mut inner, &b, v.h1);
    padd(&mut inner, &a, v.h2);
    padd(&mut out, &pmul(&ab, &inner), 2.0 / g2);
    padd(&mut out, &pmul(&a, &a), 1.0);
    padd(&mut out, &pmul(&b, &b), 1.0);
    SpectralPolynomial { coefficients: out }
}

pub fn spectral_poly(pt: &PhasePoint, params: &SystemParams) -> SpectralPolynomial {
    spectral_poly_from_values(&eval_integrals(pt, params), params)
}

/// `μ²` from an eigenvalue of `L(λ)` (both eigenvalues are `±μ`).
pub fn mu_squared(lam: Complex64, pt: &PhasePoint, params: &SystemParams) -> Complex64 {
    let (l, _) = lax_matrices(lam, pt, params);
    let d = DMatrix::from_fn(2, 2, |i, j| l[(i, j)]);
    eigenvalues_complex(&d).map_or(Complex64::new(f64::NAN, f64::NAN), |ev| ev[0] * ev[0])
}

/// Interpolates `μ²(λ)` at 7 real nodes; independent of the closed form.
pub fn spectral_poly_interpolated(pt: &PhasePoint, params: &SystemParams) -> [f64; 7] {
    let nodes: Vec<f64> = (0..7).map(|i| -1.5 + 0.5 * i as f64).collect();
    let vdm = DMatrix::from_fn(7, 7, |i, j| nodes[i].powi(j as i32));
    let rhs = DVector::from_iterator(7, nodes.iter().map(|&x| mu_squared(c(x), pt, params).re));
    let sol = vdm.lu().solve(&rhs).unwrap_or_else(|| DVector::from_element(7, f64::NAN));
    let mut out = [0.0; 7];
    out.copy_from_slice(sol.as_slice());
    out
}

pub fn commutator(a: &CMatrix2, b: &CMatrix2) -> CMatrix2 {
    a * b - b * a
}

fn norm(m: &CMatrix2) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Coefficients of the physical Hamiltonian `H = H1 + H2 + ωK` in the combined field.
pub fn hamiltonian_coeffs(params: &SystemParams) -> [f64; 3] {
    [1.0, 1.0, params.omega]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaxAudit {
    pub duration: f64,
    pub samples: usize,
    /// `max ‖dL/dt − [M, L]‖` with `dL/dt` from 4th-order differences in time.
    pub lax_residual_fd: f64,
    /// Same with `dL/dt` from the vector field.
    pub lax_residual_field: f64,
    /// Largest drift of any `Q₆` coefficient along the trajectory.
    pub coefficient_drift: f64,
    /// `max |Q₆ − μ²|` between the closed form and the eigenvalue interpolation.
    pub interpolation_gap: f64,
}

/// Spectral parameters at which the Lax equation is checked.
pub const AUDIT_LAMBDAS: [Complex64; 3] = [Complex64::new(0.3, 0.7), Complex64::new(-1.2, 0.0), Complex64::new(2.0, -0.5)];

/// Integrates the flow of `H` from `p0` and audits the Lax equation and the
/// conservation of `Q₆` on `samples` equally spaced times.
pub fn lax_audit(p0: &PhasePoint, duration: f64, samples: usize, params: &SystemParams) -> Result<LaxAudit> {
    let n = samples.max(5);
    let dt = duration / (n - 1) as f64;
    let times: Vec<f64> = (1..n).map(|i| i as f64 * dt).collect();
    let coeffs = hamiltonian_coeffs(params);
    let mut pts = vec![*p0];
    pts.extend(trajectory(coeffs, &times, 1e-13, p0, params)?);

    let q0 = spectral_poly(p0, params);
    let mut drift: f64 = 0.0;
    let mut gap: f64 = 0.0;
    let mut res_field: f64 = 0.0;
    for pt in &pts {
        let q = spectral_poly(pt, params);
        drift = q.coefficients.iter().zip(&q0.coefficients).map(|(a, b)| (a - b).abs()).fold(drift, f64::max);
        let field = combined_field(coeffs, pt, params).to_array();
        for lam in AUDIT_LAMBDAS {
            let (l, m) = lax_matrices(lam, pt, params);
            res_field = res_field.max(norm(&(lax_derivative(lam, &field, params) - commutator(&m, &l))));
        }
    }
    for pt in pts.iter().step_by((n / 8).max(1)) {
        let interp = spectral_poly_interpolated(pt, params);
        let q = spectral_poly(pt, params);
        gap = q.coefficients.iter().zip(&interp).map(|(a, b)| (a - b).abs()).fold(gap, f64::max);
    }
    let mut res_fd: f64 = 0.0;
    for i in 2..n - 2 {
        for lam in AUDIT_LAMBDAS {
            let l = |j: usize| lax_matrices(lam, &pts[j], params).0;
            let dl = (l(i - 2) - l(i - 1) * c(8.0) + l(i + 1) * c(8.0) - l(i + 2)) / c(12.0 * dt);
            let (li, mi) = lax_matrices(lam, &pts[i], params);
            res_fd = res_fd.max(norm(&(dl - commutator(&mi, &li))));
        }
    }
    Ok(LaxAudit { duration, samples: n, lax_residual_fd: res_fd, lax_residual_field: res_field, coefficient_drift: drift, interpolation_gap: gap })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleRootReport {
    pub a1: f64,
    pub a0: f64,
    /// Largest coefficient mismatch against `(4/g⁴)(λ² + a1 λ + a0)³`.
    pub residual: f64,
    pub coefficients: [f64; 7],
}

/// Fits `Q₆ = (4/g⁴)(λ² + a1 λ + a0)³` from the two leading coefficients and reports the mismatch.
pub fn triple_root_check(value: &IntegralValue, params: &SystemParams) -> TripleRootReport {
    let q = spectral_poly_from_values(value, params).coefficients;
    let lead = q[6];
    let a1 = q[5] / (3.0 * lead);
    let a0 = (q[4] / lead - 3.0 * a1 * a1) / 3.0;
    let quad = [a0, a1, 1.0];
    let cube = pmul(&pmul(&quad, &quad), &quad);
    let residual = cube.iter().zip(&q).map(|(x, y)| (lead * x - y).abs()).fold(0.0, f64::max);
    TripleRootReport { a1, a0, residual, coefficients: q }
}

/// Square-free factorisation of `Q₆` as `(factor degree, multiplicity)` pairs.
pub fn root_multiplicities(value: &IntegralValue, params: &SystemParams, tol: f64) -> Vec<(usize, usize)> {
    square_free(&spectral_poly_from_values(value, params).poly(), tol).into_iter().map(|(f, m)| (f.degree(), m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critical::central_value;
    use crate::phase_space::{fixed_point_value, random_point};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const STC: SystemParams = SystemParams::STC;

    #[test]
    fn fixed_point_l_is_diagonal() {
        let pt = PhasePoint::fixed_point(1.0, -1.0);
        let (l, _) = lax_matrices(Complex64::new(0.4, 1.1), &pt, &STC);
        assert_eq!(l[(0, 1)], c(0.0));
        assert_eq!(l[(1, 0)], c(0.0));
    }

    #[test]
    fn traceless_and_eigenvalue_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let pt = random_point(&mut rng, 1.5);
            let lam = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let (l, _) = lax_matrices(lam, &pt, &STC);
            assert!(l.trace().norm() < 1e-14);
            let q = spectral_poly(&pt, &STC);
            let mu2 = mu_squared(lam, &pt, &STC);
            assert!((q.eval(lam) - mu2).norm() < 1e-9 * (1.0 + mu2.norm()), "{} vs {}", q.eval(lam), mu2);
        }
    }

    #[test]
    fn interpolation_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pt = random_point(&mut rng, 1.0);
        let a = spectral_poly(&pt, &STC).coefficients;
        let b = spectral_poly_interpolated(&pt, &STC);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9, "{a:?} {b:?}");
        }
        assert!((a[6] - 4.0).abs() < 1e-15);
    }

    #[test]
    fn lax_equation_from_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let pt = random_point(&mut rng, 1.0);
            let field = combined_field(hamiltonian_coeffs(&STC), &pt, &STC).to_array();
            for lam in AUDIT_LAMBDAS {
                let (l, m) = lax_matrices(lam, &pt, &STC);
                assert!(norm(&(lax_derivative(lam, &field, &STC) - commutator(&m, &l))) < 1e-12);
            }
        }
    }

    #[test]
    fn central_value_is_triple() {
        let r = triple_root_check(&central_value(), &STC);
        assert!((r.a1 + 1.0).abs() < 1e-12);
        assert!((r.a0 - (4.0 * 2f64.powf(2.0 / 3.0) + 3.0) / 16.0).abs() < 1e-12);
        assert!(r.residual < 1e-10);
        assert_eq!(root_multiplicities(&central_value(), &STC, 1e-9), vec![(2, 3)]);
    }

    #[test]
    fn regular_value_is_not_triple() {
        assert!(triple_root_check(&IntegralValue::new(2.0, 1.0, 1.8), &STC).residual > 1e-3);
    }

    #[test]
    fn fixed_point_spectral_poly() {
        let v = fixed_point_value(1.0, 1.0, &STC);
        let pt = PhasePoint::fixed_point(1.0, 1.0);
        assert_eq!(spectral_poly(&pt, &STC), spectral_poly_from_values(&v, &STC));
    }
}
