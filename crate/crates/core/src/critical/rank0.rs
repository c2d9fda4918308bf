use nalgebra::{Matrix6, SMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{frobenius, spectrum_shape};
use crate::error::{Error, Result};
use crate::linalg::eigenvalues;
use crate::phase_space::{eval_integrals, vector_field, Integral, IntegralValue, PhasePoint, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rank0Type {
    EEE,
    EEH,
    EHH,
    HHH,
    EFF,
    HFF,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rank0Point {
    pub sigma_u: i8,
    pub sigma_v: i8,
    pub critical_value: IntegralValue,
    pub kind: Rank0Type,
    pub eigenvalues: Vec<Complex64>,
}

/// Chart coordinates `(u1, u2, v1, v2, q, p)` inside the ambient layout.
const CHART: [usize; 6] = [0, 1, 3, 4, 6, 7];

/// `DX_H1` at the fixed point `(0, σu; 0, σv; 0)` in the chart `(u1, u2, v1, v2, q, p)`.
///
/// Near the fixed point `u3 = σu (1 - u1² - u2²)^{1/2}`, so `du3 = dv3 = 0` at the
/// point and the chart linearisation is the ambient Jacobian restricted to the
/// chart rows and columns. The field is quadratic, so central differences are
/// exact up to rounding.
pub fn rank0_linearization(sigma_u: i8, sigma_v: i8, params: &SystemParams) -> Matrix6<f64> {
    let base = PhasePoint::fixed_point(sigma_u as f64, sigma_v as f64).to_array();
    let h = 1e-3;
    let mut jac = SMatrix::<f64, 8, 8>::zeros();
    for j in 0..8 {
        let mut a = base;
        let mut b = base;
        a[j] += h;
        b[j] -= h;
        let fa = vector_field(Integral::H1, &PhasePoint::from_array(a), params).to_array();
        let fb = vector_field(Integral::H1, &PhasePoint::from_array(b), params).to_array();
        for i in 0..8 {
            jac[(i, j)] = (fa[i] - fb[i]) / (2.0 * h);
        }
    }
    Matrix6::from_fn(|i, j| jac[(CHART[i], CHART[j])])
}

/// Eigenvalue type of the four fixed points of the S¹ action.
pub fn rank0_classify(params: &SystemParams) -> Result<Vec<Rank0Point>> {
    params.validate()?;
    let mut out = Vec::with_capacity(4);
    for (su, sv) in [(-1i8, -1i8), (1, 1), (1, -1), (-1, 1)] {
        let m = rank0_linearization(su, sv, params);
        let eigenvalues: Vec<Complex64> = eigenvalues(&m);
        let shape = spectrum_shape(&eigenvalues, frobenius(&m))
            .ok_or_else(|| Error::DegenerateLinearization(format!("fixed point ({su}, {sv}): {eigenvalues:?}")))?;
        let kind = match (shape.elliptic, shape.hyperbolic, shape.focus_focus) {
            (3, 0, 0) => Rank0Type::EEE,
            (2, 1, 0) => Rank0Type::EEH,
            (1, 2, 0) => Rank0Type::EHH,
            (0, 3, 0) => Rank0Type::HHH,
            (1, 0, 1) => Rank0Type::EFF,
            (0, 1, 1) => Rank0Type::HFF,
            _ => unreachable!("six eigenvalues split into pairs and quartets"),
        };
        let critical_value = eval_integrals(&PhasePoint::fixed_point(su as f64, sv as f64), params);
        out.push(Rank0Point { sigma_u: su, sigma_v: sv, critical_value, kind, eigenvalues });
    }
    Ok(out)
}
