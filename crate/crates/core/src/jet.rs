//! Truncated multivariate Taylor arithmetic (5 variables, total order 3).
//!
//! Used to obtain exact Hessians of the reduced Hamiltonians and as the
//! reference for finite-difference Taylor extraction.

use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

pub const NVARS: usize = 5;
pub const ORDER: usize = 3;
/// Number of monomials of degree ≤ 3 in 5 variables, `C(8, 3)`.
pub const NCOEFFS: usize = 56;

type Exponent = [u8; NVARS];

struct Tables {
    monomials: Vec<Exponent>,
    /// `(i, j, k)` with `m_i · m_j = m_k` and `deg m_k ≤ ORDER`.
    products: Vec<(u8, u8, u8)>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut monomials = Vec::with_capacity(NCOEFFS);
        for deg in 0..=ORDER {
            push_monomials(&mut monomials, [0; NVARS], 0, deg);
        }
        debug_assert_eq!(monomials.len(), NCOEFFS);
        let mut products = Vec::new();
        for (i, a) in monomials.iter().enumerate() {
            for (j, b) in monomials.iter().enumerate() {
                let mut c = [0u8; NVARS];
                for v in 0..NVARS {
                    c[v] = a[v] + b[v];
                }
                if let Some(k) = monomials.iter().position(|m| *m == c) {
                    products.push((i as u8, j as u8, k as u8));
                }
            }
        }
        Tables { monomials, products }
    })
}

fn push_monomials(out: &mut Vec<Exponent>, prefix: Exponent, var: usize, remaining: usize) {
    if var == NVARS - 1 {
        let mut e = prefix;
        e[var] = remaining as u8;
        out.push(e);
        return;
    }
    for d in (0..=remaining).rev() {
        let mut e = prefix;
        e[var] = d as u8;
        push_monomials(out, e, var + 1, remaining - d);
    }
}

fn index_of(exp: Exponent) -> Option<usize> {
    tables().monomials.iter().position(|m| *m == exp)
}

/// Truncated Taylor polynomial in `NVARS` variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    c: [f64; NCOEFFS],
}

impl Jet {
    pub fn constant(x: f64) -> Self {
        let mut c = [0.0; NCOEFFS];
        c[0] = x;
        Jet { c }
    }

    /// The independent variable `x0 + t_var`.
    pub fn variable(x0: f64, var: usize) -> Self {
        assert!(var < NVARS);
        let mut j = Self::constant(x0);
        let mut e = [0u8; NVARS];
        e[var] = 1;
        j.c[index_of(e).unwrap()] = 1.0;
        j
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Taylor coefficient of the monomial with the given exponents (zero above order 3).
    pub fn coeff(&self, exp: [u8; NVARS]) -> f64 {
        index_of(exp).map_or(0.0, |i| self.c[i])
    }

    pub fn monomials() -> &'static [[u8; NVARS]] {
        &tables().monomials
    }

    pub fn coeffs(&self) -> &[f64; NCOEFFS] {
        &self.c
    }

    pub fn gradient(&self) -> [f64; NVARS] {
        let mut g = [0.0; NVARS];
        for (v, gv) in g.iter_mut().enumerate() {
            let mut e = [0u8; NVARS];
            e[v] = 1;
            *gv = self.coeff(e);
        }
        g
    }

    pub fn hessian(&self) -> [[f64; NVARS]; NVARS] {
        let mut h = [[0.0; NVARS]; NVARS];
        for i in 0..NVARS {
            for j in 0..NVARS {
                let mut e = [0u8; NVARS];
                e[i] += 1;
                e[j] += 1;
                let c = self.coeff(e);
                h[i][j] = if i == j { 2.0 * c } else { c };
            }
        }
        h
    }

    /// `f(a + d)` from the derivatives `[f(a), f'(a), f''(a), f'''(a)]`.
    fn compose(&self, derivs: [f64; 4]) -> Jet {
        let mut d = *self;
        d.c[0] = 0.0;
        let d2 = d * d;
        let d3 = d2 * d;
        let mut out = Jet::constant(derivs[0]);
        for i in 1..NCOEFFS {
            out.c[i] = derivs[1] * d.c[i] + derivs[2] / 2.0 * d2.c[i] + derivs[3] / 6.0 * d3.c[i];
        }
        out
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        for i in 0..NCOEFFS {
            self.c[i] += o.c[i];
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, o: Jet) -> Jet {
        for i in 0..NCOEFFS {
            self.c[i] -= o.c[i];
        }
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for x in self.c.iter_mut() {
            *x = -*x;
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; NCOEFFS];
        for &(i, j, k) in &tables().products {
            c[k as usize] += self.c[i as usize] * o.c[j as usize];
        }
        Jet { c }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let a = o.value();
        let inv = o.compose([1.0 / a, -1.0 / (a * a), 2.0 / (a * a * a), -6.0 / (a * a * a * a)]);
        self * inv
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, o: f64) -> Jet {
        self.c[0] += o;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, o: f64) -> Jet {
        self.c[0] -= o;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, o: f64) -> Jet {
        for x in self.c.iter_mut() {
            *x *= o;
        }
        self
    }
}

/// Numbers that the reduced Hamiltonians can be evaluated on.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn cst(x: f64) -> Self;
    fn val(&self) -> f64;
    fn sqrt(self) -> Self;
    fn cos(self) -> Self;
    fn sin(self) -> Self;
}

impl Scalar for f64 {
    fn cst(x: f64) -> Self {
        x
    }
    fn val(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
}

impl Scalar for Jet {
    fn cst(x: f64) -> Self {
        Jet::constant(x)
    }
    fn val(&self) -> f64 {
        self.value()
    }
    fn sqrt(self) -> Self {
        let a = self.value();
        let s = a.sqrt();
        self.compose([s, 0.5 / s, -0.25 / (a * s), 0.375 / (a * a * s)])
    }
    fn cos(self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s])
    }
    fn sin(self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c])
    }
}
