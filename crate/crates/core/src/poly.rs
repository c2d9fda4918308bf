//! Dense univariate polynomials with real or complex coefficients.
//!
//! Coefficients are stored lowest degree first.

use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub c: Vec<f64>,
}

impl Poly {
    pub fn new(c: Vec<f64>) -> Self {
        let mut p = Poly { c };
        p.trim(0.0);
        p
    }

    pub fn from_roots_quadratic(b: f64, c: f64) -> Self {
        Poly::new(vec![c, b, 1.0])
    }

    /// Drops leading coefficients with `|c| <= tol`.
    pub fn trim(&mut self, tol: f64) {
        while self.c.len() > 1 && self.c.last().is_some_and(|x| x.abs() <= tol) {
            self.c.pop();
        }
        if self.c.is_empty() {
            self.c.push(0.0);
        }
    }

    pub fn degree(&self) -> usize {
        self.c.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|x| *x == 0.0)
    }

    pub fn leading(&self) -> f64 {
        *self.c.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn eval_complex(&self, x: Complex64) -> Complex64 {
        self.c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.c.len() <= 1 {
            return Poly::new(vec![0.0]);
        }
        Poly::new(self.c.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = vec![0.0; self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in o.c.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn pow(&self, n: u32) -> Poly {
        (0..n).fold(Poly::new(vec![1.0]), |acc, _| acc.mul(self))
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.c.iter().map(|x| x * s).collect())
    }

    pub fn monic(&self) -> Poly {
        self.scale(1.0 / self.leading())
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Euclidean division `self = q·d + r`.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        let n = self.degree();
        let m = d.degree();
        if n < m {
            return (Poly::new(vec![0.0]), self.clone());
        }
        let mut r = self.c.clone();
        let mut q = vec![0.0; n - m + 1];
        let lead = d.leading();
        for k in (0..=n - m).rev() {
            let f = r[k + m] / lead;
            q[k] = f;
            for j in 0..=m {
                r[k + j] -= f * d.c[j];
            }
        }
        r.truncate(m.max(1));
        (Poly::new(q), Poly::new(r))
    }

    /// All complex roots from the eigenvalues of the companion matrix, Newton-polished.
    pub fn roots(&self) -> Vec<Complex64> {
        let cc: Vec<Complex64> = self.c.iter().map(|x| Complex64::new(*x, 0.0)).collect();
        roots_complex(&cc)
    }

    /// Number of real roots in the closed interval `[a, b]`, counted without multiplicity.
    ///
    /// Splits the interval at the real critical points and counts sign changes on
    /// each monotone piece, so no root is computed explicitly.
    pub fn count_real_roots_in(&self, a: f64, b: f64) -> usize {
        if self.degree() == 0 {
            return 0;
        }
        let mut cuts = vec![a];
        let mut crit: Vec<f64> = real_roots_sorted(&self.derivative())
            .into_iter()
            .filter(|x| *x > a && *x < b)
            .collect();
        crit.sort_by(|x, y| x.partial_cmp(y).unwrap());
        cuts.extend(crit);
        cuts.push(b);
        let mut count = 0;
        let mut prev_zero = false;
        for w in cuts.windows(2) {
            let (fa, fb) = (self.eval(w[0]), self.eval(w[1]));
            if fa == 0.0 && !prev_zero {
                count += 1;
            }
            if fb == 0.0 {
                count += 1;
                prev_zero = true;
            } else {
                prev_zero = false;
                if fa != 0.0 && fa.signum() != fb.signum() {
                    count += 1;
                }
            }
        }
        count
    }
}

fn real_roots_sorted(p: &Poly) -> Vec<f64> {
    if p.degree() == 0 {
        return vec![];
    }
    if p.degree() == 1 {
        return vec![-p.c[0] / p.c[1]];
    }
    if p.degree() == 2 {
        let (a, b, c) = (p.c[2], p.c[1], p.c[0]);
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return vec![];
        }
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let mut r = if q == 0.0 { vec![0.0] } else { vec![q / a, c / q] };
        r.sort_by(|x, y| x.partial_cmp(y).unwrap());
        return r;
    }
    let mut r: Vec<f64> = p
        .roots()
        .into_iter()
        .filter(|z| z.im.abs() <= 1e-10 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect();
    r.sort_by(|x, y| x.partial_cmp(y).unwrap());
    r
}

/// Complex roots of `Σ c_i x^i` (lowest degree first).
pub fn roots_complex(c: &[Complex64]) -> Vec<Complex64> {
    let mut c = c.to_vec();
    while c.len() > 1 && c.last().unwrap().norm() == 0.0 {
        c.pop();
    }
    let n = c.len() - 1;
    if n == 0 {
        return vec![];
    }
    let lead = c[n];
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }
    let Some(ev) = crate::linalg::eigenvalues_complex(&m) else {
        return vec![Complex64::new(f64::NAN, f64::NAN); n];
    };
    ev.iter().map(|z0| polish(&c, *z0)).collect()
}

fn polish(c: &[Complex64], z0: Complex64) -> Complex64 {
    let mut z = z0;
    for _ in 0..8 {
        let (mut p, mut dp) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for ci in c.iter().rev() {
            dp = dp * z + p;
            p = p * z + ci;
        }
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        let znew = z - step;
        let pn = c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, ci| acc * znew + ci);
        if pn.norm() >= p.norm() {
            break;
        }
        z = znew;
        if step.norm() <= 1e-16 * z.norm().max(1.0) {
            break;
        }
    }
    z
}

/// Monic gcd by the Euclidean algorithm; remainders below `tol` (relative) count as zero.
pub fn gcd(a: &Poly, b: &Poly, tol: f64) -> Poly {
    let mut x = a.monic();
    let mut y = b.monic();
    if y.degree() > x.degree() {
        std::mem::swap(&mut x, &mut y);
    }
    loop {
        if y.degree() == 0 {
            if y.c[0].abs() <= tol {
                return x.monic();
            }
            return Poly::new(vec![1.0]);
        }
        let (_, mut r) = x.div_rem(&y);
        r.trim(tol * x.max_abs().max(1.0));
        if r.is_zero() || r.max_abs() <= tol * x.max_abs().max(1.0) {
            return y.monic();
        }
        x = y;
        y = r.monic();
    }
}

/// Yun's square-free factorisation: returns `(factor, multiplicity)` for each
/// non-constant factor, with monic factors.
pub fn square_free(p: &Poly, tol: f64) -> Vec<(Poly, usize)> {
    let mut out = Vec::new();
    let f = p.monic();
    let df = f.derivative();
    let a0 = gcd(&f, &df, tol);
    let mut b = f.div_rem(&a0).0;
    let mut c = df.div_rem(&a0).0;
    let mut d = sub(&c, &b.derivative());
    let mut i = 1;
    while b.degree() > 0 {
        let a = if d.max_abs() <= tol * b.max_abs().max(1.0) { b.monic() } else { gcd(&b, &d, tol) };
        if a.degree() > 0 {
            out.push((a.clone(), i));
        }
        b = b.div_rem(&a).0;
        c = d.div_rem(&a).0;
        d = sub(&c, &b.derivative());
        i += 1;
        if i > p.degree() + 1 {
            break;
        }
    }
    out
}

fn sub(a: &Poly, b: &Poly) -> Poly {
    let n = a.c.len().max(b.c.len());
    Poly::new((0..n).map(|i| a.c.get(i).unwrap_or(&0.0) - b.c.get(i).unwrap_or(&0.0)).collect())
}
