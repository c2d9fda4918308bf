use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_space::{PhasePoint, SystemParams};
use crate::poly::Poly;

/// A point `(h1, h2)` of the rank-2 critical boundary in the slice `K = k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rank2Sample {
    pub k: f64,
    pub x: f64,
    pub y: f64,
    pub c: f64,
    pub h1: f64,
    pub h2: f64,
}

struct Coeffs {
    y: f64,
    c: f64,
}

fn coeffs(x: f64, p: &SystemParams) -> Result<Coeffs> {
    let d = p.delta2 - p.delta1;
    let denom = 1.0 + x * d;
    if x == 0.0 || !x.is_finite() || denom.abs() < 1e-14 {
        return Err(Error::Domain(format!("x = {x} is not an admissible multiplier")));
    }
    let g2 = p.g * p.g;
    Ok(Coeffs { y: x / denom, c: (p.delta1 - p.omega) / (2.0 * g2) - 1.0 / (2.0 * g2 * x) })
}

/// Cubic in `u3` whose positivity region on `[-1, 1]` carries the rank-2 points over `x`.
pub fn rank2_cubic(x: f64, k: f64, params: &SystemParams) -> Result<Poly> {
    let Coeffs { y, c } = coeffs(x, params)?;
    let g = params.g;
    let (g2, g4) = (g * g, g.powi(4));
    let (x2, y2) = (x * x, y * y);
    let a3 = -4.0 * g2 * x2 * y * (x - y);
    let a2 = -4.0 * c * c * g4 * x2 * y2 + 8.0 * c * g2 * x2 * y - 4.0 * c * g2 * x * y2 - 4.0 * g2 * k * x2 * y2
        - (x - y).powi(2);
    let a1 = 2.0
        * (2.0 * c.powi(3) * g4 * x * y2 - 3.0 * c * c * g2 * x * y + c * c * g2 * y2 + 2.0 * c * g4 * x.powi(3) * y2
            - 2.0 * c * g4 * x * y.powi(4)
            + 2.0 * c * g2 * k * x * y2
            + c * x
            - c * y
            + g2 * x.powi(3) * y
            - g2 * x2 * y2
            + g2 * x * y.powi(3)
            - g2 * y.powi(4)
            - k * x * y
            + k * y2);
    let a0 = -c.powi(4) * g4 * y2 + 2.0 * c.powi(3) * g2 * y - 2.0 * c * c * g4 * x2 * y2
        + 2.0 * c * c * g4 * y.powi(4)
        - 2.0 * c * c * g2 * k * y2
        - c * c
        - 2.0 * c * g2 * x2 * y
        - 2.0 * c * g2 * y.powi(3)
        + 2.0 * c * k * y
        - g4 * x.powi(4) * y2
        + 2.0 * g4 * x2 * y.powi(4)
        - g4 * y.powi(6)
        + 2.0 * g2 * k * x2 * y2
        + 2.0 * g2 * k * y.powi(4)
        - k * k * y2;
    Ok(Poly::new(vec![a0, a1, a2, a3]))
}

/// Interval of `u3 ∈ [-1, 1]` on which the cubic is positive, if any.
fn u3_band(cubic: &Poly) -> Option<(f64, f64)> {
    let mut r: Vec<f64> = cubic
        .roots()
        .into_iter()
        .filter(|z: &Complex64| z.im.abs() <= 1e-9 * (1.0 + z.re.abs()))
        .map(|z| z.re.clamp(-1.0, 1.0))
        .filter(|t| (-1.0..=1.0).contains(t))
        .collect();
    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    r.windows(2).find(|w| w[1] > w[0] && cubic.eval(0.5 * (w[0] + w[1])) > 0.0).map(|w| (w[0], w[1]))
}

/// Whether the multiplier `x` carries rank-2 critical points in the slice `K = k`.
pub fn rank2_x_admissible(x: f64, k: f64, params: &SystemParams) -> bool {
    rank2_cubic(x, k, params).ok().and_then(|c| u3_band(&c)).is_some()
}

/// `(H1, H2)` on the rank-2 locus over the multiplier `x` (whether or not `x` is admissible).
pub fn rank2_values(x: f64, k: f64, params: &SystemParams) -> Result<(f64, f64)> {
    let Coeffs { y, c } = coeffs(x, params)?;
    let d = params.delta2 - params.delta1;
    let g2 = params.g * params.g;
    let h1 = (-k / (x * x) - c * c * g2 / (x * x) + c / (x * x * y) + g2 * (y * y / (x * x) + 2.0 * x / y - 1.0)) / d;
    let h2 = -(-k / (y * y) - c * c * g2 / (y * y) + c / (x * y * y) + g2 * (x * x / (y * y) + 2.0 * y / x - 1.0)) / d;
    Ok((h1, h2))
}

/// A phase-space point over an admissible `x`, at the middle of its `u3` band.
///
/// The representative has `z` real and positive (`q = 0`).
pub fn rank2_point(x: f64, k: f64, params: &SystemParams) -> Result<PhasePoint> {
    let cubic = rank2_cubic(x, k, params)?;
    let (lo, hi) = u3_band(&cubic).ok_or_else(|| Error::Domain(format!("x = {x} carries no rank-2 point at k = {k}")))?;
    let Coeffs { y, c } = coeffs(x, params)?;
    let g = params.g;
    let u3 = 0.5 * (lo + hi);
    let v3 = (c - x * u3) / y;
    let den = y * k - c + (x - y) * u3;
    let a_im = -(g / (SQRT_2 * x)) * (1.0 / (2.0 * g * g) + 0.5 * y * (c * c - 2.0 * c * x * u3 + x * x - y * y) / den);
    let a_re = (cubic.eval(u3) / (8.0 * g * g * x * x * den * den)).sqrt();
    let a = Complex64::new(a_re, a_im);
    let b = (Complex64::new(0.0, -1.0 / (SQRT_2 * g)) - a * x) / y;
    let zz = 2.0 * (k - u3 - v3);
    if !(zz >= 0.0) {
        return Err(Error::Domain(format!("negative |z|² = {zz}")));
    }
    let z = zz.sqrt();
    let (u, v) = (a * z, b * z);
    Ok(PhasePoint::new_unchecked([u.re, u.im, u3], [v.re, v.im, v3], 0.0, z))
}

fn sample(x: f64, k: f64, params: &SystemParams) -> Result<Rank2Sample> {
    let Coeffs { y, c } = coeffs(x, params)?;
    let (h1, h2) = rank2_values(x, k, params)?;
    Ok(Rank2Sample { k, x, y, c, h1, h2 })
}

fn refine(mut inside: f64, mut outside: f64, k: f64, params: &SystemParams) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (inside + outside);
        if rank2_x_admissible(mid, k, params) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// Rank-2 boundary pieces of the slice `K = k`, each sampled at `n ≥ 2` values of `x`.
///
/// The search grid is logarithmic in `|x|` and in the distance to the pole of
/// `y(x)`; piece ends are refined by bisection.
pub fn rank2_slice(k: f64, params: &SystemParams, n: usize) -> Result<Vec<Vec<Rank2Sample>>> {
    params.validate()?;
    if n < 2 {
        return Err(Error::OutOfRange("need at least two samples per piece".into()));
    }
    let pole = -1.0 / (params.delta2 - params.delta1);
    let mut grid = Vec::new();
    for i in 0..=1400 {
        let m = 10f64.powf(-4.0 + 7.0 * i as f64 / 1400.0);
        grid.extend([m, -m, pole + m * 1e-1, pole - m * 1e-1]);
    }
    grid.retain(|x| x.is_finite() && *x != 0.0 && *x != pole);
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    let ok: Vec<bool> = grid.iter().map(|x| rank2_x_admissible(*x, k, params)).collect();

    let crosses = |a: f64, b: f64| (a < 0.0) != (b < 0.0) || (a < pole) != (b < pole);
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..grid.len() {
        let split = i > 0 && crosses(grid[i - 1], grid[i]);
        if let Some(s) = start {
            if !ok[i] || split {
                runs.push((s, i - 1));
                start = None;
            }
        }
        if ok[i] && start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        runs.push((s, grid.len() - 1));
    }

    let mut pieces = Vec::new();
    for (s, e) in runs {
        let lo = if s > 0 && !ok[s - 1] && !crosses(grid[s - 1], grid[s]) {
            refine(grid[s], grid[s - 1], k, params)
        } else {
            grid[s]
        };
        let hi = if e + 1 < grid.len() && !ok[e + 1] && !crosses(grid[e], grid[e + 1]) {
            refine(grid[e], grid[e + 1], k, params)
        } else {
            grid[e]
        };
        let piece: Result<Vec<_>> =
            (0..n).map(|i| sample(lo + (hi - lo) * i as f64 / (n - 1) as f64, k, params)).collect();
        pieces.push(piece?);
    }
    Ok(pieces)
}

/// Closed polygon in the `(h1, h2)` plane obtained by chaining pieces end to end.
pub fn slice_boundary(pieces: &[Vec<Rank2Sample>]) -> Vec<(f64, f64)> {
    let mut left: Vec<Vec<(f64, f64)>> =
        pieces.iter().filter(|p| !p.is_empty()).map(|p| p.iter().map(|s| (s.h1, s.h2)).collect()).collect();
    if left.is_empty() {
        return Vec::new();
    }
    let mut out = left.remove(0);
    let d = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).hypot(a.1 - b.1);
    while !left.is_empty() {
        let tail = *out.last().unwrap();
        let (mut best, mut rev, mut dist) = (0, false, f64::INFINITY);
        for (i, p) in left.iter().enumerate() {
            for (r, end) in [(false, p[0]), (true, *p.last().unwrap())] {
                if d(tail, end) < dist {
                    (best, rev, dist) = (i, r, d(tail, end));
                }
            }
        }
        let mut p = left.remove(best);
        if rev {
            p.reverse();
        }
        out.extend(p);
    }
    out
}

/// Winding number of a closed polygon around `pt`.
pub fn winding_number(polygon: &[(f64, f64)], pt: (f64, f64)) -> i32 {
    let n = polygon.len();
    let mut w = 0;
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[(i + 1) % n]);
        let cross = (b.0 - a.0) * (pt.1 - a.1) - (pt.0 - a.0) * (b.1 - a.1);
        if a.1 <= pt.1 {
            if b.1 > pt.1 && cross > 0.0 {
                w += 1;
            }
        } else if b.1 <= pt.1 && cross < 0.0 {
            w -= 1;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::{eval_integrals, vector_field, Integral};

    const STC: SystemParams = SystemParams::STC;

    #[test]
    fn cubic_is_nonpositive_at_poles() {
        // P(∓1) = -(C ± x ∓ y - (k + g²(C ± x)²) y + g² y³)², checked with g = 1 here
        for &x in &[-2.5, -0.6, 0.3, 1.7, 4.0] {
            for &k in &[-1.0, 0.3, 1.8, 5.0] {
                let p = rank2_cubic(x, k, &STC).unwrap();
                let Coeffs { y, c } = coeffs(x, &STC).unwrap();
                for s in [1.0, -1.0] {
                    let inner = c + s * x - s * y - (k + (c + s * x).powi(2)) * y + y.powi(3);
                    let expect = -inner * inner;
                    let got = p.eval(-s);
                    assert!((got - expect).abs() < 1e-9 * (1.0 + expect.abs()), "x={x} k={k} s={s}");
                }
            }
        }
    }

    #[test]
    fn slice_at_k_1_8() {
        let pieces = rank2_slice(1.8, &STC, 50).unwrap();
        assert_eq!(pieces.len(), 3);
        let ends: Vec<(f64, f64)> = pieces.iter().map(|p| (p[0].x, p.last().unwrap().x)).collect();
        let expect = [(-2.967, -1.508), (-0.684, -0.544), (1.189, 2.167)];
        for (e, g) in expect.iter().zip(ends.iter()) {
            assert!((e.0 - g.0).abs() < 1e-2 && (e.1 - g.1).abs() < 1e-2, "{ends:?}");
        }
        for p in &pieces {
            let (lo, hi) = (p[0].x, p.last().unwrap().x);
            let w = 1e-6 * (1.0 + lo.abs().max(hi.abs()));
            assert!(!rank2_x_admissible(lo - w, 1.8, &STC) && !rank2_x_admissible(hi + w, 1.8, &STC));
        }
        let poly = slice_boundary(&pieces);
        for ff in [(-0.578466, 0.578466), (-1.743013, 1.743013)] {
            assert_eq!(winding_number(&poly, ff).abs(), 1);
        }
        assert_eq!(winding_number(&poly, (20.0, 0.0)), 0);
    }

    #[test]
    fn reconstructed_points_are_rank2_critical() {
        for piece in rank2_slice(1.8, &STC, 7).unwrap() {
            for s in &piece[1..piece.len() - 1] {
                let pt = rank2_point(s.x, 1.8, &STC).unwrap();
                let (du, dv) = pt.sphere_defects();
                assert!(du.abs() < 1e-10 && dv.abs() < 1e-10, "x={}", s.x);
                let f = eval_integrals(&pt, &STC);
                assert!((f.h1 - s.h1).abs() < 1e-9 && (f.h2 - s.h2).abs() < 1e-9 && (f.k - 1.8).abs() < 1e-12);
                let comb = vector_field(Integral::K, &pt, &STC)
                    - s.x * vector_field(Integral::H1, &pt, &STC)
                    - s.y * vector_field(Integral::H2, &pt, &STC);
                assert!(comb.norm() < 1e-9, "x={} residual {}", s.x, comb.norm());
            }
        }
    }

    #[test]
    fn winding_of_square() {
        let sq = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        assert_eq!(winding_number(&sq, (0.5, 0.5)), 1);
        assert_eq!(winding_number(&sq, (1.5, 0.5)), 0);
    }

    #[test]
    fn pole_is_rejected() {
        assert!(matches!(rank2_cubic(-1.0, 1.0, &STC), Err(Error::Domain(_))));
        assert!(matches!(rank2_values(0.0, 1.0, &STC), Err(Error::Domain(_))));
    }
}
