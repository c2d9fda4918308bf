//! Period lattices of regular fibres and their transport along loops of regular values.
//!
//! A period vector `T` satisfies `φ_H1^{T1} ∘ φ_H2^{T2} ∘ φ_K^{T3} = id` on the fibre.
//! `T1 = (0, 0, 2π)` is always a period; the other two basis vectors are found by
//! Newton iteration on the return conditions for the angles `θu`, `θv` and `φ`, and
//! are then continued step by step along a loop. The monodromy matrix is
//! `B_after · B_before⁻¹` with bases stored as rows.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, SMatrix, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::critical::{slice, Rank1Type};
use crate::error::{Error, Result};
use crate::flows::{flow, flow_compose_tol, FlowSpec};
use crate::phase_space::{
    eval_integrals, gradient, random_point, vector_field, Integral, IntegralValue, PhasePoint, SystemParams,
};
use crate::reduction::to_section;

/// Flow tolerance used inside the period Newton iteration.
pub const PERIOD_FLOW_TOL: f64 = 1e-12;
/// Maximum closure defect `‖m(T) - P‖` accepted for a period vector.
pub const PERIOD_CLOSURE_TOL: f64 = 1e-6;
/// Rejected-step threshold, relative to `‖T‖`.
pub const JUMP_FACTOR: f64 = 0.2;
pub const MAX_BISECTIONS: usize = 20;

pub const T1: [f64; 3] = [0.0, 0.0, TAU];

pub type IntMatrix3 = [[i64; 3]; 3];

/// Base point of the four standard loops.
pub const R0: IntegralValue = IntegralValue::new(2.0, 1.0, 1.8);

/// Change of basis between the two conventions used for the standard loops.
pub const CHANGE_OF_BASIS: IntMatrix3 = [[1, 0, 0], [1, -1, -1], [0, 1, 0]];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberPoint {
    pub point: PhasePoint,
    pub target: IntegralValue,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodBasis {
    pub anchor: FiberPoint,
    pub t1: [f64; 3],
    pub t2: [f64; 3],
    pub t3: [f64; 3],
}

impl PeriodBasis {
    /// Rows `T1`, `T2`, `T3`.
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_rows(&[row(self.t1), row(self.t2), row(self.t3)])
    }

    pub fn det(&self) -> f64 {
        self.matrix().determinant()
    }
}

fn row(t: [f64; 3]) -> nalgebra::RowVector3<f64> {
    nalgebra::RowVector3::new(t[0], t[1], t[2])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopSpec {
    pub base: IntegralValue,
    pub waypoints: Vec<IntegralValue>,
    pub steps_per_segment: usize,
}

impl LoopSpec {
    /// Loop that stays at `base`.
    pub fn constant(base: IntegralValue, n: usize) -> Self {
        LoopSpec { base, waypoints: vec![base; n.max(2)], steps_per_segment: 1 }
    }

    /// Straight segment from `base` to `center + (L, 0, 0)`, a counter-clockwise
    /// circle of radius `L` around `center` in the `(h1, h2)` plane, and back.
    ///
    /// The circle is a regular polygon with `vertices` corners.
    pub fn around(base: IntegralValue, center: IntegralValue, radius: f64, vertices: usize, steps: usize) -> Self {
        let n = vertices.max(8);
        let mut w = vec![base];
        for i in 0..=n {
            let s = TAU * i as f64 / n as f64;
            w.push(IntegralValue::new(center.h1 + radius * s.cos(), center.h2 + radius * s.sin(), center.k));
        }
        w.push(base);
        LoopSpec { base, waypoints: w, steps_per_segment: steps.max(1) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.waypoints.len() < 2 || self.steps_per_segment == 0 {
            return Err(Error::OutOfRange("loop needs two waypoints and at least one step".into()));
        }
        let (first, last) = (self.waypoints[0], *self.waypoints.last().unwrap());
        if first.distance(&self.base) > 1e-12 || last.distance(&self.base) > 1e-12 {
            return Err(Error::OutOfRange("loop must start and end at its base".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonodromyMatrix {
    pub entries: IntMatrix3,
    /// Matrix before rounding.
    pub raw: [[f64; 3]; 3],
    /// `max |raw - entries|`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationStats {
    pub steps: usize,
    pub rejected: usize,
    pub max_relative_jump: f64,
    pub max_fiber_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transport {
    pub basis: PeriodBasis,
    pub stats: ContinuationStats,
}

// ---------------------------------------------------------------------------
// fibre points

fn tangent_jacobian(pt: &PhasePoint, params: &SystemParams) -> SMatrix<f64, 3, 8> {
    let mut j = SMatrix::<f64, 3, 8>::zeros();
    for (i, f) in Integral::ALL.iter().enumerate() {
        let g = gradient(*f, pt, params).tangential(pt);
        for c in 0..8 {
            j[(i, c)] = g[c];
        }
    }
    j
}

fn residual_vec(pt: &PhasePoint, target: &IntegralValue, params: &SystemParams) -> Vector3<f64> {
    let f = eval_integrals(pt, params);
    Vector3::new(f.h1 - target.h1, f.h2 - target.h2, f.k - target.k)
}

fn newton_fiber(target: &IntegralValue, seed: &PhasePoint, params: &SystemParams) -> Option<FiberPoint> {
    let mut pt = seed.project();
    let mut r = residual_vec(&pt, target, params);
    for _ in 0..80 {
        if r.norm() < 1e-12 {
            break;
        }
        let j = tangent_jacobian(&pt, params);
        let c = (j * j.transpose()).try_inverse()? * r;
        let delta = -(j.transpose() * c);
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha > 1e-6 {
            let mut a = pt.to_array();
            for i in 0..8 {
                a[i] += alpha * delta[i];
            }
            let cand = PhasePoint::from_array(a).project();
            let rc = residual_vec(&cand, target, params);
            if rc.norm() < r.norm() {
                pt = cand;
                r = rc;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let residual = r.norm();
    (residual < 1e-10).then_some(FiberPoint { point: pt, target: *target, residual })
}

/// Point on `F⁻¹(target)` by damped minimum-norm Newton, starting from `seed`.
///
/// If the seed fails, up to 64 random seeds (deterministic stream) are tried.
pub fn solve_fiber_point(target: IntegralValue, seed: &PhasePoint, params: &SystemParams) -> Result<FiberPoint> {
    params.validate()?;
    if let Some(fp) = newton_fiber(&target, seed, params) {
        return Ok(fp);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let r = (2.0 * target.k.abs() + 2.0).sqrt();
    for _ in 0..64 {
        let s = random_point(&mut rng, r);
        if let Some(fp) = newton_fiber(&target, &s, params) {
            return Ok(fp);
        }
    }
    Err(Error::NoConvergence(format!("no point found on the fibre over {target:?}")))
}

// ---------------------------------------------------------------------------
// period vectors

fn wrap(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

fn angles(pt: &PhasePoint) -> [f64; 3] {
    [pt.theta_u(), pt.theta_v(), pt.phi()]
}

/// Differentials of `(θu, θv, φ)` applied to the three Hamiltonian fields.
fn angle_jacobian(pt: &PhasePoint, params: &SystemParams) -> Matrix3<f64> {
    let mut j = Matrix3::zeros();
    let ru = pt.u.x * pt.u.x + pt.u.y * pt.u.y;
    let rv = pt.v.x * pt.v.x + pt.v.y * pt.v.y;
    let rz = pt.p * pt.p + pt.q * pt.q;
    for (c, f) in Integral::ALL.iter().enumerate() {
        let x = vector_field(*f, pt, params);
        j[(0, c)] = (pt.u.x * x.du.y - pt.u.y * x.du.x) / ru;
        j[(1, c)] = (pt.v.x * x.dv.y - pt.v.y * x.dv.x) / rv;
        j[(2, c)] = (pt.p * x.dq - pt.q * x.dp) / rz;
    }
    j
}

/// Newton iteration for a single period vector from `guess`.
pub fn solve_period(fp: &FiberPoint, guess: [f64; 3], params: &SystemParams) -> Result<[f64; 3]> {
    let p0 = fp.point;
    let a0 = angles(&p0);
    let eval = |t: &Vector3<f64>| -> Result<(PhasePoint, Vector3<f64>)> {
        let m = flow_compose_tol([t[0], t[1], t[2]], PERIOD_FLOW_TOL, &p0, params)?;
        let a = angles(&m);
        Ok((m, Vector3::new(wrap(a[0] - a0[0]), wrap(a[1] - a0[1]), wrap(a[2] - a0[2]))))
    };
    let mut t = Vector3::from(guess);
    let (mut m, mut r) = eval(&t)?;
    for _ in 0..40 {
        if r.amax() < 1e-11 {
            break;
        }
        let j = angle_jacobian(&m, params);
        let step = j.try_inverse().ok_or_else(|| Error::NoConvergence("singular angle Jacobian".into()))? * r;
        let mut alpha = 1.0;
        loop {
            let cand = t - step * alpha;
            let (mc, rc) = eval(&cand)?;
            if rc.norm() < r.norm() || alpha < 1.0 / 64.0 {
                t = cand;
                m = mc;
                r = rc;
                break;
            }
            alpha *= 0.5;
        }
    }
    let closure = m.distance(&p0);
    if r.amax() > 1e-9 || closure > PERIOD_CLOSURE_TOL {
        return Err(Error::NoConvergence(format!(
            "period iteration from {guess:?} ended with angle defect {:.2e}, closure {closure:.2e}",
            r.amax()
        )));
    }
    Ok([t[0], t[1], t[2]])
}

/// Distance between two points after the S¹ action is factored out.
fn reduced_distance(a: &PhasePoint, b: &PhasePoint) -> f64 {
    let (Ok(ra), Ok(rb)) = (to_section(a), to_section(b)) else { return f64::INFINITY };
    let d = [wrap(ra.theta_u - rb.theta_u), ra.u3 - rb.u3, wrap(ra.theta_v - rb.theta_v), ra.v3 - rb.v3];
    d.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Candidate periods from approximate returns of the orbit of `(t1, t2)` in the reduced space.
///
/// Samples `φ_H1^{t1} φ_H2^{t2}(P)` on an `n × n` grid over `[-radius, radius]²`,
/// keeps local minima of the reduced distance below `threshold` and polishes them with
/// [`solve_period`]. The third component is normalised to `(-π, π]`.
pub fn search_period_guesses(
    fp: &FiberPoint,
    params: &SystemParams,
    radius: f64,
    n: usize,
    threshold: f64,
) -> Result<Vec<[f64; 3]>> {
    let n = n.max(5);
    let ts: Vec<f64> = (0..n).map(|i| -radius + 2.0 * radius * i as f64 / (n - 1) as f64).collect();
    let orbit = |coeffs: [f64; 3], start: &PhasePoint| -> Result<Vec<PhasePoint>> {
        let mut out = Vec::with_capacity(n);
        let mut cur = flow(&FlowSpec::new(coeffs, ts[0]).with_tolerance(1e-9), start, params)?;
        out.push(cur);
        for w in ts.windows(2) {
            cur = flow(&FlowSpec::new(coeffs, w[1] - w[0]).with_tolerance(1e-9), &cur, params)?;
            out.push(cur);
        }
        Ok(out)
    };
    let column = orbit([0.0, 1.0, 0.0], &fp.point)?;
    let mut grid = vec![vec![0.0; n]; n];
    let mut pts = vec![vec![fp.point; n]; n];
    for (j, q) in column.iter().enumerate() {
        let row = orbit([1.0, 0.0, 0.0], q)?;
        for (i, m) in row.into_iter().enumerate() {
            grid[i][j] = reduced_distance(&m, &fp.point);
            pts[i][j] = m;
        }
    }
    let mut found: Vec<[f64; 3]> = Vec::new();
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let d = grid[i][j];
            if d > threshold || (ts[i].abs() < 1e-9 && ts[j].abs() < 1e-9) {
                continue;
            }
            let is_min = (-1i32..=1).all(|a| {
                (-1i32..=1).all(|b| (a == 0 && b == 0) || grid[(i as i32 + a) as usize][(j as i32 + b) as usize] >= d)
            });
            if !is_min {
                continue;
            }
            let t3 = -wrap(pts[i][j].phi() - fp.point.phi());
            let Ok(t) = solve_period(fp, [ts[i], ts[j], t3], params) else { continue };
            let t = [t[0], t[1], wrap(t[2])];
            if t[0].abs() + t[1].abs() < 1e-6 {
                continue;
            }
            if !found.iter().any(|f| (0..3).all(|c| (f[c] - t[c]).abs() < 1e-6)) {
                found.push(t);
            }
        }
    }
    Ok(found)
}

/// A basis `(T2, T3)` of the lattice spanned by candidate periods modulo `T1`.
///
/// Returns `None` unless every candidate is an integer combination of the chosen pair.
pub fn lattice_basis(cands: &[[f64; 3]]) -> Option<([f64; 3], [f64; 3])> {
    let norm = |t: &[f64; 3]| t[0].hypot(t[1]);
    let det2 = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[1] - a[1] * b[0];
    let a = *cands.iter().min_by(|x, y| norm(x).partial_cmp(&norm(y)).unwrap())?;
    let b = *cands
        .iter()
        .filter(|c| det2(&a, c).abs() > 1e-6)
        .min_by(|x, y| {
            let (dx, dy) = (det2(&a, x).abs(), det2(&a, y).abs());
            if (dx - dy).abs() > 1e-6 {
                dx.partial_cmp(&dy).unwrap()
            } else {
                norm(x).partial_cmp(&norm(y)).unwrap()
            }
        })?;
    let d = det2(&a, &b);
    for c in cands {
        let (m, n) = (det2(c, &b) / d, det2(&a, c) / d);
        if (m - m.round()).abs() > 1e-4 || (n - n.round()).abs() > 1e-4 {
            return None;
        }
    }
    Some((a, b))
}

/// Period basis `{T1, T2, T3}` at the anchor from Newton guesses for `T2` and `T3`.
pub fn solve_period_basis(
    fp: &FiberPoint,
    guess2: [f64; 3],
    guess3: [f64; 3],
    params: &SystemParams,
) -> Result<PeriodBasis> {
    let t2 = solve_period(fp, guess2, params)?;
    let t3 = solve_period(fp, guess3, params)?;
    let basis = PeriodBasis { anchor: *fp, t1: T1, t2, t3 };
    let det = basis.det();
    if det.abs() < 1e-6 {
        return Err(Error::DegenerateBasis(det.abs()));
    }
    Ok(basis)
}

// ---------------------------------------------------------------------------
// continuation

struct State {
    value: IntegralValue,
    fp: FiberPoint,
    t2: [f64; 3],
    t3: [f64; 3],
}

fn vnorm(t: &[f64; 3]) -> f64 {
    (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt()
}

fn vdiff(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    vnorm(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

fn try_step(s: &State, to: IntegralValue, params: &SystemParams) -> Option<(State, f64)> {
    let fp = newton_fiber(&to, &s.fp.point, params)?;
    let t2 = solve_period(&fp, s.t2, params).ok()?;
    let t3 = solve_period(&fp, s.t3, params).ok()?;
    let jump = (vdiff(&t2, &s.t2) / vnorm(&s.t2)).max(vdiff(&t3, &s.t3) / vnorm(&s.t3));
    (jump <= JUMP_FACTOR).then_some((State { value: to, fp, t2, t3 }, jump))
}

fn advance(s: State, to: IntegralValue, depth: usize, params: &SystemParams, st: &mut ContinuationStats) -> Result<State> {
    if let Some((next, jump)) = try_step(&s, to, params) {
        st.steps += 1;
        st.max_relative_jump = st.max_relative_jump.max(jump);
        st.max_fiber_residual = st.max_fiber_residual.max(next.fp.residual);
        return Ok(next);
    }
    if depth >= MAX_BISECTIONS {
        return Err(Error::StepCollapse(depth));
    }
    st.rejected += 1;
    let mid = s.value.lerp(&to, 0.5);
    let s = advance(s, mid, depth + 1, params, st)?;
    advance(s, to, depth + 1, params, st)
}

/// Transports `T2`, `T3` along the loop; the anchor is re-solved at every step.
///
/// A step whose relative period change exceeds [`JUMP_FACTOR`] is rejected and
/// bisected, up to [`MAX_BISECTIONS`] times.
pub fn continue_basis(basis: &PeriodBasis, lp: &LoopSpec, params: &SystemParams) -> Result<Transport> {
    lp.validate()?;
    if basis.anchor.target.distance(&lp.base) > 1e-9 {
        return Err(Error::OutOfRange("basis is not anchored over the loop base".into()));
    }
    let mut st = ContinuationStats { steps: 0, rejected: 0, max_relative_jump: 0.0, max_fiber_residual: 0.0 };
    let mut s = State { value: lp.base, fp: basis.anchor, t2: basis.t2, t3: basis.t3 };
    for w in lp.waypoints.windows(2) {
        for i in 1..=lp.steps_per_segment {
            let to = w[0].lerp(&w[1], i as f64 / lp.steps_per_segment as f64);
            s = advance(s, to, 0, params, &mut st)?;
        }
    }
    Ok(Transport { basis: PeriodBasis { anchor: s.fp, t1: T1, t2: s.t2, t3: s.t3 }, stats: st })
}

// ---------------------------------------------------------------------------
// integer matrices

pub fn int_mul(a: &IntMatrix3, b: &IntMatrix3) -> IntMatrix3 {
    let mut c = [[0i64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn int_det(a: &IntMatrix3) -> i64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Inverse of a unimodular integer matrix.
pub fn int_inverse(a: &IntMatrix3) -> Result<IntMatrix3> {
    let d = int_det(a);
    if d.abs() != 1 {
        return Err(Error::NotUnimodular(d));
    }
    let mut inv = [[0i64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = d * (a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]);
        }
    }
    Ok(inv)
}

fn to_f64(a: &IntMatrix3) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| a[i][j] as f64)
}

fn to_rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [[m[(0, 0)], m[(0, 1)], m[(0, 2)]], [m[(1, 0)], m[(1, 1)], m[(1, 2)]], [m[(2, 0)], m[(2, 1)], m[(2, 2)]]]
}

impl MonodromyMatrix {
    pub fn identity() -> Self {
        MonodromyMatrix {
            entries: [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
            raw: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            residual: 0.0,
        }
    }

    /// Rounds a real matrix to the nearest integer matrix and checks it lies in SL(3, Z).
    pub fn from_raw(raw: &Matrix3<f64>) -> Result<Self> {
        let mut entries = [[0i64; 3]; 3];
        let mut residual = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let x = raw[(i, j)];
                if !x.is_finite() {
                    return Err(Error::RoundingAmbiguous(f64::INFINITY));
                }
                entries[i][j] = x.round() as i64;
                residual = residual.max((x - x.round()).abs());
            }
        }
        if residual >= 1e-3 {
            return Err(Error::RoundingAmbiguous(residual));
        }
        let d = int_det(&entries);
        if d != 1 {
            return Err(Error::NotUnimodular(d));
        }
        Ok(MonodromyMatrix { entries, raw: to_rows(raw), residual })
    }

    pub fn mul(&self, other: &MonodromyMatrix) -> MonodromyMatrix {
        let raw = Matrix3::from_fn(|i, j| self.raw[i][j]) * Matrix3::from_fn(|i, j| other.raw[i][j]);
        MonodromyMatrix {
            entries: int_mul(&self.entries, &other.entries),
            raw: to_rows(&raw),
            residual: self.residual.max(other.residual),
        }
    }
}

/// `M = B_after · B_before⁻¹`, rounded into SL(3, Z).
pub fn monodromy_matrix(before: &PeriodBasis, after: &PeriodBasis) -> Result<MonodromyMatrix> {
    if before.anchor.target.distance(&after.anchor.target) > 1e-9 {
        return Err(Error::OutOfRange("bases live on different fibres".into()));
    }
    let b = before.matrix();
    let det = b.determinant();
    if det.abs() < 1e-6 {
        return Err(Error::DegenerateBasis(det.abs()));
    }
    let inv = b.try_inverse().ok_or(Error::DegenerateBasis(det.abs()))?;
    MonodromyMatrix::from_raw(&(after.matrix() * inv))
}

/// `A M A⁻¹`.
pub fn change_basis(m: &MonodromyMatrix, a: &IntMatrix3) -> Result<MonodromyMatrix> {
    let ainv = int_inverse(a)?;
    let raw = to_f64(a) * Matrix3::from_fn(|i, j| m.raw[i][j]) * to_f64(&ainv);
    Ok(MonodromyMatrix { entries: int_mul(&int_mul(a, &m.entries), &ainv), raw: to_rows(&raw), residual: m.residual })
}

/// Action on the lattice modulo `T1`: the lower-right 2×2 block.
pub fn reduced_monodromy(m: &MonodromyMatrix) -> Result<[[i64; 2]; 2]> {
    if m.entries[0] != [1, 0, 0] {
        return Err(Error::NotReducible);
    }
    Ok([[m.entries[1][1], m.entries[1][2]], [m.entries[2][1], m.entries[2][2]]])
}

// ---------------------------------------------------------------------------
// standard loops

/// Focus-focus critical values `ff1 … ff4` (slices `k = 1.8` and `k = 0.3`).
pub fn focus_focus_values() -> Result<[IntegralValue; 4]> {
    let ff = |k: f64| -> Result<Vec<IntegralValue>> {
        let s = slice(k, &SystemParams::STC, 2)?;
        Ok(s.rank1.iter().filter(|r| r.kind == Rank1Type::FFR).map(|r| r.value).collect())
    };
    let a = ff(1.8)?;
    let b = ff(0.3)?;
    if a.len() != 2 || b.len() != 2 {
        return Err(Error::NoConvergence("expected two focus-focus values per slice".into()));
    }
    // order: ff1 closer to the origin, ff3 with the larger h1
    let (f1, f2) = if a[0].h1.abs() < a[1].h1.abs() { (a[0], a[1]) } else { (a[1], a[0]) };
    let (f3, f4) = if b[0].h1 > b[1].h1 { (b[0], b[1]) } else { (b[1], b[0]) };
    Ok([f1, f2, f3, f4])
}

/// Loop `γ_j` (`j = 1…4`) around `ff_j`, based at `base`.
pub fn gamma_loop(j: usize, base: IntegralValue, radius: f64, steps: usize) -> Result<LoopSpec> {
    if !(1..=4).contains(&j) {
        return Err(Error::OutOfRange(format!("loop index {j} not in 1..=4")));
    }
    let ff = focus_focus_values()?;
    Ok(LoopSpec::around(base, ff[j - 1], radius, 32, steps))
}

/// Rough period guesses at `R0`, refined by Newton.
pub const GUESS_T2: [f64; 3] = [1.84, 2.07, -1.44];
pub const GUESS_T3: [f64; 3] = [-2.03, -0.785, 1.16];

/// Period basis at `base`, seeded from the `(1, -1)` fixed point.
///
/// Uses [`GUESS_T2`], [`GUESS_T3`] when `base` is `R0`; otherwise the guesses
/// come from a recurrence search of the two angle flows.
pub fn initial_basis(base: IntegralValue, params: &SystemParams) -> Result<PeriodBasis> {
    let fp = solve_fiber_point(base, &PhasePoint::fixed_point(1.0, -1.0), params)?;
    if base.distance(&R0) < 1e-12 && params.is_stc() {
        if let Ok(b) = solve_period_basis(&fp, GUESS_T2, GUESS_T3, params) {
            return Ok(b);
        }
    }
    let cands = search_period_guesses(&fp, params, 4.0, 81, 0.4)?;
    let (t2, t3) = lattice_basis(&cands).ok_or(Error::DegenerateBasis(0.0))?;
    solve_period_basis(&fp, t2, t3, params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopReport {
    pub before: PeriodBasis,
    pub after: PeriodBasis,
    /// Matrix in the period basis, with its pre-rounding values.
    pub matrix: MonodromyMatrix,
    /// `A M A⁻¹` with `A` = [`CHANGE_OF_BASIS`].
    pub conjugated: MonodromyMatrix,
    pub reduced: Option<[[i64; 2]; 2]>,
    pub stats: ContinuationStats,
}

/// Transports `basis` around `lp` and assembles the monodromy data.
pub fn run_loop(basis: &PeriodBasis, lp: &LoopSpec, params: &SystemParams) -> Result<LoopReport> {
    let tr = continue_basis(basis, lp, params)?;
    let matrix = monodromy_matrix(basis, &tr.basis)?;
    let conjugated = change_basis(&matrix, &CHANGE_OF_BASIS)?;
    let reduced = reduced_monodromy(&conjugated).ok();
    Ok(LoopReport { before: *basis, after: tr.basis, matrix, conjugated, reduced, stats: tr.stats })
}

#[cfg(test)]
mod tests {
    use super::*;

    const STC: SystemParams = SystemParams::STC;

    #[test]
    fn wrap_range() {
        assert!((wrap(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap(-PI) - PI).abs() < 1e-12);
        assert!((wrap(0.1 - TAU) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_fibre_is_trivial() {
        let seed = PhasePoint::fixed_point(-1.0, -1.0);
        let fp = solve_fiber_point(IntegralValue::new(-1.5, 1.5, -2.0), &seed, &STC).unwrap();
        assert_eq!(fp.residual, 0.0);
        assert_eq!(fp.point, seed);
    }

    #[test]
    fn regular_fibre_point() {
        let fp = solve_fiber_point(R0, &PhasePoint::fixed_point(1.0, -1.0), &STC).unwrap();
        let f = eval_integrals(&fp.point, &STC);
        assert!(f.distance(&R0) < 1e-10);
        fp.point.check().unwrap();
    }

    #[test]
    fn empty_fibre() {
        let r = solve_fiber_point(IntegralValue::new(100.0, 100.0, 0.0), &PhasePoint::fixed_point(1.0, 1.0), &STC);
        assert!(matches!(r, Err(Error::NoConvergence(_))));
    }

    #[test]
    fn angle_jacobian_matches_differences() {
        let fp = solve_fiber_point(R0, &PhasePoint::fixed_point(1.0, -1.0), &STC).unwrap();
        let j = angle_jacobian(&fp.point, &STC);
        let h = 1e-5;
        for c in 0..3 {
            let mut t = [0.0; 3];
            t[c] = h;
            let a = angles(&flow_compose_tol(t, 1e-13, &fp.point, &STC).unwrap());
            t[c] = -h;
            let b = angles(&flow_compose_tol(t, 1e-13, &fp.point, &STC).unwrap());
            for r in 0..3 {
                let fd = wrap(a[r] - b[r]) / (2.0 * h);
                assert!((fd - j[(r, c)]).abs() < 1e-6, "({r},{c}) {fd} vs {}", j[(r, c)]);
            }
        }
    }

    #[test]
    fn integer_helpers() {
        let a = CHANGE_OF_BASIS;
        let ai = int_inverse(&a).unwrap();
        assert_eq!(int_mul(&a, &ai), [[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        assert!(matches!(int_inverse(&[[2, 0, 0], [0, 1, 0], [0, 0, 1]]), Err(Error::NotUnimodular(2))));
        let m = MonodromyMatrix::identity();
        assert_eq!(change_basis(&m, &a).unwrap().entries, m.entries);
    }

    #[test]
    fn rounding_errors() {
        let r = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.4, 0.0, 0.0, 1.0);
        assert!(matches!(MonodromyMatrix::from_raw(&r), Err(Error::RoundingAmbiguous(_))));
        let r = Matrix3::new(2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(matches!(MonodromyMatrix::from_raw(&r), Err(Error::NotUnimodular(2))));
    }

    #[test]
    fn reduction_requires_fixed_first_row() {
        let m = MonodromyMatrix { entries: [[1, 1, 0], [0, 1, 0], [0, 0, 1]], ..MonodromyMatrix::identity() };
        assert!(matches!(reduced_monodromy(&m), Err(Error::NotReducible)));
    }

    #[test]
    fn lattice_basis_of_square_grid() {
        let c = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0], [-1.0, 2.0, 0.0]];
        let (a, b) = lattice_basis(&c).unwrap();
        assert!((a[0] * b[1] - a[1] * b[0]).abs() - 1.0 < 1e-12);
        assert!(lattice_basis(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.3, 0.7, 0.0]]).is_none());
    }
}
