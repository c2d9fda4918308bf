//! Flows of `a1 X_H1 + a2 X_H2 + a3 X_K`.
//!
//! Integration uses the Dormand-Prince 5(4) pair on the rescaled time
//! `s ∈ [0, 1]`, so negative durations need no special casing. After every
//! accepted step both spin vectors are projected back to the unit sphere.

use crate::error::{Error, Result};
use crate::phase_space::{combined_field, s1_action, PhasePoint, SystemParams};

pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSpec {
    pub coeffs: [f64; 3],
    pub duration: f64,
    pub tolerance: f64,
    pub max_steps: usize,
}

impl FlowSpec {
    /// Spec with default tolerance and a step cap proportional to the duration.
    pub fn new(coeffs: [f64; 3], duration: f64) -> Self {
        FlowSpec { coeffs, duration, tolerance: DEFAULT_TOL, max_steps: default_max_steps(duration) }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || self.max_steps == 0 || !self.duration.is_finite() {
            return Err(Error::InvalidParams(format!("bad flow spec {self:?}")));
        }
        Ok(())
    }
}

pub fn default_max_steps(duration: f64) -> usize {
    20_000 + (5_000.0 * duration.abs()) as usize
}

// Dormand-Prince tableau; the field is autonomous so the nodes are not needed.
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

type State = [f64; 8];

fn rhs(coeffs: &[f64; 3], scale: f64, y: &State, params: &SystemParams) -> State {
    let x = combined_field(*coeffs, &PhasePoint::from_array(*y), params).to_array();
    let mut out = [0.0; 8];
    for i in 0..8 {
        out[i] = scale * x[i];
    }
    out
}

fn project(y: &mut State) {
    let nu = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
    let nv = (y[3] * y[3] + y[4] * y[4] + y[5] * y[5]).sqrt();
    for i in 0..3 {
        y[i] /= nu;
        y[3 + i] /= nv;
    }
}

/// Time-`duration` image of `p0` under the combined field.
pub fn flow(spec: &FlowSpec, p0: &PhasePoint, params: &SystemParams) -> Result<PhasePoint> {
    spec.validate()?;
    if spec.duration == 0.0 || spec.coeffs.iter().all(|c| *c == 0.0) {
        return Ok(*p0);
    }
    let scale = spec.duration;
    let tol = spec.tolerance;
    let mut y = p0.to_array();
    let mut s = 0.0;
    let mut k1 = rhs(&spec.coeffs, scale, &y, params);
    let speed = k1.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut h = (0.01 / speed.max(1e-3)).clamp(1e-6, 0.1);
    let mut steps = 0usize;
    let mut k = [[0.0; 8]; 7];

    while s < 1.0 {
        if steps >= spec.max_steps {
            return Err(Error::StepLimitExceeded { max_steps: spec.max_steps });
        }
        steps += 1;
        if s + h > 1.0 {
            h = 1.0 - s;
        }
        k[0] = k1;
        for stage in 1..7 {
            let mut yi = y;
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = A[stage][j];
                if a != 0.0 {
                    for i in 0..8 {
                        yi[i] += h * a * kj[i];
                    }
                }
            }
            k[stage] = rhs(&spec.coeffs, scale, &yi, params);
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for i in 0..8 {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for st in 0..7 {
                d5 += B5[st] * k[st][i];
                d4 += B4[st] * k[st][i];
            }
            y5[i] += h * d5;
            let sc = tol + tol * y[i].abs().max(y5[i].abs());
            err = err.max((h * (d5 - d4)).abs() / sc);
        }
        if !err.is_finite() {
            h *= 0.1;
            continue;
        }
        if err <= 1.0 {
            s += h;
            project(&mut y5);
            y = y5;
            // first-same-as-last only holds before projection
            k1 = rhs(&spec.coeffs, scale, &y, params);
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h < 1e-14 {
            return Err(Error::StepLimitExceeded { max_steps: steps });
        }
    }
    Ok(PhasePoint::from_array(y))
}

/// Samples the flow of the combined field at each requested time (times sorted, from 0).
pub fn trajectory(
    coeffs: [f64; 3],
    times: &[f64],
    tol: f64,
    p0: &PhasePoint,
    params: &SystemParams,
) -> Result<Vec<PhasePoint>> {
    let mut out = Vec::with_capacity(times.len());
    let mut cur = *p0;
    let mut t = 0.0;
    for &ti in times {
        let spec = FlowSpec::new(coeffs, ti - t).with_tolerance(tol);
        cur = flow(&spec, &cur, params)?;
        t = ti;
        out.push(cur);
    }
    Ok(out)
}

/// `φ_K^{T3} ∘ φ_H2^{T2} ∘ φ_H1^{T1}` applied to `p0`; the `K` flow is the exact rotation.
pub fn flow_compose(t: [f64; 3], p0: &PhasePoint, params: &SystemParams) -> Result<PhasePoint> {
    flow_compose_tol(t, DEFAULT_TOL, p0, params)
}

pub fn flow_compose_tol(t: [f64; 3], tol: f64, p0: &PhasePoint, params: &SystemParams) -> Result<PhasePoint> {
    let p1 = flow(&FlowSpec::new([1.0, 0.0, 0.0], t[0]).with_tolerance(tol), p0, params)?;
    let p2 = flow(&FlowSpec::new([0.0, 1.0, 0.0], t[1]).with_tolerance(tol), &p1, params)?;
    Ok(s1_action(t[2], &p2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::{eval_integrals, random_point};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const STC: SystemParams = SystemParams::STC;

    #[test]
    fn full_s1_period_returns() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p0 = random_point(&mut rng, 1.5);
        let p = flow(&FlowSpec::new([0.0, 0.0, 1.0], 2.0 * PI), &p0, &STC).unwrap();
        assert!(p.distance(&p0) < 1e-9, "{}", p.distance(&p0));
    }

    #[test]
    fn k_flow_matches_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p0 = random_point(&mut rng, 1.5);
        let p = flow(&FlowSpec::new([0.0, 0.0, 1.0], 1.3), &p0, &STC).unwrap();
        assert!(p.distance(&s1_action(1.3, &p0)) < 1e-10);
    }

    #[test]
    fn h1_flow_conserves_integrals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p0 = random_point(&mut rng, 1.5);
        let f0 = eval_integrals(&p0, &STC);
        let p = flow(&FlowSpec::new([1.0, 0.0, 0.0], 10.0), &p0, &STC).unwrap();
        let f = eval_integrals(&p, &STC);
        assert!((f.h2 - f0.h2).abs() < 1e-9);
        assert!((f.h1 - f0.h1).abs() < 1e-9);
        assert!((f.k - f0.k).abs() < 1e-9);
        let (du, dv) = p.sphere_defects();
        assert!(du.abs() < 1e-11 && dv.abs() < 1e-11);
    }

    #[test]
    fn negative_duration_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p0 = random_point(&mut rng, 1.0);
        let a = flow(&FlowSpec::new([0.3, -0.7, 0.2], 2.5), &p0, &STC).unwrap();
        let b = flow(&FlowSpec::new([0.3, -0.7, 0.2], -2.5), &a, &STC).unwrap();
        assert!(b.distance(&p0) < 1e-9);
    }

    #[test]
    fn zero_compose_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p0 = random_point(&mut rng, 1.0);
        assert_eq!(flow_compose([0.0; 3], &p0, &STC).unwrap(), p0);
        assert!(flow_compose([0.0, 0.0, 2.0 * PI], &p0, &STC).unwrap().distance(&p0) < 1e-9);
    }

    #[test]
    fn compose_matches_combined_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p0 = random_point(&mut rng, 1.0);
        let t = [0.8, -0.5, 1.1];
        let a = flow_compose(t, &p0, &STC).unwrap();
        let b = flow(&FlowSpec::new(t, 1.0), &p0, &STC).unwrap();
        assert!(a.distance(&b) < 1e-9, "{}", a.distance(&b));
    }

    #[test]
    fn step_limit_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p0 = random_point(&mut rng, 1.0);
        let spec = FlowSpec { coeffs: [1.0, 0.0, 0.0], duration: 50.0, tolerance: 1e-12, max_steps: 3 };
        assert!(matches!(flow(&spec, &p0, &STC), Err(Error::StepLimitExceeded { .. })));
    }
}
