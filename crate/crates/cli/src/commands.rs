use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context as _, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use monodromy_lab::critical::{bifurcation_diagram, central_value, slice, DiagramSlice};
use monodromy_lab::flows::{trajectory, DEFAULT_TOL};
use monodromy_lab::lax::{lax_audit, root_multiplicities, spectral_poly_from_values, triple_root_check};
use monodromy_lab::monodromy::{gamma_loop, initial_basis, run_loop, LoopSpec};
use monodromy_lab::phase_space::{eval_integrals, random_point};
use monodromy_lab::reduction::delzant_polygon;
use monodromy_lab::unfolding::{pl_monodromy, psi_map, singular_fiber_probe, verify_normal_form};
use monodromy_lab::{IntegralValue, PhasePoint, SystemParams};

use crate::output::{to_value, Artifact, Audit};
use crate::{Format, LoopChoice};

pub struct Context {
    pub params: SystemParams,
    pub seed: u64,
    pub tol: Option<f64>,
    pub format: Format,
}

impl Context {
    fn json_only(&self, command: &str) -> Result<()> {
        if self.format == Format::Csv {
            bail!("`{command}` only emits JSON; CSV is available for bifdiag and flow");
        }
        Ok(())
    }

    fn start_point(&self, given: Option<[f64; 8]>) -> Result<PhasePoint> {
        match given {
            Some(a) => Ok(PhasePoint::new([a[0], a[1], a[2]], [a[3], a[4], a[5]], a[6], a[7])?),
            None => Ok(random_point(&mut ChaCha8Rng::seed_from_u64(self.seed), 1.2)),
        }
    }
}

fn value_triple(v: &IntegralValue) -> [f64; 3] {
    v.to_array()
}

fn slice_json(s: &DiagramSlice) -> Value {
    let rank2: Vec<[f64; 2]> = s.rank2.iter().flatten().map(|p| [p.h1, p.h2]).collect();
    let pieces: Vec<usize> = s.rank2.iter().map(Vec::len).collect();
    let rank1: Vec<Value> = s
        .rank1
        .iter()
        .map(|r| json!({"family": r.family.name(), "b": r.b, "h1": r.value.h1, "h2": r.value.h2, "k": r.value.k, "type": r.kind}))
        .collect();
    let rank0: Vec<Value> = s
        .rank0
        .iter()
        .map(|p| {
            let v = p.critical_value;
            json!({"sigma_u": p.sigma_u, "sigma_v": p.sigma_v, "h1": v.h1, "h2": v.h2, "k": v.k, "type": p.kind})
        })
        .collect();
    json!({"k": s.k, "rank2": rank2, "rank2_pieces": pieces, "rank1": rank1, "rank0": rank0})
}

fn slices_csv(slices: &[DiagramSlice]) -> String {
    let mut out = String::from("k,rank,piece,family,type,h1,h2\n");
    for s in slices {
        for (i, piece) in s.rank2.iter().enumerate() {
            for p in piece {
                let _ = writeln!(out, "{},2,{i},,,{},{}", s.k, p.h1, p.h2);
            }
        }
        for r in &s.rank1 {
            let _ = writeln!(out, "{},1,,{},{:?},{},{}", s.k, r.family.name(), r.kind, r.value.h1, r.value.h2);
        }
        for p in &s.rank0 {
            let v = p.critical_value;
            let _ = writeln!(out, "{},0,,,{:?},{},{}", s.k, p.kind, v.h1, v.h2);
        }
    }
    out
}

pub fn bifdiag(ctx: &Context, ks: &[f64], samples: usize) -> Result<Artifact> {
    if samples < 2 {
        bail!("--samples must be at least 2");
    }
    let slices = ks.par_iter().map(|&k| slice(k, &ctx.params, samples)).collect::<monodromy_lab::Result<Vec<_>>>()?;
    if ctx.format == Format::Csv {
        return Ok(Artifact::csv(slices_csv(&slices)));
    }
    let diagram = bifurcation_diagram(&[], &ctx.params, samples)?;
    let threads: Vec<Value> = diagram
        .threads
        .iter()
        .map(|t| json!({"family": t.family.name(), "type": t.kind, "values": t.values.iter().map(value_triple).collect::<Vec<_>>()}))
        .collect();
    let payload = json!({
        "params": ctx.params,
        "slices": slices.iter().map(slice_json).collect::<Vec<_>>(),
        "threads": threads,
        "rank0": to_value(&diagram.rank0)?,
    });
    Artifact::json("bifdiag", payload, Vec::new())
}

fn read_waypoints(path: &Path) -> Result<Vec<IntegralValue>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let raw: Vec<[f64; 3]> = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(raw.into_iter().map(IntegralValue::from_array).collect())
}

pub fn monodromy(
    ctx: &Context,
    which: LoopChoice,
    base: IntegralValue,
    radius: f64,
    steps: usize,
    waypoints: Option<&Path>,
) -> Result<Artifact> {
    ctx.json_only("monodromy")?;
    let loops: Vec<(String, LoopSpec)> = match which {
        LoopChoice::Custom => {
            let path = waypoints.context("--loop custom needs --waypoints <file>")?;
            let w = read_waypoints(path)?;
            let first = *w.first().context("waypoint file is empty")?;
            let lp = LoopSpec { base: first, waypoints: w, steps_per_segment: steps };
            lp.validate()?;
            vec![("custom".into(), lp)]
        }
        _ => {
            if waypoints.is_some() {
                bail!("--waypoints only applies to --loop custom");
            }
            let js: Vec<usize> = match which {
                LoopChoice::Gamma1 => vec![1],
                LoopChoice::Gamma2 => vec![2],
                LoopChoice::Gamma3 => vec![3],
                LoopChoice::Gamma4 => vec![4],
                _ => vec![1, 2, 3, 4],
            };
            js.into_iter().map(|j| Ok((format!("gamma{j}"), gamma_loop(j, base, radius, steps)?))).collect::<Result<_>>()?
        }
    };
    let basis = initial_basis(loops[0].1.base, &ctx.params)?;
    let reports = loops
        .par_iter()
        .map(|(_, lp)| run_loop(&basis, lp, &ctx.params))
        .collect::<monodromy_lab::Result<Vec<_>>>()?;

    let bound = ctx.tol.unwrap_or(1e-3);
    let mut audits = Vec::new();
    let mut out = Vec::new();
    for ((name, lp), r) in loops.iter().zip(&reports) {
        audits.push(Audit::below(&format!("{name} rounding residual"), r.matrix.residual, bound));
        audits.push(Audit::flag(&format!("{name} fixes the circle period"), r.reduced.is_some()));
        out.push(json!({"loop": name, "waypoints": lp.waypoints.len(), "steps_per_segment": lp.steps_per_segment, "report": to_value(r)?}));
    }
    Artifact::json("monodromy", json!({"params": ctx.params, "base": loops[0].1.base, "loops": out}), audits)
}

pub fn a2(ctx: &Context, which: Option<u8>, verify: bool) -> Result<Artifact> {
    ctx.json_only("a2")?;
    let js: Vec<usize> = which.map_or_else(|| (1..=4).collect(), |j| vec![j as usize]);
    let reports = js.par_iter().map(|&j| pl_monodromy(j)).collect::<monodromy_lab::Result<Vec<_>>>()?;
    let mut audits = Vec::new();
    for r in &reports {
        let m = r.matrix;
        audits.push(Audit::flag(&format!("loop {} determinant one", r.loop_index), m[0][0] * m[1][1] - m[0][1] * m[1][0] == 1));
        let (a, b) = r.colliding;
        let swapped = (0..3).all(|i| r.permutation[i] == if i == a { b } else if i == b { a } else { i });
        audits.push(Audit::flag(&format!("loop {} swaps the colliding roots", r.loop_index), swapped));
        audits.push(Audit::below(&format!("loop {} root residual", r.loop_index), r.max_root_residual, ctx.tol.unwrap_or(1e-8)));
    }
    let mut payload = json!({"loops": to_value(&reports)?});
    if verify {
        let nf = verify_normal_form(&ctx.params);
        for c in &nf.checks {
            audits.push(Audit { name: format!("normal form {}", c.name), passed: c.passed, value: c.error, bound: c.tolerance });
        }
        payload["normal_form"] = json!({
            "passed": nf.passed(),
            "checks": to_value(&nf.checks)?,
            "fit_jet": to_value(&nf.fit_jet)?,
            "fit_finite_difference": to_value(&nf.fit_finite_difference)?,
        });
    }
    Artifact::json("a2", payload, audits)
}

pub fn lax_check(ctx: &Context, duration: f64, samples: usize, point: Option<[f64; 8]>) -> Result<Artifact> {
    ctx.json_only("lax-check")?;
    if !(duration > 0.0) || samples < 5 {
        bail!("--trajectory-time must be positive and --samples at least 5");
    }
    let p0 = ctx.start_point(point)?;
    let audit = lax_audit(&p0, duration, samples, &ctx.params)?;
    let mut audits = vec![
        Audit::below("Lax residual (finite differences)", audit.lax_residual_fd, ctx.tol.unwrap_or(1e-7)),
        Audit::below("Lax residual (vector field)", audit.lax_residual_field, 1e-10),
        Audit::below("spectral coefficient drift", audit.coefficient_drift, 1e-8),
        Audit::below("closed form vs eigenvalue interpolation", audit.interpolation_gap, 1e-8),
    ];
    let mut payload = json!({"params": ctx.params, "start": p0.to_array(), "audit": to_value(&audit)?});
    // The triple root belongs to the central value of the resonant system.
    if ctx.params.is_stc() {
        let tr = triple_root_check(&central_value(), &ctx.params);
        let a0 = (4.0 * 2f64.powf(2.0 / 3.0) + 3.0) / 16.0;
        audits.push(Audit::below("triple root residual", tr.residual, 1e-10));
        audits.push(Audit::below("triple root a0", (tr.a0 - a0).abs(), 1e-12));
        audits.push(Audit::below("triple root a1", (tr.a1 + 1.0).abs(), 1e-12));
        payload["triple_root"] = to_value(&tr)?;
        payload["expected_a0"] = json!(a0);
    }
    Artifact::json("lax-check", payload, audits)
}

pub fn flow(ctx: &Context, coeffs: [f64; 3], time: f64, samples: usize, point: Option<[f64; 8]>) -> Result<Artifact> {
    if samples == 0 || !time.is_finite() {
        bail!("--samples must be positive and --time finite");
    }
    let p0 = ctx.start_point(point)?;
    let times: Vec<f64> = (1..=samples).map(|i| time * i as f64 / samples as f64).collect();
    let pts = trajectory(coeffs, &times, ctx.tol.unwrap_or(DEFAULT_TOL), &p0, &ctx.params)?;
    let f0 = eval_integrals(&p0, &ctx.params);
    let mut rows = vec![(0.0, p0)];
    rows.extend(times.iter().copied().zip(pts));
    let drift = rows.iter().map(|(_, p)| eval_integrals(p, &ctx.params).distance(&f0)).fold(0.0, f64::max);
    let sphere = rows.iter().map(|(_, p)| {
        let (a, b) = p.sphere_defects();
        a.abs().max(b.abs())
    });
    let sphere = sphere.fold(0.0, f64::max);
    if ctx.format == Format::Csv {
        let mut out = String::from("t,u1,u2,u3,v1,v2,v3,q,p,h1,h2,k\n");
        for (t, p) in &rows {
            let f = eval_integrals(p, &ctx.params);
            let cols: Vec<String> = p.to_array().iter().chain(&f.to_array()).map(f64::to_string).collect();
            let _ = writeln!(out, "{t},{}", cols.join(","));
        }
        let mut a = Artifact::csv(out);
        a.passed = drift < 1e-9 && sphere < 1e-11;
        return Ok(a);
    }
    let traj: Vec<Value> = rows
        .iter()
        .map(|(t, p)| json!({"t": t, "point": p.to_array(), "values": eval_integrals(p, &ctx.params).to_array()}))
        .collect();
    let audits = vec![Audit::below("integral drift", drift, 1e-9), Audit::below("sphere defect", sphere, 1e-11)];
    Artifact::json("flow", json!({"params": ctx.params, "coeffs": coeffs, "trajectory": traj}), audits)
}

pub fn reduce(ctx: &Context, k: f64, delzant: bool) -> Result<Artifact> {
    ctx.json_only("reduce")?;
    let poly = delzant_polygon(k)?;
    let exact: Vec<[String; 2]> = poly.vertices.iter().map(|(a, b)| [a.to_string(), b.to_string()]).collect();
    let mut payload = json!({"k": k, "vertex_count": poly.len(), "vertices": exact, "vertices_f64": poly.vertices_f64()});
    let mut audits = Vec::new();
    if delzant {
        let ok = poly.is_delzant();
        payload["delzant"] = json!(ok);
        audits.push(Audit::flag("Delzant condition", ok));
    }
    Artifact::json("reduce", payload, audits)
}

pub fn fiber(ctx: &Context, value: Option<IntegralValue>) -> Result<Artifact> {
    ctx.json_only("fiber")?;
    let value = value.unwrap_or_else(central_value);
    let probe = singular_fiber_probe(&value, ctx.tol.unwrap_or(1e-6));
    let q = spectral_poly_from_values(&value, &ctx.params);
    let mult: Vec<Value> =
        root_multiplicities(&value, &ctx.params, 1e-9).into_iter().map(|(d, m)| json!({"degree": d, "multiplicity": m})).collect();
    let payload = json!({
        "params": ctx.params,
        "value": value,
        "psi": psi_map(&value),
        "local": to_value(&probe)?,
        "spectral_coefficients": q.coefficients,
        "spectral_factors": mult,
    });
    Artifact::json("fiber", payload, Vec::new())
}
