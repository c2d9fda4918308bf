use serde::{Deserialize, Serialize};

use super::rank0::{rank0_classify, Rank0Point};
use super::rank1::{k_star, rank1_sample, rank1_value, rank1_special, rank1_thread, Rank1Family, Rank1Type};
use super::rank2::{rank2_slice, Rank2Sample};
use crate::error::{Error, Result};
use crate::phase_space::{IntegralValue, SystemParams};

/// Rank-1 critical value crossing a slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceRank1 {
    pub family: Rank1Family,
    pub b: f64,
    pub value: IntegralValue,
    pub kind: Rank1Type,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramSlice {
    pub k: f64,
    pub rank2: Vec<Vec<Rank2Sample>>,
    pub rank1: Vec<SliceRank1>,
    pub rank0: Vec<Rank0Point>,
}

/// A rank-1 thread as a polyline of critical values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thread {
    pub family: Rank1Family,
    pub kind: Rank1Type,
    pub values: Vec<IntegralValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationDiagram {
    pub params: SystemParams,
    pub rank0: Vec<Rank0Point>,
    pub threads: Vec<Thread>,
    pub slices: Vec<DiagramSlice>,
}

const SLICE_TOL: f64 = 1e-9;

fn rank1_crossings(k: f64) -> Vec<SliceRank1> {
    let mut out = Vec::new();
    for fam in Rank1Family::THREADS {
        let (lo, hi) = fam.interval();
        let n = 800;
        let at = |b: f64| rank1_value(fam, b).map(|v| v.k - k);
        let bs: Vec<f64> = (1..n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        for w in bs.windows(2) {
            let (Some(fa), Some(fb)) = (at(w[0]), at(w[1])) else { continue };
            if fa != 0.0 && fa.signum() == fb.signum() {
                continue;
            }
            let (mut a, mut b, mut fa) = (w[0], w[1], fa);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                let Some(fm) = at(m) else { break };
                if fm == 0.0 {
                    (a, b) = (m, m);
                    break;
                }
                if fm.signum() == fa.signum() {
                    (a, fa) = (m, fm);
                } else {
                    b = m;
                }
            }
            if let Ok(s) = rank1_sample(fam, 0.5 * (a + b)) {
                out.push(SliceRank1 { family: fam, b: s.b, value: s.critical_value, kind: s.kind });
            }
        }
    }
    for (fam, kk) in [(Rank1Family::Hh, 16.0625), (Rank1Family::CStar, k_star())] {
        if (k - kk).abs() < SLICE_TOL {
            if let Ok(s) = rank1_special(fam) {
                out.push(SliceRank1 { family: fam, b: s.b, value: s.critical_value, kind: s.kind });
            }
        }
    }
    out
}

/// Critical values in the slice `K = k`; `n` samples per rank-2 piece.
///
/// Rank-1 crossings come from the resonant threads and are only reported for the
/// resonant parameter set.
pub fn slice(k: f64, params: &SystemParams, n: usize) -> Result<DiagramSlice> {
    if !k.is_finite() || k < -2.0 {
        return Err(Error::OutOfRange(format!("K >= -2 on the phase space, slice k = {k} is empty")));
    }
    let rank2 = rank2_slice(k, params, n)?;
    let rank1 = if params.is_stc() { rank1_crossings(k) } else { Vec::new() };
    let rank0 = rank0_classify(params)?
        .into_iter()
        .filter(|p| (p.critical_value.k - k).abs() < SLICE_TOL)
        .collect();
    Ok(DiagramSlice { k, rank2, rank1, rank0 })
}

/// Slices at the requested `k` values plus the rank-1 threads (resonant parameters only).
pub fn bifurcation_diagram(k_values: &[f64], params: &SystemParams, n: usize) -> Result<BifurcationDiagram> {
    let rank0 = rank0_classify(params)?;
    let threads = if params.is_stc() {
        Rank1Family::THREADS
            .iter()
            .map(|&family| {
                let samples = rank1_thread(family, n.max(2));
                let kind = samples.get(samples.len() / 2).map_or(Rank1Type::Degenerate, |s| s.kind);
                Thread { family, kind, values: samples.into_iter().map(|s| s.critical_value).collect() }
            })
            .collect()
    } else {
        Vec::new()
    };
    let slices = k_values.iter().map(|&k| slice(k, params, n)).collect::<Result<Vec<_>>>()?;
    Ok(BifurcationDiagram { params: *params, rank0, threads, slices })
}
