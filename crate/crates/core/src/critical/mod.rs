//! Critical set of the integral map: fixed points, rank-1 threads and the
//! rank-2 boundary, plus their assembly into bifurcation-diagram slices.

mod diagram;
mod rank0;
mod rank1;
mod rank2;

pub use diagram::{bifurcation_diagram, slice, BifurcationDiagram, DiagramSlice, SliceRank1, Thread};
pub use rank0::{rank0_classify, rank0_linearization, Rank0Point, Rank0Type};
pub use rank1::{
    b_max, b_max_radical, central_value, char_poly4, k_star, rank1_classify, rank1_general, rank1_sample,
    rank1_special, rank1_thread, reduced_gradients, reduced_linearizations, Rank1Family, Rank1Sample, Rank1Type,
};
pub use rank2::{
    rank2_cubic, rank2_point, rank2_slice, rank2_values, rank2_x_admissible, slice_boundary, winding_number, Rank2Sample,
};

use num_complex::Complex64;

/// Coarse shape of a linearised Hamiltonian spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub(crate) struct SpectrumShape {
    pub elliptic: usize,
    pub hyperbolic: usize,
    pub focus_focus: usize,
}

/// Splits a spectrum into ±iβ pairs, ±α pairs and ±α±iβ quartets.
///
/// Returns `None` when an eigenvalue vanishes or two coincide, with
/// tolerance `1e-8·scale` (scale is a matrix norm).
pub(crate) fn spectrum_shape(ev: &[Complex64], scale: f64) -> Option<SpectrumShape> {
    let tol = 1e-8 * scale.max(f64::MIN_POSITIVE);
    if ev.iter().any(|z| !z.re.is_finite() || !z.im.is_finite() || z.norm() <= tol) {
        return None;
    }
    for i in 0..ev.len() {
        for j in i + 1..ev.len() {
            if (ev[i] - ev[j]).norm() <= tol {
                return None;
            }
        }
    }
    let mut s = SpectrumShape::default();
    let (mut im, mut re, mut cx) = (0, 0, 0);
    for z in ev {
        if z.re.abs() <= tol {
            im += 1;
        } else if z.im.abs() <= tol {
            re += 1;
        } else {
            cx += 1;
        }
    }
    if im % 2 != 0 || re % 2 != 0 || cx % 4 != 0 {
        return None;
    }
    s.elliptic = im / 2;
    s.hyperbolic = re / 2;
    s.focus_focus = cx / 4;
    Some(s)
}

pub(crate) fn frobenius<const N: usize>(m: &nalgebra::SMatrix<f64, N, N>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}
