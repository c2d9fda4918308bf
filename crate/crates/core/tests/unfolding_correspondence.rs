use monodromy_lab::critical::{central_value, rank1_sample, Rank1Family};
use monodromy_lab::unfolding::{
    discriminant, psi_center, psi_inverse, psi_map, singular_fiber_probe, FiberType, Lambda, UnfoldingValue,
};
use monodromy_lab::IntegralValue;

/// Relative gap between `ψ(ℓ(b))` and the matching discriminant thread at the same κ.
fn relative_gap(fam: Rank1Family, lam: Lambda, offset: f64) -> f64 {
    let c = 2f64.powf(2.0 / 3.0);
    let (lo, _) = Rank1Family::interval(fam);
    let b = if (lo - c).abs() < 1e-12 { c + offset } else { c - offset };
    let v = rank1_sample(fam, b).unwrap().critical_value;
    let u = UnfoldingValue::from_psi(psi_map(&v));
    let target = discriminant(u.kappa).into_iter().find(|(l, _)| *l == lam);
    let (_, eps) = target.unwrap_or_else(|| panic!("{} lands on the wrong side of kappa = 0", fam.name()));
    (u.epsilon - eps).norm() / u.epsilon.norm()
}

#[test]
fn threads_map_onto_the_discriminant() {
    let pairs = [
        (Rank1Family::L1, Lambda::L1),
        (Rank1Family::L2, Lambda::L2),
        (Rank1Family::L3, Lambda::L3),
        (Rank1Family::L4, Lambda::L4),
    ];
    for (fam, lam) in pairs {
        let gaps: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&o| relative_gap(fam, lam, o)).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{}: {gaps:?}", fam.name());
        // ℓ3 and ℓ4 leave c* like √(b - 2^(2/3)), so their gap shrinks more slowly.
        assert!(gaps[2] < 5e-2, "{}: {gaps:?}", fam.name());
    }
}

#[test]
fn central_value_is_the_origin() {
    let w = psi_center();
    assert!(w.iter().all(|x| x.abs() < 1e-12), "{w:?}");
    assert_eq!(singular_fiber_probe(&central_value(), 1e-6).kind, FiberType::Central);
}

#[test]
fn probe_separates_regular_and_pinched_fibres() {
    let c = central_value();
    let off = IntegralValue::new(c.h1 + 1e-3, c.h2, c.k);
    assert_eq!(singular_fiber_probe(&off, 1e-6).kind, FiberType::Regular);
    for kappa in [0.3, -0.3] {
        for (_, eps) in discriminant(kappa) {
            let on = psi_inverse([eps.re, eps.im, kappa]);
            assert_eq!(singular_fiber_probe(&on, 1e-6).kind, FiberType::Pinched, "kappa {kappa}");
        }
    }
}
