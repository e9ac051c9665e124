use std::f64::consts::PI;

use diracbands_core::bie::{BoundaryCondition, FourierTruncation};
use diracbands_core::dirac::{
    asymptotic_dirac, asymptotic_eigenvalues, cone_fit, eigenfunction_check, locate_dirac_point,
    table1_compare, theory_slopes, AsymptoticCoefficients, BandGroup,
};
use diracbands_core::qpgreens::{ewald_green, resonant_sum, EwaldParams};
use diracbands_core::spectral::SweepConfig;
use diracbands_core::{LatticeSpec, Vec2};

use BoundaryCondition::{Dirichlet, Neumann};

fn lattice(eps: f64) -> LatticeSpec {
    LatticeSpec::new(1.0, eps).unwrap()
}

fn closed_form(eps: f64, bc: BoundaryCondition, group: BandGroup) -> f64 {
    let l = lattice(eps);
    l.normalize(asymptotic_dirac(&l, bc, group).unwrap())
}

#[test]
fn coefficients_at_unit_spacing() {
    let c = AsymptoticCoefficients::new(&lattice(0.05));
    assert!((c.alpha - 16.0 * PI.powi(3) / (3.0 * 3f64.sqrt())).abs() < 1e-12);
    assert!((c.alpha / 95.471 - 1.0).abs() < 1e-4);
    assert!((c.alpha / c.kappa_star_norm - 22.794).abs() < 2e-3);
    assert!((c.kappa_star_norm - 4.0 * PI / 3.0).abs() < 1e-12);
}

#[test]
fn closed_form_values() {
    assert!((closed_form(0.05, Dirichlet, BandGroup::First) - 0.67573).abs() < 1e-5);
    assert!((closed_form(0.025, Dirichlet, BandGroup::First) - 0.66893).abs() < 1e-5);
    assert!((closed_form(0.05, Neumann, BandGroup::First) - 0.65760).abs() < 1e-5);
    assert!((closed_form(0.05, Dirichlet, BandGroup::Second) - 1.35147).abs() < 1e-5);
    assert!((closed_form(0.05, Dirichlet, BandGroup::Third) - 1.81182).abs() < 1e-5);
    // Neumann sits as far below 2/3 as Dirichlet sits above it.
    let d = closed_form(0.05, Dirichlet, BandGroup::First) - 2.0 / 3.0;
    let n = 2.0 / 3.0 - closed_form(0.05, Neumann, BandGroup::First);
    assert!((d - n).abs() < 1e-15);
    let labels: Vec<String> = asymptotic_eigenvalues(&lattice(0.05), Dirichlet, BandGroup::First)
        .unwrap()
        .into_iter()
        .map(|p| p.0)
        .collect();
    assert_eq!(labels, ["omega1_star", "omega1_star_star"]);
}

#[test]
fn closed_form_limits_and_errors() {
    assert!((closed_form(1e-4, Dirichlet, BandGroup::First) - 2.0 / 3.0).abs() < 1e-6);
    assert!(asymptotic_eigenvalues(&lattice(0.3), Dirichlet, BandGroup::First).is_err());
    assert!(asymptotic_eigenvalues(&lattice(0.05), Neumann, BandGroup::Second).unwrap().is_empty());
    assert!(asymptotic_dirac(&lattice(0.05), Neumann, BandGroup::Third).is_err());
    assert!(BandGroup::from_pair((2, 3)).is_err());
    assert_eq!(BandGroup::from_pair((10, 11)).unwrap(), BandGroup::Third);
}

#[test]
fn theory_slope_values() {
    let l = lattice(0.05);
    let s = |g, w: f64| theory_slopes(&l, g, l.denormalize(w)).unwrap();
    assert!((s(BandGroup::First, 0.67559) - 1.0 / (3.0 * 0.67559)).abs() < 1e-12);
    assert!((s(BandGroup::First, 0.67559) / 0.49335 - 1.0).abs() < 2e-4);
    assert!((s(BandGroup::Second, 1.35147) / 0.98653 - 1.0).abs() < 2e-4);
    assert!((s(BandGroup::Third, 2.0 * 7f64.sqrt() / 3.0) / 0.54001 - 1.0).abs() < 2e-4);
    assert!(theory_slopes(&l, BandGroup::First, 0.0).is_err());
}

#[test]
fn table1_rows() {
    let rows = table1_compare(&lattice(0.05), &[0.025, 0.05, 0.1, 0.2], &FourierTruncation::default()).unwrap();
    let numeric = [0.66896, 0.67559, 0.70172, 0.81715];
    let asymptotic = [0.66893, 0.67573, 0.70294, 0.81177];
    let error = [3e-5, 1.4e-4, 1.2e-3, 5.4e-3];
    for (i, r) in rows.iter().enumerate() {
        assert!((r.numeric - numeric[i]).abs() < 5e-4, "{r:?}");
        assert!((r.asymptotic - asymptotic[i]).abs() < 5e-5, "{r:?}");
        assert!(r.error / error[i] < 2.0 && error[i] / r.error < 2.0, "{r:?}");
        assert!(r.numeric > 2.0 / 3.0);
    }
    for w in rows.windows(2) {
        assert!(w[1].error > w[0].error);
    }
    // O(ε³) remainder: halving ε shrinks the error by about 8.
    for i in 0..2 {
        let ratio = rows[i + 1].error / rows[i].error;
        assert!((6.0..=12.0).contains(&ratio), "ratio {ratio}");
    }
    assert!(table1_compare(&lattice(0.05), &[0.3], &FourierTruncation::default()).is_err());
}

#[test]
fn sign_asymmetry_between_boundary_conditions() {
    let tr = FourierTruncation::default();
    let cfg = SweepConfig::default();
    for eps in [0.025, 0.05, 0.1] {
        let l = lattice(eps);
        let d = locate_dirac_point(Dirichlet, &l, BandGroup::First, &tr, &cfg).unwrap();
        let n = locate_dirac_point(Neumann, &l, BandGroup::First, &tr, &cfg).unwrap();
        assert!(l.normalize(d.omega) > 2.0 / 3.0, "ε = {eps}");
        assert!(l.normalize(n.omega) < 2.0 / 3.0, "ε = {eps}");
        assert_eq!(d.root.multiplicity, 2);
        assert_eq!(n.root.multiplicity, 2);
        let mut cls: Vec<i64> = n.class_roots.iter().map(|c| c.0).collect();
        cls.sort();
        assert_eq!(cls, [-1, 1]);
    }
}

#[test]
fn neumann_dirac_value() {
    let l = lattice(0.05);
    let p = locate_dirac_point(Neumann, &l, BandGroup::First, &FourierTruncation::default(), &SweepConfig::default())
        .unwrap();
    assert!((l.normalize(p.omega) - 0.65760).abs() < 5e-4);
}

#[test]
fn eigenfunctions_are_dominated_by_first_modes() {
    let tr = FourierTruncation::default();
    for bc in [Dirichlet, Neumann] {
        let mut tails = Vec::new();
        for eps in [0.05, 0.025] {
            let l = lattice(eps);
            let p = locate_dirac_point(bc, &l, BandGroup::First, &tr, &SweepConfig::default()).unwrap();
            let rep = eigenfunction_check(bc, &l, &p.root, &tr).unwrap();
            assert_eq!(rep.dominant.len(), 2);
            for &(class, mode, frac) in &rep.dominant {
                assert_eq!(class, Some(mode));
                assert!(mode == 1 || mode == -1);
                assert!(frac > 0.98, "{bc}, ε = {eps}: {frac}");
            }
            assert!(rep.conjugation_residual < 1e-6, "{bc}: {}", rep.conjugation_residual);
            assert!((rep.conjugation_overlap - 1.0).abs() < 1e-6, "{bc}: {}", rep.conjugation_overlap);
            tails.push(1.0 - rep.dominant[0].2);
        }
        // The mass off the dominant mode is O(ε²).
        let ratio = tails[0] / tails[1];
        assert!((3.5..=4.5).contains(&ratio), "{bc}: {ratio}");
    }
}

#[test]
fn eigenfunction_check_needs_double_root() {
    let tr = FourierTruncation::default();
    let l = lattice(0.05);
    let mut p = locate_dirac_point(Dirichlet, &l, BandGroup::First, &tr, &SweepConfig::default()).unwrap();
    p.root.multiplicity = 1;
    assert!(eigenfunction_check(Dirichlet, &l, &p.root, &tr).is_err());
}

#[test]
fn first_cone_is_isotropic_and_linear() {
    let l = lattice(0.05);
    let rep = cone_fit(Dirichlet, &l, (1, 2), &FourierTruncation::default(), &[1e-3, 2e-3, 4e-3], 3).unwrap();
    assert_eq!(rep.multiplicity, 2);
    assert_eq!(rep.directions_tested, 3);
    let theory = 1.0 / (3.0 * 0.67559);
    assert!((rep.slope_fit_plus / theory - 1.0).abs() < 0.05, "{rep:?}");
    assert!((rep.slope_fit_minus / theory + 1.0).abs() < 0.05, "{rep:?}");
    assert!((rep.slope_fit_plus + rep.slope_fit_minus).abs() < 1e-3);
    assert!(rep.isotropy_spread <= 2.0 * rep.fit_residual.max(1e-12), "{rep:?}");
    assert!(rep.max_quadratic_ratio <= 0.1);
    assert!(rep.vertex_gap < 1e-10);
    assert!((rep.omega_star_asymptotic.unwrap() - 0.67573).abs() < 1e-5);
}

#[test]
fn second_cone_slope_is_half_the_closed_form() {
    // The fitted band-4/5 slope approaches (2/3)/ω₂*, half of the closed-form
    // (4/3)/ω₂*.
    let l = lattice(0.05);
    let rep = cone_fit(Dirichlet, &l, (4, 5), &FourierTruncation::default(), &[1e-3, 2e-3, 4e-3], 3).unwrap();
    assert_eq!(rep.multiplicity, 2);
    let w = rep.omega_star_numeric;
    assert!((rep.slope_fit_plus * w / (2.0 / 3.0) - 1.0).abs() < 0.02, "{rep:?}");
    assert!((rep.slope_theory / rep.slope_fit_plus - 2.0).abs() < 0.04, "{rep:?}");
}

#[test]
fn cone_fit_validation() {
    let l = lattice(0.05);
    let tr = FourierTruncation::default();
    assert!(cone_fit(Dirichlet, &l, (2, 3), &tr, &[1e-3, 2e-3], 6).is_err());
    assert!(cone_fit(Dirichlet, &l, (1, 2), &tr, &[1e-3, 2e-3], 2).is_err());
    assert!(cone_fit(Dirichlet, &l, (1, 2), &tr, &[1e-3], 6).is_err());
}

#[test]
fn beta1_is_the_real_regular_limit() {
    let l = lattice(0.05);
    let c = AsymptoticCoefficients::new(&l);
    let k = l.kappa_star();
    let shell = l.resonant_shell(&k, k.norm()).unwrap();
    let p = EwaldParams::for_lattice(&l);
    for w in [0.6, 0.68, 0.75].map(|x| l.denormalize(x)) {
        let b = c.beta1(w).unwrap();
        assert!(b.re.is_finite());
        // At real ω off the poles G is real at the origin, so β1 is real.
        assert!(b.im.abs() < 1e-10, "{b}");
        let x = Vec2::new(3e-6, 2e-6);
        let g = ewald_green(&l, &k, w, x, &p).unwrap().value;
        let limit = g - x.norm().ln() / (2.0 * PI) - resonant_sum(&l, &k, w, x, &shell).unwrap();
        assert!((limit - b).norm() < 1e-8, "{limit} vs {b}");
    }
}
