use std::f64::consts::PI;

use diracbands_core::bie::{BoundaryCondition, FourierTruncation};
use diracbands_core::spectral::{
    characteristic_sweep, dirac_window, golden_section, nullspace, refine_root, schur_characteristic,
    CharacteristicRoot, OperatorFamily, SchurFunction, SweepConfig,
};
use diracbands_core::{BlochVector, Error, LatticeSpec, Vec2};

use BoundaryCondition::{Dirichlet, Neumann};

fn lattice(eps: f64) -> LatticeSpec {
    LatticeSpec::new(1.0, eps).unwrap()
}

fn sweep_at_k(bc: BoundaryCondition, eps: f64, lo: f64, hi: f64) -> Vec<CharacteristicRoot> {
    let l = lattice(eps);
    let cfg = SweepConfig::default().with_window(lo, hi);
    characteristic_sweep(bc, &l, &l.kappa_star(), &cfg, &FourierTruncation::default()).unwrap()
}

fn classes(r: &CharacteristicRoot) -> Vec<Option<i64>> {
    let mut c: Vec<_> = r.nullspace.iter().map(|v| v.residue_class).collect();
    c.sort();
    c
}

/// Sign-change scan of the class-`j` Schur function, skipping pole crossings.
fn schur_roots(l: &LatticeSpec, j: i64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let f = SchurFunction::new(Dirichlet, l, j, &FourierTruncation::default()).unwrap();
    let grid: Vec<f64> = (0..=n).map(|i| l.denormalize(lo + (hi - lo) * i as f64 / n as f64)).collect();
    let vals: Vec<f64> = grid.iter().map(|&w| f.eval(w).unwrap()).collect();
    let mut out = Vec::new();
    for i in 0..n {
        if vals[i] * vals[i + 1] < 0.0 {
            let r = f.root((grid[i], grid[i + 1]), l.denormalize(1e-13)).unwrap();
            // A pole flips the sign with a huge value on one side; a root leaves f small.
            let a = f.family.at(r).unwrap();
            if f.eval(r).unwrap().abs() < 1e-8 * a.norm_max() {
                out.push(l.normalize(r));
            }
        }
    }
    out
}

#[test]
fn dirichlet_dirac_root_is_double() {
    let roots = sweep_at_k(Dirichlet, 0.05, 0.6, 0.72);
    assert_eq!(roots.len(), 1, "{roots:?}");
    let r = &roots[0];
    assert!((r.omega_normalized - 0.67559).abs() < 5e-4, "{}", r.omega_normalized);
    assert_eq!(r.multiplicity, 2);
    assert_eq!(classes(r), vec![Some(-1), Some(1)]);
    let l = lattice(0.05);
    let a = OperatorFamily::new(Dirichlet, &l, &l.kappa_star(), &FourierTruncation::default())
        .at(r.omega)
        .unwrap();
    assert!(r.residual < 1e-6 * a.norm2());
    for (i, u) in r.nullspace.iter().enumerate() {
        for (k, v) in r.nullspace.iter().enumerate() {
            let d = u.c.dotc(&v.c).norm();
            assert!((d - if i == k { 1.0 } else { 0.0 }).abs() < 1e-10);
        }
    }
}

#[test]
fn neumann_dirac_root_is_double_and_below_pole() {
    let roots = sweep_at_k(Neumann, 0.05, 0.6, 0.67);
    assert_eq!(roots.len(), 1, "{roots:?}");
    let r = &roots[0];
    assert_eq!(r.multiplicity, 2);
    assert!(r.omega_normalized < 2.0 / 3.0);
    assert_eq!(classes(r), vec![Some(-1), Some(1)]);
}

#[test]
fn class_zero_singlet_above_pole() {
    let roots = sweep_at_k(Dirichlet, 0.05, 0.72, 0.9);
    assert_eq!(roots.len(), 1, "{roots:?}");
    assert_eq!(roots[0].multiplicity, 1);
    assert_eq!(classes(&roots[0]), vec![Some(0)]);
    let w = roots[0].omega_normalized;
    // Leading order |K| − 3π/(|Y||K| ln ε); the remainder is O(1/ln²ε).
    let l = lattice(0.05);
    let k = l.kappa_star().norm();
    let lead = l.normalize(k - 3.0 * PI / (l.cell_area * k * 0.05f64.ln()));
    assert!((lead - 0.804695).abs() < 1e-5);
    assert!(w > lead && (w - lead) * 0.05f64.ln().powi(2) < 1.0);
}

#[test]
fn class_zero_remainder_scales_like_inverse_log_squared() {
    let mut scaled = Vec::new();
    for eps in [0.025, 0.00625] {
        let l = lattice(eps);
        let k = l.kappa_star().norm();
        let lead = l.normalize(k - 3.0 * PI / (l.cell_area * k * eps.ln()));
        let roots = schur_roots(&l, 0, 2.0 / 3.0 + 1e-4, 0.9, 60);
        assert_eq!(roots.len(), 1, "{roots:?}");
        scaled.push((roots[0] - lead) * eps.ln().powi(2));
    }
    // (ω − ω_lead)·ln²ε stays of order one and roughly constant while
    // ln²ε grows by a factor 1.9.
    assert!(scaled.iter().all(|&s| s > 0.3 && s < 1.0), "{scaled:?}");
    assert!((scaled[0] - scaled[1]).abs() < 0.15 * scaled[0], "{scaled:?}");
}

#[test]
fn schur_function_is_real() {
    let l = lattice(0.05);
    let (lo, hi) = dirac_window(&l);
    let tr = FourierTruncation::default();
    let f = SchurFunction::new(Dirichlet, &l, 1, &tr).unwrap();
    for i in 0..50 {
        let w = lo + (hi - lo) * (i as f64 + 0.5) / 50.0;
        let v = f.value(w).unwrap();
        let a = f.family.at(w).unwrap();
        assert!(v.im.abs() < 1e-10 * v.norm().max(1e-6 * a.norm_max()), "ω={w} f={v}");
    }
}

#[test]
fn schur_roots_agree_across_classes_and_with_sweep() {
    let l = lattice(0.05);
    let tr = FourierTruncation::default();
    let window = dirac_window(&l);
    let tol = l.denormalize(1e-13);
    let f1 = SchurFunction::new(Dirichlet, &l, 1, &tr).unwrap();
    let fm = SchurFunction::new(Dirichlet, &l, -1, &tr).unwrap();
    let r1 = f1.root(window, tol).unwrap();
    let rm = fm.root(window, tol).unwrap();
    assert!(l.normalize((r1 - rm).abs()) < 1e-10);
    let lo = f1.eval(window.0).unwrap();
    let hi = f1.eval(window.1).unwrap();
    assert!(lo * hi < 0.0);
    let sweep = sweep_at_k(Dirichlet, 0.05, 0.6, 0.72);
    assert!((sweep[0].omega_normalized - l.normalize(r1)).abs() < 1e-9);
    assert!(
        (schur_characteristic(Dirichlet, &l, 1, r1, &tr).unwrap()).abs()
            < 1e-8 * f1.family.at(r1).unwrap().norm_max()
    );
}

#[test]
fn schur_rejects_bad_class() {
    let l = lattice(0.05);
    assert!(matches!(
        SchurFunction::new(Dirichlet, &l, 2, &FourierTruncation::default()),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn nullspace_classes_and_modes() {
    let l = lattice(0.05);
    let tr = FourierTruncation::default();
    let fam = OperatorFamily::new(Dirichlet, &l, &l.kappa_star(), &tr);
    let root = &sweep_at_k(Dirichlet, 0.05, 0.6, 0.72)[0];
    let ns = nullspace(&fam.at(root.omega).unwrap(), 1e-6);
    assert_eq!(ns.len(), 2);
    for v in &ns {
        let j = v.residue_class.unwrap();
        assert!(v.class_fraction(j) > 1.0 - 1e-6);
        let frac = v.coeff(j).norm_sqr() / v.c.norm_squared();
        assert!(frac > 1.0 - 20.0 * 0.05f64.powi(2), "class {j}: {frac}");
    }
    let singlet = &sweep_at_k(Dirichlet, 0.05, 0.72, 0.9)[0];
    let ns = nullspace(&fam.at(singlet.omega).unwrap(), 1e-6);
    assert_eq!(ns.len(), 1);
    assert_eq!(ns[0].residue_class, Some(0));
    let generic = fam.at(l.denormalize(0.74)).unwrap();
    assert!(nullspace(&generic, 1e-6).is_empty());
}

#[test]
fn multiplicity_stable_under_truncation() {
    let l = lattice(0.05);
    let cfg = SweepConfig::default().with_window(0.6, 0.72);
    for n in [8, 12, 16] {
        let tr = FourierTruncation::with_modes(n, 64).unwrap();
        let roots = characteristic_sweep(Dirichlet, &l, &l.kappa_star(), &cfg, &tr).unwrap();
        assert_eq!(roots.len(), 1, "N = {n}");
        assert_eq!(roots[0].multiplicity, 2, "N = {n}");
    }
}

#[test]
fn dirac_root_inside_window_bounds() {
    let l = lattice(0.05);
    let w = l.denormalize(sweep_at_k(Dirichlet, 0.05, 0.6, 0.72)[0].omega_normalized);
    let k2 = l.kappa_star().norm().powi(2);
    let y = l.cell_area;
    let d = w * w - k2;
    assert!(d >= (2.0 * PI).powi(2) * 0.05f64.powi(2) / (2.0 * y));
    assert!(d <= 4.0 * PI / (y * 0.05f64.ln().abs()));
    let (lo, hi) = dirac_window(&l);
    assert!(lo < w && w < hi);
}

#[test]
fn singular_frequencies_are_not_roots() {
    let l = lattice(0.05);
    let tr = FourierTruncation::default();
    let cfg = SweepConfig::default();
    let excl = cfg.singular_exclusion;
    let generic = BlochVector::from(Vec2::new(1.3, 0.4));
    for (bc, kappa) in [(Dirichlet, l.kappa_star()), (Neumann, l.kappa_star()), (Dirichlet, generic)] {
        let fam = OperatorFamily::new(bc, &l, &kappa, &tr);
        let poles: Vec<f64> = l
            .singular_frequencies(&kappa, l.denormalize(1.5))
            .into_iter()
            .filter(|&w| w > 0.0)
            .collect();
        for p in poles {
            for s in [-1.0, 1.0] {
                let a = fam.at(p + s * l.denormalize(10.0 * excl)).unwrap();
                let sv = a.singular_values();
                // The pole inflates only the shell directions, so σ_min stays at
                // its off-pole size and far above the acceptance threshold.
                let ratio = sv[0] / sv[sv.len() - 1];
                assert!(ratio > 10.0 * cfg.sv_threshold, "{bc} at pole {p} side {s}: {ratio}");
            }
        }
    }
}

#[test]
fn sweep_off_k_finds_split_pair() {
    // Away from K the double root splits into two simple roots.
    let l = lattice(0.05);
    let k = l.kappa_star();
    let off = k.shifted(Vec2::new(0.01 * 2.0 * PI, 0.0));
    let cfg = SweepConfig::default().with_window(0.6, 0.72);
    let roots = characteristic_sweep(Dirichlet, &l, &off, &cfg, &FourierTruncation::default()).unwrap();
    assert_eq!(roots.len(), 2, "{roots:?}");
    assert!(roots.iter().all(|r| r.multiplicity == 1));
    assert!(roots[0].omega < roots[1].omega);
    let mid = 0.5 * (roots[0].omega_normalized + roots[1].omega_normalized);
    assert!((mid - 0.67554).abs() < 2e-3);
}

#[test]
fn sweep_empty_window() {
    let roots = sweep_at_k(Dirichlet, 0.05, 0.3, 0.5);
    assert!(roots.is_empty());
}

#[test]
fn sweep_config_validation() {
    let l = lattice(0.05);
    let tr = FourierTruncation::default();
    let bad = SweepConfig::default().with_window(0.5, 0.4);
    assert!(characteristic_sweep(Dirichlet, &l, &l.kappa_star(), &bad, &tr).is_err());
}

#[test]
fn refine_root_examples() {
    assert!((refine_root(|w| Ok(w - 1.0), (0.0, 2.0), 1e-14).unwrap() - 1.0).abs() < 1e-14);
    assert!((refine_root(|w| Ok(w * w * w - 2.0), (0.0, 3.0), 1e-14).unwrap() - 2f64.cbrt()).abs() < 1e-13);
    assert!(refine_root(|w| Ok(w * w + 1.0), (-1.0, 1.0), 1e-10).is_err());
    let mut widths = Vec::new();
    let _ = refine_root(
        |w| {
            widths.push(w);
            Ok((w - 0.3).signum() * (w - 0.3).abs().sqrt())
        },
        (0.0, 1.0),
        1e-12,
    )
    .unwrap();
    assert!(widths.len() < 200);
    let (x, fx) = golden_section(|w| Ok((w - 0.25).powi(2) + 1.0), (0.0, 1.0), 1e-10).unwrap();
    assert!((x - 0.25).abs() < 1e-6 && (fx - 1.0).abs() < 1e-12);
}

#[test]
fn neumann_acoustic_root_pressed_against_light_line() {
    // Near Γ the lowest Neumann band sits O(ε²)|κ| below the pole ω = |κ|.
    let kappa = BlochVector::new(0.1 * 2.0 * PI, 0.0);
    for (eps, lo, hi) in [(0.05, 0.99, 0.999), (0.02, 0.999, 0.99999)] {
        let l = lattice(eps);
        let cfg = SweepConfig::default().with_window(0.05, 0.2);
        let roots = characteristic_sweep(Neumann, &l, &kappa, &cfg, &FourierTruncation::default()).unwrap();
        assert_eq!(roots.len(), 1, "ε = {eps}: {roots:?}");
        let ratio = roots[0].omega_normalized / 0.1;
        assert!(ratio > lo && ratio < hi, "ε = {eps}: {ratio}");
    }
}
