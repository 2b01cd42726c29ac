//! Independent reference computations for the derived example values.
//!
//! Each oracle is written from scratch here, without calling into the crate,
//! and its result is frozen below. The frozen constants were cross-checked
//! against 30-digit adaptive quadrature before the library code existed.

use std::f64::consts::PI;

use thinfilm_core::{
    assemble_psi, basis_deriv, basis_value, chi, flux_f, flux_g, negative_part, GalerkinState,
    MollifierFamily, SpectralBasis, SystemParams,
};

/// `dF₁` for `n = 1`, `L = π`, `ε = 1`, `R = μ = 1`, `F = (0, 0.1)`, `G = 0`.
const FROZEN_DF1: f64 = -0.365_843_926_872_344_2;
/// `dG₁` for the same state.
const FROZEN_DG1: f64 = -0.715_477_205_038_855_7;
/// `χ_{0.2}(-0.1)`.
const FROZEN_CHI: f64 = 0.011_373_732_813_492_716;
/// Normalization of the unit-mass bump.
const FROZEN_BUMP_C: f64 = 142.250_375_777_095_87;

const GAUSS8_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GAUSS8_W: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn gauss8(a: f64, b: f64, cells: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / cells as f64;
    let mut total = 0.0;
    for c in 0..cells {
        let mid = a + (c as f64 + 0.5) * h;
        for (x, w) in GAUSS8_X.iter().zip(GAUSS8_W) {
            total += 0.5 * h * w * (f(mid - 0.5 * h * x) + f(mid + 0.5 * h * x));
        }
    }
    total
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 40)
}

fn raw_bump(x: f64) -> f64 {
    if x > -1.0 && x < 0.0 {
        (1.0 / (x * (x + 1.0))).exp()
    } else {
        0.0
    }
}

/// `χ₁` by nested adaptive Simpson, including the normalization.
struct NestedChi {
    c: f64,
}

impl NestedChi {
    fn new() -> Self {
        let mass = adaptive_simpson(&raw_bump, -1.0, 0.0, 1e-15);
        Self { c: 1.0 / mass }
    }

    fn tail(&self, s: f64) -> f64 {
        if s >= 0.0 {
            return 0.0;
        }
        let lo = s.max(-1.0);
        self.c * adaptive_simpson(&raw_bump, lo, 0.0, 1e-14)
    }

    fn chi1(&self, y: f64) -> f64 {
        if y >= 0.0 {
            return 0.0;
        }
        let inner = |s: f64| self.tail(s);
        if y >= -1.0 {
            adaptive_simpson(&inner, y, 0.0, 1e-13)
        } else {
            adaptive_simpson(&inner, -1.0, 0.0, 1e-13) + (-1.0 - y)
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Brute-force `(dF₁, dG₁)` from the flux formulas, doubled cell count and
/// 8-point Gauss per cell.
fn brute_force_single_mode(p1: f64, l: f64, eps: f64, r: f64, mu: f64) -> (f64, f64) {
    let c = (2.0 / l).sqrt();
    let kappa = PI / l;
    let a = |x: f64| eps + (p1 * c * (kappa * x).cos()).max(0.0);
    let b = eps;
    let u = |x: f64| p1 * c * kappa.powi(3) * (kappa * x).sin();
    let dphi = |x: f64| -c * kappa * (kappa * x).sin();
    let hf = |x: f64| {
        let (a, u) = (a(x), u(x));
        a.powi(3) * u + 0.5 * r * (2.0 * a.powi(3) + 3.0 * a * a * b) * u
    };
    let hg = |x: f64| {
        let (a, u) = (a(x), u(x));
        1.5 * a * a * b * u + 0.5 * r * (2.0 * mu * b.powi(3) + 3.0 * a * a * b + 6.0 * a * b * b) * u
    };
    let cells = 2 * 8 * 2;
    (
        gauss8(0.0, l, cells, |x| hf(x) * dphi(x)),
        gauss8(0.0, l, cells, |x| hg(x) * dphi(x)),
    )
}

#[test]
fn single_mode_oracle_matches_frozen_values() {
    let (df, dg) = brute_force_single_mode(0.1, PI, 1.0, 1.0, 1.0);
    assert!(rel(df, FROZEN_DF1) < 1e-10, "{df}");
    assert!(rel(dg, FROZEN_DG1) < 1e-10, "{dg}");
}

#[test]
fn single_mode_assembly_matches_oracle() {
    let basis = SpectralBasis::new(1, PI).unwrap();
    let params = SystemParams::new(1.0, 1.0, PI, 1.0).unwrap();
    let state = GalerkinState::new(vec![0.0, 0.1], vec![0.0, 0.0], 0.0).unwrap();
    let psi = assemble_psi(&state, &params, &basis).unwrap();
    assert_eq!(psi.df[0], 0.0);
    assert_eq!(psi.dg[0], 0.0);
    assert!(rel(psi.df[1], FROZEN_DF1) < 1e-8, "{}", psi.df[1]);
    assert!(rel(psi.dg[1], FROZEN_DG1) < 1e-8, "{}", psi.dg[1]);
}

#[test]
fn single_mode_fluxes_match_direct_formula() {
    let basis = SpectralBasis::new(1, PI).unwrap();
    let params = SystemParams::new(1.0, 1.0, PI, 1.0).unwrap();
    let state = GalerkinState::new(vec![0.0, 0.1], vec![0.0, 0.0], 0.0).unwrap();
    let hf = flux_f(&state, &params, &basis).unwrap();
    let hg = flux_g(&state, &params, &basis).unwrap();
    let c = (2.0 / PI).sqrt();
    for (i, &x) in basis.quadrature().nodes().iter().enumerate() {
        let a = 1.0 + (0.1 * c * x.cos()).max(0.0);
        let u = 0.1 * c * x.sin();
        let ef = a.powi(3) * u + 0.5 * (2.0 * a.powi(3) + 3.0 * a * a) * u;
        let eg = 1.5 * a * a * u + 0.5 * (2.0 + 3.0 * a * a + 6.0 * a) * u;
        assert!((hf[i] - ef).abs() < 1e-14, "node {i}");
        assert!((hg[i] - eg).abs() < 1e-14, "node {i}");
    }
}

#[test]
fn linearization_about_flat_states() {
    for &(l, eps, r, mu, a, b) in &[
        (1.0, 0.01, 1.0, 1.0, 0.5, 0.5),
        (PI, 0.1, 2.0, 0.5, 0.3, 0.8),
        (2.0, 1.0, 0.5, 3.0, 1.2, 0.1),
    ] {
        let basis = SpectralBasis::new(4, l).unwrap();
        let params = SystemParams::new(r, mu, l, eps).unwrap();
        let lambda1 = (PI / l).powi(2);
        let p1 = 1e-6;
        let mut f = vec![0.0; 5];
        let mut g = vec![0.0; 5];
        f[0] = a * l.sqrt();
        g[0] = b * l.sqrt();
        f[1] = p1;
        let state = GalerkinState::new(f, g, 0.0).unwrap();
        let psi = assemble_psi(&state, &params, &basis).unwrap();
        let (ea, eb) = (eps + a, eps + b);
        let expect_f = -lambda1 * lambda1 * ((1.0 + r) * ea.powi(3) + 1.5 * r * ea * ea * eb) * p1;
        let expect_g = -lambda1
            * lambda1
            * (1.5 * ea * ea * eb
                + 0.5 * r * (2.0 * mu * eb.powi(3) + 3.0 * ea * ea * eb + 6.0 * ea * eb * eb))
            * p1;
        assert!(rel(psi.df[1], expect_f) < 1e-3, "{} vs {expect_f}", psi.df[1]);
        assert!(rel(psi.dg[1], expect_g) < 1e-3, "{} vs {expect_g}", psi.dg[1]);
    }
}

#[test]
fn nested_quadrature_matches_frozen_values() {
    let oracle = NestedChi::new();
    assert!(rel(oracle.c, FROZEN_BUMP_C) < 1e-10, "{}", oracle.c);
    let v = 0.2 * oracle.chi1(-0.5);
    assert!(rel(v, FROZEN_CHI) < 1e-9, "{v}");
}

#[test]
fn mollifier_matches_frozen_oracle() {
    let v = chi(0.2, -0.1, 0).unwrap();
    assert!((v - FROZEN_CHI).abs() < 1e-8, "{v}");
    assert!(rel(MollifierFamily::canonical().normalization(), FROZEN_BUMP_C) < 1e-12);
}

#[test]
fn mollifier_table_against_nested_quadrature() {
    let oracle = NestedChi::new();
    let fam = MollifierFamily::canonical();
    for i in 0..=40 {
        let x = -1.5 + 2.0 * i as f64 / 40.0 + 0.0137;
        let exact = oracle.chi1(x);
        let got = fam.chi1(x, 0).unwrap();
        assert!((got - exact).abs() < 1e-8, "x = {x}: {got} vs {exact}");
        let exact_d1 = -oracle.tail(x);
        let got_d1 = fam.chi1(x, 1).unwrap();
        assert!((got_d1 - exact_d1).abs() < 1e-8, "x = {x}: {got_d1} vs {exact_d1}");
    }
}

#[test]
fn basis_derivative_example() {
    let l = 2.0 * PI;
    let v = basis_deriv(2, l / 4.0, l, 3).unwrap();
    assert!((v - 0.564_189_583_547_756_3).abs() < 1e-14, "{v}");
    assert!((v - (2.0 * PI / l).powi(3) * (2.0 / l).sqrt()).abs() < 1e-14);
}

#[test]
fn basis_derivatives_match_central_differences() {
    let h = 1e-5;
    for &l in &[1.0, PI, 4.0] {
        for k in 0..=12 {
            let amp = (2.0 / l).sqrt() * (k as f64 * PI / l).powi(3).max(1.0);
            for i in 1..20 {
                let x = l * i as f64 / 20.0;
                let fd1 = (basis_value(k, x + h, l).unwrap() - basis_value(k, x - h, l).unwrap())
                    / (2.0 * h);
                let d1 = basis_deriv(k, x, l, 1).unwrap();
                assert!((fd1 - d1).abs() <= 1e-6 * amp, "k={k} x={x}");
                for order in 2..=3u8 {
                    let lower = |y| basis_deriv(k, y, l, order - 1).unwrap();
                    let fd = (lower(x + h) - lower(x - h)) / (2.0 * h);
                    let d = basis_deriv(k, x, l, order).unwrap();
                    assert!((fd - d).abs() <= 1e-6 * amp, "k={k} x={x} order={order}");
                }
            }
        }
    }
}

#[test]
fn synthesize_second_derivative_example() {
    let basis = SpectralBasis::new(3, PI).unwrap();
    let vals = basis.synthesize(&[0.0, 1.0, 0.0, 0.0], 2).unwrap();
    for (v, x) in vals.iter().zip(basis.quadrature().nodes()) {
        assert!((v + (2.0 / PI).sqrt() * x.cos()).abs() < 1e-14);
    }
}

#[test]
fn projection_of_constant_and_aliasing() {
    let l = 3.0;
    let n = 8;
    let basis = SpectralBasis::new(n, l).unwrap();
    let ones = vec![1.0; basis.quadrature().len()];
    let c = basis.project(&ones).unwrap();
    assert!((c[0] - l.sqrt()).abs() < 1e-13);
    assert!(c[1..].iter().all(|v| v.abs() < 1e-13));

    // The mode just above the truncation at M and 2M cells.
    let doubled =
        SpectralBasis::with_quadrature(n, l, 2 * basis.quadrature().cells(), 4).unwrap();
    let above = |b: &SpectralBasis| {
        let s: Vec<f64> = b
            .quadrature()
            .nodes()
            .iter()
            .map(|&x| basis_value(n + 1, x, l).unwrap())
            .collect();
        b.project(&s).unwrap()
    };
    let (m1, m2) = (above(&basis), above(&doubled));
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(norm(&m1) < 1e-12, "{}", norm(&m1));
    assert!(norm(&m2) < 1e-12, "{}", norm(&m2));
}

#[test]
fn negative_part_against_dense_trapezoid() {
    let l = 1.0;
    let basis = SpectralBasis::new(4, l).unwrap();
    let (mean, amp, delta) = (0.05, 0.2, 0.1);
    let mut f = vec![0.0; 5];
    f[0] = mean * l.sqrt();
    f[1] = amp / (2.0 / l).sqrt();
    let mut g = vec![0.0; 5];
    g[0] = l.sqrt();
    let state = GalerkinState::new(f, g, 0.0).unwrap();
    let (chi_f, chi_g) = negative_part(&state, delta, MollifierFamily::canonical(), &basis).unwrap();
    assert_eq!(chi_g, 0.0);

    let samples = 100_000;
    let h = l / samples as f64;
    let value = |x: f64| chi(delta, mean + amp * (PI * x / l).cos(), 0).unwrap();
    let mut dense = 0.5 * (value(0.0) + value(l));
    for i in 1..samples {
        dense += value(i as f64 * h);
    }
    dense *= h;
    assert!(dense > 0.0);
    assert!((chi_f - dense).abs() < 1e-8 * dense.max(1e-3), "{chi_f} vs {dense}");
}
