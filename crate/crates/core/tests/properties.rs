use proptest::prelude::*;

use thinfilm_core::diagnostics::{chain_rule_terms, energy_quadrature};
use thinfilm_core::rhs::{dissipation_fluxes, flux_g_factored};
use thinfilm_core::{
    a_eps, assemble_psi, chi, dissipation, energy, flux_g, positivity_sets, uniform_grid,
    GalerkinState, MollifierFamily, SpectralBasis, SystemParams,
};

/// Coefficients with a mixed-sign spectrum decaying like `1/k²`.
fn coeffs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    (-0.5f64..1.5, prop::collection::vec(-1.0f64..1.0, n)).prop_map(|(c0, rest)| {
        std::iter::once(c0)
            .chain(
                rest.into_iter()
                    .enumerate()
                    .map(|(i, v)| 0.3 * v / ((i + 1) * (i + 1)) as f64),
            )
            .collect()
    })
}

fn state(n: usize) -> impl Strategy<Value = GalerkinState> {
    (coeffs(n), coeffs(n)).prop_map(|(f, g)| GalerkinState::new(f, g, 0.0).unwrap())
}

/// Strictly positive profiles: a large mean with a small oscillation.
fn positive_state(n: usize, length: f64) -> impl Strategy<Value = GalerkinState> {
    (coeffs(n), coeffs(n)).prop_map(move |(mut f, mut g)| {
        f[0] = 0.8 * length.sqrt();
        g[0] = 0.6 * length.sqrt();
        for v in f.iter_mut().chain(g.iter_mut()).skip(1) {
            *v *= 0.2;
        }
        g[1..].iter_mut().for_each(|v| *v *= 0.2);
        GalerkinState::new(f, g, 0.0).unwrap()
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn orthonormality_at_32_modes() {
    let basis = SpectralBasis::new(32, 1.7).unwrap();
    let q = basis.quadrature();
    assert_eq!(q.cells(), 8 * 33);
    let phi = |k: usize| {
        let mut e = vec![0.0; 33];
        e[k] = 1.0;
        basis.synthesize(&e, 0).unwrap()
    };
    let tables: Vec<Vec<f64>> = (0..=32).map(phi).collect();
    let mut defect = 0.0f64;
    for j in 0..=32 {
        for k in 0..=32 {
            let prod: Vec<f64> = tables[j].iter().zip(&tables[k]).map(|(a, b)| a * b).collect();
            let target = if j == k { 1.0 } else { 0.0 };
            defect = defect.max((q.integrate(&prod) - target).abs());
        }
    }
    assert!(defect <= 1e-12, "{defect}");
}

#[test]
fn mollifier_bounds_sampled() {
    let fam = MollifierFamily::canonical();
    let (sb, sbd) = (fam.sup_bump(), fam.sup_bump_deriv());
    for &delta in &[1.0, 0.1, 0.01] {
        let samples = 10_000;
        let mut prev = f64::INFINITY;
        for i in 0..samples {
            let x = -3.0 * delta + 4.0 * delta * i as f64 / (samples - 1) as f64;
            let v = fam.chi(delta, x, 0).unwrap();
            assert!((v - (-x).max(0.0)).abs() <= delta, "distance to the negative part at δ={delta}, x={x}");
            assert!(fam.chi(delta, x, 1).unwrap().abs() <= 1.0);
            assert!(fam.chi(delta, x, 2).unwrap().abs() <= sb / delta + 1e-9);
            assert!(fam.chi(delta, x, 3).unwrap().abs() <= sbd / (delta * delta) + 1e-6);
            assert!(v >= 0.0);
            if x <= 0.0 {
                assert!(v <= prev, "χ must be non-increasing");
            } else {
                assert_eq!(v, 0.0);
            }
            prev = v;
        }
    }
}

#[test]
fn bump_has_unit_mass() {
    let fam = MollifierFamily::canonical();
    let m = 20_000;
    let h = 1.0 / m as f64;
    let mass: f64 = (0..m).map(|i| fam.bump(-1.0 + (i as f64 + 0.5) * h) * h).sum();
    assert!((mass - 1.0).abs() < 1e-10, "{mass}");
    assert_eq!(fam.bump(0.3), 0.0);
    assert_eq!(fam.bump(-1.2), 0.0);
}

#[test]
fn dissipation_vanishes_only_on_flat_states() {
    let basis = SpectralBasis::new(6, 1.0).unwrap();
    let params = SystemParams::new(1.0, 1.0, 1.0, 0.05).unwrap();
    let flat = GalerkinState::flat(6, 0.3, -0.2);
    assert_eq!(dissipation(&flat, &params, &basis).unwrap(), 0.0);
    let mut bumped = flat.clone();
    bumped.g[6] = 1e-5;
    assert!(dissipation(&bumped, &params, &basis).unwrap() > 1e-12);
}

#[test]
fn positivity_masks_nest() {
    let basis = SpectralBasis::new(5, 2.0).unwrap();
    let xs = uniform_grid(2.0, 256);
    let mut f = vec![0.0; 6];
    f[0] = 0.1 * 2f64.sqrt();
    f[2] = 0.15;
    let state = GalerkinState::new(f.clone(), f, 0.0).unwrap();
    for m in 1..20 {
        let (coarse, _) = positivity_sets(&state, 1.0 / m as f64, &xs, &basis).unwrap();
        let (fine, _) = positivity_sets(&state, 0.5 / m as f64, &xs, &basis).unwrap();
        assert!(coarse.iter().zip(&fine).all(|(c, f)| !c || *f));
    }
    let pos = GalerkinState::flat(5, 1.0, 1.0);
    assert!(positivity_sets(&pos, 0.0, &xs, &basis).unwrap().0.iter().all(|&b| b));
    let zero = GalerkinState::flat(5, 0.0, 0.0);
    assert!(positivity_sets(&zero, 0.0, &xs, &basis).unwrap().1.iter().all(|&b| !b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn project_inverts_synthesize(c in coeffs(12), l in 0.5f64..4.0) {
        let basis = SpectralBasis::new(12, l).unwrap();
        let back = basis.project(&basis.synthesize(&c, 0).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&c) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn regularizer_is_bounded_below_and_lipschitz(
        eps in 1e-6f64..=1.0, s in -10.0f64..10.0, t in -10.0f64..10.0
    ) {
        let (a, b) = (a_eps(eps, s).unwrap(), a_eps(eps, t).unwrap());
        prop_assert!(a >= eps && b >= eps);
        prop_assert!((a - b).abs() <= (s - t).abs() + 1e-15);
    }

    #[test]
    fn mollifier_scaling(delta in 1e-3f64..2.0, x in -3.0f64..1.0) {
        let fam = MollifierFamily::canonical();
        let scaled = delta * fam.chi1(x / delta, 0).unwrap();
        prop_assert!((chi(delta, x, 0).unwrap() - scaled).abs() <= 1e-12);
    }

    #[test]
    fn chain_rule_identity(s in state(16)) {
        let basis = SpectralBasis::new(16, 1.0).unwrap();
        let params = SystemParams::new(1.0, 1.0, 1.0, 0.1).unwrap();
        let (inner, d) = chain_rule_terms(&s, &params, &basis).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!((inner + d).abs() <= 1e-8 * d.max(1.0), "{} vs {}", inner, d);
    }

    #[test]
    fn dissipation_is_the_sum_of_squared_fluxes(s in state(10), mu in 0.2f64..5.0, r in 0.2f64..5.0) {
        let basis = SpectralBasis::new(10, 1.3).unwrap();
        let params = SystemParams::new(r, mu, 1.3, 0.2).unwrap();
        let j = dissipation_fluxes(&s, &params, &basis).unwrap();
        let q = basis.quadrature();
        let sq = |v: &[f64]| q.integrate(&v.iter().map(|x| x * x).collect::<Vec<_>>());
        let direct = mu * r * r * sq(&j.j_g) + 0.75 * r * r * sq(&j.j_fg) + sq(&j.j_f);
        let d = dissipation(&s, &params, &basis).unwrap();
        prop_assert!((direct - d).abs() <= 1e-12 * d.max(1.0));
    }

    #[test]
    fn factored_flux_agrees(s in state(10)) {
        let basis = SpectralBasis::new(10, 1.0).unwrap();
        let params = SystemParams::new(1.5, 0.7, 1.0, 0.05).unwrap();
        let plain = flux_g(&s, &params, &basis).unwrap();
        let factored = flux_g_factored(&s, &params, &basis).unwrap();
        let scale = max_abs(&plain).max(1.0);
        for (a, b) in plain.iter().zip(&factored) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn energy_closed_form_matches_quadrature(s in state(12), r in 0.2f64..5.0) {
        let basis = SpectralBasis::new(12, 2.0).unwrap();
        let params = SystemParams::new(r, 1.0, 2.0, 0.1).unwrap();
        let e = energy(&s, &params);
        let eq = energy_quadrature(&s, &params, &basis).unwrap();
        prop_assert!(e >= 0.0);
        prop_assert!((e - eq).abs() <= 1e-12 * e.max(1.0));
    }

    #[test]
    fn reflection_commutes_with_the_vector_field(s in state(9)) {
        let basis = SpectralBasis::new(9, 1.0).unwrap();
        let params = SystemParams::new(1.0, 2.0, 1.0, 0.1).unwrap();
        let direct = assemble_psi(&s.reflected(), &params, &basis).unwrap();
        let psi = assemble_psi(&s, &params, &basis).unwrap();
        let scale = max_abs(&psi.df).max(max_abs(&psi.dg)).max(1.0);
        for k in 0..10 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!((direct.df[k] - sign * psi.df[k]).abs() <= 1e-12 * scale);
            prop_assert!((direct.dg[k] - sign * psi.dg[k]).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn quadrature_refinement_is_converged(s in positive_state(8, 1.0)) {
        let params = SystemParams::new(1.0, 1.0, 1.0, 0.01).unwrap();
        let coarse = SpectralBasis::new(8, 1.0).unwrap();
        let fine = SpectralBasis::with_quadrature(8, 1.0, 2 * coarse.quadrature().cells(), 4).unwrap();
        let a = assemble_psi(&s, &params, &coarse).unwrap();
        let b = assemble_psi(&s, &params, &fine).unwrap();
        let scale = max_abs(&a.df).max(max_abs(&a.dg));
        for k in 0..9 {
            prop_assert!((a.df[k] - b.df[k]).abs() <= 1e-8 * scale);
            prop_assert!((a.dg[k] - b.dg[k]).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn vector_field_converges_as_eps_vanishes(s in positive_state(8, 1.0)) {
        let basis = SpectralBasis::new(8, 1.0).unwrap();
        let at = |eps| assemble_psi(&s, &SystemParams::new(1.0, 1.0, 1.0, eps).unwrap(), &basis).unwrap();
        let (a, b) = (at(1e-4), at(1e-6));
        let scale = max_abs(&b.df).max(max_abs(&b.dg));
        for k in 0..9 {
            prop_assert!((a.df[k] - b.df[k]).abs() <= 1e-3 * scale);
            prop_assert!((a.dg[k] - b.dg[k]).abs() <= 1e-3 * scale);
        }
    }

    #[test]
    fn flat_states_are_equilibria(c0 in -2.0f64..2.0, d0 in -2.0f64..2.0, eps in 1e-4f64..=1.0) {
        let basis = SpectralBasis::new(7, 1.0).unwrap();
        let params = SystemParams::new(1.0, 1.0, 1.0, eps).unwrap();
        let psi = assemble_psi(&GalerkinState::flat(7, c0, d0), &params, &basis).unwrap();
        prop_assert!(psi.df.iter().chain(&psi.dg).all(|&v| v == 0.0));
    }
}
