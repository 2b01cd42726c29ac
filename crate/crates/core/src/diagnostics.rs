//! Functionals of a state or a trajectory: energy, dissipation, masses,
//! mollified negative parts, positivity sets and weak-form residuals.

use std::f64::consts::PI;

use crate::basis::SpectralBasis;
use crate::error::{Error, Result};
use crate::integrator::TrajectoryRecord;
use crate::regularization::MollifierFamily;
use crate::rhs::{self, check_compatible, GalerkinState, NodalFields, SystemParams};

/// Floor for the relative chain-rule residual at equilibria.
pub const RESIDUAL_FLOOR: f64 = 1e-14;

fn eigenvalue(k: usize, length: f64) -> f64 {
    let kappa = k as f64 * PI / length;
    kappa * kappa
}

pub(crate) fn energy_raw(f: &[f64], g: &[f64], params: &SystemParams) -> f64 {
    let mut e = 0.0;
    for k in 1..f.len() {
        let s = f[k] + g[k];
        e += eigenvalue(k, params.length) * (f[k] * f[k] + params.r * s * s);
    }
    0.5 * e
}

/// `E(f, g) = ½∫|∂ₓf|² + R|∂ₓ(f+g)|²`, in closed form
/// `½ Σ_{k≥1} λ_k [F_k² + R(F_k + G_k)²]`.
pub fn energy(state: &GalerkinState, params: &SystemParams) -> f64 {
    energy_raw(&state.f, &state.g, params)
}

/// Gradient of the closed-form energy with respect to `(F, G)`.
pub fn energy_gradient(state: &GalerkinState, params: &SystemParams) -> (Vec<f64>, Vec<f64>) {
    let n = state.f.len();
    let mut df = vec![0.0; n];
    let mut dg = vec![0.0; n];
    for k in 1..n {
        let lambda = eigenvalue(k, params.length);
        let s = state.f[k] + state.g[k];
        df[k] = lambda * (state.f[k] + params.r * s);
        dg[k] = lambda * params.r * s;
    }
    (df, dg)
}

/// Energy computed by quadrature of the synthesized derivatives.
pub fn energy_quadrature(
    state: &GalerkinState,
    params: &SystemParams,
    basis: &SpectralBasis,
) -> Result<f64> {
    check_compatible(state, params, basis)?;
    let df = basis.synthesize(&state.f, 1)?;
    let dg = basis.synthesize(&state.g, 1)?;
    let density: Vec<f64> = df
        .iter()
        .zip(&dg)
        .map(|(a, b)| a * a + params.r * (a + b) * (a + b))
        .collect();
    Ok(0.5 * basis.quadrature().integrate(&density))
}

pub(crate) fn dissipation_raw(
    f: &[f64],
    g: &[f64],
    params: &SystemParams,
    basis: &SpectralBasis,
) -> Result<f64> {
    let fields = NodalFields::new(f, g, basis)?;
    let j = rhs::dissipation_fields(&fields, params);
    let q = basis.quadrature();
    let sq = |v: &[f64]| q.integrate(&v.iter().map(|x| x * x).collect::<Vec<_>>());
    let r2 = params.r * params.r;
    Ok(params.mu * r2 * sq(&j.j_g) + 0.75 * r2 * sq(&j.j_fg) + sq(&j.j_f))
}

/// `D_ε = μR²∫a³(g)|∂ₓ³(f+g)|² + (3R²/4)∫a(f)a²(g)|∂ₓ³(f+g)|²
///        + ∫a(f)|a(f)∂ₓ³f + (R/2)(2a(f)+3a(g))∂ₓ³(f+g)|²`.
pub fn dissipation(
    state: &GalerkinState,
    params: &SystemParams,
    basis: &SpectralBasis,
) -> Result<f64> {
    check_compatible(state, params, basis)?;
    dissipation_raw(&state.f, &state.g, params, basis)
}

/// `⟨∇E, Ψ⟩` and `D_ε`; along the Galerkin flow the first equals `-D_ε`.
pub fn chain_rule_terms(
    state: &GalerkinState,
    params: &SystemParams,
    basis: &SpectralBasis,
) -> Result<(f64, f64)> {
    let psi = rhs::assemble_psi(state, params, basis)?;
    let (ef, eg) = energy_gradient(state, params);
    let inner = ef.iter().zip(&psi.df).map(|(a, b)| a * b).sum::<f64>()
        + eg.iter().zip(&psi.dg).map(|(a, b)| a * b).sum::<f64>();
    Ok((inner, dissipation(state, params, basis)?))
}

/// `|⟨∇E, Ψ⟩ + D_ε| / max(D_ε, 1e-14)`.
pub fn chain_rule_residual(
    state: &GalerkinState,
    params: &SystemParams,
    basis: &SpectralBasis,
) -> Result<f64> {
    let (inner, d) = chain_rule_terms(state, params, basis)?;
    Ok((inner + d).abs() / d.max(RESIDUAL_FLOOR))
}

/// `(∫χ_δ(f) dx, ∫χ_δ(g) dx)` by quadrature of the nodal values.
pub fn negative_part(
    state: &GalerkinState,
    delta: f64,
    mollifier: &MollifierFamily,
    basis: &SpectralBasis,
) -> Result<(f64, f64)> {
    if state.f.len() != basis.dim() || state.g.len() != basis.dim() {
        return Err(Error::Usage(format!(
            "state has {} coefficients but the basis has {} modes",
            state.f.len(),
            basis.dim()
        )));
    }
    let q = basis.quadrature();
    let functional = |coeffs: &[f64]| -> Result<f64> {
        let nodal = basis.synthesize(coeffs, 0)?;
        let chi = nodal
            .iter()
            .map(|&v| mollifier.chi(delta, v, 0))
            .collect::<Result<Vec<_>>>()?;
        Ok(q.integrate(&chi))
    };
    Ok((functional(&state.f)?, functional(&state.g)?))
}

/// Masks of the points of `xs` where `f` (resp. `g`) exceeds `threshold`.
pub fn positivity_sets(
    state: &GalerkinState,
    threshold: f64,
    xs: &[f64],
    basis: &SpectralBasis,
) -> Result<(Vec<bool>, Vec<bool>)> {
    if !(threshold >= 0.0) {
        return Err(Error::Parameter {
            name: "threshold",
            value: threshold,
            reason: "positivity threshold must be non-negative",
        });
    }
    let f = basis.evaluate(&state.f, xs, 0)?;
    let g = basis.evaluate(&state.g, xs, 0)?;
    Ok((
        f.iter().map(|v| *v > threshold).collect(),
        g.iter().map(|v| *v > threshold).collect(),
    ))
}

/// One row of the diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub mass_f: f64,
    pub mass_g: f64,
    pub energy: f64,
    pub dissipation: f64,
    pub min_f: f64,
    pub min_g: f64,
    pub chi_f: f64,
    pub chi_g: f64,
    pub de_dt_residual: f64,
}

impl DiagnosticsRow {
    pub const CSV_HEADER: &'static str =
        "t,mass_f,mass_g,energy,dissipation,min_f,min_g,chi_f,chi_g,dE_dt_residual";

    pub fn values(&self) -> [f64; 10] {
        [
            self.t,
            self.mass_f,
            self.mass_g,
            self.energy,
            self.dissipation,
            self.min_f,
            self.min_g,
            self.chi_f,
            self.chi_g,
            self.de_dt_residual,
        ]
    }
}

/// All per-state diagnostics, with the mollifier scale `δ = √ε`.
pub fn diagnostics_row(
    state: &GalerkinState,
    params: &SystemParams,
    basis: &SpectralBasis,
    mollifier: &MollifierFamily,
) -> Result<DiagnosticsRow> {
    check_compatible(state, params, basis)?;
    let root_l = params.length.sqrt();
    let nodal_min = |c: &[f64]| -> Result<f64> {
        Ok(basis
            .synthesize(c, 0)?
            .into_iter()
            .fold(f64::INFINITY, f64::min))
    };
    let (inner, d) = chain_rule_terms(state, params, basis)?;
    let (chi_f, chi_g) = negative_part(state, params.eps.sqrt(), mollifier, basis)?;
    Ok(DiagnosticsRow {
        t: state.t,
        mass_f: root_l * state.f[0],
        mass_g: root_l * state.g[0],
        energy: energy(state, params),
        dissipation: d,
        min_f: nodal_min(&state.f)?,
        min_g: nodal_min(&state.g)?,
        chi_f,
        chi_g,
        de_dt_residual: (inner + d).abs() / d.max(RESIDUAL_FLOOR),
    })
}

/// `∫ y dt` over a non-uniform grid by composite Simpson on interval
/// pairs; an odd trailing interval uses the quadratic through the last
/// three samples. Two samples fall back to the trapezoid rule.
pub fn simpson(ts: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(ts.len(), ys.len(), "time and value samples must align");
    let n = ts.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * (ts[1] - ts[0]) * (ys[0] + ys[1]);
    }
    let intervals = n - 1;
    let pairs = intervals / 2;
    let mut total = 0.0;
    for p in 0..pairs {
        let i = 2 * p;
        let h0 = ts[i + 1] - ts[i];
        let h1 = ts[i + 2] - ts[i + 1];
        if h0 == 0.0 || h1 == 0.0 {
            total += 0.5 * h0 * (ys[i] + ys[i + 1]) + 0.5 * h1 * (ys[i + 1] + ys[i + 2]);
            continue;
        }
        let hs = h0 + h1;
        total += hs / 6.0
            * ((2.0 - h1 / h0) * ys[i] + hs * hs / (h0 * h1) * ys[i + 1] + (2.0 - h0 / h1) * ys[i + 2]);
    }
    if intervals % 2 == 1 {
        let i = n - 3;
        let h0 = ts[i + 1] - ts[i];
        let h1 = ts[i + 2] - ts[i + 1];
        if h0 == 0.0 {
            total += 0.5 * h1 * (ys[i + 1] + ys[i + 2]);
        } else {
            let hs = h0 + h1;
            let alpha = (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * hs);
            let beta = (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0);
            let eta = h1 * h1 * h1 / (6.0 * h0 * hs);
            total += alpha * ys[i + 2] + beta * ys[i + 1] - eta * ys[i];
        }
    }
    total
}

/// `∫ y dt` by the trapezoid rule.
pub fn trapezoid(ts: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(ts.len(), ys.len(), "time and value samples must align");
    ts.windows(2)
        .zip(ys.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
        .sum()
}

/// `E(T) + ∫₀ᵀ D dt - E(0)` from the per-step samples, integrated with
/// Simpson's rule.
pub fn energy_balance(trajectory: &TrajectoryRecord) -> f64 {
    let ts: Vec<f64> = trajectory.steps.iter().map(|s| s.t).collect();
    let ds: Vec<f64> = trajectory.steps.iter().map(|s| s.dissipation).collect();
    let first = trajectory.steps.first().map_or(0.0, |s| s.energy);
    let last = trajectory.steps.last().map_or(0.0, |s| s.energy);
    last + simpson(&ts, &ds) - first
}

/// Weak-form residuals for the test function `φ_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakResidual {
    pub f: f64,
    pub g: f64,
}

impl WeakResidual {
    pub fn max(&self) -> f64 {
        self.f.abs().max(self.g.abs())
    }
}

/// `|(F_j(T) - F_j(0)) - ∫₀ᵀ ∫ H_f φ_j' dx dt|` and the analogue for `g`,
/// with the time integral taken by Simpson's rule over the snapshots.
pub fn weak_residual(
    trajectory: &TrajectoryRecord,
    j: usize,
    params: &SystemParams,
    basis: &SpectralBasis,
) -> Result<WeakResidual> {
    if trajectory.snapshots.len() < 2 {
        return Err(Error::Usage(
            "weak residual needs at least two snapshots".into(),
        ));
    }
    if j > basis.modes() {
        return Err(Error::Usage(format!(
            "test mode {j} exceeds the highest basis mode {}",
            basis.modes()
        )));
    }
    let mut ts = Vec::with_capacity(trajectory.snapshots.len());
    let mut pf = Vec::with_capacity(ts.capacity());
    let mut pg = Vec::with_capacity(ts.capacity());
    for i in 0..trajectory.snapshots.len() {
        let state = trajectory.state(i);
        let (hf, hg) = if j == 0 {
            (0.0, 0.0)
        } else {
            let mf = basis.derivative_moments(&rhs::flux_f(&state, params, basis)?)?;
            let mg = basis.derivative_moments(&rhs::flux_g(&state, params, basis)?)?;
            (mf[j], mg[j])
        };
        ts.push(state.t);
        pf.push(hf);
        pg.push(hg);
    }
    let first = trajectory.state(0);
    let last = trajectory.final_state();
    Ok(WeakResidual {
        f: ((last.f[j] - first.f[j]) - simpson(&ts, &pf)).abs(),
        g: ((last.g[j] - first.g[j]) - simpson(&ts, &pg)).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn energy_examples() {
        let params = SystemParams::new(1.0, 1.0, PI, 0.1).unwrap();
        assert_eq!(energy(&GalerkinState::flat(4, 2.0, 3.0), &params), 0.0);
        let mut s = GalerkinState::flat(4, 0.0, 0.0);
        s.f[1] = 1.0;
        assert_relative_eq!(energy(&s, &params), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn energy_closed_form_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let basis = SpectralBasis::new(12, 1.7).unwrap();
        let params = SystemParams::new(0.9, 1.0, 1.7, 0.1).unwrap();
        for _ in 0..10 {
            let mut s = GalerkinState::flat(12, 1.0, 1.0);
            for k in 1..=12 {
                s.f[k] = rng.random_range(-1.0..1.0);
                s.g[k] = rng.random_range(-1.0..1.0);
            }
            let a = energy(&s, &params);
            let b = energy_quadrature(&s, &params, &basis).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn simpson_is_exact_for_cubics_on_pairs() {
        let ts = [0.0, 0.1, 0.35, 0.4, 0.9];
        let ys: Vec<f64> = ts.iter().map(|t| 1.0 + 2.0 * t - t * t).collect();
        let exact = 0.9 + 0.81 - 0.729 / 3.0;
        assert_relative_eq!(simpson(&ts, &ys), exact, max_relative = 1e-14);
        // Odd interval count exercises the quadratic tail.
        let ts = [0.0, 0.2, 0.3, 0.7];
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * t * t - t).collect();
        assert_relative_eq!(simpson(&ts, &ys), 0.343 - 0.245, max_relative = 1e-13);
    }

    #[test]
    fn trapezoid_linear() {
        assert_relative_eq!(trapezoid(&[0.0, 1.0, 3.0], &[0.0, 1.0, 3.0]), 4.5);
    }

    #[test]
    fn positivity_sets_examples() {
        let basis = SpectralBasis::new(3, 1.0).unwrap();
        let xs = crate::basis::uniform_grid(1.0, 16);
        let (pf, pg) = positivity_sets(&GalerkinState::flat(3, 1.0, 0.0), 0.0, &xs, &basis).unwrap();
        assert!(pf.iter().all(|b| *b));
        assert!(pg.iter().all(|b| !*b));
        assert!(positivity_sets(&GalerkinState::flat(3, 1.0, 0.0), -1.0, &xs, &basis).is_err());
    }

    #[test]
    fn negative_part_vanishes_for_positive_profiles() {
        let basis = SpectralBasis::new(3, 1.0).unwrap();
        let m = MollifierFamily::canonical();
        let (a, b) = negative_part(&GalerkinState::flat(3, 1.0, 0.5), 0.1, m, &basis).unwrap();
        assert_eq!((a, b), (0.0, 0.0));
    }
}
