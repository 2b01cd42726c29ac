//! Galerkin vector field of the regularized two-phase thin-film system.
//!
//! With `f = Σ F_k φ_k`, `g = Σ G_k φ_k`, `a = a_ε(f)`, `b = a_ε(g)`,
//! `u = ∂ₓ³f` and `s = ∂ₓ³(f+g)`, the fluxes are
//!
//! ```text
//! H_f = a³ u + (R/2)(2a³ + 3a²b) s
//! H_g = (3/2) a²b u + (R/2)(2μb³ + 3a²b + 6ab²) s
//! ```
//!
//! and the coefficients evolve by `F_j' = ∫ H_f φ_j'`, `G_j' = ∫ H_g φ_j'`
//! for `j ≥ 1`. The zeroth coefficients are held fixed, which is mass
//! conservation. The fluxes are formed once per quadrature node and then
//! paired with every `φ_j'`, so assembly costs `O(M n)`.

use nalgebra::DMatrix;

use crate::basis::SpectralBasis;
use crate::error::{check_finite, Error, Result};
use crate::regularization::Regularizer;

/// Physical constants and the regularization parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Surface-tension ratio `γ_g / γ_f`.
    pub r: f64,
    /// Viscosity ratio `μ_f / μ_g`.
    pub mu: f64,
    /// Interval length `L`.
    pub length: f64,
    /// Regularization parameter `ε ∈ (0, 1]`.
    pub eps: f64,
}

impl SystemParams {
    pub fn new(r: f64, mu: f64, length: f64, eps: f64) -> Result<Self> {
        let params = Self { r, mu, length, eps };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter {
                    name,
                    value,
                    reason: "must be positive and finite",
                })
            }
        };
        positive("R", self.r)?;
        positive("mu", self.mu)?;
        positive("L", self.length)?;
        Regularizer::new(self.eps)?;
        Ok(())
    }

    pub fn regularizer(&self) -> Regularizer {
        Regularizer::new(self.eps).expect("validated eps")
    }
}

/// Coefficients of `f_εⁿ` and `g_εⁿ` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinState {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub t: f64,
}

impl GalerkinState {
    pub fn new(f: Vec<f64>, g: Vec<f64>, t: f64) -> Result<Self> {
        if f.len() != g.len() || f.is_empty() {
            return Err(Error::Usage(format!(
                "coefficient vectors must be non-empty and of equal length, got {} and {}",
                f.len(),
                g.len()
            )));
        }
        Ok(Self { f, g, t })
    }

    /// Flat layers with the given zeroth coefficients.
    pub fn flat(n: usize, f0: f64, g0: f64) -> Self {
        let mut f = vec![0.0; n + 1];
        let mut g = vec![0.0; n + 1];
        f[0] = f0;
        g[0] = g0;
        Self { f, g, t: 0.0 }
    }

    /// Highest mode index `n`.
    pub fn modes(&self) -> usize {
        self.f.len() - 1
    }

    /// Stacked vector `[F₀..F_n, G₀..G_n]`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(2 * self.f.len());
        y.extend_from_slice(&self.f);
        y.extend_from_slice(&self.g);
        y
    }

    pub fn from_vector(y: &[f64], t: f64) -> Result<Self> {
        if !y.len().is_multiple_of(2) || y.is_empty() {
            return Err(Error::Usage(format!(
                "stacked state must have even non-zero length, got {}",
                y.len()
            )));
        }
        let (f, g) = y.split_at(y.len() / 2);
        Ok(Self {
            f: f.to_vec(),
            g: g.to_vec(),
            t,
        })
    }

    /// Mirror image under `x ↦ L - x`: `F_k ↦ (-1)^k F_k`.
    pub fn reflected(&self) -> Self {
        let flip = |c: &[f64]| {
            c.iter()
                .enumerate()
                .map(|(k, v)| if k % 2 == 1 { -v } else { *v })
                .collect()
        };
        Self {
            f: flip(&self.f),
            g: flip(&self.g),
            t: self.t,
        }
    }
}

/// Time derivative of the coefficient vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsOutput {
    pub df: Vec<f64>,
    pub dg: Vec<f64>,
}

pub(crate) fn check_compatible(
    state: &GalerkinState,
    params: &SystemParams,
    basis: &SpectralBasis,
) -> Result<()> {
    if state.f.len() != basis.dim() || state.g.len() != basis.dim() {
        return Err(Error::Usage(format!(
            "state has {}/{} coefficients but the basis has {} modes",
            state.f.len(),
            state.g.len(),
            basis.dim()
        )));
    }
    if (params.length - basis.length()).abs() > 1e-14 * params.length {
        return Err(Error::Usage(format!(
            "parameter L = {} does not match basis length {}",
            params.length,
            basis.length()
        )));
    }
    check_finite("F coefficients", &state.f)?;
    check_finite("G coefficients", &state.g)?;
    Ok(())
}

/// Heights and third derivatives of both layers at the quadrature nodes.
pub(crate) struct NodalFields {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub f3: Vec<f64>,
    pub g3: Vec<f64>,
}

impl NodalFields {
    pub(crate) fn new(f: &[f64], g: &[f64], basis: &SpectralBasis) -> Result<Self> {
        let m = basis.quadrature().len();
        let mut fields = Self {
            f: vec![0.0; m],
            g: vec![0.0; m],
            f3: vec![0.0; m],
            g3: vec![0.0; m],
        };
        basis.synthesize_into(f, 0, &mut fields.f);
        basis.synthesize_into(g, 0, &mut fields.g);
        basis.synthesize_into(f, 3, &mut fields.f3);
        basis.synthesize_into(g, 3, &mut fields.g3);
        check_finite("nodal f", &fields.f)?;
        check_finite("nodal g", &fields.g)?;
        check_finite("nodal f'''", &fields.f3)?;
        check_finite("nodal g'''", &fields.g3)?;
        Ok(fields)
    }

    pub(crate) fn len(&self) -> usize {
        self.f.len()
    }
}

#[inline]
fn flux_f_point(r: f64, a: f64, b: f64, u: f64, s: f64) -> f64 {
    let a2 = a * a;
    let a3 = a2 * a;
    a3 * u + 0.5 * r * (2.0 * a3 + 3.0 * a2 * b) * s
}

#[inline]
fn flux_g_point(r: f64, mu: f64, a: f64, b: f64, u: f64, s: f64) -> f64 {
    let a2 = a * a;
    let b2 = b * b;
    1.5 * a2 * b * u + 0.5 * r * (2.0 * mu * b2 * b + 3.0 * a2 * b + 6.0 * a * b2) * s
}

pub(crate) fn fluxes(fields: &NodalFields, params: &SystemParams) -> (Vec<f64>, Vec<f64>) {
    let reg = params.regularizer();
    let mut hf = Vec::with_capacity(fields.len());
    let mut hg = Vec::with_capacity(fields.len());
    for i in 0..fields.len() {
        let a = reg.apply(fields.f[i]);
        let b = reg.apply(fields.g[i]);
        let u = fields.f3[i];
        let s = u + fields.g3[i];
        hf.push(flux_f_point(params.r, a, b, u, s));
        hg.push(flux_g_point(params.r, params.mu, a, b, u, s));
    }
    (hf, hg)
}

/// Nodal values of `H_f^{ε,n}` at the quadrature nodes.
pub fn flux_f(state: &GalerkinState, params: &SystemParams, basis: &SpectralBasis) -> Result<Vec<f64>> {
    check_compatible(state, params, basis)?;
    let fields = NodalFields::new(&state.f, &state.g, basis)?;
    Ok(fluxes(&fields, params).0)
}

/// Nodal values of `H_g^{ε,n}` at the quadrature nodes.
pub fn flux_g(state: &GalerkinState, params: &SystemParams, basis: &SpectralBasis) -> Result<Vec<f64>> {
    check_compatible(state, params, basis)?;
    let fields = NodalFields::new(&state.f, &state.g, basis)?;
    Ok(fluxes(&fields, params).1)
}

/// `H_g` rebuilt from the three weighted dissipation factors:
/// `μR a^{3/2}(g)·j_g + (3R/4) a^{1/2}(f) a(g)·j_fg + (3/2) a^{1/2}(f) a(g)·j_f`.
pub fn flux_g_factored(
    state: &GalerkinState,
    params: &SystemParams,
    basis: &SpectralBasis,
) -> Result<Vec<f64>> {
    let d = dissipation_fluxes(state, params, basis)?;
    let fields = NodalFields::new(&state.f, &state.g, basis)?;
    let reg = params.regularizer();
    Ok((0..fields.len())
        .map(|i| {
            let a = reg.apply(fields.f[i]);
            let b = reg.apply(fields.g[i]);
            let sa = a.sqrt();
            params.mu * params.r * b * b.sqrt() * d.j_g[i]
                + 0.75 * params.r * sa * b * d.j_fg[i]
                + 1.5 * sa * b * d.j_f[i]
        })
        .collect())
}

/// The three weighted third-derivative fields whose squares make up the
/// dissipation.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationFluxes {
    /// `a^{1/2}(f) [a(f) ∂ₓ³f + (R/2)(2a(f) + 3a(g)) ∂ₓ³(f+g)]`
    pub j_f: Vec<f64>,
    /// `a^{3/2}(g) ∂ₓ³(f+g)`
    pub j_g: Vec<f64>,
    /// `a^{1/2}(f) a(g) ∂ₓ³(f+g)`
    pub j_fg: Vec<f64>,
}

pub(crate) fn dissipation_fields(fields: &NodalFields, params: &SystemParams) -> DissipationFluxes {
    let reg = params.regularizer();
    let m = fields.len();
    let mut out = DissipationFluxes {
        j_f: Vec::with_capacity(m),
        j_g: Vec::with_capacity(m),
        j_fg: Vec::with_capacity(m),
    };
    for i in 0..m {
        let a = reg.apply(fields.f[i]);
        let b = reg.apply(fields.g[i]);
        let u = fields.f3[i];
        let s = u + fields.g3[i];
        let sa = a.sqrt();
        out.j_f
            .push(sa * (a * u + 0.5 * params.r * (2.0 * a + 3.0 * b) * s));
        out.j_g.push(b * b.sqrt() * s);
        out.j_fg.push(sa * b * s);
    }
    out
}

pub fn dissipation_fluxes(
    state: &GalerkinState,
    params: &SystemParams,
    basis: &SpectralBasis,
) -> Result<DissipationFluxes> {
    check_compatible(state, params, basis)?;
    let fields = NodalFields::new(&state.f, &state.g, basis)?;
    Ok(dissipation_fields(&fields, params))
}

pub(crate) fn assemble_raw(
    f: &[f64],
    g: &[f64],
    params: &SystemParams,
    basis: &SpectralBasis,
) -> Result<RhsOutput> {
    let fields = NodalFields::new(f, g, basis)?;
    let (hf, hg) = fluxes(&fields, params);
    check_finite("flux H_f", &hf)?;
    check_finite("flux H_g", &hg)?;
    let mut df = basis.moments(&hf, 1);
    let mut dg = basis.moments(&hg, 1);
    df[0] = 0.0;
    dg[0] = 0.0;
    Ok(RhsOutput { df, dg })
}

/// The Galerkin vector field `Ψ = (Ψ₁, Ψ₂)`. Components 0 are exactly zero.
pub fn assemble_psi(
    state: &GalerkinState,
    params: &SystemParams,
    basis: &SpectralBasis,
) -> Result<RhsOutput> {
    check_compatible(state, params, basis)?;
    assemble_raw(&state.f, &state.g, params, basis)
}

/// Jacobian of `Ψ` with respect to the stacked coefficients
/// `[F₀..F_n, G₀..G_n]`. Rows 0 and `n+1` are zero. At the kink of `a_ε` the
/// one-sided derivative from the left (zero) is used.
pub fn jacobian(
    state: &GalerkinState,
    params: &SystemParams,
    basis: &SpectralBasis,
) -> Result<DMatrix<f64>> {
    check_compatible(state, params, basis)?;
    jacobian_raw(&state.f, &state.g, params, basis)
}

pub(crate) fn jacobian_raw(
    f: &[f64],
    g: &[f64],
    params: &SystemParams,
    basis: &SpectralBasis,
) -> Result<DMatrix<f64>> {
    let fields = NodalFields::new(f, g, basis)?;
    let reg = params.regularizer();
    let (r, mu) = (params.r, params.mu);
    let w = basis.dim();
    let dim = 2 * w;
    let b0 = basis.table(0);
    let b1 = basis.table(1);
    let b3 = basis.table(3);
    let mut jac = vec![0.0; dim * dim];
    let mut rows = [vec![0.0; w], vec![0.0; w], vec![0.0; w], vec![0.0; w]];

    for (m, &wm) in basis.quadrature().weights().iter().enumerate() {
        let (fv, gv) = (fields.f[m], fields.g[m]);
        let a = reg.apply(fv);
        let b = reg.apply(gv);
        let (da, db) = (reg.slope(fv), reg.slope(gv));
        let u = fields.f3[m];
        let s = u + fields.g3[m];
        let (a2, b2) = (a * a, b * b);

        // Partial derivatives of H_f and H_g in (a, b, u, s).
        let hf_a = 3.0 * a2 * u + r * (3.0 * a2 + 3.0 * a * b) * s;
        let hf_b = 1.5 * r * a2 * s;
        let hf_u = a2 * a;
        let hf_s = r * (a2 * a + 1.5 * a2 * b);
        let hg_a = 3.0 * a * b * u + r * (3.0 * a * b + 3.0 * b2) * s;
        let hg_b = 1.5 * a2 * u + 0.5 * r * (6.0 * mu * b2 + 3.0 * a2 + 12.0 * a * b) * s;
        let hg_u = 1.5 * a2 * b;
        let hg_s = 0.5 * r * (2.0 * mu * b2 * b + 3.0 * a2 * b + 6.0 * a * b2);

        let v0 = &b0[m * w..(m + 1) * w];
        let v3 = &b3[m * w..(m + 1) * w];
        for k in 0..w {
            // ∂u/∂F_k = ∂s/∂F_k = ∂s/∂G_k = φ_k''' ; ∂f/∂F_k = ∂g/∂G_k = φ_k.
            rows[0][k] = hf_a * da * v0[k] + (hf_u + hf_s) * v3[k];
            rows[1][k] = hf_b * db * v0[k] + hf_s * v3[k];
            rows[2][k] = hg_a * da * v0[k] + (hg_u + hg_s) * v3[k];
            rows[3][k] = hg_b * db * v0[k] + hg_s * v3[k];
        }
        let v1 = &b1[m * w..(m + 1) * w];
        for j in 1..w {
            let wj = wm * v1[j];
            let row_f = j * dim;
            let row_g = (w + j) * dim;
            for k in 0..w {
                jac[row_f + k] += wj * rows[0][k];
                jac[row_f + w + k] += wj * rows[1][k];
                jac[row_g + k] += wj * rows[2][k];
                jac[row_g + w + k] += wj * rows[3][k];
            }
        }
    }
    check_finite("Jacobian", &jac)?;
    Ok(DMatrix::from_row_slice(dim, dim, &jac))
}
