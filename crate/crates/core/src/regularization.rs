//! Mobility regularization `a_ε(s) = ε + max{0, s}` and the mollified
//! negative-part family `χ_δ`.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter {
            name: "eps",
            value: eps,
            reason: "regularization parameter must lie in (0, 1]",
        })
    }
}

/// `a_ε(s) = ε + max{0, s}`.
pub fn a_eps(eps: f64, s: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(eps + s.max(0.0))
}

/// Exponents that appear in the regularized mobilities and in the
/// dissipation weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exponent {
    Half,
    One,
    ThreeHalves,
    Two,
    Three,
}

impl Exponent {
    /// Applies the power to an already-clamped, strictly positive value.
    #[inline]
    pub fn apply(self, a: f64) -> f64 {
        match self {
            Exponent::Half => a.sqrt(),
            Exponent::One => a,
            Exponent::ThreeHalves => a * a.sqrt(),
            Exponent::Two => a * a,
            Exponent::Three => a * a * a,
        }
    }
}

/// `a_ε(s)^p`.
pub fn a_eps_pow(eps: f64, s: f64, p: Exponent) -> Result<f64> {
    Ok(p.apply(a_eps(eps, s)?))
}

/// Validated regularization parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularizer {
    eps: f64,
}

impl Regularizer {
    pub fn new(eps: f64) -> Result<Self> {
        check_eps(eps)?;
        Ok(Self { eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    #[inline]
    pub fn apply(&self, s: f64) -> f64 {
        self.eps + s.max(0.0)
    }

    /// Derivative of `a_ε`; the kink at `s = 0` takes the left value 0.
    #[inline]
    pub fn slope(&self, s: f64) -> f64 {
        if s > 0.0 {
            1.0
        } else {
            0.0
        }
    }

    #[inline]
    pub fn pow(&self, s: f64, p: Exponent) -> f64 {
        p.apply(self.apply(s))
    }
}

// Table of χ₁ and its derivative on [TABLE_LO, TABLE_HI]; the grid spacing is
// a power of two so that -1 and 0 are grid nodes.
const TABLE_LO: f64 = -1.5;
const TABLE_HI: f64 = 0.5;
const TABLE_INTERVALS: usize = 4096;
const TABLE_GAUSS_POINTS: usize = 8;

#[inline]
fn unnormalized_bump(x: f64) -> f64 {
    if x <= -1.0 || x >= 0.0 {
        0.0
    } else {
        let q = -x * (x + 1.0);
        (-1.0 / q).exp()
    }
}

#[inline]
fn unnormalized_bump_deriv(x: f64) -> f64 {
    if x <= -1.0 || x >= 0.0 {
        0.0
    } else {
        let q = -x * (x + 1.0);
        (-1.0 / q).exp() * (-(2.0 * x + 1.0)) / (q * q)
    }
}

/// The canonical smooth bump `φ(x) = C exp(-1/(-x(x+1)))` on `(-1, 0)`,
/// normalized to unit mass, and the mollifiers `χ_δ(x) = δ χ₁(x/δ)` with
/// `χ₁(x) = -∫₀ˣ ∫ₛ^∞ φ(τ) dτ ds`.
///
/// `χ₁` and `Φ(s) = ∫ₛ^∞ φ` are tabulated once at the nodes of a uniform
/// grid. Between nodes the remaining partial-cell integrals are evaluated by
/// Gauss–Legendre quadrature, so every contribution is non-negative and `χ₁`
/// keeps its sign and monotonicity down to the smallest representable values.
/// The second and third derivatives are the bump and its derivative in
/// closed form.
#[derive(Debug, Clone)]
pub struct MollifierFamily {
    normalization: f64,
    step: f64,
    // χ₁ and Φ at the table nodes.
    chi1: Vec<f64>,
    tail: Vec<f64>,
    chi1_at_minus_one: f64,
    // Gauss–Legendre rule on [-1, 1].
    rule: Vec<(f64, f64)>,
    sup_bump: f64,
    sup_bump_deriv: f64,
}

impl MollifierFamily {
    pub fn new() -> Self {
        let rule = GaussLegendre::new(
            std::num::NonZeroUsize::new(TABLE_GAUSS_POINTS).expect("non-zero point count"),
        );
        let reference: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
        let step = (TABLE_HI - TABLE_LO) / TABLE_INTERVALS as f64;
        let node = |i: usize| TABLE_LO + i as f64 * step;

        // Per interval: ∫ φ̃ and ∫ (τ - x_i) φ̃(τ) dτ for the unnormalized bump.
        let mut mass = vec![0.0; TABLE_INTERVALS];
        let mut moment = vec![0.0; TABLE_INTERVALS];
        for i in 0..TABLE_INTERVALS {
            let left = node(i);
            let (mut m0, mut m1) = (0.0, 0.0);
            for &(xi, wi) in &reference {
                let tau = left + 0.5 * step * (1.0 + xi);
                let w = 0.5 * step * wi;
                let b = unnormalized_bump(tau);
                m0 += w * b;
                m1 += w * b * (tau - left);
            }
            mass[i] = m0;
            moment[i] = m1;
        }
        let total: f64 = mass.iter().rev().sum();
        let normalization = 1.0 / total;

        let mut tail = vec![0.0; TABLE_INTERVALS + 1];
        let mut chi1 = vec![0.0; TABLE_INTERVALS + 1];
        for i in (0..TABLE_INTERVALS).rev() {
            tail[i] = tail[i + 1] + normalization * mass[i];
            // ∫_{x_i}^{x_{i+1}} Φ(s) ds = h Φ(x_{i+1}) + ∫ (τ - x_i) φ(τ) dτ
            chi1[i] = chi1[i + 1] + step * tail[i + 1] + normalization * moment[i];
        }
        let minus_one = ((-1.0 - TABLE_LO) / step).round() as usize;

        let (sup_bump, _) = maximize(|x| normalization * unnormalized_bump(x));
        let (sup_bump_deriv, _) = maximize(|x| (normalization * unnormalized_bump_deriv(x)).abs());

        let chi1_at_minus_one = chi1[minus_one];
        Self {
            normalization,
            step,
            chi1,
            tail,
            chi1_at_minus_one,
            rule: reference,
            sup_bump,
            sup_bump_deriv,
        }
    }

    /// Shared instance, built on first use.
    pub fn canonical() -> &'static MollifierFamily {
        static FAMILY: OnceLock<MollifierFamily> = OnceLock::new();
        FAMILY.get_or_init(MollifierFamily::new)
    }

    /// Normalization constant `C` of the bump.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn bump(&self, x: f64) -> f64 {
        self.normalization * unnormalized_bump(x)
    }

    pub fn bump_deriv(&self, x: f64) -> f64 {
        self.normalization * unnormalized_bump_deriv(x)
    }

    /// `sup |φ|`, located by dense sampling and golden-section refinement.
    pub fn sup_bump(&self) -> f64 {
        self.sup_bump
    }

    /// `sup |φ'|`.
    pub fn sup_bump_deriv(&self) -> f64 {
        self.sup_bump_deriv
    }

    /// `Φ(x) = ∫ₓ^∞ φ`.
    pub fn tail(&self, x: f64) -> f64 {
        if x >= 0.0 {
            return 0.0;
        }
        if x <= -1.0 {
            return 1.0;
        }
        let i = self.locate(x);
        let (m0, _) = self.partial_cell(x, self.node(i + 1));
        self.tail[i + 1] + self.normalization * m0
    }

    /// `(∫ₓᵇ φ̃, ∫ₓᵇ (τ - x) φ̃(τ) dτ)` for the unnormalized bump.
    fn partial_cell(&self, x: f64, b: f64) -> (f64, f64) {
        let half = 0.5 * (b - x);
        let (mut m0, mut m1) = (0.0, 0.0);
        for &(xi, wi) in &self.rule {
            let tau = x + half * (1.0 + xi);
            let v = half * wi * unnormalized_bump(tau);
            m0 += v;
            m1 += v * (tau - x);
        }
        (m0, m1)
    }

    fn node(&self, i: usize) -> f64 {
        TABLE_LO + i as f64 * self.step
    }

    fn locate(&self, x: f64) -> usize {
        let s = (x - TABLE_LO) / self.step;
        (s.floor() as usize).min(TABLE_INTERVALS - 1)
    }

    /// `χ₁` and its derivatives up to order 3.
    pub fn chi1(&self, x: f64, order: u8) -> Result<f64> {
        match order {
            0 => Ok(if x >= 0.0 {
                0.0
            } else if x <= -1.0 {
                self.chi1_at_minus_one + (-1.0 - x)
            } else {
                // ∫ₓ^{x_{i+1}} Φ(s) ds = (x_{i+1} - x) Φ(x_{i+1}) + ∫ (τ - x) φ(τ) dτ
                let i = self.locate(x);
                let b = self.node(i + 1);
                let (_, m1) = self.partial_cell(x, b);
                self.chi1[i + 1] + (b - x) * self.tail[i + 1] + self.normalization * m1
            }),
            1 => Ok(-self.tail(x)),
            2 => Ok(self.bump(x)),
            3 => Ok(self.bump_deriv(x)),
            _ => Err(Error::Usage(format!(
                "mollifier derivative order must be at most 3, got {order}"
            ))),
        }
    }

    /// `∂ₓ^order χ_δ(x)` with `χ_δ(x) = δ χ₁(x/δ)`.
    pub fn chi(&self, delta: f64, x: f64, order: u8) -> Result<f64> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Parameter {
                name: "delta",
                value: delta,
                reason: "mollifier scale must be positive",
            });
        }
        let v = self.chi1(x / delta, order)?;
        Ok(match order {
            0 => delta * v,
            1 => v,
            2 => v / delta,
            _ => v / (delta * delta),
        })
    }
}

impl Default for MollifierFamily {
    fn default() -> Self {
        Self::new()
    }
}

/// `χ_δ` evaluated with the canonical family.
pub fn chi(delta: f64, x: f64, order: u8) -> Result<f64> {
    MollifierFamily::canonical().chi(delta, x, order)
}

/// Maximum of a unimodal-per-sample-bracket function on `(-1, 0)`.
fn maximize(f: impl Fn(f64) -> f64) -> (f64, f64) {
    const SAMPLES: usize = 20_000;
    let h = 1.0 / SAMPLES as f64;
    let (mut best_i, mut best) = (1, f64::MIN);
    for i in 1..SAMPLES {
        let v = f(-1.0 + i as f64 * h);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let (mut a, mut b) = (-1.0 + (best_i - 1) as f64 * h, -1.0 + (best_i + 1) as f64 * h);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - ratio * (b - a);
        let d = a + ratio * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let x = 0.5 * (a + b);
    (f(x).max(best), x)
}
