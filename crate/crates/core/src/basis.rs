//! Neumann cosine eigenbasis on `(0, L)` with composite Gauss–Legendre
//! quadrature.
//!
//! The basis functions are `φ₀ = √(1/L)` and `φ_k = √(2/L) cos(kπx/L)`. Every
//! derivative is evaluated in closed form; the odd derivatives carry a sine
//! factor and therefore vanish at both endpoints, which is exactly the
//! no-flux boundary condition of the film equations.

use std::f64::consts::PI;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Number of Gauss points per cell used by default.
pub const DEFAULT_GAUSS_POINTS: usize = 4;

/// Default number of quadrature cells for a basis with highest mode `n`.
pub fn default_cells(n: usize) -> usize {
    8 * (n + 1)
}

fn normalization(k: usize, length: f64) -> f64 {
    if k == 0 {
        (1.0 / length).sqrt()
    } else {
        (2.0 / length).sqrt()
    }
}

/// Closed-form `order`-th derivative of `φ_k`, no argument checks.
#[inline]
pub(crate) fn eval_raw(k: usize, x: f64, length: f64, order: u8) -> f64 {
    if k == 0 {
        return if order == 0 { normalization(0, length) } else { 0.0 };
    }
    let c = normalization(k, length);
    let kappa = k as f64 * PI / length;
    let (s, co) = sin_cos_pi(k as f64 * (x / length));
    match order {
        0 => c * co,
        1 => -c * kappa * s,
        2 => -c * kappa * kappa * co,
        _ => c * kappa * kappa * kappa * s,
    }
}

/// `(sin πθ, cos πθ)` with the argument reduced to `[-1/4, 1/4]` first, so
/// integer and half-integer `θ` give exact zeros.
fn sin_cos_pi(theta: f64) -> (f64, f64) {
    let quarter = (2.0 * theta).round();
    let r = theta - 0.5 * quarter;
    let (s, c) = (PI * r).sin_cos();
    match (quarter as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

fn check_position(x: f64, length: f64) -> Result<()> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::Parameter {
            name: "L",
            value: length,
            reason: "interval length must be positive and finite",
        });
    }
    if !(0.0..=length).contains(&x) {
        return Err(Error::Domain { x, length });
    }
    Ok(())
}

/// Value of `φ_k(x)` on `[0, L]`.
pub fn basis_value(k: usize, x: f64, length: f64) -> Result<f64> {
    check_position(x, length)?;
    Ok(eval_raw(k, x, length, 0))
}

/// Derivative of order 1, 2 or 3 of `φ_k` at `x`.
pub fn basis_deriv(k: usize, x: f64, length: f64, order: u8) -> Result<f64> {
    if !(1..=3).contains(&order) {
        return Err(Error::Usage(format!(
            "basis derivative order must be 1, 2 or 3, got {order}"
        )));
    }
    check_position(x, length)?;
    Ok(eval_raw(k, x, length, order))
}

/// Composite Gauss–Legendre rule on `M` uniform cells of `(0, L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    cells: usize,
    points_per_cell: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(length: f64, cells: usize, points_per_cell: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Parameter {
                name: "L",
                value: length,
                reason: "interval length must be positive and finite",
            });
        }
        if cells == 0 {
            return Err(Error::Usage("quadrature needs at least one cell".into()));
        }
        let degree = std::num::NonZeroUsize::new(points_per_cell)
            .ok_or_else(|| Error::Usage("quadrature needs at least one point per cell".into()))?;
        let rule = GaussLegendre::new(degree);
        let mut reference: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
        reference.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Symmetrize so the grid is mirror-symmetric about L/2 up to the
        // rounding of the affine map.
        let p = reference.len();
        for i in 0..p / 2 {
            let (xl, wl) = reference[i];
            let (xr, wr) = reference[p - 1 - i];
            let x = 0.5 * (xr - xl);
            let w = 0.5 * (wl + wr);
            reference[i] = (-x, w);
            reference[p - 1 - i] = (x, w);
        }
        if p % 2 == 1 {
            reference[p / 2].0 = 0.0;
        }

        let h = length / cells as f64;
        let mut nodes = Vec::with_capacity(cells * p);
        let mut weights = Vec::with_capacity(cells * p);
        for c in 0..cells {
            let left = c as f64 * h;
            for &(xi, wi) in &reference {
                nodes.push(left + 0.5 * h * (1.0 + xi));
                weights.push(0.5 * h * wi);
            }
        }
        Ok(Self {
            cells,
            points_per_cell: p,
            nodes,
            weights,
        })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn points_per_cell(&self) -> usize {
        self.points_per_cell
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫₀ᴸ s dx` for nodal samples `s`, summed in node order.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(samples)
            .fold(0.0, |acc, (w, s)| acc + w * s)
    }
}

/// Cosine basis `φ₀..φ_n` together with tabulated values and derivatives at
/// the quadrature nodes.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    length: f64,
    modes: usize,
    eigenvalues: Vec<f64>,
    quad: QuadratureGrid,
    // Row-major [node][mode] tables of φ, φ', φ'', φ'''.
    tables: [Vec<f64>; 4],
}

impl SpectralBasis {
    /// Basis with highest mode `n` and the default quadrature
    /// (`8(n+1)` cells, 4 Gauss points per cell).
    pub fn new(n: usize, length: f64) -> Result<Self> {
        Self::with_quadrature(n, length, default_cells(n), DEFAULT_GAUSS_POINTS)
    }

    pub fn with_quadrature(
        n: usize,
        length: f64,
        cells: usize,
        points_per_cell: usize,
    ) -> Result<Self> {
        let quad = QuadratureGrid::new(length, cells, points_per_cell)?;
        let eigenvalues = (0..=n)
            .map(|k| {
                let kappa = k as f64 * PI / length;
                kappa * kappa
            })
            .collect();
        let width = n + 1;
        let tables = std::array::from_fn(|order| {
            let mut t = Vec::with_capacity(quad.len() * width);
            for &x in quad.nodes() {
                t.extend((0..=n).map(|k| eval_raw(k, x, length, order as u8)));
            }
            t
        });
        Ok(Self {
            length,
            modes: n,
            eigenvalues,
            quad,
            tables,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Highest retained mode index `n`.
    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Number of coefficients, `n + 1`.
    pub fn dim(&self) -> usize {
        self.modes + 1
    }

    /// `λ_k = (kπ/L)²`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn quadrature(&self) -> &QuadratureGrid {
        &self.quad
    }

    /// Tabulated `order`-th derivative, row-major `[node][mode]`.
    pub fn table(&self, order: u8) -> &[f64] {
        &self.tables[order.min(3) as usize]
    }

    fn check_len(&self, what: &str, len: usize, expected: usize) -> Result<()> {
        if len != expected {
            return Err(Error::Usage(format!(
                "{what} has length {len}, expected {expected}"
            )));
        }
        Ok(())
    }

    /// Nodal values of `Σ_k c_k ∂ₓ^order φ_k` at the quadrature nodes.
    pub fn synthesize(&self, coeffs: &[f64], order: u8) -> Result<Vec<f64>> {
        if order > 3 {
            return Err(Error::Usage(format!(
                "synthesis order must be at most 3, got {order}"
            )));
        }
        self.check_len("coefficient vector", coeffs.len(), self.dim())?;
        let mut out = vec![0.0; self.quad.len()];
        self.synthesize_into(coeffs, order, &mut out);
        Ok(out)
    }

    pub(crate) fn synthesize_into(&self, coeffs: &[f64], order: u8, out: &mut [f64]) {
        let width = self.dim();
        let table = self.table(order);
        for (row, o) in table.chunks_exact(width).zip(out.iter_mut()) {
            *o = row.iter().zip(coeffs).fold(0.0, |acc, (b, c)| acc + b * c);
        }
    }

    /// `c_k = ∫ s φ_k dx` by quadrature, for nodal samples `s`.
    pub fn project(&self, samples: &[f64]) -> Result<Vec<f64>> {
        self.check_len("sample vector", samples.len(), self.quad.len())?;
        Ok(self.moments(samples, 0))
    }

    /// `m_j = ∫ s ∂ₓφ_j dx` by quadrature. This is the Galerkin pairing of a
    /// flux field with the derivative of each test function.
    pub fn derivative_moments(&self, samples: &[f64]) -> Result<Vec<f64>> {
        self.check_len("sample vector", samples.len(), self.quad.len())?;
        Ok(self.moments(samples, 1))
    }

    pub(crate) fn moments(&self, samples: &[f64], order: u8) -> Vec<f64> {
        let width = self.dim();
        let mut out = vec![0.0; width];
        let table = self.table(order);
        for ((row, w), s) in table
            .chunks_exact(width)
            .zip(self.quad.weights())
            .zip(samples)
        {
            let ws = w * s;
            for (o, b) in out.iter_mut().zip(row) {
                *o += ws * b;
            }
        }
        out
    }

    /// Evaluates `Σ_k c_k ∂ₓ^order φ_k` at arbitrary points of `[0, L]`.
    pub fn evaluate(&self, coeffs: &[f64], xs: &[f64], order: u8) -> Result<Vec<f64>> {
        if order > 3 {
            return Err(Error::Usage(format!(
                "evaluation order must be at most 3, got {order}"
            )));
        }
        self.check_len("coefficient vector", coeffs.len(), self.dim())?;
        xs.iter()
            .map(|&x| {
                check_position(x, self.length)?;
                Ok(coeffs
                    .iter()
                    .enumerate()
                    .fold(0.0, |acc, (k, c)| acc + c * eval_raw(k, x, self.length, order)))
            })
            .collect()
    }

    /// Zero-pads (or truncates) a coefficient vector to this basis' size.
    pub fn embed(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        let m = coeffs.len().min(out.len());
        out[..m].copy_from_slice(&coeffs[..m]);
        out
    }
}

/// `count` equally spaced points covering `[0, L]` including both ends.
pub fn uniform_grid(length: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let h = length / (count - 1) as f64;
            let mut xs: Vec<f64> = (0..count).map(|i| i as f64 * h).collect();
            xs[count - 1] = length;
            xs
        }
    }
}
