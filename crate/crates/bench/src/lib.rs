//! Criterion benchmarks for the solver kernels; see `benches/`.

use thinfilm_core::{GalerkinState, SpectralBasis};

/// `f = 0.5 + 0.3 cos(πx/L)`, `g = 0.5 + 0.2 cos(2πx/L)` projected onto
/// `basis`, plus a small tail in every mode so no coefficient is zero.
pub fn reference_state(basis: &SpectralBasis) -> GalerkinState {
    let l = basis.length();
    let nodes = basis.quadrature().nodes();
    let profile = |mean: f64, amp: f64, k: f64| -> Vec<f64> {
        nodes
            .iter()
            .map(|x| mean + amp * (k * std::f64::consts::PI * x / l).cos())
            .collect()
    };
    let mut f = basis.project(&profile(0.5, 0.3, 1.0)).unwrap();
    let mut g = basis.project(&profile(0.5, 0.2, 2.0)).unwrap();
    for k in 1..f.len() {
        let tail = 1e-3 / (k * k) as f64;
        f[k] += tail;
        g[k] -= tail;
    }
    GalerkinState::new(f, g, 0.0).unwrap()
}
