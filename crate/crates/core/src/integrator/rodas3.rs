//! Rodas3: stiffly accurate, L-stable Rosenbrock method of order 3 with an
//! embedded order-2 solution. Stage form for an autonomous system:
//!
//! ```text
//! (I/(γh) - J) K_i = F(y + Σ_j a_ij K_j) + Σ_j (c_ij/h) K_j
//! y₁ = y + Σ m_i K_i,   err = Σ e_i K_i
//! ```
//!
//! Frozen components are excluded from the linear system and receive
//! `K_i = 0` exactly.

use nalgebra::{DMatrix, DVector};

use super::{OdeSystem, Trial};
use crate::error::{Error, Result};

const GAMMA: f64 = 0.5;
const A: [[f64; 3]; 4] = [
    [0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0],
    [2.0, 0.0, 0.0],
    [2.0, 0.0, 1.0],
];
const C: [[f64; 3]; 4] = [
    [0.0, 0.0, 0.0],
    [4.0, 0.0, 0.0],
    [1.0, -1.0, 0.0],
    [1.0, -1.0, -8.0 / 3.0],
];
const M: [f64; 4] = [2.0, 0.0, 1.0, 1.0];
const E: [f64; 4] = [0.0, 0.0, 0.0, 1.0];

pub(crate) fn attempt(
    system: &dyn OdeSystem,
    y: &[f64],
    t: f64,
    dt: f64,
    active: &[usize],
) -> Result<Trial> {
    let n = y.len();
    let na = active.len();
    let jac = system.jacobian(y)?;
    let mut lhs = DMatrix::zeros(na, na);
    let diag = 1.0 / (GAMMA * dt);
    for (r, &i) in active.iter().enumerate() {
        for (c, &j) in active.iter().enumerate() {
            lhs[(r, c)] = -jac[(i, j)];
        }
        lhs[(r, r)] += diag;
    }
    let lu = lhs.lu();

    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 4];
    let mut f = vec![0.0; n];
    let mut stage = y.to_vec();
    for s in 0..4 {
        // Stage 2 evaluates F at y again (a21 = 0); reuse stage 1's value.
        if s != 1 {
            stage.copy_from_slice(y);
            for &i in active {
                let mut acc = 0.0;
                for (j, a) in A[s][..s].iter().enumerate() {
                    acc += a * k[j][i];
                }
                stage[i] += acc;
            }
            system.rhs(&stage, &mut f)?;
        }
        let mut rhs = DVector::zeros(na);
        for (r, &i) in active.iter().enumerate() {
            let mut acc = f[i];
            for (j, c) in C[s][..s].iter().enumerate() {
                acc += c / dt * k[j][i];
            }
            rhs[r] = acc;
        }
        let sol = lu.solve(&rhs).ok_or(Error::SingularMatrix { t })?;
        for (r, &i) in active.iter().enumerate() {
            k[s][i] = sol[r];
        }
    }

    let mut y_new = y.to_vec();
    let mut err = vec![0.0; n];
    for &i in active {
        let (mut inc, mut e) = (0.0, 0.0);
        for s in 0..4 {
            inc += M[s] * k[s][i];
            e += E[s] * k[s][i];
        }
        y_new[i] += inc;
        err[i] = e;
    }
    Ok(Trial { y: y_new, err })
}
