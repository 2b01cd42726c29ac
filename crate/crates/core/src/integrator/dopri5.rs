//! Dormand–Prince 5(4) for autonomous systems. The fifth-order solution is propagated; the error
//! estimate is the difference to the embedded fourth-order solution. The
//! first-same-as-last stage is not carried between steps so every step
//! depends only on `(y, dt)`.

use super::{OdeSystem, Trial};
use crate::error::Result;

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

// b5 - b4
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub(crate) fn attempt(
    system: &dyn OdeSystem,
    y: &[f64],
    dt: f64,
    active: &[usize],
) -> Result<Trial> {
    let n = y.len();
    let mut k = vec![vec![0.0; n]; 7];
    let mut stage = y.to_vec();
    system.rhs(y, &mut k[0])?;
    for s in 1..7 {
        stage.copy_from_slice(y);
        for &i in active {
            let mut acc = 0.0;
            for (j, a) in A[s][..s].iter().enumerate() {
                acc += a * k[j][i];
            }
            stage[i] += dt * acc;
        }
        system.rhs(&stage, &mut k[s])?;
    }
    let mut y_new = y.to_vec();
    let mut err = vec![0.0; n];
    for &i in active {
        let (mut inc, mut e) = (0.0, 0.0);
        for s in 0..7 {
            inc += B[s] * k[s][i];
            e += E[s] * k[s][i];
        }
        y_new[i] += dt * inc;
        err[i] = dt * e;
    }
    Ok(Trial { y: y_new, err })
}
