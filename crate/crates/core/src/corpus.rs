//! Built-in test problems. All constraints are encoded as `c(x) ≤ 0`.

use std::sync::Arc;

use crate::linalg::Mat;
use crate::problem::{Problem, Provenance};

/// Name of the problem with an MFCQ-fragile solution under noise.
pub const MFCQ_EXAMPLE: &str = "mfcq_example";

/// Right-hand side `a₂` of the first constraint `x₂² ≥ a₂` in [`MFCQ_EXAMPLE`].
pub const MFCQ_A2: f64 = 1e-4;

fn build(
    name: &str,
    x0: Vec<f64>,
    m: usize,
    f: fn(&[f64]) -> f64,
    g: fn(&[f64], &mut [f64]),
    c: fn(&[f64], &mut [f64]),
    jac: fn(&[f64], &mut Mat),
) -> Problem {
    let n = x0.len();
    Problem::new(name, n, m, x0, Arc::new(f), Arc::new(g), Arc::new(c), Arc::new(jac))
}

/// All built-in problems, in a fixed order.
pub fn corpus() -> Vec<Problem> {
    vec![mfcq_example(), hs21(), hs35(), hs43(), hs100(), annulus(), circle_packing()]
}

/// Looks up a corpus problem by name.
pub fn find(name: &str) -> Option<Problem> {
    corpus().into_iter().find(|p| p.name() == name)
}

/// `min x₁ + x₂` s.t. `x₂² ≥ a₂`, `½x₂² + x₁x₂ ≥ 0`, `x₁ ≥ 0`, `x₂ ≥ 0`.
pub fn mfcq_example() -> Problem {
    build(
        MFCQ_EXAMPLE,
        vec![1.0, 1.0],
        4,
        |x| x[0] + x[1],
        |_, g| {
            g[0] = 1.0;
            g[1] = 1.0;
        },
        |x, c| {
            c[0] = MFCQ_A2 - x[1] * x[1];
            c[1] = -(0.5 * x[1] * x[1] + x[0] * x[1]);
            c[2] = -x[0];
            c[3] = -x[1];
        },
        |x, j| {
            j[(0, 0)] = 0.0;
            j[(1, 0)] = -2.0 * x[1];
            j[(0, 1)] = -x[1];
            j[(1, 1)] = -(x[1] + x[0]);
            j[(0, 2)] = -1.0;
            j[(1, 2)] = 0.0;
            j[(0, 3)] = 0.0;
            j[(1, 3)] = -1.0;
        },
    )
    .with_reference(vec![0.0, MFCQ_A2.sqrt()], MFCQ_A2.sqrt(), Provenance::Published)
}

/// Hock–Schittkowski 21: bounded quadratic with one linear inequality.
pub fn hs21() -> Problem {
    build(
        "hs21",
        vec![-1.0, -1.0],
        5,
        |x| 0.01 * x[0] * x[0] + x[1] * x[1] - 100.0,
        |x, g| {
            g[0] = 0.02 * x[0];
            g[1] = 2.0 * x[1];
        },
        |x, c| {
            c[0] = 10.0 - 10.0 * x[0] + x[1];
            c[1] = 2.0 - x[0];
            c[2] = x[0] - 50.0;
            c[3] = -50.0 - x[1];
            c[4] = x[1] - 50.0;
        },
        |_, j| {
            let cols: [[f64; 2]; 5] = [[-10.0, 1.0], [-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]];
            for (i, col) in cols.iter().enumerate() {
                j[(0, i)] = col[0];
                j[(1, i)] = col[1];
            }
        },
    )
    .with_reference(vec![2.0, 0.0], -99.96, Provenance::Derived)
}

/// Hock–Schittkowski 35 (Beale): convex quadratic over a simplex-like set.
pub fn hs35() -> Problem {
    build(
        "hs35",
        vec![0.5, 0.5, 0.5],
        4,
        |x| {
            9.0 - 8.0 * x[0] - 6.0 * x[1] - 4.0 * x[2]
                + 2.0 * x[0] * x[0]
                + 2.0 * x[1] * x[1]
                + x[2] * x[2]
                + 2.0 * x[0] * x[1]
                + 2.0 * x[0] * x[2]
        },
        |x, g| {
            g[0] = -8.0 + 4.0 * x[0] + 2.0 * x[1] + 2.0 * x[2];
            g[1] = -6.0 + 4.0 * x[1] + 2.0 * x[0];
            g[2] = -4.0 + 2.0 * x[2] + 2.0 * x[0];
        },
        |x, c| {
            c[0] = x[0] + x[1] + 2.0 * x[2] - 3.0;
            c[1] = -x[0];
            c[2] = -x[1];
            c[3] = -x[2];
        },
        |_, j| {
            for r in 0..3 {
                for i in 0..4 {
                    j[(r, i)] = 0.0;
                }
            }
            j[(0, 0)] = 1.0;
            j[(1, 0)] = 1.0;
            j[(2, 0)] = 2.0;
            j[(0, 1)] = -1.0;
            j[(1, 2)] = -1.0;
            j[(2, 3)] = -1.0;
        },
    )
    .with_reference(vec![4.0 / 3.0, 7.0 / 9.0, 4.0 / 9.0], 1.0 / 9.0, Provenance::Derived)
}

/// Hock–Schittkowski 43 (Rosen–Suzuki).
pub fn hs43() -> Problem {
    build(
        "hs43",
        vec![0.0, 0.0, 0.0, 0.0],
        3,
        |x| {
            x[0] * x[0] + x[1] * x[1] + 2.0 * x[2] * x[2] + x[3] * x[3] - 5.0 * x[0] - 5.0 * x[1]
                - 21.0 * x[2]
                + 7.0 * x[3]
        },
        |x, g| {
            g[0] = 2.0 * x[0] - 5.0;
            g[1] = 2.0 * x[1] - 5.0;
            g[2] = 4.0 * x[2] - 21.0;
            g[3] = 2.0 * x[3] + 7.0;
        },
        |x, c| {
            let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
            c[0] = sq[0] + sq[1] + sq[2] + sq[3] + x[0] - x[1] + x[2] - x[3] - 8.0;
            c[1] = sq[0] + 2.0 * sq[1] + sq[2] + 2.0 * sq[3] - x[0] - x[3] - 10.0;
            c[2] = 2.0 * sq[0] + sq[1] + sq[2] + 2.0 * x[0] - x[1] - x[3] - 5.0;
        },
        |x, j| {
            let cols = [
                [2.0 * x[0] + 1.0, 2.0 * x[1] - 1.0, 2.0 * x[2] + 1.0, 2.0 * x[3] - 1.0],
                [2.0 * x[0] - 1.0, 4.0 * x[1], 2.0 * x[2], 4.0 * x[3] - 1.0],
                [4.0 * x[0] + 2.0, 2.0 * x[1] - 1.0, 2.0 * x[2], -1.0],
            ];
            for (i, col) in cols.iter().enumerate() {
                for (r, v) in col.iter().enumerate() {
                    j[(r, i)] = *v;
                }
            }
        },
    )
    .with_reference(vec![0.0, 1.0, 2.0, -1.0], -44.0, Provenance::Derived)
}

/// Hock–Schittkowski 100: seven variables, four nonlinear inequalities.
pub fn hs100() -> Problem {
    build(
        "hs100",
        vec![1.0, 2.0, 0.0, 4.0, 0.0, 1.0, 1.0],
        4,
        |x| {
            (x[0] - 10.0).powi(2) + 5.0 * (x[1] - 12.0).powi(2) + x[2].powi(4) + 3.0 * (x[3] - 11.0).powi(2)
                + 10.0 * x[4].powi(6)
                + 7.0 * x[5] * x[5]
                + x[6].powi(4)
                - 4.0 * x[5] * x[6]
                - 10.0 * x[5]
                - 8.0 * x[6]
        },
        |x, g| {
            g[0] = 2.0 * (x[0] - 10.0);
            g[1] = 10.0 * (x[1] - 12.0);
            g[2] = 4.0 * x[2].powi(3);
            g[3] = 6.0 * (x[3] - 11.0);
            g[4] = 60.0 * x[4].powi(5);
            g[5] = 14.0 * x[5] - 4.0 * x[6] - 10.0;
            g[6] = 4.0 * x[6].powi(3) - 4.0 * x[5] - 8.0;
        },
        |x, c| {
            c[0] = 2.0 * x[0] * x[0] + 3.0 * x[1].powi(4) + x[2] + 4.0 * x[3] * x[3] + 5.0 * x[4] - 127.0;
            c[1] = 7.0 * x[0] + 3.0 * x[1] + 10.0 * x[2] * x[2] + x[3] - x[4] - 282.0;
            c[2] = 23.0 * x[0] + x[1] * x[1] + 6.0 * x[5] * x[5] - 8.0 * x[6] - 196.0;
            c[3] = 4.0 * x[0] * x[0] + x[1] * x[1] - 3.0 * x[0] * x[1] + 2.0 * x[2] * x[2] + 5.0 * x[5]
                - 11.0 * x[6];
        },
        |x, j| {
            let cols = [
                [4.0 * x[0], 12.0 * x[1].powi(3), 1.0, 8.0 * x[3], 5.0, 0.0, 0.0],
                [7.0, 3.0, 20.0 * x[2], 1.0, -1.0, 0.0, 0.0],
                [23.0, 2.0 * x[1], 0.0, 0.0, 0.0, 12.0 * x[5], -8.0],
                [8.0 * x[0] - 3.0 * x[1], 2.0 * x[1] - 3.0 * x[0], 4.0 * x[2], 0.0, 0.0, 5.0, -11.0],
            ];
            for (i, col) in cols.iter().enumerate() {
                for (r, v) in col.iter().enumerate() {
                    j[(r, i)] = *v;
                }
            }
        },
    )
    .with_reference(
        vec![
            2.330499372879568,
            1.951372372896883,
            -0.47754139238886073,
            4.365726233655822,
            -0.6244869705268163,
            1.0381310186079562,
            1.5942267116118702,
        ],
        680.6300573744022,
        Provenance::Derived,
    )
}

/// Nearest point to `(0.2, 0.1)` in the annulus `1 ≤ ‖x‖² ≤ 4` (nonconvex set).
pub fn annulus() -> Problem {
    build(
        "annulus",
        vec![1.5, 1.0],
        2,
        |x| (x[0] - 0.2).powi(2) + (x[1] - 0.1).powi(2),
        |x, g| {
            g[0] = 2.0 * (x[0] - 0.2);
            g[1] = 2.0 * (x[1] - 0.1);
        },
        |x, c| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            c[0] = 1.0 - r2;
            c[1] = r2 - 4.0;
        },
        |x, j| {
            j[(0, 0)] = -2.0 * x[0];
            j[(1, 0)] = -2.0 * x[1];
            j[(0, 1)] = 2.0 * x[0];
            j[(1, 1)] = 2.0 * x[1];
        },
    )
    .with_reference(vec![0.894427190999916, 0.447213595499958], 0.6027864045000421, Provenance::Derived)
}

/// Two equal disks of maximal radius in the unit square.
/// Variables `(x₁, y₁, x₂, y₂, r)`.
pub fn circle_packing() -> Problem {
    build(
        "circle_packing",
        vec![0.3, 0.25, 0.6, 0.7, 0.05],
        9,
        |x| -x[4],
        |_, g| {
            g[..4].iter_mut().for_each(|v| *v = 0.0);
            g[4] = -1.0;
        },
        |x, c| {
            let r = x[4];
            for k in 0..4 {
                c[k] = r - x[k];
                c[4 + k] = x[k] + r - 1.0;
            }
            let (dx, dy) = (x[0] - x[2], x[1] - x[3]);
            c[8] = 4.0 * r * r - dx * dx - dy * dy;
        },
        |x, j| {
            j.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
            for k in 0..4 {
                j[(k, k)] = -1.0;
                j[(4, k)] = 1.0;
                j[(k, 4 + k)] = 1.0;
                j[(4, 4 + k)] = 1.0;
            }
            let (dx, dy) = (x[0] - x[2], x[1] - x[3]);
            j[(0, 8)] = -2.0 * dx;
            j[(1, 8)] = -2.0 * dy;
            j[(2, 8)] = 2.0 * dx;
            j[(3, 8)] = 2.0 * dy;
            j[(4, 8)] = 8.0 * x[4];
        },
    )
    .with_reference(
        vec![0.29289321881345254, 0.29289321881345254, 0.7071067811865475, 0.7071067811865475, 0.29289321881345254],
        -0.29289321881345254,
        Provenance::Derived,
    )
}
