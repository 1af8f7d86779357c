//! Test-side reference integrator, written independently of the library's
//! simulator.
//!
//! One control cycle of `P = wait + act` periods is split into period-long
//! blocks `z_0 .. z_{P-1}`, where `z_j(s) = x(jT + s)` for `s` in `[0, T]`.
//! Because the coefficients are `T`-periodic, each block obeys
//! `z_j' = A(s) z_j - g_j B(s) F (z_j - z_{j-d})`, so the delayed term is just
//! another block of the same augmented ODE. Block `j` starts at `z_{j-1}(T)`,
//! so the augmented system is re-integrated once per block with all earlier
//! blocks carried along.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

pub fn chained_monodromy<A, B>(a: A, b: B, f: &DMatrix<f64>, schedule: (usize, usize, usize), period: f64, steps: usize) -> DMatrix<f64>
where
    A: Fn(f64) -> DMatrix<f64>,
    B: Fn(f64) -> DMatrix<f64>,
{
    let (wait, act, delay) = schedule;
    let blocks = wait + act;
    let n = f.ncols();
    let h = period / steps as f64;
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut starts = vec![DVector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 })];
        for p in 0..blocks {
            let rhs = |s: f64, z: &[DVector<f64>]| -> Vec<DVector<f64>> {
                let (am, bf) = (a(s), b(s) * f);
                (0..z.len())
                    .map(|j| {
                        let mut d = &am * &z[j];
                        if j >= wait {
                            d -= &bf * (&z[j] - &z[j - delay]);
                        }
                        d
                    })
                    .collect()
            };
            let mut z = starts.clone();
            for i in 0..steps {
                let s = i as f64 * h;
                let axpy = |base: &[DVector<f64>], k: &[DVector<f64>], c: f64| -> Vec<DVector<f64>> {
                    base.iter().zip(k).map(|(x, y)| x + y * c).collect()
                };
                let k1 = rhs(s, &z);
                let k2 = rhs(s + h / 2.0, &axpy(&z, &k1, h / 2.0));
                let k3 = rhs(s + h / 2.0, &axpy(&z, &k2, h / 2.0));
                let k4 = rhs(s + h, &axpy(&z, &k3, h));
                for j in 0..z.len() {
                    z[j] += (&k1[j] + &k2[j] * 2.0 + &k3[j] * 2.0 + &k4[j]) * (h / 6.0);
                }
            }
            if p + 1 < blocks {
                starts.push(z[p].clone());
            } else {
                out.set_column(k, &z[p]);
            }
        }
    }
    out
}

/// Closed-form Jacobian of the planar orbit example along `x*(t) = (cos 2 pi t, -sin 2 pi t)`.
pub fn orbit_jacobian_closed_form(t: f64) -> DMatrix<f64> {
    let (c, s) = ((2.0 * PI * t).cos(), (2.0 * PI * t).sin());
    DMatrix::from_row_slice(2, 2, &[2.0 * c * c, -2.0 * c * s + 2.0 * PI, -2.0 * c * s - 2.0 * PI, 2.0 * s * s])
}

/// Eigenvalues of a real 2x2 matrix from its trace and determinant.
pub fn eig2(m: &DMatrix<f64>) -> (num_complex::Complex64, num_complex::Complex64) {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = num_complex::Complex64::new(tr * tr / 4.0 - det, 0.0).sqrt();
    (tr / 2.0 + disc, tr / 2.0 - disc)
}
