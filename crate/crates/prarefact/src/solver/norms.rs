//! Discrete L^q norms and cell-centered gradients.
//!
//! Norms use midpoint quadrature on cell averages: (Σ |v_i|^q vol)^{1/q},
//! with q = ∞ the maximum of |v_i|. Sums run through the fixed pairwise
//! tree in [`crate::par`], so results are reproducible across thread counts.

use super::grid::{Field, GridKind};
use crate::error::{Error, Result};
use crate::par;

/// Discrete L^q norm for q ∈ [1, ∞].
pub fn lq_norm(field: &Field, q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::OutOfRange { what: "q", value: q, lo: 1.0, hi: f64::INFINITY });
    }
    let vals = field.values();
    if q.is_infinite() {
        return Ok(par::reduce_chunked(
            vals.len(),
            0.0,
            |s, e| vals[s..e].iter().fold(0.0f64, |m, &v| m.max(v.abs())),
            f64::max,
        ));
    }
    let vol = field.grid().cell_volume();
    let mut powered = vec![0.0; vals.len()];
    if q == 1.0 {
        par::fill_chunked(&mut powered, |s, chunk| {
            for (slot, &v) in chunk.iter_mut().zip(&vals[s..]) {
                *slot = v.abs();
            }
        });
    } else if q == 2.0 {
        par::fill_chunked(&mut powered, |s, chunk| {
            for (slot, &v) in chunk.iter_mut().zip(&vals[s..]) {
                *slot = v * v;
            }
        });
    } else {
        par::fill_chunked(&mut powered, |s, chunk| {
            for (slot, &v) in chunk.iter_mut().zip(&vals[s..]) {
                *slot = v.abs().powf(q);
            }
        });
    }
    Ok((par::pairwise_sum(&powered) * vol).powf(1.0 / q))
}

/// Smoothed L¹ functional ∫ (v² + δ²)^{1/2} dx.
pub fn smoothed_l1(field: &Field, delta: f64) -> f64 {
    let vals = field.values();
    let vol = field.grid().cell_volume();
    let d2 = delta * delta;
    let mut j = vec![0.0; vals.len()];
    par::fill_chunked(&mut j, |s, chunk| {
        for (slot, &v) in chunk.iter_mut().zip(&vals[s..]) {
            *slot = (v * v + d2).sqrt();
        }
    });
    par::pairwise_sum(&j) * vol
}

/// Cell-centered gradient magnitude |∇u| by centered differences
/// (one-sided at channel ends on axis 0, periodic wrap elsewhere).
pub fn gradient_magnitude_cells(field: &Field) -> Field {
    let grid = field.grid().clone();
    let vals = field.values();
    let dim = grid.dim();
    let cells = grid.cells_arr();
    let strides = grid.strides_arr();
    let dx = grid.dx_arr();
    let channel = grid.kind() == GridKind::Channel;
    let mut out = vec![0.0; vals.len()];
    par::fill_chunked(&mut out, |start, chunk| {
        let mut coords = grid.coords_of(start);
        for (k, slot) in chunk.iter_mut().enumerate() {
            let flat = start + k;
            let mut sum_sq = 0.0;
            for b in 0..dim {
                let cb = coords[b];
                let grad = if channel && b == 0 && cb == 0 {
                    (vals[flat + strides[0]] - vals[flat]) / dx[0]
                } else if channel && b == 0 && cb == cells[0] - 1 {
                    (vals[flat] - vals[flat - strides[0]]) / dx[0]
                } else {
                    let up = if cb + 1 == cells[b] {
                        flat - (cells[b] - 1) * strides[b]
                    } else {
                        flat + strides[b]
                    };
                    let dn = if cb == 0 {
                        flat + (cells[b] - 1) * strides[b]
                    } else {
                        flat - strides[b]
                    };
                    (vals[up] - vals[dn]) / (2.0 * dx[b])
                };
                sum_sq += grad * grad;
            }
            *slot = sum_sq.sqrt();
            for axis in (0..dim).rev() {
                coords[axis] += 1;
                if coords[axis] < cells[axis] {
                    break;
                }
                coords[axis] = 0;
            }
        }
    });
    Field::new(grid, out).expect("gradient of finite field is finite")
}

/// Per-axis gradient components at cell centers (same stencils as
/// [`gradient_magnitude_cells`]).
pub fn gradient_components_cells(field: &Field) -> Vec<Field> {
    let grid = field.grid().clone();
    let vals = field.values();
    let dim = grid.dim();
    let cells = grid.cells_arr();
    let strides = grid.strides_arr();
    let dx = grid.dx_arr();
    let channel = grid.kind() == GridKind::Channel;
    (0..dim)
        .map(|b| {
            let mut out = vec![0.0; vals.len()];
            par::fill_chunked(&mut out, |start, chunk| {
                let mut coords = grid.coords_of(start);
                for (k, slot) in chunk.iter_mut().enumerate() {
                    let flat = start + k;
                    let cb = coords[b];
                    *slot = if channel && b == 0 && cb == 0 {
                        (vals[flat + strides[0]] - vals[flat]) / dx[0]
                    } else if channel && b == 0 && cb == cells[0] - 1 {
                        (vals[flat] - vals[flat - strides[0]]) / dx[0]
                    } else {
                        let up = if cb + 1 == cells[b] {
                            flat - (cells[b] - 1) * strides[b]
                        } else {
                            flat + strides[b]
                        };
                        let dn = if cb == 0 {
                            flat + (cells[b] - 1) * strides[b]
                        } else {
                            flat - strides[b]
                        };
                        (vals[up] - vals[dn]) / (2.0 * dx[b])
                    };
                    for axis in (0..dim).rev() {
                        coords[axis] += 1;
                        if coords[axis] < cells[axis] {
                            break;
                        }
                        coords[axis] = 0;
                    }
                }
            });
            Field::new(grid.clone(), out).expect("gradient of finite field is finite")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::grid::GridSpec;
    use std::f64::consts::PI;

    #[test]
    fn constant_one_has_unit_norm_for_every_q() {
        let g = GridSpec::torus(&[32, 32]).unwrap();
        let f = Field::constant(g, 1.0);
        for q in [1.0, 2.0, 2.5, 7.0, f64::INFINITY] {
            assert!((lq_norm(&f, q).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn sup_norm_is_max_abs() {
        let g = GridSpec::torus(&[8]).unwrap();
        let mut f = Field::constant(g, 2.0);
        f.values_mut()[3] = -3.0;
        assert_eq!(lq_norm(&f, f64::INFINITY).unwrap(), 3.0);
    }

    #[test]
    fn l2_of_sine_matches_closed_form() {
        let g = GridSpec::torus(&[256]).unwrap();
        let f = Field::from_fn(g, |x| 0.1 * (2.0 * PI * x[0]).sin());
        let n = lq_norm(&f, 2.0).unwrap();
        assert!((n - 0.1 / 2.0f64.sqrt()).abs() < 1e-12, "n = {n}");
    }

    #[test]
    fn rejects_q_below_one() {
        let g = GridSpec::torus(&[8]).unwrap();
        let f = Field::constant(g, 1.0);
        assert!(lq_norm(&f, 0.5).is_err());
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = GridSpec::torus(&[16, 16]).unwrap();
        let f = Field::constant(g, 4.2);
        let gm = gradient_magnitude_cells(&f);
        assert!(gm.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_of_sine_converges_second_order() {
        let err = |n: usize| {
            let g = GridSpec::torus(&[n]).unwrap();
            let f = Field::from_fn(g, |x| (2.0 * PI * x[0]).sin());
            let gm = gradient_magnitude_cells(&f);
            let exact = Field::from_fn(gm.grid().clone(), |x| (2.0 * PI * (2.0 * PI * x[0]).cos()).abs());
            gm.values()
                .iter()
                .zip(exact.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
        };
        let e128 = err(128);
        let e256 = err(256);
        let rate = (e128 / e256).log2();
        assert!(rate > 1.8, "rate = {rate}");
    }

    #[test]
    fn smoothed_l1_approaches_l1() {
        let g = GridSpec::torus(&[64]).unwrap();
        let f = Field::from_fn(g, |x| (2.0 * PI * x[0]).sin());
        let l1 = lq_norm(&f, 1.0).unwrap();
        let j3 = smoothed_l1(&f, 1e-3);
        let j6 = smoothed_l1(&f, 1e-6);
        assert!((j6 - l1).abs() < 1e-9);
        assert!((j3 - l1).abs() < 1e-4);
        assert!(j3 >= l1 && j6 >= l1);
    }
}
