//! Reproducible initial data: steps, Riemann data and seeded random
//! bounded-variation profiles that coincide with the far-field step outside
//! a bounded support.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{mesh_project, CellField, Field2D, Grid1D, StepProfile};

/// Step from `u_minus` to `u_plus` at `at`, averaged onto `grid`.
pub fn step(grid: Grid1D, u_minus: f64, u_plus: f64, at: f64) -> Result<CellField> {
    mesh_project(&StepProfile::pure_shock(u_minus, u_plus, at), grid, u_minus, u_plus)
}

/// Riemann data with the jump at `x = 0`.
pub fn riemann(grid: Grid1D, v_minus: f64, v_plus: f64) -> Result<CellField> {
    step(grid, v_minus, v_plus, 0.0)
}

/// Random piecewise-constant profile: `u_minus` left of `support.0`,
/// `u_plus` right of `support.1`, and between 1 and 16 pieces with values
/// uniform in `[-amplitude, amplitude]` in between.
pub fn random_bv_profile(seed: u64, amplitude: f64, support: (f64, f64), u_minus: f64, u_plus: f64) -> Result<StepProfile> {
    let (a, b) = support;
    if !(b > a) || !(amplitude >= 0.0) {
        return Err(Error::Config(format!("invalid random data: support ({a}, {b}), amplitude {amplitude}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pieces = rng.gen_range(1..=16);
    let mut breaks: Vec<f64> = (1..pieces).map(|_| rng.gen_range(a..b)).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut all = vec![a];
    all.extend(breaks);
    all.push(b);
    let mut values = vec![u_minus];
    values.extend((1..all.len()).map(|_| if amplitude > 0.0 { rng.gen_range(-amplitude..=amplitude) } else { 0.0 }));
    values.push(u_plus);
    StepProfile::new(all, values)
}

/// [`random_bv_profile`] averaged onto `grid`.
pub fn random_bv(
    seed: u64,
    amplitude: f64,
    support: (f64, f64),
    grid: Grid1D,
    u_minus: f64,
    u_plus: f64,
) -> Result<CellField> {
    let profile = random_bv_profile(seed, amplitude, support, u_minus, u_plus)?;
    mesh_project(&profile, grid, u_minus, u_plus)
}

/// Rescales a field with zero far field to the given L1 norm.
pub fn scale_to_l1(u: &CellField, l1: f64) -> Result<CellField> {
    let norm = u.values().iter().map(|v| v.abs()).sum::<f64>() * u.h();
    if norm == 0.0 || u.u_minus() != 0.0 || u.u_plus() != 0.0 {
        return Err(Error::Config("rescaling needs a nonzero field with zero far field".into()));
    }
    u.with_values(u.values().iter().map(|v| v * l1 / norm).collect())
}

/// Random sum of 1 to 6 axis-aligned boxes inside `[a, b]^2`, with heights
/// in `[-amplitude, amplitude]`, averaged exactly on an `n x n` grid
/// covering the square.
pub fn random_boxes_2d(seed: u64, amplitude: f64, support: (f64, f64), n: usize) -> Result<Field2D> {
    let (a, b) = support;
    if !(b > a) || n == 0 {
        return Err(Error::Config(format!("invalid 2-D data: support ({a}, {b}), n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.gen_range(1..=6);
    let boxes: Vec<[f64; 5]> = (0..count)
        .map(|_| {
            let (x0, x1) = ordered(rng.gen_range(a..b), rng.gen_range(a..b));
            let (y0, y1) = ordered(rng.gen_range(a..b), rng.gen_range(a..b));
            [x0, x1, y0, y1, rng.gen_range(-amplitude..=amplitude)]
        })
        .collect();
    let h = (b - a) / n as f64;
    Field2D::from_cell_averages(n, n, h, a, a, |cx0, cx1, cy0, cy1| {
        boxes
            .iter()
            .map(|&[x0, x1, y0, y1, v]| {
                let ox = (cx1.min(x1) - cx0.max(x0)).max(0.0);
                let oy = (cy1.min(y1) - cy0.max(y0)).max(0.0);
                v * ox * oy
            })
            .sum::<f64>()
            / (h * h)
    })
}

fn ordered(p: f64, q: f64) -> (f64, f64) {
    if p <= q {
        (p, q)
    } else {
        (q, p)
    }
}

/// Rescales a 2-D field to the given L1 norm.
pub fn scale_to_l1_2d(u: &Field2D, l1: f64) -> Result<Field2D> {
    let norm = u.values().iter().map(|v| v.abs()).sum::<f64>() * u.cell_area();
    if norm == 0.0 {
        return Err(Error::Config("cannot rescale a zero field".into()));
    }
    u.with_values(u.values().iter().map(|v| v * l1 / norm).collect())
}
