//! Grids, cell-averaged fields with constant far-field states, and the
//! meshwise L2 projection (cell averaging).

use std::io::Write;

use crate::envelope::PiecewiseLinear;
use crate::error::{Error, Result};

/// Uniform 1-D grid; cell `j` is `(x_left + j h, x_left + (j + 1) h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub x_left: f64,
    pub h: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(x_left: f64, h: f64, n: usize) -> Result<Self> {
        if !x_left.is_finite() || !(h > 0.0) || !h.is_finite() {
            return Err(Error::Config(format!("invalid grid: x_left = {x_left}, h = {h}")));
        }
        Ok(Self { x_left, h, n })
    }

    /// Grid of `n` cells covering `[a, b]`.
    pub fn covering(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(b > a) || n == 0 {
            return Err(Error::Config(format!("cannot cover [{a}, {b}] with {n} cells")));
        }
        Self::new(a, (b - a) / n as f64, n)
    }

    pub fn face(&self, j: usize) -> f64 {
        self.x_left + j as f64 * self.h
    }

    pub fn center(&self, j: usize) -> f64 {
        self.x_left + (j as f64 + 0.5) * self.h
    }

    pub fn x_right(&self) -> f64 {
        self.face(self.n)
    }

    /// Same spacing with `left` extra cells prepended and `right` appended.
    pub fn widened(&self, left: usize, right: usize) -> Self {
        Self { x_left: self.x_left - left as f64 * self.h, h: self.h, n: self.n + left + right }
    }
}

/// Anything with exact integrals over intervals.
pub trait Integrable {
    fn integral(&self, a: f64, b: f64) -> f64;

    /// Bounds on the values taken on `(a, b)`, when cheaply known; averages
    /// are clamped into them so rounding cannot break monotonicity.
    fn value_range(&self, _a: f64, _b: f64) -> Option<(f64, f64)> {
        None
    }
}

/// Piecewise-constant profile on the line: `values[0]` left of `breaks[0]`,
/// `values[k]` on `(breaks[k-1], breaks[k])`, the last value to the right.
#[derive(Debug, Clone, PartialEq)]
pub struct StepProfile {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl StepProfile {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 || breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("step profile needs sorted breaks and one more value".into()));
        }
        if breaks.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("step profile"));
        }
        Ok(Self { breaks, values })
    }

    /// The pure discontinuity `u-` for `x < at`, `u+` for `x > at`.
    pub fn pure_shock(u_minus: f64, u_plus: f64, at: f64) -> Self {
        Self { breaks: vec![at], values: vec![u_minus, u_plus] }
    }

    pub fn u_minus(&self) -> f64 {
        self.values[0]
    }

    pub fn u_plus(&self) -> f64 {
        *self.values.last().expect("at least one value")
    }

    pub fn value(&self, x: f64) -> f64 {
        self.values[self.breaks.partition_point(|&b| b <= x)]
    }
}

impl Integrable for StepProfile {
    fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        let mut x = a;
        let mut k = self.breaks.partition_point(|&br| br <= a);
        while x < b {
            let next = if k < self.breaks.len() { self.breaks[k].min(b) } else { b };
            total += self.values[k] * (next - x);
            x = next;
            k += 1;
        }
        total
    }

    fn value_range(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        let k0 = self.breaks.partition_point(|&br| br <= a);
        let k1 = self.breaks.partition_point(|&br| br < b);
        let vals = &self.values[k0..=k1.max(k0)];
        Some(vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))))
    }
}

impl Integrable for PiecewiseLinear {
    fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut cuts = vec![a];
        cuts.extend(self.xs().iter().copied().filter(|&x| x > a && x < b));
        cuts.push(b);
        cuts.windows(2).map(|w| 0.5 * (self.value(w[0]) + self.value(w[1])) * (w[1] - w[0])).sum()
    }
}

/// Cell averages on a uniform grid, extended by `u_minus` to the left of the
/// grid and `u_plus` to the right.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    grid: Grid1D,
    values: Vec<f64>,
    u_minus: f64,
    u_plus: f64,
}

impl CellField {
    pub fn new(grid: Grid1D, values: Vec<f64>, u_minus: f64, u_plus: f64) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::Config(format!("{} values for {} cells", values.len(), grid.n)));
        }
        if values.iter().chain([&u_minus, &u_plus]).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cell field"));
        }
        Ok(Self { grid, values, u_minus, u_plus })
    }

    /// Field with no cells: the pure step at `grid.x_left`.
    pub fn pure_step(u_minus: f64, u_plus: f64, at: f64, h: f64) -> Result<Self> {
        Self::new(Grid1D::new(at, h, 0)?, Vec::new(), u_minus, u_plus)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn u_minus(&self) -> f64 {
        self.u_minus
    }

    pub fn u_plus(&self) -> f64 {
        self.u_plus
    }

    pub fn h(&self) -> f64 {
        self.grid.h
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid, values, self.u_minus, self.u_plus)
    }

    pub fn value_at(&self, x: f64) -> f64 {
        if x < self.grid.x_left {
            return self.u_minus;
        }
        let j = ((x - self.grid.x_left) / self.grid.h).floor() as usize;
        self.values.get(j).copied().unwrap_or(self.u_plus)
    }

    /// `max(|u-|, |u+|, max |u_j|)`.
    pub fn bound(&self) -> f64 {
        self.values.iter().chain([&self.u_minus, &self.u_plus]).fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Smallest and largest value including the far-field states.
    pub fn range(&self) -> (f64, f64) {
        self.values.iter().chain([&self.u_minus, &self.u_plus]).fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), &v| (lo.min(v), hi.max(v)),
        )
    }

    /// Whether values are nondecreasing (or nonincreasing, for `u- > u+`)
    /// across the grid including the ghost states.
    pub fn is_monotone(&self) -> bool {
        let seq: Vec<f64> = std::iter::once(self.u_minus)
            .chain(self.values.iter().copied())
            .chain(std::iter::once(self.u_plus))
            .collect();
        if self.u_minus <= self.u_plus {
            seq.windows(2).all(|w| w[0] <= w[1])
        } else {
            seq.windows(2).all(|w| w[0] >= w[1])
        }
    }

    /// Primitive `x -> int_{x_left}^x u`, with tail slopes `u-` and `u+`.
    pub fn primitive(&self) -> PiecewiseLinear {
        let g = &self.grid;
        let mut xs = Vec::with_capacity(g.n + 1);
        let mut ys = Vec::with_capacity(g.n + 1);
        let mut acc = 0.0;
        xs.push(g.x_left);
        ys.push(0.0);
        for (j, v) in self.values.iter().enumerate() {
            acc += v * g.h;
            xs.push(g.face(j + 1));
            ys.push(acc);
        }
        PiecewiseLinear::from_parts(xs, ys, self.u_minus, self.u_plus).expect("grid faces are increasing")
    }

    /// Same field on a grid widened by ghost-valued cells.
    pub fn widened(&self, left: usize, right: usize) -> Self {
        let mut values = Vec::with_capacity(self.values.len() + left + right);
        values.extend(std::iter::repeat_n(self.u_minus, left));
        values.extend_from_slice(&self.values);
        values.extend(std::iter::repeat_n(self.u_plus, right));
        Self { grid: self.grid.widened(left, right), values, u_minus: self.u_minus, u_plus: self.u_plus }
    }

    /// Writes `x_center,u` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x_center,u")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(out, "{:.16e},{:.16e}", self.grid.center(j), v)?;
        }
        Ok(())
    }
}

impl Integrable for CellField {
    fn integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let g = &self.grid;
        let (xl, xr) = (g.x_left, g.x_right());
        let mut total = self.u_minus * (b.min(xl) - a).max(0.0) + self.u_plus * (b - a.max(xr)).max(0.0);
        let (lo, hi) = (a.max(xl), b.min(xr));
        if lo < hi {
            let j0 = (((lo - xl) / g.h).floor() as usize).min(g.n - 1);
            let j1 = ((((hi - xl) / g.h).ceil() as usize).max(j0 + 1)).min(g.n);
            for j in j0..j1 {
                let overlap = hi.min(g.face(j + 1)) - lo.max(g.face(j));
                if overlap > 0.0 {
                    total += self.values[j] * overlap;
                }
            }
        }
        total
    }
}

/// Cell means of `w` on `grid`; exact whenever `w` integrates exactly.
pub fn mesh_project(w: &impl Integrable, grid: Grid1D, u_minus: f64, u_plus: f64) -> Result<CellField> {
    let values = (0..grid.n)
        .map(|j| {
            let (a, b) = (grid.face(j), grid.face(j + 1));
            let mean = w.integral(a, b) / (b - a);
            match w.value_range(a, b) {
                Some((lo, hi)) => mean.clamp(lo, hi),
                None => mean,
            }
        })
        .collect();
    CellField::new(grid, values, u_minus, u_plus)
}

/// Cell averages on a uniform 2-D grid, zero outside. Row-major with the
/// x index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub x_left: f64,
    pub y_bottom: f64,
    values: Vec<f64>,
}

impl Field2D {
    pub fn new(nx: usize, ny: usize, h: f64, x_left: f64, y_bottom: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != nx * ny {
            return Err(Error::Config(format!("{} values for a {nx}x{ny} grid", values.len())));
        }
        if !(h > 0.0) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("2-D field"));
        }
        Ok(Self { nx, ny, h, x_left, y_bottom, values })
    }

    /// Field sampled from cell averages given by `avg(x0, x1, y0, y1)`.
    pub fn from_cell_averages(
        nx: usize,
        ny: usize,
        h: f64,
        x_left: f64,
        y_bottom: f64,
        avg: impl Fn(f64, f64, f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                let x0 = x_left + ix as f64 * h;
                let y0 = y_bottom + iy as f64 * h;
                values.push(avg(x0, x0 + h, y0, y0 + h));
            }
        }
        Self::new(nx, ny, h, x_left, y_bottom, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    pub fn bound(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn range(&self) -> (f64, f64) {
        self.values.iter().fold((0.0f64, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.nx, self.ny, self.h, self.x_left, self.y_bottom, values)
    }

    /// Transposed field (x and y swapped).
    pub fn transposed(&self) -> Self {
        let mut values = vec![0.0; self.values.len()];
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                values[ix * self.ny + iy] = self.get(ix, iy);
            }
        }
        Self { nx: self.ny, ny: self.nx, h: self.h, x_left: self.y_bottom, y_bottom: self.x_left, values }
    }

    /// Pads with zero cells on the given sides.
    pub fn padded(&self, left: usize, right: usize, bottom: usize, top: usize) -> Self {
        let nx = self.nx + left + right;
        let ny = self.ny + bottom + top;
        let mut values = vec![0.0; nx * ny];
        for iy in 0..self.ny {
            let row = (iy + bottom) * nx + left;
            values[row..row + self.nx].copy_from_slice(&self.values[iy * self.nx..(iy + 1) * self.nx]);
        }
        Self {
            nx,
            ny,
            h: self.h,
            x_left: self.x_left - left as f64 * self.h,
            y_bottom: self.y_bottom - bottom as f64 * self.h,
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_project_examples() {
        let grid = Grid1D::covering(0.0, 1.0, 2).unwrap();
        let ramp = PiecewiseLinear::new(vec![(0.0, 0.0), (1.0, 1.0)], 1.0, 1.0).unwrap();
        let field = mesh_project(&ramp, grid, 0.0, 1.0).unwrap();
        assert_eq!(field.values(), &[0.25, 0.75]);

        let fine = CellField::new(Grid1D::covering(0.0, 1.0, 4).unwrap(), vec![1.0, 1.0, 3.0, 3.0], 1.0, 3.0).unwrap();
        let same = mesh_project(&fine, *fine.grid(), 1.0, 3.0).unwrap();
        assert_eq!(same, fine);
        let coarse = mesh_project(&fine, grid, 1.0, 3.0).unwrap();
        assert_eq!(coarse.values(), &[1.0, 3.0]);
    }

    #[test]
    fn averaging_preserves_monotonicity() {
        let w = StepProfile::new(vec![-0.3, 0.1, 0.55], vec![-1.0, -0.2, 0.4, 1.0]).unwrap();
        let field = mesh_project(&w, Grid1D::covering(-1.0, 1.0, 7).unwrap(), -1.0, 1.0).unwrap();
        assert!(field.is_monotone());
    }

    #[test]
    fn cell_field_integral_includes_ghosts() {
        let f = CellField::new(Grid1D::covering(0.0, 2.0, 2).unwrap(), vec![3.0, 5.0], -1.0, 2.0).unwrap();
        assert_eq!(f.integral(-1.0, 3.0), -1.0 + 3.0 + 5.0 + 2.0);
        assert_eq!(f.integral(0.5, 1.5), 1.5 + 2.5);
        assert_eq!(f.value_at(-0.1), -1.0);
        assert_eq!(f.value_at(1.2), 5.0);
        assert_eq!(f.value_at(2.0), 2.0);
    }

    #[test]
    fn primitive_has_far_field_slopes() {
        let f = CellField::new(Grid1D::covering(0.0, 2.0, 2).unwrap(), vec![3.0, 5.0], -1.0, 2.0).unwrap();
        let p = f.primitive();
        assert_eq!(p.ys(), &[0.0, 3.0, 8.0]);
        assert_eq!((p.left_slope(), p.right_slope()), (-1.0, 2.0));
    }

    #[test]
    fn padding_and_transpose() {
        let f = Field2D::new(2, 1, 0.5, 0.0, 0.0, vec![1.0, 2.0]).unwrap();
        let p = f.padded(1, 0, 1, 1);
        assert_eq!((p.nx, p.ny), (3, 3));
        assert_eq!(p.get(1, 1), 1.0);
        assert_eq!(p.get(2, 1), 2.0);
        assert_eq!(p.x_left, -0.5);
        let t = f.transposed();
        assert_eq!((t.nx, t.ny), (1, 2));
        assert_eq!(t.get(0, 1), 2.0);
    }
}
