//! Monotone finite-volume schemes: 1-D Godunov and Lax-Friedrichs with
//! constant far-field ghost states, and an unsplit 2-D Lax-Friedrichs scheme.
//!
//! The grid grows by one cell on a side whenever the boundary cell differs
//! from its ghost state, so far-field influence is exact rather than
//! truncated. The time step is fixed from the initial bound `M`; the maximum
//! principle keeps it admissible for the whole run.

use crate::error::{Error, Result};
use crate::field::{CellField, Field2D};
use crate::flux::{lipschitz_bound, PolyFlux};
use crate::lyapunov::{DecayReport, Observer};
use crate::riemann::GodunovFlux;

/// Upper limit on `dt * Lip / h`.
pub const CFL_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Godunov,
    LaxFriedrichs,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "godunov" => Ok(Scheme::Godunov),
            "lax_friedrichs" | "lax-friedrichs" | "lf" => Ok(Scheme::LaxFriedrichs),
            other => Err(Error::Config(format!("unknown scheme {other:?}"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Godunov => "godunov",
            Scheme::LaxFriedrichs => "lax_friedrichs",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub cfl_ratio: f64,
    pub t_end: f64,
    pub observer_stride: usize,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, cfl_ratio: f64, t_end: f64, observer_stride: usize) -> Result<Self> {
        if !(cfl_ratio > 0.0 && cfl_ratio < CFL_LIMIT) {
            return Err(Error::Config(format!("cfl_ratio must lie in (0, {CFL_LIMIT}), got {cfl_ratio}")));
        }
        if !(t_end >= 0.0) || !t_end.is_finite() {
            return Err(Error::Config(format!("t_end must be finite and nonnegative, got {t_end}")));
        }
        if observer_stride == 0 {
            return Err(Error::Config("observer_stride must be positive".into()));
        }
        Ok(Self { scheme, cfl_ratio, t_end, observer_stride })
    }
}

fn check_cfl(ratio: f64) -> Result<()> {
    if ratio < CFL_LIMIT {
        Ok(())
    } else {
        Err(Error::Cfl { ratio, limit: CFL_LIMIT })
    }
}

fn lax_friedrichs(f: &PolyFlux, lambda: f64, ul: f64, ur: f64) -> f64 {
    0.5 * (f.eval(ul) + f.eval(ur)) - 0.5 / lambda * (ur - ul)
}

/// One conservative update with numerical flux `nf` and `lambda = dt / h`.
fn advance(field: &CellField, lambda: f64, nf: impl Fn(f64, f64) -> f64) -> CellField {
    let (um, up) = (field.u_minus(), field.u_plus());
    let v = field.values();
    let (grow_left, grow_right) = match (v.first(), v.last()) {
        (Some(&first), Some(&last)) => (first != um, last != up),
        _ => (um != up, um != up),
    };
    let w = field.widened(grow_left as usize, grow_right as usize);
    let vals = w.values();
    let m = vals.len();
    let state = |k: usize| if k == 0 { um } else if k > m { up } else { vals[k - 1] };
    let faces: Vec<f64> = (0..=m).map(|k| nf(state(k), state(k + 1))).collect();
    let next = (0..m).map(|j| vals[j] - lambda * (faces[j + 1] - faces[j])).collect();
    w.with_values(next).expect("monotone update keeps values finite")
}

/// Single step of size `dt`. The CFL ratio is checked against the field's
/// current bound.
pub fn step(field: &CellField, f: &PolyFlux, dt: f64, scheme: Scheme) -> Result<CellField> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let m = field.bound();
    let lambda = dt / field.h();
    check_cfl(lambda * lipschitz_bound(f, -m, m))?;
    Ok(match scheme {
        Scheme::Godunov => {
            let g = GodunovFlux::new(f.clone(), -m, m);
            advance(field, lambda, |a, b| g.flux(a, b))
        }
        Scheme::LaxFriedrichs => advance(field, lambda, |a, b| lax_friedrichs(f, lambda, a, b)),
    })
}

/// Number of full steps and the length of the trailing partial step.
fn schedule(t_end: f64, dt: f64) -> (usize, f64) {
    if t_end <= 0.0 {
        return (0, 0.0);
    }
    let full = (t_end / dt).floor();
    let rest = t_end - full * dt;
    if rest <= 1e-12 * t_end {
        (full as usize, 0.0)
    } else {
        (full as usize, rest)
    }
}

enum Kernel {
    Godunov(GodunovFlux),
    LaxFriedrichs(PolyFlux),
}

/// Step-by-step 1-D evolution with a fixed time step.
pub struct Evolution {
    field: CellField,
    kernel: Kernel,
    h: f64,
    dt: f64,
    full_steps: usize,
    tail: f64,
    steps_taken: usize,
    t_end: f64,
}

impl Evolution {
    pub fn new(initial: CellField, f: &PolyFlux, cfg: &SchemeConfig) -> Result<Self> {
        let m = initial.bound();
        let h = initial.h();
        let lip = lipschitz_bound(f, -m, m);
        let dt = if lip > 0.0 { cfg.cfl_ratio * h / lip } else { cfg.t_end.max(h) };
        let (full_steps, tail) = schedule(cfg.t_end, dt);
        let kernel = match cfg.scheme {
            Scheme::Godunov => Kernel::Godunov(GodunovFlux::new(f.clone(), -m, m)),
            Scheme::LaxFriedrichs => Kernel::LaxFriedrichs(f.clone()),
        };
        Ok(Self { field: initial, kernel, h, dt, full_steps, tail, steps_taken: 0, t_end: cfg.t_end })
    }

    pub fn field(&self) -> &CellField {
        &self.field
    }

    pub fn into_field(self) -> CellField {
        self.field
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn total_steps(&self) -> usize {
        self.full_steps + usize::from(self.tail > 0.0)
    }

    pub fn time(&self) -> f64 {
        if self.is_finished() {
            self.t_end
        } else {
            self.steps_taken as f64 * self.dt
        }
    }

    pub fn is_finished(&self) -> bool {
        self.steps_taken >= self.total_steps()
    }

    /// Takes one step; returns `false` once `t_end` has been reached.
    pub fn advance(&mut self) -> bool {
        if self.is_finished() {
            return false;
        }
        let dt = if self.steps_taken < self.full_steps { self.dt } else { self.tail };
        let lambda = dt / self.h;
        self.field = match &self.kernel {
            Kernel::Godunov(g) => advance(&self.field, lambda, |a, b| g.flux(a, b)),
            Kernel::LaxFriedrichs(f) => advance(&self.field, lambda, |a, b| lax_friedrichs(f, lambda, a, b)),
        };
        self.steps_taken += 1;
        true
    }
}

fn record<F, O: Observer<F>>(report: &mut DecayReport, t: f64, field: &F, observers: &[O]) -> Result<()> {
    let mut row = Vec::new();
    for o in observers {
        row.extend(o.observe(field)?);
    }
    report.push(t, row)
}

fn series_names<F, O: Observer<F>>(observers: &[O]) -> Vec<String> {
    observers.iter().flat_map(|o| o.names()).collect()
}

/// Evolves `initial` to `cfg.t_end`, sampling every observer at `t = 0`,
/// every `observer_stride` steps, and at the final time.
pub fn run<O: Observer<CellField>>(
    initial: CellField,
    f: &PolyFlux,
    cfg: &SchemeConfig,
    observers: &[O],
) -> Result<(CellField, DecayReport)> {
    let mut report = DecayReport::new(series_names(observers));
    let mut evo = Evolution::new(initial, f, cfg)?;
    record(&mut report, 0.0, evo.field(), observers)?;
    while evo.advance() {
        if evo.steps_taken() % cfg.observer_stride == 0 || evo.is_finished() {
            record(&mut report, evo.time(), evo.field(), observers)?;
        }
    }
    Ok((evo.into_field(), report))
}

fn advance_2d(field: &Field2D, fx: &PolyFlux, fy: &PolyFlux, lambda: f64) -> Field2D {
    let (nx, ny) = (field.nx, field.ny);
    let row_nonzero = |iy: usize| (0..nx).any(|ix| field.get(ix, iy) != 0.0);
    let col_nonzero = |ix: usize| (0..ny).any(|iy| field.get(ix, iy) != 0.0);
    let empty = nx == 0 || ny == 0;
    let grow = |b: bool| usize::from(!empty && b);
    let w = field.padded(
        grow(col_nonzero(0)),
        grow(col_nonzero(nx.saturating_sub(1))),
        grow(row_nonzero(0)),
        grow(row_nonzero(ny.saturating_sub(1))),
    );
    let (nx, ny) = (w.nx, w.ny);
    let at = |ix: isize, iy: isize| {
        if ix < 0 || iy < 0 || ix >= nx as isize || iy >= ny as isize {
            0.0
        } else {
            w.get(ix as usize, iy as usize)
        }
    };
    let half = 0.5 * lambda;
    let mut next = Vec::with_capacity(nx * ny);
    for iy in 0..ny as isize {
        for ix in 0..nx as isize {
            let (e, wv, n, s) = (at(ix + 1, iy), at(ix - 1, iy), at(ix, iy + 1), at(ix, iy - 1));
            // Grouped so that swapping x and y permutes commutative operands only.
            let avg = 0.25 * ((e + wv) + (n + s));
            let div = (fx.eval(e) - fx.eval(wv)) + (fy.eval(n) - fy.eval(s));
            next.push(avg - half * div);
        }
    }
    w.with_values(next).expect("monotone update keeps values finite")
}

fn lipschitz_2d(fx: &PolyFlux, fy: &PolyFlux, m: f64) -> f64 {
    lipschitz_bound(fx, -m, m) + lipschitz_bound(fy, -m, m)
}

/// One unsplit Lax-Friedrichs step in 2-D with zero far field.
pub fn step_2d(field: &Field2D, fx: &PolyFlux, fy: &PolyFlux, dt: f64) -> Result<Field2D> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let lambda = dt / field.h;
    check_cfl(lambda * lipschitz_2d(fx, fy, field.bound()))?;
    Ok(advance_2d(field, fx, fy, lambda))
}

/// 2-D analogue of [`run`]; the scheme field of `cfg` is ignored.
pub fn run_2d<O: Observer<Field2D>>(
    initial: Field2D,
    fx: &PolyFlux,
    fy: &PolyFlux,
    cfg: &SchemeConfig,
    observers: &[O],
) -> Result<(Field2D, DecayReport)> {
    let h = initial.h;
    let lip = lipschitz_2d(fx, fy, initial.bound());
    let dt = if lip > 0.0 { cfg.cfl_ratio * h / lip } else { cfg.t_end.max(h) };
    let (full, tail) = schedule(cfg.t_end, dt);
    let total = full + usize::from(tail > 0.0);
    let mut report = DecayReport::new(series_names(observers));
    let mut field = initial;
    record(&mut report, 0.0, &field, observers)?;
    for k in 0..total {
        let this_dt = if k < full { dt } else { tail };
        field = advance_2d(&field, fx, fy, this_dt / h);
        let done = k + 1 == total;
        if (k + 1) % cfg.observer_stride == 0 || done {
            let t = if done { cfg.t_end } else { (k + 1) as f64 * dt };
            record(&mut report, t, &field, observers)?;
        }
    }
    Ok((field, report))
}
