//! Polynomial fluxes and the small amount of calculus the solver needs:
//! evaluation, derivatives, Lipschitz bounds on intervals, chords, and the
//! bitangent slope equation used to track envelope bridges between meshes.

use crate::envelope::FluxEnvelope;
use crate::error::{Error, Result};

/// Highest polynomial degree accepted for a flux.
pub const MAX_DEGREE: usize = 16;

/// Number of initial subintervals used to isolate real roots.
const ROOT_GRID: usize = 1024;
const ROOT_TOL: f64 = 1e-13;

/// A polynomial flux `f(u) = sum_k coeffs[k] u^k`, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFlux {
    coeffs: Vec<f64>,
}

impl PolyFlux {
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Result<Self> {
        let mut coeffs = coeffs.into();
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("flux coefficients"));
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.len() > MAX_DEGREE + 1 {
            return Err(Error::DegreeTooLarge(coeffs.len() - 1));
        }
        Ok(Self { coeffs })
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    /// Burgers flux `u^2 / 2`.
    pub fn burgers() -> Self {
        Self { coeffs: vec![0.0, 0.0, 0.5] }
    }

    /// Cubic flux `u^3`, convex for `u > 0` and concave for `u < 0`.
    pub fn cubic() -> Self {
        Self { coeffs: vec![0.0, 0.0, 0.0, 1.0] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree of the polynomial; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Horner evaluation.
    pub fn eval(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    pub fn derivative(&self) -> PolyFlux {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect::<Vec<_>>();
        PolyFlux::new(coeffs).expect("derivative of a valid polynomial is valid")
    }

    pub fn negated(&self) -> PolyFlux {
        PolyFlux { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    /// Whether all odd-degree coefficients vanish.
    pub fn is_even(&self) -> bool {
        self.coeffs.iter().skip(1).step_by(2).all(|&c| c == 0.0)
    }
}

/// Evaluates `f` at `u`.
pub fn eval(f: &PolyFlux, u: f64) -> f64 {
    f.eval(u)
}

pub fn derivative(f: &PolyFlux) -> PolyFlux {
    f.derivative()
}

/// Real roots of `p` in `[a, b]`, isolated by sign changes on a uniform grid
/// and refined by bisection. Roots of even multiplicity that do not change
/// sign are only reported when they land exactly on a grid node.
pub fn real_roots(p: &PolyFlux, a: f64, b: f64) -> Vec<f64> {
    if p.is_zero() || p.degree() == 0 || !(a < b) {
        return Vec::new();
    }
    let step = (b - a) / ROOT_GRID as f64;
    let node = |k: usize| if k == ROOT_GRID { b } else { a + k as f64 * step };
    let mut roots: Vec<f64> = Vec::new();
    let mut x0 = a;
    let mut p0 = p.eval(a);
    if p0 == 0.0 {
        roots.push(a);
    }
    for k in 1..=ROOT_GRID {
        let x1 = node(k);
        let p1 = p.eval(x1);
        if p1 == 0.0 {
            roots.push(x1);
        } else if p0 != 0.0 && (p0 < 0.0) != (p1 < 0.0) {
            roots.push(bisect_sign_change(|x| p.eval(x), x0, x1, p0 < 0.0));
        }
        x0 = x1;
        p0 = p1;
    }
    roots.dedup();
    roots
}

/// Bisection for a root of `g` on `[lo, hi]` given that `g(lo) < 0` iff
/// `lo_negative`. Stops when the bracket is below `ROOT_TOL` or stalls.
pub(crate) fn bisect_sign_change(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, lo_negative: bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= ROOT_TOL || mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Maximum of `|f'|` over `[a, b]`, taken over the endpoints and the
/// critical points of `f'` inside the interval.
pub fn lipschitz_bound(f: &PolyFlux, a: f64, b: f64) -> f64 {
    debug_assert!(a <= b);
    let d1 = f.derivative();
    let d2 = d1.derivative();
    real_roots(&d2, a, b)
        .into_iter()
        .chain([a, b])
        .map(|u| d1.eval(u).abs())
        .fold(0.0, f64::max)
}

/// The secant of `f` between two states, `y = slope * u + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chord {
    pub left_state: f64,
    pub right_state: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl Chord {
    pub fn value(&self, u: f64) -> f64 {
        self.slope * u + self.intercept
    }
}

/// Chord of `f` between `u_l` and `u_r`; its slope is the Rankine-Hugoniot
/// speed of a discontinuity joining the two states.
pub fn chord(f: &PolyFlux, u_l: f64, u_r: f64) -> Result<Chord> {
    if u_l == u_r {
        return Err(Error::DegenerateStates(u_l));
    }
    let f_l = f.eval(u_l);
    let slope = (f.eval(u_r) - f_l) / (u_r - u_l);
    Ok(Chord { left_state: u_l, right_state: u_r, slope, intercept: f_l - slope * u_l })
}

/// Right-hand side data of the bitangent slope equation between two meshes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitangentOffsets {
    /// Distance between the two mesh centres, `(j - i) h`.
    pub spacing: f64,
    /// Value of the primitive at the left mesh centre.
    pub c_left: f64,
    /// Value of the primitive at the right mesh centre.
    pub c_right: f64,
}

/// Slopes `theta` of bitangents between the primitives of two Riemann fans
/// at time `t`: roots of
/// `spacing * theta + t g_right(theta) - t g_left(theta) = c_right - c_left`,
/// where `g_left`, `g_right` are the lower convex envelopes of `f` on the two
/// state intervals. Only slopes in the intersection of both intervals are
/// admissible; an empty result means no bitangent.
pub fn bitangent_slopes(
    f: &PolyFlux,
    left_states: (f64, f64),
    right_states: (f64, f64),
    offsets: BitangentOffsets,
    t: f64,
) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(Error::Config(format!("bitangent time must be positive, got {t}")));
    }
    let env_left = FluxEnvelope::lower(f, left_states.0, left_states.1)?;
    let env_right = FluxEnvelope::lower(f, right_states.0, right_states.1)?;
    let lo = left_states.0.max(right_states.0);
    let hi = left_states.1.min(right_states.1);
    if lo > hi {
        return Ok(Vec::new());
    }
    let rhs = offsets.c_right - offsets.c_left;
    let g = |theta: f64| {
        offsets.spacing * theta + t * env_right.value(theta) - t * env_left.value(theta) - rhs
    };
    if lo == hi {
        return Ok(if g(lo) == 0.0 { vec![lo] } else { Vec::new() });
    }
    let step = (hi - lo) / ROOT_GRID as f64;
    let mut roots = Vec::new();
    let mut x0 = lo;
    let mut g0 = g(lo);
    if g0 == 0.0 {
        roots.push(lo);
    }
    for k in 1..=ROOT_GRID {
        let x1 = if k == ROOT_GRID { hi } else { lo + k as f64 * step };
        let g1 = g(x1);
        if g1 == 0.0 {
            roots.push(x1);
        } else if g0 != 0.0 && (g0 < 0.0) != (g1 < 0.0) {
            roots.push(bisect_sign_change(g, x0, x1, g0 < 0.0));
        }
        x0 = x1;
        g0 = g1;
    }
    roots.dedup();
    Ok(roots)
}
