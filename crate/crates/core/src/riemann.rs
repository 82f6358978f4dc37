//! Self-similar Riemann solutions for polynomial fluxes.
//!
//! For `v- < v+` the fan is read off the lower convex envelope of the flux on
//! `[v-, v+]`: bridges are shocks travelling at the chord slope, arcs are
//! rarefactions along which `f'(u) = x/t`. Decreasing data use the upper
//! concave envelope and traverse it from `v-` down to `v+`.

use crate::envelope::{FluxEnvelope, FluxPiece, PiecewiseLinear};
use crate::error::{Error, Result};
use crate::flux::{bisect_sign_change, real_roots, PolyFlux};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WavePiece {
    Shock { speed: f64, u_before: f64, u_after: f64 },
    /// States run from `u_range.0` to `u_range.1` while the speed runs over
    /// `speed_range`; `f'(u) = speed` inside.
    Rarefaction { speed_range: (f64, f64), u_range: (f64, f64) },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiemannFan {
    pub left_state: f64,
    pub right_state: f64,
    pub pieces: Vec<WavePiece>,
    flux: PolyFlux,
    dflux: PolyFlux,
}

pub fn solve_riemann(f: &PolyFlux, v_minus: f64, v_plus: f64) -> Result<RiemannFan> {
    if !v_minus.is_finite() || !v_plus.is_finite() {
        return Err(Error::NonFinite("Riemann states"));
    }
    let dflux = f.derivative();
    let mut fan = RiemannFan { left_state: v_minus, right_state: v_plus, pieces: Vec::new(), flux: f.clone(), dflux };
    if v_minus == v_plus {
        return Ok(fan);
    }
    let increasing = v_minus < v_plus;
    let env = if increasing {
        FluxEnvelope::lower(f, v_minus, v_plus)?
    } else {
        FluxEnvelope::upper(f, v_plus, v_minus)?
    };
    let ordered: Vec<FluxPiece> = if increasing {
        env.pieces().to_vec()
    } else {
        env.pieces()
            .iter()
            .rev()
            .map(|p| match *p {
                FluxPiece::Arc { from, to } => FluxPiece::Arc { from: to, to: from },
                FluxPiece::Bridge { from, to, slope } => FluxPiece::Bridge { from: to, to: from, slope },
            })
            .collect()
    };
    for p in ordered {
        match p {
            FluxPiece::Bridge { from, to, slope } => {
                fan.pieces.push(WavePiece::Shock { speed: slope, u_before: from, u_after: to })
            }
            FluxPiece::Arc { from, to } if from != to => {
                let s0 = fan.dflux.eval(from);
                let s1 = fan.dflux.eval(to);
                fan.pieces.push(WavePiece::Rarefaction { speed_range: (s0, s1), u_range: (from, to) });
            }
            FluxPiece::Arc { .. } => {}
        }
    }
    Ok(fan)
}

impl RiemannFan {
    pub fn flux(&self) -> &PolyFlux {
        &self.flux
    }

    /// Wave speeds bounding the fan, `None` for constant data.
    pub fn speed_span(&self) -> Option<(f64, f64)> {
        let first = self.pieces.first()?;
        let last = self.pieces.last()?;
        let lo = match *first {
            WavePiece::Shock { speed, .. } => speed,
            WavePiece::Rarefaction { speed_range, .. } => speed_range.0,
        };
        let hi = match *last {
            WavePiece::Shock { speed, .. } => speed,
            WavePiece::Rarefaction { speed_range, .. } => speed_range.1,
        };
        Some((lo, hi))
    }

    /// State at similarity variable `xi`; exactly at a shock speed the state
    /// behind the shock (to its right) is returned.
    pub fn sample(&self, xi: f64) -> f64 {
        let mut state = self.left_state;
        for p in &self.pieces {
            match *p {
                WavePiece::Shock { speed, u_before, u_after } => {
                    if xi < speed {
                        return u_before;
                    }
                    state = u_after;
                }
                WavePiece::Rarefaction { speed_range: (s0, s1), u_range: (u0, u1) } => {
                    if xi < s0 {
                        return u0;
                    }
                    if xi < s1 {
                        return self.invert_speed(xi, u0, u1);
                    }
                    state = u1;
                }
            }
        }
        state
    }

    fn invert_speed(&self, xi: f64, u0: f64, u1: f64) -> f64 {
        let g = |u: f64| self.dflux.eval(u) - xi;
        let g0 = g(u0);
        if g0 == 0.0 {
            return u0;
        }
        bisect_sign_change(g, u0.min(u1), u0.max(u1), if u0 < u1 { g0 < 0.0 } else { g(u1) < 0.0 })
    }

    /// `xi R(xi) - f(R(xi))`, a primitive of the fan in `xi`.
    pub fn primitive(&self, xi: f64) -> f64 {
        let u = self.sample(xi);
        xi * u - self.flux.eval(u)
    }

    /// Mean of the fan over `(xi_a, xi_b)`, from the closed-form primitive.
    pub fn average(&self, xi_a: f64, xi_b: f64) -> f64 {
        if self.pieces.is_empty() {
            return self.left_state;
        }
        (self.primitive(xi_b) - self.primitive(xi_a)) / (xi_b - xi_a)
    }
}

pub fn sample_fan(fan: &RiemannFan, xi: f64) -> f64 {
    fan.sample(xi)
}

/// Exact mean of the fan over `(xi_a, xi_b)`. Along rarefactions the
/// integral of `u` in `xi` is `[u f'(u) - f(u)]`, so no quadrature is needed.
pub fn cell_average_fan(fan: &RiemannFan, f: &PolyFlux, xi_a: f64, xi_b: f64) -> f64 {
    debug_assert!(xi_a < xi_b);
    debug_assert_eq!(fan.flux(), f);
    fan.average(xi_a, xi_b)
}

/// Godunov flux: `min f` over `[u_l, u_r]` when `u_l <= u_r`, `max f` over
/// `[u_r, u_l]` otherwise.
pub fn godunov_flux(f: &PolyFlux, u_l: f64, u_r: f64) -> f64 {
    if u_l == u_r {
        return f.eval(u_l);
    }
    let (a, b) = (u_l.min(u_r), u_l.max(u_r));
    GodunovFlux::new(f.clone(), a, b).flux(u_l, u_r)
}

/// Godunov flux with the critical points of `f` precomputed on a state
/// range, so each interface costs a handful of evaluations.
#[derive(Debug, Clone)]
pub struct GodunovFlux {
    flux: PolyFlux,
    critical: Vec<f64>,
    range: (f64, f64),
}

impl GodunovFlux {
    pub fn new(flux: PolyFlux, lo: f64, hi: f64) -> Self {
        let critical = real_roots(&flux.derivative(), lo, hi);
        Self { flux, critical, range: (lo, hi) }
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn flux(&self, u_l: f64, u_r: f64) -> f64 {
        let (fl, fr) = (self.flux.eval(u_l), self.flux.eval(u_r));
        if u_l == u_r {
            return fl;
        }
        let (a, b) = (u_l.min(u_r), u_l.max(u_r));
        let lo = self.critical.partition_point(|&c| c <= a);
        let hi = self.critical.partition_point(|&c| c < b);
        let inner = self.critical[lo..hi].iter().map(|&c| self.flux.eval(c));
        if u_l < u_r {
            inner.fold(fl.min(fr), f64::min)
        } else {
            inner.fold(fl.max(fr), f64::max)
        }
    }
}

/// Kunik's value function `P(xi) = sup_{v- <= s <= v+} (s xi - f(s))` for
/// nondecreasing Riemann data, with `P' = R`.
#[derive(Debug, Clone, PartialEq)]
pub struct KunikValue {
    pub v_minus: f64,
    pub v_plus: f64,
    fan: RiemannFan,
    p: PiecewiseLinear,
}

impl KunikValue {
    /// Exact value through the fan: the supremum is attained at `s = R(xi)`.
    pub fn value(&self, xi: f64) -> f64 {
        self.fan.primitive(xi)
    }

    pub fn slope(&self, xi: f64) -> f64 {
        self.fan.sample(xi)
    }

    pub fn fan(&self) -> &RiemannFan {
        &self.fan
    }

    /// Convex piecewise-linear form: the conjugate of a fine interpolant of
    /// the flux envelope. Its own conjugate reproduces that interpolant.
    pub fn piecewise_linear(&self) -> &PiecewiseLinear {
        &self.p
    }
}

pub fn kunik_value(f: &PolyFlux, v_minus: f64, v_plus: f64) -> Result<KunikValue> {
    if v_minus > v_plus {
        return Err(Error::Config(format!(
            "Kunik value requires nondecreasing data, got v- = {v_minus} > v+ = {v_plus}"
        )));
    }
    let fan = solve_riemann(f, v_minus, v_plus)?;
    let p = if v_minus == v_plus {
        PiecewiseLinear::new(vec![(0.0, -f.eval(v_minus))], v_minus, v_minus)?
    } else {
        let env = FluxEnvelope::lower(f, v_minus, v_plus)?;
        let tol = 1e-2 * env.default_tolerance();
        conjugate(&env.to_piecewise_linear(tol)?, v_minus, v_plus)?
    };
    Ok(KunikValue { v_minus, v_plus, fan, p })
}

/// Conjugate of a convex interpolant given on `[s_0, s_m]` (infinite
/// outside): breakpoints at the segment slopes, slopes at the nodes.
fn conjugate(g: &PiecewiseLinear, v_minus: f64, v_plus: f64) -> Result<PiecewiseLinear> {
    let (xs, ys) = (g.xs(), g.ys());
    let mut thetas: Vec<f64> = Vec::with_capacity(xs.len());
    let mut vals: Vec<f64> = Vec::with_capacity(xs.len());
    for k in 0..xs.len() - 1 {
        let theta = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
        if thetas.last().is_some_and(|&last| theta <= last) {
            continue;
        }
        thetas.push(theta);
        vals.push(theta * xs[k] - ys[k]);
    }
    PiecewiseLinear::from_parts(thetas, vals, v_minus, v_plus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::legendre;
    use proptest::prelude::*;

    #[test]
    fn burgers_rarefaction() {
        let fan = solve_riemann(&PolyFlux::burgers(), -1.0, 1.0).unwrap();
        assert_eq!(fan.pieces.len(), 1);
        assert!(matches!(fan.pieces[0], WavePiece::Rarefaction { speed_range: (a, b), .. } if a == -1.0 && b == 1.0));
        // Lax formula oracle for Burgers: u = x / t inside the fan
        for xi in [-0.9, -0.3, 0.0, 0.4, 0.95] {
            assert!((fan.sample(xi) - xi).abs() < 1e-12);
        }
        assert_eq!(fan.sample(-2.0), -1.0);
        assert_eq!(fan.sample(2.0), 1.0);
    }

    #[test]
    fn burgers_shock() {
        let fan = solve_riemann(&PolyFlux::burgers(), 1.0, -1.0).unwrap();
        assert_eq!(fan.pieces, vec![WavePiece::Shock { speed: 0.0, u_before: 1.0, u_after: -1.0 }]);
        assert_eq!(fan.sample(-1e-9), 1.0);
        assert_eq!(fan.sample(0.0), -1.0);
    }

    #[test]
    fn cubic_composite_wave() {
        let fan = solve_riemann(&PolyFlux::cubic(), -1.0, 1.0).unwrap();
        assert_eq!(fan.pieces.len(), 2);
        match fan.pieces[0] {
            WavePiece::Shock { speed, u_before, u_after } => {
                assert_eq!(u_before, -1.0);
                assert!((u_after - 0.5).abs() < 1e-13);
                assert!((speed - 0.75).abs() < 1e-13);
            }
            _ => panic!("expected shock first"),
        }
        match fan.pieces[1] {
            WavePiece::Rarefaction { speed_range, u_range } => {
                assert!((speed_range.0 - 0.75).abs() < 1e-12 && speed_range.1 == 3.0);
                assert!((u_range.0 - 0.5).abs() < 1e-13 && u_range.1 == 1.0);
            }
            _ => panic!("expected rarefaction second"),
        }
        assert_eq!(fan.sample(0.0), -1.0);
        assert!((fan.sample(1.0) - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(fan.sample(-10.0), -1.0);
    }

    #[test]
    fn decreasing_cubic_uses_upper_envelope() {
        let fan = solve_riemann(&PolyFlux::cubic(), 1.0, -1.0).unwrap();
        // mirror of the increasing case: u -> -u, f(-u) = -f(u), xi unchanged
        let inc = solve_riemann(&PolyFlux::cubic(), -1.0, 1.0).unwrap();
        for k in 0..200 {
            let xi = -1.0 + 5.0 * k as f64 / 199.0;
            assert!((fan.sample(xi) + inc.sample(xi)).abs() < 1e-12, "xi = {xi}");
        }
    }

    #[test]
    fn cell_average_examples() {
        let f = PolyFlux::burgers();
        let constant = solve_riemann(&f, 0.3, 0.3).unwrap();
        assert_eq!(cell_average_fan(&constant, &f, -1.0, 2.0), 0.3);
        let rare = solve_riemann(&f, -1.0, 1.0).unwrap();
        assert!(cell_average_fan(&rare, &f, -1.0, 1.0).abs() < 1e-15);

        let f = PolyFlux::cubic();
        let fan = solve_riemann(&f, -1.0, 1.0).unwrap();
        let exact = cell_average_fan(&fan, &f, 0.0, 3.0);
        // midpoint quadrature oracle with step 1e-6
        let n = 3_000_000;
        let step = 3.0 / n as f64;
        let quad: f64 = (0..n).map(|k| fan.sample((k as f64 + 0.5) * step)).sum::<f64>() * step / 3.0;
        assert!((exact - quad).abs() < 1e-8, "{exact} vs {quad}");
    }

    #[test]
    fn godunov_flux_examples() {
        let f = PolyFlux::burgers();
        assert_eq!(godunov_flux(&f, -1.0, 1.0), 0.0);
        assert_eq!(godunov_flux(&f, 1.0, -1.0), 0.5);
        assert_eq!(godunov_flux(&f, 0.7, 0.7), f.eval(0.7));
    }

    #[test]
    fn kunik_examples() {
        let f = PolyFlux::burgers();
        let k = kunik_value(&f, 0.4, 0.4).unwrap();
        for xi in [-2.0, 0.0, 1.5] {
            assert!((k.value(xi) - (0.4 * xi - f.eval(0.4))).abs() < 1e-15);
        }

        let k = kunik_value(&f, -1.0, 1.0).unwrap();
        let direct = |xi: f64| {
            (0..=10_000)
                .map(|j| -1.0 + 2.0 * j as f64 / 10_000.0)
                .map(|s| s * xi - f.eval(s))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        for j in 0..=40 {
            let xi = -2.0 + 4.0 * j as f64 / 40.0;
            let expected = if xi.abs() <= 1.0 { 0.5 * xi * xi } else { xi.abs() - 0.5 };
            assert!((k.value(xi) - expected).abs() < 1e-12);
            assert!((k.value(xi) - direct(xi)).abs() < 1e-7);
            assert!((k.piecewise_linear().value(xi) - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn kunik_slope_is_fan_state() {
        let f = PolyFlux::cubic();
        let k = kunik_value(&f, -1.0, 1.0).unwrap();
        let direct_argmax = |xi: f64| {
            let n = 200_000;
            let mut best = (f64::NEG_INFINITY, 0.0);
            for j in 0..=n {
                let s = -1.0 + 2.0 * j as f64 / n as f64;
                let v = s * xi - f.eval(s);
                if v > best.0 {
                    best = (v, s);
                }
            }
            best.1
        };
        let mut state = 17u64;
        for _ in 0..200 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let xi = -1.0 + 5.0 * ((state >> 11) as f64 / (1u64 << 53) as f64);
            if (xi - 0.75).abs() < 1e-6 {
                continue;
            }
            // derivative of P by centred difference of the exact value
            let h = 1e-7;
            let dp = (k.value(xi + h) - k.value(xi - h)) / (2.0 * h);
            assert!((dp - k.slope(xi)).abs() < 1e-6);
            assert!((k.slope(xi) - direct_argmax(xi)).abs() < 2e-5);
            assert!((k.slope(xi) - sample_fan(k.fan(), xi)).abs() < 1e-9);
        }
    }

    #[test]
    fn kunik_duality_with_envelope() {
        for (f, a, b) in [(PolyFlux::burgers(), -1.0, 1.0), (PolyFlux::cubic(), -1.0, 1.0), (PolyFlux::cubic(), -0.5, 2.0)] {
            let k = kunik_value(&f, a, b).unwrap();
            let env = FluxEnvelope::lower(&f, a, b).unwrap();
            let p = k.piecewise_linear();
            // breakpoints of P correspond to slopes; their conjugate points are the
            // interpolant nodes, where the envelope is exact
            let xs = p.xs();
            for w in xs.windows(2).step_by((xs.len() / 50).max(1)) {
                let s = (p.value(w[1]) - p.value(w[0])) / (w[1] - w[0]);
                let lhs = legendre(p, s).unwrap();
                assert!((lhs - env.value(s)).abs() < 1e-10, "s = {s}");
            }
        }
    }

    #[test]
    fn oleinik_geometry_of_shocks() {
        let f = PolyFlux::new(vec![0.0, 0.3, -0.2, -1.0, 0.0, 0.6]).unwrap();
        for (a, b) in [(-1.5, 1.4), (1.2, -1.3), (-0.4, 1.0)] {
            let fan = solve_riemann(&f, a, b).unwrap();
            for p in &fan.pieces {
                if let WavePiece::Shock { speed, u_before, u_after } = *p {
                    let c = crate::flux::chord(&f, u_before, u_after).unwrap();
                    assert!((c.slope - speed).abs() < 1e-12);
                    for j in 1..100 {
                        let s = u_before + (u_after - u_before) * j as f64 / 100.0;
                        let gap = f.eval(s) - c.value(s);
                        // increasing jumps keep the graph above the chord, decreasing below
                        if u_before < u_after {
                            assert!(gap >= -1e-12);
                        } else {
                            assert!(gap <= 1e-12);
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn fan_is_monotone_and_consistent(c in prop::collection::vec(-1.0..1.0f64, 2..6), a in -2.0..2.0f64, b in -2.0..2.0f64) {
            let mut coeffs = vec![0.0];
            coeffs.extend(c);
            let f = PolyFlux::new(coeffs).unwrap();
            let fan = solve_riemann(&f, a, b).unwrap();
            let (lo, hi) = fan.speed_span().unwrap_or((0.0, 0.0));
            let mut prev = fan.sample(lo - 1.0);
            prop_assert_eq!(prev, a);
            for k in 0..=1000 {
                let xi = lo - 0.5 + (hi - lo + 1.0) * k as f64 / 1000.0;
                let u = fan.sample(xi);
                if a < b { prop_assert!(u >= prev - 1e-12); } else { prop_assert!(u <= prev + 1e-12); }
                prev = u;
            }
            prop_assert_eq!(fan.sample(hi + 1.0), b);
            // Godunov flux agrees with f(R(0)) away from a shock sitting at 0
            let on_shock = fan.pieces.iter().any(|p| matches!(*p, WavePiece::Shock { speed, .. } if speed.abs() < 1e-9));
            if !on_shock {
                let g = godunov_flux(&f, a, b);
                prop_assert!((g - f.eval(fan.sample(0.0))).abs() <= 1e-9 * (1.0 + g.abs()));
            }
            prop_assert_eq!(godunov_flux(&f, a, a), f.eval(a));
        }
    }
}
