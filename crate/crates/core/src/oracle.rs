//! Independent references: brute-force isotonic projection, closed-form
//! Riemann solutions, and log-log convergence-rate fits.

use crate::error::{Error, Result};
use crate::field::{CellField, Grid1D};
use crate::flux::PolyFlux;
use crate::riemann::solve_riemann;
use crate::solver::{Evolution, Scheme, SchemeConfig};

/// Largest input accepted by [`monotone_projection_bruteforce`].
pub const BRUTE_FORCE_MAX: usize = 14;

/// Nondecreasing least-squares fit by enumerating all `2^(n-1)` partitions
/// into consecutive blocks (free ends, no far-field constraint).
pub fn monotone_projection_bruteforce(values: &[f64], cell_width: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n > BRUTE_FORCE_MAX {
        return Err(Error::OracleSize { got: n });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut candidate = vec![0.0; n];
    for mask in 0u32..(1 << (n - 1)) {
        // Bit k set: a block boundary after cell k.
        let mut start = 0;
        let mut prev_mean = f64::NEG_INFINITY;
        let mut feasible = true;
        for end in 1..=n {
            if end == n || mask & (1 << (end - 1)) != 0 {
                let mean = values[start..end].iter().sum::<f64>() / (end - start) as f64;
                if mean < prev_mean {
                    feasible = false;
                    break;
                }
                candidate[start..end].fill(mean);
                prev_mean = mean;
                start = end;
            }
        }
        if !feasible {
            continue;
        }
        let cost: f64 = values.iter().zip(&candidate).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * cell_width;
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, candidate.clone()));
        }
    }
    Ok(best.expect("the single-block partition is always feasible").1)
}

/// Canonical Riemann problems with closed-form solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticCase {
    /// Burgers, states `1 | -1`: stationary shock.
    BurgersShock,
    /// Burgers, states `-1 | 1`: centred rarefaction.
    BurgersRarefaction,
    /// `u^3`, states `-1 | 1`: shock to `1/2` at speed `3/4`, then rarefaction.
    CubicComposite,
}

impl AnalyticCase {
    pub const ALL: [AnalyticCase; 3] =
        [AnalyticCase::BurgersShock, AnalyticCase::BurgersRarefaction, AnalyticCase::CubicComposite];

    pub fn flux(&self) -> PolyFlux {
        match self {
            AnalyticCase::BurgersShock | AnalyticCase::BurgersRarefaction => PolyFlux::burgers(),
            AnalyticCase::CubicComposite => PolyFlux::cubic(),
        }
    }

    /// `(u-, u+)`.
    pub fn states(&self) -> (f64, f64) {
        match self {
            AnalyticCase::BurgersShock => (1.0, -1.0),
            AnalyticCase::BurgersRarefaction | AnalyticCase::CubicComposite => (-1.0, 1.0),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AnalyticCase::BurgersShock => "burgers_shock",
            AnalyticCase::BurgersRarefaction => "burgers_rarefaction",
            AnalyticCase::CubicComposite => "cubic_composite",
        }
    }
}

impl std::str::FromStr for AnalyticCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AnalyticCase::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown analytic case {s:?}")))
    }
}

/// Exact state at `(t, x)`, `t > 0`.
pub fn analytic_solution(case: AnalyticCase, t: f64, x: f64) -> f64 {
    let xi = x / t;
    match case {
        AnalyticCase::BurgersShock => {
            if xi < 0.0 {
                1.0
            } else {
                -1.0
            }
        }
        AnalyticCase::BurgersRarefaction => xi.clamp(-1.0, 1.0),
        AnalyticCase::CubicComposite => {
            if xi < 0.75 {
                -1.0
            } else if xi <= 3.0 {
                (xi / 3.0).sqrt()
            } else {
                1.0
            }
        }
    }
}

/// Least-squares line through `(log h, log error)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub mesh_sizes: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
}

pub fn fit_rate(mesh_sizes: &[f64], errors: &[f64]) -> Result<RateFit> {
    if mesh_sizes.len() != errors.len()
        || mesh_sizes.len() < 3
        || mesh_sizes.iter().chain(errors).any(|v| !(*v > 0.0) || !v.is_finite())
    {
        return Err(Error::RateFitInput);
    }
    let xs: Vec<f64> = mesh_sizes.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::RateFitInput);
    }
    let slope = sxy / sxx;
    Ok(RateFit { mesh_sizes: mesh_sizes.to_vec(), errors: errors.to_vec(), slope, intercept: my - slope * mx })
}

/// L1 error at `t_end` of a scheme started from the Riemann data of `case`,
/// against exact cell averages of the self-similar solution. The initial
/// jump sits at the centre of a cell, so no mesh aligns with it.
pub fn riemann_l1_error(case: AnalyticCase, h: f64, t_end: f64, cfl: f64, scheme: Scheme) -> Result<f64> {
    let (um, up) = case.states();
    let f = case.flux();
    let grid = Grid1D::new(-0.5 * h, h, 1)?;
    let initial = CellField::new(grid, vec![0.5 * (um + up)], um, up)?;
    let cfg = SchemeConfig::new(scheme, cfl, t_end, 1)?;
    let mut evo = Evolution::new(initial, &f, &cfg)?;
    while evo.advance() {}
    let fan = solve_riemann(&f, um, up)?;
    let u = evo.field();
    let g = u.grid();
    let err: f64 = (0..g.n)
        .map(|j| {
            let exact = fan.average(g.face(j) / t_end, g.face(j + 1) / t_end);
            (u.values()[j] - exact).abs()
        })
        .sum();
    Ok(err * h)
}

/// Convergence study over `mesh_sizes` with a rate fit.
pub fn convergence_study(case: AnalyticCase, mesh_sizes: &[f64], t_end: f64, cfl: f64, scheme: Scheme) -> Result<RateFit> {
    let errors = mesh_sizes
        .iter()
        .map(|&h| riemann_l1_error(case, h, t_end, cfl, scheme))
        .collect::<Result<Vec<_>>>()?;
    fit_rate(mesh_sizes, &errors)
}

/// Bisection for the L1-ball threshold, kept as a reference for the sorted
/// closed form.
pub fn l1ball_threshold_bisection(values: &[f64], cell_volume: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveRadius(r));
    }
    let mass = |s: f64| values.iter().map(|v| (v.abs() - s).max(0.0)).sum::<f64>() * cell_volume;
    if mass(0.0) <= r {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::chord;

    #[test]
    fn bruteforce_examples() {
        assert_eq!(monotone_projection_bruteforce(&[1.0, 0.0], 1.0).unwrap(), vec![0.5, 0.5]);
        assert_eq!(monotone_projection_bruteforce(&[0.0, 1.0, 1.0], 1.0).unwrap(), vec![0.0, 1.0, 1.0]);
        assert_eq!(monotone_projection_bruteforce(&[3.0, 1.0, 2.0], 1.0).unwrap(), vec![2.0, 2.0, 2.0]);
        assert!(matches!(monotone_projection_bruteforce(&[0.0; 15], 1.0), Err(Error::OracleSize { got: 15 })));
    }

    #[test]
    fn analytic_examples() {
        assert_eq!(analytic_solution(AnalyticCase::BurgersRarefaction, 1.0, 0.0), 0.0);
        assert_eq!(analytic_solution(AnalyticCase::CubicComposite, 1.0, 3.5), 1.0);
        let just_right = analytic_solution(AnalyticCase::CubicComposite, 2.0, 1.5);
        assert!((just_right - 0.5).abs() < 1e-15);
        assert_eq!(analytic_solution(AnalyticCase::CubicComposite, 2.0, 1.4999), -1.0);
    }

    #[test]
    fn analytic_discontinuities_are_admissible() {
        // Rankine-Hugoniot speeds and Oleinik: the flux lies above the chord
        // for increasing jumps and below it for decreasing ones.
        let cases = [(PolyFlux::burgers(), 1.0, -1.0, 0.0), (PolyFlux::cubic(), -1.0, 0.5, 0.75)];
        for (f, ul, ur, speed) in cases {
            let c = chord(&f, ul, ur).unwrap();
            assert!((c.slope - speed).abs() < 1e-15);
            for k in 1..100 {
                let s = ul + (ur - ul) * k as f64 / 100.0;
                let gap = f.eval(s) - c.value(s);
                if ul < ur {
                    assert!(gap >= -1e-15);
                } else {
                    assert!(gap <= 1e-15);
                }
            }
        }
    }

    #[test]
    fn fit_rate_examples() {
        let h = [0.1, 0.05, 0.025, 0.0125];
        let lin = fit_rate(&h, &h).unwrap();
        assert!((lin.slope - 1.0).abs() < 1e-12);
        let root: Vec<f64> = h.iter().map(|x| x.sqrt()).collect();
        assert!((fit_rate(&h, &root).unwrap().slope - 0.5).abs() < 1e-12);
        assert_eq!(fit_rate(&h[..2], &h[..2]), Err(Error::RateFitInput));
        assert_eq!(fit_rate(&h, &[0.1, 0.0, 0.1, 0.1]), Err(Error::RateFitInput));
    }

    #[test]
    fn bisection_matches_closed_form() {
        let v = [0.3, -1.2, 0.7, 2.0, -0.1];
        let a = crate::project::l1ball_threshold(&v, 0.5, 1.0).unwrap();
        let b = l1ball_threshold_bisection(&v, 0.5, 1.0).unwrap();
        assert!((a - b).abs() < 1e-14);
    }
}
