use conslaw_core::data::{random_bv, riemann};
use conslaw_core::lyapunov::{audit_decay, TOL_ABS, TOL_REL};
use conslaw_core::{
    chord, godunov_flux, run, solve_riemann, Diagnostic, Evolution, Grid1D, PolyFlux, Scheme, SchemeConfig,
    WavePiece,
};
use proptest::prelude::*;

#[test]
fn zero_horizon_records_only_the_initial_sample() {
    let grid = Grid1D::covering(-1.0, 1.0, 20).unwrap();
    let a = riemann(grid, -1.0, 1.0).unwrap();
    let cfg = SchemeConfig::new(Scheme::Godunov, 0.45, 0.0, 1).unwrap();
    let (end, report) = run(a.clone(), &PolyFlux::burgers(), &cfg, &[Diagnostic::Norms]).unwrap();
    assert_eq!(report.times(), &[0.0]);
    assert_eq!(end, a);
}

#[test]
fn stride_and_final_time_are_respected() {
    let grid = Grid1D::covering(-1.0, 1.0, 20).unwrap();
    let a = random_bv(1, 1.0, (-1.0, 1.0), grid, 0.0, 0.0).unwrap();
    let cfg = SchemeConfig::new(Scheme::LaxFriedrichs, 0.4, 0.37, 3).unwrap();
    let evo = Evolution::new(a.clone(), &PolyFlux::burgers(), &cfg).unwrap();
    let total = evo.total_steps();
    let (_, report) = run(a, &PolyFlux::burgers(), &cfg, &[Diagnostic::Norms]).unwrap();
    assert_eq!(*report.times().last().unwrap(), 0.37);
    assert_eq!(report.len(), 1 + total / 3 + usize::from(!total.is_multiple_of(3)));
}

#[test]
fn monotone_data_stays_monotone_and_mass_is_conserved() {
    let grid = Grid1D::covering(-2.0, 2.0, 80).unwrap();
    let a = riemann(grid, -1.0, 1.0).unwrap();
    for f in [PolyFlux::burgers(), PolyFlux::new(vec![0.0, 0.0, 0.0, 1.0, 0.0, -0.2]).unwrap()] {
        let cfg = SchemeConfig::new(Scheme::Godunov, 0.45, 1.0, 1).unwrap();
        let mut evo = Evolution::new(a.clone(), &f, &cfg).unwrap();
        let drift = f.eval(-1.0) - f.eval(1.0);
        while evo.advance() {
            let u = evo.field();
            assert!(u.is_monotone());
            let mass = conslaw_core::norms_and_tv(u).mass;
            assert!((mass - evo.time() * drift).abs() < 1e-12 * (1.0 + drift.abs()));
        }
    }
}

#[test]
fn godunov_audit_passes_for_nonconvex_flux() {
    let grid = Grid1D::covering(-3.0, 3.0, 150).unwrap();
    let f = PolyFlux::new(vec![0.0, -0.5, 0.0, 1.0, 0.25]).unwrap();
    let cfg = SchemeConfig::new(Scheme::Godunov, 0.45, 1.0, 1).unwrap();
    let obs = [Diagnostic::D2Monotone, Diagnostic::Norms];
    for seed in 0..4 {
        let a = random_bv(seed, 1.5, (-3.0, 3.0), grid, 1.0, -0.5).unwrap();
        let (_, report) = run(a, &f, &cfg, &obs).unwrap();
        assert!(audit_decay(&report, TOL_ABS, TOL_REL).passed());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn godunov_flux_is_flux_of_the_fan_at_zero(ul in -2.0f64..2.0, ur in -2.0f64..2.0, cubic in any::<bool>()) {
        let f = if cubic { PolyFlux::cubic() } else { PolyFlux::burgers() };
        let fan = solve_riemann(&f, ul, ur).unwrap();
        let at_zero = f.eval(fan.sample(0.0));
        prop_assert!((godunov_flux(&f, ul, ur) - at_zero).abs() <= 1e-9 * (1.0 + at_zero.abs()));
        for piece in &fan.pieces {
            if let WavePiece::Shock { speed, u_before, u_after } = *piece {
                let c = chord(&f, u_before, u_after).unwrap();
                prop_assert!((c.slope - speed).abs() <= 1e-9 * (1.0 + speed.abs()));
            }
        }
    }
}
