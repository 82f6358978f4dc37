use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use conslaw_core::data;
use conslaw_core::lyapunov::AuditSummary;
use conslaw_core::oracle::{convergence_study, AnalyticCase};
use conslaw_core::{
    audit_decay, distance_l2, project_interval, project_l1ball, project_monotone, run, run_2d, solve_riemann,
    CellField, DecayReport, Diagnostic, EntropyPair, Field2D, Grid1D, PolyFlux, Scheme, SchemeConfig, TargetSet,
    WavePiece,
};

use crate::config::ExperimentConfig;
use crate::CliError;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn flux(coeffs: &[f64]) -> Result<PolyFlux, CliError> {
    Ok(PolyFlux::new(coeffs.to_vec())?)
}

fn entropies(cfg: &ExperimentConfig) -> Result<Vec<EntropyPair>, CliError> {
    cfg.entropies.iter().map(|s| s.parse::<EntropyPair>().map_err(CliError::from)).collect()
}

/// Diagnostics for the configured targets; norms are always recorded.
fn diagnostics(cfg: &ExperimentConfig) -> Result<Vec<Diagnostic>, CliError> {
    let [lo, hi] = cfg.target.interval;
    let r = cfg.target.radius;
    let mut out = Vec::new();
    for t in &cfg.targets {
        if cfg.dimension == 2 && matches!(t.as_str(), "monotone" | "relative_entropy") {
            return Err(config_err(format!("target {t:?} is only defined in one dimension")));
        }
        match t.as_str() {
            "monotone" => out.push(Diagnostic::D2Monotone),
            "interval" => out.push(Diagnostic::D2Interval { lo, hi }),
            "l1ball" => out.push(Diagnostic::D2L1Ball { r }),
            "l2ball" => out.push(Diagnostic::D2L2Ball { r }),
            "relative_entropy" => {
                out.extend(entropies(cfg)?.into_iter().map(|eta| Diagnostic::DeltaRelativeEntropy { eta }))
            }
            "ball_entropy" => out.extend(entropies(cfg)?.into_iter().map(|eta| Diagnostic::DeltaBall { r, eta })),
            other => return Err(config_err(format!("unknown target {other:?}"))),
        }
    }
    out.push(Diagnostic::Norms);
    Ok(out)
}

/// Reads `x_center,u` rows on a uniform grid.
pub fn read_field(path: &Path, u_minus: f64, u_plus: f64) -> Result<CellField, CliError> {
    let mut reader = csv::Reader::from_path(path)?;
    let rows: Vec<(f64, f64)> = reader.deserialize().collect::<Result<_, _>>()?;
    if rows.len() < 2 {
        return Err(config_err(format!("{}: need at least two cells", path.display())));
    }
    let h = rows[1].0 - rows[0].0;
    let uniform = rows.windows(2).all(|w| ((w[1].0 - w[0].0) - h).abs() <= 1e-9 * h.abs());
    if !(h > 0.0) || !uniform {
        return Err(config_err(format!("{}: cell centres must be increasing and uniformly spaced", path.display())));
    }
    let grid = Grid1D::new(rows[0].0 - 0.5 * h, h, rows.len())?;
    Ok(CellField::new(grid, rows.into_iter().map(|r| r.1).collect(), u_minus, u_plus)?)
}

fn initial_1d(cfg: &ExperimentConfig) -> Result<CellField, CliError> {
    let g = &cfg.grid;
    let grid = Grid1D::covering(g.x_left, g.x_right, g.n)?;
    let (um, up) = (cfg.far_field.u_minus, cfg.far_field.u_plus);
    let d = &cfg.data;
    let u = match d.kind.as_str() {
        "step" => data::step(grid, um, up, d.at)?,
        "riemann" => data::riemann(grid, um, up)?,
        "random_bv" => data::random_bv(d.seed, d.amplitude, (d.support[0], d.support[1]), grid, um, up)?,
        "from_file" => read_field(Path::new(d.path.as_deref().unwrap_or_default()), um, up)?,
        other => return Err(config_err(format!("unknown data preset {other:?}"))),
    };
    match d.l1_norm {
        Some(l1) => Ok(data::scale_to_l1(&u, l1)?),
        None => Ok(u),
    }
}

/// 2-D data lives on an `n x n` grid covering `support^2`, with zero far field.
fn initial_2d(cfg: &ExperimentConfig) -> Result<Field2D, CliError> {
    let d = &cfg.data;
    if d.kind != "random_bv" {
        return Err(config_err(format!("2-D runs support data.kind = \"random_bv\" only, got {:?}", d.kind)));
    }
    let u = data::random_boxes_2d(d.seed, d.amplitude, (d.support[0], d.support[1]), cfg.grid.n)?;
    match d.l1_norm {
        Some(l1) => Ok(data::scale_to_l1_2d(&u, l1)?),
        None => Ok(u),
    }
}

fn write_field_2d<W: Write>(u: &Field2D, mut out: W) -> Result<(), CliError> {
    writeln!(out, "x_center,y_center,u")?;
    for iy in 0..u.ny {
        for ix in 0..u.nx {
            let x = u.x_left + (ix as f64 + 0.5) * u.h;
            let y = u.y_bottom + (iy as f64 + 0.5) * u.h;
            writeln!(out, "{x:.16e},{y:.16e},{:.16e}", u.get(ix, iy))?;
        }
    }
    Ok(())
}

/// Runs one experiment, writing `report.csv`, `field.csv`, `manifest.toml`
/// and, when auditing, `summary.txt`.
fn run_experiment(cfg: &ExperimentConfig, out: &Path, audit: bool) -> Result<AuditSummary, CliError> {
    let scheme: Scheme = cfg.scheme.parse()?;
    let scfg = SchemeConfig::new(scheme, cfg.cfl_ratio, cfg.t_end, cfg.observer_stride)?;
    let observers = diagnostics(cfg)?;
    let fx = flux(&cfg.flux)?;
    let report: DecayReport = if cfg.dimension == 1 {
        let (end, report) = run(initial_1d(cfg)?, &fx, &scfg, &observers)?;
        end.write_csv(create(out, "field.csv")?)?;
        report
    } else {
        if scheme != Scheme::LaxFriedrichs {
            return Err(config_err("2-D runs use scheme = \"lax_friedrichs\""));
        }
        let fy = flux(cfg.flux_y.as_deref().unwrap_or(&cfg.flux))?;
        let (end, report) = run_2d(initial_2d(cfg)?, &fx, &fy, &scfg, &observers)?;
        write_field_2d(&end, create(out, "field.csv")?)?;
        report
    };
    report.write_csv(create(out, "report.csv")?)?;
    create(out, "manifest.toml")?.write_all(cfg.to_manifest().as_bytes())?;
    let summary = audit_decay(&report, cfg.tolerances.abs, cfg.tolerances.rel);
    if audit {
        summary.write_text(create(out, "summary.txt")?)?;
    }
    Ok(summary)
}

/// Returns whether the audit passed (always true when not auditing).
pub fn evolve(cfg: &ExperimentConfig, out: &Path, audit: bool) -> Result<bool, CliError> {
    let summary = run_experiment(cfg, out, audit)?;
    if audit {
        summary.write_text(std::io::stdout().lock())?;
        Ok(summary.passed())
    } else {
        println!("wrote {}", out.display());
        Ok(true)
    }
}

/// Audits seeds `data.seed .. data.seed + count` in parallel; each seed
/// writes into `seed_<k>/` and `sweep.csv` collects the outcomes.
pub fn sweep(cfg: &ExperimentConfig, out: &Path, count: u64) -> Result<bool, CliError> {
    if cfg.data.kind != "random_bv" {
        return Err(config_err("--sweep needs data.kind = \"random_bv\""));
    }
    let first = cfg.data.seed;
    let results: Vec<(u64, AuditSummary)> = (first..first + count)
        .into_par_iter()
        .map(|seed| {
            let mut c = cfg.clone();
            c.data.seed = seed;
            c.output.dir = out.join(format!("seed_{seed}")).to_string_lossy().into_owned();
            run_experiment(&c, Path::new(&c.output.dir), true).map(|s| (seed, s))
        })
        .collect::<Result<_, _>>()?;
    let mut table = create(out, "sweep.csv")?;
    writeln!(table, "seed,violations,worst_increase")?;
    let mut all_passed = true;
    for (seed, s) in &results {
        let worst = s.worst().map_or(0.0, |v| v.increase);
        writeln!(table, "{seed},{},{worst:.16e}", s.count())?;
        println!("seed={seed} violations={} worst_increase={worst:.6e} status={}", s.count(), status(s.passed()));
        all_passed &= s.passed();
    }
    table.flush()?;
    println!("seeds={count} status={}", status(all_passed));
    Ok(all_passed)
}

fn status(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "fail"
    }
}

/// Audits a `t,<series>...` CSV previously written by a run.
pub fn audit_report_file(cfg: &ExperimentConfig, path: &Path) -> Result<bool, CliError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("t") || headers.len() < 2 {
        return Err(config_err(format!("{}: expected a header starting with t", path.display())));
    }
    let mut report = DecayReport::new(headers.iter().skip(1).map(String::from).collect());
    for record in reader.records() {
        let record = record?;
        let row: Vec<f64> = record
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        report.push(row[0], row[1..].to_vec())?;
    }
    let summary = audit_decay(&report, cfg.tolerances.abs, cfg.tolerances.rel);
    summary.write_text(std::io::stdout().lock())?;
    Ok(summary.passed())
}

/// Projects onto a target; writes `projected.csv` and `distance.txt`.
pub fn project(
    cfg: &ExperimentConfig,
    out: &Path,
    input: Option<&Path>,
    target: Option<&str>,
) -> Result<bool, CliError> {
    if cfg.dimension != 1 {
        return Err(config_err("project works on one-dimensional fields"));
    }
    let u = match input {
        Some(p) => read_field(p, cfg.far_field.u_minus, cfg.far_field.u_plus)?,
        None => initial_1d(cfg)?,
    };
    let name = target.or(cfg.targets.first().map(String::as_str)).unwrap_or("monotone");
    let [lo, hi] = cfg.target.interval;
    let r = cfg.target.radius;
    let (set, projected) = match name {
        "monotone" => {
            (TargetSet::Monotone { u_minus: u.u_minus(), u_plus: u.u_plus() }, project_monotone(&u)?.projected)
        }
        "interval" => (TargetSet::IntervalSet { lo, hi }, project_interval(&u, lo, hi)?),
        "l1ball" => (TargetSet::L1Ball { r }, project_l1ball(&u, r)?.projected),
        "l2ball" => {
            let set = TargetSet::L2Ball { r };
            // Checks the far field and radius before scaling.
            distance_l2(&u, &set)?;
            let norm = (u.values().iter().map(|v| v * v).sum::<f64>() * u.h()).sqrt();
            let scale = if norm > r { r / norm } else { 1.0 };
            (set, u.with_values(u.values().iter().map(|v| v * scale).collect())?)
        }
        other => return Err(config_err(format!("cannot project onto {other:?}"))),
    };
    let d = distance_l2(&u, &set)?;
    projected.write_csv(create(out, "projected.csv")?)?;
    let line = format!("target={name} distance_l2={d:.16e}");
    writeln!(create(out, "distance.txt")?, "{line}")?;
    println!("{line}");
    Ok(true)
}

/// Samples the fan on a uniform grid in `xi`, with every wave speed
/// inserted; writes `fan.csv` and `waves.csv`.
pub fn riemann(cfg: &ExperimentConfig, out: &Path) -> Result<bool, CliError> {
    let rc = &cfg.riemann;
    if !(rc.xi_max > rc.xi_min) || rc.samples < 2 {
        return Err(config_err("riemann needs xi_min < xi_max and samples >= 2"));
    }
    let fan = solve_riemann(&flux(&cfg.flux)?, rc.v_minus, rc.v_plus)?;
    let span = rc.xi_max - rc.xi_min;
    let last = (rc.samples - 1) as f64;
    let mut xs: Vec<f64> = (0..rc.samples).map(|k| rc.xi_min + span * k as f64 / last).collect();
    let mut waves = create(out, "waves.csv")?;
    writeln!(waves, "kind,speed_start,speed_end,u_start,u_end")?;
    for piece in &fan.pieces {
        let (kind, (s0, s1), (u0, u1)) = match *piece {
            WavePiece::Shock { speed, u_before, u_after } => ("shock", (speed, speed), (u_before, u_after)),
            WavePiece::Rarefaction { speed_range, u_range } => ("rarefaction", speed_range, u_range),
        };
        writeln!(waves, "{kind},{s0:.16e},{s1:.16e},{u0:.16e},{u1:.16e}")?;
        xs.extend([s0, s1].into_iter().filter(|s| (rc.xi_min..=rc.xi_max).contains(s)));
    }
    waves.flush()?;
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut table = create(out, "fan.csv")?;
    writeln!(table, "xi,u")?;
    for xi in xs {
        writeln!(table, "{xi:.16e},{:.16e}", fan.sample(xi))?;
    }
    table.flush()?;
    println!("waves={} wrote {}", fan.pieces.len(), out.display());
    Ok(true)
}

/// Writes `rate.csv` with `h,error` rows and prints the fitted slope.
pub fn convergence(cfg: &ExperimentConfig, out: &Path) -> Result<bool, CliError> {
    let cc = &cfg.convergence;
    let case: AnalyticCase = cc.case.parse()?;
    let scheme: Scheme = cfg.scheme.parse()?;
    let fit = convergence_study(case, &cc.mesh_sizes, cc.t_end, cfg.cfl_ratio, scheme)?;
    let mut table = create(out, "rate.csv")?;
    writeln!(table, "h,error")?;
    for (h, e) in fit.mesh_sizes.iter().zip(&fit.errors) {
        writeln!(table, "{h:.16e},{e:.16e}")?;
    }
    table.flush()?;
    println!("case={} scheme={scheme} slope={:.6}", case.name(), fit.slope);
    Ok(true)
}
