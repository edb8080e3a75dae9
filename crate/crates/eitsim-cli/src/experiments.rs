//! Experiment drivers: deterministic sweep evaluation, file emission, and
//! the validation run.

use crate::config::{Experiment, Format, Resolved};
use crate::pool;
use anyhow::{Context, Result};
use eitsim::bell::{critical_threshold, minimize_ch};
use eitsim::memorychannel::{bell_state_retrieved, fidelity, grid_csv, LogicalDensityMatrix};
use eitsim::numerics::bisect_root;
use eitsim::polariton::attenuation_factor;
use eitsim::validate;
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};

pub enum Outcome {
    Success,
    ValidationFailed,
}

pub fn run(cfg: &Resolved) -> Result<Outcome> {
    match cfg.experiment {
        Experiment::FidelityVsGamma => fidelity_vs_gamma(cfg),
        Experiment::FidelityVsTime => fidelity_vs_time(cfg),
        Experiment::BellFidelitySurface => bell_fidelity_surface(cfg),
        Experiment::ChSurface => ch_surface(cfg),
        Experiment::Threshold => threshold(cfg),
        Experiment::Validate => validate_run(cfg),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write output file {}", path.display())),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .context("cannot write to stdout")?;
            Ok(())
        }
    }
}

fn linspace(range: [f64; 2], points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| range[0] + (range[1] - range[0]) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Fidelity of one stored photon, `F = sqrt(eta)`, through the quadrature
/// route.
fn stored_photon_fidelity(cfg: &Resolved, gamma21: f64, storage_time: f64) -> Result<f64> {
    let params = cfg.base.with_gamma21(gamma21)?;
    let schedule = cfg.base.schedule(storage_time)?;
    let f = attenuation_factor(&params, &schedule, schedule.t_end())?;
    Ok(f.efficiency.sqrt())
}

fn grid_text(cfg: &Resolved, columns: &[&str], rows: Vec<Vec<f64>>) -> String {
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => grid_csv(&columns.join(","), &rows),
        Format::Json => {
            serde_json::to_string_pretty(&json!({ "columns": columns, "rows": rows }))
                .expect("grid serializes")
                + "\n"
        }
    }
}

fn fidelity_vs_gamma(cfg: &Resolved) -> Result<Outcome> {
    let gammas = linspace(cfg.gamma21_range, cfg.gamma21_points);
    let cells: Vec<(f64, f64)> = cfg
        .storage_times
        .iter()
        .flat_map(|&dt| gammas.iter().map(move |&g| (g, dt)))
        .collect();
    let rows = pool::run_indexed(cells.len(), cfg.workers, |i| {
        let (g, dt) = cells[i];
        stored_photon_fidelity(cfg, g, dt).map(|f| vec![g, dt, f])
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    emit(
        &cfg.out,
        &grid_text(cfg, &["gamma21[Gamma]", "storage_time[1/Gamma]", "fidelity"], rows),
    )?;
    Ok(Outcome::Success)
}

fn fidelity_vs_time(cfg: &Resolved) -> Result<Outcome> {
    let times = linspace(cfg.storage_time_range, cfg.storage_time_points);
    let cells: Vec<(f64, f64)> = cfg
        .gamma21_values
        .iter()
        .flat_map(|&g| times.iter().map(move |&dt| (dt, g)))
        .collect();
    let rows = pool::run_indexed(cells.len(), cfg.workers, |i| {
        let (dt, g) = cells[i];
        stored_photon_fidelity(cfg, g, dt).map(|f| vec![dt, g, f])
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    emit(
        &cfg.out,
        &grid_text(cfg, &["storage_time[1/Gamma]", "gamma21[Gamma]", "fidelity"], rows),
    )?;
    Ok(Outcome::Success)
}

fn eta_grid(points: usize) -> Vec<f64> {
    linspace([0.0, 1.0], points)
}

fn bell_fidelity_surface(cfg: &Resolved) -> Result<Outcome> {
    let etas = eta_grid(cfg.eta_points);
    let target = LogicalDensityMatrix::bell_singlet();
    let cells: Vec<(f64, f64)> = etas
        .iter()
        .flat_map(|&a| etas.iter().map(move |&b| (a, b)))
        .collect();
    let rows = pool::run_indexed(cells.len(), cfg.workers, |i| {
        let (eta_a, eta_b) = cells[i];
        let retrieved = bell_state_retrieved(eta_a, eta_b)?;
        let f = fidelity(&retrieved, &target)?;
        Ok::<_, eitsim::Error>(vec![eta_a, eta_b, f])
    });
    let rows = rows.into_iter().collect::<std::result::Result<Vec<_>, _>>()?;
    emit(&cfg.out, &grid_text(cfg, &["eta_a", "eta_b", "fidelity"], rows))?;
    Ok(Outcome::Success)
}

/// Path of the companion boundary-contour file for a surface output.
pub fn boundary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("surface");
    out.with_file_name(format!("{stem}.boundary.csv"))
}

fn ch_surface(cfg: &Resolved) -> Result<Outcome> {
    let etas = eta_grid(cfg.eta_points);
    let cells: Vec<(f64, f64)> = etas
        .iter()
        .flat_map(|&a| etas.iter().map(move |&b| (a, b)))
        .collect();
    let rows = pool::run_indexed(cells.len(), cfg.workers, |i| {
        let (eta_a, eta_b) = cells[i];
        let r = minimize_ch(eta_a, eta_b);
        (eta_a, eta_b, r.j_at_min, r.value)
    });

    let mut text = String::from("eta_a,eta_b,j_min,ch_min,violates\n");
    for (eta_a, eta_b, j_min, ch_min) in &rows {
        let violates = if *ch_min < -1.0 { 1 } else { 0 };
        text.push_str(&format!(
            "{eta_a:.12e},{eta_b:.12e},{j_min:.12e},{ch_min:.12e},{violates}\n"
        ));
    }

    // Boundary contour CH_min = -1: for each eta_a row, bisect over eta_b
    // when the violation region is reached inside the row.
    let boundary = pool::run_indexed(etas.len(), cfg.workers, |i| {
        let eta_a = etas[i];
        let g = |eta_b: f64| minimize_ch(eta_a, eta_b).value + 1.0;
        if g(0.0) > 0.0 && g(1.0) < 0.0 {
            bisect_root(g, 0.0, 1.0, 1e-9).ok().map(|eta_b| (eta_a, eta_b))
        } else {
            None
        }
    });
    let mut boundary_text = String::from("eta_a,eta_b_boundary\n");
    for (eta_a, eta_b) in boundary.into_iter().flatten() {
        boundary_text.push_str(&format!("{eta_a:.12e},{eta_b:.12e}\n"));
    }

    match &cfg.out {
        Some(path) => {
            emit(&cfg.out, &text)?;
            std::fs::write(boundary_path(path), &boundary_text)
                .with_context(|| format!("cannot write {}", boundary_path(path).display()))?;
        }
        None => {
            emit(&None, &text)?;
            emit(&None, &boundary_text)?;
        }
    }
    Ok(Outcome::Success)
}

fn threshold(cfg: &Resolved) -> Result<Outcome> {
    let eta_star = critical_threshold()?;
    let at_star = minimize_ch(eta_star, eta_star);
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => {
            serde_json::to_string_pretty(&json!({
                "eta_star": eta_star,
                "bracket": [0.5, 1.0],
                "tolerance": 1e-6,
                "ch_min_at_star": at_star.value,
                "j_at_star": at_star.j_at_min,
                "j_at_scan_boundary": at_star.at_scan_boundary,
            }))
            .expect("summary serializes")
                + "\n"
        }
        Format::Csv => format!("eta_star\n{eta_star:.12e}\n"),
    };
    emit(&cfg.out, &text)?;
    Ok(Outcome::Success)
}

fn validate_run(cfg: &Resolved) -> Result<Outcome> {
    let report = validate::run_all(cfg.seed)?;
    let text = report.to_json() + "\n";
    emit(&cfg.out, &text)?;
    if cfg.out.is_some() {
        // Keep a machine-readable trace on stdout as well.
        println!("{text}");
    }
    if report.passed {
        Ok(Outcome::Success)
    } else {
        Ok(Outcome::ValidationFailed)
    }
}
