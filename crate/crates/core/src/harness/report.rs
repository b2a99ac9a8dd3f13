//! CSV tables, gnuplot scripts and the run-to-directory driver.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, Mode};
use super::experiments::{
    run_analysis, run_crlb_surface, run_dynamic, run_static_mse, DynamicReport, HarnessError, StaticReport,
    SurfaceReport,
};

pub const VERSION: &str = concat!("beamtrack v", env!("CARGO_PKG_VERSION"));

pub const STATIC_HEADER: &str = "slot,algorithm,mse_x,crlb,trials_converged";
pub const DYNAMIC_HEADER: &str = "omega,algorithm,mse_x,mean_rate,capacity,rate_fraction";
pub const SURFACE_HEADER: &str = "delta1,delta2,inverse_crlb";

fn write_preamble<W: Write>(w: &mut W, cfg: &ExperimentConfig) -> io::Result<()> {
    writeln!(w, "# version = {VERSION}")?;
    for line in cfg.echo().lines() {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

pub fn write_static_csv<W: Write>(w: &mut W, cfg: &ExperimentConfig, rep: &StaticReport) -> io::Result<()> {
    write_preamble(w, cfg)?;
    writeln!(w, "# pilots_per_trial = {}", rep.pilots_per_trial)?;
    for (alg, n) in &rep.singular_slots {
        writeln!(w, "# singular_slots.{} = {n}", alg.key())?;
    }
    writeln!(w, "{STATIC_HEADER}")?;
    for r in &rep.rows {
        writeln!(
            w,
            "{},{},{:e},{:e},{}",
            r.slot, r.algorithm, r.mse_x, r.crlb, r.trials_converged
        )?;
    }
    Ok(())
}

pub fn write_dynamic_csv<W: Write>(w: &mut W, cfg: &ExperimentConfig, rep: &DynamicReport) -> io::Result<()> {
    write_preamble(w, cfg)?;
    writeln!(w, "{DYNAMIC_HEADER}")?;
    for r in &rep.rows {
        writeln!(
            w,
            "{},{},{:e},{:e},{:e},{:e}",
            r.omega, r.algorithm, r.mse_x, r.mean_rate, r.capacity, r.rate_fraction
        )?;
    }
    Ok(())
}

pub fn write_surface_csv<W: Write>(w: &mut W, cfg: &ExperimentConfig, rep: &SurfaceReport) -> io::Result<()> {
    write_preamble(w, cfg)?;
    let o = &rep.optimum;
    let (m1, m2) = o.mirrored();
    writeln!(w, "# optimum = {:e},{:e},{:e}", o.delta1, o.delta2, 1.0 / o.crlb)?;
    writeln!(w, "# optimum = {:e},{:e},{:e}", m1, m2, 1.0 / o.crlb)?;
    writeln!(w, "# delta_star = {:e}", rep.delta_star)?;
    writeln!(w, "{SURFACE_HEADER}")?;
    for (d1, d2, v) in &rep.points {
        writeln!(w, "{d1:e},{d2:e},{v:e}")?;
    }
    Ok(())
}

fn algorithm_plot(csv: &str, cfg: &ExperimentConfig, xcol: usize, ycol: usize) -> String {
    cfg.algorithms
        .iter()
        .map(|a| {
            format!(
                "'< grep \",{key},\" {csv}' using {xcol}:{ycol} with lines title '{label}'",
                key = a.key(),
                label = a.label()
            )
        })
        .collect::<Vec<_>>()
        .join(", \\\n     ")
}

pub fn static_plot_script(csv: &str, cfg: &ExperimentConfig) -> String {
    let first = cfg.algorithms[0].key();
    format!(
        "set datafile separator ','\nset datafile commentschars '#'\nset logscale xy\n\
         set xlabel 'time slot n'\nset ylabel 'MSE of x'\nset key top right\n\
         plot {}, \\\n     '< grep \",{first},\" {csv}' using 1:4 with lines dashtype 2 title 'min CRLB'\n",
        algorithm_plot(csv, cfg, 1, 3)
    )
}

pub fn dynamic_plot_scripts(csv: &str, cfg: &ExperimentConfig) -> (String, String) {
    let head = "set datafile separator ','\nset datafile commentschars '#'\nset xlabel 'angular velocity (rad/slot)'\n";
    let mse = format!(
        "{head}set logscale y\nset ylabel 'steady-state MSE of x'\nplot {}\n",
        algorithm_plot(csv, cfg, 1, 3)
    );
    let rate = format!(
        "{head}set ylabel 'rate (bits/slot)'\nplot {}, \\\n     '< grep \",{},\" {csv}' using 1:5 with lines dashtype 2 title 'capacity'\n",
        algorithm_plot(csv, cfg, 1, 4),
        cfg.algorithms[0].key()
    );
    (mse, rate)
}

pub fn surface_plot_script(csv: &str, cfg: &ExperimentConfig) -> String {
    format!(
        "set datafile separator ','\nset datafile commentschars '#'\nset xlabel 'delta1'\nset ylabel 'delta2'\n\
         set zlabel '1/CRLB'\nset dgrid3d {n},{n}\nset pm3d\nsplot '{csv}' using 1:2:3 with pm3d title ''\n",
        n = cfg.grid_steps
    )
}

fn write_file(dir: &Path, name: &str, body: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> io::Result<PathBuf> {
    let mut buf = Vec::new();
    body(&mut buf)?;
    let path = dir.join(name);
    fs::write(&path, buf)?;
    Ok(path)
}

/// What a run wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    /// Text meant for stdout (the analysis report); empty otherwise.
    pub summary: String,
}

/// Runs the configured experiment and writes its table and plot scripts
/// into `dir`, creating it if needed.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path) -> Result<RunOutput, HarnessError> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut summary = String::new();
    match cfg.mode {
        Mode::StaticMse => {
            let rep = run_static_mse(cfg)?;
            files.push(write_file(dir, "static_mse.csv", |w| write_static_csv(w, cfg, &rep))?);
            let gp = static_plot_script("static_mse.csv", cfg);
            files.push(write_file(dir, "static_mse.gp", |w| w.write_all(gp.as_bytes()))?);
        }
        Mode::Dynamic => {
            let rep = run_dynamic(cfg)?;
            files.push(write_file(dir, "dynamic.csv", |w| write_dynamic_csv(w, cfg, &rep))?);
            let (mse, rate) = dynamic_plot_scripts("dynamic.csv", cfg);
            files.push(write_file(dir, "dynamic_mse.gp", |w| w.write_all(mse.as_bytes()))?);
            files.push(write_file(dir, "dynamic_rate.gp", |w| w.write_all(rate.as_bytes()))?);
        }
        Mode::CrlbSurface => {
            let rep = run_crlb_surface(cfg)?;
            files.push(write_file(dir, "crlb_surface.csv", |w| {
                write_surface_csv(w, cfg, &rep)
            })?);
            let gp = surface_plot_script("crlb_surface.csv", cfg);
            files.push(write_file(dir, "crlb_surface.gp", |w| w.write_all(gp.as_bytes()))?);
        }
        Mode::Analysis => {
            let rep = run_analysis(cfg)?;
            summary = rep.to_string();
            files.push(write_file(dir, "analysis.txt", |w| {
                write_preamble(w, cfg)?;
                w.write_all(summary.as_bytes())
            })?);
        }
    }
    Ok(RunOutput { files, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: Mode) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(mode);
        cfg.trials = 8;
        cfg.slots = 20;
        cfg.m = 8;
        cfg.omega_list = vec![0.01];
        cfg.grid_steps = 11;
        cfg
    }

    #[test]
    fn static_csv_layout() {
        let cfg = small(Mode::StaticMse);
        let rep = run_static_mse(&cfg).unwrap();
        let mut buf = Vec::new();
        write_static_csv(&mut buf, &cfg, &rep).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], STATIC_HEADER);
        assert_eq!(body.len(), 1 + cfg.slots * cfg.algorithms.len());
        assert!(body[1].starts_with("1,rbct,"));
        assert!(text.starts_with("# version = beamtrack v"));
        assert!(!text.contains("threads"));
    }

    #[test]
    fn dynamic_and_surface_layout() {
        let cfg = small(Mode::Dynamic);
        let mut buf = Vec::new();
        write_dynamic_csv(&mut buf, &cfg, &run_dynamic(&cfg).unwrap()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], DYNAMIC_HEADER);
        assert_eq!(body.len(), 1 + cfg.algorithms.len());

        let cfg = small(Mode::CrlbSurface);
        let mut buf = Vec::new();
        write_surface_csv(&mut buf, &cfg, &run_crlb_surface(&cfg).unwrap()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("# optimum")).count(), 2);
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 11 * 11);
    }

    #[test]
    fn plot_scripts_reference_csv() {
        let cfg = small(Mode::Dynamic);
        let (mse, rate) = dynamic_plot_scripts("dynamic.csv", &cfg);
        assert!(mse.contains("dynamic.csv") && rate.contains("capacity"));
        assert!(static_plot_script("s.csv", &cfg).contains("min CRLB"));
    }
}
