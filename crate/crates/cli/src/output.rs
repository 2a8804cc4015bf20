//! CSV and JSON writers. Numbers carry 17 significant digits so that every
//! double round-trips.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use pilotwave::guidance::Trajectory;
use pilotwave::WaveFunction;

use crate::runner::{Outcome, Report};

const AXIS_NAMES: [&str; 2] = ["x", "y"];

/// `{:.16e}`: one leading digit plus sixteen decimals.
pub fn number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trajectories(path: &Path, trajectories: &[Trajectory], dim: usize) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "sample_id,t,{}", AXIS_NAMES[..dim].join(","))?;
    for traj in trajectories {
        for (t, q) in traj.times.iter().zip(&traj.points) {
            write!(w, "{},{}", traj.id, number(*t))?;
            for c in q.coords() {
                write!(w, ",{}", number(*c))?;
            }
            writeln!(w)?;
        }
    }
    w.flush()
}

pub fn write_density(path: &Path, psi: &WaveFunction) -> io::Result<()> {
    let grid = psi.grid();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{},rho", AXIS_NAMES[..grid.dim()].join(","))?;
    for (i, z) in psi.values().iter().enumerate() {
        for c in grid.point(i).coords() {
            write!(w, "{},", number(*c))?;
        }
        writeln!(w, "{}", number(z.norm_sqr()))?;
    }
    w.flush()
}

/// `density_<t>.csv` with `t` trimmed to nine decimals.
pub fn density_file_name(t: f64) -> String {
    let rounded = (t * 1e9).round() / 1e9;
    format!("density_{}.csv", if rounded == 0.0 { 0.0 } else { rounded })
}

pub fn write_report(path: &Path, report: &Report) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(report).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// Writes every output file into `dir`, returning their paths.
pub fn write_all(dir: &Path, outcome: &Outcome) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let dim = outcome.report.scenario.grid.len();
    let mut written = Vec::new();
    let path = dir.join("trajectories.csv");
    write_trajectories(&path, &outcome.trajectories, dim)?;
    written.push(path);
    for snap in &outcome.snapshots {
        let path = dir.join(density_file_name(snap.time()));
        write_density(&path, snap)?;
        written.push(path);
    }
    let path = dir.join("report.json");
    write_report(&path, &outcome.report)?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(number(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(number(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn density_names() {
        assert_eq!(density_file_name(0.0), "density_0.csv");
        assert_eq!(density_file_name(2.0000000000004), "density_2.csv");
        assert_eq!(density_file_name(0.5), "density_0.5.csv");
    }
}
