use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{DensityGrid, GridSpec, RunReport};

/// `x,value` rows at the cell centres.
pub fn write_snapshot_csv<W: Write>(p: &DensityGrid, mut w: W) -> io::Result<()> {
    writeln!(w, "x,value")?;
    for (j, v) in p.values.iter().enumerate() {
        writeln!(w, "{:e},{:e}", p.spec.center(j), v)?;
    }
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Manifest<'a, T: Serialize> {
    grid: GridSpec,
    times: Vec<f64>,
    files: Vec<String>,
    leak_budget: f64,
    report: &'a RunReport,
    parameters: &'a T,
}

/// Writes `snapshot_<i>.csv` per snapshot plus `manifest.json` into `dir`.
pub fn write_solution<T: Serialize>(
    dir: &Path,
    snapshots: &[DensityGrid],
    report: &RunReport,
    parameters: &T,
) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut names = Vec::new();
    for (i, s) in snapshots.iter().enumerate() {
        let name = format!("snapshot_{i:03}.csv");
        let path = dir.join(&name);
        write_snapshot_csv(s, io::BufWriter::new(fs::File::create(&path)?))?;
        files.push(path);
        names.push(name);
    }
    let grid = snapshots.first().map(|s| s.spec).unwrap_or(GridSpec { xmin: 0.0, xmax: 1.0, n: 2 });
    let manifest = Manifest {
        grid,
        times: snapshots.iter().map(|s| s.time).collect(),
        files: names,
        leak_budget: report.leak_budget,
        report,
        parameters,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest).map_err(io::Error::other)? + "\n")?;
    files.push(path);
    Ok(files)
}
