//! CSV emission and ingestion.
//!
//! Floats are written in Rust's shortest round-trip form, so every value
//! parses back to the identical bit pattern and reruns are byte-identical.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fields::{FieldState, Grid1D};
use crate::integrator::{RunSink, SeriesRow};
use crate::Complex64;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// A parsed numeric CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidArgument(format!("missing column '{name}'")))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let header: Vec<String> = match lines.next() {
            Some((_, l)) => l.split(',').map(|s| s.trim().to_string()).collect(),
            None => return Err(Error::InvalidArgument(format!("{origin}: empty CSV"))),
        };
        let mut rows = Vec::new();
        for (k, line) in lines {
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidArgument(format!("{origin}:{}: {e}", k + 1)))?;
            if row.len() != header.len() {
                return Err(Error::InvalidArgument(format!(
                    "{origin}:{}: expected {} fields, found {}",
                    k + 1,
                    header.len(),
                    row.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }
}

/// Writes a header and rows of floats.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<usize> {
    let mut w = BufWriter::new(create(path)?);
    writeln!(w, "{}", header.join(","))?;
    let mut count = 0;
    for row in rows {
        let line: Vec<String> = row.into_iter().map(fmt_f64).collect();
        writeln!(w, "{}", line.join(","))?;
        count += 1;
    }
    w.flush()?;
    Ok(count)
}

pub fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub const SNAPSHOT_HEADER: &str = "x,psi_re,psi_im,pi_re,pi_im";
pub const SERIES_HEADER: &str = "t,psi0_re,psi0_im,energy,momentum,energy_inside,radiated";

pub fn write_snapshot<W: Write>(mut w: W, state: &FieldState) -> Result<()> {
    writeln!(w, "{SNAPSHOT_HEADER}")?;
    for (j, (p, q)) in state.psi.iter().zip(&state.pi).enumerate() {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(state.grid.x(j)),
            fmt_f64(p.re),
            fmt_f64(p.im),
            fmt_f64(q.re),
            fmt_f64(q.im)
        )?;
    }
    Ok(())
}

/// Reads a snapshot file; the grid is rebuilt from the `x` column.
pub fn read_snapshot(path: &Path, t: f64) -> Result<FieldState> {
    let table = Table::read(path)?;
    let x = table.column("x")?;
    if x.len() < 2 {
        return Err(Error::InvalidArgument(format!("{}: fewer than two nodes", path.display())));
    }
    let dx = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    let grid = Grid1D::new(x[0], x[x.len() - 1], dx)?;
    let col = |n: &str| table.column(n);
    let zip = |a: Vec<f64>, b: Vec<f64>| a.into_iter().zip(b).map(|(r, i)| Complex64::new(r, i)).collect();
    let psi = zip(col("psi_re")?, col("psi_im")?);
    let pi = zip(col("pi_re")?, col("pi_im")?);
    FieldState::new(grid, psi, pi, t)
}

pub fn snapshot_name(step: u64) -> String {
    format!("snap_{step:010}.csv")
}

/// Streams `series.csv`, `snap_<step>.csv` files, and a `snapshots.csv`
/// index (`step,t,file`) into one directory.
pub struct CsvSink {
    dir: PathBuf,
    series: BufWriter<File>,
    index: BufWriter<File>,
    series_rows: usize,
    snapshot_files: Vec<String>,
    write_snapshots: bool,
}

impl CsvSink {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let mut series = BufWriter::new(create(&dir.join("series.csv"))?);
        writeln!(series, "{SERIES_HEADER}")?;
        let mut index = BufWriter::new(create(&dir.join("snapshots.csv"))?);
        writeln!(index, "step,t,file")?;
        Ok(Self {
            dir: dir.to_path_buf(),
            series,
            index,
            series_rows: 0,
            snapshot_files: Vec::new(),
            write_snapshots: true,
        })
    }

    /// Skips the per-snapshot files; the index is still written, with no rows.
    pub fn without_snapshot_files(mut self) -> Self {
        self.write_snapshots = false;
        self
    }

    /// Flushes and returns `(file name, data rows)` for every file written.
    pub fn finish(mut self) -> Result<Vec<(String, usize)>> {
        self.series.flush()?;
        self.index.flush()?;
        let mut manifest = vec![
            ("series.csv".to_string(), self.series_rows),
            ("snapshots.csv".to_string(), self.snapshot_files.len()),
        ];
        manifest.extend(self.snapshot_files.into_iter().map(|f| (f, 0)));
        Ok(manifest)
    }
}

impl RunSink for CsvSink {
    fn on_series(&mut self, row: &SeriesRow) -> Result<()> {
        writeln!(
            self.series,
            "{},{},{},{},{},{},{}",
            fmt_f64(row.t),
            fmt_f64(row.psi0.re),
            fmt_f64(row.psi0.im),
            fmt_f64(row.energy),
            fmt_f64(row.momentum),
            fmt_f64(row.energy_inside),
            fmt_f64(row.radiated)
        )?;
        self.series_rows += 1;
        Ok(())
    }

    fn on_snapshot(&mut self, step: u64, state: &FieldState) -> Result<()> {
        if !self.write_snapshots {
            return Ok(());
        }
        let name = snapshot_name(step);
        let mut w = BufWriter::new(create(&self.dir.join(&name))?);
        write_snapshot(&mut w, state)?;
        w.flush()?;
        writeln!(self.index, "{},{},{}", step, fmt_f64(state.t), name)?;
        self.snapshot_files.push(name);
        Ok(())
    }
}

/// Loads every snapshot listed in a run directory's index, in step order.
pub fn read_snapshot_dir(dir: &Path) -> Result<Vec<FieldState>> {
    let index = dir.join("snapshots.csv");
    let file = File::open(&index).map_err(|e| Error::Io(format!("{}: {e}", index.display())))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate().skip(1) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidArgument(format!("{}:{}: malformed index row", index.display(), k + 1)));
        }
        let t: f64 =
            parts[1].parse().map_err(|e| Error::InvalidArgument(format!("{}:{}: {e}", index.display(), k + 1)))?;
        out.push(read_snapshot(&dir.join(parts[2].trim()), t)?);
    }
    Ok(out)
}

/// Counts data rows (lines after the header) of a CSV file.
pub fn count_rows(path: &Path) -> Result<usize> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut n = 0usize;
    for line in BufReader::new(file).lines().skip(1) {
        if !line?.trim().is_empty() {
            n += 1;
        }
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_bitwise() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02e23, 0.0, -0.0, f64::MIN_POSITIVE] {
            let back: f64 = fmt_f64(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn table_reports_missing_columns_and_bad_rows() {
        let t = Table::parse("a,b\n1,2\n3,4\n", "mem").unwrap();
        assert_eq!(t.column("b").unwrap(), vec![2.0, 4.0]);
        let err = t.column("c").unwrap_err().to_string();
        assert!(err.contains("'c'"));
        assert!(Table::parse("a,b\n1\n", "mem").is_err());
        assert!(Table::parse("a\nx\n", "mem").is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid1D::symmetric(2.0, 0.25).unwrap();
        let s = FieldState::from_fn(grid, |x| Complex64::new(x.sin(), x), |x| Complex64::new(0.0, x.cos()));
        let mut sink = CsvSink::new(dir.path()).unwrap();
        sink.on_snapshot(7, &s).unwrap();
        let manifest = sink.finish().unwrap();
        assert!(manifest.iter().any(|(f, _)| f == "snap_0000000007.csv"));
        let back = read_snapshot_dir(dir.path()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].psi, s.psi);
        assert_eq!(back[0].pi, s.pi);
        assert_eq!(back[0].grid.len(), grid.len());
    }
}
