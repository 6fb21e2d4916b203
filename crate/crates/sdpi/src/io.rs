//! CSV readers and writers for laws and curves.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::prob::{DiscretePmf, Distribution, GridDensity};

type Columns = (Vec<String>, Vec<(f64, f64)>);

fn read_two_columns(path: impl AsRef<Path>) -> Result<Columns> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|s| s.to_ascii_lowercase()).collect();
    if headers.len() != 2 {
        return Err(Error::Parse(format!("expected two columns, found header {headers:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{s}'")));
        rows.push((parse(&rec[0])?, parse(&rec[1])?));
    }
    Ok((headers, rows))
}

fn grid_from_rows(rows: &[(f64, f64)]) -> Result<GridDensity> {
    if rows.len() < 2 {
        return Err(Error::Shape("grid density needs at least two rows".into()));
    }
    let step = rows[1].0 - rows[0].0;
    for w in rows.windows(2) {
        if ((w[1].0 - w[0].0) - step).abs() > 1e-6 * step.abs().max(1e-300) {
            return Err(Error::Shape("grid abscissae must be uniformly spaced".into()));
        }
    }
    GridDensity::new(rows[0].0, step, rows.iter().map(|r| r.1).collect())
}

/// Reads an `x,value` density file.
pub fn read_grid_csv(path: impl AsRef<Path>) -> Result<GridDensity> {
    let (h, rows) = read_two_columns(path)?;
    if h[0] != "x" || h[1] != "value" {
        return Err(Error::Parse(format!("grid density header must be 'x,value', found {h:?}")));
    }
    grid_from_rows(&rows)
}

/// Reads an `atom,weight` pmf file.
pub fn read_pmf_csv(path: impl AsRef<Path>) -> Result<DiscretePmf> {
    let (h, rows) = read_two_columns(path)?;
    if h[0] != "atom" || h[1] != "weight" {
        return Err(Error::Parse(format!("pmf header must be 'atom,weight', found {h:?}")));
    }
    DiscretePmf::from_pairs(rows)
}

/// Reads either format, dispatching on the header.
pub fn read_distribution_csv(path: impl AsRef<Path>) -> Result<Distribution> {
    let (h, rows) = read_two_columns(path)?;
    match (h[0].as_str(), h[1].as_str()) {
        ("x", "value") => Ok(grid_from_rows(&rows)?.into()),
        ("atom", "weight") => Ok(DiscretePmf::from_pairs(rows)?.into()),
        _ => Err(Error::Parse(format!("unrecognised header {h:?}"))),
    }
}

pub fn write_grid_csv(w: impl Write, g: &GridDensity) -> Result<()> {
    let rows: Vec<Vec<f64>> = (0..g.len()).map(|i| vec![g.x(i), g.values()[i]]).collect();
    write_table(w, None, &["x", "value"], &rows)
}

pub fn write_pmf_csv(w: impl Write, p: &DiscretePmf) -> Result<()> {
    let rows: Vec<Vec<f64>> = p.atoms().iter().zip(p.weights()).map(|(a, b)| vec![*a, *b]).collect();
    write_table(w, None, &["atom", "weight"], &rows)
}

/// Writes an optional `# meta:` line followed by a CSV table.
pub fn write_table(mut w: impl Write, meta: Option<&str>, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    if let Some(m) = meta {
        writeln!(w, "# meta: {m}")?;
    }
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(header)?;
    for r in rows {
        wtr.write_record(r.iter().map(|v| format_number(*v)))?;
    }
    wtr.flush()?;
    Ok(())
}

fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:?}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridDensity::gaussian(0.0, 1.0, 0.05, 8.0).unwrap();
        let path = dir.path().join("g.csv");
        write_grid_csv(std::fs::File::create(&path).unwrap(), &g).unwrap();
        let back = read_grid_csv(&path).unwrap();
        assert_eq!(back.len(), g.len());
        assert!((back.values()[10] - g.values()[10]).abs() < 1e-12);
        let p = DiscretePmf::new(vec![-1.0, 2.0], vec![0.25, 0.75]).unwrap();
        let path = dir.path().join("p.csv");
        write_pmf_csv(std::fs::File::create(&path).unwrap(), &p).unwrap();
        assert!(matches!(read_distribution_csv(&path).unwrap(), Distribution::Discrete(_)));
        assert!(read_grid_csv(&path).is_err());
    }
}
