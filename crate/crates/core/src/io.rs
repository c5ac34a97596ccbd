//! Plain-text persistence: CSV tables with a `#`-prefixed metadata header.
//!
//! Every table starts with `# lattice=<hash>` and `# version=<crate version>`
//! lines, followed by any extra `# key=value` lines and a column header row.
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! back reproduces the values bit for bit.

use std::io::{BufRead, Write};

use crate::config_space::{Density, PoissonSpace};
use crate::continuity::CEPath;
use crate::error::{Error, Result};
use crate::semigroup::SemigroupOperator;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn io_err(e: std::io::Error) -> Error {
    Error::Parse(format!("i/o: {e}"))
}

/// Writes the metadata lines and the column header row.
pub fn write_header<W: Write>(w: &mut W, space: &PoissonSpace, extra: &[(&str, String)], columns: &str) -> Result<()> {
    writeln!(w, "# lattice={}", space.hash()).map_err(io_err)?;
    writeln!(w, "# version={VERSION}").map_err(io_err)?;
    for (k, v) in extra {
        writeln!(w, "# {k}={v}").map_err(io_err)?;
    }
    writeln!(w, "{columns}").map_err(io_err)
}

/// Parsed table: metadata pairs and data rows (the column header is checked
/// against `columns`).
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn read_table<R: BufRead>(r: R, columns: &str) -> Result<Table> {
    let mut meta = Vec::new();
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(io_err)?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let (k, v) = rest
                .trim()
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: malformed metadata {line:?}", n + 1)))?;
            meta.push((k.trim().to_string(), v.trim().to_string()));
        } else if !seen_header {
            if line != columns {
                return Err(Error::Parse(format!(
                    "line {}: expected columns {columns:?}, found {line:?}",
                    n + 1
                )));
            }
            seen_header = true;
        } else {
            rows.push(line.split(',').map(|c| c.trim().to_string()).collect());
        }
    }
    if !seen_header {
        return Err(Error::Parse("missing column header".into()));
    }
    Ok(Table { meta, rows })
}

fn parse<T: std::str::FromStr>(cell: &str, what: &str) -> Result<T> {
    cell.parse()
        .map_err(|_| Error::Parse(format!("cannot parse {what} from {cell:?}")))
}

pub fn write_density_csv<W: Write>(w: &mut W, space: &PoissonSpace, mu: &Density) -> Result<()> {
    write_header(w, space, &[("density", mu.hash())], "state,rho")?;
    for (s, v) in mu.values().iter().enumerate() {
        writeln!(w, "{s},{v:?}").map_err(io_err)?;
    }
    Ok(())
}

/// Reads a density table and checks it belongs to `space`.
pub fn read_density_csv<R: BufRead>(r: R, space: &PoissonSpace) -> Result<Density> {
    let t = read_table(r, "state,rho")?;
    match t.get("lattice") {
        Some(h) if h == space.hash() => {}
        Some(h) => return Err(Error::Parse(format!("density belongs to lattice {h}, not {}", space.hash()))),
        None => return Err(Error::Parse("density file has no lattice hash".into())),
    }
    let mut rho = vec![f64::NAN; space.n_states()];
    for row in &t.rows {
        if row.len() != 2 {
            return Err(Error::Parse(format!("expected 2 cells, found {}", row.len())));
        }
        let s: usize = parse(&row[0], "state index")?;
        if s >= rho.len() {
            return Err(Error::Parse(format!("state {s} out of range")));
        }
        rho[s] = parse(&row[1], "density value")?;
    }
    if let Some(s) = rho.iter().position(|v| v.is_nan()) {
        return Err(Error::Parse(format!("state {s} missing")));
    }
    Density::new(space, rho)
}

/// `(edge, value)` table for an edge field or flux.
pub fn write_edge_csv<W: Write>(w: &mut W, space: &PoissonSpace, values: &[f64]) -> Result<()> {
    if values.len() != space.n_edges() {
        return Err(Error::DimensionMismatch {
            expected: space.n_edges(),
            got: values.len(),
        });
    }
    write_header(w, space, &[], "edge,source,site,value")?;
    for (e, (edge, v)) in space.lattice().edges().iter().zip(values).enumerate() {
        writeln!(w, "{e},{},{},{v:?}", edge.source, edge.site).map_err(io_err)?;
    }
    Ok(())
}

/// Knot densities `(k, t, state, rho)`.
pub fn write_path_densities_csv<W: Write>(w: &mut W, space: &PoissonSpace, path: &CEPath, ce_tol: f64) -> Result<()> {
    write_header(w, space, &path_meta(path, ce_tol), "k,t,state,rho")?;
    for (k, (d, t)) in path.densities().iter().zip(path.times()).enumerate() {
        for (s, v) in d.values().iter().enumerate() {
            writeln!(w, "{k},{t:?},{s},{v:?}").map_err(io_err)?;
        }
    }
    Ok(())
}

/// Interval fluxes `(k, edge, V)`.
pub fn write_path_fluxes_csv<W: Write>(w: &mut W, space: &PoissonSpace, path: &CEPath, ce_tol: f64) -> Result<()> {
    write_header(w, space, &path_meta(path, ce_tol), "k,edge,v")?;
    for (k, f) in path.fluxes().iter().enumerate() {
        for (e, v) in f.atoms().iter().enumerate() {
            writeln!(w, "{k},{e},{v:?}").map_err(io_err)?;
        }
    }
    Ok(())
}

fn path_meta(path: &CEPath, ce_tol: f64) -> Vec<(&'static str, String)> {
    vec![
        ("K", path.intervals().to_string()),
        ("T", format!("{:?}", path.horizon())),
        ("ce_tol", format!("{ce_tol:?}")),
    ]
}

/// Per-site transition matrices `(site, from, to, p)`.
pub fn write_kernel_csv<W: Write>(w: &mut W, space: &PoissonSpace, op: &SemigroupOperator) -> Result<()> {
    let extra = [("t", format!("{:?}", op.time())), ("method", format!("{:?}", op.method()))];
    write_header(w, space, &extra, "site,from,to,p")?;
    for (x, k) in op.kernels().iter().enumerate() {
        for i in 0..k.nrows() {
            for j in 0..k.ncols() {
                writeln!(w, "{x},{i},{j},{:?}", k[(i, j)]).map_err(io_err)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::SiteSpace;
    use crate::continuity::ou_path;

    fn space() -> PoissonSpace {
        PoissonSpace::new(SiteSpace::new(vec![1.0, 0.5], vec![3, 2]).unwrap()).unwrap()
    }

    #[test]
    fn density_round_trip_is_exact() {
        let sp = space();
        let mu = crate::inequalities::random_density(&sp, 3, 2.0, 1);
        let mut buf = Vec::new();
        write_density_csv(&mut buf, &sp, &mu).unwrap();
        let back = read_density_csv(&buf[..], &sp).unwrap();
        assert_eq!(back, mu);
    }

    #[test]
    fn foreign_lattice_rejected() {
        let sp = space();
        let other = PoissonSpace::new(SiteSpace::new(vec![1.0], vec![11]).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_density_csv(&mut buf, &other, &Density::reference(&other)).unwrap();
        assert!(read_density_csv(&buf[..], &sp).is_err());
    }

    #[test]
    fn path_tables_have_metadata() {
        let sp = space();
        let p = ou_path(&sp, &Density::dirac(&sp, &[0, 0]).unwrap(), 1.0, 4).unwrap();
        let mut buf = Vec::new();
        write_path_fluxes_csv(&mut buf, &sp, &p, 1e-9).unwrap();
        let t = read_table(&buf[..], "k,edge,v").unwrap();
        assert_eq!(t.get("K"), Some("4"));
        assert_eq!(t.get("lattice"), Some(sp.hash()));
        assert_eq!(t.rows.len(), 4 * sp.n_edges());
    }
}
