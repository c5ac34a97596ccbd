use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::error::CliError;

fn read_json(path: &Path) -> Result<Option<Value>, CliError> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn floats(v: &Value, key: &str) -> Vec<f64> {
    v[key]
        .as_array()
        .map(|a| a.iter().map(|x| x.as_f64().unwrap_or(f64::NAN)).collect())
        .unwrap_or_default()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn header(buf: &mut Vec<u8>, lattice: &Value, columns: &str) -> Result<(), CliError> {
    writeln!(buf, "# lattice={}", lattice.as_str().unwrap_or("unknown"))?;
    writeln!(buf, "# version={}", poisson_transport::io::VERSION)?;
    writeln!(buf, "{columns}")?;
    Ok(())
}

/// Converts the artifacts in `dir` into long-format CSVs under `dir/plot`.
/// Returns the names of the files written.
pub fn emit_plot_data(dir: &Path) -> Result<Vec<String>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Parse(format!("artifact directory {} does not exist", dir.display())));
    }
    let plot = dir.join("plot");
    let mut written = Vec::new();
    let mut outputs: Vec<(&str, Vec<u8>)> = Vec::new();

    if let Some(v) = read_json(&dir.join("flow.json"))? {
        let mut buf = Vec::new();
        header(&mut buf, &v["lattice"], "t,H,I")?;
        let (t, h) = (floats(&v, "times"), floats(&v, "entropy"));
        // JSON has no infinity; the Fisher information of a singular density is +∞.
        let i: Vec<f64> = floats(&v, "fisher").into_iter().map(|x| if x.is_nan() { f64::INFINITY } else { x }).collect();
        for k in 0..t.len() {
            writeln!(buf, "{:?},{:?},{:?}", t[k], h[k], i[k])?;
        }
        outputs.push(("flow.csv", buf));
    }
    if let Some(v) = read_json(&dir.join("geodesic.json"))? {
        let mut buf = Vec::new();
        header(&mut buf, &v["lattice"], "k,speed")?;
        for (k, s) in floats(&v, "speed").iter().enumerate() {
            writeln!(buf, "{k},{s:?}")?;
        }
        outputs.push(("speed.csv", buf));
    }

    let mut gamma = Vec::new();
    let mut gamma_lattice = Value::Null;
    if let Some(v) = read_json(&dir.join("entropic.json"))? {
        gamma_lattice = v["lattice"].clone();
        for p in v["curve"].as_array().into_iter().flatten() {
            gamma.push(("entropic".to_string(), num(&p["eps"]), num(&p["value"])));
        }
    }
    let reports = dir.join("reports");
    if reports.is_dir() {
        let mut names: Vec<_> = fs::read_dir(&reports)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.contains("gamma_convergence") && n.ends_with(".json"))
            })
            .collect();
        names.sort();
        for path in names {
            let v = read_json(&path)?.unwrap_or(Value::Null);
            let r = &v["report"];
            gamma_lattice = r["lattice"].clone();
            let grid = floats(r, "grid");
            let points = r["points"].as_array().cloned().unwrap_or_default();
            let tag = path.file_stem().unwrap().to_string_lossy().to_string();
            // Points pair consecutive grid values; the last one is the gap to 𝒲².
            if grid.len() >= 2 && points.len() >= grid.len() - 1 {
                gamma.push((tag.clone(), grid[0], num(&points[0]["lhs"])));
                for (j, p) in points.iter().take(grid.len() - 1).enumerate() {
                    gamma.push((tag.clone(), grid[j + 1], num(&p["rhs"])));
                }
            }
        }
    }
    if !gamma.is_empty() {
        let mut buf = Vec::new();
        header(&mut buf, &gamma_lattice, "source,eps,J")?;
        for (src, e, j) in &gamma {
            writeln!(buf, "{src},{e:?},{j:?}")?;
        }
        outputs.push(("gamma.csv", buf));
    }

    if let Some(v) = read_json(&dir.join("refinement.json"))? {
        let mut buf = Vec::new();
        header(&mut buf, &v["lattice"], "K,W2,monotone")?;
        let t = &v["table"];
        let monotone = t["monotone"].as_bool().unwrap_or(false);
        for row in t["rows"].as_array().into_iter().flatten() {
            writeln!(buf, "{},{:?},{monotone}", row["intervals"], num(&row["value"]))?;
        }
        outputs.push(("refinement.csv", buf));
    }

    if outputs.is_empty() {
        return Err(CliError::Parse(format!(
            "no artifacts (flow.json, geodesic.json, entropic.json, refinement.json, reports/) in {}",
            dir.display()
        )));
    }
    fs::create_dir_all(&plot)?;
    for (name, buf) in outputs {
        fs::write(plot.join(name), buf)?;
        written.push(name.to_string());
    }
    Ok(written)
}
