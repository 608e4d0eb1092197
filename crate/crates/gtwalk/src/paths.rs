//! Path dumps and gnuplot-ready column output.

use std::io::{Read, Write};
use std::path::Path;

use gtwalk_core::coupling::CoupledPath;
use gtwalk_core::walk::WalkPath;

use crate::error::RunError;

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, RunError> {
    let f = std::fs::File::create(path).map_err(|e| RunError::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

/// `n,t,coord_0,…,coord_{d−1}` for each skeleton time.
pub fn write_walk(path: &Path, walk: &WalkPath) -> Result<(), RunError> {
    let d = walk.skeleton.first().map_or(0, |p| p.len());
    let mut w = writer(path)?;
    let mut header = vec!["n".to_string(), "t".to_string()];
    header.extend((0..d).map(|i| format!("coord_{i}")));
    w.write_record(&header).map_err(RunError::csv)?;
    for (n, (t, x)) in walk.schedule.times.iter().zip(&walk.skeleton).enumerate() {
        let mut row = vec![n.to_string(), num(*t)];
        row.extend(x.coords.iter().map(|c| num(*c)));
        w.write_record(&row).map_err(RunError::csv)?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

/// `n,t,x1_0,…,x2_0,…,dist,lambda_star,coupled`; `lambda_star` is the
/// increment drawn at `t_n`, empty on the last row.
pub fn write_coupled(path: &Path, pair: &CoupledPath) -> Result<(), RunError> {
    let d = pair.first.first().map_or(0, |p| p.len());
    let mut w = writer(path)?;
    let mut header = vec!["n".to_string(), "t".to_string()];
    header.extend((0..d).map(|i| format!("x1_{i}")));
    header.extend((0..d).map(|i| format!("x2_{i}")));
    header.extend(["dist", "lambda_star", "coupled"].map(String::from));
    w.write_record(&header).map_err(RunError::csv)?;
    for n in 0..pair.first.len() {
        let mut row = vec![n.to_string(), num(pair.schedule.times[n])];
        row.extend(pair.first[n].coords.iter().map(|c| num(*c)));
        row.extend(pair.second[n].coords.iter().map(|c| num(*c)));
        row.push(num(pair.distance[n]));
        row.push(pair.lambda_star.get(n).map(|l| num(*l)).unwrap_or_default());
        row.push(u8::from(pair.coupled[n]).to_string());
        w.write_record(&row).map_err(RunError::csv)?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

/// Rewrites CSV as whitespace-separated columns with a `#` header line.
/// `cols` selects columns by name (all when empty); empty cells become `NaN`.
pub fn gnuplot_columns(input: impl Read, cols: &[String], mut out: impl Write) -> Result<(), RunError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(RunError::csv)?.clone();
    let idx: Vec<usize> = if cols.is_empty() {
        (0..header.len()).collect()
    } else {
        cols.iter()
            .map(|c| {
                header
                    .iter()
                    .position(|h| h == c)
                    .ok_or_else(|| RunError::Csv(format!("no column `{c}` (have {})", header.iter().collect::<Vec<_>>().join(", "))))
            })
            .collect::<Result<_, _>>()?
    };
    let io = |e| RunError::io(Path::new("<stdout>"), e);
    let names: Vec<&str> = idx.iter().map(|i| &header[*i]).collect();
    writeln!(out, "# {}", names.join(" ")).map_err(io)?;
    for rec in rd.records() {
        let rec = rec.map_err(RunError::csv)?;
        let cells: Vec<&str> = idx
            .iter()
            .map(|i| match rec.get(*i) {
                Some("") | None => "NaN",
                Some(v) => v,
            })
            .collect();
        writeln!(out, "{}", cells.join(" ")).map_err(io)?;
    }
    Ok(())
}
