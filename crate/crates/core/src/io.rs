//! CSV artifacts: comma separated, header row, `#`-prefixed metadata lines.
//!
//! Floats are written in Rust's shortest round-trip form, so every file parses
//! back into the value that produced it.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid};
use crate::montecarlo::TableCell;
use crate::recursive::{WcKind, WcSolution};
use crate::spectral::{Method, StabilityReport};
use crate::stability::DiscPoint;
use crate::sweep::{CellStatus, SweepCell, SweepResult};

fn fmt_err(e: impl std::fmt::Display) -> Error {
    Error::Format(e.to_string())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        other => Error::Format(format!("{other:?}")),
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

/// Splits input into `# key = value` metadata and the CSV body.
fn split_metadata<R: Read>(r: R) -> Result<(Vec<(String, String)>, String)> {
    let mut meta = Vec::new();
    let mut body = String::new();
    for line in BufReader::new(r).lines() {
        let line = line?;
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                meta.push((k.trim().to_string(), v.trim().to_string()));
            }
        } else if !line.trim().is_empty() {
            body.push_str(&line);
            body.push('\n');
        }
    }
    Ok((meta, body))
}

fn meta_get<'a>(meta: &'a [(String, String)], key: &str) -> Result<&'a str> {
    meta.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::Format(format!("missing metadata line '# {key} = ...'")))
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse().map_err(|e| Error::Format(format!("bad {what} '{s}': {e}")))
}

/// Reads the body, checks the header and returns the records.
fn records(body: &str, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let got = rdr.headers().map_err(csv_err)?.clone();
    if got.iter().collect::<Vec<_>>() != header {
        return Err(Error::Format(format!("expected header '{}', got '{}'", header.join(","), got.iter().collect::<Vec<_>>().join(","))));
    }
    rdr.records().map(|r| r.map_err(csv_err)).collect()
}

pub fn write_table1<W: Write>(w: W, cells: &[TableCell]) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(["n", "m", "mean", "sd"]).map_err(csv_err)?;
    for c in cells {
        let sd = c.sd.map(|s| s.to_string()).unwrap_or_default();
        wr.write_record([c.n.to_string(), c.m.to_string(), c.mean.to_string(), sd]).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_table1<R: Read>(r: R) -> Result<Vec<TableCell>> {
    let (_, body) = split_metadata(r)?;
    records(&body, &["n", "m", "mean", "sd"])?
        .iter()
        .map(|rec| {
            let sd = match &rec[3] {
                "" => None,
                s => Some(parse(s, "sd")?),
            };
            Ok(TableCell { n: parse(&rec[0], "n")?, m: parse(&rec[1], "m")?, mean: parse(&rec[2], "mean")?, sd })
        })
        .collect()
}

pub fn write_disc_curve<W: Write>(w: W, points: &[DiscPoint]) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(["n_states", "lphi", "abs_error_vs_analytic"]).map_err(csv_err)?;
    for p in points {
        wr.write_record([p.n_states.to_string(), p.lphi.to_string(), p.abs_error.to_string()]).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_disc_curve<R: Read>(r: R) -> Result<Vec<DiscPoint>> {
    let (_, body) = split_metadata(r)?;
    records(&body, &["n_states", "lphi", "abs_error_vs_analytic"])?
        .iter()
        .map(|rec| {
            Ok(DiscPoint {
                n_states: parse(&rec[0], "n_states")?,
                lphi: parse(&rec[1], "lphi")?,
                abs_error: parse(&rec[2], "abs_error")?,
            })
        })
        .collect()
}

/// Writes the sweep grid; `extra` lines (e.g. fixed parameters) go into the metadata block.
pub fn write_sweep<W: Write>(mut w: W, result: &SweepResult, extra: &[(String, String)]) -> Result<()> {
    writeln!(w, "# family = {}", result.family)?;
    writeln!(w, "# method = {}", result.method)?;
    writeln!(w, "# seed = {}", result.seed)?;
    writeln!(w, "# param1 = {}", result.x_name)?;
    writeln!(w, "# param2 = {}", result.y_name)?;
    for (k, v) in extra {
        writeln!(w, "# {k} = {v}")?;
    }
    let mut wr = writer(w);
    wr.write_record(["param1", "param2", "lphi", "status"]).map_err(csv_err)?;
    for c in &result.cells {
        wr.write_record([c.x.to_string(), c.y.to_string(), c.lphi.to_string(), c.status.to_string()]).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_sweep<R: Read>(r: R) -> Result<SweepResult> {
    let (meta, body) = split_metadata(r)?;
    let cells = records(&body, &["param1", "param2", "lphi", "status"])?
        .iter()
        .map(|rec| {
            Ok(SweepCell {
                x: parse(&rec[0], "param1")?,
                y: parse(&rec[1], "param2")?,
                lphi: parse(&rec[2], "lphi")?,
                status: rec[3].parse::<CellStatus>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        family: meta_get(&meta, "family")?.to_string(),
        method: meta_get(&meta, "method")?.parse::<Method>()?,
        x_name: meta_get(&meta, "param1")?.to_string(),
        y_name: meta_get(&meta, "param2")?.to_string(),
        seed: parse(meta_get(&meta, "seed")?, "seed")?,
        cells,
    })
}

/// One-row summary of a stability test.
pub fn write_report<W: Write>(w: W, r: &StabilityReport) -> Result<()> {
    let mut wr = writer(w);
    wr.write_record(["method", "p", "lphi", "std_error", "verdict"]).map_err(csv_err)?;
    let se = r.std_error.map(|s| s.to_string()).unwrap_or_default();
    wr.write_record([r.method.to_string(), r.p.to_string(), r.lphi.to_string(), se, r.verdict().to_string()])
        .map_err(csv_err)?;
    wr.flush()?;
    Ok(())
}

pub fn read_report<R: Read>(r: R) -> Result<StabilityReport> {
    let (_, body) = split_metadata(r)?;
    let recs = records(&body, &["method", "p", "lphi", "std_error", "verdict"])?;
    let [rec] = recs.as_slice() else {
        return Err(Error::Format(format!("expected one report row, got {}", recs.len())));
    };
    let std_error = match &rec[3] {
        "" => None,
        s => Some(parse(s, "std_error")?),
    };
    Ok(StabilityReport::new(rec[0].parse()?, parse(&rec[2], "lphi")?, parse(&rec[1], "p")?, std_error))
}

/// `state,h_star` rows.
pub fn write_pricing<W: Write>(w: W, states: &[f64], h_star: &[f64]) -> Result<()> {
    if states.len() != h_star.len() {
        return Err(Error::Parameter("states and solution have different lengths".into()));
    }
    let mut wr = writer(w);
    wr.write_record(["state", "h_star"]).map_err(csv_err)?;
    for (x, h) in states.iter().zip(h_star) {
        wr.write_record([x.to_string(), h.to_string()]).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_pricing<R: Read>(r: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let (_, body) = split_metadata(r)?;
    let mut states = Vec::new();
    let mut h = Vec::new();
    for rec in records(&body, &["state", "h_star"])? {
        states.push(parse(&rec[0], "state")?);
        h.push(parse(&rec[1], "h_star")?);
    }
    Ok((states, h))
}

fn join_f64(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn split_f64(s: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(|x| parse(x, "number")).collect()
}

/// Grid dump of a wealth-consumption solution: one row per grid point with the
/// state coordinates, `w` and `ln w` (the latter is what is read back).
pub fn write_wc<W: Write>(mut w: W, sol: &WcSolution) -> Result<()> {
    writeln!(w, "# kind = {}", sol.kind.as_str())?;
    let names = sol.kind.axis_names();
    for (name, a) in names.iter().zip(&sol.grid.axes) {
        writeln!(w, "# axis {name} = {};{};{}", a.min, a.max, a.count)?;
    }
    writeln!(w, "# fingerprint = {}", join_f64(&sol.fingerprint))?;
    writeln!(w, "# residual = {}", sol.residual)?;
    writeln!(w, "# iterations = {}", sol.iterations)?;
    let mut wr = writer(w);
    let mut header: Vec<&str> = names.to_vec();
    header.extend(["w", "log_w"]);
    wr.write_record(&header).map_err(csv_err)?;
    for (i, l) in sol.log_w.iter().enumerate() {
        let mut row: Vec<String> = sol.grid.point(i).iter().map(|x| x.to_string()).collect();
        row.push(l.exp().to_string());
        row.push(l.to_string());
        wr.write_record(&row).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_wc<R: Read>(r: R) -> Result<WcSolution> {
    let (meta, body) = split_metadata(r)?;
    let kind = match meta_get(&meta, "kind")? {
        "ez_by" => WcKind::By,
        "ez_ssy" => WcKind::Ssy,
        other => return Err(Error::Format(format!("unknown wealth-consumption kind '{other}'"))),
    };
    let names = kind.axis_names();
    let axes = names
        .iter()
        .map(|name| {
            let v = split_f64(meta_get(&meta, &format!("axis {name}"))?)?;
            if v.len() != 3 {
                return Err(Error::Format(format!("axis {name} needs min;max;count")));
            }
            Ok(Axis { min: v[0], max: v[1], count: v[2] as usize })
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = Grid::new(axes).map_err(fmt_err)?;
    let mut header: Vec<&str> = names.to_vec();
    header.extend(["w", "log_w"]);
    let recs = records(&body, &header)?;
    if recs.len() != grid.len() {
        return Err(Error::Format(format!("expected {} grid rows, got {}", grid.len(), recs.len())));
    }
    let log_w = recs.iter().map(|rec| parse(&rec[names.len() + 1], "log_w")).collect::<Result<Vec<f64>>>()?;
    Ok(WcSolution {
        kind,
        grid,
        log_w,
        residual: parse(meta_get(&meta, "residual")?, "residual")?,
        iterations: parse(meta_get(&meta, "iterations")?, "iterations")?,
        fingerprint: split_f64(meta_get(&meta, "fingerprint")?)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Verdict;

    #[test]
    fn table_round_trip() {
        let cells = vec![
            TableCell { n: 250, m: 1000, mean: -0.0031234567891, sd: Some(1.1e-4) },
            TableCell { n: 750, m: 5000, mean: 1e-300, sd: None },
        ];
        let mut buf = Vec::new();
        write_table1(&mut buf, &cells).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("n,m,mean,sd\n"));
        assert_eq!(read_table1(&buf[..]).unwrap(), cells);
    }

    #[test]
    fn sweep_round_trip_with_failures() {
        let r = SweepResult {
            family: "habit".into(),
            method: Method::Analytic,
            x_name: "beta".into(),
            y_name: "sigma".into(),
            seed: u64::MAX,
            cells: vec![
                SweepCell { x: 0.9, y: 0.1, lphi: -0.1, status: CellStatus::Ok(Verdict::Stable) },
                SweepCell { x: 0.9, y: 0.2, lphi: f64::NAN, status: CellStatus::Failed("parameter".into()) },
            ],
        };
        let mut buf = Vec::new();
        write_sweep(&mut buf, &r, &[("gamma".into(), "2.5".into())]).unwrap();
        let back = read_sweep(&buf[..]).unwrap();
        assert_eq!(back.cells[0], r.cells[0]);
        assert!(back.cells[1].lphi.is_nan());
        assert_eq!(back.cells[1].status, r.cells[1].status);
        assert_eq!((back.seed, back.method, &back.x_name[..]), (u64::MAX, Method::Analytic, "beta"));
    }

    #[test]
    fn report_round_trip() {
        for r in [
            StabilityReport::new(Method::MonteCarlo, -0.00388123456789, 1.0, Some(8.1e-5)),
            StabilityReport::new(Method::Analytic, 0.0, 2.0, None),
        ] {
            let mut buf = Vec::new();
            write_report(&mut buf, &r).unwrap();
            assert_eq!(read_report(&buf[..]).unwrap(), r);
        }
    }

    #[test]
    fn header_mismatch_is_a_format_error() {
        assert!(matches!(read_pricing("x,h\n1,2\n".as_bytes()), Err(Error::Format(_))));
        assert!(matches!(read_disc_curve("n_states,lphi,abs_error_vs_analytic\n2,abc,0\n".as_bytes()), Err(Error::Format(_))));
    }
}
