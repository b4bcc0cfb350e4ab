//! CSV persistence of labelled datasets.
//!
//! Schema: header `path_id,t,x_1,...,x_r,label`, one row per sample
//! instant, rows of a path contiguous. Lines starting with `#` are comments
//! and carry provenance (the resolved configuration).

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path as FsPath;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::paths::{Label, LabeledDataset, Path};

fn csv_err(path: &FsPath, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Writes `d` as CSV, preceded by `# ` comment lines for each line of `comment`.
pub fn write_dataset_csv<W: Write>(d: &LabeledDataset, mut out: W, comment: Option<&str>) -> std::io::Result<()> {
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    let r = d.dim().unwrap_or(0);
    let mut header = String::from("path_id,t");
    for j in 1..=r {
        header.push_str(&format!(",x_{j}"));
    }
    header.push_str(",label");
    writeln!(out, "{header}")?;
    for (id, (p, l)) in d.paths().iter().zip(d.labels()).enumerate() {
        for (k, t) in p.times().iter().enumerate() {
            write!(out, "{id},{t}")?;
            for v in p.values().row(k).iter() {
                write!(out, ",{v}")?;
            }
            writeln!(out, ",{l}")?;
        }
    }
    Ok(())
}

pub fn save_dataset_csv(d: &LabeledDataset, path: &FsPath, comment: Option<&str>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_dataset_csv(d, &mut w, comment).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a dataset written by [`write_dataset_csv`]. `source` only labels errors.
pub fn read_dataset_csv<R: Read>(input: R, source: &FsPath, name: &str) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr.headers().map_err(|e| csv_err(source, e))?.clone();
    let ncols = headers.len();
    if ncols < 4 || &headers[0] != "path_id" || &headers[1] != "t" || &headers[ncols - 1] != "label" {
        return Err(Error::Parse {
            path: source.to_path_buf(),
            line: 1,
            message: "header must be path_id,t,x_1..x_r,label".into(),
        });
    }
    let r = ncols - 3;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: source.to_path_buf(),
        line,
        message,
    };

    let mut paths = Vec::new();
    let mut labels = Vec::new();
    let mut current: Option<(String, Label, Vec<f64>, Vec<f64>)> = None;
    let finish = |cur: (String, Label, Vec<f64>, Vec<f64>), paths: &mut Vec<Path>, labels: &mut Vec<Label>| -> Result<()> {
        let (_, label, times, vals) = cur;
        let n = times.len();
        paths.push(Path::new(times, DMatrix::from_row_slice(n, r, &vals))?);
        labels.push(label);
        Ok(())
    };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(source, e))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let id = rec[0].to_string();
        let t: f64 = rec[1].parse().map_err(|_| parse_err(line, format!("bad time {:?}", &rec[1])))?;
        let label_raw: i64 = rec[ncols - 1]
            .parse()
            .map_err(|_| parse_err(line, format!("bad label {:?}", &rec[ncols - 1])))?;
        let label = Label::try_from(label_raw).map_err(|m| parse_err(line, m))?;
        let same = matches!(&current, Some((cid, ..)) if *cid == id);
        if !same {
            if let Some(cur) = current.take() {
                finish(cur, &mut paths, &mut labels)?;
            }
            current = Some((id, label, Vec::new(), Vec::new()));
        }
        let cur = current.as_mut().expect("set above");
        if cur.1 != label {
            return Err(parse_err(line, format!("label changes within path {}", cur.0)));
        }
        cur.2.push(t);
        for j in 0..r {
            let v: f64 = rec[2 + j]
                .parse()
                .map_err(|_| parse_err(line, format!("bad value {:?}", &rec[2 + j])))?;
            cur.3.push(v);
        }
    }
    if let Some(cur) = current.take() {
        finish(cur, &mut paths, &mut labels)?;
    }
    LabeledDataset::new(name, paths, labels)
}

pub fn load_dataset_csv(path: &FsPath) -> Result<LabeledDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_dataset_csv(std::io::BufReader::new(file), path, &name)
}
