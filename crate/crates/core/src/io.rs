//! Artifact formats: deterministic JSON, profile CSV and gnuplot data.
//!
//! JSON floats are written with 17 significant digits so that identical runs
//! give byte-identical files. Non-finite floats become `null`.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

use crate::discretization::{Grid, GridProfile};
use crate::error::{Error, Result};
use crate::scalar::{to_f64, Real};

/// Library version embedded in every artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Pretty printer with fixed float formatting.
struct FixedFloats<'a>(PrettyFormatter<'a>);

fn write_float<W: ?Sized + Write>(w: &mut W, v: f64) -> io::Result<()> {
    if v.is_finite() {
        write!(w, "{}", fmt_f64(v))
    } else {
        w.write_all(b"null")
    }
}

impl Formatter for FixedFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write_float(w, v)
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write_float(w, v as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// `v` with 17 significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serializes `value` as indented JSON with fixed float formatting.
pub fn to_json<S: Serialize>(value: &S) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).map_err(|e| Error::Format(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

/// Every JSON artifact: a kind tag, provenance and the payload.
#[derive(Clone, Debug, Serialize)]
pub struct Artifact<'a, P: Serialize> {
    pub kind: &'a str,
    pub library_version: &'a str,
    pub config_hash: &'a str,
    pub payload: &'a P,
}

pub fn write_artifact<P: Serialize>(path: &Path, kind: &str, config_hash: &str, payload: &P) -> Result<()> {
    let art = Artifact { kind, library_version: VERSION, config_hash, payload };
    fs::write(path, to_json(&art)?)?;
    Ok(())
}

/// Profile CSV: `x, x_tilde`, one column per component, then `R_u`, `R_v`
/// (Euclidean norms of the residual blocks per node; empty when absent).
pub fn profile_csv<T: Real>(p: &GridProfile<T>, names: &[String], residual: Option<(&GridProfile<T>, &GridProfile<T>)>) -> Result<String> {
    if names.len() != p.dim() {
        return Err(Error::Dimension(format!("{} names for {} columns", names.len(), p.dim())));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["x".to_string(), "x_tilde".to_string()];
    header.extend(names.iter().cloned());
    header.extend(["R_u".to_string(), "R_v".to_string()]);
    w.write_record(&header).map_err(|e| Error::Format(e.to_string()))?;
    for i in 0..p.grid.len() {
        let mut rec = vec![fmt_f64(to_f64(p.grid.x(i))), fmt_f64(to_f64(p.grid.x_tilde(i)))];
        rec.extend((0..p.dim()).map(|c| fmt_f64(to_f64(p.values[(i, c)]))));
        match residual {
            Some((ru, rv)) => {
                rec.push(fmt_f64(to_f64(ru.values.row(i).norm())));
                rec.push(fmt_f64(to_f64(rv.values.row(i).norm())));
            }
            None => rec.extend([String::new(), String::new()]),
        }
        w.write_record(&rec).map_err(|e| Error::Format(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// Reads the component columns `names` of a profile CSV written on `grid`.
/// Node abscissae must match the grid to `1e-9` in `x̃`.
pub fn read_profile_csv<T: Real>(text: &str, grid: &Grid<T>, names: &[String]) -> Result<GridProfile<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name).ok_or_else(|| Error::Format(format!("missing column {name}")));
    let xt = col("x_tilde")?;
    let cols = names.iter().map(|n| col(n)).collect::<Result<Vec<_>>>()?;
    let mut values = nalgebra::DMatrix::zeros(grid.len(), names.len());
    let mut count = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        if i >= grid.len() {
            return Err(Error::Dimension(format!("more than {} rows", grid.len())));
        }
        let num = |k: usize| -> Result<f64> {
            rec.get(k).unwrap_or("").trim().parse::<f64>().map_err(|e| Error::Format(format!("row {}: {e}", i + 1)))
        };
        if (num(xt)? - to_f64(grid.x_tilde(i))).abs() > 1e-9 {
            return Err(Error::Dimension(format!("row {}: x_tilde does not match the grid", i + 1)));
        }
        for (c, &k) in cols.iter().enumerate() {
            values[(i, c)] = crate::scalar::lit(num(k)?);
        }
        count += 1;
    }
    if count != grid.len() {
        return Err(Error::Dimension(format!("{count} rows for {} nodes", grid.len())));
    }
    GridProfile::new(grid.clone(), values)
}

/// Two-column gnuplot data with `#` comment header lines.
pub fn gnuplot(header: &[String], xs: &[f64], ys: &[f64]) -> Result<String> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension(format!("{} abscissae, {} ordinates", xs.len(), ys.len())));
    }
    let mut out = String::new();
    for h in header {
        out.push_str("# ");
        out.push_str(h);
        out.push('\n');
    }
    for (x, y) in xs.iter().zip(ys) {
        out.push_str(&format!("{} {}\n", fmt_f64(*x), fmt_f64(*y)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Grid;
    use nalgebra::DVector;

    #[derive(Serialize)]
    struct Sample {
        a: f64,
        b: Vec<f64>,
        c: Option<f64>,
        d: u32,
    }

    #[test]
    fn floats_have_seventeen_digits_and_round_trip() {
        let s = Sample { a: 0.1, b: vec![1.0, -2.5e-300, f64::NAN], c: None, d: 3 };
        let j = to_json(&s).unwrap();
        assert!(j.contains("1.0000000000000001e-1"), "{j}");
        assert!(j.contains("null"));
        let v: serde_json::Value = serde_json::from_str(&j).unwrap();
        assert_eq!(v["a"].as_f64().unwrap(), 0.1);
        assert_eq!(v["b"][1].as_f64().unwrap(), -2.5e-300);
        assert_eq!(v["d"].as_u64().unwrap(), 3);
        assert_eq!(to_json(&s).unwrap(), j);
    }

    #[test]
    fn csv_layout() {
        let g = Grid::new(2.0, 0.25, 0.1).unwrap();
        let p = GridProfile::from_fn(g, 2, |x| DVector::from_vec(vec![x, -x]));
        let names = vec!["u".to_string(), "v".to_string()];
        let text = profile_csv(&p, &names, None).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,x_tilde,u,v,R_u,R_v");
        assert_eq!(lines.len(), 1 + p.grid.len());
        assert_eq!(lines[1].split(',').count(), 6);
        let r = p.columns(0, 1);
        let text = profile_csv(&p, &names, Some((&r, &r))).unwrap();
        assert!(!text.lines().nth(1).unwrap().ends_with(','));
        assert!(profile_csv(&p, &names[..1], None).is_err());
        let back = read_profile_csv(&text, &p.grid, &names).unwrap();
        assert_eq!(back.values, p.values);
        let coarse = Grid::new(2.0, 0.5, 0.1).unwrap();
        assert!(read_profile_csv(&text, &coarse, &names).is_err());
        assert!(read_profile_csv(&text, &p.grid, &["w".to_string()]).is_err());
    }

    #[test]
    fn gnuplot_layout() {
        let t = gnuplot(&["eps value".into()], &[0.1, 0.05], &[1.0, 0.25]).unwrap();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "# eps value");
        assert_eq!(lines[1].split(' ').count(), 2);
        assert!(gnuplot(&[], &[1.0], &[]).is_err());
    }
}
