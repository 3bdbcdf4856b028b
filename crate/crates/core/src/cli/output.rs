//! Diff-stable writers: every float is printed with 17 significant digits.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::boundary_trace::BoundaryTrace;
use crate::frac_operator::SolutionField;
use crate::pohozaev::ScanTable;

/// Pretty JSON layout with `{:.16e}` floats.
struct Precise<'a>(PrettyFormatter<'a>);

impl Formatter for Precise<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{}", num(v))
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

/// 17 significant digits; non-finite values as `nan`/`inf` (CSV only).
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}").to_lowercase()
    }
}

pub fn to_json<T: Serialize>(value: &T) -> io::Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Precise(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(io::Error::other)?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    fs::write(path, to_json(value)?)
}

/// `x,u` (1D) or `x,y,u` (2D), one row per unknown.
pub fn write_solution_csv(path: &Path, u: &SolutionField) -> io::Result<()> {
    let mut s = String::new();
    let two = u.dimension() == 2;
    s.push_str(if two { "x,y,u\n" } else { "x,u\n" });
    for (x, v) in u.discretization().points().iter().zip(u.values()) {
        if two {
            s.push_str(&format!("{},{},{}\n", num(x[0]), num(x[1]), num(*v)));
        } else {
            s.push_str(&format!("{},{}\n", num(x[0]), num(*v)));
        }
    }
    fs::write(path, s)
}

pub fn write_trace_csv(path: &Path, tr: &BoundaryTrace) -> io::Result<()> {
    let mut s = String::from("param,x,y,q,residual,flagged\n");
    for n in &tr.nodes {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            num(n.param),
            num(n.point[0]),
            num(n.point[1]),
            num(n.q),
            num(n.residual),
            n.flagged
        ));
    }
    fs::write(path, s)
}

pub fn write_scan_csv(path: &Path, t: &ScanTable) -> io::Result<()> {
    let mut s = String::from(
        "p,gap_min,classification,outcome,iterations,defect,defect_relative,tolerance,passes_identity,violation\n",
    );
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for r in &t.rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            num(r.p),
            num(r.gap_min),
            serde_json::to_value(r.classification).unwrap().as_str().unwrap(),
            serde_json::to_value(r.outcome).unwrap().as_str().unwrap(),
            r.iterations,
            opt(r.defect),
            opt(r.defect_relative),
            num(r.tolerance),
            r.passes_identity,
            r.violation
        ));
    }
    fs::write(path, s)
}
