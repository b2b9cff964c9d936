//! Deterministic machine-readable output.
//!
//! Reports are JSON with a fixed field order and fixed float formatting
//! (`%.12e`), so identical inputs produce byte-identical files. The writer is
//! deliberately minimal: objects are ordered vectors of pairs, floats never
//! round-trip through locale- or platform-dependent formatting.

use std::fmt::Write as _;
use std::io;

use crate::algebra::StructureConstants;
use crate::classify::{ClassificationResult, VectorField};
use crate::gauge::EquivTransform;
use crate::verify::ResidualReport;

pub const SCHEMA: &str = "fkdv5-report/1";

#[derive(Clone, Debug)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

impl Json {
    pub fn obj(pairs: Vec<(&str, Json)>) -> Json {
        Json::Obj(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    pub fn str(s: impl Into<String>) -> Json {
        Json::Str(s.into())
    }

    pub fn to_pretty(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, indent: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Json::Num(x) => out.push_str(&fmt_float(*x)),
            Json::Str(s) => write_escaped(out, s),
            Json::Arr(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    push_indent(out, indent + 1);
                    item.write(out, indent + 1);
                }
                out.push('\n');
                push_indent(out, indent);
                out.push(']');
            }
            Json::Obj(pairs) => {
                if pairs.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push('{');
                for (i, (k, v)) in pairs.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    push_indent(out, indent + 1);
                    write_escaped(out, k);
                    out.push_str(": ");
                    v.write(out, indent + 1);
                }
                out.push('\n');
                push_indent(out, indent);
                out.push('}');
            }
        }
    }
}

fn push_indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_escaped(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

/// C-style `%.12e` (two-or-more exponent digits, explicit sign); the one
/// float format used everywhere in reports and CSV.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "null".into();
    }
    if x.is_infinite() {
        return if x > 0.0 {
            "1e999".into()
        } else {
            "-1e999".into()
        };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponential format");
    let (sign, digits) = match exp.strip_prefix('-') {
        Some(d) => ('-', d),
        None => ('+', exp),
    };
    format!("{mantissa}e{sign}{digits:0>2}")
}

/// Top-level report wrapper: schema version first, then the command name
/// and its sections in the given order.
pub fn report(command: &str, sections: Vec<(&str, Json)>) -> Json {
    let mut pairs = vec![
        ("schema", Json::str(SCHEMA)),
        ("command", Json::str(command)),
    ];
    pairs.extend(sections);
    Json::obj(pairs)
}

pub fn equiv_json(g: &EquivTransform) -> Json {
    Json::obj(vec![
        ("time_map", Json::str(g.map.to_string())),
        ("delta1", Json::Num(g.delta1)),
        ("delta2", Json::Num(g.delta2)),
    ])
}

pub fn classification_json(c: &ClassificationResult) -> Json {
    Json::obj(vec![
        ("case", Json::str(c.case.to_string())),
        ("epsilon", Json::Num(c.epsilon)),
        ("rho", c.rho.map_or(Json::Null, Json::Num)),
        ("m", c.m.map_or(Json::Null, Json::Num)),
        ("kappa", Json::Num(c.kappa)),
        ("lambda", Json::Num(c.lambda)),
        ("fit_residual", Json::Num(c.fit.residual)),
        (
            "classifying_triple",
            Json::Arr(vec![
                Json::Num(c.fit.p),
                Json::Num(c.fit.q),
                Json::Num(c.fit.r),
            ]),
        ),
        ("gauge", equiv_json(&c.gauge)),
        ("normalizer", equiv_json(&c.normalizer)),
        (
            "canonical_interval",
            Json::Arr(vec![
                Json::Num(c.canonical_interval.0),
                Json::Num(c.canonical_interval.1),
            ]),
        ),
    ])
}

pub fn basis_json(fields: &[VectorField]) -> Json {
    Json::Arr(
        fields
            .iter()
            .map(|f| Json::str(f.to_string()))
            .collect(),
    )
}

pub fn residual_json(r: &ResidualReport, tol: f64) -> Json {
    Json::obj(vec![
        ("max_rel", Json::Num(r.max_rel)),
        ("mean_rel", Json::Num(r.mean_rel)),
        (
            "worst_point",
            Json::Arr(vec![Json::Num(r.worst.0), Json::Num(r.worst.1)]),
        ),
        ("grid", Json::str(format!("{}x{}", r.nt, r.nx))),
        ("tol", Json::Num(tol)),
    ])
}

pub fn structure_json(sc: &StructureConstants) -> Json {
    let dim = sc.dim();
    let mut brackets = Vec::new();
    for i in 0..dim {
        for j in (i + 1)..dim {
            brackets.push(Json::obj(vec![
                ("i", Json::Int(i as i64 + 1)),
                ("j", Json::Int(j as i64 + 1)),
                (
                    "coeffs",
                    Json::Arr(sc.c[i][j].iter().map(|&v| Json::Num(v)).collect()),
                ),
            ]));
        }
    }
    Json::obj(vec![
        ("dim", Json::Int(dim as i64)),
        ("brackets", Json::Arr(brackets)),
        ("antisymmetry_defect", Json::Num(sc.antisymmetry_defect())),
        ("jacobi_defect", Json::Num(sc.jacobi_defect())),
    ])
}

/// CSV export of residual-report samples: `t,x,u,residual` per row.
pub fn write_csv<W: io::Write>(w: &mut W, points: &[(f64, f64, f64, f64)]) -> io::Result<()> {
    writeln!(w, "t,x,u,residual")?;
    for &(t, x, u, r) in points {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_float(t),
            fmt_float(x),
            fmt_float(u),
            fmt_float(r)
        )?;
    }
    Ok(())
}
