//! Line-oriented text format for multi-patch geometries.
//!
//! ```text
//! # comment
//! patches 1
//! patch
//! degree 1 1
//! knots_u 0 0 1 1
//! knots_v 0 0 1 1
//! control 2 2
//! 0 0  1 0
//! 0 1  1 1
//! end
//! boundary 0 west
//! ```
//!
//! Control rows run over `v`; each row lists the `x y` pairs of one row in
//! `u` order. `boundary` lines are optional; when present they must name
//! exactly the sides that the topology detects as boundary.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::bspline::KnotVector;
use crate::geometry::{GeometryMap, MultiPatchTopology, Point, Side};
use crate::{Error, Result};

/// Parsed geometry file.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryDocument {
    pub patches: Vec<GeometryMap>,
    /// Declared boundary sides, if the file lists any.
    pub boundary: Option<Vec<(usize, Side)>>,
}

impl GeometryDocument {
    pub fn new(patches: Vec<GeometryMap>) -> Self {
        Self { patches, boundary: None }
    }

    /// Checks declared boundary sides against the detected topology.
    pub fn check_boundary(&self, topology: &MultiPatchTopology) -> Result<()> {
        let Some(declared) = &self.boundary else { return Ok(()) };
        let declared: BTreeSet<(usize, usize)> = declared.iter().map(|&(k, s)| (k, s.index())).collect();
        let detected: BTreeSet<(usize, usize)> =
            topology.boundary_sides().into_iter().map(|(k, s)| (k, s.index())).collect();
        if declared != detected {
            let missing: Vec<_> = detected.difference(&declared).collect();
            let extra: Vec<_> = declared.difference(&detected).collect();
            return Err(Error::NonConforming(format!(
                "declared boundary differs from detected one: undeclared {missing:?}, not on boundary {extra:?}"
            )));
        }
        Ok(())
    }
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::West => "west",
        Side::East => "east",
        Side::South => "south",
        Side::North => "north",
    }
}

fn parse_side(tok: &str, line: usize) -> Result<Side> {
    match tok {
        "west" => Ok(Side::West),
        "east" => Ok(Side::East),
        "south" => Ok(Side::South),
        "north" => Ok(Side::North),
        _ => tok
            .parse::<usize>()
            .ok()
            .and_then(|i| Side::from_index(i).ok())
            .ok_or_else(|| perr(line, format!("unknown side `{tok}`"))),
    }
}

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, Vec<&'a str>)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, Vec<&'a str>)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").split_whitespace().collect::<Vec<_>>()))
                .filter(|(_, t)| !t.is_empty()),
        );
        Self { inner: it.peekable(), last: 0 }
    }

    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        let r = self.inner.next();
        if let Some((l, _)) = &r {
            self.last = *l;
        }
        r
    }

    fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        self.next().ok_or_else(|| perr(self.last + 1, format!("unexpected end of file, expected {what}")))
    }

    fn keyword(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (l, t) = self.expect(&format!("`{key}`"))?;
        if t[0] != key {
            return Err(perr(l, format!("expected `{key}`, found `{}`", t[0])));
        }
        Ok((l, t[1..].to_vec()))
    }
}

fn nums<T: std::str::FromStr>(toks: &[&str], line: usize, field: &str) -> Result<Vec<T>> {
    toks.iter()
        .map(|t| t.parse::<T>().map_err(|_| perr(line, format!("{field}: cannot parse `{t}`"))))
        .collect()
}

fn exact_count<T>(v: Vec<T>, n: usize, line: usize, field: &str) -> Result<Vec<T>> {
    if v.len() != n {
        return Err(perr(line, format!("{field}: expected {n} values, found {}", v.len())));
    }
    Ok(v)
}

/// Parses a geometry document and validates every patch (`det J > 0`).
pub fn parse_geometry(text: &str) -> Result<GeometryDocument> {
    let mut lines = Lines::new(text);
    let (l, t) = lines.keyword("patches")?;
    let count = exact_count(nums::<usize>(&t, l, "patches")?, 1, l, "patches")?[0];
    if count == 0 {
        return Err(perr(l, "patches: at least one patch is required"));
    }
    let mut patches = Vec::with_capacity(count);
    for k in 0..count {
        lines.keyword("patch")?;
        let (l, t) = lines.keyword("degree")?;
        let deg = exact_count(nums::<usize>(&t, l, "degree")?, 2, l, "degree")?;
        let mut kvs = Vec::with_capacity(2);
        for (dir, key) in ["knots_u", "knots_v"].into_iter().enumerate() {
            let (l, t) = lines.keyword(key)?;
            let knots = nums::<f64>(&t, l, key)?;
            kvs.push(KnotVector::new(deg[dir], knots).map_err(|e| perr(l, format!("{key}: {e}")))?);
        }
        let (nu, nv) = (kvs[0].num_basis(), kvs[1].num_basis());
        let (l, t) = lines.keyword("control")?;
        let dims = exact_count(nums::<usize>(&t, l, "control")?, 2, l, "control")?;
        if dims != [nu, nv] {
            return Err(perr(l, format!("control: grid {}x{} does not match knots ({nu}x{nv})", dims[0], dims[1])));
        }
        let mut control: Vec<Point> = Vec::with_capacity(nu * nv);
        for _ in 0..nv {
            let (l, t) = lines.expect("control row")?;
            let row = exact_count(nums::<f64>(&t, l, "control row")?, 2 * nu, l, "control row")?;
            control.extend(row.chunks(2).map(|c| [c[0], c[1]]));
        }
        let (l, _) = lines.keyword("end")?;
        let [ku, kv]: [KnotVector; 2] = kvs.try_into().expect("two knot vectors");
        let geom = GeometryMap::new(ku, kv, control).map_err(|e| perr(l, format!("patch {k}: {e}")))?;
        geom.validate(k).map_err(|e| perr(l, format!("patch {k}: {e}")))?;
        patches.push(geom);
    }
    let mut boundary = None;
    while let Some((l, t)) = lines.next() {
        if t[0] != "boundary" || t.len() != 3 {
            return Err(perr(l, format!("expected `boundary <patch> <side>`, found `{}`", t.join(" "))));
        }
        let k: usize = t[1].parse().map_err(|_| perr(l, format!("boundary: cannot parse patch `{}`", t[1])))?;
        if k >= count {
            return Err(perr(l, format!("boundary: patch {k} out of range")));
        }
        boundary.get_or_insert_with(Vec::new).push((k, parse_side(t[2], l)?));
    }
    Ok(GeometryDocument { patches, boundary })
}

fn join(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Serializes a document; `parse_geometry` reads it back exactly.
pub fn write_geometry(doc: &GeometryDocument) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "patches {}", doc.patches.len());
    for g in &doc.patches {
        let (nu, nv) = g.control_dims();
        let _ = writeln!(s, "patch");
        let _ = writeln!(s, "degree {} {}", g.knots_u().degree(), g.knots_v().degree());
        let _ = writeln!(s, "knots_u {}", join(g.knots_u().knots().iter().copied()));
        let _ = writeln!(s, "knots_v {}", join(g.knots_v().knots().iter().copied()));
        let _ = writeln!(s, "control {nu} {nv}");
        for row in g.control_points().chunks(nu) {
            let _ = writeln!(s, "{}", join(row.iter().flat_map(|c| [c[0], c[1]])));
        }
        let _ = writeln!(s, "end");
    }
    for &(k, side) in doc.boundary.iter().flatten() {
        let _ = writeln!(s, "boundary {k} {}", side_name(side));
    }
    s
}
