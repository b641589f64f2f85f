//! Labelled datasets, the neighbouring-database relation, and CSV ingestion.
//!
//! A [`Database`] is an ordered sequence of at least two [`Example`]s sharing
//! one input dimension. Two databases are neighbours when they agree on every
//! entry except the last, which is the convention [`Database::replace_last`]
//! produces.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{require_dim, Error, Result};
use crate::numfmt::format_real;

/// Binary class label, serialized as `-1` / `1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }

    /// Accepts `1`, `+1` and `-1` (surrounding whitespace ignored).
    pub fn parse(literal: &str) -> Option<Self> {
        match literal.trim() {
            "1" | "+1" => Some(Label::Positive),
            "-1" => Some(Label::Negative),
            _ => None,
        }
    }
}

impl From<Label> for i8 {
    fn from(label: Label) -> i8 {
        match label {
            Label::Negative => -1,
            Label::Positive => 1,
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(format!("label must be -1 or 1, got {other}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Negative => f.write_str("-1"),
            Label::Positive => f.write_str("+1"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub x: Vec<f64>,
    pub y: Label,
}

impl Example {
    pub fn new(x: Vec<f64>, y: Label) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("example coordinates"));
        }
        Ok(Self { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Database {
    entries: Vec<Example>,
    dim: usize,
}

impl Database {
    pub fn new(entries: Vec<Example>) -> Result<Self> {
        if entries.len() <= 1 {
            return Err(Error::Size { n: entries.len() });
        }
        let dim = entries[0].dim();
        for e in &entries {
            require_dim(dim, e.dim())?;
            if e.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("example coordinates"));
            }
        }
        Ok(Self { entries, dim })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Always false: construction rejects databases with fewer than two entries.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Example] {
        &self.entries
    }

    pub fn last(&self) -> &Example {
        self.entries.last().expect("database holds at least two entries")
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.entries.iter().map(|e| e.x.as_slice())
    }

    pub fn signs(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.y.sign()).collect()
    }

    /// The neighbouring database obtained by replacing the last entry with `e`.
    pub fn replace_last(&self, e: Example) -> Result<Database> {
        require_dim(self.dim, e.dim())?;
        let mut entries = self.entries.clone();
        *entries.last_mut().expect("non-empty") = e;
        Ok(Database {
            entries,
            dim: self.dim,
        })
    }

    /// Cyclic rotation that puts entry `index` in the last position, so that an
    /// arbitrary entry can be the one [`Database::replace_last`] swaps out.
    pub fn rotate_to_last(&self, index: usize) -> Database {
        let n = self.entries.len();
        let mut entries = self.entries.clone();
        entries.rotate_left((index + 1) % n);
        Database {
            entries,
            dim: self.dim,
        }
    }

    pub fn with_labels_flipped(&self) -> Database {
        Database {
            entries: self
                .entries
                .iter()
                .map(|e| Example {
                    x: e.x.clone(),
                    y: e.y.flipped(),
                })
                .collect(),
            dim: self.dim,
        }
    }

    /// Returns true when `self` and `other` have equal size and dimension and
    /// differ in at most one entry.
    pub fn is_neighbor_of(&self, other: &Database) -> bool {
        self.len() == other.len()
            && self.dim == other.dim
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .filter(|(a, b)| a != b)
                .count()
                <= 1
    }

    /// Writes the database as CSV, each real with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.entries {
            let mut line = String::new();
            for v in &e.x {
                line.push_str(&format_real(*v));
                line.push(',');
            }
            line.push_str(&e.y.to_string());
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

/// Parses a comma-separated dataset: `d` real columns followed by a label
/// column. Row indices in errors are zero-based data rows (header excluded).
pub fn load_csv<R: Read>(source: R, has_header: bool) -> Result<Database> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let mut entries = Vec::new();
    let mut width: Option<usize> = None;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() < 2 {
            return Err(Error::Parse {
                row,
                message: "expected at least one feature column and a label".into(),
            });
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Parse {
                    row,
                    message: format!("ragged row: {} columns, expected {w}", record.len()),
                })
            }
            _ => {}
        }
        let d = record.len() - 1;
        let mut x = Vec::with_capacity(d);
        for field in record.iter().take(d) {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                message: format!("not a real literal: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    message: format!("non-finite value {field:?}"),
                });
            }
            x.push(v);
        }
        let y = Label::parse(&record[d]).ok_or_else(|| Error::Label {
            row,
            value: record[d].to_string(),
        })?;
        entries.push(Example { x, y });
    }
    Database::new(entries)
}

/// Axis-aligned box used as the domain over which sup-norms are taken.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        require_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::param("box", "dimension must be at least 1"));
        }
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("box bounds"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::param("box", "lower must be <= upper componentwise"));
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[-r, r]^d`.
    pub fn symmetric(dim: usize, radius: f64) -> Result<Self> {
        Self::new(vec![-radius; dim], vec![radius; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn diameter(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l) * (u - l))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest Euclidean norm of a point in the box (attained at a corner).
    pub fn max_norm(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| {
                let m = l.abs().max(u.abs());
                m * m
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Largest absolute coordinate of a point in the box.
    pub fn max_abs_coordinate(&self) -> f64 {
        self.lower
            .iter()
            .chain(&self.upper)
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    /// Regular grid with `resolution` points per axis, endpoints included.
    /// Points are produced in row-major order (last axis fastest).
    pub fn grid(&self, resolution: usize) -> Result<Vec<Vec<f64>>> {
        if resolution < 2 {
            return Err(Error::param("grid_resolution", "must be at least 2"));
        }
        let d = self.dim();
        let total = resolution
            .checked_pow(d as u32)
            .ok_or_else(|| Error::param("grid_resolution", "grid too large"))?;
        let axes: Vec<Vec<f64>> = (0..d)
            .map(|a| axis_points(self.lower[a], self.upper[a], resolution))
            .collect();
        let mut points = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            points.push(idx.iter().enumerate().map(|(a, &i)| axes[a][i]).collect());
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < resolution {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(points)
    }

    /// All pairwise differences `x - y` of grid points, deduplicated: a lattice
    /// with `2 * resolution - 1` points per axis.
    pub fn grid_displacements(&self, resolution: usize) -> Result<Vec<Vec<f64>>> {
        if resolution < 2 {
            return Err(Error::param("grid_resolution", "must be at least 2"));
        }
        let span: Vec<f64> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .collect();
        let lattice = DomainBox::new(span.iter().map(|s| -s).collect(), span)?;
        lattice.grid(2 * resolution - 1)
    }
}

fn axis_points(lo: f64, hi: f64, resolution: usize) -> Vec<f64> {
    let step = (hi - lo) / (resolution - 1) as f64;
    (0..resolution)
        .map(|i| {
            if i == resolution - 1 {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}

/// Smallest box containing every point of `db`, widened by `margin` on each side.
pub fn bounding_box(db: &Database, margin: f64) -> Result<DomainBox> {
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::param("margin", "must be finite and >= 0"));
    }
    let d = db.dim();
    let mut lower = vec![f64::INFINITY; d];
    let mut upper = vec![f64::NEG_INFINITY; d];
    for x in db.points() {
        for a in 0..d {
            lower[a] = lower[a].min(x[a]);
            upper[a] = upper[a].max(x[a]);
        }
    }
    DomainBox::new(
        lower.into_iter().map(|v| v - margin).collect(),
        upper.into_iter().map(|v| v + margin).collect(),
    )
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn database() -> impl Strategy<Value = Database> {
        (1usize..4, 2usize..8).prop_flat_map(|(d, n)| {
            prop::collection::vec(
                (prop::collection::vec(-1e6f64..1e6, d), any::<bool>()),
                n,
            )
            .prop_map(|rows| {
                Database::new(
                    rows.into_iter()
                        .map(|(x, pos)| Example {
                            x,
                            y: if pos { Label::Positive } else { Label::Negative },
                        })
                        .collect(),
                )
                .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip(db in database()) {
            let mut buf = Vec::new();
            db.write_csv(&mut buf).unwrap();
            prop_assert_eq!(load_csv(buf.as_slice(), false).unwrap(), db);
        }

        #[test]
        fn neighbour_agrees_on_prefix(db in database(), flip in any::<bool>()) {
            let last = db.last().clone();
            let e = Example { x: last.x.iter().map(|v| v + 1.0).collect(), y: if flip { last.y.flipped() } else { last.y } };
            let nb = db.replace_last(e).unwrap();
            let n = db.len();
            prop_assert_eq!(&nb.entries()[..n - 1], &db.entries()[..n - 1]);
            prop_assert!(nb.is_neighbor_of(&db));
        }
    }
}
