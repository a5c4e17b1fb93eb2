//! Datasets: synthetic manifold generators, CSV ingest/export, normalization.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::norm;
use crate::{rng, Error, Result, Scalar};

/// High-dimensional points with optional integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    /// n × D, one point per row.
    pub points: Array2<T>,
    pub labels: Option<Vec<i64>>,
    pub name: String,
    /// Generating coordinates of synthetic data (n × intrinsic dim).
    pub intrinsic: Option<Array2<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(points: Array2<T>, labels: Option<Vec<i64>>, name: impl Into<String>) -> Result<Self> {
        let (n, dim) = points.dim();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("dataset needs at least 2 points, got {n}")));
        }
        if dim < 1 {
            return Err(Error::InvalidArgument("dataset needs at least one column".into()));
        }
        if let Some((idx, _)) = points.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite coordinate at row {}, column {}",
                idx.0, idx.1
            )));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "{} labels for {} points",
                    l.len(),
                    n
                )));
            }
        }
        Ok(Self {
            points: points.as_standard_layout().into_owned(),
            labels,
            name: name.into(),
            intrinsic: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    /// Coordinates of point `i` as a contiguous slice.
    pub fn row(&self, i: usize) -> &[T] {
        let d = self.dim();
        &self.points.as_slice().expect("points are stored row-major")[i * d..(i + 1) * d]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    SwissRoll,
    Helix,
    TwinPeaks,
    BrokenSwissRoll,
}

impl ManifoldKind {
    pub const ALL: [ManifoldKind; 4] = [
        ManifoldKind::SwissRoll,
        ManifoldKind::Helix,
        ManifoldKind::TwinPeaks,
        ManifoldKind::BrokenSwissRoll,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ManifoldKind::SwissRoll => "swiss_roll",
            ManifoldKind::Helix => "helix",
            ManifoldKind::TwinPeaks => "twin_peaks",
            ManifoldKind::BrokenSwissRoll => "broken_swiss_roll",
        }
    }

    pub fn intrinsic_dim(self) -> usize {
        match self {
            ManifoldKind::Helix => 1,
            _ => 2,
        }
    }

    /// Maps intrinsic coordinates to the ambient point in ℝ³.
    ///
    /// Swiss rolls take `(t, height)`, twin peaks `(x, y)`, the helix `(t)`.
    pub fn point(self, intrinsic: &[f64]) -> [f64; 3] {
        match self {
            ManifoldKind::SwissRoll | ManifoldKind::BrokenSwissRoll => {
                let (t, h) = (intrinsic[0], intrinsic[1]);
                [t * t.cos(), h, t * t.sin()]
            }
            ManifoldKind::Helix => {
                let t = intrinsic[0];
                let r = 2.0 + (8.0 * t).cos();
                [r * t.cos(), r * t.sin(), (8.0 * t).sin()]
            }
            ManifoldKind::TwinPeaks => {
                let (x, y) = (intrinsic[0], intrinsic[1]);
                [x, y, 10.0 * (PI * x).sin() * (3.0 * y).tanh()]
            }
        }
    }

    /// Intrinsic bounding box, one `(lo, hi)` per intrinsic coordinate.
    pub fn intrinsic_bounds(self) -> Vec<(f64, f64)> {
        match self {
            ManifoldKind::SwissRoll | ManifoldKind::BrokenSwissRoll => {
                vec![(1.5 * PI, 4.5 * PI), (0.0, 30.0)]
            }
            ManifoldKind::Helix => vec![(0.0, 2.0 * PI)],
            ManifoldKind::TwinPeaks => vec![(-1.0, 1.0), (-1.0, 1.0)],
        }
    }

    /// Checkerboard color of a point: 5 × 5 equal cells over the intrinsic
    /// rectangle for surfaces (label `(row + col) mod 2`), arc index out of
    /// 10 equal arcs for the helix.
    pub fn label(self, intrinsic: &[f64]) -> i64 {
        let cell = |value: f64, (lo, hi): (f64, f64), cells: usize| -> usize {
            let c = ((value - lo) / (hi - lo) * cells as f64).floor();
            (c.max(0.0) as usize).min(cells - 1)
        };
        let bounds = self.intrinsic_bounds();
        match self {
            ManifoldKind::Helix => cell(intrinsic[0], bounds[0], HELIX_ARCS) as i64,
            _ => {
                let row = cell(intrinsic[0], bounds[0], GRID_CELLS);
                let col = cell(intrinsic[1], bounds[1], GRID_CELLS);
                ((row + col) % 2) as i64
            }
        }
    }

    fn sample_intrinsic<R: Rng>(self, rng: &mut R) -> Vec<f64> {
        match self {
            ManifoldKind::SwissRoll => {
                let u: f64 = rng.gen();
                let v: f64 = rng.gen();
                vec![1.5 * PI * (1.0 + 2.0 * u), 30.0 * v]
            }
            ManifoldKind::BrokenSwissRoll => {
                // u uniform on [0, 2/5] ∪ [3/5, 1]
                let w: f64 = rng.gen::<f64>() * 0.8;
                let u = if w < 0.4 { w } else { w + 0.2 };
                let v: f64 = rng.gen();
                vec![1.5 * PI * (1.0 + 2.0 * u), 30.0 * v]
            }
            ManifoldKind::Helix => vec![2.0 * PI * rng.gen::<f64>()],
            ManifoldKind::TwinPeaks => {
                vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
            }
        }
    }
}

impl std::str::FromStr for ManifoldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ManifoldKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown manifold kind '{s}'")))
    }
}

const GRID_CELLS: usize = 5;
const HELIX_ARCS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: ManifoldKind,
    pub n: usize,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(kind: ManifoldKind, n: usize, noise_sigma: f64, seed: u64) -> Self {
        Self {
            kind,
            n,
            noise_sigma,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidSpec(format!("n must be at least 2, got {}", self.n)));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "noise_sigma must be finite and >= 0, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// Samples `spec.n` labelled points from the named manifold in ℝ³.
pub fn generate<T: Scalar>(spec: &GeneratorSpec) -> Result<Dataset<T>> {
    spec.validate()?;
    let kind = spec.kind;
    let mut rng = rng::substream(spec.seed, rng::GENERATE, 0);
    let idim = kind.intrinsic_dim();
    let mut points = Array2::<T>::zeros((spec.n, 3));
    let mut intrinsic = Array2::<T>::zeros((spec.n, idim));
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let coords = kind.sample_intrinsic(&mut rng);
        let p = kind.point(&coords);
        for (c, &v) in p.iter().enumerate() {
            let noise = if spec.noise_sigma > 0.0 {
                spec.noise_sigma * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            points[[i, c]] = T::of(v + noise);
        }
        for (c, &v) in coords.iter().enumerate() {
            intrinsic[[i, c]] = T::of(v);
        }
        labels.push(kind.label(&coords));
    }
    let mut ds = Dataset::new(points, Some(labels), kind.name())?;
    ds.intrinsic = Some(intrinsic);
    Ok(ds)
}

/// Centers the points, then divides by mean + sample standard deviation of
/// the centered point norms.
pub fn normalize<T: Scalar>(d: &Dataset<T>) -> Result<Dataset<T>> {
    let n = d.len();
    if n < 2 {
        return Err(Error::InvalidArgument("normalization needs at least 2 points".into()));
    }
    let mean = d
        .points
        .mean_axis(Axis(0))
        .expect("non-empty dataset has a mean");
    let centered = &d.points - &mean;
    let norms: Vec<T> = centered.rows().into_iter().map(norm).collect();
    let nf = T::of(n as f64);
    let mu = norms.iter().copied().sum::<T>() / nf;
    let var = norms.iter().map(|&r| (r - mu) * (r - mu)).sum::<T>() / T::of((n - 1) as f64);
    let denom = mu + var.sqrt();
    if denom <= T::zero() || denom.is_nan() {
        return Err(Error::DegenerateData(
            "all points coincide; normalization denominator is zero".into(),
        ));
    }
    Ok(Dataset {
        points: centered.mapv(|x| x / denom),
        labels: d.labels.clone(),
        name: d.name.clone(),
        intrinsic: d.intrinsic.clone(),
    })
}

/// Reads a dataset from a CSV file. See [`read_csv`].
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, label_column: Option<&str>) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv(file, label_column, &name).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            path: path.to_owned(),
            message,
        },
        other => other,
    })
}

/// Parses comma-separated numeric rows.
///
/// The first row is a header when none of its cells parse as a number.
/// Without a header, columns are named by their 0-based index. Header columns
/// whose name starts with `_` are metadata and skipped unless chosen as the
/// label column. Rows are numbered from 1 in error messages, not counting
/// the header.
pub fn read_csv<T: Scalar, R: Read>(reader: R, label_column: Option<&str>, name: &str) -> Result<Dataset<T>> {
    let parse_err = |message: String| Error::Parse {
        path: name.into(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let first = match records.next() {
        Some(r) => r.map_err(|e| parse_err(e.to_string()))?,
        None => return Err(parse_err("empty file".into())),
    };
    let is_header = first.iter().all(|c| c.parse::<f64>().is_err());
    let width = first.len();
    let columns: Vec<String> = if is_header {
        first.iter().map(str::to_owned).collect()
    } else {
        (0..width).map(|c| c.to_string()).collect()
    };

    let label_idx = match label_column {
        Some(lc) => Some(
            columns
                .iter()
                .position(|c| c == lc)
                .ok_or_else(|| parse_err(format!("label column '{lc}' not found")))?,
        ),
        None => None,
    };
    let feature_cols: Vec<usize> = (0..width)
        .filter(|&c| Some(c) != label_idx && !(is_header && columns[c].starts_with('_')))
        .collect();
    if feature_cols.is_empty() {
        return Err(parse_err("no numeric feature columns".into()));
    }

    let mut values: Vec<T> = Vec::new();
    let mut labels: Vec<i64> = Vec::new();
    let mut n = 0usize;
    let data_rows = std::iter::once(Ok(first))
        .filter(|_| !is_header)
        .chain(records);
    for (r, rec) in data_rows.enumerate() {
        let row_no = r + 1;
        let rec = rec.map_err(|e| parse_err(format!("row {row_no}: {e}")))?;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != width {
            return Err(parse_err(format!(
                "row {row_no}: expected {width} columns, found {}",
                rec.len()
            )));
        }
        for &c in &feature_cols {
            let cell = &rec[c];
            let v: f64 = cell.parse().map_err(|_| {
                parse_err(format!(
                    "row {row_no}, column {} ('{}'): non-numeric cell '{cell}'",
                    c + 1,
                    columns[c]
                ))
            })?;
            values.push(T::of(v));
        }
        if let Some(lc) = label_idx {
            let cell = &rec[lc];
            let label = cell
                .parse::<i64>()
                .ok()
                .or_else(|| {
                    cell.parse::<f64>()
                        .ok()
                        .filter(|v| v.fract() == 0.0 && v.abs() < 9.0e15)
                        .map(|v| v as i64)
                })
                .ok_or_else(|| {
                    parse_err(format!(
                        "row {row_no}, column {} ('{}'): label '{cell}' is not an integer",
                        lc + 1,
                        columns[lc]
                    ))
                })?;
            labels.push(label);
        }
        n += 1;
    }
    let points = Array2::from_shape_vec((n, feature_cols.len()), values)
        .map_err(|e| parse_err(e.to_string()))?;
    Dataset::new(points, label_idx.map(|_| labels), name)
}

/// Writes a dataset as CSV: coordinates `x0..`, then intrinsic coordinates
/// `_t0..` and `_label` when present.
pub fn write_dataset_csv<T: Scalar, W: Write>(d: &Dataset<T>, writer: W) -> Result<()> {
    let mut header: Vec<String> = (0..d.dim()).map(|c| format!("x{c}")).collect();
    if let Some(intr) = &d.intrinsic {
        header.extend((0..intr.ncols()).map(|c| format!("_t{c}")));
    }
    if d.labels.is_some() {
        header.push("_label".into());
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(&header).map_err(csv_io)?;
    for i in 0..d.len() {
        let mut rec: Vec<String> = d.points.row(i).iter().map(|v| v.to_string()).collect();
        if let Some(intr) = &d.intrinsic {
            rec.extend(intr.row(i).iter().map(|v| v.to_string()));
        }
        if let Some(l) = &d.labels {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec).map_err(csv_io)?;
    }
    w.flush().map_err(|e| csv_io(e.into()))?;
    Ok(())
}

/// Writes an embedding matrix as CSV with columns `y0..` and an optional `label`.
pub fn write_embedding_csv<T: Scalar, W: Write>(
    positions: &Array2<T>,
    labels: Option<&[i64]>,
    writer: W,
) -> Result<()> {
    let mut header: Vec<String> = (0..positions.ncols()).map(|c| format!("y{c}")).collect();
    if labels.is_some() {
        header.push("label".into());
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(&header).map_err(csv_io)?;
    for (i, row) in positions.rows().into_iter().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(l) = labels {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec).map_err(csv_io)?;
    }
    w.flush().map_err(|e| csv_io(e.into()))?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io {
        path: "<csv>".into(),
        source: std::io::Error::other(e.to_string()),
    }
}
