//! Dataset manifests, loaders and the per-snapshot text converter.
//!
//! A dataset directory holds `manifest.txt`, a flat `key = value` file,
//! next to its data. Two layouts are supported: one packed binary matrix,
//! or one delimited-text file per snapshot whose name is
//! `<prefix><index><extension>` with a decimal index (zero padding
//! allowed). Text snapshots list one grid point per row; columns are
//! assigned roles (`x`, `y`, `u`, `v`, `w`, or `-` to skip). Coordinates
//! may live in a separate mesh file instead. When coordinates are known
//! the points are placed on the grid by sorting the distinct `x` and `y`
//! values, so the row order inside a file is irrelevant; without them,
//! row `p` is grid point `p` of the flattening convention.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use super::packed::{self, FLAG_MEAN_REMOVED};
use crate::datamatrix::{DataMatrix, GridMeta};
use crate::{Error, RMatrix, Result};

pub const MANIFEST_NAME: &str = "manifest.txt";
pub const PACKED_NAME: &str = "data.mdk";
/// Relative tolerance for merging coordinates onto grid lines.
const COORD_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    PerSnapshotCsv,
    PackedBinary,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NanPolicy {
    #[default]
    Reject,
    /// Replace NaN cells by zero and report how many were replaced.
    ZeroFill,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Delimiter {
    /// Comma, semicolon or tab if the first data row contains one,
    /// whitespace otherwise.
    #[default]
    Auto,
    Comma,
    Semicolon,
    Tab,
    Whitespace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    X,
    Y,
    U,
    V,
    W,
    Skip,
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, $( $text:literal => $val:expr ),+ $(,)?) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $( $text => Ok($val), )+
                    other => Err(Error::Config(format!("unknown {} '{other}'", $what))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $( if *self == $val { return f.write_str($text); } )+
                unreachable!()
            }
        }
    };
}

keyword_enum!(Layout, "layout", "per_snapshot_csv" => Layout::PerSnapshotCsv, "packed_binary" => Layout::PackedBinary);
keyword_enum!(NanPolicy, "NaN policy", "reject" => NanPolicy::Reject, "zero_fill" => NanPolicy::ZeroFill);
keyword_enum!(
    Delimiter, "delimiter",
    "auto" => Delimiter::Auto, "comma" => Delimiter::Comma, "semicolon" => Delimiter::Semicolon,
    "tab" => Delimiter::Tab, "whitespace" => Delimiter::Whitespace,
);
keyword_enum!(
    Column, "column role",
    "x" => Column::X, "y" => Column::Y, "u" => Column::U, "v" => Column::V, "w" => Column::W, "-" => Column::Skip,
);

fn parse_columns(s: &str) -> Result<Vec<Column>> {
    s.split(',').map(str::parse).collect()
}

fn format_columns(c: &[Column]) -> String {
    c.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

/// Value columns in component order.
fn components(columns: &[Column]) -> Vec<usize> {
    [Column::U, Column::V, Column::W]
        .iter()
        .filter_map(|role| columns.iter().position(|c| c == role))
        .collect()
}

fn coordinates(columns: &[Column]) -> Option<(usize, usize)> {
    let x = columns.iter().position(|c| *c == Column::X)?;
    let y = columns.iter().position(|c| *c == Column::Y)?;
    Some((x, y))
}

/// Description of a dataset on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    /// Directory holding the data; relative file names resolve against it.
    pub path: PathBuf,
    pub layout: Layout,
    pub mesh_file: Option<PathBuf>,
    pub n_t: usize,
    pub f_s: f64,
    pub n_x: usize,
    pub n_y: usize,
    pub n_components: usize,
    pub dx: f64,
    /// Packed layout: file name of the matrix.
    pub data_file: String,
    pub mean_removed: bool,
    pub snapshot_prefix: String,
    pub snapshot_extension: String,
    pub columns: Vec<Column>,
    pub mesh_columns: Vec<Column>,
    pub delimiter: Delimiter,
    pub nan_policy: NanPolicy,
}

impl DatasetManifest {
    fn base(path: &Path, layout: Layout, meta: &GridMeta, n_t: usize) -> Self {
        DatasetManifest {
            path: path.to_path_buf(),
            layout,
            mesh_file: None,
            n_t,
            f_s: meta.f_s,
            n_x: meta.n_x,
            n_y: meta.n_y,
            n_components: meta.n_components,
            dx: meta.dx,
            data_file: PACKED_NAME.into(),
            mean_removed: false,
            snapshot_prefix: "snap_".into(),
            snapshot_extension: ".csv".into(),
            columns: Vec::new(),
            mesh_columns: vec![Column::X, Column::Y],
            delimiter: Delimiter::Auto,
            nan_policy: NanPolicy::Reject,
        }
    }

    pub fn meta(&self) -> Result<GridMeta> {
        GridMeta::new(self.n_x, self.n_y, self.n_components, self.dx, self.f_s)
    }

    /// Read `manifest.txt` from a dataset directory, or a manifest file.
    pub fn read(path: &Path) -> Result<Self> {
        let file = if path.is_dir() { path.join(MANIFEST_NAME) } else { path.to_path_buf() };
        let text = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
        let dir = file.parent().map(Path::to_path_buf).unwrap_or_default();
        let kv: BTreeMap<String, (usize, String)> = super::config::parse_key_values(&text, &file)?
            .into_iter()
            .map(|(line, k, v)| (k.replace('-', "_"), (line, v)))
            .collect();
        let get = |k: &str| kv.get(k).map(|(_, v)| v.as_str());
        let bad = |k: &str, msg: String| Error::Parse {
            path: file.clone(),
            line: kv.get(k).map_or(0, |(l, _)| *l),
            message: format!("{k}: {msg}"),
        };
        let need = |k: &str| get(k).ok_or_else(|| bad(k, "required key is missing".into()));
        fn num<T: FromStr>(v: &str) -> std::result::Result<T, String>
        where
            T::Err: fmt::Display,
        {
            v.parse::<T>().map_err(|e| format!("'{v}': {e}"))
        }
        let layout: Layout = need("layout")?.parse().map_err(|e: Error| bad("layout", e.to_string()))?;
        let f_s: f64 = num(need("f_s")?).map_err(|m| bad("f_s", m))?;
        let meta = GridMeta::points(1, f_s).map_err(|e| bad("f_s", e.to_string()))?;
        let mut m = Self::base(&dir, layout, &meta, 0);
        m.n_t = num(need("n_t")?).map_err(|e| bad("n_t", e))?;
        m.n_x = num(need("n_x")?).map_err(|e| bad("n_x", e))?;
        m.n_y = num(need("n_y")?).map_err(|e| bad("n_y", e))?;
        m.n_components = num(need("n_components")?).map_err(|e| bad("n_components", e))?;
        if let Some(v) = get("dx") {
            m.dx = num(v).map_err(|e| bad("dx", e))?;
        }
        if let Some(v) = get("mean_removed") {
            m.mean_removed = num(v).map_err(|e| bad("mean_removed", e))?;
        }
        if let Some(v) = get("data_file") {
            m.data_file = v.into();
        }
        if let Some(v) = get("mesh_file") {
            m.mesh_file = Some(v.into());
        }
        if let Some(v) = get("snapshot_prefix") {
            m.snapshot_prefix = v.into();
        }
        if let Some(v) = get("snapshot_extension") {
            m.snapshot_extension = v.into();
        }
        if let Some(v) = get("columns") {
            m.columns = parse_columns(v).map_err(|e| bad("columns", e.to_string()))?;
        }
        if let Some(v) = get("mesh_columns") {
            m.mesh_columns = parse_columns(v).map_err(|e| bad("mesh_columns", e.to_string()))?;
        }
        if let Some(v) = get("delimiter") {
            m.delimiter = v.parse().map_err(|e: Error| bad("delimiter", e.to_string()))?;
        }
        if let Some(v) = get("nan_policy") {
            m.nan_policy = v.parse().map_err(|e: Error| bad("nan_policy", e.to_string()))?;
        }
        m.validate().map_err(|e| bad("layout", e.to_string()))?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        self.meta()?;
        if self.n_t == 0 {
            return Err(Error::Config("n_t must be ≥ 1".into()));
        }
        if self.layout == Layout::PerSnapshotCsv {
            let comps = components(&self.columns);
            if comps.len() != self.n_components {
                return Err(Error::Config(format!(
                    "columns '{}' name {} velocity components, manifest declares {}",
                    format_columns(&self.columns),
                    comps.len(),
                    self.n_components
                )));
            }
            if self.mesh_file.is_some() && coordinates(&self.mesh_columns).is_none() {
                return Err(Error::Config("mesh_columns must name both x and y".into()));
            }
        }
        Ok(())
    }

    /// Write `manifest.txt` into [`Self::path`].
    pub fn write(&self) -> Result<PathBuf> {
        let file = self.path.join(MANIFEST_NAME);
        fs::write(&file, self.to_text()).map_err(|e| Error::io(&file, e))?;
        Ok(file)
    }

    pub fn to_text(&self) -> String {
        let mut lines = vec![
            format!("layout = {}", self.layout),
            format!("n_t = {}", self.n_t),
            format!("f_s = {:?}", self.f_s),
            format!("n_x = {}", self.n_x),
            format!("n_y = {}", self.n_y),
            format!("n_components = {}", self.n_components),
            format!("dx = {:?}", self.dx),
        ];
        match self.layout {
            Layout::PackedBinary => {
                lines.push(format!("data_file = {}", self.data_file));
                lines.push(format!("mean_removed = {}", self.mean_removed));
            }
            Layout::PerSnapshotCsv => {
                lines.push(format!("snapshot_prefix = {}", self.snapshot_prefix));
                lines.push(format!("snapshot_extension = {}", self.snapshot_extension));
                lines.push(format!("columns = {}", format_columns(&self.columns)));
                if let Some(mesh) = &self.mesh_file {
                    lines.push(format!("mesh_file = {}", mesh.display()));
                    lines.push(format!("mesh_columns = {}", format_columns(&self.mesh_columns)));
                }
                lines.push(format!("delimiter = {}", self.delimiter));
                lines.push(format!("nan_policy = {}", self.nan_policy));
            }
        }
        lines.join("\n") + "\n"
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.path.join(p)
        }
    }
}

/// NaN cells replaced under [`NanPolicy::ZeroFill`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub nan_cells: usize,
    /// Snapshot indices that contained at least one NaN.
    pub snapshots_with_nan: Vec<usize>,
}

pub fn load_dataset(manifest: &DatasetManifest) -> Result<DataMatrix> {
    load_dataset_with_report(manifest).map(|(d, _)| d)
}

pub fn load_dataset_with_report(manifest: &DatasetManifest) -> Result<(DataMatrix, LoadReport)> {
    manifest.validate()?;
    let meta = manifest.meta()?;
    match manifest.layout {
        Layout::PackedBinary => {
            let file = manifest.resolve(Path::new(&manifest.data_file));
            let (values, header) = packed::read_packed(&file)?;
            if header.n_s != meta.n_s() || header.n_t != manifest.n_t {
                return Err(Error::Shape(format!(
                    "{}: holds {}×{}, manifest declares {}×{}",
                    file.display(),
                    header.n_s,
                    header.n_t,
                    meta.n_s(),
                    manifest.n_t
                )));
            }
            let mut d = DataMatrix::new(values, meta)?;
            d.set_mean_removed(header.flags & FLAG_MEAN_REMOVED != 0);
            Ok((d, LoadReport::default()))
        }
        Layout::PerSnapshotCsv => load_csv(manifest, meta),
    }
}

/// Snapshot files in index order; the indices must be consecutive.
pub fn snapshot_files(manifest: &DatasetManifest) -> Result<Vec<PathBuf>> {
    let dir = &manifest.path;
    let (prefix, ext) = (&manifest.snapshot_prefix, &manifest.snapshot_extension);
    let mut found: Vec<(u64, usize, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(mid) = name.strip_prefix(prefix.as_str()).and_then(|r| r.strip_suffix(ext.as_str())) else {
            continue;
        };
        if mid.is_empty() || !mid.bytes().all(|b| b.is_ascii_digit()) {
            continue;
        }
        if let Ok(i) = mid.parse::<u64>() {
            found.push((i, mid.len(), entry.path()));
        }
    }
    found.sort_by_key(|f| f.0);
    let first = found.first().map_or(0, |f| f.0);
    let width = found.first().map_or(5, |f| f.1);
    let expected = |k: usize| dir.join(format!("{prefix}{:0width$}{ext}", first + k as u64));
    for k in 0..manifest.n_t {
        match found.get(k) {
            Some(f) if f.0 == first + k as u64 => {}
            _ => {
                return Err(Error::MissingSnapshot {
                    index: k,
                    path: expected(k),
                })
            }
        }
    }
    if found.len() > manifest.n_t {
        return Err(Error::Shape(format!(
            "{} snapshot files found in {}, manifest declares n_t = {}",
            found.len(),
            dir.display(),
            manifest.n_t
        )));
    }
    Ok(found.into_iter().map(|f| f.2).collect())
}

/// Numeric rows of a delimited text file, skipping leading header lines.
fn read_table(path: &Path, delimiter: Delimiter) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table(&text, delimiter, path)
}

fn split_fields(line: &str, d: Delimiter) -> Vec<&str> {
    match d {
        Delimiter::Comma => line.split(',').map(str::trim).collect(),
        Delimiter::Semicolon => line.split(';').map(str::trim).collect(),
        Delimiter::Tab => line.split('\t').map(str::trim).collect(),
        Delimiter::Whitespace | Delimiter::Auto => line.split_whitespace().collect(),
    }
}

fn detect(line: &str) -> Delimiter {
    if line.contains(',') {
        Delimiter::Comma
    } else if line.contains(';') {
        Delimiter::Semicolon
    } else if line.contains('\t') {
        Delimiter::Tab
    } else {
        Delimiter::Whitespace
    }
}

fn parse_table(text: &str, delimiter: Delimiter, path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut delim = delimiter;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if delim == Delimiter::Auto {
            delim = detect(line);
        }
        let fields = split_fields(line, delim);
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            // header lines precede the data
            Err(_) if rows.is_empty() => {
                if delimiter == Delimiter::Auto {
                    delim = Delimiter::Auto;
                }
            }
            Err(e) => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: n + 1,
                    message: format!("non-numeric field: {e}"),
                })
            }
        }
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != rows[0].len()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("data row {i} has {} fields, the first has {}", r.len(), rows[0].len()),
        });
    }
    Ok(rows)
}

/// Grid line of each value after merging values closer than the tolerance.
fn grid_lines(values: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let tol = COORD_TOL * (hi - lo).abs().max(f64::MIN_POSITIVE);
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut line = vec![0; values.len()];
    let mut lines = Vec::new();
    for &i in &idx {
        if lines.last().is_none_or(|&l: &f64| values[i] - l > tol) {
            lines.push(values[i]);
        }
        line[i] = lines.len() - 1;
    }
    (line, lines)
}

/// Flattened spatial position of every row, plus the grid it implies.
fn place_points(rows: &[Vec<f64>], x: usize, y: usize, path: &Path) -> Result<(Vec<usize>, usize, usize, f64)> {
    let xs: Vec<f64> = rows.iter().map(|r| r[x]).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r[y]).collect();
    let (ix, xl) = grid_lines(&xs);
    let (iy, yl) = grid_lines(&ys);
    let (n_x, n_y) = (xl.len(), yl.len());
    if n_x * n_y != rows.len() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("{} points do not form a rectangular {n_x}×{n_y} grid", rows.len()),
        });
    }
    let pos: Vec<usize> = ix.iter().zip(&iy).map(|(a, b)| b * n_x + a).collect();
    let mut seen = vec![false; pos.len()];
    for &p in &pos {
        if std::mem::replace(&mut seen[p], true) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: "two points share a grid node".into(),
            });
        }
    }
    let dx = if n_x > 1 { (xl[n_x - 1] - xl[0]) / (n_x - 1) as f64 } else if n_y > 1 { (yl[n_y - 1] - yl[0]) / (n_y - 1) as f64 } else { 1.0 };
    Ok((pos, n_x, n_y, dx))
}

struct Placement {
    /// Flattened spatial index of each row of a snapshot file.
    pos: Vec<usize>,
    n_x: usize,
    n_y: usize,
    dx: f64,
}

fn placement(manifest: &DatasetManifest, first: &Path) -> Result<Placement> {
    let (rows, cols, path) = match &manifest.mesh_file {
        Some(mesh) => {
            let p = manifest.resolve(mesh);
            (read_table(&p, manifest.delimiter)?, &manifest.mesh_columns, p)
        }
        None => (read_table(first, manifest.delimiter)?, &manifest.columns, first.to_path_buf()),
    };
    if let Some(r) = rows.first() {
        if r.len() < cols.len() {
            return Err(Error::Parse {
                path,
                line: 0,
                message: format!("{} fields per row, {} columns declared", r.len(), cols.len()),
            });
        }
    }
    match coordinates(cols) {
        Some((x, y)) => {
            let (pos, n_x, n_y, dx) = place_points(&rows, x, y, &path)?;
            Ok(Placement { pos, n_x, n_y, dx })
        }
        None => Ok(Placement {
            pos: (0..rows.len()).collect(),
            n_x: manifest.n_x,
            n_y: manifest.n_y,
            dx: manifest.dx,
        }),
    }
}

fn load_csv(manifest: &DatasetManifest, meta: GridMeta) -> Result<(DataMatrix, LoadReport)> {
    let files = snapshot_files(manifest)?;
    let place = placement(manifest, &files[0])?;
    let n_grid = meta.n_x * meta.n_y;
    if (place.n_x, place.n_y) != (meta.n_x, meta.n_y) || place.pos.len() != n_grid {
        return Err(Error::Shape(format!(
            "files describe a {}×{} grid ({} points), manifest declares {}×{}",
            place.n_x,
            place.n_y,
            place.pos.len(),
            meta.n_x,
            meta.n_y
        )));
    }
    let comps = components(&manifest.columns);
    let width = manifest.columns.len();
    let columns: Vec<(Vec<f64>, usize)> = files
        .par_iter()
        .map(|f| {
            let rows = read_table(f, manifest.delimiter)?;
            if rows.len() != n_grid {
                return Err(Error::Parse {
                    path: f.clone(),
                    line: 0,
                    message: format!("{} data rows, expected {n_grid}", rows.len()),
                });
            }
            if rows.first().is_some_and(|r| r.len() < width) {
                return Err(Error::Parse {
                    path: f.clone(),
                    line: 0,
                    message: format!("fewer than {width} fields per row"),
                });
            }
            let mut col = vec![0.0; meta.n_s()];
            let mut nan = 0;
            for (row, &p) in rows.iter().zip(&place.pos) {
                for (c, &j) in comps.iter().enumerate() {
                    let v = row[j];
                    if v.is_nan() {
                        nan += 1;
                        if manifest.nan_policy == NanPolicy::Reject {
                            return Err(Error::NonFinite(format!(
                                "{}: NaN cell (rejected by the NaN policy)",
                                f.display()
                            )));
                        }
                    } else if !v.is_finite() {
                        return Err(Error::NonFinite(format!("{}: infinite cell", f.display())));
                    } else {
                        col[c * n_grid + p] = v;
                    }
                }
            }
            Ok((col, nan))
        })
        .collect::<Result<_>>()?;
    let mut report = LoadReport::default();
    let mut values = RMatrix::zeros(meta.n_s(), files.len());
    for (k, (col, nan)) in columns.into_iter().enumerate() {
        values.column_mut(k).copy_from_slice(&col);
        if nan > 0 {
            report.nan_cells += nan;
            report.snapshots_with_nan.push(k);
        }
    }
    if report.nan_cells > 0 {
        log::warn!(
            "{} NaN cells in {} snapshots replaced by zero",
            report.nan_cells,
            report.snapshots_with_nan.len()
        );
    }
    Ok((DataMatrix::new(values, meta)?, report))
}

/// Options of [`convert_snapshot_dir`].
#[derive(Clone, Debug)]
pub struct ConvertOptions {
    pub snapshot_prefix: String,
    pub snapshot_extension: String,
    /// Roles of the snapshot columns.
    pub columns: Vec<Column>,
    pub mesh_file: Option<PathBuf>,
    pub mesh_columns: Vec<Column>,
    pub delimiter: Delimiter,
    pub nan_policy: NanPolicy,
    pub f_s: f64,
    /// Grid spacing; inferred from the coordinates when absent.
    pub dx: Option<f64>,
    /// Grid size, needed only when no coordinates are available.
    pub grid: Option<(usize, usize)>,
}

impl ConvertOptions {
    /// Snapshots with `x, y, u, v` columns.
    pub fn new(prefix: &str, extension: &str, f_s: f64) -> Self {
        ConvertOptions {
            snapshot_prefix: prefix.into(),
            snapshot_extension: extension.into(),
            columns: vec![Column::X, Column::Y, Column::U, Column::V],
            mesh_file: None,
            mesh_columns: vec![Column::X, Column::Y],
            delimiter: Delimiter::Auto,
            nan_policy: NanPolicy::Reject,
            f_s,
            dx: None,
            grid: None,
        }
    }
}

/// Scan a directory of per-snapshot text files and write its manifest.
///
/// The grid is inferred from the coordinates of the mesh file, or of the
/// first snapshot; the snapshot count becomes `n_t`.
pub fn convert_snapshot_dir(dir: &Path, opts: &ConvertOptions) -> Result<DatasetManifest> {
    let mut m = DatasetManifest::base(dir, Layout::PerSnapshotCsv, &GridMeta::points(1, opts.f_s)?, usize::MAX);
    m.snapshot_prefix = opts.snapshot_prefix.clone();
    m.snapshot_extension = opts.snapshot_extension.clone();
    m.columns = opts.columns.clone();
    m.mesh_file = opts.mesh_file.clone();
    m.mesh_columns = opts.mesh_columns.clone();
    m.delimiter = opts.delimiter;
    m.nan_policy = opts.nan_policy;
    m.n_components = components(&m.columns).len();
    if m.n_components == 0 {
        return Err(Error::Config("columns must name at least one of u, v, w".into()));
    }
    m.n_t = count_snapshots(&m)?;
    let files = snapshot_files(&m)?;
    if let Some((nx, ny)) = opts.grid {
        m.n_x = nx;
        m.n_y = ny;
    }
    let place = placement(&m, &files[0])?;
    if coordinates(if m.mesh_file.is_some() { &m.mesh_columns } else { &m.columns }).is_some() {
        m.n_x = place.n_x;
        m.n_y = place.n_y;
        m.dx = opts.dx.unwrap_or(place.dx);
    } else {
        let (nx, ny) = opts
            .grid
            .ok_or_else(|| Error::Config("no coordinates available: the grid size must be given".into()))?;
        if nx * ny != place.pos.len() {
            return Err(Error::Shape(format!("{} points per snapshot cannot fill a {nx}×{ny} grid", place.pos.len())));
        }
        m.dx = opts.dx.unwrap_or(1.0);
    }
    m.validate()?;
    m.write()?;
    Ok(m)
}

fn count_snapshots(m: &DatasetManifest) -> Result<usize> {
    let mut count = 0;
    for entry in fs::read_dir(&m.path).map_err(|e| Error::io(&m.path, e))? {
        let entry = entry.map_err(|e| Error::io(&m.path, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(mid) = name
            .strip_prefix(m.snapshot_prefix.as_str())
            .and_then(|r| r.strip_suffix(m.snapshot_extension.as_str()))
        {
            if !mid.is_empty() && mid.bytes().all(|b| b.is_ascii_digit()) {
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::MissingSnapshot {
            index: 0,
            path: m.path.join(format!("{}00000{}", m.snapshot_prefix, m.snapshot_extension)),
        });
    }
    Ok(count)
}

/// Save `d` as a packed binary dataset in `dir` (created if needed).
pub fn save_dataset(d: &DataMatrix, dir: &Path) -> Result<DatasetManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut m = DatasetManifest::base(dir, Layout::PackedBinary, d.meta(), d.n_t());
    m.mean_removed = d.mean_removed();
    let flags = if d.mean_removed() { FLAG_MEAN_REMOVED } else { 0 };
    packed::write_packed(&dir.join(PACKED_NAME), d.values(), flags)?;
    m.write()?;
    Ok(m)
}

/// Save `d` as one `x, y, u[, v, w]` text file per snapshot in `dir`.
pub fn save_dataset_csv(d: &DataMatrix, dir: &Path) -> Result<DatasetManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = d.meta();
    if meta.n_components > 3 {
        return Err(Error::Domain("text snapshots hold at most 3 components".into()));
    }
    let mut m = DatasetManifest::base(dir, Layout::PerSnapshotCsv, meta, d.n_t());
    m.columns = [Column::X, Column::Y, Column::U, Column::V, Column::W][..2 + meta.n_components].to_vec();
    m.delimiter = Delimiter::Comma;
    let n_grid = meta.n_x * meta.n_y;
    let names: Vec<&str> = ["u", "v", "w"][..meta.n_components].to_vec();
    let header = format!("x,y,{}\n", names.join(","));
    (0..d.n_t()).into_par_iter().try_for_each(|k| {
        let mut text = header.clone();
        let col = d.values().column(k);
        for p in 0..n_grid {
            let (ix, iy) = (p % meta.n_x, p / meta.n_x);
            text.push_str(&format!("{:.16e},{:.16e}", ix as f64 * meta.dx, iy as f64 * meta.dx));
            for c in 0..meta.n_components {
                text.push_str(&format!(",{:.16e}", col[c * n_grid + p]));
            }
            text.push('\n');
        }
        let path = dir.join(format!("{}{:05}{}", m.snapshot_prefix, k, m.snapshot_extension));
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    })?;
    m.write()?;
    Ok(m)
}
