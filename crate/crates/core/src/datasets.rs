//! Labeled CSV ingestion, unit-range scaling, the reference clustering and
//! label-matching accuracy.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use pathfinding::prelude::{kuhn_munkres, Matrix as WeightMatrix};
use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::error::{Error, Result};
use crate::instance::{Clustering, Instance, Matrix};
use crate::kmeans;

/// Environment variable naming the directory that holds the dataset files.
pub const DATA_DIR_ENV: &str = "STABLEKM_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelColumn {
    Index(usize),
    /// The last column of every row.
    Last,
    /// Header name; requires `has_header`.
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub file_name: String,
    pub expected_n: Option<usize>,
    pub expected_k: Option<usize>,
    pub expected_d: Option<usize>,
    pub label_column: LabelColumn,
    pub delimiter: u8,
    pub has_header: bool,
    /// Keep the label column as a feature as well.
    pub label_is_feature: bool,
    pub source_note: String,
    pub checksum: Option<String>,
}

impl DatasetSpec {
    /// Spec for an arbitrary file: no shape expectations, label in the last column.
    pub fn adhoc(path: &Path) -> Self {
        Self {
            name: path.file_stem().map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned()),
            file_name: path.to_string_lossy().into_owned(),
            expected_n: None,
            expected_k: None,
            expected_d: None,
            label_column: LabelColumn::Last,
            delimiter: b',',
            has_header: false,
            label_is_feature: false,
            source_note: String::new(),
            checksum: None,
        }
    }
}

fn entry(name: &str, file: &str, n: usize, k: usize, d: usize, label: LabelColumn, note: &str) -> DatasetSpec {
    DatasetSpec {
        name: name.into(),
        file_name: file.into(),
        expected_n: Some(n),
        expected_k: Some(k),
        expected_d: Some(d),
        label_column: label,
        delimiter: b',',
        has_header: false,
        label_is_feature: false,
        source_note: note.into(),
        checksum: None,
    }
}

/// The four benchmark datasets. Files are not shipped; `source_note` says
/// where each one comes from.
pub fn registry() -> Vec<DatasetSpec> {
    let mut banknote = entry(
        "banknote",
        "data_banknote_authentication.txt",
        1372,
        2,
        5,
        LabelColumn::Last,
        "UCI ML repository, 'banknote authentication' (data_banknote_authentication.txt)",
    );
    // the benchmark's dimension count includes the class column
    banknote.label_is_feature = true;
    vec![
        entry("wine", "wine.data", 178, 3, 13, LabelColumn::Index(0), "UCI ML repository, 'Wine' (wine.data)"),
        entry("iris", "iris.data", 150, 3, 4, LabelColumn::Last, "UCI ML repository, 'Iris' (iris.data)"),
        banknote,
        entry(
            "letter",
            "letter-recognition.data",
            20000,
            26,
            16,
            LabelColumn::Index(0),
            "UCI ML repository, 'Letter Recognition' (letter-recognition.data)",
        ),
    ]
}

pub fn find_spec(name: &str) -> Option<DatasetSpec> {
    registry().into_iter().find(|s| s.name.eq_ignore_ascii_case(name))
}

/// Directory from [`DATA_DIR_ENV`], defaulting to `./data`.
pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV).map_or_else(|| PathBuf::from("data"), PathBuf::from)
}

pub fn dataset_path(spec: &DatasetSpec, dir: &Path) -> PathBuf {
    dir.join(&spec.file_name)
}

/// Registered datasets whose files are missing from `dir`.
pub fn missing_files(dir: &Path) -> Vec<String> {
    registry().iter().map(|s| dataset_path(s, dir)).filter(|p| !p.is_file()).map(|p| p.display().to_string()).collect()
}

/// Parses a labeled CSV file. Label tokens map to `0..k` in order of first
/// appearance; blank lines are skipped.
pub fn load_csv(path: &Path, spec: &DatasetSpec) -> Result<Instance> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter)
        .has_headers(spec.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Parse { path: path.into(), row: 0, column: 0, message: format!("{other:?}") },
        })?;
    let parse_err =
        |row: usize, column: usize, message: String| Error::Parse { path: path.into(), row, column, message };
    let label_idx_from_header = match &spec.label_column {
        LabelColumn::Name(name) => {
            let headers = reader.headers()?;
            Some(
                headers
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| parse_err(0, 0, format!("no column named '{name}'")))?,
            )
        }
        _ => None,
    };
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut label_ids: HashMap<String, usize> = HashMap::new();
    let mut width = None;
    for (r, record) in reader.records().enumerate() {
        let row = r + 1 + usize::from(spec.has_header);
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let cols = record.len();
        if *width.get_or_insert(cols) != cols {
            return Err(parse_err(row, cols, format!("expected {} columns, found {cols}", width.unwrap())));
        }
        let label_col = match &spec.label_column {
            LabelColumn::Index(i) => *i,
            LabelColumn::Last => cols - 1,
            LabelColumn::Name(_) => label_idx_from_header.expect("resolved above"),
        };
        if label_col >= cols {
            return Err(parse_err(row, label_col, format!("label column {label_col} out of range")));
        }
        for (c, cell) in record.iter().enumerate() {
            if c == label_col {
                let next = label_ids.len();
                labels.push(*label_ids.entry(cell.to_string()).or_insert(next));
                if !spec.label_is_feature {
                    continue;
                }
            }
            let v: f64 = cell.parse().map_err(|_| parse_err(row, c, format!("'{cell}' is not a number")))?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { row, column: c });
            }
            data.push(v);
        }
    }
    let n = labels.len();
    if n == 0 {
        return Err(parse_err(0, 0, "no data rows".into()));
    }
    let d = data.len() / n;
    let k = label_ids.len();
    for (what, expected, found) in
        [("rows", spec.expected_n, n), ("features", spec.expected_d, d), ("labels", spec.expected_k, k)]
    {
        if let Some(expected) = expected {
            if expected != found {
                return Err(Error::ShapeMismatch { what, expected, found });
            }
        }
    }
    Instance::new(Matrix::from_vec(n, d, data)?, Some(labels), spec.name.clone())
}

/// Writes points with the label (when present) as the last column, using the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv(path: &Path, inst: &Instance) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for i in 0..inst.n() {
        let mut fields: Vec<String> = inst.point(i).iter().map(|v| format!("{v:?}")).collect();
        if let Some(l) = inst.labels() {
            fields.push(l[i].to_string());
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Maps every feature affinely onto `[0, 1]`. Constant features become 0.
pub fn normalize_unit_range(inst: &Instance) -> Instance {
    let (n, d) = (inst.n(), inst.d());
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for i in 0..n {
        for (t, &v) in inst.point(i).iter().enumerate() {
            lo[t] = lo[t].min(v);
            hi[t] = hi[t].max(v);
        }
    }
    for t in 0..d {
        if hi[t] == lo[t] {
            warn!(feature = t, "constant feature mapped to 0");
        }
    }
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        for (t, &v) in inst.point(i).iter().enumerate() {
            let span = hi[t] - lo[t];
            data.push(if span > 0.0 { (v - lo[t]) / span } else { 0.0 });
        }
    }
    let points = Matrix::from_vec(n, d, data).expect("same shape");
    Instance::new(points, inst.labels().map(<[usize]>::to_vec), format!("{}-norm", inst.name()))
        .expect("scaling keeps values finite")
}

/// Lloyd's algorithm started from the centroids of the ground-truth labels.
pub fn ground_truth_lloyd(inst: &Instance, tol: f64, max_iter: usize) -> Result<Clustering> {
    ground_truth_lloyd_detailed(inst, tol, max_iter).map(|r| r.clustering)
}

pub fn ground_truth_lloyd_detailed(inst: &Instance, tol: f64, max_iter: usize) -> Result<kmeans::LloydRun> {
    let labels = inst.labels().ok_or(Error::MissingLabels)?;
    let (init, _) = kmeans::centroids(inst, labels, inst.label_count());
    kmeans::lloyd_detailed(inst, &init, tol, max_iter)
}

/// Largest fraction of points whose labels agree under a one-to-one mapping
/// between the two label sets.
pub fn recovery_score(a: &Clustering, b: &Clustering) -> Result<f64> {
    recovery_score_labels(&a.assignment, &b.assignment)
}

pub fn recovery_score_labels(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch { left: a.len(), right: b.len() });
    }
    let n = a.len();
    if n == 0 {
        return Ok(1.0);
    }
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    // the solver needs at most as many rows as columns
    let (rows, cols, transpose) = if ka <= kb { (ka, kb, false) } else { (kb, ka, true) };
    let mut confusion = WeightMatrix::new(rows, cols, 0i64);
    for (&x, &y) in a.iter().zip(b) {
        let (r, c) = if transpose { (y, x) } else { (x, y) };
        confusion[(r, c)] += 1;
    }
    let (matched, _) = kuhn_munkres(&confusion);
    Ok(matched as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn registry_shapes() {
        let shapes: Vec<_> = registry()
            .iter()
            .map(|s| (s.name.clone(), s.expected_n.unwrap(), s.expected_k.unwrap(), s.expected_d.unwrap()))
            .collect();
        assert_eq!(
            shapes,
            vec![
                ("wine".into(), 178, 3, 13),
                ("iris".into(), 150, 3, 4),
                ("banknote".into(), 1372, 2, 5),
                ("letter".into(), 20000, 26, 16)
            ]
        );
    }

    #[test]
    fn loads_with_label_mapping() {
        let f = write_tmp("1.0,2.0,b\n3.0,4.0,a\n5.0,6.0,b\n\n");
        let inst = load_csv(f.path(), &DatasetSpec::adhoc(f.path())).unwrap();
        assert_eq!(inst.n(), 3);
        assert_eq!(inst.d(), 2);
        assert_eq!(inst.labels().unwrap(), &[0, 1, 0]);
    }

    #[test]
    fn label_as_feature() {
        let f = write_tmp("1.0,2.0,0\n3.0,4.0,1\n");
        let mut spec = DatasetSpec::adhoc(f.path());
        spec.label_is_feature = true;
        let inst = load_csv(f.path(), &spec).unwrap();
        assert_eq!(inst.d(), 3);
        assert_eq!(inst.point(1), &[3.0, 4.0, 1.0]);
    }

    #[test]
    fn parse_error_names_the_row() {
        let f = write_tmp("1.0,2.0,a\n3.0,oops,a\n");
        match load_csv(f.path(), &DatasetSpec::adhoc(f.path())) {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column), (2, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shape_mismatch_names_both_counts() {
        let f = write_tmp("1.0,a\n2.0,b\n");
        let mut spec = DatasetSpec::adhoc(f.path());
        spec.expected_n = Some(3);
        assert!(matches!(load_csv(f.path(), &spec), Err(Error::ShapeMismatch { what: "rows", expected: 3, found: 2 })));
    }

    #[test]
    fn header_and_named_label() {
        let f = write_tmp("x;cls;y\n1;u;2\n3;v;4\n");
        let mut spec = DatasetSpec::adhoc(f.path());
        spec.delimiter = b';';
        spec.has_header = true;
        spec.label_column = LabelColumn::Name("cls".into());
        let inst = load_csv(f.path(), &spec).unwrap();
        assert_eq!(inst.point(1), &[3.0, 4.0]);
    }

    #[test]
    fn normalization_examples() {
        let inst = Instance::from_scalars(&[2.0, 4.0, 10.0]).unwrap();
        assert_eq!(normalize_unit_range(&inst).points().as_slice(), &[0.0, 0.25, 1.0]);
        let unit = Instance::from_scalars(&[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(normalize_unit_range(&unit).points(), unit.points());
        let flat = Instance::from_scalars(&[3.0, 3.0]).unwrap();
        assert_eq!(normalize_unit_range(&flat).points().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn recovery_examples() {
        assert_eq!(recovery_score_labels(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(recovery_score_labels(&[0, 0, 1, 2], &[2, 2, 0, 1]).unwrap(), 1.0);
        assert_eq!(recovery_score_labels(&[0, 0, 0, 1, 1], &[0, 0, 1, 1, 1]).unwrap(), 0.8);
        assert_eq!(recovery_score_labels(&[0, 1, 2], &[0, 0, 0]).unwrap(), 1.0 / 3.0);
        assert!(recovery_score_labels(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn ground_truth_lloyd_needs_labels() {
        let inst = Instance::from_scalars(&[0.0, 1.0]).unwrap();
        assert!(matches!(ground_truth_lloyd(&inst, 1e-9, 10), Err(Error::MissingLabels)));
        let labeled = inst.with_labels(Some(vec![0, 1])).unwrap();
        assert_eq!(ground_truth_lloyd(&labeled, 1e-9, 10).unwrap().assignment, vec![0, 1]);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let inst = Instance::new(
            Matrix::from_rows(&[[0.1 + 0.2, 1e-300], [std::f64::consts::PI, -7.0]]).unwrap(),
            Some(vec![1, 0]),
            "t",
        )
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_csv(f.path(), &inst).unwrap();
        let back = load_csv(f.path(), &DatasetSpec::adhoc(f.path())).unwrap();
        assert_eq!(back.points(), inst.points());
    }
}
