//! Run configuration documents and input files.

use std::fs;
use std::path::{Path, PathBuf};

use anova_fourier::method::ApproxConfig;
use anova_fourier::operator::NodeSet;
use anova_fourier::{
    Complex64, DetectionConfig, GroupedIndexSet, SearchSet, SensitivityReport, TermFamily, TermSubset,
};
use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A parsed config together with the digest of its bytes and the directory
/// relative paths are resolved against.
pub struct Loaded<T> {
    pub doc: T,
    pub digest: String,
    pub dir: PathBuf,
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<Loaded<T>> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let doc = serde_json::from_slice(&bytes).with_context(|| format!("{}: invalid config", path.display()))?;
    Ok(Loaded {
        doc,
        digest: sha256_hex(&bytes),
        dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
    })
}

/// Where function values come from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetSpec {
    /// The 9-dimensional B-spline benchmark.
    #[default]
    Bench,
    /// `;`-separated rows of `d` coordinates and one value.
    Data { path: PathBuf },
}

#[derive(Debug, Deserialize)]
pub struct IndexSetDoc {
    pub d: usize,
    #[serde(default)]
    pub ds: Option<usize>,
    /// Generators of a downward-closed family; overrides `ds`.
    #[serde(default)]
    pub terms: Option<Vec<TermSubset>>,
    pub search: SearchSet,
}

impl IndexSetDoc {
    pub fn family(&self) -> Result<TermFamily> {
        match (&self.terms, self.ds) {
            (Some(terms), _) => Ok(TermFamily::downward_closure(self.d, terms.iter().cloned())?),
            (None, Some(ds)) => Ok(TermFamily::up_to_order(self.d, ds)?),
            (None, None) => bail!("index set config needs `ds` or `terms`"),
        }
    }

    pub fn build(&self) -> Result<GroupedIndexSet> {
        Ok(self.search.build(&self.family()?)?)
    }
}

#[derive(Debug, Deserialize)]
pub struct DetectDoc {
    #[serde(flatten)]
    pub run: DetectionConfig,
    #[serde(default)]
    pub target: TargetSpec,
}

#[derive(Debug, Deserialize)]
pub struct ApproximateDoc {
    pub d: usize,
    /// Output of `detect`; supplies the family and, for tiered sizing, the
    /// pilot sensitivities.
    #[serde(default)]
    pub active_set: Option<PathBuf>,
    #[serde(default)]
    pub active_terms: Option<Vec<TermSubset>>,
    #[serde(flatten)]
    pub approx: ApproxConfig,
    #[serde(default)]
    pub target: TargetSpec,
}

/// The parts of a written active-set file that `approximate` needs.
#[derive(Debug, Deserialize)]
pub struct ActiveSetDoc {
    pub active: TermFamily,
    pub sensitivity: SensitivityReport,
}

pub fn resolve(dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

pub struct Data {
    pub nodes: NodeSet,
    pub values: Vec<Complex64>,
    pub digest: String,
    /// Coordinates that had to be reduced into `[0,1)`.
    pub reduced: usize,
}

fn parse_row(rec: &csv::StringRecord) -> Option<Vec<f64>> {
    rec.iter().map(|f| f.trim().parse::<f64>().ok()).collect()
}

/// Reads `;`-separated numeric rows; a non-numeric first row is taken as a
/// header.
pub fn read_rows(path: &Path, width: usize) -> Result<(Vec<Vec<f64>>, Vec<u8>)> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b';')
        .has_headers(false)
        .comment(Some(b'#'))
        .from_reader(bytes.as_slice());
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: malformed CSV", path.display()))?;
        match parse_row(&rec) {
            Some(row) if row.len() == width => rows.push(row),
            Some(row) => bail!("{}: row {} has {} fields, expected {width}", path.display(), i + 1, row.len()),
            None if i == 0 => continue,
            None => bail!("{}: row {} is not numeric", path.display(), i + 1),
        }
    }
    if rows.is_empty() {
        return Err(anyhow!("{}: no data rows", path.display()));
    }
    Ok((rows, bytes))
}

pub fn read_data(path: &Path, d: usize) -> Result<Data> {
    let (rows, bytes) = read_rows(path, d + 1)?;
    let mut points = Vec::with_capacity(rows.len() * d);
    let mut values = Vec::with_capacity(rows.len());
    for row in rows {
        points.extend_from_slice(&row[..d]);
        values.push(Complex64::new(row[d], 0.0));
    }
    let (nodes, reduced) = NodeSet::from_raw(d, points)?;
    Ok(Data {
        nodes,
        values,
        digest: sha256_hex(&bytes),
        reduced,
    })
}
