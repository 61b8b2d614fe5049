//! Item manifests: the tabular records the samplers consume, plus the subset
//! files they produce.
//!
//! The canonical on-disk format is CSV with header `id,class,prob[,f0,...]`.
//! JSONL carries the same fields, one object per line. An empty `prob` cell
//! (or a missing/null `prob` key) means the item has not been scored yet.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities are floored here so that `-ln p` stays finite.
pub const PROB_FLOOR: f64 = 1e-12;
/// How far outside [0, 1] a raw probability may stray before it is rejected.
pub const PROB_CLAMP_TOL: f64 = 1e-9;

/// One dataset item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub id: String,
    #[serde(rename = "class")]
    pub class_label: usize,
    /// Classifier probability of the correct label, `p(y_i | x_i)`.
    #[serde(rename = "prob", default, skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f64>>,
}

impl ItemRecord {
    pub fn new(id: impl Into<String>, class_label: usize, probability: f64) -> Self {
        Self {
            id: id.into(),
            class_label,
            probability: Some(probability),
            features: None,
        }
    }

    pub fn with_features(mut self, features: Vec<f64>) -> Self {
        self.features = Some(features);
        self
    }
}

/// Validate a raw probability and clip it into `[PROB_FLOOR, 1]`.
pub fn clip_probability(id: &str, value: f64) -> Result<f64> {
    if !value.is_finite() || !(-PROB_CLAMP_TOL..=1.0 + PROB_CLAMP_TOL).contains(&value) {
        return Err(Error::ProbabilityOutOfRange {
            id: id.to_string(),
            value,
        });
    }
    Ok(value.clamp(PROB_FLOOR, 1.0))
}

/// A validated collection of items with per-class counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassManifest {
    items: Vec<ItemRecord>,
    class_counts: BTreeMap<usize, usize>,
    num_classes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifestFormat {
    Csv,
    Jsonl,
}

impl ManifestFormat {
    /// Guess the format from a file extension; anything but `.jsonl`/`.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => ManifestFormat::Jsonl,
            _ => ManifestFormat::Csv,
        }
    }
}

impl ClassManifest {
    /// Build a manifest from items, checking id uniqueness and clipping
    /// probabilities.
    pub fn from_items(items: Vec<ItemRecord>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::EmptyManifest);
        }
        let mut seen = HashSet::with_capacity(items.len());
        let mut class_counts = BTreeMap::new();
        let mut items = items;
        for item in items.iter_mut() {
            if !seen.insert(item.id.clone()) {
                return Err(Error::DuplicateId(item.id.clone()));
            }
            if let Some(p) = item.probability {
                item.probability = Some(clip_probability(&item.id, p)?);
            }
            *class_counts.entry(item.class_label).or_insert(0) += 1;
        }
        let num_classes = class_counts.keys().next_back().map_or(0, |&c| c + 1);
        Ok(Self {
            items,
            class_counts,
            num_classes,
        })
    }

    pub fn items(&self) -> &[ItemRecord] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Number of items per class label. Classes with no items are absent.
    pub fn class_counts(&self) -> &BTreeMap<usize, usize> {
        &self.class_counts
    }

    pub fn count(&self, class: usize) -> usize {
        self.class_counts.get(&class).copied().unwrap_or(0)
    }

    /// Indices of the items belonging to `class`, in input order.
    pub fn class_indices(&self, class: usize) -> Vec<usize> {
        self.items
            .iter()
            .enumerate()
            .filter(|(_, it)| it.class_label == class)
            .map(|(i, _)| i)
            .collect()
    }

    /// Class labels sorted by decreasing count (ties broken by label).
    pub fn classes_by_frequency(&self) -> Vec<usize> {
        let mut classes: Vec<usize> = self.class_counts.keys().copied().collect();
        classes.sort_by(|a, b| self.count(*b).cmp(&self.count(*a)).then(a.cmp(b)));
        classes
    }

    /// Relabel classes so that label 0 is the most frequent class, label 1 the
    /// next, and so on. Returns the new manifest and the map old → new label.
    pub fn reindex_by_frequency(&self) -> (ClassManifest, BTreeMap<usize, usize>) {
        let mapping: BTreeMap<usize, usize> = self
            .classes_by_frequency()
            .into_iter()
            .enumerate()
            .map(|(new, old)| (old, new))
            .collect();
        let items = self
            .items
            .iter()
            .map(|it| ItemRecord {
                class_label: mapping[&it.class_label],
                ..it.clone()
            })
            .collect();
        let manifest = ClassManifest::from_items(items).expect("relabeling preserves validity");
        (manifest, mapping)
    }

    /// A new manifest holding only `indices` (kept in ascending order).
    pub fn subset(&self, indices: &BTreeSet<usize>) -> Result<ClassManifest> {
        let items = indices
            .iter()
            .map(|&i| {
                self.items.get(i).cloned().ok_or(Error::IndexOutOfRange {
                    index: i,
                    len: self.items.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ClassManifest::from_items(items)
    }

    /// Replace every item's probability, clipping each value.
    pub fn with_probabilities(&self, probs: &[f64]) -> Result<ClassManifest> {
        if probs.len() != self.items.len() {
            return Err(Error::DimensionMismatch {
                expected: self.items.len(),
                got: probs.len(),
            });
        }
        let mut out = self.clone();
        for (item, &p) in out.items.iter_mut().zip(probs) {
            item.probability = Some(clip_probability(&item.id, p)?);
        }
        Ok(out)
    }

    /// Feature dimension, if every item carries features of the same length.
    pub fn feature_dim(&self) -> Option<usize> {
        let d = self.items.first()?.features.as_ref()?.len();
        self.items
            .iter()
            .all(|it| it.features.as_ref().is_some_and(|f| f.len() == d))
            .then_some(d)
    }
}

/// A subset of a ground set drawn by one of the samplers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DppSample {
    pub indices: BTreeSet<usize>,
    pub seed: u64,
    pub variant: SamplerVariant,
}

impl DppSample {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerVariant {
    /// Item phase picks the argmax of the projection weights (lowest index on ties).
    PaperArgmax,
    /// Item phase samples proportionally to the projection weights.
    Probabilistic,
    /// Exact k-DPP by enumerating every size-k subset.
    ExactKdppOracle,
}

impl std::str::FromStr for SamplerVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "paper-argmax" | "argmax" | "paper" => Ok(SamplerVariant::PaperArgmax),
            "probabilistic" | "exact" => Ok(SamplerVariant::Probabilistic),
            "exact-kdpp-oracle" | "oracle" => Ok(SamplerVariant::ExactKdppOracle),
            other => Err(Error::InvalidArgument(format!("unknown sampler variant `{other}`"))),
        }
    }
}

fn malformed(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

/// Read and validate a manifest file.
pub fn parse_manifest(path: impl AsRef<Path>, format: ManifestFormat) -> Result<ClassManifest> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let items = match format {
        ManifestFormat::Csv => read_csv_items(path, file)?,
        ManifestFormat::Jsonl => read_jsonl_items(path, file)?,
    };
    ClassManifest::from_items(items)
}

fn read_csv_items(path: &Path, file: File) -> Result<Vec<ItemRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(BufReader::new(file));
    let mut records = reader.records();

    let header = match records.next() {
        None => return Err(Error::EmptyManifest),
        Some(r) => r.map_err(|e| malformed(path, 1, e.to_string()))?,
    };
    if header.len() < 3 || &header[0] != "id" || &header[1] != "class" || &header[2] != "prob" {
        return Err(malformed(path, 1, "header must start with `id,class,prob`"));
    }
    let dim = header.len() - 3;
    for (j, name) in header.iter().skip(3).enumerate() {
        if name != format!("f{j}") {
            return Err(malformed(
                path,
                1,
                format!("expected feature column `f{j}`, got `{name}`"),
            ));
        }
    }

    let mut items = Vec::new();
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            malformed(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(malformed(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(malformed(path, line, "empty id"));
        }
        let class_label = record[1]
            .trim()
            .parse::<usize>()
            .map_err(|_| malformed(path, line, format!("invalid class `{}`", &record[1])))?;
        let prob_cell = record[2].trim();
        let probability = if prob_cell.is_empty() {
            None
        } else {
            let p = prob_cell
                .parse::<f64>()
                .map_err(|_| malformed(path, line, format!("invalid prob `{prob_cell}`")))?;
            Some(clip_probability(&id, p)?)
        };
        let features = if dim == 0 {
            None
        } else {
            let f = record
                .iter()
                .skip(3)
                .map(|cell| {
                    cell.trim()
                        .parse::<f64>()
                        .map_err(|_| malformed(path, line, format!("invalid feature `{cell}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            Some(f)
        };
        items.push(ItemRecord {
            id,
            class_label,
            probability,
            features,
        });
    }
    Ok(items)
}

fn read_jsonl_items(path: &Path, file: File) -> Result<Vec<ItemRecord>> {
    let mut items = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item: ItemRecord = serde_json::from_str(&line).map_err(|e| malformed(path, i + 1, e.to_string()))?;
        if let Some(p) = item.probability {
            clip_probability(&item.id, p)?;
        }
        items.push(item);
    }
    Ok(items)
}

fn format_prob(p: Option<f64>) -> String {
    p.map(|v| v.to_string()).unwrap_or_default()
}

/// Write every field of every item in the canonical CSV layout.
///
/// Floats use Rust's shortest round-trip formatting, so reading the file back
/// reproduces the manifest exactly.
pub fn write_manifest(manifest: &ClassManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let dim = manifest.feature_dim().unwrap_or(0);
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    let to_io = |e: csv::Error| Error::io(path, e.into());

    let mut header = vec!["id".to_string(), "class".into(), "prob".into()];
    header.extend((0..dim).map(|j| format!("f{j}")));
    w.write_record(&header).map_err(to_io)?;
    for item in manifest.items() {
        let mut row = vec![
            item.id.clone(),
            item.class_label.to_string(),
            format_prob(item.probability),
        ];
        if dim > 0 {
            row.extend(item.features.iter().flatten().map(|v| v.to_string()));
        }
        w.write_record(&row).map_err(to_io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Write the manifest as JSONL with keys `id`, `class`, `prob`, `features`.
pub fn write_manifest_jsonl(manifest: &ClassManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in manifest.items() {
        let line = serde_json::to_string(item).expect("items serialize");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Write the `id,class` rows of the sampled items, in manifest order.
pub fn write_subset(manifest: &ClassManifest, sample: &DppSample, path: impl AsRef<Path>) -> Result<()> {
    write_subset_indices(manifest, &sample.indices, path)
}

/// Same as [`write_subset`] for a bare index set.
pub fn write_subset_indices(manifest: &ClassManifest, indices: &BTreeSet<usize>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(&bad) = indices.iter().find(|&&i| i >= manifest.len()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: manifest.len(),
        });
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    let to_io = |e: csv::Error| Error::io(path, e.into());
    w.write_record(["id", "class"]).map_err(to_io)?;
    for &i in indices {
        let item = &manifest.items()[i];
        w.write_record([item.id.as_str(), &item.class_label.to_string()])
            .map_err(to_io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn parses_simple_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "m.csv", "id,class,prob\na,0,1.0\nb,1,0.5\n");
        let m = parse_manifest(&p, ManifestFormat::Csv).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.num_classes(), 2);
        assert_eq!(m.count(0), 1);
        assert_eq!(m.count(1), 1);
        assert_eq!(m.items()[1].probability, Some(0.5));
    }

    #[test]
    fn rejects_probability_above_one() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "m.csv", "id,class,prob\na,0,1.5\n");
        let err = parse_manifest(&p, ManifestFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::ProbabilityOutOfRange { value, .. } if value == 1.5));
    }

    #[test]
    fn clamps_float_noise_and_floors_zero() {
        assert_eq!(clip_probability("x", 1.0 + 5e-10).unwrap(), 1.0);
        assert_eq!(clip_probability("x", -5e-10).unwrap(), PROB_FLOOR);
        assert_eq!(clip_probability("x", 0.0).unwrap(), PROB_FLOOR);
        assert!(clip_probability("x", -1e-6).is_err());
        assert!(clip_probability("x", f64::NAN).is_err());
    }

    #[test]
    fn jsonl_counts_and_long_tail_order() {
        let dir = tempfile::tempdir().unwrap();
        let body = r#"{"id":"a","class":1,"prob":0.2}
{"id":"b","class":0,"prob":0.3}
{"id":"c","class":0,"prob":0.4,"features":[1.0,2.0]}
{"id":"d","class":0,"prob":0.9}
"#;
        let p = write(&dir, "m.jsonl", body);
        let m = parse_manifest(&p, ManifestFormat::Jsonl).unwrap();
        assert_eq!(m.count(0), 3);
        assert_eq!(m.count(1), 1);
        assert_eq!(m.classes_by_frequency(), vec![0, 1]);
    }

    #[test]
    fn reports_line_of_malformed_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "m.csv", "id,class,prob\na,0,0.5\nb,zero,0.5\n");
        match parse_manifest(&p, ManifestFormat::Csv).unwrap_err() {
            Error::MalformedRow { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e:?}"),
        }
        let p = write(&dir, "short.csv", "id,class,prob\na,0\n");
        assert!(matches!(
            parse_manifest(&p, ManifestFormat::Csv).unwrap_err(),
            Error::MalformedRow { line: 2, .. }
        ));
    }

    #[test]
    fn duplicate_and_empty() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "dup.csv", "id,class,prob\na,0,0.5\na,1,0.5\n");
        assert!(matches!(
            parse_manifest(&p, ManifestFormat::Csv).unwrap_err(),
            Error::DuplicateId(id) if id == "a"
        ));
        let p = write(&dir, "empty.csv", "id,class,prob\n");
        assert!(matches!(
            parse_manifest(&p, ManifestFormat::Csv).unwrap_err(),
            Error::EmptyManifest
        ));
    }

    #[test]
    fn missing_probability_cell_is_none() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "m.csv", "id,class,prob,f0\na,0,,0.25\n");
        let m = parse_manifest(&p, ManifestFormat::Csv).unwrap();
        assert_eq!(m.items()[0].probability, None);
        assert_eq!(m.items()[0].features, Some(vec![0.25]));
    }

    fn four_items() -> ClassManifest {
        ClassManifest::from_items(vec![
            ItemRecord::new("w", 0, 0.1),
            ItemRecord::new("x", 1, 0.2),
            ItemRecord::new("y", 0, 0.3),
            ItemRecord::new("z", 2, 0.4),
        ])
        .unwrap()
    }

    fn sample(indices: &[usize]) -> DppSample {
        DppSample {
            indices: indices.iter().copied().collect(),
            seed: 0,
            variant: SamplerVariant::Probabilistic,
        }
    }

    #[test]
    fn subset_output_projection_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let m = four_items();
        let out = dir.path().join("s.csv");
        write_subset(&m, &sample(&[2, 0]), &out).unwrap();
        assert_eq!(fs::read_to_string(&out).unwrap(), "id,class\nw,0\ny,0\n");

        write_subset(&m, &sample(&[]), &out).unwrap();
        assert_eq!(fs::read_to_string(&out).unwrap(), "id,class\n");

        assert!(matches!(
            write_subset(&m, &sample(&[5]), &out).unwrap_err(),
            Error::IndexOutOfRange { index: 5, len: 4 }
        ));
    }

    #[test]
    fn reindex_keeps_membership() {
        let m = ClassManifest::from_items(vec![
            ItemRecord::new("a", 0, 0.5),
            ItemRecord::new("b", 1, 0.5),
            ItemRecord::new("c", 1, 0.5),
        ])
        .unwrap();
        let (r, map) = m.reindex_by_frequency();
        assert_eq!(map[&1], 0);
        assert_eq!(map[&0], 1);
        assert_eq!(r.count(0), 2);
        let ids: Vec<_> = r.items().iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }
}
