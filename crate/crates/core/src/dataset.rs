//! Dataset ingestion, label and prediction file I/O, and deterministic
//! k-fold split manifests.
//!
//! Label files are YOLO text: one `class cx cy w h` line per box, six
//! decimal places, LF endings, no trailing whitespace. Prediction files
//! append a trailing confidence column. The split manifest is the persistent
//! contract between pipeline stages: seeded shuffle, rotating test blocks,
//! and per-fold outlier-removal bookkeeping.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::GrayImage;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::Detection;
use crate::geometry::{
    components_to_boxes, connected_components, BinaryMask, Connectivity, GeometryError, NormBox,
};

/// Identifier of the shuffle procedure recorded in every manifest:
/// ChaCha8 seeded with the manifest seed, driving a Fisher-Yates pass
/// with `j = next_u64() % (i + 1)`.
pub const SHUFFLE_PRNG: &str = "chacha8-fisher-yates";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("ingestion failed with {} issue(s):\n{}", .0.len(), format_issues(.0))]
    Ingest(Vec<IngestIssue>),
    #[error("no samples found under {0}")]
    EmptyCorpus(PathBuf),
    #[error("corpus of {n} samples is too small for {folds} folds")]
    CorpusTooSmall { n: usize, folds: usize },
    #[error("invalid split fractions (test {test}, val {val}, folds {folds}): {reason}")]
    BadSplitConfig {
        test: f64,
        val: f64,
        folds: usize,
        reason: &'static str,
    },
    #[error("duplicate sample id '{0}'")]
    DuplicateId(String),
    #[error("fold {fold} out of range (manifest has {count} folds)")]
    UnknownFold { fold: usize, count: usize },
    #[error("removal id '{id}' is not in train or val of fold {fold}")]
    RemovalNotInFold { id: String, fold: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn format_issues(issues: &[IngestIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// One per-file problem discovered during ingestion.
#[derive(Debug, Clone)]
pub struct IngestIssue {
    pub sample: String,
    pub problem: String,
}

impl fmt::Display for IngestIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.sample, self.problem)
    }
}

/// One corpus entry: image, mask, and the boxes derived from the mask.
#[derive(Debug, Clone)]
pub struct Sample {
    /// `<dataset>/<file stem>`, unique across the pooled corpus.
    pub sample_id: String,
    pub image_path: PathBuf,
    pub mask_path: PathBuf,
    pub width: u32,
    pub height: u32,
    pub boxes: Vec<NormBox<f64>>,
    /// Components suppressed by the min-area filter.
    pub dropped_components: usize,
}

/// Mask-to-box conversion knobs.
#[derive(Debug, Clone, Copy)]
pub struct IngestOptions {
    /// Binarization threshold; dataset masks are near-binary so the
    /// midpoint is robust to compression noise.
    pub threshold: u8,
    /// Components below this pixel count are treated as mask speckle.
    pub min_area: usize,
    pub connectivity: Connectivity,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            threshold: 128,
            min_area: 64,
            connectivity: Connectivity::Eight,
        }
    }
}

/// Boxes extracted from one mask, with conversion bookkeeping.
#[derive(Debug, Clone)]
pub struct MaskConversion {
    pub boxes: Vec<NormBox<f64>>,
    pub component_count: usize,
    pub dropped_components: usize,
}

/// Run the mask pipeline on one grayscale mask: binarize, extract
/// components, drop speckle, emit normalized boxes (class 0).
pub fn boxes_from_mask(
    mask: &GrayImage,
    opts: &IngestOptions,
) -> Result<MaskConversion, GeometryError> {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let binary = BinaryMask::binarize(mask.as_raw(), w, h, opts.threshold)?;
    let components = connected_components(&binary, opts.connectivity);
    let pixel_boxes = components_to_boxes::<f64>(&components, opts.min_area);
    let dropped = components.len() - pixel_boxes.len();
    let boxes = pixel_boxes
        .iter()
        .map(|b| b.to_norm(0, w as f64, h as f64))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MaskConversion {
        boxes,
        component_count: components.len(),
        dropped_components: dropped,
    })
}

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

fn stem_map(dir: &Path) -> Result<BTreeMap<String, PathBuf>, DatasetError> {
    let mut map = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|source| DatasetError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| DatasetError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        if !IMAGE_EXTENSIONS.contains(&ext.as_str()) {
            continue;
        }
        let stem = match path.file_stem().and_then(|s| s.to_str()) {
            Some(s) => s.to_string(),
            None => continue,
        };
        if let Some(previous) = map.insert(stem.clone(), path.clone()) {
            return Err(DatasetError::DuplicateId(format!(
                "{stem} ({} and {})",
                previous.display(),
                path.display()
            )));
        }
    }
    Ok(map)
}

/// Ingest one dataset directory pair. Every image must have a mask with the
/// same file stem and identical dimensions; any problem is itemized and the
/// whole ingestion fails rather than emitting a partial corpus.
pub fn ingest(
    image_dir: &Path,
    mask_dir: &Path,
    dataset_name: &str,
    opts: &IngestOptions,
) -> Result<Vec<Sample>, DatasetError> {
    let images = stem_map(image_dir)?;
    let masks = stem_map(mask_dir)?;
    if images.is_empty() {
        return Err(DatasetError::EmptyCorpus(image_dir.to_path_buf()));
    }

    let mut samples = Vec::with_capacity(images.len());
    let mut issues = Vec::new();
    for (stem, image_path) in &images {
        let sample_id = format!("{dataset_name}/{stem}");
        let mask_path = match masks.get(stem) {
            Some(p) => p.clone(),
            None => {
                issues.push(IngestIssue {
                    sample: sample_id,
                    problem: format!("no mask with stem '{stem}' in {}", mask_dir.display()),
                });
                continue;
            }
        };
        let (width, height) = match image::image_dimensions(image_path) {
            Ok(d) => d,
            Err(e) => {
                issues.push(IngestIssue {
                    sample: sample_id,
                    problem: format!("unreadable image {}: {e}", image_path.display()),
                });
                continue;
            }
        };
        let mask = match image::open(&mask_path) {
            Ok(m) => m.to_luma8(),
            Err(e) => {
                issues.push(IngestIssue {
                    sample: sample_id,
                    problem: format!("unreadable mask {}: {e}", mask_path.display()),
                });
                continue;
            }
        };
        if mask.dimensions() != (width, height) {
            issues.push(IngestIssue {
                sample: sample_id,
                problem: format!(
                    "mask is {}x{} but image is {width}x{height}",
                    mask.width(),
                    mask.height()
                ),
            });
            continue;
        }
        match boxes_from_mask(&mask, opts) {
            Ok(conv) => samples.push(Sample {
                sample_id,
                image_path: image_path.clone(),
                mask_path,
                width,
                height,
                boxes: conv.boxes,
                dropped_components: conv.dropped_components,
            }),
            Err(e) => issues.push(IngestIssue {
                sample: sample_id,
                problem: e.to_string(),
            }),
        }
    }

    if !issues.is_empty() {
        return Err(DatasetError::Ingest(issues));
    }
    samples.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    Ok(samples)
}

/// Canonical label line: `class cx cy w h`, six decimals, no newline.
pub fn format_label_line(b: &NormBox<f64>) -> String {
    format!(
        "{} {:.6} {:.6} {:.6} {:.6}",
        b.class_id(),
        b.cx(),
        b.cy(),
        b.w(),
        b.h()
    )
}

/// Canonical prediction line: label line plus trailing confidence.
pub fn format_prediction_line(b: &NormBox<f64>, confidence: f64) -> String {
    format!("{} {confidence:.6}", format_label_line(b))
}

/// Write one label file (one line per box, empty file for a negative
/// frame). Returns the path written.
pub fn write_labels(sample: &Sample, out_dir: &Path) -> Result<PathBuf, DatasetError> {
    let stem = sample
        .sample_id
        .rsplit('/')
        .next()
        .expect("sample_id has a stem");
    let path = out_dir.join(format!("{stem}.txt"));
    let mut content = String::new();
    for b in &sample.boxes {
        content.push_str(&format_label_line(b));
        content.push('\n');
    }
    let io_err = |source| DatasetError::Io {
        path: path.clone(),
        source,
    };
    let mut file = fs::File::create(&path).map_err(io_err)?;
    file.write_all(content.as_bytes()).map_err(io_err)?;
    Ok(path)
}

fn parse_line_fields(
    path: &Path,
    line_no: usize,
    line: &str,
    expected: usize,
) -> Result<Vec<f64>, DatasetError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != expected {
        return Err(DatasetError::Parse {
            path: path.to_path_buf(),
            line: line_no,
            msg: format!("expected {expected} fields, found {}", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>().map_err(|e| DatasetError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                msg: format!("'{f}': {e}"),
            })
        })
        .collect()
}

fn class_id_from(path: &Path, line_no: usize, value: f64) -> Result<u32, DatasetError> {
    if value < 0.0 || value.fract() != 0.0 || value > u32::MAX as f64 {
        return Err(DatasetError::Parse {
            path: path.to_path_buf(),
            line: line_no,
            msg: format!("class id '{value}' is not a non-negative integer"),
        });
    }
    Ok(value as u32)
}

/// Parse one label file back into normalized boxes. The inverse of
/// [`write_labels`] up to 6-decimal quantization.
pub fn parse_labels(path: &Path) -> Result<Vec<NormBox<f64>>, DatasetError> {
    let content = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut boxes = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let v = parse_line_fields(path, line_no, line, 5)?;
        let class_id = class_id_from(path, line_no, v[0])?;
        let b = NormBox::new(class_id, v[1], v[2], v[3], v[4]).map_err(|e| {
            DatasetError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                msg: e.to_string(),
            }
        })?;
        boxes.push(b);
    }
    Ok(boxes)
}

/// Parse one prediction file (`class cx cy w h conf` per line) into
/// detections denormalized against the given image dimensions.
pub fn parse_predictions(
    path: &Path,
    image_id: &str,
    img_w: f64,
    img_h: f64,
) -> Result<Vec<Detection<f64>>, DatasetError> {
    let content = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut dets = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let v = parse_line_fields(path, line_no, line, 6)?;
        let class_id = class_id_from(path, line_no, v[0])?;
        let confidence = v[5];
        if !(0.0..=1.0).contains(&confidence) {
            return Err(DatasetError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                msg: format!("confidence {confidence} outside [0, 1]"),
            });
        }
        let parse_err = |e: String| DatasetError::Parse {
            path: path.to_path_buf(),
            line: line_no,
            msg: e,
        };
        let norm = NormBox::new(class_id, v[1], v[2], v[3], v[4])
            .map_err(|e| parse_err(e.to_string()))?;
        let bbox = norm
            .from_norm(img_w, img_h)
            .map_err(|e| parse_err(e.to_string()))?;
        dets.push(
            Detection::new(image_id, class_id, bbox, confidence)
                .map_err(|e| parse_err(e.to_string()))?,
        );
    }
    Ok(dets)
}

/// One outlier removal recorded against a fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Removal {
    pub id: String,
    pub score: f64,
}

/// One fold's membership. `removed` is an overlay: the train/val arrays
/// keep their full membership and exporters subtract the removed ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
    pub removed: Vec<Removal>,
}

impl Fold {
    /// Train ids with removals excluded, ascending.
    pub fn effective_train(&self) -> Vec<String> {
        self.minus_removed(&self.train)
    }

    /// Val ids with removals excluded, ascending.
    pub fn effective_val(&self) -> Vec<String> {
        self.minus_removed(&self.val)
    }

    fn minus_removed(&self, ids: &[String]) -> Vec<String> {
        ids.iter()
            .filter(|id| !self.removed.iter().any(|r| &r.id == *id))
            .cloned()
            .collect()
    }
}

/// Deterministic fold assignment plus removal bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub prng: String,
    pub folds: Vec<Fold>,
}

impl SplitManifest {
    /// Fixed-key-order pretty JSON with a trailing newline; byte-stable
    /// for a given manifest.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    /// Record removals against one fold. Every id must belong to that
    /// fold's train or val lists; test ids are rejected.
    pub fn attach_removals(
        &mut self,
        fold: usize,
        removed: Vec<(String, f64)>,
    ) -> Result<(), DatasetError> {
        let count = self.folds.len();
        let f = self
            .folds
            .get_mut(fold)
            .ok_or(DatasetError::UnknownFold { fold, count })?;
        let mut additions = Vec::with_capacity(removed.len());
        for (id, score) in removed {
            let in_fold = f.train.binary_search(&id).is_ok() || f.val.binary_search(&id).is_ok();
            let already = f.removed.iter().any(|r| r.id == id);
            if !in_fold || already {
                return Err(DatasetError::RemovalNotInFold { id, fold });
            }
            additions.push(Removal { id, score });
        }
        f.removed.extend(additions);
        f.removed.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(())
    }

    /// Check every manifest invariant: per-fold disjoint partition covering
    /// the corpus, rotating disjoint test blocks covering the corpus, and
    /// removals confined to train/val.
    pub fn validate(&self) -> Result<(), String> {
        if self.folds.is_empty() {
            return Err("manifest has no folds".into());
        }
        let corpus: std::collections::BTreeSet<&String> = self
            .folds
            .iter()
            .flat_map(|f| f.train.iter().chain(&f.val).chain(&f.test))
            .collect();
        let mut test_union = std::collections::BTreeSet::new();
        for (i, fold) in self.folds.iter().enumerate() {
            let mut seen = std::collections::BTreeSet::new();
            for id in fold.train.iter().chain(&fold.val).chain(&fold.test) {
                if !seen.insert(id) {
                    return Err(format!("fold {i}: id '{id}' appears in two partitions"));
                }
            }
            if seen.len() != corpus.len() {
                return Err(format!(
                    "fold {i}: partition covers {} ids, corpus has {}",
                    seen.len(),
                    corpus.len()
                ));
            }
            for id in &fold.test {
                if !test_union.insert(id) {
                    return Err(format!("id '{id}' tested in two folds"));
                }
            }
            for r in &fold.removed {
                if fold.train.binary_search(&r.id).is_err()
                    && fold.val.binary_search(&r.id).is_err()
                {
                    return Err(format!(
                        "fold {i}: removed id '{}' not in train or val",
                        r.id
                    ));
                }
            }
        }
        if test_union.len() != corpus.len() {
            return Err(format!(
                "test blocks cover {} ids, corpus has {}",
                test_union.len(),
                corpus.len()
            ));
        }
        Ok(())
    }
}

/// Seeded Fisher-Yates over a sorted id list. The procedure is fixed so
/// manifests are reproducible from `(ids, seed)` alone.
fn shuffled_ids(ids: &[String], seed: u64) -> Vec<String> {
    let mut out: Vec<String> = ids.to_vec();
    out.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..out.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        out.swap(i, j);
    }
    out
}

/// Deterministic rotating k-fold split.
///
/// Ids are sorted, shuffled once, and cut into `folds` contiguous test
/// blocks with sizes differing by at most one, so every sample is tested
/// exactly once. Per fold, the remainder (wrapping around the test block)
/// yields `round(val * n)` validation ids and the rest trains. The test
/// fraction must be compatible with the rotation, i.e. `test ~ 1/folds`.
pub fn kfold_split(
    ids: &[String],
    folds: usize,
    test: f64,
    val: f64,
    seed: u64,
) -> Result<SplitManifest, DatasetError> {
    let n = ids.len();
    let bad = |reason| DatasetError::BadSplitConfig {
        test,
        val,
        folds,
        reason,
    };
    if folds < 2 {
        return Err(bad("need at least 2 folds"));
    }
    if !(test > 0.0 && val > 0.0) {
        return Err(bad("fractions must be positive"));
    }
    if test + val >= 1.0 {
        return Err(bad("test + val must leave room for training"));
    }
    if (test * folds as f64 - 1.0).abs() > 0.02 {
        return Err(bad(
            "test fraction incompatible with rotating folds (need test ~ 1/folds)",
        ));
    }
    if n < folds {
        return Err(DatasetError::CorpusTooSmall { n, folds });
    }
    {
        let mut sorted = ids.to_vec();
        sorted.sort();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(DatasetError::DuplicateId(pair[0].clone()));
            }
        }
    }

    let shuffled = shuffled_ids(ids, seed);
    let base = n / folds;
    let extra = n % folds;
    let val_size = (val * n as f64).round() as usize;

    let mut manifest_folds = Vec::with_capacity(folds);
    let mut start = 0usize;
    for f in 0..folds {
        let block = base + usize::from(f < extra);
        let end = start + block;
        let mut test_ids: Vec<String> = shuffled[start..end].to_vec();

        // remainder in shuffled order, wrapping past the test block
        let remainder: Vec<String> = shuffled[end..]
            .iter()
            .chain(&shuffled[..start])
            .cloned()
            .collect();
        if val_size >= remainder.len() {
            return Err(DatasetError::CorpusTooSmall { n, folds });
        }
        let mut val_ids: Vec<String> = remainder[..val_size].to_vec();
        let mut train_ids: Vec<String> = remainder[val_size..].to_vec();

        test_ids.sort();
        val_ids.sort();
        train_ids.sort();
        manifest_folds.push(Fold {
            train: train_ids,
            val: val_ids,
            test: test_ids,
            removed: Vec::new(),
        });
        start = end;
    }

    Ok(SplitManifest {
        seed,
        prng: SHUFFLE_PRNG.to_string(),
        folds: manifest_folds,
    })
}
