//! YOLO-style label files and dataset statistics.
//!
//! A label file holds one object per line, `class_id cx cy w h`, with the
//! box in normalized center format. Each image has its own label file; a
//! sibling names file lists the class names in id order.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ClassList, ClassListError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{}line {line}: {reason}", file.as_ref().map(|f| format!("{f}: ")).unwrap_or_default())]
    MalformedLine {
        file: Option<String>,
        line: usize,
        reason: String,
    },
    #[error("names file: {0}")]
    Names(#[from] ClassListError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl DatasetError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::MalformedLine { .. } => "MalformedLine",
            Self::Names(_) => "InvalidClassList",
            Self::Io { .. } => "Io",
        }
    }

    fn in_file(self, name: &str) -> Self {
        match self {
            Self::MalformedLine { line, reason, .. } => Self::MalformedLine {
                file: Some(name.to_string()),
                line,
                reason,
            },
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub class_id: usize,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

/// Parses one label file. Blank lines are skipped; line numbers in errors
/// are 1-based.
pub fn parse_annotation_file(
    text: &str,
    classes: &ClassList,
) -> Result<Vec<AnnotationRecord>, DatasetError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| DatasetError::MalformedLine {
            file: None,
            line,
            reason,
        };
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", fields.len())));
        }
        let class_id: usize = fields[0]
            .parse()
            .map_err(|_| bad(format!("class id {:?} is not a non-negative integer", fields[0])))?;
        if class_id >= classes.len() {
            return Err(bad(format!(
                "class id {class_id} out of range for {} classes",
                classes.len()
            )));
        }
        let mut coords = [0.0; 4];
        for (slot, field) in coords.iter_mut().zip(&fields[1..]) {
            let v: f64 = field
                .parse()
                .map_err(|_| bad(format!("{field:?} is not a number")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(bad(format!("{v} outside [0, 1]")));
            }
            *slot = v;
        }
        out.push(AnnotationRecord {
            class_id,
            cx: coords[0],
            cy: coords[1],
            w: coords[2],
            h: coords[3],
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub images: usize,
    pub per_class: BTreeMap<String, usize>,
    pub objects_per_image: BTreeMap<usize, usize>,
}

impl DatasetSummary {
    pub fn total_objects(&self) -> usize {
        self.per_class.values().sum()
    }

    /// Objects implied by the histogram, `Σ k · images(k)`.
    pub fn histogram_objects(&self) -> usize {
        self.objects_per_image.iter().map(|(k, n)| k * n).sum()
    }
}

/// Summarizes label files given as `(file name, contents)` pairs, one per
/// image. Every class appears in `per_class`, including those with zero
/// objects.
pub fn summarize_dataset<'a, I>(
    label_files: I,
    classes: &ClassList,
) -> Result<DatasetSummary, DatasetError>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut summary = DatasetSummary {
        per_class: classes.names().iter().map(|n| (n.clone(), 0)).collect(),
        ..Default::default()
    };
    for (name, text) in label_files {
        let records = parse_annotation_file(text, classes).map_err(|e| e.in_file(name))?;
        summary.images += 1;
        *summary.objects_per_image.entry(records.len()).or_default() += 1;
        for r in records {
            // class ids were range-checked while parsing
            let label = classes.name(r.class_id).unwrap_or_default();
            *summary.per_class.entry(label.to_string()).or_default() += 1;
        }
    }
    Ok(summary)
}

/// Summarizes a directory of label files.
///
/// Every `*.txt` file except `classes.txt` is a label file. Class names come
/// from the first `*.names` file or `classes.txt`, falling back to the
/// default four classes. Files are visited in name order.
pub fn summarize_dir(dir: &Path) -> Result<DatasetSummary, DatasetError> {
    let io = |path: &Path, source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    entries.sort();

    let is_names = |p: &Path| {
        p.extension().is_some_and(|e| e == "names")
            || p.file_name().is_some_and(|n| n == "classes.txt")
    };
    let classes = match entries.iter().find(|p| is_names(p)) {
        Some(p) => ClassList::from_names_file(&std::fs::read_to_string(p).map_err(|e| io(p, e))?)?,
        None => ClassList::default(),
    };

    let mut files = Vec::new();
    for p in entries
        .iter()
        .filter(|p| p.extension().is_some_and(|e| e == "txt") && !is_names(p))
    {
        let text = std::fs::read_to_string(p).map_err(|e| io(p, e))?;
        let name = p
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        files.push((name, text));
    }
    summarize_dataset(files.iter().map(|(n, t)| (n.as_str(), t.as_str())), &classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_single_record() {
        let recs = parse_annotation_file("0 0.5 0.5 0.1 0.2", &ClassList::default()).unwrap();
        assert_eq!(
            recs,
            vec![AnnotationRecord {
                class_id: 0,
                cx: 0.5,
                cy: 0.5,
                w: 0.1,
                h: 0.2
            }]
        );
    }

    #[test]
    fn parse_empty_and_blank_lines() {
        let classes = ClassList::default();
        assert!(parse_annotation_file("", &classes).unwrap().is_empty());
        let recs = parse_annotation_file("\n1 0.1 0.1 0.1 0.1\n\n   \n3 0.9 0.9 0.05 0.05\n", &classes).unwrap();
        assert_eq!(recs.len(), 2);
    }

    #[test]
    fn malformed_lines() {
        let classes = ClassList::default();
        let line_of = |text: &str| match parse_annotation_file(text, &classes) {
            Err(DatasetError::MalformedLine { line, .. }) => line,
            other => panic!("unexpected {other:?}"),
        };
        assert_eq!(line_of("0 0.5 0.5 0.1"), 1);
        assert_eq!(line_of("0 0.5 0.5 0.1 0.1\n0 0.5 x 0.1 0.1"), 2);
        assert_eq!(line_of("0 0.5 1.5 0.1 0.1"), 1);
        assert_eq!(line_of("7 0.5 0.5 0.1 0.1"), 1);
        assert_eq!(line_of("-1 0.5 0.5 0.1 0.1"), 1);
    }

    #[test]
    fn summary_attaches_file_name() {
        let err = summarize_dataset([("a.txt", "0 0.5 0.5 0.1 0.1"), ("b.txt", "oops")], &ClassList::default())
            .unwrap_err();
        assert_eq!(err.to_string(), "b.txt: line 1: expected 5 fields, found 1");
    }

    #[test]
    fn empty_collection() {
        let s = summarize_dataset(std::iter::empty(), &ClassList::default()).unwrap();
        assert_eq!(s.images, 0);
        assert_eq!(s.per_class.len(), 4);
        assert!(s.per_class.values().all(|&n| n == 0));
        assert!(s.objects_per_image.is_empty());
    }

    #[test]
    fn json_keys() {
        let s = summarize_dataset([("a.txt", "2 0.5 0.5 0.1 0.1\n2 0.2 0.2 0.1 0.1")], &ClassList::default()).unwrap();
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["images"], 1);
        assert_eq!(v["per_class"]["orange"], 2);
        assert_eq!(v["objects_per_image"]["2"], 1);
    }

    proptest! {
        #[test]
        fn histogram_matches_class_totals(images in proptest::collection::vec(
            proptest::collection::vec(0usize..4, 0..7), 0..30)
        ) {
            let texts: Vec<String> = images
                .iter()
                .map(|objs| objs.iter().map(|c| format!("{c} 0.5 0.5 0.1 0.1\n")).collect())
                .collect();
            let s = summarize_dataset(
                texts.iter().enumerate().map(|(i, t)| (if i % 2 == 0 { "even" } else { "odd" }, t.as_str())),
                &ClassList::default(),
            ).unwrap();
            prop_assert_eq!(s.images, images.len());
            prop_assert_eq!(s.histogram_objects(), s.total_objects());
        }
    }
}
