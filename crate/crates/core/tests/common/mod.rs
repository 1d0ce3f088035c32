#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

/// Images per object count in the published dataset histogram.
pub const HISTOGRAM: [(usize, usize); 6] = [(1, 24), (2, 46), (3, 36), (4, 80), (5, 39), (6, 8)];

/// Published per-class object totals.
pub const CLASS_TOTALS: [(&str, usize); 4] = [("apple", 202), ("banana", 181), ("orange", 178), ("seed", 146)];

fn label_line(class_id: usize, j: usize) -> String {
    let c = 0.1 + 0.1 * (j % 8) as f64;
    format!("{class_id} {c:.3} {c:.3} 0.050 0.060\n")
}

/// One label file per image reproducing [`HISTOGRAM`]; classes cycle.
pub fn histogram_fixture() -> Vec<(String, String)> {
    let mut files = Vec::new();
    for (objects, images) in HISTOGRAM {
        for _ in 0..images {
            let text: String = (0..objects).map(|j| label_line(j % 4, j)).collect();
            files.push((format!("img_{:04}.txt", files.len()), text));
        }
    }
    files
}

/// Label files reproducing [`CLASS_TOTALS`], five objects per image.
pub fn class_fixture() -> Vec<(String, String)> {
    let ids: Vec<usize> = CLASS_TOTALS
        .iter()
        .enumerate()
        .flat_map(|(id, (_, n))| std::iter::repeat_n(id, *n))
        .collect();
    ids.chunks(5)
        .enumerate()
        .map(|(i, chunk)| {
            let text: String = chunk.iter().enumerate().map(|(j, id)| label_line(*id, j)).collect();
            (format!("img_{i:04}.txt"), text)
        })
        .collect()
}

/// Writes label files plus a names file into `dir`.
pub fn write_dataset(dir: &Path, files: &[(String, String)]) {
    std::fs::write(dir.join("obj.names"), "apple\nbanana\norange\nseed\n").unwrap();
    for (name, text) in files {
        std::fs::write(dir.join(name), text).unwrap();
    }
}

pub fn histogram_expected() -> BTreeMap<usize, usize> {
    HISTOGRAM.into_iter().collect()
}

pub fn class_totals_expected() -> BTreeMap<String, usize> {
    CLASS_TOTALS.iter().map(|(c, n)| (c.to_string(), *n)).collect()
}
