//! Corpus discovery and loading.

use std::fs;
use std::path::{Path, PathBuf};

use adachunk::providers::{CorefOutcome, CorefProvider};
use adachunk::{load_document, Document};

/// A Markdown file and its sidecar, identified by the file stem.
#[derive(Debug, Clone)]
pub struct Entry {
    pub id: String,
    pub markdown: PathBuf,
    pub sidecar: PathBuf,
}

/// Every `*.md` file in `corpus_dir`, sorted by id. The sidecar is
/// `<sidecar_dir>/<id>.json`.
pub fn discover(corpus_dir: &Path, sidecar_dir: &Path) -> std::io::Result<Vec<Entry>> {
    let mut entries = Vec::new();
    for item in fs::read_dir(corpus_dir)? {
        let path = item?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("md") || !path.is_file() {
            continue;
        }
        let Some(id) = path
            .file_stem()
            .and_then(|s| s.to_str())
            .map(str::to_string)
        else {
            continue;
        };
        entries.push(Entry {
            sidecar: sidecar_dir.join(format!("{id}.json")),
            markdown: path,
            id,
        });
    }
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(entries)
}

/// Load one document, asking `coref` for entity–pronoun pairs when the sidecar
/// has none.
pub fn load(entry: &Entry, coref: Option<&dyn CorefProvider>) -> Result<Document, String> {
    let mut doc = load_document(&entry.markdown, &entry.sidecar).map_err(|e| e.to_string())?;
    if let Some(coref) = coref {
        if doc.missing.contains(&"coref_pairs") && doc.is_english() {
            match coref
                .extract_pairs(&doc)
                .map_err(|e| format!("coreference: {e}"))?
            {
                CorefOutcome::Pairs(pairs) => {
                    doc.coref_pairs = pairs;
                    doc.missing.retain(|m| *m != "coref_pairs");
                }
                CorefOutcome::NotApplicable => {}
            }
        }
    }
    Ok(doc)
}
