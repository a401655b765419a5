//! Helpers shared by the CLI and acceptance test targets: the fixture corpus,
//! binary invocation, golden files and a seeded synthetic document generator.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use adachunk::document::Sidecar;
use adachunk::{BlockKind, Document, EntityPronounPair};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Config pointing at the fixture corpus and replay transcripts, writing into `out`.
pub fn fixture_config(dir: &Path, extra: &str) -> PathBuf {
    let f = fixtures();
    let body = format!(
        r#"{{"corpus_dir": {}, "output_dir": {}, "llm": {{"replay_dir": {}}}{extra}}}"#,
        serde_json::to_string(&f.join("corpus")).unwrap(),
        serde_json::to_string(&dir.join("out")).unwrap(),
        serde_json::to_string(&f.join("replay")).unwrap(),
    );
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

pub fn adachunk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adachunk"))
        .args(args)
        .env_remove("ADACHUNK_LOG")
        .output()
        .expect("binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Replace the time column of size-table rows with a placeholder.
pub fn mask_times(text: &str) -> String {
    let mut out = String::new();
    let mut in_size_table = false;
    for line in text.lines() {
        if line.contains(" | ") && line.starts_with("method") {
            in_size_table = line.ends_with("time [s]");
        }
        let masked = match line.rsplit_once(" | ") {
            Some((head, last)) if in_size_table && last.trim().parse::<f64>().is_ok() => {
                format!("{head} | {:>w$}", "<t>", w = last.len())
            }
            _ => line.to_string(),
        };
        out.push_str(&masked);
        out.push('\n');
    }
    out
}

/// Compare with `tests/golden/<name>`; `UPDATE_GOLDENS=1` rewrites the file instead.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDENS").is_some() {
        fs::create_dir_all(golden_dir()).unwrap();
        fs::write(&path, actual).unwrap();
        return Ok(());
    }
    let expected = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        Err(format!(
            "{name} differs from golden\n--- expected\n{expected}--- actual\n{actual}"
        ))
    }
}

const WORDS: &[&str] = &[
    "contract",
    "party",
    "service",
    "notice",
    "term",
    "payment",
    "invoice",
    "delivery",
    "schedule",
    "report",
    "system",
    "data",
    "record",
    "audit",
    "risk",
    "policy",
    "budget",
    "review",
    "member",
    "committee",
    "the",
    "a",
    "of",
    "and",
    "to",
    "in",
    "for",
    "with",
    "on",
    "by",
    "is",
    "shall",
    "may",
    "must",
    "will",
    "within",
    "days",
    "each",
    "any",
    "all",
    "written",
    "annual",
    "monthly",
    "total",
    "amount",
    "value",
    "région",
    "déjà",
    "über",
    "straße",
    "naïve",
    "café",
    "coöperation",
    "résumé",
    "façade",
    "señal",
    "42",
    "2024",
    "v2",
    "x86",
    "ISO",
    "GDPR",
    "API",
    "EUR",
    "USD",
    "item",
    "model",
    "sample",
    "result",
    "method",
    "measure",
    "figure",
    "table",
    "section",
    "article",
    "clause",
];

const NAMES: &[&str] = &[
    "Alice", "Bob", "Chloé", "Dmitri", "Eun-ji", "Farah", "Gustav", "Hélène",
];
const PRONOUNS: &[&str] = &["she", "he", "they", "it", "her", "him", "them", "its"];

#[derive(Debug, Clone, Copy)]
pub struct SynthParams {
    pub max_blocks: usize,
    pub max_pairs: usize,
    /// Probability that a paragraph is long enough to exceed 1,100 tokens.
    pub long_paragraph: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            max_blocks: 40,
            max_pairs: 30,
            long_paragraph: 0.08,
        }
    }
}

fn words(rng: &mut ChaCha8Rng, n: usize) -> String {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let w = if rng.gen_bool(0.06) {
            NAMES.choose(rng).unwrap().to_string()
        } else if rng.gen_bool(0.04) {
            PRONOUNS.choose(rng).unwrap().to_string()
        } else {
            WORDS.choose(rng).unwrap().to_string()
        };
        if i == 0 {
            let mut c = w.chars();
            let first = c.next().unwrap().to_uppercase().collect::<String>();
            out.push(first + c.as_str());
        } else {
            out.push(w);
        }
    }
    out.join(" ")
}

/// A sentence of `n` words ending in a full stop or question mark.
fn sentence(rng: &mut ChaCha8Rng, n: usize) -> String {
    let mut s = words(rng, n);
    if rng.gen_bool(0.2) {
        let at = s.find(' ').unwrap_or(s.len());
        s.insert(at, ',');
    }
    s.push(if rng.gen_bool(0.9) { '.' } else { '?' });
    s
}

struct Builder {
    text: String,
    len: usize,
    blocks: Vec<(usize, usize, BlockKind)>,
    sentences: Vec<(usize, usize)>,
    page_breaks: Vec<usize>,
}

impl Builder {
    fn push(&mut self, s: &str) {
        self.text.push_str(s);
        self.len += s.chars().count();
    }

    fn block(&mut self, body: &str, kind: BlockKind, sep: &str) {
        let start = self.len;
        self.push(body);
        self.push(sep);
        self.blocks.push((start, self.len, kind));
    }

    fn paragraph(&mut self, sentences: &[String], sep: &str) {
        let start = self.len;
        for (i, s) in sentences.iter().enumerate() {
            if i > 0 {
                self.push(" ");
            }
            let from = self.len;
            self.push(s);
            self.sentences.push((from, self.len));
        }
        self.push(sep);
        self.blocks.push((start, self.len, BlockKind::Paragraph));
    }
}

/// A random English document whose blocks tile the text, with sentence spans,
/// marker page breaks and random entity–pronoun pairs.
pub fn synth_doc(id: &str, seed: u64, p: &SynthParams) -> Document {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Builder {
        text: String::new(),
        len: 0,
        blocks: Vec::new(),
        sentences: Vec::new(),
        page_breaks: Vec::new(),
    };
    let n_blocks = rng.gen_range(1..=p.max_blocks);
    for i in 0..n_blocks {
        let sep = if i + 1 == n_blocks && rng.gen_bool(0.3) {
            ""
        } else if rng.gen_bool(0.15) {
            "\n\n\n"
        } else {
            "\n\n"
        };
        let roll: f64 = rng.gen();
        if i == 0 || roll < 0.15 {
            let level = "#".repeat(rng.gen_range(1..=3));
            let n = rng.gen_range(1..=6);
            b.block(
                &format!("{level} {}", words(&mut rng, n)),
                BlockKind::Title,
                sep,
            );
        } else if roll < 0.62 {
            let long = rng.gen_bool(p.long_paragraph);
            let n_sent = if long {
                rng.gen_range(60..=110)
            } else {
                rng.gen_range(1..=14)
            };
            let sents: Vec<String> = (0..n_sent)
                .map(|_| {
                    let n = rng.gen_range(3..=22);
                    sentence(&mut rng, n)
                })
                .collect();
            b.paragraph(&sents, sep);
        } else if roll < 0.72 {
            let cols = rng.gen_range(2..=4);
            let rows = rng.gen_range(1..=12);
            let mut t = String::from("<Table>\n|");
            t.push_str(&" h |".repeat(cols));
            t.push_str("\n|");
            t.push_str(&" --- |".repeat(cols));
            for _ in 0..rows {
                t.push_str("\n|");
                for _ in 0..cols {
                    let n = rng.gen_range(1..=3);
                    t.push_str(&format!(" {} |", words(&mut rng, n)));
                }
            }
            t.push_str("\n</Table>");
            b.block(&t, BlockKind::Table, sep);
        } else if roll < 0.82 {
            let items = rng.gen_range(2..=9);
            let body: Vec<String> = (0..items)
                .map(|_| {
                    let n = rng.gen_range(2..=12);
                    format!("- {}", words(&mut rng, n))
                })
                .collect();
            b.block(&body.join("\n"), BlockKind::List, sep);
        } else if roll < 0.87 {
            let n = rng.gen_range(3..=10);
            b.block(
                &format!("<Figure>\n{}\n</Figure>", words(&mut rng, n)),
                BlockKind::Figure,
                sep,
            );
        } else if roll < 0.92 {
            // punctuation only: embeds to the zero vector
            let body = ["* * *", "---", "…", "| — |"]
                .choose(&mut rng)
                .unwrap()
                .to_string();
            b.block(&body, BlockKind::Other, sep);
        } else {
            b.page_breaks.push(b.len);
            b.block("<!-- PageBreak -->", BlockKind::HeaderFooter, sep);
        }
    }
    let len = b.len;
    let n_pairs = if len < 2 {
        0
    } else {
        rng.gen_range(0..=p.max_pairs)
    };
    let mut pairs = Vec::new();
    for _ in 0..n_pairs {
        let s = rng.gen_range(0..len - 1);
        let reach = if rng.gen_bool(0.7) { 400 } else { 4000 };
        let t = (s + rng.gen_range(1..=reach)).min(len);
        pairs.push(EntityPronounPair::new(s, t));
    }
    pairs.sort_by_key(|p| (p.pronoun_end, p.entity_start));
    let sidecar = Sidecar {
        blocks: b.blocks,
        page_breaks: Some(b.page_breaks.into_iter().filter(|&x| x > 0).collect()),
        sentences: Some(b.sentences),
        coref_pairs: Some(pairs),
        language: Some("en".into()),
    };
    Document::new(id, b.text, sidecar).expect("generated document is valid")
}

pub fn synth_corpus(n: usize, seed: u64, p: &SynthParams) -> Vec<Document> {
    (0..n)
        .map(|i| {
            synth_doc(
                &format!("doc{i:03}"),
                seed.wrapping_mul(1_000_003).wrapping_add(i as u64),
                p,
            )
        })
        .collect()
}

/// Random cuts: half uniform, half within a few characters of a block boundary.
pub fn random_cuts(doc: &Document, max_chunks: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let len = doc.len();
    if len < 2 {
        return Vec::new();
    }
    let k = rng.gen_range(1..=max_chunks);
    let mut cuts = Vec::with_capacity(k - 1);
    for _ in 1..k {
        let c = if rng.gen_bool(0.5) {
            rng.gen_range(1..len)
        } else {
            let blk = doc.blocks.choose(rng).unwrap();
            let edge = if rng.gen_bool(0.5) {
                blk.start
            } else {
                blk.end
            } as i64;
            (edge + rng.gen_range(-7..=7)).clamp(1, len as i64 - 1) as usize
        };
        cuts.push(c);
    }
    cuts
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
