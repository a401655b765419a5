//! Split-then-merge recursive splitter.

use super::cascade::{cascade_cuts, pack_greedy};
use super::ChunkerConfig;
use crate::chunking::Chunking;
use crate::document::Document;
use crate::tokens::TokenCounter;

/// Two passes: the cascade splits the document into segments of at most
/// `target_size` tokens, then adjacent segments are greedily merged while the
/// chunk stays within `target_size`.
///
/// Chunks never overlap. When `cfg.overlap > 0` each chunk after the first
/// carries an overlap hint: the longest whitespace-aligned tail of the previous
/// chunk holding at most `cfg.overlap` tokens.
pub fn recursive_split_merge(
    doc: &Document,
    cfg: &ChunkerConfig,
    counter: &dyn TokenCounter,
) -> Chunking {
    let text = doc.text();
    let max = cfg.target_size.max(1);

    let mut segments = vec![0];
    segments.extend(cascade_cuts(text, max, &cfg.separator_cascade, counter));
    segments.push(text.len());

    let mut bounds = vec![0];
    bounds.extend(pack_greedy(text, &segments, max, counter));
    bounds.push(text.len());

    let cuts = bounds[1..bounds.len() - 1]
        .iter()
        .map(|&b| doc.char_offset(b));
    let mut chunking =
        Chunking::from_cuts(doc, cuts, format!("recursive-{}", cfg.target_size), counter);

    if cfg.overlap > 0 {
        for k in 1..chunking.chunks.len() {
            let prev = &chunking.chunks[k - 1];
            let hint = overlap_start(doc, prev.start, prev.end, cfg.overlap, counter);
            chunking.chunks[k].overlap_start = hint;
        }
    }
    chunking
}

/// Smallest whitespace-aligned position `p` in `[start, end)` such that
/// `[p, end)` holds at most `budget` tokens.
fn overlap_start(
    doc: &Document,
    start: usize,
    end: usize,
    budget: usize,
    counter: &dyn TokenCounter,
) -> Option<usize> {
    let chars: Vec<char> = doc.slice(start, end).chars().collect();
    let mut candidates = vec![start];
    candidates.extend(
        (1..chars.len())
            .filter(|&i| chars[i].is_whitespace() && !chars[i - 1].is_whitespace())
            .map(|i| start + i),
    );
    let fits = |p: usize| counter.count(doc.slice(p, end)) <= budget;
    // token count of the tail shrinks as p moves right
    let last = *candidates.last()?;
    if !fits(last) {
        return None;
    }
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    if fits(candidates[lo]) {
        return Some(candidates[lo]);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(candidates[mid]) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(candidates[hi])
}
