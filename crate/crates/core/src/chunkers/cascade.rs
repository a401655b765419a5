//! Prioritised separator cascade and the recursive splitter built on it.

use std::fmt;

use fancy_regex::Regex;
use serde::{Deserialize, Serialize};

use crate::tokens::TokenCounter;

/// Headings (h1 first), horizontal rules, blank lines, line breaks, sentence
/// ends, whitespace, then any single character.
pub const DEFAULT_CASCADE: &[&str] = &[
    r"^# ",
    r"^## ",
    r"^### ",
    r"^#### ",
    r"^##### ",
    r"^###### ",
    r"^(?:-{3,}|\*{3,}|_{3,})[ \t]*$",
    r"\n\n+",
    r"\n",
    r"(?<=[.!?])[ \t]+",
    r"\s+",
    r"(?s).",
];

/// Ordered separator patterns, compiled in multiline mode. A split happens at
/// the start of each match, so the separator leads the following segment.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct SeparatorCascade {
    patterns: Vec<String>,
    compiled: Vec<Regex>,
}

impl SeparatorCascade {
    pub fn new<S: AsRef<str>>(patterns: &[S]) -> Result<Self, fancy_regex::Error> {
        let patterns: Vec<String> = patterns.iter().map(|p| p.as_ref().to_string()).collect();
        let compiled = patterns
            .iter()
            .map(|p| Regex::new(&format!("(?m){p}")))
            .collect::<Result<_, _>>()?;
        Ok(Self { patterns, compiled })
    }

    pub fn patterns(&self) -> &[String] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Byte offsets of match starts at `level`, strictly inside `slice`.
    fn cut_points(&self, level: usize, slice: &str) -> Vec<usize> {
        let mut cuts: Vec<usize> = self.compiled[level]
            .find_iter(slice)
            .map_while(Result::ok)
            .map(|m| m.start())
            .filter(|&s| s > 0 && s < slice.len())
            .collect();
        cuts.dedup();
        cuts
    }
}

impl Default for SeparatorCascade {
    fn default() -> Self {
        Self::new(DEFAULT_CASCADE).expect("default cascade compiles")
    }
}

impl PartialEq for SeparatorCascade {
    fn eq(&self, other: &Self) -> bool {
        self.patterns == other.patterns
    }
}

impl fmt::Debug for SeparatorCascade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.patterns).finish()
    }
}

impl TryFrom<Vec<String>> for SeparatorCascade {
    type Error = fancy_regex::Error;

    fn try_from(patterns: Vec<String>) -> Result<Self, Self::Error> {
        Self::new(&patterns)
    }
}

impl From<SeparatorCascade> for Vec<String> {
    fn from(c: SeparatorCascade) -> Self {
        c.patterns
    }
}

/// Split `text` into segments of at most `max_tokens` tokens.
///
/// Segments are cut at matches of the highest-priority separator present;
/// pieces still too large are split with the following separators, then
/// adjacent pieces are greedily re-packed up to `max_tokens`. If the cascade is
/// exhausted the text is cut between characters.
pub fn separator_cascade_split<'t>(
    text: &'t str,
    max_tokens: usize,
    cascade: &SeparatorCascade,
    counter: &dyn TokenCounter,
) -> Vec<&'t str> {
    let mut bounds = vec![0];
    bounds.extend(cascade_cuts(text, max_tokens, cascade, counter));
    bounds.push(text.len());
    bounds
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| &text[w[0]..w[1]])
        .collect()
}

/// Interior byte cuts produced by [`separator_cascade_split`].
pub(crate) fn cascade_cuts(
    text: &str,
    max_tokens: usize,
    cascade: &SeparatorCascade,
    counter: &dyn TokenCounter,
) -> Vec<usize> {
    split_slice(text, 0, max_tokens.max(1), cascade, counter)
}

fn split_slice(
    slice: &str,
    level: usize,
    max_tokens: usize,
    cascade: &SeparatorCascade,
    counter: &dyn TokenCounter,
) -> Vec<usize> {
    if counter.count(slice) <= max_tokens {
        return Vec::new();
    }
    for lvl in level..cascade.len() {
        let cuts = cascade.cut_points(lvl, slice);
        if cuts.is_empty() {
            continue;
        }
        let mut coarse = Vec::with_capacity(cuts.len() + 2);
        coarse.push(0);
        coarse.extend(cuts);
        coarse.push(slice.len());

        let mut fine = vec![0];
        for w in coarse.windows(2) {
            let piece = &slice[w[0]..w[1]];
            fine.extend(
                split_slice(piece, lvl + 1, max_tokens, cascade, counter)
                    .into_iter()
                    .map(|c| w[0] + c),
            );
            fine.push(w[1]);
        }
        return pack_greedy(slice, &fine, max_tokens, counter);
    }
    let mut fine: Vec<usize> = slice.char_indices().map(|(i, _)| i).collect();
    fine.push(slice.len());
    pack_greedy(slice, &fine, max_tokens, counter)
}

/// Greedy left-to-right packing of the pieces delimited by `bounds` (which
/// include 0 and `text.len()`), each chunk taking as many pieces as fit within
/// `max_tokens`. Returns the interior cuts.
///
/// Token counts of growing prefixes are assumed non-decreasing, which lets the
/// longest fitting run be found by galloping and bisection.
pub(crate) fn pack_greedy(
    text: &str,
    bounds: &[usize],
    max_tokens: usize,
    counter: &dyn TokenCounter,
) -> Vec<usize> {
    let pieces = bounds.len().saturating_sub(1);
    let fits = |i: usize, j: usize| counter.count(&text[bounds[i]..bounds[j]]) <= max_tokens;
    let mut cuts = Vec::new();
    let mut i = 0;
    while i < pieces {
        // a single piece is accepted even if oversized
        let mut good = i + 1;
        let mut step = 1;
        while good < pieces {
            let probe = (good + step).min(pieces);
            if fits(i, probe) {
                good = probe;
                step *= 2;
            } else {
                let (mut lo, mut hi) = (good, probe);
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if fits(i, mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                good = lo;
                break;
            }
        }
        if good < pieces {
            cuts.push(bounds[good]);
        }
        i = good;
    }
    cuts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokens::WhitespaceCounter;

    fn words(n: usize, tag: &str) -> String {
        (0..n)
            .map(|i| format!("{tag}{i}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    #[test]
    fn small_text_is_one_segment() {
        let text = "just a few words";
        let segs =
            separator_cascade_split(text, 10, &SeparatorCascade::default(), &WhitespaceCounter);
        assert_eq!(segs, vec![text]);
    }

    #[test]
    fn two_paragraphs_split_at_blank_line() {
        let text = format!("{}\n\n{}", words(400, "a"), words(400, "b"));
        let segs =
            separator_cascade_split(&text, 500, &SeparatorCascade::default(), &WhitespaceCounter);
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0], words(400, "a"));
        assert!(segs[1].starts_with("\n\nb0"));
        assert_eq!(segs.concat(), text);
    }

    #[test]
    fn word_soup_falls_back_to_whitespace() {
        let text = words(1500, "w");
        let segs =
            separator_cascade_split(&text, 600, &SeparatorCascade::default(), &WhitespaceCounter);
        let counts: Vec<usize> = segs.iter().map(|s| WhitespaceCounter.count(s)).collect();
        assert!(counts.iter().all(|&c| c <= 600), "{counts:?}");
        assert_eq!(counts, vec![600, 600, 300]);
        assert_eq!(segs.concat(), text);
    }

    #[test]
    fn headings_lead_their_section() {
        let text = format!("# A\n{}\n# B\n{}", words(30, "a"), words(30, "b"));
        let segs =
            separator_cascade_split(&text, 40, &SeparatorCascade::default(), &WhitespaceCounter);
        assert_eq!(segs.len(), 2);
        assert!(segs[1].starts_with("# B"));
    }

    #[test]
    fn exhausted_cascade_cuts_characters() {
        struct CharCounter;
        impl TokenCounter for CharCounter {
            fn name(&self) -> &str {
                "chars"
            }
            fn count(&self, text: &str) -> usize {
                text.chars().count()
            }
        }
        let cascade = SeparatorCascade::new(&["\n"]).unwrap();
        let text = "abcdefghij";
        let segs = separator_cascade_split(text, 4, &cascade, &CharCounter);
        assert_eq!(segs, vec!["abcd", "efgh", "ij"]);
    }

    #[test]
    fn pack_is_greedy() {
        let text = "aaaa bbbb cccc";
        let bounds = [0, 4, 9, 14];
        // each piece one word: pack 2 per chunk
        assert_eq!(pack_greedy(text, &bounds, 2, &WhitespaceCounter), vec![9]);
        assert_eq!(
            pack_greedy(text, &bounds, 1, &WhitespaceCounter),
            vec![4, 9]
        );
        assert_eq!(
            pack_greedy(text, &bounds, 3, &WhitespaceCounter),
            Vec::<usize>::new()
        );
    }

    #[test]
    fn cascade_serde_round_trip() {
        let c = SeparatorCascade::default();
        let json = serde_json::to_string(&c).unwrap();
        let back: SeparatorCascade = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<SeparatorCascade>(r#"["(unclosed"]"#).is_err());
    }
}
