//! Delimiter-regex splitting.

use std::time::{Duration, Instant};

use fancy_regex::{Regex, RegexBuilder};
use thiserror::Error;

use crate::chunking::Chunking;
use crate::document::Document;
use crate::tokens::TokenCounter;

const BACKTRACK_LIMIT: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum RegexSplitError {
    #[error("pattern does not compile: {0}")]
    Compile(String),
    #[error("pattern failed while matching: {0}")]
    Runtime(String),
    #[error("pattern produced more than {cap} matches")]
    TooManyMatches { cap: usize },
    #[error("pattern exceeded its time budget of {0:?}")]
    TimeBudget(Duration),
}

/// Limits applied while matching an untrusted delimiter pattern.
#[derive(Debug, Clone, Copy)]
pub struct RegexGuard {
    pub max_matches: usize,
    pub time_budget: Duration,
}

impl Default for RegexGuard {
    fn default() -> Self {
        Self {
            max_matches: usize::MAX,
            time_budget: Duration::from_secs(5),
        }
    }
}

impl RegexGuard {
    /// Cap matches at ten times the chunk count expected for `target_size`.
    pub fn for_document(doc: &Document, target_size: usize, counter: &dyn TokenCounter) -> Self {
        let tokens = counter.count(doc.text());
        let expected = tokens.div_ceil(target_size.max(1)).max(1);
        Self {
            max_matches: expected.saturating_mul(10),
            ..Self::default()
        }
    }
}

/// Rewrite capturing groups (numbered or named) as non-capturing ones.
/// Patterns using backreferences are returned unchanged.
pub fn decapture(pattern: &str) -> String {
    if has_backreference(pattern) {
        return pattern.to_string();
    }
    let chars: Vec<char> = pattern.chars().collect();
    let mut out = String::with_capacity(pattern.len() + 8);
    let mut class_depth = 0usize;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\\' {
            out.push(c);
            if let Some(&next) = chars.get(i + 1) {
                out.push(next);
            }
            i += 2;
            continue;
        }
        if class_depth > 0 {
            match c {
                '[' => class_depth += 1,
                ']' => class_depth -= 1,
                _ => {}
            }
            out.push(c);
            i += 1;
            continue;
        }
        match c {
            '[' => {
                class_depth = 1;
                out.push(c);
                i += 1;
                // a leading `]` (after an optional `^`) is a literal
                if chars.get(i) == Some(&'^') {
                    out.push('^');
                    i += 1;
                }
                if chars.get(i) == Some(&']') {
                    out.push(']');
                    i += 1;
                }
            }
            '(' if chars.get(i + 1) != Some(&'?') => {
                out.push_str("(?:");
                i += 1;
            }
            '(' => {
                let rest: String = chars[i + 1..].iter().take(3).collect();
                let name_start = if rest.starts_with("?P<") {
                    Some(i + 4)
                } else if rest.starts_with("?<")
                    && !rest.starts_with("?<=")
                    && !rest.starts_with("?<!")
                {
                    Some(i + 3)
                } else {
                    None
                };
                match name_start
                    .and_then(|s| chars[s..].iter().position(|&ch| ch == '>').map(|p| s + p))
                {
                    Some(close) => {
                        out.push_str("(?:");
                        i = close + 1;
                    }
                    None => {
                        out.push(c);
                        i += 1;
                    }
                }
            }
            _ => {
                out.push(c);
                i += 1;
            }
        }
    }
    out
}

fn has_backreference(pattern: &str) -> bool {
    let bytes = pattern.as_bytes();
    let mut i = 0;
    while i + 1 < bytes.len() {
        if bytes[i] == b'\\' {
            let n = bytes[i + 1];
            if n.is_ascii_digit() && n != b'0' || n == b'k' {
                return true;
            }
            i += 2;
            continue;
        }
        i += 1;
    }
    pattern.contains("(?P=")
}

fn build(pattern: &str) -> Result<Regex, fancy_regex::Error> {
    RegexBuilder::new(&format!("(?m){pattern}"))
        .backtrack_limit(BACKTRACK_LIMIT)
        .build()
}

/// Compile a delimiter pattern in multiline mode with capture groups removed.
pub fn compile_split_pattern(pattern: &str) -> Result<Regex, RegexSplitError> {
    let stripped = decapture(pattern);
    build(&stripped)
        .or_else(|_| build(pattern))
        .map_err(|e| RegexSplitError::Compile(e.to_string()))
}

/// Cut `doc` at the start of every match of `pattern`; the delimiter text
/// stays with the following chunk. Matches at offset 0 or at the end of the
/// document produce no cut.
pub fn apply_regex_split(
    doc: &Document,
    pattern: &str,
    guard: &RegexGuard,
    counter: &dyn TokenCounter,
) -> Result<Chunking, RegexSplitError> {
    let re = compile_split_pattern(pattern)?;
    let started = Instant::now();
    let mut cuts = Vec::new();
    for (n, m) in re.find_iter(doc.text()).enumerate() {
        let m = m.map_err(|e| RegexSplitError::Runtime(e.to_string()))?;
        if n + 1 > guard.max_matches {
            return Err(RegexSplitError::TooManyMatches {
                cap: guard.max_matches,
            });
        }
        if n % 64 == 63 && started.elapsed() > guard.time_budget {
            return Err(RegexSplitError::TimeBudget(guard.time_budget));
        }
        cuts.push(doc.char_offset(m.start()));
    }
    if started.elapsed() > guard.time_budget {
        return Err(RegexSplitError::TimeBudget(guard.time_budget));
    }
    Ok(Chunking::from_cuts(doc, cuts, "regex", counter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chunking::validate_chunking;
    use crate::tokens::WhitespaceCounter;

    #[test]
    fn decapture_rewrites_groups() {
        assert_eq!(decapture(r"(a|b)c"), r"(?:a|b)c");
        assert_eq!(decapture(r"(?P<h>##) (x)"), r"(?:##) (?:x)");
        assert_eq!(decapture(r"(?<h>#)"), r"(?:#)");
        assert_eq!(decapture(r"(?=## )(?<=\n)(?i:a)"), r"(?=## )(?<=\n)(?i:a)");
        assert_eq!(decapture(r"\(literal\)[(]"), r"\(literal\)[(]");
        assert_eq!(decapture(r"[]()](x)"), r"[]()](?:x)");
        assert_eq!(decapture(r"(a)\1"), r"(a)\1");
    }

    #[test]
    fn no_match_is_one_chunk() {
        let doc = Document::plain("d", "nothing to see");
        let c = apply_regex_split(&doc, "ZZZ", &RegexGuard::default(), &WhitespaceCounter).unwrap();
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn cuts_at_match_starts() {
        let doc = Document::plain("d", "A\n# B\n# C");
        let c =
            apply_regex_split(&doc, "\n# ", &RegexGuard::default(), &WhitespaceCounter).unwrap();
        assert_eq!(c.cuts(), vec![1, 5]);
        assert_eq!(c.text(&doc, 1), "\n# B");
        assert!(validate_chunking(&doc, &c).is_empty());
    }

    #[test]
    fn empty_matches_at_edges_are_ignored() {
        let doc = Document::plain("d", "# A\n# B");
        let c =
            apply_regex_split(&doc, "^(?=# )", &RegexGuard::default(), &WhitespaceCounter).unwrap();
        assert_eq!(c.cuts(), vec![4]);
    }

    #[test]
    fn capture_groups_do_not_change_cuts() {
        let doc = Document::plain("d", "x\n## a\ny\n## b");
        let plain =
            apply_regex_split(&doc, "\n## ", &RegexGuard::default(), &WhitespaceCounter).unwrap();
        let grouped = apply_regex_split(
            &doc,
            "(\n)(## )",
            &RegexGuard::default(),
            &WhitespaceCounter,
        )
        .unwrap();
        assert_eq!(plain.cuts(), grouped.cuts());
    }

    #[test]
    fn compile_failure() {
        assert!(matches!(
            compile_split_pattern("([unclosed"),
            Err(RegexSplitError::Compile(_))
        ));
    }

    #[test]
    fn match_cap_is_enforced() {
        let doc = Document::plain("d", "a a a a a a");
        let guard = RegexGuard {
            max_matches: 3,
            ..Default::default()
        };
        assert!(matches!(
            apply_regex_split(&doc, " ", &guard, &WhitespaceCounter),
            Err(RegexSplitError::TooManyMatches { cap: 3 })
        ));
    }

    #[test]
    fn guard_scales_with_expected_chunks() {
        let doc = Document::plain("d", vec!["w"; 2500].join(" "));
        let guard = RegexGuard::for_document(&doc, 1100, &WhitespaceCounter);
        assert_eq!(guard.max_matches, 30);
    }
}
