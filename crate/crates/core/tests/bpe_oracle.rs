//! `o200k_base` counts frozen from the reference Python tokenizer
//! (`tiktoken`, `encode_ordinary`) run over the same inputs.

use adachunk::tokens::{prefix_within_budget, token_counter};

const FROZEN: &[(&str, usize)] = &[
    ("hello world", 2),
    ("", 0),
    (
        "The Hamburg Commissioner for Data protection and freedom of information",
        10,
    ),
    (
        "## Discussion Paper: Large Language Models and Personal Data\n\n<!-- PageBreak -->\n",
        15,
    ),
    ("Größenordnung: 1.234.567 Einträge — naïve café", 17),
    (
        "Article 12. The parties agree that <|endoftext|> is text.",
        18,
    ),
    (
        "    indented\tcode\r\n\r\nfn main() { println!(\"{}\", 42); }",
        15,
    ),
    ("日本語のテキストを数える", 9),
];

#[test]
fn o200k_matches_reference_counts() {
    let counter = token_counter("o200k_base").unwrap();
    for &(text, expected) in FROZEN {
        assert_eq!(counter.count(text), expected, "{text:?}");
    }
}

#[test]
fn aliases_resolve_to_the_same_encoding() {
    for name in ["o200k", "bpe-o200k"] {
        let c = token_counter(name).unwrap();
        assert_eq!(c.count("hello world"), 2);
    }
    assert!(token_counter("cl100k_nope").is_err());
}

#[test]
fn budgeted_prefix_fits() {
    let counter = token_counter("o200k_base").unwrap();
    let text = FROZEN.iter().map(|(t, _)| *t).collect::<Vec<_>>().join(" ");
    for budget in [0, 1, 5, 17, 40, 1000] {
        let cut = prefix_within_budget(&text, budget, counter.as_ref());
        assert!(text.is_char_boundary(cut));
        assert!(counter.count(&text[..cut]) <= budget);
    }
}
