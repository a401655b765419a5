use super::ChunkError;
use crate::chunking::Chunking;
use crate::document::Document;
use crate::tokens::TokenCounter;

/// Group every `n` sentences into a chunk. Text between sentences stays with
/// the preceding chunk, so each cut falls at the start of sentence `k * n`.
pub fn chunk_by_sentences(
    doc: &Document,
    n: usize,
    counter: &dyn TokenCounter,
) -> Result<Chunking, ChunkError> {
    if doc.sentences.is_empty() {
        return Err(ChunkError::SentencesRequired);
    }
    if n == 0 {
        return Err(ChunkError::Config(
            "sentences_per_chunk must be at least 1".into(),
        ));
    }
    let cuts = doc
        .sentences
        .iter()
        .step_by(n)
        .skip(1)
        .map(|&(start, _)| start);
    Ok(Chunking::from_cuts(
        doc,
        cuts,
        format!("sentence-{n}"),
        counter,
    ))
}
