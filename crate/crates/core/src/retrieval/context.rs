use super::chunk::Chunk;
use crate::pipeline::SentenceType;
use crate::text::truncate_chars;

/// Character budget standing in for a 512-token QA window at roughly four
/// characters per token.
pub const DEFAULT_CONTEXT_BUDGET: usize = 2048;

/// Builds the QA source text for one sentence.
///
/// Simplifications see the abstract alone. Explanations see the abstract
/// followed by each snippet in rank order, rendered as
/// `"\n\n" + title + "\n" + content`. The whole text is cut at `budget`
/// characters, so snippets are always dropped before any of the abstract.
pub fn compose_source_context(
    sentence_type: SentenceType,
    abstract_text: &str,
    snippets: &[&Chunk],
    budget: usize,
) -> String {
    let abstract_text = abstract_text.trim();
    let mut context = abstract_text.to_owned();
    if sentence_type == SentenceType::Explanation {
        for chunk in snippets {
            if context.chars().count() >= budget {
                break;
            }
            context.push_str("\n\n");
            if !chunk.title.is_empty() {
                context.push_str(&chunk.title);
                context.push('\n');
            }
            context.push_str(chunk.content.trim());
        }
    }
    truncate_chars(&context, budget).trim_end().to_owned()
}
