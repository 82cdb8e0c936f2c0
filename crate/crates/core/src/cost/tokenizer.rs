use crate::trajectory::TokenCount;

pub const CHARS_PER_TOKEN: usize = 4;

pub trait TokenCounter {
    fn count(&self, text: &str) -> TokenCount;
}

/// `ceil(chars / 4)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CharHeuristic;

impl TokenCounter for CharHeuristic {
    fn count(&self, text: &str) -> TokenCount {
        TokenCount((text.chars().count() as u64).div_ceil(CHARS_PER_TOKEN as u64))
    }
}

impl<F: Fn(&str) -> TokenCount> TokenCounter for F {
    fn count(&self, text: &str) -> TokenCount {
        self(text)
    }
}

pub fn count_tokens(text: &str, tokenizer: &dyn TokenCounter) -> TokenCount {
    tokenizer.count(text)
}
