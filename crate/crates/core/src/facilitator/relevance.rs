//! Bag-of-terms relevance between recent student messages and a topic prompt.
//!
//! Text is lowercased, apostrophes are dropped, every other non-alphanumeric
//! character separates terms, and stopwords are removed. The score is the
//! cosine of the two term-frequency vectors.

use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelevanceScore {
    pub value: f64,
    pub window_message_count: usize,
}

impl RelevanceScore {
    /// No messages in the window. Dormancy is a separate trigger from a low score.
    pub fn is_dormant(&self) -> bool {
        self.window_message_count == 0
    }
}

const STOPWORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "am",
    "an",
    "and",
    "any",
    "are",
    "arent",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "cant",
    "could",
    "couldnt",
    "did",
    "didnt",
    "do",
    "does",
    "doesnt",
    "doing",
    "dont",
    "down",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "hadnt",
    "has",
    "hasnt",
    "have",
    "havent",
    "having",
    "he",
    "hed",
    "hell",
    "her",
    "here",
    "heres",
    "hers",
    "herself",
    "hes",
    "him",
    "himself",
    "his",
    "how",
    "hows",
    "i",
    "id",
    "if",
    "ill",
    "im",
    "in",
    "into",
    "is",
    "isnt",
    "it",
    "its",
    "itself",
    "ive",
    "just",
    "lets",
    "me",
    "more",
    "most",
    "mustnt",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "ought",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "same",
    "shant",
    "she",
    "shed",
    "shell",
    "shes",
    "should",
    "shouldnt",
    "so",
    "some",
    "such",
    "than",
    "that",
    "thats",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "theres",
    "these",
    "they",
    "theyd",
    "theyll",
    "theyre",
    "theyve",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "very",
    "was",
    "wasnt",
    "we",
    "wed",
    "well",
    "were",
    "werent",
    "weve",
    "what",
    "whats",
    "when",
    "whens",
    "where",
    "wheres",
    "which",
    "while",
    "who",
    "whom",
    "whos",
    "why",
    "whys",
    "will",
    "with",
    "wont",
    "would",
    "wouldnt",
    "you",
    "youd",
    "youll",
    "your",
    "youre",
    "yours",
    "yourself",
    "yourselves",
    "youve",
];

pub fn is_stopword(term: &str) -> bool {
    STOPWORDS.binary_search(&term).is_ok()
}

/// Content terms of `text`, in order of appearance.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut normalized = String::with_capacity(text.len());
    for c in text.chars() {
        if c.is_alphanumeric() {
            normalized.extend(c.to_lowercase());
        } else if c == '\'' || c == '\u{2019}' {
            // dropped so "don't" and "dont" agree
        } else {
            normalized.push(' ');
        }
    }
    normalized.split_whitespace().filter(|t| !is_stopword(t)).map(str::to_owned).collect()
}

pub fn term_frequencies<'a>(texts: impl IntoIterator<Item = &'a str>) -> BTreeMap<String, u64> {
    let mut tf = BTreeMap::new();
    for text in texts {
        for term in tokenize(text) {
            *tf.entry(term).or_insert(0) += 1;
        }
    }
    tf
}

fn cosine(a: &BTreeMap<String, u64>, b: &BTreeMap<String, u64>) -> f64 {
    let dot: u64 = a.iter().filter_map(|(t, x)| b.get(t).map(|y| x * y)).sum();
    if dot == 0 {
        return 0.0;
    }
    let na: u64 = a.values().map(|x| x * x).sum();
    let nb: u64 = b.values().map(|x| x * x).sum();
    (dot as f64 / ((na as f64) * (nb as f64)).sqrt()).min(1.0)
}

/// Cosine similarity of the aggregated window against the prompt.
pub fn relevance<S: AsRef<str>>(window_messages: &[S], prompt: &str) -> RelevanceScore {
    let window_tf = term_frequencies(window_messages.iter().map(AsRef::as_ref));
    let prompt_tf = term_frequencies([prompt]);
    RelevanceScore { value: cosine(&window_tf, &prompt_tf), window_message_count: window_messages.len() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopword_table_is_sorted() {
        assert!(STOPWORDS.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn tokenizer_strips_punctuation_and_stopwords() {
        assert_eq!(tokenize("What's the BEST model, for dropout?!"), vec!["best", "model", "dropout"]);
        assert_eq!(tokenize("don't"), Vec::<String>::new());
        assert_eq!(tokenize("video-clicks"), vec!["video", "clicks"]);
    }

    #[test]
    fn identical_text_scores_one() {
        let p = "Which technique would you use to predict student dropout?";
        let s = relevance(&[p], p);
        assert_eq!(s.value, 1.0);
        assert_eq!(s.window_message_count, 1);
    }

    #[test]
    fn disjoint_vocabulary_scores_zero() {
        let s = relevance(&["xyzzy plugh"], "Which technique predicts dropout?");
        assert_eq!(s.value, 0.0);
        assert!(!s.is_dormant());
    }

    #[test]
    fn empty_window_is_dormant() {
        let s = relevance::<&str>(&[], "anything");
        assert!(s.is_dormant());
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn messages_are_aggregated_before_scoring() {
        // Terms split over two messages score like one message holding both.
        let split = relevance(&["predict", "dropout"], "predict dropout");
        assert_eq!(split.value, 1.0);
    }
}
