//! Tokenization, sentence splitting, and the word-based token budget rule.

/// Lowercases, drops apostrophes, treats every other non-alphanumeric
/// character as a separator.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if c == '\'' || c == '\u{2019}' {
            continue;
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Budget tokens for a text: whitespace-delimited words × 1.3, rounded up.
pub fn count_tokens(text: &str) -> usize {
    tokens_for_words(text.split_whitespace().count())
}

pub fn tokens_for_words(words: usize) -> usize {
    (words * 13).div_ceil(10)
}

/// Largest word count whose token count stays within `budget`.
pub fn words_for_tokens(budget: usize) -> usize {
    budget * 10 / 13
}

/// Keeps the first words of `text` so that it fits `budget` tokens. Text
/// already within budget is returned trimmed but otherwise untouched.
pub fn truncate_to_budget(text: &str, budget: usize) -> String {
    if count_tokens(text) <= budget {
        return text.trim().to_string();
    }
    text.split_whitespace()
        .take(words_for_tokens(budget))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Splits on `.`, `!` or `?` followed by whitespace and an uppercase letter,
/// digit or opening quote, and on every line break.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for line in text.split('\n') {
        let mut start = 0;
        let chars: Vec<(usize, char)> = line.char_indices().collect();
        for i in 0..chars.len() {
            let c = chars[i].1;
            if !matches!(c, '.' | '!' | '?') {
                continue;
            }
            let mut j = i + 1;
            // closing quotes/brackets stay with the sentence
            while j < chars.len() && matches!(chars[j].1, '"' | '\u{201D}' | ')' | '\'') {
                j += 1;
            }
            if j >= chars.len() || !chars[j].1.is_whitespace() {
                continue;
            }
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let starts_new = k < chars.len() && {
                let n = chars[k].1;
                n.is_uppercase() || n.is_ascii_digit() || matches!(n, '"' | '\u{201C}' | '(')
            };
            if starts_new {
                let end = chars.get(j).map_or(line.len(), |&(p, _)| p);
                push_trimmed(&mut out, &line[start..end]);
                start = chars[k].0;
            }
        }
        push_trimmed(&mut out, &line[start..]);
    }
    out
}

fn push_trimmed<'a>(out: &mut Vec<&'a str>, s: &'a str) {
    let t = s.trim();
    if !t.is_empty() {
        out.push(t);
    }
}
