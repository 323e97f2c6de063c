/// Lowercases, splits on whitespace and emits every non-alphanumeric
/// character as its own token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            tokens.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            tokens.push(c.to_string());
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Splits after any terminator (`.`, `!`, `?`) that is followed by whitespace
/// or the end of the text. Terminators stay attached to their sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !is_terminator(c) {
            continue;
        }
        let boundary = match chars.peek() {
            None => true,
            Some(&(_, next)) => next.is_whitespace(),
        };
        if boundary {
            let end = i + c.len_utf8();
            let piece = text[start..end].trim();
            if !piece.is_empty() {
                out.push(piece.to_string());
            }
            start = end;
        }
    }
    let rest = text[start..].trim();
    if !rest.is_empty() {
        out.push(rest.to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Great food!"), toks(&["great", "food", "!"]));
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("The battery life is terrible."),
            toks(&["the", "battery", "life", "is", "terrible", "."])
        );
        assert_eq!(tokenize("  a\t\nb  "), toks(&["a", "b"]));
        assert_eq!(tokenize("it's...ok"), toks(&["it", "'", "s", ".", ".", ".", "ok"]));
    }

    #[test]
    fn split_examples() {
        assert_eq!(split_sentences("Good. Bad!"), vec!["Good.", "Bad!"]);
        assert_eq!(split_sentences("No terminator"), vec!["No terminator"]);
        assert_eq!(
            split_sentences("Overpriced, salty and overrated!!! Why this place is so popular"),
            vec!["Overpriced, salty and overrated!!!", "Why this place is so popular"]
        );
        assert_eq!(split_sentences("kind...It fits"), vec!["kind...It fits"]);
        assert!(split_sentences("   ").is_empty());
    }

    #[test]
    fn split_table_review() {
        let review = "The phone is great. But the battery life is terrible. Also there is no \
                      battery life indicator to let you know when its low.";
        let s = split_sentences(review);
        assert_eq!(s.len(), 3);
        assert!(s[0].contains("phone"));
        assert!(s[1].contains("battery life"));
    }

    proptest! {
        #[test]
        fn tokenize_idempotent_on_joined_output(text in "[a-zA-Z0-9 .,!?;:'\"()\\-éÄ\t\n]{0,80}") {
            let once = tokenize(&text);
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(once, twice);
        }
    }
}
