//! Tweet tokenization.
//!
//! Words are runs of alphanumerics with internal apostrophes or hyphens
//! ("don't", "ice-cream"). Hashtags keep their word, @-mentions and URLs are
//! dropped, emoji become single tokens and every other punctuation character
//! is its own token.

use alloc::string::String;
use alloc::vec::Vec;

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-')
}

/// Modifiers that belong to the preceding emoji.
fn is_emoji_modifier(c: char) -> bool {
    matches!(c, '\u{FE0E}' | '\u{FE0F}' | '\u{20E3}' | '\u{1F3FB}'..='\u{1F3FF}')
}

fn is_url(chunk: &str) -> bool {
    let lower = chunk.trim_start_matches(|c: char| !c.is_alphanumeric()).to_ascii_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

/// Consumes a word starting at `i`, returning the end index.
fn word_end(chars: &[char], mut i: usize) -> usize {
    while i < chars.len() {
        let joined = is_joiner(chars[i]) && i + 1 < chars.len() && is_word_char(chars[i + 1]) && i > 0 && is_word_char(chars[i - 1]);
        if is_word_char(chars[i]) || joined {
            i += 1;
        } else {
            break;
        }
    }
    i
}

/// Tokens with their original case preserved.
pub fn tokenize_cased(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        if is_url(chunk) {
            continue;
        }
        let chars: Vec<char> = chunk.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if is_word_char(c) {
                let end = word_end(&chars, i);
                out.push(chars[i..end].iter().collect());
                i = end;
            } else if (c == '#' || c == '@') && chars.get(i + 1).is_some_and(|&n| is_word_char(n)) {
                let end = word_end(&chars, i + 1);
                if c == '#' {
                    out.push(chars[i + 1..end].iter().collect());
                }
                i = end;
            } else if c.is_ascii() {
                if !c.is_ascii_control() {
                    out.push(String::from(c));
                }
                i += 1;
            } else if is_emoji_modifier(c) || c == '\u{200D}' {
                // stray modifier
                i += 1;
            } else {
                let mut tok = String::from(c);
                i += 1;
                while i < chars.len() {
                    if is_emoji_modifier(chars[i]) {
                        tok.push(chars[i]);
                        i += 1;
                    } else if chars[i] == '\u{200D}' && i + 1 < chars.len() {
                        tok.push(chars[i]);
                        tok.push(chars[i + 1]);
                        i += 2;
                    } else {
                        break;
                    }
                }
                out.push(tok);
            }
        }
    }
    out
}

/// Lowercased tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_cased(text).into_iter().map(|t| t.to_lowercase()).collect()
}

/// True for tokens made only of ASCII punctuation.
pub fn is_punctuation(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| c.is_ascii_punctuation())
}
