//! Text normalization shared by every string field (song, artist, album, tag).

use alloc::string::String;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

const DIGIT_WORDS: [&str; 10] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
];

/// Latin letters that canonical decomposition leaves intact.
fn latin_fold(c: char) -> Option<&'static str> {
    Some(match c {
        'ß' => "ss",
        'æ' | 'Æ' => "ae",
        'œ' | 'Œ' => "oe",
        'ø' | 'Ø' => "o",
        'ł' | 'Ł' => "l",
        'đ' | 'Đ' | 'ð' | 'Ð' => "d",
        'þ' | 'Þ' => "th",
        'ı' => "i",
        _ => return None,
    })
}

/// Lowercases, strips accents, spells digits out one by one and reduces
/// everything else to single spaces.
///
/// The output is either empty or matches `^[a-z]+( [a-z]+)*$`, which makes the
/// function idempotent.
///
/// ```
/// use songsim_core::text::normalize_text;
/// assert_eq!(normalize_text("Beyoncé"), "beyonce");
/// assert_eq!(normalize_text("U2"), "u two");
/// ```
pub fn normalize_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    // a pending separator is only materialized before the next word
    let mut pending_space = false;
    let push_word = |out: &mut String, word: &str, pending: &mut bool| {
        if *pending && !out.is_empty() {
            out.push(' ');
        }
        *pending = false;
        out.push_str(word);
    };

    for c in s.nfd() {
        if is_combining_mark(c) {
            continue;
        }
        if c.is_ascii_alphabetic() {
            let mut buf = [0u8; 4];
            push_word(&mut out, c.to_ascii_lowercase().encode_utf8(&mut buf), &mut pending_space);
        } else if c.is_ascii_digit() {
            pending_space = true;
            push_word(&mut out, DIGIT_WORDS[(c as u8 - b'0') as usize], &mut pending_space);
            pending_space = true;
        } else if let Some(folded) = latin_fold(c) {
            push_word(&mut out, folded, &mut pending_space);
        } else if c.is_alphanumeric() {
            // letters outside the Latin script have no close equivalent
        } else {
            pending_space = true;
        }
    }
    out
}
