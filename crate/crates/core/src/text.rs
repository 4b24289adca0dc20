//! Term pipeline shared by the encoder, TF-IDF scoring, entity matching and ROUGE.
//!
//! Terms are maximal runs of alphanumeric characters, lowercased. Every
//! component that compares text goes through [`terms`] so that lexical and
//! dense scores agree on what a "word" is.

/// Lowercased alphanumeric runs of `text`, in order.
pub fn terms(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Lowercase and collapse internal whitespace; used as the entity dedup key.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Trim and collapse internal whitespace while keeping case.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// 64-bit FNV-1a. Stable across platforms and releases, unlike `DefaultHasher`.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(PRIME))
}

/// Approximate token count: one token per four characters, rounded up.
pub fn approx_tokens(s: &str) -> usize {
    s.chars().count().div_ceil(4)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terms_fold_case_and_split_punctuation() {
        assert_eq!(terms("HANDOVER latency, (5G-NR)!"), ["handover", "latency", "5g", "nr"]);
        assert!(terms("  -- ").is_empty());
    }

    #[test]
    fn normalize_collapses_and_lowercases() {
        assert_eq!(normalize_name("  3GPP \t Release  "), "3gpp release");
        assert_eq!(collapse_whitespace(" New\n Radio "), "New Radio");
    }

    #[test]
    fn fnv_known_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn token_heuristic_rounds_up() {
        assert_eq!(approx_tokens(""), 0);
        assert_eq!(approx_tokens("abcd"), 1);
        assert_eq!(approx_tokens("abcde"), 2);
    }
}
