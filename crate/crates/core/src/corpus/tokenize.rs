//! Per-column textification rules.

use std::collections::HashSet;
use std::sync::OnceLock;

use super::{ColumnId, TokenSequence};

/// Replacement token for purely numeric tokens.
pub const NUM_TOKEN: &str = "numtkn";

const STOPWORDS_EN: &str = include_str!("stopwords_en.txt");

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS_EN.lines().map(str::trim).filter(|w| !w.is_empty()).collect())
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

fn is_numeric_token(token: &str) -> bool {
    let mut has_digit = false;
    for ch in token.chars() {
        match ch {
            '0'..='9' => has_digit = true,
            '.' | ',' => {}
            _ => return false,
        }
    }
    has_digit
}

/// Tokenization settings. The only knob is which columns map numeric tokens
/// to [`NUM_TOKEN`]; by default Description and ProteinBinding do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preprocessor {
    numtkn: [bool; 6],
}

impl Default for Preprocessor {
    fn default() -> Self {
        let mut numtkn = [false; 6];
        numtkn[ColumnId::Description.index()] = true;
        numtkn[ColumnId::ProteinBinding.index()] = true;
        Preprocessor { numtkn }
    }
}

/// Output of [`Preprocessor::process`]: the tokens plus any ATC code
/// segments that were dropped for not being 7 characters long.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preprocessed {
    pub sequence: TokenSequence,
    pub skipped_atc: Vec<String>,
}

impl Preprocessor {
    pub fn with_numtkn(mut self, column: ColumnId, enabled: bool) -> Self {
        self.numtkn[column.index()] = enabled;
        self
    }

    pub fn numtkn(&self, column: ColumnId) -> bool {
        self.numtkn[column.index()]
    }

    pub fn process(&self, raw: &str, column: ColumnId) -> Preprocessed {
        let lower = raw.to_lowercase();
        let mut skipped_atc = Vec::new();

        let values: Vec<String> = match column {
            ColumnId::AtcCodes => lower
                .split('#')
                .map(str::trim)
                .filter(|seg| !seg.is_empty())
                .filter_map(|seg| match expand_atc(seg) {
                    Some(expanded) => Some(expanded),
                    None => {
                        skipped_atc.push(seg.to_string());
                        None
                    }
                })
                .collect(),
            ColumnId::Categories => lower
                .split('#')
                .map(|seg| seg.replace(['(', ')', '[', ']', '{', '}'], ""))
                .flat_map(|seg| {
                    seg.split([',', '/'])
                        .map(str::to_string)
                        .collect::<Vec<_>>()
                })
                .collect(),
            _ => lower.split('#').map(str::to_string).collect(),
        };

        let numtkn = self.numtkn(column);
        let tokens = values
            .iter()
            .flat_map(|v| v.split_whitespace())
            .filter(|t| !is_stopword(t))
            .map(|t| {
                if numtkn && is_numeric_token(t) {
                    NUM_TOKEN.to_string()
                } else {
                    t.to_string()
                }
            })
            .collect();

        Preprocessed {
            sequence: TokenSequence { column, tokens },
            skipped_atc,
        }
    }
}

/// `b01ae02` -> `atcl1_b atcl2_01 atcl3_a atcl4_e atcl5_02`.
fn expand_atc(code: &str) -> Option<String> {
    let chars: Vec<char> = code.chars().collect();
    if chars.len() != 7 || chars.iter().any(|c| c.is_whitespace()) {
        return None;
    }
    let part = |r: std::ops::Range<usize>| chars[r].iter().collect::<String>();
    Some(format!(
        "atcl1_{} atcl2_{} atcl3_{} atcl4_{} atcl5_{}",
        part(0..1),
        part(1..3),
        part(3..4),
        part(4..5),
        part(5..7)
    ))
}

/// Tokenizes one raw column value with the default [`Preprocessor`].
/// Malformed ATC segments are dropped; use [`Preprocessor::process`] to see them.
pub fn preprocess_column(raw: &str, column: ColumnId) -> TokenSequence {
    Preprocessor::default().process(raw, column).sequence
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(raw: &str, column: ColumnId) -> Vec<String> {
        preprocess_column(raw, column).tokens
    }

    #[test]
    fn atc_expansion() {
        assert_eq!(
            toks("B01AE02", ColumnId::AtcCodes),
            ["atcl1_b", "atcl2_01", "atcl3_a", "atcl4_e", "atcl5_02"]
        );
        assert_eq!(toks("B01AE02#N02BA01", ColumnId::AtcCodes).len(), 10);
    }

    #[test]
    fn atc_bad_length_is_skipped_and_reported() {
        let out = Preprocessor::default().process("B01AE0#N02BA01", ColumnId::AtcCodes);
        assert_eq!(out.skipped_atc, ["b01ae0"]);
        assert_eq!(out.sequence.tokens[0], "atcl1_n");
        assert_eq!(out.sequence.tokens.len(), 5);
    }

    #[test]
    fn description_numbers_and_stopwords() {
        assert_eq!(
            toks("The  drug   is 50 mg", ColumnId::Description),
            ["drug", "numtkn", "mg"]
        );
    }

    #[test]
    fn numtkn_only_on_enabled_columns() {
        assert_eq!(toks("approx 1,000.5", ColumnId::ProteinBinding), ["approx", "numtkn"]);
        assert_eq!(toks("class 12", ColumnId::MergedClass), ["class", "12"]);
        assert_eq!(toks("95%", ColumnId::ProteinBinding), ["95%"]);
        assert_eq!(toks("...", ColumnId::Description), ["..."]);
        let p = Preprocessor::default().with_numtkn(ColumnId::MergedClass, true);
        assert_eq!(p.process("class 12", ColumnId::MergedClass).sequence.tokens, ["class", "numtkn"]);
    }

    #[test]
    fn categories_rules() {
        assert_eq!(
            toks("Agents (Oral)#Anti-infectives, topical", ColumnId::Categories),
            ["agents", "oral", "anti-infectives", "topical"]
        );
        assert_eq!(toks("[A]/{B},c", ColumnId::Categories), ["b", "c"]);
    }

    #[test]
    fn generic_columns_split_on_hash() {
        assert_eq!(
            toks("Inhibitor#Antagonist of the receptor", ColumnId::TargetAction),
            ["inhibitor", "antagonist", "receptor"]
        );
        assert!(toks("", ColumnId::MergedClass).is_empty());
        assert!(toks("   # #", ColumnId::Description).is_empty());
    }

    #[test]
    fn stopword_list_is_complete_snapshot() {
        assert_eq!(stopwords().len(), 179);
        assert!(is_stopword("the"));
        assert!(is_stopword("wouldn't"));
        assert!(!is_stopword("drug"));
    }

    const NON_ATC: [ColumnId; 5] = [
        ColumnId::Categories,
        ColumnId::Description,
        ColumnId::MergedClass,
        ColumnId::ProteinBinding,
        ColumnId::TargetAction,
    ];

    proptest! {
        #[test]
        fn idempotent_on_rejoined_output(
            raw in "[A-Za-z0-9 ,./#()\\[\\]{}-]{0,60}",
            col in 0usize..5,
        ) {
            let column = NON_ATC[col];
            let once = preprocess_column(&raw, column);
            let twice = preprocess_column(&once.tokens.join(" "), column);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn tokens_have_no_whitespace_or_stopwords(raw in "\\PC{0,80}", col in 0usize..6) {
            let seq = preprocess_column(&raw, ColumnId::ALL[col]);
            for t in &seq.tokens {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.chars().any(char::is_whitespace));
                prop_assert!(!is_stopword(t));
            }
        }
    }
}
