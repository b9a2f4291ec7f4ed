//! Global symbol table.
//!
//! Ids 0..=4 are reserved: padding, epsilon and the three shorthand labels.
//! Every id from [`FIRST_CONCRETE`] upward names exactly one Unicode character.
//! The concrete part of the table is printable ASCII (without the characters
//! `[`, `]` and `\`) followed by the IPA Extensions block.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// First id that refers to a concrete character.
pub const FIRST_CONCRETE: u32 = 5;

/// Characters that never enter the table.
pub const EXCLUDED_CHARS: [char; 3] = ['[', ']', '\\'];

/// An index into the global symbol table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(pub u32);

impl Symbol {
    pub const PAD: Symbol = Symbol(0);
    pub const EPS: Symbol = Symbol(1);
    /// `q -id:id-> q'` stands for `q -s:s-> q'` for all `s` in the vocabulary.
    pub const ID: Symbol = Symbol(2);
    /// Maps every lowercase ASCII letter of the vocabulary to its uppercase form.
    pub const LOWER_TO_UPPER: Symbol = Symbol(3);
    /// Maps every uppercase ASCII letter of the vocabulary to its lowercase form.
    pub const UPPER_TO_LOWER: Symbol = Symbol(4);

    pub const SHORTHANDS: [Symbol; 3] =
        [Symbol::ID, Symbol::LOWER_TO_UPPER, Symbol::UPPER_TO_LOWER];

    pub fn is_shorthand(self) -> bool {
        (2..=4).contains(&self.0)
    }

    pub fn is_concrete(self) -> bool {
        self.0 >= FIRST_CONCRETE
    }

    pub fn from_char(c: char) -> Option<Symbol> {
        SymbolTable::global().id_of(c)
    }

    /// The character for a concrete symbol.
    pub fn to_char(self) -> Option<char> {
        SymbolTable::global().char_of(self)
    }

    /// Output of a shorthand transition when it reads `self`, or `None` when
    /// the shorthand does not apply to this symbol.
    pub fn apply_shorthand(self, shorthand: Symbol) -> Option<Symbol> {
        match shorthand {
            Symbol::ID => Some(self),
            Symbol::LOWER_TO_UPPER => {
                let c = self.to_char()?;
                c.is_ascii_lowercase()
                    .then(|| Symbol::from_char(c.to_ascii_uppercase()))
                    .flatten()
            }
            Symbol::UPPER_TO_LOWER => {
                let c = self.to_char()?;
                c.is_ascii_uppercase()
                    .then(|| Symbol::from_char(c.to_ascii_lowercase()))
                    .flatten()
            }
            _ => None,
        }
    }

    /// Token used in the AT&T text format.
    pub fn att_token(self) -> String {
        match self {
            Symbol::PAD => "<pad>".into(),
            Symbol::EPS => "<eps>".into(),
            Symbol::ID => "<id>".into(),
            Symbol::LOWER_TO_UPPER => "<l2u>".into(),
            Symbol::UPPER_TO_LOWER => "<u2l>".into(),
            s => s
                .to_char()
                .map(String::from)
                .unwrap_or_else(|| format!("<#{}>", s.0)),
        }
    }

    pub fn from_att_token(tok: &str) -> Option<Symbol> {
        match tok {
            "<pad>" => Some(Symbol::PAD),
            "<eps>" => Some(Symbol::EPS),
            "<id>" => Some(Symbol::ID),
            "<l2u>" => Some(Symbol::LOWER_TO_UPPER),
            "<u2l>" => Some(Symbol::UPPER_TO_LOWER),
            _ => {
                let mut chars = tok.chars();
                let c = chars.next()?;
                if chars.next().is_some() {
                    return None;
                }
                Symbol::from_char(c)
            }
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.att_token())
    }
}

/// Bijection between concrete ids and characters.
#[derive(Debug, Clone)]
pub struct SymbolTable {
    chars: Vec<char>,
    ids: HashMap<char, Symbol>,
}

impl SymbolTable {
    fn build() -> Self {
        let ascii = ('!'..='~').filter(|c| !EXCLUDED_CHARS.contains(c));
        let ipa = '\u{0250}'..='\u{02AF}';
        let chars: Vec<char> = ascii.chain(ipa).collect();
        let ids = chars
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, Symbol(FIRST_CONCRETE + i as u32)))
            .collect();
        SymbolTable { chars, ids }
    }

    pub fn global() -> &'static SymbolTable {
        static TABLE: OnceLock<SymbolTable> = OnceLock::new();
        TABLE.get_or_init(SymbolTable::build)
    }

    pub fn id_of(&self, c: char) -> Option<Symbol> {
        self.ids.get(&c).copied()
    }

    pub fn char_of(&self, s: Symbol) -> Option<char> {
        let idx = s.0.checked_sub(FIRST_CONCRETE)?;
        self.chars.get(idx as usize).copied()
    }

    /// Number of ids including the reserved ones.
    pub fn capacity(&self) -> u32 {
        FIRST_CONCRETE + self.chars.len() as u32
    }

    pub fn concrete(&self) -> impl Iterator<Item = Symbol> + '_ {
        (0..self.chars.len() as u32).map(|i| Symbol(FIRST_CONCRETE + i))
    }

    /// Concrete symbols whose character is printable ASCII.
    pub fn ascii(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.concrete()
            .filter(|s| s.to_char().is_some_and(|c| c.is_ascii()))
    }

    /// Contents of the symbol-table sidecar: `{"symbols": {"5": "!", ...}}`.
    pub fn to_json(&self) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .chars
            .iter()
            .enumerate()
            .map(|(i, c)| {
                (
                    (FIRST_CONCRETE as usize + i).to_string(),
                    serde_json::Value::String(c.to_string()),
                )
            })
            .collect();
        serde_json::json!({ "symbols": map })
    }
}

/// Converts a string into symbols, failing on the first unknown character.
pub fn encode_str(s: &str) -> Result<Vec<Symbol>, char> {
    s.chars().map(|c| Symbol::from_char(c).ok_or(c)).collect()
}

/// Renders concrete symbols as a string. Non-concrete ids are skipped.
pub fn decode_str(symbols: &[Symbol]) -> String {
    symbols.iter().filter_map(|s| s.to_char()).collect()
}

/// Shorthand for building symbol strings in tests and examples.
pub fn syms(s: &str) -> Vec<Symbol> {
    encode_str(s).unwrap_or_else(|c| panic!("character {c:?} is not in the symbol table"))
}

pub fn sym(c: char) -> Symbol {
    Symbol::from_char(c).unwrap_or_else(|| panic!("character {c:?} is not in the symbol table"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_a_bijection_without_excluded_chars() {
        let table = SymbolTable::global();
        for s in table.concrete() {
            let c = s.to_char().unwrap();
            assert!(!EXCLUDED_CHARS.contains(&c));
            assert_eq!(Symbol::from_char(c), Some(s));
        }
        assert_eq!(table.capacity(), 5 + 91 + 96);
        for c in EXCLUDED_CHARS {
            assert_eq!(Symbol::from_char(c), None);
        }
    }

    #[test]
    fn shorthand_case_maps() {
        assert_eq!(
            sym('a').apply_shorthand(Symbol::LOWER_TO_UPPER),
            Some(sym('A'))
        );
        assert_eq!(sym('B').apply_shorthand(Symbol::LOWER_TO_UPPER), None);
        assert_eq!(
            sym('B').apply_shorthand(Symbol::UPPER_TO_LOWER),
            Some(sym('b'))
        );
        assert_eq!(
            sym('\u{0250}').apply_shorthand(Symbol::UPPER_TO_LOWER),
            None
        );
        assert_eq!(sym('7').apply_shorthand(Symbol::ID), Some(sym('7')));
    }

    #[test]
    fn att_tokens_roundtrip() {
        for s in [
            Symbol::EPS,
            Symbol::ID,
            Symbol::LOWER_TO_UPPER,
            Symbol::UPPER_TO_LOWER,
            sym('x'),
            sym('ʃ'),
        ] {
            assert_eq!(Symbol::from_att_token(&s.att_token()), Some(s));
        }
    }
}
