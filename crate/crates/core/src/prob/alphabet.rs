use std::fmt;

use crate::error::{Error, Result};

/// A finite, ordered set of named symbols.
///
/// Two alphabets are *compatible* when their symbol lists agree; the name is
/// only a label used in messages.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    name: String,
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, symbols: Vec<String>) -> Result<Self> {
        let name = name.into();
        if symbols.is_empty() {
            return Err(Error::InvalidAlphabet(format!("alphabet '{name}' is empty")));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(Error::InvalidAlphabet(format!(
                    "alphabet '{name}' repeats symbol '{s}'"
                )));
            }
        }
        Ok(Self { name, symbols })
    }

    /// Alphabet with symbols `"0"`, `"1"`, ..., `"size-1"`.
    ///
    /// Panics if `size` is zero.
    pub fn indexed(name: impl Into<String>, size: usize) -> Self {
        assert!(size >= 1, "alphabet size must be positive");
        Self {
            name: name.into(),
            symbols: (0..size).map(|i| i.to_string()).collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }

    pub fn compatible(&self, other: &Alphabet) -> bool {
        self.symbols == other.symbols
    }

    pub(crate) fn ensure_compatible(&self, other: &Alphabet) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::AlphabetMismatch {
                expected: self.to_string(),
                found: other.to_string(),
            })
        }
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            symbols: self.symbols.clone(),
        }
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{{{}}}", self.name, self.symbols.join(","))
    }
}
