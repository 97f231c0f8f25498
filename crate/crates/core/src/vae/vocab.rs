//! Fixed 50-token SMILES vocabulary.

use std::collections::HashMap;

use super::VaeError;

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const VOCAB_SIZE: usize = 50;

const SYMBOLS: [&str; VOCAB_SIZE] = [
    "<pad>", "<bos>", "<eos>", "C", "c", "N", "n", "O", "o", "S", "s", "P", "p", "F", "Cl", "Br", "I", "B", "b", "H",
    "(", ")", "[", "]", "=", "#", "-", "+", "0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "%", "@", "/", "\\",
    ".", ":", "*", "Se", "se", "<r0>", "<r1>", "<r2>",
];

/// Character-level tokens; `Cl`, `Br`, `Se` and `se` are single tokens.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<&'static str>,
    index: HashMap<&'static str, usize>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::standard()
    }
}

impl Vocabulary {
    pub fn standard() -> Self {
        let tokens = SYMBOLS.to_vec();
        let index = tokens.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        Vocabulary { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, i: usize) -> Option<&'static str> {
        self.tokens.get(i).copied()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Tokens that may appear inside a SMILES string.
    pub fn is_emittable(&self, i: usize) -> bool {
        self.tokens.get(i).is_some_and(|t| !t.starts_with('<'))
    }

    pub fn tokenize(&self, smiles: &str) -> Result<Vec<usize>, VaeError> {
        let chars: Vec<char> = smiles.chars().collect();
        let mut out = Vec::with_capacity(chars.len());
        let mut i = 0;
        while i < chars.len() {
            if i + 1 < chars.len() {
                let pair: String = chars[i..i + 2].iter().collect();
                if matches!(pair.as_str(), "Cl" | "Br" | "Se" | "se") {
                    out.push(self.index[pair.as_str()]);
                    i += 2;
                    continue;
                }
            }
            let single = chars[i].to_string();
            match self.index.get(single.as_str()) {
                Some(&k) if self.is_emittable(k) => out.push(k),
                _ => {
                    return Err(VaeError::UnknownCharacter {
                        character: chars[i],
                        position: i,
                    })
                }
            }
            i += 1;
        }
        Ok(out)
    }

    /// Tokens followed by EOS; the result is at most `max_len` + 1 long.
    pub fn encode(&self, smiles: &str, max_len: usize) -> Result<Vec<usize>, VaeError> {
        let mut t = self.tokenize(smiles)?;
        if t.len() > max_len {
            return Err(VaeError::TooLong { len: t.len(), max_len });
        }
        t.push(EOS);
        Ok(t)
    }

    /// Joins emittable tokens, stopping at the first EOS.
    pub fn decode(&self, tokens: &[usize]) -> String {
        tokens
            .iter()
            .take_while(|&&t| t != EOS)
            .filter(|&&t| self.is_emittable(t))
            .map(|&t| self.tokens[t])
            .collect()
    }
}
