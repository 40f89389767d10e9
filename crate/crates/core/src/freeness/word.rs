use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

/// Alternating index word `i₁ ≠ i₂ ≠ … ≠ i_k` over 1-based family indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WordSpec {
    indices: Vec<usize>,
}

impl WordSpec {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::param("word", "must have length >= 1"));
        }
        if indices.contains(&0) {
            return Err(Error::param("word", "indices are 1-based"));
        }
        if let Some(t) = indices.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::param(
                "word",
                alloc::format!("positions {} and {} repeat index {}", t + 1, t + 2, indices[t]),
            ));
        }
        Ok(Self { indices })
    }

    /// Parses a comma-separated list such as `1,2,1,2`.
    pub fn parse(text: &str) -> Result<Self> {
        let indices = text
            .split(',')
            .map(|s| {
                s.trim().parse::<usize>().map_err(|e| Error::Parse {
                    position: 0,
                    reason: alloc::format!("bad word index {:?}: {}", s.trim(), e.to_string()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(indices)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn max_index(&self) -> usize {
        self.indices.iter().copied().max().unwrap_or(0)
    }
}

impl fmt::Display for WordSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (t, i) in self.indices.iter().enumerate() {
            if t > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let w = WordSpec::parse("1, 2,1,3").unwrap();
        assert_eq!(w.indices(), &[1, 2, 1, 3]);
        assert_eq!(w.len(), 4);
        assert_eq!(w.max_index(), 3);
        assert_eq!(alloc::format!("{w}"), "1,2,1,3");
    }

    #[test]
    fn rejects_non_alternating() {
        assert!(WordSpec::parse("1,1,2").is_err());
        assert!(WordSpec::parse("").is_err());
        assert!(WordSpec::parse("0,1").is_err());
        assert!(WordSpec::new(Vec::new()).is_err());
        assert!(WordSpec::parse("1,x").is_err());
    }
}
