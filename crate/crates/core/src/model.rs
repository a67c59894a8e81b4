//! Identifiers and bibliographic types shared by every service.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyError {
    #[error("invalid ISSN `{0}`")]
    InvalidIssn(String),
    #[error("invalid key `{0}`")]
    InvalidKey(String),
}

/// A formatted ISSN (`NNNN-NNNC`) whose check character has been verified.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Issn(String);

impl Issn {
    pub fn parse(s: &str) -> Result<Self, KeyError> {
        if !Self::is_well_formed(s) {
            return Err(KeyError::InvalidIssn(s.to_string()));
        }
        let digits: Vec<u8> = s.bytes().filter(|b| *b != b'-').collect();
        let expected = issn_check_char(&digits[..7]);
        if digits[7].to_ascii_uppercase() != expected as u8 {
            return Err(KeyError::InvalidIssn(s.to_string()));
        }
        Ok(Issn(s.to_ascii_uppercase()))
    }

    /// Shape check only (`NNNN-NNNC`), without verifying the check character.
    pub fn is_well_formed(s: &str) -> bool {
        let b = s.as_bytes();
        b.len() == 9
            && b[4] == b'-'
            && b[..4].iter().all(u8::is_ascii_digit)
            && b[5..8].iter().all(u8::is_ascii_digit)
            && (b[8].is_ascii_digit() || b[8] == b'X' || b[8] == b'x')
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Mod-11 check character for the first seven ISSN digits (ASCII bytes).
pub fn issn_check_char(first_seven: &[u8]) -> char {
    let sum: u32 = first_seven
        .iter()
        .zip((2..=8).rev())
        .map(|(d, w)| u32::from(d - b'0') * w)
        .sum();
    match (11 - sum % 11) % 11 {
        10 => 'X',
        n => char::from_digit(n, 10).unwrap(),
    }
}

impl fmt::Display for Issn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Issn {
    type Err = KeyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Issn::parse(s)
    }
}

impl TryFrom<String> for Issn {
    type Error = KeyError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Issn::parse(&s)
    }
}

impl From<Issn> for String {
    fn from(i: Issn) -> String {
        i.0
    }
}

macro_rules! string_id {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                $name(s.into())
            }
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }
    };
}

string_id!(
    /// Consortium member identifier.
    InstitutionId
);
string_id!(
    /// Editor (publisher platform) identifier, selects the binder plugin.
    EditorId
);
string_id!(ProviderId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    HumanSciences,
    ExactSciences,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::HumanSciences => "human-sciences",
            Domain::ExactSciences => "exact-sciences",
        }
    }
}

impl FromStr for Domain {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "human-sciences" => Ok(Domain::HumanSciences),
            "exact-sciences" => Ok(Domain::ExactSciences),
            other => Err(format!("unknown domain `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Journal {
    pub issn: Issn,
    /// Short operator alias (e.g. `J1`) accepted wherever an ISSN is.
    #[serde(default)]
    pub code: Option<String>,
    pub title: String,
    pub domains: Vec<Domain>,
    pub editor: EditorId,
}

/// Identifies one journal issue: the deduplication key of a summary.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SummaryKey {
    pub issn: Issn,
    pub volume: u32,
    pub issue: u32,
}

/// Identifies one article: `ISSN:vV:iI:aK`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ArticleKey {
    pub issn: Issn,
    pub volume: u32,
    pub issue: u32,
    pub seq: u32,
}

impl SummaryKey {
    pub fn article(&self, seq: u32) -> ArticleKey {
        ArticleKey {
            issn: self.issn.clone(),
            volume: self.volume,
            issue: self.issue,
            seq,
        }
    }
}

impl ArticleKey {
    pub fn summary_key(&self) -> SummaryKey {
        SummaryKey {
            issn: self.issn.clone(),
            volume: self.volume,
            issue: self.issue,
        }
    }
}

fn tagged_number(part: Option<&str>, tag: char, whole: &str) -> Result<u32, KeyError> {
    part.and_then(|p| p.strip_prefix(tag))
        .and_then(|n| n.parse::<u32>().ok())
        .filter(|n| *n > 0)
        .ok_or_else(|| KeyError::InvalidKey(whole.to_string()))
}

/// Splits `JOURNAL:vV:iI[:aK]` where JOURNAL is left unparsed, so callers
/// can map operator aliases onto ISSNs.
pub fn split_key(s: &str) -> Result<(&str, u32, u32, Option<u32>), KeyError> {
    let mut parts = s.split(':');
    let journal = parts
        .next()
        .filter(|j| !j.is_empty())
        .ok_or_else(|| KeyError::InvalidKey(s.to_string()))?;
    let volume = tagged_number(parts.next(), 'v', s)?;
    let issue = tagged_number(parts.next(), 'i', s)?;
    let seq = match parts.next() {
        Some(p) => Some(tagged_number(Some(p), 'a', s)?),
        None => None,
    };
    if parts.next().is_some() {
        return Err(KeyError::InvalidKey(s.to_string()));
    }
    Ok((journal, volume, issue, seq))
}

impl FromStr for ArticleKey {
    type Err = KeyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match split_key(s)? {
            (j, volume, issue, Some(seq)) => Ok(ArticleKey {
                issn: Issn::parse(j)?,
                volume,
                issue,
                seq,
            }),
            _ => Err(KeyError::InvalidKey(s.to_string())),
        }
    }
}

impl FromStr for SummaryKey {
    type Err = KeyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match split_key(s)? {
            (j, volume, issue, None) => Ok(SummaryKey {
                issn: Issn::parse(j)?,
                volume,
                issue,
            }),
            _ => Err(KeyError::InvalidKey(s.to_string())),
        }
    }
}

impl fmt::Display for ArticleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:v{}:i{}:a{}",
            self.issn, self.volume, self.issue, self.seq
        )
    }
}

impl fmt::Display for SummaryKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:v{}:i{}", self.issn, self.volume, self.issue)
    }
}

impl TryFrom<String> for ArticleKey {
    type Error = KeyError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ArticleKey> for String {
    fn from(k: ArticleKey) -> String {
        k.to_string()
    }
}

impl TryFrom<String> for SummaryKey {
    type Error = KeyError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SummaryKey> for String {
    fn from(k: SummaryKey) -> String {
        k.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent check: a valid ISSN has a weighted digit sum
    /// (weights 8..1, X = 10) divisible by 11.
    fn brute_force_check(prefix: &str) -> char {
        let digits: Vec<u32> = prefix.chars().filter_map(|c| c.to_digit(10)).collect();
        for candidate in 0..=10u32 {
            let sum: u32 = digits
                .iter()
                .enumerate()
                .map(|(i, d)| d * (8 - i as u32))
                .sum::<u32>()
                + candidate;
            if sum % 11 == 0 {
                return if candidate == 10 {
                    'X'
                } else {
                    char::from_digit(candidate, 10).unwrap()
                };
            }
        }
        unreachable!()
    }

    #[test]
    fn check_char_matches_brute_force() {
        for prefix in ["1234567", "0000001", "0317846", "1050012", "2049363"] {
            assert_eq!(
                issn_check_char(prefix.as_bytes()),
                brute_force_check(prefix)
            );
        }
        assert_eq!(issn_check_char(b"1234567"), '9');
    }

    #[test]
    fn rejects_bad_check_digit() {
        assert!(Issn::parse("1234-5678").is_err());
        assert!(Issn::parse("1234-5679").is_ok());
        assert!(Issn::parse("1050-012X").is_ok());
        assert!(Issn::parse("1050-012x").is_ok());
        assert!(Issn::parse("10500-12X").is_err());
        assert!(Issn::parse("").is_err());
    }

    #[test]
    fn article_key_text_form() {
        let k: ArticleKey = "0000-0035:v12:i3:a1".parse().unwrap();
        assert_eq!(k.volume, 12);
        assert_eq!(k.issue, 3);
        assert_eq!(k.seq, 1);
        assert_eq!(k.to_string(), "0000-0035:v12:i3:a1");
        assert_eq!(k.summary_key().to_string(), "0000-0035:v12:i3");
        assert!("0000-0035:v12:i3".parse::<ArticleKey>().is_err());
        assert!("0000-0035:v0:i3:a1".parse::<ArticleKey>().is_err());
        assert!("0000-0035:v1:i3:a1:x".parse::<ArticleKey>().is_err());
    }
}
