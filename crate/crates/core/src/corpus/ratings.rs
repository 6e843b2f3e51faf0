use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// A discrete user rating in `1..=10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Rating(u8);

impl Rating {
    pub fn new(value: u8) -> Result<Self> {
        if (1..=10).contains(&value) {
            Ok(Rating(value))
        } else {
            Err(Error::InvalidRating(value.to_string()))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Ratings 6..=10 are positive, 1..=5 negative.
    pub fn is_positive(self) -> bool {
        self.0 >= 6
    }
}

impl fmt::Display for Rating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl<'de> Deserialize<'de> for Rating {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let value = Value::deserialize(d)?;
        parse_rating(&value).map_err(serde::de::Error::custom)
    }
}

/// Accepts only JSON integers in range; `7.0`, `"7"` and `7.5` are rejected.
pub fn parse_rating(value: &Value) -> Result<Rating> {
    match value.as_u64() {
        Some(v) if (1..=10).contains(&v) => Ok(Rating(v as u8)),
        _ => Err(Error::InvalidRating(value.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingEntry {
    pub id: String,
    pub rating: Rating,
}

/// Reads a JSON Lines ratings file. A repeated id replaces the earlier
/// rating in place, so the result has unique ids in first-seen order.
pub fn read_ratings<R: BufRead>(input: R) -> Result<Vec<RatingEntry>> {
    let mut entries: Vec<RatingEntry> = Vec::new();
    let mut seen = std::collections::HashMap::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: RatingEntry =
            serde_json::from_str(&line).map_err(|source| Error::Json { line: idx + 1, source })?;
        match seen.get(&entry.id) {
            Some(&pos) => entries[pos] = entry,
            None => {
                seen.insert(entry.id.clone(), entries.len());
                entries.push(entry);
            }
        }
    }
    Ok(entries)
}

pub fn write_ratings<W: Write>(mut out: W, entries: &[RatingEntry]) -> Result<()> {
    for entry in entries {
        serde_json::to_writer(&mut out, entry)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
