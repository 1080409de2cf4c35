//! Tweet records and the automation/relevance filters applied before analysis.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Location attached to a post, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    Point { lon: f64, lat: f64 },
    BBox { lon_min: f64, lat_min: f64, lon_max: f64, lat_max: f64 },
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let check = |lon: f64, lat: f64| -> Result<()> {
            if !(-180.0..=180.0).contains(&lon) || !(-90.0..=90.0).contains(&lat) {
                return Err(Error::InvalidGeometry(format!("coordinate ({lon}, {lat}) out of range")));
            }
            Ok(())
        };
        match *self {
            Geometry::Point { lon, lat } => check(lon, lat),
            Geometry::BBox { lon_min, lat_min, lon_max, lat_max } => {
                check(lon_min, lat_min)?;
                check(lon_max, lat_max)?;
                if lon_min > lon_max || lat_min > lat_max {
                    return Err(Error::InvalidGeometry(format!(
                        "bbox min exceeds max: [{lon_min}, {lat_min}, {lon_max}, {lat_max}]"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn center(&self) -> (f64, f64) {
        match *self {
            Geometry::Point { lon, lat } => (lon, lat),
            Geometry::BBox { lon_min, lat_min, lon_max, lat_max } => {
                ((lon_min + lon_max) / 2.0, (lat_min + lat_max) / 2.0)
            }
        }
    }

    /// A bbox with zero width or height behaves as its center point.
    pub fn is_degenerate(&self) -> bool {
        match *self {
            Geometry::Point { .. } => true,
            Geometry::BBox { lon_min, lat_min, lon_max, lat_max } => {
                lon_min == lon_max || lat_min == lat_max
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub text: String,
    pub author_handle: String,
    pub author_display: String,
    pub geometry: Geometry,
}

impl TweetRecord {
    pub fn date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }
}

/// Inclusive range of UTC dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl StudyWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidParameter(format!("study window {start}..{end} is empty")));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, ts: &DateTime<Utc>) -> bool {
        let d = ts.date_naive();
        d >= self.start && d <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovedAuthor {
    pub handle: String,
    pub count: usize,
}

/// Drops every post by an author whose post count strictly exceeds
/// `threshold_fraction * records.len()`.
///
/// The removed list is ordered by count (descending), then handle.
pub fn filter_high_volume_authors(
    records: Vec<TweetRecord>,
    threshold_fraction: f64,
) -> Result<(Vec<TweetRecord>, Vec<RemovedAuthor>)> {
    if !(threshold_fraction > 0.0 && threshold_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold_fraction must lie in (0, 1), got {threshold_fraction}"
        )));
    }
    if records.is_empty() {
        return Ok((records, Vec::new()));
    }
    // phase one: global counts
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &records {
        *counts.entry(r.author_handle.as_str()).or_default() += 1;
    }
    let limit = threshold_fraction * records.len() as f64;
    let mut removed: Vec<RemovedAuthor> = counts
        .into_iter()
        .filter(|&(_, c)| c as f64 > limit)
        .map(|(h, c)| RemovedAuthor { handle: String::from(h), count: c })
        .collect();
    removed.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.handle.cmp(&b.handle)));

    // phase two: filter
    let dropped: BTreeSet<&str> = removed.iter().map(|a| a.handle.as_str()).collect();
    let kept = records
        .into_iter()
        .filter(|r| !dropped.contains(r.author_handle.as_str()))
        .collect();
    Ok((kept, removed))
}

fn contains_ci(haystack: &str, needle: &str) -> bool {
    haystack.to_lowercase().contains(needle)
}

/// True when the handle or display name contains "weather" in any case.
pub fn is_weather_username(record: &TweetRecord) -> bool {
    contains_ci(&record.author_handle, "weather") || contains_ci(&record.author_display, "weather")
}

pub fn filter_weather_usernames(records: Vec<TweetRecord>) -> Vec<TweetRecord> {
    records.into_iter().filter(|r| !is_weather_username(r)).collect()
}

/// Finds `needle` (lowercase ASCII) in `text` ignoring case, where the match is
/// not glued to a letter on either side. Digits and punctuation do not protect
/// the unit, so "12mph" matches while "oomph" does not.
fn contains_unit(chars: &[char], needle: &[char]) -> bool {
    if chars.len() < needle.len() {
        return false;
    }
    (0..=chars.len() - needle.len()).any(|i| {
        chars[i..i + needle.len()].iter().zip(needle).all(|(c, n)| c == n)
            && (i == 0 || !chars[i - 1].is_alphabetic())
            && chars.get(i + needle.len()).is_none_or(|c| !c.is_alphabetic())
    })
}

/// True for posts that look like automated station reports, or that use the
/// idiom "under the weather".
pub fn is_structured_report(text: &str) -> bool {
    let lower: Vec<char> = text.chars().flat_map(char::to_lowercase).collect();
    if contains_unit(&lower, &['m', 'p', 'h']) || contains_unit(&lower, &['h', 'p', 'a']) {
        return true;
    }
    let phrase: Vec<char> = "under the weather".chars().collect();
    lower.windows(phrase.len()).any(|w| w == phrase.as_slice())
}

pub fn filter_structured_reports(records: Vec<TweetRecord>) -> Vec<TweetRecord> {
    records.into_iter().filter(|r| !is_structured_report(&r.text)).collect()
}
