//! Event-log parsing, superspreader selection and overlapping time windows.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result};

pub const SECONDS_PER_DAY: i64 = 86_400;

/// Dense index of a user inside a [`UserTable`]. Index order equals the
/// lexicographic order of the user ids.
pub type UserId = u32;

/// One user retweeting one original tweet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetweetEvent {
    pub user_id: String,
    pub tweet_id: String,
    pub original_tweet_id: String,
    /// UTC seconds since the epoch.
    pub timestamp: i64,
    /// Lowercase, `#`-stripped, deduplicated.
    pub hashtags: Vec<String>,
}

impl RetweetEvent {
    pub fn new(
        user_id: impl Into<String>,
        tweet_id: impl Into<String>,
        original_tweet_id: impl Into<String>,
        timestamp: i64,
        hashtags: impl IntoIterator<Item = impl AsRef<str>>,
    ) -> Self {
        RetweetEvent {
            user_id: user_id.into(),
            tweet_id: tweet_id.into(),
            original_tweet_id: original_tweet_id.into(),
            timestamp,
            hashtags: normalize_hashtags(hashtags),
        }
    }
}

/// Lowercases, strips leading `#` and drops empty and repeated tags while
/// keeping first-seen order.
pub fn normalize_hashtags(tags: impl IntoIterator<Item = impl AsRef<str>>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for tag in tags {
        let tag = tag.as_ref().trim().trim_start_matches('#').to_lowercase();
        if !tag.is_empty() && !out.contains(&tag) {
            out.push(tag);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Jsonl,
    Csv,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" | "ndjson" => Ok(InputFormat::Jsonl),
            "csv" => Ok(InputFormat::Csv),
            other => Err(Error::InvalidParameter(format!("unknown input format `{other}`"))),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputFormat::Jsonl => "jsonl",
            InputFormat::Csv => "csv",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParseOptions {
    /// Malformed records tolerated, as a fraction of all records (rounded up).
    pub max_bad_fraction: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            max_bad_fraction: 0.01,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParseReport {
    pub total_records: usize,
    pub bad_records: usize,
    /// 1-based record numbers of the first malformed records.
    pub bad_record_numbers: Vec<usize>,
}

const MAX_REPORTED_BAD: usize = 20;

impl ParseReport {
    fn reject(&mut self, record: usize, why: &str) {
        self.bad_records += 1;
        if self.bad_record_numbers.len() < MAX_REPORTED_BAD {
            self.bad_record_numbers.push(record);
        }
        log::debug!("skipping malformed record {record}: {why}");
    }
}

/// Parses a JSONL or CSV event log. Returns the events sorted by timestamp
/// together with the malformed-record tally.
pub fn parse_events<R: Read>(
    source: R,
    format: InputFormat,
    options: &ParseOptions,
) -> Result<(Vec<RetweetEvent>, ParseReport)> {
    let mut report = ParseReport::default();
    let mut events = match format {
        InputFormat::Jsonl => parse_jsonl(source, &mut report)?,
        InputFormat::Csv => parse_csv(source, &mut report)?,
    };
    let allowed = (options.max_bad_fraction * report.total_records as f64 - 1e-9)
        .ceil()
        .max(0.0) as usize;
    if report.bad_records > allowed {
        return Err(Error::TooManyBadRecords {
            bad: report.bad_records,
            total: report.total_records,
            allowed,
        });
    }
    if events.is_empty() {
        return Err(Error::NoEvents);
    }
    events.sort_by(|a, b| {
        (a.timestamp, &a.user_id, &a.tweet_id).cmp(&(b.timestamp, &b.user_id, &b.tweet_id))
    });
    Ok((events, report))
}

fn parse_jsonl<R: Read>(source: R, report: &mut ParseReport) -> Result<Vec<RetweetEvent>> {
    let mut events = Vec::new();
    for line in BufReader::new(source).lines() {
        let line = line.map_err(|e| Error::Unreadable(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        report.total_records += 1;
        let record = report.total_records;
        match serde_json::from_str::<Value>(&line)
            .map_err(|e| e.to_string())
            .and_then(|v| event_from_json(&v))
        {
            Ok(event) => events.push(event),
            Err(why) => report.reject(record, &why),
        }
    }
    Ok(events)
}

fn json_scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn event_from_json(v: &Value) -> std::result::Result<RetweetEvent, String> {
    let obj = v.as_object().ok_or("record is not an object")?;
    let field = |name: &str| -> std::result::Result<String, String> {
        obj.get(name)
            .and_then(json_scalar)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| format!("missing `{name}`"))
    };
    let user_id = field("user_id")?;
    let original_tweet_id = field("original_tweet_id")?;
    let tweet_id = obj.get("tweet_id").and_then(json_scalar).unwrap_or_default();
    let timestamp = match obj.get("timestamp") {
        Some(Value::Number(n)) => n
            .as_i64()
            .or_else(|| n.as_f64().map(|f| f.floor() as i64))
            .ok_or("bad timestamp")?,
        Some(Value::String(s)) => parse_timestamp(s).map_err(|e| e.to_string())?,
        _ => return Err("missing `timestamp`".into()),
    };
    let hashtags = match obj.get("hashtags") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|h| h.as_str().map(str::to_owned).ok_or("non-string hashtag"))
            .collect::<std::result::Result<Vec<_>, _>>()?,
        Some(_) => return Err("`hashtags` is not an array".into()),
    };
    Ok(RetweetEvent::new(user_id, tweet_id, original_tweet_id, timestamp, hashtags))
}

fn parse_csv<R: Read>(source: R, report: &mut ParseReport) -> Result<Vec<RetweetEvent>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| Error::Unreadable(e.to_string()))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(user_col), Some(orig_col), Some(ts_col)) = (
        column("user_id"),
        column("original_tweet_id"),
        column("timestamp"),
    ) else {
        return Err(Error::Unreadable(
            "CSV header must name user_id, original_tweet_id and timestamp".into(),
        ));
    };
    let tweet_col = column("tweet_id");
    let tag_col = column("hashtags");

    let mut events = Vec::new();
    for row in reader.records() {
        report.total_records += 1;
        let record = report.total_records;
        let row = match row {
            Ok(row) => row,
            Err(e) if e.is_io_error() => return Err(Error::Unreadable(e.to_string())),
            Err(e) => {
                report.reject(record, &e.to_string());
                continue;
            }
        };
        let get = |col: usize| row.get(col).map(str::trim).filter(|s| !s.is_empty());
        let (Some(user), Some(orig), Some(ts)) = (get(user_col), get(orig_col), get(ts_col)) else {
            report.reject(record, "missing required field");
            continue;
        };
        let timestamp = match parse_timestamp(ts) {
            Ok(t) => t,
            Err(e) => {
                report.reject(record, &e.to_string());
                continue;
            }
        };
        let tweet = tweet_col.and_then(get).unwrap_or("");
        let tags = tag_col.and_then(get).unwrap_or("");
        events.push(RetweetEvent::new(
            user,
            tweet,
            orig,
            timestamp,
            tags.split('|'),
        ));
    }
    Ok(events)
}

/// Epoch seconds, RFC 3339, `YYYY-MM-DD HH:MM:SS` (UTC) or a bare date.
pub fn parse_timestamp(s: &str) -> Result<i64> {
    let s = s.trim();
    if let Ok(secs) = s.parse::<i64>() {
        return Ok(secs);
    }
    if let Ok(secs) = s.parse::<f64>() {
        if secs.is_finite() {
            return Ok(secs.floor() as i64);
        }
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(dt.and_utc().timestamp());
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp());
    }
    Err(Error::format("timestamp", format!("unrecognized `{s}`")))
}

/// Dataset span `[start, end)` in UTC seconds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: i64,
    pub end: i64,
}

impl Span {
    /// Parses span bounds. A bare date as `end` is inclusive: the span runs to
    /// the end of that day.
    pub fn parse(start: &str, end: &str) -> Result<Span> {
        let start_ts = parse_timestamp(start)?;
        let mut end_ts = parse_timestamp(end)?;
        if NaiveDate::parse_from_str(end.trim(), "%Y-%m-%d").is_ok() {
            end_ts += SECONDS_PER_DAY;
        }
        if end_ts <= start_ts {
            return Err(Error::InvalidParameter(format!(
                "span end `{end}` is not after start `{start}`"
            )));
        }
        Ok(Span {
            start: start_ts,
            end: end_ts,
        })
    }

    /// Whole UTC days covering every event.
    pub fn covering(events: &[RetweetEvent]) -> Result<Span> {
        let min = events.iter().map(|e| e.timestamp).min().ok_or(Error::NoEvents)?;
        let max = events.iter().map(|e| e.timestamp).max().ok_or(Error::NoEvents)?;
        Ok(Span {
            start: min.div_euclid(SECONDS_PER_DAY) * SECONDS_PER_DAY,
            end: (max.div_euclid(SECONDS_PER_DAY) + 1) * SECONDS_PER_DAY,
        })
    }

    pub fn contains(&self, t: i64) -> bool {
        self.start <= t && t < self.end
    }

    pub fn len_secs(&self) -> i64 {
        self.end - self.start
    }
}

/// Picks the `⌈top_fraction · |users|⌉` users with the most retweets made.
/// Ties at the cutoff go to the lexicographically smaller id.
pub fn select_superspreaders(events: &[RetweetEvent], top_fraction: f64) -> Result<BTreeSet<String>> {
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "top_fraction must be in (0, 1], got {top_fraction}"
        )));
    }
    if events.is_empty() {
        return Err(Error::NoEvents);
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for e in events {
        *counts.entry(e.user_id.as_str()).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let keep = ((top_fraction * ranked.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(ranked
        .into_iter()
        .take(keep)
        .map(|(u, _)| u.to_owned())
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub index: usize,
    /// UTC seconds, inclusive.
    pub start: i64,
    pub duration_days: u32,
    pub offset_days: u32,
}

impl WindowSpec {
    /// Exclusive end.
    pub fn end(&self) -> i64 {
        self.start + i64::from(self.duration_days) * SECONDS_PER_DAY
    }

    pub fn contains(&self, t: i64) -> bool {
        self.start <= t && t < self.end()
    }
}

/// Windows of `d_days` starting every `delta_days` inside `[span_start, span_end)`.
pub fn make_windows(span_start: i64, span_end: i64, d_days: u32, delta_days: u32) -> Result<Vec<WindowSpec>> {
    if d_days == 0 {
        return Err(Error::InvalidParameter("window duration must be >= 1 day".into()));
    }
    if delta_days == 0 {
        return Err(Error::InvalidParameter("window offset must be >= 1 day".into()));
    }
    let span = span_end - span_start;
    let width = i64::from(d_days) * SECONDS_PER_DAY;
    let step = i64::from(delta_days) * SECONDS_PER_DAY;
    if span < width {
        return Err(Error::SpanTooShort {
            span_secs: span,
            window_secs: width,
        });
    }
    let count = ((span - width) / step + 1) as usize;
    Ok((0..count)
        .map(|i| WindowSpec {
            index: i,
            start: span_start + i as i64 * step,
            duration_days: d_days,
            offset_days: delta_days,
        })
        .collect())
}

/// Windows covering `t`, assuming `windows` came from [`make_windows`].
pub fn covering_windows(windows: &[WindowSpec], t: i64) -> std::ops::Range<usize> {
    let Some(first) = windows.first() else {
        return 0..0;
    };
    let step = i64::from(first.offset_days) * SECONDS_PER_DAY;
    let width = i64::from(first.duration_days) * SECONDS_PER_DAY;
    let rel = t - first.start;
    if rel < 0 {
        return 0..0;
    }
    let hi = (rel / step + 1).min(windows.len() as i64);
    // smallest i with start_i + width > t
    let lo = if rel < width { 0 } else { (rel - width) / step + 1 };
    if lo >= hi {
        0..0
    } else {
        lo as usize..hi as usize
    }
}

/// Sorted user ids with their dense indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UserTable {
    names: Vec<String>,
    index: HashMap<String, UserId>,
}

impl UserTable {
    pub fn new(names: impl IntoIterator<Item = impl Into<String>>) -> Self {
        let set: BTreeSet<String> = names.into_iter().map(Into::into).collect();
        let names: Vec<String> = set.into_iter().collect();
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as UserId))
            .collect();
        UserTable { names, index }
    }

    pub fn id(&self, name: &str) -> Option<UserId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: UserId) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Superspreader events bucketed into overlapping windows.
#[derive(Clone, Debug)]
pub struct WindowedCorpus {
    pub users: UserTable,
    pub windows: Vec<WindowSpec>,
    /// Kept events, sorted by timestamp.
    pub events: Vec<RetweetEvent>,
    /// Author of each kept event.
    pub event_users: Vec<UserId>,
    /// Indices into `events` per window, ascending.
    pub window_events: Vec<Vec<usize>>,
}

impl WindowedCorpus {
    pub fn n_windows(&self) -> usize {
        self.windows.len()
    }

    pub fn events_in(&self, window: usize) -> impl Iterator<Item = (UserId, &RetweetEvent)> + '_ {
        self.window_events[window]
            .iter()
            .map(move |&i| (self.event_users[i], &self.events[i]))
    }
}

/// Keeps superspreader events (all events when `superspreaders` is `None`)
/// and places each one in every window covering its timestamp. Events outside
/// every window are dropped.
pub fn window_events(
    events: &[RetweetEvent],
    windows: &[WindowSpec],
    superspreaders: Option<&BTreeSet<String>>,
) -> Result<WindowedCorpus> {
    if windows.is_empty() {
        return Err(Error::InvalidParameter("no windows".into()));
    }
    let mut kept: Vec<RetweetEvent> = events
        .iter()
        .filter(|e| superspreaders.is_none_or(|s| s.contains(&e.user_id)))
        .filter(|e| !covering_windows(windows, e.timestamp).is_empty())
        .cloned()
        .collect();
    kept.sort_by(|a, b| {
        (a.timestamp, &a.user_id, &a.tweet_id).cmp(&(b.timestamp, &b.user_id, &b.tweet_id))
    });
    let users = UserTable::new(kept.iter().map(|e| e.user_id.as_str()));
    let event_users = kept
        .iter()
        .map(|e| users.id(&e.user_id).expect("user interned"))
        .collect();
    let mut window_events = vec![Vec::new(); windows.len()];
    for (i, e) in kept.iter().enumerate() {
        for w in covering_windows(windows, e.timestamp) {
            window_events[w].push(i);
        }
    }
    Ok(WindowedCorpus {
        users,
        windows: windows.to_vec(),
        events: kept,
        event_users,
        window_events,
    })
}
