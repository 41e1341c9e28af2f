//! Dispatch log: one tab-separated row per dispatch attempt.
//!
//! ```text
//! LOG FILE
//! External IP<TAB>Application<TAB>Internal IP<TAB>No. of Files<TAB>Received<TAB>DispatchedAt
//! 10.20.30.40<TAB>App1<TAB>192.168.10.50<TAB>4<TAB>4<TAB>120
//! ```

use std::fmt::Write as _;

use serde::Serialize;

use crate::ids::{parse_ipv4, ApplicationId};

use super::FailoverError;

pub const TITLE_LINE: &str = "LOG FILE";
pub const HEADER_LINE: &str = "External IP\tApplication\tInternal IP\tNo. of Files\tReceived\tDispatchedAt";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LogRecord {
    pub external_ip: String,
    pub app: ApplicationId,
    pub internal_ip: String,
    pub n_files_expected: u32,
    pub n_files_received: u32,
    pub dispatched_at: u64,
}

impl LogRecord {
    pub fn is_complete(&self) -> bool {
        self.n_files_received >= self.n_files_expected
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LogFile {
    pub records: Vec<LogRecord>,
}

impl LogFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, record: LogRecord) -> usize {
        self.records.push(record);
        self.records.len() - 1
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(TITLE_LINE);
        out.push('\n');
        out.push_str(HEADER_LINE);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                r.external_ip, r.app, r.internal_ip, r.n_files_expected, r.n_files_received, r.dispatched_at
            );
        }
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, FailoverError> {
        let text = std::str::from_utf8(bytes).map_err(|e| {
            let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
            parse_err(line, "not valid UTF-8")
        })?;
        let lines: Vec<&str> = text.split('\n').collect();
        match lines.last() {
            Some(&"") => {}
            _ => return Err(parse_err(lines.len(), "missing final newline")),
        }
        let lines = &lines[..lines.len() - 1];
        if lines.first() != Some(&TITLE_LINE) {
            return Err(parse_err(1, "expected `LOG FILE` title line"));
        }
        if lines.get(1) != Some(&HEADER_LINE) {
            return Err(parse_err(2, "unexpected column header"));
        }
        let records = lines[2..]
            .iter()
            .enumerate()
            .map(|(i, row)| parse_row(row).map_err(|msg| parse_err(i + 3, msg)))
            .collect::<Result<_, _>>()?;
        Ok(Self { records })
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> FailoverError {
    FailoverError::Parse { line, message: message.into() }
}

fn canonical_u64(field: &str, what: &str) -> Result<u64, String> {
    let ok = !field.is_empty() && field.bytes().all(|b| b.is_ascii_digit()) && (field == "0" || !field.starts_with('0'));
    if !ok {
        return Err(format!("{what} `{field}` is not a canonical decimal"));
    }
    field.parse().map_err(|_| format!("{what} `{field}` out of range"))
}

fn canonical_u32(field: &str, what: &str) -> Result<u32, String> {
    let v = canonical_u64(field, what)?;
    u32::try_from(v).map_err(|_| format!("{what} `{field}` out of range"))
}

fn parse_row(row: &str) -> Result<LogRecord, String> {
    let f: Vec<&str> = row.split('\t').collect();
    if f.len() != 6 {
        return Err(format!("expected 6 tab-separated fields, found {}", f.len()));
    }
    if parse_ipv4(f[0]).is_none() {
        return Err(format!("malformed external IP `{}`", f[0]));
    }
    let app = ApplicationId::new(f[1]).map_err(|e| e.to_string())?;
    if parse_ipv4(f[2]).is_none() {
        return Err(format!("malformed internal IP `{}`", f[2]));
    }
    let expected = canonical_u32(f[3], "file count")?;
    let received = canonical_u32(f[4], "received count")?;
    let dispatched_at = canonical_u64(f[5], "dispatch time")?;
    if expected == 0 {
        return Err("file count must be positive".into());
    }
    if received > expected {
        return Err(format!("received {received} exceeds expected {expected}"));
    }
    Ok(LogRecord {
        external_ip: f[0].to_string(),
        app,
        internal_ip: f[2].to_string(),
        n_files_expected: expected,
        n_files_received: received,
        dispatched_at,
    })
}
