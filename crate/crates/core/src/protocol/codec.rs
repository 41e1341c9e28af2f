//! Line-framed codec for job delivery and result return.
//!
//! ```text
//! JOB <job_id> <external_ip> <app> <network> <server> <n_files> <payload_len>\n<payload bytes>
//! FILE <name> <length>\n<content bytes>     (repeated)
//! EXIT\n
//! STATUS <app> <network> <server>\n
//! ```
//!
//! Bodies are length-prefixed, never escaped. A decode either consumes every
//! input byte or fails.

use serde::Serialize;

use crate::ids::{parse_ipv4, ApplicationId, JobId, NetworkId, ServerId};

use super::ProtocolError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JobEnvelope {
    pub job_id: JobId,
    pub external_ip: String,
    pub app: ApplicationId,
    pub network: NetworkId,
    pub server: ServerId,
    pub n_files: u32,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileTransfer {
    pub name: String,
    pub content: Vec<u8>,
}

impl FileTransfer {
    pub fn new(name: impl Into<String>, content: Vec<u8>) -> Result<Self, ProtocolError> {
        let name = name.into();
        validate_file_name(&name)?;
        Ok(Self { name, content })
    }

    pub fn len(&self) -> usize {
        self.content.len()
    }

    pub fn is_empty(&self) -> bool {
        self.content.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct StatusLine {
    pub app: ApplicationId,
    pub network: NetworkId,
    pub server: ServerId,
}

/// File names travel in header lines and become path components on the interface.
pub fn validate_file_name(name: &str) -> Result<(), ProtocolError> {
    let bad = name.is_empty()
        || name == "."
        || name == ".."
        || name.chars().any(|c| c == '/' || c == '\\' || c.is_whitespace() || c.is_control());
    if bad {
        return Err(ProtocolError::InvalidFileName(name.to_string()));
    }
    Ok(())
}

const FILE_PREFIX: &[u8] = b"FILE ";
const EXIT_LINE: &[u8] = b"EXIT\n";

pub fn encode_job(e: &JobEnvelope) -> Vec<u8> {
    let mut out = format!(
        "JOB {} {} {} {} {} {} {}\n",
        e.job_id,
        e.external_ip,
        e.app,
        e.network,
        e.server,
        e.n_files,
        e.payload.len()
    )
    .into_bytes();
    out.extend_from_slice(&e.payload);
    out
}

pub fn encode_results(files: &[FileTransfer], status: &StatusLine) -> Vec<u8> {
    let mut out = Vec::new();
    for f in files {
        out.extend_from_slice(format!("FILE {} {}\n", f.name, f.content.len()).as_bytes());
        out.extend_from_slice(&f.content);
    }
    out.extend_from_slice(EXIT_LINE);
    out.extend_from_slice(format!("STATUS {} {} {}\n", status.app, status.network, status.server).as_bytes());
    out
}

fn frame_err(msg: impl Into<String>) -> ProtocolError {
    ProtocolError::Frame(msg.into())
}

/// Reads one LF-terminated header line starting at `pos`.
fn read_line(buf: &[u8], pos: usize) -> Result<(&str, usize), ProtocolError> {
    let rest = &buf[pos..];
    let end = rest.iter().position(|&b| b == b'\n').ok_or(ProtocolError::Truncated)?;
    let line = std::str::from_utf8(&rest[..end]).map_err(|_| frame_err("header line is not UTF-8"))?;
    Ok((line, pos + end + 1))
}

fn fields(line: &str) -> Result<Vec<&str>, ProtocolError> {
    let parts: Vec<&str> = line.split(' ').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(frame_err(format!("malformed header `{line}`")));
    }
    Ok(parts)
}

/// Canonical decimal: digits only, no leading zeros.
fn parse_len(text: &str) -> Result<u64, ProtocolError> {
    let canonical = !text.is_empty() && text.bytes().all(|b| b.is_ascii_digit()) && (text == "0" || !text.starts_with('0'));
    if !canonical {
        return Err(frame_err(format!("non-numeric length `{text}`")));
    }
    text.parse().map_err(|_| frame_err(format!("length out of range `{text}`")))
}

fn token<T: std::str::FromStr<Err = crate::ids::InvalidId>>(text: &str) -> Result<T, ProtocolError> {
    text.parse().map_err(|e: crate::ids::InvalidId| frame_err(e.to_string()))
}

pub fn decode_job(buf: &[u8]) -> Result<JobEnvelope, ProtocolError> {
    let (line, body_start) = read_line(buf, 0)?;
    let f = fields(line)?;
    if f[0] != "JOB" {
        return Err(frame_err(format!("bad magic `{}`", f[0])));
    }
    if f.len() != 8 {
        return Err(frame_err(format!("JOB header has {} fields, expected 8", f.len())));
    }
    if parse_ipv4(f[2]).is_none() {
        return Err(frame_err(format!("malformed external ip `{}`", f[2])));
    }
    let n_files = parse_len(f[6])?;
    if n_files == 0 || n_files > u32::MAX as u64 {
        return Err(frame_err(format!("invalid file count `{}`", f[6])));
    }
    let payload_len = parse_len(f[7])?;
    let available = (buf.len() - body_start) as u64;
    if available < payload_len {
        return Err(ProtocolError::Truncated);
    }
    if available > payload_len {
        return Err(frame_err("trailing bytes after payload"));
    }
    Ok(JobEnvelope {
        job_id: token(f[1])?,
        external_ip: f[2].to_string(),
        app: token(f[3])?,
        network: token(f[4])?,
        server: token(f[5])?,
        n_files: n_files as u32,
        payload: buf[body_start..].to_vec(),
    })
}

pub fn decode_results(buf: &[u8]) -> Result<(Vec<FileTransfer>, StatusLine), ProtocolError> {
    let mut files = Vec::new();
    let mut pos = 0;
    loop {
        if !files.is_empty() {
            // A body just ended: the next bytes must open another frame.
            let rest = &buf[pos..];
            let opens = |marker: &[u8]| rest.starts_with(marker);
            let partial = |marker: &[u8]| marker.starts_with(rest);
            if !(opens(FILE_PREFIX) || opens(EXIT_LINE)) {
                return Err(if partial(FILE_PREFIX) || partial(EXIT_LINE) {
                    ProtocolError::Truncated
                } else {
                    ProtocolError::LengthMismatch
                });
            }
        }
        let (line, next) = read_line(buf, pos)?;
        if line == "EXIT" {
            pos = next;
            break;
        }
        let f = fields(line)?;
        if f[0] != "FILE" {
            return Err(frame_err(format!("bad magic `{}`", f[0])));
        }
        if f.len() != 3 {
            return Err(frame_err(format!("FILE header has {} fields, expected 3", f.len())));
        }
        validate_file_name(f[1]).map_err(|_| frame_err(format!("bad file name `{}`", f[1])))?;
        let len = parse_len(f[2])?;
        if ((buf.len() - next) as u64) < len {
            return Err(ProtocolError::LengthMismatch);
        }
        let end = next + len as usize;
        files.push(FileTransfer { name: f[1].to_string(), content: buf[next..end].to_vec() });
        pos = end;
    }
    let (line, next) = read_line(buf, pos)?;
    let f = fields(line)?;
    if f[0] != "STATUS" {
        return Err(frame_err(format!("expected STATUS, got `{}`", f[0])));
    }
    if f.len() != 4 {
        return Err(frame_err(format!("STATUS line has {} fields, expected 4", f.len())));
    }
    if next != buf.len() {
        return Err(frame_err("trailing bytes after STATUS"));
    }
    let status = StatusLine {
        app: token(f[1])?,
        network: token(f[2])?,
        server: token(f[3])?,
    };
    Ok((files, status))
}
