//! Server-side intake (decode, execute, stage) and result return.

use std::collections::BTreeMap;

use crate::dispatch::fnv1a64;
use crate::ids::{ApplicationId, JobId};

use super::codec::{decode_job, encode_results, FileTransfer, JobEnvelope, StatusLine};
use super::ProtocolError;

pub trait Executor {
    fn execute(&mut self, job_id: &JobId, app: &ApplicationId, payload: &[u8], n_files: u32) -> Result<Vec<FileTransfer>, ProtocolError>;
}

/// Deterministic stand-in for the real application runtimes.
#[derive(Debug, Default, Clone, Copy)]
pub struct StubExecutor;

impl Executor for StubExecutor {
    fn execute(&mut self, job_id: &JobId, app: &ApplicationId, payload: &[u8], n_files: u32) -> Result<Vec<FileTransfer>, ProtocolError> {
        Ok(stub_execute(job_id, app, payload, n_files))
    }
}

/// Always crashes; used to inject executor failures.
#[derive(Debug, Default, Clone, Copy)]
pub struct CrashingExecutor;

impl Executor for CrashingExecutor {
    fn execute(&mut self, job_id: &JobId, _: &ApplicationId, _: &[u8], _: u32) -> Result<Vec<FileTransfer>, ProtocolError> {
        Err(ProtocolError::ExecutorFailure(format!("executor crashed while running {job_id}")))
    }
}

/// File `i` is `<app>_out<i>.dat` holding the 16-char lowercase hex FNV-1a of `job_id:app:i`.
pub fn stub_execute(job_id: &JobId, app: &ApplicationId, _payload: &[u8], n_files: u32) -> Vec<FileTransfer> {
    (1..=n_files)
        .map(|i| {
            let digest = fnv1a64(format!("{job_id}:{app}:{i}").as_bytes());
            FileTransfer { name: format!("{app}_out{i}.dat"), content: format!("{digest:016x}").into_bytes() }
        })
        .collect()
}

/// Runs a decoded envelope; the executor must produce exactly `n_files` outputs.
pub fn run_job(e: &JobEnvelope, exec: &mut dyn Executor) -> Result<Vec<FileTransfer>, ProtocolError> {
    let files = exec.execute(&e.job_id, &e.app, &e.payload, e.n_files)?;
    if files.len() != e.n_files as usize {
        return Err(ProtocolError::ExecutorFailure(format!(
            "job {} produced {} files, expected {}",
            e.job_id,
            files.len(),
            e.n_files
        )));
    }
    Ok(files)
}

#[derive(Debug, Clone)]
struct Staged {
    status: StatusLine,
    files: Vec<FileTransfer>,
}

/// One server's protocol endpoint: receives job frames, keeps outputs in a
/// per-job scratch area and hands them back as a result frame.
#[derive(Debug, Clone, Default)]
pub struct ServerEndpoint {
    scratch: BTreeMap<JobId, Staged>,
    down: bool,
}

impl ServerEndpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_up(&self) -> bool {
        !self.down
    }

    /// Decodes and runs a job frame, staging its outputs.
    pub fn ip_receive(&mut self, frame: &[u8], exec: &mut dyn Executor) -> Result<JobEnvelope, ProtocolError> {
        if self.down {
            return Err(ProtocolError::ExecutorFailure("server is down".into()));
        }
        let envelope = decode_job(frame)?;
        let files = run_job(&envelope, exec)?;
        let status = StatusLine { app: envelope.app.clone(), network: envelope.network.clone(), server: envelope.server.clone() };
        self.scratch.insert(envelope.job_id.clone(), Staged { status, files });
        Ok(envelope)
    }

    pub fn staged(&self, job_id: &JobId) -> Option<&[FileTransfer]> {
        self.scratch.get(job_id).map(|s| s.files.as_slice())
    }

    /// Encodes staged outputs into a result frame and clears the scratch entry.
    pub fn op_send(&mut self, job_id: &JobId) -> Option<Vec<u8>> {
        if self.down {
            return None;
        }
        let staged = self.scratch.remove(job_id)?;
        Some(encode_results(&staged.files, &staged.status))
    }

    /// Staged outputs are lost.
    pub fn crash(&mut self) {
        self.down = true;
        self.scratch.clear();
    }
}
