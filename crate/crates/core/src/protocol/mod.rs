//! Interface ↔ server exchange.
//!
//! Four roles take part in every job: the interface sends the job frame
//! (`IP_SEND`), the server decodes and executes it (`IP_RECEIVE`), the server
//! returns its outputs followed by `EXIT` and a status line (`OP_SEND`), and
//! the interface stores the outputs under the user's external IP and releases
//! the server (`OP_RECEIVE`).

pub mod codec;
pub mod exec;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::catalog::{CatalogError, NsMap};
use crate::ids::parse_ipv4;

pub use codec::{
    decode_job, decode_results, encode_job, encode_results, validate_file_name, FileTransfer, JobEnvelope, StatusLine,
};
pub use exec::{run_job, stub_execute, CrashingExecutor, Executor, ServerEndpoint, StubExecutor};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("frame error: {0}")]
    Frame(String),
    #[error("truncated frame")]
    Truncated,
    #[error("declared body length does not match delivered bytes")]
    LengthMismatch,
    #[error("executor failure: {0}")]
    ExecutorFailure(String),
    #[error("invalid file name `{0}`")]
    InvalidFileName(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// Writes each file to `<root>/<external_ip>/<name>`, replacing earlier
/// content. Every name is checked before anything is written.
pub fn store_outputs(root: &Path, external_ip: &str, files: &[FileTransfer]) -> Result<Vec<PathBuf>, ProtocolError> {
    if parse_ipv4(external_ip).is_none() {
        return Err(ProtocolError::InvalidFileName(external_ip.to_string()));
    }
    for f in files {
        validate_file_name(&f.name)?;
    }
    if files.is_empty() {
        return Ok(Vec::new());
    }
    let dir = root.join(external_ip);
    std::fs::create_dir_all(&dir)?;
    files
        .iter()
        .map(|f| {
            let path = dir.join(&f.name);
            std::fs::write(&path, &f.content)?;
            Ok(path)
        })
        .collect()
}

/// Frees the slot named by a status line.
pub fn release_server(map: &mut NsMap, status: &StatusLine) -> Result<(), ProtocolError> {
    map.release(status.network.as_str(), status.server.as_str())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::load_topology;
    use crate::dispatch::{dispatch, AccessFrequencyTable, JobRequest};
    use crate::ids::{ApplicationId, JobId, NetworkId, ServerId, UserId};

    #[test]
    fn stores_under_external_ip() {
        let dir = tempfile::tempdir().unwrap();
        let files = vec![FileTransfer::new("nearfieldEz.jpg", b"jpeg".to_vec()).unwrap()];
        let paths = store_outputs(dir.path(), "10.20.30.40", &files).unwrap();
        assert_eq!(paths, vec![dir.path().join("10.20.30.40").join("nearfieldEz.jpg")]);
        assert_eq!(std::fs::read(&paths[0]).unwrap(), b"jpeg");

        let again = vec![FileTransfer::new("nearfieldEz.jpg", b"v2".to_vec()).unwrap()];
        store_outputs(dir.path(), "10.20.30.40", &again).unwrap();
        assert_eq!(std::fs::read(&paths[0]).unwrap(), b"v2");
    }

    #[test]
    fn empty_file_list_stores_nothing() {
        let dir = tempfile::tempdir().unwrap();
        assert!(store_outputs(dir.path(), "10.20.30.40", &[]).unwrap().is_empty());
    }

    #[test]
    fn traversal_is_rejected_before_writing() {
        let dir = tempfile::tempdir().unwrap();
        let files = vec![
            FileTransfer { name: "ok.dat".into(), content: vec![1] },
            FileTransfer { name: "../evil".into(), content: vec![2] },
        ];
        assert!(matches!(store_outputs(dir.path(), "10.20.30.40", &files), Err(ProtocolError::InvalidFileName(_))));
        assert!(!dir.path().join("10.20.30.40").exists());
    }

    fn status(net: &str, srv: &str) -> StatusLine {
        StatusLine {
            app: ApplicationId::new("app1").unwrap(),
            network: NetworkId::new(net).unwrap(),
            server: ServerId::new(srv).unwrap(),
        }
    }

    #[test]
    fn release_after_dispatch_restores_loads() {
        let mut map = load_topology(include_bytes!("../../fixtures/four_networks.json")).unwrap();
        let before = map.clone();
        let req = JobRequest {
            job_id: JobId::new("j1").unwrap(),
            user_id: UserId::new("u1").unwrap(),
            external_ip: "10.20.30.40".into(),
            app: ApplicationId::new("App2").unwrap(),
            n_files: 1,
            arrival_time: 0,
            payload: vec![],
        };
        let d = dispatch(&mut map, &req, &mut AccessFrequencyTable::new(), 0).unwrap().decision;
        release_server(&mut map, &status(d.network.as_str(), d.server.as_str())).unwrap();
        assert_eq!(map, before);
        assert!(matches!(
            release_server(&mut map, &status(d.network.as_str(), d.server.as_str())),
            Err(ProtocolError::Catalog(CatalogError::NotBusy(_)))
        ));
    }

    #[test]
    fn release_of_idle_or_unknown_server_fails() {
        let mut map = load_topology(include_bytes!("../../fixtures/four_networks.json")).unwrap();
        assert!(matches!(release_server(&mut map, &status("n2", "s2")), Err(ProtocolError::Catalog(CatalogError::NotBusy(_)))));
        assert!(matches!(
            release_server(&mut map, &status("n2", "s9")),
            Err(ProtocolError::Catalog(CatalogError::UnknownServer { .. }))
        ));
    }
}
