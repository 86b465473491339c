//! Byte transports for EDGAR requests: live HTTP and a local mirror.

use std::io::Read;
use std::path::PathBuf;
use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub body: Vec<u8>,
}

pub trait Transport: Send + Sync {
    /// Performs one GET. `Err` means the request never produced a status.
    fn get(&self, url: &str, user_agent: &str) -> Result<Response, String>;

    /// Remote transports are subject to the shared rate limit.
    fn is_remote(&self) -> bool {
        true
    }
}

const MAX_BODY_BYTES: u64 = 512 * 1024 * 1024;

pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build();
        HttpTransport { agent: config.into() }
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str, user_agent: &str) -> Result<Response, String> {
        let mut resp = self
            .agent
            .get(url)
            .header("User-Agent", user_agent)
            .header("Accept-Encoding", "identity")
            .call()
            .map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let mut body = Vec::new();
        resp.body_mut()
            .as_reader()
            .take(MAX_BODY_BYTES)
            .read_to_end(&mut body)
            .map_err(|e| e.to_string())?;
        Ok(Response { status, body })
    }
}

/// Serves `file://` URLs from the local filesystem; missing files are 404s.
#[derive(Debug, Default)]
pub struct FileTransport;

impl Transport for FileTransport {
    fn get(&self, url: &str, _user_agent: &str) -> Result<Response, String> {
        let path = url
            .strip_prefix("file://")
            .map(PathBuf::from)
            .ok_or_else(|| format!("not a file url: {url}"))?;
        match std::fs::read(&path) {
            Ok(body) => Ok(Response { status: 200, body }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Response {
                status: 404,
                body: Vec::new(),
            }),
            Err(e) => Err(format!("{}: {e}", path.display())),
        }
    }

    fn is_remote(&self) -> bool {
        false
    }
}
