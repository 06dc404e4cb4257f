//! Shared harness: a demo workspace and a live server on an ephemeral port.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use preme_core::pipeline::{self, Workspace};
use preme_server::api::{router, AppState};
use serde_json::Value;

/// Runs the demo once per test binary and returns its workspace.
pub fn demo_workspace() -> &'static Path {
    static DIR: OnceLock<(tempfile::TempDir, PathBuf)> = OnceLock::new();
    &DIR.get_or_init(|| {
        let dir = tempfile::tempdir().expect("tempdir");
        let root = dir.path().join("ws");
        pipeline::demo(&root).expect("demo runs");
        (dir, root)
    })
    .1
}

/// Starts the API over `root` on a background thread and returns its base URL.
pub fn spawn_server(root: &Path) -> String {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").expect("bind");
    listener.set_nonblocking(true).expect("nonblocking");
    let addr = listener.local_addr().expect("addr");
    let state = AppState::new(Workspace::new(root));
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_current_thread()
            .enable_all()
            .build()
            .expect("runtime");
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).expect("listener");
            axum::serve(listener, router(state)).await.expect("serve");
        });
    });
    format!("http://{addr}")
}

/// A small JSON client that reports every status instead of erroring.
pub struct Client {
    agent: ureq::Agent,
    base: String,
}

impl Client {
    pub fn new(base: String) -> Self {
        let agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Client { agent, base }
    }

    pub fn get(&self, path: &str) -> (u16, Value) {
        let mut resp = self.agent.get(format!("{}{path}", self.base)).call().expect("request");
        let status = resp.status().as_u16();
        (status, resp.body_mut().read_json().expect("json body"))
    }

    pub fn post(&self, path: &str, body: &str) -> (u16, Value) {
        let mut resp = self
            .agent
            .post(format!("{}{path}", self.base))
            .content_type("application/json")
            .send(body)
            .expect("request");
        let status = resp.status().as_u16();
        (status, resp.body_mut().read_json().expect("json body"))
    }

    pub fn post_json(&self, path: &str, body: &Value) -> (u16, Value) {
        self.post(path, &body.to_string())
    }
}
