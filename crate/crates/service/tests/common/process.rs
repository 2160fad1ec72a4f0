//! Runs the real `cep serve` binary and drives it with random traffic.

use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::{document_pair, Api, ADMIN};

pub struct Daemon {
    child: Child,
    pub api: Api,
}

fn free_port() -> u16 {
    std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

impl Daemon {
    pub async fn spawn(store: &Path) -> Daemon {
        let port = free_port();
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_cep"));
        for (k, _) in std::env::vars() {
            if k.starts_with("CEP_") {
                cmd.env_remove(k);
            }
        }
        let child = cmd
            .env("CEP_ADMIN_TOKEN", ADMIN)
            .arg("--store")
            .arg(store)
            .arg("serve")
            .arg("--listen")
            .arg(format!("127.0.0.1:{port}"))
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .expect("cep binary runs");
        let daemon = Daemon { child, api: Api::new(format!("http://127.0.0.1:{port}")) };
        let deadline = Instant::now() + Duration::from_secs(20);
        while daemon.api.client.get(daemon.api.url("/api/leaderboard")).send().await.is_err() {
            assert!(Instant::now() < deadline, "server did not come up");
            tokio::time::sleep(Duration::from_millis(20)).await;
        }
        daemon
    }

    /// SIGKILL: no shutdown hook runs.
    pub fn kill(mut self) {
        self.child.kill().unwrap();
        self.child.wait().unwrap();
    }

    pub async fn digest(&self) -> (u64, String) {
        let (status, state) = self.api.get("/api/admin/state", Some(ADMIN)).await;
        assert_eq!(status, 200, "{state}");
        (state["seq"].as_u64().unwrap(), state["digest"].as_str().unwrap().to_string())
    }
}

impl Drop for Daemon {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Issues `ops` random API calls (registrations, document uploads,
/// batches, translations, verifications, skips). Returns how many
/// succeeded.
pub async fn random_traffic(api: &Api, seed: u64, ops: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tokens: Vec<String> = Vec::new();
    let mut open: Vec<(usize, String, String)> = Vec::new();
    let mut ok = 0;
    for op in 0..ops {
        let choice = if tokens.is_empty() { 0 } else { rng.random_range(0..10) };
        let (status, body) = match choice {
            0 => api.post("/api/contributors", None, json!({ "handle": format!("user{seed}x{op}") })).await,
            1 => {
                let n = rng.random_range(2..7);
                let (mut src_doc, tgt_doc) = document_pair(n);
                src_doc.push_str(&format!(" Marker {seed} {op}."));
                let (status, body) = api.post("/api/admin/documents", Some(ADMIN), json!({ "src_doc": src_doc, "tgt_doc": tgt_doc })).await;
                if status == 202 {
                    let id = body["document"].as_str().unwrap().to_string();
                    api.post(&format!("/api/admin/documents/{id}/align"), Some(ADMIN), json!({})).await
                } else {
                    (status, body)
                }
            }
            2 | 3 => {
                let who = rng.random_range(0..tokens.len());
                let kind = if choice == 2 { "translate" } else { "verify" };
                let (status, body) = api.get(&format!("/api/batch?kind={kind}"), Some(&tokens[who])).await;
                if status == 200 {
                    for item in body["items"].as_array().unwrap() {
                        open.push((who, item["id"].as_str().unwrap().to_string(), kind.to_string()));
                    }
                }
                (status, body)
            }
            _ if open.is_empty() => api.get("/api/leaderboard?limit=3", None).await,
            4 => {
                let (who, item, _) = open.swap_remove(rng.random_range(0..open.len()));
                api.post("/api/skips", Some(&tokens[who]), json!({ "item_id": item })).await
            }
            _ => {
                let (who, item, kind) = open.swap_remove(rng.random_range(0..open.len()));
                if kind == "translate" {
                    let texts: Vec<String> = (0..rng.random_range(1..3)).map(|k| format!("hiika {seed} {op} {k}")).collect();
                    api.post("/api/translations", Some(&tokens[who]), json!({ "item_id": item, "texts": texts })).await
                } else {
                    let mut body = json!({ "item_id": item, "rating": rng.random_range(1..=5) });
                    if rng.random_bool(0.2) {
                        body["alternative"] = Value::String(format!("filannoo {seed} {op}"));
                    }
                    api.post("/api/verifications", Some(&tokens[who]), body).await
                }
            }
        };
        if choice == 0 && status == 201 {
            tokens.push(body["token"].as_str().unwrap().to_string());
        }
        if status < 300 {
            ok += 1;
        }
    }
    ok
}
