#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use axum::routing::post;
use axum::{Json, Router};
use cep_service::config::Config;
use cep_service::http::{self, AppState, Shared};
use cep_service::platform::Platform;
use cep_service::translator::ExternalTranslator;
use serde_json::{json, Value};

pub const ADMIN: &str = "admin-secret";

pub mod process;

/// JSON client for a running service.
#[derive(Clone)]
pub struct Api {
    pub base: String,
    pub client: reqwest::Client,
}

impl Api {
    pub fn new(base: String) -> Api {
        Api { base, client: reqwest::Client::new() }
    }
}

pub struct Server {
    pub api: Api,
    pub state: Shared,
}

impl std::ops::Deref for Server {
    type Target = Api;
    fn deref(&self) -> &Api {
        &self.api
    }
}

pub fn config(store: &Path) -> Config {
    Config {
        store: store.to_path_buf(),
        admin_token: Some(ADMIN.to_string()),
        ..Config::default()
    }
}

pub async fn start(config: Config) -> Server {
    let (platform, _) = Platform::open(&config.store, config.policy, config.snapshot_every).unwrap();
    let external = ExternalTranslator::new(&config.translator);
    let state = Arc::new(AppState { platform, external, config });
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    tokio::spawn(http::serve_on(listener, state.clone(), std::future::pending()));
    Server { api: Api::new(base), state }
}

/// A stand-in external translator that prefixes the text, or fails with
/// `status` when given.
pub async fn stub_translator(status: Option<u16>) -> String {
    let app = Router::new().route(
        "/mt",
        post(move |Json(body): Json<Value>| async move {
            match status {
                Some(code) => (axum::http::StatusCode::from_u16(code).unwrap(), Json(json!({}))),
                None => {
                    let text = body["text"].as_str().unwrap_or_default();
                    let dir = body["direction"].as_str().unwrap_or_default();
                    (axum::http::StatusCode::OK, Json(json!({ "translation": format!("[{dir}] {text}") })))
                }
            }
        }),
    );
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let url = format!("http://{}/mt", listener.local_addr().unwrap());
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    url
}

/// `n` English sentences and matching Oromo ones with equal token counts.
pub fn document_pair(n: usize) -> (String, String) {
    let mut en = Vec::new();
    let mut om = Vec::new();
    for i in 0..n {
        let len = 4 + (i * 7) % 9;
        let words: Vec<String> = (0..len).map(|k| format!("word{i}x{k}")).collect();
        let jechoota: Vec<String> = (0..len).map(|k| format!("jecha{i}y{k}")).collect();
        en.push(format!("Sentence {}.", words.join(" ")));
        om.push(format!("Himni {}.", jechoota.join(" ")));
    }
    (en.join(" "), om.join(" "))
}

impl Api {
    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub async fn post(&self, path: &str, token: Option<&str>, body: Value) -> (u16, Value) {
        let mut req = self.client.post(self.url(path)).json(&body);
        if let Some(t) = token {
            req = req.bearer_auth(t);
        }
        decode(req.send().await.unwrap()).await
    }

    pub async fn get(&self, path: &str, token: Option<&str>) -> (u16, Value) {
        let mut req = self.client.get(self.url(path));
        if let Some(t) = token {
            req = req.bearer_auth(t);
        }
        decode(req.send().await.unwrap()).await
    }

    pub async fn get_bytes(&self, path: &str, token: Option<&str>) -> (u16, Vec<u8>) {
        let mut req = self.client.get(self.url(path));
        if let Some(t) = token {
            req = req.bearer_auth(t);
        }
        let resp = req.send().await.unwrap();
        let status = resp.status().as_u16();
        (status, resp.bytes().await.unwrap().to_vec())
    }

    /// Stages and aligns a document pair of `n` sentences through the admin API.
    pub async fn seed_document(&self, n: usize) -> Value {
        let (src_doc, tgt_doc) = document_pair(n);
        let (status, staged) = self
            .post("/api/admin/documents", Some(ADMIN), json!({ "src_doc": src_doc, "tgt_doc": tgt_doc }))
            .await;
        assert_eq!(status, 202, "{staged}");
        let id = staged["document"].as_str().unwrap().to_string();
        let (status, report) = self.post(&format!("/api/admin/documents/{id}/align"), Some(ADMIN), json!({})).await;
        assert_eq!(status, 200, "{report}");
        report
    }

    pub async fn register(&self, handle: &str) -> (String, String) {
        let (status, body) = self.post("/api/contributors", None, json!({ "handle": handle })).await;
        assert_eq!(status, 201, "{body}");
        (body["id"].as_str().unwrap().to_string(), body["token"].as_str().unwrap().to_string())
    }
}

async fn decode(resp: reqwest::Response) -> (u16, Value) {
    let status = resp.status().as_u16();
    let text = resp.text().await.unwrap();
    let value = if text.is_empty() { Value::Null } else { serde_json::from_str(&text).unwrap_or(Value::String(text)) };
    (status, value)
}
