//! Starts the service in-process on a free port, stages and aligns a
//! document through the admin API, then plays one contributor's session
//! over HTTP.

use std::sync::Arc;

use cep_service::config::Config;
use cep_service::http::{serve_on, AppState};
use cep_service::platform::Platform;
use serde_json::{json, Value};

#[tokio::main]
async fn main() {
    let dir = tempfile::tempdir().unwrap();
    let config = Config { store: dir.path().to_path_buf(), admin_token: Some("letmein".into()), ..Config::default() };
    let (platform, _) = Platform::open(&config.store, config.policy, config.snapshot_every).unwrap();
    let state = Arc::new(AppState { platform, external: None, config });
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    tokio::spawn(serve_on(listener, state, std::future::pending()));
    println!("serving on {base}");

    let http = reqwest::Client::new();
    let call = |req: reqwest::RequestBuilder| async move {
        let resp = req.send().await.unwrap();
        let status = resp.status();
        let body: Value = resp.json().await.unwrap_or(Value::Null);
        (status, body)
    };

    let en = "Rain fell all night. The river rose. Children stayed home from school. By noon the sun was out again.";
    let om = "Halkan guutuu roobni roobe. Laggi guddate. Ijoolleen mana barumsaa hin deemne. Guyyaa walakkaa aduun deebitee baate.";
    let (_, staged) = call(http.post(format!("{base}/api/admin/documents")).bearer_auth("letmein").json(&json!({ "src_doc": en, "tgt_doc": om }))).await;
    let doc = staged["document"].as_str().unwrap();
    let (_, aligned) = call(http.post(format!("{base}/api/admin/documents/{doc}/align")).bearer_auth("letmein")).await;
    println!("aligned {doc}: {} links, {} pairs added", aligned["links"], aligned["added"]);

    let (_, me) = call(http.post(format!("{base}/api/contributors")).json(&json!({ "handle": "Sena" }))).await;
    let token = me["token"].as_str().unwrap().to_string();
    let (_, batch) = call(http.get(format!("{base}/api/batch?kind=translate")).bearer_auth(&token)).await;
    println!("translate batch: {} items", batch["items"].as_array().unwrap().len());
    let item = &batch["items"][0]["id"];
    let (status, body) = call(http.post(format!("{base}/api/translations")).bearer_auth(&token).json(&json!({ "item_id": item, "texts": ["Roobni halkan guutuu bu'e."] }))).await;
    println!("submit translation: {status} {body}");

    let (status, body) = call(http.get(format!("{base}/api/batch?kind=unknown")).bearer_auth(&token)).await;
    println!("bad kind: {status} {body}");

    let (_, board) = call(http.get(format!("{base}/api/leaderboard?limit=3"))).await;
    println!("leaderboard: {board}");
}
