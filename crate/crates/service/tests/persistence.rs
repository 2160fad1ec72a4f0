mod common;

use std::io::Write;

use cep_service::platform::Platform;
use cep_service::store::LOG_FILE;
use common::process::{random_traffic, Daemon};

#[tokio::test]
async fn kill_and_restart_reproduces_the_digest() {
    let dir = tempfile::tempdir().unwrap();
    let daemon = Daemon::spawn(dir.path()).await;
    let ok = random_traffic(&daemon.api, 5, 150).await;
    assert!(ok > 100, "only {ok} operations succeeded");
    let before = daemon.digest().await;
    daemon.kill();

    let daemon = Daemon::spawn(dir.path()).await;
    assert_eq!(daemon.digest().await, before);
    random_traffic(&daemon.api, 6, 30).await;
    let after = daemon.digest().await;
    daemon.kill();

    let (platform, recovery) = Platform::open(dir.path(), Default::default(), 0).unwrap();
    assert_eq!(recovery.truncated_at, None);
    assert_eq!((platform.last_seq(), platform.digest()), after);
}

#[tokio::test]
async fn torn_tail_is_dropped_on_restart() {
    let dir = tempfile::tempdir().unwrap();
    let daemon = Daemon::spawn(dir.path()).await;
    random_traffic(&daemon.api, 9, 40).await;
    let before = daemon.digest().await;
    daemon.kill();

    let mut log = std::fs::OpenOptions::new().append(true).open(dir.path().join(LOG_FILE)).unwrap();
    log.write_all(b"deadbeef {\"seq\":99999,\"event\":").unwrap();
    drop(log);

    let daemon = Daemon::spawn(dir.path()).await;
    assert_eq!(daemon.digest().await, before);
}
