//! Writes events through the platform, reopens the store from disk and
//! shows the rebuilt state has the same digest. Then appends a torn line
//! and shows recovery cutting it off.

use std::io::Write;

use cep_core::engine::{Command, Policy};
use cep_core::{FilterRule, LangTag, Timestamp};
use cep_service::platform::Platform;
use cep_service::store::LOG_FILE;

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let digest = {
        let (platform, _) = Platform::open(dir.path(), Policy::default(), 3).unwrap();
        platform
            .execute(Command::ImportBitext {
                src_lang: LangTag::En,
                src_lines: vec!["Good evening".into(), "How are you?".into()],
                tgt_lines: vec!["Akkam oolte".into(), "Akkam jirta?".into()],
                rules: FilterRule::default(),
                at: Timestamp(10),
            })
            .unwrap();
        for handle in ["Dawit", "Lensa", "Gutu"] {
            platform.register(handle, Timestamp(11)).unwrap();
        }
        println!("wrote {} events, digest {}", platform.last_seq(), platform.digest());
        platform.digest()
    };

    let (platform, recovery) = Platform::open(dir.path(), Policy::default(), 3).unwrap();
    println!("reopened: {recovery:?}");
    println!("same digest: {}", platform.digest() == digest);
    drop(platform);

    let mut log = std::fs::OpenOptions::new().append(true).open(dir.path().join(LOG_FILE)).unwrap();
    log.write_all(b"0badc0de {\"seq\":6,").unwrap();
    drop(log);
    let (platform, recovery) = Platform::open(dir.path(), Policy::default(), 3).unwrap();
    println!("after a torn write: {recovery:?}, same digest: {}", platform.digest() == digest);
}
