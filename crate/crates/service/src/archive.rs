//! Export bundles as tar archives or plain directories.

use std::io::{self, Read};
use std::path::Path;

use cep_core::bitext::ExportBundle;

/// Deterministic tar: fixed mode, owner and mtime, entries in bundle order.
pub fn to_tar(bundle: &ExportBundle) -> Vec<u8> {
    let mut builder = tar::Builder::new(Vec::new());
    for (name, content) in bundle.entries() {
        let mut header = tar::Header::new_ustar();
        header.set_size(content.len() as u64);
        header.set_mode(0o644);
        header.set_mtime(0);
        header.set_uid(0);
        header.set_gid(0);
        header.set_entry_type(tar::EntryType::Regular);
        builder
            .append_data(&mut header, &name, content.as_bytes())
            .expect("writing to memory cannot fail");
    }
    builder.into_inner().expect("writing to memory cannot fail")
}

/// Reads back `(name, content)` pairs from a tar produced by [`to_tar`].
pub fn read_tar(bytes: &[u8]) -> io::Result<Vec<(String, String)>> {
    let mut archive = tar::Archive::new(bytes);
    let mut out = Vec::new();
    for entry in archive.entries()? {
        let mut entry = entry?;
        let name = entry.path()?.to_string_lossy().into_owned();
        let mut content = String::new();
        entry.read_to_string(&mut content)?;
        out.push((name, content));
    }
    Ok(out)
}

pub fn write_dir(bundle: &ExportBundle, dir: &Path) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, content) in bundle.entries() {
        std::fs::write(dir.join(name), content)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use cep_core::bitext::{export_pairs, SplitRatios, StatusFilter};

    #[test]
    fn tar_round_trip_and_determinism() {
        let bundle = export_pairs([], StatusFilter::Verified, 1, SplitRatios::default()).unwrap();
        let a = to_tar(&bundle);
        assert_eq!(a, to_tar(&bundle));
        let entries = read_tar(&a).unwrap();
        assert_eq!(entries, bundle.entries());
        assert_eq!(entries.len(), 7);
    }
}
