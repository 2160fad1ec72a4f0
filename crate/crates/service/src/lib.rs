//! HTTP service, event-sourced store and operator CLI for the community
//! engagement platform.
//!
//! - [`store`]: checksummed append-only event log with snapshots.
//! - [`platform`]: engine state plus tokens, replayed from the store.
//! - [`http`]: the JSON API.
//! - [`translator`]: translation memory and the external translator client.
//! - [`archive`]: export bundles as tar archives or directories.
//! - [`config`]: TOML config with environment overrides.
//! - [`cli`]: the `cep` command.

pub mod archive;
pub mod cli;
pub mod config;
pub mod http;
pub mod platform;
pub mod store;
pub mod translator;
