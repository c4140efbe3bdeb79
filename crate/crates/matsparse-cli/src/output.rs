//! Artifact writing. Every output embeds the resolved run configuration and
//! the library version, so a file can be reproduced exactly from its own
//! header. UTF-8, LF line endings; CSV floats carry 17 significant digits.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
pub struct RunConfig<A: Serialize> {
    pub command: &'static str,
    pub args: A,
}

#[derive(Serialize)]
struct JsonArtifact<'a, C: Serialize, P: Serialize> {
    version: &'a str,
    config: &'a C,
    #[serde(flatten)]
    payload: &'a P,
}

pub fn json_artifact<C: Serialize, P: Serialize>(config: &C, payload: &P) -> String {
    let artifact = JsonArtifact {
        version: VERSION,
        config,
        payload,
    };
    let mut s = serde_json::to_string_pretty(&artifact).expect("serializable artifact");
    s.push('\n');
    s
}

/// CSV artifact: `#`-prefixed header lines carrying the version and the
/// compact config JSON, then the plain CSV body.
pub fn csv_artifact<C: Serialize>(config: &C, body: &str) -> String {
    let cfg = serde_json::to_string(config).expect("serializable config");
    format!("# matsparse {VERSION}\n# config {cfg}\n{body}")
}

/// 17 significant digits: parses back to the identical f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn emit(out: Option<&Path>, content: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, content),
        None => std::io::stdout().write_all(content.as_bytes()),
    }
}
