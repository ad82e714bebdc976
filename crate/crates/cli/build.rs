use std::process::Command;

/// Exposes a `git describe`-style version as `DDI_VERSION`. Without tags the
/// crate version stands in for the tag; outside a checkout it is used alone.
fn main() {
    let pkg = std::env::var("CARGO_PKG_VERSION").unwrap_or_default();
    let describe = Command::new("git")
        .args(["describe", "--tags", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty());
    let version = match describe {
        Some(d) if d.starts_with('v') || d.contains("-g") => d,
        Some(hash) => format!("v{pkg}-g{hash}"),
        None => format!("v{pkg}"),
    };
    println!("cargo:rustc-env=DDI_VERSION={version}");
    println!("cargo:rerun-if-changed=../../.git/HEAD");
    println!("cargo:rerun-if-changed=../../.git/index");
}
