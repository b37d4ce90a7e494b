//! CSV output with a `#`-prefixed metadata block.

use std::io::Write;
use std::process::Command;

use serde::Serialize;

use crate::error::Result;

/// `git describe --always --dirty` of the working directory, or the crate
/// version when git is unavailable.
pub fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| format!("v{}", env!("CARGO_PKG_VERSION")))
}

/// Writes `# config: <json>`, `# version: <describe>`, any extra
/// `# key: value` lines, then a header row and one row per record.
pub fn write_csv<W: Write, R: Serialize>(
    mut out: W,
    config: &serde_json::Value,
    extra: &[(&str, String)],
    rows: &[R],
) -> Result<()> {
    writeln!(out, "# config: {config}")?;
    writeln!(out, "# version: {}", git_describe())?;
    for (k, v) in extra {
        writeln!(out, "# {k}: {v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(std::io::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: f64,
        filter: String,
    }

    #[test]
    fn metadata_then_table() {
        let mut buf = Vec::new();
        let rows = [Row { a: 0.5, filter: "[1,1]".into() }];
        write_csv(&mut buf, &serde_json::json!({"p": 1}), &[("median_db", "0.3".into())], &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], r#"# config: {"p":1}"#);
        assert!(lines[1].starts_with("# version: "));
        assert_eq!(lines[2], "# median_db: 0.3");
        assert_eq!(lines[3], "a,filter");
        assert_eq!(lines[4], "0.5,\"[1,1]\"");
    }
}
