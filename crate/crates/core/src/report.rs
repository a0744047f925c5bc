//! Plain-text experiment reports: one timestamp line, then a key-value header and
//! tabular sections that are byte-identical for identical inputs.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub title: String,
    header: Vec<(String, String)>,
    sections: Vec<(String, String)>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Report { title: title.into(), ..Default::default() }
    }

    pub fn field(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.header.push((key.into(), value.to_string()));
        self
    }

    pub fn section(&mut self, name: impl Into<String>, body: impl Into<String>) -> &mut Self {
        self.sections.push((name.into(), body.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Everything but the timestamp line.
    pub fn body(&self) -> String {
        let mut s = format!("# {}\n", self.title);
        for (k, v) in &self.header {
            let _ = writeln!(s, "{k}: {v}");
        }
        for (name, body) in &self.sections {
            let _ = write!(s, "\n[{name}]\n{body}");
            if !body.ends_with('\n') {
                s.push('\n');
            }
        }
        s
    }

    pub fn render(&self) -> String {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        format!("# generated-at-unix: {now}\n{}", self.body())
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

/// Hex SHA-256 of a canonical configuration text.
pub fn config_hash(canonical: &str) -> String {
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamp_only_on_first_line() {
        let mut r = Report::new("robin");
        r.field("gamma_sup", 0.5).section("samples", "x\ty\n1\t2");
        let out = r.render();
        let mut lines = out.lines();
        assert!(lines.next().unwrap().starts_with("# generated-at-unix: "));
        assert_eq!(out.split_once('\n').unwrap().1, r.body());
        assert!(r.body().contains("[samples]\nx\ty\n1\t2\n"));
        assert_eq!(r.get("gamma_sup"), Some("0.5"));
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(config_hash("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
