//! Line-oriented sectioned key/value files.
//!
//! ```text
//! # comment
//! [section]
//! key = value          # trailing comment
//! expr = "1 + x1*x2"   # quoted strings may contain '#'
//! ```

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "line {}, column {}: {}",
            self.line, self.column, self.message
        )
    }
}

impl std::error::Error for SyntaxError {}

/// A value with its 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Value {
    pub text: String,
    pub quoted: bool,
    pub line: usize,
    /// Column of the first character of `text` (inside the quotes, if any).
    pub column: usize,
}

impl Value {
    pub fn error(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    /// Error at an offset (in characters) into the value text.
    pub fn error_at(&self, offset: usize, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            line: self.line,
            column: self.column + offset,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub key_column: usize,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|e| e.key == key).map(|e| &e.value)
    }

    /// Entries whose key starts with `prefix.`, with the prefix stripped.
    pub fn prefixed<'a>(
        &'a self,
        prefix: &'a str,
    ) -> impl Iterator<Item = (&'a str, &'a Entry)> + 'a {
        self.entries.iter().filter_map(move |e| {
            e.key
                .strip_prefix(prefix)
                .and_then(|rest| rest.strip_prefix('.'))
                .map(|rest| (rest, e))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    pub sections: Vec<Section>,
}

impl Document {
    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn char_col(line: &str, byte: usize) -> usize {
    line[..byte].chars().count() + 1
}

pub fn parse(text: &str) -> Result<Document, SyntaxError> {
    let mut doc = Document::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw);
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = line.len() - line.trim_start().len();
        let err = |byte: usize, message: String| SyntaxError {
            line: line_no,
            column: char_col(raw, byte),
            message,
        };
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(err(indent + trimmed.len(), "expected `]`".into()));
            };
            let name = name.trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(err(indent + 1, format!("invalid section name `{name}`")));
            }
            if doc.section(name).is_some() {
                return Err(err(indent + 1, format!("duplicate section [{name}]")));
            }
            doc.sections.push(Section {
                name: name.to_string(),
                line: line_no,
                entries: Vec::new(),
            });
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(err(indent, "expected `key = value` or `[section]`".into()));
        };
        let key = line[..eq].trim();
        if key.is_empty()
            || !key
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
        {
            return Err(err(indent, format!("invalid key `{key}`")));
        }
        let Some(section) = doc.sections.last_mut() else {
            return Err(err(
                indent,
                format!("key `{key}` appears before any section"),
            ));
        };
        if section.get(key).is_some() {
            return Err(err(
                indent,
                format!("duplicate key `{key}` in [{}]", section.name),
            ));
        }
        let after = &line[eq + 1..];
        let lead = after.len() - after.trim_start().len();
        let vstart = eq + 1 + lead;
        let vtext = after.trim();
        let value = if let Some(inner) = vtext.strip_prefix('"') {
            let Some(close) = inner.find('"') else {
                return Err(err(vstart, "unterminated string".into()));
            };
            if !inner[close + 1..].trim().is_empty() {
                return Err(err(
                    vstart + 1 + close + 1,
                    "unexpected text after string".into(),
                ));
            }
            Value {
                text: inner[..close].to_string(),
                quoted: true,
                line: line_no,
                column: char_col(raw, vstart + 1),
            }
        } else {
            if vtext.contains('"') {
                return Err(err(vstart, "stray quote in unquoted value".into()));
            }
            Value {
                text: vtext.to_string(),
                quoted: false,
                line: line_no,
                column: char_col(raw, vstart),
            }
        };
        section.entries.push(Entry {
            key: key.to_string(),
            key_column: indent + 1,
            value,
        });
    }
    Ok(doc)
}
