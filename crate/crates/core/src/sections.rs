//! Line-oriented `[SECTION]` text format shared by case and config files.
//!
//! `#` starts a comment, blank lines are ignored, and every other line is a
//! whitespace-separated record belonging to the most recent section header.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record<'a> {
    /// 1-based source line.
    pub line: usize,
    pub fields: Vec<&'a str>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section<'a> {
    pub name: &'a str,
    pub line: usize,
    pub records: Vec<Record<'a>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SectionError {
    #[error("line {line}: record outside of any section")]
    Orphan { line: usize },
    #[error("line {line}: malformed section header `{text}`")]
    BadHeader { line: usize, text: String },
}

pub fn split_sections(text: &str) -> Result<Vec<Section<'_>>, SectionError> {
    let mut out: Vec<Section<'_>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            let name = content
                .strip_prefix('[')
                .and_then(|s| s.strip_suffix(']'))
                .map(str::trim)
                .filter(|s| !s.is_empty() && !s.contains(char::is_whitespace))
                .ok_or_else(|| SectionError::BadHeader {
                    line,
                    text: content.to_string(),
                })?;
            out.push(Section {
                name,
                line,
                records: Vec::new(),
            });
            continue;
        }
        let section = out.last_mut().ok_or(SectionError::Orphan { line })?;
        section.records.push(Record {
            line,
            fields: content.split_whitespace().collect(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_with_comments() {
        let text = "# header\n[A]\n1 2 # trailing\n\n[B]\nx\n";
        let s = split_sections(text).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].name, "A");
        assert_eq!(s[0].records[0].fields, vec!["1", "2"]);
        assert_eq!(s[0].records[0].line, 3);
        assert_eq!(s[1].records[0].fields, vec!["x"]);
    }

    #[test]
    fn rejects_orphans_and_bad_headers() {
        assert_eq!(
            split_sections("1 2\n"),
            Err(SectionError::Orphan { line: 1 })
        );
        assert!(matches!(
            split_sections("[A B]\n"),
            Err(SectionError::BadHeader { .. })
        ));
        assert!(matches!(
            split_sections("[A\n"),
            Err(SectionError::BadHeader { .. })
        ));
    }
}
