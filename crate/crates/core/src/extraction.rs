//! Pattern-based slot extraction from semi-structured catalog pages.
//!
//! Each [`ExtractionRule`] names a field and two literal delimiters. A filler
//! is the text strictly between an occurrence of the pre-filler pattern and
//! the nearest following post-filler pattern. Rules never use wildcards, so
//! extraction is a plain left-to-right substring scan.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::slot::Field;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractionRule {
    pub field: Field,
    pub pre: String,
    pub post: String,
    pub multi: bool,
}

impl ExtractionRule {
    pub fn new(field: Field, pre: impl Into<String>, post: impl Into<String>) -> Result<Self> {
        let (pre, post) = (pre.into(), post.into());
        if pre.is_empty() || post.is_empty() {
            return Err(Error::InvalidArgument("pre and post patterns must be non-empty".into()));
        }
        Ok(Self { field, pre, post, multi: field.default_multi() })
    }

    pub fn multi(mut self, multi: bool) -> Self {
        self.multi = multi;
        self
    }

    /// Raw (unnormalized) filler spans as byte ranges `(pre_start, filler, post_end)`.
    fn spans<'d>(&self, doc: &'d str) -> Vec<(usize, &'d str, usize)> {
        let mut out = Vec::new();
        let mut cursor = 0;
        while let Some(found) = doc[cursor..].find(&self.pre) {
            let start = cursor + found;
            let filler_start = start + self.pre.len();
            let Some(len) = doc[filler_start..].find(&self.post) else {
                break;
            };
            let end = filler_start + len + self.post.len();
            out.push((start, &doc[filler_start..filler_start + len], end));
            if !self.multi {
                break;
            }
            cursor = end;
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExtractionRuleSet {
    pub rules: Vec<ExtractionRule>,
}

impl ExtractionRuleSet {
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn load(path: &Path) -> Result<Self> {
        parse_rule_config(&fs::read_to_string(path)?)
    }
}

/// Extracted slot fillers for one title.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawBookRecord {
    pub id: String,
    pub fillers: BTreeMap<Field, Vec<String>>,
}

impl RawBookRecord {
    pub fn new(id: impl Into<String>) -> Self {
        Self { id: id.into(), fillers: BTreeMap::new() }
    }

    pub fn with(mut self, field: Field, values: &[&str]) -> Self {
        self.fillers
            .entry(field)
            .or_default()
            .extend(values.iter().map(|v| v.to_string()));
        self
    }

    pub fn get(&self, field: Field) -> &[String] {
        self.fillers.get(&field).map(Vec::as_slice).unwrap_or(&[])
    }

    /// A record has adequate content if it has at least one synopsis,
    /// review or customer comment.
    pub fn is_adequate(&self) -> bool {
        [Field::Synopses, Field::Reviews, Field::Comments]
            .iter()
            .any(|f| !self.get(*f).is_empty())
    }
}

/// Parses the line-oriented rule config:
///
/// ```text
/// # comment
/// title: pre="<b>Title:</b> " post="<br>"
/// comments: pre="Comment: " post=" End" multi
/// ```
///
/// A trailing `multi` or `single` overrides the field's default matching mode.
pub fn parse_rule_config(text: &str) -> Result<ExtractionRuleSet> {
    let mut rules = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        rules.push(parse_rule_line(line, line_no)?);
    }
    Ok(ExtractionRuleSet { rules })
}

fn parse_rule_line(line: &str, line_no: usize) -> Result<ExtractionRule> {
    let syntax = |message: &str| Error::RuleSyntax { line: line_no, message: message.to_string() };

    let (name, rest) = line.split_once(':').ok_or_else(|| syntax("expected `<slot>:`"))?;
    let name = name.trim();
    let field: Field = name
        .parse()
        .map_err(|_| Error::UnknownSlot { line: line_no, name: name.to_string() })?;

    let mut pre = None;
    let mut post = None;
    let mut multi = None;
    let mut cursor = Cursor { chars: rest.chars().collect(), pos: 0 };

    loop {
        cursor.skip_ws();
        if cursor.done() {
            break;
        }
        let word = cursor.word();
        match word.as_str() {
            "pre" | "post" => {
                if !cursor.eat('=') {
                    return Err(syntax(&format!("expected `=` after `{word}`")));
                }
                let value = cursor.quoted().map_err(|m| syntax(&m))?;
                if value.is_empty() {
                    return Err(syntax(&format!("empty `{word}` pattern")));
                }
                let target = if word == "pre" { &mut pre } else { &mut post };
                if target.replace(value).is_some() {
                    return Err(syntax(&format!("duplicate `{word}`")));
                }
            }
            "multi" => multi = Some(true),
            "single" => multi = Some(false),
            "" => return Err(syntax(&format!("unexpected character `{}`", cursor.peek().unwrap_or(' ')))),
            other => return Err(syntax(&format!("unexpected `{other}`"))),
        }
    }

    let pre = pre.ok_or_else(|| syntax("missing `pre`"))?;
    let post = post.ok_or_else(|| syntax("missing `post`"))?;
    Ok(ExtractionRule { field, pre, post, multi: multi.unwrap_or_else(|| field.default_multi()) })
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
}

impl Cursor {
    fn done(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn word(&mut self) -> String {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn quoted(&mut self) -> std::result::Result<String, String> {
        if !self.eat('"') {
            return Err("expected opening quote".into());
        }
        let mut out = String::new();
        loop {
            match self.peek() {
                None => return Err("unterminated string".into()),
                Some('"') => {
                    self.pos += 1;
                    return Ok(out);
                }
                Some('\\') => {
                    self.pos += 1;
                    match self.peek() {
                        Some(c @ ('"' | '\\')) => out.push(c),
                        Some(c) => return Err(format!("unknown escape `\\{c}`")),
                        None => return Err("unterminated escape".into()),
                    }
                    self.pos += 1;
                }
                Some(c) => {
                    out.push(c);
                    self.pos += 1;
                }
            }
        }
    }
}

/// Strips markup tags, collapses runs of whitespace to one space and trims.
pub fn normalize_filler(raw: &str) -> String {
    let mut stripped = String::with_capacity(raw.len());
    let mut rest = raw;
    while let Some(open) = rest.find('<') {
        match rest[open..].find('>') {
            Some(close) => {
                stripped.push_str(&rest[..open]);
                stripped.push(' ');
                rest = &rest[open + close + 1..];
            }
            None => break,
        }
    }
    stripped.push_str(rest);
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Applies every rule to `doc`. Extraction is total: missing patterns simply
/// produce no fillers, and fillers that normalize to nothing are dropped.
pub fn extract_record(doc: &str, id: &str, rules: &ExtractionRuleSet) -> RawBookRecord {
    let mut record = RawBookRecord::new(id);
    for rule in &rules.rules {
        let values = rule
            .spans(doc)
            .into_iter()
            .map(|(_, filler, _)| normalize_filler(filler))
            .filter(|f| !f.is_empty());
        record.fillers.entry(rule.field).or_default().extend(values);
    }
    record.fillers.retain(|_, v| !v.is_empty());
    record
}

pub fn filter_adequate(records: Vec<RawBookRecord>) -> Vec<RawBookRecord> {
    records.into_iter().filter(RawBookRecord::is_adequate).collect()
}

/// A document to extract from, keyed by record id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
}

const SEPARATOR: &str = "%%%";

/// Loads documents from a directory (one file per document, id = file stem,
/// sorted by file name) or from a single file split on `%%%<id>` lines.
pub fn load_documents(path: &Path) -> Result<Vec<Document>> {
    if path.is_dir() {
        let mut entries = fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<Vec<_>>>()?;
        entries.retain(|p| p.is_file());
        entries.sort();
        entries
            .into_iter()
            .map(|p| {
                let id = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                Ok(Document { id, text: fs::read_to_string(&p)? })
            })
            .collect()
    } else {
        Ok(split_concatenated(&fs::read_to_string(path)?))
    }
}

/// Splits a concatenated corpus on `%%%<id>` lines. Text before the first
/// separator is ignored.
pub fn split_concatenated(text: &str) -> Vec<Document> {
    let mut docs: Vec<Document> = Vec::new();
    for line in text.split_inclusive('\n') {
        let bare = line.trim_end_matches(['\n', '\r']);
        if let Some(id) = bare.strip_prefix(SEPARATOR) {
            docs.push(Document { id: id.trim().to_string(), text: String::new() });
        } else if let Some(doc) = docs.last_mut() {
            doc.text.push_str(line);
        }
    }
    docs
}

pub fn write_records<W: Write>(mut out: W, records: &[RawBookRecord]) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_records<R: BufRead>(input: R) -> Result<Vec<RawBookRecord>> {
    let mut records = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|source| Error::Json { line: idx + 1, source })?);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn title_rules() -> ExtractionRuleSet {
        parse_rule_config(r#"title: pre="<b>Title:</b> " post="<br>""#).unwrap()
    }

    #[test]
    fn parses_single_title_rule() {
        let rules = title_rules();
        assert_eq!(rules.len(), 1);
        let rule = &rules.rules[0];
        assert_eq!(rule.field, Field::Title);
        assert_eq!(rule.pre, "<b>Title:</b> ");
        assert_eq!(rule.post, "<br>");
        assert!(!rule.multi);
    }

    #[test]
    fn empty_config_has_no_rules() {
        assert!(parse_rule_config("").unwrap().is_empty());
        assert!(parse_rule_config("# only a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn rejects_unknown_slot() {
        let err = parse_rule_config(r#"bogus_slot: pre="x" post="y""#).unwrap_err();
        assert!(err.to_string().contains("bogus_slot"), "{err}");
        assert!(matches!(err, Error::UnknownSlot { line: 1, .. }));
    }

    #[test]
    fn rejects_empty_pattern_with_line_number() {
        let err = parse_rule_config("# c\ntitle: pre=\"\" post=\"y\"").unwrap_err();
        assert!(matches!(err, Error::RuleSyntax { line: 2, .. }), "{err}");
    }

    #[test]
    fn syntax_errors() {
        for bad in [
            "title pre=\"x\" post=\"y\"",
            "title: pre=\"x\"",
            "title: pre=\"x post=\"y\"",
            "title: pre=\"x\" post=\"y\" sometimes",
            "title: pre=\"\\n\" post=\"y\"",
            "title: pre=\"a\" pre=\"b\" post=\"y\"",
        ] {
            assert!(matches!(parse_rule_config(bad), Err(Error::RuleSyntax { .. })), "{bad}");
        }
    }

    #[test]
    fn escapes_and_flags() {
        let rules = parse_rule_config(
            "comments: pre=\"say \\\"hi\\\"\" post=\"\\\\\" single\ntitle: pre=\"a\" post=\"b\" multi",
        )
        .unwrap();
        assert_eq!(rules.rules[0].pre, "say \"hi\"");
        assert_eq!(rules.rules[0].post, "\\");
        assert!(!rules.rules[0].multi);
        assert!(rules.rules[1].multi);
    }

    #[test]
    fn extracts_title() {
        let record = extract_record("<b>Title:</b> Dune<br>", "d1", &title_rules());
        assert_eq!(record.get(Field::Title), ["Dune"]);
    }

    #[test]
    fn multi_collects_in_order() {
        let rules = parse_rule_config(r#"comments: pre="Comment: " post=" End" multi"#).unwrap();
        let doc = "x Comment: great <i>book</i>\n  really End y Comment: dull End";
        let record = extract_record(doc, "b", &rules);
        assert_eq!(record.get(Field::Comments), ["great book really", "dull"]);
    }

    #[test]
    fn absent_pattern_yields_nothing() {
        let record = extract_record("no title here", "x", &title_rules());
        assert!(record.get(Field::Title).is_empty());
        let unterminated = extract_record("<b>Title:</b> Dune", "x", &title_rules());
        assert!(unterminated.get(Field::Title).is_empty());
    }

    #[test]
    fn single_match_takes_first() {
        let record = extract_record("<b>Title:</b> A<br><b>Title:</b> B<br>", "x", &title_rules());
        assert_eq!(record.get(Field::Title), ["A"]);
    }

    #[test]
    fn adequacy_filter() {
        let synopsis = RawBookRecord::new("a").with(Field::Synopses, &["desert planet"]);
        let bare = RawBookRecord::new("b").with(Field::Title, &["Dune"]).with(Field::Authors, &["F H"]);
        let kept = filter_adequate(vec![synopsis.clone(), bare]);
        assert_eq!(kept, vec![synopsis]);
        assert!(filter_adequate(Vec::new()).is_empty());
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_filler("  a\t\n b<br/>c <p>d</p> "), "a b c d");
        assert_eq!(normalize_filler("5 < 6"), "5 < 6");
    }

    #[test]
    fn concatenated_corpus() {
        let docs = split_concatenated("junk\n%%%one\nfirst\n%%%two\nsecond\nmore\n");
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0], Document { id: "one".into(), text: "first\n".into() });
        assert_eq!(docs[1].text, "second\nmore\n");
    }

    #[test]
    fn records_round_trip() {
        let records = vec![RawBookRecord::new("a")
            .with(Field::Title, &["Dune"])
            .with(Field::Comments, &["x", "y"])];
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        assert_eq!(read_records(buf.as_slice()).unwrap(), records);
    }

    fn arb_doc() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                Just("[".to_string()),
                Just("]".to_string()),
                Just(" ".to_string()),
                "[a-c]{1,3}",
            ],
            0..40,
        )
        .prop_map(|parts| parts.concat())
    }

    proptest! {
        #[test]
        fn multi_spans_are_disjoint_and_bounded(doc in arb_doc()) {
            let rule = ExtractionRule::new(Field::Comments, "[", "]").unwrap().multi(true);
            let spans = rule.spans(&doc);
            for window in spans.windows(2) {
                prop_assert!(window[0].2 <= window[1].0);
            }
            for (start, filler, end) in &spans {
                let raw = format!("[{filler}]");
                prop_assert_eq!(&doc[*start..*end], raw.as_str());
            }
            let rules = ExtractionRuleSet { rules: vec![rule] };
            let a = extract_record(&doc, "x", &rules);
            prop_assert_eq!(&a, &extract_record(&doc, "x", &rules));
            for filler in a.get(Field::Comments) {
                prop_assert!(spans.iter().any(|(_, raw, _)| normalize_filler(raw) == *filler));
            }
        }

        #[test]
        fn adequacy_filter_is_idempotent(flags in proptest::collection::vec(0u8..8, 0..20)) {
            let records: Vec<_> = flags
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let mut r = RawBookRecord::new(i.to_string()).with(Field::Title, &["t"]);
                    if f & 1 != 0 { r = r.with(Field::Synopses, &["s"]); }
                    if f & 2 != 0 { r = r.with(Field::Reviews, &["r"]); }
                    if f & 4 != 0 { r = r.with(Field::Comments, &["c"]); }
                    r
                })
                .collect();
            let once = filter_adequate(records);
            prop_assert_eq!(filter_adequate(once.clone()), once);
        }
    }
}
