//! OAI-PMH `ListRecords` pages in the `arXiv` metadata format.

use chrono::NaiveDate;
use quick_xml::escape::resolve_predefined_entity;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

/// One `<arXiv>` metadata block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArxivEntry {
    pub id: String,
    pub created: NaiveDate,
    pub title: String,
    pub abstract_text: String,
    pub authors: Vec<String>,
    /// Space-separated categories; the first is the primary one.
    pub categories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OaiError {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OaiPage {
    /// Parsed entries; a record that lacks required metadata becomes an `Err` with the reason.
    pub records: Vec<Result<ArxivEntry, String>>,
    pub deleted: usize,
    /// Present and non-empty when more pages follow.
    pub resumption_token: Option<String>,
    pub error: Option<OaiError>,
}

#[derive(Default)]
struct PendingRecord {
    deleted: bool,
    header_id: Option<String>,
    id: Option<String>,
    created: Option<String>,
    title: Option<String>,
    abstract_text: Option<String>,
    categories: Option<String>,
    authors: Vec<String>,
}

impl PendingRecord {
    fn finish(self) -> Result<ArxivEntry, String> {
        let label = self.id.clone().or(self.header_id.clone()).unwrap_or_else(|| "<unknown>".into());
        let id = self.id.filter(|s| !s.is_empty()).ok_or_else(|| format!("{label}: missing arXiv id"))?;
        let created = self.created.ok_or_else(|| format!("{label}: missing created date"))?;
        let created =
            NaiveDate::parse_from_str(&created, "%Y-%m-%d").map_err(|_| format!("{label}: malformed created date `{created}`"))?;
        Ok(ArxivEntry {
            id,
            created,
            title: self.title.unwrap_or_default(),
            abstract_text: self.abstract_text.unwrap_or_default(),
            authors: self.authors,
            categories: self.categories.unwrap_or_default().split_whitespace().map(String::from).collect(),
        })
    }
}

#[derive(Default)]
struct PendingAuthor {
    keyname: String,
    forenames: String,
    suffix: String,
}

impl PendingAuthor {
    fn name(&self) -> String {
        [self.forenames.as_str(), self.keyname.as_str(), self.suffix.as_str()]
            .iter()
            .filter(|s| !s.is_empty())
            .copied()
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn attr(e: &BytesStart<'_>, name: &[u8]) -> Option<String> {
    e.attributes().flatten().find(|a| a.key.local_name().as_ref() == name).and_then(|a| a.unescape_value().ok().map(|v| v.into_owned()))
}

/// Parses one response page. Errors mean the document itself is not well-formed XML.
pub fn parse_page(body: &[u8]) -> Result<OaiPage, String> {
    let text = std::str::from_utf8(body).map_err(|e| format!("response is not UTF-8: {e}"))?;
    let mut reader = Reader::from_str(text);
    reader.config_mut().check_end_names = true;

    let mut page = OaiPage::default();
    let mut path: Vec<String> = Vec::new();
    let mut buf = String::new();
    let mut record: Option<PendingRecord> = None;
    let mut author: Option<PendingAuthor> = None;
    let mut error_code: Option<String> = None;
    let mut saw_root = false;

    loop {
        let event = reader.read_event().map_err(|e| format!("XML error at byte {}: {e}", reader.error_position()))?;
        match event {
            Event::Start(e) => {
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                saw_root = true;
                match name.as_str() {
                    "record" => record = Some(PendingRecord::default()),
                    "header" => {
                        if let (Some(r), Some("deleted")) = (record.as_mut(), attr(&e, b"status").as_deref()) {
                            r.deleted = true;
                        }
                    }
                    "author" => author = Some(PendingAuthor::default()),
                    "error" => error_code = Some(attr(&e, b"code").unwrap_or_default()),
                    _ => {}
                }
                path.push(name);
                buf.clear();
            }
            Event::Empty(e) => {
                saw_root = true;
                match e.local_name().as_ref() {
                    b"resumptionToken" => page.resumption_token = None,
                    b"error" => page.error = Some(OaiError { code: attr(&e, b"code").unwrap_or_default(), message: String::new() }),
                    _ => {}
                }
            }
            Event::Text(t) => buf.push_str(&t.xml_content().map_err(|e| e.to_string())?),
            Event::CData(t) => buf.push_str(&t.decode().map_err(|e| e.to_string())?),
            Event::GeneralRef(r) => {
                if let Some(c) = r.resolve_char_ref().map_err(|e| e.to_string())? {
                    buf.push(c);
                } else {
                    let name = r.decode().map_err(|e| e.to_string())?;
                    let resolved = resolve_predefined_entity(&name).ok_or_else(|| format!("unknown entity &{name};"))?;
                    buf.push_str(resolved);
                }
            }
            Event::End(_) => {
                let name = path.pop().unwrap_or_default();
                let parent = path.last().map(String::as_str).unwrap_or("");
                let value = std::mem::take(&mut buf);
                match (parent, name.as_str()) {
                    (_, "record") => {
                        if let Some(r) = record.take() {
                            if r.deleted {
                                page.deleted += 1;
                            } else {
                                page.records.push(r.finish());
                            }
                        }
                    }
                    ("header", "identifier") => {
                        if let Some(r) = record.as_mut() {
                            r.header_id = Some(value.trim().to_string());
                        }
                    }
                    ("arXiv", field) => {
                        if let Some(r) = record.as_mut() {
                            match field {
                                "id" => r.id = Some(value.trim().to_string()),
                                "created" => r.created = Some(value.trim().to_string()),
                                "title" => r.title = Some(collapse_whitespace(&value)),
                                "abstract" => r.abstract_text = Some(collapse_whitespace(&value)),
                                "categories" => r.categories = Some(value),
                                _ => {}
                            }
                        }
                    }
                    ("author", part) => {
                        if let Some(a) = author.as_mut() {
                            let v = collapse_whitespace(&value);
                            match part {
                                "keyname" => a.keyname = v,
                                "forenames" => a.forenames = v,
                                "suffix" => a.suffix = v,
                                _ => {}
                            }
                        }
                    }
                    (_, "author") => {
                        if let (Some(a), Some(r)) = (author.take(), record.as_mut()) {
                            r.authors.push(a.name());
                        }
                    }
                    (_, "resumptionToken") => {
                        let token = value.trim();
                        page.resumption_token = (!token.is_empty()).then(|| token.to_string());
                    }
                    (_, "error") => {
                        page.error = Some(OaiError { code: error_code.take().unwrap_or_default(), message: value.trim().to_string() })
                    }
                    _ => {}
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !saw_root {
        return Err("empty response document".into());
    }
    if !path.is_empty() {
        return Err(format!("unexpected end of document inside <{}>", path.join("/")));
    }
    Ok(page)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAGE: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<OAI-PMH xmlns="http://www.openarchives.org/OAI/2.0/">
<ListRecords>
<record><header><identifier>oai:arXiv.org:1810.04805</identifier><datestamp>2019-05-24</datestamp></header>
<metadata><arXiv xmlns="http://arxiv.org/OAI/arXiv/">
<id>1810.04805</id><created>2018-10-11</created>
<authors><author><keyname>Devlin</keyname><forenames>Jacob</forenames></author><author><keyname>Chang</keyname><forenames>Ming-Wei</forenames></author></authors>
<title>BERT: Pre-training of Deep Bidirectional Transformers for
  Language Understanding</title>
<categories>cs.CL</categories>
<abstract>  We introduce a new language representation model called BERT &amp; more.
</abstract>
</arXiv></metadata></record>
<record><header status="deleted"><identifier>oai:arXiv.org:1801.00001</identifier></header></record>
<record><header><identifier>oai:arXiv.org:1801.00002</identifier></header><metadata><arXiv><id>1801.00002</id><created>2018-02-30</created></arXiv></metadata></record>
<resumptionToken cursor="0" completeListSize="5">tok|1001</resumptionToken>
</ListRecords>
</OAI-PMH>"#;

    #[test]
    fn parses_records_and_token() {
        let page = parse_page(PAGE.as_bytes()).unwrap();
        assert_eq!(page.deleted, 1);
        assert_eq!(page.resumption_token.as_deref(), Some("tok|1001"));
        let bert = page.records[0].as_ref().unwrap();
        assert_eq!(bert.id, "1810.04805");
        assert_eq!(bert.created, NaiveDate::from_ymd_opt(2018, 10, 11).unwrap());
        assert_eq!(bert.title, "BERT: Pre-training of Deep Bidirectional Transformers for Language Understanding");
        assert_eq!(bert.abstract_text, "We introduce a new language representation model called BERT & more.");
        assert_eq!(bert.authors, vec!["Jacob Devlin", "Ming-Wei Chang"]);
        assert_eq!(bert.categories, vec!["cs.CL"]);
        assert!(page.records[1].as_ref().unwrap_err().contains("malformed created date"));
    }

    #[test]
    fn empty_token_ends_the_list() {
        let xml = r#"<OAI-PMH><ListRecords><resumptionToken completeListSize="5" cursor="3"/></ListRecords></OAI-PMH>"#;
        assert_eq!(parse_page(xml.as_bytes()).unwrap().resumption_token, None);
        let xml = r#"<OAI-PMH><ListRecords><resumptionToken cursor="3"></resumptionToken></ListRecords></OAI-PMH>"#;
        assert_eq!(parse_page(xml.as_bytes()).unwrap().resumption_token, None);
    }

    #[test]
    fn reports_protocol_errors() {
        let xml = r#"<OAI-PMH><error code="noRecordsMatch">No records.</error></OAI-PMH>"#;
        let page = parse_page(xml.as_bytes()).unwrap();
        assert_eq!(page.error, Some(OaiError { code: "noRecordsMatch".into(), message: "No records.".into() }));
    }

    #[test]
    fn rejects_broken_documents() {
        assert!(parse_page(b"<OAI-PMH><ListRecords></OAI-PMH>").is_err());
        assert!(parse_page(b"<OAI-PMH><ListRecords>").is_err());
        assert!(parse_page(b"").is_err());
        assert!(parse_page(b"\xff\xfe").is_err());
    }
}
