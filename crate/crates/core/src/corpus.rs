//! Annotated abstracts, relation files, and CoNLL parses.
//!
//! Entity mentions are replaced by their ids before sentence splitting, so
//! every entity is a single opaque token (and a single node once parsed).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Read, Write};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::depgraph::{build_graph, ConllRow, DependencyGraph};
use crate::error::{Error, Result};
use crate::labels::{generate_negatives, pair_key, BaseLabel, NegativeSamplingConfig, TaskMode};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub id: String,
    pub doc_id: String,
    pub surface_tokens: Vec<String>,
    /// Index of the containing sentence within its document.
    pub sentence_index: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    /// 0-based position within the document.
    pub index: usize,
    pub tokens: Vec<String>,
}

impl Sentence {
    /// Token positions holding entity ids of this sentence's document.
    pub fn entity_positions(&self) -> Vec<usize> {
        self.tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| is_entity_id(&self.doc_id, t))
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationInstance {
    pub label: BaseLabel,
    pub e1: String,
    pub e2: String,
    pub reverse: bool,
    pub doc_id: String,
    pub sentence_index: Option<usize>,
}

/// One `<text>` block with entity spans replaced by their ids.
///
/// Title and abstract are separated by a blank line, which always ends a
/// sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
}

/// Whether `token` has the entity-id shape `<doc_id>.<positive integer>`.
pub fn is_entity_id(doc_id: &str, token: &str) -> bool {
    token
        .strip_prefix(doc_id)
        .and_then(|rest| rest.strip_prefix('.'))
        .map(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()) && !n.trim_start_matches('0').is_empty())
        .unwrap_or(false)
}

/// Document id implied by an entity id (everything before the last `.`).
pub fn doc_id_of(entity_id: &str) -> Option<&str> {
    let (doc, n) = entity_id.rsplit_once('.')?;
    (is_entity_id(doc, entity_id) && !n.is_empty()).then_some(doc)
}

// ---------------------------------------------------------------------------
// Abstract files

struct LineIndex {
    starts: Vec<usize>,
}

impl LineIndex {
    fn new(text: &str) -> Self {
        let starts = std::iter::once(0)
            .chain(text.match_indices('\n').map(|(i, _)| i + 1))
            .collect();
        LineIndex { starts }
    }

    fn line(&self, offset: usize) -> usize {
        self.starts.partition_point(|&s| s <= offset)
    }
}

fn unescape(text: &str) -> String {
    text.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&apos;", "'")
        .replace("&amp;", "&")
}

fn attribute<'a>(tag: &'a str, name: &str) -> Option<&'a str> {
    let needle = format!("{name}=");
    let start = tag.find(&needle)? + needle.len();
    let rest = &tag[start..];
    let quote = rest.chars().next().filter(|c| *c == '"' || *c == '\'')?;
    let rest = &rest[1..];
    rest.find(quote).map(|end| &rest[..end])
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Outside,
    Title,
    Abstract,
}

struct OpenDoc {
    id: String,
    title: String,
    abstract_text: String,
    section: Section,
}

impl OpenDoc {
    fn push(&mut self, text: &str) {
        match self.section {
            Section::Title => self.title.push_str(text),
            Section::Abstract => self.abstract_text.push_str(text),
            Section::Outside => {}
        }
    }

    fn finish(self) -> RawDocument {
        let paragraphs: Vec<String> = [self.title, self.abstract_text]
            .iter()
            .map(|p| p.split_whitespace().collect::<Vec<_>>().join(" "))
            .filter(|p| !p.is_empty())
            .collect();
        RawDocument {
            id: self.id,
            text: paragraphs.join("\n\n"),
        }
    }
}

/// Parse `<text id=..>` blocks whose `<title>`/`<abstract>` mark entities as
/// `<entity id="..">surface</entity>`.
pub fn parse_abstracts<R: Read>(
    mut reader: R,
) -> Result<(BTreeMap<String, EntityMention>, Vec<RawDocument>)> {
    let mut input = String::new();
    reader.read_to_string(&mut input)?;
    let lines = LineIndex::new(&input);

    let mut entities = BTreeMap::new();
    let mut docs = Vec::new();
    let mut doc: Option<OpenDoc> = None;
    let mut entity: Option<(String, String)> = None;

    let mut pos = 0;
    while pos < input.len() {
        let Some(rel) = input[pos..].find('<') else {
            let text = unescape(&input[pos..]);
            if let Some((_, surface)) = entity.as_mut() {
                surface.push_str(&text);
            } else if let Some(d) = doc.as_mut() {
                d.push(&text);
            }
            break;
        };
        let tag_start = pos + rel;
        let text = unescape(&input[pos..tag_start]);
        if let Some((_, surface)) = entity.as_mut() {
            surface.push_str(&text);
        } else if let Some(d) = doc.as_mut() {
            d.push(&text);
        }

        let line = lines.line(tag_start);
        let tag_end = input[tag_start..]
            .find('>')
            .map(|e| tag_start + e)
            .ok_or_else(|| Error::format(line, "unterminated tag"))?;
        let tag = &input[tag_start + 1..tag_end];
        pos = tag_end + 1;

        let closing = tag.starts_with('/');
        let name = tag
            .trim_start_matches('/')
            .split(|c: char| c.is_whitespace() || c == '/')
            .next()
            .unwrap_or("");

        match (name, closing) {
            ("text", false) => {
                if doc.is_some() {
                    return Err(Error::format(line, "nested <text> block"));
                }
                let id = attribute(tag, "id")
                    .ok_or_else(|| Error::format(line, "<text> without id attribute"))?;
                doc = Some(OpenDoc {
                    id: id.to_owned(),
                    title: String::new(),
                    abstract_text: String::new(),
                    section: Section::Outside,
                });
            }
            ("text", true) => {
                if entity.is_some() {
                    return Err(Error::format(line, "unclosed <entity> at </text>"));
                }
                let d = doc
                    .take()
                    .ok_or_else(|| Error::format(line, "</text> without <text>"))?;
                docs.push(d.finish());
            }
            ("title" | "abstract", false) => {
                let d = doc
                    .as_mut()
                    .ok_or_else(|| Error::format(line, format!("<{name}> outside <text>")))?;
                d.section = if name == "title" {
                    Section::Title
                } else {
                    Section::Abstract
                };
            }
            ("title" | "abstract", true) => {
                if entity.is_some() {
                    return Err(Error::format(line, format!("unclosed <entity> at </{name}>")));
                }
                if let Some(d) = doc.as_mut() {
                    // Keep title and abstract words apart.
                    d.push(" ");
                    d.section = Section::Outside;
                }
            }
            ("entity", false) => {
                if entity.is_some() {
                    return Err(Error::format(line, "nested entity tags"));
                }
                let d = doc
                    .as_ref()
                    .filter(|d| d.section != Section::Outside)
                    .ok_or_else(|| Error::format(line, "<entity> outside <title>/<abstract>"))?;
                let id = attribute(tag, "id")
                    .ok_or_else(|| Error::format(line, "<entity> without id attribute"))?;
                if !is_entity_id(&d.id, id) {
                    return Err(Error::format(
                        line,
                        format!("entity id `{id}` is not `{}.<n>`", d.id),
                    ));
                }
                if entities.contains_key(id) {
                    return Err(Error::format(line, format!("duplicate entity id `{id}`")));
                }
                entity = Some((id.to_owned(), String::new()));
            }
            ("entity", true) => {
                let (id, surface) = entity
                    .take()
                    .ok_or_else(|| Error::format(line, "</entity> without <entity>"))?;
                let surface_tokens: Vec<String> =
                    surface.split_whitespace().map(str::to_owned).collect();
                if surface_tokens.is_empty() {
                    return Err(Error::format(line, format!("entity `{id}` has empty surface")));
                }
                let d = doc.as_mut().expect("entity implies open document");
                d.push(&format!(" {id} "));
                entities.insert(
                    id.clone(),
                    EntityMention {
                        id,
                        doc_id: d.id.clone(),
                        surface_tokens,
                        sentence_index: None,
                    },
                );
            }
            _ => {}
        }
    }

    if doc.is_some() {
        return Err(Error::format(None, "unterminated <text> block"));
    }
    Ok((entities, docs))
}

// ---------------------------------------------------------------------------
// Tokenization and sentence splitting

const ABBREVIATIONS: &[&str] = &[
    "al", "etc", "Fig", "Figs", "fig", "cf", "vs", "Eq", "Eqs", "eq", "Sec", "Sect", "Tab", "No",
    "no", "Dr", "Mr", "Mrs", "Ms", "Prof", "Jr", "Inc", "Ltd", "resp", "approx", "ca", "viz",
];

const LEADING_PUNCT: &[char] = &['(', '[', '{', '"', '\u{201c}', '\u{2018}'];
const TRAILING_PUNCT: &[char] = &[')', ']', '}', '"', '\u{201d}', '\u{2019}', ',', ';', ':'];
const TERMINALS: &[&str] = &[".", "?", "!"];

fn is_abbreviation(stem: &str) -> bool {
    let mut chars = stem.chars();
    let single_upper = matches!((chars.next(), chars.next()), (Some(c), None) if c.is_uppercase());
    if single_upper || ABBREVIATIONS.contains(&stem) {
        return true;
    }
    // Dotted initialisms such as `e.g` or `U.S`.
    let parts: Vec<&str> = stem.split('.').collect();
    parts.len() > 1
        && parts
            .iter()
            .all(|p| p.chars().count() == 1 && p.chars().all(char::is_alphabetic))
}

fn split_token(raw: &str, out: &mut Vec<String>) {
    let mut word = raw;
    while let Some(c) = word.chars().next().filter(|c| LEADING_PUNCT.contains(c)) {
        out.push(c.to_string());
        word = &word[c.len_utf8()..];
    }
    let mut suffix = Vec::new();
    while let Some(c) = word.chars().next_back() {
        let stem = &word[..word.len() - c.len_utf8()];
        let peel = TRAILING_PUNCT.contains(&c)
            || c == '?'
            || c == '!'
            || (c == '.' && !(is_abbreviation(stem) && !stem.is_empty()));
        if !peel || stem.is_empty() {
            break;
        }
        suffix.push(c.to_string());
        word = stem;
    }
    if !word.is_empty() {
        out.push(word.to_owned());
    }
    out.extend(suffix.into_iter().rev());
}

/// Whitespace tokenization with edge punctuation separated; entity ids are
/// never split.
pub fn tokenize(doc_id: &str, text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for raw in text.split_whitespace() {
        if is_entity_id(doc_id, raw) {
            tokens.push(raw.to_owned());
        } else {
            split_token(raw, &mut tokens);
        }
    }
    tokens
}

/// Rule-based sentence splitter.
///
/// A sentence ends at a standalone `.`, `?` or `!` followed by a token that
/// starts with an uppercase letter or a digit or is an entity id, and at
/// every blank line. Periods of abbreviations stay attached to their word
/// and never end a sentence.
pub fn split_sentences(doc_id: &str, text: &str) -> Vec<Sentence> {
    let mut paragraph = String::new();
    let flush = |paragraph: &mut String, sentences: &mut Vec<Vec<String>>| {
        let tokens = tokenize(doc_id, paragraph);
        paragraph.clear();
        let mut current: Vec<String> = Vec::new();
        for (i, token) in tokens.iter().enumerate() {
            current.push(token.clone());
            let boundary = TERMINALS.contains(&token.as_str())
                && tokens.get(i + 1).is_some_and(|next| {
                    next.chars()
                        .next()
                        .is_some_and(|c| c.is_uppercase() || c.is_ascii_digit())
                        || is_entity_id(doc_id, next)
                });
            if boundary {
                sentences.push(std::mem::take(&mut current));
            }
        }
        if !current.is_empty() {
            sentences.push(current);
        }
    };

    let mut raw_sentences = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            flush(&mut paragraph, &mut raw_sentences);
        } else {
            paragraph.push_str(line);
            paragraph.push(' ');
        }
    }
    flush(&mut paragraph, &mut raw_sentences);

    raw_sentences
        .into_iter()
        .enumerate()
        .map(|(index, tokens)| Sentence {
            doc_id: doc_id.to_owned(),
            index,
            tokens,
        })
        .collect()
}

/// Split every document and record each entity's sentence index.
///
/// Fails when an entity id is missing from its document or occurs more
/// than once.
pub fn encode_documents(
    entities: &mut BTreeMap<String, EntityMention>,
    documents: &[RawDocument],
) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    for doc in documents {
        for sentence in split_sentences(&doc.id, &doc.text) {
            for pos in sentence.entity_positions() {
                let id = &sentence.tokens[pos];
                let mention = entities.get_mut(id).ok_or_else(|| {
                    Error::Data(format!("token `{id}` has no entity annotation"))
                })?;
                if mention.sentence_index.is_some() {
                    return Err(Error::Data(format!("entity `{id}` occurs more than once")));
                }
                mention.sentence_index = Some(sentence.index);
            }
            sentences.push(sentence);
        }
    }
    if let Some(missing) = entities.values().find(|e| e.sentence_index.is_none()) {
        return Err(Error::Data(format!(
            "entity `{}` not found in any sentence",
            missing.id
        )));
    }
    Ok(sentences)
}

#[derive(Serialize, Deserialize)]
struct MapRecord {
    entity_id: String,
    doc_id: String,
    sentence_index: usize,
    surface_tokens: Vec<String>,
}

/// Write the encoded-sentence file and its entity sidecar map.
pub fn write_encoded<W1: Write, W2: Write>(
    sentences: &[Sentence],
    entities: &BTreeMap<String, EntityMention>,
    mut sentence_out: W1,
    mut map_out: W2,
) -> Result<()> {
    for sentence in sentences {
        writeln!(sentence_out, "{}", sentence.tokens.join(" "))?;
    }
    for e in entities.values() {
        let record = MapRecord {
            entity_id: e.id.clone(),
            doc_id: e.doc_id.clone(),
            sentence_index: e.sentence_index.ok_or_else(|| {
                Error::Data(format!("entity `{}` has no sentence", e.id))
            })?,
            surface_tokens: e.surface_tokens.clone(),
        };
        writeln!(map_out, "{}", serde_json::to_string(&record)?)?;
    }
    Ok(())
}

/// Read back an encoded-sentence file and its sidecar map.
///
/// Sentences take document and index from the entities they contain;
/// sentences without entities continue the preceding document.
pub fn read_encoded<R1: BufRead, R2: BufRead>(
    sentence_in: R1,
    map_in: R2,
) -> Result<(Vec<Sentence>, BTreeMap<String, EntityMention>)> {
    let mut entities = BTreeMap::new();
    for (i, line) in map_in.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: MapRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format(i + 1, format!("entity map: {e}")))?;
        if record.surface_tokens.is_empty() {
            return Err(Error::format(i + 1, "entity map: empty surface"));
        }
        if !is_entity_id(&record.doc_id, &record.entity_id) {
            return Err(Error::format(
                i + 1,
                format!("entity map: `{}` is not an id of `{}`", record.entity_id, record.doc_id),
            ));
        }
        let mention = EntityMention {
            id: record.entity_id.clone(),
            doc_id: record.doc_id,
            surface_tokens: record.surface_tokens,
            sentence_index: Some(record.sentence_index),
        };
        if entities.insert(record.entity_id.clone(), mention).is_some() {
            return Err(Error::format(
                i + 1,
                format!("duplicate entity id `{}`", record.entity_id),
            ));
        }
    }

    let mut sentences: Vec<Sentence> = Vec::new();
    for (i, line) in sentence_in.lines().enumerate() {
        let line = line?;
        let tokens: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
        if tokens.is_empty() {
            return Err(Error::format(i + 1, "empty sentence line"));
        }
        let located: Vec<&EntityMention> = tokens.iter().filter_map(|t| entities.get(t)).collect();
        let (doc_id, index) = match located.first() {
            Some(first) => {
                let index = first.sentence_index.unwrap_or_default();
                if located
                    .iter()
                    .any(|e| e.doc_id != first.doc_id || e.sentence_index != Some(index))
                {
                    return Err(Error::format(
                        i + 1,
                        "entities of one line disagree on document or sentence",
                    ));
                }
                (first.doc_id.clone(), index)
            }
            None => match sentences.last() {
                Some(prev) => (prev.doc_id.clone(), prev.index + 1),
                None => (String::new(), 0),
            },
        };
        sentences.push(Sentence {
            doc_id,
            index,
            tokens,
        });
    }
    Ok((sentences, entities))
}

// ---------------------------------------------------------------------------
// Relation files

/// Parse `LABEL(id1,id2[,REVERSE])` lines; blank and `#` lines are skipped.
pub fn parse_relations<R: BufRead>(reader: R) -> Result<Vec<RelationInstance>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_relation_line(line).map_err(|e| match e {
            Error::Label(m) => Error::format(i + 1, m),
            other => other,
        })?);
    }
    Ok(out)
}

fn parse_relation_line(line: &str) -> Result<RelationInstance> {
    let bad = || Error::Label(format!("malformed relation `{line}`"));
    let open = line.find('(').ok_or_else(bad)?;
    let inner = line[open + 1..].strip_suffix(')').ok_or_else(bad)?;
    let label: BaseLabel = line[..open].trim().parse()?;
    if label == BaseLabel::None {
        return Err(Error::Label("NONE is not an annotated relation".into()));
    }
    let args: Vec<&str> = inner.split(',').map(str::trim).collect();
    let reverse = match args.as_slice() {
        [_, _] => false,
        [_, _, "REVERSE"] => true,
        _ => {
            return Err(Error::Label(format!(
                "expected two entity ids and optional REVERSE in `{line}`"
            )))
        }
    };
    if reverse && !label.is_directional() {
        return Err(Error::Label(format!("{label} is symmetric and cannot be REVERSE")));
    }
    let (e1, e2) = (args[0], args[1]);
    if e1.is_empty() || e2.is_empty() || e1 == e2 {
        return Err(Error::Label(format!("invalid entity pair in `{line}`")));
    }
    let doc_id = doc_id_of(e1)
        .ok_or_else(|| Error::Label(format!("`{e1}` is not an entity id")))?
        .to_owned();
    Ok(RelationInstance {
        label,
        e1: e1.to_owned(),
        e2: e2.to_owned(),
        reverse,
        doc_id,
        sentence_index: None,
    })
}

/// Render an instance in relation-file syntax.
pub fn render_relation(instance: &RelationInstance) -> String {
    if instance.reverse {
        format!("{}({},{},REVERSE)", instance.label, instance.e1, instance.e2)
    } else {
        format!("{}({},{})", instance.label, instance.e1, instance.e2)
    }
}

// ---------------------------------------------------------------------------
// CoNLL parses

fn parse_conll_row(line: &str, line_no: usize) -> Result<ConllRow> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(Error::format(
            line_no,
            format!("expected 10 tab-separated columns, found {}", cols.len()),
        ));
    }
    let id = cols[0]
        .parse()
        .map_err(|_| Error::format(line_no, format!("non-integer ID `{}`", cols[0])))?;
    let head = cols[6]
        .parse()
        .map_err(|_| Error::format(line_no, format!("non-integer HEAD `{}`", cols[6])))?;
    Ok(ConllRow {
        id,
        form: cols[1].to_owned(),
        head,
        deprel: cols[7].to_owned(),
    })
}

/// Read blank-line separated CoNLL-X blocks, one per encoded sentence.
pub fn ingest_conll<R: BufRead>(reader: R, sentences: &[Sentence]) -> Result<Vec<DependencyGraph>> {
    let mut blocks: Vec<Vec<ConllRow>> = Vec::new();
    let mut current = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
            continue;
        }
        if trimmed.starts_with('#') {
            continue;
        }
        current.push(parse_conll_row(trimmed, i + 1)?);
    }
    if !current.is_empty() {
        blocks.push(current);
    }

    if blocks.len() != sentences.len() {
        return Err(Error::Alignment {
            sentence: blocks.len().min(sentences.len()),
            message: format!(
                "{} CoNLL blocks for {} sentences",
                blocks.len(),
                sentences.len()
            ),
        });
    }

    blocks
        .iter()
        .zip(sentences)
        .enumerate()
        .map(|(i, (rows, sentence))| {
            if rows.len() != sentence.tokens.len() {
                return Err(Error::Alignment {
                    sentence: i,
                    message: format!(
                        "{} CoNLL rows for {} tokens",
                        rows.len(),
                        sentence.tokens.len()
                    ),
                });
            }
            if let Some((row, token)) = rows
                .iter()
                .zip(&sentence.tokens)
                .find(|(row, token)| row.form != **token)
            {
                return Err(Error::Alignment {
                    sentence: i,
                    message: format!("FORM `{}` does not match token `{token}`", row.form),
                });
            }
            build_graph(rows)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Dataset

#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub sentences: Vec<Sentence>,
    pub entities: BTreeMap<String, EntityMention>,
    pub instances: Vec<RelationInstance>,
    /// Position in `sentences` of each instance's sentence.
    pub instance_sentences: Vec<usize>,
    /// Instances excluded because no single sentence holds both entities.
    pub dropped: Vec<RelationInstance>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SentenceAssignment {
    /// Position of the sentence in `Dataset::sentences`.
    Sentence(usize),
    Dropped,
}

/// Entity id → position of the sentence containing it.
pub fn entity_locations(sentences: &[Sentence]) -> Result<HashMap<String, usize>> {
    let mut located = HashMap::new();
    for (pos, sentence) in sentences.iter().enumerate() {
        for i in sentence.entity_positions() {
            let id = &sentence.tokens[i];
            if let Some(prev) = located.insert(id.clone(), pos) {
                if prev != pos {
                    return Err(Error::Data(format!(
                        "entity `{id}` appears in more than one sentence"
                    )));
                }
                return Err(Error::Data(format!("entity `{id}` appears twice in a sentence")));
            }
        }
    }
    Ok(located)
}

/// Locate the single sentence containing both entities of `instance`.
pub fn assign_sentence(
    instance: &RelationInstance,
    locations: &HashMap<String, usize>,
) -> Result<SentenceAssignment> {
    let find = |id: &str| {
        locations
            .get(id)
            .copied()
            .ok_or_else(|| Error::Data(format!("entity `{id}` is absent from all sentences")))
    };
    let (s1, s2) = (find(&instance.e1)?, find(&instance.e2)?);
    Ok(if s1 == s2 {
        SentenceAssignment::Sentence(s1)
    } else {
        SentenceAssignment::Dropped
    })
}

impl Dataset {
    /// Align relations with sentences; in twelve-class mode add `NONE`
    /// negatives for every sentence.
    pub fn build(
        sentences: Vec<Sentence>,
        entities: BTreeMap<String, EntityMention>,
        relations: Vec<RelationInstance>,
        mode: TaskMode,
        negatives: &NegativeSamplingConfig,
    ) -> Result<Dataset> {
        let locations = entity_locations(&sentences)?;
        for id in locations.keys() {
            if !entities.contains_key(id) {
                return Err(Error::Data(format!("token `{id}` has no entity annotation")));
            }
        }

        let mut seen = HashSet::new();
        let mut dataset = Dataset {
            sentences,
            entities,
            ..Dataset::default()
        };
        let mut gold_pairs = HashSet::new();
        for mut instance in relations {
            for id in [&instance.e1, &instance.e2] {
                if !dataset.entities.contains_key(id) {
                    return Err(Error::Data(format!("relation refers to unknown entity `{id}`")));
                }
            }
            let key = pair_key(&instance.e1, &instance.e2);
            if !seen.insert(key.clone()) {
                warn!(
                    "duplicate annotation for pair ({}, {}); keeping the first",
                    instance.e1, instance.e2
                );
                continue;
            }
            gold_pairs.insert(key);
            match assign_sentence(&instance, &locations)? {
                SentenceAssignment::Sentence(pos) => {
                    instance.sentence_index = Some(dataset.sentences[pos].index);
                    dataset.instances.push(instance);
                    dataset.instance_sentences.push(pos);
                }
                SentenceAssignment::Dropped => {
                    warn!(
                        "dropping {}: entities lie in different sentences",
                        render_relation(&instance)
                    );
                    dataset.dropped.push(instance);
                }
            }
        }

        if mode == TaskMode::ExtractClassify12 {
            for (pos, sentence) in dataset.sentences.iter().enumerate() {
                for negative in generate_negatives(sentence, &gold_pairs, negatives) {
                    dataset.instances.push(negative);
                    dataset.instance_sentences.push(pos);
                }
            }
        }
        Ok(dataset)
    }
}

/// Instance counts per label, split by direction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelStats {
    pub rows: Vec<LabelRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRow {
    pub label: BaseLabel,
    pub forward: usize,
    pub reverse: usize,
    pub total: usize,
}

impl LabelStats {
    pub fn from_labels<I: IntoIterator<Item = (BaseLabel, bool)>>(labels: I) -> Self {
        let mut counts: BTreeMap<BaseLabel, (usize, usize)> =
            BaseLabel::ALL.iter().map(|&l| (l, (0, 0))).collect();
        for (label, reverse) in labels {
            let entry = counts.get_mut(&label).expect("all labels present");
            if reverse {
                entry.1 += 1;
            } else {
                entry.0 += 1;
            }
        }
        let rows = BaseLabel::ALL
            .iter()
            .map(|l| {
                let (forward, reverse) = counts[l];
                LabelRow {
                    label: *l,
                    forward,
                    reverse,
                    total: forward + reverse,
                }
            })
            .collect();
        LabelStats { rows }
    }

    pub fn row(&self, label: BaseLabel) -> &LabelRow {
        self.rows
            .iter()
            .find(|r| r.label == label)
            .expect("every label has a row")
    }

    pub fn total(&self) -> usize {
        self.rows.iter().map(|r| r.total).sum()
    }

    /// Plain-text table: label, forward, reverse, total.
    pub fn to_table(&self) -> String {
        let mut out = format!("{:<14}{:>8}{:>8}{:>8}\n", "relation", "false", "true", "total");
        for r in &self.rows {
            out.push_str(&format!(
                "{:<14}{:>8}{:>8}{:>8}\n",
                r.label.as_str(),
                r.forward,
                r.reverse,
                r.total
            ));
        }
        out
    }
}

pub fn dataset_stats(dataset: &Dataset) -> LabelStats {
    LabelStats::from_labels(dataset.instances.iter().map(|i| (i.label, i.reverse)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SAMPLE_ABSTRACT: &str = r#"<doc>
<text id="P05-1067">
<abstract>
Syntax-based <entity id="P05-1067.1">statistical machine translation (MT)</entity> aims at applying <entity id="P05-1067.2">statistical models</entity> to <entity id="P05-1067.3">structured data</entity> .
</abstract>
</text>
</doc>"#;

    #[test]
    fn entity_id_shape() {
        assert!(is_entity_id("P05-1067", "P05-1067.1"));
        assert!(is_entity_id("D1", "D1.12"));
        assert!(!is_entity_id("D1", "D1.0"));
        assert!(!is_entity_id("D1", "D1."));
        assert!(!is_entity_id("D1", "D2.1"));
        assert!(!is_entity_id("D1", "D1.1a"));
        assert_eq!(doc_id_of("P05-1067.3"), Some("P05-1067"));
        assert_eq!(doc_id_of("nodot"), None);
    }

    #[test]
    fn single_entity_abstract() {
        let input = r#"<text id="D1"><abstract><entity id="D1.1">parsing</entity> helps</abstract></text>"#;
        let (entities, docs) = parse_abstracts(input.as_bytes()).unwrap();
        assert_eq!(entities["D1.1"].surface_tokens, vec!["parsing"]);
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].text, "D1.1 helps");
    }

    #[test]
    fn sample_abstract_encodes_entities() {
        let (entities, docs) = parse_abstracts(SAMPLE_ABSTRACT.as_bytes()).unwrap();
        assert_eq!(entities.len(), 3);
        assert_eq!(
            entities["P05-1067.2"].surface_tokens,
            vec!["statistical", "models"]
        );
        assert_eq!(docs[0].text, "Syntax-based P05-1067.1 aims at applying P05-1067.2 to P05-1067.3 .");
    }

    #[test]
    fn nested_and_duplicate_entities_rejected() {
        let nested = r#"<text id="D1"><abstract><entity id="D1.1"><entity id="D1.2">x</entity></entity></abstract></text>"#;
        assert!(matches!(parse_abstracts(nested.as_bytes()), Err(Error::Format { .. })));
        let dup = r#"<text id="D1"><abstract><entity id="D1.1">x</entity> <entity id="D1.1">y</entity></abstract></text>"#;
        assert!(matches!(parse_abstracts(dup.as_bytes()), Err(Error::Format { .. })));
        let foreign = r#"<text id="D1"><abstract><entity id="D2.1">x</entity></abstract></text>"#;
        assert!(matches!(parse_abstracts(foreign.as_bytes()), Err(Error::Format { .. })));
    }

    #[test]
    fn format_error_reports_line() {
        let input = "<text id=\"D1\">\n<abstract>\n<entity id=\"D1.1\"><entity id=\"D1.2\">x</entity></entity>\n</abstract></text>";
        match parse_abstracts(input.as_bytes()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, Some(3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn title_and_abstract_are_separate_sentences() {
        let input = r#"<text id="D1"><title>A <entity id="D1.1">parser</entity></title><abstract>We use <entity id="D1.2">grammars</entity> .</abstract></text>"#;
        let (mut entities, docs) = parse_abstracts(input.as_bytes()).unwrap();
        let sentences = encode_documents(&mut entities, &docs).unwrap();
        assert_eq!(sentences.len(), 2);
        assert_eq!(sentences[0].tokens, vec!["A", "D1.1"]);
        assert_eq!(entities["D1.2"].sentence_index, Some(1));
    }

    #[test]
    fn splits_two_plain_sentences() {
        let s = split_sentences("X", "A b . C d .");
        let toks: Vec<_> = s.iter().map(|s| s.tokens.clone()).collect();
        assert_eq!(toks, vec![vec!["A", "b", "."], vec!["C", "d", "."]]);
        assert_eq!(s[1].index, 1);
    }

    #[test]
    fn sample_sentence_is_one_sentence() {
        let s = split_sentences("P05-1067", "P05-1067.1 aims at applying P05-1067.2 to P05-1067.3 .");
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].tokens.len(), 8);
        assert_eq!(s[0].tokens.last().unwrap(), ".");
    }

    #[test]
    fn abbreviation_guard() {
        let s = split_sentences("X", "et al. 2010 show");
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].tokens, vec!["et", "al.", "2010", "show"]);
        assert_eq!(split_sentences("X", "see Fig. 3 and J. Smith e.g. This").len(), 1);
    }

    #[test]
    fn splits_before_digit_and_entity() {
        assert_eq!(split_sentences("X", "It works. 3 runs").len(), 2);
        assert_eq!(split_sentences("X", "It works. X.2 runs").len(), 2);
        assert_eq!(split_sentences("X", "It works. then more").len(), 1);
        assert_eq!(split_sentences("X", "Really? Yes!").len(), 2);
    }

    #[test]
    fn punctuation_is_separated() {
        assert_eq!(
            tokenize("X", "translation (MT), data."),
            vec!["translation", "(", "MT", ")", ",", "data", "."]
        );
        assert_eq!(tokenize("X", "(etc.)"), vec!["(", "etc.", ")"]);
        assert_eq!(tokenize("X", "X.1, X.2"), vec!["X.1", ",", "X.2"]);
    }

    #[test]
    fn empty_document() {
        assert!(split_sentences("X", "").is_empty());
        assert!(split_sentences("X", "  \n\n ").is_empty());
    }

    #[test]
    fn relation_lines() {
        let text = "# comment\nUSAGE(P05-1067.1,P05-1067.2)\n\nUSAGE(P05-1067.1,P05-1067.2,REVERSE)\n";
        let rels = parse_relations(text.as_bytes()).unwrap();
        assert_eq!(rels.len(), 2);
        assert!(!rels[0].reverse);
        assert!(rels[1].reverse);
        assert_eq!(rels[0].doc_id, "P05-1067");
        assert_eq!(render_relation(&rels[1]), "USAGE(P05-1067.1,P05-1067.2,REVERSE)");
    }

    #[test]
    fn relation_errors() {
        for bad in [
            "COMPARE(D1.1,D1.2,REVERSE)",
            "FOO(D1.1,D1.2)",
            "USAGE(D1.1)",
            "USAGE(D1.1,D1.2,D1.3)",
            "USAGE(D1.1,D1.1)",
            "NONE(D1.1,D1.2)",
            "USAGE D1.1 D1.2",
        ] {
            assert!(parse_relations(bad.as_bytes()).is_err(), "{bad}");
        }
        match parse_relations("USAGE(D1.1,D1.2)\nBAD(D1.1,D1.2)".as_bytes()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, Some(2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn sentences_of(lines: &[(&str, usize, &[&str])]) -> Vec<Sentence> {
        lines
            .iter()
            .map(|(doc, index, tokens)| Sentence {
                doc_id: doc.to_string(),
                index: *index,
                tokens: tokens.iter().map(|t| t.to_string()).collect(),
            })
            .collect()
    }

    #[test]
    fn conll_minimal_tree() {
        let sentences = sentences_of(&[("D1", 0, &["D1.1", "helps"])]);
        let conll = "1\tD1.1\t_\t_\t_\t_\t2\tSBJ\t_\t_\n2\thelps\t_\t_\t_\t_\t0\tROOT\t_\t_\n\n";
        let graphs = ingest_conll(conll.as_bytes(), &sentences).unwrap();
        assert_eq!(graphs.len(), 1);
        assert_eq!(graphs[0].root(), 2);
        assert_eq!(graphs[0].head(1), 2);
    }

    #[test]
    fn conll_alignment_errors() {
        let sentences = sentences_of(&[("D1", 0, &["D1.1", "helps"])]);
        let lower = "1\td1.1\t_\t_\t_\t_\t2\tSBJ\t_\t_\n2\thelps\t_\t_\t_\t_\t0\tROOT\t_\t_\n";
        assert!(matches!(
            ingest_conll(lower.as_bytes(), &sentences),
            Err(Error::Alignment { sentence: 0, .. })
        ));
        let short = "1\tD1.1\t_\t_\t_\t_\t0\tROOT\t_\t_\n";
        assert!(matches!(
            ingest_conll(short.as_bytes(), &sentences),
            Err(Error::Alignment { .. })
        ));
        let bad_head = "1\tD1.1\t_\t_\t_\t_\tx\tSBJ\t_\t_\n2\thelps\t_\t_\t_\t_\t0\tROOT\t_\t_\n";
        assert!(matches!(
            ingest_conll(bad_head.as_bytes(), &sentences),
            Err(Error::Format { line: Some(1), .. })
        ));
    }

    fn mention(id: &str) -> EntityMention {
        EntityMention {
            id: id.into(),
            doc_id: doc_id_of(id).unwrap().into(),
            surface_tokens: vec![id.to_lowercase()],
            sentence_index: None,
        }
    }

    fn rel(label: BaseLabel, e1: &str, e2: &str, reverse: bool) -> RelationInstance {
        RelationInstance {
            label,
            e1: e1.into(),
            e2: e2.into(),
            reverse,
            doc_id: "D1".into(),
            sentence_index: None,
        }
    }

    #[test]
    fn sentence_assignment() {
        let sentences = sentences_of(&[
            ("D1", 0, &["D1.1", "uses", "D1.2"]),
            ("D1", 1, &["D1.3", "."]),
        ]);
        let loc = entity_locations(&sentences).unwrap();
        assert_eq!(
            assign_sentence(&rel(BaseLabel::Usage, "D1.1", "D1.2", false), &loc).unwrap(),
            SentenceAssignment::Sentence(0)
        );
        assert_eq!(
            assign_sentence(&rel(BaseLabel::Usage, "D1.1", "D1.3", false), &loc).unwrap(),
            SentenceAssignment::Dropped
        );
        assert!(assign_sentence(&rel(BaseLabel::Usage, "D1.9", "D1.3", false), &loc).is_err());

        let twice = sentences_of(&[("D1", 0, &["D1.1"]), ("D1", 1, &["D1.1"])]);
        assert!(entity_locations(&twice).is_err());
    }

    #[test]
    fn dataset_build_and_stats() {
        let sentences = sentences_of(&[
            ("D1", 0, &["D1.1", "uses", "D1.2", "for", "D1.3"]),
            ("D1", 1, &["D1.4", "."]),
        ]);
        let entities: BTreeMap<_, _> = ["D1.1", "D1.2", "D1.3", "D1.4"]
            .iter()
            .map(|id| (id.to_string(), mention(id)))
            .collect();
        let relations = vec![
            rel(BaseLabel::Usage, "D1.1", "D1.2", false),
            rel(BaseLabel::Usage, "D1.3", "D1.2", true),
            rel(BaseLabel::Topic, "D1.1", "D1.4", false),
        ];
        let ds = Dataset::build(
            sentences.clone(),
            entities.clone(),
            relations.clone(),
            TaskMode::Classify6,
            &NegativeSamplingConfig::default(),
        )
        .unwrap();
        assert_eq!(ds.instances.len(), 2);
        assert_eq!(ds.dropped.len(), 1);
        let stats = dataset_stats(&ds);
        let usage = stats.row(BaseLabel::Usage);
        assert_eq!((usage.forward, usage.reverse, usage.total), (1, 1, 2));
        assert_eq!(stats.total(), ds.instances.len());

        let ds12 = Dataset::build(
            sentences,
            entities,
            relations,
            TaskMode::ExtractClassify12,
            &NegativeSamplingConfig::default(),
        )
        .unwrap();
        // Only (D1.1, D1.3) is left unannotated in sentence 0.
        assert_eq!(dataset_stats(&ds12).row(BaseLabel::None).total, 1);
        assert_eq!(ds12.instance_sentences.len(), ds12.instances.len());
    }

    #[test]
    fn empty_stats() {
        let stats = dataset_stats(&Dataset::default());
        assert!(stats.rows.iter().all(|r| r.total == 0));
        assert_eq!(stats.rows.len(), 7);
    }

    #[test]
    fn encoded_files_roundtrip() {
        let input = r#"<text id="D1"><title>Plain title</title><abstract><entity id="D1.1">parsing</entity> helps <entity id="D1.2">MT</entity> . It uses <entity id="D1.3">trees</entity> .</abstract></text>"#;
        let (mut entities, docs) = parse_abstracts(input.as_bytes()).unwrap();
        let sentences = encode_documents(&mut entities, &docs).unwrap();
        let (mut s_out, mut m_out) = (Vec::new(), Vec::new());
        write_encoded(&sentences, &entities, &mut s_out, &mut m_out).unwrap();
        let (s_back, e_back) = read_encoded(&s_out[..], &m_out[..]).unwrap();
        assert_eq!(e_back, entities);
        assert_eq!(s_back[1..], sentences[1..]);
        assert_eq!(s_back[0].tokens, sentences[0].tokens);
    }

    proptest! {
        #[test]
        fn relation_render_roundtrip(label in 0usize..6, a in 1u32..50, b in 1u32..50, reverse: bool) {
            prop_assume!(a != b);
            let label = BaseLabel::ANNOTATED[label];
            let reverse = reverse && label.is_directional();
            let line = if reverse {
                format!("{label}(D9.{a},D9.{b},REVERSE)")
            } else {
                format!("{label}(D9.{a},D9.{b})")
            };
            let parsed = parse_relations(line.as_bytes()).unwrap();
            prop_assert_eq!(render_relation(&parsed[0]), line);
        }

        #[test]
        fn splitting_preserves_token_stream(
            words in proptest::collection::vec(
                prop_oneof![
                    Just("the"), Just("Model"), Just("."), Just("?"), Just("al."), Just("data."),
                    Just("X.1"), Just("X.2"), Just("(MT)"), Just("2010"), Just("e.g."), Just("\n\n")
                ],
                0..40,
            )
        ) {
            let text = words.join(" ");
            let sentences = split_sentences("X", &text);
            let flat: Vec<String> = sentences.iter().flat_map(|s| s.tokens.clone()).collect();
            prop_assert_eq!(flat, tokenize("X", &text));
            prop_assert!(sentences.iter().all(|s| !s.tokens.is_empty() && s.tokens.iter().all(|t| !t.is_empty())));
            prop_assert_eq!(split_sentences("X", &text), sentences);
        }
    }
}
