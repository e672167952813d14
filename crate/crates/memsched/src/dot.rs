//! Parser for a practical subset of Graphviz DOT digraphs.
//!
//! Recognized: `[strict] digraph [name] { ... }` with node statements
//! (`id [work=5, mem=100]`), edge chains (`a -> b -> c [size=3]`) and quoted
//! identifiers. Node attributes `work`/`mem` and the edge attribute `size`
//! carry weights; anything else (including `graph`/`node`/`edge` default
//! blocks) is parsed and ignored. Tasks get dense ids in order of first
//! appearance, and absent weights fall back to the small-task defaults.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::workflow::{EdgeFile, Task, TaskId, Workflow, DEFAULT_EDGE_SIZE, DEFAULT_MEM, DEFAULT_WORK};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    Arrow,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Eq,
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let mut toks = Vec::new();
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '/' => {
                chars.next();
                match chars.peek() {
                    Some('/') => {
                        while let Some(&c) = chars.peek() {
                            if c == '\n' {
                                break;
                            }
                            chars.next();
                        }
                    }
                    Some('*') => {
                        chars.next();
                        let mut prev = ' ';
                        loop {
                            match chars.next() {
                                Some('/') if prev == '*' => break,
                                Some(c) => prev = c,
                                None => return Err(Error::Parse("unterminated /* comment".into())),
                            }
                        }
                    }
                    _ => return Err(Error::Parse("unexpected '/'".into())),
                }
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('\\') => {
                            if let Some(c) = chars.next() {
                                s.push(c);
                            }
                        }
                        Some('"') => break,
                        Some(c) => s.push(c),
                        None => return Err(Error::Parse("unterminated string".into())),
                    }
                }
                toks.push(Tok::Id(s));
            }
            '-' => {
                chars.next();
                match chars.next() {
                    Some('>') => toks.push(Tok::Arrow),
                    other => {
                        return Err(Error::Parse(format!(
                            "expected '->', found '-{}'",
                            other.map(String::from).unwrap_or_default()
                        )))
                    }
                }
            }
            '{' => {
                chars.next();
                toks.push(Tok::LBrace);
            }
            '}' => {
                chars.next();
                toks.push(Tok::RBrace);
            }
            '[' => {
                chars.next();
                toks.push(Tok::LBracket);
            }
            ']' => {
                chars.next();
                toks.push(Tok::RBracket);
            }
            ';' => {
                chars.next();
                toks.push(Tok::Semi);
            }
            ',' => {
                chars.next();
                toks.push(Tok::Comma);
            }
            '=' => {
                chars.next();
                toks.push(Tok::Eq);
            }
            c if c.is_alphanumeric() || c == '_' || c == '.' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' || c == '.' {
                        s.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                toks.push(Tok::Id(s));
            }
            other => return Err(Error::Parse(format!("unexpected character '{other}'"))),
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    names: Vec<String>,
    ids: HashMap<String, TaskId>,
    work: Vec<Option<u64>>,
    mem: Vec<Option<u64>>,
    edges: Vec<EdgeFile>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.next() {
            Some(found) if found == t => Ok(()),
            found => Err(Error::Parse(format!("expected {t:?}, found {found:?}"))),
        }
    }

    fn node_id(&mut self, name: &str) -> TaskId {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as TaskId;
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        self.work.push(None);
        self.mem.push(None);
        id
    }

    /// Parses `[k=v, ...]*` and returns the recognized numeric attributes.
    fn attr_list(&mut self) -> Result<HashMap<String, u64>> {
        let mut attrs = HashMap::new();
        while self.peek() == Some(&Tok::LBracket) {
            self.next();
            loop {
                match self.next() {
                    Some(Tok::RBracket) => break,
                    Some(Tok::Comma) | Some(Tok::Semi) => continue,
                    Some(Tok::Id(key)) => {
                        self.expect(Tok::Eq)?;
                        match self.next() {
                            Some(Tok::Id(val)) => {
                                if let Ok(v) = val.parse::<u64>() {
                                    attrs.insert(key, v);
                                }
                            }
                            found => {
                                return Err(Error::Parse(format!(
                                    "expected attribute value, found {found:?}"
                                )))
                            }
                        }
                    }
                    found => {
                        return Err(Error::Parse(format!(
                            "expected attribute name, found {found:?}"
                        )))
                    }
                }
            }
        }
        Ok(attrs)
    }

    fn statement(&mut self) -> Result<()> {
        let first = match self.next() {
            Some(Tok::Id(s)) => s,
            Some(Tok::Semi) => return Ok(()),
            found => return Err(Error::Parse(format!("expected statement, found {found:?}"))),
        };

        // Default-attribute blocks: recognized, ignored.
        if matches!(first.as_str(), "graph" | "node" | "edge") && self.peek() == Some(&Tok::LBracket)
        {
            self.attr_list()?;
            return Ok(());
        }
        // Graph-level attribute: id = value.
        if self.peek() == Some(&Tok::Eq) {
            self.next();
            match self.next() {
                Some(Tok::Id(_)) => return Ok(()),
                found => return Err(Error::Parse(format!("expected value, found {found:?}"))),
            }
        }

        let mut chain = vec![self.node_id(&first)];
        while self.peek() == Some(&Tok::Arrow) {
            self.next();
            match self.next() {
                Some(Tok::Id(s)) => chain.push(self.node_id(&s)),
                found => return Err(Error::Parse(format!("expected node, found {found:?}"))),
            }
        }
        let attrs = self.attr_list()?;

        if chain.len() == 1 {
            let id = chain[0] as usize;
            if let Some(&w) = attrs.get("work") {
                self.work[id] = Some(w);
            }
            if let Some(&m) = attrs.get("mem") {
                self.mem[id] = Some(m);
            }
        } else {
            let size = attrs.get("size").copied().unwrap_or(DEFAULT_EDGE_SIZE);
            for pair in chain.windows(2) {
                self.edges.push(EdgeFile {
                    src: pair[0],
                    dst: pair[1],
                    size,
                });
            }
        }
        Ok(())
    }
}

/// Parses DOT text into a validated workflow.
pub fn parse_dot(src: &str) -> Result<Workflow> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        names: Vec::new(),
        ids: HashMap::new(),
        work: Vec::new(),
        mem: Vec::new(),
        edges: Vec::new(),
    };

    match p.next() {
        Some(Tok::Id(s)) if s == "strict" => match p.next() {
            Some(Tok::Id(s)) if s == "digraph" => {}
            found => return Err(Error::Parse(format!("expected 'digraph', found {found:?}"))),
        },
        Some(Tok::Id(s)) if s == "digraph" => {}
        found => return Err(Error::Parse(format!("expected 'digraph', found {found:?}"))),
    }
    if let Some(Tok::Id(_)) = p.peek() {
        p.next();
    }
    p.expect(Tok::LBrace)?;
    while p.peek() != Some(&Tok::RBrace) {
        if p.peek().is_none() {
            return Err(Error::Parse("unexpected end of input".into()));
        }
        p.statement()?;
    }

    let tasks = p
        .names
        .iter()
        .enumerate()
        .map(|(i, name)| Task {
            id: i as TaskId,
            name: name.clone(),
            work: p.work[i].unwrap_or(DEFAULT_WORK),
            mem: p.mem[i].unwrap_or(DEFAULT_MEM),
        })
        .collect();
    Workflow::new(tasks, p.edges)
}
