use std::fmt;
use std::io::{self, BufRead};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("tree has no tokens")]
    Empty,
    #[error("{heads} heads, {relations} relations and {pos} POS tags")]
    LengthMismatch { heads: usize, relations: usize, pos: usize },
    #[error("token {token} points at head {head}, outside the sentence")]
    HeadOutOfRange { token: usize, head: usize },
    #[error("token {0} is its own head")]
    SelfLoop(usize),
    #[error("no root token")]
    NoRoot,
    #[error("several root tokens: {0:?}")]
    MultipleRoots(Vec<usize>),
    #[error("head chain from token {0} loops")]
    Cycle(usize),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("tree has {tree} tokens, sentence has {sentence}")]
    TokenCount { tree: usize, sentence: usize },
}

/// A validated dependency tree over 0-based token positions.
///
/// Guaranteed to have exactly one root and an acyclic head graph, so every
/// walk up the heads ends at the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepTree {
    forms: Vec<String>,
    heads: Vec<Option<usize>>,
    relations: Vec<String>,
    pos: Vec<String>,
    root: usize,
}

impl DepTree {
    /// `heads[i]` is `None` for the root.
    pub fn new(
        forms: Vec<String>,
        heads: Vec<Option<usize>>,
        relations: Vec<String>,
        pos: Vec<String>,
    ) -> Result<DepTree, TreeError> {
        let n = heads.len();
        if n == 0 {
            return Err(TreeError::Empty);
        }
        if relations.len() != n || pos.len() != n || forms.len() != n {
            return Err(TreeError::LengthMismatch {
                heads: n,
                relations: relations.len(),
                pos: pos.len(),
            });
        }
        for (token, head) in heads.iter().enumerate() {
            match *head {
                Some(h) if h >= n => return Err(TreeError::HeadOutOfRange { token, head: h }),
                Some(h) if h == token => return Err(TreeError::SelfLoop(token)),
                _ => {}
            }
        }
        let roots: Vec<usize> = (0..n).filter(|&i| heads[i].is_none()).collect();
        let root = match roots.as_slice() {
            [] => return Err(TreeError::NoRoot),
            [r] => *r,
            _ => return Err(TreeError::MultipleRoots(roots)),
        };
        // 0 = unvisited, 1 = on the current path, 2 = reaches the root
        let mut state = vec![0u8; n];
        state[root] = 2;
        for start in 0..n {
            let mut path = Vec::new();
            let mut cur = start;
            while state[cur] == 0 {
                state[cur] = 1;
                path.push(cur);
                cur = heads[cur].expect("only the root lacks a head");
            }
            if state[cur] == 1 {
                return Err(TreeError::Cycle(start));
            }
            for p in path {
                state[p] = 2;
            }
        }
        Ok(DepTree {
            forms,
            heads,
            relations,
            pos,
            root,
        })
    }

    /// Builds a tree from CoNLL-style 1-based heads (0 marks the root).
    pub fn from_conll_heads<S: AsRef<str>>(heads: &[usize], relations: &[S]) -> Result<DepTree, TreeError> {
        let n = heads.len();
        let mut zero_based = Vec::with_capacity(n);
        for (token, &h) in heads.iter().enumerate() {
            if h > n {
                return Err(TreeError::HeadOutOfRange { token, head: h - 1 });
            }
            zero_based.push(h.checked_sub(1));
        }
        DepTree::new(
            (0..n).map(|i| format!("w{i}")).collect(),
            zero_based,
            relations.iter().map(|r| r.as_ref().to_string()).collect(),
            vec!["_".to_string(); n],
        )
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn head(&self, token: usize) -> Option<usize> {
        self.heads[token]
    }

    pub fn relation(&self, token: usize) -> &str {
        &self.relations[token]
    }

    /// The relation without its subtype (`nmod:poss` becomes `nmod`).
    pub fn base_relation(&self, token: usize) -> &str {
        let rel = self.relation(token);
        rel.split_once(':').map_or(rel, |(base, _)| base)
    }

    pub fn pos(&self, token: usize) -> &str {
        &self.pos[token]
    }

    pub fn form(&self, token: usize) -> &str {
        &self.forms[token]
    }

    pub fn children(&self, token: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.heads[i] == Some(token))
    }

    /// Whether `token` lies strictly below `ancestor`.
    pub fn is_proper_descendant(&self, token: usize, ancestor: usize) -> bool {
        let mut cur = self.heads[token];
        while let Some(h) = cur {
            if h == ancestor {
                return true;
            }
            cur = self.heads[h];
        }
        false
    }
}

impl fmt::Display for DepTree {
    /// Five-column form: id, form, head, relation, POS.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            let head = self.heads[i].map_or(0, |h| h + 1);
            writeln!(
                f,
                "{}\t{}\t{}\t{}\t{}",
                i + 1,
                self.forms[i],
                head,
                self.relations[i],
                self.pos[i]
            )?;
        }
        Ok(())
    }
}

fn parse_block(lines: &[(usize, String)]) -> Result<DepTree, TreeError> {
    let mut forms = Vec::new();
    let mut heads = Vec::new();
    let mut relations = Vec::new();
    let mut pos = Vec::new();
    for (line_no, line) in lines {
        let cols: Vec<&str> = line.split('\t').collect();
        let cols = if cols.len() == 1 {
            line.split_whitespace().collect()
        } else {
            cols
        };
        let format = |message: String| TreeError::Format {
            line: *line_no,
            message,
        };
        // multiword ranges (1-2) and empty nodes (1.1) carry no head
        if cols[0].contains(['-', '.']) {
            continue;
        }
        let (form, head, rel, upos) = match cols.len() {
            10 => (cols[1], cols[6], cols[7], cols[3]),
            5 => (cols[1], cols[2], cols[3], cols[4]),
            n => return Err(format(format!("expected 10 or 5 columns, found {n}"))),
        };
        let id: usize = cols[0]
            .parse()
            .map_err(|_| format(format!("bad token id `{}`", cols[0])))?;
        if id != forms.len() + 1 {
            return Err(format(format!("token id {id} out of sequence")));
        }
        let head: usize = head.parse().map_err(|_| format(format!("bad head `{head}`")))?;
        forms.push(form.to_string());
        heads.push(head);
        relations.push(rel.to_string());
        pos.push(upos.to_string());
    }
    let n = heads.len();
    let mut zero_based = Vec::with_capacity(n);
    for (token, &h) in heads.iter().enumerate() {
        if h > n {
            return Err(TreeError::HeadOutOfRange { token, head: h - 1 });
        }
        zero_based.push(h.checked_sub(1));
    }
    DepTree::new(forms, zero_based, relations, pos)
}

/// Reads blank-line separated CoNLL-U blocks.
///
/// Accepts the standard ten columns or the five-column
/// `id form head deprel upos` layout. Each block yields a tree or the reason it
/// is unusable; a bad block does not affect its neighbours.
pub fn read_conllu<R: BufRead>(reader: R) -> io::Result<Vec<Result<DepTree, TreeError>>> {
    let mut out = Vec::new();
    let mut block: Vec<(usize, String)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            if !block.is_empty() {
                out.push(parse_block(&block));
                block.clear();
            }
            continue;
        }
        if trimmed.starts_with('#') {
            continue;
        }
        block.push((i + 1, trimmed.to_string()));
    }
    if !block.is_empty() {
        out.push(parse_block(&block));
    }
    Ok(out)
}
