//! Dependency trees and the treebank file format.
//!
//! ```text
//! # sent_id = calcul
//! 1	j'	je	pron	num=sin|per=1	2	subj
//! 2	aime	aimer	verb	num=sin|per=1,3	0	root
//! ```
//!
//! Columns are `ID FORM LEMMA CAT FEATS HEAD DEPREL`; blocks are separated by a
//! blank line.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{Category, DepRel, FeatureError, Features, Variable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreebankError {
    #[error("sentence `{sentence}`, line {line}: expected 7 columns, found {found}")]
    ColumnCount { sentence: String, line: usize, found: usize },
    #[error("sentence `{sentence}`, line {line}: bad {column} `{value}`")]
    BadNumber {
        sentence: String,
        line: usize,
        column: &'static str,
        value: String,
    },
    #[error("sentence `{sentence}`, line {line}: {source}")]
    Feature {
        sentence: String,
        line: usize,
        #[source]
        source: FeatureError,
    },
    #[error("sentence `{sentence}`, line {line}: duplicate id {id}")]
    DuplicateId { sentence: String, line: usize, id: usize },
    #[error("sentence `{sentence}`, line {line}: expected id {expected}, found {found}")]
    Gap { sentence: String, line: usize, expected: usize, found: usize },
    #[error("sentence `{sentence}`, line {line}: head {head} does not exist")]
    DanglingHead { sentence: String, line: usize, head: usize },
    #[error("sentence `{sentence}`, line {line}: node {id} is its own ancestor")]
    Cycle { sentence: String, line: usize, id: usize },
    #[error("sentence `{sentence}`, line {line}: {count} root nodes, expected exactly one")]
    RootCount { sentence: String, line: usize, count: usize },
}

impl TreebankError {
    /// Line of the treebank text the error points at.
    pub fn line(&self) -> usize {
        match self {
            TreebankError::ColumnCount { line, .. }
            | TreebankError::BadNumber { line, .. }
            | TreebankError::Feature { line, .. }
            | TreebankError::DuplicateId { line, .. }
            | TreebankError::Gap { line, .. }
            | TreebankError::DanglingHead { line, .. }
            | TreebankError::Cycle { line, .. }
            | TreebankError::RootCount { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepNode {
    /// 1-based linear position.
    pub id: usize,
    pub surface: String,
    pub lemma: String,
    pub category: Category,
    pub features: Features,
    /// Governor id, 0 for the root.
    pub head: usize,
    pub deprel: DepRel,
}

impl DepNode {
    pub fn bears(&self, variable: Variable) -> bool {
        self.features.bears(variable)
    }
}

/// True iff `a` comes before `b` in the sentence.
pub fn precedes(a: &DepNode, b: &DepNode) -> bool {
    a.id < b.id
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepTree {
    pub sentence_id: String,
    pub nodes: Vec<DepNode>,
}

impl DepTree {
    /// Validates and builds a tree. Nodes must be in id order.
    pub fn new(sentence_id: impl Into<String>, nodes: Vec<DepNode>) -> Result<Self, TreebankError> {
        let tree = DepTree { sentence_id: sentence_id.into(), nodes };
        tree.validate(&vec![0; tree.nodes.len()])?;
        Ok(tree)
    }

    fn validate(&self, lines: &[usize]) -> Result<(), TreebankError> {
        let sentence = || self.sentence_id.clone();
        let n = self.nodes.len();
        for (i, node) in self.nodes.iter().enumerate() {
            let line = lines[i];
            if node.id != i + 1 {
                if self.nodes[..i].iter().any(|m| m.id == node.id) {
                    return Err(TreebankError::DuplicateId { sentence: sentence(), line, id: node.id });
                }
                return Err(TreebankError::Gap {
                    sentence: sentence(),
                    line,
                    expected: i + 1,
                    found: node.id,
                });
            }
            if node.head > n {
                return Err(TreebankError::DanglingHead { sentence: sentence(), line, head: node.head });
            }
        }
        let roots: Vec<usize> = (0..n).filter(|&i| self.nodes[i].head == 0).collect();
        if n > 0 && roots.len() != 1 {
            let line = roots.get(1).map(|&i| lines[i]).unwrap_or(lines[0]);
            return Err(TreebankError::RootCount { sentence: sentence(), line, count: roots.len() });
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let mut current = node.head;
            let mut steps = 0;
            while current != 0 {
                steps += 1;
                if current == node.id || steps > n {
                    return Err(TreebankError::Cycle { sentence: sentence(), line: lines[i], id: node.id });
                }
                current = self.nodes[current - 1].head;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node by 1-based id.
    pub fn node(&self, id: usize) -> &DepNode {
        &self.nodes[id - 1]
    }

    pub fn get(&self, id: usize) -> Option<&DepNode> {
        id.checked_sub(1).and_then(|i| self.nodes.get(i))
    }

    pub fn node_mut(&mut self, id: usize) -> &mut DepNode {
        &mut self.nodes[id - 1]
    }

    pub fn root(&self) -> Option<&DepNode> {
        self.nodes.iter().find(|n| n.head == 0)
    }

    /// Children in id order.
    pub fn children(&self, id: usize) -> impl Iterator<Item = &DepNode> {
        self.nodes.iter().filter(move |n| n.head == id)
    }

    pub fn parent(&self, id: usize) -> Option<&DepNode> {
        self.get(self.node(id).head)
    }

    /// Number of edges between the node and the root.
    pub fn depth(&self, id: usize) -> usize {
        let mut depth = 0;
        let mut current = self.node(id).head;
        while current != 0 {
            depth += 1;
            current = self.node(current).head;
        }
        depth
    }

    /// The node itself followed by its ancestors up to the root.
    pub fn path_to_root(&self, id: usize) -> Vec<usize> {
        let mut path = vec![id];
        let mut current = self.node(id).head;
        while current != 0 {
            path.push(current);
            current = self.node(current).head;
        }
        path
    }

    /// Surface text. Elided forms (ending in an apostrophe) attach to the next word.
    pub fn text(&self) -> String {
        self.render(|_, s| s.to_string())
    }

    pub fn render(&self, mut word: impl FnMut(&DepNode, &str) -> String) -> String {
        let mut out = String::new();
        let mut glue = true;
        for node in &self.nodes {
            if !glue {
                out.push(' ');
            }
            out.push_str(&word(node, &node.surface));
            glue = node.surface.ends_with('\'');
        }
        out
    }
}

fn node_line(node: &DepNode) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}",
        node.id, node.surface, node.lemma, node.category, node.features, node.head, node.deprel
    )
}

pub fn serialize_tree(tree: &DepTree) -> String {
    let mut out = format!("# sent_id = {}\n", tree.sentence_id);
    for node in &tree.nodes {
        out.push_str(&node_line(node));
        out.push('\n');
    }
    out
}

/// Blocks separated by one blank line. An empty list gives an empty string.
pub fn serialize_treebank(trees: &[DepTree]) -> String {
    trees.iter().map(serialize_tree).collect::<Vec<_>>().join("\n")
}

struct Block {
    sentence_id: Option<String>,
    first_line: usize,
    rows: Vec<(usize, String)>,
}

fn parse_block(block: Block, ordinal: usize) -> Result<DepTree, TreebankError> {
    let sentence = block
        .sentence_id
        .unwrap_or_else(|| format!("sentence-{ordinal}"));
    let mut nodes = Vec::with_capacity(block.rows.len());
    let mut lines = Vec::with_capacity(block.rows.len());
    for (line, row) in &block.rows {
        let line = *line;
        let cols: Vec<&str> = row.split('\t').map(str::trim).collect();
        if cols.len() != 7 {
            return Err(TreebankError::ColumnCount { sentence, line, found: cols.len() });
        }
        let number = |column: &'static str, value: &str| {
            value.parse::<usize>().map_err(|_| TreebankError::BadNumber {
                sentence: sentence.clone(),
                line,
                column,
                value: value.to_string(),
            })
        };
        let feature = |source| TreebankError::Feature { sentence: sentence.clone(), line, source };
        let id = number("id", cols[0])?;
        if id == 0 {
            return Err(TreebankError::BadNumber {
                sentence,
                line,
                column: "id",
                value: cols[0].to_string(),
            });
        }
        nodes.push(DepNode {
            id,
            surface: crate::lexicon::normalize_surface(cols[1]),
            lemma: cols[2].to_string(),
            category: cols[3].parse().map_err(feature)?,
            features: cols[4].parse().map_err(feature)?,
            head: number("head", cols[5])?,
            deprel: cols[6].parse().map_err(feature)?,
        });
        lines.push(line);
    }
    let tree = DepTree { sentence_id: sentence, nodes };
    if tree.nodes.is_empty() {
        return Err(TreebankError::RootCount {
            sentence: tree.sentence_id,
            line: block.first_line,
            count: 0,
        });
    }
    tree.validate(&lines)?;
    Ok(tree)
}

/// Parses every sentence block. Comment lines other than `# sent_id = ...`
/// are ignored.
pub fn parse_treebank(text: &str) -> Result<Vec<DepTree>, TreebankError> {
    let mut trees = Vec::new();
    let mut current: Option<Block> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() {
            if let Some(block) = current.take() {
                if !block.rows.is_empty() {
                    trees.push(parse_block(block, trees.len() + 1)?);
                } else {
                    current = Some(block);
                }
            }
            continue;
        }
        let block = current.get_or_insert_with(|| Block {
            sentence_id: None,
            first_line: line,
            rows: Vec::new(),
        });
        if let Some(comment) = raw.strip_prefix('#') {
            if let Some(id) = comment.trim().strip_prefix("sent_id") {
                let id = id.trim_start().trim_start_matches('=').trim();
                if !block.rows.is_empty() {
                    // a new sentence header without a separating blank line
                    let finished = current.take().unwrap();
                    trees.push(parse_block(finished, trees.len() + 1)?);
                    current = Some(Block {
                        sentence_id: Some(id.to_string()),
                        first_line: line,
                        rows: Vec::new(),
                    });
                } else {
                    block.sentence_id = Some(id.to_string());
                }
            }
            continue;
        }
        block.rows.push((line, raw.to_string()));
    }
    if let Some(block) = current {
        if !block.rows.is_empty() {
            trees.push(parse_block(block, trees.len() + 1)?);
        }
    }
    Ok(trees)
}
