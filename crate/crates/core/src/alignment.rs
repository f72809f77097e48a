//! Word alignments as bipartite graphs and their reduction to a matching.
//!
//! Positions are 0-based throughout; edges are always stored source → target.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignmentError {
    #[error("malformed alignment pair {0:?}")]
    MalformedPair(String),
    #[error("source index out of range: {index} >= {len}")]
    SourceOutOfRange { index: usize, len: usize },
    #[error("target index out of range: {index} >= {len}")]
    TargetOutOfRange { index: usize, len: usize },
    #[error("{side} tag list has {found} entries, graph has {expected} positions")]
    TagCountMismatch {
        side: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("cannot merge graphs of sizes {0:?} and {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
}

/// Many-to-many alignment between `n_src` source and `n_tgt` target tokens.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AlignmentGraph {
    n_src: usize,
    n_tgt: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl AlignmentGraph {
    pub fn empty(n_src: usize, n_tgt: usize) -> Self {
        AlignmentGraph {
            n_src,
            n_tgt,
            edges: BTreeSet::new(),
        }
    }

    /// Builds a graph, checking every edge against the dimensions.
    /// Duplicate edges collapse.
    pub fn new(
        n_src: usize,
        n_tgt: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, AlignmentError> {
        let mut g = Self::empty(n_src, n_tgt);
        for (s, t) in edges {
            g.insert(s, t)?;
        }
        Ok(g)
    }

    pub fn insert(&mut self, src: usize, tgt: usize) -> Result<bool, AlignmentError> {
        if src >= self.n_src {
            return Err(AlignmentError::SourceOutOfRange {
                index: src,
                len: self.n_src,
            });
        }
        if tgt >= self.n_tgt {
            return Err(AlignmentError::TargetOutOfRange {
                index: tgt,
                len: self.n_tgt,
            });
        }
        Ok(self.edges.insert((src, tgt)))
    }

    /// Identity alignment of two equally long sentences.
    pub fn identity(n: usize) -> Self {
        AlignmentGraph {
            n_src: n,
            n_tgt: n,
            edges: (0..n).map(|i| (i, i)).collect(),
        }
    }

    pub fn n_src(&self) -> usize {
        self.n_src
    }

    pub fn n_tgt(&self) -> usize {
        self.n_tgt
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, src: usize, tgt: usize) -> bool {
        self.edges.contains(&(src, tgt))
    }

    /// Targets aligned to `src`, ascending.
    pub fn targets_of(&self, src: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .range((src, 0)..=(src, usize::MAX))
            .map(|&(_, t)| t)
    }

    pub fn src_degree(&self, src: usize) -> usize {
        self.targets_of(src).count()
    }

    /// Swaps the roles of source and target.
    pub fn transpose(&self) -> Self {
        AlignmentGraph {
            n_src: self.n_tgt,
            n_tgt: self.n_src,
            edges: self.edges.iter().map(|&(s, t)| (t, s)).collect(),
        }
    }

    /// Combines two alignments of the same sentence pair.
    pub fn merge(&self, other: &Self, mode: MergeMode) -> Result<Self, AlignmentError> {
        if (self.n_src, self.n_tgt) != (other.n_src, other.n_tgt) {
            return Err(AlignmentError::ShapeMismatch(
                (self.n_src, self.n_tgt),
                (other.n_src, other.n_tgt),
            ));
        }
        let edges = match mode {
            MergeMode::Union => self.edges.union(&other.edges).copied().collect(),
            MergeMode::Intersection => self.edges.intersection(&other.edges).copied().collect(),
        };
        Ok(AlignmentGraph {
            n_src: self.n_src,
            n_tgt: self.n_tgt,
            edges,
        })
    }

    /// Renders the edges as a Pharaoh line.
    pub fn to_pharaoh(&self) -> String {
        pairs_to_pharaoh(self.edges.iter().copied())
    }
}

fn pairs_to_pharaoh(pairs: impl Iterator<Item = (usize, usize)>) -> String {
    pairs
        .map(|(s, t)| format!("{s}-{t}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// How forward and backward alignments of one sentence pair are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeMode {
    #[default]
    Union,
    Intersection,
}

impl fmt::Display for MergeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MergeMode::Union => "union",
            MergeMode::Intersection => "intersection",
        })
    }
}

impl FromStr for MergeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "union" => Ok(MergeMode::Union),
            "intersection" => Ok(MergeMode::Intersection),
            other => Err(format!(
                "unknown merge mode {other:?} (expected union or intersection)"
            )),
        }
    }
}

/// Parses one line of whitespace-separated `i-j` pairs.
pub fn parse_pharaoh(line: &str, n_src: usize, n_tgt: usize) -> Result<AlignmentGraph, AlignmentError> {
    let mut g = AlignmentGraph::empty(n_src, n_tgt);
    for item in line.split_whitespace() {
        let (s, t) = parse_pair(item)?;
        g.insert(s, t)?;
    }
    Ok(g)
}

/// Parses a Pharaoh line without known dimensions; the graph is sized to the
/// largest indices seen.
pub fn parse_pharaoh_unsized(line: &str) -> Result<AlignmentGraph, AlignmentError> {
    let pairs = line
        .split_whitespace()
        .map(parse_pair)
        .collect::<Result<Vec<_>, _>>()?;
    let n_src = pairs.iter().map(|&(s, _)| s + 1).max().unwrap_or(0);
    let n_tgt = pairs.iter().map(|&(_, t)| t + 1).max().unwrap_or(0);
    AlignmentGraph::new(n_src, n_tgt, pairs)
}

fn parse_pair(item: &str) -> Result<(usize, usize), AlignmentError> {
    let malformed = || AlignmentError::MalformedPair(item.to_owned());
    let (a, b) = item.split_once('-').ok_or_else(malformed)?;
    let index = |s: &str| -> Result<usize, AlignmentError> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        s.parse().map_err(|_| malformed())
    };
    Ok((index(a)?, index(b)?))
}

/// Keeps, for every source position with several alignments, only the edges
/// whose target tag equals the source tag. A position whose edges would all
/// be dropped keeps its original edges.
pub fn filter_by_pos<S: AsRef<str>, T: AsRef<str>>(
    g: &AlignmentGraph,
    src_upos: &[S],
    tgt_upos: &[T],
) -> Result<AlignmentGraph, AlignmentError> {
    if src_upos.len() != g.n_src {
        return Err(AlignmentError::TagCountMismatch {
            side: "source",
            expected: g.n_src,
            found: src_upos.len(),
        });
    }
    if tgt_upos.len() != g.n_tgt {
        return Err(AlignmentError::TagCountMismatch {
            side: "target",
            expected: g.n_tgt,
            found: tgt_upos.len(),
        });
    }
    let mut out = AlignmentGraph::empty(g.n_src, g.n_tgt);
    for src in 0..g.n_src {
        let targets: Vec<usize> = g.targets_of(src).collect();
        let tag = src_upos[src].as_ref();
        let agreeing: Vec<usize> = targets
            .iter()
            .copied()
            .filter(|&t| tgt_upos[t].as_ref() == tag)
            .collect();
        let kept = if targets.len() < 2 || agreeing.is_empty() {
            targets
        } else {
            agreeing
        };
        out.edges.extend(kept.into_iter().map(|t| (src, t)));
    }
    Ok(out)
}

/// Drops every edge touching `src` or `tgt`.
pub fn remove_incident(g: &AlignmentGraph, src: usize, tgt: usize) -> AlignmentGraph {
    AlignmentGraph {
        n_src: g.n_src,
        n_tgt: g.n_tgt,
        edges: g
            .edges
            .iter()
            .copied()
            .filter(|&(s, t)| s != src && t != tgt)
            .collect(),
    }
}

/// A set of alignment pairs in which every position occurs at most once.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Matching {
    by_src: BTreeMap<usize, usize>,
    by_tgt: BTreeMap<usize, usize>,
}

impl Matching {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a pair; returns `false` and leaves the matching unchanged if
    /// either endpoint is already matched.
    pub fn insert(&mut self, src: usize, tgt: usize) -> bool {
        if self.by_src.contains_key(&src) || self.by_tgt.contains_key(&tgt) {
            return false;
        }
        self.by_src.insert(src, tgt);
        self.by_tgt.insert(tgt, src);
        true
    }

    pub fn len(&self) -> usize {
        self.by_src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_src.is_empty()
    }

    pub fn target_of(&self, src: usize) -> Option<usize> {
        self.by_src.get(&src).copied()
    }

    pub fn source_of(&self, tgt: usize) -> Option<usize> {
        self.by_tgt.get(&tgt).copied()
    }

    pub fn contains(&self, src: usize, tgt: usize) -> bool {
        self.target_of(src) == Some(tgt)
    }

    /// Pairs ordered by source position.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.by_src.iter().map(|(&s, &t)| (s, t))
    }

    pub fn to_pharaoh(&self) -> String {
        pairs_to_pharaoh(self.pairs())
    }
}

const UNMATCHED: usize = usize::MAX;

/// Maximum-cardinality matching by Hopcroft–Karp.
///
/// Vertices and neighbours are visited in ascending index order, so the
/// result is fully determined by the edge set.
pub fn maximum_matching(g: &AlignmentGraph) -> Matching {
    let n_src = g.n_src;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n_src];
    // BTreeSet iteration keeps each list sorted.
    for &(s, t) in &g.edges {
        adj[s].push(t);
    }
    let mut mate_src = vec![UNMATCHED; n_src];
    let mut mate_tgt = vec![UNMATCHED; g.n_tgt];
    let mut dist = vec![usize::MAX; n_src];

    loop {
        // Layer the free source vertices and everything reachable from them
        // along alternating paths.
        let mut queue = VecDeque::new();
        for s in 0..n_src {
            if mate_src[s] == UNMATCHED {
                dist[s] = 0;
                queue.push_back(s);
            } else {
                dist[s] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(s) = queue.pop_front() {
            for &t in &adj[s] {
                let next = mate_tgt[t];
                if next == UNMATCHED {
                    found = true;
                } else if dist[next] == usize::MAX {
                    dist[next] = dist[s] + 1;
                    queue.push_back(next);
                }
            }
        }
        if !found {
            break;
        }
        let mut next_edge = vec![0usize; n_src];
        for s in 0..n_src {
            if mate_src[s] == UNMATCHED {
                augment(s, &adj, &mut mate_src, &mut mate_tgt, &mut dist, &mut next_edge);
            }
        }
    }

    let mut m = Matching::new();
    for (s, &t) in mate_src.iter().enumerate() {
        if t != UNMATCHED {
            m.insert(s, t);
        }
    }
    m
}

/// Searches a shortest augmenting path from `s` within the current layering.
fn augment(
    s: usize,
    adj: &[Vec<usize>],
    mate_src: &mut [usize],
    mate_tgt: &mut [usize],
    dist: &mut [usize],
    next_edge: &mut [usize],
) -> bool {
    while next_edge[s] < adj[s].len() {
        let t = adj[s][next_edge[s]];
        next_edge[s] += 1;
        let next = mate_tgt[t];
        let extends = if next == UNMATCHED {
            true
        } else {
            dist[next] == dist[s].wrapping_add(1)
                && augment(next, adj, mate_src, mate_tgt, dist, next_edge)
        };
        if extends {
            mate_src[s] = t;
            mate_tgt[t] = s;
            return true;
        }
    }
    dist[s] = usize::MAX;
    false
}
