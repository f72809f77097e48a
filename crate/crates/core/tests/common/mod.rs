//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, RngCore};
use treeproj::{AlignmentGraph, Sentence, Token, Treebank};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
        .join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

pub const TAGS: [&str; 6] = ["NOUN", "VERB", "ADJ", "PRON", "ADV", "PUNCT"];
pub const DEPRELS: [&str; 7] = ["nsubj", "obj", "obl", "obl:cau", "nmod:poss", "advmod", "punct"];
const LETTERS: [char; 6] = ['a', 'b', 'ы', 'ң', 'ö', 'k'];

pub fn random_graph(rng: &mut impl RngCore, max_side: usize) -> AlignmentGraph {
    let n_src = rng.random_range(0..=max_side);
    let n_tgt = rng.random_range(0..=max_side);
    let density: f64 = rng.random_range(0.05..0.6);
    let mut edges = Vec::new();
    for s in 0..n_src {
        for t in 0..n_tgt {
            if rng.random_bool(density) {
                edges.push((s, t));
            }
        }
    }
    AlignmentGraph::new(n_src, n_tgt, edges).unwrap()
}

/// Exhaustive maximum matching size: best over every way of assigning each
/// source vertex a distinct free target or nothing, memoised on the set of
/// used targets.
pub fn brute_force_matching_size(g: &AlignmentGraph) -> usize {
    fn best(
        s: usize,
        used: u32,
        adj: &[Vec<usize>],
        memo: &mut HashMap<(usize, u32), usize>,
    ) -> usize {
        if s == adj.len() {
            return 0;
        }
        if let Some(&v) = memo.get(&(s, used)) {
            return v;
        }
        let mut v = best(s + 1, used, adj, memo);
        for &t in &adj[s] {
            if used & (1 << t) == 0 {
                v = v.max(1 + best(s + 1, used | (1 << t), adj, memo));
            }
        }
        memo.insert((s, used), v);
        v
    }
    assert!(g.n_tgt() <= 32);
    let mut adj = vec![Vec::new(); g.n_src()];
    for &(s, t) in g.edges() {
        adj[s].push(t);
    }
    best(0, 0, &adj, &mut HashMap::new())
}

/// True iff the heads form a single rooted tree, checked with union-find:
/// one root, every head set and in range, and no arc closes a cycle.
pub fn union_find_is_tree(s: &Sentence) -> bool {
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut x = x;
        while p[x] != r {
            let next = p[x];
            p[x] = r;
            x = next;
        }
        r
    }
    let n = s.tokens.len();
    let mut roots = 0;
    // node 0 is the artificial root
    let mut parent: Vec<usize> = (0..=n).collect();
    for t in &s.tokens {
        let Some(h) = t.head else { return false };
        if h > n {
            return false;
        }
        if h == 0 {
            roots += 1;
        }
        let (a, b) = (find(&mut parent, t.id), find(&mut parent, h));
        if a == b {
            return false;
        }
        parent[a] = b;
    }
    roots == 1
}

pub fn random_form(rng: &mut impl RngCore) -> String {
    let len = rng.random_range(1..=3);
    (0..len)
        .map(|_| *LETTERS.choose(rng).unwrap())
        .collect()
}

/// Random heads over `n` tokens: an arbitrary mix of trees, forests, cycles
/// and unset heads.
pub fn random_heads(rng: &mut impl RngCore, n: usize) -> Vec<Option<usize>> {
    (0..n)
        .map(|i| {
            if rng.random_bool(0.05) {
                None
            } else {
                let mut h = rng.random_range(0..=n);
                if h == i + 1 {
                    h = 0;
                }
                Some(h)
            }
        })
        .collect()
}

/// Heads of a uniformly shaped random rooted tree over `n` tokens.
pub fn random_tree_heads(rng: &mut impl RngCore, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut heads = vec![0; n];
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        heads[order[k] - 1] = parent;
    }
    heads
}

/// A random annotated sentence whose head relation is a valid tree.
pub fn random_sentence(rng: &mut impl RngCore, n: usize) -> Sentence {
    let heads = random_tree_heads(rng, n);
    let tokens = heads
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let mut t = Token::new(i + 1, random_form(rng));
            t.lemma = random_form(rng);
            t.upos = TAGS.choose(rng).unwrap().to_string();
            t.head = Some(h);
            t.deprel = if h == 0 {
                "root".into()
            } else {
                DEPRELS.choose(rng).unwrap().to_string()
            };
            t
        })
        .collect();
    Sentence::new(tokens)
}

pub fn random_treebank(rng: &mut impl RngCore, sentences: usize, max_len: usize) -> Treebank {
    Treebank::new(
        (0..sentences)
            .map(|_| {
                let n = rng.random_range(1..=max_len);
                random_sentence(rng, n)
            })
            .collect(),
    )
}

/// Same-text copy of `s` with random annotation changes.
pub fn perturb(rng: &mut impl RngCore, s: &Sentence) -> Sentence {
    let mut out = s.clone();
    let n = out.tokens.len();
    for t in &mut out.tokens {
        if rng.random_bool(0.3) {
            t.head = Some(rng.random_range(0..=n));
        }
        if rng.random_bool(0.3) {
            t.deprel = DEPRELS.choose(rng).unwrap().to_string();
        }
        if rng.random_bool(0.3) {
            t.upos = TAGS.choose(rng).unwrap().to_string();
        }
        if rng.random_bool(0.3) {
            t.lemma = random_form(rng);
        }
    }
    out
}

/// Re-tokenizes the text of `s` at random boundaries, keeping the characters.
pub fn retokenize(rng: &mut impl RngCore, s: &Sentence) -> Sentence {
    let chars: Vec<char> = s.tokens.iter().flat_map(|t| t.form.chars()).collect();
    let mut forms = Vec::new();
    let mut cur = String::new();
    for (i, c) in chars.iter().enumerate() {
        cur.push(*c);
        if i + 1 == chars.len() || rng.random_bool(0.4) {
            forms.push(std::mem::take(&mut cur));
        }
    }
    let n = forms.len();
    let heads = random_tree_heads(rng, n);
    Sentence::new(
        forms
            .into_iter()
            .zip(heads)
            .enumerate()
            .map(|(i, (f, h))| {
                let mut t = Token::new(i + 1, f);
                t.head = Some(h);
                t.deprel = if h == 0 { "root".into() } else { "dep".into() };
                t
            })
            .collect(),
    )
}

/// Counts `(lemmas, upos, uas, las)` by checking every gold/system token
/// pair directly. Two tokens correspond iff their character offsets agree.
pub fn brute_force_counts(gold: &Sentence, system: &Sentence) -> (u64, u64, u64, u64) {
    let offsets = |s: &Sentence| -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, t) in s.tokens.iter().enumerate() {
            let start: usize = s.tokens[..i].iter().map(|u| u.form.chars().count()).sum();
            out.push((start, start + t.form.chars().count()));
        }
        out
    };
    let (go, so) = (offsets(gold), offsets(system));
    let corresponds = |g: usize, s: usize| go[g] == so[s];
    let (mut lemmas, mut upos, mut uas, mut las) = (0, 0, 0, 0);
    for g in 0..gold.tokens.len() {
        for s in 0..system.tokens.len() {
            if !corresponds(g, s) {
                continue;
            }
            let (gt, st) = (&gold.tokens[g], &system.tokens[s]);
            if gt.lemma == st.lemma {
                lemmas += 1;
            }
            if gt.upos == st.upos {
                upos += 1;
            }
            let head_ok = match (gt.head.unwrap(), st.head.unwrap()) {
                (0, 0) => true,
                (0, _) | (_, 0) => false,
                (gh, sh) => corresponds(gh - 1, sh - 1),
            };
            if head_ok {
                uas += 1;
                if gt.deprel == st.deprel {
                    las += 1;
                }
            }
        }
    }
    (lemmas, upos, uas, las)
}
