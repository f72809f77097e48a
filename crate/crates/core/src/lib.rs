//! Projection of dependency annotations from a parsed source treebank onto
//! word-aligned target sentences, and evaluation of the projected trees.
//!
//! The pipeline per sentence pair is: look up target lemmas and tags in a
//! morphological lexicon ([`morph`]), filter the alignment by tag agreement
//! and reduce it to a matching ([`alignment`]), then transfer the tree
//! ([`projection`]). [`eval`] and [`analysis`] score the result against gold
//! annotations.

pub mod alignment;
pub mod analysis;
pub mod cli;
pub mod conllu;
pub mod eval;
pub mod morph;
pub mod projection;

pub use alignment::{AlignmentGraph, Matching, MergeMode};
pub use conllu::{parse_conllu, serialize_conllu, validate_tree, Sentence, Token, Treebank};
pub use morph::{Analysis, MorphLexicon, TagMap};
pub use projection::{project_sentence, project_treebank, ProjectionOptions, Provenance};
