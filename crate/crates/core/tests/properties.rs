mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use treeproj::alignment::{filter_by_pos, maximum_matching};
use treeproj::analysis::{relation_table_with, LabelMatch};
use treeproj::conllu::{parse_conllu, serialize_conllu, validate_tree};
use treeproj::eval::score;
use treeproj::morph::{MorphLexicon, TagMap};
use treeproj::projection::{project_treebank, ProjectionOptions, Provenance, RootOrder, SentenceAlignment};
use treeproj::{AlignmentGraph, MergeMode, Sentence, Token, Treebank};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn graph_strategy(max_side: usize) -> impl Strategy<Value = AlignmentGraph> {
    (0..=max_side, 0..=max_side).prop_flat_map(|(n_src, n_tgt)| {
        let cells = n_src * n_tgt;
        proptest::collection::vec(any::<bool>(), cells).prop_map(move |bits| {
            let edges = bits
                .iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(|(i, _)| (i / n_tgt, i % n_tgt));
            AlignmentGraph::new(n_src, n_tgt, edges).unwrap()
        })
    })
}

fn options_strategy() -> impl Strategy<Value = ProjectionOptions> {
    (
        prop_oneof![Just(MergeMode::Union), Just(MergeMode::Intersection)],
        prop_oneof![Just(RootOrder::FilterFirst), Just(RootOrder::RootFirst)],
    )
        .prop_map(|(merge, order)| ProjectionOptions { merge, swap: false, order })
}

fn lexicon() -> MorphLexicon {
    let rows = "a\ta\tn\nb\tb\tv\nk\tk\tadj\nы\tы\tprn\nab\tab\tn\nbk\tbk\tv\n";
    MorphLexicon::from_tsv(rows, &TagMap::builtin()).unwrap().0
}

/// Target side and two alignment runs for `src`, from `seed`.
fn synthetic_pair(seed: u64, src: &Sentence) -> (Vec<String>, SentenceAlignment) {
    use rand::Rng;
    let mut r = rng(seed);
    let n_tgt = r.random_range(1..=src.len() + 3);
    let forms = (0..n_tgt).map(|_| random_form(&mut r)).collect();
    let mut line = || {
        let mut pairs = Vec::new();
        for s in 0..src.len() {
            for t in 0..n_tgt {
                if r.random_bool(0.25) {
                    pairs.push(format!("{s}-{t}"));
                }
            }
        }
        pairs.join(" ")
    };
    let forward = line();
    let backward = line();
    (forms, SentenceAlignment { forward, backward: Some(backward) })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn conllu_serialization_round_trips(seed in any::<u64>(), sentences in 1usize..5) {
        let mut r = rng(seed);
        let mut tb = random_treebank(&mut r, sentences, 10);
        for (i, s) in tb.sentences.iter_mut().enumerate() {
            s.comments.push(format!("# sent_id = s{i}"));
            let heads = random_heads(&mut r, s.len());
            for (t, h) in s.tokens.iter_mut().zip(heads) {
                t.head = h;
            }
        }
        let text = serialize_conllu(&tb);
        let back = parse_conllu(&text).unwrap();
        prop_assert_eq!(&back, &tb);
        prop_assert_eq!(serialize_conllu(&back), text);
    }

    #[test]
    fn validator_agrees_with_union_find(seed in any::<u64>(), n in 1usize..=12) {
        let mut r = rng(seed);
        let tokens = random_heads(&mut r, n)
            .into_iter()
            .enumerate()
            .map(|(i, h)| {
                let mut t = Token::new(i + 1, "w");
                t.head = h;
                t
            })
            .collect();
        let s = Sentence::new(tokens);
        prop_assert_eq!(validate_tree(&s).is_empty(), union_find_is_tree(&s));
    }

    #[test]
    fn random_trees_validate(seed in any::<u64>(), n in 1usize..=30) {
        let s = random_sentence(&mut rng(seed), n);
        prop_assert!(validate_tree(&s).is_empty());
        prop_assert!(union_find_is_tree(&s));
    }

    #[test]
    fn matching_is_maximum_and_valid(g in graph_strategy(7)) {
        let m = maximum_matching(&g);
        prop_assert_eq!(m.len(), brute_force_matching_size(&g));
        let pairs: Vec<_> = m.pairs().collect();
        for &(s, t) in &pairs {
            prop_assert!(g.contains(s, t));
            prop_assert_eq!(m.target_of(s), Some(t));
            prop_assert_eq!(m.source_of(t), Some(s));
        }
        // no edge can be added between two free vertices
        for &(s, t) in g.edges() {
            prop_assert!(m.target_of(s).is_some() || m.source_of(t).is_some());
        }
        prop_assert_eq!(maximum_matching(&g), m);
    }

    #[test]
    fn transpose_preserves_matching_size(g in graph_strategy(7)) {
        prop_assert_eq!(maximum_matching(&g.transpose()).len(), maximum_matching(&g).len());
        prop_assert_eq!(g.transpose().transpose(), g);
    }

    #[test]
    fn pos_filter_only_removes_and_never_strands(g in graph_strategy(8), seed in any::<u64>()) {
        use rand::seq::IndexedRandom;
        let mut r = rng(seed);
        let src: Vec<&str> = (0..g.n_src()).map(|_| *TAGS.choose(&mut r).unwrap()).collect();
        let tgt: Vec<&str> = (0..g.n_tgt()).map(|_| *TAGS.choose(&mut r).unwrap()).collect();
        let f = filter_by_pos(&g, &src, &tgt).unwrap();
        prop_assert!(f.len() <= g.len());
        for &(s, t) in f.edges() {
            prop_assert!(g.contains(s, t));
        }
        for s in 0..g.n_src() {
            let before = g.src_degree(s);
            let after = f.src_degree(s);
            if before > 0 {
                prop_assert!(after > 0);
            }
            if before <= 1 {
                prop_assert_eq!(after, before);
            }
            if after < before {
                prop_assert!(f.targets_of(s).all(|t| tgt[t] == src[s]));
            }
        }
    }

    #[test]
    fn merge_modes_bracket_inputs(a in graph_strategy(6), seed in any::<u64>()) {
        use rand::Rng;
        let mut r = rng(seed);
        let edges: Vec<_> = (0..a.n_src())
            .flat_map(|s| (0..a.n_tgt()).map(move |t| (s, t)))
            .filter(|_| r.random_bool(0.4))
            .collect();
        let b = AlignmentGraph::new(a.n_src(), a.n_tgt(), edges).unwrap();
        let union = a.merge(&b, MergeMode::Union).unwrap();
        let inter = a.merge(&b, MergeMode::Intersection).unwrap();
        prop_assert_eq!(union.len() + inter.len(), a.len() + b.len());
        for &(s, t) in inter.edges() {
            prop_assert!(a.contains(s, t) && b.contains(s, t));
        }
        for &(s, t) in a.edges().iter().chain(b.edges()) {
            prop_assert!(union.contains(s, t));
        }
    }

    #[test]
    fn eval_is_symmetric_and_ordered(seed in any::<u64>()) {
        let mut r = rng(seed);
        let gold = random_treebank(&mut r, 3, 8);
        let system = Treebank::new(gold.sentences.iter().map(|s| retokenize(&mut r, s)).collect());
        let ab = score(&gold, &system).unwrap();
        let ba = score(&system, &gold).unwrap();
        prop_assert!(ab.excluded.is_empty());
        let (x, y) = (&ab.report, &ba.report);
        for ((_, m), (_, n)) in x.metrics().into_iter().zip(y.metrics()) {
            prop_assert_eq!(m.correct, n.correct);
            prop_assert_eq!(m.precision_ratio(), n.recall_ratio());
            prop_assert_eq!(m.f1_ratio(), n.f1_ratio());
        }
        prop_assert!(x.las.correct <= x.uas.correct);
        prop_assert!(x.uas.correct <= x.words.correct);
        prop_assert!(x.upos.correct <= x.words.correct);
        prop_assert!(x.lemmas.correct <= x.words.correct);
    }

    #[test]
    fn projection_yields_rooted_trees(
        seed in any::<u64>(),
        n in 1usize..=12,
        options in options_strategy(),
    ) {
        let src = random_sentence(&mut rng(seed), n);
        let (forms, alignment) = synthetic_pair(seed ^ 0x5a5a, &src);
        let out = project_treebank(
            &Treebank::new(vec![src.clone()]),
            std::slice::from_ref(&forms),
            std::slice::from_ref(&alignment),
            &lexicon(),
            &options,
        )
        .unwrap();
        prop_assert!(out.failures.is_empty());
        let s = &out.treebank.sentences[0];
        prop_assert_eq!(s.len(), forms.len());
        prop_assert!(validate_tree(s).is_empty());
        prop_assert!(union_find_is_tree(s));
        for (i, t) in s.tokens.iter().enumerate() {
            prop_assert_eq!(t.id, i + 1);
            prop_assert_eq!(&t.form, &forms[i]);
        }
        let flags = &out.provenance[0].flags;
        prop_assert_eq!(out.provenance[0].count(Provenance::ForcedRoot), 1);
        let root = flags.iter().position(|&f| f == Provenance::ForcedRoot).unwrap();
        prop_assert_eq!(s.root_positions(), vec![root]);
        for (t, f) in s.tokens.iter().zip(flags) {
            if *f == Provenance::UnmatchedFallback {
                prop_assert_eq!(t.head, Some(root + 1));
                prop_assert_eq!(t.deprel.as_str(), "_");
            }
        }
        prop_assert_eq!(s.sent_id(), src.sent_id());
    }

    #[test]
    fn projection_distributes_over_concatenation(seed in any::<u64>(), k in 1usize..4, j in 1usize..4) {
        let mut r = rng(seed);
        let tb = random_treebank(&mut r, k + j, 8);
        let (forms, aligns): (Vec<_>, Vec<_>) = tb
            .sentences
            .iter()
            .enumerate()
            .map(|(i, s)| synthetic_pair(seed.wrapping_add(i as u64), s))
            .unzip();
        let lex = lexicon();
        let opts = ProjectionOptions::default();
        let whole = project_treebank(&tb, &forms, &aligns, &lex, &opts).unwrap();
        let head = Treebank::new(tb.sentences[..k].to_vec());
        let tail = Treebank::new(tb.sentences[k..].to_vec());
        let a = project_treebank(&head, &forms[..k], &aligns[..k], &lex, &opts).unwrap();
        let b = project_treebank(&tail, &forms[k..], &aligns[k..], &lex, &opts).unwrap();
        let mut joined = a.treebank.sentences.clone();
        joined.extend(b.treebank.sentences.clone());
        prop_assert_eq!(&whole.treebank.sentences, &joined);
        prop_assert_eq!(
            serialize_conllu(&whole.treebank),
            serialize_conllu(&a.treebank) + &serialize_conllu(&b.treebank)
        );
        let flags: Vec<_> = a.provenance.iter().chain(&b.provenance).map(|p| &p.flags).collect();
        let whole_flags: Vec<_> = whole.provenance.iter().map(|p| &p.flags).collect();
        prop_assert_eq!(whole_flags, flags);
    }

    #[test]
    fn relaxed_labels_never_lower_counts(seed in any::<u64>()) {
        let mut r = rng(seed);
        let gold = random_treebank(&mut r, 4, 8);
        let system = Treebank::new(gold.sentences.iter().map(|s| perturb(&mut r, s)).collect());
        let strict = relation_table_with(&gold, &system, LabelMatch::Strict).unwrap();
        let relaxed = relation_table_with(&gold, &system, LabelMatch::Universal).unwrap();
        prop_assert_eq!(strict.total_tokens(), gold.token_count() as u64);
        prop_assert!(relaxed.deprel_errors <= strict.deprel_errors);
        for row in &strict.rows {
            let other = relaxed.rows.iter().find(|x| x.deprel == row.deprel).unwrap();
            prop_assert_eq!(other.total, row.total);
            prop_assert!(other.deprel_correct >= row.deprel_correct);
            prop_assert_eq!(other.head_correct, row.head_correct);
        }
    }
}
