//! Branch inputs and semantic-preserving identifier transforms.
//!
//! From one token stream three views are built:
//!
//! * `k` — the combined view, the token texts unchanged;
//! * `f` — the non-naming view, same length as `k` with every user
//!   identifier replaced by the placeholder `<ID>`;
//! * `t` — the naming view, exactly the user-identifier occurrences in
//!   order.
//!
//! The transforms ([`abstract_code`], [`rename_random`]) change only user
//! identifier tokens, so the token-kind sequence is preserved and the
//! non-naming view of a transformed sample is identical to that of the
//! original. Call heads are left untouched even when they share a spelling
//! with a renamed variable; replacement is by classified position, not by
//! text.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::dataset::CodeSample;
use crate::lexer::{self, IdentifierSet, LexError, TokenKind, TokenList};
use crate::rng::{self, SplitMix64};

/// Placeholder text used at masked identifier positions of the `f` view.
pub const ID_PLACEHOLDER: &str = "<ID>";

/// Maximum uniform redraws before falling back to a suffixed replacement.
const RENAME_MAX_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchViews {
    pub f_tokens: Vec<String>,
    pub t_tokens: Vec<String>,
    pub k_tokens: Vec<String>,
}

/// Per-sample map from original identifier text to its replacement.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RenameMap {
    pub mapping: BTreeMap<String, String>,
}

/// A renamed sample: the new source, its token list, and the map applied.
#[derive(Debug, Clone)]
pub struct Renamed {
    pub source: String,
    pub tokens: TokenList,
    pub map: RenameMap,
}

/// A transformed dataset plus the per-sample rename maps, aligned by index.
#[derive(Debug, Clone)]
pub struct TransformedSet {
    pub samples: Vec<CodeSample>,
    pub maps: Vec<RenameMap>,
}

#[derive(Debug, Error)]
pub enum ViewError {
    #[error("replacement vocabulary is empty")]
    EmptyVocab,
    #[error("sample {id:?} does not lex: {source}")]
    Lex {
        id: String,
        #[source]
        source: LexError,
    },
}

/// Builds the `(f, t, k)` views for a token stream.
pub fn build_views(toks: &TokenList, ids: &IdentifierSet) -> BranchViews {
    let k_tokens = toks.texts();
    let mut f_tokens = k_tokens.clone();
    let mut t_tokens = Vec::with_capacity(ids.len());
    for i in ids.iter() {
        t_tokens.push(k_tokens[i].clone());
        f_tokens[i] = ID_PLACEHOLDER.to_string();
    }
    BranchViews {
        f_tokens,
        t_tokens,
        k_tokens,
    }
}

/// Tokenizes `source` and builds views over its first `max_len` tokens.
/// Call heads are classified on the full token list so a truncation boundary
/// cannot turn a call head into a renameable identifier.
pub fn views_for_source(source: &str, max_len: usize) -> Result<BranchViews, LexError> {
    let toks = tokenize_classified(source, max_len)?;
    Ok(build_views(&toks.0, &toks.1))
}

fn tokenize_classified(source: &str, max_len: usize) -> Result<(TokenList, IdentifierSet), LexError> {
    let toks = lexer::tokenize(source)?;
    let ids = lexer::classify_identifiers(&toks);
    Ok((toks.truncated(max_len), ids.truncated(max_len)))
}

/// Splices `replacements[i]` over the token at position `positions[i]`.
/// Positions must be increasing; the gaps between tokens are preserved
/// byte-for-byte.
fn splice(source: &str, toks: &TokenList, edits: &[(usize, &str)]) -> String {
    let mut out = String::with_capacity(source.len());
    let mut cursor = 0;
    for &(pos, replacement) in edits {
        let span = toks.tokens[pos].span;
        out.push_str(&source[cursor..span.start]);
        out.push_str(replacement);
        cursor = span.end;
    }
    out.push_str(&source[cursor..]);
    out
}

/// Distinct user-identifier texts in order of first occurrence.
fn distinct_identifiers(toks: &TokenList, ids: &IdentifierSet) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut ordered = Vec::new();
    for i in ids.iter() {
        let text = &toks.tokens[i].text;
        if seen.insert(text.clone()) {
            ordered.push(text.clone());
        }
    }
    ordered
}

fn apply_map(source: &str, toks: &TokenList, ids: &IdentifierSet, map: &RenameMap) -> (String, TokenList) {
    let edits: Vec<(usize, &str)> = ids
        .iter()
        .filter_map(|i| {
            map.mapping
                .get(&toks.tokens[i].text)
                .map(|replacement| (i, replacement.as_str()))
        })
        .collect();
    let new_source = splice(source, toks, &edits);
    let new_tokens = lexer::tokenize(&new_source)
        .expect("splicing valid identifiers into a lexable source stays lexable");
    debug_assert_eq!(toks.kinds(), new_tokens.kinds());
    (new_source, new_tokens)
}

/// Replaces each distinct user identifier with `VAR_<n>`, numbered by first
/// occurrence starting at 0. Returns the abstracted source and its tokens.
pub fn abstract_code(source: &str, toks: &TokenList, ids: &IdentifierSet) -> (String, TokenList) {
    let mut map = RenameMap::default();
    for (n, original) in distinct_identifiers(toks, ids).into_iter().enumerate() {
        map.mapping.insert(original, format!("VAR_{n}"));
    }
    apply_map(source, toks, ids, &map)
}

/// Renames each distinct user identifier to a uniformly drawn vocabulary
/// entry, consistently across its occurrences.
///
/// A draw is rejected if it collides with any identifier text present in the
/// sample or with a replacement already chosen; after
/// [`RENAME_MAX_ATTEMPTS`] rejections a numeric suffix is appended instead.
pub fn rename_random(
    source: &str,
    toks: &TokenList,
    ids: &IdentifierSet,
    vocab: &[String],
    rng: &mut SplitMix64,
) -> Result<Renamed, ViewError> {
    if vocab.is_empty() {
        return Err(ViewError::EmptyVocab);
    }

    // Everything a replacement must avoid: all identifier spellings in the
    // sample (call heads included) plus replacements already taken.
    let mut taken: BTreeSet<String> = toks
        .tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Identifier)
        .map(|t| t.text.clone())
        .collect();

    let mut map = RenameMap::default();
    for original in distinct_identifiers(toks, ids) {
        let mut replacement = None;
        for _ in 0..RENAME_MAX_ATTEMPTS {
            let candidate = &vocab[rng.next_below(vocab.len())];
            if !taken.contains(candidate) {
                replacement = Some(candidate.clone());
                break;
            }
        }
        let replacement = replacement.unwrap_or_else(|| {
            let base = &vocab[rng.next_below(vocab.len())];
            (1u64..)
                .map(|n| format!("{base}{n}"))
                .find(|c| !taken.contains(c))
                .unwrap()
        });
        taken.insert(replacement.clone());
        map.mapping.insert(original, replacement);
    }

    let (new_source, new_tokens) = apply_map(source, toks, ids, &map);
    Ok(Renamed {
        source: new_source,
        tokens: new_tokens,
        map,
    })
}

/// Applies [`rename_random`] to every sample independently, preserving order
/// and labels. Sample `i` draws from a child stream of `transform_seed`
/// split by index, so the result does not depend on evaluation order.
pub fn build_transformed_set(
    samples: &[CodeSample],
    vocab: &[String],
    transform_seed: u64,
) -> Result<TransformedSet, ViewError> {
    if vocab.is_empty() {
        return Err(ViewError::EmptyVocab);
    }
    let mut out = Vec::with_capacity(samples.len());
    let mut maps = Vec::with_capacity(samples.len());
    for (index, sample) in samples.iter().enumerate() {
        let toks = lexer::tokenize(&sample.code).map_err(|source| ViewError::Lex {
            id: sample.id.clone(),
            source,
        })?;
        let ids = lexer::classify_identifiers(&toks);
        let mut rng = SplitMix64::new(rng::child_seed(transform_seed, index as u64));
        let renamed = rename_random(&sample.code, &toks, &ids, vocab, &mut rng)?;
        out.push(CodeSample {
            id: sample.id.clone(),
            code: renamed.source,
            label: sample.label,
        });
        maps.push(renamed.map);
    }
    Ok(TransformedSet { samples: out, maps })
}

/// Distinct user-identifier texts across samples, in first-occurrence order.
/// This is the default replacement pool for transforms and attacks.
pub fn identifier_pool(samples: &[CodeSample]) -> Result<Vec<String>, ViewError> {
    let mut seen = BTreeSet::new();
    let mut pool = Vec::new();
    for sample in samples {
        let toks = lexer::tokenize(&sample.code).map_err(|source| ViewError::Lex {
            id: sample.id.clone(),
            source,
        })?;
        let ids = lexer::classify_identifiers(&toks);
        for i in ids.iter() {
            let text = &toks.tokens[i].text;
            if seen.insert(text.clone()) {
                pool.push(text.clone());
            }
        }
    }
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexer::{classify_identifiers, tokenize};
    use proptest::prelude::*;

    fn views_of(source: &str) -> BranchViews {
        let toks = tokenize(source).unwrap();
        let ids = classify_identifiers(&toks);
        build_views(&toks, &ids)
    }

    #[test]
    fn views_of_declaration() {
        let v = views_of("int a = 0;");
        assert_eq!(v.k_tokens, ["int", "a", "=", "0", ";"]);
        assert_eq!(v.f_tokens, ["int", "<ID>", "=", "0", ";"]);
        assert_eq!(v.t_tokens, ["a"]);
    }

    #[test]
    fn views_without_identifiers() {
        let v = views_of("return 0;");
        assert_eq!(v.f_tokens, v.k_tokens);
        assert!(v.t_tokens.is_empty());
    }

    #[test]
    fn views_keep_call_head_in_f() {
        let v = views_of("f(x)");
        assert_eq!(v.k_tokens, ["f", "(", "x", ")"]);
        assert_eq!(v.f_tokens, ["f", "(", "<ID>", ")"]);
        assert_eq!(v.t_tokens, ["x"]);
    }

    #[test]
    fn abstraction_numbers_by_first_occurrence() {
        let toks = tokenize("int a = b + a;").unwrap();
        let ids = classify_identifiers(&toks);
        let (out, _) = abstract_code("int a = b + a;", &toks, &ids);
        assert_eq!(out, "int VAR_0 = VAR_1 + VAR_0;");
    }

    #[test]
    fn abstraction_of_identifier_free_code() {
        let toks = tokenize("return 0;").unwrap();
        let ids = classify_identifiers(&toks);
        let (out, _) = abstract_code("return 0;", &toks, &ids);
        assert_eq!(out, "return 0;");
    }

    #[test]
    fn abstraction_keeps_call_heads() {
        let toks = tokenize("f(x)").unwrap();
        let ids = classify_identifiers(&toks);
        let (out, _) = abstract_code("f(x)", &toks, &ids);
        assert_eq!(out, "f(VAR_0)");
    }

    #[test]
    fn abstracted_code_has_no_user_identifiers_left() {
        let source = "int a = b + a;";
        let toks = tokenize(source).unwrap();
        let ids = classify_identifiers(&toks);
        let (out, out_toks) = abstract_code(source, &toks, &ids);
        assert_eq!(out, "int VAR_0 = VAR_1 + VAR_0;");
        let v = build_views(&out_toks, &classify_identifiers(&out_toks));
        assert!(v.t_tokens.is_empty());
    }

    #[test]
    fn rename_forced_draw() {
        let source = "int a = a;";
        let toks = tokenize(source).unwrap();
        let ids = classify_identifiers(&toks);
        let vocab = vec!["arr".to_string()];
        let mut rng = SplitMix64::new(0);
        let renamed = rename_random(source, &toks, &ids, &vocab, &mut rng).unwrap();
        assert_eq!(renamed.source, "int arr = arr;");
        assert_eq!(renamed.map.mapping["a"], "arr");
    }

    #[test]
    fn rename_without_identifiers_is_identity() {
        let source = "return 0;";
        let toks = tokenize(source).unwrap();
        let ids = classify_identifiers(&toks);
        let mut rng = SplitMix64::new(0);
        let renamed =
            rename_random(source, &toks, &ids, &["x".to_string()], &mut rng).unwrap();
        assert_eq!(renamed.source, source);
        assert!(renamed.map.mapping.is_empty());
    }

    #[test]
    fn rename_empty_vocab_errors() {
        let source = "int a = 0;";
        let toks = tokenize(source).unwrap();
        let ids = classify_identifiers(&toks);
        let mut rng = SplitMix64::new(0);
        assert!(matches!(
            rename_random(source, &toks, &ids, &[], &mut rng),
            Err(ViewError::EmptyVocab)
        ));
    }

    #[test]
    fn rename_leaves_call_heads_with_shared_spelling() {
        // The variable g is renamed, the call head g is not.
        let source = "g(g)";
        let toks = tokenize(source).unwrap();
        let ids = classify_identifiers(&toks);
        let mut rng = SplitMix64::new(0);
        let renamed =
            rename_random(source, &toks, &ids, &["zz".to_string()], &mut rng).unwrap();
        assert_eq!(renamed.source, "g(zz)");
    }

    #[test]
    fn rename_exhausted_vocab_appends_suffix() {
        // Single vocab entry that collides with an existing identifier:
        // after the bounded redraws, a numeric suffix resolves it.
        let source = "int a = b;";
        let toks = tokenize(source).unwrap();
        let ids = classify_identifiers(&toks);
        let vocab = vec!["b".to_string()];
        let mut rng = SplitMix64::new(0);
        let renamed = rename_random(source, &toks, &ids, &vocab, &mut rng).unwrap();
        assert_eq!(renamed.map.mapping["a"], "b1");
        // b itself then cannot take "b" (its own spelling is taken) or "b1".
        assert_eq!(renamed.map.mapping["b"], "b2");
        assert_eq!(renamed.source, "int b1 = b2;");
    }

    #[test]
    fn transformed_set_preserves_order_and_labels() {
        let samples = vec![
            CodeSample { id: "a".into(), code: "int a = 0;".into(), label: 1 },
            CodeSample { id: "b".into(), code: "return 0;".into(), label: 0 },
        ];
        let vocab = vec!["x".to_string(), "y".to_string()];
        let out = build_transformed_set(&samples, &vocab, 9).unwrap();
        assert_eq!(out.samples.len(), 2);
        assert_eq!(out.samples[0].id, "a");
        assert_eq!(out.samples[0].label, 1);
        assert_eq!(out.samples[1].code, "return 0;");
        assert!(out.maps[1].mapping.is_empty());
    }

    #[test]
    fn transformed_set_is_deterministic() {
        let samples = vec![
            CodeSample { id: "a".into(), code: "int a = b + a;".into(), label: 0 },
            CodeSample { id: "b".into(), code: "f(x)".into(), label: 1 },
        ];
        let vocab: Vec<String> = ["u", "v", "w", "p", "q"].iter().map(|s| s.to_string()).collect();
        let one = build_transformed_set(&samples, &vocab, 1234).unwrap();
        let two = build_transformed_set(&samples, &vocab, 1234).unwrap();
        assert_eq!(one.samples, two.samples);
        assert_eq!(one.maps, two.maps);
    }

    #[test]
    fn empty_dataset_transforms_to_empty() {
        let out = build_transformed_set(&[], &["x".to_string()], 0).unwrap();
        assert!(out.samples.is_empty());
    }

    #[test]
    fn pool_collects_distinct_identifiers_in_order() {
        let samples = vec![
            CodeSample { id: "a".into(), code: "int a = b + a;".into(), label: 0 },
            CodeSample { id: "b".into(), code: "f(b); int c = 0;".into(), label: 0 },
        ];
        assert_eq!(identifier_pool(&samples).unwrap(), ["a", "b", "c"]);
    }

    fn small_source() -> impl Strategy<Value = String> {
        prop::sample::select(vec![
            "int a = 0;",
            "int a = b + a;",
            "f(x)",
            "g(g)",
            "return 0;",
            "while (i < n) { i = i + 1; }",
            "int _x = y1 % 3; call(_x, y1);",
            "if (a == b) { c = \"s\"; }",
        ])
        .prop_map(str::to_string)
    }

    proptest! {
        #[test]
        fn transforms_preserve_kind_sequence(source in small_source(), seed in any::<u64>()) {
            let toks = tokenize(&source).unwrap();
            let ids = classify_identifiers(&toks);
            let vocab: Vec<String> = ["alpha", "beta", "gamma"].iter().map(|s| s.to_string()).collect();
            let mut rng = SplitMix64::new(seed);
            let renamed = rename_random(&source, &toks, &ids, &vocab, &mut rng).unwrap();
            prop_assert_eq!(renamed.tokens.kinds(), toks.kinds());
            let (_, abstracted) = abstract_code(&source, &toks, &ids);
            prop_assert_eq!(abstracted.kinds(), toks.kinds());
        }

        #[test]
        fn rename_is_consistent_across_occurrences(source in small_source(), seed in any::<u64>()) {
            let toks = tokenize(&source).unwrap();
            let ids = classify_identifiers(&toks);
            let vocab: Vec<String> = ["alpha", "beta", "gamma", "delta"].iter().map(|s| s.to_string()).collect();
            let mut rng = SplitMix64::new(seed);
            let renamed = rename_random(&source, &toks, &ids, &vocab, &mut rng).unwrap();
            // Replacements are injective.
            let values: BTreeSet<&String> = renamed.map.mapping.values().collect();
            prop_assert_eq!(values.len(), renamed.map.mapping.len());
            // Every classified position carries its mapped replacement.
            for i in ids.iter() {
                let original = &toks.tokens[i].text;
                prop_assert_eq!(&renamed.tokens.tokens[i].text, &renamed.map.mapping[original]);
            }
            // The f view is untouched by renaming.
            let new_ids = classify_identifiers(&renamed.tokens);
            let original_f = build_views(&toks, &ids).f_tokens;
            let renamed_f = build_views(&renamed.tokens, &new_ids).f_tokens;
            prop_assert_eq!(original_f, renamed_f);
        }

        #[test]
        fn view_lengths_are_consistent(source in small_source()) {
            let toks = tokenize(&source).unwrap();
            let ids = classify_identifiers(&toks);
            let v = build_views(&toks, &ids);
            prop_assert_eq!(v.f_tokens.len(), v.k_tokens.len());
            let non_identifier = v.k_tokens.len() - v.t_tokens.len();
            prop_assert_eq!(v.t_tokens.len() + non_identifier, v.k_tokens.len());
            prop_assert_eq!(v.t_tokens.len(), ids.len());
        }
    }
}
