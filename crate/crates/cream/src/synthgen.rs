//! Synthetic labeled code with a controllable spurious correlation between
//! identifier names and class labels.
//!
//! Each class has a fixed structural template (a distinct token-kind
//! skeleton), so the label is always perfectly recoverable from structure
//! alone: two samples of one class differ only in their identifier names.
//! Identifier names carry the *planted* signal: a training sample draws its
//! names from a pool owned by its class with probability `rho`, otherwise
//! from a shared global pool. Test samples always draw from the global pool,
//! so at test time names carry no label information until a transform or an
//! attack injects misleading ones.
//!
//! Function names and other call heads are fixed per template. They are not
//! renameable, so they belong to the structural signal, never the naming
//! signal.

use thiserror::Error;

use crate::dataset::CodeSample;
use crate::rng::{self, SplitMix64, STREAM_DATASET};

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub n_classes: usize,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    /// Probability that a train/valid sample draws its names from its class
    /// pool rather than the global pool.
    pub rho: f64,
    /// Identifiers per class pool. The global pool holds twice this many.
    pub pool_size: usize,
    /// Root seed; generation derives its stream internally.
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            n_classes: 8,
            n_train: 2000,
            n_valid: 500,
            n_test: 500,
            rho: 0.9,
            pool_size: 20,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub train: Vec<CodeSample>,
    pub valid: Vec<CodeSample>,
    pub test: Vec<CodeSample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("invalid field {field}: {message}")]
    Field { field: String, message: String },
    #[error("n_classes is {requested} but only {available} structural templates exist")]
    TooManyClasses { requested: usize, available: usize },
}

struct Template {
    /// Distinct identifier slots the template consumes.
    slots: usize,
    render: fn(&[String]) -> String,
}

macro_rules! template {
    ($slots:expr, $render:expr) => {
        Template { slots: $slots, render: $render }
    };
}

// All templates deliberately share most of their surface: the same function
// name, the same inner call head, the same keywords, operators and small
// literals. What separates the classes is one anchor literal plus the
// statement skeleton itself. Structure therefore determines the label while
// contributing only a weak bag-of-tokens signal, which is exactly the regime
// where identifier names become the tempting shortcut.

fn t_accumulate(s: &[String]) -> String {
    let (a, b, c) = (&s[0], &s[1], &s[2]);
    format!(
        "int run(int {a}, int {b}) {{\n    int {c} = {a} + 101;\n    while ({a} < {b}) {{\n        {c} = {c} + {a};\n        {a} = {a} + 1;\n        {b} = {b} - {c} % {a};\n    }}\n    emit({c} + {a} - {b});\n    return {c} % {a};\n}}\n"
    )
}

fn t_countdown(s: &[String]) -> String {
    let (a, b, c) = (&s[0], &s[1], &s[2]);
    format!(
        "int run(int {a}, int {b}) {{\n    int {c} = {a} - 202;\n    for ({b} = {a}; {b} > {c}; {b} = {b} - 1) {{\n        {c} = {c} + {b} % {a};\n        {a} = {a} + {c};\n    }}\n    emit({a} + {b} + {c});\n    return {a} - {c};\n}}\n"
    )
}

fn t_filter(s: &[String]) -> String {
    let (a, b, c) = (&s[0], &s[1], &s[2]);
    format!(
        "int run(int {a}, int {b}) {{\n    int {c} = 303 % {a};\n    while ({b} > 0) {{\n        if ({b} % {a} == {c}) {{\n            {c} = {c} + {a};\n        }}\n        {b} = {b} - {a} % {c};\n    }}\n    emit({b} + {c} % {a});\n    return {c} + {a};\n}}\n"
    )
}

fn t_guard(s: &[String]) -> String {
    let (a, b, c) = (&s[0], &s[1], &s[2]);
    format!(
        "int run(int {a}, int {b}) {{\n    int {c} = {b} % 404;\n    if ({a} == {c}) {{\n        emit({a} + {b} - {c});\n        return {b} % {a};\n    }}\n    while ({c} > {a}) {{\n        {c} = {c} - {a} % {b};\n        {b} = {b} + {a};\n    }}\n    return {a} + {c} - {b};\n}}\n"
    )
}

fn t_nested(s: &[String]) -> String {
    let (a, b, c) = (&s[0], &s[1], &s[2]);
    format!(
        "int run(int {a}, int {b}) {{\n    int {c} = {a} % {b} + 505;\n    for ({a} = 0; {a} < {b}; {a} = {a} + 1) {{\n        for ({c} = {a}; {c} > 1; {c} = {c} - 1) {{\n            emit({c} % {b} + {a});\n        }}\n    }}\n    return {c} + {b} - {a};\n}}\n"
    )
}

fn t_clamp(s: &[String]) -> String {
    let (a, b, c) = (&s[0], &s[1], &s[2]);
    format!(
        "int run(int {a}) {{\n    int {b} = {a} + 606;\n    int {c} = {b} - {a};\n    if ({b} < {c}) {{\n        {b} = {c} - {a};\n    }}\n    if ({b} > {c} + {a}) {{\n        {b} = {c} % {a};\n    }}\n    emit({b} + {c} - {a});\n    return {b} % {c};\n}}\n"
    )
}

fn t_drain(s: &[String]) -> String {
    let (a, b, c) = (&s[0], &s[1], &s[2]);
    format!(
        "int run(int {a}, int {b}) {{\n    int {c} = {a} % {b} + 707;\n    while (1) {{\n        if ({c} <= {a} + {b}) {{\n            break;\n        }}\n        {c} = {c} - {a} % {b};\n        {a} = {a} + {b} - {c};\n    }}\n    emit({c} - {a} % {b});\n    return {c} % {b};\n}}\n"
    )
}

fn t_branch(s: &[String]) -> String {
    let (a, b, c) = (&s[0], &s[1], &s[2]);
    format!(
        "int run(int {a}, int {b}) {{\n    int {c} = 808 - {a};\n    if ({a} == {b} % {c}) {{\n        {c} = {a} + {b};\n    }} else {{\n        if ({a} < {b}) {{\n            {c} = {b} - {a} % {c};\n        }} else {{\n            {c} = {a} % {b};\n        }}\n    }}\n    emit({a} + {b} % {c});\n    return {c} - {b};\n}}\n"
    )
}

fn t_skipper(s: &[String]) -> String {
    let (a, b, c) = (&s[0], &s[1], &s[2]);
    format!(
        "void run(int {a}, int {b}) {{\n    int {c} = {a} + {b} % 909;\n    while ({c} > {b} - {a}) {{\n        {c} = {c} - 1;\n        if ({c} % {a} == {b}) {{\n            continue;\n        }}\n        emit({c} + {b} % {a});\n        {b} = {b} + {a} - {c};\n    }}\n}}\n"
    )
}

fn t_ticker(s: &[String]) -> String {
    let (a, b, c) = (&s[0], &s[1], &s[2]);
    format!(
        "void run(int {a}, int {b}) {{\n    char {c} = \"tick\";\n    while ({b} < {a} + 111) {{\n        emit({c}, {b} % {a});\n        {b} = {b} + {a} - 2;\n        {a} = {a} + {b};\n    }}\n}}\n"
    )
}

const TEMPLATES: [Template; 10] = [
    template!(3, t_accumulate),
    template!(3, t_countdown),
    template!(3, t_filter),
    template!(3, t_guard),
    template!(3, t_nested),
    template!(3, t_clamp),
    template!(3, t_drain),
    template!(3, t_branch),
    template!(3, t_skipper),
    template!(3, t_ticker),
];

/// Number of structural templates available, the upper bound on `n_classes`.
pub fn template_count() -> usize {
    TEMPLATES.len()
}

// Base words for identifier pools; numeric suffixes extend the namespace
// when pools need more names than base words.
const POOL_WORDS: [&str; 40] = [
    "count", "total", "sum", "idx", "tmp", "buf", "len", "pos", "val", "acc", "num", "key", "ptr",
    "row", "col", "size", "step", "flag", "mask", "item", "node", "left", "right", "top", "base",
    "cur", "next", "prev", "mini", "maxi", "avg", "lim", "cap", "off", "seq", "bit", "word",
    "line", "page", "cell",
];

fn pool_name(index: usize) -> String {
    let word = POOL_WORDS[index % POOL_WORDS.len()];
    let suffix = index / POOL_WORDS.len();
    if suffix == 0 {
        word.to_string()
    } else {
        format!("{word}{suffix}")
    }
}

/// The identifier pools implied by a spec: one pool per class plus the
/// shared global pool, all pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamePools {
    pub class_pools: Vec<Vec<String>>,
    pub global_pool: Vec<String>,
}

pub fn name_pools(spec: &GenSpec) -> NamePools {
    let class_pools = (0..spec.n_classes)
        .map(|c| {
            (0..spec.pool_size)
                .map(|j| pool_name(c * spec.pool_size + j))
                .collect()
        })
        .collect();
    let global_start = spec.n_classes * spec.pool_size;
    let global_pool = (0..spec.pool_size)
        .map(|j| pool_name(global_start + j))
        .collect();
    NamePools {
        class_pools,
        global_pool,
    }
}

fn validate(spec: &GenSpec) -> Result<(), SpecError> {
    let field = |field: &str, message: String| Err(SpecError::Field {
        field: field.to_string(),
        message,
    });
    if spec.n_classes == 0 {
        return field("n_classes", "must be at least 1".to_string());
    }
    if spec.n_classes > TEMPLATES.len() {
        return Err(SpecError::TooManyClasses {
            requested: spec.n_classes,
            available: TEMPLATES.len(),
        });
    }
    if !(0.0..=1.0).contains(&spec.rho) {
        return field("rho", format!("must be in [0, 1], got {}", spec.rho));
    }
    let max_slots = TEMPLATES.iter().map(|t| t.slots).max().unwrap();
    if spec.pool_size < max_slots {
        return field(
            "pool_size",
            format!("must be at least {max_slots} (the largest template slot count)"),
        );
    }
    Ok(())
}

/// Draws `n` distinct entries from `pool`, uniformly without replacement.
fn draw_distinct(pool: &[String], n: usize, rng: &mut SplitMix64) -> Vec<String> {
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    while chosen.len() < n {
        let i = rng.next_below(pool.len());
        if !chosen.contains(&i) {
            chosen.push(i);
        }
    }
    chosen.into_iter().map(|i| pool[i].clone()).collect()
}

#[derive(Clone, Copy)]
enum Split {
    Train = 0,
    Valid = 1,
    Test = 2,
}

fn generate_split(
    spec: &GenSpec,
    pools: &NamePools,
    split: Split,
    n: usize,
) -> Vec<CodeSample> {
    // One child stream per (split, sample index): sample draws are
    // order-independent, so parallel generation would produce the same data.
    let split_seed = rng::child_seed(spec.seed ^ STREAM_DATASET, split as u64);
    let prefix = match split {
        Split::Train => "train",
        Split::Valid => "valid",
        Split::Test => "test",
    };
    (0..n)
        .map(|i| {
            let label = i % spec.n_classes;
            let template = &TEMPLATES[label];
            let mut rng = SplitMix64::new(rng::child_seed(split_seed, i as u64));
            let correlated = match split {
                Split::Test => false,
                Split::Train | Split::Valid => rng.next_f64() < spec.rho,
            };
            let pool = if correlated {
                &pools.class_pools[label]
            } else {
                &pools.global_pool
            };
            let names = draw_distinct(pool, template.slots, &mut rng);
            CodeSample {
                id: format!("{prefix}-{i:05}"),
                code: (template.render)(&names),
                label,
            }
        })
        .collect()
}

/// Generates the three splits. Deterministic under `spec.seed`; train and
/// valid carry the `rho` correlation, test is always decorrelated.
pub fn generate_dataset(spec: &GenSpec) -> Result<GeneratedData, SpecError> {
    validate(spec)?;
    let pools = name_pools(spec);
    Ok(GeneratedData {
        train: generate_split(spec, &pools, Split::Train, spec.n_train),
        valid: generate_split(spec, &pools, Split::Valid, spec.n_valid),
        test: generate_split(spec, &pools, Split::Test, spec.n_test),
    })
}
