//! Tokenize a snippet, classify its renameable identifiers, and build the
//! three branch views plus the abstracted form.
//!
//! Run with: cargo run -p cream --example lex_and_views

use cream::lexer::{classify_identifiers, tokenize};
use cream::views::{abstract_code, build_views};

fn main() {
    let source = "int total = 0;\nwhile (total < cap) {\n    total = total + step(cap);\n}";
    println!("source:\n{source}\n");

    let toks = tokenize(source).expect("snippet lexes");
    println!("tokens:");
    for (i, t) in toks.tokens.iter().enumerate() {
        println!("  [{i:2}] {:12} {:?} @ {}..{}", t.text, t.kind, t.span.start, t.span.end);
    }

    let ids = classify_identifiers(&toks);
    let names: Vec<&str> = ids.iter().map(|i| toks.tokens[i].text.as_str()).collect();
    println!("\nrenameable identifiers (call heads excluded): {names:?}");

    let views = build_views(&toks, &ids);
    println!("\nk view (combined):   {:?}", views.k_tokens);
    println!("f view (structure):  {:?}", views.f_tokens);
    println!("t view (names only): {:?}", views.t_tokens);

    let (abstracted, _) = abstract_code(source, &toks, &ids);
    println!("\nabstracted:\n{abstracted}");
}
