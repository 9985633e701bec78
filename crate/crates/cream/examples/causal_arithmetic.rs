//! The causal-effect arithmetic on classification scores: total effect,
//! natural direct effect, total indirect effect, and the alpha-controlled
//! removal used at inference.
//!
//! Run with: cargo run -p cream --example causal_arithmetic

use cream::counterfactual::{cf_combine, BranchLogits};
use cream::{fuse, nde, te, tie};

fn main() {
    // Branch scores for one two-class sample.
    let z_f = vec![0.3, 0.6]; // structure only
    let z_k = vec![0.9, 0.0]; // combined input
    let z_t = vec![0.6, 0.9]; // names only

    let fused = fuse(&z_f, &z_k, &z_t).unwrap();
    println!("branch scores: f {z_f:?}  k {z_k:?}  t {z_t:?}");
    println!("fused training-time score (mean): {fused:?}");

    // Effects against the all-empty counterfactual world, whose score is
    // uniform and cancels out of every argmax.
    let null = vec![0.0, 0.0];
    let total = te(&fused, &null).unwrap();
    let direct = nde(&z_t, &null).unwrap();
    let indirect = tie(&total, &direct).unwrap();
    println!("\ntotal effect     {total:?}");
    println!("direct (naming)  {direct:?}");
    println!("indirect         {indirect:?}");

    let logits = BranchLogits { z_f, z_k, z_t };
    println!("\nremoving the direct naming effect:");
    for alpha in [0.0, 0.5, 1.0] {
        let z = cf_combine(&logits, alpha);
        println!("  alpha {alpha:3}: {z:?}");
    }
    println!("\nalpha 0 keeps the fused argmax; alpha 1 removes the naming branch entirely.");
}
