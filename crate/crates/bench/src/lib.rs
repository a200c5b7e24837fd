//! Shared fixtures for the criterion benches.

use kernelscope::pipeline::{classical_suite, fidelity_normalized, synthetic_inputs};
use kernelscope::{Embedding, EmbeddingSpec, GramMatrix, StateVector};

/// Embedded synthetic inputs.
pub fn states(embedding: Embedding, n: usize, count: usize, seed: u64) -> Vec<StateVector> {
    let spec = EmbeddingSpec::new(embedding, n, seed);
    let x = synthetic_inputs(count, n, seed).expect("valid sizes");
    spec.embed_all(&x).expect("embeddable")
}

/// A trace-normalized fidelity Gram and the default classical suite on the same inputs.
pub fn pair_fixture(n: usize, count: usize, seed: u64) -> (GramMatrix, Vec<GramMatrix>) {
    let x = synthetic_inputs(count, n, seed).expect("valid sizes");
    let spec = EmbeddingSpec::new(Embedding::E2, n, seed);
    let q = fidelity_normalized(&spec.embed_all(&x).expect("embeddable")).expect("gram");
    (q, classical_suite(&x, None).expect("suite"))
}
