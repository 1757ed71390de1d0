//! Benchmark fixtures shared by the criterion benches.

use netshield_core::Digraph;

/// Ring with deterministic chords `i → (7i + 3) mod n`, unit weights.
pub fn chorded_ring(n: usize) -> Digraph {
    let edges = (0..n).flat_map(|i| {
        let chord = (7 * i + 3) % n;
        let ring = (i, (i + 1) % n, 1.0);
        std::iter::once(ring).chain((chord != i && chord != (i + 1) % n).then_some((i, chord, 0.5)))
    });
    Digraph::from_edges(n, edges).expect("valid ring")
}
