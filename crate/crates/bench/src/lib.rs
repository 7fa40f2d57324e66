//! Fixtures shared by the optimizer benchmarks.

use dsebo::{rng, SubspaceBox, SubspaceDataset};

/// `n` uniform points of the `d`-dimensional subspace box scored by a
/// shifted sphere, the typical shape of data seen mid-run.
pub fn sphere_dataset(n: usize, d: usize, seed: u64) -> SubspaceDataset {
    let mut rng = rng::stream(seed, rng::INIT);
    let bx = SubspaceBox::new(d);
    let mut ds = SubspaceDataset::new(d);
    for _ in 0..n {
        let z = bx.sample(&mut rng);
        let y = z.as_slice().iter().map(|v| (v - 0.3).powi(2)).sum();
        ds.push(z, y).expect("finite values");
    }
    ds
}
