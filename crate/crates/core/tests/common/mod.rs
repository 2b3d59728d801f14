#![allow(dead_code)]

use homcluster::dataset::{AttributeSchema, Column, MixedDataset};
use homcluster::indicator::{build_indicator, IndicatorMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Categorical-only dataset with `p` attributes of up to `max_levels` levels.
/// Every attribute observes at least two levels.
pub fn random_categorical(rng: &mut impl Rng, n: usize, p: usize, max_levels: usize) -> MixedDataset {
    let mut schema = Vec::new();
    let mut columns = Vec::new();
    for j in 0..p {
        let l = rng.random_range(2..=max_levels);
        let levels: Vec<String> = (0..l).map(|v| format!("v{v}")).collect();
        let mut codes: Vec<u32> = (0..n).map(|_| rng.random_range(0..l as u32)).collect();
        codes[0] = 0;
        codes[1] = 1;
        schema.push(AttributeSchema::nominal(format!("a{j}"), levels));
        columns.push(Column::Categorical(codes));
    }
    MixedDataset::new(schema, columns, (0..n as u64).collect()).unwrap()
}

/// The `i`-th seeded small instance: n in [8, 50], p_c in [2, 4], l_j in [2, 4].
pub fn small_instance(i: u64) -> IndicatorMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
    let n = rng.random_range(8..=50);
    let p = rng.random_range(2..=4);
    build_indicator(&random_categorical(&mut rng, n, p, 4)).unwrap()
}
