//! Seeded synthetic survey tables used as fixtures and in tests.
//!
//! Every generator is deterministic for a given seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataio::CategoricalTable;

fn build(
    names: &[String],
    rows: Vec<Vec<String>>,
    groups: Vec<String>,
    group_column: &str,
) -> CategoricalTable {
    CategoricalTable::from_rows(names, &rows, group_column, &groups, "99")
        .expect("generated tables are well formed")
}

fn names(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("{prefix}{i:02}")).collect()
}

/// A 200-row, 6-variable survey with two parties (`Con`, `Lab`), 3-5 levels
/// per variable counting the missing code, driven by one shared latent scale.
pub fn survey(seed: u64) -> CategoricalTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let level_counts = [3usize, 4, 4, 3, 4, 3];
    let vars = names("q", level_counts.len());
    let mut rows = Vec::with_capacity(200);
    let mut groups = Vec::with_capacity(200);
    for i in 0..200 {
        let con = i % 20 < 11;
        let shift = if con { 0.12 } else { -0.12 };
        let latent: f64 = rng.random::<f64>() + shift;
        let row = level_counts
            .iter()
            .enumerate()
            .map(|(v, &levels)| {
                if rng.random::<f64>() < 0.03 {
                    return "99".to_string();
                }
                let flip = if v % 2 == 0 { latent } else { 1.0 - latent };
                let x = (flip + rng.random_range(-0.35..0.35)).clamp(0.0, 0.999_999);
                (1 + (x * levels as f64) as usize).to_string()
            })
            .collect();
        rows.push(row);
        groups.push(if con { "Con" } else { "Lab" }.to_string());
    }
    build(&vars, rows, groups, "party")
}

/// Target group `T` with two planted subgroups and background group `B`.
#[derive(Debug, Clone)]
pub struct PlantedFixture {
    pub table: CategoricalTable,
    /// Variables on which the subgroups differ.
    pub planted: Vec<String>,
    /// For each target row (in target order): member of the first subgroup?
    pub subgroup: Vec<bool>,
}

/// 12 three-level variables. Nine follow a strong shared latent scale in both
/// groups; three (`q03`, `q07`, `q11`) split the 300 target rows into two
/// 150-row subgroups and are uniform noise in the 300 background rows.
pub fn planted_subgroups(seed: u64) -> PlantedFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars = names("q", 12);
    let planted_idx = [2usize, 6, 10];
    let mut rows = Vec::with_capacity(600);
    let mut groups = Vec::with_capacity(600);
    let mut subgroup = Vec::with_capacity(300);
    for i in 0..600 {
        let target = i < 300;
        let first = i % 2 == 0;
        let latent = rng.random_range(1..=3usize);
        let row = (0..12)
            .map(|v| {
                let level = if planted_idx.contains(&v) {
                    if target && rng.random::<f64>() < 0.85 {
                        if first {
                            1
                        } else {
                            3
                        }
                    } else {
                        rng.random_range(1..=3)
                    }
                } else if rng.random::<f64>() < 0.8 {
                    latent
                } else {
                    rng.random_range(1..=3)
                };
                level.to_string()
            })
            .collect();
        rows.push(row);
        if target {
            groups.push("T".to_string());
            subgroup.push(first);
        } else {
            groups.push("B".to_string());
        }
    }
    PlantedFixture {
        table: build(&vars, rows, groups, "group"),
        planted: planted_idx.iter().map(|&v| vars[v].clone()).collect(),
        subgroup,
    }
}

/// Groups `A` and `B` (`rows_per_group` each) drawn from one distribution
/// over four correlated three-level variables.
pub fn same_distribution(rows_per_group: usize, seed: u64) -> CategoricalTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars = names("q", 4);
    let mut rows = Vec::with_capacity(2 * rows_per_group);
    let mut groups = Vec::with_capacity(2 * rows_per_group);
    for i in 0..2 * rows_per_group {
        let latent = rng.random_range(1..=3usize);
        let row = (0..4)
            .map(|_| {
                let level = if rng.random::<f64>() < 0.6 {
                    latent
                } else {
                    rng.random_range(1..=3)
                };
                level.to_string()
            })
            .collect();
        rows.push(row);
        groups.push(if i < rows_per_group { "A" } else { "B" }.to_string());
    }
    build(&vars, rows, groups, "group")
}

/// A random target/background table (`T`, `B`) with 3-5 variables of 2-4
/// levels, skewed level probabilities and 20-60 rows per group.
pub fn random_pair(seed: u64) -> CategoricalTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(3..=5usize);
    let levels: Vec<usize> = (0..d).map(|_| rng.random_range(2..=4)).collect();
    let mut weights = |count: usize| -> Vec<f64> {
        let w: Vec<f64> = (0..count).map(|_| rng.random::<f64>() + 0.05).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    };
    let probs: Vec<[Vec<f64>; 2]> = levels.iter().map(|&l| [weights(l), weights(l)]).collect();
    let sizes = [
        rng.random_range(20..=60usize),
        rng.random_range(20..=60usize),
    ];
    let vars = names("v", d);
    let mut rows = Vec::new();
    let mut groups = Vec::new();
    for (g, &size) in sizes.iter().enumerate() {
        for _ in 0..size {
            let row = probs
                .iter()
                .map(|p| {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut level = p[g].len();
                    for (i, w) in p[g].iter().enumerate() {
                        acc += w;
                        if u < acc {
                            level = i + 1;
                            break;
                        }
                    }
                    level.to_string()
                })
                .collect();
            rows.push(row);
            groups.push(if g == 0 { "T" } else { "B" }.to_string());
        }
    }
    build(&vars, rows, groups, "group")
}
