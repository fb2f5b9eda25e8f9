//! Shared fixtures and independent oracles for the integration suites.
//!
//! Nothing here calls into the engine's statistics; each oracle recomputes
//! its answer from the raw values with the most direct method available.

#![allow(dead_code)]

pub mod checks;
pub mod oracles;

use branchbook_core::config::{Config, MinerConfig};
use branchbook_core::dataset::{Column, Role, Table, Value};
use branchbook_core::stats::Aggregate;
use branchbook_core::Engine;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CARS_CSV: &[u8] = include_bytes!("../../../../data/cars.csv");
pub const CARS_TOML: &str = include_str!("../../../../data/cars.toml");
pub const TOY_CSV: &[u8] = include_bytes!("../../../../data/toy.csv");

pub fn cars_config() -> Config {
    Config::from_toml_str(CARS_TOML).unwrap()
}

pub fn cars_engine() -> Engine {
    Engine::from_csv(CARS_CSV, "cars", cars_config()).unwrap()
}

/// Thresholds low enough that correlations, and with them the combo rules,
/// fire on twelve-row tables.
pub fn relaxed_config() -> Config {
    Config {
        miner: MinerConfig {
            strong_r: 0.5,
            min_n: 3,
            aggregates: vec![Aggregate::Mean, Aggregate::Sum, Aggregate::Count],
            ..MinerConfig::default()
        },
        ..Config::default()
    }
}

pub fn column(name: &str, role: Role, values: Vec<Value>) -> Column {
    Column { name: name.to_string(), role, values }
}

pub fn numbers(values: &[f64]) -> Vec<Value> {
    values.iter().map(|&x| Value::Number(x)).collect()
}

pub fn texts(values: &[&str]) -> Vec<Value> {
    values.iter().map(|s| Value::Text(s.to_string())).collect()
}

pub fn table(name: &str, columns: Vec<Column>) -> Table {
    let row_count = columns.first().map_or(0, |c| c.values.len());
    Table { name: name.to_string(), row_count, columns }
}

/// A single quantitative column named `v`.
pub fn vector_table(values: &[f64]) -> Table {
    table("vec", vec![column("v", Role::Quantitative, numbers(values))])
}

/// A random table of at most 12 rows and 4 columns, fully determined by `seed`.
///
/// Columns are drawn from categorical (2 to 4 labels), quantitative (small
/// integers and halves, some built from an earlier quantitative column so
/// correlations appear) and at most one identifier. Cells go missing now and
/// then.
pub fn random_table(seed: u64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = rng.gen_range(0..=12);
    let ncols = rng.gen_range(1..=4);
    let mut columns: Vec<Column> = Vec::new();
    let mut has_identifier = false;
    for c in 0..ncols {
        let pick = rng.gen_range(0..10);
        let name = format!("c{c}");
        let col = if pick < 4 {
            let labels = ["a", "b", "c", "d"];
            let k = rng.gen_range(2..=4);
            let values = (0..rows)
                .map(|_| {
                    if rng.gen_bool(0.05) {
                        Value::Missing
                    } else {
                        Value::Text(labels[rng.gen_range(0..k)].to_string())
                    }
                })
                .collect();
            column(&name, Role::Categorical, values)
        } else if pick < 9 || has_identifier {
            let base: Option<Vec<Value>> = columns
                .iter()
                .filter(|c| c.role == Role::Quantitative)
                .map(|c| c.values.clone())
                .collect::<Vec<_>>()
                .choose(&mut rng)
                .cloned()
                .filter(|_| rng.gen_bool(0.5));
            let constant = rng.gen_bool(0.05).then(|| rng.gen_range(0..5) as f64);
            let slope = [-2.0, -1.0, 0.5, 1.0, 3.0][rng.gen_range(0..5)];
            let values = (0..rows)
                .map(|r| {
                    if rng.gen_bool(0.08) {
                        return Value::Missing;
                    }
                    let noise = rng.gen_range(-4..=4) as f64 / 2.0;
                    let x = match (&constant, &base) {
                        (Some(v), _) => *v,
                        (None, Some(b)) => match b[r] {
                            Value::Number(x) => slope * x + noise,
                            _ => noise,
                        },
                        (None, None) => rng.gen_range(0..40) as f64 / 2.0,
                    };
                    Value::Number(x)
                })
                .collect();
            column(&name, Role::Quantitative, values)
        } else {
            has_identifier = true;
            column(&name, Role::Identifier, (0..rows).map(|r| Value::Text(format!("r{r}"))).collect())
        };
        columns.push(col);
    }
    Table { name: format!("random{seed}"), row_count: rows, columns }
}

pub fn random_engine(seed: u64) -> Engine {
    Engine::new(random_table(seed), relaxed_config())
}
