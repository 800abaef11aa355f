//! Seeded synthetic trade and GDP panels for self-tests and benchmarks.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ecomplexity_core::data::{ProductKind, Series, TradeRecord, TradeTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;
use crate::fmt::num;
use crate::io::write_trade_csv;

pub struct SyntheticPanel {
    pub table: TradeTable,
    pub kinds: BTreeMap<String, ProductKind>,
    pub gdp: Series,
}

/// Countries carry a capability level, products a difficulty; a country
/// exports a product in volume when its capability exceeds the difficulty,
/// which makes the incidence matrix roughly nested.
/// The last quarter of the products are services. GDP grows faster for
/// more capable countries.
pub fn synthetic_panel(n_countries: usize, n_products: usize, years: std::ops::Range<i32>, seed: u64) -> SyntheticPanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_services = n_products / 4;
    let n_goods = n_products - n_services;
    let products: Vec<String> = (0..n_products)
        .map(|j| {
            if j < n_goods {
                format!("{}{}", j % 10, j / 10)
            } else {
                format!("S{:02}", j - n_goods + 1)
            }
        })
        .collect();
    let kinds = products
        .iter()
        .enumerate()
        .map(|(j, p)| (p.clone(), if j < n_goods { ProductKind::Good } else { ProductKind::Service }))
        .collect();
    let countries: Vec<String> = (0..n_countries).map(|i| format!("C{i:03}")).collect();
    let capability: Vec<f64> = (0..n_countries).map(|_| rng.random::<f64>()).collect();
    let drift: Vec<f64> = (0..n_countries).map(|_| rng.random_range(-0.01..0.01)).collect();
    let difficulty: Vec<f64> = (0..n_products)
        .map(|j| rng.random::<f64>() * 0.8 + if j >= n_goods { 0.2 } else { 0.0 })
        .collect();
    let size: Vec<f64> = (0..n_countries).map(|_| rng.random_range(1.0..100.0)).collect();
    let level_shift: Vec<f64> = (0..n_countries).map(|_| 2.0 * (rng.random::<f64>() - 0.5)).collect();
    // Persistent log-volume per country and product, so that each country
    // has a stable advantage inside the set of products it can make.
    let affinity: Vec<Vec<f64>> = (0..n_countries)
        .map(|_| (0..n_products).map(|_| 3.0 * (rng.random::<f64>() - 0.5)).collect())
        .collect();

    let mut records = Vec::new();
    let mut gdp = Series::new();
    for year in years.clone() {
        let t = f64::from(year - years.start);
        for (i, c) in countries.iter().enumerate() {
            let a = capability[i] + drift[i] * t;
            for (j, p) in products.iter().enumerate() {
                let gap = a - difficulty[j];
                // Products beyond reach appear only as small, sporadic flows.
                let reach = if gap > 0.0 {
                    1.0
                } else if rng.random_bool(0.2) {
                    0.05
                } else {
                    continue;
                };
                let noise = (affinity[i][j] + 0.3 * (rng.random::<f64>() - 0.5)).exp();
                let value = (size[i] * 1000.0 * reach * noise * 1e3).round() / 1e3;
                if value > 0.0 {
                    records.push(TradeRecord::new(year, c, p, value).expect("valid synthetic record"));
                }
            }
            let growth = 0.01 + 0.03 * capability[i] + 0.005 * (rng.random::<f64>() - 0.5);
            let level = 1000.0 * (capability[i] + level_shift[i]).exp() * (growth * t).exp();
            gdp.insert((c.clone(), year), (level * 100.0).round() / 100.0);
        }
    }
    SyntheticPanel {
        table: TradeTable::aggregate(records, "synthetic").0,
        kinds,
        gdp,
    }
}

pub struct SyntheticFiles {
    pub trade: PathBuf,
    pub kinds: PathBuf,
    pub gdp: PathBuf,
}

pub fn write_panel(panel: &SyntheticPanel, dir: &Path) -> Result<SyntheticFiles, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let files = SyntheticFiles {
        trade: dir.join("trade.csv"),
        kinds: dir.join("kinds.csv"),
        gdp: dir.join("gdp.csv"),
    };
    let create = |p: &Path| File::create(p).map(BufWriter::new).map_err(|e| CliError::io(p, e));

    let w = create(&files.trade)?;
    write_trade_csv(&panel.table, w).map_err(|e| CliError::io(&files.trade, e.into()))?;

    let mut w = create(&files.kinds)?;
    let mut text = String::from("product,kind\n");
    for (p, k) in &panel.kinds {
        text.push_str(&format!("{p},{}\n", k.name()));
    }
    w.write_all(text.as_bytes()).map_err(|e| CliError::io(&files.kinds, e))?;

    let mut w = create(&files.gdp)?;
    let mut text = String::from("country,year,value\n");
    for ((c, y), v) in &panel.gdp {
        text.push_str(&format!("{c},{y},{}\n", num(*v)));
    }
    w.write_all(text.as_bytes()).map_err(|e| CliError::io(&files.gdp, e))?;
    Ok(files)
}
