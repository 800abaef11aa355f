mod common;

use ecomplexity_core::data::{build_export_matrix, TradeRecord, TradeTable};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn records() -> impl Strategy<Value = Vec<(i32, u8, u8, f64)>> {
    prop::collection::vec((2000i32..2003, 0u8..6, 0u8..5, 0.0f64..100.0), 1..60)
}

fn table(rows: &[(i32, u8, u8, f64)]) -> TradeTable {
    let recs: Vec<TradeRecord> = rows
        .iter()
        .map(|&(y, c, p, v)| TradeRecord::new(y, format!("C{c}"), format!("{p}0"), v).unwrap())
        .collect();
    TradeTable::aggregate(recs, "test").0
}

proptest! {
    #[test]
    fn export_matrix_ignores_record_order(rows in records(), seed in 0u64..1000) {
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut common::rng(seed));
        let (a, b) = (table(&rows), table(&shuffled));
        for year in 2000..2003 {
            match (build_export_matrix(&a, year), build_export_matrix(&b, year)) {
                (Ok((ma, pa)), Ok((mb, pb))) => {
                    prop_assert_eq!(&ma.countries, &mb.countries);
                    prop_assert_eq!(&ma.products, &mb.products);
                    prop_assert_eq!(pa, pb);
                    for (x, y) in ma.values.as_slice().iter().zip(mb.values.as_slice()) {
                        prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
                    }
                    prop_assert!(ma.values.row_sums().iter().all(|&s| s > 0.0));
                    prop_assert!(ma.values.col_sums().iter().all(|&s| s > 0.0));
                }
                (Err(ea), Err(eb)) => prop_assert_eq!(ea, eb),
                (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
            }
        }
    }
}
