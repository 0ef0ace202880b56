//! Rewrites the bundled anchor table from the default synthetic climate.
//!
//! cargo run --release -p pvtrade-core --example regen_anchors

use pvtrade_core::geo::anchors::AnchorTable;
use pvtrade_core::geo::synthetic::{synthetic_anchor_table, SyntheticClimate};
use pvtrade_core::PvCostInputs;

fn main() -> pvtrade_core::Result<()> {
    let table = AnchorTable::new(synthetic_anchor_table(&SyntheticClimate::default(), &PvCostInputs::default())?)?;
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/anchors.csv");
    table.save(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
