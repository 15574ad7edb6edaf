//! Table model and the pinned Markdown dialect: build a table, render
//! it, parse it back, and slice out traversal units.
//!
//! ```bash
//! cargo run -p rot --example tables
//! ```

use rot::table::{flatten_headers, Table, TraversalUnit};

fn main() -> rot::Result<()> {
    let table = Table::flat(
        &["Athlete", "Sport", "Medals"],
        &[
            &["Alice Keller", "Skiing", "3"],
            &["Boris Sand", "Biathlon", "1"],
            &["Carla Moen", "Skating", "2"],
        ],
    )?;
    println!("{} rows x {} cols, size {}", table.n_rows(), table.n_cols(), table.size());
    println!("\n{}\n", table.to_markdown());

    // The dialect round-trips: parse(serialize(t)) == t.
    let reparsed = Table::from_markdown(&table.to_markdown())?;
    assert_eq!(reparsed, table);
    println!("round-trip: ok");

    // Hierarchical headers flatten into one line with " / ".
    let hierarchical = Table::new(
        vec![
            vec!["Region".into()],
            vec!["Population".into(), "2010".into()],
            vec!["Population".into(), "2020".into()],
        ],
        vec![
            vec!["North".into(), "1200".into(), "1350".into()],
            vec!["South".into(), "2100".into(), "2080".into()],
        ],
    )?;
    println!(
        "\nflattened headers: {:?}",
        flatten_headers(hierarchical.header_paths(), " / ")
    );
    println!("{}\n", hierarchical.to_markdown());

    // Pipes in cells are escaped, so structure survives hostile content.
    let hostile = Table::flat(&["Expr"], &[&["a|b"], &["c\\|d"]])?;
    println!("{}", hostile.to_markdown());
    assert_eq!(Table::from_markdown(&hostile.to_markdown())?, hostile);

    // Traversal units slice to sub-tables.
    for (unit, index) in [
        (TraversalUnit::Row, 0),
        (TraversalUnit::Column, 2),
        (TraversalUnit::Cell, 5),
    ] {
        let slice = table.slice_unit(unit, index)?;
        println!("\n{unit} {index}:\n{}", slice.to_markdown());
    }
    Ok(())
}
