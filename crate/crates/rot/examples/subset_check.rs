//! Symbolic simulation of free-form reasoning by in-order traversals.
//!
//! Every row-consumption order a reasoning chain can take is replayed by
//! walking the table in order, once per descent in the order. This
//! example traces a few orders by hand and then runs the exhaustive
//! check (the same one `rot simulate` exposes).
//!
//! ```bash
//! cargo run -p rot --example subset_check
//! ```

use rot::formal::{descent_count, eval_long_cot, eval_rot_simulation, verify_subset, LongCotSpec};

fn main() -> rot::Result<()> {
    for sigma in [vec![1, 2, 3], vec![2, 1, 3], vec![3, 2, 1]] {
        let spec = LongCotSpec::new(sigma.clone())?;
        let direct = eval_long_cot(&spec);
        let (simulated, passes) = eval_rot_simulation(&spec);
        println!(
            "sigma {:?}: consumed {:?}, {passes} pass(es), descents oracle {}",
            sigma,
            simulated.consumed,
            descent_count(&sigma)
        );
        assert_eq!(simulated, direct);
    }

    let report = verify_subset(7);
    println!("\nexhaustive check up to 7 rows: {report}");
    assert!(report.is_ok());
    Ok(())
}
