//! The unfold / fold pair: extract sliding windows, put them back with
//! overlap-add, and recover the input after dividing by the overlap counts.

use padlab::tensor::{fold, fold_normalized, overlap_count, unfold, FeatureMap};

fn main() -> padlab::Result<()> {
    let f = FeatureMap::from_fn(1, 1, 4, 4, |_, _, i, j| (i * 4 + j) as f32)?;
    println!("input 4x4 (values 0..16), K=2, S=1");

    let patches = unfold(&f, 2, 1)?;
    println!(
        "unfold: {} columns of length {}",
        patches.columns(),
        patches.patch_len()
    );
    println!("column 0 (window at the top-left): {:?}", {
        let l = patches.patch_len();
        (0..l).map(|r| patches.get(0, r, 0)).collect::<Vec<_>>()
    });

    let counts = overlap_count(4, 4, 2, 1)?;
    println!("\noverlap counts (corner cells sit in 1 window, center in 4):");
    for i in 0..4 {
        let row: Vec<String> = (0..4)
            .map(|j| format!("{:.0}", counts.get(0, 0, i, j)))
            .collect();
        println!("  {}", row.join(" "));
    }

    let summed = fold(&patches)?;
    println!("\nfold alone overlap-adds: cell (1,1) holds {} (= 4 * input)", summed.get(0, 0, 1, 1));

    let round = fold_normalized(&patches)?;
    let err = round.max_rel_diff(&f)?;
    println!("fold(unfold(F)) / counts recovers F, max relative error {err:.2e}");
    Ok(())
}
