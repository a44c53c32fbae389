//! Trench-style interior zero padding: one line splits the map into two
//! regions that convolve as independent zero-padded images.

use padlab::padmodes::{conv2d_with_region, conv2d_with_trenches, RegionSpec, Side, TrenchSpec};
use padlab::tensor::{conv2d, Axis, ConvSpec, FeatureMap, PaddingMode};

fn print_map(title: &str, f: &FeatureMap) {
    println!("{title}");
    for i in 0..f.height() {
        let row: Vec<String> = (0..f.width())
            .map(|j| format!("{:4.1}", f.get(0, 0, i, j)))
            .collect();
        println!("  {}", row.join(" "));
    }
}

fn main() -> padlab::Result<()> {
    let ones = FeatureMap::new(1, 1, 6, 6, vec![1.0; 36])?;
    let spec = ConvSpec::box_sum(1, 3, PaddingMode::Zero)?;

    print_map("plain 3x3 window sums on a 6x6 ones map:", &conv2d(&ones, &spec)?);

    let trench = [TrenchSpec::new(Axis::Rows, 3)];
    print_map(
        "\nwith a row trench between rows 2 and 3 (two independent 3x6 images):",
        &conv2d_with_trenches(&ones, &spec, &trench)?,
    );

    // The unidirectional variant: only the region's own windows change.
    let region = RegionSpec::new(2, 2, 2, 2, Side::Inward);
    print_map(
        "\nunidirectional zero padding around the central 2x2 (lambda = 0):",
        &conv2d_with_region(&ones, &spec, &region, 0.0)?,
    );
    println!("\nthe four central cells now behave like a standalone 2x2 image (sum 4),");
    println!("while everything outside the region convolves normally.");
    Ok(())
}
