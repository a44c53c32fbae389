//! Pad a tiny map under each mode and watch how window sums change at the
//! border: only zero padding marks where the image ends.

use padlab::tensor::{conv2d, pad, ConvSpec, FeatureMap, PaddingMode};

fn print_map(title: &str, f: &FeatureMap) {
    println!("{title}");
    for i in 0..f.height() {
        let row: Vec<String> = (0..f.width())
            .map(|j| format!("{:5.1}", f.get(0, 0, i, j)))
            .collect();
        println!("  {}", row.join(" "));
    }
}

fn main() -> padlab::Result<()> {
    let f = FeatureMap::new(1, 1, 3, 3, (1..=9).map(|v| v as f32).collect())?;
    print_map("input 3x3:", &f);

    for mode in PaddingMode::ALL {
        let padded = pad(&f, mode, (1, 1))?;
        print_map(&format!("\npadded with {}:", mode.name()), &padded);
    }

    // Window sums over an all-ones map: zero padding shrinks border windows,
    // circular padding sees a torus and every window stays full.
    let ones = FeatureMap::new(1, 1, 4, 4, vec![1.0; 16])?;
    for mode in [PaddingMode::Zero, PaddingMode::Circular] {
        let spec = ConvSpec::box_sum(1, 3, mode)?;
        let out = conv2d(&ones, &spec)?;
        print_map(&format!("\n3x3 window sums, {} padding:", mode.name()), &out);
    }
    println!("\nzero padding is the only mode that tells a cell how far the border is.");
    Ok(())
}
