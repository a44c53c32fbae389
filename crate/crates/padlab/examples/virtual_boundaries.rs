//! Virtual boundaries: hierarchical placement, random perturbation, and the
//! two application modes (whole-patch scaling vs cross-read attenuation).

use padlab::pbc::{
    apply_pbc_crossboundary, apply_pbc_wholepatch, perturbed_for_layer, place_boundaries, Axes,
};
use padlab::tensor::{ConvSpec, FeatureMap, PaddingMode};

fn main() -> padlab::Result<()> {
    let (h, w) = (32, 32);

    let set = place_boundaries(3, h, w, Axes::Both)?;
    println!("hierarchical placement, N = 3 on a {h}x{w} map:");
    for b in set.boundaries() {
        let (near, far) = b.cell_offsets();
        println!(
            "  {:?} boundary: ratio {:.2}, cells {} and {} (ratio = 2l/s)",
            b.axis(),
            b.ratio(),
            near,
            far
        );
    }

    let perturbable = set.clone().with_perturbation(2, 42);
    println!("\nrandom perturbation (r = 2) re-drawn per layer:");
    for layer in 0..3 {
        let moved = perturbed_for_layer(&perturbable, layer);
        let offsets: Vec<usize> = moved.boundaries().iter().map(|b| b.offset()).collect();
        println!("  layer {layer}: offsets {offsets:?}");
    }

    // Whole-patch mode scales the unfolded patches whose window centers sit
    // on boundary cells, then folds back.
    let f = FeatureMap::new(1, 1, h, w, vec![1.0; h * w])?;
    let wholepatch = apply_pbc_wholepatch(&f, &set, 3, 1)?;
    let row = h / 2;
    print!("\nwhole-patch attenuation profile along row {row}: ");
    let profile: Vec<String> = (0..w)
        .step_by(2)
        .map(|j| format!("{:.2}", wholepatch.get(0, 0, row, j)))
        .collect();
    println!("{}", profile.join(" "));

    // Cross-boundary mode attenuates reads that cross the boundary edges
    // during convolution itself.
    let spec = ConvSpec::box_sum(1, 3, PaddingMode::Zero)?;
    let crossed = apply_pbc_crossboundary(&f, &set, &spec)?;
    print!("cross-boundary window sums along row {row}:   ");
    let profile: Vec<String> = (0..w)
        .step_by(2)
        .map(|j| format!("{:.2}", crossed.get(0, 0, row, j)))
        .collect();
    println!("{}", profile.join(" "));

    println!("\ndips mark the virtual boundaries; smaller ratios dig deeper trenches.");
    Ok(())
}
