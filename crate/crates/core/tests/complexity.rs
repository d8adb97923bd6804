use std::time::Instant;

use nearfield_core::lattice::ChannelTensor;
use nearfield_core::ppe::{estimate, reconstruct};
use nearfield_core::{DegreeSet, PolyPhaseModel, Shape};

fn best_of(shape: Shape, runs: usize) -> f64 {
    let set = DegreeSet::for_shape(2, shape).unwrap();
    let coefficients: Vec<f64> = (0..set.len()).map(|i| 0.01 * i as f64 - 0.03).collect();
    let y: ChannelTensor = reconstruct(&PolyPhaseModel::new(set.clone(), coefficients).unwrap());
    (0..runs)
        .map(|_| {
            let start = Instant::now();
            std::hint::black_box(estimate(&y, &set).unwrap());
            start.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn runtime_scales_linearly_in_lattice_size() {
    let small = best_of([16, 1, 32, 1, 2], 7);
    let large = best_of([16, 1, 64, 1, 2], 7);
    let ratio = large / small;
    assert!(ratio <= 2.5, "doubling the lattice took {ratio:.2}x");
}
