//! Fuzz the grid-spec parser: accepted grids must be finite, bounded in
//! size, and ascending for range forms.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(points) = msjlab_cli::grid::parse_grid(spec) {
        assert!(points.len() <= 100_000);
        assert!(points.iter().all(|p| p.is_finite()));
        if spec.contains(':') {
            assert!(points.windows(2).all(|w| w[0] <= w[1]));
        }
    }
    let _ = msjlab_cli::grid::parse_n_grid(spec);
});
