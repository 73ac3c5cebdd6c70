//! Shared instances for the benchmarks.

use popsicle_core::rational::{int, ratio};
use popsicle_core::PopsicleParams;

/// `n` vendors, `d = 1/2`, `alpha = 1/4`, prices `{0, 1/2, 1}`, side payments `{0, 1}`.
pub fn attack_instance(n: usize) -> PopsicleParams {
    PopsicleParams::new(n, ratio(1, 2), ratio(1, 4), vec![int(0), ratio(1, 2), int(1)], vec![int(0), int(1)])
        .expect("valid instance")
}

/// Five-point price grid with `d = 1`.
pub fn competition_instance(n: usize) -> PopsicleParams {
    let prices = (0..=4).map(|k| ratio(k, 4)).collect();
    PopsicleParams::new(n, int(1), ratio(1, 4), prices, vec![int(0), int(1)]).expect("valid instance")
}
