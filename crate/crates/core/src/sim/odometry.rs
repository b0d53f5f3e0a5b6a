use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::KinematicState;
use crate::geometry::Pose;

pub const SIGMA_XY: f64 = 0.02;
pub const SIGMA_THETA: f64 = 0.01;

/// Pose as read from wheel odometry. With a seed, adds independent Gaussian
/// noise to x, y and θ; without one it is the true pose.
pub fn odometry(k: &KinematicState, noise_seed: Option<u64>) -> Pose {
    let Some(seed) = noise_seed else {
        return k.pose;
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xy = Normal::new(0.0, SIGMA_XY).expect("positive sigma");
    let th = Normal::new(0.0, SIGMA_THETA).expect("positive sigma");
    Pose::new(
        k.pose.x + xy.sample(&mut rng),
        k.pose.y + xy.sample(&mut rng),
        k.pose.theta + th.sample(&mut rng),
    )
}

/// Per-tick noise seed derived from the session seed (splitmix64 finalizer).
pub fn tick_seed(session_seed: u64, tick: u64) -> u64 {
    let mut z = session_seed ^ tick.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
