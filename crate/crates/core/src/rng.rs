//! Named, index-keyed random substreams derived from a single root seed.
//!
//! Every consumer of randomness asks for `substream(root, name, index)`, so
//! changing how one component draws numbers never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const GENERATE: &str = "generate";
pub const INIT: &str = "init";
pub const INIT_NOISE: &str = "init-noise";
pub const REMOTES: &str = "remotes";

fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn substream(root: u64, name: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root ^ fnv1a(name));
    rng.set_stream(index);
    rng
}
