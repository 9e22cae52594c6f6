//! Splittable random number streams.
//!
//! Every replica owns a family of named streams derived deterministically
//! from `(master seed, replica id, role)`. Couplings share exactly the
//! streams they need (per-kernel clock uniforms, kernel noise, acceptance
//! uniforms) between the two processes, while marginal continuations draw
//! from auxiliary streams. Results are therefore bit-reproducible for a
//! fixed master seed regardless of how replicas are scheduled on workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// splitmix64 output function; the standard mixer for seed derivation.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A node in the seed-derivation tree. Children are derived by mixing a
/// label into the key; leaves expand into 32-byte ChaCha seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    key: u64,
}

impl SeedTree {
    pub fn new(master_seed: u64) -> Self {
        let mut s = master_seed ^ 0x3c79_ac49_2ba7_b653;
        SeedTree {
            key: splitmix64(&mut s),
        }
    }

    /// Derive an independent child node.
    pub fn child(&self, label: u64) -> Self {
        let mut s = self.key ^ label.wrapping_mul(0xd1b5_4a32_d192_ed03);
        SeedTree {
            key: splitmix64(&mut s),
        }
    }

    /// Expand this node into a generator.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut s = self.key;
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut s).to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

/// Named stream roles within one replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    /// Event clock of the whole process (total-rate inversion, thinning
    /// proposals of the exact simulator).
    Clock,
    /// Discrete kernel-index draws.
    Pick,
    /// Jump kernel noise draws from the kernel noise law.
    Noise,
    /// Acceptance uniforms for thinning in the exact simulator.
    Accept,
    /// Per-kernel clock uniforms shared between coupled processes.
    KernelClock(u32),
    /// Kernel noise shared between coupled processes.
    SharedNoise,
    /// Acceptance uniforms shared between coupled processes.
    SharedAccept,
    /// Thinning uniforms realising dominating-rate candidates in couplings.
    SharedThin,
    /// Subsample index draws (one per step, shared in couplings).
    Subsample,
    /// Initial state draws.
    Init,
}

impl Role {
    fn label(self) -> u64 {
        match self {
            Role::Clock => 1,
            Role::Pick => 2,
            Role::Noise => 3,
            Role::Accept => 4,
            Role::KernelClock(i) => 0x100 + u64::from(i),
            Role::SharedNoise => 5,
            Role::SharedAccept => 6,
            Role::SharedThin => 7,
            Role::Subsample => 8,
            Role::Init => 9,
        }
    }
}

/// A replica's bundle of named streams, created lazily per role.
#[derive(Debug, Clone)]
pub struct RngBank {
    tree: SeedTree,
    streams: HashMap<u64, ChaCha8Rng>,
}

impl RngBank {
    /// Streams for one replica of an experiment.
    pub fn replica(master_seed: u64, replica_id: u64) -> Self {
        RngBank {
            tree: SeedTree::new(master_seed).child(0xae).child(replica_id),
            streams: HashMap::new(),
        }
    }

    /// An independent sub-bank, e.g. for the marginal continuation of one
    /// process after a coupling has decoupled.
    pub fn subscope(&self, label: u64) -> Self {
        RngBank {
            tree: self.tree.child(0x5c00 + label),
            streams: HashMap::new(),
        }
    }

    /// The stream for `role`, created on first use.
    pub fn stream(&mut self, role: Role) -> &mut ChaCha8Rng {
        let tree = self.tree;
        self.streams
            .entry(role.label())
            .or_insert_with(|| tree.child(role.label()).rng())
    }

    /// One uniform draw on `[0, 1)` from the given role stream.
    pub fn uniform(&mut self, role: Role) -> f64 {
        self.stream(role).gen::<f64>()
    }

    /// One standard exponential level, `-ln(U)`.
    pub fn exp_level(&mut self, role: Role) -> f64 {
        -self.uniform(role).ln()
    }
}
