use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a random substream is used for. Each purpose (and index within it)
/// gets its own independent ChaCha stream, so adding draws for one purpose
/// never shifts the numbers seen by another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Arrival process of one entry leg / approach.
    Arrivals(u32),
    /// Choice of approach for generated vehicles.
    Routing,
    /// Beacon phase of one node.
    BeaconPhase(u32),
}

impl Purpose {
    fn stream_id(self) -> u64 {
        match self {
            Purpose::Arrivals(i) => (1 << 40) | u64::from(i),
            Purpose::Routing => 2 << 40,
            Purpose::BeaconPhase(i) => (3 << 40) | u64::from(i),
        }
    }
}

/// Seed plus named substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn substream(&self, purpose: Purpose) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(purpose.stream_id());
        rng
    }
}
