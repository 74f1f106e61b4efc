/// Size caps applied before exact computation starts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Bound on `scale * max(H * max|cost|, max|budget|)`.
    pub max_lattice: u64,
    /// Bound on the number of OR plus AND nodes in the feasibility DAG.
    pub max_nodes: usize,
    /// Bound on `H * S * A * D` for the brute-force feasibility oracle.
    pub oracle_cap: u64,
}

pub const MAX_NODES_ENV: &str = "ACE_MAX_NODES";

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_lattice: 1 << 31,
            max_nodes: 4_000_000,
            oracle_cap: 100_000,
        }
    }
}

impl Limits {
    /// Defaults, with `ACE_MAX_NODES` overriding the DAG cap when it parses.
    pub fn from_env() -> Self {
        let mut limits = Limits::default();
        if let Some(nodes) = std::env::var(MAX_NODES_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
        {
            limits.max_nodes = nodes;
        }
        limits
    }

    pub fn unbounded() -> Self {
        Limits {
            max_lattice: u64::MAX,
            max_nodes: usize::MAX,
            oracle_cap: u64::MAX,
        }
    }
}
