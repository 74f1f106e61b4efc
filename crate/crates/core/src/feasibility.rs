//! AND/OR feasibility structure over `(time, state, cumulative cost)`.
//!
//! OR nodes are `(h, s, c̄)` triples; AND nodes are feasible joint actions
//! taken at an OR node. A joint action is feasible when no supported cost
//! can push the cumulative cost over budget. An AND node is TRUE when all
//! of its outcomes are TRUE, an OR node when some action is TRUE, and every
//! node at time `H + 1` is TRUE.
//!
//! Identical `(h, s, c̄)` keys have identical subtrees, so the structure is
//! built as a DAG with one node per key rather than as a tree.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::config::Limits;
use crate::error::{Error, Result};
use crate::game::{Game, LatticeModel};

/// Cumulative cost on the integer lattice, one entry per player.
pub type CostVec = Vec<i64>;

/// An augmented state `(s, c̄)`. Ordered by state, then lexicographically
/// by cost.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AugState {
    pub state: usize,
    pub cost: CostVec,
}

impl AugState {
    pub fn new(state: usize, cost: CostVec) -> Self {
        AugState { state, cost }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    Unlabeled,
    True,
    False,
}

#[derive(Clone, Debug)]
pub struct OrNode {
    pub key: AugState,
    pub label: Label,
    /// AND nodes of this layer hanging off this OR node.
    pub and_children: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct AndNode {
    pub parent: usize,
    pub action: usize,
    /// OR nodes of the next layer, sorted and deduplicated.
    pub children: Vec<usize>,
    pub label: Label,
}

#[derive(Clone, Debug)]
pub struct Layer {
    pub time: usize,
    pub or_nodes: Vec<OrNode>,
    pub and_nodes: Vec<AndNode>,
    index: HashMap<AugState, usize>,
}

impl Layer {
    fn new(time: usize, keys: BTreeSet<AugState>) -> Self {
        let or_nodes: Vec<OrNode> = keys
            .into_iter()
            .map(|key| OrNode {
                key,
                label: Label::Unlabeled,
                and_children: Vec::new(),
            })
            .collect();
        let index = or_nodes.iter().enumerate().map(|(i, n)| (n.key.clone(), i)).collect();
        Layer {
            time,
            or_nodes,
            and_nodes: Vec::new(),
            index,
        }
    }

    pub fn find(&self, key: &AugState) -> Option<usize> {
        self.index.get(key).copied()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DagStats {
    pub or_nodes: usize,
    pub and_nodes: usize,
    pub edges: usize,
    /// Distinct cumulative-cost vectors over all OR nodes.
    pub distinct_costs: usize,
}

/// Memoized AND/OR graph rooted at `(1, s₁, 0)`. Layer `k` holds time
/// `k + 1`; there are `H + 1` layers.
#[derive(Clone, Debug)]
pub struct FeasibilityDag {
    pub horizon: usize,
    pub players: usize,
    pub layers: Vec<Layer>,
    labeled: bool,
}

impl FeasibilityDag {
    pub fn layer(&self, h: usize) -> &Layer {
        &self.layers[h - 1]
    }

    pub fn is_labeled(&self) -> bool {
        self.labeled
    }

    pub fn root_label(&self) -> Label {
        self.layers[0].or_nodes[0].label
    }

    pub fn stats(&self) -> DagStats {
        let mut costs = BTreeSet::new();
        let mut stats = DagStats::default();
        for layer in &self.layers {
            stats.or_nodes += layer.or_nodes.len();
            stats.and_nodes += layer.and_nodes.len();
            stats.edges += layer.and_nodes.len();
            stats.edges += layer.and_nodes.iter().map(|n| n.children.len()).sum::<usize>();
            costs.extend(layer.or_nodes.iter().map(|n| n.key.cost.clone()));
        }
        stats.distinct_costs = costs.len();
        stats
    }

    pub fn node_count(&self) -> usize {
        self.layers.iter().map(|l| l.or_nodes.len() + l.and_nodes.len()).sum()
    }
}

/// True when every supported cost keeps `c̄ + c <= B` for all players.
pub fn is_feasible_action(model: &LatticeModel, h: usize, state: usize, cost: &[i64], action: usize) -> bool {
    model
        .cell(h, state, action)
        .max_cost
        .iter()
        .zip(cost)
        .zip(&model.budget)
        .all(|((m, c), b)| c + m <= *b)
}

/// Expands feasible actions and their outcomes breadth-first from the root.
pub fn build_feasibility_dag(model: &LatticeModel, limits: &Limits) -> Result<FeasibilityDag> {
    let root = AugState::new(model.initial_state, vec![0; model.players]);
    let mut layers = vec![Layer::new(1, BTreeSet::from([root]))];
    let mut total = 1usize;

    for h in 1..=model.horizon {
        let current = &layers[h - 1];
        let mut next_keys = BTreeSet::new();
        let mut pending: Vec<(usize, usize, BTreeSet<AugState>)> = Vec::new();
        for (oi, node) in current.or_nodes.iter().enumerate() {
            for action in 0..model.joint.len() {
                if !is_feasible_action(model, h, node.key.state, &node.key.cost, action) {
                    continue;
                }
                let cell = model.cell(h, node.key.state, action);
                let mut children = BTreeSet::new();
                for (next_state, _) in &cell.next {
                    for (cost, _) in &cell.costs {
                        let cumulative: CostVec = node.key.cost.iter().zip(cost).map(|(a, b)| a + b).collect();
                        children.insert(AugState::new(*next_state, cumulative));
                    }
                }
                next_keys.extend(children.iter().cloned());
                pending.push((oi, action, children));
            }
        }

        total += pending.len() + next_keys.len();
        if total > limits.max_nodes {
            return Err(Error::Size(format!(
                "feasibility DAG exceeds {} nodes at time {h}",
                limits.max_nodes
            )));
        }

        let next = Layer::new(h + 1, next_keys);
        let current = &mut layers[h - 1];
        for (oi, action, children) in pending {
            let id = current.and_nodes.len();
            current.or_nodes[oi].and_children.push(id);
            current.and_nodes.push(AndNode {
                parent: oi,
                action,
                children: children.iter().map(|k| next.index[k]).collect(),
                label: Label::Unlabeled,
            });
        }
        layers.push(next);
    }

    Ok(FeasibilityDag {
        horizon: model.horizon,
        players: model.players,
        layers,
        labeled: false,
    })
}

/// Labels every node bottom-up in one reverse sweep over the layers.
pub fn ao_solve(dag: &mut FeasibilityDag) {
    let horizon = dag.horizon;
    for node in &mut dag.layers[horizon].or_nodes {
        node.label = Label::True;
    }
    for h in (1..=horizon).rev() {
        let (head, tail) = dag.layers.split_at_mut(h);
        let layer = &mut head[h - 1];
        let next = &tail[0];
        for node in &mut layer.and_nodes {
            let ok = node.children.iter().all(|&c| next.or_nodes[c].label == Label::True);
            node.label = if ok { Label::True } else { Label::False };
        }
        let and_nodes = &layer.and_nodes;
        for node in &mut layer.or_nodes {
            let ok = node.and_children.iter().any(|&a| and_nodes[a].label == Label::True);
            node.label = if ok { Label::True } else { Label::False };
        }
    }
    dag.labeled = true;
}

/// `FS_h` and `FA_h` for `h = 1..=H`, plus the time-`H + 1` states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibleSets {
    pub horizon: usize,
    layers: Vec<BTreeMap<AugState, Vec<usize>>>,
    terminal: BTreeSet<AugState>,
}

impl FeasibleSets {
    /// Builds sets directly. `layers[h - 1]` maps each state of `FS_h` to
    /// its sorted `FA_h` list.
    pub fn from_parts(layers: Vec<BTreeMap<AugState, Vec<usize>>>, terminal: BTreeSet<AugState>) -> Self {
        FeasibleSets {
            horizon: layers.len(),
            layers,
            terminal,
        }
    }

    /// States of `FS_h` in canonical order; `h` may be `H + 1`.
    pub fn states(&self, h: usize) -> Vec<&AugState> {
        if h == self.horizon + 1 {
            self.terminal.iter().collect()
        } else {
            self.layers[h - 1].keys().collect()
        }
    }

    pub fn contains(&self, h: usize, key: &AugState) -> bool {
        if h == self.horizon + 1 {
            self.terminal.contains(key)
        } else {
            self.layers[h - 1].contains_key(key)
        }
    }

    pub fn actions(&self, h: usize, key: &AugState) -> Option<&[usize]> {
        self.layers.get(h - 1)?.get(key).map(Vec::as_slice)
    }

    pub fn layer(&self, h: usize) -> &BTreeMap<AugState, Vec<usize>> {
        &self.layers[h - 1]
    }

    pub fn terminal(&self) -> &BTreeSet<AugState> {
        &self.terminal
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.layers.iter().map(BTreeMap::len).collect();
        sizes.push(self.terminal.len());
        sizes
    }
}

/// `None` when the root is FALSE. Otherwise keeps the TRUE nodes reachable
/// from the root through TRUE AND nodes, with `FA_h` the actions of the
/// TRUE AND children.
pub fn extract_feasible_sets(dag: &FeasibilityDag) -> Option<FeasibleSets> {
    assert!(dag.labeled, "extract_feasible_sets needs a labeled DAG");
    if dag.root_label() != Label::True {
        return None;
    }
    let mut reached: Vec<usize> = vec![0];
    let mut layers = Vec::with_capacity(dag.horizon);
    for h in 1..=dag.horizon {
        let layer = &dag.layers[h - 1];
        let mut next_reached = BTreeSet::new();
        let mut map = BTreeMap::new();
        for &oi in &reached {
            let node = &layer.or_nodes[oi];
            debug_assert_eq!(node.label, Label::True);
            let mut actions = Vec::new();
            for &ai in &node.and_children {
                let and = &layer.and_nodes[ai];
                if and.label == Label::True {
                    actions.push(and.action);
                    next_reached.extend(and.children.iter().copied());
                }
            }
            map.insert(node.key.clone(), actions);
        }
        layers.push(map);
        reached = next_reached.into_iter().collect();
    }
    let last = &dag.layers[dag.horizon];
    let terminal = reached.iter().map(|&i| last.or_nodes[i].key.clone()).collect();
    Some(FeasibleSets {
        horizon: dag.horizon,
        layers,
        terminal,
    })
}

/// Everything the feasibility stage produces for one game.
#[derive(Clone, Debug)]
pub struct FeasibilityAnalysis {
    pub model: LatticeModel,
    pub dag: FeasibilityDag,
    pub sets: Option<FeasibleSets>,
    /// Cost precision in bits of the scaled game.
    pub precision_bits: u64,
}

impl FeasibilityAnalysis {
    pub fn is_feasible(&self) -> bool {
        self.sets.is_some()
    }

    /// `(H · 2^(d+1))^n` as a float.
    pub fn distinct_cost_bound(&self) -> f64 {
        let per_player = self.model.horizon as f64 * 2f64.powi(self.precision_bits as i32 + 1);
        per_player.powi(self.model.players as i32)
    }
}

/// Scale, build, label and extract in one call.
pub fn analyze(game: &Game, limits: &Limits) -> Result<FeasibilityAnalysis> {
    let model = LatticeModel::new(game, limits)?;
    let mut dag = build_feasibility_dag(&model, limits)?;
    ao_solve(&mut dag);
    let sets = extract_feasible_sets(&dag);
    Ok(FeasibilityAnalysis {
        precision_bits: crate::game::cost_precision_bits(game),
        model,
        dag,
        sets,
    })
}
