//! PUCT Monte Carlo tree search.
//!
//! Edge statistics are kept from the point of view of the player choosing
//! the edge, so selection always maximizes. A leaf value `v` for the side to
//! move at the leaf is credited as `-v` to the edge that entered the leaf and
//! alternates sign from there up to the root.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use thiserror::Error;

use crate::encoding::{encode_action, normalize_over, ActionIndex};
use crate::evaluator::Evaluator;
use crate::rules::{GameState, GameStatus, Move, DEFAULT_MOVE_CAP};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("search started from a finished game")]
    TerminalRoot,
    #[error("node has no children")]
    NoChildren,
    #[error("no edge has been visited")]
    NoVisits,
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub simulations: u32,
    pub c_puct: f64,
    pub dirichlet_epsilon: f64,
    pub dirichlet_alpha: f64,
    pub temperature: f64,
    pub rng_seed: u64,
    /// Ply count at which positions inside the tree are scored as draws.
    pub move_cap: u32,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            simulations: 200,
            c_puct: 1.5,
            dirichlet_epsilon: 0.25,
            dirichlet_alpha: 0.3,
            temperature: 1.0,
            rng_seed: 0,
            move_cap: DEFAULT_MOVE_CAP,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::InvalidConfig(m.into()));
        if self.simulations == 0 {
            return bad("simulations must be positive");
        }
        if !(self.c_puct > 0.0 && self.c_puct.is_finite()) {
            return bad("c_puct must be positive");
        }
        if !(0.0..=1.0).contains(&self.dirichlet_epsilon) {
            return bad("dirichlet_epsilon must lie in [0, 1]");
        }
        if !(self.dirichlet_alpha > 0.0 && self.dirichlet_alpha.is_finite()) {
            return bad("dirichlet_alpha must be positive");
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad("temperature must be non-negative");
        }
        if self.move_cap == 0 {
            return bad("move_cap must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub action: ActionIndex,
    pub mv: Move,
    pub prior: f64,
    pub visits: u32,
    pub total_value: f64,
    child: Option<usize>,
}

impl Edge {
    pub fn new(mv: Move, prior: f64) -> Self {
        Edge {
            action: encode_action(mv),
            mv,
            prior,
            visits: 0,
            total_value: 0.0,
            child: None,
        }
    }

    /// Mean value W/N, or 0 before the first visit.
    pub fn q(&self) -> f64 {
        if self.visits == 0 {
            0.0
        } else {
            self.total_value / self.visits as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchNode {
    pub state: GameState,
    pub edges: Vec<Edge>,
    /// Sum of the edge visit counts.
    pub visits: u32,
    pub expanded: bool,
    /// Exact value for the side to move when the game is over here.
    pub terminal_value: Option<f64>,
}

impl SearchNode {
    pub fn new(state: GameState, move_cap: u32) -> Self {
        let status = state.status_with_cap(move_cap);
        let terminal_value = match status {
            GameStatus::Ongoing => None,
            s => Some(s.score_for(state.side_to_move())),
        };
        SearchNode {
            state,
            edges: Vec::new(),
            visits: 0,
            expanded: false,
            terminal_value,
        }
    }
}

/// `Q + c * P * sqrt(N(s)) / (1 + N(s,a))`.
pub fn puct_score(q: f64, prior: f64, parent_visits: u32, edge_visits: u32, c: f64) -> f64 {
    q + c * prior * (parent_visits as f64).sqrt() / (1.0 + edge_visits as f64)
}

pub fn ucb(edge: &Edge, parent_visits: u32, c: f64) -> f64 {
    puct_score(edge.q(), edge.prior, parent_visits, edge.visits, c)
}

/// Index of the edge with the highest UCB; ties go to the higher prior,
/// then the lower action index.
pub fn select_child(node: &SearchNode, c: f64) -> Result<usize, SearchError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, edge) in node.edges.iter().enumerate() {
        let score = ucb(edge, node.visits, c);
        let better = match best {
            None => true,
            Some((b, bs)) => {
                let other = &node.edges[b];
                score > bs
                    || (score == bs
                        && (edge.prior > other.prior
                            || (edge.prior == other.prior && edge.action < other.action)))
            }
        };
        if better {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i).ok_or(SearchError::NoChildren)
}

/// Evaluates an unexpanded node and creates one edge per legal move, sorted
/// by action index. Returns the value for the side to move; terminal nodes
/// return their exact value and gain no edges.
pub fn expand_and_evaluate<E: Evaluator + ?Sized>(node: &mut SearchNode, evaluator: &E) -> f64 {
    if let Some(v) = node.terminal_value {
        return v;
    }
    let eval = evaluator.evaluate(&node.state);
    let mut moves = node.state.legal_moves();
    moves.sort_by_key(|&m| encode_action(m));
    let indices: Vec<usize> = moves.iter().map(|&m| encode_action(m).value()).collect();
    let priors = normalize_over(eval.policy.as_slice(), &indices)
        .expect("non-terminal positions have a legal move");
    node.edges = moves
        .into_iter()
        .zip(priors)
        .map(|(mv, p)| Edge::new(mv, p))
        .collect();
    node.expanded = true;
    eval.value.clamp(-1.0, 1.0)
}

/// Mixes Dirichlet(alpha) noise into the priors with weight `epsilon`.
pub fn add_root_noise(node: &mut SearchNode, epsilon: f64, alpha: f64, rng: &mut impl Rng) {
    if node.edges.is_empty() || epsilon == 0.0 {
        return;
    }
    let gamma = Gamma::new(alpha, 1.0).expect("alpha validated positive");
    let mut noise: Vec<f64> = node.edges.iter().map(|_| gamma.sample(rng)).collect();
    let sum: f64 = noise.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        noise.iter_mut().for_each(|d| *d /= sum);
    } else {
        let u = 1.0 / noise.len() as f64;
        noise.iter_mut().for_each(|d| *d = u);
    }
    for (edge, d) in node.edges.iter_mut().zip(noise) {
        edge.prior = (1.0 - epsilon) * edge.prior + epsilon * d;
    }
}

/// Arena of nodes; index 0 is the root.
#[derive(Debug, Clone)]
pub struct SearchTree {
    pub nodes: Vec<SearchNode>,
}

impl SearchTree {
    pub fn new(root: GameState, move_cap: u32) -> Self {
        SearchTree {
            nodes: vec![SearchNode::new(root, move_cap)],
        }
    }

    pub fn root(&self) -> &SearchNode {
        &self.nodes[0]
    }

    pub fn child(&self, node: usize, edge: usize) -> Option<usize> {
        self.nodes[node].edges[edge].child
    }
}

/// Walks `path` (pairs of node and edge index, root first) from the leaf end
/// upward. The leafmost edge receives `v`, the next `-v`, and so on.
pub fn backpropagate(tree: &mut SearchTree, path: &[(usize, usize)], v: f64) {
    let mut value = v;
    for &(node, edge) in path.iter().rev() {
        let n = &mut tree.nodes[node];
        n.visits += 1;
        let e = &mut n.edges[edge];
        e.visits += 1;
        e.total_value += value;
        value = -value;
    }
}

/// Visit-count policy: `N^(1/tau)` normalized, or one-hot on the most visited
/// action (lowest index on ties) when `tau == 0`.
pub fn policy_from_visits(
    visits: &[(ActionIndex, u32)],
    tau: f64,
) -> Result<Vec<(ActionIndex, f64)>, SearchError> {
    let max = visits.iter().map(|&(_, n)| n).max().unwrap_or(0);
    if max == 0 {
        return Err(SearchError::NoVisits);
    }
    if tau == 0.0 {
        let best = visits
            .iter()
            .filter(|&&(_, n)| n == max)
            .map(|&(a, _)| a)
            .min()
            .unwrap();
        return Ok(visits
            .iter()
            .map(|&(a, _)| (a, if a == best { 1.0 } else { 0.0 }))
            .collect());
    }
    // Scale by the maximum so large 1/tau cannot overflow.
    let weights: Vec<f64> = visits
        .iter()
        .map(|&(_, n)| (n as f64 / max as f64).powf(1.0 / tau))
        .collect();
    let sum: f64 = weights.iter().sum();
    Ok(visits
        .iter()
        .zip(weights)
        .map(|(&(a, _), w)| (a, w / sum))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Policy at the configured temperature over the root's legal actions.
    pub pi: Vec<(ActionIndex, f64)>,
    pub root_value: f64,
    pub visits: Vec<(ActionIndex, u32)>,
    /// Most-visited line from the root.
    pub principal_variation: Vec<Move>,
}

impl SearchResult {
    /// Policy over the same root edges at another temperature.
    pub fn policy(&self, tau: f64) -> Vec<(ActionIndex, f64)> {
        policy_from_visits(&self.visits, tau).expect("root has visits after search")
    }

    /// Action with the most visits, lowest index on ties.
    pub fn best_action(&self) -> ActionIndex {
        let max = self.visits.iter().map(|&(_, n)| n).max().unwrap_or(0);
        self.visits
            .iter()
            .filter(|&&(_, n)| n == max)
            .map(|&(a, _)| a)
            .min()
            .expect("root has at least one edge")
    }
}

/// Runs `config.simulations` simulations from `state`. The root is expanded
/// (and noised when `dirichlet_epsilon > 0`) before the first simulation.
pub fn search<E: Evaluator + ?Sized>(
    state: &GameState,
    evaluator: &E,
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    let tree = search_tree(state, evaluator, config)?;
    summarize(&tree, config.temperature)
}

/// Like [`search`] but returns the whole tree for inspection.
pub fn search_tree<E: Evaluator + ?Sized>(
    state: &GameState,
    evaluator: &E,
    config: &SearchConfig,
) -> Result<SearchTree, SearchError> {
    config.validate()?;
    let mut tree = SearchTree::new(state.clone(), config.move_cap);
    if tree.nodes[0].terminal_value.is_some() {
        return Err(SearchError::TerminalRoot);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    expand_and_evaluate(&mut tree.nodes[0], evaluator);
    add_root_noise(
        &mut tree.nodes[0],
        config.dirichlet_epsilon,
        config.dirichlet_alpha,
        &mut rng,
    );

    let mut path = Vec::new();
    for _ in 0..config.simulations {
        path.clear();
        let mut node = 0;
        let leaf_value = loop {
            let current = &tree.nodes[node];
            if let Some(v) = current.terminal_value {
                break v;
            }
            if !current.expanded {
                break expand_and_evaluate(&mut tree.nodes[node], evaluator);
            }
            let edge = select_child(current, config.c_puct)?;
            path.push((node, edge));
            node = match tree.nodes[node].edges[edge].child {
                Some(child) => child,
                None => {
                    let mv = tree.nodes[node].edges[edge].mv;
                    let next = tree.nodes[node].state.apply_move_unchecked(mv);
                    let child = tree.nodes.len();
                    tree.nodes.push(SearchNode::new(next, config.move_cap));
                    tree.nodes[node].edges[edge].child = Some(child);
                    child
                }
            };
        };
        backpropagate(&mut tree, &path, -leaf_value);
    }
    Ok(tree)
}

fn summarize(tree: &SearchTree, tau: f64) -> Result<SearchResult, SearchError> {
    let root = tree.root();
    let visits: Vec<(ActionIndex, u32)> = root.edges.iter().map(|e| (e.action, e.visits)).collect();
    let pi = policy_from_visits(&visits, tau)?;
    let total: u32 = root.edges.iter().map(|e| e.visits).sum();
    let root_value = root
        .edges
        .iter()
        .map(|e| e.visits as f64 * e.q())
        .sum::<f64>()
        / total as f64;

    let mut principal_variation = Vec::new();
    let mut node = 0;
    loop {
        let n = &tree.nodes[node];
        let best = n
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.visits > 0)
            .max_by(|(_, a), (_, b)| a.visits.cmp(&b.visits).then(b.action.cmp(&a.action)));
        match best {
            Some((i, e)) => {
                principal_variation.push(e.mv);
                match n.edges[i].child {
                    Some(c) => node = c,
                    None => break,
                }
            }
            None => break,
        }
    }
    Ok(SearchResult {
        pi,
        root_value,
        visits,
        principal_variation,
    })
}
