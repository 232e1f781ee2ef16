use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{to_computable_string, BinaryOp, Forest, Node, Operand, Tree, UnaryOp};
use crate::error::ConfigError;

/// Shape limits and sampling probabilities for random trees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub max_depth: usize,
    pub max_width: usize,
    /// Probability of emitting a leaf instead of an operator below the depth cap.
    pub p_operand: f64,
    pub rng_seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_depth: 4,
            max_width: 5,
            p_operand: 0.5,
            rng_seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_depth < 1 {
            return Err(ConfigError::invalid("max_depth", "must be at least 1"));
        }
        if self.max_width < 1 {
            return Err(ConfigError::invalid("max_width", "must be at least 1"));
        }
        if !(self.p_operand > 0.0 && self.p_operand <= 1.0) {
            return Err(ConfigError::invalid("p_operand", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// A fresh random stream seeded from `rng_seed`.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.rng_seed)
    }
}

#[derive(Clone, Copy)]
enum OpChoice {
    Unary(UnaryOp),
    Binary(BinaryOp),
}

const ANY_OP: [OpChoice; 8] = [
    OpChoice::Unary(UnaryOp::Square),
    OpChoice::Unary(UnaryOp::Cube),
    OpChoice::Binary(BinaryOp::Add),
    OpChoice::Binary(BinaryOp::Sub),
    OpChoice::Binary(BinaryOp::Mul),
    OpChoice::Binary(BinaryOp::Div),
    OpChoice::Binary(BinaryOp::D1),
    OpChoice::Binary(BinaryOp::D2),
];

const ROOT_OP: [OpChoice; 6] = [
    OpChoice::Unary(UnaryOp::Square),
    OpChoice::Unary(UnaryOp::Cube),
    OpChoice::Binary(BinaryOp::Mul),
    OpChoice::Binary(BinaryOp::Div),
    OpChoice::Binary(BinaryOp::D1),
    OpChoice::Binary(BinaryOp::D2),
];

pub(crate) fn random_operand<R: Rng + ?Sized>(rng: &mut R) -> Operand {
    *Operand::ALL.choose(rng).expect("non-empty")
}

fn grow<R: Rng + ?Sized>(cfg: &GenConfig, rng: &mut R, depth: usize) -> Node {
    if depth >= cfg.max_depth || rng.random::<f64>() < cfg.p_operand {
        return Node::Leaf(random_operand(rng));
    }
    let table: &[OpChoice] = if depth == 1 { &ROOT_OP } else { &ANY_OP };
    match *table.choose(rng).expect("non-empty") {
        OpChoice::Unary(op) => Node::unary(op, grow(cfg, rng, depth + 1)),
        OpChoice::Binary(op) if op.is_derivative() => {
            Node::derivative(op, grow(cfg, rng, depth + 1))
        }
        OpChoice::Binary(op) => {
            let left = grow(cfg, rng, depth + 1);
            let right = grow(cfg, rng, depth + 1);
            Node::binary(op, left, right)
        }
    }
}

/// Grows a random tree top-down, left branch first.
///
/// Leaves are forced at `max_depth`; the root never draws `+` or `-`; a
/// derivative node always gets `x` as its right child.
pub fn random_tree<R: Rng + ?Sized>(cfg: &GenConfig, rng: &mut R) -> Tree {
    Tree::new(grow(cfg, rng, 1))
}

const DISTINCT_RETRIES: usize = 16;

/// Samples a forest of between 1 and `max_width` trees.
///
/// With `include_default_u` the first tree is always `u`. Remaining trees are
/// redrawn a few times if they duplicate one already present.
pub fn random_forest<R: Rng + ?Sized>(
    cfg: &GenConfig,
    rng: &mut R,
    include_default_u: bool,
) -> Forest {
    let width = rng.random_range(1..=cfg.max_width);
    let mut trees: Vec<Tree> = Vec::with_capacity(width);
    let mut keys: Vec<String> = Vec::with_capacity(width);
    if include_default_u {
        trees.push(Tree::u());
        keys.push(to_computable_string(&trees[0]));
    }
    while trees.len() < width {
        let mut tree = random_tree(cfg, rng);
        let mut key = to_computable_string(&tree);
        for _ in 0..DISTINCT_RETRIES {
            if !keys.contains(&key) {
                break;
            }
            tree = random_tree(cfg, rng);
            key = to_computable_string(&tree);
        }
        keys.push(key);
        trees.push(tree);
    }
    Forest::new(trees)
}
