use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::{Candidate, GAConfig};
use crate::expr::{random_forest, random_tree, BinaryOp, Forest, Node, Operand, Tree, UnaryOp};

/// Redraws allowed per slot before a duplicate forest is accepted into the
/// initial population.
const INIT_RETRIES: usize = 32;

/// Draws `population` forests, each starting with the tree `u`, redrawing on
/// key collisions.
pub fn init_population<R: Rng + ?Sized>(cfg: &GAConfig, rng: &mut R) -> Vec<Candidate> {
    let gen = cfg.gen_config();
    let mut keys = HashSet::new();
    let mut pop = Vec::with_capacity(cfg.population);
    for _ in 0..cfg.population {
        let mut cand = Candidate::new(random_forest(&gen, rng, true));
        for _ in 0..INIT_RETRIES {
            if !keys.contains(&cand.key) {
                break;
            }
            cand = Candidate::new(random_forest(&gen, rng, true));
        }
        keys.insert(cand.key.clone());
        pop.push(cand);
    }
    pop
}

/// Recombines two forests slot by slot.
///
/// The donor's trees are shuffled; each slot of `base` takes the donor's tree
/// at that position with probability `p_cross`, and donor trees beyond the end
/// of `base` are appended with the same probability. Repeated trees are
/// dropped and the result is cut to `max_width`.
pub fn cross<R: Rng + ?Sized>(
    base: &Forest,
    donor: &Forest,
    cfg: &GAConfig,
    rng: &mut R,
) -> Forest {
    let mut pool: Vec<&Tree> = donor.trees().iter().collect();
    pool.shuffle(rng);
    let mut trees: Vec<Tree> = Vec::with_capacity(base.len().max(pool.len()));
    for slot in 0..base.len().max(pool.len()) {
        let take = slot < pool.len() && rng.random::<f64>() < cfg.p_cross;
        let tree = if take {
            Some(pool[slot])
        } else {
            base.trees().get(slot)
        };
        if let Some(t) = tree {
            if !trees.contains(t) {
                trees.push(t.clone());
            }
        }
    }
    trees.truncate(cfg.max_width);
    Forest::new(trees)
}

/// One round of crossover among the best half of `parents`.
///
/// `parents` must be sorted best first. The top `n` are shuffled and child `i`
/// is bred from parents `i` and `n - 1 - i`, so `n` children are attempted.
/// Children whose key is already in `seen` are discarded; survivors are
/// recorded in `seen`.
pub fn crossover_step<R: Rng + ?Sized>(
    parents: &[Candidate],
    seen: &mut HashSet<String>,
    cfg: &GAConfig,
    rng: &mut R,
) -> Vec<Candidate> {
    let n = parents.len() / 2;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut children = Vec::with_capacity(n);
    for i in 0..n {
        let base = &parents[order[i]].forest;
        let donor = &parents[order[n - 1 - i]].forest;
        let child = Candidate::new(cross(base, donor, cfg, rng));
        if seen.insert(child.key.clone()) {
            children.push(child);
        }
    }
    children
}

fn other<T: Copy + PartialEq, R: Rng + ?Sized>(all: &[T], current: T, rng: &mut R) -> T {
    let choices: Vec<T> = all.iter().copied().filter(|&s| s != current).collect();
    *choices.choose(rng).unwrap_or(&current)
}

fn mutate_node<R: Rng + ?Sized>(node: &mut Node, at_root: bool, p: f64, rng: &mut R) {
    let hit = rng.random::<f64>() < p;
    match node {
        Node::Leaf(o) => {
            if hit {
                *o = other(&Operand::ALL, *o, rng);
            }
        }
        Node::Unary(op, child) => {
            if hit {
                *op = other(&UnaryOp::ALL, *op, rng);
            }
            mutate_node(child, false, p, rng);
        }
        Node::Binary(op, left, right) => {
            let was_derivative = op.is_derivative();
            if hit {
                let table: &[BinaryOp] = if at_root {
                    &BinaryOp::ROOT
                } else {
                    &BinaryOp::ALL
                };
                let new = other(table, *op, rng);
                if new.is_derivative() && !op.is_derivative() {
                    **right = Node::Leaf(Operand::X);
                }
                *op = new;
            }
            mutate_node(left, false, p, rng);
            // the variable slot of a derivative stays `x`
            if !was_derivative && !op.is_derivative() {
                mutate_node(right, false, p, rng);
            }
        }
    }
}

/// Point mutation of every node with probability `p_mutate_node`, within its
/// arity class.
///
/// Turning a binary node into `d` or `d2` replaces its right subtree with `x`.
/// The score is kept when nothing changed.
pub fn mutate_forest<R: Rng + ?Sized>(c: &Candidate, cfg: &GAConfig, rng: &mut R) -> Candidate {
    let mut forest = c.forest.clone();
    for tree in forest.trees_mut() {
        mutate_node(tree.root_mut(), true, cfg.p_mutate_node, rng);
    }
    c.with_forest(forest)
}

/// With probability `p_replace_tree`, regrows one uniformly chosen tree.
pub fn replace_tree<R: Rng + ?Sized>(c: &Candidate, cfg: &GAConfig, rng: &mut R) -> Candidate {
    if c.forest.is_empty() || rng.random::<f64>() >= cfg.p_replace_tree {
        return c.clone();
    }
    let slot = rng.random_range(0..c.forest.len());
    let mut forest = c.forest.clone();
    forest.trees_mut()[slot] = random_tree(&cfg.gen_config(), rng);
    c.with_forest(forest)
}
