//! Symbolic vocabulary and the tree/forest data model.
//!
//! A candidate equation `u_t = Σ ξ_i f_i(u, x)` is stored as a [`Forest`]:
//! one [`Tree`] per function term `f_i`. Trees are built from three node
//! classes (operands, unary operators and binary operators), and arity is
//! enforced by the [`Node`] type itself, so a leaf can never carry children
//! and an operator can never be missing one.

mod generate;
mod parse;
mod render;
mod validate;

pub use generate::{random_forest, random_tree, GenConfig};
pub use parse::{parse_computable_string, parse_forest, ParseError};
pub use render::{canonical_key, to_computable_string, to_display_string};
pub use validate::{validate, validate_tree, RuleViolation, Violation};

use std::fmt;

/// Leaf symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operand {
    /// The observed field `u(x, t)`.
    U,
    /// The spatial coordinate.
    X,
    /// The cached first spatial derivative of `u`.
    Ux,
    /// Constant zero; mutes whatever branch it sits in.
    Zero,
}

/// Operators taking one child.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnaryOp {
    Square,
    Cube,
}

/// Operators taking two children.
///
/// `D1` and `D2` differentiate their left child with respect to the right
/// child, which is always the operand `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    D1,
    D2,
}

impl Operand {
    pub const ALL: [Operand; 4] = [Operand::U, Operand::X, Operand::Ux, Operand::Zero];

    pub fn symbol(self) -> &'static str {
        match self {
            Operand::U => "u",
            Operand::X => "x",
            Operand::Ux => "ux",
            Operand::Zero => "0",
        }
    }
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 2] = [UnaryOp::Square, UnaryOp::Cube];

    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Square => "^2",
            UnaryOp::Cube => "^3",
        }
    }
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 6] = [
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Div,
        BinaryOp::D1,
        BinaryOp::D2,
    ];

    /// Binary operators allowed at the root of a tree.
    pub const ROOT: [BinaryOp; 4] = [BinaryOp::Mul, BinaryOp::Div, BinaryOp::D1, BinaryOp::D2];

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::D1 => "d",
            BinaryOp::D2 => "d2",
        }
    }

    pub fn is_derivative(self) -> bool {
        matches!(self, BinaryOp::D1 | BinaryOp::D2)
    }

    pub fn allowed_at_root(self) -> bool {
        !matches!(self, BinaryOp::Add | BinaryOp::Sub)
    }
}

/// Symbol carried by a single node, independent of its children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Operand(Operand),
    Unary(UnaryOp),
    Binary(BinaryOp),
}

impl NodeKind {
    pub fn arity(self) -> usize {
        match self {
            NodeKind::Operand(_) => 0,
            NodeKind::Unary(_) => 1,
            NodeKind::Binary(_) => 2,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            NodeKind::Operand(o) => o.symbol(),
            NodeKind::Unary(op) => op.symbol(),
            NodeKind::Binary(op) => op.symbol(),
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A node together with its subtrees.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Leaf(Operand),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
}

impl Node {
    pub fn leaf(o: Operand) -> Self {
        Node::Leaf(o)
    }

    pub fn unary(op: UnaryOp, child: Node) -> Self {
        Node::Unary(op, Box::new(child))
    }

    pub fn binary(op: BinaryOp, left: Node, right: Node) -> Self {
        Node::Binary(op, Box::new(left), Box::new(right))
    }

    /// `d/dx` or `d²/dx²` of `inner`, with the variable slot pinned to `x`.
    pub fn derivative(op: BinaryOp, inner: Node) -> Self {
        debug_assert!(op.is_derivative());
        Node::binary(op, inner, Node::Leaf(Operand::X))
    }

    pub fn kind(&self) -> NodeKind {
        match self {
            Node::Leaf(o) => NodeKind::Operand(*o),
            Node::Unary(op, _) => NodeKind::Unary(*op),
            Node::Binary(op, _, _) => NodeKind::Binary(*op),
        }
    }

    /// Depth of the subtree rooted here; a leaf has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Unary(_, c) => 1 + c.depth(),
            Node::Binary(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Unary(_, c) => 1 + c.node_count(),
            Node::Binary(_, l, r) => 1 + l.node_count() + r.node_count(),
        }
    }

    pub fn children(&self) -> Vec<&Node> {
        match self {
            Node::Leaf(_) => Vec::new(),
            Node::Unary(_, c) => vec![c.as_ref()],
            Node::Binary(_, l, r) => vec![l.as_ref(), r.as_ref()],
        }
    }
}

/// One function term.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tree {
    root: Node,
}

impl Tree {
    pub fn new(root: Node) -> Self {
        Tree { root }
    }

    /// The single-node tree `u`.
    pub fn u() -> Self {
        Tree::new(Node::Leaf(Operand::U))
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn root_mut(&mut self) -> &mut Node {
        &mut self.root
    }

    pub fn into_root(self) -> Node {
        self.root
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }

    pub fn is_default_u(&self) -> bool {
        matches!(self.root, Node::Leaf(Operand::U))
    }
}

impl From<Node> for Tree {
    fn from(root: Node) -> Self {
        Tree::new(root)
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&to_computable_string(self))
    }
}

/// A candidate equation: an ordered list of independent function terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Forest {
    trees: Vec<Tree>,
}

impl Forest {
    pub fn new(trees: Vec<Tree>) -> Self {
        Forest { trees }
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn trees_mut(&mut self) -> &mut Vec<Tree> {
        &mut self.trees
    }

    pub fn into_trees(self) -> Vec<Tree> {
        self.trees
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }
}

impl FromIterator<Tree> for Forest {
    fn from_iter<I: IntoIterator<Item = Tree>>(iter: I) -> Self {
        Forest::new(iter.into_iter().collect())
    }
}

impl fmt::Display for Forest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.trees.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            f.write_str(&to_computable_string(t))?;
        }
        Ok(())
    }
}
