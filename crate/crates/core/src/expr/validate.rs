use std::fmt;

use super::{Forest, GenConfig, Node, Operand, Tree};

/// Which structural rule a forest breaks.
///
/// Leaves-are-operands and full-arity (rules 1 and 2) hold by construction of
/// [`Node`] and are checked when parsing instead.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleViolation {
    /// Rule 3: the root is `+` or `-`.
    RootAddSub,
    /// Rule 4: a branch is deeper than the configured cap.
    TooDeep { depth: usize, max_depth: usize },
    /// Rule 5: the forest is empty or wider than the cap.
    Width { trees: usize, max_width: usize },
    /// A derivative node whose variable slot is not `x`.
    DerivativeVariable,
}

impl RuleViolation {
    /// The numbered structural rule, or `None` for the derivative-variable constraint.
    pub fn rule_number(&self) -> Option<u8> {
        match self {
            RuleViolation::RootAddSub => Some(3),
            RuleViolation::TooDeep { .. } => Some(4),
            RuleViolation::Width { .. } => Some(5),
            RuleViolation::DerivativeVariable => None,
        }
    }
}

/// A violation located at `path` (child indices from the root) of tree `tree`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: RuleViolation,
    pub tree: Option<usize>,
    pub path: Vec<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            RuleViolation::RootAddSub => write!(f, "rule 3: root is + or -")?,
            RuleViolation::TooDeep { depth, max_depth } => {
                write!(f, "rule 4: depth {depth} exceeds {max_depth}")?
            }
            RuleViolation::Width { trees, max_width } => {
                write!(f, "rule 5: {trees} trees, allowed 1..={max_width}")?
            }
            RuleViolation::DerivativeVariable => write!(f, "derivative variable is not x")?,
        }
        if let Some(t) = self.tree {
            write!(f, " (tree {t}, path {:?})", self.path)?;
        }
        Ok(())
    }
}

/// Checks every structural rule; an empty result means the forest is valid.
pub fn validate(f: &Forest, cfg: &GenConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    if f.is_empty() || f.len() > cfg.max_width {
        out.push(Violation {
            rule: RuleViolation::Width {
                trees: f.len(),
                max_width: cfg.max_width,
            },
            tree: None,
            path: Vec::new(),
        });
    }
    for (i, t) in f.trees().iter().enumerate() {
        for mut v in validate_tree(t, cfg) {
            v.tree = Some(i);
            out.push(v);
        }
    }
    out
}

/// Per-tree checks (rules 3, 4 and the derivative variable).
pub fn validate_tree(t: &Tree, cfg: &GenConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    if let Node::Binary(op, _, _) = t.root() {
        if !op.allowed_at_root() {
            out.push(Violation {
                rule: RuleViolation::RootAddSub,
                tree: None,
                path: Vec::new(),
            });
        }
    }
    let depth = t.depth();
    if depth > cfg.max_depth {
        out.push(Violation {
            rule: RuleViolation::TooDeep {
                depth,
                max_depth: cfg.max_depth,
            },
            tree: None,
            path: deepest_path(t.root()),
        });
    }
    let mut path = Vec::new();
    check_derivatives(t.root(), &mut path, &mut out);
    out
}

fn deepest_path(node: &Node) -> Vec<usize> {
    let mut path = Vec::new();
    let mut cur = node;
    loop {
        match cur {
            Node::Leaf(_) => return path,
            Node::Unary(_, c) => {
                path.push(0);
                cur = c;
            }
            Node::Binary(_, l, r) => {
                if r.depth() > l.depth() {
                    path.push(1);
                    cur = r;
                } else {
                    path.push(0);
                    cur = l;
                }
            }
        }
    }
}

fn check_derivatives(node: &Node, path: &mut Vec<usize>, out: &mut Vec<Violation>) {
    if let Node::Binary(op, _, r) = node {
        if op.is_derivative() && !matches!(r.as_ref(), Node::Leaf(Operand::X)) {
            out.push(Violation {
                rule: RuleViolation::DerivativeVariable,
                tree: None,
                path: path.clone(),
            });
        }
    }
    for (i, c) in node.children().into_iter().enumerate() {
        path.push(i);
        check_derivatives(c, path, out);
        path.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_computable_string;

    fn forest(strs: &[&str]) -> Forest {
        strs.iter()
            .map(|s| parse_computable_string(s).unwrap())
            .collect()
    }

    #[test]
    fn default_tree_is_valid() {
        assert!(validate(&forest(&["{ u }"]), &GenConfig::default()).is_empty());
    }

    #[test]
    fn root_add_is_rule_three() {
        let v = validate(&forest(&["{ + u x }"]), &GenConfig::default());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, RuleViolation::RootAddSub);
        assert_eq!(v[0].rule.rule_number(), Some(3));
        assert_eq!(v[0].tree, Some(0));
    }

    #[test]
    fn too_deep_is_rule_four() {
        let cfg = GenConfig {
            max_depth: 2,
            ..GenConfig::default()
        };
        let v = validate(&forest(&["{ * u [+ x (* u ux)] }"]), &cfg);
        assert_eq!(v.len(), 1);
        assert_eq!(
            v[0].rule,
            RuleViolation::TooDeep {
                depth: 4,
                max_depth: 2
            }
        );
        assert_eq!(v[0].path, vec![1, 1, 0]);
    }

    #[test]
    fn width_is_rule_five() {
        let cfg = GenConfig {
            max_width: 2,
            ..GenConfig::default()
        };
        let v = validate(&forest(&["{ u }", "{ x }", "{ ux }"]), &cfg);
        assert_eq!(v[0].rule.rule_number(), Some(5));
        let v = validate(&Forest::new(vec![]), &cfg);
        assert_eq!(v[0].rule.rule_number(), Some(5));
    }

    #[test]
    fn derivative_variable_must_be_x() {
        let v = validate(&forest(&["{ * u (d u u) }"]), &GenConfig::default());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, RuleViolation::DerivativeVariable);
        assert_eq!(v[0].path, vec![1]);
    }
}
