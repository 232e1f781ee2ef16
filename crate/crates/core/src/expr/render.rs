use super::{BinaryOp, Forest, Node, Operand, Tree, UnaryOp};

/// Prefix rendering, one bracketed unit per operator.
///
/// The outermost unit uses `{ }`. Nested units whose children are all leaves
/// use `( )`, deeper units `[ ]`. The parser treats the three pairs alike.
pub fn to_computable_string(t: &Tree) -> String {
    let mut out = String::from("{ ");
    match t.root() {
        Node::Leaf(o) => out.push_str(o.symbol()),
        node => write_unit_body(node, &mut out),
    }
    out.push_str(" }");
    out
}

fn write_unit_body(node: &Node, out: &mut String) {
    out.push_str(node.kind().symbol());
    for child in node.children() {
        out.push(' ');
        write_prefix(child, out);
    }
}

fn write_prefix(node: &Node, out: &mut String) {
    if let Node::Leaf(o) = node {
        out.push_str(o.symbol());
        return;
    }
    let flat = node.children().iter().all(|c| matches!(c, Node::Leaf(_)));
    let (open, close) = if flat { ('(', ')') } else { ('[', ']') };
    out.push(open);
    write_unit_body(node, out);
    out.push(close);
}

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_POWER: u8 = 3;
const PREC_ATOM: u8 = 4;

/// Infix rendering with the fewest parentheses that keep the meaning.
pub fn to_display_string(t: &Tree) -> String {
    infix(t.root()).0
}

fn wrap(s: String, needs: bool) -> String {
    if needs {
        format!("({s})")
    } else {
        s
    }
}

fn infix(node: &Node) -> (String, u8) {
    match node {
        Node::Leaf(o) => {
            let s = match o {
                Operand::U => "u",
                Operand::X => "x",
                Operand::Ux => "u_x",
                Operand::Zero => "0",
            };
            (s.to_string(), PREC_ATOM)
        }
        Node::Unary(op, child) => {
            let (c, p) = infix(child);
            let exp = match op {
                UnaryOp::Square => "^2",
                UnaryOp::Cube => "^3",
            };
            (format!("{}{exp}", wrap(c, p < PREC_ATOM)), PREC_POWER)
        }
        Node::Binary(op, l, r) => {
            let (ls, lp) = infix(l);
            match op {
                BinaryOp::D1 => (format!("d/dx({ls})"), PREC_ATOM),
                BinaryOp::D2 => (format!("d2/dx2({ls})"), PREC_ATOM),
                _ => {
                    let (rs, rp) = infix(r);
                    match op {
                        BinaryOp::Add => (format!("{ls} + {rs}"), PREC_SUM),
                        BinaryOp::Sub => (format!("{ls} - {}", wrap(rs, rp <= PREC_SUM)), PREC_SUM),
                        BinaryOp::Mul => (
                            format!(
                                "{}*{}",
                                wrap(ls, lp < PREC_PRODUCT),
                                wrap(rs, rp < PREC_PRODUCT)
                            ),
                            PREC_PRODUCT,
                        ),
                        BinaryOp::Div => (
                            format!(
                                "{}/{}",
                                wrap(ls, lp < PREC_PRODUCT),
                                wrap(rs, rp <= PREC_PRODUCT)
                            ),
                            PREC_PRODUCT,
                        ),
                        BinaryOp::D1 | BinaryOp::D2 => unreachable!(),
                    }
                }
            }
        }
    }
}

/// Order-independent identity of a forest: sorted per-tree strings joined by `&`.
pub fn canonical_key(f: &Forest) -> String {
    let mut parts: Vec<String> = f.trees().iter().map(to_computable_string).collect();
    parts.sort();
    parts.join("&")
}
