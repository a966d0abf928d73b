//! Closed-form function definitions as evaluable DAGs.
//!
//! An [`ExpressionProgram`] is a flat, topologically ordered node list:
//! every operand index points at an earlier node, so acyclicity holds by
//! construction. Definite integrals are first-class nodes whose integrand
//! is a separate arity-1 sub-program in a dummy variable; the lower limit
//! is a constant and the upper limit an arbitrary sub-expression, which is
//! exactly the shape of the iterated-integral surface parameterizations
//! this library has to evaluate.

mod parse;

pub use parse::{fold_constant, parse_program, ParseContext};

use crate::error::{Error, Result};
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Chart variable by position.
    Var(usize),
    Const(f64),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    Neg(NodeId),
    /// Real exponent; fractional exponents demand a positive base.
    Pow(NodeId, f64),
    Exp(NodeId),
    Ln(NodeId),
    Sqrt(NodeId),
    Sin(NodeId),
    Cos(NodeId),
    Sinh(NodeId),
    Cosh(NodeId),
    Tanh(NodeId),
    Atan(NodeId),
    Atan2(NodeId, NodeId),
    /// Definite integral of a univariate sub-program from a constant lower
    /// limit to the value of `upper`.
    Integral {
        integrand: Arc<ExpressionProgram>,
        lower: f64,
        upper: NodeId,
    },
}

/// An immutable program: `arity` chart variables, nodes in dependency
/// order, one distinguished root. Shareable across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionProgram {
    arity: usize,
    nodes: Vec<Node>,
    root: NodeId,
}

impl ExpressionProgram {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn constant(arity: usize, v: f64) -> ExpressionProgram {
        ExpressionProgram {
            arity,
            nodes: vec![Node::Const(v)],
            root: 0,
        }
    }

    pub fn variable(arity: usize, i: usize) -> ExpressionProgram {
        assert!(i < arity);
        ExpressionProgram {
            arity,
            nodes: vec![Node::Var(i)],
            root: 0,
        }
    }

    /// Rebuild this program over a larger variable set, sending old
    /// variable `i` to new variable `map[i]`. Integrand sub-programs are
    /// closed in their dummy variable and pass through untouched.
    pub fn remap(&self, new_arity: usize, map: &[usize]) -> ExpressionProgram {
        assert_eq!(map.len(), self.arity);
        assert!(map.iter().all(|&m| m < new_arity));
        let nodes = self
            .nodes
            .iter()
            .map(|n| match n {
                Node::Var(i) => Node::Var(map[*i]),
                other => other.clone(),
            })
            .collect();
        ExpressionProgram {
            arity: new_arity,
            nodes,
            root: self.root,
        }
    }
}

/// Incremental builder with structural deduplication, so repeated
/// subexpressions share nodes.
pub struct ProgramBuilder {
    arity: usize,
    nodes: Vec<Node>,
    dedup: HashMap<String, NodeId>,
}

impl ProgramBuilder {
    pub fn new(arity: usize) -> Self {
        ProgramBuilder {
            arity,
            nodes: Vec::new(),
            dedup: HashMap::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    fn push(&mut self, node: Node) -> NodeId {
        let key = format!("{node:?}");
        if let Some(&id) = self.dedup.get(&key) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node);
        self.dedup.insert(key, id);
        id
    }

    pub fn var(&mut self, i: usize) -> NodeId {
        assert!(i < self.arity, "variable index out of range");
        self.push(Node::Var(i))
    }

    pub fn cst(&mut self, v: f64) -> NodeId {
        self.push(Node::Const(v))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Node::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Node::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Node::Mul(a, b))
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(Node::Div(a, b))
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        self.push(Node::Neg(a))
    }

    pub fn pow(&mut self, a: NodeId, r: f64) -> NodeId {
        self.push(Node::Pow(a, r))
    }

    pub fn unary(&mut self, name: &str, a: NodeId) -> Result<NodeId> {
        let node = match name {
            "exp" => Node::Exp(a),
            "ln" => Node::Ln(a),
            "sqrt" => Node::Sqrt(a),
            "sin" => Node::Sin(a),
            "cos" => Node::Cos(a),
            "sinh" => Node::Sinh(a),
            "cosh" => Node::Cosh(a),
            "tanh" => Node::Tanh(a),
            "atan" => Node::Atan(a),
            _ => return Err(Error::Parse(format!("unknown function '{name}'"))),
        };
        Ok(self.push(node))
    }

    pub fn atan2(&mut self, y: NodeId, x: NodeId) -> NodeId {
        self.push(Node::Atan2(y, x))
    }

    pub fn integral(
        &mut self,
        integrand: Arc<ExpressionProgram>,
        lower: f64,
        upper: NodeId,
    ) -> NodeId {
        assert_eq!(integrand.arity(), 1, "integrand must be univariate");
        self.push(Node::Integral {
            integrand,
            lower,
            upper,
        })
    }

    /// Splice a whole program in as a subtree, returning its root id here.
    pub fn embed(&mut self, p: &ExpressionProgram) -> NodeId {
        assert_eq!(p.arity, self.arity);
        let mut ids: Vec<NodeId> = Vec::with_capacity(p.nodes.len());
        for node in &p.nodes {
            let remapped = match node {
                Node::Var(i) => Node::Var(*i),
                Node::Const(v) => Node::Const(*v),
                Node::Add(a, b) => Node::Add(ids[*a as usize], ids[*b as usize]),
                Node::Sub(a, b) => Node::Sub(ids[*a as usize], ids[*b as usize]),
                Node::Mul(a, b) => Node::Mul(ids[*a as usize], ids[*b as usize]),
                Node::Div(a, b) => Node::Div(ids[*a as usize], ids[*b as usize]),
                Node::Neg(a) => Node::Neg(ids[*a as usize]),
                Node::Pow(a, r) => Node::Pow(ids[*a as usize], *r),
                Node::Exp(a) => Node::Exp(ids[*a as usize]),
                Node::Ln(a) => Node::Ln(ids[*a as usize]),
                Node::Sqrt(a) => Node::Sqrt(ids[*a as usize]),
                Node::Sin(a) => Node::Sin(ids[*a as usize]),
                Node::Cos(a) => Node::Cos(ids[*a as usize]),
                Node::Sinh(a) => Node::Sinh(ids[*a as usize]),
                Node::Cosh(a) => Node::Cosh(ids[*a as usize]),
                Node::Tanh(a) => Node::Tanh(ids[*a as usize]),
                Node::Atan(a) => Node::Atan(ids[*a as usize]),
                Node::Atan2(a, b) => Node::Atan2(ids[*a as usize], ids[*b as usize]),
                Node::Integral {
                    integrand,
                    lower,
                    upper,
                } => Node::Integral {
                    integrand: integrand.clone(),
                    lower: *lower,
                    upper: ids[*upper as usize],
                },
            };
            ids.push(self.push(remapped));
        }
        ids[p.root as usize]
    }

    pub fn finish(self, root: NodeId) -> ExpressionProgram {
        assert!((root as usize) < self.nodes.len());
        ExpressionProgram {
            arity: self.arity,
            nodes: self.nodes,
            root,
        }
    }
}

/// Program-level combinators used when assembling product immersions.
impl ExpressionProgram {
    pub fn combine(
        a: &ExpressionProgram,
        b: &ExpressionProgram,
        op: fn(&mut ProgramBuilder, NodeId, NodeId) -> NodeId,
    ) -> ExpressionProgram {
        assert_eq!(a.arity, b.arity);
        let mut builder = ProgramBuilder::new(a.arity);
        let ra = builder.embed(a);
        let rb = builder.embed(b);
        let root = op(&mut builder, ra, rb);
        builder.finish(root)
    }

    pub fn add_prog(a: &ExpressionProgram, b: &ExpressionProgram) -> ExpressionProgram {
        Self::combine(a, b, ProgramBuilder::add)
    }

    pub fn mul_prog(a: &ExpressionProgram, b: &ExpressionProgram) -> ExpressionProgram {
        Self::combine(a, b, ProgramBuilder::mul)
    }
}

impl fmt::Display for ExpressionProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "<program arity={} nodes={} root={}>",
            self.arity,
            self.nodes.len(),
            self.root
        )
    }
}
