//! Compiled terms.
//!
//! Bound occurrences become `⟨v,k⟩`: `v` counts λ-groups outward from the
//! occurrence (1 is the innermost enclosing group) and `k` is the position
//! of the binder inside that group (1 is the leftmost). Runs of
//! abstractions are fused into one n-ary `λn`, so `\x\y(y)x` compiles to
//! `λ2([1, 2])[1, 1]`.
//!
//! A [`CTerm`] is a flat arena of nodes. It is immutable once built, so the
//! machine and worker threads share it behind an `Arc`, and closures refer
//! to subterms by [`NodeId`].

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::deep;
use crate::syntax::Term;

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Bound { depth: u32, index: u32 },
    /// Index into the term's symbol table.
    Free(u32),
    App(NodeId, NodeId),
    Abs { arity: u32, body: NodeId },
}

/// Borrowed view of one node with the free-variable name resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View<'a> {
    Bound { depth: u32, index: u32 },
    Free(&'a str),
    App(NodeId, NodeId),
    Abs { arity: u32, body: NodeId },
}

#[derive(Clone)]
pub struct CTerm {
    nodes: Vec<Node>,
    sizes: Vec<u32>,
    symbols: Vec<Arc<str>>,
    root: NodeId,
}

impl CTerm {
    pub fn root(&self) -> NodeId {
        self.root
    }

    #[inline]
    pub fn node(&self, id: NodeId) -> Node {
        self.nodes[id as usize]
    }

    pub fn view(&self, id: NodeId) -> View<'_> {
        match self.node(id) {
            Node::Bound { depth, index } => View::Bound { depth, index },
            Node::Free(s) => View::Free(&self.symbols[s as usize]),
            Node::App(f, a) => View::App(f, a),
            Node::Abs { arity, body } => View::Abs { arity, body },
        }
    }

    pub fn symbol(&self, sym: u32) -> &Arc<str> {
        &self.symbols[sym as usize]
    }

    /// Number of nodes in the subterm rooted at `id`.
    #[inline]
    pub fn size_of(&self, id: NodeId) -> u32 {
        self.sizes[id as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn free_names(&self) -> impl Iterator<Item = &str> {
        self.symbols.iter().map(|s| &**s)
    }

    pub fn bound(depth: u32, index: u32) -> CTerm {
        Builder::default().finish_with(Node::Bound { depth, index })
    }

    pub fn free(name: &str) -> CTerm {
        let mut b = Builder::default();
        let s = b.intern(name);
        b.finish_with(Node::Free(s))
    }

    pub fn app(function: CTerm, argument: CTerm) -> CTerm {
        let mut b = Builder::default();
        let f = b.graft(&function);
        let a = b.graft(&argument);
        b.finish_with(Node::App(f, a))
    }

    /// Panics if `body` is itself an abstraction; groups are always fused.
    pub fn abs(arity: u32, body: CTerm) -> CTerm {
        assert!(arity > 0, "abstraction arity must be positive");
        assert!(
            !matches!(body.node(body.root), Node::Abs { .. }),
            "nested abstraction groups must be fused"
        );
        let mut b = Builder::default();
        let body = b.graft(&body);
        b.finish_with(Node::Abs { arity, body })
    }

    /// Checks group fusion and that every `⟨v,k⟩` points at an enclosing
    /// group with at least `k` binders. Returns the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut todo = vec![(self.root, Vec::<u32>::new())];
        while let Some((id, groups)) = todo.pop() {
            match self.node(id) {
                Node::Bound { depth, index } => {
                    if depth == 0 || depth as usize > groups.len() {
                        return Err(format!("[{depth}, {index}] has no enclosing group {depth}"));
                    }
                    let arity = groups[groups.len() - depth as usize];
                    if index == 0 || index > arity {
                        return Err(format!("[{depth}, {index}] exceeds group arity {arity}"));
                    }
                }
                Node::Free(_) => {}
                Node::App(f, a) => {
                    todo.push((f, groups.clone()));
                    todo.push((a, groups));
                }
                Node::Abs { arity, body } => {
                    if arity == 0 {
                        return Err("zero-arity abstraction".into());
                    }
                    if matches!(self.node(body), Node::Abs { .. }) {
                        return Err("unfused abstraction groups".into());
                    }
                    let mut inner = groups;
                    inner.push(arity);
                    todo.push((body, inner));
                }
            }
        }
        Ok(())
    }

    /// The tree with indices and arities erased: `@` for application, `\`
    /// for a group, `.` for any variable.
    pub fn shape(&self) -> String {
        let mut out = String::new();
        let mut todo = vec![Some(self.root)];
        while let Some(item) = todo.pop() {
            let Some(id) = item else {
                out.push(')');
                continue;
            };
            match self.node(id) {
                Node::Bound { .. } | Node::Free(_) => out.push('.'),
                Node::App(f, a) => {
                    out.push_str("@(");
                    todo.push(None);
                    todo.push(Some(a));
                    todo.push(Some(f));
                }
                Node::Abs { body, .. } => {
                    out.push_str("\\(");
                    todo.push(None);
                    todo.push(Some(body));
                }
            }
        }
        out
    }
}

impl PartialEq for CTerm {
    fn eq(&self, other: &CTerm) -> bool {
        let mut todo = vec![(self.root, other.root)];
        while let Some((a, b)) = todo.pop() {
            match (self.view(a), other.view(b)) {
                (View::App(f, x), View::App(g, y)) => {
                    todo.push((f, g));
                    todo.push((x, y));
                }
                (View::Abs { arity: n, body: s }, View::Abs { arity: m, body: t }) if n == m => todo.push((s, t)),
                (View::Bound { depth: v, index: k }, View::Bound { depth: w, index: j }) if (v, k) == (w, j) => {}
                (View::Free(x), View::Free(y)) if x == y => {}
                _ => return false,
            }
        }
        true
    }
}

impl Eq for CTerm {}

/// Bracket notation: `λ2([1, 2])[1, 1]`.
impl fmt::Display for CTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(c: &CTerm, mut id: NodeId, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            loop {
                match c.view(id) {
                    View::Bound { depth, index } => return write!(f, "[{depth}, {index}]"),
                    View::Free(x) => return f.write_str(x),
                    View::Abs { arity, body } => {
                        write!(f, "λ{arity}")?;
                        id = body;
                    }
                    View::App(g, a) => {
                        f.write_str("(")?;
                        deep::guard(|| go(c, g, f))?;
                        f.write_str(")")?;
                        id = a;
                    }
                }
            }
        }
        go(self, self.root, f)
    }
}

/// Constructor form: `CAbstraction 2 (CApplication (CVariable 1 2) (CVariable 1 1))`.
impl fmt::Debug for CTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(c: &CTerm, id: NodeId, nested: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            deep::guard(|| {
                if nested {
                    f.write_str("(")?;
                }
                match c.view(id) {
                    View::Bound { depth, index } => write!(f, "CVariable {depth} {index}")?,
                    View::Free(x) => write!(f, "Constant {x}")?,
                    View::Abs { arity, body } => {
                        write!(f, "CAbstraction {arity} ")?;
                        go(c, body, true, f)?;
                    }
                    View::App(g, a) => {
                        f.write_str("CApplication ")?;
                        go(c, g, true, f)?;
                        f.write_str(" ")?;
                        go(c, a, true, f)?;
                    }
                }
                if nested {
                    f.write_str(")")?;
                }
                Ok(())
            })
        }
        go(self, self.root, false, f)
    }
}

#[derive(Default)]
struct Builder {
    nodes: Vec<Node>,
    sizes: Vec<u32>,
    symbols: Vec<Arc<str>>,
    interned: HashMap<Arc<str>, u32>,
}

impl Builder {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&s) = self.interned.get(name) {
            return s;
        }
        let s = self.symbols.len() as u32;
        let name: Arc<str> = name.into();
        self.symbols.push(name.clone());
        self.interned.insert(name, s);
        s
    }

    fn push(&mut self, node: Node) -> NodeId {
        let size = match node {
            Node::Bound { .. } | Node::Free(_) => 1,
            Node::App(f, a) => 1 + self.sizes[f as usize] + self.sizes[a as usize],
            Node::Abs { body, .. } => 1 + self.sizes[body as usize],
        };
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node);
        self.sizes.push(size);
        id
    }

    /// Copy `other` in, returning the id of its root.
    fn graft(&mut self, other: &CTerm) -> NodeId {
        let offset = self.nodes.len() as NodeId;
        for node in &other.nodes {
            let node = match *node {
                Node::Free(s) => Node::Free(self.intern(&other.symbols[s as usize])),
                Node::App(f, a) => Node::App(f + offset, a + offset),
                Node::Abs { arity, body } => Node::Abs { arity, body: body + offset },
                bound => bound,
            };
            self.push(node);
        }
        other.root + offset
    }

    fn finish_with(mut self, node: Node) -> CTerm {
        let root = self.push(node);
        self.finish(root)
    }

    fn finish(self, root: NodeId) -> CTerm {
        CTerm {
            nodes: self.nodes,
            sizes: self.sizes,
            symbols: self.symbols,
            root,
        }
    }
}

/// Compile a term. Free variables keep their names.
pub fn compile(t: &Term) -> CTerm {
    let mut c = Compiler {
        out: Builder::default(),
        groups: Vec::new(),
    };
    let root = c.term(t);
    c.out.finish(root)
}

struct Compiler<'t> {
    out: Builder,
    groups: Vec<Vec<&'t str>>,
}

enum Pending {
    Function(NodeId),
    Group(u32),
}

impl<'t> Compiler<'t> {
    fn lookup(&self, x: &str) -> Node {
        for (up, group) in self.groups.iter().rev().enumerate() {
            // the rightmost binder shadows earlier ones in the same group
            if let Some(pos) = group.iter().rposition(|b| *b == x) {
                return Node::Bound {
                    depth: up as u32 + 1,
                    index: pos as u32 + 1,
                };
            }
        }
        unreachable!("lookup of free variable")
    }

    fn is_bound(&self, x: &str) -> bool {
        self.groups.iter().any(|g| g.contains(&x))
    }

    // Walk the right spine in a loop and recurse only into function
    // positions, which are shallow in practice.
    fn term(&mut self, mut t: &'t Term) -> NodeId {
        let mut pending = Vec::new();
        let mut id = loop {
            match t {
                Term::Variable(x) => {
                    let node = if self.is_bound(x) {
                        self.lookup(x)
                    } else {
                        Node::Free(self.out.intern(x))
                    };
                    break self.out.push(node);
                }
                Term::Abstraction(..) => {
                    let mut group = Vec::new();
                    while let Term::Abstraction(x, body) = t {
                        group.push(x.as_str());
                        t = body;
                    }
                    pending.push(Pending::Group(group.len() as u32));
                    self.groups.push(group);
                }
                Term::Application(f, a) => {
                    let f = deep::guard(|| self.term(f));
                    pending.push(Pending::Function(f));
                    t = a;
                }
            }
        };
        while let Some(p) = pending.pop() {
            id = match p {
                Pending::Function(f) => self.out.push(Node::App(f, id)),
                Pending::Group(arity) => {
                    self.groups.pop();
                    self.out.push(Node::Abs { arity, body: id })
                }
            };
        }
        id
    }
}

/// Deterministic fresh names `v1`, `v2`, ... skipping a set of reserved
/// names. The i-th name is always the same for a given reserved set.
#[derive(Debug, Clone)]
pub struct Namer {
    avoid: Arc<HashSet<String>>,
    names: Vec<Arc<str>>,
    counter: u64,
}

impl Namer {
    pub fn new<I, S>(avoid: I) -> Namer
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Namer {
            avoid: Arc::new(avoid.into_iter().map(Into::into).collect()),
            names: Vec::new(),
            counter: 0,
        }
    }

    /// Avoid the free variables of `c`.
    pub fn for_term(c: &CTerm) -> Namer {
        Namer::new(c.free_names().map(str::to_owned))
    }

    /// 0-based.
    pub fn name(&mut self, i: usize) -> Arc<str> {
        while self.names.len() <= i {
            self.counter += 1;
            let candidate = format!("v{}", self.counter);
            if !self.avoid.contains(&candidate) {
                self.names.push(candidate.into());
            }
        }
        self.names[i].clone()
    }
}

/// Rebuild a named term. Binders get fresh names that avoid `used_names`
/// and the free variables of `c`; a binder's name depends only on how many
/// binders enclose it, so names repeat across sibling subterms but never
/// along one path.
pub fn decompile(c: &CTerm, used_names: &BTreeSet<String>) -> Term {
    let mut namer = Namer::new(used_names.iter().cloned().chain(c.free_names().map(str::to_owned)));
    let mut scopes: Vec<Vec<Arc<str>>> = Vec::new();
    decompile_from(c, c.root, &mut namer, &mut scopes)
}

fn decompile_from(c: &CTerm, mut id: NodeId, namer: &mut Namer, scopes: &mut Vec<Vec<Arc<str>>>) -> Term {
    enum Up {
        Function(Term),
        Group(Vec<Arc<str>>),
    }
    let mut pending = Vec::new();
    let mut t = loop {
        match c.view(id) {
            View::Bound { depth, index } => {
                let group = &scopes[scopes.len() - depth as usize];
                break Term::var(&*group[index as usize - 1]);
            }
            View::Free(x) => break Term::var(x),
            View::Abs { arity, body } => {
                let in_scope: usize = scopes.iter().map(Vec::len).sum();
                let names: Vec<Arc<str>> = (0..arity as usize).map(|i| namer.name(in_scope + i)).collect();
                scopes.push(names.clone());
                pending.push(Up::Group(names));
                id = body;
            }
            View::App(f, a) => {
                let f = deep::guard(|| decompile_from(c, f, namer, scopes));
                pending.push(Up::Function(f));
                id = a;
            }
        }
    };
    while let Some(up) = pending.pop() {
        t = match up {
            Up::Function(f) => Term::app(f, t),
            Up::Group(names) => {
                scopes.pop();
                Term::abs_many(names.iter().map(|n| n.to_string()), t)
            }
        };
    }
    t
}

/// Equality up to consistent renaming of bound variables.
pub fn alpha_equivalent(a: &Term, b: &Term) -> bool {
    fn go<'t>(a: &'t Term, b: &'t Term, sa: &mut Vec<&'t str>, sb: &mut Vec<&'t str>) -> bool {
        deep::guard(|| match (a, b) {
            (Term::Variable(x), Term::Variable(y)) => {
                match (sa.iter().rposition(|v| v == x), sb.iter().rposition(|v| v == y)) {
                    (Some(i), Some(j)) => i == j,
                    (None, None) => x == y,
                    _ => false,
                }
            }
            (Term::Abstraction(x, s), Term::Abstraction(y, t)) => {
                sa.push(x);
                sb.push(y);
                let eq = go(s, t, sa, sb);
                sa.pop();
                sb.pop();
                eq
            }
            (Term::Application(f, s), Term::Application(g, t)) => go(f, g, sa, sb) && go(s, t, sa, sb),
            _ => false,
        })
    }
    go(a, b, &mut Vec::new(), &mut Vec::new())
}
