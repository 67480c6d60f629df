//! Decision procedure for GL by backward proof search in a sequent calculus.
//!
//! Sequents are pairs of formula sets `Γ ⇒ Δ`. The propositional rules are
//! invertible, so they are applied eagerly. A sequent containing only atoms
//! and boxed formulas is closed by the modal rule
//!
//! ```text
//!        Γ, []Γ, []A ⇒ A
//!   -------------------------   (GLR, for []Γ ⊆ left side, []A on the right)
//!      Σ, []Γ ⇒ []A, Δ
//! ```
//!
//! which is tried for each boxed formula on the right. Each application adds
//! a new boxed formula to the left side, so search terminates. A failed
//! search yields a finite irreflexive transitive countermodel: one world per
//! saturated sequent, seeing the roots of every failed GLR premise and
//! everything those see.

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::formula::ModalFormula;
use super::kripke::{Countermodel, KripkeModel};
use super::LogicError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Valid,
    Invalid,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Valid => "valid",
            Verdict::Invalid => "invalid",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "axiom")]
    Axiom,
    #[serde(rename = "~L")]
    NotLeft,
    #[serde(rename = "~R")]
    NotRight,
    #[serde(rename = "&L")]
    AndLeft,
    #[serde(rename = "&R")]
    AndRight,
    #[serde(rename = "|L")]
    OrLeft,
    #[serde(rename = "|R")]
    OrRight,
    #[serde(rename = "->L")]
    ImpliesLeft,
    #[serde(rename = "->R")]
    ImpliesRight,
    #[serde(rename = "GLR")]
    Glr,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Axiom => "axiom",
            Rule::NotLeft => "~L",
            Rule::NotRight => "~R",
            Rule::AndLeft => "&L",
            Rule::AndRight => "&R",
            Rule::OrLeft => "|L",
            Rule::OrRight => "|R",
            Rule::ImpliesLeft => "->L",
            Rule::ImpliesRight => "->R",
            Rule::Glr => "GLR",
        }
    }
}

/// Node of a closed proof tree. Identical subproofs are shared.
#[derive(Debug)]
pub struct ProofNode {
    pub sequent: String,
    pub rule: Rule,
    pub premises: Vec<Rc<ProofNode>>,
}

/// One line of a flattened proof, in pre-order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofStep {
    pub depth: usize,
    pub rule: Rule,
    pub sequent: String,
}

impl ProofNode {
    pub fn steps(&self) -> Vec<ProofStep> {
        let mut out = Vec::new();
        fn walk(node: &ProofNode, depth: usize, out: &mut Vec<ProofStep>) {
            out.push(ProofStep { depth, rule: node.rule, sequent: node.sequent.clone() });
            for p in &node.premises {
                walk(p, depth + 1, out);
            }
        }
        walk(self, 0, &mut out);
        out
    }
}

#[derive(Debug)]
pub enum Witness {
    Proof(Rc<ProofNode>),
    Countermodel(Countermodel),
}

#[derive(Debug)]
pub struct DecisionResult {
    pub verdict: Verdict,
    pub witness: Witness,
}

impl DecisionResult {
    pub fn countermodel(&self) -> Option<&Countermodel> {
        match &self.witness {
            Witness::Countermodel(c) => Some(c),
            Witness::Proof(_) => None,
        }
    }

    pub fn proof(&self) -> Option<&ProofNode> {
        match &self.witness {
            Witness::Proof(p) => Some(p),
            Witness::Countermodel(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GlConfig {
    pub max_nodes: usize,
    pub max_atoms: usize,
    /// Greedily drop worlds from countermodels while they still refute.
    pub minimize_countermodels: bool,
}

impl Default for GlConfig {
    fn default() -> Self {
        Self { max_nodes: 200, max_atoms: 8, minimize_countermodels: true }
    }
}

/// Decides GL-validity of `phi` with the default limits.
pub fn gl_decide(phi: &ModalFormula) -> Result<DecisionResult, LogicError> {
    gl_decide_with(phi, &GlConfig::default())
}

pub fn gl_decide_with(phi: &ModalFormula, config: &GlConfig) -> Result<DecisionResult, LogicError> {
    let size = phi.size();
    if size > config.max_nodes {
        return Err(LogicError::FormulaTooLarge { nodes: size, limit: config.max_nodes });
    }
    let atoms = phi.atoms().len();
    if atoms > config.max_atoms {
        return Err(LogicError::TooManyAtoms { atoms, limit: config.max_atoms });
    }
    let mut search = Search::default();
    let root = search.intern(phi);
    let outcome = search.prove(Sequent { left: BTreeSet::new(), right: BTreeSet::from([root]) });
    Ok(match outcome {
        Outcome::Proved(proof) => DecisionResult { verdict: Verdict::Valid, witness: Witness::Proof(proof) },
        Outcome::Refuted(world) => {
            let mut countermodel = build_countermodel(&world);
            debug_assert!(countermodel.refutes(phi));
            if config.minimize_countermodels {
                countermodel = minimize(phi, countermodel);
            }
            DecisionResult { verdict: Verdict::Invalid, witness: Witness::Countermodel(countermodel) }
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Node {
    Atom(u32),
    Not(usize),
    Implies(usize, usize),
    And(usize, usize),
    Or(usize, usize),
    Box(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Sequent {
    left: BTreeSet<usize>,
    right: BTreeSet<usize>,
}

/// World of a countermodel under construction.
#[derive(Debug)]
struct WorldNode {
    atoms: BTreeSet<u32>,
    children: Vec<Rc<WorldNode>>,
}

#[derive(Clone, Debug)]
enum Outcome {
    Proved(Rc<ProofNode>),
    Refuted(Rc<WorldNode>),
}

#[derive(Default)]
struct Search {
    nodes: Vec<Node>,
    ids: HashMap<Node, usize>,
    memo: HashMap<Sequent, Outcome>,
}

impl Search {
    fn intern(&mut self, phi: &ModalFormula) -> usize {
        let node = match phi {
            ModalFormula::Atom(i) => Node::Atom(*i),
            ModalFormula::Not(a) => Node::Not(self.intern(a)),
            ModalFormula::Box(a) => Node::Box(self.intern(a)),
            ModalFormula::Implies(a, b) => Node::Implies(self.intern(a), self.intern(b)),
            ModalFormula::And(a, b) => Node::And(self.intern(a), self.intern(b)),
            ModalFormula::Or(a, b) => Node::Or(self.intern(a), self.intern(b)),
        };
        if let Some(&id) = self.ids.get(&node) {
            return id;
        }
        self.nodes.push(node);
        self.ids.insert(node, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn render(&self, id: usize) -> ModalFormula {
        match self.nodes[id] {
            Node::Atom(i) => ModalFormula::atom(i),
            Node::Not(a) => ModalFormula::not(self.render(a)),
            Node::Box(a) => ModalFormula::boxed(self.render(a)),
            Node::Implies(a, b) => ModalFormula::implies(self.render(a), self.render(b)),
            Node::And(a, b) => ModalFormula::and(self.render(a), self.render(b)),
            Node::Or(a, b) => ModalFormula::or(self.render(a), self.render(b)),
        }
    }

    fn show(&self, seq: &Sequent) -> String {
        let side = |s: &BTreeSet<usize>| s.iter().map(|&i| self.render(i).to_string()).collect::<Vec<_>>().join(", ");
        format!("{} => {}", side(&seq.left), side(&seq.right))
    }

    fn is_compound(&self, id: usize) -> bool {
        !matches!(self.nodes[id], Node::Atom(_) | Node::Box(_))
    }

    fn prove(&mut self, seq: Sequent) -> Outcome {
        if let Some(done) = self.memo.get(&seq) {
            return done.clone();
        }
        let outcome = self.prove_uncached(&seq);
        self.memo.insert(seq, outcome.clone());
        outcome
    }

    fn prove_uncached(&mut self, seq: &Sequent) -> Outcome {
        let text = self.show(seq);
        if seq.left.intersection(&seq.right).next().is_some() {
            return Outcome::Proved(Rc::new(ProofNode { sequent: text, rule: Rule::Axiom, premises: vec![] }));
        }

        if let Some(&id) = seq.left.iter().find(|&&i| self.is_compound(i)) {
            let mut rest = seq.clone();
            rest.left.remove(&id);
            let (rule, premises) = match self.nodes[id] {
                Node::Not(a) => (Rule::NotLeft, vec![with(&rest, None, Some(a))]),
                Node::And(a, b) => (Rule::AndLeft, vec![with(&with(&rest, Some(a), None), Some(b), None)]),
                Node::Or(a, b) => (Rule::OrLeft, vec![with(&rest, Some(a), None), with(&rest, Some(b), None)]),
                Node::Implies(a, b) => {
                    (Rule::ImpliesLeft, vec![with(&rest, None, Some(a)), with(&rest, Some(b), None)])
                }
                Node::Atom(_) | Node::Box(_) => unreachable!(),
            };
            return self.all_premises(text, rule, premises);
        }
        if let Some(&id) = seq.right.iter().find(|&&i| self.is_compound(i)) {
            let mut rest = seq.clone();
            rest.right.remove(&id);
            let (rule, premises) = match self.nodes[id] {
                Node::Not(a) => (Rule::NotRight, vec![with(&rest, Some(a), None)]),
                Node::And(a, b) => (Rule::AndRight, vec![with(&rest, None, Some(a)), with(&rest, None, Some(b))]),
                Node::Or(a, b) => (Rule::OrRight, vec![with(&with(&rest, None, Some(a)), None, Some(b))]),
                Node::Implies(a, b) => (Rule::ImpliesRight, vec![with(&rest, Some(a), Some(b))]),
                Node::Atom(_) | Node::Box(_) => unreachable!(),
            };
            return self.all_premises(text, rule, premises);
        }

        // saturated: atoms and boxes only
        let boxed_left: Vec<usize> = seq
            .left
            .iter()
            .filter_map(|&i| match self.nodes[i] {
                Node::Box(a) => Some(a),
                _ => None,
            })
            .collect();
        let boxed_right: Vec<(usize, usize)> = seq
            .right
            .iter()
            .filter_map(|&i| match self.nodes[i] {
                Node::Box(a) => Some((i, a)),
                _ => None,
            })
            .collect();
        let mut children = Vec::new();
        for (boxed, inner) in boxed_right {
            let mut left: BTreeSet<usize> =
                seq.left.iter().copied().filter(|&i| matches!(self.nodes[i], Node::Box(_))).collect();
            left.extend(boxed_left.iter().copied());
            left.insert(boxed);
            let premise = Sequent { left, right: BTreeSet::from([inner]) };
            match self.prove(premise) {
                Outcome::Proved(p) => {
                    return Outcome::Proved(Rc::new(ProofNode { sequent: text, rule: Rule::Glr, premises: vec![p] }));
                }
                Outcome::Refuted(world) => children.push(world),
            }
        }
        let atoms = seq
            .left
            .iter()
            .filter_map(|&i| match self.nodes[i] {
                Node::Atom(a) => Some(a),
                _ => None,
            })
            .collect();
        Outcome::Refuted(Rc::new(WorldNode { atoms, children }))
    }

    /// Conclusion holds iff every premise does (all rules here are invertible).
    fn all_premises(&mut self, text: String, rule: Rule, premises: Vec<Sequent>) -> Outcome {
        let mut proofs = Vec::with_capacity(premises.len());
        for p in premises {
            match self.prove(p) {
                Outcome::Proved(proof) => proofs.push(proof),
                refuted @ Outcome::Refuted(_) => return refuted,
            }
        }
        Outcome::Proved(Rc::new(ProofNode { sequent: text, rule, premises: proofs }))
    }
}

fn with(seq: &Sequent, left: Option<usize>, right: Option<usize>) -> Sequent {
    let mut out = seq.clone();
    out.left.extend(left);
    out.right.extend(right);
    out
}

/// Flattens the world DAG (shared by pointer) into a model whose relation is
/// the transitive closure of the child edges. The root is world 0.
fn build_countermodel(root: &Rc<WorldNode>) -> Countermodel {
    let mut order: Vec<Rc<WorldNode>> = Vec::new();
    let mut index: HashMap<*const WorldNode, usize> = HashMap::new();
    fn collect(node: &Rc<WorldNode>, order: &mut Vec<Rc<WorldNode>>, index: &mut HashMap<*const WorldNode, usize>) {
        if index.contains_key(&Rc::as_ptr(node)) {
            return;
        }
        index.insert(Rc::as_ptr(node), order.len());
        order.push(node.clone());
        for c in &node.children {
            collect(c, order, index);
        }
    }
    collect(root, &mut order, &mut index);

    let mut reach: Vec<Option<BTreeSet<usize>>> = vec![None; order.len()];
    fn descendants(
        w: usize,
        order: &[Rc<WorldNode>],
        index: &HashMap<*const WorldNode, usize>,
        reach: &mut Vec<Option<BTreeSet<usize>>>,
    ) -> BTreeSet<usize> {
        if let Some(r) = &reach[w] {
            return r.clone();
        }
        let mut out = BTreeSet::new();
        for c in &order[w].children {
            let ci = index[&Rc::as_ptr(c)];
            out.insert(ci);
            out.extend(descendants(ci, order, index, reach));
        }
        reach[w] = Some(out.clone());
        out
    }
    let mut relation = Vec::new();
    for w in 0..order.len() {
        for v in descendants(w, &order, &index, &mut reach) {
            relation.push((w, v));
        }
    }
    let valuation = order.iter().map(|n| n.atoms.clone()).collect();
    let model = KripkeModel::new(&relation, valuation).expect("proof-search worlds form a DAG");
    Countermodel { model, world: 0 }
}

/// Drops worlds one at a time (last first) whenever the formula stays false
/// at the refuting world, and keeps only worlds the refuting world can see.
fn minimize(phi: &ModalFormula, countermodel: Countermodel) -> Countermodel {
    let Countermodel { model, world } = countermodel;
    let mut keep: Vec<usize> = std::iter::once(world).chain(model.successors(world).iter().copied()).collect();
    keep.sort_unstable();
    let mut candidates: Vec<usize> = keep.iter().copied().filter(|&w| w != world).collect();
    candidates.reverse();
    for w in candidates {
        let trial: Vec<usize> = keep.iter().copied().filter(|&k| k != w).collect();
        let root = trial.iter().position(|&k| k == world).expect("root kept");
        if !model.restrict(&trial).truth_set(phi)[root] {
            keep = trial;
        }
    }
    let root = keep.iter().position(|&k| k == world).expect("root kept");
    Countermodel { model: model.restrict(&keep), world: root }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::formula::parse_formula;

    fn decide(text: &str) -> DecisionResult {
        gl_decide(&parse_formula(text).unwrap()).unwrap()
    }

    #[test]
    fn lob_axiom_is_valid() {
        let r = decide("[]([]p0 -> p0) -> []p0");
        assert_eq!(r.verdict, Verdict::Valid);
        let steps = r.proof().unwrap().steps();
        assert!(steps.iter().any(|s| s.rule == Rule::Glr));
        assert_eq!(steps[0].sequent, " => []([]p0 -> p0) -> []p0");
    }

    #[test]
    fn distribution_is_valid() {
        assert_eq!(decide("[](p0 -> p1) -> ([]p0 -> []p1)").verdict, Verdict::Valid);
        assert_eq!(decide("[]p0 -> [][]p0").verdict, Verdict::Valid);
        assert_eq!(decide("p0 | ~p0").verdict, Verdict::Valid);
        // consistency of provability is not provable
        assert_eq!(decide("~[](p0 & ~p0)").verdict, Verdict::Invalid);
        // formalized second incompleteness: []~[]F -> []F with F = p0 & ~p0
        assert_eq!(decide("[]~[](p0 & ~p0) -> [](p0 & ~p0)").verdict, Verdict::Valid);
    }

    #[test]
    fn reflection_is_invalid_with_one_world() {
        let phi = ModalFormula::reflection(0);
        let r = gl_decide(&phi).unwrap();
        assert_eq!(r.verdict, Verdict::Invalid);
        let c = r.countermodel().unwrap();
        assert_eq!(c.model.worlds(), 1);
        assert!(c.model.relation().is_empty());
        assert!(c.model.valuation()[0].is_empty());
        assert!(c.refutes(&phi));
    }

    #[test]
    fn reflexivity_style_axioms_fail() {
        for text in ["[]p0 -> p0", "[]p0 | []~p0", "~[]p0 -> []~[]p0", "p0 -> []p0", "[][]p0 -> []p0"] {
            let phi = parse_formula(text).unwrap();
            let r = gl_decide(&phi).unwrap();
            assert_eq!(r.verdict, Verdict::Invalid, "{text}");
            assert!(r.countermodel().unwrap().refutes(&phi), "{text}");
        }
    }

    #[test]
    fn limits() {
        let mut big = ModalFormula::atom(0);
        for _ in 0..120 {
            big = ModalFormula::and(big, ModalFormula::atom(1));
        }
        assert!(matches!(gl_decide(&big), Err(LogicError::FormulaTooLarge { limit: 200, .. })));
        let mut many = ModalFormula::atom(0);
        for i in 1..9 {
            many = ModalFormula::or(many, ModalFormula::atom(i));
        }
        assert!(matches!(gl_decide(&many), Err(LogicError::TooManyAtoms { atoms: 9, limit: 8 })));
    }

    #[test]
    fn unminimized_countermodel_also_refutes() {
        let phi = parse_formula("[](p0 | p1) -> []p0 | []p1").unwrap();
        let config = GlConfig { minimize_countermodels: false, ..GlConfig::default() };
        let raw = gl_decide_with(&phi, &config).unwrap();
        let small = gl_decide(&phi).unwrap();
        let raw_c = raw.countermodel().unwrap();
        let small_c = small.countermodel().unwrap();
        assert!(raw_c.refutes(&phi) && small_c.refutes(&phi));
        assert!(small_c.model.worlds() <= raw_c.model.worlds());
    }
}
