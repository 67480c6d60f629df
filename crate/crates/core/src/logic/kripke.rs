//! Finite Kripke semantics over transitive irreflexive frames, frame
//! enumeration, and the brute-force validity oracle built on it.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::formula::ModalFormula;
use super::LogicError;
use crate::exec::Execution;

/// Largest frame size [`enumerate_frames`] will produce.
pub const MAX_ENUMERATED_WORLDS: usize = 5;

/// Finite model whose accessibility relation is a strict partial order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KripkeModel {
    successors: Vec<BTreeSet<usize>>,
    valuation: Vec<BTreeSet<u32>>,
}

impl KripkeModel {
    /// `valuation[w]` lists the atoms true at world `w`; its length fixes the
    /// number of worlds.
    pub fn new(relation: &[(usize, usize)], valuation: Vec<BTreeSet<u32>>) -> Result<Self, LogicError> {
        let worlds = valuation.len();
        let mut successors = vec![BTreeSet::new(); worlds];
        for &(a, b) in relation {
            if a >= worlds || b >= worlds {
                return Err(LogicError::WorldOutOfRange { world: a.max(b), worlds });
            }
            if a == b {
                return Err(LogicError::Reflexive(a));
            }
            successors[a].insert(b);
        }
        for (a, succ) in successors.iter().enumerate() {
            for &b in succ {
                if let Some(&c) = successors[b].iter().find(|c| !succ.contains(c)) {
                    return Err(LogicError::NotTransitive(a, b, c));
                }
            }
        }
        Ok(Self { successors, valuation })
    }

    pub fn worlds(&self) -> usize {
        self.valuation.len()
    }

    pub fn successors(&self, world: usize) -> &BTreeSet<usize> {
        &self.successors[world]
    }

    pub fn valuation(&self) -> &[BTreeSet<u32>] {
        &self.valuation
    }

    pub fn relation(&self) -> Vec<(usize, usize)> {
        self.successors.iter().enumerate().flat_map(|(a, s)| s.iter().map(move |&b| (a, b))).collect()
    }

    /// Truth value of `phi` at every world.
    pub fn truth_set(&self, phi: &ModalFormula) -> Vec<bool> {
        match phi {
            ModalFormula::Atom(i) => self.valuation.iter().map(|v| v.contains(i)).collect(),
            ModalFormula::Not(a) => self.truth_set(a).into_iter().map(|x| !x).collect(),
            ModalFormula::And(a, b) => zip_with(self.truth_set(a), self.truth_set(b), |x, y| x && y),
            ModalFormula::Or(a, b) => zip_with(self.truth_set(a), self.truth_set(b), |x, y| x || y),
            ModalFormula::Implies(a, b) => zip_with(self.truth_set(a), self.truth_set(b), |x, y| !x || y),
            ModalFormula::Box(a) => {
                let inner = self.truth_set(a);
                self.successors.iter().map(|s| s.iter().all(|&v| inner[v])).collect()
            }
        }
    }

    /// Restriction to `keep` (ascending, re-indexed). Strict partial orders
    /// restrict to strict partial orders.
    pub fn restrict(&self, keep: &[usize]) -> KripkeModel {
        let index_of = |w: usize| keep.iter().position(|&k| k == w);
        let successors =
            keep.iter().map(|&w| self.successors[w].iter().filter_map(|&v| index_of(v)).collect()).collect();
        let valuation = keep.iter().map(|&w| self.valuation[w].clone()).collect();
        KripkeModel { successors, valuation }
    }
}

fn zip_with(a: Vec<bool>, b: Vec<bool>, f: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

/// Truth of `phi` at `world` of `model`.
pub fn model_check(phi: &ModalFormula, model: &KripkeModel, world: usize) -> Result<bool, LogicError> {
    if world >= model.worlds() {
        return Err(LogicError::WorldOutOfRange { world, worlds: model.worlds() });
    }
    Ok(model.truth_set(phi)[world])
}

/// A model together with a world where the formula under test is false.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Countermodel {
    pub model: KripkeModel,
    pub world: usize,
}

impl Countermodel {
    pub fn refutes(&self, phi: &ModalFormula) -> bool {
        !self.model.truth_set(phi)[self.world]
    }

    pub fn to_record(&self) -> CountermodelRecord {
        CountermodelRecord {
            worlds: self.model.worlds(),
            relation: self.model.relation(),
            valuation: self.model.valuation().iter().map(|v| v.iter().copied().collect()).collect(),
            refuting_world: self.world,
        }
    }
}

/// Plain-data form of a countermodel for reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountermodelRecord {
    pub worlds: usize,
    pub relation: Vec<(usize, usize)>,
    pub valuation: Vec<Vec<u32>>,
    pub refuting_world: usize,
}

impl CountermodelRecord {
    pub fn to_countermodel(&self) -> Result<Countermodel, LogicError> {
        let valuation = self.valuation.iter().map(|v| v.iter().copied().collect()).collect();
        let model = KripkeModel::new(&self.relation, valuation)?;
        if self.refuting_world >= model.worlds() {
            return Err(LogicError::WorldOutOfRange { world: self.refuting_world, worlds: model.worlds() });
        }
        Ok(Countermodel { model, world: self.refuting_world })
    }
}

/// Strict partial order on `worlds` labelled worlds, as successor bitmasks.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Frame {
    worlds: usize,
    successors: Vec<u32>,
}

impl Frame {
    pub fn worlds(&self) -> usize {
        self.worlds
    }

    pub fn successor_mask(&self, world: usize) -> u32 {
        self.successors[world]
    }

    pub fn relation(&self) -> Vec<(usize, usize)> {
        (0..self.worlds)
            .flat_map(|a| (0..self.worlds).filter(move |&b| self.successors[a] >> b & 1 == 1).map(move |b| (a, b)))
            .collect()
    }
}

/// Every transitive irreflexive relation on `world_count` labelled worlds,
/// each exactly once: all subsets of off-diagonal pairs, filtered for
/// transitivity.
pub fn enumerate_frames(world_count: usize) -> Result<impl Iterator<Item = Frame>, LogicError> {
    if world_count == 0 {
        return Err(LogicError::NoWorlds);
    }
    if world_count > MAX_ENUMERATED_WORLDS {
        return Err(LogicError::FrameLimit { requested: world_count, limit: MAX_ENUMERATED_WORLDS });
    }
    let pairs: Vec<(usize, usize)> =
        (0..world_count).flat_map(|a| (0..world_count).filter(move |&b| b != a).map(move |b| (a, b))).collect();
    let subsets = 1u64 << pairs.len();
    Ok((0..subsets).filter_map(move |bits| {
        let mut successors = vec![0u32; world_count];
        for (k, &(a, b)) in pairs.iter().enumerate() {
            if bits >> k & 1 == 1 {
                successors[a] |= 1 << b;
            }
        }
        let transitive = (0..world_count).all(|a| {
            (0..world_count).filter(|&b| successors[a] >> b & 1 == 1).all(|b| successors[b] & !successors[a] == 0)
        });
        transitive.then_some(Frame { worlds: world_count, successors })
    }))
}

/// Cached enumeration, for callers that sweep the same sizes repeatedly.
pub fn frames_of_size(world_count: usize) -> Result<&'static [Frame], LogicError> {
    static CACHE: [OnceLock<Vec<Frame>>; MAX_ENUMERATED_WORLDS + 1] =
        [const { OnceLock::new() }; MAX_ENUMERATED_WORLDS + 1];
    let frames = enumerate_frames(world_count)?;
    Ok(CACHE[world_count].get_or_init(|| frames.collect()))
}

/// Postfix program evaluating a formula to a truth bitmask over ≤ 32 worlds.
struct MaskProgram {
    ops: Vec<MaskOp>,
    atoms: Vec<u32>,
}

#[derive(Clone, Copy)]
enum MaskOp {
    Atom(usize),
    Not,
    And,
    Or,
    Implies,
    Box,
}

impl MaskProgram {
    fn compile(phi: &ModalFormula) -> Self {
        let atoms: Vec<u32> = phi.atoms().into_iter().collect();
        let mut ops = Vec::new();
        fn emit(f: &ModalFormula, atoms: &[u32], ops: &mut Vec<MaskOp>) {
            for c in f.children() {
                emit(c, atoms, ops);
            }
            ops.push(match f {
                ModalFormula::Atom(i) => MaskOp::Atom(atoms.binary_search(i).expect("collected")),
                ModalFormula::Not(_) => MaskOp::Not,
                ModalFormula::And(..) => MaskOp::And,
                ModalFormula::Or(..) => MaskOp::Or,
                ModalFormula::Implies(..) => MaskOp::Implies,
                ModalFormula::Box(_) => MaskOp::Box,
            });
        }
        emit(phi, &atoms, &mut ops);
        Self { ops, atoms }
    }

    /// `atom_masks[k]` is the truth set of the k-th atom of the formula.
    fn eval(&self, frame: &Frame, atom_masks: &[u32], stack: &mut Vec<u32>) -> u32 {
        let all = (1u32 << frame.worlds) - 1;
        stack.clear();
        for op in &self.ops {
            let value = match *op {
                MaskOp::Atom(k) => atom_masks[k],
                MaskOp::Not => all & !stack.pop().unwrap(),
                MaskOp::Box => {
                    let inner = stack.pop().unwrap();
                    (0..frame.worlds).filter(|&w| frame.successors[w] & !inner == 0).fold(0, |m, w| m | 1 << w)
                }
                binary => {
                    let b = stack.pop().unwrap();
                    let a = stack.pop().unwrap();
                    match binary {
                        MaskOp::And => a & b,
                        MaskOp::Or => a | b,
                        _ => all & (!a | b),
                    }
                }
            };
            stack.push(value);
        }
        stack.pop().unwrap()
    }
}

/// Searches every frame with exactly `worlds` worlds and every valuation of
/// the formula's atoms for a world falsifying `phi`. Returns the first hit
/// in enumeration order.
pub fn find_countermodel_on_frames(
    phi: &ModalFormula,
    worlds: usize,
    exec: Execution,
) -> Result<Option<Countermodel>, LogicError> {
    let frames = frames_of_size(worlds)?;
    let program = MaskProgram::compile(phi);
    let atom_count = program.atoms.len();
    let bits = atom_count * worlds;
    if bits >= 64 {
        return Err(LogicError::ValuationLimit { atoms: atom_count, worlds });
    }
    let world_mask = (1u64 << worlds) - 1;
    let all = (1u32 << worlds) - 1;
    let hit = exec.find_map_first(frames, |frame| {
        let mut stack = Vec::with_capacity(program.ops.len());
        let mut atom_masks = vec![0u32; atom_count];
        for valuation in 0..1u64 << bits {
            for (k, m) in atom_masks.iter_mut().enumerate() {
                *m = (valuation >> (k * worlds) & world_mask) as u32;
            }
            let truth = program.eval(frame, &atom_masks, &mut stack);
            if truth != all {
                let world = (!truth & all).trailing_zeros() as usize;
                return Some((frame.clone(), atom_masks.clone(), world));
            }
        }
        None
    });
    Ok(hit.map(|(frame, atom_masks, world)| {
        let valuation = (0..worlds)
            .map(|w| program.atoms.iter().zip(&atom_masks).filter(|(_, m)| *m >> w & 1 == 1).map(|(a, _)| *a).collect())
            .collect();
        let model = KripkeModel::new(&frame.relation(), valuation).expect("enumerated frames are strict orders");
        Countermodel { model, world }
    }))
}

/// Brute-force GL validity up to `max_worlds` worlds: `None` when no frame of
/// that size or smaller refutes `phi`, otherwise a smallest countermodel.
pub fn brute_force_countermodel(
    phi: &ModalFormula,
    max_worlds: usize,
    exec: Execution,
) -> Result<Option<Countermodel>, LogicError> {
    for worlds in 1..=max_worlds {
        if let Some(c) = find_countermodel_on_frames(phi, worlds, exec)? {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// World bound used by the cross-check: one more than the number of boxed
/// subformulas, capped at [`MAX_ENUMERATED_WORLDS`].
pub fn oracle_world_bound(phi: &ModalFormula) -> usize {
    (phi.box_subformula_count() + 1).min(MAX_ENUMERATED_WORLDS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::formula::parse_formula;

    fn set(atoms: &[u32]) -> BTreeSet<u32> {
        atoms.iter().copied().collect()
    }

    #[test]
    fn frame_counts_match_strict_partial_orders() {
        // labelled posets on n elements: 1, 3, 19, 219, 4231
        let counts: Vec<usize> = (1..=5).map(|n| enumerate_frames(n).unwrap().count()).collect();
        assert_eq!(counts, vec![1, 3, 19, 219, 4231]);
        let two: Vec<_> = enumerate_frames(2).unwrap().map(|f| f.relation()).collect();
        assert_eq!(two, vec![vec![], vec![(0, 1)], vec![(1, 0)]]);
        assert!(matches!(enumerate_frames(6), Err(LogicError::FrameLimit { requested: 6, .. })));
        assert!(matches!(enumerate_frames(0), Err(LogicError::NoWorlds)));
    }

    #[test]
    fn frames_are_distinct() {
        let frames = frames_of_size(4).unwrap();
        let unique: std::collections::HashSet<_> = frames.iter().collect();
        assert_eq!(unique.len(), frames.len());
    }

    #[test]
    fn model_validation() {
        assert_eq!(KripkeModel::new(&[(0, 0)], vec![set(&[])]), Err(LogicError::Reflexive(0)));
        assert_eq!(KripkeModel::new(&[(0, 1), (1, 2)], vec![set(&[]); 3]), Err(LogicError::NotTransitive(0, 1, 2)));
        assert!(matches!(
            KripkeModel::new(&[(0, 3)], vec![set(&[]); 2]),
            Err(LogicError::WorldOutOfRange { world: 3, worlds: 2 })
        ));
        assert!(matches!(
            KripkeModel::new(&[(0, 1), (1, 0)], vec![set(&[]); 2]),
            Err(LogicError::NotTransitive(..) | LogicError::Reflexive(_))
        ));
    }

    #[test]
    fn vacuous_box_at_terminal_world() {
        let m = KripkeModel::new(&[], vec![set(&[])]).unwrap();
        for text in ["[]p0", "[]~p0", "[](p0 & ~p0)", "[][]p1"] {
            assert!(model_check(&parse_formula(text).unwrap(), &m, 0).unwrap());
        }
        assert!(!model_check(&parse_formula("p0").unwrap(), &m, 0).unwrap());
        assert!(model_check(&parse_formula("p0").unwrap(), &m, 1).is_err());
    }

    #[test]
    fn two_world_chain() {
        let m = KripkeModel::new(&[(0, 1)], vec![set(&[]), set(&[0])]).unwrap();
        let box_p = parse_formula("[]p0").unwrap();
        assert!(model_check(&box_p, &m, 0).unwrap());
        assert!(!model_check(&parse_formula("p0").unwrap(), &m, 0).unwrap());
        assert!(!model_check(&parse_formula("[]~p0").unwrap(), &m, 0).unwrap());
    }

    #[test]
    fn lob_axiom_holds_on_every_small_frame() {
        let lob = ModalFormula::lob_axiom(0);
        for n in 1..=4 {
            assert_eq!(find_countermodel_on_frames(&lob, n, Execution::Sequential).unwrap(), None);
        }
    }

    #[test]
    fn lob_axiom_holds_on_every_small_frame_by_explicit_models() {
        // slow path through KripkeModel, independent of the bitmask evaluator
        let lob = ModalFormula::lob_axiom(0);
        for n in 1..=4 {
            for frame in enumerate_frames(n).unwrap() {
                for val in 0u32..1 << n {
                    let valuation = (0..n).map(|w| if val >> w & 1 == 1 { set(&[0]) } else { set(&[]) }).collect();
                    let m = KripkeModel::new(&frame.relation(), valuation).unwrap();
                    assert!(m.truth_set(&lob).into_iter().all(|x| x));
                }
            }
        }
    }

    #[test]
    fn reflection_fails_on_one_world() {
        let refl = ModalFormula::reflection(0);
        let c = brute_force_countermodel(&refl, 3, Execution::Sequential).unwrap().unwrap();
        assert_eq!(c.model.worlds(), 1);
        assert!(c.model.relation().is_empty());
        assert!(c.refutes(&refl));
    }

    #[test]
    fn bitmask_and_explicit_evaluators_agree() {
        let formulas = ["[](p0 -> []p1) | ~[]p0", "[][]p0 -> []p0", "~[]p0 -> ~[]~[]p0 & p1"];
        for text in formulas {
            let phi = parse_formula(text).unwrap();
            let program = MaskProgram::compile(&phi);
            let atoms = program.atoms.len();
            let mut stack = Vec::new();
            for frame in frames_of_size(3).unwrap() {
                for val in 0u64..1 << (3 * atoms) {
                    let masks: Vec<u32> = (0..atoms).map(|k| (val >> (3 * k) & 7) as u32).collect();
                    let fast = program.eval(frame, &masks, &mut stack);
                    let valuation = (0..3)
                        .map(|w| {
                            program
                                .atoms
                                .iter()
                                .zip(&masks)
                                .filter(|(_, m)| *m >> w & 1 == 1)
                                .map(|(a, _)| *a)
                                .collect()
                        })
                        .collect();
                    let m = KripkeModel::new(&frame.relation(), valuation).unwrap();
                    let slow = m.truth_set(&phi).iter().enumerate().fold(0u32, |acc, (w, &t)| acc | (t as u32) << w);
                    assert_eq!(fast, slow, "{text}");
                }
            }
        }
    }

    #[test]
    fn record_round_trip() {
        let c = brute_force_countermodel(&parse_formula("[]p0 | []~p0").unwrap(), 4, Execution::Sequential)
            .unwrap()
            .unwrap();
        assert_eq!(c.model.worlds(), 3);
        assert_eq!(c.to_record().to_countermodel().unwrap(), c);
    }
}
