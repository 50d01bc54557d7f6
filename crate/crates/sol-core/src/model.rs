//! Finite standard models and their evaluator. Predicate variables range
//! over full powersets, so evaluation of a second-order quantifier
//! enumerates every subset of `D^n`; extensions are packed into bitmasks
//! and formulas are compiled to a slot-indexed form before evaluation.
//!
//! Also: generalized-quantifier evaluation, the direct branching-quantifier
//! evaluators, exhaustive model enumeration for validity checking, and the
//! model text format.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::constructions::HenkinSignature;
use crate::syntax::{free_ind_vars, free_pred_vars, Formula, PredAbstraction, PredRef, Signature, Term};

/// Evaluation budget: every formula node visited during one top-level call
/// counts as a step.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// A finite model: elements are `0..domain_size`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub domain_size: usize,
    pub consts: Vec<(String, usize)>,
    pub preds: Vec<PredExt>,
}

/// One predicate constant's extension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredExt {
    pub name: String,
    pub arity: usize,
    pub tuples: BTreeSet<Vec<usize>>,
}

impl Model {
    pub fn new(domain_size: usize) -> Model {
        assert!(domain_size >= 1, "domains are nonempty");
        Model { domain_size, consts: Vec::new(), preds: Vec::new() }
    }

    pub fn with_const(mut self, name: &str, elem: usize) -> Model {
        assert!(elem < self.domain_size);
        self.consts.push((name.to_owned(), elem));
        self
    }

    pub fn with_pred(mut self, name: &str, arity: usize, tuples: &[&[usize]]) -> Model {
        let tuples: BTreeSet<Vec<usize>> = tuples.iter().map(|t| t.to_vec()).collect();
        for t in &tuples {
            assert_eq!(t.len(), arity);
            assert!(t.iter().all(|e| *e < self.domain_size));
        }
        self.preds.push(PredExt { name: name.to_owned(), arity, tuples });
        self
    }

    pub fn pred(&self, name: &str, arity: usize) -> Option<&BTreeSet<Vec<usize>>> {
        self.preds
            .iter()
            .find(|p| p.name == name && p.arity == arity)
            .map(|p| &p.tuples)
    }

    pub fn constant(&self, name: &str) -> Option<usize> {
        self.consts.iter().find(|(n, _)| n == name).map(|(_, e)| *e)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "domain {}", self.domain_size)?;
        for (name, e) in &self.consts {
            writeln!(f, "const {name} = {e}")?;
        }
        for p in &self.preds {
            write!(f, "pred {}/{} = {{", p.name, p.arity)?;
            for (i, t) in p.tuples.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "(")?;
                for (j, e) in t.iter().enumerate() {
                    if j > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")?;
            }
            writeln!(f, "}}")?;
        }
        Ok(())
    }
}

/// Values for the free variables of a formula.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    pub ind: Vec<(String, usize)>,
    pub pred: Vec<(String, usize, BTreeSet<Vec<usize>>)>,
}

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    pub fn with_ind(mut self, name: &str, elem: usize) -> Assignment {
        self.ind.push((name.to_owned(), elem));
        self
    }

    pub fn with_pred(mut self, name: &str, arity: usize, tuples: &[&[usize]]) -> Assignment {
        self.pred.push((
            name.to_owned(),
            arity,
            tuples.iter().map(|t| t.to_vec()).collect(),
        ));
        self
    }

    pub fn ind_value(&self, name: &str) -> Option<usize> {
        self.ind.iter().find(|(n, _)| n == name).map(|(_, e)| *e)
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, e) in &self.ind {
            writeln!(f, "assign {name} = {e}")?;
        }
        for (name, arity, tuples) in &self.pred {
            write!(f, "assign {name}/{arity} = {{")?;
            for (i, t) in tuples.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "(")?;
                for (j, e) in t.iter().enumerate() {
                    if j > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")?;
            }
            writeln!(f, "}}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound symbol: {0}")]
    UnboundSymbol(String),
    #[error("evaluation budget exceeded")]
    ResourceLimit,
    #[error("unsupported at this scale: {0}")]
    Unsupported(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
}

// ---------------------------------------------------------------------------
// Compilation to a slot-indexed form
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
enum PredSrc {
    Model(usize),
    FreeAssigned(usize),
    Bound(usize),
}

#[derive(Debug, Clone, Copy)]
enum Arg {
    Elem(usize),
    FreeVar(usize),
    BoundVar(usize),
}

#[derive(Debug)]
enum Ir {
    Atom { src: PredSrc, args: Vec<Arg> },
    Bot,
    Not(Box<Ir>),
    And(Box<Ir>, Box<Ir>),
    Or(Box<Ir>, Box<Ir>),
    Implies(Box<Ir>, Box<Ir>),
    ForallInd(Box<Ir>),
    ExistsInd(Box<Ir>),
    ForallPred { tuple_count: u32, body: Box<Ir> },
    ExistsPred { tuple_count: u32, body: Box<Ir> },
}

/// A formula compiled against one domain size and symbol layout. The model
/// predicate masks and free-variable values are supplied per run, so one
/// compilation serves a whole enumeration sweep.
struct Compiled {
    ir: Ir,
    n: usize,
    /// (name, arity) layout of the model predicate mask table.
    model_preds: Vec<(String, usize)>,
}

fn tuple_count(n: usize, arity: usize) -> Result<u32, EvalError> {
    let mut c: u64 = 1;
    for _ in 0..arity {
        c = c.saturating_mul(n as u64);
        if c > 127 {
            return Err(EvalError::Unsupported(format!(
                "predicate of arity {arity} over a domain of size {n} exceeds the 128-tuple mask"
            )));
        }
    }
    Ok(c as u32)
}

fn mask_of_tuples(tuples: &BTreeSet<Vec<usize>>, n: usize, arity: usize) -> Result<u128, EvalError> {
    let _ = tuple_count(n, arity)?;
    let mut mask = 0u128;
    for t in tuples {
        if t.len() != arity || t.iter().any(|e| *e >= n) {
            return Err(EvalError::TypeMismatch(format!(
                "tuple {t:?} does not fit arity {arity} over domain size {n}"
            )));
        }
        let mut idx = 0usize;
        for e in t {
            idx = idx * n + e;
        }
        mask |= 1u128 << idx;
    }
    Ok(mask)
}

fn tuples_of_mask(mask: u128, n: usize, arity: usize) -> BTreeSet<Vec<usize>> {
    let count = (0..arity).fold(1usize, |c, _| c * n);
    let mut out = BTreeSet::new();
    for idx in 0..count {
        if mask & (1u128 << idx) != 0 {
            let mut t = vec![0usize; arity];
            let mut rem = idx;
            for slot in (0..arity).rev() {
                t[slot] = rem % n;
                rem /= n;
            }
            out.insert(t);
        }
    }
    out
}

struct Compiler<'a> {
    n: usize,
    consts: &'a [(String, usize)],
    model_preds: Vec<(String, usize)>,
    free_inds: Vec<String>,
    free_preds: Vec<(String, usize)>,
    bound_ind: Vec<String>,
    bound_pred: Vec<(String, usize)>,
}

impl<'a> Compiler<'a> {
    fn compile(&mut self, f: &Formula) -> Result<Ir, EvalError> {
        Ok(match f {
            Formula::Atom { pred, args } => {
                let src = self.pred_src(pred)?;
                let mut slots = Vec::with_capacity(args.len());
                for t in args {
                    slots.push(self.arg(t)?);
                }
                Ir::Atom { src, args: slots }
            }
            Formula::Bot => Ir::Bot,
            Formula::Not(a) => Ir::Not(Box::new(self.compile(a)?)),
            Formula::And(a, b) => {
                Ir::And(Box::new(self.compile(a)?), Box::new(self.compile(b)?))
            }
            Formula::Or(a, b) => Ir::Or(Box::new(self.compile(a)?), Box::new(self.compile(b)?)),
            Formula::Implies(a, b) => {
                Ir::Implies(Box::new(self.compile(a)?), Box::new(self.compile(b)?))
            }
            Formula::ForallInd { var, body } => {
                self.bound_ind.push(var.clone());
                let b = self.compile(body)?;
                self.bound_ind.pop();
                Ir::ForallInd(Box::new(b))
            }
            Formula::ExistsInd { var, body } => {
                self.bound_ind.push(var.clone());
                let b = self.compile(body)?;
                self.bound_ind.pop();
                Ir::ExistsInd(Box::new(b))
            }
            Formula::ForallPred { var, arity, body } => {
                let tc = tuple_count(self.n, *arity)?;
                self.bound_pred.push((var.clone(), *arity));
                let b = self.compile(body)?;
                self.bound_pred.pop();
                Ir::ForallPred { tuple_count: tc, body: Box::new(b) }
            }
            Formula::ExistsPred { var, arity, body } => {
                let tc = tuple_count(self.n, *arity)?;
                self.bound_pred.push((var.clone(), *arity));
                let b = self.compile(body)?;
                self.bound_pred.pop();
                Ir::ExistsPred { tuple_count: tc, body: Box::new(b) }
            }
        })
    }

    fn arg(&self, t: &Term) -> Result<Arg, EvalError> {
        match t {
            Term::Var(v) => {
                if let Some(pos) = self.bound_ind.iter().rposition(|b| b == v) {
                    Ok(Arg::BoundVar(pos))
                } else if let Some(pos) = self.free_inds.iter().position(|b| b == v) {
                    Ok(Arg::FreeVar(pos))
                } else {
                    Err(EvalError::UnboundSymbol(format!("individual variable {v}")))
                }
            }
            Term::Const(c) => self
                .consts
                .iter()
                .find(|(n, _)| n == c)
                .map(|(_, e)| Arg::Elem(*e))
                .ok_or_else(|| EvalError::UnboundSymbol(format!("constant {c}"))),
        }
    }

    fn pred_src(&self, p: &PredRef) -> Result<PredSrc, EvalError> {
        match p {
            PredRef::Var { name, arity } => {
                if let Some(pos) = self
                    .bound_pred
                    .iter()
                    .rposition(|(b, a)| b == name && a == arity)
                {
                    Ok(PredSrc::Bound(pos))
                } else if let Some(pos) = self
                    .free_preds
                    .iter()
                    .position(|(b, a)| b == name && a == arity)
                {
                    Ok(PredSrc::FreeAssigned(pos))
                } else {
                    Err(EvalError::UnboundSymbol(format!("predicate variable {name}:{arity}")))
                }
            }
            PredRef::Const { name, arity } => self
                .model_preds
                .iter()
                .position(|(b, a)| b == name && a == arity)
                .map(PredSrc::Model)
                .ok_or_else(|| {
                    EvalError::UnboundSymbol(format!("predicate constant {name}/{arity}"))
                }),
        }
    }
}

struct Evaluator<'a> {
    n: usize,
    model_masks: &'a [u128],
    free_ind_vals: &'a [usize],
    free_pred_masks: &'a [u128],
    ind_env: Vec<usize>,
    pred_env: Vec<u128>,
    steps: &'a mut u64,
    budget: u64,
}

impl<'a> Evaluator<'a> {
    fn run(&mut self, ir: &Ir) -> Result<bool, EvalError> {
        *self.steps += 1;
        if *self.steps > self.budget {
            return Err(EvalError::ResourceLimit);
        }
        match ir {
            Ir::Bot => Ok(false),
            Ir::Atom { src, args } => {
                let mask = match src {
                    PredSrc::Model(i) => self.model_masks[*i],
                    PredSrc::FreeAssigned(i) => self.free_pred_masks[*i],
                    PredSrc::Bound(i) => self.pred_env[*i],
                };
                let mut idx = 0usize;
                for a in args {
                    let v = match a {
                        Arg::Elem(e) => *e,
                        Arg::FreeVar(i) => self.free_ind_vals[*i],
                        Arg::BoundVar(i) => self.ind_env[*i],
                    };
                    idx = idx * self.n + v;
                }
                Ok(mask & (1u128 << idx) != 0)
            }
            Ir::Not(a) => Ok(!self.run(a)?),
            Ir::And(a, b) => Ok(self.run(a)? && self.run(b)?),
            Ir::Or(a, b) => Ok(self.run(a)? || self.run(b)?),
            Ir::Implies(a, b) => Ok(!self.run(a)? || self.run(b)?),
            Ir::ForallInd(body) => {
                for e in 0..self.n {
                    self.ind_env.push(e);
                    let r = self.run(body);
                    self.ind_env.pop();
                    if !r? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Ir::ExistsInd(body) => {
                for e in 0..self.n {
                    self.ind_env.push(e);
                    let r = self.run(body);
                    self.ind_env.pop();
                    if r? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Ir::ForallPred { tuple_count, body } => {
                let limit: u128 = 1u128 << *tuple_count;
                let mut mask = 0u128;
                while mask < limit {
                    self.pred_env.push(mask);
                    let r = self.run(body);
                    self.pred_env.pop();
                    if !r? {
                        return Ok(false);
                    }
                    mask += 1;
                }
                Ok(true)
            }
            Ir::ExistsPred { tuple_count, body } => {
                let limit: u128 = 1u128 << *tuple_count;
                let mut mask = 0u128;
                while mask < limit {
                    self.pred_env.push(mask);
                    let r = self.run(body);
                    self.pred_env.pop();
                    if r? {
                        return Ok(true);
                    }
                    mask += 1;
                }
                Ok(false)
            }
        }
    }
}

fn compile_formula(
    f: &Formula,
    n: usize,
    consts: &[(String, usize)],
    model_preds: Vec<(String, usize)>,
    free_inds: Vec<String>,
    free_preds: Vec<(String, usize)>,
) -> Result<Compiled, EvalError> {
    let mut c = Compiler {
        n,
        consts,
        model_preds,
        free_inds,
        free_preds,
        bound_ind: Vec::new(),
        bound_pred: Vec::new(),
    };
    let ir = c.compile(f)?;
    Ok(Compiled { ir, n, model_preds: c.model_preds })
}

fn model_masks_for(c: &Compiled, m: &Model) -> Result<Vec<u128>, EvalError> {
    c.model_preds
        .iter()
        .map(|(name, arity)| {
            let tuples = m
                .pred(name, *arity)
                .ok_or_else(|| EvalError::UnboundSymbol(format!("predicate constant {name}/{arity}")))?;
            mask_of_tuples(tuples, c.n, *arity)
        })
        .collect()
}

/// Classical satisfaction in a standard model, with the default budget.
pub fn eval(f: &Formula, m: &Model, a: &Assignment) -> Result<bool, EvalError> {
    eval_with_budget(f, m, a, DEFAULT_BUDGET)
}

pub fn eval_with_budget(
    f: &Formula,
    m: &Model,
    a: &Assignment,
    budget: u64,
) -> Result<bool, EvalError> {
    let free_i = free_ind_vars(f);
    let free_p = free_pred_vars(f);
    let mut free_inds = Vec::new();
    let mut free_ind_vals = Vec::new();
    for v in &free_i {
        let e = a
            .ind_value(v)
            .ok_or_else(|| EvalError::UnboundSymbol(format!("individual variable {v}")))?;
        if e >= m.domain_size {
            return Err(EvalError::TypeMismatch(format!("assignment for {v} is outside the domain")));
        }
        free_inds.push(v.clone());
        free_ind_vals.push(e);
    }
    let mut free_preds = Vec::new();
    let mut free_pred_masks = Vec::new();
    for (name, arity) in &free_p {
        let tuples = a
            .pred
            .iter()
            .find(|(n, ar, _)| n == name && ar == arity)
            .map(|(_, _, t)| t)
            .ok_or_else(|| EvalError::UnboundSymbol(format!("predicate variable {name}:{arity}")))?;
        free_preds.push((name.clone(), *arity));
        free_pred_masks.push(mask_of_tuples(tuples, m.domain_size, *arity)?);
    }
    let model_pred_layout: Vec<(String, usize)> =
        m.preds.iter().map(|p| (p.name.clone(), p.arity)).collect();
    let compiled = compile_formula(
        f,
        m.domain_size,
        &m.consts,
        model_pred_layout,
        free_inds,
        free_preds,
    )?;
    let model_masks = model_masks_for(&compiled, m)?;
    let mut steps = 0u64;
    let mut ev = Evaluator {
        n: compiled.n,
        model_masks: &model_masks,
        free_ind_vals: &free_ind_vals,
        free_pred_masks: &free_pred_masks,
        ind_env: Vec::new(),
        pred_env: Vec::new(),
        steps: &mut steps,
        budget,
    };
    ev.run(&compiled.ir)
}

/// The set of tuples of `m` satisfying the abstraction body under `a`.
pub fn extension_of(
    abs: &PredAbstraction,
    m: &Model,
    a: &Assignment,
) -> Result<BTreeSet<Vec<usize>>, EvalError> {
    let n = m.domain_size;
    let arity = abs.arity();
    let count = (0..arity).fold(1usize, |c, _| c * n);
    let mut out = BTreeSet::new();
    for idx in 0..count {
        let mut tuple = vec![0usize; arity];
        let mut rem = idx;
        for slot in (0..arity).rev() {
            tuple[slot] = rem % n;
            rem /= n;
        }
        let mut a2 = a.clone();
        for (p, v) in abs.params().iter().zip(&tuple) {
            a2.ind.retain(|(name, _)| name != p);
            a2.ind.push((p.clone(), *v));
        }
        if eval(abs.body(), m, &a2)? {
            out.insert(tuple);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Validity checking by exhaustive model enumeration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Countermodel(Model, Assignment),
}

/// Enumerates every standard model over `sig` with domain sizes
/// `1..=max_size` and every assignment to the formula's free variables, in a
/// fixed order: sizes ascending; constants in declaration order (first
/// declared outermost); predicate extensions as binary counters over
/// lexicographically ordered tuples, in declaration order; then free
/// predicate variables and free individual variables in name order. Returns
/// the first falsifying model, or `Valid`.
pub fn check_validity(
    f: &Formula,
    sig: &Signature,
    max_size: usize,
    budget: u64,
) -> Result<Validity, EvalError> {
    let free_i: Vec<String> = free_ind_vars(f).into_iter().collect();
    let free_p: Vec<(String, usize)> = free_pred_vars(f).into_iter().collect();
    let mut steps = 0u64;
    for n in 1..=max_size {
        let compiled = compile_formula(
            f,
            n,
            &[],
            sig.preds.clone(),
            free_i.clone(),
            free_p.clone(),
        )?;
        // Rebind constants per placement: recompile is avoided by treating
        // constants as a leading block of free variables.
        let mut const_compiled = None;
        if !sig.consts.is_empty() {
            let mut pseudo_free = sig.consts.clone();
            pseudo_free.extend(free_i.iter().cloned());
            const_compiled = Some(compile_formula(
                f,
                n,
                &[],
                sig.preds.clone(),
                pseudo_free,
                free_p.clone(),
            )?);
        }
        let compiled = const_compiled.as_ref().unwrap_or(&compiled);

        let pred_bits: Vec<u32> = sig
            .preds
            .iter()
            .map(|(_, arity)| tuple_count(n, *arity))
            .collect::<Result<_, _>>()?;
        let free_bits: Vec<u32> = free_p
            .iter()
            .map(|(_, arity)| tuple_count(n, *arity))
            .collect::<Result<_, _>>()?;

        let mut const_vals = vec![0usize; sig.consts.len()];
        loop {
            let mut pred_masks = vec![0u128; sig.preds.len()];
            loop {
                let mut free_masks = vec![0u128; free_p.len()];
                loop {
                    let mut ind_vals = vec![0usize; free_i.len()];
                    loop {
                        let mut vals = const_vals.clone();
                        vals.extend(ind_vals.iter().copied());
                        let mut ev = Evaluator {
                            n,
                            model_masks: &pred_masks,
                            free_ind_vals: &vals,
                            free_pred_masks: &free_masks,
                            ind_env: Vec::new(),
                            pred_env: Vec::new(),
                            steps: &mut steps,
                            budget,
                        };
                        if !ev.run(&compiled.ir)? {
                            let model = Model {
                                domain_size: n,
                                consts: sig
                                    .consts
                                    .iter()
                                    .cloned()
                                    .zip(const_vals.iter().copied())
                                    .collect(),
                                preds: sig
                                    .preds
                                    .iter()
                                    .zip(&pred_masks)
                                    .map(|((name, arity), mask)| PredExt {
                                        name: name.clone(),
                                        arity: *arity,
                                        tuples: tuples_of_mask(*mask, n, *arity),
                                    })
                                    .collect(),
                            };
                            let assignment = Assignment {
                                ind: free_i
                                    .iter()
                                    .cloned()
                                    .zip(ind_vals.iter().copied())
                                    .collect(),
                                pred: free_p
                                    .iter()
                                    .zip(&free_masks)
                                    .map(|((name, arity), mask)| {
                                        (name.clone(), *arity, tuples_of_mask(*mask, n, *arity))
                                    })
                                    .collect(),
                            };
                            return Ok(Validity::Countermodel(model, assignment));
                        }
                        if !bump_base_n(&mut ind_vals, n) {
                            break;
                        }
                    }
                    if !bump_masks(&mut free_masks, &free_bits) {
                        break;
                    }
                }
                if !bump_masks(&mut pred_masks, &pred_bits) {
                    break;
                }
            }
            if !bump_base_n(&mut const_vals, n) {
                break;
            }
        }
    }
    Ok(Validity::Valid)
}

/// Increments a little-endian-last odometer in base `n`; the last entry
/// varies fastest. Returns false on wrap-around.
fn bump_base_n(vals: &mut [usize], n: usize) -> bool {
    for slot in (0..vals.len()).rev() {
        vals[slot] += 1;
        if vals[slot] < n {
            return true;
        }
        vals[slot] = 0;
    }
    false
}

fn bump_masks(masks: &mut [u128], bits: &[u32]) -> bool {
    for slot in (0..masks.len()).rev() {
        masks[slot] += 1;
        if masks[slot] < (1u128 << bits[slot]) {
            return true;
        }
        masks[slot] = 0;
    }
    false
}

// ---------------------------------------------------------------------------
// Generalized quantifiers
// ---------------------------------------------------------------------------

/// Type-level shape of the supported generalized quantifiers: `Most`,
/// `ForallC`, `ExistsC` take two sets, `AtLeast2` takes one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gq {
    Most,
    AtLeast2,
    ForallC,
    ExistsC,
}

pub fn eval_gq(q: Gq, sets: &[BTreeSet<usize>], m: &Model) -> Result<bool, EvalError> {
    for s in sets {
        if s.iter().any(|e| *e >= m.domain_size) {
            return Err(EvalError::TypeMismatch("set contains non-domain elements".into()));
        }
    }
    let two = |sets: &[BTreeSet<usize>]| -> Result<(BTreeSet<usize>, BTreeSet<usize>), EvalError> {
        if sets.len() != 2 {
            return Err(EvalError::TypeMismatch(format!(
                "quantifier takes 2 set arguments, got {}",
                sets.len()
            )));
        }
        Ok((sets[0].clone(), sets[1].clone()))
    };
    match q {
        Gq::Most => {
            let (a, b) = two(sets)?;
            Ok(a.intersection(&b).count() > a.difference(&b).count())
        }
        Gq::AtLeast2 => {
            if sets.len() != 1 {
                return Err(EvalError::TypeMismatch(format!(
                    "quantifier takes 1 set argument, got {}",
                    sets.len()
                )));
            }
            Ok(sets[0].len() >= 2)
        }
        Gq::ForallC => {
            let (c, phi) = two(sets)?;
            Ok(c.is_subset(&phi))
        }
        Gq::ExistsC => {
            let (c, phi) = two(sets)?;
            Ok(!c.is_disjoint(&phi))
        }
    }
}

// ---------------------------------------------------------------------------
// Branching-quantifier evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HenkinMode {
    /// Selectors are total functions on the domain.
    Functions,
    /// Selectors are binary relations left-total on the team (resp. board).
    Relations,
}

fn henkin_extensions(
    m: &Model,
    sig: &HenkinSignature,
) -> Result<(Vec<bool>, Vec<bool>, Vec<Vec<bool>>), EvalError> {
    let n = m.domain_size;
    let lookup1 = |p: &PredRef| -> Result<Vec<bool>, EvalError> {
        let tuples = m
            .pred(p.name(), 1)
            .ok_or_else(|| EvalError::UnboundSymbol(format!("predicate constant {}/1", p.name())))?;
        let mut v = vec![false; n];
        for t in tuples {
            v[t[0]] = true;
        }
        Ok(v)
    };
    let t = lookup1(sig.team())?;
    let b = lookup1(sig.board())?;
    let ktuples = m.pred(sig.knows().name(), 2).ok_or_else(|| {
        EvalError::UnboundSymbol(format!("predicate constant {}/2", sig.knows().name()))
    })?;
    let mut k = vec![vec![false; n]; n];
    for t in ktuples {
        k[t[0]][t[1]] = true;
    }
    Ok((t, b, k))
}

/// Direct evaluation of the branching reading: both modes enumerate the two
/// selectors and test the matrix, and agree on every finite model.
pub fn eval_henkin_direct(
    m: &Model,
    sig: &HenkinSignature,
    mode: HenkinMode,
) -> Result<bool, EvalError> {
    let n = m.domain_size;
    let (t, b, k) = henkin_extensions(m, sig)?;
    match mode {
        HenkinMode::Functions => {
            if n > 6 {
                return Err(EvalError::Unsupported(
                    "function enumeration is limited to domains of size 6".into(),
                ));
            }
            let mut f = vec![0usize; n];
            loop {
                let mut g = vec![0usize; n];
                loop {
                    let ok = (0..n).all(|x| {
                        (0..n).all(|y| !(t[x] && b[y]) || k[f[x]][g[y]])
                    });
                    if ok {
                        return Ok(true);
                    }
                    if !bump_base_n(&mut g, n) {
                        break;
                    }
                }
                if !bump_base_n(&mut f, n) {
                    return Ok(false);
                }
            }
        }
        HenkinMode::Relations => {
            if n > 3 {
                return Err(EvalError::Unsupported(
                    "relation enumeration is limited to domains of size 3".into(),
                ));
            }
            let pairs = n * n;
            let rel = |mask: u32, x: usize, xp: usize| mask & (1u32 << (x * n + xp)) != 0;
            let left_total = |mask: u32, on: &[bool]| {
                (0..n).all(|x| !on[x] || (0..n).any(|xp| rel(mask, x, xp)))
            };
            for fm in 0..(1u32 << pairs) {
                if !left_total(fm, &t) {
                    continue;
                }
                for gm in 0..(1u32 << pairs) {
                    if !left_total(gm, &b) {
                        continue;
                    }
                    let ok = (0..n).all(|x| {
                        (0..n).all(|xp| {
                            (0..n).all(|y| {
                                (0..n).all(|yp| {
                                    !(t[x] && b[y] && rel(fm, x, xp) && rel(gm, y, yp))
                                        || k[xp][yp]
                                })
                            })
                        })
                    });
                    if ok {
                        return Ok(true);
                    }
                }
            }
            Ok(false)
        }
    }
}

/// The type-<4> branching quantifier over an arbitrary 4-ary relation:
/// true iff there are selector functions f, g with `(x, f(x), y, g(y))` in
/// the relation for all x, y.
pub fn eval_henkin_q4(m: &Model, relation: &BTreeSet<Vec<usize>>) -> Result<bool, EvalError> {
    let n = m.domain_size;
    if n > 6 {
        return Err(EvalError::Unsupported(
            "function enumeration is limited to domains of size 6".into(),
        ));
    }
    for t in relation {
        if t.len() != 4 || t.iter().any(|e| *e >= n) {
            return Err(EvalError::TypeMismatch("relation must consist of 4-tuples over the domain".into()));
        }
    }
    let mem = |x: usize, fx: usize, y: usize, gy: usize| {
        relation.contains(&vec![x, fx, y, gy])
    };
    let mut f = vec![0usize; n];
    loop {
        let mut g = vec![0usize; n];
        loop {
            if (0..n).all(|x| (0..n).all(|y| mem(x, f[x], y, g[y]))) {
                return Ok(true);
            }
            if !bump_base_n(&mut g, n) {
                break;
            }
        }
        if !bump_base_n(&mut f, n) {
            return Ok(false);
        }
    }
}

/// The two linear prefix orders over the `T(x) & B(y) -> K(x',y')` matrix,
/// evaluated directly.
pub fn eval_linear_readings(
    m: &Model,
    sig: &HenkinSignature,
) -> Result<(bool, bool), EvalError> {
    let n = m.domain_size;
    let (t, b, k) = henkin_extensions(m, sig)?;
    let first = (0..n).all(|x| {
        (0..n).any(|xp| (0..n).all(|y| (0..n).any(|yp| !(t[x] && b[y]) || k[xp][yp])))
    });
    let second = (0..n).all(|y| {
        (0..n).any(|yp| (0..n).all(|x| (0..n).any(|xp| !(t[x] && b[y]) || k[xp][yp])))
    });
    Ok((first, second))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no separating model with domain size <= {max_size}")]
pub struct SeparatorNotFound {
    pub max_size: usize,
}

/// Searches, in enumeration order, for a model over `(T, B, K)` where both
/// linear readings hold but the branching reading fails. Over this matrix
/// the three readings coincide on every finite model (each is equivalent to
/// "T is empty, B is empty, or K is nonempty"), so the search is exhaustive
/// and reports `SeparatorNotFound`; see `eval_henkin_q4` for the quantifier
/// that does separate.
pub fn find_branching_separator(max_size: usize) -> Result<Model, SeparatorNotFound> {
    let sig = HenkinSignature::default();
    for n in 1..=max_size {
        let pairs = n * n;
        for tm in 0..(1u32 << n) {
            for bm in 0..(1u32 << n) {
                for km in 0..(1u64 << pairs) {
                    let model = Model {
                        domain_size: n,
                        consts: vec![],
                        preds: vec![
                            PredExt {
                                name: sig.team().name().to_owned(),
                                arity: 1,
                                tuples: (0..n).filter(|e| tm & (1 << e) != 0).map(|e| vec![e]).collect(),
                            },
                            PredExt {
                                name: sig.board().name().to_owned(),
                                arity: 1,
                                tuples: (0..n).filter(|e| bm & (1 << e) != 0).map(|e| vec![e]).collect(),
                            },
                            PredExt {
                                name: sig.knows().name().to_owned(),
                                arity: 2,
                                tuples: (0..n)
                                    .flat_map(|x| (0..n).map(move |y| (x, y)))
                                    .filter(|(x, y)| km & (1 << (x * n + y)) != 0)
                                    .map(|(x, y)| vec![x, y])
                                    .collect(),
                            },
                        ],
                    };
                    let (l1, l2) =
                        eval_linear_readings(&model, &sig).expect("signature interpreted");
                    if l1 && l2 {
                        let branching = eval_henkin_direct(&model, &sig, HenkinMode::Functions)
                            .expect("signature interpreted");
                        if !branching {
                            return Ok(model);
                        }
                    }
                }
            }
        }
    }
    Err(SeparatorNotFound { max_size })
}

// ---------------------------------------------------------------------------
// Model text format
// ---------------------------------------------------------------------------

/// Parses the model text format: `domain N`, then `const NAME = E` and
/// `pred NAME/ARITY = {(..), ..}` lines. `#` starts a comment.
pub fn parse_model(text: &str) -> Result<Model, String> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .enumerate()
        .filter(|(_, l)| !l.is_empty());
    let Some((_, first)) = lines.next() else {
        return Err("empty model file".into());
    };
    let Some(size) = first.strip_prefix("domain ") else {
        return Err("model file must start with 'domain N'".into());
    };
    let domain_size: usize = size
        .trim()
        .parse()
        .map_err(|_| format!("bad domain size {size:?}"))?;
    if domain_size == 0 {
        return Err("domains are nonempty".into());
    }
    let mut model = Model::new(domain_size);
    for (idx, line) in lines {
        let lineno = idx + 1;
        if let Some(rest) = line.strip_prefix("const ") {
            let Some((name, val)) = rest.split_once('=') else {
                return Err(format!("line {lineno}: const line must be 'const NAME = E'"));
            };
            let e: usize = val
                .trim()
                .parse()
                .map_err(|_| format!("line {lineno}: bad element {val:?}"))?;
            if e >= domain_size {
                return Err(format!("line {lineno}: element {e} outside domain"));
            }
            model.consts.push((name.trim().to_owned(), e));
        } else if let Some(rest) = line.strip_prefix("pred ") {
            let Some((head, body)) = rest.split_once('=') else {
                return Err(format!("line {lineno}: pred line must be 'pred NAME/ARITY = {{..}}'"));
            };
            let head = head.trim();
            let Some((name, arity)) = head.split_once('/') else {
                return Err(format!("line {lineno}: predicate head must be NAME/ARITY"));
            };
            let arity: usize = arity
                .trim()
                .parse()
                .map_err(|_| format!("line {lineno}: bad arity {arity:?}"))?;
            let body = body.trim();
            if !(body.starts_with('{') && body.ends_with('}')) {
                return Err(format!("line {lineno}: extension must be braced"));
            }
            let inner = &body[1..body.len() - 1];
            let mut tuples = BTreeSet::new();
            for chunk in split_tuples(inner) {
                let chunk = chunk.trim();
                if chunk.is_empty() {
                    continue;
                }
                let cleaned = chunk.trim_start_matches('(').trim_end_matches(')');
                let mut tuple = Vec::new();
                if !cleaned.trim().is_empty() {
                    for part in cleaned.split(',') {
                        let e: usize = part
                            .trim()
                            .parse()
                            .map_err(|_| format!("line {lineno}: bad element {part:?}"))?;
                        if e >= domain_size {
                            return Err(format!("line {lineno}: element {e} outside domain"));
                        }
                        tuple.push(e);
                    }
                }
                if tuple.len() != arity {
                    return Err(format!(
                        "line {lineno}: tuple {chunk} has length {}, expected {arity}",
                        tuple.len()
                    ));
                }
                tuples.insert(tuple);
            }
            model.preds.push(PredExt { name: name.trim().to_owned(), arity, tuples });
        } else {
            return Err(format!("line {lineno}: unexpected line {line:?}"));
        }
    }
    Ok(model)
}

/// Splits `(0,1), (2,2)` into tuple chunks at top-level commas.
fn split_tuples(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' => {
                depth += 1;
                cur.push(c);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                cur.push(c);
            }
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
            }
            _ => cur.push(c),
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{dedekind_finiteness, expand_henkin, HenkinVariant};
    use crate::parse::parse_formula_with;
    use crate::syntax::{pconst, pvar, var};

    fn sig_tbk() -> HenkinSignature {
        HenkinSignature::default()
    }

    #[test]
    fn bot_is_false_everywhere() {
        let m = Model::new(2);
        assert_eq!(eval(&Formula::Bot, &m, &Assignment::new()).unwrap(), false);
    }

    #[test]
    fn comprehension_is_satisfied_in_full_models() {
        // exists2 X:1. forall x. ((P(x) -> X(x)) & (X(x) -> P(x)))
        let sig = Signature::new(&[], &[("P", 1)]);
        let f = parse_formula_with(
            &sig,
            "exists2 X:1. forall x. ((P(x) -> X(x)) & (X(x) -> P(x)))",
        )
        .unwrap();
        let m = Model::new(2).with_pred("P", 1, &[&[0]]);
        assert!(eval(&f, &m, &Assignment::new()).unwrap());
    }

    #[test]
    fn dedekind_finiteness_holds_on_small_models() {
        let f = dedekind_finiteness();
        for n in 1..=3 {
            let m = Model::new(n);
            assert!(eval(&f, &m, &Assignment::new()).unwrap(), "size {n}");
            assert!(!eval(&Formula::not(f.clone()), &m, &Assignment::new()).unwrap());
        }
    }

    #[test]
    fn unbound_symbols_are_reported() {
        let f = Formula::atom(pconst("P", 1), vec![var("x")]);
        let m = Model::new(1);
        assert!(matches!(
            eval(&f, &m, &Assignment::new()),
            Err(EvalError::UnboundSymbol(_))
        ));
        let g = Formula::atom(pvar("X", 1), vec![crate::syntax::cst("a")]);
        let m2 = Model::new(1).with_const("a", 0);
        assert!(matches!(
            eval(&g, &m2, &Assignment::new()),
            Err(EvalError::UnboundSymbol(_))
        ));
    }

    #[test]
    fn budget_is_enforced() {
        let f = dedekind_finiteness();
        let m = Model::new(3);
        assert!(matches!(
            eval_with_budget(&f, &m, &Assignment::new(), 100),
            Err(EvalError::ResourceLimit)
        ));
    }

    #[test]
    fn excluded_middle_is_valid() {
        let sig = Signature::new(&[], &[("A", 0)]);
        let f = parse_formula_with(&sig, "A | ~A").unwrap();
        assert_eq!(
            check_validity(&f, &sig, 3, DEFAULT_BUDGET).unwrap(),
            Validity::Valid
        );
    }

    #[test]
    fn first_countermodel_is_deterministic() {
        let sig = Signature::new(&[], &[("P", 1)]);
        let f = parse_formula_with(&sig, "exists x. P(x)").unwrap();
        match check_validity(&f, &sig, 3, DEFAULT_BUDGET).unwrap() {
            Validity::Countermodel(m, a) => {
                assert_eq!(m.domain_size, 1);
                assert_eq!(m.pred("P", 1).unwrap().len(), 0);
                assert!(a.ind.is_empty() && a.pred.is_empty());
            }
            Validity::Valid => panic!("expected a countermodel"),
        }
    }

    #[test]
    fn free_variables_are_swept_too() {
        // X(x) is falsifiable via the empty assignment set.
        let f = Formula::atom(pvar("X", 1), vec![var("x")]);
        match check_validity(&f, &Signature::default(), 2, DEFAULT_BUDGET).unwrap() {
            Validity::Countermodel(m, a) => {
                assert_eq!(m.domain_size, 1);
                assert_eq!(a.ind_value("x"), Some(0));
                assert_eq!(a.pred[0].2.len(), 0);
            }
            Validity::Valid => panic!("expected a countermodel"),
        }
    }

    #[test]
    fn gq_examples() {
        let m = Model::new(3);
        let s = |xs: &[usize]| xs.iter().copied().collect::<BTreeSet<usize>>();
        assert!(eval_gq(Gq::Most, &[s(&[0, 1]), s(&[0, 1])], &m).unwrap());
        assert!(!eval_gq(Gq::Most, &[s(&[0, 1]), s(&[0])], &m).unwrap());
        assert!(eval_gq(Gq::AtLeast2, &[s(&[0, 2])], &m).unwrap());
        assert!(!eval_gq(Gq::AtLeast2, &[s(&[2])], &m).unwrap());
        assert!(eval_gq(Gq::ForallC, &[s(&[0]), s(&[0, 1])], &m).unwrap());
        assert!(!eval_gq(Gq::ForallC, &[s(&[0, 2]), s(&[0, 1])], &m).unwrap());
        assert!(eval_gq(Gq::ExistsC, &[s(&[0, 2]), s(&[2])], &m).unwrap());
        assert!(!eval_gq(Gq::ExistsC, &[s(&[0]), s(&[2])], &m).unwrap());
        assert!(matches!(
            eval_gq(Gq::Most, &[s(&[0])], &m),
            Err(EvalError::TypeMismatch(_))
        ));
    }

    #[test]
    fn at_least_two_matches_relativized_first_order_form() {
        // On every subset A of a 3-element domain, |A| >= 2 agrees with
        // exists x. exists y. (~(x = y) & A(x) & A(y)) where = is Leibniz.
        let sig = Signature::new(&[], &[("A", 1)]);
        let f = parse_formula_with(
            &sig,
            "exists x. exists y. (~(forall2 Z:1. Z(x) -> Z(y)) & A(x) & A(y))",
        )
        .unwrap();
        for mask in 0u32..8 {
            let tuples: Vec<Vec<usize>> =
                (0..3).filter(|e| mask & (1 << e) != 0).map(|e| vec![e]).collect();
            let refs: Vec<&[usize]> = tuples.iter().map(Vec::as_slice).collect();
            let m = Model::new(3).with_pred("A", 1, &refs);
            let set: BTreeSet<usize> = (0..3).filter(|e| mask & (1 << e) != 0).collect();
            assert_eq!(
                eval(&f, &m, &Assignment::new()).unwrap(),
                eval_gq(Gq::AtLeast2, &[set], &m).unwrap(),
                "mask {mask:#b}"
            );
        }
    }

    #[test]
    fn henkin_direct_examples() {
        let sig = sig_tbk();
        // All-true model.
        let m = Model::new(2)
            .with_pred("T", 1, &[&[0], &[1]])
            .with_pred("B", 1, &[&[0], &[1]])
            .with_pred("K", 2, &[&[0, 0], &[0, 1], &[1, 0], &[1, 1]]);
        assert!(eval_henkin_direct(&m, &sig, HenkinMode::Functions).unwrap());
        assert!(eval_henkin_direct(&m, &sig, HenkinMode::Relations).unwrap());
        // Nonempty teams and boards, empty acquaintance.
        let m2 = Model::new(2)
            .with_pred("T", 1, &[&[0]])
            .with_pred("B", 1, &[&[1]])
            .with_pred("K", 2, &[]);
        assert!(!eval_henkin_direct(&m2, &sig, HenkinMode::Functions).unwrap());
        assert!(!eval_henkin_direct(&m2, &sig, HenkinMode::Relations).unwrap());
    }

    #[test]
    fn henkin_direct_agrees_with_expansion_on_a_sample() {
        let sig = sig_tbk();
        let expanded = expand_henkin(&sig, HenkinVariant::Plain);
        let m = Model::new(2)
            .with_pred("T", 1, &[&[0]])
            .with_pred("B", 1, &[&[0], &[1]])
            .with_pred("K", 2, &[&[1, 0], &[1, 1]]);
        let direct = eval_henkin_direct(&m, &sig, HenkinMode::Functions).unwrap();
        let via_eval = eval(&expanded, &m, &Assignment::new()).unwrap();
        assert_eq!(direct, via_eval);
        assert!(direct);
    }

    #[test]
    fn separator_search_is_exhaustive_and_empty() {
        // The three readings coincide over this matrix; see the doc comment.
        assert_eq!(
            find_branching_separator(1),
            Err(SeparatorNotFound { max_size: 1 })
        );
        assert_eq!(
            find_branching_separator(2),
            Err(SeparatorNotFound { max_size: 2 })
        );
    }

    #[test]
    fn q4_branching_is_strictly_stronger_than_linear_orders() {
        // R = {(x,x',y,y') | y' = x or x' = y} on a 3-element domain: both
        // linear prefix orders hold but no pair of selector functions does.
        let n = 3;
        let mut relation = BTreeSet::new();
        for x in 0..n {
            for xp in 0..n {
                for y in 0..n {
                    for yp in 0..n {
                        if yp == x || xp == y {
                            relation.insert(vec![x, xp, y, yp]);
                        }
                    }
                }
            }
        }
        let m = Model::new(n);
        assert!(!eval_henkin_q4(&m, &relation).unwrap());
        // Linear readings over the same matrix, as formulas.
        let sig = Signature::new(&[], &[("R", 4)]);
        let l1 = parse_formula_with(&sig, "forall x. exists x'. forall y. exists y'. R(x,x',y,y')")
            .unwrap();
        let l2 = parse_formula_with(&sig, "forall y. exists y'. forall x. exists x'. R(x,x',y,y')")
            .unwrap();
        let refs: Vec<Vec<usize>> = relation.iter().cloned().collect();
        let slices: Vec<&[usize]> = refs.iter().map(Vec::as_slice).collect();
        let mr = Model::new(n).with_pred("R", 4, &slices);
        assert!(eval(&l1, &mr, &Assignment::new()).unwrap());
        assert!(eval(&l2, &mr, &Assignment::new()).unwrap());
        // At size 2 the same relation is branching-satisfiable.
        let mut rel2 = BTreeSet::new();
        for x in 0..2 {
            for xp in 0..2 {
                for y in 0..2 {
                    for yp in 0..2 {
                        if yp == x || xp == y {
                            rel2.insert(vec![x, xp, y, yp]);
                        }
                    }
                }
            }
        }
        assert!(eval_henkin_q4(&Model::new(2), &rel2).unwrap());
    }

    #[test]
    fn model_text_round_trip() {
        let m = Model::new(3)
            .with_const("a", 0)
            .with_pred("T", 1, &[&[0], &[1]])
            .with_pred("K", 2, &[&[0, 1], &[2, 2]])
            .with_pred("A", 0, &[&[]]);
        let text = m.to_string();
        let parsed = parse_model(&text).unwrap();
        assert_eq!(m, parsed);
        let spec_style = "domain 3\npred K/2 = {(0,1),(2,2)}\nconst a = 0\n";
        let p2 = parse_model(spec_style).unwrap();
        assert_eq!(p2.domain_size, 3);
        assert_eq!(p2.pred("K", 2).unwrap().len(), 2);
        assert_eq!(p2.constant("a"), Some(0));
    }

    #[test]
    fn extension_of_abstraction() {
        let abs = PredAbstraction::new(
            vec!["u"],
            Formula::atom(pconst("P", 1), vec![var("u")]),
        );
        let m = Model::new(3).with_pred("P", 1, &[&[1], &[2]]);
        let ext = extension_of(&abs, &m, &Assignment::new()).unwrap();
        assert_eq!(ext, BTreeSet::from([vec![1], vec![2]]));
    }
}
