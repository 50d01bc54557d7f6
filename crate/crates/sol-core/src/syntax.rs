//! Abstract syntax for second-order formulas without function symbols:
//! terms, predicate references, formulas, predicate abstractions, binding,
//! alpha-equivalence and capture-avoiding substitution.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// A first-order term: an individual variable or an individual constant.
/// The language has no function symbols, so this is the whole story.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn name(&self) -> &str {
        match self {
            Term::Var(n) | Term::Const(n) => n,
        }
    }
}

/// Shorthand for an individual variable term.
pub fn var(name: &str) -> Term {
    Term::Var(name.to_owned())
}

/// Shorthand for an individual constant term.
pub fn cst(name: &str) -> Term {
    Term::Const(name.to_owned())
}

/// Head of an atomic formula: a predicate constant or a predicate variable,
/// each carrying its arity. Two predicate variables with the same name but
/// different arities are distinct variables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PredRef {
    Const { name: String, arity: usize },
    Var { name: String, arity: usize },
}

impl PredRef {
    pub fn name(&self) -> &str {
        match self {
            PredRef::Const { name, .. } | PredRef::Var { name, .. } => name,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            PredRef::Const { arity, .. } | PredRef::Var { arity, .. } => *arity,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, PredRef::Var { .. })
    }
}

/// Predicate constant reference.
pub fn pconst(name: &str, arity: usize) -> PredRef {
    PredRef::Const { name: name.to_owned(), arity }
}

/// Predicate variable reference.
pub fn pvar(name: &str, arity: usize) -> PredRef {
    PredRef::Var { name: name.to_owned(), arity }
}

/// Second-order formulas. `Iff` is not a constructor: `A <-> B` always
/// denotes `(A -> B) & (B -> A)` (see [`Formula::iff`]).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom { pred: PredRef, args: Vec<Term> },
    Bot,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    ForallInd { var: String, body: Box<Formula> },
    ExistsInd { var: String, body: Box<Formula> },
    ForallPred { var: String, arity: usize, body: Box<Formula> },
    ExistsPred { var: String, arity: usize, body: Box<Formula> },
}

impl Formula {
    pub fn atom(pred: PredRef, args: Vec<Term>) -> Formula {
        debug_assert_eq!(pred.arity(), args.len(), "atom arity mismatch");
        Formula::Atom { pred, args }
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    /// Left-associated conjunction of one or more formulas.
    pub fn and_all(fs: Vec<Formula>) -> Formula {
        let mut it = fs.into_iter();
        let first = it.next().expect("and_all of empty list");
        it.fold(first, Formula::and)
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// `A <-> B` as the conjunction of the two implications.
    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::and(
            Formula::implies(a.clone(), b.clone()),
            Formula::implies(b, a),
        )
    }

    pub fn forall_ind(var: &str, body: Formula) -> Formula {
        Formula::ForallInd { var: var.to_owned(), body: Box::new(body) }
    }

    pub fn exists_ind(var: &str, body: Formula) -> Formula {
        Formula::ExistsInd { var: var.to_owned(), body: Box::new(body) }
    }

    pub fn forall_pred(var: &str, arity: usize, body: Formula) -> Formula {
        Formula::ForallPred { var: var.to_owned(), arity, body: Box::new(body) }
    }

    pub fn exists_pred(var: &str, arity: usize, body: Formula) -> Formula {
        Formula::ExistsPred { var: var.to_owned(), arity, body: Box::new(body) }
    }
}

/// A formula with `n` distinguished individual parameters; the payload of
/// second-order quantifier rules. Arity 0 (a closed-over proposition) is
/// allowed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PredAbstraction {
    params: Vec<String>,
    body: Formula,
}

impl PredAbstraction {
    /// Panics if the parameters are not pairwise distinct.
    pub fn new(params: Vec<&str>, body: Formula) -> PredAbstraction {
        let params: Vec<String> = params.into_iter().map(str::to_owned).collect();
        let set: BTreeSet<&String> = params.iter().collect();
        assert_eq!(set.len(), params.len(), "abstraction parameters must be distinct");
        PredAbstraction { params, body }
    }

    /// The abstraction `lam (x1..xn). X(x1..xn)` for a predicate variable.
    pub fn of_pred_var(name: &str, arity: usize) -> PredAbstraction {
        let params: Vec<String> = (0..arity).map(|i| format!("u{i}")).collect();
        let args = params.iter().map(|p| Term::Var(p.clone())).collect();
        PredAbstraction {
            params: params.clone(),
            body: Formula::Atom { pred: pvar(name, arity), args },
        }
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn body(&self) -> &Formula {
        &self.body
    }

    /// Applies the abstraction to argument terms: the parameters are replaced
    /// simultaneously, renaming bound variables of the body as needed.
    ///
    /// Panics if the argument count differs from the arity; callers check
    /// arity at their own boundaries.
    pub fn apply(&self, args: &[Term]) -> Formula {
        assert_eq!(args.len(), self.params.len(), "abstraction applied at wrong arity");
        let map: Vec<(String, Term)> = self
            .params
            .iter()
            .cloned()
            .zip(args.iter().cloned())
            .collect();
        subst_ind_simult(&self.body, &map)
    }

    /// Free individual variables of the body that are not parameters.
    pub fn free_ind_vars(&self) -> BTreeSet<String> {
        let mut fv = free_ind_vars(&self.body);
        for p in &self.params {
            fv.remove(p);
        }
        fv
    }

    pub fn free_pred_vars(&self) -> BTreeSet<(String, usize)> {
        free_pred_vars(&self.body)
    }
}

/// A formula with one distinguished arity-1 predicate-variable parameter:
/// a property of unary predicates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SecondOrderAbstraction {
    param: String,
    body: Formula,
}

impl SecondOrderAbstraction {
    pub fn new(param: &str, body: Formula) -> SecondOrderAbstraction {
        SecondOrderAbstraction { param: param.to_owned(), body }
    }

    pub fn param(&self) -> &str {
        &self.param
    }

    pub fn body(&self) -> &Formula {
        &self.body
    }

    /// Instantiates the predicate parameter with an arity-1 abstraction.
    pub fn apply(&self, abs: &PredAbstraction) -> Result<Formula, SubstError> {
        subst_pred(&self.body, &self.param, 1, abs)
    }
}

/// A finite stock of individual constants and predicate constants; used by
/// the parser to classify identifiers and by the model enumerator.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub consts: Vec<String>,
    pub preds: Vec<(String, usize)>,
}

impl Signature {
    pub fn new(consts: &[&str], preds: &[(&str, usize)]) -> Signature {
        Signature {
            consts: consts.iter().map(|c| (*c).to_owned()).collect(),
            preds: preds.iter().map(|(n, a)| ((*n).to_owned(), *a)).collect(),
        }
    }

    pub fn has_const(&self, name: &str) -> bool {
        self.consts.iter().any(|c| c == name)
    }

    pub fn pred_arity(&self, name: &str) -> Option<usize> {
        self.preds.iter().find(|(n, _)| n == name).map(|(_, a)| *a)
    }

    /// The symbols actually occurring in a formula, in first-occurrence order.
    pub fn of_formula(f: &Formula) -> Signature {
        let mut sig = Signature::default();
        collect_symbols(f, &mut sig);
        sig
    }

    pub fn merge(&mut self, other: &Signature) {
        for c in &other.consts {
            if !self.has_const(c) {
                self.consts.push(c.clone());
            }
        }
        for (n, a) in &other.preds {
            if !self.preds.iter().any(|(m, b)| m == n && b == a) {
                self.preds.push((n.clone(), *a));
            }
        }
    }
}

fn collect_symbols(f: &Formula, sig: &mut Signature) {
    match f {
        Formula::Atom { pred, args } => {
            if let PredRef::Const { name, arity } = pred {
                if !sig.preds.iter().any(|(n, a)| n == name && a == arity) {
                    sig.preds.push((name.clone(), *arity));
                }
            }
            for t in args {
                if let Term::Const(c) = t {
                    if !sig.has_const(c) {
                        sig.consts.push(c.clone());
                    }
                }
            }
        }
        Formula::Bot => {}
        Formula::Not(a) => collect_symbols(a, sig),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            collect_symbols(a, sig);
            collect_symbols(b, sig);
        }
        Formula::ForallInd { body, .. }
        | Formula::ExistsInd { body, .. }
        | Formula::ForallPred { body, .. }
        | Formula::ExistsPred { body, .. } => collect_symbols(body, sig),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubstError {
    #[error("arity mismatch: substituting {var}:{expected} with an abstraction of arity {found}")]
    ArityMismatch { var: String, expected: usize, found: usize },
}

/// Picks a name based on `base` that is not in `avoid`: `base`, then `base1`,
/// `base2`, ... in order.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    if !avoid.contains(base) {
        return base.to_owned();
    }
    for k in 1usize.. {
        let cand = format!("{base}{k}");
        if !avoid.contains(&cand) {
            return cand;
        }
    }
    unreachable!()
}

/// Individual variables with at least one free occurrence.
pub fn free_ind_vars(f: &Formula) -> BTreeSet<String> {
    fn go(f: &Formula, bound: &mut Vec<String>, acc: &mut BTreeSet<String>) {
        match f {
            Formula::Atom { args, .. } => {
                for t in args {
                    if let Term::Var(v) = t {
                        if !bound.iter().any(|b| b == v) {
                            acc.insert(v.clone());
                        }
                    }
                }
            }
            Formula::Bot => {}
            Formula::Not(a) => go(a, bound, acc),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                go(a, bound, acc);
                go(b, bound, acc);
            }
            Formula::ForallInd { var, body } | Formula::ExistsInd { var, body } => {
                bound.push(var.clone());
                go(body, bound, acc);
                bound.pop();
            }
            Formula::ForallPred { body, .. } | Formula::ExistsPred { body, .. } => {
                go(body, bound, acc)
            }
        }
    }
    let mut acc = BTreeSet::new();
    go(f, &mut Vec::new(), &mut acc);
    acc
}

/// Predicate variables with at least one free occurrence, with arity.
pub fn free_pred_vars(f: &Formula) -> BTreeSet<(String, usize)> {
    fn go(f: &Formula, bound: &mut Vec<(String, usize)>, acc: &mut BTreeSet<(String, usize)>) {
        match f {
            Formula::Atom { pred, .. } => {
                if let PredRef::Var { name, arity } = pred {
                    if !bound.iter().any(|(n, a)| n == name && a == arity) {
                        acc.insert((name.clone(), *arity));
                    }
                }
            }
            Formula::Bot => {}
            Formula::Not(a) => go(a, bound, acc),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                go(a, bound, acc);
                go(b, bound, acc);
            }
            Formula::ForallInd { body, .. } | Formula::ExistsInd { body, .. } => {
                go(body, bound, acc)
            }
            Formula::ForallPred { var, arity, body } | Formula::ExistsPred { var, arity, body } => {
                bound.push((var.clone(), *arity));
                go(body, bound, acc);
                bound.pop();
            }
        }
    }
    let mut acc = BTreeSet::new();
    go(f, &mut Vec::new(), &mut acc);
    acc
}

/// All individual variable names occurring in `f`, bound or free. Used to
/// steer fresh-name choices.
pub fn all_ind_names(f: &Formula) -> BTreeSet<String> {
    fn go(f: &Formula, acc: &mut BTreeSet<String>) {
        match f {
            Formula::Atom { args, .. } => {
                for t in args {
                    if let Term::Var(v) = t {
                        acc.insert(v.clone());
                    }
                }
            }
            Formula::Bot => {}
            Formula::Not(a) => go(a, acc),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                go(a, acc);
                go(b, acc);
            }
            Formula::ForallInd { var, body } | Formula::ExistsInd { var, body } => {
                acc.insert(var.clone());
                go(body, acc);
            }
            Formula::ForallPred { body, .. } | Formula::ExistsPred { body, .. } => go(body, acc),
        }
    }
    let mut acc = BTreeSet::new();
    go(f, &mut acc);
    acc
}

/// All predicate variable names occurring in `f` (any arity), bound or free.
pub fn all_pred_names(f: &Formula) -> BTreeSet<String> {
    fn go(f: &Formula, acc: &mut BTreeSet<String>) {
        match f {
            Formula::Atom { pred, .. } => {
                if let PredRef::Var { name, .. } = pred {
                    acc.insert(name.clone());
                }
            }
            Formula::Bot => {}
            Formula::Not(a) => go(a, acc),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                go(a, acc);
                go(b, acc);
            }
            Formula::ForallInd { body, .. } | Formula::ExistsInd { body, .. } => go(body, acc),
            Formula::ForallPred { var, body, .. } | Formula::ExistsPred { var, body, .. } => {
                acc.insert(var.clone());
                go(body, acc);
            }
        }
    }
    let mut acc = BTreeSet::new();
    go(f, &mut acc);
    acc
}

/// True iff the formulas differ only in the names of bound individual and
/// predicate variables.
pub fn alpha_eq(f: &Formula, g: &Formula) -> bool {
    // Environments pair up binder names; lookup walks innermost-first and the
    // positions must agree on both sides.
    fn ind_eq(
        a: &Term,
        b: &Term,
        env_l: &[String],
        env_r: &[String],
    ) -> bool {
        match (a, b) {
            (Term::Const(x), Term::Const(y)) => x == y,
            (Term::Var(x), Term::Var(y)) => {
                let pl = env_l.iter().rposition(|n| n == x);
                let pr = env_r.iter().rposition(|n| n == y);
                match (pl, pr) {
                    (Some(i), Some(j)) => i == j,
                    (None, None) => x == y,
                    _ => false,
                }
            }
            _ => false,
        }
    }

    fn pred_eq(
        a: &PredRef,
        b: &PredRef,
        env_l: &[(String, usize)],
        env_r: &[(String, usize)],
    ) -> bool {
        match (a, b) {
            (
                PredRef::Const { name: x, arity: n },
                PredRef::Const { name: y, arity: m },
            ) => x == y && n == m,
            (PredRef::Var { name: x, arity: n }, PredRef::Var { name: y, arity: m }) => {
                if n != m {
                    return false;
                }
                let pl = env_l.iter().rposition(|(v, a)| v == x && a == n);
                let pr = env_r.iter().rposition(|(v, a)| v == y && a == m);
                match (pl, pr) {
                    (Some(i), Some(j)) => i == j,
                    (None, None) => x == y,
                    _ => false,
                }
            }
            _ => false,
        }
    }

    fn go(
        f: &Formula,
        g: &Formula,
        il: &mut Vec<String>,
        ir: &mut Vec<String>,
        pl: &mut Vec<(String, usize)>,
        pr: &mut Vec<(String, usize)>,
    ) -> bool {
        match (f, g) {
            (Formula::Atom { pred: p, args: xs }, Formula::Atom { pred: q, args: ys }) => {
                pred_eq(p, q, pl, pr)
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(a, b)| ind_eq(a, b, il, ir))
            }
            (Formula::Bot, Formula::Bot) => true,
            (Formula::Not(a), Formula::Not(b)) => go(a, b, il, ir, pl, pr),
            (Formula::And(a1, a2), Formula::And(b1, b2))
            | (Formula::Or(a1, a2), Formula::Or(b1, b2))
            | (Formula::Implies(a1, a2), Formula::Implies(b1, b2)) => {
                go(a1, b1, il, ir, pl, pr) && go(a2, b2, il, ir, pl, pr)
            }
            (
                Formula::ForallInd { var: x, body: a },
                Formula::ForallInd { var: y, body: b },
            )
            | (
                Formula::ExistsInd { var: x, body: a },
                Formula::ExistsInd { var: y, body: b },
            ) => {
                il.push(x.clone());
                ir.push(y.clone());
                let r = go(a, b, il, ir, pl, pr);
                il.pop();
                ir.pop();
                r
            }
            (
                Formula::ForallPred { var: x, arity: n, body: a },
                Formula::ForallPred { var: y, arity: m, body: b },
            )
            | (
                Formula::ExistsPred { var: x, arity: n, body: a },
                Formula::ExistsPred { var: y, arity: m, body: b },
            ) => {
                if n != m {
                    return false;
                }
                pl.push((x.clone(), *n));
                pr.push((y.clone(), *m));
                let r = go(a, b, il, ir, pl, pr);
                pl.pop();
                pr.pop();
                r
            }
            _ => false,
        }
    }

    go(
        f,
        g,
        &mut Vec::new(),
        &mut Vec::new(),
        &mut Vec::new(),
        &mut Vec::new(),
    )
}

/// Replaces every free occurrence of the individual variable `x` by the term
/// `t`, renaming bound variables so nothing in `t` is captured.
pub fn subst_term(f: &Formula, x: &str, t: &Term) -> Formula {
    subst_ind_simult(f, &[(x.to_owned(), t.clone())])
}

/// Simultaneous capture-avoiding substitution of individual variables.
pub fn subst_ind_simult(f: &Formula, map: &[(String, Term)]) -> Formula {
    let live: Vec<(String, Term)> = {
        let fv = free_ind_vars(f);
        map.iter()
            .filter(|(x, t)| fv.contains(x) && Term::Var(x.clone()) != *t)
            .cloned()
            .collect()
    };
    if live.is_empty() {
        return f.clone();
    }
    match f {
        Formula::Atom { pred, args } => {
            let args = args
                .iter()
                .map(|a| match a {
                    Term::Var(v) => live
                        .iter()
                        .find(|(x, _)| x == v)
                        .map(|(_, t)| t.clone())
                        .unwrap_or_else(|| a.clone()),
                    Term::Const(_) => a.clone(),
                })
                .collect();
            Formula::Atom { pred: pred.clone(), args }
        }
        Formula::Bot => Formula::Bot,
        Formula::Not(a) => Formula::not(subst_ind_simult(a, &live)),
        Formula::And(a, b) => {
            Formula::and(subst_ind_simult(a, &live), subst_ind_simult(b, &live))
        }
        Formula::Or(a, b) => Formula::or(subst_ind_simult(a, &live), subst_ind_simult(b, &live)),
        Formula::Implies(a, b) => {
            Formula::implies(subst_ind_simult(a, &live), subst_ind_simult(b, &live))
        }
        Formula::ForallInd { var, body } | Formula::ExistsInd { var, body } => {
            let inner: Vec<(String, Term)> =
                live.iter().filter(|(x, _)| x != var).cloned().collect();
            let (var2, body2) = if inner
                .iter()
                .any(|(_, t)| matches!(t, Term::Var(v) if v == var))
            {
                // The binder would capture an incoming variable; rename it.
                let mut avoid = all_ind_names(body);
                for (x, t) in &inner {
                    avoid.insert(x.clone());
                    avoid.insert(t.name().to_owned());
                }
                let fresh = fresh_name(var, &avoid);
                let renamed = subst_ind_simult(body, &[(var.clone(), Term::Var(fresh.clone()))]);
                (fresh, subst_ind_simult(&renamed, &inner))
            } else {
                (var.clone(), subst_ind_simult(body, &inner))
            };
            match f {
                Formula::ForallInd { .. } => Formula::forall_ind(&var2, body2),
                _ => Formula::exists_ind(&var2, body2),
            }
        }
        Formula::ForallPred { var, arity, body } => {
            Formula::forall_pred(var, *arity, subst_ind_simult(body, &live))
        }
        Formula::ExistsPred { var, arity, body } => {
            Formula::exists_pred(var, *arity, subst_ind_simult(body, &live))
        }
    }
}

/// Replaces every free occurrence `X(t1..tn)` of the predicate variable
/// `X:n` by `abs` applied to that occurrence's own argument terms. Binders
/// in `f` are renamed so no free variable of the abstraction body is
/// captured; the replacement itself is not re-scanned.
pub fn subst_pred(
    f: &Formula,
    x: &str,
    arity: usize,
    abs: &PredAbstraction,
) -> Result<Formula, SubstError> {
    if abs.arity() != arity {
        return Err(SubstError::ArityMismatch {
            var: x.to_owned(),
            expected: arity,
            found: abs.arity(),
        });
    }
    let avoid_ind = abs.free_ind_vars();
    let avoid_pred = abs.free_pred_vars();
    Ok(go_subst_pred(f, x, arity, abs, &avoid_ind, &avoid_pred))
}

fn go_subst_pred(
    f: &Formula,
    x: &str,
    arity: usize,
    abs: &PredAbstraction,
    avoid_ind: &BTreeSet<String>,
    avoid_pred: &BTreeSet<(String, usize)>,
) -> Formula {
    if !free_pred_vars(f).contains(&(x.to_owned(), arity)) {
        return f.clone();
    }
    match f {
        Formula::Atom { pred, args } => match pred {
            PredRef::Var { name, arity: n } if name == x && *n == arity => abs.apply(args),
            _ => f.clone(),
        },
        Formula::Bot => Formula::Bot,
        Formula::Not(a) => Formula::not(go_subst_pred(a, x, arity, abs, avoid_ind, avoid_pred)),
        Formula::And(a, b) => Formula::and(
            go_subst_pred(a, x, arity, abs, avoid_ind, avoid_pred),
            go_subst_pred(b, x, arity, abs, avoid_ind, avoid_pred),
        ),
        Formula::Or(a, b) => Formula::or(
            go_subst_pred(a, x, arity, abs, avoid_ind, avoid_pred),
            go_subst_pred(b, x, arity, abs, avoid_ind, avoid_pred),
        ),
        Formula::Implies(a, b) => Formula::implies(
            go_subst_pred(a, x, arity, abs, avoid_ind, avoid_pred),
            go_subst_pred(b, x, arity, abs, avoid_ind, avoid_pred),
        ),
        Formula::ForallInd { var, body } | Formula::ExistsInd { var, body } => {
            let (var2, body2) = if avoid_ind.contains(var) {
                // An originally free variable of the abstraction body would
                // become bound here.
                let mut avoid = all_ind_names(body);
                avoid.extend(avoid_ind.iter().cloned());
                let fresh = fresh_name(var, &avoid);
                let renamed = subst_ind_simult(body, &[(var.clone(), Term::Var(fresh.clone()))]);
                (fresh, renamed)
            } else {
                (var.clone(), (**body).clone())
            };
            let body3 = go_subst_pred(&body2, x, arity, abs, avoid_ind, avoid_pred);
            match f {
                Formula::ForallInd { .. } => Formula::forall_ind(&var2, body3),
                _ => Formula::exists_ind(&var2, body3),
            }
        }
        Formula::ForallPred { var, arity: n, body } | Formula::ExistsPred { var, arity: n, body } => {
            if var == x && *n == arity {
                // Shadowed: occurrences below are bound by this binder.
                return f.clone();
            }
            let (var2, body2) = if avoid_pred.contains(&(var.clone(), *n)) {
                let mut avoid = all_pred_names(body);
                avoid.extend(avoid_pred.iter().map(|(name, _)| name.clone()));
                avoid.insert(x.to_owned());
                let fresh = fresh_name(var, &avoid);
                let renamed =
                    go_subst_pred(body, var, *n, &PredAbstraction::of_pred_var(&fresh, *n), &BTreeSet::new(), &BTreeSet::new());
                (fresh, renamed)
            } else {
                (var.clone(), (**body).clone())
            };
            let body3 = go_subst_pred(&body2, x, arity, abs, avoid_ind, avoid_pred);
            match f {
                Formula::ForallPred { .. } => Formula::forall_pred(&var2, *n, body3),
                _ => Formula::exists_pred(&var2, *n, body3),
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl fmt::Display for PredRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1(t: Term) -> Formula {
        Formula::atom(pconst("P", 1), vec![t])
    }

    #[test]
    fn free_ind_vars_basics() {
        assert_eq!(
            free_ind_vars(&p1(var("x"))),
            BTreeSet::from(["x".to_owned()])
        );
        assert!(free_ind_vars(&Formula::forall_ind("x", p1(var("x")))).is_empty());
        let f = Formula::implies(
            p1(var("x")),
            Formula::exists_ind("x", Formula::atom(pconst("Q", 1), vec![var("x")])),
        );
        assert_eq!(free_ind_vars(&f), BTreeSet::from(["x".to_owned()]));
    }

    #[test]
    fn free_pred_vars_basics() {
        let xv = Formula::atom(pvar("X", 1), vec![var("x")]);
        assert_eq!(
            free_pred_vars(&xv),
            BTreeSet::from([("X".to_owned(), 1)])
        );
        assert!(free_pred_vars(&Formula::forall_pred("X", 1, xv.clone())).is_empty());
        let two = Formula::and(
            Formula::atom(pvar("X", 2), vec![var("x"), var("y")]),
            Formula::exists_pred(
                "X",
                2,
                Formula::atom(pvar("X", 2), vec![var("x"), var("y")]),
            ),
        );
        assert_eq!(free_pred_vars(&two), BTreeSet::from([("X".to_owned(), 2)]));
    }

    #[test]
    fn alpha_eq_basics() {
        let fx = Formula::forall_ind("x", p1(var("x")));
        let fy = Formula::forall_ind("y", p1(var("y")));
        assert!(alpha_eq(&fx, &fy));
        let gq = Formula::forall_ind("x", Formula::atom(pconst("Q", 1), vec![var("x")]));
        assert!(!alpha_eq(&fx, &gq));
        let ex = Formula::exists_pred("X", 1, Formula::atom(pvar("X", 1), vec![cst("a")]));
        let ey = Formula::exists_pred("Y", 1, Formula::atom(pvar("Y", 1), vec![cst("a")]));
        assert!(alpha_eq(&ex, &ey));
    }

    #[test]
    fn alpha_eq_rejects_mixed_binding() {
        // forall x. forall y. P(x)  vs  forall y. forall y. P(y)
        let l = Formula::forall_ind("x", Formula::forall_ind("y", p1(var("x"))));
        let r = Formula::forall_ind("y", Formula::forall_ind("y", p1(var("y"))));
        assert!(!alpha_eq(&l, &r));
    }

    #[test]
    fn subst_term_leaves_bound_occurrences() {
        // P(x) & forall x. Q(x), x := a
        let f = Formula::and(
            p1(var("x")),
            Formula::forall_ind("x", Formula::atom(pconst("Q", 1), vec![var("x")])),
        );
        let out = subst_term(&f, "x", &cst("a"));
        let expected = Formula::and(
            p1(cst("a")),
            Formula::forall_ind("x", Formula::atom(pconst("Q", 1), vec![var("x")])),
        );
        assert_eq!(out, expected);
    }

    #[test]
    fn subst_term_renames_on_capture() {
        // exists y. R(x,y), x := y  ~~>  exists y1. R(y, y1)
        let f = Formula::exists_ind("y", Formula::atom(pconst("R", 2), vec![var("x"), var("y")]));
        let out = subst_term(&f, "x", &var("y"));
        let expected =
            Formula::exists_ind("y1", Formula::atom(pconst("R", 2), vec![var("y"), var("y1")]));
        assert!(alpha_eq(&out, &expected));
        assert_eq!(
            free_ind_vars(&out),
            BTreeSet::from(["y".to_owned()])
        );
    }

    #[test]
    fn subst_term_noop_when_not_free() {
        let f = p1(var("z"));
        assert_eq!(subst_term(&f, "x", &cst("a")), f);
    }

    #[test]
    fn subst_pred_worked_example() {
        // X(z,a) & X(a,b) with X := lam (x,y). P(x,y) & Q(y,a)
        // ~~> (P(z,a) & Q(a,a)) & (P(a,b) & Q(b,a))
        let f = Formula::and(
            Formula::atom(pvar("X", 2), vec![var("z"), cst("a")]),
            Formula::atom(pvar("X", 2), vec![cst("a"), cst("b")]),
        );
        let abs = PredAbstraction::new(
            vec!["x", "y"],
            Formula::and(
                Formula::atom(pconst("P", 2), vec![var("x"), var("y")]),
                Formula::atom(pconst("Q", 2), vec![var("y"), cst("a")]),
            ),
        );
        let out = subst_pred(&f, "X", 2, &abs).unwrap();
        let expected = Formula::and(
            Formula::and(
                Formula::atom(pconst("P", 2), vec![var("z"), cst("a")]),
                Formula::atom(pconst("Q", 2), vec![cst("a"), cst("a")]),
            ),
            Formula::and(
                Formula::atom(pconst("P", 2), vec![cst("a"), cst("b")]),
                Formula::atom(pconst("Q", 2), vec![cst("b"), cst("a")]),
            ),
        );
        assert_eq!(out, expected);
    }

    #[test]
    fn subst_pred_no_occurrence() {
        let f = p1(cst("a"));
        let abs = PredAbstraction::new(vec!["x"], p1(var("x")));
        assert_eq!(subst_pred(&f, "X", 1, &abs).unwrap(), f);
    }

    #[test]
    fn subst_pred_renames_captured_binder() {
        // forall y. X(y) with X := lam x. R(x,y)  ~~>  forall y1. R(y1, y)
        let f = Formula::forall_ind("y", Formula::atom(pvar("X", 1), vec![var("y")]));
        let abs = PredAbstraction::new(
            vec!["x"],
            Formula::atom(pconst("R", 2), vec![var("x"), var("y")]),
        );
        let out = subst_pred(&f, "X", 1, &abs).unwrap();
        let expected =
            Formula::forall_ind("y1", Formula::atom(pconst("R", 2), vec![var("y1"), var("y")]));
        assert!(alpha_eq(&out, &expected));
        assert_eq!(free_ind_vars(&out), BTreeSet::from(["y".to_owned()]));
    }

    #[test]
    fn subst_pred_renames_captured_pred_binder() {
        // forall2 Y:1. (X(a) & Y(a)) with X := lam u. Y(u)
        let f = Formula::forall_pred(
            "Y",
            1,
            Formula::and(
                Formula::atom(pvar("X", 1), vec![cst("a")]),
                Formula::atom(pvar("Y", 1), vec![cst("a")]),
            ),
        );
        let abs = PredAbstraction::new(vec!["u"], Formula::atom(pvar("Y", 1), vec![var("u")]));
        let out = subst_pred(&f, "X", 1, &abs).unwrap();
        // The bound Y must have been renamed apart from the free Y.
        assert!(free_pred_vars(&out).contains(&("Y".to_owned(), 1)));
        let expected = Formula::forall_pred(
            "Y1",
            1,
            Formula::and(
                Formula::atom(pvar("Y", 1), vec![cst("a")]),
                Formula::atom(pvar("Y1", 1), vec![cst("a")]),
            ),
        );
        assert!(alpha_eq(&out, &expected));
    }

    #[test]
    fn subst_pred_identity_abstraction() {
        let f = Formula::forall_ind(
            "y",
            Formula::implies(
                Formula::atom(pvar("X", 2), vec![var("y"), cst("a")]),
                Formula::Bot,
            ),
        );
        let id = PredAbstraction::of_pred_var("X", 2);
        let out = subst_pred(&f, "X", 2, &id).unwrap();
        assert!(alpha_eq(&out, &f));
    }

    #[test]
    fn subst_pred_wrong_arity_is_an_error() {
        let f = Formula::atom(pvar("X", 2), vec![var("x"), var("y")]);
        let abs = PredAbstraction::new(vec!["x"], p1(var("x")));
        assert!(matches!(
            subst_pred(&f, "X", 2, &abs),
            Err(SubstError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn subst_pred_shadowed_binder_blocks() {
        let f = Formula::exists_pred("X", 1, Formula::atom(pvar("X", 1), vec![cst("a")]));
        let abs = PredAbstraction::new(vec!["x"], Formula::Bot);
        assert_eq!(subst_pred(&f, "X", 1, &abs).unwrap(), f);
    }

    #[test]
    fn abstraction_apply_is_simultaneous() {
        // lam (x,y). R(x,y) applied to (y,x) must swap, not chain.
        let abs = PredAbstraction::new(
            vec!["x", "y"],
            Formula::atom(pconst("R", 2), vec![var("x"), var("y")]),
        );
        let out = abs.apply(&[var("y"), var("x")]);
        assert_eq!(
            out,
            Formula::atom(pconst("R", 2), vec![var("y"), var("x")])
        );
    }

    #[test]
    fn fresh_name_counts_up() {
        let avoid = BTreeSet::from(["x".to_owned(), "x1".to_owned()]);
        assert_eq!(fresh_name("x", &avoid), "x2");
        assert_eq!(fresh_name("y", &avoid), "y");
    }

    #[test]
    fn free_vars_after_subst_are_contained() {
        let f = Formula::and(
            p1(var("x")),
            Formula::exists_ind("z", Formula::atom(pconst("R", 2), vec![var("z"), var("x")])),
        );
        let out = subst_term(&f, "x", &var("w"));
        let fv = free_ind_vars(&out);
        assert!(fv.contains("w") && !fv.contains("x"));
    }
}
