//! The proof checker: validates natural deduction trees for classical
//! second-order logic, including direct introduction/elimination rules for
//! the simplest branching quantifier, and elaborates the latter into plain
//! second-order steps.
//!
//! `docs/rule-catalogue.md` is the normative description of every rule tag,
//! its payload, premise shapes and side conditions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::constructions::{build_psi, expand_henkin, HenkinSignature, HenkinVariant};
use crate::syntax::{
    alpha_eq, free_ind_vars, free_pred_vars, fresh_name, pvar, subst_pred, subst_term, Formula,
    PredAbstraction, PredRef, Term,
};

/// A finite set of labeled hypotheses plus one conclusion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Judgment {
    pub hypotheses: BTreeMap<String, Formula>,
    pub conclusion: Formula,
}

impl Judgment {
    pub fn new(hypotheses: Vec<(&str, Formula)>, conclusion: Formula) -> Judgment {
        Judgment {
            hypotheses: hypotheses
                .into_iter()
                .map(|(l, f)| (l.to_owned(), f))
                .collect(),
            conclusion,
        }
    }

    pub fn theorem(conclusion: Formula) -> Judgment {
        Judgment { hypotheses: BTreeMap::new(), conclusion }
    }

    /// Same labels, alpha-equal formulas label by label, alpha-equal
    /// conclusion.
    pub fn alpha_same(&self, other: &Judgment) -> bool {
        if !alpha_eq(&self.conclusion, &other.conclusion) {
            return false;
        }
        if self.hypotheses.len() != other.hypotheses.len() {
            return false;
        }
        self.hypotheses
            .iter()
            .all(|(l, f)| other.hypotheses.get(l).is_some_and(|g| alpha_eq(f, g)))
    }
}

impl fmt::Display for Judgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (l, h)) in self.hypotheses.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{l}: {}", crate::parse::pretty_formula(h))?;
        }
        if !self.hypotheses.is_empty() {
            write!(f, " ")?;
        }
        write!(f, "|- {}", crate::parse::pretty_formula(&self.conclusion))
    }
}

/// Rule applications. Each child proof is listed in the order used by error
/// locations; payloads hold witnesses, eigenvariables and discharge labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Proof {
    /// Cites a hypothesis. The formula may be omitted by the surface syntax;
    /// checking a formula-less leaf fails.
    Hyp { label: String, formula: Option<Formula> },
    AndI(Box<Proof>, Box<Proof>),
    AndEL(Box<Proof>),
    AndER(Box<Proof>),
    /// From the left disjunct; the payload is the right disjunct.
    OrIL { premise: Box<Proof>, right: Formula },
    /// From the right disjunct; the payload is the left disjunct.
    OrIR { premise: Box<Proof>, left: Formula },
    OrE {
        major: Box<Proof>,
        left_label: String,
        left_branch: Box<Proof>,
        right_label: String,
        right_branch: Box<Proof>,
    },
    ImpI { label: String, antecedent: Option<Formula>, body: Box<Proof> },
    ImpE(Box<Proof>, Box<Proof>),
    NotI { label: String, negated: Option<Formula>, body: Box<Proof> },
    /// From `A` and `~A`, in that premise order, conclude `bot`.
    NotE(Box<Proof>, Box<Proof>),
    BotE { premise: Box<Proof>, conclusion: Formula },
    /// From `bot` under the hypothesis `~A`, conclude `A`, discharging it.
    Raa { label: String, conclusion: Option<Formula>, body: Box<Proof> },
    ForallIndI { var: String, body: Box<Proof> },
    ForallIndE { premise: Box<Proof>, witness: Term },
    ExistsIndI { premise: Box<Proof>, witness: Term, target: Formula },
    ExistsIndE { major: Box<Proof>, eigen: String, label: String, body: Box<Proof> },
    ForallPredI { var: String, arity: usize, body: Box<Proof> },
    ForallPredE { premise: Box<Proof>, abs: PredAbstraction },
    ExistsPredI { premise: Box<Proof>, abs: PredAbstraction, target: Formula },
    ExistsPredE { major: Box<Proof>, eigen: String, label: String, body: Box<Proof> },
    HenkinI {
        prem_team: Box<Proof>,
        prem_board: Box<Proof>,
        prem_matrix: Box<Proof>,
        abs_f: PredAbstraction,
        abs_g: PredAbstraction,
    },
    HenkinE {
        major: Box<Proof>,
        eigen_f: String,
        eigen_g: String,
        label: String,
        minor: Box<Proof>,
    },
}

impl Proof {
    pub fn rule(&self) -> &'static str {
        match self {
            Proof::Hyp { .. } => "hyp",
            Proof::AndI(..) => "andI",
            Proof::AndEL(..) => "andEL",
            Proof::AndER(..) => "andER",
            Proof::OrIL { .. } => "orIL",
            Proof::OrIR { .. } => "orIR",
            Proof::OrE { .. } => "orE",
            Proof::ImpI { .. } => "impI",
            Proof::ImpE(..) => "impE",
            Proof::NotI { .. } => "notI",
            Proof::NotE(..) => "notE",
            Proof::BotE { .. } => "botE",
            Proof::Raa { .. } => "raa",
            Proof::ForallIndI { .. } => "forallI",
            Proof::ForallIndE { .. } => "forallE",
            Proof::ExistsIndI { .. } => "existsI",
            Proof::ExistsIndE { .. } => "existsE",
            Proof::ForallPredI { .. } => "forall2I",
            Proof::ForallPredE { .. } => "forall2E",
            Proof::ExistsPredI { .. } => "exists2I",
            Proof::ExistsPredE { .. } => "exists2E",
            Proof::HenkinI { .. } => "henkinI",
            Proof::HenkinE { .. } => "henkinE",
        }
    }

    pub fn premises(&self) -> Vec<&Proof> {
        match self {
            Proof::Hyp { .. } => vec![],
            Proof::AndI(a, b) | Proof::ImpE(a, b) | Proof::NotE(a, b) => vec![a, b],
            Proof::AndEL(p) | Proof::AndER(p) => vec![p],
            Proof::OrIL { premise, .. } | Proof::OrIR { premise, .. } => vec![premise],
            Proof::OrE { major, left_branch, right_branch, .. } => {
                vec![major, left_branch, right_branch]
            }
            Proof::ImpI { body, .. }
            | Proof::NotI { body, .. }
            | Proof::Raa { body, .. }
            | Proof::ForallIndI { body, .. }
            | Proof::ForallPredI { body, .. } => vec![body],
            Proof::BotE { premise, .. }
            | Proof::ForallIndE { premise, .. }
            | Proof::ExistsIndI { premise, .. }
            | Proof::ForallPredE { premise, .. }
            | Proof::ExistsPredI { premise, .. } => vec![premise],
            Proof::ExistsIndE { major, body, .. } | Proof::ExistsPredE { major, body, .. } => {
                vec![major, body]
            }
            Proof::HenkinI { prem_team, prem_board, prem_matrix, .. } => {
                vec![prem_team, prem_board, prem_matrix]
            }
            Proof::HenkinE { major, minor, .. } => vec![major, minor],
        }
    }

    /// Every label cited or discharged anywhere in the tree.
    pub fn labels(&self) -> BTreeSet<String> {
        let mut acc = BTreeSet::new();
        fn go(p: &Proof, acc: &mut BTreeSet<String>) {
            match p {
                Proof::Hyp { label, .. }
                | Proof::ImpI { label, .. }
                | Proof::NotI { label, .. }
                | Proof::Raa { label, .. }
                | Proof::ExistsIndE { label, .. }
                | Proof::ExistsPredE { label, .. }
                | Proof::HenkinE { label, .. } => {
                    acc.insert(label.clone());
                }
                Proof::OrE { left_label, right_label, .. } => {
                    acc.insert(left_label.clone());
                    acc.insert(right_label.clone());
                }
                _ => {}
            }
            for q in p.premises() {
                go(q, acc);
            }
        }
        go(self, &mut acc);
        acc
    }

    pub fn hyp(label: &str, formula: Formula) -> Proof {
        Proof::Hyp { label: label.to_owned(), formula: Some(formula) }
    }

    pub fn and_i(a: Proof, b: Proof) -> Proof {
        Proof::AndI(Box::new(a), Box::new(b))
    }

    pub fn and_el(p: Proof) -> Proof {
        Proof::AndEL(Box::new(p))
    }

    pub fn and_er(p: Proof) -> Proof {
        Proof::AndER(Box::new(p))
    }

    pub fn or_il(premise: Proof, right: Formula) -> Proof {
        Proof::OrIL { premise: Box::new(premise), right }
    }

    pub fn or_ir(premise: Proof, left: Formula) -> Proof {
        Proof::OrIR { premise: Box::new(premise), left }
    }

    pub fn or_e(major: Proof, la: &str, pa: Proof, lb: &str, pb: Proof) -> Proof {
        Proof::OrE {
            major: Box::new(major),
            left_label: la.to_owned(),
            left_branch: Box::new(pa),
            right_label: lb.to_owned(),
            right_branch: Box::new(pb),
        }
    }

    pub fn imp_i(label: &str, body: Proof) -> Proof {
        Proof::ImpI { label: label.to_owned(), antecedent: None, body: Box::new(body) }
    }

    pub fn imp_i_vac(label: &str, antecedent: Formula, body: Proof) -> Proof {
        Proof::ImpI { label: label.to_owned(), antecedent: Some(antecedent), body: Box::new(body) }
    }

    pub fn imp_e(imp: Proof, arg: Proof) -> Proof {
        Proof::ImpE(Box::new(imp), Box::new(arg))
    }

    pub fn not_i(label: &str, body: Proof) -> Proof {
        Proof::NotI { label: label.to_owned(), negated: None, body: Box::new(body) }
    }

    pub fn not_e(affirm: Proof, neg: Proof) -> Proof {
        Proof::NotE(Box::new(affirm), Box::new(neg))
    }

    pub fn bot_e(premise: Proof, conclusion: Formula) -> Proof {
        Proof::BotE { premise: Box::new(premise), conclusion }
    }

    pub fn raa(label: &str, body: Proof) -> Proof {
        Proof::Raa { label: label.to_owned(), conclusion: None, body: Box::new(body) }
    }

    pub fn forall_i(var: &str, body: Proof) -> Proof {
        Proof::ForallIndI { var: var.to_owned(), body: Box::new(body) }
    }

    pub fn forall_e(premise: Proof, witness: Term) -> Proof {
        Proof::ForallIndE { premise: Box::new(premise), witness }
    }

    pub fn exists_i(premise: Proof, witness: Term, target: Formula) -> Proof {
        Proof::ExistsIndI { premise: Box::new(premise), witness, target }
    }

    pub fn exists_e(major: Proof, eigen: &str, label: &str, body: Proof) -> Proof {
        Proof::ExistsIndE {
            major: Box::new(major),
            eigen: eigen.to_owned(),
            label: label.to_owned(),
            body: Box::new(body),
        }
    }

    pub fn forall2_i(var: &str, arity: usize, body: Proof) -> Proof {
        Proof::ForallPredI { var: var.to_owned(), arity, body: Box::new(body) }
    }

    pub fn forall2_e(premise: Proof, abs: PredAbstraction) -> Proof {
        Proof::ForallPredE { premise: Box::new(premise), abs }
    }

    pub fn exists2_i(premise: Proof, abs: PredAbstraction, target: Formula) -> Proof {
        Proof::ExistsPredI { premise: Box::new(premise), abs, target }
    }

    pub fn exists2_e(major: Proof, eigen: &str, label: &str, body: Proof) -> Proof {
        Proof::ExistsPredE {
            major: Box::new(major),
            eigen: eigen.to_owned(),
            label: label.to_owned(),
            body: Box::new(body),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckErrorKind {
    EigenvariableViolation,
    EigenpredicateViolation,
    DischargeMismatch,
    ConclusionMismatch,
    ArityMismatch,
    UnknownHypothesis,
    SideConditionViolation,
}

impl fmt::Display for CheckErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CheckErrorKind::EigenvariableViolation => "eigenvariable violation",
            CheckErrorKind::EigenpredicateViolation => "eigenpredicate violation",
            CheckErrorKind::DischargeMismatch => "discharge mismatch",
            CheckErrorKind::ConclusionMismatch => "conclusion mismatch",
            CheckErrorKind::ArityMismatch => "arity mismatch",
            CheckErrorKind::UnknownHypothesis => "unknown hypothesis",
            CheckErrorKind::SideConditionViolation => "side condition violation",
        };
        f.write_str(s)
    }
}

/// A rule violation, addressing the offending node by its child-index path
/// from the root.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at {}: {detail}", location_string(location))]
pub struct CheckError {
    pub kind: CheckErrorKind,
    pub location: Vec<usize>,
    pub detail: String,
}

fn location_string(loc: &[usize]) -> String {
    if loc.is_empty() {
        "root".to_owned()
    } else {
        loc.iter().map(usize::to_string).collect::<Vec<_>>().join(".")
    }
}

fn err<T>(
    kind: CheckErrorKind,
    path: &[usize],
    detail: impl Into<String>,
) -> Result<T, CheckError> {
    Err(CheckError { kind, location: path.to_vec(), detail: detail.into() })
}

/// Validates a proof tree and returns the judgment it establishes.
pub fn check(p: &Proof) -> Result<Judgment, CheckError> {
    let mut path = Vec::new();
    check_at(p, &mut path)
}

/// True iff the proof checks and proves exactly `expected` up to
/// alpha-equality of hypothesis formulas and conclusion.
pub fn check_against(p: &Proof, expected: &Judgment) -> Result<bool, CheckError> {
    Ok(check(p)?.alpha_same(expected))
}

type Hyps = BTreeMap<String, Formula>;

fn merge_hyps(mut a: Hyps, b: Hyps, path: &[usize]) -> Result<Hyps, CheckError> {
    for (l, f) in b {
        match a.get(&l) {
            Some(g) if !alpha_eq(g, &f) => {
                return err(
                    CheckErrorKind::DischargeMismatch,
                    path,
                    format!("label {l} is used for two different formulas in sibling branches"),
                );
            }
            _ => {
                a.insert(l, f);
            }
        }
    }
    Ok(a)
}

/// Removes `label` from the hypotheses, reconciling the formula actually
/// found with the optional declared one. Vacuous discharge is allowed when a
/// formula is declared.
fn discharge(
    mut hyps: Hyps,
    label: &str,
    declared: Option<&Formula>,
    rule: &str,
    path: &[usize],
) -> Result<(Hyps, Formula), CheckError> {
    match (hyps.remove(label), declared) {
        (Some(found), Some(decl)) => {
            if alpha_eq(&found, decl) {
                Ok((hyps, found))
            } else {
                err(
                    CheckErrorKind::DischargeMismatch,
                    path,
                    format!(
                        "{rule} declares {label}: {} but the subproof uses {label}: {}",
                        crate::parse::pretty_formula(decl),
                        crate::parse::pretty_formula(&found)
                    ),
                )
            }
        }
        (Some(found), None) => Ok((hyps, found)),
        (None, Some(decl)) => Ok((hyps, decl.clone())),
        (None, None) => err(
            CheckErrorKind::DischargeMismatch,
            path,
            format!("{rule} discharges {label}, which is unused and has no declared formula"),
        ),
    }
}

fn check_ind_eigen(
    var: &str,
    hyps: &Hyps,
    extra: &[&Formula],
    rule: &str,
    path: &[usize],
) -> Result<(), CheckError> {
    for (l, f) in hyps {
        if free_ind_vars(f).contains(var) {
            return err(
                CheckErrorKind::EigenvariableViolation,
                path,
                format!("{rule}: eigenvariable {var} occurs free in open hypothesis {l}"),
            );
        }
    }
    for f in extra {
        if free_ind_vars(f).contains(var) {
            return err(
                CheckErrorKind::EigenvariableViolation,
                path,
                format!(
                    "{rule}: eigenvariable {var} occurs free in {}",
                    crate::parse::pretty_formula(f)
                ),
            );
        }
    }
    Ok(())
}

fn check_pred_eigen(
    var: &str,
    arity: usize,
    hyps: &Hyps,
    extra: &[&Formula],
    rule: &str,
    path: &[usize],
) -> Result<(), CheckError> {
    let key = (var.to_owned(), arity);
    for (l, f) in hyps {
        if free_pred_vars(f).contains(&key) {
            return err(
                CheckErrorKind::EigenpredicateViolation,
                path,
                format!("{rule}: eigenpredicate {var}:{arity} occurs free in open hypothesis {l}"),
            );
        }
    }
    for f in extra {
        if free_pred_vars(f).contains(&key) {
            return err(
                CheckErrorKind::EigenpredicateViolation,
                path,
                format!(
                    "{rule}: eigenpredicate {var}:{arity} occurs free in {}",
                    crate::parse::pretty_formula(f)
                ),
            );
        }
    }
    Ok(())
}

fn child(p: &Proof, i: usize, path: &mut Vec<usize>) -> Result<Judgment, CheckError> {
    path.push(i);
    let r = check_at(p, path);
    path.pop();
    r
}

fn check_at(p: &Proof, path: &mut Vec<usize>) -> Result<Judgment, CheckError> {
    match p {
        Proof::Hyp { label, formula } => match formula {
            Some(f) => Ok(Judgment {
                hypotheses: BTreeMap::from([(label.clone(), f.clone())]),
                conclusion: f.clone(),
            }),
            None => err(
                CheckErrorKind::UnknownHypothesis,
                path,
                format!("hypothesis {label} is cited but carries no formula"),
            ),
        },
        Proof::AndI(a, b) => {
            let ja = child(a, 0, path)?;
            let jb = child(b, 1, path)?;
            Ok(Judgment {
                hypotheses: merge_hyps(ja.hypotheses, jb.hypotheses, path)?,
                conclusion: Formula::and(ja.conclusion, jb.conclusion),
            })
        }
        Proof::AndEL(a) => {
            let j = child(a, 0, path)?;
            match j.conclusion {
                Formula::And(l, _) => Ok(Judgment { hypotheses: j.hypotheses, conclusion: *l }),
                other => err(
                    CheckErrorKind::ConclusionMismatch,
                    path,
                    format!(
                        "andEL premise is not a conjunction: {}",
                        crate::parse::pretty_formula(&other)
                    ),
                ),
            }
        }
        Proof::AndER(a) => {
            let j = child(a, 0, path)?;
            match j.conclusion {
                Formula::And(_, r) => Ok(Judgment { hypotheses: j.hypotheses, conclusion: *r }),
                other => err(
                    CheckErrorKind::ConclusionMismatch,
                    path,
                    format!(
                        "andER premise is not a conjunction: {}",
                        crate::parse::pretty_formula(&other)
                    ),
                ),
            }
        }
        Proof::OrIL { premise, right } => {
            let j = child(premise, 0, path)?;
            Ok(Judgment {
                hypotheses: j.hypotheses,
                conclusion: Formula::or(j.conclusion, right.clone()),
            })
        }
        Proof::OrIR { premise, left } => {
            let j = child(premise, 0, path)?;
            Ok(Judgment {
                hypotheses: j.hypotheses,
                conclusion: Formula::or(left.clone(), j.conclusion),
            })
        }
        Proof::OrE { major, left_label, left_branch, right_label, right_branch } => {
            let jm = child(major, 0, path)?;
            let (da, db) = match &jm.conclusion {
                Formula::Or(a, b) => ((**a).clone(), (**b).clone()),
                other => {
                    return err(
                        CheckErrorKind::ConclusionMismatch,
                        path,
                        format!(
                            "orE major is not a disjunction: {}",
                            crate::parse::pretty_formula(other)
                        ),
                    )
                }
            };
            let jl = child(left_branch, 1, path)?;
            let jr = child(right_branch, 2, path)?;
            if !alpha_eq(&jl.conclusion, &jr.conclusion) {
                return err(
                    CheckErrorKind::ConclusionMismatch,
                    path,
                    "orE branches prove different conclusions",
                );
            }
            let (hl, _) = discharge(jl.hypotheses, left_label, Some(&da), "orE", path)?;
            let (hr, _) = discharge(jr.hypotheses, right_label, Some(&db), "orE", path)?;
            let hyps = merge_hyps(merge_hyps(jm.hypotheses, hl, path)?, hr, path)?;
            Ok(Judgment { hypotheses: hyps, conclusion: jl.conclusion })
        }
        Proof::ImpI { label, antecedent, body } => {
            let j = child(body, 0, path)?;
            let (hyps, ante) = discharge(j.hypotheses, label, antecedent.as_ref(), "impI", path)?;
            Ok(Judgment { hypotheses: hyps, conclusion: Formula::implies(ante, j.conclusion) })
        }
        Proof::ImpE(imp, arg) => {
            let ji = child(imp, 0, path)?;
            let ja = child(arg, 1, path)?;
            match &ji.conclusion {
                Formula::Implies(a, b) => {
                    if !alpha_eq(a, &ja.conclusion) {
                        return err(
                            CheckErrorKind::ConclusionMismatch,
                            path,
                            format!(
                                "impE argument proves {} but the implication expects {}",
                                crate::parse::pretty_formula(&ja.conclusion),
                                crate::parse::pretty_formula(a)
                            ),
                        );
                    }
                    Ok(Judgment {
                        hypotheses: merge_hyps(ji.hypotheses.clone(), ja.hypotheses, path)?,
                        conclusion: (**b).clone(),
                    })
                }
                other => err(
                    CheckErrorKind::ConclusionMismatch,
                    path,
                    format!(
                        "impE premise is not an implication: {}",
                        crate::parse::pretty_formula(other)
                    ),
                ),
            }
        }
        Proof::NotI { label, negated, body } => {
            let j = child(body, 0, path)?;
            if j.conclusion != Formula::Bot {
                return err(
                    CheckErrorKind::ConclusionMismatch,
                    path,
                    "notI subproof must conclude bot",
                );
            }
            let (hyps, neg) = discharge(j.hypotheses, label, negated.as_ref(), "notI", path)?;
            Ok(Judgment { hypotheses: hyps, conclusion: Formula::not(neg) })
        }
        Proof::NotE(affirm, neg) => {
            let ja = child(affirm, 0, path)?;
            let jn = child(neg, 1, path)?;
            match &jn.conclusion {
                Formula::Not(inner) if alpha_eq(inner, &ja.conclusion) => Ok(Judgment {
                    hypotheses: merge_hyps(ja.hypotheses, jn.hypotheses.clone(), path)?,
                    conclusion: Formula::Bot,
                }),
                other => err(
                    CheckErrorKind::ConclusionMismatch,
                    path,
                    format!(
                        "notE premises do not match: {} vs {}",
                        crate::parse::pretty_formula(&ja.conclusion),
                        crate::parse::pretty_formula(other)
                    ),
                ),
            }
        }
        Proof::BotE { premise, conclusion } => {
            let j = child(premise, 0, path)?;
            if j.conclusion != Formula::Bot {
                return err(
                    CheckErrorKind::ConclusionMismatch,
                    path,
                    "botE premise must conclude bot",
                );
            }
            Ok(Judgment { hypotheses: j.hypotheses, conclusion: conclusion.clone() })
        }
        Proof::Raa { label, conclusion, body } => {
            let j = child(body, 0, path)?;
            if j.conclusion != Formula::Bot {
                return err(
                    CheckErrorKind::ConclusionMismatch,
                    path,
                    "raa subproof must conclude bot",
                );
            }
            let declared_neg = conclusion.as_ref().map(|c| Formula::not(c.clone()));
            let (hyps, neg) = discharge(j.hypotheses, label, declared_neg.as_ref(), "raa", path)?;
            match neg {
                Formula::Not(a) => Ok(Judgment { hypotheses: hyps, conclusion: *a }),
                other => err(
                    CheckErrorKind::DischargeMismatch,
                    path,
                    format!(
                        "raa discharges {label}: {} which is not a negation",
                        crate::parse::pretty_formula(&other)
                    ),
                ),
            }
        }
        Proof::ForallIndI { var, body } => {
            let j = child(body, 0, path)?;
            check_ind_eigen(var, &j.hypotheses, &[], "forallI", path)?;
            Ok(Judgment {
                hypotheses: j.hypotheses,
                conclusion: Formula::forall_ind(var, j.conclusion),
            })
        }
        Proof::ForallIndE { premise, witness } => {
            let j = child(premise, 0, path)?;
            match &j.conclusion {
                Formula::ForallInd { var, body } => Ok(Judgment {
                    hypotheses: j.hypotheses.clone(),
                    conclusion: subst_term(body, var, witness),
                }),
                other => err(
                    CheckErrorKind::ConclusionMismatch,
                    path,
                    format!(
                        "forallE premise is not universal: {}",
                        crate::parse::pretty_formula(other)
                    ),
                ),
            }
        }
        Proof::ExistsIndI { premise, witness, target } => {
            let j = child(premise, 0, path)?;
            match target {
                Formula::ExistsInd { var, body } => {
                    let instance = subst_term(body, var, witness);
                    if alpha_eq(&instance, &j.conclusion) {
                        Ok(Judgment { hypotheses: j.hypotheses, conclusion: target.clone() })
                    } else {
                        err(
                            CheckErrorKind::ConclusionMismatch,
                            path,
                            format!(
                                "existsI premise proves {} but the target instantiates to {}",
                                crate::parse::pretty_formula(&j.conclusion),
                                crate::parse::pretty_formula(&instance)
                            ),
                        )
                    }
                }
                other => err(
                    CheckErrorKind::ConclusionMismatch,
                    path,
                    format!(
                        "existsI target is not existential: {}",
                        crate::parse::pretty_formula(other)
                    ),
                ),
            }
        }
        Proof::ExistsIndE { major, eigen, label, body } => {
            let jm = child(major, 0, path)?;
            let (var, inner) = match &jm.conclusion {
                Formula::ExistsInd { var, body } => (var.clone(), (**body).clone()),
                other => {
                    return err(
                        CheckErrorKind::ConclusionMismatch,
                        path,
                        format!(
                            "existsE major is not existential: {}",
                            crate::parse::pretty_formula(other)
                        ),
                    )
                }
            };
            let expected = subst_term(&inner, &var, &Term::Var(eigen.clone()));
            let jb = child(body, 1, path)?;
            let (hyps_minor, _) =
                discharge(jb.hypotheses, label, Some(&expected), "existsE", path)?;
            check_ind_eigen(
                eigen,
                &hyps_minor,
                &[&jb.conclusion, &jm.conclusion],
                "existsE",
                path,
            )?;
            Ok(Judgment {
                hypotheses: merge_hyps(jm.hypotheses, hyps_minor, path)?,
                conclusion: jb.conclusion,
            })
        }
        Proof::ForallPredI { var, arity, body } => {
            let j = child(body, 0, path)?;
            check_pred_eigen(var, *arity, &j.hypotheses, &[], "forall2I", path)?;
            Ok(Judgment {
                hypotheses: j.hypotheses,
                conclusion: Formula::forall_pred(var, *arity, j.conclusion),
            })
        }
        Proof::ForallPredE { premise, abs } => {
            let j = child(premise, 0, path)?;
            match &j.conclusion {
                Formula::ForallPred { var, arity, body } => {
                    if abs.arity() != *arity {
                        return err(
                            CheckErrorKind::ArityMismatch,
                            path,
                            format!(
                                "forall2E instantiates {var}:{arity} with an abstraction of arity {}",
                                abs.arity()
                            ),
                        );
                    }
                    let conclusion =
                        subst_pred(body, var, *arity, abs).expect("arity checked above");
                    Ok(Judgment { hypotheses: j.hypotheses.clone(), conclusion })
                }
                other => err(
                    CheckErrorKind::ConclusionMismatch,
                    path,
                    format!(
                        "forall2E premise is not universal: {}",
                        crate::parse::pretty_formula(other)
                    ),
                ),
            }
        }
        Proof::ExistsPredI { premise, abs, target } => {
            let j = child(premise, 0, path)?;
            match target {
                Formula::ExistsPred { var, arity, body } => {
                    if abs.arity() != *arity {
                        return err(
                            CheckErrorKind::ArityMismatch,
                            path,
                            format!(
                                "exists2I instantiates {var}:{arity} with an abstraction of arity {}",
                                abs.arity()
                            ),
                        );
                    }
                    let instance =
                        subst_pred(body, var, *arity, abs).expect("arity checked above");
                    if alpha_eq(&instance, &j.conclusion) {
                        Ok(Judgment { hypotheses: j.hypotheses, conclusion: target.clone() })
                    } else {
                        err(
                            CheckErrorKind::ConclusionMismatch,
                            path,
                            format!(
                                "exists2I premise proves {} but the target instantiates to {}",
                                crate::parse::pretty_formula(&j.conclusion),
                                crate::parse::pretty_formula(&instance)
                            ),
                        )
                    }
                }
                other => err(
                    CheckErrorKind::ConclusionMismatch,
                    path,
                    format!(
                        "exists2I target is not existential: {}",
                        crate::parse::pretty_formula(other)
                    ),
                ),
            }
        }
        Proof::ExistsPredE { major, eigen, label, body } => {
            let jm = child(major, 0, path)?;
            let (var, arity, inner) = match &jm.conclusion {
                Formula::ExistsPred { var, arity, body } => (var.clone(), *arity, (**body).clone()),
                other => {
                    return err(
                        CheckErrorKind::ConclusionMismatch,
                        path,
                        format!(
                            "exists2E major is not existential: {}",
                            crate::parse::pretty_formula(other)
                        ),
                    )
                }
            };
            let expected =
                subst_pred(&inner, &var, arity, &PredAbstraction::of_pred_var(eigen, arity))
                    .expect("eigen abstraction has the binder's arity");
            let jb = child(body, 1, path)?;
            let (hyps_minor, _) =
                discharge(jb.hypotheses, label, Some(&expected), "exists2E", path)?;
            check_pred_eigen(
                eigen,
                arity,
                &hyps_minor,
                &[&jb.conclusion, &jm.conclusion],
                "exists2E",
                path,
            )?;
            Ok(Judgment {
                hypotheses: merge_hyps(jm.hypotheses, hyps_minor, path)?,
                conclusion: jb.conclusion,
            })
        }
        Proof::HenkinI { prem_team, prem_board, prem_matrix, abs_f, abs_g } => {
            if abs_f.arity() != 2 || abs_g.arity() != 2 {
                return err(
                    CheckErrorKind::ArityMismatch,
                    path,
                    "henkinI selector abstractions must be binary",
                );
            }
            let jt = child(prem_team, 0, path)?;
            let jb = child(prem_board, 1, path)?;
            let jp = child(prem_matrix, 2, path)?;
            let sig = henkin_intro_signature(&jt, &jb, &jp, abs_f, abs_g, path)?;
            let hyps = merge_hyps(
                merge_hyps(jt.hypotheses, jb.hypotheses, path)?,
                jp.hypotheses,
                path,
            )?;
            Ok(Judgment { hypotheses: hyps, conclusion: expand_henkin(&sig, HenkinVariant::Plain) })
        }
        Proof::HenkinE { major, eigen_f, eigen_g, label, minor } => {
            let jm = child(major, 0, path)?;
            let (fname, gname, matrix) = destructure_henkin_major(&jm.conclusion, path)?;
            verify_psi_shape(&matrix, &fname, &gname, path)?;
            if eigen_f == eigen_g {
                return err(
                    CheckErrorKind::EigenpredicateViolation,
                    path,
                    format!("henkinE eigenpredicates must be distinct, both are {eigen_f}"),
                );
            }
            let expected = subst_two_preds(&matrix, &fname, eigen_f, &gname, eigen_g);
            let jn = child(minor, 1, path)?;
            let (hyps_minor, _) =
                discharge(jn.hypotheses, label, Some(&expected), "henkinE", path)?;
            for (name, role) in [(eigen_f, "F"), (eigen_g, "G")] {
                check_pred_eigen(
                    name,
                    2,
                    &hyps_minor,
                    &[&jn.conclusion, &jm.conclusion],
                    &format!("henkinE (selector {role})"),
                    path,
                )?;
            }
            Ok(Judgment {
                hypotheses: merge_hyps(jm.hypotheses, hyps_minor, path)?,
                conclusion: jn.conclusion,
            })
        }
    }
}

/// `matrix[f := a][g := b]` for predicate variables, routed through a fresh
/// intermediate so the pair behaves as a simultaneous substitution.
fn subst_two_preds(matrix: &Formula, f: &str, a: &str, g: &str, b: &str) -> Formula {
    let mut avoid: BTreeSet<String> = crate::syntax::all_pred_names(matrix);
    avoid.extend([f.to_owned(), g.to_owned(), a.to_owned(), b.to_owned()]);
    let tmp = fresh_name("F", &avoid);
    let step1 = subst_pred(matrix, f, 2, &PredAbstraction::of_pred_var(&tmp, 2))
        .expect("eigen abstraction is binary");
    let step2 = subst_pred(&step1, g, 2, &PredAbstraction::of_pred_var(b, 2))
        .expect("eigen abstraction is binary");
    subst_pred(&step2, &tmp, 2, &PredAbstraction::of_pred_var(a, 2))
        .expect("eigen abstraction is binary")
}

fn destructure_henkin_major(
    f: &Formula,
    path: &[usize],
) -> Result<(String, String, Formula), CheckError> {
    if let Formula::ExistsPred { var: fv, arity: 2, body } = f {
        if let Formula::ExistsPred { var: gv, arity: 2, body: inner } = &**body {
            return Ok((fv.clone(), gv.clone(), (**inner).clone()));
        }
    }
    err(
        CheckErrorKind::ConclusionMismatch,
        path,
        format!(
            "henkinE major must conclude exists2 F:2. exists2 G:2. Psi, got {}",
            crate::parse::pretty_formula(f)
        ),
    )
}

/// Checks that `matrix` is the selector condition of some team/board/know
/// signature, and returns that signature.
fn verify_psi_shape(
    matrix: &Formula,
    fname: &str,
    gname: &str,
    path: &[usize],
) -> Result<HenkinSignature, CheckError> {
    let bail = |detail: String| CheckError {
        kind: CheckErrorKind::ConclusionMismatch,
        location: path.to_vec(),
        detail,
    };
    let (c12, c3) = match matrix {
        Formula::And(l, r) => (&**l, &**r),
        _ => return Err(bail("selector condition is not a conjunction".into())),
    };
    let (c1, c2) = match c12 {
        Formula::And(l, r) => (&**l, &**r),
        _ => return Err(bail("selector condition is missing a conjunct".into())),
    };
    let team = row_closure_head(c1)
        .ok_or_else(|| bail("first conjunct does not constrain a unary team predicate".into()))?;
    let board = row_closure_head(c2)
        .ok_or_else(|| bail("second conjunct does not constrain a unary board predicate".into()))?;
    let knows = matrix_consequent_head(c3)
        .ok_or_else(|| bail("third conjunct is not a closed matrix ending in a binary predicate constant".into()))?;
    let sig = HenkinSignature::new(&team, &board, &knows);
    let canonical =
        build_psi(&pvar(fname, 2), &pvar(gname, 2), &sig).expect("selector variables are binary");
    if alpha_eq(matrix, &canonical) {
        Ok(sig)
    } else {
        Err(bail(format!(
            "selector condition does not match the canonical form for signature ({team}, {board}, {knows})"
        )))
    }
}

/// `forall v. exists v'. (P(v) -> _)` with `P` a unary predicate constant.
fn row_closure_head(f: &Formula) -> Option<String> {
    if let Formula::ForallInd { body, .. } = f {
        if let Formula::ExistsInd { body, .. } = &**body {
            if let Formula::Implies(a, _) = &**body {
                if let Formula::Atom { pred: PredRef::Const { name, arity: 1 }, .. } = &**a {
                    return Some(name.clone());
                }
            }
        }
    }
    None
}

/// `forall x x' y y'. (_ -> K(_, _))` with `K` a binary predicate constant.
fn matrix_consequent_head(f: &Formula) -> Option<String> {
    let mut cursor = f;
    for _ in 0..4 {
        match cursor {
            Formula::ForallInd { body, .. } => cursor = body,
            _ => return None,
        }
    }
    if let Formula::Implies(_, c) = cursor {
        if let Formula::Atom { pred: PredRef::Const { name, arity: 2 }, .. } = &**c {
            return Some(name.clone());
        }
    }
    None
}

/// Extracts and cross-checks the signature from the three intro premises.
fn henkin_intro_signature(
    jt: &Judgment,
    jb: &Judgment,
    jp: &Judgment,
    abs_f: &PredAbstraction,
    abs_g: &PredAbstraction,
    path: &[usize],
) -> Result<HenkinSignature, CheckError> {
    let bail = |which: usize, detail: String| CheckError {
        kind: CheckErrorKind::ConclusionMismatch,
        location: {
            let mut p = path.to_vec();
            p.push(which);
            p
        },
        detail,
    };
    let team = row_closure_head(&jt.conclusion).ok_or_else(|| {
        bail(0, "first premise must conclude forall x. exists x'. (T(x) -> F(x,x'))".into())
    })?;
    let board = row_closure_head(&jb.conclusion).ok_or_else(|| {
        bail(1, "second premise must conclude forall y. exists y'. (B(y) -> G(y,y'))".into())
    })?;
    let knows = matrix_consequent_head(&jp.conclusion).ok_or_else(|| {
        bail(2, "third premise must be the universally closed matrix ending in K(x',y')".into())
    })?;
    let sig = HenkinSignature::new(&team, &board, &knows);
    // Rebuild each expected premise with the selectors substituted in and
    // compare; any deviation in shape surfaces here.
    let psi = build_psi(&pvar("F0", 2), &pvar("G0", 2), &sig).expect("selectors are binary");
    let (c12, c3) = match psi {
        Formula::And(l, r) => (*l, *r),
        _ => unreachable!("psi is a conjunction"),
    };
    let (c1, c2) = match c12 {
        Formula::And(l, r) => (*l, *r),
        _ => unreachable!("psi has three conjuncts"),
    };
    let with_selectors = |f: &Formula| {
        let step = subst_pred(f, "F0", 2, abs_f).expect("selector abstraction is binary");
        subst_pred(&step, "G0", 2, abs_g).expect("selector abstraction is binary")
    };
    for (idx, (expected, actual)) in [
        (with_selectors(&c1), &jt.conclusion),
        (with_selectors(&c2), &jb.conclusion),
        (with_selectors(&c3), &jp.conclusion),
    ]
    .into_iter()
    .enumerate()
    {
        if !alpha_eq(&expected, actual) {
            return Err(bail(
                idx,
                format!(
                    "premise proves {} but the rule requires {}",
                    crate::parse::pretty_formula(actual),
                    crate::parse::pretty_formula(&expected)
                ),
            ));
        }
    }
    Ok(sig)
}

/// Builds the checked node for the branching-quantifier introduction rule
/// from its three premises and the two selector abstractions.
pub fn henkin_intro(
    prem_team: Proof,
    prem_board: Proof,
    prem_matrix: Proof,
    abs_f: PredAbstraction,
    abs_g: PredAbstraction,
) -> Result<Proof, CheckError> {
    let node = Proof::HenkinI {
        prem_team: Box::new(prem_team),
        prem_board: Box::new(prem_board),
        prem_matrix: Box::new(prem_matrix),
        abs_f,
        abs_g,
    };
    check(&node)?;
    Ok(node)
}

/// Builds the checked node for the branching-quantifier elimination rule.
pub fn henkin_elim(
    major: Proof,
    minor: Proof,
    eigen_f: &str,
    eigen_g: &str,
    discharge: &str,
) -> Result<Proof, CheckError> {
    let node = Proof::HenkinE {
        major: Box::new(major),
        eigen_f: eigen_f.to_owned(),
        eigen_g: eigen_g.to_owned(),
        label: discharge.to_owned(),
        minor: Box::new(minor),
    };
    check(&node)?;
    Ok(node)
}

/// A checked proof of the comprehension instance for `abs`:
/// `exists2 X:n. forall x1..xn. (phi <-> X(x1..xn))` with no hypotheses.
/// The bound predicate variable is chosen fresh for `abs`.
pub fn derive_comprehension(abs: &PredAbstraction) -> Proof {
    let avoid = crate::syntax::all_pred_names(abs.body());
    let x = fresh_name("X", &avoid);
    let n = abs.arity();
    let params: Vec<Term> = abs.params().iter().map(|p| Term::Var(p.clone())).collect();
    let phi = abs.body().clone();
    let x_atom = Formula::atom(pvar(&x, n), params);
    let mut target_body = Formula::iff(phi.clone(), x_atom);
    for p in abs.params().iter().rev() {
        target_body = Formula::forall_ind(p, target_body);
    }
    let target = Formula::exists_pred(&x, n, target_body);

    let half = |label: &str| Proof::imp_i(label, Proof::hyp(label, phi.clone()));
    let mut instance = Proof::and_i(half("h"), half("h"));
    for p in abs.params().iter().rev() {
        instance = Proof::forall_i(p, instance);
    }
    Proof::exists2_i(instance, abs.clone(), target)
}

/// Replaces every branching-quantifier rule by the second-order steps it
/// abbreviates. The result proves the same judgment up to alpha-equality.
pub fn elaborate(p: &Proof) -> Result<Proof, CheckError> {
    check(p)?;
    elaborate_rec(p)
}

fn elaborate_rec(p: &Proof) -> Result<Proof, CheckError> {
    let rebuilt = match p {
        Proof::Hyp { .. } => p.clone(),
        Proof::AndI(a, b) => Proof::and_i(elaborate_rec(a)?, elaborate_rec(b)?),
        Proof::AndEL(a) => Proof::and_el(elaborate_rec(a)?),
        Proof::AndER(a) => Proof::and_er(elaborate_rec(a)?),
        Proof::OrIL { premise, right } => Proof::or_il(elaborate_rec(premise)?, right.clone()),
        Proof::OrIR { premise, left } => Proof::or_ir(elaborate_rec(premise)?, left.clone()),
        Proof::OrE { major, left_label, left_branch, right_label, right_branch } => Proof::OrE {
            major: Box::new(elaborate_rec(major)?),
            left_label: left_label.clone(),
            left_branch: Box::new(elaborate_rec(left_branch)?),
            right_label: right_label.clone(),
            right_branch: Box::new(elaborate_rec(right_branch)?),
        },
        Proof::ImpI { label, antecedent, body } => Proof::ImpI {
            label: label.clone(),
            antecedent: antecedent.clone(),
            body: Box::new(elaborate_rec(body)?),
        },
        Proof::ImpE(a, b) => Proof::imp_e(elaborate_rec(a)?, elaborate_rec(b)?),
        Proof::NotI { label, negated, body } => Proof::NotI {
            label: label.clone(),
            negated: negated.clone(),
            body: Box::new(elaborate_rec(body)?),
        },
        Proof::NotE(a, b) => Proof::not_e(elaborate_rec(a)?, elaborate_rec(b)?),
        Proof::BotE { premise, conclusion } => {
            Proof::bot_e(elaborate_rec(premise)?, conclusion.clone())
        }
        Proof::Raa { label, conclusion, body } => Proof::Raa {
            label: label.clone(),
            conclusion: conclusion.clone(),
            body: Box::new(elaborate_rec(body)?),
        },
        Proof::ForallIndI { var, body } => Proof::forall_i(var, elaborate_rec(body)?),
        Proof::ForallIndE { premise, witness } => {
            Proof::forall_e(elaborate_rec(premise)?, witness.clone())
        }
        Proof::ExistsIndI { premise, witness, target } => {
            Proof::exists_i(elaborate_rec(premise)?, witness.clone(), target.clone())
        }
        Proof::ExistsIndE { major, eigen, label, body } => Proof::ExistsIndE {
            major: Box::new(elaborate_rec(major)?),
            eigen: eigen.clone(),
            label: label.clone(),
            body: Box::new(elaborate_rec(body)?),
        },
        Proof::ForallPredI { var, arity, body } => {
            Proof::forall2_i(var, *arity, elaborate_rec(body)?)
        }
        Proof::ForallPredE { premise, abs } => {
            Proof::forall2_e(elaborate_rec(premise)?, abs.clone())
        }
        Proof::ExistsPredI { premise, abs, target } => {
            Proof::exists2_i(elaborate_rec(premise)?, abs.clone(), target.clone())
        }
        Proof::ExistsPredE { major, eigen, label, body } => Proof::ExistsPredE {
            major: Box::new(elaborate_rec(major)?),
            eigen: eigen.clone(),
            label: label.clone(),
            body: Box::new(elaborate_rec(body)?),
        },
        Proof::HenkinI { prem_team, prem_board, prem_matrix, abs_f, abs_g } => {
            let jt = check(prem_team)?;
            let jb = check(prem_board)?;
            let jp = check(prem_matrix)?;
            let sig = henkin_intro_signature(&jt, &jb, &jp, abs_f, abs_g, &[])?;
            let conclusion = expand_henkin(&sig, HenkinVariant::Plain);
            let inner_target = match &conclusion {
                Formula::ExistsPred { var, arity, body } => {
                    subst_pred(body, var, *arity, abs_f).expect("selector abstraction is binary")
                }
                _ => unreachable!("expansion starts with exists2"),
            };
            let conjoined = Proof::and_i(
                Proof::and_i(elaborate_rec(prem_team)?, elaborate_rec(prem_board)?),
                elaborate_rec(prem_matrix)?,
            );
            Proof::exists2_i(
                Proof::exists2_i(conjoined, abs_g.clone(), inner_target),
                abs_f.clone(),
                conclusion,
            )
        }
        Proof::HenkinE { major, eigen_f, eigen_g, label, minor } => {
            let jm = check(major)?;
            let (fname, _, _) = destructure_henkin_major(&jm.conclusion, &[])?;
            let intermediate = match &jm.conclusion {
                Formula::ExistsPred { body, .. } => {
                    subst_pred(body, &fname, 2, &PredAbstraction::of_pred_var(eigen_f, 2))
                        .expect("eigen abstraction is binary")
                }
                _ => unreachable!("major destructured above"),
            };
            let mut avoid = p.labels();
            avoid.insert(label.clone());
            let outer_label = fresh_name("h", &avoid);
            let inner = Proof::exists2_e(
                Proof::hyp(&outer_label, intermediate),
                eigen_g,
                label,
                elaborate_rec(minor)?,
            );
            Proof::exists2_e(elaborate_rec(major)?, eigen_f, &outer_label, inner)
        }
    };
    Ok(rebuilt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{cst, pconst, var};

    fn patom(name: &str) -> Formula {
        Formula::atom(pconst(name, 0), vec![])
    }

    fn p1(t: Term) -> Formula {
        Formula::atom(pconst("P", 1), vec![t])
    }

    #[test]
    fn identity_implication() {
        let a = patom("A");
        let p = Proof::imp_i("h", Proof::hyp("h", a.clone()));
        let j = check(&p).unwrap();
        assert!(j.hypotheses.is_empty());
        assert_eq!(j.conclusion, Formula::implies(a.clone(), a));
    }

    #[test]
    fn check_against_spec_behaviour() {
        let a = patom("A");
        let b = patom("B");
        let p = Proof::imp_i("h", Proof::hyp("h", a.clone()));
        let good = Judgment::theorem(Formula::implies(a.clone(), a.clone()));
        let bad = Judgment::theorem(Formula::implies(a.clone(), b));
        assert!(check_against(&p, &good).unwrap());
        assert!(!check_against(&p, &bad).unwrap());
        let with_extra_hyp =
            Judgment::new(vec![("ghost", patom("C"))], Formula::implies(a.clone(), a));
        assert!(!check_against(&p, &with_extra_hyp).unwrap());
    }

    #[test]
    fn hypothesis_without_formula_is_rejected() {
        let p = Proof::Hyp { label: "h".into(), formula: None };
        let e = check(&p).unwrap_err();
        assert_eq!(e.kind, CheckErrorKind::UnknownHypothesis);
    }

    #[test]
    fn and_rules() {
        let a = patom("A");
        let b = patom("B");
        let both = Proof::and_i(Proof::hyp("x", a.clone()), Proof::hyp("y", b.clone()));
        assert_eq!(check(&Proof::and_el(both.clone())).unwrap().conclusion, a.clone());
        assert_eq!(check(&Proof::and_er(both)).unwrap().conclusion, b);
        let e = check(&Proof::and_el(Proof::hyp("x", a))).unwrap_err();
        assert_eq!(e.kind, CheckErrorKind::ConclusionMismatch);
        assert_eq!(e.location, Vec::<usize>::new());
    }

    #[test]
    fn label_conflict_between_branches() {
        let p = Proof::and_i(Proof::hyp("h", patom("A")), Proof::hyp("h", patom("B")));
        let e = check(&p).unwrap_err();
        assert_eq!(e.kind, CheckErrorKind::DischargeMismatch);
    }

    #[test]
    fn or_rules() {
        let a = patom("A");
        let b = patom("B");
        let intro = Proof::or_il(Proof::hyp("h", a.clone()), b.clone());
        assert_eq!(check(&intro).unwrap().conclusion, Formula::or(a.clone(), b.clone()));
        // orE: A | A |- A
        let major = Proof::hyp("d", Formula::or(a.clone(), a.clone()));
        let case = |l: &str| Proof::hyp(l, a.clone());
        let pe = Proof::or_e(major, "u", case("u"), "v", case("v"));
        let j = check(&pe).unwrap();
        assert_eq!(j.conclusion, a.clone());
        assert_eq!(j.hypotheses.len(), 1);
        // Mismatched branch conclusions are rejected.
        let bad = Proof::or_e(
            Proof::hyp("d", Formula::or(a.clone(), b.clone())),
            "u",
            Proof::hyp("u", a),
            "v",
            Proof::hyp("v", b),
        );
        let e = check(&bad).unwrap_err();
        assert_eq!(e.kind, CheckErrorKind::ConclusionMismatch);
    }

    #[test]
    fn imp_e_argument_mismatch() {
        let a = patom("A");
        let b = patom("B");
        let p = Proof::imp_e(
            Proof::hyp("f", Formula::implies(a, b.clone())),
            Proof::hyp("x", b),
        );
        let e = check(&p).unwrap_err();
        assert_eq!(e.kind, CheckErrorKind::ConclusionMismatch);
    }

    #[test]
    fn negation_and_raa() {
        let a = patom("A");
        let contradiction = Proof::not_e(
            Proof::hyp("a", a.clone()),
            Proof::hyp("n", Formula::not(a.clone())),
        );
        assert_eq!(check(&contradiction).unwrap().conclusion, Formula::Bot);
        let raa = Proof::raa("n", contradiction);
        let j = check(&raa).unwrap();
        assert_eq!(j.conclusion, a);
        assert_eq!(j.hypotheses.len(), 1);
        // raa discharging a non-negation is rejected.
        let bad = Proof::raa(
            "x",
            Proof::not_e(
                Proof::hyp("x", patom("A")),
                Proof::hyp("n", Formula::not(patom("A"))),
            ),
        );
        let e = check(&bad).unwrap_err();
        assert_eq!(e.kind, CheckErrorKind::DischargeMismatch);
    }

    #[test]
    fn not_i_and_bot_e() {
        let a = patom("A");
        let p = Proof::not_i(
            "h",
            Proof::not_e(Proof::hyp("h", a.clone()), Proof::hyp("n", Formula::not(a.clone()))),
        );
        let j = check(&p).unwrap();
        assert_eq!(j.conclusion, Formula::not(a.clone()));
        let be = Proof::bot_e(Proof::hyp("b", Formula::Bot), a.clone());
        assert_eq!(check(&be).unwrap().conclusion, a.clone());
        let bad = Proof::bot_e(Proof::hyp("b", a.clone()), a);
        assert_eq!(check(&bad).unwrap_err().kind, CheckErrorKind::ConclusionMismatch);
    }

    #[test]
    fn forall_ind_rules() {
        // |- forall x. (P(x) -> P(x))
        let body = Proof::imp_i("h", Proof::hyp("h", p1(var("x"))));
        let p = Proof::forall_i("x", body);
        let j = check(&p).unwrap();
        assert_eq!(
            j.conclusion,
            Formula::forall_ind("x", Formula::implies(p1(var("x")), p1(var("x"))))
        );
        let inst = Proof::forall_e(p, cst("a"));
        assert_eq!(
            check(&inst).unwrap().conclusion,
            Formula::implies(p1(cst("a")), p1(cst("a")))
        );
        // Eigenvariable violation: x free in an open hypothesis.
        let bad = Proof::forall_i("x", Proof::hyp("h", p1(var("x"))));
        let e = check(&bad).unwrap_err();
        assert_eq!(e.kind, CheckErrorKind::EigenvariableViolation);
    }

    #[test]
    fn exists_ind_rules() {
        let target = Formula::exists_ind("x", p1(var("x")));
        let intro = Proof::exists_i(Proof::hyp("h", p1(cst("a"))), cst("a"), target.clone());
        assert_eq!(check(&intro).unwrap().conclusion, target);
        // Wrong witness.
        let bad = Proof::exists_i(Proof::hyp("h", p1(cst("a"))), cst("b"), target.clone());
        assert_eq!(check(&bad).unwrap_err().kind, CheckErrorKind::ConclusionMismatch);
        // existsE round trip: from exists x. P(x) conclude exists x. P(x).
        let major = Proof::hyp("d", target.clone());
        let body = Proof::exists_i(Proof::hyp("e", p1(var("y"))), var("y"), target.clone());
        let pe = Proof::exists_e(major.clone(), "y", "e", body);
        assert_eq!(check(&pe).unwrap().conclusion, target.clone());
        // Eigenvariable escaping into the conclusion.
        let leak = Proof::exists_e(major, "y", "e", Proof::hyp("e", p1(var("y"))));
        assert_eq!(check(&leak).unwrap_err().kind, CheckErrorKind::EigenvariableViolation);
    }

    #[test]
    fn forall_pred_rules() {
        // |- forall2 X:1. (X(a) -> X(a))
        let xa = Formula::atom(pvar("X", 1), vec![cst("a")]);
        let p = Proof::forall2_i("X", 1, Proof::imp_i("h", Proof::hyp("h", xa.clone())));
        let j = check(&p).unwrap();
        assert_eq!(
            j.conclusion,
            Formula::forall_pred("X", 1, Formula::implies(xa.clone(), xa.clone()))
        );
        // Instantiate with lam y. P(y).
        let abs = PredAbstraction::new(vec!["y"], p1(var("y")));
        let inst = Proof::forall2_e(p.clone(), abs);
        assert_eq!(
            check(&inst).unwrap().conclusion,
            Formula::implies(p1(cst("a")), p1(cst("a")))
        );
        // Eigenpredicate violation.
        let bad = Proof::forall2_i("X", 1, Proof::hyp("h", xa));
        assert_eq!(check(&bad).unwrap_err().kind, CheckErrorKind::EigenpredicateViolation);
        // Arity mismatch in instantiation.
        let wrong = Proof::forall2_e(p, PredAbstraction::new(vec!["x", "y"], Formula::Bot));
        assert_eq!(check(&wrong).unwrap_err().kind, CheckErrorKind::ArityMismatch);
    }

    #[test]
    fn exists_pred_intro_from_worked_example() {
        // From (P(z,a) & Q(a,a)) & (P(a,b) & Q(b,a))
        // conclude exists2 X:2. (X(z,a) & X(a,b)).
        let p2 = |x: Term, y: Term| Formula::atom(pconst("P", 2), vec![x, y]);
        let q2 = |x: Term, y: Term| Formula::atom(pconst("Q", 2), vec![x, y]);
        let premise = Formula::and(
            Formula::and(p2(var("z"), cst("a")), q2(cst("a"), cst("a"))),
            Formula::and(p2(cst("a"), cst("b")), q2(cst("b"), cst("a"))),
        );
        let target = Formula::exists_pred(
            "X",
            2,
            Formula::and(
                Formula::atom(pvar("X", 2), vec![var("z"), cst("a")]),
                Formula::atom(pvar("X", 2), vec![cst("a"), cst("b")]),
            ),
        );
        let abs = PredAbstraction::new(
            vec!["x", "y"],
            Formula::and(p2(var("x"), var("y")), q2(var("y"), cst("a"))),
        );
        let p = Proof::exists2_i(Proof::hyp("h", premise), abs, target.clone());
        assert_eq!(check(&p).unwrap().conclusion, target);
    }

    #[test]
    fn exists_pred_elim_round_trip() {
        let target = Formula::exists_pred("X", 1, Formula::atom(pvar("X", 1), vec![cst("a")]));
        let major = Proof::hyp("d", target.clone());
        let body = Proof::exists2_i(
            Proof::hyp("e", Formula::atom(pvar("Y", 1), vec![cst("a")])),
            PredAbstraction::of_pred_var("Y", 1),
            target.clone(),
        );
        let p = Proof::exists2_e(major.clone(), "Y", "e", body);
        assert_eq!(check(&p).unwrap().conclusion, target);
        // Eigenpredicate escaping into the conclusion.
        let leak = Proof::exists2_e(
            major,
            "Y",
            "e",
            Proof::hyp("e", Formula::atom(pvar("Y", 1), vec![cst("a")])),
        );
        assert_eq!(check(&leak).unwrap_err().kind, CheckErrorKind::EigenpredicateViolation);
    }

    #[test]
    fn comprehension_instances_check() {
        let unary = PredAbstraction::new(vec!["x"], p1(var("x")));
        let j = check(&derive_comprehension(&unary)).unwrap();
        assert!(j.hypotheses.is_empty());
        // Binary instance from the worked substitution example.
        let binary = PredAbstraction::new(
            vec!["x", "y"],
            Formula::and(
                Formula::atom(pconst("P", 2), vec![var("x"), var("y")]),
                Formula::atom(pconst("Q", 2), vec![var("y"), cst("a")]),
            ),
        );
        let j2 = check(&derive_comprehension(&binary)).unwrap();
        assert!(matches!(j2.conclusion, Formula::ExistsPred { arity: 2, .. }));
        // Nullary instance.
        let prop = PredAbstraction::new(vec![], patom("Q"));
        let j0 = check(&derive_comprehension(&prop)).unwrap();
        assert!(matches!(j0.conclusion, Formula::ExistsPred { arity: 0, .. }));
    }

    #[test]
    fn error_location_points_into_the_tree() {
        let a = patom("A");
        // Failure is in the right branch of an andI, under an impI.
        let bad = Proof::imp_i(
            "h",
            Proof::and_i(Proof::hyp("h", a.clone()), Proof::and_el(Proof::hyp("g", a))),
        );
        let e = check(&bad).unwrap_err();
        assert_eq!(e.location, vec![0, 1]);
    }

    #[test]
    fn elaborate_leaves_plain_proofs_unchanged() {
        let a = patom("A");
        let p = Proof::imp_i("h", Proof::hyp("h", a));
        assert_eq!(elaborate(&p).unwrap(), p);
    }
}
