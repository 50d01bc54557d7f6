//! Builders for the defined notions the checker and corpus work with:
//! Leibniz equality, singleton ("individual concept") predicates, the
//! translations between properties of individuals and properties of
//! concepts, Dedekind finiteness, and the second-order encodings of the
//! simplest branching quantifier.

use thiserror::Error;

use crate::syntax::{
    fresh_name, pconst, pvar, Formula, PredAbstraction, PredRef, SecondOrderAbstraction,
    Signature, Term,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("arity mismatch: {0}")]
pub struct ArityError(pub String);

/// Whether an individual concept is required to be inhabited.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    /// Exactly one witness: uniqueness plus existence.
    Strict,
    /// At most one witness: the existence conjunct is dropped.
    Weak,
}

/// Leibniz equality `t = u`, spelled `forall2 X:1. (X(t) -> X(u))`.
/// Negation makes the one-directional version symmetric, so no biconditional
/// is needed.
pub fn leibniz_eq(t: &Term, u: &Term) -> Formula {
    let x = pvar("X", 1);
    Formula::forall_pred(
        "X",
        1,
        Formula::implies(
            Formula::atom(x.clone(), vec![t.clone()]),
            Formula::atom(x, vec![u.clone()]),
        ),
    )
}

/// The property of being equal to `t`: `lam y. t = y`.
pub fn concept_of(t: &Term) -> PredAbstraction {
    let avoid = std::iter::once(t.name().to_owned()).collect();
    let y = fresh_name("y", &avoid);
    PredAbstraction::new(vec![&y], leibniz_eq(t, &Term::Var(y.clone())))
}

/// States that a unary abstraction is an individual concept: it holds of at
/// most one individual, and of at least one when `Strictness::Strict`.
pub fn is_concept(abs: &PredAbstraction, strictness: Strictness) -> Result<Formula, ArityError> {
    if abs.arity() != 1 {
        return Err(ArityError(format!(
            "is_concept expects a unary abstraction, got arity {}",
            abs.arity()
        )));
    }
    let mut avoid = abs.free_ind_vars();
    let x = fresh_name("x", &avoid);
    avoid.insert(x.clone());
    let y = fresh_name("y", &avoid);
    avoid.insert(y.clone());
    let z = fresh_name("z", &avoid);
    let uniq = Formula::forall_ind(
        &x,
        Formula::forall_ind(
            &y,
            Formula::implies(
                Formula::and(
                    abs.apply(&[Term::Var(x.clone())]),
                    abs.apply(&[Term::Var(y.clone())]),
                ),
                leibniz_eq(&Term::Var(x.clone()), &Term::Var(y.clone())),
            ),
        ),
    );
    Ok(match strictness {
        Strictness::Strict => Formula::and(
            uniq,
            Formula::exists_ind(&z, abs.apply(&[Term::Var(z.clone())])),
        ),
        Strictness::Weak => uniq,
    })
}

/// `is_concept` for a bare unary predicate variable.
pub fn concept_formula(pred_var: &str, strictness: Strictness) -> Formula {
    is_concept(&PredAbstraction::of_pred_var(pred_var, 1), strictness)
        .expect("predicate-variable abstraction is unary")
}

/// Turns a property of concepts into a property of individuals:
/// `lam x. exists2 X:1. ((C(X) & X(x)) & phi(X))`.
pub fn lower(phi: &SecondOrderAbstraction) -> PredAbstraction {
    lower_with(phi, Strictness::Strict)
}

/// `lower` with an explicit concept strength; the weak variant is what the
/// possibly-empty-concept comparison evaluates.
pub fn lower_with(phi: &SecondOrderAbstraction, strictness: Strictness) -> PredAbstraction {
    let avoid = crate::syntax::free_ind_vars(phi.body());
    let x = fresh_name("x", &avoid);
    let xp = phi.param();
    let body = Formula::exists_pred(
        xp,
        1,
        Formula::and(
            Formula::and(
                concept_formula(xp, strictness),
                Formula::atom(pvar(xp, 1), vec![Term::Var(x.clone())]),
            ),
            phi.body().clone(),
        ),
    );
    PredAbstraction::new(vec![&x], body)
}

/// Turns a property of individuals into a property of concepts:
/// `X |-> exists x. (X(x) & psi(x))`.
pub fn raise(psi: &PredAbstraction) -> Result<SecondOrderAbstraction, ArityError> {
    if psi.arity() != 1 {
        return Err(ArityError(format!(
            "raise expects a unary abstraction, got arity {}",
            psi.arity()
        )));
    }
    let pred_avoid: std::collections::BTreeSet<String> =
        psi.free_pred_vars().into_iter().map(|(n, _)| n).collect();
    let xp = fresh_name("X", &pred_avoid);
    let x = fresh_name("x", &psi.free_ind_vars());
    let body = Formula::exists_ind(
        &x,
        Formula::and(
            Formula::atom(pvar(&xp, 1), vec![Term::Var(x.clone())]),
            psi.apply(&[Term::Var(x.clone())]),
        ),
    );
    Ok(SecondOrderAbstraction::new(&xp, body))
}

/// "Any injective function is surjective", over binary relations: a total,
/// single-valued, injective relation is onto. Equality is Leibniz-expanded.
/// Totality is required explicitly; without it the empty relation would be
/// a vacuous counterexample on every nonempty domain.
pub fn dedekind_finiteness() -> Formula {
    let x2 = pvar("X", 2);
    let rel =
        |a: &str, b: &str| Formula::atom(x2.clone(), vec![Term::Var(a.into()), Term::Var(b.into())]);
    let eq = |a: &str, b: &str| leibniz_eq(&Term::Var(a.into()), &Term::Var(b.into()));
    let closure3 =
        |f: Formula| Formula::forall_ind("x", Formula::forall_ind("y", Formula::forall_ind("z", f)));
    let total = Formula::forall_ind("x", Formula::exists_ind("y", rel("x", "y")));
    let single_valued = closure3(Formula::implies(
        Formula::and(rel("x", "y"), rel("x", "z")),
        eq("y", "z"),
    ));
    let injective = closure3(Formula::implies(
        Formula::and(rel("y", "x"), rel("z", "x")),
        eq("y", "z"),
    ));
    let surjective = Formula::forall_ind("w", Formula::exists_ind("u", rel("u", "w")));
    Formula::forall_pred(
        "X",
        2,
        Formula::implies(
            Formula::and_all(vec![total, single_valued, injective]),
            surjective,
        ),
    )
}

/// The three predicate constants of the "team / board / know each other"
/// sentence: a unary team predicate, a unary board predicate, and a binary
/// acquaintance predicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HenkinSignature {
    team: PredRef,
    board: PredRef,
    knows: PredRef,
}

impl HenkinSignature {
    pub fn new(team: &str, board: &str, knows: &str) -> HenkinSignature {
        HenkinSignature {
            team: pconst(team, 1),
            board: pconst(board, 1),
            knows: pconst(knows, 2),
        }
    }

    pub fn team(&self) -> &PredRef {
        &self.team
    }

    pub fn board(&self) -> &PredRef {
        &self.board
    }

    pub fn knows(&self) -> &PredRef {
        &self.knows
    }

    /// The plain signature over which models of this sentence are enumerated.
    pub fn signature(&self) -> Signature {
        Signature {
            consts: vec![],
            preds: vec![
                (self.team.name().to_owned(), 1),
                (self.board.name().to_owned(), 1),
                (self.knows.name().to_owned(), 2),
            ],
        }
    }

    /// Selector names for the two existentially quantified binary predicates,
    /// kept clear of the signature's own names.
    fn selector_names(&self) -> (String, String) {
        let avoid: std::collections::BTreeSet<String> = [
            self.team.name().to_owned(),
            self.board.name().to_owned(),
            self.knows.name().to_owned(),
        ]
        .into_iter()
        .collect();
        let f = fresh_name("F", &avoid);
        let mut avoid2 = avoid;
        avoid2.insert(f.clone());
        (f, fresh_name("G", &avoid2))
    }
}

impl Default for HenkinSignature {
    fn default() -> Self {
        HenkinSignature::new("T", "B", "K")
    }
}

fn check_selector(r: &PredRef, role: &str) -> Result<(), ArityError> {
    if r.arity() != 2 {
        return Err(ArityError(format!(
            "selector {role} must be binary, got {}/{}",
            r.name(),
            r.arity()
        )));
    }
    Ok(())
}

/// The matrix `T(x) & B(y) & F(x,x') & G(y,y') -> K(x',y')`, with free
/// variables exactly x, x', y, y'.
pub fn build_phi(f: &PredRef, g: &PredRef, sig: &HenkinSignature) -> Result<Formula, ArityError> {
    check_selector(f, "F")?;
    check_selector(g, "G")?;
    let v = |n: &str| Term::Var(n.to_owned());
    Ok(Formula::implies(
        Formula::and_all(vec![
            Formula::atom(sig.team.clone(), vec![v("x")]),
            Formula::atom(sig.board.clone(), vec![v("y")]),
            Formula::atom(f.clone(), vec![v("x"), v("x'")]),
            Formula::atom(g.clone(), vec![v("y"), v("y'")]),
        ]),
        Formula::atom(sig.knows.clone(), vec![v("x'"), v("y'")]),
    ))
}

/// The selector condition: both selectors are left-total on their set, and
/// the universally closed matrix holds. Only F and G stay free.
pub fn build_psi(f: &PredRef, g: &PredRef, sig: &HenkinSignature) -> Result<Formula, ArityError> {
    check_selector(f, "F")?;
    check_selector(g, "G")?;
    let v = |n: &str| Term::Var(n.to_owned());
    let c1 = Formula::forall_ind(
        "x",
        Formula::exists_ind(
            "x'",
            Formula::implies(
                Formula::atom(sig.team.clone(), vec![v("x")]),
                Formula::atom(f.clone(), vec![v("x"), v("x'")]),
            ),
        ),
    );
    let c2 = Formula::forall_ind(
        "y",
        Formula::exists_ind(
            "y'",
            Formula::implies(
                Formula::atom(sig.board.clone(), vec![v("y")]),
                Formula::atom(g.clone(), vec![v("y"), v("y'")]),
            ),
        ),
    );
    let c3 = close_xxyy(build_phi(f, g, sig)?);
    Ok(Formula::and_all(vec![c1, c2, c3]))
}

fn close_xxyy(f: Formula) -> Formula {
    Formula::forall_ind(
        "x",
        Formula::forall_ind(
            "x'",
            Formula::forall_ind("y", Formula::forall_ind("y'", f)),
        ),
    )
}

/// Which second-order rendering of the branching sentence to expand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HenkinVariant {
    /// Selectors constrained only on their first argument.
    Plain,
    /// Additionally requires selected representatives to lie in the proper
    /// set (`T` for x', `B` for y').
    Sorted,
}

/// The closed second-order sentence `exists2 F:2. exists2 G:2. Psi(F,G)`,
/// or its sorted variant.
pub fn expand_henkin(sig: &HenkinSignature, variant: HenkinVariant) -> Formula {
    let (fname, gname) = sig.selector_names();
    let f = pvar(&fname, 2);
    let g = pvar(&gname, 2);
    let v = |n: &str| Term::Var(n.to_owned());
    let body = match variant {
        HenkinVariant::Plain => {
            build_psi(&f, &g, sig).expect("selectors are binary by construction")
        }
        HenkinVariant::Sorted => {
            let c1 = Formula::forall_ind(
                "x",
                Formula::exists_ind(
                    "x'",
                    Formula::implies(
                        Formula::atom(sig.team.clone(), vec![v("x")]),
                        Formula::and(
                            Formula::atom(f.clone(), vec![v("x"), v("x'")]),
                            Formula::atom(sig.team.clone(), vec![v("x'")]),
                        ),
                    ),
                ),
            );
            let c2 = Formula::forall_ind(
                "y",
                Formula::exists_ind(
                    "y'",
                    Formula::implies(
                        Formula::atom(sig.board.clone(), vec![v("y")]),
                        Formula::and(
                            Formula::atom(g.clone(), vec![v("y"), v("y'")]),
                            Formula::atom(sig.board.clone(), vec![v("y'")]),
                        ),
                    ),
                ),
            );
            let c3 = close_xxyy(Formula::implies(
                Formula::and_all(vec![
                    Formula::atom(sig.team.clone(), vec![v("x")]),
                    Formula::atom(sig.team.clone(), vec![v("x'")]),
                    Formula::atom(sig.board.clone(), vec![v("y")]),
                    Formula::atom(sig.board.clone(), vec![v("y'")]),
                    Formula::atom(f.clone(), vec![v("x"), v("x'")]),
                    Formula::atom(g.clone(), vec![v("y"), v("y'")]),
                ]),
                Formula::atom(sig.knows.clone(), vec![v("x'"), v("y'")]),
            ));
            Formula::and_all(vec![c1, c2, c3])
        }
    };
    Formula::exists_pred(&fname, 2, Formula::exists_pred(&gname, 2, body))
}

/// The two linear first-order prefix orders over the matrix
/// `T(x) & B(y) -> K(x',y')`.
pub fn linear_readings(sig: &HenkinSignature) -> (Formula, Formula) {
    let v = |n: &str| Term::Var(n.to_owned());
    let matrix = Formula::implies(
        Formula::and(
            Formula::atom(sig.team.clone(), vec![v("x")]),
            Formula::atom(sig.board.clone(), vec![v("y")]),
        ),
        Formula::atom(sig.knows.clone(), vec![v("x'"), v("y'")]),
    );
    let first = Formula::forall_ind(
        "x",
        Formula::exists_ind(
            "x'",
            Formula::forall_ind("y", Formula::exists_ind("y'", matrix.clone())),
        ),
    );
    let second = Formula::forall_ind(
        "y",
        Formula::exists_ind(
            "y'",
            Formula::forall_ind("x", Formula::exists_ind("x'", matrix)),
        ),
    );
    (first, second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{alpha_eq, free_ind_vars, free_pred_vars, var};
    use std::collections::BTreeSet;

    #[test]
    fn leibniz_shape() {
        let f = leibniz_eq(&var("x"), &var("y"));
        let expected = Formula::forall_pred(
            "X",
            1,
            Formula::implies(
                Formula::atom(pvar("X", 1), vec![var("x")]),
                Formula::atom(pvar("X", 1), vec![var("y")]),
            ),
        );
        assert_eq!(f, expected);
        assert_eq!(
            free_ind_vars(&f),
            BTreeSet::from(["x".to_owned(), "y".to_owned()])
        );
    }

    #[test]
    fn concept_of_avoids_collision() {
        let c = concept_of(&var("y"));
        assert_eq!(c.params(), ["y1".to_owned()]);
        assert_eq!(c.free_ind_vars(), BTreeSet::from(["y".to_owned()]));
    }

    #[test]
    fn is_concept_arity_checked() {
        let abs = PredAbstraction::new(vec!["x", "y"], Formula::Bot);
        assert!(is_concept(&abs, Strictness::Strict).is_err());
    }

    #[test]
    fn is_concept_renames_around_free_x() {
        // E_x mentions x free, so the uniqueness binders must step aside.
        let c = concept_of(&var("x"));
        let f = is_concept(&c, Strictness::Strict).unwrap();
        assert_eq!(free_ind_vars(&f), BTreeSet::from(["x".to_owned()]));
    }

    #[test]
    fn phi_free_variables() {
        let sig = HenkinSignature::default();
        let phi = build_phi(&pvar("F", 2), &pvar("G", 2), &sig).unwrap();
        let expected: BTreeSet<String> = ["x", "x'", "y", "y'"]
            .into_iter()
            .map(str::to_owned)
            .collect();
        assert_eq!(free_ind_vars(&phi), expected);
    }

    #[test]
    fn psi_free_predicate_variables() {
        let sig = HenkinSignature::default();
        let psi = build_psi(&pvar("F", 2), &pvar("G", 2), &sig).unwrap();
        assert_eq!(
            free_pred_vars(&psi),
            BTreeSet::from([("F".to_owned(), 2), ("G".to_owned(), 2)])
        );
        assert!(free_ind_vars(&psi).is_empty());
    }

    #[test]
    fn expand_is_closed_and_definitional() {
        let sig = HenkinSignature::default();
        let plain = expand_henkin(&sig, HenkinVariant::Plain);
        assert!(free_pred_vars(&plain).is_empty());
        assert!(free_ind_vars(&plain).is_empty());
        let by_hand = Formula::exists_pred(
            "F",
            2,
            Formula::exists_pred(
                "G",
                2,
                build_psi(&pvar("F", 2), &pvar("G", 2), &sig).unwrap(),
            ),
        );
        assert!(alpha_eq(&plain, &by_hand));
    }

    #[test]
    fn selector_names_dodge_signature() {
        let sig = HenkinSignature::new("F", "G", "K");
        let plain = expand_henkin(&sig, HenkinVariant::Plain);
        // The bound selectors must not shadow the predicate constants F, G.
        match &plain {
            Formula::ExistsPred { var, .. } => assert_ne!(var, "F"),
            other => panic!("unexpected shape: {other:?}"),
        }
    }

    #[test]
    fn linear_readings_are_closed() {
        let sig = HenkinSignature::default();
        let (a, b) = linear_readings(&sig);
        assert!(free_ind_vars(&a).is_empty());
        assert!(free_ind_vars(&b).is_empty());
        assert_ne!(a, b);
    }

    #[test]
    fn dedekind_is_closed() {
        let f = dedekind_finiteness();
        assert!(free_ind_vars(&f).is_empty());
        assert!(free_pred_vars(&f).is_empty());
    }
}
