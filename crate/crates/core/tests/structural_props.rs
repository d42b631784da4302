//! Property tests for the structural analyzer over randomly generated
//! mechanism shapes.

use std::collections::BTreeSet;

use proptest::prelude::*;
use variata_core::scm::Role;
use variata_core::shape::{Link, MechanismShape, Scale, ShapeTerm, ShapeVar};
use variata_core::structural::{
    check_granular, check_granular_clauses, Criterion, Verdict,
};

#[derive(Debug, Clone)]
struct RawVar {
    args: Vec<usize>,          // indices into the name pool
    term_mask: Vec<Vec<bool>>, // term -> which args it couples
    nonlinear: Vec<Vec<bool>>, // term -> which coupled args are non-linear
}

fn names() -> Vec<(String, Role)> {
    vec![
        ("Z1".into(), Role::Z),
        ("Z2".into(), Role::Z),
        ("X".into(), Role::X),
        ("W1".into(), Role::W),
        ("W2".into(), Role::W),
        ("Y".into(), Role::Y),
    ]
}

/// Builds a valid shape from raw random structure: every variable may read
/// any earlier variable; term masks are repaired so their union covers the
/// argument set.
fn build_shape(raws: Vec<RawVar>) -> MechanismShape {
    let pool = names();
    let mut vars = Vec::new();
    for (vi, (name, role)) in pool.iter().enumerate() {
        let raw = &raws[vi];
        let args: BTreeSet<String> = raw
            .args
            .iter()
            .filter(|&&a| a < vi)
            .map(|&a| pool[a].0.clone())
            .collect();
        let arg_list: Vec<String> = args.iter().cloned().collect();
        let mut terms = Vec::new();
        let mut covered: BTreeSet<String> = BTreeSet::new();
        for (mask, nl) in raw.term_mask.iter().zip(&raw.nonlinear) {
            let mut t_args = Vec::new();
            let mut t_nl = Vec::new();
            for (j, a) in arg_list.iter().enumerate() {
                if mask.get(j).copied().unwrap_or(false) {
                    t_args.push(a.clone());
                    if nl.get(j).copied().unwrap_or(false) {
                        t_nl.push(a.clone());
                    }
                }
            }
            if !t_args.is_empty() {
                covered.extend(t_args.iter().cloned());
                terms.push(ShapeTerm::new(t_args, t_nl));
            }
        }
        for a in &arg_list {
            if !covered.contains(a) {
                terms.push(ShapeTerm::new([a.clone()], []));
            }
        }
        if terms.is_empty() {
            terms.push(ShapeTerm::new(Vec::<String>::new(), Vec::<String>::new()));
        }
        vars.push(ShapeVar {
            name: name.clone(),
            role: *role,
            args,
            terms,
            link: Link::Identity,
        });
    }
    MechanismShape::new("random".into(), vars).expect("repaired shape is valid")
}

fn raw_var_strategy() -> impl Strategy<Value = RawVar> {
    (
        proptest::collection::vec(0usize..6, 0..5),
        proptest::collection::vec(proptest::collection::vec(any::<bool>(), 0..5), 0..4),
        proptest::collection::vec(proptest::collection::vec(any::<bool>(), 0..5), 0..4),
    )
        .prop_map(|(args, term_mask, nonlinear)| RawVar { args, term_mask, nonlinear })
}

fn shape_strategy() -> impl Strategy<Value = MechanismShape> {
    proptest::collection::vec(raw_var_strategy(), 6..=6).prop_map(build_shape)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn trees_agree_with_clause_lists(shape in shape_strategy()) {
        for c in [Criterion::DeSe, Criterion::IeSe, Criterion::DeIeSe] {
            let tree = check_granular(&shape, c, Scale::Mean).unwrap();
            let clauses = check_granular_clauses(&shape, c, Scale::Mean).unwrap();
            prop_assert_eq!(
                tree.verdict, clauses.verdict,
                "{:?}: tree said {:?} ({}), clauses said {:?} ({})",
                c, tree.verdict, tree.witness, clauses.verdict, clauses.witness
            );
        }
    }

    #[test]
    fn three_way_interaction_needs_both_pathways(shape in shape_strategy()) {
        // No mediator responds to X, or no mediator feeds the outcome:
        // the three-way criterion cannot fire.
        let x_feeds_w = ["W1", "W2"]
            .iter()
            .any(|w| shape.var(w).map_or(false, |v| v.args.contains("X")));
        let w_feeds_y = ["W1", "W2"].iter().any(|w| shape.y().args.contains(*w));
        if !x_feeds_w || !w_feeds_y {
            let v = check_granular(&shape, Criterion::DeIeSe, Scale::Mean).unwrap();
            prop_assert_eq!(v.verdict, Verdict::NoInteraction, "{}", v.witness);
        }
    }

    #[test]
    fn no_back_door_silences_all_spurious_criteria(shape in shape_strategy()) {
        let zx = ["Z1", "Z2"].iter().any(|z| shape.x().args.contains(*z));
        if !zx {
            for c in [Criterion::TeSe, Criterion::DeSe, Criterion::IeSe, Criterion::DeIeSe] {
                let v = check_granular(&shape, c, Scale::Mean).unwrap();
                prop_assert_eq!(v.verdict, Verdict::NoInteraction, "{:?}: {}", c, v.witness);
            }
        }
    }
}
