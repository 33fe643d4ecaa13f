use super::{BinaryProgram, QuadraticObjective, Relation, VarKind, VarLabel};
use crate::scalar::Coefficient;

/// Rewrites every `c·x_i·x_i` as `c·x_i` (exact because `x² = x` on {0,1}).
pub fn fold_binary_squares<C: Coefficient>(obj: &QuadraticObjective<C>) -> QuadraticObjective<C> {
    let mut out = QuadraticObjective {
        linear: obj.linear.clone(),
        quadratic: Vec::with_capacity(obj.quadratic.len()),
        constant: obj.constant.clone(),
    };
    for (a, b, c) in &obj.quadratic {
        if a == b {
            out.linear.push((*a, c.clone()));
        } else {
            out.quadratic.push((*a, *b, c.clone()));
        }
    }
    out.canonicalize();
    out
}

/// Replaces each cross product `q·x_i·x_j` by a fresh auxiliary `z` with
/// `z <= x_i`, `z <= x_j`, `z >= x_i + x_j - 1` and objective term `q·z`.
///
/// Squares are folded first, so the input may still carry diagonal terms.
/// New variables are appended after the originals in pair order, so the
/// first `p.var_count()` entries of any solution are the original variables.
pub fn linearize<C: Coefficient>(p: &BinaryProgram<C>) -> BinaryProgram<C> {
    let folded = fold_binary_squares(&p.objective);
    let mut out = BinaryProgram {
        name: p.name.clone(),
        variables: p.variables.clone(),
        objective: QuadraticObjective {
            linear: folded.linear.clone(),
            quadratic: Vec::new(),
            constant: folded.constant.clone(),
        },
        constraints: p.constraints.clone(),
    };
    let one = C::one();
    for (a, b, q) in &folded.quadratic {
        let z = out.add_var_of_kind(VarLabel::new("z", [a.0, b.0]), VarKind::Auxiliary);
        out.add_constraint([(z, one.clone()), (*a, -one.clone())], Relation::Le, C::zero());
        out.add_constraint([(z, one.clone()), (*b, -one.clone())], Relation::Le, C::zero());
        out.add_constraint(
            [(*a, one.clone()), (*b, one.clone()), (z, -one.clone())],
            Relation::Le,
            one.clone(),
        );
        out.objective.linear.push((z, q.clone()));
    }
    out.objective.canonicalize();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{evaluate, VarId};
    use crate::Rational;

    fn r(v: i64) -> Rational {
        Rational::from_integer(v)
    }

    #[test]
    fn square_becomes_linear() {
        let mut obj = QuadraticObjective::<Rational>::default();
        obj.add_quadratic(VarId(0), VarId(0), r(3));
        let folded = fold_binary_squares(&obj);
        assert!(folded.quadratic.is_empty());
        assert_eq!(folded.linear, vec![(VarId(0), r(3))]);
    }

    #[test]
    fn difference_square_folds_to_a_plus_b_minus_2ab() {
        let mut obj = QuadraticObjective::<Rational>::default();
        obj.add_squared_sum(&[(VarId(0), r(1)), (VarId(1), r(-1))], r(0));
        let folded = fold_binary_squares(&obj);
        assert_eq!(folded.linear, vec![(VarId(0), r(1)), (VarId(1), r(1))]);
        assert_eq!(folded.quadratic, vec![(VarId(0), VarId(1), r(-2))]);
    }

    #[test]
    fn single_cross_term_adds_one_var_and_three_rows() {
        let mut p = BinaryProgram::<Rational>::new("t");
        let a = p.add_var(VarLabel::new("a", []));
        let b = p.add_var(VarLabel::new("b", []));
        p.objective.add_quadratic(a, b, r(5));
        let lin = linearize(&p);
        assert_eq!(lin.var_count(), 3);
        assert_eq!(lin.constraints.len(), 3);
        assert!(lin.is_linear());
        assert_eq!(lin.variables[2].kind, VarKind::Auxiliary);

        // a = b = 1 forces z = 1, a = 0 forces z = 0.
        let ok = evaluate(&lin, &[true, true, true]).unwrap();
        assert!(ok.feasible);
        assert_eq!(ok.objective, r(5));
        assert!(!evaluate(&lin, &[true, true, false]).unwrap().feasible);
        assert!(!evaluate(&lin, &[false, true, true]).unwrap().feasible);
        assert!(evaluate(&lin, &[false, true, false]).unwrap().feasible);
    }
}
