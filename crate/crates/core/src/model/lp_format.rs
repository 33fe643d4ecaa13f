use std::fmt::Write;

use super::{BinaryProgram, LinearConstraint, VarId, VarKind};
use crate::scalar::Coefficient;

fn name<C>(p: &BinaryProgram<C>, v: VarId) -> String {
    let label = &p.variables[v.0].label;
    let mut s = label.kind.to_string();
    for sub in &label.subscripts {
        write!(s, "_{sub}").unwrap();
    }
    // labels are not guaranteed unique across kinds reused by callers
    write!(s, "#{}", v.0).unwrap();
    s
}

fn term<C: Coefficient>(out: &mut String, first: bool, c: &C, var: &str) {
    let neg = c.is_negative();
    let mag = if neg { -c.clone() } else { c.clone() };
    match (first, neg) {
        (true, true) => out.push_str("- "),
        (true, false) => {}
        (false, true) => out.push_str(" - "),
        (false, false) => out.push_str(" + "),
    }
    if !mag.is_one() {
        write!(out, "{mag} ").unwrap();
    }
    out.push_str(var);
}

fn row<C: Coefficient>(p: &BinaryProgram<C>, c: &LinearConstraint<C>) -> String {
    let mut s = String::new();
    if c.terms.is_empty() {
        s.push('0');
    }
    for (n, (v, coef)) in c.terms.iter().enumerate() {
        term(&mut s, n == 0, coef, &name(p, *v));
    }
    write!(s, " {} {}", c.relation, c.rhs).unwrap();
    s
}

/// Renders the program in CPLEX-style LP text: `minimize`, `subject to`,
/// `bounds` (auxiliaries), `binary`, `end`. One constraint per line.
pub fn write_lp<C: Coefficient>(p: &BinaryProgram<C>) -> String {
    let mut out = String::new();
    writeln!(out, "\\ {}", p.name).unwrap();
    out.push_str("minimize\n obj: ");
    let obj = &p.objective;
    let mut first = true;
    for (v, c) in &obj.linear {
        term(&mut out, first, c, &name(p, *v));
        first = false;
    }
    if !obj.quadratic.is_empty() {
        out.push_str(if first { "[ " } else { " + [ " });
        for (n, (a, b, c)) in obj.quadratic.iter().enumerate() {
            let doubled = c.clone() + c.clone();
            let pair = if a == b {
                format!("{} ^ 2", name(p, *a))
            } else {
                format!("{} * {}", name(p, *a), name(p, *b))
            };
            term(&mut out, n == 0, &doubled, &pair);
        }
        out.push_str(" ] / 2");
        first = false;
    }
    if !obj.constant.is_zero() || first {
        term(&mut out, first, &obj.constant, "");
    }
    out.push_str("\nsubject to\n");
    for (i, c) in p.constraints.iter().enumerate() {
        writeln!(out, " c{i}: {}", row(p, c)).unwrap();
    }
    let aux: Vec<_> = (0..p.var_count())
        .filter(|&i| p.variables[i].kind == VarKind::Auxiliary)
        .collect();
    if !aux.is_empty() {
        out.push_str("bounds\n");
        for i in &aux {
            writeln!(out, " 0 <= {} <= 1", name(p, VarId(*i))).unwrap();
        }
    }
    out.push_str("binary\n");
    for i in 0..p.var_count() {
        if p.variables[i].kind == VarKind::Binary {
            writeln!(out, " {}", name(p, VarId(i))).unwrap();
        }
    }
    out.push_str("end\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Relation, VarLabel};
    use crate::Rational;

    #[test]
    fn sections_in_order() {
        let mut p = BinaryProgram::<Rational>::new("demo");
        let a = p.add_var(VarLabel::new("x", [0, 1]));
        let b = p.add_var(VarLabel::new("x", [1, 1]));
        p.objective.add_linear(a, Rational::from_integer(3));
        p.objective.add_quadratic(a, b, Rational::from_integer(-2));
        p.add_constraint(
            [(a, Rational::from_integer(1)), (b, Rational::from_integer(1))],
            Relation::Le,
            Rational::from_integer(1),
        );
        let text = write_lp(&p);
        let minimize = text.find("minimize").unwrap();
        let st = text.find("subject to").unwrap();
        let bin = text.find("binary").unwrap();
        assert!(minimize < st && st < bin);
        assert!(text.contains(" c0: x_0_1#0 + x_1_1#1 <= 1"));
        assert!(text.contains("3 x_0_1#0 + [ - 4 x_0_1#0 * x_1_1#1 ] / 2"));
        assert!(text.ends_with("end\n"));
    }
}
