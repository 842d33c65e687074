//! Shared test oracles: a tiny complete DPLL solver used to certify
//! satisfiability independently of the local-search solver.

use rtdsat::cnf::CnfFormula;

/// Complete satisfiability check by DPLL with unit propagation and
/// most-frequent-literal branching. Exponential in the worst case; meant
/// for oracle duty on small instances only.
pub fn dpll_satisfiable(formula: &CnfFormula) -> bool {
    dpll(formula.clauses().to_vec())
}

fn dpll(mut clauses: Vec<Vec<i32>>) -> bool {
    // Unit propagation to fixpoint.
    while let Some(unit) = clauses.iter().find(|c| c.len() == 1).map(|c| c[0]) {
        match assign(&clauses, unit) {
            Some(rest) => clauses = rest,
            None => return false,
        }
    }
    if clauses.is_empty() {
        return true;
    }
    let lit = most_frequent_literal(&clauses);
    if let Some(rest) = assign(&clauses, lit) {
        if dpll(rest) {
            return true;
        }
    }
    match assign(&clauses, -lit) {
        Some(rest) => dpll(rest),
        None => false,
    }
}

/// Applies a literal: drops satisfied clauses, strips the negation from
/// the rest. `None` when an empty clause (conflict) appears.
fn assign(clauses: &[Vec<i32>], lit: i32) -> Option<Vec<Vec<i32>>> {
    let mut out = Vec::with_capacity(clauses.len());
    for clause in clauses {
        if clause.contains(&lit) {
            continue;
        }
        let reduced: Vec<i32> = clause.iter().copied().filter(|&l| l != -lit).collect();
        if reduced.is_empty() {
            return None;
        }
        out.push(reduced);
    }
    Some(out)
}

fn most_frequent_literal(clauses: &[Vec<i32>]) -> i32 {
    let mut counts: std::collections::HashMap<i32, u32> = std::collections::HashMap::new();
    for clause in clauses {
        for &l in clause {
            *counts.entry(l).or_insert(0) += 1;
        }
    }
    counts
        .into_iter()
        .max_by_key(|&(l, c)| (c, -l))
        .map(|(l, _)| l)
        .expect("clauses are nonempty")
}

#[cfg(test)]
mod self_tests {
    use super::*;
    use rtdsat::cnf::CnfFormula;

    #[test]
    fn dpll_decides_tiny_formulas() {
        let sat = CnfFormula::new(2, vec![vec![1, 2], vec![-1, 2], vec![1, -2]]).unwrap();
        assert!(dpll_satisfiable(&sat));
        let unsat =
            CnfFormula::new(2, vec![vec![1, 2], vec![1, -2], vec![-1, 2], vec![-1, -2]]).unwrap();
        assert!(!dpll_satisfiable(&unsat));
    }
}
