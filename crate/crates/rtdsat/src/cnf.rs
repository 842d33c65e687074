//! CNF formulas: DIMACS parsing/writing, uniform random k-SAT generation,
//! and assignment evaluation.
//!
//! Literals are signed 1-based variable indices as in DIMACS: `3` is
//! variable 3 with positive polarity, `-3` the same variable negated.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum CnfError {
    #[error("malformed DIMACS header: {0}")]
    BadHeader(String),
    #[error("line {line}: literal {lit} out of range for {num_vars} variables")]
    LiteralOutOfRange {
        line: usize,
        lit: i64,
        num_vars: u32,
    },
    #[error("literal {lit} invalid for a formula with {num_vars} variables")]
    BadLiteral { lit: i32, num_vars: u32 },
    #[error("empty clause at clause index {0}")]
    EmptyClause(usize),
    #[error("clause count mismatch: header declares {declared}, found {found}")]
    ClauseCountMismatch { declared: usize, found: usize },
    #[error("unterminated final clause (missing trailing 0)")]
    UnterminatedClause,
    #[error("line {line}: cannot parse token {token:?}")]
    BadToken { line: usize, token: String },
    #[error("clause width k={k} exceeds variable count {num_vars}")]
    WidthExceedsVars { k: u32, num_vars: u32 },
    #[error("assignment has {got} variables, formula has {expected}")]
    DimensionMismatch { got: usize, expected: u32 },
    #[error("num_vars must be positive")]
    NoVariables,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A propositional formula in conjunctive normal form.
///
/// Immutable after construction, so it can be shared freely across
/// concurrent solver workers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: u32,
    clauses: Vec<Vec<i32>>,
}

impl CnfFormula {
    /// Builds a formula, validating every clause against the invariants:
    /// literals in range, no empty clause.
    pub fn new(num_vars: u32, clauses: Vec<Vec<i32>>) -> Result<Self, CnfError> {
        if num_vars == 0 {
            return Err(CnfError::NoVariables);
        }
        for (i, clause) in clauses.iter().enumerate() {
            if clause.is_empty() {
                return Err(CnfError::EmptyClause(i));
            }
            for &lit in clause {
                if lit == 0 || lit.unsigned_abs() > num_vars {
                    return Err(CnfError::BadLiteral { lit, num_vars });
                }
            }
        }
        Ok(CnfFormula { num_vars, clauses })
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    /// Indices of clauses containing some literal together with its
    /// negation. The generator never produces these; hand-written DIMACS
    /// may, and callers typically want to warn about them.
    pub fn tautological_clauses(&self) -> Vec<usize> {
        self.clauses
            .iter()
            .enumerate()
            .filter(|(_, c)| c.iter().any(|&l| c.contains(&-l)))
            .map(|(i, _)| i)
            .collect()
    }
}

/// A total truth assignment, one boolean per variable (1-based access).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    pub fn new(values: Vec<bool>) -> Self {
        Assignment { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value of variable `var` (1-based).
    #[inline]
    pub fn value(&self, var: u32) -> bool {
        self.values[(var - 1) as usize]
    }

    /// True iff literal `lit` is satisfied under this assignment.
    #[inline]
    pub fn satisfies(&self, lit: i32) -> bool {
        self.value(lit.unsigned_abs()) == (lit > 0)
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }
}

/// Number of clauses with no satisfied literal; 0 iff `a` is a model.
pub fn count_unsat(formula: &CnfFormula, a: &Assignment) -> Result<usize, CnfError> {
    if a.len() != formula.num_vars as usize {
        return Err(CnfError::DimensionMismatch {
            got: a.len(),
            expected: formula.num_vars,
        });
    }
    Ok(formula
        .clauses
        .iter()
        .filter(|c| !c.iter().any(|&l| a.satisfies(l)))
        .count())
}

/// Parses DIMACS CNF. Tolerates comments, blank lines, clauses spanning
/// lines and a missing final newline; rejects header mismatches outright
/// since silently "fixing" a benchmark would corrupt RTD comparisons.
pub fn parse_dimacs<R: BufRead>(reader: R) -> Result<CnfFormula, CnfError> {
    let mut num_vars: u32 = 0;
    let mut declared_clauses: usize = 0;
    let mut saw_header = false;
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    let mut current: Vec<i32> = Vec::new();

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('p') {
            if saw_header {
                return Err(CnfError::BadHeader("duplicate 'p' line".into()));
            }
            let mut parts = trimmed.split_whitespace();
            let (p, fmt) = (parts.next(), parts.next());
            if p != Some("p") || fmt != Some("cnf") {
                return Err(CnfError::BadHeader(trimmed.into()));
            }
            num_vars = parts
                .next()
                .and_then(|t| t.parse().ok())
                .filter(|&v| v <= i32::MAX as u32) // literals are i32
                .ok_or_else(|| CnfError::BadHeader(trimmed.to_string()))?;
            declared_clauses = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| CnfError::BadHeader(trimmed.to_string()))?;
            if parts.next().is_some() {
                return Err(CnfError::BadHeader(trimmed.into()));
            }
            if num_vars == 0 {
                return Err(CnfError::NoVariables);
            }
            saw_header = true;
            continue;
        }
        if !saw_header {
            return Err(CnfError::BadHeader(format!(
                "clause data before 'p cnf' header: {trimmed}"
            )));
        }
        for token in trimmed.split_whitespace() {
            let lit: i64 = token.parse().map_err(|_| CnfError::BadToken {
                line: lineno,
                token: token.to_string(),
            })?;
            if lit == 0 {
                if current.is_empty() {
                    return Err(CnfError::EmptyClause(clauses.len()));
                }
                clauses.push(std::mem::take(&mut current));
            } else {
                if lit.unsigned_abs() > num_vars as u64 {
                    return Err(CnfError::LiteralOutOfRange {
                        line: lineno,
                        lit,
                        num_vars,
                    });
                }
                current.push(lit as i32);
            }
        }
    }
    if !saw_header {
        return Err(CnfError::BadHeader("missing 'p cnf' line".into()));
    }
    if !current.is_empty() {
        return Err(CnfError::UnterminatedClause);
    }
    if clauses.len() != declared_clauses {
        return Err(CnfError::ClauseCountMismatch {
            declared: declared_clauses,
            found: clauses.len(),
        });
    }
    CnfFormula::new(num_vars, clauses)
}

/// Writes the formula in DIMACS CNF; `parse_dimacs` round-trips it.
pub fn write_dimacs<W: Write>(formula: &CnfFormula, mut w: W) -> io::Result<()> {
    writeln!(w, "p cnf {} {}", formula.num_vars, formula.clauses.len())?;
    for clause in &formula.clauses {
        for &lit in clause {
            write!(w, "{lit} ")?;
        }
        writeln!(w, "0")?;
    }
    Ok(())
}

/// Generates uniform random k-SAT: `round(ratio * num_vars)` clauses, each
/// with `k` distinct variables drawn uniformly without replacement and
/// negated independently with probability 1/2. Duplicate clauses may occur
/// (clause-level sampling is with replacement, the standard uniform model).
/// Deterministic given `seed`.
pub fn generate_uniform_ksat(
    num_vars: u32,
    k: u32,
    ratio: f64,
    seed: u64,
) -> Result<CnfFormula, CnfError> {
    if num_vars == 0 || num_vars > i32::MAX as u32 {
        return Err(CnfError::NoVariables);
    }
    if k > num_vars {
        return Err(CnfError::WidthExceedsVars { k, num_vars });
    }
    let num_clauses = (ratio * num_vars as f64).round() as usize;
    let mut rng = SplitMix64::new(seed);
    // Reusable pool for partial Fisher-Yates; stays permuted across clauses,
    // which is fine since any permutation is a valid pool.
    let mut pool: Vec<u32> = (1..=num_vars).collect();
    let mut clauses = Vec::with_capacity(num_clauses);
    for _ in 0..num_clauses {
        let mut clause = Vec::with_capacity(k as usize);
        for j in 0..k as usize {
            let pick = j + rng.below((num_vars as usize - j) as u64) as usize;
            pool.swap(j, pick);
            let var = pool[j] as i32;
            clause.push(if rng.next_bool() { var } else { -var });
        }
        clauses.push(clause);
    }
    Ok(CnfFormula { num_vars, clauses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn parse(s: &str) -> Result<CnfFormula, CnfError> {
        parse_dimacs(s.as_bytes())
    }

    #[test]
    fn parses_basic_formula() {
        let f = parse("p cnf 2 2\n1 -2 0\n2 0\n").unwrap();
        assert_eq!(f.num_vars(), 2);
        assert_eq!(f.clauses(), &[vec![1, -2], vec![2]]);
    }

    #[test]
    fn rejects_empty_clause() {
        assert!(matches!(
            parse("p cnf 1 1\n0\n"),
            Err(CnfError::EmptyClause(_))
        ));
    }

    #[test]
    fn tolerates_comments_and_missing_trailing_newline() {
        let f = parse("c comment\np cnf 3 1\n1 2 3 0").unwrap();
        assert_eq!(f.num_vars(), 3);
        assert_eq!(f.num_clauses(), 1);
    }

    #[test]
    fn tolerates_clause_spanning_lines() {
        let f = parse("p cnf 3 2\n1 2\n3 0 -1\n-2 0\n").unwrap();
        assert_eq!(f.clauses(), &[vec![1, 2, 3], vec![-1, -2]]);
    }

    #[test]
    fn rejects_count_mismatch_and_out_of_range() {
        assert!(matches!(
            parse("p cnf 2 2\n1 0\n"),
            Err(CnfError::ClauseCountMismatch {
                declared: 2,
                found: 1
            })
        ));
        assert!(matches!(
            parse("p cnf 2 1\n3 0\n"),
            Err(CnfError::LiteralOutOfRange { .. })
        ));
        assert!(matches!(
            parse("p cnf 2 1\n1 2\n"),
            Err(CnfError::UnterminatedClause)
        ));
        assert!(matches!(
            parse("p xnf 2 1\n1 0\n"),
            Err(CnfError::BadHeader(_))
        ));
    }

    #[test]
    fn warns_on_tautology_without_rejecting() {
        let f = parse("p cnf 2 1\n1 -1 0\n").unwrap();
        assert_eq!(f.tautological_clauses(), vec![0]);
    }

    #[test]
    fn dimacs_round_trip() {
        let f = generate_uniform_ksat(40, 3, 4.2, 11).unwrap();
        let mut buf = Vec::new();
        write_dimacs(&f, &mut buf).unwrap();
        let g = parse_dimacs(buf.as_slice()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn generator_clause_counts_match_instance_families() {
        // Clause counts from the unif-k3-r4.2 / unif-k5-r20 families.
        let f = generate_uniform_ksat(30_000, 3, 4.2, 1).unwrap();
        assert_eq!(f.num_clauses(), 126_000);
        let f = generate_uniform_ksat(2_000, 5, 20.0, 1).unwrap();
        assert_eq!(f.num_clauses(), 40_000);
    }

    #[test]
    fn generator_is_seed_deterministic_and_clauses_are_wide() {
        let a = generate_uniform_ksat(10, 3, 4.2, 7).unwrap();
        let b = generate_uniform_ksat(10, 3, 4.2, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_clauses(), 42);
        for clause in a.clauses() {
            assert_eq!(clause.len(), 3);
            let mut vars: Vec<u32> = clause.iter().map(|l| l.unsigned_abs()).collect();
            vars.sort_unstable();
            vars.dedup();
            assert_eq!(vars.len(), 3, "variables must be distinct");
        }
        let c = generate_uniform_ksat(10, 3, 4.2, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generator_rejects_k_above_num_vars() {
        assert!(matches!(
            generate_uniform_ksat(2, 3, 1.0, 0),
            Err(CnfError::WidthExceedsVars { .. })
        ));
    }

    #[test]
    fn count_unsat_basics() {
        let f = CnfFormula::new(2, vec![vec![1, -2], vec![2]]).unwrap();
        let a = Assignment::new(vec![true, true]);
        assert_eq!(count_unsat(&f, &a).unwrap(), 0);

        let contradiction = CnfFormula::new(1, vec![vec![1], vec![-1]]).unwrap();
        for v in [true, false] {
            assert_eq!(
                count_unsat(&contradiction, &Assignment::new(vec![v])).unwrap(),
                1
            );
        }

        assert!(matches!(
            count_unsat(&f, &Assignment::new(vec![true])),
            Err(CnfError::DimensionMismatch { .. })
        ));
    }

    // Independent evaluator used as the brute-force oracle below: walks
    // literals with explicit index arithmetic instead of Assignment helpers.
    fn unsat_oracle(f: &CnfFormula, bits: u32) -> usize {
        let mut n = 0;
        for clause in f.clauses() {
            let mut sat = false;
            for &l in clause {
                let idx = l.unsigned_abs() - 1;
                let val = bits >> idx & 1 == 1;
                if val == (l > 0) {
                    sat = true;
                    break;
                }
            }
            if !sat {
                n += 1;
            }
        }
        n
    }

    #[test]
    fn count_unsat_agrees_with_exhaustive_oracle() {
        for seed in 0..4 {
            let v = 10;
            let f = generate_uniform_ksat(v, 3, 4.2, seed).unwrap();
            for bits in 0..1u32 << v {
                let a = Assignment::new((0..v).map(|i| bits >> i & 1 == 1).collect());
                assert_eq!(count_unsat(&f, &a).unwrap(), unsat_oracle(&f, bits));
            }
        }
    }

    #[test]
    fn count_unsat_invariant_under_clause_reordering() {
        let f = generate_uniform_ksat(12, 3, 4.0, 3).unwrap();
        let mut reordered = f.clauses().to_vec();
        reordered.reverse();
        let g = CnfFormula::new(12, reordered).unwrap();
        let mut rng = SplitMix64::new(5);
        for _ in 0..50 {
            let a = Assignment::new((0..12).map(|_| rng.next_bool()).collect());
            assert_eq!(count_unsat(&f, &a).unwrap(), count_unsat(&g, &a).unwrap());
        }
    }
}
