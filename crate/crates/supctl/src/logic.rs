//! Propositional building blocks: literals, clauses, cubes and assignments.
//!
//! A `Clause` is read as a disjunction of its literals, a `Cube` as a
//! conjunction. Both keep their literals sorted by variable index and free of
//! duplicates, so equality is set equality.

use std::fmt;

/// Index of a boolean solver variable.
pub type Var = u32;

/// A signed variable, packed into one word (`var << 1 | sign`).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn positive(var: Var) -> Lit {
        Lit(var << 1)
    }

    pub fn negative(var: Var) -> Lit {
        Lit(var << 1 | 1)
    }

    pub fn new(var: Var, negated: bool) -> Lit {
        Lit(var << 1 | negated as u32)
    }

    pub fn var(self) -> Var {
        self.0 >> 1
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    /// Packed code, usable as an index into literal-indexed tables.
    pub fn code(self) -> usize {
        self.0 as usize
    }

    /// Truth value of this literal under `value` for its variable.
    pub fn eval(self, value: bool) -> bool {
        value != self.is_negated()
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_negated() {
            write!(f, "!{}", self.var())
        } else {
            write!(f, "{}", self.var())
        }
    }
}

fn normalize(mut lits: Vec<Lit>) -> Vec<Lit> {
    lits.sort_unstable();
    lits.dedup();
    lits
}

/// Conjunction of literals, sorted by variable index, duplicate-free.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Cube(Vec<Lit>);

impl Cube {
    /// Panics in debug builds on a complementary pair: a cube with both
    /// polarities of a variable denotes no state at all.
    pub fn new(lits: Vec<Lit>) -> Cube {
        let lits = normalize(lits);
        debug_assert!(
            lits.windows(2).all(|w| w[0].var() != w[1].var()),
            "complementary literal pair in cube {:?}",
            lits
        );
        Cube(lits)
    }

    pub fn empty() -> Cube {
        Cube(Vec::new())
    }

    pub fn lits(&self) -> &[Lit] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, lit: Lit) -> bool {
        self.0.binary_search(&lit).is_ok()
    }

    /// Copy of this cube with one literal removed.
    pub fn without(&self, lit: Lit) -> Cube {
        Cube(self.0.iter().copied().filter(|&l| l != lit).collect())
    }

    /// The clause `!self`.
    pub fn negate(&self) -> Clause {
        Clause(self.0.iter().map(|&l| !l).collect())
    }

    /// True if every literal of `self` also appears in `other`.
    pub fn subsumes(&self, other: &Cube) -> bool {
        self.0.iter().all(|l| other.contains(*l))
    }

    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        self.0.iter().all(|l| l.eval(assignment[l.var() as usize]))
    }
}

impl fmt::Debug for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cube{:?}", self.0)
    }
}

impl FromIterator<Lit> for Cube {
    fn from_iter<T: IntoIterator<Item = Lit>>(iter: T) -> Cube {
        Cube::new(iter.into_iter().collect())
    }
}

/// Disjunction of literals, sorted by variable index, duplicate-free.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Clause(Vec<Lit>);

impl Clause {
    pub fn new(lits: Vec<Lit>) -> Clause {
        Clause(normalize(lits))
    }

    pub fn lits(&self) -> &[Lit] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The cube `!self`.
    pub fn negate(&self) -> Cube {
        Cube(self.0.iter().map(|&l| !l).collect())
    }

    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        self.0.iter().any(|l| l.eval(assignment[l.var() as usize]))
    }
}

impl fmt::Debug for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "clause{:?}", self.0)
    }
}

impl FromIterator<Lit> for Clause {
    fn from_iter<T: IntoIterator<Item = Lit>>(iter: T) -> Clause {
        Clause::new(iter.into_iter().collect())
    }
}
