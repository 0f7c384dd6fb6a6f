use std::fmt;

use super::{Family, HoleId};

/// A total assignment: option index per hole, in hole order. Ordering is
/// lexicographic over (hole, option) indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Realisation(Vec<usize>);

impl Realisation {
    pub fn new(options: Vec<usize>) -> Self {
        Realisation(options)
    }

    pub fn options(&self) -> &[usize] {
        &self.0
    }

    pub fn option(&self, h: HoleId) -> usize {
        self.0[h]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Realisation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, o) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{o}")?;
        }
        write!(f, ")")
    }
}

/// A product of per-hole option sets. Option lists are kept sorted and
/// nonempty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subfamily {
    remaining: Vec<Vec<usize>>,
}

impl Subfamily {
    pub fn full(fam: &Family) -> Self {
        Subfamily {
            remaining: fam.holes().iter().map(|h| (0..h.len()).collect()).collect(),
        }
    }

    /// Builds a subfamily from explicit option lists.
    ///
    /// # Panics
    /// If a list is empty.
    pub fn from_options(mut remaining: Vec<Vec<usize>>) -> Self {
        for r in &mut remaining {
            r.sort_unstable();
            r.dedup();
            assert!(!r.is_empty(), "subfamily option set must be nonempty");
        }
        Subfamily { remaining }
    }

    pub fn singleton(r: &Realisation) -> Self {
        Subfamily {
            remaining: r.options().iter().map(|&o| vec![o]).collect(),
        }
    }

    pub fn remaining(&self, h: HoleId) -> &[usize] {
        &self.remaining[h]
    }

    pub fn hole_count(&self) -> usize {
        self.remaining.len()
    }

    /// Number of members ignoring constraints.
    pub fn size(&self) -> u128 {
        self.remaining
            .iter()
            .fold(1u128, |acc, r| acc.saturating_mul(r.len() as u128))
    }

    pub fn is_singleton(&self) -> bool {
        self.remaining.iter().all(|r| r.len() == 1)
    }

    /// The only member, when the subfamily is a singleton.
    pub fn as_realisation(&self) -> Option<Realisation> {
        self.is_singleton()
            .then(|| Realisation(self.remaining.iter().map(|r| r[0]).collect()))
    }

    /// The lexicographically first member.
    pub fn first(&self) -> Realisation {
        Realisation(self.remaining.iter().map(|r| r[0]).collect())
    }

    pub fn contains(&self, r: &Realisation) -> bool {
        r.len() == self.remaining.len()
            && r.options()
                .iter()
                .zip(&self.remaining)
                .all(|(o, rem)| rem.binary_search(o).is_ok())
    }

    /// Replaces the option set of `h`.
    ///
    /// # Panics
    /// If `options` is empty.
    pub fn restrict(&self, h: HoleId, mut options: Vec<usize>) -> Self {
        options.sort_unstable();
        options.dedup();
        assert!(!options.is_empty(), "subfamily option set must be nonempty");
        let mut remaining = self.remaining.clone();
        remaining[h] = options;
        Subfamily { remaining }
    }

    /// Splits `h` into `part` and the remaining options. Returns `None` if
    /// either side would be empty.
    pub fn split(&self, h: HoleId, part: &[usize]) -> Option<(Self, Self)> {
        let (inside, outside): (Vec<usize>, Vec<usize>) =
            self.remaining[h].iter().partition(|o| part.contains(o));
        if inside.is_empty() || outside.is_empty() {
            return None;
        }
        Some((self.restrict(h, inside), self.restrict(h, outside)))
    }

    /// Splits off the single member `r`, returning the remaining members as
    /// disjoint boxes (one per hole, in hole order).
    pub fn carve(&self, r: &Realisation) -> Vec<Self> {
        debug_assert!(self.contains(r));
        let mut out = Vec::new();
        let mut prefix = self.clone();
        for h in 0..self.remaining.len() {
            let rest: Vec<usize> = prefix.remaining[h]
                .iter()
                .copied()
                .filter(|&o| o != r.option(h))
                .collect();
            if !rest.is_empty() {
                out.push(prefix.restrict(h, rest));
            }
            prefix = prefix.restrict(h, vec![r.option(h)]);
        }
        out
    }
}

/// Odometer over a subfamily, skipping members that violate constraints.
pub struct Realisations<'a> {
    fam: &'a Family,
    sub: Subfamily,
    pos: Option<Vec<usize>>,
}

impl<'a> Realisations<'a> {
    pub(crate) fn new(fam: &'a Family, sub: Subfamily) -> Self {
        let pos = Some(vec![0; sub.hole_count()]);
        Realisations { fam, sub, pos }
    }

    fn advance(&mut self) {
        let Some(pos) = self.pos.as_mut() else {
            return;
        };
        for h in (0..pos.len()).rev() {
            pos[h] += 1;
            if pos[h] < self.sub.remaining[h].len() {
                return;
            }
            pos[h] = 0;
        }
        self.pos = None;
    }
}

impl Iterator for Realisations<'_> {
    type Item = Realisation;

    fn next(&mut self) -> Option<Realisation> {
        loop {
            let pos = self.pos.as_ref()?;
            let r = Realisation(
                pos.iter()
                    .enumerate()
                    .map(|(h, &i)| self.sub.remaining[h][i])
                    .collect(),
            );
            self.advance();
            if self.fam.satisfies_constraints(&r) {
                return Some(r);
            }
        }
    }
}
