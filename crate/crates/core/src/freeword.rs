//! Reduced words in the free product `ℤ_k ∗ ⋯ ∗ ℤ_k` (`m` factors).
//!
//! A word `u_{x₁}^{j₁} ⋯ u_{xℓ}^{jℓ}` is reduced when adjacent settings
//! differ and every power lies in `1..k`. Settings are 0-based.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub setting: usize,
    pub power: usize,
}

impl Letter {
    pub fn new(setting: usize, power: usize) -> Self {
        Self { setting, power }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FreeWord {
    settings: usize,
    order: usize,
    letters: Vec<Letter>,
}

impl FreeWord {
    pub fn identity(settings: usize, order: usize) -> Self {
        Self { settings, order, letters: Vec::new() }
    }

    /// The generator power `u_x^j`, reduced mod `k`.
    pub fn generator(settings: usize, order: usize, setting: usize, power: i64) -> Result<Self> {
        normal_form(settings, order, &[(setting, power)])
    }

    pub fn settings(&self) -> usize {
        self.settings
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Reversed letters with negated powers.
    pub fn inverse(&self) -> Self {
        let letters = self.letters.iter().rev().map(|l| Letter::new(l.setting, self.order - l.power)).collect();
        Self { letters, ..*self }
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        multiply(self, other)
    }

    /// `self⁻¹ · other`, the word indexing a moment-matrix block.
    pub fn between(&self, other: &Self) -> Result<Self> {
        multiply(&self.inverse(), other)
    }

    /// Whether `self` is already in normal form (always true for values built by this module).
    pub fn is_reduced(&self) -> bool {
        self.letters.iter().all(|l| l.setting < self.settings && (1..self.order).contains(&l.power))
            && self.letters.windows(2).all(|w| w[0].setting != w[1].setting)
    }
}

impl Default for FreeWord {
    fn default() -> Self {
        Self::identity(0, 0)
    }
}

// Shape-consistent order: length first, then letters left to right.
impl Ord for FreeWord {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.settings, self.order)
            .cmp(&(other.settings, other.order))
            .then(self.letters.len().cmp(&other.letters.len()))
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl PartialOrd for FreeWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for FreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("e");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "u{}^{}", l.setting + 1, l.power)?;
        }
        Ok(())
    }
}

/// Reduces a raw letter sequence; powers may be any integer and are taken mod `k`.
pub fn normal_form(settings: usize, order: usize, raw: &[(usize, i64)]) -> Result<FreeWord> {
    if order == 0 {
        return Err(Error::InvalidScenario("group order must be positive".into()));
    }
    let mut stack: Vec<Letter> = Vec::with_capacity(raw.len());
    for &(setting, power) in raw {
        if setting >= settings {
            return Err(Error::BadSetting { setting, settings });
        }
        let p = power.rem_euclid(order as i64) as usize;
        push_letter(&mut stack, Letter::new(setting, p), order);
    }
    Ok(FreeWord { settings, order, letters: stack })
}

fn push_letter(stack: &mut Vec<Letter>, letter: Letter, order: usize) {
    if letter.power == 0 {
        return;
    }
    match stack.last_mut() {
        Some(top) if top.setting == letter.setting => {
            let merged = (top.power + letter.power) % order;
            if merged == 0 {
                stack.pop();
            } else {
                top.power = merged;
            }
        }
        _ => stack.push(letter),
    }
}

pub fn multiply(w1: &FreeWord, w2: &FreeWord) -> Result<FreeWord> {
    if (w1.settings, w1.order) != (w2.settings, w2.order) {
        return Err(Error::ScenarioMismatch(format!(
            "words over (m, k) = ({}, {}) and ({}, {})",
            w1.settings, w1.order, w2.settings, w2.order
        )));
    }
    let mut stack = w1.letters.clone();
    for &l in &w2.letters {
        push_letter(&mut stack, l, w1.order);
    }
    Ok(FreeWord { letters: stack, ..*w1 })
}

/// All reduced words of length at most `max_len`, sorted.
pub fn enumerate(settings: usize, order: usize, max_len: usize) -> Vec<FreeWord> {
    let mut out = vec![FreeWord::identity(settings, order)];
    let mut frontier = vec![Vec::<Letter>::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for word in &frontier {
            let last = word.last().map(|l| l.setting);
            for setting in (0..settings).filter(|&x| Some(x) != last) {
                for power in 1..order {
                    let mut w = word.clone();
                    w.push(Letter::new(setting, power));
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        out.extend(next.iter().map(|letters| FreeWord { settings, order, letters: letters.clone() }));
        frontier = next;
    }
    out
}

/// Number of reduced words of length at most `max_len`.
pub fn count(settings: usize, order: usize, max_len: usize) -> u128 {
    let m = settings as u128;
    let k = order.max(1) as u128;
    let first = m * (k - 1);
    let branch = m.saturating_sub(1) * (k - 1);
    let mut total: u128 = 1;
    let mut level = first;
    for _ in 0..max_len {
        if level == 0 {
            break;
        }
        total = total.saturating_add(level);
        level = level.saturating_mul(branch);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::random::{seeded, uniform_index};
    use proptest::prelude::*;

    fn word(m: usize, k: usize, raw: &[(usize, i64)]) -> FreeWord {
        normal_form(m, k, raw).unwrap()
    }

    #[test]
    fn reductions() {
        assert!(word(2, 2, &[(0, 1), (0, 1)]).is_identity());
        assert!(word(2, 3, &[(0, 2), (0, 1)]).is_identity());
        let w = word(2, 3, &[(0, 1), (1, 1), (1, 2), (0, 2)]);
        assert!(w.is_identity());
        let w = word(3, 4, &[(0, -1), (2, 5), (1, 0)]);
        assert_eq!(w.letters(), &[Letter::new(0, 3), Letter::new(2, 1)]);
        assert!(matches!(normal_form(2, 2, &[(2, 1)]), Err(Error::BadSetting { setting: 2, settings: 2 })));
    }

    #[test]
    fn mismatched_shapes_do_not_multiply() {
        let a = FreeWord::identity(2, 2);
        let b = FreeWord::identity(2, 3);
        assert!(matches!(a.multiply(&b), Err(Error::ScenarioMismatch(_))));
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate(2, 3, 1).len(), 5);
        assert_eq!(enumerate(2, 3, 2).len(), 13);
        assert_eq!(enumerate(2, 2, 5).len(), 11);
        assert_eq!(count(3, 2, 2), 10);
        assert_eq!(count(5, 7, 0), 1);
        for l in 0..20 {
            assert_eq!(count(2, 2, l), 1 + 2 * l as u128);
        }
        assert_eq!(enumerate(1, 3, 4).len(), 3);
        assert_eq!(count(1, 3, 4), 3);
    }

    #[test]
    fn enumeration_is_sorted_reduced_and_distinct() {
        let words = enumerate(3, 3, 3);
        assert!(words.windows(2).all(|w| w[0] < w[1]));
        assert!(words.iter().all(FreeWord::is_reduced));
    }

    /// Brute force: all raw sequences of length ≤ L, reduced, deduplicated.
    #[test]
    fn enumeration_matches_brute_force_closure() {
        let (m, k, l) = (3, 3, 3);
        let mut seen = std::collections::BTreeSet::new();
        let letters: Vec<(usize, i64)> = (0..m).flat_map(|x| (0..k as i64).map(move |j| (x, j))).collect();
        let mut raw: Vec<Vec<(usize, i64)>> = vec![vec![]];
        let mut layer = raw.clone();
        for _ in 0..l {
            layer = layer.iter().flat_map(|r| letters.iter().map(move |&c| [r.as_slice(), &[c]].concat())).collect();
            raw.extend(layer.iter().cloned());
        }
        for r in &raw {
            let w = word(m, k, r);
            if w.len() <= l {
                seen.insert(w);
            }
        }
        let listed: Vec<FreeWord> = enumerate(m, k, l);
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), listed);
    }

    #[test]
    fn count_equals_enumeration() {
        for m in 1..=4 {
            for k in 1..=4 {
                for l in 0..=6 {
                    assert_eq!(count(m, k, l), enumerate(m, k, l).len() as u128, "m={m} k={k} L={l}");
                }
            }
        }
    }

    #[test]
    fn growth_dichotomy() {
        let linear: Vec<u128> = (0..10).map(|l| count(2, 2, l)).collect();
        assert!(linear.windows(2).all(|w| w[1] - w[0] == 2));
        let exp: Vec<u128> = (1..10).map(|l| count(3, 2, l) - count(3, 2, l - 1)).collect();
        assert!(exp.windows(2).all(|w| w[1] == 2 * w[0]));
    }

    #[test]
    fn count_saturates() {
        assert_eq!(count(1000, 1000, 100), u128::MAX);
    }

    #[test]
    fn group_axioms_on_random_words() {
        let mut rng = seeded(5);
        let (m, k) = (3, 4);
        let mut random_word = || {
            let len = uniform_index(12, &mut rng);
            let raw: Vec<(usize, i64)> =
                (0..len).map(|_| (uniform_index(m, &mut rng), uniform_index(2 * k, &mut rng) as i64 - k as i64)).collect();
            word(m, k, &raw)
        };
        let e = FreeWord::identity(m, k);
        for _ in 0..1000 {
            let (a, b, c) = (random_word(), random_word(), random_word());
            assert!(a.multiply(&a.inverse()).unwrap().is_identity());
            assert!(a.inverse().multiply(&a).unwrap().is_identity());
            assert_eq!(e.multiply(&a).unwrap(), a);
            assert_eq!(a.multiply(&e).unwrap(), a);
            let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
            let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
            assert_eq!(left, right);
        }
    }

    #[test]
    fn display() {
        assert_eq!(FreeWord::identity(2, 2).to_string(), "e");
        assert_eq!(word(2, 3, &[(0, 1), (1, 2)]).to_string(), "u1^1 u2^2");
    }

    fn raw_letters() -> impl Strategy<Value = Vec<(usize, i64)>> {
        prop::collection::vec((0usize..4, -8i64..8), 0..16)
    }

    proptest! {
        #[test]
        fn normal_form_is_idempotent(raw in raw_letters(), k in 1usize..5) {
            let w = word(4, k, &raw);
            let again: Vec<(usize, i64)> = w.letters().iter().map(|l| (l.setting, l.power as i64)).collect();
            prop_assert_eq!(word(4, k, &again), w.clone());
            prop_assert!(w.is_reduced());
        }

        #[test]
        fn normal_form_respects_concatenation(r1 in raw_letters(), r2 in raw_letters(), k in 2usize..5) {
            let joined: Vec<_> = r1.iter().chain(&r2).copied().collect();
            prop_assert_eq!(word(4, k, &joined), word(4, k, &r1).multiply(&word(4, k, &r2)).unwrap());
        }

        #[test]
        fn inverse_is_involutive(raw in raw_letters(), k in 2usize..5) {
            let w = word(4, k, &raw);
            prop_assert_eq!(w.inverse().inverse(), w.clone());
            prop_assert!(w.between(&w).unwrap().is_identity());
        }
    }
}
