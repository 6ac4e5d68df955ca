use crate::error::{Error, Result};

/// Bipartite behaviour `p(ab|xy)`.
///
/// `a ∈ 0..outcomes_a`, `x ∈ 0..settings_a` label the untrusted side and
/// `b`, `y` the trusted side.
#[derive(Clone, Debug, PartialEq)]
pub struct Behaviour {
    outcomes_a: usize,
    outcomes_b: usize,
    settings_a: usize,
    settings_b: usize,
    p: Vec<f64>,
}

impl Behaviour {
    pub fn from_fn(
        outcomes_a: usize,
        outcomes_b: usize,
        settings_a: usize,
        settings_b: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Self {
        let mut p = Vec::with_capacity(outcomes_a * outcomes_b * settings_a * settings_b);
        for x in 0..settings_a {
            for y in 0..settings_b {
                for a in 0..outcomes_a {
                    for b in 0..outcomes_b {
                        p.push(f(a, b, x, y));
                    }
                }
            }
        }
        Self { outcomes_a, outcomes_b, settings_a, settings_b, p }
    }

    /// Deterministic behaviour: `a = strategy_a[x]`, `b = strategy_b[y]`.
    pub fn deterministic(outcomes_a: usize, outcomes_b: usize, strategy_a: &[usize], strategy_b: &[usize]) -> Self {
        Self::from_fn(outcomes_a, outcomes_b, strategy_a.len(), strategy_b.len(), |a, b, x, y| {
            f64::from(u8::from(strategy_a[x] == a && strategy_b[y] == b))
        })
    }

    /// Popescu–Rohrlich box: `a ⊕ b = x·y`.
    pub fn pr_box() -> Self {
        Self::from_fn(2, 2, 2, 2, |a, b, x, y| if (a ^ b) == (x & y) { 0.5 } else { 0.0 })
    }

    pub fn uniform(outcomes_a: usize, outcomes_b: usize, settings_a: usize, settings_b: usize) -> Self {
        let w = 1.0 / (outcomes_a * outcomes_b) as f64;
        Self::from_fn(outcomes_a, outcomes_b, settings_a, settings_b, |_, _, _, _| w)
    }

    /// `t · self + (1 − t) · other`.
    pub fn mix(&self, other: &Self, t: f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::ScenarioMismatch("behaviours of different shapes".into()));
        }
        let p = self.p.iter().zip(&other.p).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        Ok(Self { p, ..self.clone() })
    }

    /// `(outcomes_a, outcomes_b, settings_a, settings_b)`.
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.outcomes_a, self.outcomes_b, self.settings_a, self.settings_b)
    }

    fn index(&self, a: usize, b: usize, x: usize, y: usize) -> usize {
        ((x * self.settings_b + y) * self.outcomes_a + a) * self.outcomes_b + b
    }

    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> f64 {
        self.p[self.index(a, b, x, y)]
    }

    pub fn outcomes_a(&self) -> usize {
        self.outcomes_a
    }

    pub fn outcomes_b(&self) -> usize {
        self.outcomes_b
    }

    pub fn settings_a(&self) -> usize {
        self.settings_a
    }

    pub fn settings_b(&self) -> usize {
        self.settings_b
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    /// `max_{x,y} |Σ_ab p(ab|xy) − 1|`.
    pub fn normalization_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for x in 0..self.settings_a {
            for y in 0..self.settings_b {
                let mut total = 0.0;
                for a in 0..self.outcomes_a {
                    for b in 0..self.outcomes_b {
                        total += self.get(a, b, x, y);
                    }
                }
                worst = worst.max((total - 1.0).abs());
            }
        }
        worst
    }

    /// Worst dependence of either marginal on the other party's setting.
    pub fn signaling_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for x in 0..self.settings_a {
            for a in 0..self.outcomes_a {
                let marg = |y: usize| (0..self.outcomes_b).map(|b| self.get(a, b, x, y)).sum::<f64>();
                let m0 = marg(0);
                for y in 1..self.settings_b {
                    worst = worst.max((marg(y) - m0).abs());
                }
            }
        }
        for y in 0..self.settings_b {
            for b in 0..self.outcomes_b {
                let marg = |x: usize| (0..self.outcomes_a).map(|a| self.get(a, b, x, y)).sum::<f64>();
                let m0 = marg(0);
                for x in 1..self.settings_a {
                    worst = worst.max((marg(x) - m0).abs());
                }
            }
        }
        worst
    }

    /// Whether every entry lies in `[−1e-12, 1 + 1e-12]`.
    pub fn entries_in_range(&self) -> bool {
        self.p.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v))
    }

    pub fn max_difference(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "behaviour shape mismatch");
        self.p.iter().zip(&other.p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pr_box_is_no_signaling() {
        let pr = Behaviour::pr_box();
        assert_eq!(pr.normalization_defect(), 0.0);
        assert_eq!(pr.signaling_violation(), 0.0);
    }

    #[test]
    fn signaling_detected() {
        // Bob's outcome copies Alice's setting
        let p = Behaviour::from_fn(2, 2, 2, 2, |a, b, x, _| if a == 0 && b == x { 1.0 } else { 0.0 });
        assert_eq!(p.normalization_defect(), 0.0);
        assert_eq!(p.signaling_violation(), 1.0);
    }
}
