use super::Distribution;

/// Support of a law restricted to `[0, cap]`, with a flag for points above `cap`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    words: Vec<u64>,
    cap: u64,
    beyond: bool,
}

impl SupportSet {
    pub fn empty(cap: u64) -> Self {
        Self { words: vec![0; (cap / 64 + 1) as usize], cap, beyond: false }
    }

    pub fn singleton(c: u64, cap: u64) -> Self {
        let mut s = Self::empty(cap);
        s.insert(c);
        s
    }

    /// `[lo, hi]`, with `hi = None` for an unbounded interval.
    pub fn interval(lo: u64, hi: Option<u64>, cap: u64) -> Self {
        let mut s = Self::empty(cap);
        let top = hi.map_or(cap, |h| h.min(cap));
        for k in lo..=top {
            s.insert(k);
        }
        s.beyond = hi.is_none_or(|h| h > cap);
        s
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    /// True when some support point exceeds `cap`.
    pub fn beyond(&self) -> bool {
        self.beyond
    }

    pub fn insert(&mut self, k: u64) {
        if k > self.cap {
            self.beyond = true;
        } else {
            self.words[(k / 64) as usize] |= 1 << (k % 64);
        }
    }

    pub fn contains(&self, k: u64) -> bool {
        k <= self.cap && self.words[(k / 64) as usize] >> (k % 64) & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        !self.beyond && self.words.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                (bits != 0).then(|| {
                    let b = bits.trailing_zeros() as u64;
                    bits &= bits - 1;
                    i as u64 * 64 + b
                })
            })
        })
    }

    pub fn min(&self) -> Option<u64> {
        self.iter().next()
    }

    pub fn union_with(&mut self, other: &SupportSet) {
        debug_assert_eq!(self.cap, other.cap);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        self.beyond |= other.beyond;
    }

    fn or_shifted(&mut self, other: &SupportSet, shift: u64) {
        for k in other.iter() {
            self.insert(k + shift);
        }
    }

    /// `{a + b : a in self, b in other}`.
    pub fn sumset(&self, other: &SupportSet) -> SupportSet {
        let mut out = SupportSet::empty(self.cap);
        if self.is_empty() || other.is_empty() {
            return out;
        }
        for a in self.iter() {
            out.or_shifted(other, a);
        }
        out.beyond |= self.beyond || other.beyond;
        out
    }

    /// Support of the sum of `m` independent copies.
    pub fn iid_sum(&self, m: u64) -> SupportSet {
        if let Some((lo, hi)) = self.as_interval() {
            let top = hi.map(|h| h.saturating_mul(m));
            return SupportSet::interval(lo.saturating_mul(m), top, self.cap);
        }
        let mut result = SupportSet::singleton(0, self.cap);
        let mut base = self.clone();
        let mut e = m;
        while e > 0 {
            if e & 1 == 1 {
                result = result.sumset(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.sumset(&base);
            }
        }
        result
    }

    /// `Some((lo, hi))` when the set is an integer interval; `hi = None` if
    /// it runs past `cap` without gaps.
    fn as_interval(&self) -> Option<(u64, Option<u64>)> {
        let lo = self.min()?;
        let hi = self.iter().last()?;
        if self.len() as u64 != hi - lo + 1 {
            return None;
        }
        if self.beyond {
            (hi == self.cap).then_some((lo, None))
        } else {
            Some((lo, Some(hi)))
        }
    }
}

impl Distribution {
    /// Analytic support restricted to `[0, cap]`.
    pub fn support_set(&self, cap: u64) -> SupportSet {
        if let Some(c) = self.point_value() {
            return SupportSet::singleton(c, cap);
        }
        match self {
            Distribution::Bernoulli { .. } => SupportSet::interval(0, Some(1), cap),
            Distribution::Binomial { n, .. } => SupportSet::interval(0, Some(*n), cap),
            Distribution::ScaledBernoulli { s, .. } => {
                let mut set = SupportSet::singleton(0, cap);
                set.insert(*s);
                set
            }
            Distribution::FiniteSupport(law) => {
                let mut set = SupportSet::empty(cap);
                for &(k, _) in law.atoms() {
                    set.insert(k);
                }
                set
            }
            _ => SupportSet::interval(0, None, cap),
        }
    }
}
