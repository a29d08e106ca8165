use crate::error::{Error, Result};

/// One entry of the kernel vocabulary: a concept monogram or an unordered
/// skip-bigram. Construct bigrams through [`Element::bigram`] to keep them
/// canonical (`lo <= hi`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Mono(u32),
    Bigram(u32, u32),
}

impl Element {
    pub fn bigram(a: u32, b: u32) -> Self {
        if a <= b {
            Element::Bigram(a, b)
        } else {
            Element::Bigram(b, a)
        }
    }
}

/// Canonical index of monograms and skip-bigrams over `K` concepts.
///
/// Order: monograms ascending, then bigrams `(lo, hi)` lexicographically.
/// With `r = 0` only monograms exist.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    k: usize,
    radius: usize,
    entries: Vec<Element>,
}

pub fn vocabulary_size(k: usize, radius: usize) -> usize {
    if radius == 0 {
        k
    } else {
        2 * k + k * k.saturating_sub(1) / 2
    }
}

impl Vocabulary {
    pub fn new(k: usize, radius: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("K must be at least 1".into()));
        }
        if k > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!("K={k} is too large")));
        }
        let mut entries = Vec::with_capacity(vocabulary_size(k, radius));
        entries.extend((0..k as u32).map(Element::Mono));
        if radius > 0 {
            for lo in 0..k as u32 {
                for hi in lo..k as u32 {
                    entries.push(Element::Bigram(lo, hi));
                }
            }
        }
        Ok(Self { k, radius, entries })
    }

    pub fn concept_count(&self) -> usize {
        self.k
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Element] {
        &self.entries
    }

    pub fn has_bigrams(&self) -> bool {
        self.radius > 0
    }

    #[inline]
    pub fn mono_index(&self, c: u32) -> usize {
        c as usize
    }

    /// Position of the bigram over `{a, b}`; argument order does not matter.
    #[inline]
    pub fn bigram_index(&self, a: u32, b: u32) -> usize {
        let (lo, hi) = if a <= b { (a as usize, b as usize) } else { (b as usize, a as usize) };
        // Rows lo' < lo contribute k - lo' entries each.
        self.k + lo * self.k - lo * lo.saturating_sub(1) / 2 + (hi - lo)
    }

    pub fn index_of(&self, element: Element) -> Result<usize> {
        let check = |c: u32| {
            if (c as usize) < self.k {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("concept {c} outside 0..{}", self.k)))
            }
        };
        match element {
            Element::Mono(c) => {
                check(c)?;
                Ok(self.mono_index(c))
            }
            Element::Bigram(a, b) => {
                check(a)?;
                check(b)?;
                if !self.has_bigrams() {
                    return Err(Error::InvalidParameter(
                        "monogram-only vocabulary (r = 0) has no bigrams".into(),
                    ));
                }
                Ok(self.bigram_index(a, b))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(Vocabulary::new(5, 1).unwrap().len(), 20);
        assert_eq!(Vocabulary::new(5, 0).unwrap().len(), 5);
        let one = Vocabulary::new(1, 2).unwrap();
        assert_eq!(one.entries(), &[Element::Mono(0), Element::Bigram(0, 0)]);
        assert!(Vocabulary::new(0, 1).is_err());
    }

    #[test]
    fn index_matches_entry_order() {
        for k in 1..12 {
            let v = Vocabulary::new(k, 1).unwrap();
            for (pos, e) in v.entries().iter().enumerate() {
                assert_eq!(v.index_of(*e).unwrap(), pos, "K={k} {e:?}");
            }
        }
    }

    #[test]
    fn canonical_bigrams() {
        let v = Vocabulary::new(6, 2).unwrap();
        assert_eq!(v.index_of(Element::Bigram(5, 2)).unwrap(), v.index_of(Element::Bigram(2, 5)).unwrap());
        assert_eq!(Element::bigram(5, 2), Element::Bigram(2, 5));
        assert!(v.index_of(Element::Mono(6)).is_err());
        assert!(Vocabulary::new(6, 0).unwrap().index_of(Element::Bigram(0, 1)).is_err());
    }
}
