use std::fmt;

/// A generator of the free group or its inverse, packed as `id << 1 | inverse`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter(u32);

impl Letter {
    pub fn new(id: u32, inverse: bool) -> Self {
        Self(id << 1 | u32::from(inverse))
    }

    pub fn id(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn inverse(self) -> Self {
        Self(self.0 ^ 1)
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.id())?;
        if self.is_inverse() {
            write!(f, "^-1")?;
        }
        Ok(())
    }
}

/// A freely reduced word; the empty word is the identity.
#[derive(Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct GroupElement(Vec<Letter>);

/// Cancels adjacent letter-inverse pairs with a stack.
pub fn free_reduce(word: impl IntoIterator<Item = Letter>) -> GroupElement {
    let mut out: Vec<Letter> = Vec::new();
    for x in word {
        if out.last() == Some(&x.inverse()) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    GroupElement(out)
}

impl GroupElement {
    pub fn identity() -> Self {
        Self(Vec::new())
    }

    pub fn letter(id: u32) -> Self {
        Self(vec![Letter::new(id, false)])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.iter().rev().map(|x| x.inverse()).collect())
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        let cancel = self
            .0
            .iter()
            .rev()
            .zip(&other.0)
            .take_while(|(a, b)| a.inverse() == **b)
            .count();
        let mut out = Vec::with_capacity(self.0.len() + other.0.len() - 2 * cancel);
        out.extend_from_slice(&self.0[..self.0.len() - cancel]);
        out.extend_from_slice(&other.0[cancel..]);
        GroupElement(out)
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "·")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}
