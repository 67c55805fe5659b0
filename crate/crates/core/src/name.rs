//! Hierarchical NDN names.
//!
//! A [`Name`] is stored in its canonical textual form (`/c1/c2/...`) so that
//! clones are cheap and prefix tests reduce to byte comparisons. Components
//! are raw bytes; the separator byte may not appear inside a component.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const SEPARATOR: u8 = b'/';

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NameError {
    #[error("malformed name {0:?}: must start with '/'")]
    MissingLeadingSeparator(String),
    #[error("malformed name {0:?}: no components")]
    NoComponents(String),
    #[error("malformed name {text:?}: component {index} is empty")]
    EmptyComponent { text: String, index: usize },
    #[error("name component contains the separator byte")]
    SeparatorInComponent,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name {
    canonical: Arc<[u8]>,
}

impl Name {
    /// Parses the canonical textual form. A single trailing separator is
    /// tolerated and dropped (`/nsf/fia/` is `/nsf/fia`).
    pub fn parse(text: &str) -> Result<Self, NameError> {
        let bytes = text.as_bytes();
        if bytes.first() != Some(&SEPARATOR) {
            return Err(NameError::MissingLeadingSeparator(text.to_owned()));
        }
        let mut body = &bytes[1..];
        if body.last() == Some(&SEPARATOR) {
            body = &body[..body.len() - 1];
        }
        if body.is_empty() {
            return Err(NameError::NoComponents(text.to_owned()));
        }
        for (index, component) in body.split(|b| *b == SEPARATOR).enumerate() {
            if component.is_empty() {
                return Err(NameError::EmptyComponent {
                    text: text.to_owned(),
                    index,
                });
            }
        }
        let mut canonical = Vec::with_capacity(body.len() + 1);
        canonical.push(SEPARATOR);
        canonical.extend_from_slice(body);
        Ok(Self {
            canonical: canonical.into(),
        })
    }

    pub fn from_components<I, C>(components: I) -> Result<Self, NameError>
    where
        I: IntoIterator<Item = C>,
        C: AsRef<[u8]>,
    {
        let mut canonical = Vec::new();
        for (index, component) in components.into_iter().enumerate() {
            let component = component.as_ref();
            if component.is_empty() {
                return Err(NameError::EmptyComponent {
                    text: String::from_utf8_lossy(&canonical).into_owned(),
                    index,
                });
            }
            if component.contains(&SEPARATOR) {
                return Err(NameError::SeparatorInComponent);
            }
            canonical.push(SEPARATOR);
            canonical.extend_from_slice(component);
        }
        if canonical.is_empty() {
            return Err(NameError::NoComponents(String::new()));
        }
        Ok(Self {
            canonical: canonical.into(),
        })
    }

    /// Returns a new name with `component` appended.
    pub fn child(&self, component: impl AsRef<[u8]>) -> Result<Self, NameError> {
        let component = component.as_ref();
        if component.is_empty() {
            return Err(NameError::EmptyComponent {
                text: self.to_string(),
                index: self.len(),
            });
        }
        if component.contains(&SEPARATOR) {
            return Err(NameError::SeparatorInComponent);
        }
        let mut canonical = Vec::with_capacity(self.canonical.len() + 1 + component.len());
        canonical.extend_from_slice(&self.canonical);
        canonical.push(SEPARATOR);
        canonical.extend_from_slice(component);
        Ok(Self {
            canonical: canonical.into(),
        })
    }

    pub fn components(&self) -> impl Iterator<Item = &[u8]> + '_ {
        self.canonical[1..].split(|b| *b == SEPARATOR)
    }

    pub fn len(&self) -> usize {
        1 + self
            .canonical
            .iter()
            .skip(1)
            .filter(|b| **b == SEPARATOR)
            .count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Length of the canonical form in bytes: the leading separator, every
    /// component and the separators between them.
    pub fn serialized_len(&self) -> usize {
        self.canonical.len()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.canonical
    }

    /// True iff `self`'s components are a leading sublist of `name`'s.
    pub fn is_prefix_of(&self, name: &Name) -> bool {
        let p = &*self.canonical;
        let n = &*name.canonical;
        n.len() >= p.len() && n.starts_with(p) && (n.len() == p.len() || n[p.len()] == SEPARATOR)
    }

    /// Canonical byte forms of every prefix of this name, longest first.
    pub(crate) fn prefixes_longest_first(&self) -> impl Iterator<Item = &[u8]> + '_ {
        let full = &*self.canonical;
        std::iter::once(full).chain(
            full.iter()
                .enumerate()
                .skip(1)
                .rev()
                .filter(|(_, b)| **b == SEPARATOR)
                .map(move |(i, _)| &full[..i]),
        )
    }

    /// The first `count` components as a name, or `None` when `count` is 0 or
    /// exceeds the component count.
    pub fn prefix(&self, count: usize) -> Option<Name> {
        if count == 0 || count > self.len() {
            return None;
        }
        let end = self
            .canonical
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, b)| **b == SEPARATOR)
            .map(|(i, _)| i)
            .nth(count - 1)
            .unwrap_or(self.canonical.len());
        Some(Self {
            canonical: self.canonical[..end].into(),
        })
    }
}

pub fn is_prefix_of(prefix: &Name, name: &Name) -> bool {
    prefix.is_prefix_of(name)
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&String::from_utf8_lossy(&self.canonical))
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Name({self})")
    }
}

impl FromStr for Name {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for Name {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Name {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Name::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(s: &str) -> Name {
        Name::parse(s).unwrap()
    }

    #[test]
    fn parse_examples() {
        let name = n("/nsf/fia");
        let comps: Vec<_> = name.components().collect();
        assert_eq!(comps, vec![&b"nsf"[..], &b"fia"[..]]);
        assert_eq!(n("/a").components().collect::<Vec<_>>(), vec![&b"a"[..]]);
        assert!(matches!(
            Name::parse("//x"),
            Err(NameError::EmptyComponent { index: 0, .. })
        ));
    }

    #[test]
    fn parse_rejects_malformed() {
        assert!(matches!(
            Name::parse("nsf/fia"),
            Err(NameError::MissingLeadingSeparator(_))
        ));
        assert!(matches!(Name::parse("/"), Err(NameError::NoComponents(_))));
        assert!(matches!(
            Name::parse(""),
            Err(NameError::MissingLeadingSeparator(_))
        ));
        assert!(matches!(
            Name::parse("/a//b"),
            Err(NameError::EmptyComponent { index: 1, .. })
        ));
    }

    #[test]
    fn trailing_separator_is_canonicalized() {
        assert_eq!(n("/nsf/fia/"), n("/nsf/fia"));
        assert_eq!(n("/nsf/fia/").to_string(), "/nsf/fia");
    }

    #[test]
    fn serialized_length() {
        // 1 + (3 + 3) + 1 separator
        assert_eq!(n("/nsf/fia").serialized_len(), 8);
        assert_eq!(n("/a").serialized_len(), 2);
    }

    #[test]
    fn prefix_examples() {
        assert!(n("/nsf").is_prefix_of(&n("/nsf/fia/xyz")));
        assert!(!n("/nsf/fia").is_prefix_of(&n("/nsf")));
        assert!(n("/a").is_prefix_of(&n("/a")));
        // component boundary, not byte boundary
        assert!(!n("/ns").is_prefix_of(&n("/nsf")));
    }

    #[test]
    fn from_components_rejects_separator() {
        assert_eq!(
            Name::from_components(["a/b"]),
            Err(NameError::SeparatorInComponent)
        );
        assert!(Name::from_components(Vec::<&[u8]>::new()).is_err());
        assert!(n("/a").child("").is_err());
    }

    #[test]
    fn prefix_by_count() {
        let name = n("/a/bb/ccc");
        assert_eq!(name.prefix(1), Some(n("/a")));
        assert_eq!(name.prefix(2), Some(n("/a/bb")));
        assert_eq!(name.prefix(3), Some(name.clone()));
        assert_eq!(name.prefix(4), None);
        assert_eq!(name.prefix(0), None);
        let all: Vec<_> = name.prefixes_longest_first().collect();
        assert_eq!(all, vec![&b"/a/bb/ccc"[..], b"/a/bb", b"/a"]);
    }

    fn component() -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(
            any::<u8>().prop_filter("no separator", |b| *b != SEPARATOR),
            1..8,
        )
    }

    fn arb_name() -> impl Strategy<Value = Name> {
        proptest::collection::vec(component(), 1..6).prop_map(|c| Name::from_components(c).unwrap())
    }

    proptest! {
        #[test]
        fn round_trip(name in arb_name()) {
            let reparsed = Name::from_components(name.components()).unwrap();
            prop_assert_eq!(&reparsed, &name);
            let expected: usize = 1 + name.components().map(|c| c.len()).sum::<usize>() + name.len() - 1;
            prop_assert_eq!(name.serialized_len(), expected);
            if let Ok(text) = std::str::from_utf8(name.as_bytes()) {
                prop_assert_eq!(Name::parse(text).unwrap(), name);
            }
        }

        #[test]
        fn prefix_relation(name in arb_name(), a in 1usize..6, b in 1usize..6) {
            let (short, long) = (a.min(b), a.max(b));
            if let (Some(p), Some(q)) = (name.prefix(short), name.prefix(long)) {
                prop_assert!(p.is_prefix_of(&q));
                prop_assert!(q.is_prefix_of(&name));
                prop_assert!(p.is_prefix_of(&name));
                prop_assert!(p.serialized_len() <= name.serialized_len());
                prop_assert!(name.is_prefix_of(&name));
            }
        }
    }
}
