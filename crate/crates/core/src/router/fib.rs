use std::collections::HashMap;

use crate::ids::IfaceId;
use crate::name::Name;

use super::RouterError;

/// Longest-prefix-match forwarding table with one next hop per prefix.
///
/// Routes are keyed by the canonical bytes of their prefix, so a lookup probes
/// at most one hash entry per component of the looked-up name. The root route
/// (`/`) is kept separately because it has no components.
#[derive(Clone, Debug, Default)]
pub struct Fib {
    routes: HashMap<Box<[u8]>, (Name, IfaceId)>,
    default_route: Option<IfaceId>,
}

/// Result of a successful lookup. `prefix` is `None` for the root route.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Route<'a> {
    pub prefix: Option<&'a Name>,
    pub out: IfaceId,
}

impl Fib {
    pub fn new() -> Self {
        Self::default()
    }

    /// Installs or replaces the route for `prefix`, returning the previous
    /// next hop if any.
    pub fn insert(&mut self, prefix: Name, out: IfaceId) -> Option<IfaceId> {
        let key: Box<[u8]> = prefix.as_bytes().into();
        self.routes.insert(key, (prefix, out)).map(|(_, old)| old)
    }

    pub fn set_default(&mut self, out: IfaceId) -> Option<IfaceId> {
        self.default_route.replace(out)
    }

    pub fn lookup(&self, name: &Name) -> Result<Route<'_>, RouterError> {
        for candidate in name.prefixes_longest_first() {
            if let Some((prefix, out)) = self.routes.get(candidate) {
                return Ok(Route {
                    prefix: Some(prefix),
                    out: *out,
                });
            }
        }
        self.default_route
            .map(|out| Route { prefix: None, out })
            .ok_or_else(|| RouterError::NoRoute(name.clone()))
    }

    pub fn len(&self) -> usize {
        self.routes.len() + usize::from(self.default_route.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All routes in prefix order; the root route, if present, comes first
    /// with a `None` prefix.
    pub fn routes(&self) -> Vec<(Option<Name>, IfaceId)> {
        let mut out: Vec<_> = self
            .routes
            .values()
            .map(|(p, i)| (Some(p.clone()), *i))
            .collect();
        out.sort();
        if let Some(d) = self.default_route {
            out.insert(0, (None, d));
        }
        out
    }
}
