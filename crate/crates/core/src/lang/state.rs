use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;

use super::syntax::Ident;

/// A store: finite map from variables to integers. Variables that are not
/// mapped read as 0. Values are immutable; [`State::update`] returns a new
/// state and shares the map with the old one until it is written.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(Arc<BTreeMap<Ident, BigInt>>);

impl State {
    pub fn new() -> State {
        State::default()
    }

    pub fn lookup(&self, x: &str) -> BigInt {
        self.0.get(x).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn update(&self, x: &Ident, v: BigInt) -> State {
        let mut map = self.0.clone();
        Arc::make_mut(&mut map).insert(x.clone(), v);
        State(map)
    }

    /// Convenience for tests and examples: `State::from_pairs(&[("x", 1)])`.
    pub fn from_pairs(pairs: &[(&str, i64)]) -> State {
        State(Arc::new(
            pairs.iter().map(|(k, v)| (Ident::from(*k), BigInt::from(*v))).collect(),
        ))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Ident, &BigInt)> {
        self.0.iter()
    }

    pub fn contains(&self, x: &str) -> bool {
        self.0.contains_key(x)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(Ident, BigInt)> for State {
    fn from_iter<I: IntoIterator<Item = (Ident, BigInt)>>(iter: I) -> Self {
        State(Arc::new(iter.into_iter().collect()))
    }
}

/// Renders as a state literal, e.g. `{x=0, y=3}`.
impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unmapped_reads_zero() {
        assert_eq!(State::new().lookup("q"), BigInt::zero());
    }

    #[test]
    fn display_is_a_state_literal() {
        assert_eq!(State::from_pairs(&[("y", 3), ("x", 0)]).to_string(), "{x=0, y=3}");
        assert_eq!(State::new().to_string(), "{}");
    }

    proptest! {
        #[test]
        fn update_then_lookup(a in -50i64..50, b in -50i64..50, v in -1000i64..1000) {
            let s = State::from_pairs(&[("x", a), ("y", b)]);
            let x: Ident = "x".into();
            let t = s.update(&x, BigInt::from(v));
            prop_assert_eq!(t.lookup("x"), BigInt::from(v));
            prop_assert_eq!(t.lookup("y"), BigInt::from(b));
            // the original is untouched
            prop_assert_eq!(s.lookup("x"), BigInt::from(a));
        }
    }
}
