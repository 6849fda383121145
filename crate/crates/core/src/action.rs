//! Action tokens: the calls, field accesses and array accesses of a method,
//! and the overlap similarity used as the Action Filter.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::java::summary::{ArrayAccessKind, MethodSummary};
use crate::ratio::Ratio;

pub const ARRAY_ACCESS: &str = "ArrayAccess";
pub const ARRAY_ACCESS_BINARY: &str = "ArrayAccessBinary";

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ActionTokenSequence {
    ordered: Vec<String>,
    bag: BTreeMap<String, u32>,
}

impl ActionTokenSequence {
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let ordered: Vec<String> = tokens.into_iter().map(Into::into).collect();
        let mut bag = BTreeMap::new();
        for t in &ordered {
            *bag.entry(t.clone()).or_insert(0) += 1;
        }
        Self { ordered, bag }
    }

    pub fn ordered(&self) -> &[String] {
        &self.ordered
    }

    pub fn bag(&self) -> &BTreeMap<String, u32> {
        &self.bag
    }

    pub fn total(&self) -> usize {
        self.ordered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered.is_empty()
    }
}

pub fn extract_action_tokens(s: &MethodSummary) -> ActionTokenSequence {
    let mut events: Vec<(usize, &str)> = Vec::new();
    events.extend(s.call_sites.iter().map(|c| (c.pos, c.name.as_str())));
    events.extend(s.field_accesses.iter().map(|f| (f.pos, f.name.as_str())));
    events.extend(s.array_accesses.iter().map(|a| {
        let t = match a.kind {
            ArrayAccessKind::SimpleIndex => ARRAY_ACCESS,
            ArrayAccessKind::BinaryIndex => ARRAY_ACCESS_BINARY,
        };
        (a.pos, t)
    }));
    events.sort_by_key(|(pos, _)| *pos);
    ActionTokenSequence::from_tokens(events.into_iter().map(|(_, t)| t))
}

/// Multiset intersection size over the larger total; zero when both are empty.
pub fn overlap_similarity(a: &ActionTokenSequence, b: &ActionTokenSequence) -> Ratio {
    let (small, large) = if a.bag.len() <= b.bag.len() {
        (a, b)
    } else {
        (b, a)
    };
    let shared: u64 = small
        .bag
        .iter()
        .filter_map(|(t, f)| large.bag.get(t).map(|g| u64::from(*f.min(g))))
        .sum();
    Ratio::new(shared, a.total().max(b.total()) as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("threshold {0} outside [0, 1]")]
pub struct InvalidThreshold(pub f64);

pub fn check_threshold(theta: f64) -> Result<f64, InvalidThreshold> {
    if (0.0..=1.0).contains(&theta) {
        Ok(theta)
    } else {
        Err(InvalidThreshold(theta))
    }
}

pub fn passes_action_filter(
    a: &ActionTokenSequence,
    b: &ActionTokenSequence,
    theta: f64,
) -> Result<bool, InvalidThreshold> {
    let theta = check_threshold(theta)?;
    Ok(overlap_similarity(a, b).at_least(theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::java::parse_method;
    use proptest::prelude::*;

    fn tokens(src: &str) -> ActionTokenSequence {
        extract_action_tokens(&parse_method(src).unwrap())
    }

    fn seq(ts: &[&str]) -> ActionTokenSequence {
        ActionTokenSequence::from_tokens(ts.iter().copied())
    }

    #[test]
    fn listing_children() {
        let t = tokens(crate::java::summary::tests::CHILDREN);
        assert_eq!(
            t.ordered(),
            [
                "children",
                "hasMoreElements",
                "nextElement",
                "isFiltered",
                "addElement",
                "elements"
            ]
        );
    }

    #[test]
    fn array_sentinels() {
        let t = tokens("int g(int[] a,int i){return a[i]+a[i+1];}");
        assert_eq!(t.ordered(), [ARRAY_ACCESS, ARRAY_ACCESS_BINARY]);
        assert!(tokens("void f(){}").is_empty());
    }

    #[test]
    fn fields_and_calls_interleave_in_source_order() {
        let t = tokens("void f(){ this.x = y.size(); z.w.run(q[0]); }");
        assert_eq!(t.ordered(), ["x", "size", "w", "run", ARRAY_ACCESS]);
    }

    #[test]
    fn renaming_locals_keeps_tokens_renaming_calls_does_not() {
        let base = tokens("void f(List l){ int n = l.size(); g(n); }");
        let renamed_var = tokens("void f(List k){ int m = k.size(); g(m); }");
        let renamed_call = tokens("void f(List l){ int n = l.count(); g(n); }");
        assert_eq!(base, renamed_var);
        assert_ne!(base, renamed_call);
    }

    #[test]
    fn similarity_examples() {
        let a = seq(&["f", "g"]);
        assert_eq!(overlap_similarity(&a, &a), Ratio::new(1, 1));
        assert_eq!(overlap_similarity(&a, &seq(&["h"])), Ratio::ZERO);
        assert_eq!(
            overlap_similarity(&seq(&["f", "f"]), &seq(&["f"])),
            Ratio::new(1, 2)
        );
        assert_eq!(overlap_similarity(&seq(&[]), &seq(&[])), Ratio::ZERO);
    }

    #[test]
    fn filter_boundaries() {
        let a = seq(&["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"]);
        let b = seq(&["a", "b", "c", "d", "e", "f", "g", "h", "i", "x"]);
        assert_eq!(overlap_similarity(&a, &b), Ratio::new(9, 10));
        assert!(passes_action_filter(&a, &b, 0.9).unwrap());
        assert!(!passes_action_filter(&a, &b, 0.91).unwrap());
        assert!(!passes_action_filter(&seq(&["f", "f"]), &seq(&["f"]), 0.9).unwrap());
        assert!(!passes_action_filter(&seq(&[]), &seq(&[]), 0.9).unwrap());
        assert_eq!(
            passes_action_filter(&a, &b, 1.5),
            Err(InvalidThreshold(1.5))
        );
        assert_eq!(
            passes_action_filter(&a, &b, -0.1),
            Err(InvalidThreshold(-0.1))
        );
    }

    fn bag() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec("[a-e]", 0..12)
    }

    /// Intersection by repeated removal, independent of the histogram code.
    fn brute_overlap(a: &[String], b: &[String]) -> (u64, u64) {
        let mut pool: Vec<&String> = b.iter().collect();
        let mut shared = 0;
        for t in a {
            if let Some(i) = pool.iter().position(|p| *p == t) {
                pool.swap_remove(i);
                shared += 1;
            }
        }
        (shared, a.len().max(b.len()) as u64)
    }

    proptest! {
        #[test]
        fn matches_brute_force(a in bag(), b in bag()) {
            let (n, d) = brute_overlap(&a, &b);
            let s = overlap_similarity(&seq_owned(&a), &seq_owned(&b));
            prop_assert_eq!(s, Ratio::new(n, d));
        }

        #[test]
        fn symmetric_and_bounded(a in bag(), b in bag()) {
            let (x, y) = (seq_owned(&a), seq_owned(&b));
            let s = overlap_similarity(&x, &y);
            prop_assert_eq!(s, overlap_similarity(&y, &x));
            prop_assert!(s <= Ratio::new(1, 1));
            let equal_bags = x.bag() == y.bag() && !x.is_empty();
            prop_assert_eq!(s == Ratio::new(1, 1), equal_bags);
        }

        #[test]
        fn bag_is_histogram(a in bag()) {
            let s = seq_owned(&a);
            prop_assert_eq!(s.bag().values().map(|v| *v as usize).sum::<usize>(), s.total());
        }
    }

    fn seq_owned(ts: &[String]) -> ActionTokenSequence {
        ActionTokenSequence::from_tokens(ts.iter().cloned())
    }
}
