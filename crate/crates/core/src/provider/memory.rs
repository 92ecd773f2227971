use crate::error::{Error, Result};
use crate::model::{StateId, TransitionModel};
use crate::policies::SuccessorSource;
use crate::provider::{NextStateProvider, StateKey, SuccessorList, SuccessorQuery, Tier, TopK};

/// Serves a [`TransitionModel`]; state keys are decimal state ids.
#[derive(Debug, Clone)]
pub struct InMemoryProvider {
    model: TransitionModel,
}

impl InMemoryProvider {
    pub fn new(model: TransitionModel) -> Self {
        InMemoryProvider { model }
    }

    pub fn model(&self) -> &TransitionModel {
        &self.model
    }

    fn resolve(&self, key: &StateKey) -> Result<StateId> {
        key.as_str()
            .parse::<usize>()
            .ok()
            .map(StateId)
            .filter(|id| id.0 < self.model.state_count() && StateKey::from(*id) == *key)
            .ok_or_else(|| Error::NotFound(key.to_string()))
    }
}

impl NextStateProvider for InMemoryProvider {
    fn query_successors(&self, query: &SuccessorQuery) -> Result<SuccessorList> {
        let x = self.resolve(&query.state)?;
        let width = match query.top_k {
            TopK::All => None,
            TopK::K(k) => Some(k),
        };
        let entries = self
            .model
            .ranked_successors(&x, width)?
            .into_iter()
            .map(|c| {
                let p = self.model.rows()[x.0]
                    .prob(c.state)
                    .expect("listed successor");
                (StateKey::from(c.state), p)
            })
            .collect();
        SuccessorList::new(entries)
    }

    fn tier(&self) -> Tier {
        Tier::Enumerable
    }

    fn enumerable_model(&self) -> Option<&TransitionModel> {
        Some(&self.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::two_state_cycle;

    fn query(p: &InMemoryProvider, key: &str, top_k: TopK) -> Result<Vec<(String, f64)>> {
        Ok(p.query_successors(&SuccessorQuery::new(key, top_k)?)?
            .into_entries()
            .into_iter()
            .map(|(k, v)| (k.0, v))
            .collect())
    }

    #[test]
    fn lists_successors_in_canonical_order() {
        let p = InMemoryProvider::new(two_state_cycle(0.6));
        assert_eq!(
            query(&p, "0", TopK::All).unwrap(),
            vec![("0".into(), 0.6), ("1".into(), 0.4)]
        );
        assert_eq!(query(&p, "0", TopK::K(1)).unwrap(), vec![("0".into(), 0.6)]);
    }

    #[test]
    fn unknown_keys_are_not_found() {
        let p = InMemoryProvider::new(two_state_cycle(0.6));
        for key in ["2", "01", "x", ""] {
            assert!(
                matches!(query(&p, key, TopK::All), Err(Error::NotFound(_))),
                "{key}"
            );
        }
        assert!(SuccessorQuery::new("0", TopK::K(0)).is_err());
    }
}
