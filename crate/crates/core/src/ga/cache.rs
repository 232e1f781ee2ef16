use std::collections::HashMap;
use std::sync::Arc;

use crate::eval::FieldColumn;

/// Evaluated term columns keyed by computable string.
///
/// Holds at most `capacity` columns; when full, the entries least recently
/// used (by generation stamp) are evicted.
#[derive(Debug)]
pub struct TermCache {
    entries: HashMap<String, (Arc<FieldColumn>, u64)>,
    capacity: usize,
    stamp: u64,
}

impl TermCache {
    /// A cache sized so that its columns fit in `budget_bytes`.
    pub fn with_budget(budget_bytes: usize, n_rows: usize) -> Self {
        let per_column = n_rows.max(1) * std::mem::size_of::<f64>();
        TermCache::new((budget_bytes / per_column).max(1))
    }

    pub fn new(capacity: usize) -> Self {
        TermCache {
            entries: HashMap::new(),
            capacity: capacity.max(1),
            stamp: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Advances the recency clock; call once per generation.
    pub fn tick(&mut self) {
        self.stamp += 1;
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get(&mut self, key: &str) -> Option<Arc<FieldColumn>> {
        let stamp = self.stamp;
        self.entries.get_mut(key).map(|(col, used)| {
            *used = stamp;
            Arc::clone(col)
        })
    }

    /// Looks up without touching the recency stamp.
    pub fn peek(&self, key: &str) -> Option<&Arc<FieldColumn>> {
        self.entries.get(key).map(|(col, _)| col)
    }

    pub fn insert(&mut self, key: String, col: Arc<FieldColumn>) {
        if self.entries.len() >= self.capacity && !self.entries.contains_key(&key) {
            self.evict(self.entries.len() + 1 - self.capacity);
        }
        self.entries.insert(key, (col, self.stamp));
    }

    fn evict(&mut self, count: usize) {
        let mut by_age: Vec<(u64, String)> = self
            .entries
            .iter()
            .map(|(k, (_, s))| (*s, k.clone()))
            .collect();
        // evict a batch so inserts do not rescan every time
        let count = count.max(self.capacity / 4).min(by_age.len());
        by_age.sort_unstable();
        for (_, k) in by_age.into_iter().take(count) {
            self.entries.remove(&k);
        }
    }
}
