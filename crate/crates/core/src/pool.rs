//! Bounded ordered candidate pool backing the greedy graph walk.
//!
//! The pool keeps at most `capacity` entries sorted by descending score with
//! ties broken by ascending id, and tracks which entries have already been
//! expanded ("checked"). Float comparisons use the IEEE total order, so the
//! layout is deterministic for any input.

/// One scored candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolEntry {
    pub id: u32,
    pub score: f32,
    pub checked: bool,
}

/// Fixed-capacity candidate pool ordered by `(score desc, id asc)`.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    capacity: usize,
    entries: Vec<PoolEntry>,
}

impl CandidatePool {
    /// Creates an empty pool holding at most `capacity >= 1` entries.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "pool capacity must be at least 1");
        CandidatePool {
            capacity,
            entries: Vec::with_capacity(capacity + 1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    /// Inserts an unchecked candidate, keeping order, capacity, and id
    /// uniqueness. Returns whether the entry was retained; an id already in
    /// the pool is never inserted again. (Searches also dedup upstream via the
    /// visited set, so the scan here almost never sees a duplicate.)
    pub fn insert(&mut self, id: u32, score: f32) -> bool {
        if self.entries.iter().any(|e| e.id == id) {
            return false;
        }
        let pos = self
            .entries
            .partition_point(|e| match score.total_cmp(&e.score) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Equal => e.id < id,
                std::cmp::Ordering::Greater => false,
            });
        if pos >= self.capacity {
            return false;
        }
        self.entries.insert(
            pos,
            PoolEntry {
                id,
                score,
                checked: false,
            },
        );
        self.entries.truncate(self.capacity);
        true
    }

    /// Index of the best-ranked entry not yet expanded.
    pub fn first_unchecked(&self) -> Option<usize> {
        self.entries.iter().position(|e| !e.checked)
    }

    /// Marks the entry at `idx` as expanded and returns its id.
    pub fn mark_checked(&mut self, idx: usize) -> u32 {
        self.entries[idx].checked = true;
        self.entries[idx].id
    }

    /// Ids of the best `k` entries (fewer if the pool is smaller).
    pub fn top_ids(&self, k: usize) -> Vec<u32> {
        self.entries.iter().take(k).map(|e| e.id).collect()
    }

    /// Best score currently held, if any.
    pub fn best_score(&self) -> Option<f32> {
        self.entries.first().map(|e| e.score)
    }
}
