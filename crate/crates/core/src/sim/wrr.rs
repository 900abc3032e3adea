//! Smooth weighted round-robin scheduling.

/// Smooth weighted round-robin over a fixed member set.
///
/// Each pick adds every member's weight to its running counter, grants the
/// member with the largest counter (ties to the lowest id), and subtracts
/// the total weight from the winner. Over any window of `n` picks each
/// member is granted `n * w / total` slots to within one slot, and grants
/// are spread evenly rather than bunched.
#[derive(Debug, Clone)]
pub struct SmoothWrr {
    ids: Vec<usize>,
    weights: Vec<u64>,
    current: Vec<i64>,
    total: u64,
}

impl SmoothWrr {
    /// Build a scheduler over `(id, weight)` members; weights must be >= 1.
    /// Panics on an empty member list or a zero weight (group sizes are
    /// always at least 1).
    pub fn new(members: &[(usize, u64)]) -> SmoothWrr {
        assert!(!members.is_empty(), "scheduler needs at least one member");
        assert!(
            members.iter().all(|(_, w)| *w >= 1),
            "scheduler weights must be >= 1"
        );
        SmoothWrr {
            ids: members.iter().map(|(id, _)| *id).collect(),
            weights: members.iter().map(|(_, w)| *w).collect(),
            current: vec![0; members.len()],
            total: members.iter().map(|(_, w)| *w).sum(),
        }
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    /// Grant the next slot.
    pub fn pick(&mut self) -> usize {
        let mut best = 0;
        for i in 0..self.ids.len() {
            self.current[i] += self.weights[i] as i64;
            if self.current[i] > self.current[best] {
                best = i;
            }
        }
        self.current[best] -= self.total as i64;
        self.ids[best]
    }
}
