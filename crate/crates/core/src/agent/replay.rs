use rand::Rng;

use super::{AgentError, Transition};

/// Complete binary tree of priorities; internal nodes hold the sum of their
/// children, so proportional sampling and updates are `O(log n)`.
#[derive(Debug, Clone)]
pub struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        let leaves = capacity.max(1).next_power_of_two();
        Self {
            leaves,
            nodes: vec![0.0; 2 * leaves],
        }
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.nodes[self.leaves + i]
    }

    /// Sets leaf `i`, recomputing each ancestor from its children rather than
    /// propagating a delta, so rounding errors never accumulate.
    pub fn set(&mut self, i: usize, priority: f64) {
        let mut node = self.leaves + i;
        self.nodes[node] = priority;
        while node > 1 {
            node /= 2;
            self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1];
        }
    }

    /// Leaf whose cumulative-priority interval contains `mass ∈ [0, total)`.
    pub fn find(&self, mut mass: f64) -> usize {
        let mut node = 1;
        while node < self.leaves {
            let left = 2 * node;
            if mass < self.nodes[left] || self.nodes[left + 1] <= 0.0 {
                node = left;
            } else {
                mass -= self.nodes[left];
                node = left + 1;
            }
        }
        node - self.leaves
    }
}

/// Proportional prioritized replay over a ring buffer.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    tree: SumTree,
    storage: Vec<Transition>,
    next: usize,
    per_alpha: f64,
    priority_epsilon: f64,
    max_priority: f64,
}

/// A sampled minibatch with its buffer slots and normalized importance weights.
#[derive(Debug, Clone)]
pub struct PrioritizedBatch {
    pub transitions: Vec<Transition>,
    pub indices: Vec<usize>,
    pub is_weights: Vec<f64>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, per_alpha: f64, priority_epsilon: f64) -> Result<Self, AgentError> {
        if capacity == 0 {
            return Err(AgentError::InvalidConfig(
                "replay capacity must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&per_alpha) {
            return Err(AgentError::InvalidConfig(
                "per_alpha must lie in [0, 1]".into(),
            ));
        }
        if !(priority_epsilon > 0.0 && priority_epsilon.is_finite()) {
            return Err(AgentError::InvalidConfig(
                "priority_epsilon must be positive".into(),
            ));
        }
        Ok(Self {
            capacity,
            tree: SumTree::new(capacity),
            storage: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
            per_alpha,
            priority_epsilon,
            max_priority: 1.0,
        })
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn tree(&self) -> &SumTree {
        &self.tree
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.storage.get(i)
    }

    pub fn priority(&self, i: usize) -> f64 {
        self.tree.get(i)
    }

    /// `(|δ| + ε)^α`.
    pub fn priority_of(&self, td_error: f64) -> f64 {
        (td_error.abs() + self.priority_epsilon).powf(self.per_alpha)
    }

    /// Stores a transition at the current maximum priority, evicting the
    /// oldest one when full.
    pub fn insert(&mut self, t: Transition) {
        let slot = self.next;
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[slot] = t;
        }
        self.tree.set(slot, self.max_priority);
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn sample<R: Rng + ?Sized>(
        &self,
        k: usize,
        per_beta: f64,
        rng: &mut R,
    ) -> Result<PrioritizedBatch, AgentError> {
        let size = self.len();
        if size == 0 || k > size {
            return Err(AgentError::EmptyBuffer { requested: k, size });
        }
        let total = self.tree.total();
        let mut indices = Vec::with_capacity(k);
        let mut weights = Vec::with_capacity(k);
        for _ in 0..k {
            let mass = rng.gen::<f64>() * total;
            let i = self.tree.find(mass).min(size - 1);
            let p = self.tree.get(i) / total;
            indices.push(i);
            weights.push((size as f64 * p).powf(-per_beta));
        }
        let max = weights.iter().cloned().fold(f64::MIN, f64::max);
        weights.iter_mut().for_each(|w| *w /= max);
        let transitions = indices.iter().map(|&i| self.storage[i].clone()).collect();
        Ok(PrioritizedBatch {
            transitions,
            indices,
            is_weights: weights,
        })
    }

    pub fn update(&mut self, indices: &[usize], td_errors: &[f64]) {
        for (&i, &delta) in indices.iter().zip(td_errors) {
            let p = self.priority_of(delta);
            self.max_priority = self.max_priority.max(p);
            self.tree.set(i, p);
        }
    }
}

pub fn per_insert(buf: &mut ReplayBuffer, t: Transition) {
    buf.insert(t)
}

pub fn per_sample<R: Rng + ?Sized>(
    buf: &ReplayBuffer,
    k: usize,
    per_beta: f64,
    rng: &mut R,
) -> Result<PrioritizedBatch, AgentError> {
    buf.sample(k, per_beta, rng)
}

pub fn per_update(buf: &mut ReplayBuffer, indices: &[usize], td_errors: &[f64]) {
    buf.update(indices, td_errors)
}
