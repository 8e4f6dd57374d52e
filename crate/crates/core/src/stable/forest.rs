//! Union-find over point indices with per-component size and coordinate sums.

use crate::instance::Instance;

#[derive(Debug, Clone)]
pub struct ComponentForest {
    parent: Vec<usize>,
    size: Vec<usize>,
    min_member: Vec<usize>,
    sum: Vec<f64>,
    d: usize,
    component_count: usize,
    /// Bumped whenever a root absorbs another component.
    version: Vec<u64>,
    next_version: u64,
}

impl ComponentForest {
    /// All points as singletons.
    pub fn new(inst: &Instance) -> Self {
        let n = inst.n();
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            min_member: (0..n).collect(),
            sum: inst.points().as_slice().to_vec(),
            d: inst.d(),
            component_count: n,
            version: (0..n as u64).collect(),
            next_version: n as u64,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Merges the components of `a` and `b`; false if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] { (ra, rb) } else { (rb, ra) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        self.min_member[big] = self.min_member[big].min(self.min_member[small]);
        let d = self.d;
        for t in 0..d {
            self.sum[big * d + t] += self.sum[small * d + t];
        }
        self.version[big] = self.next_version;
        self.next_version += 1;
        self.component_count -= 1;
        true
    }

    pub fn is_root(&self, x: usize) -> bool {
        self.parent[x] == x
    }

    /// Size of the component rooted at `root`.
    pub fn size_of(&self, root: usize) -> usize {
        self.size[root]
    }

    pub fn min_member_of(&self, root: usize) -> usize {
        self.min_member[root]
    }

    /// Running mean of the component rooted at `root`.
    pub fn mean(&self, root: usize) -> Vec<f64> {
        let s = self.size[root] as f64;
        self.sum[root * self.d..(root + 1) * self.d].iter().map(|v| v / s).collect()
    }

    /// Identifies a component's member set: unchanged until the root absorbs another component.
    pub(crate) fn version_of(&self, root: usize) -> u64 {
        self.version[root]
    }

    /// Root of every point.
    pub fn root_labels(&mut self) -> Vec<usize> {
        (0..self.len()).map(|i| self.find(i)).collect()
    }

    /// Roots of the `k` largest components, size ties to the smallest member index.
    pub fn largest_roots(&self, k: usize) -> Vec<usize> {
        let mut roots: Vec<usize> = (0..self.len()).filter(|&x| self.is_root(x)).collect();
        let key = |&r: &usize| (std::cmp::Reverse(self.size[r]), self.min_member[r]);
        if roots.len() > k {
            roots.select_nth_unstable_by_key(k, key);
            roots.truncate(k);
        }
        roots.sort_unstable_by_key(key);
        roots
    }

    /// Like [`Self::largest_roots`] but only over roots accepted by `keep`.
    pub fn largest_roots_where(&self, k: usize, keep: impl Fn(usize) -> bool) -> Vec<usize> {
        let mut roots: Vec<usize> = (0..self.len()).filter(|&x| self.is_root(x) && keep(x)).collect();
        let key = |&r: &usize| (std::cmp::Reverse(self.size[r]), self.min_member[r]);
        roots.sort_unstable_by_key(key);
        roots.truncate(k);
        roots
    }

    /// Member lists of all components, ordered by smallest member.
    pub fn components(&mut self) -> Vec<Vec<usize>> {
        let labels = self.root_labels();
        let mut slot = vec![usize::MAX; self.len()];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for (i, &r) in labels.iter().enumerate() {
            if slot[r] == usize::MAX {
                slot[r] = out.len();
                out.push(Vec::new());
            }
            out[slot[r]].push(i);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_tracks_counts_sizes_and_means() {
        let inst = Instance::from_scalars(&[0.0, 2.0, 10.0, 12.0]).unwrap();
        let mut f = ComponentForest::new(&inst);
        assert_eq!(f.component_count(), 4);
        assert!(f.union(0, 1));
        assert!(!f.union(1, 0));
        assert!(f.union(2, 3));
        assert_eq!(f.component_count(), 2);
        let r = f.find(3);
        assert_eq!(f.size_of(r), 2);
        assert_eq!(f.mean(r), vec![11.0]);
        assert_eq!(f.min_member_of(r), 2);
        assert_eq!(f.components(), vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn largest_roots_breaks_ties_by_min_member() {
        let inst = Instance::from_scalars(&[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut f = ComponentForest::new(&inst);
        f.union(3, 4);
        f.union(1, 2);
        let roots = f.largest_roots(2);
        assert_eq!(roots.iter().map(|&r| f.min_member_of(r)).collect::<Vec<_>>(), vec![1, 3]);
        let roots = f.largest_roots(3);
        assert_eq!(f.min_member_of(roots[2]), 0);
    }
}
