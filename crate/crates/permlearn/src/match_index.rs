//! Approximate close-match search over an image set.
//!
//! Each of `l` trees stores every image keyed by the lexicographic order of
//! its bits read through a random pixel ordering; lexicographic order on
//! fixed-length binary strings makes each tree a bit-trie. Any subtree
//! holding at most `m` images collapses to a leaf. A query descends each
//! tree by its own bits until it reaches a leaf or the required branch does
//! not exist, collects every image under the stopping node, and the closest
//! candidate by Hamming distance over the union of all trees wins.

use std::collections::HashSet;

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::bits::Permutation;
use crate::error::{Error, Result};
use crate::image::BitImage;

/// An indexed collection of same-side binary images; ids are positions.
#[derive(Clone, Debug)]
pub struct ImageSet {
    side: usize,
    images: Vec<BitImage>,
    min_minority: Option<f64>,
}

impl ImageSet {
    pub fn new(images: Vec<BitImage>) -> Result<Self> {
        Self::with_filter(images, None)
    }

    /// Records the admission filter the set was built with and verifies
    /// every image passes it.
    pub fn with_filter(images: Vec<BitImage>, min_minority: Option<f64>) -> Result<Self> {
        let side = match images.first() {
            Some(img) => img.side(),
            None => return Err(Error::EmptyImageSet),
        };
        for (i, img) in images.iter().enumerate() {
            if img.side() != side {
                return Err(Error::InvalidData(format!(
                    "image {i} has side {} but the set has side {side}",
                    img.side()
                )));
            }
            if let Some(f) = min_minority {
                if img.minority_fraction() < f {
                    return Err(Error::InvalidData(format!(
                        "image {i} fails the minority filter: {:.4} < {f}",
                        img.minority_fraction()
                    )));
                }
            }
        }
        Ok(ImageSet {
            side,
            images,
            min_minority,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn get(&self, id: u32) -> &BitImage {
        &self.images[id as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = &BitImage> {
        self.images.iter()
    }

    pub fn min_minority(&self) -> Option<f64> {
        self.min_minority
    }

    /// Content hash covering side and packed pixel data of every image, in
    /// id order.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.side as u64).to_le_bytes());
        hasher.update((self.images.len() as u64).to_le_bytes());
        for img in &self.images {
            for w in img.bits().words() {
                hasher.update(w.to_le_bytes());
            }
        }
        hex_string(&hasher.finalize())
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Search outcome: image id and its Hamming distance to the query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Match {
    pub id: u32,
    pub distance: u64,
}

#[derive(Clone, Copy, Debug)]
enum NodeKind {
    Leaf,
    Split { zero: Option<u32>, one: Option<u32> },
}

#[derive(Clone, Copy, Debug)]
struct Node {
    start: u32,
    end: u32,
    kind: NodeKind,
}

struct Trie {
    ordering: Permutation,
    nodes: Vec<Node>,
    ordered_ids: Vec<u32>,
}

/// Replicated random-ordering bit-tries over one [`ImageSet`].
pub struct MatchIndex<'a> {
    set: &'a ImageSet,
    leaf_capacity: usize,
    trees: Vec<Trie>,
}

impl<'a> MatchIndex<'a> {
    /// Builds `l` trees with leaf capacity `m`; each tree draws its own
    /// random pixel ordering from `rng`.
    pub fn build(set: &'a ImageSet, l: usize, m: usize, rng: &mut impl Rng) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::EmptyImageSet);
        }
        if l == 0 || m == 0 {
            return Err(Error::InvalidConfig(format!(
                "tree count and leaf capacity must be positive (l={l}, m={m})"
            )));
        }
        let n_bits = set.side() * set.side();
        let trees = (0..l)
            .map(|_| build_trie(set, Permutation::random(n_bits, rng), m))
            .collect();
        Ok(MatchIndex {
            set,
            leaf_capacity: m,
            trees,
        })
    }

    pub fn set(&self) -> &'a ImageSet {
        self.set
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn leaf_capacity(&self) -> usize {
        self.leaf_capacity
    }

    pub fn orderings(&self) -> impl Iterator<Item = &Permutation> {
        self.trees.iter().map(|t| &t.ordering)
    }

    /// Closest candidate over the union of per-tree stopping nodes; ties
    /// break toward the lowest image id.
    pub fn query(&self, q: &BitImage) -> Result<Match> {
        Ok(self.query_counted(q)?.0)
    }

    /// Like [`query`](Self::query) but also reports how many distinct
    /// candidates had their distance evaluated.
    pub fn query_counted(&self, q: &BitImage) -> Result<(Match, usize)> {
        if q.side() != self.set.side() {
            return Err(Error::LengthMismatch {
                left: q.side(),
                right: self.set.side(),
            });
        }
        let mut seen: HashSet<u32> = HashSet::new();
        let mut best: Option<Match> = None;
        for tree in &self.trees {
            let (start, end) = descend(tree, q);
            for &id in &tree.ordered_ids[start as usize..end as usize] {
                if !seen.insert(id) {
                    continue;
                }
                let d = self.set.get(id).hamming(q)?;
                let better = match best {
                    None => true,
                    Some(b) => d < b.distance || (d == b.distance && id < b.id),
                };
                if better {
                    best = Some(Match { id, distance: d });
                }
            }
        }
        // Every tree stores every image, so at least one candidate exists.
        Ok((best.expect("nonempty set yields candidates"), seen.len()))
    }

    /// Walks every tree and checks the structural invariants: each tree
    /// holds every id exactly once, leaves hold at most `m` ids (unless all
    /// bits are exhausted), and internal subtrees hold more than `m`.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.set.len();
        let n_bits = self.set.side() * self.set.side();
        for (k, tree) in self.trees.iter().enumerate() {
            if tree.ordered_ids.len() != n {
                return Err(Error::InvalidData(format!(
                    "tree {k} stores {} ids, set has {n}",
                    tree.ordered_ids.len()
                )));
            }
            let mut seen = vec![false; n];
            for &id in &tree.ordered_ids {
                if seen[id as usize] {
                    return Err(Error::InvalidData(format!("tree {k} repeats id {id}")));
                }
                seen[id as usize] = true;
            }
            // depth-first structural walk
            let mut stack = vec![(0u32, 0usize)];
            while let Some((node_idx, depth)) = stack.pop() {
                let node = tree.nodes[node_idx as usize];
                let size = (node.end - node.start) as usize;
                match node.kind {
                    NodeKind::Leaf => {
                        if size == 0 || (size > self.leaf_capacity && depth < n_bits) {
                            return Err(Error::InvalidData(format!(
                                "tree {k} has leaf of size {size} at depth {depth}"
                            )));
                        }
                    }
                    NodeKind::Split { zero, one } => {
                        if size <= self.leaf_capacity {
                            return Err(Error::InvalidData(format!(
                                "tree {k} has internal node of size {size}"
                            )));
                        }
                        if zero.is_none() && one.is_none() {
                            return Err(Error::InvalidData(format!(
                                "tree {k} has childless internal node"
                            )));
                        }
                        let mut child_total = 0;
                        for child in [zero, one].into_iter().flatten() {
                            let c = tree.nodes[child as usize];
                            child_total += c.end - c.start;
                            if c.start < node.start || c.end > node.end {
                                return Err(Error::InvalidData(format!(
                                    "tree {k} child range escapes parent"
                                )));
                            }
                            stack.push((child, depth + 1));
                        }
                        if child_total != node.end - node.start {
                            return Err(Error::InvalidData(format!(
                                "tree {k} children cover {child_total} of {size} ids"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn descend(tree: &Trie, q: &BitImage) -> (u32, u32) {
    let bits = q.bits();
    let mut node = tree.nodes[0];
    let mut depth = 0usize;
    loop {
        match node.kind {
            NodeKind::Leaf => return (node.start, node.end),
            NodeKind::Split { zero, one } => {
                let bit = bits.get(tree.ordering.get(depth));
                match if bit { one } else { zero } {
                    Some(child) => {
                        node = tree.nodes[child as usize];
                        depth += 1;
                    }
                    // the required branch does not exist: stop here and
                    // take the whole subtree
                    None => return (node.start, node.end),
                }
            }
        }
    }
}

fn build_trie(set: &ImageSet, ordering: Permutation, m: usize) -> Trie {
    let n_bits = set.side() * set.side();
    let all_ids: Vec<u32> = (0..set.len() as u32).collect();
    let mut nodes: Vec<Node> = Vec::with_capacity(2 * set.len() / m.max(1) + 1);
    let mut ordered_ids: Vec<u32> = Vec::with_capacity(set.len());

    nodes.push(Node {
        start: 0,
        end: 0,
        kind: NodeKind::Leaf,
    });
    // LIFO order with the one-branch pushed first makes zero-branches (and
    // so lexicographically smaller suffixes) finish first, which keeps
    // ordered_ids in per-tree lexicographic order.
    let mut stack: Vec<(Vec<u32>, usize, u32)> = vec![(all_ids, 0, 0)];
    while let Some((ids, depth, slot)) = stack.pop() {
        let start = ordered_ids.len() as u32;
        let end = start + ids.len() as u32;
        if ids.len() <= m || depth == n_bits {
            ordered_ids.extend_from_slice(&ids);
            nodes[slot as usize] = Node {
                start,
                end,
                kind: NodeKind::Leaf,
            };
            continue;
        }
        let pos = ordering.get(depth);
        let mut zeros = Vec::new();
        let mut ones = Vec::new();
        for id in ids {
            if set.get(id).bits().get(pos) {
                ones.push(id);
            } else {
                zeros.push(id);
            }
        }
        let zero_slot = alloc_child(&mut nodes, &zeros);
        let one_slot = alloc_child(&mut nodes, &ones);
        nodes[slot as usize] = Node {
            start,
            end,
            kind: NodeKind::Split {
                zero: zero_slot,
                one: one_slot,
            },
        };
        if let Some(s) = one_slot {
            stack.push((ones, depth + 1, s));
        }
        if let Some(s) = zero_slot {
            stack.push((zeros, depth + 1, s));
        }
    }
    Trie {
        ordering,
        nodes,
        ordered_ids,
    }
}

fn alloc_child(nodes: &mut Vec<Node>, ids: &[u32]) -> Option<u32> {
    if ids.is_empty() {
        return None;
    }
    let slot = nodes.len() as u32;
    nodes.push(Node {
        start: 0,
        end: 0,
        kind: NodeKind::Leaf,
    });
    Some(slot)
}

/// Exact nearest neighbor by linear scan; lowest-id tie-break. The oracle
/// the approximate search is measured against.
pub fn exact_nearest(set: &ImageSet, q: &BitImage) -> Result<Match> {
    if set.is_empty() {
        return Err(Error::EmptyImageSet);
    }
    let mut best: Option<Match> = None;
    for id in 0..set.len() as u32 {
        let d = set.get(id).hamming(q)?;
        let better = match best {
            None => true,
            Some(b) => d < b.distance,
        };
        if better {
            best = Some(Match { id, distance: d });
        }
    }
    Ok(best.expect("set is nonempty"))
}
