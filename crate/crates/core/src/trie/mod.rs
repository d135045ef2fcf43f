//! String dictionaries stored as a 4-bit trie in a single byte arena.
//!
//! Strings are treated as byte sequences and split into nibbles, high nibble
//! first, so edge labels are 4-bit values and a node has at most 16
//! children. Leaves enumerated depth-first in nibble order come out in
//! byte-wise lexicographic order, so the i-th leaf is global-id `i`.
//!
//! Arena layout (all integers LEB128 unless noted):
//!
//! ```text
//! arena  := version:u8 value_count:u32le node
//! node   := header:u8 [prefix_len prefix_nibbles] [labels] meta* child*
//! header := terminal:1 has_prefix:1 unused:1 fanout:5
//! labels := ceil(fanout/2) bytes of packed child nibbles
//! meta   := leaf_count subtree_bytes      (for every child but the last)
//! ```
//!
//! Children are stored back to back right after their parent's metadata, so
//! the offset of child `j` is the sum of the sizes of children `0..j`. A
//! terminal node marks the end of a stored string; because a string sorts
//! before every extension of it, the terminal leaf precedes all children.
//!
//! Size bound: `arena_bytes() <= 6 + Σ|s| + 36·n` for `n` strings of total
//! length `Σ|s|`. Every node is either terminal or branching, so there are at
//! most `2n` nodes, each paying at most 7 bytes of header/prefix overhead,
//! half a byte per label and 10 bytes of metadata per child.

mod bloom;
mod subdict;

pub use bloom::BloomFilter;
pub use subdict::{SubDictConfig, SubDictionary, SubDictionarySet, SubProbe};

use crate::error::{Error, Result};

const LAYOUT_VERSION: u8 = 1;
const ROOT: usize = 5;
const TERMINAL: u8 = 0x80;
const HAS_PREFIX: u8 = 0x40;
const FANOUT_MASK: u8 = 0x1f;

#[derive(Clone, PartialEq, Eq)]
pub struct TrieDictionary {
    arena: Vec<u8>,
    value_count: u32,
}

impl std::fmt::Debug for TrieDictionary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrieDictionary")
            .field("value_count", &self.value_count)
            .field("arena_bytes", &self.arena.len())
            .finish()
    }
}

#[inline]
fn nibble(s: &[u8], i: usize) -> u8 {
    let b = s[i / 2];
    if i % 2 == 0 {
        b >> 4
    } else {
        b & 0x0f
    }
}

fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

fn pack_nibbles(out: &mut Vec<u8>, nibbles: impl Iterator<Item = u8>) {
    let mut pending: Option<u8> = None;
    for n in nibbles {
        match pending.take() {
            None => pending = Some(n),
            Some(hi) => out.push((hi << 4) | n),
        }
    }
    if let Some(hi) = pending {
        out.push(hi << 4);
    }
}

/// Bounds-checked reader over the arena.
struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn byte(&mut self) -> Option<u8> {
        let b = *self.buf.get(self.pos)?;
        self.pos += 1;
        Some(b)
    }

    fn varint(&mut self) -> Option<u64> {
        let mut v = 0u64;
        for shift in (0..64).step_by(7) {
            let b = self.byte()?;
            v |= ((b & 0x7f) as u64) << shift;
            if b & 0x80 == 0 {
                return Some(v);
            }
        }
        None
    }

    fn slice(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.buf.get(self.pos..self.pos.checked_add(n)?)?;
        self.pos += n;
        Some(s)
    }
}

/// Decoded node header plus child metadata.
struct Node<'a> {
    terminal: bool,
    prefix: &'a [u8],
    prefix_len: usize,
    fanout: usize,
    labels: [u8; 16],
    counts: [u64; 16],
    sizes: [u64; 16],
    children_start: usize,
}

impl<'a> Node<'a> {
    fn parse(buf: &'a [u8], pos: usize) -> Option<Node<'a>> {
        let mut c = Cursor { buf, pos };
        let header = c.byte()?;
        let fanout = (header & FANOUT_MASK) as usize;
        if fanout > 16 {
            return None;
        }
        let (prefix_len, prefix) = if header & HAS_PREFIX != 0 {
            let len = c.varint()? as usize;
            (len, c.slice(len.div_ceil(2))?)
        } else {
            (0, &[][..])
        };
        let mut labels = [0u8; 16];
        if fanout > 0 {
            let packed = c.slice(fanout.div_ceil(2))?;
            for (j, label) in labels.iter_mut().enumerate().take(fanout) {
                *label = nibble(packed, j);
            }
        }
        let mut counts = [0u64; 16];
        let mut sizes = [0u64; 16];
        for j in 0..fanout.saturating_sub(1) {
            counts[j] = c.varint()?;
            sizes[j] = c.varint()?;
        }
        Some(Node {
            terminal: header & TERMINAL != 0,
            prefix,
            prefix_len,
            fanout,
            labels,
            counts,
            sizes,
            children_start: c.pos,
        })
    }

    fn prefix_nibble(&self, i: usize) -> u8 {
        nibble(self.prefix, i)
    }

    fn child_offset(&self, j: usize) -> usize {
        self.children_start + self.sizes[..j].iter().sum::<u64>() as usize
    }
}

impl TrieDictionary {
    /// Builds a trie over strictly ascending byte strings.
    pub fn build<S: AsRef<[u8]>>(sorted: &[S]) -> Result<Self> {
        for (i, w) in sorted.windows(2).enumerate() {
            if w[0].as_ref() >= w[1].as_ref() {
                return Err(Error::Trie(format!(
                    "input not strictly ascending at position {}",
                    i + 1
                )));
            }
        }
        let value_count = u32::try_from(sorted.len()).map_err(|_| Error::Trie("more than u32::MAX values".into()))?;
        let keys: Vec<&[u8]> = sorted.iter().map(|s| s.as_ref()).collect();
        let mut arena = Vec::with_capacity(16 + keys.len() * 4);
        arena.push(LAYOUT_VERSION);
        arena.extend_from_slice(&value_count.to_le_bytes());
        if keys.is_empty() {
            arena.push(0);
        } else {
            arena.extend_from_slice(&build_node(&keys, 0));
        }
        Ok(TrieDictionary { arena, value_count })
    }

    /// Adopts a serialized arena, checking the layout version and that the
    /// node structure enumerates exactly the advertised number of values.
    pub fn from_arena(arena: Vec<u8>) -> Result<Self> {
        if arena.len() < ROOT + 1 {
            return Err(Error::Trie("arena too short".into()));
        }
        if arena[0] != LAYOUT_VERSION {
            return Err(Error::Trie(format!("unknown layout version {}", arena[0])));
        }
        let value_count = u32::from_le_bytes(arena[1..5].try_into().expect("4 bytes"));
        let trie = TrieDictionary { arena, value_count };
        let mut seen = 0u64;
        let mut ok = true;
        trie.walk(|_| seen += 1, &mut ok);
        if !ok || seen != value_count as u64 {
            return Err(Error::Trie("arena structure does not match value count".into()));
        }
        Ok(trie)
    }

    pub fn arena(&self) -> &[u8] {
        &self.arena
    }

    pub fn arena_bytes(&self) -> usize {
        self.arena.len()
    }

    pub fn len(&self) -> usize {
        self.value_count as usize
    }

    pub fn is_empty(&self) -> bool {
        self.value_count == 0
    }

    /// Upper bound on the arena size for `n` strings totalling `raw` bytes.
    pub fn size_bound(n: usize, raw: usize) -> usize {
        6 + raw + 36 * n
    }

    /// Rank of `key`, or `None` if it is not stored.
    pub fn value_to_id(&self, key: &[u8]) -> Option<u32> {
        let total = key.len() * 2;
        let mut depth = 0usize;
        let mut acc = 0u64;
        let mut pos = ROOT;
        loop {
            let node = Node::parse(&self.arena, pos)?;
            if node.prefix_len > total - depth {
                return None;
            }
            for i in 0..node.prefix_len {
                if node.prefix_nibble(i) != nibble(key, depth + i) {
                    return None;
                }
            }
            depth += node.prefix_len;
            if depth == total {
                return node.terminal.then_some(acc as u32);
            }
            if node.terminal {
                acc += 1;
            }
            let target = nibble(key, depth);
            let j = (0..node.fanout).find(|&j| node.labels[j] == target)?;
            acc += node.counts[..j].iter().sum::<u64>();
            pos = node.child_offset(j);
            depth += 1;
        }
    }

    /// Bytes of the `id`-th string in lexicographic order.
    pub fn id_to_bytes(&self, id: u32) -> Result<Vec<u8>> {
        if id >= self.value_count {
            return Err(Error::Index(format!(
                "global-id {id} out of range for {} values",
                self.value_count
            )));
        }
        let corrupt = || Error::Trie("corrupt arena".into());
        let mut nibbles: Vec<u8> = Vec::with_capacity(32);
        let mut remaining = id as u64;
        let mut pos = ROOT;
        loop {
            let node = Node::parse(&self.arena, pos).ok_or_else(corrupt)?;
            nibbles.extend((0..node.prefix_len).map(|i| node.prefix_nibble(i)));
            if node.terminal {
                if remaining == 0 {
                    break;
                }
                remaining -= 1;
            }
            if node.fanout == 0 {
                return Err(corrupt());
            }
            // at most 16 children examined per node
            let mut j = 0;
            while j + 1 < node.fanout && remaining >= node.counts[j] {
                remaining -= node.counts[j];
                j += 1;
            }
            nibbles.push(node.labels[j]);
            pos = node.child_offset(j);
        }
        if nibbles.len() % 2 != 0 {
            return Err(corrupt());
        }
        Ok(nibbles.chunks(2).map(|p| (p[0] << 4) | p[1]).collect())
    }

    pub fn id_to_value(&self, id: u32) -> Result<String> {
        let bytes = self.id_to_bytes(id)?;
        String::from_utf8(bytes).map_err(|_| Error::Trie("stored value is not UTF-8".into()))
    }

    /// All stored strings in id order.
    pub fn to_vec(&self) -> Vec<Vec<u8>> {
        let mut out = Vec::with_capacity(self.len());
        let mut ok = true;
        self.walk(|s| out.push(s.to_vec()), &mut ok);
        out
    }

    /// Depth-first enumeration with an explicit stack.
    fn walk(&self, mut visit: impl FnMut(&[u8]), ok: &mut bool) {
        // (node offset, nibble depth at the edge into this node, edge label)
        let mut stack: Vec<(usize, usize, Option<u8>)> = vec![(ROOT, 0, None)];
        let mut nibbles: Vec<u8> = Vec::new();
        let mut bytes = Vec::new();
        while let Some((pos, depth, label)) = stack.pop() {
            let Some(node) = Node::parse(&self.arena, pos) else {
                *ok = false;
                return;
            };
            nibbles.truncate(depth);
            nibbles.extend(label);
            nibbles.extend((0..node.prefix_len).map(|i| node.prefix_nibble(i)));
            if node.terminal {
                if nibbles.len() % 2 != 0 {
                    *ok = false;
                    return;
                }
                bytes.clear();
                bytes.extend(nibbles.chunks(2).map(|p| (p[0] << 4) | p[1]));
                visit(&bytes);
            }
            let here = nibbles.len();
            for j in (0..node.fanout).rev() {
                let off = node.child_offset(j);
                if off >= self.arena.len() {
                    *ok = false;
                    return;
                }
                stack.push((off, here, Some(node.labels[j])));
            }
        }
    }
}

fn build_node(keys: &[&[u8]], depth: usize) -> Vec<u8> {
    let first = keys[0];
    let last = keys[keys.len() - 1];
    let limit = (first.len() * 2).min(last.len() * 2);
    let mut end = depth;
    while end < limit && nibble(first, end) == nibble(last, end) {
        end += 1;
    }
    let terminal = first.len() * 2 == end;
    let rest = if terminal { &keys[1..] } else { keys };

    let mut groups: Vec<(u8, &[&[u8]])> = Vec::new();
    let mut start = 0;
    while start < rest.len() {
        let label = nibble(rest[start], end);
        let mut stop = start + 1;
        while stop < rest.len() && nibble(rest[stop], end) == label {
            stop += 1;
        }
        groups.push((label, &rest[start..stop]));
        start = stop;
    }
    let children: Vec<Vec<u8>> = groups.iter().map(|(_, g)| build_node(g, end + 1)).collect();

    let prefix_len = end - depth;
    let mut header = groups.len() as u8;
    if terminal {
        header |= TERMINAL;
    }
    if prefix_len > 0 {
        header |= HAS_PREFIX;
    }
    let mut out = vec![header];
    if prefix_len > 0 {
        put_varint(&mut out, prefix_len as u64);
        pack_nibbles(&mut out, (depth..end).map(|i| nibble(first, i)));
    }
    pack_nibbles(&mut out, groups.iter().map(|(l, _)| *l));
    for ((_, g), child) in groups.iter().zip(&children).take(groups.len().saturating_sub(1)) {
        put_varint(&mut out, g.len() as u64);
        put_varint(&mut out, child.len() as u64);
    }
    for child in children {
        out.extend_from_slice(&child);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn build(words: &[&str]) -> TrieDictionary {
        TrieDictionary::build(words).unwrap()
    }

    #[test]
    fn ranks_follow_sorted_order() {
        let t = build(&["car", "cart", "cat"]);
        assert_eq!(t.len(), 3);
        assert_eq!(t.value_to_id(b"car"), Some(0));
        assert_eq!(t.value_to_id(b"cart"), Some(1));
        assert_eq!(t.value_to_id(b"cat"), Some(2));
        assert_eq!(t.id_to_value(1).unwrap(), "cart");
    }

    #[test]
    fn prefix_of_member_is_absent() {
        let t = build(&["car", "cart", "cat"]);
        assert_eq!(t.value_to_id(b"ca"), None);
        assert_eq!(t.value_to_id(b"carts"), None);
        assert_eq!(t.value_to_id(b""), None);
    }

    #[test]
    fn small_lookups() {
        assert_eq!(build(&["a", "b"]).id_to_value(0).unwrap(), "a");
        assert_eq!(build(&["aa", "ab", "b"]).id_to_value(1).unwrap(), "ab");
        assert!(build(&["a"]).id_to_value(1).is_err());
    }

    #[test]
    fn empty_and_empty_string() {
        let empty = TrieDictionary::build::<&str>(&[]).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.value_to_id(b"x"), None);
        assert!(empty.id_to_bytes(0).is_err());

        let t = build(&["", "a", "ab"]);
        assert_eq!(t.value_to_id(b""), Some(0));
        assert_eq!(t.id_to_value(0).unwrap(), "");
        assert_eq!(t.id_to_value(2).unwrap(), "ab");
    }

    #[test]
    fn rejects_unsorted_and_duplicates() {
        assert!(TrieDictionary::build(&["b", "a"]).is_err());
        assert!(TrieDictionary::build(&["a", "a"]).is_err());
    }

    #[test]
    fn arena_roundtrip_and_validation() {
        let t = build(&["alpha", "beta", "betamax", "gamma"]);
        let again = TrieDictionary::from_arena(t.arena().to_vec()).unwrap();
        assert_eq!(again, t);
        let mut bad = t.arena().to_vec();
        bad[0] = 9;
        assert!(TrieDictionary::from_arena(bad).is_err());
        let mut lying = t.arena().to_vec();
        lying[1] = 5;
        assert!(TrieDictionary::from_arena(lying).is_err());
    }

    #[test]
    fn random_thousand_matches_sorted_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut words: Vec<String> = (0..1000)
            .map(|_| {
                let len = rng.gen_range(0..12);
                (0..len).map(|_| rng.gen_range(b'a'..=b'e') as char).collect()
            })
            .collect();
        words.sort();
        words.dedup();
        let t = TrieDictionary::build(&words).unwrap();
        for (i, w) in words.iter().enumerate() {
            assert_eq!(t.id_to_value(i as u32).unwrap(), *w);
            assert_eq!(t.value_to_id(w.as_bytes()), Some(i as u32));
        }
        let enumerated: Vec<String> = t.to_vec().into_iter().map(|b| String::from_utf8(b).unwrap()).collect();
        assert_eq!(enumerated, words);
    }

    #[test]
    fn shared_prefix_halves_storage() {
        let words: Vec<String> = (0..10_000).map(|i| format!("table_2011-{i:05}")).collect();
        let raw: usize = words.iter().map(|w| w.len()).sum();
        let t = TrieDictionary::build(&words).unwrap();
        assert!(
            (t.arena_bytes() as f64) < 0.5 * raw as f64,
            "arena {} vs raw {raw}",
            t.arena_bytes()
        );
    }

    proptest! {
        #[test]
        fn bidirectional_roundtrip(mut set in prop::collection::vec(prop::collection::vec(any::<u8>(), 0..8), 0..60)) {
            set.sort();
            set.dedup();
            let t = TrieDictionary::build(&set).unwrap();
            let raw: usize = set.iter().map(|s| s.len()).sum();
            prop_assert!(t.arena_bytes() <= TrieDictionary::size_bound(set.len(), raw));
            for (i, s) in set.iter().enumerate() {
                prop_assert_eq!(t.value_to_id(s), Some(i as u32));
                prop_assert_eq!(&t.id_to_bytes(i as u32).unwrap(), s);
            }
            prop_assert_eq!(t.to_vec(), set);
        }

        #[test]
        fn unicode_strings_roundtrip(mut set in prop::collection::vec("\\PC{0,6}", 0..40)) {
            set.sort();
            set.dedup();
            let t = TrieDictionary::build(&set).unwrap();
            for (i, s) in set.iter().enumerate() {
                prop_assert_eq!(t.value_to_id(s.as_bytes()), Some(i as u32));
                prop_assert_eq!(&t.id_to_value(i as u32).unwrap(), s);
            }
        }
    }
}
