use std::collections::BTreeSet;

use super::{BloomFilter, TrieDictionary};
use crate::error::Result;

#[derive(Debug, Clone, Copy)]
pub struct SubDictConfig {
    /// Number of most frequent values kept in the hot sub-dictionary.
    pub hot_values: usize,
    /// Consecutive chunks whose remaining values share one cold sub-dictionary.
    pub chunks_per_group: usize,
    /// False-positive target for a membership probe across the whole set.
    pub bloom_fpr: f64,
}

impl Default for SubDictConfig {
    fn default() -> Self {
        SubDictConfig {
            hot_values: 1024,
            chunks_per_group: 16,
            bloom_fpr: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubDictionary {
    /// Global-ids held here, ascending; local id `i` is `global_ids[i]`.
    pub global_ids: Vec<u32>,
    pub trie: TrieDictionary,
    pub bloom: BloomFilter,
    /// Chunk range this sub-dictionary was cut from (`None` for the hot one).
    pub chunks: Option<std::ops::Range<usize>>,
}

/// Result of resolving a value against a [`SubDictionarySet`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubProbe {
    pub global_id: Option<u32>,
    /// Sub-dictionaries that had to be consulted after the Bloom filters.
    pub loaded: Vec<usize>,
}

/// A string dictionary split into a hot part and per-chunk-group cold parts.
///
/// Index 0 is always the hot sub-dictionary. Global-ids are unchanged: they
/// remain ranks in the full dictionary, only the physical grouping differs.
#[derive(Debug, Clone)]
pub struct SubDictionarySet {
    subs: Vec<SubDictionary>,
    /// global-id -> (sub-dictionary, local id)
    assignment: Vec<(u32, u32)>,
}

impl SubDictionarySet {
    /// Splits `values` (the full sorted dictionary) given the global-ids each
    /// chunk uses and the row frequency of every global-id.
    pub fn plan(values: &[String], chunk_ids: &[&[u32]], frequency: &[u64], config: SubDictConfig) -> Result<Self> {
        assert_eq!(values.len(), frequency.len(), "frequency must cover every value");
        let n = values.len();
        let mut owner: Vec<Option<usize>> = vec![None; n];
        let mut groups: Vec<(Vec<u32>, Option<std::ops::Range<usize>>)> = Vec::new();

        if n <= config.hot_values {
            groups.push(((0..n as u32).collect(), None));
        } else {
            let mut by_freq: Vec<u32> = (0..n as u32).collect();
            by_freq.sort_by(|&a, &b| frequency[b as usize].cmp(&frequency[a as usize]).then(a.cmp(&b)));
            let mut hot: Vec<u32> = by_freq[..config.hot_values].to_vec();
            hot.sort_unstable();
            for &g in &hot {
                owner[g as usize] = Some(0);
            }
            groups.push((hot, None));

            let per = config.chunks_per_group.max(1);
            for start in (0..chunk_ids.len()).step_by(per) {
                let end = (start + per).min(chunk_ids.len());
                let mut ids = BTreeSet::new();
                for chunk in &chunk_ids[start..end] {
                    for &g in chunk.iter() {
                        if owner[g as usize].is_none() {
                            ids.insert(g);
                        }
                    }
                }
                if ids.is_empty() {
                    continue;
                }
                let idx = groups.len();
                for &g in &ids {
                    owner[g as usize] = Some(idx);
                }
                groups.push((ids.into_iter().collect(), Some(start..end)));
            }
            let orphans: Vec<u32> = (0..n as u32).filter(|&g| owner[g as usize].is_none()).collect();
            if !orphans.is_empty() {
                let idx = groups.len();
                for &g in &orphans {
                    owner[g as usize] = Some(idx);
                }
                groups.push((orphans, None));
            }
        }

        // split the probe budget evenly so a miss across all filters stays
        // within the configured rate
        let per_filter_fpr = config.bloom_fpr / groups.len() as f64;
        let mut assignment = vec![(0u32, 0u32); n];
        let mut subs = Vec::with_capacity(groups.len());
        for (sub_idx, (ids, chunks)) in groups.into_iter().enumerate() {
            let strings: Vec<&str> = ids.iter().map(|&g| values[g as usize].as_str()).collect();
            for (local, &g) in ids.iter().enumerate() {
                assignment[g as usize] = (sub_idx as u32, local as u32);
            }
            subs.push(SubDictionary {
                trie: TrieDictionary::build(&strings)?,
                bloom: BloomFilter::build(strings.iter().map(|s| s.as_bytes()), per_filter_fpr),
                global_ids: ids,
                chunks,
            });
        }
        Ok(SubDictionarySet { subs, assignment })
    }

    pub fn hot(&self) -> &SubDictionary {
        &self.subs[0]
    }

    pub fn cold(&self) -> &[SubDictionary] {
        &self.subs[1..]
    }

    pub fn len(&self) -> usize {
        self.subs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subs.is_empty()
    }

    pub fn value_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn assignment(&self, global_id: u32) -> Option<(u32, u32)> {
        self.assignment.get(global_id as usize).copied()
    }

    /// Resolves a value, consulting a sub-dictionary only when its Bloom
    /// filter admits the value.
    pub fn probe(&self, value: &str) -> SubProbe {
        let mut loaded = Vec::new();
        for (i, sub) in self.subs.iter().enumerate() {
            if !sub.bloom.maybe_contains(value.as_bytes()) {
                continue;
            }
            loaded.push(i);
            if let Some(local) = sub.trie.value_to_id(value.as_bytes()) {
                return SubProbe {
                    global_id: Some(sub.global_ids[local as usize]),
                    loaded,
                };
            }
        }
        SubProbe {
            global_id: None,
            loaded,
        }
    }

    pub fn value_at(&self, global_id: u32) -> Result<String> {
        let (sub, local) = self
            .assignment(global_id)
            .ok_or_else(|| crate::error::Error::Index(format!("global-id {global_id} not in sub-dictionaries")))?;
        self.subs[sub as usize].trie.id_to_value(local)
    }

    /// Sub-dictionaries needed to materialize every value of the given chunks.
    pub fn required_for(&self, chunk_ids: &[&[u32]]) -> BTreeSet<usize> {
        let mut need = BTreeSet::from([0usize]);
        for chunk in chunk_ids {
            for &g in chunk.iter() {
                need.insert(self.assignment[g as usize].0 as usize);
            }
        }
        need
    }

    /// The full dictionary, rebuilt in global-id order.
    pub fn reassemble(&self) -> Result<Vec<String>> {
        (0..self.assignment.len() as u32).map(|g| self.value_at(g)).collect()
    }

    pub fn size_bytes(&self) -> usize {
        self.subs
            .iter()
            .map(|s| s.trie.arena_bytes() + s.bloom.size_bytes() + s.global_ids.len() * 4)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn values(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{i:06}")).collect()
    }

    #[test]
    fn small_dictionary_is_single_hot() {
        let vals = values(10);
        let chunk: Vec<u32> = (0..10).collect();
        let set = SubDictionarySet::plan(&vals, &[&chunk], &[1; 10], SubDictConfig::default()).unwrap();
        assert_eq!(set.len(), 1);
        assert!(set.cold().is_empty());
        assert_eq!(set.reassemble().unwrap(), vals);
    }

    #[test]
    fn disjoint_chunk_groups_get_disjoint_cold_dicts() {
        // ids 0..4 are frequent everywhere; chunks {0,1} hold rare ids 4..54,
        // chunks {2,3} hold rare ids 54..104
        let vals = values(104);
        let mut freq = vec![1u64; 104];
        freq[..4].iter_mut().for_each(|f| *f = 1000);
        let c0: Vec<u32> = (0..4).chain(4..30).collect();
        let c1: Vec<u32> = (0..4).chain(30..54).collect();
        let c2: Vec<u32> = (0..4).chain(54..80).collect();
        let c3: Vec<u32> = (0..4).chain(80..104).collect();
        let cfg = SubDictConfig {
            hot_values: 4,
            chunks_per_group: 2,
            bloom_fpr: 0.01,
        };
        let set = SubDictionarySet::plan(&vals, &[&c0, &c1, &c2, &c3], &freq, cfg).unwrap();
        assert_eq!(set.hot().global_ids, vec![0, 1, 2, 3]);
        assert_eq!(set.cold().len(), 2);
        assert_eq!(set.cold()[0].global_ids, (4..54).collect::<Vec<_>>());
        assert_eq!(set.cold()[1].global_ids, (54..104).collect::<Vec<_>>());
        assert_eq!(set.reassemble().unwrap(), vals);
        // touching chunks {2,3} needs hot + one cold dictionary
        assert_eq!(set.required_for(&[&c2, &c3]), BTreeSet::from([0, 2]));
        for (g, v) in vals.iter().enumerate() {
            assert_eq!(set.probe(v).global_id, Some(g as u32));
            assert_eq!(set.value_at(g as u32).unwrap(), *v);
        }
    }

    #[test]
    fn absent_probes_mostly_stop_at_bloom_filters() {
        let vals = values(20_000);
        let chunks: Vec<Vec<u32>> = (0..20).map(|c| (c * 1000..(c + 1) * 1000).collect()).collect();
        let refs: Vec<&[u32]> = chunks.iter().map(|c| c.as_slice()).collect();
        let freq: Vec<u64> = (0..20_000u64).map(|i| 20_000 - i).collect();
        let set = SubDictionarySet::plan(&vals, &refs, &freq, SubDictConfig::default()).unwrap();
        assert!(set.cold().len() >= 2);
        let probes = 10_000;
        let free = (0..probes)
            .filter(|i| set.probe(&format!("absent-{i}")).loaded.is_empty())
            .count();
        assert!(free as f64 >= 0.99 * probes as f64, "{free} of {probes}");
    }
}
