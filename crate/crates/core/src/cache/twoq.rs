//! Scan-resistant artifact cache with an uncompressed and a compressed layer.
//!
//! New keys enter A1in, a FIFO. Hits there do not promote, so a one-time
//! scan only churns A1in. Keys evicted from A1in are remembered in the
//! ghost list A1out; a miss on a ghost admits straight into Am, the main
//! LRU. Under pressure A1in is trimmed to its share first, then the least
//! recently used hot entries of Am are compressed into the cold layer, and
//! only then are entries dropped.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::hash::Hash;
use std::sync::Arc;

use parking_lot::{Condvar, Mutex};
use serde::{Deserialize, Serialize};

use super::codec::{Codec, Lz4};
use crate::error::{Error, Result};

/// A value the cache can hold hot and serialize for the cold layer.
pub trait Artifact: Sized + Send + Sync + 'static {
    /// Bytes charged while hot.
    fn weight(&self) -> usize;
    fn encode(&self) -> Vec<u8>;
    fn decode(bytes: &[u8]) -> Result<Self>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Policy {
    TwoQ,
    /// Plain LRU over a single queue with no cold layer, for comparison.
    Lru,
}

#[derive(Debug, Clone)]
pub struct CacheConfig {
    pub budget: usize,
    /// Share of the budget A1in may hold before it is trimmed first.
    pub kin: f64,
    /// Ghost list length as a share of the resident entry count.
    pub kout: f64,
    pub policy: Policy,
    pub codec: Arc<dyn Codec>,
}

impl CacheConfig {
    pub fn two_q(budget: usize) -> Self {
        CacheConfig {
            budget,
            kin: 0.25,
            kout: 0.5,
            policy: Policy::TwoQ,
            codec: Arc::new(Lz4),
        }
    }

    pub fn lru(budget: usize) -> Self {
        CacheConfig {
            policy: Policy::Lru,
            ..Self::two_q(budget)
        }
    }

    pub fn with_codec(mut self, codec: Arc<dyn Codec>) -> Self {
        self.codec = codec;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub hits_hot: u64,
    pub hits_cold: u64,
    pub misses: u64,
    pub coalesced: u64,
    pub demotions: u64,
    pub evictions: u64,
    /// Loads larger than the whole budget, handed out but not kept.
    pub oversize: u64,
    pub entries: usize,
    pub hot_bytes: usize,
    pub cold_bytes: usize,
    pub budget: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Residency {
    A1in,
    AmHot,
    AmCold,
}

enum Layer<A> {
    Hot(Arc<A>),
    Cold(Vec<u8>),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Queue {
    A1in,
    Am,
}

struct Entry<A> {
    layer: Layer<A>,
    bytes: usize,
    queue: Queue,
    tick: u64,
}

struct State<K, A> {
    entries: HashMap<K, Entry<A>>,
    a1in: BTreeMap<u64, K>,
    am: BTreeMap<u64, K>,
    ghosts: VecDeque<K>,
    ghost_set: HashSet<K>,
    a1in_bytes: usize,
    hot_bytes: usize,
    cold_bytes: usize,
    tick: u64,
    inflight: HashMap<K, Arc<Slot<A>>>,
    stats: CacheStats,
}

/// Rendezvous for callers waiting on another caller's load.
struct Slot<A> {
    done: Mutex<Option<Option<Arc<A>>>>,
    cv: Condvar,
}

impl<A> Slot<A> {
    fn finish(&self, r: Option<Arc<A>>) {
        *self.done.lock() = Some(r);
        self.cv.notify_all();
    }

    fn wait(&self) -> Option<Arc<A>> {
        let mut d = self.done.lock();
        while d.is_none() {
            self.cv.wait(&mut d);
        }
        d.clone().flatten()
    }
}

/// Finishes the slot as failed if the loader unwinds.
struct SlotGuard<'a, K: Eq + Hash + Clone, A: Artifact> {
    cache: &'a ArtifactCache<K, A>,
    key: Option<K>,
    slot: Arc<Slot<A>>,
}

impl<K: Eq + Hash + Clone, A: Artifact> Drop for SlotGuard<'_, K, A> {
    fn drop(&mut self) {
        if let Some(k) = self.key.take() {
            self.cache.state.lock().inflight.remove(&k);
            self.slot.finish(None);
        }
    }
}

pub struct ArtifactCache<K, A> {
    cfg: CacheConfig,
    state: Mutex<State<K, A>>,
}

impl<K, A> std::fmt::Debug for ArtifactCache<K, A> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ArtifactCache")
            .field("budget", &self.cfg.budget)
            .field("policy", &self.cfg.policy)
            .finish()
    }
}

impl<K: Eq + Hash + Clone, A: Artifact> ArtifactCache<K, A> {
    pub fn new(cfg: CacheConfig) -> Self {
        ArtifactCache {
            state: Mutex::new(State {
                entries: HashMap::new(),
                a1in: BTreeMap::new(),
                am: BTreeMap::new(),
                ghosts: VecDeque::new(),
                ghost_set: HashSet::new(),
                a1in_bytes: 0,
                hot_bytes: 0,
                cold_bytes: 0,
                tick: 0,
                inflight: HashMap::new(),
                stats: CacheStats {
                    budget: cfg.budget,
                    ..CacheStats::default()
                },
            }),
            cfg,
        }
    }

    pub fn config(&self) -> &CacheConfig {
        &self.cfg
    }

    /// Returns the cached artifact or loads it. Concurrent misses on one key
    /// run `load` once; the other callers wait for its result.
    pub fn get_or_load(&self, key: &K, load: impl FnOnce() -> Result<A>) -> Result<Arc<A>> {
        let mut load = Some(load);
        loop {
            let mut st = self.state.lock();
            if let Some(a) = st.hit(key, &self.cfg)? {
                return Ok(a);
            }
            if let Some(slot) = st.inflight.get(key).cloned() {
                st.stats.coalesced += 1;
                drop(st);
                match slot.wait() {
                    Some(a) => return Ok(a),
                    None => continue,
                }
            }
            let slot = Arc::new(Slot {
                done: Mutex::new(None),
                cv: Condvar::new(),
            });
            st.inflight.insert(key.clone(), slot.clone());
            st.stats.misses += 1;
            drop(st);

            let mut guard = SlotGuard {
                cache: self,
                key: Some(key.clone()),
                slot,
            };
            let f = load.take().expect("loader used once");
            let a = Arc::new(f()?);
            let mut st = self.state.lock();
            st.inflight.remove(key);
            st.admit(key.clone(), a.clone(), &self.cfg);
            drop(st);
            guard.key = None;
            guard.slot.finish(Some(a.clone()));
            return Ok(a);
        }
    }

    /// The artifact if resident, counted as a hit; `None` otherwise.
    pub fn get(&self, key: &K) -> Result<Option<Arc<A>>> {
        self.state.lock().hit(key, &self.cfg)
    }

    /// Inserts a freshly computed artifact (no-op if already resident).
    pub fn insert(&self, key: K, a: A) {
        let mut st = self.state.lock();
        if !st.entries.contains_key(&key) {
            st.admit(key, Arc::new(a), &self.cfg);
        }
    }

    pub fn residency(&self, key: &K) -> Option<Residency> {
        let st = self.state.lock();
        st.entries.get(key).map(|e| match (e.queue, &e.layer) {
            (Queue::A1in, _) => Residency::A1in,
            (Queue::Am, Layer::Hot(_)) => Residency::AmHot,
            (Queue::Am, Layer::Cold(_)) => Residency::AmCold,
        })
    }

    pub fn is_ghost(&self, key: &K) -> bool {
        self.state.lock().ghost_set.contains(key)
    }

    pub fn stats(&self) -> CacheStats {
        let st = self.state.lock();
        CacheStats {
            entries: st.entries.len(),
            hot_bytes: st.hot_bytes,
            cold_bytes: st.cold_bytes,
            ..st.stats.clone()
        }
    }

    pub fn clear(&self) {
        let mut st = self.state.lock();
        st.entries.clear();
        st.a1in.clear();
        st.am.clear();
        st.ghosts.clear();
        st.ghost_set.clear();
        st.a1in_bytes = 0;
        st.hot_bytes = 0;
        st.cold_bytes = 0;
    }

    /// Checks the accounting invariants; returns a description of the first
    /// violation.
    pub fn audit(&self) -> std::result::Result<(), String> {
        let st = self.state.lock();
        let (mut hot, mut cold, mut a1) = (0, 0, 0);
        for (k, e) in &st.entries {
            match &e.layer {
                Layer::Hot(a) => {
                    hot += e.bytes;
                    if e.bytes != a.weight().max(1) {
                        return Err("hot entry charged wrong size".into());
                    }
                }
                Layer::Cold(b) => {
                    cold += e.bytes;
                    if e.bytes != b.len().max(1) {
                        return Err("cold entry charged wrong size".into());
                    }
                }
            }
            let q = match e.queue {
                Queue::A1in => {
                    a1 += e.bytes;
                    &st.a1in
                }
                Queue::Am => &st.am,
            };
            if q.get(&e.tick) != Some(k) {
                return Err("entry missing from its queue".into());
            }
            if matches!((e.queue, &e.layer), (Queue::A1in, Layer::Cold(_))) {
                return Err("cold entry in A1in".into());
            }
            if st.ghost_set.contains(k) {
                return Err("resident key is also a ghost".into());
            }
        }
        if st.a1in.len() + st.am.len() != st.entries.len() {
            return Err("queue lengths disagree with entries".into());
        }
        if hot != st.hot_bytes || cold != st.cold_bytes || a1 != st.a1in_bytes {
            return Err("byte counters drifted".into());
        }
        if hot + cold > self.cfg.budget {
            return Err(format!("{} bytes resident over budget {}", hot + cold, self.cfg.budget));
        }
        if st.ghosts.len() != st.ghost_set.len() {
            return Err("ghost list and set disagree".into());
        }
        Ok(())
    }
}

impl<K: Eq + Hash + Clone, A: Artifact> State<K, A> {
    fn next_tick(&mut self) -> u64 {
        self.tick += 1;
        self.tick
    }

    fn hit(&mut self, key: &K, cfg: &CacheConfig) -> Result<Option<Arc<A>>> {
        let tick = self.next_tick();
        let Some(e) = self.entries.get_mut(key) else {
            return Ok(None);
        };
        match (&e.layer, e.queue) {
            (Layer::Hot(a), Queue::A1in) => {
                // no promotion from the admission FIFO
                let a = a.clone();
                self.stats.hits_hot += 1;
                Ok(Some(a))
            }
            (Layer::Hot(a), Queue::Am) => {
                let a = a.clone();
                self.am.remove(&e.tick);
                e.tick = tick;
                self.am.insert(tick, key.clone());
                self.stats.hits_hot += 1;
                Ok(Some(a))
            }
            (Layer::Cold(packed), _) => {
                let raw = cfg.codec.decompress(packed)?;
                let a = Arc::new(A::decode(&raw)?);
                let w = a.weight().max(1);
                self.cold_bytes -= e.bytes;
                self.hot_bytes += w;
                self.am.remove(&e.tick);
                e.layer = Layer::Hot(a.clone());
                e.bytes = w;
                e.tick = tick;
                self.am.insert(tick, key.clone());
                self.stats.hits_cold += 1;
                self.evict_to_fit(cfg)?;
                Ok(Some(a))
            }
        }
    }

    fn admit(&mut self, key: K, a: Arc<A>, cfg: &CacheConfig) {
        let w = a.weight().max(1);
        if w > cfg.budget {
            self.stats.oversize += 1;
            return;
        }
        let queue = if cfg.policy == Policy::Lru || self.ghost_set.remove(&key) {
            if cfg.policy == Policy::TwoQ {
                self.ghosts.retain(|g| g != &key);
            }
            Queue::Am
        } else {
            Queue::A1in
        };
        let tick = self.next_tick();
        match queue {
            Queue::A1in => {
                self.a1in.insert(tick, key.clone());
                self.a1in_bytes += w;
            }
            Queue::Am => {
                self.am.insert(tick, key.clone());
            }
        }
        self.hot_bytes += w;
        self.entries.insert(
            key,
            Entry {
                layer: Layer::Hot(a),
                bytes: w,
                queue,
                tick,
            },
        );
        // encoding for the cold layer cannot fail; decoding is checked on use
        let _ = self.evict_to_fit(cfg);
    }

    fn evict_to_fit(&mut self, cfg: &CacheConfig) -> Result<()> {
        while self.hot_bytes + self.cold_bytes > cfg.budget {
            if cfg.policy == Policy::Lru {
                self.drop_am_tail();
                continue;
            }
            let kin = (cfg.kin * cfg.budget as f64) as usize;
            if self.a1in_bytes > kin && !self.a1in.is_empty() {
                self.evict_a1in_head(cfg);
            } else if let Some(tick) = self.lru_hot_in_am() {
                self.demote(tick, cfg);
            } else if !self.a1in.is_empty() {
                self.evict_a1in_head(cfg);
            } else if !self.am.is_empty() {
                self.drop_am_tail();
            } else {
                return Err(Error::Internal("cache over budget with nothing to evict".into()));
            }
        }
        Ok(())
    }

    fn lru_hot_in_am(&self) -> Option<u64> {
        self.am
            .iter()
            .find(|(_, k)| matches!(self.entries[*k].layer, Layer::Hot(_)))
            .map(|(t, _)| *t)
    }

    fn demote(&mut self, tick: u64, cfg: &CacheConfig) {
        let key = self.am[&tick].clone();
        let e = self.entries.get_mut(&key).expect("queued key resident");
        let Layer::Hot(a) = &e.layer else {
            unreachable!("demoting a cold entry")
        };
        let packed = cfg.codec.compress(&a.encode());
        self.hot_bytes -= e.bytes;
        e.bytes = packed.len().max(1);
        self.cold_bytes += e.bytes;
        e.layer = Layer::Cold(packed);
        self.stats.demotions += 1;
    }

    fn evict_a1in_head(&mut self, cfg: &CacheConfig) {
        let (_, key) = self.a1in.pop_first().expect("non-empty A1in");
        let e = self.entries.remove(&key).expect("queued key resident");
        self.a1in_bytes -= e.bytes;
        self.hot_bytes -= e.bytes;
        self.stats.evictions += 1;
        self.ghost_set.insert(key.clone());
        self.ghosts.push_back(key);
        let cap = ((cfg.kout * self.entries.len() as f64).ceil() as usize).max(1);
        while self.ghosts.len() > cap {
            if let Some(old) = self.ghosts.pop_front() {
                self.ghost_set.remove(&old);
            }
        }
    }

    fn drop_am_tail(&mut self) {
        let (_, key) = self.am.pop_first().expect("non-empty Am");
        let e = self.entries.remove(&key).expect("queued key resident");
        match e.layer {
            Layer::Hot(_) => self.hot_bytes -= e.bytes,
            Layer::Cold(_) => self.cold_bytes -= e.bytes,
        }
        self.stats.evictions += 1;
    }
}

/// Raw bytes, mostly for tests and benchmarks.
impl Artifact for Vec<u8> {
    fn weight(&self) -> usize {
        self.len()
    }

    fn encode(&self) -> Vec<u8> {
        self.clone()
    }

    fn decode(bytes: &[u8]) -> Result<Self> {
        Ok(bytes.to_vec())
    }
}
