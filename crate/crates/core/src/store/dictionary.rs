use crate::error::{Error, Result};
use crate::trie::TrieDictionary;
use crate::value::{Value, ValueKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DictRepr {
    SortedArray(Vec<Value>),
    /// Strings only. When `has_null` is set, Null holds global-id 0 and the
    /// trie's ids are shifted by one.
    Trie {
        has_null: bool,
        trie: TrieDictionary,
    },
}

/// Sorted distinct values of one column; a value's rank is its global-id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalDictionary {
    kind: ValueKind,
    repr: DictRepr,
}

impl GlobalDictionary {
    /// Wraps strictly ascending values of a single kind (plus a leading Null).
    pub fn from_sorted(kind: ValueKind, values: Vec<Value>) -> Result<Self> {
        for v in &values {
            if let Some(k) = v.kind() {
                if k != kind {
                    return Err(Error::Schema(format!("dictionary of {kind} contains a {k} value")));
                }
            }
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Schema("dictionary values not strictly ascending".into()));
        }
        Ok(GlobalDictionary {
            kind,
            repr: DictRepr::SortedArray(values),
        })
    }

    pub fn from_trie(has_null: bool, trie: TrieDictionary) -> Self {
        GlobalDictionary {
            kind: ValueKind::Str,
            repr: DictRepr::Trie { has_null, trie },
        }
    }

    /// Re-encodes a string dictionary as a trie; other kinds are unchanged.
    pub fn into_trie(self) -> Result<Self> {
        match self.repr {
            DictRepr::SortedArray(values) if self.kind == ValueKind::Str => {
                let has_null = values.first().is_some_and(Value::is_null);
                let strings: Vec<&str> = values.iter().filter_map(Value::as_str).collect();
                Ok(Self::from_trie(has_null, TrieDictionary::build(&strings)?))
            }
            repr => Ok(GlobalDictionary { kind: self.kind, repr }),
        }
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    pub fn repr(&self) -> &DictRepr {
        &self.repr
    }

    pub fn is_trie(&self) -> bool {
        matches!(self.repr, DictRepr::Trie { .. })
    }

    pub fn len(&self) -> usize {
        match &self.repr {
            DictRepr::SortedArray(v) => v.len(),
            DictRepr::Trie { has_null, trie } => trie.len() + *has_null as usize,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Global-id of Null, if the column contains nulls.
    pub fn null_id(&self) -> Option<u32> {
        let has_null = match &self.repr {
            DictRepr::SortedArray(v) => v.first().is_some_and(Value::is_null),
            DictRepr::Trie { has_null, .. } => *has_null,
        };
        has_null.then_some(0)
    }

    pub fn value_at(&self, global_id: u32) -> Result<Value> {
        match &self.repr {
            DictRepr::SortedArray(v) => v
                .get(global_id as usize)
                .cloned()
                .ok_or_else(|| Error::Index(format!("global-id {global_id} out of range for {} values", v.len()))),
            DictRepr::Trie { has_null, trie } => {
                if *has_null {
                    if global_id == 0 {
                        return Ok(Value::Null);
                    }
                    trie.id_to_value(global_id - 1).map(Value::Str)
                } else {
                    trie.id_to_value(global_id).map(Value::Str)
                }
            }
        }
    }

    /// Global-id of `value`, which must already have the dictionary's kind.
    pub fn lookup_id(&self, value: &Value) -> Option<u32> {
        match &self.repr {
            DictRepr::SortedArray(v) => v.binary_search(value).ok().map(|i| i as u32),
            DictRepr::Trie { has_null, trie } => match value {
                Value::Null => has_null.then_some(0),
                Value::Str(s) => trie.value_to_id(s.as_bytes()).map(|i| i + *has_null as u32),
                _ => None,
            },
        }
    }

    pub fn values(&self) -> Result<Vec<Value>> {
        match &self.repr {
            DictRepr::SortedArray(v) => Ok(v.clone()),
            DictRepr::Trie { has_null, trie } => {
                let mut out = Vec::with_capacity(self.len());
                if *has_null {
                    out.push(Value::Null);
                }
                for bytes in trie.to_vec() {
                    let s = String::from_utf8(bytes).map_err(|_| Error::Trie("stored value is not UTF-8".into()))?;
                    out.push(Value::Str(s));
                }
                Ok(out)
            }
        }
    }

    /// Size of the representation as stored: the trie arena, or the flat
    /// sorted array.
    pub fn size_bytes(&self) -> usize {
        match &self.repr {
            DictRepr::SortedArray(v) => flat_size(v),
            DictRepr::Trie { trie, .. } => 1 + trie.arena_bytes(),
        }
    }

    /// Size this dictionary would take as a flat sorted array.
    pub fn flat_size_bytes(&self) -> Result<usize> {
        match &self.repr {
            DictRepr::SortedArray(v) => Ok(flat_size(v)),
            DictRepr::Trie { .. } => Ok(flat_size(&self.values()?)),
        }
    }
}

/// u32 count plus per value: strings as u32 length + bytes, fixed-width
/// otherwise; a Null costs one flag byte.
fn flat_size(values: &[Value]) -> usize {
    5 + values
        .iter()
        .map(|v| match v {
            Value::Null => 0,
            Value::Str(s) => 4 + s.len(),
            Value::I64(_) | Value::F64(_) | Value::Timestamp(_) => 8,
            Value::Date(_) => 4,
        })
        .sum::<usize>()
}

/// Global-ids occurring in one chunk, ascending; index = chunk-id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChunkDictionary {
    global_ids: Vec<u32>,
}

impl ChunkDictionary {
    pub fn new(global_ids: Vec<u32>) -> Result<Self> {
        if global_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Schema("chunk-dictionary not strictly ascending".into()));
        }
        Ok(ChunkDictionary { global_ids })
    }

    pub fn global_ids(&self) -> &[u32] {
        &self.global_ids
    }

    pub fn len(&self) -> usize {
        self.global_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.global_ids.is_empty()
    }

    #[inline]
    pub fn global_id(&self, chunk_id: u32) -> u32 {
        self.global_ids[chunk_id as usize]
    }

    pub fn chunk_id_of(&self, global_id: u32) -> Option<u32> {
        self.global_ids.binary_search(&global_id).ok().map(|i| i as u32)
    }

    pub fn contains(&self, global_id: u32) -> bool {
        self.chunk_id_of(global_id).is_some()
    }

    pub fn size_bytes(&self) -> usize {
        4 * self.global_ids.len()
    }
}
