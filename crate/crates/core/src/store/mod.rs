//! Content-addressed object store with block-level deduplication, DAG links
//! and replication across pluggable backends.
//!
//! An object is an ordered list of blocks. Its CID is the digest of the
//! concatenated bytes, so the segmentation never changes identity; it only
//! decides what can be shared. Blocks are stored once no matter how many
//! objects reference them.
//!
//! Every object lives on the primary backend (index 0). Pinning copies it to
//! further backends up to the requested replication factor. Garbage
//! collection removes objects that are neither pinned nor reachable through
//! links from a pinned object.

mod backend;
mod cid;
mod disk;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{Clock, SystemClock};
use crate::primitives::UnixTime;

pub use backend::{MemoryBackend, ObjectManifest, StoreBackend};
pub use cid::{compute_cid, Cid, CID_PREFIX};
pub use disk::DiskBackend;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("object {0} not found")]
    NotFound(Cid),
    #[error("object {0} failed its digest check")]
    IntegrityViolation(Cid),
    #[error("link {0} does not resolve to a stored object")]
    LinkUnresolvable(Cid),
    #[error("no storage backends configured")]
    NoBackends,
    #[error("replication factor must be at least 1")]
    InvalidReplication,
    #[error("object {0} is not pinned")]
    NotPinned(Cid),
    #[error("backend error: {0}")]
    Backend(String),
}

impl From<std::io::Error> for StoreError {
    fn from(e: std::io::Error) -> Self {
        StoreError::Backend(e.to_string())
    }
}

pub type StoreResult<T> = Result<T, StoreError>;

/// A stored object as returned by [`ContentStore::get_object`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredObject {
    pub cid: Cid,
    pub bytes: Vec<u8>,
    pub links: Vec<Cid>,
    pub pin_count: u32,
    pub created_at: UnixTime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PinReceipt {
    pub cid: Cid,
    pub replication_factor: u32,
    pub providers: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StoreStats {
    /// Bytes as seen by clients: every put of every object counts.
    pub logical_bytes: u64,
    /// Bytes of distinct blocks actually held.
    pub physical_bytes: u64,
    pub object_count: u64,
    pub dedup_ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GcReport {
    pub removed_objects: Vec<Cid>,
    pub removed_blocks: usize,
}

/// Per-object summary used for enumeration and state digests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObjectInfo {
    pub cid: Cid,
    pub size: u64,
    pub links: Vec<Cid>,
    pub pin_count: u32,
    pub created_at: UnixTime,
    pub providers: Vec<String>,
}

/// Input to [`ContentStore::put_object`].
#[derive(Debug, Clone, Default)]
pub struct PutRequest<'a> {
    pub segments: Vec<&'a [u8]>,
    pub links: Vec<Cid>,
    /// Links to objects held elsewhere; never checked or traversed.
    pub external_links: Vec<Cid>,
}

#[derive(Debug, Clone)]
struct ObjectMeta {
    size: u64,
    segments: Vec<Cid>,
    links: Vec<Cid>,
    external_links: Vec<Cid>,
    pin_count: u32,
    created_at: UnixTime,
    put_count: u64,
    providers: BTreeSet<usize>,
}

#[derive(Debug, Clone, Copy)]
struct BlockMeta {
    size: u64,
    refs: u64,
}

#[derive(Debug, Default)]
struct Index {
    objects: BTreeMap<Cid, ObjectMeta>,
    blocks: BTreeMap<Cid, BlockMeta>,
}

pub struct ContentStore {
    backends: Vec<Arc<dyn StoreBackend>>,
    clock: Arc<dyn Clock>,
    index: RwLock<Index>,
}

impl std::fmt::Debug for ContentStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let ids: Vec<&str> = self.backends.iter().map(|b| b.id()).collect();
        f.debug_struct("ContentStore").field("backends", &ids).finish_non_exhaustive()
    }
}

impl ContentStore {
    pub fn new(backends: Vec<Arc<dyn StoreBackend>>, clock: Arc<dyn Clock>) -> Self {
        ContentStore {
            backends,
            clock,
            index: RwLock::new(Index::default()),
        }
    }

    /// A single in-memory backend on the system clock.
    pub fn in_memory() -> Self {
        Self::new(vec![Arc::new(MemoryBackend::new("mem-0"))], Arc::new(SystemClock))
    }

    pub fn backend_ids(&self) -> Vec<String> {
        self.backends.iter().map(|b| b.id().to_owned()).collect()
    }

    pub fn backend_count(&self) -> usize {
        self.backends.len()
    }

    /// Stores `bytes` as a single block.
    pub fn put(&self, bytes: &[u8], links: &[Cid]) -> StoreResult<Cid> {
        self.put_object(PutRequest {
            segments: vec![bytes],
            links: links.to_vec(),
            external_links: Vec::new(),
        })
    }

    /// Stores an object made of `segments`. Each non-empty segment becomes a
    /// block shared with any other object containing identical bytes.
    pub fn put_object(&self, req: PutRequest<'_>) -> StoreResult<Cid> {
        let primary = self.backends.first().ok_or(StoreError::NoBackends)?;
        let cid = Cid::of_segments(req.segments.iter().copied());
        let mut index = self.index.write();
        if let Some(meta) = index.objects.get_mut(&cid) {
            meta.put_count += 1;
            return Ok(cid);
        }
        if let Some(missing) = req.links.iter().find(|l| !index.objects.contains_key(l)) {
            return Err(StoreError::LinkUnresolvable(*missing));
        }

        let mut segments = Vec::new();
        let mut size = 0u64;
        for seg in req.segments.iter().filter(|s| !s.is_empty()) {
            let digest = compute_cid(seg);
            primary.write_block(&digest, seg)?;
            segments.push(digest);
            size += seg.len() as u64;
        }
        let manifest = ObjectManifest {
            segments: segments.clone(),
            links: req.links.clone(),
            external_links: req.external_links.clone(),
        };
        primary.write_object(&cid, &manifest)?;

        for (digest, seg) in segments.iter().zip(req.segments.iter().filter(|s| !s.is_empty())) {
            index
                .blocks
                .entry(*digest)
                .and_modify(|b| b.refs += 1)
                .or_insert(BlockMeta { size: seg.len() as u64, refs: 1 });
        }
        index.objects.insert(
            cid,
            ObjectMeta {
                size,
                segments,
                links: req.links,
                external_links: req.external_links,
                pin_count: 0,
                created_at: self.clock.now(),
                put_count: 1,
                providers: BTreeSet::from([0]),
            },
        );
        Ok(cid)
    }

    pub fn contains(&self, cid: &Cid) -> bool {
        self.index.read().objects.contains_key(cid)
    }

    /// Reads an object and re-verifies its digest. Replicas are tried in
    /// provider order; corruption is reported only when no replica verifies.
    pub fn get(&self, cid: &Cid) -> StoreResult<Vec<u8>> {
        let index = self.index.read();
        let meta = index.objects.get(cid).ok_or(StoreError::NotFound(*cid))?;
        for &p in &meta.providers {
            let backend = &self.backends[p];
            let mut bytes = Vec::with_capacity(meta.size as usize);
            let mut complete = true;
            for seg in &meta.segments {
                match backend.read_block(seg)? {
                    Some(b) => bytes.extend_from_slice(&b),
                    None => {
                        complete = false;
                        break;
                    }
                }
            }
            if complete && compute_cid(&bytes) == *cid {
                return Ok(bytes);
            }
        }
        Err(StoreError::IntegrityViolation(*cid))
    }

    pub fn get_object(&self, cid: &Cid) -> StoreResult<StoredObject> {
        let bytes = self.get(cid)?;
        let index = self.index.read();
        let meta = index.objects.get(cid).ok_or(StoreError::NotFound(*cid))?;
        Ok(StoredObject {
            cid: *cid,
            bytes,
            links: meta.links.clone(),
            pin_count: meta.pin_count,
            created_at: meta.created_at,
        })
    }

    pub fn links(&self, cid: &Cid) -> StoreResult<Vec<Cid>> {
        let index = self.index.read();
        index
            .objects
            .get(cid)
            .map(|m| m.links.clone())
            .ok_or(StoreError::NotFound(*cid))
    }

    /// Pins `cid` and replicates it to `min(replication_factor, backends)`
    /// distinct backends.
    pub fn pin(&self, cid: &Cid, replication_factor: u32) -> StoreResult<PinReceipt> {
        let receipt = self.replicate(cid, replication_factor)?;
        let mut index = self.index.write();
        index.objects.get_mut(cid).ok_or(StoreError::NotFound(*cid))?.pin_count += 1;
        Ok(receipt)
    }

    /// Copies `cid` to the first `min(replication_factor, backends)` backends
    /// without changing its pin count.
    pub fn replicate(&self, cid: &Cid, replication_factor: u32) -> StoreResult<PinReceipt> {
        if replication_factor == 0 {
            return Err(StoreError::InvalidReplication);
        }
        if self.backends.is_empty() {
            return Err(StoreError::NoBackends);
        }
        let mut index = self.index.write();
        let meta = index.objects.get(cid).ok_or(StoreError::NotFound(*cid))?.clone();
        let target = (replication_factor as usize).min(self.backends.len());
        if (0..target).any(|p| !meta.providers.contains(&p)) {
            let source = self.read_verified_blocks(cid, &meta)?;
            let manifest = ObjectManifest {
                segments: meta.segments.clone(),
                links: meta.links.clone(),
                external_links: meta.external_links.clone(),
            };
            for p in (0..target).filter(|p| !meta.providers.contains(p)) {
                let backend = &self.backends[p];
                for (digest, bytes) in meta.segments.iter().zip(&source) {
                    backend.write_block(digest, bytes)?;
                }
                backend.write_object(cid, &manifest)?;
            }
        }
        index.objects.get_mut(cid).expect("checked above").providers.extend(0..target);
        Ok(PinReceipt {
            cid: *cid,
            replication_factor,
            providers: (0..target).map(|p| self.backends[p].id().to_owned()).collect(),
        })
    }

    pub fn pin_count(&self, cid: &Cid) -> StoreResult<u32> {
        let index = self.index.read();
        index.objects.get(cid).map(|m| m.pin_count).ok_or(StoreError::NotFound(*cid))
    }

    /// Backend ids currently holding a copy of `cid`.
    pub fn providers(&self, cid: &Cid) -> StoreResult<Vec<String>> {
        let index = self.index.read();
        let meta = index.objects.get(cid).ok_or(StoreError::NotFound(*cid))?;
        Ok(meta.providers.iter().map(|&p| self.backends[p].id().to_owned()).collect())
    }

    fn read_verified_blocks(&self, cid: &Cid, meta: &ObjectMeta) -> StoreResult<Vec<Vec<u8>>> {
        'providers: for &p in &meta.providers {
            let mut out = Vec::with_capacity(meta.segments.len());
            for seg in &meta.segments {
                match self.backends[p].read_block(seg)? {
                    Some(b) if compute_cid(&b) == *seg => out.push(b),
                    _ => continue 'providers,
                }
            }
            return Ok(out);
        }
        Err(StoreError::IntegrityViolation(*cid))
    }

    pub fn unpin(&self, cid: &Cid) -> StoreResult<u32> {
        let mut index = self.index.write();
        let meta = index.objects.get_mut(cid).ok_or(StoreError::NotFound(*cid))?;
        if meta.pin_count == 0 {
            return Err(StoreError::NotPinned(*cid));
        }
        meta.pin_count -= 1;
        Ok(meta.pin_count)
    }

    /// Narrows the replica set of `cid` to the first `replication_factor`
    /// backends. Surplus copies are reclaimed by the next [`gc`](Self::gc).
    pub fn set_replication(&self, cid: &Cid, replication_factor: u32) -> StoreResult<()> {
        let target = (replication_factor.max(1) as usize).min(self.backends.len());
        let mut index = self.index.write();
        let meta = index.objects.get_mut(cid).ok_or(StoreError::NotFound(*cid))?;
        meta.providers.retain(|&p| p < target);
        meta.providers.insert(0);
        Ok(())
    }

    /// Mark-and-sweep collection. Runs under the exclusive lock, so readers
    /// never observe a half-collected object.
    pub fn gc(&self) -> StoreResult<GcReport> {
        let mut index = self.index.write();
        let mut live = BTreeSet::new();
        let mut stack: Vec<Cid> = index
            .objects
            .iter()
            .filter(|(_, m)| m.pin_count > 0)
            .map(|(c, _)| *c)
            .collect();
        while let Some(c) = stack.pop() {
            if live.insert(c) {
                if let Some(m) = index.objects.get(&c) {
                    stack.extend(m.links.iter().filter(|l| !live.contains(*l)));
                }
            }
        }
        let dead: Vec<Cid> = index.objects.keys().filter(|c| !live.contains(*c)).copied().collect();
        let mut removed_blocks = 0;
        for cid in &dead {
            let meta = index.objects.remove(cid).expect("listed above");
            for seg in &meta.segments {
                let block = index.blocks.get_mut(seg).expect("block referenced by object");
                block.refs -= 1;
                if block.refs == 0 {
                    index.blocks.remove(seg);
                    removed_blocks += 1;
                }
            }
            for &p in &meta.providers {
                self.backends[p].delete_object(cid)?;
            }
        }
        // Sweep each backend down to what its replicas still need.
        for (p, backend) in self.backends.iter().enumerate() {
            let needed: BTreeSet<Cid> = index
                .objects
                .values()
                .filter(|m| m.providers.contains(&p))
                .flat_map(|m| m.segments.iter().copied())
                .collect();
            for block in backend.list_blocks()? {
                if !needed.contains(&block) {
                    backend.delete_block(&block)?;
                }
            }
            for obj in backend.list_objects()? {
                if !index.objects.get(&obj).is_some_and(|m| m.providers.contains(&p)) {
                    backend.delete_object(&obj)?;
                }
            }
        }
        Ok(GcReport {
            removed_objects: dead,
            removed_blocks,
        })
    }

    pub fn stats(&self) -> StoreStats {
        let index = self.index.read();
        let logical: u64 = index.objects.values().map(|m| m.size * m.put_count).sum();
        let physical: u64 = index.blocks.values().map(|b| b.size).sum();
        StoreStats {
            logical_bytes: logical,
            physical_bytes: physical,
            object_count: index.objects.len() as u64,
            dedup_ratio: if physical == 0 { 1.0 } else { logical as f64 / physical as f64 },
        }
    }

    pub fn objects(&self) -> Vec<ObjectInfo> {
        let index = self.index.read();
        index
            .objects
            .iter()
            .map(|(cid, m)| ObjectInfo {
                cid: *cid,
                size: m.size,
                links: m.links.clone(),
                pin_count: m.pin_count,
                created_at: m.created_at,
                providers: m.providers.iter().map(|&p| self.backends[p].id().to_owned()).collect(),
            })
            .collect()
    }

    /// Rebuilds the index from the primary backend, e.g. after reopening a
    /// disk store. Pin counts start at zero; creation times are the load time.
    pub fn load_from_primary(&self) -> StoreResult<usize> {
        let primary = self.backends.first().ok_or(StoreError::NoBackends)?;
        let mut loaded = Index::default();
        let now = self.clock.now();
        for cid in primary.list_objects()? {
            let Some(manifest) = primary.read_object(&cid)? else { continue };
            let mut size = 0;
            for seg in &manifest.segments {
                let bytes = primary.read_block(seg)?.ok_or(StoreError::IntegrityViolation(cid))?;
                size += bytes.len() as u64;
                loaded
                    .blocks
                    .entry(*seg)
                    .and_modify(|b| b.refs += 1)
                    .or_insert(BlockMeta { size: bytes.len() as u64, refs: 1 });
            }
            loaded.objects.insert(
                cid,
                ObjectMeta {
                    size,
                    segments: manifest.segments,
                    links: manifest.links,
                    external_links: manifest.external_links,
                    pin_count: 0,
                    created_at: now,
                    put_count: 1,
                    providers: BTreeSet::from([0]),
                },
            );
        }
        let count = loaded.objects.len();
        *self.index.write() = loaded;
        Ok(count)
    }
}
