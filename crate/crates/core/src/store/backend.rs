use std::collections::BTreeMap;
use std::io;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use super::Cid;

/// What a backend keeps for one object: the ordered block digests whose
/// concatenation is the object, and its DAG links.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectManifest {
    pub segments: Vec<Cid>,
    pub links: Vec<Cid>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub external_links: Vec<Cid>,
}

/// A place blocks and object manifests can live. Blocks are keyed by the
/// digest of their own bytes; objects by the digest of their full content.
///
/// Backends do not verify what they return; the store re-hashes on read.
pub trait StoreBackend: Send + Sync {
    fn id(&self) -> &str;
    fn write_block(&self, digest: &Cid, bytes: &[u8]) -> io::Result<()>;
    fn read_block(&self, digest: &Cid) -> io::Result<Option<Vec<u8>>>;
    fn delete_block(&self, digest: &Cid) -> io::Result<()>;
    fn list_blocks(&self) -> io::Result<Vec<Cid>>;
    fn write_object(&self, cid: &Cid, manifest: &ObjectManifest) -> io::Result<()>;
    fn read_object(&self, cid: &Cid) -> io::Result<Option<ObjectManifest>>;
    fn delete_object(&self, cid: &Cid) -> io::Result<()>;
    fn list_objects(&self) -> io::Result<Vec<Cid>>;
}

#[derive(Debug, Default)]
pub struct MemoryBackend {
    id: String,
    blocks: RwLock<BTreeMap<Cid, Vec<u8>>>,
    objects: RwLock<BTreeMap<Cid, ObjectManifest>>,
}

impl MemoryBackend {
    pub fn new(id: impl Into<String>) -> Self {
        MemoryBackend {
            id: id.into(),
            ..Default::default()
        }
    }

    pub fn block_count(&self) -> usize {
        self.blocks.read().len()
    }
}

impl StoreBackend for MemoryBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn write_block(&self, digest: &Cid, bytes: &[u8]) -> io::Result<()> {
        self.blocks.write().entry(*digest).or_insert_with(|| bytes.to_vec());
        Ok(())
    }

    fn read_block(&self, digest: &Cid) -> io::Result<Option<Vec<u8>>> {
        Ok(self.blocks.read().get(digest).cloned())
    }

    fn delete_block(&self, digest: &Cid) -> io::Result<()> {
        self.blocks.write().remove(digest);
        Ok(())
    }

    fn list_blocks(&self) -> io::Result<Vec<Cid>> {
        Ok(self.blocks.read().keys().copied().collect())
    }

    fn write_object(&self, cid: &Cid, manifest: &ObjectManifest) -> io::Result<()> {
        self.objects.write().insert(*cid, manifest.clone());
        Ok(())
    }

    fn read_object(&self, cid: &Cid) -> io::Result<Option<ObjectManifest>> {
        Ok(self.objects.read().get(cid).cloned())
    }

    fn delete_object(&self, cid: &Cid) -> io::Result<()> {
        self.objects.write().remove(cid);
        Ok(())
    }

    fn list_objects(&self) -> io::Result<Vec<Cid>> {
        Ok(self.objects.read().keys().copied().collect())
    }
}
