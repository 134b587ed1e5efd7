//! Directory-backed store backend.
//!
//! Layout under the root directory:
//!
//! ```text
//! blocks/pc1-<hex>    raw block bytes, named by the block digest
//! objects/pc1-<hex>   one file per object: its manifest as JSON
//! links.idx           sidecar index, one line per object: "<cid>\t<link>,<link>"
//! ```
//!
//! Every file is written to a temporary name and renamed into place, so a
//! reader never sees a partially written block or manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use parking_lot::Mutex;

use super::backend::{ObjectManifest, StoreBackend};
use super::Cid;

#[derive(Debug)]
pub struct DiskBackend {
    id: String,
    root: PathBuf,
    links: Mutex<BTreeMap<Cid, Vec<Cid>>>,
}

impl DiskBackend {
    pub fn open(id: impl Into<String>, root: impl AsRef<Path>) -> io::Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(root.join("blocks"))?;
        fs::create_dir_all(root.join("objects"))?;
        let links = read_link_index(&root.join("links.idx"))?;
        Ok(DiskBackend {
            id: id.into(),
            root,
            links: Mutex::new(links),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Links recorded in the sidecar for `cid`.
    pub fn indexed_links(&self, cid: &Cid) -> Option<Vec<Cid>> {
        self.links.lock().get(cid).cloned()
    }

    fn block_path(&self, digest: &Cid) -> PathBuf {
        self.root.join("blocks").join(digest.to_string())
    }

    fn object_path(&self, cid: &Cid) -> PathBuf {
        self.root.join("objects").join(cid.to_string())
    }

    fn flush_links(&self, links: &BTreeMap<Cid, Vec<Cid>>) -> io::Result<()> {
        let mut out = String::new();
        for (cid, ls) in links {
            let joined: Vec<String> = ls.iter().map(Cid::to_string).collect();
            out.push_str(&format!("{cid}\t{}\n", joined.join(",")));
        }
        atomic_write(&self.root.join("links.idx"), out.as_bytes())
    }
}

fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)
}

fn read_optional(path: &Path) -> io::Result<Option<Vec<u8>>> {
    match fs::read(path) {
        Ok(b) => Ok(Some(b)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e),
    }
}

fn remove_optional(path: &Path) -> io::Result<()> {
    match fs::remove_file(path) {
        Err(e) if e.kind() != io::ErrorKind::NotFound => Err(e),
        _ => Ok(()),
    }
}

fn list_dir(dir: &Path) -> io::Result<Vec<Cid>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name();
        if let Some(cid) = name.to_str().and_then(|n| n.parse::<Cid>().ok()) {
            out.push(cid);
        }
    }
    out.sort();
    Ok(out)
}

fn read_link_index(path: &Path) -> io::Result<BTreeMap<Cid, Vec<Cid>>> {
    let mut map = BTreeMap::new();
    let Some(bytes) = read_optional(path)? else {
        return Ok(map);
    };
    let text = String::from_utf8(bytes).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    for line in text.lines().filter(|l| !l.is_empty()) {
        let bad = || io::Error::new(io::ErrorKind::InvalidData, format!("bad links.idx line: {line}"));
        let (cid, rest) = line.split_once('\t').ok_or_else(bad)?;
        let cid: Cid = cid.parse().map_err(|_| bad())?;
        let links = rest
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<Cid>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        map.insert(cid, links);
    }
    Ok(map)
}

impl StoreBackend for DiskBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn write_block(&self, digest: &Cid, bytes: &[u8]) -> io::Result<()> {
        let path = self.block_path(digest);
        if path.exists() {
            return Ok(());
        }
        atomic_write(&path, bytes)
    }

    fn read_block(&self, digest: &Cid) -> io::Result<Option<Vec<u8>>> {
        read_optional(&self.block_path(digest))
    }

    fn delete_block(&self, digest: &Cid) -> io::Result<()> {
        remove_optional(&self.block_path(digest))
    }

    fn list_blocks(&self) -> io::Result<Vec<Cid>> {
        list_dir(&self.root.join("blocks"))
    }

    fn write_object(&self, cid: &Cid, manifest: &ObjectManifest) -> io::Result<()> {
        let json = serde_json::to_vec(manifest).map_err(io::Error::other)?;
        atomic_write(&self.object_path(cid), &json)?;
        let mut links = self.links.lock();
        links.insert(*cid, manifest.links.clone());
        self.flush_links(&links)
    }

    fn read_object(&self, cid: &Cid) -> io::Result<Option<ObjectManifest>> {
        match read_optional(&self.object_path(cid))? {
            Some(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)),
            None => Ok(None),
        }
    }

    fn delete_object(&self, cid: &Cid) -> io::Result<()> {
        remove_optional(&self.object_path(cid))?;
        let mut links = self.links.lock();
        if links.remove(cid).is_some() {
            self.flush_links(&links)?;
        }
        Ok(())
    }

    fn list_objects(&self) -> io::Result<Vec<Cid>> {
        list_dir(&self.root.join("objects"))
    }
}
