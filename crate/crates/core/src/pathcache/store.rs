// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use super::{load_update, BundleError, GraphUpdateBundle};

/// Source of fresh bundle bytes. Files in tests; anything else behind the trait.
pub trait BundleFetcher {
    fn fetch(&self) -> std::io::Result<Vec<u8>>;
}

#[derive(Debug, Clone)]
pub struct FileFetcher(pub PathBuf);

impl BundleFetcher for FileFetcher {
    fn fetch(&self) -> std::io::Result<Vec<u8>> {
        std::fs::read(&self.0)
    }
}

/// Holds the current bundle. Replacement is a single pointer swap, so readers
/// observe either the old or the new bundle in full.
#[derive(Debug)]
pub struct BundleStore {
    current: RwLock<Arc<GraphUpdateBundle>>,
    generation: AtomicU64,
}

impl BundleStore {
    pub fn new(bundle: GraphUpdateBundle) -> Self {
        BundleStore {
            current: RwLock::new(Arc::new(bundle)),
            generation: AtomicU64::new(0),
        }
    }

    pub fn current(&self) -> Arc<GraphUpdateBundle> {
        self.current.read().expect("bundle lock poisoned").clone()
    }

    /// Incremented on every swap; lets caches detect a stale bundle.
    pub fn generation(&self) -> u64 {
        self.generation.load(Ordering::Acquire)
    }

    pub fn swap(&self, bundle: GraphUpdateBundle) -> Arc<GraphUpdateBundle> {
        let mut guard = self.current.write().expect("bundle lock poisoned");
        let old = std::mem::replace(&mut *guard, Arc::new(bundle));
        self.generation.fetch_add(1, Ordering::AcqRel);
        old
    }

    /// Fetches and validates a new bundle; the current one stays in place on error.
    pub fn refresh(&self, fetcher: &dyn BundleFetcher) -> Result<Arc<GraphUpdateBundle>, BundleError> {
        let bytes = fetcher.fetch()?;
        let bundle = load_update(bytes.as_slice())?;
        Ok(self.swap(bundle))
    }
}
