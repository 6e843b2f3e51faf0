//! Single-user session: the catalog, the user's ratings and the profile
//! currently being served.
//!
//! Ratings are appended to `ratings.log` as they arrive and the last trained
//! profile is kept in `profile.json` together with the ratings it was
//! trained on, so a restart restores both.

use std::collections::{HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, PoisonError, RwLock};

use bookrec_core::corpus::{read_ratings, Catalog, Rating, RatingEntry};
use bookrec_core::evaluation::build_dataset;
use bookrec_core::learner::{Profile, RatedExample, DEFAULT_LAMBDA};
use bookrec_core::slot::SlotMask;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

const RATINGS_LOG: &str = "ratings.log";
const PROFILE_SNAPSHOT: &str = "profile.json";

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub lambda: f64,
    pub mask: SlotMask,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self { data_dir: data_dir.into(), lambda: DEFAULT_LAMBDA, mask: SlotMask::all() }
    }
}

/// A profile together with everything it was trained from.
#[derive(Debug)]
pub struct Trained {
    pub generation: u64,
    pub ratings: Vec<RatingEntry>,
    pub examples: Vec<RatedExample>,
    pub profile: Profile,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    generation: u64,
    ratings: Vec<RatingEntry>,
    profile: Profile,
}

struct RatingStore {
    entries: Vec<RatingEntry>,
    index: HashMap<String, usize>,
    log: File,
}

impl RatingStore {
    fn upsert(&mut self, entry: RatingEntry) {
        match self.index.get(&entry.id) {
            Some(&i) => self.entries[i].rating = entry.rating,
            None => {
                self.index.insert(entry.id.clone(), self.entries.len());
                self.entries.push(entry);
            }
        }
    }
}

pub struct Session {
    catalog: Arc<Catalog>,
    config: ServiceConfig,
    store: Mutex<RatingStore>,
    current: RwLock<Option<Arc<Trained>>>,
    train_lock: tokio::sync::Mutex<()>,
}

impl Session {
    /// Opens (or creates) the data directory and restores any saved
    /// ratings and profile.
    pub fn open(catalog: Catalog, config: ServiceConfig) -> Result<Self, bookrec_core::Error> {
        fs::create_dir_all(&config.data_dir)?;
        let log_path = config.data_dir.join(RATINGS_LOG);
        let saved = if log_path.exists() {
            read_ratings(BufReader::new(File::open(&log_path)?))?
        } else {
            Vec::new()
        };
        for entry in &saved {
            if catalog.get(&entry.id).is_none() {
                return Err(bookrec_core::Error::NotFound(entry.id.clone()));
            }
        }
        let log = OpenOptions::new().create(true).append(true).open(&log_path)?;
        let mut store = RatingStore { entries: Vec::new(), index: HashMap::new(), log };
        for entry in saved {
            store.upsert(entry);
        }

        let current = load_snapshot(&config.data_dir.join(PROFILE_SNAPSHOT), &catalog)?.map(Arc::new);
        Ok(Self {
            catalog: Arc::new(catalog),
            config,
            store: Mutex::new(store),
            current: RwLock::new(current),
            train_lock: tokio::sync::Mutex::new(()),
        })
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    /// The profile being served, if one has been trained.
    pub fn current(&self) -> Option<Arc<Trained>> {
        self.current.read().unwrap_or_else(PoisonError::into_inner).clone()
    }

    pub fn generation(&self) -> u64 {
        self.current().map_or(0, |t| t.generation)
    }

    pub fn ratings(&self) -> Vec<RatingEntry> {
        self.lock_store().entries.clone()
    }

    pub fn rating_of(&self, id: &str) -> Option<Rating> {
        let store = self.lock_store();
        store.index.get(id).map(|&i| store.entries[i].rating)
    }

    pub fn rated_ids(&self) -> HashSet<String> {
        self.lock_store().entries.iter().map(|e| e.id.clone()).collect()
    }

    /// Stores a rating, replacing any earlier rating of the same book, and
    /// returns the number of rated books. Does not retrain.
    pub fn rate(&self, id: &str, rating: Rating) -> Result<usize, ApiError> {
        if self.catalog.get(id).is_none() {
            return Err(ApiError::not_found(format!("book `{id}` not found")));
        }
        let entry = RatingEntry { id: id.to_string(), rating };
        let mut line = serde_json::to_string(&entry).map_err(|e| ApiError::internal(e.to_string()))?;
        line.push('\n');
        let mut store = self.lock_store();
        store
            .log
            .write_all(line.as_bytes())
            .and_then(|()| store.log.flush())
            .map_err(|e| ApiError::internal(format!("cannot record rating: {e}")))?;
        store.upsert(entry);
        Ok(store.entries.len())
    }

    /// Trains on every stored rating and swaps the new profile in. Only one
    /// training runs at a time; readers keep the previous profile until the
    /// swap.
    pub async fn train(self: &Arc<Self>) -> Result<Arc<Trained>, ApiError> {
        let _guard = self.train_lock.lock().await;
        let ratings = self.ratings();
        if ratings.is_empty() {
            return Err(ApiError::new(crate::error::ErrorCode::Untrained, "cannot train without any ratings"));
        }
        let generation = self.generation() + 1;
        let session = Arc::clone(self);
        let trained = tokio::task::spawn_blocking(move || -> Result<Trained, ApiError> {
            let examples = build_dataset(&session.catalog, &ratings)?;
            let profile = Profile::train(&examples, session.config.lambda, &session.config.mask)?;
            let trained = Trained { generation, ratings, examples, profile };
            save_snapshot(&session.config.data_dir.join(PROFILE_SNAPSHOT), &trained)?;
            Ok(trained)
        })
        .await
        .map_err(|e| ApiError::internal(format!("training task failed: {e}")))??;

        let trained = Arc::new(trained);
        *self.current.write().unwrap_or_else(PoisonError::into_inner) = Some(Arc::clone(&trained));
        Ok(trained)
    }

    fn lock_store(&self) -> std::sync::MutexGuard<'_, RatingStore> {
        self.store.lock().unwrap_or_else(PoisonError::into_inner)
    }
}

fn load_snapshot(path: &Path, catalog: &Catalog) -> Result<Option<Trained>, bookrec_core::Error> {
    if !path.exists() {
        return Ok(None);
    }
    let snapshot: Snapshot = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    let examples = build_dataset(catalog, &snapshot.ratings)?;
    Ok(Some(Trained {
        generation: snapshot.generation,
        ratings: snapshot.ratings,
        examples,
        profile: snapshot.profile,
    }))
}

/// Writes to a temporary file and renames it over the old snapshot, so a
/// crash never leaves a half-written profile behind.
fn save_snapshot(path: &Path, trained: &Trained) -> Result<(), bookrec_core::Error> {
    let snapshot = Snapshot {
        generation: trained.generation,
        ratings: trained.ratings.clone(),
        profile: trained.profile.clone(),
    };
    let tmp = path.with_extension("json.tmp");
    let mut file = File::create(&tmp)?;
    serde_json::to_writer(&mut file, &snapshot)?;
    file.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}
