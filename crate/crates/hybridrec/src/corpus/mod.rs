//! User–item interaction data model: ingestion, k-core filtering,
//! leave-one-out splitting, and corpus statistics.
//!
//! A [`Corpus`] holds a deduplicated interaction list over dense integer id
//! spaces, plus a [`Catalog`] of textual attributes. Within one user the
//! interactions are totally ordered by timestamp (ties broken by input
//! order), which is what the leave-one-out split and the sequential model
//! rely on.

mod formats;

pub use formats::{ingest, DatasetFormat};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense user identifier, `0..n_users`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct UserId(pub u32);

/// Dense item identifier, `0..n_items`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct ItemId(pub u32);

impl UserId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl ItemId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u{}", self.0)
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "i{}", self.0)
    }
}

/// One observed user–item event. `rating` is on the dataset's native scale
/// when the source provides one; `timestamp` is synthetic (stable input
/// order) for sources without time data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub user: UserId,
    pub item: ItemId,
    pub rating: Option<f64>,
    pub timestamp: i64,
}

/// Textual attributes per item and per user, keyed by exact, case-sensitive
/// attribute names (`Title`, `Genres`, `Gender`, ...).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Catalog {
    pub item_attributes: Vec<BTreeMap<String, String>>,
    pub user_attributes: Vec<BTreeMap<String, String>>,
}

impl Catalog {
    fn with_sizes(n_users: usize, n_items: usize) -> Self {
        Catalog {
            item_attributes: vec![BTreeMap::new(); n_items],
            user_attributes: vec![BTreeMap::new(); n_users],
        }
    }

    pub fn item(&self, item: ItemId) -> &BTreeMap<String, String> {
        &self.item_attributes[item.idx()]
    }

    pub fn user(&self, user: UserId) -> &BTreeMap<String, String> {
        &self.user_attributes[user.idx()]
    }
}

/// A not-yet-indexed interaction as read from a source file. `user`/`item`
/// carry the source's original keys (numbers, ISBNs, ...).
#[derive(Debug, Clone)]
pub struct RawRecord {
    pub user: String,
    pub item: String,
    pub rating: Option<f64>,
    pub timestamp: Option<i64>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("unknown dataset format: {0}")]
    UnknownFormat(String),
    #[error("no interactions survive {k}-core filtering")]
    EmptyAfterFiltering { k: u32 },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Interaction data over dense id spaces. Construction goes through
/// [`ingest`] or [`Corpus::from_raw_records`]; afterwards the corpus is
/// immutable and safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    interactions: Vec<Interaction>,
    catalog: Catalog,
    rating_scale: (f64, f64),
    raw_users: Vec<String>,
    raw_items: Vec<String>,
    user_offsets: Vec<usize>,
}

/// Per-user held-out interactions around a shared training corpus. The
/// train corpus keeps the parent's id spaces and catalog, so model ids stay
/// valid across the split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCorpus {
    pub train: Corpus,
    pub validation: BTreeMap<UserId, Interaction>,
    pub test: BTreeMap<UserId, Interaction>,
}

/// Size and density summary of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_users: usize,
    pub n_items: usize,
    pub n_ratings: usize,
    pub density: f64,
}

impl Corpus {
    /// Index raw records into a corpus: dense ids in first-appearance order,
    /// synthetic timestamps (stable input index) where the source has none,
    /// duplicates of a `(user, item)` pair collapsed to the latest timestamp,
    /// and per-user interactions sorted by `(timestamp, input order)`.
    pub fn from_raw_records(
        records: Vec<RawRecord>,
        rating_scale: (f64, f64),
    ) -> Result<Self, CorpusError> {
        Self::assemble(records, rating_scale, BTreeMap::new(), BTreeMap::new())
    }

    pub(crate) fn assemble(
        records: Vec<RawRecord>,
        rating_scale: (f64, f64),
        raw_item_attrs: BTreeMap<String, BTreeMap<String, String>>,
        raw_user_attrs: BTreeMap<String, BTreeMap<String, String>>,
    ) -> Result<Self, CorpusError> {
        if records.is_empty() {
            return Err(CorpusError::MalformedRecord {
                line: 0,
                reason: "no interaction records".into(),
            });
        }

        let mut user_ids: BTreeMap<String, UserId> = BTreeMap::new();
        let mut item_ids: BTreeMap<String, ItemId> = BTreeMap::new();
        let mut raw_users = Vec::new();
        let mut raw_items = Vec::new();

        // (interaction, input order) with dense ids assigned in first-appearance order.
        let mut indexed: Vec<(Interaction, usize)> = Vec::with_capacity(records.len());
        for (seq, rec) in records.into_iter().enumerate() {
            let user = *user_ids.entry(rec.user.clone()).or_insert_with(|| {
                raw_users.push(rec.user.clone());
                UserId((raw_users.len() - 1) as u32)
            });
            let item = *item_ids.entry(rec.item.clone()).or_insert_with(|| {
                raw_items.push(rec.item.clone());
                ItemId((raw_items.len() - 1) as u32)
            });
            let timestamp = rec.timestamp.unwrap_or(seq as i64);
            let interaction = Interaction {
                user,
                item,
                rating: rec.rating,
                timestamp,
            };
            indexed.push((interaction, seq));
        }

        // Deduplicate (user, item): keep the latest (timestamp, input order).
        let mut latest: BTreeMap<(UserId, ItemId), (Interaction, usize)> = BTreeMap::new();
        for (interaction, seq) in indexed {
            let key = (interaction.user, interaction.item);
            match latest.get(&key) {
                Some((kept, kept_seq))
                    if (kept.timestamp, *kept_seq) >= (interaction.timestamp, seq) => {}
                _ => {
                    latest.insert(key, (interaction, seq));
                }
            }
        }

        let mut interactions: Vec<(Interaction, usize)> = latest.into_values().collect();
        interactions.sort_by_key(|(it, seq)| (it.user, it.timestamp, *seq));
        let interactions: Vec<Interaction> = interactions.into_iter().map(|(it, _)| it).collect();

        let mut catalog = Catalog::with_sizes(raw_users.len(), raw_items.len());
        for (raw, attrs) in raw_item_attrs {
            if let Some(id) = item_ids.get(&raw) {
                catalog.item_attributes[id.idx()] = attrs;
            }
        }
        for (raw, attrs) in raw_user_attrs {
            if let Some(id) = user_ids.get(&raw) {
                catalog.user_attributes[id.idx()] = attrs;
            }
        }

        let user_offsets = compute_offsets(&interactions, raw_users.len());
        Ok(Corpus {
            interactions,
            catalog,
            rating_scale,
            raw_users,
            raw_items,
            user_offsets,
        })
    }

    pub fn interactions(&self) -> &[Interaction] {
        &self.interactions
    }

    pub fn n_users(&self) -> usize {
        self.raw_users.len()
    }

    pub fn n_items(&self) -> usize {
        self.raw_items.len()
    }

    pub fn rating_scale(&self) -> (f64, f64) {
        self.rating_scale
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn raw_user_id(&self, user: UserId) -> &str {
        &self.raw_users[user.idx()]
    }

    pub fn raw_item_id(&self, item: ItemId) -> &str {
        &self.raw_items[item.idx()]
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        (0..self.n_users() as u32).map(UserId)
    }

    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        (0..self.n_items() as u32).map(ItemId)
    }

    /// This user's interactions in timestamp order (ties by input order).
    pub fn user_interactions(&self, user: UserId) -> &[Interaction] {
        let lo = self.user_offsets[user.idx()];
        let hi = self.user_offsets[user.idx() + 1];
        &self.interactions[lo..hi]
    }

    /// Display title for an item: the `Title` attribute, with ` (Year)`
    /// appended when a `Year` attribute exists and the title does not
    /// already carry it, falling back to the original source id.
    pub fn item_title(&self, item: ItemId) -> String {
        let attrs = self.catalog.item(item);
        match attrs.get("Title") {
            Some(title) => match attrs.get("Year") {
                Some(year) if !title.contains(year.as_str()) => format!("{title} ({year})"),
                _ => title.clone(),
            },
            None => format!("Item {}", self.raw_items[item.idx()]),
        }
    }

    /// Maximal k-core: iteratively drop users and items with fewer than `k`
    /// interactions until a fixed point, then re-index the survivors
    /// (first-appearance order, original ids retained).
    pub fn apply_k_core(&self, k: u32) -> Result<Corpus, CorpusError> {
        let keep = |interactions: &[Interaction]| -> Vec<Interaction> {
            let mut user_deg = vec![0u32; self.n_users()];
            let mut item_deg = vec![0u32; self.n_items()];
            for it in interactions {
                user_deg[it.user.idx()] += 1;
                item_deg[it.item.idx()] += 1;
            }
            interactions
                .iter()
                .copied()
                .filter(|it| user_deg[it.user.idx()] >= k && item_deg[it.item.idx()] >= k)
                .collect()
        };

        let mut current = self.interactions.clone();
        loop {
            let next = keep(&current);
            if next.len() == current.len() {
                break;
            }
            current = next;
        }
        if current.is_empty() {
            return Err(CorpusError::EmptyAfterFiltering { k });
        }

        let records: Vec<RawRecord> = current
            .iter()
            .map(|it| RawRecord {
                user: self.raw_users[it.user.idx()].clone(),
                item: self.raw_items[it.item.idx()].clone(),
                rating: it.rating,
                timestamp: Some(it.timestamp),
            })
            .collect();
        let item_attrs = current
            .iter()
            .map(|it| {
                (
                    self.raw_items[it.item.idx()].clone(),
                    self.catalog.item(it.item).clone(),
                )
            })
            .collect();
        let user_attrs = current
            .iter()
            .map(|it| {
                (
                    self.raw_users[it.user.idx()].clone(),
                    self.catalog.user(it.user).clone(),
                )
            })
            .collect();
        Corpus::assemble(records, self.rating_scale, item_attrs, user_attrs)
    }

    /// Leave-one-out split: per user, the interaction with the greatest
    /// timestamp is test, the second greatest validation, the rest train.
    /// Users with fewer than three interactions stay entirely in train.
    pub fn leave_one_out_split(&self) -> Result<SplitCorpus, CorpusError> {
        if self.interactions.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        let mut train = Vec::with_capacity(self.interactions.len());
        let mut validation = BTreeMap::new();
        let mut test = BTreeMap::new();
        for user in self.users() {
            let seq = self.user_interactions(user);
            if seq.len() >= 3 {
                train.extend_from_slice(&seq[..seq.len() - 2]);
                validation.insert(user, seq[seq.len() - 2]);
                test.insert(user, seq[seq.len() - 1]);
            } else {
                train.extend_from_slice(seq);
            }
        }
        let user_offsets = compute_offsets(&train, self.n_users());
        let train = Corpus {
            interactions: train,
            catalog: self.catalog.clone(),
            rating_scale: self.rating_scale,
            raw_users: self.raw_users.clone(),
            raw_items: self.raw_items.clone(),
            user_offsets,
        };
        Ok(SplitCorpus {
            train,
            validation,
            test,
        })
    }

    /// The same corpus with its catalog replaced, e.g. after attribute
    /// augmentation. Panics if the catalog's shape does not match the id
    /// spaces.
    pub fn with_catalog(mut self, catalog: Catalog) -> Corpus {
        assert_eq!(catalog.item_attributes.len(), self.n_items());
        assert_eq!(catalog.user_attributes.len(), self.n_users());
        self.catalog = catalog;
        self
    }

    /// Exact counts plus `density = n_ratings / (n_users * n_items)`.
    pub fn stats(&self) -> Result<CorpusStats, CorpusError> {
        if self.interactions.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        let n_users = self.n_users();
        let n_items = self.n_items();
        let n_ratings = self.interactions.len();
        let density = n_ratings as f64 / (n_users as f64 * n_items as f64);
        Ok(CorpusStats {
            n_users,
            n_items,
            n_ratings,
            density,
        })
    }
}

/// Free-function form of [`Corpus::apply_k_core`].
pub fn apply_k_core(corpus: &Corpus, k: u32) -> Result<Corpus, CorpusError> {
    corpus.apply_k_core(k)
}

/// Free-function form of [`Corpus::leave_one_out_split`].
pub fn leave_one_out_split(corpus: &Corpus) -> Result<SplitCorpus, CorpusError> {
    corpus.leave_one_out_split()
}

/// Free-function form of [`Corpus::stats`].
pub fn corpus_stats(corpus: &Corpus) -> Result<CorpusStats, CorpusError> {
    corpus.stats()
}

fn compute_offsets(interactions: &[Interaction], n_users: usize) -> Vec<usize> {
    let mut counts = vec![0usize; n_users + 1];
    for it in interactions {
        counts[it.user.idx() + 1] += 1;
    }
    for i in 1..counts.len() {
        counts[i] += counts[i - 1];
    }
    counts
}
