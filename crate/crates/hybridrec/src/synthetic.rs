//! Seeded synthetic data for experiments and benchmarks: a low-rank
//! preference world with a known ground-truth score for every (user, item)
//! pair, and a writer that lays a synthetic dataset out in the MovieLens
//! 100K file grammar.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::corpus::{Corpus, ItemId, RawRecord, UserId};

/// Shape of a synthetic low-rank preference world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub n_users: usize,
    pub n_items: usize,
    pub rank: usize,
    pub positives_per_user: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_users: 200,
            n_items: 100,
            rank: 4,
            positives_per_user: 20,
            seed: 7,
        }
    }
}

/// The hidden preference matrix behind a synthetic corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueScores {
    n_users: usize,
    n_items: usize,
    scores: Vec<f64>,
}

impl TrueScores {
    pub fn score(&self, user: UserId, item: ItemId) -> f64 {
        self.scores[user.idx() * self.n_items + item.idx()]
    }

    /// The full matrix as a mock-oracle rating table.
    pub fn rating_table(&self) -> BTreeMap<(UserId, ItemId), f64> {
        let mut table = BTreeMap::new();
        for u in 0..self.n_users as u32 {
            for i in 0..self.n_items as u32 {
                table.insert((UserId(u), ItemId(i)), self.score(UserId(u), ItemId(i)));
            }
        }
        table
    }
}

/// Draw seeded rank-`r` user and item factors, take each user's
/// `positives_per_user` highest-scoring items as their interactions (visit
/// order shuffled, timestamps 0, 1, 2, ...), and return the corpus together
/// with the full true score matrix. Corpus ratings rescale each user's
/// positive scores into 1..5.
pub fn rank_factor_corpus(config: &SyntheticConfig) -> (Corpus, TrueScores) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, 1.0).expect("valid std dev");
    let user_factors: Vec<f64> = (0..config.n_users * config.rank)
        .map(|_| normal.sample(&mut rng))
        .collect();
    let item_factors: Vec<f64> = (0..config.n_items * config.rank)
        .map(|_| normal.sample(&mut rng))
        .collect();

    let mut scores = vec![0.0; config.n_users * config.n_items];
    for u in 0..config.n_users {
        for i in 0..config.n_items {
            let mut s = 0.0;
            for f in 0..config.rank {
                s += user_factors[u * config.rank + f] * item_factors[i * config.rank + f];
            }
            scores[u * config.n_items + i] = s;
        }
    }

    let digits = (config.n_items.max(2) - 1).to_string().len();
    let mut records = Vec::new();
    for u in 0..config.n_users {
        let mut by_score: Vec<usize> = (0..config.n_items).collect();
        by_score.sort_by(|&a, &b| {
            scores[u * config.n_items + b]
                .partial_cmp(&scores[u * config.n_items + a])
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut positives: Vec<usize> =
            by_score[..config.positives_per_user.min(config.n_items)].to_vec();
        // Visit order is independent of preference order.
        for idx in (1..positives.len()).rev() {
            positives.swap(idx, rng.gen_range(0..=idx));
        }
        let chosen: Vec<f64> = positives
            .iter()
            .map(|&i| scores[u * config.n_items + i])
            .collect();
        let lo = chosen.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = chosen.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (t, &item) in positives.iter().enumerate() {
            let s = scores[u * config.n_items + item];
            let rating = if hi > lo {
                1.0 + 4.0 * (s - lo) / (hi - lo)
            } else {
                3.0
            };
            records.push(RawRecord {
                user: format!("{u}"),
                item: format!("{item:0digits$}"),
                rating: Some(rating),
                timestamp: Some(t as i64),
            });
        }
    }

    let corpus = Corpus::from_raw_records(records, (1.0, 5.0)).expect("non-empty synthetic data");
    let truth = TrueScores {
        n_users: config.n_users,
        n_items: config.n_items,
        scores,
    };
    (corpus, truth)
}

/// Map true scores onto the corpus's dense item ids (the corpus assigns ids
/// by first appearance, not by synthetic index).
pub fn truth_as_mock_table(corpus: &Corpus, truth: &TrueScores) -> BTreeMap<(UserId, ItemId), f64> {
    let mut table = BTreeMap::new();
    for user in corpus.users() {
        let synthetic_user: usize = corpus.raw_user_id(user).parse().expect("numeric raw id");
        for item in corpus.items() {
            let synthetic_item: usize = corpus.raw_item_id(item).parse().expect("numeric raw id");
            table.insert(
                (user, item),
                truth.scores[synthetic_user * truth.n_items + synthetic_item],
            );
        }
    }
    table
}

/// Write a deterministic dataset in the MovieLens 100K layout (`u.data`,
/// `u.item`, `u.user`) with exactly the requested shape: every user and
/// item appears, no (user, item) pair repeats. Item assignment walks
/// striding windows, so the construction needs no randomness.
pub fn write_ml100k_shaped(
    dir: &Path,
    n_users: usize,
    n_items: usize,
    n_interactions: usize,
) -> std::io::Result<()> {
    assert!(n_users > 0 && n_items > 0);
    assert!(
        n_interactions >= n_users && n_interactions >= n_items,
        "every user and item must appear"
    );
    assert!(
        n_interactions <= n_users * n_items,
        "cannot exceed the dense matrix"
    );
    let per_user = n_interactions / n_users;
    let extra = n_interactions % n_users;
    assert!(per_user < n_items, "per-user demand exceeds the catalog");

    let width = n_items.to_string().len();
    let mut data = String::new();
    let mut stamp = 874_000_000i64;
    for u in 1..=n_users {
        let count = per_user + usize::from(u <= extra);
        for j in 0..count {
            let item = (u * 37 + j) % n_items + 1;
            let rating = (u + item) % 5 + 1;
            data.push_str(&format!("{u}\t{item}\t{rating}\t{stamp}\n"));
            stamp += 1;
        }
    }
    fs::File::create(dir.join("u.data"))?.write_all(data.as_bytes())?;

    let mut items = String::new();
    for i in 1..=n_items {
        let year = 1930 + (i % 70);
        let mut flags = vec!["0"; 19];
        flags[i % 19] = "1";
        items.push_str(&format!(
            "{i}|Film {i:0width$} ({year})|01-Jan-{year}||http://example.com/{i}|{}\n",
            flags.join("|"),
        ));
    }
    fs::File::create(dir.join("u.item"))?.write_all(items.as_bytes())?;

    let occupations = ["engineer", "teacher", "artist", "doctor", "writer"];
    let mut users = String::new();
    for u in 1..=n_users {
        users.push_str(&format!(
            "{u}|{}|{}|{}|{:05}\n",
            20 + (u % 40),
            if u % 2 == 0 { "F" } else { "M" },
            occupations[u % occupations.len()],
            10000 + (u * 97) % 90000,
        ));
    }
    fs::File::create(dir.join("u.user"))?.write_all(users.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_corpus_has_the_requested_shape() {
        let config = SyntheticConfig {
            n_users: 20,
            n_items: 15,
            rank: 3,
            positives_per_user: 5,
            seed: 1,
        };
        let (corpus, truth) = rank_factor_corpus(&config);
        assert_eq!(corpus.n_users(), 20);
        assert_eq!(corpus.interactions().len(), 100);
        for user in corpus.users() {
            assert_eq!(corpus.user_interactions(user).len(), 5);
        }
        // Positives really are each user's top items by true score.
        let table = truth_as_mock_table(&corpus, &truth);
        for user in corpus.users() {
            let positive_min = corpus
                .user_interactions(user)
                .iter()
                .map(|it| table[&(user, it.item)])
                .fold(f64::INFINITY, f64::min);
            let positives: std::collections::BTreeSet<ItemId> = corpus
                .user_interactions(user)
                .iter()
                .map(|it| it.item)
                .collect();
            for item in corpus.items() {
                if !positives.contains(&item) {
                    assert!(table[&(user, item)] <= positive_min + 1e-12);
                }
            }
        }
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let config = SyntheticConfig::default();
        let (a, _) = rank_factor_corpus(&config);
        let (b, _) = rank_factor_corpus(&config);
        assert_eq!(a, b);
    }

    #[test]
    fn ml100k_shaped_fixture_has_exact_counts() {
        use crate::corpus::{ingest, DatasetFormat};
        let dir = tempfile::tempdir().unwrap();
        write_ml100k_shaped(dir.path(), 50, 40, 600).unwrap();
        let corpus = ingest(dir.path(), DatasetFormat::MovieLens100K).unwrap();
        assert_eq!(corpus.n_users(), 50);
        assert_eq!(corpus.n_items(), 40);
        assert_eq!(corpus.interactions().len(), 600);
    }
}
