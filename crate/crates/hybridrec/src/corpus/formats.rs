//! Source-format grammars: MovieLens 100K/1M, BookCrossing, and a generic
//! CSV layout.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{Corpus, CorpusError, RawRecord};

/// Supported input layouts for [`ingest`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    /// Directory with `u.data` (tab-separated), `u.item`, `u.user`
    /// (pipe-separated).
    MovieLens100K,
    /// Directory with `ratings.dat`, `movies.dat`, `users.dat`
    /// (`::`-separated).
    MovieLens1M,
    /// Directory with `BX-Book-Ratings.csv`, `BX-Books.csv`, `BX-Users.csv`
    /// (semicolon-separated, double-quoted, ISO-8859-1).
    BookCrossing,
    /// Single UTF-8 file with header `user,item[,rating][,timestamp]`.
    GenericCsv,
}

impl FromStr for DatasetFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ml100k" | "ml-100k" | "movielens100k" => Ok(DatasetFormat::MovieLens100K),
            "ml1m" | "ml-1m" | "movielens1m" => Ok(DatasetFormat::MovieLens1M),
            "bookcrossing" | "bx" => Ok(DatasetFormat::BookCrossing),
            "csv" | "generic" | "genericcsv" => Ok(DatasetFormat::GenericCsv),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

/// Read a dataset from disk. For the named datasets `path` is the dataset
/// directory; for [`DatasetFormat::GenericCsv`] it is the interaction file
/// itself. The first grammar violation aborts with
/// [`CorpusError::MalformedRecord`].
pub fn ingest(path: &Path, format: DatasetFormat) -> Result<Corpus, CorpusError> {
    match format {
        DatasetFormat::MovieLens100K => ingest_ml100k(path),
        DatasetFormat::MovieLens1M => ingest_ml1m(path),
        DatasetFormat::BookCrossing => ingest_bookcrossing(path),
        DatasetFormat::GenericCsv => ingest_generic_csv(path),
    }
}

const ML_GENRES: [&str; 19] = [
    "unknown",
    "Action",
    "Adventure",
    "Animation",
    "Children's",
    "Comedy",
    "Crime",
    "Documentary",
    "Drama",
    "Fantasy",
    "Film-Noir",
    "Horror",
    "Musical",
    "Mystery",
    "Romance",
    "Sci-Fi",
    "Thriller",
    "War",
    "Western",
];

fn malformed(line: usize, reason: impl Into<String>) -> CorpusError {
    CorpusError::MalformedRecord {
        line,
        reason: reason.into(),
    }
}

fn parse_num<T: FromStr>(field: &str, line: usize, what: &str) -> Result<T, CorpusError> {
    field
        .trim()
        .parse::<T>()
        .map_err(|_| malformed(line, format!("invalid {what}: {field:?}")))
}

fn check_scale(rating: f64, scale: (f64, f64), line: usize) -> Result<(), CorpusError> {
    if rating < scale.0 || rating > scale.1 {
        return Err(malformed(
            line,
            format!("rating {rating} outside scale {}..{}", scale.0, scale.1),
        ));
    }
    Ok(())
}

fn ingest_ml100k(dir: &Path) -> Result<Corpus, CorpusError> {
    let scale = (1.0, 5.0);
    let data = fs::read_to_string(dir.join("u.data"))?;
    let mut records = Vec::new();
    for (idx, line) in data.lines().enumerate() {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(malformed(
                lineno,
                "expected user\\titem\\trating\\ttimestamp",
            ));
        }
        let rating: f64 = parse_num(fields[2], lineno, "rating")?;
        check_scale(rating, scale, lineno)?;
        records.push(RawRecord {
            user: fields[0].trim().to_string(),
            item: fields[1].trim().to_string(),
            rating: Some(rating),
            timestamp: Some(parse_num(fields[3], lineno, "timestamp")?),
        });
    }

    let mut item_attrs = BTreeMap::new();
    let item_path = dir.join("u.item");
    if item_path.exists() {
        let text = read_latin1(&item_path)?;
        for (idx, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('|').collect();
            if fields.len() < 2 {
                return Err(malformed(idx + 1, "u.item needs at least id|title"));
            }
            let mut attrs = BTreeMap::new();
            attrs.insert("Title".to_string(), fields[1].trim().to_string());
            if let Some(date) = fields.get(2) {
                if let Some(year) = date.trim().rsplit('-').next() {
                    if !year.is_empty() {
                        attrs.insert("Year".to_string(), year.to_string());
                    }
                }
            }
            let genres: Vec<&str> = ML_GENRES
                .iter()
                .enumerate()
                .filter(|(g, _)| fields.get(5 + g).map(|f| f.trim()) == Some("1"))
                .map(|(_, name)| *name)
                .collect();
            if !genres.is_empty() {
                attrs.insert("Genres".to_string(), genres.join("|"));
            }
            item_attrs.insert(fields[0].trim().to_string(), attrs);
        }
    }

    let mut user_attrs = BTreeMap::new();
    let user_path = dir.join("u.user");
    if user_path.exists() {
        let text = read_latin1(&user_path)?;
        for (idx, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('|').collect();
            if fields.len() < 5 {
                return Err(malformed(
                    idx + 1,
                    "u.user needs id|age|gender|occupation|zip",
                ));
            }
            let mut attrs = BTreeMap::new();
            attrs.insert("Age".to_string(), fields[1].trim().to_string());
            attrs.insert("Gender".to_string(), fields[2].trim().to_string());
            attrs.insert("Occupation".to_string(), fields[3].trim().to_string());
            attrs.insert("ZipCode".to_string(), fields[4].trim().to_string());
            user_attrs.insert(fields[0].trim().to_string(), attrs);
        }
    }

    Corpus::assemble(records, scale, item_attrs, user_attrs)
}

fn ingest_ml1m(dir: &Path) -> Result<Corpus, CorpusError> {
    let scale = (1.0, 5.0);
    let data = read_latin1(&dir.join("ratings.dat"))?;
    let mut records = Vec::new();
    for (idx, line) in data.lines().enumerate() {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split("::").collect();
        if fields.len() != 4 {
            return Err(malformed(lineno, "expected user::item::rating::timestamp"));
        }
        let rating: f64 = parse_num(fields[2], lineno, "rating")?;
        check_scale(rating, scale, lineno)?;
        records.push(RawRecord {
            user: fields[0].trim().to_string(),
            item: fields[1].trim().to_string(),
            rating: Some(rating),
            timestamp: Some(parse_num(fields[3], lineno, "timestamp")?),
        });
    }

    let mut item_attrs = BTreeMap::new();
    let movies = dir.join("movies.dat");
    if movies.exists() {
        let text = read_latin1(&movies)?;
        for (idx, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split("::").collect();
            if fields.len() < 2 {
                return Err(malformed(idx + 1, "movies.dat needs id::title[::genres]"));
            }
            let title = fields[1].trim().to_string();
            let mut attrs = BTreeMap::new();
            // Titles embed the year as a "(YYYY)" suffix.
            if let Some(year) = title
                .rfind('(')
                .map(|p| title[p + 1..].trim_end_matches(')').to_string())
                .filter(|y| y.len() == 4 && y.chars().all(|c| c.is_ascii_digit()))
            {
                attrs.insert("Year".to_string(), year);
            }
            attrs.insert("Title".to_string(), title);
            if let Some(genres) = fields.get(2) {
                if !genres.trim().is_empty() {
                    attrs.insert("Genres".to_string(), genres.trim().to_string());
                }
            }
            item_attrs.insert(fields[0].trim().to_string(), attrs);
        }
    }

    let mut user_attrs = BTreeMap::new();
    let users = dir.join("users.dat");
    if users.exists() {
        let text = read_latin1(&users)?;
        for (idx, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split("::").collect();
            if fields.len() < 5 {
                return Err(malformed(
                    idx + 1,
                    "users.dat needs id::gender::age::occupation::zip",
                ));
            }
            let mut attrs = BTreeMap::new();
            attrs.insert("Gender".to_string(), fields[1].trim().to_string());
            attrs.insert("Age".to_string(), fields[2].trim().to_string());
            attrs.insert("Occupation".to_string(), fields[3].trim().to_string());
            attrs.insert("ZipCode".to_string(), fields[4].trim().to_string());
            user_attrs.insert(fields[0].trim().to_string(), attrs);
        }
    }

    Corpus::assemble(records, scale, item_attrs, user_attrs)
}

fn ingest_bookcrossing(dir: &Path) -> Result<Corpus, CorpusError> {
    let scale = (1.0, 10.0);
    let text = read_latin1(&dir.join("BX-Book-Ratings.csv"))?;
    let mut reader = bx_reader(&text);
    let mut records = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let lineno = idx + 2; // header is line 1
        let row = row.map_err(|e| malformed(lineno, e.to_string()))?;
        if row.len() < 3 {
            return Err(malformed(
                lineno,
                "expected \"User-ID\";\"ISBN\";\"Book-Rating\"",
            ));
        }
        let rating: f64 = parse_num(&row[2], lineno, "rating")?;
        // A zero rating marks an implicit interaction on the 1-10 scale.
        let rating = if rating == 0.0 {
            None
        } else {
            check_scale(rating, scale, lineno)?;
            Some(rating)
        };
        records.push(RawRecord {
            user: row[0].trim().to_string(),
            item: row[1].trim().to_string(),
            rating,
            // Synthetic timestamp: stable input order.
            timestamp: None,
        });
    }

    let mut item_attrs = BTreeMap::new();
    let books = dir.join("BX-Books.csv");
    if books.exists() {
        let text = read_latin1(&books)?;
        let mut reader = bx_reader(&text);
        for (idx, row) in reader.records().enumerate() {
            let row = row.map_err(|e| malformed(idx + 2, e.to_string()))?;
            if row.len() < 5 {
                continue;
            }
            let mut attrs = BTreeMap::new();
            attrs.insert("Title".to_string(), row[1].trim().to_string());
            attrs.insert("Author".to_string(), row[2].trim().to_string());
            attrs.insert("Year".to_string(), row[3].trim().to_string());
            attrs.insert("Publisher".to_string(), row[4].trim().to_string());
            item_attrs.insert(row[0].trim().to_string(), attrs);
        }
    }

    let mut user_attrs = BTreeMap::new();
    let users = dir.join("BX-Users.csv");
    if users.exists() {
        let text = read_latin1(&users)?;
        let mut reader = bx_reader(&text);
        for (idx, row) in reader.records().enumerate() {
            let row = row.map_err(|e| malformed(idx + 2, e.to_string()))?;
            if row.len() < 2 {
                continue;
            }
            let mut attrs = BTreeMap::new();
            attrs.insert("Location".to_string(), row[1].trim().to_string());
            if let Some(age) = row.get(2) {
                let age = age.trim();
                if !age.is_empty() && age != "NULL" {
                    attrs.insert("Age".to_string(), age.to_string());
                }
            }
            user_attrs.insert(row[0].trim().to_string(), attrs);
        }
    }

    Corpus::assemble(records, scale, item_attrs, user_attrs)
}

fn ingest_generic_csv(path: &Path) -> Result<Corpus, CorpusError> {
    let text = fs::read_to_string(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let user_col = col("user").ok_or_else(|| malformed(1, "missing 'user' column"))?;
    let item_col = col("item").ok_or_else(|| malformed(1, "missing 'item' column"))?;
    let rating_col = col("rating");
    let ts_col = col("timestamp");

    let mut records = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let lineno = idx + 2;
        let row = row.map_err(|e| malformed(lineno, e.to_string()))?;
        let field = |c: usize| row.get(c).map(str::trim).unwrap_or("");
        if field(user_col).is_empty() || field(item_col).is_empty() {
            return Err(malformed(lineno, "empty user or item field"));
        }
        let rating = match rating_col.map(field).filter(|f| !f.is_empty()) {
            Some(f) => Some(parse_num::<f64>(f, lineno, "rating")?),
            None => None,
        };
        let timestamp = match ts_col.map(field).filter(|f| !f.is_empty()) {
            Some(f) => Some(parse_num::<i64>(f, lineno, "timestamp")?),
            None => None,
        };
        records.push(RawRecord {
            user: field(user_col).to_string(),
            item: field(item_col).to_string(),
            rating,
            timestamp,
        });
    }

    // The generic layout declares no scale; use the observed rating range.
    let rated: Vec<f64> = records.iter().filter_map(|r| r.rating).collect();
    let scale = if rated.is_empty() {
        (1.0, 5.0)
    } else {
        let min = rated.iter().copied().fold(f64::INFINITY, f64::min);
        let max = rated.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (min, max)
    };
    Corpus::assemble(records, scale, BTreeMap::new(), BTreeMap::new())
}

fn bx_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .delimiter(b';')
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes())
}

/// ISO-8859-1 maps each byte to the same code point, so decoding is a plain
/// byte-to-char widening.
fn read_latin1(path: &Path) -> Result<String, CorpusError> {
    let bytes = fs::read(path)?;
    Ok(bytes.iter().map(|&b| b as char).collect())
}
