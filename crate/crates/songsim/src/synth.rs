//! Seeded genre-clustered corpus standing in for real listening data.
//!
//! Every genre owns a tag pool and an artist pool. Each artist has a small
//! signature subset of its genre's tags, and each user prefers one or two
//! genres and a few artists within them. Songs by the same artist therefore
//! share both tags and listeners.

use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use songsim_core::ingest::RawSongDoc;
use songsim_core::rng::{seeded, SeededRng};

use crate::error::{AppError, AppResult, IoContext};
use crate::io::{create, histories::write_histories, songs::write_song_docs};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_songs: usize,
    pub n_users: usize,
    pub n_genres: usize,
    pub tags_per_genre: usize,
    /// Probability that a tag or a listened song ignores genre structure.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_songs: 2000,
            n_users: 500,
            n_genres: 8,
            tags_per_genre: 12,
            noise: 0.1,
            seed: 42,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> AppResult<()> {
        if self.n_songs == 0 || self.n_users == 0 || self.n_genres == 0 || self.tags_per_genre == 0 {
            return Err(AppError::Usage("synthetic corpus sizes must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(AppError::Usage("noise must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub songs: Vec<RawSongDoc>,
    /// Genre of `songs[i]`.
    pub genres: Vec<usize>,
    /// `(user, song mbid)` rows.
    pub listens: Vec<(String, String)>,
    /// Tag pool of every genre.
    pub tag_pools: Vec<Vec<String>>,
}

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ru", "te", "so", "na", "vi", "de", "po", "ba", "ze", "fu", "gi", "ho", "ja",
];

/// Pronounceable lowercase word for `n`, at least two syllables long.
fn word(mut n: usize) -> String {
    let mut out = String::new();
    loop {
        out.push_str(SYLLABLES[n % SYLLABLES.len()]);
        n /= SYLLABLES.len();
        if n == 0 && out.len() >= 4 {
            return out;
        }
    }
}

fn capitalized(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_ascii_uppercase().to_string() + c.as_str()).unwrap_or_default()
}

fn mbid(rng: &mut SeededRng) -> String {
    let v: u128 = rng.random();
    let h = format!("{v:032x}");
    format!("{}-{}-{}-{}-{}", &h[..8], &h[8..12], &h[12..16], &h[16..20], &h[20..])
}

struct Artist {
    name: String,
    mbid: String,
    signature: Vec<usize>,
    albums: Vec<(String, String)>,
    songs: Vec<usize>,
}

pub fn generate(spec: &SynthSpec) -> AppResult<SynthCorpus> {
    spec.validate()?;
    let mut rng = seeded(spec.seed);
    let tag_pools: Vec<Vec<String>> = (0..spec.n_genres)
        .map(|g| (0..spec.tags_per_genre).map(|j| word(g * spec.tags_per_genre + j + 17)).collect())
        .collect();

    let artists_per_genre = (spec.n_songs / (spec.n_genres * 10)).max(1);
    let mut artists: Vec<Artist> = Vec::new();
    for _ in 0..spec.n_genres {
        for _ in 0..artists_per_genre {
            let idx: Vec<usize> = (0..spec.tags_per_genre).collect();
            let size = rng.random_range(2..=4).min(spec.tags_per_genre);
            let signature = idx.choose_multiple(&mut rng, size).copied().collect();
            let n_albums = rng.random_range(1..=3);
            let albums = (0..n_albums)
                .map(|_| (capitalized(&word(rng.random_range(0..4096))), mbid(&mut rng)))
                .collect();
            artists.push(Artist {
                name: format!("The {}", capitalized(&word(artists.len() + 300))),
                mbid: mbid(&mut rng),
                signature,
                albums,
                songs: Vec::new(),
            });
        }
    }

    let mut songs = Vec::with_capacity(spec.n_songs);
    let mut genres = Vec::with_capacity(spec.n_songs);
    for i in 0..spec.n_songs {
        let genre = i % spec.n_genres;
        let a = genre * artists_per_genre + rng.random_range(0..artists_per_genre);
        let artist = &mut artists[a];
        artist.songs.push(i);
        let (album_title, album_mbid) = artist.albums.choose(&mut rng).expect("albums").clone();

        let n_tags = rng.random_range(3..=8);
        let mut tags: Vec<(String, u32)> = Vec::with_capacity(n_tags);
        for slot in 0..n_tags {
            let tag = if spec.n_genres > 1 && rng.random::<f64>() < spec.noise {
                let other = (genre + rng.random_range(1..spec.n_genres)) % spec.n_genres;
                tag_pools[other].choose(&mut rng).expect("tags").clone()
            } else if rng.random::<f64>() < 0.7 {
                tag_pools[genre][*artist.signature.choose(&mut rng).expect("signature")].clone()
            } else {
                tag_pools[genre].choose(&mut rng).expect("tags").clone()
            };
            let count = if slot == 0 { 100 } else { rng.random_range(1..=100) };
            match tags.iter_mut().find(|(t, _)| *t == tag) {
                Some((_, c)) => *c = (*c).max(count),
                None => tags.push((tag, count)),
            }
        }
        songs.push(RawSongDoc {
            name: capitalized(&word(rng.random_range(0..65536))),
            tags,
            album_mbid,
            artist_name: artist.name.clone(),
            mbid: mbid(&mut rng),
            album_title,
            artist_mbid: artist.mbid.clone(),
        });
        genres.push(genre);
    }

    let by_genre: Vec<Vec<usize>> = (0..spec.n_genres)
        .map(|g| (0..spec.n_songs).filter(|&i| genres[i] == g).collect())
        .collect();
    let mut listens = Vec::new();
    for u in 0..spec.n_users {
        let user = format!("user-{u:05}");
        let n_pref = if spec.n_genres > 1 { rng.random_range(1..=2) } else { 1 };
        let mut all_genres: Vec<usize> = (0..spec.n_genres).collect();
        all_genres.shuffle(&mut rng);
        let preferred = &all_genres[..n_pref];
        let favorites: Vec<Vec<usize>> = preferred
            .iter()
            .map(|&g| {
                let pool: Vec<usize> = (g * artists_per_genre..(g + 1) * artists_per_genre)
                    .filter(|&a| !artists[a].songs.is_empty())
                    .collect();
                let n = rng.random_range(2..=4).min(pool.len());
                pool.choose_multiple(&mut rng, n).copied().collect()
            })
            .collect();
        let len = rng.random_range(30..=100);
        for _ in 0..len {
            let song = if rng.random::<f64>() < spec.noise {
                rng.random_range(0..spec.n_songs)
            } else {
                let p = rng.random_range(0..n_pref);
                match favorites[p].choose(&mut rng) {
                    Some(&a) if rng.random::<f64>() < 0.7 => *artists[a].songs.choose(&mut rng).expect("songs"),
                    _ => match by_genre[preferred[p]].choose(&mut rng) {
                        Some(&s) => s,
                        None => rng.random_range(0..spec.n_songs),
                    },
                }
            };
            listens.push((user.clone(), songs[song].mbid.clone()));
        }
    }

    Ok(SynthCorpus {
        songs,
        genres,
        listens,
        tag_pools,
    })
}

/// Writes `songs.jsonl` and `histories.csv` into `dir`.
pub fn write_corpus(corpus: &SynthCorpus, dir: &Path) -> AppResult<(PathBuf, PathBuf)> {
    let songs = dir.join("songs.jsonl");
    let histories = dir.join("histories.csv");
    write_song_docs(create(&songs)?, &corpus.songs).at(&songs)?;
    write_histories(create(&histories)?, &corpus.listens).map_err(|e| AppError::Data(format!("{}: {e}", histories.display())))?;
    Ok((songs, histories))
}
