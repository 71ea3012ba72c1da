//! Song metadata records, sequential id assignment and user histories.
//!
//! Parsing of the on-disk formats lives in the `songsim` crate; this module
//! holds the record model and the pure transformations applied after parsing.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::text::normalize_text;

/// Upper bound on a tag count as reported by the metadata source.
pub const MAX_TAG_COUNT: u32 = 100;

/// A song document as delivered by the metadata source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSongDoc {
    pub name: String,
    /// `(tag, count)` pairs with `count` in `0..=100`.
    #[serde(default)]
    pub tags: Vec<(String, u32)>,
    #[serde(default)]
    pub album_mbid: String,
    #[serde(default)]
    pub artist_name: String,
    pub mbid: String,
    #[serde(default)]
    pub album_title: String,
    #[serde(default)]
    pub artist_mbid: String,
}

/// A normalized song with integer ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SongRecord {
    pub song_id: u32,
    pub artist_id: u32,
    pub album_id: u32,
    pub name_norm: String,
    pub artist_norm: String,
    pub album_norm: String,
    /// Unique normalized tags with counts in `1..=100`.
    pub tags: Vec<(String, u32)>,
}

/// Maps external identifiers to `0, 1, 2, ...` in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdAssigner {
    mapping: BTreeMap<String, u32>,
    order: Vec<String>,
}

impl IdAssigner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Id of `key`, assigning the next free one if unseen.
    pub fn assign(&mut self, key: &str) -> u32 {
        if let Some(&id) = self.mapping.get(key) {
            return id;
        }
        let id = self.order.len() as u32;
        self.mapping.insert(String::from(key), id);
        self.order.push(String::from(key));
        id
    }

    pub fn get(&self, key: &str) -> Option<u32> {
        self.mapping.get(key).copied()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.mapping.contains_key(key)
    }

    pub fn key_of(&self, id: u32) -> Option<&str> {
        self.order.get(id as usize).map(String::as_str)
    }

    pub fn next_id(&self) -> u32 {
        self.order.len() as u32
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// `(key, id)` in id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> + '_ {
        self.order.iter().enumerate().map(|(i, k)| (k.as_str(), i as u32))
    }
}

/// The three independent id namespaces produced by [`build_song_records`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMaps {
    pub songs: IdAssigner,
    pub artists: IdAssigner,
    pub albums: IdAssigner,
}

/// Normalizes documents and assigns song, artist and album ids.
///
/// A repeated song mbid keeps its first occurrence. Tags normalizing to the
/// same string merge by maximum count; zero-count tags and tags that
/// normalize to nothing are dropped.
pub fn build_song_records(docs: &[RawSongDoc]) -> (Vec<SongRecord>, IdMaps) {
    let mut ids = IdMaps::default();
    let mut records = Vec::with_capacity(docs.len());
    for doc in docs {
        if ids.songs.contains(&doc.mbid) {
            continue;
        }
        let song_id = ids.songs.assign(&doc.mbid);
        let artist_id = ids.artists.assign(&doc.artist_mbid);
        let album_id = ids.albums.assign(&doc.album_mbid);
        records.push(SongRecord {
            song_id,
            artist_id,
            album_id,
            name_norm: normalize_text(&doc.name),
            artist_norm: normalize_text(&doc.artist_name),
            album_norm: normalize_text(&doc.album_title),
            tags: merge_tags(&doc.tags),
        });
    }
    (records, ids)
}

fn merge_tags(tags: &[(String, u32)]) -> Vec<(String, u32)> {
    let mut merged: Vec<(String, u32)> = Vec::with_capacity(tags.len());
    for (name, count) in tags {
        let count = (*count).min(MAX_TAG_COUNT);
        if count == 0 {
            continue;
        }
        let norm = normalize_text(name);
        if norm.is_empty() {
            continue;
        }
        match merged.iter_mut().find(|(t, _)| *t == norm) {
            Some((_, c)) => *c = (*c).max(count),
            None => merged.push((norm, count)),
        }
    }
    merged
}

/// The set of songs one user listened to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserHistory {
    pub user_id: u32,
    pub song_ids: BTreeSet<u32>,
}

/// Accumulates `(user, song)` rows into deduplicated histories.
#[derive(Debug, Default)]
pub struct HistoryBuilder {
    users: IdAssigner,
    songs: Vec<BTreeSet<u32>>,
}

impl HistoryBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, user_key: &str, song_id: u32) {
        let uid = self.users.assign(user_key) as usize;
        if uid == self.songs.len() {
            self.songs.push(BTreeSet::new());
        }
        self.songs[uid].insert(song_id);
    }

    /// Histories in first-seen user order, user ids assigned sequentially.
    pub fn finish(self) -> (Vec<UserHistory>, IdAssigner) {
        let histories = self
            .songs
            .into_iter()
            .enumerate()
            .map(|(i, song_ids)| UserHistory {
                user_id: i as u32,
                song_ids,
            })
            .collect();
        (histories, self.users)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn doc(mbid: &str, artist: &str, album: &str, tags: &[(&str, u32)]) -> RawSongDoc {
        RawSongDoc {
            name: "Song".into(),
            tags: tags.iter().map(|(t, c)| (t.to_string(), *c)).collect(),
            album_mbid: album.into(),
            artist_name: "Artist".into(),
            mbid: mbid.into(),
            album_title: "Album".into(),
            artist_mbid: artist.into(),
        }
    }

    #[test]
    fn sequential_ids_per_namespace() {
        let docs = vec![doc("s1", "a1", "b1", &[]), doc("s2", "a1", "b2", &[])];
        let (records, ids) = build_song_records(&docs);
        assert_eq!(records[0].song_id, 0);
        assert_eq!(records[1].song_id, 1);
        assert_eq!(records[0].artist_id, records[1].artist_id);
        assert_eq!((records[0].album_id, records[1].album_id), (0, 1));
        assert_eq!(ids.songs.len(), 2);
        assert_eq!(ids.artists.len(), 1);
        assert_eq!(ids.albums.key_of(1), Some("b2"));
    }

    #[test]
    fn duplicate_song_keeps_first() {
        let mut second = doc("s1", "a2", "b2", &[]);
        second.name = "Other".into();
        let (records, ids) = build_song_records(&[doc("s1", "a1", "b1", &[]), second, doc("s3", "a3", "b3", &[])]);
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].name_norm, "song");
        assert_eq!(records[1].song_id, 1);
        // the skipped duplicate does not consume artist ids
        assert_eq!(ids.artists.get("a3"), Some(1));
    }

    #[test]
    fn tags_merge_by_max_and_drop_zero() {
        let (records, _) = build_song_records(&[doc("s", "a", "b", &[("Rock", 50), ("rock", 30), ("pop", 0), ("???", 9)])]);
        assert_eq!(records[0].tags, vec![("rock".to_string(), 50)]);
        let (records, _) = build_song_records(&[doc("s", "a", "b", &[("rock", 30), ("ROCK!", 70), ("Jazz", 250)])]);
        assert_eq!(records[0].tags, vec![("rock".to_string(), 70), ("jazz".to_string(), 100)]);
    }

    #[test]
    fn histories_dedup_and_group() {
        let mut b = HistoryBuilder::new();
        b.add("u1", 0);
        b.add("u1", 1);
        b.add("u2", 0);
        b.add("u1", 0);
        let (h, users) = b.finish();
        assert_eq!(h.len(), 2);
        assert_eq!(h[0].song_ids.iter().copied().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(h[1].song_ids.iter().copied().collect::<Vec<_>>(), vec![0]);
        assert_eq!(users.get("u2"), Some(1));
    }
}
