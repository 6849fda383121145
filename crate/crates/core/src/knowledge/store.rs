//! SQLite-backed label store. Seed labels, raw votes and finalized community
//! labels live in separate tables; writes go through one connection lock.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use rusqlite::{params, Connection, OptionalExtension, Row, ToSql, Transaction};

use super::seed::{prefer, read_seed, ImportSummary, SeedRow, SEED_HEADER};
use super::{
    finalize_check, KbSnapshot, KnowledgeError, KnownLabel, LabelSource, Vote, VoteLedger,
};
use crate::key::{Endpoint, PairKey};
use crate::outcome::LabelType;
use crate::pairs_csv::CsvError;

const KEY_COLS: &str = "f1, n1, s1, e1, f2, n2, s2, e2";
const KEY_MATCH: &str =
    "f1 = ?1 AND n1 = ?2 AND s1 = ?3 AND e1 = ?4 AND f2 = ?5 AND n2 = ?6 AND s2 = ?7 AND e2 = ?8";

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS judges (id TEXT PRIMARY KEY);
CREATE TABLE IF NOT EXISTS seed_labels (
    f1 TEXT NOT NULL, n1 TEXT NOT NULL, s1 INTEGER NOT NULL, e1 INTEGER NOT NULL,
    f2 TEXT NOT NULL, n2 TEXT NOT NULL, s2 INTEGER NOT NULL, e2 INTEGER NOT NULL,
    is_clone INTEGER NOT NULL, clone_type TEXT, similarity REAL,
    PRIMARY KEY (f1, n1, s1, e1, f2, n2, s2, e2)
);
CREATE TABLE IF NOT EXISTS votes (
    f1 TEXT NOT NULL, n1 TEXT NOT NULL, s1 INTEGER NOT NULL, e1 INTEGER NOT NULL,
    f2 TEXT NOT NULL, n2 TEXT NOT NULL, s2 INTEGER NOT NULL, e2 INTEGER NOT NULL,
    judge_id TEXT NOT NULL, is_clone INTEGER NOT NULL, clone_type TEXT, comment TEXT,
    ts INTEGER NOT NULL,
    PRIMARY KEY (f1, n1, s1, e1, f2, n2, s2, e2, judge_id)
);
CREATE TABLE IF NOT EXISTS community_labels (
    f1 TEXT NOT NULL, n1 TEXT NOT NULL, s1 INTEGER NOT NULL, e1 INTEGER NOT NULL,
    f2 TEXT NOT NULL, n2 TEXT NOT NULL, s2 INTEGER NOT NULL, e2 INTEGER NOT NULL,
    is_clone INTEGER NOT NULL, clone_type TEXT, vote_count INTEGER NOT NULL, agreement REAL NOT NULL,
    PRIMARY KEY (f1, n1, s1, e1, f2, n2, s2, e2)
);
";

pub struct KnowledgeStore {
    conn: Mutex<Connection>,
}

struct KeyParams {
    text: [String; 4],
    nums: [i64; 4],
}

impl KeyParams {
    fn new(k: &PairKey) -> Self {
        let (a, b) = (k.first(), k.second());
        Self {
            text: [
                a.folder.clone(),
                a.file.clone(),
                b.folder.clone(),
                b.file.clone(),
            ],
            nums: [
                a.start_line as i64,
                a.end_line as i64,
                b.start_line as i64,
                b.end_line as i64,
            ],
        }
    }

    fn refs(&self) -> [&dyn ToSql; 8] {
        [
            &self.text[0],
            &self.text[1],
            &self.nums[0],
            &self.nums[1],
            &self.text[2],
            &self.text[3],
            &self.nums[2],
            &self.nums[3],
        ]
    }
}

fn key_from_row(row: &Row<'_>) -> rusqlite::Result<PairKey> {
    let ep = |o: usize| -> rusqlite::Result<Endpoint> {
        Ok(Endpoint::new(
            row.get::<_, String>(o)?,
            row.get::<_, String>(o + 1)?,
            row.get::<_, i64>(o + 2)? as usize,
            row.get::<_, i64>(o + 3)? as usize,
        ))
    };
    Ok(PairKey::new(ep(0)?, ep(4)?))
}

fn parse_type(s: Option<String>) -> Option<LabelType> {
    s.and_then(|t| t.parse().ok())
}

fn seed_from_row(row: &Row<'_>) -> rusqlite::Result<KnownLabel> {
    Ok(KnownLabel {
        key: key_from_row(row)?,
        is_clone: row.get(8)?,
        clone_type: parse_type(row.get(9)?),
        similarity: row.get(10)?,
        source: LabelSource::SeedImport,
        vote_count: 0,
        agreement_ratio: 1.0,
    })
}

fn community_from_row(row: &Row<'_>) -> rusqlite::Result<KnownLabel> {
    Ok(KnownLabel {
        key: key_from_row(row)?,
        is_clone: row.get(8)?,
        clone_type: parse_type(row.get(9)?),
        similarity: None,
        source: LabelSource::CommunityFinal,
        vote_count: row.get::<_, i64>(10)? as usize,
        agreement_ratio: row.get(11)?,
    })
}

impl KnowledgeStore {
    pub fn open(path: &Path) -> Result<Self, KnowledgeError> {
        let conn = Connection::open(path)?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        conn.pragma_update(None, "synchronous", "NORMAL")?;
        Self::init(conn)
    }

    pub fn open_in_memory() -> Result<Self, KnowledgeError> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Self, KnowledgeError> {
        conn.execute_batch(SCHEMA)?;
        Ok(Self {
            conn: Mutex::new(conn),
        })
    }

    fn conn(&self) -> std::sync::MutexGuard<'_, Connection> {
        self.conn.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn register_judge(&self, judge_id: &str) -> Result<(), KnowledgeError> {
        self.conn().execute(
            "INSERT OR IGNORE INTO judges (id) VALUES (?1)",
            params![judge_id],
        )?;
        Ok(())
    }

    pub fn is_judge(&self, judge_id: &str) -> Result<bool, KnowledgeError> {
        Ok(self
            .conn()
            .query_row(
                "SELECT 1 FROM judges WHERE id = ?1",
                params![judge_id],
                |_| Ok(()),
            )
            .optional()?
            .is_some())
    }

    /// Upserts the judge's vote and re-evaluates finality. Returns the ledger
    /// and the final label, if any.
    pub fn record_judgment(
        &self,
        key: &PairKey,
        judge_id: &str,
        is_clone: bool,
        clone_type: Option<LabelType>,
        comment: Option<&str>,
    ) -> Result<(VoteLedger, Option<KnownLabel>), KnowledgeError> {
        if clone_type == Some(LabelType::T1) {
            return Err(KnowledgeError::IllegalCloneType(LabelType::T1));
        }
        let mut conn = self.conn();
        let tx = conn.transaction()?;
        let known = tx
            .query_row(
                "SELECT 1 FROM judges WHERE id = ?1",
                params![judge_id],
                |_| Ok(()),
            )
            .optional()?
            .is_some();
        if !known {
            return Err(KnowledgeError::UnknownJudge(judge_id.to_string()));
        }
        let kp = KeyParams::new(key);
        let k = kp.refs();
        let ts = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs() as i64)
            .unwrap_or(0);
        let ty = clone_type.map(|t| t.to_string());
        tx.execute(
            &format!(
                "INSERT OR REPLACE INTO votes ({KEY_COLS}, judge_id, is_clone, clone_type, comment, ts)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11, ?12, ?13)"
            ),
            [&k[..], &[&judge_id as &dyn ToSql, &is_clone, &ty, &comment, &ts]].concat().as_slice(),
        )?;
        let ledger = load_ledger(&tx, &kp)?;
        let label = finalize_check(key, &ledger);
        match &label {
            Some(l) => {
                let ty = l.clone_type.map(|t| t.to_string());
                let n = l.vote_count as i64;
                tx.execute(
                    &format!(
                        "INSERT OR REPLACE INTO community_labels ({KEY_COLS}, is_clone, clone_type, vote_count, agreement)
                         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11, ?12)"
                    ),
                    [&k[..], &[&l.is_clone as &dyn ToSql, &ty, &n, &l.agreement_ratio]].concat().as_slice(),
                )?;
            }
            None => {
                tx.execute(
                    &format!("DELETE FROM community_labels WHERE {KEY_MATCH}"),
                    &k[..],
                )?;
            }
        }
        tx.commit()?;
        Ok((ledger, label))
    }

    pub fn ledger(&self, key: &PairKey) -> Result<VoteLedger, KnowledgeError> {
        let mut conn = self.conn();
        let tx = conn.transaction()?;
        let l = load_ledger(&tx, &KeyParams::new(key))?;
        tx.commit()?;
        Ok(l)
    }

    /// The final label for `key`: a community label if one exists, else a seed label.
    pub fn lookup(&self, key: &PairKey) -> Result<Option<KnownLabel>, KnowledgeError> {
        let conn = self.conn();
        let kp = KeyParams::new(key);
        let k = kp.refs();
        let community = conn
            .query_row(
                &format!("SELECT {KEY_COLS}, is_clone, clone_type, vote_count, agreement FROM community_labels WHERE {KEY_MATCH}"),
                &k[..],
                community_from_row,
            )
            .optional()?;
        if community.is_some() {
            return Ok(community);
        }
        Ok(conn
            .query_row(
                &format!("SELECT {KEY_COLS}, is_clone, clone_type, similarity FROM seed_labels WHERE {KEY_MATCH}"),
                &k[..],
                seed_from_row,
            )
            .optional()?)
    }

    /// Adds seed rows; an existing row for the same key is replaced only by a
    /// row with a higher similarity. Returns how many rows were written.
    pub fn add_seed_rows(&self, rows: &[SeedRow]) -> Result<usize, KnowledgeError> {
        let mut conn = self.conn();
        let tx = conn.transaction()?;
        let mut written = 0;
        for row in rows {
            let kp = KeyParams::new(&row.key);
            let k = kp.refs();
            let existing = tx
                .query_row(
                    &format!("SELECT {KEY_COLS}, is_clone, clone_type, similarity FROM seed_labels WHERE {KEY_MATCH}"),
                    &k[..],
                    seed_from_row,
                )
                .optional()?;
            let replace = match existing {
                None => true,
                Some(old) => prefer(
                    row,
                    &SeedRow {
                        key: old.key,
                        is_clone: old.is_clone,
                        clone_type: old.clone_type,
                        similarity: old.similarity,
                    },
                ),
            };
            if replace {
                let ty = row.clone_type.map(|t| t.to_string());
                tx.execute(
                    &format!(
                        "INSERT OR REPLACE INTO seed_labels ({KEY_COLS}, is_clone, clone_type, similarity)
                         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11)"
                    ),
                    [&k[..], &[&row.is_clone as &dyn ToSql, &ty, &row.similarity]].concat().as_slice(),
                )?;
                written += 1;
            }
        }
        tx.commit()?;
        Ok(written)
    }

    /// Imports a seed file. Malformed rows are skipped and listed in the summary.
    pub fn import_seed<R: Read>(&self, r: R) -> Result<ImportSummary, KnowledgeError> {
        let (rows, mut summary) = read_seed(r)?;
        summary.imported = self.add_seed_rows(&rows)?;
        Ok(summary)
    }

    /// Every final label, community labels shadowing seed labels.
    pub fn labels(&self) -> Result<Vec<KnownLabel>, KnowledgeError> {
        let conn = self.conn();
        let mut out = std::collections::BTreeMap::new();
        let mut stmt = conn.prepare(&format!(
            "SELECT {KEY_COLS}, is_clone, clone_type, similarity FROM seed_labels"
        ))?;
        for l in stmt.query_map([], seed_from_row)? {
            let l = l?;
            out.insert(l.key.clone(), l);
        }
        let mut stmt = conn.prepare(&format!(
            "SELECT {KEY_COLS}, is_clone, clone_type, vote_count, agreement FROM community_labels"
        ))?;
        for l in stmt.query_map([], community_from_row)? {
            let l = l?;
            out.insert(l.key.clone(), l);
        }
        Ok(out.into_values().collect())
    }

    pub fn snapshot(&self) -> Result<KbSnapshot, KnowledgeError> {
        Ok(KbSnapshot::new(self.labels()?))
    }

    /// Writes every final label as CSV: the seed columns plus `source`,
    /// `vote_count` and `agreement`.
    pub fn export_labels<W: Write>(&self, w: W) -> Result<(), KnowledgeError> {
        let mut wtr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| KnowledgeError::Csv(CsvError::Io(std::io::Error::other(e)));
        let mut header: Vec<&str> = SEED_HEADER.to_vec();
        header.extend(["source", "vote_count", "agreement"]);
        wtr.write_record(&header).map_err(io)?;
        for l in self.labels()? {
            let mut rec: Vec<String> = l.key.to_fields().to_vec();
            rec.push(l.is_clone.to_string());
            rec.push(l.clone_type.map(|t| t.to_string()).unwrap_or_default());
            rec.push(l.similarity.map(|s| s.to_string()).unwrap_or_default());
            rec.push(
                match l.source {
                    LabelSource::SeedImport => "seed_import",
                    LabelSource::CommunityFinal => "community_final",
                }
                .into(),
            );
            let community = l.source == LabelSource::CommunityFinal;
            rec.push(if community {
                l.vote_count.to_string()
            } else {
                String::new()
            });
            rec.push(if community {
                l.agreement_ratio.to_string()
            } else {
                String::new()
            });
            wtr.write_record(&rec).map_err(io)?;
        }
        wtr.flush()
            .map_err(|e| KnowledgeError::Csv(CsvError::Io(e)))?;
        Ok(())
    }
}

fn load_ledger(tx: &Transaction<'_>, kp: &KeyParams) -> Result<VoteLedger, KnowledgeError> {
    let mut stmt = tx.prepare(&format!(
        "SELECT judge_id, is_clone, clone_type, comment, ts FROM votes WHERE {KEY_MATCH}"
    ))?;
    let mut ledger = VoteLedger::new();
    let rows = stmt.query_map(&kp.refs()[..], |r| {
        Ok(Vote {
            judge_id: r.get(0)?,
            is_clone: r.get(1)?,
            clone_type: parse_type(r.get(2)?),
            comment: r.get(3)?,
            timestamp: r.get(4)?,
        })
    })?;
    for v in rows {
        ledger.upsert(v?)?;
    }
    Ok(ledger)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(i: usize) -> PairKey {
        PairKey::new(
            Endpoint::new("d", "A.java", i, i + 5),
            Endpoint::new("e", "B.java", 1, 9),
        )
    }

    fn store_with_judges(n: usize) -> KnowledgeStore {
        let s = KnowledgeStore::open_in_memory().unwrap();
        for i in 0..n {
            s.register_judge(&format!("j{i}")).unwrap();
        }
        s
    }

    #[test]
    fn votes_finalize_and_unfinalize() {
        let s = store_with_judges(10);
        let k = key(1);
        let (l, f) = s.record_judgment(&k, "j0", true, None, None).unwrap();
        assert_eq!(l.len(), 1);
        assert!(f.is_none());
        for i in 1..10 {
            s.record_judgment(&k, &format!("j{i}"), i < 7, Some(LabelType::T2), None)
                .unwrap();
        }
        let label = s.lookup(&k).unwrap().unwrap();
        assert_eq!(label.source, LabelSource::CommunityFinal);
        assert!(label.is_clone);
        assert_eq!(label.vote_count, 10);
        // j6 changes their mind: 6-4, no longer final.
        let (l, f) = s
            .record_judgment(&k, "j6", false, None, Some("changed"))
            .unwrap();
        assert_eq!(l.len(), 10);
        assert!(f.is_none());
        assert!(s.lookup(&k).unwrap().is_none());
    }

    #[test]
    fn unknown_judge_and_type_one() {
        let s = store_with_judges(1);
        assert!(matches!(
            s.record_judgment(&key(1), "ghost", true, None, None),
            Err(KnowledgeError::UnknownJudge(_))
        ));
        assert!(matches!(
            s.record_judgment(&key(1), "j0", true, Some(LabelType::T1), None),
            Err(KnowledgeError::IllegalCloneType(LabelType::T1))
        ));
        assert!(s.ledger(&key(1)).unwrap().is_empty());
    }

    #[test]
    fn seed_import_and_lookup() {
        let s = KnowledgeStore::open_in_memory().unwrap();
        let body = "d,A.java,1,6,e,B.java,1,9,true,T2,\n\
                    d,A.java,2,7,e,B.java,1,9,true,T3,0.95\n\
                    d,A.java,3,8,e,B.java,1,9,true,T3,0.60\n";
        let summary = s.import_seed(body.as_bytes()).unwrap();
        assert_eq!(summary.imported, 3);
        assert!(s.lookup(&key(1)).unwrap().unwrap().is_trusted(0.7));
        assert!(s.lookup(&key(2)).unwrap().unwrap().is_trusted(0.7));
        let low = s.lookup(&key(3)).unwrap().unwrap();
        assert!(!low.is_trusted(0.7));
        assert!(s.lookup(&key(99)).unwrap().is_none());

        // A lower-similarity duplicate does not replace the stored row.
        let n = s
            .import_seed("d,A.java,2,7,e,B.java,1,9,false,T3,0.5\n".as_bytes())
            .unwrap();
        assert_eq!(n.imported, 0);
        assert!(s.lookup(&key(2)).unwrap().unwrap().is_clone);
    }

    #[test]
    fn export_round_trips_through_seed_reader() {
        let s = KnowledgeStore::open_in_memory().unwrap();
        s.import_seed("d,A.java,2,7,e,B.java,1,9,true,T3,0.95\n".as_bytes())
            .unwrap();
        let mut buf = Vec::new();
        s.export_labels(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("folder_1,"));
        assert!(text.contains("seed_import"));
    }

    #[test]
    fn file_store_persists() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kb.sqlite");
        {
            let s = KnowledgeStore::open(&path).unwrap();
            s.register_judge("j0").unwrap();
            s.record_judgment(&key(1), "j0", true, None, None).unwrap();
        }
        let s = KnowledgeStore::open(&path).unwrap();
        assert!(s.is_judge("j0").unwrap());
        assert_eq!(s.ledger(&key(1)).unwrap().len(), 1);
    }

    #[test]
    fn snapshot_is_detached() {
        let s = store_with_judges(10);
        let snap = s.snapshot().unwrap();
        for i in 0..10 {
            s.record_judgment(&key(4), &format!("j{i}"), true, None, None)
                .unwrap();
        }
        assert!(snap.lookup(&key(4)).is_none());
        assert!(s.snapshot().unwrap().lookup(&key(4)).is_some());
    }
}
