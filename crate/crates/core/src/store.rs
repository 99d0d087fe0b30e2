//! File-backed template repository and append-only audit log.
//!
//! Layout under the root directory: one `<user_id>.biot` file per user and a
//! single `audit.log`. Template files use the `TemplateFileV1` layout (all
//! integers little-endian):
//!
//! ```text
//! "BIOT" | 0x01 | u16 id_len | id bytes | u64 enrolled_at (unix seconds)
//! | u32 n | bits (ceil(n/8) bytes, LSB-first) | mask (likewise)
//! | u16 count | count x (u16 x, u16 y, u16 angle/65536 turn, u8 kind)
//! | u32 CRC-32 of everything before it
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, TimeZone, Utc};
use thiserror::Error;

use crate::bits::BitArray;
use crate::fingerprint::{FingerTemplate, Minutia, MinutiaKind};
use crate::iris::IrisCode;

pub const MAGIC: &[u8; 4] = b"BIOT";
pub const VERSION: u8 = 0x01;
pub const TEMPLATE_EXT: &str = "biot";
pub const AUDIT_FILE: &str = "audit.log";
pub const MAX_USER_ID_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct UserRecord {
    pub user_id: String,
    pub iris: IrisCode,
    pub finger: FingerTemplate,
    /// Whole seconds; finer precision is not persisted.
    pub enrolled_at: DateTime<Utc>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("file too short ({0} bytes)")]
    TooShort(usize),
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("declared lengths overrun the file")]
    Truncated,
    #[error("{0} unexpected trailing bytes")]
    TrailingBytes(usize),
    #[error("user id is not valid UTF-8")]
    Utf8,
    #[error("invalid user id {0:?}")]
    UserId(String),
    #[error("iris bit length {0} is not a whole number of 8-row code columns")]
    BitLength(u32),
    #[error("nonzero padding bits")]
    Padding,
    #[error("unknown minutia kind {0}")]
    Kind(u8),
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("user {0:?} not found")]
    NotFound(String),
    #[error("user {0:?} already enrolled")]
    DuplicateUser(String),
    #[error("corrupt template for {user:?}: {reason}")]
    CorruptTemplate { user: String, reason: FormatError },
    #[error("invalid user id {0:?}: expected 1-64 characters from [A-Za-z0-9_-]")]
    InvalidUserId(String),
    #[error("record cannot be stored: {0}")]
    InvalidRecord(String),
    #[error("audit line must not contain a newline")]
    InvalidAuditLine,
    #[error("storage error ({context}): {source}")]
    Storage {
        context: String,
        #[source]
        source: io::Error,
    },
}

fn storage(context: impl Into<String>) -> impl FnOnce(io::Error) -> StoreError {
    let context = context.into();
    move |source| StoreError::Storage { context, source }
}

pub fn validate_user_id(id: &str) -> Result<(), StoreError> {
    let ok = !id.is_empty()
        && id.len() <= MAX_USER_ID_LEN
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-');
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidUserId(id.to_string()))
    }
}

// --- TemplateFileV1 ----------------------------------------------------------

pub fn encode_record(rec: &UserRecord) -> Result<Vec<u8>, StoreError> {
    validate_user_id(&rec.user_id)?;
    if rec.iris.rows() != IrisCode::DEFAULT_ROWS {
        return Err(StoreError::InvalidRecord(format!(
            "iris code has {} rows, the file format assumes {}",
            rec.iris.rows(),
            IrisCode::DEFAULT_ROWS
        )));
    }
    let n = u32::try_from(rec.iris.len()).map_err(|_| StoreError::InvalidRecord("iris code too long".into()))?;
    let count = u16::try_from(rec.finger.len()).map_err(|_| StoreError::InvalidRecord("too many minutiae".into()))?;
    let secs = u64::try_from(rec.enrolled_at.timestamp())
        .map_err(|_| StoreError::InvalidRecord("enrollment time before 1970".into()))?;

    let mut out = Vec::with_capacity(64 + rec.iris.len() / 4 + rec.finger.len() * 7);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(rec.user_id.len() as u16).to_le_bytes());
    out.extend_from_slice(rec.user_id.as_bytes());
    out.extend_from_slice(&secs.to_le_bytes());
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&rec.iris.bits().to_bytes_lsb());
    out.extend_from_slice(&rec.iris.mask().to_bytes_lsb());
    out.extend_from_slice(&count.to_le_bytes());
    for m in &rec.finger.minutiae {
        out.extend_from_slice(&m.x.to_le_bytes());
        out.extend_from_slice(&m.y.to_le_bytes());
        out.extend_from_slice(&m.angle_units().to_le_bytes());
        out.push(match m.kind {
            MinutiaKind::Ending => 0,
            MinutiaKind::Bifurcation => 1,
        });
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(FormatError::Truncated)?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_record(bytes: &[u8]) -> Result<UserRecord, FormatError> {
    if bytes.len() < MAGIC.len() + 1 + 4 {
        return Err(FormatError::TooShort(bytes.len()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if &body[..4] != MAGIC {
        return Err(FormatError::BadMagic);
    }
    if body[4] != VERSION {
        return Err(FormatError::BadVersion(body[4]));
    }
    if stored != computed {
        return Err(FormatError::Checksum { stored, computed });
    }

    let mut r = Reader { buf: body, pos: 5 };
    let id_len = r.u16()? as usize;
    let user_id = std::str::from_utf8(r.take(id_len)?).map_err(|_| FormatError::Utf8)?.to_string();
    if validate_user_id(&user_id).is_err() {
        return Err(FormatError::UserId(user_id));
    }
    let secs = r.u64()?;
    let enrolled_at = i64::try_from(secs)
        .ok()
        .and_then(|s| Utc.timestamp_opt(s, 0).single())
        .ok_or(FormatError::Truncated)?;

    let n = r.u32()?;
    let per_col = (IrisCode::DEFAULT_ROWS * IrisCode::BITS_PER_CELL) as u32;
    if n % per_col != 0 {
        return Err(FormatError::BitLength(n));
    }
    let nbytes = (n as usize).div_ceil(8);
    let bits = BitArray::from_bytes_lsb(r.take(nbytes)?, n as usize).ok_or(FormatError::Padding)?;
    let mask = BitArray::from_bytes_lsb(r.take(nbytes)?, n as usize).ok_or(FormatError::Padding)?;
    let iris = IrisCode::new(IrisCode::DEFAULT_ROWS, (n / per_col) as usize, bits, mask)
        .ok_or(FormatError::BitLength(n))?;

    let count = r.u16()? as usize;
    let mut minutiae = Vec::with_capacity(count);
    for _ in 0..count {
        let (x, y, angle) = (r.u16()?, r.u16()?, r.u16()?);
        let kind = match r.u8()? {
            0 => MinutiaKind::Ending,
            1 => MinutiaKind::Bifurcation,
            k => return Err(FormatError::Kind(k)),
        };
        minutiae.push(Minutia::from_units(x, y, angle, kind));
    }
    if r.pos != body.len() {
        return Err(FormatError::TrailingBytes(body.len() - r.pos));
    }
    Ok(UserRecord {
        user_id,
        iris,
        finger: FingerTemplate::new(minutiae),
        enrolled_at,
    })
}

// --- repository --------------------------------------------------------------

/// Simulated crash points inside [`Repository::put_record`], for tests.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrashPoint {
    /// Stop after writing this many bytes of the temporary file.
    PartialWrite(usize),
    /// Stop after the temporary file is complete, before the rename.
    BeforeRename,
}

/// One entry of [`Repository::list_users`].
#[derive(Debug)]
pub struct ListedUser {
    pub user_id: String,
    /// Set when the file exists but does not decode.
    pub error: Option<StoreError>,
}

#[derive(Debug)]
pub struct Repository {
    root: PathBuf,
    /// Enrollment is exclusive within a process; reads share.
    lock: RwLock<()>,
    crash: Mutex<Option<CrashPoint>>,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl Repository {
    /// Opens `root`, creating the directory if needed.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, StoreError> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root).map_err(storage(format!("creating {}", root.display())))?;
        Ok(Self {
            root,
            lock: RwLock::new(()),
            crash: Mutex::new(None),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn template_path(&self, user_id: &str) -> Result<PathBuf, StoreError> {
        validate_user_id(user_id)?;
        Ok(self.root.join(format!("{user_id}.{TEMPLATE_EXT}")))
    }

    pub fn audit_path(&self) -> PathBuf {
        self.root.join(AUDIT_FILE)
    }

    #[doc(hidden)]
    pub fn inject_crash(&self, point: Option<CrashPoint>) {
        *self.crash.lock().unwrap_or_else(|e| e.into_inner()) = point;
    }

    /// Writes the record through a temporary file and an atomic rename.
    pub fn put_record(&self, rec: &UserRecord, overwrite: bool) -> Result<(), StoreError> {
        let bytes = encode_record(rec)?;
        let path = self.template_path(&rec.user_id)?;
        let _guard = self.lock.write().unwrap_or_else(|e| e.into_inner());
        if !overwrite && path.exists() {
            return Err(StoreError::DuplicateUser(rec.user_id.clone()));
        }
        let tmp = self.root.join(format!(
            ".{}.tmp-{}-{}",
            rec.user_id,
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let crash = *self.crash.lock().unwrap_or_else(|e| e.into_inner());
        let crashed = || StoreError::Storage {
            context: format!("writing {}", tmp.display()),
            source: io::Error::other("injected crash"),
        };

        let mut f = File::create(&tmp).map_err(storage(format!("creating {}", tmp.display())))?;
        if let Some(CrashPoint::PartialWrite(k)) = crash {
            let _ = f.write_all(&bytes[..k.min(bytes.len())]);
            return Err(crashed());
        }
        let written = f.write_all(&bytes).and_then(|_| f.sync_all());
        drop(f);
        if let Err(e) = written {
            let _ = fs::remove_file(&tmp);
            return Err(storage(format!("writing {}", tmp.display()))(e));
        }
        if crash == Some(CrashPoint::BeforeRename) {
            return Err(crashed());
        }
        fs::rename(&tmp, &path).map_err(|e| {
            let _ = fs::remove_file(&tmp);
            storage(format!("renaming onto {}", path.display()))(e)
        })
    }

    pub fn get_record(&self, user_id: &str) -> Result<UserRecord, StoreError> {
        let path = self.template_path(user_id)?;
        let _guard = self.lock.read().unwrap_or_else(|e| e.into_inner());
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::NotFound(user_id.to_string())),
            Err(e) => return Err(storage(format!("reading {}", path.display()))(e)),
        };
        let corrupt = |reason| StoreError::CorruptTemplate {
            user: user_id.to_string(),
            reason,
        };
        let rec = decode_record(&bytes).map_err(corrupt)?;
        if rec.user_id != user_id {
            return Err(corrupt(FormatError::UserId(rec.user_id)));
        }
        Ok(rec)
    }

    pub fn contains(&self, user_id: &str) -> Result<bool, StoreError> {
        Ok(self.template_path(user_id)?.exists())
    }

    /// Every template file, sorted by user id, each decoded to check it.
    /// Temporary files and names that are not valid ids are skipped.
    pub fn list_users(&self) -> Result<Vec<ListedUser>, StoreError> {
        let mut ids = Vec::new();
        let entries = fs::read_dir(&self.root).map_err(storage(format!("listing {}", self.root.display())))?;
        for entry in entries {
            let entry = entry.map_err(storage(format!("listing {}", self.root.display())))?;
            let name = entry.file_name();
            let Some(name) = name.to_str() else { continue };
            let Some(id) = name.strip_suffix(&format!(".{TEMPLATE_EXT}")) else { continue };
            if validate_user_id(id).is_ok() && entry.file_type().is_ok_and(|t| t.is_file()) {
                ids.push(id.to_string());
            }
        }
        ids.sort();
        Ok(ids
            .into_iter()
            .map(|user_id| {
                let error = self.get_record(&user_id).err();
                ListedUser { user_id, error }
            })
            .collect())
    }

    /// All decodable records, sorted by user id.
    pub fn records(&self) -> Result<Vec<UserRecord>, StoreError> {
        let mut out = Vec::new();
        for u in self.list_users()? {
            if u.error.is_none() {
                out.push(self.get_record(&u.user_id)?);
            }
        }
        Ok(out)
    }

    /// Appends `line` plus a newline in a single append-mode write.
    pub fn append_audit(&self, line: &str) -> Result<(), StoreError> {
        if line.contains('\n') {
            return Err(StoreError::InvalidAuditLine);
        }
        let path = self.audit_path();
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(storage(format!("opening {}", path.display())))?;
        let mut buf = Vec::with_capacity(line.len() + 1);
        buf.extend_from_slice(line.as_bytes());
        buf.push(b'\n');
        f.write_all(&buf).map_err(storage(format!("appending to {}", path.display())))
    }

    /// Audit lines without their newlines; empty if the log does not exist.
    pub fn read_audit(&self) -> Result<Vec<String>, StoreError> {
        let path = self.audit_path();
        match fs::read_to_string(&path) {
            Ok(s) => Ok(s.lines().map(str::to_string).collect()),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(storage(format!("reading {}", path.display()))(e)),
        }
    }
}
