//! Enrollment and the two-stage authentication session.
//!
//! A session captures and matches the first modality, and only if its score
//! reaches that modality's threshold captures and matches the second. Access
//! is granted only when both stages pass. Every session ends with a terminal
//! display message and exactly one audit line:
//!
//! ```text
//! <UTC timestamp>\t<claim or *>\t<stage 1>\t<stage 2>\t<GRANT|DENY>\t<reason>
//! ```
//!
//! where a stage is `modality:score:P|F` (score to 4 decimals) or `-`.
//!
//! Capture devices, the clock, the display and the buzzer are all traits so
//! sessions run deterministically in tests.

use std::fmt;
use std::sync::Mutex;
use std::time::Duration;

use chrono::{DateTime, SubsecRound, Utc};
use thiserror::Error;

use crate::fingerprint::{FingerTemplate, DEFAULT_MSSA_FINGER};
use crate::imaging::GrayImage;
use crate::iris::{IrisCode, IrisError};
use crate::matching::{Decision, DEFAULT_MSSA_IRIS};
use crate::pipeline::PipelineConfig;
use crate::store::{validate_user_id, Repository, StoreError, UserRecord};

pub const ACCESS_GRANTED: &str = "Access Granted";
pub const ACCESS_DENIED: &str = "Access Denied";
pub const MIN_ENROLL_MINUTIAE: usize = 4;
pub const MIN_ENROLL_IRIS_BITS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    Finger,
    Iris,
}

impl Modality {
    pub fn as_str(&self) -> &'static str {
        match self {
            Modality::Finger => "finger",
            Modality::Iris => "iris",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StageOrder {
    #[default]
    FingerFirst,
    IrisFirst,
}

impl StageOrder {
    pub fn stages(&self) -> [Modality; 2] {
        match self {
            StageOrder::FingerFirst => [Modality::Finger, Modality::Iris],
            StageOrder::IrisFirst => [Modality::Iris, Modality::Finger],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AuthMode {
    /// Match against the claimed user only.
    #[default]
    Verification,
    /// No claim; the best-scoring enrolled user on stage 1 is the candidate.
    Identification,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuthConfig {
    pub mssa_finger: f64,
    pub mssa_iris: f64,
    pub order: StageOrder,
    pub capture_timeout: Duration,
    pub mode: AuthMode,
}

impl Default for AuthConfig {
    fn default() -> Self {
        Self {
            mssa_finger: DEFAULT_MSSA_FINGER,
            mssa_iris: DEFAULT_MSSA_IRIS,
            order: StageOrder::FingerFirst,
            capture_timeout: Duration::from_secs(10),
            mode: AuthMode::Verification,
        }
    }
}

impl AuthConfig {
    pub fn mssa(&self, m: Modality) -> f64 {
        match m {
            Modality::Finger => self.mssa_finger,
            Modality::Iris => self.mssa_iris,
        }
    }

    pub fn validate(&self) -> Result<(), AuthError> {
        for (name, v) in [("mssa_finger", self.mssa_finger), ("mssa_iris", self.mssa_iris)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(AuthError::InvalidConfig(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if self.capture_timeout.is_zero() {
            return Err(AuthError::InvalidConfig("capture timeout must be positive".into()));
        }
        Ok(())
    }
}

// --- ports ---------------------------------------------------------------

pub trait Clock {
    fn now(&self) -> DateTime<Utc>;
    fn sleep(&self, d: Duration);
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d)
    }
}

/// Clock that only moves when slept on.
pub struct SimulatedClock {
    now: Mutex<DateTime<Utc>>,
}

impl SimulatedClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        Self { now: Mutex::new(start) }
    }

    pub fn advance(&self, d: Duration) {
        let mut now = self.now.lock().unwrap_or_else(|e| e.into_inner());
        *now += chrono::Duration::from_std(d).expect("duration fits");
    }
}

impl Clock for SimulatedClock {
    fn now(&self) -> DateTime<Utc> {
        *self.now.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn sleep(&self, d: Duration) {
        self.advance(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tone {
    Warning,
}

/// Display and buzzer.
pub trait DevicePorts {
    fn display(&mut self, text: &str);
    fn buzz(&mut self, tone: Tone);
}

pub struct NullPorts;

impl DevicePorts for NullPorts {
    fn display(&mut self, _text: &str) {}
    fn buzz(&mut self, _tone: Tone) {}
}

/// Supplies live captures. `None` means the sensor never delivers.
pub trait ImageSource {
    /// The image and how long after the request it becomes available.
    fn capture(&mut self, modality: Modality) -> Option<(Duration, GrayImage)>;
}

/// Both images available immediately.
pub struct StaticImages {
    pub finger: GrayImage,
    pub eye: GrayImage,
}

impl ImageSource for StaticImages {
    fn capture(&mut self, modality: Modality) -> Option<(Duration, GrayImage)> {
        let img = match modality {
            Modality::Finger => &self.finger,
            Modality::Iris => &self.eye,
        };
        Some((Duration::ZERO, img.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PortEventKind {
    Display(String),
    Buzz(Tone),
    TimeoutExpired(Modality),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortEvent {
    pub kind: PortEventKind,
    pub at: DateTime<Utc>,
}

struct EventLog<'a> {
    clock: &'a dyn Clock,
    ports: &'a mut dyn DevicePorts,
    events: Vec<PortEvent>,
}

impl EventLog<'_> {
    fn push(&mut self, kind: PortEventKind) {
        match &kind {
            PortEventKind::Display(t) => self.ports.display(t),
            PortEventKind::Buzz(t) => self.ports.buzz(*t),
            PortEventKind::TimeoutExpired(_) => {}
        }
        self.events.push(PortEvent {
            kind,
            at: self.clock.now(),
        });
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CaptureWait {
    Captured(GrayImage),
    TimedOut,
}

/// Waits up to `timeout` for the source. On expiry emits a warning buzz and
/// then `TimeoutExpired(modality)`, and returns those two events.
pub fn simulate_capture_wait(
    source: &mut dyn ImageSource,
    modality: Modality,
    timeout: Duration,
    clock: &dyn Clock,
    ports: &mut dyn DevicePorts,
) -> (CaptureWait, Vec<PortEvent>) {
    let mut log = EventLog {
        clock,
        ports,
        events: Vec::new(),
    };
    let wait = capture_into(source, modality, timeout, &mut log);
    (wait, log.events)
}

fn capture_into(source: &mut dyn ImageSource, modality: Modality, timeout: Duration, log: &mut EventLog) -> CaptureWait {
    match source.capture(modality) {
        Some((delay, img)) if delay < timeout => {
            log.clock.sleep(delay);
            CaptureWait::Captured(img)
        }
        _ => {
            log.clock.sleep(timeout);
            log.push(PortEventKind::Buzz(Tone::Warning));
            log.push(PortEventKind::TimeoutExpired(modality));
            CaptureWait::TimedOut
        }
    }
}

// --- matching ------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum LiveTemplate {
    Finger(FingerTemplate),
    Iris(IrisCode),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CaptureError {
    #[error("segmentation failed: {0}")]
    Segmentation(#[from] IrisError),
    #[error("{0}")]
    Other(String),
}

/// Template extraction and scoring for both modalities.
pub trait Matcher {
    fn extract(&self, modality: Modality, img: &GrayImage) -> Result<LiveTemplate, CaptureError>;
    /// Matching score in `[0, 1]` of a live template against an enrolled record.
    fn score(&self, live: &LiveTemplate, enrolled: &UserRecord) -> f64;
}

/// The image pipelines of [`PipelineConfig`].
#[derive(Debug, Clone, Default)]
pub struct PipelineMatcher {
    pub config: PipelineConfig,
}

impl Matcher for PipelineMatcher {
    fn extract(&self, modality: Modality, img: &GrayImage) -> Result<LiveTemplate, CaptureError> {
        Ok(match modality {
            Modality::Finger => LiveTemplate::Finger(self.config.finger_template(img)),
            Modality::Iris => LiveTemplate::Iris(self.config.iris_code(img)?.1),
        })
    }

    fn score(&self, live: &LiveTemplate, enrolled: &UserRecord) -> f64 {
        match live {
            LiveTemplate::Finger(t) => self.config.match_fingers(t, &enrolled.finger),
            // no comparable bits counts as no match
            LiveTemplate::Iris(c) => self.config.match_iris(c, &enrolled.iris).map_or(0.0, |m| m.score),
        }
    }
}

// --- enrollment ----------------------------------------------------------

#[derive(Debug, Error)]
pub enum EnrollError {
    #[error("user {0:?} already enrolled")]
    DuplicateUser(String),
    #[error("segmentation failed: {0}")]
    SegmentationFailed(IrisError),
    #[error("capture failed: {0}")]
    CaptureFailed(String),
    #[error("template quality too low: {0}")]
    LowQualityTemplate(String),
    #[error(transparent)]
    Storage(StoreError),
}

impl From<StoreError> for EnrollError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::DuplicateUser(u) => EnrollError::DuplicateUser(u),
            e => EnrollError::Storage(e),
        }
    }
}

impl From<CaptureError> for EnrollError {
    fn from(e: CaptureError) -> Self {
        match e {
            CaptureError::Segmentation(e) => EnrollError::SegmentationFailed(e),
            CaptureError::Other(m) => EnrollError::CaptureFailed(m),
        }
    }
}

/// Extracts both templates, applies the quality floor and persists the record.
pub fn enroll(
    repo: &Repository,
    matcher: &dyn Matcher,
    user_id: &str,
    finger_img: &GrayImage,
    eye_img: &GrayImage,
    clock: &dyn Clock,
    overwrite: bool,
) -> Result<UserRecord, EnrollError> {
    validate_user_id(user_id)?;
    if !overwrite && repo.contains(user_id)? {
        return Err(EnrollError::DuplicateUser(user_id.to_string()));
    }
    let finger = match matcher.extract(Modality::Finger, finger_img)? {
        LiveTemplate::Finger(t) => t,
        LiveTemplate::Iris(_) => return Err(EnrollError::CaptureFailed("matcher returned an iris template".into())),
    };
    let iris = match matcher.extract(Modality::Iris, eye_img)? {
        LiveTemplate::Iris(c) => c,
        LiveTemplate::Finger(_) => return Err(EnrollError::CaptureFailed("matcher returned a finger template".into())),
    };
    if finger.len() < MIN_ENROLL_MINUTIAE {
        return Err(EnrollError::LowQualityTemplate(format!(
            "{} minutiae, need at least {MIN_ENROLL_MINUTIAE}",
            finger.len()
        )));
    }
    if iris.valid_bits() < MIN_ENROLL_IRIS_BITS {
        return Err(EnrollError::LowQualityTemplate(format!(
            "{} valid iris bits, need at least {MIN_ENROLL_IRIS_BITS}",
            iris.valid_bits()
        )));
    }
    let record = UserRecord {
        user_id: user_id.to_string(),
        iris,
        finger,
        enrolled_at: clock.now().trunc_subsecs(0),
    };
    repo.put_record(&record, overwrite)?;
    Ok(record)
}

// --- authentication ------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuthDecision {
    Granted,
    Denied,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReasonCode {
    Ok,
    Stage1Fail,
    Stage2Fail,
    Timeout,
    CaptureFail,
    UnknownUser,
}

impl ReasonCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReasonCode::Ok => "OK",
            ReasonCode::Stage1Fail => "STAGE1_FAIL",
            ReasonCode::Stage2Fail => "STAGE2_FAIL",
            ReasonCode::Timeout => "TIMEOUT",
            ReasonCode::CaptureFail => "CAPTURE_FAIL",
            ReasonCode::UnknownUser => "UNKNOWN_USER",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageResult {
    pub modality: Modality,
    pub score: f64,
    pub passed: bool,
}

impl StageResult {
    fn audit_field(&self) -> String {
        format!("{}:{:.4}:{}", self.modality, self.score, if self.passed { "P" } else { "F" })
    }
}

#[derive(Debug)]
pub struct AuthOutcome {
    pub decision: AuthDecision,
    pub reason: ReasonCode,
    pub stage1: Option<StageResult>,
    pub stage2: Option<StageResult>,
    /// Set only on a grant.
    pub matched_user: Option<String>,
    pub events: Vec<PortEvent>,
    /// The audit line as written (or as it would have been).
    pub audit_line: String,
    /// Writing the audit line failed; the decision stands regardless.
    pub audit_error: Option<StoreError>,
}

impl AuthOutcome {
    pub fn display_text(&self) -> &'static str {
        match self.decision {
            AuthDecision::Granted => ACCESS_GRANTED,
            AuthDecision::Denied => ACCESS_DENIED,
        }
    }
}

#[derive(Debug, Error)]
pub enum AuthError {
    #[error("user {0:?} is not enrolled")]
    UnknownUser(String),
    #[error("repository has no enrolled users")]
    EmptyRepository,
    #[error("verification needs a claimed user id; identification must not have one")]
    ModeMismatch,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Storage(#[from] StoreError),
}

pub fn format_audit_line(
    at: DateTime<Utc>,
    claim: Option<&str>,
    stage1: Option<&StageResult>,
    stage2: Option<&StageResult>,
    decision: AuthDecision,
    reason: ReasonCode,
) -> String {
    let stage = |s: Option<&StageResult>| s.map_or_else(|| "-".to_string(), StageResult::audit_field);
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}",
        at.format("%Y-%m-%dT%H:%M:%S%.3fZ"),
        claim.unwrap_or("*"),
        stage(stage1),
        stage(stage2),
        match decision {
            AuthDecision::Granted => "GRANT",
            AuthDecision::Denied => "DENY",
        },
        reason.as_str()
    )
}

/// Formats the outcome's audit line and appends it to the repository log.
pub fn log_usage(repo: &Repository, outcome: &AuthOutcome, claim: Option<&str>, at: DateTime<Utc>) -> Result<String, StoreError> {
    let line = format_audit_line(
        at,
        claim,
        outcome.stage1.as_ref(),
        outcome.stage2.as_ref(),
        outcome.decision,
        outcome.reason,
    );
    repo.append_audit(&line)?;
    Ok(line)
}

pub struct Authenticator<'a> {
    pub repo: &'a Repository,
    pub matcher: &'a dyn Matcher,
    pub clock: &'a dyn Clock,
    pub config: AuthConfig,
}

enum Candidates {
    One(UserRecord),
    All(Vec<UserRecord>),
}

struct Session<'s> {
    log: EventLog<'s>,
    stage1: Option<StageResult>,
    stage2: Option<StageResult>,
}

impl<'a> Authenticator<'a> {
    /// Runs one session. Denials (including timeouts and failed captures) are
    /// `Ok`; an unknown claim or empty repository is an error. Both paths
    /// write one audit line and show the terminal message.
    pub fn authenticate(
        &self,
        claim: Option<&str>,
        source: &mut dyn ImageSource,
        ports: &mut dyn DevicePorts,
    ) -> Result<AuthOutcome, AuthError> {
        self.config.validate()?;
        match (self.config.mode, claim) {
            (AuthMode::Verification, Some(_)) | (AuthMode::Identification, None) => {}
            _ => return Err(AuthError::ModeMismatch),
        }
        let mut s = Session {
            log: EventLog {
                clock: self.clock,
                ports,
                events: Vec::new(),
            },
            stage1: None,
            stage2: None,
        };

        let candidates = match self.candidates(claim) {
            Ok(c) => c,
            Err(e) => {
                let outcome = self.finish(s, claim, AuthDecision::Denied, ReasonCode::UnknownUser, None);
                if let Some(audit) = outcome.audit_error {
                    return Err(AuthError::Storage(audit));
                }
                return Err(e);
            }
        };

        let [m1, m2] = self.config.order.stages();
        let (user, score1) = match self.capture(&mut s, source, m1) {
            Err(reason) => return Ok(self.finish(s, claim, AuthDecision::Denied, reason, None)),
            Ok(live) => match candidates {
                Candidates::One(rec) => {
                    let score = self.matcher.score(&live, &rec);
                    (rec, score)
                }
                Candidates::All(recs) => {
                    // records arrive sorted by id, so strict > keeps the smallest id on ties
                    let mut best: Option<(UserRecord, f64)> = None;
                    for rec in recs {
                        let score = self.matcher.score(&live, &rec);
                        if best.as_ref().is_none_or(|(_, b)| score > *b) {
                            best = Some((rec, score));
                        }
                    }
                    best.expect("candidate list is non-empty")
                }
            },
        };
        let pass1 = crate::matching::decide(score1, self.config.mssa(m1)) == Decision::Pass;
        s.stage1 = Some(StageResult {
            modality: m1,
            score: score1,
            passed: pass1,
        });
        if !pass1 {
            return Ok(self.finish(s, claim, AuthDecision::Denied, ReasonCode::Stage1Fail, None));
        }

        let live2 = match self.capture(&mut s, source, m2) {
            Ok(l) => l,
            Err(reason) => return Ok(self.finish(s, claim, AuthDecision::Denied, reason, None)),
        };
        let score2 = self.matcher.score(&live2, &user);
        let pass2 = crate::matching::decide(score2, self.config.mssa(m2)) == Decision::Pass;
        s.stage2 = Some(StageResult {
            modality: m2,
            score: score2,
            passed: pass2,
        });
        if pass2 {
            Ok(self.finish(s, claim, AuthDecision::Granted, ReasonCode::Ok, Some(user.user_id)))
        } else {
            Ok(self.finish(s, claim, AuthDecision::Denied, ReasonCode::Stage2Fail, None))
        }
    }

    fn candidates(&self, claim: Option<&str>) -> Result<Candidates, AuthError> {
        match claim {
            Some(id) => match self.repo.get_record(id) {
                Ok(r) => Ok(Candidates::One(r)),
                Err(StoreError::NotFound(_)) | Err(StoreError::InvalidUserId(_)) => {
                    Err(AuthError::UnknownUser(id.to_string()))
                }
                Err(e) => Err(AuthError::Storage(e)),
            },
            None => {
                let recs = self.repo.records()?;
                if recs.is_empty() {
                    Err(AuthError::EmptyRepository)
                } else {
                    Ok(Candidates::All(recs))
                }
            }
        }
    }

    fn capture(&self, s: &mut Session, source: &mut dyn ImageSource, m: Modality) -> Result<LiveTemplate, ReasonCode> {
        match capture_into(source, m, self.config.capture_timeout, &mut s.log) {
            CaptureWait::TimedOut => Err(ReasonCode::Timeout),
            CaptureWait::Captured(img) => self.matcher.extract(m, &img).map_err(|_| ReasonCode::CaptureFail),
        }
    }

    fn finish(
        &self,
        mut s: Session,
        claim: Option<&str>,
        decision: AuthDecision,
        reason: ReasonCode,
        matched_user: Option<String>,
    ) -> AuthOutcome {
        let text = match decision {
            AuthDecision::Granted => ACCESS_GRANTED,
            AuthDecision::Denied => ACCESS_DENIED,
        };
        s.log.push(PortEventKind::Display(text.to_string()));
        let mut outcome = AuthOutcome {
            decision,
            reason,
            stage1: s.stage1,
            stage2: s.stage2,
            matched_user,
            events: s.log.events,
            audit_line: String::new(),
            audit_error: None,
        };
        let at = self.clock.now();
        match log_usage(self.repo, &outcome, claim, at) {
            Ok(line) => outcome.audit_line = line,
            Err(e) => {
                outcome.audit_line = format_audit_line(at, claim, outcome.stage1.as_ref(), outcome.stage2.as_ref(), decision, reason);
                outcome.audit_error = Some(e);
            }
        }
        outcome
    }
}
