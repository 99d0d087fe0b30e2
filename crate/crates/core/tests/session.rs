use std::time::Duration;

use biogate::authflow::{
    enroll, AuthConfig, AuthDecision, AuthMode, Authenticator, EnrollError, NullPorts, PipelineMatcher, ReasonCode,
    SimulatedClock, StageOrder, StaticImages,
};
use biogate::store::Repository;
use biogate::synth::{synth_eye, synth_finger, EyeIdentity, FingerIdentity, Perturbation};
use biogate::GrayImage;
use chrono::{DateTime, TimeZone, Utc};

struct Person {
    eye: EyeIdentity,
    finger: FingerIdentity,
}

impl Person {
    fn new(seed: u64) -> Self {
        Self {
            eye: EyeIdentity::from_seed(seed, 200),
            finger: FingerIdentity::from_seed(seed, 16),
        }
    }

    fn capture(&self, n: u64) -> (GrayImage, GrayImage) {
        let p = Perturbation {
            rotation: 0.03,
            dx: 2.0,
            dy: -1.0,
            noise: 6.0,
            capture_seed: n,
        };
        (synth_finger(&self.finger, &p), synth_eye(&self.eye, &p))
    }
}

fn start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 2, 3, 4, 5).unwrap()
}

fn enrolled(people: &[(&str, &Person)]) -> (tempfile::TempDir, Repository) {
    let dir = tempfile::tempdir().unwrap();
    let repo = Repository::open(dir.path()).unwrap();
    let clock = SimulatedClock::new(start());
    for (id, p) in people {
        let plain = Perturbation::default();
        enroll(
            &repo,
            &PipelineMatcher::default(),
            id,
            &synth_finger(&p.finger, &plain),
            &synth_eye(&p.eye, &plain),
            &clock,
            false,
        )
        .unwrap();
    }
    (dir, repo)
}

#[test]
fn enrolled_templates_match_a_fresh_extraction() {
    let alice = Person::new(1);
    let (_d, repo) = enrolled(&[("alice", &alice)]);
    let rec = repo.get_record("alice").unwrap();
    let cfg = biogate::PipelineConfig::default();
    let plain = Perturbation::default();
    assert_eq!(rec.iris, cfg.iris_code(&synth_eye(&alice.eye, &plain)).unwrap().1);
    assert_eq!(rec.finger.minutiae, cfg.finger_template(&synth_finger(&alice.finger, &plain)).minutiae);
    assert_eq!(rec.enrolled_at, start());
}

#[test]
fn genuine_and_mixed_sessions() {
    let alice = Person::new(1);
    let mallory = Person::new(2);
    let (_d, repo) = enrolled(&[("alice", &alice)]);
    let clock = SimulatedClock::new(start());
    let matcher = PipelineMatcher::default();
    let auth = Authenticator {
        repo: &repo,
        matcher: &matcher,
        clock: &clock,
        config: AuthConfig::default(),
    };

    let (f, e) = alice.capture(1);
    let out = auth
        .authenticate(Some("alice"), &mut StaticImages { finger: f.clone(), eye: e.clone() }, &mut NullPorts)
        .unwrap();
    assert_eq!(out.decision, AuthDecision::Granted);
    assert!(out.stage1.unwrap().passed && out.stage2.unwrap().passed);

    let (mf, me) = mallory.capture(2);
    let out = auth
        .authenticate(Some("alice"), &mut StaticImages { finger: mf, eye: e.clone() }, &mut NullPorts)
        .unwrap();
    assert_eq!((out.decision, out.reason), (AuthDecision::Denied, ReasonCode::Stage1Fail));
    assert!(out.stage2.is_none());

    let out = auth
        .authenticate(Some("alice"), &mut StaticImages { finger: f, eye: me }, &mut NullPorts)
        .unwrap();
    assert_eq!((out.decision, out.reason), (AuthDecision::Denied, ReasonCode::Stage2Fail));
    assert!(out.stage1.unwrap().passed);

    let log = repo.read_audit().unwrap();
    assert_eq!(log.len(), 3);
    assert!(log[0].ends_with("\tGRANT\tOK"));
    assert_eq!(log[1].split('\t').nth(3), Some("-"));
}

#[test]
fn sequential_audit_timestamps_are_monotone() {
    let alice = Person::new(3);
    let (_d, repo) = enrolled(&[("alice", &alice)]);
    let clock = SimulatedClock::new(start());
    let matcher = PipelineMatcher::default();
    let auth = Authenticator {
        repo: &repo,
        matcher: &matcher,
        clock: &clock,
        config: AuthConfig::default(),
    };
    for n in 0..3 {
        let (finger, eye) = alice.capture(n);
        auth.authenticate(Some("alice"), &mut StaticImages { finger, eye }, &mut NullPorts).unwrap();
        clock.advance(Duration::from_millis(1500));
    }
    let stamps: Vec<String> = repo
        .read_audit()
        .unwrap()
        .iter()
        .map(|l| l.split('\t').next().unwrap().to_string())
        .collect();
    assert_eq!(stamps.len(), 3);
    assert!(stamps.windows(2).all(|w| w[0] < w[1]), "{stamps:?}");
    assert_eq!(stamps[0], "2024-01-02T03:04:05.000Z");
}

#[test]
fn identification_finds_the_right_user_in_any_order() {
    let people: Vec<Person> = (10..14).map(Person::new).collect();
    let ids = ["dave", "carol", "bob", "alice"];
    let pairs: Vec<(&str, &Person)> = ids.iter().copied().zip(people.iter()).collect();
    let (_d, repo) = enrolled(&pairs);
    let clock = SimulatedClock::new(start());
    let matcher = PipelineMatcher::default();
    for order in [StageOrder::FingerFirst, StageOrder::IrisFirst] {
        let auth = Authenticator {
            repo: &repo,
            matcher: &matcher,
            clock: &clock,
            config: AuthConfig {
                mode: AuthMode::Identification,
                order,
                ..Default::default()
            },
        };
        for (id, p) in &pairs {
            let (finger, eye) = p.capture(5);
            let out = auth.authenticate(None, &mut StaticImages { finger, eye }, &mut NullPorts).unwrap();
            assert_eq!(out.matched_user.as_deref(), Some(*id));
        }
    }
}

#[test]
fn enrollment_errors() {
    let alice = Person::new(4);
    let (_d, repo) = enrolled(&[("alice", &alice)]);
    let clock = SimulatedClock::new(start());
    let (f, e) = alice.capture(0);
    let matcher = PipelineMatcher::default();
    assert!(matches!(
        enroll(&repo, &matcher, "alice", &f, &e, &clock, false),
        Err(EnrollError::DuplicateUser(_))
    ));
    assert!(matches!(
        enroll(&repo, &matcher, "bob", &f, &GrayImage::filled(200, 200, 90), &clock, false),
        Err(EnrollError::SegmentationFailed(_))
    ));
    assert!(matches!(
        enroll(&repo, &matcher, "carol", &GrayImage::filled(200, 200, 90), &e, &clock, false),
        Err(EnrollError::LowQualityTemplate(_))
    ));
    enroll(&repo, &matcher, "alice", &f, &e, &clock, true).unwrap();
}
