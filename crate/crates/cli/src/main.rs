//! `biogate` command-line front end.
//!
//! Exit codes: 0 success or grant, 1 deny, 2 any error.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use biogate::authflow::{
    self, AuthConfig, AuthDecision, AuthError, AuthMode, Authenticator, DevicePorts, LiveTemplate, Matcher, Modality,
    PipelineMatcher, StageOrder, StaticImages, SystemClock, Tone,
};
use biogate::eval::{self, Sweep};
use biogate::imaging::{load_pgm, save_pgm};
use biogate::iris::{segment_eye, EyeGeometry};
use biogate::store::Repository;
use biogate::synth::{synth_eye, synth_finger, EyeIdentity, FingerIdentity, Perturbation};
use biogate::{GrayImage, PipelineConfig};

#[derive(Parser)]
#[command(name = "biogate", version, about = "Iris + fingerprint two-factor authentication")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enroll a user from one fingerprint and one eye image.
    Enroll {
        #[arg(long)]
        repo: PathBuf,
        #[arg(long)]
        user: String,
        #[arg(long)]
        finger: PathBuf,
        #[arg(long)]
        eye: PathBuf,
        #[arg(long)]
        overwrite: bool,
    },
    /// Two-stage authentication; without --user, identifies against every record.
    Auth(AuthArgs),
    /// Locate pupil, iris and eyelids.
    Segment {
        #[arg(long)]
        eye: PathBuf,
        /// Write a copy of the eye with the located boundaries drawn at 255.
        #[arg(long)]
        overlay: Option<PathBuf>,
        /// Print the geometry dump (the default when no overlay is requested).
        #[arg(long)]
        geometry: bool,
    },
    /// Iris matching score of two eye images.
    MatchIris { a: PathBuf, b: PathBuf },
    /// Fingerprint matching score of two fingerprint images.
    MatchFinger { a: PathBuf, b: PathBuf },
    /// Render a seeded synthetic image.
    Synth(SynthArgs),
    /// FAR/FRR threshold sweep over genuine and impostor pair lists.
    Eval {
        #[arg(long)]
        repo: Option<PathBuf>,
        #[arg(long)]
        genuine: PathBuf,
        #[arg(long)]
        impostor: PathBuf,
        #[arg(long, default_value = "0:1:0.02")]
        sweep: String,
        #[arg(long, value_enum, default_value_t = EvalModality::Iris)]
        modality: EvalModality,
    },
}

#[derive(Args)]
struct AuthArgs {
    #[arg(long)]
    repo: PathBuf,
    #[arg(long)]
    user: Option<String>,
    #[arg(long)]
    finger: PathBuf,
    #[arg(long)]
    eye: PathBuf,
    #[arg(long, value_enum, default_value_t = OrderArg::FingerFirst)]
    order: OrderArg,
    #[arg(long)]
    mssa_finger: Option<f64>,
    #[arg(long)]
    mssa_iris: Option<f64>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(value_enum)]
    kind: SynthKind,
    #[arg(long)]
    seed: u64,
    /// Radians.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    rotate: f64,
    #[arg(long, num_args = 2, value_names = ["DX", "DY"], allow_hyphen_values = true)]
    translate: Option<Vec<f64>>,
    /// Uniform noise amplitude in grey levels.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Seeds the noise realization.
    #[arg(long, default_value_t = 0)]
    capture: u64,
    /// Eye image side, px.
    #[arg(long, default_value_t = 200)]
    size: usize,
    /// Eye: dark eyelid band above this row.
    #[arg(long)]
    eyelid: Option<f64>,
    /// Finger: number of minutiae.
    #[arg(long, default_value_t = 16)]
    minutiae: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Eye,
    Finger,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    FingerFirst,
    IrisFirst,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvalModality {
    Iris,
    Finger,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Enroll {
            repo,
            user,
            finger,
            eye,
            overwrite,
        } => {
            let repo = Repository::open(&repo)?;
            let rec = authflow::enroll(
                &repo,
                &PipelineMatcher::default(),
                &user,
                &read_pgm(&finger)?,
                &read_pgm(&eye)?,
                &SystemClock,
                overwrite,
            )?;
            println!(
                "enrolled {} ({} minutiae, {} valid iris bits)",
                rec.user_id,
                rec.finger.len(),
                rec.iris.valid_bits()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Auth(args) => auth(args),
        Command::Segment { eye, overlay, geometry } => {
            let img = read_pgm(&eye)?;
            let geom = segment_eye(&img, &PipelineConfig::default().segment)?;
            if let Some(path) = &overlay {
                fs::write(path, save_pgm(&draw_overlay(&img, &geom), true))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if geometry || overlay.is_none() {
                print!("{}", geom.dump());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::MatchIris { a, b } => {
            let cfg = PipelineConfig::default();
            let (_, ca) = cfg.iris_code(&read_pgm(&a)?).with_context(|| format!("encoding {}", a.display()))?;
            let (_, cb) = cfg.iris_code(&read_pgm(&b)?).with_context(|| format!("encoding {}", b.display()))?;
            let m = cfg.match_iris(&ca, &cb)?;
            println!("MS={:.4} shift={}", m.score, m.best_shift);
            Ok(ExitCode::SUCCESS)
        }
        Command::MatchFinger { a, b } => {
            let cfg = PipelineConfig::default();
            let ta = cfg.finger_template(&read_pgm(&a)?);
            let tb = cfg.finger_template(&read_pgm(&b)?);
            println!("MS={:.4}", cfg.match_fingers(&ta, &tb));
            Ok(ExitCode::SUCCESS)
        }
        Command::Synth(args) => synth(args),
        Command::Eval {
            repo,
            genuine,
            impostor,
            sweep,
            modality,
        } => {
            let sweep: Sweep = sweep.parse()?;
            let repo = repo.map(Repository::open).transpose()?;
            let mut scorer = PairScorer::new(repo, modality);
            let g = scorer.score_list(&genuine)?;
            let i = scorer.score_list(&impostor)?;
            print!("{}", eval::to_csv(&eval::sweep(&g, &i, &sweep.thresholds())?));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    load_pgm(&bytes).with_context(|| format!("decoding {}", path.display()))
}

/// Shows the display on stdout and the buzzer on stderr.
struct ConsolePorts;

impl DevicePorts for ConsolePorts {
    fn display(&mut self, text: &str) {
        println!("{text}");
    }

    fn buzz(&mut self, tone: Tone) {
        eprintln!("buzzer: {tone:?}");
    }
}

fn auth(args: AuthArgs) -> Result<ExitCode> {
    let repo = Repository::open(&args.repo)?;
    let defaults = AuthConfig::default();
    let config = AuthConfig {
        mssa_finger: args.mssa_finger.unwrap_or(defaults.mssa_finger),
        mssa_iris: args.mssa_iris.unwrap_or(defaults.mssa_iris),
        order: match args.order {
            OrderArg::FingerFirst => StageOrder::FingerFirst,
            OrderArg::IrisFirst => StageOrder::IrisFirst,
        },
        mode: if args.user.is_some() {
            AuthMode::Verification
        } else {
            AuthMode::Identification
        },
        ..defaults
    };
    let mut source = StaticImages {
        finger: read_pgm(&args.finger)?,
        eye: read_pgm(&args.eye)?,
    };
    let matcher = PipelineMatcher::default();
    let authenticator = Authenticator {
        repo: &repo,
        matcher: &matcher,
        clock: &SystemClock,
        config,
    };
    match authenticator.authenticate(args.user.as_deref(), &mut source, &mut ConsolePorts) {
        Ok(outcome) => {
            for s in [outcome.stage1, outcome.stage2].into_iter().flatten() {
                eprintln!("{} MS={:.4} {}", s.modality, s.score, if s.passed { "pass" } else { "fail" });
            }
            eprintln!("reason: {}", outcome.reason.as_str());
            if let Some(e) = &outcome.audit_error {
                eprintln!("warning: audit log not written: {e}");
            }
            Ok(match outcome.decision {
                AuthDecision::Granted => ExitCode::SUCCESS,
                AuthDecision::Denied => ExitCode::from(1),
            })
        }
        // already shown as a denial and audited
        Err(e @ (AuthError::UnknownUser(_) | AuthError::EmptyRepository)) => {
            eprintln!("reason: {e}");
            Ok(ExitCode::from(1))
        }
        Err(e) => Err(e.into()),
    }
}

fn synth(args: SynthArgs) -> Result<ExitCode> {
    if !(0.0..=255.0).contains(&args.noise) {
        bail!("noise amplitude must be within 0..=255");
    }
    let (dx, dy) = match args.translate.as_deref() {
        Some(&[dx, dy]) => (dx, dy),
        _ => (0.0, 0.0),
    };
    let p = Perturbation {
        rotation: args.rotate,
        dx,
        dy,
        noise: args.noise,
        capture_seed: args.capture,
    };
    let img = match args.kind {
        SynthKind::Eye => {
            if args.size < 120 {
                bail!("eye size must be at least 120 px");
            }
            let mut id = EyeIdentity::from_seed(args.seed, args.size);
            if let Some(y) = args.eyelid {
                id = id.with_eyelid(y);
            }
            synth_eye(&id, &p)
        }
        SynthKind::Finger => synth_finger(&FingerIdentity::from_seed(args.seed, args.minutiae), &p),
    };
    fs::write(&args.out, save_pgm(&img, true)).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn draw_overlay(img: &GrayImage, geom: &EyeGeometry) -> GrayImage {
    let mut out = img.clone();
    let (w, h) = (img.width() as f64, img.height() as f64);
    let mut plot = |x: f64, y: f64| {
        let (x, y) = (x.round(), y.round());
        if x >= 0.0 && y >= 0.0 && x < w && y < h {
            out.set(x as usize, y as usize, 255);
        }
    };
    for c in [geom.pupil, geom.iris] {
        let n = (8.0 * c.r).ceil().max(16.0) as usize;
        for k in 0..n {
            let (x, y) = c.point_at(std::f64::consts::TAU * k as f64 / n as f64);
            plot(x, y);
        }
    }
    for line in [geom.upper_lid, geom.lower_lid].into_iter().flatten() {
        for x in 0..img.width() {
            plot(x as f64, line.y_at(x as f64));
        }
    }
    out
}

/// Scores TSV pair lists. Each entry is an image path or, failing that, the
/// id of a user enrolled in the repository. Templates are cached per entry.
struct PairScorer {
    repo: Option<Repository>,
    modality: Modality,
    matcher: PipelineMatcher,
    cache: HashMap<String, LiveTemplate>,
}

impl PairScorer {
    fn new(repo: Option<Repository>, modality: EvalModality) -> Self {
        Self {
            repo,
            modality: match modality {
                EvalModality::Iris => Modality::Iris,
                EvalModality::Finger => Modality::Finger,
            },
            matcher: PipelineMatcher::default(),
            cache: HashMap::new(),
        }
    }

    fn template(&mut self, entry: &str) -> Result<LiveTemplate> {
        if let Some(t) = self.cache.get(entry) {
            return Ok(t.clone());
        }
        let path = Path::new(entry);
        let t = if path.is_file() {
            self.matcher
                .extract(self.modality, &read_pgm(path)?)
                .with_context(|| format!("extracting {entry}"))?
        } else if let Some(repo) = &self.repo {
            let rec = repo
                .get_record(entry)
                .with_context(|| format!("{entry:?} is neither an image file nor an enrolled user"))?;
            match self.modality {
                Modality::Iris => LiveTemplate::Iris(rec.iris),
                Modality::Finger => LiveTemplate::Finger(rec.finger),
            }
        } else {
            bail!("{entry:?} is not an image file (pass --repo to resolve user ids)");
        };
        self.cache.insert(entry.to_string(), t.clone());
        Ok(t)
    }

    fn score(&mut self, a: &str, b: &str) -> Result<f64> {
        let ta = self.template(a)?;
        let tb = self.template(b)?;
        let cfg = &self.matcher.config;
        Ok(match (&ta, &tb) {
            (LiveTemplate::Iris(x), LiveTemplate::Iris(y)) => cfg.match_iris(x, y).map_or(0.0, |m| m.score),
            (LiveTemplate::Finger(x), LiveTemplate::Finger(y)) => cfg.match_fingers(x, y),
            _ => unreachable!("both templates come from one modality"),
        })
    }

    fn score_list(&mut self, path: &Path) -> Result<Vec<f64>> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut scores = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (a, b) = line
                .split_once('\t')
                .filter(|(_, b)| !b.contains('\t'))
                .ok_or_else(|| anyhow!("{}:{}: expected two tab-separated entries", path.display(), n + 1))?;
            scores.push(self.score(a, b)?);
        }
        Ok(scores)
    }
}
