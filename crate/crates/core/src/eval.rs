//! Detection metrics over labeled trials.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::VerifyConfig;
use crate::signal::{load_accel_csv, load_wav, AccelTrace, Signal};
use crate::similarity::{verify, Verdict};
use crate::wearsim::{AttackKind, Label, ManifestEntry};
use crate::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("metrics need at least one legitimate and one attack trial")]
    SingleClassOnly,
    #[error("manifest has no trials")]
    EmptyManifest,
    #[error("manifest line {line}: {reason}")]
    MalformedManifest { line: usize, reason: String },
    #[error("trial {0} has a non-finite score")]
    NonFiniteScore(String),
    #[error("trial {trial_id}: {source}")]
    Trial { trial_id: String, source: Box<Error> },
}

/// Threshold grid: 0.00 to 1.00 in steps of 0.01.
pub const ROC_GRID_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub trial_id: String,
    pub score: f64,
    pub label: Label,
    pub kind: AttackKind,
    /// Verdict of the full pipeline, which can also reject on an empty channel.
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub eta: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// Counts at one threshold; legitimate trials are the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_accept: usize,
    pub false_reject: usize,
    pub false_accept: usize,
    pub true_reject: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub roc: Vec<RocPoint>,
    pub auc: f64,
    pub n_legit: usize,
    pub n_attack: usize,
    #[serde(skip)]
    legit: Vec<f64>,
    #[serde(skip)]
    attack: Vec<f64>,
}

/// Fraction of `sorted` scores at or above `eta`.
fn frac_at_least(sorted: &[f64], eta: f64) -> f64 {
    let below = sorted.partition_point(|&s| s < eta);
    (sorted.len() - below) as f64 / sorted.len() as f64
}

impl MetricsSummary {
    pub fn tpr_at(&self, eta: f64) -> f64 {
        frac_at_least(&self.legit, eta)
    }

    pub fn fpr_at(&self, eta: f64) -> f64 {
        frac_at_least(&self.attack, eta)
    }

    pub fn fnr_at(&self, eta: f64) -> f64 {
        1.0 - self.tpr_at(eta)
    }

    pub fn confusion_at(&self, eta: f64) -> Confusion {
        let accepted = |v: &[f64]| v.len() - v.partition_point(|&s| s < eta);
        let (ta, fa) = (accepted(&self.legit), accepted(&self.attack));
        Confusion { true_accept: ta, false_reject: self.n_legit - ta, false_accept: fa, true_reject: self.n_attack - fa }
    }

    /// Threshold maximizing `tpr - fpr` on the grid; ties go to the lower threshold.
    pub fn youden_eta(&self) -> f64 {
        self.roc
            .iter()
            .fold((0.0, f64::NEG_INFINITY), |best, p| {
                let j = p.tpr - p.fpr;
                if j > best.1 {
                    (p.eta, j)
                } else {
                    best
                }
            })
            .0
    }
}

/// ROC on the 0.01 threshold grid plus the area under the exact empirical
/// ROC curve.
///
/// A score equal to the threshold counts as accepted. The area is the
/// trapezoid rule over every distinct score as a threshold, which equals the
/// probability that a random legitimate score beats a random attack score
/// (ties counting half) and does not depend on where scores fall relative to
/// the grid.
pub fn compute_roc(records: &[EvalRecord]) -> Result<MetricsSummary, EvalError> {
    if let Some(r) = records.iter().find(|r| !r.score.is_finite()) {
        return Err(EvalError::NonFiniteScore(r.trial_id.clone()));
    }
    let mut legit: Vec<f64> = records.iter().filter(|r| r.label == Label::Legit).map(|r| r.score).collect();
    let mut attack: Vec<f64> = records.iter().filter(|r| r.label == Label::Attack).map(|r| r.score).collect();
    if legit.is_empty() || attack.is_empty() {
        return Err(EvalError::SingleClassOnly);
    }
    legit.sort_by(f64::total_cmp);
    attack.sort_by(f64::total_cmp);

    let roc = (0..ROC_GRID_POINTS)
        .map(|i| {
            let eta = i as f64 / 100.0;
            RocPoint { eta, tpr: frac_at_least(&legit, eta), fpr: frac_at_least(&attack, eta) }
        })
        .collect();

    let mut thresholds: Vec<f64> = legit.iter().chain(&attack).copied().collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let (mut auc, mut prev) = (0.0, (0.0, 0.0));
    for eta in thresholds {
        let pt = (frac_at_least(&attack, eta), frac_at_least(&legit, eta));
        auc += (pt.0 - prev.0) * (pt.1 + prev.1) / 2.0;
        prev = pt;
    }
    auc += (1.0 - prev.0) * (1.0 + prev.1) / 2.0;

    Ok(MetricsSummary { roc, auc, n_legit: legit.len(), n_attack: attack.len(), legit, attack })
}

/// `entry[i][j]` scores microphone `i` against accelerometer `j`.
pub fn cross_correlation_matrix(mics: &[Signal], accels: &[AccelTrace], config: &VerifyConfig) -> Result<Vec<Vec<f64>>, Error> {
    let cells: Vec<(usize, usize)> = (0..mics.len()).flat_map(|i| (0..accels.len()).map(move |j| (i, j))).collect();
    let scores =
        cells.par_iter().map(|&(i, j)| verify(&mics[i], &accels[j], config).map(|r| r.peak_corr)).collect::<Result<Vec<_>, _>>()?;
    Ok(scores.chunks(accels.len().max(1)).take(mics.len()).map(<[f64]>::to_vec).collect())
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, EvalError> {
    let entries = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| EvalError::MalformedManifest { line: i + 1, reason: e.to_string() }))
        .collect::<Result<Vec<ManifestEntry>, _>>()?;
    if entries.is_empty() {
        return Err(EvalError::EmptyManifest);
    }
    Ok(entries)
}

/// Verifies every trial of a manifest. Relative file paths resolve against
/// the manifest's directory.
pub fn run_manifest(path: impl AsRef<Path>, config: &VerifyConfig) -> Result<Vec<EvalRecord>, Error> {
    let path = path.as_ref();
    let entries = parse_manifest(&std::fs::read_to_string(path)?)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let resolve = |p: &str| -> PathBuf { base.join(p) };
    entries
        .par_iter()
        .map(|e| {
            let run = || -> Result<EvalRecord, Error> {
                let mic = load_wav(resolve(&e.wav))?;
                let accel = load_accel_csv(resolve(&e.csv))?;
                let report = verify(&mic, &accel, config)?;
                Ok(EvalRecord {
                    trial_id: e.trial_id.clone(),
                    score: report.peak_corr,
                    label: e.label,
                    kind: e.kind,
                    accepted: report.verdict == Verdict::Accept,
                })
            };
            run().map_err(|source| EvalError::Trial { trial_id: e.trial_id.clone(), source: Box::new(source) }.into())
        })
        .collect()
}

/// Metrics JSON document written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub auc: f64,
    pub eta: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub youden_eta: f64,
    pub n_legit: usize,
    pub n_attack: usize,
    pub confusion: Confusion,
    /// Fraction of trials of each kind the full pipeline accepted.
    pub accept_rate_by_kind: BTreeMap<String, f64>,
}

impl MetricsReport {
    pub fn new(summary: &MetricsSummary, records: &[EvalRecord], eta: f64) -> Self {
        let mut by_kind: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        for r in records {
            let key = serde_json::to_value(r.kind).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
            let e = by_kind.entry(key).or_default();
            e.0 += usize::from(r.accepted);
            e.1 += 1;
        }
        Self {
            auc: summary.auc,
            eta,
            tpr: summary.tpr_at(eta),
            fpr: summary.fpr_at(eta),
            fnr: summary.fnr_at(eta),
            youden_eta: summary.youden_eta(),
            n_legit: summary.n_legit,
            n_attack: summary.n_attack,
            confusion: summary.confusion_at(eta),
            accept_rate_by_kind: by_kind.into_iter().map(|(k, (a, n))| (k, a as f64 / n as f64)).collect(),
        }
    }
}

/// `eta,tpr,fpr` with one row per grid threshold.
pub fn roc_csv(summary: &MetricsSummary) -> String {
    let mut s = String::from("eta,tpr,fpr\n");
    for p in &summary.roc {
        s.push_str(&format!("{:.2},{},{}\n", p.eta, p.tpr, p.fpr));
    }
    s
}

/// 2 x 2 table at the threshold, rows = truth, columns = decision.
pub fn confusion_csv(c: &Confusion) -> String {
    format!("truth,accept,reject\nlegit,{},{}\nattack,{},{}\n", c.true_accept, c.false_reject, c.false_accept, c.true_reject)
}

/// Square score matrix as CSV with a header of column indices.
pub fn matrix_csv(m: &[Vec<f64>]) -> String {
    let n = m.first().map_or(0, Vec::len);
    let mut s = String::from("mic\\accel");
    for j in 0..n {
        s.push_str(&format!(",{j}"));
    }
    s.push('\n');
    for (i, row) in m.iter().enumerate() {
        s.push_str(&i.to_string());
        for v in row {
            s.push_str(&format!(",{v}"));
        }
        s.push('\n');
    }
    s
}

/// Writes `metrics.json`, `roc.csv` and `confusion.csv` into `dir`.
pub fn write_reports(dir: impl AsRef<Path>, summary: &MetricsSummary, report: &MetricsReport) -> Result<(), Error> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut f = std::fs::File::create(dir.join("metrics.json"))?;
    serde_json::to_writer_pretty(&mut f, report)?;
    f.write_all(b"\n")?;
    std::fs::write(dir.join("roc.csv"), roc_csv(summary))?;
    std::fs::write(dir.join("confusion.csv"), confusion_csv(&report.confusion))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn rec(score: f64, label: Label) -> EvalRecord {
        let kind = if label == Label::Legit { AttackKind::Normal } else { AttackKind::Replay };
        EvalRecord { trial_id: String::new(), score, label, kind, accepted: false }
    }

    fn records(legit: &[f64], attack: &[f64]) -> Vec<EvalRecord> {
        legit.iter().map(|&s| rec(s, Label::Legit)).chain(attack.iter().map(|&s| rec(s, Label::Attack))).collect()
    }

    /// Pairwise count: P(legit > attack) + P(tie) / 2.
    fn rank_auc(legit: &[f64], attack: &[f64]) -> f64 {
        let mut wins = 0.0;
        for l in legit {
            for a in attack {
                wins += if l > a {
                    1.0
                } else if l == a {
                    0.5
                } else {
                    0.0
                };
            }
        }
        wins / (legit.len() * attack.len()) as f64
    }

    #[test]
    fn hand_enumerated_case() {
        let m = compute_roc(&records(&[0.8, 0.6], &[0.7, 0.2])).unwrap();
        assert_eq!(m.auc, 0.75);
        assert_eq!(m.roc.len(), 101);
    }

    #[test]
    fn perfect_separation_and_endpoints() {
        let m = compute_roc(&records(&[0.9; 5], &[0.1; 7])).unwrap();
        assert_eq!(m.auc, 1.0);
        assert_eq!((m.roc[0].tpr, m.roc[0].fpr), (1.0, 1.0));
        assert_eq!((m.tpr_at(0.95), m.fpr_at(0.95)), (0.0, 0.0));
        assert_eq!(m.youden_eta(), 0.11);
    }

    #[test]
    fn ties_at_threshold_accept() {
        let m = compute_roc(&records(&[0.3], &[0.29])).unwrap();
        assert_eq!(m.tpr_at(0.3), 1.0);
        assert_eq!(m.fpr_at(0.3), 0.0);
        let c = m.confusion_at(0.3);
        assert_eq!((c.true_accept, c.false_reject, c.false_accept, c.true_reject), (1, 0, 0, 1));
    }

    #[test]
    fn null_scores_give_half() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let legit: Vec<f64> = (0..5000).map(|_| rng.random()).collect();
        let attack: Vec<f64> = (0..5000).map(|_| rng.random()).collect();
        let m = compute_roc(&records(&legit, &attack)).unwrap();
        assert!((m.auc - 0.5).abs() < 0.02, "{}", m.auc);
    }

    #[test]
    fn matches_rank_oracle_with_ties_and_negatives() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let legit: Vec<f64> = (0..rng.random_range(1..20)).map(|_| (rng.random_range(-5..10) as f64) / 10.0).collect();
            let attack: Vec<f64> = (0..rng.random_range(1..20)).map(|_| (rng.random_range(-5..10) as f64) / 10.0).collect();
            let m = compute_roc(&records(&legit, &attack)).unwrap();
            assert!((m.auc - rank_auc(&legit, &attack)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_class_and_nan() {
        assert!(matches!(compute_roc(&records(&[0.5], &[])), Err(EvalError::SingleClassOnly)));
        assert!(matches!(compute_roc(&records(&[f64::NAN], &[0.1])), Err(EvalError::NonFiniteScore(_))));
    }

    #[test]
    fn csv_shapes() {
        let m = compute_roc(&records(&[0.8, 0.6], &[0.7, 0.2])).unwrap();
        let csv = roc_csv(&m);
        assert_eq!(csv.lines().count(), 102);
        assert!(csv.contains("\n0.65,0.5,0.5\n"));
        assert_eq!(matrix_csv(&[vec![1.0, 0.5], vec![0.25, 1.0]]), "mic\\accel,0,1\n0,1,0.5\n1,0.25,1\n");
    }

    #[test]
    fn manifest_parsing() {
        assert!(matches!(parse_manifest(""), Err(EvalError::EmptyManifest)));
        assert!(matches!(parse_manifest("{nope}\n"), Err(EvalError::MalformedManifest { line: 1, .. })));
        let line = r#"{"trial_id":"t","kind":"normal","label":"legit","wav":"a.wav","csv":"a.csv"}"#;
        assert_eq!(parse_manifest(line).unwrap().len(), 1);
    }
}
