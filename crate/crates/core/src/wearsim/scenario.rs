//! Scenario files in, paired WAV + CSV trials and a JSON-lines manifest out.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generate_attack, synth_utterance, AccelModel, AttackKind, AttackSpec, Label, ReplayAccel, CORPUS_SIZE};
use crate::signal::{write_accel_csv, write_wav, WavEncoding};
use crate::Error;

pub const MANIFEST_NAME: &str = "manifest.jsonl";

/// One scenario line: an attack recipe repeated `count` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEntry {
    #[serde(flatten)]
    pub spec: AttackSpec,
    #[serde(default = "one")]
    pub count: usize,
    /// First trial seed; later repetitions add their index.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Spoken word; defaults to the trial index modulo the corpus size.
    #[serde(default)]
    pub word_id: Option<u32>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub trial_id: String,
    pub kind: AttackKind,
    pub label: Label,
    pub wav: String,
    pub csv: String,
}

pub fn parse_scenario(text: &str) -> Result<Vec<ScenarioEntry>, Error> {
    let entries: Vec<ScenarioEntry> = serde_json::from_str(text)?;
    for e in &entries {
        e.spec.validate()?;
        if let Some(w) = e.word_id {
            if w >= CORPUS_SIZE {
                return Err(super::SimError::UnknownWordId(w).into());
            }
        }
    }
    Ok(entries)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Vec<ScenarioEntry>, Error> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

struct Trial {
    index: usize,
    spec: AttackSpec,
    word_id: u32,
    seed: u64,
}

/// Another word than `word`, chosen by `seed`.
fn other_word(word: u32, seed: u64) -> u32 {
    (word + 1 + (seed % u64::from(CORPUS_SIZE - 1)) as u32) % CORPUS_SIZE
}

fn expand(entries: &[ScenarioEntry], base_seed: u64) -> Vec<Trial> {
    let mut trials = Vec::new();
    for e in entries {
        for j in 0..e.count {
            let index = trials.len();
            let seed = e.seed.map_or(base_seed.wrapping_add(index as u64), |s| s.wrapping_add(j as u64));
            let word_id = e.word_id.unwrap_or(index as u32 % CORPUS_SIZE);
            let spec = match &e.spec {
                AttackSpec::RandomAttack { attacker_word: None } => {
                    AttackSpec::RandomAttack { attacker_word: Some(other_word(word_id, seed)) }
                }
                AttackSpec::Replay { accel: ReplayAccel::OtherUtterance, other_word: None } => {
                    AttackSpec::Replay { accel: ReplayAccel::OtherUtterance, other_word: Some(other_word(word_id, seed)) }
                }
                s => s.clone(),
            };
            trials.push(Trial { index, spec, word_id, seed });
        }
    }
    trials
}

/// Generates every trial into `out_dir` (created if needed) and writes the
/// manifest there. File paths in the manifest are relative to `out_dir`.
pub fn run_scenario(
    entries: &[ScenarioEntry],
    out_dir: impl AsRef<Path>,
    model: &AccelModel,
    base_seed: u64,
) -> Result<Vec<ManifestEntry>, Error> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;
    let manifest = expand(entries, base_seed)
        .par_iter()
        .map(|t| -> Result<ManifestEntry, Error> {
            let legit = synth_utterance(t.word_id, t.seed)?;
            let (mic, accel, label) = generate_attack(&t.spec, &legit, model, t.seed)?;
            let trial_id = format!("trial_{:04}", t.index);
            let (wav, csv) = (format!("{trial_id}.wav"), format!("{trial_id}.csv"));
            write_wav(out_dir.join(&wav), &mic, WavEncoding::Pcm16)?;
            write_accel_csv(out_dir.join(&csv), &accel)?;
            Ok(ManifestEntry { trial_id, kind: t.spec.kind(), label, wav, csv })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut file = std::io::BufWriter::new(std::fs::File::create(out_dir.join(MANIFEST_NAME))?);
    for m in &manifest {
        serde_json::to_writer(&mut file, m)?;
        file.write_all(b"\n")?;
    }
    file.flush()?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_entries() {
        let e = parse_scenario(r#"[{"kind":"normal","count":3,"seed":5},{"kind":"replay","accel":"other_utterance"}]"#).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].count, 3);
        assert_eq!(e[1].count, 1);
        assert!(parse_scenario(r#"[{"kind":"teleport"}]"#).is_err());
        assert!(parse_scenario(r#"[{"kind":"normal","word_id":99}]"#).is_err());
    }

    #[test]
    fn expansion_assigns_other_words() {
        let e = parse_scenario(r#"[{"kind":"random_attack","count":40}]"#).unwrap();
        for t in expand(&e, 0) {
            match t.spec {
                AttackSpec::RandomAttack { attacker_word: Some(w) } => assert_ne!(w, t.word_id),
                ref s => panic!("{s:?}"),
            }
        }
    }

    #[test]
    fn writes_pairs_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let e = parse_scenario(r#"[{"kind":"normal"},{"kind":"ultrasound"}]"#).unwrap();
        let m = run_scenario(&e, dir.path(), &AccelModel::default(), 1).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].label, Label::Legit);
        assert_eq!(m[1].kind, AttackKind::Ultrasound);
        let text = std::fs::read_to_string(dir.path().join(MANIFEST_NAME)).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(
            text.starts_with(r#"{"trial_id":"trial_0000","kind":"normal","label":"legit","wav":"trial_0000.wav","csv":"trial_0000.csv"}"#)
        );
        assert!(dir.path().join("trial_0001.wav").exists());
    }
}
