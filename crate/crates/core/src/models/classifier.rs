//! End-to-end text classifier (preprocessing + TF-IDF + one-vs-one SVM) and model files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::majority::{train_majority, MajorityModel};
use super::ovo::{train_ovo, OvOModel, OvOTrainInfo, SvmConfig};
use super::svm::SolverParams;
use crate::annotate::taxonomy::Level;
use crate::error::{Error, Result};
use crate::features::{SparseVector, TfIdfModel};
use crate::preprocess::{PreprocessConfig, TokenSequence};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextClassifier {
    pub level: Level,
    pub preprocess: PreprocessConfig,
    pub config: SvmConfig,
    pub solver: SolverParams,
    pub tfidf: TfIdfModel,
    pub ovo: OvOModel,
}

/// Classes present in `labels`, in the level's canonical order.
pub fn present_classes<S: AsRef<str>>(labels: &[S], level: Level) -> Vec<String> {
    level
        .classes()
        .iter()
        .filter(|c| labels.iter().any(|l| l.as_ref() == **c))
        .map(|c| c.to_string())
        .collect()
}

pub(crate) fn label_indices<S: AsRef<str>>(labels: &[S], classes: &[String]) -> Result<Vec<usize>> {
    labels
        .iter()
        .map(|l| {
            classes.iter().position(|c| c == l.as_ref()).ok_or_else(|| Error::UnknownLabel {
                label: l.as_ref().to_string(),
                context: "training label".into(),
            })
        })
        .collect()
}

impl TextClassifier {
    pub fn train<S: AsRef<str>, L: AsRef<str>>(
        texts: &[S],
        labels: &[L],
        level: Level,
        config: &SvmConfig,
        preprocess: &PreprocessConfig,
        solver: &SolverParams,
    ) -> Result<(Self, OvOTrainInfo)> {
        let docs: Vec<TokenSequence> = texts.iter().map(|t| preprocess.process(t.as_ref())).collect();
        Self::train_tokens(&docs, labels, level, config, preprocess, solver)
    }

    pub fn train_tokens<L: AsRef<str>>(
        docs: &[TokenSequence],
        labels: &[L],
        level: Level,
        config: &SvmConfig,
        preprocess: &PreprocessConfig,
        solver: &SolverParams,
    ) -> Result<(Self, OvOTrainInfo)> {
        config.validate()?;
        preprocess.validate()?;
        if docs.len() != labels.len() {
            return Err(Error::InvalidInput(format!("{} documents but {} labels", docs.len(), labels.len())));
        }
        let tfidf = TfIdfModel::build(docs, config.ngram_max, config.top_n)?;
        let x = tfidf.vectorize_all(docs);
        Self::train_vectors(tfidf, &x, labels, level, config, preprocess, solver)
    }

    pub(crate) fn train_vectors<L: AsRef<str>>(
        tfidf: TfIdfModel,
        x: &[SparseVector],
        labels: &[L],
        level: Level,
        config: &SvmConfig,
        preprocess: &PreprocessConfig,
        solver: &SolverParams,
    ) -> Result<(Self, OvOTrainInfo)> {
        let classes = present_classes(labels, level);
        let y = label_indices(labels, &classes)?;
        let (ovo, info) = train_ovo(x, &y, &classes, tfidf.vocab_size(), config.c, config.class_weight, solver)?;
        Ok((
            TextClassifier {
                level,
                preprocess: preprocess.clone(),
                config: config.clone(),
                solver: solver.clone(),
                tfidf,
                ovo,
            },
            info,
        ))
    }

    pub fn vectorize(&self, text: &str) -> SparseVector {
        self.tfidf.vectorize(&self.preprocess.process(text))
    }

    pub fn predict(&self, text: &str) -> &str {
        self.ovo.predict(&self.vectorize(text))
    }

    pub fn predict_tokens(&self, doc: &TokenSequence) -> &str {
        self.ovo.predict(&self.tfidf.vectorize(doc))
    }

    pub fn predict_batch<S: AsRef<str> + Sync>(&self, texts: &[S]) -> Vec<&str> {
        use rayon::prelude::*;
        texts.par_iter().map(|t| self.predict(t.as_ref())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Svm(Box<TextClassifier>),
    Majority { level: Level, model: MajorityModel },
}

impl Model {
    pub fn majority<S: AsRef<str>>(labels: &[S], level: Level) -> Result<Model> {
        let model = train_majority(labels, &level.class_names())?;
        Ok(Model::Majority { level, model })
    }

    pub fn level(&self) -> Level {
        match self {
            Model::Svm(c) => c.level,
            Model::Majority { level, .. } => *level,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Svm(_) => "tfidf_svm",
            Model::Majority { .. } => "majority",
        }
    }

    pub fn predict(&self, text: &str) -> &str {
        match self {
            Model::Svm(c) => c.predict(text),
            Model::Majority { model, .. } => model.predict(),
        }
    }

    pub fn predict_batch<S: AsRef<str> + Sync>(&self, texts: &[S]) -> Vec<&str> {
        match self {
            Model::Svm(c) => c.predict_batch(texts),
            Model::Majority { model, .. } => vec![model.predict(); texts.len()],
        }
    }
}

/// Versioned on-disk envelope for a trained model (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub model: Model,
}

impl ModelFile {
    pub fn new(model: Model) -> Self {
        ModelFile { format_version: MODEL_FORMAT_VERSION, model }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut file: ModelFile = serde_json::from_str(s)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!("unsupported model format version {}", file.format_version)));
        }
        if let Model::Svm(c) = &mut file.model {
            c.tfidf = std::mem::replace(&mut c.tfidf, placeholder_tfidf()).finish_load()?;
            if c.ovo.dim != c.tfidf.vocab_size() {
                return Err(Error::InvalidInput("model weight dimension does not match vocabulary".into()));
            }
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

fn placeholder_tfidf() -> TfIdfModel {
    TfIdfModel::build(&[TokenSequence::default()], 1, None).expect("empty vocabulary")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ovo::ClassWeight;

    fn toy() -> (Vec<&'static str>, Vec<&'static str>) {
        let texts = vec![
            "please call the lifeline tonight",
            "call the hotline if you need help",
            "prevention saves lives, call now",
            "man found dead police report suicide",
            "breaking news singer died by suicide",
            "police confirm suicide of local man",
            "suicide squad movie was fun",
            "that exam was academic suicide",
            "suicide workout at the gym lol",
        ];
        let labels = vec![
            "prevention", "prevention", "prevention",
            "suicide_cases", "suicide_cases", "suicide_cases",
            "irrelevant", "irrelevant", "irrelevant",
        ];
        (texts, labels)
    }

    #[test]
    fn train_predict_and_round_trip() {
        let (texts, labels) = toy();
        let config = SvmConfig { c: 1.0, class_weight: ClassWeight::Balanced, ngram_max: 2, top_n: Some(50) };
        let (clf, info) = TextClassifier::train(&texts, &labels, Level::Task1, &config, &PreprocessConfig::default(), &SolverParams::default()).unwrap();
        assert_eq!(info.pairs.len(), 3);
        assert_eq!(clf.ovo.classes, vec!["prevention", "suicide_cases", "irrelevant"]);
        for (t, l) in texts.iter().zip(&labels) {
            assert_eq!(clf.predict(t), *l);
        }
        let file = ModelFile::new(Model::Svm(Box::new(clf.clone())));
        let back = ModelFile::from_json(&file.to_json().unwrap()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.model.predict("call the lifeline"), clf.predict("call the lifeline"));
    }

    #[test]
    fn majority_model_is_constant() {
        let m = Model::majority(&["irrelevant", "coping", "irrelevant"], Level::Task1).unwrap();
        assert_eq!(m.predict("anything"), "irrelevant");
        assert_eq!(m.predict("call the lifeline"), "irrelevant");
    }

    #[test]
    fn version_mismatch_rejected() {
        let m = ModelFile::new(Model::majority(&["coping"], Level::Task1).unwrap());
        let json = m.to_json().unwrap().replace("\"format_version\":1", "\"format_version\":99");
        assert!(ModelFile::from_json(&json).is_err());
    }
}
