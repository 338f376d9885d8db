//! TOML experiment configuration. Every section is optional and every field
//! has a fixed default; unknown keys are rejected with their path.
//!
//! ```toml
//! [cci]
//! iterations = 3
//! branching = 10
//! seed = 7
//!
//! [embed]
//! dim = 32
//! noise_sigma = 0.05
//! seed = 11
//!
//! [sweep]
//! edge_ratios = [2.0, 4.0, 8.0]
//! ```

use std::path::{Path, PathBuf};

use manifold_core::alignment::AlignMethod;
use manifold_core::loss::FitConfig;
use manifold_core::retrieval::{RetrievalMethod, RetrievalMode, RetrievalProtocol};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub cci: CciSection,
    pub embed: EmbedSection,
    pub align: AlignSection,
    pub graph: GraphSection,
    pub label: LabelSection,
    pub loss: LossSection,
    pub smooth: SmoothSection,
    pub sweep: SweepSection,
    pub input: InputSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CciSection {
    pub iterations: usize,
    pub branching: usize,
    pub seed: u64,
    pub min_objects: usize,
    pub max_objects: usize,
}

impl Default for CciSection {
    fn default() -> Self {
        Self {
            iterations: 4,
            branching: 10,
            seed: 0,
            min_objects: 3,
            max_objects: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelScheme {
    /// The scene's iteration-1 ancestor.
    Branch,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbedSection {
    pub dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub label: LabelScheme,
}

impl Default for EmbedSection {
    fn default() -> Self {
        Self {
            dim: 32,
            noise_sigma: 0.05,
            seed: 0,
            label: LabelScheme::Branch,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveSide {
    Image,
    Text,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlignSection {
    pub method: AlignMethod,
    #[serde(rename = "move")]
    pub moved: MoveSide,
    pub renormalize: bool,
}

impl Default for AlignSection {
    fn default() -> Self {
        Self {
            method: AlignMethod::Procrustes,
            moved: MoveSide::Text,
            renormalize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphSection {
    /// Fixed threshold; takes precedence over `target_edge_ratio`.
    pub epsilon: Option<f64>,
    /// Edges per image vertex, calibrated on the image set.
    pub target_edge_ratio: f64,
    /// Join text vertices into the graph.
    pub include_text: bool,
}

impl Default for GraphSection {
    fn default() -> Self {
        Self {
            epsilon: None,
            target_edge_ratio: 4.0,
            include_text: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelSection {
    pub n_way: usize,
    pub k_shot: usize,
    pub knn_k: usize,
    pub seed: u64,
    pub retrievability_mode: Option<RetrievalMode>,
    pub multi_label: bool,
    pub methods: Vec<RetrievalMethod>,
}

impl Default for LabelSection {
    fn default() -> Self {
        Self {
            n_way: 5,
            k_shot: 5,
            knn_k: 1,
            seed: 0,
            retrievability_mode: None,
            multi_label: false,
            methods: vec![RetrievalMethod::Euclidean, RetrievalMethod::Geodesic],
        }
    }
}

impl LabelSection {
    pub fn protocol(&self) -> RetrievalProtocol {
        RetrievalProtocol {
            n_way: self.n_way,
            k_shot: self.k_shot,
            knn_k: self.knn_k,
            seed: self.seed,
            retrievability_mode: self.retrievability_mode,
            multi_label: self.multi_label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossSection {
    pub steps: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for LossSection {
    fn default() -> Self {
        let f = FitConfig::default();
        Self {
            steps: f.steps,
            lr: f.learning_rate,
            batch_size: f.batch_size,
            seed: 0,
        }
    }
}

impl LossSection {
    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            steps: self.steps,
            learning_rate: self.lr,
            batch_size: self.batch_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoothSection {
    /// Write up to this many counted paths to `paths.jsonl` (0 disables).
    pub dump_paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Explicit thresholds; when empty they are calibrated from `edge_ratios`.
    pub thresholds: Vec<f64>,
    pub edge_ratios: Vec<f64>,
    /// Seed of the random baseline vectors.
    pub random_seed: u64,
    /// Fit text vectors with the ranking loss before aligning.
    pub fit_text: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            thresholds: Vec::new(),
            edge_ratios: vec![2.0, 4.0, 8.0],
            random_seed: 0,
            fit_text: true,
        }
    }
}

/// Stage inputs; relative paths resolve against the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputSection {
    pub dataset: PathBuf,
    pub images: PathBuf,
    pub texts: PathBuf,
    pub aligned_images: PathBuf,
    pub aligned_texts: PathBuf,
    pub vertices: PathBuf,
    pub graph: PathBuf,
}

impl Default for InputSection {
    fn default() -> Self {
        Self {
            dataset: "dataset.jsonl".into(),
            images: "images.emb".into(),
            texts: "texts.emb".into(),
            aligned_images: "images_aligned.emb".into(),
            aligned_texts: "texts_aligned.emb".into(),
            vertices: "vertices.emb".into(),
            graph: "graph.edges".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            formats: vec![Format::Json, Format::Csv],
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let de = toml::Deserializer::new(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            CliError::Config {
                path: path.to_path_buf(),
                field: if field == "." { None } else { Some(field) },
                message: e.into_inner().message().trim().to_string(),
            }
        })?;
        cfg.validate(path)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            field: None,
            message: format!("cannot read config file: {e}"),
        })?;
        Self::parse(&text, path)
    }

    fn validate(&self, path: &Path) -> Result<(), CliError> {
        let bad = |field: &str, message: String| CliError::Config {
            path: path.to_path_buf(),
            field: Some(field.to_string()),
            message,
        };
        if self.cci.branching == 0 {
            return Err(bad("cci.branching", "must be at least 1".into()));
        }
        if self.cci.min_objects == 0 || self.cci.min_objects > self.cci.max_objects {
            return Err(bad(
                "cci.min_objects",
                "need 1 <= min_objects <= max_objects".into(),
            ));
        }
        if !(self.embed.noise_sigma >= 0.0 && self.embed.noise_sigma.is_finite()) {
            return Err(bad("embed.noise_sigma", "must be finite and non-negative".into()));
        }
        if let Some(eps) = self.graph.epsilon {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(bad("graph.epsilon", "must be positive".into()));
            }
        }
        if !(self.graph.target_edge_ratio > 0.0 && self.graph.target_edge_ratio.is_finite()) {
            return Err(bad("graph.target_edge_ratio", "must be positive".into()));
        }
        if self.label.n_way < 2 {
            return Err(bad("label.n_way", "must be at least 2".into()));
        }
        if self.label.k_shot == 0 {
            return Err(bad("label.k_shot", "must be at least 1".into()));
        }
        if self.label.knn_k == 0 {
            return Err(bad("label.knn_k", "must be at least 1".into()));
        }
        if !(self.loss.lr >= 0.0 && self.loss.lr.is_finite()) {
            return Err(bad("loss.lr", "must be finite and non-negative".into()));
        }
        if self.loss.batch_size == 0 {
            return Err(bad("loss.batch_size", "must be at least 1".into()));
        }
        if self.sweep.thresholds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("sweep.thresholds", "must be strictly ascending".into()));
        }
        if self.sweep.thresholds.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(bad("sweep.thresholds", "must be positive".into()));
        }
        if self.sweep.thresholds.is_empty() && self.sweep.edge_ratios.is_empty() {
            return Err(bad("sweep.edge_ratios", "give thresholds or edge ratios".into()));
        }
        if self
            .sweep
            .edge_ratios
            .iter()
            .any(|&r| !(r > 0.0 && r.is_finite()))
        {
            return Err(bad("sweep.edge_ratios", "must be positive".into()));
        }
        Ok(())
    }

    /// Canonical JSON of the fully resolved configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
