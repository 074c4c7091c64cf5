//! A model loaded together with its bounds and partition tables.

use std::path::{Path, PathBuf};

use crate::criteria::CriteriaInput;
use crate::model::Model;
use crate::parser::{load_model, parse_bounds, parse_partitions, BoundsSpec, ModelError, ParseError, PartitionTable};
use crate::symbolic::{BoundsError, Universe};

#[derive(Debug, thiserror::Error)]
pub enum ProjectError {
    #[error("{path}: {err}")]
    Io { path: PathBuf, err: std::io::Error },
    #[error("{path}:{err}")]
    Model { path: String, err: ModelError },
    #[error("{path}:{err}")]
    Syntax { path: String, err: ParseError },
    #[error("bounds: {0}")]
    Bounds(#[from] BoundsError),
}

impl ProjectError {
    /// Parse and validation failures, as opposed to I/O or bound problems.
    pub fn is_parse(&self) -> bool {
        matches!(self, ProjectError::Model { .. } | ProjectError::Syntax { .. })
    }
}

pub fn read(path: &Path) -> Result<String, ProjectError> {
    std::fs::read_to_string(path).map_err(|err| ProjectError::Io { path: path.to_path_buf(), err })
}

pub struct Project {
    pub model: Model,
    pub bounds: BoundsSpec,
    pub universe: Universe,
    pub tables: Vec<PartitionTable>,
}

impl Project {
    pub fn from_sources(model: &str, bounds: Option<&str>, parts: Option<&str>) -> Result<Project, ProjectError> {
        let model = load_model(model).map_err(|err| ProjectError::Model { path: "model".into(), err })?;
        let bounds = match bounds {
            Some(src) => parse_bounds(src).map_err(|err| ProjectError::Syntax { path: "bounds".into(), err })?,
            None => BoundsSpec::default(),
        };
        let tables = match parts {
            Some(src) => parse_partitions(src).map_err(|err| ProjectError::Syntax { path: "parts".into(), err })?,
            None => Vec::new(),
        };
        let universe = Universe::new(&model, &bounds)?;
        Ok(Project { model, bounds, universe, tables })
    }

    /// Loads a model file. Bounds and partition files default to siblings
    /// with the same stem and the `.bounds` / `.parts` extensions.
    pub fn load(model: &Path, bounds: Option<&Path>, parts: Option<&Path>) -> Result<Project, ProjectError> {
        let sibling = |ext: &str| {
            let p = model.with_extension(ext);
            p.exists().then_some(p)
        };
        let bounds = bounds.map(Path::to_path_buf).or_else(|| sibling("bounds"));
        let parts = parts.map(Path::to_path_buf).or_else(|| sibling("parts"));
        let name = |p: &Path| p.display().to_string();
        let src = read(model)?;
        let mut project = Project::from_sources(&src, None, None).map_err(|e| match e {
            ProjectError::Model { err, .. } => ProjectError::Model { path: name(model), err },
            other => other,
        })?;
        if let Some(b) = &bounds {
            project.bounds = parse_bounds(&read(b)?).map_err(|err| ProjectError::Syntax { path: name(b), err })?;
            project.universe = Universe::new(&project.model, &project.bounds)?;
        }
        if let Some(p) = &parts {
            project.tables = parse_partitions(&read(p)?).map_err(|err| ProjectError::Syntax { path: name(p), err })?;
        }
        Ok(project)
    }

    pub fn criteria_input(&self, include_otherwise: bool) -> CriteriaInput<'_> {
        CriteriaInput { model: &self.model, universe: &self.universe, tables: &self.tables, include_otherwise }
    }
}
