//! Named oracle constructors, selectable at runtime.

use std::collections::BTreeMap;
use std::path::Path;

use super::io::read_answer_table;
use super::oracle::{GeometricOracle, PermissiveOracle, RelationOracle, ScriptedOracle};
use crate::error::{Error, Result};
use crate::grid::LabelMap;

/// Everything an oracle constructor may draw on. Factories take what they
/// need and complain about what is missing.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleInputs<'a> {
    pub labels: Option<&'a LabelMap>,
    pub roster: &'a [String],
    pub answers: Option<&'a Path>,
}

pub trait OracleFactory: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn build(&self, inputs: &OracleInputs<'_>) -> Result<Box<dyn RelationOracle>>;
}

struct GeometricFactory;

impl OracleFactory for GeometricFactory {
    fn name(&self) -> &'static str {
        "geometric"
    }

    fn description(&self) -> &'static str {
        "answers from label-map centroids"
    }

    fn build(&self, inputs: &OracleInputs<'_>) -> Result<Box<dyn RelationOracle>> {
        let labels = inputs
            .labels
            .ok_or_else(|| Error::InvalidConfig("geometric oracle needs a label map".into()))?;
        Ok(Box::new(GeometricOracle::new(labels, inputs.roster)?))
    }
}

struct ScriptedFactory;

impl OracleFactory for ScriptedFactory {
    fn name(&self) -> &'static str {
        "scripted"
    }

    fn description(&self) -> &'static str {
        "replays a recorded answer table"
    }

    fn build(&self, inputs: &OracleInputs<'_>) -> Result<Box<dyn RelationOracle>> {
        let path = inputs
            .answers
            .ok_or_else(|| Error::InvalidConfig("scripted oracle needs an answer file".into()))?;
        Ok(Box::new(ScriptedOracle::new(read_answer_table(path)?)))
    }
}

struct PermissiveFactory;

impl OracleFactory for PermissiveFactory {
    fn name(&self) -> &'static str {
        "permissive"
    }

    fn description(&self) -> &'static str {
        "affirms every relation"
    }

    fn build(&self, _: &OracleInputs<'_>) -> Result<Box<dyn RelationOracle>> {
        Ok(Box::new(PermissiveOracle))
    }
}

pub struct OracleRegistry {
    factories: BTreeMap<&'static str, Box<dyn OracleFactory>>,
}

impl OracleRegistry {
    pub fn empty() -> Self {
        OracleRegistry {
            factories: BTreeMap::new(),
        }
    }

    /// Registry with `geometric`, `scripted` and `permissive`.
    pub fn with_builtins() -> Self {
        let mut registry = Self::empty();
        registry.register(Box::new(GeometricFactory));
        registry.register(Box::new(ScriptedFactory));
        registry.register(Box::new(PermissiveFactory));
        registry
    }

    /// Adds a factory, replacing any previous one with the same name.
    pub fn register(&mut self, factory: Box<dyn OracleFactory>) {
        self.factories.insert(factory.name(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn get(&self, name: &str) -> Option<&dyn OracleFactory> {
        self.factories.get(name).map(|f| f.as_ref())
    }

    pub fn build(&self, name: &str, inputs: &OracleInputs<'_>) -> Result<Box<dyn RelationOracle>> {
        self.get(name)
            .ok_or_else(|| Error::UnknownOracle(name.to_string()))?
            .build(inputs)
    }
}

impl Default for OracleRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
