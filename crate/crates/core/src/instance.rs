//! JSON instance files.
//!
//! Complex numbers are `[re, im]` pairs and matrices are arrays of rows. An
//! instance holds named tables of flags, algebras, maps, modules and inducing
//! maps; later tables refer to earlier ones by name, and flags may be given
//! either by name or inline. Structure constants are never stored: they are
//! recomputed from the basis on load.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize, Serializer};

use crate::cp_maps::LocalCPMap;
use crate::error::{Error, Result};
use crate::flagspace::Flag;
use crate::hilbert_module::{CPInducingMap, HilbertModule};
use crate::linalg::{c, CMat};
use crate::local_algebra::LocalAlgebra;
use crate::Tolerances;

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMat) -> JsonMatrix {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|k| [m[(r, k)].re, m[(r, k)].im]).collect()).collect()
}

/// Rows must all have the same length; an empty list is a `0 x 0` matrix.
pub fn matrix_from_json(rows: &JsonMatrix) -> Result<CMat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse("matrix rows have different lengths".into()));
    }
    if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Parse("matrix has non-finite entries".into()));
    }
    Ok(CMat::from_fn(nrows, ncols, |r, k| c(rows[r][k][0], rows[r][k][1])))
}

pub fn ser_matrix<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
    matrix_to_json(m).serialize(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagJson {
    pub ambient: usize,
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<JsonMatrix>,
}

impl FlagJson {
    pub fn from_flag(f: &Flag) -> Self {
        FlagJson { ambient: f.ambient(), dims: f.dims().to_vec(), frame: f.explicit_frame().map(matrix_to_json) }
    }

    pub fn to_flag(&self) -> Result<Flag> {
        let frame = self.frame.as_ref().map(matrix_from_json).transpose()?;
        Flag::new(self.ambient, self.dims.clone(), frame)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FlagRef {
    Named(String),
    Inline(FlagJson),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraJson {
    pub domain: FlagRef,
    pub basis: Vec<JsonMatrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapJson {
    pub source: String,
    pub target: FlagRef,
    pub images: Vec<JsonMatrix>,
    pub witness: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleJson {
    pub algebra: String,
    pub carrier: FlagRef,
    pub basis: Vec<JsonMatrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InducingJson {
    pub module: String,
    pub phi: String,
    pub target: FlagRef,
    pub images: Vec<JsonMatrix>,
}

/// The on-disk form of an instance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceJson {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub flags: BTreeMap<String, FlagJson>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub algebras: BTreeMap<String, AlgebraJson>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub maps: BTreeMap<String, MapJson>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub modules: BTreeMap<String, ModuleJson>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub inducing_maps: BTreeMap<String, InducingJson>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Reference matrices recorded by generators, e.g. a sampled derivative.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ground_truth: BTreeMap<String, JsonMatrix>,
}

impl InstanceJson {
    pub fn add_flag(&mut self, name: &str, flag: &Flag) -> FlagRef {
        self.flags.insert(name.to_string(), FlagJson::from_flag(flag));
        FlagRef::Named(name.to_string())
    }

    pub fn add_algebra(&mut self, name: &str, domain: FlagRef, alg: &LocalAlgebra) {
        let basis = alg.basis().iter().map(|b| matrix_to_json(b.matrix())).collect();
        self.algebras.insert(name.to_string(), AlgebraJson { domain, basis });
    }

    pub fn add_map(&mut self, name: &str, source: &str, target: FlagRef, map: &LocalCPMap) {
        let images = map.images().iter().map(|b| matrix_to_json(b.matrix())).collect();
        let witness = map.witness().to_vec();
        self.maps.insert(name.to_string(), MapJson { source: source.to_string(), target, images, witness });
    }

    pub fn add_module(&mut self, name: &str, algebra: &str, carrier: FlagRef, module: &HilbertModule) {
        let basis = module.basis().iter().map(|b| matrix_to_json(b.matrix())).collect();
        self.modules.insert(name.to_string(), ModuleJson { algebra: algebra.to_string(), carrier, basis });
    }

    pub fn add_inducing(&mut self, name: &str, module: &str, phi: &str, target: FlagRef, map: &CPInducingMap) {
        let images = map.images().iter().map(|b| matrix_to_json(b.matrix())).collect();
        self.inducing_maps
            .insert(name.to_string(), InducingJson { module: module.to_string(), phi: phi.to_string(), target, images });
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }
}

/// An instance with every reference resolved and every object validated.
#[derive(Clone, Debug)]
pub struct Instance {
    pub flags: BTreeMap<String, Flag>,
    pub algebras: BTreeMap<String, Arc<LocalAlgebra>>,
    pub maps: BTreeMap<String, LocalCPMap>,
    pub modules: BTreeMap<String, Arc<HilbertModule>>,
    pub inducing_maps: BTreeMap<String, CPInducingMap>,
    pub tolerances: Tolerances,
    pub ground_truth: BTreeMap<String, CMat>,
}

fn lookup<'a, T>(table: &'a BTreeMap<String, T>, kind: &str, name: &str) -> Result<&'a T> {
    table.get(name).ok_or_else(|| Error::Param(format!("unknown {kind} '{name}'")))
}

impl Instance {
    pub fn parse(text: &str) -> Result<Instance> {
        let json: InstanceJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&json)
    }

    pub fn load(path: &Path) -> Result<Instance> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn from_json(json: &InstanceJson) -> Result<Instance> {
        let tol = json.tolerances;
        let mut flags = BTreeMap::new();
        for (name, f) in &json.flags {
            flags.insert(name.clone(), f.to_flag()?);
        }
        let resolve = |r: &FlagRef| -> Result<Flag> {
            match r {
                FlagRef::Named(n) => lookup(&flags, "flag", n).cloned(),
                FlagRef::Inline(f) => f.to_flag(),
            }
        };
        let matrices = |ms: &[JsonMatrix]| ms.iter().map(matrix_from_json).collect::<Result<Vec<_>>>();

        let mut algebras = BTreeMap::new();
        for (name, a) in &json.algebras {
            let alg = LocalAlgebra::from_basis(&resolve(&a.domain)?, matrices(&a.basis)?, &tol)?;
            algebras.insert(name.clone(), Arc::new(alg));
        }
        let mut maps = BTreeMap::new();
        for (name, m) in &json.maps {
            let source = lookup(&algebras, "algebra", &m.source)?.clone();
            let map = LocalCPMap::new(source, &resolve(&m.target)?, matrices(&m.images)?, m.witness.clone(), &tol)?;
            maps.insert(name.clone(), map);
        }
        let mut modules = BTreeMap::new();
        for (name, m) in &json.modules {
            let alg = lookup(&algebras, "algebra", &m.algebra)?.clone();
            let module = HilbertModule::new(alg, &resolve(&m.carrier)?, matrices(&m.basis)?, &tol)?;
            modules.insert(name.clone(), Arc::new(module));
        }
        let mut inducing_maps = BTreeMap::new();
        for (name, c) in &json.inducing_maps {
            let module = lookup(&modules, "module", &c.module)?.clone();
            let phi = lookup(&maps, "map", &c.phi)?.clone();
            let map = CPInducingMap::new(module, phi, &resolve(&c.target)?, matrices(&c.images)?, &tol)?;
            inducing_maps.insert(name.clone(), map);
        }
        let ground_truth = json.ground_truth.iter().map(|(k, v)| Ok((k.clone(), matrix_from_json(v)?))).collect::<Result<_>>()?;
        Ok(Instance { flags, algebras, maps, modules, inducing_maps, tolerances: tol, ground_truth })
    }

    pub fn map(&self, name: &str) -> Result<&LocalCPMap> {
        lookup(&self.maps, "map", name)
    }

    pub fn inducing(&self, name: &str) -> Result<&CPInducingMap> {
        lookup(&self.inducing_maps, "inducing map", name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ragged_matrix_is_a_parse_error() {
        let rows: JsonMatrix = vec![vec![[1.0, 0.0]], vec![]];
        assert!(matches!(matrix_from_json(&rows), Err(Error::Parse(_))));
    }

    #[test]
    fn minimal_instance_round_trips() {
        let text = r#"{
            "flags": {"F": {"ambient": 2, "dims": [1, 2]}},
            "algebras": {"A": {"domain": "F", "basis": [[[[1,0],[0,0]],[[0,0],[0,0]]], [[[0,0],[0,0]],[[0,0],[1,0]]]]}},
            "maps": {"id": {"source": "A", "target": "F", "witness": [1, 2],
                     "images": [[[[1,0],[0,0]],[[0,0],[0,0]]], [[[0,0],[0,0]],[[0,0],[1,0]]]]}}
        }"#;
        let inst = Instance::parse(text).unwrap();
        assert_eq!(inst.algebras["A"].dim(), 2);
        assert_eq!(inst.map("id").unwrap().witness(), &[1, 2]);
        assert!(matches!(inst.map("nope"), Err(Error::Param(_))));
        let json: InstanceJson = serde_json::from_str(text).unwrap();
        let again: InstanceJson = serde_json::from_str(&json.to_json_string()).unwrap();
        assert_eq!(json, again);
    }

    #[test]
    fn inline_flags_and_bad_references() {
        let text = r#"{"algebras": {"A": {"domain": {"ambient": 1, "dims": [1]}, "basis": [[[[1,0]]]]}},
                       "maps": {"m": {"source": "B", "target": "F", "images": [], "witness": [1]}}}"#;
        assert!(matches!(Instance::parse(text), Err(Error::Param(_))));
        assert!(matches!(Instance::parse("{not json"), Err(Error::Parse(_))));
    }
}
