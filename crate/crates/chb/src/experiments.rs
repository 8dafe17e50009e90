//! Initial data and defaults of the three shipped experiments.

use std::sync::Arc;

use chb_core::fespace::{interpolate_nodal, ScalarField};
use chb_core::material::{Eigenstrain, Endpoints, MaterialParams, Mobility, Source};
use chb_core::mesh::SimplicialMesh;
use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentName;
use crate::{Error, Result};

/// Initial phase field; displacement and fluid content start at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialData {
    /// mean + amplitude·sin(2πx)sin(2πy).
    Sine { mean: f64, amplitude: f64 },
    /// (n − 1) − Σ tanh(ℬᵢ/width) with ℬᵢ = |x − cᵢ|² − radius²: phase 1
    /// inside the n discs, −1 outside.
    Bubbles {
        centres: Vec<[f64; 2]>,
        radius: f64,
        width: f64,
    },
    Constant { value: f64 },
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            InitialData::Sine { mean, amplitude } => mean.is_finite() && amplitude.is_finite(),
            InitialData::Bubbles { centres, radius, width } => {
                !centres.is_empty() && *radius > 0.0 && *width > 0.0 && centres.iter().flatten().all(|c| c.is_finite())
            }
            InitialData::Constant { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid initial data {self:?}")))
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            InitialData::Sine { mean, amplitude } => mean + amplitude * (2.0 * PI * x).sin() * (2.0 * PI * y).sin(),
            InitialData::Bubbles { centres, radius, width } => {
                let n = centres.len() as f64;
                let sum: f64 = centres
                    .iter()
                    .map(|c| {
                        let b = (x - c[0]).powi(2) + (y - c[1]).powi(2) - radius * radius;
                        (b / width).tanh()
                    })
                    .sum();
                n - 1.0 - sum
            }
            InitialData::Constant { value } => *value,
        }
    }

    pub fn interpolate(&self, mesh: &Arc<SimplicialMesh>) -> Result<ScalarField> {
        Ok(interpolate_nodal(mesh.clone(), |x, y| self.eval(x, y))?)
    }
}

/// Defaults of a named experiment.
#[derive(Debug, Clone)]
pub struct Defaults {
    pub level: usize,
    pub tau: f64,
    pub final_time: f64,
    pub params: MaterialParams,
    /// `None` when the configuration must provide it.
    pub initial: Option<InitialData>,
    pub output_dir: &'static str,
    pub snapshot_stride: usize,
    pub snapshot_times: Vec<f64>,
}

pub fn convergence_initial() -> InitialData {
    InitialData::Sine {
        mean: -0.1,
        amplitude: 0.01,
    }
}

/// Table 1 with the tumour modifications: logistic growth, degenerate
/// mobility, no viscosity, eigenstrain ½ζ(φ + 1) and stiffer host tissue.
pub fn tumour_params() -> MaterialParams {
    MaterialParams {
        stiffness: Endpoints::new(
            [[6.0, 4.0, 0.0], [4.0, 6.0, 0.0], [0.0, 0.0, 1.0]],
            [[1.55, 0.38, 0.0], [0.38, 1.55, 0.0], [0.0, 0.0, 0.58]],
        ),
        viscosity: Endpoints::constant([[0.0; 3]; 3]),
        eigenstrain: Eigenstrain::half_shifted(0.3),
        mobility: Mobility::Degenerate {
            floor: 1e-14,
            scale: 1.0 / 16.0,
        },
        phase_source: Source::Logistic { rate: 2.5 },
        ..MaterialParams::default()
    }
}

pub fn defaults(name: ExperimentName) -> Defaults {
    match name {
        ExperimentName::Convergence => Defaults {
            level: 4,
            tau: 1e-5,
            final_time: 0.01,
            params: MaterialParams::default(),
            initial: Some(convergence_initial()),
            output_dir: "convergence",
            snapshot_stride: 100,
            snapshot_times: Vec::new(),
        },
        ExperimentName::Lshape => Defaults {
            level: 7,
            tau: 1e-3,
            final_time: 2.0,
            params: MaterialParams::default(),
            initial: Some(InitialData::Bubbles {
                centres: vec![[0.3, 0.3], [0.3, 0.7], [0.7, 0.3]],
                radius: 0.15,
                width: 0.005,
            }),
            output_dir: "lshape",
            snapshot_stride: 100,
            snapshot_times: vec![0.0, 0.02, 0.06],
        },
        ExperimentName::Tumour => Defaults {
            level: 7,
            tau: 1e-3,
            final_time: 1.0,
            params: tumour_params(),
            initial: Some(InitialData::Bubbles {
                centres: vec![[0.5, 0.5]],
                radius: 0.15,
                width: 0.005,
            }),
            output_dir: "tumour",
            snapshot_stride: 0,
            snapshot_times: vec![0.0, 0.5, 0.75, 1.0],
        },
        ExperimentName::Custom => Defaults {
            level: 4,
            tau: 1e-3,
            final_time: 0.1,
            params: MaterialParams::default(),
            initial: None,
            output_dir: "custom",
            snapshot_stride: 10,
            snapshot_times: Vec::new(),
        },
    }
}

/// Number of edge-connected components of the cells whose mean nodal φ is
/// positive.
pub fn positive_components(phi: &ScalarField) -> usize {
    let mesh = phi.mesh();
    let v = phi.values();
    let positive: Vec<bool> = mesh.cells().iter().map(|c| v[c[0]] + v[c[1]] + v[c[2]] > 0.0).collect();
    let mut uf = UnionFind::<usize>::new(mesh.n_cells());
    let mut edges = std::collections::HashMap::new();
    for (k, c) in mesh.cells().iter().enumerate() {
        if !positive[k] {
            continue;
        }
        for (a, b) in [(c[0], c[1]), (c[1], c[2]), (c[2], c[0])] {
            if let Some(other) = edges.insert((a.min(b), a.max(b)), k) {
                uf.union(k, other);
            }
        }
    }
    let mut roots: Vec<usize> = (0..mesh.n_cells()).filter(|&k| positive[k]).map(|k| uf.find(k)).collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}
