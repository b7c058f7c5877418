//! Scenario configuration: a TOML description of material, loading,
//! discretization, and verification settings, validated on load.
//!
//! A scenario either drives a single material point (no `[mesh]` section)
//! or a boundary-driven cube. Strain programs (`uniaxial`, `shear`,
//! `custom`) work in both modes: at a point they prescribe the deviatoric
//! strain path directly, on a mesh they prescribe the matching affine
//! boundary displacement. The `torsion` program twists a meshed cube and
//! has no point form.
//!
//! Three ready-made scenarios ship with the crate under `scenarios/` and
//! are also reachable by name through [`named_scenario`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::evolution::{AdmissibilityPolicy, PointDrive, StaggerSettings, Waveform};
use crate::fem::{BoundarySpec, CoupledSystem};
use crate::material::{MaterialParams, PointState};
use crate::mesh::{Face, GridMesh};
use crate::tensor::{DevSym3, Vec3};

pub const UNIAXIAL_CYCLIC_TOML: &str = include_str!("../scenarios/uniaxial-cyclic.toml");
pub const SHEAR_CYCLIC_TOML: &str = include_str!("../scenarios/shear-cyclic.toml");
pub const TORSION_CUBE_TOML: &str = include_str!("../scenarios/torsion-cube.toml");

/// The bundled scenario library.
pub const SCENARIO_NAMES: [&str; 3] = ["uniaxial-cyclic", "shear-cyclic", "torsion-cube"];

/// Returns the TOML text of a bundled scenario.
pub fn named_scenario(name: &str) -> Option<&'static str> {
    match name {
        "uniaxial-cyclic" => Some(UNIAXIAL_CYCLIC_TOML),
        "shear-cyclic" => Some(SHEAR_CYCLIC_TOML),
        "torsion-cube" => Some(TORSION_CUBE_TOML),
        _ => None,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config:\n{}", .0.join("\n"))]
    Validation(Vec<String>),
}

/// Time stepping and staggered-iteration controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// final time [time]
    pub t_end: f64,
    /// step size [time]
    pub dt: f64,
    #[serde(default = "default_stagger_rel_tol")]
    pub stagger_rel_tol: f64,
    #[serde(default = "default_stagger_max_iters")]
    pub stagger_max_iters: usize,
}

fn default_stagger_rel_tol() -> f64 {
    StaggerSettings::default().rel_tol
}

fn default_stagger_max_iters() -> usize {
    StaggerSettings::default().max_iters
}

impl RunSection {
    pub fn stagger(&self) -> StaggerSettings {
        StaggerSettings {
            rel_tol: self.stagger_rel_tol,
            max_iters: self.stagger_max_iters,
        }
    }
}

/// The loading programs of the scenario library.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Program {
    /// deviator of a uniaxial stretch, `dev(e1 (x) e1)` normalized
    Uniaxial,
    /// simple shear, `(e1 (x) e2 + e2 (x) e1) / sqrt(2)`
    Shear,
    /// explicit deviatoric strain direction from the `direction` key
    Custom,
    /// twist of a meshed cube about its vertical center axis
    Torsion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadingSection {
    pub program: Program,
    /// peak strain norm [1], or peak twist per unit height [1/length]
    pub amplitude: f64,
    pub waveform: Waveform,
    /// deviatoric direction (xx, yy, xy, xz, yz) for `program = "custom"`;
    /// normalized on load
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<[f64; 5]>,
}

fn dev_from_components(v: &[f64; 5]) -> DevSym3 {
    DevSym3::new(v[0], v[1], v[2], v[3], v[4])
}

impl LoadingSection {
    /// Normalized strain direction of a point-capable program.
    pub fn strain_direction(&self) -> Result<DevSym3, String> {
        match self.program {
            Program::Uniaxial => {
                let s = 1.0 / 6.0_f64.sqrt();
                Ok(DevSym3::new(2.0 * s, -s, 0.0, 0.0, 0.0))
            }
            Program::Shear => Ok(DevSym3::new(0.0, 0.0, 0.5_f64.sqrt(), 0.0, 0.0)),
            Program::Custom => {
                let dir = self
                    .direction
                    .as_ref()
                    .map(dev_from_components)
                    .ok_or("program \"custom\" needs a direction key")?;
                let n = dir.norm();
                if n <= 1e-14 {
                    return Err("custom direction must be nonzero".into());
                }
                Ok((1.0 / n) * dir)
            }
            Program::Torsion => {
                Err("torsion drives a meshed cube and has no point strain path".into())
            }
        }
    }

    pub fn point_drive(&self) -> Result<PointDrive, String> {
        Ok(PointDrive {
            direction: self.strain_direction()?,
            amplitude: self.amplitude,
            waveform: self.waveform,
        })
    }
}

/// Structured-grid discretization and displacement-controlled faces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    /// elements per axis
    pub divisions: [usize; 3],
    /// box edge lengths [length]
    #[serde(default = "default_extents")]
    pub extents: [f64; 3],
    pub dirichlet_faces: Vec<Face>,
}

fn default_extents() -> [f64; 3] {
    [1.0, 1.0, 1.0]
}

/// Uniform initial internal variables, components (xx, yy, xy, xz, yz).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub eps_p: [f64; 5],
    pub b: [f64; 5],
    /// whether inadmissible initial data aborts the run or only warns
    pub policy: AdmissibilityPolicy,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            eps_p: [0.0; 5],
            b: [0.0; 5],
            policy: AdmissibilityPolicy::Fail,
        }
    }
}

impl InitialSection {
    pub fn state(&self) -> PointState {
        PointState {
            eps_p: dev_from_components(&self.eps_p),
            b: dev_from_components(&self.b),
        }
    }
}

/// Relaxation coefficients for the sweep-nu subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// strictly decreasing, all positive
    pub nus: Vec<f64>,
}

/// Which checks a run performs and reports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub trace_conservation: bool,
    pub backstress_bound: bool,
    pub energy_inequality: bool,
    pub coercivity: bool,
    pub coercivity_samples: usize,
    /// seed of the random coercivity probe
    pub seed: u64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            trace_conservation: true,
            backstress_bound: true,
            energy_inequality: true,
            coercivity: false,
            coercivity_samples: 32,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// output directory; overridden by the command line
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// write a field snapshot every this many steps (0 = final state only)
    pub snapshot_stride: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub material: MaterialParams,
    pub run: RunSection,
    pub loading: LoadingSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshSection>,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub output: OutputSection,
}

/// A parsed and validated scenario with its non-fatal findings.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub warnings: Vec<String>,
}

pub fn parse_config(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<LoadedConfig, ConfigError> {
    let config: ScenarioConfig = toml::from_str(text)?;
    let warnings = config.validate()?;
    Ok(LoadedConfig { config, warnings })
}

impl ScenarioConfig {
    /// Checks every invariant the solver relies on. Returns the warnings
    /// of degenerate but legal settings; collects all violations instead
    /// of stopping at the first.
    pub fn validate(&self) -> Result<Vec<String>, ConfigError> {
        let mut violations = Vec::new();
        let mut warnings = Vec::new();

        let material_ok = match self.material.validate() {
            Ok(()) => true,
            Err(e) => {
                violations.push(format!("material: {e}"));
                false
            }
        };
        if material_ok && self.material.d == 0.0 {
            warnings.push(
                "material: recovery coefficient d = 0 makes the backstress saturation \
                 radius infinite; the uniform backstress bound is vacuous and the model \
                 reduces to linear kinematic hardening"
                    .into(),
            );
        }

        if !(self.run.t_end > 0.0 && self.run.t_end.is_finite()) {
            violations.push(format!(
                "run: final time must be positive and finite, got {}",
                self.run.t_end
            ));
        }
        if !(self.run.dt > 0.0 && self.run.dt.is_finite()) {
            violations.push(format!(
                "run: step size must be positive and finite, got {}",
                self.run.dt
            ));
        } else if self.run.t_end.is_finite() && self.run.dt > self.run.t_end {
            violations.push(format!(
                "run: step size {} exceeds the final time {}",
                self.run.dt, self.run.t_end
            ));
        }
        if let Err(e) = self.run.stagger().validate() {
            violations.push(format!("run: {e}"));
        }

        if !(self.loading.amplitude > 0.0 && self.loading.amplitude.is_finite()) {
            violations.push(format!(
                "loading: amplitude must be positive and finite, got {}",
                self.loading.amplitude
            ));
        }
        if let Err(e) = self.loading.waveform.validate() {
            violations.push(format!("loading: {e}"));
        }
        match self.loading.program {
            Program::Custom => {
                if let Err(e) = self.loading.strain_direction() {
                    violations.push(format!("loading: {e}"));
                }
            }
            Program::Torsion => {
                if self.loading.direction.is_some() {
                    violations
                        .push("loading: torsion defines its own kinematics; drop the direction key".into());
                }
                if self.mesh.is_none() {
                    violations.push(
                        "loading: torsion twists a meshed cube; add a mesh section".into(),
                    );
                }
            }
            _ => {
                if self.loading.direction.is_some() {
                    violations.push(format!(
                        "loading: the {} program fixes its own direction; use program = \"custom\" \
                         to prescribe one",
                        toml::to_string(&self.loading.program).unwrap_or_default().trim()
                    ));
                }
            }
        }

        if let Some(mesh) = &self.mesh {
            if mesh.divisions.iter().any(|&n| n == 0) {
                violations.push(format!(
                    "mesh: every axis needs at least one element, got {:?}",
                    mesh.divisions
                ));
            }
            if mesh.extents.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
                violations.push(format!(
                    "mesh: box edge lengths must be positive and finite, got {:?}",
                    mesh.extents
                ));
            }
            if mesh.dirichlet_faces.is_empty() {
                violations.push(
                    "mesh: at least one face must be displacement-controlled to pin rigid motion"
                        .into(),
                );
            }
            for (i, f) in mesh.dirichlet_faces.iter().enumerate() {
                if mesh.dirichlet_faces[..i].contains(f) {
                    violations.push(format!("mesh: face {f:?} listed twice"));
                }
            }
            if material_ok && self.material.l_c == 0.0 {
                violations.push(
                    "mesh: field runs need a positive curvature modulus l_c to control \
                     microrotation gradients"
                        .into(),
                );
            }
        }

        if material_ok {
            let state = self.initial.state();
            let strain = if self.mesh.is_none() {
                self.loading
                    .point_drive()
                    .map(|d| d.strain_at(0.0))
                    .unwrap_or_default()
            } else {
                Default::default()
            };
            if let Err(e) = state.check_admissible(&self.material, &strain) {
                match self.initial.policy {
                    AdmissibilityPolicy::Fail => {
                        violations.push(format!("initial: {e} (policy = \"fail\")"))
                    }
                    AdmissibilityPolicy::Warn => warnings.push(format!("initial: {e}")),
                }
            }
        }

        if let Some(sweep) = &self.sweep {
            if sweep.nus.len() < 2 {
                violations.push(
                    "sweep: need at least two relaxation coefficients to compare trajectories"
                        .into(),
                );
            }
            if sweep.nus.iter().any(|&n| !(n > 0.0 && n.is_finite())) {
                violations.push(format!(
                    "sweep: relaxation coefficients must be positive and finite, got {:?}",
                    sweep.nus
                ));
            }
            if sweep.nus.windows(2).any(|w| w[1] >= w[0]) {
                violations.push(format!(
                    "sweep: relaxation coefficients must decrease strictly, got {:?}",
                    sweep.nus
                ));
            }
        }

        if self.verify.coercivity && self.verify.coercivity_samples == 0 {
            violations.push("verify: the coercivity probe needs at least one sample".into());
        }

        if violations.is_empty() {
            Ok(warnings)
        } else {
            Err(ConfigError::Validation(violations))
        }
    }

    /// The resolved configuration as TOML, for output headers.
    pub fn resolved_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Builds the assembled and factored system of a meshed scenario.
    pub fn build_system(&self) -> Result<CoupledSystem, ConfigError> {
        let mesh_cfg = self.mesh.as_ref().ok_or_else(|| {
            ConfigError::Validation(vec![
                "this subcommand solves a meshed cube; add a mesh section".into(),
            ])
        })?;
        let mesh = GridMesh::new(mesh_cfg.divisions, mesh_cfg.extents)
            .map_err(|e| ConfigError::Validation(vec![format!("mesh: {e}")]))?;
        let boundary = BoundarySpec {
            dirichlet_u: mesh_cfg.dirichlet_faces.clone(),
        };
        CoupledSystem::new(mesh, self.material, boundary)
            .map_err(|e| ConfigError::Validation(vec![e.to_string()]))
    }

    /// The boundary program of a meshed scenario.
    pub fn field_program(&self) -> Result<FieldProgram, ConfigError> {
        let mesh = self.mesh.as_ref().ok_or_else(|| {
            ConfigError::Validation(vec!["field programs need a mesh section".into()])
        })?;
        match self.loading.program {
            Program::Torsion => Ok(FieldProgram::Torsion {
                center: [0.5 * mesh.extents[0], 0.5 * mesh.extents[1]],
                amplitude: self.loading.amplitude,
                waveform: self.loading.waveform,
            }),
            _ => {
                let direction = self
                    .loading
                    .strain_direction()
                    .map_err(|e| ConfigError::Validation(vec![format!("loading: {e}")]))?;
                Ok(FieldProgram::Affine {
                    strain: direction,
                    amplitude: self.loading.amplitude,
                    waveform: self.loading.waveform,
                })
            }
        }
    }
}

/// Boundary kinematics of a meshed scenario: prescribed displacement and
/// microrotation as functions of position and time.
#[derive(Clone, Copy, Debug)]
pub enum FieldProgram {
    /// homogeneous straining, `u = s(t) E x` with symmetric `E`
    Affine {
        strain: DevSym3,
        amplitude: f64,
        waveform: Waveform,
    },
    /// twist about the vertical axis through `center`; microrotations
    /// follow the continuum rotation of the twist
    Torsion {
        center: [f64; 2],
        amplitude: f64,
        waveform: Waveform,
    },
}

impl FieldProgram {
    pub fn displacement(&self, x: Vec3, t: f64) -> Vec3 {
        match *self {
            FieldProgram::Affine {
                strain,
                amplitude,
                waveform,
            } => {
                let e = (amplitude * waveform.value(t) * strain).to_sym3().to_mat3();
                [
                    e[0][0] * x[0] + e[0][1] * x[1] + e[0][2] * x[2],
                    e[1][0] * x[0] + e[1][1] * x[1] + e[1][2] * x[2],
                    e[2][0] * x[0] + e[2][1] * x[1] + e[2][2] * x[2],
                ]
            }
            FieldProgram::Torsion {
                center,
                amplitude,
                waveform,
            } => {
                let theta = amplitude * waveform.value(t);
                [
                    -theta * x[2] * (x[1] - center[1]),
                    theta * x[2] * (x[0] - center[0]),
                    0.0,
                ]
            }
        }
    }

    pub fn microrotation(&self, x: Vec3, t: f64) -> Vec3 {
        match *self {
            FieldProgram::Affine { .. } => [0.0; 3],
            FieldProgram::Torsion {
                center,
                amplitude,
                waveform,
            } => {
                let theta = amplitude * waveform.value(t);
                [
                    -theta * x[2],
                    -0.5 * theta * (x[1] - center[1]),
                    0.5 * theta * (x[0] - center[0]),
                ]
            }
        }
    }
}
