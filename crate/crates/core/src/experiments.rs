//! End-to-end synthetic experiments: data generation on a fine mesh,
//! injection onto a nested coarse mesh, noise, inversion and export.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{build_control_basis, control_load_matrix, ControlBasis};
use crate::error::{Error, Result};
use crate::fem::{assemble, CoefficientField};
use crate::mesh::{build_mesh, refine_uniform, DomainSpec, Mesh, Shape};
use crate::solvers::{morozov, solve, Method, MorozovSettings, SolveResult};
use crate::spectral::{analyze, build_forward_model, DEFAULT_RANK_TOL};

/// Conductivity description, sampled at triangle centroids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaSpec {
    Identity,
    /// `kappa_k(x, y) = c[0] + c[1] x + c[2] y`.
    Affine { kappa1: [f64; 3], kappa2: [f64; 3] },
}

impl SigmaSpec {
    /// The built-in anisotropic field `diag(1 + x/2, 1 + y/4)`.
    pub fn default_tensor() -> Self {
        SigmaSpec::Affine { kappa1: [1.0, 0.5, 0.0], kappa2: [1.0, 0.0, 0.25] }
    }

    pub fn field(&self, mesh: &Mesh) -> CoefficientField {
        match self {
            SigmaSpec::Identity => CoefficientField::identity(mesh),
            SigmaSpec::Affine { kappa1: a, kappa2: b } => CoefficientField::diagonal_from_fn(mesh, |x, y| {
                (a[0] + a[1] * x + a[2] * y, b[0] + b[1] * x + b[2] * y)
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaRule {
    Fixed(f64),
    Morozov(MorozovSettings),
}

/// One forward-grid cell of the true source, with its pointwise value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceCell {
    pub cell: usize,
    pub amplitude: f64,
}

fn default_rank_tol() -> f64 {
    DEFAULT_RANK_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    /// Fine mesh carrying the synthetic data.
    pub domain: DomainSpec,
    /// Number of uniform refinements from the inverse mesh to `domain`.
    pub inverse_refinement: usize,
    pub control_dims_forward: (usize, usize),
    pub control_dims_inverse: (usize, usize),
    pub epsilon: f64,
    pub sigma: SigmaSpec,
    pub true_source: Vec<SourceCell>,
    pub methods: Vec<Method>,
    pub alpha: AlphaRule,
    pub noise_kappa: f64,
    pub seed: u64,
    /// Use one mesh and one control grid for data and inversion.
    pub inverse_crime: bool,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Domain of the inversion mesh.
    pub fn inverse_domain(&self) -> Result<DomainSpec> {
        if self.inverse_crime {
            return Ok(self.domain);
        }
        let f = 1usize.checked_shl(self.inverse_refinement as u32).unwrap_or(0);
        if f == 0 || self.domain.nx % f != 0 || self.domain.ny % f != 0 {
            return Err(Error::Config(format!(
                "mesh {}x{} cannot be coarsened {} times",
                self.domain.nx, self.domain.ny, self.inverse_refinement
            )));
        }
        let coarse = DomainSpec { shape: self.domain.shape, nx: self.domain.nx / f, ny: self.domain.ny / f };
        coarse.validate()?;
        Ok(coarse)
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if self.inverse_crime {
            if self.inverse_refinement != 0 {
                return Err(Error::Config("inverse_crime uses a single mesh; set inverse_refinement to 0".into()));
            }
            if self.control_dims_forward != self.control_dims_inverse {
                return Err(Error::Config("inverse_crime needs identical forward and inverse control grids".into()));
            }
        } else if self.inverse_refinement == 0 {
            return Err(Error::Config("separate meshes need inverse_refinement >= 1".into()));
        }
        self.inverse_domain()?;
        for (what, (mx, my)) in [("forward", self.control_dims_forward), ("inverse", self.control_dims_inverse)] {
            if mx == 0 || my == 0 {
                return Err(Error::Config(format!("{what} control grid must be non-empty")));
            }
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods requested".into()));
        }
        if !(self.noise_kappa >= 0.0 && self.noise_kappa.is_finite()) {
            return Err(Error::Config(format!("noise_kappa must be finite and >= 0, got {}", self.noise_kappa)));
        }
        if !self.epsilon.is_finite() {
            return Err(Error::Config("epsilon must be finite".into()));
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return Err(Error::Config(format!("rank_tol must lie in (0, 1), got {}", self.rank_tol)));
        }
        match self.alpha {
            AlphaRule::Fixed(a) if !(a > 0.0 && a.is_finite()) => {
                return Err(Error::Config(format!("alpha must be positive, got {a}")));
            }
            AlphaRule::Morozov(s) if !(s.alpha_min > 0.0 && s.alpha_max > s.alpha_min && s.rel_tol > 0.0) => {
                return Err(Error::Config("invalid discrepancy-principle settings".into()));
            }
            _ => {}
        }
        if let Some(s) = self.true_source.iter().find(|s| !s.amplitude.is_finite()) {
            return Err(Error::Config(format!("non-finite amplitude for cell {}", s.cell)));
        }
        Ok(())
    }

    /// Applies a `key=value` override. Accepted keys: `alpha` (number or
    /// `morozov`), `epsilon`, `kappa`, `seed`, `methods` (comma list),
    /// `rank_tol`.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| Error::Config(format!("{key}: not a number: {v}")));
        match key.trim() {
            "alpha" => {
                self.alpha = if value.trim().eq_ignore_ascii_case("morozov") {
                    AlphaRule::Morozov(MorozovSettings::default())
                } else {
                    AlphaRule::Fixed(num(value)?)
                }
            }
            "epsilon" => self.epsilon = num(value)?,
            "kappa" => self.noise_kappa = num(value)?,
            "seed" => {
                self.seed = value.trim().parse().map_err(|_| Error::Config(format!("seed: not an integer: {value}")))?
            }
            "methods" => {
                self.methods = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| Method::from_name(s).ok_or_else(|| Error::Config(format!("unknown method {s}"))))
                    .collect::<Result<_>>()?
            }
            "rank_tol" => self.rank_tol = num(value)?,
            other => return Err(Error::Config(format!("unknown override key {other}"))),
        }
        self.validate()
    }
}

/// `d + delta rho` with `delta = kappa (max d - min d)` and standard normal
/// `rho` drawn in node order from a generator seeded with `seed`.
pub fn add_noise(d: &DVector<f64>, kappa: f64, seed: u64) -> (DVector<f64>, f64) {
    if kappa == 0.0 || d.is_empty() {
        return (d.clone(), 0.0);
    }
    let delta = kappa * (d.max() - d.min());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy = d.map(|v| {
        let rho: f64 = StandardNormal.sample(&mut rng);
        v + delta * rho
    });
    (noisy, delta)
}

/// Meshes, grids and the nodal injection from the inverse to the forward mesh.
#[derive(Debug, Clone)]
pub struct Setup {
    pub fine: Mesh,
    pub coarse: Mesh,
    /// `injection[k]` is the fine node coinciding with coarse node `k`.
    pub injection: Vec<usize>,
    pub forward_basis: ControlBasis,
    pub inverse_basis: ControlBasis,
}

pub fn build_setup(cfg: &ExperimentConfig) -> Result<Setup> {
    cfg.validate()?;
    let coarse = build_mesh(&cfg.inverse_domain()?)?;
    let mut fine = coarse.clone();
    let mut injection: Vec<usize> = (0..coarse.n_nodes()).collect();
    if !cfg.inverse_crime {
        for _ in 0..cfg.inverse_refinement {
            let (next, inj) = refine_uniform(&fine);
            injection = injection.iter().map(|&k| inj[k]).collect();
            fine = next;
        }
    }
    let (fx, fy) = cfg.control_dims_forward;
    let (ix, iy) = cfg.control_dims_inverse;
    let forward_basis = build_control_basis(&fine, fx, fy)?;
    let inverse_basis = build_control_basis(&coarse, ix, iy)?;
    Ok(Setup { fine, coarse, injection, forward_basis, inverse_basis })
}

/// Pointwise values of the true source on the forward grid.
pub fn true_field(cfg: &ExperimentConfig, basis: &ControlBasis) -> Result<DVector<f64>> {
    let mut values = DVector::zeros(basis.len());
    for s in &cfg.true_source {
        if s.cell >= basis.len() {
            return Err(Error::Config(format!("true source cell {} out of range (grid has {})", s.cell, basis.len())));
        }
        values[s.cell] += s.amplitude;
    }
    Ok(values)
}

/// Clean boundary data on the inverse mesh's boundary nodes, computed on the
/// fine mesh and injected; then the noisy copy and the noise amplitude.
pub fn generate_data(cfg: &ExperimentConfig, setup: &Setup) -> Result<(DVector<f64>, DVector<f64>, f64)> {
    let sys = assemble(&setup.fine, cfg.epsilon, &cfg.sigma.field(&setup.fine))?;
    let coeffs = setup.forward_basis.cell_field_to_coefficients(&true_field(cfg, &setup.forward_basis)?)?;
    let load = control_load_matrix(&setup.forward_basis, &sys, &setup.fine) * coeffs;
    let u = sys.factorize()?.solve(&load)?;
    let d = DVector::from_iterator(
        setup.coarse.boundary_nodes.len(),
        setup.coarse.boundary_nodes.iter().map(|&k| u[setup.injection[k]]),
    );
    let (noisy, delta) = add_noise(&d, cfg.noise_kappa, cfg.seed);
    Ok((d, noisy, delta))
}

#[derive(Debug, Clone)]
pub struct MethodReport {
    pub solve: SolveResult,
    /// Pointwise values on the inverse grid.
    pub values: DVector<f64>,
    pub l2_error: f64,
    pub argmax_chebyshev_distance: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub setup: Setup,
    pub d: DVector<f64>,
    pub d_noisy: DVector<f64>,
    pub delta: f64,
    /// `|d_noisy - d|` in `L2(boundary)`.
    pub gamma: f64,
    /// True source averaged onto the inverse grid.
    pub true_values: DVector<f64>,
    pub methods: Vec<(Method, std::result::Result<MethodReport, Error>)>,
    pub rank: usize,
    pub w_min: f64,
    pub w_max: f64,
    pub singular_max: f64,
    pub singular_min: f64,
}

impl ExperimentResult {
    pub fn report(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|(m, _)| *m == method).and_then(|(_, r)| r.as_ref().ok())
    }
}

/// `L2(Omega)` distance of two piecewise-constant fields on `basis`.
pub fn l2_distance(basis: &ControlBasis, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).zip(&basis.areas).map(|((x, y), w)| w * (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let setup = build_setup(cfg)?;
    let (d, d_noisy, delta) = generate_data(cfg, &setup)?;

    let sys = assemble(&setup.coarse, cfg.epsilon, &cfg.sigma.field(&setup.coarse))?;
    let fm = build_forward_model(&sys, &setup.inverse_basis, &setup.coarse)?;
    let sd = analyze(&fm, cfg.rank_tol)?;
    let b_hat = fm.whiten(&d_noisy);
    let gamma = fm.whiten(&(&d_noisy - &d)).norm();

    let true_values = setup.inverse_basis.average_from(&setup.forward_basis, &true_field(cfg, &setup.forward_basis)?)?;
    let true_cells: Vec<usize> = (0..true_values.len()).filter(|&i| true_values[i] != 0.0).collect();
    let basis = &setup.inverse_basis;

    let methods = cfg
        .methods
        .par_iter()
        .map(|&m| {
            let solved = match cfg.alpha {
                AlphaRule::Fixed(a) => solve(m, &fm, &sd, &b_hat, a),
                AlphaRule::Morozov(s) => morozov(&fm, &sd, &b_hat, gamma, m, &s).map(|(_, r)| r),
            };
            let report = solved.and_then(|r| {
                let values = basis.coefficients_to_cell_field(&r.coeffs)?;
                let l2_error = l2_distance(basis, &values, &true_values);
                let argmax_chebyshev_distance = true_cells.iter().map(|&t| basis.chebyshev(r.argmax_cell, t)).min();
                Ok(MethodReport { solve: r, values, l2_error, argmax_chebyshev_distance })
            });
            (m, report)
        })
        .collect();

    Ok(ExperimentResult {
        config: cfg.clone(),
        d,
        d_noisy,
        delta,
        gamma,
        true_values,
        methods,
        rank: sd.rank,
        w_min: sd.w_min(),
        w_max: sd.w_max(),
        singular_max: sd.s.max(),
        singular_min: sd.s.min(),
        setup,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MethodSummary {
    pub alpha: f64,
    pub residual: f64,
    /// Data misfit controlled by the discrepancy principle; see `SolveResult`.
    pub discrepancy: f64,
    pub l2_error: f64,
    pub argmax_cell: usize,
    pub argmax_tieset: Vec<usize>,
    pub argmax_chebyshev_distance: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum MethodEntry {
    Ok(MethodSummary),
    Error(String),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub methods: BTreeMap<String, MethodEntry>,
    pub gamma: f64,
    pub delta: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub rank: usize,
    pub singular_value_max: f64,
    pub singular_value_min: f64,
    pub n_controls: usize,
    pub n_boundary_nodes: usize,
}

impl ExperimentResult {
    pub fn manifest(&self) -> Manifest {
        let methods = self
            .methods
            .iter()
            .map(|(m, r)| {
                let entry = match r {
                    Ok(rep) => MethodEntry::Ok(MethodSummary {
                        alpha: rep.solve.alpha,
                        residual: rep.solve.residual,
                        discrepancy: rep.solve.discrepancy,
                        l2_error: rep.l2_error,
                        argmax_cell: rep.solve.argmax_cell,
                        argmax_tieset: rep.solve.argmax_tieset.clone(),
                        argmax_chebyshev_distance: rep.argmax_chebyshev_distance,
                    }),
                    Err(e) => MethodEntry::Error(e.to_string()),
                };
                (m.name().to_string(), entry)
            })
            .collect();
        Manifest {
            config: self.config.clone(),
            methods,
            gamma: self.gamma,
            delta: self.delta,
            w_min: self.w_min,
            w_max: self.w_max,
            rank: self.rank,
            singular_value_max: self.singular_max,
            singular_value_min: self.singular_min,
            n_controls: self.setup.inverse_basis.len(),
            n_boundary_nodes: self.d.len(),
        }
    }

    /// Writes `source_<method>.csv`, `true_source.csv`, `boundary.csv` and
    /// `manifest.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let basis = &self.setup.inverse_basis;
        for (m, r) in &self.methods {
            if let Ok(rep) = r {
                write_cell_csv(&dir.join(format!("source_{}.csv", m.name())), basis, &rep.values)?;
            }
        }
        write_cell_csv(&dir.join("true_source.csv"), basis, &self.true_values)?;

        let mut w = csv::Writer::from_path(dir.join("boundary.csv"))?;
        w.write_record(["node", "x", "y", "d", "d_noisy"])?;
        for (k, &node) in self.setup.coarse.boundary_nodes.iter().enumerate() {
            let [x, y] = self.setup.coarse.nodes[node];
            w.serialize((node, x, y, self.d[k], self.d_noisy[k]))?;
        }
        w.flush()?;

        let mut text = serde_json::to_string_pretty(&self.manifest())?;
        text.push('\n');
        fs::write(dir.join("manifest.json"), text)?;
        Ok(())
    }
}

fn write_cell_csv(path: &Path, basis: &ControlBasis, values: &DVector<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["cell", "cx", "cy", "value"])?;
    for (i, c) in basis.cell_centers.iter().enumerate() {
        w.serialize((i, c[0], c[1], values[i]))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `cell,cx,cy,value` file back.
pub fn read_cell_csv(path: impl AsRef<Path>) -> Result<Vec<(usize, f64, f64, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn block(mx: usize, x0: usize, y0: usize, amplitude: f64) -> Vec<SourceCell> {
    let mut out = Vec::new();
    for iy in y0..y0 + 2 {
        for ix in x0..x0 + 2 {
            out.push(SourceCell { cell: iy * mx + ix, amplitude });
        }
    }
    out
}

fn fine_template(name: &str) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        domain: DomainSpec::unit_square(64, 64),
        inverse_refinement: 1,
        control_dims_forward: (16, 16),
        control_dims_inverse: (16, 16),
        epsilon: 1e-3,
        sigma: SigmaSpec::Identity,
        true_source: block(16, 10, 4, 1.0),
        methods: vec![Method::StandardTikhonov, Method::MethodI, Method::MethodII, Method::MethodIII],
        alpha: AlphaRule::Fixed(1e-3),
        noise_kappa: 0.0,
        seed: 1,
        inverse_crime: false,
        rank_tol: DEFAULT_RANK_TOL,
    }
}

/// The named experiment configurations `ex1` .. `ex7b`.
pub fn builtin_presets() -> Vec<ExperimentConfig> {
    let ex1 = ExperimentConfig {
        name: "ex1".into(),
        domain: DomainSpec::unit_square(8, 8),
        inverse_refinement: 0,
        control_dims_forward: (8, 8),
        control_dims_inverse: (8, 8),
        // cell (5, 2); amplitude 8 makes the source exactly one basis function
        true_source: vec![SourceCell { cell: 21, amplitude: 8.0 }],
        inverse_crime: true,
        ..fine_template("ex1")
    };

    // 12x12 grid on the L-shape: rows 0..6 have 12 cells, rows 6..12 have 6
    let l_cell = |ix: usize, iy: usize| if iy < 6 { iy * 12 + ix } else { 72 + (iy - 6) * 6 + ix };
    let ex2 = ExperimentConfig {
        domain: DomainSpec { shape: Shape::LShape, nx: 24, ny: 24 },
        control_dims_forward: (12, 12),
        control_dims_inverse: (12, 12),
        true_source: [(3, 3), (4, 3), (3, 4), (4, 4)]
            .into_iter()
            .map(|(x, y)| SourceCell { cell: l_cell(x, y), amplitude: 1.0 })
            .collect(),
        ..fine_template("ex2")
    };
    let ex3 = ExperimentConfig {
        true_source: block(16, 0, 7, 1.0),
        alpha: AlphaRule::Fixed(1e-4),
        ..fine_template("ex3")
    };
    let ex4 = ExperimentConfig {
        sigma: SigmaSpec::default_tensor(),
        true_source: block(16, 3, 7, 1.0),
        alpha: AlphaRule::Fixed(1e-4),
        ..fine_template("ex4")
    };
    let two = [block(16, 3, 7, 1.0), block(16, 11, 7, 1.0)].concat();
    let three = [block(16, 3, 3, 1.0), block(16, 11, 3, 1.0), block(16, 7, 11, 1.0)].concat();
    let ex5a = ExperimentConfig { true_source: two.clone(), ..fine_template("ex5a") };
    let ex5b = ExperimentConfig { true_source: three, ..fine_template("ex5b") };
    let noisy = |name: &str, kappa: f64| ExperimentConfig {
        true_source: two.clone(),
        methods: vec![Method::MethodII, Method::MethodIII],
        alpha: AlphaRule::Morozov(MorozovSettings::default()),
        noise_kappa: kappa,
        seed: 2024,
        ..fine_template(name)
    };
    let ex7 = |name: &str, epsilon: f64| ExperimentConfig { epsilon, ..fine_template(name) };

    vec![
        ex1,
        ex2,
        ex3,
        ex4,
        ex5a,
        ex5b,
        noisy("ex6a", 0.05),
        noisy("ex6b", 0.20),
        ex7("ex7a", -1.0),
        ex7("ex7b", -100.0),
    ]
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    builtin_presets().into_iter().find(|c| c.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(name: &str) -> ExperimentConfig {
        ExperimentConfig {
            domain: DomainSpec::unit_square(16, 16),
            control_dims_forward: (8, 8),
            control_dims_inverse: (8, 8),
            true_source: block(8, 2, 3, 1.0),
            ..fine_template(name)
        }
    }

    #[test]
    fn zero_source_gives_zero_data() {
        let cfg = ExperimentConfig { true_source: vec![], ..quick("z") };
        let setup = build_setup(&cfg).unwrap();
        let (d, dn, delta) = generate_data(&cfg, &setup).unwrap();
        assert_eq!(d.amax(), 0.0);
        assert_eq!(dn, d);
        assert_eq!(delta, 0.0);
    }

    #[test]
    fn constant_source_gives_unit_trace() {
        let eps = 0.5;
        let mut cfg = ExperimentConfig { epsilon: eps, ..quick("c") };
        cfg.true_source = (0..64).map(|cell| SourceCell { cell, amplitude: eps }).collect();
        let setup = build_setup(&cfg).unwrap();
        let (d, _, _) = generate_data(&cfg, &setup).unwrap();
        assert!(d.iter().all(|v| (v - 1.0).abs() < 1e-8));
    }

    #[test]
    fn injection_matches_fine_trace() {
        let cfg = quick("i");
        let setup = build_setup(&cfg).unwrap();
        let sys = assemble(&setup.fine, cfg.epsilon, &cfg.sigma.field(&setup.fine)).unwrap();
        let coeffs = setup.forward_basis.cell_field_to_coefficients(&true_field(&cfg, &setup.forward_basis).unwrap()).unwrap();
        let u = sys.factorize().unwrap().solve(&(control_load_matrix(&setup.forward_basis, &sys, &setup.fine) * coeffs)).unwrap();
        let (d, _, _) = generate_data(&cfg, &setup).unwrap();
        for (k, &node) in setup.coarse.boundary_nodes.iter().enumerate() {
            let fine_node = setup.injection[node];
            assert_eq!(setup.fine.nodes[fine_node], setup.coarse.nodes[node]);
            assert_eq!(d[k], u[fine_node]);
        }
    }

    #[test]
    fn noise_basics() {
        let d = DVector::from_fn(50, |i, _| (i as f64).sin());
        let (same, delta) = add_noise(&d, 0.0, 3);
        assert_eq!(same, d);
        assert_eq!(delta, 0.0);
        let flat = DVector::from_element(10, 2.0);
        assert_eq!(add_noise(&flat, 0.3, 3), (flat.clone(), 0.0));
        let (a, _) = add_noise(&d, 0.1, 9);
        let (b, _) = add_noise(&d, 0.1, 9);
        let (c, _) = add_noise(&d, 0.1, 10);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn overrides() {
        let mut cfg = quick("o");
        cfg.apply_override("alpha", "1e-4").unwrap();
        assert_eq!(cfg.alpha, AlphaRule::Fixed(1e-4));
        cfg.apply_override("alpha", "morozov").unwrap();
        assert!(matches!(cfg.alpha, AlphaRule::Morozov(_)));
        cfg.apply_override("methods", "ii,method_iii").unwrap();
        assert_eq!(cfg.methods, vec![Method::MethodII, Method::MethodIII]);
        cfg.apply_override("kappa", "0.1").unwrap();
        assert_eq!(cfg.noise_kappa, 0.1);
        assert!(cfg.apply_override("colour", "1").is_err());
        assert!(cfg.apply_override("kappa", "-1").is_err());
        assert!(cfg.apply_override("seed", "x").is_err());
    }

    #[test]
    fn invalid_configs() {
        let bad = ExperimentConfig { inverse_refinement: 0, ..quick("b") };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig { inverse_refinement: 5, ..quick("b") };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig { inverse_crime: true, ..quick("b") };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig { methods: vec![], ..quick("b") };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig { true_source: vec![SourceCell { cell: 999, amplitude: 1.0 }], ..quick("b") };
        assert!(run_experiment(&bad).is_err());
    }

    #[test]
    fn config_json_round_trip() {
        for cfg in builtin_presets() {
            cfg.validate().unwrap();
            assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        }
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn preset_names() {
        let names: Vec<String> = builtin_presets().into_iter().map(|c| c.name).collect();
        assert_eq!(names, ["ex1", "ex2", "ex3", "ex4", "ex5a", "ex5b", "ex6a", "ex6b", "ex7a", "ex7b"]);
        assert!(preset("nope").is_none());
    }

    #[test]
    fn l_shape_preset_cells_are_where_intended() {
        let cfg = preset("ex2").unwrap();
        let setup = build_setup(&cfg).unwrap();
        let grid: Vec<(usize, usize)> = cfg.true_source.iter().map(|s| setup.forward_basis.cells[s.cell].grid).collect();
        assert_eq!(grid, [(3, 3), (4, 3), (3, 4), (4, 4)]);
    }

    #[test]
    fn exported_l2_error_matches() {
        let cfg = ExperimentConfig { methods: vec![Method::MethodII], ..quick("e") };
        let res = run_experiment(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        res.write(dir.path()).unwrap();
        let rec = read_cell_csv(dir.path().join("source_method_ii.csv")).unwrap();
        let tru = read_cell_csv(dir.path().join("true_source.csv")).unwrap();
        let a = DVector::from_iterator(rec.len(), rec.iter().map(|r| r.3));
        let b = DVector::from_iterator(tru.len(), tru.iter().map(|r| r.3));
        let err = l2_distance(&res.setup.inverse_basis, &a, &b);
        let stored = res.report(Method::MethodII).unwrap().l2_error;
        assert!((err - stored).abs() <= 1e-10 * stored);
    }
}
