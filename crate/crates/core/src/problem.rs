//! Problem data: coefficients, source, boundary data, and presets.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone)]
pub enum Diffusion {
    /// Constant `d_s × d_s` SPD matrix.
    Constant(DMatrix<f64>),
    /// Position-dependent SPD matrix, frozen at element barycenters.
    Field(MatrixFn),
}

#[derive(Clone)]
pub enum Convection {
    Constant(Vec<f64>),
    Field(VectorFn),
}

#[derive(Clone)]
pub struct ExactSolution {
    pub value: ScalarFn,
    pub gradient: VectorFn,
}

/// `u_t − div(K∇u − βu) + γu = f`, posed on `Ω_s × (0, t_max)`, or the
/// steady problem `−div(K∇u − βu) + γu = f` on `Ω_s` when `t_max` is `None`.
///
/// Points are full coordinates `y = (x, t)` (just `x` when steady).
#[derive(Clone)]
pub struct SpaceTimeProblem {
    pub name: String,
    pub space_lower: Vec<f64>,
    pub space_upper: Vec<f64>,
    pub t_max: Option<f64>,
    pub diffusion: Diffusion,
    pub convection: Convection,
    pub gamma: f64,
    /// Artificial time diffusion `ε` of the EAFE schemes.
    pub eps: f64,
    pub source: ScalarFn,
    /// Dirichlet data on the lateral boundary and initial value at `t = 0`.
    pub dirichlet: ScalarFn,
    pub exact: Option<ExactSolution>,
}

/// Coefficients frozen at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCoefficients {
    /// `D_ε = diag(K, ε)` (or `K` when steady).
    pub d: DMatrix<f64>,
    /// `b = (β, 1)` (or `β` when steady).
    pub b: Vec<f64>,
    pub gamma: f64,
}

impl PointCoefficients {
    /// `q = D⁻¹ b`.
    pub fn q(&self) -> Result<Vec<f64>> {
        let inv = self
            .d
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidCoefficient("diffusion matrix is singular".into()))?;
        Ok((0..self.b.len())
            .map(|i| (0..self.b.len()).map(|j| inv[(i, j)] * self.b[j]).sum())
            .collect())
    }
}

impl SpaceTimeProblem {
    pub fn space_dim(&self) -> usize {
        self.space_lower.len()
    }

    pub fn is_steady(&self) -> bool {
        self.t_max.is_none()
    }

    /// Dimension of the computational domain.
    pub fn dim(&self) -> usize {
        self.space_dim() + usize::from(!self.is_steady())
    }

    pub fn diffusion_at(&self, y: &[f64]) -> DMatrix<f64> {
        match &self.diffusion {
            Diffusion::Constant(k) => k.clone(),
            Diffusion::Field(f) => f(y),
        }
    }

    pub fn convection_at(&self, y: &[f64]) -> Vec<f64> {
        match &self.convection {
            Convection::Constant(b) => b.clone(),
            Convection::Field(f) => f(y),
        }
    }

    /// Coefficients of the stationary operator `−div(D∇u − bu) + γu` at `y`.
    /// `time_diffusion` is placed in the time block (ε for EAFE, 0 for SD).
    pub fn coefficients_at(&self, y: &[f64], time_diffusion: f64) -> PointCoefficients {
        let k = self.diffusion_at(y);
        let beta = self.convection_at(y);
        if self.is_steady() {
            return PointCoefficients { d: k, b: beta, gamma: self.gamma };
        }
        let ds = self.space_dim();
        let mut d = DMatrix::zeros(ds + 1, ds + 1);
        d.view_mut((0, 0), (ds, ds)).copy_from(&k);
        d[(ds, ds)] = time_diffusion;
        let mut b = beta;
        b.push(1.0);
        PointCoefficients { d, b, gamma: self.gamma }
    }

    pub fn validate(&self) -> Result<()> {
        let ds = self.space_dim();
        if !(1..=2).contains(&ds) || self.space_upper.len() != ds {
            return Err(Error::InvalidInput(format!("space dimension {ds} not in 1..=2")));
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidInput(format!("t_max must be positive, got {t}")));
            }
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidCoefficient(format!("gamma must be ≥ 0, got {}", self.gamma)));
        }
        if let Diffusion::Constant(k) = &self.diffusion {
            if k.nrows() != ds || k.ncols() != ds {
                return Err(Error::InvalidCoefficient("diffusion matrix has wrong size".into()));
            }
        }
        if let Convection::Constant(b) = &self.convection {
            if b.len() != ds {
                return Err(Error::InvalidCoefficient("convection vector has wrong size".into()));
            }
        }
        Ok(())
    }

    /// Constant scalar diffusion α, β and γ, as required by streamline
    /// diffusion. Errors if the coefficients vary or `K ≠ αI`.
    pub fn constant_isotropic(&self) -> Result<(f64, Vec<f64>, f64)> {
        let Diffusion::Constant(k) = &self.diffusion else {
            return Err(Error::Unsupported("streamline diffusion needs constant diffusion".into()));
        };
        let Convection::Constant(beta) = &self.convection else {
            return Err(Error::Unsupported("streamline diffusion needs constant convection".into()));
        };
        let alpha = k[(0, 0)];
        let isotropic = (0..k.nrows()).all(|i| (0..k.ncols()).all(|j| k[(i, j)] == if i == j { alpha } else { 0.0 }));
        if !isotropic {
            return Err(Error::Unsupported("streamline diffusion needs K = αI".into()));
        }
        Ok((alpha, beta.clone(), self.gamma))
    }

    /// Rescale time by `t̃ = κt`.
    ///
    /// The rescaled problem on `(0, κ t_max)` has coefficients `K/κ`, `β/κ`,
    /// `γ/κ`, source `f/κ`, time diffusion `κε`, and solution `u(x, t̃/κ)`.
    pub fn time_rescale(&self, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidInput(format!("kappa must be positive, got {kappa}")));
        }
        let Some(t_max) = self.t_max else {
            return Err(Error::InvalidInput("cannot rescale time of a steady problem".into()));
        };
        let ds = self.space_dim();
        let to_original = move |y: &[f64]| -> Vec<f64> {
            let mut z = y.to_vec();
            z[ds] /= kappa;
            z
        };
        let diffusion = match &self.diffusion {
            Diffusion::Constant(k) => Diffusion::Constant(k / kappa),
            Diffusion::Field(f) => {
                let f = f.clone();
                Diffusion::Field(Arc::new(move |y| f(&to_original(y)) / kappa))
            }
        };
        let convection = match &self.convection {
            Convection::Constant(b) => Convection::Constant(b.iter().map(|v| v / kappa).collect()),
            Convection::Field(f) => {
                let f = f.clone();
                Convection::Field(Arc::new(move |y| f(&to_original(y)).iter().map(|v| v / kappa).collect()))
            }
        };
        let source = {
            let f = self.source.clone();
            Arc::new(move |y: &[f64]| f(&to_original(y)) / kappa) as ScalarFn
        };
        let dirichlet = {
            let g = self.dirichlet.clone();
            Arc::new(move |y: &[f64]| g(&to_original(y))) as ScalarFn
        };
        let exact = self.exact.as_ref().map(|ex| {
            let (u, du) = (ex.value.clone(), ex.gradient.clone());
            ExactSolution {
                value: Arc::new(move |y: &[f64]| u(&to_original(y))),
                gradient: Arc::new(move |y: &[f64]| {
                    let mut g = du(&to_original(y));
                    g[ds] /= kappa;
                    g
                }),
            }
        });
        Ok(Self {
            name: self.name.clone(),
            space_lower: self.space_lower.clone(),
            space_upper: self.space_upper.clone(),
            t_max: Some(kappa * t_max),
            diffusion,
            convection,
            gamma: self.gamma / kappa,
            eps: self.eps * kappa,
            source,
            dirichlet,
            exact,
        })
    }
}

/// Built-in problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `U = e^{−t} sin πx sin πy` on the unit square × (0, 1).
    Heat2d,
    /// `U = e^{−t} sin πx` on (0, 1) × (0, 1).
    Heat1d,
    /// Zero data on the unit square × (0, 1).
    Zero,
    /// `b = (100 sin 6πt, 0)`, source 1, homogeneous data.
    OscillatingConvection,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "heat2d" => Ok(Preset::Heat2d),
            "heat1d" => Ok(Preset::Heat1d),
            "zero" => Ok(Preset::Zero),
            "oscillating-convection" => Ok(Preset::OscillatingConvection),
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (heat2d, heat1d, zero, oscillating-convection)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Heat2d => "heat2d",
            Preset::Heat1d => "heat1d",
            Preset::Zero => "zero",
            Preset::OscillatingConvection => "oscillating-convection",
        }
    }

    pub fn build(self, eps: f64) -> SpaceTimeProblem {
        match self {
            Preset::Heat2d => heat2d(eps),
            Preset::Heat1d => heat1d(eps),
            Preset::Zero => zero_problem(2, eps),
            Preset::OscillatingConvection => oscillating_convection(eps),
        }
    }
}

fn zero_fn() -> ScalarFn {
    Arc::new(|_: &[f64]| 0.0)
}

/// Heat equation on the unit square with `U = e^{−t} sin πx sin πy`.
pub fn heat2d(eps: f64) -> SpaceTimeProblem {
    // U_t = −U and −ΔU = 2π²U, so f = U_t − ΔU = (2π² − 1) U.
    let u = |y: &[f64]| (-y[2]).exp() * (PI * y[0]).sin() * (PI * y[1]).sin();
    SpaceTimeProblem {
        name: "heat2d".into(),
        space_lower: vec![0.0, 0.0],
        space_upper: vec![1.0, 1.0],
        t_max: Some(1.0),
        diffusion: Diffusion::Constant(DMatrix::identity(2, 2)),
        convection: Convection::Constant(vec![0.0, 0.0]),
        gamma: 0.0,
        eps,
        source: Arc::new(move |y| (2.0 * PI * PI - 1.0) * u(y)),
        dirichlet: Arc::new(u),
        exact: Some(ExactSolution {
            value: Arc::new(u),
            gradient: Arc::new(|y| {
                let e = (-y[2]).exp();
                let (sx, cx) = (PI * y[0]).sin_cos();
                let (sy, cy) = (PI * y[1]).sin_cos();
                vec![PI * e * cx * sy, PI * e * sx * cy, -e * sx * sy]
            }),
        }),
    }
}

/// Heat equation on the unit interval with `U = e^{−t} sin πx`.
pub fn heat1d(eps: f64) -> SpaceTimeProblem {
    // f = U_t − U_xx = (π² − 1) U.
    let u = |y: &[f64]| (-y[1]).exp() * (PI * y[0]).sin();
    SpaceTimeProblem {
        name: "heat1d".into(),
        space_lower: vec![0.0],
        space_upper: vec![1.0],
        t_max: Some(1.0),
        diffusion: Diffusion::Constant(DMatrix::identity(1, 1)),
        convection: Convection::Constant(vec![0.0]),
        gamma: 0.0,
        eps,
        source: Arc::new(move |y| (PI * PI - 1.0) * u(y)),
        dirichlet: Arc::new(u),
        exact: Some(ExactSolution {
            value: Arc::new(u),
            gradient: Arc::new(|y| {
                let e = (-y[1]).exp();
                let (s, c) = (PI * y[0]).sin_cos();
                vec![PI * e * c, -e * s]
            }),
        }),
    }
}

/// All-zero heat problem in `space_dim` dimensions.
pub fn zero_problem(space_dim: usize, eps: f64) -> SpaceTimeProblem {
    let n = space_dim + 1;
    SpaceTimeProblem {
        name: "zero".into(),
        space_lower: vec![0.0; space_dim],
        space_upper: vec![1.0; space_dim],
        t_max: Some(1.0),
        diffusion: Diffusion::Constant(DMatrix::identity(space_dim, space_dim)),
        convection: Convection::Constant(vec![0.0; space_dim]),
        gamma: 0.0,
        eps,
        source: zero_fn(),
        dirichlet: zero_fn(),
        exact: Some(ExactSolution {
            value: zero_fn(),
            gradient: Arc::new(move |_| vec![0.0; n]),
        }),
    }
}

/// Time-periodic horizontal convection `b = (100 sin 6πt, 0)` with unit
/// source and homogeneous data; convection dominated except near the zeros
/// of the sine.
pub fn oscillating_convection(eps: f64) -> SpaceTimeProblem {
    SpaceTimeProblem {
        name: "oscillating-convection".into(),
        space_lower: vec![0.0, 0.0],
        space_upper: vec![1.0, 1.0],
        t_max: Some(1.0),
        diffusion: Diffusion::Constant(DMatrix::identity(2, 2)),
        convection: Convection::Field(Arc::new(|y| vec![100.0 * (6.0 * PI * y[2]).sin(), 0.0])),
        gamma: 0.0,
        eps,
        source: Arc::new(|_| 1.0),
        dirichlet: zero_fn(),
        exact: None,
    }
}

/// Steady 1D problem `−(u′ − βu)′ = 0`, `u(0) = 0`, `u(1) = 1`, with exact
/// solution `(e^{βx} − 1)/(e^β − 1)`.
pub fn steady_exponential_layer(beta: f64) -> SpaceTimeProblem {
    let u = move |x: &[f64]| {
        if beta == 0.0 {
            x[0]
        } else {
            (beta * x[0]).exp_m1() / beta.exp_m1()
        }
    };
    let du = move |x: &[f64]| {
        if beta == 0.0 {
            vec![1.0]
        } else {
            vec![beta * (beta * x[0]).exp() / beta.exp_m1()]
        }
    };
    SpaceTimeProblem {
        name: format!("steady-layer-{beta}"),
        space_lower: vec![0.0],
        space_upper: vec![1.0],
        t_max: None,
        diffusion: Diffusion::Constant(DMatrix::identity(1, 1)),
        convection: Convection::Constant(vec![beta]),
        gamma: 0.0,
        eps: 1.0,
        source: zero_fn(),
        dirichlet: Arc::new(u),
        exact: Some(ExactSolution {
            value: Arc::new(u),
            gradient: Arc::new(du),
        }),
    }
}

/// Steady 2D convection–diffusion `−div(∇u − βu) = f` on the unit square with
/// manufactured solution `u = sin πx sin πy + xy`.
pub fn steady_manufactured_2d(beta: [f64; 2]) -> SpaceTimeProblem {
    let u = |x: &[f64]| (PI * x[0]).sin() * (PI * x[1]).sin() + x[0] * x[1];
    let du = |x: &[f64]| {
        let (s0, c0) = (PI * x[0]).sin_cos();
        let (s1, c1) = (PI * x[1]).sin_cos();
        vec![PI * c0 * s1 + x[1], PI * s0 * c1 + x[0]]
    };
    // For constant β: f = −Δu + β·∇u, and −Δu = 2π² sin πx sin πy.
    let f = move |x: &[f64]| {
        let g = du(x);
        2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin() + beta[0] * g[0] + beta[1] * g[1]
    };
    SpaceTimeProblem {
        name: "steady-manufactured-2d".into(),
        space_lower: vec![0.0, 0.0],
        space_upper: vec![1.0, 1.0],
        t_max: None,
        diffusion: Diffusion::Constant(DMatrix::identity(2, 2)),
        convection: Convection::Constant(beta.to_vec()),
        gamma: 0.0,
        eps: 1.0,
        source: Arc::new(f),
        dirichlet: Arc::new(u),
        exact: Some(ExactSolution {
            value: Arc::new(u),
            gradient: Arc::new(du),
        }),
    }
}

impl SpaceTimeProblem {
    /// Kuhn box mesh of the problem domain with `divisions` cells on every
    /// axis (time included), boundary roles assigned.
    pub fn mesh(&self, divisions: usize) -> Result<crate::mesh::SimplicialMesh> {
        let divs = vec![divisions; self.dim()];
        match self.t_max {
            Some(t) => crate::mesh::space_time_box(&self.space_lower, &self.space_upper, t, &divs),
            None => crate::mesh::steady_box(&self.space_lower, &self.space_upper, &divs),
        }
    }
}
