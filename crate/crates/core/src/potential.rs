//! Repulsive pair potentials with a nested convex shell structure.
//!
//! A [`ShellDecomposition`] is a chain `{0} = K_0 ⊂ K_1 ⊂ … ⊂ K_ℓ` of
//! origin-centred balls or boxes. The potential vanishes outside `K_ℓ`, and
//! `e^{-φ}` is `L`-Lipschitz on each shell `Δ_j = K_j \ K_{j-1}`. Points on a
//! common boundary belong to the smaller shell, because every `K_j` is closed.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hexfloat;
use crate::sum::Neumaier;

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 8;

/// Relative slack used when validating containment between bodies, so that
/// ranges such as `R = √2` survive rounding.
const CONTAINMENT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    Euclidean,
    Max,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "body", rename_all = "kebab-case")]
pub enum ConvexBody {
    Ball { radius: f64 },
    Box { half_width: f64 },
    Scaled { factor: f64, inner: Box<ConvexBody> },
}

impl ConvexBody {
    pub fn ball(radius: f64) -> Self {
        ConvexBody::Ball { radius }
    }

    pub fn cube(half_width: f64) -> Self {
        ConvexBody::Box { half_width }
    }

    pub fn scaled(self, factor: f64) -> Self {
        ConvexBody::Scaled { factor, inner: Box::new(self) }
    }

    /// Underlying norm and the size of the equivalent unscaled body.
    pub fn canonical(&self) -> (Norm, f64) {
        match self {
            ConvexBody::Ball { radius } => (Norm::Euclidean, *radius),
            ConvexBody::Box { half_width } => (Norm::Max, *half_width),
            ConvexBody::Scaled { factor, inner } => {
                let (norm, size) = inner.canonical();
                (norm, size * factor)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            ConvexBody::Ball { radius } => radius.is_finite() && *radius > 0.0,
            ConvexBody::Box { half_width } => half_width.is_finite() && *half_width > 0.0,
            ConvexBody::Scaled { factor, inner } => {
                inner.validate()?;
                factor.is_finite() && *factor > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::input(format!("convex body sizes must be positive and finite: {self:?}")))
        }
    }

    /// Membership in `s·K`.
    #[inline]
    pub fn contains_scaled(&self, x: &[f64], s: f64) -> bool {
        let (norm, size) = self.canonical();
        Limit::new(norm, size * s).contains(x)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_scaled(x, 1.0)
    }

    /// Minkowski gauge `inf{t ≥ 0 : x ∈ tK}`.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        let (norm, size) = self.canonical();
        norm_of(norm, x) / size
    }
}

/// A membership threshold `‖x‖ ≤ limit`, squared for the euclidean norm.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Limit {
    norm: Norm,
    bound: f64,
}

impl Limit {
    pub(crate) fn new(norm: Norm, limit: f64) -> Self {
        let bound = match norm {
            Norm::Euclidean => limit * limit,
            Norm::Max => limit,
        };
        Limit { norm, bound }
    }

    #[inline]
    pub(crate) fn contains(&self, x: &[f64]) -> bool {
        match self.norm {
            Norm::Euclidean => x.iter().map(|v| v * v).sum::<f64>() <= self.bound,
            Norm::Max => x.iter().all(|v| v.abs() <= self.bound),
        }
    }
}

pub(crate) fn norm_of(norm: Norm, x: &[f64]) -> f64 {
    match norm {
        Norm::Euclidean => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        Norm::Max => x.iter().fold(0.0, |m, v| m.max(v.abs())),
    }
}

/// Smallest and largest norm over the axis box `[lo, hi]`.
pub(crate) fn norm_range(norm: Norm, lo: &[f64], hi: &[f64]) -> (f64, f64) {
    let near = lo.iter().zip(hi).map(|(&a, &b)| if a > 0.0 { a } else if b < 0.0 { -b } else { 0.0 });
    let far = lo.iter().zip(hi).map(|(&a, &b)| a.abs().max(b.abs()));
    match norm {
        Norm::Euclidean => (near.map(|v| v * v).sum::<f64>().sqrt(), far.map(|v| v * v).sum::<f64>().sqrt()),
        Norm::Max => (near.fold(0.0, f64::max), far.fold(0.0, f64::max)),
    }
}

fn body_within(inner: (Norm, f64), outer: (Norm, f64), d: usize) -> bool {
    let (ni, a) = inner;
    let (no, b) = outer;
    let reach = match (ni, no) {
        (Norm::Max, Norm::Euclidean) => a * (d as f64).sqrt(),
        _ => a,
    };
    reach <= b * (1.0 + CONTAINMENT_TOL)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShellDecomposition {
    pub dimension: usize,
    pub bodies: Vec<ConvexBody>,
    /// Range `R`: `K_ℓ ⊆ [-R, R]^d` and `[-1/R, 1/R]^d ⊆ K_1`.
    pub range: f64,
    /// Lipschitz constant of `e^{-φ}` on each shell.
    pub lipschitz: f64,
    #[serde(skip)]
    canon: Vec<(Norm, f64)>,
}

impl ShellDecomposition {
    pub fn new(dimension: usize, bodies: Vec<ConvexBody>, range: f64, lipschitz: f64) -> Result<Self> {
        if dimension == 0 || dimension > MAX_DIM {
            return Err(Error::input(format!("dimension must be in 1..={MAX_DIM}, got {dimension}")));
        }
        if bodies.is_empty() {
            return Err(Error::input("a shell decomposition needs at least one body"));
        }
        if !(range.is_finite() && range > 0.0) {
            return Err(Error::input(format!("range R must be positive and finite, got {range}")));
        }
        if !(lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(Error::input(format!("lipschitz L must be nonnegative and finite, got {lipschitz}")));
        }
        for b in &bodies {
            b.validate()?;
        }
        let canon: Vec<_> = bodies.iter().map(ConvexBody::canonical).collect();
        for (j, w) in canon.windows(2).enumerate() {
            if !body_within(w[0], w[1], dimension) {
                return Err(Error::input(format!("shell bodies are not nested: K_{} ⊄ K_{}", j + 1, j + 2)));
            }
        }
        if !body_within(*canon.last().unwrap(), (Norm::Max, range), dimension) {
            return Err(Error::input(format!("outermost body is not inside [-R, R]^d with R = {range}")));
        }
        if !body_within((Norm::Max, 1.0 / range), canon[0], dimension) {
            return Err(Error::input(format!("K_1 does not contain [-1/R, 1/R]^d with R = {range}")));
        }
        Ok(ShellDecomposition { dimension, bodies, range, lipschitz, canon })
    }

    /// Smallest `R` compatible with the given bodies.
    pub fn minimal_range(dimension: usize, bodies: &[ConvexBody]) -> f64 {
        let d = dimension as f64;
        let (ni, a) = bodies[0].canonical();
        let (_, b) = bodies[bodies.len() - 1].canonical();
        let inner = match ni {
            Norm::Euclidean => d.sqrt() / a,
            Norm::Max => 1.0 / a,
        };
        b.max(inner)
    }

    pub fn shell_count(&self) -> usize {
        self.bodies.len()
    }

    pub(crate) fn canonical(&self, j: usize) -> (Norm, f64) {
        self.canon[j - 1]
    }

    /// Index `j` with `x ∈ Δ_j`, or `None` for `x = 0` and `x ∉ K_ℓ`.
    pub fn shell_index(&self, x: &[f64]) -> Option<usize> {
        if x.iter().all(|&v| v == 0.0) {
            return None;
        }
        self.canon
            .iter()
            .position(|&(norm, size)| Limit::new(norm, size).contains(x))
            .map(|j| j + 1)
    }

    /// Membership in the shrunk shell `(1-γ)K_j \ (1+γ)K_{j-1}`.
    pub fn in_gamma_shell(&self, j: usize, gamma: f64, x: &[f64]) -> Result<bool> {
        let cap = 1.0 / self.dimension as f64;
        if !(0.0..=cap).contains(&gamma) {
            return Err(Error::input(format!("shrinkage γ must lie in [0, 1/d] = [0, {cap}], got {gamma}")));
        }
        if j == 0 || j > self.shell_count() {
            return Err(Error::input(format!("shell index {j} outside 1..={}", self.shell_count())));
        }
        if x.len() != self.dimension {
            return Err(dim_mismatch(self.dimension, x.len()));
        }
        Ok(self.shrunk(gamma).contains(j, x))
    }

    /// Precomputed thresholds for all shrunk shells at one `γ`.
    pub fn shrunk(&self, gamma: f64) -> ShrunkShells {
        let scaled_outer: Vec<(Norm, f64)> = self.canon.iter().map(|&(n, s)| (n, (1.0 - gamma) * s)).collect();
        let scaled_inner: Vec<Option<(Norm, f64)>> = std::iter::once(None)
            .chain(self.canon.iter().map(|&(n, s)| Some((n, (1.0 + gamma) * s))))
            .take(self.canon.len())
            .collect();
        ShrunkShells {
            outer: scaled_outer.iter().map(|&(n, s)| Limit::new(n, s)).collect(),
            inner: scaled_inner.iter().map(|o| o.map(|(n, s)| Limit::new(n, s))).collect(),
            scaled_outer,
            scaled_inner,
            dimension: self.dimension,
        }
    }

    /// Whether every body's membership is constant on the interior of the
    /// axis box `[lo, hi]`. Returns the shell index of the box interior
    /// (`None` when it lies outside `K_ℓ`).
    pub(crate) fn classify_box(&self, lo: &[f64], hi: &[f64]) -> BoxClass {
        let mut inside = None;
        for (j, &(norm, size)) in self.canon.iter().enumerate().rev() {
            let (gmin, gmax) = norm_range(norm, lo, hi);
            if gmax <= size {
                inside = Some(j + 1);
            } else if gmin < size {
                return BoxClass::Mixed;
            }
        }
        BoxClass::Clean(inside)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum BoxClass {
    Clean(Option<usize>),
    Mixed,
}

/// Membership tests for `Δ_j^(γ)` with thresholds computed once.
#[derive(Clone, Debug)]
pub struct ShrunkShells {
    outer: Vec<Limit>,
    inner: Vec<Option<Limit>>,
    scaled_outer: Vec<(Norm, f64)>,
    scaled_inner: Vec<Option<(Norm, f64)>>,
    dimension: usize,
}

impl ShrunkShells {
    #[inline]
    pub fn contains(&self, j: usize, x: &[f64]) -> bool {
        if !self.outer[j - 1].contains(x) {
            return false;
        }
        match &self.inner[j - 1] {
            None => x.iter().any(|&v| v != 0.0),
            Some(lim) => !lim.contains(x),
        }
    }

    /// Whether `Δ_j^(γ)` contains no point at all.
    pub fn is_empty(&self, j: usize) -> bool {
        let (norm, size) = self.scaled_outer[j - 1];
        if size <= 0.0 {
            return true;
        }
        match self.scaled_inner[j - 1] {
            None => false,
            Some(inner) => body_within((norm, size), inner, self.dimension),
        }
    }
}

pub type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum PotentialKind {
    /// `+∞` for `‖x‖₂ < r`, zero otherwise.
    HardSphere { radius: f64 },
    /// The ideal gas.
    Zero,
    /// Constant value `values[j-1]` on shell `Δ_j`; entries may be `+∞`.
    Step { values: Vec<f64> },
    /// User evaluator; the tag identifies it in hashes and cache keys.
    Custom { tag: String, eval: Evaluator },
}

impl fmt::Debug for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialKind::HardSphere { radius } => f.debug_struct("HardSphere").field("radius", radius).finish(),
            PotentialKind::Zero => f.write_str("Zero"),
            PotentialKind::Step { values } => f.debug_struct("Step").field("values", values).finish(),
            PotentialKind::Custom { tag, .. } => f.debug_struct("Custom").field("tag", tag).finish(),
        }
    }
}

/// JSON description of a potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    HardSphere {
        dimension: usize,
        radius: f64,
    },
    Zero {
        dimension: usize,
    },
    Step {
        dimension: usize,
        shells: Vec<ShellSpec>,
        /// Per-shell values; `"inf"` or a hex float string is accepted.
        #[serde(with = "hexfloat::serde_vec")]
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        range: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellSpec {
    pub body: BodyKind,
    pub size: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BodyKind {
    Ball,
    Box,
}

#[derive(Clone, Debug)]
pub struct Potential {
    pub shells: ShellDecomposition,
    pub kind: PotentialKind,
    hash: String,
}

impl Potential {
    pub fn hard_sphere(dimension: usize, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::input(format!("hard-sphere radius must be positive, got {radius}")));
        }
        let bodies = vec![ConvexBody::ball(radius)];
        let range = ShellDecomposition::minimal_range(dimension, &bodies);
        let shells = ShellDecomposition::new(dimension, bodies, range, 0.0)?;
        Self::assemble(shells, PotentialKind::HardSphere { radius }, None)
    }

    pub fn zero(dimension: usize) -> Result<Self> {
        let shells = ShellDecomposition::new(dimension, vec![ConvexBody::cube(1.0)], 1.0, 0.0)?;
        Self::assemble(shells, PotentialKind::Zero, None)
    }

    pub fn step(shells: ShellDecomposition, values: Vec<f64>) -> Result<Self> {
        if values.len() != shells.shell_count() {
            return Err(Error::input(format!(
                "step potential needs one value per shell ({}), got {}",
                shells.shell_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::input("step potential values must be nonnegative"));
        }
        Self::assemble(shells, PotentialKind::Step { values }, None)
    }

    /// A user evaluator. The caller asserts symmetry, nonnegativity, support in
    /// `K_ℓ` and the Lipschitz bound recorded in `shells`.
    pub fn custom(shells: ShellDecomposition, tag: impl Into<String>, eval: Evaluator) -> Result<Self> {
        let tag = tag.into();
        Self::assemble(shells, PotentialKind::Custom { tag: tag.clone(), eval }, Some(tag))
    }

    pub fn from_spec(spec: &PotentialSpec) -> Result<Self> {
        match spec {
            PotentialSpec::HardSphere { dimension, radius } => Self::hard_sphere(*dimension, *radius),
            PotentialSpec::Zero { dimension } => Self::zero(*dimension),
            PotentialSpec::Step { dimension, shells, values, range } => {
                let bodies: Vec<ConvexBody> = shells
                    .iter()
                    .map(|s| match s.body {
                        BodyKind::Ball => ConvexBody::ball(s.size),
                        BodyKind::Box => ConvexBody::cube(s.size),
                    })
                    .collect();
                if bodies.is_empty() {
                    return Err(Error::input("step potential needs at least one shell"));
                }
                for b in &bodies {
                    b.validate()?;
                }
                let range = range.unwrap_or_else(|| ShellDecomposition::minimal_range(*dimension, &bodies));
                let decomposition = ShellDecomposition::new(*dimension, bodies, range, 0.0)?;
                Self::step(decomposition, values.clone())
            }
        }
    }

    fn assemble(shells: ShellDecomposition, kind: PotentialKind, tag: Option<String>) -> Result<Self> {
        let mut h = Sha256::new();
        h.update(format!("{:?}", kind_key(&kind)).as_bytes());
        h.update(serde_json::to_string(&shells)?.as_bytes());
        if let Some(t) = tag {
            h.update(t.as_bytes());
        }
        let hash = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Ok(Potential { shells, kind, hash })
    }

    pub fn dimension(&self) -> usize {
        self.shells.dimension
    }

    /// Hex digest identifying the potential in cache keys.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            PotentialKind::Zero => true,
            PotentialKind::Step { values } => values.iter().all(|&v| v == 0.0),
            _ => false,
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.phi(x))
    }

    pub fn mayer(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.mayer_unchecked(x))
    }

    /// `Σ_{i<j} φ(x_i - x_j)`.
    pub fn energy(&self, points: &[Vec<f64>]) -> Result<f64> {
        for p in points {
            self.check_dim(p)?;
        }
        let mut diff = [0.0; MAX_DIM];
        let d = self.dimension();
        let mut total = Neumaier::new();
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                for c in 0..d {
                    diff[c] = points[i][c] - points[j][c];
                }
                let v = self.phi(&diff[..d]);
                if v.is_infinite() {
                    return Ok(f64::INFINITY);
                }
                total.add(v);
            }
        }
        Ok(total.value())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dimension() {
            Ok(())
        } else {
            Err(dim_mismatch(self.dimension(), x.len()))
        }
    }

    #[inline]
    pub(crate) fn phi(&self, x: &[f64]) -> f64 {
        match &self.kind {
            PotentialKind::HardSphere { radius } => {
                if x.iter().map(|v| v * v).sum::<f64>() < radius * radius {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            PotentialKind::Zero => 0.0,
            PotentialKind::Step { values } => match self.shells.shell_index(x) {
                Some(j) => values[j - 1],
                None if x.iter().all(|&v| v == 0.0) => values[0],
                None => 0.0,
            },
            PotentialKind::Custom { eval, .. } => eval(x),
        }
    }

    #[inline]
    pub(crate) fn mayer_unchecked(&self, x: &[f64]) -> f64 {
        match &self.kind {
            PotentialKind::HardSphere { radius } => {
                if x.iter().map(|v| v * v).sum::<f64>() < radius * radius {
                    -1.0
                } else {
                    0.0
                }
            }
            PotentialKind::Zero => 0.0,
            _ => (-self.phi(x)).exp() - 1.0,
        }
    }

    /// Value of `e^{-φ}` at `centre` and a bound on its deviation over the
    /// interior of the axis box `[lo, hi]`.
    pub(crate) fn boltzmann_box(&self, lo: &[f64], hi: &[f64], centre: &[f64]) -> BoxFactor {
        match self.shells.classify_box(lo, hi) {
            BoxClass::Clean(None) => BoxFactor { value: 1.0, deviation: 0.0 },
            BoxClass::Clean(Some(j)) => match &self.kind {
                // K_1 is the closed exclusion ball.
                PotentialKind::HardSphere { .. } => BoxFactor { value: 0.0, deviation: 0.0 },
                PotentialKind::Zero => BoxFactor { value: 1.0, deviation: 0.0 },
                PotentialKind::Step { values } => BoxFactor { value: (-values[j - 1]).exp(), deviation: 0.0 },
                PotentialKind::Custom { .. } => {
                    let half_diag = lo.iter().zip(hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt() / 2.0;
                    BoxFactor {
                        value: (-self.phi(centre)).exp(),
                        deviation: (self.shells.lipschitz * half_diag).min(1.0),
                    }
                }
            },
            BoxClass::Mixed => BoxFactor { value: (-self.phi(centre)).exp(), deviation: 1.0 },
        }
    }
}

/// `e^{-φ}` on a box: midpoint value and maximal deviation from it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct BoxFactor {
    pub value: f64,
    pub deviation: f64,
}

fn kind_key(kind: &PotentialKind) -> String {
    match kind {
        PotentialKind::HardSphere { radius } => format!("hard-sphere:{}", hexfloat::format(*radius)),
        PotentialKind::Zero => "zero".into(),
        PotentialKind::Step { values } => {
            let v: Vec<String> = values.iter().map(|x| hexfloat::format(*x)).collect();
            format!("step:{}", v.join(","))
        }
        PotentialKind::Custom { tag, .. } => format!("custom:{tag}"),
    }
}

fn dim_mismatch(expected: usize, got: usize) -> Error {
    Error::input(format!("point has dimension {got}, potential has dimension {expected}"))
}

/// A quadrature value with an absolute error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    #[serde(with = "hexfloat::serde_f64")]
    pub estimate: f64,
    #[serde(with = "hexfloat::serde_f64")]
    pub error_bound: f64,
}

/// Cells of width `w` anchored at the origin that cover `[-R, R]^d`.
pub(crate) fn cell_grid(range: f64, w: f64) -> i64 {
    (range / w).ceil() as i64
}

/// `C_φ = ∫ |1 - e^{-φ}|` over `[-R, R]^d` by a midpoint sum on cells of width
/// `mesh_width`, exact on cells inside one shell up to the Lipschitz term.
pub fn temperedness_constant(p: &Potential, mesh_width: f64) -> Result<Estimate> {
    let r = p.shells.range;
    if !(mesh_width > 0.0 && mesh_width <= r / 10.0) {
        return Err(Error::input(format!("mesh width must lie in (0, R/10] = (0, {}], got {mesh_width}", r / 10.0)));
    }
    if p.is_zero() {
        return Ok(Estimate { estimate: 0.0, error_bound: 0.0 });
    }
    let d = p.dimension();
    let c = cell_grid(r, mesh_width);
    let side = 2 * c;
    let per_slab: Vec<(Neumaier, Neumaier)> = {
        use rayon::prelude::*;
        (0..side)
            .into_par_iter()
            .map(|first| {
                let mut val = Neumaier::new();
                let mut err = Neumaier::new();
                let mut idx = vec![0i64; d];
                idx[0] = first;
                let mut lo = [0.0; MAX_DIM];
                let mut hi = [0.0; MAX_DIM];
                let mut ctr = [0.0; MAX_DIM];
                loop {
                    for k in 0..d {
                        let a = (idx[k] - c) as f64 * mesh_width;
                        lo[k] = a;
                        hi[k] = a + mesh_width;
                        ctr[k] = a + mesh_width / 2.0;
                    }
                    let f = p.boltzmann_box(&lo[..d], &hi[..d], &ctr[..d]);
                    val.add(1.0 - f.value);
                    err.add(f.deviation);
                    if !odometer(&mut idx[1..], side) {
                        break;
                    }
                }
                (val, err)
            })
            .collect()
    };
    let vol = mesh_width.powi(d as i32);
    let mut val = Neumaier::new();
    let mut err = Neumaier::new();
    for (v, e) in &per_slab {
        val.merge(v);
        err.merge(e);
    }
    Ok(Estimate { estimate: val.value() * vol, error_bound: err.value() * vol })
}

/// Advance a little-endian-last odometer over `[0, side)^len`; false on wrap.
pub(crate) fn odometer(idx: &mut [i64], side: i64) -> bool {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < side {
            return true;
        }
        idx[k] = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_shell() -> Potential {
        let shells =
            ShellDecomposition::new(2, vec![ConvexBody::ball(1.0), ConvexBody::ball(2.0)], 2.0, 0.0).unwrap();
        Potential::step(shells, vec![f64::INFINITY, 1.0]).unwrap()
    }

    #[test]
    fn hard_sphere_values() {
        let p = Potential::hard_sphere(2, 1.0).unwrap();
        assert_eq!(p.evaluate(&[0.5, 0.0]).unwrap(), f64::INFINITY);
        assert_eq!(p.evaluate(&[2.0, 0.0]).unwrap(), 0.0);
        assert_eq!(p.evaluate(&[-0.5, 0.0]).unwrap(), f64::INFINITY);
        assert_eq!(p.mayer(&[0.5, 0.0]).unwrap(), -1.0);
        assert_eq!(p.mayer(&[3.0, 0.0]).unwrap(), 0.0);
        assert!(p.evaluate(&[0.5]).is_err());
    }

    #[test]
    fn hard_sphere_range() {
        assert_eq!(Potential::hard_sphere(1, 0.5).unwrap().shells.range, 2.0);
        assert_eq!(Potential::hard_sphere(1, 1.0).unwrap().shells.range, 1.0);
        assert_eq!(Potential::hard_sphere(2, 1.0).unwrap().shells.range, 2f64.sqrt());
    }

    #[test]
    fn unit_step_mayer() {
        let shells = ShellDecomposition::new(1, vec![ConvexBody::ball(1.0)], 1.0, 0.0).unwrap();
        let p = Potential::step(shells, vec![1.0]).unwrap();
        let m = p.mayer(&[0.5]).unwrap();
        assert!((m - (-0.632_120_558_828_557_7)).abs() < 1e-15);
        assert_eq!(p.mayer(&[1.5]).unwrap(), 0.0);
    }

    #[test]
    fn energies() {
        let p = Potential::hard_sphere(2, 1.0).unwrap();
        let far = vec![vec![0.0, 0.0], vec![5.0, 0.0], vec![10.0, 0.0]];
        assert_eq!(p.energy(&far).unwrap(), 0.0);
        assert_eq!(p.energy(&[vec![0.0, 0.0], vec![0.5, 0.0]]).unwrap(), f64::INFINITY);
        let z = Potential::zero(3).unwrap();
        let pts: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64 * 0.1; 3]).collect();
        assert_eq!(z.energy(&pts).unwrap(), 0.0);
    }

    #[test]
    fn shell_indices() {
        let p = Potential::hard_sphere(2, 1.0).unwrap();
        assert_eq!(p.shells.shell_index(&[0.5, 0.0]), Some(1));
        assert_eq!(p.shells.shell_index(&[2.0, 0.0]), None);
        assert_eq!(p.shells.shell_index(&[0.0, 0.0]), None);
        assert_eq!(two_shell().shells.shell_index(&[1.5, 0.0]), Some(2));
        // boundary of K_1 goes to the smaller index
        assert_eq!(two_shell().shells.shell_index(&[1.0, 0.0]), Some(1));
    }

    #[test]
    fn gamma_shells() {
        let s = ShellDecomposition::new(2, vec![ConvexBody::ball(1.0)], 2f64.sqrt(), 0.0).unwrap();
        assert!(s.in_gamma_shell(1, 0.1, &[0.85, 0.0]).unwrap());
        assert!(!s.in_gamma_shell(1, 0.1, &[0.95, 0.0]).unwrap());
        assert!(!s.in_gamma_shell(1, 0.0, &[0.0, 0.0]).unwrap());
        assert!(s.in_gamma_shell(1, 0.6, &[0.1, 0.0]).is_err());
        let t = two_shell().shells;
        assert!(t.in_gamma_shell(2, 0.1, &[1.5, 0.0]).unwrap());
        assert!(!t.in_gamma_shell(2, 0.1, &[1.05, 0.0]).unwrap());
    }

    #[test]
    fn rejects_bad_decompositions() {
        assert!(ShellDecomposition::new(1, vec![ConvexBody::ball(2.0), ConvexBody::ball(1.0)], 2.0, 0.0).is_err());
        assert!(ShellDecomposition::new(1, vec![ConvexBody::ball(1.0)], 0.5, 0.0).is_err());
        assert!(ShellDecomposition::new(2, vec![ConvexBody::ball(0.5)], 1.0, 0.0).is_err());
        assert!(ShellDecomposition::new(2, vec![ConvexBody::cube(1.0), ConvexBody::ball(1.2)], 1.2, 0.0).is_err());
        assert!(ShellDecomposition::new(2, vec![ConvexBody::cube(1.0), ConvexBody::ball(1.5)], 1.5, 0.0).is_ok());
        assert!(ShellDecomposition::new(0, vec![ConvexBody::ball(1.0)], 1.0, 0.0).is_err());
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"kind":"step","dimension":1,"shells":[{"body":"ball","size":0.5},{"body":"box","size":1.0}],"values":["inf",0.5]}"#;
        let spec: PotentialSpec = serde_json::from_str(json).unwrap();
        let p = Potential::from_spec(&spec).unwrap();
        assert_eq!(p.shells.range, 2.0);
        assert_eq!(p.evaluate(&[0.25]).unwrap(), f64::INFINITY);
        assert_eq!(p.evaluate(&[0.75]).unwrap(), 0.5);
        let back: PotentialSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        let hs: PotentialSpec = serde_json::from_str(r#"{"kind":"hard-sphere","dimension":2,"radius":1.0}"#).unwrap();
        assert_ne!(Potential::from_spec(&hs).unwrap().hash(), p.hash());
    }

    #[test]
    fn temperedness() {
        let p = Potential::hard_sphere(1, 1.0).unwrap();
        let e = temperedness_constant(&p, 1.0 / 16.0).unwrap();
        assert_eq!(e.estimate, 2.0);
        assert_eq!(e.error_bound, 0.0);
        let q = Potential::hard_sphere(2, 1.0).unwrap();
        let e = temperedness_constant(&q, 1.0 / 128.0).unwrap();
        assert!((e.estimate - std::f64::consts::PI).abs() <= e.error_bound);
        assert!(e.error_bound < 0.1);
        let z = temperedness_constant(&Potential::zero(2).unwrap(), 0.05).unwrap();
        assert_eq!(z.estimate, 0.0);
        assert!(temperedness_constant(&p, 0.5).is_err());
    }

    #[test]
    fn two_shell_temperedness() {
        // ∫|1-e^{-φ}| = π·1 + (1-e^{-1})·π·(4-1)
        let e = temperedness_constant(&two_shell(), 1.0 / 64.0).unwrap();
        let exact = std::f64::consts::PI * (1.0 + 3.0 * (1.0 - (-1f64).exp()));
        assert!((e.estimate - exact).abs() <= e.error_bound, "{e:?} vs {exact}");
    }

    fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-3.0f64..3.0, d)
    }

    proptest! {
        #[test]
        fn mayer_range_and_symmetry(x in point(2)) {
            for p in [two_shell(), Potential::hard_sphere(2, 1.0).unwrap()] {
                let m = p.mayer(&x).unwrap();
                let neg: Vec<f64> = x.iter().map(|v| -v).collect();
                prop_assert!((-1.0..=0.0).contains(&m));
                prop_assert_eq!(m, p.mayer(&neg).unwrap());
            }
        }

        #[test]
        fn shells_partition(x in point(2)) {
            let s = two_shell().shells;
            let idx = s.shell_index(&x);
            let hits = (1..=2).filter(|&j| s.in_gamma_shell(j, 0.0, &x).unwrap()).count();
            match idx {
                Some(j) => {
                    prop_assert_eq!(hits, 1);
                    prop_assert!(s.in_gamma_shell(j, 0.0, &x).unwrap());
                }
                None => prop_assert_eq!(hits, 0),
            }
        }

        #[test]
        fn shrinkage_monotone(x in point(2), g1 in 0.0f64..0.5, g2 in 0.0f64..0.5) {
            let s = two_shell().shells;
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            for j in 1..=2 {
                if s.in_gamma_shell(j, hi, &x).unwrap() {
                    prop_assert!(s.in_gamma_shell(j, lo, &x).unwrap());
                }
            }
        }

        #[test]
        fn scaling_membership(x in point(3), c in 0.1f64..4.0) {
            for body in [ConvexBody::ball(1.3), ConvexBody::cube(0.7), ConvexBody::ball(0.9).scaled(1.5)] {
                let scaled: Vec<f64> = x.iter().map(|v| v / c).collect();
                prop_assume!((body.gauge(&scaled) - 1.0).abs() > 1e-9);
                prop_assert_eq!(body.contains_scaled(&x, c), body.contains(&scaled));
                let neg: Vec<f64> = x.iter().map(|v| -v).collect();
                prop_assert_eq!(body.contains(&x), body.contains(&neg));
            }
        }

        #[test]
        fn claim_2_9_geometry(
            m in proptest::collection::vec(-200i64..200, 2),
            z in proptest::collection::vec(-1.999f64..1.999, 2),
            log_delta in 6i32..10,
        ) {
            let s = two_shell().shells;
            let delta = 2f64.powi(-log_delta);
            let gamma = 2.0 * 2f64.sqrt() * s.range * delta;
            let y: Vec<f64> = m.iter().map(|&v| v as f64 * delta).collect();
            let zp: Vec<f64> = y.iter().zip(&z).map(|(a, b)| a + b * delta).collect();
            prop_assume!(zp.iter().any(|&v| v != 0.0));
            for j in 1..=2 {
                if s.in_gamma_shell(j, gamma, &y).unwrap() {
                    prop_assert_eq!(s.shell_index(&zp), Some(j));
                }
            }
        }

        #[test]
        fn nesting_by_sampling(theta in 0.0f64..std::f64::consts::TAU) {
            let s = two_shell().shells;
            let x = [theta.cos(), theta.sin()];
            prop_assert!(s.bodies[1].contains(&x));
        }
    }
}
