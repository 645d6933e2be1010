//! Basic test functions B1–B9 and the shifted, permuted and partially rotated
//! composite suite F1–F11, with seeded, serialisable instances.

pub mod basic;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use basic::AckleyForm;

use crate::ensemble::{Bounds, KnownOptimum, Objective, RngStream};
use crate::error::{Error, Result};
use crate::perturbation::sample_permutation;

/// Weight applied to the leading group of the single- and multi-group
/// composites.
pub const GROUP_WEIGHT: f64 = 1e6;

const SHIFT_STREAM: u64 = 1;
const ROTATION_STREAM: u64 = 2;
const PERMUTATION_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BenchmarkId {
    B1,
    B2,
    B3,
    B4,
    B5,
    B6,
    B7,
    B8,
    B9,
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
    F7,
    F8,
    F9,
    F10,
    F11,
}

use BenchmarkId::*;

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 20] = [
        B1, B2, B3, B4, B5, B6, B7, B8, B9, F1, F2, F3, F4, F5, F6, F7, F8, F9, F10, F11,
    ];

    pub const BASIC: [BenchmarkId; 9] = [B1, B2, B3, B4, B5, B6, B7, B8, B9];

    pub fn is_basic(self) -> bool {
        matches!(self, B1 | B2 | B3 | B4 | B5 | B6 | B7 | B8 | B9)
    }

    pub fn name(self) -> &'static str {
        match self {
            B1 => "sphere",
            B2 => "elliptic",
            B3 => "rotated elliptic",
            B4 => "Schwefel 1.2",
            B5 => "Rosenbrock",
            B6 => "Rastrigin",
            B7 => "rotated Rastrigin",
            B8 => "Ackley",
            B9 => "rotated Ackley",
            F1 => "shifted elliptic",
            F2 => "shifted Rastrigin",
            F3 => "shifted Ackley",
            F4 => "single-group shifted m-rotated elliptic",
            F5 => "single-group shifted m-rotated Rastrigin",
            F6 => "single-group shifted m-dimensional Schwefel 1.2",
            F7 => "single-group shifted m-dimensional Rosenbrock",
            F8 => "n/2m-group shifted m-rotated Rastrigin",
            F9 => "n/2m-group shifted m-dimensional Schwefel 1.2",
            F10 => "n/m-group shifted m-dimensional Schwefel 1.2",
            F11 => "shifted Schwefel 1.2",
        }
    }

    /// Per-variable search interval.
    pub fn domain(self) -> (f64, f64) {
        match self {
            B6 | B7 | F2 | F5 | F8 => (-5.0, 5.0),
            B8 | B9 | F3 => (-32.0, 32.0),
            _ => (-100.0, 100.0),
        }
    }

    /// Side of the rotation matrix, if the function uses one.
    fn rotation_dim(self, n: usize, m: usize) -> Option<usize> {
        match self {
            B3 | B7 | B9 => Some(n),
            F4 | F5 | F8 => Some(m),
            _ => None,
        }
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchmarkId::ALL
            .iter()
            .copied()
            .find(|id| id.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown benchmark id `{s}`")))
    }
}

/// `min(n/4, 10)`, at least 1.
pub fn default_group_size(n: usize) -> usize {
    (n / 4).clamp(1, 10)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InstanceOptions {
    /// Shift the basic functions too (the composites are always shifted).
    pub shift_basic: bool,
    pub ackley: AckleyForm,
}

/// Index slices (0-based, already mapped through the permutation) that the
/// composite formulas act on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupLayout {
    pub groups: Vec<Vec<usize>>,
    pub rest: Option<Vec<usize>>,
}

impl GroupLayout {
    fn new(id: BenchmarkId, n: usize, m: usize, perm: &[usize]) -> Self {
        let slice = |a: usize, b: usize| perm[a..b].to_vec();
        match id {
            F4 | F5 | F6 | F7 => Self {
                groups: vec![slice(0, m)],
                rest: Some(slice(m, n)),
            },
            F8 | F9 => Self {
                groups: (0..n / (2 * m)).map(|k| slice(k * m, (k + 1) * m)).collect(),
                rest: Some(slice(n / 2, n)),
            },
            F10 => Self {
                groups: (0..n / m).map(|k| slice(k * m, (k + 1) * m)).collect(),
                rest: None,
            },
            _ => Self {
                groups: vec![(0..n).collect()],
                rest: None,
            },
        }
    }
}

/// A fully determined benchmark function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceDocument", into = "InstanceDocument")]
pub struct BenchmarkInstance {
    id: BenchmarkId,
    n: usize,
    m: usize,
    seed: u64,
    shift: DVector<f64>,
    rotation: Option<DMatrix<f64>>,
    permutation: Vec<usize>,
    ackley: AckleyForm,
    bounds: Bounds,
    layout: GroupLayout,
}

/// Wire form of a [`BenchmarkInstance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub function: BenchmarkId,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub shift: Vec<f64>,
    pub rotation_dim: usize,
    /// Row-major; empty when the function is unrotated.
    pub rotation: Vec<f64>,
    /// 0-based.
    pub permutation: Vec<usize>,
    pub ackley_form: AckleyForm,
    pub lower: f64,
    pub upper: f64,
}

impl From<BenchmarkInstance> for InstanceDocument {
    fn from(inst: BenchmarkInstance) -> Self {
        let (rotation_dim, rotation) = match &inst.rotation {
            Some(r) => (r.nrows(), r.transpose().iter().copied().collect()),
            None => (0, Vec::new()),
        };
        Self {
            function: inst.id,
            n: inst.n,
            m: inst.m,
            seed: inst.seed,
            shift: inst.shift.iter().copied().collect(),
            rotation_dim,
            rotation,
            permutation: inst.permutation,
            ackley_form: inst.ackley,
            lower: inst.bounds.lower()[0],
            upper: inst.bounds.upper()[0],
        }
    }
}

impl TryFrom<InstanceDocument> for BenchmarkInstance {
    type Error = Error;

    fn try_from(doc: InstanceDocument) -> Result<Self> {
        check_structure(doc.function, doc.n, doc.m)?;
        if doc.shift.len() != doc.n {
            return Err(Error::DimensionMismatch {
                context: "instance shift",
                expected: doc.n,
                actual: doc.shift.len(),
            });
        }
        let expected_rot = doc.function.rotation_dim(doc.n, doc.m).unwrap_or(0);
        if doc.rotation_dim != expected_rot || doc.rotation.len() != expected_rot * expected_rot {
            return Err(Error::DimensionMismatch {
                context: "instance rotation",
                expected: expected_rot * expected_rot,
                actual: doc.rotation.len(),
            });
        }
        let rotation = (expected_rot > 0).then(|| DMatrix::from_row_slice(expected_rot, expected_rot, &doc.rotation));
        if let Some(r) = &rotation {
            let residual = orthogonality_residual(r);
            if residual > 1e-8 {
                return Err(Error::InvalidConfig(format!(
                    "instance rotation is not orthogonal (residual {residual:e})"
                )));
            }
        }
        let mut seen = vec![false; doc.n];
        if doc.permutation.len() != doc.n
            || doc.permutation.iter().any(|&k| k >= doc.n || std::mem::replace(&mut seen[k], true))
        {
            return Err(Error::InvalidConfig("instance permutation is not a bijection".into()));
        }
        let bounds = Bounds::uniform(doc.n, doc.lower, doc.upper)?;
        let layout = GroupLayout::new(doc.function, doc.n, doc.m, &doc.permutation);
        Ok(Self {
            id: doc.function,
            n: doc.n,
            m: doc.m,
            seed: doc.seed,
            shift: DVector::from_vec(doc.shift),
            rotation,
            permutation: doc.permutation,
            ackley: doc.ackley_form,
            bounds,
            layout,
        })
    }
}

fn check_structure(id: BenchmarkId, n: usize, m: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidConfig("dimension n must be at least 1".into()));
    }
    if id.is_basic() {
        return Ok(());
    }
    if m == 0 || m > n {
        return Err(Error::InvalidConfig(format!("{id}: group size m must satisfy 1 <= m <= n, got m={m}, n={n}")));
    }
    match id {
        F8 | F9 if n % (2 * m) != 0 => Err(Error::InvalidConfig(format!(
            "{id}: n must be divisible by 2m, got n={n}, m={m}"
        ))),
        F10 if n % m != 0 => Err(Error::InvalidConfig(format!(
            "{id}: n must be divisible by m, got n={n}, m={m}"
        ))),
        _ => Ok(()),
    }
}

/// Frobenius norm of `MᵀM − I`.
pub fn orthogonality_residual(m: &DMatrix<f64>) -> f64 {
    (m.transpose() * m - DMatrix::identity(m.nrows(), m.ncols())).norm()
}

/// Random orthogonal matrix: QR of a seeded standard Gaussian matrix, with
/// column signs fixed so that R has a positive diagonal.
pub fn gen_rotation(m: usize, seed: u64) -> DMatrix<f64> {
    rotation_from(m, &mut RngStream::new(seed, ROTATION_STREAM))
}

fn rotation_from(m: usize, rng: &mut RngStream) -> DMatrix<f64> {
    let a = DMatrix::from_fn(m, m, |_, _| StandardNormal.sample(rng.inner()));
    let qr = a.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (k, mut col) in q.column_iter_mut().enumerate() {
        if r[(k, k)] < 0.0 {
            col.neg_mut();
        }
    }
    q
}

/// Instance with default options.
pub fn make_instance(id: BenchmarkId, n: usize, m: usize, seed: u64) -> Result<BenchmarkInstance> {
    make_instance_with(id, n, m, seed, InstanceOptions::default())
}

pub fn make_instance_with(
    id: BenchmarkId,
    n: usize,
    m: usize,
    seed: u64,
    options: InstanceOptions,
) -> Result<BenchmarkInstance> {
    let m = if id.is_basic() { n } else { m };
    check_structure(id, n, m)?;
    let (lo, hi) = id.domain();
    let shift = if id.is_basic() && !options.shift_basic {
        DVector::zeros(n)
    } else {
        let mut rng = RngStream::new(seed, SHIFT_STREAM);
        let w = hi - lo;
        DVector::from_fn(n, |_, _| lo + 0.25 * w + 0.5 * w * rng.uniform())
    };
    let rotation = id
        .rotation_dim(n, m)
        .map(|k| rotation_from(k, &mut RngStream::new(seed, ROTATION_STREAM)));
    let permutation = if id.is_basic() {
        (0..n).collect()
    } else {
        sample_permutation(n, &mut RngStream::new(seed, PERMUTATION_STREAM))
    };
    let layout = GroupLayout::new(id, n, m, &permutation);
    Ok(BenchmarkInstance {
        id,
        n,
        m,
        seed,
        shift,
        rotation,
        permutation,
        ackley: options.ackley,
        bounds: Bounds::uniform(n, lo, hi)?,
        layout,
    })
}

impl BenchmarkInstance {
    pub fn id(&self) -> BenchmarkId {
        self.id
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn group_size(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    pub fn rotation(&self) -> Option<&DMatrix<f64>> {
        self.rotation.as_ref()
    }

    /// 0-based permutation of the variable indices.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn ackley_form(&self) -> AckleyForm {
        self.ackley
    }

    pub fn layout(&self) -> &GroupLayout {
        &self.layout
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        if self.id.is_basic() {
            let z: Vec<f64> = x.iter().zip(self.shift.iter()).map(|(a, o)| a - o).collect();
            eval_basic(self.id, &z, self.rotation.as_ref(), self.ackley)
        } else {
            eval_composite(self, x)
        }
    }
}

/// `x·M` for a row vector x, i.e. `Mᵀx`.
fn rotate(x: &[f64], m: &DMatrix<f64>) -> Vec<f64> {
    let k = m.nrows();
    (0..k).map(|c| (0..k).map(|r| x[r] * m[(r, c)]).sum()).collect()
}

fn rotated(x: &[f64], m: Option<&DMatrix<f64>>) -> Vec<f64> {
    match m {
        Some(m) => rotate(x, m),
        None => x.to_vec(),
    }
}

/// A basic function at `x`; the rotated variants (B3, B7, B9) use `z = x·M`
/// when a rotation is given and `z = x` otherwise.
pub fn eval_basic(id: BenchmarkId, x: &[f64], rotation: Option<&DMatrix<f64>>, ackley: AckleyForm) -> f64 {
    match id {
        B1 => basic::sphere(x),
        B2 => basic::elliptic(x),
        B3 => basic::elliptic(&rotated(x, rotation)),
        B4 => basic::schwefel_1_2(x),
        B5 => basic::rosenbrock(x),
        B6 => basic::rastrigin(x),
        B7 => basic::rastrigin(&rotated(x, rotation)),
        B8 => basic::ackley(x, ackley),
        B9 => basic::ackley(&rotated(x, rotation), ackley),
        _ => panic!("{id} is not a basic function"),
    }
}

/// A composite function of the F-suite at `x`.
pub fn eval_composite(inst: &BenchmarkInstance, x: &[f64]) -> f64 {
    let z: Vec<f64> = x.iter().zip(inst.shift.iter()).map(|(a, o)| a - o).collect();
    let gather = |idx: &[usize]| idx.iter().map(|&k| z[k]).collect::<Vec<f64>>();
    let rot = inst.rotation.as_ref();
    let layout = &inst.layout;
    let rest = || gather(layout.rest.as_deref().unwrap_or(&[]));
    let weighted_groups = |group: &dyn Fn(&[f64]) -> f64, rest_fn: &dyn Fn(&[f64]) -> f64| {
        let r = rest_fn(&rest());
        layout
            .groups
            .iter()
            .map(|g| group(&gather(g)) * GROUP_WEIGHT + r)
            .sum::<f64>()
    };
    match inst.id {
        F1 => basic::elliptic(&z),
        F2 => basic::rastrigin(&z),
        F3 => basic::ackley(&z, inst.ackley),
        F4 => weighted_groups(&|g| basic::elliptic(&rotated(g, rot)), &basic::elliptic),
        F5 | F8 => weighted_groups(&|g| basic::rastrigin(&rotated(g, rot)), &basic::rastrigin),
        F6 | F9 => weighted_groups(&basic::schwefel_1_2, &basic::sphere),
        F7 => weighted_groups(&basic::rosenbrock, &basic::sphere),
        F10 => layout.groups.iter().map(|g| basic::schwefel_1_2(&gather(g))).sum(),
        F11 => basic::schwefel_1_2(&z),
        id => panic!("{id} is not a composite function"),
    }
}

/// Location and value of the global minimum, when known.
pub fn known_optimum(inst: &BenchmarkInstance) -> Option<KnownOptimum> {
    match inst.id {
        F7 => None,
        B5 => Some(KnownOptimum {
            x: Some(inst.shift.add_scalar(1.0)),
            f: Some(0.0),
        }),
        _ => Some(KnownOptimum {
            x: Some(inst.shift.clone()),
            f: Some(0.0),
        }),
    }
}

impl Objective for BenchmarkInstance {
    fn dim(&self) -> usize {
        self.n
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.evaluate(x)
    }

    fn optimum(&self) -> Option<KnownOptimum> {
        known_optimum(self)
    }
}
