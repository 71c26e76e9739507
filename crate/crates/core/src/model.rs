//! Spin configurations, Ising model specifications, local fields and
//! conditional models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, InteractionMatrix, SquareMatrix};

/// One observed sample `x` in `{-1, +1}^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct SpinConfiguration(Vec<i8>);

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some((index, &v)) = spins.iter().enumerate().find(|(_, &s)| s != 1 && s != -1) {
            return Err(Error::InvalidSpin {
                index,
                value: v as i64,
            });
        }
        Ok(SpinConfiguration(spins))
    }

    pub fn all_plus(n: usize) -> Self {
        SpinConfiguration(vec![1; n])
    }

    /// Decodes an enumeration index: bit `b` is coordinate `b`, bit value 0
    /// is spin `+1` and bit value 1 is spin `-1`.
    pub fn from_index(n: usize, index: usize) -> Self {
        SpinConfiguration((0..n).map(|b| 1 - 2 * ((index >> b) & 1) as i8).collect())
    }

    /// Inverse of [`SpinConfiguration::from_index`].
    pub fn to_index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .fold(0, |acc, (b, _)| acc | (1 << b))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    #[inline]
    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&s| s as f64).collect()
    }

    pub fn flipped(&self) -> Self {
        SpinConfiguration(self.0.iter().map(|s| -s).collect())
    }

    pub(crate) fn set(&mut self, i: usize, s: i8) {
        debug_assert!(s == 1 || s == -1);
        self.0[i] = s;
    }
}

impl TryFrom<Vec<i64>> for SpinConfiguration {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        let spins = v
            .iter()
            .enumerate()
            .map(|(index, &s)| match s {
                1 => Ok(1),
                -1 => Ok(-1),
                value => Err(Error::InvalidSpin { index, value }),
            })
            .collect::<Result<Vec<i8>>>()?;
        Ok(SpinConfiguration(spins))
    }
}

impl From<SpinConfiguration> for Vec<i64> {
    fn from(x: SpinConfiguration) -> Self {
        x.0.into_iter().map(i64::from).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ExternalField(Vec<f64>);

impl ExternalField {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        if let Some(index) = h.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
        Ok(ExternalField(h))
    }

    pub fn zeros(n: usize) -> Self {
        ExternalField(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ExternalField {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        ExternalField::new(v)
    }
}

impl From<ExternalField> for Vec<f64> {
    fn from(h: ExternalField) -> Self {
        h.0
    }
}

/// The distribution `Pr[x] ∝ exp(x'Jx/2 + h'x)` together with its cached
/// diagnostics `M = ||J||_inf` and the conditional-variance floor `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingSpec {
    j: InteractionMatrix,
    h: ExternalField,
    m: f64,
    gamma: f64,
}

impl IsingSpec {
    pub fn new(j: InteractionMatrix, h: ExternalField) -> Result<Self> {
        if j.dim() != h.len() {
            return Err(Error::DimensionMismatch {
                expected: j.dim(),
                got: h.len(),
            });
        }
        let m = j.infinity_norm();
        let gamma = variance_floor(&j, &h);
        Ok(IsingSpec { j, h, m, gamma })
    }

    pub fn zero_field(j: InteractionMatrix) -> Self {
        let n = j.dim();
        IsingSpec::new(j, ExternalField::zeros(n)).expect("dimensions agree")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    pub fn interaction(&self) -> &InteractionMatrix {
        &self.j
    }

    pub fn field(&self) -> &ExternalField {
        &self.h
    }

    /// `||J||_inf`.
    pub fn m(&self) -> f64 {
        self.m
    }

    /// `min_i min_{x_{-i}} Var(x_i | x_{-i})`, evaluated in closed form.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_field(&self, h: ExternalField) -> Result<Self> {
        IsingSpec::new(self.j.clone(), h)
    }

    pub fn with_interaction(&self, j: InteractionMatrix) -> Result<Self> {
        IsingSpec::new(j, self.h.clone())
    }

    /// Unnormalized log weight `x'Jx/2 + h'x`.
    pub fn log_weight(&self, x: &SpinConfiguration) -> f64 {
        let xf = x.as_f64();
        let jx = self.j.mul_vec(&xf);
        0.5 * dot(&xf, &jx) + dot(self.h.values(), &xf)
    }

    fn check(&self, x: &SpinConfiguration, i: usize) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if i >= self.dim() {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: self.dim(),
            });
        }
        Ok(())
    }
}

/// `sum_j J_ij x_j + h_i`.
pub fn local_field(spec: &IsingSpec, x: &SpinConfiguration, i: usize) -> Result<f64> {
    spec.check(x, i)?;
    Ok(local_field_unchecked(spec, x.spins(), i))
}

#[inline]
pub(crate) fn local_field_unchecked(spec: &IsingSpec, x: &[i8], i: usize) -> f64 {
    let row = spec.j.row(i);
    row.iter().zip(x).map(|(a, &s)| a * s as f64).sum::<f64>() + spec.h.values()[i]
}

/// `Pr[x_i = +1 | x_{-i}] = (1 + tanh(local field)) / 2`.
pub fn conditional_prob_plus(spec: &IsingSpec, x: &SpinConfiguration, i: usize) -> Result<f64> {
    local_field(spec, x, i).map(prob_plus)
}

#[inline]
pub(crate) fn prob_plus(field: f64) -> f64 {
    0.5 * (1.0 + field.tanh())
}

/// Conditional model of `x_I` given the spins outside `I`.
///
/// `subset` lists coordinates of the original model; the returned model is
/// indexed by the sorted, deduplicated subset. `outside` has length `n` and
/// must assign every coordinate not in the subset; entries inside the subset
/// are ignored.
pub fn restrict(spec: &IsingSpec, subset: &[usize], outside: &[Option<i8>]) -> Result<IsingSpec> {
    let n = spec.dim();
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    if outside.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: outside.len(),
        });
    }
    let mut idx = subset.to_vec();
    idx.sort_unstable();
    idx.dedup();
    if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, n });
    }
    let mut inside = vec![false; n];
    idx.iter().for_each(|&i| inside[i] = true);
    let mut assigned = vec![0.0; n];
    for v in 0..n {
        if inside[v] {
            continue;
        }
        match outside[v] {
            Some(s @ (1 | -1)) => assigned[v] = s as f64,
            Some(s) => {
                return Err(Error::InvalidSpin {
                    index: v,
                    value: s as i64,
                })
            }
            None => return Err(Error::MissingAssignment { index: v }),
        }
    }
    let j = spec.interaction();
    let h_full = spec.field().values();
    let k = idx.len();
    let mut sub = SquareMatrix::zeros(k);
    let mut h = Vec::with_capacity(k);
    for (a, &i) in idx.iter().enumerate() {
        for (b, &l) in idx.iter().enumerate() {
            sub[(a, b)] = j[(i, l)];
        }
        let row = j.row(i);
        let shift: f64 = (0..n).filter(|&v| !inside[v]).map(|v| row[v] * assigned[v]).sum();
        h.push(h_full[i] + shift);
    }
    IsingSpec::new(InteractionMatrix::from_trusted(sub), ExternalField::new(h)?)
}

/// Closed-form `min_i (1 - tanh^2(||J_i||_1 + |h_i|))`: the smallest
/// conditional variance of a single spin, attained when every neighbour
/// aligns with the sign of its coupling and the field.
pub(crate) fn variance_floor(j: &InteractionMatrix, h: &ExternalField) -> f64 {
    (0..j.dim())
        .map(|i| {
            let worst = j.row(i).iter().map(|v| v.abs()).sum::<f64>() + h.values()[i].abs();
            let t = worst.tanh();
            1.0 - t * t
        })
        .fold(1.0, f64::min)
}
