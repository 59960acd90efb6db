use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Debug;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

use crate::error::{bail, Result};

/// Scalar type the networks are generic over. Training runs in `f32`; the
/// gradient checks instantiate the same code in `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Default + Debug + Send + Sync + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("representable constant")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Handle of one array inside a [`ParameterSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<T>,
}

/// Named arrays of weights with fixed shapes. Gradients and optimizer moments
/// use the same container, built with [`ParameterSet::zeros_like`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet<T> {
    params: Vec<Param<T>>,
    seed: u64,
}

pub type Gradients<T> = ParameterSet<T>;

impl<T: Real> ParameterSet<T> {
    pub fn new(seed: u64) -> Self {
        Self {
            params: Vec::new(),
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn add(&mut self, name: impl Into<String>, shape: Vec<usize>, values: Vec<T>) -> ParamId {
        assert_eq!(
            shape.iter().product::<usize>(),
            values.len(),
            "parameter shape does not match its data"
        );
        self.params.push(Param {
            name: name.into(),
            shape,
            values,
        });
        ParamId(self.params.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &[T] {
        &self.params[id.0].values
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut [T] {
        &mut self.params[id.0].values
    }

    pub fn params(&self) -> &[Param<T>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param<T>] {
        &mut self.params
    }

    pub fn iter_values(&self) -> impl Iterator<Item = &T> {
        self.params.iter().flat_map(|p| p.values.iter())
    }

    pub fn iter_values_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.params.iter_mut().flat_map(|p| p.values.iter_mut())
    }

    pub fn len(&self) -> usize {
        self.params.iter().map(|p| p.values.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    shape: p.shape.clone(),
                    values: alloc::vec![T::zero(); p.values.len()],
                })
                .collect(),
            seed: self.seed,
        }
    }

    pub fn fill_zero(&mut self) {
        self.iter_values_mut().for_each(|v| *v = T::zero());
    }

    pub fn is_finite(&self) -> bool {
        self.iter_values().all(|v| v.is_finite())
    }

    pub fn same_layout<U>(&self, other: &ParameterSet<U>) -> bool {
        self.params.len() == other.params.len()
            && self
                .params
                .iter()
                .zip(other.params.iter())
                .all(|(a, b)| a.shape == b.shape)
    }

    /// Overwrites values with `other`'s; layouts must agree.
    pub fn copy_from(&mut self, other: &Self) {
        debug_assert!(self.same_layout(other));
        for (a, b) in self.params.iter_mut().zip(other.params.iter()) {
            a.values.copy_from_slice(&b.values);
        }
    }

    /// Mutable access to one coordinate of the flattened parameter vector.
    pub fn flat_mut(&mut self, mut index: usize) -> Option<&mut T> {
        for p in &mut self.params {
            if index < p.values.len() {
                return Some(&mut p.values[index]);
            }
            index -= p.values.len();
        }
        None
    }

    pub fn flat(&self, mut index: usize) -> Option<T> {
        for p in &self.params {
            if index < p.values.len() {
                return Some(p.values[index]);
            }
            index -= p.values.len();
        }
        None
    }

    /// Replaces the values from a flat list in parameter order.
    pub fn load_flat(&mut self, values: &[T]) -> Result<()> {
        if values.len() != self.len() {
            bail!(Usage, "expected {} values, got {}", self.len(), values.len());
        }
        for (dst, &src) in self.iter_values_mut().zip(values) {
            *dst = src;
        }
        Ok(())
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Self, scale: T) {
        for (a, b) in self.iter_values_mut().zip(other.iter_values()) {
            *a += scale * *b;
        }
    }

    pub fn scale(&mut self, factor: T) {
        self.iter_values_mut().for_each(|v| *v *= factor);
    }

    pub fn l2_norm(&self) -> T {
        self.iter_values().fold(T::zero(), |acc, &v| acc + v * v).sqrt()
    }

    /// Same arrays converted to another scalar type.
    pub fn cast<U: Real>(&self) -> ParameterSet<U> {
        ParameterSet {
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    shape: p.shape.clone(),
                    values: p.values.iter().map(|&v| U::of(v.as_f64())).collect(),
                })
                .collect(),
            seed: self.seed,
        }
    }
}
