//! Dense f64 arrays. Only ranks 1 and 2 are used by the layers, but the
//! container is rank-agnostic.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Array {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Array {
    pub fn zeros(shape: &[usize]) -> Array {
        let numel = shape.iter().product();
        Array {
            shape: shape.to_vec(),
            data: vec![0.0; numel],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Array> {
        let numel: usize = shape.iter().product();
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::Numcore(format!(
                "array dimensions must be >= 1, got {shape:?}"
            )));
        }
        if data.len() != numel {
            return Err(Error::Numcore(format!(
                "array data length {} does not match shape {:?}",
                data.len(),
                shape
            )));
        }
        Ok(Array {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn vector(data: Vec<f64>) -> Array {
        Array {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn scalar(v: f64) -> Array {
        Array {
            shape: vec![1],
            data: vec![v],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Rank-2 accessor; rows are contiguous.
    pub fn at2(&self, row: usize, col: usize) -> f64 {
        debug_assert_eq!(self.shape.len(), 2);
        self.data[row * self.shape[1] + col]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_data_must_agree() {
        assert!(Array::from_vec(&[2, 3], vec![0.0; 6]).is_ok());
        assert!(Array::from_vec(&[2, 3], vec![0.0; 5]).is_err());
        assert!(Array::from_vec(&[0], vec![]).is_err());
    }

    #[test]
    fn rank2_indexing() {
        let a = Array::from_vec(&[2, 3], vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(a.at2(0, 2), 3.0);
        assert_eq!(a.at2(1, 0), 4.0);
    }
}
