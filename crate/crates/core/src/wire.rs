//! JSON wire layout for complex matrices: row-major arrays of `[re, im]`.

use crate::error::{Error, Result};
use crate::scalar::{cx, CMat, Cx, Real};

/// Matrix as rows of `[re, im]` pairs.
pub type WireMatrix<T> = Vec<Vec<[T; 2]>>;

pub fn to_wire<T: Real>(m: &CMat<T>) -> WireMatrix<T> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

/// Parses rows; an empty row list is read as a `0×cols` matrix with
/// `cols = 0`.
pub fn from_wire<T: Real>(rows: &WireMatrix<T>) -> Result<CMat<T>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Serialization("ragged matrix rows".into()));
    }
    Ok(CMat::<T>::from_fn(nrows, ncols, |r, c| {
        let [re, im] = rows[r][c];
        cx(re, im)
    }))
}

pub fn vec_to_wire<T: Real>(v: &[Cx<T>]) -> Vec<[T; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vec_from_wire<T: Real>(v: &[[T; 2]]) -> Vec<Cx<T>> {
    v.iter().map(|&[re, im]| cx(re, im)).collect()
}
