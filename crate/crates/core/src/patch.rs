//! Conversion between images and patch matrices, and weighted aggregation of
//! overlapping patch estimates back into an image.
//!
//! Patches are square, vectorised in row-major order, and stored as the
//! columns of an `N x M` matrix (`N = edge^2`).

use crate::error::{Error, Result};
use crate::image::Image;
use crate::linalg::Matrix;

/// Vectorised patches of one image together with their top-left origins.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchMatrix {
    patch_edge: usize,
    data: Matrix,
    origins: Vec<(usize, usize)>,
}

impl PatchMatrix {
    pub fn new(patch_edge: usize, data: Matrix, origins: Vec<(usize, usize)>) -> Result<Self> {
        if patch_edge == 0 || data.rows() != patch_edge * patch_edge {
            return Err(Error::Dimension(format!(
                "patch edge {patch_edge} does not match {} rows",
                data.rows()
            )));
        }
        if data.cols() != origins.len() {
            return Err(Error::Dimension(format!(
                "{} columns but {} origins",
                data.cols(),
                origins.len()
            )));
        }
        Ok(Self {
            patch_edge,
            data,
            origins,
        })
    }

    #[inline]
    pub fn patch_edge(&self) -> usize {
        self.patch_edge
    }

    /// Patch length `N`.
    #[inline]
    pub fn patch_len(&self) -> usize {
        self.data.rows()
    }

    /// Patch count `M`.
    #[inline]
    pub fn count(&self) -> usize {
        self.data.cols()
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn origins(&self) -> &[(usize, usize)] {
        &self.origins
    }

    #[inline]
    pub fn patch(&self, m: usize) -> &[f64] {
        self.data.col(m)
    }

    /// Same origins, different column values (e.g. per-patch estimates).
    pub fn with_data(&self, data: Matrix) -> Result<Self> {
        Self::new(self.patch_edge, data, self.origins.clone())
    }
}

/// Grid positions along one axis of length `len`: `0, step, 2*step, ...`
/// plus the last valid position `len - edge` when the step skips it. The
/// step is `stride` capped at `edge`, so consecutive patches never leave a gap.
pub fn axis_positions(len: usize, edge: usize, stride: usize) -> Vec<usize> {
    debug_assert!(edge <= len && stride >= 1);
    let last = len - edge;
    let mut pos: Vec<usize> = (0..=last).step_by(stride.min(edge)).collect();
    if *pos.last().unwrap() != last {
        pos.push(last);
    }
    pos
}

/// All patch origins on the clamped stride grid, row-major.
pub fn patch_origins(
    height: usize,
    width: usize,
    patch_edge: usize,
    stride: usize,
) -> Result<Vec<(usize, usize)>> {
    if patch_edge == 0 || patch_edge > height.min(width) {
        return Err(Error::Dimension(format!(
            "patch edge {patch_edge} does not fit a {height}x{width} image"
        )));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    let rows = axis_positions(height, patch_edge, stride);
    let cols = axis_positions(width, patch_edge, stride);
    Ok(rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
        .collect())
}

/// Extracts every patch on the clamped stride grid so that the image borders
/// are always covered.
pub fn extract_patches(img: &Image, patch_edge: usize, stride: usize) -> Result<PatchMatrix> {
    let origins = patch_origins(img.height(), img.width(), patch_edge, stride)?;
    extract_at(img, patch_edge, origins)
}

/// Extracts patches at explicit origins.
pub fn extract_at(
    img: &Image,
    patch_edge: usize,
    origins: Vec<(usize, usize)>,
) -> Result<PatchMatrix> {
    let n = patch_edge * patch_edge;
    let mut data = Vec::with_capacity(n * origins.len());
    for &(r0, c0) in &origins {
        if r0 + patch_edge > img.height() || c0 + patch_edge > img.width() {
            return Err(Error::Dimension(format!(
                "patch at ({r0}, {c0}) leaves the {}x{} image",
                img.height(),
                img.width()
            )));
        }
        for r in r0..r0 + patch_edge {
            let start = r * img.width() + c0;
            data.extend_from_slice(&img.pixels()[start..start + patch_edge]);
        }
    }
    let data = Matrix::from_col_major(n, origins.len(), data)?;
    PatchMatrix::new(patch_edge, data, origins)
}

/// Flattens a square patch given as rows into a column.
pub fn vectorize_patch<R: AsRef<[f64]>>(rows: &[R]) -> Result<Vec<f64>> {
    let edge = rows.len();
    let mut out = Vec::with_capacity(edge * edge);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != edge {
            return Err(Error::Dimension(format!(
                "row {i} has length {}, patch is {edge}x{edge}",
                row.len()
            )));
        }
        out.extend_from_slice(row);
    }
    Ok(out)
}

/// Inverse of [`vectorize_patch`].
pub fn devectorize_patch(column: &[f64], patch_edge: usize) -> Result<Vec<Vec<f64>>> {
    if column.len() != patch_edge * patch_edge {
        return Err(Error::Dimension(format!(
            "column of length {} is not a {patch_edge}x{patch_edge} patch",
            column.len()
        )));
    }
    Ok(column
        .chunks(patch_edge.max(1))
        .map(|c| c.to_vec())
        .collect())
}

/// Per-pixel weighted sums of patch estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelAccumulator {
    height: usize,
    width: usize,
    sum: Vec<f64>,
    weight: Vec<f64>,
}

impl PixelAccumulator {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            sum: vec![0.0; height * width],
            weight: vec![0.0; height * width],
        }
    }

    /// Adds one vectorised patch estimate with top-left corner `origin`.
    pub fn add_patch(
        &mut self,
        origin: (usize, usize),
        patch_edge: usize,
        values: &[f64],
        weight: f64,
    ) -> Result<()> {
        let (r0, c0) = origin;
        if r0 + patch_edge > self.height || c0 + patch_edge > self.width {
            return Err(Error::Dimension(format!(
                "patch at ({r0}, {c0}) leaves the {}x{} canvas",
                self.height, self.width
            )));
        }
        if values.len() != patch_edge * patch_edge {
            return Err(Error::Dimension(format!(
                "estimate of length {} for a {patch_edge}x{patch_edge} patch",
                values.len()
            )));
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "patch weight {weight} must be finite and non-negative"
            )));
        }
        for (dr, row) in values.chunks(patch_edge).enumerate() {
            let start = (r0 + dr) * self.width + c0;
            let sums = &mut self.sum[start..start + patch_edge];
            let weights = &mut self.weight[start..start + patch_edge];
            for ((s, w), &v) in sums.iter_mut().zip(weights.iter_mut()).zip(row) {
                *s += weight * v;
                *w += weight;
            }
        }
        Ok(())
    }

    /// Folds another accumulator of the same canvas into this one.
    pub fn merge(&mut self, other: &PixelAccumulator) -> Result<()> {
        if self.height != other.height || self.width != other.width {
            return Err(Error::Dimension("accumulator canvases differ".into()));
        }
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.weight.iter_mut().zip(&other.weight) {
            *a += b;
        }
        Ok(())
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    /// First pixel (row-major) that received no weight.
    pub fn first_uncovered(&self) -> Option<(usize, usize)> {
        self.weight
            .iter()
            .position(|&w| w <= 0.0)
            .map(|i| (i / self.width, i % self.width))
    }

    /// Weighted average per pixel; any uncovered pixel is an error.
    pub fn finish(&self) -> Result<Image> {
        if let Some((row, col)) = self.first_uncovered() {
            return Err(Error::Uncovered { row, col });
        }
        let pixels = self
            .sum
            .iter()
            .zip(&self.weight)
            .map(|(s, w)| s / w)
            .collect();
        Image::new(self.height, self.width, pixels)
    }
}

/// Weighted average of overlapping patch estimates on a `height x width` canvas.
pub fn aggregate(
    patches: &PatchMatrix,
    estimates: &Matrix,
    weights: &[f64],
    height: usize,
    width: usize,
) -> Result<Image> {
    if estimates.rows() != patches.patch_len() || estimates.cols() != patches.count() {
        return Err(Error::Dimension(format!(
            "estimates are {}x{}, patches are {}x{}",
            estimates.rows(),
            estimates.cols(),
            patches.patch_len(),
            patches.count()
        )));
    }
    if weights.len() != patches.count() {
        return Err(Error::Dimension(format!(
            "{} weights for {} patches",
            weights.len(),
            patches.count()
        )));
    }
    let mut acc = PixelAccumulator::new(height, width);
    for (m, &origin) in patches.origins().iter().enumerate() {
        acc.add_patch(origin, patches.patch_edge(), estimates.col(m), weights[m])?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(h: usize, w: usize) -> Image {
        Image::from_fn(h, w, |r, c| (r * w + c) as f64).unwrap()
    }

    #[test]
    fn single_patch_covers_image() {
        let p = extract_patches(&ramp(8, 8), 8, 1).unwrap();
        assert_eq!(p.count(), 1);
        assert_eq!(p.origins(), &[(0, 0)]);
        assert_eq!(p.patch_len(), 64);
    }

    #[test]
    fn exhaustive_grid_on_nine_by_nine() {
        let p = extract_patches(&ramp(9, 9), 8, 1).unwrap();
        assert_eq!(p.origins(), &[(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn stride_grid_is_clamped_to_border() {
        assert_eq!(axis_positions(10, 4, 4), vec![0, 4, 6]);
        assert_eq!(axis_positions(12, 4, 4), vec![0, 4, 8]);
        assert_eq!(axis_positions(4, 4, 3), vec![0]);
        assert_eq!(axis_positions(9, 2, 5), vec![0, 2, 4, 6, 7]);
    }

    #[test]
    fn patch_columns_are_row_major() {
        let img = ramp(4, 4);
        let p = extract_at(&img, 2, vec![(1, 2)]).unwrap();
        assert_eq!(p.patch(0), &[6.0, 7.0, 10.0, 11.0]);
    }

    #[test]
    fn patch_larger_than_image() {
        assert!(matches!(
            extract_patches(&ramp(4, 9), 5, 1),
            Err(Error::Dimension(_))
        ));
        assert!(extract_patches(&ramp(4, 4), 2, 0).is_err());
    }

    #[test]
    fn vectorize_examples() {
        assert_eq!(
            vectorize_patch(&[[1.0, 2.0], [3.0, 4.0]]).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0]
        );
        assert_eq!(vectorize_patch(&[[0.0; 3]; 3]).unwrap(), vec![0.0; 9]);
        assert!(vectorize_patch(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(devectorize_patch(&[1.0, 2.0, 3.0], 2).is_err());
        assert_eq!(
            devectorize_patch(&[1.0, 2.0, 3.0, 4.0], 2).unwrap(),
            vec![vec![1.0, 2.0], vec![3.0, 4.0]]
        );
    }

    #[test]
    fn two_overlapping_patches_average() {
        let patches = PatchMatrix::new(2, Matrix::zeros(4, 2), vec![(0, 0), (0, 0)]).unwrap();
        let est = Matrix::from_columns(4, &[vec![2.0; 4], vec![6.0; 4]]).unwrap();
        let out = aggregate(&patches, &est, &[1.0, 1.0], 2, 2).unwrap();
        assert_eq!(out.pixels(), &[4.0; 4]);
    }

    #[test]
    fn uncovered_and_zero_weight_pixels() {
        let patches = PatchMatrix::new(2, Matrix::zeros(4, 1), vec![(0, 0)]).unwrap();
        let est = Matrix::zeros(4, 1);
        assert!(matches!(
            aggregate(&patches, &est, &[1.0], 3, 3),
            Err(Error::Uncovered { row: 0, col: 2 })
        ));
        assert!(matches!(
            aggregate(&patches, &est, &[0.0], 2, 2),
            Err(Error::Uncovered { .. })
        ));
        assert!(aggregate(&patches, &est, &[-1.0], 2, 2).is_err());
    }

    #[test]
    fn shape_mismatch_in_aggregate() {
        let p = extract_patches(&ramp(4, 4), 2, 2).unwrap();
        assert!(aggregate(&p, &Matrix::zeros(4, 3), &[1.0; 4], 4, 4).is_err());
        assert!(aggregate(&p, p.data(), &[1.0; 3], 4, 4).is_err());
    }
}
