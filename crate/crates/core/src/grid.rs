//! Uniform periodic grids and the fields/spectra living on them.
//!
//! Everything is discretized on the square torus [-L, L)^2 with N points per
//! axis (N a power of two), spacing d = 2L/N, nodes x_i = -L + i d. The dual
//! axis carries the frequencies tau_m = pi m / L for m in [-N/2, N/2). Axis 0
//! is the first coordinate (alpha, or t in the Cartesian frame), axis 1 the
//! second (beta, or x).
//!
//! A [`Field2`] is frame-tagged: `Null` for (alpha, beta) null coordinates,
//! `Cartesian` for (t, x). Values are stored as complex scalars (real fields
//! simply keep a vanishing imaginary part); an R^2-valued map stores two
//! component planes.
//!
//! On-disk interchange format: a JSON header `{l, n, frame, arity}` next to a
//! flat binary block of row-major little-endian f64 values (component-major
//! for vector fields). Only real-valued fields are serialized.

use std::fs;
use std::io::{Read as _, Write as _};
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Coordinate frame of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Null coordinates (alpha, beta) = (t + x, t - x).
    Null,
    /// Laboratory coordinates (t, x).
    Cartesian,
}

/// Number of value components carried by a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arity {
    Scalar,
    Vector2,
}

impl Arity {
    fn comps(self) -> usize {
        match self {
            Arity::Scalar => 1,
            Arity::Vector2 => 2,
        }
    }
}

/// Square periodic grid on [-L, L)^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2<T> {
    n: usize,
    half_width: T,
}

/// Smallest admissible half-width; cutoffs supported in [-4, 4] must vanish
/// well before the periodic wrap.
pub const MIN_HALF_WIDTH: f64 = 8.0;

impl<T: Real> Grid2<T> {
    /// Creates a grid, validating that `n` is a power of two (>= 8) and
    /// `half_width >= 8`.
    pub fn new(half_width: T, n: usize) -> Result<Self> {
        if !n.is_power_of_two() || n < 8 {
            return Err(Error::Grid(format!(
                "N must be a power of two >= 8, got {n}"
            )));
        }
        if half_width.as_f64() < MIN_HALF_WIDTH {
            return Err(Error::Grid(format!(
                "half-width L must be >= {MIN_HALF_WIDTH}, got {}",
                half_width.as_f64()
            )));
        }
        Ok(Self { n, half_width })
    }

    /// Default production grid: L = 16, N = 512.
    pub fn standard() -> Self {
        Self::new(T::of(16.0), 512).expect("standard grid parameters are valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    /// Grid spacing d = 2L/N.
    pub fn spacing(&self) -> T {
        T::of(2.0) * self.half_width / T::of(self.n as f64)
    }

    /// Node coordinate x_i = -L + i d.
    pub fn coord(&self, i: usize) -> T {
        debug_assert!(i <= self.n);
        -self.half_width + T::of(i as f64) * self.spacing()
    }

    /// All node coordinates along one axis.
    pub fn coords(&self) -> Vec<T> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Signed integer frequency index m for FFT bin k (m in [-N/2, N/2)).
    pub fn freq_index(&self, k: usize) -> i64 {
        debug_assert!(k < self.n);
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Angular frequency tau_m = pi m / L for FFT bin k.
    pub fn freq(&self, k: usize) -> T {
        T::PI() * T::of(self.freq_index(k) as f64) / self.half_width
    }

    /// Largest angular frequency magnitude on the axis, pi (N/2) / L.
    pub fn max_freq(&self) -> T {
        T::PI() * T::of((self.n / 2) as f64) / self.half_width
    }

    /// Index of -x_i modulo the periodic wrap: -coord(i) = coord(neg_index(i))
    /// up to the identification of +L with -L.
    pub fn neg_index(&self, i: usize) -> usize {
        debug_assert!(i < self.n);
        (self.n - i) % self.n
    }

    /// Nearest grid index to coordinate `x`, requiring `x` to lie on a node
    /// within `tol`.
    pub fn index_of(&self, x: T, tol: T) -> Result<usize> {
        let pos = (x + self.half_width) / self.spacing();
        let i = pos.round();
        if (pos - i).abs() > tol / self.spacing() {
            return Err(Error::OutOfWindow(format!(
                "coordinate {} is not a grid node",
                x.as_f64()
            )));
        }
        let i = i.as_f64() as i64;
        if i < 0 || i >= self.n as i64 {
            return Err(Error::OutOfWindow(format!(
                "coordinate {} outside [-L, L)",
                x.as_f64()
            )));
        }
        Ok(i as usize)
    }
}

/// Discrete field on a [`Grid2`], scalar or R^2-valued, frame-tagged.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2<T> {
    grid: Grid2<T>,
    frame: Frame,
    comps: Vec<Vec<Complex<T>>>,
}

impl<T: Real> Field2<T> {
    /// Zero field of the given arity.
    pub fn zeros(grid: Grid2<T>, frame: Frame, arity: Arity) -> Self {
        let plane = vec![Complex::new(T::zero(), T::zero()); grid.n() * grid.n()];
        Self {
            grid,
            frame,
            comps: vec![plane; arity.comps()],
        }
    }

    /// Scalar field from a real-valued function of the node coordinates.
    pub fn from_fn(grid: Grid2<T>, frame: Frame, mut f: impl FnMut(T, T) -> T) -> Self {
        let n = grid.n();
        let mut plane = Vec::with_capacity(n * n);
        for i in 0..n {
            let a = grid.coord(i);
            for j in 0..n {
                plane.push(Complex::new(f(a, grid.coord(j)), T::zero()));
            }
        }
        Self {
            grid,
            frame,
            comps: vec![plane],
        }
    }

    /// Scalar field from a complex-valued function of the node coordinates.
    pub fn from_fn_complex(
        grid: Grid2<T>,
        frame: Frame,
        mut f: impl FnMut(T, T) -> Complex<T>,
    ) -> Self {
        let n = grid.n();
        let mut plane = Vec::with_capacity(n * n);
        for i in 0..n {
            let a = grid.coord(i);
            for j in 0..n {
                plane.push(f(a, grid.coord(j)));
            }
        }
        Self {
            grid,
            frame,
            comps: vec![plane],
        }
    }

    /// R^2-valued field from a pair of real-valued functions.
    pub fn from_fn_vec2(
        grid: Grid2<T>,
        frame: Frame,
        mut f: impl FnMut(T, T) -> (T, T),
    ) -> Self {
        let n = grid.n();
        let mut c0 = Vec::with_capacity(n * n);
        let mut c1 = Vec::with_capacity(n * n);
        for i in 0..n {
            let a = grid.coord(i);
            for j in 0..n {
                let (u, v) = f(a, grid.coord(j));
                c0.push(Complex::new(u, T::zero()));
                c1.push(Complex::new(v, T::zero()));
            }
        }
        Self {
            grid,
            frame,
            comps: vec![c0, c1],
        }
    }

    /// Builds a field from raw component planes (row-major, length n^2 each).
    pub fn from_components(
        grid: Grid2<T>,
        frame: Frame,
        comps: Vec<Vec<Complex<T>>>,
    ) -> Self {
        assert!(
            comps.len() == 1 || comps.len() == 2,
            "a field carries one or two components"
        );
        for c in &comps {
            assert_eq!(c.len(), grid.n() * grid.n(), "component plane size mismatch");
        }
        Self { grid, frame, comps }
    }

    pub fn grid(&self) -> Grid2<T> {
        self.grid
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn arity(&self) -> Arity {
        if self.comps.len() == 1 {
            Arity::Scalar
        } else {
            Arity::Vector2
        }
    }

    pub fn num_comps(&self) -> usize {
        self.comps.len()
    }

    pub fn comp(&self, c: usize) -> &[Complex<T>] {
        &self.comps[c]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [Complex<T>] {
        &mut self.comps[c]
    }

    /// Value of component `c` at node (i, j).
    pub fn at(&self, c: usize, i: usize, j: usize) -> Complex<T> {
        self.comps[c][i * self.grid.n() + j]
    }

    pub fn at_mut(&mut self, c: usize, i: usize, j: usize) -> &mut Complex<T> {
        let n = self.grid.n();
        &mut self.comps[c][i * n + j]
    }

    /// Re-tags the frame without touching values (used by the exact
    /// index-remapping coordinate transforms).
    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    /// Pointwise sum; panics on grid/frame/arity mismatch.
    pub fn add(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }

    /// Pointwise difference; panics on grid/frame/arity mismatch.
    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a - b)
    }

    /// Scales every value by a real factor.
    pub fn scale(&self, s: T) -> Self {
        let comps = self
            .comps
            .iter()
            .map(|c| c.iter().map(|z| z * s).collect())
            .collect();
        Self {
            grid: self.grid,
            frame: self.frame,
            comps,
        }
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Self {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        assert_eq!(self.frame, rhs.frame, "frame mismatch");
        assert_eq!(self.comps.len(), rhs.comps.len(), "arity mismatch");
        let comps = self
            .comps
            .iter()
            .zip(&rhs.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        Self {
            grid: self.grid,
            frame: self.frame,
            comps,
        }
    }

    /// Multiplies every component pointwise by a scalar window field.
    pub fn windowed(&self, window: &Field2<T>) -> Self {
        assert_eq!(self.grid, window.grid, "grid mismatch");
        assert_eq!(window.num_comps(), 1, "window must be scalar");
        let w = window.comp(0);
        let comps = self
            .comps
            .iter()
            .map(|c| c.iter().zip(w).map(|(&z, &ww)| z * ww).collect())
            .collect();
        Self {
            grid: self.grid,
            frame: self.frame,
            comps,
        }
    }

    /// Discrete L^2 norm sqrt(sum |values|^2 d^2) over all components.
    pub fn l2_norm(&self) -> T {
        let d2 = self.grid.spacing() * self.grid.spacing();
        let mut acc = T::zero();
        for c in &self.comps {
            for z in c {
                acc += z.norm_sqr();
            }
        }
        (acc * d2).sqrt()
    }

    /// Supremum of |values| over all components (complex modulus).
    pub fn sup_norm(&self) -> T {
        let mut m = T::zero();
        for c in &self.comps {
            for z in c {
                m = m.max(z.norm());
            }
        }
        m
    }

    /// Largest imaginary magnitude; a sanity probe for nominally real fields.
    pub fn max_imag(&self) -> T {
        let mut m = T::zero();
        for c in &self.comps {
            for z in c {
                m = m.max(z.im.abs());
            }
        }
        m
    }

    /// Writes `<stem>.json` (header) and `<stem>.bin` (row-major little-endian
    /// f64 block, component-major). Only real-valued fields are serializable;
    /// a significant imaginary part is rejected.
    pub fn write_files(&self, stem: &Path) -> Result<()> {
        let scale = self.sup_norm().as_f64().max(1.0);
        if self.max_imag().as_f64() > 1e-9 * scale {
            return Err(Error::Degenerate(
                "refusing to serialize a field with a significant imaginary part".into(),
            ));
        }
        let header = FieldHeader {
            l: self.grid.half_width().as_f64(),
            n: self.grid.n(),
            frame: self.frame,
            arity: self.arity(),
        };
        fs::write(
            stem.with_extension("json"),
            serde_json::to_string_pretty(&header)? + "\n",
        )?;
        let mut bytes = Vec::with_capacity(self.comps.len() * self.comps[0].len() * 8);
        for c in &self.comps {
            for z in c {
                bytes.extend_from_slice(&z.re.as_f64().to_le_bytes());
            }
        }
        let mut f = fs::File::create(stem.with_extension("bin"))?;
        f.write_all(&bytes)?;
        Ok(())
    }

    /// Reads a field previously written by [`Field2::write_files`].
    pub fn read_files(stem: &Path) -> Result<Self> {
        let header: FieldHeader =
            serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?)?;
        let grid = Grid2::new(T::of(header.l), header.n)?;
        let mut bytes = Vec::new();
        fs::File::open(stem.with_extension("bin"))?.read_to_end(&mut bytes)?;
        let ncomp = header.arity.comps();
        let expect = ncomp * header.n * header.n * 8;
        if bytes.len() != expect {
            return Err(Error::Config(format!(
                "binary block has {} bytes, expected {expect}",
                bytes.len()
            )));
        }
        let mut comps = Vec::with_capacity(ncomp);
        for c in 0..ncomp {
            let mut plane = Vec::with_capacity(header.n * header.n);
            let base = c * header.n * header.n * 8;
            for k in 0..header.n * header.n {
                let mut buf = [0u8; 8];
                buf.copy_from_slice(&bytes[base + 8 * k..base + 8 * k + 8]);
                plane.push(Complex::new(T::of(f64::from_le_bytes(buf)), T::zero()));
            }
            comps.push(plane);
        }
        Ok(Self {
            grid,
            frame: header.frame,
            comps,
        })
    }
}

/// JSON sidecar describing a serialized field.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldHeader {
    l: f64,
    n: usize,
    frame: Frame,
    arity: Arity,
}

/// DFT of a [`Field2`]; coefficients stored in FFT bin order per component.
///
/// The normalization approximates the continuous Fourier transform on the
/// torus: `F[m, n] = d^2 sum_{i,j} f(x_i, y_j) exp(-i (tau_m x_i + xi_n y_j))`.
#[derive(Debug, Clone)]
pub struct Spectrum2<T> {
    grid: Grid2<T>,
    frame: Frame,
    comps: Vec<Vec<Complex<T>>>,
}

impl<T: Real> Spectrum2<T> {
    pub(crate) fn new(grid: Grid2<T>, frame: Frame, comps: Vec<Vec<Complex<T>>>) -> Self {
        Self { grid, frame, comps }
    }

    pub fn grid(&self) -> Grid2<T> {
        self.grid
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn num_comps(&self) -> usize {
        self.comps.len()
    }

    pub fn comp(&self, c: usize) -> &[Complex<T>] {
        &self.comps[c]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [Complex<T>] {
        &mut self.comps[c]
    }

    /// Coefficient of component `c` at FFT bins (k0, k1).
    pub fn at(&self, c: usize, k0: usize, k1: usize) -> Complex<T> {
        self.comps[c][k0 * self.grid.n() + k1]
    }

    /// Applies a frequency-dependent multiplier to every component.
    pub fn multiplied(&self, mut m: impl FnMut(T, T) -> Complex<T>) -> Self {
        let n = self.grid.n();
        let mut weights = Vec::with_capacity(n * n);
        for k0 in 0..n {
            let tau = self.grid.freq(k0);
            for k1 in 0..n {
                weights.push(m(tau, self.grid.freq(k1)));
            }
        }
        let comps = self
            .comps
            .iter()
            .map(|c| c.iter().zip(&weights).map(|(&z, &w)| z * w).collect())
            .collect();
        Self {
            grid: self.grid,
            frame: self.frame,
            comps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(Grid2::<f64>::new(16.0, 100).is_err(), "N not a power of two");
        assert!(Grid2::<f64>::new(16.0, 4).is_err(), "N too small");
        assert!(Grid2::<f64>::new(4.0, 64).is_err(), "L below the minimum");
        assert!(Grid2::<f64>::new(8.0, 64).is_ok());
    }

    #[test]
    fn grid_geometry() {
        let g = Grid2::<f64>::new(16.0, 64).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.coord(0), -16.0);
        assert_eq!(g.coord(32), 0.0);
        assert_eq!(g.freq_index(0), 0);
        assert_eq!(g.freq_index(31), 31);
        assert_eq!(g.freq_index(32), -32);
        assert_eq!(g.freq_index(63), -1);
        let tau1 = std::f64::consts::PI / 16.0;
        assert!((g.freq(1) - tau1).abs() < 1e-15);
        assert!((g.max_freq() - 32.0 * tau1).abs() < 1e-13);
    }

    #[test]
    fn neg_index_is_a_grid_symmetry() {
        let g = Grid2::<f64>::new(16.0, 64).unwrap();
        for i in 1..g.n() {
            assert_eq!(g.coord(g.neg_index(i)), -g.coord(i));
        }
        // i = 0 wraps: -(-L) = L is identified with -L.
        assert_eq!(g.neg_index(0), 0);
    }

    #[test]
    fn index_of_accepts_nodes_and_rejects_off_grid() {
        let g = Grid2::<f64>::new(16.0, 64).unwrap();
        assert_eq!(g.index_of(0.0, 1e-12).unwrap(), 32);
        assert_eq!(g.index_of(-16.0, 1e-12).unwrap(), 0);
        assert!(g.index_of(0.3, 1e-12).is_err());
        assert!(g.index_of(16.0, 1e-12).is_err());
    }

    #[test]
    fn field_arithmetic_and_norms() {
        let g = Grid2::<f64>::new(8.0, 16).unwrap();
        let one = Field2::from_fn(g, Frame::Null, |_, _| 1.0);
        let two = one.add(&one);
        assert_eq!(two.at(0, 3, 5).re, 2.0);
        assert_eq!(two.sub(&one).at(0, 3, 5).re, 1.0);
        // ||1||_{L^2} on [-L, L)^2 is 2L.
        assert!((one.l2_norm() - 16.0).abs() < 1e-12);
        assert_eq!(one.sup_norm(), 1.0);
        assert_eq!(one.scale(3.0).at(0, 0, 0).re, 3.0);
    }

    #[test]
    fn serialization_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid2::<f64>::new(8.0, 16).unwrap();
        let f = Field2::from_fn_vec2(g, Frame::Cartesian, |t, x| (t + 0.5 * x, t * x));
        let stem = dir.path().join("field");
        f.write_files(&stem).unwrap();
        let g2 = Field2::<f64>::read_files(&stem).unwrap();
        assert_eq!(g2.frame(), Frame::Cartesian);
        assert_eq!(g2.arity(), Arity::Vector2);
        assert_eq!(g2.grid().n(), 16);
        let diff = f.sub(&g2).sup_norm();
        assert_eq!(diff, 0.0, "f64 payload must round-trip bit-exactly");
    }

    #[test]
    fn serialization_rejects_complex_fields() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid2::<f64>::new(8.0, 16).unwrap();
        let f = Field2::from_fn_complex(g, Frame::Null, |a, _| Complex::new(0.0, a));
        assert!(f.write_files(&dir.path().join("bad")).is_err());
    }
}
