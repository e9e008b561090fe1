//! Channel model: the six matrices linking nodes A, B and the relay R,
//! random sampling, the fixed benchmark realization, and JSON (de)serialization.

use crate::matkit::{cx, CMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid dims: antenna counts must be >= 1")]
    InvalidDims,
    #[error("dims ({0}, {1}, {2}) exceed the benchmark realization (max 3, 3, 5)")]
    FixtureTooLarge(usize, usize, usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("dimension inconsistency in field {field}: expected {rows}x{cols}")]
    Inconsistent {
        field: &'static str,
        rows: usize,
        cols: usize,
    },
}

/// Antenna counts at node A, node B and the relay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n_a: usize,
    pub n_b: usize,
    pub n_r: usize,
}

impl Dims {
    pub fn new(n_a: usize, n_b: usize, n_r: usize) -> Result<Self, ChannelError> {
        if n_a < 1 || n_b < 1 || n_r < 1 {
            return Err(ChannelError::InvalidDims);
        }
        Ok(Dims { n_a, n_b, n_r })
    }
}

/// All six channel matrices. Noise power is normalized to 1, so the
/// power budgets elsewhere are SNR-like linear quantities.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub dims: Dims,
    /// A -> R, N_R x N_A
    pub h_a: CMatrix,
    /// B -> R, N_R x N_B
    pub h_b: CMatrix,
    /// R -> A, N_A x N_R
    pub g_a: CMatrix,
    /// R -> B, N_B x N_R
    pub g_b: CMatrix,
    /// A -> B, N_B x N_A
    pub t_a: CMatrix,
    /// B -> A, N_A x N_B
    pub t_b: CMatrix,
    pub reciprocal: bool,
}

/// Per-node transmit power limits, linear scale.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PowerBudget {
    pub p_a: f64,
    pub p_b: f64,
    pub p_r: f64,
}

impl PowerBudget {
    pub fn new(p_a: f64, p_b: f64, p_r: f64) -> Self {
        assert!(p_a >= 0.0 && p_b >= 0.0 && p_r >= 0.0);
        PowerBudget { p_a, p_b, p_r }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

fn sample_matrix(rng: &mut ChaCha12Rng, rows: usize, cols: usize) -> CMatrix {
    let scale = 0.5f64.sqrt();
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        cx(re * scale, im * scale)
    })
}

/// Draws a channel set with i.i.d. CN(0, 1) entries, deterministic per seed.
pub fn sample_channels(dims: Dims, seed: u64, reciprocal: bool) -> ChannelSet {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let h_a = sample_matrix(&mut rng, dims.n_r, dims.n_a);
    let h_b = sample_matrix(&mut rng, dims.n_r, dims.n_b);
    let t_a = sample_matrix(&mut rng, dims.n_b, dims.n_a);
    let (g_a, g_b, t_b) = if reciprocal {
        (h_a.transpose(), h_b.transpose(), t_a.transpose())
    } else {
        (
            sample_matrix(&mut rng, dims.n_a, dims.n_r),
            sample_matrix(&mut rng, dims.n_b, dims.n_r),
            sample_matrix(&mut rng, dims.n_a, dims.n_b),
        )
    };
    ChannelSet {
        dims,
        h_a,
        h_b,
        g_a,
        g_b,
        t_a,
        t_b,
        reciprocal,
    }
}

#[rustfmt::skip]
fn fixture_h_a() -> CMatrix {
    CMatrix::from_row_slice(5, 3, &[
        cx(0.2686, -0.0965), cx(0.1305, -1.2373), cx(0.6027, 0.8313),
        cx(0.9510, 0.8678), cx(-0.4450, 0.2224), cx(-0.4630, 0.3531),
        cx(0.4050, -0.7642), cx(-0.6673, -0.7447), cx(-0.0039, 1.0646),
        cx(-0.9971, 0.2578), cx(-1.5888, -0.9503), cx(-0.4514, -0.2944),
        cx(-1.1448, 0.1069), cx(-0.5209, -0.0569), cx(0.1598, 0.0048),
    ])
}

#[rustfmt::skip]
fn fixture_h_b() -> CMatrix {
    CMatrix::from_row_slice(5, 3, &[
        cx(0.3612, 0.7099), cx(-0.0464, -1.1249), cx(0.6175, -1.6643),
        cx(0.6236, -0.3490), cx(0.2193, 0.8722), cx(-0.8481, -0.1791),
        cx(-0.4814, -0.3466), cx(0.2838, 0.3014), cx(-0.3683, 1.6906),
        cx(-0.2929, 1.5306), cx(-0.2643, 0.8701), cx(-1.6770, 0.0192),
        cx(-0.0722, 0.1413), cx(0.1504, 0.9271), cx(0.9011, -0.3934),
    ])
}

#[rustfmt::skip]
fn fixture_t_a() -> CMatrix {
    CMatrix::from_row_slice(3, 3, &[
        cx(0.0538, 1.3647), cx(1.1100, -0.5711), cx(-0.5226, -0.0653),
        cx(0.9241, -0.9370), cx(-0.5684, -1.1719), cx(-0.3993, -0.6427),
        cx(-0.0592, -1.2997), cx(-0.9250, 0.1194), cx(0.1469, 0.4010),
    ])
}

/// The fixed benchmark channel realization, sliced to `dims` by taking the
/// upper-left block of each stored matrix. Reverse links by reciprocity.
pub fn paper_fixture(dims: Dims) -> Result<ChannelSet, ChannelError> {
    if dims.n_a > 3 || dims.n_b > 3 || dims.n_r > 5 {
        return Err(ChannelError::FixtureTooLarge(dims.n_a, dims.n_b, dims.n_r));
    }
    let h_a = fixture_h_a().view((0, 0), (dims.n_r, dims.n_a)).into_owned();
    let h_b = fixture_h_b().view((0, 0), (dims.n_r, dims.n_b)).into_owned();
    let t_a = fixture_t_a().view((0, 0), (dims.n_b, dims.n_a)).into_owned();
    Ok(ChannelSet {
        dims,
        g_a: h_a.transpose(),
        g_b: h_b.transpose(),
        t_b: t_a.transpose(),
        h_a,
        h_b,
        t_a,
        reciprocal: true,
    })
}

// ---- serialization -------------------------------------------------------

type MatRows = Vec<Vec<[f64; 2]>>;

#[derive(Serialize, Deserialize)]
struct ChannelFile {
    dims: Dims,
    reciprocal: bool,
    h_a: MatRows,
    h_b: MatRows,
    g_a: MatRows,
    g_b: MatRows,
    t_a: MatRows,
    t_b: MatRows,
}

fn mat_to_rows(m: &CMatrix) -> MatRows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn rows_to_mat(
    rows: &MatRows,
    exp_rows: usize,
    exp_cols: usize,
    field: &'static str,
) -> Result<CMatrix, ChannelError> {
    if rows.len() != exp_rows || rows.iter().any(|r| r.len() != exp_cols) {
        return Err(ChannelError::Inconsistent {
            field,
            rows: exp_rows,
            cols: exp_cols,
        });
    }
    Ok(CMatrix::from_fn(exp_rows, exp_cols, |i, j| {
        cx(rows[i][j][0], rows[i][j][1])
    }))
}

pub fn save_channels(set: &ChannelSet, path: &Path) -> Result<(), ChannelError> {
    let file = ChannelFile {
        dims: set.dims,
        reciprocal: set.reciprocal,
        h_a: mat_to_rows(&set.h_a),
        h_b: mat_to_rows(&set.h_b),
        g_a: mat_to_rows(&set.g_a),
        g_b: mat_to_rows(&set.g_b),
        t_a: mat_to_rows(&set.t_a),
        t_b: mat_to_rows(&set.t_b),
    };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

pub fn load_channels(path: &Path) -> Result<ChannelSet, ChannelError> {
    let raw = std::fs::read_to_string(path)?;
    let file: ChannelFile = serde_json::from_str(&raw)?;
    let d = file.dims;
    if d.n_a < 1 || d.n_b < 1 || d.n_r < 1 {
        return Err(ChannelError::InvalidDims);
    }
    Ok(ChannelSet {
        dims: d,
        h_a: rows_to_mat(&file.h_a, d.n_r, d.n_a, "h_a")?,
        h_b: rows_to_mat(&file.h_b, d.n_r, d.n_b, "h_b")?,
        g_a: rows_to_mat(&file.g_a, d.n_a, d.n_r, "g_a")?,
        g_b: rows_to_mat(&file.g_b, d.n_b, d.n_r, "g_b")?,
        t_a: rows_to_mat(&file.t_a, d.n_b, d.n_a, "t_a")?,
        t_b: rows_to_mat(&file.t_b, d.n_a, d.n_b, "t_b")?,
        reciprocal: file.reciprocal,
    })
}
